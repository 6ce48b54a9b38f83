//! Minimal plain-text netpbm support: P1 bitmaps for the synthetic digit
//! glyphs and P2 graymaps for heatmap/trace renders. Only what the engine
//! needs; no maxval > 255, no binary variants.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("expected magic {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("expected {expected} pixels, found {found}")]
    PixelCount { expected: usize, found: usize },
    #[error("unexpected character {0:?} in pixel data")]
    BadPixel(char),
}

/// Parse a plain (P1) bitmap. Returns `(width, height, bits)` with bits in
/// row-major order, one byte per pixel in {0,1}. Comments (`#` to end of
/// line) are allowed anywhere whitespace is; pixel digits may be packed.
pub fn parse_pbm(text: &str) -> Result<(usize, usize, Vec<u8>), PnmError> {
    let mut tokens = tokenize(text);
    let magic = tokens
        .next()
        .ok_or_else(|| PnmError::BadHeader("empty file".into()))?;
    if magic != "P1" {
        return Err(PnmError::BadMagic {
            expected: "P1".into(),
            found: magic,
        });
    }
    let width = parse_dim(tokens.next())?;
    let height = parse_dim(tokens.next())?;
    let mut bits = Vec::with_capacity(width * height);
    for tok in tokens {
        for ch in tok.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => return Err(PnmError::BadPixel(other)),
            }
        }
    }
    if bits.len() != width * height {
        return Err(PnmError::PixelCount {
            expected: width * height,
            found: bits.len(),
        });
    }
    Ok((width, height, bits))
}

/// Render a P1 bitmap with packed rows, matching the checked-in golden files
/// byte for byte.
pub fn write_pbm(width: usize, height: usize, bits: &[u8]) -> String {
    assert_eq!(bits.len(), width * height, "pixel count mismatch");
    let mut out = String::with_capacity(bits.len() + height + 16);
    out.push_str("P1\n");
    out.push_str(&format!("{width} {height}\n"));
    for row in bits.chunks(width) {
        for &b in row {
            out.push(if b != 0 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// Render a P2 graymap (maxval 255), one space-separated row per line.
pub fn write_pgm(width: usize, height: usize, pixels: &[u8]) -> String {
    assert_eq!(pixels.len(), width * height, "pixel count mismatch");
    let mut out = String::with_capacity(pixels.len() * 4 + 32);
    out.push_str("P2\n");
    out.push_str(&format!("{width} {height}\n255\n"));
    for row in pixels.chunks(width) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn parse_dim(tok: Option<String>) -> Result<usize, PnmError> {
    let tok = tok.ok_or_else(|| PnmError::BadHeader("missing dimension".into()))?;
    tok.parse()
        .map_err(|_| PnmError::BadHeader(format!("bad dimension {tok:?}")))
}

/// Whitespace-separated tokens with `#` comments stripped.
fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines()
        .map(|line| match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        })
        .flat_map(|line| line.split_whitespace())
        .map(str::to_owned)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_round_trip() {
        let bits = vec![0, 1, 1, 0, 0, 1];
        let text = write_pbm(3, 2, &bits);
        let (w, h, parsed) = parse_pbm(&text).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(parsed, bits);
    }

    #[test]
    fn pbm_accepts_comments_and_spacing() {
        let text = "P1\n# a comment\n2 2\n1 0\n0 1\n";
        let (w, h, bits) = parse_pbm(text).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(bits, vec![1, 0, 0, 1]);
    }

    #[test]
    fn pbm_rejects_bad_magic_and_counts() {
        assert!(matches!(
            parse_pbm("P2\n1 1\n0\n"),
            Err(PnmError::BadMagic { .. })
        ));
        assert!(matches!(
            parse_pbm("P1\n2 2\n101\n"),
            Err(PnmError::PixelCount { .. })
        ));
        assert!(matches!(
            parse_pbm("P1\n1 1\nx\n"),
            Err(PnmError::BadPixel('x'))
        ));
    }

    #[test]
    fn pgm_layout() {
        let text = write_pgm(2, 2, &[0, 128, 255, 7]);
        assert_eq!(text, "P2\n2 2\n255\n0 128\n255 7\n");
    }
}

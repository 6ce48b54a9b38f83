//! Digit datasets: IDX file parsing, binarization, the per-class training
//! subset, and the built-in synthetic digit set.
//!
//! IDX files use big-endian 32-bit header fields (magic, count, then rows and
//! cols for images) followed by raw unsigned bytes. Magic numbers are
//! validated strictly so corrupt downloads fail fast.

use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pnm;

/// IDX3 magic for unsigned-byte image files.
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// IDX1 magic for unsigned-byte label files.
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Grayscale threshold: pixels strictly above this become 1.
pub const DEFAULT_THRESHOLD: u8 = 127;

/// Images per class in the standard training subset.
pub const DEFAULT_PER_CLASS: usize = 100;

/// Side length of the digit grid.
pub const IMAGE_SIDE: usize = 28;
const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

pub const MNIST_TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const MNIST_TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const MNIST_TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("bad IDX magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("IDX length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: u64 },
    #[error("label {value} at index {index} is outside classes 0-9")]
    LabelOutOfRange { index: usize, value: u8 },
    #[error("class {class}: only {available} images available, need {needed}")]
    NotEnoughImages {
        class: u8,
        available: usize,
        needed: usize,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("expected 28x28 images, found {rows}x{cols}")]
    BadDimensions { rows: usize, cols: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A raw grayscale image as stored in an IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count mismatch");
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// A binarized 28x28 image. Rows are stored as 28-bit masks (bit `x` of
/// `row(y)` is the pixel at column `x`), with a transposed copy kept so both
/// horizontal and vertical raycasts are O(1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    rows: [u32; IMAGE_SIDE],
    cols: [u32; IMAGE_SIDE],
}

impl BinaryImage {
    /// Build from 784 row-major bits, each 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        assert_eq!(bits.len(), IMAGE_PIXELS, "expected 784 bits");
        let mut rows = [0u32; IMAGE_SIDE];
        let mut cols = [0u32; IMAGE_SIDE];
        for (i, &b) in bits.iter().enumerate() {
            assert!(b <= 1, "bit {i} is {b}, expected 0 or 1");
            if b == 1 {
                let (x, y) = (i % IMAGE_SIDE, i / IMAGE_SIDE);
                rows[y] |= 1 << x;
                cols[x] |= 1 << y;
            }
        }
        Self { rows, cols }
    }

    pub fn bit(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < IMAGE_SIDE && y < IMAGE_SIDE);
        self.rows[y] >> x & 1 == 1
    }

    /// 28-bit mask of row `y`.
    pub fn row(&self, y: usize) -> u32 {
        self.rows[y]
    }

    /// 28-bit mask of column `x` (bit `y` is the pixel at row `y`).
    pub fn col(&self, x: usize) -> u32 {
        self.cols[x]
    }

    pub fn count_ones(&self) -> u32 {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }

    /// Row-major bits, one byte per pixel.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = Vec::with_capacity(IMAGE_PIXELS);
        for y in 0..IMAGE_SIDE {
            for x in 0..IMAGE_SIDE {
                bits.push(self.bit(x, y) as u8);
            }
        }
        bits
    }
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage({} active)", self.count_ones())?;
        for y in 0..IMAGE_SIDE {
            for x in 0..IMAGE_SIDE {
                f.write_str(if self.bit(x, y) { "#" } else { "." })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

/// A labeled split of binarized images.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<BinaryImage>,
    labels: Vec<u8>,
    split_name: String,
}

impl Dataset {
    pub fn new(
        images: Vec<BinaryImage>,
        labels: Vec<u8>,
        split_name: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        if images.len() != labels.len() {
            return Err(DatasetError::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
            return Err(DatasetError::LabelOutOfRange { index, value });
        }
        Ok(Self {
            images,
            labels,
            split_name: split_name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[BinaryImage] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn split_name(&self) -> &str {
        &self.split_name
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BinaryImage, u8)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> [usize; 10] {
        let mut counts = [0usize; 10];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

fn be_u32(stream: &[u8], at: usize) -> Result<u32, DatasetError> {
    stream
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or(DatasetError::LengthMismatch {
            expected: (at + 4) as u64,
            found: stream.len() as u64,
        })
}

/// Parse a complete IDX3 image file.
pub fn parse_idx_images(stream: &[u8]) -> Result<Vec<GrayImage>, DatasetError> {
    let magic = be_u32(stream, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DatasetError::BadMagic {
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(stream, 4)? as usize;
    let rows = be_u32(stream, 8)? as usize;
    let cols = be_u32(stream, 12)? as usize;
    let expected = 16 + (count as u64) * (rows as u64) * (cols as u64);
    if stream.len() as u64 != expected {
        return Err(DatasetError::LengthMismatch {
            expected,
            found: stream.len() as u64,
        });
    }
    let image_len = rows * cols;
    let images = stream[16..]
        .chunks_exact(image_len.max(1))
        .take(count)
        .map(|chunk| GrayImage::new(cols, rows, chunk.to_vec()))
        .collect();
    Ok(images)
}

/// Parse a complete IDX1 label file; every label must be a digit class.
pub fn parse_idx_labels(stream: &[u8]) -> Result<Vec<u8>, DatasetError> {
    let magic = be_u32(stream, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DatasetError::BadMagic {
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(stream, 4)? as usize;
    let expected = 8 + count as u64;
    if stream.len() as u64 != expected {
        return Err(DatasetError::LengthMismatch {
            expected,
            found: stream.len() as u64,
        });
    }
    let labels = stream[8..].to_vec();
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
        return Err(DatasetError::LabelOutOfRange { index, value });
    }
    Ok(labels)
}

/// Serialize images back to IDX3 bytes. All images must be `rows` x `cols`.
pub fn encode_idx_images(rows: usize, cols: usize, images: &[GrayImage]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!((img.height, img.width), (rows, cols), "image size mismatch");
        out.extend_from_slice(&img.pixels);
    }
    out
}

/// Serialize labels back to IDX1 bytes.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Threshold a grayscale image: output bit is 1 iff the pixel is strictly
/// greater than `threshold`.
///
/// Panics if the image is not 28x28; IDX loads are dimension-checked before
/// reaching this point.
pub fn binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    assert_eq!(
        (img.width, img.height),
        (IMAGE_SIDE, IMAGE_SIDE),
        "binarize expects 28x28 input"
    );
    let bits: Vec<u8> = img.pixels.iter().map(|&p| (p > threshold) as u8).collect();
    BinaryImage::from_bits(&bits)
}

/// Take the first `per_class` images of each class, in file order, and return
/// them ordered by (class, original index). A class present in the input with
/// fewer than `per_class` images is an error; classes entirely absent are
/// skipped (so toy splits with a reduced class alphabet still select).
pub fn select_training_subset(
    images: &[BinaryImage],
    labels: &[u8],
    per_class: usize,
) -> Result<Dataset, DatasetError> {
    if images.len() != labels.len() {
        return Err(DatasetError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    let mut buckets: [Vec<usize>; 10] = Default::default();
    for (i, &label) in labels.iter().enumerate() {
        if label > 9 {
            return Err(DatasetError::LabelOutOfRange {
                index: i,
                value: label,
            });
        }
        let bucket = &mut buckets[label as usize];
        if bucket.len() < per_class {
            bucket.push(i);
        }
    }
    let mut subset_images = Vec::with_capacity(10 * per_class);
    let mut subset_labels = Vec::with_capacity(10 * per_class);
    for (class, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            continue;
        }
        if bucket.len() < per_class {
            return Err(DatasetError::NotEnoughImages {
                class: class as u8,
                available: bucket.len(),
                needed: per_class,
            });
        }
        for &i in bucket {
            subset_images.push(images[i].clone());
            subset_labels.push(class as u8);
        }
    }
    Dataset::new(subset_images, subset_labels, "train-subset")
}

const SYNTHETIC_PBMS: [&str; 10] = [
    include_str!("../data/synthetic/digit_0.pbm"),
    include_str!("../data/synthetic/digit_1.pbm"),
    include_str!("../data/synthetic/digit_2.pbm"),
    include_str!("../data/synthetic/digit_3.pbm"),
    include_str!("../data/synthetic/digit_4.pbm"),
    include_str!("../data/synthetic/digit_5.pbm"),
    include_str!("../data/synthetic/digit_6.pbm"),
    include_str!("../data/synthetic/digit_7.pbm"),
    include_str!("../data/synthetic/digit_8.pbm"),
    include_str!("../data/synthetic/digit_9.pbm"),
];

/// The golden P1 text for one synthetic digit, exactly as checked in.
pub fn synthetic_digit_pbm(class: u8) -> &'static str {
    SYNTHETIC_PBMS[class as usize]
}

/// Ten deterministic, noise-free block digits (one per class, 3-pixel
/// strokes, centered). The bit patterns are fixed golden files; calling this
/// twice yields bit-identical datasets.
pub fn synthetic_digits() -> Dataset {
    let mut images = Vec::with_capacity(10);
    for (class, text) in SYNTHETIC_PBMS.iter().enumerate() {
        let (w, h, bits) = pnm::parse_pbm(text)
            .unwrap_or_else(|e| panic!("golden digit {class} is malformed: {e}"));
        assert_eq!((w, h), (IMAGE_SIDE, IMAGE_SIDE));
        images.push(BinaryImage::from_bits(&bits));
    }
    Dataset::new(images, (0..10).collect(), "synthetic").expect("synthetic set is well formed")
}

fn read_file(path: &Path) -> Result<Vec<u8>, DatasetError> {
    std::fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a file, transparently gunzipping if it carries the gzip magic.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>, DatasetError> {
    let raw = read_file(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|source| DatasetError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Locate `name` or `name.gz` under `dir`.
fn find_idx_file(dir: &Path, name: &str) -> Result<PathBuf, DatasetError> {
    let plain = dir.join(name);
    if plain.exists() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    Err(DatasetError::Io {
        path: plain,
        source: std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "no such file (also tried .gz)",
        ),
    })
}

fn load_split(
    dir: &Path,
    images_name: &str,
    labels_name: &str,
    threshold: u8,
) -> Result<(Vec<BinaryImage>, Vec<u8>), DatasetError> {
    let images_raw = read_maybe_gzip(&find_idx_file(dir, images_name)?)?;
    let labels_raw = read_maybe_gzip(&find_idx_file(dir, labels_name)?)?;
    let gray = parse_idx_images(&images_raw)?;
    let labels = parse_idx_labels(&labels_raw)?;
    if gray.len() != labels.len() {
        return Err(DatasetError::CountMismatch {
            images: gray.len(),
            labels: labels.len(),
        });
    }
    if let Some(img) = gray
        .iter()
        .find(|img| (img.width, img.height) != (IMAGE_SIDE, IMAGE_SIDE))
    {
        return Err(DatasetError::BadDimensions {
            rows: img.height,
            cols: img.width,
        });
    }
    let images = gray.iter().map(|img| binarize(img, threshold)).collect();
    Ok((images, labels))
}

/// Load and binarize the MNIST training split, then take the standard
/// per-class subset.
pub fn load_mnist_training_subset(
    dir: &Path,
    per_class: usize,
    threshold: u8,
) -> Result<Dataset, DatasetError> {
    let (images, labels) = load_split(dir, MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS, threshold)?;
    select_training_subset(&images, &labels, per_class)
}

/// Load and binarize the full MNIST test split.
pub fn load_mnist_test(dir: &Path, threshold: u8) -> Result<Dataset, DatasetError> {
    let (images, labels) = load_split(dir, MNIST_TEST_IMAGES, MNIST_TEST_LABELS, threshold)?;
    Dataset::new(images, labels, "test")
}

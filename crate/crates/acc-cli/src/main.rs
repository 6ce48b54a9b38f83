fn main() {
    std::process::exit(acc_cli::dispatch(std::env::args_os()));
}

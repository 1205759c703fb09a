fn main() {
    std::process::exit(booldr_core::cli::dispatch(std::env::args_os()));
}

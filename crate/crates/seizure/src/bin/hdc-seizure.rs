fn main() {
    std::process::exit(hdc_seizure::cli::main_with(std::env::args_os()));
}

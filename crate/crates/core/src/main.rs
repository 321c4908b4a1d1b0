fn main() {
    std::process::exit(aoi_core::cli::main_entry());
}

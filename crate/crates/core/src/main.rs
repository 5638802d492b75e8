fn main() {
    std::process::exit(beamguard::cli::main());
}

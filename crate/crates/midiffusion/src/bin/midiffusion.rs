fn main() {
    std::process::exit(midiffusion::cli::main());
}

fn main() {
    std::process::exit(dynclust::cli::main());
}

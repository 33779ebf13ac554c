fn main() {
    std::process::exit(classroom_sim::cli::main());
}

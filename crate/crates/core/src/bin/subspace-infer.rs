fn main() {
    std::process::exit(subspace_infer::cli::main_exit_code());
}

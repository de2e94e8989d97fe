fn main() {
    std::process::exit(phi_attractor::cli::main_with_args(std::env::args_os()));
}

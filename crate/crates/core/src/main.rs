fn main() {
    std::process::exit(gtilde_control::cli::run_experiment(std::env::args_os()));
}

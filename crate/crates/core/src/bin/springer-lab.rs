fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPRINGER_LAB_LOG", "warn")).init();
    std::process::exit(springer_lab::cli::main_with_args(std::env::args_os()));
}

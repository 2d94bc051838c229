fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("STAND_LOG", "warn")).init();
    std::process::exit(grandstand::cli::args::main_with_args(std::env::args_os()));
}

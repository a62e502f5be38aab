fn main() {
    std::process::exit(boussinesq_cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(viscid::cli::run_command(std::env::args_os()));
}

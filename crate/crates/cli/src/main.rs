fn main() {
    std::process::exit(t2m_cli::run(std::env::args_os()));
}

fn main() {
    if let Err(e) = navsim_gateway::cli::run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

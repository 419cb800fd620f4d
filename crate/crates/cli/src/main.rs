fn main() {
    std::process::exit(cstar_cli::dispatch(std::env::args()));
}

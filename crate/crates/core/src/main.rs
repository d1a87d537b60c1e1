use std::process::exit;

fn main() {
    exit(smcregions::harness::cli::cli_main(std::env::args()));
}

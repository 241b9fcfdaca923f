use std::process;

fn main() {
    process::exit(irs_chanest::cli::run(std::env::args_os()));
}

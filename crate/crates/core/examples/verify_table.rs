//! Runs the fast rows of the verification table (pass `--all` for every row).
//!
//! cargo run --release --example verify_table -- --all

use krflab::verify::{self, VerifyOptions};

fn main() {
    let all = std::env::args().any(|a| a == "--all");
    let opts = VerifyOptions::default();
    let ids: Vec<u8> = if all { (1..=8).collect() } else { vec![1, 5, 6, 7, 8] };
    let results: Vec<_> = ids.into_iter().map(|id| verify::run_criterion(id, &opts)).collect();
    print!("{}", verify::format_table(&results));
}

//! Runs every acceptance criterion, printing one line each; fails if any does.

use spraysim::verify::{run_all, VerifyOptions};

fn main() {
    // The libtest flags cargo passes (e.g. --quiet) mean nothing here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let outcomes = run_all(&VerifyOptions::default());
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        outcomes.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

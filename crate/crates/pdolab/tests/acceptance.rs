//! Runs every acceptance criterion and prints one line per criterion.

use pdolab::acceptance::{report, run_suite, summary_line};

fn main() {
    let seed = std::env::var("PDOLAB_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let results = run_suite("all", seed).expect("suite registry");
    for r in &results {
        println!("{}", summary_line(r));
    }
    if let Ok(path) = std::env::var("PDOLAB_ACCEPTANCE_REPORT") {
        std::fs::write(&path, report(&results, seed).to_csv()).expect("write report");
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

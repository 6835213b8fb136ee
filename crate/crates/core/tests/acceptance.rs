//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Criteria run on separate threads; each builds its own exhaustive bundles.

use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use syncausal::verify::{criterion, table, CriterionReport, CRITERIA};

fn main() -> ExitCode {
    let start = Instant::now();
    let handles: Vec<_> =
        CRITERIA.iter().map(|&id| thread::spawn(move || (id, Instant::now(), criterion(id)))).collect();
    let mut reports: Vec<CriterionReport> = Vec::new();
    let mut failed = false;
    for h in handles {
        let (id, began, result) = h.join().expect("criterion thread panicked");
        match result {
            Ok(r) => {
                println!("{r} ({:.1}s)", began.elapsed().as_secs_f64());
                failed |= !r.passed();
                reports.push(r);
            }
            Err(e) => {
                println!("criterion {id} [FAIL] error: {e}");
                failed = true;
            }
        }
    }
    println!();
    print!("{}", table(&reports));
    println!("acceptance suite finished in {:.1}s", start.elapsed().as_secs_f64());
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

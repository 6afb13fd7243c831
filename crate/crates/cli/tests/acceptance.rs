use std::io::Write;

use magkit_cli::suites::{run_ids, SuiteOptions, ALL};

#[test]
fn acceptance() {
    let outcomes = run_ids(&ALL, &SuiteOptions::default());
    // bypass the harness capture so the report is always shown
    let mut out = std::io::stdout().lock();
    for o in &outcomes {
        writeln!(out, "{}", o.line()).unwrap();
    }
    out.flush().unwrap();
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

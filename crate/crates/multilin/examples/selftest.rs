//! Runs the full self-test suite and prints one line per check.

use multilin::selftest::{run_all, DEFAULT_SEED};

fn main() -> multilin::Result<()> {
    let groups = run_all(DEFAULT_SEED)?;
    for g in &groups {
        for c in &g.checks {
            println!("{}/{} {} {:.4e}", g.id, c.id, if c.pass() { "ok" } else { "FAIL" }, c.value);
        }
    }
    Ok(())
}

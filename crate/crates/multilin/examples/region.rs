//! Classifies smoothness tuples and tests membership in the hull of the sufficient regions.

use multilin::region::{check_sufficiency, gamma_membership, hull_membership, hull_weights, IndexTuple};

fn main() -> multilin::Result<()> {
    let cases = [
        ("2", ["1", "1"], ["3/5", "3/5"]),
        ("2", ["1", "1"], ["1", "1"]),
        ("3/2", ["2", "2"], ["1", "1"]),
        ("3", ["2", "2"], ["1", "1"]),
        ("2", ["1/2", "1/2"], ["3/4", "2"]),
    ];
    for (r, p, s) in cases {
        let idx = IndexTuple::parse(1, r, &p, &s)?;
        let v = check_sufficiency(&idx);
        println!("r={r} p={p:?} s={s:?}");
        println!("  {}", v.to_json());
        println!("  gamma={} hull={}", gamma_membership(&idx), hull_membership(&idx, 10.0)?);
        if let Some(w) = hull_weights(&idx, 10.0)? {
            println!("  hull weights {w:?}");
        }
    }
    Ok(())
}

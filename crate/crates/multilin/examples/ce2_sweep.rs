//! Diagonal-kernel construction: the operator ratio keeps growing with the box size.

use multilin::io::sweep_csv;
use multilin::sharpness::{build_ce2, ce2_sweep, Ce2Params};

fn main() -> multilin::Result<()> {
    let params = Ce2Params::default();
    let c = build_ce2(&params)?;
    println!("diagonal error at L={}: {:.3e}", params.size, c.diagonal_error()?);
    let records = ce2_sweep(&params, &[16.0, 32.0, 64.0], false)?;
    for r in &records {
        println!("L={:>4} functional={:.4} ratio={:.6}", r.n_or_l, r.l_functional, r.ratio);
    }
    print!("{}", sweep_csv(&records, 0, &params.grid.tag()));
    Ok(())
}

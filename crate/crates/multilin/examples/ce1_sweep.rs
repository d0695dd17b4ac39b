//! Truncated-kernel construction: the functional stays bounded while the operator ratio grows
//! with the truncation radius.

use multilin::io::sweep_csv;
use multilin::sharpness::{ce1_sweep, Ce1Params};

fn main() -> multilin::Result<()> {
    let params = Ce1Params::default();
    let records = ce1_sweep(&params, &[16, 32, 64], &[1.0 / 128.0], false)?;
    for r in &records {
        println!("N={:>4} functional={:.4} ratio={:.6}", r.n_or_l, r.l_functional, r.ratio);
    }
    print!("{}", sweep_csv(&records, 0, &params.grid.tag()));
    Ok(())
}

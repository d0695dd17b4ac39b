//! Samples a Gaussian on a periodic box, transforms it and compares with the exact transform.

use std::f64::consts::PI;

use multilin::grid::{forward_ft, inverse_ft, lp_norm, sample_real, Grid};

fn main() -> multilin::Result<()> {
    let g = Grid::new(1, 512, 32.0)?;
    let f = sample_real(g, |x| (-PI * x[0] * x[0]).exp())?;
    let fh = forward_ft(&f)?;
    let mut err: f64 = 0.0;
    let mut xi = [0.0];
    for (k, v) in fh.values().iter().enumerate() {
        fh.point(k, &mut xi);
        err = err.max((v.re - (-PI * xi[0] * xi[0]).exp()).abs());
    }
    println!("grid: P={} L={} dx={} dxi={}", g.points(), g.box_length(), g.spacing(), g.freq_step());
    println!("max |F(gauss) - gauss| = {err:.3e}");
    let back = inverse_ft(&fh)?;
    let round = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("roundtrip error = {round:.3e}");
    for p in [1.0, 2.0, f64::INFINITY] {
        println!("||gauss||_{p} = {:.12}", lp_norm(&f, p)?);
    }
    Ok(())
}

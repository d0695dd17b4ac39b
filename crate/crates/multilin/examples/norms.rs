//! Sobolev, Hardy, square-function and BMO norms of a few test signals.

use std::f64::consts::PI;

use multilin::grid::{sample_real, Grid};
use multilin::norms::{bmo_seminorm, hardy_norm, product_sobolev_norm, square_function_norm, standard_sobolev_norm};

fn main() -> multilin::Result<()> {
    let g = Grid::new(1, 2048, 64.0)?;
    let gauss = sample_real(g, |x| (-PI * x[0] * x[0]).exp())?;
    for s in [0.0, 0.5, 1.0, 2.0] {
        println!("||gauss||_(H^{s}) = {:.8}", standard_sobolev_norm(&gauss, 2.0, s)?);
    }

    let h = hardy_norm(&gauss, 1.0)?;
    println!("{}", h.csv_row("hardy_1"));
    let odd = sample_real(g, |x| x[0] * (-PI * x[0] * x[0]).exp())?;
    println!("square function L^2 norm of x gauss = {:.8}", square_function_norm(&odd, 2.0)?);
    println!("BMO seminorm of the Gaussian = {:.6}", bmo_seminorm(&gauss)?);

    let g2 = Grid::new(2, 128, 16.0)?;
    let pair = sample_real(g2, |x| (-PI * (x[0] * x[0] + x[1] * x[1])).exp())?;
    println!("product Sobolev (1, 1) = {:.8}", product_sobolev_norm(&pair, 2, 2.0, &[1.0, 1.0])?);
    Ok(())
}

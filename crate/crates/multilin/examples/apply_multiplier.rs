//! Applies bilinear multipliers: the constant symbol gives the pointwise product and a
//! symmetric Gaussian symbol smooths it.

use std::f64::consts::PI;

use multilin::grid::{sample_real, Grid, Symbol};
use multilin::multiplier_op::{apply_multiplier, apply_multiplier_counted};
use num_complex::Complex64;

fn main() -> multilin::Result<()> {
    let g = Grid::new(1, 256, 16.0)?;
    let f1 = sample_real(g, |x| (-PI * x[0] * x[0]).exp())?;
    let f2 = sample_real(g, |x| (2.0 * PI * x[0]).cos())?;

    let one = Symbol::from_fn(g, 2, &[0.0, 0.0], |_| Complex64::new(1.0, 0.0))?;
    let prod = apply_multiplier(&one, &[f1.clone(), f2.clone()])?;
    let err = prod
        .values()
        .iter()
        .zip(f1.values().iter().zip(f2.values()))
        .map(|(t, (a, b))| (t - a * b).norm())
        .fold(0.0, f64::max);
    println!("constant symbol vs pointwise product: {err:.3e}");

    let smooth = Symbol::from_fn(g, 2, &[0.0, 0.0], |xi| Complex64::new((-(xi[0] * xi[0] + xi[1] * xi[1])).exp(), 0.0))?;
    let app = apply_multiplier_counted(&smooth, &[f1, f2])?;
    println!("gaussian symbol: max |T(f1, f2)| = {:.6}, wrapped terms {}", app.output.max_abs(), app.wrapped_terms);
    Ok(())
}

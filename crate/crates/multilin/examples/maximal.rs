//! Compares Hardy-Littlewood and Peetre maximal functions of an oscillating signal.

use multilin::grid::{sample_real, Grid};
use multilin::norms::{composition_constant, domination_constant, hl_maximal, peetre_maximal};

fn main() -> multilin::Result<()> {
    let g = Grid::new(1, 1024, 64.0)?;
    let f = sample_real(g, |x| (x[0] * 1.3).sin() / (1.0 + x[0] * x[0]))?;
    let hl = hl_maximal(&f, 1.0)?;
    let pe = peetre_maximal(&f, 2.0, 0, 1.0)?;
    println!("max |f| = {:.6}, max M f = {:.6}, max peetre = {:.6}", f.max_abs(), hl.max_abs(), pe.max_abs());
    for j in [-2, -1, 0, 1] {
        println!(
            "j={j:>2} domination {:.4} composition {:.4}",
            domination_constant(&f, 2.0, j, 1.0)?,
            composition_constant(&f, 2.0, j, 1.0, 1.5)?
        );
    }
    Ok(())
}

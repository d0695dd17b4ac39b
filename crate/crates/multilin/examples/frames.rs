//! Splits a band-limited signal into dyadic Littlewood-Paley pieces.

use multilin::grid::{lp_norm, sample_real, Grid};
use multilin::lp_frames::{build_cutoff, frame_convolve, FrameFamily, ScaleWindow};

fn main() -> multilin::Result<()> {
    let chi = build_cutoff(1.0, 2.0)?;
    for r in [0.5, 1.25, 1.5, 1.75, 2.5] {
        println!("chi1({r}) = {:.6}", chi.eval(r));
    }

    let g = Grid::new(1, 2048, 64.0)?;
    let f = sample_real(g, |x| (2.0 * std::f64::consts::PI * 3.0 * x[0]).cos() * (-x[0] * x[0] / 50.0).exp())?;
    let psi = FrameFamily::psi();
    let w = ScaleWindow::resolvable(&g)?;
    println!("scales {}..={}", w.j_min, w.j_max);
    for j in w.iter() {
        let piece = frame_convolve(&psi, j, &f)?;
        println!("j={j:>3} ||psi_j * f||_2 = {:.6e}", lp_norm(&piece, 2.0)?);
    }
    Ok(())
}

//! Evaluates the logarithmic Bessel-type kernel, its integrability verdicts and the
//! small-frequency behaviour of its transform.

use multilin::grid::Grid;
use multilin::kernels::{
    h_hat_asymptotics_check, h_kernel_eval, h_lp_finiteness_witness, submultiplicative_constant,
    submultiplicativity_scan, HKernelParams,
};

fn main() -> multilin::Result<()> {
    let p = HKernelParams::new(0.5, 2.0, 1)?;
    for x in [0.0, 0.1, 1.0, 10.0] {
        println!("H({x}) = {:.6e}", h_kernel_eval(&[x], &p));
    }

    for q in [1.5, 2.0, 3.0] {
        let w = h_lp_finiteness_witness(&p, q)?;
        println!("L^{q}: analytic {:?}, numeric {:?}, shell ratio {:.4}", w.analytic, w.numeric, w.shell_ratio);
    }

    let q = HKernelParams::new(1.0, 0.1, 1)?;
    let (x, y) = (0.5, -0.05);
    println!(
        "t=1, gamma=0.1: H(x-y) = {:.6}, H(x)H(y) = {:.6}, c H(x)H(y) = {:.6}",
        h_kernel_eval(&[x - y], &q),
        h_kernel_eval(&[x], &q) * h_kernel_eval(&[y], &q),
        submultiplicative_constant(&q) * h_kernel_eval(&[x], &q) * h_kernel_eval(&[y], &q)
    );
    println!("random scan with the constant c: {} violations", submultiplicativity_scan(20_000, 7, true)?.len());

    let rep = h_hat_asymptotics_check(&p, Grid::new(1, 1 << 14, 256.0)?)?;
    println!("small-frequency ratio in [{:.4}, {:.4}]", rep.ratio_min, rep.ratio_max);
    println!("tail constant {:.4}", rep.tail_constant);
    Ok(())
}

//! The logarithmically damped Bessel-type kernel `H_(t,gamma)`, the Japanese bracket, and
//! numerical witnesses for the kernel's integrability and Fourier-side laws.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{forward_ft, sample_real, Field, Grid};

/// Parameters of `H_(t,gamma)(x) = <x>^(-t) (1 + ln<x>^2)^(-gamma/2)` on `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HKernelParams {
    pub t: f64,
    pub gamma: f64,
    pub n: usize,
}

impl HKernelParams {
    pub fn new(t: f64, gamma: f64, n: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) || n == 0 {
            return invalid(format!("kernel needs t > 0, gamma > 0, n >= 1; got t={t}, gamma={gamma}, n={n}"));
        }
        Ok(Self { t, gamma, n })
    }
}

/// `<x> = (1 + 4 pi^2 |x|^2)^(1/2)`.
pub fn bracket(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (1.0 + 4.0 * PI * PI * r2).sqrt()
}

/// Radial profile of `H_(t,gamma)` at radius `rho`.
pub fn h_radial(rho: f64, t: f64, gamma: f64) -> f64 {
    let a = (4.0 * PI * PI * rho * rho).ln_1p();
    (-0.5 * t * a).exp() * (1.0 + a).powf(-0.5 * gamma)
}

/// `H_(t,gamma)(x)`.
pub fn h_kernel_eval(x: &[f64], p: &HKernelParams) -> f64 {
    let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    h_radial(rho, p.t, p.gamma)
}

/// `c = 2^(-t/2) (1 + ln 2)^(-gamma/2)`, for which `H(x - y) >= c H(x) H(y)` holds at every
/// pair. With `c = 1` the inequality fails when `x` and `y` point apart and
/// `4 pi^2 |x| |y| < 2`, e.g. `x = 0.5`, `y = -0.05`, `t = 1`, `gamma = 0.1`.
pub fn submultiplicative_constant(p: &HKernelParams) -> f64 {
    (-0.5 * p.t).exp2() * (1.0 + std::f64::consts::LN_2).powf(-0.5 * p.gamma)
}

/// A sampled pair and parameters at which `H(x - y) < c H(x) H(y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmultiplicativeViolation {
    pub params: HKernelParams,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `c H(x) H(y) / H(x - y) - 1`.
    pub excess: f64,
}

/// Samples `t in (0.1, 3)`, `gamma in (0.1, 4)`, `n in 1..=3` and `x, y in [-50, 50]^n`, and
/// collects the pairs violating `H(x - y) >= c H(x) H(y)` by more than four ulps, with `c = 1`
/// or with [`submultiplicative_constant`].
pub fn submultiplicativity_scan(samples: usize, seed: u64, with_constant: bool) -> Result<Vec<SubmultiplicativeViolation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..samples {
        let n = rng.gen_range(1..=3);
        let params = HKernelParams::new(rng.gen_range(0.1..3.0), rng.gen_range(0.1..4.0), n)?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let c = if with_constant { submultiplicative_constant(&params) } else { 1.0 };
        let rhs = c * h_kernel_eval(&x, &params) * h_kernel_eval(&y, &params);
        let lhs = h_kernel_eval(&d, &params);
        if rhs > lhs * (1.0 + 4.0 * f64::EPSILON) {
            out.push(SubmultiplicativeViolation { params, x, y, excess: rhs / lhs - 1.0 });
        }
    }
    Ok(out)
}

/// Samples `H_(t,gamma)` on a grid with `p.n` axes.
pub fn sample_h_kernel(grid: Grid, p: &HKernelParams) -> Result<Field> {
    if grid.dims() != p.n {
        return invalid(format!("grid has {} axes, kernel lives in dimension {}", grid.dims(), p.n));
    }
    sample_real(grid, |x| h_kernel_eval(x, p))
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * PI.powf(h) / gamma_fn(h)
}

fn gamma_fn(h: f64) -> f64 {
    if (h - h.round()).abs() < 1e-12 {
        (1..h.round() as u64).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < h - 1e-12 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Integrability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Finiteness {
    Finite,
    Infinite,
}

/// Truncated `L^p` mass of the kernel inside the ball of the given radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellMass {
    pub radius: f64,
    pub mass: f64,
}

/// Analytic verdict with the numeric evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinitenessWitness {
    pub analytic: Finiteness,
    /// `None` when the trend is inconclusive at the sampled radii.
    pub numeric: Option<Finiteness>,
    pub masses: Vec<ShellMass>,
    /// Ratio of the last two dyadic shell masses.
    pub shell_ratio: f64,
    /// Exponent `a` in a fit `shell ~ (1 + 2 ln(2 pi rho))^(-a)` of the last shells.
    pub log_exponent: f64,
    /// Upper bound for the mass beyond the last radius (finite verdicts only).
    pub tail_bound: Option<f64>,
    pub warning: Option<String>,
}

const SHELLS: usize = 20;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Decides whether `H_(t,gamma)` lies in `L^p(R^n)`: finite iff `t > n/p`, or `t = n/p` and
/// `gamma > 2/p`. Also returns truncated ball masses over radii `2^k`, `k = 0..=20`.
pub fn h_lp_finiteness_witness(params: &HKernelParams, p: f64) -> Result<FinitenessWitness> {
    if !(p > 0.0 && p.is_finite()) {
        return invalid(format!("p must be positive and finite, got {p}"));
    }
    let n = params.n as f64;
    let (t, gamma) = (params.t, params.gamma);
    let crit = n / p;
    let analytic = if t > crit + 1e-12 || ((t - crit).abs() <= 1e-12 && gamma > 2.0 / p) {
        Finiteness::Finite
    } else {
        Finiteness::Infinite
    };
    let omega = sphere_area(params.n);
    let radial = |rho: f64| h_radial(rho, t, gamma).powf(p) * rho.powf(n - 1.0);
    let core = omega * simpson(radial, 0.0, 1.0, 512);
    let mut masses = vec![ShellMass { radius: 1.0, mass: core }];
    let mut shells = Vec::with_capacity(SHELLS);
    let mut total = core;
    for k in 0..SHELLS {
        let (a, b) = ((k as f64).exp2().ln(), ((k + 1) as f64).exp2().ln());
        let shell = omega * simpson(|u| h_radial(u.exp(), t, gamma).powf(p) * (n * u).exp(), a, b, 64);
        total += shell;
        shells.push(shell);
        masses.push(ShellMass { radius: ((k + 1) as f64).exp2(), mass: total });
    }
    let (s1, s2) = (shells[SHELLS - 2], shells[SHELLS - 1]);
    let shell_ratio = s2 / s1;
    let ell = |k: usize| 1.0 + 2.0 * (2.0 * PI * (k as f64 + 0.5).exp2()).ln();
    let log_exponent = (s1 / s2).ln() / (ell(SHELLS - 1) / ell(SHELLS - 2)).ln();
    let numeric = if shell_ratio >= 0.999 {
        Some(Finiteness::Infinite)
    } else if shell_ratio <= 0.95 || log_exponent > 1.05 {
        Some(Finiteness::Finite)
    } else if log_exponent < 0.95 {
        Some(Finiteness::Infinite)
    } else {
        None
    };
    let r = (SHELLS as f64).exp2();
    let tail_bound = match analytic {
        Finiteness::Infinite => None,
        Finiteness::Finite => {
            let lead = omega * (2.0 * PI).powf(-t * p);
            let logf = 1.0 + 2.0 * (2.0 * PI * r).ln();
            let a = 0.5 * gamma * p;
            if t * p > n + 1e-12 {
                Some(lead * r.powf(n - t * p) / (t * p - n) * logf.powf(-a))
            } else {
                Some(lead * logf.powf(1.0 - a) / (2.0 * (a - 1.0)))
            }
        }
    };
    let warning = match numeric {
        Some(v) if v == analytic => None,
        Some(v) => Some(format!("numeric trend suggests {v:?}, analytic verdict is {analytic:?}")),
        None => Some(format!("numeric trend inconclusive (shell ratio {shell_ratio:.4}, log exponent {log_exponent:.3})")),
    };
    Ok(FinitenessWitness { analytic, numeric, masses, shell_ratio, log_exponent, tail_bound, warning })
}

/// Fourier-side measurements of `H_(t,gamma)` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    /// Extremes over `0.02 <= |xi| <= 0.4` of `|H^(xi)| / (|xi|^(t-n) (1 + 2 ln(1/|xi|))^(-gamma/2))`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `max |H^(xi)| e^(|xi|/2)` over `2 < |xi| <= min(12, nyquist)`.
    pub tail_constant: f64,
    pub ratio_samples: usize,
    pub tail_samples: usize,
}

impl AsymptoticsReport {
    /// Fails unless the ratio range lies inside `[lo, hi]`.
    pub fn check_window(&self, lo: f64, hi: f64) -> Result<()> {
        if self.ratio_min >= lo && self.ratio_max <= hi {
            Ok(())
        } else {
            Err(crate::Error::CheckFailed(format!(
                "ratio range [{}, {}] outside [{lo}, {hi}]",
                self.ratio_min, self.ratio_max
            )))
        }
    }
}

/// Transforms the sampled kernel and measures the small-frequency ratio and the
/// exponential tail constant. Requires `0 < t < n`.
pub fn h_hat_asymptotics_check(params: &HKernelParams, grid: Grid) -> Result<AsymptoticsReport> {
    let n = params.n as f64;
    if params.t >= n {
        return invalid(format!("small-frequency law needs t < n, got t={} n={}", params.t, params.n));
    }
    let fh = forward_ft(&sample_h_kernel(grid, params)?)?;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max: f64 = 0.0;
    let mut tail_constant: f64 = 0.0;
    let (mut rs, mut ts) = (0, 0);
    let hi = grid.nyquist().min(12.0);
    let mut xi = vec![0.0; params.n];
    for (k, v) in fh.values().iter().enumerate() {
        fh.point(k, &mut xi);
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (0.02..=0.4).contains(&r) {
            let law = r.powf(params.t - n) * (1.0 + 2.0 * (1.0 / r).ln()).powf(-0.5 * params.gamma);
            let q = v.norm() / law;
            ratio_min = ratio_min.min(q);
            ratio_max = ratio_max.max(q);
            rs += 1;
        } else if r > 2.0 && r <= hi {
            tail_constant = tail_constant.max(v.norm() * (0.5 * r).exp());
            ts += 1;
        }
    }
    if rs == 0 {
        return invalid("grid has no frequencies in [0.02, 0.4]");
    }
    Ok(AsymptoticsReport { ratio_min, ratio_max, tail_constant, ratio_samples: rs, tail_samples: ts })
}

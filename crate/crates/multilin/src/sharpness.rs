//! The two necessity constructions: a truncated-kernel symbol whose functional stays bounded
//! while the operator norm grows with the truncation radius (`ce1`), and a diagonal-kernel
//! symbol whose inputs stay bounded while the output mass grows with the box (`ce2`).

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{forward_ft, inverse_ft, lp_norm, sample_real, Field, Grid, Space, Symbol};
use crate::kernels::{bracket, h_radial};
use crate::lp_frames::{Cutoff, FrameFamily};
use crate::multiplier_op::apply_multiplier;
use crate::norms::{hardy_norm, hormander_functional, symbol_support_radii, NormReport};

const SUPPORT_LO: f64 = 0.99;
const SUPPORT_HI: f64 = 1.01;

fn target_exponent(p: &[f64]) -> f64 {
    1.0 / p.iter().map(|v| 1.0 / v).sum::<f64>()
}

fn check_support(sigma: &Symbol) -> Result<()> {
    match symbol_support_radii(sigma) {
        Some((lo, hi)) if lo >= SUPPORT_LO && hi <= SUPPORT_HI => Ok(()),
        Some((lo, hi)) => Err(Error::Support(format!("symbol support radii [{lo}, {hi}] leave [0.99, 1.01]"))),
        None => Err(Error::Support("symbol vanishes on the lattice".into())),
    }
}

/// Lattice sizes for the truncated-kernel construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ce1Grid {
    /// Points of the operator lattice.
    pub points: usize,
    /// The operator box is `box_scale / eps`.
    pub box_scale: f64,
    /// Points of the lattice on which the functional is evaluated.
    pub symbol_points: usize,
    /// Box of the functional lattice; its frequency step is `1 / symbol_box`.
    pub symbol_box: f64,
    /// Trapezoid step for the kernel transform.
    pub quad_step: f64,
}

impl Ce1Grid {
    /// Compact description for CSV metadata.
    pub fn tag(&self) -> String {
        format!(
            "P={};box={}/eps;symbol_P={};symbol_box={};quad_step={}",
            self.points, self.box_scale, self.symbol_points, self.symbol_box, self.quad_step
        )
    }
}

impl Default for Ce1Grid {
    fn default() -> Self {
        Self { points: 8192, box_scale: (1u64 << 18) as f64, symbol_points: 1 << 19, symbol_box: 16384.0, quad_step: 1.0 / 64.0 }
    }
}

/// Parameters of the truncated-kernel construction (dimension `n = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ce1Params {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub delta: f64,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    /// Truncation radius `N` of the kernel.
    pub n_cut: usize,
    pub eps: f64,
    pub grid: Ce1Grid,
}

impl Default for Ce1Params {
    fn default() -> Self {
        Self {
            n: 1,
            m: 2,
            r: 1.5,
            delta: 2.0,
            s: vec![2.0 / 3.0, 2.0],
            p: vec![2.0, 2.0],
            n_cut: 16,
            eps: 1.0 / 128.0,
            grid: Ce1Grid::default(),
        }
    }
}

impl Ce1Params {
    pub fn validate(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::Unsupported("the truncated-kernel construction is implemented for n = 1".into()));
        }
        if !(2..=3).contains(&self.m) || self.s.len() != self.m || self.p.len() != self.m {
            return invalid(format!("need m in {{2, 3}} with m orders and exponents, got m={}", self.m));
        }
        if !(self.r > 1.0 && self.r.is_finite()) {
            return invalid(format!("r must lie in (1, inf), got {}", self.r));
        }
        if !(self.delta > 2.0 / self.r && self.delta <= 2.0) {
            return invalid(format!("delta must lie in (2/r, 2], got {}", self.delta));
        }
        let s1 = self.s[0];
        if self.s.iter().any(|&v| v < s1 || v < 0.0) || s1 > self.n as f64 / self.r + 1e-12 {
            return invalid("s_1 must be the smallest order and at most n/r");
        }
        if self.p.iter().any(|&v| v.is_nan() || v <= 0.0) || !target_exponent(&self.p).is_finite() {
            return invalid("exponents must be positive with a finite target");
        }
        if !(self.eps > 0.0 && self.eps < 0.01) {
            return invalid(format!("eps must lie in (0, 1/100), got {}", self.eps));
        }
        if self.n_cut == 0 {
            return invalid("N must be a positive integer");
        }
        Ok(())
    }
}

/// `H_(n,delta)(x) chi1(x / N)` and its Fourier transform by the trapezoid rule.
#[derive(Debug, Clone)]
pub struct TruncatedKernel {
    radius: f64,
    step: f64,
    /// `w_0 = f(0) dx`, `w_k = 2 f(k dx) dx`.
    weights: Vec<f64>,
    /// `sum_k w_k (x_k / radius)^(2i)`.
    moments: Vec<f64>,
}

const TAYLOR_TERMS: usize = 30;

impl TruncatedKernel {
    pub fn new(n_cut: usize, delta: f64, step: f64) -> Self {
        let chi = Cutoff::new(1.0, 2.0).expect("valid radii");
        let radius = 2.0 * n_cut as f64;
        let nodes = (radius / step).round() as usize;
        let weights: Vec<f64> = (0..=nodes)
            .map(|k| {
                let x = k as f64 * step;
                let w = if k == 0 { step } else { 2.0 * step };
                w * h_radial(x, 1.0, delta) * chi.eval(x / n_cut as f64)
            })
            .collect();
        let moments = (0..TAYLOR_TERMS)
            .map(|i| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * (k as f64 * step / radius).powi(2 * i as i32))
                    .sum()
            })
            .collect();
        Self { radius, step, weights, moments }
    }

    /// `int H_(n,delta) Phi^_N`, the transform at the origin.
    pub fn integral(&self) -> f64 {
        self.moments[0]
    }

    /// The transform at frequency `eta`.
    pub fn hat(&self, eta: f64) -> f64 {
        let a = 2.0 * PI * eta * self.radius;
        if a.abs() <= 1.0 {
            let mut term = 1.0;
            let mut sum = self.moments[0];
            for i in 1..TAYLOR_TERMS {
                term *= -a * a / ((2 * i - 1) * (2 * i)) as f64;
                sum += term * self.moments[i];
            }
            sum
        } else {
            let w = 2.0 * PI * eta * self.step;
            self.weights.iter().enumerate().map(|(k, v)| v * (w * k as f64).cos()).sum()
        }
    }
}

fn ce1_symbol(kernel: &TruncatedKernel, factor: Grid, m: usize) -> Result<Symbol> {
    let tt = FrameFamily::theta_tilde(m);
    let p = factor.points();
    let mut a = vec![Complex64::new(0.0, 0.0); p];
    let mut t = vec![Complex64::new(0.0, 0.0); p];
    a.par_iter_mut().zip(t.par_iter_mut()).enumerate().for_each(|(i, (av, tv))| {
        let eta = factor.freq(i);
        let w = tt.profile(eta.abs());
        if w != 0.0 {
            *av = Complex64::new(kernel.hat(eta) * w, 0.0);
            *tv = Complex64::new(w, 0.0);
        }
    });
    let mut center = vec![0.0; m];
    center[0] = 1.0;
    let mut blocks = vec![(1, a)];
    blocks.extend((1..m).map(|_| (1, t.clone())));
    Symbol::from_blocks(factor, &center, blocks)
}

/// The scaled test input `eps^(n/p_j) theta(eps x)` as a spectral field with the given carrier.
fn ce1_input(grid: Grid, m: usize, eps: f64, p: f64, carrier: f64) -> Result<Field> {
    let theta = FrameFamily::theta_annular(m);
    let amp = eps.powf(1.0 / p - 1.0);
    let values = (0..grid.points())
        .map(|i| Complex64::new(amp * theta.profile(grid.freq(i).abs() / eps), 0.0))
        .collect();
    Field::from_values(grid, Space::Spectral, values)?.with_carrier(&[carrier])
}

/// The truncated-kernel symbol on the operator lattice, its inputs, and the symbol on the
/// functional lattice.
#[derive(Debug, Clone)]
pub struct Ce1Construction {
    pub sigma: Symbol,
    pub inputs: Vec<Field>,
    pub functional_symbol: Symbol,
    pub kernel: TruncatedKernel,
}

/// Builds the truncated-kernel symbol and inputs, checking the support of both symbols.
pub fn build_ce1(params: &Ce1Params) -> Result<Ce1Construction> {
    params.validate()?;
    let kernel = TruncatedKernel::new(params.n_cut, params.delta, params.grid.quad_step);
    let op = Grid::new(1, params.grid.points, params.grid.box_scale / params.eps)?;
    let sigma = ce1_symbol(&kernel, op, params.m)?;
    check_support(&sigma)?;
    let fg = Grid::new(1, params.grid.symbol_points, params.grid.symbol_box)?;
    let functional_symbol = ce1_symbol(&kernel, fg, params.m)?;
    check_support(&functional_symbol)?;
    let inputs = ce1_inputs(params, op)?;
    Ok(Ce1Construction { sigma, inputs, functional_symbol, kernel })
}

fn ce1_inputs(params: &Ce1Params, op: Grid) -> Result<Vec<Field>> {
    (0..params.m)
        .map(|k| ce1_input(op, params.m, params.eps, params.p[k], if k == 0 { 1.0 } else { 0.0 }))
        .collect()
}

impl Ce1Construction {
    /// Largest deviation of `|T(f)|` from `eps^(n/p) |H^(N) * theta(eps .)| |theta(eps .)|^(m-1)`,
    /// relative to the maximum of the closed form.
    pub fn factorization_error(&self, params: &Ce1Params) -> Result<f64> {
        let out = apply_multiplier(&self.sigma, &self.inputs)?;
        let g = *self.sigma.factor();
        let bump = ce1_input(g, params.m, params.eps, f64::INFINITY, 0.0)?;
        let conv = inverse_ft(&bump.weighted(|xi| self.kernel.hat(xi[0])))?;
        let plain = inverse_ft(&bump)?;
        let scale = params.eps.powf(1.0 / target_exponent(&params.p));
        let expected: Vec<f64> = conv
            .values()
            .iter()
            .zip(plain.values())
            .map(|(c, t)| scale * c.norm() * t.norm().powi(params.m as i32 - 1))
            .collect();
        let peak = expected.iter().fold(0.0f64, |a, b| a.max(*b));
        let err = out.values().iter().zip(&expected).fold(0.0f64, |a, (o, e)| a.max((o.norm() - e).abs()));
        Ok(err / peak)
    }
}

/// Whether the experiment is the truncated-kernel or the diagonal-kernel construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Ce1,
    Ce2,
}

impl Construction {
    pub fn tag(self) -> &'static str {
        match self {
            Construction::Ce1 => "ce1",
            Construction::Ce2 => "ce2",
        }
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub run_id: String,
    pub construction: Construction,
    /// Truncation radius `N` or nominal box size `L`.
    pub n_or_l: f64,
    pub eps: Option<f64>,
    pub r: f64,
    /// `delta` for `ce1`; `tau` followed by the tail exponents for `ce2`.
    pub delta_or_tau: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub l_functional: f64,
    /// Scale at which the functional is attained.
    pub argmax_j: i32,
    pub hardy_norms: Vec<f64>,
    pub output_lp: f64,
    pub ratio: f64,
    pub wall_ms: u64,
    /// `ce1`: `I(N) = int H Phi^_N`.
    pub driver: Option<f64>,
}

fn elapsed_ms(start: Instant, timing: bool) -> u64 {
    if timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn functional(sigma: &Symbol, r: f64, s: &[f64]) -> Result<NormReport> {
    hormander_functional(sigma, &FrameFamily::psi_m(sigma.m()), r, s)
}

/// Sweeps the truncated-kernel construction over `N` and `eps`, one record per pair.
pub fn ce1_sweep(params: &Ce1Params, n_list: &[usize], eps_list: &[f64], timing: bool) -> Result<Vec<ExperimentRecord>> {
    if n_list.is_empty() || eps_list.is_empty() {
        return invalid("sweep lists must be nonempty");
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || eps_list.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("sweep lists must be strictly ascending");
    }
    let p_out = target_exponent(&params.p);
    let per_n: Vec<(TruncatedKernel, NormReport, u64)> = n_list
        .par_iter()
        .map(|&nc| {
            let start = Instant::now();
            let q = Ce1Params { n_cut: nc, ..params.clone() };
            q.validate()?;
            let kernel = TruncatedKernel::new(nc, q.delta, q.grid.quad_step);
            let fs = ce1_symbol(&kernel, Grid::new(1, q.grid.symbol_points, q.grid.symbol_box)?, q.m)?;
            check_support(&fs)?;
            let rep = functional(&fs, q.r, &q.s)?;
            Ok((kernel, rep, elapsed_ms(start, timing)))
        })
        .collect::<Result<_>>()?;
    let per_eps: Vec<(Grid, Vec<Field>, Vec<f64>, u64)> = eps_list
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let q = Ce1Params { eps, ..params.clone() };
            q.validate()?;
            let op = Grid::new(1, q.grid.points, q.grid.box_scale / eps)?;
            let inputs = ce1_inputs(&q, op)?;
            let hardy = inputs
                .iter()
                .zip(&q.p)
                .map(|(f, &p)| Ok(hardy_norm(f, p)?.value))
                .collect::<Result<Vec<f64>>>()?;
            Ok((op, inputs, hardy, elapsed_ms(start, timing)))
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..n_list.len()).flat_map(|a| (0..eps_list.len()).map(move |b| (a, b))).collect();
    pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let start = Instant::now();
            let (kernel, rep, t_n) = &per_n[a];
            let (op, inputs, hardy, t_e) = &per_eps[b];
            let sigma = ce1_symbol(kernel, *op, params.m)?;
            check_support(&sigma)?;
            let out = lp_norm(&apply_multiplier(&sigma, inputs)?, p_out)?;
            Ok(ExperimentRecord {
                run_id: format!("ce1-{:03}", k + 1),
                construction: Construction::Ce1,
                n_or_l: n_list[a] as f64,
                eps: Some(eps_list[b]),
                r: params.r,
                delta_or_tau: vec![params.delta],
                s: params.s.clone(),
                p: params.p.clone(),
                l_functional: rep.value,
                argmax_j: rep.argmax_j,
                hardy_norms: hardy.clone(),
                output_lp: out,
                ratio: out / hardy.iter().product::<f64>(),
                wall_ms: if timing { elapsed_ms(start, true) + t_n + t_e } else { 0 },
                driver: Some(kernel.integral()),
            })
        })
        .collect()
}

/// Lattice sizes for the diagonal-kernel construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ce2Grid {
    /// The box is `box_unit * L` for nominal size `L`.
    pub box_unit: f64,
    /// Kernel samples per unit length before transforming.
    pub oversample: usize,
    /// Operator lattice spacing, in units of length.
    pub decimation: usize,
}

impl Ce2Grid {
    /// Compact description for CSV metadata.
    pub fn tag(&self) -> String {
        format!("box={}L;oversample={};decimation={}", self.box_unit, self.oversample, self.decimation)
    }
}

impl Default for Ce2Grid {
    fn default() -> Self {
        Self { box_unit: 200.0, oversample: 32, decimation: 8 }
    }
}

/// Parameters of the diagonal-kernel construction (dimension `n = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ce2Params {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub r: f64,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub tau: f64,
    /// `tau_{l+1}, ..., tau_m`.
    pub tau_tail: Vec<f64>,
    /// Nominal box size `L`.
    pub size: f64,
    pub grid: Ce2Grid,
}

impl Default for Ce2Params {
    fn default() -> Self {
        Self {
            n: 1,
            m: 2,
            l: 1,
            r: 1.5,
            s: vec![1.0, 1.0],
            p: vec![0.75, 8.0],
            tau: 1.5,
            tau_tail: vec![0.6],
            size: 32.0,
            grid: Ce2Grid::default(),
        }
    }
}

impl Ce2Params {
    pub fn validate(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::Unsupported("the diagonal-kernel construction is implemented for n = 1".into()));
        }
        let (m, l) = (self.m, self.l);
        if !(2..=3).contains(&m) || !(1..=m).contains(&l) || self.s.len() != m || self.p.len() != m {
            return invalid(format!("need 2 <= m <= 3, 1 <= l <= m with m orders and exponents; got m={m}, l={l}"));
        }
        if self.tau_tail.len() != m - l {
            return invalid(format!("need {} tail exponents, got {}", m - l, self.tau_tail.len()));
        }
        let n = self.n as f64;
        let r = self.r;
        if !(r > 1.0 && r.is_finite()) {
            return invalid(format!("r must lie in (1, inf), got {r}"));
        }
        let rp = 1.0 - 1.0 / r;
        if self.s.iter().any(|&v| v <= n / r) {
            return invalid("every order must exceed n/r");
        }
        let head: f64 = (0..l).map(|k| self.s[k] / n - 1.0 / self.p[k]).sum();
        if head > -rp + 1e-12 {
            return invalid(format!("the first {l} orders give sum {head}, need at most -1/r' = {}", -rp));
        }
        let two_over_p = 2.0 / target_exponent(&self.p);
        let tail: f64 = self.tau_tail.iter().sum();
        let tail_floor: f64 = (l..m).map(|k| 2.0 / self.p[k]).sum();
        let mid = 2.0 * l as f64 / r + 2.0 * rp;
        let chain = 2.0 / r < self.tau && self.tau < mid && mid < two_over_p - tail && two_over_p - tail < two_over_p - tail_floor;
        let each = self.tau_tail.iter().zip(&self.p[l..]).all(|(t, p)| *t > 2.0 / p);
        if !chain || !each {
            return invalid("the log exponents violate the admissible chain");
        }
        if self.size <= 0.0 {
            return invalid("box size must be positive");
        }
        Ok(())
    }

    pub fn box_length(&self) -> f64 {
        self.grid.box_unit * self.size
    }

    /// `mu = m^(-1/2)`, the common frequency of the inputs.
    pub fn mu(&self) -> f64 {
        1.0 / (self.m as f64).sqrt()
    }

    /// Order `s_1 + ... + s_l + n/r'` of the diagonal kernel.
    pub fn kernel_order(&self) -> f64 {
        self.s[..self.l].iter().sum::<f64>() + self.n as f64 * (1.0 - 1.0 / self.r)
    }
}

/// Real part of the transform of `H_(t,gamma)` truncated to the box, on the box's lattice.
fn truncated_transform(t: f64, gamma: f64, box_len: f64, oversample: usize) -> Result<Vec<f64>> {
    let points = ((oversample as f64 * box_len).ceil() as usize).next_power_of_two();
    let g = Grid::new(1, points, box_len)?;
    let h = forward_ft(&sample_real(g, |x| h_radial(x[0].abs(), t, gamma))?)?;
    Ok(h.values().iter().map(|v| v.re).collect())
}

/// Restricts fine-lattice spectral values to a coarser lattice with the same frequency step.
fn restrict(fine: &[f64], points: usize, weight: impl Fn(usize) -> f64) -> Vec<Complex64> {
    let off = fine.len() / 2 - points / 2;
    (0..points)
        .map(|i| {
            let w = weight(i);
            Complex64::new(if w == 0.0 { 0.0 } else { fine[off + i] * w }, 0.0)
        })
        .collect()
}

/// The diagonal-kernel symbol on the operator lattice, its inputs, and the symbol on the
/// functional lattice.
#[derive(Debug, Clone)]
pub struct Ce2Construction {
    pub sigma: Symbol,
    pub inputs: Vec<Field>,
    pub functional_symbol: Symbol,
    /// `K = H * varphi` on the operator lattice.
    pub kernel: Field,
    /// `min |f_j| / H_(n/p_j, tau_j)` over the central half of the box, for `j > l`.
    pub lower_bounds: Vec<f64>,
}

/// Builds the diagonal-kernel symbol for `l = 1` and its inputs, checking the support.
pub fn build_ce2(params: &Ce2Params) -> Result<Ce2Construction> {
    params.validate()?;
    if params.l != 1 {
        return Err(Error::Unsupported("the diagonal-kernel symbol is built for l = 1".into()));
    }
    let m = params.m;
    let mu = params.mu();
    let box_len = params.box_length();
    let vphi = FrameFamily::varphi_ball(m, 1);
    let vtilde = FrameFamily::varphi_tilde(m);
    let hk = truncated_transform(params.kernel_order(), params.tau, box_len, params.grid.oversample)?;
    let fine_points = hk.len();
    let fine = Grid::new(1, fine_points, box_len)?;
    let op_points = ((box_len / params.grid.decimation as f64).ceil() as usize).next_power_of_two();
    let op = Grid::new(1, op_points, box_len)?;
    let at = |g: Grid, fam: &FrameFamily, i: usize| fam.profile(g.freq(i).abs());
    let symbol_on = |g: Grid, values: &[f64]| -> Result<Symbol> {
        let k = restrict(values, g.points(), |i| at(g, &vphi, i));
        let t: Vec<Complex64> = (0..g.points()).map(|i| Complex64::new(at(g, &vtilde, i), 0.0)).collect();
        let mut blocks = vec![(1, k)];
        blocks.extend((1..m).map(|_| (1, t.clone())));
        Symbol::from_blocks(g, &vec![mu; m], blocks)
    };
    let sigma = symbol_on(op, &hk)?;
    check_support(&sigma)?;
    let functional_symbol = symbol_on(fine, &hk)?;
    check_support(&functional_symbol)?;
    let kernel = inverse_ft(&Field::from_values(op, Space::Spectral, restrict(&hk, op_points, |i| at(op, &vphi, i)))?)?;
    let head: Vec<Complex64> = (0..op_points).map(|i| Complex64::new(vtilde.profile(0.5 * op.freq(i).abs()), 0.0)).collect();
    let mut inputs = vec![Field::from_values(op, Space::Spectral, head)?.with_carrier(&[mu])?];
    let mut lower_bounds = Vec::new();
    for (k, &tk) in params.tau_tail.iter().enumerate() {
        let t = params.n as f64 / params.p[params.l + k];
        let tail = truncated_transform(t, tk, box_len, params.grid.oversample)?;
        let spec = Field::from_values(op, Space::Spectral, restrict(&tail, op_points, |i| at(op, &vphi, i)))?;
        let phys = inverse_ft(&spec)?;
        let c = (0..op_points)
            .filter(|&i| op.coord(i).abs() <= 0.25 * box_len)
            .map(|i| phys.values()[i].norm() / h_radial(op.coord(i).abs(), t, tk))
            .fold(f64::INFINITY, f64::min);
        lower_bounds.push(c);
        inputs.push(spec.with_carrier(&[mu])?);
    }
    Ok(Ce2Construction { sigma, inputs, functional_symbol, kernel, lower_bounds })
}

impl Ce2Construction {
    /// Largest deviation of `|T(f)|` from `|K| prod_{j > 1} |f_j|`, relative to the maximum
    /// of the closed form.
    pub fn diagonal_error(&self) -> Result<f64> {
        let out = apply_multiplier(&self.sigma, &self.inputs)?;
        let tails: Vec<Field> = self.inputs[1..].iter().map(inverse_ft).collect::<Result<_>>()?;
        let expected: Vec<f64> = (0..out.values().len())
            .map(|i| tails.iter().fold(self.kernel.values()[i].norm(), |a, f| a * f.values()[i].norm()))
            .collect();
        let peak = expected.iter().fold(0.0f64, |a, b| a.max(*b));
        let err = out.values().iter().zip(&expected).fold(0.0f64, |a, (o, e)| a.max((o.norm() - e).abs()));
        Ok(err / peak)
    }
}

/// Sweeps the diagonal-kernel construction (`l = 1`) over nominal box sizes.
pub fn ce2_sweep(params: &Ce2Params, sizes: &[f64], timing: bool) -> Result<Vec<ExperimentRecord>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("box sizes must be nonempty and strictly ascending");
    }
    let p_out = target_exponent(&params.p);
    sizes
        .par_iter()
        .enumerate()
        .map(|(k, &size)| {
            let start = Instant::now();
            let q = Ce2Params { size, ..params.clone() };
            let c = build_ce2(&q)?;
            let rep = functional(&c.functional_symbol, q.r, &q.s)?;
            let hardy = c
                .inputs
                .iter()
                .zip(&q.p)
                .map(|(f, &p)| Ok(hardy_norm(f, p)?.value))
                .collect::<Result<Vec<f64>>>()?;
            let out = lp_norm(&apply_multiplier(&c.sigma, &c.inputs)?, p_out)?;
            let mut taus = vec![q.tau];
            taus.extend(&q.tau_tail);
            Ok(ExperimentRecord {
                run_id: format!("ce2-{:03}", k + 1),
                construction: Construction::Ce2,
                n_or_l: size,
                eps: None,
                r: q.r,
                delta_or_tau: taus,
                s: q.s.clone(),
                p: q.p.clone(),
                l_functional: rep.value,
                argmax_j: rep.argmax_j,
                hardy_norms: hardy.clone(),
                output_lp: out,
                ratio: out / hardy.iter().product::<f64>(),
                wall_ms: elapsed_ms(start, timing),
                driver: None,
            })
        })
        .collect()
}

/// Outcome of [`diagonal_identity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub m: usize,
    pub l: usize,
    pub points: usize,
    pub max_rel_error: f64,
}

/// Compares the direct transform of `M^(l)` with `l K(x_1 + ... + x_l) prod varphi(x_1 - x_j)
/// e^(-2 pi i <sum x, mu>)` at random lattice points, for `l` in `{1, 2}` and `n = 1`.
///
/// `M^(l)` is sampled on `lattice` points per axis with step `1/box_len` around `mu`; the
/// kernel transform is taken from the box `l * box_len` so every needed value is a lattice
/// value.
pub fn diagonal_identity_check(
    m: usize,
    l: usize,
    s: &[f64],
    r: f64,
    tau: f64,
    lattice: usize,
    box_len: f64,
    points: usize,
    seed: u64,
) -> Result<IdentityReport> {
    if !(1..=2).contains(&l) || l > m || s.len() < l {
        return Err(Error::Unsupported(format!("the identity check covers l in {{1, 2}} with l <= m, got l={l}, m={m}")));
    }
    let order = s[..l].iter().sum::<f64>() + 1.0 - 1.0 / r;
    let lf = l as f64;
    let hk = truncated_transform(order, tau, lf * box_len, 32)?;
    let half = hk.len() / 2;
    let vphi = FrameFamily::varphi_ball(m, l);
    let h = 1.0 / box_len;
    let khat = |a: i64| -> f64 {
        let eta = a as f64 * h / lf;
        let w = vphi.profile(eta.abs());
        if w == 0.0 {
            0.0
        } else {
            hk[(half as i64 + a) as usize] * w
        }
    };
    let mu = 1.0 / (m as f64).sqrt();
    let p = lattice as i64;
    let ks: Vec<i64> = (-p / 2..p / 2).collect();
    let mut direct_terms: Vec<(Vec<i64>, f64)> = Vec::new();
    let mut idx = vec![0i64; l];
    let total = ks.len().pow(l as u32);
    for flat in 0..total {
        let mut rem = flat;
        for v in idx.iter_mut() {
            *v = ks[rem % ks.len()];
            rem /= ks.len();
        }
        let a: i64 = idx.iter().sum();
        let mut val = khat(a);
        if l == 2 {
            let zeta = (idx[0] - idx[1]) as f64 * h / 2.0;
            val *= vphi.profile(zeta.abs());
        }
        if val != 0.0 {
            direct_terms.push((idx.clone(), val));
        }
    }
    let step_x = box_len / lattice as f64;
    let reach = (lattice / 8) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_max = (p * l as i64) / 2 + 1;
    let mut max_err = 0.0f64;
    let mut max_ref = 0.0f64;
    for _ in 0..points {
        let x: Vec<f64> = (0..l).map(|_| rng.gen_range(-reach..reach) as f64 * step_x).collect();
        let phase = |k: &[i64]| -> f64 { x.iter().zip(k).map(|(xv, kv)| xv * (mu + *kv as f64 * h)).sum() };
        let direct: Complex64 = direct_terms
            .iter()
            .map(|(k, v)| Complex64::from_polar(*v * h.powi(l as i32), -2.0 * PI * phase(k)))
            .sum();
        let y: f64 = x.iter().sum();
        let step = h / lf;
        let k_y: Complex64 = (-a_max..=a_max)
            .map(|a| Complex64::from_polar(khat(a) * step, -2.0 * PI * y * a as f64 * step))
            .sum();
        let mut expected = k_y * lf * Complex64::from_polar(1.0, -2.0 * PI * y * mu);
        if l == 2 {
            let z = x[0] - x[1];
            let phi_z: Complex64 = (-a_max..=a_max)
                .map(|b| {
                    let zeta = b as f64 * step;
                    Complex64::from_polar(vphi.profile(zeta.abs()) * step, -2.0 * PI * z * zeta)
                })
                .sum();
            expected *= phi_z;
        }
        max_err = max_err.max((direct - expected).norm());
        max_ref = max_ref.max(expected.norm());
    }
    Ok(IdentityReport { m, l, points, max_rel_error: max_err / max_ref })
}

/// `N_(M)(y)` for `n = 1`: the bracket quotient of the change of variables.
pub fn nm_quotient(y: &[f64], s: &[f64], big_m: f64) -> f64 {
    let l = y.len();
    let lf = l as f64;
    let mean: f64 = y.iter().sum::<f64>() / lf;
    let mut num = bracket(&[mean]).powf(s[0]);
    let mut den = bracket(&[y[0]]).powf(s[..l].iter().sum());
    for j in 1..l {
        num *= bracket(&[mean - y[j]]).powf(s[j]);
        den *= bracket(&[y[j]]).powf(big_m);
    }
    num / den
}

/// Outcome of [`nm_multiplier_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmReport {
    pub samples: usize,
    /// `sup prod_{k in alpha} |y_k| |D^alpha N|` for each `alpha` in `{0, 1}^l`, indexed by bitmask.
    pub scaled_sup: Vec<f64>,
}

fn nm_derivative(y: &[f64], s: &[f64], big_m: f64, mask: usize) -> f64 {
    let l = y.len();
    let steps: Vec<f64> = y.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let mut acc = 0.0;
    let vars: Vec<usize> = (0..l).filter(|k| mask >> k & 1 == 1).collect();
    for corner in 0..(1usize << vars.len()) {
        let mut pt = y.to_vec();
        let mut sign = 1.0;
        for (b, &k) in vars.iter().enumerate() {
            if corner >> b & 1 == 1 {
                pt[k] += steps[k];
            } else {
                pt[k] -= steps[k];
                sign = -sign;
            }
        }
        acc += sign * nm_quotient(&pt, s, big_m);
    }
    let denom: f64 = vars.iter().map(|&k| 2.0 * steps[k]).product();
    acc / denom
}

/// Samples the scaled differences of `N_(M)` at random points with magnitudes log-uniform in
/// `[1e-3, 1e4]` and checks each supremum against `bounds` (indexed by bitmask) when given.
pub fn nm_multiplier_check(
    big_m: f64,
    l: usize,
    s: &[f64],
    samples: usize,
    seed: u64,
    bounds: Option<&[f64]>,
) -> Result<NmReport> {
    if l < 2 || s.len() != l {
        return invalid(format!("need l >= 2 and l orders, got l={l} with {} orders", s.len()));
    }
    let need = s.iter().sum::<f64>() + 3.0;
    if big_m <= need {
        return invalid(format!("M must exceed s_1 + ... + s_l + n + 2 = {need}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scaled_sup = vec![0.0f64; 1 << l];
    for _ in 0..samples {
        let y: Vec<f64> = (0..l)
            .map(|_| {
                let mag = 10f64.powf(rng.gen_range(-3.0..4.0));
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        for (mask, sup) in scaled_sup.iter_mut().enumerate() {
            let weight: f64 = (0..l).filter(|k| mask >> k & 1 == 1).map(|k| y[k].abs()).product();
            *sup = sup.max(weight * nm_derivative(&y, s, big_m, mask).abs());
        }
    }
    if let Some(b) = bounds {
        if let Some((mask, v)) = scaled_sup.iter().enumerate().find(|(k, v)| **v > b.get(*k).copied().unwrap_or(f64::INFINITY)) {
            return Err(Error::CheckFailed(format!("scaled difference {mask:#b} reached {v}, bound {}", b[mask])));
        }
    }
    Ok(NmReport { samples, scaled_sup })
}

/// `N_(M)` along `y = (0, R, 0, ...)` for each radius; a growing profile flags an order `M`
/// too small for boundedness.
pub fn nm_axis_profile(big_m: f64, s: &[f64], radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&rad| {
            let mut y = vec![0.0; s.len()];
            y[1] = rad;
            nm_quotient(&y, s, big_m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn truncated_kernel_transform() {
        let k = TruncatedKernel::new(4, 2.0, 1.0 / 64.0);
        let direct = |eta: f64| -> f64 {
            let chi = Cutoff::new(1.0, 2.0).unwrap();
            let steps = 200_000;
            let h = 8.0 / steps as f64;
            (0..=steps)
                .map(|i| {
                    let x = i as f64 * h;
                    let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                    2.0 * w * h * h_radial(x, 1.0, 2.0) * chi.eval(x / 4.0) * (2.0 * PI * eta * x).cos()
                })
                .sum()
        };
        for eta in [0.0, 0.001, 0.0199, 0.05, 0.3] {
            assert!(close(k.hat(eta), direct(eta), 1e-8), "eta={eta}: {} vs {}", k.hat(eta), direct(eta));
        }
        let edge = 1.0 / (2.0 * PI * 8.0);
        assert!(close(k.hat(edge * 0.999_999), k.hat(edge * 1.000_001), 1e-6));
        let larger = TruncatedKernel::new(8, 2.0, 1.0 / 64.0);
        assert!(larger.integral() > k.integral());
    }

    #[test]
    fn ce1_support_and_inputs() {
        let params = Ce1Params { grid: Ce1Grid { points: 2048, symbol_points: 1 << 16, symbol_box: 2048.0, ..Ce1Grid::default() }, ..Ce1Params::default() };
        let c = build_ce1(&params).unwrap();
        let (lo, hi) = symbol_support_radii(&c.sigma).unwrap();
        assert!(lo >= 0.99 && hi <= 1.01);
        let err = c.factorization_error(&params).unwrap();
        assert!(err < 1e-8, "factorization error {err}");
        let norms: Vec<f64> = [1.0 / 128.0, 1.0 / 256.0]
            .iter()
            .map(|&eps| {
                let q = Ce1Params { eps, ..params.clone() };
                let c = build_ce1(&q).unwrap();
                hardy_norm(&c.inputs[1], 2.0).unwrap().value
            })
            .collect();
        assert!(close(norms[0], norms[1], 0.05), "{norms:?}");
        let theta = FrameFamily::theta_annular(2);
        let g = Grid::new(1, 1 << 16, (1u64 << 20) as f64).unwrap();
        let l2 = (0..g.points()).map(|i| theta.profile(g.freq(i).abs()).powi(2)).sum::<f64>() * g.freq_step();
        assert!(close(norms[0], l2.sqrt(), 0.1), "{} vs {}", norms[0], l2.sqrt());
    }

    #[test]
    fn ce1_rejects_bad_parameters() {
        let bad = Ce1Params { delta: 1.0, ..Ce1Params::default() };
        assert!(bad.validate().is_err());
        let bad = Ce1Params { s: vec![0.9, 2.0], ..Ce1Params::default() };
        assert!(bad.validate().is_err());
        let bad = Ce1Params { n: 2, ..Ce1Params::default() };
        assert!(matches!(bad.validate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ce2_validation_chain() {
        assert!(Ce2Params::default().validate().is_ok());
        let bad = Ce2Params { tau: 2.1, ..Ce2Params::default() };
        assert!(bad.validate().is_err());
        let bad = Ce2Params { s: vec![1.2, 1.0], ..Ce2Params::default() };
        assert!(bad.validate().is_err());
        let bad = Ce2Params { tau_tail: vec![0.2], ..Ce2Params::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ce2_support_and_diagonal() {
        let params = Ce2Params { size: 8.0, ..Ce2Params::default() };
        let c = build_ce2(&params).unwrap();
        let mu = params.mu();
        let g = *c.sigma.factor();
        for b in c.sigma.blocks() {
            for (i, v) in b.values().iter().enumerate() {
                if *v != Complex64::new(0.0, 0.0) {
                    assert!(g.freq(i).abs() <= 1.0 / (100.0 * params.m as f64) + 1e-15, "{mu}");
                }
            }
        }
        let err = c.diagonal_error().unwrap();
        assert!(err < 1e-6, "diagonal error {err}");
        assert!(c.lower_bounds[0] > 0.0 && c.lower_bounds[0].is_finite());
    }

    #[test]
    fn identity_small() {
        for (m, l) in [(2, 1), (2, 2), (3, 2)] {
            let rep = diagonal_identity_check(m, l, &[1.0, 1.0, 1.0], 1.5, 1.95, 128, 8192.0, 20, 3).unwrap();
            assert!(rep.max_rel_error < 1e-6, "(m,l)=({m},{l}): {}", rep.max_rel_error);
        }
        assert!(diagonal_identity_check(3, 3, &[1.0; 3], 1.5, 1.95, 16, 1024.0, 1, 0).is_err());
    }

    #[test]
    fn nm_bounded_and_negative_control() {
        let rep = nm_multiplier_check(7.0, 2, &[1.0, 1.0], 2000, 1, None).unwrap();
        assert!(rep.scaled_sup.iter().all(|v| v.is_finite() && *v < 10.0), "{:?}", rep.scaled_sup);
        assert!(nm_multiplier_check(4.0, 2, &[1.0, 1.0], 10, 1, None).is_err());
        assert!(matches!(nm_multiplier_check(7.0, 2, &[1.0, 1.0], 100, 1, Some(&[1e-6, 1.0, 1.0, 1.0])), Err(Error::CheckFailed(_))));
        let radii = [1e2, 1e3, 1e4];
        let bounded = nm_axis_profile(2.0, &[1.0, 1.0], &radii);
        assert!(bounded.windows(2).all(|w| w[1] < 1.01 * w[0]));
        let grows = nm_axis_profile(1.0, &[1.0, 1.0], &radii);
        assert!(grows.windows(2).all(|w| w[1] > 5.0 * w[0]), "{grows:?}");
    }
}

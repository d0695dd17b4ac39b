//! Sobolev norms on product spaces, the dyadic Hörmander functional, Hardy and BMO
//! quantities, and the Hardy-Littlewood and Peetre maximal operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{fft_nd, forward_ft, inverse_ft, lp_norm, Field, Grid, Space, Symbol, MAX_DIMS};
use crate::kernels::{bracket, sphere_area};
use crate::lp_frames::{FrameFamily, ScaleWindow};

/// Result of a sup over dyadic scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub window: ScaleWindow,
    pub argmax_j: i32,
    /// Value at each scale of the window, in increasing `j`.
    pub per_scale: Vec<f64>,
    pub points: usize,
    pub box_length: f64,
}

impl NormReport {
    fn from_scales(window: ScaleWindow, per_scale: Vec<f64>, grid: &Grid) -> Self {
        let value = per_scale.iter().cloned().fold(0.0, f64::max);
        let k = per_scale.iter().position(|&v| v >= value * (1.0 - 1e-12)).unwrap_or(0);
        Self {
            value,
            window,
            argmax_j: window.j_min + k as i32,
            per_scale,
            points: grid.points(),
            box_length: grid.box_length(),
        }
    }

    /// CSV row `norm_id,value,j_min,j_max,argmax_j,P,L`.
    pub fn csv_row(&self, norm_id: &str) -> String {
        format!(
            "{norm_id},{:.12e},{},{},{},{},{}",
            self.value, self.window.j_min, self.window.j_max, self.argmax_j, self.points, self.box_length
        )
    }

    /// True when the maximiser is not on the edge of the window.
    pub fn is_interior(&self) -> bool {
        self.argmax_j > self.window.j_min && self.argmax_j < self.window.j_max
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if r.is_nan() || r <= 0.0 {
        return invalid(format!("integrability exponent must be positive, got {r}"));
    }
    Ok(())
}

fn block_radius(xi: &[f64], n: usize, k: usize) -> f64 {
    xi[k * n..(k + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `||(I - Delta_1)^(s_1/2) ... (I - Delta_m)^(s_m/2) F||_r` for `F` on `(R^n)^m`.
pub fn product_sobolev_norm(f: &Field, m: usize, r: f64, s: &[f64]) -> Result<f64> {
    check_exponent(r)?;
    let d = f.grid().dims();
    if m == 0 || s.len() != m || !d.is_multiple_of(m) {
        return invalid(format!("{} orders for m={m} on a {d}-axis field", s.len()));
    }
    if s.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return invalid(format!("orders must be nonnegative, got {s:?}"));
    }
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical" });
    }
    if s.iter().all(|&v| v == 0.0) {
        return lp_norm(f, r);
    }
    let n = d / m;
    let fh = forward_ft(f)?;
    let weighted = fh.weighted(|xi| {
        (0..m)
            .filter(|&k| s[k] != 0.0)
            .map(|k| {
                let rho = block_radius(xi, n, k);
                (1.0 + 4.0 * PI * PI * rho * rho).powf(0.5 * s[k])
            })
            .product()
    });
    lp_norm(&inverse_ft(&weighted)?, r)
}

/// `||(I - Delta)^(s/2) F||_r` with the Laplacian in all variables.
pub fn standard_sobolev_norm(f: &Field, r: f64, s: f64) -> Result<f64> {
    check_exponent(r)?;
    if !(s >= 0.0 && s.is_finite()) {
        return invalid(format!("order must be nonnegative, got {s}"));
    }
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical" });
    }
    if s == 0.0 {
        return lp_norm(f, r);
    }
    let fh = forward_ft(f)?;
    lp_norm(&inverse_ft(&fh.weighted(|xi| bracket(xi).powf(s)))?, r)
}

fn frame_radii(frame: &FrameFamily) -> (f64, f64) {
    let (inner, outer) = frame.support();
    (if inner > 0.0 { inner } else { 0.25 * outer }, outer)
}

/// Radii `(min, max)` of `|xi|` over the nonzero bins of a symbol.
pub fn symbol_support_radii(sigma: &Symbol) -> Option<(f64, f64)> {
    let n = sigma.factor().dims();
    let mut lo2 = 0.0;
    let mut hi2 = 0.0;
    let mut start = 0;
    for b in sigma.blocks() {
        let d = b.arity() * n;
        let center = &sigma.center()[start * n..start * n + d];
        let pg = sigma.factor().with_dims(d).ok()?;
        let (mut bl, mut bh) = (f64::INFINITY, 0.0f64);
        for (k, v) in b.values().iter().enumerate() {
            if *v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut idx = [0usize; MAX_DIMS];
            pg.unflatten(k, &mut idx);
            let r2: f64 = (0..d).map(|a| (center[a] + sigma.factor().freq(idx[a])).powi(2)).sum();
            bl = bl.min(r2);
            bh = bh.max(r2);
        }
        if bl.is_infinite() {
            return None;
        }
        lo2 += bl;
        hi2 += bh;
        start += b.arity();
    }
    Some((lo2.sqrt(), hi2.sqrt()))
}

enum Overlap {
    One,
    Zero,
    Partial,
}

fn classify(frame: &FrameFamily, lo: f64, hi: f64) -> Overlap {
    const SAMPLES: usize = 4096;
    let (mut ones, mut zeros) = (true, true);
    for k in 0..=SAMPLES {
        let rho = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let v = frame.profile(rho);
        ones &= (v - 1.0).abs() <= 1e-12;
        zeros &= v.abs() <= 1e-12;
    }
    match (ones, zeros) {
        (true, _) => Overlap::One,
        (_, true) => Overlap::Zero,
        _ => Overlap::Partial,
    }
}

const DENSE_LIMIT: usize = 1 << 24;

/// `sup_j ||sigma(2^j .) Psi^(.)||_{L^r_s}` over the scales where the frame meets the
/// support of `sigma`.
///
/// Dilates are realised by rescaling the box: the samples of `sigma` are reused on a
/// lattice with spacing `dxi / 2^j`. Block-product symbols whose support lies where the
/// frame profile is identically 0 or 1 are evaluated as a product of block norms.
pub fn hormander_functional(sigma: &Symbol, frame: &FrameFamily, r: f64, s: &[f64]) -> Result<NormReport> {
    check_exponent(r)?;
    let m = sigma.m();
    if s.len() != m {
        return invalid(format!("{} orders for m={m}", s.len()));
    }
    let fg = *sigma.factor();
    let (inner, outer) = frame_radii(frame);
    let support = symbol_support_radii(sigma);
    let window = match support {
        None => ScaleWindow::resolvable(&fg)?,
        Some((lo, hi)) if lo > 0.0 => {
            ScaleWindow::new((lo / outer).log2().floor() as i32, (hi / inner).log2().ceil() as i32)?
        }
        Some(_) => {
            let dxi = fg.freq_step();
            let box_len = fg.points() as f64 * dxi;
            ScaleWindow::new(
                (16.0 * dxi / inner).log2().ceil() as i32,
                (box_len / (4.0 * outer)).log2().floor() as i32,
            )?
        }
    };
    if support.is_none() {
        return Ok(NormReport::from_scales(window, vec![0.0; window.len()], &fg));
    }
    let (lo, hi) = support.unwrap_or((0.0, 0.0));
    if !sigma.is_dense() && lo > 0.0 {
        let kinds: Vec<Overlap> = window
            .iter()
            .map(|j| {
                let sc = (-j as f64).exp2();
                classify(frame, lo * sc, hi * sc)
            })
            .collect();
        if kinds.iter().all(|k| !matches!(k, Overlap::Partial)) {
            let per = window
                .iter()
                .zip(&kinds)
                .map(|(j, k)| match k {
                    Overlap::Zero => Ok(0.0),
                    _ => block_product_norm(sigma, j, r, s),
                })
                .collect::<Result<Vec<f64>>>()?;
            return Ok(NormReport::from_scales(window, per, &fg));
        }
    }
    if sigma.len() > DENSE_LIMIT {
        return Err(Error::Unsupported(format!(
            "symbol with {} bins straddles a frame transition; dense evaluation limited to {DENSE_LIMIT}",
            sigma.len()
        )));
    }
    let dense = sigma.dense_values();
    let d = sigma.total_dims();
    let per = window
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| {
            let g = sigma.frequency_grid(j)?;
            let values = dense
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    if *v == Complex64::new(0.0, 0.0) {
                        return *v;
                    }
                    let mut xi = [0.0; MAX_DIMS];
                    sigma.freq_vector(k, &mut xi);
                    *v * frame.hat(&xi[..d], j)
                })
                .collect();
            product_sobolev_norm(&Field::from_values(g, Space::Physical, values)?, m, r, s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(NormReport::from_scales(window, per, &fg))
}

/// Product over blocks of `||block(2^j .)||_{L^r_s}`.
fn block_product_norm(sigma: &Symbol, j: i32, r: f64, s: &[f64]) -> Result<f64> {
    let fg = sigma.factor();
    let n = fg.dims();
    let box_len = fg.points() as f64 * fg.freq_step() * (-j as f64).exp2();
    let mut start = 0;
    let mut out = 1.0;
    for b in sigma.blocks() {
        let g = Grid::new(b.arity() * n, fg.points(), box_len)?;
        let f = Field::from_values(g, Space::Physical, b.values().to_vec())?;
        out *= product_sobolev_norm(&f, b.arity(), r, &s[start..start + b.arity()])?;
        start += b.arity();
    }
    Ok(out)
}

/// Applies `op` to every axis-`axis` line of `v`.
fn for_each_line(g: &Grid, v: &mut [f64], axis: usize, op: impl Fn(&mut [f64]) + Sync) {
    let p = g.points();
    let stride = p.pow((g.dims() - 1 - axis) as u32);
    let lines = v.len() / p;
    let mut buf = vec![0.0; v.len()];
    buf.par_chunks_mut(p).enumerate().for_each(|(line, out)| {
        let base = (line / stride) * stride * p + line % stride;
        for (k, o) in out.iter_mut().enumerate() {
            *o = v[base + k * stride];
        }
        op(out);
    });
    for line in 0..lines {
        let base = (line / stride) * stride * p + line % stride;
        for k in 0..p {
            v[base + k * stride] = buf[line * p + k];
        }
    }
}

fn centered_box_mean(line: &mut [f64], h: usize) {
    let p = line.len();
    let mut prefix = vec![0.0; 3 * p + 1];
    for k in 0..3 * p {
        prefix[k + 1] = prefix[k] + line[k % p];
    }
    let w = (2 * h + 1) as f64;
    let out: Vec<f64> = (0..p).map(|k| (prefix[p + k + h + 1] - prefix[p + k - h]) / w).collect();
    line.copy_from_slice(&out);
}

/// `M_t f = (M(|f|^t))^(1/t)` with `M` the centred-cube maximal function over half-widths
/// `0, 1, 2, 4, ...` cells, on the periodic box.
pub fn hl_maximal(f: &Field, t: f64) -> Result<Field> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("t must be positive and finite, got {t}"));
    }
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical" });
    }
    let g = *f.grid();
    let p = g.points();
    let base: Vec<f64> = f.values().iter().map(|v| v.norm().powf(t)).collect();
    let mut best = base.clone();
    let mut h = 1;
    while 2 * h < p {
        let mut avg = base.clone();
        for axis in 0..g.dims() {
            for_each_line(&g, &mut avg, axis, |line| centered_box_mean(line, h));
        }
        best.iter_mut().zip(&avg).for_each(|(b, a)| *b = b.max(*a));
        h *= 2;
    }
    let values = best.into_iter().map(|v| Complex64::new(v.max(0.0).powf(1.0 / t), 0.0)).collect();
    f.with_new_values(values).with_carrier(&vec![0.0; g.dims()])
}

fn beta_integer_first(n: usize, b: f64) -> f64 {
    let mut den = 1.0;
    for i in 0..n {
        den *= b + i as f64;
    }
    (1..n).map(|k| k as f64).product::<f64>() / den
}

/// `int_{R^n} (1 + a|y|)^(-q) dy`.
fn weight_integral(n: usize, a: f64, q: f64) -> f64 {
    sphere_area(n) * a.powi(-(n as i32)) * beta_integer_first(n, q - n as f64)
}

fn lag_values(g: &Grid, k: usize, out: &mut [f64]) {
    let p = g.points();
    let mut idx = [0usize; MAX_DIMS];
    g.unflatten(k, &mut idx);
    for a in 0..g.dims() {
        let l = idx[a] as i64;
        let signed = if l >= (p / 2) as i64 { l - p as i64 } else { l };
        out[a] = signed as f64 * g.spacing();
    }
}

/// Cell-averaged periodised weight `(1 + a|y|)^(-q)` in lag order; sums to the exact integral.
fn peetre_weight(g: &Grid, a: f64, q: f64) -> Vec<f64> {
    let n = g.dims();
    let dx = g.spacing();
    if n == 1 {
        let winf = 1.0 / (a * (q - 1.0));
        let prim = |y: f64| y.signum() * (1.0 - (1.0 + a * y.abs()).powf(1.0 - q)) * winf;
        let l = g.box_length();
        let covered = prim(2.5 * l - 0.5 * dx) - prim(-2.5 * l - 0.5 * dx);
        let tail_density = (2.0 * winf - covered).max(0.0) / l;
        return (0..g.points())
            .map(|k| {
                let mut y = [0.0];
                lag_values(g, k, &mut y);
                let mass: f64 = (-2..=2)
                    .map(|pp| {
                        let c = y[0] + pp as f64 * l;
                        prim(c + 0.5 * dx) - prim(c - 0.5 * dx)
                    })
                    .sum();
                mass / dx + tail_density
            })
            .collect();
    }
    let mut w: Vec<f64> = (0..g.len())
        .map(|k| {
            let mut y = [0.0; MAX_DIMS];
            lag_values(g, k, &mut y);
            let rho = y[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            (1.0 + a * rho).powf(-q)
        })
        .collect();
    let total: f64 = w.iter().sum::<f64>() * dx.powi(n as i32);
    let scale = weight_integral(n, a, q) / total;
    w.iter_mut().for_each(|v| *v *= scale);
    w
}

/// Generalised Peetre maximal function `2^(jn/t) ||f(x - .) / (1 + 2^j|.|)^s||_t`;
/// `t = inf` gives the weighted sliding maximum.
pub fn peetre_maximal(f: &Field, s: f64, j: i32, t: f64) -> Result<Field> {
    if !(s > 0.0 && s.is_finite()) || t.is_nan() || t <= 0.0 {
        return invalid(format!("peetre maximal needs s > 0 and t > 0, got s={s}, t={t}"));
    }
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical" });
    }
    let g = *f.grid();
    let n = g.dims();
    let w = ScaleWindow::resolvable(&g)?;
    if !w.contains(j) {
        return Err(Error::ScaleOutOfWindow { j, j_min: w.j_min, j_max: w.j_max });
    }
    let a = (j as f64).exp2();
    let zero_carrier = vec![0.0; n];
    if t.is_infinite() {
        return f.with_new_values(sliding_weighted_max(f, a, s)).with_carrier(&zero_carrier);
    }
    if s * t <= n as f64 {
        return invalid(format!("weight not integrable: need s*t > {n}, got {}", s * t));
    }
    let weight = peetre_weight(&g, a, s * t);
    let mut wh: Vec<Complex64> = weight.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fh: Vec<Complex64> = f.values().iter().map(|v| Complex64::new(v.norm().powf(t), 0.0)).collect();
    fft_nd(&g, &mut wh, FftDirection::Forward);
    fft_nd(&g, &mut fh, FftDirection::Forward);
    fh.par_iter_mut().zip(wh.par_iter()).for_each(|(x, y)| *x *= y);
    fft_nd(&g, &mut fh, FftDirection::Inverse);
    let scale = g.spacing().powi(n as i32) / g.len() as f64;
    let pre = (j as f64 * n as f64 / t).exp2();
    let values = fh.into_iter().map(|v| Complex64::new(pre * (v.re * scale).max(0.0).powf(1.0 / t), 0.0)).collect();
    f.with_new_values(values).with_carrier(&zero_carrier)
}

fn max_ratio(num: &Field, den: &Field) -> f64 {
    num.values()
        .iter()
        .zip(den.values())
        .filter(|(_, d)| d.norm() > 0.0)
        .fold(0.0f64, |m, (a, b)| m.max(a.norm() / b.norm()))
}

/// `max_x M^t_(s,2^j) f(x) / M_t f(x)`, the constant with which the Hardy-Littlewood maximal
/// function dominates the Peetre maximal function at scale `j`.
pub fn domination_constant(f: &Field, s: f64, j: i32, t: f64) -> Result<f64> {
    Ok(max_ratio(&peetre_maximal(f, s, j, t)?, &hl_maximal(f, t)?))
}

/// `max_x M^r_(s,2^j)(M^t_(s,2^j) f)(x) / M^t_(s,2^j) f(x)` for `t <= r`.
pub fn composition_constant(f: &Field, s: f64, j: i32, t: f64, r: f64) -> Result<f64> {
    if t.is_nan() || r.is_nan() || t > r {
        return invalid(format!("composition needs t <= r, got t={t}, r={r}"));
    }
    let inner = peetre_maximal(f, s, j, t)?;
    Ok(max_ratio(&peetre_maximal(&inner, s, j, r)?, &inner))
}

fn sliding_weighted_max(f: &Field, a: f64, s: f64) -> Vec<Complex64> {
    let g = f.grid();
    let n = g.dims();
    let p = g.points();
    let abs: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let fmax = abs.iter().cloned().fold(0.0, f64::max);
    let mut offsets: Vec<(f64, usize)> = (0..g.len())
        .map(|k| {
            let mut y = [0.0; MAX_DIMS];
            lag_values(g, k, &mut y);
            ((1.0 + a * y[..n].iter().map(|v| v * v).sum::<f64>().sqrt()).powf(-s), k)
        })
        .collect();
    offsets.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    (0..g.len())
        .into_par_iter()
        .map(|x| {
            let mut xi = [0usize; MAX_DIMS];
            g.unflatten(x, &mut xi);
            let mut best = 0.0f64;
            for &(w, k) in &offsets {
                if fmax * w <= best {
                    break;
                }
                let mut li = [0usize; MAX_DIMS];
                g.unflatten(k, &mut li);
                let mut src = [0usize; MAX_DIMS];
                for d in 0..n {
                    src[d] = (xi[d] + p - li[d]) % p;
                }
                best = best.max(abs[g.flatten(&src[..n])] * w);
            }
            Complex64::new(best, 0.0)
        })
        .collect()
}

fn ensure_spectral(f: &Field) -> Result<Field> {
    match f.space() {
        Space::Physical => forward_ft(f),
        Space::Spectral => Ok(f.clone()),
    }
}

/// `||sup_j |phi_j * f| ||_p` over [`ScaleWindow::for_field`]; `argmax_j` is the smallest
/// scale whose individual norm `||phi_j * f||_p` is maximal.
pub fn hardy_norm(f: &Field, p: f64) -> Result<NormReport> {
    check_exponent(p)?;
    let fh = ensure_spectral(f)?;
    let window = ScaleWindow::for_field(&fh)?;
    let phi = FrameFamily::phi();
    let mut sup = vec![0.0f64; fh.grid().len()];
    let mut per = Vec::with_capacity(window.len());
    for j in window.iter() {
        let part = inverse_ft(&fh.weighted(|xi| phi.hat(xi, j)))?;
        per.push(lp_norm(&part, p)?);
        sup.par_iter_mut().zip(part.values().par_iter()).for_each(|(s, v)| *s = s.max(v.norm()));
    }
    let sup_field = Field::from_values(*fh.grid(), Space::Physical, sup.into_iter().map(|v| Complex64::new(v, 0.0)).collect())?;
    let mut report = NormReport::from_scales(window, per, fh.grid());
    report.value = lp_norm(&sup_field, p)?;
    Ok(report)
}

/// Scales `j` whose annulus `2^(j-1) < |xi| < 2^(j+1)` meets the nonzero frequencies of the lattice.
pub fn covering_window(fh: &Field) -> Result<ScaleWindow> {
    let g = fh.grid();
    let d = g.dims();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut xi = [0.0; MAX_DIMS];
    for k in 0..g.len() {
        fh.point(k, &mut xi);
        let r = xi[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if r >= 0.5 * g.freq_step() {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if lo.is_infinite() {
        return Err(Error::EmptyWindow);
    }
    ScaleWindow::new(lo.log2().floor() as i32 - 1, hi.log2().ceil() as i32 + 1)
}

/// `||(sum_j |psi_j * f|^2)^(1/2)||_p` over [`covering_window`].
pub fn square_function_norm(f: &Field, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let fh = ensure_spectral(f)?;
    let g = *fh.grid();
    let d = g.dims();
    let l2 = lp_norm(&fh, 2.0)?;
    let mut xi = [0.0; MAX_DIMS];
    let mut zero_mass = 0.0f64;
    for (k, v) in fh.values().iter().enumerate() {
        fh.point(k, &mut xi);
        if xi[..d].iter().map(|x| x * x).sum::<f64>().sqrt() < 0.5 * g.freq_step() {
            zero_mass = zero_mass.max(v.norm());
        }
    }
    if zero_mass * g.freq_step().powf(0.5 * d as f64) > 1e-10 * l2 {
        return Err(Error::NonzeroMean { mean: zero_mass / g.box_length().powi(d as i32) });
    }
    let window = covering_window(&fh)?;
    let psi = FrameFamily::psi();
    let mut acc = vec![0.0f64; g.len()];
    for j in window.iter() {
        let part = inverse_ft(&fh.weighted(|xi| psi.hat(xi, j)))?;
        acc.par_iter_mut().zip(part.values().par_iter()).for_each(|(a, v)| *a += v.norm_sqr());
    }
    let field = Field::from_values(g, Space::Physical, acc.into_iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect())?;
    lp_norm(&field, p)
}

/// `min_xi (sum_j psi^(xi / 2^j)^2)^(1/2)` over the annulus `1 <= |xi| <= 2`.
pub fn square_frame_lower_bound() -> f64 {
    let psi = FrameFamily::psi();
    (0..=4096)
        .map(|k| {
            let rho = 1.0 + k as f64 / 4096.0;
            (-2..=2).map(|j| psi.hat(&[rho], j).powi(2)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Dyadic mean oscillation `sup_Q avg_Q |f - avg_Q f|` over grid-aligned cubes of side `2^k` cells.
pub fn bmo_seminorm(f: &Field) -> Result<f64> {
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical" });
    }
    let g = *f.grid();
    let d = g.dims();
    let carrier = f.carrier().to_vec();
    let vals: Vec<Complex64> = if f.has_carrier() {
        let mut x = [0.0; MAX_DIMS];
        f.values()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                f.point(k, &mut x);
                let ph: f64 = (0..d).map(|a| carrier[a] * x[a]).sum();
                v * Complex64::from_polar(1.0, 2.0 * PI * ph)
            })
            .collect()
    } else {
        f.values().to_vec()
    };
    let p = g.points();
    let mut best = 0.0f64;
    let mut side = 2;
    while side <= p {
        let per_axis = p / side;
        let cubes = per_axis.pow(d as u32);
        let osc = (0..cubes)
            .into_par_iter()
            .map(|c| {
                let mut corner = [0usize; MAX_DIMS];
                let mut rest = c;
                for a in (0..d).rev() {
                    corner[a] = (rest % per_axis) * side;
                    rest /= per_axis;
                }
                let members = cube_members(&g, &corner[..d], side);
                let mean = members.iter().map(|&k| vals[k]).sum::<Complex64>() / members.len() as f64;
                members.iter().map(|&k| (vals[k] - mean).norm()).sum::<f64>() / members.len() as f64
            })
            .reduce(|| 0.0, f64::max);
        best = best.max(osc);
        side *= 2;
    }
    Ok(best)
}

fn cube_members(g: &Grid, corner: &[usize], side: usize) -> Vec<usize> {
    let d = corner.len();
    let count = side.pow(d as u32);
    (0..count)
        .map(|c| {
            let mut idx = [0usize; MAX_DIMS];
            let mut rest = c;
            for a in (0..d).rev() {
                idx[a] = corner[a] + rest % side;
                rest /= side;
            }
            g.flatten(&idx[..d])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_real, sample_spectrum};
    use crate::lp_frames::psi_hat;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(g: Grid) -> Field {
        sample_real(g, |x| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp()).unwrap()
    }

    fn band_limited(g: Grid, seed: u64, band: f64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<Complex64> =
            (0..g.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let d = g.dims();
        let spec = Field::zeros(g, Space::Spectral);
        let values = spec
            .values()
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let mut xi = [0.0; MAX_DIMS];
                spec.point(i, &mut xi);
                let r = xi[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
                if r <= band {
                    coef[i] * (1.0 - r / band)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        inverse_ft(&Field::from_values(g, Space::Spectral, values).unwrap()).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn sobolev_zero_order_is_lp() {
        let f = gaussian(make_grid(2, 32, 8.0).unwrap());
        assert_eq!(product_sobolev_norm(&f, 2, 1.5, &[0.0, 0.0]).unwrap(), lp_norm(&f, 1.5).unwrap());
        assert_eq!(standard_sobolev_norm(&f, 1.5, 0.0).unwrap(), lp_norm(&f, 1.5).unwrap());
        assert!(product_sobolev_norm(&f, 2, 0.0, &[1.0, 1.0]).is_err());
        assert!(standard_sobolev_norm(&f, -1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_sobolev_matches_quadrature() {
        let f = gaussian(make_grid(1, 256, 16.0).unwrap());
        let got = product_sobolev_norm(&f, 1, 2.0, &[2.0]).unwrap();
        let oracle = simpson(
            |xi| (1.0 + 4.0 * PI * PI * xi * xi).powi(2) * (-2.0 * PI * xi * xi).exp(),
            -8.0,
            8.0,
            20000,
        )
        .sqrt();
        assert!((got - oracle).abs() < 1e-6 * oracle, "{got} {oracle}");
    }

    #[test]
    fn plancherel_oracle_at_r2() {
        let g = make_grid(2, 32, 8.0).unwrap();
        let f = band_limited(g, 3, 1.5);
        let fh = forward_ft(&f).unwrap();
        let mut xi = [0.0; 2];
        let sum: f64 = fh
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                fh.point(k, &mut xi);
                v.norm_sqr() * bracket(&xi[..1]).powf(2.0) * bracket(&xi[1..]).powf(1.0)
            })
            .sum();
        let oracle = (sum * g.freq_step().powi(2)).sqrt();
        let got = product_sobolev_norm(&f, 2, 2.0, &[1.0, 0.5]).unwrap();
        assert!((got - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn product_dominated_by_standard() {
        let g = make_grid(2, 64, 16.0).unwrap();
        for seed in 0..4 {
            let f = band_limited(g, seed, 1.5);
            let prod = product_sobolev_norm(&f, 2, 2.0, &[1.0, 1.0]).unwrap();
            let std = standard_sobolev_norm(&f, 2.0, 2.0).unwrap();
            assert!(prod <= std * (1.0 + 1e-12));
            let prod = product_sobolev_norm(&f, 2, 1.5, &[1.0, 1.0]).unwrap();
            let std = standard_sobolev_norm(&f, 1.5, 2.0).unwrap();
            assert!(prod / std < 1.5, "{}", prod / std);
        }
    }

    #[test]
    fn hormander_constant_symbol() {
        let fg = make_grid(1, 512, 64.0).unwrap();
        let psi = FrameFamily::psi_m(2);
        let sigma = Symbol::from_fn(fg, 2, &[0.0, 0.0], |_| Complex64::new(2.0, 0.0)).unwrap();
        let rep = hormander_functional(&sigma, &psi, 2.0, &[1.0, 1.0]).unwrap();
        let fine = make_grid(2, 512, 16.0).unwrap();
        let reference =
            product_sobolev_norm(&sample_real(fine, |x| psi.hat(x, 0)).unwrap(), 2, 2.0, &[1.0, 1.0]).unwrap();
        assert!(rep.window.len() >= 2);
        for v in &rep.per_scale {
            assert!((v - 2.0 * reference).abs() < 1e-4 * reference, "{v} {reference}");
            assert!((v - rep.per_scale[0]).abs() < 1e-4 * v);
        }
    }

    #[test]
    fn hormander_of_frame_itself() {
        let fg = make_grid(1, 256, 32.0).unwrap();
        let psi = FrameFamily::psi_m(2);
        let sigma = Symbol::from_fn(fg, 2, &[0.0, 0.0], |xi| Complex64::new(psi_hat(xi, 0), 0.0)).unwrap();
        let rep = hormander_functional(&sigma, &psi, 2.0, &[1.0, 1.0]).unwrap();
        assert_eq!(rep.argmax_j, 0);
        for (j, v) in rep.window.iter().zip(&rep.per_scale) {
            if j.abs() >= 2 {
                assert_eq!(*v, 0.0);
            }
        }
        for j in -1..=1 {
            let g = sigma.frequency_grid(j).unwrap();
            let p = g.points();
            let vals: Vec<Complex64> = sigma
                .dense_values()
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let mut xi = [0.0; 2];
                    sigma.freq_vector(k, &mut xi);
                    v * psi.hat(&xi, j)
                })
                .collect();
            let h = g.spacing();
            let dft = |k: usize, axis_vals: &dyn Fn(usize) -> Complex64| -> Complex64 {
                (0..p)
                    .map(|i| {
                        let x = g.coord(i);
                        axis_vals(i) * Complex64::from_polar(h, -2.0 * PI * x * g.freq(k))
                    })
                    .sum()
            };
            let mut rows = vec![Complex64::new(0.0, 0.0); p * p];
            for a in 0..p {
                for k in 0..p {
                    rows[a * p + k] = dft(k, &|i| vals[a * p + i]);
                }
            }
            let mut sum = 0.0;
            for k1 in 0..p {
                for k2 in 0..p {
                    let v = dft(k1, &|i| rows[i * p + k2]);
                    let w = bracket(&[g.freq(k1)]) * bracket(&[g.freq(k2)]);
                    sum += v.norm_sqr() * w * w;
                }
            }
            let oracle = (sum * g.freq_step().powi(2)).sqrt();
            let k = (j - rep.window.j_min) as usize;
            assert!((rep.per_scale[k] - oracle).abs() < 1e-9 * oracle, "{j}: {} {oracle}", rep.per_scale[k]);
        }
    }

    #[test]
    fn hormander_block_fast_path_matches_dense() {
        let fg = make_grid(1, 128, 8.0).unwrap();
        let bump = crate::lp_frames::build_cutoff(0.05, 0.2).unwrap();
        let b1 = Symbol::block_values(&fg, 1, &[1.0], |x| Complex64::new(bump.eval(x[0] - 1.0), 0.0)).unwrap();
        let b2 = Symbol::block_values(&fg, 1, &[0.0], |x| Complex64::new(bump.eval(x[0]), 0.0)).unwrap();
        let sigma = Symbol::from_blocks(fg, &[1.0, 0.0], vec![(1, b1), (1, b2)]).unwrap();
        let psi = FrameFamily::psi_m(2);
        let fast = hormander_functional(&sigma, &psi, 1.5, &[0.5, 1.0]).unwrap();
        let dense = hormander_functional(&sigma.to_dense(), &psi, 1.5, &[0.5, 1.0]).unwrap();
        assert_eq!(fast.argmax_j, 0);
        assert_eq!(fast.window, dense.window);
        assert!((fast.value - dense.value).abs() < 1e-9 * dense.value, "{} {}", fast.value, dense.value);
    }

    #[test]
    fn hl_spike_and_constant() {
        let g = make_grid(1, 256, 256.0).unwrap();
        let c = sample_real(g, |_| 3.0).unwrap();
        assert!(hl_maximal(&c, 1.0).unwrap().values().iter().all(|v| (v.re - 3.0).abs() < 1e-12));
        let spike = sample_real(g, |x| if x[0] == 0.0 { 1.0 } else { 0.0 }).unwrap();
        let m = hl_maximal(&spike, 1.0).unwrap();
        let v = m.values()[128 + 8].re;
        assert!((1.0 / 32.0..=1.0 / 8.0).contains(&v), "{v}");
        assert_eq!(m.values()[128].re, 1.0);
    }

    #[test]
    fn peetre_constant_closed_form() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        let c = sample_real(g, |_| 1.7).unwrap();
        let w = ScaleWindow::resolvable(&g).unwrap();
        for j in w.iter() {
            let out = peetre_maximal(&c, 2.0, j, 1.0).unwrap();
            for v in out.values() {
                assert!((v.re - 3.4).abs() < 1e-9, "{j}: {}", v.re);
            }
        }
        assert!(peetre_maximal(&c, 1.0, 0, 1.0).is_err());
        assert!(peetre_maximal(&c, 2.0, 40, 1.0).is_err());
    }

    #[test]
    fn domination_and_composition_of_constant() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        let c = sample_real(g, |_| 0.3).unwrap();
        for j in [-2, 0, 1] {
            let d = domination_constant(&c, 2.0, j, 1.0).unwrap();
            assert!((d - 2.0).abs() < 1e-9, "{j}: {d}");
            assert!((composition_constant(&c, 2.0, j, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-9);
        }
        assert!(composition_constant(&c, 2.0, 0, 2.0, 1.0).is_err());
    }

    #[test]
    fn domination_bounded_for_band_limited() {
        let g = make_grid(1, 512, 64.0).unwrap();
        let f = band_limited(g, 4, 1.0);
        let d = domination_constant(&f, 2.0, 0, 1.0).unwrap();
        assert!(d > 0.0 && d < 20.0, "{d}");
    }

    #[test]
    fn peetre_constant_in_two_dimensions() {
        let g = make_grid(2, 128, 32.0).unwrap();
        let c = sample_real(g, |_| 1.0).unwrap();
        let out = peetre_maximal(&c, 2.0, -1, 2.0).unwrap();
        let expect = 0.5 * weight_integral(2, 0.5, 4.0).sqrt();
        assert!((out.values()[77].re - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn peetre_sup_dominates_modulus() {
        let g = make_grid(1, 256, 32.0).unwrap();
        let f = band_limited(g, 9, 2.0);
        let m = peetre_maximal(&f, 1.5, 0, f64::INFINITY).unwrap();
        for (a, b) in m.values().iter().zip(f.values()) {
            assert!(a.re >= b.norm());
        }
    }

    #[test]
    fn hardy_of_gaussian_near_l2() {
        let f = gaussian(make_grid(1, 1024, 64.0).unwrap());
        let rep = hardy_norm(&f, 2.0).unwrap();
        let q = rep.value / lp_norm(&f, 2.0).unwrap();
        assert!((1.0..1.5).contains(&q), "{q}");
    }

    #[test]
    fn hardy_argmax_tracks_annulus() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        for j0 in -1..=2 {
            let fh = sample_spectrum(g, &[0.0], |xi| Complex64::new(psi_hat(xi, j0), 0.0)).unwrap();
            let rep = hardy_norm(&fh, 2.0).unwrap();
            assert!((j0 - 1..=j0 + 2).contains(&rep.argmax_j), "{j0}: {}", rep.argmax_j);
        }
    }

    #[test]
    fn hardy_dilation() {
        let g = make_grid(1, 4096, 128.0).unwrap();
        let f = sample_real(g, |x| (-PI * x[0] * x[0] / 4.0).exp() * (0.5 * PI * x[0] * x[0] - 1.0)).unwrap();
        let f2 = sample_real(g, |x| (-PI * x[0] * x[0]).exp() * (2.0 * PI * x[0] * x[0] - 1.0)).unwrap();
        for p in [1.0, 2.0] {
            let a = hardy_norm(&f, p).unwrap().value;
            let b = hardy_norm(&f2, p).unwrap().value;
            assert!((b / a / 2f64.powf(-1.0 / p) - 1.0).abs() < 0.02, "{p}: {}", b / a);
        }
    }

    #[test]
    fn square_function_l2_frame_bounds() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        let f = sample_real(g, |x| -2.0 * PI * x[0] * (-PI * x[0] * x[0]).exp()).unwrap();
        let q = square_function_norm(&f, 2.0).unwrap() / lp_norm(&f, 2.0).unwrap();
        let c = square_frame_lower_bound();
        assert!(c > 0.7);
        assert!(q >= c - 1e-12 && q <= 1.0 + 1e-12, "{q} {c}");
        assert!(matches!(square_function_norm(&gaussian(g), 2.0), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn square_function_single_annulus() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        let fh = sample_spectrum(g, &[0.0], |xi| Complex64::new(psi_hat(xi, 1), 0.0)).unwrap();
        let f = inverse_ft(&fh).unwrap();
        let q = square_function_norm(&f, 1.5).unwrap() / lp_norm(&f, 1.5).unwrap();
        assert!((0.5..=1.5).contains(&q), "{q}");
    }

    #[test]
    fn bmo_examples() {
        let g = make_grid(1, 256, 16.0).unwrap();
        assert_eq!(bmo_seminorm(&sample_real(g, |_| 4.0).unwrap()).unwrap(), 0.0);
        let s = sample_real(g, |x| x[0].signum()).unwrap();
        assert!((bmo_seminorm(&s).unwrap() - 1.0).abs() < 1e-15);
        let f = band_limited(g, 2, 3.0);
        assert!(bmo_seminorm(&f).unwrap() <= 2.0 * f.max_abs());
    }

    #[test]
    fn report_row_format() {
        let rep = NormReport::from_scales(ScaleWindow::new(-1, 1).unwrap(), vec![1.0, 2.0, 2.0], &make_grid(1, 8, 8.0).unwrap());
        assert_eq!(rep.argmax_j, 0);
        assert!(rep.is_interior());
        assert_eq!(rep.csv_row("x"), "x,2.000000000000e0,-1,1,0,8,8");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn hormander_homogeneous(c in 0.01f64..10.0, seed in 0u64..100) {
            let fg = make_grid(1, 256, 16.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<Complex64> = (0..256 * 256).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let sigma = Symbol::from_values(fg, 2, &[0.0, 0.0], vals).unwrap();
            let psi = FrameFamily::psi_m(2);
            let a = hormander_functional(&sigma, &psi, 1.5, &[1.0, 1.0]).unwrap().value;
            let b = hormander_functional(&sigma.scaled(Complex64::new(0.0, c)), &psi, 1.5, &[1.0, 1.0]).unwrap().value;
            prop_assert!((b - c * a).abs() <= 1e-12 * c * a);
        }

        #[test]
        fn maximal_operators_sublinear(seed in 0u64..1000) {
            let g = make_grid(1, 128, 16.0).unwrap();
            let f = band_limited(g, seed, 2.0);
            let h = band_limited(g, seed + 7, 2.0);
            let sum = f.with_new_values(f.values().iter().zip(h.values()).map(|(a, b)| a + b).collect());
            let ops: Vec<Box<dyn Fn(&Field) -> Field>> = vec![
                Box::new(|x| hl_maximal(x, 1.0).unwrap()),
                Box::new(|x| peetre_maximal(x, 2.0, 0, 1.0).unwrap()),
                Box::new(|x| peetre_maximal(x, 2.0, 0, f64::INFINITY).unwrap()),
            ];
            for op in &ops {
                let (a, b, c) = (op(&sum), op(&f), op(&h));
                for k in 0..g.len() {
                    prop_assert!(a.values()[k].re <= (b.values()[k].re + c.values()[k].re) * (1.0 + 1e-9) + 1e-12);
                }
            }
        }

        #[test]
        fn sobolev_monotone_in_order(seed in 0u64..1000, ds in 0.0f64..1.0) {
            let g = make_grid(1, 128, 16.0).unwrap();
            let f = band_limited(g, seed, 2.0);
            let a = product_sobolev_norm(&f, 1, 2.0, &[0.5]).unwrap();
            let b = product_sobolev_norm(&f, 1, 2.0, &[0.5 + ds]).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-12));
        }

        #[test]
        fn hl_monotone(seed in 0u64..1000) {
            let g = make_grid(1, 128, 16.0).unwrap();
            let f = band_limited(g, seed, 2.0).abs();
            let big = f.map(|v| v * 1.5 + 0.1);
            let (a, b) = (hl_maximal(&f, 2.0).unwrap(), hl_maximal(&big, 2.0).unwrap());
            for k in 0..g.len() {
                prop_assert!(a.values()[k].re <= b.values()[k].re);
            }
        }
    }
}

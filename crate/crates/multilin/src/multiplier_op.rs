//! Multilinear multiplier operators `T_sigma(f_1, ..., f_m)` and the dyadic decompositions
//! of their symbols.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{forward_ft, inverse_ft, Field, Grid, Space, Symbol, MAX_DIMS};
use crate::lp_frames::{phi_hat, psi_hat, FrameFamily};
use crate::norms::{peetre_maximal, product_sobolev_norm};

const CHUNKS: usize = 64;

/// Output of [`apply_multiplier_counted`].
#[derive(Debug, Clone)]
pub struct Application {
    pub output: Field,
    /// Number of nonzero product terms whose output frequency wrapped around the lattice.
    pub wrapped_terms: u64,
}

struct Sparse {
    axes: Vec<[usize; MAX_DIMS]>,
    flat: Vec<usize>,
    values: Vec<Complex64>,
}

fn sparse(fh: &Field) -> Sparse {
    let g = fh.grid();
    let mut out = Sparse { axes: Vec::new(), flat: Vec::new(), values: Vec::new() };
    for (k, v) in fh.values().iter().enumerate() {
        if *v != Complex64::new(0.0, 0.0) {
            let mut idx = [0usize; MAX_DIMS];
            g.unflatten(k, &mut idx);
            out.axes.push(idx);
            out.flat.push(k);
            out.values.push(*v);
        }
    }
    out
}

/// `T_sigma(f_1, ..., f_m)`; see [`apply_multiplier_counted`].
pub fn apply_multiplier(sigma: &Symbol, inputs: &[Field]) -> Result<Field> {
    Ok(apply_multiplier_counted(sigma, inputs)?.output)
}

/// Computes `H(eta) = sum_{xi_1 + ... + xi_m = eta} sigma(xi) f^_1(xi_1) ... f^_m(xi_m)` over
/// the nonzero input bins and inverts it on the factor grid.
///
/// Input `k` must live on the factor grid with carrier equal to the symbol center of
/// factor `k`; the output carries the sum of the input carriers. Output frequencies
/// outside the lattice wrap periodically and are counted.
pub fn apply_multiplier_counted(sigma: &Symbol, inputs: &[Field]) -> Result<Application> {
    let m = sigma.m();
    if inputs.len() != m {
        return invalid(format!("symbol is {m}-linear, got {} inputs", inputs.len()));
    }
    let fg = *sigma.factor();
    let n = fg.dims();
    let p = fg.points();
    let mut spectra = Vec::with_capacity(m);
    for (k, f) in inputs.iter().enumerate() {
        if *f.grid() != fg {
            return Err(Error::GridMismatch(format!("input {k} is not on the symbol's factor grid")));
        }
        let c = &sigma.center()[k * n..(k + 1) * n];
        if f.carrier().iter().zip(c).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
            return Err(Error::GridMismatch(format!(
                "input {k} carrier {:?} differs from symbol center {c:?}",
                f.carrier()
            )));
        }
        spectra.push(match f.space() {
            Space::Physical => forward_ft(f)?,
            Space::Spectral => f.clone(),
        });
    }
    let lists: Vec<Sparse> = spectra.iter().map(sparse).collect();
    let shift = (m - 1) * (p / 2);
    let first = &lists[0];
    let chunk = first.values.len().div_ceil(CHUNKS).max(1);
    let partials: Vec<(Vec<Complex64>, u64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Complex64::new(0.0, 0.0); fg.len()];
            let mut wrapped = 0u64;
            let lo = (c * chunk).min(first.values.len());
            let hi = ((c + 1) * chunk).min(first.values.len());
            let mut fi = [0usize; MAX_DIMS];
            let mut sum = [0usize; MAX_DIMS];
            for e in lo..hi {
                fi[0] = first.flat[e];
                sum[..n].copy_from_slice(&first.axes[e][..n]);
                accumulate(sigma, &lists, 1, first.values[e], &mut fi, &mut sum, shift, p, n, &fg, &mut acc, &mut wrapped);
            }
            (acc, wrapped)
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); fg.len()];
    let mut wrapped_terms = 0;
    for (acc, w) in partials {
        total.iter_mut().zip(acc).for_each(|(t, a)| *t += a);
        wrapped_terms += w;
    }
    let scale = fg.freq_step().powi((n * (m - 1)) as i32);
    total.iter_mut().for_each(|v| *v *= scale);
    let carrier: Vec<f64> = (0..n).map(|a| (0..m).map(|k| sigma.center()[k * n + a]).sum()).collect();
    let out = Field::from_values(fg, Space::Spectral, total)?.with_carrier(&carrier)?;
    Ok(Application { output: inverse_ft(&out)?, wrapped_terms })
}

#[allow(clippy::too_many_arguments)]
fn accumulate(
    sigma: &Symbol,
    lists: &[Sparse],
    k: usize,
    prod: Complex64,
    fi: &mut [usize; MAX_DIMS],
    sum: &mut [usize; MAX_DIMS],
    shift: usize,
    p: usize,
    n: usize,
    fg: &Grid,
    acc: &mut [Complex64],
    wrapped: &mut u64,
) {
    if k == lists.len() {
        let v = sigma.value_at(&fi[..lists.len()]);
        if v == Complex64::new(0.0, 0.0) {
            return;
        }
        let mut out = [0usize; MAX_DIMS];
        let mut wrap = false;
        for a in 0..n {
            let raw = sum[a] as i64 - shift as i64;
            wrap |= raw < 0 || raw >= p as i64;
            out[a] = raw.rem_euclid(p as i64) as usize;
        }
        if wrap {
            *wrapped += 1;
        }
        acc[fg.flatten(&out[..n])] += v * prod;
        return;
    }
    let list = &lists[k];
    let saved = *sum;
    for e in 0..list.values.len() {
        fi[k] = list.flat[e];
        for a in 0..n {
            sum[a] = saved[a] + list.axes[e][a];
        }
        accumulate(sigma, lists, k + 1, prod * list.values[e], fi, sum, shift, p, n, fg, acc, wrapped);
    }
    *sum = saved;
}

/// `sigma_j(xi) = sigma(xi) Theta^(xi / 2^j)`.
pub fn localize_symbol(sigma: &Symbol, theta: &FrameFamily, j: i32) -> Symbol {
    sigma.map_dense(|xi, v| v * theta.hat(xi, j))
}

/// Dyadic scales `[j0, j1]` spanning every nonzero factor frequency of the symbol lattice.
pub fn kappa_scale_range(sigma: &Symbol) -> (i32, i32) {
    let fg = sigma.factor();
    let n = fg.dims();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let pg = Grid::new(n, fg.points(), fg.box_length()).expect("factor grid");
    for k in 0..sigma.m() {
        let c = &sigma.center()[k * n..(k + 1) * n];
        let mut idx = [0usize; MAX_DIMS];
        for q in 0..pg.len() {
            pg.unflatten(q, &mut idx);
            let r = (0..n).map(|a| (c[a] + fg.freq(idx[a])).powi(2)).sum::<f64>().sqrt();
            if r > 0.0 {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    (lo.log2().floor() as i32 - 1, hi.log2().ceil() as i32)
}

fn factor_radii(sigma: &Symbol, flat: usize) -> [f64; MAX_DIMS] {
    let n = sigma.factor().dims();
    let mut xi = [0.0; MAX_DIMS];
    sigma.freq_vector(flat, &mut xi);
    let mut r = [0.0; MAX_DIMS];
    for k in 0..sigma.m() {
        r[k] = xi[k * n..(k + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    r
}

/// The partition `sigma = sigma^(1) + ... + sigma^(m)` by which input carries the largest
/// dyadic scale:
/// `sigma^(k) = sigma sum_j psi^_j(xi_k) prod_{i<k} phi^_{j-1}(xi_i) prod_{i>k} phi^_j(xi_i)`.
pub fn kappa_decompose(sigma: &Symbol) -> Result<Vec<Symbol>> {
    let m = sigma.m();
    let (j0, j1) = kappa_scale_range(sigma);
    let dense = sigma.dense_values();
    let norm = sigma.norm_l2();
    let h = sigma.factor().freq_step().powi(sigma.total_dims() as i32);
    let origin: f64 = dense
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let r = factor_radii(sigma, k);
            let w: f64 = (0..m).map(|i| phi_hat(&[r[i]], j0 - 1)).product();
            (v * w).norm_sqr()
        })
        .sum::<f64>();
    let mass = (origin * h).sqrt();
    if mass > 1e-12 * norm {
        return Err(Error::UnresolvableMass { mass, limit: 1e-12 * norm });
    }
    let parts = (0..m)
        .map(|kappa| {
            let values = dense
                .par_iter()
                .enumerate()
                .map(|(k, v)| {
                    if *v == Complex64::new(0.0, 0.0) {
                        return *v;
                    }
                    let r = factor_radii(sigma, k);
                    let w: f64 = (j0..=j1)
                        .map(|j| {
                            let mut t = psi_hat(&[r[kappa]], j);
                            for (i, &ri) in r.iter().enumerate().take(m) {
                                if i < kappa {
                                    t *= phi_hat(&[ri], j - 1);
                                } else if i > kappa {
                                    t *= phi_hat(&[ri], j);
                                }
                            }
                            t
                        })
                        .sum();
                    v * w
                })
                .collect();
            Symbol::from_values(*sigma.factor(), m, sigma.center(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts)
}

/// Scale gap `4 + floor(log2 m)` between the leading input and the others in the high part.
pub fn low_high_threshold(m: usize) -> i32 {
    4 + (m as f64).log2().floor() as i32
}

fn high_weight(r: &[f64; MAX_DIMS], m: usize, j: i32, gap: i32) -> f64 {
    let mut t = psi_hat(&[r[0]], j);
    for &ri in r.iter().take(m).skip(1) {
        t *= phi_hat(&[ri], j - gap);
    }
    t
}

/// The scale-`j` term `sigma psi^_j(xi_1) prod_{i>=2} phi^_{j-gap}(xi_i)` of the high part.
pub fn high_term(sigma: &Symbol, j: i32) -> Symbol {
    let m = sigma.m();
    let gap = low_high_threshold(m);
    let values = sigma
        .dense_values()
        .par_iter()
        .enumerate()
        .map(|(k, v)| v * high_weight(&factor_radii(sigma, k), m, j, gap))
        .collect();
    Symbol::from_values(*sigma.factor(), m, sigma.center(), values).expect("same shape")
}

/// Splits `sigma^(1)` of `sigma` into `(low, high)`, where the high part keeps the scales
/// `j_2, ..., j_m <= j - 4 - floor(log2 m)`.
pub fn low_high_split(sigma: &Symbol) -> Result<(Symbol, Symbol)> {
    let m = sigma.m();
    let first = kappa_decompose(sigma)?.swap_remove(0);
    let (j0, j1) = kappa_scale_range(sigma);
    let gap = low_high_threshold(m);
    let dense = sigma.dense_values();
    let high: Vec<Complex64> = dense
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            if *v == Complex64::new(0.0, 0.0) {
                return *v;
            }
            let r = factor_radii(sigma, k);
            v * (j0..=j1).map(|j| high_weight(&r, m, j, gap)).sum::<f64>()
        })
        .collect();
    let low: Vec<Complex64> = first.dense_values().iter().zip(&high).map(|(a, b)| a - b).collect();
    let fg = *sigma.factor();
    Ok((
        Symbol::from_values(fg, m, sigma.center(), low)?,
        Symbol::from_values(fg, m, sigma.center(), high)?,
    ))
}

/// Outcome of [`pointwise_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseReport {
    /// `max_x |T f(x)| / (||sigma(2^j .)||_{L^t_s} prod_k M^t_{s_k,2^j} f_k(x))`.
    pub ratio: f64,
    pub lhs_max: f64,
    pub sigma_norm: f64,
    pub j: i32,
}

/// Measures the pointwise domination of `T_sigma f` by the symbol norm times the Peetre
/// maximal functions of the inputs. `sigma_norm` may be supplied to skip recomputing
/// `||sigma(2^j .)||_{L^t_s}`.
pub fn pointwise_bound_check(
    sigma: &Symbol,
    inputs: &[Field],
    s: &[f64],
    t: f64,
    j: i32,
    sigma_norm: Option<f64>,
) -> Result<PointwiseReport> {
    let m = sigma.m();
    let n = sigma.factor().dims() as f64;
    if !(t > 1.0 && t <= 2.0) || s.len() != m || s.iter().any(|&v| v <= n / t) {
        return invalid(format!("need 1 < t <= 2 and s_k > n/t, got t={t}, s={s:?}"));
    }
    let out = apply_multiplier(sigma, inputs)?;
    let sigma_norm = match sigma_norm {
        Some(v) => v,
        None => product_sobolev_norm(&sigma.as_field(j)?, m, t, s)?,
    };
    let mut denom = vec![sigma_norm; out.grid().len()];
    for (k, f) in inputs.iter().enumerate() {
        let phys = match f.space() {
            Space::Physical => f.clone(),
            Space::Spectral => inverse_ft(f)?,
        };
        let mx = peetre_maximal(&phys, s[k], j, t)?;
        denom.iter_mut().zip(mx.values()).for_each(|(d, v)| *d *= v.re);
    }
    let mut ratio = 0.0f64;
    let mut lhs_max = 0.0f64;
    for (v, d) in out.values().iter().zip(&denom) {
        let l = v.norm();
        lhs_max = lhs_max.max(l);
        if l > 0.0 {
            if *d <= f64::MIN_POSITIVE {
                return Err(Error::CheckFailed("denominator underflow".into()));
            }
            ratio = ratio.max(l / d);
        }
    }
    Ok(PointwiseReport { ratio, lhs_max, sigma_norm, j })
}

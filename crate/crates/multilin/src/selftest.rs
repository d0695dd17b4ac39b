//! The invariant suite: groups of numeric checks against frozen bounds, shared by the
//! `selftest` subcommand and the acceptance run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{forward_ft, inverse_ft, lp_norm, sample_real, Field, Grid, Space, Symbol};
use crate::io::{fmt_num, metadata_line, parse_config, sweep_csv};
use crate::kernels::{h_hat_asymptotics_check, submultiplicativity_scan, HKernelParams};
use crate::lp_frames::{psi_hat, Cutoff, ScaleWindow};
use crate::multiplier_op::{apply_multiplier, kappa_decompose, low_high_split, pointwise_bound_check};
use crate::norms::{composition_constant, domination_constant, peetre_maximal};
use crate::region::{check_sufficiency, hull_equivalence_scan, r2_fuzz, FailingCondition, IndexTuple, Status, Witness};
use crate::sharpness::{
    ce1_sweep, ce2_sweep, diagonal_identity_check, nm_axis_profile, nm_multiplier_check, Ce1Params, Ce2Params,
    ExperimentRecord,
};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Truncation radii of the default truncated-kernel sweep.
pub const CE1_RADII: [usize; 5] = [16, 32, 64, 128, 256];
/// Dilation parameters of the default truncated-kernel sweep.
pub const CE1_EPS: [f64; 2] = [1.0 / 256.0, 1.0 / 128.0];
/// Box sizes of the default diagonal-kernel sweep.
pub const CE2_SIZES: [f64; 3] = [32.0, 64.0, 128.0];

const BASELINES: &str = include_str!("../data/baselines.txt");

/// Frozen bounds, keyed by name.
#[derive(Debug, Clone)]
pub struct Baselines(BTreeMap<String, String>);

impl Baselines {
    /// The bounds shipped with the crate.
    pub fn frozen() -> Self {
        Self(parse_config(BASELINES).expect("shipped baselines parse"))
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        let v = self.0.get(key).ok_or_else(|| Error::Format(format!("missing baseline {key}")))?;
        v.parse().map_err(|_| Error::Format(format!("baseline {key} = {v} is not a number")))
    }
}

/// One measured value and the closed interval it must fall in.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Check {
    pub fn new(id: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self { id: id.into(), value, lower, upper }
    }

    /// `value <= upper`.
    pub fn at_most(id: impl Into<String>, value: f64, upper: f64) -> Self {
        Self::new(id, value, f64::NEG_INFINITY, upper)
    }

    /// `value >= lower`.
    pub fn at_least(id: impl Into<String>, value: f64, lower: f64) -> Self {
        Self::new(id, value, lower, f64::INFINITY)
    }

    /// A yes/no outcome recorded as 1 or 0.
    pub fn holds(id: impl Into<String>, ok: bool) -> Self {
        Self::new(id, if ok { 1.0 } else { 0.0 }, 1.0, 1.0)
    }

    pub fn pass(&self) -> bool {
        !self.value.is_nan() && self.lower <= self.value && self.value <= self.upper
    }
}

/// A named group of checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: &'static str,
    pub checks: Vec<Check>,
}

impl Group {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass())
    }
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    diff / scale
}

fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn spectral_band(g: Grid, rng: &mut ChaCha8Rng, band: f64) -> Result<Field> {
    let mut f = Field::zeros(g, Space::Spectral);
    let coef = random_values(rng, g.len());
    for (i, v) in f.values_mut().iter_mut().enumerate() {
        if g.freq(i).abs() <= band {
            *v = coef[i];
        }
    }
    Ok(f)
}

fn multiplier_oracle_case(m: usize, points: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let g = Grid::new(1, points, 4.0)?;
    let sigma = Symbol::from_values(g, m, &vec![0.0; m], random_values(rng, points.pow(m as u32)))?;
    let inputs: Vec<Field> =
        (0..m).map(|_| Field::from_values(g, Space::Physical, random_values(rng, points))).collect::<Result<_>>()?;
    let out = apply_multiplier(&sigma, &inputs)?;
    let dx = g.spacing();
    let hats: Vec<Vec<Complex64>> = inputs
        .iter()
        .map(|f| {
            (0..points)
                .map(|a| {
                    (0..points)
                        .map(|k| f.values()[k] * Complex64::from_polar(dx, -2.0 * PI * g.coord(k) * g.freq(a)))
                        .sum()
                })
                .collect()
        })
        .collect();
    let dxi = g.freq_step().powi(m as i32);
    let mut idx = vec![0usize; m];
    let oracle: Vec<Complex64> = (0..points)
        .map(|xk| {
            let x = g.coord(xk);
            let mut acc = Complex64::new(0.0, 0.0);
            for flat in 0..points.pow(m as u32) {
                let mut rem = flat;
                for v in idx.iter_mut() {
                    *v = rem % points;
                    rem /= points;
                }
                let mut term = sigma.value_at(&idx);
                let mut freq = 0.0;
                for (k, &a) in idx.iter().enumerate() {
                    term *= hats[k][a];
                    freq += g.freq(a);
                }
                acc += term * Complex64::from_polar(1.0, 2.0 * PI * x * freq);
            }
            acc * dxi
        })
        .collect();
    Ok(rel_err(out.values(), &oracle))
}

/// `T_sigma` against the direct frequency sum for random symbols and inputs.
pub fn multiplier_oracle(seed: u64) -> Result<Group> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for (m, p) in [(2, 8), (2, 16), (3, 8)] {
        let err = multiplier_oracle_case(m, p, &mut rng)?;
        checks.push(Check::at_most(format!("direct_sum_m{m}_p{p}"), err, 1e-10));
    }
    Ok(Group { id: "multiplier_oracle", checks })
}

/// Product, modulation, decomposition, partition of unity and Parseval identities.
pub fn exact_identities(seed: u64) -> Result<Group> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let g = Grid::new(1, 64, 16.0)?;
    let band = g.nyquist() / 2.0 - g.freq_step();
    let h1 = spectral_band(g, &mut rng, band)?;
    let h2 = spectral_band(g, &mut rng, band)?;
    let (f1, f2) = (inverse_ft(&h1)?, inverse_ft(&h2)?);
    let one = Symbol::from_fn(g, 2, &[0.0, 0.0], |_| Complex64::new(1.0, 0.0))?;
    let out = apply_multiplier(&one, &[h1, h2])?;
    let prod: Vec<Complex64> = f1.values().iter().zip(f2.values()).map(|(a, b)| a * b).collect();
    checks.push(Check::at_most("unit_symbol_product", rel_err(out.values(), &prod), 1e-10));

    let (a, b) = (3.0 * g.spacing(), -5.0 * g.spacing());
    let shift =
        Symbol::from_fn(g, 2, &[0.0, 0.0], |xi| Complex64::from_polar(1.0, 2.0 * PI * (a * xi[0] + b * xi[1])))?;
    let out = apply_multiplier(&shift, &[f1.clone(), f2.clone()])?;
    let moved: Vec<Complex64> = (0..64).map(|k| f1.values()[(k + 3) % 64] * f2.values()[(k + 59) % 64]).collect();
    checks.push(Check::at_most("modulation_translation", rel_err(out.values(), &moved), 1e-10));

    let ga = Grid::new(1, 64, 8.0)?;
    let floor = 3.0 * ga.freq_step();
    let vals: Vec<Complex64> = random_values(&mut rng, 64 * 64)
        .into_iter()
        .enumerate()
        .map(|(k, v)| if ga.freq(k / 64).hypot(ga.freq(k % 64)) > floor { v } else { Complex64::new(0.0, 0.0) })
        .collect();
    let sigma = Symbol::from_values(ga, 2, &[0.0, 0.0], vals)?;
    let parts = kappa_decompose(&sigma)?;
    let dense = sigma.dense_values();
    let recon = (0..dense.len()).map(|k| (parts[0].value_flat(k) + parts[1].value_flat(k) - dense[k]).norm()).fold(0.0, f64::max);
    checks.push(Check::at_most("kappa_reconstruction", recon, 1e-12));
    let (low, high) = low_high_split(&sigma)?;
    let split = (0..dense.len())
        .map(|k| (low.value_flat(k) + high.value_flat(k) - parts[0].value_flat(k)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("low_high_reconstruction", split, 1e-12));

    let unity = (0..=4000)
        .map(|i| {
            let xi = (-8.0 + i as f64 * 16.0 / 4000.0).exp2();
            ((-14..=14).map(|j| psi_hat(&[xi], j)).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("partition_of_unity", unity, 1e-12));

    for (dims, points, side) in [(1, 1024, 64.0), (2, 64, 8.0)] {
        let gp = Grid::new(dims, points, side)?;
        let f = Field::from_values(gp, Space::Physical, random_values(&mut rng, gp.len()))?;
        let lhs = lp_norm(&f, 2.0)?;
        let fh = forward_ft(&f)?;
        let rhs = (fh.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * gp.freq_step().powi(dims as i32)).sqrt();
        checks.push(Check::at_most(format!("parseval_d{dims}"), (lhs - rhs).abs() / lhs, 1e-10));
    }
    Ok(Group { id: "exact_identities", checks })
}

/// Submultiplicativity of `H` up to its constant, and the small-frequency and tail behaviour of its transform.
pub fn kernel_laws(seed: u64, b: &Baselines) -> Result<Group> {
    let violations = submultiplicativity_scan(100_000, seed, true)?.len();
    let mut checks = vec![Check::at_most("submultiplicative_violations", violations as f64, 0.0)];
    let p = HKernelParams::new(0.5, 2.0, 1)?;
    let coarse = h_hat_asymptotics_check(&p, Grid::new(1, 1 << 14, 256.0)?)?;
    let fine = h_hat_asymptotics_check(&p, Grid::new(1, 1 << 15, 256.0)?)?;
    let drift = (coarse.ratio_min / fine.ratio_min - 1.0).abs().max((coarse.ratio_max / fine.ratio_max - 1.0).abs());
    checks.push(Check::at_least("small_frequency_ratio_min", fine.ratio_min, f64::MIN_POSITIVE));
    checks.push(Check::at_most("small_frequency_doubling_drift", drift, b.get("h_hat_window_drift_max")?));
    checks.push(Check::at_least("tail_samples", fine.tail_samples as f64, 1.0));
    checks.push(Check::at_most("tail_constant", fine.tail_constant, b.get("h_hat_tail_constant_max")?));
    Ok(Group { id: "kernel_laws", checks })
}

/// Direct transform of the diagonal kernel symbol against its closed form.
pub fn diagonal_identity(seed: u64) -> Result<Group> {
    let checks = [(2, 1), (2, 2), (3, 2)]
        .iter()
        .map(|&(m, l)| {
            let rep = diagonal_identity_check(m, l, &[1.0, 1.0, 1.0], 1.5, 1.5, 128, 8192.0, 100, seed)?;
            Ok(Check::at_most(format!("identity_m{m}_l{l}"), rep.max_rel_error, 1e-6))
        })
        .collect::<Result<_>>()?;
    Ok(Group { id: "diagonal_identity", checks })
}

/// The default truncated-kernel sweep.
pub fn ce1_default_records() -> Result<Vec<ExperimentRecord>> {
    ce1_sweep(&Ce1Params::default(), &CE1_RADII, &CE1_EPS, false)
}

/// The default diagonal-kernel sweep.
pub fn ce2_default_records() -> Result<Vec<ExperimentRecord>> {
    ce2_sweep(&Ce2Params::default(), &CE2_SIZES, false)
}

fn min_step(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] / w[0] - 1.0).fold(f64::INFINITY, f64::min)
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo - 1.0
}

/// Trend checks on truncated-kernel records: bounded functional, growing driver and ratio.
pub fn ce1_trend_checks(records: &[ExperimentRecord], b: &Baselines) -> Result<Group> {
    let mut checks = Vec::new();
    let mut eps: Vec<f64> = records.iter().filter_map(|r| r.eps).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    for e in eps {
        let rows: Vec<&ExperimentRecord> = records.iter().filter(|r| r.eps == Some(e)).collect();
        let tag = format!("eps{}", (1.0 / e).round());
        let at = |n: f64| rows.iter().find(|r| r.n_or_l == n).map(|r| r.l_functional).unwrap_or(f64::NAN);
        checks.push(Check::at_most(format!("{tag}_functional_drift_64_256"), (at(256.0) / at(64.0) - 1.0).abs(), b.get("ce1_functional_drift_max")?));
        let drivers: Vec<f64> = rows.iter().map(|r| r.driver.unwrap_or(f64::NAN)).collect();
        checks.push(Check::at_least(format!("{tag}_driver_min_step"), min_step(&drivers), f64::MIN_POSITIVE));
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        checks.push(Check::at_least(format!("{tag}_ratio_min_step"), min_step(&ratios), f64::MIN_POSITIVE));
        let growth = ratios.last().copied().unwrap_or(f64::NAN) / ratios.first().copied().unwrap_or(f64::NAN);
        checks.push(Check::at_least(format!("{tag}_ratio_growth"), growth, b.get("ce1_growth_min")?));
    }
    Ok(Group { id: "ce1_trend", checks })
}

/// Trend checks on diagonal-kernel records: plateaued inputs and functional, growing ratio.
pub fn ce2_trend_checks(records: &[ExperimentRecord], b: &Baselines) -> Result<Group> {
    let plateau = b.get("ce2_plateau_max")?;
    let mut checks = Vec::new();
    let width = records.first().map(|r| r.hardy_norms.len()).unwrap_or(0);
    for k in 0..width {
        let v: Vec<f64> = records.iter().map(|r| r.hardy_norms[k]).collect();
        checks.push(Check::at_most(format!("hardy_{}_plateau", k + 1), spread(&v), plateau));
    }
    let l: Vec<f64> = records.iter().map(|r| r.l_functional).collect();
    checks.push(Check::at_most("functional_plateau", spread(&l), plateau));
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    checks.push(Check::at_least("ratio_min_step", min_step(&ratios), f64::MIN_POSITIVE));
    let growth = ratios.last().copied().unwrap_or(f64::NAN) / ratios.first().copied().unwrap_or(f64::NAN);
    checks.push(Check::at_least("ratio_growth", growth, b.get("ce2_growth_min")?));
    Ok(Group { id: "ce2_trend", checks })
}

/// Worked verdicts, the `r = 2` specialization and the convex-hull description.
pub fn region_calculus(seed: u64) -> Result<Group> {
    let mut checks = Vec::new();
    let v = check_sufficiency(&IndexTuple::parse(1, "2", &["2", "2"], &["0.51", "0.51"])?);
    checks.push(Check::holds("verdict_bounded", v.bounded() && v.failing.is_none()));
    let v = check_sufficiency(&IndexTuple::parse(1, "2", &["1", "1"], &["0.6", "0.6"])?);
    let ok = v.status == Status::Unbounded
        && matches!(&v.failing, Some(FailingCondition::JSum { j, sum }) if j == &[0, 1] && (sum + 0.8).abs() < 1e-12)
        && v.witness == Some(Witness::Ce2);
    checks.push(Check::holds("verdict_subset_sum", ok));
    let v = check_sufficiency(&IndexTuple::parse(1, "2", &["3", "inf"], &["0.5", "5"])?);
    let ok = v.status == Status::Unbounded
        && v.failing == Some(FailingCondition::MinS { k: 0 })
        && v.witness == Some(Witness::Ce1);
    checks.push(Check::holds("verdict_min_order", ok));
    let agreed = match r2_fuzz(10_000, seed) {
        Ok(n) => n as f64 / 10_000.0,
        Err(Error::CheckFailed(_)) => 0.0,
        Err(e) => return Err(e),
    };
    checks.push(Check::new("r2_agreement", agreed, 1.0, 1.0));
    for (tag, n, r, p, cap) in [("m2", 1, 2.0, vec![1.0, 1.0], 10.0), ("m3", 1, 1.5, vec![1.0, 2.0, f64::INFINITY], 12.0)] {
        let rep = hull_equivalence_scan(n, r, &p, cap, 10_000, seed)?;
        checks.push(Check::at_most(format!("hull_mismatches_{tag}"), rep.mismatches.len() as f64, 0.0));
        checks.push(Check::at_most(format!("hull_outside_gamma_{tag}"), rep.hull_outside_gamma as f64, 0.0));
    }
    Ok(Group { id: "region_calculus", checks })
}

/// The positive periodic test field used for the maximal-function constants.
pub fn trig_field(points: usize) -> Result<Field> {
    const MODES: [(f64, f64, f64); 4] = [(1.0, 0.7, 0.3), (3.0, 0.5, 1.1), (5.0, 0.4, 2.0), (8.0, 0.3, 0.5)];
    let side = 32.0;
    let c0 = MODES.iter().map(|m| m.1).sum::<f64>() + 0.2;
    sample_real(Grid::new(1, points, side)?, |x| {
        c0 + MODES.iter().map(|&(k, a, ph)| a * (2.0 * PI * k * x[0] / side + ph).cos()).sum::<f64>()
    })
}

/// Closed-form Peetre constant, and the domination and composition constants across scales
/// and refinements.
pub fn maximal_functions(b: &Baselines) -> Result<Group> {
    let mut checks = Vec::new();
    let g = Grid::new(1, 1024, 64.0)?;
    let c = sample_real(g, |_| 1.7)?;
    let mut err = 0.0f64;
    for j in ScaleWindow::resolvable(&g)?.iter() {
        let out = peetre_maximal(&c, 2.0, j, 1.0)?;
        err = out.values().iter().fold(err, |e, v| e.max((v.re - 3.4).abs()));
    }
    checks.push(Check::at_most("peetre_closed_form", err, b.get("peetre_closed_form_tol")?));
    let scales: Vec<i32> = (-2..=3).collect();
    let measure = |points: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let f = trig_field(points)?;
        let dom = scales.iter().map(|&j| domination_constant(&f, 2.0, j, 1.0)).collect::<Result<Vec<_>>>()?;
        let comp = scales.iter().map(|&j| composition_constant(&f, 2.0, j, 1.0, 3.0)).collect::<Result<Vec<_>>>()?;
        Ok((dom, comp))
    };
    let (dom_a, comp_a) = measure(2048)?;
    let (dom_b, comp_b) = measure(4096)?;
    let spread_max = b.get("maximal_spread_max")?;
    let refine_max = b.get("maximal_refinement_max")?;
    let refine = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| (x / y - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("domination_spread", spread(&dom_b), spread_max));
    checks.push(Check::at_most("domination_refinement", refine(&dom_a, &dom_b), refine_max));
    checks.push(Check::at_most("composition_spread", spread(&comp_b), spread_max));
    checks.push(Check::at_most("composition_refinement", refine(&comp_a, &comp_b), refine_max));
    Ok(Group { id: "maximal_functions", checks })
}

/// Inputs for the pointwise check: seeded coefficients on the bins `|xi| <= 2.5` of a box of
/// side 32, independent of the number of points.
pub fn pointwise_inputs(points: usize, seeds: &[u64]) -> Result<Vec<Field>> {
    let g = Grid::new(1, points, 32.0)?;
    let reach = (2.5 * g.box_length()).floor() as i64;
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coef = random_values(&mut rng, (2 * reach + 1) as usize);
            let mut f = Field::zeros(g, Space::Spectral);
            for (i, v) in f.values_mut().iter_mut().enumerate() {
                let k = g.signed(i);
                if k.abs() <= reach {
                    *v = coef[(k + reach) as usize];
                }
            }
            Ok(f)
        })
        .collect()
}

/// Ratio of `|T_sigma f|` to the symbol norm times the Peetre maximal functions, for the
/// radial cutoff symbol, at each scale and number of points.
pub fn pointwise_ratios(points: &[usize], scales: &[i32]) -> Result<Vec<Vec<f64>>> {
    let chi = Cutoff::new(1.0, 2.0)?;
    points
        .iter()
        .map(|&p| {
            let inputs = pointwise_inputs(p, &[1, 2])?;
            let sigma = Symbol::from_fn(*inputs[0].grid(), 2, &[0.0, 0.0], |xi| Complex64::new(chi.eval(xi[0].hypot(xi[1])), 0.0))?;
            scales.iter().map(|&j| Ok(pointwise_bound_check(&sigma, &inputs, &[1.0, 1.0], 1.5, j, None)?.ratio)).collect()
        })
        .collect()
}

/// The pointwise domination ratio stays below its baseline and is stable under refinement.
pub fn pointwise_bound(b: &Baselines) -> Result<Group> {
    let rows = pointwise_ratios(&[256, 512, 1024], &[-1, 0])?;
    let mut drift = 0.0f64;
    for w in rows.windows(2) {
        for (a, c) in w[0].iter().zip(&w[1]) {
            drift = drift.max((c / a - 1.0).abs());
        }
    }
    let finest = rows.last().map(|r| r.iter().cloned().fold(0.0, f64::max)).unwrap_or(f64::NAN);
    Ok(Group {
        id: "pointwise_bound",
        checks: vec![
            Check::new("ratio_max", finest, f64::MIN_POSITIVE, b.get("pointwise_ratio_max")?),
            Check::at_most("doubling_drift", drift, b.get("pointwise_drift_max")?),
        ],
    })
}

/// Boundedness of the bracket quotient above the order threshold and growth below it.
pub fn nm_quotient(seed: u64, b: &Baselines) -> Result<Group> {
    let rep = nm_multiplier_check(7.0, 2, &[1.0, 1.0], 4000, seed, None)?;
    let sup = rep.scaled_sup.iter().cloned().fold(0.0, f64::max);
    let radii = [1e2, 1e3, 1e4];
    let bounded = nm_axis_profile(2.0, &[1.0, 1.0], &radii);
    let grows = nm_axis_profile(1.0, &[1.0, 1.0], &radii);
    Ok(Group {
        id: "nm_quotient",
        checks: vec![
            Check::at_most("scaled_differences", sup, b.get("nm_scaled_max")?),
            Check::at_most("axis_profile_bounded", bounded[2] / bounded[0], 1.01),
            Check::at_least("axis_profile_control_growth", min_step(&grows), 5.0),
        ],
    })
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// The same sweep and suite text on one worker and on four.
pub fn thread_independence() -> Result<Group> {
    let one = with_threads(1, || ce2_default_records().map(|r| sweep_csv(&r, 0, &Ce2Params::default().grid.tag())))??;
    let four = with_threads(4, || ce2_default_records().map(|r| sweep_csv(&r, 0, &Ce2Params::default().grid.tag())))??;
    let p_one = with_threads(1, || pointwise_ratios(&[256], &[0]))??;
    let p_four = with_threads(4, || pointwise_ratios(&[256], &[0]))??;
    Ok(Group {
        id: "determinism",
        checks: vec![Check::holds("ce2_sweep_threads", one == four), Check::holds("pointwise_threads", p_one == p_four)],
    })
}

/// Every group of the suite, in a fixed order.
pub fn run_all(seed: u64) -> Result<Vec<Group>> {
    let b = Baselines::frozen();
    Ok(vec![
        multiplier_oracle(seed)?,
        exact_identities(seed)?,
        kernel_laws(seed, &b)?,
        diagonal_identity(seed)?,
        ce1_trend_checks(&ce1_default_records()?, &b)?,
        ce2_trend_checks(&ce2_default_records()?, &b)?,
        region_calculus(seed)?,
        maximal_functions(&b)?,
        pointwise_bound(&b)?,
        nm_quotient(seed, &b)?,
        thread_independence()?,
    ])
}

/// CSV report with columns `check_id, value, lower, upper, pass`.
pub fn report_csv(groups: &[Group], seed: u64) -> String {
    let mut s = String::from("check_id,value,lower,upper,pass\n");
    for g in groups {
        for c in &g.checks {
            let _ = writeln!(s, "{}/{},{},{},{},{}", g.id, c.id, fmt_num(c.value), fmt_num(c.lower), fmt_num(c.upper), c.pass());
        }
    }
    let _ = writeln!(s, "{}", metadata_line(seed, "per-check"));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baselines_parse() {
        let b = Baselines::frozen();
        assert!(b.get("ce1_growth_min").unwrap() > 1.0);
        assert!(b.get("nope").is_err());
    }

    #[test]
    fn check_bounds() {
        assert!(Check::at_most("a", 1.0, 1.0).pass());
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass());
        assert!(!Check::at_least("a", 0.5, 1.0).pass());
        assert!(Check::holds("a", true).pass() && !Check::holds("a", false).pass());
        assert!(!Group { id: "g", checks: vec![] }.pass());
    }

    #[test]
    fn oracle_group_passes() {
        assert!(multiplier_oracle(1).unwrap().pass());
    }

    #[test]
    fn pointwise_inputs_share_bins_across_sizes() {
        let a = pointwise_inputs(256, &[4]).unwrap();
        let b = pointwise_inputs(512, &[4]).unwrap();
        let nz = |f: &Field| -> Vec<Complex64> { f.values().iter().copied().filter(|v| v.norm() > 0.0).collect() };
        assert_eq!(nz(&a[0]), nz(&b[0]));
        assert_eq!(nz(&a[0]).len(), 161);
    }

    #[test]
    fn report_has_header_and_metadata() {
        let g = Group { id: "g", checks: vec![Check::at_most("c", 0.5, f64::INFINITY)] };
        let csv = report_csv(&[g], 3);
        assert!(csv.starts_with("check_id,value,lower,upper,pass\ng/c,5.000000000000e-1,-inf,inf,true\n"));
        assert!(csv.trim_end().lines().last().unwrap().starts_with("#version="));
    }
}

//! Index-region calculus: boundedness classification of `(m, n, r, p, s)`, the admissible
//! smoothness region `Gamma_m(p)` and its generators `Lambda^u_m(p)`, and convex-hull
//! membership decided by a small dense simplex method.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub type Rational = Ratio<i128>;

const BAND: f64 = 1e-12;

/// An exact rational, or a float compared with a relative band of `1e-12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Approx(f64),
}

impl Scalar {
    pub fn int(v: i128) -> Self {
        Scalar::Exact(Rational::from_integer(v))
    }

    pub fn ratio(num: i128, den: i128) -> Self {
        Scalar::Exact(Rational::new(num, den))
    }

    /// Parses `"3/2"`, `"0.6"`, `"2"` exactly and exponent forms such as `"1e-3"` as floats.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::Format(format!("cannot parse number {text:?}"));
        if let Some((a, b)) = t.split_once('/') {
            let (a, b) = (Self::parse(a)?, Self::parse(b)?);
            if b.to_f64() == 0.0 {
                return Err(bad());
            }
            return Ok(a / b);
        }
        if t.contains(['e', 'E']) {
            let v: f64 = t.parse().map_err(|_| bad())?;
            return if v.is_finite() { Ok(Scalar::Approx(v)) } else { Err(bad()) };
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if body.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 30 {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
        let den = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        Ok(Scalar::Exact(Rational::new(if neg { -num } else { num }, den)))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Scalar::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Scalar::Approx(v) => v,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    fn lift(self, other: Scalar, exact: impl Fn(Rational, Rational) -> Option<Rational>, float: impl Fn(f64, f64) -> f64) -> Scalar {
        if let (Scalar::Exact(a), Scalar::Exact(b)) = (self, other) {
            if let Some(v) = exact(a, b) {
                return Scalar::Exact(v);
            }
        }
        Scalar::Approx(float(self.to_f64(), other.to_f64()))
    }

    /// Exact comparison for rationals; floats within the relative band compare equal.
    pub fn compare(self, o: Scalar) -> Ordering {
        if let (Scalar::Exact(a), Scalar::Exact(b)) = (self, o) {
            return a.cmp(&b);
        }
        let (a, b) = (self.to_f64(), o.to_f64());
        if (a - b).abs() <= BAND * 1f64.max(a.abs()).max(b.abs()) {
            Ordering::Equal
        } else {
            a.total_cmp(&b)
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Scalar::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Approx(v) => write!(f, "{v}"),
        }
    }
}


impl Add for Scalar {
    type Output = Scalar;

    fn add(self, o: Scalar) -> Scalar {
        self.lift(o, |a, b| a.checked_add(&b), |a, b| a + b)
    }
}

impl Sub for Scalar {
    type Output = Scalar;

    fn sub(self, o: Scalar) -> Scalar {
        self.lift(o, |a, b| a.checked_sub(&b), |a, b| a - b)
    }
}

impl Mul for Scalar {
    type Output = Scalar;

    fn mul(self, o: Scalar) -> Scalar {
        self.lift(o, |a, b| a.checked_mul(&b), |a, b| a * b)
    }
}

impl Div for Scalar {
    type Output = Scalar;

    fn div(self, o: Scalar) -> Scalar {
        self.lift(o, |a, b| a.checked_div(&b), |a, b| a / b)
    }
}

impl Neg for Scalar {
    type Output = Scalar;

    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Approx(v) => Scalar::Approx(-v),
        }
    }
}

/// An exponent `p` in `(0, inf]`, stored as its reciprocal.
pub fn parse_exponent(text: &str) -> Result<Scalar> {
    let t = text.trim();
    if matches!(t, "inf" | "infinity" | "∞") {
        return Ok(Scalar::int(0));
    }
    let p = Scalar::parse(t)?;
    if p.compare(Scalar::int(0)) != Ordering::Greater {
        return Err(Error::Format(format!("exponent must be positive, got {text}")));
    }
    Ok(Scalar::int(1) / p)
}

/// The parameters `(m, n, r, p, s)`; exponents `p_k` are held as `1/p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTuple {
    pub m: usize,
    pub n: usize,
    pub r: Scalar,
    pub p_recip: Vec<Scalar>,
    pub s: Vec<Scalar>,
}

impl IndexTuple {
    pub fn new(n: usize, r: Scalar, p_recip: Vec<Scalar>, s: Vec<Scalar>) -> Result<Self> {
        let m = s.len();
        if !(2..=16).contains(&m) || p_recip.len() != m || n == 0 {
            return invalid(format!("need 2 <= m <= 16 with m exponents and m orders, n >= 1; got {} and {m}", p_recip.len()));
        }
        if r.compare(Scalar::int(1)) != Ordering::Greater {
            return invalid(format!("r must exceed 1, got {r}"));
        }
        let zero = Scalar::int(0);
        if p_recip.iter().any(|q| q.compare(zero) == Ordering::Less) {
            return invalid("exponents must be positive");
        }
        if s.iter().any(|v| v.compare(zero) == Ordering::Less) {
            return invalid("orders must be nonnegative");
        }
        let total = p_recip.iter().fold(zero, |a, b| a + *b);
        if total.compare(zero) != Ordering::Greater {
            return invalid("the target exponent p must be finite");
        }
        Ok(Self { m, n, r, p_recip, s })
    }

    /// Builds a tuple from floats; `f64::INFINITY` encodes `p_k = inf`.
    pub fn from_f64(n: usize, r: f64, p: &[f64], s: &[f64]) -> Result<Self> {
        let p_recip = p.iter().map(|&v| Scalar::Approx(if v.is_infinite() { 0.0 } else { 1.0 / v })).collect();
        Self::new(n, Scalar::Approx(r), p_recip, s.iter().map(|&v| Scalar::Approx(v)).collect())
    }

    /// Builds a tuple from textual numbers such as `"3/2"`, `"0.6"`, `"inf"`.
    pub fn parse(n: usize, r: &str, p: &[&str], s: &[&str]) -> Result<Self> {
        let p_recip = p.iter().map(|t| parse_exponent(t)).collect::<Result<Vec<_>>>()?;
        let s = s.iter().map(|t| Scalar::parse(t)).collect::<Result<Vec<_>>>()?;
        Self::new(n, Scalar::parse(r)?, p_recip, s)
    }

    fn n_scalar(&self) -> Scalar {
        Scalar::int(self.n as i128)
    }

    /// `1/r' = 1 - 1/r`.
    pub fn r_prime_recip(&self) -> Scalar {
        Scalar::int(1) - Scalar::int(1) / self.r
    }

    /// `sum_{k in J} (s_k/n - 1/p_k)` for a 0-based index set.
    pub fn j_sum(&self, j: &[usize]) -> Scalar {
        j.iter()
            .fold(Scalar::int(0), |acc, &k| acc + self.s[k] / self.n_scalar() - self.p_recip[k])
    }

    pub fn with_s(&self, s: Vec<Scalar>) -> Self {
        Self { s, ..self.clone() }
    }
}

/// Nonempty subsets of `0..m` in lexicographic order of their sorted members.
pub fn subsets_lex(m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for k in start..m {
            cur.push(k);
            out.push(cur.clone());
            rec(k + 1, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity((1 << m) - 1);
    rec(0, m, &mut Vec::new(), &mut out);
    out
}

/// Classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Bounded,
    Unbounded,
    /// The conditions hold but `r > 2`, where sufficiency is not known.
    OpenSufficiency,
}

/// The first condition that fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FailingCondition {
    /// `s_k <= n/r` (0-based `k`).
    MinS { k: usize },
    /// `sum_{k in J}(s_k/n - 1/p_k) <= -1/r'` (0-based members).
    JSum { j: Vec<usize>, sum: f64 },
}

/// Counterexample family that applies to a failing tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Smallest order at or below `n/r`: the truncated-kernel construction.
    Ce1,
    /// A subset sum at or below `-1/r'`: the diagonal-kernel construction.
    Ce2,
}

impl Witness {
    pub fn tag(self) -> &'static str {
        match self {
            Witness::Ce1 => "ce1",
            Witness::Ce2 => "ce2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub status: Status,
    pub failing: Option<FailingCondition>,
    pub witness: Option<Witness>,
    /// Some condition holds with equality.
    pub boundary: bool,
}

impl RegionVerdict {
    pub fn bounded(&self) -> bool {
        self.status == Status::Bounded
    }

    /// One JSON line `{bounded, status, failing_J, failing_k, witness, boundary}` with 1-based indices.
    pub fn to_json(&self) -> String {
        let (fj, fk) = match &self.failing {
            Some(FailingCondition::JSum { j, .. }) => (Some(j.iter().map(|k| k + 1).collect::<Vec<_>>()), None),
            Some(FailingCondition::MinS { k }) => (None, Some(k + 1)),
            None => (None, None),
        };
        let bounded = match self.status {
            Status::OpenSufficiency => serde_json::Value::Null,
            s => serde_json::Value::Bool(s == Status::Bounded),
        };
        serde_json::json!({
            "bounded": bounded,
            "status": self.status,
            "failing_J": fj,
            "failing_k": fk,
            "witness": self.witness.map(Witness::tag),
            "boundary": self.boundary,
        })
        .to_string()
    }
}

/// Checks `s_k > n/r` for every `k` and `sum_{k in J}(s_k/n - 1/p_k) > -1/r'` for every
/// nonempty `J`; the first failure (smallest `k`, then lexicographically smallest `J`) is
/// reported. For `r > 2` a tuple meeting every condition is `OpenSufficiency`.
pub fn check_sufficiency(idx: &IndexTuple) -> RegionVerdict {
    let floor = idx.n_scalar() / idx.r;
    let neg_rp = -idx.r_prime_recip();
    let mut boundary = false;
    let mut failing = None;
    for (k, s) in idx.s.iter().enumerate() {
        match s.compare(floor) {
            Ordering::Greater => {}
            o => {
                boundary |= o == Ordering::Equal;
                if failing.is_none() {
                    failing = Some(FailingCondition::MinS { k });
                }
            }
        }
    }
    for j in subsets_lex(idx.m) {
        let sum = idx.j_sum(&j);
        match sum.compare(neg_rp) {
            Ordering::Greater => {}
            o => {
                boundary |= o == Ordering::Equal;
                if failing.is_none() {
                    failing = Some(FailingCondition::JSum { j, sum: sum.to_f64() });
                }
            }
        }
    }
    let witness = failing.as_ref().map(|f| match f {
        FailingCondition::MinS { .. } => Witness::Ce1,
        FailingCondition::JSum { .. } => Witness::Ce2,
    });
    let status = if failing.is_some() {
        Status::Unbounded
    } else if idx.r.compare(Scalar::int(2)) == Ordering::Greater {
        Status::OpenSufficiency
    } else {
        Status::Bounded
    };
    RegionVerdict { status, failing, witness, boundary }
}

/// The `r = 2` conditions written out directly: `s_k > n/2` for all `k` and
/// `sum_{k in J} s_k/n - sum_{k in J} 1/p_k > -1/2` for all nonempty `J`.
pub fn r2_conditions(idx: &IndexTuple) -> Result<bool> {
    if idx.r.compare(Scalar::int(2)) != Ordering::Equal {
        return invalid(format!("r must be 2, got {}", idx.r));
    }
    let half = Scalar::ratio(1, 2);
    let n = idx.n_scalar();
    if idx.s.iter().any(|s| (*s / n).compare(half) != Ordering::Greater) {
        return Ok(false);
    }
    for mask in 1usize..(1 << idx.m) {
        let mut smooth = Scalar::int(0);
        let mut integ = Scalar::int(0);
        for k in (0..idx.m).filter(|k| mask >> k & 1 == 1) {
            smooth = smooth + idx.s[k];
            integ = integ + idx.p_recip[k];
        }
        if (smooth / n - integ).compare(-half) != Ordering::Greater {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True when [`check_sufficiency`] agrees with [`r2_conditions`].
pub fn check_r2_equivalence(idx: &IndexTuple) -> Result<bool> {
    Ok(check_sufficiency(idx).bounded() == r2_conditions(idx)?)
}

/// Fuzzes [`check_r2_equivalence`] over random quarter-integer tuples with `m` in `{2, 3}`
/// and `n` in `{1, 2}`; returns the number of tuples checked.
pub fn r2_fuzz(count: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let m = rng.gen_range(2..=3);
        let n = rng.gen_range(1..=2);
        let p_recip = (0..m).map(|_| Scalar::ratio(rng.gen_range(0..=8), 4)).collect::<Vec<_>>();
        let p_recip = if p_recip.iter().all(|q| q.to_f64() == 0.0) {
            vec![Scalar::ratio(1, 4); m]
        } else {
            p_recip
        };
        let s = (0..m).map(|_| Scalar::ratio(rng.gen_range(0..=12), 4)).collect();
        let idx = IndexTuple::new(n, Scalar::int(2), p_recip, s)?;
        if !check_r2_equivalence(&idx)? {
            return Err(Error::CheckFailed(format!("r=2 disagreement at {idx:?}")));
        }
    }
    Ok(count)
}

/// Membership in `Gamma_m(p)`: `sum_{k in J}(s_k/n - 1/p_k) >= -1/r'` for all nonempty `J`.
pub fn gamma_membership(idx: &IndexTuple) -> bool {
    let neg_rp = -idx.r_prime_recip();
    subsets_lex(idx.m).iter().all(|j| idx.j_sum(j).compare(neg_rp) != Ordering::Less)
}

/// Lower corner of `Lambda^u_m(p)` (0-based `u`): `n/p_u - n/r'` at `u`, `n/p_i` elsewhere.
pub fn lambda_floor(idx: &IndexTuple, u: usize) -> Vec<Scalar> {
    let n = idx.n_scalar();
    (0..idx.m)
        .map(|i| {
            let base = n * idx.p_recip[i];
            if i == u {
                base - n * idx.r_prime_recip()
            } else {
                base
            }
        })
        .collect()
}

/// Membership in `Lambda^u_m(p)` (0-based `u`).
pub fn lambda_membership(u: usize, idx: &IndexTuple) -> bool {
    lambda_floor(idx, u).iter().zip(&idx.s).all(|(f, s)| s.compare(*f) != Ordering::Less)
}

fn check_cap(idx: &IndexTuple, cap: f64) -> Result<()> {
    let need = (idx.m * idx.n) as f64 * idx.p_recip.iter().map(|q| q.to_f64()).sum::<f64>();
    if cap <= need {
        return invalid(format!("cap {cap} must exceed m n sum 1/p_k = {need}"));
    }
    if idx.s.iter().any(|s| s.to_f64() > cap * (1.0 + BAND)) {
        return invalid(format!("orders must not exceed the cap {cap}"));
    }
    Ok(())
}

/// Vertices of the capped hull for `m = 2`, counter-clockwise.
pub fn hull_polygon(idx: &IndexTuple, cap: f64) -> Result<Vec<[f64; 2]>> {
    if idx.m != 2 {
        return invalid("the polygon form needs m = 2");
    }
    let a: Vec<f64> = (0..2).map(|u| lambda_floor(idx, u)[u].to_f64()).collect();
    let b: Vec<f64> = (0..2).map(|i| idx.n as f64 * idx.p_recip[i].to_f64()).collect();
    Ok(vec![[cap, cap], [a[0], cap], [a[0], b[1]], [b[0], a[1]], [cap, a[1]]])
}

fn in_polygon(poly: &[[f64; 2]], pt: [f64; 2]) -> bool {
    let scale = poly.iter().flat_map(|v| v.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    (0..poly.len()).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = (b[0] - a[0]) * (pt[1] - a[1]) - (b[1] - a[1]) * (pt[0] - a[0]);
        cross >= -BAND * scale * scale
    })
}

/// Decides whether `s` lies in the convex hull of the capped generators `Lambda^{u,cap}`:
/// the closed-form polygon for `m = 2`, otherwise [`hull_weights`].
pub fn hull_membership(idx: &IndexTuple, cap: f64) -> Result<bool> {
    check_cap(idx, cap)?;
    if idx.m == 2 {
        let pt = [idx.s[0].to_f64(), idx.s[1].to_f64()];
        return Ok(in_polygon(&hull_polygon(idx, cap)?, pt));
    }
    Ok(hull_weights(idx, cap)?.is_some())
}

/// Convex weights `theta_u` with `s = sum_u theta_u v_u`, `v_u` in `Lambda^{u,cap}`, if any.
///
/// With `w_u = theta_u v_u` the problem is the linear feasibility system
/// `sum_u w_u = s`, `sum theta = 1`, `theta_u f_u <= w_u <= theta_u cap`, solved by
/// phase one of the simplex method with Bland's rule.
pub fn hull_weights(idx: &IndexTuple, cap: f64) -> Result<Option<Vec<f64>>> {
    check_cap(idx, cap)?;
    let m = idx.m;
    let floors: Vec<Vec<f64>> = (0..m).map(|u| lambda_floor(idx, u).iter().map(|v| v.to_f64()).collect()).collect();
    let theta = |u: usize| u;
    let y = |u: usize, i: usize| m + u * m + i;
    let z = |u: usize, i: usize| m + m * m + u * m + i;
    let vars = m + 2 * m * m;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for u in 0..m {
        for i in 0..m {
            let mut row = vec![0.0; vars];
            row[y(u, i)] = 1.0;
            row[z(u, i)] = 1.0;
            row[theta(u)] = -(cap - floors[u][i]);
            rows.push(row);
            rhs.push(0.0);
        }
    }
    for i in 0..m {
        let mut row = vec![0.0; vars];
        for u in 0..m {
            row[y(u, i)] = 1.0;
            row[theta(u)] = floors[u][i];
        }
        rows.push(row);
        rhs.push(idx.s[i].to_f64());
    }
    let mut row = vec![0.0; vars];
    (0..m).for_each(|u| row[theta(u)] = 1.0);
    rows.push(row);
    rhs.push(1.0);
    Ok(phase_one(&rows, &rhs)?.map(|x| x[..m].to_vec()))
}

const LP_TOL: f64 = 1e-9;

/// Finds `x >= 0` with `A x = b`, or `None` when the system is infeasible.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Result<Option<Vec<f64>>> {
    let rows = a.len();
    let vars = a.first().map_or(0, |r| r.len());
    let cols = vars + rows;
    let mut t = vec![vec![0.0; cols + 1]; rows + 1];
    let mut basis: Vec<usize> = (vars..cols).collect();
    for r in 0..rows {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..vars {
            t[r][c] = sign * a[r][c];
        }
        t[r][vars + r] = 1.0;
        t[r][cols] = sign * b[r];
    }
    for c in 0..=cols {
        let col_sum: f64 = (0..rows).map(|r| t[r][c]).sum();
        t[rows][c] = if (vars..cols).contains(&c) { 0.0 } else { -col_sum };
    }
    let max_iter = 50 * (rows + cols);
    for _ in 0..max_iter {
        let Some(enter) = (0..cols).find(|&c| t[rows][c] < -LP_TOL) else {
            let objective = -t[rows][cols];
            if objective > LP_TOL {
                return Ok(None);
            }
            let mut x = vec![0.0; vars];
            for (r, &bv) in basis.iter().enumerate() {
                if bv < vars {
                    x[bv] = t[r][cols];
                }
            }
            return Ok(Some(x));
        };
        let mut leave: Option<usize> = None;
        for r in 0..rows {
            if t[r][enter] > LP_TOL {
                let ratio = t[r][cols] / t[r][enter];
                leave = match leave {
                    None => Some(r),
                    Some(l) => {
                        let best = t[l][cols] / t[l][enter];
                        if ratio < best - LP_TOL || (ratio <= best + LP_TOL && basis[r] < basis[l]) {
                            Some(r)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(pr) = leave else {
            return Err(Error::Lp("phase-one objective unbounded".into()));
        };
        let piv = t[pr][enter];
        t[pr].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = t[pr].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != pr {
                let f = row[enter];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        basis[pr] = enter;
    }
    Err(Error::Lp(format!("no convergence after {max_iter} pivots")))
}

/// Outcome of [`hull_equivalence_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub samples: usize,
    /// Samples within `1e-9` of a face of `Gamma`, excluded from the comparison.
    pub boundary_skipped: usize,
    /// Points where capped-`Gamma` membership and hull membership differ.
    pub mismatches: Vec<Vec<f64>>,
    /// Hull members outside `Gamma`; always checked, boundary band included.
    pub hull_outside_gamma: usize,
}

/// Compares capped-`Gamma` membership with hull membership at uniform points of `[0, cap]^m`.
pub fn hull_equivalence_scan(
    n: usize,
    r: f64,
    p: &[f64],
    cap: f64,
    samples: usize,
    seed: u64,
) -> Result<ScanReport> {
    let m = p.len();
    if !(2..=3).contains(&m) {
        return invalid("scans support m in {2, 3}");
    }
    let base = IndexTuple::from_f64(n, r, p, &vec![0.0; m])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neg_rp = -base.r_prime_recip().to_f64();
    let subsets = subsets_lex(m);
    let mut report = ScanReport { samples, boundary_skipped: 0, mismatches: Vec::new(), hull_outside_gamma: 0 };
    for _ in 0..samples {
        let s: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..cap)).collect();
        let idx = base.with_s(s.iter().map(|&v| Scalar::Approx(v)).collect());
        let hull = hull_membership(&idx, cap)?;
        let gamma = gamma_membership(&idx);
        if hull && !gamma {
            report.hull_outside_gamma += 1;
        }
        let near = subsets.iter().any(|j| (idx.j_sum(j).to_f64() - neg_rp).abs() < 1e-9);
        if near {
            report.boundary_skipped += 1;
        } else if hull != gamma {
            report.mismatches.push(s);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn tuple(r: &str, p: &[&str], s: &[&str]) -> IndexTuple {
        IndexTuple::parse(1, r, p, s).unwrap()
    }

    #[test]
    fn scalar_parsing() {
        assert_eq!(Scalar::parse("3/2").unwrap(), Scalar::ratio(3, 2));
        assert_eq!(Scalar::parse("0.6").unwrap(), Scalar::ratio(3, 5));
        assert_eq!(Scalar::parse("-2").unwrap(), Scalar::int(-2));
        assert_eq!(Scalar::parse("1e-3").unwrap(), Scalar::Approx(1e-3));
        assert!(Scalar::parse("x").is_err());
        assert!(Scalar::parse("1/0").is_err());
        assert_eq!(parse_exponent("inf").unwrap(), Scalar::int(0));
        assert_eq!(parse_exponent("4").unwrap(), Scalar::ratio(1, 4));
        assert!(parse_exponent("0").is_err());
        assert_eq!(Scalar::Approx(0.1 + 0.2).compare(Scalar::Approx(0.3)), Ordering::Equal);
        assert_eq!(Scalar::ratio(1, 3).to_string(), "1/3");
    }

    #[test]
    fn worked_verdicts() {
        let v = check_sufficiency(&tuple("2", &["2", "2"], &["0.51", "0.51"]));
        assert!(v.bounded() && v.failing.is_none() && !v.boundary);
        let v = check_sufficiency(&tuple("2", &["1", "1"], &["0.6", "0.6"]));
        assert_eq!(v.status, Status::Unbounded);
        assert_eq!(v.failing, Some(FailingCondition::JSum { j: vec![0, 1], sum: -0.8 }));
        assert_eq!(v.witness, Some(Witness::Ce2));
        let v = check_sufficiency(&tuple("2", &["3", "inf"], &["0.5", "5"]));
        assert_eq!(v.failing, Some(FailingCondition::MinS { k: 0 }));
        assert_eq!(v.witness, Some(Witness::Ce1));
        assert!(v.boundary);
        let json = check_sufficiency(&tuple("2", &["1", "1"], &["0.6", "0.6"])).to_json();
        assert!(json.contains("\"bounded\":false") && json.contains("\"failing_J\":[1,2]"), "{json}");
    }

    #[test]
    fn open_beyond_two() {
        let v = check_sufficiency(&tuple("3", &["2", "2"], &["1", "1"]));
        assert_eq!(v.status, Status::OpenSufficiency);
        assert!(v.to_json().contains("\"bounded\":null"));
        let v = check_sufficiency(&tuple("3", &["2", "2"], &["0.2", "1"]));
        assert_eq!(v.status, Status::Unbounded);
    }

    #[test]
    fn r2_boundary_and_infinity() {
        let idx = tuple("2", &["2", "2"], &["1/2", "1"]);
        assert!(!check_sufficiency(&idx).bounded());
        assert!(!r2_conditions(&idx).unwrap());
        let idx = tuple("2", &["inf", "1"], &["0.6", "0.6"]);
        assert_eq!(idx.j_sum(&[0]), Scalar::ratio(3, 5));
        assert!(check_r2_equivalence(&idx).unwrap());
        assert!(r2_conditions(&tuple("3/2", &["2", "2"], &["1", "1"])).is_err());
        assert_eq!(r2_fuzz(2000, 11).unwrap(), 2000);
    }

    #[test]
    fn gamma_and_lambda() {
        let idx = tuple("2", &["1", "1"], &["1/2", "1"]);
        assert!(gamma_membership(&idx));
        assert!(lambda_membership(0, &idx));
        assert!(!lambda_membership(1, &idx));
        assert!(gamma_membership(&tuple("2", &["2", "2"], &["0.51", "0.51"])));
        assert!(!gamma_membership(&tuple("2", &["1", "1"], &["0.6", "0.6"])));
        let face = tuple("2", &["1", "1"], &["0.7", "0.8"]);
        assert_eq!(face.j_sum(&[0, 1]), Scalar::ratio(-1, 2));
        assert!(gamma_membership(&face));
        assert!(!lambda_membership(0, &tuple("2", &["1", "1"], &["0.4", "1"])));
    }

    #[test]
    fn polygon_example() {
        let idx = tuple("2", &["1", "1"], &["1", "1"]);
        let poly = hull_polygon(&idx, 10.0).unwrap();
        assert_eq!(poly, vec![[10.0, 10.0], [0.5, 10.0], [0.5, 1.0], [1.0, 0.5], [10.0, 0.5]]);
        let cx = poly.iter().map(|v| v[0]).sum::<f64>() / 5.0;
        let cy = poly.iter().map(|v| v[1]).sum::<f64>() / 5.0;
        let centroid = idx.with_s(vec![Scalar::Approx(cx), Scalar::Approx(cy)]);
        assert!(hull_membership(&centroid, 10.0).unwrap());
        assert!(hull_weights(&centroid, 10.0).unwrap().is_some());
        let outside = idx.with_s(vec![Scalar::Approx(0.4), Scalar::Approx(9.0)]);
        assert!(!hull_membership(&outside, 10.0).unwrap());
        assert!(hull_weights(&outside, 10.0).unwrap().is_none());
        assert!(hull_membership(&centroid, 3.0).is_err());
    }

    #[test]
    fn lp_agrees_with_polygon() {
        let base = tuple("2", &["1", "1"], &["1", "1"]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let s = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
            let idx = base.with_s(vec![Scalar::Approx(s[0]), Scalar::Approx(s[1])]);
            if (s[0] + s[1] - 1.5).abs() < 1e-6 || (s[0] - 0.5).abs() < 1e-6 || (s[1] - 0.5).abs() < 1e-6 {
                continue;
            }
            assert_eq!(hull_membership(&idx, 10.0).unwrap(), hull_weights(&idx, 10.0).unwrap().is_some(), "{s:?}");
        }
    }

    #[test]
    fn generator_corners_are_members() {
        let idx = IndexTuple::from_f64(1, 1.5, &[1.0, 2.0, f64::INFINITY], &[0.0; 3]).unwrap();
        for u in 0..3 {
            let corner = idx.with_s(lambda_floor(&idx, u));
            let w = hull_weights(&corner, 12.0).unwrap().expect("member");
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(lambda_membership(u, &corner));
            assert!(gamma_membership(&corner));
        }
    }

    #[test]
    fn scans_have_no_mismatch() {
        let rep = hull_equivalence_scan(1, 2.0, &[1.0, 1.0], 10.0, 3000, 1).unwrap();
        assert!(rep.mismatches.is_empty() && rep.hull_outside_gamma == 0);
        let rep = hull_equivalence_scan(1, 1.5, &[1.0, 2.0, f64::INFINITY], 12.0, 1500, 2).unwrap();
        assert!(rep.mismatches.is_empty(), "{:?}", rep.mismatches);
        assert_eq!(rep.hull_outside_gamma, 0);
    }

    #[test]
    fn subsets_in_lex_order() {
        assert_eq!(
            subsets_lex(3),
            vec![vec![0], vec![0, 1], vec![0, 1, 2], vec![0, 2], vec![1], vec![1, 2], vec![2]]
        );
    }

    proptest! {
        #[test]
        fn permutation_equivariant(s in proptest::collection::vec(0u8..16, 3), q in proptest::collection::vec(0u8..8, 3), r in 5i128..12) {
            let make = |order: [usize; 3]| {
                IndexTuple::new(
                    1,
                    Scalar::ratio(r, 4),
                    order.iter().map(|&k| Scalar::ratio(q[k] as i128 + 1, 4)).collect(),
                    order.iter().map(|&k| Scalar::ratio(s[k] as i128, 4)).collect(),
                ).unwrap()
            };
            let a = make([0, 1, 2]);
            let b = make([2, 0, 1]);
            prop_assert_eq!(check_sufficiency(&a).status, check_sufficiency(&b).status);
            prop_assert_eq!(check_sufficiency(&a).boundary, check_sufficiency(&b).boundary);
            prop_assert_eq!(gamma_membership(&a), gamma_membership(&b));
        }

        #[test]
        fn monotone_in_orders(s in proptest::collection::vec(0u8..16, 2), k in 0usize..2, bump in 1u8..8) {
            let idx = IndexTuple::new(1, Scalar::ratio(3, 2), vec![Scalar::ratio(1, 2); 2],
                s.iter().map(|&v| Scalar::ratio(v as i128, 4)).collect()).unwrap();
            let mut up = idx.s.clone();
            up[k] = up[k] + Scalar::ratio(bump as i128, 4);
            let a = check_sufficiency(&idx);
            let b = check_sufficiency(&idx.with_s(up));
            prop_assert!(!a.bounded() || b.bounded());
            prop_assert!(!a.bounded() || gamma_membership(&idx));
        }
    }
}

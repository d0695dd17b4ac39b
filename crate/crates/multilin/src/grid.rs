//! Periodic sampling lattices on `[-L/2, L/2)^d`, sampled fields and multiplier symbols,
//! and Fourier transforms calibrated against the continuum transform
//! `f^(xi) = int f(x) exp(-2 pi i <x, xi>) dx`.
//!
//! A field may carry a frequency offset `c` (its carrier). Physical values then store
//! `f(x) exp(-2 pi i <c, x>)` and spectral values store `f^(c + xi_q)`, so narrowband
//! signals centred away from the origin need only a small lattice.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported number of axes.
pub const MAX_DIMS: usize = 4;

/// Metadata of a periodic lattice with `points` samples per axis on a box of side `box_length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dims: usize,
    points: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(dims: usize, points: usize, box_length: f64) -> Result<Self> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::InvalidGrid(format!("dims must lie in 1..={MAX_DIMS}, got {dims}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {box_length}")));
        }
        let total = (points as u128).pow(dims as u32);
        if total > 1 << 28 {
            return Err(Error::InvalidGrid(format!("{total} samples exceed the supported size")));
        }
        Ok(Self { dims, points, box_length })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Lattice spacing `L/P`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    /// Frequency spacing `1/L`.
    pub fn freq_step(&self) -> f64 {
        1.0 / self.box_length
    }

    /// Nyquist frequency `P/(2L)`.
    pub fn nyquist(&self) -> f64 {
        self.points as f64 / (2.0 * self.box_length)
    }

    /// Number of samples `P^dims`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical coordinate of index `i` along an axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    /// Lattice frequency of index `i` along an axis.
    pub fn freq(&self, i: usize) -> f64 {
        self.signed(i) as f64 / self.box_length
    }

    /// Index `i` shifted to the signed range `[-P/2, P/2)`.
    pub fn signed(&self, i: usize) -> i64 {
        i as i64 - (self.points / 2) as i64
    }

    /// Splits a flat index into per-axis indices (last axis fastest).
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dims).rev() {
            out[a] = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Same spacing pattern with a different number of axes.
    pub fn with_dims(&self, dims: usize) -> Result<Self> {
        Self::new(dims, self.points, self.box_length)
    }

    /// Same points and axes on a different box.
    pub fn with_box(&self, box_length: f64) -> Result<Self> {
        Self::new(self.dims, self.points, box_length)
    }

    pub(crate) fn parity(&self, flat: usize) -> f64 {
        let mut f = flat;
        let mut s = 0;
        for _ in 0..self.dims {
            s += f % self.points;
            f /= self.points;
        }
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Builds a validated grid.
pub fn make_grid(dims: usize, points: usize, box_length: f64) -> Result<Grid> {
    Grid::new(dims, points, box_length)
}

/// Representation of a field's samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Space {
    Physical,
    Spectral,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Spectral => "spectral",
        }
    }
}

/// Complex samples of a function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    space: Space,
    carrier: Vec<f64>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn from_values(grid: Grid, space: Space, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, space, carrier: vec![0.0; grid.dims()], values })
    }

    pub fn zeros(grid: Grid, space: Space) -> Self {
        Self {
            grid,
            space,
            carrier: vec![0.0; grid.dims()],
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Attaches a carrier frequency; values are reinterpreted, not modified.
    pub fn with_carrier(mut self, carrier: &[f64]) -> Result<Self> {
        if carrier.len() != self.grid.dims() || carrier.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad carrier {carrier:?}")));
        }
        self.carrier = carrier.to_vec();
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn carrier(&self) -> &[f64] {
        &self.carrier
    }

    pub fn has_carrier(&self) -> bool {
        self.carrier.iter().any(|&c| c != 0.0)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Coordinates of sample `flat`: positions in physical space, true frequencies in spectral space.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIMS];
        self.grid.unflatten(flat, &mut idx);
        for a in 0..self.grid.dims() {
            out[a] = match self.space {
                Space::Physical => self.grid.coord(idx[a]),
                Space::Spectral => self.carrier[a] + self.grid.freq(idx[a]),
            };
        }
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Field {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        Field { values, ..self.clone_meta() }
    }

    /// Multiplies each value by `w(point)`.
    pub fn weighted(&self, w: impl Fn(&[f64]) -> f64 + Sync) -> Field {
        let d = self.grid.dims();
        let values = self
            .values
            .par_iter()
            .enumerate()
            .map(|(k, &v)| {
                let mut p = [0.0; MAX_DIMS];
                self.point(k, &mut p);
                v * w(&p[..d])
            })
            .collect();
        Field { values, ..self.clone_meta() }
    }

    /// Pointwise modulus as a new field.
    pub fn abs(&self) -> Field {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub(crate) fn clone_meta(&self) -> Field {
        Field { grid: self.grid, space: self.space, carrier: self.carrier.clone(), values: Vec::new() }
    }

    pub(crate) fn with_new_values(&self, values: Vec<Complex64>) -> Field {
        Field { values, ..self.clone_meta() }
    }

    fn expect(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch { expected: space.name() })
        }
    }
}

fn sample_at(
    grid: Grid,
    space: Space,
    carrier: &[f64],
    f: impl Fn(&[f64]) -> Complex64 + Sync,
) -> Result<Field> {
    let d = grid.dims();
    let mut field = Field::zeros(grid, space).with_carrier(carrier)?;
    let shell = field.clone_meta();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let mut p = [0.0; MAX_DIMS];
            shell.point(k, &mut p);
            f(&p[..d])
        })
        .collect();
    if let Some(k) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        let mut p = vec![0.0; d];
        shell.point(k, &mut p);
        return Err(Error::NonFinite { coord: p });
    }
    field.values = values;
    Ok(field)
}

/// Samples `f` at the lattice points of `grid`.
pub fn sample(grid: Grid, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Field> {
    sample_at(grid, Space::Physical, &vec![0.0; grid.dims()], f)
}

/// Samples a real function at the lattice points of `grid`.
pub fn sample_real(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Field> {
    sample(grid, |x| Complex64::new(f(x), 0.0))
}

/// Samples a spectrum `f^` at the true frequencies `carrier + k/L`.
pub fn sample_spectrum(
    grid: Grid,
    carrier: &[f64],
    f: impl Fn(&[f64]) -> Complex64 + Sync,
) -> Result<Field> {
    sample_at(grid, Space::Spectral, carrier, f)
}

/// Continuum-calibrated forward transform.
pub fn forward_ft(f: &Field) -> Result<Field> {
    f.expect(Space::Physical)?;
    let g = f.grid;
    let mut v = f.values.clone();
    modulate(&g, &mut v, 1.0);
    fft_nd(&g, &mut v, FftDirection::Forward);
    modulate(&g, &mut v, g.spacing().powi(g.dims() as i32));
    Ok(Field { grid: g, space: Space::Spectral, carrier: f.carrier.clone(), values: v })
}

/// Inverse of [`forward_ft`].
pub fn inverse_ft(f: &Field) -> Result<Field> {
    f.expect(Space::Spectral)?;
    let g = f.grid;
    let mut v = f.values.clone();
    modulate(&g, &mut v, 1.0);
    fft_nd(&g, &mut v, FftDirection::Inverse);
    modulate(&g, &mut v, g.freq_step().powi(g.dims() as i32));
    Ok(Field { grid: g, space: Space::Physical, carrier: f.carrier.clone(), values: v })
}

/// Riemann-sum `L^p` norm with measure `dx` (physical) or `dxi` (spectral); `p = inf` gives the max.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_norm_values(&f.grid, f.space, &f.values, p)
}

pub(crate) fn lp_norm_values(g: &Grid, space: Space, values: &[Complex64], p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.norm())));
    }
    let h = match space {
        Space::Physical => g.spacing(),
        Space::Spectral => g.freq_step(),
    };
    let measure = h.powi(g.dims() as i32);
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v.norm_sqr()).sum()
    } else {
        values.iter().map(|v| v.norm().powf(p)).sum()
    };
    Ok((measure * sum).powf(1.0 / p))
}

fn modulate(g: &Grid, v: &mut [Complex64], scale: f64) {
    v.par_iter_mut().enumerate().for_each(|(k, x)| *x *= scale * g.parity(k));
}

fn plan(points: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft(points, dir)
}

/// Unnormalised DFT along every axis; deterministic for any thread count.
pub(crate) fn fft_nd(g: &Grid, v: &mut [Complex64], dir: FftDirection) {
    let p = g.points();
    let fft = plan(p, dir);
    let scratch_len = fft.get_inplace_scratch_len();
    v.par_chunks_mut(p).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, line| fft.process_with_scratch(line, scratch),
    );
    let total = v.len();
    for axis in (0..g.dims() - 1).rev() {
        let stride = p.pow((g.dims() - 1 - axis) as u32);
        let lines = total / p;
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        {
            let src: &[Complex64] = v;
            buf.par_chunks_mut(p).enumerate().for_each_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, (line, out)| {
                    let base = (line / stride) * stride * p + line % stride;
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = src[base + k * stride];
                    }
                    fft.process_with_scratch(out, scratch);
                },
            );
        }
        for line in 0..lines {
            let base = (line / stride) * stride * p + line % stride;
            for k in 0..p {
                v[base + k * stride] = buf[line * p + k];
            }
        }
    }
}

/// One block of a symbol: a dense table over `arity` consecutive factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    arity: usize,
    values: Vec<Complex64>,
}

impl SymbolBlock {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Samples of an m-linear symbol on the product lattice of `m` copies of a factor grid.
///
/// The symbol is stored as a product of dense blocks over consecutive groups of factors;
/// a single block of arity `m` is the general dense case. Axis `a` of the product lattice
/// sits at frequency `center[a] + k/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    factor: Grid,
    m: usize,
    center: Vec<f64>,
    blocks: Vec<SymbolBlock>,
}

impl Symbol {
    fn validate(factor: &Grid, m: usize, center: &[f64]) -> Result<()> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        if m * factor.dims() > MAX_DIMS {
            return Err(Error::InvalidParameter(format!(
                "m*n = {} exceeds {MAX_DIMS}",
                m * factor.dims()
            )));
        }
        if center.len() != m * factor.dims() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad symbol center {center:?}")));
        }
        Ok(())
    }

    /// Dense symbol sampled from `f` at the true product frequencies.
    pub fn from_fn(
        factor: Grid,
        m: usize,
        center: &[f64],
        f: impl Fn(&[f64]) -> Complex64 + Sync,
    ) -> Result<Self> {
        Self::validate(&factor, m, center)?;
        let block = Self::block_from_fn(&factor, m, center, f)?;
        Ok(Self { factor, m, center: center.to_vec(), blocks: vec![block] })
    }

    /// Dense symbol from raw values over the product lattice.
    pub fn from_values(factor: Grid, m: usize, center: &[f64], values: Vec<Complex64>) -> Result<Self> {
        Self::validate(&factor, m, center)?;
        let len = factor.len().pow(m as u32);
        if values.len() != len {
            return Err(Error::InvalidParameter(format!("expected {len} values, got {}", values.len())));
        }
        Ok(Self { factor, m, center: center.to_vec(), blocks: vec![SymbolBlock { arity: m, values }] })
    }

    /// Product of blocks given as `(arity, values)` in factor order.
    pub fn from_blocks(factor: Grid, center: &[f64], blocks: Vec<(usize, Vec<Complex64>)>) -> Result<Self> {
        let m = blocks.iter().map(|b| b.0).sum();
        Self::validate(&factor, m, center)?;
        let mut out = Vec::with_capacity(blocks.len());
        for (arity, values) in blocks {
            let len = factor.len().pow(arity as u32);
            if arity == 0 || values.len() != len {
                return Err(Error::InvalidParameter(format!(
                    "block of arity {arity} needs {len} values, got {}",
                    values.len()
                )));
            }
            out.push(SymbolBlock { arity, values });
        }
        Ok(Self { factor, m, center: center.to_vec(), blocks: out })
    }

    /// Samples one block of arity `arity` whose axes start at `center`.
    pub fn block_values(
        factor: &Grid,
        arity: usize,
        center: &[f64],
        f: impl Fn(&[f64]) -> Complex64 + Sync,
    ) -> Result<Vec<Complex64>> {
        Ok(Self::block_from_fn(factor, arity, center, f)?.values)
    }

    fn block_from_fn(
        factor: &Grid,
        arity: usize,
        center: &[f64],
        f: impl Fn(&[f64]) -> Complex64 + Sync,
    ) -> Result<SymbolBlock> {
        let d = arity * factor.dims();
        if d > MAX_DIMS || center.len() != d {
            return Err(Error::InvalidParameter(format!("block of {d} axes with center {center:?}")));
        }
        let pg = factor.with_dims(d)?;
        let values: Vec<Complex64> = (0..pg.len())
            .into_par_iter()
            .map(|k| {
                let mut idx = [0usize; MAX_DIMS];
                pg.unflatten(k, &mut idx);
                let mut xi = [0.0; MAX_DIMS];
                for a in 0..d {
                    xi[a] = center[a] + factor.freq(idx[a]);
                }
                f(&xi[..d])
            })
            .collect();
        if let Some(k) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            let mut idx = [0usize; MAX_DIMS];
            pg.unflatten(k, &mut idx);
            let coord = (0..d).map(|a| center[a] + factor.freq(idx[a])).collect();
            return Err(Error::NonFinite { coord });
        }
        Ok(SymbolBlock { arity, values })
    }

    pub fn factor(&self) -> &Grid {
        &self.factor
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn blocks(&self) -> &[SymbolBlock] {
        &self.blocks
    }

    /// Total number of product-lattice axes `m*n`.
    pub fn total_dims(&self) -> usize {
        self.m * self.factor.dims()
    }

    /// Number of product-lattice bins `P^(m n)`.
    pub fn len(&self) -> usize {
        self.factor.len().pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_dense(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Value at per-factor flat indices `fi` (each in `0..P^n`).
    pub fn value_at(&self, fi: &[usize]) -> Complex64 {
        let nf = self.factor.len();
        let mut start = 0;
        let mut out = Complex64::new(1.0, 0.0);
        for b in &self.blocks {
            let mut flat = 0;
            for &i in &fi[start..start + b.arity] {
                flat = flat * nf + i;
            }
            out *= b.values[flat];
            start += b.arity;
        }
        out
    }

    /// Value at a flat index of the product lattice.
    pub fn value_flat(&self, flat: usize) -> Complex64 {
        if self.blocks.len() == 1 {
            return self.blocks[0].values[flat];
        }
        let mut fi = [0usize; MAX_DIMS];
        self.split_flat(flat, &mut fi);
        self.value_at(&fi[..self.m])
    }

    pub(crate) fn split_flat(&self, mut flat: usize, fi: &mut [usize]) {
        let nf = self.factor.len();
        for j in (0..self.m).rev() {
            fi[j] = flat % nf;
            flat /= nf;
        }
    }

    /// True product frequency of bin `flat`.
    pub fn freq_vector(&self, flat: usize, out: &mut [f64]) {
        let d = self.total_dims();
        let pg = Grid { dims: d, ..self.factor };
        let mut idx = [0usize; MAX_DIMS];
        pg.unflatten(flat, &mut idx);
        for a in 0..d {
            out[a] = self.center[a] + self.factor.freq(idx[a]);
        }
    }

    /// All values over the product lattice.
    pub fn dense_values(&self) -> Vec<Complex64> {
        if self.blocks.len() == 1 {
            return self.blocks[0].values.clone();
        }
        (0..self.len()).into_par_iter().map(|k| self.value_flat(k)).collect()
    }

    /// The same symbol stored as a single dense block.
    pub fn to_dense(&self) -> Symbol {
        Symbol {
            factor: self.factor,
            m: self.m,
            center: self.center.clone(),
            blocks: vec![SymbolBlock { arity: self.m, values: self.dense_values() }],
        }
    }

    /// Dense symbol `g(xi, sigma(xi))`.
    pub fn map_dense(&self, g: impl Fn(&[f64], Complex64) -> Complex64 + Sync) -> Symbol {
        let d = self.total_dims();
        let values = (0..self.len())
            .into_par_iter()
            .map(|k| {
                let mut xi = [0.0; MAX_DIMS];
                self.freq_vector(k, &mut xi);
                g(&xi[..d], self.value_flat(k))
            })
            .collect();
        Symbol {
            factor: self.factor,
            m: self.m,
            center: self.center.clone(),
            blocks: vec![SymbolBlock { arity: self.m, values }],
        }
    }

    /// Multiplies every block by a scalar (applied to the first block).
    pub fn scaled(&self, c: Complex64) -> Symbol {
        let mut out = self.clone();
        out.blocks[0].values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Lattice of the product frequency variable viewed as a physical grid, centred at zero.
    pub fn frequency_grid(&self, j: i32) -> Result<Grid> {
        let box_len = self.factor.points() as f64 * self.factor.freq_step() * (-j as f64).exp2();
        Grid::new(self.total_dims(), self.factor.points(), box_len)
    }

    /// The samples as a physical field on [`Self::frequency_grid`] at dilation `j`.
    pub fn as_field(&self, j: i32) -> Result<Field> {
        Field::from_values(self.frequency_grid(j)?, Space::Physical, self.dense_values())
    }

    /// Discrete `L^2` norm over the product lattice.
    pub fn norm_l2(&self) -> f64 {
        let h = self.factor.freq_step().powi(self.total_dims() as i32);
        let s: f64 = (0..self.len()).map(|k| self.value_flat(k).norm_sqr()).sum();
        (h * s).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn derived_quantities() {
        let g = make_grid(1, 8, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.freq_step(), 0.125);
        assert_eq!(g.nyquist(), 0.5);
        let g = make_grid(2, 256, 32.0).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.freq_step(), 1.0 / 32.0);
        assert!(make_grid(1, 7, 8.0).is_err());
        assert!(make_grid(5, 8, 8.0).is_err());
        assert!(make_grid(1, 4, 8.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
    }

    #[test]
    fn sampling_rejects_non_finite() {
        let g = make_grid(1, 8, 8.0).unwrap();
        let err = sample_real(g, |x| 1.0 / x[0]).unwrap_err();
        match err {
            Error::NonFinite { coord } => assert_eq!(coord, vec![0.0]),
            e => panic!("unexpected {e}"),
        }
        let one = sample_real(g, |_| 1.0).unwrap();
        assert!(one.values().iter().all(|v| *v == c(1.0)));
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = make_grid(1, 512, 16.0).unwrap();
        let f = sample_real(g, |x| (-PI * x[0] * x[0]).exp()).unwrap();
        let fh = forward_ft(&f).unwrap();
        let mut xi = [0.0];
        for (k, v) in fh.values().iter().enumerate() {
            fh.point(k, &mut xi);
            assert!((v - c((-PI * xi[0] * xi[0]).exp())).norm() < 1e-8);
        }
    }

    #[test]
    fn constant_transforms_to_origin_bin() {
        let g = make_grid(2, 16, 4.0).unwrap();
        let f = sample_real(g, |_| 1.0).unwrap();
        let fh = forward_ft(&f).unwrap();
        let origin = g.flatten(&[8, 8]);
        for (k, v) in fh.values().iter().enumerate() {
            let want = if k == origin { 16.0 } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-10);
        }
    }

    #[test]
    fn lattice_harmonic_has_one_bin() {
        let g = make_grid(1, 32, 8.0).unwrap();
        let f = sample(g, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0] / 8.0)).unwrap();
        assert!(f.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
        let fh = forward_ft(&f).unwrap();
        let big: Vec<usize> = (0..32).filter(|&k| fh.values()[k].norm() > 1e-9).collect();
        assert_eq!(big, vec![17]);
    }

    #[test]
    fn round_trip_and_spectrum_with_carrier() {
        let g = make_grid(1, 128, 16.0).unwrap();
        let c0 = 3.3;
        let fh = sample_spectrum(g, &[c0], |xi| c((-PI * (xi[0] - c0).powi(2)).exp())).unwrap();
        let f = inverse_ft(&fh).unwrap();
        let mut x = [0.0];
        for (k, v) in f.values().iter().enumerate() {
            f.point(k, &mut x);
            assert!((v - c((-PI * x[0] * x[0]).exp())).norm() < 1e-12);
        }
        let back = forward_ft(&f).unwrap();
        for (a, b) in back.values().iter().zip(fh.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn lp_norms() {
        let g = make_grid(1, 64, 8.0).unwrap();
        let one = sample_real(g, |_| 1.0).unwrap();
        assert!((lp_norm(&one, 2.0).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        let bump = sample_real(g, |x| if x[0].abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!((lp_norm(&bump, 1.0).unwrap() - 1.0).abs() <= g.spacing());
        let gauss = sample_real(make_grid(1, 256, 16.0).unwrap(), |x| (-PI * x[0] * x[0]).exp()).unwrap();
        assert!((lp_norm(&gauss, 2.0).unwrap() - 2f64.powf(-0.25)).abs() < 1e-6);
        assert!(lp_norm(&gauss, 0.0).is_err());
        assert_eq!(lp_norm(&gauss, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn multi_axis_transform_matches_direct_sum() {
        let g = make_grid(2, 8, 3.0).unwrap();
        let f = sample(g, |x| Complex64::new(x[0].sin() + x[1], x[0] * x[1].cos())).unwrap();
        let fh = forward_ft(&f).unwrap();
        let h2 = g.spacing() * g.spacing();
        for q in [0usize, 5, 17, 40, 63] {
            let mut xi = [0.0; 2];
            fh.point(q, &mut xi);
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..g.len() {
                let mut x = [0.0; 2];
                f.point(k, &mut x);
                s += f.values()[k] * Complex64::from_polar(h2, -2.0 * PI * (x[0] * xi[0] + x[1] * xi[1]));
            }
            assert!((s - fh.values()[q]).norm() < 1e-12);
        }
    }

    #[test]
    fn space_tags_are_enforced() {
        let g = make_grid(1, 8, 8.0).unwrap();
        let f = sample_real(g, |_| 1.0).unwrap();
        assert!(inverse_ft(&f).is_err());
        assert!(forward_ft(&forward_ft(&f).unwrap()).is_err());
    }

    #[test]
    fn symbol_blocks_match_dense() {
        let g = make_grid(1, 8, 2.0).unwrap();
        let a = Symbol::block_values(&g, 1, &[0.5], |x| c(x[0])).unwrap();
        let b = Symbol::block_values(&g, 1, &[0.0], |x| Complex64::new(1.0, x[0])).unwrap();
        let sep = Symbol::from_blocks(g, &[0.5, 0.0], vec![(1, a), (1, b)]).unwrap();
        let dense = Symbol::from_fn(g, 2, &[0.5, 0.0], |x| c(x[0]) * Complex64::new(1.0, x[1])).unwrap();
        assert_eq!(sep.to_dense().dense_values(), dense.dense_values());
        assert!(Symbol::from_fn(make_grid(2, 8, 2.0).unwrap(), 3, &[0.0; 6], |_| c(1.0)).is_err());
    }
}

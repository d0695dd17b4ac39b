//! Smooth radial cutoffs and the Littlewood-Paley families built from them.
//!
//! Every profile is assembled from [`Cutoff`], the `exp(-1/u)` bump transition, so all
//! numbers are reproducible across runs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{forward_ft, inverse_ft, Field, Grid, Space};

/// C-infinity radial transition equal to 1 on `[0, inner]` and 0 on `[outer, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    inner: f64,
    outer: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff needs 0 <= inner < outer, got ({inner}, {outer})")));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// `g(1 - u) / (g(1 - u) + g(u))` with `g(u) = exp(-1/u)` and `u = (r - inner) / (outer - inner)`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            let u = (r - self.inner) / (self.outer - self.inner);
            1.0 / (1.0 + (1.0 / (1.0 - u) - 1.0 / u).exp())
        }
    }
}

/// Builds the cutoff profile with the given transition radii.
pub fn build_cutoff(inner: f64, outer: f64) -> Result<Cutoff> {
    Cutoff::new(inner, outer)
}

const CHI1: Cutoff = Cutoff { inner: 1.0, outer: 2.0 };

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Radial profile of the annular bump `chi1(rho) - chi1(2 rho)`.
pub fn psi_profile(rho: f64) -> f64 {
    CHI1.eval(rho) - CHI1.eval(2.0 * rho)
}

/// Radial profile of `phi^_j`.
pub fn phi_profile(rho: f64, j: i32) -> f64 {
    CHI1.eval(rho * (-j as f64).exp2())
}

/// `psi^(xi / 2^j)`.
pub fn psi_hat(xi: &[f64], j: i32) -> f64 {
    psi_profile(norm(xi) * (-j as f64).exp2())
}

/// `phi^_j(xi) = chi1(xi / 2^j)`, the telescoped sum of `psi^_i` over `i <= j`.
pub fn phi_hat(xi: &[f64], j: i32) -> f64 {
    phi_profile(norm(xi), j)
}

/// The families of frequency cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameKind {
    Psi,
    Phi,
    PsiM,
    ThetaM,
    ThetaAnnular,
    ThetaTilde,
    VarphiBall,
    VarphiTilde,
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Dyadic,
    Ball(Cutoff),
    Band { outer: Cutoff, inner: Cutoff },
    Autocorrelation { bump: Cutoff, peak: f64 },
}

/// A radial frequency cutoff `F^` together with its declared support radii.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFamily {
    kind: FrameKind,
    m: usize,
    support: (f64, f64),
    profile: Profile,
}

const AUTOCORR_NODES: usize = 1024;

impl FrameFamily {
    /// Annular Littlewood-Paley bump on `1/2 < |xi| < 2`.
    pub fn psi() -> Self {
        Self { kind: FrameKind::Psi, m: 1, support: (0.5, 2.0), profile: Profile::Dyadic }
    }

    /// Low-pass companion of [`Self::psi`].
    pub fn phi() -> Self {
        Self { kind: FrameKind::Phi, m: 1, support: (0.0, 2.0), profile: Profile::Ball(CHI1) }
    }

    /// Annular bump on the product space `(R^n)^m`.
    pub fn psi_m(m: usize) -> Self {
        Self { kind: FrameKind::PsiM, m, support: (0.5, 2.0), profile: Profile::Dyadic }
    }

    /// Wide annulus, identically 1 on `[1/(4 sqrt m), 4 sqrt m]`.
    pub fn theta_m(m: usize) -> Self {
        let q = (m as f64).sqrt();
        Self {
            kind: FrameKind::ThetaM,
            m,
            support: (0.125 / q, 8.0 * q),
            profile: Profile::Band {
                outer: Cutoff { inner: 4.0 * q, outer: 8.0 * q },
                inner: Cutoff { inner: 0.125 / q, outer: 0.25 / q },
            },
        }
    }

    /// Thin annulus supported in `[1/(2000 sqrt m), 1/(1000 sqrt m)]`.
    pub fn theta_annular(m: usize) -> Self {
        let q = (m as f64).sqrt();
        let a = 1.0 / (2000.0 * q);
        let b = 1.0 / (1000.0 * q);
        let c = 0.5 * (a + b);
        Self {
            kind: FrameKind::ThetaAnnular,
            m,
            support: (a, b),
            profile: Profile::Band { outer: Cutoff { inner: c, outer: b }, inner: Cutoff { inner: a, outer: c } },
        }
    }

    /// Ball cutoff, 1 on `|xi| <= 1/(1000 sqrt m)` and supported in `|xi| <= 1/(100 sqrt m)`.
    pub fn theta_tilde(m: usize) -> Self {
        let q = (m as f64).sqrt();
        let cut = Cutoff { inner: 1.0 / (1000.0 * q), outer: 1.0 / (100.0 * q) };
        Self { kind: FrameKind::ThetaTilde, m, support: (0.0, cut.outer), profile: Profile::Ball(cut) }
    }

    /// Ball cutoff, 1 on `|xi| <= 1/(200 m)` and supported in `|xi| <= 1/(100 m)`.
    pub fn varphi_tilde(m: usize) -> Self {
        let cut = Cutoff { inner: 1.0 / (200.0 * m as f64), outer: 1.0 / (100.0 * m as f64) };
        Self { kind: FrameKind::VarphiTilde, m, support: (0.0, cut.outer), profile: Profile::Ball(cut) }
    }

    /// One-dimensional `phi^ = (b * b) / (b * b)(0)` with `b` a ball cutoff of radius `R/2`,
    /// `R = 1/(200 l m)`; its inverse transform `|b^v|^2 / ||b||_2^2` is nonnegative and
    /// positive at the origin.
    pub fn varphi_ball(m: usize, l: usize) -> Self {
        let r = 1.0 / (200.0 * (l * m) as f64);
        let bump = Cutoff { inner: 0.25 * r, outer: 0.5 * r };
        let peak = autocorrelation(&bump, 0.0);
        Self { kind: FrameKind::VarphiBall, m, support: (0.0, r), profile: Profile::Autocorrelation { bump, peak } }
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Declared `(inner, outer)` support radii at scale 0.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Radial profile at scale 0.
    pub fn profile(&self, rho: f64) -> f64 {
        match &self.profile {
            Profile::Dyadic => psi_profile(rho),
            Profile::Ball(c) => c.eval(rho),
            Profile::Band { outer, inner } => outer.eval(rho) - inner.eval(rho),
            Profile::Autocorrelation { bump, peak } => {
                if rho.abs() >= self.support.1 {
                    0.0
                } else {
                    autocorrelation(bump, rho) / peak
                }
            }
        }
    }

    /// The family member at scale `j`: `F^(xi / 2^j)`.
    pub fn hat(&self, xi: &[f64], j: i32) -> f64 {
        self.profile(norm(xi) * (-j as f64).exp2())
    }
}

fn autocorrelation(b: &Cutoff, z: f64) -> f64 {
    let z = z.abs();
    let h = b.outer;
    let lo = z - h;
    let hi = h;
    if lo >= hi {
        return 0.0;
    }
    let step = (hi - lo) / AUTOCORR_NODES as f64;
    let mut s = 0.0;
    for k in 1..AUTOCORR_NODES {
        let eta = lo + k as f64 * step;
        s += b.eval(eta) * b.eval(z - eta);
    }
    s * step
}

/// Range of dyadic scales `[j_min, j_max]` over which a sup or sum over `j` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScaleWindow {
    pub j_min: i32,
    pub j_max: i32,
}

impl ScaleWindow {
    pub fn new(j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::EmptyWindow);
        }
        Ok(Self { j_min, j_max })
    }

    /// Scales resolved by a grid: `ceil(log2(8 dxi)) ..= floor(log2(nyquist / 4))`.
    pub fn resolvable(grid: &Grid) -> Result<Self> {
        let j_min = (8.0 * grid.freq_step()).log2().ceil() as i32;
        let j_max = (grid.nyquist() / 4.0).log2().floor() as i32;
        Self::new(j_min, j_max)
    }

    /// Window for a field: the resolvable window, or for a field with a carrier the scales
    /// whose low-pass cutoff transitions over the band `|c| +- nyquist sqrt(d)`.
    pub fn for_field(f: &Field) -> Result<Self> {
        let g = f.grid();
        if !f.has_carrier() {
            return Self::resolvable(g);
        }
        let c = norm(f.carrier());
        let reach = g.nyquist() * (g.dims() as f64).sqrt();
        let hi = c + reach;
        let j_max = hi.log2().ceil() as i32;
        let j_min = if c - reach > 0.0 {
            (c - reach).log2().floor() as i32 - 1
        } else {
            (8.0 * g.freq_step()).log2().ceil() as i32
        };
        Self::new(j_min, j_max)
    }

    pub fn contains(&self, j: i32) -> bool {
        self.j_min <= j && j <= self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }
}

/// Multiplies a spectral field by `w(true frequency)`.
pub(crate) fn spectral_multiply(fh: &Field, w: impl Fn(&[f64]) -> f64 + Sync) -> Field {
    fh.weighted(w)
}

/// Convolution with the family member at scale `j`, computed spectrally.
pub fn frame_convolve(family: &FrameFamily, j: i32, f: &Field) -> Result<Field> {
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical" });
    }
    let w = ScaleWindow::for_field(f)?;
    if !w.contains(j) {
        return Err(Error::ScaleOutOfWindow { j, j_min: w.j_min, j_max: w.j_max });
    }
    let fh = forward_ft(f)?;
    inverse_ft(&spectral_multiply(&fh, |xi| family.hat(xi, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_norm, make_grid, sample, sample_real};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn cutoff_values() {
        let c = build_cutoff(1.0, 3.0).unwrap();
        assert_eq!(c.eval(0.5), 1.0);
        assert_eq!(c.eval(6.0), 0.0);
        assert_eq!(c.eval(2.0), 0.5);
        assert!(build_cutoff(2.0, 2.0).is_err());
        assert!(build_cutoff(-1.0, 2.0).is_err());
    }

    #[test]
    fn phi_hat_plateau_and_support() {
        for j in -3..=3 {
            let s = (j as f64).exp2();
            assert_eq!(phi_hat(&[0.999 * s], j), 1.0);
            assert_eq!(phi_hat(&[s], j), 1.0);
            assert_eq!(phi_hat(&[2.0 * s], j), 0.0);
            assert_eq!(phi_hat(&[0.0], j), 1.0);
        }
    }

    #[test]
    fn telescoping_on_grid() {
        let g = make_grid(1, 4096, 64.0).unwrap();
        for i in 0..g.points() {
            let xi = g.freq(i).abs();
            if (2f64.powi(-5)..=2f64.powi(5)).contains(&xi) {
                let s: f64 = (-6..=6).map(|j| psi_hat(&[xi], j)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn declared_supports_hold() {
        let fams = [
            FrameFamily::psi(),
            FrameFamily::phi(),
            FrameFamily::psi_m(2),
            FrameFamily::theta_m(3),
            FrameFamily::theta_annular(2),
            FrameFamily::theta_tilde(2),
            FrameFamily::varphi_tilde(2),
            FrameFamily::varphi_ball(2, 1),
        ];
        for f in &fams {
            let (a, b) = f.support();
            for k in 0..20000 {
                let rho = b * 1.2 * k as f64 / 20000.0;
                let v = f.profile(rho);
                assert!((0.0..=1.0 + 1e-12).contains(&v), "{:?} at {rho}: {v}", f.kind());
                if rho >= b || (a > 0.0 && rho <= a) {
                    assert_eq!(v, 0.0, "{:?} at {rho}", f.kind());
                }
            }
        }
    }

    #[test]
    fn theta_m_plateau() {
        for m in 1..=4 {
            let t = FrameFamily::theta_m(m);
            let q = (m as f64).sqrt();
            for k in 0..=1000 {
                let rho = 0.25 / q + (4.0 * q - 0.25 / q) * k as f64 / 1000.0;
                assert_eq!(t.profile(rho), 1.0);
            }
        }
    }

    #[test]
    fn theta_m_covers_localized_annulus() {
        let t = FrameFamily::theta_m(2);
        let g = make_grid(1, 64, 4.0).unwrap();
        for j in -1..=1 {
            let s = (j as f64).exp2();
            for a in 0..64 {
                for b in 0..64 {
                    let (x1, x2) = (g.freq(a), g.freq(b));
                    if (0.5 * s..=2.0 * s).contains(&x1.abs()) && x2.abs() <= 2.0 * s {
                        assert_eq!(t.hat(&[x1, x2], j), 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn varphi_ball_is_a_positive_kernel() {
        let fam = FrameFamily::varphi_ball(2, 1);
        let r = fam.support().1;
        assert_eq!(fam.profile(0.0), 1.0);
        let g = make_grid(1, 256, 64.0 / r).unwrap();
        let fh = crate::grid::sample_spectrum(g, &[0.0], |xi| Complex64::new(fam.profile(xi[0]), 0.0)).unwrap();
        let phi = inverse_ft(&fh).unwrap();
        let peak = phi.max_abs();
        assert!(phi.values().iter().all(|v| v.re >= -1e-10 * peak && v.im.abs() < 1e-10 * peak));
        assert!(phi.values()[128].re > 0.0);
    }

    #[test]
    fn frame_reconstruction() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        let f = sample(g, |x| Complex64::new((-x[0] * x[0] / 4.0).exp() * (3.0 * x[0]).cos(), x[0].sin() / (1.0 + x[0] * x[0])))
            .unwrap();
        let w = ScaleWindow::resolvable(&g).unwrap();
        let mut acc = frame_convolve(&FrameFamily::phi(), w.j_min, &f).unwrap();
        for j in w.j_min + 1..=w.j_max {
            let part = frame_convolve(&FrameFamily::psi(), j, &f).unwrap();
            acc.values_mut().iter_mut().zip(part.values()).for_each(|(a, b)| *a += b);
        }
        let hi = frame_convolve(&FrameFamily::phi(), w.j_max, &f).unwrap();
        let diff = acc.values().iter().zip(hi.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale = hi.values().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff / scale < 1e-12);
    }

    #[test]
    fn constants_are_killed_by_psi() {
        let g = make_grid(1, 256, 32.0).unwrap();
        let f = sample_real(g, |_| 2.0).unwrap();
        let w = ScaleWindow::resolvable(&g).unwrap();
        for j in w.iter() {
            let p = frame_convolve(&FrameFamily::psi(), j, &f).unwrap();
            assert!(lp_norm(&p, f64::INFINITY).unwrap() < 1e-12);
            let q = frame_convolve(&FrameFamily::phi(), j, &f).unwrap();
            assert!(q.values().iter().all(|v| (v.re - 2.0).abs() < 1e-12));
        }
        assert!(frame_convolve(&FrameFamily::psi(), w.j_max + 1, &f).is_err());
    }

    #[test]
    fn carrier_window_brackets_band() {
        let g = make_grid(1, 64, 6400.0).unwrap();
        let f = Field::zeros(g, Space::Physical).with_carrier(&[0.7]).unwrap();
        let w = ScaleWindow::for_field(&f).unwrap();
        let lo = 0.7 - g.nyquist();
        let hi = 0.7 + g.nyquist();
        assert_eq!(phi_profile(lo, w.j_min), 0.0);
        assert_eq!(phi_profile(hi, w.j_max), 1.0);
    }

    proptest! {
        #[test]
        fn nesting(xi in -64.0f64..64.0, j in -6i32..6) {
            prop_assert_eq!(psi_hat(&[xi], j) * phi_hat(&[xi], j + 1), psi_hat(&[xi], j));
        }

        #[test]
        fn psi_is_a_difference_of_phis(xi in -64.0f64..64.0, j in -6i32..6) {
            let d = phi_hat(&[xi], j) - phi_hat(&[xi], j - 1);
            prop_assert!((psi_hat(&[xi], j) - d).abs() <= 1e-15);
        }
    }
}

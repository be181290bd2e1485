//! Boundary grids, Fourier data and the classical operators of harmonic
//! analysis on the unit circle: Riesz projection, Poisson and Herglotz
//! extension, outer functions and Cauchy transforms of measures.
//!
//! Grid points are `ζ_j = exp(2πi j / N)`. Fourier coefficients are
//! normalized so that the constant function 1 has `ĉ_0 = 1`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Samples to Fourier coefficients (FFT order, scaled by 1/n).
pub fn analyze(samples: &[C64]) -> Vec<C64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    plan(n, false).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Fourier coefficients (FFT order) to samples.
pub fn synthesize(coeffs: &[C64]) -> Vec<C64> {
    let mut buf = coeffs.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

pub fn unit(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn grid_point(j: usize, n: usize) -> C64 {
    unit(2.0 * PI * j as f64 / n as f64)
}

fn check_grid_len(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "grid size {n} must be a power of two and at least 8"
        )));
    }
    Ok(())
}

/// Samples of a function at the N-th roots of unity.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGrid {
    samples: Vec<C64>,
}

impl BoundaryGrid {
    pub fn new(samples: Vec<C64>) -> Result<Self> {
        check_grid_len(samples.len())?;
        Ok(Self { samples })
    }

    pub fn from_fn(n: usize, f: impl Fn(C64) -> C64) -> Result<Self> {
        check_grid_len(n)?;
        Ok(Self {
            samples: (0..n).map(|j| f(grid_point(j, n))).collect(),
        })
    }

    pub fn from_real(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn point(&self, j: usize) -> C64 {
        grid_point(j, self.len())
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }
}

/// Fourier coefficients `ĉ_k`, `k = -N/2 .. N/2-1`, stored in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoeffs {
    data: Vec<C64>,
}

impl FourierCoeffs {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Coefficient of `ζ^k`; zero outside `-N/2 .. N/2-1`.
    pub fn get(&self, k: isize) -> C64 {
        let n = self.data.len() as isize;
        if k < -n / 2 || k >= n / 2 {
            return C64::new(0.0, 0.0);
        }
        self.data[k.rem_euclid(n) as usize]
    }

    pub fn fft_order(&self) -> &[C64] {
        &self.data
    }

    pub fn to_grid(&self) -> BoundaryGrid {
        BoundaryGrid {
            samples: synthesize(&self.data),
        }
    }
}

pub fn fourier_coeffs(s: &BoundaryGrid) -> FourierCoeffs {
    FourierCoeffs {
        data: analyze(&s.samples),
    }
}

/// Splits the coefficients into the analytic part (modes `0..N/2`) and the
/// co-analytic part (modes `-N/2..-1`). The two parts sum to the input.
pub fn riesz_project(s: &BoundaryGrid) -> (FourierCoeffs, FourierCoeffs) {
    let all = analyze(&s.samples);
    let n = all.len();
    let mut pos = vec![C64::new(0.0, 0.0); n];
    let mut neg = vec![C64::new(0.0, 0.0); n];
    for (k, c) in all.into_iter().enumerate() {
        if k < n / 2 {
            pos[k] = c;
        } else {
            neg[k] = c;
        }
    }
    (FourierCoeffs { data: pos }, FourierCoeffs { data: neg })
}

/// An analytic function on the disk given by Taylor coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskFunction {
    taylor: Vec<C64>,
}

impl DiskFunction {
    pub fn new(taylor: Vec<C64>) -> Self {
        Self { taylor }
    }

    pub fn zero() -> Self {
        Self { taylor: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self { taylor: vec![c] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut taylor = vec![C64::new(0.0, 0.0); k + 1];
        taylor[k] = C64::new(1.0, 0.0);
        Self { taylor }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// `1/(1 - conj(a) z)` truncated after `degree`.
    pub fn szego(a: C64, degree: usize) -> Self {
        let ac = a.conj();
        let mut t = Vec::with_capacity(degree + 1);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..=degree {
            t.push(p);
            p *= ac;
        }
        Self { taylor: t }
    }

    /// Interprets every DFT mode of the samples as a nonnegative power, so the
    /// resulting polynomial of degree N-1 reproduces the samples exactly.
    pub fn from_grid(s: &BoundaryGrid) -> Self {
        Self {
            taylor: analyze(&s.samples),
        }
    }

    pub fn taylor(&self) -> &[C64] {
        &self.taylor
    }

    pub fn into_taylor(self) -> Vec<C64> {
        self.taylor
    }

    pub fn len(&self) -> usize {
        self.taylor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taylor.is_empty()
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.taylor.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.taylor
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Values at `r ζ_j e^{iφ}`, `j < n`, by folding the coefficients mod n.
    pub fn eval_on_circle(&self, r: f64, n: usize, phase: f64) -> Vec<C64> {
        let mut bins = vec![C64::new(0.0, 0.0); n];
        let step = C64::from_polar(r, phase);
        let mut w = C64::new(1.0, 0.0);
        for (k, &c) in self.taylor.iter().enumerate() {
            bins[k % n] += c * w;
            w *= step;
        }
        synthesize(&bins)
    }

    pub fn boundary(&self, n: usize) -> Result<BoundaryGrid> {
        check_grid_len(n)?;
        Ok(BoundaryGrid {
            samples: self.eval_on_circle(1.0, n, 0.0),
        })
    }

    pub fn h2_norm_sq(&self) -> f64 {
        self.taylor.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn h2_norm(&self) -> f64 {
        self.h2_norm_sq().sqrt()
    }

    pub fn h2_inner(&self, other: &Self) -> C64 {
        self.taylor
            .iter()
            .zip(&other.taylor)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn resized(&self, len: usize) -> Self {
        let mut t = self.taylor.clone();
        t.resize(len, C64::new(0.0, 0.0));
        Self { taylor: t }
    }

    /// Length after dropping trailing coefficients below `tol * max|c|`.
    pub fn effective_len(&self, tol: f64) -> usize {
        let m = self.taylor.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = tol * m;
        self.taylor
            .iter()
            .rposition(|c| c.norm() > cut)
            .map_or(0, |p| p + 1)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            taylor: self.taylor.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        Self {
            taylor: (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Cauchy product truncated to `len` coefficients.
    pub fn mul_truncated(&self, other: &Self, len: usize) -> Self {
        let mut t = vec![C64::new(0.0, 0.0); len];
        for (i, &a) in self.taylor.iter().enumerate().take(len) {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in other.taylor.iter().enumerate().take(len - i) {
                t[i + j] += a * b;
            }
        }
        Self { taylor: t }
    }

    /// `z f`.
    pub fn shift(&self) -> Self {
        let mut t = Vec::with_capacity(self.len() + 1);
        t.push(C64::new(0.0, 0.0));
        t.extend_from_slice(&self.taylor);
        Self { taylor: t }
    }

    /// Backward shift `(f - f(0)) / z`.
    pub fn backward_shift(&self) -> Self {
        Self {
            taylor: self.taylor.iter().skip(1).copied().collect(),
        }
    }

    /// Difference quotient `(f - f(λ)) / (z - λ)`.
    pub fn difference_quotient(&self, lambda: C64) -> Self {
        let d = self.len();
        if d <= 1 {
            return Self::zero();
        }
        let mut q = vec![C64::new(0.0, 0.0); d - 1];
        q[d - 2] = self.taylor[d - 1];
        for k in (0..d - 2).rev() {
            q[k] = self.taylor[k + 1] + lambda * q[k + 1];
        }
        Self { taylor: q }
    }

    /// `f / (1 - conj(λ) z)`, keeping the current length.
    pub fn resolvent(&self, lambda: C64) -> Self {
        let lc = lambda.conj();
        let mut t = Vec::with_capacity(self.len());
        let mut prev = C64::new(0.0, 0.0);
        for &c in &self.taylor {
            prev = c + lc * prev;
            t.push(prev);
        }
        Self { taylor: t }
    }
}

/// Poisson extension of boundary data to an interior point.
pub fn poisson_extend(s: &BoundaryGrid, z: C64) -> Result<C64> {
    if z.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Poisson extension needs |z| < 1, got {z}"
        )));
    }
    let c = analyze(&s.samples);
    let n = c.len();
    let mut acc = C64::new(0.0, 0.0);
    let mut zp = C64::new(1.0, 0.0);
    let zc = z.conj();
    let mut zcp = C64::new(1.0, 0.0);
    for k in 0..n / 2 {
        acc += c[k] * zp;
        if k > 0 {
            acc += c[n - k] * zcp;
        }
        zp *= z;
        zcp *= zc;
    }
    // The Nyquist mode is split evenly between the two halves.
    acc += c[n / 2] * 0.5 * (zp + zcp);
    Ok(acc)
}

/// Analytic function whose real part on the circle is `s` and whose value at
/// the origin is real.
pub fn herglotz(s: &[f64]) -> Result<DiskFunction> {
    check_grid_len(s.len())?;
    let g = BoundaryGrid::from_real(s)?;
    let c = analyze(g.samples());
    let n = c.len();
    let mut t = vec![C64::new(0.0, 0.0); n / 2 + 1];
    t[0] = C64::new(c[0].re, 0.0);
    for k in 1..n / 2 {
        t[k] = c[k] * 2.0;
    }
    t[n / 2] = C64::new(c[n / 2].re, 0.0);
    Ok(DiskFunction::new(t))
}

/// Outer function with boundary modulus `m`.
pub fn outer_from_modulus(m: &[f64]) -> Result<DiskFunction> {
    check_grid_len(m.len())?;
    if m.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::DegenerateModulus);
    }
    let logm: Vec<f64> = m.iter().map(|x| x.ln()).collect();
    let h = herglotz(&logm)?;
    let hs = h.eval_on_circle(1.0, m.len(), 0.0);
    let w: Vec<C64> = hs.into_iter().map(|v| v.exp()).collect();
    Ok(DiskFunction::from_grid(&BoundaryGrid::new(w)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LogIntegral {
    Finite(f64),
    Divergent,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogDiagnostic {
    /// Midpoint-rule estimates of `∫ log m dm`, one per grid level.
    pub estimates: Vec<f64>,
    pub grid_sizes: Vec<usize>,
    pub verdict: LogIntegral,
}

pub const LOG_SLACK_NATS: f64 = 1.0;

/// Decides whether `∫ log m dm > -∞` by refining a midpoint grid `levels`
/// times. `m` maps an angle to the modulus value. Midpoints avoid landing on
/// isolated zeros at roots of unity.
pub fn log_diagnostic(m: impl Fn(f64) -> f64 + Sync, base_n: usize, levels: u32) -> LogDiagnostic {
    log_diagnostic_sampled(
        |n| {
            (0..n)
                .map(|j| m(2.0 * PI * (j as f64 + 0.5) / n as f64))
                .collect()
        },
        base_n,
        levels,
    )
}

/// As [`log_diagnostic`], with `samples(n)` returning the modulus at the n
/// midpoints `exp(2πi (j + 1/2) / n)`.
pub fn log_diagnostic_sampled(
    samples: impl Fn(usize) -> Vec<f64>,
    base_n: usize,
    levels: u32,
) -> LogDiagnostic {
    let mut estimates = Vec::new();
    let mut grid_sizes = Vec::new();
    let mut divergent = false;
    for l in 0..=levels {
        let n = base_n << l;
        let acc: f64 = samples(n).iter().map(|v| v.max(0.0).ln()).sum();
        let est = acc / n as f64;
        if !est.is_finite() {
            divergent = true;
        }
        if let Some(&prev) = estimates.last() {
            if prev - est > LOG_SLACK_NATS {
                divergent = true;
            }
        }
        estimates.push(est);
        grid_sizes.push(n);
    }
    let verdict = if divergent {
        LogIntegral::Divergent
    } else {
        LogIntegral::Finite(*estimates.last().unwrap())
    };
    LogDiagnostic {
        estimates,
        grid_sizes,
        verdict,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: C64,
    pub c: f64,
}

/// A finite positive measure on the closed disk: point masses plus an
/// optional absolutely continuous density on the circle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasureSpec {
    pub atoms: Vec<Atom>,
    pub ac_density: Option<BoundaryGrid>,
}

impl MeasureSpec {
    pub fn atoms(atoms: &[(C64, f64)]) -> Result<Self> {
        let atoms: Vec<Atom> = atoms.iter().map(|&(z, c)| Atom { z, c }).collect();
        let m = Self {
            atoms,
            ac_density: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn lebesgue(n: usize) -> Result<Self> {
        Ok(Self {
            atoms: Vec::new(),
            ac_density: Some(BoundaryGrid::from_fn(n, |_| C64::new(1.0, 0.0))?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if !(a.c > 0.0) || !a.c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom weight must be positive, got {}",
                    a.c
                )));
            }
            if a.z.norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "atom {} lies outside the closed disk",
                    a.z
                )));
            }
        }
        if let Some(d) = &self.ac_density {
            if d.samples().iter().any(|v| v.re < 0.0 || v.im != 0.0) {
                return Err(Error::InvalidArgument(
                    "density must be real and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.c).sum();
        a + self
            .ac_density
            .as_ref()
            .map_or(0.0, |d| analyze(d.samples())[0].re)
    }
}

/// `∫ dμ(ζ) / (1 - z conj(ζ))`.
pub fn cauchy_transform(mu: &MeasureSpec, z: C64) -> Result<C64> {
    if z.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Cauchy transform needs |z| < 1, got {z}"
        )));
    }
    let one = C64::new(1.0, 0.0);
    let mut acc: C64 = mu.atoms.iter().map(|a| a.c / (one - z * a.z.conj())).sum();
    if let Some(d) = &mu.ac_density {
        let c = analyze(d.samples());
        let mut zp = one;
        for &ck in c.iter().take(c.len() / 2) {
            acc += ck * zp;
            zp *= z;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(BoundaryGrid::new(vec![c(0.0, 0.0); 12]).is_err());
        assert!(BoundaryGrid::new(vec![c(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn geometric_coefficients() {
        let g = BoundaryGrid::from_fn(256, |z| 1.0 / (1.0 - 0.5 * z)).unwrap();
        let f = fourier_coeffs(&g);
        for k in 0..20 {
            assert!((f.get(k) - c(0.5f64.powi(k as i32), 0.0)).norm() < 1e-12);
        }
        for k in 1..128 {
            assert!(f.get(-k).norm() < 1e-9);
        }
    }

    #[test]
    fn riesz_parts_sum_exactly() {
        let g = BoundaryGrid::from_fn(64, |z| z + z.conj() * 3.0 + 1.0).unwrap();
        let (p, q) = riesz_project(&g);
        let all = fourier_coeffs(&g);
        for k in -32..32 {
            assert_eq!(p.get(k) + q.get(k), all.get(k));
        }
        assert!((p.get(0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((q.get(-1) - c(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let g = BoundaryGrid::from_fn(128, |z| (z * 2.0).exp() + z.conj()).unwrap();
        let back = fourier_coeffs(&g).to_grid();
        for (a, b) in g.samples().iter().zip(back.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn poisson_of_real_part() {
        let g = BoundaryGrid::from_fn(64, |z| c(z.re, 0.0)).unwrap();
        let v = poisson_extend(&g, c(0.5, 0.0)).unwrap();
        assert!((v - c(0.5, 0.0)).norm() < 1e-14);
        assert!(poisson_extend(&g, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn herglotz_of_one_plus_cos() {
        let n = 64;
        let s: Vec<f64> = (0..n).map(|j| 1.0 + grid_point(j, n).re).collect();
        let h = herglotz(&s).unwrap();
        let z = c(0.3, -0.2);
        assert!((h.eval(z) - (1.0 + z)).norm() < 1e-13);
    }

    #[test]
    fn outer_of_linear_factor() {
        let n = 512;
        let m: Vec<f64> = (0..n).map(|j| (1.0 - grid_point(j, n) / 2.0).norm()).collect();
        let w = outer_from_modulus(&m).unwrap();
        assert!((w.coeff(0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((w.coeff(1) - c(-0.5, 0.0)).norm() < 1e-12);
        for k in 2..n {
            assert!(w.coeff(k).norm() < 1e-12);
        }
        assert!(outer_from_modulus(&vec![0.0; 16]).is_err());
    }

    #[test]
    fn log_of_sine_squared() {
        let d = log_diagnostic(|t| (t / 2.0).sin().powi(2), 4096, 3);
        match d.verdict {
            LogIntegral::Finite(v) => assert!((v + 2.0 * 2f64.ln()).abs() < 1e-3),
            LogIntegral::Divergent => panic!("should be finite"),
        }
        let arc = log_diagnostic(|t| if t < PI / 2.0 { 0.0 } else { 1.0 }, 1024, 3);
        assert_eq!(arc.verdict, LogIntegral::Divergent);
    }

    #[test]
    fn cauchy_transforms() {
        let leb = MeasureSpec::lebesgue(64).unwrap();
        let z = c(0.2, 0.4);
        assert!((cauchy_transform(&leb, z).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let z0 = unit(0.7);
        let pt = MeasureSpec::atoms(&[(z0, 1.0)]).unwrap();
        let v = cauchy_transform(&pt, z).unwrap();
        assert!((v - 1.0 / (1.0 - z * z0.conj())).norm() < 1e-14);
        assert!((cauchy_transform(&pt, c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn difference_quotient_matches_definition() {
        let f = DiskFunction::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let l = c(0.3, 0.1);
        let q = f.difference_quotient(l);
        let z = c(-0.2, 0.5);
        assert!((q.eval(z) - (f.eval(z) - f.eval(l)) / (z - l)).norm() < 1e-14);
    }
}

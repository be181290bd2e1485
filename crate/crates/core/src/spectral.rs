//! Matrix outer factorization: given `Φ ≥ 0` on the circle with integrable
//! `log det Φ`, find an outer `A` with `A* A = Φ` and `A(0)` lower
//! triangular with positive diagonal.
//!
//! Wilson's Newton iteration is run on the sampled data. The block Toeplitz
//! Cholesky method of Bauer serves as a fallback when it does not converge.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{analyze, log_diagnostic, synthesize, unit, DiskFunction, LogIntegral};
use crate::symbols::psd_sqrt;

pub const MAX_DIM: usize = 8;

/// An `n×n` matrix of analytic functions, stored as Taylor coefficients.
#[derive(Clone, Debug)]
pub struct MatrixFunction {
    n: usize,
    coeffs: Vec<DMatrix<C64>>,
}

impl MatrixFunction {
    pub fn new(n: usize, coeffs: Vec<DMatrix<C64>>) -> Self {
        debug_assert!(coeffs.iter().all(|c| c.nrows() == n && c.ncols() == n));
        Self { n, coeffs }
    }

    pub fn empty() -> Self {
        Self {
            n: 0,
            coeffs: vec![DMatrix::zeros(0, 0)],
        }
    }

    pub fn constant(m: DMatrix<C64>) -> Self {
        Self {
            n: m.nrows(),
            coeffs: vec![m],
        }
    }

    /// Reads every DFT mode of the samples as a nonnegative power.
    pub fn from_grid(samples: &[DMatrix<C64>]) -> Self {
        let n = samples.first().map_or(0, |m| m.nrows());
        let len = samples.len();
        let mut coeffs = vec![DMatrix::zeros(n, n); len];
        for a in 0..n {
            for b in 0..n {
                let s: Vec<C64> = samples.iter().map(|m| m[(a, b)]).collect();
                for (k, v) in analyze(&s).into_iter().enumerate() {
                    coeffs[k][(a, b)] = v;
                }
            }
        }
        Self { n, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[DMatrix<C64>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> DMatrix<C64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.n, self.n))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: C64) -> DMatrix<C64> {
        let mut acc = DMatrix::zeros(self.n, self.n);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn entry(&self, a: usize, b: usize) -> DiskFunction {
        DiskFunction::new(self.coeffs.iter().map(|m| m[(a, b)]).collect())
    }

    /// Values at `r ζ_j e^{iφ}` on an m-point grid.
    pub fn on_circle(&self, r: f64, m: usize, phase: f64) -> Vec<DMatrix<C64>> {
        let mut out = vec![DMatrix::zeros(self.n, self.n); m];
        for a in 0..self.n {
            for b in 0..self.n {
                for (o, v) in out.iter_mut().zip(self.entry(a, b).eval_on_circle(r, m, phase)) {
                    o[(a, b)] = v;
                }
            }
        }
        out
    }

    fn left_mul(&mut self, u: &DMatrix<C64>) {
        for c in &mut self.coeffs {
            *c = u * &*c;
        }
    }
}

#[derive(Clone, Debug)]
pub struct FactorOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Eigenvalue floor; `Φ + floor·I` is factored when `Φ` dips below it.
    pub floor: f64,
    pub bauer_blocks: usize,
    pub log_levels: u32,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-12,
            floor: 1e-10,
            bauer_blocks: 64,
            log_levels: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FactorMethod {
    Trivial,
    /// Scalar trigonometric polynomial, factored through its roots.
    Roots,
    Wilson,
    Bauer,
}

#[derive(Clone, Debug)]
pub struct OuterFactor {
    pub factor: MatrixFunction,
    pub method: FactorMethod,
    pub iterations: usize,
    pub regularized: bool,
    /// `sup_j ‖A*A - Φ‖_F` on the grid.
    pub residual: f64,
    pub log_det_integral: f64,
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Outer factor `A` of `Φ`, where `phi` evaluates `Φ(ζ)` on the circle.
pub fn matrix_outer_factor(
    phi: impl Fn(C64) -> DMatrix<C64> + Sync,
    n: usize,
    grid: usize,
    opts: &FactorOptions,
) -> Result<OuterFactor> {
    if n > MAX_DIM {
        return Err(Error::Unsupported(format!(
            "matrix outer factorization supports n <= {MAX_DIM}, got {n}"
        )));
    }
    if grid < 8 || !grid.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("grid size {grid}")));
    }
    if n == 0 {
        return Ok(OuterFactor {
            factor: MatrixFunction::empty(),
            method: FactorMethod::Trivial,
            iterations: 0,
            regularized: false,
            residual: 0.0,
            log_det_integral: 0.0,
        });
    }
    let diag = log_diagnostic(
        |t| {
            let d = hermitize(&phi(unit(t))).determinant().re;
            d.max(0.0)
        },
        grid,
        opts.log_levels,
    );
    let log_det_integral = match diag.verdict {
        LogIntegral::Finite(v) => v,
        LogIntegral::Divergent => return Err(Error::ExtremeType),
    };

    // Half-step offset grid: boundary zeros of Φ at grid angles would
    // otherwise force regularization and an O(1/N) error in A.
    let phase = std::f64::consts::PI / grid as f64;
    let rot = unit(phase);
    let samples: Vec<DMatrix<C64>> = (0..grid)
        .map(|j| hermitize(&phi(crate::harmonic::grid_point(j, grid) * rot)))
        .collect();
    let min_eig = samples
        .iter()
        .map(|m| m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    let regularized = min_eig < opts.floor;
    let target: Vec<DMatrix<C64>> = samples
        .iter()
        .map(|m| {
            let mut m = m.transpose();
            if regularized {
                for i in 0..n {
                    m[(i, i)] += opts.floor;
                }
            }
            m
        })
        .collect();

    let scale = 1.0 + samples.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let bound = 1e-8 * scale;

    let attempt = |method: FactorMethod| -> Result<(MatrixFunction, usize)> {
        let (psi, iters) = match method {
            FactorMethod::Bauer => bauer(&target, n, opts.bauer_blocks)?,
            _ => wilson(&target, n, opts)?,
        };
        let transposed: Vec<DMatrix<C64>> = psi.iter().map(|m| m.transpose()).collect();
        let rotated = match method {
            FactorMethod::Bauer => MatrixFunction::new(n, transposed),
            _ => MatrixFunction::from_grid(&transposed),
        };
        let mut a = MatrixFunction::new(
            n,
            rotated
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c * unit(-phase * k as f64))
                .collect(),
        );
        gauge_fix(&mut a)?;
        Ok((a, iters))
    };

    let roots = (n == 1)
        .then(|| roots_factor(&samples, phase))
        .flatten()
        .and_then(|mut a| gauge_fix(&mut a).ok().map(|_| a))
        .filter(|a| residual_at(a, &samples, phase) <= bound);
    let (method, (a, iterations)) = match roots {
        Some(a) => (FactorMethod::Roots, (a, 0)),
        None => match attempt(FactorMethod::Wilson) {
            Ok(r) if residual_at(&r.0, &samples, phase) <= bound => (FactorMethod::Wilson, r),
            _ => (FactorMethod::Bauer, attempt(FactorMethod::Bauer)?),
        },
    };
    let residual = residual_at(&a, &samples, phase);
    if residual > bound {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(OuterFactor {
        factor: a,
        method,
        iterations,
        regularized,
        residual,
        log_det_integral,
    })
}

/// Largest trigonometric degree handled by [`roots_factor`].
const MAX_ROOTS_DEGREE: usize = 32;

/// Exact factor of a scalar trigonometric polynomial `Φ = Σ_{|k|<=d} φ_k ζ^k`
/// sampled on the rotated grid: keep one root of `ζ^d Φ(ζ)` from each pair
/// `(r, 1/conj(r))`, and one root from each double root on the circle.
/// Returns `None` when `Φ` is not a polynomial of low degree or the roots do
/// not pair up.
fn roots_factor(samples: &[DMatrix<C64>], phase: f64) -> Option<MatrixFunction> {
    let m = samples.len();
    let vals: Vec<C64> = samples.iter().map(|x| x[(0, 0)]).collect();
    let hat = analyze(&vals);
    let coef = |k: isize| hat[k.rem_euclid(m as isize) as usize] * unit(-phase * k as f64);
    let scale = hat.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let half = (m / 2) as isize;
    let d = (1..half).rev().find(|&k| coef(k).norm().max(coef(-k).norm()) > 1e-13 * scale)? as usize;
    if d > MAX_ROOTS_DEGREE || 4 * d > m {
        return None;
    }
    // Companion matrix of P(ζ) = Σ_{j=0}^{2d} φ_{j-d} ζ^j.
    let p: Vec<C64> = (0..=2 * d).map(|j| coef(j as isize - d as isize)).collect();
    let lead = p[2 * d];
    let size = 2 * d;
    let comp = DMatrix::from_fn(size, size, |i, j| {
        if i == 0 {
            -p[size - 1 - j] / lead
        } else if i == j + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let roots: Vec<C64> = comp.eigenvalues()?.iter().copied().collect();
    let band = 1e-5;
    let mut kept: Vec<C64> = roots.iter().copied().filter(|r| r.norm() > 1.0 + band).collect();
    let mut near: Vec<C64> = roots.iter().copied().filter(|r| (r.norm() - 1.0).abs() <= band).collect();
    if near.len() % 2 == 1 {
        return None;
    }
    near.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
    // A double root on the circle splits into a close pair; pair each root
    // with its nearest partner and keep the mean.
    while let Some(r) = near.pop() {
        let (idx, _) = near
            .iter()
            .enumerate()
            .map(|(i, q)| (i, (q - r).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
        let q = near.swap_remove(idx);
        let mid = (r + q) * 0.5;
        kept.push(mid / mid.norm());
    }
    if kept.len() != d {
        return None;
    }
    // A(z) = c Π (z - r), with |c| fixed at the sample where Φ is largest.
    let mut poly = vec![C64::new(1.0, 0.0)];
    for r in &kept {
        let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
        for (i, a) in poly.iter().enumerate() {
            next[i] -= r * a;
            next[i + 1] += a;
        }
        poly = next;
    }
    let (jmax, vmax) = vals
        .iter()
        .enumerate()
        .map(|(j, v)| (j, v.re))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
    let z = crate::harmonic::grid_point(jmax, m) * unit(phase);
    let at = DiskFunction::new(poly.clone()).eval(z).norm_sqr();
    let c = (vmax / at).sqrt();
    Some(MatrixFunction::new(
        1,
        poly.iter().map(|v| DMatrix::from_element(1, 1, v * c)).collect(),
    ))
}

/// Newton iteration for `S = Ψ Ψ*` with Ψ analytic.
fn wilson(s: &[DMatrix<C64>], n: usize, opts: &FactorOptions) -> Result<(Vec<DMatrix<C64>>, usize)> {
    let m = s.len();
    let mean = s.iter().fold(DMatrix::zeros(n, n), |acc, x| acc + x) * C64::new(1.0 / m as f64, 0.0);
    let mut psi = vec![psd_sqrt(&mean); m];
    let eye = DMatrix::<C64>::identity(n, n);
    for it in 1..=opts.max_iter {
        let mut g = Vec::with_capacity(m);
        for (p, sj) in psi.iter().zip(s) {
            let inv = p
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Numerical("singular iterate in spectral factorization".into()))?;
            g.push(&inv * sj * inv.adjoint() + &eye);
        }
        let mut gp = vec![DMatrix::<C64>::zeros(n, n); m];
        for a in 0..n {
            for b in 0..n {
                let col: Vec<C64> = g.iter().map(|x| x[(a, b)]).collect();
                let mut c = analyze(&col);
                // Causal part: positive modes, upper triangle of the constant
                // term with halved diagonal, and half of the Nyquist mode.
                c[0] = match a.cmp(&b) {
                    std::cmp::Ordering::Less => c[0],
                    std::cmp::Ordering::Equal => c[0] * 0.5,
                    std::cmp::Ordering::Greater => C64::new(0.0, 0.0),
                };
                c[m / 2] *= 0.5;
                for v in c.iter_mut().skip(m / 2 + 1) {
                    *v = C64::new(0.0, 0.0);
                }
                for (o, v) in gp.iter_mut().zip(synthesize(&c)) {
                    o[(a, b)] = v;
                }
            }
        }
        let mut diff = 0.0f64;
        let mut size = 0.0f64;
        for (p, q) in psi.iter_mut().zip(&gp) {
            let next = &*p * q;
            diff = diff.max((&next - &*p).norm());
            size = size.max(next.norm());
            *p = next;
        }
        if !diff.is_finite() {
            break;
        }
        if diff <= opts.tol * size.max(1.0) {
            return Ok((psi, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}

/// Bauer's method: Cholesky of the block Toeplitz section of `S`; the last
/// block row approximates the Taylor coefficients of Ψ.
fn bauer(s: &[DMatrix<C64>], n: usize, blocks: usize) -> Result<(Vec<DMatrix<C64>>, usize)> {
    let m = s.len();
    let mut hat = vec![DMatrix::<C64>::zeros(n, n); m];
    for a in 0..n {
        for b in 0..n {
            let col: Vec<C64> = s.iter().map(|x| x[(a, b)]).collect();
            for (h, v) in hat.iter_mut().zip(analyze(&col)) {
                h[(a, b)] = v;
            }
        }
    }
    let coef = |k: isize| -> DMatrix<C64> { hat[k.rem_euclid(m as isize) as usize].clone() };
    let size = blocks * n;
    let mut t = DMatrix::<C64>::zeros(size, size);
    for j in 0..blocks {
        for k in 0..blocks {
            let blk = coef(j as isize - k as isize);
            t.view_mut((j * n, k * n), (n, n)).copy_from(&blk);
        }
    }
    let t = hermitize(&t);
    let l = t
        .cholesky()
        .ok_or_else(|| Error::Numerical("block Toeplitz section is not positive definite".into()))?
        .unpack();
    let last = blocks - 1;
    let psi = (0..blocks)
        .map(|k| l.view((last * n, (last - k) * n), (n, n)).into_owned())
        .collect();
    Ok((psi, blocks))
}

/// Left-multiplies by the constant unitary that makes `A(0)` lower
/// triangular with positive diagonal.
fn gauge_fix(a: &mut MatrixFunction) -> Result<()> {
    let n = a.dim();
    let a0 = a.coeff(0);
    let m = a0.adjoint() * &a0;
    let p = DMatrix::<C64>::from_fn(n, n, |i, j| {
        if i + j == n - 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let c = hermitize(&(&p * &m * &p))
        .cholesky()
        .ok_or_else(|| Error::Numerical("A(0) is singular".into()))?
        .unpack();
    let l = &p * c.adjoint() * &p;
    let inv = a0
        .try_inverse()
        .ok_or_else(|| Error::Numerical("A(0) is singular".into()))?;
    let u = l * inv;
    a.left_mul(&u);
    Ok(())
}

/// `sup_j ‖A(ζ_j)* A(ζ_j) - Φ(ζ_j)‖_F` over the grid of the samples.
pub fn factor_residual(a: &MatrixFunction, phi: &[DMatrix<C64>]) -> f64 {
    residual_at(a, phi, 0.0)
}

fn residual_at(a: &MatrixFunction, phi: &[DMatrix<C64>], phase: f64) -> f64 {
    let vals = a.on_circle(1.0, phi.len(), phase);
    vals.iter()
        .zip(phi)
        .map(|(x, p)| (x.adjoint() * x - p).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::harmonic::{grid_point, outer_from_modulus};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar(v: C64) -> DMatrix<C64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn identity_and_constant() {
        let f = matrix_outer_factor(|_| DMatrix::identity(2, 2), 2, 64, &FactorOptions::default()).unwrap();
        assert!((f.factor.coeff(0) - DMatrix::<C64>::identity(2, 2)).norm() < 1e-12);
        let f = matrix_outer_factor(|_| scalar(c(0.5, 0.0)), 1, 64, &FactorOptions::default()).unwrap();
        assert!((f.factor.coeff(0)[(0, 0)] - c(0.5f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn linear_factor() {
        let f = matrix_outer_factor(
            |z| scalar(c((1.0 - z / 2.0).norm_sqr(), 0.0)),
            1,
            256,
            &FactorOptions::default(),
        )
        .unwrap();
        assert!((f.factor.coeff(0)[(0, 0)] - 1.0).norm() < 1e-10);
        assert!((f.factor.coeff(1)[(0, 0)] + 0.5).norm() < 1e-10);
        for k in 2..f.factor.len() {
            assert!(f.factor.coeff(k)[(0, 0)].norm() < 1e-10);
        }
    }

    #[test]
    fn agrees_with_scalar_outer() {
        let n = 256;
        let phi = |z: C64| (1.0 + 0.3 * z).norm_sqr() * (2.0 + z.re);
        let f = matrix_outer_factor(|z| scalar(c(phi(z), 0.0)), 1, n, &FactorOptions::default()).unwrap();
        let m: Vec<f64> = (0..n).map(|j| phi(grid_point(j, n)).sqrt()).collect();
        let w = outer_from_modulus(&m).unwrap();
        for k in 0..n {
            assert!((f.factor.coeff(k)[(0, 0)] - w.coeff(k)).norm() < 1e-8);
        }
    }

    #[test]
    fn two_by_two_from_row_symbol() {
        let phi = |z: C64| {
            let b = [z / 2.0, z * z / 2.0];
            DMatrix::from_fn(2, 2, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                c(id, 0.0) - b[i].conj() * b[j]
            })
        };
        let f = matrix_outer_factor(phi, 2, 128, &FactorOptions::default()).unwrap();
        assert_eq!(f.method, FactorMethod::Wilson);
        assert!(f.residual < 1e-12);
        let a0 = f.factor.coeff(0);
        assert!(a0[(0, 1)].norm() < 1e-14);
        assert!(a0[(0, 0)].im.abs() < 1e-14 && a0[(0, 0)].re > 0.0);
        assert!(a0[(1, 1)].im.abs() < 1e-14 && a0[(1, 1)].re > 0.0);
        // |det A|^2 = det Φ on the circle.
        for j in 0..16 {
            let z = grid_point(j, 16);
            let d = f.factor.eval(z).determinant().norm_sqr();
            assert!((d - phi(z).determinant().re).abs() < 1e-10);
        }
    }

    #[test]
    fn bauer_fallback_matches() {
        let s: Vec<DMatrix<C64>> = (0..128)
            .map(|j| scalar(c((1.0 - grid_point(j, 128) / 2.0).norm_sqr(), 0.0)))
            .collect();
        let (psi, _) = bauer(&s, 1, 64).unwrap();
        assert!((psi[0][(0, 0)] - 1.0).norm() < 1e-12);
        assert!((psi[1][(0, 0)] + 0.5).norm() < 1e-12);
    }

    #[test]
    fn singular_symbol_is_regularized() {
        // Rational, so no roots path; the zero sits next to a sample of the
        // offset grid, where Φ drops below the floor.
        let n = 4096;
        let w = unit(PI / n as f64 + 1e-12);
        let f = matrix_outer_factor(
            |z| scalar(c((z - w).norm_sqr() / (4.0 * (1.0 - 0.3 * z).norm_sqr()), 0.0)),
            1,
            n,
            &FactorOptions::default(),
        )
        .unwrap();
        assert!(f.regularized);
        assert!(f.residual <= 1e-8);
        assert!((f.log_det_integral + 2.0 * 2f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn polynomial_defect_with_boundary_zero_is_exact() {
        let f = matrix_outer_factor(
            |z| scalar(c(1.0 - ((z + z * z) / 2.0).norm_sqr(), 0.0)),
            1,
            512,
            &FactorOptions::default(),
        )
        .unwrap();
        assert_eq!(f.method, FactorMethod::Roots);
        assert!(!f.regularized);
        let want = [c(0.5, 0.0), c(-0.5, 0.0)];
        for k in 0..f.factor.len() {
            let w = want.get(k).copied().unwrap_or_default();
            assert!((f.factor.coeff(k)[(0, 0)] - w).norm() < 1e-12, "{k}");
        }
        // |1 - 3ζ| = |3 - ζ| on the circle, so the outer factor is (1 - z/2)(3 - z).
        let f = matrix_outer_factor(
            |z| scalar(c(((1.0 - z / 2.0) * (1.0 - 3.0 * z)).norm_sqr(), 0.0)),
            1,
            256,
            &FactorOptions::default(),
        )
        .unwrap();
        assert_eq!(f.method, FactorMethod::Roots);
        let want = [c(3.0, 0.0), c(-2.5, 0.0), c(0.5, 0.0)];
        for (k, w) in want.iter().enumerate() {
            assert!((f.factor.coeff(k)[(0, 0)] - w).norm() < 1e-12);
        }
    }

    #[test]
    fn extreme_type_detected() {
        let r = matrix_outer_factor(|_| scalar(c(0.0, 0.0)), 1, 64, &FactorOptions::default());
        assert!(matches!(r, Err(Error::ExtremeType)));
        let r = matrix_outer_factor(|_| DMatrix::identity(9, 9), 9, 64, &FactorOptions::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn residual_slope() {
        let a = MatrixFunction::constant(scalar(c(0.5f64.sqrt(), 0.0)));
        let phi = vec![scalar(c(0.5, 0.0)); 16];
        for eps in [1e-4, 1e-5, 1e-6] {
            let p = MatrixFunction::constant(scalar(c(0.5f64.sqrt() + eps, 0.0)));
            let slope = factor_residual(&p, &phi) / eps;
            assert!((slope - 2.0 * 0.5f64.sqrt()).abs() < 1e-3);
        }
        assert!(factor_residual(&a, &phi) < 1e-15);
    }
}

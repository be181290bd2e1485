//! Boundary-limit diagnostics: the integral norm formula, pointwise model
//! identities, reverse Carleson densities, the M_z-invariance criterion,
//! Cauchy duality for diagonal spaces and the Bergman to Dirichlet
//! unitary.
//!
//! Limits `r → 1` are sampled on radii `r_k = 1 - 2^{-k}`. Every radius
//! carries its own quadrature grid with `N (1 - r) >= 16`, so the
//! integrands, which vary on the scale `1 - r`, stay resolved.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{grid_point, log_diagnostic_sampled, unit, DiskFunction, LogIntegral, MeasureSpec};
use crate::model::SpaceHandle;
use crate::symbols::RowSymbol;

pub const MIN_POINTS_PER_WIDTH: f64 = 16.0;
pub const MAX_SCHEDULE_GRID: usize = 1 << 22;

#[derive(Clone, Debug, Serialize)]
pub struct LimitSchedule {
    pub k_min: u32,
    pub k_max: u32,
    pub grids: Vec<usize>,
}

impl Default for LimitSchedule {
    fn default() -> Self {
        Self::new(4, 12).unwrap()
    }
}

impl LimitSchedule {
    /// Radii `1 - 2^{-k}` for `k_min..=k_max` with the smallest admissible
    /// grids (at least 64 points).
    pub fn new(k_min: u32, k_max: u32) -> Result<Self> {
        let grids = (k_min..=k_max)
            .map(|k| (MIN_POINTS_PER_WIDTH as usize * (1usize << k)).max(64))
            .collect();
        Self::with_grids(k_min, k_max, grids)
    }

    pub fn quick() -> Self {
        Self::new(4, 8).unwrap()
    }

    pub fn with_grids(k_min: u32, k_max: u32, grids: Vec<usize>) -> Result<Self> {
        if k_min < 1 || k_max < k_min || k_max > 40 {
            return Err(Error::InvalidArgument(format!("bad radius range {k_min}..={k_max}")));
        }
        if grids.len() != (k_max - k_min + 1) as usize {
            return Err(Error::InvalidArgument("one grid size per radius is required".into()));
        }
        for (k, &n) in (k_min..=k_max).zip(&grids) {
            if !n.is_power_of_two() || n < 8 {
                return Err(Error::InvalidGrid(format!("grid size {n}")));
            }
            if (n as f64) * 0.5f64.powi(k as i32) < MIN_POINTS_PER_WIDTH {
                return Err(Error::InvalidArgument(format!(
                    "grid of {n} points under-resolves radius 1 - 2^-{k} (need N(1-r) >= 16)"
                )));
            }
            if n > MAX_SCHEDULE_GRID {
                return Err(Error::InvalidArgument(format!(
                    "radius 1 - 2^-{k} needs {n} points, above the cap {MAX_SCHEDULE_GRID}"
                )));
            }
        }
        Ok(Self { k_min, k_max, grids })
    }

    pub fn radii(&self) -> Vec<f64> {
        (self.k_min..=self.k_max).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect()
    }

    pub fn final_radius(&self) -> f64 {
        1.0 - 0.5f64.powi(self.k_max as i32)
    }

    fn levels(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.radii().into_iter().zip(self.grids.iter().copied())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitEstimate {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Advisory extrapolation `2 v_k - v_{k-1}` assuming an `O(1 - r)` error.
    pub richardson: Option<f64>,
    /// The value at the last radius, not extrapolated.
    pub final_value: f64,
}

impl LimitEstimate {
    fn from_values(radii: Vec<f64>, values: Vec<f64>) -> Self {
        let n = values.len();
        let richardson = (n >= 2).then(|| 2.0 * values[n - 1] - values[n - 2]);
        let final_value = *values.last().unwrap_or(&f64::NAN);
        Self {
            radii,
            values,
            richardson,
            final_value,
        }
    }
}

/// Quadratic forms `‖p‖²` for polynomials of degree `< d` through a
/// monomial Gram matrix computed once from the model.
struct GramForm {
    g: DMatrix<C64>,
}

impl GramForm {
    fn new(space: &SpaceHandle, len: usize) -> Result<Self> {
        Ok(Self {
            g: space.monomial_gram(len.max(1))?,
        })
    }

    fn norm_sq(&self, p: &[C64], offset: usize) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, a) in p.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            let mut row = C64::new(0.0, 0.0);
            for (k, b) in p.iter().enumerate() {
                row += self.g[(j + offset, k + offset)] * b;
            }
            acc += a.conj() * row;
        }
        acc.re
    }
}

fn significant_len(space: &SpaceHandle, f: &DiskFunction) -> Result<usize> {
    let d = f.effective_len(1e-17).max(1);
    if d > space.degree() / 2 {
        return Err(Error::Unsupported(format!(
            "function has {d} significant coefficients; the quadrature supports at most D/2 = {}",
            space.degree() / 2
        )));
    }
    Ok(d)
}

fn circle_mean(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let vals: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    vals.iter().sum::<f64>() / n as f64
}

/// `‖f‖₂² + ∫ (‖z L_{rλ} f‖² - r² ‖L_{rλ} f‖²) dm(λ)` along the schedule.
pub fn norm_formula(space: &SpaceHandle, f: &DiskFunction, schedule: &LimitSchedule) -> Result<LimitEstimate> {
    space.embed_member(f)?;
    let d = significant_len(space, f)?;
    let f = f.resized(d);
    let form = GramForm::new(space, d)?;
    let h2 = f.h2_norm_sq();
    let values = schedule
        .levels()
        .map(|(r, n)| {
            h2 + circle_mean(n, |j| {
                let q = f.difference_quotient(grid_point(j, n) * r);
                form.norm_sq(q.taylor(), 1) - r * r * form.norm_sq(q.taylor(), 0)
            })
        })
        .collect();
    Ok(LimitEstimate::from_values(schedule.radii(), values))
}

#[derive(Clone, Debug, Serialize)]
pub struct PointwiseDefect {
    /// `‖z L_λ f‖² - ‖L_λ f‖²`.
    pub lhs: f64,
    /// `‖f₁(λ)‖²`.
    pub rhs: f64,
}

pub fn pointwise_defect(space: &SpaceHandle, f: &DiskFunction, lambda: C64) -> Result<PointwiseDefect> {
    if lambda.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!("λ = {lambda} must lie in the disk")));
    }
    let p = space.embed_member(f)?;
    let q = f.difference_quotient(lambda);
    let lq = space.embed_member(&q)?.norm_sq();
    let zq = space.embed_member(&q.shift())?.norm_sq();
    let rhs = p.companion_at(lambda).iter().map(|v| v.norm_sqr()).sum();
    Ok(PointwiseDefect { lhs: zq - lq, rhs })
}

/// `∫ (1 - r²) ‖L_{rλ} f‖² dm(λ)`, the squared norm of the part of `f` that
/// the analytic model does not see. It tends to zero in this model.
pub fn wandering_norm(space: &SpaceHandle, f: &DiskFunction, schedule: &LimitSchedule) -> Result<LimitEstimate> {
    space.embed_member(f)?;
    let d = significant_len(space, f)?;
    let f = f.resized(d);
    let form = GramForm::new(space, d)?;
    let values = schedule
        .levels()
        .map(|(r, n)| {
            (1.0 - r * r)
                * circle_mean(n, |j| {
                    let q = f.difference_quotient(grid_point(j, n) * r);
                    form.norm_sq(q.taylor(), 0)
                })
        })
        .collect();
    Ok(LimitEstimate::from_values(schedule.radii(), values))
}

/// `‖L^k f‖` for `k = 0..=n`, each embedded independently.
pub fn backward_iterates(space: &SpaceHandle, f: &DiskFunction, n: usize) -> Result<Vec<f64>> {
    let mut g = f.resized(space.degree() + 1);
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        out.push(space.hb_norm(&g)?);
        g = g.backward_shift();
    }
    Ok(out)
}

/// `|‖L f‖² - (‖f‖² - |f(0)|²)|`, zero exactly when L acts isometrically on
/// `f` modulo constants, as in a model space.
pub fn norm_identity_deviation(space: &SpaceHandle, f: &DiskFunction) -> Result<f64> {
    let nf = space.hb_norm(f)?.powi(2);
    let nl = space.hb_norm(&f.backward_shift())?.powi(2);
    Ok((nl - nf + f.coeff(0).norm_sqr()).abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlesonSample {
    pub theta: f64,
    pub h1: f64,
    pub h2: f64,
    /// `(1 - Σ|b_i(ζ)|²)^{-1}`, infinite where the defect vanishes.
    pub g: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlesonReport {
    pub applicable: bool,
    pub radii: Vec<f64>,
    /// `∫ (1 - r²) ‖1/(1 - r conj(λ) z)‖² dm(λ)` per radius.
    pub h1_integrals: Vec<f64>,
    /// `∫ 1/((1 - r²) k(rλ, rλ)) dm(λ)` per radius.
    pub h2_integrals: Vec<f64>,
    pub density_radius: f64,
    pub samples: Vec<CarlesonSample>,
    /// Whether both integral families stay bounded along the schedule.
    pub bounded: bool,
}

/// `c₁(λ) = (A(λ)*)^{-1} B(λ)*`; then `(1-|λ|²)‖1/(1-conj(λ)z)‖² = 1 + ‖c₁(λ)‖²`.
fn h1_from_values(a: &DMatrix<C64>, b: &[C64]) -> f64 {
    if b.is_empty() {
        return 1.0;
    }
    let bs = DVector::from_iterator(b.len(), b.iter().map(|v| v.conj()));
    match a.adjoint().lu().solve(&bs) {
        Some(c) => 1.0 + c.norm_squared(),
        None => f64::INFINITY,
    }
}

fn h2_from_norm(bsq: f64) -> f64 {
    1.0 / (1.0 - bsq)
}

/// Reverse Carleson densities of an M_z-invariant space.
pub fn reverse_carleson(space: &SpaceHandle, schedule: &LimitSchedule, samples: usize) -> Result<CarlesonReport> {
    let verdict = mz_test(space.symbol(), space.params().grid);
    let a = match space.factor() {
        Some(a) if verdict.invariant => a,
        _ => {
            return Ok(CarlesonReport {
                applicable: false,
                radii: Vec::new(),
                h1_integrals: Vec::new(),
                h2_integrals: Vec::new(),
                density_radius: f64::NAN,
                samples: Vec::new(),
                bounded: false,
            })
        }
    };
    let sym = space.symbol();
    let mut h1_integrals = Vec::new();
    let mut h2_integrals = Vec::new();
    for (r, n) in schedule.levels() {
        let bvals: Vec<Vec<C64>> = sym.components().iter().map(|b| b.eval_on_circle(r, n, 0.0)).collect();
        let avals = a.on_circle(r, n, 0.0);
        let point = |j: usize| -> Vec<C64> { bvals.iter().map(|v| v[j]).collect() };
        h1_integrals.push(circle_mean(n, |j| h1_from_values(&avals[j], &point(j))));
        h2_integrals.push(circle_mean(n, |j| {
            h2_from_norm(point(j).iter().map(|v| v.norm_sqr()).sum())
        }));
    }
    let rf = schedule.final_radius();
    let samples = (0..samples)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / samples as f64;
            let lam = unit(theta);
            let b = sym.eval(lam * rf);
            let b1: f64 = sym.norm_sq_at(lam);
            CarlesonSample {
                theta,
                h1: h1_from_values(&a.eval(lam * rf), &b),
                h2: h2_from_norm(b.iter().map(|v| v.norm_sqr()).sum()),
                g: if b1 >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - b1) },
            }
        })
        .collect();
    let bounded = stays_bounded(&h1_integrals) && stays_bounded(&h2_integrals);
    Ok(CarlesonReport {
        applicable: true,
        radii: schedule.radii(),
        h1_integrals,
        h2_integrals,
        density_radius: rf,
        samples,
        bounded,
    })
}

/// Pointwise `1 / ((1 - r²) k(rλ, rλ)) = 1 / (1 - Σ|b_i(rλ)|²)`.
pub fn h2_density(sym: &RowSymbol, lambda: C64, r: f64) -> f64 {
    h2_from_norm(sym.norm_sq_at(lambda * r))
}

fn stays_bounded(v: &[f64]) -> bool {
    let n = v.len();
    if v.iter().any(|x| !x.is_finite()) {
        return false;
    }
    n < 3 || v[n - 1] - v[n - 2] <= 0.75 * (v[n - 2] - v[n - 3]).abs() + 1e-9 * v[n - 1].abs()
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletCarleson {
    pub admits: bool,
    /// `∫ dμ / (1 - |z|²)`.
    pub mass_integral: f64,
    /// `(θ, h(e^{iθ}))` with `h(λ) = 1 + ∫ dμ(z) / |1 - conj(λ) z|²`.
    pub density: Vec<(f64, f64)>,
}

pub fn dirichlet_reverse_carleson(mu: &MeasureSpec, samples: usize) -> Result<DirichletCarleson> {
    mu.validate()?;
    let ac = mu
        .ac_density
        .as_ref()
        .map_or(0.0, |d| d.samples().iter().map(|v| v.re).sum::<f64>());
    let mut mass_integral: f64 = mu
        .atoms
        .iter()
        .map(|a| {
            let w = 1.0 - a.z.norm_sqr();
            if w <= 1e-14 {
                f64::INFINITY
            } else {
                a.c / w
            }
        })
        .sum();
    if ac > 0.0 {
        mass_integral = f64::INFINITY;
    }
    let density = (0..samples)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / samples as f64;
            let lam = unit(theta);
            let h = 1.0
                + mu
                    .atoms
                    .iter()
                    .map(|a| a.c / (1.0 - lam.conj() * a.z).norm_sqr())
                    .sum::<f64>();
            (theta, h)
        })
        .collect();
    Ok(DirichletCarleson {
        admits: mass_integral.is_finite(),
        mass_integral,
        density,
    })
}

/// `(1 - |λ|²) ‖k_λ‖²_{D(μ)}` predicted from the measure:
/// `1 + ∫ |λ|² / |1 - conj(λ) z|² dμ(z)`.
pub fn dirichlet_kernel_growth(mu: &MeasureSpec, lambda: C64) -> f64 {
    1.0 + mu
        .atoms
        .iter()
        .map(|a| a.c * lambda.norm_sqr() / (1.0 - lambda.conj() * a.z).norm_sqr())
        .sum::<f64>()
}

#[derive(Clone, Debug, Serialize)]
pub struct MzVerdict {
    pub invariant: bool,
    /// `∫ log(1 - Σ|b_i|²) dm` when finite.
    pub log_integral: Option<f64>,
    pub estimates: Vec<f64>,
    pub grid_sizes: Vec<usize>,
    /// False for truncations of infinite-rank symbols.
    pub conclusive: bool,
    pub note: String,
}

/// `H[B]` is M_z-invariant iff `∫ log(1 - Σ|b_i|²) dm > -∞`.
pub fn mz_test(sym: &RowSymbol, grid: usize) -> MzVerdict {
    let d = log_diagnostic_sampled(
        |n| {
            sym.norm_sq_on_circle(1.0, n, PI / n as f64)
                .into_iter()
                .map(|v| 1.0 - v)
                .collect()
        },
        grid,
        3,
    );
    let (invariant, log_integral) = match d.verdict {
        LogIntegral::Finite(v) => (true, Some(v)),
        LogIntegral::Divergent => (false, None),
    };
    let conclusive = !sym.is_truncated();
    MzVerdict {
        invariant,
        log_integral,
        estimates: d.estimates,
        grid_sizes: d.grid_sizes,
        conclusive,
        note: if conclusive {
            String::new()
        } else {
            "truncated, not conclusive".into()
        },
    }
}

/// Cauchy dual of a space with diagonal monomial Gram `diag(w_n)`: the
/// weights `1/w_n`. The space must be normalized (`w_0 = 1`) and M_z must
/// be contractive (`w_n` nonincreasing).
pub fn cauchy_dual(gram: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = gram.nrows();
    if n == 0 || gram.ncols() != n {
        return Err(Error::InvalidArgument("Gram matrix must be square and nonempty".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && gram[(i, j)].norm() > 1e-14 * (gram[(i, i)].norm() + gram[(j, j)].norm()) {
                return Err(Error::Unsupported("Cauchy dual of a non-diagonal Gram matrix".into()));
            }
        }
    }
    let w: Vec<f64> = (0..n).map(|i| gram[(i, i)].re).collect();
    if (w[0] - 1.0).abs() > 1e-14 {
        return Err(Error::InvalidArgument("Gram matrix must have w_0 = 1".into()));
    }
    if w.windows(2).any(|p| p[1] > p[0] || p[1] <= 0.0) {
        return Err(Error::InvalidArgument(
            "M_z is not contractive: weights must be positive and nonincreasing".into(),
        ));
    }
    Ok(w.iter().map(|v| 1.0 / v).collect())
}

#[derive(Clone, Debug)]
pub struct UnitaryCheck {
    /// `U = diag(1/(k+1))` in monomial coordinates.
    pub u: DMatrix<f64>,
    /// `‖U M_z* U* - L‖_F` with adjoints taken in the Bergman and Dirichlet
    /// inner products.
    pub residual: f64,
}

/// `U f(z) = (1/z) ∫_0^z f`, from the Bergman space (weights `1/(k+1)`) onto
/// the Dirichlet-type space with weights `k+1`.
pub fn bergman_dirichlet_unitary(size: usize) -> UnitaryCheck {
    let wb = DMatrix::from_fn(size, size, |i, j| if i == j { 1.0 / (i as f64 + 1.0) } else { 0.0 });
    let wd = DMatrix::from_fn(size, size, |i, j| if i == j { i as f64 + 1.0 } else { 0.0 });
    let wb_inv = DMatrix::from_fn(size, size, |i, j| if i == j { i as f64 + 1.0 } else { 0.0 });
    let shift = DMatrix::from_fn(size, size, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
    let back = shift.transpose();
    let u = wb.clone();
    // Hilbert adjoints: T* = W_dom^{-1} T^T W_cod.
    let mz_adj = &wb_inv * shift.transpose() * &wb;
    let u_adj = &wb_inv * u.transpose() * &wd;
    let residual = (&u * mz_adj * u_adj - back).norm();
    UnitaryCheck { u, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;
    use crate::symbols::named_symbol;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn space(name: &str) -> SpaceHandle {
        SpaceHandle::new(named_symbol(name).unwrap(), Params::with_grid(512)).unwrap()
    }

    #[test]
    fn schedule_rejects_coarse_grids() {
        assert!(LimitSchedule::with_grids(4, 5, vec![256, 512]).is_ok());
        assert!(LimitSchedule::with_grids(4, 5, vec![256, 256]).is_err());
        assert!(LimitSchedule::new(3, 30).is_err());
    }

    #[test]
    fn norm_formula_for_z() {
        let s = space("rank1-half");
        let sch = LimitSchedule::new(4, 10).unwrap();
        let e = norm_formula(&s, &DiskFunction::monomial(1), &sch).unwrap();
        // Exact value along the schedule: 3 - r².
        for (r, v) in e.radii.iter().zip(&e.values) {
            assert!((v - (3.0 - r * r)).abs() < 1e-12);
        }
        assert!((e.final_value - 2.0).abs() < 1e-2);
    }

    #[test]
    fn pointwise_and_wandering() {
        let s = space("rank1-half");
        let d = pointwise_defect(&s, &DiskFunction::monomial(1), c(0.3, 0.2)).unwrap();
        assert!((d.lhs - 1.0).abs() < 1e-12 && (d.rhs - 1.0).abs() < 1e-12);
        let w = wandering_norm(&s, &DiskFunction::monomial(1), &LimitSchedule::quick()).unwrap();
        // (1 - r²) ‖1‖² = 1 - r².
        let r = LimitSchedule::quick().final_radius();
        assert!((w.final_value - (1.0 - r * r)).abs() < 1e-12);
    }

    #[test]
    fn iterates_decay_geometrically() {
        let s = space("rank1-half");
        let it = backward_iterates(&s, &DiskFunction::szego(c(0.9, 0.0), 128), 20).unwrap();
        for k in 2..20 {
            assert!((it[k + 1] / it[k] - 0.9).abs() < 1e-3);
        }
    }

    #[test]
    fn deviation_examples() {
        let s = space("rank1-half");
        let d = norm_identity_deviation(&s, &DiskFunction::monomial(1)).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        let s = space("inner-z");
        let d = norm_identity_deviation(&s, &DiskFunction::constant(c(1.0, 2.0))).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn carleson_rank_one_half() {
        let s = space("rank1-half");
        let sch = LimitSchedule::new(4, 10).unwrap();
        let rep = reverse_carleson(&s, &sch, 16).unwrap();
        assert!(rep.applicable && rep.bounded);
        for (r, v) in rep.radii.iter().zip(&rep.h1_integrals) {
            assert!((v - (1.0 + r * r)).abs() < 1e-10);
        }
        for (r, v) in rep.radii.iter().zip(&rep.h2_integrals) {
            assert!((v - 2.0 / (2.0 - r * r)).abs() < 1e-10);
        }
        let rep = reverse_carleson(&space("h2"), &sch, 4).unwrap();
        assert!(rep.samples.iter().all(|s| s.h1 == 1.0 && s.h2 == 1.0));
        assert!(!reverse_carleson(&space("inner-z"), &sch, 4).unwrap().applicable);
    }

    #[test]
    fn dirichlet_carleson_examples() {
        let r = dirichlet_reverse_carleson(&MeasureSpec::atoms(&[(c(0.0, 0.0), 1.0)]).unwrap(), 8).unwrap();
        assert!(r.admits && r.density.iter().all(|p| (p.1 - 2.0).abs() < 1e-15));
        let r = dirichlet_reverse_carleson(&MeasureSpec::atoms(&[(c(1.0, 0.0), 1.0)]).unwrap(), 8).unwrap();
        assert!(!r.admits);
        let r = dirichlet_reverse_carleson(&MeasureSpec::atoms(&[(c(0.5, 0.0), 0.5)]).unwrap(), 8).unwrap();
        for (t, h) in r.density {
            assert!((h - (1.0 + 0.5 / (1.0 - unit(t).conj() * 0.5).norm_sqr())).abs() < 1e-14);
        }
    }

    #[test]
    fn mz_examples() {
        let v = mz_test(&named_symbol("rank1-half").unwrap(), 1024);
        assert!(v.invariant && (v.log_integral.unwrap() - 0.5f64.ln()).abs() < 1e-12);
        assert!(!mz_test(&named_symbol("inner-z").unwrap(), 1024).invariant);
        let v = mz_test(&named_symbol("binomial-half").unwrap(), 4096);
        assert!(v.invariant && (v.log_integral.unwrap() + 2.0 * 2f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn duals() {
        let berg = DMatrix::from_fn(8, 8, |i, j| if i == j { c(1.0 / (i as f64 + 1.0), 0.0) } else { c(0.0, 0.0) });
        let d = cauchy_dual(&berg).unwrap();
        for (k, v) in d.iter().enumerate() {
            assert!((v - (k as f64 + 1.0)).abs() <= 4.0 * f64::EPSILON * v);
        }
        let mut nd = berg.clone();
        nd[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(cauchy_dual(&nd), Err(Error::Unsupported(_))));
        let dir = DMatrix::from_fn(4, 4, |i, j| if i == j { c(i as f64 + 1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(cauchy_dual(&dir).is_err());
        assert!(bergman_dirichlet_unitary(64).residual <= 1e-12);
    }
}

//! Invariant subspaces: model spaces `K_θ = H² ⊖ θH²` for finite Blaschke
//! products and their traces in `H[B]`, polynomial density, and the
//! description of M_z-invariant subspaces through a generator `φ`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::analysis::{backward_iterates, mz_test, LimitEstimate, LimitSchedule};
use crate::error::{Error, Result};
use crate::harmonic::{grid_point, DiskFunction};
use crate::model::{gram_of_pairs, ModelPair, SpaceHandle};

const ZERO_TOL: f64 = 1e-12;

/// `θ(z) = Π (|a|/a) (a - z)/(1 - conj(a) z)`, with the factor `z` for `a = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct BlaschkeProduct {
    zeros: Vec<C64>,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<C64>) -> Result<Self> {
        if let Some(a) = zeros.iter().find(|a| !(a.norm() < 1.0)) {
            return Err(Error::InvalidArgument(format!("Blaschke zero {a} is not in the open disk")));
        }
        Ok(Self { zeros })
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    fn factor_taylor(a: C64, len: usize) -> DiskFunction {
        if a.norm() < ZERO_TOL {
            return DiskFunction::monomial(1).resized(len);
        }
        let u = a.norm() / a;
        // u (a - z) Σ (conj(a) z)^k
        let s = DiskFunction::szego(a, len);
        let lin = DiskFunction::new(vec![u * a, -u]);
        lin.mul_truncated(&s, len)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.zeros
            .iter()
            .map(|&a| {
                if a.norm() < ZERO_TOL {
                    z
                } else {
                    (a.norm() / a) * (a - z) / (1.0 - a.conj() * z)
                }
            })
            .product()
    }

    pub fn taylor(&self, len: usize) -> DiskFunction {
        self.zeros.iter().fold(DiskFunction::constant(C64::new(1.0, 0.0)).resized(len), |acc, &a| {
            acc.mul_truncated(&Self::factor_taylor(a, len), len)
        })
    }
}

/// Groups zeros that agree to `ZERO_TOL`, keeping multiplicities.
fn grouped_zeros(theta: &BlaschkeProduct) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &a in theta.zeros() {
        match out.iter_mut().find(|(b, _)| (b - a).norm() < ZERO_TOL) {
            Some(e) => e.1 += 1,
            None => out.push((a, 1)),
        }
    }
    out
}

/// A basis of `K_θ`: `z^j` for a zero of order m at the origin (`j < m`) and
/// `z^j / (1 - conj(a) z)^{j+1}` for a zero of order p at `a ≠ 0` (`j < p`).
pub fn model_space_basis(theta: &BlaschkeProduct, len: usize) -> Vec<DiskFunction> {
    let mut basis = Vec::new();
    for (a, p) in grouped_zeros(theta) {
        for j in 0..p {
            if a.norm() < ZERO_TOL {
                basis.push(DiskFunction::monomial(j).resized(len));
            } else {
                // Coefficient of z^k is binom(k, j) conj(a)^{k-j}.
                let ac = a.conj();
                let mut t = vec![C64::new(0.0, 0.0); len];
                if j < len {
                    t[j] = C64::new(1.0, 0.0);
                    for k in j + 1..len {
                        t[k] = t[k - 1] * ac * (k as f64 / (k - j) as f64);
                    }
                }
                basis.push(DiskFunction::new(t));
            }
        }
    }
    basis
}

#[derive(Clone, Debug)]
pub struct ModelSpaceIntersection {
    /// The basis of `K_θ` used, all members of `H[B]`.
    pub basis: Vec<DiskFunction>,
    /// `G[j][k] = ⟨e_k, e_j⟩` in `H[B]`.
    pub gram: DMatrix<C64>,
    /// Orthonormal basis in `H[B]`.
    pub orthonormal: Vec<ModelPair>,
    /// `max_i ‖L e_i - P L e_i‖ / ‖L e_i‖`.
    pub l_invariance_residual: f64,
}

fn combine(pairs: &[ModelPair], coeffs: &[C64], space: &SpaceHandle) -> ModelPair {
    let len = space.degree() + 1;
    let mut f = DiskFunction::zero().resized(len);
    let mut f1 = vec![DiskFunction::zero().resized(len); pairs.first().map_or(0, |p| p.f1.len())];
    for (p, &c) in pairs.iter().zip(coeffs) {
        f = f.add(&p.f.scale(c));
        for (g, h) in f1.iter_mut().zip(&p.f1) {
            *g = g.add(&h.scale(c));
        }
    }
    ModelPair { f, f1, residual: 0.0 }
}

fn difference(a: &ModelPair, b: &ModelPair) -> ModelPair {
    ModelPair {
        f: a.f.sub(&b.f),
        f1: a.f1.iter().zip(&b.f1).map(|(x, y)| x.sub(y)).collect(),
        residual: 0.0,
    }
}

/// `H[B] ∩ K_θ` with its Gram matrix and an L-invariance check. Every basis
/// element of `K_θ` must be a member of `H[B]`, which holds for
/// M_z-invariant spaces.
pub fn intersect_model_space(space: &SpaceHandle, theta: &BlaschkeProduct) -> Result<ModelSpaceIntersection> {
    let basis = model_space_basis(theta, space.degree() + 1);
    let pairs = basis
        .iter()
        .map(|e| space.embed_member(e))
        .collect::<Result<Vec<_>>>()?;
    let gram = gram_of_pairs(&pairs);
    let m = basis.len();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Gram matrix of the model space basis is singular".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("Gram factor is singular".into()))?;
    // e'_i = Σ_k conj(L^{-1})_{ik} e_k is orthonormal when G[j][k] = ⟨e_k, e_j⟩.
    let orthonormal = (0..m)
        .map(|i| {
            let coeffs: Vec<C64> = (0..m).map(|k| l_inv[(i, k)].conj()).collect();
            combine(&pairs, &coeffs, space)
        })
        .collect::<Vec<_>>();
    let mut worst = 0.0f64;
    for e in &basis {
        let le = space.embed_member(&e.backward_shift())?;
        let nle = le.norm();
        if nle < 1e-14 {
            continue;
        }
        let coeffs: Vec<C64> = orthonormal.iter().map(|q| le.inner(q)).collect();
        let proj = combine(&orthonormal, &coeffs, space);
        worst = worst.max(difference(&le, &proj).norm() / nle);
    }
    Ok(ModelSpaceIntersection {
        basis,
        gram,
        orthonormal,
        l_invariance_residual: worst,
    })
}

fn require_mz(space: &SpaceHandle) -> Result<()> {
    if space.is_inner() || !mz_test(space.symbol(), space.params().grid).invariant {
        return Err(Error::NotMzInvariant);
    }
    Ok(())
}

/// `‖f - p_d‖` for the best polynomial approximation of each degree `d`.
/// The projections are accumulated through a Cholesky factor that skips
/// numerically dependent monomials, so the sequence never increases.
pub fn poly_density_residual(space: &SpaceHandle, f: &DiskFunction, degrees: &[usize]) -> Result<Vec<f64>> {
    require_mz(space)?;
    let dmax = degrees.iter().copied().max().unwrap_or(0);
    let fp = space.embed_member(f)?;
    let g = space.monomial_gram(dmax)?;
    let mons = (0..=dmax)
        .map(|k| space.embed_member(&DiskFunction::monomial(k)))
        .collect::<Result<Vec<_>>>()?;
    let b: Vec<C64> = mons.iter().map(|p| fp.inner(p)).collect();
    let total = fp.norm_sq();
    let n = dmax + 1;
    let mut l = DMatrix::<C64>::zeros(n, n);
    let mut y = vec![C64::new(0.0, 0.0); n];
    let mut captured = 0.0;
    let mut res = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d > 1e-12 * g[(j, j)].re {
            let ljj = d.sqrt();
            l[(j, j)] = C64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut v = g[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = v / ljj;
            }
            let mut v = b[j];
            for k in 0..j {
                v -= l[(j, k)] * y[k];
            }
            y[j] = v / ljj;
            captured += y[j].norm_sqr();
        }
        res.push((total - captured).max(0.0).sqrt());
    }
    Ok(degrees.iter().map(|&d| res[d]).collect())
}

/// Unit-norm generator of `{f ∈ H[B] : f has a zero of order ≥ k at 0}`:
/// `z^k` minus its projection onto `z^{k+1}, ..., z^{k+m}`, normalized.
pub fn zero_order_generator(space: &SpaceHandle, k: usize, m: usize) -> Result<DiskFunction> {
    let pairs = (k..=k + m)
        .map(|j| space.embed_member(&DiskFunction::monomial(j)))
        .collect::<Result<Vec<_>>>()?;
    let g = gram_of_pairs(&pairs[1..]);
    let rhs = nalgebra::DVector::from_iterator(m, pairs[1..].iter().map(|p| pairs[0].inner(p)));
    let x = if m == 0 {
        nalgebra::DVector::zeros(0)
    } else {
        g.cholesky()
            .ok_or_else(|| Error::Numerical("monomial Gram matrix is singular".into()))?
            .solve(&rhs)
    };
    let mut phi = DiskFunction::monomial(k).resized(k + m + 1);
    for (i, c) in x.iter().enumerate() {
        phi = phi.sub(&DiskFunction::monomial(k + 1 + i).scale(*c));
    }
    let nrm = space.hb_norm(&phi)?;
    Ok(phi.scale(C64::new(1.0 / nrm, 0.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct NearlyInvariantEstimate {
    pub estimate: LimitEstimate,
    /// `‖f‖²` in `H[B]` for comparison.
    pub hb_norm_sq: f64,
    /// Fraction of quadrature nodes kept (those with `|φ(λ)| >= 1e-6`).
    pub coverage: f64,
}

/// `‖f/φ‖₂² + ∫ (‖z L^φ_{rλ} f‖² - ‖L^φ_{rλ} f‖²) dm(λ)` along the schedule,
/// where `L^φ_λ f = L_λ(f - (f(λ)/φ(λ)) φ)`.
pub fn nearly_invariant_norm(
    space: &SpaceHandle,
    phi: &DiskFunction,
    f: &DiskFunction,
    schedule: &LimitSchedule,
) -> Result<NearlyInvariantEstimate> {
    let fp = space.embed_member(f)?;
    space.embed_member(phi)?;
    let it = backward_iterates(space, f, 32)?;
    if it[0] > 0.0 && it[32] > 0.1 * it[0] {
        return Err(Error::Unsupported("backward shift iterates of f do not decay".into()));
    }
    let n = space.params().grid;
    let fs = f.boundary(n)?;
    let ps = phi.boundary(n)?;
    let mut quot = 0.0;
    for (a, b) in fs.samples().iter().zip(ps.samples()) {
        if b.norm() < 1e-12 {
            return Err(Error::Numerical("generator vanishes on the grid".into()));
        }
        quot += (a / b).norm_sqr();
    }
    quot /= n as f64;
    let d = f
        .effective_len(1e-17)
        .max(phi.effective_len(1e-17))
        .max(1);
    if d > space.degree() / 2 {
        return Err(Error::Unsupported(format!("functions need {d} coefficients, above D/2")));
    }
    let g = space.monomial_gram(d)?;
    let form = |p: &[C64], off: usize| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, a) in p.iter().enumerate() {
            for (k, b) in p.iter().enumerate() {
                acc += a.conj() * g[(j + off, k + off)] * b;
            }
        }
        acc.re
    };
    let fd = f.resized(d);
    let pd = phi.resized(d);
    let mut values = Vec::new();
    let mut coverage: f64 = 1.0;
    for (r, m) in schedule.radii().into_iter().zip(schedule.grids.iter().copied()) {
        let mut acc = 0.0;
        let mut used = 0usize;
        for j in 0..m {
            let lam = grid_point(j, m) * r;
            let pl = pd.eval(lam);
            if pl.norm() < 1e-6 {
                continue;
            }
            let gfun = fd.sub(&pd.scale(fd.eval(lam) / pl));
            let q = gfun.difference_quotient(lam);
            acc += form(q.taylor(), 1) - form(q.taylor(), 0);
            used += 1;
        }
        let cov = used as f64 / m as f64;
        coverage = coverage.min(cov);
        if cov < 0.95 {
            return Err(Error::Numerical(format!(
                "generator is too small on {:.1}% of the circle of radius {r}",
                100.0 * (1.0 - cov)
            )));
        }
        values.push(quot + acc / used as f64);
    }
    let n = values.len();
    Ok(NearlyInvariantEstimate {
        estimate: LimitEstimate {
            radii: schedule.radii(),
            richardson: (n >= 2).then(|| 2.0 * values[n - 1] - values[n - 2]),
            final_value: values[n - 1],
            values,
        },
        hb_norm_sq: fp.norm_sq(),
        coverage,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceMembership {
    pub member: bool,
    /// Share of `‖f/φ‖₂²` in the upper half of the coefficients.
    pub quotient_tail: f64,
    /// Same for `(f/φ) φ₁`.
    pub companion_tail: f64,
    pub reason: String,
}

fn tail_share(t: &[C64]) -> f64 {
    let total: f64 = t.iter().map(|c| c.norm_sqr()).sum();
    if !total.is_finite() {
        return 1.0;
    }
    if total == 0.0 {
        return 0.0;
    }
    t[t.len() / 2..].iter().map(|c| c.norm_sqr()).sum::<f64>() / total
}

/// Membership in the M_z-invariant subspace generated by `φ`:
/// `f/φ ∈ H²` and `(f/φ) φ₁ ∈ H²(Cⁿ)`, both judged from the decay of the
/// power series quotient up to degree D.
pub fn mz_subspace_membership(space: &SpaceHandle, phi: &DiskFunction, f: &DiskFunction) -> Result<SubspaceMembership> {
    let pp = space.embed_member(phi)?;
    let order = |g: &DiskFunction| {
        let m = g.taylor().iter().map(|c| c.norm()).fold(0.0, f64::max);
        g.taylor().iter().position(|c| c.norm() > 1e-12 * m)
    };
    let kp = order(phi).ok_or_else(|| Error::InvalidArgument("generator is zero".into()))?;
    let kf = match order(f) {
        Some(k) => k,
        None => {
            return Ok(SubspaceMembership {
                member: true,
                quotient_tail: 0.0,
                companion_tail: 0.0,
                reason: "zero function".into(),
            })
        }
    };
    if kf < kp {
        return Ok(SubspaceMembership {
            member: false,
            quotient_tail: 1.0,
            companion_tail: 1.0,
            reason: format!("quotient has a pole of order {} at the origin", kp - kf),
        });
    }
    let len = space.degree() + 1;
    let p: Vec<C64> = phi.taylor()[kp..].to_vec();
    let fv = f.resized(len + kp);
    let fv = &fv.taylor()[kp..];
    let mut q = vec![C64::new(0.0, 0.0); len];
    for m in 0..len {
        let mut v = fv[m];
        for j in 1..=m.min(p.len() - 1) {
            v -= p[j] * q[m - j];
        }
        q[m] = v / p[0];
    }
    let quotient_tail = tail_share(&q);
    let qf = DiskFunction::new(q);
    let companion_tail = pp
        .f1
        .iter()
        .map(|g| tail_share(qf.mul_truncated(g, len).taylor()))
        .fold(0.0, f64::max);
    let member = quotient_tail < 1e-6 && companion_tail < 1e-6;
    let reason = if member {
        String::new()
    } else if quotient_tail >= 1e-6 {
        "quotient f/φ is not square summable".into()
    } else {
        "quotient times the generator companion is not square summable".into()
    };
    Ok(SubspaceMembership {
        member,
        quotient_tail,
        companion_tail,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::unit;
    use crate::model::Params;
    use crate::symbols::named_symbol;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn space(name: &str) -> SpaceHandle {
        SpaceHandle::new(named_symbol(name).unwrap(), Params::with_grid(512)).unwrap()
    }

    #[test]
    fn blaschke_is_unimodular() {
        let t = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.2), c(-0.3, -0.6)]).unwrap();
        for j in 0..64 {
            assert!((t.eval(unit(j as f64 * 0.1)).norm() - 1.0).abs() < 1e-12);
        }
        let tt = t.taylor(200);
        let z = c(0.2, -0.3);
        assert!((tt.eval(z) - t.eval(z)).norm() < 1e-13);
        assert!(BlaschkeProduct::new(vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn basis_is_orthogonal_to_theta_h2() {
        let t = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.1), c(0.4, 0.1), c(-0.5, 0.0)]).unwrap();
        let len = 128;
        let basis = model_space_basis(&t, len);
        assert_eq!(basis.len(), 5);
        let tt = t.taylor(len);
        for e in &basis {
            for k in 0..len - 5 {
                let tz = DiskFunction::monomial(k).mul_truncated(&tt, len);
                assert!(e.h2_inner(&tz).norm() < 1e-10);
            }
        }
        let b = model_space_basis(&BlaschkeProduct::new(vec![c(0.5, 0.0)]).unwrap(), 8);
        assert!((b[0].coeff(3) - 0.125).norm() < 1e-15);
    }

    #[test]
    fn intersections_for_half_space() {
        let s = space("rank1-half");
        let t = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let r = intersect_model_space(&s, &t).unwrap();
        assert!((r.gram[(0, 0)] - 1.0).norm() < 1e-12 && (r.gram[(1, 1)] - 2.0).norm() < 1e-12);
        assert!(r.l_invariance_residual < 1e-10);
        let t = BlaschkeProduct::new(vec![c(0.5, 0.0)]).unwrap();
        let r = intersect_model_space(&s, &t).unwrap();
        assert!((r.gram[(0, 0)].re - (1.0 + 2.0 / 3.0)).abs() < 1e-12);
        for q in &r.orthonormal {
            assert!((q.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_examples() {
        let r = poly_density_residual(&space("h2"), &DiskFunction::monomial(1), &[0, 1, 2]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14 && r[1] < 1e-7 && r[2] < 1e-7);
        let s = space("rank1-half");
        let k = s.kernel(c(0.5, 0.0)).unwrap();
        let degs: Vec<usize> = (0..=24).collect();
        let r = poly_density_residual(&s, &k, &degs).unwrap();
        assert!(r.windows(2).all(|w| w[1] <= w[0]));
        assert!(r[24] <= 1e-3);
        for d in 2..12 {
            assert!((r[d + 1] / r[d] - 0.5).abs() < 1e-6);
        }
        assert!(matches!(
            poly_density_residual(&space("inner-z"), &DiskFunction::monomial(0), &[0]),
            Err(Error::NotMzInvariant)
        ));
    }

    #[test]
    fn membership_examples() {
        let s = space("rank1-half");
        let f = DiskFunction::from_real(&[0.0, 1.0, 0.3]);
        assert!(mz_subspace_membership(&s, &f, &f).unwrap().member);
        let h = space("h2");
        let m = mz_subspace_membership(&h, &DiskFunction::monomial(1), &DiskFunction::monomial(0)).unwrap();
        assert!(!m.member);
        let phi = zero_order_generator(&s, 1, 8).unwrap();
        assert!((phi.coeff(1).re - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(mz_subspace_membership(&s, &phi, &DiskFunction::monomial(2)).unwrap().member);
        let m = mz_subspace_membership(&h, &DiskFunction::from_real(&[1.0, -1.0]), &DiskFunction::monomial(0)).unwrap();
        assert!(!m.member);
    }

    #[test]
    fn nearly_invariant_norms() {
        let s = space("rank1-half");
        let phi = zero_order_generator(&s, 1, 8).unwrap();
        let f = DiskFunction::from_real(&[0.0, 1.0, 0.5, -0.25]);
        let e = nearly_invariant_norm(&s, &phi, &f, &LimitSchedule::quick()).unwrap();
        assert!((e.estimate.final_value - e.hb_norm_sq).abs() <= 2e-2 * e.hb_norm_sq);
        let h = space("h2");
        let t = BlaschkeProduct::new(vec![c(0.4, 0.3)]).unwrap();
        let phi = t.taylor(129);
        let f = phi.mul_truncated(&DiskFunction::from_real(&[1.0, 0.5]), 129);
        let e = nearly_invariant_norm(&h, &phi, &f, &LimitSchedule::quick()).unwrap();
        assert!((e.estimate.final_value - e.hb_norm_sq).abs() <= 2e-2 * e.hb_norm_sq);
    }
}

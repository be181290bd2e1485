//! The analytic model of `H[B]`: every `f` is carried together with a
//! companion `f₁ ∈ H²(Cⁿ)` such that `B*f + A*f₁` has only negative Fourier
//! modes on the circle, where `A` is the outer factor of `I - B*B`. Then
//! `‖f‖² = ‖f‖₂² + ‖f₁‖₂²` and the backward shift acts coordinatewise.
//!
//! When `B` is a scalar inner function the defect vanishes and the space is
//! the model space `H² ⊖ B H²` with the Hardy norm; the companion is empty.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::DiskFunction;
use crate::spectral::{matrix_outer_factor, FactorMethod, FactorOptions, MatrixFunction};
use crate::symbols::RowSymbol;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Params {
    /// Taylor truncation D.
    pub degree: usize,
    /// Boundary grid size N.
    pub grid: usize,
    pub tol_membership: f64,
    pub tol_solve: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self::with_grid(4096)
    }
}

impl Params {
    pub fn with_grid(grid: usize) -> Self {
        Self {
            degree: grid / 4,
            grid,
            tol_membership: 1e-7,
            tol_solve: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
enum Defect {
    Analytic(MatrixFunction),
    Inner,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorSummary {
    pub method: FactorMethod,
    pub iterations: usize,
    pub residual: f64,
    pub regularized: bool,
    pub log_det_integral: f64,
}

/// A space `H[B]` prepared for computation.
#[derive(Clone, Debug)]
pub struct SpaceHandle {
    symbol: RowSymbol,
    defect: Defect,
    params: Params,
    factor_summary: Option<FactorSummary>,
    /// Row-major `Â_m^H`.
    a_h: Vec<Vec<C64>>,
    a_h_len: usize,
    a0h_inv: Vec<C64>,
}

/// `(f, f₁)` with the residual `‖P₊(B*f + A*f₁)‖₂`.
#[derive(Clone, Debug)]
pub struct ModelPair {
    pub f: DiskFunction,
    pub f1: Vec<DiskFunction>,
    pub residual: f64,
}

impl ModelPair {
    pub fn norm_sq(&self) -> f64 {
        self.f.h2_norm_sq() + self.companion_norm_sq()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn companion_norm_sq(&self) -> f64 {
        self.f1.iter().map(|g| g.h2_norm_sq()).sum()
    }

    pub fn companion_at(&self, z: C64) -> Vec<C64> {
        self.f1.iter().map(|g| g.eval(z)).collect()
    }

    pub fn inner(&self, other: &ModelPair) -> C64 {
        self.f.h2_inner(&other.f)
            + self
                .f1
                .iter()
                .zip(&other.f1)
                .map(|(a, b)| a.h2_inner(b))
                .sum::<C64>()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub member: bool,
    pub residual: f64,
    pub norm: f64,
    /// Relative change of `‖f₁‖` between truncations D/2 and D.
    pub companion_change: f64,
}

fn mat_vec(m: &[C64], x: &[C64], n: usize, out: &mut [C64]) {
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        out[i] += row.iter().zip(x).map(|(a, b)| a * b).sum::<C64>();
    }
}

fn flat(m: &DMatrix<C64>) -> Vec<C64> {
    let n = m.nrows();
    (0..n * n).map(|k| m[(k / n, k % n)]).collect()
}

impl SpaceHandle {
    pub fn new(symbol: RowSymbol, params: Params) -> Result<Self> {
        if params.degree == 0 || params.degree > params.grid / 2 {
            return Err(Error::InvalidArgument(format!(
                "degree {} must lie in 1..=grid/2 (grid {})",
                params.degree, params.grid
            )));
        }
        let n = symbol.rank();
        if n == 1 {
            let m = symbol.norm_sq_on_circle(1.0, params.grid, 0.0);
            if m.iter().all(|v| (1.0 - v).abs() <= 1e-10) {
                return Ok(Self {
                    symbol,
                    defect: Defect::Inner,
                    params,
                    factor_summary: None,
                    a_h: Vec::new(),
                    a_h_len: 0,
                    a0h_inv: Vec::new(),
                });
            }
        }
        let comps = symbol.components().to_vec();
        let phi = move |z: C64| {
            let b: Vec<C64> = comps.iter().map(|c| c.eval(z)).collect();
            DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                C64::new(id, 0.0) - b[i].conj() * b[j]
            })
        };
        let of = matrix_outer_factor(phi, n, params.grid, &FactorOptions::default())?;
        let summary = FactorSummary {
            method: of.method,
            iterations: of.iterations,
            residual: of.residual,
            regularized: of.regularized,
            log_det_integral: of.log_det_integral,
        };
        Ok(Self::from_factor(symbol, of.factor, params, Some(summary)))
    }

    /// Uses a precomputed outer factor of `I - B*B`.
    pub fn from_factor(
        symbol: RowSymbol,
        factor: MatrixFunction,
        params: Params,
        factor_summary: Option<FactorSummary>,
    ) -> Self {
        let n = symbol.rank();
        let keep = (2 * params.degree + 2).min(factor.len());
        let a_h: Vec<Vec<C64>> = (0..keep).map(|m| flat(&factor.coeff(m).adjoint())).collect();
        let scale = a_h
            .iter()
            .map(|m| m.iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let a_h_len = a_h
            .iter()
            .rposition(|m| m.iter().any(|v| v.norm() > 1e-18 * scale))
            .map_or(1, |p| p + 1);
        let a0h_inv = if n == 0 {
            Vec::new()
        } else {
            flat(
                &factor
                    .coeff(0)
                    .adjoint()
                    .try_inverse()
                    .unwrap_or_else(|| DMatrix::zeros(n, n)),
            )
        };
        Self {
            symbol,
            defect: Defect::Analytic(factor),
            params,
            factor_summary,
            a_h,
            a_h_len,
            a0h_inv,
        }
    }

    pub fn symbol(&self) -> &RowSymbol {
        &self.symbol
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn rank(&self) -> usize {
        self.symbol.rank()
    }

    pub fn degree(&self) -> usize {
        self.params.degree
    }

    pub fn is_inner(&self) -> bool {
        matches!(self.defect, Defect::Inner)
    }

    pub fn factor(&self) -> Option<&MatrixFunction> {
        match &self.defect {
            Defect::Analytic(a) => Some(a),
            Defect::Inner => None,
        }
    }

    pub fn factor_summary(&self) -> Option<&FactorSummary> {
        self.factor_summary.as_ref()
    }

    fn companion_dim(&self) -> usize {
        match self.defect {
            Defect::Analytic(_) => self.rank(),
            Defect::Inner => 0,
        }
    }

    /// Modes `k >= -shift` of `B*f + A*f₁`, indexed from `-shift`; row-major n-vectors.
    fn boundary_modes(&self, f: &[C64], f1: &[Vec<C64>], lo: isize, hi: usize) -> Vec<Vec<C64>> {
        let n = self.rank();
        let comps = self.symbol.components();
        let mut out = Vec::with_capacity((hi as isize - lo + 1) as usize);
        let cdim = self.companion_dim();
        let flen = f1.iter().map(|g| g.len()).max().unwrap_or(0);
        let mut x = vec![C64::new(0.0, 0.0); cdim];
        for k in lo..=hi as isize {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for (i, b) in comps.iter().enumerate() {
                let bt = b.taylor();
                // Σ_j conj(b_{j-k}) f_j
                let jlo = k.max(0) as usize;
                let jhi = ((k + bt.len() as isize - 1).max(-1) + 1).min(f.len() as isize);
                let mut acc = C64::new(0.0, 0.0);
                for j in jlo..jhi.max(jlo as isize) as usize {
                    acc += bt[(j as isize - k) as usize].conj() * f[j];
                }
                v[i] = acc;
            }
            if cdim > 0 {
                let jlo = k.max(0) as usize;
                let jhi = ((k + self.a_h_len as isize).max(0) as usize).min(flen);
                for j in jlo..jhi {
                    for (xi, g) in x.iter_mut().zip(f1) {
                        *xi = g.get(j).copied().unwrap_or_default();
                    }
                    mat_vec(&self.a_h[(j as isize - k) as usize], &x, n, &mut v);
                }
            }
            out.push(v);
        }
        out
    }

    /// `‖P₊(B*f + A*f₁)‖₂` for an arbitrary pair.
    pub fn pair_residual(&self, f: &DiskFunction, f1: &[DiskFunction]) -> f64 {
        let f1v: Vec<Vec<C64>> = f1.iter().map(|g| g.taylor().to_vec()).collect();
        let top = f.len().max(f1v.iter().map(|g| g.len()).max().unwrap_or(0));
        if top == 0 {
            return 0.0;
        }
        self.boundary_modes(f.taylor(), &f1v, 0, top - 1)
            .iter()
            .flatten()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn make_pair(&self, f: DiskFunction, f1: Vec<DiskFunction>) -> ModelPair {
        let residual = self.pair_residual(&f, &f1);
        ModelPair { f, f1, residual }
    }

    /// Solves for the companion of `f` truncated to degree D.
    pub fn embed(&self, f: &DiskFunction) -> Result<ModelPair> {
        self.embed_truncated(f, self.params.degree)
    }

    fn embed_truncated(&self, f: &DiskFunction, degree: usize) -> Result<ModelPair> {
        let f = f.resized(degree + 1);
        let n = self.rank();
        let cdim = self.companion_dim();
        if cdim == 0 {
            return Ok(self.make_pair(f, vec![DiskFunction::zero(); 0]));
        }
        let rhs = self.boundary_modes(f.taylor(), &[], 0, degree);
        // Block upper triangular Toeplitz system Σ_{j>=k} Â_{j-k}^H x_j = -rhs_k.
        let mut x = vec![vec![C64::new(0.0, 0.0); n]; degree + 1];
        let mut acc = vec![C64::new(0.0, 0.0); n];
        for k in (0..=degree).rev() {
            acc.iter_mut().zip(&rhs[k]).for_each(|(a, r)| *a = *r);
            let top = (k + self.a_h_len).min(degree + 1);
            for j in k + 1..top {
                mat_vec(&self.a_h[j - k], &x[j], n, &mut acc);
            }
            acc.iter_mut().for_each(|a| *a = -*a);
            let mut sol = vec![C64::new(0.0, 0.0); n];
            mat_vec(&self.a0h_inv, &acc, n, &mut sol);
            if sol.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Numerical("companion solve produced non-finite values".into()));
            }
            x[k] = sol;
        }
        let f1 = (0..n)
            .map(|i| DiskFunction::new(x.iter().map(|v| v[i]).collect()))
            .collect();
        Ok(self.make_pair(f, f1))
    }

    pub fn membership_test(&self, f: &DiskFunction) -> Result<Membership> {
        let full = self.embed(f)?;
        let half = self.embed_truncated(f, self.params.degree / 2)?;
        let a = full.companion_norm_sq().sqrt();
        let b = half.companion_norm_sq().sqrt();
        let change = if a <= 1e-12 { (a - b).abs() } else { (a - b).abs() / a };
        Ok(Membership {
            member: full.residual <= self.params.tol_membership && change < 0.01,
            residual: full.residual,
            norm: full.norm(),
            companion_change: change,
        })
    }

    /// Embeds `f` and fails if it is not a member.
    pub fn embed_member(&self, f: &DiskFunction) -> Result<ModelPair> {
        let p = self.embed(f)?;
        if p.residual > self.params.tol_membership {
            return Err(Error::NotMember(p.residual));
        }
        Ok(p)
    }

    pub fn hb_norm(&self, f: &DiskFunction) -> Result<f64> {
        Ok(self.embed_member(f)?.norm())
    }

    pub fn inner(&self, f: &DiskFunction, g: &DiskFunction) -> Result<C64> {
        Ok(self.embed_member(f)?.inner(&self.embed_member(g)?))
    }

    /// `J L f = (L f, L f₁)`.
    pub fn backward_shift(&self, p: &ModelPair) -> ModelPair {
        self.make_pair(
            p.f.backward_shift(),
            p.f1.iter().map(|g| g.backward_shift()).collect(),
        )
    }

    /// `J(z f) = (z f, z f₁ + c)` with `c = -(A(0)*)^{-1} v`, `v` the mode
    /// `-1` of `B*f + A*f₁`.
    pub fn forward_shift(&self, p: &ModelPair) -> Result<ModelPair> {
        if self.is_inner() {
            return Err(Error::ExtremeType);
        }
        let n = self.rank();
        let f1v: Vec<Vec<C64>> = p.f1.iter().map(|g| g.taylor().to_vec()).collect();
        let v = &self.boundary_modes(p.f.taylor(), &f1v, -1, 0)[0];
        let mut c = vec![C64::new(0.0, 0.0); n];
        mat_vec(&self.a0h_inv, v, n, &mut c);
        let f1 = p
            .f1
            .iter()
            .zip(&c)
            .map(|(g, ci)| {
                let mut s = g.shift();
                let mut t = s.taylor().to_vec();
                t[0] -= ci;
                s = DiskFunction::new(t);
                s
            })
            .collect();
        Ok(self.make_pair(p.f.shift(), f1))
    }

    /// `c_f(λ) = (A(λ)*)^{-1} u_f(λ)` where `u_f` is the co-analytic function
    /// with boundary values `B*f + A*f₁`.
    pub fn cf_eval(&self, p: &ModelPair, lambda: C64) -> Result<DVector<C64>> {
        let a = self.factor().ok_or(Error::ExtremeType)?;
        if lambda.norm() >= 1.0 {
            return Err(Error::InvalidArgument(format!("λ = {lambda} must lie in the disk")));
        }
        let n = self.rank();
        let f1v: Vec<Vec<C64>> = p.f1.iter().map(|g| g.taylor().to_vec()).collect();
        let depth = self.symbol.max_len().max(self.a_h_len) + p.f.len().max(1);
        let modes = self.boundary_modes(p.f.taylor(), &f1v, -(depth as isize), 0);
        // modes[0] is mode -depth; evaluate Σ_{k>=1} u_{-k} conj(λ)^k by Horner.
        let lc = lambda.conj();
        let mut u = DVector::<C64>::zeros(n);
        for m in modes.iter().take(depth) {
            u = (u + DVector::from_column_slice(m)) * lc;
        }
        let ah = a.eval(lambda).adjoint();
        ah.lu()
            .solve(&u)
            .ok_or_else(|| Error::Numerical("A(λ) is singular".into()))
    }

    /// `J(f / (1 - conj(λ) z)) = (f/(1-conj(λ)z), (f₁ - c_f(λ))/(1-conj(λ)z))`.
    pub fn resolvent_divide(&self, p: &ModelPair, lambda: C64) -> Result<ModelPair> {
        let c = self.cf_eval(p, lambda)?;
        let len = self.params.degree + 1;
        let f = p.f.resized(len).resolvent(lambda);
        let f1 = p
            .f1
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut t = g.resized(len).into_taylor();
                t[0] -= c[i];
                DiskFunction::new(t).resolvent(lambda)
            })
            .collect();
        Ok(self.make_pair(f, f1))
    }

    /// Reproducing kernel `k_λ`, truncated to degree D.
    pub fn kernel(&self, lambda: C64) -> Result<DiskFunction> {
        if lambda.norm() >= 1.0 {
            return Err(Error::InvalidArgument(format!("λ = {lambda} must lie in the disk")));
        }
        let len = self.params.degree + 1;
        let mut t = vec![C64::new(0.0, 0.0); len];
        t[0] = C64::new(1.0, 0.0);
        for b in self.symbol.components() {
            let w = b.eval(lambda).conj();
            for (k, c) in b.taylor().iter().enumerate().take(len) {
                t[k] -= w * c;
            }
        }
        Ok(DiskFunction::new(t).resolvent(lambda))
    }

    /// Gram matrix of `1, z, ..., z^d` in the space norm, `G[j][k] = ⟨z^k, z^j⟩`.
    pub fn monomial_gram(&self, d: usize) -> Result<DMatrix<C64>> {
        if d > self.params.degree / 2 {
            return Err(Error::InvalidArgument(format!(
                "monomial Gram degree {d} exceeds D/2 = {}",
                self.params.degree / 2
            )));
        }
        let pairs = (0..=d)
            .map(|k| self.embed_member(&DiskFunction::monomial(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(gram_of_pairs(&pairs))
    }
}

/// `G[j][k] = ⟨p_k, p_j⟩`, so that `‖Σ c_k p_k‖² = c* G c`.
pub fn gram_of_pairs(pairs: &[ModelPair]) -> DMatrix<C64> {
    let m = pairs.len();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = pairs[k].inner(&pairs[j]);
            g[(j, k)] = v;
            g[(k, j)] = v.conj();
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::named_symbol;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn space(name: &str) -> SpaceHandle {
        SpaceHandle::new(named_symbol(name).unwrap(), Params::with_grid(512)).unwrap()
    }

    #[test]
    fn companion_of_z_and_one() {
        let s = space("rank1-half");
        let p = s.embed(&DiskFunction::monomial(1)).unwrap();
        assert!((p.f1[0].coeff(0) + 1.0).norm() < 1e-12);
        assert!(p.f1[0].taylor().iter().skip(1).all(|v| v.norm() < 1e-14));
        assert!((p.norm() - 2f64.sqrt()).abs() < 1e-12);
        let p = s.embed(&DiskFunction::monomial(0)).unwrap();
        assert!(p.f1[0].h2_norm() == 0.0);
    }

    #[test]
    fn kernel_norm_closed_form() {
        let s = space("rank1-half");
        for l in [c(0.5, 0.0), c(-0.3, 0.6), c(0.0, 0.0)] {
            let k = s.kernel(l).unwrap();
            let r2 = l.norm_sqr();
            let expect = (2.0 - r2) / (2.0 * (1.0 - r2));
            assert!((s.hb_norm(&k).unwrap().powi(2) - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn inner_symbol_membership() {
        let s = space("inner-z");
        assert!(s.is_inner());
        let m = s.membership_test(&DiskFunction::monomial(1)).unwrap();
        assert!(!m.member);
        let m = s.membership_test(&DiskFunction::constant(c(2.0, 1.0))).unwrap();
        assert!(m.member);
        assert!((m.norm - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn geometric_member_norm() {
        let s = space("rank1-half");
        let f = DiskFunction::szego(c(0.9, 0.0), 256);
        let m = s.membership_test(&f).unwrap();
        assert!(m.member);
        assert!((m.norm.powi(2) - (1.0 + 2.0 * 0.81 / 0.19)).abs() < 1e-8);
    }

    #[test]
    fn shifts() {
        let s = space("rank1-half");
        let pz = s.embed(&DiskFunction::monomial(1)).unwrap();
        let back = s.backward_shift(&pz);
        assert!((back.f.coeff(0) - 1.0).norm() < 1e-15);
        assert!(back.f1[0].h2_norm() < 1e-15);
        let p1 = s.embed(&DiskFunction::monomial(0)).unwrap();
        let fw = s.forward_shift(&p1).unwrap();
        assert!((fw.f1[0].coeff(0) + 1.0).norm() < 1e-12);
        assert!(fw.residual < 1e-12);
        assert!(space("inner-z").forward_shift(&p1).is_err());
    }

    #[test]
    fn cf_values() {
        let s = space("rank1-half");
        let p1 = s.embed(&DiskFunction::monomial(0)).unwrap();
        let l = c(0.3, -0.4);
        let cf = s.cf_eval(&p1, l).unwrap();
        assert!((cf[0] - l.conj()).norm() < 1e-12);
        let pz = s.embed(&DiskFunction::monomial(1)).unwrap();
        assert!(s.cf_eval(&pz, c(0.0, 0.0)).unwrap()[0].norm() < 1e-14);
    }

    #[test]
    fn resolvent_of_one() {
        let s = space("rank1-half");
        let p1 = s.embed(&DiskFunction::monomial(0)).unwrap();
        let r = s.resolvent_divide(&p1, c(0.5, 0.0)).unwrap();
        for k in 0..20 {
            let g = 0.5f64.powi(k as i32);
            assert!((r.f.coeff(k) - g).norm() < 1e-14);
            assert!((r.f1[0].coeff(k) + 0.5 * g).norm() < 1e-14);
        }
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn monomial_grams() {
        let g = space("h2").monomial_gram(8).unwrap();
        assert!((g - DMatrix::<C64>::identity(9, 9)).norm() < 1e-15);
        let g = space("rank1-half").monomial_gram(8).unwrap();
        for k in 0..9 {
            let w = if k == 0 { 1.0 } else { 2.0 };
            assert!((g[(k, k)] - w).norm() < 1e-12);
        }
        assert!(space("h2").monomial_gram(1000).is_err());
    }
}

//! Row-contraction symbols `B = (b_1, ..., b_n)`, their reproducing kernels,
//! and the two families of concrete spaces built from weights or measures:
//! weighted Hardy spaces and local Dirichlet spaces with point masses.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{Atom, DiskFunction, MeasureSpec};

pub const CONTRACTION_SLACK: f64 = 1e-10;
const CHECK_GRID: usize = 4096;
const CHECK_POINTS: usize = 100;
const CHECK_SEED: u64 = 0x5eed_b0b5;

/// A row contraction `B = (b_1, ..., b_n)` with `B(0) = 0`.
#[derive(Clone, Debug)]
pub struct RowSymbol {
    components: Vec<DiskFunction>,
    truncated: bool,
    label: String,
}

impl RowSymbol {
    /// Validates `b_i(0) = 0`, the contraction bound on the circle and at
    /// seeded interior points, and linear independence of the components.
    pub fn new(components: Vec<DiskFunction>) -> Result<Self> {
        let s = Self {
            components,
            truncated: false,
            label: String::new(),
        };
        s.validate()?;
        Ok(s)
    }

    /// The zero symbol; its space is the Hardy space.
    pub fn hardy() -> Self {
        Self {
            components: Vec::new(),
            truncated: false,
            label: "h2".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_truncated(mut self, truncated: bool) -> Self {
        self.truncated = truncated;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when the symbol is a finite truncation of an infinite-rank one.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[DiskFunction] {
        &self.components
    }

    pub fn max_len(&self) -> usize {
        self.components.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: C64) -> Vec<C64> {
        self.components.iter().map(|b| b.eval(z)).collect()
    }

    pub fn norm_sq_at(&self, z: C64) -> f64 {
        self.components.iter().map(|b| b.eval(z).norm_sqr()).sum()
    }

    /// `Σ|b_i|²` at `r ζ_j e^{iφ}` for an n-point grid.
    pub fn norm_sq_on_circle(&self, r: f64, n: usize, phase: f64) -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for b in &self.components {
            for (a, v) in acc.iter_mut().zip(b.eval_on_circle(r, n, phase)) {
                *a += v.norm_sqr();
            }
        }
        acc
    }

    fn validate(&self) -> Result<()> {
        for (i, b) in self.components.iter().enumerate() {
            if b.coeff(0).norm() > 1e-12 {
                return Err(Error::Invariant(format!("b_{} (0) = {} is not zero", i + 1, b.coeff(0))));
            }
        }
        if self.components.is_empty() {
            return Ok(());
        }
        let n = CHECK_GRID.max((2 * self.max_len()).next_power_of_two());
        let worst = self
            .norm_sq_on_circle(1.0, n, 0.0)
            .into_iter()
            .fold(0.0, f64::max);
        if worst > 1.0 + CONTRACTION_SLACK {
            return Err(Error::Invariant(format!(
                "sum |b_i|^2 reaches {worst} on the circle"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED);
        for _ in 0..CHECK_POINTS {
            let z = random_disk_point(&mut rng, 0.999);
            let v = self.norm_sq_at(z);
            if v > 1.0 + CONTRACTION_SLACK {
                return Err(Error::Invariant(format!(
                    "sum |b_i|^2 = {v} at interior point {z}"
                )));
            }
        }
        let smin = self.smallest_singular_value();
        if smin <= 1e-10 {
            return Err(Error::Invariant(format!(
                "components are linearly dependent (smallest singular value {smin:e})"
            )));
        }
        Ok(())
    }

    fn smallest_singular_value(&self) -> f64 {
        let n = self.rank();
        let g = DMatrix::from_fn(n, n, |i, j| self.components[i].h2_inner(&self.components[j]));
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || g[(i, j)] == C64::new(0.0, 0.0)));
        let emin = if diagonal {
            (0..n).map(|i| g[(i, i)].re).fold(f64::INFINITY, f64::min)
        } else {
            g.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
        };
        emin.max(0.0).sqrt()
    }
}

pub fn random_disk_point(rng: &mut impl Rng, rmax: f64) -> C64 {
    let r = rmax * rng.gen::<f64>().sqrt();
    let t = rng.gen::<f64>() * std::f64::consts::TAU;
    C64::from_polar(r, t)
}

fn check_interior(z: C64, what: &str) -> Result<()> {
    if z.norm() >= 1.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} = {z} must lie in the open disk")));
    }
    Ok(())
}

/// `k(z, λ) = (1 - B(z) B(λ)*) / (1 - conj(λ) z)`.
pub fn kernel_eval(sym: &RowSymbol, z: C64, lambda: C64) -> Result<C64> {
    check_interior(z, "z")?;
    check_interior(lambda, "lambda")?;
    let bz = sym.eval(z);
    let bl = sym.eval(lambda);
    Ok(kernel_from_values(&bz, &bl, z, lambda))
}

fn kernel_from_values(bz: &[C64], bl: &[C64], z: C64, lambda: C64) -> C64 {
    let s: C64 = bz.iter().zip(bl).map(|(a, b)| a * b.conj()).sum();
    (1.0 - s) / (1.0 - lambda.conj() * z)
}

/// `G[j][i] = k(λ_j, λ_i)`, so that `c* G c = ‖Σ c_i k_{λ_i}‖²`.
pub fn gram_matrix(sym: &RowSymbol, points: &[C64]) -> Result<DMatrix<C64>> {
    for (i, &p) in points.iter().enumerate() {
        check_interior(p, "point")?;
        if points[..i].iter().any(|&q| (q - p).norm() < 1e-14) {
            return Err(Error::InvalidArgument(format!("duplicate point {p}")));
        }
    }
    let vals: Vec<Vec<C64>> = points.iter().map(|&p| sym.eval(p)).collect();
    let n = points.len();
    Ok(DMatrix::from_fn(n, n, |j, i| {
        kernel_from_values(&vals[j], &vals[i], points[j], points[i])
    }))
}

/// Hermitian square root of a positive semidefinite matrix, clipping
/// eigenvalues below zero.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let e = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// `I - B(ζ)* B(ζ)` at the n grid points.
pub fn defect_on_grid(sym: &RowSymbol, n: usize, phase: f64) -> Vec<DMatrix<C64>> {
    let r = sym.rank();
    let vals: Vec<Vec<C64>> = sym
        .components()
        .iter()
        .map(|b| b.eval_on_circle(1.0, n, phase))
        .collect();
    (0..n)
        .map(|j| {
            DMatrix::from_fn(r, r, |a, b| {
                let id = if a == b { 1.0 } else { 0.0 };
                C64::new(id, 0.0) - vals[a][j].conj() * vals[b][j]
            })
        })
        .collect()
}

/// The defect `Δ = (I - B*B)^{1/2}` at the grid points.
pub fn delta_boundary(sym: &RowSymbol, n: usize) -> Result<Vec<DMatrix<C64>>> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("grid size {n}")));
    }
    Ok(defect_on_grid(sym, n, 0.0).iter().map(psd_sqrt).collect())
}

/// Symbol of the weighted Hardy space with norm `Σ w_k |f_k|²`:
/// `b_k = sqrt(1/w_{k-1} - 1/w_k) z^k` for every strict increase of the
/// weights. The list is read as constant after its last entry; a sequence
/// still increasing at its end is flagged as truncated.
pub fn weighted_space_symbol(weights: &[f64]) -> Result<RowSymbol> {
    if weights.is_empty() || (weights[0] - 1.0).abs() > 1e-15 {
        return Err(Error::InvalidArgument("weights must start with w_0 = 1".into()));
    }
    let mut comps = Vec::new();
    for k in 1..weights.len() {
        let (a, b) = (weights[k - 1], weights[k]);
        if !(b >= a) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weights must be nondecreasing and finite (w_{} = {a}, w_{k} = {b})",
                k - 1
            )));
        }
        if b > a {
            let mut t = vec![C64::new(0.0, 0.0); k + 1];
            t[k] = C64::new((1.0 / a - 1.0 / b).sqrt(), 0.0);
            comps.push(DiskFunction::new(t));
        }
    }
    let d = weights.len();
    let truncated = d >= 2 && weights[d - 1] > weights[d - 2];
    Ok(RowSymbol::new(comps)?
        .with_truncated(truncated)
        .with_label("weighted"))
}

/// The local Dirichlet space `D(μ)` for a measure made of point masses,
/// with the embedding `f ↦ (f, √c_i (f - f(z_i)) / (z - z_i))`.
#[derive(Clone, Debug)]
pub struct DirichletSpace {
    atoms: Vec<Atom>,
}

pub fn dirichlet_point_mass_space(mu: &MeasureSpec) -> Result<DirichletSpace> {
    mu.validate()?;
    if mu.ac_density.is_some() {
        return Err(Error::Unsupported(
            "local Dirichlet spaces are built from point masses only".into(),
        ));
    }
    for (i, a) in mu.atoms.iter().enumerate() {
        if mu.atoms[..i].iter().any(|b| (b.z - a.z).norm() < 1e-12) {
            return Err(Error::InvalidArgument(format!("coincident atoms at {}", a.z)));
        }
    }
    Ok(DirichletSpace {
        atoms: mu.atoms.clone(),
    })
}

impl DirichletSpace {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Evaluation point for an atom; boundary atoms use the Abel radius
    /// `1 - 1/D` for a function with D coefficients.
    fn eval_point(a: &Atom, len: usize) -> C64 {
        if a.z.norm() >= 1.0 - 1e-12 {
            a.z * (1.0 - 1.0 / len.max(2) as f64)
        } else {
            a.z
        }
    }

    pub fn embed(&self, f: &DiskFunction) -> (DiskFunction, Vec<DiskFunction>) {
        let comps = self
            .atoms
            .iter()
            .map(|a| {
                f.difference_quotient(Self::eval_point(a, f.len()))
                    .scale(C64::new(a.c.sqrt(), 0.0))
            })
            .collect();
        (f.clone(), comps)
    }

    pub fn norm(&self, f: &DiskFunction) -> f64 {
        let (f0, comps) = self.embed(f);
        (f0.h2_norm_sq() + comps.iter().map(|c| c.h2_norm_sq()).sum::<f64>()).sqrt()
    }

    /// Gram matrix of `1, z, ..., z^{size-1}` in the space norm.
    pub fn monomial_gram(&self, size: usize) -> DMatrix<C64> {
        let mut g = DMatrix::<C64>::identity(size, size);
        for a in &self.atoms {
            let z = Self::eval_point(a, size);
            // S[j][k] = Σ_{m < min(j,k)} conj(z)^{j-1-m} z^{k-1-m}, built along diagonals.
            let mut s = DMatrix::<C64>::zeros(size, size);
            let zc = z.conj();
            let zcp: Vec<C64> = (0..size).map(|p| zc.powu(p as u32)).collect();
            let zp: Vec<C64> = (0..size).map(|p| z.powu(p as u32)).collect();
            for j in 0..size - 1 {
                for k in 0..size - 1 {
                    s[(j + 1, k + 1)] = s[(j, k)] + zcp[j] * zp[k];
                }
            }
            g += s * C64::new(a.c, 0.0);
        }
        g
    }

    /// A row symbol B with `H[B] = D(μ)` isometrically, extracted from the
    /// kernel coefficients `B(z)B(λ)* = 1 - (1 - conj(λ) z) k(z, λ)`.
    /// Requires every atom in the open disk.
    pub fn symbol(&self) -> Result<RowSymbol> {
        if self.atoms.is_empty() {
            return Ok(RowSymbol::hardy().with_label("dirichlet"));
        }
        let rmax = self.atoms.iter().map(|a| a.z.norm()).fold(0.0, f64::max);
        if rmax >= 0.98 {
            return Err(Error::Unsupported(format!(
                "atoms at radius {rmax} are too close to the circle for a polynomial symbol"
            )));
        }
        let m = if rmax < 1e-3 {
            64
        } else {
            ((40.0 / -rmax.ln()).ceil() as usize + 8).clamp(64, 1024)
        };
        let size = 2 * m;
        let g = self.monomial_gram(size);
        let k = g
            .cholesky()
            .ok_or_else(|| Error::Numerical("Dirichlet Gram matrix is not positive definite".into()))?
            .inverse();
        let mut c = DMatrix::<C64>::zeros(m, m);
        for j in 0..m {
            for l in 0..m {
                let mut v = -k[(j, l)];
                if j == 0 && l == 0 {
                    v += 1.0;
                }
                if j > 0 && l > 0 {
                    v += k[(j - 1, l - 1)];
                }
                c[(j, l)] = v;
            }
        }
        let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        let e = c.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| e.eigenvalues[b].partial_cmp(&e.eigenvalues[a]).unwrap());
        let n = self.atoms.len();
        let comps = order[..n]
            .iter()
            .map(|&i| {
                let s = e.eigenvalues[i].max(0.0).sqrt();
                let v = e.eigenvectors.column(i);
                // Fix the phase so the first significant coefficient is real positive.
                let lead = v.iter().find(|x| x.norm() > 1e-8).copied().unwrap_or(C64::new(1.0, 0.0));
                let ph = lead.conj() / lead.norm();
                let mut t: Vec<C64> = v.iter().map(|x| x * ph * s).collect();
                t[0] = C64::new(0.0, 0.0);
                DiskFunction::new(t)
            })
            .collect();
        Ok(RowSymbol::new(comps)?.with_label("dirichlet"))
    }
}

/// `‖f‖_{D(μ)}` for a measure of point masses.
pub fn dirichlet_norm(f: &DiskFunction, mu: &MeasureSpec) -> Result<f64> {
    if mu.ac_density.is_some() {
        return Err(Error::Unsupported(
            "dirichlet_norm supports point masses only".into(),
        ));
    }
    Ok(dirichlet_point_mass_space(mu)?.norm(f))
}

#[derive(Clone, Debug, Serialize)]
pub struct RankEstimate {
    pub rank: usize,
    /// Eigenvalues of `I - L L*` in decreasing order.
    pub eigenvalues: Vec<f64>,
}

/// Numerical rank of `I - L L*` from the Gram matrix of `1, z, ..., z^{s-1}`.
///
/// The kernel coefficients come from the inverse Gram; the operator is
/// then compressed to the leading half of the monomials, away from the
/// truncation edge.
pub fn estimate_rank(gram: &DMatrix<C64>, tol: f64) -> Result<RankEstimate> {
    let s = gram.nrows();
    if s < 4 || gram.ncols() != s {
        return Err(Error::InvalidArgument("Gram matrix must be square and at least 4x4".into()));
    }
    let k = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("monomial Gram matrix is not positive definite".into()))?
        .inverse();
    let m = s / 2;
    let mm = DMatrix::from_fn(m, m, |j, l| k[(j, l)] - k[(j + 1, l + 1)]);
    let gm = gram.view((0, 0), (m, m)).into_owned();
    let l = gm
        .cholesky()
        .ok_or_else(|| Error::Numerical("monomial Gram matrix is not positive definite".into()))?
        .unpack();
    let op = l.adjoint() * mm * &l;
    let op = (&op + op.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = op.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = ev.first().copied().unwrap_or(0.0);
    let rank = if top <= 1e-13 {
        0
    } else {
        ev.iter().filter(|&&v| v > tol * top).count()
    };
    Ok(RankEstimate {
        rank,
        eigenvalues: ev,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Explicit,
    Weighted,
    Dirichlet,
    Named,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AtomSpec {
    pub z: [f64; 2],
    pub c: f64,
}

/// JSON description of a space.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

pub const NAMED_SPACES: &[&str] = &["h2", "rank1-half", "binomial-half", "inner-z", "dirichlet-pair"];

impl SpaceSpec {
    pub fn named(name: &str) -> Self {
        Self {
            kind: SpaceKind::Named,
            components: None,
            weights: None,
            atoms: None,
            name: Some(name.to_string()),
        }
    }

    pub fn measure(&self) -> Result<MeasureSpec> {
        let atoms = self
            .atoms
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("dirichlet space needs \"atoms\"".into()))?;
        let v: Vec<(C64, f64)> = atoms.iter().map(|a| (C64::new(a.z[0], a.z[1]), a.c)).collect();
        MeasureSpec::atoms(&v)
    }

    pub fn to_symbol(&self) -> Result<RowSymbol> {
        match self.kind {
            SpaceKind::Explicit => {
                let comps = self
                    .components
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("explicit space needs \"components\"".into()))?;
                let comps = comps
                    .iter()
                    .map(|c| DiskFunction::new(c.iter().map(|p| C64::new(p[0], p[1])).collect()))
                    .collect();
                Ok(RowSymbol::new(comps)?.with_label("explicit"))
            }
            SpaceKind::Weighted => {
                let w = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("weighted space needs \"weights\"".into()))?;
                weighted_space_symbol(w)
            }
            SpaceKind::Dirichlet => dirichlet_point_mass_space(&self.measure()?)?.symbol(),
            SpaceKind::Named => {
                let name = self.name.as_deref().unwrap_or("");
                named_symbol(name)
            }
        }
    }
}

pub fn named_symbol(name: &str) -> Result<RowSymbol> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sym = match name {
        "h2" => RowSymbol::hardy(),
        "rank1-half" => RowSymbol::new(vec![DiskFunction::from_real(&[0.0, s])])?,
        "binomial-half" => RowSymbol::new(vec![DiskFunction::from_real(&[0.0, 0.5, 0.5])])?,
        "inner-z" => RowSymbol::new(vec![DiskFunction::from_real(&[0.0, 1.0])])?,
        "dirichlet-pair" => {
            let mu = MeasureSpec::atoms(&[(C64::new(0.5, 0.0), 1.0), (C64::new(-0.5, 0.0), 1.0)])?;
            dirichlet_point_mass_space(&mu)?.symbol()?
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown space name {other:?}; known: {}",
                NAMED_SPACES.join(", ")
            )))
        }
    };
    Ok(sym.with_label(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn half() -> RowSymbol {
        named_symbol("rank1-half").unwrap()
    }

    #[test]
    fn rejects_invalid_symbols() {
        assert!(RowSymbol::new(vec![DiskFunction::from_real(&[0.1, 0.5])]).is_err());
        assert!(RowSymbol::new(vec![DiskFunction::from_real(&[0.0, 1.01])]).is_err());
        let b = DiskFunction::from_real(&[0.0, 0.5]);
        assert!(RowSymbol::new(vec![b.clone(), b]).is_err());
    }

    #[test]
    fn kernel_values() {
        let k = kernel_eval(&half(), c(0.5, 0.0), c(0.5, 0.0)).unwrap();
        assert!((k - c(7.0 / 6.0, 0.0)).norm() < 1e-14);
        let z = c(0.3, 0.4);
        let l = c(-0.1, 0.6);
        let k = kernel_eval(&RowSymbol::hardy(), z, l).unwrap();
        assert!((k - 1.0 / (1.0 - l.conj() * z)).norm() < 1e-14);
        let k0 = kernel_eval(&half(), z, c(0.0, 0.0)).unwrap();
        assert!((k0 - 1.0).norm() < 1e-15);
        assert!(kernel_eval(&half(), c(1.0, 0.0), z).is_err());
    }

    #[test]
    fn gram_examples() {
        let pts = [c(0.0, 0.0), c(0.5, 0.0)];
        let g = gram_matrix(&RowSymbol::hardy(), &pts).unwrap();
        assert!((g[(1, 1)] - c(4.0 / 3.0, 0.0)).norm() < 1e-14);
        assert!((g[(0, 1)] - 1.0).norm() < 1e-15 && (g[(0, 0)] - 1.0).norm() < 1e-15);
        let g = gram_matrix(&half(), &pts).unwrap();
        assert!((g[(1, 1)] - c(7.0 / 6.0, 0.0)).norm() < 1e-14);
        assert!(gram_matrix(&half(), &[c(0.1, 0.0), c(0.1, 0.0)]).is_err());
    }

    #[test]
    fn defect_values() {
        let d = delta_boundary(&named_symbol("inner-z").unwrap(), 16).unwrap();
        assert!(d.iter().all(|m| m[(0, 0)].norm() < 1e-7));
        let d = delta_boundary(&half(), 16).unwrap();
        assert!(d.iter().all(|m| (m[(0, 0)].re - 0.5f64.sqrt()).abs() < 1e-14));
    }

    #[test]
    fn weighted_symbols() {
        let mut w = vec![1.0];
        w.extend(std::iter::repeat(2.0).take(20));
        let s = weighted_space_symbol(&w).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.components()[0].coeff(1).re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(!s.is_truncated());

        let w: Vec<f64> = (0..32).map(|k| k as f64 + 1.0).collect();
        let s = weighted_space_symbol(&w).unwrap();
        assert_eq!(s.rank(), 31);
        assert!(s.is_truncated());
        for (i, b) in s.components().iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((b.coeff(i + 1).re - (1.0 / (k * (k + 1.0))).sqrt()).abs() < 1e-15);
        }
        // The kernel reproduces Σ (conj(λ) z)^k / w_k with constant tail weights.
        let z = c(0.3, 0.2);
        let l = c(0.4, -0.5);
        let x = l.conj() * z;
        let mut expect = C64::new(0.0, 0.0);
        for k in 0..400 {
            expect += x.powu(k) / w[(k as usize).min(31)];
        }
        assert!((kernel_eval(&s, z, l).unwrap() - expect).norm() < 1e-12);

        assert!(weighted_space_symbol(&[2.0, 3.0]).is_err());
        assert!(weighted_space_symbol(&[1.0, 3.0, 2.0]).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        let z = DiskFunction::from_real(&[0.0, 1.0]);
        for at in [c(0.0, 0.0), c(1.0, 0.0)] {
            let sp = dirichlet_point_mass_space(&MeasureSpec::atoms(&[(at, 1.0)]).unwrap()).unwrap();
            let (_, comps) = sp.embed(&z);
            assert!((comps[0].coeff(0) - 1.0).norm() < 1e-15);
            assert!((sp.norm(&z).powi(2) - 2.0).abs() < 1e-14);
        }
        let mu0 = MeasureSpec::atoms(&[(c(0.0, 0.0), 1.0)]).unwrap();
        let z2 = DiskFunction::monomial(2);
        assert!((dirichlet_norm(&z, &mu0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((dirichlet_norm(&z2, &mu0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let dup = MeasureSpec::atoms(&[(c(0.5, 0.0), 1.0), (c(0.5, 0.0), 2.0)]).unwrap();
        assert!(dirichlet_point_mass_space(&dup).is_err());
        let mut ac = MeasureSpec::lebesgue(16).unwrap();
        ac.atoms.push(Atom { z: c(0.0, 0.0), c: 1.0 });
        assert!(dirichlet_norm(&z, &ac).is_err());
    }

    #[test]
    fn dirichlet_origin_symbol_is_half() {
        let mu = MeasureSpec::atoms(&[(c(0.0, 0.0), 1.0)]).unwrap();
        let s = dirichlet_point_mass_space(&mu).unwrap().symbol().unwrap();
        assert_eq!(s.rank(), 1);
        let b = &s.components()[0];
        assert!((b.coeff(1) - c(0.5f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!(b.taylor().iter().skip(2).all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn dirichlet_symbol_reproduces_norm() {
        let mu = MeasureSpec::atoms(&[(c(0.5, 0.0), 1.0), (c(-0.5, 0.0), 1.0)]).unwrap();
        let sp = dirichlet_point_mass_space(&mu).unwrap();
        let s = sp.symbol().unwrap();
        assert_eq!(s.rank(), 2);
        // Compare kernels: symbol formula versus inverse Gram of the explicit norm.
        let g = sp.monomial_gram(96);
        let k = g.cholesky().unwrap().inverse();
        let z = c(0.3, 0.2);
        let l = c(-0.4, 0.1);
        let vz: Vec<C64> = (0..96).map(|p| z.powu(p)).collect();
        let vl: Vec<C64> = (0..96).map(|p| l.powu(p).conj()).collect();
        let mut direct = C64::new(0.0, 0.0);
        for a in 0..96 {
            for b in 0..96 {
                direct += vz[a] * k[(a, b)] * vl[b];
            }
        }
        assert!((kernel_eval(&s, z, l).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn rank_from_explicit_grams() {
        let h2 = DMatrix::<C64>::identity(32, 32);
        assert_eq!(estimate_rank(&h2, 1e-6).unwrap().rank, 0);
        let mut g = DMatrix::<C64>::identity(32, 32) * C64::new(2.0, 0.0);
        g[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(estimate_rank(&g, 1e-6).unwrap().rank, 1);
        let mu = MeasureSpec::atoms(&[(c(0.5, 0.0), 1.0), (c(-0.5, 0.0), 1.0)]).unwrap();
        let g = dirichlet_point_mass_space(&mu).unwrap().monomial_gram(64);
        assert_eq!(estimate_rank(&g, 1e-6).unwrap().rank, 2);
    }

    #[test]
    fn space_spec_json() {
        let js = r#"{"kind":"dirichlet","atoms":[{"z":[0.5,0.0],"c":1.0}]}"#;
        let spec: SpaceSpec = serde_json::from_str(js).unwrap();
        assert_eq!(spec.to_symbol().unwrap().rank(), 1);
        let js = r#"{"kind":"explicit","components":[[[0,0],[0.5,0],[0.5,0]]]}"#;
        let spec: SpaceSpec = serde_json::from_str(js).unwrap();
        assert_eq!(spec.to_symbol().unwrap().rank(), 1);
        let js = r#"{"kind":"explicit","components":[[[0,0],[0.8,0],[0.8,0]]]}"#;
        let spec: SpaceSpec = serde_json::from_str(js).unwrap();
        assert!(matches!(spec.to_symbol(), Err(Error::Invariant(_))));
        assert!(SpaceSpec::named("nope").to_symbol().is_err());
    }
}

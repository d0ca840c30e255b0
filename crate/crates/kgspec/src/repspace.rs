//! Finite truncations of L^2 of the infinite path space.
//!
//! The level-s space R_s is spanned by the cylinder functions of the paths of
//! degree exactly (s,...,s); these are a basis and the Gram matrix of the
//! weighted inner product <u, w> = sum conj(u) w M([lambda]) is diagonal with
//! the cylinder measures on the diagonal. The J-variant uses degrees sJ.
//!
//! Operators are stored between explicit level pairs. The weighted adjoint of
//! a matrix T is G_dom^{-1} T^t G_cod; orthonormal coordinates rescale by
//! sqrt(M), so spectral norms in those coordinates are the L^2 operator norms.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};
use crate::par;
use crate::pf::{cylinder_measure, PFData};

/// Default absolute tolerance for operator identities.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("path degree {0} exceeds basis degree {1}")]
    DegreeTooLarge(Degree, Degree),
    #[error("vectors belong to different bases")]
    BasisMismatch,
    #[error("operator levels are incompatible: {0}")]
    LevelMismatch(String),
    #[error("terms must share a source vertex")]
    SourceMismatch,
    #[error("level {0} too small for this formal sum")]
    LevelTooSmall(usize),
}

/// Basis of R_s (or the J-variant): all paths of degree scale*step, in the
/// canonical enumeration order, with their cylinder measures.
#[derive(Debug)]
pub struct LevelBasis {
    pub step: Degree,
    pub scale: usize,
    pub degree: Degree,
    pub paths: Vec<Path>,
    pub measures: Vec<f64>,
    index: HashMap<Path, usize>,
}

impl LevelBasis {
    pub fn dim(&self) -> usize {
        self.paths.len()
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn same_level(&self, other: &LevelBasis) -> bool {
        self.degree == other.degree
    }
}

/// Coefficient vector over a level basis.
#[derive(Debug, Clone)]
pub struct LevelVector {
    pub basis: Arc<LevelBasis>,
    pub coeffs: DVector<f64>,
}

/// Linear map between two level bases.
#[derive(Debug, Clone)]
pub struct LevelOperator {
    pub domain: Arc<LevelBasis>,
    pub codomain: Arc<LevelBasis>,
    pub matrix: DMatrix<f64>,
}

/// Canonical basis of R_s; pass a step degree for the J-variant.
pub fn level_basis(g: &KGraph, pf: &PFData, s: usize, step: Option<Degree>) -> Arc<LevelBasis> {
    let step = step.unwrap_or_else(|| Degree::square(g.rank(), 1));
    let degree = step.scale(s);
    let paths = g.enumerate_paths(&degree, None);
    let measures: Vec<f64> = paths.iter().map(|p| cylinder_measure(pf, p)).collect();
    let index = paths
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    Arc::new(LevelBasis {
        step,
        scale: s,
        degree,
        paths,
        measures,
        index,
    })
}

/// The indicator chi_[eta] written in a finer level basis: coefficient 1 on
/// every basis path that extends eta, 0 elsewhere.
pub fn expand_to_level(g: &KGraph, eta: &Path, basis: &Arc<LevelBasis>) -> Result<LevelVector, RepError> {
    if !eta.degree.le(&basis.degree) {
        return Err(RepError::DegreeTooLarge(
            eta.degree.clone(),
            basis.degree.clone(),
        ));
    }
    let mut coeffs = DVector::zeros(basis.dim());
    let rest = basis.degree.sub(&eta.degree);
    for zeta in g.enumerate_paths(&rest, Some(eta.source)) {
        let full = g.compose(eta, &zeta).expect("ranges match by construction");
        let i = basis.index_of(&full).expect("extension lies in the basis");
        coeffs[i] = 1.0;
    }
    Ok(LevelVector {
        basis: Arc::clone(basis),
        coeffs,
    })
}

/// Weighted inner product sum conj(u) w M([lambda]).
pub fn inner_product(u: &LevelVector, w: &LevelVector) -> Result<f64, RepError> {
    if !u.basis.same_level(&w.basis) {
        return Err(RepError::BasisMismatch);
    }
    Ok(u.coeffs
        .iter()
        .zip(w.coeffs.iter())
        .zip(&u.basis.measures)
        .map(|((&a, &b), &m)| a * b * m)
        .sum())
}

/// Weighted norm of a level vector.
pub fn weighted_norm(u: &LevelVector) -> f64 {
    inner_product(u, u).expect("same basis").sqrt()
}

impl LevelOperator {
    pub fn identity(basis: &Arc<LevelBasis>) -> Self {
        LevelOperator {
            domain: Arc::clone(basis),
            codomain: Arc::clone(basis),
            matrix: DMatrix::identity(basis.dim(), basis.dim()),
        }
    }

    pub fn zero(domain: &Arc<LevelBasis>, codomain: &Arc<LevelBasis>) -> Self {
        LevelOperator {
            domain: Arc::clone(domain),
            codomain: Arc::clone(codomain),
            matrix: DMatrix::zeros(codomain.dim(), domain.dim()),
        }
    }

    pub fn apply(&self, u: &LevelVector) -> Result<LevelVector, RepError> {
        if !u.basis.same_level(&self.domain) {
            return Err(RepError::BasisMismatch);
        }
        Ok(LevelVector {
            basis: Arc::clone(&self.codomain),
            coeffs: &self.matrix * &u.coeffs,
        })
    }

    /// self after other: (self * other)(x) = self(other(x)).
    pub fn then_after(&self, other: &LevelOperator) -> Result<LevelOperator, RepError> {
        if !other.codomain.same_level(&self.domain) {
            return Err(RepError::LevelMismatch(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.domain.degree, self.codomain.degree, other.domain.degree, other.codomain.degree
            )));
        }
        Ok(LevelOperator {
            domain: Arc::clone(&other.domain),
            codomain: Arc::clone(&self.codomain),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &LevelOperator) -> Result<LevelOperator, RepError> {
        if !self.domain.same_level(&other.domain) || !self.codomain.same_level(&other.codomain) {
            return Err(RepError::LevelMismatch("operator sum".into()));
        }
        Ok(LevelOperator {
            domain: Arc::clone(&self.domain),
            codomain: Arc::clone(&self.codomain),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scaled(&self, c: f64) -> LevelOperator {
        LevelOperator {
            domain: Arc::clone(&self.domain),
            codomain: Arc::clone(&self.codomain),
            matrix: &self.matrix * c,
        }
    }

    /// Adjoint with respect to the weighted inner products:
    /// G_dom^{-1} T^t G_cod.
    pub fn weighted_adjoint(&self) -> LevelOperator {
        let mut m = self.matrix.transpose();
        for j in 0..m.ncols() {
            let g = self.codomain.measures[j];
            for i in 0..m.nrows() {
                m[(i, j)] *= g / self.domain.measures[i];
            }
        }
        LevelOperator {
            domain: Arc::clone(&self.codomain),
            codomain: Arc::clone(&self.domain),
            matrix: m,
        }
    }

    /// The matrix in orthonormal coordinates (rescaled by sqrt of the
    /// cylinder measures); spectral norms of this matrix are L^2 norms.
    pub fn orthonormal_matrix(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            let w = self.codomain.measures[i].sqrt();
            for j in 0..m.ncols() {
                m[(i, j)] *= w / self.domain.measures[j].sqrt();
            }
        }
        m
    }

    /// L^2 operator norm: largest singular value in orthonormal coordinates.
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.orthonormal_matrix())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.amax()
    }
}

/// Inclusion R_dom into R_cod via cylinder refinement.
pub fn inclusion(g: &KGraph, from: &Arc<LevelBasis>, to: &Arc<LevelBasis>) -> Result<LevelOperator, RepError> {
    if !from.degree.le(&to.degree) {
        return Err(RepError::LevelMismatch(format!(
            "cannot include level {} into level {}",
            from.degree, to.degree
        )));
    }
    let matrix = par::build_columns(to.dim(), from.dim(), |j| {
        expand_to_level(g, &from.paths[j], to)
            .expect("degrees checked")
            .coeffs
    });
    Ok(LevelOperator {
        domain: Arc::clone(from),
        codomain: Arc::clone(to),
        matrix,
    })
}

/// S_lambda between explicit levels: column eta is
/// rho^{d(lambda)/2} chi_[lambda eta] expanded to the codomain, or zero when
/// r(eta) != s(lambda).
pub fn s_operator_between(
    g: &KGraph,
    pf: &PFData,
    lam: &Path,
    dom: &Arc<LevelBasis>,
    cod: &Arc<LevelBasis>,
) -> Result<LevelOperator, RepError> {
    let shifted = &dom.degree + &lam.degree;
    if !shifted.le(&cod.degree) {
        return Err(RepError::LevelMismatch(format!(
            "S_lambda with degree {} does not map level {} into level {}",
            lam.degree, dom.degree, cod.degree
        )));
    }
    let weight = pf.rho_pow_half(&lam.degree);
    let matrix = par::build_columns(cod.dim(), dom.dim(), |j| {
        let eta = &dom.paths[j];
        if eta.range != lam.source {
            return DVector::zeros(cod.dim());
        }
        let composed = g.compose(lam, eta).expect("range matches");
        expand_to_level(g, &composed, cod).expect("degree fits").coeffs * weight
    });
    Ok(LevelOperator {
        domain: Arc::clone(dom),
        codomain: Arc::clone(cod),
        matrix,
    })
}

/// S_lambda from the square level s to the square level s + max_lambda.
pub fn s_operator(
    g: &KGraph,
    pf: &PFData,
    lam: &Path,
    s: usize,
) -> Result<LevelOperator, RepError> {
    let dom = level_basis(g, pf, s, None);
    let cod = level_basis(g, pf, s + lam.degree.max_entry(), None);
    s_operator_between(g, pf, lam, &dom, &cod)
}

/// S_lambda^* between explicit levels: column eta is
/// rho^{-d(lambda)/2} sum over (zeta, xi) in Lambda^min(lambda, eta) of
/// chi_[zeta] expanded to the codomain.
pub fn s_star_operator_between(
    g: &KGraph,
    pf: &PFData,
    lam: &Path,
    dom: &Arc<LevelBasis>,
    cod: &Arc<LevelBasis>,
) -> Result<LevelOperator, RepError> {
    let out_degree = dom.degree.saturating_sub(&lam.degree);
    if !out_degree.le(&cod.degree) {
        return Err(RepError::LevelMismatch(format!(
            "S_lambda^* with degree {} does not map level {} into level {}",
            lam.degree, dom.degree, cod.degree
        )));
    }
    let weight = 1.0 / pf.rho_pow_half(&lam.degree);
    let matrix = par::build_columns(cod.dim(), dom.dim(), |j| {
        let eta = &dom.paths[j];
        let mut col = DVector::zeros(cod.dim());
        for (zeta, _) in g.lambda_min(lam, eta) {
            col += expand_to_level(g, &zeta, cod).expect("degree fits").coeffs;
        }
        col * weight
    });
    Ok(LevelOperator {
        domain: Arc::clone(dom),
        codomain: Arc::clone(cod),
        matrix,
    })
}

/// S_lambda^* from the square level s down to max(s - min_lambda, 0).
pub fn s_star_operator(
    g: &KGraph,
    pf: &PFData,
    lam: &Path,
    s: usize,
) -> Result<LevelOperator, RepError> {
    let dom = level_basis(g, pf, s, None);
    let cod = level_basis(g, pf, s.saturating_sub(lam.degree.min_entry()), None);
    s_star_operator_between(g, pf, lam, &dom, &cod)
}

/// A formal sum of generators sum c_i s_{lambda_i} s_{mu_i}^* realized as a
/// single operator from level s to level s + max_i max_{lambda_i}.
pub fn represent(
    g: &KGraph,
    pf: &PFData,
    terms: &[(f64, Path, Path)],
    s: usize,
) -> Result<LevelOperator, RepError> {
    if terms.iter().any(|(_, lam, mu)| lam.source != mu.source) {
        return Err(RepError::SourceMismatch);
    }
    let max_mu = terms
        .iter()
        .map(|(_, _, mu)| mu.degree.max_entry())
        .max()
        .unwrap_or(0);
    if s < max_mu {
        return Err(RepError::LevelTooSmall(s));
    }
    let out_shift = terms
        .iter()
        .map(|(_, lam, _)| lam.degree.max_entry())
        .max()
        .unwrap_or(0);
    let dom = level_basis(g, pf, s, None);
    let cod = level_basis(g, pf, s + out_shift, None);
    let mut acc = LevelOperator::zero(&dom, &cod);
    for (c, lam, mu) in terms {
        let t = s - mu.degree.min_entry();
        let star = s_star_operator(g, pf, mu, s)?;
        let fwd = s_operator(g, pf, lam, t)?;
        let lift = inclusion(g, &fwd.codomain, &cod)?;
        let term = lift.then_after(&fwd.then_after(&star)?)?;
        acc = acc.add(&term.scaled(*c))?;
    }
    Ok(acc)
}

/// Numerical check of the Cuntz-Krieger relations as matrix identities on the
/// level-s basis.
#[derive(Debug, Clone)]
pub struct CkReport {
    pub level: usize,
    pub ck1: f64,
    pub ck2: f64,
    pub ck3: f64,
    pub ck4: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CkReport {
    pub fn max_deviation(&self) -> f64 {
        self.ck1.max(self.ck2).max(self.ck3).max(self.ck4)
    }
}

/// All degrees n with n <= (1,...,1).
fn unit_cube_degrees(rank: usize) -> Vec<Degree> {
    let mut out = Vec::new();
    for mask in 0..(1usize << rank) {
        let entries = (0..rank).map(|i| (mask >> i) & 1).collect();
        out.push(Degree::new(entries));
    }
    out
}

pub fn ck_verify(g: &KGraph, pf: &PFData, s: usize, tol: f64) -> Result<CkReport, RepError> {
    assert!(s >= 2, "CK verification uses degrees up to (1,...,1); s >= 2 required");
    let base = level_basis(g, pf, s, None);

    // Small paths: every path of degree <= (1,...,1).
    let mut small: Vec<Path> = Vec::new();
    for d in unit_cube_degrees(g.rank()) {
        small.extend(g.enumerate_paths(&d, None));
    }

    // (CK1) S_v S_w = delta_{v,w} S_v.
    let projections: Vec<LevelOperator> = g
        .vertices()
        .map(|v| s_operator_between(g, pf, &g.vertex_path(v), &base, &base).unwrap())
        .collect();
    let mut ck1: f64 = 0.0;
    for (v, pv) in projections.iter().enumerate() {
        for (w, pw) in projections.iter().enumerate() {
            let prod = pv.then_after(pw)?;
            let expect = if v == w {
                pv.matrix.clone()
            } else {
                DMatrix::zeros(base.dim(), base.dim())
            };
            ck1 = ck1.max((prod.matrix - expect).amax());
        }
    }

    // (CK2) S_lambda S_eta = S_{lambda eta} on composable small pairs.
    let deviations = par::map_indexed(small.len(), |i| {
        let lam = &small[i];
        let mut worst: f64 = 0.0;
        for eta in &small {
            if lam.source != eta.range {
                continue;
            }
            let s_eta = s_operator(g, pf, eta, s).unwrap();
            let mid = s + eta.degree.max_entry();
            let s_lam = s_operator(g, pf, lam, mid).unwrap();
            let lhs = s_lam.then_after(&s_eta).unwrap();
            let composed = g.compose(lam, eta).unwrap();
            let direct =
                s_operator_between(g, pf, &composed, &base, &s_lam.codomain).unwrap();
            worst = worst.max((lhs.matrix - direct.matrix).amax());
        }
        worst
    });
    let ck2 = deviations.into_iter().fold(0.0f64, f64::max);

    // (CK3) S_lambda^* S_lambda = S_{s(lambda)}.
    let deviations = par::map_indexed(small.len(), |i| {
        let lam = &small[i];
        let fwd = s_operator(g, pf, lam, s).unwrap();
        let hi = s + lam.degree.max_entry();
        let star = s_star_operator(g, pf, lam, hi).unwrap();
        let lhs = star.then_after(&fwd).unwrap();
        let proj = s_operator_between(g, pf, &g.vertex_path(lam.source), &base, &base).unwrap();
        let lift = inclusion(g, &base, &lhs.codomain).unwrap();
        let rhs = lift.then_after(&proj).unwrap();
        (lhs.matrix - rhs.matrix).amax()
    });
    let ck3 = deviations.into_iter().fold(0.0f64, f64::max);

    // (CK4) sum over lambda in v Lambda^n of S_lambda S_lambda^* = S_v.
    let mut ck4: f64 = 0.0;
    for n in unit_cube_degrees(g.rank()) {
        let t = s - n.min_entry();
        let out = t + n.max_entry();
        let cod = level_basis(g, pf, out, None);
        for v in g.vertices() {
            let mut acc = LevelOperator::zero(&base, &cod);
            for lam in g.enumerate_paths(&n, Some(v)) {
                let star = s_star_operator(g, pf, &lam, s)?;
                let fwd = s_operator(g, pf, &lam, t)?;
                acc = acc.add(&fwd.then_after(&star)?)?;
            }
            let proj = s_operator_between(g, pf, &g.vertex_path(v), &base, &base)?;
            let lift = inclusion(g, &base, &cod)?;
            let rhs = lift.then_after(&proj)?;
            ck4 = ck4.max((acc.matrix - rhs.matrix).amax());
        }
    }

    let report = CkReport {
        level: s,
        ck1,
        ck2,
        ck3,
        ck4,
        tol,
        pass: ck1.max(ck2).max(ck3).max(ck4) <= tol,
    };
    Ok(report)
}

/// Indices of the basis paths extending eta (the support of chi_[eta] at
/// this level).
pub fn expansion_indices(g: &KGraph, eta: &Path, basis: &Arc<LevelBasis>) -> Vec<usize> {
    let rest = basis.degree.sub(&eta.degree);
    g.enumerate_paths(&rest, Some(eta.source))
        .iter()
        .map(|zeta| {
            let full = g.compose(eta, zeta).expect("ranges match");
            basis.index_of(&full).expect("extension lies in the basis")
        })
        .collect()
}

/// Per-domain-index row supports of S_lambda from `dom` into `cod`:
/// column j of the operator has the single weight rho^{d(lambda)/2} on
/// exactly these rows. Expansions of distinct images are disjoint.
pub fn s_operator_supports(
    g: &KGraph,
    lam: &Path,
    dom: &Arc<LevelBasis>,
    cod: &Arc<LevelBasis>,
) -> Vec<Vec<usize>> {
    par::map_indexed(dom.dim(), |j| {
        let eta = &dom.paths[j];
        if eta.range != lam.source {
            return Vec::new();
        }
        let composed = g.compose(lam, eta).expect("range matches");
        expansion_indices(g, &composed, cod)
    })
}

/// Per-domain-index row supports of S_lambda^* from `dom` into `cod`, with
/// the uniform weight rho^{-d(lambda)/2}.
pub fn s_star_supports(
    g: &KGraph,
    lam: &Path,
    dom: &Arc<LevelBasis>,
    cod: &Arc<LevelBasis>,
) -> Vec<Vec<usize>> {
    par::map_indexed(dom.dim(), |j| {
        let eta = &dom.paths[j];
        let mut rows = Vec::new();
        for (zeta, _) in g.lambda_min(lam, eta) {
            rows.extend(expansion_indices(g, &zeta, cod));
        }
        rows
    })
}

/// Accumulate `out[r, :] += weight * x[j, :]` over the support pattern.
pub fn apply_supports(
    supports: &[Vec<usize>],
    weight: f64,
    cod_dim: usize,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    assert_eq!(x.nrows(), supports.len());
    let mut out = DMatrix::zeros(cod_dim, x.ncols());
    for (j, rows) in supports.iter().enumerate() {
        for &r in rows {
            for c in 0..x.ncols() {
                out[(r, c)] += weight * x[(j, c)];
            }
        }
    }
    out
}

/// S_lambda applied to a block of column vectors, without materializing the
/// operator matrix.
pub fn apply_s_operator(
    g: &KGraph,
    pf: &PFData,
    lam: &Path,
    dom: &Arc<LevelBasis>,
    cod: &Arc<LevelBasis>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    let supports = s_operator_supports(g, lam, dom, cod);
    apply_supports(&supports, pf.rho_pow_half(&lam.degree), cod.dim(), x)
}

/// S_lambda^* applied to a block of column vectors.
pub fn apply_s_star(
    g: &KGraph,
    pf: &PFData,
    lam: &Path,
    dom: &Arc<LevelBasis>,
    cod: &Arc<LevelBasis>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    let supports = s_star_supports(g, lam, dom, cod);
    apply_supports(&supports, 1.0 / pf.rho_pow_half(&lam.degree), cod.dim(), x)
}

/// Weighted least-squares compression from a finer level down to a coarser
/// one: the adjoint of the inclusion, exact on vectors lying in the included
/// subspace. Each fine basis path refines exactly one coarse path, so the
/// normal matrix is diagonal.
pub fn apply_compression(
    g: &KGraph,
    hi: &Arc<LevelBasis>,
    lo: &Arc<LevelBasis>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (parents, weights) = compression_weights(g, hi, lo);
    apply_compression_weights(&parents, &weights, lo.dim(), x)
}

/// Parent index and normalized measure weight of every fine basis path,
/// precomputable once per (hi, lo) pair.
pub fn compression_weights(
    g: &KGraph,
    hi: &Arc<LevelBasis>,
    lo: &Arc<LevelBasis>,
) -> (Vec<usize>, Vec<f64>) {
    let parents = par::map_indexed(hi.dim(), |i| {
        let (mu, _) = g
            .factorize(&hi.paths[i], &lo.degree)
            .expect("coarse degree <= fine degree");
        lo.index_of(&mu).expect("prefix lies in the coarse basis")
    });
    let mut diag = vec![0.0f64; lo.dim()];
    for (i, &p) in parents.iter().enumerate() {
        diag[p] += hi.measures[i];
    }
    let weights = (0..hi.dim())
        .map(|i| hi.measures[i] / diag[parents[i]])
        .collect();
    (parents, weights)
}

/// Accumulate `out[parent(i), :] += w_i * x[i, :]`.
pub fn apply_compression_weights(
    parents: &[usize],
    weights: &[f64],
    lo_dim: usize,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    assert_eq!(x.nrows(), parents.len());
    let mut out = DMatrix::zeros(lo_dim, x.ncols());
    for (i, &p) in parents.iter().enumerate() {
        let w = weights[i];
        for c in 0..x.ncols() {
            out[(p, c)] += w * x[(i, c)];
        }
    }
    out
}

/// Rescale raw coefficient columns into orthonormal coordinates.
pub fn to_orthonormal_columns(basis: &Arc<LevelBasis>, columns: &DMatrix<f64>) -> DMatrix<f64> {
    let mut on = columns.clone();
    for i in 0..basis.dim() {
        let w = basis.measures[i].sqrt();
        for j in 0..on.ncols() {
            on[(i, j)] *= w;
        }
    }
    on
}

/// Numerical rank and orthogonal projector (in orthonormal coordinates) onto
/// the span of a possibly redundant column family. Rank cutoff is
/// `rel_tol * largest singular value`.
pub fn span_projector(
    basis: &Arc<LevelBasis>,
    columns: &DMatrix<f64>,
    rel_tol: f64,
) -> (usize, DMatrix<f64>) {
    let dim = basis.dim();
    if columns.ncols() == 0 {
        return (0, DMatrix::zeros(dim, dim));
    }
    let on = to_orthonormal_columns(basis, columns);
    // Rank-revealing column-pivoted QR: the leading Q columns give an
    // orthonormal basis of the span, and the magnitude of the R diagonal
    // decides the numerical rank. (This sidesteps the general SVD, which can
    // misconverge on matrices with tightly clustered singular values.)
    let qr = on.col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let rmax = (0..r.nrows().min(r.ncols()))
        .map(|j| r[(j, j)].abs())
        .fold(0.0f64, f64::max);
    let rank = (0..r.nrows().min(r.ncols()))
        .take_while(|&j| r[(j, j)].abs() > rel_tol * rmax)
        .count();
    let qr_cols = q.columns(0, rank);
    (rank, &qr_cols * qr_cols.transpose())
}

/// Largest singular value of a matrix, computed from the symmetric
/// eigenproblem for the Gram matrix. This avoids the general SVD, which can
/// misconverge on matrices with tightly clustered singular values.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let top = gram
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    top.max(0.0).sqrt()
}

/// Weighted-orthogonal projector of a level space onto the column span of a
/// family B: P = B (B^t G B)^{-1} B^t G.
pub fn weighted_projector(basis: &Arc<LevelBasis>, columns: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = basis.dim();
    if columns.ncols() == 0 {
        return DMatrix::zeros(dim, dim);
    }
    let mut gb = columns.clone();
    for i in 0..dim {
        let m = basis.measures[i];
        for j in 0..gb.ncols() {
            gb[(i, j)] *= m;
        }
    }
    let gram = columns.transpose() * &gb;
    let chol = gram
        .cholesky()
        .expect("projector columns must be linearly independent");
    let solved = chol.solve(&gb.transpose());
    columns * solved
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{graph_pf, VALID};

    /// Deterministic xorshift64 for reproducible random vectors.
    struct Rng(u64);
    impl Rng {
        fn next_f64(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
        fn vector(&mut self, n: usize) -> DVector<f64> {
            DVector::from_fn(n, |_, _| self.next_f64())
        }
    }

    #[test]
    fn level_dimensions() {
        let (g, pf) = graph_pf("o2");
        for s in 0..=4 {
            assert_eq!(level_basis(&g, &pf, s, None).dim(), 1 << s);
        }
        let (g, pf) = graph_pf("flip23");
        for s in 0..=3 {
            assert_eq!(level_basis(&g, &pf, s, None).dim(), 6usize.pow(s as u32));
        }
        let (g, pf) = graph_pf("fib2");
        let dims: Vec<usize> = (0..=3)
            .map(|s| level_basis(&g, &pf, s, None).dim())
            .collect();
        assert_eq!(dims, vec![2, 8, 34, 144]);
    }

    #[test]
    fn gram_matrix_is_diagonal_with_measures() {
        let (g, pf) = graph_pf("fib2");
        let basis = level_basis(&g, &pf, 1, None);
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let mut u = DVector::zeros(basis.dim());
                let mut w = DVector::zeros(basis.dim());
                u[i] = 1.0;
                w[j] = 1.0;
                let u = LevelVector { basis: Arc::clone(&basis), coeffs: u };
                let w = LevelVector { basis: Arc::clone(&basis), coeffs: w };
                let ip = inner_product(&u, &w).unwrap();
                let expect = if i == j { basis.measures[i] } else { 0.0 };
                assert!((ip - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn expansion_has_unit_coefficients_and_conserves_measure() {
        let (g, pf) = graph_pf("fib2");
        let fine = level_basis(&g, &pf, 2, None);
        let coarse = level_basis(&g, &pf, 1, None);
        for p in &coarse.paths {
            let ex = expand_to_level(&g, p, &fine).unwrap();
            let mass: f64 = ex
                .coeffs
                .iter()
                .zip(&fine.measures)
                .map(|(&c, &m)| c * m)
                .sum();
            assert!((mass - cylinder_measure(&pf, p)).abs() < 1e-14);
            assert!(ex.coeffs.iter().all(|&c| c == 0.0 || c == 1.0));
        }
    }

    #[test]
    fn inner_products_are_level_independent() {
        let (g, pf) = graph_pf("flip23");
        let lo = level_basis(&g, &pf, 1, None);
        for s in 2..=3 {
            let hi = level_basis(&g, &pf, s, None);
            for a in &lo.paths {
                for b in &lo.paths {
                    let ea = expand_to_level(&g, a, &hi).unwrap();
                    let eb = expand_to_level(&g, b, &hi).unwrap();
                    let ip = inner_product(&ea, &eb).unwrap();
                    let expect = if a == b { cylinder_measure(&pf, a) } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn s_operator_matrix_o2() {
        let (g, pf) = graph_pf("o2");
        let e = g.edge_path(0);
        let op = s_operator(&g, &pf, &e, 1).unwrap();
        // Basis order at level 2: ee, ef, fe, ff; domain e, f.
        let expect = DMatrix::from_row_slice(4, 2, &[
            1.0, 0.0,
            0.0, 1.0,
            0.0, 0.0,
            0.0, 0.0,
        ]) * 2.0f64.sqrt();
        assert!((op.matrix - expect).amax() < 1e-15);
    }

    #[test]
    fn s_star_matrix_o2() {
        let (g, pf) = graph_pf("o2");
        let e = g.edge_path(0);
        let op = s_star_operator(&g, &pf, &e, 1).unwrap();
        assert_eq!(op.codomain.scale, 0);
        let expect = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]) / 2.0f64.sqrt();
        assert!((op.matrix - expect).amax() < 1e-15);
    }

    /// <S_lambda u, w> = <u, S_lambda^* w> for all basis vectors.
    #[test]
    fn s_star_is_the_adjoint() {
        for name in VALID {
            let (g, pf) = graph_pf(name);
            for s in 1..=2usize {
                for e in 0..g.skeleton.num_edges() {
                    let lam = g.edge_path(e);
                    let fwd = s_operator(&g, &pf, &lam, s).unwrap();
                    let hi = &fwd.codomain;
                    let star = s_star_operator(&g, &pf, &lam, hi.scale).unwrap();
                    // Compare on the common refinement level of R_s and the
                    // codomain of the adjoint.
                    let cod = &star.codomain;
                    let lift_dom = inclusion(&g, &fwd.domain, cod).unwrap();
                    for j in 0..fwd.domain.dim() {
                        for i in 0..hi.dim() {
                            let lhs = fwd.matrix[(i, j)] * hi.measures[i];
                            let mut rhs = 0.0;
                            for r in 0..cod.dim() {
                                rhs += lift_dom.matrix[(r, j)]
                                    * star.matrix[(r, i)]
                                    * cod.measures[r];
                            }
                            assert!(
                                (lhs - rhs).abs() < 1e-12,
                                "{name} edge {e} s={s} ({i},{j}): {lhs} vs {rhs}"
                            );
                        }
                    }
                }
            }
        }
    }

    /// For 1-graphs the weighted adjoint of S_lambda is literally the matrix
    /// of S_lambda^*.
    #[test]
    fn weighted_adjoint_equals_star_rank_one() {
        for name in ["o2", "twovertex"] {
            let (g, pf) = graph_pf(name);
            for e in 0..g.skeleton.num_edges() {
                let lam = g.edge_path(e);
                let fwd = s_operator(&g, &pf, &lam, 2).unwrap();
                let adj = fwd.weighted_adjoint();
                let star = s_star_operator(&g, &pf, &lam, 3).unwrap();
                assert!((adj.matrix - star.matrix).amax() < 1e-12, "{name} edge {e}");
            }
        }
    }

    /// S_lambda is isometric on the range of the source projection.
    #[test]
    fn s_operator_is_isometric_on_initial_space(){
        let mut rng = Rng(0x9e3779b97f4a7c15);
        for name in VALID {
            let (g, pf) = graph_pf(name);
            let s = 2;
            let base = level_basis(&g, &pf, s, None);
            for e in 0..g.skeleton.num_edges() {
                let lam = g.edge_path(e);
                let fwd = s_operator(&g, &pf, &lam, s).unwrap();
                let proj =
                    s_operator_between(&g, &pf, &g.vertex_path(lam.source), &base, &base).unwrap();
                for _ in 0..20 {
                    let u = LevelVector {
                        basis: Arc::clone(&base),
                        coeffs: &proj.matrix * rng.vector(base.dim()),
                    };
                    let image = fwd.apply(&u).unwrap();
                    assert!(
                        (weighted_norm(&image) - weighted_norm(&u)).abs() <= 1e-10,
                        "{name} edge {e}"
                    );
                }
            }
        }
    }

    #[test]
    fn inclusion_preserves_inner_products() {
        let (g, pf) = graph_pf("fib2");
        let lo = level_basis(&g, &pf, 1, None);
        let hi = level_basis(&g, &pf, 2, None);
        let incl = inclusion(&g, &lo, &hi).unwrap();
        let mut rng = Rng(42);
        for _ in 0..20 {
            let u = LevelVector { basis: Arc::clone(&lo), coeffs: rng.vector(lo.dim()) };
            let w = LevelVector { basis: Arc::clone(&lo), coeffs: rng.vector(lo.dim()) };
            let iu = incl.apply(&u).unwrap();
            let iw = incl.apply(&w).unwrap();
            let a = inner_product(&u, &w).unwrap();
            let b = inner_product(&iu, &iw).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn represent_vertex_sum_is_identity() {
        let (g, pf) = graph_pf("fib2");
        let terms: Vec<(f64, Path, Path)> = g
            .vertices()
            .map(|v| (1.0, g.vertex_path(v), g.vertex_path(v)))
            .collect();
        let op = represent(&g, &pf, &terms, 2).unwrap();
        let dim = op.domain.dim();
        assert!((op.matrix - DMatrix::<f64>::identity(dim, dim)).amax() < 1e-12);
    }

    #[test]
    fn represent_edge_resolution_of_identity() {
        let (g, pf) = graph_pf("o2");
        let terms: Vec<(f64, Path, Path)> = (0..2)
            .map(|e| (1.0, g.edge_path(e), g.edge_path(e)))
            .collect();
        let op = represent(&g, &pf, &terms, 2).unwrap();
        let lift = inclusion(&g, &op.domain, &op.codomain).unwrap();
        assert!((op.matrix - lift.matrix).amax() < 1e-12);
    }

    #[test]
    fn represent_partial_isometry_action() {
        // S_e S_f^* relabels an initial f to an e.
        let (g, pf) = graph_pf("o2");
        let e = g.edge_path(0);
        let f = g.edge_path(1);
        let op = represent(&g, &pf, &[(1.0, e, f)], 2).unwrap();
        for (j, p) in op.domain.paths.iter().enumerate() {
            let name = g.path_name(p);
            let col = op.matrix.column(j);
            if let Some(rest) = name.strip_prefix("f.") {
                let relabeled = format!("e.{rest}");
                let target: Vec<usize> = op
                    .codomain
                    .paths
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| g.path_name(q).starts_with(&relabeled))
                    .map(|(i, _)| i)
                    .collect();
                for i in 0..op.codomain.dim() {
                    let expect = if target.contains(&i) { 1.0 } else { 0.0 };
                    assert!((col[i] - expect).abs() < 1e-12);
                }
            } else {
                assert!(col.amax() < 1e-12);
            }
        }
    }

    #[test]
    fn ck_verify_small_graphs() {
        for name in ["o2", "trivial11", "twovertex"] {
            let (g, pf) = graph_pf(name);
            let report = ck_verify(&g, &pf, 2, 1e-10).unwrap();
            assert!(report.pass, "{name}: {report:?}");
        }
    }

    #[test]
    fn span_projector_handles_redundant_columns() {
        let (g, pf) = graph_pf("o2");
        let basis = level_basis(&g, &pf, 1, None);
        let mut cols = DMatrix::zeros(2, 3);
        cols.set_column(0, &DVector::from_vec(vec![1.0, 0.0]));
        cols.set_column(1, &DVector::from_vec(vec![2.0, 0.0]));
        cols.set_column(2, &DVector::from_vec(vec![0.0, 1.0]));
        let (rank, proj) = span_projector(&basis, &cols, 1e-9);
        assert_eq!(rank, 2);
        assert!((proj - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn weighted_projector_properties() {
        let (g, pf) = graph_pf("fib2");
        let basis = level_basis(&g, &pf, 2, None);
        let lo = level_basis(&g, &pf, 1, None);
        let cols = inclusion(&g, &lo, &basis).unwrap().matrix;
        let p = weighted_projector(&basis, &cols);
        // Idempotent, fixes its columns, and G P = P^t G (weighted self-adjoint).
        assert!((&p * &p - &p).amax() < 1e-12);
        assert!((&p * &cols - &cols).amax() < 1e-12);
        let dim = basis.dim();
        let mut gp = p.clone();
        for i in 0..dim {
            for j in 0..dim {
                gp[(i, j)] *= basis.measures[i];
            }
        }
        assert!((&gp - gp.transpose()).amax() < 1e-12);
    }

    #[test]
    fn sparse_applies_match_dense_operators() {
        let (g, pf) = graph_pf("fib2");
        let dom = level_basis(&g, &pf, 1, None);
        let cod = level_basis(&g, &pf, 2, None);
        let mut rng = Rng(7);
        let x = DMatrix::from_fn(dom.dim(), 3, |_, _| rng.next_f64());
        for e in 0..g.skeleton.num_edges() {
            let lam = g.edge_path(e);
            let dense = s_operator_between(&g, &pf, &lam, &dom, &cod).unwrap();
            let fast = apply_s_operator(&g, &pf, &lam, &dom, &cod, &x);
            assert!((&dense.matrix * &x - fast).amax() < 1e-12);

            let y = DMatrix::from_fn(cod.dim(), 3, |_, _| rng.next_f64());
            let dense_star = s_star_operator_between(&g, &pf, &lam, &cod, &cod).unwrap();
            let fast_star = apply_s_star(&g, &pf, &lam, &cod, &cod, &y);
            assert!((&dense_star.matrix * &y - fast_star).amax() < 1e-12);
        }
    }

    #[test]
    fn compression_inverts_inclusion() {
        let (g, pf) = graph_pf("flip23");
        let lo = level_basis(&g, &pf, 1, None);
        let hi = level_basis(&g, &pf, 2, None);
        let incl = inclusion(&g, &lo, &hi).unwrap();
        let mut rng = Rng(11);
        let x = DMatrix::from_fn(lo.dim(), 4, |_, _| rng.next_f64());
        let lifted = &incl.matrix * &x;
        let back = apply_compression(&g, &hi, &lo, &lifted);
        assert!((back - x).amax() < 1e-12);
    }

    #[test]
    fn operator_norm_of_isometry_is_one() {
        let (g, pf) = graph_pf("o2");
        let e = g.edge_path(0);
        let fwd = s_operator(&g, &pf, &e, 2).unwrap();
        assert!((fwd.operator_norm() - 1.0).abs() < 1e-12);
        let lo = level_basis(&g, &pf, 1, None);
        let hi = level_basis(&g, &pf, 3, None);
        let incl = inclusion(&g, &lo, &hi).unwrap();
        assert!((incl.operator_norm() - 1.0).abs() < 1e-12);
    }
}

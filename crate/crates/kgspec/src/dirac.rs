//! The truncated Dirac operator D = sum_q alpha_q Xi-hat_{q,q-1}, its
//! eigenspaces, the commutator bound sweep, and resolvent decay.
//!
//! Everything lives on the level-T basis. Xi_s is the weighted-orthogonal
//! projection onto the included copy of R_s (s = -1: constants); the Dirac
//! matrix annihilates constants and acts by alpha_q on R_q intersected with
//! the orthogonal complement of R_{q-1}.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};
use crate::pf::PFData;
use crate::repspace::{
    apply_compression_weights, apply_supports, compression_weights, expansion_indices, inclusion,
    level_basis, s_operator_supports, s_star_supports, span_projector, spectral_norm,
    weighted_projector, LevelBasis, LevelVector,
};
use crate::wavelets::{wavelet_space, WaveletError, RANK_REL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiracError {
    #[error("level {0} out of range -1..={1}")]
    LevelOutOfRange(i64, usize),
    #[error("generator pair must share a source vertex")]
    SourceMismatch,
    #[error("truncation level {t} too small; need at least {needed}")]
    TruncationTooSmall { t: usize, needed: usize },
    #[error("z is within 1e-12 of the eigenvalue {0}")]
    SpectrumCollision(f64),
    #[error("explicit alpha list has only {0} entries, index {1} requested")]
    AlphaExhausted(usize, usize),
    #[error("alpha sequence must be strictly increasing and positive")]
    AlphaNotIncreasing,
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
}

/// Dirac eigenvalue sequence: an affine family alpha_q = a q + b or an
/// explicit finite prefix, with its gap bound C.
#[derive(Debug, Clone)]
pub enum AlphaSequence {
    Affine { a: f64, b: f64 },
    Explicit(Vec<f64>),
}

impl AlphaSequence {
    /// alpha_q = q + 1, the default (C = 1).
    pub fn default_affine() -> Self {
        AlphaSequence::Affine { a: 1.0, b: 1.0 }
    }

    pub fn validate(&self) -> Result<(), DiracError> {
        match self {
            AlphaSequence::Affine { a, b } => {
                if *a <= 0.0 || *b <= 0.0 {
                    return Err(DiracError::AlphaNotIncreasing);
                }
            }
            AlphaSequence::Explicit(v) => {
                if v.is_empty() || v[0] <= 0.0 || v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(DiracError::AlphaNotIncreasing);
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, q: usize) -> Result<f64, DiracError> {
        match self {
            AlphaSequence::Affine { a, b } => Ok(a * q as f64 + b),
            AlphaSequence::Explicit(v) => v
                .get(q)
                .copied()
                .ok_or(DiracError::AlphaExhausted(v.len(), q)),
        }
    }

    /// Bound C on consecutive gaps over the provided range.
    pub fn gap_bound(&self, up_to: usize) -> f64 {
        match self {
            AlphaSequence::Affine { a, .. } => *a,
            AlphaSequence::Explicit(v) => v[..v.len().min(up_to + 1)]
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max),
        }
    }
}

/// The assembled truncation: level-T basis, the spectral projections, and the
/// Dirac matrix.
#[derive(Debug)]
pub struct DiracTruncation {
    pub step: Degree,
    pub level: usize,
    pub basis: Arc<LevelBasis>,
    pub alpha: AlphaSequence,
    /// Projection onto constants (eigenvalue 0).
    pub xi_constants: DMatrix<f64>,
    /// Xi-hat_{q,q-1} for q = 0..=T, raw coordinates.
    pub xi_hat: Vec<DMatrix<f64>>,
    pub matrix: DMatrix<f64>,
    /// Orthonormal-coordinate bases of the Xi-hat ranges, computed on demand.
    eigenbases_on: Vec<OnceLock<DMatrix<f64>>>,
    /// Orthonormal-coordinate basis of the constants, computed on demand.
    constants_basis_on: OnceLock<DMatrix<f64>>,
}

/// Weighted-orthogonal projection of the level-T space onto the included copy
/// of R_s; s = -1 projects onto constants.
pub fn xi_projection(
    g: &KGraph,
    pf: &PFData,
    s: i64,
    t: usize,
    step: &Degree,
) -> Result<DMatrix<f64>, DiracError> {
    if s < -1 || s > t as i64 {
        return Err(DiracError::LevelOutOfRange(s, t));
    }
    let basis = level_basis(g, pf, t, Some(step.clone()));
    if s == -1 {
        let ones = DMatrix::repeat(basis.dim(), 1, 1.0);
        return Ok(weighted_projector(&basis, &ones));
    }
    if s == t as i64 {
        return Ok(DMatrix::identity(basis.dim(), basis.dim()));
    }
    let sub = level_basis(g, pf, s as usize, Some(step.clone()));
    let incl = inclusion(g, &sub, &basis).expect("levels nested");
    Ok(weighted_projector(&basis, &incl.matrix))
}

/// Assemble all spectral projections and the Dirac matrix at level T.
pub fn dirac_truncation(
    g: &KGraph,
    pf: &PFData,
    alpha: &AlphaSequence,
    t: usize,
    step: &Degree,
) -> Result<DiracTruncation, DiracError> {
    alpha.validate()?;
    let basis = level_basis(g, pf, t, Some(step.clone()));
    let mut xi_prev = xi_projection(g, pf, -1, t, step)?;
    let xi_constants = xi_prev.clone();
    let mut xi_hat = Vec::with_capacity(t + 1);
    let mut matrix = DMatrix::zeros(basis.dim(), basis.dim());
    for q in 0..=t {
        let xi_q = xi_projection(g, pf, q as i64, t, step)?;
        let hat = &xi_q - &xi_prev;
        matrix += &hat * alpha.value(q)?;
        xi_hat.push(hat);
        xi_prev = xi_q;
    }
    let eigenbases_on = (0..=t).map(|_| OnceLock::new()).collect();
    let constants_basis_on = OnceLock::new();
    Ok(DiracTruncation {
        step: step.clone(),
        level: t,
        basis,
        alpha: alpha.clone(),
        xi_constants,
        xi_hat,
        matrix,
        eigenbases_on,
        constants_basis_on,
    })
}

/// Orthonormal (weighted) basis of the range of a raw-coordinate projector,
/// returned in orthonormal coordinates.
fn projector_range_on(basis: &LevelBasis, proj: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = basis.dim();
    let mut on = proj.clone();
    for i in 0..dim {
        let wi = basis.measures[i].sqrt();
        for j in 0..dim {
            on[(i, j)] *= wi / basis.measures[j].sqrt();
        }
    }
    // The ON-coordinate projector is symmetric; its eigenvalues are 0 or 1
    // and the eigenvalue-1 eigenvectors form an orthonormal basis of the
    // range. (The symmetric eigensolver is also numerically more dependable
    // here than a general SVD.)
    let eig = nalgebra::SymmetricEigen::new(on);
    let keep: Vec<usize> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &ev)| ev > 0.5)
        .map(|(j, _)| j)
        .collect();
    let mut range = DMatrix::zeros(dim, keep.len());
    for (out_j, &j) in keep.iter().enumerate() {
        range.set_column(out_j, &eig.eigenvectors.column(j));
    }
    range
}

impl DiracTruncation {
    /// trace of a projector = its rank.
    pub fn multiplicity(&self, q: usize) -> usize {
        self.xi_hat[q].trace().round() as usize
    }

    pub fn eigenbasis_on(&self, q: usize) -> &DMatrix<f64> {
        self.eigenbases_on[q].get_or_init(|| projector_range_on(&self.basis, &self.xi_hat[q]))
    }

    pub fn constants_on(&self) -> &DMatrix<f64> {
        self.constants_basis_on
            .get_or_init(|| projector_range_on(&self.basis, &self.xi_constants))
    }

    /// Convert an orthonormal-coordinate column block back to raw
    /// coefficients on the level basis.
    pub fn on_to_raw(&self, on_cols: &DMatrix<f64>) -> DMatrix<f64> {
        let mut raw = on_cols.clone();
        for i in 0..raw.nrows() {
            let w = self.basis.measures[i].sqrt();
            for j in 0..raw.ncols() {
                raw[(i, j)] /= w;
            }
        }
        raw
    }

    /// Eigenvalue / orthonormal-eigenbasis pairs, constants first.
    pub fn eigenspaces(&self) -> Result<Vec<(f64, Vec<LevelVector>)>, DiracError> {
        let mut out = Vec::new();
        let to_vectors = |on_cols: &DMatrix<f64>| -> Vec<LevelVector> {
            let raw = self.on_to_raw(on_cols);
            (0..raw.ncols())
                .map(|j| LevelVector {
                    basis: Arc::clone(&self.basis),
                    coeffs: DVector::from(raw.column(j).into_owned()),
                })
                .collect()
        };
        out.push((0.0, to_vectors(self.constants_on())));
        for q in 0..=self.level {
            out.push((self.alpha.value(q)?, to_vectors(self.eigenbasis_on(q))));
        }
        Ok(out)
    }
}

/// Comparison of the wavelet-space projector with the spectral projection
/// Xi-hat_{q+1,q}.
#[derive(Debug, Clone)]
pub struct EigenspaceIdentityReport {
    pub q: usize,
    pub wavelet_dim: usize,
    pub spectral_dim: usize,
    pub projector_gap: f64,
    pub v0_contains_constants: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn verify_eigenspace_wavelet_identity(
    g: &KGraph,
    pf: &PFData,
    dt: &DiracTruncation,
    q: usize,
    tol: f64,
) -> Result<EigenspaceIdentityReport, DiracError> {
    assert!(q + 1 <= dt.level, "need q + 1 <= truncation level");
    let ws = wavelet_space(g, pf, q, &dt.step)?;
    let sub = level_basis(g, pf, q + 1, Some(dt.step.clone()));
    let lift = inclusion(g, &sub, &dt.basis).expect("levels nested");
    let mut cols = DMatrix::zeros(dt.basis.dim(), ws.vectors.len());
    for (j, v) in ws.vectors.iter().enumerate() {
        cols.set_column(j, &(&lift.matrix * &v.coeffs));
    }
    let (wavelet_dim, p_w) = span_projector(&dt.basis, &cols, RANK_REL_TOL);

    let spectral = &dt.xi_hat[q + 1];
    let spectral_dim = spectral.trace().round() as usize;
    let mut spectral_on = spectral.clone();
    for i in 0..dt.basis.dim() {
        let wi = dt.basis.measures[i].sqrt();
        for j in 0..dt.basis.dim() {
            spectral_on[(i, j)] *= wi / dt.basis.measures[j].sqrt();
        }
    }
    let diff = &p_w - &spectral_on;
    let projector_gap = spectral_norm(&diff);

    // V_0 = range(Xi_0) contains the constants.
    let xi0 = xi_projection(g, pf, 0, dt.level, &dt.step)?;
    let v0_contains_constants = (&xi0 * &dt.xi_constants - &dt.xi_constants).amax();

    Ok(EigenspaceIdentityReport {
        q,
        wavelet_dim,
        spectral_dim,
        projector_gap,
        v0_contains_constants,
        tol,
        pass: projector_gap <= tol && v0_contains_constants <= tol,
    })
}

/// Per-eigenspace commutator norms of [D, S_lambda S_mu^*] against the
/// analytic ceilings from the gap bound.
#[derive(Debug, Clone)]
pub struct CommutatorRow {
    pub q: usize,
    pub norm: f64,
    pub ceiling: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CommutatorReport {
    pub lam: String,
    pub mu: String,
    pub level: usize,
    pub gap_bound: f64,
    pub rows: Vec<CommutatorRow>,
    pub pass: bool,
}

/// How the image block at the intermediate level u is brought back to the
/// level-T space.
enum GeneratorTail {
    /// u == T: nothing to do.
    Identity,
    /// u < T: cylinder refinement of every intermediate basis path.
    Expand(Vec<Vec<usize>>),
    /// u > T: weighted least-squares compression (parents, weights), exact on
    /// the eigenspaces the sweep evaluates.
    Compress(Vec<usize>, Vec<f64>),
}

/// Precomputed sparse pipeline for S_lambda S_mu^* on the level-T space: the
/// support patterns of S_mu^* and S_lambda and the tail map depend only on
/// the generator pair, so they are computed once and reused for every column
/// block.
struct GeneratorPlan {
    star_supports: Vec<Vec<usize>>,
    star_weight: f64,
    mid_dim: usize,
    op_supports: Vec<Vec<usize>>,
    op_weight: f64,
    hi_dim: usize,
    out_dim: usize,
    tail: GeneratorTail,
}

impl GeneratorPlan {
    fn new(g: &KGraph, pf: &PFData, lam: &Path, mu: &Path, basis: &Arc<LevelBasis>) -> Self {
        let t = basis.scale;
        let t1 = t.saturating_sub(mu.degree.min_entry());
        let mid = level_basis(g, pf, t1, Some(basis.step.clone()));
        let u = t1 + lam.degree.max_entry();
        let hi = level_basis(g, pf, u, Some(basis.step.clone()));
        let star_supports = s_star_supports(g, mu, basis, &mid);
        let op_supports = s_operator_supports(g, lam, &mid, &hi);
        let tail = if u == t {
            GeneratorTail::Identity
        } else if u < t {
            GeneratorTail::Expand(
                (0..hi.dim())
                    .map(|j| expansion_indices(g, &hi.paths[j], basis))
                    .collect(),
            )
        } else {
            let (parents, weights) = compression_weights(g, &hi, basis);
            GeneratorTail::Compress(parents, weights)
        };
        GeneratorPlan {
            star_supports,
            star_weight: 1.0 / pf.rho_pow_half(&mu.degree),
            mid_dim: mid.dim(),
            op_supports,
            op_weight: pf.rho_pow_half(&lam.degree),
            hi_dim: hi.dim(),
            out_dim: basis.dim(),
            tail,
        }
    }

    /// Apply S_lambda S_mu^* to a raw-coordinate column block.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let y = apply_supports(&self.star_supports, self.star_weight, self.mid_dim, x);
        let z = apply_supports(&self.op_supports, self.op_weight, self.hi_dim, &y);
        match &self.tail {
            GeneratorTail::Identity => z,
            GeneratorTail::Expand(rows) => apply_supports(rows, 1.0, self.out_dim, &z),
            GeneratorTail::Compress(parents, weights) => {
                apply_compression_weights(parents, weights, self.out_dim, &z)
            }
        }
    }
}

pub fn commutator_sweep(
    g: &KGraph,
    pf: &PFData,
    dt: &DiracTruncation,
    lam: &Path,
    mu: &Path,
    tol: f64,
) -> Result<CommutatorReport, DiracError> {
    if lam.source != mu.source {
        return Err(DiracError::SourceMismatch);
    }
    let t = dt.level;
    let max_lam = lam.degree.max_entry();
    let min_lam = lam.degree.min_entry();
    let max_mu = mu.degree.max_entry();
    let min_mu = mu.degree.min_entry();
    let needed = max_mu + max_lam + 2;
    if t < needed {
        return Err(DiracError::TruncationTooSmall { t, needed });
    }

    let c = dt.alpha.gap_bound(t + max_lam);
    let window_sum: f64 = (min_lam as i64 - max_mu as i64..=max_lam as i64 - min_mu as i64)
        .map(|w| w.abs() as f64)
        .sum();
    let high_ceiling = c * window_sum;
    // For q <= max_mu the image of the eigenspace need not be orthogonal to
    // R_0 or even to the constants, so the level window runs over all
    // w = 0..=q + max_lam - min_mu plus the constants (Dirac eigenvalue 0,
    // distance alpha_q).
    let low_ceiling = |q: usize| -> Result<f64, DiracError> {
        let hi_w = q as i64 + max_lam as i64 - min_mu as i64;
        let window: f64 = (0..=hi_w).map(|w| (w - q as i64).abs() as f64).sum();
        Ok(dt.alpha.value(q)? + c * window)
    };

    let to_on = |raw: &DMatrix<f64>| {
        let mut on = raw.clone();
        for i in 0..on.nrows() {
            let w = dt.basis.measures[i].sqrt();
            for j in 0..on.ncols() {
                on[(i, j)] *= w;
            }
        }
        on
    };

    let plan = GeneratorPlan::new(g, pf, lam, mu, &dt.basis);
    let q_max = t - max_lam - 1;
    let mut rows = Vec::new();
    for q in 0..=q_max {
        let block_on = dt.eigenbasis_on(q);
        if block_on.ncols() == 0 {
            continue;
        }
        let block = dt.on_to_raw(block_on);
        let a_block = plan.apply(&block);
        let d_block = &dt.matrix * &block;
        let comm = &dt.matrix * &a_block - plan.apply(&d_block);
        let norm = spectral_norm(&to_on(&comm));
        let ceiling = if q > max_mu { high_ceiling } else { low_ceiling(q)? };
        rows.push(CommutatorRow {
            q,
            norm,
            ceiling,
            pass: norm <= ceiling + tol,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(CommutatorReport {
        lam: g.path_name(lam),
        mu: g.path_name(mu),
        level: t,
        gap_bound: c,
        rows,
        pass,
    })
}

/// Singular values of the truncated resolvent (D - z)^{-1}, grouped by
/// eigenspace.
#[derive(Debug, Clone)]
pub struct ResolventRow {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub singular_value: f64,
}

#[derive(Debug, Clone)]
pub struct ResolventReport {
    pub z: Complex64,
    pub rows: Vec<ResolventRow>,
    pub strictly_decreasing: bool,
}

pub fn resolvent_decay(dt: &DiracTruncation, z: Complex64) -> Result<ResolventReport, DiracError> {
    let mut rows = Vec::new();
    let constants_mult = dt.xi_constants.trace().round() as usize;
    if constants_mult > 0 {
        if z.norm() <= 1e-12 {
            return Err(DiracError::SpectrumCollision(0.0));
        }
        rows.push(ResolventRow {
            eigenvalue: 0.0,
            multiplicity: constants_mult,
            singular_value: 1.0 / z.norm(),
        });
    }
    for q in 0..=dt.level {
        let mult = dt.multiplicity(q);
        let a = dt.alpha.value(q)?;
        if (Complex64::new(a, 0.0) - z).norm() <= 1e-12 {
            return Err(DiracError::SpectrumCollision(a));
        }
        if mult > 0 {
            rows.push(ResolventRow {
                eigenvalue: a,
                multiplicity: mult,
                singular_value: 1.0 / (Complex64::new(a, 0.0) - z).norm(),
            });
        }
    }
    let strictly_decreasing = rows
        .windows(2)
        .all(|w| w[1].singular_value < w[0].singular_value);
    Ok(ResolventReport {
        z,
        rows,
        strictly_decreasing,
    })
}

/// Self-adjointness of the truncated Dirac matrix in the weighted inner
/// product: max entry deviation from its weighted adjoint.
pub fn self_adjointness_defect(dt: &DiracTruncation) -> f64 {
    let dim = dt.basis.dim();
    let mut defect: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let adj = dt.matrix[(j, i)] * dt.basis.measures[j] / dt.basis.measures[i];
            defect = defect.max((dt.matrix[(i, j)] - adj).abs());
        }
    }
    defect
}

/// Used by tests and reports: verify Xi-hat projector algebra and
/// completeness on the level-T space.
pub fn projection_algebra_defect(dt: &DiracTruncation) -> f64 {
    let dim = dt.basis.dim();
    let mut defect: f64 = 0.0;
    let mut total = dt.xi_constants.clone();
    for q in 0..=dt.level {
        total += &dt.xi_hat[q];
        for r in 0..=dt.level {
            let prod = &dt.xi_hat[q] * &dt.xi_hat[r];
            let expect = if q == r {
                dt.xi_hat[q].clone()
            } else {
                DMatrix::zeros(dim, dim)
            };
            defect = defect.max((prod - expect).amax());
        }
    }
    defect.max((total - DMatrix::identity(dim, dim)).amax())
}

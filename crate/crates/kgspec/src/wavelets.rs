//! Graph wavelets: mother functions, scaled-and-translated families, and the
//! orthogonal decomposition of the truncated path space.
//!
//! The mother function at a vertex v with D_v = {lambda_0, ..., lambda_m} is
//! (1/M[lambda_0]) chi_[lambda_0] - (1/M[lambda_i]) chi_[lambda_i]; the scale-n
//! space W_n is spanned by S_lambda f^{i,s(lambda)} over paths of degree
//! (n,...,n). With a step degree J the same construction runs over vLambda^J
//! and degrees nJ.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, Path, VertexId};
use crate::pf::{cylinder_measure, PFData};
use crate::repspace::{
    expand_to_level, inclusion, inner_product, level_basis, s_operator_between, span_projector,
    spectral_norm, weighted_norm, LevelBasis, LevelVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("D_v is empty at vertex {0}; graph is not strongly connected")]
    EmptyDv(String),
}

/// Relative singular-value cutoff for rank checks.
pub const RANK_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MotherWavelet {
    pub vertex: VertexId,
    pub index: usize,
    pub vector: LevelVector,
}

#[derive(Debug)]
pub struct WaveletSpace {
    pub n: usize,
    pub labels: Vec<(Path, usize)>,
    pub vectors: Vec<LevelVector>,
}

/// D_v = v Lambda^J (J = (1,...,1) by default), in canonical order.
pub fn d_v(g: &KGraph, v: VertexId, step: &Degree) -> Result<Vec<Path>, WaveletError> {
    let paths = g.enumerate_paths(step, Some(v));
    if paths.is_empty() {
        return Err(WaveletError::EmptyDv(g.vertex_name(v).to_string()));
    }
    Ok(paths)
}

/// The #(D_v) - 1 mother functions at v, as level-1 coefficient vectors.
pub fn mother_wavelets(
    g: &KGraph,
    pf: &PFData,
    v: VertexId,
    step: &Degree,
) -> Result<Vec<MotherWavelet>, WaveletError> {
    let dv = d_v(g, v, step)?;
    let basis = level_basis(g, pf, 1, Some(step.clone()));
    let lam0 = &dv[0];
    let i0 = basis.index_of(lam0).expect("D_v lies in the level-1 basis");
    let m0 = cylinder_measure(pf, lam0);
    let mut out = Vec::new();
    for (i, lam) in dv.iter().enumerate().skip(1) {
        let mut coeffs = nalgebra::DVector::zeros(basis.dim());
        coeffs[i0] = 1.0 / m0;
        let ii = basis.index_of(lam).expect("D_v lies in the level-1 basis");
        coeffs[ii] = -1.0 / cylinder_measure(pf, lam);
        out.push(MotherWavelet {
            vertex: v,
            index: i,
            vector: LevelVector {
                basis: Arc::clone(&basis),
                coeffs,
            },
        });
    }
    Ok(out)
}

/// The scale-n family {S_lambda f^{i, s(lambda)}} at level n+1.
pub fn wavelet_space(
    g: &KGraph,
    pf: &PFData,
    n: usize,
    step: &Degree,
) -> Result<WaveletSpace, WaveletError> {
    let dom = level_basis(g, pf, 1, Some(step.clone()));
    let cod = level_basis(g, pf, n + 1, Some(step.clone()));
    let mothers_by_vertex: Vec<Vec<MotherWavelet>> = (0..g.num_vertices())
        .map(|v| mother_wavelets(g, pf, v, step))
        .collect::<Result<_, _>>()?;
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for lam in g.enumerate_paths(&step.scale(n), None) {
        if mothers_by_vertex[lam.source].is_empty() {
            continue;
        }
        let op = s_operator_between(g, pf, &lam, &dom, &cod).expect("levels line up");
        for mother in &mothers_by_vertex[lam.source] {
            vectors.push(op.apply(&mother.vector).expect("same basis"));
            labels.push((lam.clone(), mother.index));
        }
    }
    Ok(WaveletSpace { n, labels, vectors })
}

/// Vertex indicators chi_[v] expanded to a level basis.
pub fn v0_basis(g: &KGraph, basis: &Arc<LevelBasis>) -> Vec<LevelVector> {
    (0..g.num_vertices())
        .map(|v| expand_to_level(g, &g.vertex_path(v), basis).expect("degree 0 fits"))
        .collect()
}

fn columns_of(basis: &Arc<LevelBasis>, vectors: &[LevelVector]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(basis.dim(), vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, &v.coeffs);
    }
    m
}

/// Verification of the orthogonal decomposition R_s = V_0 + W_0 + ... +
/// W_{s-1}: block orthogonality, dimension count, and span residual.
#[derive(Debug, Clone)]
pub struct DecompReport {
    pub level: usize,
    pub dim_r: usize,
    pub dim_v0: usize,
    pub dims_w: Vec<usize>,
    pub dims_expected: Vec<usize>,
    pub max_cross_angle: f64,
    pub span_residual: f64,
    pub orth_tol: f64,
    pub span_tol: f64,
    pub pass: bool,
}

pub fn verify_decomposition(
    g: &KGraph,
    pf: &PFData,
    s: usize,
    step: &Degree,
    orth_tol: f64,
    span_tol: f64,
) -> Result<DecompReport, WaveletError> {
    assert!(s >= 1);
    let basis = level_basis(g, pf, s, Some(step.clone()));
    let dim_r = basis.dim();

    // Each block expanded to the common level s.
    let mut blocks: Vec<Vec<LevelVector>> = Vec::new();
    blocks.push(v0_basis(g, &basis));
    let mut dims_expected = vec![g.num_vertices()];
    for n in 0..s {
        let ws = wavelet_space(g, pf, n, step)?;
        let lift = inclusion(g, &level_basis(g, pf, n + 1, Some(step.clone())), &basis)
            .expect("levels nested");
        blocks.push(
            ws.vectors
                .iter()
                .map(|v| lift.apply(v).expect("same basis"))
                .collect(),
        );
        let lo = level_basis(g, pf, n, Some(step.clone())).dim();
        let hi = level_basis(g, pf, n + 1, Some(step.clone())).dim();
        dims_expected.push(hi - lo);
    }

    // Cross-block orthogonality, normalized.
    let mut max_cross: f64 = 0.0;
    for a in 0..blocks.len() {
        for b in (a + 1)..blocks.len() {
            for u in &blocks[a] {
                let nu = weighted_norm(u);
                for w in &blocks[b] {
                    let nw = weighted_norm(w);
                    if nu > 0.0 && nw > 0.0 {
                        let ip = inner_product(u, w).expect("same basis");
                        max_cross = max_cross.max(ip.abs() / (nu * nw));
                    }
                }
            }
        }
    }

    // Ranks of the wavelet families.
    let dim_v0 = blocks[0].len();
    let mut dims_w = Vec::new();
    for block in &blocks[1..] {
        let cols = columns_of(&basis, block);
        let (rank, _) = span_projector(&basis, &cols, RANK_REL_TOL);
        dims_w.push(rank);
    }

    // Span: the union must fill R_s.
    let all: Vec<LevelVector> = blocks.into_iter().flatten().collect();
    let cols = columns_of(&basis, &all);
    let (_, proj) = span_projector(&basis, &cols, RANK_REL_TOL);
    let residual_matrix = DMatrix::identity(dim_r, dim_r) - proj;
    let span_residual = spectral_norm(&residual_matrix);

    let dim_ok = dim_v0 + dims_w.iter().sum::<usize>() == dim_r
        && dims_w
            .iter()
            .zip(dims_expected.iter().skip(1))
            .all(|(a, b)| a == b);
    let pass = dim_ok && max_cross <= orth_tol && span_residual <= span_tol;
    Ok(DecompReport {
        level: s,
        dim_r,
        dim_v0,
        dims_w,
        dims_expected,
        max_cross_angle: max_cross,
        span_residual,
        orth_tol,
        span_tol,
        pass,
    })
}

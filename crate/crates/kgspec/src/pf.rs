//! Vertex matrices, strong connectivity, and Perron-Frobenius data.
//!
//! The eigenvector is found by power iteration on A_1 + ... + A_k (which is
//! irreducible when the graph is strongly connected) and then verified to be
//! an eigenvector of each color matrix individually. Spectral radii come from
//! per-color power iteration with Rayleigh-quotient estimates and must agree
//! with the eigenvalue paired with the shared eigenvector.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};

/// Residual tolerance for A_i kappa = rho_i kappa, relative to ||kappa||_inf.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Tolerance on the unit coordinate sum of kappa.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Agreement between the per-color spectral radius and the Rayleigh quotient
/// of the shared eigenvector.
pub const RHO_AGREEMENT_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 1_000_000;
const POWER_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfError {
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("power iteration did not converge: {0}")]
    ConvergenceFailure(String),
}

/// Edge-count matrix of one color, indexed range x source.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMatrix {
    pub color: usize,
    pub entries: DMatrix<u64>,
}

/// Spectral radii per color and the common normalized eigenvector.
#[derive(Debug, Clone)]
pub struct PFData {
    pub rho: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// A_i(v, w) = number of color-i edges with range v and source w.
pub fn vertex_matrix(g: &KGraph, color: usize) -> VertexMatrix {
    let n = g.num_vertices();
    let mut entries = DMatrix::<u64>::zeros(n, n);
    for e in &g.skeleton.edges {
        if e.color == color {
            entries[(e.range, e.source)] += 1;
        }
    }
    VertexMatrix { color, entries }
}

pub fn vertex_matrices(g: &KGraph) -> Vec<VertexMatrix> {
    (1..=g.rank()).map(|c| vertex_matrix(g, c)).collect()
}

/// |Lambda^n| as the total entry sum of prod_i A_i^{n_i}; with `v` given,
/// the v-row sum.
pub fn path_count(g: &KGraph, n: &Degree, v: Option<usize>) -> u64 {
    let size = g.num_vertices();
    let mut m = DMatrix::<u64>::identity(size, size);
    for color in 1..=g.rank() {
        let a = vertex_matrix(g, color).entries;
        for _ in 0..n[color - 1] {
            m = &m * &a;
        }
    }
    match v {
        Some(v) => m.row(v).iter().sum(),
        None => m.iter().sum(),
    }
}

/// Strong connectivity of the union digraph over all colors.
pub fn is_strongly_connected(g: &KGraph) -> bool {
    let n = g.num_vertices();
    let reachable = |transpose: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for e in &g.skeleton.edges {
                // Edges run source -> range; follow them in both directions.
                let (from, to) = if transpose {
                    (e.range, e.source)
                } else {
                    (e.source, e.range)
                };
                if from == v && !seen[to] {
                    seen[to] = true;
                    count += 1;
                    stack.push(to);
                }
            }
        }
        count
    };
    reachable(false) == n && reachable(true) == n
}

fn power_iteration(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>), PfError> {
    let n = a.nrows();
    let mut v = DVector::<f64>::repeat(n, 1.0);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = a * &v;
        let norm = w.amax();
        if norm == 0.0 {
            return Err(PfError::ConvergenceFailure("matrix annihilates iterate".into()));
        }
        let next = &w / norm;
        let rayleigh = v.dot(&w) / v.dot(&v);
        let delta = (&next - &v).amax();
        v = next;
        lambda = rayleigh;
        if delta < POWER_TOL {
            return Ok((lambda, v));
        }
    }
    // Report the last Rayleigh estimate; the residual check below is the
    // actual contract.
    Ok((lambda, v))
}

/// Compute rho and kappa and verify the residual contract.
pub fn perron_frobenius(g: &KGraph) -> Result<PFData, PfError> {
    if !is_strongly_connected(g) {
        return Err(PfError::NotStronglyConnected);
    }
    let mats: Vec<DMatrix<f64>> = (1..=g.rank())
        .map(|c| vertex_matrix(g, c).entries.map(|x| x as f64))
        .collect();
    let n = g.num_vertices();
    let sum = mats
        .iter()
        .fold(DMatrix::<f64>::zeros(n, n), |acc, m| acc + m);

    let (_, mut kappa) = power_iteration(&sum)?;
    let total: f64 = kappa.iter().sum();
    kappa /= total;

    let kappa_inf = kappa.amax();
    let mut rho = Vec::with_capacity(g.rank());
    for (i, a) in mats.iter().enumerate() {
        let image = a * &kappa;
        // Rayleigh quotient of the shared eigenvector for color i.
        let rho_shared = kappa.dot(&image) / kappa.dot(&kappa);
        let residual = (&image - rho_shared * &kappa).amax();
        if residual > RESIDUAL_TOL * kappa_inf {
            return Err(PfError::ConvergenceFailure(format!(
                "residual {residual:.3e} for color {} exceeds tolerance",
                i + 1
            )));
        }
        // Independent per-color spectral radius must agree.
        let (rho_i, _) = power_iteration(a)?;
        if (rho_i - rho_shared).abs() > RHO_AGREEMENT_TOL {
            return Err(PfError::ConvergenceFailure(format!(
                "spectral radius mismatch for color {}: {rho_i} vs {rho_shared}",
                i + 1
            )));
        }
        rho.push(rho_shared);
    }
    if kappa.iter().any(|&x| x <= 0.0) {
        return Err(PfError::ConvergenceFailure("eigenvector not strictly positive".into()));
    }
    let norm_err = (kappa.iter().sum::<f64>() - 1.0).abs();
    if norm_err > NORMALIZATION_TOL {
        return Err(PfError::ConvergenceFailure(format!(
            "normalization error {norm_err:.3e}"
        )));
    }
    Ok(PFData {
        rho,
        kappa: kappa.iter().copied().collect(),
    })
}

impl PFData {
    /// rho^{-n} = rho_1^{-n_1} ... rho_k^{-n_k}.
    pub fn rho_pow_neg(&self, n: &Degree) -> f64 {
        self.rho
            .iter()
            .zip(n.entries())
            .map(|(&r, &e)| r.powi(-(e as i32)))
            .product()
    }

    /// rho^{n/2}, the scaling weight of S_lambda for d(lambda) = n.
    pub fn rho_pow_half(&self, n: &Degree) -> f64 {
        self.rho
            .iter()
            .zip(n.entries())
            .map(|(&r, &e)| r.powf(e as f64 / 2.0))
            .product()
    }
}

/// M([lambda]) = rho^{-d(lambda)} kappa_{s(lambda)}.
pub fn cylinder_measure(pf: &PFData, lam: &Path) -> f64 {
    pf.rho_pow_neg(&lam.degree) * pf.kappa[lam.source]
}

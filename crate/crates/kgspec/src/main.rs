//! `kgspec` command-line front end.

use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use kgspec::degree::Degree;
use kgspec::dirac::{
    commutator_sweep, dirac_truncation, projection_algebra_defect, resolvent_decay,
    self_adjointness_defect, verify_eigenspace_wavelet_identity, AlphaSequence,
};
use kgspec::kgraph::{KGraph, Path};
use kgspec::parse::parse_kgraph;
use kgspec::pf::{
    cylinder_measure, is_strongly_connected, perron_frobenius, vertex_matrices, PFData,
};
use kgspec::report::{envelope, render, Format};
use kgspec::repspace::{ck_verify, inner_product, level_basis};
use kgspec::wavelets::{d_v, mother_wavelets, verify_decomposition, wavelet_space};
use kgspec::validate_kgraph;

#[derive(Parser)]
#[command(name = "kgspec", version, about = "Numerical spectral-triple toolkit for finite higher-rank graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Graph file in .kg format
    graph: PathBuf,

    /// Truncation level T
    #[arg(long, default_value_t = 2)]
    level: usize,

    /// Affine Dirac eigenvalues a,b meaning alpha_q = a*q + b
    #[arg(long, value_name = "a,b")]
    alpha: Option<String>,

    /// Explicit Dirac eigenvalue list v0,v1,...
    #[arg(long, value_name = "v0,v1,...")]
    alpha_list: Option<String>,

    /// Rectangular step degree j1,...,jk (defaults to squares)
    #[arg(long = "J", value_name = "j1,...,jk")]
    j: Option<String>,

    /// Absolute tolerance override for pass/fail checks
    #[arg(long)]
    tol: Option<f64>,

    /// Output format
    #[arg(long, default_value = "text")]
    format: Format,

    /// Write the report to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a file presents a source-free k-graph
    Validate(Common),
    /// Vertex matrices, Perron-Frobenius data, and level dimensions
    Info(Common),
    /// Cuntz-Krieger relations as matrix identities
    Ck(Common),
    /// Mother wavelets and the scale families
    Wavelets {
        #[command(flatten)]
        common: Common,
        /// Include full coordinate lists of the scaled families
        #[arg(long)]
        vectors: bool,
    },
    /// Wavelet decomposition of the level-T space
    Decompose(Common),
    /// Dirac spectrum, eigenspace identities, and resolvent decay
    Dirac(Common),
    /// Commutator norm sweeps for generator pairs
    Commutators {
        #[command(flatten)]
        common: Common,
        /// Generator pair `LAM:MU`; each side is a vertex id or a
        /// dot-separated edge-id sequence. Repeatable.
        #[arg(long = "pair")]
        pairs: Vec<String>,
    },
}

/// Exit codes: 0 pass, 1 validation failure, 2 verification failure,
/// 3 I/O or parse error.
enum Failure {
    Validation(String),
    Verification,
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Verification => 2,
            Failure::Io(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(msg) => eprintln!("{msg}"),
                Failure::Io(msg) => eprintln!("{msg}"),
                Failure::Verification => {}
            }
            ExitCode::from(f.code())
        }
    }
}

fn load_graph(path: &FsPath) -> Result<(String, KGraph), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let (skeleton, table) =
        parse_kgraph(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let graph = validate_kgraph(skeleton, table)
        .map_err(|r| Failure::Validation(format!("{}: invalid k-graph\n{r}", path.display())))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((id, graph))
}

fn pf_data(g: &KGraph) -> Result<PFData, Failure> {
    perron_frobenius(g).map_err(|e| Failure::Validation(e.to_string()))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Io(format!("bad number {p}")))
        })
        .collect()
}

impl Common {
    fn alpha(&self) -> Result<AlphaSequence, Failure> {
        let seq = if let Some(list) = &self.alpha_list {
            AlphaSequence::Explicit(parse_floats(list)?)
        } else if let Some(ab) = &self.alpha {
            let v = parse_floats(ab)?;
            if v.len() != 2 {
                return Err(Failure::Io("--alpha expects two values a,b".into()));
            }
            AlphaSequence::Affine { a: v[0], b: v[1] }
        } else {
            AlphaSequence::default_affine()
        };
        seq.validate().map_err(|e| Failure::Io(e.to_string()))?;
        Ok(seq)
    }

    fn step(&self, g: &KGraph) -> Result<Degree, Failure> {
        match &self.j {
            None => Ok(Degree::square(g.rank(), 1)),
            Some(spec) => {
                let entries: Result<Vec<usize>, _> = spec
                    .split(',')
                    .map(|p| p.trim().parse::<usize>())
                    .collect();
                let entries =
                    entries.map_err(|_| Failure::Io(format!("bad step degree {spec}")))?;
                if entries.len() != g.rank() || entries.iter().any(|&e| e == 0) {
                    return Err(Failure::Io(format!(
                        "step degree must have {} strictly positive entries",
                        g.rank()
                    )));
                }
                Ok(Degree::new(entries))
            }
        }
    }

    fn emit(&self, graph_id: &str, command: &str, params: Value, pass: bool, data: Value) -> Result<(), Failure> {
        let doc = envelope(graph_id, command, params, pass, data);
        let text = render(&doc, self.format);
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?,
            None => print!("{text}"),
        }
        if pass {
            Ok(())
        } else {
            Err(Failure::Verification)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate(c) => cmd_validate(&c),
        Command::Info(c) => cmd_info(&c),
        Command::Ck(c) => cmd_ck(&c),
        Command::Wavelets { common, vectors } => cmd_wavelets(&common, vectors),
        Command::Decompose(c) => cmd_decompose(&c),
        Command::Dirac(c) => cmd_dirac(&c),
        Command::Commutators { common, pairs } => cmd_commutators(&common, &pairs),
    }
}

fn cmd_validate(c: &Common) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let data = json!({
        "rank": g.rank(),
        "vertices": g.num_vertices(),
        "edges": g.skeleton.num_edges(),
        "squares": g.table.squares.len(),
        "strongly_connected": is_strongly_connected(&g),
    });
    c.emit(&id, "validate", json!({}), true, data)
}

fn cmd_info(c: &Common) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let pf = pf_data(&g)?;
    let mats: Vec<Value> = vertex_matrices(&g)
        .iter()
        .map(|m| {
            let rows: Vec<Vec<u64>> = (0..m.entries.nrows())
                .map(|i| m.entries.row(i).iter().copied().collect())
                .collect();
            json!({ "color": m.color, "matrix": rows })
        })
        .collect();
    let edge_counts: Vec<usize> = (1..=g.rank())
        .map(|color| g.skeleton.edges.iter().filter(|e| e.color == color).count())
        .collect();
    let measures: Vec<Value> = g
        .vertices()
        .map(|v| json!({ "vertex": g.vertex_name(v), "measure": cylinder_measure(&pf, &g.vertex_path(v)) }))
        .collect();
    let step = c.step(&g)?;
    let dims: Vec<usize> = (0..=c.level)
        .map(|s| level_basis(&g, &pf, s, Some(step.clone())).dim())
        .collect();
    let data = json!({
        "rank": g.rank(),
        "vertices": g.num_vertices(),
        "edge_counts": edge_counts,
        "vertex_matrices": mats,
        "rho": pf.rho,
        "kappa": pf.kappa,
        "vertex_measures": measures,
        "step": step.entries(),
        "level_dims": dims,
    });
    c.emit(&id, "info", json!({ "level": c.level }), true, data)
}

fn cmd_ck(c: &Common) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let pf = pf_data(&g)?;
    let tol = c.tol.unwrap_or(1e-10);
    let level = c.level.max(2);
    let report = ck_verify(&g, &pf, level, tol).map_err(|e| Failure::Io(e.to_string()))?;
    let pass = report.pass;
    let data = json!({
        "level": report.level,
        "ck1_max_deviation": report.ck1,
        "ck2_max_deviation": report.ck2,
        "ck3_max_deviation": report.ck3,
        "ck4_max_deviation": report.ck4,
        "tolerance": report.tol,
    });
    c.emit(&id, "ck", json!({ "level": level, "tol": tol }), pass, data)
}

fn cmd_wavelets(c: &Common, vectors: bool) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let pf = pf_data(&g)?;
    let step = c.step(&g)?;
    let mut mother_json = Vec::new();
    let mut all_mothers = Vec::new();
    for v in g.vertices() {
        let dv = d_v(&g, v, &step).map_err(|e| Failure::Validation(e.to_string()))?;
        let mothers = mother_wavelets(&g, &pf, v, &step)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        let coords: Vec<Value> = mothers
            .iter()
            .map(|m| {
                let entries: Vec<Value> = m
                    .vector
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(i, &x)| json!({ "path": g.path_name(&m.vector.basis.paths[i]), "value": x }))
                    .collect();
                json!({ "index": m.index, "coordinates": entries })
            })
            .collect();
        mother_json.push(json!({
            "vertex": g.vertex_name(v),
            "d_v": dv.iter().map(|p| g.path_name(p)).collect::<Vec<_>>(),
            "mothers": coords,
        }));
        all_mothers.extend(mothers);
    }
    // Gram matrix of the unnormalized mother family.
    let gram: Vec<Vec<f64>> = all_mothers
        .iter()
        .map(|a| {
            all_mothers
                .iter()
                .map(|b| inner_product(&a.vector, &b.vector).expect("same basis"))
                .collect()
        })
        .collect();
    let mut families = Vec::new();
    for n in 0..c.level {
        let ws = wavelet_space(&g, &pf, n, &step).map_err(|e| Failure::Validation(e.to_string()))?;
        let mut fam = json!({
            "scale": n,
            "size": ws.vectors.len(),
            "labels": ws.labels.iter().map(|(p, i)| format!("{}#{}", g.path_name(p), i)).collect::<Vec<_>>(),
        });
        if vectors {
            let coords: Vec<Value> = ws
                .vectors
                .iter()
                .zip(&ws.labels)
                .map(|(v, (p, i))| {
                    let entries: Vec<Value> = v
                        .coeffs
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x != 0.0)
                        .map(|(row, &x)| json!({ "path": g.path_name(&v.basis.paths[row]), "value": x }))
                        .collect();
                    json!({ "label": format!("{}#{}", g.path_name(p), i), "coordinates": entries })
                })
                .collect();
            fam["vectors"] = Value::Array(coords);
        }
        families.push(fam);
    }
    let data = json!({
        "step": step.entries(),
        "mother_wavelets": mother_json,
        "mother_gram": gram,
        "families": families,
    });
    c.emit(&id, "wavelets", json!({ "level": c.level }), true, data)
}

fn cmd_decompose(c: &Common) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let pf = pf_data(&g)?;
    let step = c.step(&g)?;
    let orth_tol = c.tol.unwrap_or(1e-10);
    let level = c.level.max(1);
    let report = verify_decomposition(&g, &pf, level, &step, orth_tol, 1e-9)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let pass = report.pass;
    let data = json!({
        "level": report.level,
        "dim_r": report.dim_r,
        "dim_v0": report.dim_v0,
        "dims_w": report.dims_w,
        "dims_expected": report.dims_expected,
        "max_cross_orthogonality": report.max_cross_angle,
        "span_residual": report.span_residual,
        "orthogonality_tolerance": report.orth_tol,
        "span_tolerance": report.span_tol,
    });
    c.emit(&id, "decompose", json!({ "level": level, "step": step.entries() }), pass, data)
}

fn cmd_dirac(c: &Common) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let pf = pf_data(&g)?;
    let step = c.step(&g)?;
    let alpha = c.alpha()?;
    let level = c.level.max(1);
    let tol = c.tol.unwrap_or(1e-8);
    let dt = dirac_truncation(&g, &pf, &alpha, level, &step)
        .map_err(|e| Failure::Io(e.to_string()))?;

    let mut spectrum = vec![json!({
        "eigenvalue": 0.0,
        "multiplicity": dt.xi_constants.trace().round() as usize,
        "note": "constants",
    })];
    for q in 0..=level {
        spectrum.push(json!({
            "eigenvalue": dt.alpha.value(q).map_err(|e| Failure::Io(e.to_string()))?,
            "multiplicity": dt.multiplicity(q),
        }));
    }

    let mut identities = Vec::new();
    let mut all_pass = true;
    for q in 0..level {
        let rep = verify_eigenspace_wavelet_identity(&g, &pf, &dt, q, tol)
            .map_err(|e| Failure::Io(e.to_string()))?;
        all_pass &= rep.pass;
        identities.push(json!({
            "q": rep.q,
            "wavelet_dim": rep.wavelet_dim,
            "spectral_dim": rep.spectral_dim,
            "projector_gap": rep.projector_gap,
            "pass": rep.pass,
        }));
    }

    let resolvent = resolvent_decay(&dt, Complex64::new(0.0, 1.0))
        .map_err(|e| Failure::Io(e.to_string()))?;
    all_pass &= resolvent.strictly_decreasing;
    let resolvent_rows: Vec<Value> = resolvent
        .rows
        .iter()
        .map(|r| {
            json!({
                "eigenvalue": r.eigenvalue,
                "multiplicity": r.multiplicity,
                "singular_value": r.singular_value,
            })
        })
        .collect();

    let sa = self_adjointness_defect(&dt);
    let pa = projection_algebra_defect(&dt);
    all_pass &= sa <= 1e-12 && pa <= 1e-10;

    let data = json!({
        "step": step.entries(),
        "constants_eigenvalue": 0.0,
        "spectrum": spectrum,
        "self_adjointness_defect": sa,
        "projection_algebra_defect": pa,
        "eigenspace_identities": identities,
        "resolvent": {
            "z": "i",
            "rows": resolvent_rows,
            "strictly_decreasing": resolvent.strictly_decreasing,
        },
    });
    c.emit(&id, "dirac", json!({ "level": level, "tol": tol }), all_pass, data)
}

fn resolve_path_spec(g: &KGraph, spec: &str) -> Result<Path, Failure> {
    if let Some(v) = g.skeleton.vertex_index(spec) {
        return Ok(g.vertex_path(v));
    }
    let mut path: Option<Path> = None;
    for name in spec.split('.') {
        let e = g
            .skeleton
            .edge_index(name)
            .ok_or_else(|| Failure::Io(format!("unknown edge or vertex id {name}")))?;
        let edge = g.edge_path(e);
        path = Some(match path {
            None => edge,
            Some(p) => g
                .compose(&p, &edge)
                .map_err(|e| Failure::Io(format!("path spec {spec}: {e}")))?,
        });
    }
    path.ok_or_else(|| Failure::Io(format!("empty path spec {spec}")))
}

/// Source-matched generator pairs from vertices and single edges, in
/// canonical order.
fn default_pairs(g: &KGraph, limit: usize) -> Vec<(Path, Path)> {
    let mut atoms: Vec<Path> = g.vertices().map(|v| g.vertex_path(v)).collect();
    atoms.extend((0..g.skeleton.num_edges()).map(|e| g.edge_path(e)));
    let mut out = Vec::new();
    for a in &atoms {
        for b in &atoms {
            if a.source == b.source {
                out.push((a.clone(), b.clone()));
                if out.len() == limit {
                    return out;
                }
            }
        }
    }
    out
}

fn cmd_commutators(c: &Common, pair_specs: &[String]) -> Result<(), Failure> {
    let (id, g) = load_graph(&c.graph)?;
    let pf = pf_data(&g)?;
    let alpha = c.alpha()?;
    let tol = c.tol.unwrap_or(1e-9);
    let pairs: Vec<(Path, Path)> = if pair_specs.is_empty() {
        default_pairs(&g, 6)
    } else {
        pair_specs
            .iter()
            .map(|spec| {
                let (l, m) = spec
                    .split_once(':')
                    .ok_or_else(|| Failure::Io(format!("pair {spec} must be LAM:MU")))?;
                Ok((resolve_path_spec(&g, l)?, resolve_path_spec(&g, m)?))
            })
            .collect::<Result<_, Failure>>()?
    };
    let step = Degree::square(g.rank(), 1);
    let dt = dirac_truncation(&g, &pf, &alpha, c.level, &step)
        .map_err(|e| Failure::Io(e.to_string()))?;
    let mut all_pass = true;
    let mut reports = Vec::new();
    for (lam, mu) in &pairs {
        let rep = commutator_sweep(&g, &pf, &dt, lam, mu, tol)
            .map_err(|e| Failure::Io(e.to_string()))?;
        all_pass &= rep.pass;
        let rows: Vec<Value> = rep
            .rows
            .iter()
            .map(|r| json!({ "q": r.q, "norm": r.norm, "ceiling": r.ceiling, "pass": r.pass }))
            .collect();
        reports.push(json!({
            "lambda": rep.lam,
            "mu": rep.mu,
            "gap_bound": rep.gap_bound,
            "rows": rows,
            "pass": rep.pass,
        }));
    }
    let data = json!({ "pairs": reports });
    c.emit(&id, "commutators", json!({ "level": c.level, "tol": tol }), all_pass, data)
}

//! Finite k-graphs presented by a colored skeleton and factorization squares.
//!
//! A path is kept in color-sorted normal form: all color-1 edges first, then
//! color-2, and so on, each block composable left to right. The range of a
//! path is the range of its first edge, the source is the source of its last
//! edge (identity paths carry an explicit base vertex). With this convention
//! two paths are equal iff their edge lists (and base vertices) coincide.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::degree::Degree;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub color: usize, // 1-based
    pub source: VertexId,
    pub range: VertexId,
}

/// The 1-skeleton: a finite colored directed multigraph.
#[derive(Clone, Debug)]
pub struct Skeleton {
    pub rank: usize,
    pub vertex_names: Vec<String>,
    pub edge_names: Vec<String>,
    pub edges: Vec<Edge>,
}

impl Skeleton {
    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<EdgeId> {
        self.edge_names.iter().position(|n| n == name)
    }
}

/// One factorization square `f g -> g' f'`: the composite of a color-j edge
/// `f` followed by a color-i edge `g` (i < j) rewrites to the color-sorted
/// composite `g' f'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Square {
    pub f: EdgeId,
    pub g: EdgeId,
    pub g_sorted: EdgeId,
    pub f_sorted: EdgeId,
}

/// Finite presentation of the factorization property on bi-colored paths.
#[derive(Clone, Debug, Default)]
pub struct FactorizationTable {
    pub squares: Vec<Square>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KGraphError {
    #[error("square map is not bijective: {0}")]
    NonBijectiveSquare(String),
    #[error("cube consistency fails for edge triple ({0}, {1}, {2})")]
    CubeInconsistent(String, String, String),
    #[error("vertex {vertex} has no incoming edge of color {color}")]
    SourceViolation { vertex: String, color: usize },
    #[error("paths are not composable: source {0} != range {1}")]
    NotComposable(String, String),
    #[error("degree {0} is not <= path degree {1}")]
    DegreeOutOfRange(Degree, Degree),
    #[error("square table entry is malformed: {0}")]
    MalformedSquare(String),
}

/// All problems found while validating a presentation.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub issues: Vec<KGraphError>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// A path of the category in color-sorted normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub range: VertexId,
    pub source: VertexId,
    pub edges: Vec<EdgeId>,
    pub degree: Degree,
}

impl Path {
    pub fn is_vertex(&self) -> bool {
        self.edges.is_empty()
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path(r={}, s={}, edges={:?})", self.range, self.source, self.edges)
    }
}

/// A validated finite source-free k-graph.
#[derive(Clone, Debug)]
pub struct KGraph {
    pub skeleton: Skeleton,
    pub table: FactorizationTable,
    // (higher-color edge, lower-color edge) -> (lower, higher)
    forward: HashMap<(EdgeId, EdgeId), (EdgeId, EdgeId)>,
    // (lower-color edge, higher-color edge) -> (higher, lower)
    inverse: HashMap<(EdgeId, EdgeId), (EdgeId, EdgeId)>,
}

impl KGraph {
    pub fn rank(&self) -> usize {
        self.skeleton.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.skeleton.num_vertices()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.skeleton.num_vertices()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.skeleton.edges[e]
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.skeleton.vertex_names[v]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.skeleton.edge_names[e]
    }

    pub fn path_name(&self, p: &Path) -> String {
        if p.is_vertex() {
            self.vertex_name(p.range).to_string()
        } else {
            p.edges
                .iter()
                .map(|&e| self.edge_name(e))
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    /// The identity path at a vertex.
    pub fn vertex_path(&self, v: VertexId) -> Path {
        Path {
            range: v,
            source: v,
            edges: Vec::new(),
            degree: Degree::zero(self.rank()),
        }
    }

    /// A single edge as a path.
    pub fn edge_path(&self, e: EdgeId) -> Path {
        let edge = self.edge(e);
        Path {
            range: edge.range,
            source: edge.source,
            edges: vec![e],
            degree: Degree::unit(self.rank(), edge.color),
        }
    }

    fn path_from_normal_edges(&self, range: VertexId, edges: Vec<EdgeId>) -> Path {
        let source = edges
            .last()
            .map(|&e| self.edge(e).source)
            .unwrap_or(range);
        let mut counts = vec![0usize; self.rank()];
        for &e in &edges {
            counts[self.edge(e).color - 1] += 1;
        }
        Path {
            range,
            source,
            edges,
            degree: Degree::new(counts),
        }
    }

    /// Category composition; re-sorts to normal form via factorization squares.
    pub fn compose(&self, left: &Path, right: &Path) -> Result<Path, KGraphError> {
        if left.source != right.range {
            return Err(KGraphError::NotComposable(
                self.vertex_name(left.source).to_string(),
                self.vertex_name(right.range).to_string(),
            ));
        }
        let mut edges: Vec<EdgeId> = left.edges.clone();
        edges.extend_from_slice(&right.edges);
        self.sort_edges(&mut edges);
        Ok(self.path_from_normal_edges(left.range, edges))
    }

    /// Bubble adjacent out-of-order bi-colored pairs through the square maps.
    fn sort_edges(&self, edges: &mut [EdgeId]) {
        let n = edges.len();
        loop {
            let mut swapped = false;
            for i in 0..n.saturating_sub(1) {
                let (a, b) = (edges[i], edges[i + 1]);
                if self.edge(a).color > self.edge(b).color {
                    let (lo, hi) = *self
                        .forward
                        .get(&(a, b))
                        .expect("validated graph has a total square table");
                    edges[i] = lo;
                    edges[i + 1] = hi;
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
    }

    /// Pull the first color-c edge of a normal-form path to the front,
    /// returning that edge and the (still normal-form) remainder.
    fn split_first_of_color(&self, path: &Path, color: usize) -> (EdgeId, Path) {
        debug_assert!(path.degree[color - 1] > 0);
        let mut edges = path.edges.clone();
        let pos = edges
            .iter()
            .position(|&e| self.edge(e).color == color)
            .expect("degree bookkeeping guarantees an edge of this color");
        // Bubble leftwards through lower-color edges with inverse squares.
        let mut p = pos;
        while p > 0 {
            let (lo, hi) = (edges[p - 1], edges[p]);
            let (f, g) = *self
                .inverse
                .get(&(lo, hi))
                .expect("validated graph has a total square table");
            edges[p - 1] = f;
            edges[p] = g;
            p -= 1;
        }
        let first = edges[0];
        let rest: Vec<EdgeId> = edges[1..].to_vec();
        let range = self.edge(first).source;
        (first, self.path_from_normal_edges(range, rest))
    }

    /// The unique factorization path = μν with d(μ) = m.
    pub fn factorize(&self, path: &Path, m: &Degree) -> Result<(Path, Path), KGraphError> {
        if !m.le(&path.degree) {
            return Err(KGraphError::DegreeOutOfRange(m.clone(), path.degree.clone()));
        }
        let mut prefix: Vec<EdgeId> = Vec::with_capacity(m.total());
        let mut rest = path.clone();
        for color in 1..=self.rank() {
            for _ in 0..m[color - 1] {
                let (e, r) = self.split_first_of_color(&rest, color);
                prefix.push(e);
                rest = r;
            }
        }
        let mu = self.path_from_normal_edges(path.range, prefix);
        Ok((mu, rest))
    }

    /// All normal-form paths of degree n, optionally restricted to range v.
    /// Canonical order: lexicographic in edge indices, colors extended in
    /// ascending order.
    pub fn enumerate_paths(&self, n: &Degree, v: Option<VertexId>) -> Vec<Path> {
        let mut partials: Vec<(VertexId, Vec<EdgeId>, VertexId)> = match v {
            Some(v) => vec![(v, Vec::new(), v)],
            None => self.vertices().map(|v| (v, Vec::new(), v)).collect(),
        };
        for color in 1..=self.rank() {
            for _ in 0..n[color - 1] {
                let mut next = Vec::new();
                for (range, edges, src) in &partials {
                    for (e, edge) in self.skeleton.edges.iter().enumerate() {
                        if edge.color == color && edge.range == *src {
                            let mut ext = edges.clone();
                            ext.push(e);
                            next.push((*range, ext, edge.source));
                        }
                    }
                }
                partials = next;
            }
        }
        partials
            .into_iter()
            .map(|(range, edges, _)| self.path_from_normal_edges(range, edges))
            .collect()
    }

    /// Λ^min(λ, η): minimal common extensions, by brute force.
    pub fn lambda_min(&self, lam: &Path, eta: &Path) -> Vec<(Path, Path)> {
        let join = lam.degree.join(&eta.degree);
        let ext_deg = join.sub(&lam.degree);
        let mut out = Vec::new();
        for alpha in self.enumerate_paths(&ext_deg, Some(lam.source)) {
            let total = self.compose(lam, &alpha).expect("range matches by construction");
            let (head, beta) = self.factorize(&total, &eta.degree).expect("degree <= join");
            if head == *eta {
                out.push((alpha, beta));
            }
        }
        out
    }
}

/// Check a raw presentation and produce a usable k-graph.
pub fn validate_kgraph(
    skeleton: Skeleton,
    table: FactorizationTable,
) -> Result<KGraph, ValidationReport> {
    let mut issues = Vec::new();
    let mut forward = HashMap::new();
    let mut inverse = HashMap::new();

    let edge_name = |e: EdgeId| skeleton.edge_names[e].clone();

    // Well-formedness of each declared square.
    for sq in &table.squares {
        let (f, g, gs, fs) = (sq.f, sq.g, sq.g_sorted, sq.f_sorted);
        let (cf, cg) = (skeleton.edges[f].color, skeleton.edges[g].color);
        if cf <= cg {
            issues.push(KGraphError::MalformedSquare(format!(
                "{} {} -> {} {}: left pair must be higher color then lower color",
                edge_name(f), edge_name(g), edge_name(gs), edge_name(fs)
            )));
            continue;
        }
        if skeleton.edges[gs].color != cg || skeleton.edges[fs].color != cf {
            issues.push(KGraphError::MalformedSquare(format!(
                "{} {} -> {} {}: colors do not match across the square",
                edge_name(f), edge_name(g), edge_name(gs), edge_name(fs)
            )));
            continue;
        }
        if skeleton.edges[f].source != skeleton.edges[g].range
            || skeleton.edges[gs].source != skeleton.edges[fs].range
        {
            issues.push(KGraphError::MalformedSquare(format!(
                "{} {} -> {} {}: sides are not composable",
                edge_name(f), edge_name(g), edge_name(gs), edge_name(fs)
            )));
            continue;
        }
        if skeleton.edges[f].range != skeleton.edges[gs].range
            || skeleton.edges[g].source != skeleton.edges[fs].source
        {
            issues.push(KGraphError::MalformedSquare(format!(
                "{} {} -> {} {}: outer endpoints differ",
                edge_name(f), edge_name(g), edge_name(gs), edge_name(fs)
            )));
            continue;
        }
        if forward.insert((f, g), (gs, fs)).is_some() {
            issues.push(KGraphError::NonBijectiveSquare(format!(
                "pair ({}, {}) appears on the left of two squares",
                edge_name(f), edge_name(g)
            )));
        }
        if inverse.insert((gs, fs), (f, g)).is_some() {
            issues.push(KGraphError::NonBijectiveSquare(format!(
                "pair ({}, {}) appears on the right of two squares",
                edge_name(gs), edge_name(fs)
            )));
        }
    }

    // Totality: every composable bi-colored pair appears on both sides.
    let num_edges = skeleton.num_edges();
    for f in 0..num_edges {
        for g in 0..num_edges {
            let (ef, eg) = (&skeleton.edges[f], &skeleton.edges[g]);
            if ef.source != eg.range {
                continue;
            }
            if ef.color > eg.color && !forward.contains_key(&(f, g)) {
                issues.push(KGraphError::NonBijectiveSquare(format!(
                    "composable pair ({}, {}) has no square",
                    edge_name(f), edge_name(g)
                )));
            }
            if ef.color < eg.color && !inverse.contains_key(&(f, g)) {
                issues.push(KGraphError::NonBijectiveSquare(format!(
                    "sorted pair ({}, {}) is not the image of any square",
                    edge_name(f), edge_name(g)
                )));
            }
        }
    }

    // Source-freeness: vΛ^{e_i} nonempty for every vertex and color.
    for v in 0..skeleton.num_vertices() {
        for color in 1..=skeleton.rank {
            if !skeleton
                .edges
                .iter()
                .any(|e| e.color == color && e.range == v)
            {
                issues.push(KGraphError::SourceViolation {
                    vertex: skeleton.vertex_names[v].clone(),
                    color,
                });
            }
        }
    }

    if issues.is_empty() && skeleton.rank >= 3 {
        cube_consistency(&skeleton, &forward, &mut issues);
    }

    if issues.is_empty() {
        Ok(KGraph {
            skeleton,
            table,
            forward,
            inverse,
        })
    } else {
        Err(ValidationReport { issues })
    }
}

/// For every composable tri-colored triple in strictly descending color
/// order, the two adjacent-transposition routes to sorted order must agree.
fn cube_consistency(
    skeleton: &Skeleton,
    forward: &HashMap<(EdgeId, EdgeId), (EdgeId, EdgeId)>,
    issues: &mut Vec<KGraphError>,
) {
    let swap = |edges: &mut [EdgeId; 3], i: usize| {
        let (lo, hi) = forward[&(edges[i], edges[i + 1])];
        edges[i] = lo;
        edges[i + 1] = hi;
    };
    let n = skeleton.num_edges();
    for a in 0..n {
        for b in 0..n {
            if skeleton.edges[a].source != skeleton.edges[b].range
                || skeleton.edges[a].color <= skeleton.edges[b].color
            {
                continue;
            }
            for c in 0..n {
                if skeleton.edges[b].source != skeleton.edges[c].range
                    || skeleton.edges[b].color <= skeleton.edges[c].color
                {
                    continue;
                }
                let mut route1 = [a, b, c];
                swap(&mut route1, 0);
                swap(&mut route1, 1);
                swap(&mut route1, 0);
                let mut route2 = [a, b, c];
                swap(&mut route2, 1);
                swap(&mut route2, 0);
                swap(&mut route2, 1);
                if route1 != route2 {
                    issues.push(KGraphError::CubeInconsistent(
                        skeleton.edge_names[a].clone(),
                        skeleton.edge_names[b].clone(),
                        skeleton.edge_names[c].clone(),
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_kgraph;
    use crate::testutil::{graph, try_graph, VALID};

    fn validate_text(text: &str) -> Result<KGraph, ValidationReport> {
        let (skeleton, table) = parse_kgraph(text).expect("test text parses");
        validate_kgraph(skeleton, table)
    }

    fn path(g: &KGraph, names: &[&str]) -> Path {
        let mut p: Option<Path> = None;
        for name in names {
            let e = g.edge_path(g.skeleton.edge_index(name).unwrap());
            p = Some(match p {
                None => e,
                Some(prev) => g.compose(&prev, &e).unwrap(),
            });
        }
        p.unwrap()
    }

    #[test]
    fn bundled_fixtures_validate() {
        for name in VALID {
            assert!(try_graph(name).is_ok(), "{name} should validate");
        }
    }

    #[test]
    fn broken_square_is_rejected() {
        let report = try_graph("broken-square").unwrap_err();
        assert!(
            report
                .issues
                .iter()
                .any(|i| matches!(i, KGraphError::NonBijectiveSquare(_))),
            "expected a NonBijectiveSquare issue, got {report}"
        );
    }

    #[test]
    fn malformed_square_sides() {
        // Left pair written lower color first.
        let text = "[vertices]\nv\n[edges]\nb 1 v v\nr 2 v v\n[squares]\nb r -> b r\n";
        let report = validate_text(text).unwrap_err();
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, KGraphError::MalformedSquare(_))));
    }

    #[test]
    fn source_violation_detected() {
        // Vertex w has no incoming color-2 edge.
        let text = "[vertices]\nu\nw\n[edges]\nbu 1 u u\nbw 1 w w\nr 2 u u\n[squares]\nr bu -> bu r\n";
        let report = validate_text(text).unwrap_err();
        assert_eq!(report.issues.len(), 1);
        assert!(matches!(
            &report.issues[0],
            KGraphError::SourceViolation { vertex, color: 2 } if vertex == "w"
        ));
    }

    #[test]
    fn missing_square_detected() {
        let text = "[vertices]\nv\n[edges]\nb 1 v v\nr 2 v v\n";
        let report = validate_text(text).unwrap_err();
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, KGraphError::NonBijectiveSquare(_))));
    }

    const CUBE_OK: &str = "[vertices]\nv\n[edges]\na1 1 v v\na2 1 v v\na3 1 v v\nb 2 v v\nc 3 v v\n[squares]\nb a1 -> a1 b\nb a2 -> a2 b\nb a3 -> a3 b\nc a1 -> a2 c\nc a2 -> a1 c\nc a3 -> a3 c\nc b -> b c\n";

    // Same skeleton, but the two color permutations on the a-edges do not
    // commute: b acts by (a2 a3), c by (a1 a2).
    const CUBE_BAD: &str = "[vertices]\nv\n[edges]\na1 1 v v\na2 1 v v\na3 1 v v\nb 2 v v\nc 3 v v\n[squares]\nb a1 -> a1 b\nb a2 -> a3 b\nb a3 -> a2 b\nc a1 -> a2 c\nc a2 -> a1 c\nc a3 -> a3 c\nc b -> b c\n";

    #[test]
    fn cube_consistency_accepts_commuting_squares() {
        assert!(validate_text(CUBE_OK).is_ok());
    }

    #[test]
    fn cube_consistency_rejects_noncommuting_squares() {
        let report = validate_text(CUBE_BAD).unwrap_err();
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, KGraphError::CubeInconsistent(..))));
    }

    #[test]
    fn compose_sorts_to_normal_form() {
        let g = graph("fib2");
        // r1 then b1 rewrites through the square r1 b1 -> b1 r2.
        let p = path(&g, &["r1", "b1"]);
        assert_eq!(g.path_name(&p), "b1.r2");
        assert_eq!(p.degree, Degree::new(vec![1, 1]));
        assert_eq!(p.range, g.skeleton.vertex_index("u").unwrap());
        assert_eq!(p.source, g.skeleton.vertex_index("u").unwrap());
    }

    #[test]
    fn compose_requires_matching_endpoints() {
        let g = graph("twovertex");
        let euu = path(&g, &["euu"]);
        let eww = path(&g, &["eww"]);
        assert!(matches!(
            g.compose(&euu, &eww),
            Err(KGraphError::NotComposable(..))
        ));
    }

    #[test]
    fn factorize_inverts_compose() {
        let g = graph("fib2");
        let p = path(&g, &["r1", "b1"]); // = b1.r2 in normal form
        let (mu, nu) = g.factorize(&p, &Degree::new(vec![0, 1])).unwrap();
        assert_eq!(g.path_name(&mu), "r1");
        assert_eq!(g.path_name(&nu), "b1");
        assert_eq!(g.compose(&mu, &nu).unwrap(), p);
    }

    #[test]
    fn factorize_degree_bound() {
        let g = graph("o2");
        let p = path(&g, &["e"]);
        assert!(matches!(
            g.factorize(&p, &Degree::new(vec![2])),
            Err(KGraphError::DegreeOutOfRange(..))
        ));
    }

    /// Exhaustive uniqueness: every path of degree (1,1) splits at every
    /// m <= d into exactly one composable pair, and factorize finds it.
    #[test]
    fn factorization_is_unique() {
        let g = graph("fib2");
        let d = Degree::new(vec![1, 1]);
        let splits = [
            Degree::new(vec![0, 0]),
            Degree::new(vec![1, 0]),
            Degree::new(vec![0, 1]),
            Degree::new(vec![1, 1]),
        ];
        for p in g.enumerate_paths(&d, None) {
            for m in &splits {
                let (mu, nu) = g.factorize(&p, m).unwrap();
                assert_eq!(&mu.degree, m);
                assert_eq!(g.compose(&mu, &nu).unwrap(), p);
                // Brute force: count all factorizations with this degree.
                let mut found = 0;
                for cand_mu in g.enumerate_paths(m, Some(p.range)) {
                    for cand_nu in g.enumerate_paths(&d.sub(m), Some(cand_mu.source)) {
                        if g.compose(&cand_mu, &cand_nu).unwrap() == p {
                            assert_eq!(cand_mu, mu);
                            assert_eq!(cand_nu, nu);
                            found += 1;
                        }
                    }
                }
                assert_eq!(found, 1, "path {p:?} split {m:?}");
            }
        }
    }

    #[test]
    fn compose_is_associative() {
        let g = graph("fib2");
        let edges: Vec<Path> = (0..g.skeleton.num_edges()).map(|e| g.edge_path(e)).collect();
        for a in &edges {
            for b in &edges {
                if a.source != b.range {
                    continue;
                }
                for c in &edges {
                    if b.source != c.range {
                        continue;
                    }
                    let left = g.compose(&g.compose(a, b).unwrap(), c).unwrap();
                    let right = g.compose(a, &g.compose(b, c).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn enumerate_counts_match_hand_counts() {
        // flip23: 2 blue x 3 red; fib2: entry sum of A1 A2 = 8, of A1^2 A2^2 = 34.
        let flip = graph("flip23");
        assert_eq!(flip.enumerate_paths(&Degree::new(vec![1, 1]), None).len(), 6);
        assert_eq!(flip.enumerate_paths(&Degree::new(vec![2, 2]), None).len(), 36);
        let fib = graph("fib2");
        assert_eq!(fib.enumerate_paths(&Degree::new(vec![1, 1]), None).len(), 8);
        assert_eq!(fib.enumerate_paths(&Degree::new(vec![2, 2]), None).len(), 34);
    }

    #[test]
    fn enumerate_degree_zero_is_vertices() {
        let g = graph("twovertex");
        let vs = g.enumerate_paths(&Degree::zero(1), None);
        assert_eq!(vs.len(), 2);
        assert!(vs.iter().all(|p| p.is_vertex()));
    }

    #[test]
    fn enumerated_paths_are_distinct_normal_forms() {
        let g = graph("fib2");
        let paths = g.enumerate_paths(&Degree::new(vec![2, 1]), None);
        let mut seen = std::collections::HashSet::new();
        for p in &paths {
            assert!(seen.insert(p.clone()), "duplicate {p:?}");
            // Normal form: colors ascending.
            let colors: Vec<usize> = p.edges.iter().map(|&e| g.edge(e).color).collect();
            assert!(colors.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lambda_min_examples() {
        let o2 = graph("o2");
        let e = path(&o2, &["e"]);
        let f = path(&o2, &["f"]);
        assert!(o2.lambda_min(&e, &f).is_empty());
        let same = o2.lambda_min(&e, &e);
        assert_eq!(same.len(), 1);
        assert!(same[0].0.is_vertex() && same[0].1.is_vertex());

        let fib = graph("fib2");
        let b1 = path(&fib, &["b1"]);
        let r1 = path(&fib, &["r1"]);
        let ext = fib.lambda_min(&b1, &r1);
        assert_eq!(ext.len(), 1);
        assert_eq!(fib.path_name(&ext[0].0), "r2");
        assert_eq!(fib.path_name(&ext[0].1), "b1");
    }

    #[test]
    fn lambda_min_is_symmetric() {
        let g = graph("fib2");
        let edges: Vec<Path> = (0..g.skeleton.num_edges()).map(|e| g.edge_path(e)).collect();
        for lam in &edges {
            for eta in &edges {
                let fwd = g.lambda_min(lam, eta);
                let bwd = g.lambda_min(eta, lam);
                assert_eq!(fwd.len(), bwd.len());
                for (alpha, beta) in &fwd {
                    assert!(bwd.iter().any(|(b, a)| a == alpha && b == beta));
                    // Both composites agree on the common extension.
                    let left = g.compose(lam, alpha).unwrap();
                    let right = g.compose(eta, beta).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn path_names_round_trip() {
        let g = graph("flip23");
        let p = path(&g, &["b1", "r2"]);
        assert_eq!(g.path_name(&p), "b1.r2");
        let v = g.vertex_path(0);
        assert_eq!(g.path_name(&v), "v");
    }
}

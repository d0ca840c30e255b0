//! Parser for the `.kg` graph file format.
//!
//! Three sections: `[vertices]` (one id per line), `[edges]` (lines
//! `id color source range`), `[squares]` (lines `f g -> g' f'`). The rank is
//! inferred as the maximum color. `#` starts a comment; whitespace is not
//! significant.

use thiserror::Error;

use crate::kgraph::{Edge, FactorizationTable, Skeleton, Square};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Vertices,
    Edges,
    Squares,
}

/// Parse the text of a `.kg` file into a raw (unvalidated) presentation.
pub fn parse_kgraph(text: &str) -> Result<(Skeleton, FactorizationTable), ParseError> {
    let mut section = Section::None;
    let mut vertex_names: Vec<String> = Vec::new();
    let mut edge_names: Vec<String> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut square_specs: Vec<(usize, [String; 4])> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[vertices]" => {
                section = Section::Vertices;
                continue;
            }
            "[edges]" => {
                section = Section::Edges;
                continue;
            }
            "[squares]" => {
                section = Section::Squares;
                continue;
            }
            _ => {}
        }
        if line.starts_with('[') {
            return Err(err(lineno, format!("unknown section {line}")));
        }
        match section {
            Section::None => return Err(err(lineno, "content before any section header")),
            Section::Vertices => {
                let name = line.to_string();
                if vertex_names.contains(&name) {
                    return Err(err(lineno, format!("duplicate vertex id {name}")));
                }
                vertex_names.push(name);
            }
            Section::Edges => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(err(lineno, "expected `id color source range`"));
                }
                let name = parts[0].to_string();
                if edge_names.contains(&name) || vertex_names.contains(&name) {
                    return Err(err(lineno, format!("duplicate id {name}")));
                }
                let color: usize = parts[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad color {}", parts[1])))?;
                if color == 0 {
                    return Err(err(lineno, "colors are 1-based"));
                }
                let source = vertex_names
                    .iter()
                    .position(|v| v == parts[2])
                    .ok_or_else(|| err(lineno, format!("unknown source vertex {}", parts[2])))?;
                let range = vertex_names
                    .iter()
                    .position(|v| v == parts[3])
                    .ok_or_else(|| err(lineno, format!("unknown range vertex {}", parts[3])))?;
                edge_names.push(name);
                edges.push(Edge {
                    color,
                    source,
                    range,
                });
            }
            Section::Squares => {
                let (lhs, rhs) = line
                    .split_once("->")
                    .ok_or_else(|| err(lineno, "expected `f g -> g' f'`"))?;
                let l: Vec<&str> = lhs.split_whitespace().collect();
                let r: Vec<&str> = rhs.split_whitespace().collect();
                if l.len() != 2 || r.len() != 2 {
                    return Err(err(lineno, "expected `f g -> g' f'`"));
                }
                square_specs.push((
                    lineno,
                    [
                        l[0].to_string(),
                        l[1].to_string(),
                        r[0].to_string(),
                        r[1].to_string(),
                    ],
                ));
            }
        }
    }

    if vertex_names.is_empty() {
        return Err(err(0, "no vertices declared"));
    }
    let rank = edges.iter().map(|e| e.color).max().unwrap_or(0);
    if rank == 0 {
        return Err(err(0, "no edges declared"));
    }

    let mut squares = Vec::new();
    for (lineno, [f, g, gs, fs]) in square_specs {
        let lookup = |name: &str| {
            edge_names
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| err(lineno, format!("unknown edge id {name}")))
        };
        squares.push(Square {
            f: lookup(&f)?,
            g: lookup(&g)?,
            g_sorted: lookup(&gs)?,
            f_sorted: lookup(&fs)?,
        });
    }

    Ok((
        Skeleton {
            rank,
            vertex_names,
            edge_names,
            edges,
        },
        FactorizationTable { squares },
    ))
}

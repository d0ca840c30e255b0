//! Machine-readable report assembly and rendering.
//!
//! Every CLI command emits one JSON document with a `schema: 1` field; the
//! same document renders as indented text or as flat `key,value` CSV. Key
//! order is deterministic (serde_json maps are sorted), so identical inputs
//! produce byte-identical output.

use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other}; expected text|json|csv")),
        }
    }
}

/// Wrap command output in the versioned envelope.
pub fn envelope(graph: &str, command: &str, params: Value, pass: bool, data: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), SCHEMA_VERSION.into());
    map.insert("graph".into(), graph.into());
    map.insert("command".into(), command.into());
    map.insert("params".into(), params);
    map.insert("pass".into(), pass.into());
    map.insert("data".into(), data);
    Value::Object(map)
}

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("serializable");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            render_text(value, 0, &mut out);
            out
        }
        Format::Csv => {
            let mut out = String::from("key,value\n");
            render_csv(value, String::new(), &mut out);
            out
        }
    }
}

fn render_text(value: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_text(v, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", scalar(v))),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {}\n", scalar(item))),
                }
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", scalar(value))),
    }
}

fn render_csv(value: &Value, prefix: String, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                render_csv(v, key, out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                render_csv(item, format!("{prefix}[{i}]"), out);
            }
        }
        _ => out.push_str(&format!("{prefix},{}\n", scalar(value))),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

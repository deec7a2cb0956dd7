use serde_json::{json, Map, Value};

use crate::OutputFormat;

/// Wraps a command result with the tool version and the effective numeric
/// settings.
pub fn envelope(command: &str, mode: &str, tolerance: f64, result: Value) -> Value {
    json!({
        "tool": "probgeom",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "numeric_mode": mode,
        "tolerance": tolerance,
        "result": result,
    })
}

pub fn render(report: &Value, format: OutputFormat) -> Vec<u8> {
    let mut out = match format {
        OutputFormat::Json => serde_json::to_string_pretty(report).expect("reports are plain JSON"),
        OutputFormat::Text => {
            let mut lines = Vec::new();
            flatten("", report, &mut lines);
            lines.join("\n")
        }
    };
    out.push('\n');
    out.into_bytes()
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(_) | Value::Object(_) => None,
        other => Some(other.to_string()),
    }
}

fn inline(items: &[Value]) -> Option<String> {
    let parts: Option<Vec<String>> = items.iter().map(scalar).collect();
    parts.map(|p| format!("[{}]", p.join(", ")))
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn flatten(path: &str, v: &Value, lines: &mut Vec<String>) {
    match v {
        Value::Object(map) => flatten_object(path, map, lines),
        Value::Array(items) => {
            if let Some(s) = inline(items) {
                lines.push(format!("{path}: {s}"));
            } else if items.iter().all(|row| row.as_array().and_then(|r| inline(r)).is_some()) {
                lines.push(format!("{path}:"));
                for row in items {
                    let row = row.as_array().and_then(|r| inline(r)).unwrap_or_default();
                    lines.push(format!("  {row}"));
                }
            } else {
                for (i, item) in items.iter().enumerate() {
                    flatten(&format!("{path}[{i}]"), item, lines);
                }
            }
        }
        other => lines.push(format!("{path}: {}", scalar(other).unwrap_or_default())),
    }
}

fn flatten_object(path: &str, map: &Map<String, Value>, lines: &mut Vec<String>) {
    for (key, value) in map {
        flatten(&join(path, key), value, lines);
    }
}

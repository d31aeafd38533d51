//! Report rendering. Every format starts with the resolved configuration.

use std::io::{self, Write};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::Format;

pub enum Body {
    Doc(Value),
    Table {
        columns: Vec<&'static str>,
        rows: Vec<Vec<Value>>,
        summary: Option<Value>,
        /// Render `json` as one object per line instead of a single document.
        lines: bool,
    },
}

pub struct Emitter {
    pub format: Format,
    pub config: Value,
    pub meta: Option<Value>,
}

impl Emitter {
    pub fn new(format: Format, config: Value, no_meta: bool, started: Instant, wall: SystemTime) -> Self {
        let meta = (!no_meta).then(|| {
            json!({
                "version": env!("CARGO_PKG_VERSION"),
                "started_unix": wall.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
                "elapsed_ms": started.elapsed().as_millis() as u64,
            })
        });
        Emitter { format, config, meta }
    }

    pub fn write<W: Write>(&self, body: &Body, w: &mut W) -> io::Result<()> {
        match (self.format, body) {
            (Format::Json, Body::Doc(v)) => {
                let mut m = self.head();
                m.insert("result".into(), v.clone());
                writeln!(w, "{}", pretty(&Value::Object(m)))
            }
            (Format::Json, Body::Table { columns, rows, summary, lines: false }) => {
                let mut m = self.head();
                m.insert("rows".into(), Value::Array(rows.iter().map(|r| record(columns, r)).collect()));
                m.insert("summary".into(), summary.clone().unwrap_or(Value::Null));
                writeln!(w, "{}", pretty(&Value::Object(m)))
            }
            (Format::Json, Body::Table { columns, rows, summary, lines: true }) => {
                writeln!(w, "{}", Value::Object(self.head()))?;
                for r in rows {
                    writeln!(w, "{}", record(columns, r))?;
                }
                if let Some(s) = summary {
                    writeln!(w, "{}", json!({ "summary": s }))?;
                }
                Ok(())
            }
            (Format::Csv, Body::Doc(v)) => {
                self.preamble(w, None)?;
                let mut flat = Vec::new();
                flatten("", v, &mut flat);
                let mut out = csv::Writer::from_writer(w);
                out.write_record(["key", "value"])?;
                for (k, v) in flat {
                    out.write_record([k, v])?;
                }
                out.flush()
            }
            (Format::Csv, Body::Table { columns, rows, summary, .. }) => {
                self.preamble(w, summary.as_ref())?;
                let mut out = csv::Writer::from_writer(w);
                out.write_record(columns)?;
                for r in rows {
                    out.write_record(r.iter().map(cell))?;
                }
                out.flush()
            }
            (Format::Text, Body::Doc(v)) => {
                self.text_head(w)?;
                aligned(w, v)
            }
            (Format::Text, Body::Table { columns, rows, summary, .. }) => {
                self.text_head(w)?;
                let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(cell).collect()).collect();
                let mut width: Vec<usize> = columns.iter().map(|c| c.len()).collect();
                for r in &cells {
                    for (i, c) in r.iter().enumerate() {
                        width[i] = width[i].max(c.len());
                    }
                }
                let line = |w: &mut W, r: &[String]| -> io::Result<()> {
                    let parts: Vec<String> = r.iter().enumerate().map(|(i, c)| format!("{c:>0$}", width[i])).collect();
                    writeln!(w, "{}", parts.join("  ").trim_end())
                };
                line(w, &columns.iter().map(|c| c.to_string()).collect::<Vec<_>>())?;
                for r in &cells {
                    line(w, r)?;
                }
                if let Some(s) = summary {
                    writeln!(w)?;
                    aligned(w, s)?;
                }
                Ok(())
            }
        }
    }

    fn head(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("config".into(), self.config.clone());
        if let Some(meta) = &self.meta {
            m.insert("meta".into(), meta.clone());
        }
        m
    }

    fn preamble<W: Write>(&self, w: &mut W, summary: Option<&Value>) -> io::Result<()> {
        writeln!(w, "# config {}", self.config)?;
        if let Some(meta) = &self.meta {
            writeln!(w, "# meta {meta}")?;
        }
        if let Some(s) = summary {
            writeln!(w, "# summary {s}")?;
        }
        Ok(())
    }

    fn text_head<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let mut flat = Vec::new();
        flatten("config", &self.config, &mut flat);
        if let Some(meta) = &self.meta {
            flatten("meta", meta, &mut flat);
        }
        for (k, v) in flat {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w)
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn record(columns: &[&str], row: &[Value]) -> Value {
    Value::Object(columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect())
}

pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// Dotted keys for nested objects; arrays of scalars stay on one line.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn aligned<W: Write>(w: &mut W, v: &Value) -> io::Result<()> {
    let mut flat = Vec::new();
    flatten("", v, &mut flat);
    let width = flat.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in flat {
        writeln!(w, "{k:<width$}  {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nests_with_dots() {
        let mut out = Vec::new();
        flatten("", &json!({"a": {"b": 1, "c": [1, 2]}, "d": [{"e": true}]}), &mut out);
        assert_eq!(
            out,
            vec![
                ("a.b".to_string(), "1".to_string()),
                ("a.c".to_string(), "1 2".to_string()),
                ("d.0.e".to_string(), "true".to_string()),
            ]
        );
    }
}

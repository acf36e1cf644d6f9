//! JSON and CSV emission. Every document starts with the resolved
//! configuration so a run can be reproduced from its output alone.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

use mle_risk::risklab::{SweepRecord, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A single-result command: config echo plus result fields.
pub fn write_single(out: &mut dyn Write, format: Format, config: &Value, body: Map<String, Value>) -> Result<()> {
    match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("config".into(), config.clone());
            doc.extend(body);
            serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
            let mut cells = vec![("schema_version".to_string(), SCHEMA_VERSION.to_string())];
            flatten("", &Value::Object(body), &mut cells);
            let mut w = csv::Writer::from_writer(out);
            w.write_record(cells.iter().map(|c| c.0.as_str()))?;
            w.write_record(cells.iter().map(|c| c.1.as_str()))?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Sweep output: JSON lines (config line, then one record per line) or CSV.
pub fn write_records(out: &mut dyn Write, format: Format, config: &Value, records: &[SweepRecord]) -> Result<()> {
    match format {
        Format::Json => {
            writeln!(out, "{}", serde_json::to_string(&serde_json::json!({ "config": config }))?)?;
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
        Format::Csv => {
            writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
            // header comes from the record's field names, in declaration order
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn flatten(prefix: &str, v: &Value, cells: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                flatten(&key(k), child, cells);
            }
        }
        Value::Array(items) if items.iter().all(is_labelled) && !items.is_empty() => {
            for item in items {
                let label = item["label"].as_str().unwrap_or_default();
                cells.push((key(label), scalar(&item["value"])));
            }
        }
        other => cells.push((prefix.to_string(), scalar(other))),
    }
}

fn is_labelled(v: &Value) -> bool {
    v.get("label").is_some_and(Value::is_string) && v.get("value").is_some()
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

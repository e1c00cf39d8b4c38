use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Writes every finite float with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // print negative zero as zero
        let value = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Parse(format!("cannot serialize output: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    }
    Ok(text)
}

pub fn open_output(output: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Flattens nested arrays and objects into `path,value` rows.
fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::Number(n) => {
            let text = match (n.as_i64(), n.as_u64(), n.as_f64()) {
                (Some(i), _, _) => i.to_string(),
                (_, Some(u), _) => u.to_string(),
                (_, _, Some(f)) => float(f),
                _ => n.to_string(),
            };
            rows.push((prefix.to_string(), text));
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
    }
}

/// Emits a report: a JSON object with a `metadata` field, or `field,value`
/// CSV rows under a `# metadata` comment line.
pub fn emit_report<T: Serialize>(cfg: &RunConfig, report: &T) -> Result<(), CliError> {
    let value = serde_json::to_value(report)
        .map_err(|e| CliError::Parse(format!("cannot serialize output: {e}")))?;
    let mut out = open_output(cfg.output.as_ref())?;
    match cfg.format {
        Format::Json => {
            let mut map = match value {
                Value::Object(map) => map,
                other => {
                    let mut m = Map::new();
                    m.insert("result".into(), other);
                    m
                }
            };
            map.insert("metadata".into(), cfg.metadata());
            writeln!(out, "{}", to_json_string(&Value::Object(map))?)?;
        }
        Format::Csv => {
            write_metadata_comment(&mut out, cfg)?;
            writeln!(out, "field,value")?;
            let mut rows = Vec::new();
            flatten("", &value, &mut rows);
            for (k, v) in rows {
                writeln!(out, "{k},{v}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_metadata_comment(out: &mut dyn Write, cfg: &RunConfig) -> Result<(), CliError> {
    writeln!(out, "# metadata {}", to_json_string(&cfg.metadata())?)?;
    Ok(())
}

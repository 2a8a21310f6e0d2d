use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::OutputFormat;

/// Fixed decimal formatting: at most four decimals, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64((x * 1e4).round() / 1e4).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// What a command produced, in both tabular and structured form.
pub struct Report {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub outputs: Value,
    pub extrapolated: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(command: &str, header: &[&str]) -> Self {
        Report {
            command: command.into(),
            inputs: Map::new(),
            outputs: Value::Null,
            extrapolated: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn input(mut self, key: &str, v: impl Serialize) -> Self {
        self.inputs
            .insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    pub fn outputs(mut self, v: impl Serialize) -> Self {
        self.outputs = serde_json::to_value(v).unwrap_or(Value::Null);
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn write(&self, format: OutputFormat, out: &mut impl Write) -> io::Result<()> {
        match format {
            OutputFormat::Json => {
                let v = json!({
                    "command": self.command,
                    "inputs": round_json(Value::Object(self.inputs.clone())),
                    "outputs": round_json(self.outputs.clone()),
                    "extrapolated": self.extrapolated,
                    "errors": Vec::<String>::new(),
                });
                serde_json::to_writer_pretty(&mut *out, &v)?;
                writeln!(out)
            }
            OutputFormat::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(&mut *out);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush()
            }
            OutputFormat::Table => {
                let n = self.header.len();
                let mut widths: Vec<usize> =
                    self.header.iter().map(|h| h.chars().count()).collect();
                for r in &self.rows {
                    for (i, c) in r.iter().enumerate().take(n) {
                        widths[i] = widths[i].max(c.chars().count());
                    }
                }
                let line = |cells: &[String]| {
                    cells
                        .iter()
                        .enumerate()
                        .map(|(i, c)| format!("{:<w$}", c, w = widths[i]))
                        .collect::<Vec<_>>()
                        .join("  ")
                        .trim_end()
                        .to_string()
                };
                writeln!(out, "{}", line(&self.header))?;
                writeln!(
                    out,
                    "{}",
                    widths
                        .iter()
                        .map(|w| "-".repeat(*w))
                        .collect::<Vec<_>>()
                        .join("  ")
                )?;
                for r in &self.rows {
                    writeln!(out, "{}", line(r))?;
                }
                Ok(())
            }
        }
    }
}

use serde::Serialize;

use crate::error::{Error, Result};

pub const TABLE_IDS: [&str; 14] = [
    "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9", "T10", "T11", "T12", "T13", "T14",
];

const NOT_AVAILABLE: &str = "N/A";

fn asset(id: &str) -> Option<&'static str> {
    Some(match id {
        "T1" => include_str!("../../assets/reference/T1.csv"),
        "T2" => include_str!("../../assets/reference/T2.csv"),
        "T3" => include_str!("../../assets/reference/T3.csv"),
        "T4" => include_str!("../../assets/reference/T4.csv"),
        "T5" => include_str!("../../assets/reference/T5.csv"),
        "T6" => include_str!("../../assets/reference/T6.csv"),
        "T7" => include_str!("../../assets/reference/T7.csv"),
        "T8" => include_str!("../../assets/reference/T8.csv"),
        "T9" => include_str!("../../assets/reference/T9.csv"),
        "T10" => include_str!("../../assets/reference/T10.csv"),
        "T11" => include_str!("../../assets/reference/T11.csv"),
        "T12" => include_str!("../../assets/reference/T12.csv"),
        "T13" => include_str!("../../assets/reference/T13.csv"),
        "T14" => include_str!("../../assets/reference/T14.csv"),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RefValue {
    /// `decimals` is the number of digits printed after the point.
    Number {
        value: f64,
        decimals: u32,
    },
    Text {
        value: String,
    },
    NotAvailable,
}

impl RefValue {
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s == NOT_AVAILABLE {
            return RefValue::NotAvailable;
        }
        match s.parse::<f64>() {
            Ok(value) if !s.is_empty() && value.is_finite() => RefValue::Number {
                value,
                decimals: s.split_once('.').map_or(0, |(_, f)| f.len() as u32),
            },
            _ => RefValue::Text {
                value: s.to_string(),
            },
        }
    }

    /// Half a unit in the last printed digit.
    pub fn rounding_allowance(&self) -> f64 {
        match self {
            RefValue::Number { decimals, .. } => 0.5 * 10f64.powi(-(*decimals as i32)),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceCell {
    pub row: String,
    pub column: String,
    pub value: RefValue,
    /// Allowed relative error on top of the printed rounding.
    pub tolerance: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceTable {
    pub id: String,
    pub title: String,
    pub cells: Vec<ReferenceCell>,
}

impl ReferenceTable {
    /// Parses a reference CSV: an optional `# title` line, then
    /// `row,column,value,tolerance,source` records.
    pub fn parse(id: &str, text: &str) -> Result<Self> {
        let (title, body, offset) = match text.strip_prefix('#') {
            Some(rest) => {
                let (t, b) = rest.split_once('\n').unwrap_or((rest, ""));
                (t.trim().to_string(), b, 1)
            }
            None => (String::new(), text, 0),
        };
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| Error::parse(offset + 1, 1, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["row", "column", "value", "tolerance", "source"] {
            return Err(Error::parse(
                offset + 1,
                1,
                "expected header row,column,value,tolerance,source",
            ));
        }
        let mut cells: Vec<ReferenceCell> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = offset + i + 2;
            let rec = rec.map_err(|e| Error::parse(line, 1, e.to_string()))?;
            let tolerance: f64 = rec[3]
                .trim()
                .parse()
                .ok()
                .filter(|t: &f64| *t >= 0.0)
                .ok_or_else(|| Error::parse(line, 1, format!("invalid tolerance `{}`", &rec[3])))?;
            let cell = ReferenceCell {
                row: rec[0].to_string(),
                column: rec[1].to_string(),
                value: RefValue::parse(&rec[2]),
                tolerance,
                source: rec[4].to_string(),
            };
            if cells
                .iter()
                .any(|c| c.row == cell.row && c.column == cell.column)
            {
                return Err(Error::parse(
                    line,
                    1,
                    format!("duplicate cell {}/{}", cell.row, cell.column),
                ));
            }
            cells.push(cell);
        }
        Ok(ReferenceTable {
            id: id.to_string(),
            title,
            cells,
        })
    }

    /// Bundled reference table `T1`..`T14`.
    pub fn builtin(id: &str) -> Result<Self> {
        let id = id.to_ascii_uppercase();
        let text = asset(&id).ok_or_else(|| {
            Error::Precondition(format!("unknown table `{id}`, expected T1..T14"))
        })?;
        Self::parse(&id, text)
    }
}

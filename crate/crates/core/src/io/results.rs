use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::games::SolutionBundle;

/// Column order of every summary table.
pub const SUMMARY_COLUMNS: [&str; 11] = [
    "case",
    "sweep_param",
    "sweep_value",
    "p_grid",
    "p_el_fa",
    "p_el_nfa85",
    "p_el_nfa",
    "ely_profit",
    "no_profit",
    "gap",
    "runtime_s",
];

/// Flat record of one solve. Missing numbers (no point, no sweep) are empty
/// cells in CSV and `null` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub case: String,
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub p_grid: Option<f64>,
    pub p_el_fa: Option<f64>,
    pub p_el_nfa85: Option<f64>,
    pub p_el_nfa: Option<f64>,
    pub ely_profit: Option<f64>,
    pub no_profit: Option<f64>,
    pub gap: Option<f64>,
    pub runtime_s: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl SummaryRow {
    pub fn from_bundle(b: &SolutionBundle, sweep: Option<(&str, f64)>) -> Self {
        let v = b.values.as_ref();
        SummaryRow {
            case: b.case.label().to_string(),
            sweep_param: sweep.map(|(p, _)| p.to_string()),
            sweep_value: sweep.map(|(_, x)| x),
            p_grid: v.map(|v| v.p_grid),
            p_el_fa: v.map(|v| v.p_el[0]),
            p_el_nfa85: v.map(|v| v.p_el[1]),
            p_el_nfa: v.map(|v| v.p_el[2]),
            ely_profit: v.and_then(|_| finite(b.ely_profit)),
            no_profit: v.and_then(|_| finite(b.no_profit)),
            gap: finite(b.gap),
            runtime_s: b.runtime_s,
        }
    }

    /// Numeric field by column name.
    pub fn field(&self, name: &str) -> Option<Option<f64>> {
        Some(match name {
            "sweep_value" => self.sweep_value,
            "p_grid" => self.p_grid,
            "p_el_fa" => self.p_el_fa,
            "p_el_nfa85" => self.p_el_nfa85,
            "p_el_nfa" => self.p_el_nfa,
            "ely_profit" => self.ely_profit,
            "no_profit" => self.no_profit,
            "gap" => self.gap,
            "runtime_s" => Some(self.runtime_s),
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(IoError::Parse(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

/// Writes summary rows with the fixed column order.
pub fn write_results(rows: &[SummaryRow], path: &Path, format: Format) -> Result<(), IoError> {
    if rows.is_empty() {
        return Err(IoError::EmptyResults);
    }
    let file = File::create(path).map_err(|e| IoError::file(path, e))?;
    write_rows(rows, BufWriter::new(file), format)
}

/// Same as [`write_results`] for any writer.
pub fn write_rows<W: Write>(rows: &[SummaryRow], out: W, format: Format) -> Result<(), IoError> {
    if rows.is_empty() {
        return Err(IoError::EmptyResults);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| IoError::Parse(e.to_string()))?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out).map_err(|e| IoError::Parse(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn read_results(path: &Path, format: Format) -> Result<Vec<SummaryRow>, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(file);
            r.deserialize().map(|row| row.map_err(IoError::from)).collect()
        }
        Format::Json => Ok(serde_json::from_reader(file)?),
    }
}

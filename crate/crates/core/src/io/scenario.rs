use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::IoError;
use crate::model::{validate_scenario, ScenarioData};

/// Required header of a series file, in order.
pub const SERIES_COLUMNS: [&str; 4] = ["hour", "residual_capacity_mw", "price_eur_mwh", "h2_demand_kg"];

/// One hour of a series file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub hour: usize,
    pub residual_capacity_mw: f64,
    pub price_eur_mwh: f64,
    pub h2_demand_kg: f64,
}

/// Reads a series file, checking the header and that hours run 0, 1, 2, ...
pub fn read_series<R: Read>(input: R) -> Result<Vec<SeriesRow>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    for col in SERIES_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(IoError::MissingColumn(col.to_string()));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<SeriesRow>().enumerate() {
        let row = rec?;
        if row.hour != i {
            return Err(IoError::NonConsecutiveHours { row: i, expected: i, found: row.hour });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_series<W: Write>(rows: &[SeriesRow], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| IoError::Parse(e.to_string()))
}

fn object<'a>(root: &'a mut Map<String, Value>, key: &str) -> &'a mut Map<String, Value> {
    let slot = root.entry(key.to_string()).or_insert_with(|| json!({}));
    if !slot.is_object() {
        *slot = json!({});
    }
    slot.as_object_mut().expect("just made an object")
}

/// Parses a scenario document. Hourly series come from `series` when given,
/// else from a `series_csv` entry resolved against `base_dir`, else from the
/// document itself. `horizon` may be omitted when series are present.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>, series: Option<Vec<SeriesRow>>) -> Result<ScenarioData, IoError> {
    let mut doc: Value = serde_json::from_str(text)?;
    let root = doc
        .as_object_mut()
        .ok_or_else(|| IoError::Parse("scenario document must be an object".into()))?;
    let linked = root.remove("series_csv");
    let series = match (series, linked) {
        (Some(s), _) => Some(s),
        (None, Some(Value::String(p))) => {
            let path = base_dir.map_or_else(|| Path::new(&p).to_path_buf(), |d| d.join(&p));
            let f = File::open(&path).map_err(|e| IoError::file(&path, e))?;
            Some(read_series(f)?)
        }
        (None, Some(other)) => return Err(IoError::Parse(format!("series_csv must be a path, got {other}"))),
        (None, None) => None,
    };
    if let Some(rows) = series {
        object(root, "horizon").insert("hours".into(), json!(rows.len()));
        object(root, "prices").insert("electricity".into(), json!(rows.iter().map(|r| r.price_eur_mwh).collect::<Vec<_>>()));
        let net = object(root, "network");
        net.insert("residual_capacity".into(), json!(rows.iter().map(|r| r.residual_capacity_mw).collect::<Vec<_>>()));
        net.insert("h2_offtake".into(), json!(rows.iter().map(|r| r.h2_demand_kg).collect::<Vec<_>>()));
    } else if !root.contains_key("horizon") {
        let n = root
            .get("network")
            .and_then(|n| n.get("residual_capacity"))
            .and_then(Value::as_array)
            .map(Vec::len);
        if let Some(n) = n {
            object(root, "horizon").insert("hours".into(), json!(n));
        }
    }
    let raw: ScenarioData = serde_json::from_value(doc)?;
    Ok(validate_scenario(raw)?)
}

/// Loads and validates a scenario document, optionally with a series file
/// that overrides any series the document carries.
pub fn load_scenario(param_doc: &Path, series_path: Option<&Path>) -> Result<ScenarioData, IoError> {
    let text = std::fs::read_to_string(param_doc).map_err(|e| IoError::file(param_doc, e))?;
    let series = match series_path {
        Some(p) => Some(read_series(File::open(p).map_err(|e| IoError::file(p, e))?)?),
        None => None,
    };
    parse_scenario(&text, param_doc.parent(), series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hours_must_be_consecutive() {
        let text = "hour,residual_capacity_mw,price_eur_mwh,h2_demand_kg\n0,1,2,3\n2,1,2,3\n";
        assert!(matches!(
            read_series(text.as_bytes()),
            Err(IoError::NonConsecutiveHours { row: 1, expected: 1, found: 2 })
        ));
    }

    #[test]
    fn duplicate_hours_are_rejected() {
        let text = "hour,residual_capacity_mw,price_eur_mwh,h2_demand_kg\n0,1,2,3\n0,1,2,3\n";
        assert!(read_series(text.as_bytes()).is_err());
    }

    #[test]
    fn column_order_does_not_matter() {
        let text = "price_eur_mwh,hour,h2_demand_kg,residual_capacity_mw\n5,0,7,9\n";
        let rows = read_series(text.as_bytes()).unwrap();
        assert_eq!(rows[0], SeriesRow { hour: 0, residual_capacity_mw: 9.0, price_eur_mwh: 5.0, h2_demand_kg: 7.0 });
    }

    #[test]
    fn non_object_document_is_a_parse_error() {
        assert!(matches!(parse_scenario("[1]", None, None), Err(IoError::Parse(_))));
    }
}

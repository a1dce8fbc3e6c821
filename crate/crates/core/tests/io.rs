use std::fs;

use gridpact::io::{
    generate_synthetic, load_scenario, parse_scenario, read_results, read_series, write_results, write_rows,
    write_series, Format, IoError, SeriesRow, SummaryRow, SyntheticSpec, SUMMARY_COLUMNS, TOY_SCENARIO_JSON,
};
use gridpact::model::HOURS_PER_YEAR;
use proptest::prelude::*;

fn day() -> Vec<SeriesRow> {
    (0..24)
        .map(|t| SeriesRow {
            hour: t,
            residual_capacity_mw: if (16..20).contains(&t) { 44.1 } else { 63.0 },
            price_eur_mwh: 40.0 + t as f64,
            h2_demand_kg: 1800.0,
        })
        .collect()
}

fn row(case: &str, p_grid: Option<f64>) -> SummaryRow {
    SummaryRow {
        case: case.into(),
        sweep_param: None,
        sweep_value: None,
        p_grid,
        p_el_fa: Some(0.0),
        p_el_nfa85: Some(4.2),
        p_el_nfa: Some(58.8),
        ely_profit: Some(1.5),
        no_profit: Some(-2.0),
        gap: Some(0.0),
        runtime_s: 0.25,
    }
}

#[test]
fn day_long_series_loads_with_reference_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("day.csv");
    write_series(&day(), fs::File::create(&series).unwrap()).unwrap();
    let doc = dir.path().join("scenario.json");
    fs::write(&doc, TOY_SCENARIO_JSON).unwrap();

    let sc = load_scenario(&doc, Some(&series)).unwrap();
    assert_eq!(sc.hours(), 24);
    assert_eq!(sc.network.residual_capacity[17], 44.1);
    assert_eq!(sc.prices.electricity[23], 63.0);
    assert!((sc.tech.c_el() - 123_256.67).abs() < 0.01);
    assert!((sc.annual_scale() - 24.0 / HOURS_PER_YEAR).abs() < 1e-15);
}

#[test]
fn linked_series_resolves_next_to_the_document() {
    let dir = tempfile::tempdir().unwrap();
    write_series(&day(), fs::File::create(dir.path().join("s.csv")).unwrap()).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(TOY_SCENARIO_JSON).unwrap();
    let root = doc.as_object_mut().unwrap();
    root.remove("horizon");
    root.insert("series_csv".into(), "s.csv".into());
    let path = dir.path().join("linked.json");
    fs::write(&path, doc.to_string()).unwrap();
    assert_eq!(load_scenario(&path, None).unwrap().hours(), 24);
}

#[test]
fn missing_price_column_is_named() {
    let text = "hour,residual_capacity_mw,h2_demand_kg\n0,1,2\n";
    match read_series(text.as_bytes()) {
        Err(IoError::MissingColumn(c)) => assert_eq!(c, "price_eur_mwh"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn inconsistent_lengths_fail_validation() {
    let text = TOY_SCENARIO_JSON.replace("[30.0, 10.0, 50.0]", "[30.0, 10.0]");
    assert!(matches!(parse_scenario(&text, None, None), Err(IoError::Invalid(_))));
}

#[test]
fn synthetic_year_shape() {
    let sc = generate_synthetic(&SyntheticSpec::default()).unwrap();
    assert_eq!(sc.hours(), 8760);
    assert_eq!(sc.network.max_residual(), 63.0);
    assert!(sc.network.h2_offtake.iter().all(|&d| d == 1800.0));
    let congested = sc.network.residual_capacity.iter().filter(|&&r| r < 63.0).count();
    assert_eq!(congested, 365 * 4);

    let flat = generate_synthetic(&SyntheticSpec { congestion_depth: 0.0, hours: 48, ..Default::default() }).unwrap();
    assert!(flat.network.residual_capacity.iter().all(|&r| r == 63.0));
}

#[test]
fn summary_csv_has_header_and_one_line_per_row() {
    let mut buf = Vec::new();
    write_rows(&[row("game1", Some(63.0))], &mut buf, Format::Csv).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], SUMMARY_COLUMNS.join(","));
    // Missing sweep fields stay empty.
    assert!(lines[1].starts_with("game1,,,63"), "{}", lines[1]);
}

#[test]
fn summary_json_uses_column_names() {
    let mut buf = Vec::new();
    write_rows(&[row("game2", None)], &mut buf, Format::Json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    let obj = v[0].as_object().unwrap();
    for col in SUMMARY_COLUMNS {
        assert!(obj.contains_key(col), "{col}");
    }
    assert!(obj["p_grid"].is_null());
}

#[test]
fn nothing_to_write_is_an_error() {
    assert!(matches!(write_rows(&[], Vec::new(), Format::Csv), Err(IoError::EmptyResults)));
}

#[test]
fn results_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![row("game1", Some(63.0)), row("no-hpr", None)];
    for (name, format) in [("r.csv", Format::Csv), ("r.json", Format::Json)] {
        let path = dir.path().join(name);
        write_results(&rows, &path, format).unwrap();
        assert_eq!(read_results(&path, format).unwrap(), rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_scenarios_are_deterministic_and_bounded(
        seed in any::<u64>(),
        hours in 1usize..200,
        depth in 0.0f64..=1.0,
        peak in 1.0f64..100.0,
    ) {
        let spec = SyntheticSpec { seed, hours, congestion_depth: depth, peak_mw: peak, ..Default::default() };
        let a = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(&a, &generate_synthetic(&spec).unwrap());
        for &r in &a.network.residual_capacity {
            prop_assert!(r <= peak && r >= peak * (1.0 - depth) - 1e-12);
        }
        for &p in &a.prices.electricity {
            prop_assert!((40.0..=80.0).contains(&p));
        }
    }

    #[test]
    fn series_round_trip(values in prop::collection::vec((0.0f64..100.0, -50.0f64..300.0, 0.0f64..5000.0), 1..40)) {
        let rows: Vec<SeriesRow> = values
            .iter()
            .enumerate()
            .map(|(hour, &(r, p, d))| SeriesRow { hour, residual_capacity_mw: r, price_eur_mwh: p, h2_demand_kg: d })
            .collect();
        let mut buf = Vec::new();
        write_series(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_series(buf.as_slice()).unwrap(), rows);
    }
}

use std::f64::consts::PI;

use gzk_core::index::index_quantity;
use gzk_core::instability::{verdict, VerdictSettings};
use gzk_core::io::*;
use gzk_core::spectral::Linearization;
use gzk_core::wave::{alpha, solve_wave, Branch};
use gzk_core::Error;
use proptest::prelude::*;
use serde_json::{json, Value};

#[test]
fn wave_round_trips_bit_for_bit() {
    for (p, period, branch) in [(1.0, 7.0, Branch::Positive), (2.0, 2.0 * PI, Branch::SignChanging)] {
        let wave = solve_wave(p, 1.0, period, branch).unwrap();
        let text = to_pretty(&wave_to_json(&wave));
        let back = wave_from_json::<f64>(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, wave);
        // writing again gives the same bytes
        assert_eq!(to_pretty(&wave_to_json(&back)), text);
    }
}

#[test]
fn reloaded_wave_reproduces_the_verdict() {
    let wave = solve_wave(1.0, 1.0, 2.0 * alpha(1.0, 1.0), Branch::Positive).unwrap();
    let back = wave_from_json::<f64>(&serde_json::from_str(&to_pretty(&wave_to_json(&wave))).unwrap()).unwrap();
    let settings = VerdictSettings::default();
    let a = verdict(&wave, wave.len(), &settings).unwrap();
    let b = verdict(&back, back.len(), &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        to_pretty(&verdict_to_json(&a, &wave.params, wave.len())),
        to_pretty(&verdict_to_json(&b, &back.params, back.len()))
    );
}

#[test]
fn every_document_is_versioned() {
    let wave = solve_wave(1.0, 1.0, 7.0, Branch::Positive).unwrap();
    let lin = Linearization::new(&wave, wave.len()).unwrap();
    let index = index_quantity(&lin).unwrap();
    let v = verdict(&wave, wave.len(), &VerdictSettings::default()).unwrap();
    for (doc, kind) in [
        (wave_to_json(&wave), "wave"),
        (index_to_json(&index, &wave.params, wave.len()), "index"),
        (growth_to_json(&v.growth), "growth_curve"),
        (verdict_to_json(&v, &wave.params, wave.len()), "verdict"),
    ] {
        assert_eq!(doc["schema_version"], json!(SCHEMA_VERSION));
        assert_eq!(doc["kind"], json!(kind));
    }
}

#[test]
fn schema_mismatches_are_rejected() {
    let wave = solve_wave(1.0, 1.0, 7.0, Branch::Positive).unwrap();
    let mut doc = wave_to_json(&wave);
    doc["schema_version"] = json!(SCHEMA_VERSION + 1);
    assert!(matches!(wave_from_json::<f64>(&doc), Err(Error::Schema(_))));
    let mut doc = wave_to_json(&wave);
    doc["kind"] = json!("verdict");
    assert!(matches!(wave_from_json::<f64>(&doc), Err(Error::Schema(_))));
    let mut doc = wave_to_json(&wave);
    doc.as_object_mut().unwrap().remove("grid");
    assert!(matches!(wave_from_json::<f64>(&doc), Err(Error::Schema(_))));
}

#[test]
fn growth_csv_has_ten_digit_floats() {
    let wave = solve_wave(2.0, 1.0, 2.0 * alpha(2.0, 1.0), Branch::Positive).unwrap();
    let v = verdict(&wave, wave.len(), &VerdictSettings::default()).unwrap();
    let mut out = Vec::new();
    write_growth_csv(&mut out, &v.growth).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,max_re_lambda,im_at_max"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), v.growth.k_samples.len());
    for cell in rows[1].split(',') {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 10, "{cell}");
    }
}

#[test]
fn non_finite_floats_become_null() {
    assert_eq!(num(f64::NAN), Value::Null);
    assert_eq!(num(f64::INFINITY), Value::Null);
}

proptest! {
    #[test]
    fn json_floats_reload_exactly(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let text = serde_json::to_string(&num(x)).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.as_f64().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn csv_floats_carry_ten_digits(x in -1e12f64..1e12) {
        let s = csv_num(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-10 * x.abs());
    }
}

//! JSON and CSV formats. Every JSON document carries `schema_version`.
//!
//! JSON floats are written with 17 significant digits, enough to reload an
//! `f64` bit for bit; CSV floats with 10. Non-finite values become `null`.

use std::io::Write;
use std::str::FromStr;

use num_complex::Complex;
use serde_json::{json, Map, Number, Value};

use crate::error::{Error, Result};
use crate::index::{IndexReport, ThresholdScan};
use crate::instability::{Evolution, GrowthCurve, InstabilityVerdict};
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::SpectrumReport;
use crate::wave::{Branch, PeriodicWave, WaveParams};

pub const SCHEMA_VERSION: u64 = 1;

/// A float as a JSON number with 17 significant digits.
pub fn num<T: Real>(x: T) -> Value {
    let x = to_f64(x);
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is valid JSON"))
}

fn nums<T: Real>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn complex<T: Real>(z: Complex<T>) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

/// A float for CSV output, 10 significant digits.
pub fn csv_num<T: Real>(x: T) -> String {
    format!("{:.9e}", to_f64(x))
}

fn versioned(kind: &str, body: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("kind".into(), json!(kind));
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Value::Object(map)
}

pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn params_json<T: Real>(p: &WaveParams<T>) -> Value {
    json!({
        "p": num(p.p),
        "c": num(p.c),
        "L": num(p.period),
        "branch": p.branch.as_str(),
        "B": num(p.energy),
    })
}

pub fn wave_to_json<T: Real>(wave: &PeriodicWave<T>) -> Value {
    let re: Vec<T> = wave.fourier.iter().map(|z| z.re).collect();
    let im: Vec<T> = wave.fourier.iter().map(|z| z.im).collect();
    let brackets: Vec<Value> = wave.brackets.iter().map(|&(a, b)| json!([num(a), num(b)])).collect();
    versioned(
        "wave",
        json!({
            "params": params_json(&wave.params),
            "N": wave.len(),
            "grid": nums(&wave.grid),
            "fourier": { "re": nums(&re), "im": nums(&im) },
            "residual": num(wave.residual),
            "extrema": [num(wave.extrema.0), num(wave.extrema.1)],
            "brackets": brackets,
        }),
    )
}

fn check_schema(v: &Value, kind: &str) -> Result<()> {
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(Error::Schema(format!("schema_version {other} is not supported"))),
        None => return Err(Error::Schema("missing schema_version".into())),
    }
    match v.get("kind").and_then(Value::as_str) {
        Some(k) if k == kind => Ok(()),
        other => Err(Error::Schema(format!("expected a {kind} document, found {other:?}"))),
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Schema(format!("missing field {key}")))
}

fn real<T: Real>(v: &Value, key: &str) -> Result<T> {
    field(v, key)?.as_f64().map(lit::<T>).ok_or_else(|| Error::Schema(format!("field {key} is not a number")))
}

fn reals<T: Real>(v: &Value, key: &str) -> Result<Vec<T>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| Error::Schema(format!("field {key} is not an array")))?
        .iter()
        .map(|x| x.as_f64().map(lit::<T>).ok_or_else(|| Error::Schema(format!("non-numeric entry in {key}"))))
        .collect()
}

/// Reloads a wave exactly as written, without recomputing anything.
pub fn wave_from_json<T: Real>(v: &Value) -> Result<PeriodicWave<T>> {
    check_schema(v, "wave")?;
    let p = field(v, "params")?;
    let branch: Branch =
        field(p, "branch")?.as_str().ok_or_else(|| Error::Schema("branch is not a string".into()))?.parse()?;
    let params = WaveParams::new(real(p, "p")?, real(p, "c")?, real(p, "L")?, branch, real(p, "B")?)?;
    let grid: Vec<T> = reals(v, "grid")?;
    let f = field(v, "fourier")?;
    let re: Vec<T> = reals(f, "re")?;
    let im: Vec<T> = reals(f, "im")?;
    if re.len() != grid.len() || im.len() != grid.len() {
        return Err(Error::Schema("grid and fourier arrays differ in length".into()));
    }
    let ext: Vec<T> = reals(v, "extrema")?;
    if ext.len() != 2 {
        return Err(Error::Schema("extrema must have two entries".into()));
    }
    let brackets = field(v, "brackets")?
        .as_array()
        .ok_or_else(|| Error::Schema("brackets is not an array".into()))?
        .iter()
        .map(|pair| {
            let a = pair.get(0).and_then(Value::as_f64);
            let b = pair.get(1).and_then(Value::as_f64);
            match (a, b) {
                (Some(a), Some(b)) => Ok((lit::<T>(a), lit::<T>(b))),
                _ => Err(Error::Schema("malformed bracket".into())),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PeriodicWave {
        params,
        grid,
        fourier: re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect(),
        residual: real(v, "residual")?,
        extrema: (ext[0], ext[1]),
        brackets,
    })
}

pub fn read_wave<T: Real>(path: &std::path::Path) -> Result<PeriodicWave<T>> {
    let text = std::fs::read_to_string(path)?;
    wave_from_json(&serde_json::from_str(&text)?)
}

pub fn spectrum_to_json<T: Real>(report: &SpectrumReport<T>) -> Value {
    let eig: Vec<Value> = report.eigenvalues.iter().map(|&z| complex(z)).collect();
    versioned(
        "spectrum",
        json!({
            "origin": report.origin.as_str(),
            "k": num(report.k),
            "N": report.n,
            "dim": report.dim(),
            "eigenvalues": eig,
            "neg_count": report.neg_count,
            "kernel_dim": report.kernel_dim,
            "zero_tol": num(report.zero_tol),
            "max_re": num(report.max_re()),
        }),
    )
}

fn index_body<T: Real>(r: &IndexReport<T>) -> Value {
    json!({
        "q": num(r.q),
        "n0": r.n0,
        "z0": r.z0,
        "nL": r.n_l,
        "nR0_formula": r.n_r0_formula,
        "nR0_direct": r.n_r0_direct,
        "consistent": r.consistent,
        "zero_band": num(r.zero_band),
    })
}

pub fn index_to_json<T: Real>(r: &IndexReport<T>, params: &WaveParams<T>, n: usize) -> Value {
    let mut body = index_body(r);
    body["params"] = params_json(params);
    body["N"] = json!(n);
    versioned("index", body)
}

fn growth_body<T: Real>(g: &GrowthCurve<T>) -> Value {
    json!({
        "k0": num(g.k0),
        "k_samples": nums(&g.k_samples),
        "max_re_lambda": nums(&g.max_re_lambda),
        "im_at_max": nums(&g.im_at_max),
        "lambda_at_max": complex(g.lambda_at_max),
        "k_at_max": num(g.k_at_max),
    })
}

pub fn growth_to_json<T: Real>(g: &GrowthCurve<T>) -> Value {
    versioned("growth_curve", growth_body(g))
}

pub fn verdict_to_json<T: Real>(v: &InstabilityVerdict<T>, params: &WaveParams<T>, n: usize) -> Value {
    versioned(
        "verdict",
        json!({
            "params": params_json(params),
            "N": n,
            "verdict": v.verdict.as_str(),
            "criterion": v.criterion.as_str(),
            "k0": num(v.k0),
            "nR0": v.n_r0,
            "threshold": num(v.threshold),
            "spectral_scale": num(v.spectral_scale),
            "dmass_dc": v.dmass_dc.map(num).unwrap_or(Value::Null),
            "index": index_body(&v.index),
            "growth": growth_body(&v.growth),
        }),
    )
}

pub fn evolution_to_json<T: Real>(e: &Evolution<T>, k: T, expected: Option<Complex<T>>, stride: usize) -> Value {
    let stride = stride.max(1);
    let t: Vec<T> = e.times.iter().step_by(stride).copied().collect();
    let y: Vec<T> = e.log_norms.iter().step_by(stride).copied().collect();
    versioned(
        "evolution",
        json!({
            "k": num(k),
            "rate": num(e.rate),
            "expected": expected.map(complex).unwrap_or(Value::Null),
            "dt": num(e.dt),
            "steps": e.steps,
            "horizon": num(e.horizon),
            "times": nums(&t),
            "log_norms": nums(&y),
        }),
    )
}

/// `k, max_re_lambda, im_at_max` rows.
pub fn write_growth_csv<T: Real, W: Write>(out: W, g: &GrowthCurve<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "max_re_lambda", "im_at_max"])?;
    for i in 0..g.k_samples.len() {
        w.write_record([csv_num(g.k_samples[i]), csv_num(g.max_re_lambda[i]), csv_num(g.im_at_max[i])])?;
    }
    w.flush()?;
    Ok(())
}

/// `c, q, nR0` rows.
pub fn write_scan_csv<T: Real, W: Write>(out: W, scan: &ThresholdScan<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["c", "q", "nR0"])?;
    for row in &scan.rows {
        w.write_record([csv_num(row.c), csv_num(row.q), row.n_r0.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn scan_to_json<T: Real>(scan: &ThresholdScan<T>) -> Value {
    versioned(
        "threshold_scan",
        json!({
            "p": num(scan.p),
            "L": num(scan.period),
            "c_star": num(scan.c_star),
            "reference": scan.reference.map(num).unwrap_or(Value::Null),
            "relative_error": scan.relative_error().map(num).unwrap_or(Value::Null),
            "rows": scan.rows.iter().map(|r| json!({"c": num(r.c), "q": num(r.q), "nR0": r.n_r0})).collect::<Vec<_>>(),
        }),
    )
}

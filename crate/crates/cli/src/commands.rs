use std::path::Path;

use gzk_core::instability::{
    default_horizon, evolve_linearized, growing_mode, transverse_spectrum, verdict, InstabilityVerdict,
};
use gzk_core::io::{self, csv_num, to_pretty};
use gzk_core::spectral::{spectrum, Linearization, SpectrumReport};
use gzk_core::wave::{classify_phase_plane, potential, Branch, PeriodicWave};
use gzk_core::{index_quantity, Error};
use rayon::prelude::*;

use crate::config::{Format, Init, Operator, RunConfig};
use crate::error::CliError;
use crate::svg::{Figure, Series};

type Result<T> = std::result::Result<T, CliError>;

fn write(cfg: &RunConfig, name: &str, contents: &str) -> Result<()> {
    let wrap = |path: &Path, source| CliError::Write { path: path.display().to_string(), source };
    std::fs::create_dir_all(&cfg.out).map_err(|e| wrap(&cfg.out, e))?;
    let path = cfg.out.join(name);
    std::fs::write(&path, contents).map_err(|e| wrap(&path, e))
}

fn write_json(cfg: &RunConfig, name: &str, doc: &serde_json::Value) -> Result<()> {
    if cfg.wants(Format::Json) {
        write(cfg, name, &to_pretty(doc))?;
    }
    Ok(())
}

fn write_svg(cfg: &RunConfig, name: &str, fig: &Figure) -> Result<()> {
    if cfg.wants(Format::Svg) {
        write(cfg, name, &fig.render())?;
    }
    Ok(())
}

fn write_csv(cfg: &RunConfig, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> gzk_core::Result<()>) -> Result<()> {
    if cfg.wants(Format::Csv) {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        write(cfg, name, &String::from_utf8(buf).expect("CSV output is UTF-8"))?;
    }
    Ok(())
}

/// The wave from `wave_file`, or solved from the configured parameters.
fn load_wave(cfg: &RunConfig) -> Result<PeriodicWave<f64>> {
    Ok(match &cfg.wave_file {
        Some(path) => io::read_wave(path)?,
        None => cfg.solver().solve(cfg.p, cfg.c, cfg.period, cfg.branch)?,
    })
}

fn linearize(wave: &PeriodicWave<f64>) -> Result<Linearization<f64>> {
    Ok(Linearization::new(wave, wave.len())?)
}

/// `sqrt(-min eig QL)`, the edge of the unstable band, or 0 when QL >= 0.
fn cutoff(lin: &Linearization<f64>) -> Result<f64> {
    let ql = spectrum(&lin.assemble_ql(), None)?;
    Ok(if ql.min_re() < -ql.zero_tol { (-ql.min_re()).sqrt() } else { 0.0 })
}

fn profile_figure(wave: &PeriodicWave<f64>) -> Figure {
    let pr = wave.params;
    let mut fig =
        Figure::new(format!("profile, p = {}, c = {}, L = {}, {}", pr.p, pr.c, pr.period, pr.branch), "x", "phi(x)");
    let mut pts: Vec<(f64, f64)> = wave.nodes().into_iter().zip(wave.grid.iter().copied()).collect();
    pts.push((pr.period, wave.grid[0]));
    fig.series.push(Series::line("phi", pts));
    fig
}

/// Orbit `(phi, phi')` over level sets of `xi^2/2 + V(phi)`.
fn phase_figure(wave: &PeriodicWave<f64>) -> Result<Figure> {
    let pr = wave.params;
    let (p, c) = (pr.p, pr.c);
    let portrait = classify_phase_plane(p, c)?;
    let mut fig = Figure::new(format!("phase portrait, B = {:.6}", pr.energy), "phi", "phi'");
    let (lo, hi) = wave.extrema;
    let pad = 0.25 * (hi - lo).max(1e-3);
    let (x0, x1) = (lo - pad, hi + pad);
    let floor = portrait.energy_floor;
    let top = pr.energy + (pr.energy - floor).abs().max(1e-3);
    let samples = 400;
    let mut levels: Vec<f64> = (1..=8).map(|i| floor + (top - floor) * i as f64 / 8.0).collect();
    levels.push(portrait.separatrix_energy);
    for e in levels {
        for sign in [1.0, -1.0] {
            let pts: Vec<(f64, f64)> = (0..=samples)
                .map(|i| {
                    let x = x0 + (x1 - x0) * i as f64 / samples as f64;
                    let r = 2.0 * (e - potential(p, c, x));
                    (x, if r >= 0.0 { sign * r.sqrt() } else { f64::NAN })
                })
                .collect();
            fig.series.push(Series::guide(pts));
        }
    }
    let mut orbit: Vec<(f64, f64)> = wave.grid.iter().copied().zip(wave.derivative()).collect();
    orbit.push(orbit[0]);
    fig.series.push(Series::line("computed orbit", orbit));
    let centers: Vec<(f64, f64)> = portrait.equilibria.iter().map(|q| (q.phi, 0.0)).collect();
    fig.series.push(Series::dots("equilibria", centers));
    Ok(fig)
}

/// Complex-plane scatter, zoomed to the 24 eigenvalues nearest the origin.
fn spectrum_figure(reports: &[(String, SpectrumReport<f64>)]) -> Figure {
    let mut radii: Vec<f64> = reports.iter().flat_map(|(_, r)| r.eigenvalues.iter().map(|z| z.norm())).collect();
    radii.sort_by(f64::total_cmp);
    let radius = radii.get(23).or(radii.last()).copied().unwrap_or(1.0).max(1e-12);
    let mut fig = Figure::new(format!("spectrum, |lambda| <= {radius:.4}"), "Re lambda", "Im lambda");
    for (name, r) in reports {
        let pts = r.eigenvalues.iter().filter(|z| z.norm() <= radius).map(|z| (z.re, z.im)).collect();
        fig.series.push(Series::dots(name.clone(), pts));
    }
    fig
}

fn growth_figure(v: &InstabilityVerdict<f64>) -> Figure {
    let g = &v.growth;
    let mut fig = Figure::new(format!("growth, verdict {}", v.verdict.as_str()), "k", "max Re lambda");
    let pts = g.k_samples.iter().copied().zip(g.max_re_lambda.iter().copied()).collect();
    fig.series.push(Series::line("max Re lambda", pts));
    if v.k0 > 0.0 {
        fig.vlines.push((v.k0, "k0".into()));
    }
    fig
}

pub fn wave(cfg: &RunConfig) -> Result<()> {
    let wave = load_wave(cfg)?;
    write_json(cfg, "wave.json", &io::wave_to_json(&wave))?;
    write_svg(cfg, "profile.svg", &profile_figure(&wave))?;
    write_svg(cfg, "phase.svg", &phase_figure(&wave)?)?;
    println!(
        "wave: B = {:.12e}, residual = {:.3e}, N = {}, extrema = [{:.9}, {:.9}]",
        wave.params.energy,
        wave.residual,
        wave.len(),
        wave.extrema.0,
        wave.extrema.1
    );
    Ok(())
}

const K_TAGS: [(&str, f64); 3] = [("k_zero", 0.0), ("k_half", 0.5), ("k_cutoff", 1.0)];

pub fn spectrum_cmd(cfg: &RunConfig) -> Result<()> {
    let wave = load_wave(cfg)?;
    let lin = linearize(&wave)?;
    let op = cfg.operator;
    let ks: Vec<(String, f64)> = match (op.transverse(), cfg.k) {
        (false, _) => vec![(String::new(), 0.0)],
        (true, Some(k)) => vec![(format!("k = {k}"), k)],
        (true, None) => {
            let k0 = cutoff(&lin)?;
            K_TAGS.iter().map(|&(tag, t)| (tag.to_string(), t * k0)).collect()
        }
    };
    let mut reports = Vec::new();
    for (tag, k) in ks {
        let m = match op {
            Operator::L => lin.assemble_l(),
            Operator::Ql => lin.assemble_ql(),
            Operator::R => lin.assemble_r(k),
            Operator::P => lin.assemble_p(k),
            Operator::Transverse => lin.assemble_transverse(k),
        };
        let r = spectrum(&m, None)?;
        let tol = cfg.zero_tol * r.max_abs();
        let r = r.recount(tol);
        let name = if tag.starts_with("k_") {
            format!("spectrum_{}_{tag}.json", op.as_str())
        } else {
            format!("spectrum_{}.json", op.as_str())
        };
        write_json(cfg, &name, &io::spectrum_to_json(&r))?;
        println!(
            "spectrum {} at k = {:.9e}: dim {}, negative {}, kernel {}, max Re {:.6e}",
            r.origin,
            k,
            r.dim(),
            r.neg_count,
            r.kernel_dim,
            r.max_re()
        );
        reports.push((format!("k = {k:.4}"), r));
    }
    write_svg(cfg, &format!("spectrum_{}.svg", op.as_str()), &spectrum_figure(&reports))
}

pub fn index_cmd(cfg: &RunConfig) -> Result<()> {
    let wave = load_wave(cfg)?;
    let lin = linearize(&wave)?;
    let r = index_quantity(&lin)?;
    write_json(cfg, "index.json", &io::index_to_json(&r, &wave.params, lin.n))?;
    println!(
        "index: q = {:.12e}, n(L) = {}, n0 = {}, z0 = {}, n(R(0)) = {} (formula {}), consistent = {}",
        r.q, r.n_l, r.n0, r.z0, r.n_r0_direct, r.n_r0_formula, r.consistent
    );
    Ok(())
}

pub fn analyze(cfg: &RunConfig) -> Result<()> {
    let wave = load_wave(cfg)?;
    let v = verdict(&wave, wave.len(), &cfg.verdict_settings())?;
    let lin = linearize(&wave)?;
    write_json(cfg, "wave.json", &io::wave_to_json(&wave))?;
    write_json(cfg, "verdict.json", &io::verdict_to_json(&v, &wave.params, lin.n))?;
    write_csv(cfg, "growth.csv", |buf| io::write_growth_csv(buf, &v.growth))?;
    let mut reports = Vec::new();
    for (tag, t) in K_TAGS {
        let k = t * v.k0;
        let r = transverse_spectrum(&lin, k)?;
        let tol = cfg.zero_tol * r.max_abs();
        let r = r.recount(tol);
        write_json(cfg, &format!("spectrum_{tag}.json"), &io::spectrum_to_json(&r))?;
        reports.push((format!("k = {k:.4}"), r));
    }
    write_svg(cfg, "growth.svg", &growth_figure(&v))?;
    write_svg(cfg, "spectrum.svg", &spectrum_figure(&reports))?;
    println!(
        "verdict: {} via {}, k0 = {:.9e}, nR0 = {}, max growth {:.6e} at k = {:.6e}",
        v.verdict.as_str(),
        v.criterion.as_str(),
        v.k0,
        v.n_r0,
        v.growth.lambda_at_max.re,
        v.growth.k_at_max
    );
    Ok(())
}

/// One sweep row; `status` is `ok` or the failure message.
struct Cell {
    p: f64,
    c: f64,
    period: f64,
    energy: Option<f64>,
    residual: Option<f64>,
    verdict: Option<InstabilityVerdict<f64>>,
    status: String,
}

fn sweep_cell(cfg: &RunConfig, p: f64, c: f64, period: f64) -> Cell {
    let mut cell = Cell { p, c, period, energy: None, residual: None, verdict: None, status: "ok".into() };
    let wave = match cfg.solver().solve(p, c, period, cfg.branch) {
        Ok(w) => w,
        Err(e) => {
            cell.status = format!("failed: {e}");
            return cell;
        }
    };
    cell.energy = Some(wave.params.energy);
    cell.residual = Some(wave.residual);
    match verdict(&wave, wave.len(), &cfg.verdict_settings()) {
        Ok(v) => cell.verdict = Some(v),
        Err(e) => cell.status = format!("failed: {e}"),
    }
    cell
}

fn write_sweep_csv(out: &mut Vec<u8>, cells: &[Cell], branch: Branch) -> gzk_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p",
        "c",
        "L",
        "branch",
        "B",
        "residual",
        "nL",
        "q",
        "nR0",
        "k0",
        "max_growth",
        "verdict",
        "status",
    ])?;
    let opt = |x: Option<f64>| x.map(csv_num).unwrap_or_default();
    for cell in cells {
        let v = cell.verdict.as_ref();
        w.write_record([
            csv_num(cell.p),
            csv_num(cell.c),
            csv_num(cell.period),
            branch.as_str().to_string(),
            opt(cell.energy),
            opt(cell.residual),
            v.map(|v| v.index.n_l.to_string()).unwrap_or_default(),
            opt(v.map(|v| v.index.q)),
            v.map(|v| v.n_r0.to_string()).unwrap_or_default(),
            opt(v.map(|v| v.k0)),
            opt(v.map(|v| v.growth.lambda_at_max.re)),
            v.map(|v| v.verdict.as_str().to_string()).unwrap_or_default(),
            cell.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let ps = cfg.p_values.clone().unwrap_or_else(|| vec![cfg.p]);
    let cs = cfg.c_range.map(|r| r.values()).unwrap_or_else(|| vec![cfg.c]);
    let ls = cfg.l_range.map(|r| r.values()).unwrap_or_else(|| vec![cfg.period]);
    let mut grid = Vec::with_capacity(ps.len() * cs.len() * ls.len());
    for &p in &ps {
        for &c in &cs {
            grid.extend(ls.iter().map(|&l| (p, c, l)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    // collect() keeps the input order whatever the scheduling
    let cells: Vec<Cell> = pool.install(|| grid.par_iter().map(|&(p, c, l)| sweep_cell(cfg, p, c, l)).collect());
    write_csv(cfg, "sweep.csv", |buf| write_sweep_csv(buf, &cells, cfg.branch))?;
    let failed = cells.iter().filter(|c| c.verdict.is_none()).count();
    println!("sweep: {} cells, {} failed", cells.len(), failed);
    Ok(())
}

pub fn evolve(cfg: &RunConfig) -> Result<()> {
    let wave = load_wave(cfg)?;
    let lin = linearize(&wave)?;
    let k = match cfg.k {
        Some(k) => k,
        None => {
            let v = verdict(&wave, wave.len(), &cfg.verdict_settings())?;
            if v.growth.lambda_at_max.re > v.threshold {
                v.growth.k_at_max
            } else {
                return Err(Error::NotApplicable(
                    "no growing transverse mode; pass k explicitly to evolve anyway".into(),
                )
                .into());
            }
        }
    };
    let expected = transverse_spectrum(&lin, k)?.rightmost();
    let w0: Vec<f64> = match cfg.init {
        Init::Mode => growing_mode(&lin, k)?.1,
        Init::Smooth => (0..lin.n)
            .map(|j| {
                let x = std::f64::consts::TAU * j as f64 / lin.n as f64;
                x.cos() + 0.5 * (2.0 * x).sin() + 0.25 * (3.0 * x).cos()
            })
            .collect(),
    };
    let horizon = cfg.horizon.unwrap_or_else(|| default_horizon(expected.re));
    let ev = evolve_linearized(&lin, k, &w0, horizon, cfg.dt)?;
    let stride = ev.steps.div_ceil(2000).max(1);
    write_json(cfg, "evolution.json", &io::evolution_to_json(&ev, k, Some(expected), stride))?;
    write_csv(cfg, "evolution.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["t", "log_norm"])?;
        for i in (0..ev.times.len()).step_by(stride) {
            w.write_record([csv_num(ev.times[i]), csv_num(ev.log_norms[i])])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let mut fig = Figure::new(format!("linearized evolution at k = {k:.6}"), "t", "log ||w||");
    let pts = ev.times.iter().copied().zip(ev.log_norms.iter().copied()).step_by(stride).collect();
    fig.series.push(Series::line("log ||w||", pts));
    let (t_end, y_end) = (ev.horizon, *ev.log_norms.last().expect("evolution has samples"));
    let reference = [0.5 * t_end, t_end].map(|t| (t, y_end + expected.re * (t - t_end)));
    fig.series.push(Series::line("eigenvalue slope", reference.to_vec()));
    write_svg(cfg, "evolution.svg", &fig)?;
    println!(
        "evolution at k = {k:.9e}: rate {:.9e}, eigenvalue real part {:.9e}, {} steps of {:.3e}",
        ev.rate, expected.re, ev.steps, ev.dt
    );
    Ok(())
}

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{parse_config, Config, Parsed};
use super::table::{run_table, Table};
use crate::algebra::SpinOps;
use crate::error::{Error, Result};
use crate::phase::EstimatorOptions;
use crate::reference::evolve_bloch_series;
use crate::sde::run;
use crate::verify::{random_spec, verify_divergence, verify_generator, verify_weak_step};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_COLLAPSE: i32 = 3;

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NormalizationCollapse(_) | Error::EnsembleExhausted => EXIT_COLLAPSE,
        _ => EXIT_USAGE,
    }
}

pub fn load_config(path: &Path) -> Result<Parsed> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: "$".into(),
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_config(&text, path.parent())
}

fn write_table(table: &Table, path: &Path) -> Result<()> {
    table.write(BufWriter::new(File::create(path)?))
}

fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub records: usize,
    pub resets: usize,
    pub drift_underflow: u64,
    pub diverged: usize,
    pub final_ess: f64,
    pub final_escape_frac: f64,
    pub min_reset_ess_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: Config,
    pub seed: u64,
    pub workers: Option<usize>,
    pub output: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub diagnostics: Diagnostics,
}

/// Runs the ensemble and writes the CSV time series plus a manifest.
pub fn cmd_simulate(config: &Path, out: &Path, manifest: Option<&Path>, workers: Option<usize>) -> Result<RunManifest> {
    let parsed = load_config(config)?;
    let mut cfg = parsed.run.clone();
    cfg.workers = workers;
    let started = unix_time();
    let output = run(&parsed.spec, &parsed.initial, &cfg)?;
    write_table(&run_table(&output), out)?;
    let last = output.records.last();
    let manifest_data = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: parsed.config.clone(),
        seed: cfg.seed,
        workers,
        output: out.display().to_string(),
        started_unix: started,
        finished_unix: unix_time(),
        diagnostics: Diagnostics {
            records: output.records.len(),
            resets: output.resets.len(),
            drift_underflow: output.drift_underflow,
            diverged: output.diverged,
            final_ess: last.map(|r| r.stats.ess).unwrap_or(0.0),
            final_escape_frac: last.map(|r| r.stats.escape_frac).unwrap_or(0.0),
            min_reset_ess_ratio: output
                .resets
                .iter()
                .map(|r| r.ess_after / output.records[0].stats.ess)
                .reduce(f64::min),
        },
    };
    let manifest_path = manifest.map(Path::to_path_buf).unwrap_or_else(|| default_manifest(out));
    let text = serde_json::to_string_pretty(&manifest_data).expect("manifest is serializable");
    std::fs::write(manifest_path, text + "\n")?;
    Ok(manifest_data)
}

fn default_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Exact correlators on the same time grid as `simulate`.
pub fn cmd_reference(config: &Path, out: &Path) -> Result<()> {
    let parsed = load_config(config)?;
    let cfg = &parsed.run;
    let total = cfg.n_steps()?;
    let mut steps: Vec<u64> = (0..=total).step_by(cfg.output_every as usize).collect();
    if steps.last() != Some(&total) {
        steps.push(total);
    }
    let times: Vec<f64> = steps.iter().map(|&k| k as f64 * cfg.dt).collect();
    let ops = SpinOps::new(parsed.spec.n_qubits())?;
    let series = evolve_bloch_series(&parsed.initial, &parsed.spec, &ops, &times, cfg.dt)?;
    let mut header = vec!["t".to_string()];
    header.extend(parsed.observables.iter().map(|m| format!("exact_{}", m.name())));
    let rows = times
        .iter()
        .zip(&series)
        .map(|(t, b)| {
            let mut row = vec![*t];
            row.extend(parsed.observables.iter().map(|m| b.get(m)));
            row
        })
        .collect();
    write_table(&Table { header, rows }, out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareSummary {
    pub max_abs_dev: f64,
    pub max_abs_z: f64,
    pub failures: usize,
    pub pass: bool,
}

/// Deviations and z-scores of a simulation against a reference table. A cell
/// passes when |dev| ≤ max(z_tol · err, abs_tol).
pub fn compare_tables(sim: &Table, reference: &Table, z_tol: f64, abs_tol: f64) -> Result<(Table, CompareSummary)> {
    let ts = sim.times()?;
    let tr = reference.times()?;
    if ts.len() != tr.len() || ts.iter().zip(&tr).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
        return Err(Error::Argument(format!(
            "time grids differ ({} vs {} rows)",
            ts.len(),
            tr.len()
        )));
    }
    let names: Vec<String> = sim
        .header
        .iter()
        .filter_map(|h| h.strip_prefix("est_").map(str::to_owned))
        .collect();
    let mut header = vec!["t".to_string()];
    let mut cols = Vec::new();
    for name in &names {
        let e = sim.column(&format!("est_{name}")).expect("listed from header");
        let s = sim
            .column(&format!("err_{name}"))
            .ok_or_else(|| Error::Argument(format!("simulation lacks err_{name}")))?;
        let r = reference
            .column(&format!("exact_{name}"))
            .ok_or_else(|| Error::Argument(format!("reference lacks exact_{name}")))?;
        cols.push((e, s, r));
        header.push(format!("dev_{name}"));
        header.push(format!("z_{name}"));
    }
    let mut summary = CompareSummary {
        max_abs_dev: 0.0,
        max_abs_z: 0.0,
        failures: 0,
        pass: true,
    };
    let mut rows = Vec::with_capacity(ts.len());
    for (i, t) in ts.iter().enumerate() {
        let mut row = vec![*t];
        for &(e, s, r) in &cols {
            let dev = sim.rows[i][e] - reference.rows[i][r];
            let err = sim.rows[i][s];
            let z = dev / err;
            row.push(dev);
            row.push(z);
            summary.max_abs_dev = summary.max_abs_dev.max(dev.abs());
            if z.is_finite() {
                summary.max_abs_z = summary.max_abs_z.max(z.abs());
            }
            let allowed = if err.is_finite() { (z_tol * err).max(abs_tol) } else { abs_tol };
            if !(dev.abs() <= allowed) {
                summary.failures += 1;
            }
        }
        rows.push(row);
    }
    summary.pass = summary.failures == 0;
    Ok((Table { header, rows }, summary))
}

pub fn cmd_compare(sim: &Path, reference: &Path, out: Option<&Path>, z_tol: f64, abs_tol: f64) -> Result<CompareSummary> {
    let s = Table::read(File::open(sim)?)?;
    let r = Table::read(File::open(reference)?)?;
    let (table, summary) = compare_tables(&s, &r, z_tol, abs_tol)?;
    if let Some(p) = out {
        write_table(&table, p)?;
    }
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct VerifyArgs {
    pub config: Option<PathBuf>,
    pub qubits: usize,
    pub seed: u64,
    pub specs: usize,
    pub states: usize,
    pub points: usize,
    pub tol: f64,
    pub divergence_trials: usize,
    pub weak_count: usize,
    pub weak_dt: f64,
}

/// Runs the verifier suite, printing each report. Returns overall pass.
pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn std::io::Write) -> Result<bool> {
    let mut pass = true;
    let parsed = args.config.as_deref().map(load_config).transpose()?;
    match &parsed {
        Some(p) => {
            let r = verify_generator(&p.spec, 0.0, args.states, args.points, args.tol, args.seed)?;
            writeln!(out, "{r}")?;
            pass &= r.pass;
        }
        None => {
            if !(2..=6).contains(&args.qubits) {
                return Err(Error::Argument(format!("--qubits must be in 2..=6, got {}", args.qubits)));
            }
            let chain: Vec<(usize, usize)> = (0..args.qubits - 1).map(|q| (q, q + 1)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut worst: Option<crate::verify::GeneratorReport> = None;
            for k in 0..args.specs {
                let spec = random_spec(args.qubits, &chain, &mut rng)?;
                let r = verify_generator(&spec, 0.0, args.states, args.points, args.tol, args.seed.wrapping_add(k as u64))?;
                pass &= r.pass;
                if worst.as_ref().is_none_or(|w| r.max_discrepancy > w.max_discrepancy) {
                    worst = Some(r);
                }
            }
            writeln!(out, "random {}-qubit chains: {} specs", args.qubits, args.specs)?;
            if let Some(w) = worst {
                writeln!(out, "worst spec:\n{w}")?;
            }
        }
    }
    let d = verify_divergence(args.divergence_trials, 1e-6, args.seed)?;
    writeln!(out, "{d}")?;
    pass &= d.pass;
    if args.weak_count > 0 {
        let (spec, b0) = match &parsed {
            Some(p) => (p.spec.clone(), p.initial.clone()),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                let spec = random_spec(2, &[(0, 1)], &mut rng)?;
                let b0 = crate::reference::BlochTensor::product(&[
                    crate::algebra::Vec3::new(0.0, 0.0, 0.5),
                    crate::algebra::Vec3::new(0.0, 0.0, 0.5),
                ]);
                (spec, b0)
            }
        };
        let w = verify_weak_step(&spec, &b0, args.weak_dt, args.weak_count, args.seed, &EstimatorOptions::with_shell(0.0, 0.7))?;
        writeln!(out, "{w}")?;
        pass &= w.pass;
    }
    writeln!(out, "overall: {}", if pass { "PASS" } else { "FAIL" })?;
    Ok(pass)
}

//! Subcommand pipelines.

use std::path::{Path, PathBuf};
use std::time::Instant;

use bhsc::model::{compute_timescales, CoherentState};
use bhsc::quantum::quantum_autocorrelation;
use bhsc::saddle::sweep_saddles;
use bhsc::semiclassical::{semiclassical_autocorrelation, SemiclassicalSeries};
use bhsc::series::{uniform_grid, TimeSeries};
use bhsc::spectroscopy::{extract_peaks, windowed_fourier};
use bhsc::twa::{diagonal_from_saddles, twa_autocorrelation, TwaSeries, WignerSampler};
use bhsc::Complex;
use serde_json::json;

use crate::config::{load_config, validate, Config, Engine};
use crate::inventory::InventoryRecord;
use crate::output::{fmt, sha256_hex, write_csv, write_json, RunManifest, Seeds, Timing};
use crate::report::{emit_plot_data, Column, ComparisonReport};
use crate::{Cli, CliError, Command, GridArgs};

struct Session {
    out_dir: PathBuf,
    files: Vec<PathBuf>,
    timings: Vec<Timing>,
}

impl Session {
    fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        r
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.files.push(p.clone());
        p
    }
}

fn apply_grid(config: &mut Config, grid: &GridArgs) {
    if let Some(v) = grid.start {
        config.time.start = v;
    }
    if let Some(v) = grid.stop {
        config.time.stop = v;
    }
    if let Some(v) = grid.step {
        config.time.step = v;
    }
}

fn apply_overrides(config: &mut Config, cli: &Cli) {
    if let Some(seed) = cli.seed {
        config.twa.seed = seed;
        config.saddles.seed = seed;
    }
    match &cli.command {
        Command::Quantum { grid, eps_trunc } => {
            apply_grid(config, grid);
            if let Some(e) = eps_trunc {
                config.quantum.eps_trunc = *e;
            }
        }
        Command::Twa { grid, samples } => {
            apply_grid(config, grid);
            if let Some(n) = samples {
                config.twa.samples = *n;
            }
        }
        Command::Saddles {
            grid,
            seeding_samples,
            newton_tol,
            keep_discarded,
        } => {
            apply_grid(config, grid);
            if let Some(n) = seeding_samples {
                config.saddles.seeding_samples = *n;
            }
            if let Some(t) = newton_tol {
                config.saddles.newton_tol = *t;
            }
            config.saddles.keep_discarded |= keep_discarded;
        }
        Command::Semiclassical { grid, .. } | Command::Compare { grid } => apply_grid(config, grid),
        Command::Spectrum {
            sigma,
            e_min,
            e_max,
            e_step,
            e0,
            ..
        } => {
            let s = &mut config.spectrum;
            for (slot, v) in [
                (&mut s.sigma, sigma),
                (&mut s.e_min, e_min),
                (&mut s.e_max, e_max),
                (&mut s.e_step, e_step),
                (&mut s.e0, e0),
            ] {
                if let Some(v) = v {
                    *slot = *v;
                }
            }
        }
    }
}

/// Computation grid from zero; outputs keep only `tau >= start`.
fn time_grid(config: &Config) -> Result<(Vec<f64>, usize), CliError> {
    let grid = uniform_grid(0.0, config.time.stop, config.time.step)
        .map_err(|e| CliError::Validation(vec![format!("[time]: {e}")]))?;
    let first = grid
        .iter()
        .position(|&t| t >= config.time.start - 1e-9 * config.time.step)
        .unwrap_or(grid.len());
    Ok((grid, first))
}

fn series_rows(series: &TimeSeries<f64>, first: usize) -> Vec<Vec<String>> {
    (first..series.len())
        .map(|k| {
            let a = series.values[k];
            vec![fmt(series.tau[k]), fmt(a.re), fmt(a.im), fmt(a.norm())]
        })
        .collect()
}

fn run_quantum(config: &Config, state: &CoherentState<f64>, grid: &[f64]) -> Result<TimeSeries<f64>, CliError> {
    let run = quantum_autocorrelation(state, &config.lattice()?, grid, &config.quantum_options())
        .map_err(CliError::engine("quantum"))?;
    log::info!(
        "quantum: {} sectors, retained weight {:.12}, max norm drift {:.1e}",
        run.sectors.len(),
        run.retained_weight,
        run.max_norm_drift
    );
    Ok(run.series)
}

fn run_twa(config: &Config, state: &CoherentState<f64>, grid: &[f64]) -> Result<TwaSeries<f64>, CliError> {
    let sampler = WignerSampler::new(state.clone(), config.twa.seed, config.twa.samples);
    let out = twa_autocorrelation(state, &config.lattice()?, grid, &sampler, &config.twa_integrator(state))
        .map_err(CliError::engine("twa"))?;
    log::info!("twa: {} samples kept, {} dropped", out.samples, out.dropped);
    Ok(out)
}

fn run_sweep(config: &Config, state: &CoherentState<f64>, grid: &[f64]) -> Result<InventoryRecord, CliError> {
    let search = config.saddle_search(state)?;
    let inv = sweep_saddles(&search, state, grid, &config.sweep_options(state)).map_err(CliError::engine("saddles"))?;
    let counts = inv.counts();
    log::info!(
        "saddles: {} families seeded, at most {} contributing",
        inv.families,
        counts.iter().max().copied().unwrap_or(0)
    );
    Ok(InventoryRecord::from_inventory(&inv, state.n_sites()))
}

fn run_semiclassical(
    config: &Config,
    state: &CoherentState<f64>,
    record: &InventoryRecord,
) -> Result<(SemiclassicalSeries<f64>, Vec<f64>), CliError> {
    let search = config.saddle_search(state)?;
    let contributions = record.contributions(&search)?;
    let sc = semiclassical_autocorrelation(&record.tau(), &contributions).map_err(CliError::engine("semiclassical"))?;
    let diag = contributions
        .iter()
        .map(|c| diagonal_from_saddles(c, config.semiclassical.diagonal_mode).0)
        .collect();
    Ok((sc, diag))
}

fn read_series(path: &Path) -> Result<TimeSeries<f64>, CliError> {
    let bad = |msg: String| CliError::Validation(vec![format!("{}: {msg}", path.display())]);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (it, ire, iim) = (col("tau")?, col("re_A")?, col("im_A")?);
    let mut tau = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 2, i + 1)))
        };
        tau.push(num(it)?);
        values.push(Complex::new(num(ire)?, num(iim)?));
    }
    Ok(TimeSeries::new(tau, values))
}

fn parameters(config: &Config, state: &CoherentState<f64>) -> serde_json::Value {
    json!({
        "n_sites": config.model.n_sites,
        "J": config.model.hopping,
        "U": config.model.interaction,
        "amplitudes": state.amplitudes().iter().map(|b| [b.re, b.im]).collect::<Vec<_>>(),
        "time": config.time,
    })
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation(vec!["--threads: must be positive".into()]));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let (mut config, source) = match (&cli.config, &cli.command) {
        (Some(path), _) => {
            let (c, text) = load_config(path)?;
            (Some(c), Some(text))
        }
        (None, Command::Spectrum { .. }) => (None, None),
        (None, _) => return Err(CliError::Validation(vec!["--config: required for this subcommand".into()])),
    };
    if let Some(c) = config.as_mut() {
        apply_overrides(c, &cli);
        let errors = validate(c);
        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }
    }
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", cli.out_dir.display())))?;
    let mut session = Session {
        out_dir: cli.out_dir.clone(),
        files: Vec::new(),
        timings: Vec::new(),
    };

    let mut snapshot = None;
    let name = match &cli.command {
        Command::Spectrum { input, .. } => {
            let mut spec = config.as_ref().map(|c| c.spectrum.clone()).unwrap_or_default();
            if config.is_none() {
                let mut tmp = crate::config::Config::spectrum_only(spec);
                apply_overrides(&mut tmp, &cli);
                let errors = validate(&tmp);
                if !errors.is_empty() {
                    return Err(CliError::Validation(errors));
                }
                spec = tmp.spectrum;
                snapshot = Some(json!({ "spectrum": spec }));
            }
            let series = read_series(input)?;
            let energies = uniform_grid(spec.e_min, spec.e_max, spec.e_step)
                .map_err(|e| CliError::Validation(vec![format!("[spectrum]: {e}")]))?;
            let sp = session
                .timed("spectrum", || windowed_fourier(&series, spec.sigma, &energies, spec.e0, spec.normalize))
                .map_err(CliError::engine("spectrum"))?;
            let rows: Vec<Vec<String>> = sp.energy.iter().zip(&sp.values).map(|(e, v)| vec![fmt(*e), fmt(*v)]).collect();
            let path = session.path("spectrum.csv");
            write_csv(&path, &["E", "SP"], &rows, &[])?;
            let peaks = extract_peaks(&sp, spec.peak_floor);
            let rows: Vec<Vec<String>> = peaks.iter().map(|p| vec![fmt(p.position), fmt(p.height)]).collect();
            let path = session.path("peaks.csv");
            write_csv(&path, &["E", "height"], &rows, &[])?;
            "spectrum"
        }
        command => {
            let config = config.as_ref().expect("loaded above");
            let state = config.state()?;
            let (grid, first) = time_grid(config)?;
            match command {
                Command::Quantum { .. } => {
                    let series = session.timed("quantum", || run_quantum(config, &state, &grid))?;
                    let path = session.path("quantum.csv");
                    write_csv(&path, &["tau", "re_A", "im_A", "abs_A"], &series_rows(&series, first), &[])?;
                    "quantum"
                }
                Command::Twa { .. } => {
                    let twa = session.timed("twa", || run_twa(config, &state, &grid))?;
                    let sqrt = twa.sqrt_estimate();
                    let rows: Vec<Vec<String>> = (first..grid.len())
                        .map(|k| vec![fmt(grid[k]), fmt(twa.estimate[k]), fmt(twa.stderr[k]), fmt(sqrt[k])])
                        .collect();
                    let path = session.path("twa.csv");
                    write_csv(&path, &["tau", "C", "stderr", "sqrtC"], &rows, &[])?;
                    "twa"
                }
                Command::Saddles { .. } => {
                    let record = session.timed("saddles", || run_sweep(config, &state, &grid))?;
                    let path = session.path("saddles.json");
                    write_json(&path, &record)?;
                    "saddles"
                }
                Command::Semiclassical { inventory, .. } => {
                    let record = match inventory {
                        Some(path) => {
                            let text = std::fs::read_to_string(path)
                                .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
                            serde_json::from_str(&text)
                                .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?
                        }
                        None => {
                            let record = session.timed("saddles", || run_sweep(config, &state, &grid))?;
                            let path = session.path("saddles.json");
                            write_json(&path, &record)?;
                            record
                        }
                    };
                    let (sc, diag) = session.timed("semiclassical", || run_semiclassical(config, &state, &record))?;
                    let start = config.time.start - 1e-9 * config.time.step;
                    let rows: Vec<Vec<String>> = (0..sc.series.len())
                        .filter(|&k| sc.series.tau[k] >= start)
                        .map(|k| {
                            let a = sc.series.values[k];
                            vec![
                                fmt(sc.series.tau[k]),
                                fmt(a.re),
                                fmt(a.im),
                                fmt(a.norm()),
                                sc.n_saddles[k].to_string(),
                                fmt(diag[k]),
                            ]
                        })
                        .collect();
                    let path = session.path("semiclassical.csv");
                    write_csv(&path, &["tau", "re_A", "im_A", "abs_A", "n_saddles", "C_diag"], &rows, &[])?;
                    "semiclassical"
                }
                Command::Compare { .. } => {
                    let mut report = ComparisonReport {
                        tau: grid[first..].to_vec(),
                        columns: Vec::new(),
                        n_saddles: None,
                        metrics: Vec::new(),
                        parameters: parameters(config, &state),
                        tau1: None,
                        tau2: None,
                    };
                    if let Ok(ts) = compute_timescales(&config.lattice()?, &state) {
                        report.tau1 = Some(ts.tau1);
                        report.tau2 = Some(ts.tau2);
                    }
                    for engine in &config.compare.engines {
                        match engine {
                            Engine::Quantum => {
                                let series = session.timed("quantum", || run_quantum(config, &state, &grid))?;
                                report.columns.push(Column {
                                    name: "abs_A_quantum".into(),
                                    description: "exact |A(tau)|".into(),
                                    values: series.abs()[first..].to_vec(),
                                });
                            }
                            Engine::Twa => {
                                let twa = session.timed("twa", || run_twa(config, &state, &grid))?;
                                report.columns.push(Column {
                                    name: "sqrtC_twa".into(),
                                    description: "square root of the truncated Wigner C(tau)".into(),
                                    values: twa.sqrt_estimate()[first..].to_vec(),
                                });
                            }
                            Engine::Semiclassical => {
                                let record = session.timed("saddles", || run_sweep(config, &state, &grid))?;
                                let (sc, _) = session.timed("semiclassical", || run_semiclassical(config, &state, &record))?;
                                report.columns.push(Column {
                                    name: "abs_A_semiclassical".into(),
                                    description: "|coherent saddle sum|".into(),
                                    values: sc.series.abs()[first..].to_vec(),
                                });
                                report.n_saddles = Some(sc.n_saddles[first..].to_vec());
                            }
                        }
                    }
                    report.compute_metrics(&config.compare.ranges);
                    let files = emit_plot_data(&report, &session.out_dir, "compare")?;
                    session.files.extend(files);
                    "compare"
                }
                Command::Spectrum { .. } => unreachable!(),
            }
        }
    };

    let mut manifest = RunManifest {
        tool: "bhsc".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        engine_version: bhsc::VERSION.into(),
        command: name.into(),
        config_sha256: source.as_deref().map(|s| sha256_hex(s.as_bytes())),
        config: match (&config, snapshot) {
            (Some(c), _) => serde_json::to_value(c).unwrap_or_default(),
            (None, s) => s.unwrap_or_default(),
        },
        seeds: Seeds {
            twa: config.as_ref().map_or(0, |c| c.twa.seed),
            saddles: config.as_ref().map_or(0, |c| c.saddles.seed),
        },
        threads: rayon::current_num_threads(),
        timings: session.timings,
        outputs: Vec::new(),
    };
    manifest.digest_outputs(&session.out_dir, &session.files)?;
    write_json(&session.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

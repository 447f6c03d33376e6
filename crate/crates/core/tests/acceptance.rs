//! One line per criterion, `PASS` or `FAIL`, with the measured numbers.
//! Criterion 7 is long-running and only runs with `BHSC_STRETCH=1`.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bhsc::flow::{hamiltonian_value, integrate, total_number, IntegratorOptions};
use bhsc::model::{compute_timescales, CoherentState, LatticeConfig};
use bhsc::phase::PhasePoint;
use bhsc::quantum::{exact_spectrum, kerr_analytic_autocorrelation, quantum_autocorrelation, QuantumOptions, QuantumRun};
use bhsc::saddle::{residual_jacobian, sweep_saddles, ManifoldParameterization, SaddleInventory, SaddleSearch, SweepOptions};
use bhsc::semiclassical::semiclassical_autocorrelation;
use bhsc::series::uniform_grid;
use bhsc::spectroscopy::{estimate_shift, extract_peaks, windowed_fourier};
use bhsc::twa::{diagonal_from_saddles, twa_autocorrelation, DiagonalMode, TwaSeries, WignerSampler};
use bhsc::Complex;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn linspace(stop: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| stop * k as f64 / n as f64).collect()
}

fn max_dev(a: impl Iterator<Item = f64>) -> f64 {
    a.fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let b = 3f64.sqrt();
    let state = CoherentState::new(vec![Complex64::new(b, 0.0), Complex64::new(0.0, 0.0), Complex64::new(b, 0.0)]).unwrap();
    let config = LatticeConfig::new(3, 0.0, 1.0).unwrap();
    let eps = 1e-11;
    let grid = linspace(TAU, 628);
    let start = Instant::now();
    let run = quantum_autocorrelation(&state, &config, &grid, &QuantumOptions { eps_trunc: eps, ..Default::default() }).unwrap();
    let elapsed = start.elapsed();
    let dev = max_dev(grid.iter().zip(&run.series.values).map(|(&t, a)| (a - kerr_analytic_autocorrelation(&state, 1.0, t)).norm()));
    let revival = run.series.values.last().unwrap().norm();
    let deficit = (revival - (1.0 - eps)).abs();
    check(
        dev < 1e-9 && deficit < 1e-8 && elapsed < Duration::from_secs(10),
        format!("max|dA| = {dev:.2e} (< 1e-9), ||A(2pi)| - (1 - eps)| = {deficit:.2e} (< 1e-8), {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let state = CoherentState::density_wave(4, 5.0).unwrap();
    let config = LatticeConfig::new(4, 0.2, 0.0).unwrap();
    let grid = linspace(20.0, 400);
    let start = Instant::now();
    let qm = quantum_autocorrelation(&state, &config, &grid, &QuantumOptions::default()).unwrap();
    let search = SaddleSearch::new(&state, &config).unwrap();
    let opts = SweepOptions { reseed_every: 0, ..Default::default() };
    let inv = sweep_saddles(&search, &state, &grid, &opts).unwrap();
    let sc = semiclassical_autocorrelation(&inv.tau(), &inv.contributions()).unwrap();
    let elapsed = start.elapsed();
    let dev = max_dev(qm.series.values.iter().zip(&sc.series.values).map(|(a, b)| (a - b).norm()));
    let single = sc.n_saddles.iter().all(|&n| n == 1);
    check(
        dev < 1e-6 && single && elapsed < Duration::from_secs(60),
        format!("max|A_sc - A_qm| = {dev:.2e} (< 1e-6), single saddle throughout: {single}, {elapsed:.2?} (< 60 s)"),
    )
}

struct Reduced {
    state: CoherentState<f64>,
    tau1: f64,
    grid: Vec<f64>,
    qm: QuantumRun,
    twa: TwaSeries<f64>,
    inventory: SaddleInventory<f64>,
    elapsed: Duration,
}

fn reduced() -> &'static Reduced {
    static CELL: OnceLock<Reduced> = OnceLock::new();
    CELL.get_or_init(|| {
        let state = CoherentState::density_wave(4, 5.0).unwrap();
        let config = LatticeConfig::new(4, 0.2, 2.0).unwrap();
        let tau1 = compute_timescales(&config, &state).unwrap().tau1;
        let grid = linspace(2.0 * tau1, (2.0 * tau1 / 0.01).round() as usize);
        let start = Instant::now();
        let qm = quantum_autocorrelation(&state, &config, &grid, &QuantumOptions::default()).unwrap();
        let integ = IntegratorOptions { rtol: 1e-8, atol: 1e-10, ..IntegratorOptions::for_state(&state) };
        let twa = twa_autocorrelation(&state, &config, &grid, &WignerSampler::new(state.clone(), 5, 20_000), &integ).unwrap();
        let search = SaddleSearch::new(&state, &config).unwrap();
        let inventory = sweep_saddles(&search, &state, &grid, &SweepOptions::default()).unwrap();
        Reduced {
            state,
            tau1,
            grid,
            qm,
            twa,
            inventory,
            elapsed: start.elapsed(),
        }
    })
}

fn criterion_3() -> Outcome {
    let r = reduced();
    let sc = semiclassical_autocorrelation(&r.inventory.tau(), &r.inventory.contributions()).unwrap();
    let qm = r.qm.series.abs();
    let dev_sc = max_dev(qm.iter().zip(sc.series.abs()).map(|(q, s)| (q - s).abs()));
    let twa = r.twa.sqrt_estimate();
    let dev_twa = max_dev(
        r.grid
            .iter()
            .zip(qm.iter().zip(&twa))
            .filter(|(&t, _)| t > r.tau1)
            .map(|(_, (q, w))| (q - w).abs()),
    );
    check(
        dev_sc < 5e-2 && dev_twa > 3.0 * dev_sc,
        format!(
            "max||A_sc| - |A_qm|| = {dev_sc:.4} (< 5e-2), max TWA dev on (tau1, 2 tau1] = {dev_twa:.4} (> 3x), {} families, {:.1?}",
            r.inventory.families, r.elapsed
        ),
    )
}

fn criterion_4() -> Outcome {
    let r = reduced();
    let config = LatticeConfig::new(4, 0.2, 2.0).unwrap();
    let origin = twa_autocorrelation(
        &r.state,
        &config,
        &[0.0],
        &WignerSampler::new(r.state.clone(), 11, 100_000),
        &IntegratorOptions::for_state(&r.state),
    )
    .unwrap();
    let z = (origin.estimate[0] - 1.0).abs() / origin.stderr[0];
    let mut worst = 0.0f64;
    for (k, entry) in r.inventory.entries.iter().enumerate().filter(|(_, e)| e.tau < 0.5 * r.tau1) {
        let (diag, empty) = diagonal_from_saddles(&entry.contributions, DiagonalMode::Modulus);
        let excess = if empty {
            f64::INFINITY
        } else {
            (diag - r.twa.estimate[k]).abs() - 3.0 * r.twa.stderr[k]
        };
        worst = worst.max(excess);
    }
    check(
        z < 3.0 && worst < 5e-2,
        format!(
            "C_TWA(0) = {:.4} +- {:.4} ({z:.2} sigma, < 3), max(|C_diag - C_TWA| - 3 stderr) on tau < tau1/2 = {worst:.4} (< 5e-2)",
            origin.estimate[0], origin.stderr[0]
        ),
    )
}

fn criterion_5() -> Outcome {
    let config = LatticeConfig::new(4, 0.2, 2.0).unwrap();
    let opts = IntegratorOptions { rtol: 1e-12, atol: 1e-13, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut symp = 0.0f64;
    let mut cons = 0.0f64;
    for _ in 0..8 {
        let mut draw = |scale: f64| -> Vec<Complex64> {
            (0..4)
                .map(|_| Complex64::new(rng.random_range(-3.0..3.0), scale * rng.random_range(-1.0..1.0)))
                .collect()
        };
        let z0 = PhasePoint::new(draw(0.3), draw(0.3));
        let traj = integrate(&z0, 0.8, &config, &opts).unwrap();
        symp = symp.max(traj.stability.symplectic_defect());
        let rel = |a: Complex64, b: Complex64| (a - b).norm() / a.norm().max(1.0);
        cons = cons.max(rel(hamiltonian_value(&z0, &config), hamiltonian_value(&traj.z_tau, &config)));
        cons = cons.max(rel(total_number(&z0), total_number(&traj.z_tau)));
    }

    let state = CoherentState::density_wave(4, 5.0).unwrap();
    let manifold = ManifoldParameterization::new(&state).unwrap();
    let mut jac_err = 0.0f64;
    for _ in 0..4 {
        let p0: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
            .collect();
        let tau = rng.random_range(0.1..1.0);
        let run = |p: &[Complex64]| manifold.residual(&integrate(&manifold.initial_point(p), tau, &config, &opts).unwrap().z_tau);
        let traj = integrate(&manifold.initial_point(&p0), tau, &config, &opts).unwrap();
        let jac = residual_jacobian(&traj);
        let scale = jac.max_abs();
        let h = 1e-6;
        for k in 0..4 {
            let mut plus = p0.clone();
            let mut minus = p0.clone();
            plus[k] += h;
            minus[k] -= h;
            let (rp, rm) = (run(&plus), run(&minus));
            for j in 0..4 {
                let fd: Complex<f64> = (rp[j] - rm[j]) / (2.0 * h);
                jac_err = jac_err.max((fd - jac[(j, k)]).norm() / scale);
            }
        }
    }

    let inv = &reduced().inventory;
    let residual = inv.entries.iter().flat_map(|e| &e.saddles).map(|s| s.residual).fold(0.0, f64::max);
    let branch = inv
        .entries
        .iter()
        .flat_map(|e| &e.saddles)
        .map(|s| s.trajectory.max_branch_step)
        .fold(0.0, f64::max);
    check(
        symp < 1e-8 && cons < 1e-8 && jac_err < 1e-5 && residual < 1e-10 && branch < PI / 2.0,
        format!(
            "symplectic defect {symp:.1e}, conservation {cons:.1e}, Jacobian vs FD {jac_err:.1e}, saddle residual {residual:.1e}, branch step {branch:.3} (< pi/2)"
        ),
    )
}

fn criterion_6() -> Outcome {
    let state = CoherentState::density_wave(4, 5.0).unwrap();
    let config = LatticeConfig::new(4, 0.2, 2.0).unwrap();
    let sigma = 40.0;
    let step = 0.007;
    let start = Instant::now();
    let grid = uniform_grid(0.0, 4.0 * sigma, 0.02).unwrap();
    let qopts = QuantumOptions { eps_trunc: 1e-2, ..Default::default() };
    let qm = quantum_autocorrelation(&state, &config, &grid, &qopts).unwrap();
    let lines = exact_spectrum(&state, &config, &qm.sectors, qopts.dense_cap).unwrap();
    let lo = lines.iter().map(|l| l.energy).fold(f64::INFINITY, f64::min) - 1.0;
    let hi = lines.iter().map(|l| l.energy).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let energies = uniform_grid(lo, hi, step).unwrap();
    let sp = windowed_fourier(&qm.series, sigma, &energies, 0.0, true).unwrap();
    let top = sp.values.iter().copied().fold(0.0, f64::max);
    let peaks = extract_peaks(&sp, 1e-2 * top);
    let nearest = |x: f64, min_weight: f64| {
        lines
            .iter()
            .filter(|l| l.weight > min_weight)
            .map(|l| (l.energy - x).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let peak_err = max_dev(peaks.iter().map(|p| nearest(p.position, 1e-4)));
    let heavy: Vec<f64> = lines.iter().filter(|l| l.weight > 1e-2).map(|l| l.energy).collect();
    let line_err = max_dev(
        heavy
            .iter()
            .map(|&e| peaks.iter().map(|p| (p.position - e).abs()).fold(f64::INFINITY, f64::min)),
    );

    let delta = 0.9;
    let shifted = windowed_fourier(&qm.series, sigma, &energies, -delta, true).unwrap();
    let found = estimate_shift(&sp, &shifted, 1.5).unwrap();
    let shift_err = (found - delta).abs();
    let elapsed = start.elapsed();
    check(
        !peaks.is_empty() && peak_err < 2.0 / sigma && line_err < 2.0 / sigma && shift_err < step / 10.0,
        format!(
            "{} peaks, worst peak-to-line {peak_err:.4}, worst heavy line-to-peak {line_err:.4} ({} lines; < 2/sigma = {:.3}), shift {found:.5} vs {delta} (err {shift_err:.1e} < {:.1e}), {elapsed:.1?}",
            peaks.len(),
            heavy.len(),
            2.0 / sigma,
            step / 10.0
        ),
    )
}

fn criterion_7() -> Outcome {
    let state = CoherentState::density_wave(4, 20.0).unwrap();
    let config = LatticeConfig::new(4, 0.2, 0.5).unwrap();
    let ts = compute_timescales(&config, &state).unwrap();
    let target = ts.tau2 / 3.0;
    let grid = linspace(target + 0.5, ((target + 0.5) / 0.01).round() as usize);
    let start = Instant::now();
    let integ = IntegratorOptions { rtol: 1e-8, atol: 1e-10, ..IntegratorOptions::for_state(&state) };
    let twa = twa_autocorrelation(&state, &config, &grid, &WignerSampler::new(state.clone(), 5, 20_000), &integ).unwrap();
    let search = SaddleSearch::new(&state, &config).unwrap();
    let inv = sweep_saddles(&search, &state, &grid, &SweepOptions::default()).unwrap();
    let sc = semiclassical_autocorrelation(&inv.tau(), &inv.contributions()).unwrap();
    let window: Vec<usize> = (0..grid.len()).filter(|&k| (grid[k] - target).abs() < 0.3).collect();
    let k_peak = *window
        .iter()
        .max_by(|&&a, &&b| sc.series.values[a].norm().total_cmp(&sc.series.values[b].norm()))
        .unwrap();
    let sc_peak = sc.series.values[k_peak].norm();
    let twa_there = twa.sqrt_estimate()[k_peak];
    let count = sc.n_saddles[k_peak];
    check(
        sc_peak > 2.0 * twa_there && (10..=1000).contains(&count),
        format!(
            "|A_sc| = {sc_peak:.3} at tau = {:.2} vs sqrt(C_TWA) = {twa_there:.3}, {count} saddles, {:.1?}",
            grid[k_peak],
            start.elapsed()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 6] = [
        ("1 kerr oracle", criterion_1),
        ("2 quadratic-flow exactness", criterion_2),
        ("3 reduced instance", criterion_3),
        ("4 TWA calibration", criterion_4),
        ("5 property suites", criterion_5),
        ("6 spectroscopy consistency", criterion_6),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let out = run();
        println!("criterion {name}: {} {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failed += usize::from(!out.pass);
    }
    if std::env::var("BHSC_STRETCH").is_ok_and(|v| v == "1") {
        let out = criterion_7();
        println!("criterion 7 full instance: {} {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failed += usize::from(!out.pass);
    } else {
        println!("criterion 7 full instance: SKIP (stretch, set BHSC_STRETCH=1)");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

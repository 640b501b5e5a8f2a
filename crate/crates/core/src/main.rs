//! Command-line harness: mean-field scans and trajectories, exact
//! master-equation runs, stochastic lattice ensembles, and the analysis
//! pipeline. All tabular outputs are CSV with a header row; metadata is
//! JSON; every output directory carries the resolved config for provenance.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use rydcycles::config::RunConfig;
use rydcycles::error::{Result, RydError};
use rydcycles::exact::{evolve_exact, DensityMatrix};
use rydcycles::meanfield::{classify_phase, evolve_mf, limit_cycle_metrics, MFState};
use rydcycles::model::build_coupling_matrix;
use rydcycles::observables::{
    dominant_peak, ensemble_correlation, fit_envelope, fourier_spectrum, relative_fraction,
    scaling_collapse, CorrelationSeries, Spectrum, Taper,
};
use rydcycles::series::PopSeries;
use rydcycles::twa::{run_ensemble, RunSettings};

/// Thread-count override; default is the number of logical cores.
const THREADS_ENV: &str = "RYDCYCLES_THREADS";

#[derive(Parser)]
#[command(
    name = "rydcycles",
    about = "Predator-prey population cycles in driven-dissipative Rydberg lattices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline override, repeatable: --set key=value (wins over the file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the mean-field phase on an Omega x Delta_r grid (resumable).
    MfScan {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Omega grid as min:max:steps.
        #[arg(long, value_name = "MIN:MAX:STEPS")]
        omega: String,
        /// Delta_r grid as min:max:steps.
        #[arg(long = "delta-r", value_name = "MIN:MAX:STEPS")]
        delta_r: String,
    },
    /// Integrate the mean-field equations from the ground state.
    MfEvolve {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Exact master-equation run for small atom numbers.
    ExactRun {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Stochastic lattice ensemble.
    TwaRun {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run the same config at several edge lengths, one subdirectory
        /// per size (e.g. 8,16,32).
        #[arg(long = "sweep-l", value_name = "L1,L2,...")]
        sweep_l: Option<String>,
        /// Write per-trajectory population CSVs (needed for correlate).
        #[arg(long)]
        save_trajectories: bool,
    },
    /// Post-process existing outputs.
    Analyze {
        #[arg(long, value_parser = ["correlate", "spectrum", "collapse", "cycle-metrics"])]
        mode: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Transient to drop before correlating [1/Gamma].
        #[arg(long, default_value_t = 0.0)]
        transient: f64,
        /// Maximum correlation lag [1/Gamma].
        #[arg(long = "max-lag", default_value_t = 50.0)]
        max_lag: f64,
        /// Spectral taper.
        #[arg(long, default_value = "none", value_parser = ["none", "cosine"])]
        taper: String,
        /// System sizes matching the inputs in order (collapse mode).
        #[arg(long, value_name = "N1,N2,...")]
        sizes: Option<String>,
        /// Lower frequency bound for peak search.
        #[arg(long = "omega-min", default_value_t = 0.5)]
        omega_min: f64,
        /// Input files (mode-dependent).
        inputs: Vec<PathBuf>,
    },
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(cli.command) {
        Ok(code) => std::process::ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(exit_code(&e))
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// 0 success, 2 I/O, 3 simulation-quality flag, 4 input mismatch.
fn exit_code(e: &RydError) -> u8 {
    match e {
        RydError::Io(_) => 2,
        RydError::Config(_) | RydError::MixedDt(_, _) | RydError::Capacity(_, _) => 4,
        _ => 3,
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::MfScan { cfg, omega, delta_r } => cmd_mf_scan(&cfg, &omega, &delta_r),
        Command::MfEvolve { cfg } => cmd_mf_evolve(&cfg),
        Command::ExactRun { cfg } => cmd_exact_run(&cfg),
        Command::TwaRun { cfg, sweep_l, save_trajectories } => {
            cmd_twa_run(&cfg, sweep_l.as_deref(), save_trajectories)
        }
        Command::Analyze { mode, out, transient, max_lag, taper, sizes, omega_min, inputs } => {
            cmd_analyze(&mode, &out, transient, max_lag, &taper, sizes.as_deref(), omega_min, &inputs)
        }
    }
}

fn resolve_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for s in &args.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| RydError::Config(format!("--set expects key=value, got {s:?}")))?;
        cfg.apply(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_resolved_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(cfg)
        .map_err(|e| RydError::Config(format!("config serialization: {e}")))?;
    std::fs::write(dir.join("resolved_config.json"), json + "\n")?;
    Ok(())
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    Ok(s)
}

fn input_hashes_json(inputs: &[PathBuf]) -> Result<serde_json::Value> {
    let mut map = serde_json::Map::new();
    for p in inputs {
        map.insert(p.display().to_string(), sha256_hex(p)?.into());
    }
    Ok(map.into())
}

// ---------------------------------------------------------------- mf-scan

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let err = || RydError::Config(format!("grid must be min:max:steps, got {spec:?}"));
    if parts.len() != 3 {
        return Err(err());
    }
    let min: f64 = parts[0].parse().map_err(|_| err())?;
    let max: f64 = parts[1].parse().map_err(|_| err())?;
    let steps: usize = parts[2].parse().map_err(|_| err())?;
    if steps < 2 || max <= min {
        return Err(RydError::Config(format!("grid needs steps >= 2 and max > min: {spec:?}")));
    }
    Ok((0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.10e}")
    }
}

fn cmd_mf_scan(args: &ConfigArgs, omega_spec: &str, delta_r_spec: &str) -> Result<u8> {
    let cfg = resolve_config(args)?;
    let omegas = parse_grid(omega_spec)?;
    let delta_rs = parse_grid(delta_r_spec)?;
    write_resolved_config(&args.out, &cfg)?;
    let out_path = args.out.join("phase_scan.csv");

    // resumability: completed (omega, delta_r) pairs are keyed by their
    // formatted representation so reruns match bitwise
    let mut done: BTreeSet<(String, String)> = BTreeSet::new();
    let mut existing = String::new();
    if out_path.exists() {
        existing = std::fs::read_to_string(&out_path)?;
        for line in existing.lines().skip(1) {
            let mut it = line.split(',');
            if let (Some(o), Some(d)) = (it.next(), it.next()) {
                done.insert((o.to_string(), d.to_string()));
            }
        }
    }

    let chi = cfg.chi_set();
    let pending: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&o| delta_rs.iter().map(move |&d| (o, d)))
        .filter(|&(o, d)| !done.contains(&(fmt_f(o), fmt_f(d))))
        .collect();

    let rows: Vec<Result<String>> = pending
        .par_iter()
        .map(|&(omega, delta_r)| {
            let mut p = cfg.params();
            p.omega_s = omega;
            p.omega_r = omega;
            p.delta_r = delta_r;
            let report = classify_phase(&p, &chi)?;
            let (period, t_rs) = match &report.lc_series {
                Some(series) => match limit_cycle_metrics(series) {
                    Ok(m) => (m.period, m.t_rs),
                    Err(_) => (f64::NAN, f64::NAN),
                },
                None => (f64::NAN, f64::NAN),
            };
            Ok(format!(
                "{},{},{},{},{},{},{},{}",
                fmt_f(omega),
                fmt_f(delta_r),
                report.label,
                fmt_f(report.lambda0.re),
                fmt_f(report.lambda0.im),
                fmt_f(report.quasicycle_ratio.unwrap_or(f64::NAN)),
                fmt_f(period),
                fmt_f(t_rs)
            ))
        })
        .collect();

    let mut text = if existing.is_empty() {
        "omega,delta_r,phase_label,re_lambda0,im_lambda0,quasicycle_ratio,T,t_rs\n".to_string()
    } else {
        existing
    };
    for row in rows {
        text.push_str(&row?);
        text.push('\n');
    }
    std::fs::write(&out_path, text)?;
    println!("wrote {} ({} new points)", out_path.display(), pending.len());
    Ok(0)
}

// -------------------------------------------------------------- mf-evolve

fn cmd_mf_evolve(args: &ConfigArgs) -> Result<u8> {
    let cfg = resolve_config(args)?;
    write_resolved_config(&args.out, &cfg)?;
    let traj = evolve_mf(&MFState::ground(), &cfg.params(), &cfg.chi_set(), cfg.t_end, cfg.dt)?;
    let pops = traj.populations();
    let mut text = String::from("time,n_s,n_r,f_rs\n");
    for i in 0..pops.len() {
        let f = relative_fraction(pops.n_s[i], pops.n_r[i]).unwrap_or(f64::NAN);
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_f(pops.time(i)),
            fmt_f(pops.n_s[i]),
            fmt_f(pops.n_r[i]),
            fmt_f(f)
        );
    }
    let path = args.out.join("mf_trajectory.csv");
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(0)
}

// -------------------------------------------------------------- exact-run

fn cmd_exact_run(args: &ConfigArgs) -> Result<u8> {
    let cfg = resolve_config(args)?;
    write_resolved_config(&args.out, &cfg)?;
    let lattice = cfg.lattice()?;
    let mut couplings = build_coupling_matrix(&lattice, &cfg.interaction_spec()?, false)?;
    if let Some(n) = cfg.n_atoms {
        if n == 0 || n > couplings.n_sites() {
            return Err(RydError::Config(format!(
                "n_atoms {n} must lie in [1, {}]",
                couplings.n_sites()
            )));
        }
        couplings = couplings.restrict(n);
    }
    let rho0 = DensityMatrix::ground(couplings.n_sites())?;
    let stride = (0.1 / cfg.dt).round().max(1.0) as usize;
    let traj = evolve_exact(&rho0, &cfg.params(), &couplings, cfg.t_end, cfg.dt, stride)?;
    let mut text = String::from("time,site,n_s,n_r\n");
    for (i, &t) in traj.times.iter().enumerate() {
        for (site, &(ns, nr)) in traj.site_pops[i].iter().enumerate() {
            let _ = writeln!(text, "{},{},{},{}", fmt_f(t), site, fmt_f(ns), fmt_f(nr));
        }
    }
    let path = args.out.join("exact_populations.csv");
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(0)
}

// ---------------------------------------------------------------- twa-run

fn cmd_twa_run(args: &ConfigArgs, sweep_l: Option<&str>, save_trajectories: bool) -> Result<u8> {
    let base = resolve_config(args)?;
    let sizes: Vec<usize> = match sweep_l {
        Some(spec) => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| RydError::Config(format!("bad edge length {s:?}")))
            })
            .collect::<Result<_>>()?,
        None => vec![base.edge],
    };
    let mut worst = 0u8;
    for &edge in &sizes {
        let mut cfg = base.clone();
        cfg.edge = edge;
        cfg.validate()?;
        let dir = if sizes.len() == 1 {
            args.out.clone()
        } else {
            args.out.join(format!("L{edge}"))
        };
        let code = twa_run_one(&cfg, &dir, save_trajectories)?;
        worst = worst.max(code);
    }
    Ok(worst)
}

fn twa_run_one(cfg: &RunConfig, dir: &Path, save_trajectories: bool) -> Result<u8> {
    write_resolved_config(dir, cfg)?;
    let lattice = cfg.lattice()?;
    let couplings = build_coupling_matrix(&lattice, &cfg.interaction_spec()?, false)?;
    let mut settings = RunSettings::new(cfg.n_traj, cfg.master_seed, cfg.dt, cfg.t_end);
    settings.snapshot_times = cfg.snapshot_times.clone();
    settings.window_sites = cfg.window_sites()?;
    settings.store_trajectories = save_trajectories;

    let start = Instant::now();
    let result = run_ensemble(&couplings, &cfg.params(), &settings)?;
    let wall = start.elapsed().as_secs_f64();

    let mut text = String::from("time,n_s,n_r,f_rs\n");
    for (k, &t) in result.times.iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_f(t),
            fmt_f(result.n_s[k]),
            fmt_f(result.n_r[k]),
            fmt_f(result.f_rs[k])
        );
    }
    std::fs::write(dir.join("ensemble.csv"), text)?;

    if !result.snapshots.is_empty() {
        let mut text = String::from("site_i,site_j,f_rs_l,time\n");
        for snap in &result.snapshots {
            for (site, &f) in snap.f_rs_sites.iter().enumerate() {
                let (i, j) = lattice.coords(site);
                let _ = writeln!(text, "{i},{j},{},{}", fmt_f(f), fmt_f(snap.time));
            }
        }
        std::fs::write(dir.join("snapshots.csv"), text)?;
    }

    if let Some(window) = &result.traj0_window_f_rs {
        let mut text = String::from("time,f_rs_window,f_rs_whole\n");
        for (k, &t) in result.times.iter().enumerate() {
            let _ = writeln!(
                text,
                "{},{},{}",
                fmt_f(t),
                fmt_f(window[k]),
                fmt_f(result.traj0_f_rs[k])
            );
        }
        std::fs::write(dir.join("window.csv"), text)?;
    }

    if let Some(trajs) = &result.trajectories {
        let traj_dir = dir.join("trajectories");
        std::fs::create_dir_all(&traj_dir)?;
        for (i, pops) in trajs.iter().enumerate() {
            let mut text = String::from("time,n_s,n_r\n");
            for k in 0..pops.len() {
                let _ = writeln!(
                    text,
                    "{},{},{}",
                    fmt_f(pops.time(k)),
                    fmt_f(pops.n_s[k]),
                    fmt_f(pops.n_r[k])
                );
            }
            std::fs::write(traj_dir.join(format!("traj_{i:05}.csv")), text)?;
        }
    }

    let metadata = serde_json::json!({
        "seeds": result.seeds,
        "n_traj_completed": result.n_traj_completed,
        "abort_count": result.aborted,
        "unreliable": result.unreliable,
        "wall_time_s": wall,
        "n_sites": couplings.n_sites(),
    });
    std::fs::write(
        dir.join("run_metadata.json"),
        serde_json::to_string_pretty(&metadata).unwrap() + "\n",
    )?;
    println!(
        "wrote {} ({} trajectories, {} aborted, {:.1}s)",
        dir.display(),
        result.n_traj_completed,
        result.aborted,
        wall
    );
    Ok(if result.unreliable { 3 } else { 0 })
}

// ---------------------------------------------------------------- analyze

/// One population series read back from a CSV with time, n_s, n_r columns.
fn read_series_csv(path: &Path) -> Result<PopSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| RydError::Config(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|&c| c == name)
            .ok_or_else(|| RydError::Config(format!("{}: missing column {name}", path.display())))
    };
    let (ct, cs, cr) = (col("time")?, col("n_s")?, col("n_r")?);
    let mut times = Vec::new();
    let mut n_s = Vec::new();
    let mut n_r = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| RydError::Config(format!("{}: bad row {line:?}", path.display())))
        };
        times.push(parse(ct)?);
        n_s.push(parse(cs)?);
        n_r.push(parse(cr)?);
    }
    if times.len() < 2 {
        return Err(RydError::TooShort { needed: 2, got: times.len() });
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(RydError::MixedDt(dt, w[1] - w[0]));
        }
    }
    Ok(PopSeries { t0: times[0], dt, n_s, n_r })
}

fn read_correlation_csv(path: &Path) -> Result<(CorrelationSeries, CorrelationSeries, CorrelationSeries)> {
    let text = std::fs::read_to_string(path)?;
    let mut lags = Vec::new();
    let mut g = [Vec::new(), Vec::new(), Vec::new()];
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line.split(',').filter_map(|s| s.parse().ok()).collect();
        if f.len() != 4 {
            return Err(RydError::Config(format!("{}: bad row {line:?}", path.display())));
        }
        lags.push(f[0]);
        for k in 0..3 {
            g[k].push(f[k + 1]);
        }
    }
    if lags.len() < 2 {
        return Err(RydError::TooShort { needed: 2, got: lags.len() });
    }
    let dt = lags[1] - lags[0];
    let [grr, grs, gss] = g;
    let mk = |values: Vec<f64>| CorrelationSeries { dt, values, n_traj: 1 };
    Ok((mk(grr), mk(grs), mk(gss)))
}

fn spectrum_csv(spec_r: &Spectrum, spec_s: &Spectrum) -> String {
    let mut text = String::from("omega,F_r,F_s\n");
    for k in 0..spec_r.omega.len() {
        let _ = writeln!(
            text,
            "{},{},{}",
            fmt_f(spec_r.omega[k]),
            fmt_f(spec_r.magnitude[k]),
            fmt_f(spec_s.magnitude[k])
        );
    }
    text
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    mode: &str,
    out: &Path,
    transient: f64,
    max_lag: f64,
    taper: &str,
    sizes: Option<&str>,
    omega_min: f64,
    inputs: &[PathBuf],
) -> Result<u8> {
    if inputs.is_empty() {
        return Err(RydError::Config("analyze needs at least one input".into()));
    }
    std::fs::create_dir_all(out)?;
    let taper = if taper == "cosine" { Taper::Cosine } else { Taper::None };
    let hashes = input_hashes_json(inputs)?;

    match mode {
        "correlate" => {
            let series: Vec<PopSeries> =
                inputs.iter().map(|p| read_series_csv(p)).collect::<Result<_>>()?;
            let dt = series[0].dt;
            for s in &series {
                if (s.dt - dt).abs() > 1e-9 * dt {
                    return Err(RydError::MixedDt(dt, s.dt));
                }
            }
            let pick = |f: fn(&PopSeries) -> &[f64], g: fn(&PopSeries) -> &[f64]| {
                let pairs: Vec<(&[f64], &[f64])> =
                    series.iter().map(|s| (f(s), g(s))).collect();
                ensemble_correlation(&pairs, dt, transient, max_lag)
            };
            let g_rr = pick(|s| &s.n_r, |s| &s.n_r)?;
            let g_rs = pick(|s| &s.n_r, |s| &s.n_s)?;
            let g_ss = pick(|s| &s.n_s, |s| &s.n_s)?;
            let mut text = String::from("lag,G_rr,G_rs,G_ss\n");
            for k in 0..g_rr.values.len() {
                let _ = writeln!(
                    text,
                    "{},{},{},{}",
                    fmt_f(g_rr.lag(k)),
                    fmt_f(g_rr.values[k]),
                    fmt_f(g_rs.values[k]),
                    fmt_f(g_ss.values[k])
                );
            }
            std::fs::write(out.join("correlation.csv"), text)?;
            let envelope = fit_envelope(&g_rr).ok();
            let meta = serde_json::json!({
                "mode": "correlate",
                "n_traj": g_rr.n_traj,
                "transient": transient,
                "max_lag": max_lag,
                "envelope": envelope.map(|e| serde_json::json!({
                    "A": e.amplitude,
                    "tau": if e.tau.is_finite() { Some(e.tau) } else { None },
                    "non_decaying": e.non_decaying,
                    "residual": e.residual,
                    "n_peaks": e.n_peaks,
                })),
                "input_hashes": hashes,
            });
            std::fs::write(
                out.join("correlate_metadata.json"),
                serde_json::to_string_pretty(&meta).unwrap() + "\n",
            )?;
            println!("wrote {}", out.join("correlation.csv").display());
        }
        "spectrum" => {
            let (g_rr, _, g_ss) = read_correlation_csv(&inputs[0])?;
            let spec_r = fourier_spectrum(&g_rr, taper);
            let spec_s = fourier_spectrum(&g_ss, taper);
            std::fs::write(out.join("spectrum.csv"), spectrum_csv(&spec_r, &spec_s))?;
            let peak = dominant_peak(&spec_r, omega_min);
            let meta = serde_json::json!({
                "mode": "spectrum",
                "resolution": spec_r.resolution,
                "peak_omega": peak.map(|p| p.0),
                "peak_magnitude": peak.map(|p| p.1),
                "input_hashes": hashes,
            });
            std::fs::write(
                out.join("spectrum_metadata.json"),
                serde_json::to_string_pretty(&meta).unwrap() + "\n",
            )?;
            println!("wrote {}", out.join("spectrum.csv").display());
        }
        "collapse" => {
            let sizes: Vec<usize> = sizes
                .ok_or_else(|| RydError::Config("collapse needs --sizes".into()))?
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| RydError::Config(format!("bad size {s:?}")))
                })
                .collect::<Result<_>>()?;
            if sizes.len() != inputs.len() {
                return Err(RydError::Config(format!(
                    "{} sizes for {} inputs",
                    sizes.len(),
                    inputs.len()
                )));
            }
            let mut spectra = Vec::new();
            for path in inputs {
                let (g_rr, _, _) = read_correlation_csv(path)?;
                spectra.push(fourier_spectrum(&g_rr, taper));
            }
            let pairs: Vec<(usize, &Spectrum)> =
                sizes.iter().copied().zip(spectra.iter()).collect();
            let report = scaling_collapse(&pairs, omega_min)?;
            let meta = serde_json::json!({
                "mode": "collapse",
                "points": report.points.iter().map(|&(n, w, nf)| serde_json::json!({
                    "N": n, "peak_omega": w, "N_times_F_peak": nf,
                })).collect::<Vec<_>>(),
                "max_deviation": report.max_deviation,
                "collapsed": report.collapsed,
                "input_hashes": hashes,
            });
            std::fs::write(
                out.join("collapse.json"),
                serde_json::to_string_pretty(&meta).unwrap() + "\n",
            )?;
            println!(
                "collapse: {} (max deviation {:.3})",
                if report.collapsed { "yes" } else { "no" },
                report.max_deviation
            );
        }
        "cycle-metrics" => {
            let pops = read_series_csv(&inputs[0])?.after(transient);
            let m = limit_cycle_metrics(&pops)?;
            let meta = serde_json::json!({
                "mode": "cycle-metrics",
                "T": m.period,
                "dt_rs": m.dt_rs,
                "t_rs": m.t_rs,
                "amplitude_s": m.amplitude_s,
                "amplitude_r": m.amplitude_r,
                "input_hashes": hashes,
            });
            std::fs::write(
                out.join("cycle_metrics.json"),
                serde_json::to_string_pretty(&meta).unwrap() + "\n",
            )?;
            println!("T = {:.4}, t_rs = {:.4}", m.period, m.t_rs);
        }
        _ => unreachable!(),
    }
    Ok(0)
}

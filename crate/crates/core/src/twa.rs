//! Stochastic semiclassical lattice dynamics: discrete Wigner sampling for
//! three-level atoms, deterministic drift with site-resolved interaction
//! fields, and quantum-jump resets to freshly sampled ground-state phase
//! points.
//!
//! Between jumps every phase point follows the anticommutator-damped drift
//! plus a compensation term that grows all coordinates at the lattice-averaged
//! jump rate; jumps fire per atom and channel at rate Gamma_a clamp(p_a, 0, 1)
//! and replace the atom with a fresh ground-state sample. The compensation
//! exactly offsets the mean loss from jump resets, so ensemble averages
//! reproduce the exact master equation at the single-atom level (which is what
//! pins the drift/jump split; see the oracle-equivalence tests) while survivor
//! coordinates stay bounded at lattice scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, RydError};
use crate::model::{CouplingMatrix, SystemParams};
use crate::series::PopSeries;

/// Per-atom phase point: populations p_s, p_r (p_g implicit via trace) and
/// the six coherence quadratures.
pub type AtomPhasePoint = [f64; 8];

pub const P_S: usize = 0;
pub const P_R: usize = 1;
pub const X_GS: usize = 2;
pub const Y_GS: usize = 3;
pub const X_GR: usize = 4;
pub const Y_GR: usize = 5;
pub const X_SR: usize = 6;
pub const Y_SR: usize = 7;

/// Runtime guard: quadratures beyond this magnitude abort the trajectory.
pub const DIVERGENCE_GUARD: f64 = 10.0;

/// Ground-state discrete Wigner sample: exact populations, g<->s and g<->r
/// quadratures independently +-1, s<->r quadratures zero.
pub fn sample_ground_atom(rng: &mut ChaCha8Rng) -> AtomPhasePoint {
    let mut atom = [0.0; 8];
    for q in [X_GS, Y_GS, X_GR, Y_GR] {
        atom[q] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }
    atom
}

/// One stochastic trajectory: per-atom phase points plus the trajectory RNG.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub clock: f64,
    pub atoms: Vec<AtomPhasePoint>,
    pub rng: ChaCha8Rng,
}

/// Counter-based seed split: trajectory i gets an independent stream from
/// (master_seed, i) through splitmix64.
pub fn split_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fresh trajectory with every atom drawn from the ground-state Wigner
/// distribution.
pub fn sample_initial(n_atoms: usize, seed: u64) -> TrajectoryState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..n_atoms).map(|_| sample_ground_atom(&mut rng)).collect();
    TrajectoryState { clock: 0.0, atoms, rng }
}

/// Site-resolved shifts (h_s^l, h_r^l) = 2 sum_{k != l} (V_ab p_b^k ...),
/// written into `out`.
pub fn interaction_fields(
    atoms: &[AtomPhasePoint],
    couplings: &CouplingMatrix,
    out: &mut Vec<(f64, f64)>,
) {
    let n = atoms.len();
    out.clear();
    if let Some([v_ss, v_rr, v_sr]) = couplings.uniform() {
        let (sum_s, sum_r) = atoms
            .iter()
            .fold((0.0, 0.0), |(a, b), at| (a + at[P_S], b + at[P_R]));
        for at in atoms {
            let (os, or) = (sum_s - at[P_S], sum_r - at[P_R]);
            out.push((2.0 * (v_ss * os + v_sr * or), 2.0 * (v_rr * or + v_sr * os)));
        }
    } else {
        for l in 0..n {
            let mut hs = 0.0;
            let mut hr = 0.0;
            for &(k, [v_ss, v_rr, v_sr]) in couplings.neighbors_of(l) {
                let (ps, pr) = (atoms[k][P_S], atoms[k][P_R]);
                hs += v_ss * ps + v_sr * pr;
                hr += v_rr * pr + v_sr * ps;
            }
            out.push((2.0 * hs, 2.0 * hr));
        }
    }
}

/// How the dissipator is split between deterministic drift and stochastic
/// jumps. All variants share the jump rate Gamma_a * clamp(p_a, 0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Single-atom Lindblad drift (decayed population recycles through the
    /// implicit ground population); jumps resample only the coherence
    /// quadratures, leaving populations on the exact mean flow.
    CoherenceReset,
    /// Lindblad drift plus a per-atom counter-term cancelling the mean
    /// damage of full-reset jumps (normalized-trajectory unraveling).
    /// Exactly unbiased, but survivor phase points grow without bound.
    FullReset,
    /// Like FullReset but the counter-term uses the lattice-averaged jump
    /// rate; exact at N = 1, mean-field-consistent at large N.
    MeanCompensated,
    /// Full-reset jumps with no counter-term (decay double-counted).
    Uncompensated,
}

#[inline]
fn atom_drift(
    atom: &AtomPhasePoint,
    params: &SystemParams,
    h_s: f64,
    h_r: f64,
    comp: f64,
) -> [f64; 8] {
    let [ps, pr, x1, y1, x2, y2, x3, y3] = *atom;
    let pg = 1.0 - ps - pr;
    let es = h_s - params.delta_s;
    let er = h_r - params.delta_r;
    let u = params.omega_s / 2.0;
    let w = params.omega_r / 2.0;
    let (gs, gr) = (params.gamma_s, params.gamma_r);
    [
        -u * y1 + (comp - gs) * ps,
        -w * y2 + (comp - gr) * pr,
        es * y1 + w * y3 + (comp - 0.5 * gs) * x1,
        -2.0 * u * (pg - ps) - es * x1 + w * x3 + (comp - 0.5 * gs) * y1,
        er * y2 - u * y3 + (comp - 0.5 * gr) * x2,
        -2.0 * w * (pg - pr) - er * x2 + u * x3 + (comp - 0.5 * gr) * y2,
        -w * y1 - u * y2 + (er - es) * y3 + (comp - 0.5 * (gs + gr)) * x3,
        -w * x1 + u * x2 - (er - es) * x3 + (comp - 0.5 * (gs + gr)) * y3,
    ]
}

/// Clamped local jump rate Gamma_s p_s + Gamma_r p_r of one atom.
#[inline]
fn jump_rate(atom: &AtomPhasePoint, params: &SystemParams) -> f64 {
    params.gamma_s * atom[P_S].clamp(0.0, 1.0) + params.gamma_r * atom[P_R].clamp(0.0, 1.0)
}

/// Deterministic drift of every atom under site-resolved fields.
pub fn drift(
    atoms: &[AtomPhasePoint],
    couplings: &CouplingMatrix,
    params: &SystemParams,
    scheme: Scheme,
    fields: &mut Vec<(f64, f64)>,
    out: &mut Vec<[f64; 8]>,
) {
    interaction_fields(atoms, couplings, fields);
    let mean_rate = match scheme {
        Scheme::MeanCompensated => {
            atoms.iter().map(|a| jump_rate(a, params)).sum::<f64>() / atoms.len() as f64
        }
        _ => 0.0,
    };
    out.clear();
    for (atom, &(h_s, h_r)) in atoms.iter().zip(fields.iter()) {
        let comp = match scheme {
            Scheme::CoherenceReset | Scheme::Uncompensated => 0.0,
            Scheme::FullReset => jump_rate(atom, params),
            Scheme::MeanCompensated => mean_rate,
        };
        out.push(atom_drift(atom, params, h_s, h_r, comp));
    }
}

/// Scratch buffers for the RK4 stepper.
struct StepBuffers {
    fields: Vec<(f64, f64)>,
    k1: Vec<[f64; 8]>,
    k2: Vec<[f64; 8]>,
    k3: Vec<[f64; 8]>,
    k4: Vec<[f64; 8]>,
    tmp: Vec<AtomPhasePoint>,
}

impl StepBuffers {
    fn new(n: usize) -> Self {
        Self {
            fields: Vec::with_capacity(n),
            k1: Vec::with_capacity(n),
            k2: Vec::with_capacity(n),
            k3: Vec::with_capacity(n),
            k4: Vec::with_capacity(n),
            tmp: vec![[0.0; 8]; n],
        }
    }
}

/// One RK4 drift substep followed by per-atom, per-channel jump decisions.
/// Returns Err on divergence-guard breach.
fn step(
    state: &mut TrajectoryState,
    couplings: &CouplingMatrix,
    params: &SystemParams,
    scheme: Scheme,
    dt: f64,
    bufs: &mut StepBuffers,
) -> std::result::Result<(), ()> {
    let n = state.atoms.len();
    drift(&state.atoms, couplings, params, scheme, &mut bufs.fields, &mut bufs.k1);
    for l in 0..n {
        for q in 0..8 {
            bufs.tmp[l][q] = state.atoms[l][q] + 0.5 * dt * bufs.k1[l][q];
        }
    }
    drift(&bufs.tmp, couplings, params, scheme, &mut bufs.fields, &mut bufs.k2);
    for l in 0..n {
        for q in 0..8 {
            bufs.tmp[l][q] = state.atoms[l][q] + 0.5 * dt * bufs.k2[l][q];
        }
    }
    drift(&bufs.tmp, couplings, params, scheme, &mut bufs.fields, &mut bufs.k3);
    for l in 0..n {
        for q in 0..8 {
            bufs.tmp[l][q] = state.atoms[l][q] + dt * bufs.k3[l][q];
        }
    }
    drift(&bufs.tmp, couplings, params, scheme, &mut bufs.fields, &mut bufs.k4);
    for l in 0..n {
        for q in 0..8 {
            state.atoms[l][q] += dt / 6.0
                * (bufs.k1[l][q] + 2.0 * bufs.k2[l][q] + 2.0 * bufs.k3[l][q] + bufs.k4[l][q]);
        }
    }

    // quantum jumps: rate Gamma_a clamp(p_a) per channel; a jump destroys
    // the atom's coherences by resampling them from the ground-state rule
    // (and, except in CoherenceReset, also returns its populations to g)
    for l in 0..n {
        let mut jumped = false;
        for (pidx, gamma) in [(P_S, params.gamma_s), (P_R, params.gamma_r)] {
            let p = state.atoms[l][pidx].clamp(0.0, 1.0);
            let prob = 1.0 - (-gamma * p * dt).exp();
            if state.rng.gen::<f64>() < prob && !jumped {
                let fresh = sample_ground_atom(&mut state.rng);
                match scheme {
                    Scheme::CoherenceReset => {
                        state.atoms[l][X_GS..=Y_SR].copy_from_slice(&fresh[X_GS..=Y_SR]);
                    }
                    _ => state.atoms[l] = fresh,
                }
                jumped = true;
            }
        }
        if !jumped {
            let a = &state.atoms[l];
            if a.iter().any(|x| !x.is_finite())
                || a[2..].iter().any(|x| x.abs() > DIVERGENCE_GUARD)
            {
                return Err(());
            }
        }
    }
    state.clock += dt;
    Ok(())
}

/// Site-averaged relative fraction of one phase-point configuration, with
/// populations clamped to [0, inf) and near-empty sites excluded.
fn config_f_rs(atoms: &[AtomPhasePoint], sites: Option<&[usize]>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut eval = |at: &AtomPhasePoint| {
        let ps = at[P_S].max(0.0);
        let pr = at[P_R].max(0.0);
        if ps + pr >= 1e-9 {
            sum += (pr - ps) / (pr + ps);
            count += 1;
        }
    };
    match sites {
        Some(idx) => idx.iter().for_each(|&l| eval(&atoms[l])),
        None => atoms.iter().for_each(|at| eval(at)),
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Per-site relative fractions of one configuration (NaN for empty sites).
fn site_f_rs(atoms: &[AtomPhasePoint]) -> Vec<f64> {
    atoms
        .iter()
        .map(|at| {
            let ps = at[P_S].max(0.0);
            let pr = at[P_R].max(0.0);
            if ps + pr >= 1e-9 {
                (pr - ps) / (pr + ps)
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Knobs of one ensemble run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunSettings {
    pub n_traj: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub t_end: f64,
    /// Record every `sample_stride` steps.
    pub sample_stride: usize,
    /// Times at which trajectory 0 records per-site snapshots.
    pub snapshot_times: Vec<f64>,
    /// Site indices of the subsystem window, if windowed observables are
    /// requested.
    #[serde(skip)]
    pub window_sites: Option<Vec<usize>>,
    /// Keep per-trajectory population series (needed for correlation
    /// analysis).
    pub store_trajectories: bool,
    /// Drift/jump split; see [`Scheme`].
    #[serde(skip)]
    pub scheme: Scheme,
}

impl RunSettings {
    pub fn new(n_traj: usize, master_seed: u64, dt: f64, t_end: f64) -> Self {
        Self {
            n_traj,
            master_seed,
            dt,
            t_end,
            sample_stride: 1,
            snapshot_times: Vec::new(),
            window_sites: None,
            store_trajectories: false,
            scheme: Scheme::MeanCompensated,
        }
    }
}

/// Per-site snapshot of the relative fraction from a single trajectory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub f_rs_sites: Vec<f64>,
}

/// Ensemble-averaged output of a run.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub dt_sample: f64,
    pub times: Vec<f64>,
    pub n_s: Vec<f64>,
    pub n_r: Vec<f64>,
    pub f_rs: Vec<f64>,
    /// Whole-system f_rs of trajectory 0 (single-shot, not ensemble mean).
    pub traj0_f_rs: Vec<f64>,
    /// Windowed f_rs of trajectory 0, when a window was requested.
    pub traj0_window_f_rs: Option<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub seeds: Vec<u64>,
    pub n_traj_completed: usize,
    pub aborted: usize,
    /// More than 1% of trajectories aborted.
    pub unreliable: bool,
    pub trajectories: Option<Vec<PopSeries>>,
    /// Windowed per-trajectory population series, parallel to
    /// `trajectories`.
    pub window_trajectories: Option<Vec<PopSeries>>,
}

struct TrajOutput {
    n_s: Vec<f64>,
    n_r: Vec<f64>,
    f_rs: Vec<f64>,
    window_n_s: Vec<f64>,
    window_n_r: Vec<f64>,
    window_f_rs: Vec<f64>,
    snapshots: Vec<Snapshot>,
}

fn run_trajectory(
    couplings: &CouplingMatrix,
    params: &SystemParams,
    settings: &RunSettings,
    seed: u64,
    record_snapshots: bool,
) -> Option<TrajOutput> {
    let n = couplings.n_sites();
    let n_steps = (settings.t_end / settings.dt).ceil() as usize;
    let stride = settings.sample_stride.max(1);
    let window = settings.window_sites.as_deref();

    let mut state = sample_initial(n, seed);
    let mut bufs = StepBuffers::new(n);
    let mut out = TrajOutput {
        n_s: Vec::with_capacity(n_steps / stride + 2),
        n_r: Vec::with_capacity(n_steps / stride + 2),
        f_rs: Vec::with_capacity(n_steps / stride + 2),
        window_n_s: Vec::new(),
        window_n_r: Vec::new(),
        window_f_rs: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut snap_steps: Vec<usize> = settings
        .snapshot_times
        .iter()
        .map(|&t| ((t / settings.dt).round() as usize).min(n_steps))
        .collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let record = |state: &TrajectoryState, out: &mut TrajOutput| {
        let inv = 1.0 / n as f64;
        let (mut s, mut r) = (0.0, 0.0);
        for at in &state.atoms {
            s += at[P_S];
            r += at[P_R];
        }
        out.n_s.push(s * inv);
        out.n_r.push(r * inv);
        out.f_rs.push(config_f_rs(&state.atoms, None));
        if let Some(w) = window {
            let (mut ws, mut wr) = (0.0, 0.0);
            for &l in w {
                ws += state.atoms[l][P_S];
                wr += state.atoms[l][P_R];
            }
            out.window_n_s.push(ws / w.len() as f64);
            out.window_n_r.push(wr / w.len() as f64);
            out.window_f_rs.push(config_f_rs(&state.atoms, Some(w)));
        }
    };

    record(&state, &mut out);
    if record_snapshots && snap_steps.contains(&0) {
        out.snapshots.push(Snapshot { time: 0.0, f_rs_sites: site_f_rs(&state.atoms) });
    }
    for s in 1..=n_steps {
        if step(&mut state, couplings, params, settings.scheme, settings.dt, &mut bufs).is_err() {
            return None;
        }
        if s % stride == 0 {
            record(&state, &mut out);
        }
        if record_snapshots && snap_steps.binary_search(&s).is_ok() {
            out.snapshots
                .push(Snapshot { time: state.clock, f_rs_sites: site_f_rs(&state.atoms) });
        }
    }
    Some(out)
}

/// Run n_traj independent trajectories with counter-split seeds and merge
/// their observables in trajectory order (bitwise deterministic regardless
/// of scheduling).
pub fn run_ensemble(
    couplings: &CouplingMatrix,
    params: &SystemParams,
    settings: &RunSettings,
) -> Result<EnsembleResult> {
    params.validate()?;
    if settings.n_traj == 0 {
        return Err(RydError::Config("n_traj must be >= 1".into()));
    }
    let gamma_max = params.gamma_s.max(params.gamma_r);
    if gamma_max * settings.dt >= 0.05 {
        return Err(RydError::Config(format!(
            "Gamma_max * dt = {} must be < 0.05",
            gamma_max * settings.dt
        )));
    }
    let seeds: Vec<u64> =
        (0..settings.n_traj).map(|i| split_seed(settings.master_seed, i as u64)).collect();

    let outputs: Vec<Option<TrajOutput>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| run_trajectory(couplings, params, settings, seed, i == 0))
        .collect();

    let n_samples = (settings.t_end / settings.dt).ceil() as usize
        / settings.sample_stride.max(1)
        + 1;
    let dt_sample = settings.dt * settings.sample_stride.max(1) as f64;

    let mut n_s = vec![0.0; n_samples];
    let mut n_r = vec![0.0; n_samples];
    let mut f_rs = vec![0.0; n_samples];
    let mut traj0_f_rs = Vec::new();
    let mut traj0_window_f_rs = None;
    let mut snapshots = Vec::new();
    let mut trajectories = settings.store_trajectories.then(Vec::new);
    let mut window_trajectories =
        (settings.store_trajectories && settings.window_sites.is_some()).then(Vec::new);
    let mut completed = 0usize;

    for (i, out) in outputs.into_iter().enumerate() {
        let Some(out) = out else { continue };
        completed += 1;
        for k in 0..n_samples {
            n_s[k] += out.n_s[k];
            n_r[k] += out.n_r[k];
            f_rs[k] += out.f_rs[k];
        }
        if i == 0 {
            traj0_f_rs = out.f_rs.clone();
            if settings.window_sites.is_some() {
                traj0_window_f_rs = Some(out.window_f_rs.clone());
            }
            snapshots = out.snapshots;
        }
        if let Some(trajs) = trajectories.as_mut() {
            trajs.push(PopSeries { t0: 0.0, dt: dt_sample, n_s: out.n_s, n_r: out.n_r });
        }
        if let Some(wtrajs) = window_trajectories.as_mut() {
            wtrajs.push(PopSeries {
                t0: 0.0,
                dt: dt_sample,
                n_s: out.window_n_s,
                n_r: out.window_n_r,
            });
        }
    }
    if completed == 0 {
        return Err(RydError::Config("all trajectories aborted".into()));
    }
    let inv = 1.0 / completed as f64;
    for k in 0..n_samples {
        n_s[k] *= inv;
        n_r[k] *= inv;
        f_rs[k] *= inv;
    }
    let aborted = settings.n_traj - completed;
    let unreliable = aborted as f64 > 0.01 * settings.n_traj as f64;

    Ok(EnsembleResult {
        dt_sample,
        times: (0..n_samples).map(|k| k as f64 * dt_sample).collect(),
        n_s,
        n_r,
        f_rs,
        traj0_f_rs,
        traj0_window_f_rs,
        snapshots,
        seeds,
        n_traj_completed: completed,
        aborted,
        unreliable,
        trajectories,
        window_trajectories,
    })
}

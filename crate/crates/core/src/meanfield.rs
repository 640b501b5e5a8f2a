//! Mean-field dynamics and bifurcation analysis: equations of motion under
//! the factorized ansatz, fixed points, 8x8 Jacobian eigenspectra, phase
//! classification, and limit-cycle metrics.

use nalgebra::{Complex, SMatrix, SVector};
use num_complex::Complex64 as C64;

use crate::error::{Result, RydError};
use crate::mat3::{Mat3, G, R, S};
use crate::model::{mean_field_shifts, single_atom_hamiltonian, ChiSet, SystemParams};
use crate::series::{local_maxima, moving_average, peak_times, PopSeries};

type V8 = SVector<f64, 8>;
type M8 = SMatrix<f64, 8, 8>;

/// Single-atom 3x3 Hermitian trace-1 density matrix carrying the collective
/// expectation values sigma^ab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MFState {
    rho: Mat3,
}

impl MFState {
    pub fn ground() -> Self {
        Self { rho: Mat3::pure(G) }
    }

    pub fn from_rho(rho: Mat3) -> Self {
        Self { rho }
    }

    /// Reconstruct from the 8 real coordinates
    /// (n_s, n_r, Re/Im sigma^gs, Re/Im sigma^gr, Re/Im sigma^sr) with
    /// sigma^gg fixed by the trace constraint.
    pub fn from_coords(v: &[f64; 8]) -> Self {
        let mut rho = Mat3::zeros();
        rho.0[G][G] = C64::new(1.0 - v[0] - v[1], 0.0);
        rho.0[S][S] = C64::new(v[0], 0.0);
        rho.0[R][R] = C64::new(v[1], 0.0);
        rho.0[S][G] = C64::new(v[2], v[3]);
        rho.0[G][S] = rho.0[S][G].conj();
        rho.0[R][G] = C64::new(v[4], v[5]);
        rho.0[G][R] = rho.0[R][G].conj();
        rho.0[R][S] = C64::new(v[6], v[7]);
        rho.0[S][R] = rho.0[R][S].conj();
        Self { rho }
    }

    pub fn coords(&self) -> [f64; 8] {
        [
            self.rho.0[S][S].re,
            self.rho.0[R][R].re,
            self.rho.0[S][G].re,
            self.rho.0[S][G].im,
            self.rho.0[R][G].re,
            self.rho.0[R][G].im,
            self.rho.0[R][S].re,
            self.rho.0[R][S].im,
        ]
    }

    pub fn rho(&self) -> &Mat3 {
        &self.rho
    }

    /// sigma^ab = rho[b][a].
    pub fn sigma(&self, a: usize, b: usize) -> C64 {
        self.rho.0[b][a]
    }

    pub fn n_s(&self) -> f64 {
        self.rho.0[S][S].re
    }

    pub fn n_r(&self) -> f64 {
        self.rho.0[R][R].re
    }

    pub fn trace_defect(&self) -> f64 {
        (self.rho.trace() - C64::new(1.0, 0.0)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho.hermitian_eigenvalues()[0]
    }
}

/// Mean-field equation of motion: drho/dt = -i[H_mf, rho] + D[rho], with
/// self-consistent shifts evaluated at the state's own populations. The
/// returned derivative is traceless and Hermitian.
pub fn mf_rhs(state: &MFState, params: &SystemParams, chi: &ChiSet) -> Mat3 {
    let rho = state.rho();
    let (h_s, h_r) = mean_field_shifts(state.n_s(), state.n_r(), chi);
    let h = single_atom_hamiltonian(params, h_s, h_r);
    let mut d = h.commutator(rho).scale(C64::new(0.0, -1.0));
    for (a, gamma) in [(S, params.gamma_s), (R, params.gamma_r)] {
        // L = |g><a|: jump feeds |g><g|, anticommutator damps level a.
        let p = Mat3::projector(a);
        d.0[G][G] += C64::new(gamma, 0.0) * rho.0[a][a];
        d = d.sub(&p.anticommutator(rho).scale_re(gamma / 2.0));
    }
    d
}

/// Equation of motion in the 8 real coordinates (hot path; agrees with
/// `mf_rhs` entrywise, see tests).
pub fn mf_rhs_coords(v: &[f64; 8], params: &SystemParams, chi: &ChiSet) -> [f64; 8] {
    let (ps, pr) = (v[0], v[1]);
    let a = C64::new(v[2], v[3]); // sigma^gs = rho_sg
    let b = C64::new(v[4], v[5]); // sigma^gr = rho_rg
    let c = C64::new(v[6], v[7]); // sigma^sr = rho_rs
    let pg = 1.0 - ps - pr;
    let (h_s, h_r) = mean_field_shifts(ps, pr, chi);
    let es = h_s - params.delta_s;
    let er = h_r - params.delta_r;
    let u = params.omega_s / 2.0;
    let w = params.omega_r / 2.0;
    let i = C64::new(0.0, 1.0);

    let dps = -2.0 * u * a.im - params.gamma_s * ps;
    let dpr = -2.0 * w * b.im - params.gamma_r * pr;
    let da = -i * (u * (pg - ps) + es * a - w * c.conj()) - 0.5 * params.gamma_s * a;
    let db = -i * (w * (pg - pr) + er * b - u * c) - 0.5 * params.gamma_r * b;
    let dc = -i * (w * a.conj() - u * b + (er - es) * c)
        - 0.5 * (params.gamma_s + params.gamma_r) * c;

    [dps, dpr, da.re, da.im, db.re, db.im, dc.re, dc.im]
}

/// Uniform-grid mean-field trajectory.
#[derive(Debug, Clone)]
pub struct MfTrajectory {
    pub dt: f64,
    pub coords: Vec<[f64; 8]>,
}

impl MfTrajectory {
    pub fn populations(&self) -> PopSeries {
        PopSeries {
            t0: 0.0,
            dt: self.dt,
            n_s: self.coords.iter().map(|v| v[0]).collect(),
            n_r: self.coords.iter().map(|v| v[1]).collect(),
        }
    }

    pub fn final_state(&self) -> MFState {
        MFState::from_coords(self.coords.last().expect("nonempty trajectory"))
    }

    pub fn state(&self, i: usize) -> MFState {
        MFState::from_coords(&self.coords[i])
    }
}

fn rk4_step(v: &[f64; 8], dt: f64, params: &SystemParams, chi: &ChiSet) -> [f64; 8] {
    let add = |x: &[f64; 8], k: &[f64; 8], h: f64| {
        let mut y = *x;
        for i in 0..8 {
            y[i] += h * k[i];
        }
        y
    };
    let k1 = mf_rhs_coords(v, params, chi);
    let k2 = mf_rhs_coords(&add(v, &k1, dt / 2.0), params, chi);
    let k3 = mf_rhs_coords(&add(v, &k2, dt / 2.0), params, chi);
    let k4 = mf_rhs_coords(&add(v, &k3, dt), params, chi);
    let mut y = *v;
    for i in 0..8 {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    y
}

/// Fixed-step RK4 propagation on a uniform grid with step <= dt_max.
///
/// The trace constraint is structural (sigma^gg is eliminated); Hermiticity
/// holds by construction of the coordinates. Blow-up of the coordinates is
/// reported as a step-size diagnostic.
pub fn evolve_mf(
    state0: &MFState,
    params: &SystemParams,
    chi: &ChiSet,
    t_end: f64,
    dt_max: f64,
) -> Result<MfTrajectory> {
    if !(t_end > 0.0) || !(dt_max > 0.0) {
        return Err(RydError::Config("t_end and dt_max must be positive".into()));
    }
    let n_steps = (t_end / dt_max).ceil() as usize;
    let dt = t_end / n_steps as f64;
    let mut coords = Vec::with_capacity(n_steps + 1);
    let mut v = state0.coords();
    coords.push(v);
    for step in 0..n_steps {
        v = rk4_step(&v, dt, params, chi);
        if v.iter().any(|x| !x.is_finite() || x.abs() > 1e3) {
            return Err(RydError::TraceDrift {
                drift: f64::INFINITY,
                tol: 1e-6,
                t: (step + 1) as f64 * dt,
            });
        }
        coords.push(v);
    }
    Ok(MfTrajectory { dt, coords })
}

/// A mean-field fixed point with its residual ||mf_rhs||.
#[derive(Debug, Clone, Copy)]
pub struct FixedPoint {
    pub state: MFState,
    pub residual: f64,
}

fn fd_jacobian(v: &V8, params: &SystemParams, chi: &ChiSet, h: f64) -> M8 {
    let mut j = M8::zeros();
    for col in 0..8 {
        let mut vp: [f64; 8] = (*v).into();
        let mut vm = vp;
        vp[col] += h;
        vm[col] -= h;
        let fp = mf_rhs_coords(&vp, params, chi);
        let fm = mf_rhs_coords(&vm, params, chi);
        for row in 0..8 {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

fn newton(start: [f64; 8], params: &SystemParams, chi: &ChiSet) -> Option<(MFState, f64)> {
    let mut v = V8::from_column_slice(&start);
    for _ in 0..100 {
        let arr: [f64; 8] = v.into();
        let f = V8::from_column_slice(&mf_rhs_coords(&arr, params, chi));
        if f.norm() < 1e-13 {
            break;
        }
        let j = fd_jacobian(&v, params, chi, 1e-6);
        let dv = j.lu().solve(&(-f))?;
        v += dv;
        if v.amax() > 10.0 || v.iter().any(|x| !x.is_finite()) {
            return None;
        }
    }
    let arr: [f64; 8] = v.into();
    let res = V8::from_column_slice(&mf_rhs_coords(&arr, params, chi)).norm();
    if res < 1e-10 {
        Some((MFState::from_coords(&arr), res))
    } else {
        None
    }
}

/// Newton iteration from a deterministic grid of initial mixtures of
/// |g>, |s>, |r> with small coherence seeds; returns deduplicated physical
/// roots with residual < 1e-10.
pub fn find_fixed_points(
    params: &SystemParams,
    chi: &ChiSet,
    n_starts: usize,
) -> Result<Vec<FixedPoint>> {
    if n_starts < 8 {
        return Err(RydError::Config("n_starts must be >= 8".into()));
    }
    let pops = [0.0, 0.3, 0.6];
    let seeds = [0.0, 0.05, -0.05];
    let mut starts: Vec<[f64; 8]> = Vec::new();
    'outer: for extra in 0.. {
        for &ns in &pops {
            for &nr in &pops {
                for &c in &seeds {
                    if starts.len() >= n_starts.max(27) {
                        break 'outer;
                    }
                    // past the base 27 grid, shift populations deterministically
                    let off = 0.1 * extra as f64;
                    starts.push([ns + off, nr + off, c, 0.0, c, 0.0, 0.0, 0.0]);
                }
            }
        }
    }

    let mut roots: Vec<FixedPoint> = Vec::new();
    for start in starts {
        let Some((state, residual)) = newton(start, params, chi) else {
            continue;
        };
        // discard unphysical roots
        if state.min_eigenvalue() < -1e-6 {
            continue;
        }
        let c = state.coords();
        if c[0] < -1e-8 || c[1] < -1e-8 || c[0] + c[1] > 1.0 + 1e-8 {
            continue;
        }
        let dup = roots.iter().any(|r| {
            let rc = r.state.coords();
            c.iter().zip(rc.iter()).all(|(x, y)| (x - y).abs() < 1e-6)
        });
        if !dup {
            roots.push(FixedPoint { state, residual });
        }
    }
    if roots.is_empty() {
        return Err(RydError::NoFixedPoint);
    }
    Ok(roots)
}

/// Eigenvalues of a real Jacobian, sorted descending by real part with
/// conjugate pairs adjacent (positive imaginary part first).
#[derive(Debug, Clone)]
pub struct EigenSpectrum {
    pub eigenvalues: Vec<C64>,
}

impl EigenSpectrum {
    pub fn from_matrix8(j: &M8) -> Self {
        let ev = j.complex_eigenvalues();
        let mut eigenvalues: Vec<C64> =
            ev.iter().map(|z: &Complex<f64>| C64::new(z.re, z.im)).collect();
        eigenvalues.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap()
                .then(a.im.abs().partial_cmp(&b.im.abs()).unwrap())
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
        Self { eigenvalues }
    }

    pub fn lambda0(&self) -> C64 {
        self.eigenvalues[0]
    }

    /// Largest distance from any eigenvalue to the nearest conjugate of
    /// another; zero for a spectrum closed under conjugation.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| {
                self.eigenvalues
                    .iter()
                    .map(|w| (w - z.conj()).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// 8x8 Jacobian of the mean-field flow at a fixed point, by central finite
/// differences validated against a second stencil.
pub fn jacobian(fp: &MFState, params: &SystemParams, chi: &ChiSet) -> Result<M8> {
    let v = V8::from_column_slice(&fp.coords());
    let j1 = fd_jacobian(&v, params, chi, 1e-6);
    let j2 = fd_jacobian(&v, params, chi, 1e-5);
    let disagreement = (j1 - j2).amax();
    if disagreement > 1e-4 {
        return Err(RydError::IllConditioned(disagreement));
    }
    Ok(j1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PhaseLabel {
    MonostableSta,
    PureLc,
    CoexistStaLc,
    BistableSta,
    /// Oscillation amplitude inside the ambiguous band; not classified.
    Indeterminate,
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PhaseLabel::MonostableSta => "MonostableSTA",
            PhaseLabel::PureLc => "PureLC",
            PhaseLabel::CoexistStaLc => "CoexistSTA_LC",
            PhaseLabel::BistableSta => "BistableSTA",
            PhaseLabel::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

/// A fixed point with its linear stability data.
#[derive(Debug, Clone)]
pub struct ClassifiedFixedPoint {
    pub fp: FixedPoint,
    pub spectrum: EigenSpectrum,
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub label: PhaseLabel,
    pub fixed_points: Vec<ClassifiedFixedPoint>,
    /// -|Im lambda0| / Re lambda0 of the dominant stable fixed point.
    pub quasicycle_ratio: Option<f64>,
    /// lambda0 of the dominant fixed point (stable one if any, else the
    /// fixed point with largest Re lambda0).
    pub lambda0: C64,
    /// Peak-to-peak n_r amplitude of the largest detected oscillation.
    pub oscillation_amplitude: f64,
    /// Second half of the trajectory that detected the limit cycle.
    pub lc_series: Option<PopSeries>,
}

const LC_AMPLITUDE_MIN: f64 = 1e-3;
const LC_AMBIGUOUS_MIN: f64 = 1e-4;
const LC_POINCARE_TOL: f64 = 1e-4;
const LC_T_END: f64 = 200.0;
const LC_DT: f64 = 5e-3;

fn lc_probe_states() -> [MFState; 4] {
    [
        MFState::ground(),
        MFState::from_coords(&[0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        MFState::from_coords(&[0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        MFState::from_coords(&[0.25, 0.25, 0.05, 0.0, 0.05, 0.0, 0.0, 0.0]),
    ]
}

/// Combine fixed-point stability with limit-cycle detection from spread
/// initial conditions.
pub fn classify_phase(params: &SystemParams, chi: &ChiSet) -> Result<PhaseReport> {
    params.validate()?;
    let fps = find_fixed_points(params, chi, 27)?;
    let mut classified = Vec::with_capacity(fps.len());
    for fp in fps {
        let j = jacobian(&fp.state, params, chi)?;
        let spectrum = EigenSpectrum::from_matrix8(&j);
        let stable = spectrum.lambda0().re < 0.0;
        classified.push(ClassifiedFixedPoint { fp, spectrum, stable });
    }

    let mut lc = false;
    let mut ambiguous = false;
    let mut best_amp = 0.0f64;
    let mut lc_series = None;
    for ic in lc_probe_states() {
        let traj = evolve_mf(&ic, params, chi, LC_T_END, LC_DT)?;
        let pops = traj.populations().after(LC_T_END / 2.0);
        let amp = pops.n_r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - pops.n_r.iter().cloned().fold(f64::INFINITY, f64::min);
        if amp > best_amp {
            best_amp = amp;
        }
        if amp > LC_AMPLITUDE_MIN {
            // successive Poincare returns: values at the n_r maxima
            let peaks = local_maxima(&pops.n_r);
            if peaks.len() >= 3 {
                let tail: Vec<f64> =
                    peaks.iter().rev().take(3).map(|&i| pops.n_r[i]).collect();
                let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - tail.iter().cloned().fold(f64::INFINITY, f64::min);
                // a slowly decaying spiral toward a weak focus can pass the
                // return test; a genuine cycle keeps its peak height, so
                // also require a non-decaying envelope across the window
                let mean = pops.n_r.iter().sum::<f64>() / pops.n_r.len() as f64;
                let h_first = pops.n_r[peaks[0]] - mean;
                let h_last = pops.n_r[*peaks.last().unwrap()] - mean;
                let sustained = h_first <= 0.0 || h_last >= 0.95 * h_first;
                if spread < LC_POINCARE_TOL && sustained {
                    lc = true;
                    if lc_series.is_none() {
                        lc_series = Some(pops);
                    }
                }
            }
        } else if amp > LC_AMBIGUOUS_MIN {
            ambiguous = true;
        }
    }

    let n_stable = classified.iter().filter(|c| c.stable).count();
    let label = if lc {
        if n_stable == 0 {
            PhaseLabel::PureLc
        } else {
            PhaseLabel::CoexistStaLc
        }
    } else if ambiguous && n_stable == 0 {
        PhaseLabel::Indeterminate
    } else if n_stable == 2 {
        PhaseLabel::BistableSta
    } else if n_stable >= 1 {
        PhaseLabel::MonostableSta
    } else {
        PhaseLabel::Indeterminate
    };

    let dominant_stable = classified
        .iter()
        .filter(|c| c.stable)
        .max_by(|a, b| a.spectrum.lambda0().re.partial_cmp(&b.spectrum.lambda0().re).unwrap());
    let quasicycle_ratio = dominant_stable.map(|c| {
        let l0 = c.spectrum.lambda0();
        -l0.im.abs() / l0.re
    });
    let lambda0 = dominant_stable
        .or_else(|| {
            classified.iter().max_by(|a, b| {
                a.spectrum.lambda0().re.partial_cmp(&b.spectrum.lambda0().re).unwrap()
            })
        })
        .map(|c| c.spectrum.lambda0())
        .expect("at least one fixed point");

    Ok(PhaseReport {
        label,
        fixed_points: classified,
        quasicycle_ratio,
        lambda0,
        oscillation_amplitude: best_amp,
        lc_series,
    })
}

/// Period, peak time advance, and amplitudes of a limit cycle.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LimitCycleMetrics {
    /// Oscillation period.
    pub period: f64,
    /// Time advance of n_r peaks over n_s peaks, wrapped to [-T/2, T/2).
    pub dt_rs: f64,
    /// Normalized advance dT_rs / T in [-0.5, 0.5).
    pub t_rs: f64,
    pub amplitude_s: f64,
    pub amplitude_r: f64,
}

fn wrap_half(x: f64, period: f64) -> f64 {
    let mut y = x.rem_euclid(period);
    if y >= period / 2.0 {
        y -= period;
    }
    y
}

/// Extract period and predator-prey phase metrics from a settled oscillatory
/// series. Peaks are located after moving-average smoothing over T/20.
pub fn limit_cycle_metrics(series: &PopSeries) -> Result<LimitCycleMetrics> {
    // first pass on the raw series to estimate the period
    let raw_peaks = local_maxima(&series.n_r);
    if raw_peaks.len() < 3 {
        return Err(RydError::NotPeriodic(raw_peaks.len()));
    }
    let mut spacing = 0.0;
    for w in raw_peaks.windows(2) {
        spacing += (w[1] - w[0]) as f64;
    }
    let t_estimate = spacing / (raw_peaks.len() - 1) as f64 * series.dt;

    // smoothing window of total width T/20
    let half = ((t_estimate / 20.0 / series.dt) / 2.0).round() as usize;
    let smooth_r = moving_average(&series.n_r, half);
    let smooth_s = moving_average(&series.n_s, half);

    let peaks_r = peak_times(&smooth_r, series.t0, series.dt);
    let peaks_s = peak_times(&smooth_s, series.t0, series.dt);
    if peaks_r.len() < 3 || peaks_s.is_empty() {
        return Err(RydError::NotPeriodic(peaks_r.len().min(peaks_s.len())));
    }
    let period = (peaks_r.last().unwrap().0 - peaks_r[0].0) / (peaks_r.len() - 1) as f64;

    let mut advances = Vec::new();
    for &(tr, _) in &peaks_r {
        if let Some(&(ts, _)) = peaks_s.iter().find(|&&(ts, _)| ts > tr) {
            advances.push(wrap_half(ts - tr, period));
        }
    }
    if advances.is_empty() {
        return Err(RydError::NotPeriodic(0));
    }
    let dt_rs = advances.iter().sum::<f64>() / advances.len() as f64;
    let mut t_rs = dt_rs / period;
    if t_rs >= 0.5 {
        t_rs -= 1.0;
    }

    let amp = |x: &[f64]| {
        x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - x.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(LimitCycleMetrics {
        period,
        dt_rs,
        t_rs,
        amplitude_s: amp(&smooth_s),
        amplitude_r: amp(&smooth_r),
    })
}

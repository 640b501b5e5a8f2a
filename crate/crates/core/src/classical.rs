//! Classical limit of the mean-field dynamics: coherences adiabatically
//! eliminated at frozen populations, leaving two rate equations
//! dn_a/dt = gamma_up_a(n) n_g - Gamma_a n_a with Lorentzian excitation
//! rates in the shifted detuning.

use num_complex::Complex64 as C64;

use crate::error::{Result, RydError};
use crate::model::{mean_field_shifts, ChiSet, SystemParams};

/// Lorentzian excitation rate for channel a: weak-drive linear response of
/// the eliminated g <-> a coherence, with width set by the decay rate.
fn excitation_rate(omega: f64, detuning_shifted: f64, gamma: f64) -> f64 {
    (omega * omega / 2.0) * (gamma / 2.0) / (detuning_shifted.powi(2) + gamma * gamma / 4.0)
}

/// Rate-equation flow (dn_s/dt, dn_r/dt).
pub fn classical_rhs(n_s: f64, n_r: f64, params: &SystemParams, chi: &ChiSet) -> (f64, f64) {
    let n_g = 1.0 - n_s - n_r;
    let (h_s, h_r) = mean_field_shifts(n_s, n_r, chi);
    let up_s = excitation_rate(params.omega_s, params.delta_s - h_s, params.gamma_s);
    let up_r = excitation_rate(params.omega_r, params.delta_r - h_r, params.gamma_r);
    (up_s * n_g - params.gamma_s * n_s, up_r * n_g - params.gamma_r * n_r)
}

/// Analytic 2x2 Jacobian of the rate equations in (n_s, n_r).
pub fn classical_jacobian(n_s: f64, n_r: f64, params: &SystemParams, chi: &ChiSet) -> [[f64; 2]; 2] {
    let n_g = 1.0 - n_s - n_r;
    let (h_s, h_r) = mean_field_shifts(n_s, n_r, chi);
    let d_s = params.delta_s - h_s;
    let d_r = params.delta_r - h_r;
    let up_s = excitation_rate(params.omega_s, d_s, params.gamma_s);
    let up_r = excitation_rate(params.omega_r, d_r, params.gamma_r);
    // d(rate)/d(shifted detuning)
    let dup = |omega: f64, d: f64, g: f64| {
        -(omega * omega / 2.0) * (g / 2.0) * 2.0 * d / (d * d + g * g / 4.0).powi(2)
    };
    let dup_s = dup(params.omega_s, d_s, params.gamma_s);
    let dup_r = dup(params.omega_r, d_r, params.gamma_r);
    // d(shifted detuning)/dn: d_a = Delta_a - h_a
    let j11 = dup_s * (-chi.ss) * n_g - up_s - params.gamma_s;
    let j12 = dup_s * (-chi.sr) * n_g - up_s;
    let j21 = dup_r * (-chi.sr) * n_g - up_r;
    let j22 = dup_r * (-chi.rr) * n_g - up_r - params.gamma_r;
    [[j11, j12], [j21, j22]]
}

/// Eigenvalues of a real 2x2 matrix, sorted descending by real part.
pub fn eigenvalues_2x2(j: &[[f64; 2]; 2]) -> [C64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    let (a, b) = if disc >= 0.0 {
        let s = disc.sqrt();
        (C64::new((tr + s) / 2.0, 0.0), C64::new((tr - s) / 2.0, 0.0))
    } else {
        let s = (-disc).sqrt();
        (C64::new(tr / 2.0, s / 2.0), C64::new(tr / 2.0, -s / 2.0))
    };
    [a, b]
}

/// A classical fixed point with its Jacobian eigenvalues.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalFixedPoint {
    pub n_s: f64,
    pub n_r: f64,
    pub eigenvalues: [C64; 2],
}

impl ClassicalFixedPoint {
    pub fn stable(&self) -> bool {
        self.eigenvalues[0].re < 0.0
    }
}

/// Newton search for fixed points of the rate equations from a deterministic
/// grid of starts.
pub fn classical_fixed_points(params: &SystemParams, chi: &ChiSet) -> Result<Vec<ClassicalFixedPoint>> {
    let starts = [
        (0.0, 0.0),
        (0.3, 0.0),
        (0.0, 0.3),
        (0.2, 0.2),
        (0.45, 0.45),
        (0.1, 0.5),
        (0.5, 0.1),
        (0.05, 0.05),
    ];
    let mut roots: Vec<ClassicalFixedPoint> = Vec::new();
    for &(s0, r0) in &starts {
        let (mut ns, mut nr) = (s0, r0);
        let mut ok = false;
        for _ in 0..200 {
            let (fs, fr) = classical_rhs(ns, nr, params, chi);
            if fs.hypot(fr) < 1e-13 {
                ok = true;
                break;
            }
            let j = classical_jacobian(ns, nr, params, chi);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            ns -= (j[1][1] * fs - j[0][1] * fr) / det;
            nr -= (-j[1][0] * fs + j[0][0] * fr) / det;
            if !ns.is_finite() || !nr.is_finite() || ns.abs() > 10.0 || nr.abs() > 10.0 {
                break;
            }
        }
        if !ok {
            let (fs, fr) = classical_rhs(ns, nr, params, chi);
            ok = fs.hypot(fr) < 1e-10;
        }
        if !ok || ns < -1e-9 || nr < -1e-9 || ns + nr > 1.0 + 1e-9 {
            continue;
        }
        if roots.iter().any(|r| (r.n_s - ns).abs() < 1e-6 && (r.n_r - nr).abs() < 1e-6) {
            continue;
        }
        let eigenvalues = eigenvalues_2x2(&classical_jacobian(ns, nr, params, chi));
        roots.push(ClassicalFixedPoint { n_s: ns, n_r: nr, eigenvalues });
    }
    if roots.is_empty() {
        return Err(RydError::NoFixedPoint);
    }
    Ok(roots)
}

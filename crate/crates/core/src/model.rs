//! Physical model definition: laser/decay parameters, lattice geometry,
//! interaction kernels, and the mean-field shift convention shared by all
//! dynamical backends.
//!
//! All energies and rates are expressed in units of the decay rate Gamma,
//! times in 1/Gamma, and lengths in lattice spacings.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RydError};
use crate::mat3::{Mat3, R, S};

/// Laser and decay constants of the three-level scheme {g, s, r}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Rabi frequency of the g <-> s drive.
    pub omega_s: f64,
    /// Rabi frequency of the g <-> r drive.
    pub omega_r: f64,
    /// Detuning of the s drive.
    pub delta_s: f64,
    /// Detuning of the r drive.
    pub delta_r: f64,
    /// Decay rate |s> -> |g>.
    pub gamma_s: f64,
    /// Decay rate |r> -> |g>.
    pub gamma_r: f64,
}

impl SystemParams {
    /// Reference parameter set: Gamma_s = Gamma_r = 1, Omega_s = Omega_r = omega,
    /// Delta_s = 8.
    pub fn reference(omega: f64, delta_r: f64) -> Self {
        Self {
            omega_s: omega,
            omega_r: omega,
            delta_s: 8.0,
            delta_r,
            gamma_s: 1.0,
            gamma_r: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_s > 0.0 && self.gamma_r > 0.0) {
            return Err(RydError::Config("decay rates must be positive".into()));
        }
        if self.omega_s < 0.0 || self.omega_r < 0.0 {
            return Err(RydError::Config(
                "Rabi frequencies must be non-negative (phases absorbed)".into(),
            ));
        }
        for v in [
            self.omega_s,
            self.omega_r,
            self.delta_s,
            self.delta_r,
            self.gamma_s,
            self.gamma_r,
        ] {
            if !v.is_finite() {
                return Err(RydError::Config("non-finite system parameter".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Square lattice of N = L^2 sites with unit spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub edge: usize,
    pub boundary: Boundary,
}

impl Lattice {
    pub fn new(edge: usize, boundary: Boundary) -> Result<Self> {
        if edge == 0 {
            return Err(RydError::Config("lattice edge length must be >= 1".into()));
        }
        Ok(Self { edge, boundary })
    }

    pub fn n_sites(&self) -> usize {
        self.edge * self.edge
    }

    /// Integer coordinates (i, j) of a site index, row-major.
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.edge, site % self.edge)
    }

    pub fn site(&self, i: usize, j: usize) -> usize {
        i * self.edge + j
    }

    /// Pairwise distance; minimum image under periodic boundary.
    pub fn distance(&self, l: usize, k: usize) -> f64 {
        let (li, lj) = self.coords(l);
        let (ki, kj) = self.coords(k);
        let mut di = (li as f64 - ki as f64).abs();
        let mut dj = (lj as f64 - kj as f64).abs();
        if self.boundary == Boundary::Periodic {
            let edge = self.edge as f64;
            di = di.min(edge - di);
            dj = dj.min(edge - dj);
        }
        (di * di + dj * dj).sqrt()
    }
}

/// Collective coupling strengths chi_ab for ab in {ss, rr, sr}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSet {
    pub ss: f64,
    pub rr: f64,
    pub sr: f64,
}

impl ChiSet {
    pub fn uniform(chi: f64) -> Self {
        Self { ss: chi, rr: chi, sr: chi }
    }

    pub fn zero() -> Self {
        Self::uniform(0.0)
    }
}

/// Van der Waals C6 coefficients per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C6Set {
    pub ss: f64,
    pub rr: f64,
    pub sr: f64,
}

impl C6Set {
    pub fn uniform(c6: f64) -> Self {
        Self { ss: c6, rr: c6, sr: c6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InteractionSpec {
    /// Every atom couples to every other with pairwise strength
    /// chi_ab / (2(N-1)), so a uniform fully excited background produces
    /// a shift of exactly chi_ab.
    AllToAll { chi: ChiSet },
    /// V_lk = c6 / r^6 within the cutoff radius, zero beyond.
    VdW { c6: C6Set, cutoff_radius: f64 },
}

/// Pairwise coupling energies (v_ss, v_rr, v_sr) between all site pairs.
///
/// Symmetric with zero diagonal. All-to-all matrices keep a uniform fast
/// path so dense neighbor lists are only materialized for finite-range
/// interactions.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    n: usize,
    uniform: Option<[f64; 3]>,
    /// Per-site neighbor list: (neighbor index, [v_ss, v_rr, v_sr]).
    neighbors: Vec<Vec<(usize, [f64; 3])>>,
}

impl CouplingMatrix {
    /// Explicit construction from unordered pairs (l, k, [v_ss, v_rr, v_sr]).
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, [f64; 3])]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(l, k, v) in pairs {
            if l >= n || k >= n || l == k {
                return Err(RydError::Config(format!("invalid pair ({l}, {k}) for n = {n}")));
            }
            neighbors[l].push((k, v));
            neighbors[k].push((l, v));
        }
        Ok(Self { n, uniform: None, neighbors })
    }

    /// Zero-coupling matrix over n sites (independent atoms).
    pub fn uncoupled(n: usize) -> Self {
        Self { n, uniform: None, neighbors: vec![Vec::new(); n] }
    }

    /// Keep only sites 0..n_keep (for small-system oracle runs; the first L
    /// sites of a lattice form a unit-spacing chain).
    pub fn restrict(&self, n_keep: usize) -> Self {
        let n = n_keep.min(self.n);
        let neighbors = if let Some(v) = self.uniform {
            (0..n)
                .map(|l| (0..n).filter(|&k| k != l).map(|k| (k, v)).collect())
                .collect()
        } else {
            self.neighbors[..n]
                .iter()
                .map(|nb| nb.iter().filter(|(k, _)| *k < n).cloned().collect())
                .collect()
        };
        Self { n, uniform: None, neighbors }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// Uniform pairwise coupling, if the matrix is all-to-all.
    pub fn uniform(&self) -> Option<[f64; 3]> {
        self.uniform
    }

    /// [v_ss, v_rr, v_sr] between sites l and k (zero on the diagonal).
    pub fn pair(&self, l: usize, k: usize) -> [f64; 3] {
        if l == k {
            return [0.0; 3];
        }
        if let Some(v) = self.uniform {
            return v;
        }
        self.neighbors[l]
            .iter()
            .find(|(j, _)| *j == k)
            .map(|(_, v)| *v)
            .unwrap_or([0.0; 3])
    }

    /// Neighbors of site l with nonzero coupling.
    pub fn neighbors_of(&self, l: usize) -> &[(usize, [f64; 3])] {
        &self.neighbors[l]
    }

    /// Total one-sided field sums per channel: sum_{k != l} v_ab.
    pub fn site_sums(&self, l: usize) -> [f64; 3] {
        if let Some(v) = self.uniform {
            let m = (self.n - 1) as f64;
            return [v[0] * m, v[1] * m, v[2] * m];
        }
        let mut s = [0.0; 3];
        for (_, v) in &self.neighbors[l] {
            for c in 0..3 {
                s[c] += v[c];
            }
        }
        s
    }
}

/// Assemble the pairwise coupling matrix for a lattice and interaction spec.
///
/// A vdW cutoff below the nearest-neighbor distance removes every coupling;
/// this is rejected as degenerate unless `force_degenerate` is set.
pub fn build_coupling_matrix(
    lattice: &Lattice,
    spec: &InteractionSpec,
    force_degenerate: bool,
) -> Result<CouplingMatrix> {
    let n = lattice.n_sites();
    match spec {
        InteractionSpec::AllToAll { chi } => {
            for v in [chi.ss, chi.rr, chi.sr] {
                if !v.is_finite() {
                    return Err(RydError::Config("non-finite coupling".into()));
                }
            }
            let uniform = if n > 1 {
                let denom = 2.0 * (n as f64 - 1.0);
                Some([chi.ss / denom, chi.rr / denom, chi.sr / denom])
            } else {
                Some([0.0; 3])
            };
            Ok(CouplingMatrix { n, uniform, neighbors: vec![Vec::new(); n] })
        }
        InteractionSpec::VdW { c6, cutoff_radius } => {
            for v in [c6.ss, c6.rr, c6.sr, *cutoff_radius] {
                if !v.is_finite() {
                    return Err(RydError::Config("non-finite vdW parameter".into()));
                }
            }
            if *cutoff_radius < 1.0 && !force_degenerate {
                return Err(RydError::Degenerate(format!(
                    "cutoff_radius = {cutoff_radius} < 1 leaves no interactions"
                )));
            }
            let mut neighbors = vec![Vec::new(); n];
            for l in 0..n {
                for k in 0..n {
                    if k == l {
                        continue;
                    }
                    let r = lattice.distance(l, k);
                    if r <= *cutoff_radius {
                        let r6 = r.powi(6);
                        neighbors[l].push((k, [c6.ss / r6, c6.rr / r6, c6.sr / r6]));
                    }
                }
            }
            Ok(CouplingMatrix { n, uniform: None, neighbors })
        }
    }
}

/// Mean-field level shifts produced by uniform populations (n_s, n_r):
/// h_s = chi_ss n_s + chi_sr n_r, h_r = chi_rr n_r + chi_sr n_s.
pub fn mean_field_shifts(n_s: f64, n_r: f64, chi: &ChiSet) -> (f64, f64) {
    (chi.ss * n_s + chi.sr * n_r, chi.rr * n_r + chi.sr * n_s)
}

/// Single-atom Hamiltonian: drives Omega_a/2, detunings -Delta_a, and
/// diagonal interaction shifts (h_s, h_r).
pub fn single_atom_hamiltonian(params: &SystemParams, h_s: f64, h_r: f64) -> Mat3 {
    let mut h = Mat3::zeros();
    h.0[0][1] = C64::new(params.omega_s / 2.0, 0.0);
    h.0[1][0] = C64::new(params.omega_s / 2.0, 0.0);
    h.0[0][2] = C64::new(params.omega_r / 2.0, 0.0);
    h.0[2][0] = C64::new(params.omega_r / 2.0, 0.0);
    h.0[S][S] = C64::new(h_s - params.delta_s, 0.0);
    h.0[R][R] = C64::new(h_r - params.delta_r, 0.0);
    h
}

/// Lattice sum S(cutoff) = sum over 2D integer offsets 0 < r <= cutoff of r^-6,
/// by direct summation.
pub fn vdw_lattice_sum(cutoff_radius: f64) -> f64 {
    let m = cutoff_radius.ceil() as i64;
    let mut s = 0.0;
    for i in -m..=m {
        for j in -m..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let r2 = (i * i + j * j) as f64;
            if r2.sqrt() <= cutoff_radius {
                s += 1.0 / (r2 * r2 * r2);
            }
        }
    }
    s
}

/// Calibrate a uniform C6 so a bulk atom on a large periodic lattice sees a
/// total field 2 sum_k V_lk = chi_target within the cutoff.
pub fn calibrate_c6(chi_target: f64, cutoff_radius: f64) -> f64 {
    chi_target / (2.0 * vdw_lattice_sum(cutoff_radius))
}

/// Default vdW cutoff: the r^-6 tail beyond 6 spacings contributes < 0.1%
/// of the lattice sum.
pub const DEFAULT_CUTOFF: f64 = 6.0;

//! Direct integration of the full many-body Lindblad equation for small
//! atom numbers, serving as ground truth for the mean-field (N = 1) and
//! phase-space (N <= 3-6) backends.
//!
//! The superoperator action is applied term by term; the 9^N x 9^N
//! Liouvillian matrix is never materialized.

use num_complex::Complex64 as C64;

use crate::error::{Result, RydError};
use crate::model::{CouplingMatrix, SystemParams};

/// Hard capacity: rho of 3^6 = 729 squared is the largest dense state we
/// propagate.
pub const MAX_SITES: usize = 6;

const LEVELS: usize = 3;
const LVL_G: usize = 0;
const LVL_S: usize = 1;
const LVL_R: usize = 2;

/// Many-body density matrix over the site-major tensor basis {g, s, r}^N.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n_atoms: usize,
    dim: usize,
    pub data: Vec<C64>,
}

fn pow3(k: usize) -> usize {
    LEVELS.pow(k as u32)
}

impl DensityMatrix {
    pub fn new_zero(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > MAX_SITES {
            return Err(RydError::Capacity(n_atoms, MAX_SITES));
        }
        let dim = pow3(n_atoms);
        Ok(Self { n_atoms, dim, data: vec![C64::new(0.0, 0.0); dim * dim] })
    }

    /// All atoms in the ground state.
    pub fn ground(n_atoms: usize) -> Result<Self> {
        let mut rho = Self::new_zero(n_atoms)?;
        rho.data[0] = C64::new(1.0, 0.0);
        Ok(rho)
    }

    /// Product state with every atom in level `level`.
    pub fn uniform_level(n_atoms: usize, level: usize) -> Result<Self> {
        let mut rho = Self::new_zero(n_atoms)?;
        let mut idx = 0;
        for _ in 0..n_atoms {
            idx = idx * LEVELS + level;
        }
        rho.data[idx * rho.dim + idx] = C64::new(1.0, 0.0);
        Ok(rho)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    /// Level digit of site `l` in basis index `i` (site-major, site 0 most
    /// significant).
    #[inline]
    fn digit(&self, i: usize, l: usize) -> usize {
        (i / pow3(self.n_atoms - 1 - l)) % LEVELS
    }

    /// <sigma_l^aa> for level a.
    pub fn site_population(&self, l: usize, level: usize) -> f64 {
        (0..self.dim)
            .filter(|&i| self.digit(i, l) == level)
            .map(|i| self.get(i, i).re)
            .sum()
    }

    /// Minimum eigenvalue of the Hermitian part. Dense solve; intended for
    /// N <= 3.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i).conj())
        });
        let eig = m.symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Precomputed term-by-term action of the Lindblad generator.
pub struct Liouvillian {
    n_atoms: usize,
    dim: usize,
    params: SystemParams,
    /// Diagonal coherent energies (detunings + interactions) per basis state.
    energies: Vec<f64>,
    /// Total decay weight gamma(i) = sum_l Gamma_{digit_l(i)}.
    gammas: Vec<f64>,
    /// flip[channel][l][i]: index with digit_l toggled g <-> a, if digit is
    /// g or a.
    flip: [Vec<Vec<Option<usize>>>; 2],
    /// raise[channel][l][i]: for digit_l = g, the index with digit_l = a.
    raise: [Vec<Vec<Option<usize>>>; 2],
}

impl Liouvillian {
    pub fn new(params: &SystemParams, couplings: &CouplingMatrix) -> Result<Self> {
        let n_atoms = couplings.n_sites();
        if n_atoms == 0 || n_atoms > MAX_SITES {
            return Err(RydError::Capacity(n_atoms, MAX_SITES));
        }
        params.validate()?;
        let dim = pow3(n_atoms);
        let digit = |i: usize, l: usize| (i / pow3(n_atoms - 1 - l)) % LEVELS;

        let mut energies = vec![0.0; dim];
        let mut gammas = vec![0.0; dim];
        for i in 0..dim {
            let mut e = 0.0;
            let mut g = 0.0;
            for l in 0..n_atoms {
                match digit(i, l) {
                    LVL_S => {
                        e -= params.delta_s;
                        g += params.gamma_s;
                    }
                    LVL_R => {
                        e -= params.delta_r;
                        g += params.gamma_r;
                    }
                    _ => {}
                }
            }
            // ordered double sum in the Hamiltonian counts each unordered
            // pair twice
            for l in 0..n_atoms {
                for k in (l + 1)..n_atoms {
                    let v = couplings.pair(l, k);
                    let (dl, dk) = (digit(i, l), digit(i, k));
                    e += match (dl, dk) {
                        (LVL_S, LVL_S) => 2.0 * v[0],
                        (LVL_R, LVL_R) => 2.0 * v[1],
                        (LVL_S, LVL_R) | (LVL_R, LVL_S) => 2.0 * v[2],
                        _ => 0.0,
                    };
                }
            }
            energies[i] = e;
            gammas[i] = g;
        }

        let build_flip = |a: usize| -> Vec<Vec<Option<usize>>> {
            (0..n_atoms)
                .map(|l| {
                    let p = pow3(n_atoms - 1 - l);
                    (0..dim)
                        .map(|i| match digit(i, l) {
                            LVL_G => Some(i + a * p),
                            d if d == a => Some(i - a * p),
                            _ => None,
                        })
                        .collect()
                })
                .collect()
        };
        let build_raise = |a: usize| -> Vec<Vec<Option<usize>>> {
            (0..n_atoms)
                .map(|l| {
                    let p = pow3(n_atoms - 1 - l);
                    (0..dim)
                        .map(|i| (digit(i, l) == LVL_G).then_some(i + a * p))
                        .collect()
                })
                .collect()
        };

        Ok(Self {
            n_atoms,
            dim,
            params: *params,
            energies,
            gammas,
            flip: [build_flip(LVL_S), build_flip(LVL_R)],
            raise: [build_raise(LVL_S), build_raise(LVL_R)],
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// d(rho)/dt = i[rho, H] + D[rho], written into `out`.
    pub fn apply(&self, rho: &DensityMatrix, out: &mut DensityMatrix) {
        assert_eq!(rho.n_atoms, self.n_atoms);
        let dim = self.dim;
        let data = &rho.data;
        let od = &mut out.data;

        // diagonal coherent phases and anticommutator damping
        for i in 0..dim {
            let row = i * dim;
            let ei = self.energies[i];
            let gi = self.gammas[i];
            for j in 0..dim {
                let z = data[row + j];
                let de = ei - self.energies[j];
                let damp = 0.5 * (gi + self.gammas[j]);
                // -i * de * z - damp * z
                od[row + j] = C64::new(de * z.im - damp * z.re, -de * z.re - damp * z.im);
            }
        }

        // single-site drives
        for (ch, omega) in [(0usize, self.params.omega_s), (1usize, self.params.omega_r)] {
            if omega == 0.0 {
                continue;
            }
            let c = omega / 2.0;
            for l in 0..self.n_atoms {
                let flip = &self.flip[ch][l];
                for i in 0..dim {
                    let row = i * dim;
                    let fi = flip[i];
                    for j in 0..dim {
                        // -i c (rho_{flip(i),j} - rho_{i,flip(j)})
                        let mut term = C64::new(0.0, 0.0);
                        if let Some(fi) = fi {
                            term += data[fi * dim + j];
                        }
                        if let Some(fj) = flip[j] {
                            term -= data[row + fj];
                        }
                        od[row + j] += C64::new(c * term.im, -c * term.re);
                    }
                }
            }
        }

        // jump (recycling) terms
        for (ch, gamma) in [(0usize, self.params.gamma_s), (1usize, self.params.gamma_r)] {
            for l in 0..self.n_atoms {
                let raise = &self.raise[ch][l];
                for i in 0..dim {
                    let Some(ri) = raise[i] else { continue };
                    let row = i * dim;
                    for j in 0..dim {
                        if let Some(rj) = raise[j] {
                            od[row + j] += gamma * data[ri * dim + rj];
                        }
                    }
                }
            }
        }
    }

    /// <H> = tr(H rho), for conservation checks in the closed limit.
    pub fn energy_expectation(&self, rho: &DensityMatrix) -> f64 {
        let dim = self.dim;
        let mut e: C64 = (0..dim).map(|i| self.energies[i] * rho.get(i, i)).sum();
        for (ch, omega) in [(0usize, self.params.omega_s), (1usize, self.params.omega_r)] {
            let c = omega / 2.0;
            for l in 0..self.n_atoms {
                let flip = &self.flip[ch][l];
                for i in 0..dim {
                    if let Some(fi) = flip[i] {
                        e += c * rho.get(fi, i);
                    }
                }
            }
        }
        e.re
    }
}

/// Site-resolved populations on a uniform time grid.
#[derive(Debug, Clone)]
pub struct ExactTrajectory {
    pub dt_sample: f64,
    pub times: Vec<f64>,
    /// [time][site] -> (n_s, n_r).
    pub site_pops: Vec<Vec<(f64, f64)>>,
}

impl ExactTrajectory {
    /// Site-averaged populations at sample `i`.
    pub fn mean_pops(&self, i: usize) -> (f64, f64) {
        let n = self.site_pops[i].len() as f64;
        let (s, r) = self
            .site_pops[i]
            .iter()
            .fold((0.0, 0.0), |(a, b), &(s, r)| (a + s, b + r));
        (s / n, r / n)
    }
}

/// RK4 propagation of the full master equation with per-step trace guard and
/// positivity spot checks (N <= 3).
pub fn evolve_exact(
    rho0: &DensityMatrix,
    params: &SystemParams,
    couplings: &CouplingMatrix,
    t_end: f64,
    dt: f64,
    sample_stride: usize,
) -> Result<ExactTrajectory> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(RydError::Config("t_end and dt must be positive".into()));
    }
    let stride = sample_stride.max(1);
    let liouv = Liouvillian::new(params, couplings)?;
    let n_steps = (t_end / dt).ceil() as usize;
    let n_atoms = rho0.n_atoms();
    let dim = rho0.dim();

    let mut rho = rho0.clone();
    let mut k1 = DensityMatrix::new_zero(n_atoms)?;
    let mut k2 = DensityMatrix::new_zero(n_atoms)?;
    let mut k3 = DensityMatrix::new_zero(n_atoms)?;
    let mut k4 = DensityMatrix::new_zero(n_atoms)?;
    let mut tmp = DensityMatrix::new_zero(n_atoms)?;

    let mut times = Vec::new();
    let mut site_pops = Vec::new();
    let record = |rho: &DensityMatrix, t: f64, times: &mut Vec<f64>, sp: &mut Vec<Vec<(f64, f64)>>| {
        times.push(t);
        sp.push(
            (0..n_atoms)
                .map(|l| (rho.site_population(l, LVL_S), rho.site_population(l, LVL_R)))
                .collect(),
        );
    };
    record(&rho, 0.0, &mut times, &mut site_pops);

    let positivity_stride = (n_steps / 10).max(1);
    for step in 0..n_steps {
        liouv.apply(&rho, &mut k1);
        axpy(&mut tmp, &rho, &k1, dt / 2.0, dim);
        liouv.apply(&tmp, &mut k2);
        axpy(&mut tmp, &rho, &k2, dt / 2.0, dim);
        liouv.apply(&tmp, &mut k3);
        axpy(&mut tmp, &rho, &k3, dt, dim);
        liouv.apply(&tmp, &mut k4);
        for i in 0..dim * dim {
            rho.data[i] += dt / 6.0
                * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
        }
        let t = (step + 1) as f64 * dt;
        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        if drift > 1e-6 {
            return Err(RydError::TraceDrift { drift, tol: 1e-6, t });
        }
        if n_atoms <= 3 && (step + 1) % positivity_stride == 0 {
            let min = rho.min_eigenvalue();
            if min < -1e-7 {
                return Err(RydError::TraceDrift { drift: -min, tol: 1e-7, t });
            }
        }
        if (step + 1) % stride == 0 {
            record(&rho, t, &mut times, &mut site_pops);
        }
    }

    Ok(ExactTrajectory { dt_sample: dt * stride as f64, times, site_pops })
}

fn axpy(out: &mut DensityMatrix, base: &DensityMatrix, k: &DensityMatrix, h: f64, dim: usize) {
    for i in 0..dim * dim {
        out.data[i] = base.data[i] + h * k.data[i];
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_coupling_matrix, Boundary, ChiSet, InteractionSpec, Lattice,
    };
    use approx::assert_relative_eq;

    fn rk4(liouv: &Liouvillian, rho: &mut DensityMatrix, dt: f64, steps: usize) {
        let n = rho.n_atoms();
        let dim = rho.dim();
        let mut k1 = DensityMatrix::new_zero(n).unwrap();
        let mut k2 = DensityMatrix::new_zero(n).unwrap();
        let mut k3 = DensityMatrix::new_zero(n).unwrap();
        let mut k4 = DensityMatrix::new_zero(n).unwrap();
        let mut tmp = DensityMatrix::new_zero(n).unwrap();
        for _ in 0..steps {
            liouv.apply(rho, &mut k1);
            axpy(&mut tmp, rho, &k1, dt / 2.0, dim);
            liouv.apply(&tmp, &mut k2);
            axpy(&mut tmp, rho, &k2, dt / 2.0, dim);
            liouv.apply(&tmp, &mut k3);
            axpy(&mut tmp, rho, &k3, dt, dim);
            liouv.apply(&tmp, &mut k4);
            for i in 0..dim * dim {
                rho.data[i] +=
                    dt / 6.0 * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
            }
        }
    }

    #[test]
    fn liouvillian_zero_on_dark_state() {
        let p = SystemParams { omega_s: 0.0, omega_r: 0.0, ..SystemParams::reference(0.0, 3.0) };
        let liouv = Liouvillian::new(&p, &CouplingMatrix::uncoupled(1)).unwrap();
        let rho = DensityMatrix::ground(1).unwrap();
        let mut out = DensityMatrix::new_zero(1).unwrap();
        liouv.apply(&rho, &mut out);
        assert!(out.data.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn two_uncoupled_atoms_factorize() {
        // N=2, V=0: the action on a product state equals the tensor sum of
        // the single-atom actions, entrywise.
        let p = SystemParams::reference(1.7, 2.3);
        let liouv1 = Liouvillian::new(&p, &CouplingMatrix::uncoupled(1)).unwrap();
        let liouv2 = Liouvillian::new(&p, &CouplingMatrix::uncoupled(2)).unwrap();

        // generic single-atom state rho1, product rho1 (x) rho1
        let mut rho1 = DensityMatrix::ground(1).unwrap();
        rk4(&liouv1, &mut rho1, 1e-2, 50);
        let mut rho2 = DensityMatrix::new_zero(2).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        rho2.set(a * 3 + c, b * 3 + d, rho1.get(a, b) * rho1.get(c, d));
                    }
                }
            }
        }
        let mut d1 = DensityMatrix::new_zero(1).unwrap();
        liouv1.apply(&rho1, &mut d1);
        let mut d2 = DensityMatrix::new_zero(2).unwrap();
        liouv2.apply(&rho2, &mut d2);
        // tensor sum: d(rho (x) rho) = d1 (x) rho + rho (x) d1
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let want = d1.get(a, b) * rho1.get(c, d) + rho1.get(a, b) * d1.get(c, d);
                        let got = d2.get(a * 3 + c, b * 3 + d);
                        assert!((want - got).norm() < 1e-12, "mismatch at {a}{b}{c}{d}");
                    }
                }
            }
        }
    }

    #[test]
    fn linearity_of_superoperator() {
        let p = SystemParams::reference(2.0, 3.0);
        let cm = CouplingMatrix::from_pairs(2, &[(0, 1, [1.3, 0.8, 0.5])]).unwrap();
        let liouv = Liouvillian::new(&p, &cm).unwrap();
        let mut rho1 = DensityMatrix::ground(2).unwrap();
        rk4(&liouv, &mut rho1, 1e-2, 30);
        let rho2 = DensityMatrix::uniform_level(2, LVL_R).unwrap();
        let (a, b) = (0.3, 0.7);
        let mut combo = DensityMatrix::new_zero(2).unwrap();
        for i in 0..combo.data.len() {
            combo.data[i] = a * rho1.data[i] + b * rho2.data[i];
        }
        let mut d1 = DensityMatrix::new_zero(2).unwrap();
        let mut d2 = DensityMatrix::new_zero(2).unwrap();
        let mut dc = DensityMatrix::new_zero(2).unwrap();
        liouv.apply(&rho1, &mut d1);
        liouv.apply(&rho2, &mut d2);
        liouv.apply(&combo, &mut dc);
        for i in 0..dc.data.len() {
            assert!((dc.data[i] - (a * d1.data[i] + b * d2.data[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_output_traceless_and_hermitian() {
        let p = SystemParams::reference(2.0, 3.0);
        let cm = CouplingMatrix::from_pairs(3, &[(0, 1, [2.0, 1.0, 0.5]), (1, 2, [2.0, 1.0, 0.5])])
            .unwrap();
        let liouv = Liouvillian::new(&p, &cm).unwrap();
        let mut rho = DensityMatrix::ground(3).unwrap();
        rk4(&liouv, &mut rho, 1e-2, 100);
        let mut d = DensityMatrix::new_zero(3).unwrap();
        liouv.apply(&rho, &mut d);
        assert!(d.trace().norm() < 1e-12);
        assert!(d.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn capacity_error_beyond_six_atoms() {
        assert!(matches!(DensityMatrix::ground(7), Err(RydError::Capacity(7, 6))));
    }

    #[test]
    fn two_level_steady_state_closed_form() {
        // Omega_r = 0 reduces to a driven two-level atom; the steady excited
        // population is (Omega^2/4) / (Delta^2 + Gamma^2/4 + Omega^2/2).
        for delta in [0.0, 1.5] {
            let p = SystemParams {
                omega_s: 2.0,
                omega_r: 0.0,
                delta_s: delta,
                delta_r: 0.0,
                gamma_s: 1.0,
                gamma_r: 1.0,
            };
            let rho = DensityMatrix::ground(1).unwrap();
            let traj =
                evolve_exact(&rho, &p, &CouplingMatrix::uncoupled(1), 40.0, 1e-3, 1000).unwrap();
            let (ns, _) = traj.mean_pops(traj.times.len() - 1);
            let expected = (p.omega_s.powi(2) / 4.0)
                / (p.delta_s.powi(2) + p.gamma_s.powi(2) / 4.0 + p.omega_s.powi(2) / 2.0);
            assert_relative_eq!(ns, expected, max_relative = 1e-5);
        }
    }

    #[test]
    fn mean_field_exact_at_single_atom() {
        // N=1, chi=0: MF trajectory matches the exact solution to 1e-6.
        use crate::meanfield::{evolve_mf, MFState};
        let p = SystemParams::reference(2.0, 3.0);
        let rho = DensityMatrix::ground(1).unwrap();
        let exact = evolve_exact(&rho, &p, &CouplingMatrix::uncoupled(1), 10.0, 1e-3, 100).unwrap();
        let mf = evolve_mf(&MFState::ground(), &p, &ChiSet::zero(), 10.0, 1e-3).unwrap();
        for (i, &t) in exact.times.iter().enumerate() {
            let (ns_e, nr_e) = exact.mean_pops(i);
            let idx = (t / mf.dt).round() as usize;
            let v = mf.coords[idx];
            assert!((v[0] - ns_e).abs() < 1e-6, "n_s mismatch at t={t}");
            assert!((v[1] - nr_e).abs() < 1e-6, "n_r mismatch at t={t}");
        }
    }

    #[test]
    fn blockade_suppresses_double_excitation() {
        // Two atoms, resonant s-drive, V_ss = 50: doubly excited population
        // stays below 5% over t = 10.
        let p = SystemParams {
            omega_s: 1.0,
            omega_r: 0.0,
            delta_s: 0.0,
            delta_r: 0.0,
            gamma_s: 1.0,
            gamma_r: 1.0,
        };
        let strong = CouplingMatrix::from_pairs(2, &[(0, 1, [50.0, 0.0, 0.0])]).unwrap();
        let liouv = Liouvillian::new(&p, &strong).unwrap();
        let mut rho = DensityMatrix::ground(2).unwrap();
        let ss = 1 * 3 + 1; // |ss> index
        let dt = 5e-4;
        let mut max_ss = 0.0f64;
        for _ in 0..200 {
            rk4(&liouv, &mut rho, dt, 100);
            max_ss = max_ss.max(rho.get(ss, ss).re);
        }
        assert!(max_ss < 0.05, "blockade violated: <ss|rho|ss> up to {max_ss}");

        // weaker coupling admits more double excitation (bound is interaction
        // driven, not an artifact)
        let weak = CouplingMatrix::from_pairs(2, &[(0, 1, [0.5, 0.0, 0.0])]).unwrap();
        let liouv_w = Liouvillian::new(&p, &weak).unwrap();
        let mut rho_w = DensityMatrix::ground(2).unwrap();
        let mut max_w = 0.0f64;
        for _ in 0..200 {
            rk4(&liouv_w, &mut rho_w, dt, 100);
            max_w = max_w.max(rho_w.get(ss, ss).re);
        }
        assert!(max_w > max_ss * 2.0, "weak {max_w} vs strong {max_ss}");
    }

    #[test]
    fn permutation_covariance() {
        // identical couplings: relabeling atoms permutes site outputs exactly
        let p = SystemParams::reference(2.0, 3.0);
        let lat = Lattice::new(2, Boundary::Open).unwrap();
        let cm = build_coupling_matrix(
            &lat,
            &InteractionSpec::AllToAll { chi: ChiSet::uniform(12.0) },
            false,
        )
        .unwrap();
        let n = 4;
        let mut rho_a = DensityMatrix::new_zero(n).unwrap();
        rho_a.set(27, 27, C64::new(1.0, 0.0)); // (s, g, g, g)
        let mut rho_b = DensityMatrix::new_zero(n).unwrap();
        rho_b.set(9, 9, C64::new(1.0, 0.0)); // (g, s, g, g)
        let ta = evolve_exact(&rho_a, &p, &cm, 3.0, 1e-3, 500).unwrap();
        let tb = evolve_exact(&rho_b, &p, &cm, 3.0, 1e-3, 500).unwrap();
        for i in 0..ta.times.len() {
            assert_relative_eq!(ta.site_pops[i][0].0, tb.site_pops[i][1].0, epsilon = 1e-10);
            assert_relative_eq!(ta.site_pops[i][1].0, tb.site_pops[i][0].0, epsilon = 1e-10);
            assert_relative_eq!(ta.site_pops[i][2].0, tb.site_pops[i][2].0, epsilon = 1e-10);
            assert_relative_eq!(ta.site_pops[i][0].1, tb.site_pops[i][1].1, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_limit_conserves_energy() {
        // vanishing decay: <H> conserved to RK4 accuracy
        let p = SystemParams {
            omega_s: 2.0,
            omega_r: 1.0,
            delta_s: 3.0,
            delta_r: 1.0,
            gamma_s: 1e-12,
            gamma_r: 1e-12,
        };
        let cm = CouplingMatrix::from_pairs(3, &[(0, 1, [1.0, 0.5, 0.3]), (1, 2, [1.0, 0.5, 0.3])])
            .unwrap();
        let liouv = Liouvillian::new(&p, &cm).unwrap();
        let mut rho = DensityMatrix::ground(3).unwrap();
        let e0 = liouv.energy_expectation(&rho);
        rk4(&liouv, &mut rho, 1e-3, 5000);
        let e1 = liouv.energy_expectation(&rho);
        assert!((e1 - e0).abs() < 1e-7, "energy drift {}", e1 - e0);
    }

    #[test]
    fn three_atom_chain_conservation_bounds() {
        let p = SystemParams::reference(2.0, 3.0);
        // first 3 sites of an open lattice row form a unit-spacing chain
        let lat = Lattice::new(4, Boundary::Open).unwrap();
        let full = build_coupling_matrix(
            &lat,
            &InteractionSpec::VdW {
                c6: crate::model::C6Set::uniform(1.29),
                cutoff_radius: 6.0,
            },
            false,
        )
        .unwrap();
        let cm = full.restrict(3);
        let rho = DensityMatrix::ground(3).unwrap();
        let traj = evolve_exact(&rho, &p, &cm, 8.0, 1e-3, 500).unwrap();
        for i in 0..traj.times.len() {
            let tot: f64 = traj.site_pops[i].iter().map(|&(s, r)| s + r).sum();
            assert!((-1e-9..=3.0 + 1e-9).contains(&tot));
        }
    }
}

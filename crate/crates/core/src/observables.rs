//! Post-processing: relative fractions, two-time population correlators,
//! Fourier spectra, envelope lifetimes, and finite-size scaling collapses.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Result, RydError};
use crate::series::{local_maxima, parabolic_refine};

/// Relative fraction f = (n_r - n_s)/(n_r + n_s); None when both populations
/// are (numerically) empty.
pub fn relative_fraction(n_s: f64, n_r: f64) -> Option<f64> {
    let sum = n_s + n_r;
    if sum < 1e-9 {
        None
    } else {
        Some((n_r - n_s) / sum)
    }
}

/// Site average of the relative fraction, skipping undefined sites.
/// All sites undefined -> error.
pub fn site_average_fraction(n_s: &[f64], n_r: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&s, &r) in n_s.iter().zip(n_r) {
        if let Some(f) = relative_fraction(s, r) {
            sum += f;
            count += 1;
        }
    }
    if count == 0 {
        Err(RydError::AllUndefined)
    } else {
        Ok(sum / count as f64)
    }
}

/// Unbiased two-time correlator on a lag grid: G(k dt) with
/// G_k = (1/(n-k)) sum_j da_j db_{j+k}, means removed per series.
#[derive(Debug, Clone)]
pub struct CorrelationSeries {
    pub dt: f64,
    pub values: Vec<f64>,
    /// Trajectories averaged into this correlator.
    pub n_traj: usize,
}

impl CorrelationSeries {
    pub fn lag(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Next power of two >= n (FFT sizing).
fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Cross-correlation of two equal-length, mean-subtracted series via FFT,
/// with the unbiased 1/(n-k) normalization. Positive lags only.
fn fft_cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    let n = a.len();
    let m = next_pow2(2 * n);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);

    let mut fa: Vec<C64> = a.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut fb: Vec<C64> = b.iter().map(|&x| C64::new(x, 0.0)).collect();
    fa.resize(m, C64::new(0.0, 0.0));
    fb.resize(m, C64::new(0.0, 0.0));
    fft.process(&mut fa);
    fft.process(&mut fb);
    // correlation theorem: C(k) = sum_j a_j b_{j+k} = IFFT(conj(A) * B)
    let mut prod: Vec<C64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    ifft.process(&mut prod);
    (0..=max_lag)
        .map(|k| prod[k].re / m as f64 / (n - k) as f64)
        .collect()
}

/// Direct O(n^2) reference implementation of the same estimator (oracle for
/// the FFT path; also used in tests).
pub fn direct_cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    let n = a.len();
    (0..=max_lag)
        .map(|k| {
            let mut s = 0.0;
            for j in 0..n - k {
                s += a[j] * b[j + k];
            }
            s / (n - k) as f64
        })
        .collect()
}

fn subtract_mean(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Two-time correlator G_ab(t) of one pair of series: transient dropped,
/// means subtracted, time average over the remaining window.
pub fn two_time_correlation(
    series_a: &[f64],
    series_b: &[f64],
    dt: f64,
    t_transient: f64,
    t_max_lag: f64,
) -> Result<CorrelationSeries> {
    if series_a.len() != series_b.len() {
        return Err(RydError::Config("correlation inputs differ in length".into()));
    }
    let skip = (t_transient / dt).round() as usize;
    let max_lag = (t_max_lag / dt).round() as usize;
    let needed = skip + 2 * max_lag.max(1);
    if series_a.len() < needed {
        return Err(RydError::TooShort { needed, got: series_a.len() });
    }
    let a = subtract_mean(&series_a[skip..]);
    let b = subtract_mean(&series_b[skip..]);
    let values = fft_cross_correlation(&a, &b, max_lag);
    Ok(CorrelationSeries { dt, values, n_traj: 1 })
}

/// Per-trajectory correlation followed by ensemble averaging (not pooled).
pub fn ensemble_correlation(
    pairs: &[(&[f64], &[f64])],
    dt: f64,
    t_transient: f64,
    t_max_lag: f64,
) -> Result<CorrelationSeries> {
    if pairs.is_empty() {
        return Err(RydError::Config("no trajectories given".into()));
    }
    let mut acc: Option<Vec<f64>> = None;
    for &(a, b) in pairs {
        let corr = two_time_correlation(a, b, dt, t_transient, t_max_lag)?;
        match acc.as_mut() {
            None => acc = Some(corr.values),
            Some(v) => {
                for (x, y) in v.iter_mut().zip(&corr.values) {
                    *x += y;
                }
            }
        }
    }
    let mut values = acc.unwrap();
    let inv = 1.0 / pairs.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(CorrelationSeries { dt, values, n_traj: pairs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Taper {
    None,
    /// Half-cosine roll-off over the full lag window (leakage control for
    /// noisy quasicycle correlators).
    Cosine,
}

/// One-sided Fourier transform of a correlator over its lag window.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    /// |F(omega)| (peak positions are taper/phase independent).
    pub magnitude: Vec<f64>,
    /// Complex F at omega = 0 (equals the window integral of G).
    pub f_zero: f64,
    pub resolution: f64,
}

/// F(omega) = dt * sum_k G_k w_k e^{i omega t_k} on the FFT frequency grid
/// of the (zero-padded) lag window.
pub fn fourier_spectrum(corr: &CorrelationSeries, taper: Taper) -> Spectrum {
    let n = corr.values.len();
    let t_max = (n - 1).max(1) as f64 * corr.dt;
    let windowed: Vec<f64> = corr
        .values
        .iter()
        .enumerate()
        .map(|(k, &g)| match taper {
            Taper::None => g,
            Taper::Cosine => {
                g * (0.5 * std::f64::consts::PI * k as f64 / (n - 1).max(1) as f64).cos()
            }
        })
        .collect();
    // zero-pad x4 for a denser frequency grid (interpolation only; the
    // physical resolution stays 2 pi / t_max)
    let m = next_pow2(4 * n);
    let mut buf: Vec<C64> = windowed.iter().map(|&g| C64::new(g, 0.0)).collect();
    buf.resize(m, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let d_omega = 2.0 * std::f64::consts::PI / (m as f64 * corr.dt);
    let half = m / 2;
    Spectrum {
        omega: (0..half).map(|k| k as f64 * d_omega).collect(),
        magnitude: buf[..half].iter().map(|c| c.norm() * corr.dt).collect(),
        f_zero: windowed.iter().sum::<f64>() * corr.dt,
        resolution: 2.0 * std::f64::consts::PI / t_max,
    }
}

/// Dominant spectral peak above a low-frequency floor, refined by quadratic
/// interpolation. Returns (omega_peak, magnitude).
pub fn dominant_peak(spec: &Spectrum, omega_min: f64) -> Option<(f64, f64)> {
    let start = spec.omega.iter().position(|&w| w >= omega_min)?;
    let slice = &spec.magnitude[start..];
    if slice.len() < 3 {
        return None;
    }
    let (rel, _) = slice
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let i = start + rel;
    if i == 0 || i + 1 >= spec.magnitude.len() {
        return Some((spec.omega[i], spec.magnitude[i]));
    }
    let d_omega = spec.omega[1] - spec.omega[0];
    let (offset, value) = parabolic_refine(&spec.magnitude, i);
    Some((spec.omega[i] + offset * d_omega, value))
}

/// Exponential envelope A e^{-t/tau} fitted to the peaks of |G|.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeFit {
    pub amplitude: f64,
    /// Lifetime in units of 1/Gamma; infinite for non-decaying envelopes.
    pub tau: f64,
    pub residual: f64,
    pub non_decaying: bool,
    pub n_peaks: usize,
}

/// Log-linear least squares on the local maxima of |G(t)|.
pub fn fit_envelope(corr: &CorrelationSeries) -> Result<EnvelopeFit> {
    let abs: Vec<f64> = corr.values.iter().map(|v| v.abs()).collect();
    let peaks: Vec<usize> = local_maxima(&abs)
        .into_iter()
        .filter(|&i| abs[i] > 1e-12)
        .collect();
    if peaks.len() < 4 {
        return Err(RydError::NotPeriodic(peaks.len()));
    }
    let pts: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&i| (i as f64 * corr.dt, abs[i].ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(RydError::IllConditioned(denom));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual = pts
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n;
    let non_decaying = slope >= 0.0;
    Ok(EnvelopeFit {
        amplitude: intercept.exp(),
        tau: if non_decaying { f64::INFINITY } else { -1.0 / slope },
        residual,
        non_decaying,
        n_peaks: pts.len(),
    })
}

/// Finite-size scaling verdict on N * F_peak across system sizes.
#[derive(Debug, Clone)]
pub struct CollapseReport {
    /// (N, omega_peak, N * F_peak) per input.
    pub points: Vec<(usize, f64, f64)>,
    /// Max pairwise relative deviation of N * F_peak.
    pub max_deviation: f64,
    pub collapsed: bool,
}

/// Checks whether the peak spectral weight scales as 1/N: N * F_peak should
/// be size-independent within 20% for quasicycles.
pub fn scaling_collapse(spectra: &[(usize, &Spectrum)], omega_min: f64) -> Result<CollapseReport> {
    if spectra.len() < 3 {
        return Err(RydError::Config("scaling collapse needs >= 3 sizes".into()));
    }
    let mut points = Vec::new();
    for &(n, spec) in spectra {
        let (omega, mag) =
            dominant_peak(spec, omega_min).ok_or(RydError::MissingPeak(n))?;
        points.push((n, omega, n as f64 * mag));
    }
    let mut max_deviation = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (a, b) = (points[i].2, points[j].2);
            max_deviation = max_deviation.max((a - b).abs() / a.max(b));
        }
    }
    Ok(CollapseReport { points, max_deviation, collapsed: max_deviation < 0.20 })
}

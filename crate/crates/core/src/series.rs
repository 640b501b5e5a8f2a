//! Uniform-grid time series of the two Rydberg populations, plus the peak
//! detection helpers shared by the mean-field and post-processing layers.

#[derive(Debug, Clone)]
pub struct PopSeries {
    pub t0: f64,
    pub dt: f64,
    pub n_s: Vec<f64>,
    pub n_r: Vec<f64>,
}

impl PopSeries {
    pub fn len(&self) -> usize {
        self.n_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_r.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Drop all samples before `t_cut` (absolute time).
    pub fn after(&self, t_cut: f64) -> PopSeries {
        let skip = (((t_cut - self.t0) / self.dt).ceil().max(0.0)) as usize;
        let skip = skip.min(self.len());
        PopSeries {
            t0: self.time(skip),
            dt: self.dt,
            n_s: self.n_s[skip..].to_vec(),
            n_r: self.n_r[skip..].to_vec(),
        }
    }
}

/// Centered moving average with half-window `half` samples.
pub fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    if half == 0 {
        return x.to_vec();
    }
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let s: f64 = x[lo..hi].iter().sum();
        out.push(s / (hi - lo) as f64);
    }
    out
}

/// Indices of strict local maxima (left-strict, right-weak to handle flat
/// sample ties).
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] >= x[i + 1] {
            out.push(i);
        }
    }
    out
}

/// Sub-sample peak location by parabolic interpolation around index `i`.
/// Returns (offset in samples within [-0.5, 0.5], interpolated value).
pub fn parabolic_refine(x: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (0.0, x[i]);
    }
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return (0.0, b);
    }
    let d = 0.5 * (a - c) / denom;
    let d = d.clamp(-0.5, 0.5);
    let v = b - 0.25 * (a - c) * d;
    (d, v)
}

/// Peak times and values of a series on a uniform grid, with parabolic
/// refinement.
pub fn peak_times(x: &[f64], t0: f64, dt: f64) -> Vec<(f64, f64)> {
    local_maxima(x)
        .into_iter()
        .map(|i| {
            let (off, v) = parabolic_refine(x, i);
            (t0 + (i as f64 + off) * dt, v)
        })
        .collect()
}

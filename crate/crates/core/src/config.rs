//! Human-readable key-value run configuration.
//!
//! Format: one `key = value` per line, `#` starts a comment, blank lines
//! ignored. Unknown keys are hard errors so typos cannot silently fall back
//! to defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Result, RydError};
use crate::model::{
    Boundary, C6Set, ChiSet, InteractionSpec, Lattice, SystemParams, DEFAULT_CUTOFF,
};

/// Fully resolved run configuration; serialized next to every output for
/// provenance.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub omega: f64,
    pub delta_s: f64,
    pub delta_r: f64,
    pub gamma: f64,
    pub interaction: String,
    pub chi: Option<f64>,
    pub c6: Option<f64>,
    pub cutoff: f64,
    pub edge: usize,
    pub boundary: String,
    // twa block
    pub n_traj: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub t_transient: f64,
    pub snapshot_times: Vec<f64>,
    pub subsystem_window: Option<usize>,
    // exact block
    pub n_atoms: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 2.0,
            delta_s: 8.0,
            delta_r: 3.0,
            gamma: 1.0,
            interaction: "all_to_all".into(),
            chi: Some(12.0),
            c6: None,
            cutoff: DEFAULT_CUTOFF,
            edge: 8,
            boundary: "periodic".into(),
            n_traj: 100,
            master_seed: 1,
            dt: 0.01,
            t_end: 100.0,
            t_transient: 20.0,
            snapshot_times: Vec::new(),
            subsystem_window: None,
            n_atoms: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| RydError::Config(format!("invalid value for {key}: {value:?}")))
}

impl RunConfig {
    /// Parse one config file. Later assignments override earlier ones;
    /// unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(RydError::Config(format!(
                    "line {}: expected key = value, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            seen.insert(key.clone(), value.trim().to_string());
            cfg.apply(&key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Apply one key-value assignment (also used for CLI flag overrides).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "omega" => self.omega = parse_num(key, value)?,
            "delta_s" => self.delta_s = parse_num(key, value)?,
            "delta_r" => self.delta_r = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "chi" => self.chi = Some(parse_num(key, value)?),
            "c6" => self.c6 = Some(parse_num(key, value)?),
            "cutoff" => self.cutoff = parse_num(key, value)?,
            "L" => self.edge = parse_num(key, value)?,
            "boundary" => match value {
                "open" | "periodic" => self.boundary = value.into(),
                _ => {
                    return Err(RydError::Config(format!(
                        "boundary must be open or periodic, got {value:?}"
                    )))
                }
            },
            "interaction" => match value {
                "all_to_all" | "vdw" => self.interaction = value.into(),
                _ => {
                    return Err(RydError::Config(format!(
                        "interaction must be all_to_all or vdw, got {value:?}"
                    )))
                }
            },
            "n_traj" => self.n_traj = parse_num(key, value)?,
            "master_seed" => self.master_seed = parse_num(key, value)?,
            "dt" => self.dt = parse_num(key, value)?,
            "t_end" => self.t_end = parse_num(key, value)?,
            "t_transient" => self.t_transient = parse_num(key, value)?,
            "snapshot_times" => {
                self.snapshot_times = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num("snapshot_times", s))
                    .collect::<Result<_>>()?;
            }
            "subsystem_window" => self.subsystem_window = Some(parse_num(key, value)?),
            "n_atoms" => self.n_atoms = Some(parse_num(key, value)?),
            _ => return Err(RydError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if self.edge == 0 {
            return Err(RydError::Config("L must be >= 1".into()));
        }
        if self.dt <= 0.0 || self.t_end <= 0.0 {
            return Err(RydError::Config("dt and t_end must be positive".into()));
        }
        if self.t_transient < 0.0 || self.t_transient >= self.t_end {
            return Err(RydError::Config("t_transient must lie in [0, t_end)".into()));
        }
        match self.interaction.as_str() {
            "all_to_all" => {
                if self.chi.is_none() {
                    return Err(RydError::Config("all_to_all interaction needs chi".into()));
                }
            }
            "vdw" => {
                if self.c6.is_none() && self.chi.is_none() {
                    return Err(RydError::Config("vdw interaction needs c6 or chi".into()));
                }
            }
            _ => unreachable!(),
        }
        if let Some(w) = self.subsystem_window {
            if w == 0 || w > self.edge {
                return Err(RydError::Config(format!(
                    "subsystem_window {w} must lie in [1, L = {}]",
                    self.edge
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            omega_s: self.omega,
            omega_r: self.omega,
            delta_s: self.delta_s,
            delta_r: self.delta_r,
            gamma_s: self.gamma,
            gamma_r: self.gamma,
        }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let boundary = match self.boundary.as_str() {
            "open" => Boundary::Open,
            _ => Boundary::Periodic,
        };
        Lattice::new(self.edge, boundary)
    }

    pub fn chi_set(&self) -> ChiSet {
        ChiSet::uniform(self.chi.unwrap_or(12.0))
    }

    /// Interaction spec; for vdw without an explicit c6, the coefficient is
    /// calibrated so the collective shift matches the all-to-all chi.
    pub fn interaction_spec(&self) -> Result<InteractionSpec> {
        match self.interaction.as_str() {
            "all_to_all" => Ok(InteractionSpec::AllToAll { chi: self.chi_set() }),
            "vdw" => {
                let c6 = match self.c6 {
                    Some(c) => C6Set::uniform(c),
                    None => C6Set::uniform(crate::model::calibrate_c6(
                        self.chi.unwrap(),
                        self.cutoff,
                    )),
                };
                Ok(InteractionSpec::VdW { c6, cutoff_radius: self.cutoff })
            }
            _ => unreachable!(),
        }
    }

    /// Site indices of the subsystem window: a w x w block anchored at the
    /// lattice center.
    pub fn window_sites(&self) -> Result<Option<Vec<usize>>> {
        let Some(w) = self.subsystem_window else { return Ok(None) };
        let lat = self.lattice()?;
        let off = (self.edge - w) / 2;
        let mut sites = Vec::with_capacity(w * w);
        for i in 0..w {
            for j in 0..w {
                sites.push(lat.site(off + i, off + j));
            }
        }
        Ok(Some(sites))
    }
}

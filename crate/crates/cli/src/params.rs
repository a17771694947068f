//! Resolved run parameters: per-command defaults, overlaid by a JSON config
//! file, overlaid by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spinthermal::ensemble::{EnsembleConfig, PairSelection};
use spinthermal::fit::FitConfig;
use spinthermal::hamiltonians::DEFAULT_MAX_SITES;

use crate::Failure;

pub const MAX_L_VAR: &str = "SPINTHERMAL_MAX_L";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    TwoSpin,
    Threshold,
    Chain,
    Fit,
    Ensemble,
    Distance,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::TwoSpin => "two-spin",
            Kind::Threshold => "threshold",
            Kind::Chain => "chain",
            Kind::Fit => "fit",
            Kind::Ensemble => "ensemble",
            Kind::Distance => "distance",
        }
    }

    pub fn uses_chain(self) -> bool {
        !matches!(self, Kind::TwoSpin | Kind::Threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub j: f64,
    pub gamma: f64,
    /// Chain length `L`.
    pub sites: usize,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
    pub realizations: usize,
    /// Master seed; drawn at random when absent and always recorded.
    pub seed: Option<u64>,
    /// Centered pairs at these separations; empty means `pair` (or the
    /// middle pair), except for `distance`, which then sweeps all of them.
    pub separations: Vec<usize>,
    pub pair: Option<[usize; 2]>,
    /// `h1 + h2` for the two-spin commands.
    pub hsum: f64,
    /// Detunings `Δh = (h1 - h2)/J` for the two-spin commands.
    pub delta_h: Vec<f64>,
    pub fit: FitConfig,
}

/// Inclusive grid; points are rounded six digits below the step's leading
/// digit so that `0:1:0.1` yields `0.3`, not `0.30000000000000004`.
fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let scale = 10f64.powi(6 - step.log10().floor() as i32);
    (0..=n)
        .map(|k| ((lo + k as f64 * step) * scale).round() / scale)
        .collect()
}

impl Params {
    pub fn defaults(kind: Kind) -> Self {
        let base = Params {
            j: 1.0,
            gamma: 0.4,
            sites: 12,
            lambdas: vec![0.5, 4.0],
            betas: vec![0.0, 0.5, 1.0, 2.0, 5.0],
            realizations: 200,
            seed: None,
            separations: Vec::new(),
            pair: None,
            hsum: 0.0,
            delta_h: grid(0.0, 4.0, 0.1),
            fit: FitConfig::default(),
        };
        match kind {
            Kind::TwoSpin => Params {
                betas: grid(0.2, 10.0, 0.2),
                ..base
            },
            Kind::Threshold => Params {
                delta_h: grid(0.0, 4.0, 0.25),
                ..base
            },
            Kind::Chain => Params {
                lambdas: vec![4.0],
                realizations: 1,
                ..base
            },
            Kind::Fit => Params {
                sites: 10,
                lambdas: vec![0.3, 4.0],
                betas: vec![0.2, 1.0, 5.0],
                realizations: 20,
                ..base
            },
            Kind::Ensemble => base,
            Kind::Distance => Params {
                lambdas: vec![4.0],
                betas: vec![1.0, 2.0, 5.0],
                ..base
            },
        }
    }

    /// Defaults for `kind` with the keys of a JSON object laid over them.
    pub fn with_overrides(kind: Kind, overrides: &Value) -> Result<Self, Failure> {
        let Value::Object(map) = overrides else {
            return Err(Failure::Usage("config file must hold a JSON object".into()));
        };
        let mut merged = serde_json::to_value(Self::defaults(kind)).expect("params serialize");
        let target = merged.as_object_mut().expect("params are an object");
        for (k, v) in map {
            target.insert(k.clone(), v.clone());
        }
        serde_json::from_value(merged).map_err(|e| Failure::Usage(format!("invalid config: {e}")))
    }

    pub fn from_file(kind: Kind, path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| {
            Failure::Usage(format!("config {} is not valid JSON: {e}", path.display()))
        })?;
        Self::with_overrides(kind, &value)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("seed resolved before use")
    }

    /// Checks everything that does not need a computation. Chain commands
    /// additionally go through [`Params::ensemble_config`].
    pub fn validate(&self, kind: Kind) -> Result<(), Failure> {
        let usage = |m: String| Err(Failure::Usage(m));
        if !self.j.is_finite() || !self.gamma.is_finite() {
            return usage("J and gamma must be finite".into());
        }
        if self.j == 0.0 && !kind.uses_chain() {
            return usage("J must be nonzero".into());
        }
        match kind {
            Kind::TwoSpin | Kind::Threshold => {
                if !self.hsum.is_finite() {
                    return usage("hsum must be finite".into());
                }
                if self.delta_h.is_empty() {
                    return usage("the detuning grid is empty".into());
                }
                if let Some(d) = self.delta_h.iter().find(|d| !d.is_finite()) {
                    return usage(format!("detuning must be finite, got {d}"));
                }
            }
            _ => {}
        }
        if kind != Kind::Threshold {
            if self.betas.is_empty() {
                return usage("the beta grid is empty".into());
            }
            if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
                return usage(format!("beta must be finite and >= 0, got {b}"));
            }
        }
        Ok(())
    }

    pub fn ensemble_config(&self, kind: Kind, max_sites: usize) -> EnsembleConfig {
        EnsembleConfig {
            sites: self.sites,
            j: self.j,
            gamma: self.gamma,
            lambdas: self.lambdas.clone(),
            betas: self.betas.clone(),
            realizations: self.realizations,
            master_seed: self.seed(),
            pair: match self.pair {
                Some([i, j]) => PairSelection::Sites { i, j },
                None => PairSelection::Middle,
            },
            separations: self.separations.clone(),
            fit: (kind == Kind::Fit).then_some(self.fit),
            max_sites,
        }
    }
}

pub fn max_sites_from_env() -> Result<usize, Failure> {
    match std::env::var(MAX_L_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Usage(format!("{MAX_L_VAR} must be a positive integer, got {v:?}"))
        }),
        Err(_) => Ok(DEFAULT_MAX_SITES),
    }
}

/// Parses `x` or the inclusive range `a:b:step`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t:?}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(a.is_finite() && b.is_finite()) || !(step.is_finite() && step > 0.0) {
                return Err(format!(
                    "range {s:?} needs finite bounds and a positive step"
                ));
            }
            if b < a {
                return Err(format!("range {s:?} is empty"));
            }
            if (b - a) / step > 1e6 {
                return Err(format!("range {s:?} has too many points"));
            }
            Ok(grid(a, b, step))
        }
        _ => Err(format!("expected a number or a:b:step, got {s:?}")),
    }
}

pub fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let p = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("not a site index: {t:?}"))
    };
    Ok([p(a)?, p(b)?])
}

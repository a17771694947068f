//! Disorder sampling, per-realization pipelines and ensemble statistics.
//!
//! Random numbers come from ChaCha20 keyed by the seed and a domain tag
//! ([`PRNG_STREAM`]). Realization `k` of an ensemble uses the seed
//! `realization_seed(master, k)` for every disorder strength, so the field
//! pattern of a realization is shared across `λ`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix4;
use crate::entanglement::{analytic_concurrence, concurrence, concurrence_x_state, eof};
use crate::error::{ensure_finite, Error, Result};
use crate::fit::{fit_alphas, FitConfig, FitResult};
use crate::hamiltonians::{chain_hamiltonian_with_limit, ChainSpec, PairSpec, DEFAULT_MAX_SITES};
use crate::thermal::{diagonalize, ThermalState};

/// Name and version of the random stream; changing the sampling procedure
/// must bump it.
pub const PRNG_STREAM: &str = "chacha20-u53-v1";

/// Concurrence below which a state counts as separable.
pub const SEPARABLE_CUTOFF: f64 = 1e-12;

const DOMAIN_FIELDS: [u8; 8] = *b"fields\0\0";
const DOMAIN_SPLIT: [u8; 8] = *b"split\0\0\0";

fn keyed_rng(seed: u64, domain: [u8; 8]) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain);
    ChaCha20Rng::from_seed(key)
}

/// Seed of realization `index`, from stream `index` of the master key.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    let mut rng = keyed_rng(master, DOMAIN_SPLIT);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// `sites` i.i.d. fields uniform on `[-1, 1)`: `2 (x >> 11) / 2^53 - 1`.
pub fn sample_disorder(seed: u64, sites: usize) -> Vec<f64> {
    let mut rng = keyed_rng(seed, DOMAIN_FIELDS);
    (0..sites)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            2.0 * u - 1.0
        })
        .collect()
}

/// Sites of a pair separated by `n` spins, centered in a chain of `sites`:
/// `(⌈(L - n)/2⌉, ⌈(L - n)/2⌉ + n + 1)`, 1-based.
pub fn centered_pair(sites: usize, n: usize) -> Result<(usize, usize)> {
    if sites < 2 || n + 2 > sites {
        return Err(Error::InvalidParameter(format!(
            "separation {n} does not fit in a chain of {sites} sites"
        )));
    }
    let i = (sites - n).div_ceil(2);
    Ok((i, i + n + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSelection {
    /// Sites `(⌈L/2⌉, ⌈L/2⌉ + 1)`.
    Middle,
    Sites {
        i: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub sites: usize,
    pub j: f64,
    pub gamma: f64,
    pub lambdas: Vec<f64>,
    /// Finite inverse temperatures.
    pub betas: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    pub pair: PairSelection,
    /// Centered pairs with these separations; when empty, `pair` is used.
    pub separations: Vec<usize>,
    pub fit: Option<FitConfig>,
    pub max_sites: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            sites: 12,
            j: 1.0,
            gamma: 0.4,
            lambdas: vec![0.5, 4.0],
            betas: vec![0.0, 0.5, 1.0, 2.0, 5.0],
            realizations: 200,
            master_seed: 0,
            pair: PairSelection::Middle,
            separations: Vec::new(),
            fit: None,
            max_sites: DEFAULT_MAX_SITES,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sites > self.max_sites {
            return Err(Error::ResourceLimit {
                sites: self.sites,
                max: self.max_sites,
            });
        }
        if self.sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "L must be >= 2, got {}",
                self.sites
            )));
        }
        ensure_finite("J", self.j)?;
        ensure_finite("gamma", self.gamma)?;
        if self.realizations == 0 {
            return Err(Error::InvalidParameter(
                "realization count must be >= 1".into(),
            ));
        }
        if self.lambdas.is_empty() || self.betas.is_empty() {
            return Err(Error::InvalidParameter(
                "lambda and beta lists must be non-empty".into(),
            ));
        }
        for &l in &self.lambdas {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lambda must be finite and >= 0, got {l}"
                )));
            }
        }
        for &b in &self.betas {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "beta must be finite and >= 0, got {b}"
                )));
            }
        }
        if let Some(fit) = &self.fit {
            fit.validate()?;
        }
        self.pairs().map(|_| ())
    }

    /// `(separation, i, j)` for every pair measured in a realization.
    pub fn pairs(&self) -> Result<Vec<(usize, usize, usize)>> {
        if self.separations.is_empty() {
            let (i, j) = match self.pair {
                PairSelection::Middle => centered_pair(self.sites, 0)?,
                PairSelection::Sites { i, j } => {
                    crate::hamiltonians::check_pair(i, j, self.sites)?;
                    (i, j)
                }
            };
            Ok(vec![(j - i - 1, i, j)])
        } else {
            self.separations
                .iter()
                .map(|&n| centered_pair(self.sites, n).map(|(i, j)| (n, i, j)))
                .collect()
        }
    }
}

/// One `(β, pair)` measurement of a realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPoint {
    pub beta: f64,
    pub separation: usize,
    pub site_i: usize,
    pub site_j: usize,
    pub concurrence: f64,
    pub eof: f64,
    /// `tr ρ²` of the reduced state.
    pub purity: f64,
    /// Chain thermal energy `Ē`.
    pub ebar: f64,
    /// `Ē / (E∞ - E0)` of the chain.
    pub normalized_energy: f64,
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    pub lambda: f64,
    pub fields: Vec<f64>,
    /// Ordered by β, then by pair.
    pub points: Vec<PairPoint>,
}

/// Concurrence and EoF of a reduced state, taking the X-state formula when
/// the state has that shape.
pub fn pair_entanglement(rho: &DensityMatrix4) -> Result<(f64, f64)> {
    let c = match concurrence_x_state(rho) {
        Ok(r) => r.concurrence,
        Err(Error::NotXState(_)) => concurrence(rho).concurrence,
        Err(e) => return Err(e),
    };
    let e = if c < SEPARABLE_CUTOFF { 0.0 } else { eof(c)? };
    Ok((c, e))
}

pub fn run_realization(
    config: &EnsembleConfig,
    lambda: f64,
    index: usize,
) -> Result<RealizationRecord> {
    let seed = realization_seed(config.master_seed, index);
    let wrap = |e: Error| Error::Realization {
        index,
        seed,
        source: Box::new(e),
    };

    let fields = sample_disorder(seed, config.sites);
    let pairs = config.pairs().map_err(wrap)?;
    let chain = ChainSpec::new(config.j, config.gamma, lambda, fields.clone()).map_err(wrap)?;
    let blocks = chain_hamiltonian_with_limit(&chain, config.max_sites).map_err(wrap)?;
    let spectrum = diagonalize(&blocks).map_err(wrap)?;
    drop(blocks);
    let reductions = pairs
        .iter()
        .map(|&(_, i, j)| spectrum.pair_reduction(i, j))
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;

    let mut points = Vec::with_capacity(config.betas.len() * pairs.len());
    for &beta in &config.betas {
        let thermal = ThermalState::new(&spectrum, beta).map_err(wrap)?;
        let scales = thermal.energy_scales();
        for (&(separation, i, j), reduction) in pairs.iter().zip(&reductions) {
            let rho = reduction.reduce(&thermal).map_err(wrap)?;
            let (c, e) = pair_entanglement(&rho).map_err(wrap)?;
            let fit = match &config.fit {
                Some(cfg) => {
                    let base = chain.pair_spec(i, j).map_err(wrap)?;
                    Some(fit_alphas(&rho, &base, beta, cfg).map_err(wrap)?)
                }
                None => None,
            };
            points.push(PairPoint {
                beta,
                separation,
                site_i: i,
                site_j: j,
                concurrence: c,
                eof: e,
                purity: rho.purity(),
                ebar: scales.ebar,
                normalized_energy: scales.normalized_energy(),
                fit,
            });
        }
    }
    Ok(RealizationRecord {
        index,
        seed,
        lambda,
        fields,
        points,
    })
}

/// Statistics of one `(λ, β, separation)` cell across realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub lambda: f64,
    pub beta: f64,
    pub separation: usize,
    pub count: usize,
    pub mean_eof: f64,
    /// Population variance (divides by the count).
    pub var_eof: f64,
    /// Standard error of the mean, `sqrt(var / (count - 1))`; zero for one
    /// realization.
    pub stderr_eof: f64,
    pub min_eof: f64,
    pub max_eof: f64,
    pub mean_concurrence: f64,
    pub mean_normalized_energy: f64,
    /// Every realization is separable in this cell.
    pub all_separable: bool,
    pub mean_d_unfitted: Option<f64>,
    pub mean_d_fitted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationFailure {
    pub lambda: f64,
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    /// Ordered by λ (config order), then realization index.
    pub records: Vec<RealizationRecord>,
    pub failures: Vec<RealizationFailure>,
    /// Ordered by λ, β, then pair.
    pub stats: Vec<CellStats>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Index-ordered reduction of the records of one disorder strength.
pub fn aggregate(lambda: f64, records: &[&RealizationRecord]) -> Vec<CellStats> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    (0..first.points.len())
        .map(|p| {
            let pts: Vec<&PairPoint> = records.iter().map(|r| &r.points[p]).collect();
            let eofs: Vec<f64> = pts.iter().map(|x| x.eof).collect();
            let m = mean(&eofs);
            let var = population_variance(&eofs, m);
            let n = eofs.len();
            let fits: Vec<&FitResult> = pts.iter().filter_map(|x| x.fit.as_ref()).collect();
            let fit_mean = |f: fn(&FitResult) -> f64| {
                (fits.len() == n).then(|| fits.iter().map(|r| f(r)).sum::<f64>() / n as f64)
            };
            CellStats {
                lambda,
                beta: pts[0].beta,
                separation: pts[0].separation,
                count: n,
                mean_eof: m,
                var_eof: var,
                stderr_eof: if n > 1 {
                    (var / (n - 1) as f64).sqrt()
                } else {
                    0.0
                },
                min_eof: eofs.iter().copied().fold(f64::INFINITY, f64::min),
                max_eof: eofs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_concurrence: mean(&pts.iter().map(|x| x.concurrence).collect::<Vec<_>>()),
                mean_normalized_energy: mean(
                    &pts.iter().map(|x| x.normalized_energy).collect::<Vec<_>>(),
                ),
                all_separable: eofs.iter().all(|&e| e == 0.0),
                mean_d_unfitted: fit_mean(|r| r.d_unfitted),
                mean_d_fitted: fit_mean(|r| r.d_fitted),
            }
        })
        .collect()
}

/// Runs every `(λ, realization)` task on the current rayon pool and
/// aggregates in index order, so results do not depend on scheduling.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleRun> {
    config.validate()?;
    let tasks: Vec<(f64, usize)> = config
        .lambdas
        .iter()
        .flat_map(|&l| (0..config.realizations).map(move |k| (l, k)))
        .collect();
    let outcomes: Vec<Result<RealizationRecord>> = tasks
        .par_iter()
        .map(|&(lambda, index)| run_realization(config, lambda, index))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (&(lambda, index), outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(RealizationFailure {
                lambda,
                index,
                seed: realization_seed(config.master_seed, index),
                message: e.to_string(),
            }),
        }
    }

    let mut stats = Vec::new();
    for (li, &lambda) in config.lambdas.iter().enumerate() {
        let group: Vec<&RealizationRecord> = records
            .iter()
            .filter(|r| tasks_lambda_index(config, r) == li)
            .collect();
        stats.extend(aggregate(lambda, &group));
    }
    Ok(EnsembleRun {
        records,
        failures,
        stats,
    })
}

fn tasks_lambda_index(config: &EnsembleConfig, record: &RealizationRecord) -> usize {
    config
        .lambdas
        .iter()
        .position(|&l| l.to_bits() == record.lambda.to_bits())
        .unwrap_or(usize::MAX)
}

/// First separation from which the ensemble is separable for good.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vanishing {
    pub lambda: f64,
    pub beta: f64,
    /// Smallest swept `n` with every cell at `n' >= n` separable in all
    /// realizations; `None` if the largest swept separation is still
    /// entangled somewhere.
    pub n_star: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub run: EnsembleRun,
    pub vanishing: Vec<Vanishing>,
}

/// EoF versus separation. An empty separation list sweeps `0..=L-2`.
pub fn distance_sweep(config: &EnsembleConfig) -> Result<DistanceTable> {
    let mut config = config.clone();
    if config.separations.is_empty() {
        config.separations = (0..=config.sites.saturating_sub(2)).collect();
    }
    config.separations.sort_unstable();
    config.separations.dedup();
    let run = run_ensemble(&config)?;

    let mut vanishing = Vec::new();
    for &lambda in &config.lambdas {
        for &beta in &config.betas {
            let mut cells: Vec<&CellStats> = run
                .stats
                .iter()
                .filter(|c| {
                    c.lambda.to_bits() == lambda.to_bits() && c.beta.to_bits() == beta.to_bits()
                })
                .collect();
            cells.sort_by_key(|c| c.separation);
            let mut n_star = None;
            for c in cells.iter().rev() {
                if c.all_separable {
                    n_star = Some(c.separation);
                } else {
                    break;
                }
            }
            vanishing.push(Vanishing {
                lambda,
                beta,
                n_star,
            });
        }
    }
    Ok(DistanceTable { run, vanishing })
}

/// Mean EoF against mean normalized energy for one `(λ, separation)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCurve {
    /// `(normalized energy, mean EoF, stderr)` sorted by energy.
    pub points: Vec<(f64, f64, f64)>,
}

impl EnergyCurve {
    pub fn from_stats(stats: &[CellStats], lambda: f64, separation: usize) -> Self {
        let mut points: Vec<(f64, f64, f64)> = stats
            .iter()
            .filter(|c| c.lambda.to_bits() == lambda.to_bits() && c.separation == separation)
            .map(|c| (c.mean_normalized_energy, c.mean_eof, c.stderr_eof))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points }
    }

    pub fn energy_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.0, self.points.last()?.0))
    }

    /// Linear interpolation of `(mean EoF, stderr)` at `energy`.
    pub fn at(&self, energy: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.energy_range()?;
        if !(lo..=hi).contains(&energy) {
            return None;
        }
        let k = self.points.partition_point(|p| p.0 < energy);
        if k == 0 {
            return Some((self.points[0].1, self.points[0].2));
        }
        let (a, b) = (self.points[k - 1], self.points[k]);
        let t = if b.0 > a.0 {
            (energy - a.0) / (b.0 - a.0)
        } else {
            0.0
        };
        Some((a.1 + t * (b.1 - a.1), a.2 + t * (b.2 - a.2)))
    }

    /// Energy where the mean EoF first reaches zero coming from the cold
    /// end, by linear interpolation between the bracketing points.
    pub fn zero_crossing(&self) -> Option<f64> {
        let k = self.points.iter().position(|p| p.1 == 0.0)?;
        if k == 0 {
            return Some(self.points[0].0);
        }
        let (a, b) = (self.points[k - 1], self.points[k]);
        Some(a.0 + (b.0 - a.0) * a.1 / (a.1 - b.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub delta_h: f64,
    pub h1: f64,
    pub h2: f64,
    pub beta: f64,
    pub concurrence: f64,
    pub eof: f64,
}

/// Closed-form EoF over a `(Δh, β)` grid at fixed `γ` and `h1 + h2`,
/// detuning-major.
pub fn two_spin_phase_map(
    j: f64,
    gamma: f64,
    field_sum: f64,
    delta_hs: &[f64],
    betas: &[f64],
) -> Result<Vec<PhaseCell>> {
    if j == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let mut cells = Vec::with_capacity(delta_hs.len() * betas.len());
    for &dh in delta_hs {
        let spec = PairSpec::from_detuning(j, gamma, dh, field_sum)?;
        for &beta in betas {
            let c = analytic_concurrence(&spec, beta)?;
            let e = if c < SEPARABLE_CUTOFF { 0.0 } else { eof(c)? };
            cells.push(PhaseCell {
                delta_h: dh,
                h1: spec.h1,
                h2: spec.h2,
                beta,
                concurrence: c,
                eof: e,
            });
        }
    }
    Ok(cells)
}

//! Two-spin, effective two-spin and open XXZ chain Hamiltonians.
//!
//! Basis convention, used everywhere in the crate: site `k` (1-based, as in
//! the physics literature) is bit `k - 1` of the basis integer, and a set bit
//! means spin up. For two spins this gives the ordering
//! `{|↓↓⟩, |↑↓⟩, |↓↑⟩, |↑↑⟩} = {0b00, 0b01, 0b10, 0b11}` where the left arrow
//! is site 1. Spin operators are `S = σ/2` and `k_B = 1`.

use faer::Mat;
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Largest chain accepted by [`chain_hamiltonian`] unless overridden.
pub const DEFAULT_MAX_SITES: usize = 16;

/// Largest chain for which the unblocked `2^L × 2^L` matrix may be built.
pub const FULL_MATRIX_MAX_SITES: usize = 12;

/// Two spins with XXZ exchange in an inhomogeneous longitudinal field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub j: f64,
    pub gamma: f64,
    pub h1: f64,
    pub h2: f64,
}

impl PairSpec {
    pub fn new(j: f64, gamma: f64, h1: f64, h2: f64) -> Result<Self> {
        let spec = Self { j, gamma, h1, h2 };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the pair from the detuning `Δh = (h1 - h2) / J` and the field
    /// sum `h1 + h2`.
    pub fn from_detuning(j: f64, gamma: f64, delta_h: f64, field_sum: f64) -> Result<Self> {
        ensure_finite("delta_h", delta_h)?;
        ensure_finite("field_sum", field_sum)?;
        let diff = delta_h * j;
        Self::new(j, gamma, 0.5 * (field_sum + diff), 0.5 * (field_sum - diff))
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("J", self.j)?;
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("h1", self.h1)?;
        ensure_finite("h2", self.h2)
    }

    pub fn field_sum(&self) -> f64 {
        self.h1 + self.h2
    }

    /// `Δh = (h1 - h2) / J`.
    pub fn delta_h(&self) -> Result<f64> {
        if self.j == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        Ok((self.h1 - self.h2) / self.j)
    }

    /// `ξ = sqrt(1 + Δh²) / 2`.
    pub fn xi(&self) -> Result<f64> {
        Ok(0.5 * self.delta_h()?.hypot(1.0))
    }
}

/// Open XXZ chain in a disordered longitudinal field `λ Σ h_i S^z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub j: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Unscaled site fields `h_i ∈ [-1, 1]`, site 1 first.
    pub fields: Vec<f64>,
}

impl ChainSpec {
    pub fn new(j: f64, gamma: f64, lambda: f64, fields: Vec<f64>) -> Result<Self> {
        let spec = Self {
            j,
            gamma,
            lambda,
            fields,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sites(&self) -> usize {
        self.fields.len()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("J", self.j)?;
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("lambda", self.lambda)?;
        if self.lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.sites() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a chain needs at least 2 sites, got {}",
                self.sites()
            )));
        }
        for (k, &h) in self.fields.iter().enumerate() {
            if !(-1.0..=1.0).contains(&h) {
                return Err(Error::InvalidParameter(format!(
                    "field h_{} = {h} outside [-1, 1]",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// The pair spec seen by sites `i` and `j` (1-based) when everything else
    /// is removed: same coupling, fields `λ h_i` and `λ h_j`.
    pub fn pair_spec(&self, i: usize, j: usize) -> Result<PairSpec> {
        check_pair(i, j, self.sites())?;
        PairSpec::new(
            self.j,
            self.gamma,
            self.lambda * self.fields[i - 1],
            self.lambda * self.fields[j - 1],
        )
    }
}

/// Two-spin Hamiltonian with rescaled coupling and fields.
///
/// The coupling correction is always `α0 = (α1 + α2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSpec {
    pub base: PairSpec,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl EffectiveSpec {
    pub fn new(base: PairSpec, alpha1: f64, alpha2: f64) -> Result<Self> {
        base.validate()?;
        ensure_finite("alpha1", alpha1)?;
        ensure_finite("alpha2", alpha2)?;
        Ok(Self {
            base,
            alpha1,
            alpha2,
        })
    }

    pub fn alpha0(&self) -> f64 {
        0.5 * (self.alpha1 + self.alpha2)
    }

    /// The rescaled pair `((1+α0)J, γ, (1+α1)h1, (1+α2)h2)`.
    pub fn scaled(&self) -> Result<PairSpec> {
        PairSpec::new(
            (1.0 + self.alpha0()) * self.base.j,
            self.base.gamma,
            (1.0 + self.alpha1) * self.base.h1,
            (1.0 + self.alpha2) * self.base.h2,
        )
    }
}

pub(crate) fn check_pair(i: usize, j: usize, sites: usize) -> Result<()> {
    if i >= 1 && i < j && j <= sites {
        Ok(())
    } else {
        Err(Error::SiteOutOfRange { i, j, sites })
    }
}

pub fn two_spin_hamiltonian(spec: &PairSpec) -> Result<Matrix4<f64>> {
    spec.validate()?;
    let zz = 0.25 * spec.gamma * spec.j;
    let sum = 0.5 * spec.field_sum();
    let diff = 0.5 * (spec.h1 - spec.h2);
    let flip = 0.5 * spec.j;
    #[rustfmt::skip]
    let h = Matrix4::new(
        zz - sum, 0.0,        0.0,        0.0,
        0.0,      -zz + diff, flip,       0.0,
        0.0,      flip,       -zz - diff, 0.0,
        0.0,      0.0,        0.0,        zz + sum,
    );
    Ok(h)
}

pub fn effective_hamiltonian(spec: &EffectiveSpec) -> Result<Matrix4<f64>> {
    two_spin_hamiltonian(&spec.scaled()?)
}

/// Basis integers grouped by number of up spins `m = 0..=sites`, each list
/// sorted ascending.
pub fn sz_sector_index(sites: usize) -> Vec<Vec<u32>> {
    assert!(
        (1..32).contains(&sites),
        "sector index supports 1..=31 sites, got {sites}"
    );
    let mut sectors = vec![Vec::new(); sites + 1];
    for state in 0..(1u32 << sites) {
        sectors[state.count_ones() as usize].push(state);
    }
    sectors
}

/// One fixed-magnetization block of the chain Hamiltonian.
#[derive(Debug, Clone)]
pub struct Sector {
    pub up_count: usize,
    pub basis: Vec<u32>,
    pub block: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct SectorBlocks {
    sites: usize,
    sectors: Vec<Sector>,
}

impl SectorBlocks {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Scatters the blocks back into the full matrix in natural basis order.
    pub fn to_dense(&self) -> Result<Mat<f64>> {
        check_full_size(self.sites)?;
        let dim = 1usize << self.sites;
        let mut full = Mat::<f64>::zeros(dim, dim);
        for sector in &self.sectors {
            for (a, &sa) in sector.basis.iter().enumerate() {
                for (b, &sb) in sector.basis.iter().enumerate() {
                    full[(sa as usize, sb as usize)] = sector.block[(a, b)];
                }
            }
        }
        Ok(full)
    }
}

fn check_full_size(sites: usize) -> Result<()> {
    if sites > FULL_MATRIX_MAX_SITES {
        Err(Error::ResourceLimit {
            sites,
            max: FULL_MATRIX_MAX_SITES,
        })
    } else {
        Ok(())
    }
}

fn diagonal_energy(spec: &ChainSpec, state: u32) -> f64 {
    let zz = 0.25 * spec.gamma * spec.j;
    let sites = spec.sites();
    let up = |k: usize| state >> k & 1 == 1;
    let mut energy = 0.0;
    for k in 0..sites - 1 {
        energy += if up(k) == up(k + 1) { zz } else { -zz };
    }
    let mut field = 0.0;
    for (k, &h) in spec.fields.iter().enumerate() {
        field += if up(k) { 0.5 * h } else { -0.5 * h };
    }
    energy + spec.lambda * field
}

/// Calls `f(partner)` for every state reached from `state` by one flip-flop
/// on a bond; the matrix element is always `J / 2`.
fn for_each_flip(sites: usize, state: u32, mut f: impl FnMut(u32)) {
    for k in 0..sites - 1 {
        if (state >> k ^ state >> (k + 1)) & 1 == 1 {
            f(state ^ (0b11 << k));
        }
    }
}

pub fn chain_hamiltonian(spec: &ChainSpec) -> Result<SectorBlocks> {
    chain_hamiltonian_with_limit(spec, DEFAULT_MAX_SITES)
}

pub fn chain_hamiltonian_with_limit(spec: &ChainSpec, max_sites: usize) -> Result<SectorBlocks> {
    spec.validate()?;
    let sites = spec.sites();
    if sites > max_sites {
        return Err(Error::ResourceLimit {
            sites,
            max: max_sites,
        });
    }
    let index = sz_sector_index(sites);
    let mut position = vec![0u32; 1 << sites];
    for basis in &index {
        for (p, &s) in basis.iter().enumerate() {
            position[s as usize] = p as u32;
        }
    }
    let flip = 0.5 * spec.j;
    let sectors = index
        .into_iter()
        .enumerate()
        .map(|(up_count, basis)| {
            let dim = basis.len();
            let mut block = Mat::<f64>::zeros(dim, dim);
            for (a, &state) in basis.iter().enumerate() {
                block[(a, a)] = diagonal_energy(spec, state);
                for_each_flip(sites, state, |partner| {
                    block[(position[partner as usize] as usize, a)] = flip;
                });
            }
            Sector {
                up_count,
                basis,
                block,
            }
        })
        .collect();
    Ok(SectorBlocks { sites, sectors })
}

/// Unblocked assembly in natural basis order; capped at
/// [`FULL_MATRIX_MAX_SITES`].
pub fn full_chain_hamiltonian(spec: &ChainSpec) -> Result<Mat<f64>> {
    spec.validate()?;
    let sites = spec.sites();
    check_full_size(sites)?;
    let dim = 1usize << sites;
    let flip = 0.5 * spec.j;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for state in 0..dim as u32 {
        h[(state as usize, state as usize)] = diagonal_energy(spec, state);
        for_each_flip(sites, state, |partner| {
            h[(partner as usize, state as usize)] = flip;
        });
    }
    Ok(h)
}

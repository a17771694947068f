//! Spectral decompositions, Gibbs weights and reduced two-site states.
//!
//! Chain Gibbs states are kept in eigenvector/weight form; the `2^L × 2^L`
//! matrix is only materialized on request for small chains.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd;
use faer::{Mat, Par};
use nalgebra::{Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix4;
use crate::error::{ensure_beta, Error, Result};
use crate::hamiltonians::{check_pair, PairSpec, SectorBlocks, FULL_MATRIX_MAX_SITES};

/// Relative energy window treated as the ground space at `β = ∞`.
pub const GROUND_WINDOW: f64 = 1e-10;

/// Eigenpairs of one diagonal block, in ascending energy order.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    /// Up-spin count when the block is a magnetization sector.
    pub sector: Option<usize>,
    pub basis: Vec<u32>,
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, rows indexed like `basis`.
    pub vectors: Mat<f64>,
}

/// One eigenvalue of the whole spectrum and where its vector lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub block: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    sites: usize,
    blocks: Vec<EigenBlock>,
    levels: Vec<Level>,
    /// Basis integer -> (block, row within block).
    locate: Vec<(u32, u32)>,
}

impl SpectralDecomposition {
    fn assemble(sites: usize, blocks: Vec<EigenBlock>) -> Self {
        let mut levels: Vec<Level> = blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| {
                block
                    .energies
                    .iter()
                    .enumerate()
                    .map(move |(column, &energy)| Level {
                        energy,
                        block: b,
                        column,
                    })
            })
            .collect();
        levels.sort_by(|x, y| {
            x.energy
                .total_cmp(&y.energy)
                .then(x.block.cmp(&y.block))
                .then(x.column.cmp(&y.column))
        });
        let mut locate = vec![(u32::MAX, u32::MAX); 1 << sites];
        for (b, block) in blocks.iter().enumerate() {
            for (row, &state) in block.basis.iter().enumerate() {
                locate[state as usize] = (b as u32, row as u32);
            }
        }
        Self {
            sites,
            blocks,
            levels,
            locate,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    /// All levels in ascending energy order.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn energies(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.levels.iter().map(|l| l.energy)
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].energy
    }

    pub fn max_energy(&self) -> f64 {
        self.levels[self.levels.len() - 1].energy
    }

    /// Eigenvector of `level` scattered into the natural basis order.
    pub fn eigenvector(&self, level: &Level) -> Vec<f64> {
        let block = &self.blocks[level.block];
        let mut v = vec![0.0; self.dim()];
        for (row, &state) in block.basis.iter().enumerate() {
            v[state as usize] = block.vectors[(row, level.column)];
        }
        v
    }
}

fn check_symmetric(m: &Mat<f64>, block: usize) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "block {block} is not square"
        )));
    }
    let mut scale = 1.0f64;
    let mut asym = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            let x = m[(r, c)];
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "block {block} has non-finite entries"
                )));
            }
            scale = scale.max(x.abs());
            asym = asym.max((x - m[(c, r)]).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "block {block} is not symmetric (deviation {asym:e})"
        )));
    }
    Ok(())
}

fn eigen_block(
    m: &Mat<f64>,
    id: usize,
    sector: Option<usize>,
    basis: Vec<u32>,
) -> Result<EigenBlock> {
    check_symmetric(m, id)?;
    // Sequential so the vectors do not depend on the size of the thread pool;
    // parallelism comes from running sectors and realizations concurrently.
    let n = m.nrows();
    let mut vectors = Mat::<f64>::zeros(n, n);
    let mut s = Diag::<f64>::zeros(n);
    let par = Par::Seq;
    let scratch = evd::self_adjoint_evd_scratch::<f64>(
        n,
        evd::ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    evd::self_adjoint_evd(
        m.as_ref(),
        s.as_mut(),
        Some(vectors.as_mut()),
        par,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|_| Error::Eigensolver { block: id })?;
    let energies: Vec<f64> = (0..n).map(|k| s[k]).collect();
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Eigensolver { block: id });
    }
    Ok(EigenBlock {
        sector,
        basis,
        energies,
        vectors,
    })
}

/// Diagonalizes every magnetization sector; sectors run in parallel.
pub fn diagonalize(blocks: &SectorBlocks) -> Result<SpectralDecomposition> {
    let eig = blocks
        .sectors()
        .par_iter()
        .enumerate()
        .map(|(id, s)| eigen_block(&s.block, id, Some(s.up_count), s.basis.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralDecomposition::assemble(blocks.sites(), eig))
}

/// Diagonalizes an unblocked `2^sites` matrix in natural basis order.
pub fn diagonalize_matrix(h: &Mat<f64>, sites: usize) -> Result<SpectralDecomposition> {
    if sites == 0 || sites >= 32 || h.nrows() != 1 << sites {
        return Err(Error::InvalidParameter(format!(
            "matrix of dimension {} does not describe {sites} spins",
            h.nrows()
        )));
    }
    let basis = (0..h.nrows() as u32).collect();
    let block = eigen_block(h, 0, None, basis)?;
    Ok(SpectralDecomposition::assemble(sites, vec![block]))
}

pub fn diagonalize_pair(h: &Matrix4<f64>) -> Result<SpectralDecomposition> {
    diagonalize_matrix(&Mat::from_fn(4, 4, |r, c| h[(r, c)]), 2)
}

/// Normalized Boltzmann weights over a decomposition's levels.
#[derive(Debug, Clone)]
pub struct ThermalState<'a> {
    decomposition: &'a SpectralDecomposition,
    beta: f64,
    weights: Vec<f64>,
    shifted_log_z: f64,
}

impl<'a> ThermalState<'a> {
    /// `beta = f64::INFINITY` selects the uniform mixture over the ground
    /// space (energies within `1e-10 · max(1, |E0|)` of `E0`).
    pub fn new(decomposition: &'a SpectralDecomposition, beta: f64) -> Result<Self> {
        ensure_beta(beta)?;
        let e0 = decomposition.ground_energy();
        let mut weights: Vec<f64> = if beta.is_infinite() {
            let window = GROUND_WINDOW * e0.abs().max(1.0);
            decomposition
                .energies()
                .map(|e| if e - e0 <= window { 1.0 } else { 0.0 })
                .collect()
        } else {
            decomposition
                .energies()
                .map(|e| (-beta * (e - e0)).exp())
                .collect()
        };
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            decomposition,
            beta,
            weights,
            shifted_log_z: total.ln(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        self.decomposition
    }

    /// Weights aligned with [`SpectralDecomposition::levels`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ln Σ exp(-β (ε - E0))`.
    pub fn shifted_log_z(&self) -> f64 {
        self.shifted_log_z
    }

    /// `ln Z = -β E0 + ln Σ exp(-β (ε - E0))`; infinite at `β = ∞`.
    pub fn log_z(&self) -> f64 {
        self.shifted_log_z - self.beta * self.decomposition.ground_energy()
    }

    pub fn energy_scales(&self) -> EnergyScales {
        let d = self.decomposition;
        let e0 = d.ground_energy();
        let emax = d.max_energy();
        let einf = d.energies().sum::<f64>() / d.dim() as f64;
        let ebar = if self.beta == 0.0 {
            einf
        } else {
            d.energies()
                .zip(&self.weights)
                .map(|(e, w)| e * w)
                .sum::<f64>()
                .clamp(e0, emax)
        };
        EnergyScales {
            e0,
            emax,
            einf,
            ebar,
            delta_e: (emax - e0) / 3.0,
        }
    }

    /// Reduced state of sites `i < j` (1-based).
    pub fn reduced_pair(&self, i: usize, j: usize) -> Result<DensityMatrix4> {
        self.decomposition.pair_reduction(i, j)?.reduce(self)
    }

    /// The full Gibbs matrix in natural basis order (chains of at most
    /// [`FULL_MATRIX_MAX_SITES`] sites).
    pub fn to_dense(&self) -> Result<Mat<f64>> {
        let d = self.decomposition;
        if d.sites > FULL_MATRIX_MAX_SITES {
            return Err(Error::ResourceLimit {
                sites: d.sites,
                max: FULL_MATRIX_MAX_SITES,
            });
        }
        let dim = d.dim();
        let mut rho = Mat::<f64>::zeros(dim, dim);
        for (level, &w) in d.levels.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let block = &d.blocks[level.block];
            for (a, &sa) in block.basis.iter().enumerate() {
                let va = w * block.vectors[(a, level.column)];
                if va == 0.0 {
                    continue;
                }
                for (b, &sb) in block.basis.iter().enumerate() {
                    rho[(sa as usize, sb as usize)] += va * block.vectors[(b, level.column)];
                }
            }
        }
        Ok(rho)
    }
}

pub fn gibbs_state(decomposition: &SpectralDecomposition, beta: f64) -> Result<Mat<f64>> {
    ThermalState::new(decomposition, beta)?.to_dense()
}

/// Thermal energy scales of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyScales {
    /// Ground energy.
    pub e0: f64,
    pub emax: f64,
    /// Spectral mean, the `T = ∞` energy.
    pub einf: f64,
    /// Thermal mean energy at the given `β`.
    pub ebar: f64,
    /// `(Emax - E0) / 3`.
    pub delta_e: f64,
}

impl EnergyScales {
    /// `Ē / (E∞ - E0)`; zero for a flat spectrum.
    pub fn normalized_energy(&self) -> f64 {
        let span = self.einf - self.e0;
        if span > 0.0 {
            self.ebar / span
        } else {
            0.0
        }
    }
}

pub fn energy_scales(decomposition: &SpectralDecomposition, beta: f64) -> Result<EnergyScales> {
    Ok(ThermalState::new(decomposition, beta)?.energy_scales())
}

/// Per-level two-site reductions `Tr_rest |v⟩⟨v|`, reusable across `β`.
#[derive(Debug, Clone)]
pub struct PairReduction {
    sites: (usize, usize),
    per_level: Vec<Matrix4<f64>>,
}

impl SpectralDecomposition {
    /// Precomputes the reduction onto sites `i < j` (1-based) for every level.
    pub fn pair_reduction(&self, i: usize, j: usize) -> Result<PairReduction> {
        check_pair(i, j, self.sites)?;
        let (bi, bj) = (i - 1, j - 1);
        let mask = (1u32 << bi) | (1u32 << bj);
        let pair_bits = |q: usize| ((q as u32 & 1) << bi) | ((q as u32 >> 1) << bj);

        let per_block: Vec<Vec<Matrix4<f64>>> = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(b, block)| {
                // partner[q][row] = row of (state with the pair set to q), if in this block
                let partners: Vec<Vec<u32>> = (0..4)
                    .map(|q| {
                        block
                            .basis
                            .iter()
                            .map(|&s| {
                                let (pb, prow) = self.locate[((s & !mask) | pair_bits(q)) as usize];
                                if pb as usize == b {
                                    prow
                                } else {
                                    u32::MAX
                                }
                            })
                            .collect()
                    })
                    .collect();
                let pair_of: Vec<usize> = block
                    .basis
                    .iter()
                    .map(|&s| ((s >> bi & 1) | (s >> bj & 1) << 1) as usize)
                    .collect();
                (0..block.energies.len())
                    .map(|col| {
                        let v = block.vectors.col(col);
                        let mut m = Matrix4::<f64>::zeros();
                        for (row, &p) in pair_of.iter().enumerate() {
                            let a = v[row];
                            if a == 0.0 {
                                continue;
                            }
                            for (q, partner) in partners.iter().enumerate() {
                                let prow = partner[row];
                                if prow != u32::MAX {
                                    m[(p, q)] += a * v[prow as usize];
                                }
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect();

        let per_level = self
            .levels
            .iter()
            .map(|l| per_block[l.block][l.column])
            .collect();
        Ok(PairReduction {
            sites: (i, j),
            per_level,
        })
    }
}

impl PairReduction {
    pub fn sites(&self) -> (usize, usize) {
        self.sites
    }

    pub fn reduce(&self, state: &ThermalState<'_>) -> Result<DensityMatrix4> {
        if state.weights.len() != self.per_level.len() {
            return Err(Error::InvalidParameter(
                "thermal state belongs to a different decomposition".into(),
            ));
        }
        let mut m = Matrix4::<f64>::zeros();
        for (c, &w) in self.per_level.iter().zip(&state.weights) {
            if w != 0.0 {
                m += c * w;
            }
        }
        DensityMatrix4::from_real(&m)
    }
}

/// Reduced state of sites `i < j` (1-based) from a full density matrix in
/// natural basis order.
pub fn partial_trace_dense(
    rho: &Mat<f64>,
    sites: usize,
    i: usize,
    j: usize,
) -> Result<DensityMatrix4> {
    check_pair(i, j, sites)?;
    if rho.nrows() != 1 << sites || rho.ncols() != rho.nrows() {
        return Err(Error::InvalidParameter(
            "density matrix dimension mismatch".into(),
        ));
    }
    let (bi, bj) = (i - 1, j - 1);
    let pair_bits = |q: usize| ((q & 1) << bi) | ((q >> 1) << bj);
    let mask = pair_bits(3);
    let mut m = Matrix4::<f64>::zeros();
    for rest in (0..1usize << sites).filter(|r| r & mask == 0) {
        for p in 0..4 {
            for q in 0..4 {
                m[(p, q)] += rho[(rest | pair_bits(p), rest | pair_bits(q))];
            }
        }
    }
    DensityMatrix4::from_real(&m)
}

/// Gibbs state of a two-spin Hamiltonian via a direct 4×4 eigensolve.
pub fn pair_gibbs_state(h: &Matrix4<f64>, beta: f64) -> Result<DensityMatrix4> {
    ensure_beta(beta)?;
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "Hamiltonian has non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::new(*h);
    let e0 = eig.eigenvalues.min();
    let window = GROUND_WINDOW * e0.abs().max(1.0);
    let mut w = eig.eigenvalues.map(|e| {
        if beta.is_infinite() {
            if e - e0 <= window {
                1.0
            } else {
                0.0
            }
        } else {
            (-beta * (e - e0)).exp()
        }
    });
    w /= w.sum();
    let u = eig.eigenvectors;
    DensityMatrix4::from_real(&(u * Matrix4::from_diagonal(&w) * u.transpose()))
}

/// Closed-form elements of the two-spin Gibbs state:
///
/// ```text
///     | u  0  0  0  |
/// ρ = | 0  w  z  0  |
///     | 0  z  w' 0  |
///     | 0  0  0  v  |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsElements {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub w_prime: f64,
    pub z: f64,
}

impl GibbsElements {
    pub fn to_density(&self) -> Result<DensityMatrix4> {
        #[rustfmt::skip]
        let m = Matrix4::new(
            self.u, 0.0,    0.0,          0.0,
            0.0,    self.w, self.z,       0.0,
            0.0,    self.z, self.w_prime, 0.0,
            0.0,    0.0,    0.0,          self.v,
        );
        DensityMatrix4::from_real(&m)
    }
}

/// Exponents shared by the closed-form two-spin expressions, all scaled by
/// `exp(-top)` so that large `β` does not overflow.
pub(crate) struct PairExponents {
    /// `γβJ/2`
    pub a: f64,
    /// `ξβ|J|`
    pub b: f64,
    /// `β(h1+h2)/2`
    pub c: f64,
    pub top: f64,
    pub xi: f64,
}

impl PairExponents {
    pub fn new(spec: &PairSpec, beta: f64) -> Result<Self> {
        spec.validate()?;
        ensure_beta(beta)?;
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(
                "closed form requires finite beta".into(),
            ));
        }
        let xi = spec.xi()?;
        let a = 0.5 * spec.gamma * beta * spec.j;
        let b = xi * beta * spec.j.abs();
        let c = 0.5 * beta * spec.field_sum();
        Ok(Self {
            a,
            b,
            c,
            top: (a + b).max(c.abs()),
            xi,
        })
    }

    /// `e^a cosh b · e^-top`
    pub fn cosh_term(&self) -> f64 {
        0.5 * ((self.a + self.b - self.top).exp() + (self.a - self.b - self.top).exp())
    }

    /// `e^a sinh b · e^-top`
    pub fn sinh_term(&self) -> f64 {
        0.5 * ((self.a + self.b - self.top).exp() - (self.a - self.b - self.top).exp())
    }

    /// `cosh c · e^-top`
    pub fn field_term(&self) -> f64 {
        0.5 * ((self.c - self.top).exp() + (-self.c - self.top).exp())
    }

    /// `(e^a cosh b + cosh c) · e^-top`
    pub fn denominator(&self) -> f64 {
        self.cosh_term() + self.field_term()
    }
}

pub fn two_spin_gibbs_elements(spec: &PairSpec, beta: f64) -> Result<GibbsElements> {
    let x = PairExponents::new(spec, beta)?;
    let den = 2.0 * x.denominator();
    // e^a (cosh b ∓ r sinh b) with r = (h1 - h2) / (2 ξ |J|), written without cancellation
    let r = (spec.h1 - spec.h2) / (2.0 * x.xi * spec.j.abs());
    let grow = (x.a + x.b - x.top).exp();
    let decay = (x.a - x.b - x.top).exp();
    let w = 0.5 * ((1.0 - r) * grow + (1.0 + r) * decay) / den;
    let w_prime = 0.5 * ((1.0 + r) * grow + (1.0 - r) * decay) / den;
    Ok(GibbsElements {
        u: (x.c - x.top).exp() / den,
        v: (-x.c - x.top).exp() / den,
        w,
        w_prime,
        z: -spec.j.signum() * x.sinh_term() / (2.0 * x.xi * den),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{chain_hamiltonian, two_spin_hamiltonian, ChainSpec};

    fn xxx() -> SpectralDecomposition {
        let h = two_spin_hamiltonian(&PairSpec::new(1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
        diagonalize_pair(&h).unwrap()
    }

    #[test]
    fn diagonal_input() {
        let h = Mat::from_fn(4, 4, |r, c| if r == c { (r + 1) as f64 } else { 0.0 });
        let d = diagonalize_matrix(&h, 2).unwrap();
        assert_eq!(d.energies().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 4.0]);
        for (k, l) in d.levels().iter().enumerate() {
            let v = d.eigenvector(l);
            assert!((v[k].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singlet_triplet_levels() {
        let e: Vec<f64> = xxx().energies().collect();
        for (x, want) in e.iter().zip([-0.75, 0.25, 0.25, 0.25]) {
            assert!((x - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_asymmetric_and_wrong_size() {
        let h = Mat::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        assert!(diagonalize_matrix(&h, 2).is_err());
        assert!(diagonalize_matrix(&Mat::<f64>::zeros(3, 3), 2).is_err());
    }

    #[test]
    fn infinite_temperature_is_identity() {
        let d = xxx();
        let rho = gibbs_state(&d, 0.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 0.25 } else { 0.0 };
                assert!((rho[(r, c)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_temperature_is_singlet() {
        let d = xxx();
        let rho = gibbs_state(&d, f64::INFINITY).unwrap();
        // singlet (|↑↓⟩ - |↓↑⟩)/√2
        #[rustfmt::skip]
        let want = [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, -0.5, 0.0],
            [0.0, -0.5, 0.5, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert!((rho[(r, c)] - want[r][c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_ground_space_is_mixed_uniformly() {
        // ferromagnetic XXX: triplet ground space
        let h = two_spin_hamiltonian(&PairSpec::new(-1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
        let d = diagonalize_pair(&h).unwrap();
        let t = ThermalState::new(&d, f64::INFINITY).unwrap();
        let w: Vec<f64> = t.weights().to_vec();
        assert_eq!(w.iter().filter(|&&x| x > 0.0).count(), 3);
        for x in &w[..3] {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let rho = t.reduced_pair(1, 2).unwrap();
        assert!((rho.get(0, 0).re - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn negative_beta_rejected() {
        let d = xxx();
        assert!(ThermalState::new(&d, -0.1).is_err());
        assert!(ThermalState::new(&d, f64::NAN).is_err());
    }

    #[test]
    fn weights_survive_large_beta() {
        let d = xxx();
        let t = ThermalState::new(&d, 1e4).unwrap();
        assert!(t.weights().iter().all(|w| w.is_finite() && *w >= 0.0));
        assert!((t.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(t.weights()[0], 1.0);
    }

    #[test]
    fn energy_scales_of_xxz_pair() {
        let h = two_spin_hamiltonian(&PairSpec::new(1.0, 0.4, 0.0, 0.0).unwrap()).unwrap();
        let d = diagonalize_pair(&h).unwrap();
        let s = energy_scales(&d, 0.0).unwrap();
        assert!((s.e0 + 0.6).abs() < 1e-14);
        assert!((s.emax - 0.4).abs() < 1e-14);
        assert!((s.delta_e - 1.0 / 3.0).abs() < 1e-14);
        assert!(s.einf.abs() < 1e-15);
        assert_eq!(s.ebar, s.einf);
        let cold = energy_scales(&d, 50.0).unwrap();
        assert!(cold.ebar - cold.e0 < 1e-8);
    }

    #[test]
    fn xxz_closed_form_coherence() {
        // γ = 0.4, Δh = 0, h1 + h2 = 0, βJ = 2
        let spec = PairSpec::new(1.0, 0.4, 0.0, 0.0).unwrap();
        let g = two_spin_gibbs_elements(&spec, 2.0).unwrap();
        let e04 = 0.4f64.exp();
        let want = e04 * 1f64.sinh() / (2.0 * (e04 * 1f64.cosh() + 1.0));
        assert!((g.z.abs() - want).abs() < 1e-15);
        assert!((g.z.abs() - 0.2655).abs() < 1e-4);
        let inf = two_spin_gibbs_elements(&spec, 0.0).unwrap();
        for x in [inf.u, inf.v, inf.w, inf.w_prime] {
            assert!((x - 0.25).abs() < 1e-15);
        }
        assert_eq!(inf.z, 0.0);
    }

    #[test]
    fn closed_form_needs_coupling() {
        let spec = PairSpec::new(0.0, 0.4, 0.3, 0.1).unwrap();
        assert!(matches!(
            two_spin_gibbs_elements(&spec, 1.0),
            Err(Error::ZeroCoupling)
        ));
    }

    #[test]
    fn blocked_trace_identity() {
        let fields = vec![0.3, -0.7, 0.9, 0.1, -0.2, 0.5, -1.0, 0.4];
        let chain = ChainSpec::new(1.0, 0.4, 1.5, fields).unwrap();
        let d = diagonalize(&chain_hamiltonian(&chain).unwrap()).unwrap();
        let sum: f64 = d.energies().sum();
        // every term of the Hamiltonian is traceless
        assert!(sum.abs() < 1e-9);
        assert_eq!(d.dim(), 256);
    }

    #[test]
    fn pair_out_of_range() {
        let d = xxx();
        let t = ThermalState::new(&d, 1.0).unwrap();
        assert!(matches!(
            t.reduced_pair(1, 3),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            t.reduced_pair(2, 1),
            Err(Error::SiteOutOfRange { .. })
        ));
    }
}

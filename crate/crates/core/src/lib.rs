//! Thermal entanglement between two spins, alone or embedded in a disordered
//! open XXZ chain.
//!
//! The pipeline is: build a Hamiltonian ([`hamiltonians`]), diagonalize it
//! per magnetization sector and form Gibbs weights ([`thermal`]), reduce to a
//! two-site state and measure its concurrence ([`entanglement`]), optionally
//! fit an effective two-spin Hamiltonian to it ([`fit`]), and average over
//! field disorder ([`ensemble`]).

pub mod density;
pub mod ensemble;
pub mod entanglement;
pub mod error;
pub mod fit;
pub mod hamiltonians;
pub mod thermal;

pub use density::DensityMatrix4;
pub use error::{Error, Result};
pub use hamiltonians::{ChainSpec, EffectiveSpec, PairSpec};

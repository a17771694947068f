use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain length {sites} exceeds the configured maximum of {max} sites")]
    ResourceLimit { sites: usize, max: usize },

    #[error("coupling J = 0: xi is undefined; the state is diagonal, use the fields-only path")]
    ZeroCoupling,

    #[error("eigensolver did not converge on block {block}")]
    Eigensolver { block: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error(
        "state is not an X-state (off-pattern element {0:e}); use the general concurrence path"
    )]
    NotXState(f64),

    #[error("threshold asymptotics indeterminate (large-beta growth rate {rate:e})")]
    IndeterminateThreshold { rate: f64 },

    #[error("site pair ({i}, {j}) out of range for a chain of {sites} sites")]
    SiteOutOfRange { i: usize, j: usize, sites: usize },

    #[error("objective evaluation failed at alpha = ({alpha1}, {alpha2}): {reason}")]
    Objective {
        alpha1: f64,
        alpha2: f64,
        reason: String,
    },

    #[error("realization {index} (seed {seed:#018x}) failed: {source}")]
    Realization {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {value}"
        )))
    }
}

pub(crate) fn ensure_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta < 0.0 {
        Err(Error::InvalidParameter(format!(
            "beta must be >= 0, got {beta}"
        )))
    } else {
        Ok(())
    }
}

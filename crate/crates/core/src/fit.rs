//! Fitting the effective two-spin Hamiltonian to an induced chain state.
//!
//! The distance `D = ‖ρ1 - ρ2‖_F / ‖ρ1‖_F` is minimized over `(α1, α2)` by a
//! coarse grid search followed by normalized gradient descent with central
//! differences. The origin is always on the grid, so the fitted distance
//! never exceeds the unfitted one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix4;
use crate::error::{ensure_beta, Error, Result};
use crate::hamiltonians::{effective_hamiltonian, EffectiveSpec, PairSpec};
use crate::thermal::pair_gibbs_state;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.step.is_finite()
            && self.step > 0.0
            && self.lo <= 0.0
            && self.hi >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "grid axis {self:?} must have a positive step and contain 0"
            )))
        }
    }

    /// Integer multiples of `step` inside `[lo, hi]`; `0` is always exact.
    pub fn values(&self) -> Vec<f64> {
        let first = (self.lo / self.step - 1e-9).ceil() as i64;
        let last = (self.hi / self.step + 1e-9).floor() as i64;
        (first..=last).map(|k| k as f64 * self.step).collect()
    }
}

impl Default for GridAxis {
    fn default() -> Self {
        Self {
            lo: -0.9,
            hi: 0.9,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub alpha1_grid: GridAxis,
    pub alpha2_grid: GridAxis,
    /// Initial descent step length in α units.
    pub descent_step: f64,
    /// Step multiplier after a rejected move.
    pub shrink: f64,
    /// Central-difference half width.
    pub fd_step: f64,
    /// Stop once an accepted move improves `D` by less than this.
    pub tolerance: f64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            alpha1_grid: GridAxis::default(),
            alpha2_grid: GridAxis::default(),
            descent_step: 0.05,
            shrink: 0.5,
            fd_step: 1e-5,
            tolerance: 1e-12,
            gradient_tolerance: 1e-10,
            max_iterations: 500,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.alpha1_grid.validate()?;
        self.alpha2_grid.validate()?;
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {x}"
                )))
            }
        };
        positive("descent_step", self.descent_step)?;
        positive("fd_step", self.fd_step)?;
        positive("tolerance", self.tolerance)?;
        positive("gradient_tolerance", self.gradient_tolerance)?;
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha1: f64,
    pub alpha2: f64,
    /// `D` at `α1 = α2 = 0`.
    pub d_unfitted: f64,
    pub d_fitted: f64,
    /// Descent iterations after the grid stage.
    pub iterations: usize,
    pub converged: bool,
}

/// `‖ρ1 - ρ2‖_F / ‖ρ1‖_F`. Not symmetric in its arguments.
pub fn state_difference(rho1: &DensityMatrix4, rho2: &DensityMatrix4) -> f64 {
    let diff: f64 = (rho1.matrix() - rho2.matrix())
        .iter()
        .map(|c| c.norm_sqr())
        .sum();
    diff.sqrt() / rho1.frobenius_norm()
}

/// Thermal state of the effective Hamiltonian at `(α1, α2)`.
pub fn effective_gibbs_state(
    base: &PairSpec,
    alpha1: f64,
    alpha2: f64,
    beta: f64,
) -> Result<DensityMatrix4> {
    let spec = EffectiveSpec::new(*base, alpha1, alpha2)?;
    pair_gibbs_state(&effective_hamiltonian(&spec)?, beta)
}

/// Fits `(α1, α2)` so that the effective thermal state matches `induced`.
pub fn fit_alphas(
    induced: &DensityMatrix4,
    base: &PairSpec,
    beta: f64,
    config: &FitConfig,
) -> Result<FitResult> {
    base.validate()?;
    ensure_beta(beta)?;
    let objective = |a1: f64, a2: f64| -> Result<f64> {
        let rho = effective_gibbs_state(base, a1, a2, beta).map_err(|e| Error::Objective {
            alpha1: a1,
            alpha2: a2,
            reason: e.to_string(),
        })?;
        Ok(state_difference(&rho, induced))
    };
    minimize_grid_descent(objective, config)
}

/// Grid search followed by gradient descent on an arbitrary objective.
///
/// Grid ties resolve to the lexicographically smallest `(α1, α2)`.
pub fn minimize_grid_descent<F>(objective: F, config: &FitConfig) -> Result<FitResult>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    config.validate()?;
    let eval = |a1: f64, a2: f64| -> Result<f64> {
        let d = objective(a1, a2)?;
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Objective {
                alpha1: a1,
                alpha2: a2,
                reason: format!("objective is {d}"),
            })
        }
    };

    let d_unfitted = eval(0.0, 0.0)?;
    let axis2 = config.alpha2_grid.values();
    let points: Vec<(f64, f64)> = config
        .alpha1_grid
        .values()
        .into_iter()
        .flat_map(|a1| axis2.iter().map(move |&a2| (a1, a2)))
        .collect();
    let values = points
        .par_iter()
        .map(|&(a1, a2)| eval(a1, a2))
        .collect::<Result<Vec<f64>>>()?;

    let mut best = ((0.0, 0.0), d_unfitted);
    let mut best_key = None;
    for (&p, &d) in points.iter().zip(&values) {
        match best_key {
            Some(bd) if d >= bd => {}
            _ => {
                best = (p, d);
                best_key = Some(d);
            }
        }
    }
    let ((mut a1, mut a2), mut d) = best;
    if d_unfitted < d {
        ((a1, a2), d) = ((0.0, 0.0), d_unfitted);
    }

    let h = config.fd_step;
    let mut step = config.descent_step;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let g1 = (eval(a1 + h, a2)? - eval(a1 - h, a2)?) / (2.0 * h);
        let g2 = (eval(a1, a2 + h)? - eval(a1, a2 - h)?) / (2.0 * h);
        let norm = g1.hypot(g2);
        if norm < config.gradient_tolerance {
            converged = true;
            break;
        }
        let (t1, t2) = (a1 - step * g1 / norm, a2 - step * g2 / norm);
        let dt = eval(t1, t2)?;
        if dt < d {
            let gain = d - dt;
            (a1, a2, d) = (t1, t2, dt);
            if gain < config.tolerance {
                converged = true;
                break;
            }
        } else {
            step *= config.shrink;
            if step < f64::EPSILON * (1.0 + a1.abs().max(a2.abs())) {
                converged = true;
                break;
            }
        }
    }

    Ok(FitResult {
        alpha1: a1,
        alpha2: a2,
        d_unfitted,
        d_fitted: d,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix4, Vector4};
    use num_complex::Complex64;

    #[test]
    fn difference_examples() {
        let mixed = DensityMatrix4::maximally_mixed();
        assert_eq!(state_difference(&mixed, &mixed), 0.0);
        let c = |x: f64| Complex64::new(x, 0.0);
        let up = DensityMatrix4::from_pure(&Vector4::new(c(0.0), c(0.0), c(0.0), c(1.0))).unwrap();
        let d = state_difference(&mixed, &up);
        assert!((d - 3f64.sqrt()).abs() < 1e-15);
        let back = state_difference(&up, &mixed);
        assert!((back - (0.75f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_values_contain_exact_zero() {
        let v = GridAxis::default().values();
        assert_eq!(v.len(), 19);
        assert!(v.contains(&0.0));
        assert!((v[0] + 0.9).abs() < 1e-15 && (v[18] - 0.9).abs() < 1e-15);
        let odd = GridAxis {
            lo: -0.25,
            hi: 0.3,
            step: 0.1,
        };
        assert_eq!(odd.values().len(), 6);
    }

    #[test]
    fn config_validation() {
        let mut cfg = FitConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.alpha1_grid.lo = 0.1;
        assert!(cfg.validate().is_err());
        let cfg = FitConfig {
            shrink: 1.0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = FitConfig {
            tolerance: 0.0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ties_resolve_lexicographically() {
        // symmetric bowl with minima at (±0.3, ±0.3) of equal depth
        let f = |a1: f64, a2: f64| Ok((a1.abs() - 0.3).powi(2) + (a2.abs() - 0.3).powi(2) + 1.0);
        let cfg = FitConfig {
            max_iterations: 0,
            ..FitConfig::default()
        };
        let r = minimize_grid_descent(f, &cfg).unwrap();
        assert!((r.alpha1 + 0.3).abs() < 1e-12 && (r.alpha2 + 0.3).abs() < 1e-12);
    }

    #[test]
    fn descent_refines_quadratic() {
        let f = |a1: f64, a2: f64| Ok(((a1 - 0.123).powi(2) + 2.0 * (a2 + 0.321).powi(2)).sqrt());
        let r = minimize_grid_descent(f, &FitConfig::default()).unwrap();
        assert!(r.d_fitted < 1e-6, "{r:?}");
        assert!((r.alpha1 - 0.123).abs() < 1e-5 && (r.alpha2 + 0.321).abs() < 1e-5);
        assert!(r.d_fitted <= r.d_unfitted);
    }

    #[test]
    fn descent_is_monotone_in_iterations() {
        let f = |a1: f64, a2: f64| {
            Ok(((a1 - 0.07).powi(2) + (a2 - 0.43).powi(2) + 0.5 * a1 * a2).abs())
        };
        let mut last = f64::INFINITY;
        for k in 0..60 {
            let cfg = FitConfig {
                max_iterations: k,
                ..FitConfig::default()
            };
            let r = minimize_grid_descent(f, &cfg).unwrap();
            assert!(r.d_fitted <= last);
            last = r.d_fitted;
        }
    }

    #[test]
    fn non_finite_objective_reports_point() {
        let f = |a1: f64, _a2: f64| Ok(if a1 > 0.5 { f64::NAN } else { 1.0 });
        match minimize_grid_descent(f, &FitConfig::default()) {
            Err(Error::Objective { alpha1, .. }) => assert!(alpha1 > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_two_spin_state_fits_at_origin() {
        let base = PairSpec::new(1.0, 0.4, 0.8, -0.3).unwrap();
        let h = crate::hamiltonians::two_spin_hamiltonian(&base).unwrap();
        let target = pair_gibbs_state(&h, 5.0).unwrap();
        let r = fit_alphas(&target, &base, 5.0, &FitConfig::default()).unwrap();
        assert!(r.d_fitted < 1e-8 && r.d_unfitted < 1e-12);
        assert!(r.alpha1.abs() < 1e-3 && r.alpha2.abs() < 1e-3);
    }

    #[test]
    fn recovers_planted_alphas() {
        let base = PairSpec::new(1.0, 0.4, 1.2, -0.5).unwrap();
        let target = effective_gibbs_state(&base, 0.17, -0.26, 2.0).unwrap();
        let r = fit_alphas(&target, &base, 2.0, &FitConfig::default()).unwrap();
        assert!(r.d_fitted < 1e-6, "{r:?}");
        assert!(
            (r.alpha1 - 0.17).abs() < 1e-4 && (r.alpha2 + 0.26).abs() < 1e-4,
            "{r:?}"
        );
        assert!(r.d_unfitted > 0.01);
    }

    #[test]
    fn fits_are_bitwise_reproducible() {
        let base = PairSpec::new(1.0, 0.4, 0.6, 0.2).unwrap();
        let m = Matrix4::from_diagonal(&Vector4::new(0.1, 0.35, 0.3, 0.25));
        let target = DensityMatrix4::from_real(&m).unwrap();
        let a = fit_alphas(&target, &base, 1.0, &FitConfig::default()).unwrap();
        let b = fit_alphas(&target, &base, 1.0, &FitConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.d_fitted <= a.d_unfitted);
    }
}

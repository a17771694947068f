//! Two-qubit concurrence, entanglement of formation, and the closed-form
//! thermal concurrence of the two-spin XXZ model with its threshold.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix4;
use crate::error::{ensure_finite, Error, Result};
use crate::hamiltonians::{two_spin_hamiltonian, PairSpec};
use crate::thermal::{diagonalize_pair, energy_scales, PairExponents};

/// Largest off-pattern element accepted by [`concurrence_x_state`].
pub const X_STATE_TOL: f64 = 1e-10;

const BISECTION_REL_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;
const SCAN_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceResult {
    pub concurrence: f64,
    /// The four `λ_i` in decreasing order.
    pub lambdas: [f64; 4],
}

impl ConcurrenceResult {
    fn from_lambdas(mut lambdas: [f64; 4]) -> Self {
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
        Self {
            concurrence: c.clamp(0.0, 1.0),
            lambdas,
        }
    }
}

/// `σ_y ⊗ σ_y` in the computational basis.
fn yy() -> Matrix4<Complex64> {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let m = Matrix4::new(
        z,  z, z, -o,
        z,  z, o,  z,
        z,  o, z,  z,
        -o, z, z,  z,
    );
    m
}

fn flip_matrix(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let y = yy();
    y * m.conjugate() * y
}

/// The spin-flipped state `(σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y)`.
pub fn spin_flip(rho: &DensityMatrix4) -> Matrix4<Complex64> {
    flip_matrix(rho.matrix())
}

fn sqrt_psd(rho: &DensityMatrix4) -> Matrix4<Complex64> {
    let eig = SymmetricEigen::new(*rho.matrix());
    // validated states have eigenvalues >= -1e-12; clip the noise
    let root = eig
        .eigenvalues
        .map(|e| Complex64::new(e.max(0.0).sqrt(), 0.0));
    let u = eig.eigenvectors;
    u * Matrix4::from_diagonal(&root) * u.adjoint()
}

/// Concurrence of an arbitrary two-qubit state.
///
/// The `λ_i` are the singular values of `√ρ √ρ̃`, i.e. the square roots of
/// the eigenvalues of the Hermitian product `√ρ ρ̃ √ρ`.
pub fn concurrence(rho: &DensityMatrix4) -> ConcurrenceResult {
    let s = sqrt_psd(rho);
    let product = s * flip_matrix(&s);
    let sv = product.singular_values();
    ConcurrenceResult::from_lambdas([sv[0], sv[1], sv[2], sv[3]])
}

/// Concurrence of an X-state with vanishing corner coherences,
/// `C = 2 max(0, |z| - √(u v))`.
pub fn concurrence_x_state(rho: &DensityMatrix4) -> Result<ConcurrenceResult> {
    let off = rho.max_off_pattern();
    if off > X_STATE_TOL {
        return Err(Error::NotXState(off));
    }
    let u = rho.get(0, 0).re.max(0.0);
    let v = rho.get(3, 3).re.max(0.0);
    let w = rho.get(1, 1).re.max(0.0);
    let w_prime = rho.get(2, 2).re.max(0.0);
    let z = rho.get(1, 2).norm();
    let uv = (u * v).sqrt();
    let ww = (w * w_prime).sqrt();
    let mut res = ConcurrenceResult::from_lambdas([ww + z, (ww - z).abs(), uv, uv]);
    res.concurrence = (2.0 * (z - uv)).clamp(0.0, 1.0);
    Ok(res)
}

/// Binary entropy in bits, evaluated from the smaller argument.
fn binary_entropy_small(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    -(y * y.log2() + (1.0 - y) * (-y).ln_1p() / std::f64::consts::LN_2)
}

/// Entanglement of formation `h((1 + √(1 - C²)) / 2)` in ebits.
pub fn eof(c: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "concurrence {c} outside [0, 1]"
        )));
    }
    let c = c.clamp(0.0, 1.0);
    // 1 - x = (1 - √(1 - C²)) / 2 = C² / (2 (1 + √(1 - C²)))
    let y = c * c / (2.0 * (1.0 + (1.0 - c * c).sqrt()));
    Ok(binary_entropy_small(y).clamp(0.0, 1.0))
}

/// The signed closed-form expression `χ`; concurrence is `max(0, χ)`.
pub fn analytic_chi(spec: &PairSpec, beta: f64) -> Result<f64> {
    let x = PairExponents::new(spec, beta)?;
    let num = x.sinh_term() / (2.0 * x.xi) - (-x.top).exp();
    Ok(num / x.denominator())
}

pub fn analytic_concurrence(spec: &PairSpec, beta: f64) -> Result<f64> {
    Ok(analytic_chi(spec, beta)?.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThresholdResult {
    /// Root of the threshold equation and the equation's residual there.
    Finite {
        root: f64,
        residual: f64,
    },
    None,
}

impl ThresholdResult {
    pub fn root(&self) -> Option<f64> {
        match *self {
            Self::Finite { root, .. } => Some(root),
            Self::None => None,
        }
    }
}

/// `ln sinh x` for `x > 0`.
fn ln_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2
}

/// Bisection on `g` with `g(lo) < 0 <= g(hi)`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= BISECTION_REL_TOL * hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Doubles `hi` from `start` until `g(hi) >= 0`, giving up past `limit`.
fn bracket(g: &impl Fn(f64) -> f64, start: f64, limit: f64) -> Option<(f64, f64)> {
    let mut lo = 0.0;
    let mut hi = start;
    while g(hi) < 0.0 {
        if hi > limit {
            return None;
        }
        lo = hi;
        hi *= 2.0;
    }
    Some((lo, hi))
}

/// Inverse temperature above which (in `β`) the two-spin thermal state is
/// entangled: the root of `e^{γβJ/2} |sinh(ξβJ)| = 2ξ`.
///
/// The left side is below `e^{(γJ/2 + ξ|J|)β} / 2` and `2ξ >= 1`, so a
/// non-positive growth rate `γJ/2 + ξ|J|` means no root (`T_c = 0`).
pub fn threshold_beta(spec: &PairSpec) -> Result<ThresholdResult> {
    spec.validate()?;
    let xi = spec.xi()?;
    let abs_j = spec.j.abs();
    let rate = 0.5 * spec.gamma * spec.j + xi * abs_j;
    if rate <= 0.0 {
        return Ok(ThresholdResult::None);
    }
    if rate <= 1e-12 * abs_j {
        return Err(Error::IndeterminateThreshold { rate });
    }
    let g =
        |beta: f64| 0.5 * spec.gamma * beta * spec.j + ln_sinh(xi * beta * abs_j) - (2.0 * xi).ln();
    let (lo, hi) = bracket(&g, 1.0 / abs_j, SCAN_LIMIT / abs_j)
        .ok_or(Error::IndeterminateThreshold { rate })?;
    let root = bisect(g, lo, hi);
    let residual = (0.5 * spec.gamma * root * spec.j).exp() * (xi * root * abs_j).sinh() - 2.0 * xi;
    Ok(ThresholdResult::Finite { root, residual })
}

/// Threshold in units of the two-spin energy scale, for `h1 + h2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEThreshold {
    /// Root `(βΔE)_c` of `exp[3γx/(4ξ)] sinh(3x/2) = 2ξ`.
    pub result: ThresholdResult,
    /// `β_c ΔE` from [`threshold_beta`] and the two-spin spectrum (`J = 1`).
    pub from_beta: Option<f64>,
    /// Whether the two routes agree to `1e-8` (relative above 1).
    pub consistent: bool,
}

pub fn threshold_beta_delta_e(gamma: f64, delta_h: f64) -> Result<DeltaEThreshold> {
    ensure_finite("gamma", gamma)?;
    ensure_finite("delta_h", delta_h)?;
    let xi = 0.5 * delta_h.hypot(1.0);
    let rate = 0.75 * gamma / xi + 1.5;
    let result = if rate <= 0.0 {
        ThresholdResult::None
    } else {
        let g = |x: f64| 0.75 * gamma * x / xi + ln_sinh(1.5 * x) - (2.0 * xi).ln();
        match bracket(&g, 1.0, SCAN_LIMIT) {
            Some((lo, hi)) => {
                let root = bisect(g, lo, hi);
                let residual = (0.75 * gamma * root / xi).exp() * (1.5 * root).sinh() - 2.0 * xi;
                ThresholdResult::Finite { root, residual }
            }
            None => ThresholdResult::None,
        }
    };

    let spec = PairSpec::from_detuning(1.0, gamma, delta_h, 0.0)?;
    let from_beta = match threshold_beta(&spec) {
        Ok(t) => match t.root() {
            Some(beta_c) => {
                let d = diagonalize_pair(&two_spin_hamiltonian(&spec)?)?;
                Some(beta_c * energy_scales(&d, 0.0)?.delta_e)
            }
            None => None,
        },
        Err(Error::IndeterminateThreshold { .. }) => None,
        Err(e) => return Err(e),
    };
    let consistent = match (result.root(), from_beta) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-8 * x.abs().max(1.0),
        (None, None) => true,
        _ => false,
    };
    Ok(DeltaEThreshold {
        result,
        from_beta,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector4;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pure(a: [f64; 4]) -> DensityMatrix4 {
        DensityMatrix4::from_pure(&Vector4::new(c(a[0]), c(a[1]), c(a[2]), c(a[3]))).unwrap()
    }

    fn singlet() -> DensityMatrix4 {
        pure([0.0, 1.0, -1.0, 0.0])
    }

    fn close(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>, tol: f64) -> bool {
        (a - b).iter().all(|x| x.norm() < tol)
    }

    #[test]
    fn flip_examples() {
        let mixed = DensityMatrix4::maximally_mixed();
        assert!(close(&spin_flip(&mixed), mixed.matrix(), 1e-15));
        let s = singlet();
        assert!(close(&spin_flip(&s), s.matrix(), 1e-15));
        let up = pure([0.0, 0.0, 0.0, 1.0]);
        let down = pure([1.0, 0.0, 0.0, 0.0]);
        assert!(close(&spin_flip(&up), down.matrix(), 1e-15));
    }

    #[test]
    fn flip_preserves_state_properties() {
        let rho = pure([0.3, -0.5, 0.2, 0.7])
            .mix(&DensityMatrix4::maximally_mixed(), 0.6)
            .unwrap();
        let f = spin_flip(&rho);
        assert!(DensityMatrix4::new(f).is_ok());
    }

    #[test]
    fn bell_and_product() {
        let bell = pure([1.0, 0.0, 0.0, 1.0]);
        assert!((concurrence(&bell).concurrence - 1.0).abs() < 1e-12);
        // site 1 in (0.6, 0.8), site 2 in (0.28, 0.96); site 1 is the low bit
        let (a, b) = ([0.6, 0.8], [0.28, 0.96]);
        let prod = pure([a[0] * b[0], a[1] * b[0], a[0] * b[1], a[1] * b[1]]);
        assert!(concurrence(&prod).concurrence < 1e-12);
        assert!(concurrence(&pure([0.0, 0.0, 0.0, 1.0])).concurrence < 1e-12);
    }

    #[test]
    fn werner_half() {
        let w = singlet()
            .mix(&DensityMatrix4::maximally_mixed(), 0.5)
            .unwrap();
        assert!((concurrence(&w).concurrence - 0.25).abs() < 1e-12);
        let third = singlet()
            .mix(&DensityMatrix4::maximally_mixed(), 1.0 / 3.0)
            .unwrap();
        assert!(concurrence(&third).concurrence < 1e-12);
    }

    #[test]
    fn x_state_examples() {
        let mixed = DensityMatrix4::maximally_mixed();
        assert_eq!(concurrence_x_state(&mixed).unwrap().concurrence, 0.0);
        assert!((concurrence_x_state(&singlet()).unwrap().concurrence - 1.0).abs() < 1e-15);
        let bell = pure([1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            concurrence_x_state(&bell),
            Err(Error::NotXState(_))
        ));
    }

    #[test]
    fn xxz_thermal_concurrence_value() {
        let spec = PairSpec::new(1.0, 0.4, 0.0, 0.0).unwrap();
        let e = 0.4f64.exp();
        let want = (e * 1f64.sinh() - 1.0) / (e * 1f64.cosh() + 1.0);
        let rho = crate::thermal::two_spin_gibbs_elements(&spec, 2.0)
            .unwrap()
            .to_density()
            .unwrap();
        let x = concurrence_x_state(&rho).unwrap().concurrence;
        assert!((x - want).abs() < 1e-14);
        assert!((x - 0.228).abs() < 5e-4);
        assert!((analytic_concurrence(&spec, 2.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn eof_endpoints_and_value() {
        assert_eq!(eof(0.0).unwrap(), 0.0);
        assert!((eof(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(eof(1.1).is_err());
        assert!(eof(-0.01).is_err());
        // C = (e^0.4 sinh 1 - 1)/(e^0.4 cosh 1 + 1) ≈ 0.2281
        let e = 0.4f64.exp();
        let c = (e * 1f64.sinh() - 1.0) / (e * 1f64.cosh() + 1.0);
        let x = (1.0 + (1.0 - c * c).sqrt()) / 2.0;
        let naive = -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
        let got = eof(c).unwrap();
        assert!((got - naive).abs() < 1e-13);
        assert!((got - 0.101).abs() < 1e-3, "{got}");
    }

    #[test]
    fn eof_tiny_concurrence_is_positive() {
        let e = eof(1e-8).unwrap();
        assert!(e > 0.0 && e < 1e-14);
    }

    #[test]
    fn analytic_limits() {
        let spec = PairSpec::new(1.0, 0.4, 0.3, -0.3).unwrap();
        assert!((analytic_chi(&spec, 0.0).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(analytic_concurrence(&spec, 0.0).unwrap(), 0.0);

        let xxx = PairSpec::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(analytic_chi(&xxx, 3f64.ln()).unwrap().abs() < 1e-15);

        let detuned = PairSpec::from_detuning(1.0, 0.4, 2.0, 0.0).unwrap();
        let c = analytic_concurrence(&detuned, 60.0).unwrap();
        assert!((c - 1.0 / 5f64.sqrt()).abs() < 1e-12, "{c}");
        assert!(analytic_concurrence(&PairSpec::new(0.0, 1.0, 0.1, 0.2).unwrap(), 1.0).is_err());
    }

    #[test]
    fn xxx_thresholds() {
        let afm = PairSpec::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let t = threshold_beta(&afm).unwrap();
        assert!((t.root().unwrap() - 3f64.ln()).abs() < 1e-9);
        let fm = PairSpec::new(-1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(threshold_beta(&fm).unwrap(), ThresholdResult::None);
    }

    #[test]
    fn xxz_threshold_value_and_sign_change() {
        let spec = PairSpec::new(1.0, 0.4, 0.0, 0.0).unwrap();
        let ThresholdResult::Finite { root, residual } = threshold_beta(&spec).unwrap() else {
            panic!("expected a finite threshold");
        };
        assert!(residual.abs() < 1e-10);
        assert!((root - 1.396).abs() < 1e-3, "{root}");
        assert!(((0.2 * root).exp() * (0.5 * root).sinh() - 1.0).abs() < 1e-10);
        assert_eq!(
            analytic_concurrence(&spec, root * (1.0 - 1e-6)).unwrap(),
            0.0
        );
        assert!(analytic_concurrence(&spec, root * (1.0 + 1e-3)).unwrap() > 0.0);
    }

    #[test]
    fn threshold_requires_coupling() {
        let spec = PairSpec::new(0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(threshold_beta(&spec), Err(Error::ZeroCoupling)));
    }

    #[test]
    fn delta_e_threshold_closed_form() {
        let t = threshold_beta_delta_e(0.0, 0.0).unwrap();
        let want = 2.0 / 3.0 * 1f64.asinh();
        assert!((t.result.root().unwrap() - want).abs() < 1e-11);
        assert!((want - 0.5875).abs() < 1e-4);
        assert!(t.consistent);
    }

    #[test]
    fn delta_e_threshold_matches_beta_route_for_xxx() {
        let t = threshold_beta_delta_e(1.0, 0.0).unwrap();
        // β_c = ln 3 and ΔE = 1/3 for the antiferromagnetic XXX pair
        assert!((t.result.root().unwrap() - 3f64.ln() / 3.0).abs() < 1e-8);
        assert!(t.consistent);
    }

    #[test]
    fn delta_e_threshold_flags_large_gamma() {
        // γ > 2ξ: the top level is a corner state and the ΔE form no longer applies
        let t = threshold_beta_delta_e(1.5, 0.0).unwrap();
        assert!(t.result.root().is_some());
        assert!(!t.consistent);
    }
}

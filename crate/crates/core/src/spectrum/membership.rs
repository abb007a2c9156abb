use num_complex::Complex64 as C64;

use super::{SpectrumError, Tolerances};
use crate::floquet::{delta_only, FloquetMultipliers};
use crate::potential::PeriodicPotential;

/// Both membership criteria evaluated at one Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    /// Δ real and in [−1, 1] (within tol). This is the decision.
    pub delta_criterion: bool,
    /// ||ρ₁| − 1| ≤ 10·tol.
    pub multiplier_criterion: bool,
    pub rho_modulus: f64,
}

/// Evaluates both criteria for a given Δ and cross-checks them.
///
/// The two are equivalent but not at identical tolerances: near Δ = ±1 the
/// multiplier leaves the unit circle like √|Δ ∓ 1|. A mismatch is raised
/// only when one criterion holds and the other fails beyond that scaling.
pub fn membership_of_delta(energy: C64, delta: C64, tol: f64) -> Result<Membership, SpectrumError> {
    let mismatch = |rho_modulus| SpectrumError::CriteriaMismatch {
        energy,
        delta,
        rho_modulus,
    };
    if !delta.is_finite() {
        return Err(mismatch(f64::NAN));
    }
    let rho = FloquetMultipliers::from_delta(delta);
    let modulus = rho.rho1.norm();
    let delta_criterion = delta.im.abs() <= tol && delta.re >= -1.0 - tol && delta.re <= 1.0 + tol;
    let multiplier_criterion = (modulus - 1.0).abs() <= 10.0 * tol;

    let roundoff = 4.0 * f64::EPSILON * delta.norm().max(1.0);
    if delta_criterion && (modulus - 1.0).abs() > 10.0 * tol.sqrt() + roundoff {
        return Err(mismatch(modulus));
    }
    if multiplier_criterion {
        let eta = 10.0 * tol;
        let im_ok = delta.im.abs() <= eta * (1.0 + eta) + roundoff;
        let re_ok = delta.re.abs() <= 1.0 + eta * eta + roundoff;
        if !(im_ok && re_ok) {
            return Err(mismatch(modulus));
        }
    }
    Ok(Membership {
        delta_criterion,
        multiplier_criterion,
        rho_modulus: modulus,
    })
}

/// E is in the spectrum iff Δ(E) is real with −1 ≤ Δ(E) ≤ 1, within
/// `tols.spectral`.
pub fn in_spectrum(v: &PeriodicPotential, e: C64, tols: &Tolerances) -> Result<bool, SpectrumError> {
    let delta = delta_only(v, e, tols.ode)?;
    Ok(membership_of_delta(e, delta, tols.spectral)?.delta_criterion)
}

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use super::{delta_only, discriminant, FloquetError, MAX_ORDER};
use crate::potential::PeriodicPotential;

/// Taylor data of Δ at `center` from a trapezoid-rule Cauchy integral.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyDerivatives {
    pub center: C64,
    /// Δ^(j)(center) for j = 0..=max_order. Entries 0 and 1 are the direct
    /// (integrator) values.
    pub values: Vec<C64>,
    pub radius: f64,
    /// max |Δ| over the contour nodes.
    pub max_abs: f64,
    /// Δ′ as obtained from the contour, before replacement.
    pub contour_first: C64,
    pub nodes: usize,
}

pub fn default_radius(e0: C64) -> f64 {
    0.1 * (1.0 + e0.norm())
}

/// Δ^(j)(E₀) = j!/(2πi) ∮ Δ(z)/(z − E₀)^{j+1} dz on |z − E₀| = radius, with
/// max(64, 8·max_order) trapezoid nodes.
pub fn cauchy_derivatives(
    v: &PeriodicPotential,
    e0: C64,
    max_order: usize,
    radius: f64,
    tol: f64,
) -> Result<CauchyDerivatives, FloquetError> {
    if !(1..=MAX_ORDER).contains(&max_order) {
        return Err(FloquetError::InvalidOrder(max_order));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(FloquetError::InvalidRadius(radius));
    }
    let m = 64.max(8 * max_order);
    let mut samples = Vec::with_capacity(m);
    for l in 0..m {
        let theta = TAU * l as f64 / m as f64;
        samples.push((theta, delta_only(v, e0 + C64::from_polar(radius, theta), tol)?));
    }
    let max_abs = samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);

    let mut values = Vec::with_capacity(max_order + 1);
    let mut factorial = 1.0;
    for j in 0..=max_order {
        if j > 0 {
            factorial *= j as f64;
        }
        let coeff: C64 = samples
            .iter()
            .map(|&(theta, f)| f * C64::from_polar(1.0, -(j as f64) * theta))
            .sum::<C64>()
            / m as f64;
        values.push(coeff * (factorial / radius.powi(j as i32)));
    }

    let direct = discriminant(v, e0, tol)?;
    let contour_first = values[1];
    let difference = (contour_first - direct.delta_prime).norm();
    let limit = 1e3 * tol * max_abs.max(1.0);
    if !(difference <= limit) {
        return Err(FloquetError::InconsistentDerivative { difference, limit });
    }
    values[0] = direct.delta;
    values[1] = direct.delta_prime;
    Ok(CauchyDerivatives {
        center: e0,
        values,
        radius,
        max_abs,
        contour_first,
        nodes: m,
    })
}

/// Returns (Δ(E₀), Δ′(E₀), …, Δ^(max_order)(E₀)).
pub fn derivatives_at(
    v: &PeriodicPotential,
    e0: C64,
    max_order: usize,
    radius: f64,
    tol: f64,
) -> Result<Vec<C64>, FloquetError> {
    Ok(cauchy_derivatives(v, e0, max_order, radius, tol)?.values)
}

/// [`cauchy_derivatives`] with the default radius 0.1·(1 + |E₀|), halved and
/// retried up to three times on an inconsistent Δ′.
pub fn derivatives_auto(
    v: &PeriodicPotential,
    e0: C64,
    max_order: usize,
    tol: f64,
) -> Result<CauchyDerivatives, FloquetError> {
    let mut radius = default_radius(e0);
    let mut attempt = 0;
    loop {
        match cauchy_derivatives(v, e0, max_order, radius, tol) {
            Err(FloquetError::InconsistentDerivative { .. }) if attempt < 3 => {
                attempt += 1;
                radius *= 0.5;
            }
            other => return other,
        }
    }
}

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use super::{CriticalPoint, EdgeSign, Regime, SpectrumError, Tolerances};
use crate::floquet::delta_only;
use crate::potential::PeriodicPotential;

const PROBE_NODES: usize = 1024;
const ANGLE_RESOLUTION: f64 = 1e-12;

/// Outcome of probing a small circle around a critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    /// Angles in [0, 2π) where the circle crosses the spectrum, sorted.
    pub measured_angles: Vec<f64>,
    /// Largest angular distance between a predicted and a measured direction.
    pub max_angle_error: f64,
    pub arcs_found: usize,
    pub predicted: Vec<f64>,
}

fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Directions arg(E − E₀) = (jπ − arg Δ^(k)(E₀))/k along which Δ stays real.
///
/// Interior: all 2k of them. Edge at Δ = +1: the k with odd j, where
/// Δ^(k)(E − E₀)^k < 0. Edge at Δ = −1: the k with even j. OffSpectrum: none.
pub fn emanating_directions(delta_k: C64, k: usize, regime: Regime) -> Vec<f64> {
    if k == 0 || regime == Regime::OffSpectrum {
        return Vec::new();
    }
    let arg = delta_k.arg();
    let keep = |j: usize| match regime {
        Regime::Interior => true,
        Regime::Edge(EdgeSign::Periodic) => j % 2 == 1,
        Regime::Edge(EdgeSign::AntiPeriodic) => j % 2 == 0,
        Regime::OffSpectrum => false,
    };
    let mut out: Vec<f64> = (1..=2 * k)
        .filter(|&j| keep(j))
        .map(|j| reduce_angle((j as f64 * PI - arg) / k as f64))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// 1e-3·(1 + |E₀|).
pub fn default_probe_radius(e0: C64) -> f64 {
    1e-3 * (1.0 + e0.norm())
}

/// Finds where Im Δ vanishes with Re Δ ∈ [−1, 1] on |E − E₀| = probe_radius
/// and compares against `cp.directions`.
pub fn verify_local_shape(
    v: &PeriodicPotential,
    cp: &CriticalPoint,
    probe_radius: f64,
    tols: &Tolerances,
) -> Result<ShapeReport, SpectrumError> {
    if !(probe_radius.is_finite() && probe_radius > 0.0) {
        return Err(SpectrumError::InvalidArgument(format!("probe radius must be positive, got {probe_radius}")));
    }
    let at = |theta: f64| delta_only(v, cp.e0 + C64::from_polar(probe_radius, theta), tols.ode);
    let thetas: Vec<f64> = (0..PROBE_NODES).map(|l| TAU * l as f64 / PROBE_NODES as f64).collect();
    let values: Vec<C64> = thetas.iter().map(|&t| at(t)).collect::<Result<_, _>>()?;

    let mut measured = Vec::new();
    let accept = |d: C64| d.re.abs() <= 1.0 + tols.spectral;
    for l in 0..PROBE_NODES {
        let (a, fa) = (thetas[l], values[l]);
        let next = (l + 1) % PROBE_NODES;
        let (b, fb) = (if next == 0 { TAU } else { thetas[next] }, values[next]);
        if fa.im == 0.0 {
            if accept(fa) {
                measured.push(a);
            }
            continue;
        }
        if fb.im == 0.0 || fa.im.signum() == fb.im.signum() {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (a, b, fa);
        let mut mid_value = fa;
        while hi - lo > ANGLE_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            mid_value = at(mid)?;
            if mid_value.im == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if mid_value.im.signum() == flo.im.signum() {
                lo = mid;
                flo = mid_value;
            } else {
                hi = mid;
            }
        }
        if accept(mid_value) {
            measured.push(reduce_angle(0.5 * (lo + hi)));
        }
    }
    measured.sort_by(f64::total_cmp);

    let predicted = cp.directions.clone();
    if measured.len() != predicted.len() {
        return Err(SpectrumError::ArcCountMismatch {
            predicted: predicted.len(),
            measured: measured.len(),
        });
    }
    let max_angle_error = predicted
        .iter()
        .map(|&p| measured.iter().map(|&m| angular_distance(p, m)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(ShapeReport {
        arcs_found: measured.len(),
        measured_angles: measured,
        max_angle_error,
        predicted,
    })
}

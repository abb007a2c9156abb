use num_complex::Complex64 as C64;

use super::{
    classify_point, default_trace_box, in_spectrum, scan_real_line, trace_ray, Regime, SpectrumError, Tolerances,
    TraceConfig, EDGE_DELTA, WITNESS_MIN_IM,
};
use crate::floquet::discriminant;
use crate::potential::{check_pt_symmetry, PeriodicPotential};

/// Defect allowed by the PT-symmetry precondition.
pub const PT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateConfig {
    pub scan_points: usize,
    pub tols: Tolerances,
    /// Tracer step along the off-axis rays.
    pub step: f64,
    /// Points traced along each ray.
    pub ray_points: usize,
    pub witnesses_per_ray: usize,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            scan_points: 300,
            tols: Tolerances::default(),
            step: 0.01,
            ray_points: 40,
            witnesses_per_ray: 12,
        }
    }
}

/// A real interior extremum of Δ together with nonreal spectral points
/// found on the arcs leaving it.
#[derive(Debug, Clone, PartialEq)]
pub struct NonrealCertificate {
    pub extremum_e0: f64,
    pub delta_at: f64,
    pub order_k: usize,
    pub witness_points: Vec<C64>,
}

fn refine_extremum(v: &PeriodicPotential, lo: f64, hi: f64, tols: &Tolerances) -> Result<f64, SpectrumError> {
    let slope = |e: f64| -> Result<f64, SpectrumError> { Ok(discriminant(v, C64::new(e, 0.0), tols.ode)?.delta_prime.re) };
    let (mut a, mut b) = (lo, hi);
    let mut fa = slope(a)?;
    while b - a > 1e-12 * (1.0 + a.abs()) {
        let mid = 0.5 * (a + b);
        let fm = slope(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Real local extrema of Δ in `window` with value inside (−1, 1), as
/// (E₀, Δ(E₀)). Extrema within [`EDGE_DELTA`] of ±1 count as band edges and
/// are left out.
pub fn find_interior_extrema(
    v: &PeriodicPotential,
    window: (f64, f64),
    scan_points: usize,
    tols: &Tolerances,
) -> Result<Vec<(f64, f64)>, SpectrumError> {
    let scan = scan_real_line(v, window.0, window.1, scan_points, tols)?;
    let mut out = Vec::new();
    for &(lo, hi) in &scan.extremum_candidates {
        let e0 = refine_extremum(v, lo, hi, tols)?;
        let delta = discriminant(v, C64::new(e0, 0.0), tols.ode)?.delta;
        if delta.re.abs() <= 1.0 - EDGE_DELTA {
            out.push((e0, delta.re));
        }
    }
    Ok(out)
}

/// Traces the off-axis arcs leaving the real extremum `e0` and collects
/// nonreal spectral points on them. `None` when `e0` is not an interior
/// point of order ≥ 2 or no witness survives.
pub fn certify_extremum(
    v: &PeriodicPotential,
    e0: f64,
    window_end: f64,
    cfg: &CertificateConfig,
) -> Result<Option<NonrealCertificate>, SpectrumError> {
    let tols = cfg.tols;
    let cp = classify_point(v, C64::new(e0, 0.0), &tols)?;
    if cp.order_k < 2 || cp.regime != Regime::Interior {
        return Ok(None);
    }
    let trace_cfg = TraceConfig {
        step: cfg.step,
        trace_tol: tols.spectral,
        ode_tol: tols.ode,
        max_points: cfg.ray_points,
        bbox: default_trace_box(v, window_end + 1.0),
    };
    let mut witnesses = Vec::new();
    for &angle in cp.directions.iter().filter(|a| a.sin().abs() > 0.1) {
        let arc = match trace_ray(v, cp.e0, cp.order_k, angle, &trace_cfg) {
            Ok(arc) => arc,
            Err(SpectrumError::CorrectorDiverged(_) | SpectrumError::SeedNotOnSpectrum(_)) => continue,
            Err(e) => return Err(e),
        };
        let mut taken = 0;
        for &e in arc.points.iter().skip(1).filter(|e| e.im.abs() >= WITNESS_MIN_IM) {
            if taken == cfg.witnesses_per_ray {
                break;
            }
            if in_spectrum(v, e, &tols)? {
                witnesses.push(e);
                taken += 1;
            }
        }
    }
    if witnesses.is_empty() {
        return Ok(None);
    }
    Ok(Some(NonrealCertificate {
        extremum_e0: e0,
        delta_at: cp.delta_at.re,
        order_k: cp.order_k,
        witness_points: witnesses,
    }))
}

/// For a PT-symmetric potential, every local extremum of Δ on the real line
/// with value inside (−1, 1) forces nonreal spectrum. Returns one
/// certificate per extremum in `window` that yields witnesses.
pub fn detect_nonreal_from_extremum(
    v: &PeriodicPotential,
    window: (f64, f64),
    cfg: &CertificateConfig,
) -> Result<Vec<NonrealCertificate>, SpectrumError> {
    let report = check_pt_symmetry(v, PT_TOL);
    if !report.pt_symmetric {
        return Err(SpectrumError::NotPTSymmetric(report.max_defect));
    }
    let mut certificates = Vec::new();
    for (e0, _) in find_interior_extrema(v, window, cfg.scan_points, &cfg.tols)? {
        if let Some(c) = certify_extremum(v, e0, window.1, cfg)? {
            certificates.push(c);
        }
    }
    Ok(certificates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn free_potential_has_no_certificates() {
        let free = PeriodicPotential::free(PI).unwrap();
        let certs = detect_nonreal_from_extremum(&free, (-1.0, 10.0), &CertificateConfig::default()).unwrap();
        assert!(certs.is_empty());
    }

    #[test]
    fn non_pt_potential_is_rejected() {
        let v = PeriodicPotential::constant(PI, C64::new(0.0, 1.0)).unwrap();
        assert!(matches!(
            detect_nonreal_from_extremum(&v, (-1.0, 5.0), &CertificateConfig::default()),
            Err(SpectrumError::NotPTSymmetric(_))
        ));
    }

    #[test]
    fn cubic_sine_family_member_certifies() {
        let v = PeriodicPotential::expression(TAU, "i*sin(x)^3").unwrap();
        let cfg = CertificateConfig {
            scan_points: 120,
            ..CertificateConfig::default()
        };
        let certs = detect_nonreal_from_extremum(&v, (0.0, 1.5), &cfg).unwrap();
        assert!(!certs.is_empty());
        for c in &certs {
            assert!(c.order_k >= 2 && c.delta_at.abs() < 1.0);
            assert!(c.witness_points.len() >= 2);
            assert!(c.witness_points.iter().all(|w| w.im.abs() >= WITNESS_MIN_IM));
        }
    }
}

use num_complex::Complex64 as C64;

use super::{SpectrumError, Tolerances};
use crate::floquet::{discriminant, DiscriminantValue};
use crate::potential::PeriodicPotential;

/// Band endpoints are refined until the bracket is this narrow.
const EDGE_RESOLUTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub energy: f64,
    pub delta: C64,
    pub delta_prime: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealScan {
    pub samples: Vec<ScanSample>,
    /// Maximal real intervals on which Δ is real and within [−1, 1].
    pub bands: Vec<(f64, f64)>,
    /// Brackets [E_i, E_{i+1}] inside a band across which Re Δ′ changes sign.
    pub extremum_candidates: Vec<(f64, f64)>,
}

fn on_band(delta: C64, tol: f64) -> bool {
    delta.im.abs() <= tol && delta.re.abs() <= 1.0 + tol
}

fn sample(v: &PeriodicPotential, e: f64, tols: &Tolerances) -> Result<ScanSample, SpectrumError> {
    let DiscriminantValue { delta, delta_prime, .. } = discriminant(v, C64::new(e, 0.0), tols.ode)?;
    Ok(ScanSample {
        energy: e,
        delta,
        delta_prime,
    })
}

/// Locates the band boundary between `inside` and `outside` (either order on
/// the axis). Uses the sign change of |Re Δ| − 1 when there is one, otherwise
/// bisects the membership predicate.
fn refine_edge(
    v: &PeriodicPotential,
    inside: &ScanSample,
    outside: &ScanSample,
    tols: &Tolerances,
) -> Result<f64, SpectrumError> {
    let (mut a, mut b) = (inside.energy, outside.energy);
    let level = |s: &ScanSample| s.delta.re.abs() - 1.0;
    let by_level = level(inside) <= 0.0 && level(outside) > 0.0 && outside.delta.im.abs() <= tols.spectral;
    while (b - a).abs() > EDGE_RESOLUTION {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let s = sample(v, mid, tols)?;
        let keep_inside = if by_level {
            level(&s) <= 0.0
        } else {
            on_band(s.delta, tols.spectral)
        };
        if keep_inside {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Samples Δ on `n` uniformly spaced real energies in [e_min, e_max] and
/// extracts the real bands and the extremum candidates of Re Δ inside them.
pub fn scan_real_line(
    v: &PeriodicPotential,
    e_min: f64,
    e_max: f64,
    n: usize,
    tols: &Tolerances,
) -> Result<RealScan, SpectrumError> {
    if !(e_min < e_max) || n < 2 {
        return Err(SpectrumError::InvalidArgument(format!(
            "scan needs e_min < e_max and n >= 2, got [{e_min}, {e_max}], n = {n}"
        )));
    }
    let samples: Vec<ScanSample> = (0..n)
        .map(|i| {
            let e = if i + 1 == n {
                e_max
            } else {
                e_min + (e_max - e_min) * i as f64 / (n - 1) as f64
            };
            sample(v, e, tols)
        })
        .collect::<Result<_, _>>()?;

    let tol = tols.spectral;
    let mut bands = Vec::new();
    let mut extremum_candidates = Vec::new();
    let mut i = 0;
    while i < n {
        if !on_band(samples[i].delta, tol) {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < n && on_band(samples[i + 1].delta, tol) {
            let (p, q) = (samples[i].delta_prime.re, samples[i + 1].delta_prime.re);
            if (p > 0.0 && q <= 0.0) || (p < 0.0 && q >= 0.0) {
                extremum_candidates.push((samples[i].energy, samples[i + 1].energy));
            }
            i += 1;
        }
        let last = i;
        let start = if first == 0 {
            samples[0].energy
        } else {
            refine_edge(v, &samples[first], &samples[first - 1], tols)?
        };
        let end = if last + 1 == n {
            samples[n - 1].energy
        } else {
            refine_edge(v, &samples[last], &samples[last + 1], tols)?
        };
        bands.push((start, end));
        i += 1;
    }
    Ok(RealScan {
        samples,
        bands,
        extremum_candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_potential_has_one_band_from_zero() {
        let free = PeriodicPotential::free(PI).unwrap();
        let scan = scan_real_line(&free, -1.0, 5.0, 601, &Tolerances::default()).unwrap();
        assert_eq!(scan.samples.len(), 601);
        assert_eq!(scan.bands.len(), 1);
        let (a, b) = scan.bands[0];
        assert!(a.abs() <= 1e-10, "edge at {a}");
        assert_eq!(b, 5.0);
        // touching points E = 1, 4 are extrema of Δ inside the band
        assert_eq!(scan.extremum_candidates.len(), 2);
        assert!(scan.extremum_candidates[0].0 <= 1.0 && scan.extremum_candidates[0].1 >= 1.0);
    }

    #[test]
    fn imaginary_constant_has_no_real_band() {
        let v = PeriodicPotential::constant(PI, C64::new(0.0, 1.0)).unwrap();
        let scan = scan_real_line(&v, -1.0, 5.0, 601, &Tolerances::default()).unwrap();
        assert!(scan.bands.is_empty());
        // Im Δ may vanish on the axis, but only where |Re Δ| > 1
        assert!(scan.samples.iter().all(|s| s.delta.im.abs() > 1e-8 || s.delta.re.abs() > 1.0));
    }

    #[test]
    fn two_samples_degenerate_to_the_pair() {
        let free = PeriodicPotential::free(PI).unwrap();
        let scan = scan_real_line(&free, 0.0, 1.0, 2, &Tolerances::default()).unwrap();
        assert_eq!(scan.samples.len(), 2);
        assert_eq!(scan.bands, vec![(0.0, 1.0)]);
    }

    #[test]
    fn rejects_empty_windows() {
        let free = PeriodicPotential::free(PI).unwrap();
        assert!(scan_real_line(&free, 1.0, 1.0, 10, &Tolerances::default()).is_err());
        assert!(scan_real_line(&free, 0.0, 1.0, 1, &Tolerances::default()).is_err());
    }

    #[test]
    fn mathieu_like_potential_opens_gaps() {
        // V = 2 cos(2x) on period π opens a gap around E = 1
        let v = PeriodicPotential::fourier(PI, vec![(1, C64::new(1.0, 0.0)), (-1, C64::new(1.0, 0.0))]).unwrap();
        let scan = scan_real_line(&v, -2.0, 6.0, 400, &Tolerances::default()).unwrap();
        assert!(scan.bands.len() >= 2);
        for &(a, b) in &scan.bands {
            assert!(a < b);
            for e in [a, b] {
                if e > -2.0 && e < 6.0 {
                    let d = discriminant(&v, C64::new(e, 0.0), 1e-10).unwrap().delta.re;
                    assert!((d.abs() - 1.0).abs() < 1e-8, "edge {e}: Δ = {d}");
                }
            }
        }
    }
}

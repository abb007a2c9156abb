use num_complex::Complex64 as C64;

use super::trace::critical_threshold;
use super::{emanating_directions, CriticalPoint, EdgeSign, Rect, Regime, SpectrumError, Tolerances};
use crate::floquet::{derivatives_auto, discriminant, DiscriminantValue, FloquetError, MAX_ORDER};
use crate::potential::PeriodicPotential;

const NEWTON_ITERATIONS: usize = 60;
/// Noise floor factor of the trapezoid Cauchy rule for order detection.
const ORDER_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdge {
    pub energy: C64,
    pub sign: EdgeSign,
    /// Δ′ ≠ 0 at the edge (above the critical threshold).
    pub simple: bool,
}

fn check_grid(grid_n: usize) -> Result<(), SpectrumError> {
    if grid_n < 4 {
        return Err(SpectrumError::InvalidArgument(format!("grid_n must be at least 4, got {grid_n}")));
    }
    Ok(())
}

fn sample_grid(v: &PeriodicPotential, bbox: &Rect, n: usize, tols: &Tolerances) -> Result<Vec<(C64, DiscriminantValue)>, SpectrumError> {
    bbox.grid(n)
        .into_iter()
        .map(|e| Ok((e, discriminant(v, e, tols.ode)?)))
        .collect()
}

/// Indices of grid nodes whose `score` is no larger than at any of the eight neighbours.
fn local_minima(n: usize, score: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let s = score[j * n + i];
            if !s.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (jj, ii) = (j as i64 + dj, i as i64 + di);
                    if (dj, di) == (0, 0) || jj < 0 || ii < 0 || jj >= n as i64 || ii >= n as i64 {
                        continue;
                    }
                    if score[jj as usize * n + ii as usize] < s {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push(j * n + i);
            }
        }
    }
    out
}

/// Δ″ by a central difference of the variational Δ′.
fn second_derivative(v: &PeriodicPotential, e: C64, tol: f64) -> Result<C64, FloquetError> {
    let h = 1e-4 * (1.0 + e.norm());
    let plus = discriminant(v, e + h, tol)?.delta_prime;
    let minus = discriminant(v, e - h, tol)?.delta_prime;
    Ok((plus - minus) / (2.0 * h))
}

/// Newton on Δ′ = 0, returning the final point with its Δ data and |Δ″|.
fn newton_on_derivative(v: &PeriodicPotential, start: C64, tols: &Tolerances) -> Result<Option<(C64, DiscriminantValue, f64)>, SpectrumError> {
    let mut e = start;
    for _ in 0..NEWTON_ITERATIONS {
        let dv = discriminant(v, e, tols.ode)?;
        let second = second_derivative(v, e, tols.ode)?;
        let step = dv.delta_prime / second;
        if !step.is_finite() || step.norm() > 1e3 * (1.0 + e.norm()) {
            return Ok(None);
        }
        e -= step;
        if step.norm() <= 1e-12 * (1.0 + e.norm()) {
            let dv = discriminant(v, e, tols.ode)?;
            return Ok(Some((e, dv, second.norm())));
        }
    }
    let dv = discriminant(v, e, tols.ode)?;
    let second = second_derivative(v, e, tols.ode)?.norm();
    Ok(Some((e, dv, second)))
}

/// Newton on Δ = target.
fn newton_on_value(v: &PeriodicPotential, start: C64, target: f64, tols: &Tolerances) -> Result<Option<(C64, DiscriminantValue)>, SpectrumError> {
    let mut e = start;
    let mut dv = discriminant(v, e, tols.ode)?;
    for _ in 0..NEWTON_ITERATIONS {
        let f = dv.delta - target;
        let step = f / dv.delta_prime;
        if !step.is_finite() || step.norm() > 1e3 * (1.0 + e.norm()) {
            return Ok(None);
        }
        e -= step;
        dv = discriminant(v, e, tols.ode)?;
        if step.norm() <= 1e-13 * (1.0 + e.norm()) || (dv.delta - target).norm() <= 1e-15 {
            break;
        }
    }
    Ok(Some((e, dv)))
}

fn dedup_sorted<T>(mut items: Vec<T>, key: impl Fn(&T) -> C64) -> Vec<T> {
    items.sort_by(|a, b| {
        let (a, b) = (key(a), key(b));
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
    });
    let mut out: Vec<T> = Vec::new();
    for item in items {
        let e = key(&item);
        if out.iter().all(|kept| (key(kept) - e).norm() > 1e-7 * (1.0 + e.norm())) {
            out.push(item);
        }
    }
    out
}

/// Roots of Δ ∓ 1 inside `bbox`: local minima of |Δ ∓ 1| on a grid, then
/// Newton. Roots where Δ′ vanishes are polished by Newton on Δ′.
pub fn find_band_edges(v: &PeriodicPotential, bbox: &Rect, grid_n: usize, tols: &Tolerances) -> Result<Vec<BandEdge>, SpectrumError> {
    check_grid(grid_n)?;
    let grid = sample_grid(v, bbox, grid_n, tols)?;
    let mut found = Vec::new();
    for sign in [EdgeSign::Periodic, EdgeSign::AntiPeriodic] {
        let target = sign.value();
        let score: Vec<f64> = grid.iter().map(|(_, dv)| (dv.delta - target).norm()).collect();
        for idx in local_minima(grid_n, &score) {
            let Some((mut e, mut dv)) = newton_on_value(v, grid[idx].0, target, tols)? else {
                continue;
            };
            let mut second = second_derivative(v, e, tols.ode)?.norm();
            let mut simple = dv.delta_prime.norm() > critical_threshold(second);
            // Near a double root Newton on Δ stalls at distance √(noise/Δ″),
            // where f ≈ Δ′²/(2Δ″) is buried in the integrator noise.
            let noise = (dv.delta - target).norm().max(1e3 * tols.ode);
            let looks_double = dv.delta_prime.norm_sqr() <= 200.0 * second * noise;
            if !simple || looks_double {
                if let Some((e2, dv2, s2)) = newton_on_derivative(v, e, tols)? {
                    if (dv2.delta - target).norm() <= 1e-8 && (e2 - e).norm() <= 1e-3 * (1.0 + e.norm()) {
                        (e, dv, second) = (e2, dv2, s2);
                        simple = dv.delta_prime.norm() > critical_threshold(second);
                    }
                }
            }
            if (dv.delta - target).norm() <= 1e-8 && bbox.contains(e) {
                found.push(BandEdge { energy: e, sign, simple });
            }
        }
    }
    Ok(dedup_sorted(found, |b| b.energy))
}

/// Vanishing order, Δ(E₀), regime and predicted directions at `e0`.
pub fn classify_point(v: &PeriodicPotential, e0: C64, tols: &Tolerances) -> Result<CriticalPoint, SpectrumError> {
    let cd = derivatives_auto(v, e0, MAX_ORDER, tols.ode)?;
    let scale = cd.max_abs.max(f64::MIN_POSITIVE);
    let mut factorial = 1.0;
    let mut order = None;
    for j in 1..=MAX_ORDER {
        factorial *= j as f64;
        let floor = factorial * cd.radius.powi(-(j as i32)) * scale * ORDER_THRESHOLD;
        if cd.values[j].norm() > floor {
            order = Some(j);
            break;
        }
    }
    let k = order.ok_or(SpectrumError::OrderUndetermined(e0))?;
    let delta_at = cd.values[0];
    let regime = Regime::of_delta(delta_at);
    Ok(CriticalPoint {
        e0,
        order_k: k,
        delta_at,
        regime,
        directions: emanating_directions(cd.values[k], k, regime),
    })
}

/// Zeros of Δ′ inside `bbox` by grid pre-scan and Newton, each classified.
pub fn find_critical_points(v: &PeriodicPotential, bbox: &Rect, grid_n: usize, tols: &Tolerances) -> Result<Vec<CriticalPoint>, SpectrumError> {
    check_grid(grid_n)?;
    let grid = sample_grid(v, bbox, grid_n, tols)?;
    let score: Vec<f64> = grid.iter().map(|(_, dv)| dv.delta_prime.norm()).collect();
    let mut roots = Vec::new();
    for idx in local_minima(grid_n, &score) {
        if let Some((e, dv, second)) = newton_on_derivative(v, grid[idx].0, tols)? {
            if bbox.contains(e) && dv.delta_prime.norm() <= critical_threshold(second) {
                roots.push(e);
            }
        }
    }
    dedup_sorted(roots, |e| *e)
        .into_iter()
        .map(|e| classify_point(v, e, tols))
        .collect()
}

use num_complex::Complex64 as C64;

use super::{in_spectrum, roots, EdgeSign, EndpointKind, Rect, SpectralArc, SpectrumError, Tolerances};
use crate::floquet::{discriminant, DiscriminantValue};
use crate::potential::PeriodicPotential;

/// Newton iterations allowed per corrector call.
const CORRECTOR_ITERATIONS: usize = 8;
/// Step halvings before the corrector gives up.
const STEP_HALVINGS: usize = 5;
/// Band edges are bisected to this arc-length resolution.
const EDGE_RESOLUTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    /// Maximum distance between consecutive points.
    pub step: f64,
    /// Points satisfy |Im Δ| ≤ trace_tol and |Re Δ| ≤ 1 + trace_tol.
    pub trace_tol: f64,
    pub ode_tol: f64,
    /// Cap on the points produced in each direction from the seed.
    pub max_points: usize,
    pub bbox: Rect,
}

impl TraceConfig {
    pub fn new(bbox: Rect) -> Self {
        Self {
            step: 0.05,
            trace_tol: 1e-8,
            ode_tol: 1e-10,
            max_points: 2000,
            bbox,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            ode: self.ode_tol,
            spectral: self.trace_tol,
        }
    }

    fn validate(&self) -> Result<(), SpectrumError> {
        if !(self.step.is_finite() && self.step > 0.0) || !(self.trace_tol > 0.0) || self.max_points < 2 {
            return Err(SpectrumError::InvalidArgument(format!(
                "trace needs step > 0, trace_tol > 0 and max_points >= 2 (got {}, {}, {})",
                self.step, self.trace_tol, self.max_points
            )));
        }
        Ok(())
    }
}

/// Tracer switches to critical-point handoff below this |Δ′|.
pub(crate) fn critical_threshold(second: f64) -> f64 {
    1e-7 * (1.0 + second)
}

#[derive(Clone, Copy)]
struct Point {
    e: C64,
    dv: DiscriminantValue,
}

fn unit_tangent(dv: &DiscriminantValue) -> C64 {
    dv.delta_prime.conj() / dv.delta_prime.norm()
}

/// Newton on Im Δ(p + s·normal) = 0 over real s.
fn correct(v: &PeriodicPotential, p: C64, normal: C64, cfg: &TraceConfig) -> Result<Option<Point>, SpectrumError> {
    let mut e = p;
    for _ in 0..=CORRECTOR_ITERATIONS {
        let dv = discriminant(v, e, cfg.ode_tol)?;
        let residual = dv.delta.im;
        if residual.abs() <= 0.1 * cfg.trace_tol {
            return Ok(Some(Point { e, dv }));
        }
        let slope = (dv.delta_prime * normal).im;
        let s = -residual / slope;
        if !s.is_finite() {
            return Ok(None);
        }
        if s.abs() <= 1e-14 * (1.0 + e.norm()) {
            return Ok((residual.abs() <= cfg.trace_tol).then_some(Point { e, dv }));
        }
        e += normal * s;
    }
    let dv = discriminant(v, e, cfg.ode_tol)?;
    Ok((dv.delta.im.abs() <= cfg.trace_tol).then_some(Point { e, dv }))
}

fn outside_band(dv: &DiscriminantValue, tol: f64) -> bool {
    dv.delta.re.abs() > 1.0 + tol
}

/// Bisects along the predictor segment from `cur` (inside) to the fraction
/// where |Re Δ| first exceeds 1 + tol. Returns the last inside point.
fn bisect_edge(
    v: &PeriodicPotential,
    cur: &Point,
    tangent: C64,
    h: f64,
    cfg: &TraceConfig,
) -> Result<Point, SpectrumError> {
    let normal = C64::i() * tangent;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best: Option<Point> = None;
    while (hi - lo) * h > EDGE_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        let p = correct(v, cur.e + tangent * (mid * h), normal, cfg)?.ok_or(SpectrumError::CorrectorDiverged(cur.e))?;
        if p.dv.delta.re.abs() <= 1.0 {
            lo = mid;
            best = Some(p);
        } else {
            hi = mid;
        }
    }
    Ok(best.unwrap_or(*cur))
}

/// Corrected point on the arc germ leaving `e0` along `angle`.
fn seed_along(v: &PeriodicPotential, e0: C64, angle: f64, cfg: &TraceConfig) -> Result<Point, SpectrumError> {
    let radius = (0.5 * cfg.step).min(1e-2 * (1.0 + e0.norm()));
    let guess = e0 + C64::from_polar(radius, angle);
    let dv = discriminant(v, guess, cfg.ode_tol)?;
    if dv.delta_prime.norm() == 0.0 {
        return Err(SpectrumError::SeedAtCriticalPoint(guess));
    }
    correct(v, guess, C64::i() * unit_tangent(&dv), cfg)?.ok_or(SpectrumError::CorrectorDiverged(guess))
}

/// Follows Im Δ = 0 from `start` in the direction `tangent` until one of the
/// endpoint conditions fires. The returned list excludes `start`.
fn walk(
    v: &PeriodicPotential,
    start: &Point,
    mut tangent: C64,
    cfg: &TraceConfig,
) -> Result<(Vec<Point>, EndpointKind), SpectrumError> {
    let mut out: Vec<Point> = Vec::new();
    let mut cur = *start;
    loop {
        if out.len() + 1 >= cfg.max_points {
            return Ok((out, EndpointKind::StepLimit));
        }
        let t = unit_tangent(&cur.dv);
        tangent = if (t * tangent.conj()).re < 0.0 { -t } else { t };
        let normal = C64::i() * tangent;

        let mut h = 0.9 * cfg.step;
        let mut next = None;
        for _ in 0..=STEP_HALVINGS {
            if let Some(p) = correct(v, cur.e + tangent * h, normal, cfg)? {
                if (p.e - cur.e).norm() <= cfg.step && (p.e - cur.e).norm() > 0.0 {
                    next = Some(p);
                    break;
                }
            }
            h *= 0.5;
        }
        let next = next.ok_or(SpectrumError::CorrectorDiverged(cur.e))?;

        if !cfg.bbox.contains(next.e) {
            return Ok((out, EndpointKind::BoxExit));
        }
        if outside_band(&next.dv, cfg.trace_tol) {
            let sign = EdgeSign::of(next.dv.delta.re);
            let edge = bisect_edge(v, &cur, tangent, h, cfg)?;
            if edge.e != cur.e {
                out.push(edge);
            }
            return Ok((out, EndpointKind::BandEdge(sign)));
        }
        let second = ((next.dv.delta_prime - cur.dv.delta_prime) / (next.e - cur.e)).norm();
        out.push(next);
        if next.dv.delta_prime.norm() < critical_threshold(second) {
            let cp = roots::classify_point(v, next.e, &cfg.tolerances());
            // two germs: one is where we came from, so the arc goes on through
            if let Some(cp) = cp.as_ref().ok().filter(|cp| cp.directions.len() == 2) {
                let angle = cp
                    .directions
                    .iter()
                    .copied()
                    .max_by(|a, b| {
                        let along = |t: f64| (C64::from_polar(1.0, t) * tangent.conj()).re;
                        along(*a).total_cmp(&along(*b))
                    })
                    .expect("two directions");
                let resumed = seed_along(v, next.e, angle, cfg)?;
                if cfg.bbox.contains(resumed.e) && !outside_band(&resumed.dv, cfg.trace_tol) {
                    out.push(resumed);
                    tangent = C64::from_polar(1.0, angle);
                    cur = resumed;
                    continue;
                }
            }
            // order 0 marks an undetermined vanishing order
            let order = cp.map_or(0, |cp| cp.order_k);
            return Ok((out, EndpointKind::CriticalPoint { e0: next.e, order }));
        }
        cur = next;
    }
}

fn to_arc(points: Vec<Point>, start_kind: EndpointKind, end_kind: EndpointKind) -> SpectralArc {
    SpectralArc {
        delta_values: points.iter().map(|p| p.dv.delta.re).collect(),
        points: points.iter().map(|p| p.e).collect(),
        start_kind,
        end_kind,
    }
}

/// Traces the spectral arc through `seed` in both directions. The arc is
/// oriented so that it leaves the seed toward increasing Re E (increasing
/// Im E on vertical arcs).
pub fn trace_arc(v: &PeriodicPotential, seed: C64, cfg: &TraceConfig) -> Result<SpectralArc, SpectrumError> {
    cfg.validate()?;
    if !in_spectrum(v, seed, &cfg.tolerances())? {
        return Err(SpectrumError::SeedNotOnSpectrum(seed));
    }
    let dv = discriminant(v, seed, cfg.ode_tol)?;
    if dv.delta_prime.norm() < critical_threshold(0.0) {
        return Err(SpectrumError::SeedAtCriticalPoint(seed));
    }
    let t0 = unit_tangent(&dv);
    let seed_point = correct(v, seed, C64::i() * t0, cfg)?.ok_or(SpectrumError::CorrectorDiverged(seed))?;
    let t0 = unit_tangent(&seed_point.dv);
    let forward = if t0.re.abs() > 1e-12 { t0 * t0.re.signum() } else { t0 * t0.im.signum() };

    let (ahead, end_kind) = walk(v, &seed_point, forward, cfg)?;
    let (behind, start_kind) = walk(v, &seed_point, -forward, cfg)?;
    let mut points: Vec<Point> = behind.into_iter().rev().collect();
    points.push(seed_point);
    points.extend(ahead);
    Ok(to_arc(points, start_kind, end_kind))
}

/// Traces the arc germ leaving the critical point `e0` (of order `k`) along
/// `angle`. The first point of the arc is `e0` itself.
pub fn trace_ray(
    v: &PeriodicPotential,
    e0: C64,
    k: usize,
    angle: f64,
    cfg: &TraceConfig,
) -> Result<SpectralArc, SpectrumError> {
    cfg.validate()?;
    let seed = seed_along(v, e0, angle, cfg)?;
    if outside_band(&seed.dv, cfg.trace_tol) {
        return Err(SpectrumError::SeedNotOnSpectrum(seed.e));
    }
    let direction = C64::from_polar(1.0, angle);
    let t = unit_tangent(&seed.dv);
    let outward = if (t * direction.conj()).re >= 0.0 { t } else { -t };
    let (ahead, end_kind) = walk(v, &seed, outward, cfg)?;

    let center = discriminant(v, e0, cfg.ode_tol)?;
    let mut points = vec![Point { e: e0, dv: center }, seed];
    points.extend(ahead);
    Ok(to_arc(points, EndpointKind::CriticalPoint { e0, order: k }, end_kind))
}

//! Spectrum of the Hill operator: membership, real-line scans, arc tracing,
//! band edges, critical points of Δ and the local shape of the spectrum
//! around them, and nonreal-spectrum certificates for PT-symmetric
//! potentials.

mod membership;
mod pt;
mod roots;
mod scan;
mod shape;
mod trace;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::floquet::FloquetError;
use crate::potential::{bound_region, PeriodicPotential, SpectralBound};

pub use membership::{in_spectrum, membership_of_delta, Membership};
pub use pt::{
    certify_extremum, detect_nonreal_from_extremum, find_interior_extrema, CertificateConfig, NonrealCertificate, PT_TOL,
};
pub use roots::{classify_point, find_band_edges, find_critical_points, BandEdge};
pub use scan::{scan_real_line, RealScan, ScanSample};
pub use shape::{default_probe_radius, emanating_directions, verify_local_shape, ShapeReport};
pub use trace::{trace_arc, trace_ray, TraceConfig};

/// Width of the ambiguous zone around Δ = ±1 in which points count as edges.
pub const EDGE_DELTA: f64 = 1e-6;
/// |Im Δ(E₀)| below this makes Δ(E₀) real for regime classification.
pub const REALITY_TOL: f64 = 1e-8;
/// Off-axis witnesses must have at least this imaginary part.
pub const WITNESS_MIN_IM: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error("membership criteria disagree at E = {energy}: Δ = {delta}, |ρ₁| = {rho_modulus}")]
    CriteriaMismatch { energy: C64, delta: C64, rho_modulus: f64 },
    #[error("seed {0} is not on the spectrum")]
    SeedNotOnSpectrum(C64),
    #[error("seed {0} sits on a critical point of Δ; seed along emanating directions instead")]
    SeedAtCriticalPoint(C64),
    #[error("corrector failed to converge near E = {0}")]
    CorrectorDiverged(C64),
    #[error("vanishing order at {0} exceeds the derivative cap")]
    OrderUndetermined(C64),
    #[error("probe found {measured} arcs, predicted {predicted}")]
    ArcCountMismatch { predicted: usize, measured: usize },
    #[error("potential is not PT-symmetric (defect {0:e})")]
    NotPTSymmetric(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Integrator tolerance and the membership tolerance on Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub ode: f64,
    pub spectral: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode: 1e-10,
            spectral: 1e-8,
        }
    }
}

/// Axis-aligned rectangle in the complex E-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, SpectrumError> {
        let ok = re_min < re_max && im_min <= im_max && [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !ok {
            return Err(SpectrumError::InvalidArgument(format!(
                "empty rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, e: C64) -> bool {
        e.re >= self.re_min && e.re <= self.re_max && e.im >= self.im_min && e.im <= self.im_max
    }

    /// The bounding strip of `bound` widened by `margin`, cut off at `re_max`.
    pub fn from_bound(bound: &SpectralBound, margin: f64, re_max: f64) -> Self {
        let re_min = if bound.re_min.is_finite() { bound.re_min - margin } else { re_max - 1e3 };
        let im_min = if bound.im_min.is_finite() { bound.im_min - margin } else { -1e3 };
        let im_max = if bound.im_max.is_finite() { bound.im_max + margin } else { 1e3 };
        Self {
            re_min,
            re_max: re_max.max(re_min + margin),
            im_min,
            im_max,
        }
    }

    /// n × n grid including the corners, row-major in Im.
    pub fn grid(&self, n: usize) -> Vec<C64> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            let im = self.im_min + (self.im_max - self.im_min) * j as f64 / (n - 1) as f64;
            for i in 0..n {
                let re = self.re_min + (self.re_max - self.re_min) * i as f64 / (n - 1) as f64;
                out.push(C64::new(re, im));
            }
        }
        out
    }
}

/// Default tracer box: the bounding strip widened by a margin, with impulse
/// strengths added for delta combs.
pub fn default_trace_box(v: &PeriodicPotential, re_max: f64) -> Rect {
    let bound = bound_region(v);
    let margin = match v.body() {
        crate::potential::PotentialBody::DeltaComb { .. } => 10.0 + 2.0 * v.impulse_weight() / v.period(),
        _ => 1.0,
    };
    Rect::from_bound(&bound, margin, re_max)
}

/// Which of Δ = ±1 an edge sits on: periodic (+1) or anti-periodic (−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSign {
    Periodic,
    AntiPeriodic,
}

impl EdgeSign {
    pub fn value(self) -> f64 {
        match self {
            EdgeSign::Periodic => 1.0,
            EdgeSign::AntiPeriodic => -1.0,
        }
    }

    pub fn of(x: f64) -> Self {
        if x >= 0.0 {
            EdgeSign::Periodic
        } else {
            EdgeSign::AntiPeriodic
        }
    }

    /// "P" or "AP".
    pub fn label(self) -> &'static str {
        match self {
            EdgeSign::Periodic => "P",
            EdgeSign::AntiPeriodic => "AP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Δ(E₀) real and strictly inside (−1, 1).
    Interior,
    /// Δ(E₀) = ±1.
    Edge(EdgeSign),
    /// Δ(E₀) not in [−1, 1].
    OffSpectrum,
}

impl Regime {
    pub fn of_delta(delta: C64) -> Self {
        if delta.im.abs() > REALITY_TOL {
            return Regime::OffSpectrum;
        }
        let dist = 1.0 - delta.re.abs();
        if dist.abs() <= EDGE_DELTA {
            Regime::Edge(EdgeSign::of(delta.re))
        } else if dist > 0.0 {
            Regime::Interior
        } else {
            Regime::OffSpectrum
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndpointKind {
    BandEdge(EdgeSign),
    CriticalPoint { e0: C64, order: usize },
    BoxExit,
    StepLimit,
}

/// A polyline on the spectrum with typed endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralArc {
    pub points: Vec<C64>,
    /// Re Δ at each point.
    pub delta_values: Vec<f64>,
    pub start_kind: EndpointKind,
    pub end_kind: EndpointKind,
}

impl SpectralArc {
    /// Smallest distance from `e` to the polyline.
    pub fn distance_to(&self, e: C64) -> f64 {
        match self.points.len() {
            0 => f64::INFINITY,
            1 => (self.points[0] - e).norm(),
            _ => self
                .points
                .windows(2)
                .map(|w| segment_distance(w[0], w[1], e))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn segment_distance(a: C64, b: C64, p: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// A zero of Δ′ (or any point, when `order_k` = 1) with its local structure.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub e0: C64,
    pub order_k: usize,
    pub delta_at: C64,
    pub regime: Regime,
    /// Predicted tangent directions of the spectrum at `e0`, in [0, 2π), sorted.
    pub directions: Vec<f64>,
}

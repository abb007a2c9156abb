//! Complex periodic potentials: representations, evaluation, PT-symmetry
//! detection and the strip that confines the spectrum.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Deserialize;
use thiserror::Error;

use crate::expr::{self, EvalError, ExprAst, ExprError};

/// Samples per period used for inf/sup estimation of sampled potentials.
pub const BOUND_SAMPLES: usize = 4096;
/// Widening applied to sampled (inexact) bounds.
pub const BOUND_MARGIN: f64 = 1e-6;
/// Grid size used by [`check_pt_symmetry`].
pub const SYMMETRY_SAMPLES: usize = 2048;

const SEGMENT_SUM_RTOL: f64 = 1e-12;
const IMPULSE_HIT_RTOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("segment lengths sum to {sum}, expected the period {period}")]
    SegmentSum { sum: f64, period: f64 },
    #[error("segment {index} has non-positive length {length}")]
    SegmentLength { index: usize, length: f64 },
    #[error("impulse positions must be strictly increasing in [0, period); offending index {index}")]
    ImpulseOrder { index: usize },
    #[error("coefficient list is empty")]
    EmptyCoefficients,
    #[error("potential value is not finite")]
    NonFinite,
    #[error("expression: {0}")]
    Expr(#[from] ExprError),
    #[error("expression fails at x = {x}: {source}")]
    ExprEval { x: f64, source: EvalError },
    #[error("delta-comb potential evaluated at impulse position {position}")]
    Domain { position: f64 },
    #[error("malformed potential spec at line {line}, column {column}: {message}")]
    Spec { line: usize, column: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialBody {
    /// V(x) = Σ c_n exp(2πi n x / ω)
    FourierSeries { coefficients: Vec<(i32, C64)> },
    /// Consecutive constant pieces starting at x = 0.
    PiecewiseConstant { segments: Vec<(f64, C64)> },
    /// Constant background plus point impulses s_j δ(x − x_j).
    DeltaComb {
        background: C64,
        impulses: Vec<(f64, C64)>,
    },
    Expression { source: String, ast: ExprAst },
}

/// A complex-valued potential of period `period`, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPotential {
    period: f64,
    body: PotentialBody,
}

fn check_period(period: f64) -> Result<(), PotentialError> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(PotentialError::InvalidPeriod(period))
    }
}

impl PeriodicPotential {
    pub fn fourier(period: f64, coefficients: Vec<(i32, C64)>) -> Result<Self, PotentialError> {
        check_period(period)?;
        if coefficients.is_empty() {
            return Err(PotentialError::EmptyCoefficients);
        }
        if coefficients.iter().any(|(_, c)| !c.is_finite()) {
            return Err(PotentialError::NonFinite);
        }
        Ok(Self {
            period,
            body: PotentialBody::FourierSeries { coefficients },
        })
    }

    /// Constant potential `c`, stored as a single zeroth Fourier mode.
    pub fn constant(period: f64, c: C64) -> Result<Self, PotentialError> {
        Self::fourier(period, vec![(0, c)])
    }

    pub fn free(period: f64) -> Result<Self, PotentialError> {
        Self::constant(period, C64::new(0.0, 0.0))
    }

    pub fn piecewise(period: f64, segments: Vec<(f64, C64)>) -> Result<Self, PotentialError> {
        check_period(period)?;
        if segments.is_empty() {
            return Err(PotentialError::EmptyCoefficients);
        }
        for (index, &(length, value)) in segments.iter().enumerate() {
            if !(length.is_finite() && length > 0.0) {
                return Err(PotentialError::SegmentLength { index, length });
            }
            if !value.is_finite() {
                return Err(PotentialError::NonFinite);
            }
        }
        let sum: f64 = segments.iter().map(|s| s.0).sum();
        if (sum - period).abs() > SEGMENT_SUM_RTOL * period {
            return Err(PotentialError::SegmentSum { sum, period });
        }
        Ok(Self {
            period,
            body: PotentialBody::PiecewiseConstant { segments },
        })
    }

    pub fn delta_comb(period: f64, background: C64, impulses: Vec<(f64, C64)>) -> Result<Self, PotentialError> {
        check_period(period)?;
        if !background.is_finite() || impulses.iter().any(|(p, s)| !p.is_finite() || !s.is_finite()) {
            return Err(PotentialError::NonFinite);
        }
        for (index, &(pos, _)) in impulses.iter().enumerate() {
            let in_range = (0.0..period).contains(&pos);
            let increasing = index == 0 || impulses[index - 1].0 < pos;
            if !in_range || !increasing {
                return Err(PotentialError::ImpulseOrder { index });
            }
        }
        Ok(Self {
            period,
            body: PotentialBody::DeltaComb { background, impulses },
        })
    }

    /// Parses `source` and smoke-checks it at x = 0 and x = ω/2.
    pub fn expression(period: f64, source: &str) -> Result<Self, PotentialError> {
        check_period(period)?;
        let ast = expr::parse(source)?;
        for x in [0.0, 0.5 * period] {
            let v = expr::eval_expr(&ast, x).map_err(|source| PotentialError::ExprEval { x, source })?;
            if !v.is_finite() {
                return Err(PotentialError::NonFinite);
            }
        }
        Ok(Self {
            period,
            body: PotentialBody::Expression {
                source: source.to_string(),
                ast,
            },
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn body(&self) -> &PotentialBody {
        &self.body
    }

    /// The constant value when the potential is x-independent (and has no impulses).
    pub fn as_constant(&self) -> Option<C64> {
        match &self.body {
            PotentialBody::FourierSeries { coefficients } => {
                if coefficients.iter().all(|&(n, c)| n == 0 || c == C64::new(0.0, 0.0)) {
                    Some(coefficients.iter().filter(|(n, _)| *n == 0).map(|(_, c)| c).sum())
                } else {
                    None
                }
            }
            PotentialBody::PiecewiseConstant { segments } => {
                let first = segments[0].1;
                segments.iter().all(|s| s.1 == first).then_some(first)
            }
            PotentialBody::DeltaComb { background, impulses } => impulses.is_empty().then_some(*background),
            PotentialBody::Expression { ast, .. } => {
                if ast.depends_on_x() {
                    None
                } else {
                    expr::eval_expr(ast, 0.0).ok()
                }
            }
        }
    }

    /// Reduces `x` into `[0, ω)`. The remainder is computed exactly, so any two
    /// arguments that differ by an exactly represented multiple of ω reduce to
    /// the same value.
    pub fn reduce(&self, x: f64) -> f64 {
        let r = x.rem_euclid(self.period);
        if r >= self.period {
            0.0
        } else {
            r
        }
    }

    /// V(x mod ω). Delta impulses are not pointwise values: asking for one is a
    /// domain error.
    pub fn evaluate(&self, x: f64) -> Result<C64, PotentialError> {
        let r = self.reduce(x);
        match &self.body {
            PotentialBody::FourierSeries { coefficients } => Ok(fourier_sum(coefficients, self.period, r)),
            PotentialBody::PiecewiseConstant { segments } => Ok(segment_at(segments, r)),
            PotentialBody::DeltaComb { background, impulses } => {
                let hit = IMPULSE_HIT_RTOL * self.period;
                for &(pos, _) in impulses {
                    let d = (r - pos).abs();
                    if d <= hit || (self.period - d) <= hit {
                        return Err(PotentialError::Domain { position: pos });
                    }
                }
                Ok(*background)
            }
            PotentialBody::Expression { ast, .. } => {
                expr::eval_expr(ast, r).map_err(|source| PotentialError::ExprEval { x, source })
            }
        }
    }

    /// Pointwise value used by the integrator; `x` is already in `[0, ω]`.
    pub(crate) fn smooth_value(&self, x: f64) -> Result<C64, PotentialError> {
        match &self.body {
            PotentialBody::FourierSeries { coefficients } => Ok(fourier_sum(coefficients, self.period, x)),
            PotentialBody::Expression { ast, .. } => {
                expr::eval_expr(ast, x).map_err(|source| PotentialError::ExprEval { x, source })
            }
            _ => self.evaluate(x),
        }
    }

    /// Sum of impulse strengths |s_j|, zero for non-delta potentials.
    pub fn impulse_weight(&self) -> f64 {
        match &self.body {
            PotentialBody::DeltaComb { impulses, .. } => impulses.iter().map(|(_, s)| s.norm()).sum(),
            _ => 0.0,
        }
    }
}

fn fourier_sum(coefficients: &[(i32, C64)], period: f64, x: f64) -> C64 {
    let base = 2.0 * PI * x / period;
    coefficients
        .iter()
        .map(|&(n, c)| {
            if n == 0 {
                c
            } else {
                c * C64::from_polar(1.0, n as f64 * base)
            }
        })
        .sum()
}

fn segment_at(segments: &[(f64, C64)], x: f64) -> C64 {
    let mut left = 0.0;
    for &(length, value) in segments {
        left += length;
        if x < left {
            return value;
        }
    }
    segments[segments.len() - 1].1
}

/// Bounding strip for the spectrum: Re E ≥ re_min, im_min ≤ Im E ≤ im_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBound {
    pub re_min: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Analytic values rather than sampled estimates.
    pub exact: bool,
}

impl SpectralBound {
    pub fn contains(&self, e: C64, eps: f64) -> bool {
        e.re >= self.re_min - eps && e.im >= self.im_min - eps && e.im <= self.im_max + eps
    }
}

fn bound_of_values(values: impl Iterator<Item = C64>) -> (f64, f64, f64) {
    values.fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(r, lo, hi), v| {
        (r.min(v.re), lo.min(v.im), hi.max(v.im))
    })
}

/// Computes inf Re V, inf Im V and sup Im V.
///
/// Piecewise-constant and constant potentials are exact. Fourier series and
/// expressions are sampled on [`BOUND_SAMPLES`] points and widened by
/// [`BOUND_MARGIN`]. Delta combs only contribute their background and are
/// reported inexact: the impulses are not reflected in the strip.
pub fn bound_region(v: &PeriodicPotential) -> SpectralBound {
    if let (Some(c), false) = (v.as_constant(), matches!(v.body, PotentialBody::DeltaComb { .. })) {
        return SpectralBound {
            re_min: c.re,
            im_min: c.im,
            im_max: c.im,
            exact: true,
        };
    }
    match &v.body {
        PotentialBody::PiecewiseConstant { segments } => {
            let (re_min, im_min, im_max) = bound_of_values(segments.iter().map(|s| s.1));
            SpectralBound {
                re_min,
                im_min,
                im_max,
                exact: true,
            }
        }
        PotentialBody::DeltaComb { background, .. } => SpectralBound {
            re_min: background.re,
            im_min: background.im,
            im_max: background.im,
            exact: false,
        },
        PotentialBody::FourierSeries { .. } | PotentialBody::Expression { .. } => {
            let h = v.period / BOUND_SAMPLES as f64;
            let samples: Result<Vec<C64>, _> = (0..BOUND_SAMPLES).map(|j| v.evaluate(j as f64 * h)).collect();
            match samples {
                Ok(values) if values.iter().all(|z| z.is_finite()) => {
                    let (re_min, im_min, im_max) = bound_of_values(values.into_iter());
                    SpectralBound {
                        re_min: re_min - BOUND_MARGIN,
                        im_min: im_min - BOUND_MARGIN,
                        im_max: im_max + BOUND_MARGIN,
                        exact: false,
                    }
                }
                // unbounded on the grid: no usable strip
                _ => SpectralBound {
                    re_min: f64::NEG_INFINITY,
                    im_min: f64::NEG_INFINITY,
                    im_max: f64::INFINITY,
                    exact: false,
                },
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub pt_symmetric: bool,
    pub max_defect: f64,
    pub samples_used: usize,
}

/// Tests conj(V(−x)) = V(x) on a uniform grid. Delta combs are compared
/// through their background and the reflected impulse set.
pub fn check_pt_symmetry(v: &PeriodicPotential, tol: f64) -> SymmetryReport {
    check_pt_symmetry_with(v, tol, SYMMETRY_SAMPLES)
}

pub fn check_pt_symmetry_with(v: &PeriodicPotential, tol: f64, samples: usize) -> SymmetryReport {
    let omega = v.period;
    let max_defect = match &v.body {
        PotentialBody::DeltaComb { background, impulses } => {
            let mut defect = (background.conj() - background).norm();
            let pos_tol = 1e-12 * omega;
            for &(pos, strength) in impulses {
                let mirrored = if pos == 0.0 { 0.0 } else { omega - pos };
                let partner = impulses.iter().find(|(p, _)| {
                    let d = (p - mirrored).abs();
                    d <= pos_tol || omega - d <= pos_tol
                });
                defect = defect.max(match partner {
                    Some(&(_, s)) => (s.conj() - strength).norm(),
                    None => f64::INFINITY,
                });
            }
            defect
        }
        _ => {
            let h = omega / samples as f64;
            (0..samples)
                .map(|j| {
                    let x = j as f64 * h;
                    match (v.evaluate(-x), v.evaluate(x)) {
                        (Ok(a), Ok(b)) => {
                            let d = (a.conj() - b).norm();
                            if d.is_nan() {
                                f64::INFINITY
                            } else {
                                d
                            }
                        }
                        _ => f64::INFINITY,
                    }
                })
                .fold(0.0, f64::max)
        }
    };
    SymmetryReport {
        pt_symmetric: max_defect <= tol,
        max_defect,
        samples_used: samples,
    }
}

/// On-disk potential description (JSON). Complex numbers are `[re, im]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    period: f64,
    #[serde(rename = "type")]
    kind: String,
    coefficients: Option<Vec<(i32, [f64; 2])>>,
    segments: Option<Vec<(f64, [f64; 2])>>,
    background: Option<[f64; 2]>,
    impulses: Option<Vec<(f64, [f64; 2])>>,
    source: Option<String>,
}

fn cx(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn missing(field: &str, kind: &str) -> PotentialError {
    PotentialError::Spec {
        line: 0,
        column: 0,
        message: format!("type '{kind}' requires field '{field}'"),
    }
}

impl PeriodicPotential {
    /// Reads the JSON potential spec format.
    pub fn from_spec_json(text: &str) -> Result<Self, PotentialError> {
        let spec: SpecFile = serde_json::from_str(text).map_err(|e| PotentialError::Spec {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_spec(spec)
    }

    /// Like [`Self::from_spec_json`], substituting `value` for the identifier
    /// `param` in an expression source.
    pub fn from_spec_json_with_param(text: &str, param: &str, value: f64) -> Result<Self, PotentialError> {
        let mut spec: SpecFile = serde_json::from_str(text).map_err(|e| PotentialError::Spec {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if let Some(src) = spec.source.as_mut() {
            *src = expr::substitute_param(src, param, value);
        }
        Self::from_spec(spec)
    }

    fn from_spec(spec: SpecFile) -> Result<Self, PotentialError> {
        let kind = spec.kind.as_str();
        match kind {
            "fourier" => {
                let coeffs = spec.coefficients.ok_or_else(|| missing("coefficients", kind))?;
                Self::fourier(spec.period, coeffs.into_iter().map(|(n, c)| (n, cx(c))).collect())
            }
            "piecewise" => {
                let segs = spec.segments.ok_or_else(|| missing("segments", kind))?;
                Self::piecewise(spec.period, segs.into_iter().map(|(l, c)| (l, cx(c))).collect())
            }
            "delta_comb" => {
                let background = spec.background.map(cx).unwrap_or_default();
                let impulses = spec.impulses.unwrap_or_default();
                Self::delta_comb(
                    spec.period,
                    background,
                    impulses.into_iter().map(|(p, s)| (p, cx(s))).collect(),
                )
            }
            "expression" => {
                let source = spec.source.ok_or_else(|| missing("source", kind))?;
                Self::expression(spec.period, &source)
            }
            other => Err(PotentialError::Spec {
                line: 0,
                column: 0,
                message: format!("unknown potential type '{other}'"),
            }),
        }
    }
}

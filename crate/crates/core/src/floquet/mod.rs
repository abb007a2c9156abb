//! Monodromy matrix, Floquet discriminant and its E-derivatives.
//!
//! The fundamental system φ₁, φ₂ of −ψ'' + Vψ = Eψ with φ₁(0)=1, φ₁'(0)=0,
//! φ₂(0)=0, φ₂'(0)=1 is carried across one period. Smooth potentials go
//! through an adaptive Dormand–Prince 5(4) integrator; piecewise-constant
//! potentials and delta combs are propagated with exact transfer matrices.
//! Δ′ comes from the variational system y'' = (V − E)y − ψ integrated
//! alongside, higher derivatives from Cauchy integrals.

mod cauchy;
mod ode;
pub(crate) mod transfer;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::potential::{PeriodicPotential, PotentialBody, PotentialError};
use transfer::{Chain, Mat2};

pub use cauchy::{cauchy_derivatives, default_radius, derivatives_at, derivatives_auto, CauchyDerivatives};

pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-3;
/// Largest derivative order available from [`derivatives_at`].
pub const MAX_ORDER: usize = 12;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("tolerance {0:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]")]
    InvalidTolerance(f64),
    #[error("step size {h:e} fell below the minimum at x = {x}")]
    StepSizeUnderflow { x: f64, h: f64 },
    #[error("integrator exceeded {steps} steps")]
    StepLimit { steps: usize },
    #[error("non-finite state at x = {x}")]
    NonFinite { x: f64 },
    #[error("potential: {0}")]
    Potential(#[from] PotentialError),
    #[error("Cauchy and variational Δ′ disagree by {difference:e} (limit {limit:e})")]
    InconsistentDerivative { difference: f64, limit: f64 },
    #[error("derivative order {0} outside [1, {MAX_ORDER}]")]
    InvalidOrder(usize),
    #[error("Cauchy radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
}

/// M(E) = [[φ₁(ω), φ₂(ω)], [φ₁'(ω), φ₂'(ω)]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyMatrix {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub energy: C64,
    /// |ad − bc − 1|
    pub det_defect: f64,
}

impl MonodromyMatrix {
    pub fn new(a: C64, b: C64, c: C64, d: C64, energy: C64) -> Self {
        let det_defect = (a * d - b * c - 1.0).norm();
        Self {
            a,
            b,
            c,
            d,
            energy,
            det_defect,
        }
    }

    pub(crate) fn from_mat(m: &Mat2, energy: C64) -> Self {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1], energy)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn half_trace(&self) -> C64 {
        (self.a + self.d) * 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminantValue {
    pub delta: C64,
    pub delta_prime: C64,
    pub energy: C64,
    pub est_error: f64,
}

/// Eigenvalues of M(E); `rho1` is the one with |ρ| ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetMultipliers {
    pub rho1: C64,
    pub rho2: C64,
}

fn check_tol(tol: f64) -> Result<(), FloquetError> {
    if (MIN_TOL..=MAX_TOL).contains(&tol) {
        Ok(())
    } else {
        Err(FloquetError::InvalidTolerance(tol))
    }
}

/// Raw result of carrying the fundamental system across one period.
pub(crate) struct Propagation {
    pub m: Mat2,
    pub dm: Option<Mat2>,
    pub est_error: f64,
}

fn exact_chain(v: &PeriodicPotential, e: C64) -> Option<Chain> {
    let omega = v.period();
    match v.body() {
        PotentialBody::PiecewiseConstant { segments } => {
            let mut chain = Chain::new();
            for &(length, value) in segments {
                let (t, dt) = transfer::segment(value, e, length);
                chain.apply(&t, &dt);
            }
            Some(chain)
        }
        PotentialBody::DeltaComb { background, impulses } => {
            let mut chain = Chain::new();
            let mut x = 0.0;
            for &(pos, strength) in impulses {
                if pos > x {
                    let (t, dt) = transfer::segment(*background, e, pos - x);
                    chain.apply(&t, &dt);
                }
                chain.apply(&transfer::impulse(strength), &transfer::ZERO);
                x = pos;
            }
            if omega > x {
                let (t, dt) = transfer::segment(*background, e, omega - x);
                chain.apply(&t, &dt);
            }
            Some(chain)
        }
        _ => None,
    }
}

fn initial_step(v: &PeriodicPotential, e: C64) -> f64 {
    let omega = v.period();
    let v0 = v.smooth_value(0.0).unwrap_or_default();
    let scale = (v0 - e).norm().sqrt().max(1.0 / omega);
    (0.05 / scale).min(omega)
}

pub(crate) fn propagate(v: &PeriodicPotential, e: C64, tol: f64, with_derivative: bool) -> Result<Propagation, FloquetError> {
    check_tol(tol)?;
    if let Some(chain) = exact_chain(v, e) {
        let scale = chain.m.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        return Ok(Propagation {
            m: chain.m,
            dm: with_derivative.then_some(chain.dm),
            est_error: f64::EPSILON * scale * (chain.factors as f64 + 1.0),
        });
    }
    let omega = v.period();
    let h0 = initial_step(v, e);
    let h_min = 1e-14 * omega;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if with_derivative {
        // [φ₁, φ₁', φ₂, φ₂', ∂φ₁, ∂φ₁', ∂φ₂, ∂φ₂']
        let y0 = [one, zero, zero, one, zero, zero, zero, zero];
        let sol = ode::integrate(
            |x, y: &[C64; 8]| {
                let w = v.smooth_value(x)? - e;
                Ok([
                    y[1],
                    w * y[0],
                    y[3],
                    w * y[2],
                    y[5],
                    w * y[4] - y[0],
                    y[7],
                    w * y[6] - y[2],
                ])
            },
            0.0,
            omega,
            y0,
            tol,
            h0,
            h_min,
        )?;
        let y = sol.y;
        Ok(Propagation {
            m: [[y[0], y[2]], [y[1], y[3]]],
            dm: Some([[y[4], y[6]], [y[5], y[7]]]),
            est_error: sol.local_error_sum,
        })
    } else {
        let y0 = [one, zero, zero, one];
        let sol = ode::integrate(
            |x, y: &[C64; 4]| {
                let w = v.smooth_value(x)? - e;
                Ok([y[1], w * y[0], y[3], w * y[2]])
            },
            0.0,
            omega,
            y0,
            tol,
            h0,
            h_min,
        )?;
        let y = sol.y;
        Ok(Propagation {
            m: [[y[0], y[2]], [y[1], y[3]]],
            dm: None,
            est_error: sol.local_error_sum,
        })
    }
}

/// Monodromy matrix at energy `e`; `tol` must lie in [1e−13, 1e−3].
pub fn monodromy(v: &PeriodicPotential, e: C64, tol: f64) -> Result<MonodromyMatrix, FloquetError> {
    let p = propagate(v, e, tol, false)?;
    Ok(MonodromyMatrix::from_mat(&p.m, e))
}

/// Fundamental matrix of ψ″ = (c − E)ψ over `length`, by the adaptive integrator.
fn integrate_block(c: C64, e: C64, length: f64, tol: f64) -> Result<Mat2, FloquetError> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let w = c - e;
    let h0 = (0.05 / w.norm().sqrt().max(1.0 / length)).min(length);
    let sol = ode::integrate(
        |_, y: &[C64; 4]| Ok([y[1], w * y[0], y[3], w * y[2]]),
        0.0,
        length,
        [one, zero, zero, one],
        tol,
        h0,
        1e-14 * length,
    )?;
    let y = sol.y;
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

/// Monodromy matrix computed with the adaptive integrator for every potential
/// class. Piecewise-constant and delta-comb potentials are integrated piece by
/// piece with the jumps applied exactly; [`monodromy`] uses closed-form
/// transfer matrices for those instead.
pub fn monodromy_integrated(v: &PeriodicPotential, e: C64, tol: f64) -> Result<MonodromyMatrix, FloquetError> {
    check_tol(tol)?;
    let mut m = transfer::IDENTITY;
    match v.body() {
        PotentialBody::PiecewiseConstant { segments } => {
            for &(length, value) in segments {
                m = transfer::mul(&integrate_block(value, e, length, tol)?, &m);
            }
        }
        PotentialBody::DeltaComb { background, impulses } => {
            let mut x = 0.0;
            for &(pos, strength) in impulses {
                if pos > x {
                    m = transfer::mul(&integrate_block(*background, e, pos - x, tol)?, &m);
                }
                m = transfer::mul(&transfer::impulse(strength), &m);
                x = pos;
            }
            if v.period() > x {
                m = transfer::mul(&integrate_block(*background, e, v.period() - x, tol)?, &m);
            }
        }
        _ => return monodromy(v, e, tol),
    }
    Ok(MonodromyMatrix::from_mat(&m, e))
}

/// Δ(E) and Δ′(E) from one pass over the augmented system.
pub fn discriminant(v: &PeriodicPotential, e: C64, tol: f64) -> Result<DiscriminantValue, FloquetError> {
    let p = propagate(v, e, tol, true)?;
    let dm = p.dm.expect("derivative requested");
    let delta = (p.m[0][0] + p.m[1][1]) * 0.5;
    Ok(DiscriminantValue {
        delta,
        delta_prime: (dm[0][0] + dm[1][1]) * 0.5,
        energy: e,
        est_error: p.est_error + f64::EPSILON * delta.norm().max(1.0),
    })
}

/// Δ(E) alone, skipping the variational system.
pub fn delta_only(v: &PeriodicPotential, e: C64, tol: f64) -> Result<C64, FloquetError> {
    let p = propagate(v, e, tol, false)?;
    Ok((p.m[0][0] + p.m[1][1]) * 0.5)
}

impl FloquetMultipliers {
    /// Roots of ρ² − 2Δρ + 1 = 0. The larger root is taken from the quadratic
    /// formula, the smaller by division; on the unit circle the root with
    /// Im ρ ≥ 0 comes first.
    pub fn from_delta(delta: C64) -> Self {
        let s = (delta * delta - 1.0).sqrt();
        let (p, m) = (delta + s, delta - s);
        let (np, nm) = (p.norm(), m.norm());
        let tie = (np - nm).abs() <= 1e-12 * np.max(nm).max(1.0);
        let rho1 = if tie {
            if p.im >= 0.0 {
                p
            } else {
                m
            }
        } else if np > nm {
            p
        } else {
            m
        };
        Self { rho1, rho2: 1.0 / rho1 }
    }
}

pub fn multipliers(dv: &DiscriminantValue) -> FloquetMultipliers {
    FloquetMultipliers::from_delta(dv.delta)
}

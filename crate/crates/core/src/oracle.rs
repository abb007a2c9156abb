//! Closed-form monodromy matrices for exactly solvable potentials.

use num_complex::Complex64 as C64;

use crate::floquet::MonodromyMatrix;
use crate::potential::{PeriodicPotential, PotentialBody};

/// Below this value of |k|²ω² the k → 0 series replaces the trigonometric form.
const SMALL_ARGUMENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind {
    Free,
    Constant(C64),
    /// (length, value) pieces whose lengths sum to the period.
    PiecewiseConstant(Vec<(f64, C64)>),
    DeltaComb { background: C64, impulses: Vec<(f64, C64)> },
}

impl OracleKind {
    /// The oracle class of `v`, when it has one.
    pub fn of(v: &PeriodicPotential) -> Option<Self> {
        match v.body() {
            PotentialBody::PiecewiseConstant { segments } => Some(Self::PiecewiseConstant(segments.clone())),
            PotentialBody::DeltaComb { background, impulses } => Some(Self::DeltaComb {
                background: *background,
                impulses: impulses.clone(),
            }),
            _ => v.as_constant().map(|c| if c == C64::new(0.0, 0.0) { Self::Free } else { Self::Constant(c) }),
        }
    }
}

type Mat = [[C64; 2]; 2];

fn product(left: &Mat, right: &Mat) -> Mat {
    [
        [
            left[0][0] * right[0][0] + left[0][1] * right[1][0],
            left[0][0] * right[0][1] + left[0][1] * right[1][1],
        ],
        [
            left[1][0] * right[0][0] + left[1][1] * right[1][0],
            left[1][0] * right[0][1] + left[1][1] * right[1][1],
        ],
    ]
}

/// [[cos kL, sin kL / k], [−k sin kL, cos kL]] with k = √(E − c).
fn constant_block(c: C64, length: f64, e: C64) -> Mat {
    let q = e - c;
    if q.norm() * length * length < SMALL_ARGUMENT {
        // cos kL ≈ 1 − qL²/2, sin kL / k ≈ L − qL³/6, −k sin kL ≈ −qL
        let l2 = length * length;
        return [
            [1.0 - q * (l2 / 2.0), length - q * (l2 * length / 6.0)],
            [-q * length, 1.0 - q * (l2 / 2.0)],
        ];
    }
    let k = q.sqrt();
    let (s, co) = ((k * length).sin(), (k * length).cos());
    [[co, s / k], [-k * s, co]]
}

fn jump(strength: C64) -> Mat {
    [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [strength, C64::new(1.0, 0.0)]]
}

pub fn oracle_monodromy(kind: &OracleKind, omega: f64, e: C64) -> MonodromyMatrix {
    let m = match kind {
        OracleKind::Free => constant_block(C64::new(0.0, 0.0), omega, e),
        OracleKind::Constant(c) => constant_block(*c, omega, e),
        OracleKind::PiecewiseConstant(segments) => segments
            .iter()
            .fold(jump(C64::new(0.0, 0.0)), |acc, &(length, value)| product(&constant_block(value, length, e), &acc)),
        OracleKind::DeltaComb { background, impulses } => {
            let mut acc = jump(C64::new(0.0, 0.0));
            let mut x = 0.0;
            for &(pos, strength) in impulses {
                acc = product(&constant_block(*background, pos - x, e), &acc);
                acc = product(&jump(strength), &acc);
                x = pos;
            }
            product(&constant_block(*background, omega - x, e), &acc)
        }
    };
    MonodromyMatrix::new(m[0][0], m[0][1], m[1][0], m[1][1], e)
}

/// Half-trace of [`oracle_monodromy`].
pub fn oracle_discriminant(kind: &OracleKind, omega: f64, e: C64) -> C64 {
    oracle_monodromy(kind, omega, e).half_trace()
}

//! Exact propagation across constant-potential segments and delta impulses,
//! together with the E-derivative of each factor.

use num_complex::Complex64 as C64;

pub(crate) type Mat2 = [[C64; 2]; 2];

pub(crate) const IDENTITY: Mat2 = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
pub(crate) const ZERO: Mat2 = [[C64::new(0.0, 0.0); 2]; 2];

pub(crate) fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

/// Below this value of |q|·L² the power series are used.
const SERIES_LIMIT: f64 = 1.0;

/// C = cos(√q L), S = sin(√q L)/√q and dS/dq, all entire in q.
fn cos_sin_terms(q: C64, length: f64) -> (C64, C64, C64) {
    let l2 = length * length;
    if q.norm() * l2 <= SERIES_LIMIT {
        // C = Σ (−q)^n L^{2n}/(2n)!,  S = Σ (−q)^n L^{2n+1}/(2n+1)!
        let mq = -q;
        let mut c = C64::new(1.0, 0.0);
        let mut s = C64::new(length, 0.0);
        let mut ds = C64::new(0.0, 0.0);
        let mut c_term = c;
        let mut s_term = s;
        // ds_term tracks n (−1)^n q^{n−1} L^{2n+1}/(2n+1)!
        let mut pow_prev = C64::new(1.0, 0.0); // (−q)^{n−1}
        let mut fact_s = length; // L^{2n+1}/(2n+1)!
        for n in 1..40 {
            let nf = n as f64;
            c_term = c_term * mq * (l2 / ((2.0 * nf - 1.0) * (2.0 * nf)));
            s_term = s_term * mq * (l2 / ((2.0 * nf) * (2.0 * nf + 1.0)));
            fact_s *= l2 / ((2.0 * nf) * (2.0 * nf + 1.0));
            let ds_term = -pow_prev * (nf * fact_s);
            c += c_term;
            s += s_term;
            ds += ds_term;
            pow_prev *= mq;
            if c_term.norm() < 1e-18 * c.norm().max(1e-300) && ds_term.norm() < 1e-18 * ds.norm().max(1e-300) && n > 2 {
                break;
            }
        }
        (c, s, ds)
    } else {
        let k = q.sqrt();
        let (sin, cos) = ((k * length).sin(), (k * length).cos());
        let s = sin / k;
        let ds = (cos * length - s) / (q * 2.0);
        (cos, s, ds)
    }
}

/// Transfer matrix of ψ'' = (v − E)ψ across a segment of the given length and
/// its derivative with respect to E.
pub(crate) fn segment(value: C64, energy: C64, length: f64) -> (Mat2, Mat2) {
    let q = energy - value;
    let (c, s, ds) = cos_sin_terms(q, length);
    let t = [[c, s], [-q * s, c]];
    let dc = -s * (length * 0.5);
    let dt = [[dc, ds], [-s - q * ds, dc]];
    (t, dt)
}

/// Jump ψ' ← ψ' + s ψ across an impulse of strength s (E-independent).
pub(crate) fn impulse(strength: C64) -> Mat2 {
    [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [strength, C64::new(1.0, 0.0)]]
}

/// Running product M and its E-derivative, left-multiplied factor by factor.
pub(crate) struct Chain {
    pub m: Mat2,
    pub dm: Mat2,
    pub factors: usize,
}

impl Chain {
    pub fn new() -> Self {
        Self {
            m: IDENTITY,
            dm: ZERO,
            factors: 0,
        }
    }

    pub fn apply(&mut self, t: &Mat2, dt: &Mat2) {
        self.dm = add(&mul(dt, &self.m), &mul(t, &self.dm));
        self.m = mul(t, &self.m);
        self.factors += 1;
    }
}

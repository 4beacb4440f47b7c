//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `f(t + h) = Σ_k a_k h^k` for
//! `k ≤ 3`. Arithmetic on jets propagates derivatives exactly, so an
//! expression evaluated on the jet of the identity yields its first three
//! derivatives without finite differencing.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub const JET_LEN: usize = 4;

const FACTORIAL: [f64; JET_LEN] = [1.0, 1.0, 2.0, 6.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub coef: [Complex64; JET_LEN],
}

impl Jet {
    pub fn constant(v: Complex64) -> Self {
        let mut coef = [Complex64::new(0.0, 0.0); JET_LEN];
        coef[0] = v;
        Jet { coef }
    }

    /// Jet of the independent variable at `t`.
    pub fn variable(t: f64) -> Self {
        let mut j = Jet::constant(Complex64::new(t, 0.0));
        j.coef[1] = Complex64::new(1.0, 0.0);
        j
    }

    /// Builds a jet from derivative values `f, f', f'', f'''`.
    pub fn from_derivatives(d: [Complex64; JET_LEN]) -> Self {
        let mut coef = d;
        for (c, f) in coef.iter_mut().zip(FACTORIAL) {
            *c /= f;
        }
        Jet { coef }
    }

    pub fn value(&self) -> Complex64 {
        self.coef[0]
    }

    /// `k`-th derivative.
    pub fn derivative(&self, k: usize) -> Complex64 {
        self.coef[k] * FACTORIAL[k]
    }

    pub fn derivatives(&self) -> [Complex64; JET_LEN] {
        let mut d = self.coef;
        for (c, f) in d.iter_mut().zip(FACTORIAL) {
            *c *= f;
        }
        d
    }

    /// Jet of the derivative; the top coefficient is lost.
    pub fn differentiate(&self) -> Self {
        let mut coef = [Complex64::new(0.0, 0.0); JET_LEN];
        for k in 0..JET_LEN - 1 {
            coef[k] = self.coef[k + 1] * (k + 1) as f64;
        }
        Jet { coef }
    }

    pub fn conj(&self) -> Self {
        Jet {
            coef: self.coef.map(|c| c.conj()),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Jet {
            coef: self.coef.map(|c| c * s),
        }
    }

    pub fn exp(&self) -> Self {
        let mut e = [Complex64::new(0.0, 0.0); JET_LEN];
        e[0] = self.coef[0].exp();
        for k in 1..JET_LEN {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coef[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Jet { coef: e }
    }

    /// Returns `(sin, cos)` of the jet.
    pub fn sin_cos(&self) -> (Self, Self) {
        let zero = Complex64::new(0.0, 0.0);
        let mut s = [zero; JET_LEN];
        let mut c = [zero; JET_LEN];
        s[0] = self.coef[0].sin();
        c[0] = self.coef[0].cos();
        for k in 1..JET_LEN {
            let mut acc_s = zero;
            let mut acc_c = zero;
            for j in 1..=k {
                let w = self.coef[j] * j as f64;
                acc_s += w * c[k - j];
                acc_c -= w * s[k - j];
            }
            s[k] = acc_s / k as f64;
            c[k] = acc_c / k as f64;
        }
        (Jet { coef: s }, Jet { coef: c })
    }

    /// Principal square root; the value must be nonzero.
    pub fn sqrt(&self) -> Self {
        let mut s = [Complex64::new(0.0, 0.0); JET_LEN];
        s[0] = self.coef[0].sqrt();
        for k in 1..JET_LEN {
            let mut acc = self.coef[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (s[0] * 2.0);
        }
        Jet { coef: s }
    }

    pub fn powi(&self, n: i32) -> Self {
        let mut base = *self;
        let mut exp = n.unsigned_abs();
        let mut acc = Jet::constant(Complex64::new(1.0, 0.0));
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        if n < 0 {
            Jet::constant(Complex64::new(1.0, 0.0)) / acc
        } else {
            acc
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut coef = self.coef;
        for (a, b) in coef.iter_mut().zip(rhs.coef) {
            *a += b;
        }
        Jet { coef }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let mut coef = self.coef;
        for (a, b) in coef.iter_mut().zip(rhs.coef) {
            *a -= b;
        }
        Jet { coef }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            coef: self.coef.map(|c| -c),
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut coef = [Complex64::new(0.0, 0.0); JET_LEN];
        for (k, out) in coef.iter_mut().enumerate() {
            for j in 0..=k {
                *out += self.coef[j] * rhs.coef[k - j];
            }
        }
        Jet { coef }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let mut q = [Complex64::new(0.0, 0.0); JET_LEN];
        for k in 0..JET_LEN {
            let mut acc = self.coef[k];
            for j in 1..=k {
                acc -= rhs.coef[j] * q[k - j];
            }
            q[k] = acc / rhs.coef[0];
        }
        Jet { coef: q }
    }
}

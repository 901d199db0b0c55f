//! Machine-integer mirror of the exact ring arithmetic.
//!
//! The ensemble enumerations visit ~10^9 fractions whose coordinates all fit
//! comfortably in i64 (heights are <= 2^16 at desk scale, and every quantity
//! appearing in a rounding decision is bounded by a small power of the
//! input height). Routing those through `BigInt` would allocate per step,
//! so this module re-implements the handful of kernels they need on plain
//! integer pairs. Agreement with the exact path is property-tested.
//!
//! A point of K_d is represented as w/q with w = (a, b) in O_d (omega
//! basis) and q a positive rational integer; a fraction num/den is brought
//! to that shape via w = num * conj(den), q = qnorm(den). All domain tests
//! compare i128 products, so inputs with coordinates up to ~2^30 are safe.

use super::{FieldConfig, LineIneq};

pub type P = (i64, i64);

#[derive(Debug, Clone)]
pub struct FastField {
    pub d: i64,
    /// d = 3 mod 4: omega = (1+sqrt(-d))/2 and omega^2 = omega - m.
    pub is3: bool,
    pub m: i64,
    r_sq: f64,
    lines: Vec<LineIneq>,
    excl: Vec<P>,
    units: Vec<P>,
}

impl FastField {
    pub fn new(cfg: &FieldConfig) -> Self {
        FastField {
            d: cfg.d as i64,
            is3: cfg.d % 4 == 3,
            m: (cfg.d as i64 + 1) / 4,
            r_sq: cfg.r_sq_f64(),
            lines: cfg.boundary_lines.clone(),
            excl: cfg
                .excluded_translates
                .iter()
                .map(|t| (i64::try_from(&t.a).unwrap(), i64::try_from(&t.b).unwrap()))
                .collect(),
            units: cfg
                .units
                .iter()
                .map(|t| (i64::try_from(&t.a).unwrap(), i64::try_from(&t.b).unwrap()))
                .collect(),
        }
    }

    /// Squared contraction radius R^2 of the strict domain.
    #[inline]
    pub fn r_sq(&self) -> f64 {
        self.r_sq
    }

    #[inline]
    pub fn qnorm(&self, x: P) -> i64 {
        let (a, b) = x;
        if self.is3 {
            a * a + a * b + self.m * b * b
        } else {
            a * a + self.d * b * b
        }
    }

    #[inline]
    pub fn mul(&self, x: P, y: P) -> P {
        let (a, b) = x;
        let (c, e) = y;
        if self.is3 {
            (a * c - self.m * b * e, a * e + b * c + b * e)
        } else {
            (a * c - self.d * b * e, a * e + b * c)
        }
    }

    #[inline]
    pub fn conj(&self, x: P) -> P {
        let (a, b) = x;
        if self.is3 {
            (a + b, -b)
        } else {
            (a, -b)
        }
    }

    #[inline]
    pub fn sub(&self, x: P, y: P) -> P {
        (x.0 - y.0, x.1 - y.1)
    }

    /// Doubled sqrt-basis coordinates: value of w is (du/2) + (dv/2) sqrt(-d).
    #[inline]
    fn coords2(&self, w: P) -> (i64, i64) {
        let (a, b) = w;
        if self.is3 {
            (2 * a + b, b)
        } else {
            (2 * a, 2 * b)
        }
    }

    /// z = w/q in the closed cell I_d (q > 0).
    #[inline]
    pub fn in_closed(&self, w: P, q: i64) -> bool {
        let (u2, v2) = self.coords2(w);
        let rhs_scale = 2 * q as i128;
        self.lines.iter().all(|l| {
            (l.p as i128) * (u2 as i128) + (l.q as i128) * (v2 as i128) <= (l.c as i128) * rhs_scale
        })
    }

    /// z = w/q in the strict domain I'_d.
    #[inline]
    pub fn strict_contains(&self, w: P, q: i64) -> bool {
        if !self.in_closed(w, q) {
            return false;
        }
        for &(ta, tb) in &self.excl {
            if self.in_closed((w.0 - ta * q, w.1 - tb * q), q) {
                return false;
            }
        }
        true
    }

    /// Nearest integer [z] for z = w/q: the unique beta with z - beta in
    /// I'_d. Scans the 3x3 coordinate neighborhood exactly, like the BigInt
    /// path; uniqueness there makes first-hit return sound.
    pub fn round_nearest(&self, w: P, q: i64) -> Option<P> {
        let qf = q as f64;
        if self.is3 {
            let u = (2.0 * w.0 as f64 + w.1 as f64) / (2.0 * qf);
            let b0 = (w.1 as f64 / qf).round() as i64;
            for db in -1..=1i64 {
                let b = b0 + db;
                let a0 = (u - b as f64 / 2.0).round() as i64;
                for da in -1..=1i64 {
                    let cand = (a0 + da, b);
                    if self.strict_contains((w.0 - cand.0 * q, w.1 - cand.1 * q), q) {
                        return Some(cand);
                    }
                }
            }
        } else {
            let a0 = (w.0 as f64 / qf).round() as i64;
            let b0 = (w.1 as f64 / qf).round() as i64;
            for da in -1..=1i64 {
                for db in -1..=1i64 {
                    let cand = (a0 + da, b0 + db);
                    if self.strict_contains((w.0 - cand.0 * q, w.1 - cand.1 * q), q) {
                        return Some(cand);
                    }
                }
            }
        }
        None
    }

    /// Digit sequence of z = num/den in I. Returns the qnorm of the terminal
    /// denominator, which equals qnorm(gcd(num, den)) by the Euclid invariant
    /// (1 means the fraction was already reduced). Returns None if the
    /// expansion fails to terminate within the cap (cannot happen for
    /// in-range input; treated as a hard bug by callers).
    pub fn expand(&self, num: P, den: P, digits: &mut Vec<P>) -> Option<i64> {
        digits.clear();
        let mut u = num;
        let mut v = den;
        for _ in 0..192 {
            if u == (0, 0) {
                return Some(self.qnorm(v));
            }
            // 1/z = v/u; digit = [v/u]; next = (v - digit*u) / u.
            let q = self.qnorm(u);
            let w = self.mul(v, self.conj(u));
            let digit = self.round_nearest(w, q)?;
            digits.push(digit);
            let t = self.mul(digit, u);
            v = self.sub(v, t);
            std::mem::swap(&mut u, &mut v);
            // now z' = u'/v' with u' = old v - digit*old u, v' = old u
        }
        None
    }

    /// qnorm of gcd(x, y); 1 means coprime. Nearest-integer Euclid.
    #[cfg(test)]
    pub fn gcd_qnorm(&self, x: P, y: P) -> Option<i64> {
        let mut a = x;
        let mut b = y;
        for _ in 0..192 {
            if b == (0, 0) {
                return Some(self.qnorm(a));
            }
            let q = self.qnorm(b);
            let w = self.mul(a, self.conj(b));
            let digit = self.round_nearest(w, q)?;
            let r = self.sub(a, self.mul(digit, b));
            a = b;
            b = r;
        }
        None
    }

    /// Canonical associate, mirroring `QuadInt::canonical_associate`.
    pub fn canonical_associate(&self, x: P) -> P {
        if x == (0, 0) {
            return x;
        }
        self.units
            .iter()
            .map(|&u| self.mul(x, u))
            .filter(|&(a, b)| if a != 0 { a > 0 } else { b > 0 })
            .max()
            .expect("associate class has a leading-positive member")
    }
}

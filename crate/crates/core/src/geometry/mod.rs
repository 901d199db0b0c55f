//! Exact generalized-circle geometry: the curve family W generated from the
//! cell boundary by inversion and translation, its stabilization, the induced
//! cell decomposition of I_d, and statistical verification that the digit
//! regions TO_alpha are compatible with that decomposition.
//!
//! A generalized circle is stored as an exact Hermitian triple (A, B, C)
//! over K_d: the locus A|z|^2 + 2 Re(conj(B) z) + C = 0 with A, C rational
//! and B = bu + bv*sqrt(-d). Lines are the A = 0 case. Inversion z -> 1/z
//! and translation z -> z - b act on triples by exact rational formulas, so
//! de-duplication (the termination test of the recursion) is exact.

mod cells;

pub use cells::{
    build_cells, build_cells_with_n0, digit_candidates, verify_markov, Cell, CellComplex,
    MarkovViolation, ViolationReport,
};
pub(crate) use cells::domain_extents;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ring::{FieldConfig, QuadInt, QuadRat};
use crate::{Error, Result};

/// Exact generalized circle/line over K_d, kept in canonical form:
/// coefficients are coprime integers and the first nonzero entry of
/// (a, bu, bv, c) is positive.
///
/// Locus: a*|z|^2 + 2*(bu*u + d*bv*v) + c = 0 for z = u + v*sqrt(-d),
/// i.e. B = bu + bv*sqrt(-d) and the middle term is 2 Re(conj(B) z).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenCircle {
    pub d: u8,
    pub a: BigInt,
    pub bu: BigInt,
    pub bv: BigInt,
    pub c: BigInt,
}

impl GenCircle {
    /// Builds from rational coefficients, clearing denominators and
    /// normalizing. Errors if all coefficients vanish or the locus is
    /// empty/degenerate (discriminant |B|^2 - AC <= 0 for a != 0).
    pub fn from_rationals(
        d: u8,
        a: &BigRational,
        bu: &BigRational,
        bv: &BigRational,
        c: &BigRational,
    ) -> Result<Self> {
        let lcm = [a, bu, bv, c]
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let scale = BigRational::from_integer(lcm);
        let mut g = GenCircle {
            d,
            a: (a * &scale).to_integer(),
            bu: (bu * &scale).to_integer(),
            bv: (bv * &scale).to_integer(),
            c: (c * &scale).to_integer(),
        };
        g.normalize()?;
        Ok(g)
    }

    fn normalize(&mut self) -> Result<()> {
        let gcd = self
            .a
            .gcd(&self.bu)
            .gcd(&self.bv)
            .gcd(&self.c);
        if gcd.is_zero() {
            return Err(Error::InvalidArgument(
                "generalized circle with all-zero coefficients".into(),
            ));
        }
        self.a /= &gcd;
        self.bu /= &gcd;
        self.bv /= &gcd;
        self.c /= &gcd;
        let lead_negative = [&self.a, &self.bu, &self.bv, &self.c]
            .iter()
            .find(|x| !x.is_zero())
            .map(|x| x.is_negative())
            .unwrap_or(false);
        if lead_negative {
            self.a = -&self.a;
            self.bu = -&self.bu;
            self.bv = -&self.bv;
            self.c = -&self.c;
        }
        // Non-degeneracy: |B|^2 - a*c > 0 guarantees a nonempty, non-point
        // locus both for circles (positive squared radius) and lines.
        if self.disc().is_negative() || self.disc().is_zero() {
            return Err(Error::InvalidArgument(format!(
                "degenerate circle ({}, {}, {}, {})",
                self.a, self.bu, self.bv, self.c
            )));
        }
        Ok(())
    }

    /// |B|^2 - AC = bu^2 + d*bv^2 - a*c (squared-radius numerator).
    fn disc(&self) -> BigInt {
        &self.bu * &self.bu + BigInt::from(self.d) * &self.bv * &self.bv - &self.a * &self.c
    }

    pub fn is_line(&self) -> bool {
        self.a.is_zero()
    }

    /// Exact evaluation of the Hermitian form at z (sqrt-basis coords).
    pub fn eval_uv(&self, u: &BigRational, v: &BigRational) -> BigRational {
        let d = BigRational::from_integer(self.d.into());
        let a = BigRational::from_integer(self.a.clone());
        let bu = BigRational::from_integer(self.bu.clone());
        let bv = BigRational::from_integer(self.bv.clone());
        let c = BigRational::from_integer(self.c.clone());
        let two = BigRational::from_integer(2.into());
        a * (u * u + &d * v * v) + two * (bu * u + d * bv * v) + c
    }

    pub fn eval_point(&self, z: &QuadRat) -> BigRational {
        let (u, v) = z.coords_uv();
        self.eval_uv(&u, &v)
    }

    /// Floating evaluation at real coordinates (x, y), y = v*sqrt(d).
    pub fn eval_f64(&self, x: f64, y: f64) -> f64 {
        let d = self.d as f64;
        let sd = d.sqrt();
        let (u, v) = (x, y / sd);
        let a = bigint_f64(&self.a);
        let bu = bigint_f64(&self.bu);
        let bv = bigint_f64(&self.bv);
        let c = bigint_f64(&self.c);
        a * (u * u + d * v * v) + 2.0 * (bu * u + d * bv * v) + c
    }

    /// Does the exact point lie on the locus?
    pub fn contains_point(&self, z: &QuadRat) -> bool {
        self.eval_point(z).is_zero()
    }

    /// Image under z -> 1/z: (A, B, C) -> (C, conj(B), A).
    pub fn invert(&self) -> Result<Self> {
        let mut g = GenCircle {
            d: self.d,
            a: self.c.clone(),
            bu: self.bu.clone(),
            bv: -&self.bv,
            c: self.a.clone(),
        };
        g.normalize()?;
        Ok(g)
    }

    /// Image of the locus shifted by -b: {p - b : p on self}. Substituting
    /// z = w + b gives A' = A, B' = B + A*b, C' = C + A|b|^2 + 2Re(conj(B) b).
    pub fn translate(&self, b: &QuadInt) -> Result<Self> {
        let (tu, tv) = b.coords_uv();
        let d = BigRational::from_integer(BigInt::from(self.d));
        let a = BigRational::from_integer(self.a.clone());
        let bu = BigRational::from_integer(self.bu.clone());
        let bv = BigRational::from_integer(self.bv.clone());
        let c = BigRational::from_integer(self.c.clone());
        let two = BigRational::from_integer(2.into());
        let nbu = &bu + &a * &tu;
        let nbv = &bv + &a * &tv;
        let nc = &c + &a * (&tu * &tu + &d * &tv * &tv) + two * (&bu * &tu + &d * &bv * &tv);
        GenCircle::from_rationals(self.d, &a, &nbu, &nbv, &nc)
    }

    /// Real-plane parametrization data: Line { foot, unit direction } or
    /// Circle { center, radius }, in real (x, y) coordinates.
    pub fn shape_f64(&self) -> ShapeF64 {
        let d = self.d as f64;
        let sd = d.sqrt();
        let a = bigint_f64(&self.a);
        let bu = bigint_f64(&self.bu);
        let bv = bigint_f64(&self.bv);
        let c = bigint_f64(&self.c);
        if self.a.is_zero() {
            // 2(bu*u + d*bv*v) + c = 0 in (x, y): 2*bu*x + 2*sqrt(d)*bv*y + c = 0
            let (nx, ny) = (2.0 * bu, 2.0 * sd * bv);
            let n2 = nx * nx + ny * ny;
            let foot = (-c * nx / n2, -c * ny / n2);
            let len = n2.sqrt();
            ShapeF64::Line {
                foot,
                dir: (-ny / len, nx / len),
            }
        } else {
            // center: u0 = -bu/a, v0 = -bv/a; radius^2 = (bu^2 + d bv^2 - ac)/a^2
            let u0 = -bu / a;
            let v0 = -bv / a;
            let r2 = (bu * bu + d * bv * bv - a * c) / (a * a);
            ShapeF64::Circle {
                center: (u0, sd * v0),
                radius: r2.max(0.0).sqrt(),
            }
        }
    }

    /// For a true circle (a != 0): sign(a) * eval >= 0 iff the point is
    /// outside or on the circle (eval has the sign of `a` at infinity).
    pub fn outside_or_on_f64(&self, x: f64, y: f64, tol: f64) -> bool {
        debug_assert!(!self.a.is_zero());
        let s = if self.a.is_negative() { -1.0 } else { 1.0 };
        s * self.eval_f64(x, y) >= -tol
    }

    /// Exact version of `outside_or_on_f64` (closed exterior).
    pub fn outside_or_on_uv(&self, u: &BigRational, v: &BigRational) -> bool {
        debug_assert!(!self.a.is_zero());
        let e = self.eval_uv(u, v);
        if self.a.is_negative() {
            !e.is_positive()
        } else {
            !e.is_negative()
        }
    }

    /// Exact strict interior of a true circle.
    pub fn strictly_inside_uv(&self, u: &BigRational, v: &BigRational) -> bool {
        debug_assert!(!self.a.is_zero());
        let e = self.eval_uv(u, v);
        if self.a.is_negative() {
            e.is_positive()
        } else {
            e.is_negative()
        }
    }
}

/// Floating description of a curve for sampling and rendering.
#[derive(Debug, Clone, Copy)]
pub enum ShapeF64 {
    Line { foot: (f64, f64), dir: (f64, f64) },
    Circle { center: (f64, f64), radius: f64 },
}

fn bigint_f64(x: &BigInt) -> f64 {
    // Curve coefficients stay tiny (well under 2^50); a string round-trip
    // is unnecessary.
    i64::try_from(x).map(|v| v as f64).unwrap_or_else(|_| {
        x.to_string().parse::<f64>().unwrap_or(f64::NAN)
    })
}

/// The lines extending the sides of the fundamental cell I_d.
pub fn boundary_curves(cfg: &FieldConfig) -> Vec<GenCircle> {
    cfg.boundary_lines
        .iter()
        .map(|l| {
            // p*u + q*v = c  <=>  2*(bu*u + d*bv*v) + c' = 0 with
            // bu = p/2, bv = q/(2d), c' = -c.
            let d = BigInt::from(cfg.d);
            let bu = BigRational::new(l.p.into(), 2.into());
            let bv = BigRational::new(l.q.into(), BigInt::from(2) * &d);
            let c = BigRational::from_integer(BigInt::from(-l.c));
            GenCircle::from_rationals(cfg.d, &BigRational::zero(), &bu, &bv, &c)
                .expect("boundary lines are non-degenerate")
        })
        .collect()
}

/// Inversion disks: images of the boundary lines under z -> 1/z; every one
/// is a true circle through the origin. A point w lies in the closed set
/// I^{-1} = 1/I iff it is outside-or-on every disk.
pub fn inversion_disks(cfg: &FieldConfig) -> Vec<GenCircle> {
    boundary_curves(cfg)
        .iter()
        .map(|g| g.invert().expect("inverted boundary line"))
        .collect()
}

/// Exact test: w in 1/I (closed), i.e. 1/w in I for w != 0, plus the
/// "point at infinity" convention (far points are in 1/I since 0 in I).
pub fn in_inverted_domain_uv(disks: &[GenCircle], u: &BigRational, v: &BigRational) -> bool {
    disks.iter().all(|g| g.outside_or_on_uv(u, v))
}

// ---------------------------------------------------------------------------
// The W recursion
// ---------------------------------------------------------------------------

/// Number of sample points per curve in the nonempty-intersection test.
const W_SAMPLES: usize = 1000;
/// Certified inclusion margin for those samples: candidates passing within
/// +-margin are included conservatively (a superset of curves is harmless;
/// it only refines the induced cells).
const W_MARGIN: f64 = 1e-8;
/// Parameter half-range for sampling lines (covers every translate class
/// whose strip can touch I; distinct b beyond this range repeat curves).
const LINE_RANGE: f64 = 3.0;

/// One pointwise recursion step applied to `frontier`: for each curve g,
/// invert it, and for every lattice b such that the inverted curve passes
/// through (I + b) while inside the inverted domain, emit the translate by b.
fn w_step(cfg: &FieldConfig, frontier: &[GenCircle]) -> Result<BTreeSet<GenCircle>> {
    let mut out = BTreeSet::new();
    for g in frontier {
        let w = g.invert()?;
        let shape = w.shape_f64();
        let mut bs: BTreeSet<(i64, i64)> = BTreeSet::new();
        for k in 0..W_SAMPLES {
            let (x, y) = match shape {
                ShapeF64::Line { foot, dir } => {
                    let t = LINE_RANGE * (2.0 * (k as f64 + 0.5) / W_SAMPLES as f64 - 1.0);
                    (foot.0 + t * dir.0, foot.1 + t * dir.1)
                }
                ShapeF64::Circle { center, radius } => {
                    let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / W_SAMPLES as f64;
                    (center.0 + radius * th.cos(), center.1 + radius * th.sin())
                }
            };
            // p must lie in I^{-1}: 1/p in I (within margin).
            let r2 = x * x + y * y;
            if r2 < 1e-12 {
                continue;
            }
            let (ix, iy) = (x / r2, -y / r2);
            if !cfg.closed_domain_contains_f64(ix, iy, W_MARGIN) {
                continue;
            }
            // lattice b with p - b in I (within margin): scan the 3x3
            // neighborhood of the coordinate rounding of p.
            let sd = (cfg.d as f64).sqrt();
            let (u, v) = (x, y / sd);
            let (a0, b0) = if cfg.d % 4 != 3 {
                (u.round() as i64, v.round() as i64)
            } else {
                let bb = (2.0 * v).round() as i64;
                ((u - bb as f64 / 2.0).round() as i64, bb)
            };
            for da in -1..=1i64 {
                for db in -1..=1i64 {
                    let cand = (a0 + da, b0 + db);
                    let q = QuadInt::from_i64(cfg.d, cand.0, cand.1);
                    let (tx, ty) = q.to_complex_f64();
                    if cfg.closed_domain_contains_f64(x - tx, y - ty, W_MARGIN) {
                        bs.insert(cand);
                    }
                }
            }
        }
        for (ba, bb) in bs {
            let b = QuadInt::from_i64(cfg.d, ba, bb);
            out.insert(w.translate(&b)?);
        }
    }
    Ok(out)
}

/// Generates the stabilized curve family: W_0 = boundary lines; each stage
/// inverts the newest curves and collects all translates that pass through
/// the domain, until the canonical curve set stops growing. Returns the
/// family and the number of productive stages n0.
#[allow(non_snake_case)]
pub fn generate_W(cfg: &FieldConfig, max_iter: usize) -> Result<(Vec<GenCircle>, usize)> {
    let mut all: BTreeSet<GenCircle> = boundary_curves(cfg).into_iter().collect();
    let mut frontier: Vec<GenCircle> = all.iter().cloned().collect();
    let mut n0 = 0;
    for step in 1..=max_iter {
        let produced = w_step(cfg, &frontier)?;
        let fresh: Vec<GenCircle> = produced.into_iter().filter(|g| !all.contains(g)).collect();
        if fresh.is_empty() {
            return Ok((all.into_iter().collect(), n0));
        }
        n0 = step;
        for g in &fresh {
            all.insert(g.clone());
        }
        frontier = fresh;
    }
    Err(Error::NoStabilization {
        iterations: max_iter,
        curve_count: all.len(),
    })
}

/// Re-applies one full recursion step to the whole family and reports
/// whether anything new would be added (false once stabilized).
pub fn w_step_adds_nothing(cfg: &FieldConfig, family: &[GenCircle]) -> Result<bool> {
    let set: BTreeSet<GenCircle> = family.iter().cloned().collect();
    let produced = w_step(cfg, family)?;
    Ok(produced.into_iter().all(|g| set.contains(&g)))
}

/// Local dimension r(z): 2 minus the (capped) number of family curves
/// passing through z, decided exactly.
pub fn local_dimension(z: &QuadRat, curves: &[GenCircle]) -> u8 {
    let (u, v) = z.coords_uv();
    let mut hits = 0u8;
    for g in curves {
        if g.eval_uv(&u, &v).is_zero() {
            hits += 1;
            if hits >= 2 {
                return 0;
            }
        }
    }
    2 - hits
}

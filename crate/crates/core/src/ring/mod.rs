//! Rings of integers of the five Euclidean imaginary quadratic fields and
//! exact arithmetic on their field rationals.
//!
//! Everything here is exact: points of K_d are represented by coordinate
//! pairs over the basis {1, sqrt(-d)}, in which the fundamental cell — a
//! rectangle for d = 1, 2 and a hexagon for d = 3, 7, 11 — is cut out by
//! finitely many *rational* linear inequalities. No floating point enters
//! any membership or rounding decision.

pub(crate) mod fast;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// The five discriminant parameters with Euclidean rings of integers.
pub const FIELD_DS: [u8; 5] = [1, 2, 3, 7, 11];

/// Basis element convention for O_d = Z[omega].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum OmegaKind {
    /// omega = sqrt(-d), used when d is not congruent to 3 mod 4 (d = 1, 2).
    SqrtMinusD,
    /// omega = (1 + sqrt(-d)) / 2, used when d = 3 mod 4 (d = 3, 7, 11).
    HalfOnePlusSqrtMinusD,
}

/// One closed half-plane `p*u + q*v <= c` in sqrt-basis coordinates
/// (z = u + v*sqrt(-d)). The boundary line `p*u + q*v = c` is a side of I_d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineIneq {
    pub p: i64,
    pub q: i64,
    pub c: i64,
}

impl LineIneq {
    /// Exact signed slack `c - (p*u + q*v)`; nonnegative iff the point
    /// satisfies the inequality.
    fn slack(&self, u: &BigRational, v: &BigRational) -> BigRational {
        BigRational::from_integer(self.c.into())
            - u * BigRational::from_integer(self.p.into())
            - v * BigRational::from_integer(self.q.into())
    }
}

/// Per-field data: ring basis, fundamental-domain geometry, units.
#[derive(Debug, Clone)]
pub struct FieldConfig {
    pub d: u8,
    pub omega_kind: OmegaKind,
    /// Squared radius of an origin-centered ball containing I_d, with
    /// R_sq < 1. For the hexagonal fields this is the bound (4 + d)/16
    /// (15/16 at d = 11); the enclosing property is what every downstream
    /// estimate uses, and it is verified exactly in tests.
    pub r_sq: BigRational,
    /// The 4 (rectangle) or 6 (hexagon) closed half-planes cutting out I_d.
    pub boundary_lines: Vec<LineIneq>,
    /// Translates alpha such that I'_d = I_d minus the union of I_d + alpha.
    pub excluded_translates: Vec<QuadInt>,
    /// Unit group of O_d: 4 elements for d = 1, 6 for d = 3, 2 otherwise.
    pub units: Vec<QuadInt>,
}

static CONFIGS: OnceLock<Vec<FieldConfig>> = OnceLock::new();

impl FieldConfig {
    /// Configuration for one of d = 1, 2, 3, 7, 11.
    pub fn new(d: u8) -> Result<&'static FieldConfig> {
        if !FIELD_DS.contains(&d) {
            return Err(Error::InvalidField(d));
        }
        let all = CONFIGS.get_or_init(|| FIELD_DS.iter().map(|&d| Self::build(d)).collect());
        Ok(&all[FIELD_DS.iter().position(|&x| x == d).unwrap()])
    }

    fn build(d: u8) -> FieldConfig {
        let di = d as i64;
        let (omega_kind, r_sq, boundary_lines) = if d % 4 != 3 {
            // Rectangle |u| <= 1/2, |v| <= 1/2: corners at 1/4 + d/4.
            let lines = vec![
                LineIneq { p: 2, q: 0, c: 1 },
                LineIneq { p: -2, q: 0, c: 1 },
                LineIneq { p: 0, q: 2, c: 1 },
                LineIneq { p: 0, q: -2, c: 1 },
            ];
            (
                OmegaKind::SqrtMinusD,
                BigRational::new((1 + di).into(), 4.into()),
                lines,
            )
        } else {
            // Hexagon |u| <= 1/2, |u + d*v| <= (d+1)/4, |-u + d*v| <= (d+1)/4.
            let lines = vec![
                LineIneq { p: 2, q: 0, c: 1 },
                LineIneq { p: -2, q: 0, c: 1 },
                LineIneq { p: 4, q: 4 * di, c: di + 1 },
                LineIneq { p: -4, q: -4 * di, c: di + 1 },
                LineIneq { p: -4, q: 4 * di, c: di + 1 },
                LineIneq { p: 4, q: -4 * di, c: di + 1 },
            ];
            (
                OmegaKind::HalfOnePlusSqrtMinusD,
                BigRational::new((4 + di).into(), 16.into()),
                lines,
            )
        };
        let mk = |a: i64, b: i64| QuadInt::new(d, a.into(), b.into());
        let excluded_translates = if d % 4 != 3 {
            vec![mk(1, 0), mk(0, 1)] // 1 and sqrt(-d)
        } else {
            vec![mk(1, 0), mk(0, 1), mk(1, -1)] // 1, omega, conj(omega)
        };
        let units = match d {
            1 => vec![mk(1, 0), mk(-1, 0), mk(0, 1), mk(0, -1)],
            3 => vec![
                mk(1, 0),
                mk(-1, 0),
                mk(0, 1),
                mk(0, -1),
                mk(-1, 1),
                mk(1, -1),
            ],
            _ => vec![mk(1, 0), mk(-1, 0)],
        };
        FieldConfig {
            d,
            omega_kind,
            r_sq,
            boundary_lines,
            excluded_translates,
            units,
        }
    }

    /// R_sq as f64, for numeric workloads.
    pub fn r_sq_f64(&self) -> f64 {
        ratio_to_f64(&self.r_sq)
    }

    /// Covolume of the lattice O_d in C: sqrt(d) for d = 1, 2 and
    /// sqrt(d)/2 for d = 3, 7, 11.
    pub fn covolume(&self) -> f64 {
        let s = (self.d as f64).sqrt();
        if self.d % 4 == 3 {
            s / 2.0
        } else {
            s
        }
    }

    /// Half-height of the bounding box of I_d in true (x, y) coordinates:
    /// I_d is contained in [-1/2, 1/2] x [-y_max, y_max].
    pub fn y_max(&self) -> f64 {
        let s = (self.d as f64).sqrt();
        if self.d % 4 == 3 {
            (self.d as f64 + 1.0) / (4.0 * s)
        } else {
            s / 2.0
        }
    }

    /// Exact membership z in I_d (closed cell).
    pub fn closed_domain_contains_uv(&self, u: &BigRational, v: &BigRational) -> bool {
        self.boundary_lines
            .iter()
            .all(|l| !l.slack(u, v).is_negative())
    }

    /// Float membership z in I_d with additive tolerance `tol` on each
    /// inequality slack (tol > 0 enlarges the domain).
    pub fn closed_domain_contains_f64(&self, x: f64, y: f64, tol: f64) -> bool {
        let v = y / (self.d as f64).sqrt();
        self.boundary_lines
            .iter()
            .all(|l| l.c as f64 - l.p as f64 * x - l.q as f64 * v >= -tol)
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    // Good enough for the magnitudes used here (small numerators).
    let n = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let d = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    n / d
}

// ---------------------------------------------------------------------------
// QuadInt
// ---------------------------------------------------------------------------

/// An element a + b*omega_d of the ring of integers O_d.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadInt {
    pub d: u8,
    pub a: BigInt,
    pub b: BigInt,
}

impl QuadInt {
    pub fn new(d: u8, a: BigInt, b: BigInt) -> Self {
        QuadInt { d, a, b }
    }

    pub fn from_i64(d: u8, a: i64, b: i64) -> Self {
        QuadInt::new(d, a.into(), b.into())
    }

    pub fn zero(d: u8) -> Self {
        QuadInt::from_i64(d, 0, 0)
    }

    pub fn one(d: u8) -> Self {
        QuadInt::from_i64(d, 1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn assert_same_field(&self, other: &Self) {
        assert_eq!(self.d, other.d, "mixed-field arithmetic");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        QuadInt::new(self.d, &self.a + &other.a, &self.b + &other.b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        QuadInt::new(self.d, &self.a - &other.a, &self.b - &other.b)
    }

    pub fn neg(&self) -> Self {
        QuadInt::new(self.d, -&self.a, -&self.b)
    }

    /// omega^2 = -d when omega = sqrt(-d); omega^2 = omega - (1+d)/4 when
    /// omega = (1 + sqrt(-d))/2.
    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let (a, b, c, e) = (&self.a, &self.b, &other.a, &other.b);
        if self.d % 4 != 3 {
            let d = BigInt::from(self.d);
            QuadInt::new(self.d, a * c - &d * b * e, a * e + b * c)
        } else {
            let m = BigInt::from((self.d as i64 + 1) / 4);
            QuadInt::new(self.d, a * c - &m * b * e, a * e + b * c + b * e)
        }
    }

    /// Complex conjugate, again in O_d.
    pub fn conj(&self) -> Self {
        if self.d % 4 != 3 {
            QuadInt::new(self.d, self.a.clone(), -&self.b)
        } else {
            // conj(omega) = 1 - omega.
            QuadInt::new(self.d, &self.a + &self.b, -&self.b)
        }
    }

    /// |alpha|^2, an exact nonnegative rational integer; the norm form is
    /// a^2 + d b^2, or a^2 + ab + b^2 (1+d)/4 in the half-integer basis.
    pub fn qnorm(&self) -> BigInt {
        let (a, b) = (&self.a, &self.b);
        if self.d % 4 != 3 {
            a * a + BigInt::from(self.d) * b * b
        } else {
            let m = BigInt::from((self.d as i64 + 1) / 4);
            a * a + a * b + m * b * b
        }
    }

    /// Coordinates (u, v) with value u + v*sqrt(-d).
    pub fn coords_uv(&self) -> (BigRational, BigRational) {
        let a = BigRational::from_integer(self.a.clone());
        let b = BigRational::from_integer(self.b.clone());
        if self.d % 4 != 3 {
            (a, b)
        } else {
            let half = BigRational::new(BigInt::one(), 2.into());
            (a + &b * &half, b * half)
        }
    }

    /// Approximate complex embedding (x + i y).
    pub fn to_complex_f64(&self) -> (f64, f64) {
        let (u, v) = self.coords_uv();
        let sd = (self.d as f64).sqrt();
        (ratio_to_f64(&u), ratio_to_f64(&v) * sd)
    }

    /// The canonical representative of the associate class {unit * self}:
    /// the coordinate pair that is lexicographically greatest among those
    /// whose leading nonzero coordinate is positive. Maps every unit to 1.
    pub fn canonical_associate(&self, cfg: &FieldConfig) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        cfg.units
            .iter()
            .map(|u| self.mul(u))
            .filter(|x| {
                if !x.a.is_zero() {
                    x.a.is_positive()
                } else {
                    x.b.is_positive()
                }
            })
            .max_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
            .expect("every associate class has a leading-positive member")
    }

    pub fn is_unit(&self) -> bool {
        self.qnorm().is_one()
    }
}

impl fmt::Display for QuadInt {
    /// Renders in the omega basis, e.g. "2+1w", "-3w", "5".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            return write!(f, "{}w", self.b);
        }
        if self.b.is_positive() {
            write!(f, "{}+{}w", self.a, self.b)
        } else {
            write!(f, "{}{}w", self.a, self.b)
        }
    }
}

// ---------------------------------------------------------------------------
// QuadRat
// ---------------------------------------------------------------------------

/// A field rational num/den in K_d, kept in canonical reduced form:
/// gcd(num, den) is a unit and den is the canonical associate of its class.
#[derive(Debug, Clone)]
pub struct QuadRat {
    pub num: QuadInt,
    pub den: QuadInt,
    /// True once the representation is the canonical reduced one.
    pub canonical: bool,
}

impl QuadRat {
    /// Builds num/den and canonicalizes. Errors on zero denominator.
    pub fn new(num: QuadInt, den: QuadInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero { d: num.d });
        }
        let mut z = QuadRat {
            num,
            den,
            canonical: false,
        };
        z.canonicalize()?;
        Ok(z)
    }

    /// Uncanonicalized view of num/den. Only for internal consumers that
    /// read exact coordinates and never rely on reducedness; using it in
    /// `divmod_nearest` also breaks the would-be recursion
    /// canonicalize -> gcd -> divmod -> canonicalize.
    pub(crate) fn raw(num: QuadInt, den: QuadInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero { d: num.d });
        }
        Ok(QuadRat {
            num,
            den,
            canonical: false,
        })
    }

    pub fn zero(d: u8) -> Self {
        QuadRat {
            num: QuadInt::zero(d),
            den: QuadInt::one(d),
            canonical: true,
        }
    }

    pub fn from_int(n: QuadInt) -> Self {
        QuadRat {
            den: QuadInt::one(n.d),
            num: n,
            canonical: true,
        }
    }

    pub fn d(&self) -> u8 {
        self.num.d
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Divides out the gcd and normalizes the denominator to its canonical
    /// associate (multiplying numerator and denominator by the same unit).
    pub fn canonicalize(&mut self) -> Result<()> {
        if self.canonical {
            return Ok(());
        }
        let cfg = FieldConfig::new(self.d())?;
        if self.num.is_zero() {
            *self = QuadRat::zero(self.d());
            return Ok(());
        }
        let g = quad_gcd(&self.num, &self.den)?;
        let (num, _r1) = exact_div(&self.num, &g);
        let (den, _r2) = exact_div(&self.den, &g);
        // Find the unit u with u*den canonical; scale num by the same u.
        let target = den.canonical_associate(cfg);
        let unit = cfg
            .units
            .iter()
            .find(|u| den.mul(u) == target)
            .expect("canonical associate is an associate");
        self.num = num.mul(unit);
        self.den = target;
        self.canonical = true;
        Ok(())
    }

    /// Exact sqrt-basis coordinates (u, v) with value u + v*sqrt(-d):
    /// z = num * conj(den) / qnorm(den).
    pub fn coords_uv(&self) -> (BigRational, BigRational) {
        let w = self.num.mul(&self.den.conj());
        let q = BigRational::from_integer(self.den.qnorm());
        let (u, v) = w.coords_uv();
        (u / &q, v / q)
    }

    /// Builds the exact point u + v*sqrt(-d) in K_d.
    pub fn from_uv(d: u8, u: &BigRational, v: &BigRational) -> Result<Self> {
        // Clear denominators: (U + V sqrt(-d)) / D with U, V, D integers.
        let dd: BigInt = u.denom().lcm(v.denom());
        let uu = (u * BigRational::from_integer(dd.clone())).to_integer();
        let vv = (v * BigRational::from_integer(dd.clone())).to_integer();
        let num = if d % 4 != 3 {
            QuadInt::new(d, uu, vv)
        } else {
            // sqrt(-d) = 2*omega - 1.
            QuadInt::new(d, uu - &vv, BigInt::from(2) * vv)
        };
        QuadRat::new(num, QuadInt::new(d, dd, BigInt::zero()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        QuadRat::new(
            self.num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        QuadRat::new(
            self.num
                .mul(&other.den)
                .sub(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub_int(&self, n: &QuadInt) -> Result<Self> {
        QuadRat::new(self.num.sub(&n.mul(&self.den)), self.den.clone())
    }

    /// 1/z; errors on z = 0.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero { d: self.d() });
        }
        QuadRat::new(self.den.clone(), self.num.clone())
    }

    /// Squared modulus |z|^2 = (u^2 + d v^2), exact.
    pub fn abs_sq(&self) -> BigRational {
        let (u, v) = self.coords_uv();
        &u * &u + BigRational::from_integer(self.d().into()) * &v * &v
    }

    /// Squared height: max(qnorm(num), qnorm(den)) of the reduced form,
    /// with ht(0) = 0 by convention.
    pub fn ht_sq(&self) -> BigInt {
        debug_assert!(self.canonical);
        if self.is_zero() {
            return BigInt::from(0);
        }
        self.num.qnorm().max(self.den.qnorm())
    }

    pub fn to_complex_f64(&self) -> (f64, f64) {
        let (u, v) = self.coords_uv();
        let sd = (self.d() as f64).sqrt();
        (ratio_to_f64(&u), ratio_to_f64(&v) * sd)
    }

    /// Value equality (canonical forms are unique).
    pub fn eq_value(&self, other: &Self) -> bool {
        debug_assert!(self.canonical && other.canonical);
        self.num == other.num && self.den == other.den
    }
}

impl PartialEq for QuadRat {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}
impl Eq for QuadRat {}

impl fmt::Display for QuadRat {
    /// Exact omega-basis coordinate form "A+Bw" with rational A, B — the
    /// same literal syntax `parse_quadrat` accepts, so values round-trip.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (u, v) = self.coords_uv();
        // Convert sqrt-basis (u, v) back to omega coordinates A + B*omega.
        let (a, b) = if self.d() % 4 != 3 {
            (u, v)
        } else {
            let two = BigRational::from_integer(2.into());
            (&u - &v, v * two)
        };
        let show = |x: &BigRational| {
            if x.denom().is_one() {
                format!("{}", x.numer())
            } else {
                format!("{}/{}", x.numer(), x.denom())
            }
        };
        if b.is_zero() {
            return write!(f, "{}", show(&a));
        }
        let wpart = if b.is_one() {
            "w".to_string()
        } else if (-&b).is_one() {
            "-w".to_string()
        } else {
            format!("{}w", show(&b))
        };
        if a.is_zero() {
            write!(f, "{wpart}")
        } else if wpart.starts_with('-') {
            write!(f, "{}{}", show(&a), wpart)
        } else {
            write!(f, "{}+{}", show(&a), wpart)
        }
    }
}

// ---------------------------------------------------------------------------
// Strict fundamental domain and rounding
// ---------------------------------------------------------------------------

/// Exact test z in I'_d: z satisfies the closed inequalities of I_d and for
/// every excluded translate alpha, z - alpha violates at least one of them.
pub fn strict_domain_contains(z: &QuadRat, cfg: &FieldConfig) -> bool {
    let (u, v) = z.coords_uv();
    strict_domain_contains_uv(&u, &v, cfg)
}

pub(crate) fn strict_domain_contains_uv(
    u: &BigRational,
    v: &BigRational,
    cfg: &FieldConfig,
) -> bool {
    if !cfg.closed_domain_contains_uv(u, v) {
        return false;
    }
    for t in &cfg.excluded_translates {
        let (tu, tv) = t.coords_uv();
        if cfg.closed_domain_contains_uv(&(u - tu), &(v - tv)) {
            return false;
        }
    }
    true
}

fn round_rational(x: &BigRational) -> BigInt {
    // floor(x + 1/2); the ties that this breaks are re-examined by the
    // candidate scan anyway.
    (x + BigRational::new(BigInt::one(), 2.into())).floor().to_integer()
}

/// The unique beta in O_d with z - beta in I'_d, found by exact search over
/// the 3x3 lattice-coordinate neighborhood of the real-coordinate rounding.
pub fn round_nearest(z: &QuadRat, cfg: &FieldConfig) -> Result<QuadInt> {
    let (u, v) = z.coords_uv();
    let mut hits: Vec<QuadInt> = Vec::new();
    if cfg.d % 4 != 3 {
        let a0 = round_rational(&u);
        let b0 = round_rational(&v);
        for da in -1i64..=1 {
            for db in -1i64..=1 {
                let cand = QuadInt::new(cfg.d, &a0 + BigInt::from(da), &b0 + BigInt::from(db));
                let (cu, cv) = cand.coords_uv();
                if strict_domain_contains_uv(&(&u - cu), &(&v - cv), cfg) {
                    hits.push(cand);
                }
            }
        }
    } else {
        let b0 = round_rational(&(&v * BigRational::from_integer(2.into())));
        for db in -1i64..=1 {
            let b = &b0 + BigInt::from(db);
            let half_b = BigRational::new(b.clone(), 2.into());
            let a0 = round_rational(&(&u - half_b));
            for da in -1i64..=1 {
                let cand = QuadInt::new(cfg.d, &a0 + BigInt::from(da), b.clone());
                let (cu, cv) = cand.coords_uv();
                if strict_domain_contains_uv(&(&u - cu), &(&v - cv), cfg) {
                    hits.push(cand);
                }
            }
        }
    }
    if hits.len() == 1 {
        Ok(hits.pop().unwrap())
    } else {
        Err(Error::UniquenessViolation {
            d: cfg.d,
            z: z.to_string(),
            candidates: hits.len(),
        })
    }
}

/// Exact division helper: returns (a/g, remainder); remainder is zero when g
/// divides a (always the case for gcd outputs).
fn exact_div(a: &QuadInt, g: &QuadInt) -> (QuadInt, QuadInt) {
    // a / g = a * conj(g) / qnorm(g), componentwise integer division.
    let n = a.mul(&g.conj());
    let q = g.qnorm();
    let qa = &n.a / &q;
    let qb = &n.b / &q;
    let quot = QuadInt::new(a.d, qa, qb);
    let rem = a.sub(&quot.mul(g));
    (quot, rem)
}

/// Nearest-integer division: a = q*b + r with r/b in I'_d, so
/// qnorm(r) <= R_sq * qnorm(b) < qnorm(b).
pub fn divmod_nearest(a: &QuadInt, b: &QuadInt) -> Result<(QuadInt, QuadInt)> {
    if b.is_zero() {
        return Err(Error::DivisionByZero { d: a.d });
    }
    let cfg = FieldConfig::new(a.d)?;
    let z = QuadRat::raw(a.clone(), b.clone())?;
    let q = round_nearest(&z, cfg)?;
    let r = a.sub(&q.mul(b));
    Ok((q, r))
}

/// Euclidean gcd via nearest-integer division, returned as the canonical
/// associate. Errors when both inputs are zero.
pub fn quad_gcd(a: &QuadInt, b: &QuadInt) -> Result<QuadInt> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::BothZero);
    }
    let cfg = FieldConfig::new(a.d)?;
    let mut x = a.clone();
    let mut y = b.clone();
    while !y.is_zero() {
        let (_, r) = divmod_nearest(&x, &y)?;
        x = y;
        y = r;
    }
    Ok(x.canonical_associate(cfg))
}

// ---------------------------------------------------------------------------
// Exact literal parsing ("p/q+r/s i" or "p/q+r/s w")
// ---------------------------------------------------------------------------

/// Parses an exact K_d literal. Accepted forms: a rational "p/q" (or "p"),
/// optionally followed by a second rational ending in `i` (sqrt(-1), d = 1
/// only ... more generally the sqrt(-d) coordinate) or `w` (the omega-basis
/// coordinate). Examples: "2/5-1/5i", "1/2", "-3+2w", "0".
pub fn parse_quadrat(s: &str, cfg: &FieldConfig) -> Result<QuadRat> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty literal".into()));
    }
    let bad = |msg: &str| Error::Parse(format!("{msg} in {s:?}"));

    // Split into one or two signed terms.
    let mut terms: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, ch) in compact.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('/') && !cur.is_empty() {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    if terms.len() > 2 {
        return Err(bad("too many terms"));
    }

    let parse_q = |t: &str| -> Result<BigRational> {
        let t = if t.is_empty() || t == "+" {
            "1"
        } else if t == "-" {
            "-1"
        } else {
            t
        };
        if let Some((n, d)) = t.split_once('/') {
            let n = BigInt::from_str(n).map_err(|_| bad("bad numerator"))?;
            let d = BigInt::from_str(d).map_err(|_| bad("bad denominator"))?;
            if d.is_zero() {
                return Err(bad("zero denominator"));
            }
            Ok(BigRational::new(n, d))
        } else {
            let n = BigInt::from_str(t).map_err(|_| bad("bad integer"))?;
            Ok(BigRational::from_integer(n))
        }
    };

    let mut real = BigRational::zero();
    let mut imag_sqrt = BigRational::zero(); // coefficient of sqrt(-d)
    let mut imag_omega = BigRational::zero(); // coefficient of omega
    for t in &terms {
        if let Some(body) = t.strip_suffix('i') {
            imag_sqrt = parse_q(body)?;
        } else if let Some(body) = t.strip_suffix('w') {
            imag_omega = parse_q(body)?;
        } else {
            real = parse_q(t)?;
        }
    }
    if !imag_sqrt.is_zero() && !imag_omega.is_zero() {
        return Err(bad("mixed i and w coordinates"));
    }
    if cfg.d != 1 && !imag_sqrt.is_zero() {
        // "i" denotes sqrt(-d) only for d = 1; elsewhere require explicit w.
        return Err(bad("'i' suffix is only valid for d = 1; use 'w'"));
    }
    // Convert to (u, v) over {1, sqrt(-d)}.
    let (u, v) = if !imag_omega.is_zero() {
        match cfg.omega_kind {
            OmegaKind::SqrtMinusD => (real, imag_omega),
            OmegaKind::HalfOnePlusSqrtMinusD => {
                let half = BigRational::new(BigInt::one(), 2.into());
                (real + &imag_omega * &half, imag_omega * half)
            }
        }
    } else {
        (real, imag_sqrt)
    };
    QuadRat::from_uv(cfg.d, &u, &v)
}

#[cfg(test)]
mod tests;

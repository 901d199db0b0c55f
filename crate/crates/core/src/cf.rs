//! The nearest-integer continued fraction map over O_d: exact expansion of
//! field rationals, convergent matrices, digit costs, floating orbits for
//! generic points, and the scan for digits whose branch domain is empty.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::geometry::{digit_candidates, domain_extents, inversion_disks, GenCircle};
use crate::ring::fast::FastField;
use crate::ring::{round_nearest, FieldConfig, QuadInt, QuadRat};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Cost functions
// ---------------------------------------------------------------------------

/// A digit cost c: O_d -> R_{>=0}. The built-in kinds cover the length
/// statistic (constant 1) and the logarithmic weight log|alpha|; arbitrary
/// bounded integer tables are supported for experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFunction {
    /// c(alpha) = 1: total cost is the expansion length.
    ConstantOne,
    /// c(alpha) = log|alpha| = (1/2) log qnorm(alpha).
    LogAbs,
    /// Bounded integer table keyed by digit coordinates, with a default for
    /// digits outside the table.
    CustomInteger {
        name: String,
        table: BTreeMap<(i64, i64), u32>,
        default: u32,
    },
}

impl CostFunction {
    /// Stable identifier used as the key in cost ledgers and CSV headers.
    pub fn id(&self) -> String {
        match self {
            CostFunction::ConstantOne => "len".into(),
            CostFunction::LogAbs => "logabs".into(),
            CostFunction::CustomInteger { name, .. } => name.clone(),
        }
    }

    pub fn evaluate(&self, digit: &QuadInt) -> f64 {
        match self {
            CostFunction::ConstantOne => 1.0,
            CostFunction::LogAbs => {
                0.5 * big_to_f64(&digit.qnorm()).ln()
            }
            CostFunction::CustomInteger { table, default, .. } => {
                let key = (
                    i64::try_from(&digit.a).unwrap_or(i64::MAX),
                    i64::try_from(&digit.b).unwrap_or(i64::MAX),
                );
                f64::from(*table.get(&key).unwrap_or(default))
            }
        }
    }

    /// Exact value for integer-valued costs, None for log_abs.
    pub fn evaluate_int(&self, digit: &QuadInt) -> Option<i64> {
        match self {
            CostFunction::ConstantOne => Some(1),
            CostFunction::LogAbs => None,
            CostFunction::CustomInteger { table, default, .. } => {
                let key = (
                    i64::try_from(&digit.a).unwrap_or(i64::MAX),
                    i64::try_from(&digit.b).unwrap_or(i64::MAX),
                );
                Some(i64::from(*table.get(&key).unwrap_or(default)))
            }
        }
    }

    pub fn integer_valued(&self) -> bool {
        !matches!(self, CostFunction::LogAbs)
    }
}

pub(crate) fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::MAX)
}

// ---------------------------------------------------------------------------
// Convergent matrices
// ---------------------------------------------------------------------------

/// 2x2 matrix over O_d. The running product of digit steps
/// [[0,1],[1,alpha_j]] carries the convergent numerators and denominators
/// in its columns: M_n = [[P_{n-1}, P_n], [Q_{n-1}, Q_n]].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat2 {
    pub entries: [[QuadInt; 2]; 2],
}

impl Mat2 {
    pub fn identity(d: u8) -> Self {
        Mat2 {
            entries: [
                [QuadInt::one(d), QuadInt::zero(d)],
                [QuadInt::zero(d), QuadInt::one(d)],
            ],
        }
    }

    pub fn digit_step(alpha: &QuadInt) -> Self {
        let d = alpha.d;
        Mat2 {
            entries: [
                [QuadInt::zero(d), QuadInt::one(d)],
                [QuadInt::one(d), alpha.clone()],
            ],
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let e = |i: usize, j: usize| -> QuadInt {
            self.entries[i][0]
                .mul(&other.entries[0][j])
                .add(&self.entries[i][1].mul(&other.entries[1][j]))
        };
        Mat2 {
            entries: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn det(&self) -> QuadInt {
        self.entries[0][0]
            .mul(&self.entries[1][1])
            .sub(&self.entries[0][1].mul(&self.entries[1][0]))
    }

    /// Image of 0 under the Mobius action (az + b)/(cz + d): the exact
    /// value P_n / Q_n of the digit word.
    pub fn mobius_at_zero(&self) -> Result<QuadRat> {
        QuadRat::new(self.entries[0][1].clone(), self.entries[1][1].clone())
    }

    /// Q_{n-1} and Q_n, the convergent denominators.
    pub fn denominators(&self) -> (&QuadInt, &QuadInt) {
        (&self.entries[1][0], &self.entries[1][1])
    }
}

// ---------------------------------------------------------------------------
// Exact expansion
// ---------------------------------------------------------------------------

/// A finite expansion z = [alpha_1, ..., alpha_l] of a field rational.
#[derive(Debug, Clone)]
pub struct CFExpansion {
    pub input: QuadRat,
    pub digits: Vec<QuadInt>,
    /// Partial products M_1..M_l of the digit step matrices.
    pub convergents: Vec<Mat2>,
    /// Totals per cost-function id, filled lazily.
    pub costs: BTreeMap<String, f64>,
}

impl CFExpansion {
    pub fn length(&self) -> usize {
        self.digits.len()
    }

    /// Total cost under `c`, cached under its id.
    pub fn cost(&mut self, c: &CostFunction) -> f64 {
        let id = c.id();
        if let Some(&v) = self.costs.get(&id) {
            return v;
        }
        let v = cost_total(self, c);
        self.costs.insert(id, v);
        v
    }
}

/// One application of the map: digit = round_nearest(1/z), next = 1/z - digit.
pub fn cf_step(z: &QuadRat, cfg: &FieldConfig) -> Result<(QuadInt, QuadRat)> {
    if z.is_zero() {
        return Err(Error::ZeroInput);
    }
    let (u, v) = z.coords_uv();
    if !cfg.closed_domain_contains_uv(&u, &v) {
        return Err(Error::OutOfDomain {
            d: cfg.d,
            z: z.to_string(),
        });
    }
    let w = z.recip()?;
    let digit = round_nearest(&w, cfg)?;
    let next = w.sub_int(&digit)?;
    Ok((digit, next))
}

/// A priori bound on the expansion length of z (denominators contract by
/// |v_{j+1}| <= R |v_j| per step), with slack for the first steps.
fn length_bound(z: &QuadRat, cfg: &FieldConfig) -> usize {
    let h = big_to_f64(&z.ht_sq()).max(1.0);
    (h.ln() / -cfg.r_sq_f64().ln()).ceil() as usize + 8
}

/// Full exact expansion; terminates because remainder denominators shrink.
pub fn expand(z: &QuadRat, cfg: &FieldConfig) -> Result<CFExpansion> {
    let (u, v) = z.coords_uv();
    if !cfg.closed_domain_contains_uv(&u, &v) {
        return Err(Error::OutOfDomain {
            d: cfg.d,
            z: z.to_string(),
        });
    }
    let cap = length_bound(z, cfg);
    let mut digits = Vec::new();
    let mut convergents = Vec::new();
    let mut m = Mat2::identity(cfg.d);
    let mut cur = z.clone();
    while !cur.is_zero() {
        if digits.len() >= cap {
            return Err(Error::NoConvergence {
                iterations: cap,
                residual: big_to_f64(&cur.ht_sq()),
            });
        }
        let (digit, next) = cf_step(&cur, cfg)?;
        m = m.mul(&Mat2::digit_step(&digit));
        digits.push(digit);
        convergents.push(m.clone());
        cur = next;
    }
    Ok(CFExpansion {
        input: z.clone(),
        digits,
        convergents,
        costs: BTreeMap::new(),
    })
}

/// Sum of c over the digits (0 for the empty expansion).
pub fn cost_total(e: &CFExpansion, c: &CostFunction) -> f64 {
    e.digits.iter().map(|a| c.evaluate(a)).sum()
}

/// Checks the reversal law: the convergent denominators of [alpha_1..alpha_n]
/// satisfy Q_{n-1}/Q_n = value of the reversed word [alpha_n, ..., alpha_1].
pub fn convergents_reversed_identity(d: u8, digits: &[QuadInt]) -> Result<bool> {
    let mut m = Mat2::identity(d);
    for a in digits {
        m = m.mul(&Mat2::digit_step(a));
    }
    let (q_prev, q_cur) = m.denominators();
    let lhs = QuadRat::new(q_prev.clone(), q_cur.clone())?;
    // value of the reversed word, built inside-out: processing the original
    // order alpha_1..alpha_n computes 1/(alpha_n + 1/(... + 1/alpha_1))
    let mut t = QuadRat::zero(d);
    for a in digits {
        t = QuadRat::from_int(a.clone()).add(&t)?.recip()?;
    }
    Ok(lhs.eq_value(&t))
}

// ---------------------------------------------------------------------------
// Floating orbits
// ---------------------------------------------------------------------------

/// Result of a floating orbit: partial cost, the digits produced, and
/// whether the orbit reached (numerical) zero before n steps.
#[derive(Debug, Clone)]
pub struct FloatOrbit {
    pub cost: f64,
    pub digits: Vec<QuadInt>,
    pub hit_zero: bool,
}

/// One floating step of the map: returns the digit and the next remainder,
/// or None when z is (numerically) zero or no rounding candidate admits a
/// remainder in the closed cell. Rounding scans the 3x3 lattice neighborhood
/// of the coordinate rounding and picks the representative whose remainder
/// lies in the closed cell, nearest first.
pub(crate) fn float_step(cfg: &FieldConfig, x: f64, y: f64) -> Option<(QuadInt, f64, f64)> {
    let r2 = x * x + y * y;
    if r2 <= 1e-24 {
        return None;
    }
    let sd = (cfg.d as f64).sqrt();
    let (wx, wy) = (x / r2, -y / r2);
    let (u, v) = (wx, wy / sd);
    let (a0, b0) = if cfg.d % 4 != 3 {
        (u.round() as i64, v.round() as i64)
    } else {
        let b = (2.0 * v).round() as i64;
        ((u - b as f64 / 2.0).round() as i64, b)
    };
    let mut best: Option<(f64, i64, i64, f64, f64)> = None;
    for da in -1..=1i64 {
        for db in -1..=1i64 {
            let cand = QuadInt::from_i64(cfg.d, a0 + da, b0 + db);
            let (tx, ty) = cand.to_complex_f64();
            let (rx, ry) = (wx - tx, wy - ty);
            if !cfg.closed_domain_contains_f64(rx, ry, 1e-9) {
                continue;
            }
            let dist = rx * rx + ry * ry;
            if best.as_ref().map_or(true, |b| dist < b.0) {
                best = Some((dist, a0 + da, b0 + db, rx, ry));
            }
        }
    }
    let (_, a, b, rx, ry) = best?;
    Some((QuadInt::from_i64(cfg.d, a, b), rx, ry))
}

/// Floating-point orbit of the map from z0 for up to n steps. An orbit
/// reaching |z| <= 1e-12 stops with a flag: the input was (numerically) a
/// field rational.
pub fn orbit_cost_float(
    cfg: &FieldConfig,
    z0: (f64, f64),
    n: usize,
    c: &CostFunction,
) -> FloatOrbit {
    let (mut x, mut y) = z0;
    let mut out = FloatOrbit {
        cost: 0.0,
        digits: Vec::new(),
        hit_zero: false,
    };
    for _ in 0..n {
        let Some((digit, rx, ry)) = float_step(cfg, x, y) else {
            out.hit_zero = true;
            return out;
        };
        out.cost += c.evaluate(&digit);
        out.digits.push(digit);
        x = rx;
        y = ry;
    }
    out
}

// ---------------------------------------------------------------------------
// Empty-digit scan
// ---------------------------------------------------------------------------

/// All digits alpha with 1 <= qnorm(alpha) <= norm_bound whose branch
/// domain O_alpha = {z : round_nearest(1/z) = alpha} has no interior point.
///
/// Decision per alpha: a witness search samples exact rationals
/// z = 1/(alpha + t) over fine grids of t in the open cell (any such z in
/// the pruned domain certifies O_alpha nonempty); if no witness exists the
/// emptiness is certified exactly by covering I + alpha with the open
/// inversion disks of the boundary (w strictly inside a disk means 1/w
/// violates one face of I), via recursive subdivision.
pub fn empty_digit_scan(cfg: &FieldConfig, norm_bound: i64) -> Result<Vec<QuadInt>> {
    if norm_bound < 4 {
        return Err(Error::InvalidArgument(format!(
            "norm bound {norm_bound} < 4"
        )));
    }
    let ff = FastField::new(cfg);
    let disks = inversion_disks(cfg);
    let mut out = Vec::new();
    for alpha in digit_candidates(cfg, norm_bound) {
        let a = (
            i64::try_from(&alpha.a).unwrap(),
            i64::try_from(&alpha.b).unwrap(),
        );
        if witness_exists(&ff, a) {
            continue;
        }
        if certify_branch_empty(cfg, &disks, &alpha) {
            out.push(alpha);
        } else {
            return Err(Error::InvalidArgument(format!(
                "cannot certify emptiness of the digit cell of {alpha} (d = {})",
                cfg.d
            )));
        }
    }
    Ok(out)
}

/// Is there t in the open cell with 1/(alpha + t) in the pruned domain?
/// Tries t = 0 first, then grids of mesh 1/8, 1/16, 1/32.
fn witness_exists(ff: &FastField, alpha: (i64, i64)) -> bool {
    for den in [1i64, 8, 16, 32] {
        for ta in -den..=den {
            for tb in -den..=den {
                let t = (ta, tb);
                if den == 1 && t != (0, 0) {
                    continue;
                }
                if t != (0, 0) && !ff.strict_contains(t, den) {
                    continue;
                }
                // z = 1/(alpha + t) = den * conj(w) / qnorm(w)
                let w = (alpha.0 * den + t.0, alpha.1 * den + t.1);
                let q = ff.qnorm(w);
                if q == 0 {
                    continue;
                }
                let zw = ff.mul((den, 0), ff.conj(w));
                if ff.strict_contains(zw, q) {
                    return true;
                }
            }
        }
    }
    false
}

/// Exact certificate that no z has digit alpha: every point of I + alpha
/// lies strictly inside some inversion disk. Rectangles are pruned when
/// entirely outside one face of I + alpha and accepted when all four
/// corners lie strictly inside a single (convex) open disk.
fn certify_branch_empty(cfg: &FieldConfig, disks: &[GenCircle], alpha: &QuadInt) -> bool {
    let (cu, cv) = alpha.coords_uv();
    let (umax, vmax) = domain_extents(cfg);
    let rect = (
        &cu - &umax,
        &cu + &umax,
        &cv - &vmax,
        &cv + &vmax,
    );
    cover_rect(cfg, disks, &cu, &cv, &rect, 12)
}

type Rect = (BigRational, BigRational, BigRational, BigRational);

fn cover_rect(
    cfg: &FieldConfig,
    disks: &[GenCircle],
    cu: &BigRational,
    cv: &BigRational,
    rect: &Rect,
    depth: usize,
) -> bool {
    let (u0, u1, v0, v1) = rect;
    let corners = [
        (u0.clone(), v0.clone()),
        (u1.clone(), v0.clone()),
        (u0.clone(), v1.clone()),
        (u1.clone(), v1.clone()),
    ];
    // prune: rectangle entirely beyond one face of the translated cell
    for line in cfg.boundary_lines.iter() {
        let p = BigRational::from_integer(line.p.into());
        let q = BigRational::from_integer(line.q.into());
        let c = BigRational::from_integer(line.c.into());
        if corners
            .iter()
            .all(|(uu, vv)| &p * (uu - cu) + &q * (vv - cv) > c)
        {
            return true;
        }
    }
    // accept: all four corners strictly inside one open disk
    for g in disks {
        if corners.iter().all(|(uu, vv)| g.strictly_inside_uv(uu, vv)) {
            return true;
        }
    }
    if depth == 0 {
        return false;
    }
    let two = BigRational::from_integer(2.into());
    let um = (u0 + u1) / &two;
    let vm = (v0 + v1) / &two;
    let quads: [Rect; 4] = [
        (u0.clone(), um.clone(), v0.clone(), vm.clone()),
        (um.clone(), u1.clone(), v0.clone(), vm.clone()),
        (u0.clone(), um.clone(), vm.clone(), v1.clone()),
        (um.clone(), u1.clone(), vm.clone(), v1.clone()),
    ];
    quads
        .iter()
        .all(|r| cover_rect(cfg, disks, cu, cv, r, depth - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{divmod_nearest, FIELD_DS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(d: u8) -> &'static FieldConfig {
        FieldConfig::new(d).unwrap()
    }

    fn qi(d: u8, a: i64, b: i64) -> QuadInt {
        QuadInt::from_i64(d, a, b)
    }

    fn qr(d: u8, na: i64, nb: i64, da: i64, db: i64) -> QuadRat {
        QuadRat::new(qi(d, na, nb), qi(d, da, db)).unwrap()
    }

    /// Random fraction reduced into the fundamental cell.
    fn random_cell_point(rng: &mut ChaCha8Rng, d: u8, span: i64) -> Option<QuadRat> {
        let num = qi(d, rng.gen_range(-span..=span), rng.gen_range(-span..=span));
        let den = qi(d, rng.gen_range(-span..=span), rng.gen_range(-span..=span));
        if den.is_zero() {
            return None;
        }
        let (_, r) = divmod_nearest(&num, &den).ok()?;
        let z = QuadRat::new(r, den).ok()?;
        if z.is_zero() {
            None
        } else {
            Some(z)
        }
    }

    #[test]
    fn cf_step_frozen_cases() {
        // d=1: 1/((2-i)/5) = 2+i exactly
        let (digit, next) = cf_step(&qr(1, 2, -1, 5, 0), cfg(1)).unwrap();
        assert_eq!(digit, qi(1, 2, 1));
        assert!(next.is_zero());
        // d=1: 1/(1/2) = 2
        let (digit, next) = cf_step(&qr(1, 1, 0, 2, 0), cfg(1)).unwrap();
        assert_eq!(digit, qi(1, 2, 0));
        assert!(next.is_zero());
        // d=3: 1/(2/(3+sqrt(-3))) = 1 + omega since 3+sqrt(-3) = 2(1+omega)
        let (digit, next) = cf_step(&qr(3, 2, 0, 2, 2), cfg(3)).unwrap();
        assert_eq!(digit, qi(3, 1, 1));
        assert!(next.is_zero());
    }

    #[test]
    fn cf_step_rejects_bad_inputs() {
        assert!(matches!(
            cf_step(&QuadRat::zero(1), cfg(1)),
            Err(Error::ZeroInput)
        ));
        assert!(matches!(
            cf_step(&qr(1, 2, 0, 1, 0), cfg(1)),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn expand_frozen_digits() {
        let e = expand(&QuadRat::zero(1), cfg(1)).unwrap();
        assert_eq!(e.length(), 0);

        let e = expand(&qr(1, 2, -1, 5, 0), cfg(1)).unwrap();
        assert_eq!(e.digits, vec![qi(1, 2, 1)]);

        let e = expand(&qr(1, 3, 1, 7, 0), cfg(1)).unwrap();
        assert_eq!(e.digits, vec![qi(1, 2, -1), qi(1, 1, -3)]);
        // reconstruction and determinant for the same expansion
        let last = e.convergents.last().unwrap();
        assert!(last.mobius_at_zero().unwrap().eq_value(&e.input));
        for (j, m) in e.convergents.iter().enumerate() {
            let det = m.det();
            let expect = if (j + 1) % 2 == 0 { 1 } else { -1 };
            assert_eq!(det, qi(1, expect, 0));
        }
    }

    #[test]
    fn reversed_word_identity_frozen_and_random() {
        // digits of (3+i)/7: Q_1/Q_2 = (2-i)/(-7i) = (1+2i)/7
        let digits = vec![qi(1, 2, -1), qi(1, 1, -3)];
        assert!(convergents_reversed_identity(1, &digits).unwrap());

        let mut m = Mat2::identity(1);
        for a in &digits {
            m = m.mul(&Mat2::digit_step(a));
        }
        let (qp, qc) = m.denominators();
        assert_eq!(qp, &qi(1, 2, -1));
        assert_eq!(qc, &qi(1, 0, -7));
        assert!(QuadRat::new(qp.clone(), qc.clone())
            .unwrap()
            .eq_value(&qr(1, 1, 2, 7, 0)));

        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for &d in FIELD_DS.iter() {
            let mut done = 0;
            while done < 60 {
                let Some(z) = random_cell_point(&mut rng, d, 40) else {
                    continue;
                };
                let e = expand(&z, cfg(d)).unwrap();
                if e.digits.is_empty() {
                    continue;
                }
                assert!(
                    convergents_reversed_identity(d, &e.digits).unwrap(),
                    "reversal failed for {z} (d={d})"
                );
                done += 1;
            }
        }
    }

    #[test]
    fn expansion_invariants_on_random_fractions() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &d in FIELD_DS.iter() {
            let fc = cfg(d);
            let lnr_inv = -fc.r_sq_f64().ln();
            let mut done = 0;
            while done < 250 {
                let Some(z) = random_cell_point(&mut rng, d, 60) else {
                    continue;
                };
                let e = expand(&z, fc).unwrap();
                // reconstruction
                if let Some(last) = e.convergents.last() {
                    assert!(last.mobius_at_zero().unwrap().eq_value(&z));
                }
                // determinant, admissibility, denominator growth, length law
                let mut prev_qn = BigInt::from(0);
                for (j, m) in e.convergents.iter().enumerate() {
                    assert!(m.det().is_unit());
                    let qn = m.denominators().1.qnorm();
                    assert!(qn > prev_qn, "denominators must grow (d={d}, step {j})");
                    prev_qn = qn;
                }
                for a in &e.digits {
                    assert!(a.qnorm() >= BigInt::from(2), "unit digit produced (d={d})");
                }
                let bound = big_to_f64(&z.ht_sq()).max(1.0).ln() / lnr_inv + 1.0 + 1e-9;
                assert!(
                    (e.length() as f64) <= bound,
                    "length {} exceeds bound {bound} for {z} (d={d})",
                    e.length()
                );
                done += 1;
            }
        }
    }

    #[test]
    fn costs_frozen_values() {
        let mut e = expand(&qr(1, 2, -1, 5, 0), cfg(1)).unwrap();
        assert_eq!(e.cost(&CostFunction::ConstantOne), 1.0);
        let lg = e.cost(&CostFunction::LogAbs);
        assert!((lg - 0.5 * 5.0f64.ln()).abs() < 1e-14);
        // cached values are reused
        assert_eq!(e.costs.len(), 2);

        let table = CostFunction::CustomInteger {
            name: "steps2".into(),
            table: [((2, 1), 3u32)].into_iter().collect(),
            default: 7,
        };
        assert_eq!(table.evaluate(&qi(1, 2, 1)), 3.0);
        assert_eq!(table.evaluate(&qi(1, 5, 5)), 7.0);
        assert_eq!(table.evaluate_int(&qi(1, 2, 1)), Some(3));
        assert!(table.integer_valued());
        assert!(!CostFunction::LogAbs.integer_valued());
    }

    /// Does every exact remainder along the orbit stay a comfortable margin
    /// away from the cell boundary? Near a boundary the float orbit may
    /// round the other way, which is allowed by the contract.
    fn orbit_has_margin(z: &QuadRat, fc: &FieldConfig) -> bool {
        let mut w = z.clone();
        while !w.is_zero() {
            let (x, y) = w.to_complex_f64();
            if !fc.closed_domain_contains_f64(x, y, -1e-6) {
                return false;
            }
            let (_, next) = cf_step(&w, fc).unwrap();
            w = next;
        }
        true
    }

    #[test]
    fn float_orbit_matches_exact_digits() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for &d in FIELD_DS.iter() {
            let fc = cfg(d);
            let mut done = 0;
            while done < 120 {
                let Some(z) = random_cell_point(&mut rng, d, 30) else {
                    continue;
                };
                if !orbit_has_margin(&z, fc) {
                    continue;
                }
                let e = expand(&z, fc).unwrap();
                let orbit = orbit_cost_float(
                    fc,
                    z.to_complex_f64(),
                    e.length() + 2,
                    &CostFunction::ConstantOne,
                );
                assert!(
                    orbit.digits.len() >= e.length(),
                    "float orbit stalled for {z} (d={d})"
                );
                assert_eq!(
                    &orbit.digits[..e.length()],
                    &e.digits[..],
                    "float digits diverged for {z} (d={d})"
                );
                done += 1;
            }
        }
    }

    #[test]
    fn float_orbit_basics() {
        let fc = cfg(1);
        let z = qr(1, 2, -1, 5, 0);
        let orbit = orbit_cost_float(fc, z.to_complex_f64(), 10, &CostFunction::ConstantOne);
        assert_eq!(orbit.digits, vec![qi(1, 2, 1)]);
        assert!(orbit.hit_zero);
        assert_eq!(orbit.cost, 1.0);

        let none = orbit_cost_float(fc, (0.31, 0.17), 0, &CostFunction::ConstantOne);
        assert_eq!(none.cost, 0.0);
        assert!(none.digits.is_empty());

        // nonnegative costs make partial sums monotone
        let mut last = 0.0;
        for n in 1..=12 {
            let o = orbit_cost_float(fc, (0.31, 0.17), n, &CostFunction::LogAbs);
            assert!(o.cost >= last - 1e-12);
            last = o.cost;
        }
    }

    #[test]
    fn empty_digit_scan_matches_the_unit_groups() {
        for &d in FIELD_DS.iter() {
            let fc = cfg(d);
            let got = empty_digit_scan(fc, 12).unwrap();
            let mut want: Vec<QuadInt> = fc.units.to_vec();
            let key = |x: &QuadInt| (x.qnorm(), x.a.clone(), x.b.clone());
            want.sort_by_key(&key);
            let mut got_sorted = got.clone();
            got_sorted.sort_by_key(&key);
            assert_eq!(got_sorted, want, "empty digits for d={d}");
        }
    }
}

use super::*;
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(d: u8) -> &'static FieldConfig {
    FieldConfig::new(d).unwrap()
}

fn qi(d: u8, a: i64, b: i64) -> QuadInt {
    QuadInt::from_i64(d, a, b)
}

/// num/den with both given in omega-basis i64 coordinates.
fn qr(d: u8, na: i64, nb: i64, da: i64, db: i64) -> QuadRat {
    QuadRat::new(qi(d, na, nb), qi(d, da, db)).unwrap()
}

#[test]
fn field_config_shapes() {
    for &d in &FIELD_DS {
        let c = cfg(d);
        let expected_lines = if d % 4 == 3 { 6 } else { 4 };
        assert_eq!(c.boundary_lines.len(), expected_lines);
        let expected_units = match d {
            1 => 4,
            3 => 6,
            _ => 2,
        };
        assert_eq!(c.units.len(), expected_units);
        for u in &c.units {
            assert!(u.is_unit());
            assert_eq!(u.canonical_associate(c), QuadInt::one(d));
        }
        // every excluded translate is itself a lattice point of norm <= 1+d
        for t in &c.excluded_translates {
            assert!(t.qnorm() <= BigInt::from(1 + d as i64));
        }
    }
    assert!(FieldConfig::new(5).is_err());
    assert!(FieldConfig::new(0).is_err());
}

#[test]
fn r_sq_values_are_pinned() {
    let expected = [(1, (1, 2)), (2, (3, 4)), (3, (7, 16)), (7, (11, 16)), (11, (15, 16))];
    for (d, (n, m)) in expected {
        let c = cfg(d);
        assert_eq!(c.r_sq, BigRational::new(n.into(), m.into()), "d={d}");
        assert!(c.r_sq < BigRational::from_integer(1.into()));
    }
}

#[test]
fn r_sq_ball_encloses_cell_vertices() {
    // Every vertex of I_d (pairwise intersections of adjacent boundary
    // lines that satisfy all other inequalities) must satisfy
    // u^2 + d v^2 <= R_sq, exactly.
    for &d in &FIELD_DS {
        let c = cfg(d);
        let lines = &c.boundary_lines;
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let (a1, b1, c1) = (lines[i].p, lines[i].q, lines[i].c);
                let (a2, b2, c2) = (lines[j].p, lines[j].q, lines[j].c);
                let det = a1 * b2 - a2 * b1;
                if det == 0 {
                    continue;
                }
                let u = BigRational::new((c1 * b2 - c2 * b1).into(), det.into());
                let v = BigRational::new((a1 * c2 - a2 * c1).into(), det.into());
                if !c.closed_domain_contains_uv(&u, &v) {
                    continue;
                }
                let rad = &u * &u + BigRational::from_integer(BigInt::from(d)) * &v * &v;
                assert!(rad <= c.r_sq, "vertex outside pinned ball, d={d}");
            }
        }
    }
}

#[test]
fn qnorm_frozen_values() {
    assert_eq!(QuadInt::zero(1).qnorm(), BigInt::from(0));
    assert_eq!(QuadInt::zero(11).qnorm(), BigInt::from(0));
    assert_eq!(qi(1, 1, 1).qnorm(), BigInt::from(2)); // 1+i
    assert_eq!(qi(3, 0, 1).qnorm(), BigInt::from(1)); // omega, d=3
    assert_eq!(qi(11, 0, 1).qnorm(), BigInt::from(3)); // omega, d=11
    assert_eq!(qi(2, 3, 2).qnorm(), BigInt::from(17)); // 3 + 2 sqrt(-2)
    assert_eq!(qi(7, 1, 1).qnorm(), BigInt::from(4)); // 1 + omega, d=7
}

#[test]
fn qnorm_multiplicative_bulk() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for &d in &FIELD_DS {
        for _ in 0..20_000 {
            let x = qi(d, rng.gen_range(-99..=99), rng.gen_range(-99..=99));
            let y = qi(d, rng.gen_range(-99..=99), rng.gen_range(-99..=99));
            assert_eq!(x.mul(&y).qnorm(), x.qnorm() * y.qnorm());
        }
    }
}

#[test]
fn conjugation_is_ring_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for &d in &FIELD_DS {
        for _ in 0..500 {
            let x = qi(d, rng.gen_range(-40..=40), rng.gen_range(-40..=40));
            let y = qi(d, rng.gen_range(-40..=40), rng.gen_range(-40..=40));
            assert_eq!(x.conj().conj(), x);
            assert_eq!(x.mul(&y).conj(), x.conj().mul(&y.conj()));
            assert_eq!(x.mul(&x.conj()).a, x.qnorm());
            assert!(x.mul(&x.conj()).b.is_zero());
        }
    }
}

#[test]
fn strict_domain_frozen_cases() {
    for &d in &FIELD_DS {
        assert!(strict_domain_contains(&QuadRat::zero(d), cfg(d)), "origin, d={d}");
    }
    // d=1: 1/2 sits on the shared edge and belongs to the translate by 1.
    assert!(!strict_domain_contains(&qr(1, 1, 0, 2, 0), cfg(1)));
    // ... while -1/2 is kept.
    assert!(strict_domain_contains(&qr(1, -1, 0, 2, 0), cfg(1)));
    // d=3: sqrt(-3)/3 = (2*omega - 1)/3 belongs to the translate by omega.
    assert!(!strict_domain_contains(&qr(3, -1, 2, 3, 0), cfg(3)));
    // interior points of every cell
    for &d in &FIELD_DS {
        assert!(strict_domain_contains(&qr(d, 1, 0, 5, 0), cfg(d)), "1/5, d={d}");
        assert!(strict_domain_contains(&qr(d, 0, 1, 7, 0), cfg(d)), "omega/7, d={d}");
    }
    // far outside
    assert!(!strict_domain_contains(&QuadRat::from_int(qi(1, 3, 3)), cfg(1)));
}

#[test]
fn round_nearest_frozen_cases() {
    // Identity on points already in the strict cell.
    for &d in &FIELD_DS {
        let z = qr(d, 1, 0, 5, 0);
        assert_eq!(round_nearest(&z, cfg(d)).unwrap(), QuadInt::zero(d));
    }
    // 12/5 + (9/10) i = (24 + 9i)/10
    assert_eq!(round_nearest(&qr(1, 24, 9, 10, 0), cfg(1)).unwrap(), qi(1, 2, 1));
    // Ties on the real axis resolve upward: [7/2] = 4.
    assert_eq!(round_nearest(&qr(1, 7, 0, 2, 0), cfg(1)).unwrap(), qi(1, 4, 0));
    // Integers round to themselves.
    for &d in &FIELD_DS {
        let z = QuadRat::from_int(qi(d, -3, 2));
        assert_eq!(round_nearest(&z, cfg(d)).unwrap(), qi(d, -3, 2));
    }
}

#[test]
fn round_nearest_tiling_uniqueness_bulk() {
    // For random rationals, exactly one lattice translate lands in I'.
    // Scans a 5x5 window around the float rounding, wider than the 3x3 the
    // implementation uses, so it would catch both misses and duplicates.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for &d in &FIELD_DS {
        let c = cfg(d);
        for _ in 0..10_000 {
            let z = qr(
                d,
                rng.gen_range(-500..=500),
                rng.gen_range(-500..=500),
                rng.gen_range(1..=60),
                0,
            );
            let beta = round_nearest(&z, c).unwrap();
            let mut hits = 0;
            for da in -2i64..=2 {
                for db in -2i64..=2 {
                    let cand = beta.add(&qi(d, da, db));
                    let shifted = z.sub_int(&cand).unwrap();
                    if strict_domain_contains(&shifted, c) {
                        hits += 1;
                    }
                }
            }
            assert_eq!(hits, 1, "tiling violated at d={d}, z={z}");
        }
    }
}

#[test]
fn round_nearest_translation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for &d in &FIELD_DS {
        let c = cfg(d);
        for _ in 0..2000 {
            let z = qr(
                d,
                rng.gen_range(-300..=300),
                rng.gen_range(-300..=300),
                rng.gen_range(1..=40),
                0,
            );
            let beta = qi(d, rng.gen_range(-20..=20), rng.gen_range(-20..=20));
            let shifted = z.add(&QuadRat::from_int(beta.clone())).unwrap();
            assert_eq!(
                round_nearest(&shifted, c).unwrap(),
                round_nearest(&z, c).unwrap().add(&beta)
            );
        }
    }
}

#[test]
fn divmod_frozen_cases() {
    // 5 = (2+i)(2-i): exact division.
    let (q, r) = divmod_nearest(&qi(1, 5, 0), &qi(1, 2, 1)).unwrap();
    assert_eq!(q, qi(1, 2, -1));
    assert!(r.is_zero());
    // 7 = 4*2 - 1.
    let (q, r) = divmod_nearest(&qi(1, 7, 0), &qi(1, 2, 0)).unwrap();
    assert_eq!(q, qi(1, 4, 0));
    assert_eq!(r, qi(1, -1, 0));
    // division by zero
    assert!(divmod_nearest(&qi(1, 7, 0), &QuadInt::zero(1)).is_err());
}

#[test]
fn divmod_identity_and_norm_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for &d in &FIELD_DS {
        let c = cfg(d);
        for _ in 0..3000 {
            let a = qi(d, rng.gen_range(-400..=400), rng.gen_range(-400..=400));
            let b = qi(d, rng.gen_range(-25..=25), rng.gen_range(-25..=25));
            if b.is_zero() {
                continue;
            }
            let (q, r) = divmod_nearest(&a, &b).unwrap();
            assert_eq!(q.mul(&b).add(&r), a, "a = qb + r failed");
            // norm(r) <= R_sq * norm(b), exactly over Q
            let lhs = BigRational::from_integer(r.qnorm());
            let rhs = &c.r_sq * BigRational::from_integer(b.qnorm());
            assert!(lhs <= rhs, "norm descent failed d={d} a={a} b={b}");
            // and the quotient fraction r/b lies in the strict cell
            let frac = QuadRat::new(r, b).unwrap();
            assert!(strict_domain_contains(&frac, c));
        }
    }
}

#[test]
fn gcd_frozen_cases() {
    // gcd(a, 0) = canonical associate of a.
    let g = quad_gcd(&qi(1, 0, -7), &QuadInt::zero(1)).unwrap();
    assert_eq!(g, qi(1, 7, 0)); // -7i ~ 7
    // gcd(5, 2+i) is an associate of 2+i; canonical pick is 2+i itself.
    let g = quad_gcd(&qi(1, 5, 0), &qi(1, 2, 1)).unwrap();
    assert_eq!(g, qi(1, 2, 1));
    // coprime rational integers give a unit, canonicalized to 1.
    let g = quad_gcd(&qi(1, 3, 0), &qi(1, 2, 0)).unwrap();
    assert_eq!(g, QuadInt::one(1));
    for &d in &FIELD_DS {
        let g = quad_gcd(&qi(d, 3, 0), &qi(d, 2, 0)).unwrap();
        assert_eq!(g, QuadInt::one(d), "gcd(3,2) d={d}");
    }
    assert!(quad_gcd(&QuadInt::zero(1), &QuadInt::zero(1)).is_err());
}

#[test]
fn gcd_divides_both_and_any_common_divisor() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for &d in &FIELD_DS {
        for _ in 0..400 {
            let g0 = qi(d, rng.gen_range(-9..=9), rng.gen_range(-9..=9));
            if g0.is_zero() {
                continue;
            }
            let x = g0.mul(&qi(d, rng.gen_range(-9..=9), rng.gen_range(-9..=9)));
            let y = g0.mul(&qi(d, rng.gen_range(-9..=9), rng.gen_range(-9..=9)));
            if x.is_zero() && y.is_zero() {
                continue;
            }
            let g = quad_gcd(&x, &y).unwrap();
            // g divides x and y exactly
            for t in [&x, &y] {
                let (_, r) = divmod_nearest(t, &g).unwrap();
                assert!(r.is_zero(), "gcd does not divide input: d={d} t={t} g={g}");
            }
            // the planted divisor g0 divides g
            let frac = QuadRat::new(g.clone(), g0.clone()).unwrap();
            assert!(frac.den.is_unit(), "planted divisor lost: d={d} g0={g0} g={g}");
            // output is canonical
            assert_eq!(g.canonical_associate(cfg(d)), g);
        }
    }
}

#[test]
fn canonical_fraction_uniqueness() {
    // Scaling num and den by a common factor and a random unit leaves the
    // canonical representation bit-identical.
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for &d in &FIELD_DS {
        let c = cfg(d);
        for _ in 0..500 {
            let num = qi(d, rng.gen_range(-30..=30), rng.gen_range(-30..=30));
            let den = qi(d, rng.gen_range(-30..=30), rng.gen_range(-30..=30));
            if den.is_zero() {
                continue;
            }
            let s = qi(d, rng.gen_range(-5..=5), rng.gen_range(-5..=5));
            if s.is_zero() {
                continue;
            }
            let unit = &c.units[rng.gen_range(0..c.units.len())];
            let z1 = QuadRat::new(num.clone(), den.clone()).unwrap();
            let z2 = QuadRat::new(num.mul(&s).mul(unit), den.mul(&s).mul(unit)).unwrap();
            assert_eq!(z1.num, z2.num);
            assert_eq!(z1.den, z2.den);
            assert_eq!(z1.den.canonical_associate(c), z1.den);
            assert!(z1.eq_value(&z2));
        }
    }
}

#[test]
fn height_examples() {
    // ht(0) = 0 by convention; ht of a reduced fraction is max of norms.
    let mut z = QuadRat::zero(1);
    z.canonicalize().unwrap();
    assert_eq!(z.ht_sq(), BigInt::from(0));
    let z = qr(1, 3, 1, 7, 0); // (3+i)/7 already reduced
    assert_eq!(z.ht_sq(), BigInt::from(49));
    let z = qr(1, 10, 0, 4, 0); // 10/4 reduces to 5/2
    assert_eq!(z.ht_sq(), BigInt::from(25));
}

#[test]
fn coordinate_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for &d in &FIELD_DS {
        for _ in 0..300 {
            let z = qr(
                d,
                rng.gen_range(-50..=50),
                rng.gen_range(-50..=50),
                rng.gen_range(1..=20),
                rng.gen_range(-20..=20),
            );
            let (u, v) = z.coords_uv();
            let back = QuadRat::from_uv(d, &u, &v).unwrap();
            assert!(back.eq_value(&z), "uv round trip failed d={d}");
        }
    }
}

#[test]
fn parse_literals() {
    let c1 = cfg(1);
    let z = parse_quadrat("12/5+9/10i", c1).unwrap();
    assert!(z.eq_value(&qr(1, 24, 9, 10, 0)));
    let z = parse_quadrat(" -1/2 ", c1).unwrap();
    assert!(z.eq_value(&qr(1, -1, 0, 2, 0)));
    let z = parse_quadrat("3", c1).unwrap();
    assert!(z.eq_value(&QuadRat::from_int(qi(1, 3, 0))));
    let z = parse_quadrat("-i", c1).unwrap();
    assert!(z.eq_value(&QuadRat::from_int(qi(1, 0, -1))));
    let c3 = cfg(3);
    let z = parse_quadrat("1/2+1/2w", c3).unwrap();
    let (u, v) = z.coords_uv();
    // 1/2 + (1/2) omega = 3/4 + (1/4) sqrt(-3)
    assert_eq!(u, BigRational::new(3.into(), 4.into()));
    assert_eq!(v, BigRational::new(1.into(), 4.into()));
    let z = parse_quadrat("w", cfg(11)).unwrap();
    assert!(z.eq_value(&QuadRat::from_int(qi(11, 0, 1))));
    // 'i' shorthand is only meaningful for d=1
    assert!(parse_quadrat("1+i", c3).is_err());
    assert!(parse_quadrat("1+iw", c1).is_err());
    assert!(parse_quadrat("", c1).is_err());
    assert!(parse_quadrat("2/0", c1).is_err());
    assert!(parse_quadrat("banana", c1).is_err());
}

#[test]
fn display_round_trips_through_parse() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for &d in &FIELD_DS {
        let c = cfg(d);
        for _ in 0..200 {
            let z = qr(
                d,
                rng.gen_range(-40..=40),
                rng.gen_range(-40..=40),
                rng.gen_range(1..=15),
                rng.gen_range(-15..=15),
            );
            let shown = format!("{z}");
            let back = parse_quadrat(&shown, c).unwrap();
            assert!(back.eq_value(&z), "display round trip failed: {shown}");
        }
    }
}

#[test]
fn y_max_and_covolume_are_consistent() {
    for &d in &FIELD_DS {
        let c = cfg(d);
        let sd = (d as f64).sqrt();
        let expected_cov = if d % 4 == 3 { sd / 2.0 } else { sd };
        assert!((c.covolume() - expected_cov).abs() < 1e-12);
        // y_max must dominate the imaginary part of every cell vertex.
        let lines = &c.boundary_lines;
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let (a1, b1, c1) = (lines[i].p, lines[i].q, lines[i].c);
                let (a2, b2, c2) = (lines[j].p, lines[j].q, lines[j].c);
                let det = a1 * b2 - a2 * b1;
                if det == 0 {
                    continue;
                }
                let u = BigRational::new((c1 * b2 - c2 * b1).into(), det.into());
                let v = BigRational::new((a1 * c2 - a2 * c1).into(), det.into());
                if !c.closed_domain_contains_uv(&u, &v) {
                    continue;
                }
                let y = ratio_to_f64(&v) * sd;
                assert!(y.abs() <= c.y_max() + 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn prop_round_nearest_total(d_idx in 0usize..5, na in -2000i64..2000, nb in -2000i64..2000, da in 1i64..80, db in -80i64..80) {
        let d = FIELD_DS[d_idx];
        if (da, db) != (0, 0) {
            let z = QuadRat::new(qi(d, na, nb), qi(d, da, db)).unwrap();
            let beta = round_nearest(&z, cfg(d)).unwrap();
            let r = z.sub_int(&beta).unwrap();
            prop_assert!(strict_domain_contains(&r, cfg(d)));
            // the remainder fits inside the pinned ball
            prop_assert!(r.abs_sq() <= cfg(d).r_sq);
        }
    }

    #[test]
    fn prop_qnorm_positive_definite(d_idx in 0usize..5, a in -3000i64..3000, b in -3000i64..3000) {
        let d = FIELD_DS[d_idx];
        let x = qi(d, a, b);
        let n = x.qnorm();
        prop_assert!(n >= BigInt::from(0));
        prop_assert_eq!(n.is_zero(), x.is_zero());
    }

    #[test]
    fn prop_display_parse_integer(d_idx in 0usize..5, a in -500i64..500, b in -500i64..500) {
        let d = FIELD_DS[d_idx];
        let x = qi(d, a, b);
        let z = parse_quadrat(&format!("{x}"), cfg(d)).unwrap();
        prop_assert!(z.eq_value(&QuadRat::from_int(x)));
    }
}

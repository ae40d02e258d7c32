//! Randomized algebraic properties of the exact number type, the matrix
//! helpers, and basic surface invariants.

use proptest::prelude::*;

use flatrel::exactnum::QuadNum;
use flatrel::fixtures;
use flatrel::surface::{Coord, Mat2, Vec2};

fn qnum() -> impl Strategy<Value = QuadNum> {
    (
        -20i64..=20,
        1i64..=12,
        -20i64..=20,
        1i64..=12,
    )
        .prop_map(|(an, ad, bn, bd)| {
            QuadNum::new(
                flatrel::exactnum::ratio(an, ad),
                flatrel::exactnum::ratio(bn, bd),
                5,
            )
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in qnum(), b in qnum(), c in qnum()) {
        let ab_c = a.add(&b).add(&c);
        let a_bc = a.add(&b.add(&c));
        prop_assert!(ab_c.sub(&a_bc).is_zero());
        let lhs = a.mul(&b.add(&c));
        let rhs = a.mul(&b).add(&a.mul(&c));
        prop_assert!(lhs.sub(&rhs).is_zero());
        prop_assert!(a.mul(&b).sub(&b.mul(&a)).is_zero());
    }

    #[test]
    fn field_inverse(a in qnum()) {
        prop_assume!(!a.is_zero());
        let inv = QuadNum::one().checked_div(&a).unwrap();
        prop_assert!(a.mul(&inv).sub(&QuadNum::one()).is_zero());
    }

    #[test]
    fn conjugation_is_a_ring_map(a in qnum(), b in qnum()) {
        let lhs = a.mul(&b).galois_conjugate();
        let rhs = a.galois_conjugate().mul(&b.galois_conjugate());
        prop_assert!(lhs.sub(&rhs).is_zero());
        // Norm and trace are rational.
        prop_assert!(a.mul(&a.galois_conjugate()).is_rational());
        prop_assert!(a.add(&a.galois_conjugate()).is_rational());
    }

    #[test]
    fn sign_matches_the_real_embedding(a in qnum()) {
        let f = a.to_f64();
        if f.abs() > 1e-9 {
            prop_assert_eq!(a.sign(), if f > 0.0 { 1 } else { -1 });
        }
    }

    #[test]
    fn determinants_are_multiplicative(
        a in qnum(), b in qnum(), c in qnum(), d in qnum(),
        s in -5i64..=5,
    ) {
        let g = Mat2::new(a, b, c, d);
        let h = Mat2::shear(QuadNum::from_ratio(s, 3));
        let lhs = g.mul_mat(&h).det();
        let rhs = g.det().mul(&h.det());
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn shears_compose_additively(s in -8i64..=8, t in -8i64..=8) {
        let a = Mat2::shear(QuadNum::from_ratio(s, 5));
        let b = Mat2::shear(QuadNum::from_ratio(t, 5));
        let c = Mat2::shear(QuadNum::from_ratio(s + t, 5));
        let p = a.mul_mat(&b);
        for (x, y) in [(&p.a, &c.a), (&p.b, &c.b), (&p.c, &c.c), (&p.d, &c.d)] {
            prop_assert!(x.sub(y).is_zero());
        }
    }

    #[test]
    fn torus_area_is_the_lattice_covolume(
        ux in 1i64..=6, uy in -4i64..=4, vy in 1i64..=6, vx in -4i64..=4,
    ) {
        let u = Vec2::new(QuadNum::from_int(ux), QuadNum::from_ratio(uy, 3));
        let v = Vec2::new(QuadNum::from_ratio(vx, 3), QuadNum::from_int(vy));
        prop_assume!(u.cross(&v).sign() > 0);
        let m = fixtures::lattice_torus(u.clone(), v.clone(), "p").unwrap();
        prop_assert_eq!(m.genus(), 1);
        prop_assert!(m.area().sub(&u.cross(&v)).is_zero());
    }

    #[test]
    fn linear_maps_scale_area_by_the_determinant(
        s in -4i64..=4, p in 1i64..=4,
    ) {
        let m = fixtures::golden_l();
        let g = Mat2::shear(QuadNum::from_ratio(s, 3))
            .mul_mat(&Mat2::diag(QuadNum::from_int(p), QuadNum::from_ratio(1, 2)));
        let moved = m.apply_gl2(&g).unwrap();
        let want = m.area().mul(&g.det());
        prop_assert!(moved.area().sub(&want).is_zero());
    }
}

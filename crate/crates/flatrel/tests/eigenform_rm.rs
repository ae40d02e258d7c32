//! Detection of real multiplication from periods, and the slit-torus
//! constructions that produce eigenform surfaces with prescribed
//! discriminants.

use flatrel::eigenform::{
    connect_sum_tori, detect_rm, detect_rm_auto, prototype_pair, self_connect_sum, verify_rm,
    Prototype, TorsionTorus,
};
use flatrel::exactnum::QuadNum;
use flatrel::fixtures;
use flatrel::rel::rel_apply;
use flatrel::scan::{default_budget, horizontal_diagram, horizontal_saddles};
use flatrel::surface::{Coord, Mat2, Vec2};

fn q(n: i64, d: i64) -> QuadNum {
    QuadNum::from_ratio(n, d)
}

#[test]
fn decagon_has_discriminant_five() {
    let m = fixtures::decagon();
    let act = detect_rm_auto(&m, 200).unwrap().expect("no order detected");
    assert_eq!(act.d, 5);
    assert!(verify_rm(&m, &act).unwrap());
    // Direct query at 5 succeeds as well.
    assert!(detect_rm(&m, 5).unwrap().is_some());
}

#[test]
fn skewed_surface_has_no_real_multiplication() {
    let m = fixtures::skew_l();
    assert!(detect_rm_auto(&m, 100).unwrap().is_none());
}

#[test]
fn prototype_connect_sums_hit_their_discriminants() {
    for (e, l, mm, d) in [(1, 1, 1, 5), (0, 1, 1, 4), (1, 1, 2, 9), (0, 1, 2, 8)] {
        let p = Prototype::new(e, l, mm).unwrap();
        assert_eq!(p.d, d, "prototype ({e},{l},{mm})");
        let pair = prototype_pair(&p).unwrap();
        // Conjugate-multiplication oracle: (e - lambda) carries the scaled
        // square lattice into the rectangular one with index l^2 m.
        let mu = QuadNum::from_int(e).sub(&p.lambda);
        for gen in [
            Vec2::new(p.lambda.clone(), QuadNum::zero()),
            Vec2::new(QuadNum::zero(), p.lambda.clone()),
        ] {
            let img = gen.scale(&mu);
            // Coordinates in the (lm, 0), (0, l) lattice must be integers.
            let cx = img.x.checked_div(&QuadNum::from_int(l * mm)).unwrap();
            let cy = img.y.checked_div(&QuadNum::from_int(l)).unwrap();
            for c in [cx, cy] {
                assert!(c.is_rational() && c.a.denom() == &num_bigint::BigInt::from(1));
            }
        }
        let cov1 = pair.e1.area();
        let cov2 = pair.e2.area();
        // mu and lambda are the two roots of x^2 = e x + l^2 m, so
        // |mu lambda| = l^2 m; the real rescaling by mu multiplies the
        // covolume by mu^2, so covol(mu L1) = isogeny_degree * covol(L2).
        let nm = mu.checked_mul(&p.lambda).unwrap().abs();
        assert!(nm.sub(&QuadNum::from_int(l * l * mm)).is_zero());
        let scaled = mu.checked_mul(&mu).unwrap().checked_mul(&cov1).unwrap();
        assert!(scaled
            .sub(&cov2.checked_mul(&QuadNum::from_int(pair.isogeny_degree)).unwrap())
            .is_zero());

        let x = connect_sum_tori(&pair, &q(1, 3)).unwrap();
        assert_eq!(x.genus(), 2);
        assert_eq!(x.labels.len(), 2);
        assert!(x
            .area()
            .sub(&pair.e1.area().add(&pair.e2.area()))
            .is_zero());
        let act = detect_rm_auto(&x, 400).unwrap().expect("no order detected");
        assert_eq!(act.d, d, "connected sum for prototype ({e},{l},{mm})");
        assert!(verify_rm(&x, &act).unwrap());
    }
}

#[test]
fn connect_sum_negative_parameter_swaps_labels() {
    let p = Prototype::new(1, 1, 1).unwrap();
    let pair = prototype_pair(&p).unwrap();
    let pos = connect_sum_tori(&pair, &q(1, 3)).unwrap();
    let neg = connect_sum_tori(&pair, &q(-1, 3)).unwrap();
    assert!(pos.area().sub(&neg.area()).is_zero());
    // In both, the slit saddles run between the two singularities, but in
    // opposite named directions.
    for (m, from, to) in [(&pos, "xi1", "xi2"), (&neg, "xi2", "xi1")] {
        let hs = horizontal_saddles(m, 0.5);
        let (f, t) = (m.label_index(from).unwrap(), m.label_index(to).unwrap());
        let slit: Vec<_> = hs
            .saddles
            .iter()
            .filter(|s| s.hol.x.sub(&q(1, 3)).is_zero())
            .collect();
        assert_eq!(slit.len(), 2);
        for s in slit {
            assert_eq!((s.from, s.to), (f, t));
        }
    }
}

#[test]
fn detection_is_shear_invariant() {
    let p = Prototype::new(1, 1, 1).unwrap();
    let pair = prototype_pair(&p).unwrap();
    let x = connect_sum_tori(&pair, &q(1, 3)).unwrap();
    let sheared = x.apply_gl2(&Mat2::shear(q(2, 7))).unwrap();
    let act = detect_rm_auto(&sheared, 400).unwrap().expect("no order detected");
    assert_eq!(act.d, 5);
    assert!(verify_rm(&sheared, &act).unwrap());
}

#[test]
fn detection_is_rel_invariant() {
    let m = fixtures::decagon();
    let moved = rel_apply(&m, &q(1, 3), default_budget(&m)).unwrap();
    let act = detect_rm_auto(&moved, 200).unwrap().expect("no order detected");
    assert_eq!(act.d, 5);
    assert!(verify_rm(&moved, &act).unwrap());
}

#[test]
fn torsion_torus_orders() {
    let u = Vec2::new(QuadNum::one(), QuadNum::zero());
    let v = Vec2::new(QuadNum::zero(), QuadNum::one());
    let tt = TorsionTorus::new(&u, &v, &Vec2::new(q(1, 2), QuadNum::zero())).unwrap();
    assert_eq!(tt.d, 2);
    assert_eq!(tt.e.genus(), 1);
    assert_eq!(tt.e.labels.len(), 2);
    let tt3 = TorsionTorus::new(&u, &v, &Vec2::new(q(1, 3), q(2, 3))).unwrap();
    assert_eq!(tt3.d, 3);
    // A lattice offset is rejected: the marked points would coincide.
    assert!(TorsionTorus::new(&u, &v, &Vec2::new(QuadNum::from_int(2), QuadNum::zero())).is_err());
}

#[test]
fn self_connect_sum_two_torsion() {
    let u = Vec2::new(QuadNum::one(), QuadNum::zero());
    let v = Vec2::new(QuadNum::zero(), QuadNum::one());
    let tt = TorsionTorus::new(&u, &v, &Vec2::new(q(1, 2), QuadNum::zero())).unwrap();
    let t = q(1, 5);
    let x = self_connect_sum(&tt, &t).unwrap();
    assert_eq!(x.genus(), 2);
    assert_eq!(x.labels.len(), 2);
    assert!(x.area().sub(&QuadNum::one()).is_zero());
    // Exactly two horizontal saddles of the slit length, both crossings.
    let hs = horizontal_saddles(&x, 0.3);
    let slit: Vec<_> = hs
        .saddles
        .iter()
        .filter(|s| s.hol.x.sub(&t).is_zero())
        .collect();
    assert_eq!(slit.len(), 2);
    for s in &slit {
        assert_ne!(s.from, s.to);
    }
    // The square discriminant 4 is detected: the surface covers a torus.
    let act = detect_rm_auto(&x, 100).unwrap().expect("no order detected");
    assert_eq!(act.d, 4);
    assert!(verify_rm(&x, &act).unwrap());
    // Absolute periods lie in the original lattice marked with half points.
    let basis = flatrel::eigenform::homology_basis(&x).unwrap();
    for p in flatrel::eigenform::basis_periods(&x, &basis) {
        for c in [&p.x, &p.y] {
            assert!(c.is_rational());
            let two_c = c.mul(&QuadNum::from_int(2));
            assert!(two_c.a.is_integer());
        }
    }
}

#[test]
fn self_connect_sum_on_irrational_lattice_gives_two_crossing_diagram() {
    // A lattice with no horizontal vectors: the only horizontal saddles of
    // the glued surface are the two slit crossings, in one direction.
    let s5 = QuadNum::sqrt_disc(5).unwrap();
    let u = Vec2::new(QuadNum::one(), s5);
    let v = Vec2::new(QuadNum::zero(), QuadNum::one());
    let offset = u.scale(&q(1, 2)).add(&v.scale(&q(1, 2)));
    let tt = TorsionTorus::new(&u, &v, &offset).unwrap();
    assert_eq!(tt.d, 2);
    let x = self_connect_sum(&tt, &q(1, 5)).unwrap();
    let diag = horizontal_diagram(&x, 3.0);
    assert_eq!(diag.classify_h11(None).as_deref(), Some("5"));
    // The free prongs carry no saddle at any budget, so the shape is stable
    // under enlarging it.
    let diag2 = horizontal_diagram(&x, 12.0);
    assert_eq!(diag2.classify_h11(None).as_deref(), Some("5"));
}

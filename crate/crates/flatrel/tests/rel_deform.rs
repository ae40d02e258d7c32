//! The horizontal deformation: domain of definition, the deformation laws,
//! and the collapse/split surgeries, checked on exact genus-2 fixtures.

use flatrel::exactnum::{golden, QuadNum};
use flatrel::fixtures;
use flatrel::rel::{
    collapse, framed_isomorphic, n_act, rel_apply, rel_domain, split, FramedH2Surface, RelError,
};
use flatrel::scan::{default_budget, horizontal_saddles, saddle_connections, ScanConfig};
use flatrel::surface::{Coord, Mat2, TriSurface};

fn q(n: i64, d: i64) -> QuadNum {
    QuadNum::from_ratio(n, d)
}

/// Multiset of saddle holonomies up to squared length `l2`, as a sorted key.
fn spectrum(m: &TriSurface<QuadNum>, l2: i64) -> Vec<String> {
    let found = saddle_connections(&m, &QuadNum::from_int(l2), &ScanConfig::default()).unwrap();
    let mut keys: Vec<String> = found
        .iter()
        .map(|s| format!("{:?}|{}->{}", s.hol, m.labels[s.from].name, m.labels[s.to].name))
        .collect();
    keys.sort();
    keys
}

#[test]
fn decagon_domain_is_exact_golden_interval() {
    let m = fixtures::decagon();
    let dom = rel_domain(&m, default_budget(&m)).unwrap();
    assert!(dom.certified);
    // (-1/φ, φ): 1/φ = φ - 1.
    let phi = golden();
    let inv_phi = phi.sub(&QuadNum::one());
    assert!(dom.neg.unwrap().sub(&inv_phi).is_zero());
    assert!(dom.pos.unwrap().sub(&phi).is_zero());
}

#[test]
fn tipped_decagon_domain_is_unbounded_and_certified() {
    let m = fixtures::tipped_decagon();
    let hs = horizontal_saddles(&m, default_budget(&m));
    assert!(hs.complete());
    assert!(hs.saddles.iter().all(|s| s.from == s.to), "loops only");
    let dom = rel_domain(&m, default_budget(&m)).unwrap();
    assert!(dom.certified);
    assert!(dom.neg.is_none() && dom.pos.is_none());
}

#[test]
fn deformation_preserves_area_and_inverts() {
    let m = fixtures::decagon();
    let budget = default_budget(&m);
    let t = q(1, 2);
    let moved = rel_apply(&m, &t, budget).unwrap();
    moved.validate().unwrap();
    assert!(moved.area().sub(&m.area()).is_zero());
    let back = rel_apply(&moved, &t.neg(), budget).unwrap();
    assert!(back.flip_equivalent(&m).unwrap());
}

#[test]
fn boundary_parameters_are_rejected() {
    let m = fixtures::decagon();
    let budget = default_budget(&m);
    let phi = golden();
    // Slightly inside: fine; the collapsing saddle shrinks accordingly.
    let inside = phi.mul(&q(999, 1000));
    let moved = rel_apply(&m, &inside, budget).unwrap();
    let hs = horizontal_saddles(&moved, budget);
    let min_cross = hs
        .saddles
        .iter()
        .filter(|s| s.from != s.to)
        .map(|s| s.hol.x.to_f64())
        .fold(f64::INFINITY, f64::min);
    assert!((min_cross - phi.to_f64() / 1000.0).abs() < 1e-9);
    // On or past the endpoint: domain error.
    for t in [phi.clone(), phi.mul(&q(1001, 1000)), q(-1, 1)] {
        match rel_apply(&m, &t, budget) {
            Err(RelError::OutsideDomain { .. }) => {}
            other => panic!("expected domain error for {:?}, got {:?}", t, other.map(|_| ())),
        }
    }
}

#[test]
fn composition_in_a_convex_range() {
    let m = fixtures::decagon();
    let budget = default_budget(&m);
    let z = q(1, 2);
    let z2 = q(1, 3);
    let a = rel_apply(&rel_apply(&m, &z, budget).unwrap(), &z2, budget).unwrap();
    let b = rel_apply(&m, &z.add(&z2), budget).unwrap();
    assert!(a.flip_equivalent(&b).unwrap());
}

#[test]
fn saddle_bookkeeping_under_deformation() {
    let m = fixtures::decagon();
    let budget = default_budget(&m);
    let t = q(1, 4);
    let moved = rel_apply(&m, &t, budget).unwrap();
    let before = horizontal_saddles(&m, budget);
    let after = horizontal_saddles(&moved, budget);
    assert!(before.complete() && after.complete());
    assert_eq!(before.saddles.len(), after.saddles.len());
    let key = |s: &flatrel::scan::SaddleConnection<QuadNum>, shift: &QuadNum| {
        format!("{:?}|{}->{}", s.hol.x.add(shift), s.from, s.to)
    };
    let zero = QuadNum::zero();
    let (i1, i2) = (m.label_index("xi1").unwrap(), m.label_index("xi2").unwrap());
    let mut want: Vec<String> = before
        .saddles
        .iter()
        .map(|s| {
            // Edges into the moving singularity stretch by t, edges out of
            // it shrink; loops are unchanged.
            let shift = if s.from == i1 && s.to == i2 {
                t.clone()
            } else if s.from == i2 && s.to == i1 {
                t.neg()
            } else {
                zero.clone()
            };
            key(s, &shift)
        })
        .collect();
    let mut got: Vec<String> = after.saddles.iter().map(|s| key(s, &zero)).collect();
    want.sort();
    got.sort();
    assert_eq!(want, got);
}

#[test]
fn loops_only_surface_deforms_far() {
    // All horizontal saddles are loops, so arbitrarily large parameters work.
    let m = fixtures::three_cylinder();
    let budget = default_budget(&m);
    let t = QuadNum::from_int(7);
    let moved = rel_apply(&m, &t, budget).unwrap();
    moved.validate().unwrap();
    assert!(moved.area().sub(&m.area()).is_zero());
    let back = rel_apply(&moved, &t.neg(), budget).unwrap();
    assert!(back.flip_equivalent(&m).unwrap());
}

#[test]
fn shear_commutes_and_stretch_rescales() {
    let m = fixtures::decagon();
    let budget = default_budget(&m);
    let z = q(1, 3);
    // u_s Rel_z = Rel_z u_s.
    let shear = Mat2::shear(q(2, 5));
    let a = shear_then(&m, &shear, &z, budget);
    let b = rel_then(&m, &z, &shear, budget);
    assert!(a.flip_equivalent(&b).unwrap());
    // diag(p, 1/p) Rel_z = Rel_{p z} diag(p, 1/p).
    let g = Mat2::diag(q(2, 1), q(1, 2));
    let lhs = rel_apply(&m, &z, budget).unwrap().apply_gl2(&g).unwrap();
    let rhs = rel_apply(
        &m.apply_gl2(&g).unwrap(),
        &z.mul(&q(2, 1)),
        default_budget(&m.apply_gl2(&g).unwrap()),
    )
    .unwrap();
    assert!(lhs.flip_equivalent(&rhs).unwrap());
}

fn shear_then(
    m: &TriSurface<QuadNum>,
    g: &Mat2<QuadNum>,
    z: &QuadNum,
    budget: f64,
) -> TriSurface<QuadNum> {
    n_act(g, z, m, budget).unwrap()
}

fn rel_then(
    m: &TriSurface<QuadNum>,
    z: &QuadNum,
    g: &Mat2<QuadNum>,
    budget: f64,
) -> TriSurface<QuadNum> {
    rel_apply(m, z, budget).unwrap().apply_gl2(g).unwrap()
}

/// A single-singularity genus-2 fixture with no co-circular ambiguity and
/// long horizontal travel space: the golden L sheared a little and
/// stretched horizontally.
fn framed_fixture() -> TriSurface<QuadNum> {
    let m = fixtures::golden_l();
    let g = Mat2::diag(QuadNum::from_int(8), q(1, 8));
    let s = Mat2::shear(q(1, 3));
    m.apply_gl2(&g.mul_mat(&s)).unwrap()
}

#[test]
fn split_creates_shortest_crossing_saddle() {
    let m = framed_fixture();
    let f = FramedH2Surface::from_index(m, 0).unwrap();
    let t = q(1, 2);
    let out = split(&f, &t, default_budget(&f.surface)).unwrap();
    out.validate().unwrap();
    assert_eq!(out.labels.len(), 2);
    assert!(out.area().sub(&f.surface.area()).is_zero());
    // The surgery introduces a crossing saddle of holonomy (t, 0) from ξ2
    // to ξ1, and it is the strictly shortest ξ2→ξ1 crossing (pre-existing
    // loops at the split singularity may become longer crossings).
    let hs = horizontal_saddles(&out, default_budget(&out));
    assert!(hs.complete());
    let (i1, i2) = (out.label_index("xi1").unwrap(), out.label_index("xi2").unwrap());
    let down: Vec<_> = hs
        .saddles
        .iter()
        .filter(|s| s.from == i2 && s.to == i1)
        .collect();
    assert!(!down.is_empty());
    let mut at_t = 0;
    for s in &down {
        let d = s.hol.x.sub(&t);
        if d.is_zero() {
            at_t += 1;
        } else {
            assert!(d.to_f64() > 0.0, "ξ2→ξ1 crossing shorter than t: {:?}", s.hol);
        }
    }
    assert_eq!(at_t, 1, "the crossing at length t must be unique");
}

#[test]
fn collapse_then_split_round_trip() {
    let m = framed_fixture();
    let budget = default_budget(&m);
    for idx in 0..3 {
        for t in [q(1, 4), q(-1, 4), q(1, 1), q(3, 1), q(-3, 1)] {
            let f = FramedH2Surface::from_index(m.clone(), idx).unwrap();
            let split_out = match split(&f, &t, budget) {
                Ok(s) => s,
                Err(RelError::Blocked(..)) => continue,
                Err(e) => panic!("split failed for idx {idx}, t {:?}: {e}", t),
            };
            let back = collapse(&split_out, default_budget(&split_out)).unwrap();
            assert!(
                framed_isomorphic(&f, &back).unwrap(),
                "round trip failed for idx {idx}, t {:?}",
                t
            );
            // And the other composition: splitting again reproduces the
            // two-singularity surface.
            let again = split(&back, &t, budget).unwrap();
            assert_eq!(spectrum(&again, 4), spectrum(&split_out, 4));
        }
    }
}

#[test]
fn collapse_is_shear_equivariant() {
    let m = framed_fixture();
    let f = FramedH2Surface::from_index(m, 1).unwrap();
    let t = q(1, 2);
    let two_sing = split(&f, &t, default_budget(&f.surface)).unwrap();
    let shear = Mat2::shear(q(1, 4));
    let a = collapse(&two_sing.apply_gl2(&shear).unwrap(), default_budget(&two_sing)).unwrap();
    let c = collapse(&two_sing, default_budget(&two_sing)).unwrap();
    let b = FramedH2Surface::new(c.surface.apply_gl2(&shear).unwrap(), c.prong_corner).unwrap();
    assert!(framed_isomorphic(&a, &b).unwrap());
}

#[test]
fn framed_surfaces_distinguish_prongs() {
    let m = framed_fixture();
    let f0 = FramedH2Surface::from_index(m.clone(), 0).unwrap();
    let f1 = FramedH2Surface::from_index(m.clone(), 1).unwrap();
    assert!(framed_isomorphic(&f0, &f0).unwrap());
    // Distinct prongs on this (asymmetric) surface are inequivalent.
    assert!(!framed_isomorphic(&f0, &f1).unwrap());
}

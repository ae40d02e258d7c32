//! Canonical test surfaces: square torus, square-tiled surfaces, the regular
//! decagon with opposite sides identified, L-shaped one-cylinder tables, and
//! a three-cylinder surface with irrationally related moduli.

use crate::exactnum::{ratio, QuadNum};
use crate::surface::{
    slot_prev, Mat2, SingLabel, Slot, SurfaceError, TriSurface, Vec2,
};

type QVec = Vec2<QuadNum>;

fn q(n: i64, d: i64) -> QuadNum {
    QuadNum::from_ratio(n, d)
}

/// a + b√5 with rational parts given as fractions.
fn q5(an: i64, ad: i64, bn: i64, bd: i64) -> QuadNum {
    QuadNum::new(ratio(an, ad), ratio(bn, bd), 5).unwrap()
}

/// Derive vertex labels from the gluing combinatorics: classes of the corner
/// fan, with orders from exact prong counts. Classes are named in order of
/// their smallest corner; `names` overrides the default p0, p1, ….
pub fn infer_labels(
    hol: &[QVec],
    pair: &[Slot],
    names: Option<&[&str]>,
) -> (Vec<usize>, Vec<SingLabel>) {
    let n = hol.len();
    let fan_next = |c: Slot| pair[slot_prev(c)];
    let mut class = vec![usize::MAX; n];
    let mut orbits: Vec<Vec<Slot>> = Vec::new();
    for c0 in 0..n {
        if class[c0] != usize::MAX {
            continue;
        }
        let k = orbits.len();
        let mut orbit = Vec::new();
        let mut c = c0;
        loop {
            class[c] = k;
            orbit.push(c);
            c = fan_next(c);
            if c == c0 {
                break;
            }
        }
        orbits.push(orbit);
    }
    let mut labels = Vec::new();
    for (k, orbit) in orbits.iter().enumerate() {
        let prongs = orbit
            .iter()
            .filter(|&&c| {
                let a = &hol[c];
                let b = hol[slot_prev(c)].neg();
                let ay = a.y.sign();
                (ay == 0 && a.x.sign() > 0) || (ay < 0 && b.y.sign() > 0)
            })
            .count();
        let name = match names {
            Some(ns) => ns[k].to_string(),
            None => format!("p{k}"),
        };
        labels.push(SingLabel { name, order: prongs - 1 });
    }
    (class, labels)
}

/// Surface glued from axis-parallel rectangular cells: cell i has size
/// (w_i, h_i); `right[i]` is the cell glued along its right edge and
/// `up[i]` along its top edge. Heights must agree along horizontal gluings
/// and widths along vertical ones.
pub fn rect_origami(
    cells: &[(QuadNum, QuadNum)],
    right: &[usize],
    up: &[usize],
    names: Option<&[&str]>,
) -> Result<TriSurface<QuadNum>, SurfaceError> {
    let n = cells.len();
    assert!(right.len() == n && up.len() == n);
    let mut hol: Vec<QVec> = Vec::with_capacity(6 * n);
    let mut pair = vec![0usize; 6 * n];
    let mut disc = 0u64;
    for (w, h) in cells {
        for v in [w, h] {
            if v.disc != 0 {
                disc = v.disc;
            }
        }
        let (w, h) = (w.clone(), h.clone());
        // Lower triangle (bl, br, tr) and upper triangle (bl, tr, tl).
        hol.push(Vec2::new(w.clone(), QuadNum::zero()));
        hol.push(Vec2::new(QuadNum::zero(), h.clone()));
        hol.push(Vec2::new(w.neg(), h.neg()));
        hol.push(Vec2::new(w.clone(), h.clone()));
        hol.push(Vec2::new(w.neg(), QuadNum::zero()));
        hol.push(Vec2::new(QuadNum::zero(), h.neg()));
    }
    for i in 0..n {
        let link = |pair: &mut Vec<Slot>, a: Slot, b: Slot| {
            pair[a] = b;
            pair[b] = a;
        };
        link(&mut pair, 6 * i + 2, 6 * i + 3);
        link(&mut pair, 6 * i + 1, 6 * right[i] + 5);
        link(&mut pair, 6 * i + 4, 6 * up[i]);
    }
    let (corner_label, labels) = infer_labels(&hol, &pair, names);
    TriSurface::build(hol, pair, corner_label, labels, disc)
}

/// Square-tiled surface from the two gluing permutations (cell to the right,
/// cell above).
pub fn square_tiled(right: &[usize], up: &[usize]) -> Result<TriSurface<QuadNum>, SurfaceError> {
    let cells: Vec<(QuadNum, QuadNum)> = (0..right.len())
        .map(|_| (QuadNum::one(), QuadNum::one()))
        .collect();
    rect_origami(&cells, right, up, None)
}

/// Unit square torus with one marked point.
pub fn square_torus() -> TriSurface<QuadNum> {
    square_tiled(&[0], &[0]).expect("square torus is valid")
}

/// Genus-1 surface from the lattice Zu ⊕ Zv (positively oriented basis),
/// with one marked point named `name`.
pub fn lattice_torus(u: QVec, v: QVec, name: &str) -> Result<TriSurface<QuadNum>, SurfaceError> {
    let disc = [&u.x, &u.y, &v.x, &v.y]
        .iter()
        .find(|c| c.disc != 0)
        .map(|c| c.disc)
        .unwrap_or(0);
    let hol = vec![
        u.clone(),
        v.clone(),
        u.add(&v).neg(),
        u.add(&v),
        u.neg(),
        v.neg(),
    ];
    let pair = vec![4, 5, 3, 2, 0, 1];
    let (corner_label, labels) = infer_labels(&hol, &pair, Some(&[name]));
    TriSurface::build(hol, pair, corner_label, labels, disc)
}

/// L-shaped surface with three unit squares: cells at (0,0), (1,0), (0,1),
/// opposite sides identified. Lies in the stratum with one order-2 point.
pub fn l_origami_3() -> TriSurface<QuadNum> {
    square_tiled(&[1, 0, 2], &[2, 1, 0]).expect("3-square L is valid")
}

/// L-shaped surface with four squares: three in the bottom row, one above the
/// first.
pub fn l_origami_4() -> TriSurface<QuadNum> {
    square_tiled(&[1, 2, 0, 3], &[3, 1, 2, 0]).expect("4-square L is valid")
}

/// Golden L-shaped table: [0,φ]² ∪ [φ,φ+1]×[0,1] with opposite sides
/// identified, one cone point of angle 6π; coordinates in Q(√5).
pub fn golden_l() -> TriSurface<QuadNum> {
    let phi = crate::exactnum::golden();
    let one = QuadNum::one();
    let cells = vec![
        (phi.clone(), one.clone()), // [0,φ]×[0,1]
        (one.clone(), one.clone()), // [φ,φ+1]×[0,1]
        (
            phi.clone(),
            phi.checked_sub(&one).unwrap(),
        ), // [0,φ]×[1,φ]
    ];
    // Right: cell0 -> cell1 -> cell0 (bottom row), cell2 -> itself.
    // Up: cell0 -> cell2, cell2 -> cell0, cell1 -> itself.
    rect_origami(&cells, &[1, 0, 2], &[2, 1, 0], None).expect("golden L is valid")
}

/// L-shaped table with generic Q(√5) side lengths (big rectangle
/// [0,φ]×[0,φ+1], small [φ,φ+1]×[0,1]); used as a non-eigenform control.
pub fn skew_l() -> TriSurface<QuadNum> {
    let phi = crate::exactnum::golden();
    let one = QuadNum::one();
    let cells = vec![
        (phi.clone(), one.clone()),
        (one.clone(), one.clone()),
        (phi.clone(), phi.clone()), // taller upper rectangle: height φ
    ];
    rect_origami(&cells, &[1, 0, 2], &[2, 1, 0], None).expect("skew L is valid")
}

/// Regular decagon with opposite sides identified, in exact Q(√5)
/// coordinates: the vertical axis is scaled by 1/sin 72° so that every
/// vertex (cos 36k°, sin 36k°/sin 72°) lies in Q(√5)². The horizontal
/// structure (which saddles are horizontal, their left-to-right order) is
/// the same as for the round decagon.
pub fn decagon() -> TriSurface<QuadNum> {
    let c36 = q5(1, 4, 1, 4); // cos 36° = (1+√5)/4
    let c72 = q5(-1, 4, 1, 4); // cos 72° = (√5−1)/4
    let r = q5(-1, 2, 1, 2); // sin 36°/sin 72° = (√5−1)/2
    let one = QuadNum::one();
    let v: Vec<QVec> = vec![
        Vec2::new(c36.clone(), r.clone()),            // v1
        Vec2::new(c72.clone(), one.clone()),          // v2
        Vec2::new(c72.neg(), one.clone()),            // v3
        Vec2::new(c36.neg(), r.clone()),              // v4
        Vec2::new(one.neg(), QuadNum::zero()),        // v5
        Vec2::new(c36.neg(), r.neg()),                // v6
        Vec2::new(c72.neg(), one.neg()),              // v7
        Vec2::new(c72.clone(), one.neg()),            // v8
        Vec2::new(c36.clone(), r.neg()),              // v9
        Vec2::new(one.clone(), QuadNum::zero()),      // v10
    ];
    // Fan triangulation from v10: triangles (v10, v_k, v_{k+1}), k = 1..8.
    let mut hol: Vec<QVec> = Vec::new();
    for k in 1..=8 {
        let vk = &v[k - 1];
        let vk1 = &v[k];
        let v10 = &v[9];
        hol.push(vk.sub(v10));
        hol.push(vk1.sub(vk));
        hol.push(v10.sub(vk1));
    }
    let mut pair = vec![0usize; 24];
    let mut link = |a: Slot, b: Slot| {
        pair[a] = b;
        pair[b] = a;
    };
    for t in 0..7 {
        link(3 * t + 2, 3 * t + 3); // interior spokes v10 -> v_{k+1}
    }
    // Opposite boundary sides: side k is glued to side k+5.
    link(1, 16); // side 1 <-> side 6
    link(4, 19); // side 2 <-> side 7
    link(7, 22); // side 3 <-> side 8
    link(10, 23); // side 4 <-> side 9
    link(13, 0); // side 5 <-> side 10
    // The class containing corner 0 sits at v10 (even-index vertices); name
    // the odd-index class xi1 so the short horizontal saddles run xi1 -> xi2.
    let (corner_label, labels) = infer_labels(&hol, &pair, Some(&["xi2", "xi1"]));
    TriSurface::build(hol, pair, corner_label, labels, 5).expect("decagon is valid")
}

/// Exact rotation sending `dir` to the positive horizontal axis (composed
/// with the scaling by |dir|).
pub fn align_horizontal(
    m: &TriSurface<QuadNum>,
    dir: &QVec,
) -> Result<TriSurface<QuadNum>, SurfaceError> {
    let g = Mat2::new(dir.x.clone(), dir.y.clone(), dir.y.neg(), dir.x.clone());
    m.apply_gl2(&g)
}

/// Decagon rotated so that the periodic direction (√5/2, (√5−3)/2) becomes
/// horizontal. In that direction every saddle connection is a loop at one
/// of the two singularities, so no horizontal saddle joins them.
pub fn tipped_decagon() -> TriSurface<QuadNum> {
    let dir = Vec2::new(q5(0, 1, 1, 2), q5(-3, 2, 1, 2));
    crate::scan::rotate_to_horizontal(&decagon(), &dir).expect("rotation preserves validity")
}

/// Three horizontal cylinders with moduli 1/2, 1, √5 (rational span of
/// dimension 2): a 2×1 bottom cylinder with a 1×1 cylinder over its left
/// half and a 1×√5 cylinder over its right half, tops returning to the
/// bottom. Two singularities of order 1 each; every horizontal saddle is a
/// loop.
pub fn three_cylinder() -> TriSurface<QuadNum> {
    let one = QuadNum::one();
    let s5 = QuadNum::sqrt_disc(5).unwrap();
    let cells = vec![
        (one.clone(), one.clone()),
        (one.clone(), one.clone()),
        (one.clone(), one.clone()),
        (one.clone(), s5),
    ];
    rect_origami(&cells, &[1, 0, 2, 3], &[2, 3, 0, 1], Some(&["xi1", "xi2"]))
        .expect("three-cylinder surface is valid")
}

/// Four-square origami in the same stratum whose horizontal direction
/// decomposes into two cylinders of equal modulus 1/2, with no boundary
/// loops: every horizontal saddle joins the two singularities, so the
/// horizontal diagram is maximal of two-cylinder type and the commensurable
/// moduli make the horocycle orbit periodic.
pub fn type_b_origami() -> TriSurface<QuadNum> {
    square_tiled(&[1, 0, 3, 2], &[2, 0, 1, 3]).expect("type-B origami is valid")
}

/// Scale all holonomies by the rational r (an area-changing similarity).
pub fn scale(m: &TriSurface<QuadNum>, num: i64, den: i64) -> TriSurface<QuadNum> {
    let g = Mat2::new(q(num, den), QuadNum::zero(), QuadNum::zero(), q(num, den));
    m.apply_gl2(&g).expect("positive scaling preserves validity")
}

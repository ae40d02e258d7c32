//! Translation surfaces as labeled oriented triangulations with exact (or
//! float) edge holonomies.
//!
//! A surface is a list of positively oriented triangles; each triangle owns
//! three directed edge *slots*. Slot `3t+i` runs from corner `i` to corner
//! `i+1 (mod 3)` of triangle `t`. Slots are glued in pairs carrying opposite
//! holonomy vectors. Singularities are the vertex classes of the glued
//! complex; cone angles are tracked combinatorially by counting horizontal
//! prongs, never with floating-point angles.

use crate::exactnum::{QuadNum, Rational};
use num_traits::ToPrimitive;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("triangle {0} closure violated: edges do not sum to zero")]
    Closure(usize),
    #[error("triangle {0} has non-positive area")]
    NonPositive(usize),
    #[error("gluing is not a perfect involution at slot {0}")]
    BadGluing(usize),
    #[error("paired slots {0},{1} do not carry opposite holonomies")]
    GluingHolonomy(usize, usize),
    #[error("corner label mismatch in vertex class containing corner {0}")]
    LabelMismatch(usize),
    #[error("label {0} order {1} does not match prong count {2}")]
    OrderMismatch(String, usize, usize),
    #[error("surface is not connected")]
    Disconnected,
    #[error("stratum violates Gauss-Bonnet: orders sum {0}, genus {1}")]
    GaussBonnet(usize, usize),
    #[error("mixed discriminants in holonomy data")]
    MixedDisc,
    #[error("flip target edge has the same triangle on both sides")]
    FlipSameTriangle,
    #[error("flip quadrilateral is not strictly convex at the new diagonal")]
    FlipNonConvex,
    #[error("delaunay flipping did not terminate")]
    DelaunayDiverged,
    #[error("matrix is not orientation preserving (det <= 0)")]
    BadMatrix,
    #[error("{0}")]
    Other(String),
}

/// Coordinate scalar: exact quadratic numbers or float64.
pub trait Coord: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(n: i64, d: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> Option<Self>;
    /// Sign of the real value: exact in exact mode, IEEE sign in float mode.
    fn sign(&self) -> i8;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool {
        self.sign() == 0
    }
}

impl Coord for QuadNum {
    const EXACT: bool = true;
    fn zero() -> Self {
        QuadNum::zero()
    }
    fn one() -> Self {
        QuadNum::one()
    }
    fn from_int(n: i64) -> Self {
        QuadNum::from_int(n)
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        QuadNum::from_ratio(n, d)
    }
    fn add(&self, o: &Self) -> Self {
        self.checked_add(o).expect("disc mismatch in surface arithmetic")
    }
    fn sub(&self, o: &Self) -> Self {
        self.checked_sub(o).expect("disc mismatch in surface arithmetic")
    }
    fn mul(&self, o: &Self) -> Self {
        self.checked_mul(o).expect("disc mismatch in surface arithmetic")
    }
    fn neg(&self) -> Self {
        QuadNum::neg(self)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o).ok()
    }
    fn sign(&self) -> i8 {
        QuadNum::sign(self)
    }
    fn to_f64(&self) -> f64 {
        QuadNum::to_f64(self)
    }
}

impl Coord for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, o: &Self) -> Option<Self> {
        if *o == 0.0 {
            None
        } else {
            Some(self / o)
        }
    }
    fn sign(&self) -> i8 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Planar vector with coordinates in the scalar type.
#[derive(Clone, PartialEq)]
pub struct Vec2<K> {
    pub x: K,
    pub y: K,
}

impl<K: Coord> Vec2<K> {
    pub fn new(x: K, y: K) -> Self {
        Vec2 { x, y }
    }
    pub fn zero() -> Self {
        Vec2 { x: K::zero(), y: K::zero() }
    }
    pub fn add(&self, o: &Self) -> Self {
        Vec2::new(self.x.add(&o.x), self.y.add(&o.y))
    }
    pub fn sub(&self, o: &Self) -> Self {
        Vec2::new(self.x.sub(&o.x), self.y.sub(&o.y))
    }
    pub fn neg(&self) -> Self {
        Vec2::new(self.x.neg(), self.y.neg())
    }
    pub fn scale(&self, s: &K) -> Self {
        Vec2::new(self.x.mul(s), self.y.mul(s))
    }
    pub fn cross(&self, o: &Self) -> K {
        self.x.mul(&o.y).sub(&self.y.mul(&o.x))
    }
    pub fn dot(&self, o: &Self) -> K {
        self.x.mul(&o.x).add(&self.y.mul(&o.y))
    }
    pub fn norm2(&self) -> K {
        self.dot(self)
    }
    pub fn len(&self) -> f64 {
        self.norm2().to_f64().sqrt()
    }
    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
    pub fn to_f64(&self) -> Vec2<f64> {
        Vec2 { x: self.x.to_f64(), y: self.y.to_f64() }
    }
}

impl<K: Coord> fmt::Debug for Vec2<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.x, self.y)
    }
}

/// 2x2 real matrix acting on holonomy vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat2<K> {
    pub a: K,
    pub b: K,
    pub c: K,
    pub d: K,
}

impl<K: Coord> Mat2<K> {
    pub fn new(a: K, b: K, c: K, d: K) -> Self {
        Mat2 { a, b, c, d }
    }
    pub fn identity() -> Self {
        Mat2::new(K::one(), K::zero(), K::zero(), K::one())
    }
    pub fn det(&self) -> K {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }
    pub fn apply(&self, v: &Vec2<K>) -> Vec2<K> {
        Vec2::new(
            self.a.mul(&v.x).add(&self.b.mul(&v.y)),
            self.c.mul(&v.x).add(&self.d.mul(&v.y)),
        )
    }
    pub fn mul_mat(&self, o: &Self) -> Self {
        Mat2::new(
            self.a.mul(&o.a).add(&self.b.mul(&o.c)),
            self.a.mul(&o.b).add(&self.b.mul(&o.d)),
            self.c.mul(&o.a).add(&self.d.mul(&o.c)),
            self.c.mul(&o.b).add(&self.d.mul(&o.d)),
        )
    }
    /// Horocycle shear u_s = [[1, s], [0, 1]].
    pub fn shear(s: K) -> Self {
        Mat2::new(K::one(), s, K::zero(), K::one())
    }
    /// Diagonal matrix diag(p, q).
    pub fn diag(p: K, q: K) -> Self {
        Mat2::new(p, K::zero(), K::zero(), q)
    }
}

impl Mat2<f64> {
    /// Geodesic flow g_t = diag(e^{t/2}, e^{-t/2}).
    pub fn geodesic(t: f64) -> Self {
        Mat2::diag((t / 2.0).exp(), (-t / 2.0).exp())
    }
    /// Rotation r_theta = [[cos, -sin], [sin, cos]].
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }
}

/// Singularity label: a name and the order a (cone angle 2π(a+1)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingLabel {
    pub name: String,
    pub order: usize,
}

/// Directed edge slot id; slot 3t+i runs from corner i to corner i+1 of
/// triangle t.
pub type Slot = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct TriSurface<K: Coord> {
    /// Holonomy vector per slot; paired slots carry opposite vectors.
    pub hol: Vec<Vec2<K>>,
    /// Gluing involution on slots.
    pub pair: Vec<Slot>,
    /// Label index of the vertex at the tail of each slot.
    pub corner_label: Vec<usize>,
    pub labels: Vec<SingLabel>,
    /// Discriminant of the coordinate field (exact mode), 0 for Q.
    pub disc: u64,
}

pub fn slot(t: usize, i: usize) -> Slot {
    3 * t + i % 3
}

pub fn slot_tri(s: Slot) -> usize {
    s / 3
}

pub fn slot_next(s: Slot) -> Slot {
    3 * (s / 3) + (s + 1) % 3
}

pub fn slot_prev(s: Slot) -> Slot {
    3 * (s / 3) + (s + 2) % 3
}

impl<K: Coord> TriSurface<K> {
    pub fn n_triangles(&self) -> usize {
        self.hol.len() / 3
    }

    pub fn n_slots(&self) -> usize {
        self.hol.len()
    }

    /// Build and fully validate a surface.
    pub fn build(
        hol: Vec<Vec2<K>>,
        pair: Vec<Slot>,
        corner_label: Vec<usize>,
        labels: Vec<SingLabel>,
        disc: u64,
    ) -> Result<Self, SurfaceError> {
        let m = TriSurface { hol, pair, corner_label, labels, disc };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SurfaceError> {
        let n = self.hol.len();
        if n == 0 || n % 3 != 0 || self.pair.len() != n || self.corner_label.len() != n {
            return Err(SurfaceError::Other("inconsistent slot table sizes".into()));
        }
        // In float mode, residuals up to a small multiple of the coordinate
        // scale are accepted; in exact mode they must vanish identically.
        let scale = self
            .hol
            .iter()
            .map(|v| v.to_f64().norm2())
            .fold(1.0f64, f64::max)
            .sqrt();
        let near_zero = |v: &Vec2<K>| {
            if K::EXACT {
                v.is_zero()
            } else {
                v.to_f64().norm2().sqrt() <= 1e-9 * scale
            }
        };
        for s in 0..n {
            let p = self.pair[s];
            if p >= n || p == s || self.pair[p] != s {
                return Err(SurfaceError::BadGluing(s));
            }
            if !near_zero(&self.hol[s].add(&self.hol[p])) {
                return Err(SurfaceError::GluingHolonomy(s, p));
            }
        }
        for t in 0..n / 3 {
            let sum = self.hol[slot(t, 0)]
                .add(&self.hol[slot(t, 1)])
                .add(&self.hol[slot(t, 2)]);
            if !near_zero(&sum) {
                return Err(SurfaceError::Closure(t));
            }
            if self.triangle_area2(t).sign() <= 0 {
                return Err(SurfaceError::NonPositive(t));
            }
        }
        // Connectivity over triangle adjacency.
        let mut seen = vec![false; n / 3];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let t2 = slot_tri(self.pair[slot(t, i)]);
                if !seen[t2] {
                    seen[t2] = true;
                    stack.push(t2);
                }
            }
        }
        if seen.iter().any(|&x| !x) {
            return Err(SurfaceError::Disconnected);
        }
        // Vertex classes: all corners of a class share one label, each label
        // is used by exactly one class, and prong counts match orders.
        let classes = self.vertex_classes();
        let mut label_seen = vec![false; self.labels.len()];
        for class in &classes {
            let lab = self.corner_label[class[0]];
            if lab >= self.labels.len() {
                return Err(SurfaceError::LabelMismatch(class[0]));
            }
            for &c in class {
                if self.corner_label[c] != lab {
                    return Err(SurfaceError::LabelMismatch(c));
                }
            }
            if label_seen[lab] {
                return Err(SurfaceError::LabelMismatch(class[0]));
            }
            label_seen[lab] = true;
            let prongs = self.count_prongs_class(class);
            let want = self.labels[lab].order + 1;
            if prongs != want {
                return Err(SurfaceError::OrderMismatch(
                    self.labels[lab].name.clone(),
                    self.labels[lab].order,
                    prongs,
                ));
            }
        }
        if label_seen.iter().any(|&x| !x) {
            return Err(SurfaceError::Other("unused singularity label".into()));
        }
        // Gauss-Bonnet: sum of orders = 2g - 2 + 2·(number of marked points
        // counted with order 0 contributes 0), via Euler characteristic.
        let f = n / 3;
        let e = n / 2;
        let v = classes.len();
        let chi = v as i64 - e as i64 + f as i64;
        // chi = 2 - 2g
        if chi > 2 || (2 - chi) % 2 != 0 {
            return Err(SurfaceError::Other(format!("bad Euler characteristic {chi}")));
        }
        let genus = ((2 - chi) / 2) as usize;
        let orders: usize = self.labels.iter().map(|l| l.order).sum();
        if genus == 0 || orders != 2 * genus - 2 {
            return Err(SurfaceError::GaussBonnet(orders, genus));
        }
        Ok(())
    }

    /// Twice the signed area of triangle t.
    pub fn triangle_area2(&self, t: usize) -> K {
        self.hol[slot(t, 0)].cross(&self.hol[slot(t, 1)])
    }

    /// Total flat area.
    pub fn area(&self) -> K {
        let mut acc = K::zero();
        let half = K::from_ratio(1, 2);
        for t in 0..self.n_triangles() {
            acc = acc.add(&self.triangle_area2(t).mul(&half));
        }
        acc
    }

    /// Next corner counterclockwise around the vertex of corner `c`.
    pub fn fan_next(&self, c: Slot) -> Slot {
        self.pair[slot_prev(c)]
    }

    /// Previous corner (clockwise) around the vertex of corner `c`.
    pub fn fan_prev(&self, c: Slot) -> Slot {
        slot_next(self.pair[c])
    }

    /// The two boundary rays of corner `c`: from `a` counterclockwise to `b`,
    /// spanning the interior angle (< π).
    pub fn corner_rays(&self, c: Slot) -> (Vec2<K>, Vec2<K>) {
        (self.hol[c].clone(), self.hol[slot_prev(c)].neg())
    }

    /// Orbits of corners under the fan rotation; each orbit is one vertex of
    /// the glued surface, listed in counterclockwise cyclic order.
    pub fn vertex_classes(&self) -> Vec<Vec<Slot>> {
        let n = self.n_slots();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for c0 in 0..n {
            if seen[c0] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut c = c0;
            loop {
                seen[c] = true;
                orbit.push(c);
                c = self.fan_next(c);
                if c == c0 {
                    break;
                }
            }
            out.push(orbit);
        }
        out
    }

    /// Corners of the vertex class carrying label `lab`, in fan order.
    pub fn class_of_label(&self, lab: usize) -> Vec<Slot> {
        for class in self.vertex_classes() {
            if self.corner_label[class[0]] == lab {
                return class;
            }
        }
        Vec::new()
    }

    /// True when the half-open angular sector [a, b) of corner `c` contains
    /// the direction (1,0); each such corner contributes one right prong.
    pub fn corner_has_right_prong(&self, c: Slot) -> bool {
        let (a, b) = self.corner_rays(c);
        let ay = a.y.sign();
        (ay == 0 && a.x.sign() > 0) || (ay < 0 && b.y.sign() > 0)
    }

    /// True when [a, b) contains the direction (-1, 0).
    pub fn corner_has_left_prong(&self, c: Slot) -> bool {
        let (a, b) = self.corner_rays(c);
        let ay = a.y.sign();
        (ay == 0 && a.x.sign() < 0) || (ay > 0 && b.y.sign() < 0)
    }

    fn count_prongs_class(&self, class: &[Slot]) -> usize {
        class.iter().filter(|&&c| self.corner_has_right_prong(c)).count()
    }

    /// Number of right-pointing horizontal prongs at the labeled singularity
    /// (= order + 1), counted by exact sign tests on the corner fan.
    pub fn count_prongs(&self, lab: usize) -> usize {
        self.count_prongs_class(&self.class_of_label(lab))
    }

    pub fn genus(&self) -> usize {
        let f = self.n_triangles() as i64;
        let e = (self.n_slots() / 2) as i64;
        let v = self.vertex_classes().len() as i64;
        ((2 - (v - e + f)) / 2) as usize
    }

    /// Apply an orientation-preserving linear map to every holonomy.
    pub fn apply_gl2(&self, g: &Mat2<K>) -> Result<Self, SurfaceError> {
        if g.det().sign() <= 0 {
            return Err(SurfaceError::BadMatrix);
        }
        let hol = self.hol.iter().map(|v| g.apply(v)).collect();
        TriSurface::build(
            hol,
            self.pair.clone(),
            self.corner_label.clone(),
            self.labels.clone(),
            self.disc,
        )
    }

    /// One-way conversion to float mode.
    pub fn to_float(&self) -> TriSurface<f64> {
        TriSurface {
            hol: self.hol.iter().map(|v| v.to_f64()).collect(),
            pair: self.pair.clone(),
            corner_label: self.corner_label.clone(),
            labels: self.labels.clone(),
            disc: 0,
        }
    }

    /// Flip the edge carried by slot `s`: replace the diagonal of the
    /// quadrilateral formed by its two adjacent triangles. The flat structure
    /// is unchanged; only the triangulation moves.
    pub fn flip_edge(&self, s: Slot) -> Result<Self, SurfaceError> {
        let sb = self.pair[s];
        let (t, tb) = (slot_tri(s), slot_tri(sb));
        if t == tb {
            return Err(SurfaceError::FlipSameTriangle);
        }
        let d = self.hol[s].clone();
        let p = self.hol[slot_next(s)].clone();
        let q = self.hol[slot_prev(s)].clone();
        let r = self.hol[slot_next(sb)].clone();
        let s2 = self.hol[slot_prev(sb)].clone();
        // Quad corners: X (tail of s), Y = X+d, A = X+d+p (apex of t),
        // B = X+r (apex of the partner). New diagonal n runs B -> A.
        let n_vec = d.add(&p).sub(&r);
        if n_vec.cross(&q).sign() <= 0 || n_vec.neg().cross(&s2).sign() <= 0 {
            return Err(SurfaceError::FlipNonConvex);
        }
        let lab_x = self.corner_label[s];
        let lab_y = self.corner_label[slot_next(s)];
        let lab_a = self.corner_label[slot_prev(s)];
        let lab_b = self.corner_label[slot_prev(sb)];
        let mut m = self.clone();
        // The four quad boundary edges move to new slots; a partner that is
        // itself one of these slots (self-adjacent quad) must follow the
        // same relocation.
        let relocate = |e: Slot| -> Slot {
            if e == slot_prev(s) {
                slot_next(s)
            } else if e == slot_next(sb) {
                slot_prev(s)
            } else if e == slot_next(s) {
                slot_prev(sb)
            } else if e == slot_prev(sb) {
                slot_next(sb)
            } else {
                e
            }
        };
        // New triangle at t: (n, q, r) with tails (B, A, X).
        let ext_q = relocate(self.pair[slot_prev(s)]);
        let ext_r = relocate(self.pair[slot_next(sb)]);
        let ext_p = relocate(self.pair[slot_next(s)]);
        let ext_s2 = relocate(self.pair[slot_prev(sb)]);
        m.hol[s] = n_vec.clone();
        m.hol[slot_next(s)] = q;
        m.hol[slot_prev(s)] = r;
        m.corner_label[s] = lab_b;
        m.corner_label[slot_next(s)] = lab_a;
        m.corner_label[slot_prev(s)] = lab_x;
        // New triangle at tb: (-n, s2, p) with tails (A, B, Y).
        m.hol[sb] = n_vec.neg();
        m.hol[slot_next(sb)] = s2;
        m.hol[slot_prev(sb)] = p;
        m.corner_label[sb] = lab_a;
        m.corner_label[slot_next(sb)] = lab_b;
        m.corner_label[slot_prev(sb)] = lab_y;
        // Re-pair: diagonal stays (s, sb); externals follow their edges.
        let relink = |m: &mut TriSurface<K>, a: Slot, b: Slot| {
            m.pair[a] = b;
            m.pair[b] = a;
        };
        relink(&mut m, s, sb);
        relink(&mut m, slot_next(s), ext_q);
        relink(&mut m, slot_prev(s), ext_r);
        relink(&mut m, slot_next(sb), ext_s2);
        relink(&mut m, slot_prev(sb), ext_p);
        debug_assert!(m.validate().is_ok(), "flip produced invalid surface");
        Ok(m)
    }

    /// True when the edge at slot `s` is locally Delaunay (the opposite apex
    /// lies outside or on the circumcircle of the neighbor triangle).
    pub fn edge_is_delaunay(&self, s: Slot) -> bool {
        let sb = self.pair[s];
        if slot_tri(s) == slot_tri(sb) {
            return true;
        }
        let d = &self.hol[s];
        let p = &self.hol[slot_next(s)];
        let r = &self.hol[slot_next(sb)];
        // Points relative to X: O = (0,0), Y = d, A = d+p (ccw triangle
        // O,Y,A), query point B = r. In-circle via the lifted determinant.
        let o = Vec2::<K>::zero();
        let y = d.clone();
        let a = d.add(p);
        let b = r.clone();
        let det = incircle(&o, &y, &a, &b);
        if K::EXACT {
            return det.sign() <= 0;
        }
        // Float mode: the determinant is degree four in the edge lengths, so
        // judge it against a matching scale. Near-cocircular edges count as
        // Delaunay; a strict sign test would make the flip loop oscillate.
        let scale = {
            let s = d.x.to_f64().hypot(d.y.to_f64()).powi(2)
                + p.x.to_f64().hypot(p.y.to_f64()).powi(2)
                + r.x.to_f64().hypot(r.y.to_f64()).powi(2);
            s * s
        };
        det.to_f64() <= 1e-10 * scale
    }

    /// Flip to the Delaunay triangulation of the flat metric. Co-circular
    /// configurations are left as-is (strict predicate), so the result is
    /// canonical up to flips inside co-circular cells.
    pub fn make_delaunay(&self) -> Result<Self, SurfaceError> {
        let mut m = self.clone();
        let cap = 60 * m.n_slots() * m.n_slots() + 1000;
        let mut steps = 0usize;
        loop {
            let mut flipped = false;
            for s in 0..m.n_slots() {
                if m.pair[s] < s {
                    continue; // visit each edge once
                }
                if !m.edge_is_delaunay(s) {
                    match m.flip_edge(s) {
                        Ok(next) => {
                            m = next;
                            flipped = true;
                            steps += 1;
                            if steps > cap {
                                return Err(SurfaceError::DelaunayDiverged);
                            }
                        }
                        Err(SurfaceError::FlipSameTriangle) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            if !flipped {
                return Ok(m);
            }
        }
    }

    /// Translation isomorphism search: a bijection of triangles matching
    /// holonomies exactly and singularity labels by name, seeded by mapping
    /// slot 0 to each slot of `other`. Returns the slot image of slot 0.
    pub fn translation_isomorphism(&self, other: &Self) -> Option<Vec<Slot>> {
        if self.n_slots() != other.n_slots() || self.labels.len() != other.labels.len() {
            return None;
        }
        'seed: for seed in 0..other.n_slots() {
            let mut map = vec![usize::MAX; self.n_slots()];
            let mut stack = vec![(0usize, seed)];
            while let Some((a, b)) = stack.pop() {
                // Map the whole triangle of a onto the triangle of b with the
                // rotation aligning a to b.
                for k in 0..3 {
                    let sa = 3 * (a / 3) + (a + k) % 3;
                    let sb = 3 * (b / 3) + (b + k) % 3;
                    if map[sa] != usize::MAX {
                        if map[sa] != sb {
                            continue 'seed;
                        }
                        continue;
                    }
                    if self.hol[sa] != other.hol[sb] {
                        continue 'seed;
                    }
                    if self.labels[self.corner_label[sa]].order
                        != other.labels[other.corner_label[sb]].order
                    {
                        continue 'seed;
                    }
                    map[sa] = sb;
                    stack.push((self.pair[sa], other.pair[sb]));
                }
            }
            if map.iter().all(|&x| x != usize::MAX) {
                return Some(map);
            }
        }
        None
    }

    /// Equality of the underlying flat surfaces up to retriangulation,
    /// decided on Delaunay forms. Co-circular configurations make the
    /// Delaunay form ambiguous, so on failure both surfaces are sheared by
    /// a common small amount (which breaks co-circularity but preserves
    /// isomorphy) and compared again.
    pub fn flip_equivalent(&self, other: &Self) -> Result<bool, SurfaceError> {
        for den in [0i64, 64, 67, 71] {
            let (a, b) = if den == 0 {
                (self.clone(), other.clone())
            } else {
                let g = Mat2::shear(K::from_ratio(1, den));
                (self.apply_gl2(&g)?, other.apply_gl2(&g)?)
            };
            let a = a.make_delaunay()?;
            let b = b.make_delaunay()?;
            if a.translation_isomorphism(&b).is_some() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Longest edge length (float), used for default budgets.
    pub fn longest_edge(&self) -> f64 {
        self.hol
            .iter()
            .map(|v| v.len())
            .fold(0.0, f64::max)
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.name == name)
    }
}

/// Lifted in-circle determinant for ccw triangle (p1,p2,p3) and query q:
/// positive when q is strictly inside the circumcircle.
pub fn incircle<K: Coord>(p1: &Vec2<K>, p2: &Vec2<K>, p3: &Vec2<K>, q: &Vec2<K>) -> K {
    let m = |p: &Vec2<K>| {
        let dx = p.x.sub(&q.x);
        let dy = p.y.sub(&q.y);
        let w = dx.mul(&dx).add(&dy.mul(&dy));
        (dx, dy, w)
    };
    let (a1, a2, a3) = m(p1);
    let (b1, b2, b3) = m(p2);
    let (c1, c2, c3) = m(p3);
    let det = a1
        .mul(&b2.mul(&c3).sub(&b3.mul(&c2)))
        .sub(&a2.mul(&b1.mul(&c3).sub(&b3.mul(&c1))))
        .add(&a3.mul(&b1.mul(&c2).sub(&b2.mul(&c1))));
    det
}

/// Convenience: exact rational scalar from a `Rational`.
pub fn quad_from_rational(r: Rational) -> QuadNum {
    QuadNum::from_rational(r)
}

/// Float helper with tolerance comparisons for tests and float-mode checks.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Convert an exact rational to f64 (used by fixture builders).
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

//! Horizontal Rel deformations: the exact domain of definition, the
//! deformation itself (straight-line motion in period coordinates with edge
//! flips along the path), the combined shear-and-Rel action, and the
//! collapse/split surgeries connecting the two-singularity genus-2 stratum
//! to the single-singularity one.
//!
//! Throughout, the deformation moves the singularity class `xi2`
//! horizontally by `t` while `xi1` (and any marked points) stay fixed:
//! every triangulation edge from class `i` to class `j` gains
//! `(z_j - z_i, 0)` where `z` is supported on `xi2`. Absolute periods are
//! unchanged, so every triangle's area varies linearly in the path
//! parameter; steps are sized exactly so no triangle degenerates before an
//! edge flip restores a valid triangulation.

use crate::scan::{
    self, horizontal_saddles, insert_saddle_edge, prong_germs, sector_contains, Slot,
};
use crate::surface::{slot_next, slot_prev, slot_tri, Coord, Mat2, SurfaceError, TriSurface, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelError {
    #[error("parameter {t} outside Rel domain {domain}")]
    OutsideDomain { t: f64, domain: String },
    #[error("deformation stalled at parameter {0}")]
    Stalled(f64),
    #[error("horizontal structure unresolved within budget; cannot certify the operation")]
    Undetermined,
    #[error("blocking horizontal saddle of length {0} (≤ {1})")]
    Blocked(f64, f64),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Interval of definition (-a, b) of the horizontal deformation moving
/// `xi2`. `None` means unbounded on that side; `certified` is false when
/// some horizontal separatrix exceeded the scan budget and an unbounded
/// side is therefore only conjectural.
#[derive(Debug, Clone)]
pub struct RelDomain<K: Coord> {
    /// a: the deformation is defined for t > -a (collapse of an edge into
    /// `xi2` at t = -a).
    pub neg: Option<K>,
    /// b: defined for t < b.
    pub pos: Option<K>,
    pub certified: bool,
}

impl<K: Coord> RelDomain<K> {
    pub fn contains(&self, t: &K) -> bool {
        match t.sign() {
            0 => true,
            1 => self.pos.as_ref().map_or(true, |b| t.sub(b).sign() < 0),
            _ => self.neg.as_ref().map_or(true, |a| t.neg().sub(a).sign() < 0),
        }
    }

    pub fn describe(&self) -> String {
        let lo = self
            .neg
            .as_ref()
            .map_or("-inf".to_string(), |a| format!("{}", -a.to_f64()));
        let hi = self
            .pos
            .as_ref()
            .map_or("inf".to_string(), |b| format!("{}", b.to_f64()));
        format!("({lo}, {hi})")
    }
}

/// The fixed and moving singularity classes: labels named "xi1"/"xi2" when
/// present, otherwise the first two labels of a two-label surface.
pub fn xi_labels<K: Coord>(m: &TriSurface<K>) -> Result<(usize, usize), RelError> {
    match (m.label_index("xi1"), m.label_index("xi2")) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ if m.labels.len() == 2 => Ok((0, 1)),
        _ => Err(RelError::Unsupported(
            "need labels xi1/xi2 or exactly two singularities".into(),
        )),
    }
}

fn min_update<K: Coord>(slot: &mut Option<K>, c: K) {
    match slot {
        None => *slot = Some(c),
        Some(cur) => {
            if c.sub(cur).sign() < 0 {
                *slot = Some(c);
            }
        }
    }
}

/// Exact interval of definition of the horizontal deformation of `xi2`.
/// Horizontal saddles leaving `xi2` bound the positive side at their
/// length, those arriving bound the negative side; loops never constrain.
/// Every saddle of length within the budget is found, so a returned bound
/// is always exact; an unbounded side is certified only when every
/// horizontal separatrix closed within the budget.
pub fn rel_domain<K: Coord>(m: &TriSurface<K>, budget: f64) -> Result<RelDomain<K>, RelError> {
    let (_, xi2) = xi_labels(m)?;
    let hs = horizontal_saddles(m, budget);
    let mut neg: Option<K> = None;
    let mut pos: Option<K> = None;
    for s in &hs.saddles {
        if (s.from == xi2) == (s.to == xi2) {
            continue; // loop at xi2 or saddle not touching xi2
        }
        if s.from == xi2 {
            min_update(&mut pos, s.hol.x.clone());
        } else {
            min_update(&mut neg, s.hol.x.clone());
        }
    }
    let certified = hs.complete() || (neg.is_some() && pos.is_some());
    Ok(RelDomain { neg, pos, certified })
}

/// Surgery bookkeeping for the deformation engine: a protected edge from
/// `xi2` to `xi1` whose horizontal length moves from `x0` at the start to
/// `x0 + (z1 - z2)` at the end. Its two adjacent triangles may start at
/// zero area (split) or end at zero area (collapse).
struct Surgery<K: Coord> {
    xi1: usize,
    xi2: usize,
    x0: K,
    start_zero: bool,
    end_zero: bool,
}

impl<K: Coord> Surgery<K> {
    fn expected_x(&self, u: &K, zw: &[K]) -> K {
        let gain = zw[self.xi1].sub(&zw[self.xi2]);
        self.x0.add(&u.mul(&gain))
    }

    fn is_protected(&self, m: &TriSurface<K>, s: Slot, expect: &K) -> bool {
        let tail = m.corner_label[s];
        let head = m.corner_label[slot_next(s)];
        if !m.hol[s].y.is_zero() {
            return false;
        }
        (tail == self.xi2 && head == self.xi1 && m.hol[s].x.sub(expect).is_zero())
            || (tail == self.xi1 && head == self.xi2 && m.hol[s].x.add(expect).is_zero())
    }

    fn find(&self, m: &TriSurface<K>, u: &K, zw: &[K]) -> Result<Slot, RelError> {
        let expect = self.expected_x(u, zw);
        let mut found = None;
        for s in 0..m.n_slots() {
            if m.corner_label[s] == self.xi2
                && m.corner_label[slot_next(s)] == self.xi1
                && m.hol[s].y.is_zero()
                && m.hol[s].x.sub(&expect).is_zero()
            {
                if found.is_some() {
                    return Err(RelError::Unsupported(
                        "ambiguous collapse edge (multiple identical edges)".into(),
                    ));
                }
                found = Some(s);
            }
        }
        found.ok_or_else(|| RelError::Unsupported("lost track of the collapse edge".into()))
    }
}

/// One round of flips to the local optimality criterion, skipping the
/// protected edge; returns whether anything was flipped.
fn delaunay_pass_skip<K: Coord>(
    m: &mut TriSurface<K>,
    skip: &dyn Fn(&TriSurface<K>, Slot) -> bool,
) -> Result<bool, RelError> {
    let n = m.n_slots();
    let cap = 60 * n * n + 1000;
    let mut steps = 0usize;
    let mut any = false;
    loop {
        let mut flipped = false;
        for s in 0..n {
            if m.pair[s] < s || skip(m, s) {
                continue;
            }
            if !m.edge_is_delaunay(s) {
                match m.flip_edge(s) {
                    Ok(next) => {
                        *m = next;
                        flipped = true;
                        any = true;
                        steps += 1;
                        if steps > cap {
                            return Err(RelError::Surface(SurfaceError::DelaunayDiverged));
                        }
                    }
                    Err(SurfaceError::FlipSameTriangle) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if !flipped {
            return Ok(any);
        }
    }
}

/// Core path integrator. `zw` assigns each label its total horizontal
/// displacement. Returns the deformed surface; when `surgery.end_zero` the
/// result has two zero-area triangles adjacent to the protected edge and is
/// *not* validated.
fn rel_engine<K: Coord>(
    start: &TriSurface<K>,
    zw: &[K],
    surgery: Option<&Surgery<K>>,
) -> Result<TriSurface<K>, RelError> {
    let one = K::one();
    let half = K::from_ratio(1, 2);
    let mut cur = start.clone();
    let mut u = K::zero();
    let cap = 400 * start.n_slots() + 4000;
    for _ in 0..cap {
        if u.sub(&one).is_zero() {
            return Ok(cur);
        }
        let rem = one.sub(&u);
        let nsl = cur.n_slots();
        let d: Vec<K> = (0..nsl)
            .map(|s| zw[cur.corner_label[slot_next(s)]].sub(&zw[cur.corner_label[s]]))
            .collect();
        let desig: [usize; 2] = match surgery {
            Some(sg) => {
                let p = sg.find(&cur, &u, zw)?;
                [slot_tri(p), slot_tri(cur.pair[p])]
            }
            None => [usize::MAX, usize::MAX],
        };
        // Each triangle's doubled area is linear along the path:
        // q(σ) = c + b·σ with c the current area and b from the horizontal
        // increments.
        let mut strict: Option<K> = None;
        for t in 0..nsl / 3 {
            let (s0, s1) = (3 * t, 3 * t + 1);
            let h0 = &cur.hol[s0];
            let h1 = &cur.hol[s1];
            let c = h0.cross(h1);
            let b = d[s0].mul(&h1.y).sub(&h0.y.mul(&d[s1]));
            let is_desig = t == desig[0] || t == desig[1];
            match c.sign() {
                0 => {
                    let ok = is_desig
                        && u.is_zero()
                        && surgery.map_or(false, |sg| sg.start_zero)
                        && b.sign() > 0;
                    if !ok {
                        return Err(RelError::Stalled(u.to_f64()));
                    }
                    continue;
                }
                s if s < 0 => return Err(RelError::Stalled(u.to_f64())),
                _ => {}
            }
            if b.sign() >= 0 {
                continue;
            }
            let limit = c.div(&b.neg()).expect("negative slope");
            if is_desig && surgery.map_or(false, |sg| sg.end_zero) {
                // The surgery triangles must vanish exactly at the end of
                // the path; a limit at or past `rem` permits the full step.
                if limit.sub(&rem).sign() >= 0 {
                    continue;
                }
            }
            min_update(&mut strict, limit);
        }
        let full = match &strict {
            None => true,
            Some(l) => l.sub(&rem).sign() > 0,
        };
        if full {
            for s in 0..nsl {
                if !d[s].is_zero() {
                    cur.hol[s].x = cur.hol[s].x.add(&d[s].mul(&rem));
                }
            }
            u = one.clone();
            continue;
        }
        let h = strict.unwrap().mul(&half);
        if h.sign() <= 0 {
            return Err(RelError::Stalled(u.to_f64()));
        }
        for s in 0..nsl {
            if !d[s].is_zero() {
                cur.hol[s].x = cur.hol[s].x.add(&d[s].mul(&h));
            }
        }
        u = u.add(&h);
        // Restore local optimality so the next step can move further; the
        // protected edge itself is never flipped.
        let u_now = u.clone();
        let skip = |m: &TriSurface<K>, s: Slot| -> bool {
            surgery.map_or(false, |sg| {
                let expect = sg.expected_x(&u_now, zw);
                sg.is_protected(m, s, &expect)
            })
        };
        delaunay_pass_skip(&mut cur, &skip)?;
    }
    Err(RelError::Stalled(u.to_f64()))
}

/// Deform the surface by moving `xi2` horizontally by `t`. The parameter
/// must lie in the open interval of definition; the scan budget is used to
/// certify the domain.
pub fn rel_apply<K: Coord>(
    m: &TriSurface<K>,
    t: &K,
    budget: f64,
) -> Result<TriSurface<K>, RelError> {
    if t.is_zero() {
        return Ok(m.clone());
    }
    let dom = rel_domain(m, budget)?;
    if !dom.contains(t) {
        return Err(RelError::OutsideDomain {
            t: t.to_f64(),
            domain: dom.describe(),
        });
    }
    let (_, xi2) = xi_labels(m)?;
    let mut zw = vec![K::zero(); m.labels.len()];
    zw[xi2] = t.clone();
    rel_engine(m, &zw, None)
}

/// Combined action (b, z)·M = Rel_z(bM) of an upper-triangular
/// determinant-one matrix followed by the horizontal deformation.
pub fn n_act<K: Coord>(
    b: &Mat2<K>,
    z: &K,
    m: &TriSurface<K>,
    budget: f64,
) -> Result<TriSurface<K>, RelError> {
    if !b.c.is_zero() {
        return Err(RelError::Unsupported("matrix must be upper triangular".into()));
    }
    if !b.det().sub(&K::one()).is_zero() {
        return Err(RelError::Unsupported("matrix must have determinant 1".into()));
    }
    let sheared = m.apply_gl2(b)?;
    rel_apply(&sheared, z, budget)
}

/// A genus-2 surface with a single cone point of angle 6π together with a
/// choice of one of its three right-pointing horizontal prongs, recorded as
/// the corner whose angular sector contains the direction (1,0).
#[derive(Debug, Clone)]
pub struct FramedH2Surface<K: Coord> {
    pub surface: TriSurface<K>,
    pub prong_corner: Slot,
}

impl<K: Coord> FramedH2Surface<K> {
    pub fn new(surface: TriSurface<K>, prong_corner: Slot) -> Result<Self, RelError> {
        let lab = *surface
            .corner_label
            .get(prong_corner)
            .ok_or_else(|| RelError::Unsupported("prong corner out of range".into()))?;
        if surface.labels[lab].order != 2 {
            return Err(RelError::Unsupported(
                "framed prong must sit at the order-2 singularity".into(),
            ));
        }
        if !surface.corner_has_right_prong(prong_corner) {
            return Err(RelError::Unsupported(
                "corner does not carry a right-pointing horizontal prong".into(),
            ));
        }
        Ok(FramedH2Surface { surface, prong_corner })
    }

    /// The three right-prong corners at the singularity, in fan order
    /// starting from the class's smallest corner.
    pub fn right_prong_corners(&self) -> Vec<Slot> {
        let lab = self.surface.corner_label[self.prong_corner];
        self.surface
            .class_of_label(lab)
            .into_iter()
            .filter(|&c| self.surface.corner_has_right_prong(c))
            .collect()
    }

    /// Index of the selected prong among the three right prongs.
    pub fn prong_index(&self) -> usize {
        self.right_prong_corners()
            .iter()
            .position(|&c| c == self.prong_corner)
            .expect("prong corner is a right prong")
    }

    /// Build a framing from a prong index in {0, 1, 2}.
    pub fn from_index(surface: TriSurface<K>, index: usize) -> Result<Self, RelError> {
        let lab = surface
            .labels
            .iter()
            .position(|l| l.order == 2)
            .ok_or_else(|| RelError::Unsupported("no order-2 singularity".into()))?;
        let prongs: Vec<Slot> = surface
            .class_of_label(lab)
            .into_iter()
            .filter(|&c| surface.corner_has_right_prong(c))
            .collect();
        let &corner = prongs
            .get(index)
            .ok_or_else(|| RelError::Unsupported(format!("prong index {index} out of range")))?;
        FramedH2Surface::new(surface, corner)
    }
}

/// Flip to the locally optimal triangulation while tracking a corner germ
/// pointing in direction `dir`.
pub fn delaunay_tracked<K: Coord>(
    m: &TriSurface<K>,
    corner: Slot,
    dir: &Vec2<K>,
) -> Result<(TriSurface<K>, Slot), SurfaceError> {
    let mut cur = m.clone();
    let mut c = corner;
    let n = cur.n_slots();
    let cap = 60 * n * n + 1000;
    let mut steps = 0usize;
    loop {
        let mut flipped = false;
        for s in 0..n {
            if cur.pair[s] < s {
                continue;
            }
            if !cur.edge_is_delaunay(s) {
                match cur.flip_edge(s) {
                    Ok(next) => {
                        c = scan::map_corner_after_flip(&cur, &next, s, c, dir);
                        cur = next;
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
            return Ok((cur, c));
        }
    }
}

/// Translation isomorphism seeded at a fixed slot correspondence; an
/// isomorphism, if it exists, is determined by where one slot goes.
fn iso_from_seed<K: Coord>(a: &TriSurface<K>, b: &TriSurface<K>, sa: Slot, sb: Slot) -> bool {
    if a.n_slots() != b.n_slots() {
        return false;
    }
    let mut map = vec![usize::MAX; a.n_slots()];
    let mut stack = vec![(sa, sb)];
    while let Some((x, y)) = stack.pop() {
        for k in 0..3 {
            let xa = 3 * (x / 3) + (x + k) % 3;
            let yb = 3 * (y / 3) + (y + k) % 3;
            if map[xa] != usize::MAX {
                if map[xa] != yb {
                    return false;
                }
                continue;
            }
            if a.hol[xa] != b.hol[yb]
                || a.labels[a.corner_label[xa]].order != b.labels[b.corner_label[yb]].order
            {
                return false;
            }
            map[xa] = yb;
            stack.push((a.pair[xa], b.pair[yb]));
        }
    }
    map.iter().all(|&v| v != usize::MAX)
}

/// Equality of framed surfaces: a translation isomorphism of the locally
/// optimal forms carrying one selected prong to the other. Horizontal
/// shears preserve the framing, so co-circular ambiguity is broken the same
/// way as in `flip_equivalent`.
pub fn framed_isomorphic<K: Coord>(
    f1: &FramedH2Surface<K>,
    f2: &FramedH2Surface<K>,
) -> Result<bool, RelError> {
    let dir = Vec2::new(K::one(), K::zero());
    for den in [0i64, 64, 67, 71] {
        let (m1, m2) = if den == 0 {
            (f1.surface.clone(), f2.surface.clone())
        } else {
            let g = Mat2::shear(K::from_ratio(1, den));
            (f1.surface.apply_gl2(&g)?, f2.surface.apply_gl2(&g)?)
        };
        let (a, ca) = delaunay_tracked(&m1, f1.prong_corner, &dir)?;
        let (b, cb) = delaunay_tracked(&m2, f2.prong_corner, &dir)?;
        if iso_from_seed(&a, &b, ca, cb) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Remove the zero-length edge `e` (running xi2 → xi1) and its two
/// zero-area adjacent triangles, merging the two singularities. Returns the
/// contracted surface, the old-slot → new-slot map, and the merged label
/// index.
fn contract_edge<K: Coord>(
    m: &TriSurface<K>,
    e: Slot,
    xi1: usize,
    xi2: usize,
) -> Result<(TriSurface<K>, Vec<Option<Slot>>, usize), RelError> {
    let eb = m.pair[e];
    let (t1, t2) = (slot_tri(e), slot_tri(eb));
    if t1 == t2 {
        return Err(RelError::Unsupported("collapse edge bounds one triangle".into()));
    }
    let removed = |s: Slot| slot_tri(s) == t1 || slot_tri(s) == t2;
    // Chasing rule: entering a removed triangle through one of its two
    // nonzero edges exits through the partner of the other (they carry
    // opposite holonomy w, -w).
    let resolve = |mut y: Slot| -> Result<Slot, RelError> {
        for _ in 0..8 {
            if !removed(y) {
                return Ok(y);
            }
            let z = if slot_tri(y) == t1 { e } else { eb };
            let other = if y == slot_next(z) {
                slot_prev(z)
            } else if y == slot_prev(z) {
                slot_next(z)
            } else {
                return Err(RelError::Unsupported("chase reached the collapse edge".into()));
            };
            y = m.pair[other];
        }
        Err(RelError::Unsupported("contraction chase did not terminate".into()))
    };
    // New slot numbering: surviving triangles in order.
    let mut slot_map: Vec<Option<Slot>> = vec![None; m.n_slots()];
    let mut next = 0usize;
    for t in 0..m.n_triangles() {
        if t == t1 || t == t2 {
            continue;
        }
        for i in 0..3 {
            slot_map[3 * t + i] = Some(next);
            next += 1;
        }
    }
    // Label table: merge xi1/xi2 into "o" of the summed order.
    let merged_order = m.labels[xi1].order + m.labels[xi2].order;
    let mut label_map = vec![usize::MAX; m.labels.len()];
    let mut labels = Vec::new();
    for (i, l) in m.labels.iter().enumerate() {
        if i == xi1 || i == xi2 {
            continue;
        }
        label_map[i] = labels.len();
        labels.push(l.clone());
    }
    let merged = labels.len();
    label_map[xi1] = merged;
    label_map[xi2] = merged;
    labels.push(crate::surface::SingLabel { name: "o".to_string(), order: merged_order });
    let mut hol = Vec::with_capacity(next);
    let mut pair = vec![0usize; next];
    let mut corner_label = Vec::with_capacity(next);
    for s in 0..m.n_slots() {
        let Some(ns) = slot_map[s] else { continue };
        hol.push(m.hol[s].clone());
        corner_label.push(label_map[m.corner_label[s]]);
        let q = resolve(m.pair[s])?;
        pair[ns] = slot_map[q].ok_or_else(|| {
            RelError::Unsupported("contraction produced a dangling edge".into())
        })?;
    }
    let out = TriSurface::build(hol, pair, corner_label, labels, m.disc)?;
    Ok((out, slot_map, merged))
}

/// Collapse the unique shortest horizontal saddle joining the two
/// singularities, merging them into one cone point of angle 6π, and record
/// the right-pointing prong one half-turn counterclockwise from where the
/// collapsed saddle arrived.
pub fn collapse<K: Coord>(m: &TriSurface<K>, budget: f64) -> Result<FramedH2Surface<K>, RelError> {
    let (a, b) = xi_labels(m)?;
    let hs = horizontal_saddles(m, budget);
    // Directed saddles leaving one singularity for the other, rightward.
    let from2: Vec<_> = hs.saddles.iter().filter(|s| s.from == b && s.to == a).collect();
    let from1: Vec<_> = hs.saddles.iter().filter(|s| s.from == a && s.to == b).collect();
    // Collapse shrinks the globally shortest crossing saddle, moving its
    // tail singularity rightward onto its head; when that saddle leaves the
    // first label, the roles of the two labels are exchanged.
    let min_x = |v: &[&crate::scan::SaddleConnection<K>]| {
        v.iter().map(|s| s.hol.x.to_f64()).fold(f64::INFINITY, f64::min)
    };
    let (m2, m1) = (min_x(&from2), min_x(&from1));
    let (xi1, xi2, cands) = if m2 < m1 {
        (a, b, from2)
    } else if m1 < m2 {
        (b, a, from1)
    } else if m1.is_finite() {
        return Err(RelError::Unsupported(
            "multiple shortest saddles between the singularities".into(),
        ));
    } else {
        if !hs.complete() {
            return Err(RelError::Undetermined);
        }
        return Err(RelError::Unsupported(
            "no horizontal saddle joins the two singularities".into(),
        ));
    };
    let delta = cands
        .iter()
        .min_by(|x, y| x.hol.x.to_f64().total_cmp(&y.hol.x.to_f64()))
        .unwrap();
    let t_pos = delta.hol.x.clone();
    if cands
        .iter()
        .filter(|s| s.hol.x.sub(&t_pos).is_zero())
        .count()
        != 1
    {
        return Err(RelError::Unsupported(
            "multiple shortest saddles between the singularities".into(),
        ));
    }
    if !hs.complete() && t_pos.to_f64() >= budget {
        return Err(RelError::Undetermined);
    }
    // Make the collapsing saddle a triangulation edge, then shrink it.
    let (with_edge, _e0) = insert_saddle_edge(m, delta.from_corner, &delta.hol)?;
    let mut zw = vec![K::zero(); with_edge.labels.len()];
    zw[xi2] = t_pos.clone();
    let sg = Surgery { xi1, xi2, x0: t_pos.clone(), start_zero: false, end_zero: true };
    let limit = rel_engine(&with_edge, &zw, Some(&sg))?;
    // Locate the now-zero edge xi2 -> xi1.
    let mut e = None;
    for s in 0..limit.n_slots() {
        if limit.hol[s].is_zero()
            && limit.corner_label[s] == xi2
            && limit.corner_label[slot_next(s)] == xi1
        {
            if e.is_some() {
                return Err(RelError::Unsupported("ambiguous collapsed edge".into()));
            }
            e = Some(s);
        }
    }
    let e = e.ok_or_else(|| RelError::Unsupported("collapsed edge not found".into()))?;
    let eb = limit.pair[e];
    let (t1, t2) = (slot_tri(e), slot_tri(eb));
    // Selected prong: sweep counterclockwise from where the saddle arrived
    // at xi1 (the germ (-1,0) at the corner of the reversed edge) until the
    // direction (1,0) appears in a surviving corner; the half-turn lands
    // there.
    let right = Vec2::new(K::one(), K::zero());
    let mut c = limit.fan_next(eb);
    let mut chosen = None;
    for _ in 0..limit.n_slots() + 2 {
        if slot_tri(c) != t1 && slot_tri(c) != t2 {
            let (ra, rb) = limit.corner_rays(c);
            if sector_contains(&ra, &rb, &right) {
                chosen = Some(c);
                break;
            }
        }
        c = limit.fan_next(c);
    }
    let chosen = chosen.ok_or_else(|| {
        RelError::Unsupported("no right prong found after the collapse".into())
    })?;
    let (out, slot_map, _merged) = contract_edge(&limit, e, xi1, xi2)?;
    let prong = slot_map[chosen]
        .ok_or_else(|| RelError::Unsupported("selected prong was removed".into()))?;
    FramedH2Surface::new(out, prong)
}

/// Split the 6π cone point into two 4π points and move them a horizontal
/// distance `t` apart, producing a two-singularity surface with exactly one
/// horizontal saddle of holonomy (|t|, 0) running xi2 → xi1 (for t > 0; for
/// t < 0 the labels are exchanged).
pub fn split<K: Coord>(
    f: &FramedH2Surface<K>,
    t: &K,
    budget: f64,
) -> Result<TriSurface<K>, RelError> {
    if t.is_zero() {
        return Err(RelError::Unsupported("split distance must be nonzero".into()));
    }
    let negative = t.sign() < 0;
    let t_pos = if negative { t.neg() } else { t.clone() };
    let m = &f.surface;
    let lab = m.corner_label[f.prong_corner];
    // The six horizontal prong germs in counterclockwise order starting at
    // the selected one: rights at even positions, lefts at odd.
    let class = m.class_of_label(lab);
    let germs = prong_germs(m, &class);
    let start = germs
        .iter()
        .position(|&(c, right)| right && c == f.prong_corner)
        .ok_or_else(|| RelError::Unsupported("framing corner is not a prong germ".into()))?;
    let rot: Vec<(Slot, bool)> = (0..germs.len())
        .map(|i| germs[(start + i) % germs.len()])
        .collect();
    if rot.len() != 6 || rot.iter().enumerate().any(|(i, &(_, r))| r != (i % 2 == 0)) {
        return Err(RelError::Unsupported(
            "prong germs do not alternate as six half-turns".into(),
        ));
    }
    let (q1c, q3c) = (rot[0].0, rot[2].0);
    let (q4c, q6c) = (rot[3].0, rot[5].0);
    // A horizontal saddle entering the forbidden wedge would be hit by the
    // cut; certify its absence up to the travel distance.
    let scan_budget = budget.max(t_pos.to_f64() * 1.05 + 1.0);
    let hs = horizontal_saddles(m, scan_budget);
    for s in &hs.saddles {
        if (s.from_corner == q1c || s.from_corner == q3c)
            && (s.to_corner == q4c || s.to_corner == q6c)
            && s.hol.x.sub(&t_pos).sign() <= 0
        {
            return Err(RelError::Blocked(s.hol.x.to_f64(), t_pos.to_f64()));
        }
    }
    // Cut rays: the first fan edge counterclockwise past the second right
    // prong points strictly upward, and past the third left prong strictly
    // downward.
    let s_up = m.fan_next(q3c);
    let s_down = m.fan_next(q6c);
    if m.hol[s_up].y.sign() <= 0 || m.hol[s_down].y.sign() >= 0 {
        return Err(RelError::Unsupported("cut rays are not transverse".into()));
    }
    let w_up = m.hol[s_up].clone();
    let w_down = m.hol[s_down].clone();
    let sb_up = m.pair[s_up];
    let sb_down = m.pair[s_down];
    // Two zero-area triangles are inserted along the cut edges:
    //   up:   (u0: xi1 -> Xup  = w_up,  u1: Xup -> xi2 = -w_up, u2: xi2 -> xi1 = 0)
    //   down: (d0: xi2 -> Xdn = w_dn,  d1: Xdn -> xi1 = -w_dn, d2: xi1 -> xi2 = 0)
    let n0 = m.n_slots();
    let (u0, u1, u2) = (n0, n0 + 1, n0 + 2);
    let (d0, d1, d2) = (n0 + 3, n0 + 4, n0 + 5);
    let mut hol = m.hol.clone();
    let zero = Vec2::<K>::zero();
    hol.extend_from_slice(&[
        w_up.clone(),
        w_up.neg(),
        zero.clone(),
        w_down.clone(),
        w_down.neg(),
        zero.clone(),
    ]);
    let mut pair = m.pair.clone();
    pair.extend_from_slice(&[0; 6]);
    let relink = |pair: &mut Vec<Slot>, x: Slot, y: Slot| {
        pair[x] = y;
        pair[y] = x;
    };
    if sb_up == s_down {
        // Both cuts run along the same geometric edge: chain the two new
        // triangles through it.
        relink(&mut pair, s_up, u1);
        relink(&mut pair, u0, d0);
        relink(&mut pair, d1, s_down);
    } else {
        relink(&mut pair, s_up, u1);
        relink(&mut pair, u0, sb_up);
        relink(&mut pair, s_down, d1);
        relink(&mut pair, d0, sb_down);
    }
    relink(&mut pair, u2, d2);
    // Vertex classes of the modified gluing determine the two new
    // singularities: xi1 owns the selected prong, xi2 the far side.
    let fan_next = |c: Slot| pair[slot_prev(c)];
    let nsl = n0 + 6;
    let mut cycle = vec![usize::MAX; nsl];
    let mut cycles: Vec<Vec<Slot>> = Vec::new();
    for c0 in 0..nsl {
        if cycle[c0] != usize::MAX {
            continue;
        }
        let k = cycles.len();
        let mut orbit = Vec::new();
        let mut c = c0;
        loop {
            cycle[c] = k;
            orbit.push(c);
            c = fan_next(c);
            if c == c0 {
                break;
            }
        }
        cycles.push(orbit);
    }
    if cycle[u0] == cycle[u2] {
        return Err(RelError::Unsupported("cuts failed to separate the cone point".into()));
    }
    if cycle[q1c] != cycle[u0] {
        return Err(RelError::Unsupported(
            "selected prong landed on the wrong side of the cuts".into(),
        ));
    }
    // Label table: the 6π label becomes xi1 (order 1); xi2 is appended.
    let mut labels = m.labels.clone();
    if labels.iter().any(|l| l.name == "xi1" || l.name == "xi2") && labels[lab].name != "xi1" {
        return Err(RelError::Unsupported("label names xi1/xi2 already in use".into()));
    }
    labels[lab] = crate::surface::SingLabel { name: "xi1".to_string(), order: 1 };
    let xi2_lab = labels.len();
    labels.push(crate::surface::SingLabel { name: "xi2".to_string(), order: 1 });
    let xi1_lab = lab;
    let xi1_cycle = cycle[u0];
    let xi2_cycle = cycle[u2];
    let mut corner_label = vec![usize::MAX; nsl];
    for c in 0..nsl {
        corner_label[c] = if cycle[c] == xi1_cycle {
            xi1_lab
        } else if cycle[c] == xi2_cycle {
            xi2_lab
        } else if c < n0 {
            m.corner_label[c]
        } else {
            usize::MAX
        };
    }
    // New corners at ordinary vertices inherit the class of an old corner
    // in the same cycle.
    for c in n0..nsl {
        if corner_label[c] == usize::MAX {
            let old = cycles[cycle[c]]
                .iter()
                .find(|&&x| x < n0)
                .ok_or_else(|| RelError::Unsupported("isolated new vertex".into()))?;
            corner_label[c] = m.corner_label[*old];
        }
    }
    let raw = TriSurface { hol, pair, corner_label, labels, disc: m.disc };
    // Drive the two 4π points apart; the zero edge u2 grows to (|t|, 0).
    let mut zw = vec![K::zero(); raw.labels.len()];
    zw[xi2_lab] = t_pos.neg();
    let sg = Surgery {
        xi1: xi1_lab,
        xi2: xi2_lab,
        x0: K::zero(),
        start_zero: true,
        end_zero: false,
    };
    let mut out = rel_engine(&raw, &zw, Some(&sg))?;
    out.validate()?;
    if negative {
        let i1 = out.label_index("xi1").unwrap();
        let i2 = out.label_index("xi2").unwrap();
        out.labels[i1].name = "xi2".to_string();
        out.labels[i2].name = "xi1".to_string();
    }
    Ok(out)
}

//! Geodesic-structure analysis: exact straight-line tracing, horizontal
//! separatrices and saddle connections, saddle-connection enumeration by
//! unfolding, cylinder decompositions, and horizontal data diagrams.

use crate::surface::{
    slot_next, slot_prev, slot_tri, Coord, Mat2, SurfaceError, TriSurface, Vec2,
};
use std::collections::HashMap;

pub type Slot = usize;

/// A directed saddle connection with its combinatorial data.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleConnection<K: Coord> {
    pub hol: Vec2<K>,
    /// Label indices of source and target singularities.
    pub from: usize,
    pub to: usize,
    /// Corner whose angular sector contains the outgoing direction.
    pub from_corner: Slot,
    /// Corner whose angular sector contains the incoming (reversed) direction.
    pub to_corner: Slot,
    /// Edge slots crossed transversally, in order (empty for triangulation
    /// edges).
    pub path: Vec<Slot>,
}

/// True when direction v lies in the half-open sector [a, b) (angle < π).
pub fn sector_contains<K: Coord>(a: &Vec2<K>, b: &Vec2<K>, v: &Vec2<K>) -> bool {
    let ca = a.cross(v);
    if ca.sign() == 0 {
        return a.dot(v).sign() > 0;
    }
    ca.sign() > 0 && v.cross(b).sign() > 0
}

/// Find the corner at the same vertex as `c` whose sector contains `v`,
/// walking the fan counterclockwise.
pub fn corner_containing_dir<K: Coord>(m: &TriSurface<K>, c: Slot, v: &Vec2<K>) -> Slot {
    let mut cur = c;
    loop {
        let (a, b) = m.corner_rays(cur);
        if sector_contains(&a, &b, v) {
            return cur;
        }
        cur = m.fan_next(cur);
        assert_ne!(cur, c, "no corner sector contains the direction");
    }
}

/// Result of tracing a ray from a singularity.
#[derive(Clone, Debug)]
pub enum TraceStop<K: Coord> {
    /// Hit a vertex: the corner at the tail of the reported slot is the hit
    /// vertex; `pos` is its developed position; `crossed` lists crossed slots.
    Vertex { corner: Slot, pos: Vec2<K>, crossed: Vec<Slot> },
    /// Advance along the ray direction exceeded the budget.
    Budget { crossed: Vec<Slot> },
}

/// Trace the ray from the vertex of corner `c0` in direction `dir` (which
/// must lie in the corner's sector) until a vertex is hit or the advance
/// (measured by dot(position, dir)) exceeds `budget2` (compared against
/// dot·|dir| scale: pass budget·|dir|² for a length budget in units of |dir|).
pub fn trace_ray<K: Coord>(
    m: &TriSurface<K>,
    c0: Slot,
    dir: &Vec2<K>,
    budget2: &K,
) -> TraceStop<K> {
    let (a, b) = m.corner_rays(c0);
    debug_assert!(
        sector_contains(&a, &b, dir),
        "trace direction outside starting corner"
    );
    let mut crossed: Vec<Slot> = Vec::new();
    // Current triangle entered through a directed slot whose tail develops at
    // qa and head at qb; the ray originates at the origin.
    let mut qa: Vec2<K>;
    let mut qb: Vec2<K>;
    let mut entered: Slot;
    // Initial step inside tri(c0): the ray leaves through the edge opposite
    // the corner unless it hits one of the two far vertices.
    {
        let p1 = a; // tail of slot_next(c0)
        let p2 = m.hol[slot_prev(c0)].neg(); // tail of slot_prev(c0)
        if dir.cross(&p1).sign() == 0 && dir.dot(&p1).sign() > 0 {
            return TraceStop::Vertex { corner: slot_next(c0), pos: p1, crossed };
        }
        if dir.cross(&p2).sign() == 0 && dir.dot(&p2).sign() > 0 {
            return TraceStop::Vertex { corner: slot_prev(c0), pos: p2, crossed };
        }
        let cross_slot = slot_next(c0);
        crossed.push(cross_slot);
        entered = m.pair[cross_slot];
        // The entered slot runs head->tail of the crossed edge.
        qa = p2;
        qb = p1;
    }
    loop {
        // Budget: if both endpoints of the entered edge are beyond the
        // advance budget, everything ahead is too.
        let da = qa.dot(dir);
        let db = qb.dot(dir);
        if da.sub(budget2).sign() > 0 && db.sub(budget2).sign() > 0 {
            return TraceStop::Budget { crossed };
        }
        let apex = qb.add(&m.hol[slot_next(entered)]);
        let ca = dir.cross(&apex);
        if ca.sign() == 0 && dir.dot(&apex).sign() > 0 {
            return TraceStop::Vertex { corner: slot_prev(entered), pos: apex, crossed };
        }
        // Exit through the far edge whose endpoints straddle the ray line.
        let sa = dir.cross(&qa).sign();
        let exit = if ca.sign() == sa {
            // apex on the same side as qa: straddling pair is (qb, apex)
            slot_next(entered)
        } else {
            slot_prev(entered)
        };
        crossed.push(exit);
        let (na, nb) = if exit == slot_next(entered) {
            (apex.clone(), qb.clone())
        } else {
            (qa.clone(), apex.clone())
        };
        entered = m.pair[exit];
        qa = na;
        qb = nb;
    }
}

/// Horizontal saddle connection scan (the set Ξ(M)).
///
/// Every saddle of length at most the budget is found; separatrices that
/// exceed the budget without closing are reported in `unresolved` (they may
/// close beyond the budget or be dense).
#[derive(Clone, Debug)]
pub struct HorizontalScan<K: Coord> {
    /// Rightward-directed horizontal saddles (hol.x > 0, hol.y = 0), one per
    /// geometric saddle.
    pub saddles: Vec<SaddleConnection<K>>,
    /// Right-prong corners whose separatrix exceeded the budget.
    pub unresolved: Vec<Slot>,
}

impl<K: Coord> HorizontalScan<K> {
    /// True when every horizontal separatrix closed within the budget, so
    /// the saddle list is the whole of the horizontal structure.
    pub fn complete(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Both orientations of every saddle.
    pub fn directed_both_ways(&self) -> Vec<SaddleConnection<K>> {
        let mut out = self.saddles.clone();
        for s in &self.saddles {
            out.push(SaddleConnection {
                hol: s.hol.neg(),
                from: s.to,
                to: s.from,
                from_corner: s.to_corner,
                to_corner: s.from_corner,
                path: s.path.iter().rev().cloned().collect(),
            });
        }
        out
    }
}

/// Default separatrix budget: 100 × the longest edge.
pub fn default_budget<K: Coord>(m: &TriSurface<K>) -> f64 {
    100.0 * m.longest_edge().max(1e-9)
}

/// Trace all horizontal separatrices from right-pointing prongs; a budget is
/// a length in flat units along the horizontal direction.
pub fn horizontal_saddles<K: Coord>(m: &TriSurface<K>, budget: f64) -> HorizontalScan<K> {
    let dir = Vec2::new(K::one(), K::zero());
    // advance is measured by dot(pos, dir) = x, |dir| = 1.
    let budget2 = budget_to_scalar::<K>(budget);
    let mut saddles = Vec::new();
    let mut unresolved = Vec::new();
    for c in 0..m.n_slots() {
        if !m.corner_has_right_prong(c) {
            continue;
        }
        match trace_ray(m, c, &dir, &budget2) {
            TraceStop::Vertex { corner, pos, crossed } => {
                debug_assert!(pos.y.sign() == 0 && pos.x.sign() > 0);
                let to_corner = corner_containing_dir(m, corner, &dir.neg());
                saddles.push(SaddleConnection {
                    hol: pos,
                    from: m.corner_label[c],
                    to: m.corner_label[corner],
                    from_corner: c,
                    to_corner,
                    path: crossed,
                });
            }
            TraceStop::Budget { .. } => {
                unresolved.push(c);
            }
        }
    }
    sort_saddles(&mut saddles);
    HorizontalScan { saddles, unresolved }
}

fn budget_to_scalar<K: Coord>(budget: f64) -> K {
    // Represent the float budget as a rational with modest precision; for
    // exact mode this keeps all comparisons exact.
    let scaled = (budget * 4096.0).round();
    let n = if scaled > i64::MAX as f64 { i64::MAX } else { scaled as i64 };
    K::from_ratio(n, 4096)
}

/// Deterministic order: by length, then direction, then labels.
pub fn sort_saddles<K: Coord>(v: &mut [SaddleConnection<K>]) {
    v.sort_by(|p, q| {
        let l = p.hol.norm2().sub(&q.hol.norm2()).sign();
        if l != 0 {
            return if l < 0 { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater };
        }
        for d in [
            p.hol.x.sub(&q.hol.x).sign(),
            p.hol.y.sub(&q.hol.y).sign(),
        ] {
            if d != 0 {
                return if d < 0 { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater };
            }
        }
        (p.from, p.to, p.from_corner, p.to_corner)
            .cmp(&(q.from, q.to, q.from_corner, q.to_corner))
    });
}

/// Limits for the unfolding enumeration.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    /// Cap on explored triangle copies per starting corner.
    pub max_copies: usize,
    /// Number of worker threads for the per-corner searches.
    pub threads: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { max_copies: 2_000_000, threads: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScanError {
    #[error("unfolding copy limit exceeded ({0} copies)")]
    CopyLimit(usize),
    #[error("{0}")]
    Surface(String),
}

struct Wedge<K> {
    lo: Vec2<K>,
    hi: Vec2<K>,
}

struct UnfoldState<K> {
    entered: Slot,
    qa: Vec2<K>,
    qb: Vec2<K>,
    wedge: Wedge<K>,
    path: Vec<Slot>,
}

/// All saddle connections with |hol| ≤ L (closed disk), each orientation
/// reported once, discovered by breadth-first unfolding from every corner.
/// `l2` is the squared radius as an exact scalar.
pub fn saddle_connections<K: Coord>(
    m: &TriSurface<K>,
    l2: &K,
    cfg: &ScanConfig,
) -> Result<Vec<SaddleConnection<K>>, ScanError> {
    let corners: Vec<Slot> = (0..m.n_slots()).collect();
    let run = |chunk: &[Slot]| -> Result<Vec<SaddleConnection<K>>, ScanError> {
        let mut out = Vec::new();
        for &c in chunk {
            scan_from_corner(m, c, l2, cfg, &mut out)?;
        }
        Ok(out)
    };
    let mut found: Vec<SaddleConnection<K>> = if cfg.threads <= 1 {
        run(&corners)?
    } else {
        let nt = cfg.threads.min(corners.len().max(1));
        let chunks: Vec<&[Slot]> = corners.chunks(corners.len().div_ceil(nt)).collect();
        let results: Vec<Result<Vec<SaddleConnection<K>>, ScanError>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunks
                    .into_iter()
                    .map(|ch| scope.spawn(move || run(ch)))
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
        let mut all = Vec::new();
        for r in results {
            all.extend(r?);
        }
        all
    };
    sort_saddles(&mut found);
    Ok(found)
}

fn scan_from_corner<K: Coord>(
    m: &TriSurface<K>,
    c: Slot,
    l2: &K,
    cfg: &ScanConfig,
    out: &mut Vec<SaddleConnection<K>>,
) -> Result<(), ScanError> {
    // The triangulation edge along the corner's first ray.
    let a = m.hol[c].clone();
    if a.norm2().sub(l2).sign() <= 0 {
        out.push(SaddleConnection {
            hol: a.clone(),
            from: m.corner_label[c],
            to: m.corner_label[slot_next(c)],
            from_corner: c,
            to_corner: corner_containing_dir(m, slot_next(c), &a.neg()),
            path: Vec::new(),
        });
    }
    let b_end = m.hol[slot_prev(c)].neg();
    let mut stack = vec![UnfoldState {
        entered: m.pair[slot_next(c)],
        qa: b_end.clone(),
        qb: a.clone(),
        wedge: Wedge { lo: a, hi: b_end },
        path: vec![slot_next(c)],
    }];
    let mut copies = 0usize;
    while let Some(st) = stack.pop() {
        copies += 1;
        if copies > cfg.max_copies {
            return Err(ScanError::CopyLimit(copies));
        }
        let apex = st.qb.add(&m.hol[slot_next(st.entered)]);
        // Record the apex when strictly inside the open wedge and in range.
        let in_wedge = st.wedge.lo.cross(&apex).sign() > 0 && apex.cross(&st.wedge.hi).sign() > 0;
        if in_wedge && apex.norm2().sub(l2).sign() <= 0 {
            let corner = slot_prev(st.entered);
            out.push(SaddleConnection {
                hol: apex.clone(),
                from: m.corner_label[c],
                to: m.corner_label[corner],
                from_corner: c,
                to_corner: corner_containing_dir(m, corner, &apex.neg()),
                path: st.path.clone(),
            });
        }
        // Children across the two far edges. For the edge (u -> v) seen from
        // the origin, the visible direction sector is (dir u, dir v) ordered
        // counterclockwise.
        for (exit, u, v) in [
            (slot_next(st.entered), st.qb.clone(), apex.clone()),
            (slot_prev(st.entered), apex.clone(), st.qa.clone()),
        ] {
            let (lo, hi) = match order_ccw(&u, &v) {
                Some(pair) => pair,
                None => continue, // radial or degenerate segment
            };
            let nlo = if st.wedge.lo.cross(lo).sign() > 0 { lo.clone() } else { st.wedge.lo.clone() };
            let nhi = if hi.cross(&st.wedge.hi).sign() > 0 { hi.clone() } else { st.wedge.hi.clone() };
            if nlo.cross(&nhi).sign() <= 0 {
                continue; // empty wedge
            }
            // Prune when the whole crossed segment lies outside the disk.
            if segment_outside_disk(&u, &v, l2) {
                continue;
            }
            let mut path = st.path.clone();
            path.push(exit);
            stack.push(UnfoldState {
                entered: m.pair[exit],
                qa: v,
                qb: u,
                wedge: Wedge { lo: nlo, hi: nhi },
                path,
            });
        }
    }
    Ok(())
}

/// Order two directions counterclockwise (u before v); None when collinear.
fn order_ccw<'a, K: Coord>(u: &'a Vec2<K>, v: &'a Vec2<K>) -> Option<(&'a Vec2<K>, &'a Vec2<K>)> {
    match u.cross(v).sign() {
        1 => Some((u, v)),
        -1 => Some((v, u)),
        _ => None,
    }
}

/// True when every point of segment uv has squared distance > l2 from the
/// origin.
fn segment_outside_disk<K: Coord>(u: &Vec2<K>, v: &Vec2<K>, l2: &K) -> bool {
    if u.norm2().sub(l2).sign() <= 0 || v.norm2().sub(l2).sign() <= 0 {
        return false;
    }
    let d = v.sub(u);
    let t_num = u.dot(&d).neg();
    let t_den = d.norm2();
    // Perpendicular foot inside the segment?
    if t_num.sign() > 0 && t_num.sub(&t_den).sign() < 0 {
        // dist² = |u|² − dot(u,d)²/|d|²  >  l2
        // ⇔ |u|²·|d|² − dot(u,d)² > l2·|d|²
        let lhs = u.norm2().mul(&t_den).sub(&u.dot(&d).mul(&u.dot(&d)));
        return lhs.sub(&l2.mul(&t_den)).sign() > 0;
    }
    true
}

/// A maximal flat cylinder in a given direction.
#[derive(Clone, Debug)]
pub struct Cylinder<K: Coord> {
    pub direction: Vec2<K>,
    pub circumference: K,
    pub height: K,
    pub bottom: Vec<SaddleConnection<K>>,
    pub top: Vec<SaddleConnection<K>>,
}

impl<K: Coord> Cylinder<K> {
    pub fn modulus(&self) -> K {
        self.height.div(&self.circumference).expect("positive circumference")
    }
    pub fn area(&self) -> K {
        self.height.mul(&self.circumference)
    }
}

#[derive(Clone, Debug)]
pub enum CylinderVerdict<K: Coord> {
    Periodic(Vec<Cylinder<K>>),
    /// A separatrix failed to close within the budget; the direction may be
    /// minimal or the budget too small.
    Undetermined,
}

/// Rotate so that `dir` becomes horizontal: the matrix [[x, y], [-y, x]] has
/// positive determinant and sends dir to (|dir|², 0).
pub fn rotate_to_horizontal<K: Coord>(
    m: &TriSurface<K>,
    dir: &Vec2<K>,
) -> Result<TriSurface<K>, SurfaceError> {
    let g = Mat2::new(dir.x.clone(), dir.y.clone(), dir.y.neg(), dir.x.clone());
    m.apply_gl2(&g)
}

/// Track a corner germ through a flip of the edge at slot `s_flip`. The
/// direction `dir` must lie in the corner's sector before the flip; the
/// returned corner's sector contains `dir` after the flip, on the same sheet
/// of the cone.
pub fn map_corner_after_flip<K: Coord>(
    pre: &TriSurface<K>,
    post: &TriSurface<K>,
    s_flip: Slot,
    c: Slot,
    dir: &Vec2<K>,
) -> Slot {
    let s = s_flip;
    let sb = pre.pair[s];
    let (ns, ps) = (slot_next(s), slot_prev(s));
    let (nsb, psb) = (slot_next(sb), slot_prev(sb));
    if c == s || c == nsb {
        // Tail-of-diagonal corners merge into the corner at X.
        return ps;
    }
    if c == ns || c == sb {
        return psb;
    }
    if c == ps {
        // The corner at the old apex A splits in two; pick by direction.
        let (a, b) = post.corner_rays(ns);
        return if sector_contains(&a, &b, dir) { ns } else { sb };
    }
    if c == psb {
        let (a, b) = post.corner_rays(nsb);
        return if sector_contains(&a, &b, dir) { nsb } else { s };
    }
    c
}

/// Insert the traced saddle connection as a triangulation edge by flipping
/// the edges it crosses. Returns the retriangulated surface and the slot of
/// the new edge (directed from the saddle's source germ).
pub fn insert_saddle_edge<K: Coord>(
    m: &TriSurface<K>,
    from_corner: Slot,
    hol: &Vec2<K>,
) -> Result<(TriSurface<K>, Slot), SurfaceError> {
    let mut cur = m.clone();
    let mut from_c = from_corner;
    let cap = 40 * m.n_slots() * m.n_slots() + 400;
    let mut steps = 0usize;
    loop {
        // If the saddle is already the first edge of the corner, done.
        if cur.hol[from_c] == *hol {
            return Ok((cur, from_c));
        }
        let big = hol.norm2().add(&K::one());
        let crossed = match trace_ray(&cur, from_c, hol, &big) {
            TraceStop::Vertex { pos, crossed, .. } => {
                if pos != *hol {
                    return Err(SurfaceError::Other(
                        "segment endpoint does not match traced vertex".into(),
                    ));
                }
                crossed
            }
            TraceStop::Budget { .. } => {
                return Err(SurfaceError::Other("segment trace exceeded budget".into()))
            }
        };
        if crossed.is_empty() {
            // Edge exists but as a different slot of the corner fan; locate it.
            return Err(SurfaceError::Other("segment trace found no crossings".into()));
        }
        // A segment may cross the same edge several times, so flipping the
        // first flippable edge can cycle. Prefer, in order: a flip that
        // strictly reduces the crossing count; the first crossed edge (its
        // flip pushes the first crossing strictly later along the segment,
        // since the new diagonal shares the segment's start vertex); any
        // other convex flip.
        let base = crossed.len();
        let mut reducing = None;
        let mut convex = Vec::new();
        let mut tried = std::collections::BTreeSet::new();
        for (rank, &e) in crossed.iter().enumerate() {
            if !tried.insert(e.min(cur.pair[e])) {
                continue;
            }
            match cur.flip_edge(e) {
                Ok(next) => {
                    let c2 = map_corner_after_flip(&cur, &next, e, from_c, hol);
                    let n2 = match trace_ray(&next, c2, hol, &big) {
                        TraceStop::Vertex { pos, crossed, .. } if pos == *hol => crossed.len(),
                        _ => usize::MAX,
                    };
                    if n2 < base {
                        reducing = Some((next, c2));
                        break;
                    }
                    if n2 != usize::MAX {
                        convex.push((rank, next, c2));
                    }
                }
                Err(SurfaceError::FlipNonConvex) | Err(SurfaceError::FlipSameTriangle) => continue,
                Err(other) => return Err(other),
            }
        }
        let chosen = reducing.or_else(|| {
            convex
                .into_iter()
                .min_by_key(|(rank, _, _)| *rank)
                .map(|(_, next, c2)| (next, c2))
        });
        match chosen {
            Some((next, c2)) => {
                cur = next;
                from_c = c2;
            }
            None => {
                return Err(SurfaceError::Other(
                    "no crossed edge is flippable while inserting segment".into(),
                ))
            }
        }
        steps += 1;
        if steps > cap {
            return Err(SurfaceError::Other("edge insertion did not terminate".into()));
        }
    }
}

/// Make every horizontal saddle connection a triangulation edge. Requires a
/// complete horizontal scan.
pub fn with_horizontal_edges<K: Coord>(
    m: &TriSurface<K>,
    budget: f64,
) -> Result<Option<TriSurface<K>>, SurfaceError> {
    let mut cur = m.clone();
    loop {
        let scan = horizontal_saddles(&cur, budget);
        if !scan.complete() {
            return Ok(None);
        }
        // Find a horizontal saddle that is not yet an edge.
        let mut pending = None;
        for s in &scan.saddles {
            if !s.path.is_empty() {
                pending = Some(s.clone());
                break;
            }
        }
        match pending {
            None => return Ok(Some(cur)),
            Some(s) => {
                let (next, _) = insert_saddle_edge(&cur, s.from_corner, &s.hol)?;
                cur = next;
            }
        }
    }
}

/// Horizontal cylinder decomposition. Returns `Periodic` exactly when every
/// horizontal separatrix closes within the budget.
pub fn horizontal_cylinders<K: Coord>(
    m: &TriSurface<K>,
    budget: f64,
) -> Result<CylinderVerdict<K>, SurfaceError> {
    let adapted = match with_horizontal_edges(m, budget)? {
        Some(a) => a,
        None => return Ok(CylinderVerdict::Undetermined),
    };
    // Horizontal edges are exactly the saddles of Ξ; group triangles across
    // non-horizontal edges.
    let nt = adapted.n_triangles();
    let mut comp = vec![usize::MAX; nt];
    let mut n_comp = 0usize;
    for t0 in 0..nt {
        if comp[t0] != usize::MAX {
            continue;
        }
        let mut stack = vec![t0];
        comp[t0] = n_comp;
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let s = 3 * t + i;
                if adapted.hol[s].y.sign() == 0 {
                    continue; // Ξ edge: cylinder boundary
                }
                let t2 = slot_tri(adapted.pair[s]);
                if comp[t2] == usize::MAX {
                    comp[t2] = n_comp;
                    stack.push(t2);
                }
            }
        }
        n_comp += 1;
    }
    // Per component: develop y-coordinates of corners and collect boundary.
    let mut cylinders = Vec::new();
    for k in 0..n_comp {
        let tris: Vec<usize> = (0..nt).filter(|&t| comp[t] == k).collect();
        // y-offsets per corner by BFS inside the component.
        let mut y: HashMap<Slot, K> = HashMap::new();
        let t0 = tris[0];
        y.insert(3 * t0, K::zero());
        let mut stack = vec![t0];
        let mut seen = vec![false; nt];
        seen[t0] = true;
        while let Some(t) = stack.pop() {
            // Complete the triangle from whichever corner is assigned; two
            // passes around the 3-cycle always suffice.
            for _ in 0..2 {
                for i in 0..3 {
                    let s = 3 * t + i;
                    if let Some(ys) = y.get(&s).cloned() {
                        y.entry(slot_next(s)).or_insert(ys.add(&adapted.hol[s].y));
                    }
                }
            }
            // Propagate across interior (non-horizontal) edges.
            for i in 0..3 {
                let s = 3 * t + i;
                if adapted.hol[s].y.sign() == 0 {
                    continue;
                }
                let p = adapted.pair[s];
                let t2 = slot_tri(p);
                if comp[t2] != k || seen[t2] {
                    continue;
                }
                // tail(p) is glued to head(s)
                let yh = y[&slot_next(s)].clone();
                y.entry(p).or_insert(yh);
                seen[t2] = true;
                stack.push(t2);
            }
        }
        // All corners of the component should now have y-offsets.
        let mut ymin: Option<K> = None;
        let mut ymax: Option<K> = None;
        for &t in &tris {
            for i in 0..3 {
                let s = 3 * t + i;
                let ys = match y.get(&s) {
                    Some(v) => v.clone(),
                    None => {
                        return Err(SurfaceError::Other(
                            "cylinder development failed to cover component".into(),
                        ))
                    }
                };
                ymin = Some(match ymin {
                    None => ys.clone(),
                    Some(m0) => {
                        if ys.sub(&m0).sign() < 0 {
                            ys.clone()
                        } else {
                            m0
                        }
                    }
                });
                ymax = Some(match ymax {
                    None => ys,
                    Some(m0) => {
                        if ys.sub(&m0).sign() > 0 {
                            ys
                        } else {
                            m0
                        }
                    }
                });
            }
        }
        let height = ymax.unwrap().sub(&ymin.unwrap());
        // Bottom boundary: horizontal slots with the component's triangle
        // above them (hol.x > 0 in a ccw triangle means interior above).
        let mut circumference = K::zero();
        let mut bottom = Vec::new();
        let mut top = Vec::new();
        for &t in &tris {
            for i in 0..3 {
                let s = 3 * t + i;
                if adapted.hol[s].y.sign() != 0 {
                    continue;
                }
                let sc = SaddleConnection {
                    hol: adapted.hol[s].clone(),
                    from: adapted.corner_label[s],
                    to: adapted.corner_label[slot_next(s)],
                    from_corner: s,
                    to_corner: corner_containing_dir(
                        &adapted,
                        slot_next(s),
                        &adapted.hol[s].neg(),
                    ),
                    path: Vec::new(),
                };
                if adapted.hol[s].x.sign() > 0 {
                    circumference = circumference.add(&adapted.hol[s].x);
                    bottom.push(sc);
                } else {
                    top.push(sc);
                }
            }
        }
        cylinders.push(Cylinder {
            direction: Vec2::new(K::one(), K::zero()),
            circumference,
            height,
            bottom,
            top,
        });
    }
    Ok(CylinderVerdict::Periodic(cylinders))
}

/// Cylinder decomposition in an arbitrary direction: rotate to horizontal
/// first. Circumferences/heights are reported in the rotated frame (scaled
/// by |dir|).
pub fn cylinder_decomposition<K: Coord>(
    m: &TriSurface<K>,
    dir: &Vec2<K>,
    budget: f64,
) -> Result<CylinderVerdict<K>, SurfaceError> {
    let rotated = rotate_to_horizontal(m, dir)?;
    let scaled_budget = budget * dir.len().max(1e-12);
    let verdict = horizontal_cylinders(&rotated, scaled_budget)?;
    Ok(match verdict {
        CylinderVerdict::Periodic(cyls) => CylinderVerdict::Periodic(
            cyls.into_iter()
                .map(|c| Cylinder { direction: dir.clone(), ..c })
                .collect(),
        ),
        v => v,
    })
}

/// Walk the triangles crossed by the segment from the vertex of corner `c0`
/// with displacement `seg` and return the triangle strictly containing the
/// far endpoint, with the developed positions of its three corners (indexed
/// by slot offset). Errors when the endpoint or the segment interior meets a
/// vertex or the endpoint lies on an edge.
pub fn locate_segment_end<K: Coord>(
    m: &TriSurface<K>,
    c0: Slot,
    seg: &Vec2<K>,
) -> Result<(usize, [Vec2<K>; 3]), SurfaceError> {
    let (a, b) = m.corner_rays(c0);
    if !sector_contains(&a, &b, seg) {
        return Err(SurfaceError::Other("segment leaves outside the corner sector".into()));
    }
    let seg2 = seg.norm2();
    let inside = |pos: &[Vec2<K>; 3]| -> Option<bool> {
        // Some(true): strictly inside; Some(false): outside; None: boundary.
        let mut ok = true;
        for i in 0..3 {
            let e = pos[(i + 1) % 3].sub(&pos[i]);
            let s = e.cross(&seg.sub(&pos[i])).sign();
            if s == 0 {
                return None;
            }
            if s < 0 {
                ok = false;
            }
        }
        Some(ok)
    };
    // Initial triangle.
    let t0 = slot_tri(c0);
    let mut pos0 = [Vec2::<K>::zero(), Vec2::<K>::zero(), Vec2::<K>::zero()];
    pos0[c0 % 3] = Vec2::zero();
    pos0[slot_next(c0) % 3] = m.hol[c0].clone();
    pos0[slot_prev(c0) % 3] = m.hol[c0].add(&m.hol[slot_next(c0)]);
    match inside(&pos0) {
        Some(true) => return Ok((t0, pos0)),
        None => return Err(SurfaceError::Other("segment endpoint on a boundary".into())),
        Some(false) => {}
    }
    // The far vertices of the initial triangle must not lie inside the
    // segment.
    for q in [&pos0[slot_next(c0) % 3], &pos0[slot_prev(c0) % 3]] {
        if seg.cross(q).sign() == 0 {
            let adv = q.dot(seg);
            if adv.sign() > 0 && adv.sub(&seg2).sign() <= 0 {
                return Err(SurfaceError::Other("segment passes through a vertex".into()));
            }
        }
    }
    let mut entered = m.pair[slot_next(c0)];
    let mut qa = pos0[slot_prev(c0) % 3].clone();
    let mut qb = pos0[slot_next(c0) % 3].clone();
    let cap = 12 * m.n_slots() * m.n_slots() + 10_000;
    for _ in 0..cap {
        let apex = qb.add(&m.hol[slot_next(entered)]);
        let mut pos = [Vec2::<K>::zero(), Vec2::<K>::zero(), Vec2::<K>::zero()];
        pos[entered % 3] = qa.clone();
        pos[slot_next(entered) % 3] = qb.clone();
        pos[slot_prev(entered) % 3] = apex.clone();
        match inside(&pos) {
            Some(true) => return Ok((slot_tri(entered), pos)),
            None => return Err(SurfaceError::Other("segment endpoint on a boundary".into())),
            Some(false) => {}
        }
        if seg.cross(&apex).sign() == 0 {
            let adv = apex.dot(seg);
            if adv.sign() > 0 && adv.sub(&seg2).sign() <= 0 {
                return Err(SurfaceError::Other("segment passes through a vertex".into()));
            }
        }
        let sa = seg.cross(&qa).sign();
        let exit = if seg.cross(&apex).sign() == sa {
            slot_next(entered)
        } else {
            slot_prev(entered)
        };
        let (na, nb) = if exit == slot_next(entered) {
            (apex.clone(), qb.clone())
        } else {
            (qa.clone(), apex.clone())
        };
        entered = m.pair[exit];
        qa = na;
        qb = nb;
    }
    Err(SurfaceError::Other("segment location did not terminate".into()))
}

/// Subdivide triangle `t` by a new marked point of order 0 at position `p`
/// (developed coordinates matching `positions`, the corner positions indexed
/// by slot offset). Returns the new surface and the label index of the new
/// point.
pub fn insert_vertex<K: Coord>(
    m: &TriSurface<K>,
    t: usize,
    positions: &[Vec2<K>; 3],
    p: &Vec2<K>,
    name: &str,
) -> Result<(TriSurface<K>, usize), SurfaceError> {
    use crate::surface::SingLabel;
    let a = &positions[0];
    let b = &positions[1];
    let c = &positions[2];
    let (s0, s1, s2) = (3 * t, 3 * t + 1, 3 * t + 2);
    let (la, lb, lc) = (m.corner_label[s0], m.corner_label[s1], m.corner_label[s2]);
    let mut hol = m.hol.clone();
    let mut pair = m.pair.clone();
    let mut corner_label = m.corner_label.clone();
    let mut labels = m.labels.clone();
    if labels.iter().any(|l| l.name == name) {
        return Err(SurfaceError::Other(format!("label {name} already in use")));
    }
    if [s0, s1, s2].contains(&m.pair[s1]) || [s0, s1, s2].contains(&m.pair[s2]) {
        return Err(SurfaceError::Other(
            "cannot subdivide a self-glued triangle".into(),
        ));
    }
    let new_lab = labels.len();
    labels.push(SingLabel { name: name.to_string(), order: 0 });
    let n1 = hol.len(); // first new triangle
    let n2 = n1 + 3;
    // Triangle t becomes (A -> B, B -> p, p -> A).
    hol[s1] = p.sub(b);
    hol[s2] = a.sub(p);
    corner_label[s2] = new_lab;
    // New triangle (B -> C, C -> p, p -> B).
    hol.extend_from_slice(&[m.hol[s1].clone(), p.sub(c), b.sub(p)]);
    corner_label.extend_from_slice(&[lb, lc, new_lab]);
    // New triangle (C -> A, A -> p, p -> C).
    hol.extend_from_slice(&[m.hol[s2].clone(), p.sub(a), c.sub(p)]);
    corner_label.extend_from_slice(&[lc, la, new_lab]);
    pair.extend_from_slice(&[0, 0, 0, 0, 0, 0]);
    let relink = |pair: &mut Vec<Slot>, x: Slot, y: Slot| {
        pair[x] = y;
        pair[y] = x;
    };
    relink(&mut pair, n1, m.pair[s1]);
    relink(&mut pair, n2, m.pair[s2]);
    relink(&mut pair, s1, n1 + 2);
    relink(&mut pair, n1 + 1, n2 + 2);
    relink(&mut pair, n2 + 1, s2);
    let out = TriSurface::build(hol, pair, corner_label, labels, m.disc)?;
    Ok((out, new_lab))
}

/// Occupancy of one prong germ in the horizontal data diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prong {
    OccupiedOut,
    OccupiedIn,
    FreeRight,
    FreeLeft,
}

/// Labeled ribbon graph of horizontal saddle connections with prong
/// occupancy.
#[derive(Clone, Debug)]
pub struct HorizontalDiagram {
    /// (label name, order) per vertex.
    pub vertices: Vec<(String, usize)>,
    /// Directed edges (source vertex, source germ index, target vertex,
    /// target germ index), in the rightward orientation.
    pub edges: Vec<(usize, usize, usize, usize)>,
    /// Cyclic prong occupancy word per vertex, length 2(a+1), starting at a
    /// canonical germ and listing germs counterclockwise.
    pub occupancy: Vec<Vec<Prong>>,
    /// Edge lengths (float) for scaled comparisons.
    pub lengths: Vec<f64>,
    /// False when some separatrix exceeded the budget, so free prongs might
    /// in fact carry saddles longer than the budget.
    pub certified: bool,
}

/// The prong germs (corner, is_right) of a vertex class in counterclockwise
/// cyclic order, starting at the class's canonical corner.
pub fn prong_germs<K: Coord>(m: &TriSurface<K>, class: &[Slot]) -> Vec<(Slot, bool)> {
    let mut germs = Vec::new();
    for &c in class {
        // A corner can contain both a right and a left prong; order them by
        // angular position within the corner: the sector sweeps ccw from a,
        // so germs appear in the order they are crossed.
        let (a, b) = m.corner_rays(c);
        let right = m.corner_has_right_prong(c);
        let left = m.corner_has_left_prong(c);
        match (right, left) {
            (true, true) => {
                // Which comes first from a? (1,0) first iff a is below axis
                // (then we cross +x before −x) or a points right on axis.
                let first_right = a.y.sign() < 0 || (a.y.sign() == 0 && a.x.sign() > 0);
                let _ = b;
                if first_right {
                    germs.push((c, true));
                    germs.push((c, false));
                } else {
                    germs.push((c, false));
                    germs.push((c, true));
                }
            }
            (true, false) => germs.push((c, true)),
            (false, true) => germs.push((c, false)),
            (false, false) => {}
        }
    }
    germs
}

/// Build the horizontal data diagram of M. The diagram is certified when
/// every separatrix resolved within the budget; otherwise free prongs are
/// only free up to the budget.
pub fn horizontal_diagram<K: Coord>(m: &TriSurface<K>, budget: f64) -> HorizontalDiagram {
    let scan = horizontal_saddles(m, budget);
    let classes = m.vertex_classes();
    // vertex order: by label index
    let mut class_of_label = vec![0usize; m.labels.len()];
    for (i, cl) in classes.iter().enumerate() {
        class_of_label[m.corner_label[cl[0]]] = i;
    }
    let vertices: Vec<(String, usize)> = m
        .labels
        .iter()
        .map(|l| (l.name.clone(), l.order))
        .collect();
    // Germ index tables per label.
    let mut germ_index: Vec<HashMap<(Slot, bool), usize>> = Vec::new();
    let mut germs_per_label: Vec<Vec<(Slot, bool)>> = Vec::new();
    for lab in 0..m.labels.len() {
        let class = &classes[class_of_label[lab]];
        let germs = prong_germs(m, class);
        let mut idx = HashMap::new();
        for (i, g) in germs.iter().enumerate() {
            idx.insert(*g, i);
        }
        germ_index.push(idx);
        germs_per_label.push(germs);
    }
    let mut occupancy: Vec<Vec<Prong>> = germs_per_label
        .iter()
        .map(|gs| {
            gs.iter()
                .map(|&(_, right)| if right { Prong::FreeRight } else { Prong::FreeLeft })
                .collect()
        })
        .collect();
    let mut edges = Vec::new();
    let mut lengths = Vec::new();
    for s in &scan.saddles {
        let gi_out = germ_index[s.from][&(s.from_corner, true)];
        let gi_in = germ_index[s.to][&(s.to_corner, false)];
        occupancy[s.from][gi_out] = Prong::OccupiedOut;
        occupancy[s.to][gi_in] = Prong::OccupiedIn;
        edges.push((s.from, gi_out, s.to, gi_in));
        lengths.push(s.hol.len());
    }
    HorizontalDiagram {
        vertices,
        edges,
        occupancy,
        lengths,
        certified: scan.complete(),
    }
}

/// Label-, orientation-, and cyclic-order-preserving isomorphism test.
pub fn diagram_isomorphic(d1: &HorizontalDiagram, d2: &HorizontalDiagram) -> bool {
    d1.isomorphic(d2)
}

impl HorizontalDiagram {
    pub fn n_loops(&self) -> usize {
        self.edges.iter().filter(|e| e.0 == e.2).count()
    }

    pub fn n_crossing(&self) -> usize {
        self.edges.iter().filter(|e| e.0 != e.2).count()
    }

    pub fn is_maximal(&self) -> bool {
        self.occupancy
            .iter()
            .flatten()
            .all(|p| matches!(p, Prong::OccupiedOut | Prong::OccupiedIn))
    }

    /// Catalog name for genus-2 H(1,1) diagrams: maximal types A–D (the
    /// cylinder count disambiguates B, C, D) and the nonmaximal shapes 1–5.
    pub fn classify_h11(&self, n_cylinders: Option<usize>) -> Option<String> {
        if self.vertices.len() != 2
            || self.vertices.iter().any(|v| v.1 != 1)
        {
            return None;
        }
        let loops = self.n_loops();
        let c12 = self
            .edges
            .iter()
            .filter(|e| e.0 != e.2 && e.0 <= e.2)
            .count();
        let c21 = self.n_crossing() - c12;
        let (p, q) = (c12.max(c21), c12.min(c21));
        if self.is_maximal() {
            return match (loops, n_cylinders) {
                (4, _) => Some("A".into()),
                (2, _) => Some("C".into()),
                (0, Some(2)) => Some("B".into()),
                (0, Some(1)) => Some("D".into()),
                _ => None,
            };
        }
        match (loops, p, q) {
            (2, 0, 0) => Some("1".into()),
            (2, 1, 0) => Some("2".into()),
            (0, 1, 1) => Some("3".into()),
            (0, 1, 0) => Some("4".into()),
            (0, 2, 0) => Some("5".into()),
            _ => None,
        }
    }

    /// Ribbon-graph isomorphism preserving vertex names, edge orientations
    /// and the cyclic order of germs.
    pub fn isomorphic(&self, other: &HorizontalDiagram) -> bool {
        if self.vertices.len() != other.vertices.len()
            || self.edges.len() != other.edges.len()
        {
            return false;
        }
        // Vertex map forced by names.
        let mut vmap = vec![usize::MAX; self.vertices.len()];
        for (i, v) in self.vertices.iter().enumerate() {
            match other.vertices.iter().position(|w| w == v) {
                Some(j) => vmap[i] = j,
                None => return false,
            }
        }
        // Try all cyclic rotations of each vertex's germ word.
        let sizes: Vec<usize> = self.occupancy.iter().map(|o| o.len()).collect();
        for i in 0..self.vertices.len() {
            if other.occupancy[vmap[i]].len() != sizes[i] {
                return false;
            }
        }
        fn rotations_ok(a: &[Prong], b: &[Prong], r: usize) -> bool {
            let n = a.len();
            (0..n).all(|k| a[k] == b[(k + r) % n])
        }
        // Backtracking over rotation choices (words are ≤ 6 long here).
        let nv = self.vertices.len();
        let mut rot = vec![0usize; nv];
        fn search(
            d1: &HorizontalDiagram,
            d2: &HorizontalDiagram,
            vmap: &[usize],
            sizes: &[usize],
            rot: &mut Vec<usize>,
            v: usize,
        ) -> bool {
            if v == vmap.len() {
                // Check edges under the germ re-indexing.
                let mut e2: Vec<(usize, usize, usize, usize)> = d2.edges.clone();
                let mut e1: Vec<(usize, usize, usize, usize)> = d1
                    .edges
                    .iter()
                    .map(|&(a, ga, b, gb)| {
                        (
                            vmap[a],
                            (ga + rot[a]) % sizes[a],
                            vmap[b],
                            (gb + rot[b]) % sizes[b],
                        )
                    })
                    .collect();
                e1.sort_unstable();
                e2.sort_unstable();
                return e1 == e2;
            }
            for r in 0..sizes[v] {
                if rotations_ok(&d1.occupancy[v], &d2.occupancy[vmap[v]], r) {
                    rot[v] = r;
                    if search(d1, d2, vmap, sizes, rot, v + 1) {
                        return true;
                    }
                }
            }
            false
        }
        search(self, other, &vmap, &sizes, &mut rot, 0)
    }

    /// DOT rendering of the diagram.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph horizontal {\n");
        for (i, (name, order)) in self.vertices.iter().enumerate() {
            s.push_str(&format!("  v{i} [label=\"{name} (order {order})\"];\n"));
        }
        for (k, (a, ga, b, gb)) in self.edges.iter().enumerate() {
            s.push_str(&format!(
                "  v{a} -> v{b} [label=\"{:.4} [{ga}->{gb}]\"];\n",
                self.lengths[k]
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// Q-rank of the span of exact moduli in Q(√D): rank of the rational (a,b)
/// component matrix.
pub fn moduli_rational_rank(moduli: &[crate::exactnum::QuadNum]) -> usize {
    use crate::exactnum::Rational;
    use num_traits::Zero;
    let mut rows: Vec<[Rational; 2]> = moduli
        .iter()
        .map(|m| [m.a.clone(), m.b.clone()])
        .collect();
    let mut rank = 0usize;
    for col in 0..2 {
        let piv = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        if let Some(p) = piv {
            rows.swap(rank, p);
            let pv = rows[rank][col].clone();
            for r in 0..rows.len() {
                if r != rank && !rows[r][col].is_zero() {
                    let f = &rows[r][col] / &pv;
                    for c in 0..2 {
                        let delta = &f * &rows[rank][c];
                        rows[r][c] = &rows[r][c] - &delta;
                    }
                }
            }
            rank += 1;
        }
    }
    rank
}

/// CSV export of saddle connections: x, y, length, from, to.
pub fn saddles_to_csv<K: Coord>(m: &TriSurface<K>, v: &[SaddleConnection<K>]) -> String {
    let mut s = String::from("x,y,length,from,to\n");
    for sc in v {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            sc.hol.x.to_f64(),
            sc.hol.y.to_f64(),
            sc.hol.len(),
            m.labels[sc.from].name,
            m.labels[sc.to].name,
        ));
    }
    s
}

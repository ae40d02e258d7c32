//! Real multiplication on genus-2 surfaces: integer homology of the glued
//! triangulation, the intersection form, detection of a quadratic-order
//! action on periods, and the slit-torus constructions that realize it.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exactnum::{ratio, NumError, QuadNum, Rational};
use crate::fixtures::{infer_labels, lattice_torus};
use crate::scan::{
    corner_containing_dir, horizontal_saddles, insert_saddle_edge, insert_vertex,
    locate_segment_end,
};
use crate::surface::{
    slot_next, Coord, Slot, SurfaceError, TriSurface, Vec2,
};

#[derive(Debug, thiserror::Error)]
pub enum EigenError {
    #[error("surface error: {0}")]
    Surface(#[from] SurfaceError),
    #[error("number error: {0}")]
    Num(#[from] NumError),
    #[error("homology has torsion")]
    Torsion,
    #[error("slit of length {0} does not embed")]
    SlitOverlap(f64),
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

type QVec = Vec2<QuadNum>;
type Zmat = Vec<Vec<BigInt>>;

// ---------------------------------------------------------------------------
// Integer matrices: diagonalization by unimodular row/column operations.
// ---------------------------------------------------------------------------

fn zmat_identity(n: usize) -> Zmat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // Caller guarantees b > 0; nearest quotient keeps remainders small.
    let (q, r) = a.div_mod_floor(b);
    if &r * 2 > *b {
        q + 1
    } else {
        q
    }
}

/// Bring `a` to diagonal form by unimodular operations. `v` collects the
/// column operations (so `a_new = u a_old v` for some unimodular `u`), and
/// `uinv` collects the inverses of the row operations (`a_old = uinv a_new
/// v^{-1}` up to the column part): its columns express the new row basis in
/// the old coordinates.
fn diagonalize(a: &mut Zmat, mut v: Option<&mut Zmat>, mut uinv: Option<&mut Zmat>) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let row_swap = |a: &mut Zmat, uinv: &mut Option<&mut Zmat>, i: usize, j: usize| {
        a.swap(i, j);
        if let Some(u) = uinv {
            for r in u.iter_mut() {
                r.swap(i, j);
            }
        }
    };
    // row_i -= q * row_j
    let row_sub = |a: &mut Zmat, uinv: &mut Option<&mut Zmat>, i: usize, j: usize, q: &BigInt| {
        for c in 0..cols {
            let d = &a[j][c] * q;
            a[i][c] -= d;
        }
        if let Some(u) = uinv {
            for r in u.iter_mut() {
                let d = &r[i] * q;
                r[j] += d;
            }
        }
    };
    let row_neg = |a: &mut Zmat, uinv: &mut Option<&mut Zmat>, i: usize| {
        for c in 0..cols {
            let x = -&a[i][c];
            a[i][c] = x;
        }
        if let Some(u) = uinv {
            for r in u.iter_mut() {
                let x = -&r[i];
                r[i] = x;
            }
        }
    };
    let col_swap = |a: &mut Zmat, v: &mut Option<&mut Zmat>, i: usize, j: usize| {
        for r in a.iter_mut() {
            r.swap(i, j);
        }
        if let Some(w) = v {
            for r in w.iter_mut() {
                r.swap(i, j);
            }
        }
    };
    // col_i -= q * col_j
    let col_sub = |a: &mut Zmat, v: &mut Option<&mut Zmat>, i: usize, j: usize, q: &BigInt| {
        for r in a.iter_mut() {
            let d = &r[j] * q;
            r[i] -= d;
        }
        if let Some(w) = v {
            for r in w.iter_mut() {
                let d = &r[j] * q;
                r[i] -= d;
            }
        }
    };
    let mut t = 0;
    while t < rows && t < cols {
        // Pick the smallest nonzero entry as pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero()
                    && best
                        .map(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                        .unwrap_or(true)
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        if bi != t {
            row_swap(a, &mut uinv, t, bi);
        }
        if bj != t {
            col_swap(a, &mut v, t, bj);
        }
        if a[t][t].is_negative() {
            row_neg(a, &mut uinv, t);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = div_round(&a[i][t], &a[t][t]);
                if !q.is_zero() {
                    row_sub(a, &mut uinv, i, t, &q);
                }
                if !a[i][t].is_zero() {
                    row_swap(a, &mut uinv, t, i);
                    if a[t][t].is_negative() {
                        row_neg(a, &mut uinv, t);
                    }
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = div_round(&a[t][j], &a[t][t]);
                if !q.is_zero() {
                    col_sub(a, &mut v, j, t, &q);
                }
                if !a[t][j].is_zero() {
                    col_swap(a, &mut v, t, j);
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        t += 1;
    }
}

fn diag_rank(a: &Zmat) -> usize {
    let mut r = 0;
    while r < a.len() && r < a[0].len() && !a[r][r].is_zero() {
        r += 1;
    }
    r
}

/// Basis of the integer kernel of `a`.
fn kernel_basis(a: &Zmat) -> Vec<Vec<BigInt>> {
    if a.is_empty() || a[0].is_empty() {
        return Vec::new();
    }
    let cols = a[0].len();
    let mut b = a.clone();
    let mut v = zmat_identity(cols);
    diagonalize(&mut b, Some(&mut v), None);
    let r = diag_rank(&b);
    (r..cols)
        .map(|j| v.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Free generators of Z^k modulo the column span of `x`; errors when the
/// quotient has torsion.
fn quotient_free_basis(k: usize, x: &Zmat) -> Result<Vec<Vec<BigInt>>, EigenError> {
    let mut b = x.clone();
    let mut uinv = zmat_identity(k);
    diagonalize(&mut b, None, Some(&mut uinv));
    let r = diag_rank(&b);
    for t in 0..r {
        if !b[t][t].is_one() {
            return Err(EigenError::Torsion);
        }
    }
    Ok((r..k)
        .map(|i| uinv.iter().map(|row| row[i].clone()).collect())
        .collect())
}

// ---------------------------------------------------------------------------
// Rational linear algebra.
// ---------------------------------------------------------------------------

/// Solve `a x = rhs` over the rationals: a particular solution together with
/// a basis of the homogeneous solution space, or None when inconsistent.
fn solve_affine(
    a: &[Vec<Rational>],
    rhs: &[Rational],
) -> Option<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let rows = a.len();
    let cols = if rows == 0 { return None } else { a[0].len() };
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let mut pivot_col: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].clone();
        for c in col..=cols {
            m[row][c] = &m[row][c] / &inv;
        }
        for i in 0..rows {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for c in col..=cols {
                    let d = &m[row][c] * &f;
                    m[i][c] = &m[i][c] - &d;
                }
            }
        }
        pivot_col.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    // Consistency.
    for i in row..rows {
        if !m[i][cols].is_zero() {
            return None;
        }
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; cols];
        for &c in &pivot_col {
            v[c] = true;
        }
        v
    };
    let mut part = vec![Rational::zero(); cols];
    for (r, &c) in pivot_col.iter().enumerate() {
        part[c] = m[r][cols].clone();
    }
    let mut null = Vec::new();
    for free in 0..cols {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![Rational::zero(); cols];
        v[free] = Rational::one();
        for (r, &c) in pivot_col.iter().enumerate() {
            v[c] = -m[r][free].clone();
        }
        null.push(v);
    }
    Some((part, null))
}

// ---------------------------------------------------------------------------
// Homology of the glued surface.
// ---------------------------------------------------------------------------

/// Integer first homology of the closed surface, with cycles expressed as
/// chains on the geometric edges of the triangulation.
pub struct HomologyBasis {
    /// Representative slot (the smaller of the glued pair) per geometric edge.
    pub edge_rep: Vec<Slot>,
    /// 2g independent cycles in edge coordinates.
    pub cycles: Vec<Vec<BigInt>>,
}

pub fn homology_basis<K: Coord>(m: &TriSurface<K>) -> Result<HomologyBasis, EigenError> {
    m.validate()?;
    let n = m.n_slots();
    let mut edge_rep = Vec::new();
    let mut edge_of_slot = vec![usize::MAX; n];
    for s in 0..n {
        if s < m.pair[s] {
            edge_of_slot[s] = edge_rep.len();
            edge_of_slot[m.pair[s]] = edge_rep.len();
            edge_rep.push(s);
        }
    }
    let n_e = edge_rep.len();
    let n_v = m.labels.len();
    let n_t = m.n_triangles();
    // Vertex boundary: head minus tail of each representative slot.
    let mut b1 = vec![vec![BigInt::zero(); n_e]; n_v];
    for (e, &s) in edge_rep.iter().enumerate() {
        let tail = m.corner_label[s];
        let head = m.corner_label[slot_next(s)];
        b1[head][e] += 1;
        b1[tail][e] -= 1;
    }
    // Triangle boundary in edge coordinates.
    let mut b2 = vec![vec![BigInt::zero(); n_t]; n_e];
    for t in 0..n_t {
        for s in 3 * t..3 * t + 3 {
            let e = edge_of_slot[s];
            if s < m.pair[s] {
                b2[e][t] += 1;
            } else {
                b2[e][t] -= 1;
            }
        }
    }
    let kernel = kernel_basis(&b1);
    let k = kernel.len();
    // Express the triangle boundaries in kernel coordinates.
    let kq: Vec<Vec<Rational>> = (0..n_e)
        .map(|e| {
            (0..k)
                .map(|j| Rational::from_integer(kernel[j][e].clone()))
                .collect()
        })
        .collect();
    let mut x = vec![vec![BigInt::zero(); n_t]; k];
    for t in 0..n_t {
        let rhs: Vec<Rational> = (0..n_e)
            .map(|e| Rational::from_integer(b2[e][t].clone()))
            .collect();
        let (part, null) = solve_affine(&kq, &rhs)
            .ok_or_else(|| EigenError::Unsupported("face boundary is not a cycle".into()))?;
        if !null.is_empty() {
            return Err(EigenError::Unsupported("cycle basis is degenerate".into()));
        }
        for j in 0..k {
            if !part[j].denom().is_one() {
                return Err(EigenError::Unsupported("non-integral cycle coordinates".into()));
            }
            x[j][t] = part[j].numer().clone();
        }
    }
    let gens = quotient_free_basis(k, &x)?;
    let cycles: Vec<Vec<BigInt>> = gens
        .iter()
        .map(|g| {
            (0..n_e)
                .map(|e| {
                    let mut s = BigInt::zero();
                    for j in 0..k {
                        s += &kernel[j][e] * &g[j];
                    }
                    s
                })
                .collect()
        })
        .collect();
    if cycles.len() != 2 * m.genus() {
        return Err(EigenError::Unsupported(format!(
            "homology rank {} does not match genus {}",
            cycles.len(),
            m.genus()
        )));
    }
    Ok(HomologyBasis { edge_rep, cycles })
}

/// Total holonomy of an edge chain.
pub fn cycle_holonomy(
    m: &TriSurface<QuadNum>,
    basis: &HomologyBasis,
    cycle: &[BigInt],
) -> QVec {
    let mut out = QVec::zero();
    for (e, &s) in basis.edge_rep.iter().enumerate() {
        if cycle[e].is_zero() {
            continue;
        }
        let c = QuadNum::from_rational(Rational::from_integer(cycle[e].clone()));
        out = out.add(&m.hol[s].scale(&c));
    }
    out
}

/// Periods of the homology basis.
pub fn basis_periods(m: &TriSurface<QuadNum>, basis: &HomologyBasis) -> Vec<QVec> {
    basis.cycles.iter().map(|c| cycle_holonomy(m, basis, c)).collect()
}

/// Algebraic intersection numbers of the basis cycles, computed by pushing
/// one cycle off itself and counting how the strands of the two cycles
/// interleave in the cyclic germ order at each vertex.
pub fn intersection_matrix<K: Coord>(
    m: &TriSurface<K>,
    basis: &HomologyBasis,
) -> Result<Zmat, EigenError> {
    let n = m.n_slots();
    let classes = m.vertex_classes();
    let slot_flow = |cycle: &[BigInt]| {
        let mut f = vec![BigInt::zero(); n];
        for (e, &s) in basis.edge_rep.iter().enumerate() {
            f[s] = cycle[e].clone();
            f[m.pair[s]] = -cycle[e].clone();
        }
        f
    };
    let flows: Vec<Vec<BigInt>> = basis.cycles.iter().map(|c| slot_flow(c)).collect();
    let g2 = basis.cycles.len();
    let mut j = vec![vec![BigInt::zero(); g2]; g2];
    for p in 0..g2 {
        for q in 0..g2 {
            let mut total2 = BigInt::zero();
            for class in &classes {
                let a: Vec<&BigInt> = class.iter().map(|&c| &flows[p][c]).collect();
                let b: Vec<&BigInt> = class.iter().map(|&c| &flows[q][c]).collect();
                for i in 0..a.len() {
                    for k in i + 1..a.len() {
                        total2 += a[i] * b[k] - a[k] * b[i];
                    }
                }
            }
            if total2.is_odd() {
                return Err(EigenError::Unsupported("odd doubled intersection".into()));
            }
            j[p][q] = total2 / 2;
        }
    }
    Ok(j)
}

/// Area of the surface recovered from the basis periods and the
/// intersection form; agreement with the direct triangle sum is a
/// consistency check on both.
pub fn area_from_homology(m: &TriSurface<QuadNum>) -> Result<QuadNum, EigenError> {
    let basis = homology_basis(m)?;
    let j = intersection_matrix(m, &basis)?;
    let periods = basis_periods(m, &basis);
    let k = periods.len();
    // Invert J over the rationals.
    let jq: Vec<Vec<Rational>> = j
        .iter()
        .map(|row| row.iter().map(|x| Rational::from_integer(x.clone())).collect())
        .collect();
    let mut jinv = vec![vec![Rational::zero(); k]; k];
    for col in 0..k {
        let rhs: Vec<Rational> = (0..k)
            .map(|r| if r == col { Rational::one() } else { Rational::zero() })
            .collect();
        let (part, null) = solve_affine(&jq, &rhs)
            .ok_or_else(|| EigenError::Unsupported("intersection form is singular".into()))?;
        if !null.is_empty() {
            return Err(EigenError::Unsupported("intersection form is singular".into()));
        }
        for r in 0..k {
            jinv[r][col] = part[r].clone();
        }
    }
    let mut area = QuadNum::zero();
    for a in 0..k {
        for b in 0..k {
            if jinv[a][b].is_zero() {
                continue;
            }
            let w = QuadNum::from_rational(jinv[a][b].clone());
            let c = periods[a].cross(&periods[b]);
            area = area.checked_add(&w.checked_mul(&c)?)?;
        }
    }
    // With our orientation of the germ count the pairing of (x, y) periods
    // comes out negative; see the unit test pinning the sign on the torus.
    let half = QuadNum::from_ratio(-1, 2);
    Ok(half.checked_mul(&area)?)
}

// ---------------------------------------------------------------------------
// Detection of a quadratic-order action on periods.
// ---------------------------------------------------------------------------

/// A verified action of the real quadratic order of discriminant `d` on the
/// homology of a genus-2 surface: the generator with minimal polynomial
/// T^2 = b T + (d - b)/4 (b = d mod 2) acts by the integer matrix `rho`
/// (columns give the images of the basis cycles), is self-adjoint for the
/// intersection form, proper, and scales the period vectors by the real
/// value of the generator.
#[derive(Debug, Clone)]
pub struct RmAction {
    pub d: i64,
    pub b: i64,
    pub rho: Zmat,
}

fn isqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt().round() as i64;
    for c in (r - 2).max(0)..=r + 2 {
        if c * c == n {
            return Some(c);
        }
    }
    None
}

fn bigint_i64(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

/// Generator value (rational and surd parts over the surface field) for
/// discriminant `d` on a surface of field discriminant `d0`; None when the
/// generator does not live in that field.
fn generator_parts(d: i64, d0: u64) -> Option<(Rational, Rational)> {
    let b = if d.rem_euclid(4) == 1 { 1 } else { 0 };
    if d0 == 0 {
        let r = isqrt(d)?;
        Some((ratio(b + r, 2), Rational::zero()))
    } else {
        if d <= 0 || d as u64 % d0 != 0 {
            return None;
        }
        let k = isqrt(d / d0 as i64)?;
        if k * k * d0 as i64 != d {
            return None;
        }
        Some((ratio(b, 2), ratio(k, 2)))
    }
}

fn mat_mul(a: &Zmat, b: &Zmat) -> Zmat {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = BigInt::zero();
            for k in 0..n {
                s += &a[i][k] * &b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn satisfies_min_poly(r: &Zmat, e: i64, f: i64) -> bool {
    let n = r.len();
    let sq = mat_mul(r, r);
    for i in 0..n {
        for j in 0..n {
            let mut want = &r[i][j] * e;
            if i == j {
                want += f;
            }
            if sq[i][j] != want {
                return false;
            }
        }
    }
    true
}

fn is_scalar(r: &Zmat) -> bool {
    let n = r.len();
    for i in 0..n {
        for j in 0..n {
            if i != j && !r[i][j].is_zero() {
                return false;
            }
        }
        if r[i][i] != r[0][0] {
            return false;
        }
    }
    true
}

/// The order generated by `r` (with r^2 = e r + f) is proper when no
/// (r - t)/n with n >= 2 is again an integral quadratic element.
fn is_proper(r: &Zmat, e: i64, f: i64) -> bool {
    let n = r.len();
    let mut g = BigInt::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                g = g.gcd(&r[i][j]);
            }
        }
        g = g.gcd(&(&r[i][i] - &r[0][0]));
    }
    let Some(g) = bigint_i64(&g.abs()) else { return false };
    if g == 0 {
        // Scalar matrix; rejected elsewhere.
        return false;
    }
    let r00 = &r[0][0];
    for m in 2..=g {
        if g % m != 0 {
            continue;
        }
        let mb = BigInt::from(m);
        let t = r00.mod_floor(&mb);
        let Some(t) = bigint_i64(&t) else { continue };
        let u = e - 2 * t;
        let v = f + e * t - t * t;
        if u.rem_euclid(m) == 0 && v.rem_euclid(m * m) == 0 {
            return false;
        }
    }
    true
}

/// Search for an action of the order of discriminant `d` on the homology of
/// the genus-2 surface `m` that scales every period by the generator value.
pub fn detect_rm(m: &TriSurface<QuadNum>, d: i64) -> Result<Option<RmAction>, EigenError> {
    if d < 4 || !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(EigenError::Unsupported(format!("invalid discriminant {d}")));
    }
    if m.genus() != 2 {
        return Err(EigenError::Unsupported(format!(
            "order detection needs genus 2, got genus {}",
            m.genus()
        )));
    }
    let Some((tau_a, tau_b)) = generator_parts(d, m.disc) else {
        return Ok(None);
    };
    let basis = homology_basis(m)?;
    let periods = basis_periods(m, &basis);
    let j = intersection_matrix(m, &basis)?;
    let d0 = Rational::from_integer(BigInt::from(m.disc));
    // Unknowns: the 16 entries of rho, indexed 4*row + col.
    let idx = |row: usize, col: usize| 4 * row + col;
    let mut eqs: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for l in 0..4 {
        for comp in 0..2 {
            let get = |k: usize| {
                let v = if comp == 0 { &periods[k].x } else { &periods[k].y };
                (v.a.clone(), v.b.clone())
            };
            let (ul, vl) = get(l);
            // Rational part: sum_k u_k rho[k][l] = tau_a u_l + tau_b d0 v_l.
            let mut row = vec![Rational::zero(); 16];
            for k in 0..4 {
                row[idx(k, l)] = get(k).0;
            }
            eqs.push(row);
            rhs.push(&tau_a * &ul + &tau_b * &d0 * &vl);
            if m.disc != 0 {
                // Surd part: sum_k v_k rho[k][l] = tau_a v_l + tau_b u_l.
                let mut row = vec![Rational::zero(); 16];
                for k in 0..4 {
                    row[idx(k, l)] = get(k).1;
                }
                eqs.push(row);
                rhs.push(&tau_a * &vl + &tau_b * &ul);
            }
        }
    }
    // Self-adjointness: rho^T J = J rho.
    let jq = |a: usize, b: usize| Rational::from_integer(j[a][b].clone());
    for a in 0..4 {
        for b in 0..4 {
            let mut row = vec![Rational::zero(); 16];
            for k in 0..4 {
                // (rho^T J)_{ab} = sum_k rho[k][a] J[k][b]
                row[idx(k, a)] = &row[idx(k, a)] + &jq(k, b);
                // -(J rho)_{ab} = -sum_k J[a][k] rho[k][b]
                row[idx(k, b)] = &row[idx(k, b)] - &jq(a, k);
            }
            eqs.push(row);
            rhs.push(Rational::zero());
        }
    }
    let Some((part, null)) = solve_affine(&eqs, &rhs) else {
        return Ok(None);
    };
    if null.len() > 4 {
        return Err(EigenError::Unsupported(format!(
            "detection system too degenerate ({} free directions)",
            null.len()
        )));
    }
    let b_coef = if d.rem_euclid(4) == 1 { 1 } else { 0 };
    let f_coef = (d - b_coef) / 4;
    // Enumerate half-integer combinations of the free directions around the
    // particular solution and keep the first admissible integral action.
    let steps: Vec<Rational> = (-6..=6).map(|n| ratio(n, 2)).collect();
    let mut combo = vec![0usize; null.len()];
    loop {
        let mut cand = part.clone();
        for (ci, v) in combo.iter().zip(null.iter()) {
            let c = &steps[*ci];
            for (x, n) in cand.iter_mut().zip(v.iter()) {
                *x = &*x + &(c * n);
            }
        }
        if cand.iter().all(|x| x.denom().is_one()) {
            let rho: Zmat = (0..4)
                .map(|r| (0..4).map(|c| cand[idx(r, c)].numer().clone()).collect())
                .collect();
            if !is_scalar(&rho)
                && satisfies_min_poly(&rho, b_coef, f_coef)
                && is_proper(&rho, b_coef, f_coef)
            {
                return Ok(Some(RmAction { d, b: b_coef, rho }));
            }
        }
        // Advance the mixed-radix counter.
        let mut i = 0;
        loop {
            if i == combo.len() {
                return Ok(None);
            }
            combo[i] += 1;
            if combo[i] < steps.len() {
                break;
            }
            combo[i] = 0;
            i += 1;
        }
    }
}

/// Try ascending discriminants compatible with the surface's coefficient
/// field and return the first (hence smallest, proper) detected order.
pub fn detect_rm_auto(m: &TriSurface<QuadNum>, d_max: i64) -> Result<Option<RmAction>, EigenError> {
    let mut cands: Vec<i64> = Vec::new();
    if m.disc == 0 {
        let mut r = 2;
        while r * r <= d_max {
            cands.push(r * r);
            r += 1;
        }
    } else {
        let mut k = 1i64;
        loop {
            let d = m.disc as i64 * k * k;
            if d > d_max {
                break;
            }
            if d >= 4 && matches!(d.rem_euclid(4), 0 | 1) {
                cands.push(d);
            }
            k += 1;
        }
    }
    for d in cands {
        if let Some(act) = detect_rm(m, d)? {
            return Ok(Some(act));
        }
    }
    Ok(None)
}

/// Re-verify an action independently of how it was found: exact period
/// scaling, minimal polynomial, self-adjointness.
pub fn verify_rm(m: &TriSurface<QuadNum>, act: &RmAction) -> Result<bool, EigenError> {
    let basis = homology_basis(m)?;
    let periods = basis_periods(m, &basis);
    let (tau_a, tau_b) = match generator_parts(act.d, m.disc) {
        Some(t) => t,
        None => return Ok(false),
    };
    let tau = QuadNum::new(tau_a, tau_b, m.disc)?;
    for l in 0..4 {
        let mut img = QVec::zero();
        for k in 0..4 {
            let c = QuadNum::from_rational(Rational::from_integer(act.rho[k][l].clone()));
            img = img.add(&periods[k].scale(&c));
        }
        let want = periods[l].scale(&tau);
        if !img.sub(&want).is_zero() {
            return Ok(false);
        }
    }
    let f = (act.d - act.b) / 4;
    if !satisfies_min_poly(&act.rho, act.b, f) {
        return Ok(false);
    }
    let j = intersection_matrix(m, &basis)?;
    let lhs = |a: usize, b: usize| -> BigInt {
        (0..4).map(|k| &act.rho[k][a] * &j[k][b]).sum()
    };
    let rhs = |a: usize, b: usize| -> BigInt {
        (0..4).map(|k| &j[a][k] * &act.rho[k][b]).sum()
    };
    for a in 0..4 {
        for b in 0..4 {
            if lhs(a, b) != rhs(a, b) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Prototypes and torus pairs.
// ---------------------------------------------------------------------------

/// Integer triple (e, l, m) with d = e^2 + 4 l^2 m, gcd(l, m) = 1, selecting
/// a pair of lattices whose slit sum realizes the order of discriminant d.
#[derive(Debug, Clone)]
pub struct Prototype {
    pub e: i64,
    pub l: i64,
    pub m: i64,
    pub d: i64,
    pub lambda: QuadNum,
}

impl Prototype {
    pub fn new(e: i64, l: i64, m: i64) -> Result<Self, EigenError> {
        if l <= 0 || m <= 0 {
            return Err(EigenError::Unsupported("l and m must be positive".into()));
        }
        if l.gcd(&m) != 1 {
            return Err(EigenError::Unsupported("l and m must be coprime".into()));
        }
        let d = e * e + 4 * l * l * m;
        // lambda = (e + sqrt(d)) / 2, the positive root of x^2 = e x + l^2 m.
        let lambda = if let Some(r) = isqrt(d) {
            QuadNum::from_ratio(e + r, 2)
        } else {
            QuadNum::new(ratio(e, 2), ratio(1, 2), d as u64)?
        };
        debug_assert!(lambda.is_positive());
        debug_assert!(lambda
            .checked_mul(&lambda)
            .unwrap()
            .sub(&lambda.checked_mul(&QuadNum::from_int(e)).unwrap())
            .sub(&QuadNum::from_int(l * l * m))
            .is_zero());
        Ok(Prototype { e, l, m, d, lambda })
    }
}

/// Two marked genus-1 surfaces related by a covering of the stated degree.
pub struct TorusPair {
    pub e1: TriSurface<QuadNum>,
    pub e2: TriSurface<QuadNum>,
    pub isogeny_degree: i64,
}

/// The standard pair of lattices attached to a prototype: the square lattice
/// scaled by lambda, and the rectangular lattice (l m, 0), (0, l).
pub fn prototype_pair(p: &Prototype) -> Result<TorusPair, EigenError> {
    let z = QuadNum::zero();
    let e1 = lattice_torus(
        Vec2::new(p.lambda.clone(), z.clone()),
        Vec2::new(z.clone(), p.lambda.clone()),
        "p",
    )?;
    let e2 = lattice_torus(
        Vec2::new(QuadNum::from_int(p.l * p.m), z.clone()),
        Vec2::new(z, QuadNum::from_int(p.l)),
        "p",
    )?;
    Ok(TorusPair { e1, e2, isogeny_degree: p.l * p.l * p.m })
}

// ---------------------------------------------------------------------------
// Slit surgeries.
// ---------------------------------------------------------------------------

fn join_discs(d1: u64, d2: u64) -> Result<u64, EigenError> {
    match (d1, d2) {
        (0, d) | (d, 0) => Ok(d),
        (a, b) if a == b => Ok(a),
        (a, b) => Err(EigenError::Unsupported(format!(
            "incompatible coefficient fields {a} and {b}"
        ))),
    }
}

/// Retriangulate so that no edge is horizontal (needed before opening a
/// horizontal slit, which must cross edges transversally).
fn dehorizontalize(m: &TriSurface<QuadNum>) -> Result<TriSurface<QuadNum>, EigenError> {
    let mut cur = m.clone();
    let cap = 10 * cur.n_slots() + 20;
    for _ in 0..cap {
        let Some(s) = (0..cur.n_slots()).find(|&s| cur.hol[s].y.is_zero()) else {
            return Ok(cur);
        };
        cur = cur.flip_edge(s)?;
    }
    Err(EigenError::Unsupported("could not remove horizontal edges".into()))
}

/// Reject a horizontal slit whose closure would meet a marked point or
/// singularity: any rightward horizontal saddle of length at most `len`.
fn check_slit_embeds(m: &TriSurface<QuadNum>, len: &QuadNum) -> Result<(), EigenError> {
    let budget = len.to_f64() * 1.000001 + 1e-9;
    let hs = horizontal_saddles(m, budget);
    for s in &hs.saddles {
        if s.hol.x.sub(len).sign() <= 0 {
            return Err(EigenError::SlitOverlap(len.to_f64()));
        }
    }
    Ok(())
}

/// Open a horizontal slit of length `len` rightward from the vertex named
/// `base`: insert the far endpoint as a new marked point named `end_name`
/// and make the slit segment a triangulation edge. Returns the surface and
/// the slot of the slit edge directed away from `base`.
fn slit_edge(
    m: &TriSurface<QuadNum>,
    base: &str,
    end_name: &str,
    len: &QuadNum,
) -> Result<(TriSurface<QuadNum>, Slot), EigenError> {
    let seg = Vec2::new(len.clone(), QuadNum::zero());
    let mut cur = m.clone();
    let mut attempts = 0;
    loop {
        let lab = cur
            .label_index(base)
            .ok_or_else(|| EigenError::Unsupported(format!("no vertex named {base}")))?;
        let class = cur.class_of_label(lab);
        let c0 = corner_containing_dir(&cur, class[0], &seg);
        match locate_segment_end(&cur, c0, &seg) {
            Ok((tri, pos)) => {
                let (m2, _) = insert_vertex(&cur, tri, &pos, &seg, end_name)?;
                let lab2 = m2.label_index(base).unwrap();
                let class2 = m2.class_of_label(lab2);
                let c2 = corner_containing_dir(&m2, class2[0], &seg);
                let (m3, e) = insert_saddle_edge(&m2, c2, &seg)?;
                return Ok((m3, e));
            }
            Err(err) => {
                // The endpoint fell on an edge or the start corner had an
                // unusable boundary: perturb the triangulation by a flip and
                // try again.
                attempts += 1;
                if attempts > cur.n_slots() {
                    return Err(EigenError::Surface(err));
                }
                let flip = (0..cur.n_slots()).find_map(|s| {
                    if cur.hol[s].y.is_zero() {
                        return None;
                    }
                    cur.flip_edge(s).ok().and_then(|next| {
                        if (0..next.n_slots()).all(|t| !next.hol[t].y.is_zero()) {
                            Some(next)
                        } else {
                            None
                        }
                    })
                });
                match flip {
                    Some(next) => cur = next,
                    None => return Err(EigenError::Surface(err)),
                }
            }
        }
    }
}

/// Rebuild vertex classes after regluing and name the class containing
/// `left_corner` xi1 and the one containing `right_corner` xi2.
fn relabel_xi(
    hol: Vec<QVec>,
    pair: Vec<Slot>,
    disc: u64,
    left_corner: Slot,
    right_corner: Slot,
    swap: bool,
) -> Result<TriSurface<QuadNum>, EigenError> {
    let (corner_label, labels) = infer_labels(&hol, &pair, None);
    let mut out = TriSurface::build(hol, pair, corner_label, labels, disc)?;
    let l1 = out.corner_label[left_corner];
    let l2 = out.corner_label[right_corner];
    if l1 == l2 || out.labels.len() != 2 {
        return Err(EigenError::Unsupported(
            "slit surgery did not produce two singularities".into(),
        ));
    }
    let (n1, n2) = if swap { ("xi2", "xi1") } else { ("xi1", "xi2") };
    out.labels[l1].name = n1.to_string();
    out.labels[l2].name = n2.to_string();
    out.validate()?;
    Ok(out)
}

/// Glue two marked tori along a horizontal slit of length |t| opened at each
/// marked point. The left endpoints fuse into the singularity xi1 and the
/// right endpoints into xi2 (swapped for negative t).
pub fn connect_sum_tori(
    pair: &TorusPair,
    t: &QuadNum,
) -> Result<TriSurface<QuadNum>, EigenError> {
    if t.is_zero() {
        return Err(EigenError::Unsupported("slit length must be nonzero".into()));
    }
    let len = t.abs();
    let mut parts = Vec::new();
    for torus in [&pair.e1, &pair.e2] {
        if torus.genus() != 1 || torus.labels.len() != 1 {
            return Err(EigenError::Unsupported(
                "connected sum needs genus-1 surfaces with one marked point".into(),
            ));
        }
        check_slit_embeds(torus, &len)?;
        let ob = dehorizontalize(torus)?;
        let base = ob.labels[0].name.clone();
        let (slitted, e) = slit_edge(&ob, &base, "slit_end", &len)?;
        parts.push((slitted, e));
    }
    let (m1, e1) = &parts[0];
    let (m2, e2) = &parts[1];
    let off = m1.n_slots();
    let disc = join_discs(m1.disc, m2.disc)?;
    let mut hol = m1.hol.clone();
    hol.extend(m2.hol.iter().cloned());
    let mut pair_tab: Vec<Slot> = m1.pair.clone();
    pair_tab.extend(m2.pair.iter().map(|&s| s + off));
    let (e1, e2) = (*e1, *e2 + off);
    let (eb1, eb2) = (pair_tab[e1], pair_tab[e2]);
    // The only orientation-compatible regluing exchanges the slit banks.
    pair_tab[e1] = eb2;
    pair_tab[eb2] = e1;
    pair_tab[e2] = eb1;
    pair_tab[eb1] = e2;
    relabel_xi(hol, pair_tab, disc, e1, eb1, t.is_negative())
}

/// A genus-1 surface with two marked points whose difference is exactly
/// `d`-torsion in the group law.
pub struct TorsionTorus {
    pub e: TriSurface<QuadNum>,
    pub p: String,
    pub q: String,
    pub d: i64,
}

fn rational_coord(x: &QuadNum) -> Result<Rational, EigenError> {
    if x.is_rational() {
        Ok(x.a.clone())
    } else {
        Err(EigenError::Unsupported(
            "marked-point difference is not torsion".into(),
        ))
    }
}

fn frac_part(r: &Rational) -> Rational {
    r - Rational::from_integer(r.floor().to_integer())
}

/// Torus C / (Z u + Z v) triangulated with two marked vertices: the lattice
/// point p and the interior point q = p + offset. The basis of the
/// fundamental parallelogram is chosen so that no triangulation edge is
/// horizontal and q avoids all edges.
pub fn two_marked_torus(
    u: &QVec,
    v: &QVec,
    offset: &QVec,
) -> Result<TriSurface<QuadNum>, EigenError> {
    let det = u.cross(v);
    if det.is_zero() {
        return Err(EigenError::Unsupported("degenerate lattice".into()));
    }
    let (u, v) = if det.is_negative() { (v.clone(), u.clone()) } else { (u.clone(), v.clone()) };
    // Offset coordinates in the (u, v) basis must be rational (torsion).
    let duv = u.cross(&v);
    let alpha = rational_coord(&offset.cross(&v).checked_div(&duv)?)?;
    let beta = rational_coord(&u.cross(offset).checked_div(&duv)?)?;
    let comb = |i: i64, j: i64| {
        u.scale(&QuadNum::from_int(i)).add(&v.scale(&QuadNum::from_int(j)))
    };
    for coeffs in unimodular_bases() {
        let [i1, i2, j1, j2] = coeffs;
        let a = comb(i1, i2);
        let b = comb(j1, j2);
        if !a.cross(&b).is_positive() {
            continue;
        }
        if a.y.is_zero() || b.y.is_zero() {
            continue;
        }
        // Offset coordinates in the (a, b) basis: invert the integer change
        // of basis (det +-1).
        let det_c = Rational::from_integer(BigInt::from(i1 * j2 - i2 * j1));
        let rq = |n: i64| Rational::from_integer(BigInt::from(n));
        let (fa, fb) = {
            // (alpha, beta) = (ga, gb) * [[i1, i2], [j1, j2]]
            let ga = (&alpha * &rq(j2) - &beta * &rq(i2)) / &det_c;
            let gb = (&beta * &rq(i1) - &alpha * &rq(j1)) / &det_c;
            (frac_part(&ga), frac_part(&gb))
        };
        if fa.is_zero() || fb.is_zero() {
            continue;
        }
        let q = a
            .scale(&QuadNum::from_rational(fa))
            .add(&b.scale(&QuadNum::from_rational(fb)));
        let spokes = [
            q.clone(),
            q.sub(&a),
            q.sub(&a).sub(&b),
            q.sub(&b),
        ];
        if spokes.iter().any(|s| s.y.is_zero()) {
            continue;
        }
        return build_two_marked(&a, &b, &q);
    }
    Err(EigenError::Unsupported(
        "no admissible triangulation basis found".into(),
    ))
}

fn unimodular_bases() -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for i1 in -3i64..=3 {
        for i2 in -3i64..=3 {
            for j1 in -3i64..=3 {
                for j2 in -3i64..=3 {
                    if (i1 * j2 - i2 * j1).abs() == 1 {
                        out.push([i1, i2, j1, j2]);
                    }
                }
            }
        }
    }
    // Prefer small bases.
    out.sort_by_key(|c| c.iter().map(|x| x.abs()).sum::<i64>());
    out
}

fn build_two_marked(a: &QVec, b: &QVec, q: &QVec) -> Result<TriSurface<QuadNum>, EigenError> {
    use crate::surface::SingLabel;
    let ab = a.add(b);
    // Four triangles fanning from q to the parallelogram corners 0, a, a+b, b.
    let hol = vec![
        // (0, a, q)
        a.clone(),
        q.sub(a),
        q.neg(),
        // (a, a+b, q)
        b.clone(),
        q.sub(&ab),
        a.sub(q),
        // (a+b, b, q)
        a.neg(),
        q.sub(b),
        ab.sub(q),
        // (b, 0, q)
        b.neg(),
        q.clone(),
        b.sub(q),
    ];
    let pair = vec![6, 5, 10, 9, 8, 1, 0, 11, 4, 3, 2, 7];
    let corner_label = vec![0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1];
    let labels = vec![
        SingLabel { name: "p".to_string(), order: 0 },
        SingLabel { name: "q".to_string(), order: 0 },
    ];
    let disc = [a, b, q]
        .iter()
        .flat_map(|w| [w.x.disc, w.y.disc])
        .try_fold(0u64, join_discs)?;
    let m = TriSurface::build(hol, pair, corner_label, labels, disc)?;
    m.validate()?;
    Ok(m)
}

impl TorsionTorus {
    /// Marked torus with q = p + offset; the torsion order is the least d
    /// with d * offset in the lattice.
    pub fn new(u: &QVec, v: &QVec, offset: &QVec) -> Result<Self, EigenError> {
        let duv = u.cross(v);
        if duv.is_zero() {
            return Err(EigenError::Unsupported("degenerate lattice".into()));
        }
        let alpha = rational_coord(&offset.cross(v).checked_div(&duv)?)?;
        let beta = rational_coord(&u.cross(offset).checked_div(&duv)?)?;
        let d = alpha.denom().lcm(beta.denom());
        let d = d
            .to_i64()
            .ok_or_else(|| EigenError::Unsupported("torsion order overflow".into()))?;
        if d <= 1 {
            return Err(EigenError::Unsupported(
                "marked points coincide (offset lies in the lattice)".into(),
            ));
        }
        let e = two_marked_torus(u, v, offset)?;
        Ok(TorsionTorus { e, p: "p".to_string(), q: "q".to_string(), d })
    }
}

/// Cut one torus along two horizontal slits of length |t| opened at its two
/// marked points and reglue them crosswise. The left endpoints fuse into
/// xi1, the right endpoints into xi2 (swapped for negative t).
pub fn self_connect_sum(
    tt: &TorsionTorus,
    t: &QuadNum,
) -> Result<TriSurface<QuadNum>, EigenError> {
    if t.is_zero() {
        return Err(EigenError::Unsupported("slit length must be nonzero".into()));
    }
    let len = t.abs();
    // Any horizontal saddle of length <= |t| between p, q, or back to
    // itself makes the two slits overlap or touch.
    check_slit_embeds(&tt.e, &len)?;
    let (m1, _e_p) = slit_edge(&tt.e, &tt.p, "rp", &len)?;
    let (m2, _) = slit_edge(&m1, &tt.q, "rq", &len)?;
    // Locate both slit edges by content on the final triangulation.
    let lab_p = m2.label_index(&tt.p).unwrap();
    let lab_q = m2.label_index(&tt.q).unwrap();
    let find = |lab: usize| {
        (0..m2.n_slots()).find(|&s| {
            m2.corner_label[s] == lab
                && m2.hol[s].y.is_zero()
                && m2.hol[s].x.sub(&len).is_zero()
        })
    };
    let (Some(ep), Some(eq)) = (find(lab_p), find(lab_q)) else {
        return Err(EigenError::Unsupported("slit edges were lost".into()));
    };
    let mut pair = m2.pair.clone();
    let (bp, bq) = (pair[ep], pair[eq]);
    pair[ep] = bq;
    pair[bq] = ep;
    pair[eq] = bp;
    pair[bp] = eq;
    relabel_xi(m2.hol.clone(), pair, m2.disc, ep, bp, t.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn torus_homology_is_the_lattice() {
        let m = fixtures::square_torus();
        let basis = homology_basis(&m).unwrap();
        assert_eq!(basis.cycles.len(), 2);
        let p = basis_periods(&m, &basis);
        let det = p[0].cross(&p[1]);
        assert!(det.abs().sub(&QuadNum::one()).is_zero());
        let j = intersection_matrix(&m, &basis).unwrap();
        assert!(j[0][0].is_zero() && j[1][1].is_zero());
        assert_eq!(j[0][1], -j[1][0].clone());
        assert!(j[0][1].abs().is_one());
    }

    #[test]
    fn area_identity_from_periods() {
        for m in [fixtures::square_torus(), fixtures::golden_l(), fixtures::decagon()] {
            let a = area_from_homology(&m).unwrap();
            assert!(
                a.sub(&m.area()).is_zero(),
                "period area {} vs direct {}",
                a.to_f64(),
                m.area().to_f64()
            );
        }
    }

    #[test]
    fn intersection_form_is_unimodular_genus2() {
        let m = fixtures::decagon();
        let basis = homology_basis(&m).unwrap();
        assert_eq!(basis.cycles.len(), 4);
        let j = intersection_matrix(&m, &basis).unwrap();
        for a in 0..4 {
            assert!(j[a][a].is_zero());
            for b in 0..4 {
                assert_eq!(j[a][b], -j[b][a].clone());
            }
        }
        // det J = 1 for a symplectic lattice: compute by rational elimination.
        let jq: Vec<Vec<Rational>> = j
            .iter()
            .map(|r| r.iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect();
        let mut det = Rational::one();
        let mut m2 = jq;
        for c in 0..4 {
            let p = (c..4).find(|&r| !m2[r][c].is_zero()).unwrap();
            if p != c {
                m2.swap(p, c);
                det = -det;
            }
            det = &det * &m2[c][c];
            for r in c + 1..4 {
                let f = &m2[r][c] / &m2[c][c];
                for cc in c..4 {
                    let d = &m2[c][cc] * &f;
                    m2[r][cc] = &m2[r][cc] - &d;
                }
            }
        }
        assert_eq!(det, Rational::one());
    }
}

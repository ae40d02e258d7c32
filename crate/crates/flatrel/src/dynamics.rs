//! Flow experiments: horocycle and circle averages, the horocycle time
//! change, minimal-set detection, saddle-connection counting growth, and
//! nondivergence statistics. All flows run in float mode; exact surfaces
//! are converted once at experiment start.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exactnum::QuadNum;
use crate::scan::{
    horizontal_cylinders, moduli_rational_rank, saddle_connections, CylinderVerdict, ScanConfig,
    ScanError,
};
use crate::surface::{Coord, Mat2, SingLabel, SurfaceError, TriSurface, Vec2};

#[derive(Debug, thiserror::Error)]
pub enum DynError {
    #[error("surface error: {0}")]
    Surface(#[from] SurfaceError),
    #[error("scan error: {0}")]
    Scan(#[from] ScanError),
    #[error("observable undefined at sample {index} (s = {s})")]
    BadObservable { index: usize, s: f64 },
    #[error("time change pole: d - c t vanishes")]
    Pole,
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

/// Apply the horocycle shear u_s to a float surface.
pub fn shear_surface(m: &TriSurface<f64>, s: f64) -> Result<TriSurface<f64>, SurfaceError> {
    m.apply_gl2(&Mat2::shear(s))
}

// ---------------------------------------------------------------------------
// Birkhoff and circle averages.
// ---------------------------------------------------------------------------

/// Trapezoidal estimate of (1/T) ∫₀ᵀ φ(u_s M) ds on a uniform grid with
/// `steps` subintervals.
pub fn birkhoff_average(
    m: &TriSurface<f64>,
    phi: &dyn Fn(&TriSurface<f64>) -> f64,
    t: f64,
    steps: usize,
) -> Result<f64, DynError> {
    if !(t > 0.0) || steps == 0 {
        return Err(DynError::Unsupported("need T > 0 and at least one step".into()));
    }
    let h = t / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let s = i as f64 * h;
        let v = phi(&shear_surface(m, s)?);
        if !v.is_finite() {
            return Err(DynError::BadObservable { index: i, s });
        }
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * v;
    }
    Ok(sum * h / t)
}

/// Uniform-grid estimate of (1/2π) ∫₀^{2π} φ(g_t r_θ M) dθ.
pub fn circle_average(
    m: &TriSurface<f64>,
    phi: &dyn Fn(&TriSurface<f64>) -> f64,
    t: f64,
    n_angles: usize,
) -> Result<f64, DynError> {
    if t < 0.0 || n_angles == 0 {
        return Err(DynError::Unsupported("need t >= 0 and at least one angle".into()));
    }
    let g = Mat2::geodesic(t);
    let mut sum = 0.0;
    for k in 0..n_angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_angles as f64;
        let moved = m.apply_gl2(&g.mul_mat(&Mat2::rotation(theta)))?;
        let v = phi(&moved);
        if !v.is_finite() {
            return Err(DynError::BadObservable { index: k, s: theta });
        }
        sum += v;
    }
    Ok(sum / n_angles as f64)
}

// ---------------------------------------------------------------------------
// Time change between nearby horocycle orbits.
// ---------------------------------------------------------------------------

pub struct TimeChange {
    pub s: f64,
    /// u_{s} g u_{-t}: lower triangular when s is chosen correctly.
    pub residual: Mat2<f64>,
}

/// For a transversal displacement g (det 1) between two horocycle orbits,
/// the time s on the second orbit matching time t on the first is
/// s = (a t − b)/(d − c t), and the recentering matrix u_s g u_{−t} is
/// lower triangular with diagonal (1/(d − ct), d − ct).
pub fn time_change(g: &Mat2<f64>, t: f64) -> Result<TimeChange, DynError> {
    if (g.det() - 1.0).abs() > 1e-9 {
        return Err(DynError::Unsupported("time change needs det g = 1".into()));
    }
    let denom = g.d - g.c * t;
    if denom.abs() < 1e-12 {
        return Err(DynError::Pole);
    }
    let s = (g.a * t - g.b) / denom;
    let residual = Mat2::shear(s).mul_mat(g).mul_mat(&Mat2::shear(-t));
    Ok(TimeChange { s, residual })
}

// ---------------------------------------------------------------------------
// Minimal sets.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum MinimalSetVerdict {
    /// The horizontal direction is completely periodic: the horocycle orbit
    /// closure is a compact torus whose dimension is the rational rank of
    /// the cylinder moduli (1 = periodic orbit).
    Minimal { dimension: usize, n_cylinders: usize, moduli: Vec<QuadNum> },
    /// No full horizontal cylinder decomposition was found within the
    /// budget. A genuinely aperiodic horizontal direction has a non-compact
    /// orbit closure, but a finite scan cannot certify aperiodicity, so
    /// this verdict is always uncertified.
    NotCompactClosure { certified: bool },
}

pub fn minimal_set(m: &TriSurface<QuadNum>, budget: f64) -> Result<MinimalSetVerdict, DynError> {
    match horizontal_cylinders(m, budget)? {
        CylinderVerdict::Periodic(cyls) => {
            let moduli: Vec<QuadNum> = cyls.iter().map(|c| c.modulus()).collect();
            let dimension = moduli_rational_rank(&moduli);
            Ok(MinimalSetVerdict::Minimal { dimension, n_cylinders: cyls.len(), moduli })
        }
        CylinderVerdict::Undetermined => {
            Ok(MinimalSetVerdict::NotCompactClosure { certified: false })
        }
    }
}

// ---------------------------------------------------------------------------
// Counting growth.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CountingCurve {
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
    /// N(T) / T².
    pub estimates: Vec<f64>,
}

impl CountingCurve {
    /// Least-squares fit of N(T) = C T² over the top half of the radii.
    pub fn quadratic_constant(&self) -> f64 {
        let lo = self.radii.len() / 2;
        let (mut num, mut den) = (0.0, 0.0);
        for i in lo..self.radii.len() {
            let t2 = self.radii[i] * self.radii[i];
            num += self.counts[i] as f64 * t2;
            den += t2 * t2;
        }
        num / den
    }

    /// Bootstrap spread of the fitted constant over resampled radii in the
    /// fit window, with a fixed seed for reproducibility.
    pub fn bootstrap_spread(&self, seed: u64, rounds: usize) -> f64 {
        let lo = self.radii.len() / 2;
        let idx: Vec<usize> = (lo..self.radii.len()).collect();
        if idx.is_empty() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fits = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..idx.len() {
                let i = idx[rng.gen_range(0..idx.len())];
                let t2 = self.radii[i] * self.radii[i];
                num += self.counts[i] as f64 * t2;
                den += t2 * t2;
            }
            fits.push(num / den);
        }
        let mean = fits.iter().sum::<f64>() / fits.len() as f64;
        (fits.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / fits.len() as f64).sqrt()
    }
}

/// Count saddle connections (both orientations) up to each of `samples`
/// radii spaced uniformly in (0, t_max]. A single enumeration at the
/// largest radius is binned per radius.
pub fn count_growth<K: Coord>(
    m: &TriSurface<K>,
    t_max: f64,
    samples: usize,
    cfg: &ScanConfig,
) -> Result<CountingCurve, DynError> {
    if !(t_max > 0.0) || samples == 0 {
        return Err(DynError::Unsupported("need t_max > 0 and samples > 0".into()));
    }
    let l2 = K::from_ratio((t_max * t_max * 1e6).ceil() as i64, 1_000_000);
    let found = saddle_connections(m, &l2, cfg)?;
    let mut lengths: Vec<f64> = found.iter().map(|s| s.hol.to_f64().norm2().sqrt()).collect();
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let radii: Vec<f64> = (1..=samples).map(|i| t_max * i as f64 / samples as f64).collect();
    let counts: Vec<usize> = radii
        .iter()
        .map(|t| lengths.partition_point(|l| *l <= *t + 1e-9))
        .collect();
    let estimates = radii.iter().zip(&counts).map(|(t, &n)| n as f64 / (t * t)).collect();
    Ok(CountingCurve { radii, counts, estimates })
}

/// Brute-force oracle for the square torus: primitive integer vectors of
/// length at most T, counting both orientations.
pub fn primitive_lattice_count(t: f64) -> usize {
    let r = t.floor() as i64;
    let mut n = 0usize;
    for p in -r..=r {
        for q in -r..=r {
            if (p, q) == (0, 0) {
                continue;
            }
            if ((p * p + q * q) as f64) > t * t {
                continue;
            }
            if num_integer::gcd(p.abs(), q.abs()) == 1 {
                n += 1;
            }
        }
    }
    n
}

// ---------------------------------------------------------------------------
// Systole and nondivergence statistics.
// ---------------------------------------------------------------------------

/// Length of the shortest saddle connection. The shortest connection is
/// always an edge of a Delaunay retriangulation, so one pass of flips
/// suffices.
pub fn systole(m: &TriSurface<f64>) -> Result<f64, DynError> {
    let d = m.make_delaunay()?;
    Ok((0..d.n_slots())
        .map(|s| d.hol[s].len())
        .fold(f64::INFINITY, f64::min))
}

/// Fraction of orbit time {s ∈ [0,T]} for which the systole of u_s M is
/// below each ε in the grid, measured on a uniform grid of `steps` samples.
pub fn nondivergence_profile(
    m: &TriSurface<f64>,
    t: f64,
    steps: usize,
    eps_grid: &[f64],
) -> Result<Vec<(f64, f64)>, DynError> {
    if !(t > 0.0) || steps == 0 {
        return Err(DynError::Unsupported("need T > 0 and steps > 0".into()));
    }
    let h = t / steps as f64;
    // Advance incrementally and keep the triangulation Delaunay so each step
    // only needs a few flips.
    let mut cur = m.make_delaunay()?;
    let step = Mat2::shear(h);
    let mut systoles = Vec::with_capacity(steps);
    for _ in 0..steps {
        cur = cur.apply_gl2(&step)?.make_delaunay()?;
        let sys = (0..cur.n_slots())
            .map(|s| cur.hol[s].len())
            .fold(f64::INFINITY, f64::min);
        systoles.push(sys);
    }
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            let n = systoles.iter().filter(|&&s| s < eps).count();
            (eps, n as f64 / steps as f64)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Ensembles and the equidistribution battery.
// ---------------------------------------------------------------------------

/// Genus-1 float surface from a positively oriented basis.
pub fn float_torus(u: Vec2<f64>, v: Vec2<f64>) -> Result<TriSurface<f64>, DynError> {
    if u.cross(&v) <= 0.0 {
        return Err(DynError::Unsupported("need a positively oriented basis".into()));
    }
    let hol = vec![u.clone(), v.clone(), u.add(&v).neg(), u.add(&v), u.neg(), v.neg()];
    let pair = vec![4, 5, 3, 2, 0, 1];
    let corner_label = vec![0; 6];
    let labels = vec![SingLabel { name: "p".to_string(), order: 0 }];
    Ok(TriSurface::build(hol, pair, corner_label, labels, 0)?)
}

/// The closed horocycle of unit-covolume square lattices: u_s Z² for s on a
/// uniform grid of one period.
pub fn periodic_horocycle_ensemble(n: usize) -> Result<Vec<TriSurface<f64>>, DynError> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let s = k as f64 / n as f64;
        let base = float_torus(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0))?;
        out.push(shear_surface(&base, s)?);
    }
    Ok(out)
}

/// Unit-covolume lattices sampled from the Haar probability measure on the
/// modular surface (exact rejection sampling on the standard fundamental
/// domain, plus a uniform rotation), with a fixed seed.
pub fn haar_torus_ensemble(n: usize, seed: u64) -> Result<Vec<TriSurface<f64>>, DynError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0 = 3f64.sqrt() / 2.0;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // Density ∝ y^{-2} dy on [y0, ∞): inverse CDF.
        let y = y0 / (1.0 - rng.gen::<f64>());
        let x = rng.gen::<f64>() - 0.5;
        if x * x + y * y < 1.0 {
            continue;
        }
        let scale = 1.0 / y.sqrt();
        let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let rot = Mat2::rotation(theta);
        let u = rot.apply(&Vec2::new(scale, 0.0));
        let v = rot.apply(&Vec2::new(x * scale, y * scale));
        out.push(float_torus(u, v)?);
    }
    Ok(out)
}

/// Push every member of an ensemble by the same matrix.
pub fn push_ensemble(
    ens: &[TriSurface<f64>],
    g: &Mat2<f64>,
) -> Result<Vec<TriSurface<f64>>, DynError> {
    ens.iter().map(|m| Ok(m.apply_gl2(g)?)).collect()
}

/// Shortest and second-shortest (non-parallel) Delaunay edge vectors,
/// normalized to the upper half plane of directions.
fn short_basis(m: &TriSurface<f64>) -> Result<(Vec2<f64>, Vec2<f64>), DynError> {
    let d = m.make_delaunay()?;
    let mut edges: Vec<Vec2<f64>> = (0..d.n_slots())
        .filter(|&s| s < d.pair[s])
        .map(|s| d.hol[s].clone())
        .collect();
    edges.sort_by(|a, b| a.norm2().partial_cmp(&b.norm2()).unwrap());
    let v1 = edges[0].clone();
    let v2 = edges
        .iter()
        .find(|e| (e.cross(&v1)).abs() > 1e-12 * (e.len() * v1.len()).max(1e-300))
        .cloned()
        .unwrap_or_else(|| edges[edges.len() - 1].clone());
    Ok((v1, v2))
}

/// A fixed battery of eight bounded geometric observables used for
/// statistical equidistribution comparisons.
pub fn observable_battery() -> Vec<(&'static str, fn(&TriSurface<f64>) -> f64)> {
    fn sys(m: &TriSurface<f64>) -> f64 {
        systole(m).unwrap_or(f64::NAN)
    }
    vec![
        ("sys_sat", |m| {
            let s = sys(m);
            s / (1.0 + s)
        }),
        ("sys_sq_over_area", |m| {
            let s = sys(m);
            (s * s / m.area()).min(2.0)
        }),
        ("short_cos", |m| match short_basis(m) {
            Ok((v1, _)) => v1.x.abs() / v1.len(),
            Err(_) => f64::NAN,
        }),
        ("short_sin", |m| match short_basis(m) {
            Ok((v1, _)) => v1.y.abs() / v1.len(),
            Err(_) => f64::NAN,
        }),
        ("second_sat", |m| match short_basis(m) {
            Ok((_, v2)) => {
                let l = v2.len();
                l / (1.0 + l)
            }
            Err(_) => f64::NAN,
        }),
        ("short_ratio", |m| match short_basis(m) {
            Ok((v1, v2)) => v1.len() / v2.len().max(1e-300),
            Err(_) => f64::NAN,
        }),
        ("second_cos", |m| match short_basis(m) {
            Ok((_, v2)) => v2.x.abs() / v2.len(),
            Err(_) => f64::NAN,
        }),
        ("cell_skew", |m| match short_basis(m) {
            Ok((v1, v2)) => {
                let c = v1.cross(&v2).abs();
                (c / (v1.len() * v2.len())).clamp(0.0, 1.0)
            }
            Err(_) => f64::NAN,
        }),
    ]
}

/// Ensemble mean of an observable together with a bootstrap standard error
/// (fixed seed, deterministic).
pub fn ensemble_mean_se(
    ens: &[TriSurface<f64>],
    phi: &dyn Fn(&TriSurface<f64>) -> f64,
    rounds: usize,
    seed: u64,
) -> Result<(f64, f64), DynError> {
    let vals: Vec<f64> = ens.iter().map(|m| phi(m)).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(DynError::BadObservable { index: i, s: f64::NAN });
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut s = 0.0;
        for _ in 0..vals.len() {
            s += vals[rng.gen_range(0..vals.len())];
        }
        means.push(s / vals.len() as f64);
    }
    let bm = means.iter().sum::<f64>() / rounds as f64;
    let se = (means.iter().map(|m| (m - bm) * (m - bm)).sum::<f64>() / rounds as f64).sqrt();
    Ok((mean, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn constant_observable_averages_to_one() {
        let m = fixtures::square_torus().to_float();
        let one = |_: &TriSurface<f64>| 1.0;
        assert!((birkhoff_average(&m, &one, 3.0, 50).unwrap() - 1.0).abs() < 1e-12);
        assert!((circle_average(&m, &one, 1.0, 64).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertical_component_is_shear_invariant() {
        let m = fixtures::golden_l().to_float();
        let y0 = m.hol[1].y;
        let phi = move |n: &TriSurface<f64>| n.hol[1].y;
        let avg = birkhoff_average(&m, &phi, 5.0, 40).unwrap();
        assert!((avg - y0).abs() < 1e-12);
    }

    #[test]
    fn periodic_horocycle_average_matches_over_ten_periods() {
        let m = fixtures::square_torus().to_float();
        let phi = |n: &TriSurface<f64>| systole(n).unwrap();
        let one = birkhoff_average(&m, &phi, 1.0, 400).unwrap();
        let ten = birkhoff_average(&m, &phi, 10.0, 4000).unwrap();
        assert!((one - ten).abs() < 1e-9, "one {one} vs ten {ten}");
    }

    #[test]
    fn time_change_identities() {
        let tc = time_change(&Mat2::identity(), 0.7).unwrap();
        assert!((tc.s - 0.7).abs() < 1e-15);
        assert!((tc.residual.a - 1.0).abs() < 1e-15 && tc.residual.b.abs() < 1e-15);
        // Diagonal g_tau rescales time by e^tau.
        let tau = 0.3;
        let g = Mat2::geodesic(tau);
        let tc = time_change(&g, 0.5).unwrap();
        assert!((tc.s - tau.exp() * 0.5).abs() < 1e-12);
        assert!(tc.residual.b.abs() < 1e-12);
    }

    #[test]
    fn time_change_residual_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let c = 0.2 * (rng.gen::<f64>() - 0.5);
            let b = 0.2 * (rng.gen::<f64>() - 0.5);
            let a = 1.0 + 0.2 * (rng.gen::<f64>() - 0.5);
            let d = (1.0 + b * c) / a;
            let g = Mat2::new(a, b, c, d);
            let t = 4.0 * (rng.gen::<f64>() - 0.5);
            if (d - c * t).abs() < 1e-3 {
                continue;
            }
            let tc = time_change(&g, t).unwrap();
            let denom = d - c * t;
            assert!(tc.residual.b.abs() < 1e-12);
            assert!((tc.residual.a - 1.0 / denom).abs() < 1e-12);
            assert!((tc.residual.c - c).abs() < 1e-12);
            assert!((tc.residual.d - denom).abs() < 1e-12);
        }
    }

    #[test]
    fn minimal_sets_of_the_cylinder_fixtures() {
        match minimal_set(&fixtures::three_cylinder(), 100.0).unwrap() {
            MinimalSetVerdict::Minimal { dimension, n_cylinders, .. } => {
                assert_eq!((dimension, n_cylinders), (2, 3));
            }
            other => panic!("expected minimal, got {other:?}"),
        }
        match minimal_set(&fixtures::type_b_origami(), 100.0).unwrap() {
            MinimalSetVerdict::Minimal { dimension, n_cylinders, .. } => {
                assert_eq!((dimension, n_cylinders), (1, 2));
            }
            other => panic!("expected periodic orbit, got {other:?}"),
        }
    }

    #[test]
    fn torus_counting_matches_lattice_oracle() {
        let m = fixtures::square_torus();
        let curve = count_growth(&m, 12.0, 12, &ScanConfig::default()).unwrap();
        for (t, n) in curve.radii.iter().zip(&curve.counts) {
            assert_eq!(*n, primitive_lattice_count(*t), "radius {t}");
        }
        // Counts are nondecreasing.
        assert!(curve.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn systole_of_standard_fixtures() {
        let m = fixtures::square_torus().to_float();
        assert!((systole(&m).unwrap() - 1.0).abs() < 1e-12);
        // Shearing far does not change the flat geometry's scale invariants
        // drastically: systole of u_1 Z^2 is still 1.
        assert!((systole(&shear_surface(&m, 1.0).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nondivergence_profile_limits() {
        let m = fixtures::decagon().to_float();
        let prof = nondivergence_profile(&m, 50.0, 500, &[0.0, 0.05, 0.2, 1e6]).unwrap();
        assert_eq!(prof[0].1, 0.0);
        assert_eq!(prof[3].1, 1.0);
        // Monotone in epsilon.
        assert!(prof.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn haar_ensemble_is_reproducible_and_valid() {
        let a = haar_torus_ensemble(20, 11).unwrap();
        let b = haar_torus_ensemble(20, 11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.hol[0].x, y.hol[0].x);
            assert!((x.area() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn battery_is_finite_on_ensembles() {
        let ens = periodic_horocycle_ensemble(16).unwrap();
        for (_, phi) in observable_battery() {
            let (mean, se) = ensemble_mean_se(&ens, &phi, 100, 3).unwrap();
            assert!(mean.is_finite() && se.is_finite());
        }
    }
}

//! Baseline uniform lattices and their exact calibration constants.
//!
//! For the l1 adjacency on Z^m the ball and sphere counts have closed forms
//!
//! ```text
//! |B_m(r)| = sum_k 2^k C(m,k) C(r,k),      |S_m(r)| = |B_m(r)| - |B_m(r-1)|
//! ```
//!
//! which calibrate the reconstructed radius of the estimators. Two regimes
//! are provided: adjacency-specific constants (alpha1, beta_m of the lattice
//! itself) for discrete diagnostics, and the Euclidean unit-ball volumes
//! omega_m for identification with the smooth scalar curvature. The two must
//! not be conflated, so [`Calibration`] is always an explicit parameter.

use std::collections::HashMap;

use thiserror::Error;

use crate::complex::CellComplex;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("dimension {0} unsupported (must be 1..=4)")]
    UnsupportedDimension(usize),
    #[error("extent {extent} in dimension {dim} would allocate {cells} cells (limit {limit})")]
    ExtentTooLarge {
        dim: usize,
        extent: u32,
        cells: u128,
        limit: u128,
    },
    #[error("count overflow in baseline formula (m={m}, r={r})")]
    CountOverflow { m: usize, r: u64 },
    #[error("count must be positive and finite, got {0}")]
    NonPositiveCount(f64),
}

/// Memory guard for generated lattices.
const CELL_LIMIT: u128 = 40_000_000;

/// Spec of a box-shaped l1 lattice: cells span `[-E, E]^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub dimension: usize,
    pub half_extent: u32,
}

/// Baseline growth constants for radius reconstruction.
///
/// `AdjacencySpecific` carries the exact leading coefficients of the l1
/// lattice counts; `Euclidean` carries the unit-ball volumes `omega_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibration {
    AdjacencySpecific { dim: usize },
    Euclidean { dim: usize },
}

impl Calibration {
    pub fn adjacency(dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        Ok(Calibration::AdjacencySpecific { dim })
    }

    pub fn euclidean(dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        Ok(Calibration::Euclidean { dim })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Calibration::AdjacencySpecific { dim } | Calibration::Euclidean { dim } => dim,
        }
    }

    /// Volume growth constant: `|B(r)| ~ beta_m r^m` for the baseline.
    pub fn beta(&self) -> f64 {
        match *self {
            Calibration::AdjacencySpecific { dim } => lattice_beta(dim),
            Calibration::Euclidean { dim } => unit_ball_volume(dim),
        }
    }

    /// Sphere growth constant: `|S(r)| ~ alpha1 r^(m-1)` for the baseline.
    ///
    /// The adjacency-specific value is the exact leading coefficient
    /// `2^m / (m-1)!` of the l1 sphere polynomial (4 in dimension 2); the
    /// Euclidean value is the unit-sphere area `m * omega_m`.
    pub fn alpha1(&self) -> f64 {
        match *self {
            Calibration::AdjacencySpecific { dim } => lattice_alpha1(dim),
            Calibration::Euclidean { dim } => dim as f64 * unit_ball_volume(dim),
        }
    }
}

fn check_dim(dim: usize) -> Result<(), LatticeError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(LatticeError::UnsupportedDimension(dim));
    }
    Ok(())
}

/// `beta_m = 2^m / m!`: 2, 2, 4/3, 2/3 for m = 1..4.
pub fn lattice_beta(dim: usize) -> f64 {
    let mut num = 1.0f64;
    let mut den = 1.0f64;
    for k in 1..=dim {
        num *= 2.0;
        den *= k as f64;
    }
    num / den
}

/// `alpha1_m = 2^m / (m-1)!`: 2, 4, 4, 8/3 for m = 1..4.
pub fn lattice_alpha1(dim: usize) -> f64 {
    lattice_beta(dim) * dim as f64
}

/// Euclidean unit-ball volume `omega_m`: 2, pi, 4pi/3, pi^2/2.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        4 => std::f64::consts::PI * std::f64::consts::PI / 2.0,
        _ => panic!("unit_ball_volume: dimension {dim} out of range"),
    }
}

/// Constants for the requested regime, as a checked constructor.
pub fn calibration_for(kind: CalibrationKind, dim: usize) -> Result<Calibration, LatticeError> {
    match kind {
        CalibrationKind::AdjacencySpecific => Calibration::adjacency(dim),
        CalibrationKind::Euclidean => Calibration::euclidean(dim),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationKind {
    AdjacencySpecific,
    Euclidean,
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Exact `|B_m(r)|` via the composition-count formula, with the conventions
/// `C(r,0) = 1` and `C(r,k) = 0` for `k > r`.
pub fn baseline_ball_count(m: usize, r: u64) -> Result<u64, LatticeError> {
    check_dim(m)?;
    let mut total: u128 = 0;
    for k in 0..=m as u64 {
        let c_mk = binomial(m as u64, k).ok_or(LatticeError::CountOverflow { m, r })?;
        let c_rk = binomial(r, k).ok_or(LatticeError::CountOverflow { m, r })?;
        let term = (1u128 << k)
            .checked_mul(c_mk as u128)
            .and_then(|t| t.checked_mul(c_rk as u128))
            .ok_or(LatticeError::CountOverflow { m, r })?;
        total = total
            .checked_add(term)
            .ok_or(LatticeError::CountOverflow { m, r })?;
    }
    u64::try_from(total).map_err(|_| LatticeError::CountOverflow { m, r })
}

/// Exact `|S_m(r)| = |B_m(r)| - |B_m(r-1)|`, with `|S_m(0)| = 1`.
pub fn baseline_sphere_count(m: usize, r: u64) -> Result<u64, LatticeError> {
    if r == 0 {
        check_dim(m)?;
        return Ok(1);
    }
    Ok(baseline_ball_count(m, r)? - baseline_ball_count(m, r - 1)?)
}

/// Real-argument extension of the baseline ball polynomial.
pub fn baseline_ball_poly(m: usize, s: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=m {
        let c_mk = binomial(m as u64, k as u64).unwrap() as f64;
        let mut c_sk = 1.0;
        for i in 0..k {
            c_sk *= (s - i as f64) / (i as f64 + 1.0);
        }
        total += (1u64 << k) as f64 * c_mk * c_sk;
    }
    total
}

/// Real-argument extension of the baseline sphere polynomial
/// (forward difference of the ball polynomial).
pub fn baseline_sphere_poly(m: usize, s: f64) -> f64 {
    baseline_ball_poly(m, s) - baseline_ball_poly(m, s - 1.0)
}

/// Exact inversion of the baseline ball count: the `s >= 0` with
/// `B_m(s) = count`. Integer-exact when `count` matches a baseline value.
pub fn invert_baseline_ball(m: usize, count: f64) -> Result<f64, LatticeError> {
    check_dim(m)?;
    if !(count > 0.0) || !count.is_finite() {
        return Err(LatticeError::NonPositiveCount(count));
    }
    invert_increasing(count, |s| baseline_ball_poly(m, s), m, true)
}

/// Exact inversion of the baseline sphere count, defined for `m >= 2`.
/// The 1D sphere count is constant (2) and carries no radial information;
/// 1D sphere-gauge callers invert the ball polynomial `2s + 1` instead
/// (see `estimators::sphere_gauge_radius`).
pub fn invert_baseline_sphere(m: usize, count: f64) -> Result<f64, LatticeError> {
    check_dim(m)?;
    if m == 1 {
        return Err(LatticeError::UnsupportedDimension(1));
    }
    if !(count > 0.0) || !count.is_finite() {
        return Err(LatticeError::NonPositiveCount(count));
    }
    invert_increasing(count, |s| baseline_sphere_poly(m, s), m, false)
}

fn invert_increasing(
    count: f64,
    poly: impl Fn(f64) -> f64,
    m: usize,
    ball: bool,
) -> Result<f64, LatticeError> {
    // Integer shortcut: exact baseline counts invert to the integer radius.
    let guess = if ball {
        (count * (1..=m).product::<usize>() as f64 / (1u64 << m) as f64).powf(1.0 / m as f64)
    } else if m >= 2 {
        (count * (1..m).product::<usize>() as f64 / (1u64 << m) as f64)
            .powf(1.0 / (m as f64 - 1.0))
    } else {
        count / 2.0
    };
    let near = guess.round().max(0.0);
    if near <= (1u64 << 40) as f64 {
        let n = near as u64;
        for cand in n.saturating_sub(1)..=n + 1 {
            let exact = if ball {
                baseline_ball_count(m, cand)
            } else {
                baseline_sphere_count(m, cand)
            };
            if let Ok(v) = exact {
                if v as f64 == count {
                    return Ok(cand as f64);
                }
            }
        }
    }
    // Newton with bisection fallback on the monotone branch s >= 0.
    let mut lo = 0.0f64;
    let mut hi = guess.max(1.0) * 2.0 + 2.0;
    while poly(hi) < count {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(LatticeError::NonPositiveCount(count));
        }
    }
    let mut s = guess.clamp(lo, hi);
    for _ in 0..60 {
        let f = poly(s) - count;
        if f.abs() <= 1e-12 * count.max(1.0) {
            return Ok(s.max(0.0));
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let h = 1e-6 * s.max(1.0);
        let d = (poly(s + h) - poly(s - h)) / (2.0 * h);
        let next = if d.abs() > 1e-12 { s - f / d } else { 0.5 * (lo + hi) };
        s = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(s.max(0.0))
}

/// Generates the box-shaped l1 lattice `[-E, E]^m` with unit weights and
/// integer-coordinate positions.
pub fn generate_l1_lattice(spec: LatticeSpec) -> Result<CellComplex, LatticeError> {
    let LatticeSpec {
        dimension: m,
        half_extent: e,
    } = spec;
    check_dim(m)?;
    let side = 2u128 * e as u128 + 1;
    let cells = side.pow(m as u32);
    if cells > CELL_LIMIT {
        return Err(LatticeError::ExtentTooLarge {
            dim: m,
            extent: e,
            cells,
            limit: CELL_LIMIT,
        });
    }
    let n = cells as usize;
    let side = side as usize;
    let mut strides = [0usize; MAX_DIM];
    let mut acc = 1usize;
    for (k, s) in strides.iter_mut().enumerate().take(m) {
        *s = acc;
        acc *= side;
        let _ = k;
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(n * 2 * m);
    let mut positions = Vec::with_capacity(n * m);
    offsets.push(0u64);
    let mut coord = [0usize; MAX_DIM];
    for id in 0..n {
        let mut rem = id;
        for k in 0..m {
            coord[k] = rem % side;
            rem /= side;
        }
        for k in 0..m {
            positions.push(coord[k] as f64 - e as f64);
        }
        // Neighbour ids ascending: low-side steps on higher axes come first;
        // collect then sort for a canonical order.
        let mut list = [0u32; 2 * MAX_DIM];
        let mut deg = 0;
        for k in 0..m {
            if coord[k] > 0 {
                list[deg] = (id - strides[k]) as u32;
                deg += 1;
            }
            if coord[k] + 1 < side {
                list[deg] = (id + strides[k]) as u32;
                deg += 1;
            }
        }
        let slice = &mut list[..deg];
        slice.sort_unstable();
        neighbors.extend_from_slice(slice);
        offsets.push(neighbors.len() as u64);
    }
    Ok(CellComplex::from_csr_unchecked(
        offsets,
        neighbors,
        Some(vec![1.0; n]),
        Some(positions),
        m,
        Some(1.0),
    ))
}

/// Generates the lattice on the l1 ball `{x : ||x||_1 <= radius}` instead of
/// a box. BFS balls about the origin up to `radius - 1` are identical to the
/// infinite-lattice balls (l1 geodesics are coordinate-monotone), while the
/// cell count stays `|B_m(radius)|` instead of `(2E+1)^m` — this is what
/// makes exact-count checks feasible in dimension 4.
pub fn generate_l1_ball_lattice(m: usize, radius: u32) -> Result<CellComplex, LatticeError> {
    check_dim(m)?;
    let cells = baseline_ball_count(m, radius as u64)? as u128;
    if cells > CELL_LIMIT {
        return Err(LatticeError::ExtentTooLarge {
            dim: m,
            extent: radius,
            cells,
            limit: CELL_LIMIT,
        });
    }
    let n = cells as usize;
    let rad = radius as i64;

    // Cells are enumerated lexicographically by prefix (x_1..x_{m-1}); for a
    // fixed prefix with l1 mass t the last coordinate spans a contiguous
    // block [-s, s], s = radius - t. Group starts index neighbour lookups.
    let mut prefixes: Vec<Vec<i32>> = vec![Vec::new()];
    for _ in 0..m - 1 {
        let mut next = Vec::new();
        for p in &prefixes {
            let used: i64 = p.iter().map(|&x| (x as i64).abs()).sum();
            let room = rad - used;
            for v in -room..=room {
                let mut q = p.clone();
                q.push(v as i32);
                next.push(q);
            }
        }
        prefixes = next;
    }
    prefixes.sort_unstable();
    let mut group_start: HashMap<Vec<i32>, u32> = HashMap::with_capacity(prefixes.len());
    let mut starts = Vec::with_capacity(prefixes.len());
    let mut acc = 0u32;
    for p in &prefixes {
        let used: i64 = p.iter().map(|&x| (x as i64).abs()).sum();
        let half = (rad - used) as u32;
        starts.push(acc);
        group_start.insert(p.clone(), acc);
        acc += 2 * half + 1;
    }
    debug_assert_eq!(acc as usize, n);

    let lookup = |prefix: &[i32]| -> Option<(u32, i64)> {
        let used: i64 = prefix.iter().map(|&x| (x as i64).abs()).sum();
        if used > rad {
            return None;
        }
        group_start
            .get(prefix)
            .map(|&s| (s, rad - used))
    };

    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(n * 2 * m);
    let mut positions = Vec::with_capacity(n * m);
    offsets.push(0u64);
    let mut scratch: Vec<i32> = Vec::with_capacity(m);
    for (gi, p) in prefixes.iter().enumerate() {
        let used: i64 = p.iter().map(|&x| (x as i64).abs()).sum();
        let half = rad - used;
        let base = starts[gi];
        // Neighbour groups along prefix axes are looked up once per group.
        let mut axis_groups: Vec<(usize, i64, u32, i64)> = Vec::with_capacity(2 * (m - 1));
        for k in 0..m - 1 {
            for step in [-1i32, 1] {
                scratch.clear();
                scratch.extend_from_slice(p);
                scratch[k] += step;
                if let Some((gs, ghalf)) = lookup(&scratch) {
                    axis_groups.push((k, step as i64, gs, ghalf));
                }
            }
        }
        for last in -half..=half {
            let id = base + (last + half) as u32;
            for &v in p.iter() {
                positions.push(v as f64);
            }
            positions.push(last as f64);
            let mut list = [0u32; 2 * MAX_DIM];
            let mut deg = 0;
            // Steps along the last axis stay inside the block.
            if last > -half {
                list[deg] = id - 1;
                deg += 1;
            }
            if last < half {
                list[deg] = id + 1;
                deg += 1;
            }
            for &(_, _, gs, ghalf) in &axis_groups {
                if (last as i64).abs() <= ghalf {
                    list[deg] = gs + (last as i64 + ghalf) as u32;
                    deg += 1;
                }
            }
            let slice = &mut list[..deg];
            slice.sort_unstable();
            neighbors.extend_from_slice(slice);
            offsets.push(neighbors.len() as u64);
        }
    }
    Ok(CellComplex::from_csr_unchecked(
        offsets,
        neighbors,
        None,
        Some(positions),
        m,
        Some(1.0),
    ))
}

/// Id of the origin cell of [`generate_l1_lattice`].
pub fn box_origin(spec: LatticeSpec) -> crate::complex::CellId {
    let side = 2 * spec.half_extent as usize + 1;
    let mut id = 0usize;
    let mut stride = 1usize;
    for _ in 0..spec.dimension {
        id += spec.half_extent as usize * stride;
        stride *= side;
    }
    crate::complex::CellId(id as u32)
}

/// Id of the origin cell of [`generate_l1_ball_lattice`]: the zero prefix
/// block starts at the middle of its group.
pub fn ball_origin(m: usize, radius: u32, complex: &CellComplex) -> crate::complex::CellId {
    // Positions are stored, so locate the all-zero coordinate directly.
    let _ = (m, radius);
    let dim = complex.dim();
    for i in 0..complex.cell_count() {
        let id = crate::complex::CellId(i as u32);
        let p = complex.position(id).unwrap();
        if p.iter().all(|&x| x == 0.0) {
            return id;
        }
        let _ = dim;
    }
    unreachable!("ball lattice contains the origin");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::CellId;

    #[test]
    fn path_lattice_m1() {
        let c = generate_l1_lattice(LatticeSpec { dimension: 1, half_extent: 3 }).unwrap();
        assert_eq!(c.cell_count(), 7);
        assert_eq!(c.max_degree(), 2);
        assert_eq!(c.degree(CellId(0)), 1);
    }

    #[test]
    fn grid_lattice_m2() {
        let c = generate_l1_lattice(LatticeSpec { dimension: 2, half_extent: 10 }).unwrap();
        assert_eq!(c.cell_count(), 441);
        let origin = box_origin(LatticeSpec { dimension: 2, half_extent: 10 });
        assert_eq!(c.degree(origin), 4);
        assert_eq!(c.position(origin).unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn cube_lattice_m3() {
        let c = generate_l1_lattice(LatticeSpec { dimension: 3, half_extent: 5 }).unwrap();
        assert_eq!(c.cell_count(), 1331);
        let origin = box_origin(LatticeSpec { dimension: 3, half_extent: 5 });
        assert_eq!(c.degree(origin), 6);
    }

    #[test]
    fn extent_guard() {
        let err = generate_l1_lattice(LatticeSpec { dimension: 4, half_extent: 51 }).unwrap_err();
        assert!(matches!(err, LatticeError::ExtentTooLarge { .. }));
    }

    #[test]
    fn known_ball_counts() {
        assert_eq!(baseline_ball_count(2, 3).unwrap(), 25);
        assert_eq!(baseline_ball_count(3, 2).unwrap(), 25);
        for m in 1..=4 {
            assert_eq!(baseline_ball_count(m, 0).unwrap(), 1);
        }
    }

    #[test]
    fn known_sphere_counts() {
        assert_eq!(baseline_sphere_count(2, 5).unwrap(), 20);
        assert_eq!(baseline_sphere_count(3, 2).unwrap(), 18);
        // Brute-force oracle: l1 unit vectors of Z^4.
        let mut brute = 0u64;
        for x in -1i32..=1 {
            for y in -1i32..=1 {
                for z in -1i32..=1 {
                    for w in -1i32..=1 {
                        if x.abs() + y.abs() + z.abs() + w.abs() == 1 {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(brute, 8);
        assert_eq!(baseline_sphere_count(4, 1).unwrap(), brute);
    }

    #[test]
    fn polynomial_identities_to_r50() {
        for r in 0..=50u64 {
            assert_eq!(baseline_ball_count(2, r).unwrap(), 2 * r * r + 2 * r + 1);
            if r >= 1 {
                assert_eq!(baseline_sphere_count(3, r).unwrap(), 4 * r * r + 2);
                assert_eq!(baseline_sphere_count(2, r).unwrap(), 4 * r);
            }
        }
    }

    #[test]
    fn sphere_counts_telescope() {
        for m in 1..=4usize {
            for r in 0..=50u64 {
                let sum: u64 = (0..=r).map(|k| baseline_sphere_count(m, k).unwrap()).sum();
                assert_eq!(sum, baseline_ball_count(m, r).unwrap());
            }
        }
    }

    #[test]
    fn bfs_matches_closed_form_small() {
        for m in 1..=3usize {
            let e = 12u32;
            let c = generate_l1_lattice(LatticeSpec { dimension: m, half_extent: e }).unwrap();
            let origin = box_origin(LatticeSpec { dimension: m, half_extent: e });
            let report = c.ball_report(origin, e - 1, false).unwrap();
            for r in 0..e - 1 {
                assert_eq!(
                    report.sphere_counts[r as usize],
                    baseline_sphere_count(m, r as u64).unwrap(),
                    "m={m} r={r}"
                );
            }
        }
    }

    #[test]
    fn ball_lattice_matches_box_counts() {
        for m in 1..=3usize {
            let c = generate_l1_ball_lattice(m, 9).unwrap();
            assert_eq!(c.cell_count() as u64, baseline_ball_count(m, 9).unwrap());
            let origin = ball_origin(m, 9, &c);
            let report = c.ball_report(origin, 8, false).unwrap();
            for r in 0..=8u64 {
                assert_eq!(
                    report.sphere_counts[r as usize],
                    baseline_sphere_count(m, r).unwrap(),
                    "m={m} r={r}"
                );
            }
        }
    }

    #[test]
    fn ball_lattice_adjacency_is_symmetric() {
        let c = generate_l1_ball_lattice(3, 5).unwrap();
        for i in 0..c.cell_count() {
            let id = CellId(i as u32);
            for &nb in c.neighbors(id) {
                assert!(c.neighbors(CellId(nb)).contains(&(i as u32)), "{i} <-> {nb}");
            }
            // Neighbours differ by one unit step.
            let p = c.position(id).unwrap();
            for &nb in c.neighbors(id) {
                let q = c.position(CellId(nb)).unwrap();
                let l1: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
                assert_eq!(l1, 1.0);
            }
        }
    }

    #[test]
    fn calibration_constants() {
        assert_eq!(Calibration::adjacency(3).unwrap().beta(), 4.0 / 3.0);
        assert_eq!(Calibration::euclidean(2).unwrap().beta(), std::f64::consts::PI);
        assert!(
            (Calibration::euclidean(3).unwrap().beta() - 4.0 * std::f64::consts::PI / 3.0).abs()
                < 1e-15
        );
        assert_eq!(Calibration::adjacency(2).unwrap().beta(), 2.0);
        assert_eq!(Calibration::adjacency(4).unwrap().beta(), 2.0 / 3.0);
        assert!(matches!(
            Calibration::adjacency(5),
            Err(LatticeError::UnsupportedDimension(5))
        ));
    }

    #[test]
    fn alpha1_leading_coefficients() {
        assert_eq!(lattice_alpha1(1), 2.0);
        assert_eq!(lattice_alpha1(2), 4.0);
        assert_eq!(lattice_alpha1(3), 4.0);
        assert!((lattice_alpha1(4) - 8.0 / 3.0).abs() < 1e-15);
        // Leading coefficient agrees with the exact counts at large r.
        for m in 2..=4usize {
            let r = 4000u64;
            let lead = baseline_sphere_count(m, r).unwrap() as f64 / (r as f64).powi(m as i32 - 1);
            assert!((lead - lattice_alpha1(m)).abs() / lattice_alpha1(m) < 2e-3, "m={m}");
        }
    }

    #[test]
    fn exact_inversions_hit_integers() {
        for m in 1..=4usize {
            for r in [0u64, 1, 2, 7, 23, 50] {
                let ball = baseline_ball_count(m, r).unwrap() as f64;
                assert_eq!(invert_baseline_ball(m, ball).unwrap(), r as f64, "ball m={m} r={r}");
                if r >= 1 && m >= 2 {
                    let sphere = baseline_sphere_count(m, r).unwrap() as f64;
                    assert_eq!(
                        invert_baseline_sphere(m, sphere).unwrap(),
                        r as f64,
                        "sphere m={m} r={r}"
                    );
                }
            }
        }
        assert!(matches!(
            invert_baseline_sphere(1, 2.0),
            Err(LatticeError::UnsupportedDimension(1))
        ));
    }

    #[test]
    fn inversion_interpolates_between_integers() {
        let s = invert_baseline_ball(2, 30.0).unwrap();
        assert!(s > 3.0 && s < 4.0);
        assert!((baseline_ball_poly(2, s) - 30.0).abs() < 1e-9);
        assert!(matches!(
            invert_baseline_ball(2, 0.0),
            Err(LatticeError::NonPositiveCount(_))
        ));
    }
}

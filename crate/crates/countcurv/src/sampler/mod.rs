//! Quasi-uniform point sets in the `g` metric and their Voronoi complexes,
//! plus the empirical audit of the mesh hypotheses (H1)-(H5).
//!
//! Sampling is Poisson-disk dart throwing with a `g`-distance rejection
//! radius (short-pair `g`-distances are `e^(u(midpoint))` times Euclidean),
//! followed by deterministic gap filling until the covering radius target
//! holds on a verification grid. The RNG is ChaCha8 seeded from the config
//! (counter-based stream cipher; identical output on every platform), so a
//! seed fully determines the complex.

mod voronoi;

pub use voronoi::{bisector, Face3, FacetTag, Poly2, Poly3};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, CellId, ComplexError};
use crate::geom;
use crate::oracle::{geodesic_distance, DensityField, DomainBox, OracleError};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("infeasible quasi-uniformity spec: delta {delta} vs cap {cap} (need delta <= 0.8 cap)")]
    SpecInfeasible { delta: f64, cap: f64 },
    #[error("iteration budget exceeded while {0}")]
    IterationBudgetExceeded(&'static str),
    #[error("coincident sites {0} and {1}")]
    DegenerateSites(u32, u32),
    #[error("cell of site {0} touches the box wall inside the compact K")]
    BoundaryCellLeak(u32),
    #[error("missing metadata: {0}")]
    MissingMetadata(&'static str),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Quasi-uniformity targets: `delta * h <= separation`, `covering <= cap * h`
/// in the `g` metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiUniformity {
    pub delta: f64,
    pub cap: f64,
}

impl Default for QuasiUniformity {
    fn default() -> Self {
        QuasiUniformity { delta: 0.8, cap: 1.2 }
    }
}

/// Sampling request: target spacing `h` (the mesh scale), seed, targets.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub box_: DomainBox,
    pub h: f64,
    pub seed: u64,
    pub qu: QuasiUniformity,
}

/// A sampled point set; coordinates are stored flat.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub dim: usize,
    pub h: f64,
    pub coords: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Uniform spatial hash over box cells of size `cell`.
struct SpatialGrid {
    dim: usize,
    lower: geom::Vect,
    cell: f64,
    map: HashMap<u64, Vec<u32>>,
}

impl SpatialGrid {
    fn new(box_: &DomainBox, cell: f64) -> Self {
        SpatialGrid {
            dim: box_.dim(),
            lower: geom::from_slice(&box_.lower),
            cell,
            map: HashMap::new(),
        }
    }

    fn key_of(&self, x: &[f64]) -> [i32; geom::MAXD] {
        let mut k = [0i32; geom::MAXD];
        for d in 0..self.dim {
            k[d] = ((x[d] - self.lower[d]) / self.cell).floor() as i32;
        }
        k
    }

    fn pack(k: &[i32; geom::MAXD]) -> u64 {
        let mut acc = 0u64;
        for v in k {
            acc = acc.wrapping_mul(0x1_0000) ^ (*v as u16 as u64);
        }
        acc
    }

    fn insert(&mut self, x: &[f64], id: u32) {
        let key = Self::pack(&self.key_of(x));
        self.map.entry(key).or_default().push(id);
    }

    /// Visits ids in cells within `radius` (in cell units, ceil) of `x`.
    fn for_neighbors(&self, x: &[f64], radius_cells: i32, mut f: impl FnMut(u32)) {
        let center = self.key_of(x);
        let mut offs = [0i32; geom::MAXD];
        visit_offsets(self.dim, radius_cells, &mut offs, 0, &mut |offs| {
            let mut k = center;
            for d in 0..self.dim {
                k[d] += offs[d];
            }
            if let Some(ids) = self.map.get(&Self::pack(&k)) {
                for &id in ids {
                    f(id);
                }
            }
        });
    }
}

fn visit_offsets(
    dim: usize,
    radius: i32,
    offs: &mut [i32; geom::MAXD],
    axis: usize,
    f: &mut impl FnMut(&[i32; geom::MAXD]),
) {
    if axis == dim {
        f(offs);
        return;
    }
    for v in -radius..=radius {
        offs[axis] = v;
        visit_offsets(dim, radius, offs, axis + 1, f);
    }
}

/// Short-range `g`-distance: Euclidean length scaled by `e^u` at the
/// midpoint (accurate to O(|pq|^3) for C^2 fields).
fn g_dist_short(field: &DensityField, p: &[f64], q: &[f64]) -> f64 {
    let dim = field.dim();
    let mid = geom::midpoint(p, q, dim);
    geom::dist(p, q, dim) * field.u(&mid[..dim]).exp()
}

/// `g`-length of the straight segment `p -> q` by 8-panel Simpson; used for
/// medium-range audit distances where the midpoint rule is too blunt.
pub fn g_segment_length(field: &DensityField, p: &[f64], q: &[f64]) -> f64 {
    let dim = field.dim();
    let len = geom::dist(p, q, dim);
    if len == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    let n = 8;
    let h = 1.0 / n as f64;
    for i in 0..n {
        let t0 = i as f64 * h;
        let tm = t0 + 0.5 * h;
        let t1 = t0 + h;
        let at = |t: f64| {
            let x = geom::add_scaled(p, t, &geom::sub(q, p));
            field.u(&x[..dim]).exp()
        };
        acc += (at(t0) + 4.0 * at(tm) + at(t1)) * h / 6.0;
    }
    acc * len
}

/// Poisson-disk dart throwing in `g` with deterministic gap filling.
pub fn sample_quasi_uniform(
    field: &DensityField,
    spec: &SampleSpec,
) -> Result<PointSet, SamplerError> {
    let dim = spec.box_.dim();
    let QuasiUniformity { delta, cap } = spec.qu;
    if !(delta > 0.0 && delta <= 1.0 && cap >= 1.0) || delta > 0.8 * cap {
        return Err(SamplerError::SpecInfeasible { delta, cap });
    }
    let h = spec.h;
    if spec.box_.lower.iter().zip(&spec.box_.upper).any(|(l, u)| u - l < 4.0 * h) {
        return Err(SamplerError::SpecInfeasible { delta, cap });
    }

    // Field bounds over the box, sampled on a coarse probe grid.
    let (u_min, u_max) = field_bounds(field, &spec.box_);
    let e_min = u_min.exp();
    let e_max = u_max.exp();

    let sep_g = delta * h;
    // Conservative Euclidean search radius for separation conflicts.
    let sep_eucl = sep_g / e_min;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut grid = SpatialGrid::new(&spec.box_, sep_eucl);
    let mut coords: Vec<f64> = Vec::new();

    let expected = spec.box_.volume() * e_max.powi(dim as i32) / sep_g.powi(dim as i32);
    let attempts = (expected.ceil() as usize).saturating_mul(12).max(4000);

    let mut candidate = [0.0f64; geom::MAXD];
    for _ in 0..attempts {
        for d in 0..dim {
            candidate[d] = rng.random_range(spec.box_.lower[d]..spec.box_.upper[d]);
        }
        if accepts(field, &grid, &coords, dim, &candidate[..dim], sep_g) {
            let id = (coords.len() / dim) as u32;
            grid.insert(&candidate[..dim], id);
            coords.extend_from_slice(&candidate[..dim]);
        }
    }

    // Gap filling: walk a verification grid in index order and plant a
    // point wherever the g-covering target is violated. Coverage is
    // monotone, so one clean pass certifies the target; we allow a few in
    // case the first pass plants densely.
    let fill_target = 0.85 * cap * h;
    let probe_step = cap * h * (-u_max).exp() / 2.5;
    let search_cells = ((cap * h / e_min) / sep_eucl).ceil() as i32 + 1;
    let mut pass = 0;
    loop {
        pass += 1;
        if pass > 8 {
            return Err(SamplerError::IterationBudgetExceeded("gap filling"));
        }
        let mut inserted = 0usize;
        let mut probe = [0.0f64; geom::MAXD];
        let mut counts = [0usize; geom::MAXD];
        for d in 0..dim {
            counts[d] = ((spec.box_.upper[d] - spec.box_.lower[d]) / probe_step).ceil() as usize + 1;
        }
        let total: usize = counts[..dim].iter().product();
        for idx in 0..total {
            let mut rem = idx;
            for d in 0..dim {
                let i = rem % counts[d];
                rem /= counts[d];
                probe[d] = (spec.box_.lower[d] + i as f64 * probe_step).min(spec.box_.upper[d]);
            }
            let mut nearest = f64::INFINITY;
            grid.for_neighbors(&probe[..dim], search_cells, |id| {
                let q = &coords[id as usize * dim..(id as usize + 1) * dim];
                let d = g_dist_short(field, &probe[..dim], q);
                if d < nearest {
                    nearest = d;
                }
            });
            if nearest > fill_target {
                let id = (coords.len() / dim) as u32;
                grid.insert(&probe[..dim], id);
                coords.extend_from_slice(&probe[..dim]);
                inserted += 1;
            }
        }
        if inserted == 0 {
            break;
        }
    }

    Ok(PointSet { dim, h, coords })
}

fn accepts(
    field: &DensityField,
    grid: &SpatialGrid,
    coords: &[f64],
    dim: usize,
    candidate: &[f64],
    sep_g: f64,
) -> bool {
    let mut ok = true;
    grid.for_neighbors(candidate, 1, |id| {
        if ok {
            let q = &coords[id as usize * dim..(id as usize + 1) * dim];
            if g_dist_short(field, candidate, q) < sep_g {
                ok = false;
            }
        }
    });
    ok
}

fn field_bounds(field: &DensityField, box_: &DomainBox) -> (f64, f64) {
    let dim = box_.dim();
    let n = 9usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let total = n.pow(dim as u32);
    let mut x = [0.0f64; geom::MAXD];
    for idx in 0..total {
        let mut rem = idx;
        for d in 0..dim {
            let i = rem % n;
            rem /= n;
            x[d] = box_.lower[d]
                + (box_.upper[d] - box_.lower[d]) * i as f64 / (n - 1) as f64;
        }
        let u = field.u(&x[..dim]);
        lo = lo.min(u);
        hi = hi.max(u);
    }
    (lo, hi)
}

/// A Voronoi complex plus the per-cell geometry the audit needs.
#[derive(Debug, Clone)]
pub struct VoronoiBuild {
    pub complex: CellComplex,
    pub cell_diameters: Vec<f64>,
    pub boundary: Vec<bool>,
    pub euclid_volumes: Vec<f64>,
    /// g-weighted cell centroids (the Lloyd relaxation targets).
    pub g_centroids: Vec<f64>,
}

/// Builds the Voronoi complex of a point set: cells are Voronoi regions,
/// adjacency is shared facets, weights are numerically integrated
/// `g`-volumes, positions are the sites, mesh scale is `h`.
pub fn voronoi_complex(
    points: &PointSet,
    field: &DensityField,
    box_: &DomainBox,
) -> Result<VoronoiBuild, SamplerError> {
    let dim = points.dim;
    if dim != 2 && dim != 3 {
        return Err(SamplerError::MissingMetadata("voronoi supports dimensions 2 and 3"));
    }
    if field.dim() != dim || box_.dim() != dim {
        return Err(SamplerError::MissingMetadata("dimension mismatch"));
    }
    let n = points.len();
    let h = points.h;

    // Candidate search structure and coincidence check.
    let mut grid = SpatialGrid::new(box_, h.max(1e-12));
    for i in 0..n {
        let p = points.point(i);
        let mut coincident = None;
        grid.for_neighbors(p, 1, |id| {
            if geom::dist(p, points.point(id as usize), dim) < 1e-9 * h {
                coincident = Some(id);
            }
        });
        if let Some(other) = coincident {
            return Err(SamplerError::DegenerateSites(other, i as u32));
        }
        grid.insert(p, i as u32);
    }

    let interior = box_.interior();
    let cells: Vec<Result<CellGeometry, SamplerError>> =
        crate::harness::maybe_par_map(&(0..n).collect::<Vec<_>>(), |&i| {
            build_cell(points, field, box_, &grid, i).map(|mut cell| {
                if cell.boundary && interior.contains(points.point(i)) {
                    cell.leak = true;
                }
                cell
            })
        });

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut weights = vec![0.0f64; n];
    let mut diameters = vec![0.0f64; n];
    let mut boundary = vec![false; n];
    let mut euclid_volumes = vec![0.0f64; n];
    let mut g_centroids = vec![0.0f64; n * dim];
    for (i, cell) in cells.into_iter().enumerate() {
        let cell = cell?;
        if cell.leak {
            return Err(SamplerError::BoundaryCellLeak(i as u32));
        }
        weights[i] = cell.g_volume.max(f64::MIN_POSITIVE);
        diameters[i] = cell.diameter;
        boundary[i] = cell.boundary;
        euclid_volumes[i] = cell.euclid_volume;
        g_centroids[i * dim..(i + 1) * dim].copy_from_slice(&cell.g_centroid[..dim]);
        for q in cell.neighbors {
            adjacency[i].push(q);
        }
    }
    // Symmetrize by union: borderline facets may survive thresholding on
    // one side only.
    let mut extra: Vec<(usize, u32)> = Vec::new();
    for (i, list) in adjacency.iter().enumerate() {
        for &q in list {
            if !adjacency[q as usize].contains(&(i as u32)) {
                extra.push((q as usize, i as u32));
            }
        }
    }
    for (i, q) in extra {
        adjacency[i].push(q);
    }

    let complex = CellComplex::builder(adjacency)
        .weights(weights)
        .positions(points.coords.clone(), dim)
        .mesh_scale(h)
        .degree_bound(128)
        .build()?;
    Ok(VoronoiBuild {
        complex,
        cell_diameters: diameters,
        boundary,
        euclid_volumes,
        g_centroids,
    })
}

/// Lloyd relaxation in the g metric: each site moves to the g-weighted
/// centroid of its Voronoi cell. A few iterations regularize the
/// tessellation substantially, which shrinks the hop-metric fluctuations
/// the estimators see, without disturbing the quasi-uniform density
/// profile (centroids are density-weighted).
pub fn lloyd_relax(
    points: &PointSet,
    field: &DensityField,
    box_: &DomainBox,
    iterations: u32,
) -> Result<PointSet, SamplerError> {
    let mut current = points.clone();
    for _ in 0..iterations {
        let build = voronoi_complex(&current, field, box_)?;
        current = PointSet {
            dim: points.dim,
            h: points.h,
            coords: build.g_centroids,
        };
    }
    Ok(current)
}

struct CellGeometry {
    neighbors: Vec<u32>,
    g_volume: f64,
    g_centroid: geom::Vect,
    euclid_volume: f64,
    diameter: f64,
    boundary: bool,
    leak: bool,
}

/// One round of security-radius clipping: consumes candidates in distance
/// order until the next one is provably irrelevant (farther than twice the
/// current farthest vertex). Returns the cell and whether the consumed
/// candidate set was conclusive for the searched ring.
fn clip_within<P>(
    start: P,
    p: &[f64],
    points: &PointSet,
    candidates: &[(f64, u32)],
    eps: f64,
) -> (P, f64)
where
    P: CellPoly,
{
    let dim = points.dim;
    let mut poly = start;
    for &(d, q) in candidates {
        if d > 2.0 * poly.reach(p) + eps {
            break;
        }
        let (n, off) = bisector(p, points.point(q as usize), dim);
        poly = poly.clip_halfspace(&n, off, FacetTag::Site(q), eps);
    }
    let security = 2.0 * poly.reach(p) + eps;
    (poly, security)
}

trait CellPoly: Clone {
    fn clip_halfspace(&self, n: &geom::Vect, d: f64, tag: FacetTag, eps: f64) -> Self;
    fn reach(&self, p: &[f64]) -> f64;
}

impl CellPoly for Poly2 {
    fn clip_halfspace(&self, n: &geom::Vect, d: f64, tag: FacetTag, eps: f64) -> Self {
        self.clip([n[0], n[1]], d, tag, eps)
    }
    fn reach(&self, p: &[f64]) -> f64 {
        Poly2::reach(self, p)
    }
}

impl CellPoly for Poly3 {
    fn clip_halfspace(&self, n: &geom::Vect, d: f64, tag: FacetTag, eps: f64) -> Self {
        self.clip([n[0], n[1], n[2]], d, tag, eps)
    }
    fn reach(&self, p: &[f64]) -> f64 {
        Poly3::reach(self, p)
    }
}

/// Clips the cell of site `i`, widening the candidate ring until the
/// security radius is fully covered by the searched region.
fn clip_cell<P: CellPoly>(
    start: P,
    points: &PointSet,
    grid: &SpatialGrid,
    box_: &DomainBox,
    i: usize,
    eps: f64,
) -> P {
    let dim = points.dim;
    let p = points.point(i);
    let mut ring = 3i32;
    loop {
        let mut candidates: Vec<(f64, u32)> = Vec::new();
        grid.for_neighbors(p, ring, |id| {
            if id as usize != i {
                candidates.push((geom::dist(p, points.point(id as usize), dim), id));
            }
        });
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (poly, security) = clip_within(start.clone(), p, points, &candidates, eps);
        let covered = ring as f64 * grid.cell;
        if security <= covered || covered > 2.0 * box_.diameter() {
            return poly;
        }
        ring *= 2;
    }
}

fn build_cell(
    points: &PointSet,
    field: &DensityField,
    box_: &DomainBox,
    grid: &SpatialGrid,
    i: usize,
) -> Result<CellGeometry, SamplerError> {
    let dim = points.dim;
    let p = points.point(i);
    let h = points.h;
    let eps = 1e-12 * h * box_.diameter().max(1.0);

    if dim == 2 {
        let poly = clip_cell(Poly2::from_box(box_), points, grid, box_, i, eps);
        let mut neighbors = Vec::new();
        let mut wall = false;
        let k = poly.verts.len();
        let len_eps = 1e-9 * h;
        let mut per_site: HashMap<u32, f64> = HashMap::new();
        for e in 0..k {
            let a = poly.verts[e];
            let b = poly.verts[(e + 1) % k];
            let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            match poly.tags[e] {
                FacetTag::Site(q) => *per_site.entry(q).or_insert(0.0) += len,
                FacetTag::Wall => {
                    if len > len_eps {
                        wall = true;
                    }
                }
            }
        }
        let mut sites: Vec<(u32, f64)> = per_site.into_iter().collect();
        sites.sort_unstable_by_key(|(q, _)| *q);
        for (q, len) in sites {
            if len > len_eps {
                neighbors.push(q);
            }
        }
        let (g_volume, g_centroid) = polygon_g_volume(&poly, field);
        Ok(CellGeometry {
            neighbors,
            g_volume,
            g_centroid,
            euclid_volume: poly.area(),
            diameter: poly.diameter(),
            boundary: wall,
            leak: false,
        })
    } else {
        let poly = clip_cell(Poly3::from_box(box_), points, grid, box_, i, eps);
        let mut wall = false;
        let area_eps = 1e-9 * h * h;
        let mut per_site: HashMap<u32, f64> = HashMap::new();
        for face in &poly.faces {
            let area = face.area();
            match face.tag {
                FacetTag::Site(q) => *per_site.entry(q).or_insert(0.0) += area,
                FacetTag::Wall => {
                    if area > area_eps {
                        wall = true;
                    }
                }
            }
        }
        let mut neighbors = Vec::new();
        let mut sites: Vec<(u32, f64)> = per_site.into_iter().collect();
        sites.sort_unstable_by_key(|(q, _)| *q);
        for (q, area) in sites {
            if area > area_eps {
                neighbors.push(q);
            }
        }
        let (g_volume, g_centroid) = polyhedron_g_volume(&poly, p, field);
        Ok(CellGeometry {
            neighbors,
            g_volume,
            g_centroid,
            euclid_volume: poly.volume_from(p),
            diameter: poly.diameter(),
            boundary: wall,
            leak: false,
        })
    }
}

/// Integrates `e^(2u)` over a convex polygon: centroid-fan triangles with
/// midpoint values, refined once (4-way split) when the field varies by
/// more than 1% across the cell. Returns the g-mass and the g-weighted
/// centroid (the Lloyd target).
fn polygon_g_volume(poly: &Poly2, field: &DensityField) -> (f64, geom::Vect) {
    let c = poly.centroid();
    let k = poly.verts.len();
    let mut acc = 0.0;
    let mut first = [0.0f64; 2];
    for i in 0..k {
        let a = poly.verts[i];
        let b = poly.verts[(i + 1) % k];
        let (m, cm) = triangle_g_volume(&c, &a, &b, field);
        acc += m;
        first[0] += m * cm[0];
        first[1] += m * cm[1];
    }
    let mut centroid = [0.0; geom::MAXD];
    if acc > 0.0 {
        centroid[0] = first[0] / acc;
        centroid[1] = first[1] / acc;
    }
    (acc, centroid)
}

fn triangle_g_volume(
    a: &[f64; 2],
    b: &[f64; 2],
    c: &[f64; 2],
    field: &DensityField,
) -> (f64, [f64; 2]) {
    let area =
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let cent = |p: &[f64; 2], q: &[f64; 2], r: &[f64; 2]| {
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    };
    let centroid = cent(a, b, c);
    if area == 0.0 {
        return (0.0, centroid);
    }
    let val = |x: &[f64; 2]| (2.0 * field.u(x)).exp();
    let (va, vb, vc) = (val(a), val(b), val(c));
    let spread = (va.max(vb).max(vc) - va.min(vb).min(vc)) / va.max(vb).max(vc);
    if spread < 0.01 {
        return (area * val(&centroid), centroid);
    }
    // One 4-way midpoint refinement.
    let mab = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let mbc = [(b[0] + c[0]) / 2.0, (b[1] + c[1]) / 2.0];
    let mca = [(c[0] + a[0]) / 2.0, (c[1] + a[1]) / 2.0];
    let quarter = area / 4.0;
    let parts = [
        (cent(a, &mab, &mca), val(&cent(a, &mab, &mca))),
        (cent(&mab, b, &mbc), val(&cent(&mab, b, &mbc))),
        (cent(&mca, &mbc, c), val(&cent(&mca, &mbc, c))),
        (cent(&mab, &mbc, &mca), val(&cent(&mab, &mbc, &mca))),
    ];
    let mass: f64 = parts.iter().map(|(_, v)| quarter * v).sum();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (p, v) in &parts {
        cx += quarter * v * p[0];
        cy += quarter * v * p[1];
    }
    if mass > 0.0 {
        (mass, [cx / mass, cy / mass])
    } else {
        (0.0, centroid)
    }
}

/// Integrates `e^(3u)` over a convex polyhedron: tetrahedra fanned from the
/// site with centroid values, refined by a barycentric split when the field
/// varies by more than 1%. Returns the g-mass and g-weighted centroid.
fn polyhedron_g_volume(poly: &Poly3, apex: &[f64], field: &DensityField) -> (f64, geom::Vect) {
    let a = [apex[0], apex[1], apex[2]];
    let mut acc = 0.0;
    let mut first = [0.0f64; 3];
    for face in &poly.faces {
        let k = face.verts.len();
        if k < 3 {
            continue;
        }
        let o = face.verts[0];
        for t in 1..k - 1 {
            let (b, c, d) = (&o, &face.verts[t], &face.verts[t + 1]);
            let m = tetra_g_volume(&a, b, c, d, field, 0);
            let cm = [
                (a[0] + b[0] + c[0] + d[0]) / 4.0,
                (a[1] + b[1] + c[1] + d[1]) / 4.0,
                (a[2] + b[2] + c[2] + d[2]) / 4.0,
            ];
            acc += m;
            first[0] += m * cm[0];
            first[1] += m * cm[1];
            first[2] += m * cm[2];
        }
    }
    let mut centroid = [0.0; geom::MAXD];
    if acc > 0.0 {
        for k in 0..3 {
            centroid[k] = first[k] / acc;
        }
    }
    (acc, centroid)
}

fn tetra_volume(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    ((u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]))
        / 6.0)
        .abs()
}

fn tetra_g_volume(
    a: &[f64; 3],
    b: &[f64; 3],
    c: &[f64; 3],
    d: &[f64; 3],
    field: &DensityField,
    depth: u32,
) -> f64 {
    let vol = tetra_volume(a, b, c, d);
    if vol == 0.0 {
        return 0.0;
    }
    let val = |x: &[f64; 3]| (3.0 * field.u(x)).exp();
    let (va, vb, vc, vd) = (val(a), val(b), val(c), val(d));
    let hi = va.max(vb).max(vc).max(vd);
    let lo = va.min(vb).min(vc).min(vd);
    let centroid = [
        (a[0] + b[0] + c[0] + d[0]) / 4.0,
        (a[1] + b[1] + c[1] + d[1]) / 4.0,
        (a[2] + b[2] + c[2] + d[2]) / 4.0,
    ];
    if depth >= 1 || (hi - lo) / hi < 0.01 {
        return vol * val(&centroid);
    }
    // Split at the centroid into four tetrahedra.
    let g = centroid;
    tetra_g_volume(&g, b, c, d, field, depth + 1)
        + tetra_g_volume(a, &g, c, d, field, depth + 1)
        + tetra_g_volume(a, b, &g, d, field, depth + 1)
        + tetra_g_volume(a, b, c, &g, field, depth + 1)
}

/// Empirical constants of the hypotheses (H1)-(H5) measured on a complex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// (H1) maximum face degree over cells realized inside K.
    pub max_degree: u32,
    /// (H2) range of diam(c)/h.
    pub diam_ratio_range: (f64, f64),
    /// (H3) covering constant of the realized sites: max over K of the
    /// distance to the nearest site, in units of h.
    pub realization_density: f64,
    /// (H4) empirical ball-inclusion constants (c1, c2).
    pub ball_inclusion_constants: (f64, f64),
    /// (H5) range of nu({c}) / (h^m e^(m u)).
    pub weight_ratio_range: (f64, f64),
}

/// Audit tuning: how many centers, the count-radius window, and the grid
/// spacing of the eikonal solves behind (H4).
#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub centers: usize,
    pub r_max: u32,
    pub grid_delta: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { centers: 4, r_max: 8, grid_delta: 0.0 }
    }
}

/// Measures the (H1)-(H5) constants on a complex with positions, weights
/// and a mesh scale. Cell diameters may come from the Voronoi build; the
/// fallback estimates them from adjacent-site distances.
pub fn audit_hypotheses(
    complex: &CellComplex,
    diameters: Option<&[f64]>,
    field: &DensityField,
    k_box: &DomainBox,
    opts: &AuditOptions,
) -> Result<HypothesisReport, SamplerError> {
    let dim = complex.dim();
    if complex.positions().is_none() {
        return Err(SamplerError::MissingMetadata("positions"));
    }
    if !complex.has_weights() {
        return Err(SamplerError::MissingMetadata("weights"));
    }
    let h = complex
        .mesh_scale()
        .ok_or(SamplerError::MissingMetadata("mesh_scale"))?;

    let in_k: Vec<CellId> = (0..complex.cell_count() as u32)
        .map(CellId)
        .filter(|&c| k_box.contains(complex.position(c).unwrap()))
        .collect();
    if in_k.is_empty() {
        return Err(SamplerError::MissingMetadata("no cells realized inside K"));
    }

    // (H1)
    let max_degree = in_k.iter().map(|&c| complex.degree(c)).max().unwrap();

    // (H2)
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for &c in &in_k {
        let diam = match diameters {
            Some(d) => d[c.index()],
            None => {
                // Half the span to the farthest neighbour on each side.
                let p = complex.position(c).unwrap();
                complex
                    .neighbors(c)
                    .iter()
                    .map(|&q| geom::dist(p, complex.position(CellId(q)).unwrap(), dim))
                    .fold(0.0, f64::max)
            }
        };
        dmin = dmin.min(diam / h);
        dmax = dmax.max(diam / h);
    }

    // (H3): covering of K by the realized sites, probed on a grid.
    let mut cover = 0.0f64;
    let probe_step = h;
    let mut counts = [1usize; geom::MAXD];
    for d in 0..dim {
        counts[d] = ((k_box.upper[d] - k_box.lower[d]) / probe_step).ceil() as usize + 1;
    }
    let total: usize = counts[..dim].iter().product();
    let site_grid = {
        let mut g = SpatialGrid::new(k_box, 2.0 * h);
        for &c in &in_k {
            g.insert(complex.position(c).unwrap(), c.0);
        }
        // Sites just outside K also cover K's border region.
        for c in 0..complex.cell_count() as u32 {
            let p = complex.position(CellId(c)).unwrap();
            if !k_box.contains(p) && k_box.boundary_distance(p) > -3.0 * h {
                g.insert(p, c);
            }
        }
        g
    };
    let mut probe = [0.0f64; geom::MAXD];
    for idx in 0..total {
        let mut rem = idx;
        for d in 0..dim {
            let i = rem % counts[d];
            rem /= counts[d];
            probe[d] = (k_box.lower[d] + i as f64 * probe_step).min(k_box.upper[d]);
        }
        let mut nearest = f64::INFINITY;
        site_grid.for_neighbors(&probe[..dim], 2, |id| {
            let q = complex.position(CellId(id)).unwrap();
            let d = geom::dist(&probe[..dim], q, dim);
            if d < nearest {
                nearest = d;
            }
        });
        if nearest.is_finite() {
            cover = cover.max(nearest / h);
        }
    }

    // (H5)
    let mut wmin = f64::INFINITY;
    let mut wmax = 0.0f64;
    let hm = h.powi(dim as i32);
    for &c in &in_k {
        let p = complex.position(c).unwrap();
        let reference = hm * (dim as f64 * field.u(p)).exp();
        let ratio = complex.weight(c).unwrap() / reference;
        wmin = wmin.min(ratio);
        wmax = wmax.max(ratio);
    }

    // (H4): count balls vs g-balls via the eikonal oracle, at a handful of
    // deep-interior centers. The margin covers the hop stretch of the
    // farthest audited ball plus a safety layer.
    let margin = (1.45 * opts.r_max as f64 + 2.5) * h;
    let deep: Vec<CellId> = in_k
        .iter()
        .copied()
        .filter(|&c| k_box.boundary_distance(complex.position(c).unwrap()) >= margin)
        .collect();
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    if !deep.is_empty() {
        let stride = (deep.len() / opts.centers.max(1)).max(1);
        let centers: Vec<CellId> = deep.iter().step_by(stride).take(opts.centers).copied().collect();
        let delta = if opts.grid_delta > 0.0 { opts.grid_delta } else { h / 3.0 };
        let results: Vec<(f64, f64)> = crate::harness::maybe_par_map(&centers, |&center| {
            h4_constants(complex, field, k_box, center, opts.r_max, delta, h)
                .unwrap_or((f64::NAN, f64::NAN))
        });
        for (a, b) in results {
            if a.is_finite() && b.is_finite() {
                c1 = c1.max(a);
                c2 = c2.max(b);
            }
        }
    }

    Ok(HypothesisReport {
        max_degree,
        diam_ratio_range: (dmin, dmax),
        realization_density: cover,
        ball_inclusion_constants: (c1, c2),
        weight_ratio_range: (wmin, wmax),
    })
}

fn h4_constants(
    complex: &CellComplex,
    field: &DensityField,
    k_box: &DomainBox,
    center: CellId,
    r_max: u32,
    delta: f64,
    h: f64,
) -> Result<(f64, f64), SamplerError> {
    let dim = complex.dim();
    let pos = complex.position(center).unwrap();
    // Local solve box around the center, clipped to K.
    let reach = (1.45 * r_max as f64 + 2.5) * h;
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    for d in 0..dim {
        lower.push((pos[d] - reach).max(k_box.lower[d]));
        upper.push((pos[d] + reach).min(k_box.upper[d]));
    }
    let solve_box = DomainBox::new(lower, upper, delta)?;
    let grid = geodesic_distance(field, pos, &solve_box, delta)?;

    // Hop distance of every cell (up to r_max; MAX means outside the ball).
    let report = complex.ball_report(center, r_max, true)?;
    let members = report.members.as_ref().unwrap();
    let mut hop = vec![u32::MAX; complex.cell_count()];
    for (c, d) in members {
        hop[c.index()] = *d;
    }
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for r in 1..=r_max {
        // rho_out: farthest member of B(r); rho_in: nearest non-member.
        let mut rho_out = 0.0f64;
        let mut rho_in = f64::INFINITY;
        for cell in 0..complex.cell_count() {
            let p = complex.position(CellId(cell as u32)).unwrap();
            if geom::dist(p, pos, dim) > (r_max as f64 + 3.0) * 2.0 * h {
                continue;
            }
            let Some(t) = grid.sample(p) else { continue };
            if hop[cell] <= r {
                rho_out = rho_out.max(t);
            } else if t < rho_in {
                rho_in = t;
            }
        }
        let ar = r as f64 * h;
        c2 = c2.max((rho_out - ar) / h);
        if rho_in.is_finite() {
            c1 = c1.max((ar - rho_in) / h);
        }
    }
    Ok((c1.max(0.0), c2.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FieldSpec;

    fn flat(dim: usize) -> DensityField {
        DensityField::new(dim, FieldSpec::Constant { c: 0.0 }).unwrap()
    }

    fn unit_spec(h: f64, seed: u64) -> SampleSpec {
        SampleSpec {
            box_: DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.08).unwrap(),
            h,
            seed,
            qu: QuasiUniformity::default(),
        }
    }

    #[test]
    fn flat_sampling_density_and_separation() {
        let field = flat(2);
        let spec = unit_spec(0.05, 42);
        let pts = sample_quasi_uniform(&field, &spec).unwrap();
        let n = pts.len();
        // Expected about 1/(beta h^2) points with beta in [1, 4].
        let beta = 1.0 / (n as f64 * spec.h * spec.h);
        assert!((1.0..=4.0).contains(&beta), "n = {n}, beta = {beta}");
        // Brute-force pairwise separation check.
        let min_sep = spec.qu.delta * spec.h;
        for i in 0..n {
            for j in i + 1..n {
                let d = geom::dist(pts.point(i), pts.point(j), 2);
                assert!(d >= min_sep * (1.0 - 1e-9), "{i},{j}: {d} < {min_sep}");
            }
        }
    }

    #[test]
    fn covering_radius_met_on_probe_grid() {
        let field = flat(2);
        let spec = unit_spec(0.06, 9);
        let pts = sample_quasi_uniform(&field, &spec).unwrap();
        let cap = spec.qu.cap * spec.h;
        let steps = 40;
        for ix in 0..=steps {
            for iy in 0..=steps {
                let x = [ix as f64 / steps as f64, iy as f64 / steps as f64];
                let mut best = f64::INFINITY;
                for i in 0..pts.len() {
                    best = best.min(geom::dist(&x, pts.point(i), 2));
                }
                assert!(best <= cap, "gap at {x:?}: {best}");
            }
        }
    }

    #[test]
    fn constant_rescale_matches_halved_spacing() {
        // u = log 2 doubles g-lengths, so h must behave like h/2 Euclidean.
        let flat_field = flat(2);
        let scaled = DensityField::new(2, FieldSpec::Constant { c: std::f64::consts::LN_2 })
            .unwrap();
        let base = sample_quasi_uniform(&flat_field, &unit_spec(0.05, 7)).unwrap();
        let dense = sample_quasi_uniform(&scaled, &unit_spec(0.1, 7)).unwrap();
        let ratio = dense.len() as f64 / base.len() as f64;
        assert!((0.75..=1.33).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let field = flat(2);
        let a = sample_quasi_uniform(&field, &unit_spec(0.07, 1)).unwrap();
        let b = sample_quasi_uniform(&field, &unit_spec(0.07, 1)).unwrap();
        assert_eq!(a.coords, b.coords);
        let c = sample_quasi_uniform(&field, &unit_spec(0.07, 2)).unwrap();
        assert_ne!(a.coords, c.coords);
    }

    #[test]
    fn infeasible_spec_rejected() {
        let field = flat(2);
        let mut spec = unit_spec(0.05, 1);
        spec.qu = QuasiUniformity { delta: 1.0, cap: 1.0 };
        assert!(matches!(
            sample_quasi_uniform(&field, &spec),
            Err(SamplerError::SpecInfeasible { .. })
        ));
    }

    #[test]
    fn four_corner_voronoi() {
        let field = flat(2);
        let box_ = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.26).unwrap();
        let pts = PointSet {
            dim: 2,
            h: 1.0,
            coords: vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        };
        let build = voronoi_complex(&pts, &field, &box_).unwrap();
        let c = &build.complex;
        // Adjacent corners share facets; diagonals meet only at the center.
        assert_eq!(c.neighbors(CellId(0)), &[1, 2]);
        assert_eq!(c.neighbors(CellId(3)), &[1, 2]);
        assert_eq!(c.neighbors(CellId(1)), &[0, 3]);
        // Unit weights: each cell is a quarter square.
        for i in 0..4 {
            assert!((c.weight(CellId(i)).unwrap() - 0.25).abs() < 1e-9);
        }
        assert!(build.boundary.iter().all(|&b| b));
    }

    #[test]
    fn star_configuration_degree() {
        let field = flat(2);
        // Margin chosen so K holds only the hub: ring cells touch the walls.
        let box_ = DomainBox::new(vec![-2.0, -2.0], vec![2.0, 2.0], 1.4).unwrap();
        let mut coords = vec![0.0, 0.0];
        let ring = 7;
        for k in 0..ring {
            let th = 2.0 * std::f64::consts::PI * k as f64 / ring as f64;
            coords.push(th.cos());
            coords.push(th.sin());
        }
        let pts = PointSet { dim: 2, h: 1.0, coords };
        let build = voronoi_complex(&pts, &field, &box_).unwrap();
        assert_eq!(build.complex.degree(CellId(0)) as usize, ring);
        assert!(!build.boundary[0]);
    }

    #[test]
    fn coincident_sites_detected() {
        let field = flat(2);
        let box_ = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.1).unwrap();
        let pts = PointSet {
            dim: 2,
            h: 0.5,
            coords: vec![0.3, 0.3, 0.3, 0.3, 0.7, 0.7],
        };
        assert!(matches!(
            voronoi_complex(&pts, &field, &box_),
            Err(SamplerError::DegenerateSites(..))
        ));
    }

    #[test]
    fn interior_weights_scale_like_h_squared() {
        let field = flat(2);
        let spec = unit_spec(0.05, 11);
        let pts = sample_quasi_uniform(&field, &spec).unwrap();
        let build = voronoi_complex(&pts, &field, &spec.box_).unwrap();
        let h2 = spec.h * spec.h;
        for i in 0..pts.len() {
            if !build.boundary[i] {
                let w = build.complex.weight(CellId(i as u32)).unwrap();
                let ratio = w / h2;
                assert!((0.15..=4.0).contains(&ratio), "cell {i}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn partition_of_unity_on_interior() {
        // Total cell area equals the box area (flat field, all cells).
        let field = flat(2);
        let spec = unit_spec(0.06, 3);
        let pts = sample_quasi_uniform(&field, &spec).unwrap();
        let build = voronoi_complex(&pts, &field, &spec.box_).unwrap();
        let total: f64 = (0..pts.len())
            .map(|i| build.complex.weight(CellId(i as u32)).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 0.01, "partition sum {total}");
        // And with a non-trivial field the weights integrate e^{2u}.
        let bump = DensityField::new(
            2,
            FieldSpec::GaussianBump {
                eps: 0.2,
                sigma: 0.15,
                center: vec![0.5, 0.5],
                r0: 0.3,
                r1: 0.45,
            },
        )
        .unwrap();
        let build = voronoi_complex(&pts, &bump, &spec.box_).unwrap();
        let total: f64 = (0..pts.len())
            .map(|i| build.complex.weight(CellId(i as u32)).unwrap())
            .sum();
        // Reference integral of e^{2u} over the box on a fine grid.
        let n = 400;
        let mut reference = 0.0;
        for ix in 0..n {
            for iy in 0..n {
                let x = [(ix as f64 + 0.5) / n as f64, (iy as f64 + 0.5) / n as f64];
                reference += (2.0 * bump.u(&x)).exp();
            }
        }
        reference /= (n * n) as f64;
        assert!(
            (total - reference).abs() / reference < 0.01,
            "g-volume {total} vs {reference}"
        );
    }

    #[test]
    fn audit_on_lattice_baseline() {
        // Uniform Z^2 lattice with unit weights: degree 4, Lambda = 1.
        let complex = crate::lattice::generate_l1_lattice(crate::lattice::LatticeSpec {
            dimension: 2,
            half_extent: 20,
        })
        .unwrap();
        let field = flat(2);
        let k_box = DomainBox::new(vec![-12.0, -12.0], vec![12.0, 12.0], 1.0).unwrap();
        let opts = AuditOptions { centers: 2, r_max: 5, grid_delta: 0.5 };
        let report = audit_hypotheses(&complex, None, &field, &k_box, &opts).unwrap();
        assert_eq!(report.max_degree, 4);
        assert!((report.weight_ratio_range.0 - 1.0).abs() < 1e-12);
        assert!((report.weight_ratio_range.1 - 1.0).abs() < 1e-12);
        assert!(report.realization_density <= 1.0);
        // l1 balls sit inside Euclidean balls: c2 stays small; c1 reflects
        // the diagonal stretch but remains O(r_max).
        assert!(report.ball_inclusion_constants.1 < 2.0);
    }

    #[test]
    fn audit_requires_weights() {
        let complex = CellComplex::builder(vec![vec![1], vec![0]])
            .positions(vec![0.0, 0.0, 1.0, 0.0], 2)
            .mesh_scale(1.0)
            .build()
            .unwrap();
        let field = flat(2);
        let k_box = DomainBox::new(vec![-1.0, -1.0], vec![2.0, 2.0], 0.1).unwrap();
        assert!(matches!(
            audit_hypotheses(&complex, None, &field, &k_box, &AuditOptions::default()),
            Err(SamplerError::MissingMetadata("weights"))
        ));
    }
}

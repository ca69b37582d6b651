//! Euclidean Voronoi cells by local half-space clipping.
//!
//! Each cell starts as the domain box and is clipped by the bisector of
//! every nearby site, processed in order of increasing distance until the
//! security radius (twice the farthest cell vertex) is reached. For
//! quasi-uniform sites this touches O(1) candidates per cell and yields the
//! same polytopes and facet adjacency as the Delaunay dual, in 2D and 3D
//! with one code path. Degenerate co-spherical configurations produce
//! zero-measure facets that are dropped by a relative threshold.

use crate::geom;
use crate::oracle::DomainBox;

/// Who produced a facet: the bisector of a site, or a wall of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetTag {
    Site(u32),
    Wall,
}

/// Convex polygon with per-edge tags; edge `i` runs `verts[i] -> verts[i+1]`.
#[derive(Debug, Clone)]
pub struct Poly2 {
    pub verts: Vec<[f64; 2]>,
    pub tags: Vec<FacetTag>,
}

impl Poly2 {
    pub fn from_box(box_: &DomainBox) -> Poly2 {
        let (lx, ly) = (box_.lower[0], box_.lower[1]);
        let (ux, uy) = (box_.upper[0], box_.upper[1]);
        Poly2 {
            verts: vec![[lx, ly], [ux, ly], [ux, uy], [lx, uy]],
            tags: vec![FacetTag::Wall; 4],
        }
    }

    /// Clips to the half-plane `x . n <= d`; the new edge gets `tag`.
    pub fn clip(&self, n: [f64; 2], d: f64, tag: FacetTag, eps: f64) -> Poly2 {
        let k = self.verts.len();
        let mut verts = Vec::with_capacity(k + 2);
        let mut tags = Vec::with_capacity(k + 2);
        let side = |v: &[f64; 2]| v[0] * n[0] + v[1] * n[1] - d;
        let mut entry: Option<usize> = None;
        for i in 0..k {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % k];
            let (sa, sb) = (side(&a), side(&b));
            if sa <= eps {
                verts.push(a);
                tags.push(self.tags[i]);
            }
            if (sa < -eps && sb > eps) || (sa > eps && sb < -eps) {
                let t = sa / (sa - sb);
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                if sa > eps {
                    // Entering: the new vertex starts an inside run.
                    verts.push(p);
                    tags.push(self.tags[i]);
                } else {
                    // Leaving: new vertex, then the cut edge.
                    verts.push(p);
                    tags.push(tag);
                    entry = Some(verts.len());
                }
            }
        }
        let _ = entry;
        // Fix up tags: the edge following each "leaving" vertex lies on the
        // cut line. The loop above already assigned `tag` to it.
        Poly2 { verts, tags }
    }

    pub fn area(&self) -> f64 {
        let k = self.verts.len();
        let mut acc = 0.0;
        for i in 0..k {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % k];
            acc += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * acc.abs()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let k = self.verts.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut aa = 0.0;
        for i in 0..k {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % k];
            let w = a[0] * b[1] - b[0] * a[1];
            cx += (a[0] + b[0]) * w;
            cy += (a[1] + b[1]) * w;
            aa += w;
        }
        if aa.abs() < 1e-300 {
            return self.verts[0];
        }
        [cx / (3.0 * aa), cy / (3.0 * aa)]
    }

    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for (i, a) in self.verts.iter().enumerate() {
            for b in &self.verts[i + 1..] {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        d2.sqrt()
    }

    /// Farthest vertex distance from a point.
    pub fn reach(&self, p: &[f64]) -> f64 {
        self.verts
            .iter()
            .map(|v| ((v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Convex polyhedron as tagged faces with counter-clockwise vertex loops.
#[derive(Debug, Clone)]
pub struct Poly3 {
    pub faces: Vec<Face3>,
}

#[derive(Debug, Clone)]
pub struct Face3 {
    pub tag: FacetTag,
    pub verts: Vec<[f64; 3]>,
}

impl Face3 {
    pub fn area(&self) -> f64 {
        let k = self.verts.len();
        if k < 3 {
            return 0.0;
        }
        let mut n = [0.0f64; 3];
        let o = self.verts[0];
        for i in 1..k - 1 {
            let u = sub3(&self.verts[i], &o);
            let v = sub3(&self.verts[i + 1], &o);
            let c = cross3(&u, &v);
            n[0] += c[0];
            n[1] += c[1];
            n[2] += c[2];
        }
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let k = self.verts.len() as f64;
        let mut c = [0.0f64; 3];
        for v in &self.verts {
            c[0] += v[0];
            c[1] += v[1];
            c[2] += v[2];
        }
        [c[0] / k, c[1] / k, c[2] / k]
    }
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl Poly3 {
    pub fn from_box(box_: &DomainBox) -> Poly3 {
        let l = [box_.lower[0], box_.lower[1], box_.lower[2]];
        let u = [box_.upper[0], box_.upper[1], box_.upper[2]];
        let v = |mask: usize| {
            [
                if mask & 1 != 0 { u[0] } else { l[0] },
                if mask & 2 != 0 { u[1] } else { l[1] },
                if mask & 4 != 0 { u[2] } else { l[2] },
            ]
        };
        // Outward-consistent vertex loops for the 6 walls.
        let faces = vec![
            vec![v(0), v(2), v(6), v(4)], // x = lx
            vec![v(1), v(5), v(7), v(3)], // x = ux
            vec![v(0), v(4), v(5), v(1)], // y = ly
            vec![v(2), v(3), v(7), v(6)], // y = uy
            vec![v(0), v(1), v(3), v(2)], // z = lz
            vec![v(4), v(6), v(7), v(5)], // z = uz
        ];
        Poly3 {
            faces: faces
                .into_iter()
                .map(|verts| Face3 { tag: FacetTag::Wall, verts })
                .collect(),
        }
    }

    /// Clips to the half-space `x . n <= d`; the cap face gets `tag`.
    pub fn clip(&self, n: [f64; 3], d: f64, tag: FacetTag, eps: f64) -> Poly3 {
        let side = |v: &[f64; 3]| v[0] * n[0] + v[1] * n[1] + v[2] * n[2] - d;
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        let mut cut_points: Vec<[f64; 3]> = Vec::new();
        for face in &self.faces {
            let k = face.verts.len();
            let mut kept = Vec::with_capacity(k + 2);
            for i in 0..k {
                let a = face.verts[i];
                let b = face.verts[(i + 1) % k];
                let (sa, sb) = (side(&a), side(&b));
                if sa <= eps {
                    kept.push(a);
                    if sa >= -eps {
                        cut_points.push(a);
                    }
                }
                if (sa < -eps && sb > eps) || (sa > eps && sb < -eps) {
                    let t = sa / (sa - sb);
                    let p = [
                        a[0] + t * (b[0] - a[0]),
                        a[1] + t * (b[1] - a[1]),
                        a[2] + t * (b[2] - a[2]),
                    ];
                    kept.push(p);
                    cut_points.push(p);
                }
            }
            if kept.len() >= 3 {
                faces.push(Face3 { tag: face.tag, verts: kept });
            }
        }
        if faces.is_empty() {
            return Poly3 { faces };
        }
        // Cap face: order the cut points around their centroid in the
        // cutting plane (convexity makes angular order valid).
        if cut_points.len() >= 3 {
            dedup_points(&mut cut_points, eps.max(1e-14));
            if cut_points.len() >= 3 {
                let mut c = [0.0f64; 3];
                for p in &cut_points {
                    c[0] += p[0];
                    c[1] += p[1];
                    c[2] += p[2];
                }
                let k = cut_points.len() as f64;
                c = [c[0] / k, c[1] / k, c[2] / k];
                // Plane basis.
                let mut nn = n;
                let nl = (nn[0] * nn[0] + nn[1] * nn[1] + nn[2] * nn[2]).sqrt();
                nn = [nn[0] / nl, nn[1] / nl, nn[2] / nl];
                let pick = if nn[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let e1 = cross3(&nn, &pick);
                let l1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
                let e1 = [e1[0] / l1, e1[1] / l1, e1[2] / l1];
                let e2 = cross3(&nn, &e1);
                cut_points.sort_by(|p, q| {
                    let dp = sub3(p, &c);
                    let dq = sub3(q, &c);
                    let ap = (dp[0] * e2[0] + dp[1] * e2[1] + dp[2] * e2[2])
                        .atan2(dp[0] * e1[0] + dp[1] * e1[1] + dp[2] * e1[2]);
                    let aq = (dq[0] * e2[0] + dq[1] * e2[1] + dq[2] * e2[2])
                        .atan2(dq[0] * e1[0] + dq[1] * e1[1] + dq[2] * e1[2]);
                    ap.partial_cmp(&aq).unwrap()
                });
                faces.push(Face3 { tag, verts: cut_points });
            }
        }
        Poly3 { faces }
    }

    /// Volume as a fan of tetrahedra from `apex` (must be interior).
    pub fn volume_from(&self, apex: &[f64]) -> f64 {
        let a = [apex[0], apex[1], apex[2]];
        let mut acc = 0.0;
        for face in &self.faces {
            let k = face.verts.len();
            if k < 3 {
                continue;
            }
            let o = face.verts[0];
            for i in 1..k - 1 {
                let u = sub3(&o, &a);
                let v = sub3(&face.verts[i], &a);
                let w = sub3(&face.verts[i + 1], &a);
                let det = u[0] * (v[1] * w[2] - v[2] * w[1])
                    - u[1] * (v[0] * w[2] - v[2] * w[0])
                    + u[2] * (v[0] * w[1] - v[1] * w[0]);
                acc += det.abs() / 6.0;
            }
        }
        acc
    }

    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        let verts: Vec<&[f64; 3]> = self.faces.iter().flat_map(|f| f.verts.iter()).collect();
        for (i, a) in verts.iter().enumerate() {
            for b in &verts[i + 1..] {
                let d = sub3(a, b);
                d2 = d2.max(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            }
        }
        d2.sqrt()
    }

    pub fn reach(&self, p: &[f64]) -> f64 {
        let mut d2: f64 = 0.0;
        for f in &self.faces {
            for v in &f.verts {
                let dx = v[0] - p[0];
                let dy = v[1] - p[1];
                let dz = v[2] - p[2];
                d2 = d2.max(dx * dx + dy * dy + dz * dz);
            }
        }
        d2.sqrt()
    }
}

fn dedup_points(points: &mut Vec<[f64; 3]>, eps: f64) {
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(points.len());
    for p in points.iter() {
        if !out.iter().any(|q| {
            let d = sub3(p, q);
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= eps * eps
        }) {
            out.push(*p);
        }
    }
    *points = out;
}

/// Bisector half-space of `p` against `q`: `x . n <= d` keeps `p`'s side.
pub fn bisector(p: &[f64], q: &[f64], dim: usize) -> (geom::Vect, f64) {
    let mut n = [0.0; geom::MAXD];
    let mut d = 0.0;
    for k in 0..dim {
        n[k] = q[k] - p[k];
        d += (q[k] * q[k] - p[k] * p[k]) / 2.0;
    }
    (n, d)
}

//! Directional curvature from tube-restricted counts.
//!
//! A 2-plane at a base point is exponentiated into a geodesic surface by
//! shooting a fan of geodesics of `g = e^(2u) g0`; alongside each ray the
//! angular Jacobi field is transported exactly (tangent dynamics of the
//! geodesic flow), so in-slice disk areas come out with spectral accuracy
//! in the angle and O(step^2) in the radius. Cells of an intrinsic ball
//! within `g`-distance `tau * a` of the surface form the Fermi tube; the
//! tube mass collapses to an effective slice radius and a sectional
//! estimate. Polarized planes recover curvature-operator off-diagonals and
//! axis planes assemble Ricci and scalar traces.

use thiserror::Error;

use crate::complex::{CellComplex, CellId, ComplexError};
use crate::geom::{self, Vect};
use crate::oracle::{DensityField, DomainBox, OracleError};

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("geodesic ray left the domain box")]
    GeodesicLeftDomain,
    #[error("slice resolution too coarse: {0}")]
    ResolutionTooCoarse(&'static str),
    #[error("slice extent {extent} too small for tube of hop radius {r} at scale {a}")]
    SliceTooSmall { extent: f64, r: u32, a: f64 },
    #[error("tube contains no mass")]
    EmptyTube,
    #[error("directional estimators need dimension 2 or 3, got {0}")]
    WrongDimension(usize),
    #[error("plane axes must be distinct and within the dimension")]
    BadPlane,
    #[error("complex is missing metadata: {0}")]
    MissingMetadata(&'static str),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// How the 2-plane at the base point is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlaneSpec {
    /// `span{e_i, e_j}` of the coordinate frame.
    Axes(usize, usize),
    /// The simple unit 2-form `(sigma_i - sigma_j)/sqrt(2)` (3D only),
    /// realized as the plane orthogonal to its dual vector
    /// `(e_i - e_j)/sqrt(2)`: basis `{(e_i + e_j)/sqrt(2), e_k}`.
    Polarized(usize, usize),
    /// Arbitrary spanning pair (orthonormalized internally).
    Vectors(Vect, Vect),
}

/// Fermi tube parameters: half-thickness `tau * a` over hop radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    pub tau: f64,
    pub r: u32,
    pub a: f64,
}

/// Discretized geodesic surface `Sigma = exp_base(span{e1, e2})` with
/// in-slice polar coordinates: `point(l, k)` is the point at angle index
/// `l` and arc radius `k * drho` (in `g`-length).
#[derive(Debug, Clone)]
pub struct SlicePlane {
    pub dim: usize,
    pub base: Vect,
    /// g-orthonormal spanning pair (Euclidean coordinates).
    pub e1: Vect,
    pub e2: Vect,
    pub n_theta: usize,
    pub n_rho: usize,
    pub drho: f64,
    /// `(n_rho + 1) * n_theta` points, radius-major.
    points: Vec<Vect>,
    /// Euclidean unit tangents (radial, angular) per point.
    tangents: Vec<(Vect, Vect)>,
    /// Angular Jacobi length `J = |d_theta x|_g` per point.
    jacobi: Vec<f64>,
}

impl SlicePlane {
    #[inline]
    pub fn point(&self, l: usize, k: usize) -> &Vect {
        &self.points[k * self.n_theta + l]
    }

    pub fn extent(&self) -> f64 {
        self.n_rho as f64 * self.drho
    }

    fn jacobi_at(&self, l: usize, k: usize) -> f64 {
        self.jacobi[k * self.n_theta + l]
    }

    /// In-slice geodesic disk areas `Area_g(B_Sigma(base, k * drho))` for
    /// every radius index, by periodic-trapezoid angle quadrature and
    /// trapezoid radius quadrature of the Jacobi length.
    pub fn disk_areas(&self) -> Vec<f64> {
        let dtheta = 2.0 * std::f64::consts::PI / self.n_theta as f64;
        let mut ring = vec![0.0f64; self.n_rho + 1];
        for (k, r) in ring.iter_mut().enumerate() {
            let mut acc = 0.0;
            for l in 0..self.n_theta {
                acc += self.jacobi_at(l, k);
            }
            *r = acc * dtheta;
        }
        let mut areas = vec![0.0f64; self.n_rho + 1];
        for k in 1..=self.n_rho {
            areas[k] = areas[k - 1] + 0.5 * (ring[k - 1] + ring[k]) * self.drho;
        }
        areas
    }
}

/// Realizes a plane spec as a g-orthonormal pair at `base`.
fn realize_plane(
    field: &DensityField,
    base: &[f64],
    plane: &PlaneSpec,
) -> Result<(Vect, Vect), SliceError> {
    let dim = field.dim();
    let axis = |k: usize| -> Result<Vect, SliceError> {
        if k >= dim {
            return Err(SliceError::BadPlane);
        }
        let mut v = [0.0; geom::MAXD];
        v[k] = 1.0;
        Ok(v)
    };
    let (mut v1, mut v2) = match *plane {
        PlaneSpec::Axes(i, j) => {
            if i == j {
                return Err(SliceError::BadPlane);
            }
            (axis(i)?, axis(j)?)
        }
        PlaneSpec::Polarized(i, j) => {
            if dim != 3 || i == j || i >= 3 || j >= 3 {
                return Err(SliceError::BadPlane);
            }
            let k = 3 - i - j;
            let (ei, ej, ek) = (axis(i)?, axis(j)?, axis(k)?);
            let mut sum = [0.0; geom::MAXD];
            for d in 0..3 {
                sum[d] = (ei[d] + ej[d]) / std::f64::consts::SQRT_2;
            }
            (sum, ek)
        }
        PlaneSpec::Vectors(a, b) => (a, b),
    };
    // Euclidean Gram-Schmidt, then scale by e^(-u) for g-orthonormality.
    if geom::normalize(&mut v1, dim) == 0.0 {
        return Err(SliceError::BadPlane);
    }
    let d = geom::dot(&v2, &v1, dim);
    for k in 0..dim {
        v2[k] -= d * v1[k];
    }
    if geom::normalize(&mut v2, dim) == 0.0 {
        return Err(SliceError::BadPlane);
    }
    let scale = (-field.u(base)).exp();
    Ok((geom::scale(&v1, scale, dim), geom::scale(&v2, scale, dim)))
}

/// Hessian-vector product of `u`, reconstructed exactly from the quadratic
/// form by polarization (H is symmetric).
fn hess_vec(field: &DensityField, x: &[f64], xi: &[f64]) -> Vect {
    let dim = field.dim();
    let mut out = [0.0; geom::MAXD];
    for k in 0..dim {
        let mut probe = [0.0; geom::MAXD];
        probe[k] = 1.0;
        let plus = geom::add_scaled(xi, 1.0, &probe);
        let minus = geom::add_scaled(xi, -1.0, &probe);
        out[k] = (field.hess_u_quadratic(x, &plus) - field.hess_u_quadratic(x, &minus)) / 4.0;
    }
    out
}

/// State advanced along one ray: position, velocity, Jacobi field and its
/// derivative.
#[derive(Clone, Copy)]
struct RayState {
    x: Vect,
    v: Vect,
    xi: Vect,
    eta: Vect,
}

/// Geodesic acceleration of the conformal metric:
/// `a = -2 (grad_u . v) v + |v|^2 grad_u`.
fn accel(field: &DensityField, x: &[f64], v: &[f64]) -> Vect {
    let dim = field.dim();
    let g = field.grad_u(x);
    let gv = geom::dot(&g, v, dim);
    let v2 = geom::norm2(v, dim);
    let mut a = [0.0; geom::MAXD];
    for k in 0..dim {
        a[k] = -2.0 * gv * v[k] + v2 * g[k];
    }
    a
}

/// Linearized acceleration driving the Jacobi transport.
fn accel_tangent(field: &DensityField, s: &RayState) -> Vect {
    let dim = field.dim();
    let g = field.grad_u(&s.x[..dim]);
    let h_xi = hess_vec(field, &s.x[..dim], &s.xi);
    let gv = geom::dot(&g, &s.v, dim);
    let g_eta = geom::dot(&g, &s.eta, dim);
    let hxi_v = geom::dot(&h_xi, &s.v, dim);
    let v2 = geom::norm2(&s.v, dim);
    let v_eta = geom::dot(&s.v, &s.eta, dim);
    let mut out = [0.0; geom::MAXD];
    for k in 0..dim {
        out[k] = -2.0 * hxi_v * s.v[k] + v2 * h_xi[k] - 2.0 * g_eta * s.v[k]
            - 2.0 * gv * s.eta[k]
            + 2.0 * v_eta * g[k];
    }
    out
}

fn rk4_step(field: &DensityField, s: &RayState, h: f64) -> RayState {
    let dim = field.dim();
    let deriv = |s: &RayState| RayState {
        x: s.v,
        v: accel(field, &s.x[..dim], &s.v),
        xi: s.eta,
        eta: accel_tangent(field, s),
    };
    let add = |a: &RayState, k: &RayState, c: f64| RayState {
        x: geom::add_scaled(&a.x, c, &k.x),
        v: geom::add_scaled(&a.v, c, &k.v),
        xi: geom::add_scaled(&a.xi, c, &k.xi),
        eta: geom::add_scaled(&a.eta, c, &k.eta),
    };
    let k1 = deriv(s);
    let k2 = deriv(&add(s, &k1, h / 2.0));
    let k3 = deriv(&add(s, &k2, h / 2.0));
    let k4 = deriv(&add(s, &k3, h));
    let mut acc = RayState {
        x: k1.x,
        v: k1.v,
        xi: k1.xi,
        eta: k1.eta,
    };
    acc = add(&acc, &k2, 2.0);
    acc = add(&acc, &k3, 2.0);
    acc = add(&acc, &k4, 1.0);
    RayState {
        x: geom::add_scaled(&s.x, h / 6.0, &acc.x),
        v: geom::add_scaled(&s.v, h / 6.0, &acc.v),
        xi: geom::add_scaled(&s.xi, h / 6.0, &acc.xi),
        eta: geom::add_scaled(&s.eta, h / 6.0, &acc.eta),
    }
}

/// Discretizes `Sigma = exp_base(span)` by geodesic shooting over a fan of
/// `n_theta` rays with `g`-arclength step `delta`, out to `extent`.
pub fn build_slice(
    field: &DensityField,
    base: &[f64],
    plane: &PlaneSpec,
    extent: f64,
    delta: f64,
    box_: &DomainBox,
    n_theta: usize,
) -> Result<SlicePlane, SliceError> {
    let dim = field.dim();
    if dim != 2 && dim != 3 {
        return Err(SliceError::WrongDimension(dim));
    }
    if n_theta < 16 {
        return Err(SliceError::ResolutionTooCoarse("need at least 16 rays"));
    }
    let n_rho = (extent / delta).ceil() as usize;
    if n_rho < 8 {
        return Err(SliceError::ResolutionTooCoarse("need at least 8 radial steps"));
    }
    let (e1, e2) = realize_plane(field, base, plane)?;
    let n_pts = (n_rho + 1) * n_theta;
    let mut points = vec![[0.0; geom::MAXD]; n_pts];
    let mut tangents = vec![([0.0; geom::MAXD], [0.0; geom::MAXD]); n_pts];
    let mut jacobi = vec![0.0f64; n_pts];

    let rays: Vec<usize> = (0..n_theta).collect();
    type RaySample = (Vect, Vect, Vect, f64);
    let results: Vec<Result<Vec<RaySample>, SliceError>> =
        crate::harness::maybe_par_map(&rays, |&l| {
            let theta = 2.0 * std::f64::consts::PI * l as f64 / n_theta as f64;
            let (sin, cos) = theta.sin_cos();
            let mut v0 = [0.0; geom::MAXD];
            let mut eta0 = [0.0; geom::MAXD];
            for k in 0..dim {
                v0[k] = cos * e1[k] + sin * e2[k];
                eta0[k] = -sin * e1[k] + cos * e2[k];
            }
            let mut state = RayState {
                x: geom::from_slice(base),
                v: v0,
                xi: [0.0; geom::MAXD],
                eta: eta0,
            };
            let record = |s: &RayState| {
                let mut t_rho = s.v;
                geom::normalize(&mut t_rho, dim);
                let mut t_theta = s.xi;
                if geom::normalize(&mut t_theta, dim) == 0.0 {
                    t_theta = eta0;
                    geom::normalize(&mut t_theta, dim);
                }
                let j = field.u(&s.x[..dim]).exp() * geom::norm(&s.xi, dim);
                (s.x, t_rho, t_theta, j)
            };
            let mut row = Vec::with_capacity(n_rho + 1);
            row.push(record(&state));
            for _ in 0..n_rho {
                state = rk4_step(field, &state, delta);
                // Keep unit g-speed against drift.
                let speed = field.u(&state.x[..dim]).exp() * geom::norm(&state.v, dim);
                if speed > 0.0 {
                    for k in 0..dim {
                        state.v[k] /= speed;
                    }
                }
                if !box_.contains(&state.x[..dim]) {
                    return Err(SliceError::GeodesicLeftDomain);
                }
                row.push(record(&state));
            }
            Ok(row)
        });
    for (l, row) in results.into_iter().enumerate() {
        let row = row?;
        for (k, (x, t_rho, t_theta, j)) in row.into_iter().enumerate() {
            points[k * n_theta + l] = x;
            tangents[k * n_theta + l] = (t_rho, t_theta);
            jacobi[k * n_theta + l] = j;
        }
    }
    Ok(SlicePlane {
        dim,
        base: geom::from_slice(base),
        e1,
        e2,
        n_theta,
        n_rho,
        drho: delta,
        points,
        tangents,
        jacobi,
    })
}

/// Continuum sectional oracle: measures in-slice disk areas, inverts the
/// small-disk law `Area = pi rho^2 (1 - K rho^2 / 12 + O(rho^4))` as
/// `K(rho) = 12 (pi rho^2 - Area) / (pi rho^4)` and extrapolates `rho -> 0`
/// by fitting `K(rho) = K + c rho^2` over the outer half of the radii.
pub fn slice_gauss_oracle(_field: &DensityField, slice: &SlicePlane) -> Result<f64, SliceError> {
    if slice.n_rho < 16 {
        return Err(SliceError::ResolutionTooCoarse("need at least 16 radial steps"));
    }
    let areas = slice.disk_areas();
    let lo = slice.n_rho / 2;
    let (mut sum_w, mut sum_x, mut sum_y, mut sum_xx, mut sum_xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, area) in areas.iter().enumerate().take(slice.n_rho + 1).skip(lo) {
        let rho = k as f64 * slice.drho;
        let k_est =
            12.0 * (std::f64::consts::PI * rho * rho - area) / (std::f64::consts::PI * rho.powi(4));
        let x = rho * rho;
        sum_w += 1.0;
        sum_x += x;
        sum_y += k_est;
        sum_xx += x * x;
        sum_xy += x * k_est;
    }
    let det = sum_w * sum_xx - sum_x * sum_x;
    if det.abs() < 1e-300 {
        return Err(SliceError::ResolutionTooCoarse("degenerate extrapolation"));
    }
    Ok((sum_xx * sum_y - sum_x * sum_xy) / det)
}

/// Cells of the intrinsic ball `B(center, r)` whose realization lies within
/// `g`-distance `tau * a` of the slice. Distance to the surface is the
/// Euclidean point-to-cloud distance refined against the local tangent
/// plane, scaled by `e^u` at the nearest slice point.
pub fn tube_cells(
    complex: &CellComplex,
    center: CellId,
    slice: &SlicePlane,
    spec: &TubeSpec,
    field: &DensityField,
) -> Result<Vec<CellId>, SliceError> {
    let dim = complex.dim();
    if dim != slice.dim {
        return Err(SliceError::WrongDimension(dim));
    }
    if complex.positions().is_none() {
        return Err(SliceError::MissingMetadata("positions"));
    }
    let half = spec.tau * spec.a;
    // The surface must cover the ball's in-plane shadow plus margin.
    let needed = spec.a * spec.r as f64 + 2.0 * half;
    if slice.extent() < needed {
        return Err(SliceError::SliceTooSmall { extent: slice.extent(), r: spec.r, a: spec.a });
    }

    let report = complex.ball_report(center, spec.r, true)?;
    let members = report.members.as_ref().unwrap();

    // Spatial hash over slice points.
    let cell_size = (2.0 * slice.drho).max(half).max(1e-12);
    let mut lower = [f64::INFINITY; geom::MAXD];
    for p in &slice.points {
        for k in 0..dim {
            lower[k] = lower[k].min(p[k]);
        }
    }
    let mut map: std::collections::HashMap<u64, Vec<u32>> = std::collections::HashMap::new();
    let key_of = |ci: &[i32; geom::MAXD]| -> u64 {
        let mut acc = 0u64;
        for k in 0..dim {
            acc = acc.wrapping_mul(0x1_0000) ^ (ci[k] as u16 as u64);
        }
        acc
    };
    let cell_of = |x: &[f64]| -> [i32; geom::MAXD] {
        let mut ci = [0i32; geom::MAXD];
        for k in 0..dim {
            ci[k] = ((x[k] - lower[k]) / cell_size).floor() as i32;
        }
        ci
    };
    for (i, p) in slice.points.iter().enumerate() {
        map.entry(key_of(&cell_of(&p[..dim]))).or_default().push(i as u32);
    }

    let mut out = Vec::new();
    for (cell, _) in members {
        let y = complex.position(*cell).unwrap();
        // Nearest slice point via expanding ring search.
        let mut best = f64::INFINITY;
        let mut best_idx = usize::MAX;
        let ci = cell_of(y);
        let mut ring = 1i32;
        loop {
            let mut offs = [0i32; geom::MAXD];
            visit_offsets_local(dim, ring, &mut offs, 0, &mut |offs| {
                let mut key = ci;
                for k in 0..dim {
                    key[k] += offs[k];
                }
                if let Some(ids) = map.get(&key_of(&key)) {
                    for &i in ids {
                        let d = geom::dist(y, &slice.points[i as usize][..dim], dim);
                        if d < best {
                            best = d;
                            best_idx = i as usize;
                        }
                    }
                }
            });
            // A hit within (ring-1) cells is conclusive; otherwise widen.
            if best <= (ring - 1).max(0) as f64 * cell_size
                || ring as f64 * cell_size > 8.0 * needed
            {
                break;
            }
            ring += 1;
        }
        if best_idx == usize::MAX {
            continue;
        }
        // Local tangent-plane refinement at the nearest point.
        let (t1, t2) = slice.tangents[best_idx];
        let s = &slice.points[best_idx];
        let w = geom::sub(y, &s[..dim]);
        let c1 = geom::dot(&w, &t1, dim);
        let mut t2o = t2;
        let t12 = geom::dot(&t1, &t2, dim);
        for k in 0..dim {
            t2o[k] -= t12 * t1[k];
        }
        geom::normalize(&mut t2o, dim);
        let c2 = geom::dot(&w, &t2o, dim);
        let mut perp2 = 0.0;
        for k in 0..dim {
            let r = w[k] - c1 * t1[k] - c2 * t2o[k];
            perp2 += r * r;
        }
        let g_dist = field.u(&s[..dim]).exp() * perp2.sqrt();
        if g_dist <= half {
            out.push(*cell);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn visit_offsets_local(
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
        visit_offsets_local(dim, radius, offs, axis + 1, f);
    }
}

/// Effective slice radius from the tube mass:
/// `R_c = (mass / (2 tau a pi))^(1/2)` (physical units).
pub fn slice_radius(tube_mass: f64, spec: &TubeSpec) -> Result<f64, SliceError> {
    if !(tube_mass > 0.0) {
        return Err(SliceError::EmptyTube);
    }
    Ok((tube_mass / (2.0 * spec.tau * spec.a * std::f64::consts::PI)).sqrt())
}

/// Everything one tube measurement produces.
#[derive(Debug, Clone, Copy)]
pub struct SectionalDetail {
    /// Counts-only estimate `3 (r^2 - (R_c/a)^2) / r^4` in count units.
    pub value: f64,
    pub tube_mass: f64,
    pub tube_cells: usize,
    /// Physical effective slice radius `R_c`.
    pub slice_radius: f64,
}

/// Volumetric mass of a cell set: explicit weights, or `a^m` per cell.
fn nu_mass(complex: &CellComplex, cells: &[CellId], a: f64) -> f64 {
    match complex.weights() {
        Some(w) => cells.iter().map(|c| w[c.index()]).sum(),
        None => cells.len() as f64 * a.powi(complex.dim() as i32),
    }
}

/// Tube-restricted sectional estimator (count-radius units).
pub fn sectional_estimator(
    complex: &CellComplex,
    center: CellId,
    slice: &SlicePlane,
    spec: &TubeSpec,
    field: &DensityField,
) -> Result<f64, SliceError> {
    Ok(sectional_detail(complex, center, slice, spec, field)?.value)
}

/// Tube-restricted sectional estimate with its raw ingredients.
pub fn sectional_detail(
    complex: &CellComplex,
    center: CellId,
    slice: &SlicePlane,
    spec: &TubeSpec,
    field: &DensityField,
) -> Result<SectionalDetail, SliceError> {
    let cells = tube_cells(complex, center, slice, spec, field)?;
    if cells.is_empty() {
        return Err(SliceError::EmptyTube);
    }
    let mass = nu_mass(complex, &cells, spec.a);
    let r_c = slice_radius(mass, spec)?;
    let r = spec.r as f64;
    let ratio = r_c / spec.a;
    let value = 3.0 * (r * r - ratio * ratio) / r.powi(4);
    Ok(SectionalDetail {
        value,
        tube_mass: mass,
        tube_cells: cells.len(),
        slice_radius: r_c,
    })
}

/// The curvature operator in the basis `{sigma1 = e2^e3, sigma2 = e3^e1,
/// sigma3 = e1^e2}`; diagonal entries are the axis-plane sectionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOperator3 {
    pub m: [[f64; 3]; 3],
}

/// The six sectional inputs of the 3D reconstruction: three axis planes and
/// three polarized planes `xi_ij = (sigma_i - sigma_j)/sqrt(2)`.
#[derive(Debug, Clone, Copy)]
pub struct SectionalSet {
    /// `K(e2^e3)`, `K(e3^e1)`, `K(e1^e2)`.
    pub axis: [f64; 3],
    /// `K(xi_23)`, `K(xi_13)`, `K(xi_12)` (sigma indices, 1-based).
    pub polarized: [f64; 3],
}

/// Fills the operator: diagonals from axis planes, off-diagonals from the
/// polarization identity `K(xi_ij) = (M_ii + M_jj)/2 - M_ij`, i.e.
/// `M_ij = (M_ii + M_jj)/2 - K(xi_ij)`. Symmetric by construction; for the
/// constant-curvature operator `kappa I` every polarized plane also reads
/// `kappa` and the off-diagonals vanish.
pub fn reconstruct_operator_3d(inputs: &SectionalSet) -> CurvatureOperator3 {
    let [m11, m22, m33] = inputs.axis;
    let [xi23, xi13, xi12] = inputs.polarized;
    let m23 = 0.5 * (m22 + m33) - xi23;
    let m13 = 0.5 * (m11 + m33) - xi13;
    let m12 = 0.5 * (m11 + m22) - xi12;
    CurvatureOperator3 {
        m: [[m11, m12, m13], [m12, m22, m23], [m13, m23, m33]],
    }
}

/// Ricci diagonal and scalar assembled from the three axis-plane
/// sectionals: `Ric(e_i, e_i) = sum_j K(e_i ^ e_j)`, `R = 2 sum K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciScalarEstimate {
    pub ric_diag: [f64; 3],
    pub scalar: f64,
}

pub fn ricci_scalar_assembly(k12: f64, k13: f64, k23: f64) -> RicciScalarEstimate {
    RicciScalarEstimate {
        ric_diag: [k12 + k13, k12 + k23, k13 + k23],
        scalar: 2.0 * (k12 + k13 + k23),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{gauss_curvature_2d, sectional_curvature_conformal, FieldSpec};
    use approx::assert_relative_eq;

    fn flat(dim: usize) -> DensityField {
        DensityField::new(dim, FieldSpec::Constant { c: 0.0 }).unwrap()
    }

    fn big_box(dim: usize) -> DomainBox {
        DomainBox::centered(dim, 5.0, 0.1).unwrap()
    }

    #[test]
    fn flat_slice_is_affine_plane() {
        let field = flat(3);
        let slice = build_slice(
            &field,
            &[0.2, -0.1, 0.3],
            &PlaneSpec::Axes(0, 1),
            0.8,
            0.02,
            &big_box(3),
            32,
        )
        .unwrap();
        for l in 0..slice.n_theta {
            for k in 0..=slice.n_rho {
                let p = slice.point(l, k);
                assert!((p[2] - 0.3).abs() < 1e-10, "left the plane: {p:?}");
                let rho = ((p[0] - 0.2).powi(2) + (p[1] + 0.1).powi(2)).sqrt();
                assert!((rho - k as f64 * 0.02).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_slice_oracle_is_zero() {
        let field = flat(3);
        let slice = build_slice(
            &field,
            &[0.0; 3],
            &PlaneSpec::Axes(1, 2),
            0.5,
            0.01,
            &big_box(3),
            48,
        )
        .unwrap();
        let k = slice_gauss_oracle(&field, &slice).unwrap();
        assert!(k.abs() < 1e-3, "flat K = {k}");
    }

    #[test]
    fn whole_space_slice_matches_gauss_2d() {
        // In 2D the slice is the whole space, so the oracle must match the
        // analytic Gaussian curvature.
        for spec in [
            FieldSpec::SphereChart { curvature: 1.0 },
            FieldSpec::SphereChart { curvature: -1.0 },
        ] {
            let field = DensityField::new(2, spec).unwrap();
            let base = [0.1, -0.05];
            let slice = build_slice(
                &field,
                &base,
                &PlaneSpec::Axes(0, 1),
                0.4,
                0.005,
                &big_box(2),
                64,
            )
            .unwrap();
            let k = slice_gauss_oracle(&field, &slice).unwrap();
            let exact = gauss_curvature_2d(&field, &base).unwrap();
            assert!(
                (k - exact).abs() <= 0.02 * exact.abs().max(0.1),
                "slice {k} vs exact {exact}"
            );
        }
    }

    #[test]
    fn radial_3d_slices_match_analytic_sectional() {
        // Conformally flat 3D with a radial u: tangential vs radial planes
        // have different sectional curvature; both must match the analytic
        // conformal-transformation formula.
        let field = DensityField::new(
            3,
            FieldSpec::Radial { amp: 0.2, sigma: 0.4, center: vec![] },
        )
        .unwrap();
        let base = [0.3, 0.0, 0.0];
        let planes = [
            (PlaneSpec::Axes(1, 2), [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]),
            (PlaneSpec::Axes(0, 1), [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]),
        ];
        for (plane, v, w) in planes {
            let slice =
                build_slice(&field, &base, &plane, 0.35, 0.005, &big_box(3), 64).unwrap();
            let k = slice_gauss_oracle(&field, &slice).unwrap();
            let exact = sectional_curvature_conformal(&field, &base, &v, &w).unwrap();
            assert!(
                (k - exact).abs() <= 0.02 * exact.abs().max(0.2),
                "{plane:?}: slice {k} vs exact {exact}"
            );
        }
        let s12 = sectional_curvature_conformal(
            &field,
            &base,
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let s01 = sectional_curvature_conformal(
            &field,
            &base,
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((s12 - s01).abs() > 0.05, "{s12} vs {s01}");
    }

    #[test]
    fn polarized_plane_realization() {
        let field = flat(3);
        let (v1, v2) = realize_plane(&field, &[0.0; 3], &PlaneSpec::Polarized(1, 2)).unwrap();
        // Spanning pair orthonormal and orthogonal to the dual vector.
        let dual = [0.0, 1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
        assert!(geom::dot(&v1, &dual, 3).abs() < 1e-12);
        assert!(geom::dot(&v2, &dual, 3).abs() < 1e-12);
        assert!(geom::dot(&v1, &v2, 3).abs() < 1e-12);
        assert_relative_eq!(geom::norm(&v1, 3), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn polarized_sectional_on_space_form_is_constant() {
        let field = DensityField::new(3, FieldSpec::SphereChart { curvature: 1.0 }).unwrap();
        let base = [0.1, 0.05, -0.1];
        let slice = build_slice(
            &field,
            &base,
            &PlaneSpec::Polarized(0, 1),
            0.3,
            0.005,
            &big_box(3),
            64,
        )
        .unwrap();
        let k = slice_gauss_oracle(&field, &slice).unwrap();
        assert!((k - 1.0).abs() < 0.02, "polarized K = {k}");
    }

    #[test]
    fn slice_radius_inverse_pair() {
        let spec = TubeSpec { tau: 1.5, r: 8, a: 0.05 };
        let ar = spec.a * spec.r as f64;
        let mass = 2.0 * spec.tau * spec.a * std::f64::consts::PI * ar * ar;
        assert_relative_eq!(slice_radius(mass, &spec).unwrap(), ar, epsilon = 1e-12);
        assert!(matches!(slice_radius(0.0, &spec), Err(SliceError::EmptyTube)));
    }

    #[test]
    fn operator_reconstruction_constant_curvature() {
        // kappa-round operator: axis and polarized planes all read kappa,
        // off-diagonals vanish; matches the symbolic operator kappa * Id.
        let kappa = 0.7;
        let op = reconstruct_operator_3d(&SectionalSet {
            axis: [kappa; 3],
            polarized: [kappa; 3],
        });
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { kappa } else { 0.0 };
                assert_relative_eq!(op.m[i][j], expect, epsilon = 1e-12);
                assert_eq!(op.m[i][j], op.m[j][i]);
            }
        }
        let zero = reconstruct_operator_3d(&SectionalSet { axis: [0.0; 3], polarized: [0.0; 3] });
        assert_eq!(zero.m, [[0.0; 3]; 3]);
    }

    #[test]
    fn operator_off_diagonals_close_the_polarization_identity() {
        // Oracle-fed inputs from a radial 3D field: the reconstructed
        // off-diagonals must make the *opposite* polarization
        // (sigma_i + sigma_j)/sqrt(2) consistent:
        // K(plus_ij) = (M_ii + M_jj)/2 + M_ij.
        let field = DensityField::new(
            3,
            FieldSpec::Radial { amp: 0.15, sigma: 0.4, center: vec![] },
        )
        .unwrap();
        let x = [0.25, 0.1, -0.2];
        let axis_planes = [
            ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]), // sigma1 = e2^e3
            ([0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0]), // sigma2 = e3^e1
            ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]), // sigma3 = e1^e2
        ];
        let mut axis = [0.0; 3];
        for (i, (v, w)) in axis_planes.iter().enumerate() {
            axis[i] = sectional_curvature_conformal(&field, &x, v, w).unwrap();
        }
        // Polarized planes xi_ij = (sigma_i - sigma_j)/sqrt 2, sigma indices
        // 0-based here: slots (sigma2,sigma3) -> axes (1,2), etc.
        let mut polarized = [0.0; 3];
        for (slot, (i, j)) in [(0usize, (1usize, 2usize)), (1, (0, 2)), (2, (0, 1))] {
            let (v1, v2) = realize_plane(&field, &x, &PlaneSpec::Polarized(i, j)).unwrap();
            let mut a = v1;
            let mut b = v2;
            geom::normalize(&mut a, 3);
            geom::normalize(&mut b, 3);
            polarized[slot] = sectional_curvature_conformal(&field, &x, &a, &b).unwrap();
        }
        let op = reconstruct_operator_3d(&SectionalSet { axis, polarized });
        for i in 0..3 {
            assert_relative_eq!(op.m[i][i], axis[i], epsilon = 1e-14);
        }
        for (i, j) in [(1usize, 2usize), (0, 2), (0, 1)] {
            // Plane of (sigma_i + sigma_j)/sqrt 2: orthogonal complement of
            // the dual (e_i + e_j)/sqrt 2.
            let k = 3 - i - j;
            let mut v1 = [0.0; geom::MAXD];
            v1[i] = 1.0 / 2f64.sqrt();
            v1[j] = -1.0 / 2f64.sqrt();
            let mut v2 = [0.0; geom::MAXD];
            v2[k] = 1.0;
            let plus = sectional_curvature_conformal(&field, &x, &v1, &v2).unwrap();
            assert_relative_eq!(
                plus,
                0.5 * (op.m[i][i] + op.m[j][j]) + op.m[i][j],
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn ricci_assembly_algebra() {
        let est = ricci_scalar_assembly(0.5, 0.5, 0.5);
        assert_eq!(est.ric_diag, [1.0, 1.0, 1.0]);
        assert_eq!(est.scalar, 3.0);
        let flat = ricci_scalar_assembly(0.0, 0.0, 0.0);
        assert_eq!(flat.scalar, 0.0);
        // Constant curvature kappa: Ric = 2 kappa Id, R = 6 kappa.
        let k = 0.25;
        let est = ricci_scalar_assembly(k, k, k);
        assert_eq!(est.ric_diag, [2.0 * k; 3]);
        assert_relative_eq!(est.scalar, 6.0 * k, epsilon = 1e-15);
    }

    #[test]
    fn frame_invariance_of_assembled_scalar() {
        // R from three mutually orthogonal planes of any orthonormal frame
        // is frame-invariant (oracle-fed inputs, exact algebra).
        let field = DensityField::new(
            3,
            FieldSpec::Radial { amp: 0.2, sigma: 0.5, center: vec![] },
        )
        .unwrap();
        let x = [0.2, -0.15, 0.1];
        let reference = crate::oracle::scalar_curvature(&field, &x).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(13);
        for _ in 0..5 {
            let mut f: Vec<Vect> = Vec::new();
            while f.len() < 3 {
                let mut v = [0.0; geom::MAXD];
                for k in 0..3 {
                    v[k] = rng.random_range(-1.0..1.0);
                }
                for prev in &f {
                    let d = geom::dot(&v, prev, 3);
                    for k in 0..3 {
                        v[k] -= d * prev[k];
                    }
                }
                if geom::normalize(&mut v, 3) > 0.1 {
                    f.push(v);
                }
            }
            let k12 = sectional_curvature_conformal(&field, &x, &f[0], &f[1]).unwrap();
            let k13 = sectional_curvature_conformal(&field, &x, &f[0], &f[2]).unwrap();
            let k23 = sectional_curvature_conformal(&field, &x, &f[1], &f[2]).unwrap();
            let est = ricci_scalar_assembly(k12, k13, k23);
            assert_relative_eq!(est.scalar, reference, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn tube_selection_on_flat_voronoi() {
        use crate::sampler::{sample_quasi_uniform, voronoi_complex, QuasiUniformity, SampleSpec};
        let field = flat(3);
        let box_ = DomainBox::centered(3, 0.5, 0.08).unwrap();
        let spec = SampleSpec {
            box_: box_.clone(),
            h: 0.07,
            seed: 5,
            qu: QuasiUniformity::default(),
        };
        let pts = sample_quasi_uniform(&field, &spec).unwrap();
        let build = voronoi_complex(&pts, &field, &box_).unwrap();
        let complex = &build.complex;
        // Center: cell nearest the origin.
        let mut center = CellId(0);
        let mut best = f64::INFINITY;
        for i in 0..complex.cell_count() as u32 {
            let d = geom::norm(complex.position(CellId(i)).unwrap(), 3);
            if d < best {
                best = d;
                center = CellId(i);
            }
        }
        let a = 0.07;
        let r = 4u32;
        let slice = build_slice(
            &field,
            complex.position(center).unwrap(),
            &PlaneSpec::Axes(0, 1),
            a * r as f64 * 2.5,
            0.01,
            &DomainBox::centered(3, 4.0, 0.1).unwrap(),
            32,
        )
        .unwrap();
        let tau = 1.0;
        let tube = tube_cells(complex, center, &slice, &TubeSpec { tau, r, a }, &field).unwrap();
        assert!(!tube.is_empty());
        let z0 = complex.position(center).unwrap()[2];
        for c in &tube {
            let p = complex.position(*c).unwrap();
            let diam = build.cell_diameters[c.index()];
            assert!(
                (p[2] - z0).abs() <= tau * a + diam + 1e-9,
                "cell {c} at z = {} outside the tube slab",
                p[2]
            );
        }
        // Huge tau swallows the whole ball (slice already covers it).
        let all =
            tube_cells(complex, center, &slice, &TubeSpec { tau: 2.0, r, a }, &field).unwrap();
        assert!(all.len() >= tube.len());
        // r = 0 keeps only the center.
        let only_center =
            tube_cells(complex, center, &slice, &TubeSpec { tau, r: 0, a }, &field).unwrap();
        assert_eq!(only_center, vec![center]);
    }
}

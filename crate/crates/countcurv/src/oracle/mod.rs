//! Continuum ground truth for the conformal relaxation `g = e^(2u) g0`.
//!
//! A yardstick field `u` (line density `e^u`) induces the conformal metric;
//! this module evaluates its curvatures analytically, solves for geodesic
//! distances on a grid, and measures ball volumes / circle perimeters, all
//! of which back the count estimators as oracles.

mod grid;

pub use grid::{
    ball_volume, boundary_distance, circle_perimeter_2d, geodesic_distance,
    geodesic_distance_radial, GridField,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Vect};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("operation requires dimension {expected}, field has {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("dimension {0} unsupported here")]
    UnsupportedDimension(usize),
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("grid too coarse: e^u changes by factor {ratio:.3} over one step")]
    GridTooCoarse { ratio: f64 },
    #[error("geodesic ball of radius {r} escapes the solved domain")]
    BallEscapesDomain { r: f64 },
    #[error("field is not radially symmetric about the requested source")]
    NotRadial,
    #[error("invalid domain: {0}")]
    BadDomain(String),
}

/// Axis-aligned analysis domain with a compact-interior margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub margin: f64,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, margin: f64) -> Result<Self, OracleError> {
        if lower.len() != upper.len() || lower.is_empty() || lower.len() > geom::MAXD {
            return Err(OracleError::BadDomain("corner dimensions mismatch".into()));
        }
        if !(margin > 0.0) {
            return Err(OracleError::BadDomain("margin must be positive".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l < u) {
                return Err(OracleError::BadDomain("lower must be < upper".into()));
            }
        }
        Ok(DomainBox { lower, upper, margin })
    }

    /// Symmetric box `[-half, half]^dim`.
    pub fn centered(dim: usize, half: f64, margin: f64) -> Result<Self, OracleError> {
        DomainBox::new(vec![-half; dim], vec![half; dim], margin)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Distance to the boundary in the background Euclidean metric
    /// (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..self.dim() {
            d = d.min(x[k] - self.lower[k]).min(self.upper[k] - x[k]);
        }
        d
    }

    /// The compact K: this box shrunk by its margin on every side.
    pub fn interior(&self) -> DomainBox {
        DomainBox {
            lower: self.lower.iter().map(|l| l + self.margin).collect(),
            upper: self.upper.iter().map(|u| u - self.margin).collect(),
            margin: self.margin,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }
}

/// Field specification, also the JSON schema of run configs.
///
/// All kinds are radially symmetric about `center` (origin by default),
/// which is what makes exact quadrature oracles along rays available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `u = c`: flat metric rescaled by `e^c`.
    Constant { c: f64 },
    /// Density bump `rho = exp(eps * phi)`, i.e. `u = (eps/m) phi`, with
    /// `phi = exp(-s^2 / (2 sigma^2))` cut off smoothly between `r0`/`r1`.
    GaussianBump {
        eps: f64,
        sigma: f64,
        #[serde(default)]
        center: Vec<f64>,
        r0: f64,
        r1: f64,
    },
    /// Stereographic chart of the constant-curvature space form:
    /// `u = -ln(1 + k s^2 / 4)`. Sectional curvature `k` in every plane;
    /// `k < 0` is the hyperbolic chart (valid for `s^2 < 4/|k|`).
    SphereChart { curvature: f64 },
    /// Plain radial Gaussian in `u` itself: `u = amp * exp(-s^2/(2 sigma^2))`.
    Radial {
        amp: f64,
        sigma: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
}

/// How derivatives of `u` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Analytic,
    FiniteDifference { step: f64 },
}

/// Scalar field with the derivative access the curvature formulas need.
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vect;
    fn laplacian(&self, x: &[f64]) -> f64;
}

/// Radial profile `f(s)` with two derivatives; fields are `f(|x - center|)`.
#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Constant { c: f64 },
    /// `coef * G(s) * chi(s)` with Gaussian `G` and quintic cutoff `chi`.
    CutGaussian { coef: f64, sigma: f64, r0: f64, r1: f64 },
    /// `-ln(1 + k s^2 / 4)`.
    LogChart { k: f64 },
}

impl Profile {
    /// `(f, f', f'')` at radius `s`.
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Constant { c } => (c, 0.0, 0.0),
            Profile::CutGaussian { coef, sigma, r0, r1 } => {
                let s2 = sigma * sigma;
                let g = (-s * s / (2.0 * s2)).exp();
                let gp = -(s / s2) * g;
                let gpp = (s * s / (s2 * s2) - 1.0 / s2) * g;
                let (chi, chip, chipp) = cutoff(s, r0, r1);
                (
                    coef * g * chi,
                    coef * (gp * chi + g * chip),
                    coef * (gpp * chi + 2.0 * gp * chip + g * chipp),
                )
            }
            Profile::LogChart { k } => {
                let q = k * s * s / 4.0;
                let den = 1.0 + q;
                let f = -den.ln();
                let fp = -(k * s / 2.0) / den;
                let fpp = (k / 2.0) * (q - 1.0) / (den * den);
                (f, fp, fpp)
            }
        }
    }
}

/// Quintic smoothstep cutoff: identically 1 below `r0`, 0 above `r1`, C^2
/// across the junctions. Returns `(chi, chi', chi'')`.
fn cutoff(s: f64, r0: f64, r1: f64) -> (f64, f64, f64) {
    if s <= r0 {
        return (1.0, 0.0, 0.0);
    }
    if s >= r1 {
        return (0.0, 0.0, 0.0);
    }
    let h = r1 - r0;
    let w = (s - r0) / h;
    let step = w * w * w * (10.0 - 15.0 * w + 6.0 * w * w);
    let dstep = 30.0 * w * w * (1.0 - 2.0 * w + w * w) / h;
    let ddstep = (60.0 * w - 180.0 * w * w + 120.0 * w * w * w) / (h * h);
    (1.0 - step, -dstep, -ddstep)
}

/// Radial scalar field `f(|x - center|)` exposing exact derivatives.
#[derive(Debug, Clone)]
pub struct RadialScalar {
    dim: usize,
    center: Vect,
    profile: Profile,
}

impl RadialScalar {
    fn radius(&self, x: &[f64]) -> f64 {
        geom::dist(x, &self.center, self.dim)
    }

    /// Hessian as the pair (radial, tangential) eigenvalues `(f'', f'/s)`.
    fn hessian_parts(&self, x: &[f64]) -> (f64, f64, Vect) {
        let s = self.radius(x);
        let (_, fp, fpp) = self.profile.eval(s);
        if s < 1e-12 {
            return (fpp, fpp, [0.0; geom::MAXD]);
        }
        let dir = geom::scale(&geom::sub(x, &self.center), 1.0 / s, self.dim);
        (fpp, fp / s, dir)
    }
}

impl ScalarField for RadialScalar {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.profile.eval(self.radius(x)).0
    }

    fn grad(&self, x: &[f64]) -> Vect {
        let s = self.radius(x);
        if s < 1e-12 {
            return [0.0; geom::MAXD];
        }
        let (_, fp, _) = self.profile.eval(s);
        geom::scale(&geom::sub(x, &self.center), fp / s, self.dim)
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let s = self.radius(x);
        let (_, fp, fpp) = self.profile.eval(s);
        if s < 1e-12 {
            return self.dim as f64 * fpp;
        }
        fpp + (self.dim as f64 - 1.0) * fp / s
    }
}

/// `exp(phi)` of an inner scalar field, with exact derivative algebra.
pub struct ExpScalar<F: ScalarField> {
    pub inner: F,
}

impl<F: ScalarField> ScalarField for ExpScalar<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x).exp()
    }

    fn grad(&self, x: &[f64]) -> Vect {
        let v = self.value(x);
        geom::scale(&self.inner.grad(x), v, self.dim())
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        let g = self.inner.grad(x);
        v * (self.inner.laplacian(x) + geom::norm2(&g, self.dim()))
    }
}

/// The yardstick field `u(x)` of the conformal relaxation, with value,
/// gradient, Laplacian and Hessian access.
#[derive(Debug, Clone)]
pub struct DensityField {
    dim: usize,
    spec: FieldSpec,
    radial: RadialScalar,
    provenance: Provenance,
}

impl DensityField {
    pub fn new(dim: usize, spec: FieldSpec) -> Result<Self, OracleError> {
        if dim == 0 || dim > geom::MAXD {
            return Err(OracleError::UnsupportedDimension(dim));
        }
        let radial = Self::compile(dim, &spec)?;
        Ok(DensityField {
            dim,
            spec,
            radial,
            provenance: Provenance::Analytic,
        })
    }

    fn compile(dim: usize, spec: &FieldSpec) -> Result<RadialScalar, OracleError> {
        let (center, profile) = match spec {
            FieldSpec::Constant { c } => (Vec::new(), Profile::Constant { c: *c }),
            FieldSpec::GaussianBump { eps, sigma, center, r0, r1 } => {
                if !(r1 > r0 && *r0 > 0.0 && *sigma > 0.0) {
                    return Err(OracleError::BadDomain(
                        "gaussian bump needs sigma > 0 and r1 > r0 > 0".into(),
                    ));
                }
                (
                    center.clone(),
                    Profile::CutGaussian {
                        coef: eps / dim as f64,
                        sigma: *sigma,
                        r0: *r0,
                        r1: *r1,
                    },
                )
            }
            FieldSpec::SphereChart { curvature } => (Vec::new(), Profile::LogChart { k: *curvature }),
            FieldSpec::Radial { amp, sigma, center } => {
                if !(*sigma > 0.0) {
                    return Err(OracleError::BadDomain("radial field needs sigma > 0".into()));
                }
                (
                    center.clone(),
                    Profile::CutGaussian {
                        coef: *amp,
                        sigma: *sigma,
                        r0: f64::INFINITY,
                        r1: f64::INFINITY,
                    },
                )
            }
        };
        let mut c = [0.0; geom::MAXD];
        if !center.is_empty() {
            if center.len() != dim {
                return Err(OracleError::WrongDimension { expected: dim, got: center.len() });
            }
            c[..dim].copy_from_slice(&center);
        }
        Ok(RadialScalar { dim, center: c, profile })
    }

    pub fn from_json(dim: usize, json: &str) -> Result<Self, OracleError> {
        let spec: FieldSpec = serde_json::from_str(json)
            .map_err(|e| OracleError::BadDomain(format!("field spec: {e}")))?;
        DensityField::new(dim, spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Same field with derivatives evaluated by central differences.
    pub fn with_finite_difference(mut self, step: f64) -> Self {
        self.provenance = Provenance::FiniteDifference { step };
        self
    }

    /// Center of radial symmetry, when meaningful for ray quadrature.
    pub fn radial_center(&self) -> Option<Vect> {
        match self.spec {
            FieldSpec::Constant { .. } => Some([0.0; geom::MAXD]),
            _ => Some(self.radial.center),
        }
    }

    pub fn u(&self, x: &[f64]) -> f64 {
        self.radial.value(x)
    }

    /// `e^(u(x))`: the local line density (yardstick length).
    pub fn line_density(&self, x: &[f64]) -> f64 {
        self.u(x).exp()
    }

    pub fn grad_u(&self, x: &[f64]) -> Vect {
        match self.provenance {
            Provenance::Analytic => self.radial.grad(x),
            Provenance::FiniteDifference { step } => {
                let mut g = [0.0; geom::MAXD];
                let mut xp = geom::from_slice(x);
                for k in 0..self.dim {
                    xp[k] = x[k] + step;
                    let up = self.u(&xp[..self.dim]);
                    xp[k] = x[k] - step;
                    let um = self.u(&xp[..self.dim]);
                    xp[k] = x[k];
                    g[k] = (up - um) / (2.0 * step);
                }
                g
            }
        }
    }

    pub fn laplacian_u(&self, x: &[f64]) -> f64 {
        match self.provenance {
            Provenance::Analytic => self.radial.laplacian(x),
            Provenance::FiniteDifference { step } => {
                let u0 = self.u(x);
                let mut acc = 0.0;
                let mut xp = geom::from_slice(x);
                for k in 0..self.dim {
                    xp[k] = x[k] + step;
                    let up = self.u(&xp[..self.dim]);
                    xp[k] = x[k] - step;
                    let um = self.u(&xp[..self.dim]);
                    xp[k] = x[k];
                    acc += (up - 2.0 * u0 + um) / (step * step);
                }
                acc
            }
        }
    }

    /// Hessian of `u` applied as a quadratic form to a direction `v`.
    pub fn hess_u_quadratic(&self, x: &[f64], v: &[f64]) -> f64 {
        match self.provenance {
            Provenance::Analytic => {
                let (radial, tangential, dir) = self.radial.hessian_parts(x);
                let vr = geom::dot(v, &dir, self.dim);
                let v2 = geom::norm2(v, self.dim);
                radial * vr * vr + tangential * (v2 - vr * vr)
            }
            Provenance::FiniteDifference { step } => {
                let xp = geom::add_scaled(x, step, v);
                let xm = geom::add_scaled(x, -step, v);
                (self.u(&xp[..self.dim]) - 2.0 * self.u(x) + self.u(&xm[..self.dim]))
                    / (step * step)
            }
        }
    }
}

impl ScalarField for DensityField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.u(x)
    }

    fn grad(&self, x: &[f64]) -> Vect {
        self.grad_u(x)
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.laplacian_u(x)
    }
}

/// The bump profile `phi` of a [`FieldSpec::GaussianBump`], as its own
/// scalar field (the experiments compare signs against `-lap(phi)`).
pub fn bump_phi(field: &DensityField) -> Option<RadialScalar> {
    match field.spec {
        FieldSpec::GaussianBump { sigma, r0, r1, .. } => Some(RadialScalar {
            dim: field.dim,
            center: field.radial.center,
            profile: Profile::CutGaussian { coef: 1.0, sigma, r0, r1 },
        }),
        _ => None,
    }
}

/// Density `rho = e^(m u)` of a field, as a scalar field with exact algebra.
pub fn density_of(field: &DensityField) -> ExpScalar<ScaledScalar<DensityField>> {
    ExpScalar {
        inner: ScaledScalar {
            inner: field.clone(),
            coef: field.dim() as f64,
        },
    }
}

/// `coef * phi` of an inner scalar field.
pub struct ScaledScalar<F: ScalarField> {
    pub inner: F,
    pub coef: f64,
}

impl<F: ScalarField> ScalarField for ScaledScalar<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.coef * self.inner.value(x)
    }

    fn grad(&self, x: &[f64]) -> Vect {
        geom::scale(&self.inner.grad(x), self.coef, self.dim())
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.coef * self.inner.laplacian(x)
    }
}

/// Gaussian curvature of the 2D conformal metric: `K = -e^(-2u) lap(u)`.
pub fn gauss_curvature_2d(field: &DensityField, x: &[f64]) -> Result<f64, OracleError> {
    if field.dim() != 2 {
        return Err(OracleError::WrongDimension { expected: 2, got: field.dim() });
    }
    Ok(-(-2.0 * field.u(x)).exp() * field.laplacian_u(x))
}

/// Scalar curvature of `g = e^(2u) g0` in dimension `m >= 2`:
/// `R = e^(-2u) (-2(m-1) lap(u) - (m-1)(m-2) |grad u|^2)`.
pub fn scalar_curvature(field: &DensityField, x: &[f64]) -> Result<f64, OracleError> {
    let m = field.dim() as f64;
    if field.dim() < 2 {
        return Err(OracleError::WrongDimension { expected: 2, got: field.dim() });
    }
    let grad = field.grad_u(x);
    let g2 = geom::norm2(&grad, field.dim());
    Ok((-2.0 * field.u(x)).exp()
        * (-2.0 * (m - 1.0) * field.laplacian_u(x) - (m - 1.0) * (m - 2.0) * g2))
}

/// Scalar curvature straight from a density field `rho` (with `u = log(rho)/m`):
/// `R = rho^(-2/m) [ -(2(m-1)/m) lap(rho)/rho + ((m-1)(m+2)/m^2) |grad rho|^2/rho^2 ]`.
pub fn density_scalar_curvature(
    rho: &impl ScalarField,
    x: &[f64],
) -> Result<f64, OracleError> {
    let m = rho.dim() as f64;
    let val = rho.value(x);
    if !(val > 0.0) {
        return Err(OracleError::NonPositiveDensity(val));
    }
    let grad = rho.grad(x);
    let g2 = geom::norm2(&grad, rho.dim());
    Ok(val.powf(-2.0 / m)
        * (-(2.0 * (m - 1.0) / m) * rho.laplacian(x) / val
            + ((m - 1.0) * (m + 2.0) / (m * m)) * g2 / (val * val)))
}

/// Sectional curvature of `g = e^(2u) g0` for the plane spanned by the
/// Euclidean-orthonormal pair `(v, w)`:
/// `K = e^(-2u) ( -Hess u(v,v) - Hess u(w,w) + (du v)^2 + (du w)^2 - |grad u|^2 )`.
///
/// Summing over all axis pairs reproduces the scalar-curvature formula,
/// which the tests pin down.
pub fn sectional_curvature_conformal(
    field: &DensityField,
    x: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64, OracleError> {
    if field.dim() < 2 {
        return Err(OracleError::WrongDimension { expected: 2, got: field.dim() });
    }
    let dim = field.dim();
    let grad = field.grad_u(x);
    let dv = geom::dot(&grad, v, dim);
    let dw = geom::dot(&grad, w, dim);
    let g2 = geom::norm2(&grad, dim);
    let hvv = field.hess_u_quadratic(x, v);
    let hww = field.hess_u_quadratic(x, w);
    Ok((-2.0 * field.u(x)).exp() * (-hvv - hww + dv * dv + dw * dw - g2))
}

/// Small-ball volume prediction `omega_m r^m (1 - R r^2 / (6(m+2)))`.
pub fn small_ball_prediction(m: usize, r: f64, scalar: f64) -> Result<f64, OracleError> {
    if !(2..=4).contains(&m) {
        return Err(OracleError::UnsupportedDimension(m));
    }
    let omega = crate::lattice::unit_ball_volume(m);
    Ok(omega * r.powi(m as i32) * (1.0 - scalar * r * r / (6.0 * (m as f64 + 2.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn sphere_chart(dim: usize, k: f64) -> DensityField {
        DensityField::new(dim, FieldSpec::SphereChart { curvature: k }).unwrap()
    }

    fn bump(dim: usize, eps: f64) -> DensityField {
        DensityField::new(
            dim,
            FieldSpec::GaussianBump {
                eps,
                sigma: 0.15,
                center: vec![],
                r0: 0.3,
                r1: 0.45,
            },
        )
        .unwrap()
    }

    fn random_point(rng: &mut StdRng, dim: usize, scale: f64) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn constant_field_is_flat() {
        let f = DensityField::new(2, FieldSpec::Constant { c: 0.7 }).unwrap();
        assert_eq!(gauss_curvature_2d(&f, &[0.3, -0.2]).unwrap(), 0.0);
        for m in 2..=4 {
            let f = DensityField::new(m, FieldSpec::Constant { c: -0.3 }).unwrap();
            assert_eq!(scalar_curvature(&f, &vec![0.1; m]).unwrap(), 0.0);
        }
    }

    #[test]
    fn sphere_chart_has_unit_curvature() {
        let f = sphere_chart(2, 1.0);
        // K = 1 at the origin and, in fact, everywhere on the chart.
        assert_relative_eq!(gauss_curvature_2d(&f, &[0.0, 0.0]).unwrap(), 1.0, epsilon = 1e-12);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let x = random_point(&mut rng, 2, 0.8);
            assert_relative_eq!(gauss_curvature_2d(&f, &x).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn hyperbolic_chart_is_negative() {
        let f = sphere_chart(2, -1.0);
        assert_relative_eq!(gauss_curvature_2d(&f, &[0.1, 0.2]).unwrap(), -1.0, epsilon = 1e-9);
    }

    #[test]
    fn bump_peak_is_positively_curved() {
        // lap(phi) < 0 at the peak, so K > 0 there.
        let f = bump(2, 0.05);
        let k = gauss_curvature_2d(&f, &[0.0, 0.0]).unwrap();
        assert!(k > 0.0, "K at peak = {k}");
    }

    #[test]
    fn scalar_is_twice_gauss_in_2d() {
        let f = bump(2, 0.08);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_point(&mut rng, 2, 0.5);
            let r = scalar_curvature(&f, &x).unwrap();
            let k = gauss_curvature_2d(&f, &x).unwrap();
            assert_relative_eq!(r, 2.0 * k, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn density_formula_matches_conformal_scalar() {
        // rho = e^{m u} for the same field: the two formulas are one identity.
        for m in 2..=4usize {
            let f = bump(m, 0.05);
            let rho = density_of(&f);
            let mut rng = StdRng::seed_from_u64(23 + m as u64);
            for _ in 0..100 {
                let x = random_point(&mut rng, m, 0.5);
                let direct = scalar_curvature(&f, &x).unwrap();
                let via_rho = density_scalar_curvature(&rho, &x).unwrap();
                assert_relative_eq!(direct, via_rho, epsilon = 1e-10, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn density_first_order_expansion() {
        // rho = e^{eps phi}: R = -(2(m-1)/m) eps lap(phi) + O(eps^2).
        // (The coefficient follows from the density formula itself with
        // lap(rho)/rho = eps lap(phi) + O(eps^2); the conformal route
        // u = (eps/m) phi gives the same thing, which
        // `density_formula_matches_conformal_scalar` pins exactly.)
        for m in [2usize, 3] {
            let eps = 1e-5;
            let phi = RadialScalar {
                dim: m,
                center: [0.0; geom::MAXD],
                profile: Profile::CutGaussian { coef: 1.0, sigma: 0.15, r0: 0.3, r1: 0.45 },
            };
            let rho = ExpScalar {
                inner: ScaledScalar { inner: phi.clone(), coef: eps },
            };
            let x = vec![0.05; m];
            let first_order = -(2.0 * (m as f64 - 1.0) / m as f64) * eps * phi.laplacian(&x);
            let exact = density_scalar_curvature(&rho, &x).unwrap();
            assert!(
                (exact - first_order).abs() <= 200.0 * eps * eps * phi.laplacian(&x).abs().max(1.0),
                "m={m}: exact {exact} vs first order {first_order}"
            );
        }
    }

    #[test]
    fn rho_one_gives_zero() {
        let rho = ExpScalar {
            inner: ScaledScalar {
                inner: DensityField::new(3, FieldSpec::Constant { c: 0.0 }).unwrap(),
                coef: 1.0,
            },
        };
        assert_eq!(density_scalar_curvature(&rho, &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn nonpositive_density_rejected() {
        struct Neg;
        impl ScalarField for Neg {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, _: &[f64]) -> f64 {
                -1.0
            }
            fn grad(&self, _: &[f64]) -> Vect {
                [0.0; geom::MAXD]
            }
            fn laplacian(&self, _: &[f64]) -> f64 {
                0.0
            }
        }
        assert!(matches!(
            density_scalar_curvature(&Neg, &[0.0, 0.0]),
            Err(OracleError::NonPositiveDensity(_))
        ));
    }

    #[test]
    fn finite_difference_matches_analytic() {
        // Relative 1e-4 at step 1e-3 on fields with O(1) derivative scale.
        let fields = [
            DensityField::new(3, FieldSpec::SphereChart { curvature: 1.0 }).unwrap(),
            DensityField::new(3, FieldSpec::SphereChart { curvature: -1.0 }).unwrap(),
            DensityField::new(3, FieldSpec::Radial { amp: 0.3, sigma: 0.5, center: vec![] })
                .unwrap(),
        ];
        let mut rng = StdRng::seed_from_u64(5);
        for analytic in fields {
            let fd = analytic.clone().with_finite_difference(1e-3);
            for _ in 0..100 {
                let x = random_point(&mut rng, 3, 0.5);
                let ga = analytic.grad_u(&x);
                let gf = fd.grad_u(&x);
                for k in 0..3 {
                    assert!((ga[k] - gf[k]).abs() <= 1e-4 * ga[k].abs().max(1.0));
                }
                let la = analytic.laplacian_u(&x);
                let lf = fd.laplacian_u(&x);
                assert!((la - lf).abs() <= 1e-4 * la.abs().max(1.0), "{la} vs {lf}");
            }
        }
        // The sharp bump has fourth derivatives of order 1/sigma^4; the FD
        // error scales with step^2 times that, which the bound reflects.
        let analytic = bump(3, 0.05);
        let fd = bump(3, 0.05).with_finite_difference(1e-3);
        let quartic_scale = 1.0 / 0.15f64.powi(4);
        for _ in 0..100 {
            let x = random_point(&mut rng, 3, 0.5);
            let la = analytic.laplacian_u(&x);
            let lf = fd.laplacian_u(&x);
            assert!(
                (la - lf).abs() <= 1e-6 * quartic_scale.max(la.abs()),
                "{la} vs {lf}"
            );
        }
    }

    #[test]
    fn sectional_sums_to_scalar() {
        // sum over the m(m-1) ordered axis pairs of K(ei^ej) equals R.
        for m in [3usize, 4] {
            let f = bump(m, 0.06);
            let mut rng = StdRng::seed_from_u64(77);
            for _ in 0..20 {
                let x = random_point(&mut rng, m, 0.4);
                let mut sum = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        if i != j {
                            let mut v = [0.0; geom::MAXD];
                            let mut w = [0.0; geom::MAXD];
                            v[i] = 1.0;
                            w[j] = 1.0;
                            sum += sectional_curvature_conformal(&f, &x, &v, &w).unwrap();
                        }
                    }
                }
                let r = scalar_curvature(&f, &x).unwrap();
                assert_relative_eq!(sum, r, epsilon = 1e-10, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn space_form_sectional_is_constant() {
        let f = sphere_chart(3, 1.0);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_point(&mut rng, 3, 0.5);
            // Random orthonormal pair.
            let mut v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            geom::normalize(&mut v, 3);
            let mut w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = geom::dot(&w, &v, 3);
            for k in 0..3 {
                w[k] -= d * v[k];
            }
            geom::normalize(&mut w, 3);
            let k = sectional_curvature_conformal(&f, &x, &v, &w).unwrap();
            assert_relative_eq!(k, 1.0, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn small_ball_prediction_coefficients() {
        // 6(m+2) = 24, 30, 36 in the normalization table.
        let r = 0.2;
        for (m, denom) in [(2usize, 24.0), (3, 30.0), (4, 36.0)] {
            let omega = crate::lattice::unit_ball_volume(m);
            let v = small_ball_prediction(m, r, 1.0).unwrap();
            let expect = omega * r.powi(m as i32) * (1.0 - r * r / denom);
            assert_relative_eq!(v, expect, epsilon = 1e-15);
            assert_eq!(small_ball_prediction(m, r, 0.0).unwrap(), omega * r.powi(m as i32));
        }
    }

    #[test]
    fn field_json_roundtrip() {
        let f = DensityField::from_json(
            2,
            r#"{"kind":"gaussian_bump","eps":0.05,"sigma":0.15,"r0":0.3,"r1":0.45}"#,
        )
        .unwrap();
        assert!(matches!(f.spec(), FieldSpec::GaussianBump { .. }));
        let f = DensityField::from_json(3, r#"{"kind":"sphere_chart","curvature":-1.0}"#).unwrap();
        assert!(matches!(f.spec(), FieldSpec::SphereChart { .. }));
    }

    #[test]
    fn wrong_dimension_errors() {
        let f = sphere_chart(3, 1.0);
        assert!(matches!(
            gauss_curvature_2d(&f, &[0.0; 3]),
            Err(OracleError::WrongDimension { expected: 2, got: 3 })
        ));
    }
}

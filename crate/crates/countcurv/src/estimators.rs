//! Counts-only scalar diagnostics: reconstructed radii, excess radius, the
//! unified estimator, the R-normalized estimator and its density form.
//!
//! Two calibration regimes exist and must never be conflated: the
//! adjacency-specific lattice constants diagnose deviations from the
//! undeformed lattice, while the Euclidean constants `beta_m = omega_m`
//! identify the smooth scalar curvature. The calibration is therefore an
//! explicit required parameter everywhere.
//!
//! On complexes whose hop metric carries a stretch relative to `g` (Voronoi
//! meshes), an [`BaselineProfile`] measured on an undeformed complex of the
//! same construction replaces the asymptotic power law, exactly in the
//! spirit of the calibration protocol: reference values for the baseline of
//! the chosen adjacency, with exact counts taking precedence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, CellId, ComplexError};
use crate::lattice::{self, Calibration};
use crate::oracle::{scalar_curvature, DensityField, DomainBox, GridField, OracleError};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("count must be positive, got {0}")]
    NonPositiveCount(f64),
    #[error("radius must be >= 1")]
    ZeroRadius,
    #[error("complex is missing metadata: {0}")]
    MissingMetadata(&'static str),
    #[error("baseline profile does not cover radius {0}")]
    ProfileTooShort(u32),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which diagnostic a record carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `(6/m) (r^m - r_c^m) / r^(m+2)`; vanishes on the calibrated baseline.
    Unified,
    /// `6(m+2) (r^m - r_c^m) / r^(m+2)`; identifies `R_g` with Euclidean
    /// calibration.
    RNormalized,
    /// Algebraically identical closed form `6(m+2)(1 - rho)/r^2` computed
    /// through the local density `rho`.
    DensityForm,
    /// Sphere-gauge excess radius `r - r_c` (perimeter reading).
    ExcessPer,
    /// Ball-gauge excess radius `r - r_c` (area reading).
    ExcessArea,
}

/// One estimator evaluation at a `(center, r)` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub center: u32,
    pub r: u32,
    pub a: f64,
    pub raw_count: f64,
    pub r_c: f64,
    pub rho: f64,
    pub kind: EstimatorKind,
    pub value: f64,
    pub oracle_value: Option<f64>,
    pub abs_error: Option<f64>,
}

/// Admissible count radii at a center: `1..=r_max` stays inside K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibleRange {
    pub r_min: u32,
    pub r_max: u32,
}

impl AdmissibleRange {
    pub fn is_empty(&self) -> bool {
        self.r_max < self.r_min
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.r_min..=self.r_max
    }
}

/// `r_c = (count / beta_m)^(1/m)`: radius reconstructed from an
/// m-dimensional ball count through the asymptotic baseline growth.
pub fn reconstructed_radius(
    count: f64,
    m: usize,
    cal: &Calibration,
) -> Result<f64, EstimatorError> {
    if !(count > 0.0) || !count.is_finite() {
        return Err(EstimatorError::NonPositiveCount(count));
    }
    if m == 1 {
        return Ok(count / cal.alpha1());
    }
    Ok((count / cal.beta()).powf(1.0 / m as f64))
}

/// Sphere-gauge radius `r_c^(1) = C_h(r) / alpha1` from a sphere count.
pub fn sphere_reconstructed_radius(count: f64, cal: &Calibration) -> Result<f64, EstimatorError> {
    if !(count > 0.0) || !count.is_finite() {
        return Err(EstimatorError::NonPositiveCount(count));
    }
    Ok(count / cal.alpha1())
}

/// Sphere-gauge reconstruction against the exact baseline: inverts the
/// sphere polynomial for `m >= 2` (on Z^2 this is identically `C_h / 4`);
/// in 1D, where spheres are two cells at every radius, the exact ball
/// polynomial `2s + 1` is inverted from the ball count instead. Exact
/// baseline counts therefore reconstruct the integer radius bit-exactly in
/// every dimension.
pub fn sphere_gauge_radius(
    m: usize,
    sphere_count: f64,
    ball_count: f64,
) -> Result<f64, EstimatorError> {
    if m == 1 {
        Ok(lattice::invert_baseline_ball(1, ball_count)?)
    } else {
        Ok(lattice::invert_baseline_sphere(m, sphere_count)?)
    }
}

/// `delta_r = r - r_c`: positive means contraction (more cells at fixed
/// count radius than the baseline), negative means dilation.
pub fn excess_radius(r: f64, r_c: f64) -> f64 {
    r - r_c
}

/// Unified small-ball/sphere estimator `(6/m) (r^m - r_c^m) / r^(m+2)`.
pub fn unified_estimator(r: f64, r_c: f64, m: usize) -> f64 {
    (6.0 / m as f64) * (r.powi(m as i32) - r_c.powi(m as i32)) / r.powi(m as i32 + 2)
}

/// R-normalized estimator `6(m+2) (r^m - r_c^m) / r^(m+2)`; with Euclidean
/// calibration it converges to the scalar curvature as `r` shrinks.
pub fn r_normalized_estimator(r: f64, r_c: f64, m: usize) -> f64 {
    6.0 * (m as f64 + 2.0) * (r.powi(m as i32) - r_c.powi(m as i32)) / r.powi(m as i32 + 2)
}

/// Density form: `rho = count / (beta_m r^m)` and
/// `value = 6(m+2)(1 - rho)/r^2`. Exactly equal to
/// [`r_normalized_estimator`] with `r_c = (count/beta_m)^(1/m)`.
pub fn density_estimator(
    count: f64,
    r: f64,
    m: usize,
    beta_m: f64,
) -> Result<(f64, f64), EstimatorError> {
    if !(count > 0.0) || !count.is_finite() {
        return Err(EstimatorError::NonPositiveCount(count));
    }
    if !(r > 0.0) {
        return Err(EstimatorError::ZeroRadius);
    }
    let rho = count / (beta_m * r.powi(m as i32));
    Ok((rho, 6.0 * (m as f64 + 2.0) * (1.0 - rho) / (r * r)))
}

/// Largest admissible count radius about a center:
/// `r_max = floor((dist_g(pos, boundary of K) - C a) / a)`, clamped at 0.
///
/// The boundary distance comes from the eikonal solve when a distance grid
/// is supplied; without one (flat lattices) the Euclidean box distance is
/// used directly.
pub fn admissible_r_max(
    complex: &CellComplex,
    center: CellId,
    k_box: &DomainBox,
    c: f64,
    boundary_dist: Option<&GridField>,
) -> Result<AdmissibleRange, EstimatorError> {
    let pos = complex
        .position(center)
        .ok_or(EstimatorError::MissingMetadata("positions"))?;
    let a = complex
        .mesh_scale()
        .ok_or(EstimatorError::MissingMetadata("mesh_scale"))?;
    let dist = match boundary_dist {
        Some(grid) => grid
            .sample(pos)
            .ok_or(EstimatorError::MissingMetadata("center outside distance grid"))?,
        None => k_box.boundary_distance(pos).max(0.0),
    };
    let r_max = ((dist - c * a) / a).floor().max(0.0) as u32;
    Ok(AdmissibleRange { r_min: 1, r_max })
}

/// Undeformed count-growth profile of a complex family, measured on flat
/// reference complexes of the same construction: for each count radius `r`,
/// the mean equivalent Euclidean radius `s0(r) = (mass(B(r)) / (omega_m
/// h^m))^(1/m)` in units of the mesh scale, pooled over interior centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub dim: usize,
    /// `s0[r]` for `r = 0..=r_max`, in units of the mesh scale.
    pub s0: Vec<f64>,
    /// Number of (center) samples pooled per radius.
    pub samples: usize,
}

impl BaselineProfile {
    /// The identity profile `s0(r) = r` (ideal complexes, pure lattices in
    /// their own gauge).
    pub fn identity(dim: usize, r_max: u32) -> Self {
        BaselineProfile {
            dim,
            s0: (0..=r_max).map(|r| r as f64).collect(),
            samples: 0,
        }
    }

    pub fn r_max(&self) -> u32 {
        self.s0.len() as u32 - 1
    }

    pub fn s0(&self, r: u32) -> Result<f64, EstimatorError> {
        self.s0
            .get(r as usize)
            .copied()
            .ok_or(EstimatorError::ProfileTooShort(r))
    }

    /// Measures the profile from flat reference complexes. Centers are all
    /// cells whose Euclidean distance to the domain boundary exceeds
    /// `r_max * h * 1.6`, so reference balls never feel the boundary.
    pub fn measure(
        complexes: &[&CellComplex],
        boxes: &[&DomainBox],
        r_max: u32,
    ) -> Result<Self, EstimatorError> {
        assert_eq!(complexes.len(), boxes.len());
        let mut dim = 0;
        let mut sums = vec![0.0f64; r_max as usize + 1];
        let mut samples = 0usize;
        for (complex, box_) in complexes.iter().zip(boxes) {
            let h = complex
                .mesh_scale()
                .ok_or(EstimatorError::MissingMetadata("mesh_scale"))?;
            if complex.positions().is_none() {
                return Err(EstimatorError::MissingMetadata("positions"));
            }
            dim = complex.dim();
            let omega = lattice::unit_ball_volume(dim);
            let margin = r_max as f64 * h * 1.6;
            let centers: Vec<CellId> = (0..complex.cell_count() as u32)
                .map(CellId)
                .filter(|&c| box_.boundary_distance(complex.position(c).unwrap()) >= margin)
                .collect();
            if centers.is_empty() {
                continue;
            }
            let profiles: Vec<Vec<f64>> = crate::harness::maybe_par_map(&centers, |&c| {
                complex.ball_mass_profile(c, r_max).expect("valid center")
            });
            for profile in &profiles {
                let volumetric = complex.has_weights();
                for (r, mass) in profile.iter().enumerate() {
                    let mass = if volumetric {
                        *mass
                    } else {
                        mass * h.powi(dim as i32)
                    };
                    sums[r] += (mass / (omega * h.powi(dim as i32))).powf(1.0 / dim as f64);
                }
                samples += 1;
            }
        }
        if samples == 0 {
            return Err(EstimatorError::MissingMetadata("no interior reference centers"));
        }
        let s0 = sums.into_iter().map(|s| s / samples as f64).collect();
        Ok(BaselineProfile { dim, s0, samples })
    }
}

/// Calibration choice for batch estimation.
#[derive(Debug, Clone)]
pub enum CalibrationChoice {
    /// Analytic constants; physical radius is `a * r`.
    Analytic(Calibration),
    /// Matched empirical baseline; physical radius is `a * s0(r)`.
    Empirical(BaselineProfile),
}

/// Batch evaluation parameters.
#[derive(Debug, Clone)]
pub struct EstimateParams {
    pub kind: EstimatorKind,
    pub calibration: CalibrationChoice,
    /// Admissibility constant C of the radius cap.
    pub boundary_c: f64,
}

/// Volumetric ball mass per the measure convention: explicit weights are
/// already volumetric; bare counts are scaled by `a^m`.
fn volumetric_mass(complex: &CellComplex, cardinal_or_mass: f64, a: f64, m: usize) -> f64 {
    if complex.has_weights() {
        cardinal_or_mass
    } else {
        cardinal_or_mass * a.powi(m as i32)
    }
}

/// Runs one estimator over `(center, r)` pairs. Errors are aggregated per
/// record; the batch itself does not abort.
pub fn estimate_field(
    complex: &CellComplex,
    field: Option<&DensityField>,
    params: &EstimateParams,
    centers: &[CellId],
    radii: &[u32],
) -> Vec<Result<EstimateRecord, EstimatorError>> {
    if centers.is_empty() || radii.is_empty() {
        return Vec::new();
    }
    let r_hi = *radii.iter().max().unwrap();
    let outputs: Vec<Vec<Result<EstimateRecord, EstimatorError>>> =
        crate::harness::maybe_par_map(centers, |&center| {
            let mut out = Vec::with_capacity(radii.len());
            match one_center(complex, field, params, center, radii, r_hi) {
                Ok(records) => out.extend(records.into_iter().map(Ok)),
                Err(e) => out.push(Err(e)),
            }
            out
        });
    outputs.into_iter().flatten().collect()
}

fn one_center(
    complex: &CellComplex,
    field: Option<&DensityField>,
    params: &EstimateParams,
    center: CellId,
    radii: &[u32],
    r_hi: u32,
) -> Result<Vec<EstimateRecord>, EstimatorError> {
    let m = match &params.calibration {
        CalibrationChoice::Analytic(cal) => cal.dim(),
        CalibrationChoice::Empirical(profile) => profile.dim,
    };
    let a = complex.mesh_scale().unwrap_or(1.0);
    let sphere_gauge = matches!(params.kind, EstimatorKind::ExcessPer);
    let report = complex.ball_report(center, r_hi, complex.has_weights())?;
    let masses: Vec<f64> = if complex.has_weights() {
        let weights = complex.weights().unwrap();
        let mut shell = vec![0.0f64; r_hi as usize + 1];
        for (c, d) in report.members.as_ref().unwrap() {
            shell[*d as usize] += weights[c.index()];
        }
        let mut acc = 0.0;
        shell
            .iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect()
    } else {
        (0..=r_hi).map(|r| report.ball_count_at(r) as f64).collect()
    };

    let oracle_r = match (field, complex.position(center)) {
        (Some(f), Some(pos)) => Some(scalar_curvature(f, pos)?),
        _ => None,
    };

    let mut records = Vec::with_capacity(radii.len());
    for &r in radii {
        if r == 0 {
            return Err(EstimatorError::ZeroRadius);
        }
        if r > r_hi {
            continue;
        }
        let rec = match params.kind {
            EstimatorKind::ExcessPer => {
                // Sphere gauge: exact inversion of the baseline sphere count.
                let raw = report.sphere_counts[r as usize] as f64;
                if !(raw > 0.0) {
                    return Err(EstimatorError::NonPositiveCount(raw));
                }
                let ball = report.ball_count_at(r) as f64;
                let r_c = sphere_gauge_radius(m, raw, ball)?;
                EstimateRecord {
                    center: center.0,
                    r,
                    a,
                    raw_count: raw,
                    r_c,
                    rho: raw / lattice::baseline_sphere_poly(m, r as f64).max(f64::MIN_POSITIVE),
                    kind: params.kind,
                    value: excess_radius(r as f64, r_c),
                    oracle_value: None,
                    abs_error: None,
                }
            }
            EstimatorKind::ExcessArea => {
                let raw = masses[r as usize];
                let (r_phys, r_c) = radii_for(params, complex, raw, r, a, m)?;
                EstimateRecord {
                    center: center.0,
                    r,
                    a,
                    raw_count: raw,
                    r_c,
                    rho: (r_c / r_phys).powi(m as i32),
                    kind: params.kind,
                    value: excess_radius(r_phys, r_c),
                    oracle_value: None,
                    abs_error: None,
                }
            }
            EstimatorKind::Unified | EstimatorKind::RNormalized | EstimatorKind::DensityForm => {
                let raw = masses[r as usize];
                let (r_phys, r_c) = radii_for(params, complex, raw, r, a, m)?;
                let rho = (r_c / r_phys).powi(m as i32);
                let value = match params.kind {
                    EstimatorKind::Unified => unified_estimator(r_phys, r_c, m),
                    EstimatorKind::RNormalized => r_normalized_estimator(r_phys, r_c, m),
                    EstimatorKind::DensityForm => {
                        6.0 * (m as f64 + 2.0) * (1.0 - rho) / (r_phys * r_phys)
                    }
                    _ => unreachable!(),
                };
                let oracle_value = match params.kind {
                    // Continuum limit of the unified diagnostic is R/(m(m+2)).
                    EstimatorKind::Unified => {
                        oracle_r.map(|r_g| r_g / (m as f64 * (m as f64 + 2.0)))
                    }
                    _ => oracle_r,
                };
                EstimateRecord {
                    center: center.0,
                    r,
                    a,
                    raw_count: raw,
                    r_c,
                    rho,
                    kind: params.kind,
                    value,
                    oracle_value,
                    abs_error: oracle_value.map(|o| (value - o).abs()),
                }
            }
        };
        let _ = sphere_gauge;
        records.push(rec);
    }
    Ok(records)
}

/// Physical radius and reconstructed radius for a ball mass, per regime.
fn radii_for(
    params: &EstimateParams,
    complex: &CellComplex,
    raw: f64,
    r: u32,
    a: f64,
    m: usize,
) -> Result<(f64, f64), EstimatorError> {
    match &params.calibration {
        CalibrationChoice::Analytic(cal) => match cal {
            Calibration::AdjacencySpecific { .. } => {
                // Lattice diagnostics stay in count units with raw cardinality.
                let r_c = reconstructed_radius(raw, m, cal)?;
                Ok((r as f64, r_c))
            }
            Calibration::Euclidean { .. } => {
                let mass = volumetric_mass(complex, raw, a, m);
                let r_c = reconstructed_radius(mass, m, cal)?;
                Ok((a * r as f64, r_c))
            }
        },
        CalibrationChoice::Empirical(profile) => {
            let mass = volumetric_mass(complex, raw, a, m);
            let omega = lattice::unit_ball_volume(m);
            let r_c = (mass / omega).powf(1.0 / m as f64);
            Ok((a * profile.s0(r)?, r_c))
        }
    }
}

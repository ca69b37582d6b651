//! The reproducible experiments: lattice flatness, the conformal-bump
//! convergence study, the 3D sectional/Ricci study, and hypothesis audits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, CellId};
use crate::estimators::{
    estimate_field, sphere_gauge_radius, unified_estimator,
    BaselineProfile, CalibrationChoice, EstimateParams, EstimateRecord, EstimatorError,
    EstimatorKind,
};
use crate::geom;
use crate::harness::config::{CentersPolicy, RunConfig};
use crate::harness::ratefit::{
    envelope_coverage, fit_envelope, fit_loglog_slope, median, LevelStat, RateFit,
};
use crate::lattice::{
    self, baseline_sphere_count, generate_l1_ball_lattice,
    generate_l1_lattice, LatticeError, LatticeSpec,
};
use crate::oracle::{
    bump_phi, scalar_curvature, sectional_curvature_conformal, DensityField, FieldSpec,
    OracleError, ScalarField,
};
use crate::sampler::{
    audit_hypotheses, lloyd_relax, sample_quasi_uniform, voronoi_complex, AuditOptions,
    HypothesisReport, SampleSpec, SamplerError, VoronoiBuild,
};
use crate::directional::{
    build_slice, ricci_scalar_assembly, sectional_detail, PlaneSpec, SliceError, TubeSpec,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Complex(#[from] crate::complex::ComplexError),
    #[error("experiment precondition failed: {0}")]
    Precondition(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Flatness suite (counts only; no field or oracle is ever built here).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimFlatness {
    pub dim: usize,
    /// First (r, expected, got) mismatch of BFS counts vs the closed form.
    pub count_mismatch: Option<(u32, u64, u64)>,
    /// Largest |sphere-gauge unified estimator| over all radii (exact
    /// inversion; must be exactly zero on the baseline).
    pub sphere_gauge_max_abs: f64,
    /// Ball-gauge |unified| at the probe radii.
    pub unified_values: Vec<(u32, f64)>,
    pub unified_decreasing: bool,
    /// |unified(largest probe)| < |unified(smallest probe)| / 8.
    pub unified_decay_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub r_max: u32,
    pub dims: Vec<DimFlatness>,
    pub pass: bool,
}

/// Exact-count and flatness checks on the baseline lattices.
pub fn run_flatness_suite(dims: &[usize], r_max: u32) -> Result<FlatnessReport, HarnessError> {
    let mut out = Vec::new();
    for &m in dims {
        let (complex, origin) = baseline_lattice(m, r_max + 1)?;
        let report = complex.ball_report(origin, r_max, false)?;

        let mut count_mismatch = None;
        for r in 0..=r_max {
            let expected = baseline_sphere_count(m, r as u64)?;
            let got = report.sphere_counts[r as usize];
            if got != expected {
                count_mismatch = Some((r, expected, got));
                break;
            }
        }

        let mut sphere_gauge_max_abs = 0.0f64;
        for r in 1..=r_max {
            let sphere = report.sphere_counts[r as usize] as f64;
            let ball = report.ball_count_at(r) as f64;
            let r_c = sphere_gauge_radius(m, sphere, ball)?;
            sphere_gauge_max_abs =
                sphere_gauge_max_abs.max(unified_estimator(r as f64, r_c, 1).abs());
        }

        let probes: Vec<u32> = [10u32, 20, 40].iter().copied().filter(|&r| r <= r_max).collect();
        let beta = lattice::lattice_beta(m);
        let mut unified_values = Vec::new();
        for &r in &probes {
            let count = report.ball_count_at(r) as f64;
            let r_c = (count / beta).powf(1.0 / m as f64);
            unified_values.push((r, unified_estimator(r as f64, r_c, m)));
        }
        let magnitudes: Vec<f64> = unified_values.iter().map(|(_, v)| v.abs()).collect();
        let unified_decreasing = magnitudes.windows(2).all(|w| w[1] < w[0]);
        let unified_decay_ok = match (magnitudes.first(), magnitudes.last()) {
            (Some(first), Some(last)) if magnitudes.len() >= 2 => {
                if m == 1 {
                    // The 1-D ball gauge has |B| = 2r + 1 exactly linear in
                    // leading order; the diagnostic still decays.
                    *last < *first
                } else {
                    *last < *first / 8.0
                }
            }
            _ => false,
        };
        out.push(DimFlatness {
            dim: m,
            count_mismatch,
            sphere_gauge_max_abs,
            unified_values,
            unified_decreasing,
            unified_decay_ok,
        });
    }
    let pass = out.iter().all(|d| {
        d.count_mismatch.is_none()
            && d.sphere_gauge_max_abs == 0.0
            && d.unified_decreasing
            && d.unified_decay_ok
    });
    Ok(FlatnessReport { r_max, dims: out, pass })
}

/// A lattice guaranteed to contain exact balls up to `radius`: box-shaped
/// while affordable, l1-ball-shaped for the dimension-4 case.
pub fn baseline_lattice(m: usize, radius: u32) -> Result<(CellComplex, CellId), HarnessError> {
    if m <= 3 {
        let spec = LatticeSpec { dimension: m, half_extent: radius };
        let complex = generate_l1_lattice(spec)?;
        let origin = lattice::box_origin(spec);
        Ok((complex, origin))
    } else {
        let complex = generate_l1_ball_lattice(m, radius)?;
        let origin = lattice::ball_origin(m, radius, &complex);
        Ok((complex, origin))
    }
}

// ---------------------------------------------------------------------------
// Conformal-bump convergence experiment.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterStat {
    pub h: f64,
    pub cell: u32,
    pub x: Vec<f64>,
    /// Window-averaged (and optionally spatially smoothed) estimate.
    pub estimate: f64,
    pub oracle: f64,
    pub abs_err: f64,
    pub sign_ok: bool,
    /// |oracle| large enough to escape the O(eps^2) band.
    pub above_band: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpLevel {
    pub h: f64,
    pub cells: usize,
    pub r_policy: u32,
    pub radii: Vec<u32>,
    pub profile_samples: usize,
    #[serde(skip)]
    pub records: Vec<EstimateRecord>,
    pub centers: Vec<CenterStat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpOutcome {
    pub levels: Vec<BumpLevel>,
    pub fit: RateFit,
    /// O(eps^2) exclusion band used by the sign test.
    pub sign_band: f64,
    /// Sign agreement with -lap(phi) among above-band centers.
    pub sign_agreement: f64,
}

impl BumpOutcome {
    pub fn all_records(&self) -> Vec<EstimateRecord> {
        self.levels.iter().flat_map(|l| l.records.iter().cloned()).collect()
    }
}

/// Samples Voronoi complexes across the mesh levels, runs the R-normalized
/// estimator against the matched flat baseline, compares to the analytic
/// scalar curvature, and fits rates.
pub fn run_bump_experiment(config: &RunConfig) -> Result<BumpOutcome, HarnessError> {
    let dim = config.dim;
    let field = DensityField::new(dim, config.field.clone())?;
    let phi = bump_phi(&field);
    let flat_field = DensityField::new(dim, FieldSpec::Constant { c: 0.0 })?;

    let mut levels = Vec::new();
    for (li, &h) in config.sampler.h_levels.iter().enumerate() {
        let (r_policy, radii) = config.radii.radii_for(h);
        let r_hi = *radii.last().unwrap();

        // Flat references for the empirical baseline profile.
        let mut reference_builds: Vec<VoronoiBuild> = Vec::new();
        for k in 0..config.sampler.reference_seeds.max(1) {
            let seed = mix_seed(config.sampler.seed, SEED_TAG_FLAT, li as u64, k as u64);
            reference_builds.push(build_mesh(&flat_field, config, h, seed)?);
        }
        let ref_complexes: Vec<&CellComplex> =
            reference_builds.iter().map(|b| &b.complex).collect();
        let ref_boxes: Vec<&crate::oracle::DomainBox> =
            reference_builds.iter().map(|_| &config.box_).collect();
        let profile = BaselineProfile::measure(&ref_complexes, &ref_boxes, r_hi)?;

        // Deformed complex.
        let seed = mix_seed(config.sampler.seed, SEED_TAG_DEFORMED, li as u64, 0);
        let build = build_mesh(&field, config, h, seed)?;
        let complex = &build.complex;

        let centers = pick_centers(complex, &config.centers, &field, &config.box_, h, r_hi)?;
        if centers.is_empty() {
            return Err(HarnessError::Precondition(format!(
                "no admissible centers at level h = {h}"
            )));
        }

        let params = EstimateParams {
            kind: EstimatorKind::RNormalized,
            calibration: CalibrationChoice::Empirical(profile.clone()),
            boundary_c: 1.0,
        };
        let records: Vec<EstimateRecord> =
            estimate_field(complex, Some(&field), &params, &centers, &radii)
                .into_iter()
                .collect::<Result<_, _>>()?;

        let centers_stats = aggregate_centers(
            complex,
            &records,
            &centers,
            h,
            config.averaging_radius,
            phi.as_ref(),
        );

        levels.push(BumpLevel {
            h,
            cells: complex.cell_count(),
            r_policy,
            radii,
            profile_samples: profile.samples,
            records,
            centers: centers_stats,
        });
    }

    // Rate fit over the per-level medians.
    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let meds: Vec<f64> = levels
        .iter()
        .map(|l| median(&l.centers.iter().map(|c| c.abs_err).collect::<Vec<_>>()))
        .collect();
    let (slope, intercept, residuals) = fit_loglog_slope(&hs, &meds);

    // Envelope fitted at the coarsest level, coverage on the finer ones.
    let env_records = |level: &BumpLevel| -> Vec<(f64, f64, f64)> {
        level
            .records
            .iter()
            .filter_map(|r| {
                let r_phys = r.a * r.r as f64;
                r.abs_error.map(|e| (r.a / r_phys, r_phys, e))
            })
            .collect()
    };
    let coarse = env_records(&levels[0]);
    let (c1, c2) = fit_envelope(&coarse);
    let finer: Vec<(f64, f64, f64)> = levels[1..].iter().flat_map(|l| env_records(l)).collect();
    let coverage = envelope_coverage(&finer, c1, c2, 1.5);

    let level_stats: Vec<LevelStat> = levels
        .iter()
        .map(|l| {
            let errs: Vec<f64> = l.centers.iter().map(|c| c.abs_err).collect();
            // Per-radius medians locate the empirical argmin.
            let mut argmin_r = l.r_policy;
            let mut best = f64::INFINITY;
            for &r in &l.radii {
                let per_r: Vec<f64> = l
                    .records
                    .iter()
                    .filter(|rec| rec.r == r)
                    .filter_map(|rec| rec.abs_error)
                    .collect();
                let med = median(&per_r);
                if med.is_finite() && med < best {
                    best = med;
                    argmin_r = r;
                }
            }
            LevelStat {
                h: l.h,
                cells: l.cells,
                r_policy: l.r_policy,
                median_err: median(&errs),
                max_err: errs.iter().copied().fold(0.0, f64::max),
                argmin_r,
                median_err_at_argmin: best,
            }
        })
        .collect();

    // Sign test among centers whose oracle value escapes the O(eps^2) band.
    let sign_band = sign_band(&field, &levels);
    let mut above = 0usize;
    let mut agree = 0usize;
    let mut levels = levels;
    for level in &mut levels {
        for c in &mut level.centers {
            c.above_band = c.oracle.abs() > sign_band;
            if c.above_band {
                above += 1;
                if c.sign_ok {
                    agree += 1;
                }
            }
        }
    }
    let sign_agreement = if above > 0 { agree as f64 / above as f64 } else { 1.0 };

    Ok(BumpOutcome {
        levels,
        fit: RateFit {
            levels: level_stats,
            slope,
            intercept,
            residuals,
            c1,
            c2,
            envelope_coverage: coverage,
        },
        sign_band,
        sign_agreement,
    })
}

/// The O(eps^2) exclusion band of the sign test: three times the largest
/// gap between the exact scalar curvature and its first-order form over the
/// probed centers.
fn sign_band(field: &DensityField, levels: &[BumpLevel]) -> f64 {
    let m = field.dim() as f64;
    let Some(phi) = bump_phi(field) else { return 0.0 };
    let eps = match field.spec() {
        FieldSpec::GaussianBump { eps, .. } => *eps,
        _ => return 0.0,
    };
    let mut band = 0.0f64;
    for level in levels {
        for c in &level.centers {
            let linear = -(2.0 * (m - 1.0) / m) * eps * phi.laplacian(&c.x);
            band = band.max((c.oracle - linear).abs());
        }
    }
    3.0 * band
}

const SEED_TAG_FLAT: u64 = 0xF1A7;
const SEED_TAG_DEFORMED: u64 = 0xDEF0;

/// Sample, relax, tessellate: the standard mesh pipeline of the harness.
fn build_mesh(
    field: &DensityField,
    config: &RunConfig,
    h: f64,
    seed: u64,
) -> Result<VoronoiBuild, HarnessError> {
    let spec = SampleSpec { box_: config.box_.clone(), h, seed, qu: config.qu() };
    let mut points = sample_quasi_uniform(field, &spec)?;
    if config.sampler.lloyd > 0 {
        points = lloyd_relax(&points, field, &config.box_, config.sampler.lloyd)?;
    }
    Ok(voronoi_complex(&points, field, &config.box_)?)
}

fn mix_seed(seed: u64, tag: u64, level: u64, rep: u64) -> u64 {
    let mut x = seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15);
    x = x.wrapping_add(level.wrapping_mul(0xBF58476D1CE4E5B9));
    x = x.wrapping_add(rep.wrapping_mul(0x94D049BB133111EB));
    x ^= x >> 31;
    x
}

/// Hop metrics stretch g-distance by a law constant; this conservative
/// factor sizes boundary margins so intrinsic balls stay inside the box.
const HOP_STRETCH_MARGIN: f64 = 1.45;

/// Maps the probe-grid policy to concrete interior cells. Cells whose
/// intrinsic ball of radius `r_hi` could touch the box walls (with the hop
/// stretch accounted for) are dropped.
fn pick_centers(
    complex: &CellComplex,
    policy: &CentersPolicy,
    field: &DensityField,
    box_: &crate::oracle::DomainBox,
    h: f64,
    r_hi: u32,
) -> Result<Vec<CellId>, HarnessError> {
    match policy {
        CentersPolicy::Cells { ids } => Ok(ids.iter().map(|&i| CellId(i)).collect()),
        CentersPolicy::Grid { per_axis, extent } => {
            let dim = complex.dim();
            let center = field.radial_center().unwrap_or([0.0; geom::MAXD]);
            // Probes on a uniform grid around the field center.
            let mut probes: Vec<Vec<f64>> = Vec::new();
            let n = (*per_axis).max(1);
            let total = n.pow(dim as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut p = Vec::with_capacity(dim);
                for d in 0..dim {
                    let i = rem % n;
                    rem /= n;
                    let t = if n == 1 {
                        0.0
                    } else {
                        -1.0 + 2.0 * i as f64 / (n - 1) as f64
                    };
                    p.push(center[d] + t * extent);
                }
                probes.push(p);
            }
            let margin = (r_hi as f64 + 1.0) * HOP_STRETCH_MARGIN * h;
            let mut out: Vec<CellId> = Vec::new();
            for p in &probes {
                let mut best = f64::INFINITY;
                let mut best_cell = None;
                for i in 0..complex.cell_count() as u32 {
                    let q = complex.position(CellId(i)).unwrap();
                    let d = geom::dist(p, q, dim);
                    if d < best {
                        best = d;
                        best_cell = Some(CellId(i));
                    }
                }
                if let Some(c) = best_cell {
                    let pos = complex.position(c).unwrap();
                    if box_.boundary_distance(pos) >= margin && !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Window-averages each center's estimates over the swept radii and applies
/// optional spatial smoothing over the probe neighbourhood.
fn aggregate_centers(
    complex: &CellComplex,
    records: &[EstimateRecord],
    centers: &[CellId],
    h: f64,
    averaging_radius: f64,
    phi: Option<&crate::oracle::RadialScalar>,
) -> Vec<CenterStat> {
    let dim = complex.dim();
    let mut raw: Vec<(CellId, f64, f64)> = Vec::new();
    for &c in centers {
        let vals: Vec<f64> = records
            .iter()
            .filter(|r| r.center == c.0)
            .map(|r| r.value)
            .collect();
        if vals.is_empty() {
            continue;
        }
        let estimate = vals.iter().sum::<f64>() / vals.len() as f64;
        let oracle = records
            .iter()
            .find(|r| r.center == c.0)
            .and_then(|r| r.oracle_value)
            .unwrap_or(f64::NAN);
        raw.push((c, estimate, oracle));
    }
    // Spatial smoothing over nearby centers.
    let smooth_radius = averaging_radius * estimate_probe_spacing(complex, &raw, dim);
    let smoothed: Vec<f64> = raw
        .iter()
        .map(|(c, _, _)| {
            let p = complex.position(*c).unwrap();
            let mut acc = 0.0;
            let mut count = 0.0f64;
            for (c2, est2, _) in &raw {
                let q = complex.position(*c2).unwrap();
                if averaging_radius <= 0.0 {
                    if c2 == c {
                        acc += est2;
                        count += 1.0;
                    }
                } else if geom::dist(p, q, dim) <= smooth_radius {
                    acc += est2;
                    count += 1.0;
                }
            }
            acc / count.max(1.0)
        })
        .collect();
    raw.iter()
        .zip(smoothed)
        .map(|((c, _, oracle), estimate)| {
            let x: Vec<f64> = complex.position(*c).unwrap().to_vec();
            let sign_ok = match phi {
                Some(phi) => {
                    let target = -phi.laplacian(&x);
                    estimate.signum() == target.signum()
                }
                None => estimate.abs() <= 1.0,
            };
            CenterStat {
                h,
                cell: c.0,
                x,
                estimate,
                oracle: *oracle,
                abs_err: (estimate - oracle).abs(),
                sign_ok,
                above_band: false,
            }
        })
        .collect()
}

/// Typical spacing between probe centers (median nearest-neighbour
/// distance), the unit of the spatial smoothing radius.
fn estimate_probe_spacing(
    complex: &CellComplex,
    raw: &[(CellId, f64, f64)],
    dim: usize,
) -> f64 {
    let mut nn = Vec::new();
    for (c, _, _) in raw {
        let p = complex.position(*c).unwrap();
        let mut best = f64::INFINITY;
        for (c2, _, _) in raw {
            if c2 != c {
                let d = geom::dist(p, complex.position(*c2).unwrap(), dim);
                if d < best {
                    best = d;
                }
            }
        }
        if best.is_finite() {
            nn.push(best);
        }
    }
    let m = median(&nn);
    if m.is_finite() {
        m * 1.05
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Sectional / Ricci experiment (3D).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionalRecord {
    pub h: f64,
    pub center: u32,
    pub plane: String,
    pub r: u32,
    pub tube_cells: usize,
    /// Raw Eq.-literal estimate in count units.
    pub value_count_units: f64,
    /// Matched-baseline calibrated estimate in physical units.
    pub value: f64,
    pub oracle: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionalCenter {
    pub h: f64,
    pub cell: u32,
    /// Assembled scalar from the three axis planes (calibrated, physical).
    pub scalar_assembled: f64,
    /// Volumetric R-normalized estimate at the same center.
    pub scalar_volumetric: f64,
    pub scalar_oracle: f64,
    /// Fitted per-center tolerances of the two routes.
    pub tol_assembled: f64,
    pub tol_volumetric: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionalOutcome {
    pub flat_records: Vec<SectionalRecord>,
    pub bump_records: Vec<SectionalRecord>,
    pub centers: Vec<SectionalCenter>,
    /// Envelope constant fitted on flat records: |K| <= C (a/r + r).
    pub flat_envelope_c: f64,
    pub flat_within_envelope: bool,
    /// Envelope constant fitted on bump records vs the oracle.
    pub bump_envelope_c: f64,
    pub bump_envelope_coverage: f64,
    /// Median oracle/raw ratio: flags the Eq.-literal normalization

    /// (the displayed coefficient reads K/4; reported, never rescaled).
    pub normalization_ratio: f64,
    pub agreement_fraction: f64,
}

/// Axis and polarized planes with stable labels.
fn sectional_planes() -> Vec<(String, PlaneSpec, [usize; 2])> {
    vec![
        // Axis planes: K(e_i ^ e_j) with 0-based axes.
        ("axis12".into(), PlaneSpec::Axes(0, 1), [0, 1]),
        ("axis13".into(), PlaneSpec::Axes(0, 2), [0, 2]),
        ("axis23".into(), PlaneSpec::Axes(1, 2), [1, 2]),
        // Polarized planes xi_ij = (sigma_i - sigma_j)/sqrt(2).
        ("polar23".into(), PlaneSpec::Polarized(1, 2), [1, 2]),
        ("polar13".into(), PlaneSpec::Polarized(0, 2), [0, 2]),
        ("polar12".into(), PlaneSpec::Polarized(0, 1), [0, 1]),
    ]
}

/// Oracle sectional value of a plane spec at a point (analytic conformal
/// formula; for polarized planes the realized spanning pair is used).
fn plane_oracle(
    field: &DensityField,
    x: &[f64],
    plane: &PlaneSpec,
) -> Result<f64, HarnessError> {
    let pair: (geom::Vect, geom::Vect) = match plane {
        PlaneSpec::Axes(i, j) => {
            let mut v = [0.0; geom::MAXD];
            let mut w = [0.0; geom::MAXD];
            v[*i] = 1.0;
            w[*j] = 1.0;
            (v, w)
        }
        PlaneSpec::Polarized(i, j) => {
            let k = 3 - i - j;
            let mut v = [0.0; geom::MAXD];
            v[*i] = 1.0 / std::f64::consts::SQRT_2;
            v[*j] = 1.0 / std::f64::consts::SQRT_2;
            let mut w = [0.0; geom::MAXD];
            w[k] = 1.0;
            (v, w)
        }
        PlaneSpec::Vectors(v, w) => (*v, *w),
    };
    Ok(sectional_curvature_conformal(field, x, &pair.0, &pair.1)?)
}

/// Runs the 3D sectional study: flat and bump complexes, six planes per
/// center, operator-grade estimates, Ricci/scalar assembly, and the
/// volumetric cross-check.
pub fn run_sectional_experiment(config: &RunConfig) -> Result<SectionalOutcome, HarnessError> {
    if config.dim != 3 {
        return Err(HarnessError::Precondition("sectional experiment needs dim = 3".into()));
    }
    let field = DensityField::new(3, config.field.clone())?;
    let flat_field = DensityField::new(3, FieldSpec::Constant { c: 0.0 })?;
    let tau = config.sectional.tau.unwrap_or(config.qu().cap);
    let h = config.sampler.h_levels[0];
    let (r_policy, radii) = config.radii.radii_for(h);
    let r_hi = *radii.last().unwrap();

    // Flat complex: reference for tube + ball baselines and the flat suite.
    let flat_build = build_mesh(
        &flat_field,
        config,
        h,
        mix_seed(config.sampler.seed, SEED_TAG_FLAT, 0, 0),
    )?;

    // Bump complex.
    let bump_build = build_mesh(
        &field,
        config,
        h,
        mix_seed(config.sampler.seed, SEED_TAG_DEFORMED, 0, 0),
    )?;

    let flat_centers =
        pick_centers(&flat_build.complex, &config.centers, &flat_field, &config.box_, h, r_hi)?;
    let bump_centers =
        pick_centers(&bump_build.complex, &config.centers, &field, &config.box_, h, r_hi)?;

    // Tube baseline profile t0(r): median R_c/a on the flat complex.
    let planes = sectional_planes();
    let flat_details = tube_sweep(
        &flat_build.complex,
        &flat_field,
        &flat_centers,
        &planes,
        &radii,
        tau,
        h,
        config,
    )?;
    let mut t0 = vec![f64::NAN; r_hi as usize + 1];
    for &r in &radii {
        let ratios: Vec<f64> = flat_details
            .iter()
            .filter(|d| d.2 == r)
            .map(|d| d.3.slice_radius / h)
            .collect();
        t0[r as usize] = median(&ratios);
    }

    // Flat records: oracle 0, calibrated values centered by the baseline.
    let mut flat_records = Vec::new();
    for (center, plane_idx, r, detail) in &flat_details {
        let value = calibrated_sectional(detail.slice_radius, t0[*r as usize], h);
        flat_records.push(SectionalRecord {
            h,
            center: center.0,
            plane: planes[*plane_idx].0.clone(),
            r: *r,
            tube_cells: detail.tube_cells,
            value_count_units: detail.value,
            value,
            oracle: 0.0,
            abs_error: value.abs(),
        });
    }

    // Bump records.
    let bump_details = tube_sweep(
        &bump_build.complex,
        &field,
        &bump_centers,
        &planes,
        &radii,
        tau,
        h,
        config,
    )?;
    let mut bump_records = Vec::new();
    for (center, plane_idx, r, detail) in &bump_details {
        let x = bump_build.complex.position(*center).unwrap();
        let oracle = plane_oracle(&field, x, &planes[*plane_idx].1)?;
        let value = calibrated_sectional(detail.slice_radius, t0[*r as usize], h);
        bump_records.push(SectionalRecord {
            h,
            center: center.0,
            plane: planes[*plane_idx].0.clone(),
            r: *r,
            tube_cells: detail.tube_cells,
            value_count_units: detail.value,
            value,
            oracle,
            abs_error: (value - oracle).abs(),
        });
    }

    // Envelopes.
    let env = |recs: &[SectionalRecord]| -> Vec<(f64, f64, f64)> {
        recs.iter()
            .map(|r| {
                let r_phys = h * r.r as f64;
                (h / r_phys + r_phys, 0.0, r.abs_error)
            })
            .collect()
    };
    let fit_c = |recs: &[SectionalRecord]| -> f64 {
        let data = env(recs);
        let (c, _) = fit_envelope(&data.iter().map(|&(x, _, y)| (x, 0.0, y)).collect::<Vec<_>>());
        c
    };
    let flat_envelope_c = fit_c(&flat_records);
    let flat_within_envelope = flat_records.iter().all(|r| {
        let r_phys = h * r.r as f64;
        r.abs_error <= 1.5 * flat_envelope_c * (h / r_phys + r_phys) + 1e-12
    });
    let bump_envelope_c = fit_c(&bump_records);
    let bump_cov = bump_records
        .iter()
        .filter(|r| {
            let r_phys = h * r.r as f64;
            r.abs_error <= 1.5 * bump_envelope_c * (h / r_phys + r_phys)
        })
        .count() as f64
        / bump_records.len().max(1) as f64;

    // Normalization flag: oracle vs the Eq.-literal value in physical units.
    let ratios: Vec<f64> = bump_records
        .iter()
        .filter(|r| r.oracle.abs() > 0.05 && r.value_count_units.abs() > 1e-12)
        .map(|r| r.oracle / (r.value_count_units / (h * h)))
        .collect();
    let normalization_ratio = median(&ratios);

    // Per-center assembly vs volumetric cross-check on the bump complex.
    let ball_profile = BaselineProfile::measure(
        &[&flat_build.complex],
        &[&config.box_],
        r_hi,
    )?;
    let params = EstimateParams {
        kind: EstimatorKind::RNormalized,
        calibration: CalibrationChoice::Empirical(ball_profile),
        boundary_c: 1.0,
    };
    let vol_records: Vec<EstimateRecord> =
        estimate_field(&bump_build.complex, Some(&field), &params, &bump_centers, &radii)
            .into_iter()
            .collect::<Result<_, _>>()?;

    let r_star_phys = h * r_policy as f64;
    let tol_shape = h / r_star_phys + r_star_phys;
    let mut centers_out = Vec::new();
    for &center in &bump_centers {
        let x = bump_build.complex.position(center).unwrap();
        let axis_mean = |label: &str| -> f64 {
            let vals: Vec<f64> = bump_records
                .iter()
                .filter(|r| r.center == center.0 && r.plane == label)
                .map(|r| r.value)
                .collect();
            vals.iter().sum::<f64>() / vals.len().max(1) as f64
        };
        let k12 = axis_mean("axis12");
        let k13 = axis_mean("axis13");
        let k23 = axis_mean("axis23");
        let assembled = ricci_scalar_assembly(k12, k13, k23).scalar;
        let vol_vals: Vec<f64> = vol_records
            .iter()
            .filter(|r| r.center == center.0)
            .map(|r| r.value)
            .collect();
        if vol_vals.is_empty() {
            continue;
        }
        let volumetric = vol_vals.iter().sum::<f64>() / vol_vals.len() as f64;
        let oracle = scalar_curvature(&field, x)?;
        // Individual fitted tolerances: the per-estimator envelope at the
        // policy radius. The assembly sums three sectional estimates (each
        // doubled), hence the factor 6 on the sectional envelope.
        let tol_assembled = 6.0 * bump_envelope_c * tol_shape;
        let vol_errs: Vec<(f64, f64, f64)> = vol_records
            .iter()
            .filter_map(|r| {
                let r_phys = r.a * r.r as f64;
                r.abs_error.map(|e| (r.a / r_phys + r_phys, 0.0, e))
            })
            .collect();
        let (vol_c, _) = fit_envelope(&vol_errs);
        let tol_volumetric = vol_c * tol_shape;
        let agree = (assembled - volumetric).abs() <= 1.5 * (tol_assembled + tol_volumetric);
        centers_out.push(SectionalCenter {
            h,
            cell: center.0,
            scalar_assembled: assembled,
            scalar_volumetric: volumetric,
            scalar_oracle: oracle,
            tol_assembled,
            tol_volumetric,
            agree,
        });
    }
    let agreement_fraction = centers_out.iter().filter(|c| c.agree).count() as f64
        / centers_out.len().max(1) as f64;

    Ok(SectionalOutcome {
        flat_records,
        bump_records,
        centers: centers_out,
        flat_envelope_c,
        flat_within_envelope,
        bump_envelope_c,
        bump_envelope_coverage: bump_cov,
        normalization_ratio,
        agreement_fraction,
    })
}

/// Calibrated sectional value in physical units:
/// `3 (rho0^2 - R_c^2) / rho0^4` with `rho0 = a t0(r)` the matched flat
/// baseline. Reduces to the Eq.-literal count form divided by `a^2` when
/// `t0(r) = r`.
fn calibrated_sectional(slice_radius: f64, t0_r: f64, a: f64) -> f64 {
    let rho0 = a * t0_r;
    3.0 * (rho0 * rho0 - slice_radius * slice_radius) / rho0.powi(4)
}

type TubeSweepRow = (CellId, usize, u32, crate::directional::SectionalDetail);

/// All (center, plane, radius) tube measurements on one complex.
#[allow(clippy::too_many_arguments)]
fn tube_sweep(
    complex: &CellComplex,
    field: &DensityField,
    centers: &[CellId],
    planes: &[(String, PlaneSpec, [usize; 2])],
    radii: &[u32],
    tau: f64,
    h: f64,
    config: &RunConfig,
) -> Result<Vec<TubeSweepRow>, HarnessError> {
    let r_hi = *radii.iter().max().unwrap();
    let extent = config.sectional.extent_factor * h * r_hi as f64;
    let slice_step = (h / 2.0).min(extent / 24.0);
    let jobs: Vec<(usize, usize)> = (0..centers.len())
        .flat_map(|c| (0..planes.len()).map(move |p| (c, p)))
        .collect();
    let slice_box = config.box_.clone();
    let rows: Vec<Result<Vec<TubeSweepRow>, HarnessError>> =
        crate::harness::maybe_par_map(&jobs, |&(ci, pi)| {
            let center = centers[ci];
            let base = complex.position(center).unwrap();
            let slice = build_slice(
                field,
                base,
                &planes[pi].1,
                extent,
                slice_step,
                &slice_box,
                config.sectional.n_theta,
            )?;
            let mut out = Vec::new();
            for &r in radii {
                match sectional_detail(complex, center, &slice, &TubeSpec { tau, r, a: h }, field)
                {
                    Ok(detail) => out.push((center, pi, r, detail)),
                    Err(SliceError::EmptyTube) => continue,
                    Err(e) => return Err(HarnessError::from(e)),
                }
            }
            Ok(out)
        });
    let mut flat = Vec::new();
    for row in rows {
        flat.extend(row?);
    }
    Ok(flat)
}

// ---------------------------------------------------------------------------
// Hypothesis audit across mesh levels.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisSeries {
    pub levels: Vec<(f64, HypothesisReport)>,
    /// Each constant within a factor 2 across consecutive levels.
    pub stable: bool,
}

/// Builds Voronoi complexes at each level and audits (H1)-(H5); flags
/// whether the constants are h-stable within a factor of two.
pub fn run_hypothesis_audit(config: &RunConfig) -> Result<HypothesisSeries, HarnessError> {
    if config.sampler.h_levels.len() < 2 {
        return Err(HarnessError::Precondition("audit needs at least 2 mesh levels".into()));
    }
    let field = DensityField::new(config.dim, config.field.clone())?;
    let qu = config.qu();
    // One count-radius window for every level, sized so the coarsest level
    // still has deep-interior audit centers; constants are then comparable
    // across levels.
    let k_box = config.box_.interior();
    let k_side = (0..config.dim)
        .map(|d| k_box.upper[d] - k_box.lower[d])
        .fold(f64::INFINITY, f64::min);
    let h_coarse = config.sampler.h_levels.iter().copied().fold(0.0, f64::max);
    let r_aud = (((k_side / 3.0 / h_coarse) - 2.5) / 1.45).floor().clamp(2.0, 6.0) as u32;
    let mut levels = Vec::new();
    for (li, &h) in config.sampler.h_levels.iter().enumerate() {
        let seed = mix_seed(config.sampler.seed, 0xA0D1, li as u64, 0);
        let build = build_mesh(&field, config, h, seed)?;
        let k_box = config.box_.interior();
        let opts = AuditOptions { centers: 3, r_max: r_aud, grid_delta: h / 3.0 };
        let report = audit_hypotheses(
            &build.complex,
            Some(&build.cell_diameters),
            &field,
            &k_box,
            &opts,
        )?;
        levels.push((h, report));
    }
    let stable = levels.windows(2).all(|w| {
        let (a, b) = (&w[0].1, &w[1].1);
        let within = |x: f64, y: f64| {
            if x == 0.0 && y == 0.0 {
                true
            } else {
                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                lo > 0.0 && hi / lo <= 2.0
            }
        };
        within(a.max_degree as f64, b.max_degree as f64)
            && within(a.diam_ratio_range.1, b.diam_ratio_range.1)
            && within(a.realization_density, b.realization_density)
            && within(a.weight_ratio_range.1, b.weight_ratio_range.1)
            && within(
                a.ball_inclusion_constants.1.max(0.1),
                b.ball_inclusion_constants.1.max(0.1),
            )
    });
    Ok(HypothesisSeries { levels, stable })
}

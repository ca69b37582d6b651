//! Command-line driver: lattice generation, sampling, estimation sweeps,
//! sectional studies, hypothesis audits, and reporting.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use countcurv::complex::{load_ccx, save_ccx, CcxFormat, CellId};
use countcurv::estimators::{
    admissible_r_max, estimate_field, BaselineProfile, CalibrationChoice, EstimateParams,
    EstimatorKind,
};
use countcurv::harness::{
    self, report, run_bump_experiment, run_flatness_suite, run_hypothesis_audit,
    run_sectional_experiment, write_csv, write_json, ExperimentKind, RunConfig,
};
use countcurv::lattice::{generate_l1_lattice, Calibration, LatticeSpec};
use countcurv::oracle::{boundary_distance, DensityField, DomainBox};

#[derive(Parser)]
#[command(name = "countcurv", version, about = "Count-metric curvature toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a baseline l1 lattice complex.
    Generate(GenerateArgs),
    /// Sample a quasi-uniform point set and build its Voronoi complex.
    Sample(SampleArgs),
    /// Run one estimator over a complex and write the records CSV.
    Estimate(EstimateArgs),
    /// Tube-restricted sectional estimates at one base cell.
    Sectional(SectionalArgs),
    /// Audit the mesh hypotheses (H1)-(H5) across mesh levels.
    Audit(ConfigArgs),
    /// Run the experiment named in the config end to end.
    Sweep(SweepArgs),
    /// Rebuild summary and gnuplot files from a records CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Lattice family (only `l1` is built in).
    #[arg(long, default_value = "l1")]
    lattice: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    extent: u32,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for CcxFormat {
    fn from(f: FormatArg) -> CcxFormat {
        match f {
            FormatArg::Text => CcxFormat::Text,
            FormatArg::Binary => CcxFormat::Binary,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    /// Run config JSON (field, box, sampler; the first h level is used).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    format: FormatArg,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    complex: PathBuf,
    /// Field spec JSON file (enables oracle columns).
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// `euclidean`, `adjacency`, or `empirical:<reference.ccx>`.
    #[arg(long)]
    calibration: String,
    /// `auto` (admissible interior cells) or comma-separated ids.
    #[arg(long, default_value = "auto")]
    centers: String,
    /// Count radii `lo:hi[:step]`.
    #[arg(long)]
    radii: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Unified,
    RNormalized,
    DensityForm,
    ExcessPer,
    ExcessArea,
}

impl From<KindArg> for EstimatorKind {
    fn from(k: KindArg) -> EstimatorKind {
        match k {
            KindArg::Unified => EstimatorKind::Unified,
            KindArg::RNormalized => EstimatorKind::RNormalized,
            KindArg::DensityForm => EstimatorKind::DensityForm,
            KindArg::ExcessPer => EstimatorKind::ExcessPer,
            KindArg::ExcessArea => EstimatorKind::ExcessArea,
        }
    }
}

#[derive(Args)]
struct SectionalArgs {
    #[arg(long)]
    complex: PathBuf,
    #[arg(long)]
    field: PathBuf,
    /// Base point `x,y,z`; the nearest cell becomes the center.
    #[arg(long)]
    base: String,
    /// `axes`, `polarized`, or `axes+polarized`.
    #[arg(long, default_value = "axes+polarized")]
    planes: String,
    #[arg(long, default_value_t = 1.5)]
    tau: f64,
    #[arg(long)]
    radii: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Generate(args) => {
            if args.lattice != "l1" {
                return Err(format!("unknown lattice family {:?}", args.lattice).into());
            }
            let complex = generate_l1_lattice(LatticeSpec {
                dimension: args.dim,
                half_extent: args.extent,
            })?;
            save_ccx(&complex, &args.out, args.format.into())?;
            println!(
                "generated l1 lattice: dim {}, extent {}, {} cells -> {}",
                args.dim,
                args.extent,
                complex.cell_count(),
                args.out.display()
            );
        }
        Command::Sample(args) => {
            let config = RunConfig::from_file(&args.config)?;
            let field = DensityField::new(config.dim, config.field.clone())?;
            let h = *config
                .sampler
                .h_levels
                .first()
                .ok_or("config has no mesh levels")?;
            let spec = countcurv::sampler::SampleSpec {
                box_: config.box_.clone(),
                h,
                seed: config.sampler.seed,
                qu: config.qu(),
            };
            let mut points = countcurv::sampler::sample_quasi_uniform(&field, &spec)?;
            if config.sampler.lloyd > 0 {
                points = countcurv::sampler::lloyd_relax(
                    &points,
                    &field,
                    &config.box_,
                    config.sampler.lloyd,
                )?;
            }
            let build = countcurv::sampler::voronoi_complex(&points, &field, &config.box_)?;
            save_ccx(&build.complex, &args.out, args.format.into())?;
            println!(
                "sampled {} sites at h = {h} -> {}",
                points.len(),
                args.out.display()
            );
        }
        Command::Estimate(args) => {
            let complex = load_ccx(&args.complex)?;
            let dim = if complex.dim() > 0 { complex.dim() } else { 2 };
            let field = match &args.field {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    Some(DensityField::from_json(dim, &text)?)
                }
                None => None,
            };
            let calibration = parse_calibration(&args.calibration, dim, &args.radii)?;
            let params = EstimateParams {
                kind: args.kind.into(),
                calibration,
                boundary_c: 1.0,
            };
            let radii = parse_radii(&args.radii)?;
            let centers = parse_centers(&args.centers, &complex, &radii)?;
            let records: Result<Vec<_>, _> =
                estimate_field(&complex, field.as_ref(), &params, &centers, &radii)
                    .into_iter()
                    .collect();
            let records = records?;
            write_csv(&args.out, &records)?;
            println!(
                "estimated {} records over {} centers -> {}",
                records.len(),
                centers.len(),
                args.out.display()
            );
        }
        Command::Sectional(args) => {
            let complex = load_ccx(&args.complex)?;
            let text = std::fs::read_to_string(&args.field)?;
            let field = DensityField::from_json(3, &text)?;
            let base: Vec<f64> = args
                .base
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()?;
            if base.len() != 3 || complex.dim() != 3 {
                return Err("sectional needs a 3D complex and base x,y,z".into());
            }
            let radii = parse_radii(&args.radii)?;
            let a = complex.mesh_scale().ok_or("complex has no mesh scale")?;
            // Nearest cell to the base point.
            let mut center = CellId(0);
            let mut best = f64::INFINITY;
            for i in 0..complex.cell_count() as u32 {
                let p = complex.position(CellId(i)).ok_or("complex has no positions")?;
                let d: f64 = p.iter().zip(&base).map(|(x, y)| (x - y) * (x - y)).sum();
                if d < best {
                    best = d;
                    center = CellId(i);
                }
            }
            let planes = parse_planes(&args.planes)?;
            let r_hi = *radii.iter().max().ok_or("empty radii")?;
            let extent = 1.8 * a * r_hi as f64;
            let pos = complex.position(center).unwrap().to_vec();
            let lower: Vec<f64> = pos.iter().map(|x| x - 2.0 * extent).collect();
            let upper: Vec<f64> = pos.iter().map(|x| x + 2.0 * extent).collect();
            let slice_box = DomainBox::new(lower, upper, extent / 2.0)?;
            let mut out = std::fs::File::create(&args.out)?;
            use std::io::Write;
            writeln!(out, "plane,r,tube_cells,value,slice_radius")?;
            for (label, plane) in &planes {
                let slice = countcurv::directional::build_slice(
                    &field,
                    &pos,
                    plane,
                    extent,
                    (a / 2.0).min(extent / 24.0),
                    &slice_box,
                    48,
                )?;
                for &r in &radii {
                    let spec = countcurv::directional::TubeSpec { tau: args.tau, r, a };
                    match countcurv::directional::sectional_detail(
                        &complex, center, &slice, &spec, &field,
                    ) {
                        Ok(d) => writeln!(
                            out,
                            "{label},{r},{},{},{}",
                            d.tube_cells, d.value, d.slice_radius
                        )?,
                        Err(countcurv::directional::SliceError::EmptyTube) => continue,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            println!("sectional sweep at cell {center} -> {}", args.out.display());
        }
        Command::Audit(args) => {
            let config = RunConfig::from_file(&args.config)?;
            let series = run_hypothesis_audit(&config)?;
            write_json(&args.out, &series)?;
            println!(
                "audited {} levels (stable: {}) -> {}",
                series.levels.len(),
                series.stable,
                args.out.display()
            );
        }
        Command::Sweep(args) => {
            let config = RunConfig::from_file(&args.config)?;
            std::fs::create_dir_all(&args.out_dir)?;
            match config.experiment {
                ExperimentKind::Flatness => {
                    let report = run_flatness_suite(&[1, 2, 3, 4], 50)?;
                    write_json(args.out_dir.join("flatness.json"), &report)?;
                    println!("flatness suite pass: {}", report.pass);
                }
                ExperimentKind::Bump => {
                    let outcome = run_bump_experiment(&config)?;
                    let records = outcome.all_records();
                    report(&records, &outcome.fit, &args.out_dir, "bump")?;
                    write_json(args.out_dir.join("bump_outcome.json"), &outcome)?;
                    println!(
                        "bump sweep: slope {:.3}, sign agreement {:.3}",
                        outcome.fit.slope, outcome.sign_agreement
                    );
                }
                ExperimentKind::Sectional => {
                    let outcome = run_sectional_experiment(&config)?;
                    write_json(args.out_dir.join("sectional_outcome.json"), &outcome)?;
                    println!(
                        "sectional sweep: normalization ratio {:.3}, agreement {:.3}",
                        outcome.normalization_ratio, outcome.agreement_fraction
                    );
                }
                ExperimentKind::Audit => {
                    let series = run_hypothesis_audit(&config)?;
                    write_json(args.out_dir.join("hypotheses.json"), &series)?;
                    println!("audit stable: {}", series.stable);
                }
            }
        }
        Command::Report(args) => {
            let records = harness::read_csv(&args.records)?;
            if records.is_empty() {
                return Err("refusing to report empty records".into());
            }
            // Rebuild a basic fit from the records themselves.
            let mut scales: Vec<f64> = records.iter().map(|r| r.a).collect();
            scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
            scales.dedup();
            let mut levels = Vec::new();
            let mut meds = Vec::new();
            for &a in &scales {
                let errs: Vec<f64> = records
                    .iter()
                    .filter(|r| r.a == a)
                    .filter_map(|r| r.abs_error)
                    .collect();
                let med = harness::median(&errs);
                meds.push(med);
                levels.push(harness::LevelStat {
                    h: a,
                    cells: 0,
                    r_policy: 0,
                    median_err: med,
                    max_err: errs.iter().copied().fold(0.0, f64::max),
                    argmin_r: 0,
                    median_err_at_argmin: med,
                });
            }
            let (slope, intercept, residuals) = if scales.len() >= 2 {
                harness::fit_loglog_slope(&scales, &meds)
            } else {
                (f64::NAN, f64::NAN, vec![])
            };
            let env: Vec<(f64, f64, f64)> = records
                .iter()
                .filter_map(|r| {
                    let r_phys = r.a * r.r as f64;
                    r.abs_error.map(|e| (r.a / r_phys, r_phys, e))
                })
                .collect();
            let (c1, c2) = harness::fit_envelope(&env);
            let fit = harness::RateFit {
                levels,
                slope,
                intercept,
                residuals,
                c1,
                c2,
                envelope_coverage: harness::envelope_coverage(&env, c1, c2, 1.5),
            };
            let paths = report(&records, &fit, &args.out_dir, "report")?;
            println!("report written: {}", paths.summary.display());
        }
    }
    Ok(())
}

fn parse_radii(text: &str) -> Result<Vec<u32>, Box<dyn std::error::Error>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![single.trim().parse()?]),
        [lo, hi] => {
            let (lo, hi): (u32, u32) = (lo.trim().parse()?, hi.trim().parse()?);
            Ok((lo..=hi).collect())
        }
        [lo, hi, step] => {
            let (lo, hi, step): (u32, u32, u32) =
                (lo.trim().parse()?, hi.trim().parse()?, step.trim().parse()?);
            Ok((lo..=hi).step_by(step.max(1) as usize).collect())
        }
        _ => Err(format!("bad radii spec {text:?}; expected lo:hi[:step]").into()),
    }
}

fn parse_planes(
    text: &str,
) -> Result<Vec<(String, countcurv::directional::PlaneSpec)>, Box<dyn std::error::Error>> {
    use countcurv::directional::PlaneSpec;
    let axes = vec![
        ("axis12".to_string(), PlaneSpec::Axes(0, 1)),
        ("axis13".to_string(), PlaneSpec::Axes(0, 2)),
        ("axis23".to_string(), PlaneSpec::Axes(1, 2)),
    ];
    let polarized = vec![
        ("polar23".to_string(), PlaneSpec::Polarized(1, 2)),
        ("polar13".to_string(), PlaneSpec::Polarized(0, 2)),
        ("polar12".to_string(), PlaneSpec::Polarized(0, 1)),
    ];
    match text {
        "axes" => Ok(axes),
        "polarized" => Ok(polarized),
        "axes+polarized" => Ok(axes.into_iter().chain(polarized).collect()),
        other => Err(format!("unknown planes spec {other:?}").into()),
    }
}

fn parse_calibration(
    text: &str,
    dim: usize,
    radii: &str,
) -> Result<CalibrationChoice, Box<dyn std::error::Error>> {
    if text == "euclidean" {
        return Ok(CalibrationChoice::Analytic(Calibration::euclidean(dim)?));
    }
    if text == "adjacency" {
        return Ok(CalibrationChoice::Analytic(Calibration::adjacency(dim)?));
    }
    if let Some(path) = text.strip_prefix("empirical:") {
        let reference = load_ccx(path)?;
        let r_hi = *parse_radii(radii)?.iter().max().ok_or("empty radii")?;
        let bbox = bounding_box(&reference)?;
        let profile = BaselineProfile::measure(&[&reference], &[&bbox], r_hi)?;
        return Ok(CalibrationChoice::Empirical(profile));
    }
    Err(format!("unknown calibration {text:?}").into())
}

fn bounding_box(
    complex: &countcurv::CellComplex,
) -> Result<DomainBox, Box<dyn std::error::Error>> {
    let dim = complex.dim();
    if dim == 0 {
        return Err("complex has no positions".into());
    }
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for i in 0..complex.cell_count() as u32 {
        let p = complex.position(CellId(i)).unwrap();
        for d in 0..dim {
            lower[d] = lower[d].min(p[d]);
            upper[d] = upper[d].max(p[d]);
        }
    }
    Ok(DomainBox::new(lower, upper, complex.mesh_scale().unwrap_or(1.0))?)
}

fn parse_centers(
    text: &str,
    complex: &countcurv::CellComplex,
    radii: &[u32],
) -> Result<Vec<CellId>, Box<dyn std::error::Error>> {
    if text == "auto" {
        let r_hi = *radii.iter().max().ok_or("empty radii")?;
        if complex.positions().is_none() {
            // No geometry: spread centers over ids.
            let n = complex.cell_count();
            let stride = (n / 16).max(1);
            return Ok((0..n).step_by(stride).map(|i| CellId(i as u32)).collect());
        }
        let bbox = bounding_box(complex)?;
        let a = complex.mesh_scale().unwrap_or(1.0);
        let grid = boundary_distance_or_none(complex, &bbox, a);
        let mut out = Vec::new();
        let stride = (complex.cell_count() / 64).max(1);
        for i in (0..complex.cell_count()).step_by(stride) {
            let c = CellId(i as u32);
            let range = admissible_r_max(complex, c, &bbox, 1.0, grid.as_ref())?;
            if range.r_max >= r_hi {
                out.push(c);
            }
        }
        Ok(out)
    } else {
        Ok(text
            .split(',')
            .map(|t| t.trim().parse::<u32>().map(CellId))
            .collect::<Result<_, _>>()?)
    }
}

fn boundary_distance_or_none(
    complex: &countcurv::CellComplex,
    bbox: &DomainBox,
    a: f64,
) -> Option<countcurv::oracle::GridField> {
    // A flat boundary-distance solve is only worthwhile for moderate grids.
    let dim = complex.dim();
    if dim == 0 || dim > 3 {
        return None;
    }
    let spread = bbox.diameter();
    let delta = (a / 2.0).max(spread / 200.0);
    let field = DensityField::new(dim, countcurv::oracle::FieldSpec::Constant { c: 0.0 }).ok()?;
    boundary_distance(&field, bbox, delta).ok()
}

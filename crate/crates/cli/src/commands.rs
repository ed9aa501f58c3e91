use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use designcurve::catalog::{equator_curve, explicit_s3_curve, torus_curve};
use designcurve::curve::{CircleArc, PiecewiseCurve, Segment};
use designcurve::hopf::fiber_section;
use designcurve::lemmas::{average_exchange_check, degree_halving_check, polygon_design_check};
use designcurve::lift::{enclosed_area_check, generator_bound, holonomy, horizontal_lift};
use designcurve::poly::Polynomial;
use designcurve::stitch::{build_plan, select_delta};
use designcurve::verify::{certify_with_tolerance, Space, TAU_CERT};
use designcurve::{SpherePoint2, SpherePoint3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::format::{parse_curve, serialize_curve, CurveDescription, Metadata};
use crate::report::{to_json, CertificateReport, LemmasReport, LiftReport, StitchReport};

#[derive(Debug, Parser)]
#[command(name = "designcurve", version, about = "Construct and certify design curves on spheres and tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one of the built-in curves.
    Example(ExampleArgs),
    /// Horizontally lift an S² curve and report its holonomy.
    Lift(LiftArgs),
    /// Stitch rotated lifts of an S² curve into a closed S³ curve.
    Stitch(StitchArgs),
    /// Certify the design property of a curve.
    Verify(VerifyArgs),
    /// Sample a curve as CSV.
    Export(ExportArgs),
    /// Run the fiber-averaging lemma checks.
    Lemmas(LemmasArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExampleName {
    Equator,
    S3Explicit,
    Torus,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, value_enum)]
    pub name: ExampleName,
    #[arg(long, default_value_t = 3)]
    pub t: u64,
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[arg(long)]
    pub alpha: PathBuf,
    /// Start point `a_re,a_im,b_re,b_im` over α(0); defaults to the section point.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Degree used to choose the generator and φ_α.
    #[arg(long, default_value_t = 3)]
    pub t: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct StitchArgs {
    #[arg(long)]
    pub alpha: PathBuf,
    #[arg(long)]
    pub t: u64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub t: usize,
    /// `s2`, `s3`, `torus` (factor count from the curve), `torus-D` or `product:N1,N2,…`.
    #[arg(long)]
    pub space: String,
    #[arg(long, default_value_t = TAU_CERT)]
    pub tol: f64,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExportFormat {
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Projection {
    Stereographic,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ExportFormat,
    #[arg(long, value_enum)]
    pub projection: Option<Projection>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LemmasArgs {
    #[arg(long)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load(path: &Path) -> Result<(CurveDescription, PiecewiseCurve), CliError> {
    let d = parse_curve(&read(path)?).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let c = d.to_curve()?;
    Ok((d, c))
}

fn save(path: &Path, curve: &PiecewiseCurve, space: &Space, name: &str, provenance: String) -> Result<(), CliError> {
    let meta = Metadata {
        name: name.to_owned(),
        provenance,
    };
    write(path, &serialize_curve(&CurveDescription::from_curve(curve, space, meta)))
}

/// Runs one command, returning what to print on standard output.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Example(a) => example(a),
        Command::Lift(a) => lift(a),
        Command::Stitch(a) => stitch(a),
        Command::Verify(a) => verify(a),
        Command::Export(a) => export(a),
        Command::Lemmas(a) => lemmas(a),
    }
}

fn example(a: ExampleArgs) -> Result<String, CliError> {
    let (curve, space, name) = match a.name {
        ExampleName::Equator => (equator_curve(), Space::sphere(3), "equator".to_owned()),
        ExampleName::S3Explicit => (explicit_s3_curve(a.t)?, Space::sphere(4), format!("s3-explicit t={}", a.t)),
        ExampleName::Torus => (
            torus_curve(a.t, a.d)?,
            Space::torus(a.d as usize),
            format!("torus t={} d={}", a.t, a.d),
        ),
    };
    save(&a.out, &curve, &space, &name, "catalog".into())?;
    Ok(format!("wrote {name} to {}\n", a.out.display()))
}

fn parse_start(s: &str) -> Result<SpherePoint3, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--start: {e}")))?;
    let x: [f64; 4] = v
        .try_into()
        .map_err(|_| CliError::Usage("--start needs four comma-separated numbers".into()))?;
    Ok(SpherePoint3::from_real(x)?)
}

fn s2_start(alpha: &PiecewiseCurve) -> Result<SpherePoint3, CliError> {
    let p = alpha.position(0.0);
    Ok(fiber_section(SpherePoint2::from_vec3([p[0], p[1], p[2]])?))
}

fn lift(a: LiftArgs) -> Result<String, CliError> {
    let (_, alpha) = load(&a.alpha)?;
    if alpha.ambient_dim() != 3 {
        return Err(designcurve::Error::Domain("lift needs a curve on S²".into()).into());
    }
    let start = match &a.start {
        Some(s) => parse_start(s)?,
        None => s2_start(&alpha)?,
    };
    let result = horizontal_lift(&alpha, start)?;
    let hol = holonomy(&result, a.t)?;
    save(&a.out, &result.beta, &Space::sphere(4), "horizontal lift", a.alpha.display().to_string())?;
    let report = LiftReport {
        alpha: a.alpha.display().to_string(),
        start: start.to_real(),
        t: a.t,
        holonomy_angle: hol.holonomy_angle,
        g: hol.g,
        phi_alpha: hol.phi_alpha,
        lift_length: result.lift_length,
        alpha_length: alpha.arc_length()?,
        generator_bound: if a.t > 2 { Some(generator_bound(a.t)?) } else { None },
        rk4_steps: result.steps.clone(),
        output: a.out.display().to_string(),
    };
    write(&a.report, &to_json(&report))?;
    Ok(format!(
        "holonomy {:.12} g {} phi_alpha {:.12} lift_length {:.12}\n",
        hol.holonomy_angle, hol.g, hol.phi_alpha, result.lift_length
    ))
}

fn stitch(a: StitchArgs) -> Result<String, CliError> {
    let (_, alpha) = load(&a.alpha)?;
    let ctx = build_plan(&alpha, a.t, a.epsilon)?;
    let st = select_delta(&ctx, a.seed)?;
    let length = st.gamma.arc_length()?;
    save(
        &a.out,
        &st.gamma,
        &Space::sphere(4),
        &format!("stitched t={} epsilon={}", a.t, a.epsilon),
        a.alpha.display().to_string(),
    )?;
    let report = StitchReport {
        alpha: a.alpha.display().to_string(),
        t: a.t,
        epsilon: a.epsilon,
        seed: a.seed,
        length,
        claimed_length: st.claimed_length,
        speed: st.plan.speed(),
        speed_deviation: st.gamma.speed_deviation(10_000),
        closure_gap: st.gamma.closure_gap(),
        delta_attempts: st.delta_attempts.clone(),
        simplicity_checked: a.epsilon > 0.0,
        plan: st.plan.clone(),
        output: a.out.display().to_string(),
    };
    write(&a.report, &to_json(&report))?;
    Ok(format!("length {length:.12} claimed {:.12} delta {}\n", st.claimed_length, st.plan.delta))
}

fn resolve_space(name: &str, curve: &PiecewiseCurve) -> Result<Space, CliError> {
    if name == "torus" {
        let n = curve.ambient_dim();
        if n % 2 != 0 {
            return Err(designcurve::Error::Domain(format!("torus curve needs even ambient dimension, got {n}")).into());
        }
        return Ok(Space::torus(n / 2));
    }
    Ok(name.parse()?)
}

fn verify(a: VerifyArgs) -> Result<String, CliError> {
    let (desc, curve) = load(&a.curve)?;
    let space = resolve_space(&a.space, &curve)?;
    let cert = certify_with_tolerance(&curve, a.t, &space, a.tol)?;
    let pass = cert.pass;
    let (max_residual, worst) = (cert.max_residual, cert.worst_monomial.clone());
    let report = CertificateReport::new(a.curve.display().to_string(), desc.metadata.name.clone(), cert);
    let length = report.length;
    write(&a.report, &to_json(&report))?;
    if !pass {
        return Err(CliError::VerificationFailed {
            max_residual,
            worst,
            tolerance: a.tol,
        });
    }
    Ok(format!("verdict pass degree {} max_residual {max_residual:.3e} length {length:.12}\n", a.t))
}

fn export(a: ExportArgs) -> Result<String, CliError> {
    let ExportFormat::Csv = a.format;
    let (_, curve) = load(&a.curve)?;
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let n = curve.ambient_dim();
    let mut out = String::new();
    let project = a.projection.is_some();
    let header: Vec<String> = match (project, n) {
        (true, 4) => vec!["x".into(), "y".into(), "z".into()],
        (true, 3) => vec!["x".into(), "y".into()],
        (true, _) => {
            return Err(designcurve::Error::Domain(format!("stereographic projection needs S² or S³, got ℝ^{n}")).into());
        }
        (false, _) => (1..=n).map(|i| format!("x{i}")).collect(),
    };
    writeln!(out, "s,{}", header.join(",")).unwrap();
    for i in 0..=a.samples {
        let s = i as f64 / a.samples as f64;
        let p = curve.position(s);
        let row: Vec<f64> = if project {
            let denom = 1.0 + p[n - 1];
            p[..n - 1].iter().map(|x| x / denom).collect()
        } else {
            p
        };
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{s},{}", cells.join(",")).unwrap();
    }
    match &a.out {
        Some(path) => {
            write(path, &out)?;
            Ok(String::new())
        }
        None => Ok(out),
    }
}

fn lemmas(a: LemmasArgs) -> Result<String, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let xi: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let w = SpherePoint2::new(xi, Complex64::from_polar((1.0 - xi * xi).sqrt(), phi))?;
    let omega = fiber_section(w);
    let f = Polynomial::random(4, a.t, &mut rng);
    let polygon = polygon_design_check(omega, a.t, &f)?;
    let exchange = average_exchange_check(&f)?;
    let halving = if a.t <= 12 { Some(degree_halving_check(a.t, a.seed)?) } else { None };
    // a latitude circle around the pole, radius 1
    let rho = 1.0f64;
    let alpha = PiecewiseCurve::single(Segment::Circle(CircleArc {
        center: vec![rho.cos(), 0.0, 0.0],
        cos_vec: vec![0.0, rho.sin(), 0.0],
        sin_vec: vec![0.0, 0.0, rho.sin()],
        theta0: 0.0,
        theta1: std::f64::consts::TAU,
    }))?;
    let start = s2_start(&alpha)?;
    let area = enclosed_area_check(&alpha, &horizontal_lift(&alpha, start)?)?;
    let report = LemmasReport {
        t: a.t,
        seed: a.seed,
        polygon_design_residual: polygon,
        average_exchange_residual: exchange,
        degree_halving: halving,
        enclosed_area: area,
    };
    let json = to_json(&report);
    if let Some(path) = &a.report {
        write(path, &json)?;
    }
    Ok(json)
}

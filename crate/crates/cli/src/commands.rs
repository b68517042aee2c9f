use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use jetblend_core::blender::{self, SkewSystem};
use jetblend_core::covering::{certify_covering, check_certificate, Certificate, CoveringOutcome};
use jetblend_core::flatpoly::{
    auto_lambda, find_flat_poly, lambda_threshold, minimal_flat_poly, scale_to_p, FlatPolyResult, ScaleVerdict,
};
use jetblend_core::ifs::{
    cloud_to_csv, decide_two_map_line, limit_set_cloud, LimitCloud, TwoMapVerdict, DEFAULT_WORD_CAP,
};
use jetblend_core::jet::{pm_alphabet, pm_continuation_jet, Jet};
use jetblend_core::jetcover::{
    certify_delta_covering, JetCoveringSystem, RealizeOptions, DEFAULT_PRECISION_BITS, DEFAULT_STEP_CAP,
};
use jetblend_core::scalar::{self, Scalar};
use jetblend_core::{AffineMap, BoxN, IFSystem, Interval, Itinerary};

use crate::output::{Outcome, Status};

#[derive(Parser, Debug)]
#[command(name = "jetblend", version, about = "Exact covering certificates, jet covering systems and blender demos")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limit-set point cloud as CSV, optionally rasterised.
    #[command(args_override_self = true)]
    LimitSet(LimitSetArgs),
    /// Certify Closure(U) ⊂ ⋃ f_b(U) by bisection.
    #[command(args_override_self = true)]
    Certify(CertifyArgs),
    /// Re-check a certificate file.
    #[command(args_override_self = true)]
    CheckCert(CheckCertArgs),
    /// Robust-interior / perturbably-empty verdict for two maps of the line.
    #[command(args_override_self = true)]
    TwoMapVerdict(TwoMapArgs),
    /// Build and verify the jet covering system for order r.
    #[command(args_override_self = true)]
    JetSystem(JetSystemArgs),
    /// Realize a target jet as a continuation jet of a ±1 word.
    #[command(args_override_self = true)]
    Realize(RealizeArgs),
    /// Render the unstable segments of the planar blender as PPM.
    #[command(args_override_self = true)]
    BlenderRender(BlenderRenderArgs),
    /// Covering check for the planar blender example.
    #[command(args_override_self = true)]
    BlenderCover(BlenderCoverArgs),
    /// Sampled nearly-affine check on tabulated branches.
    #[command(args_override_self = true)]
    NearlyAffine(NearlyAffineArgs),
    /// Minimal-L1 flat polynomial search.
    #[command(args_override_self = true)]
    FlatPoly(FlatPolyArgs),
}

fn q(s: &str) -> Result<Scalar, String> {
    scalar::parse(s).map_err(|e| e.to_string())
}

/// Floats are accepted only by the sampling-based commands; `p/q` also works.
fn real(s: &str) -> Result<f64, String> {
    match scalar::parse(s) {
        Ok(v) => Ok(scalar::to_f64(&v)),
        Err(_) => s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    FloatOracle,
}

#[derive(Args, Debug)]
struct SystemSource {
    /// Contraction of the pair x ↦ λx ± 1.
    #[arg(long, value_parser = q)]
    lambda: Option<Scalar>,
    /// IFS as JSON (`alphabet`, `maps`).
    #[arg(long)]
    system: Option<PathBuf>,
}

impl SystemSource {
    fn load(&self) -> Result<IFSystem, Outcome> {
        match (&self.lambda, &self.system) {
            (Some(l), None) => IFSystem::symmetric_pair(l).map_err(Outcome::from),
            (None, Some(p)) => {
                let text = read(p)?;
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))
            }
            _ => Err(invalid("give exactly one of --lambda and --system".into())),
        }
    }
}

#[derive(Args, Debug)]
struct LimitSetArgs {
    #[command(flatten)]
    source: SystemSource,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional scatter plot.
    #[arg(long)]
    ppm: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// `float-oracle` writes binary64 coordinates instead of rationals.
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    source: SystemSource,
    /// Target box as `lo,hi` per axis, axes separated by `;`.
    #[arg(long = "box", allow_hyphen_values = true, default_value = "-2,2")]
    target: String,
    #[arg(long, value_parser = q, default_value = "1/100")]
    margin: Scalar,
    #[arg(long, default_value_t = jetblend_core::covering::DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Certificate output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckCertArgs {
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Args, Debug)]
struct TwoMapArgs {
    /// Use x ↦ λx + 1 and x ↦ λx − 1.
    #[arg(long, value_parser = q)]
    lambda: Option<Scalar>,
    /// First map as `slope,offset`.
    #[arg(long, allow_hyphen_values = true)]
    map1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    map2: Option<String>,
}

#[derive(Args, Debug)]
struct JetSystemArgs {
    /// Jet order; the system has N = r + 1.
    #[arg(long)]
    r: usize,
    /// `p/q` or `auto`.
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[arg(long, value_parser = q, default_value = "1/16")]
    margin: Scalar,
    #[arg(long, default_value_t = 64)]
    n_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RealizeArgs {
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value = "auto")]
    lambda: String,
    /// Output of `jet-system`; supplies r and λ.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Target jet file: a JSON array of rationals or `{"jet": [...]}`.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Target jet inline, comma separated raw derivatives.
    #[arg(long, allow_hyphen_values = true)]
    jet: Option<String>,
    /// Target = continuation jet of this ±1 word.
    #[arg(long)]
    word: Option<String>,
    #[arg(long, value_parser = q, default_value = "1/100000000")]
    tol: Scalar,
    /// Bits of the rounding grid, or `exact`.
    #[arg(long, default_value_t = DEFAULT_PRECISION_BITS.to_string())]
    precision: String,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: usize,
    /// Base-curve jet; switches to the planar curve realization.
    #[arg(long, allow_hyphen_values = true)]
    x_jet: Option<String>,
    #[arg(long, value_parser = q, default_value = "1/10")]
    eta_tilde: Scalar,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BlenderRenderArgs {
    #[arg(long, value_parser = q, default_value = "3/4")]
    lambda: Scalar,
    /// Parameter; the fiber maps use λ + a.
    #[arg(long, allow_hyphen_values = true, value_parser = q, default_value = "0")]
    a: Scalar,
    #[arg(long, default_value_t = 12)]
    depth: usize,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long)]
    out: PathBuf,
    /// Segment heights as CSV.
    #[arg(long)]
    heights: Option<PathBuf>,
    /// Also check every grid point of [−2,2] at this spacing against the
    /// bound (λ+a)^depth/(1−λ−a).
    #[arg(long, value_parser = q)]
    coverage_step: Option<Scalar>,
    /// Also write the covering certificate of the example.
    #[arg(long)]
    cert: Option<PathBuf>,
    #[arg(long, value_parser = q, default_value = "1/10")]
    eta_tilde: Scalar,
}

#[derive(Args, Debug)]
struct BlenderCoverArgs {
    #[arg(long, value_parser = q, default_value = "3/4")]
    lambda: Scalar,
    #[arg(long, value_parser = q, default_value = "1/10")]
    eta_tilde: Scalar,
    /// Also expand this fiber coordinate greedily.
    #[arg(long, allow_hyphen_values = true, value_parser = q)]
    point: Option<Scalar>,
    #[arg(long, default_value_t = 20)]
    digits: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NearlyAffineArgs {
    #[arg(long, value_parser = real, default_value = "3/4")]
    lambda: f64,
    #[arg(long)]
    plus: Option<PathBuf>,
    #[arg(long)]
    minus: Option<PathBuf>,
    /// Parametric tables (`a,y,d0..dr`).
    #[arg(long)]
    plus_param: Option<PathBuf>,
    #[arg(long)]
    minus_param: Option<PathBuf>,
    #[arg(long, value_parser = real, default_value = "1/50")]
    grid_step: f64,
    /// Write model tables into this directory instead of checking.
    #[arg(long)]
    emit_model: Option<PathBuf>,
    /// Amplitude of the sin(πx/2) perturbation added to emitted tables.
    #[arg(long, value_parser = real, default_value = "0")]
    perturb: f64,
    /// Order of emitted parametric tables.
    #[arg(long, default_value_t = 2)]
    param_order: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FlatPolyArgs {
    /// Vanishing order N at x = 1.
    #[arg(long)]
    n: usize,
    /// Solve at this degree only instead of escalating.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_parser = q, default_value = "1/16")]
    margin: Scalar,
    #[arg(long, default_value_t = 64)]
    n_max: usize,
    /// Also rescale to this λ (`p/q` or `auto`).
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn invalid(msg: String) -> Outcome {
    Outcome::failure(Status::Invalid, msg)
}

fn read(p: &Path) -> Result<String, Outcome> {
    fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn s(x: &Scalar) -> Value {
    Value::String(scalar::format(x))
}

/// Writes `report` to `out` when given, and always to stdout.
fn report(status: Status, value: Value, out: &Option<PathBuf>) -> Outcome {
    let o = Outcome::new(status).json(&value);
    match out {
        Some(p) => {
            let bytes = o.stdout.clone();
            o.file(p.clone(), bytes)
        }
        None => o,
    }
}

pub fn dispatch(cli: Cli) -> Outcome {
    let r = match cli.command {
        Command::LimitSet(a) => limit_set(a),
        Command::Certify(a) => certify(a),
        Command::CheckCert(a) => check_cert(a),
        Command::TwoMapVerdict(a) => two_map(a),
        Command::JetSystem(a) => jet_system(a),
        Command::Realize(a) => realize(a),
        Command::BlenderRender(a) => blender_render(a),
        Command::BlenderCover(a) => blender_cover(a),
        Command::NearlyAffine(a) => nearly_affine(a),
        Command::FlatPoly(a) => flat_poly(a),
    };
    r.unwrap_or_else(|o| o)
}

type CmdResult = Result<Outcome, Outcome>;

fn limit_set(a: LimitSetArgs) -> CmdResult {
    let sys = a.source.load()?;
    let cloud = limit_set_cloud(&sys, a.depth, a.cap)?;
    let csv = match a.mode {
        Mode::Exact => cloud_to_csv(&sys, &cloud),
        Mode::FloatOracle => float_csv(&sys, &cloud),
    };
    let mut o = match &a.out {
        Some(p) => {
            let summary = json!({
                "points": cloud.points.len(),
                "error_bound": s(&cloud.error_bound),
                "mode": if a.mode == Mode::Exact { "exact" } else { "float-oracle" },
            });
            Outcome::new(Status::Ok).json(&summary).file(p.clone(), csv.into_bytes())
        }
        None => Outcome::ok_text(csv),
    };
    if let Some(p) = &a.ppm {
        o = o.file(p.clone(), scatter_ppm(&sys, &cloud, a.width, a.height)?);
    }
    Ok(o)
}

fn float_csv(sys: &IFSystem, cloud: &LimitCloud) -> String {
    let mut out: Vec<String> = (1..=sys.dim()).map(|i| format!("x{i}")).collect();
    out.push("word".into());
    let mut text = out.join(",");
    text.push('\n');
    for (p, w) in &cloud.points {
        for x in p {
            text.push_str(&format!("{:e},", scalar::to_f64(x)));
        }
        text.push_str(&w.render(sys.alphabet()));
        text.push('\n');
    }
    text
}

fn scatter_ppm(sys: &IFSystem, cloud: &LimitCloud, width: usize, height: usize) -> Result<Vec<u8>, Outcome> {
    if width == 0 || height == 0 {
        return Err(invalid("image dimensions must be positive".into()));
    }
    if sys.dim() > 2 {
        return Err(invalid("scatter plots support one- and two-dimensional systems".into()));
    }
    let r = sys.radius().clone();
    let cell = |x: &Scalar, n: usize| -> usize {
        let t = (x + &r) / (scalar::int(2) * &r) * Scalar::from_integer(n.into());
        let i: i64 = t.floor().to_integer().try_into().unwrap_or(i64::MAX);
        i.clamp(0, n as i64 - 1) as usize
    };
    let mut on = vec![false; width * height];
    for (p, _) in &cloud.points {
        let col = cell(&p[0], width);
        if sys.dim() == 1 {
            for row in 0..height {
                on[row * width + col] = true;
            }
        } else {
            let row = height - 1 - cell(&p[1], height);
            on[row * width + col] = true;
        }
    }
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    for v in on {
        bytes.extend_from_slice(if v { &[0, 0, 0] } else { &[255, 255, 255] });
    }
    Ok(bytes)
}

fn parse_box(text: &str) -> Result<BoxN, Outcome> {
    let axes = text
        .split(';')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(',').collect();
            if parts.len() != 2 {
                return Err(invalid(format!("axis `{axis}` is not `lo,hi`")));
            }
            let lo = scalar::parse(parts[0].trim())?;
            let hi = scalar::parse(parts[1].trim())?;
            Interval::new(lo, hi).map_err(Outcome::from)
        })
        .collect::<Result<Vec<_>, Outcome>>()?;
    BoxN::new(axes).map_err(Outcome::from)
}

fn certify(a: CertifyArgs) -> CmdResult {
    let sys = a.source.load()?;
    let target = parse_box(&a.target)?;
    match certify_covering(&sys, &target, &a.margin, a.max_depth)? {
        CoveringOutcome::Certified(cert) => {
            let summary = json!({"certified": true, "depth": cert.depth, "leaves": cert.leaves.len()});
            let mut o = Outcome::new(Status::Ok).json(&summary);
            if let Some(p) = &a.out {
                o = o.file(p.clone(), crate::output::to_json_bytes(&to_value(&cert)));
            }
            Ok(o)
        }
        CoveringOutcome::Failure { witness_box, depth } => {
            let v = json!({"certified": false, "depth": depth, "witness_box": to_value(&witness_box)});
            Ok(Outcome::new(Status::Negative).json(&v))
        }
    }
}

fn check_cert(a: CheckCertArgs) -> CmdResult {
    let text = read(&a.cert)?;
    let cert: Certificate = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", a.cert.display())))?;
    let valid = check_certificate(&cert)?;
    let status = if valid { Status::Ok } else { Status::Negative };
    Ok(Outcome::new(status).json(&json!({"valid": valid})))
}

fn parse_line_map(text: &str) -> Result<AffineMap, Outcome> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(invalid(format!("map `{text}` is not `slope,offset`")));
    }
    Ok(AffineMap::line(scalar::parse(parts[0].trim())?, scalar::parse(parts[1].trim())?)?)
}

fn two_map(a: TwoMapArgs) -> CmdResult {
    let (f1, f2) = match (&a.lambda, &a.map1, &a.map2) {
        (Some(l), None, None) => (AffineMap::line(l.clone(), Scalar::from_integer(1.into()))?, AffineMap::line(l.clone(), Scalar::from_integer((-1).into()))?),
        (None, Some(m1), Some(m2)) => (parse_line_map(m1)?, parse_line_map(m2)?),
        _ => return Err(invalid("give --lambda, or both --map1 and --map2".into())),
    };
    match decide_two_map_line(&f1, &f2)? {
        TwoMapVerdict::RobustInterior { lo, hi } => {
            let sys = IFSystem::new(vec![("1".into(), f1), ("2".into(), f2)])?;
            let target = BoxN::new(vec![Interval::new(lo.clone(), hi.clone())?])?;
            let margin = (&hi - &lo) / Scalar::from_integer((1i64 << 20).into());
            let recertified = matches!(certify_covering(&sys, &target, &margin, 40)?, CoveringOutcome::Certified(_));
            let v = json!({"verdict": "robust-interior", "interval": [s(&lo), s(&hi)], "recertified": recertified});
            Ok(Outcome::new(Status::Ok).json(&v))
        }
        TwoMapVerdict::PerturbablyEmpty => Ok(Outcome::new(Status::Negative).json(&json!({"verdict": "perturbably-empty"}))),
    }
}

fn choose_lambda(text: &str, q: &FlatPolyResult) -> Result<Scalar, Outcome> {
    if text == "auto" {
        Ok(auto_lambda(q)?)
    } else {
        Ok(scalar::parse(text)?)
    }
}

fn too_small(lambda: &Scalar, l1: &Scalar, threshold: &Scalar) -> Outcome {
    let v = json!({
        "verdict": "lambda-too-small",
        "lambda": s(lambda),
        "l1": s(l1),
        "threshold": s(threshold),
    });
    Outcome::new(Status::Negative).json(&v)
}

/// Flat polynomial, λ and the verified system, or a λ-too-small verdict.
fn build_jet_system(r: usize, lambda: &str, margin: &Scalar, n_max: usize) -> Result<(FlatPolyResult, Scalar, Scalar, JetCoveringSystem), Outcome> {
    let q = find_flat_poly(r + 1, margin, n_max)?;
    let threshold = lambda_threshold(&q)?;
    let lam = choose_lambda(lambda, &q)?;
    match scale_to_p(&q, &lam)? {
        ScaleVerdict::LambdaTooSmall { l1, .. } => Err(too_small(&lam, &l1, &threshold)),
        ScaleVerdict::Accepted(_) => {
            let sys = JetCoveringSystem::from_flat(&q, &lam)?;
            Ok((q, threshold, lam, sys))
        }
    }
}

fn jet_system(a: JetSystemArgs) -> CmdResult {
    let (q, threshold, lam, sys) = build_jet_system(a.r, &a.lambda, &a.margin, a.n_max)?;
    sys.verify_semiconjugacy()?;
    let cert = certify_delta_covering(&sys)?;
    let v = json!({
        "r": a.r,
        "lambda": s(&lam),
        "threshold": s(&threshold),
        "flat_poly": to_value(&q),
        "system": to_value(&sys),
        "checks": {
            "exact": true,
            "semiconjugacy": true,
            "delta_covering_analytic": cert.analytic,
            "delta_covering_subdivision": true,
        },
        "delta_certificate": {
            "range": s(&cert.range),
            "margin": s(&cert.margin),
            "depth": cert.depth,
            "leaves": cert.leaves.len(),
        },
    });
    Ok(report(Status::Ok, v, &a.out))
}

fn parse_jet(text: &str) -> Result<Jet, Outcome> {
    let coeffs = text.split(',').map(|c| scalar::parse(c.trim())).collect::<Result<Vec<_>, _>>()?;
    Ok(Jet::scalar(coeffs)?)
}

fn read_jet_file(p: &Path) -> Result<Jet, Outcome> {
    let v: Value = serde_json::from_str(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
    let arr = match &v {
        Value::Array(_) => v.clone(),
        Value::Object(m) => m.get("jet").cloned().ok_or_else(|| invalid("target object lacks `jet`".into()))?,
        _ => return Err(invalid("target must be an array or an object with `jet`".into())),
    };
    let coeffs: Vec<String> = serde_json::from_value(arr).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
    parse_jet(&coeffs.join(","))
}

fn realize(a: RealizeArgs) -> CmdResult {
    let (r, lambda_text) = match (&a.system, a.r) {
        (Some(p), None) => {
            let v: Value = serde_json::from_str(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            let r = v["r"].as_u64().ok_or_else(|| invalid("system file lacks `r`".into()))? as usize;
            let l = v["lambda"].as_str().ok_or_else(|| invalid("system file lacks `lambda`".into()))?.to_string();
            (r, l)
        }
        (None, Some(r)) => (r, a.lambda.clone()),
        _ => return Err(invalid("give exactly one of --system and --r".into())),
    };
    let (_, _, lam, sys) = build_jet_system(r, &lambda_text, &Scalar::new(1.into(), 16.into()), 64)?;
    let target = match (&a.target, &a.jet, &a.word) {
        (Some(p), None, None) => read_jet_file(p)?,
        (None, Some(j), None) => parse_jet(j)?,
        (None, None, Some(w)) => {
            let word = Itinerary::parse(&pm_alphabet(), w)?;
            pm_continuation_jet(&lam, &word, r)?
        }
        _ => return Err(invalid("give exactly one of --target, --jet and --word".into())),
    };
    if target.order() != r {
        return Err(invalid(format!("target jet has order {}, system has r = {r}", target.order())));
    }
    let precision = match a.precision.as_str() {
        "exact" => None,
        bits => Some(bits.parse::<u32>().map_err(|e| invalid(format!("--precision `{bits}`: {e}")))?),
    };
    let opts = RealizeOptions { precision, step_cap: a.step_cap };
    let mut v = if let Some(xj) = &a.x_jet {
        let skew = SkewSystem::new(lam.clone(), a.eta_tilde.clone())?;
        let x = parse_jet(xj)?;
        let res = blender::realize_curve_jet(&skew, &sys, &x, &target, &a.tol, opts)?;
        to_value(&res)
    } else {
        let res = jetblend_core::jetcover::realize_jet(&sys, &target, &a.tol, opts)?;
        to_value(&res)
    };
    for key in ["achieved_residual", "residual_bound", "margin"] {
        if let Some(x) = v.get(key).and_then(Value::as_str).map(scalar::parse).transpose()? {
            v[format!("{key}_approx")] = json!(scalar::to_f64(&x));
        }
    }
    v["lambda"] = s(&lam);
    v["r"] = json!(r);
    v["target"] = to_value(&target);
    v["tol"] = s(&a.tol);
    Ok(report(Status::Ok, v, &a.out))
}

fn blender_render(a: BlenderRenderArgs) -> CmdResult {
    let skew = SkewSystem::new(a.lambda.clone(), a.eta_tilde.clone())?;
    let render = blender::render_unstable_union(&skew, &a.a, a.depth, a.width, a.height)?;
    let mut status = Status::Ok;
    let mut v = json!({
        "segments": render.heights.len(),
        "width": render.width,
        "height": render.height,
        "lambda": s(&a.lambda),
        "a": s(&a.a),
        "depth": a.depth,
    });
    if let Some(step) = &a.coverage_step {
        let rate = &a.lambda + &a.a;
        let bound = scalar::pow(&rate, a.depth as i32) / (Scalar::from_integer(1.into()) - &rate);
        let cov = blender::coverage_check(&render.heights, step, &bound)?;
        if !cov.holds {
            status = Status::Negative;
        }
        v["coverage"] = to_value(&cov);
    }
    let mut o = Outcome::new(status);
    if let Some(p) = &a.cert {
        let rep = blender::verify_example_covering(&skew)?;
        if !rep.covered {
            status = Status::Negative;
        }
        v["covered"] = json!(rep.covered);
        o = o.file(p.clone(), crate::output::to_json_bytes(&to_value(&rep)));
    }
    if let Some(p) = &a.heights {
        let mut csv = String::from("y\n");
        for h in &render.heights {
            csv.push_str(&scalar::format(h));
            csv.push('\n');
        }
        o = o.file(p.clone(), csv.into_bytes());
    }
    o.status = status;
    Ok(o.json(&v).file(a.out.clone(), render.ppm))
}

fn blender_cover(a: BlenderCoverArgs) -> CmdResult {
    let skew = SkewSystem::new(a.lambda.clone(), a.eta_tilde.clone())?;
    let rep = blender::verify_example_covering(&skew)?;
    let mut v = to_value(&rep);
    if let Some(y) = &a.point {
        v["point"] = to_value(&blender::realize_point(&a.lambda, y, a.digits)?);
    }
    let status = if rep.covered { Status::Ok } else { Status::Negative };
    Ok(report(status, v, &a.out))
}

fn sin_perturbation(amp: f64) -> impl Fn(f64, f64) -> (f64, f64, f64) {
    use std::f64::consts::PI;
    move |x, _| (amp * (PI * x / 2.0).sin(), amp * PI / 2.0 * (PI * x / 2.0).cos(), 0.0)
}

fn nearly_affine(a: NearlyAffineArgs) -> CmdResult {
    if !(a.grid_step > 0.0 && a.grid_step.is_finite()) {
        return Err(invalid("--grid-step must be positive".into()));
    }
    if let Some(dir) = &a.emit_model {
        if !(0.5 < a.lambda && a.lambda < 1.0) {
            return Err(invalid(format!("λ must lie in (1/2, 1), got {}", a.lambda)));
        }
        let mut o = Outcome::new(Status::Ok);
        let mut files = Vec::new();
        for (sign, name) in [(1i64, "plus"), (-1, "minus")] {
            let rows = blender::model_table(a.lambda, sign, a.grid_step, sin_perturbation(a.perturb));
            let path = dir.join(format!("{name}.csv"));
            files.push(path.display().to_string());
            o = o.file(path, blender::sample_table_csv(&rows).into_bytes());
            let (ylo, yhi) = blender::model_domain(a.lambda, sign);
            let mut prow = Vec::new();
            let ny = ((yhi - ylo) / a.grid_step).floor() as i64;
            for i in -2i64..=2 {
                let av = i as f64 * a.grid_step;
                for j in 0..=ny {
                    let y = ylo + j as f64 * a.grid_step;
                    prow.push(blender::ParamSample { a: av, y, jet: blender::model_param_jet(a.lambda, sign, av, y, a.param_order) });
                }
            }
            let path = dir.join(format!("{name}_param.csv"));
            files.push(path.display().to_string());
            o = o.file(path, blender::param_table_csv(&prow).into_bytes());
        }
        return Ok(o.json(&json!({"written": files})));
    }
    let mut v = json!({});
    match (&a.plus, &a.minus) {
        (Some(p), Some(m)) => {
            let plus = blender::parse_sample_table(&read(p)?)?;
            let minus = blender::parse_sample_table(&read(m)?)?;
            v["c1"] = to_value(&blender::nearly_affine_check(&plus, &minus, a.lambda, a.grid_step)?);
        }
        (None, None) => {}
        _ => return Err(invalid("give both --plus and --minus".into())),
    }
    match (&a.plus_param, &a.minus_param) {
        (Some(p), Some(m)) => {
            let plus = blender::parse_param_table(&read(p)?)?;
            let minus = blender::parse_param_table(&read(m)?)?;
            v["parametric"] = to_value(&blender::nearly_affine_parametric(&plus, &minus, a.lambda)?);
        }
        (None, None) => {}
        _ => return Err(invalid("give both --plus-param and --minus-param".into())),
    }
    if v.as_object().is_some_and(|m| m.is_empty()) {
        return Err(invalid("nothing to check: give tables or --emit-model".into()));
    }
    v["certified"] = json!(false);
    Ok(report(Status::Ok, v, &a.out))
}

fn flat_poly(a: FlatPolyArgs) -> CmdResult {
    let q = match a.degree {
        Some(d) => minimal_flat_poly(a.n, d)?,
        None => find_flat_poly(a.n, &a.margin, a.n_max)?,
    };
    let two = Scalar::from_integer(2.into());
    let below_two = q.l1_nonleading < two;
    let mut v = json!({"flat_poly": to_value(&q), "below_two": below_two});
    let mut status = if a.degree.is_some() && !below_two { Status::Negative } else { Status::Ok };
    if below_two {
        let threshold = lambda_threshold(&q)?;
        v["threshold"] = s(&threshold);
        if let Some(text) = &a.lambda {
            let lam = choose_lambda(text, &q)?;
            match scale_to_p(&q, &lam)? {
                ScaleVerdict::Accepted(sp) => v["scaled"] = to_value(&sp),
                ScaleVerdict::LambdaTooSmall { l1, .. } => {
                    v["scaled"] = json!({"verdict": "lambda-too-small", "lambda": s(&lam), "l1": s(&l1)});
                    status = Status::Negative;
                }
            }
        }
    }
    Ok(report(status, v, &a.out))
}

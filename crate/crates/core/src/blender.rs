//! The planar skew product `(x, y) ↦ (4|x| − 6, (λ+a)y + sgn x)`: covering
//! checks, fiber realization, unstable-segment rendering and sampled
//! nearly-affine checks against the affine model branches.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::covering::{certify_covering, CoveringOutcome, DEFAULT_MAX_DEPTH};
use crate::error::{Error, Result};
use crate::ifs::{limit_set_cloud, IFSystem, Itinerary, DEFAULT_WORD_CAP};
use crate::interval::{BoxN, Interval};
use crate::jet::{pm_alphabet, pm_sign, Jet};
use crate::jetcover::{realize_jet, JetCoveringSystem, RealizationResult, RealizeOptions};
use crate::scalar::{self, Scalar};

/// Margin used for the fiber covering certificate.
pub const FIBER_MARGIN: (i64, i64) = (1, 100);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkewSystem {
    #[serde(with = "scalar::serde_q")]
    pub lambda: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub eta: Scalar,
}

impl SkewSystem {
    /// Accepts any `λ ∈ (0, 1)` so that small `λ` can be reported as a failed
    /// covering rather than rejected; `η̃` must be positive.
    pub fn new(lambda: Scalar, eta: Scalar) -> Result<Self> {
        if !lambda.is_positive() || lambda >= Scalar::one() {
            return Err(Error::InvalidInput(format!("λ must lie in (0, 1), got {lambda}")));
        }
        if !eta.is_positive() {
            return Err(Error::Degenerate(format!("η̃ must be positive, got {eta}")));
        }
        Ok(SkewSystem { lambda, eta })
    }

    /// `(1+η̃)/(1−λ)`.
    pub fn fiber_radius(&self) -> Scalar {
        (Scalar::one() + &self.eta) / (Scalar::one() - &self.lambda)
    }

    /// x-interval of the branch domain `Y₊` (symbol 0) or `Y₋` (symbol 1).
    pub fn branch_x(&self, symbol: usize) -> Interval {
        let one = Scalar::one();
        let two = scalar::int(2);
        if symbol == 0 {
            Interval::new(&one - &self.eta, &two + &self.eta).expect("η̃ > 0")
        } else {
            Interval::new(-(&two + &self.eta), &self.eta - &one).expect("η̃ > 0")
        }
    }

    pub fn fiber_box(&self) -> Interval {
        Interval::symmetric(self.fiber_radius()).expect("positive radius")
    }
}

/// Exact image of `[lo, hi]` under `x ↦ 4|x| − 6`.
pub fn base_image(x: &Interval) -> Interval {
    let (lo, hi) = (x.lo(), x.hi());
    let abs_hi = std::cmp::max(lo.abs(), hi.abs());
    let abs_lo = if lo.is_negative() && hi.is_positive() { Scalar::zero() } else { std::cmp::min(lo.abs(), hi.abs()) };
    let four = scalar::int(4);
    let six = scalar::int(6);
    Interval::new(&four * abs_lo - &six, four * abs_hi - six).expect("ordered")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseBranchCheck {
    pub branch: String,
    pub domain: Interval,
    pub image: Interval,
    pub required: Interval,
    pub contains: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlenderCovering {
    pub system: SkewSystem,
    pub base: Vec<BaseBranchCheck>,
    /// Fiber certificate for `[−2,2] ⊂ f₊((−2,2)) ∪ f₋((−2,2))`, as JSON.
    pub fiber_certificate: Option<serde_json::Value>,
    /// Uncovered cell when the fiber certificate fails.
    pub fiber_gap: Option<Interval>,
    pub covered: bool,
}

/// Base branches must map onto an interval strictly containing
/// `[−2−η̃, 2+η̃]`; the fiber pair must cover `[−2, 2]`.
pub fn verify_example_covering(sys: &SkewSystem) -> Result<BlenderCovering> {
    let two = scalar::int(2);
    let required = Interval::new(-(&two + &sys.eta), &two + &sys.eta)?;
    let base: Vec<BaseBranchCheck> = (0..2)
        .map(|s| {
            let domain = sys.branch_x(s);
            let image = base_image(&domain);
            let contains = image.lo() < required.lo() && image.hi() > required.hi();
            BaseBranchCheck { branch: pm_alphabet()[s].clone(), domain, image, required: required.clone(), contains }
        })
        .collect();
    let fiber = IFSystem::symmetric_pair(&sys.lambda)?;
    let u = BoxN::new(vec![Interval::symmetric(two)?])?;
    let margin = scalar::ratio(FIBER_MARGIN.0, FIBER_MARGIN.1);
    let (fiber_certificate, fiber_gap) = match certify_covering(&fiber, &u, &margin, DEFAULT_MAX_DEPTH)? {
        CoveringOutcome::Certified(c) => {
            (Some(serde_json::to_value(&c).map_err(|e| Error::Internal(e.to_string()))?), None)
        }
        CoveringOutcome::Failure { witness_box, .. } => (None, Some(witness_box.axis(0).clone())),
    };
    let covered = base.iter().all(|b| b.contains) && fiber_certificate.is_some();
    Ok(BlenderCovering { system: sys.clone(), base, fiber_certificate, fiber_gap, covered })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointRealization {
    #[serde(serialize_with = "serialize_pm_word")]
    pub itinerary: Itinerary,
    #[serde(with = "scalar::serde_q")]
    pub partial_sum: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub residual: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub bound: Scalar,
}

fn serialize_pm_word<S: serde::Serializer>(w: &Itinerary, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.render(&pm_alphabet()))
}

/// Greedy signed expansion `y ≈ Σ_{j<k} λ^j δ_j`, keeping every remainder
/// `y_j = (y_{j−1} − δ_j)/λ` inside `[−R, R]`, `R = 1/(1−λ)`.
pub fn realize_point(lambda: &Scalar, y: &Scalar, k: usize) -> Result<PointRealization> {
    if !lambda.is_positive() || lambda >= &Scalar::one() {
        return Err(Error::InvalidInput(format!("λ must lie in (0, 1), got {lambda}")));
    }
    let r = Scalar::one() / (Scalar::one() - lambda);
    if y.abs() > r {
        return Err(Error::InvalidInput(format!("|y| = {} exceeds 1/(1−λ) = {r}", y.abs())));
    }
    let mut cur = y.clone();
    let mut symbols = Vec::with_capacity(k);
    let mut sum = Scalar::zero();
    let mut weight = Scalar::one();
    for _ in 0..k {
        let sym = (0..2)
            .find(|&s| ((&cur - scalar::int(pm_sign(s))) / lambda).abs() <= r)
            .ok_or_else(|| Error::Internal("no digit keeps the remainder in range".into()))?;
        let d = scalar::int(pm_sign(sym));
        sum += &weight * &d;
        weight *= lambda;
        cur = (cur - d) / lambda;
        symbols.push(sym);
    }
    let residual = (y - &sum).abs();
    let bound = weight * r;
    if residual > bound {
        return Err(Error::Internal(format!("residual {residual} exceeds {bound}")));
    }
    Ok(PointRealization { itinerary: Itinerary::new(symbols), partial_sum: sum, residual, bound })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveRealization {
    pub x_jet_in_b: bool,
    /// The realized point lies on the horizontal leaf through the target, so
    /// the x-jet agrees by construction.
    pub x_jet_match: bool,
    pub y: RealizationResult,
}

/// `B = (−2−η̃, 2+η̃) × (−η̃, η̃)^r`.
pub fn x_jet_in_b(sys: &SkewSystem, x: &Jet) -> Result<bool> {
    if x.dim() != 1 {
        return Err(Error::Shape("x-jet must be scalar".into()));
    }
    let two = scalar::int(2);
    let c = x.scalar_coeffs();
    Ok(c[0].abs() < &two + &sys.eta && c[1..].iter().all(|v| v.abs() < sys.eta))
}

pub fn realize_curve_jet(
    sys: &SkewSystem,
    jets: &JetCoveringSystem,
    x_jet: &Jet,
    y_jet: &Jet,
    tol: &Scalar,
    opts: RealizeOptions,
) -> Result<CurveRealization> {
    if jets.lambda != sys.lambda {
        return Err(Error::InvalidInput(format!(
            "jet system λ = {} differs from the skew system λ = {}",
            jets.lambda, sys.lambda
        )));
    }
    if x_jet.order() != y_jet.order() {
        return Err(Error::Shape("x- and y-jets must have the same order".into()));
    }
    if !x_jet_in_b(sys, x_jet)? {
        return Err(Error::InvalidInput("x-jet lies outside B".into()));
    }
    let y = realize_jet(jets, y_jet, tol, opts)?;
    Ok(CurveRealization { x_jet_in_b: true, x_jet_match: true, y })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Render {
    pub width: usize,
    pub height: usize,
    /// Segment heights `X_a(w)` in lexicographic word order.
    pub heights: Vec<Scalar>,
    pub ppm: Vec<u8>,
}

/// Pixel row of height `y` in the `[−2,2]²` frame, origin top-left.
pub fn pixel_row(y: &Scalar, height: usize) -> Option<usize> {
    let two = scalar::int(2);
    if y.abs() > two {
        return None;
    }
    let t = (&two - y) / scalar::int(4) * Scalar::from_integer(height.into());
    let row = t.floor().to_integer();
    let row: usize = row.try_into().ok()?;
    Some(row.min(height - 1))
}

/// Draws one full-width horizontal segment per word of length `k` at the
/// height `X_a(w) = f_{w₀,a} ∘ … ∘ f_{w_{k−1},a}(0)`.
pub fn render_unstable_union(sys: &SkewSystem, a: &Scalar, k: usize, width: usize, height: usize) -> Result<Render> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("image dimensions must be positive".into()));
    }
    let rate = &sys.lambda + a;
    if rate <= scalar::ratio(1, 2) || rate >= Scalar::one() {
        return Err(Error::InvalidInput(format!("λ + a = {rate} must lie in (1/2, 1)")));
    }
    let cloud = limit_set_cloud(&IFSystem::symmetric_pair(&rate)?, k, DEFAULT_WORD_CAP)?;
    let heights: Vec<Scalar> = cloud.points.into_iter().map(|(p, _)| p[0].clone()).collect();
    let mut rows = vec![false; height];
    for y in &heights {
        if let Some(r) = pixel_row(y, height) {
            rows[r] = true;
        }
    }
    let mut ppm = format!("P6\n{width} {height}\n255\n").into_bytes();
    ppm.reserve(width * height * 3);
    for on in rows {
        let px: [u8; 3] = if on { [0, 0, 0] } else { [255, 255, 255] };
        for _ in 0..width {
            ppm.extend_from_slice(&px);
        }
    }
    Ok(Render { width, height, heights, ppm })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    #[serde(with = "scalar::serde_q")]
    pub worst_distance: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub bound: Scalar,
    pub grid_points: usize,
    pub holds: bool,
}

/// Largest vertical distance from a grid point of `[−2, 2]` (spacing `step`)
/// to the nearest height, compared exactly against `bound`.
pub fn coverage_check(heights: &[Scalar], step: &Scalar, bound: &Scalar) -> Result<CoverageReport> {
    if !step.is_positive() || heights.is_empty() {
        return Err(Error::InvalidInput("need a positive step and at least one height".into()));
    }
    let mut sorted = heights.to_vec();
    sorted.sort();
    let two = scalar::int(2);
    let mut y = -two.clone();
    let mut worst = Scalar::zero();
    let mut count = 0;
    while y <= two {
        let i = sorted.partition_point(|h| h < &y);
        let mut d: Option<Scalar> = None;
        for j in [i.checked_sub(1), Some(i)].into_iter().flatten() {
            if let Some(h) = sorted.get(j) {
                let v = (h - &y).abs();
                if d.as_ref().is_none_or(|c| &v < c) {
                    d = Some(v);
                }
            }
        }
        let d = d.expect("non-empty");
        if d > worst {
            worst = d;
        }
        count += 1;
        y += step;
    }
    Ok(CoverageReport { holds: &worst <= bound, worst_distance: worst, bound: bound.clone(), grid_points: count })
}

/// One sample of a planar branch and its Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, Serialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub gx: f64,
    pub gy: f64,
    pub dgx_dx: f64,
    pub dgx_dy: f64,
    pub dgy_dx: f64,
    pub dgy_dy: f64,
}

pub fn parse_sample_table(text: &str) -> Result<Vec<Sample>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(|e| Error::Format(e.to_string()))).collect()
}

pub fn sample_table_csv(rows: &[Sample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

/// `y`-range of the branch domain `Y₊` (sign `+1`) or `Y₋`.
pub fn model_domain(lambda: f64, sign: i64) -> (f64, f64) {
    let lo = (1.0 - 2.0 * lambda) / (1.0 - lambda);
    let hi = 1.0 / (1.0 - lambda);
    if sign > 0 {
        (lo, hi)
    } else {
        (-hi, -lo)
    }
}

/// The model branch `(x, y) ↦ (0, (y − δ)/λ)` sampled on a grid of spacing
/// `step` over `[−2,2] × Y_δ`; `perturb(x, y)` returns an added `(Δgy, ∂ₓ, ∂ᵧ)`.
pub fn model_table<F>(lambda: f64, sign: i64, step: f64, perturb: F) -> Vec<Sample>
where
    F: Fn(f64, f64) -> (f64, f64, f64),
{
    let (ylo, yhi) = model_domain(lambda, sign);
    let nx = (4.0 / step).round() as i64;
    let ny = ((yhi - ylo) / step).floor() as i64;
    let mut ys: Vec<f64> = (0..=ny).map(|j| ylo + j as f64 * step).collect();
    if ys.last().is_some_and(|&y| (yhi - y).abs() > 1e-12) {
        ys.push(yhi);
    }
    let mut out = Vec::new();
    for i in 0..=nx {
        let x = -2.0 + i as f64 * step;
        for &y in &ys {
            let (p, px, py) = perturb(x, y);
            out.push(Sample {
                x,
                y,
                gx: 0.0,
                gy: (y - sign as f64) / lambda + p,
                dgx_dx: 0.0,
                dgx_dy: 0.0,
                dgy_dx: px,
                dgy_dy: 1.0 / lambda + py,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub branch: String,
    pub samples: usize,
    pub c0_deviation: f64,
    pub c1_deviation: f64,
    /// Minimum signed distance from the images of the horizontal boundary
    /// samples to `R`; positive means outside.
    pub boundary_distance: f64,
    pub boundary_disjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearlyAffineReport {
    pub lambda: f64,
    pub grid_step: f64,
    pub branches: Vec<BranchReport>,
    pub certified: bool,
}

const DOMAIN_TOL: f64 = 1e-9;

/// Signed distance from `p` to `[−2,2] × [−r, r]`, negative inside.
fn signed_distance(px: f64, py: f64, r: f64) -> f64 {
    let dx = px.abs() - 2.0;
    let dy = py.abs() - r;
    if dx <= 0.0 && dy <= 0.0 {
        dx.max(dy)
    } else {
        dx.max(0.0).hypot(dy.max(0.0))
    }
}

fn check_branch(rows: &[Sample], lambda: f64, sign: i64) -> Result<BranchReport> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty sample table".into()));
    }
    let (ylo, yhi) = model_domain(lambda, sign);
    let r = 1.0 / (1.0 - lambda);
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    let mut boundary = f64::INFINITY;
    for s in rows {
        if s.x.abs() > 2.0 + DOMAIN_TOL || s.y < ylo - DOMAIN_TOL || s.y > yhi + DOMAIN_TOL {
            return Err(Error::InvalidInput(format!("sample ({}, {}) lies outside the branch domain", s.x, s.y)));
        }
        let my = (s.y - sign as f64) / lambda;
        let dev0 = s.gx.abs().max((s.gy - my).abs());
        let dev1 = [s.dgx_dx, s.dgx_dy, s.dgy_dx, s.dgy_dy - 1.0 / lambda]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        c0 = c0.max(dev0);
        c1 = c1.max(dev0.max(dev1));
        if (s.y - ylo).abs() <= DOMAIN_TOL || (s.y - yhi).abs() <= DOMAIN_TOL {
            boundary = boundary.min(signed_distance(s.gx, s.gy, r));
        }
    }
    if !c0.is_finite() || !c1.is_finite() {
        return Err(Error::InvalidInput("non-finite sample values".into()));
    }
    Ok(BranchReport {
        branch: if sign > 0 { "+".into() } else { "-".into() },
        samples: rows.len(),
        c0_deviation: c0,
        c1_deviation: c1,
        boundary_distance: boundary,
        boundary_disjoint: boundary > 0.0,
    })
}

/// Sampled C¹ distance of `g±` from the affine model branches; never
/// certified.
pub fn nearly_affine_check(plus: &[Sample], minus: &[Sample], lambda: f64, grid_step: f64) -> Result<NearlyAffineReport> {
    if !(0.5 < lambda && lambda < 1.0) {
        return Err(Error::InvalidInput(format!("λ must lie in (1/2, 1), got {lambda}")));
    }
    Ok(NearlyAffineReport {
        lambda,
        grid_step,
        branches: vec![check_branch(plus, lambda, 1)?, check_branch(minus, lambda, -1)?],
        certified: false,
    })
}

/// One row of a parametric table: `(a, y)` and the raw `a`-derivatives
/// `∂ᵢₐ g_y` for `i = 0..=r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSample {
    pub a: f64,
    pub y: f64,
    pub jet: Vec<f64>,
}

/// Columns `a,y,d0,…,dr`.
pub fn parse_param_table(text: &str) -> Result<Vec<ParamSample>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.len() < 3 || &headers[0] != "a" || &headers[1] != "y" {
        return Err(Error::Format("expected columns a,y,d0,...".into()));
    }
    for (i, h) in headers.iter().skip(2).enumerate() {
        if h != format!("d{i}") {
            return Err(Error::Format(format!("column `{h}` should be `d{i}`")));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Format(format!("`{v}`: {e}"))))
            .collect::<Result<_>>()?;
        out.push(ParamSample { a: vals[0], y: vals[1], jet: vals[2..].to_vec() });
    }
    Ok(out)
}

pub fn param_table_csv(rows: &[ParamSample]) -> String {
    let order = rows.first().map_or(0, |r| r.jet.len().saturating_sub(1));
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = ["a".to_string(), "y".to_string()].into_iter().chain((0..=order).map(|i| format!("d{i}"))).collect();
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let rec: Vec<String> = [r.a, r.y].iter().chain(&r.jet).map(|v| v.to_string()).collect();
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

/// Raw `a`-derivatives of `(y − δ)/(λ + a)` up to order `r`.
pub fn model_param_jet(lambda: f64, sign: i64, a: f64, y: f64, r: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(r + 1);
    let base = lambda + a;
    let mut c = y - sign as f64;
    for i in 0..=r {
        out.push(c / base.powi(i as i32 + 1));
        c *= -((i + 1) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamBranchReport {
    pub branch: String,
    pub samples: usize,
    pub order: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParametricReport {
    pub lambda: f64,
    pub branches: Vec<ParamBranchReport>,
    pub certified: bool,
}

/// Sampled C^r distance (in `a`) of supplied family jets from the model.
pub fn nearly_affine_parametric(plus: &[ParamSample], minus: &[ParamSample], lambda: f64) -> Result<ParametricReport> {
    if !(0.5 < lambda && lambda < 1.0) {
        return Err(Error::InvalidInput(format!("λ must lie in (1/2, 1), got {lambda}")));
    }
    let branch = |rows: &[ParamSample], sign: i64| -> Result<ParamBranchReport> {
        let order = rows.first().ok_or_else(|| Error::InvalidInput("empty parametric table".into()))?.jet.len() - 1;
        let (ylo, yhi) = model_domain(lambda, sign);
        let mut dev: f64 = 0.0;
        for s in rows {
            if s.jet.len() != order + 1 {
                return Err(Error::Format("rows carry jets of different orders".into()));
            }
            if s.y < ylo - DOMAIN_TOL || s.y > yhi + DOMAIN_TOL || lambda + s.a <= 0.0 {
                return Err(Error::InvalidInput(format!("sample (a={}, y={}) lies outside the domain", s.a, s.y)));
            }
            let m = model_param_jet(lambda, sign, s.a, s.y, order);
            dev = s.jet.iter().zip(&m).fold(dev, |d, (u, v)| d.max((u - v).abs()));
        }
        Ok(ParamBranchReport {
            branch: if sign > 0 { "+".into() } else { "-".into() },
            samples: rows.len(),
            order,
            deviation: dev,
        })
    };
    Ok(ParametricReport { lambda, branches: vec![branch(plus, 1)?, branch(minus, -1)?], certified: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    #[test]
    fn example_covering_three_quarters() {
        let sys = SkewSystem::new(ratio(3, 4), ratio(1, 10)).unwrap();
        let rep = verify_example_covering(&sys).unwrap();
        assert!(rep.covered);
        for b in &rep.base {
            assert_eq!(b.image, Interval::new(ratio(-12, 5), ratio(12, 5)).unwrap());
        }
    }

    #[test]
    fn small_lambda_fails_with_gap_near_zero() {
        let sys = SkewSystem::new(ratio(9, 20), ratio(1, 10)).unwrap();
        let rep = verify_example_covering(&sys).unwrap();
        assert!(!rep.covered);
        assert!(rep.base.iter().all(|b| b.contains));
        let gap = rep.fiber_gap.unwrap();
        // images (1/10, 19/10) ∪ (−19/10, −1/10) miss 0 and both ends of [−2, 2];
        // the depth-first search reports the leftmost uncovered cell
        let plus = Interval::new(ratio(1, 10), ratio(19, 10)).unwrap();
        let minus = Interval::new(ratio(-19, 10), ratio(-1, 10)).unwrap();
        assert!(!plus.contains_interval(&gap) && !minus.contains_interval(&gap));
        assert_eq!(gap.lo(), &int(-2));
    }

    #[test]
    fn zero_eta_rejected() {
        assert!(matches!(SkewSystem::new(ratio(3, 4), int(0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn base_image_crossing_zero() {
        let i = Interval::new(int(-1), int(2)).unwrap();
        assert_eq!(base_image(&i), Interval::new(int(-6), int(2)).unwrap());
    }

    #[test]
    fn realize_point_fixed_point_and_zero() {
        let lam = ratio(3, 4);
        let r = realize_point(&lam, &int(4), 10).unwrap();
        assert!(r.itinerary.symbols().iter().all(|&s| s == 0));
        let r = realize_point(&lam, &int(0), 8).unwrap();
        // oracle: direct partial sum of the greedy digits
        let mut sum = Scalar::zero();
        for (j, &s) in r.itinerary.symbols().iter().enumerate() {
            sum += scalar::pow(&lam, j as i32) * int(pm_sign(s));
        }
        assert_eq!(sum, r.partial_sum);
        assert!(r.residual <= scalar::pow(&lam, 8) * int(4));
        assert!(realize_point(&lam, &int(5), 3).is_err());
    }

    #[test]
    fn render_depth_one() {
        let sys = SkewSystem::new(ratio(3, 4), ratio(1, 10)).unwrap();
        let r = render_unstable_union(&sys, &int(0), 1, 8, 8).unwrap();
        assert_eq!(r.heights, vec![int(1), int(-1)]);
        assert!(r.ppm.starts_with(b"P6\n8 8\n255\n"));
        assert_eq!(r.ppm.len(), 11 + 8 * 8 * 3);
        assert_eq!(pixel_row(&int(1), 8), Some(2));
        assert_eq!(pixel_row(&int(-2), 8), Some(7));
        assert_eq!(pixel_row(&int(3), 8), None);
    }

    #[test]
    fn parameter_shift_moves_heights_boundedly() {
        let sys = SkewSystem::new(ratio(3, 4), ratio(1, 10)).unwrap();
        let k = 6;
        let a = ratio(1, 8);
        let h0 = render_unstable_union(&sys, &int(0), k, 4, 4).unwrap().heights;
        let h1 = render_unstable_union(&sys, &a, k, 4, 4).unwrap().heights;
        let crude = int(k as i64) * int(2) / (int(1) - ratio(3, 4)) * &a;
        assert!(h0.iter().zip(&h1).all(|(x, y)| (x - y).abs() <= crude));
        assert!(h0 != h1);
    }

    #[test]
    fn model_tables_round_trip_and_check() {
        let lam = 0.75;
        let plus = model_table(lam, 1, 0.25, |_, _| (0.0, 0.0, 0.0));
        let minus = model_table(lam, -1, 0.25, |_, _| (0.0, 0.0, 0.0));
        assert_eq!(parse_sample_table(&sample_table_csv(&plus)).unwrap(), plus);
        let rep = nearly_affine_check(&plus, &minus, lam, 0.25).unwrap();
        for b in &rep.branches {
            assert_eq!(b.c0_deviation, 0.0);
            assert_eq!(b.c1_deviation, 0.0);
            assert!(b.boundary_distance.abs() < 1e-12);
            assert!(!b.boundary_disjoint);
        }
        assert!(!rep.certified);
        let mut bad = plus.clone();
        bad[0].y = 100.0;
        assert!(matches!(nearly_affine_check(&bad, &minus, lam, 0.25), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn parametric_model_jets() {
        let lam = 0.75;
        let j = model_param_jet(lam, 1, 0.0, 3.0, 2);
        // (y−1)/λ, −(y−1)/λ², 2(y−1)/λ³
        assert!((j[0] - 2.0 / 0.75).abs() < 1e-15);
        assert!((j[1] + 2.0 / 0.5625).abs() < 1e-12);
        assert!((j[2] - 4.0 / 0.421875).abs() < 1e-12);
        let rows = vec![ParamSample { a: 0.01, y: 3.0, jet: model_param_jet(lam, 1, 0.01, 3.0, 2) }];
        let text = param_table_csv(&rows);
        assert_eq!(parse_param_table(&text).unwrap(), rows);
        let minus = vec![ParamSample { a: 0.0, y: -3.0, jet: model_param_jet(lam, -1, 0.0, -3.0, 2) }];
        let rep = nearly_affine_parametric(&rows, &minus, lam).unwrap();
        assert!(rep.branches.iter().all(|b| b.deviation == 0.0));
    }
}

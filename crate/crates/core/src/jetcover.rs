//! The jet-space covering system: `F_δ(X) = JX + δT` on reversed jets, the
//! projection `π` from shift coordinates, the box `Δ`, and the greedy
//! realization of target jets as continuation jets of `±1` words.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::covering::{replay_partition, subdivide, Subdivision};
use crate::error::{Error, Result};
use crate::flatpoly::{b_polynomials, projection_matrix, scale_to_p, FlatPolyResult, Polynomial, ScaleVerdict};
use crate::ifs::Itinerary;
use crate::interval::{BoxN, Interval};
use crate::jet::{pm_alphabet, pm_continuation_jet, pm_sign, reverse_jet, shift_normal_form, Jet};
use crate::linalg::Matrix;
use crate::lp::{lp_solve, LpOutcome, LpProblem};
use crate::scalar::{self, Scalar};

/// η is searched on the grid `1 + j·2^-ETA_BITS`.
pub const ETA_BITS: u32 = 10;
/// Finest grid tried when the default one has no feasible point.
pub const ETA_MAX_BITS: u32 = 40;
const ETA_SCAN_CAP: i64 = 1 << 20;
pub const DELTA_COVER_MAX_DEPTH: usize = 64;
pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const DEFAULT_STEP_CAP: usize = 200_000;

/// An affine map `x ↦ Mx + c` between coordinate spaces of any dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Affine {
    pub matrix: Matrix,
    #[serde(with = "scalar::serde_q_vec")]
    pub offset: Vec<Scalar>,
}

impl Affine {
    pub fn apply(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        let y = self.matrix.mul_vec(x)?;
        Ok(y.into_iter().zip(&self.offset).map(|(a, b)| a + b).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JetCoveringSystem {
    #[serde(rename = "N")]
    pub n_jet: usize,
    #[serde(with = "scalar::serde_q")]
    pub lambda: Scalar,
    /// Coefficients of `P`, `b[n] = 1`.
    #[serde(with = "scalar::serde_q_vec")]
    pub b: Vec<Scalar>,
    #[serde(rename = "J")]
    pub j: Matrix,
    #[serde(rename = "T", with = "scalar::serde_q_vec")]
    pub t: Vec<Scalar>,
    pub pi: Matrix,
    #[serde(with = "scalar::serde_q")]
    pub eta: Scalar,
    /// Closure of the open box `Δ`; axis `k` is `[−η^{n−k}, η^{n−k}]`.
    #[serde(rename = "Delta")]
    pub delta: BoxN,
}

fn eta_slack(eta: &Scalar, l1: &Scalar, n: usize) -> Scalar {
    eta + Scalar::one() - l1 * scalar::pow(eta, n as i32)
}

/// Point of the η grid `1 + j·2^-bits` maximising the slack `(η+1) − η^n·S`,
/// starting at `bits = ETA_BITS` and refining only when no point of the
/// coarser grid is feasible. The slack is concave in η, so each scan stops as
/// soon as it decreases.
fn choose_eta(l1: &Scalar, n: usize) -> Result<Scalar> {
    for bits in ETA_BITS..=ETA_MAX_BITS {
        let mut best: Option<(Scalar, Scalar)> = None;
        for j in 1..=ETA_SCAN_CAP {
            let eta = Scalar::one() + scalar::dyadic(j, bits);
            let slack = eta_slack(&eta, l1, n);
            match &best {
                Some((_, s)) if &slack <= s => break,
                _ => best = Some((eta, slack)),
            }
        }
        if let Some((eta, slack)) = best {
            if slack.is_positive() {
                return Ok(eta);
            }
        }
    }
    Err(Error::ConstructionInvalid(format!(
        "no η on the 2^-{ETA_MAX_BITS} grid satisfies η^n·Σ|b_j| < η+1 (Σ|b_j| = {l1}); choose λ closer to 1"
    )))
}

impl JetCoveringSystem {
    /// Builds the system for `P` (coefficients `b`, monic) at `λ`, choosing η
    /// on the grid and verifying every invariant before returning.
    pub fn build(n_jet: usize, lambda: &Scalar, p: &Polynomial) -> Result<Self> {
        if !lambda.is_positive() || lambda >= &Scalar::one() {
            return Err(Error::InvalidInput(format!("λ must lie in (0, 1), got {lambda}")));
        }
        let n = p.degree();
        if n_jet == 0 || n < n_jet {
            return Err(Error::InvalidInput(format!("need deg P ≥ N ≥ 1, got N={n_jet}, deg={n}")));
        }
        if !p.leading().is_one() || p.coeffs()[0].is_zero() {
            return Err(Error::ConstructionInvalid("P must be monic with b₀ ≠ 0".into()));
        }
        let l1 = p.l1_nonleading();
        if l1 >= scalar::int(2) {
            return Err(Error::ConstructionInvalid(format!("Σ|b_j| = {l1} is not below 2")));
        }
        let table = b_polynomials(p, lambda, n_jet)
            .map_err(|e| Error::ConstructionInvalid(format!("P does not vanish to order N at 1/λ: {e}")))?;
        let pi = projection_matrix(&table, n_jet);
        if pi.rank() != n_jet {
            return Err(Error::ConstructionInvalid(format!("rank(π) = {} ≠ N = {n_jet}", pi.rank())));
        }
        let eta = choose_eta(&l1, n)?;
        let delta = BoxN::new(
            (0..n).map(|k| Interval::symmetric(scalar::pow(&eta, (n - k) as i32)).expect("η > 0")).collect(),
        )?;
        let (j, t) = shift_normal_form(lambda, n_jet);
        let sys = JetCoveringSystem { n_jet, lambda: lambda.clone(), b: p.coeffs().to_vec(), j, t, pi, eta, delta };
        sys.verify_semiconjugacy()?;
        Ok(sys)
    }

    /// Rescales `q` to `λ` and builds the system; `λ` too small is reported
    /// as a construction error carrying the offending sum.
    pub fn from_flat(q: &FlatPolyResult, lambda: &Scalar) -> Result<Self> {
        match scale_to_p(q, lambda)? {
            ScaleVerdict::Accepted(s) => Self::build(q.n_vanish, lambda, &s.p),
            ScaleVerdict::LambdaTooSmall { l1, .. } => {
                Err(Error::ConstructionInvalid(format!("λ = {lambda} too small: Σ|b_j| = {l1} ≥ 2")))
            }
        }
    }

    /// Degree `n` of `P`, the dimension of the shift coordinates.
    pub fn degree(&self) -> usize {
        self.b.len() - 1
    }

    /// `Σ_{j<n} |b_j|`.
    pub fn l1(&self) -> Scalar {
        self.b[..self.degree()].iter().fold(Scalar::zero(), |acc, c| acc + c.abs())
    }

    /// `s(u) = Σ_{j<n} b_j u_{j−n}`.
    pub fn functional(&self, u: &[Scalar]) -> Scalar {
        u.iter().zip(&self.b).fold(Scalar::zero(), |acc, (x, c)| acc + c * x)
    }

    /// `sup |s|` over `Closure(Δ)`: `Σ_{j<n} |b_j| η^{n−j}`.
    pub fn functional_range(&self) -> Scalar {
        let n = self.degree();
        (0..n).fold(Scalar::zero(), |acc, j| acc + self.b[j].abs() * scalar::pow(&self.eta, (n - j) as i32))
    }

    /// `max_m Σ_k |π_{mk}| η^{n−k}`, the ∞-norm bound of `π(Δ)`.
    pub fn projection_bound(&self) -> Scalar {
        let n = self.degree();
        (0..self.n_jet)
            .map(|m| {
                (0..n).fold(Scalar::zero(), |acc, k| acc + self.pi[(m, k)].abs() * scalar::pow(&self.eta, (n - k) as i32))
            })
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    /// `F_δ(X) = JX + δT` with `δ = ±1` for symbol 0/1.
    pub fn jet_map(&self, symbol: usize) -> Affine {
        let d = scalar::int(pm_sign(symbol));
        Affine { matrix: self.j.clone(), offset: self.t.iter().map(|x| x * &d).collect() }
    }

    /// `S_δ`: `v ↦ ((δ − Σ_{j≥1} b_j v_{j−1}) / b₀, v₀, …, v_{n−2})`.
    pub fn shift_map(&self, symbol: usize) -> Affine {
        let n = self.degree();
        let d = scalar::int(pm_sign(symbol));
        let mut m = Matrix::zeros(n, n);
        for j in 1..=n {
            m[(0, j - 1)] = -&self.b[j] / &self.b[0];
        }
        for k in 1..n {
            m[(k, k - 1)] = Scalar::one();
        }
        let mut offset = vec![Scalar::zero(); n];
        offset[0] = d / &self.b[0];
        Affine { matrix: m, offset }
    }

    /// `S_δ⁻¹`: drop `u_{−n}` and append `u₀ = δ − s(u)`.
    pub fn shift_inverse(&self, u: &[Scalar], symbol: usize) -> Vec<Scalar> {
        let u0 = scalar::int(pm_sign(symbol)) - self.functional(u);
        let mut out: Vec<Scalar> = u[1..].to_vec();
        out.push(u0);
        out
    }

    /// The symbol whose appended coordinate stays in `(−η, η)`, preferring `+1`.
    pub fn choose_delta(&self, u: &[Scalar]) -> Option<usize> {
        let s = self.functional(u);
        (0..2).find(|&sym| (scalar::int(pm_sign(sym)) - &s).abs() < self.eta)
    }

    /// Residuals `Jπ − πM` and `δT − π c` for each `S_δ = (M, c)`; both must
    /// vanish identically.
    pub fn semiconjugacy_residuals(&self) -> Result<[(Matrix, Vec<Scalar>); 2]> {
        let jpi = self.j.mul(&self.pi)?;
        let residual = |sym: usize| -> Result<(Matrix, Vec<Scalar>)> {
            let s = self.shift_map(sym);
            let lhs = self.jet_map(sym);
            let m = jpi.sub(&self.pi.mul(&s.matrix)?)?;
            let pc = self.pi.mul_vec(&s.offset)?;
            let off = lhs.offset.iter().zip(&pc).map(|(a, b)| a - b).collect();
            Ok((m, off))
        };
        Ok([residual(0)?, residual(1)?])
    }

    /// Checks `F_δ∘π = π∘S_δ` exactly for `δ = ±1`.
    pub fn verify_semiconjugacy(&self) -> Result<[(Matrix, Vec<Scalar>); 2]> {
        let res = self.semiconjugacy_residuals()?;
        for (sym, (m, off)) in res.iter().enumerate() {
            let d = if sym == 0 { "+1" } else { "-1" };
            if let Some((i, v)) = off.iter().enumerate().find(|(_, v)| !v.is_zero()) {
                return Err(Error::ConstructionInvalid(format!("semi-conjugacy fails for δ={d}: offset entry {i} is {v}")));
            }
            if let Some((i, k, v)) = m.first_nonzero() {
                return Err(Error::ConstructionInvalid(format!(
                    "semi-conjugacy fails for δ={d}: matrix entry ({i}, {k}) is {v}"
                )));
            }
        }
        Ok(res)
    }
}

/// Proof that `Closure(Δ) ⊂ S₊(Δ) ∪ S₋(Δ)`: the analytic inequality plus a
/// partition of the range of `s` into cells each inside one window
/// `(δ−η, δ+η)` shrunk by `margin`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaCoveringCertificate {
    #[serde(with = "scalar::serde_q")]
    pub eta: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub range: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub margin: Scalar,
    pub analytic: bool,
    pub depth: usize,
    /// `(cell, symbol)`; symbol 0 is `δ = +1`.
    pub leaves: Vec<(Interval, usize)>,
}

fn window(eta: &Scalar, symbol: usize) -> Interval {
    let d = scalar::int(pm_sign(symbol));
    Interval::new(&d - eta, &d + eta).expect("η > 0")
}

fn window_witness(eta: &Scalar, margin: &Scalar, cell: &Interval) -> Option<usize> {
    (0..2).find(|&sym| window(eta, sym).shrink(margin).is_some_and(|w| w.contains_interval(cell)))
}

fn analytic_covering(sys: &JetCoveringSystem) -> bool {
    let n = sys.degree();
    sys.eta > Scalar::one() && sys.l1() * scalar::pow(&sys.eta, n as i32) < &sys.eta + Scalar::one()
}

pub fn certify_delta_covering(sys: &JetCoveringSystem) -> Result<DeltaCoveringCertificate> {
    if !analytic_covering(sys) {
        return Err(Error::ConstructionInvalid(format!(
            "η^n·Σ|b_j| < η+1 fails for η = {} (Σ|b_j| = {})",
            sys.eta,
            sys.l1()
        )));
    }
    let range = sys.functional_range();
    let one = Scalar::one();
    let margin = std::cmp::min(&sys.eta - &one, &one + &sys.eta - &range) / scalar::int(2);
    if !margin.is_positive() {
        return Err(Error::ConstructionInvalid(format!("range of s reaches ±{range}, outside (−1−η, 1+η)")));
    }
    let root = BoxN::new(vec![Interval::symmetric(range.clone())?])?;
    match subdivide(&root, DELTA_COVER_MAX_DEPTH, |cell| window_witness(&sys.eta, &margin, cell.axis(0))) {
        Subdivision::Covered { leaves, depth } => Ok(DeltaCoveringCertificate {
            eta: sys.eta.clone(),
            range,
            margin,
            analytic: true,
            depth,
            leaves: leaves.into_iter().map(|(b, w)| (b.axis(0).clone(), w)).collect(),
        }),
        Subdivision::Uncovered { witness_box, .. } => Err(Error::ConstructionInvalid(format!(
            "cell [{}, {}] of the range of s fits in neither window",
            witness_box.axis(0).lo(),
            witness_box.axis(0).hi()
        ))),
    }
}

/// Re-derives the range and inequality from `sys` and replays the partition.
pub fn check_delta_certificate(sys: &JetCoveringSystem, cert: &DeltaCoveringCertificate) -> Result<bool> {
    if cert.eta != sys.eta || cert.range != sys.functional_range() || !cert.margin.is_positive() {
        return Ok(false);
    }
    if !analytic_covering(sys) {
        return Ok(false);
    }
    let root = match Interval::symmetric(cert.range.clone()) {
        Ok(i) => BoxN::new(vec![i])?,
        Err(_) => return Ok(false),
    };
    let cells: Vec<BoxN> = cert.leaves.iter().map(|(c, _)| BoxN::new(vec![c.clone()])).collect::<Result<_>>()?;
    Ok(replay_partition(&root, DELTA_COVER_MAX_DEPTH, &cells, |i| {
        let (cell, sym) = &cert.leaves[i];
        *sym < 2 && window(&sys.eta, *sym).shrink(&cert.margin).is_some_and(|w| w.contains_interval(cell))
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// `π u = ĵ_rev` with `u` inside `Δ` shrunk by `margin` on every axis.
    InA { witness: Vec<Scalar>, margin: Scalar },
    NotCertified { best_margin: Option<Scalar> },
}

/// Maximises the uniform box margin `t` subject to `π u = ĵ_rev` and
/// `|u_k| ≤ c_k − t`, `c_k = η^{n−k}`. With `p = u + c − t ≥ 0` and slack
/// `w ≥ 0` this reads `π p + t·π𝟙 = ĵ_rev + πc`, `p_k + w_k + 2t = 2c_k`.
pub fn membership_a(sys: &JetCoveringSystem, jet: &Jet, slack: &Scalar) -> Result<Membership> {
    if jet.dim() != 1 || jet.order() + 1 != sys.n_jet {
        return Err(Error::Shape(format!("expected a scalar jet of order {}", sys.n_jet - 1)));
    }
    if slack.is_negative() {
        return Err(Error::InvalidInput("slack must be non-negative".into()));
    }
    let n = sys.degree();
    let nn = sys.n_jet;
    let target = reverse_jet(jet)?.scalar_coeffs();
    let c: Vec<Scalar> = sys.delta.intervals().iter().map(|i| i.hi().clone()).collect();
    let pc = sys.pi.mul_vec(&c)?;
    // variables: t, p (n), w (n)
    let nv = 2 * n + 1;
    let mut a = Matrix::zeros(nn + n, nv);
    let mut rhs = vec![Scalar::zero(); nn + n];
    for m in 0..nn {
        // clear denominators row by row to keep the tableau small
        let row = sys.pi.row(m);
        let scale = row
            .iter()
            .chain([&target[m], &pc[m]])
            .fold(BigInt::one(), |acc, v| num_integer::Integer::lcm(&acc, v.denom()));
        let scale = Scalar::from_integer(scale);
        let mut row_sum = Scalar::zero();
        for k in 0..n {
            a[(m, 1 + k)] = &row[k] * &scale;
            row_sum += &row[k];
        }
        a[(m, 0)] = row_sum * &scale;
        rhs[m] = (&target[m] + &pc[m]) * &scale;
    }
    for k in 0..n {
        let r = nn + k;
        a[(r, 0)] = scalar::int(2);
        a[(r, 1 + k)] = Scalar::one();
        a[(r, 1 + n + k)] = Scalar::one();
        rhs[r] = scalar::int(2) * &c[k];
    }
    let mut obj = vec![Scalar::zero(); nv];
    obj[0] = -Scalar::one();
    match lp_solve(&LpProblem::standard(obj, a, rhs))? {
        LpOutcome::Optimal(sol) => {
            let t = sol.primal[0].clone();
            let u: Vec<Scalar> = (0..n).map(|k| &sol.primal[1 + k] - &c[k] + &t).collect();
            if t.is_positive() && &t >= slack {
                if sys.pi.mul_vec(&u)? != target || !sys.delta.contains_point(&u) {
                    return Err(Error::Internal("membership witness does not reproduce the jet".into()));
                }
                Ok(Membership::InA { witness: u, margin: t })
            } else {
                Ok(Membership::NotCertified { best_margin: Some(t) })
            }
        }
        LpOutcome::Infeasible => Ok(Membership::NotCertified { best_margin: None }),
        LpOutcome::Unbounded => Err(Error::Internal("membership LP is bounded by construction".into())),
    }
}

/// Runs `k` greedy steps from `u`, calling `visit` on every state including
/// the first. With `precision = Some(bits)` each appended coordinate is
/// rounded toward zero onto `2^-bits`, which keeps it inside `(−η, η)`.
pub fn greedy_walk<F>(
    sys: &JetCoveringSystem,
    u: &[Scalar],
    k: usize,
    precision: Option<u32>,
    mut visit: F,
) -> Result<Vec<usize>>
where
    F: FnMut(&[Scalar]),
{
    let mut cur = u.to_vec();
    let mut symbols = Vec::with_capacity(k);
    visit(&cur);
    for step in 0..k {
        let sym = sys.choose_delta(&cur).ok_or_else(|| {
            Error::ConstructionInvalid(format!("no δ keeps the shifted point in Δ at step {step}"))
        })?;
        let mut next = sys.shift_inverse(&cur, sym);
        if let Some(bits) = precision {
            let last = next.last_mut().expect("n ≥ 1");
            *last = scalar::truncate_dyadic(last, bits);
        }
        symbols.push(sym);
        cur = next;
        visit(&cur);
    }
    Ok(symbols)
}

/// Fixed-point version of [`greedy_walk`]: `u` is first truncated toward
/// zero onto `2^-bits`, then every step runs in integers over the common
/// denominator of the `b_j`.
pub fn greedy_word_fixed(sys: &JetCoveringSystem, u: &[Scalar], k: usize, bits: u32) -> Result<Vec<usize>> {
    let n = sys.degree();
    let den = sys.b[..n].iter().fold(BigInt::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
    let coef: Vec<BigInt> = sys.b[..n].iter().map(|c| c.numer() * (&den / c.denom())).collect();
    let scale = BigInt::one() << bits as usize;
    let dscale = &den * &scale;
    // |δ·D·2^bits − Σ B_j U_j| < η·D·2^bits  ⇔  |…|·η_den < η_num·D·2^bits
    let bound = sys.eta.numer() * &dscale;
    let eta_den = sys.eta.denom().clone();
    let mut state: std::collections::VecDeque<BigInt> =
        u.iter().map(|x| scalar::truncate_dyadic(x, bits).numer() * (&scale / scalar::truncate_dyadic(x, bits).denom())).collect();
    let mut symbols = Vec::with_capacity(k);
    for step in 0..k {
        let s: BigInt = coef.iter().zip(state.iter()).map(|(c, x)| c * x).sum();
        let (sym, num) = (0..2)
            .map(|sym| (sym, BigInt::from(pm_sign(sym)) * &dscale - &s))
            .find(|(_, num)| num.abs() * &eta_den < bound)
            .ok_or_else(|| Error::ConstructionInvalid(format!("no δ keeps the shifted point in Δ at step {step}")))?;
        state.pop_front();
        // BigInt division truncates toward zero
        state.push_back(num / &den);
        symbols.push(sym);
    }
    Ok(symbols)
}

/// Row sums of `q^k J^k` for `λ = p/q`; all entries are non-negative so the
/// maximum is `q^k ‖J^k‖∞`.
struct PowerNorms {
    p: BigInt,
    q: BigInt,
    n_jet: usize,
    rows: Vec<BigInt>,
    qk: BigInt,
    k: usize,
}

impl PowerNorms {
    fn new(lambda: &Scalar, n_jet: usize) -> Self {
        PowerNorms {
            p: lambda.numer().clone(),
            q: lambda.denom().clone(),
            n_jet,
            rows: vec![BigInt::one(); n_jet],
            qk: BigInt::one(),
            k: 0,
        }
    }

    fn advance(&mut self) {
        let n = self.n_jet;
        let next = (0..n)
            .map(|m| {
                let mut v = &self.p * &self.rows[m];
                if m + 1 < n {
                    v += &self.q * BigInt::from(n - 1 - m) * &self.rows[m + 1];
                }
                v
            })
            .collect();
        self.rows = next;
        self.qk *= &self.q;
        self.k += 1;
    }

    fn max_row(&self) -> &BigInt {
        self.rows.iter().max().expect("N ≥ 1")
    }

    fn norm(&self) -> Scalar {
        Scalar::new(self.max_row().clone(), self.qk.clone())
    }
}

/// `‖J^k‖∞ · ‖π(Δ)‖∞`.
pub fn residual_bound(sys: &JetCoveringSystem, k: usize) -> Scalar {
    let mut pn = PowerNorms::new(&sys.lambda, sys.n_jet);
    for _ in 0..k {
        pn.advance();
    }
    pn.norm() * sys.projection_bound()
}

/// Smallest `k ≤ cap` with `residual_bound(k) ≤ tol`, compared as integers.
pub fn minimal_steps(sys: &JetCoveringSystem, tol: &Scalar, cap: usize) -> Result<usize> {
    if !tol.is_positive() {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let e = sys.projection_bound();
    let lhs_scale = e.numer() * tol.denom();
    let rhs_scale = tol.numer() * e.denom();
    let mut pn = PowerNorms::new(&sys.lambda, sys.n_jet);
    loop {
        if pn.max_row() * &lhs_scale <= &rhs_scale * &pn.qk {
            return Ok(pn.k);
        }
        if pn.k >= cap {
            return Err(Error::Resource(format!("residual bound stays above {tol} for {cap} steps")));
        }
        pn.advance();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealizationResult {
    #[serde(serialize_with = "serialize_pm_word")]
    pub itinerary: Itinerary,
    pub steps: usize,
    #[serde(with = "scalar::serde_q")]
    pub achieved_residual: Scalar,
    #[serde(with = "scalar::serde_q")]
    pub residual_bound: Scalar,
    /// Interior margin of the starting point in `Δ`.
    #[serde(with = "scalar::serde_q")]
    pub margin: Scalar,
}

fn serialize_pm_word<S: serde::Serializer>(w: &Itinerary, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.render(&pm_alphabet()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealizeOptions {
    /// `None` keeps the trajectory exact.
    pub precision: Option<u32>,
    pub step_cap: usize,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions { precision: Some(DEFAULT_PRECISION_BITS), step_cap: DEFAULT_STEP_CAP }
    }
}

/// Finds a word whose continuation jet is within `tol` of `target`, then
/// recomputes that jet exactly and checks the residual against the bound.
pub fn realize_jet(sys: &JetCoveringSystem, target: &Jet, tol: &Scalar, opts: RealizeOptions) -> Result<RealizationResult> {
    let (u, margin) = match membership_a(sys, target, &Scalar::zero())? {
        Membership::InA { witness, margin } => (witness, margin),
        Membership::NotCertified { .. } => return Err(Error::NotInA),
    };
    let k = minimal_steps(sys, tol, opts.step_cap)?;
    let symbols = match opts.precision {
        Some(bits) => greedy_word_fixed(sys, &u, k, bits)?,
        None => greedy_walk(sys, &u, k, None, |_| {})?,
    };
    let itinerary = Itinerary::new(symbols);
    let realized = pm_continuation_jet(&sys.lambda, &itinerary, sys.n_jet - 1)?;
    let achieved = target.sub(&realized)?.inf_norm();
    let bound = residual_bound(sys, k);
    if achieved > bound {
        return Err(Error::ConstructionInvalid(format!("realized residual {achieved} exceeds the bound {bound}")));
    }
    Ok(RealizationResult { itinerary, steps: k, achieved_residual: achieved, residual_bound: bound, margin })
}

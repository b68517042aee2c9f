//! Flat polynomials: monic `Q` with `(x−1)^N | Q` and `Σ_{i<n} |aᵢ| < 2`,
//! found by exact L1 minimisation, then rescaled to `P(x) = λ⁻ⁿQ(λx)`.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lp::{lp_solve, LpOutcome, LpProblem};
use crate::scalar::{self, Scalar};

pub const DEFAULT_MARGIN: (i64, i64) = (1, 16);
pub const DEFAULT_N_MAX: usize = 64;
/// Grid resolution of [`lambda_threshold`] is `2^-THRESHOLD_BITS`.
pub const THRESHOLD_BITS: u32 = 20;

/// Dense coefficients, index = power. Trailing zeros are trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Polynomial {
    #[serde(with = "scalar::serde_q_vec")]
    coeffs: Vec<Scalar>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Scalar::zero());
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> &Scalar {
        self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(Scalar::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![Scalar::zero()]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Scalar::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn nth_derivative(&self, k: usize) -> Polynomial {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    /// Synthetic division by `(x − c)`: quotient and remainder.
    pub fn div_linear(&self, c: &Scalar) -> (Polynomial, Scalar) {
        let n = self.degree();
        if n == 0 {
            return (Polynomial::new(vec![Scalar::zero()]), self.coeffs[0].clone());
        }
        let mut q = vec![Scalar::zero(); n];
        let mut carry = Scalar::zero();
        for i in (0..=n).rev() {
            let v = &self.coeffs[i] + &carry * c;
            if i == 0 {
                return (Polynomial::new(q), v);
            }
            q[i - 1] = v.clone();
            carry = v;
        }
        unreachable!()
    }

    /// Number of times `(x − 1)` divides exactly, found by repeated synthetic
    /// division.
    pub fn multiplicity_at_one(&self) -> usize {
        let one = Scalar::one();
        let mut p = self.clone();
        let mut m = 0;
        while !p.is_zero() && p.degree() > 0 {
            let (q, r) = p.div_linear(&one);
            if !r.is_zero() {
                break;
            }
            p = q;
            m += 1;
        }
        m
    }

    /// `Σ_{i<deg} |aᵢ|`.
    pub fn l1_nonleading(&self) -> Scalar {
        self.coeffs[..self.degree()].iter().fold(Scalar::zero(), |acc, c| acc + c.abs())
    }

    /// Divides out the largest power of `x`.
    pub fn strip_x_power(&self) -> (Polynomial, usize) {
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count().min(self.degree());
        (Polynomial::new(self.coeffs[k..].to_vec()), k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlatPolyResult {
    pub q: Polynomial,
    /// `(x − 1)^N` divides `q`.
    pub n_vanish: usize,
    pub degree: usize,
    #[serde(with = "scalar::serde_q")]
    pub l1_nonleading: Scalar,
    /// Degree of the LP that produced `q`, before any `x^k` was divided out.
    pub lp_degree: usize,
    /// Optimal dual vector of that LP; `rhsᵀ·dual` equals the optimum.
    #[serde(with = "scalar::serde_q_vec")]
    pub dual: Vec<Scalar>,
    /// `(degree, optimum)` for every LP solved while escalating.
    #[serde(serialize_with = "serialize_history")]
    pub history: Vec<(usize, Scalar)>,
}

fn serialize_history<S: serde::Serializer>(h: &[(usize, Scalar)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(h.iter().map(|(n, v)| (n, scalar::format(v))))
}

fn binom(n: usize, k: usize) -> Scalar {
    Scalar::from_integer(binomial(BigInt::from(n), BigInt::from(k)))
}

/// Minimises `Σ_{i<n}|aᵢ|` over monic degree-`n` polynomials with
/// `Q⁽ⁱ⁾(1) = 0` for `i < N`, encoding `aᵢ = pᵢ − qᵢ`.
pub fn minimal_flat_poly(n_vanish: usize, degree: usize) -> Result<FlatPolyResult> {
    if n_vanish == 0 || degree < n_vanish {
        return Err(Error::InvalidInput(format!("need degree ≥ N ≥ 1, got N={n_vanish}, n={degree}")));
    }
    let n = degree;
    // Q⁽ⁱ⁾(1)/i! = Σ_j C(j,i) a_j + C(n,i)
    let mut a = Matrix::zeros(n_vanish, 2 * n);
    let mut rhs = Vec::with_capacity(n_vanish);
    for i in 0..n_vanish {
        for j in 0..n {
            let c = binom(j, i);
            a[(i, j)] = c.clone();
            a[(i, n + j)] = -c;
        }
        rhs.push(-binom(n, i));
    }
    let problem = LpProblem::standard(vec![Scalar::one(); 2 * n], a, rhs);
    let sol = match lp_solve(&problem)? {
        LpOutcome::Optimal(s) => s,
        other => return Err(Error::Internal(format!("flat-polynomial LP returned {other:?}"))),
    };
    let mut coeffs: Vec<Scalar> = (0..n).map(|j| &sol.primal[j] - &sol.primal[n + j]).collect();
    coeffs.push(Scalar::one());
    let q = Polynomial::new(coeffs);
    if q.multiplicity_at_one() < n_vanish {
        return Err(Error::Internal("LP optimum is not divisible by (x-1)^N".into()));
    }
    let l1 = q.l1_nonleading();
    if l1 != sol.objective {
        return Err(Error::Internal("L1 norm disagrees with the LP optimum".into()));
    }
    Ok(FlatPolyResult {
        q,
        n_vanish,
        degree: n,
        l1_nonleading: l1.clone(),
        lp_degree: n,
        dual: sol.dual,
        history: vec![(n, l1)],
    })
}

/// Escalates the degree from `N` until the optimum is at most `2 − margin`,
/// then divides out `x^k` so that `a₀ ≠ 0`.
pub fn find_flat_poly(n_vanish: usize, margin: &Scalar, n_max: usize) -> Result<FlatPolyResult> {
    let two = scalar::int(2);
    if !margin.is_positive() || margin >= &two {
        return Err(Error::InvalidInput(format!("margin must lie in (0, 2), got {margin}")));
    }
    if n_vanish == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let target = &two - margin;
    let mut history: Vec<(usize, Scalar)> = Vec::new();
    let mut best: Option<Scalar> = None;
    for n in n_vanish..=n_max {
        let mut res = minimal_flat_poly(n_vanish, n)?;
        if let Some(prev) = &best {
            if res.l1_nonleading > *prev {
                return Err(Error::Internal(format!("optimum increased from {prev} at degree {n}")));
            }
        }
        best = Some(res.l1_nonleading.clone());
        history.push((n, res.l1_nonleading.clone()));
        if res.l1_nonleading <= target {
            let (q, _) = res.q.strip_x_power();
            if q.l1_nonleading() != res.l1_nonleading || q.multiplicity_at_one() < n_vanish {
                return Err(Error::Internal("x^k normalisation changed the polynomial's properties".into()));
            }
            res.degree = q.degree();
            res.q = q;
            res.history = history;
            return Ok(res);
        }
    }
    Err(Error::SearchExhausted { n_max, best: best.unwrap_or_else(|| two.clone()) })
}

/// Smallest `λ` on the grid `m·2^-20` with `Σ_{j<n} |aⱼ| λ^{j−n} < 2`.
pub fn lambda_threshold(q: &FlatPolyResult) -> Result<Scalar> {
    if q.l1_nonleading >= scalar::int(2) {
        return Err(Error::InvalidInput(format!("L1 norm {} is not below 2", q.l1_nonleading)));
    }
    let n = q.q.degree();
    let a = q.q.coeffs();
    let passes = |m: i64| -> bool {
        if m == 0 {
            return false;
        }
        let lambda = scalar::dyadic(m, THRESHOLD_BITS);
        let inv = Scalar::one() / lambda;
        let s = (0..n).fold(Scalar::zero(), |acc, j| acc + a[j].abs() * scalar::pow(&inv, (n - j) as i32));
        s < scalar::int(2)
    };
    let (mut lo, mut hi) = (0i64, 1i64 << THRESHOLD_BITS);
    // invariant: passes(hi), !passes(lo)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(scalar::dyadic(hi, THRESHOLD_BITS))
}

/// Grid of [`auto_lambda`] is `2^-AUTO_LAMBDA_BITS`.
pub const AUTO_LAMBDA_BITS: u32 = 10;

/// Midpoint of `[threshold, 1]`, rounded up onto the `2^-10` grid.
pub fn auto_lambda(q: &FlatPolyResult) -> Result<Scalar> {
    let mid = (lambda_threshold(q)? + Scalar::one()) / scalar::int(2);
    let den = BigInt::one() << AUTO_LAMBDA_BITS as usize;
    let m = (mid * Scalar::from_integer(den.clone())).ceil().to_integer();
    let lambda = Scalar::new(m, den);
    if lambda >= Scalar::one() {
        return Err(Error::InvalidInput("λ threshold is too close to 1 for the automatic grid".into()));
    }
    Ok(lambda)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    /// (i) `b₀ ≠ 0` and `bₙ = 1`.
    pub monic_nonzero_constant: bool,
    /// (ii) `Σ_{j<n} |bⱼ| < 2`.
    pub l1_below_two: bool,
    /// (iii) `P⁽ⁱ⁾(1/λ) = 0` for `i < N`.
    pub vanishes_at_inverse_lambda: bool,
    /// (iv) the projection built from the `Bₖ⁽ⁱ⁾(λ)` has rank `N`.
    pub projection_full_rank: bool,
    #[serde(with = "scalar::serde_q")]
    pub l1: Scalar,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.monic_nonzero_constant && self.l1_below_two && self.vanishes_at_inverse_lambda && self.projection_full_rank
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaledPolynomial {
    pub p: Polynomial,
    #[serde(with = "scalar::serde_q")]
    pub lambda: Scalar,
    pub n_vanish: usize,
    pub report: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScaleVerdict {
    Accepted(ScaledPolynomial),
    /// Condition (ii) fails; carries the exact `Σ|bⱼ|`.
    LambdaTooSmall { l1: Scalar, report: ConditionReport },
}

/// `P(x) = λ⁻ⁿ Q(λx)`, i.e. `bⱼ = aⱼ λ^{j−n}`, with all four conditions
/// checked exactly.
pub fn scale_to_p(q: &FlatPolyResult, lambda: &Scalar) -> Result<ScaleVerdict> {
    if !lambda.is_positive() || lambda >= &Scalar::one() {
        return Err(Error::InvalidInput(format!("λ must lie in (0, 1), got {lambda}")));
    }
    let n = q.q.degree();
    let n_vanish = q.n_vanish;
    let inv = Scalar::one() / lambda;
    let b: Vec<Scalar> =
        q.q.coeffs().iter().enumerate().map(|(j, a)| a * scalar::pow(&inv, (n - j) as i32)).collect();
    let p = Polynomial::new(b);
    let l1 = p.l1_nonleading();
    let monic_nonzero_constant = p.degree() == n && p.leading().is_one() && !p.coeffs()[0].is_zero();
    let vanishes_at_inverse_lambda = (0..n_vanish).all(|i| p.nth_derivative(i).eval(&inv).is_zero());
    let projection_full_rank = monic_nonzero_constant
        && vanishes_at_inverse_lambda
        && b_polynomials(&p, lambda, n_vanish).map(|t| projection_matrix(&t, n_vanish).rank() == n_vanish)?;
    let report = ConditionReport {
        monic_nonzero_constant,
        l1_below_two: l1 < scalar::int(2),
        vanishes_at_inverse_lambda,
        projection_full_rank,
        l1: l1.clone(),
    };
    if !(report.monic_nonzero_constant && report.vanishes_at_inverse_lambda && report.projection_full_rank) {
        return Err(Error::ConstructionInvalid(format!("scaled polynomial fails structural conditions: {report:?}")));
    }
    if !report.l1_below_two {
        return Ok(ScaleVerdict::LambdaTooSmall { l1, report });
    }
    Ok(ScaleVerdict::Accepted(ScaledPolynomial { p, lambda: lambda.clone(), n_vanish, report }))
}

/// `table[k][i] = Bₖ⁽ⁱ⁾(λ)` for `0 ≤ k ≤ n`, `0 ≤ i < N`, where
/// `Bₖ(x) = Σ_{j≤k} bⱼ x^{k−j}` and derivatives are raw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BTable {
    pub table: Vec<Vec<Scalar>>,
}

impl BTable {
    pub fn get(&self, k: usize, i: usize) -> &Scalar {
        &self.table[k][i]
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// The recurrence `Bₖ⁽ⁱ⁾ = λBₖ₋₁⁽ⁱ⁾ + iBₖ₋₁⁽ⁱ⁻¹⁾ (+ bₖ when i = 0)`.
fn b_table_by_recurrence(b: &[Scalar], lambda: &Scalar, n_vanish: usize) -> Vec<Vec<Scalar>> {
    let mut table = vec![vec![Scalar::zero(); n_vanish]; b.len()];
    table[0][0] = b[0].clone();
    for k in 1..b.len() {
        for i in 0..n_vanish {
            let mut v = lambda * &table[k - 1][i];
            if i == 0 {
                v += &b[k];
            } else {
                v += scalar::int(i as i64) * &table[k - 1][i - 1];
            }
            table[k][i] = v;
        }
    }
    table
}

fn b_table_direct(b: &[Scalar], lambda: &Scalar, n_vanish: usize) -> Vec<Vec<Scalar>> {
    (0..b.len())
        .map(|k| {
            // Bₖ(x) has coefficient bⱼ at power k − j
            let bk = Polynomial::new((0..=k).map(|p| b[k - p].clone()).collect());
            (0..n_vanish).map(|i| bk.nth_derivative(i).eval(lambda)).collect()
        })
        .collect()
}

/// Builds the table twice (recurrence and direct evaluation), compares the
/// two exactly and checks `Bₙ⁽ⁱ⁾(λ) = 0` and `Bₖ⁽ⁱ⁾ = 0` for `k < i`.
pub fn b_polynomials(p: &Polynomial, lambda: &Scalar, n_vanish: usize) -> Result<BTable> {
    let b = p.coeffs();
    let n = p.degree();
    if n_vanish == 0 || n < n_vanish {
        return Err(Error::InvalidInput(format!("need deg P ≥ N ≥ 1, got N={n_vanish}, deg={n}")));
    }
    let rec = b_table_by_recurrence(b, lambda, n_vanish);
    let direct = b_table_direct(b, lambda, n_vanish);
    if rec != direct {
        return Err(Error::Internal("B-polynomial recurrence disagrees with direct evaluation".into()));
    }
    if let Some(i) = (0..n_vanish).find(|&i| !rec[n][i].is_zero()) {
        return Err(Error::Internal(format!("B_n^({i})(λ) = {} is not zero", rec[n][i])));
    }
    for (k, row) in rec.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if k < i && !v.is_zero() {
                return Err(Error::Internal(format!("B_{k}^({i}) should vanish identically")));
            }
        }
    }
    Ok(BTable { table: rec })
}

/// `π: Rⁿ → R^N` with row `m` (0-based) equal to `(Bₖ^{(N−1−m)}(λ))_{k<n}`.
pub fn projection_matrix(table: &BTable, n_vanish: usize) -> Matrix {
    let n = table.len() - 1;
    let mut pi = Matrix::zeros(n_vanish, n);
    for m in 0..n_vanish {
        for k in 0..n {
            pi[(m, k)] = table.get(k, n_vanish - 1 - m).clone();
        }
    }
    pi
}

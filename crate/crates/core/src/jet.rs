//! Truncated jets at parameter 0 and the lift of parametric affine families
//! to jet space.
//!
//! Coefficients are raw derivatives: `coeffs[i] = ∂ᵢₐ x_a |ₐ₌₀`, not Taylor
//! coefficients. Products follow the Leibniz rule with binomial weights.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::Itinerary;
use crate::linalg::Matrix;
use crate::scalar::{self, Scalar};

/// Alphabet of the `x ↦ (λ+a)x ± 1` pair: index 0 is `+1`, index 1 is `−1`.
pub const PM_ALPHABET: [&str; 2] = ["+", "-"];

pub fn pm_alphabet() -> Vec<String> {
    PM_ALPHABET.iter().map(|s| s.to_string()).collect()
}

pub fn pm_sign(symbol: usize) -> i64 {
    if symbol == 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jet {
    coeffs: Vec<Vec<Scalar>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JetDoc {
    Scalar(#[serde(with = "scalar::serde_q_vec")] Vec<Scalar>),
    Vector(#[serde(with = "scalar::serde_q_mat")] Vec<Vec<Scalar>>),
}

impl Serialize for Jet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.dim() == 1 {
            JetDoc::Scalar(self.scalar_coeffs()).serialize(s)
        } else {
            JetDoc::Vector(self.coeffs.clone()).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Jet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let jet = match JetDoc::deserialize(d)? {
            JetDoc::Scalar(c) => Jet::scalar(c),
            JetDoc::Vector(c) => Jet::new(c),
        };
        jet.map_err(serde::de::Error::custom)
    }
}

impl Jet {
    pub fn new(coeffs: Vec<Vec<Scalar>>) -> Result<Self> {
        let dim = coeffs.first().map(Vec::len).ok_or_else(|| Error::Shape("a jet needs at least its value".into()))?;
        if dim == 0 || coeffs.iter().any(|c| c.len() != dim) {
            return Err(Error::Shape("jet coefficients must share one positive dimension".into()));
        }
        Ok(Jet { coeffs })
    }

    pub fn scalar(coeffs: Vec<Scalar>) -> Result<Self> {
        Jet::new(coeffs.into_iter().map(|c| vec![c]).collect())
    }

    pub fn zero(order: usize, dim: usize) -> Self {
        Jet { coeffs: vec![vec![Scalar::zero(); dim]; order + 1] }
    }

    /// The constant jet `(c, 0, …, 0)`.
    pub fn constant(c: Scalar, order: usize) -> Self {
        let mut j = Jet::zero(order, 1);
        j.coeffs[0][0] = c;
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn coeffs(&self) -> &[Vec<Scalar>] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Scalar {
        &self.coeffs[i][0]
    }

    /// Coefficients of a one-dimensional jet.
    pub fn scalar_coeffs(&self) -> Vec<Scalar> {
        self.coeffs.iter().map(|c| c[0].clone()).collect()
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_same_shape(other)?;
        Ok(Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_same_shape(other)?;
        Ok(Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        })
    }

    /// Max norm over all coefficients.
    pub fn inf_norm(&self) -> Scalar {
        scalar::abs_max(self.coeffs.iter().flatten())
    }

    fn check_same_shape(&self, other: &Jet) -> Result<()> {
        if self.order() != other.order() || self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "jets of order/dim {}/{} and {}/{}",
                self.order(),
                self.dim(),
                other.order(),
                other.dim()
            )));
        }
        Ok(())
    }
}

fn binom(n: usize, k: usize) -> Scalar {
    Scalar::from_integer(binomial(BigInt::from(n), BigInt::from(k)))
}

/// Leibniz product `(uv)ᵢ = Σⱼ C(i,j) uⱼ v_{i−j}`. A one-dimensional `u`
/// scales every component of `v`; otherwise the product is componentwise.
pub fn jet_mul(u: &Jet, v: &Jet) -> Result<Jet> {
    if u.order() != v.order() {
        return Err(Error::Shape(format!("jet orders {} and {} differ", u.order(), v.order())));
    }
    if u.dim() != 1 && u.dim() != v.dim() {
        return Err(Error::Shape(format!("jet dimensions {} and {} are incompatible", u.dim(), v.dim())));
    }
    let r = u.order();
    let dim = v.dim();
    let mut out = Jet::zero(r, dim);
    for i in 0..=r {
        for j in 0..=i {
            let c = binom(i, j);
            for d in 0..dim {
                let ud = if u.dim() == 1 { &u.coeffs[j][0] } else { &u.coeffs[j][d] };
                let term = &c * ud * &v.coeffs[i - j][d];
                out.coeffs[i][d] += term;
            }
        }
    }
    Ok(out)
}

/// `a ↦ (x ↦ α(a)·x + β(a))` given by the jets of `α` and `β` at `a = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamAffineFamily1D {
    pub alpha: Jet,
    pub beta: Jet,
}

impl ParamAffineFamily1D {
    pub fn new(alpha: Jet, beta: Jet) -> Result<Self> {
        if alpha.dim() != 1 || beta.dim() != 1 {
            return Err(Error::Shape("families on the line need one-dimensional jets".into()));
        }
        if alpha.order() != beta.order() {
            return Err(Error::Shape("alpha and beta jets must have equal order".into()));
        }
        if alpha.coeff(0).abs() >= Scalar::one() {
            return Err(Error::InvalidInput(format!("|alpha(0)| = {} is not below 1", alpha.coeff(0).abs())));
        }
        Ok(ParamAffineFamily1D { alpha, beta })
    }

    /// `x ↦ (λ + a)·x + offset`.
    pub fn linear_in_parameter(lambda: &Scalar, offset: &Scalar, order: usize) -> Result<Self> {
        let mut alpha = Jet::constant(lambda.clone(), order);
        if order >= 1 {
            alpha.coeffs[1][0] = Scalar::one();
        }
        Self::new(alpha, Jet::constant(offset.clone(), order))
    }

    pub fn order(&self) -> usize {
        self.alpha.order()
    }
}

/// The `±1` pair `x ↦ (λ+a)x ± 1`, ordered as [`PM_ALPHABET`].
pub fn pm_families(lambda: &Scalar, order: usize) -> Result<[ParamAffineFamily1D; 2]> {
    Ok([
        ParamAffineFamily1D::linear_in_parameter(lambda, &Scalar::one(), order)?,
        ParamAffineFamily1D::linear_in_parameter(lambda, &-Scalar::one(), order)?,
    ])
}

/// Induced affine action on one-dimensional jet coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JetAffineMap {
    pub matrix: Matrix,
    #[serde(with = "scalar::serde_q_vec")]
    pub offset: Vec<Scalar>,
}

impl JetAffineMap {
    pub fn apply(&self, j: &Jet) -> Result<Jet> {
        if j.dim() != 1 || j.order() + 1 != self.offset.len() {
            return Err(Error::Shape("jet does not match the lifted map".into()));
        }
        let y = self.matrix.mul_vec(&j.scalar_coeffs())?;
        Jet::scalar(y.into_iter().zip(&self.offset).map(|(a, b)| a + b).collect())
    }
}

/// `ĵ ↦ α·ĵ + β` as a lower-triangular matrix plus offset.
pub fn lift_family(family: &ParamAffineFamily1D) -> JetAffineMap {
    let r = family.order();
    let mut m = Matrix::zeros(r + 1, r + 1);
    for i in 0..=r {
        for j in 0..=i {
            m[(i, i - j)] = binom(i, j) * family.alpha.coeff(j);
        }
    }
    JetAffineMap { matrix: m, offset: family.beta.scalar_coeffs() }
}

fn check_families(families: &[ParamAffineFamily1D], word: &Itinerary, order: usize) -> Result<()> {
    if let Some(f) = families.iter().find(|f| f.order() != order) {
        return Err(Error::Shape(format!("family has order {}, expected {}", f.order(), order)));
    }
    if let Some(&s) = word.symbols().iter().find(|&&s| s >= families.len()) {
        return Err(Error::UnknownSymbol(format!("#{s}")));
    }
    Ok(())
}

/// Jet of `a ↦ f_{w[0],a} ∘ … ∘ f_{w[k−1],a}(x_a)` where `start` is the jet
/// of `x_a`.
pub fn continuation_jet_from(families: &[ParamAffineFamily1D], word: &Itinerary, start: &Jet) -> Result<Jet> {
    check_families(families, word, start.order())?;
    let lifts: Vec<JetAffineMap> = families.iter().map(lift_family).collect();
    let mut j = start.clone();
    for &s in word.symbols().iter().rev() {
        j = lifts[s].apply(&j)?;
    }
    Ok(j)
}

/// Jet at `a = 0` of the continuation of the word's image of 0.
pub fn continuation_jet(families: &[ParamAffineFamily1D], word: &Itinerary, order: usize) -> Result<Jet> {
    if word.is_empty() {
        return Err(Error::InvalidInput("continuation of the empty word".into()));
    }
    continuation_jet_from(families, word, &Jet::zero(order, 1))
}

/// Continuation jet for the `±1` pair with rational `λ = p/q`, carried as an
/// integer vector over the common denominator `q^k` so that long words stay
/// cheap.
pub fn pm_continuation_jet(lambda: &Scalar, word: &Itinerary, order: usize) -> Result<Jet> {
    let p = lambda.numer().clone();
    let q = lambda.denom().clone();
    let mut nums = vec![BigInt::zero(); order + 1];
    let mut den = BigInt::one();
    for &s in word.symbols().iter().rev() {
        if s > 1 {
            return Err(Error::UnknownSymbol(format!("#{s}")));
        }
        den *= &q;
        let mut next = Vec::with_capacity(order + 1);
        for i in 0..=order {
            let mut v = &p * &nums[i];
            if i > 0 {
                v += &q * BigInt::from(i) * &nums[i - 1];
            }
            next.push(v);
        }
        next[0] += BigInt::from(pm_sign(s)) * &den;
        nums = next;
    }
    Jet::scalar(nums.into_iter().map(|n| Scalar::new(n, den.clone())).collect())
}

/// Central finite differences of `a ↦ x_a(w)` in binary64, with an `O(h²)`
/// truncation error per order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxJet {
    pub coeffs: Vec<f64>,
    pub approximate: bool,
}

/// Binary64 finite-difference oracle for [`continuation_jet`]. Increments
/// `x_a − x_0` are propagated directly so the stencils do not difference
/// nearly equal values.
pub fn finite_difference_jet(
    families: &[ParamAffineFamily1D],
    word: &Itinerary,
    order: usize,
    h: f64,
) -> Result<ApproxJet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    if order > 4 {
        return Err(Error::Unsupported(format!("finite differences beyond order 4 (asked {order})")));
    }
    if word.is_empty() {
        return Err(Error::InvalidInput("continuation of the empty word".into()));
    }
    check_families(families, word, order)?;
    // polynomial coefficients a^i/i! of α and β, from raw derivatives
    let taylor = |j: &Jet| -> Vec<f64> {
        let mut fact = 1.0;
        (0..=j.order())
            .map(|i| {
                if i > 0 {
                    fact *= i as f64;
                }
                scalar::to_f64(j.coeff(i)) / fact
            })
            .collect()
    };
    let coeffs: Vec<(Vec<f64>, Vec<f64>)> = families.iter().map(|f| (taylor(&f.alpha), taylor(&f.beta))).collect();
    let increment = |poly: &[f64], a: f64| -> f64 {
        poly.iter().enumerate().skip(1).rev().fold(0.0, |acc, (_, c)| acc * a + c) * a
    };
    let eval = |a: f64| -> (f64, f64) {
        let (mut x0, mut d) = (0.0f64, 0.0f64);
        for &s in word.symbols().iter().rev() {
            let (al, be) = &coeffs[s];
            let dal = increment(al, a);
            let dbe = increment(be, a);
            d = (al[0] + dal) * d + dal * x0 + dbe;
            x0 = al[0] * x0 + be[0];
        }
        (x0, d)
    };
    let x0 = eval(0.0).0;
    let d = |k: f64| eval(k * h).1;
    let mut out = vec![x0];
    if order >= 1 {
        out.push((d(1.0) - d(-1.0)) / (2.0 * h));
    }
    if order >= 2 {
        out.push((d(1.0) + d(-1.0)) / (h * h));
    }
    if order >= 3 {
        out.push((d(2.0) - 2.0 * d(1.0) + 2.0 * d(-1.0) - d(-2.0)) / (2.0 * h.powi(3)));
    }
    if order >= 4 {
        out.push((d(2.0) - 4.0 * d(1.0) - 4.0 * d(-1.0) + d(-2.0)) / h.powi(4));
    }
    Ok(ApproxJet { coeffs: out, approximate: true })
}

/// Coefficient-order reversal `(x₀,…,x_r) ↦ (x_r,…,x₀)`, the change of
/// coordinates that turns the lifted `±1` maps into `X ↦ JX ± T`.
pub fn reverse_jet(j: &Jet) -> Result<Jet> {
    if j.dim() != 1 {
        return Err(Error::Shape("reversal is defined for one-dimensional jets".into()));
    }
    let mut c = j.scalar_coeffs();
    c.reverse();
    Jet::scalar(c)
}

/// `J` (diagonal `λ`, superdiagonal `N−1, …, 1`) and `T = (0,…,0,1)`.
pub fn shift_normal_form(lambda: &Scalar, n_jet: usize) -> (Matrix, Vec<Scalar>) {
    let mut j = Matrix::zeros(n_jet, n_jet);
    for m in 0..n_jet {
        j[(m, m)] = lambda.clone();
        if m + 1 < n_jet {
            j[(m, m + 1)] = scalar::int((n_jet - 1 - m) as i64);
        }
    }
    let mut t = vec![Scalar::zero(); n_jet];
    t[n_jet - 1] = Scalar::one();
    (j, t)
}

/// The order-reversal permutation matrix on `N` coordinates.
pub fn reversal_matrix(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, n - 1 - i)] = Scalar::one();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn sj(v: &[Scalar]) -> Jet {
        Jet::scalar(v.to_vec()).unwrap()
    }

    #[test]
    fn leibniz_examples() {
        let u = sj(&[ratio(3, 4), int(1), int(0)]);
        let v = sj(&[int(1), int(2), int(0)]);
        assert_eq!(jet_mul(&u, &v).unwrap(), sj(&[ratio(3, 4), ratio(5, 2), int(4)]));
        let one = Jet::constant(int(1), 2);
        let w = sj(&[ratio(1, 3), int(-7), ratio(2, 9)]);
        assert_eq!(jet_mul(&one, &w).unwrap(), w);
        assert!(jet_mul(&one, &Jet::zero(3, 1)).is_err());
    }

    #[test]
    fn lift_examples() {
        let f = ParamAffineFamily1D::linear_in_parameter(&ratio(3, 4), &int(1), 1).unwrap();
        let lift = lift_family(&f);
        let expected = Matrix::from_rows(vec![vec![ratio(3, 4), int(0)], vec![int(1), ratio(3, 4)]]).unwrap();
        assert_eq!(lift.matrix, expected);
        assert_eq!(lift.offset, vec![int(1), int(0)]);

        let f0 = ParamAffineFamily1D::linear_in_parameter(&ratio(3, 4), &int(1), 0).unwrap();
        let lift0 = lift_family(&f0);
        assert_eq!(lift0.matrix, Matrix::diagonal(&[ratio(3, 4)]));
        assert_eq!(lift0.offset, vec![int(1)]);

        let g = ParamAffineFamily1D::linear_in_parameter(&ratio(3, 4), &int(-1), 2).unwrap();
        let lift2 = lift_family(&g);
        let l = ratio(3, 4);
        let expected = Matrix::from_rows(vec![
            vec![l.clone(), int(0), int(0)],
            vec![int(1), l.clone(), int(0)],
            vec![int(0), int(2), l.clone()],
        ])
        .unwrap();
        assert_eq!(lift2.matrix, expected);
        assert_eq!(lift2.offset, vec![int(-1), int(0), int(0)]);
        // the lift agrees with the Leibniz product
        let x = sj(&[ratio(2, 5), ratio(-1, 3), int(7)]);
        let direct = jet_mul(&g.alpha, &x).unwrap().add(&g.beta).unwrap();
        assert_eq!(lift2.apply(&x).unwrap(), direct);
    }

    #[test]
    fn continuation_examples() {
        let fams = pm_families(&ratio(3, 4), 1).unwrap();
        let alpha = pm_alphabet();
        let w = |s: &str| Itinerary::parse(&alpha, s).unwrap();
        assert_eq!(continuation_jet(&fams, &w("+"), 1).unwrap(), sj(&[int(1), int(0)]));
        assert_eq!(continuation_jet(&fams, &w("++"), 1).unwrap(), sj(&[ratio(7, 4), int(1)]));
        assert_eq!(continuation_jet(&fams, &w("+-"), 1).unwrap(), sj(&[ratio(1, 4), int(-1)]));
        assert!(continuation_jet(&fams, &Itinerary::default(), 1).is_err());
        assert!(matches!(continuation_jet(&fams, &w("+"), 2), Err(Error::Shape(_))));
        assert!(matches!(continuation_jet(&fams, &Itinerary(vec![2]), 1), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn scaled_continuation_matches_generic() {
        let lambda = ratio(29, 31);
        let fams = pm_families(&lambda, 3).unwrap();
        let word = Itinerary((0..25).map(|i| (i * 7 % 3 == 0) as usize).collect());
        assert_eq!(
            pm_continuation_jet(&lambda, &word, 3).unwrap(),
            continuation_jet(&fams, &word, 3).unwrap()
        );
    }

    #[test]
    fn finite_differences_track_exact_jets() {
        let fams = pm_families(&ratio(3, 4), 2).unwrap();
        let alpha = pm_alphabet();
        let w = Itinerary::parse(&alpha, "++").unwrap();
        let fd = finite_difference_jet(&fams[..], &w, 1, 1e-4);
        assert!(fd.is_err(), "order must match the families");
        let fams1 = pm_families(&ratio(3, 4), 1).unwrap();
        let fd = finite_difference_jet(&fams1, &w, 1, 1e-4).unwrap();
        assert!((fd.coeffs[0] - 1.75).abs() < 1e-6 && (fd.coeffs[1] - 1.0).abs() < 1e-6);
        assert!(fd.approximate);

        let w = Itinerary::parse(&alpha, "+").unwrap();
        let fd = finite_difference_jet(&fams1, &w, 1, 1e-4).unwrap();
        assert_eq!(fd.coeffs, vec![1.0, 0.0]);

        let w = Itinerary::parse(&alpha, "+-").unwrap();
        let exact = continuation_jet(&fams, &w, 2).unwrap();
        let fd = finite_difference_jet(&fams, &w, 2, 1e-3).unwrap();
        assert!((fd.coeffs[2] - scalar::to_f64(exact.coeff(2))).abs() < 1e-4);

        let fams5 = pm_families(&ratio(3, 4), 5).unwrap();
        assert!(matches!(finite_difference_jet(&fams5, &w, 5, 1e-2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reversal_is_an_involution() {
        let j = sj(&[int(1), ratio(2, 3), int(-5)]);
        assert_eq!(reverse_jet(&j).unwrap(), sj(&[int(-5), ratio(2, 3), int(1)]));
        assert_eq!(reverse_jet(&reverse_jet(&j).unwrap()).unwrap(), j);
    }

    #[test]
    fn reversal_conjugates_lift_to_normal_form() {
        let l = ratio(3, 4);
        let f = ParamAffineFamily1D::linear_in_parameter(&l, &int(1), 1).unwrap();
        let lift = lift_family(&f);
        let r = reversal_matrix(2);
        let conj = r.mul(&lift.matrix).unwrap().mul(&r).unwrap();
        let (j, t) = shift_normal_form(&l, 2);
        assert_eq!(conj, Matrix::from_rows(vec![vec![l.clone(), int(1)], vec![int(0), l.clone()]]).unwrap());
        assert_eq!(conj, j);
        assert_eq!(r.mul_vec(&lift.offset).unwrap(), t);
        assert_eq!(t, vec![int(0), int(1)]);
    }

    #[test]
    fn jet_json_is_rational_strings() {
        let j = sj(&[ratio(7, 4), int(1)]);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(text, r#"["7/4","1"]"#);
        assert_eq!(serde_json::from_str::<Jet>(&text).unwrap(), j);
    }
}

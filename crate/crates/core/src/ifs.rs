//! Contracting affine iterated function systems over exact rationals.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{self, Scalar};

/// Default bound on the number of words `limit_set_cloud` will enumerate.
pub const DEFAULT_WORD_CAP: usize = 1 << 22;

/// `x ↦ matrix·x + offset` with a certified contraction bound in the max norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    matrix: Matrix,
    offset: Vec<Scalar>,
    contraction: Scalar,
}

impl AffineMap {
    /// Uses the exact operator ∞-norm as the contraction bound.
    pub fn new(matrix: Matrix, offset: Vec<Scalar>) -> Result<Self> {
        let bound = matrix.inf_norm();
        Self::with_contraction(matrix, offset, bound)
    }

    pub fn with_contraction(matrix: Matrix, offset: Vec<Scalar>, contraction: Scalar) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::Shape("affine map needs a non-empty square matrix".into()));
        }
        if offset.len() != matrix.rows() {
            return Err(Error::Shape(format!(
                "offset has {} entries, matrix is {}x{}",
                offset.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        if contraction < matrix.inf_norm() {
            return Err(Error::InvalidInput(format!(
                "contraction bound {} is below the matrix norm {}",
                contraction,
                matrix.inf_norm()
            )));
        }
        if contraction >= Scalar::one() {
            return Err(Error::InvalidInput(format!("map is not contracting (bound {contraction})")));
        }
        Ok(AffineMap { matrix, offset, contraction })
    }

    /// One-dimensional `x ↦ slope·x + offset`.
    pub fn line(slope: Scalar, offset: Scalar) -> Result<Self> {
        Self::new(Matrix::diagonal(&[slope]), vec![offset])
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &[Scalar] {
        &self.offset
    }

    pub fn contraction(&self) -> &Scalar {
        &self.contraction
    }

    pub fn apply(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        Ok(linalg::vec_add(&self.matrix.mul_vec(x)?, &self.offset))
    }
}

/// A finite family of contracting affine maps on R^n, one per symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SystemDoc", try_from = "SystemDoc")]
pub struct IFSystem {
    alphabet: Vec<String>,
    maps: Vec<AffineMap>,
    lambda_max: Scalar,
    radius: Scalar,
}

impl IFSystem {
    pub fn new(branches: Vec<(String, AffineMap)>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidInput("an IFS needs at least one map".into()));
        }
        let dim = branches[0].1.dim();
        let mut alphabet: Vec<String> = Vec::with_capacity(branches.len());
        for (label, map) in &branches {
            if map.dim() != dim {
                return Err(Error::Shape("all maps must act on the same dimension".into()));
            }
            if label.is_empty() || label.contains([',', '\n', '"']) {
                return Err(Error::InvalidInput(format!("bad symbol label `{label}`")));
            }
            if alphabet.contains(label) {
                return Err(Error::InvalidInput(format!("duplicate symbol `{label}`")));
            }
            alphabet.push(label.clone());
        }
        let maps: Vec<AffineMap> = branches.into_iter().map(|(_, m)| m).collect();
        let lambda_max = maps
            .iter()
            .map(|m| m.contraction.clone())
            .fold(Scalar::zero(), |a, b| if b > a { b } else { a });
        let offset_max = maps
            .iter()
            .map(|m| linalg::inf_norm(&m.offset))
            .fold(Scalar::zero(), |a, b| if b > a { b } else { a });
        let radius = offset_max / (Scalar::one() - &lambda_max);
        Ok(IFSystem { alphabet, maps, lambda_max, radius })
    }

    /// The pair `x ↦ λx + 1` (symbol `+`) and `x ↦ λx − 1` (symbol `-`).
    pub fn symmetric_pair(lambda: &Scalar) -> Result<Self> {
        Self::new(vec![
            ("+".into(), AffineMap::line(lambda.clone(), Scalar::one())?),
            ("-".into(), AffineMap::line(lambda.clone(), -Scalar::one())?),
        ])
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, symbol: usize) -> Result<&AffineMap> {
        self.maps.get(symbol).ok_or_else(|| Error::UnknownSymbol(format!("#{symbol}")))
    }

    pub fn lambda_max(&self) -> &Scalar {
        &self.lambda_max
    }

    /// Banach bound: the limit set lies in the max-norm ball of this radius.
    pub fn radius(&self) -> &Scalar {
        &self.radius
    }

    pub fn symbol_index(&self, label: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownSymbol(label.to_string()))
    }

    pub fn parse_word(&self, text: &str) -> Result<Itinerary> {
        Itinerary::parse(&self.alphabet, text)
    }
}

#[derive(Serialize, Deserialize)]
struct MapDoc {
    symbol: String,
    matrix: Matrix,
    #[serde(with = "scalar::serde_q_vec")]
    offset: Vec<Scalar>,
    #[serde(with = "scalar::serde_q")]
    contraction: Scalar,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    alphabet: Vec<String>,
    maps: Vec<MapDoc>,
}

impl From<IFSystem> for SystemDoc {
    fn from(sys: IFSystem) -> Self {
        SystemDoc {
            maps: sys
                .alphabet
                .iter()
                .zip(sys.maps)
                .map(|(symbol, m)| MapDoc {
                    symbol: symbol.clone(),
                    matrix: m.matrix,
                    offset: m.offset,
                    contraction: m.contraction,
                })
                .collect(),
            alphabet: sys.alphabet,
        }
    }
}

impl TryFrom<SystemDoc> for IFSystem {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<Self> {
        let labels: Vec<&String> = doc.maps.iter().map(|m| &m.symbol).collect();
        if labels != doc.alphabet.iter().collect::<Vec<_>>() {
            return Err(Error::Format("alphabet does not match map symbols".into()));
        }
        let branches = doc
            .maps
            .into_iter()
            .map(|m| Ok((m.symbol, AffineMap::with_contraction(m.matrix, m.offset, m.contraction)?)))
            .collect::<Result<Vec<_>>>()?;
        IFSystem::new(branches)
    }
}

/// A finite backward word. Index 0 is the outermost map `b₋₁`, i.e. the
/// last one applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Itinerary(pub Vec<usize>);

impl Itinerary {
    pub fn new(symbols: Vec<usize>) -> Self {
        Itinerary(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    /// Words over single-character labels are plain concatenations; with
    /// longer labels the symbols are separated by `.`.
    pub fn parse(alphabet: &[String], text: &str) -> Result<Self> {
        let lookup = |s: &str| {
            alphabet
                .iter()
                .position(|a| a == s)
                .ok_or_else(|| Error::UnknownSymbol(s.to_string()))
        };
        if text.is_empty() {
            return Ok(Itinerary::default());
        }
        let symbols = if alphabet.iter().all(|a| a.chars().count() == 1) {
            text.chars().map(|c| lookup(c.encode_utf8(&mut [0; 4]))).collect::<Result<_>>()?
        } else {
            text.split('.').map(lookup).collect::<Result<_>>()?
        };
        Ok(Itinerary(symbols))
    }

    pub fn render(&self, alphabet: &[String]) -> String {
        let sep = if alphabet.iter().all(|a| a.chars().count() == 1) { "" } else { "." };
        self.0
            .iter()
            .map(|&s| alphabet.get(s).map_or("?", String::as_str))
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn concat(&self, other: &Itinerary) -> Itinerary {
        Itinerary(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "[{s}]")?;
        }
        Ok(())
    }
}

fn check_point(sys: &IFSystem, x: &[Scalar]) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::Shape(format!("point has {} components, system is {}-dimensional", x.len(), sys.dim())));
    }
    Ok(())
}

/// `f_{w[0]} ∘ … ∘ f_{w[k-1]}(x)`.
pub fn evaluate_word(sys: &IFSystem, word: &Itinerary, x: &[Scalar]) -> Result<Vec<Scalar>> {
    check_point(sys, x)?;
    let mut p = x.to_vec();
    for &s in word.0.iter().rev() {
        p = sys.map(s)?.apply(&p)?;
    }
    Ok(p)
}

/// The composed map of a word as (matrix, offset).
pub fn word_map(sys: &IFSystem, word: &Itinerary) -> Result<(Matrix, Vec<Scalar>)> {
    let n = sys.dim();
    let mut a = Matrix::identity(n);
    for &s in &word.0 {
        a = a.mul(sys.map(s)?.matrix())?;
    }
    let t = evaluate_word(sys, word, &vec![Scalar::zero(); n])?;
    Ok((a, t))
}

/// The attracting fixed point of the composed word map.
pub fn word_fixed_point(sys: &IFSystem, word: &Itinerary) -> Result<Vec<Scalar>> {
    if word.is_empty() {
        return Err(Error::InvalidInput("fixed point of the empty word is undefined".into()));
    }
    let (a, t) = word_map(sys, word)?;
    let lhs = Matrix::identity(sys.dim()).sub(&a)?;
    lhs.solve(&t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCloud {
    pub points: Vec<(Vec<Scalar>, Itinerary)>,
    /// Two-sided Hausdorff bound between the cloud and the limit set.
    pub error_bound: Scalar,
}

/// Images of 0 under every word of length `depth`, in lexicographic word
/// order (alphabet order, index 0 most significant).
pub fn limit_set_cloud(sys: &IFSystem, depth: usize, cap: usize) -> Result<LimitCloud> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let count = (sys.alphabet.len() as u128).checked_pow(depth as u32);
    if count.is_none_or(|c| c > cap as u128) {
        return Err(Error::Resource(format!(
            "{}^{} words exceed the cap of {}",
            sys.alphabet.len(),
            depth,
            cap
        )));
    }
    let zero = vec![Scalar::zero(); sys.dim()];
    let mut layer: Vec<(Vec<Scalar>, Vec<usize>)> = vec![(zero, Vec::new())];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(layer.len() * sys.maps.len());
        for (s, map) in sys.maps.iter().enumerate() {
            for (p, w) in &layer {
                let mut word = Vec::with_capacity(w.len() + 1);
                word.push(s);
                word.extend_from_slice(w);
                next.push((map.apply(p)?, word));
            }
        }
        layer = next;
    }
    let error_bound = scalar::pow(&sys.lambda_max, depth as i32) * &sys.radius;
    Ok(LimitCloud {
        points: layer.into_iter().map(|(p, w)| (p, Itinerary(w))).collect(),
        error_bound,
    })
}

/// CSV with columns `x1..xn,word`, rationals as `p/q`.
pub fn cloud_to_csv(sys: &IFSystem, cloud: &LimitCloud) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=sys.dim()).map(|i| format!("x{i}")).chain(["word".into()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (p, w) in &cloud.points {
        for x in p {
            out.push_str(&scalar::format(x));
            out.push(',');
        }
        out.push_str(&w.render(&sys.alphabet));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwoMapVerdict {
    /// `[lo, hi]` is covered by the images of its own interior.
    RobustInterior { lo: Scalar, hi: Scalar },
    PerturbablyEmpty,
}

fn image_interval(f: &AffineMap, lo: &Scalar, hi: &Scalar) -> (Scalar, Scalar) {
    let a = &f.matrix[(0, 0)];
    let b = &f.offset[0];
    let (x, y) = (a * lo + b, a * hi + b);
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// `Closure[lo,hi] ⊂ f1((lo,hi)) ∪ f2((lo,hi))`, decided exactly.
fn two_images_cover(f1: &AffineMap, f2: &AffineMap, lo: &Scalar, hi: &Scalar) -> bool {
    if lo >= hi {
        return false;
    }
    let mut imgs = [image_interval(f1, lo, hi), image_interval(f2, lo, hi)];
    imgs.sort();
    let [(a1, b1), (a2, b2)] = imgs;
    // open intervals (a1,b1), (a2,b2) with a1 <= a2
    if a1 < *lo && *hi < b1 {
        return true;
    }
    if a2 < *lo && *hi < b2 {
        return true;
    }
    a1 < *lo && a2 < b1 && *hi < b2
}

/// Convex hull of the limit set of affine maps on the line: the unique
/// interval `[m, M]` equal to the hull of its images. Each endpoint is the
/// image of an endpoint under some branch, so the candidates come from
/// 2×2 linear systems.
fn line_hull(maps: &[&AffineMap]) -> Result<(Scalar, Scalar)> {
    let coef = |f: &AffineMap| (f.matrix[(0, 0)].clone(), f.offset[0].clone());
    let images_hull = |lo: &Scalar, hi: &Scalar| {
        let imgs: Vec<(Scalar, Scalar)> = maps.iter().map(|f| image_interval(f, lo, hi)).collect();
        let m = imgs.iter().map(|i| i.0.clone()).min().unwrap();
        let mm = imgs.iter().map(|i| i.1.clone()).max().unwrap();
        (m, mm)
    };
    for f_hi in maps {
        for hi_from_hi in [true, false] {
            for f_lo in maps {
                for lo_from_hi in [true, false] {
                    // hi = a·(hi|lo) + b,  lo = c·(hi|lo) + d
                    let (a, b) = coef(f_hi);
                    let (c, d) = coef(f_lo);
                    let one = Scalar::one();
                    let zero = Scalar::zero();
                    // unknowns (lo, hi)
                    let row1 = if hi_from_hi { [zero.clone(), &one - &a] } else { [-a.clone(), one.clone()] };
                    let row2 = if lo_from_hi { [one.clone(), -c.clone()] } else { [&one - &c, zero.clone()] };
                    let m = Matrix::from_rows(vec![row1.to_vec(), row2.to_vec()])?;
                    let Ok(sol) = m.solve(&[b, d]) else { continue };
                    let (lo, hi) = (sol[0].clone(), sol[1].clone());
                    if lo > hi {
                        continue;
                    }
                    if images_hull(&lo, &hi) == (lo.clone(), hi.clone()) {
                        return Ok((lo, hi));
                    }
                }
            }
        }
    }
    Err(Error::Internal("no self-similar hull found".into()))
}

/// The two-map trichotomy on the line: either the convex hull of the limit
/// set, trimmed at both ends, is covered by the images of its interior, or
/// the images of the hull have disjoint interiors.
pub fn decide_two_map_line(f1: &AffineMap, f2: &AffineMap) -> Result<TwoMapVerdict> {
    if f1.dim() != 1 || f2.dim() != 1 {
        return Err(Error::Shape("two-map verdict needs one-dimensional maps".into()));
    }
    if f1 == f2 || (f1.matrix == f2.matrix && f1.offset == f2.offset) {
        return Err(Error::Degenerate("the two maps are identical".into()));
    }
    let (lo, hi) = line_hull(&[f1, f2])?;
    if lo == hi {
        return Ok(TwoMapVerdict::PerturbablyEmpty);
    }
    let (a1, b1) = image_interval(f1, &lo, &hi);
    let (a2, b2) = image_interval(f2, &lo, &hi);
    let overlap_lo = if a1 > a2 { a1 } else { a2 };
    let overlap_hi = if b1 < b2 { b1 } else { b2 };
    if overlap_hi <= overlap_lo {
        return Ok(TwoMapVerdict::PerturbablyEmpty);
    }
    let mut eps = (overlap_hi - overlap_lo) / Scalar::from_integer(2.into());
    // Half the overlap always works for orientation-preserving pairs; other
    // configurations may need a thinner trim.
    for _ in 0..64 {
        let (tlo, thi) = (&lo + &eps, &hi - &eps);
        if two_images_cover(f1, f2, &tlo, &thi) {
            return Ok(TwoMapVerdict::RobustInterior { lo: tlo, hi: thi });
        }
        eps /= Scalar::from_integer(2.into());
    }
    Err(Error::Internal("no trimmed interval is covered despite overlapping images".into()))
}

/// Contraction of a single map measured on a pair of points.
pub fn contraction_ratio_holds(f: &AffineMap, x: &[Scalar], y: &[Scalar], bound: &Scalar) -> Result<bool> {
    let d_in = linalg::inf_norm(&linalg::vec_sub(x, y));
    let d_out = linalg::inf_norm(&linalg::vec_sub(&f.apply(x)?, &f.apply(y)?));
    Ok(d_out <= bound * d_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use num_traits::Signed;

    fn pair(l: Scalar) -> IFSystem {
        IFSystem::symmetric_pair(&l).unwrap()
    }

    #[test]
    fn evaluate_word_examples() {
        let sys = pair(ratio(3, 4));
        let w = sys.parse_word("+").unwrap();
        assert_eq!(evaluate_word(&sys, &w, &[int(0)]).unwrap(), vec![int(1)]);
        let w = sys.parse_word("+-").unwrap();
        assert_eq!(evaluate_word(&sys, &w, &[int(0)]).unwrap(), vec![ratio(1, 4)]);
        let w = Itinerary::default();
        assert_eq!(evaluate_word(&sys, &w, &[ratio(5, 7)]).unwrap(), vec![ratio(5, 7)]);
    }

    #[test]
    fn evaluate_word_errors() {
        let sys = pair(ratio(3, 4));
        assert!(matches!(sys.parse_word("+x"), Err(Error::UnknownSymbol(_))));
        assert!(matches!(
            evaluate_word(&sys, &Itinerary(vec![5]), &[int(0)]),
            Err(Error::UnknownSymbol(_))
        ));
        assert!(matches!(
            evaluate_word(&sys, &Itinerary(vec![0]), &[int(0), int(1)]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn fixed_points() {
        let sys = pair(ratio(3, 4));
        assert_eq!(word_fixed_point(&sys, &sys.parse_word("+").unwrap()).unwrap(), vec![int(4)]);
        assert_eq!(word_fixed_point(&sys, &sys.parse_word("-").unwrap()).unwrap(), vec![int(-4)]);
        let w = sys.parse_word("+-").unwrap();
        let p = word_fixed_point(&sys, &w).unwrap();
        assert_eq!(p, vec![ratio(4, 7)]);
        // iterate the word map 100 times from 0
        let mut x = vec![int(0)];
        for _ in 0..100 {
            x = evaluate_word(&sys, &w, &x).unwrap();
        }
        let err = (&x[0] - &p[0]).abs();
        let bound = scalar::pow(&ratio(3, 4), 200) * sys.radius();
        assert!(err <= bound);
        assert!(word_fixed_point(&sys, &Itinerary::default()).is_err());
    }

    #[test]
    fn cloud_examples() {
        let sys = pair(ratio(3, 4));
        let c1 = limit_set_cloud(&sys, 1, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(c1.points, vec![(vec![int(1)], Itinerary(vec![0])), (vec![int(-1)], Itinerary(vec![1]))]);
        let c2 = limit_set_cloud(&sys, 2, DEFAULT_WORD_CAP).unwrap();
        let pts: Vec<Scalar> = c2.points.iter().map(|(p, _)| p[0].clone()).collect();
        assert_eq!(pts, vec![ratio(7, 4), ratio(1, 4), ratio(-1, 4), ratio(-7, 4)]);
        for (p, w) in &c2.points {
            assert_eq!(&evaluate_word(&sys, w, &[int(0)]).unwrap(), p);
        }
        assert_eq!(c2.error_bound, ratio(9, 4));
        assert!(matches!(limit_set_cloud(&sys, 3, 7), Err(Error::Resource(_))));
        assert!(limit_set_cloud(&sys, 0, 7).is_err());
    }

    #[test]
    fn csv_layout() {
        let sys = pair(ratio(3, 4));
        let c2 = limit_set_cloud(&sys, 2, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(cloud_to_csv(&sys, &c2), "x1,word\n7/4,++\n1/4,+-\n-1/4,-+\n-7/4,--\n");
    }

    #[test]
    fn rejects_expanding_maps() {
        assert!(AffineMap::line(ratio(5, 4), int(1)).is_err());
        assert!(AffineMap::line(int(-1), int(0)).is_err());
        let m = Matrix::diagonal(&[ratio(1, 2)]);
        assert!(AffineMap::with_contraction(m.clone(), vec![int(0)], ratio(1, 4)).is_err());
        assert!(AffineMap::with_contraction(m, vec![int(0)], ratio(3, 4)).is_ok());
    }

    #[test]
    fn two_map_verdicts() {
        let sys = pair(ratio(3, 4));
        let v = decide_two_map_line(&sys.maps()[0], &sys.maps()[1]).unwrap();
        assert_eq!(v, TwoMapVerdict::RobustInterior { lo: int(-2), hi: int(2) });
        for l in [ratio(1, 4), ratio(1, 2)] {
            let sys = pair(l);
            assert_eq!(
                decide_two_map_line(&sys.maps()[0], &sys.maps()[1]).unwrap(),
                TwoMapVerdict::PerturbablyEmpty
            );
        }
        let f = AffineMap::line(ratio(1, 2), int(1)).unwrap();
        assert!(matches!(decide_two_map_line(&f, &f.clone()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_map_with_reversing_branch() {
        let f1 = AffineMap::line(ratio(-3, 4), int(1)).unwrap();
        let f2 = AffineMap::line(ratio(3, 4), int(-1)).unwrap();
        match decide_two_map_line(&f1, &f2).unwrap() {
            TwoMapVerdict::RobustInterior { lo, hi } => {
                assert!(two_images_cover(&f1, &f2, &lo, &hi))
            }
            TwoMapVerdict::PerturbablyEmpty => panic!("expected overlap"),
        }
    }

    #[test]
    fn system_json_round_trip() {
        let sys = pair(ratio(3, 4));
        let text = serde_json::to_string(&sys).unwrap();
        assert!(text.contains("\"3/4\""));
        let back: IFSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sys);
    }
}

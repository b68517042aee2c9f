//! Covering certificates: `Closure(U) ⊂ ⋃_b f_b(U)` proved by bisection of
//! `U` and exact interval pull-backs through the inverse branches.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{AffineMap, IFSystem};
use crate::interval::{BoxN, Interval};
use crate::linalg::Matrix;
use crate::scalar::{self, Scalar};

pub const DEFAULT_MAX_DEPTH: usize = 32;

/// Result of a depth-first longest-axis bisection in which every leaf must
/// receive a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Subdivision {
    Covered { leaves: Vec<(BoxN, usize)>, depth: usize },
    Uncovered { witness_box: BoxN, depth: usize },
}

pub(crate) fn subdivide<F>(root: &BoxN, max_depth: usize, mut witness: F) -> Subdivision
where
    F: FnMut(&BoxN) -> Option<usize>,
{
    let mut stack = vec![(root.clone(), 0usize)];
    let mut leaves = Vec::new();
    let mut deepest = 0;
    while let Some((cell, depth)) = stack.pop() {
        if let Some(w) = witness(&cell) {
            deepest = deepest.max(depth);
            leaves.push((cell, w));
            continue;
        }
        if depth >= max_depth || cell.is_degenerate() {
            return Subdivision::Uncovered { witness_box: cell, depth };
        }
        let (left, right) = cell.bisect();
        stack.push((right, depth + 1));
        stack.push((left, depth + 1));
    }
    Subdivision::Covered { leaves, depth: deepest }
}

/// Replays the bisection tree and checks that `leaves` are exactly its
/// leaves in depth-first order.
pub(crate) fn replay_partition<F>(root: &BoxN, max_depth: usize, leaves: &[BoxN], mut on_leaf: F) -> bool
where
    F: FnMut(usize) -> bool,
{
    let mut next = 0;
    let mut stack = vec![(root.clone(), 0usize)];
    while let Some((cell, depth)) = stack.pop() {
        if next < leaves.len() && leaves[next] == cell {
            if !on_leaf(next) {
                return false;
            }
            next += 1;
            continue;
        }
        if depth >= max_depth || cell.is_degenerate() {
            return false;
        }
        let (left, right) = cell.bisect();
        stack.push((right, depth + 1));
        stack.push((left, depth + 1));
    }
    next == leaves.len()
}

/// The inverse branch `y ↦ A⁻¹(y − t)` in matrix/offset form.
#[derive(Debug, Clone)]
struct InverseBranch {
    matrix: Matrix,
    offset: Vec<Scalar>,
}

impl InverseBranch {
    fn of(f: &AffineMap) -> Result<Self> {
        let inv = f.matrix().inverse()?;
        let offset = inv.mul_vec(f.offset())?.into_iter().map(|x| -x).collect();
        Ok(InverseBranch { matrix: inv, offset })
    }

    fn image(&self, beta: &BoxN) -> BoxN {
        let n = beta.dim();
        let axes = (0..n)
            .map(|i| {
                let mut acc = Interval::point(self.offset[i].clone());
                for j in 0..n {
                    let c = &self.matrix[(i, j)];
                    if !c.is_zero() {
                        acc = acc.add(&beta.axis(j).affine(c, &Scalar::zero()));
                    }
                }
                acc
            })
            .collect();
        BoxN::new(axes).expect("non-empty box")
    }
}

/// Box enclosure of `f⁻¹(β)`; exact when the inverse matrix is diagonal.
pub fn inverse_image_box(f: &AffineMap, beta: &BoxN) -> Result<BoxN> {
    if beta.dim() != f.dim() {
        return Err(Error::Shape(format!("box is {}-dimensional, map is {}-dimensional", beta.dim(), f.dim())));
    }
    Ok(InverseBranch::of(f)?.image(beta))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub cell: BoxN,
    pub witness: String,
}

/// Machine-checkable proof that `Closure(target) ⊂ ⋃_b f_b(target)` with
/// every pull-back landing at least `margin` inside the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CertificateDoc", try_from = "CertificateDoc")]
pub struct Certificate {
    pub system: IFSystem,
    pub target: BoxN,
    pub margin: Scalar,
    pub depth: usize,
    pub leaves: Vec<Leaf>,
}

#[derive(Serialize, Deserialize)]
struct LeafDoc {
    #[serde(rename = "box")]
    cell: BoxN,
    witness: String,
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    system: IFSystem,
    #[serde(rename = "box")]
    target: BoxN,
    #[serde(with = "scalar::serde_q")]
    margin: Scalar,
    depth: usize,
    leaves: Vec<LeafDoc>,
    #[serde(default)]
    verified: bool,
}

impl From<Certificate> for CertificateDoc {
    fn from(c: Certificate) -> Self {
        CertificateDoc {
            system: c.system,
            target: c.target,
            margin: c.margin,
            depth: c.depth,
            leaves: c.leaves.into_iter().map(|l| LeafDoc { cell: l.cell, witness: l.witness }).collect(),
            verified: true,
        }
    }
}

impl TryFrom<CertificateDoc> for Certificate {
    type Error = Error;

    fn try_from(d: CertificateDoc) -> Result<Self> {
        Ok(Certificate {
            system: d.system,
            target: d.target,
            margin: d.margin,
            depth: d.depth,
            leaves: d.leaves.into_iter().map(|l| Leaf { cell: l.cell, witness: l.witness }).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoveringOutcome {
    Certified(Certificate),
    /// Inconclusive: no single branch pulls this cell inside the shrunk
    /// target at the maximal depth.
    Failure { witness_box: BoxN, depth: usize },
}

impl CoveringOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CoveringOutcome::Certified(c) => Some(c),
            CoveringOutcome::Failure { .. } => None,
        }
    }
}

fn validate(sys: &IFSystem, target: &BoxN, margin: &Scalar) -> Result<()> {
    if !margin.is_positive() {
        return Err(Error::InvalidInput(format!("margin must be positive, got {margin}")));
    }
    if target.dim() != sys.dim() {
        return Err(Error::Shape(format!(
            "target box is {}-dimensional, system is {}-dimensional",
            target.dim(),
            sys.dim()
        )));
    }
    Ok(())
}

/// Searches for a covering certificate. The witness of each leaf is the
/// first symbol, in alphabet order, whose pull-back fits.
pub fn certify_covering(sys: &IFSystem, target: &BoxN, margin: &Scalar, max_depth: usize) -> Result<CoveringOutcome> {
    validate(sys, target, margin)?;
    let inner = target
        .shrink(margin)
        .ok_or_else(|| Error::Degenerate(format!("margin {margin} consumes the target box")))?;
    let branches = sys.maps().iter().map(InverseBranch::of).collect::<Result<Vec<_>>>()?;
    let outcome = subdivide(target, max_depth, |cell| {
        branches.iter().position(|b| inner.contains_box(&b.image(cell)))
    });
    Ok(match outcome {
        Subdivision::Covered { leaves, depth } => CoveringOutcome::Certified(Certificate {
            system: sys.clone(),
            target: target.clone(),
            margin: margin.clone(),
            depth,
            leaves: leaves
                .into_iter()
                .map(|(cell, w)| Leaf { cell, witness: sys.alphabet()[w].clone() })
                .collect(),
        }),
        Subdivision::Uncovered { witness_box, depth } => CoveringOutcome::Failure { witness_box, depth },
    })
}

/// Re-verifies a certificate from scratch: the leaves must be exactly the
/// bisection leaves of the target, and each witness must pull its leaf
/// inside the shrunk target.
pub fn check_certificate(cert: &Certificate) -> Result<bool> {
    let sys = &cert.system;
    if cert.target.dim() != sys.dim() || cert.leaves.iter().any(|l| l.cell.dim() != sys.dim()) {
        return Err(Error::Format("certificate dimensions disagree".into()));
    }
    let witnesses = cert
        .leaves
        .iter()
        .map(|l| sys.symbol_index(&l.witness).map_err(|e| Error::Format(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if !cert.margin.is_positive() {
        return Ok(false);
    }
    let Some(inner) = cert.target.shrink(&cert.margin) else {
        return Ok(false);
    };
    let branches = sys.maps().iter().map(InverseBranch::of).collect::<Result<Vec<_>>>()?;
    let cells: Vec<BoxN> = cert.leaves.iter().map(|l| l.cell.clone()).collect();
    Ok(replay_partition(&cert.target, cert.depth, &cells, |i| {
        inner.contains_box(&branches[witnesses[i]].image(&cells[i]))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn line_box(lo: Scalar, hi: Scalar) -> BoxN {
        BoxN::new(vec![Interval::new(lo, hi).unwrap()]).unwrap()
    }

    #[test]
    fn inverse_images() {
        let f = AffineMap::line(ratio(3, 4), int(1)).unwrap();
        assert_eq!(inverse_image_box(&f, &line_box(int(0), int(2))).unwrap(), line_box(ratio(-4, 3), ratio(4, 3)));
        let g = AffineMap::line(ratio(1, 2), int(0)).unwrap();
        assert_eq!(inverse_image_box(&g, &line_box(int(0), int(1))).unwrap(), line_box(int(0), int(2)));
        let h = AffineMap::line(ratio(3, 4), int(-1)).unwrap();
        assert_eq!(inverse_image_box(&h, &line_box(int(-2), int(0))).unwrap(), line_box(ratio(-4, 3), ratio(4, 3)));
    }

    #[test]
    fn singular_map_is_rejected() {
        let f = AffineMap::line(int(0), int(1)).unwrap();
        assert_eq!(inverse_image_box(&f, &line_box(int(0), int(1))), Err(Error::Singular));
    }

    #[test]
    fn classic_example_covers() {
        let sys = IFSystem::symmetric_pair(&ratio(3, 4)).unwrap();
        let u = line_box(int(-2), int(2));
        let out = certify_covering(&sys, &u, &ratio(1, 100), DEFAULT_MAX_DEPTH).unwrap();
        let cert = out.certificate().expect("covering certified");
        assert!(check_certificate(cert).unwrap());
    }

    #[test]
    fn half_contraction_fails() {
        let sys = IFSystem::symmetric_pair(&ratio(1, 2)).unwrap();
        let u = line_box(int(-2), int(2));
        match certify_covering(&sys, &u, &ratio(1, 100), 12).unwrap() {
            CoveringOutcome::Failure { witness_box, depth } => {
                assert_eq!(depth, 12);
                assert_eq!(witness_box.axis(0).lo(), &int(-2));
            }
            CoveringOutcome::Certified(_) => panic!("λ=1/2 must not certify"),
        }
    }

    #[test]
    fn point_targets() {
        let sys = IFSystem::symmetric_pair(&ratio(3, 4)).unwrap();
        // the fixed point of f₊ is mapped onto itself
        let fixed = line_box(int(4), int(4));
        assert!(certify_covering(&sys, &fixed, &ratio(1, 100), 4).unwrap().certificate().is_some());
        let origin = line_box(int(0), int(0));
        assert!(certify_covering(&sys, &origin, &ratio(1, 100), 4).unwrap().certificate().is_none());
    }

    #[test]
    fn input_errors() {
        let sys = IFSystem::symmetric_pair(&ratio(3, 4)).unwrap();
        let u = line_box(int(-2), int(2));
        assert!(matches!(certify_covering(&sys, &u, &int(0), 4), Err(Error::InvalidInput(_))));
        assert!(matches!(certify_covering(&sys, &u, &int(3), 4), Err(Error::Degenerate(_))));
    }

    #[test]
    fn tampering_is_detected() {
        let sys = IFSystem::symmetric_pair(&ratio(3, 4)).unwrap();
        let u = line_box(int(-2), int(2));
        let out = certify_covering(&sys, &u, &ratio(1, 100), DEFAULT_MAX_DEPTH).unwrap();
        let cert = out.certificate().unwrap().clone();

        let mut flipped = cert.clone();
        let w = &mut flipped.leaves[0].witness;
        *w = if w == "+" { "-".into() } else { "+".into() };
        assert!(!check_certificate(&flipped).unwrap());

        let mut inflated = cert.clone();
        inflated.margin = int(10);
        assert!(!check_certificate(&inflated).unwrap());

        let mut dropped = cert.clone();
        dropped.leaves.pop();
        assert!(!check_certificate(&dropped).unwrap());

        let mut bogus = cert;
        bogus.leaves[0].witness = "z".into();
        assert!(matches!(check_certificate(&bogus), Err(Error::Format(_))));
    }

    #[test]
    fn certificate_json_round_trip() {
        let sys = IFSystem::symmetric_pair(&ratio(3, 4)).unwrap();
        let u = line_box(int(-2), int(2));
        let out = certify_covering(&sys, &u, &ratio(1, 100), DEFAULT_MAX_DEPTH).unwrap();
        let cert = out.certificate().unwrap();
        let text = serde_json::to_string(cert).unwrap();
        assert!(text.contains("\"verified\":true"));
        assert!(text.contains("\"margin\":\"1/100\""));
        let back: Certificate = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, cert);
        assert!(check_certificate(&back).unwrap());
    }
}

//! Exact rational scalars and their `p/q` string form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Scalar = BigRational;

pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

/// `num / den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

pub fn dyadic(num: i64, log2_den: u32) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::one() << log2_den as usize)
}

/// Parses `p`, `-p`, or `p/q` (no decimals, no whitespace inside).
pub fn parse(text: &str) -> Result<Scalar> {
    let s = text.trim();
    let bad = || Error::Format(format!("not a rational `p/q`: `{text}`"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::Format(format!("zero denominator in `{text}`")));
    }
    Ok(Scalar::new(num, den))
}

/// Canonical text: `p` for integers, `p/q` otherwise.
pub fn format(x: &Scalar) -> String {
    x.to_string()
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // huge numerator/denominator: fall back on bit lengths
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        if n.is_finite() && d.is_finite() {
            n / d
        } else {
            let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
            let n = (x.numer() >> shift as usize).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift as usize).to_f64().unwrap_or(1.0);
            n / d
        }
    })
}

pub fn abs_max<'a>(xs: impl IntoIterator<Item = &'a Scalar>) -> Scalar {
    xs.into_iter().map(|x| x.abs()).fold(Scalar::zero(), |m, v| if v > m { v } else { m })
}

pub fn pow(x: &Scalar, e: i32) -> Scalar {
    num_traits::pow::Pow::pow(x, e)
}

/// Rounds toward zero onto the grid `2^-bits`.
pub fn truncate_dyadic(x: &Scalar, bits: u32) -> Scalar {
    let den = BigInt::one() << bits as usize;
    let scaled = x * Scalar::from_integer(den.clone());
    Scalar::new(scaled.trunc().to_integer(), den)
}

pub fn from_f64_exact(v: f64) -> Option<Scalar> {
    Scalar::from_float(v)
}

/// Serde adapters writing scalars as `p/q` strings.
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Scalar], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Scalar>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_q_mat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Vec<Scalar>], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|row| row.iter().map(format).collect::<Vec<_>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Scalar>>, D::Error> {
        let v = Vec::<Vec<String>>::deserialize(d)?;
        v.iter()
            .map(|row| row.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

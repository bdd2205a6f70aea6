//! Exact rational numbers used for every cost, fraction and probability.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_usize(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.125` exactly.
pub fn parse(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Input(format!("malformed rational `{s}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Input(format!("zero denominator in `{s}`")));
        }
        return Ok(Q::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = Q::new(num, den);
        return Ok(if negative { -value } else { value });
    }
    let num: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(num))
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Largest integer not exceeding `x`.
pub fn floor_int(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

/// Smallest integer not below `x`.
pub fn ceil_int(x: &Q) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

pub fn is_probability(x: &Q) -> bool {
    !x.is_negative() && x <= &Q::one()
}

pub fn sum<'a>(it: impl IntoIterator<Item = &'a Q>) -> Q {
    it.into_iter().fold(Q::zero(), |acc, x| acc + x)
}

/// Serde adapter: rationals travel as strings (`"3/4"`) but integer and
/// decimal JSON numbers are also accepted on input.
pub mod serde_q {
    use super::{format, parse, Q};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Float(f64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse(&t).map_err(de::Error::custom),
            Raw::Int(i) => Ok(super::q(i)),
            Raw::Float(f) => parse(&f.to_string()).map_err(de::Error::custom),
        }
    }

    pub mod vec {
        use super::super::Q;
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&super::super::format(x))?;
            }
            seq.end()
        }

        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] Q);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
            let raw: Vec<Wrap> = Vec::deserialize(d)?;
            Ok(raw.into_iter().map(|w| w.0).collect())
        }
    }

    pub mod opt {
        use super::super::Q;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(x) => s.serialize_str(&super::super::format(x)),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] Q);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }

    /// Maps keyed by vertex id (JSON object keys are strings).
    pub mod map {
        use super::super::Q;
        use serde::ser::SerializeMap;
        use serde::{de, Deserialize, Deserializer, Serializer};
        use std::collections::BTreeMap;

        pub fn serialize<S: Serializer>(m: &BTreeMap<usize, Q>, s: S) -> Result<S::Ok, S::Error> {
            let mut out = s.serialize_map(Some(m.len()))?;
            for (k, v) in m {
                out.serialize_entry(&k.to_string(), &super::super::format(v))?;
            }
            out.end()
        }

        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] Q);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, Q>, D::Error> {
            let raw: BTreeMap<String, Wrap> = BTreeMap::deserialize(d)?;
            raw.into_iter()
                .map(|(k, v)| {
                    k.trim()
                        .parse::<usize>()
                        .map(|k| (k, v.0))
                        .map_err(|_| de::Error::custom(format!("vertex id `{k}` is not a non-negative integer")))
                })
                .collect()
        }
    }
}

//! Exact rational helpers shared by the verification paths.

use num_bigint::BigInt;
use num_rational::BigRational;

pub type Rational = BigRational;

pub fn int(v: impl Into<BigInt>) -> Rational {
    Rational::from_integer(v.into())
}

pub fn frac(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Renders a rational as `"p/q"`, always including the denominator.
pub fn ratio_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or a bare integer.
pub fn parse_ratio(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q == BigInt::from(0) {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_ratio {
    use super::{parse_ratio, ratio_string, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ratio_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_keep_their_denominator() {
        assert_eq!(ratio_string(&int(12)), "12/1");
        assert_eq!(ratio_string(&frac(6, 4)), "3/2");
        assert_eq!(ratio_string(&frac(-1, 108)), "-1/108");
    }

    #[test]
    fn parse_round_trips() {
        for s in ["12/1", "-1/108", "16/3"] {
            assert_eq!(ratio_string(&parse_ratio(s).unwrap()), s);
        }
        assert_eq!(parse_ratio("7"), Some(int(7)));
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("x"), None);
    }
}

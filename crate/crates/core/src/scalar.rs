//! Scalar abstraction shared by the model and scheduler.
//!
//! Carrier arithmetic (capacities, the load-balancing factor, superframe
//! counts, prefix lengths) is written once against [`Scalar`] and runs on
//! `f32`, `f64` or exact [`BigRational`]. Exact rationals are what the CLI
//! uses so that table keys such as `0.4` are matched by equality rather
//! than by tolerance.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `num / den` in this scalar type.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Equality used for lookup-table keys: exact for rationals, relative
    /// tolerance for floats.
    fn key_eq(&self, other: &Self) -> bool;

    /// Largest integer not greater than `self`, or `None` when negative or
    /// not representable.
    fn floor_u64(&self) -> Option<u64>;

    /// Parses plain decimals (`0.25`, `4640000`, `1.5e6`) and, where the
    /// type supports it, fractions (`5/6`).
    fn parse_decimal(s: &str) -> Option<Self>;

    /// Text form written to config files; parses back to the same value.
    fn to_config_string(&self) -> String;

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(v: u64) -> Self {
        <Self as FromPrimitive>::from_u64(v).expect("u64 fits every scalar type")
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn key_eq(&self, other: &Self) -> bool {
                let scale = self.abs().max(other.abs()).max(<$t>::MIN_POSITIVE);
                (self - other).abs() <= $tol * scale
            }

            fn floor_u64(&self) -> Option<u64> {
                if self.is_finite() && *self >= 0.0 {
                    Some(self.floor() as u64)
                } else {
                    None
                }
            }

            fn parse_decimal(s: &str) -> Option<Self> {
                let s = s.trim();
                match s.split_once('/') {
                    Some((n, d)) => {
                        let n: $t = n.trim().parse().ok()?;
                        let d: $t = d.trim().parse().ok()?;
                        (d != 0.0).then(|| n / d)
                    }
                    None => s.parse().ok().filter(|v: &$t| v.is_finite()),
                }
            }

            fn to_config_string(&self) -> String {
                format!("{self}")
            }
        }
    };
}

float_scalar!(f32, 1e-5);
float_scalar!(f64, 1e-9);

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn key_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn floor_u64(&self) -> Option<u64> {
        if self.is_negative() {
            return None;
        }
        self.floor().to_integer().to_u64()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            return (!d.is_zero()).then(|| BigRational::new(n, d));
        }
        parse_exact_decimal(s)
    }

    fn to_config_string(&self) -> String {
        decimal_string(self).unwrap_or_else(|| format!("{}/{}", self.numer(), self.denom()))
    }
}

/// `[-]digits[.digits][e[-]exp]` parsed without rounding.
fn parse_exact_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    Some(if neg { -value } else { value })
}

/// Terminating decimal expansion, if the denominator is of the form 2^a 5^b.
fn decimal_string(v: &BigRational) -> Option<String> {
    let mut den = v.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = v * BigRational::from_integer(num_traits::pow(BigInt::from(10u32), places));
    let int = scaled.to_integer();
    if places == 0 {
        return Some(int.to_string());
    }
    let neg = int.is_negative();
    let mut digits = int.abs().to_string();
    if digits.len() <= places {
        digits = format!("{}{digits}", "0".repeat(places + 1 - digits.len()));
    }
    let (i, f) = digits.split_at(digits.len() - places);
    let f = f.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    Some(if f.is_empty() {
        format!("{sign}{i}")
    } else {
        format!("{sign}{i}.{f}")
    })
}

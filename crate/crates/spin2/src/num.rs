use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use malachite::base::num::arithmetic::traits::{Abs, Pow, RoundToMultipleOfPowerOf2, Sign};
use malachite::base::num::basic::traits::{One, Zero};
use malachite::base::num::conversion::traits::RoundingFrom;
use malachite::base::rounding_modes::RoundingMode;
use malachite::{Integer, Natural};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SpinError};

pub type Rat = malachite::Rational;

pub fn rat(n: i64, d: i64) -> Rat {
    assert!(d != 0, "zero denominator");
    Rat::from_signeds(n, d)
}

pub fn int(n: i64) -> Rat {
    Rat::from(n)
}

pub fn zero() -> Rat {
    Rat::ZERO
}

pub fn one() -> Rat {
    Rat::ONE
}

/// Parses "p/q" or an integer. Decimal and exponent forms are rejected.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    let ok = !t.is_empty()
        && t.chars().all(|c| c.is_ascii_digit() || c == '-' || c == '/' || c == '+');
    if !ok {
        return Err(SpinError::Parse(format!("not a rational p/q: {s:?}")));
    }
    let t = t.strip_prefix('+').unwrap_or(t);
    if let Some((n, d)) = t.split_once('/') {
        let n = Integer::from_str(n).map_err(|_| SpinError::Parse(format!("bad numerator in {s:?}")))?;
        let d = Integer::from_str(d).map_err(|_| SpinError::Parse(format!("bad denominator in {s:?}")))?;
        if d == 0 {
            return Err(SpinError::Parse(format!("zero denominator in {s:?}")));
        }
        Ok(Rat::from_integers(n, d))
    } else {
        Integer::from_str(t)
            .map(Rat::from)
            .map_err(|_| SpinError::Parse(format!("bad integer {s:?}")))
    }
}

pub fn rat_str(q: &Rat) -> String {
    q.to_string()
}

pub fn sign(q: &Rat) -> Ordering {
    q.sign()
}

pub fn abs(q: &Rat) -> Rat {
    q.abs()
}

pub fn powi(q: &Rat, e: i64) -> Rat {
    q.clone().pow(e)
}

pub fn powu(q: &Rat, e: u64) -> Rat {
    q.clone().pow(e)
}

pub fn two_pow(e: i64) -> Rat {
    Rat::from(2).pow(e)
}

pub fn min_rat(a: &Rat, b: &Rat) -> Rat {
    if a <= b { a.clone() } else { b.clone() }
}

pub fn max_rat(a: &Rat, b: &Rat) -> Rat {
    if a >= b { a.clone() } else { b.clone() }
}

/// Nearest f64; saturates to +-inf or 0 out of range.
pub fn to_f64(q: &Rat) -> f64 {
    if *q == 0 {
        return 0.0;
    }
    let l = q.floor_log_base_2_abs();
    if l > 1020 {
        return if *q > 0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    if l < -1070 {
        return 0.0;
    }
    f64::rounding_from(q, RoundingMode::Nearest).0
}

/// Approximate natural log of |q| without overflowing f64.
pub fn ln_abs_f64(q: &Rat) -> f64 {
    q.abs().approx_log()
}

/// Bit length of numerator plus denominator.
pub fn bits(q: &Rat) -> u64 {
    use malachite::base::num::logic::traits::SignificantBits;
    q.numerator_ref().significant_bits() + q.denominator_ref().significant_bits()
}

/// Rounds q to a multiple of 2^pow in the given direction.
pub fn round_dyadic(q: &Rat, pow: i64, rm: RoundingMode) -> Rat {
    q.clone().round_to_multiple_of_power_of_2(pow, rm).0
}

/// Rounds q to about `prec` significant bits, toward the requested direction.
pub fn round_rel(q: &Rat, prec: u64, rm: RoundingMode) -> Rat {
    if *q == 0 {
        return zero();
    }
    let l = q.floor_log_base_2_abs();
    round_dyadic(q, l - prec as i64, rm)
}

pub fn floor_int(q: &Rat) -> Integer {
    use malachite::base::num::arithmetic::traits::Floor;
    q.clone().floor()
}

pub fn ceil_int(q: &Rat) -> Integer {
    use malachite::base::num::arithmetic::traits::Ceiling;
    q.clone().ceiling()
}

pub fn isqrt_floor(n: &Natural) -> Natural {
    use malachite::base::num::arithmetic::traits::FloorSqrt;
    n.clone().floor_sqrt()
}

pub fn from_f64_dyadic(x: f64) -> Rat {
    Rat::try_from(x).expect("finite float")
}

pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rat_str(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CRat {
    pub re: Rat,
    pub im: Rat,
}

impl CRat {
    pub fn new(re: Rat, im: Rat) -> Self {
        CRat { re, im }
    }

    pub fn real(re: Rat) -> Self {
        CRat { re, im: zero() }
    }

    pub fn zero() -> Self {
        CRat::real(zero())
    }

    pub fn one() -> Self {
        CRat::real(one())
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn is_real(&self) -> bool {
        self.im == 0
    }

    pub fn norm_sqr(&self) -> Rat {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn conj(&self) -> Self {
        CRat::new(self.re.clone(), -&self.im)
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n == 0 {
            return Err(SpinError::InvalidInput("division by zero".into()));
        }
        Ok(CRat::new(&self.re / &n, -(&self.im / &n)))
    }

    pub fn scale(&self, k: &Rat) -> Self {
        CRat::new(&self.re * k, &self.im * k)
    }
}

impl fmt::Display for CRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0 {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl<'a> Add<&'a CRat> for &'a CRat {
    type Output = CRat;
    fn add(self, o: &CRat) -> CRat {
        CRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl<'a> Sub<&'a CRat> for &'a CRat {
    type Output = CRat;
    fn sub(self, o: &CRat) -> CRat {
        CRat::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl<'a> Mul<&'a CRat> for &'a CRat {
    type Output = CRat;
    fn mul(self, o: &CRat) -> CRat {
        if self.im == 0 && o.im == 0 {
            return CRat::real(&self.re * &o.re);
        }
        CRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl<'a> Div<&'a CRat> for &'a CRat {
    type Output = CRat;
    fn div(self, o: &CRat) -> CRat {
        let inv = o.inv().expect("division by zero");
        self * &inv
    }
}

impl Neg for &CRat {
    type Output = CRat;
    fn neg(self) -> CRat {
        CRat::new(-&self.re, -&self.im)
    }
}

impl Serialize for CRat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct W {
            re: String,
            im: String,
        }
        W { re: rat_str(&self.re), im: rat_str(&self.im) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct W {
            re: String,
            im: String,
        }
        let w = W::deserialize(d)?;
        let re = parse_rat(&w.re).map_err(serde::de::Error::custom)?;
        let im = parse_rat(&w.im).map_err(serde::de::Error::custom)?;
        Ok(CRat::new(re, im))
    }
}

/// JSON form: "p/q" strings for rationals, {"re","im"} for complex.
pub trait JsonValue {
    fn json(&self) -> serde_json::Value;
}

impl JsonValue for Rat {
    fn json(&self) -> serde_json::Value {
        serde_json::Value::String(rat_str(self))
    }
}

impl JsonValue for CRat {
    fn json(&self) -> serde_json::Value {
        serde_json::json!({ "re": rat_str(&self.re), "im": rat_str(&self.im) })
    }
}

/// Field scalars used by the enumeration kernels.
pub trait Scalar: Clone + Send + Sync + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn from_rat(r: &Rat) -> Self;
    fn is_zero(&self) -> bool;
}

impl Scalar for Rat {
    fn zero() -> Self {
        Rat::ZERO
    }
    fn one() -> Self {
        Rat::ONE
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

impl Scalar for CRat {
    fn zero() -> Self {
        CRat::zero()
    }
    fn one() -> Self {
        CRat::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_rat(r: &Rat) -> Self {
        CRat::real(r.clone())
    }
    fn is_zero(&self) -> bool {
        CRat::is_zero(self)
    }
}

/// The symmetric interaction [[beta, 1], [1, gamma]].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinParams {
    #[serde(with = "serde_rat")]
    pub beta: Rat,
    #[serde(with = "serde_rat")]
    pub gamma: Rat,
}

impl SpinParams {
    pub fn new(beta: Rat, gamma: Rat) -> Self {
        SpinParams { beta, gamma }
    }

    pub fn of(b: (i64, i64), g: (i64, i64)) -> Self {
        SpinParams::new(rat(b.0, b.1), rat(g.0, g.1))
    }

    pub fn parse(beta: &str, gamma: &str) -> Result<Self> {
        Ok(SpinParams::new(parse_rat(beta)?, parse_rat(gamma)?))
    }

    pub fn sum(&self) -> Rat {
        &self.beta + &self.gamma
    }

    pub fn swapped(&self) -> Self {
        SpinParams::new(self.gamma.clone(), self.beta.clone())
    }

    pub fn negated(&self) -> Self {
        SpinParams::new(-&self.beta, -&self.gamma)
    }

    /// beta > gamma, gamma < 0, -2 < beta+gamma < 1, excluding (1,-1).
    pub fn in_gamma_region(&self) -> bool {
        let s = self.sum();
        self.beta > self.gamma
            && self.gamma < 0
            && s > -2
            && s < 1
            && !(self.beta == 1 && self.gamma == -1)
    }

    pub fn require_gamma_region(&self) -> Result<()> {
        if self.in_gamma_region() {
            Ok(())
        } else {
            Err(SpinError::Region(format!(
                "({}, {}) is not in the region beta > gamma, gamma < 0, -2 < beta+gamma < 1",
                self.beta, self.gamma
            )))
        }
    }

    /// f(r) = (1 + gamma r) / (beta + r).
    pub fn mobius(&self, r: &Rat) -> Result<Rat> {
        let den = &self.beta + r;
        if den == 0 {
            return Err(SpinError::Pole);
        }
        Ok((Rat::ONE + &self.gamma * r) / den)
    }

    /// Inverse of f: r = (1 - beta y) / (y - gamma).
    pub fn mobius_inv(&self, y: &Rat) -> Result<Rat> {
        let den = y - &self.gamma;
        if den == 0 {
            return Err(SpinError::Pole);
        }
        Ok((Rat::ONE - &self.beta * y) / den)
    }

    /// f'(r) = (beta gamma - 1) / (beta + r)^2.
    pub fn mobius_deriv(&self, r: &Rat) -> Result<Rat> {
        let den = &self.beta + r;
        if den == 0 {
            return Err(SpinError::Pole);
        }
        Ok((&self.beta * &self.gamma - Rat::ONE) / (&den * &den))
    }
}

impl fmt::Display for SpinParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.beta, self.gamma)
    }
}

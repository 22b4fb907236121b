//! Elements of `Q_l` known to a finite absolute precision.
//!
//! A nonzero value is stored as `l^v * u + O(l^N)` with `u` a unit reduced
//! modulo `l^(N - v)`. Values that vanish at their precision are kept as a
//! zero carrying the floor `N` ("known to be 0 modulo `l^N`"); a zero with no
//! floor is exact.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default number of l-adic digits carried by freshly created values.
pub const DEFAULT_PRECISION: i64 = 64;

/// A valuation that may be infinite (the valuation of zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinity)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

/// Largest `e` with `p^e | n`.
pub fn val_int(n: &BigInt, p: u64) -> Result<u64> {
    if n.is_zero() {
        return Err(Error::ZeroValuation);
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut e = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return Ok(e);
        }
        n = q;
        e += 1;
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn prime_power(p: u64, e: i64) -> BigInt {
    debug_assert!(e >= 0);
    num_traits::pow(BigInt::from(p), e as usize)
}

#[derive(Clone, Debug)]
enum Repr {
    Zero { floor: Option<i64> },
    Known { valuation: i64, unit: BigInt, precision: i64 },
}

/// An element of `Q_l` with explicit absolute precision.
#[derive(Clone, Debug)]
pub struct PadicScalar {
    prime: u64,
    repr: Repr,
}

impl PadicScalar {
    /// The exact zero.
    pub fn zero(prime: u64) -> Self {
        PadicScalar { prime, repr: Repr::Zero { floor: None } }
    }

    /// Zero known modulo `prime^floor`.
    pub fn zero_mod(prime: u64, floor: i64) -> Self {
        PadicScalar { prime, repr: Repr::Zero { floor: Some(floor) } }
    }

    pub fn one(prime: u64, precision: i64) -> Self {
        Self::from_int(1, prime, precision)
    }

    /// Embeds an integer, known modulo `prime^precision`.
    pub fn from_int(n: impl Into<BigInt>, prime: u64, precision: i64) -> Self {
        Self::from_ratio(n.into(), BigInt::one(), prime, precision)
            .expect("denominator is one")
    }

    /// Embeds `num / den`, known modulo `prime^precision`.
    pub fn from_ratio(
        num: impl Into<BigInt>,
        den: impl Into<BigInt>,
        prime: u64,
        precision: i64,
    ) -> Result<Self> {
        let (num, den) = (num.into(), den.into());
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero_mod(prime, precision));
        }
        let vn = val_int(&num, prime)? as i64;
        let vd = val_int(&den, prime)? as i64;
        let v = vn - vd;
        if v >= precision {
            return Ok(Self::zero_mod(prime, precision));
        }
        let modulus = prime_power(prime, precision - v);
        let un = num / prime_power(prime, vn);
        let ud = den / prime_power(prime, vd);
        let ud_inv = ud.mod_floor(&modulus).modinv(&modulus).expect("unit denominator");
        let unit = (un * ud_inv).mod_floor(&modulus);
        Ok(PadicScalar { prime, repr: Repr::Known { valuation: v, unit, precision } })
    }

    /// Builds `prime^valuation * unit + O(prime^precision)`.
    pub fn from_parts(prime: u64, valuation: i64, unit: BigInt, precision: i64) -> Result<Self> {
        if valuation >= precision {
            return Err(Error::Precision(format!(
                "valuation {valuation} not below precision {precision}"
            )));
        }
        let modulus = prime_power(prime, precision - valuation);
        let unit = unit.mod_floor(&modulus);
        if (&unit % prime).is_zero() {
            return Err(Error::NotUnit(unit.to_string()));
        }
        Ok(PadicScalar { prime, repr: Repr::Known { valuation, unit, precision } })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// True for exact zeros and for values that vanish at their precision.
    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { floor: None })
    }

    pub fn valuation(&self) -> Valuation {
        match &self.repr {
            Repr::Zero { .. } => Valuation::Infinity,
            Repr::Known { valuation, .. } => Valuation::Finite(*valuation),
        }
    }

    /// Absolute precision; `None` for the exact zero.
    pub fn precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { floor } => *floor,
            Repr::Known { precision, .. } => Some(*precision),
        }
    }

    /// Number of significant digits; `None` for zeros.
    pub fn relative_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::Known { valuation, precision, .. } => Some(precision - valuation),
        }
    }

    pub fn unit(&self) -> Option<&BigInt> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::Known { unit, .. } => Some(unit),
        }
    }

    /// A unit of `Z_l`: valuation exactly zero.
    pub fn is_unit(&self) -> bool {
        self.valuation() == Valuation::Finite(0)
    }

    /// Nonzero with nonnegative valuation, or a zero.
    pub fn is_integral(&self) -> bool {
        match self.valuation() {
            Valuation::Finite(v) => v >= 0,
            Valuation::Infinity => true,
        }
    }

    /// Lower bound on the valuation that the data can certify: the valuation
    /// itself for known values, the floor for zeros.
    pub fn valuation_lower_bound(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { floor } => *floor,
            Repr::Known { valuation, .. } => Some(*valuation),
        }
    }

    fn check_prime(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            Err(Error::PrimeMismatch(self.prime, other.prime))
        } else {
            Ok(())
        }
    }

    /// An integer constant carrying the same absolute precision as `self`
    /// (or the default precision if `self` is an exact zero).
    pub fn int_like(&self, n: impl Into<BigInt>) -> Self {
        Self::from_int(n, self.prime, self.precision().unwrap_or(DEFAULT_PRECISION))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        let p = self.prime;
        let out = match (&self.repr, &other.repr) {
            (Repr::Zero { floor: a }, Repr::Zero { floor: b }) => {
                let floor = match (a, b) {
                    (Some(a), Some(b)) => Some(*a.min(b)),
                    (Some(a), None) | (None, Some(a)) => Some(*a),
                    (None, None) => None,
                };
                PadicScalar { prime: p, repr: Repr::Zero { floor } }
            }
            (Repr::Zero { floor }, Repr::Known { .. }) => other.truncated(*floor),
            (Repr::Known { .. }, Repr::Zero { floor }) => self.truncated(*floor),
            (
                Repr::Known { valuation: va, unit: ua, precision: na },
                Repr::Known { valuation: vb, unit: ub, precision: nb },
            ) => {
                let n = *na.min(nb);
                let v0 = *va.min(vb);
                if v0 >= n {
                    return Ok(Self::zero_mod(p, n));
                }
                let modulus = prime_power(p, n - v0);
                let sum = ua * prime_power(p, va - v0) + ub * prime_power(p, vb - v0);
                Self::normalize(p, v0, sum.mod_floor(&modulus), n)
            }
        };
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        let p = self.prime;
        let out = match (&self.repr, &other.repr) {
            (Repr::Zero { floor: a }, Repr::Zero { floor: b }) => {
                let floor = match (a, b) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
                PadicScalar { prime: p, repr: Repr::Zero { floor } }
            }
            (Repr::Zero { floor }, Repr::Known { valuation, .. })
            | (Repr::Known { valuation, .. }, Repr::Zero { floor }) => {
                PadicScalar { prime: p, repr: Repr::Zero { floor: floor.map(|f| f + valuation) } }
            }
            (
                Repr::Known { valuation: va, unit: ua, precision: na },
                Repr::Known { valuation: vb, unit: ub, precision: nb },
            ) => {
                let v = va + vb;
                let n = (va + nb).min(vb + na);
                let modulus = prime_power(p, n - v);
                PadicScalar {
                    prime: p,
                    repr: Repr::Known { valuation: v, unit: (ua * ub).mod_floor(&modulus), precision: n },
                }
            }
        };
        Ok(out)
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::Zero { .. } => Err(Error::DivisionByZero),
            Repr::Known { valuation, unit, precision } => {
                let rel = precision - valuation;
                let modulus = prime_power(self.prime, rel);
                let inv = unit.modinv(&modulus).expect("units are invertible");
                Ok(PadicScalar {
                    prime: self.prime,
                    repr: Repr::Known { valuation: -valuation, unit: inv, precision: rel - valuation },
                })
            }
        }
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.checked_mul(&other.inv()?)
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::Known { valuation, unit, precision } => {
                let modulus = prime_power(self.prime, precision - valuation);
                PadicScalar {
                    prime: self.prime,
                    repr: Repr::Known {
                        valuation: *valuation,
                        unit: (&modulus - unit).mod_floor(&modulus),
                        precision: *precision,
                    },
                }
            }
        }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.int_like(1);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplies by `prime^e` (exact shift, no precision loss).
    pub fn shift(&self, e: i64) -> Self {
        let repr = match &self.repr {
            Repr::Zero { floor } => Repr::Zero { floor: floor.map(|f| f + e) },
            Repr::Known { valuation, unit, precision } => Repr::Known {
                valuation: valuation + e,
                unit: unit.clone(),
                precision: precision + e,
            },
        };
        PadicScalar { prime: self.prime, repr }
    }

    /// Equality at the common precision of the two operands.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.checked_sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }

    /// Lowers the absolute precision to `floor` (no-op when already lower).
    pub fn truncated(&self, floor: Option<i64>) -> Self {
        let Some(floor) = floor else { return self.clone() };
        match &self.repr {
            Repr::Zero { floor: f } => {
                let f = f.map_or(floor, |f| f.min(floor));
                Self::zero_mod(self.prime, f)
            }
            Repr::Known { valuation, unit, precision } => {
                if floor >= *precision {
                    return self.clone();
                }
                if *valuation >= floor {
                    return Self::zero_mod(self.prime, floor);
                }
                let modulus = prime_power(self.prime, floor - valuation);
                PadicScalar {
                    prime: self.prime,
                    repr: Repr::Known { valuation: *valuation, unit: unit % &modulus, precision: floor },
                }
            }
        }
    }

    /// Representative in `[0, prime^n)` of this value modulo `prime^n`.
    pub fn residue(&self, n: i64) -> Result<BigInt> {
        match &self.repr {
            Repr::Zero { floor } => match floor {
                Some(f) if *f < n => Err(Error::Precision(format!("known only mod {}^{f}", self.prime))),
                _ => Ok(BigInt::zero()),
            },
            Repr::Known { valuation, unit, precision } => {
                if *precision < n {
                    return Err(Error::Precision(format!(
                        "known only mod {}^{precision}, need {n}",
                        self.prime
                    )));
                }
                if *valuation < 0 {
                    return Err(Error::InvalidParameter("residue of a non-integral value".into()));
                }
                if *valuation >= n {
                    return Ok(BigInt::zero());
                }
                let modulus = prime_power(self.prime, n);
                Ok((unit * prime_power(self.prime, *valuation)).mod_floor(&modulus))
            }
        }
    }

    /// Signed representative in `(-prime^n / 2, prime^n / 2]`.
    pub fn balanced_residue(&self, n: i64) -> Result<BigInt> {
        let r = self.residue(n)?;
        let modulus = prime_power(self.prime, n);
        if &r * 2 > modulus {
            Ok(r - modulus)
        } else {
            Ok(r)
        }
    }

    fn normalize(prime: u64, v0: i64, value: BigInt, precision: i64) -> Self {
        if value.is_zero() {
            return Self::zero_mod(prime, precision);
        }
        let e = val_int(&value, prime).expect("nonzero") as i64;
        let unit = value / prime_power(prime, e);
        PadicScalar { prime, repr: Repr::Known { valuation: v0 + e, unit, precision } }
    }

    /// Residue class modulo `prime` (or 4 when `prime == 2`) of a unit, used
    /// for multiplicative orders.
    pub(crate) fn small_residue(&self, modulus: u64) -> Option<u64> {
        if self.valuation() != Valuation::Finite(0) {
            return None;
        }
        let n = if modulus == 4 { 2 } else { 1 };
        self.residue(n).ok().and_then(|r| r.to_u64())
    }
}

impl PartialEq for PadicScalar {
    /// Structural equality: same value, same precision data.
    fn eq(&self, other: &Self) -> bool {
        if self.prime != other.prime {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Zero { floor: a }, Repr::Zero { floor: b }) => a == b,
            (
                Repr::Known { valuation: va, unit: ua, precision: na },
                Repr::Known { valuation: vb, unit: ub, precision: nb },
            ) => va == vb && ua == ub && na == nb,
            _ => false,
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl std::ops::$tr<&PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl std::ops::$tr<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        PadicScalar::neg(self)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prime;
        match &self.repr {
            Repr::Zero { floor: None } => write!(f, "0"),
            Repr::Zero { floor: Some(n) } => write!(f, "0 + O({p}^{n})"),
            Repr::Known { valuation, unit, precision } => {
                write!(f, "{p}^{valuation} * {unit} + O({p}^{precision})")
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarJson {
    prime: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valuation: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abs_precision: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zero_floor: Option<Option<i64>>,
}

impl Serialize for PadicScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let json = match &self.repr {
            Repr::Zero { floor } => ScalarJson {
                prime: self.prime,
                valuation: None,
                unit: None,
                abs_precision: None,
                zero_floor: Some(*floor),
            },
            Repr::Known { valuation, unit, precision } => ScalarJson {
                prime: self.prime,
                valuation: Some(*valuation),
                unit: Some(unit.to_string()),
                abs_precision: Some(*precision),
                zero_floor: None,
            },
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = ScalarJson::deserialize(d)?;
        match (json.valuation, json.unit, json.abs_precision, json.zero_floor) {
            (None, None, None, Some(floor)) => {
                Ok(PadicScalar { prime: json.prime, repr: Repr::Zero { floor } })
            }
            // `"zero_floor": null` deserializes as an absent field
            (None, None, None, None) => Ok(PadicScalar::zero(json.prime)),
            (Some(v), Some(u), Some(n), None) => {
                let unit: BigInt = u.parse().map_err(D::Error::custom)?;
                PadicScalar::from_parts(json.prime, v, unit, n).map_err(D::Error::custom)
            }
            _ => Err(D::Error::custom("expected {valuation, unit, abs_precision} or {zero_floor}")),
        }
    }
}

/// Orders known scalars by valuation; zeros sort last.
pub fn cmp_valuation(a: &PadicScalar, b: &PadicScalar) -> Ordering {
    a.valuation().cmp(&b.valuation())
}

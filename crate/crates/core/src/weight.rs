//! Probability representations.
//!
//! Every event of `k` steps has probability `count / 2^k`, so exact layers
//! store integer path counts with an implicit dyadic scale. Floating layers
//! store probabilities directly; halving is exact in binary floating point,
//! so their only error comes from additions.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Arithmetic needed by the layer sweeps.
pub trait Mass: Clone + Default + PartialEq + fmt::Debug + Send + Sync + 'static {
    const EXACT: bool;

    fn unit() -> Self;

    fn is_zero(&self) -> bool;

    /// Accumulates one of the two equally likely branches of a step.
    fn add_branch(&mut self, src: &Self);

    fn accumulate(&mut self, other: &Self);

    /// Raw stored value (a count in exact mode, a probability otherwise).
    fn raw_f64(&self) -> f64;

    fn to_biguint(&self) -> Option<BigUint>;

    fn into_weight(self, scale: usize) -> Weight;
}

impl Mass for u128 {
    const EXACT: bool = true;

    fn unit() -> Self {
        1
    }

    fn is_zero(&self) -> bool {
        *self == 0
    }

    fn add_branch(&mut self, src: &Self) {
        *self += *src;
    }

    fn accumulate(&mut self, other: &Self) {
        *self += *other;
    }

    fn raw_f64(&self) -> f64 {
        *self as f64
    }

    fn to_biguint(&self) -> Option<BigUint> {
        Some(BigUint::from(*self))
    }

    fn into_weight(self, scale: usize) -> Weight {
        Weight::exact(BigUint::from(self), scale)
    }
}

impl Mass for BigUint {
    const EXACT: bool = true;

    fn unit() -> Self {
        BigUint::one()
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn add_branch(&mut self, src: &Self) {
        *self += src;
    }

    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }

    fn raw_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_biguint(&self) -> Option<BigUint> {
        Some(self.clone())
    }

    fn into_weight(self, scale: usize) -> Weight {
        Weight::exact(self, scale)
    }
}

impl Mass for f64 {
    const EXACT: bool = false;

    fn unit() -> Self {
        1.0
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn add_branch(&mut self, src: &Self) {
        *self += 0.5 * src;
    }

    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }

    fn raw_f64(&self) -> f64 {
        *self
    }

    fn to_biguint(&self) -> Option<BigUint> {
        None
    }

    fn into_weight(self, _scale: usize) -> Weight {
        Weight::Float(self)
    }
}

/// Exact or floating evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Exact,
    Float,
}

/// Horizons up to this use 128-bit counts; beyond it, big integers.
pub const U128_LIMIT: usize = 120;

/// Largest horizon accepted in exact mode.
pub const EXACT_BUDGET: usize = 160;

/// Largest horizon accepted by the floating layer sweeps.
pub const FLOAT_BUDGET: usize = 320;

pub fn check_budget(n: usize, precision: Precision) -> Result<()> {
    let (kind, budget) = match precision {
        Precision::Exact => ("exact", EXACT_BUDGET),
        Precision::Float => ("float", FLOAT_BUDGET),
    };
    if n > budget {
        return Err(Error::BudgetExceeded { kind, n, budget });
    }
    Ok(())
}

/// Probability of an event of `scale` steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    /// `count / 2^scale`.
    Exact {
        count: BigUint,
        scale: usize,
    },
    Float(f64),
}

impl Weight {
    pub fn exact(count: BigUint, scale: usize) -> Self {
        Weight::Exact { count, scale }
    }

    pub fn from_ratio_parts(count: u64, scale: usize) -> Self {
        Weight::exact(BigUint::from(count), scale)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Weight::Exact { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Weight::Exact { count, .. } => Zero::is_zero(count),
            Weight::Float(v) => *v == 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Weight::Exact { count, scale } => dyadic_to_f64(count, *scale),
            Weight::Float(v) => *v,
        }
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Weight::Exact { count, scale } => Some(BigRational::new(
                count.clone().into(),
                (BigUint::one() << *scale).into(),
            )),
            Weight::Float(_) => None,
        }
    }

    pub fn to_value(&self) -> Value {
        match self.to_rational() {
            Some(r) => Value::Exact(r),
            None => Value::Float(self.to_f64()),
        }
    }

    /// `self / other`, refusing a zero denominator.
    pub fn ratio(&self, other: &Weight) -> Result<Value> {
        if other.is_zero() {
            return Err(Error::NullConditioning(
                "conditioning event has probability zero".into(),
            ));
        }
        Ok(self.to_value().div(&other.to_value()))
    }

    /// `count/2^scale` rendering used in reports.
    pub fn dyadic_string(&self) -> Option<String> {
        match self {
            Weight::Exact { count, scale } => Some(format!("{count}/2^{scale}")),
            Weight::Float(_) => None,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Exact { count, scale } => write!(f, "{count}/2^{scale}"),
            Weight::Float(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Weight", 4)?;
        match self {
            Weight::Exact { count, scale } => {
                st.serialize_field("numerator", &count.to_string())?;
                st.serialize_field("scale", scale)?;
                st.serialize_field("exact", &format!("{count}/2^{scale}"))?;
            }
            Weight::Float(_) => {
                st.serialize_field("numerator", &Option::<String>::None)?;
                st.serialize_field("scale", &Option::<usize>::None)?;
                st.serialize_field("exact", &Option::<String>::None)?;
            }
        }
        st.serialize_field("float_value", &self.to_f64())?;
        st.end()
    }
}

fn dyadic_to_f64(count: &BigUint, scale: usize) -> f64 {
    // Shift down first so huge counts do not overflow the conversion.
    let bits = count.bits() as usize;
    if bits > 1000 {
        let drop = bits - 900;
        let head = (count >> drop).to_f64().unwrap_or(f64::INFINITY);
        return head * 2f64.powi(drop as i32 - scale as i32);
    }
    count.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-(scale as i32))
}

/// A derived real quantity: an exact rational or a float.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Value::Exact(BigRational::new(num.into(), den.into()))
    }

    pub fn zero(exact: bool) -> Self {
        if exact {
            Value::Exact(BigRational::zero())
        } else {
            Value::Float(0.0)
        }
    }

    pub fn one(exact: bool) -> Self {
        if exact {
            Value::Exact(BigRational::one())
        } else {
            Value::Float(1.0)
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational_to_f64(r),
            Value::Float(v) => *v,
        }
    }

    fn combine(
        &self,
        other: &Value,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        float: impl Fn(f64, f64) -> f64,
    ) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(exact(a, b)),
            _ => Value::Float(float(self.to_f64(), other.to_f64())),
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &Value) -> Value {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }

    /// Division; the caller guarantees a nonzero divisor.
    pub fn div(&self, other: &Value) -> Value {
        self.combine(other, |a, b| a / b, |a, b| a / b)
    }

    /// `self >= other`, exactly when both are exact.
    pub fn ge(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a >= b,
            _ => self.to_f64() >= other.to_f64(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Value", 3)?;
        match self {
            Value::Exact(r) => {
                st.serialize_field("numerator", &r.numer().to_string())?;
                st.serialize_field("denominator", &r.denom().to_string())?;
            }
            Value::Float(_) => {
                st.serialize_field("numerator", &Option::<String>::None)?;
                st.serialize_field("denominator", &Option::<String>::None)?;
            }
        }
        st.serialize_field("float_value", &self.to_f64())?;
        st.end()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators and denominators: scale both down.
        let n = r.numer();
        let d = r.denom();
        let shift = n.bits().max(d.bits()).saturating_sub(1000);
        let n = (n >> shift).to_f64().unwrap_or(0.0);
        let d = (d >> shift).to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

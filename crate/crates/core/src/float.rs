// SPDX-License-Identifier: Apache-2.0

//! Bit-accurate emulation of non-negative reduced-precision floating point.
//!
//! A value is `2^e * (1 + m / 2^M)` with an implicit leading one and no
//! subnormals. Zero is a reserved state: its bit pattern is all zeros, so the
//! biased exponent field `0` is never used by a non-zero value. Normal values
//! therefore carry a biased exponent in `1..=2^E - 1`.
//!
//! Two multipliers are provided: [`FloatConfig::exact_mul`], which computes
//! the full-width significand product and rounds once, and
//! [`FloatConfig::aai_mul`], which adds the exponent and mantissa fields as
//! integers (the Mitchell logarithm approximation applied to both operands).
//! Sums are always computed exactly and rounded once.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloatError {
    #[error("negative input {0} cannot be encoded (values are probabilities)")]
    Negative(f64),
    #[error("non-finite input {0} cannot be encoded")]
    NonFinite(f64),
    #[error("invalid float configuration: {0}")]
    InvalidConfig(String),
    #[error("bit pattern {0:#x} is the reserved zero pattern")]
    ReservedPattern(u64),
    #[error("bit pattern {0:#x} is not a valid pattern for this configuration")]
    InvalidPattern(u64),
    #[error("fraction {0} is outside [0, 1]")]
    FractionOutOfRange(f64),
}

/// Rounding applied whenever a result does not fit in `M` mantissa bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    NearestEven,
    TowardZero,
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounding::NearestEven => write!(f, "nearest-even"),
            Rounding::TowardZero => write!(f, "toward-zero"),
        }
    }
}

impl std::str::FromStr for Rounding {
    type Err = FloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest-even" | "nearest" | "rne" => Ok(Rounding::NearestEven),
            "toward-zero" | "zero" | "rz" => Ok(Rounding::TowardZero),
            other => Err(FloatError::InvalidConfig(format!(
                "unknown rounding mode `{other}`"
            ))),
        }
    }
}

/// Which multiplier computes a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MulMode {
    Exact,
    Aai,
}

impl fmt::Display for MulMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MulMode::Exact => write!(f, "exact"),
            MulMode::Aai => write!(f, "aai"),
        }
    }
}

/// Resolution of the emulated format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FloatConfig {
    pub exp_bits: u32,
    pub man_bits: u32,
    pub bias: i32,
    pub rounding: Rounding,
}

/// A value under some [`FloatConfig`]. The mantissa is the numerator of the
/// fraction over `2^M`; `exp` is unbiased.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CustomFloat {
    pub is_zero: bool,
    pub exp: i32,
    pub man: u64,
}

impl CustomFloat {
    pub const ZERO: CustomFloat = CustomFloat {
        is_zero: true,
        exp: 0,
        man: 0,
    };

    /// Orders two values of the same configuration by magnitude.
    pub fn cmp_magnitude(&self, other: &CustomFloat) -> Ordering {
        match (self.is_zero, other.is_zero) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => (self.exp, self.man).cmp(&(other.exp, other.man)),
        }
    }
}

/// Outcome of an arithmetic operation; the flags record saturation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultResult {
    pub value: CustomFloat,
    pub underflowed: bool,
    pub overflowed: bool,
}

impl MultResult {
    fn exact(value: CustomFloat) -> Self {
        MultResult {
            value,
            underflowed: false,
            overflowed: false,
        }
    }
}

/// `log2(1 + f) - f`: the amount by which Mitchell's approximation
/// underestimates the logarithm of `1 + f`.
pub fn mitchell_delta(f: f64) -> Result<f64, FloatError> {
    if !(0.0..=1.0).contains(&f) {
        return Err(FloatError::FractionOutOfRange(f));
    }
    Ok(((1.0 + f).log2() - f).max(0.0))
}

/// Multiplies `x` by `2^n` without intermediate overflow or underflow.
pub(crate) fn ldexp(mut x: f64, mut n: i64) -> f64 {
    while n > 1000 {
        x *= 2f64.powi(1000);
        n -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while n < -1000 {
        x *= 2f64.powi(-1000);
        n += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(n as i32)
}

/// Drops the lowest `shift` bits of `sig`.
fn round_shift(sig: u128, shift: u32, mode: Rounding) -> u128 {
    if shift == 0 {
        return sig;
    }
    if shift >= 128 {
        return 0;
    }
    let kept = sig >> shift;
    match mode {
        Rounding::TowardZero => kept,
        Rounding::NearestEven => {
            let rem = sig & ((1u128 << shift) - 1);
            let half = 1u128 << (shift - 1);
            if rem > half || (rem == half && kept & 1 == 1) {
                kept + 1
            } else {
                kept
            }
        }
    }
}

impl FloatConfig {
    /// IEEE-style bias `2^(E-1) - 1` and nearest-even rounding.
    pub fn new(exp_bits: u32, man_bits: u32) -> Result<Self, FloatError> {
        if !(2..=30).contains(&exp_bits) {
            return Err(FloatError::InvalidConfig(format!(
                "exponent bits must be in 2..=30, got {exp_bits}"
            )));
        }
        if man_bits > 60 || exp_bits + man_bits > 63 {
            return Err(FloatError::InvalidConfig(format!(
                "E + M must be at most 63 (M <= 60), got E={exp_bits} M={man_bits}"
            )));
        }
        Ok(FloatConfig {
            exp_bits,
            man_bits,
            bias: (1i32 << (exp_bits - 1)) - 1,
            rounding: Rounding::NearestEven,
        })
    }

    /// The 64-bit reference layout (E=11, M=52).
    pub fn double() -> Self {
        FloatConfig::new(11, 52).expect("double layout is valid")
    }

    pub fn with_bias(mut self, bias: i32) -> Result<Self, FloatError> {
        let limit = 1i64 << self.exp_bits;
        if (bias as i64).abs() > limit {
            return Err(FloatError::InvalidConfig(format!(
                "bias {bias} not representable with {} exponent bits",
                self.exp_bits
            )));
        }
        self.bias = bias;
        Ok(self)
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn min_exp(&self) -> i32 {
        1 - self.bias
    }

    pub fn max_exp(&self) -> i32 {
        ((1i64 << self.exp_bits) - 1 - self.bias as i64) as i32
    }

    fn man_mask(&self) -> u64 {
        (1u64 << self.man_bits) - 1
    }

    pub fn max_value(&self) -> CustomFloat {
        CustomFloat {
            is_zero: false,
            exp: self.max_exp(),
            man: self.man_mask(),
        }
    }

    pub fn one(&self) -> MultResult {
        self.finish(0, 0)
    }

    /// Applies the exponent range: underflow flushes to zero, overflow
    /// saturates at the largest finite value.
    fn finish(&self, exp: i64, man: u64) -> MultResult {
        if exp < self.min_exp() as i64 {
            MultResult {
                value: CustomFloat::ZERO,
                underflowed: true,
                overflowed: false,
            }
        } else if exp > self.max_exp() as i64 {
            MultResult {
                value: self.max_value(),
                underflowed: false,
                overflowed: true,
            }
        } else {
            MultResult::exact(CustomFloat {
                is_zero: false,
                exp: exp as i32,
                man,
            })
        }
    }

    /// Rounds the positive integer significand `sig * 2^scale` to `M + 1`
    /// significant bits.
    fn normalize(&self, sig: u128, scale: i64) -> MultResult {
        debug_assert!(sig != 0);
        let m = self.man_bits;
        let len = 128 - sig.leading_zeros();
        let mut exp = scale + len as i64 - 1;
        let mut r = if len > m + 1 {
            round_shift(sig, len - (m + 1), self.rounding)
        } else {
            sig << (m + 1 - len)
        };
        if r >> (m + 1) != 0 {
            r >>= 1;
            exp += 1;
        }
        self.finish(exp, (r as u64) & self.man_mask())
    }

    /// Nearest representable value under `self.rounding`.
    pub fn encode(&self, x: f64) -> Result<MultResult, FloatError> {
        if !x.is_finite() {
            return Err(FloatError::NonFinite(x));
        }
        if x < 0.0 {
            return Err(FloatError::Negative(x));
        }
        if x == 0.0 {
            return Ok(MultResult::exact(CustomFloat::ZERO));
        }
        let bits = x.to_bits();
        let field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (sig, scale) = if field == 0 {
            (frac as u128, -1074)
        } else {
            ((frac | (1u64 << 52)) as u128, field - 1075)
        };
        Ok(self.normalize(sig, scale))
    }

    /// Real value of `v`, correctly rounded to `f64` when `M > 52`.
    pub fn decode(&self, v: &CustomFloat) -> f64 {
        if v.is_zero {
            return 0.0;
        }
        let sig = ((1u64 << self.man_bits) + v.man) as f64;
        ldexp(sig, v.exp as i64 - self.man_bits as i64)
    }

    /// `log2` of the value, `-inf` for zero. Valid beyond the `f64` range.
    pub fn log2(&self, v: &CustomFloat) -> f64 {
        if v.is_zero {
            return f64::NEG_INFINITY;
        }
        v.exp as f64 + (1.0 + self.fraction(v)).log2()
    }

    /// Mantissa as a fraction in `[0, 1)`.
    pub fn fraction(&self, v: &CustomFloat) -> f64 {
        ldexp(v.man as f64, -(self.man_bits as i64))
    }

    /// Full-width significand product rounded once.
    pub fn exact_mul(&self, a: &CustomFloat, b: &CustomFloat) -> MultResult {
        if a.is_zero || b.is_zero {
            return MultResult::exact(CustomFloat::ZERO);
        }
        let m = self.man_bits;
        let sa = ((1u64 << m) | a.man) as u128;
        let sb = ((1u64 << m) | b.man) as u128;
        // (1 + Ma)(1 + Mb) needs up to 2M + 2 bits before normalization.
        let product = sa * sb;
        self.normalize(product, a.exp as i64 + b.exp as i64 - 2 * m as i64)
    }

    /// Addition-as-int: exponents and mantissas add as integers, the mantissa
    /// carry moving into the exponent. Never rounds.
    pub fn aai_mul(&self, a: &CustomFloat, b: &CustomFloat) -> MultResult {
        if a.is_zero || b.is_zero {
            return MultResult::exact(CustomFloat::ZERO);
        }
        let sum = a.man + b.man;
        let carry = (sum >> self.man_bits) as i64;
        self.finish(a.exp as i64 + b.exp as i64 + carry, sum & self.man_mask())
    }

    pub fn mul(&self, mode: MulMode, a: &CustomFloat, b: &CustomFloat) -> MultResult {
        match mode {
            MulMode::Exact => self.exact_mul(a, b),
            MulMode::Aai => self.aai_mul(a, b),
        }
    }

    /// Exact sum rounded once.
    pub fn exact_add(&self, a: &CustomFloat, b: &CustomFloat) -> MultResult {
        if a.is_zero {
            return MultResult::exact(*b);
        }
        if b.is_zero {
            return MultResult::exact(*a);
        }
        let (hi, lo) = if a.exp >= b.exp { (a, b) } else { (b, a) };
        let m = self.man_bits;
        let shift = (hi.exp as i64 - lo.exp as i64) as u32;
        // `lo` is below a quarter ulp of `hi`: neither rounding mode moves it.
        if shift > m + 2 {
            return MultResult::exact(*hi);
        }
        let s_hi = ((1u64 << m) | hi.man) as u128;
        let s_lo = ((1u64 << m) | lo.man) as u128;
        let sum = (s_hi << shift) + s_lo;
        self.normalize(sum, lo.exp as i64 - m as i64)
    }

    /// Packs a value as `[biased exponent | mantissa]`; zero packs to 0.
    pub fn to_bits(&self, v: &CustomFloat) -> u64 {
        if v.is_zero {
            return 0;
        }
        let biased = (v.exp as i64 + self.bias as i64) as u64;
        (biased << self.man_bits) | v.man
    }

    pub fn from_bits(&self, bits: u64) -> Result<CustomFloat, FloatError> {
        if bits >> (self.exp_bits + self.man_bits) != 0 {
            return Err(FloatError::InvalidPattern(bits));
        }
        if bits == 0 {
            return Ok(CustomFloat::ZERO);
        }
        let biased = (bits >> self.man_bits) as i64;
        if biased == 0 {
            return Err(FloatError::InvalidPattern(bits));
        }
        Ok(CustomFloat {
            is_zero: false,
            exp: (biased - self.bias as i64) as i32,
            man: bits & self.man_mask(),
        })
    }

    /// AAI directly on bit patterns: one integer addition, then removal of
    /// the doubled bias. Saturates like [`FloatConfig::aai_mul`].
    pub fn aai_mul_bits(&self, a_bits: u64, b_bits: u64) -> Result<u64, FloatError> {
        for bits in [a_bits, b_bits] {
            if bits == 0 {
                return Err(FloatError::ReservedPattern(bits));
            }
            self.from_bits(bits)?;
        }
        let m = self.man_bits;
        let r = a_bits as i128 + b_bits as i128 - ((self.bias as i128) << m);
        if r < (1i128 << m) {
            Ok(0)
        } else if r >= (1i128 << (self.exp_bits + m)) {
            Ok(self.to_bits(&self.max_value()))
        } else {
            Ok(r as u64)
        }
    }
}

impl fmt::Display for FloatConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E={} M={} bias={} {}",
            self.exp_bits, self.man_bits, self.bias, self.rounding
        )
    }
}

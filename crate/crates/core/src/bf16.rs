//! Software bfloat16.
//!
//! A `Bf16` is the upper half of an IEEE-754 binary32 pattern:
//!
//! ```text
//! f32:  SEEEEEEE EMMMMMMM MMMMMMMM MMMMMMMM
//! bf16: SEEEEEEE EMMMMMMM
//! ```
//!
//! Widening is therefore exact (append sixteen zero bits) and narrowing is a
//! rounding of the low sixteen bits. Rounding is round-to-nearest-even over the
//! whole range, including bf16 subnormals; nothing is flushed to zero.

use std::fmt;

/// FP32 unit roundoff, 2^-24.
pub const MU_FP32: f32 = 1.0 / 16_777_216.0;
/// Scale ratio between consecutive triplet components, 2^-8.
pub const SCALE_STEP: f32 = 1.0 / 256.0;
/// Number of bf16 components per FP32 value.
pub const NUM_SCALES: usize = 3;

const SIGN_MASK: u16 = 0x8000;
const EXP_MASK: u16 = 0x7F80;
const MAN_MASK: u16 = 0x007F;

/// A bfloat16 value stored as its raw 16-bit pattern.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct Bf16(u16);

impl Bf16 {
    pub const ZERO: Bf16 = Bf16(0x0000);
    pub const NEG_ZERO: Bf16 = Bf16(0x8000);
    pub const ONE: Bf16 = Bf16(0x3F80);
    pub const INFINITY: Bf16 = Bf16(0x7F80);
    pub const NEG_INFINITY: Bf16 = Bf16(0xFF80);
    /// Canonical quiet NaN (positive sign).
    pub const NAN: Bf16 = Bf16(0x7FC0);
    /// Largest finite value, (2 - 2^-7) * 2^127.
    pub const MAX: Bf16 = Bf16(0x7F7F);
    /// Smallest positive normal value, 2^-126.
    pub const MIN_POSITIVE: Bf16 = Bf16(0x0080);
    /// Smallest positive subnormal value, 2^-133.
    pub const MIN_POSITIVE_SUBNORMAL: Bf16 = Bf16(0x0001);

    #[inline]
    pub const fn from_bits(bits: u16) -> Self {
        Bf16(bits)
    }

    #[inline]
    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Round an FP32 value to the nearest bf16, ties to even.
    #[inline]
    pub fn from_f32(x: f32) -> Self {
        round_to_bf16(x)
    }

    /// Exact conversion to FP32.
    #[inline]
    pub fn to_f32(self) -> f32 {
        widen(self)
    }

    #[inline]
    pub const fn is_nan(self) -> bool {
        self.0 & EXP_MASK == EXP_MASK && self.0 & MAN_MASK != 0
    }

    #[inline]
    pub const fn is_infinite(self) -> bool {
        self.0 & !SIGN_MASK == EXP_MASK
    }

    #[inline]
    pub const fn is_finite(self) -> bool {
        self.0 & EXP_MASK != EXP_MASK
    }

    #[inline]
    pub const fn is_sign_negative(self) -> bool {
        self.0 & SIGN_MASK != 0
    }

    #[inline]
    pub const fn neg(self) -> Self {
        Bf16(self.0 ^ SIGN_MASK)
    }

    pub fn classify(self) -> FpClass {
        classify(widen(self))
    }
}

impl fmt::Debug for Bf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bf16({:#06X} = {:e})", self.0, self.to_f32())
    }
}

impl fmt::Display for Bf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f32(), f)
    }
}

impl From<Bf16> for f32 {
    fn from(b: Bf16) -> f32 {
        widen(b)
    }
}

/// IEEE-754 class of a floating-point value.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum FpClass {
    Zero,
    Subnormal,
    Normal,
    Inf,
    Nan,
}

/// Round-to-nearest-even narrowing of an FP32 value to bf16.
///
/// Overflow past `Bf16::MAX` by half an ulp or more produces an infinity of
/// the same sign. NaNs map to the canonical quiet NaN, keeping the sign.
#[inline]
pub fn round_to_bf16(x: f32) -> Bf16 {
    let bits = x.to_bits();
    if x.is_nan() {
        return Bf16(((bits >> 16) as u16 & SIGN_MASK) | Bf16::NAN.0);
    }
    // Adding 0x7FFF plus the kept lsb rounds the discarded half to nearest,
    // ties to even. A carry out of the mantissa bumps the exponent, which is
    // the correct result for binade crossings and for overflow to infinity.
    let lsb = (bits >> 16) & 1;
    Bf16((bits.wrapping_add(0x7FFF + lsb) >> 16) as u16)
}

/// Exact widening of bf16 to FP32.
#[inline]
pub fn widen(b: Bf16) -> f32 {
    f32::from_bits((b.0 as u32) << 16)
}

pub fn classify(x: f32) -> FpClass {
    match x.classify() {
        std::num::FpCategory::Zero => FpClass::Zero,
        std::num::FpCategory::Subnormal => FpClass::Subnormal,
        std::num::FpCategory::Normal => FpClass::Normal,
        std::num::FpCategory::Infinite => FpClass::Inf,
        std::num::FpCategory::Nan => FpClass::Nan,
    }
}

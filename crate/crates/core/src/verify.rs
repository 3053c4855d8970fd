//! Bit-pattern sweeps of the split/recompose identity.

use rand::Rng;
use rayon::prelude::*;

use crate::bf16::{classify, FpClass};
use crate::decompose::{decompose_fp32, recompose};
use crate::lab::rng_from;

/// Counts from a roundtrip sweep.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundtripSummary {
    pub checked: u64,
    pub zero: u64,
    pub subnormal: u64,
    pub normal: u64,
    /// Infinities, checked to recompose to the signed largest finite value.
    pub inf: u64,
    /// NaNs, checked for NaN-ness only.
    pub nan: u64,
    pub failures: u64,
    /// Smallest failing bit pattern seen.
    pub first_failure: Option<u32>,
}

impl RoundtripSummary {
    fn record(&mut self, bits: u32) {
        let x = f32::from_bits(bits);
        let back = recompose(decompose_fp32(x));
        let class = classify(x);
        let ok = match class {
            FpClass::Nan => back.is_nan(),
            FpClass::Inf => back == f32::MAX.copysign(x),
            _ => back.to_bits() == bits,
        };
        self.checked += 1;
        match class {
            FpClass::Zero => self.zero += 1,
            FpClass::Subnormal => self.subnormal += 1,
            FpClass::Normal => self.normal += 1,
            FpClass::Inf => self.inf += 1,
            FpClass::Nan => self.nan += 1,
        }
        if !ok {
            self.failures += 1;
            self.first_failure = Some(self.first_failure.map_or(bits, |f| f.min(bits)));
        }
    }

    fn merge(mut self, o: RoundtripSummary) -> RoundtripSummary {
        self.checked += o.checked;
        self.zero += o.zero;
        self.subnormal += o.subnormal;
        self.normal += o.normal;
        self.inf += o.inf;
        self.nan += o.nan;
        self.failures += o.failures;
        self.first_failure = match (self.first_failure, o.first_failure) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    /// Finite patterns checked for bit-exact recomposition.
    pub fn finite(&self) -> u64 {
        self.zero + self.subnormal + self.normal
    }
}

pub fn roundtrip_patterns(patterns: impl IntoIterator<Item = u32>) -> RoundtripSummary {
    let mut s = RoundtripSummary::default();
    for bits in patterns {
        s.record(bits);
    }
    s
}

/// All 2^32 bit patterns.
pub fn roundtrip_exhaustive() -> RoundtripSummary {
    (0u32..=0xFFFF)
        .into_par_iter()
        .map(|high| roundtrip_patterns((0u32..=0xFFFF).map(move |low| (high << 16) | low)))
        .reduce(RoundtripSummary::default, RoundtripSummary::merge)
}

/// The first `count` patterns of the seeded stream.
pub fn sample_patterns(count: u64, seed: u64) -> impl Iterator<Item = u32> {
    let mut rng = rng_from(seed);
    (0..count).map(move |_| rng.random::<u32>())
}

pub fn roundtrip_sample(count: u64, seed: u64) -> RoundtripSummary {
    roundtrip_patterns(sample_patterns(count, seed))
}

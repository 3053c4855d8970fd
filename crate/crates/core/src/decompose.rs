//! Splitting FP32 values into scaled bf16 triplets.
//!
//! Every finite FP32 value `x` is written as
//!
//! ```text
//! x = hi + 2^-8 * mid + 2^-16 * lo
//! ```
//!
//! with `hi`, `mid`, `lo` bf16 values. `mid` and `lo` are signed corrections and
//! may have the opposite sign of `hi`. Twenty-four significand bits are split
//! into three groups of eight, so recomposition in FP32 is exact for all finite
//! inputs including subnormals.
//!
//! Infinities decompose to triplets of signed `Bf16::MAX`, which recompose to
//! `±f32::MAX`. NaN decomposes to NaN in all three components. The matrix
//! routines record where specials sit so the GEMM output can be patched
//! afterwards with IEEE-correct values.

use std::collections::BTreeSet;

use crate::bf16::{round_to_bf16, widen, Bf16, SCALE_STEP};
use crate::gemm::{epilogue, GemmRequest};
use crate::matrix::{Bf16Plane, MatrixF32, Transpose};

const SCALE_UP_1: f32 = 256.0;
const SCALE_UP_2: f32 = 65_536.0;
const SCALE_DOWN_2: f32 = 1.0 / 65_536.0;

/// One FP32 value as three bf16 components at scales 2^0, 2^-8, 2^-16.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub hi: Bf16,
    pub mid: Bf16,
    pub lo: Bf16,
}

impl Triplet {
    pub const fn new(hi: Bf16, mid: Bf16, lo: Bf16) -> Self {
        Triplet { hi, mid, lo }
    }

    pub fn components(&self) -> [Bf16; 3] {
        [self.hi, self.mid, self.lo]
    }

    pub fn recompose(&self) -> f32 {
        recompose(*self)
    }
}

/// Round to bf16, saturating to `±Bf16::MAX` instead of overflowing.
///
/// Only reachable for finite inputs within half a bf16 ulp of `f32::MAX`;
/// the residual then carries the excess.
#[inline]
fn split_round(v: f32) -> Bf16 {
    let r = round_to_bf16(v);
    if r.is_infinite() {
        if r.is_sign_negative() {
            Bf16::MAX.neg()
        } else {
            Bf16::MAX
        }
    } else {
        r
    }
}

/// Split one FP32 value into a triplet.
#[inline]
pub fn decompose_fp32(x: f32) -> Triplet {
    if x.is_nan() {
        let n = round_to_bf16(x);
        return Triplet::new(n, n, n);
    }
    if x.is_infinite() {
        let m = if x < 0.0 { Bf16::MAX.neg() } else { Bf16::MAX };
        return Triplet::new(m, m, m);
    }
    let hi = split_round(x);
    let r1 = x - widen(hi);
    let mid = split_round(r1 * SCALE_UP_1);
    let r2 = r1 - widen(mid) * SCALE_STEP;
    let lo = split_round(r2 * SCALE_UP_2);
    // Zero components carry the sign of x, so -0.0 survives recomposition.
    let signed = |c: Bf16| {
        if widen(c) == 0.0 {
            Bf16::from_f32(0.0f32.copysign(x))
        } else {
            c
        }
    };
    Triplet::new(signed(hi), signed(mid), signed(lo))
}

/// FP32 evaluation of `hi + 2^-8 * mid + 2^-16 * lo`, left to right.
#[inline]
pub fn recompose(t: Triplet) -> f32 {
    widen(t.hi) + widen(t.mid) * SCALE_STEP + widen(t.lo) * SCALE_DOWN_2
}

/// Three bf16 planes holding the triplet decomposition of a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletMatrix {
    pub planes: [Bf16Plane; 3],
}

impl TripletMatrix {
    pub fn rows(&self) -> usize {
        self.planes[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.planes[0].cols()
    }

    pub fn hi(&self) -> &Bf16Plane {
        &self.planes[0]
    }

    pub fn mid(&self) -> &Bf16Plane {
        &self.planes[1]
    }

    pub fn lo(&self) -> &Bf16Plane {
        &self.planes[2]
    }

    pub fn triplet(&self, i: usize, j: usize) -> Triplet {
        Triplet::new(
            self.planes[0].get(i, j),
            self.planes[1].get(i, j),
            self.planes[2].get(i, j),
        )
    }

    pub fn recompose(&self) -> MatrixF32 {
        MatrixF32::from_fn(self.rows(), self.cols(), |i, j| {
            recompose(self.triplet(i, j))
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

/// Coordinates of NaN and infinite elements, in op-adjusted orientation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecialValueReport {
    pub nan_positions: BTreeSet<(usize, usize)>,
    pub inf_positions: BTreeSet<(usize, usize, Sign)>,
}

impl SpecialValueReport {
    pub fn is_empty(&self) -> bool {
        self.nan_positions.is_empty() && self.inf_positions.is_empty()
    }

    fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.nan_positions
            .iter()
            .map(|&(i, _)| i)
            .chain(self.inf_positions.iter().map(|&(i, _, _)| i))
    }

    fn cols(&self) -> impl Iterator<Item = usize> + '_ {
        self.nan_positions
            .iter()
            .map(|&(_, j)| j)
            .chain(self.inf_positions.iter().map(|&(_, j, _)| j))
    }
}

/// Decompose `op(m)` elementwise and record where the specials are.
pub fn decompose_matrix(m: &MatrixF32, op: Transpose) -> (TripletMatrix, SpecialValueReport) {
    let src = m.op(op);
    let (rows, cols) = src.shape();
    let mut planes = [
        Bf16Plane::zeros(rows, cols),
        Bf16Plane::zeros(rows, cols),
        Bf16Plane::zeros(rows, cols),
    ];
    let mut report = SpecialValueReport::default();
    for (idx, &x) in src.as_slice().iter().enumerate() {
        let t = decompose_fp32(x);
        for (plane, c) in planes.iter_mut().zip(t.components()) {
            plane.as_mut_slice()[idx] = c;
        }
        if !x.is_finite() {
            let (i, j) = (idx / cols, idx % cols);
            if x.is_nan() {
                report.nan_positions.insert((i, j));
            } else {
                let sign = if x < 0.0 { Sign::Negative } else { Sign::Positive };
                report.inf_positions.insert((i, j, sign));
            }
        }
    }
    (TripletMatrix { planes }, report)
}

/// Output coordinates that must be recomputed after an emulated GEMM.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatchPlan {
    pub entries: BTreeSet<(usize, usize)>,
}

impl PatchPlan {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Every output in a row of op(A) or a column of op(B) that holds a special.
pub fn plan_patches(
    ra: &SpecialValueReport,
    rb: &SpecialValueReport,
    m: usize,
    n: usize,
) -> PatchPlan {
    let mut entries = BTreeSet::new();
    let rows: BTreeSet<usize> = ra.rows().collect();
    let cols: BTreeSet<usize> = rb.cols().collect();
    for &i in &rows {
        entries.extend((0..n).map(|j| (i, j)));
    }
    for &j in &cols {
        entries.extend((0..m).map(|i| (i, j)));
    }
    PatchPlan { entries }
}

#[inline]
fn op_get(m: &MatrixF32, t: Transpose, i: usize, j: usize) -> f32 {
    match t {
        Transpose::None => m.get(i, j),
        Transpose::Transpose => m.get(j, i),
    }
}

/// Recompute planned outputs with a scalar FP32 FMA dot product.
///
/// `a`, `b` and `c_in` are the original (unsplit) GEMM operands as stored;
/// transposes are taken from `req`.
pub fn apply_patches(
    c: &mut MatrixF32,
    plan: &PatchPlan,
    req: &GemmRequest,
    a: &MatrixF32,
    b: &MatrixF32,
    c_in: &MatrixF32,
) {
    for &(i, j) in &plan.entries {
        let mut dot = 0.0f32;
        for p in 0..req.k {
            let x = op_get(a, req.trans_a, i, p);
            let y = op_get(b, req.trans_b, p, j);
            dot = x.mul_add(y, dot);
        }
        c.set(i, j, epilogue(req.alpha, dot, req.beta, c_in.get(i, j)));
    }
}

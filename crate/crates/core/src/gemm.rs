//! GEMM kernels: `C' = alpha * op(A) * op(B) + beta * C`.
//!
//! * [`gemm_fp64`]: FP64 FMA reference, used as the accuracy oracle.
//! * [`gemm_fp32_native`]: plain FP32 FMA SGEMM in the same loop order.
//! * [`gemm_emulated`]: FP32 SGEMM from bf16 triplets. Nine (or six) plane
//!   products are accumulated in FP32 along five (or three) bands of equal
//!   scale, least significant band first, with the running accumulator scaled
//!   by 2^-8 at each band boundary:
//!
//! ```text
//! D = P0 + 2^-8 (P1 + 2^-8 (P2 + 2^-8 (P3 + 2^-8 P4))),   Ps = sum_{i+j=s} Ai Bj
//! ```
//!
//! Every output element is accumulated in a fixed order (bands descending,
//! A-plane index ascending within a band, k ascending), so results are
//! bit-reproducible. Rows are computed in parallel; that does not change any
//! element's summation order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bf16::SCALE_STEP;
use crate::decompose::{apply_patches, decompose_matrix, plan_patches};
use crate::dispatch::{select_mode, DispatchPolicy};
use crate::error::{Error, Result};
use crate::matrix::{Bf16Plane, Matrix, MatrixF32, MatrixF64, Transpose};

/// Which kernel computes the product.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Native FP32 SGEMM.
    Native,
    /// All nine bf16 plane products.
    Bf16x9,
    /// The six most significant plane products (bands 0..=2).
    Bf16x6,
    /// FP64 DGEMM on the widened inputs, rounded to FP32 on output.
    Fp64Oracle,
    /// Resolved by the dispatcher.
    Auto,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Native => "native_fp32",
            Mode::Bf16x9 => "bf16x9",
            Mode::Bf16x6 => "bf16x6",
            Mode::Fp64Oracle => "fp64_oracle",
            Mode::Auto => "auto",
        }
    }

    pub fn is_emulated(self) -> bool {
        matches!(self, Mode::Bf16x9 | Mode::Bf16x6)
    }

    /// Plane products per output element, `None` for `Auto`.
    pub fn products_per_fma(self) -> Option<u64> {
        match self {
            Mode::Native | Mode::Fp64Oracle => Some(1),
            Mode::Bf16x9 => Some(9),
            Mode::Bf16x6 => Some(6),
            Mode::Auto => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "native" | "native_fp32" | "fp32" => Ok(Mode::Native),
            "bf16x9" => Ok(Mode::Bf16x9),
            "bf16x6" => Ok(Mode::Bf16x6),
            "fp64" | "fp64_oracle" => Ok(Mode::Fp64Oracle),
            "auto" => Ok(Mode::Auto),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// Summation order over the k dimension.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum SumOrder {
    /// One running FMA chain over k = 0, 1, 2, ...
    #[default]
    Sequential,
    /// Sequential partial sums over blocks of this many k, then added in order.
    Blocked(usize),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GemmRequest {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub trans_a: Transpose,
    pub trans_b: Transpose,
    pub alpha: f32,
    pub beta: f32,
    pub mode: Mode,
    pub order: SumOrder,
}

impl GemmRequest {
    /// `C = A * B` with no transposes, native mode.
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        GemmRequest {
            m,
            n,
            k,
            trans_a: Transpose::None,
            trans_b: Transpose::None,
            alpha: 1.0,
            beta: 0.0,
            mode: Mode::Native,
            order: SumOrder::Sequential,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_alpha_beta(mut self, alpha: f32, beta: f32) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_transpose(mut self, trans_a: Transpose, trans_b: Transpose) -> Self {
        self.trans_a = trans_a;
        self.trans_b = trans_b;
        self
    }

    pub fn with_order(mut self, order: SumOrder) -> Self {
        self.order = order;
        self
    }

    /// Stored shapes of A and B implied by the dims and transposes.
    pub fn operand_shapes(&self) -> ((usize, usize), (usize, usize)) {
        let a = match self.trans_a {
            Transpose::None => (self.m, self.k),
            Transpose::Transpose => (self.k, self.m),
        };
        let b = match self.trans_b {
            Transpose::None => (self.k, self.n),
            Transpose::Transpose => (self.n, self.k),
        };
        (a, b)
    }

    pub fn validate<T: Copy>(&self, a: &Matrix<T>, b: &Matrix<T>, c: &Matrix<T>) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::DimensionMismatch(format!(
                "m, n, k must be positive (got {}x{}x{})",
                self.m, self.n, self.k
            )));
        }
        if let SumOrder::Blocked(0) = self.order {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        let (sa, sb) = self.operand_shapes();
        let check = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, request needs {}x{}",
                    got.0, got.1, want.0, want.1
                )))
            }
        };
        check("A", a.shape(), sa)?;
        check("B", b.shape(), sb)?;
        check("C", c.shape(), (self.m, self.n))
    }
}

trait Real: Copy + Default + Send + Sync + std::ops::Add<Output = Self> {
    fn fma(self, b: Self, c: Self) -> Self;
}

impl Real for f32 {
    #[inline(always)]
    fn fma(self, b: f32, c: f32) -> f32 {
        self.mul_add(b, c)
    }
}

impl Real for f64 {
    #[inline(always)]
    fn fma(self, b: f64, c: f64) -> f64 {
        self.mul_add(b, c)
    }
}

/// `acc[j] += sum_p a_row[p] * b[p, j]`, one FMA chain per j.
#[inline]
fn accumulate_row<T: Real>(acc: &mut [T], a_row: &[T], b: &Matrix<T>, order: SumOrder) {
    match order {
        SumOrder::Sequential => {
            for (p, &a) in a_row.iter().enumerate() {
                for (c, &bv) in acc.iter_mut().zip(b.row(p)) {
                    *c = a.fma(bv, *c);
                }
            }
        }
        SumOrder::Blocked(block) => {
            let mut partial = vec![T::default(); acc.len()];
            for start in (0..a_row.len()).step_by(block) {
                partial.fill(T::default());
                let end = (start + block).min(a_row.len());
                for (p, &a) in a_row.iter().enumerate().take(end).skip(start) {
                    for (c, &bv) in partial.iter_mut().zip(b.row(p)) {
                        *c = a.fma(bv, *c);
                    }
                }
                for (c, &s) in acc.iter_mut().zip(&partial) {
                    *c = *c + s;
                }
            }
        }
    }
}

/// `alpha * dot + beta * c` as a single FMA; `beta == 0` does not read `c`
/// and keeps the sign of a zero product.
#[inline]
pub fn epilogue(alpha: f32, dot: f32, beta: f32, c: f32) -> f32 {
    if beta == 0.0 {
        alpha * dot
    } else {
        alpha.mul_add(dot, beta * c)
    }
}

#[inline]
fn epilogue64(alpha: f64, dot: f64, beta: f64, c: f64) -> f64 {
    if beta == 0.0 {
        alpha * dot
    } else {
        alpha.mul_add(dot, beta * c)
    }
}

fn plain_gemm<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    order: SumOrder,
    finish: impl Fn(usize, usize, T) -> T + Sync,
) -> Matrix<T> {
    let (m, n) = (a.rows(), b.cols());
    let mut out = Matrix::<T>::zeros(m, n);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            accumulate_row(row, a.row(i), b, order);
            for (j, v) in row.iter_mut().enumerate() {
                *v = finish(i, j, *v);
            }
        });
    out
}

/// FP64 reference GEMM with sequential FMA accumulation over k.
pub fn gemm_fp64(req: &GemmRequest, a: &MatrixF64, b: &MatrixF64, c: &MatrixF64) -> Result<MatrixF64> {
    req.validate(a, b, c)?;
    let (opa, opb) = (a.op(req.trans_a), b.op(req.trans_b));
    let (alpha, beta) = (req.alpha as f64, req.beta as f64);
    Ok(plain_gemm(&opa, &opb, SumOrder::Sequential, |i, j, d| {
        epilogue64(alpha, d, beta, c.get(i, j))
    }))
}

/// Native FP32 GEMM: the same loop structure as [`gemm_fp64`] in FP32.
pub fn gemm_fp32_native(req: &GemmRequest, a: &MatrixF32, b: &MatrixF32, c: &MatrixF32) -> Result<MatrixF32> {
    req.validate(a, b, c)?;
    let (opa, opb) = (a.op(req.trans_a), b.op(req.trans_b));
    Ok(plain_gemm(&opa, &opb, req.order, |i, j, d| {
        epilogue(req.alpha, d, req.beta, c.get(i, j))
    }))
}

/// One scaled-accumulation step: `acc_scale * acc + ai * bj`.
///
/// Each bf16 pair product is exact in FP32 (barring underflow) and is added
/// with a single rounding per k step. The scale multiplies the incoming
/// accumulator once, before any products are added.
pub fn gemm_bf16_product(ai: &Bf16Plane, bj: &Bf16Plane, acc: &MatrixF32, acc_scale: f32) -> Result<MatrixF32> {
    if ai.cols() != bj.rows() || acc.shape() != (ai.rows(), bj.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} * {}x{} into {}x{}",
            ai.rows(),
            ai.cols(),
            bj.rows(),
            bj.cols(),
            acc.rows(),
            acc.cols()
        )));
    }
    let (a, b) = (ai.widen(), bj.widen());
    let mut out = acc.clone();
    out.as_mut_slice()
        .par_chunks_mut(b.cols().max(1))
        .enumerate()
        .for_each(|(i, row)| {
            if acc_scale != 1.0 {
                row.iter_mut().for_each(|v| *v *= acc_scale);
            }
            accumulate_row(row, a.row(i), &b, SumOrder::Sequential);
        });
    Ok(out)
}

/// Plane index pairs `(i, j)` with `i + j == band`, ascending `i`.
pub fn band_pairs(band: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..3usize).filter_map(move |i| band.checked_sub(i).filter(|&j| j < 3).map(|j| (i, j)))
}

/// Highest band index used by an emulated mode.
fn top_band(mode: Mode) -> Result<usize> {
    match mode {
        Mode::Bf16x9 => Ok(4),
        Mode::Bf16x6 => Ok(2),
        other => Err(Error::InvalidMode(other)),
    }
}

/// Emulated SGEMM from bf16 triplets with banded FP32 accumulation.
///
/// Rows or columns touched by a NaN or infinity are recomputed afterwards by
/// [`apply_patches`].
pub fn gemm_emulated(req: &GemmRequest, a: &MatrixF32, b: &MatrixF32, c: &MatrixF32) -> Result<MatrixF32> {
    let top = top_band(req.mode)?;
    req.validate(a, b, c)?;
    let (ta, ra) = decompose_matrix(a, req.trans_a);
    let (tb, rb) = decompose_matrix(b, req.trans_b);
    let pa: Vec<MatrixF32> = ta.planes.iter().map(Bf16Plane::widen).collect();
    let pb: Vec<MatrixF32> = tb.planes.iter().map(Bf16Plane::widen).collect();

    let n = req.n;
    let mut out = MatrixF32::zeros(req.m, n);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, acc)| {
            for band in (0..=top).rev() {
                if band != top {
                    acc.iter_mut().for_each(|v| *v *= SCALE_STEP);
                }
                for (pi, pj) in band_pairs(band) {
                    accumulate_row(acc, pa[pi].row(i), &pb[pj], req.order);
                }
            }
            for (j, v) in acc.iter_mut().enumerate() {
                *v = epilogue(req.alpha, *v, req.beta, c.get(i, j));
            }
        });

    let plan = plan_patches(&ra, &rb, req.m, req.n);
    if !plan.is_empty() {
        apply_patches(&mut out, &plan, req, a, b, c);
    }
    Ok(out)
}

/// Multiply-add counts for a resolved request.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FlopCount {
    /// Multiply-adds issued on the reduced-precision units.
    pub emulated_products: u64,
    /// Multiply-adds a native SGEMM would issue, `m * n * k`.
    pub native_products: u64,
    pub ratio: f64,
}

pub fn flop_count(req: &GemmRequest) -> Result<FlopCount> {
    let per = req.mode.products_per_fma().ok_or(Error::InvalidMode(req.mode))?;
    let native = (req.m as u64) * (req.n as u64) * (req.k as u64);
    let emulated = native * per;
    Ok(FlopCount {
        emulated_products: emulated,
        native_products: native,
        ratio: per as f64,
    })
}

/// Result of [`gemm`]: the output and the mode that actually ran.
#[derive(Clone, Debug)]
pub struct GemmOutput {
    pub c: MatrixF32,
    pub mode: Mode,
}

/// Run `req`, resolving `Mode::Auto` through `policy`.
pub fn gemm(
    req: &GemmRequest,
    a: &MatrixF32,
    b: &MatrixF32,
    c: &MatrixF32,
    policy: &DispatchPolicy,
) -> Result<GemmOutput> {
    let mode = match req.mode {
        Mode::Auto => select_mode(req, policy),
        m => m,
    };
    let req = GemmRequest { mode, ..*req };
    let c = match mode {
        Mode::Native => gemm_fp32_native(&req, a, b, c)?,
        Mode::Bf16x9 | Mode::Bf16x6 => gemm_emulated(&req, a, b, c)?,
        Mode::Fp64Oracle => gemm_fp64(&req, &a.to_f64(), &b.to_f64(), &c.to_f64())?.to_f32(),
        Mode::Auto => unreachable!("select_mode never returns Auto"),
    };
    Ok(GemmOutput { c, mode })
}

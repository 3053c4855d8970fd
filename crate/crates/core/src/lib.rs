//! FP32 matrix multiplication emulated with bfloat16 triplets.
//!
//! Each FP32 operand is split losslessly into three bf16 values at scales
//! 2^0, 2^-8 and 2^-16. The nine (or six) pairwise plane products are
//! accumulated in FP32 along bands of equal scale, which reproduces, and on
//! ill-conditioned data usually improves on, native SGEMM accuracy.
//!
//! The crate also carries the tooling to measure that claim: an FP64 oracle,
//! a generator for matrices with a prescribed average dot-product condition
//! number, componentwise and RMS/SNR error metrics, and two sweeps.
//!
//! ```
//! use bf16x9::{gemm_emulated, gemm_fp32_native, GemmRequest, MatrixF32, Mode};
//!
//! let a = MatrixF32::from_vec(1, 1, vec![1.0 + 2f32.powi(-20)]).unwrap();
//! let b = MatrixF32::from_vec(1, 1, vec![1.0]).unwrap();
//! let c = MatrixF32::zeros(1, 1);
//! let req = GemmRequest::new(1, 1, 1).with_mode(Mode::Bf16x9);
//! let d = gemm_emulated(&req, &a, &b, &c).unwrap();
//! assert_eq!(d.get(0, 0), a.get(0, 0));
//! assert_eq!(d, gemm_fp32_native(&GemmRequest::new(1, 1, 1), &a, &b, &c).unwrap());
//! ```
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

pub mod bf16;
pub mod cli;
pub mod decompose;
pub mod dispatch;
pub mod error;
pub mod gemm;
pub mod lab;
pub mod matrix;
pub mod matrix_io;
pub mod verify;

pub use bf16::{classify, round_to_bf16, widen, Bf16, FpClass};
pub use decompose::{
    apply_patches, decompose_fp32, decompose_matrix, plan_patches, recompose, PatchPlan,
    SpecialValueReport, Triplet, TripletMatrix,
};
pub use dispatch::{predict_cost, select_mode, CostParams, DispatchPolicy};
pub use error::{Error, Result};
pub use gemm::{
    flop_count, gemm, gemm_bf16_product, gemm_emulated, gemm_fp32_native, gemm_fp64, FlopCount,
    GemmRequest, Mode, SumOrder,
};
pub use matrix::{Bf16Plane, Matrix, MatrixF32, MatrixF64, Transpose};

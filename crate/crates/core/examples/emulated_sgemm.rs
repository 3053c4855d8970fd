//! Native SGEMM vs BF16x9 / BF16x6 on one random problem, scored against FP64.

use bf16x9::lab::{normal_matrix, relative_error_stats, rms_error, rng_from, snr_db};
use bf16x9::{gemm_emulated, gemm_fp32_native, gemm_fp64, GemmRequest, MatrixF32, Mode, Transpose};

fn main() -> bf16x9::Result<()> {
    let (m, n, k) = (96, 80, 512);
    let mut rng = rng_from(42);
    // B is stored transposed to show the op() handling.
    let a = normal_matrix(m, k, &mut rng);
    let bt = normal_matrix(n, k, &mut rng);
    let c = normal_matrix(m, n, &mut rng);

    let req = GemmRequest::new(m, n, k)
        .with_transpose(Transpose::None, Transpose::Transpose)
        .with_alpha_beta(1.0, 0.5);
    let reference = gemm_fp64(&req, &a.to_f64(), &bt.to_f64(), &c.to_f64())?;

    let runs: Vec<(Mode, MatrixF32)> = vec![
        (Mode::Native, gemm_fp32_native(&req, &a, &bt, &c)?),
        (Mode::Bf16x9, gemm_emulated(&req.with_mode(Mode::Bf16x9), &a, &bt, &c)?),
        (Mode::Bf16x6, gemm_emulated(&req.with_mode(Mode::Bf16x6), &a, &bt, &c)?),
    ];
    println!("{:>12} {:>12} {:>12} {:>9}", "mode", "avg rel", "max rel", "SNR dB");
    for (mode, out) in &runs {
        let s = relative_error_stats(out, &reference)?;
        let snr = snr_db(rms_error(out, &reference)?);
        println!("{:>12} {:>12.3e} {:>12.3e} {:>9.2}", mode.to_string(), s.avg, s.max, snr);
    }
    Ok(())
}

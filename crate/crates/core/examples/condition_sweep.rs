//! Average relative error against the target condition number, native FP32
//! vs BF16x9 on paired matrices. A small version of `bf16x9 sweep-cond`.

use bf16x9::lab::{cond_sweep, gen_cond_targeted, CondSweepConfig, GeneratorSpec};
use bf16x9::Mode;

fn main() -> bf16x9::Result<()> {
    let pair = gen_cond_targeted(&GeneratorSpec::new(64, 1e4, 1))?;
    println!(
        "one 64x64 pair at delta=1e4: realized average kappa {:.1}",
        pair.realized.average
    );

    let cfg = CondSweepConfig {
        deltas: vec![1e1, 1e3, 1e5],
        n: 64,
        trials: 10,
        modes: vec![Mode::Native, Mode::Bf16x9, Mode::Bf16x6],
        seed: 11,
        diag_scaling: None,
    };
    println!("{:>8} {:>12} {:>12} {:>12} {:>8} {:>10}", "delta", "mode", "avg rel", "max rel", "better", "kappa");
    for r in cond_sweep(&cfg)? {
        println!(
            "{:>8.0e} {:>12} {:>12.3e} {:>12.3e} {:>8.3} {:>10.1}",
            r.delta,
            r.mode.to_string(),
            r.report.avg_rel_err,
            r.report.max_rel_err,
            r.report.fraction_emulated_better,
            r.report.realized_avg_kappa
        );
    }
    Ok(())
}

//! How `Mode::Auto` picks a kernel, and how the environment overrides it.
//!
//! GEMM_EMULATION_MODE=bf16x6 cargo run --example hybrid_dispatch

use bf16x9::dispatch::{env_settings, predict_cost, select_mode, DispatchPolicy};
use bf16x9::{GemmRequest, Mode};

fn main() -> bf16x9::Result<()> {
    let policy = DispatchPolicy::default();
    println!("default policy: min_k={} min_mn={} {:?}", policy.min_k, policy.min_mn, policy.cost);
    println!("{:>6} {:>6} {:>6} {:>14} {:>14}  choice", "m", "n", "k", "native", "emulated");
    for (m, n, k) in [(4096, 4096, 8), (4096, 4096, 16), (64, 64, 4096), (512, 512, 64), (256, 256, 256), (4096, 4096, 4096)] {
        let req = GemmRequest::new(m, n, k).with_mode(Mode::Auto);
        let est = predict_cost(&req, &policy);
        println!(
            "{m:>6} {n:>6} {k:>6} {:>14.4e} {:>14.4e}  {}",
            est.native_time_units,
            est.emulated_time_units,
            select_mode(&req, &policy)
        );
    }

    let env = env_settings()?;
    let from_env = env.policy();
    let req = GemmRequest::new(4096, 4096, 8).with_mode(Mode::Auto);
    println!(
        "\nenvironment: mode={:?} min_k={:?}; default mode {}, 4096x4096x8 auto -> {}",
        env.mode,
        env.min_k,
        env.default_mode(),
        select_mode(&req, &from_env)
    );
    Ok(())
}

//! SNR(bf16x9) - SNR(fp32) over a coarse grid of input exponents, printed as
//! a text heatmap. `.` marks degenerate cells.

use bf16x9::lab::{exponent_sweep, ExponentGridSpec, ExponentRange};
use bf16x9::Mode;

fn main() -> bf16x9::Result<()> {
    let spec = ExponentGridSpec {
        exp_a: ExponentRange::new(-148, 124, 16),
        exp_b: ExponentRange::new(-148, 124, 16),
        m: 32,
        k: 64,
        n: 32,
        seed: 1,
    };
    let cells = exponent_sweep(&spec, &[Mode::Native, Mode::Bf16x9])?;
    let eb = spec.exp_b.values();
    print!("eA\\eB");
    for e in &eb {
        print!("{e:>6}");
    }
    println!();
    for ea in spec.exp_a.values() {
        print!("{ea:>5}");
        for &e in &eb {
            let c = cells.iter().find(|c| c.exp_a == ea && c.exp_b == e).unwrap();
            if c.degenerate {
                print!("{:>6}", ".");
            } else {
                let d = c.snr(Mode::Bf16x9).unwrap() - c.snr(Mode::Native).unwrap();
                print!("{:>6.1}", d);
            }
        }
        println!();
    }
    Ok(())
}

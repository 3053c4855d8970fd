//! Split a few FP32 values into bf16 triplets and put them back together.
//!
//! cargo run --example decompose_values -- 3.14159 0x00000001 -1e-3

use bf16x9::{decompose_fp32, recompose};

fn main() {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        args = ["1.0", "0.1", "2.9999998", "0x00000001", "-3.4028235e38", "inf"].map(String::from).to_vec();
    }
    for arg in &args {
        let x = match bf16x9::cli::parse_f32(arg) {
            Ok(x) => x,
            Err(e) => {
                eprintln!("{e}");
                continue;
            }
        };
        let t = decompose_fp32(x);
        let back = recompose(t);
        println!("{x:>14e}  0x{:08X}", x.to_bits());
        println!("    hi  0x{:04X}  {:e}", t.hi.to_bits(), t.hi.to_f32());
        println!("    mid 0x{:04X}  {:e}  (x 2^-8)", t.mid.to_bits(), t.mid.to_f32());
        println!("    lo  0x{:04X}  {:e}  (x 2^-16)", t.lo.to_bits(), t.lo.to_f32());
        println!("    back {back:e}  exact={}", back.to_bits() == x.to_bits());
    }
}

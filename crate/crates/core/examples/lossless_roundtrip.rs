//! Roundtrip a seeded sample of bit patterns (or all 2^32 with `--all`).

use bf16x9::verify::{roundtrip_exhaustive, roundtrip_sample};

fn main() {
    let all = std::env::args().any(|a| a == "--all");
    let s = if all { roundtrip_exhaustive() } else { roundtrip_sample(5_000_000, 0) };
    println!("checked   {}", s.checked);
    println!("zero      {}", s.zero);
    println!("subnormal {}", s.subnormal);
    println!("normal    {}", s.normal);
    println!("inf       {}", s.inf);
    println!("nan       {}", s.nan);
    println!("failures  {}", s.failures);
    if let Some(bits) = s.first_failure {
        println!("first failure 0x{bits:08X}");
        std::process::exit(2);
    }
}

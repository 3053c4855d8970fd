//! NaN and Inf handling: saturated triplets on the way in, patched outputs on
//! the way out.

use bf16x9::{decompose_fp32, decompose_matrix, gemm_emulated, plan_patches, GemmRequest, MatrixF32, Mode, Transpose};

fn show(label: &str, c: &MatrixF32) {
    println!("{label}:");
    for i in 0..c.rows() {
        let row: Vec<String> = c.row(i).iter().map(|v| format!("{v:>8.3}")).collect();
        println!("  [{}]", row.join(" "));
    }
}

fn main() -> bf16x9::Result<()> {
    let t = decompose_fp32(f32::INFINITY);
    println!("+inf -> {:?}, recomposes to {:e}", t.components(), t.recompose());

    let mut a = MatrixF32::from_fn(3, 3, |i, j| (i + j) as f32 * 0.5 + 1.0);
    let mut b = MatrixF32::identity(3, 1.0f32);
    a.set(0, 1, f32::NAN);
    a.set(2, 0, f32::INFINITY);
    a.set(2, 2, f32::NEG_INFINITY);
    b.set(2, 1, f32::INFINITY);

    let (_, ra) = decompose_matrix(&a, Transpose::None);
    let (_, rb) = decompose_matrix(&b, Transpose::None);
    println!("A specials: nan {:?}, inf {:?}", ra.nan_positions, ra.inf_positions);
    println!("B specials: inf {:?}", rb.inf_positions);
    let plan = plan_patches(&ra, &rb, 3, 3);
    println!("{} of 9 outputs are recomputed: {:?}", plan.len(), plan.entries);

    let req = GemmRequest::new(3, 3, 3).with_mode(Mode::Bf16x9);
    show("A * B (bf16x9, patched)", &gemm_emulated(&req, &a, &b, &MatrixF32::zeros(3, 3))?);
    Ok(())
}

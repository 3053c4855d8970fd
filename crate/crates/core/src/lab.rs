//! Accuracy laboratory: test-matrix generation, dot-product condition numbers,
//! error metrics against an FP64 reference, and the two sweeps (average
//! condition number, and input exponent grid).
//!
//! All randomness comes from ChaCha8 streams seeded through [`derive_seed`], so
//! every table is reproducible from its base seed regardless of how trials are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dispatch::DispatchPolicy;
use crate::error::{Error, Result};
use crate::gemm::{gemm, gemm_fp64, GemmRequest, Mode};
use crate::matrix::{MatrixF32, MatrixF64};

/// Mix a base seed with a path of indices (splitmix64 finalizer per step).
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of independent N(0, 1) samples rounded to FP32.
pub fn normal_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> MatrixF32 {
    MatrixF32::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal) as f32)
}

/// Haar-distributed orthonormal matrix: Householder QR of a Gaussian matrix
/// with the column signs fixed by diag(R).
pub fn random_orthonormal(n: usize, seed: u64) -> MatrixF64 {
    let mut rng = rng_from(seed);
    // Column-major working copy: cols[j][i] = G(i, j).
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut diag_sign = vec![1.0f64; n];

    for j in 0..n {
        let x = &cols[j][j..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = x.to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if j + 1 == n || vnorm == 0.0 {
            diag_sign[j] = if cols[j][j] < 0.0 { -1.0 } else { 1.0 };
            reflectors.push(Vec::new());
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vnorm);
        for col in cols.iter_mut().skip(j) {
            let seg = &mut col[j..];
            let d: f64 = seg.iter().zip(&v).map(|(a, b)| a * b).sum();
            seg.iter_mut().zip(&v).for_each(|(a, b)| *a -= 2.0 * d * b);
        }
        diag_sign[j] = if alpha < 0.0 { -1.0 } else { 1.0 };
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{n-2}, applied to the identity from the right end.
    let mut q = MatrixF64::identity(n, 1.0);
    for (j, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for c in 0..n {
            let d: f64 = (j..n).map(|r| q.get(r, c) * v[r - j]).sum();
            for r in j..n {
                q.set(r, c, q.get(r, c) - 2.0 * d * v[r - j]);
            }
        }
    }
    for c in 0..n {
        if diag_sign[c] < 0.0 {
            for r in 0..n {
                q.set(r, c, -q.get(r, c));
            }
        }
    }
    q
}

/// Dot-product condition number `|x| |y| / |x . y|`, infinite when `x . y = 0`.
pub fn dot_condition(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    if dot == 0.0 {
        f64::INFINITY
    } else {
        nx * ny / dot.abs()
    }
}

/// Per-element condition numbers of `A * B`.
#[derive(Clone, Debug)]
pub struct ConditionField {
    pub kappa: MatrixF64,
    /// Mean over the finite entries.
    pub average: f64,
}

pub fn condition_field(a: &MatrixF64, b: &MatrixF64) -> ConditionField {
    let bt = b.transpose();
    let kappa = MatrixF64::from_fn(a.rows(), b.cols(), |i, j| dot_condition(a.row(i), bt.row(j)));
    let finite: Vec<f64> = kappa.as_slice().iter().copied().filter(|k| k.is_finite()).collect();
    let average = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    ConditionField { kappa, average }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    /// Target average condition number, >= 1.
    pub delta: f64,
    pub seed: u64,
    /// Log-uniform range for an optional diagonal row scaling of A.
    pub diag_scaling: Option<(f64, f64)>,
}

impl GeneratorSpec {
    pub fn new(n: usize, delta: f64, seed: u64) -> Self {
        GeneratorSpec { n, delta, seed, diag_scaling: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 1.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be >= 1, got {}", self.delta)));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n must be >= 2, got {}", self.n)));
        }
        if let Some((lo, hi)) = self.diag_scaling {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidArgument("diagonal scaling range must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A test pair with a prescribed average dot-product condition number.
#[derive(Clone, Debug)]
pub struct CondTargetedPair {
    pub a: MatrixF32,
    pub b: MatrixF32,
    /// The FP64 factors before rounding to FP32.
    pub a64: MatrixF64,
    pub b64: MatrixF64,
    /// `A64 * B64` in exact arithmetic.
    pub c_exact: MatrixF64,
    /// Condition numbers of the FP32 pair.
    pub realized: ConditionField,
}

/// Build `C` first, then `A` orthonormal (optionally row-scaled by `D`) and
/// `B = A^-1 C`, so that `A * B = C` with every row of A and column of B of
/// norm near one.
pub fn gen_cond_targeted(spec: &GeneratorSpec) -> Result<CondTargetedPair> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = rng_from(derive_seed(spec.seed, &[0]));
    let inv = 1.0 / spec.delta;

    let mut c = MatrixF64::zeros(n, n);
    for j in 0..n {
        let near_one = rng.random_range(0..n);
        for i in 0..n {
            let mag = if i == near_one {
                rng.random_range(0.99..=1.01)
            } else {
                rng.random_range(0.9 * inv..=1.1 * inv)
            };
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            c.set(i, j, sign * mag);
        }
    }

    let q = random_orthonormal(n, derive_seed(spec.seed, &[1]));
    let d: Vec<f64> = match spec.diag_scaling {
        None => vec![1.0; n],
        Some((lo, hi)) => (0..n)
            .map(|_| {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo.ln()..hi.ln()).exp()
                }
            })
            .collect(),
    };

    let a64 = MatrixF64::from_fn(n, n, |i, j| d[i] * q.get(i, j));
    // B = Q^T D^-1 C
    let dc = MatrixF64::from_fn(n, n, |i, j| c.get(i, j) / d[i]);
    let qt = q.transpose();
    let b64 = gemm_fp64(&GemmRequest::new(n, n, n), &qt, &dc, &MatrixF64::zeros(n, n))?;

    let a = a64.to_f32();
    let b = b64.to_f32();
    let realized = condition_field(&a.to_f64(), &b.to_f64());
    Ok(CondTargetedPair { a, b, a64, b64, c_exact: c, realized })
}

#[derive(Clone, Debug)]
pub struct RelErrStats {
    pub avg: f64,
    pub max: f64,
    /// `|test - ref| / |ref|`, NaN where the reference is zero.
    pub per_element: MatrixF64,
    /// Elements skipped because the reference is exactly zero.
    pub zero_reference: usize,
}

fn check_same_shape(test: &MatrixF32, reference: &MatrixF64) -> Result<()> {
    if test.shape() != reference.shape() {
        return Err(Error::DimensionMismatch(format!(
            "test is {}x{}, reference is {}x{}",
            test.rows(),
            test.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    Ok(())
}

#[inline]
fn rel_err(t: f32, r: f64) -> f64 {
    let e = (t as f64 - r).abs() / r.abs();
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

/// Componentwise relative error in FP64.
pub fn relative_error_stats(test: &MatrixF32, reference: &MatrixF64) -> Result<RelErrStats> {
    check_same_shape(test, reference)?;
    let mut per_element = MatrixF64::filled(test.rows(), test.cols(), f64::NAN);
    let (mut sum, mut max, mut used, mut zero) = (0.0f64, 0.0f64, 0usize, 0usize);
    for (idx, (&t, &r)) in test.as_slice().iter().zip(reference.as_slice()).enumerate() {
        if r == 0.0 {
            zero += 1;
            continue;
        }
        let e = rel_err(t, r);
        per_element.as_mut_slice()[idx] = e;
        sum += e;
        max = max.max(e);
        used += 1;
    }
    let avg = if used == 0 { 0.0 } else { sum / used as f64 };
    Ok(RelErrStats { avg, max, per_element, zero_reference: zero })
}

/// Sums behind the normalized RMS, so several matrices can be pooled.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct RmsParts {
    pub err_sq: f64,
    pub ref_sq: f64,
}

impl RmsParts {
    pub fn of(test: &MatrixF32, reference: &MatrixF64) -> Result<Self> {
        check_same_shape(test, reference)?;
        let mut p = RmsParts::default();
        for (&t, &r) in test.as_slice().iter().zip(reference.as_slice()) {
            let d = t as f64 - r;
            p.err_sq += if d.is_nan() { f64::INFINITY } else { d * d };
            p.ref_sq += r * r;
        }
        Ok(p)
    }

    pub fn add(self, other: RmsParts) -> RmsParts {
        RmsParts {
            err_sq: self.err_sq + other.err_sq,
            ref_sq: self.ref_sq + other.ref_sq,
        }
    }

    pub fn rms(&self) -> Result<f64> {
        if self.ref_sq == 0.0 {
            return Err(Error::ZeroReference);
        }
        Ok((self.err_sq / self.ref_sq).sqrt())
    }
}

/// `sqrt(sum (test - ref)^2 / sum ref^2)`.
pub fn rms_error(test: &MatrixF32, reference: &MatrixF64) -> Result<f64> {
    RmsParts::of(test, reference)?.rms()
}

/// `-20 log10(rms)`; `+inf` for a perfect result.
pub fn snr_db(rms: f64) -> f64 {
    if rms == 0.0 {
        f64::INFINITY
    } else {
        -20.0 * rms.log10()
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    pub avg_rel_err: f64,
    pub max_rel_err: f64,
    /// Share of elements where this result beats native FP32 strictly.
    pub fraction_emulated_better: f64,
    pub rms: f64,
    pub snr_db: f64,
    pub realized_avg_kappa: f64,
}

/// Report for one result against an FP64 reference. `native` is the FP32
/// result the better-than fraction is measured against.
pub fn accuracy_report(
    test: &MatrixF32,
    reference: &MatrixF64,
    native: Option<&MatrixF32>,
    realized_avg_kappa: f64,
) -> Result<AccuracyReport> {
    let stats = relative_error_stats(test, reference)?;
    let fraction = match native {
        Some(nat) => {
            let (better, total) = better_fraction(&stats, &relative_error_stats(nat, reference)?);
            better as f64 / total.max(1) as f64
        }
        None => 0.0,
    };
    let rms = RmsParts::of(test, reference)?.rms().unwrap_or(f64::NAN);
    Ok(AccuracyReport {
        avg_rel_err: stats.avg,
        max_rel_err: stats.max,
        fraction_emulated_better: fraction,
        rms,
        snr_db: snr_db(rms),
        realized_avg_kappa,
    })
}

/// (strictly better count, compared count)
fn better_fraction(test: &RelErrStats, native: &RelErrStats) -> (usize, usize) {
    let mut better = 0;
    let mut total = 0;
    for (&e, &n) in test.per_element.as_slice().iter().zip(native.per_element.as_slice()) {
        if e.is_nan() || n.is_nan() {
            continue;
        }
        total += 1;
        if e < n {
            better += 1;
        }
    }
    (better, total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CondSweepConfig {
    pub deltas: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub diag_scaling: Option<(f64, f64)>,
}

impl Default for CondSweepConfig {
    fn default() -> Self {
        CondSweepConfig {
            deltas: (1..=6).map(|e| 10f64.powi(e)).collect(),
            n: 160,
            trials: 100,
            modes: vec![Mode::Native, Mode::Bf16x9],
            seed: 0,
            diag_scaling: None,
        }
    }
}

/// One (delta, mode) row of a condition sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub mode: Mode,
    pub trials: usize,
    pub report: AccuracyReport,
    /// Maximum componentwise relative error of each trial, in trial order.
    pub trial_max_rel_err: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct ModeAccum {
    err_sum: f64,
    err_count: usize,
    max: f64,
    better: usize,
    compared: usize,
    rms: RmsParts,
    trial_max: Vec<f64>,
}

/// For each delta, generate `trials` paired matrices and evaluate every mode
/// against FP64 on the same inputs.
pub fn cond_sweep(cfg: &CondSweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if cfg.modes.is_empty() {
        return Err(Error::InvalidArgument("at least one mode is required".into()));
    }
    let policy = DispatchPolicy::default();
    let n = cfg.n;
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        let per_trial: Vec<(Vec<(RelErrStats, RmsParts)>, RelErrStats, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| -> Result<_> {
                let seed = derive_seed(cfg.seed, &[delta.to_bits(), trial as u64]);
                let spec = GeneratorSpec {
                    n,
                    delta,
                    seed,
                    diag_scaling: cfg.diag_scaling,
                };
                let pair = gen_cond_targeted(&spec)?;
                let req = GemmRequest::new(n, n, n);
                let zero32 = MatrixF32::zeros(n, n);
                let reference = gemm_fp64(&req, &pair.a.to_f64(), &pair.b.to_f64(), &MatrixF64::zeros(n, n))?;
                let native = gemm(&req, &pair.a, &pair.b, &zero32, &policy)?.c;
                let native_stats = relative_error_stats(&native, &reference)?;
                let mut out = Vec::with_capacity(cfg.modes.len());
                for &mode in &cfg.modes {
                    let result = if mode == Mode::Native {
                        native.clone()
                    } else {
                        gemm(&req.with_mode(mode), &pair.a, &pair.b, &zero32, &policy)?.c
                    };
                    out.push((relative_error_stats(&result, &reference)?, RmsParts::of(&result, &reference)?));
                }
                Ok((out, native_stats, pair.realized.average))
            })
            .collect::<Result<_>>()?;

        let mut acc = vec![ModeAccum::default(); cfg.modes.len()];
        let mut kappa_sum = 0.0;
        for (per_mode, native_stats, kappa) in &per_trial {
            kappa_sum += kappa;
            for (a, (stats, rms)) in acc.iter_mut().zip(per_mode) {
                let used = stats.per_element.as_slice().iter().filter(|e| !e.is_nan()).count();
                a.err_sum += stats.avg * used as f64;
                a.err_count += used;
                a.max = a.max.max(stats.max);
                let (b, t) = better_fraction(stats, native_stats);
                a.better += b;
                a.compared += t;
                a.rms = a.rms.add(*rms);
                a.trial_max.push(stats.max);
            }
        }
        let realized = kappa_sum / cfg.trials as f64;
        for (&mode, a) in cfg.modes.iter().zip(acc) {
            let rms = a.rms.rms().unwrap_or(f64::NAN);
            rows.push(SweepRow {
                delta,
                mode,
                trials: cfg.trials,
                report: AccuracyReport {
                    avg_rel_err: a.err_sum / a.err_count.max(1) as f64,
                    max_rel_err: a.max,
                    fraction_emulated_better: a.better as f64 / a.compared.max(1) as f64,
                    rms,
                    snr_db: snr_db(rms),
                    realized_avg_kappa: realized,
                },
                trial_max_rel_err: a.trial_max,
            });
        }
    }
    Ok(rows)
}

/// Inclusive arithmetic range of binary exponents.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ExponentRange {
    pub start: i32,
    pub end: i32,
    pub step: u32,
}

impl ExponentRange {
    pub fn new(start: i32, end: i32, step: u32) -> Self {
        ExponentRange { start, end, step }
    }

    pub fn values(&self) -> Vec<i32> {
        if self.step == 0 || self.start > self.end {
            return Vec::new();
        }
        (self.start..=self.end).step_by(self.step as usize).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.step == 0 || self.start > self.end {
            return Err(Error::InvalidArgument(format!("{name} exponent range is empty")));
        }
        if self.start < -149 || self.end > 127 {
            return Err(Error::InvalidArgument(format!(
                "{name} exponent range {}..={} leaves [-149, 127]",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentGridSpec {
    pub exp_a: ExponentRange,
    pub exp_b: ExponentRange,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for ExponentGridSpec {
    fn default() -> Self {
        ExponentGridSpec {
            exp_a: ExponentRange::new(-140, 124, 8),
            exp_b: ExponentRange::new(-140, 124, 8),
            m: 512,
            n: 2048,
            k: 1024,
            seed: 0,
        }
    }
}

/// One heatmap cell. `snr_db` is empty when the cell is degenerate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentCell {
    pub exp_a: i32,
    pub exp_b: i32,
    pub degenerate: bool,
    pub snr_db: Vec<(Mode, f64)>,
}

impl ExponentCell {
    pub fn snr(&self, mode: Mode) -> Option<f64> {
        self.snr_db.iter().find(|(m, _)| *m == mode).map(|&(_, s)| s)
    }
}

/// Random sign times a uniform 23-bit significand in [1, 2), times 2^exp,
/// rounded to FP32 (subnormal below 2^-126).
pub fn exponent_matrix(rows: usize, cols: usize, exp: i32, rng: &mut impl Rng) -> MatrixF32 {
    let scale = 2f64.powi(exp);
    MatrixF32::from_fn(rows, cols, |_, _| {
        let bits: u32 = rng.random();
        let sig = 1.0 + (bits >> 9) as f64 / 8_388_608.0;
        let sign = if bits & 1 == 0 { 1.0 } else { -1.0 };
        (sign * sig * scale) as f32
    })
}

/// True when no FP32 output can carry the reference: every element rounds to
/// zero, or some element overflows.
pub fn is_degenerate(reference: &MatrixF64) -> bool {
    let mut all_zero = true;
    for &r in reference.as_slice() {
        let r32 = r as f32;
        if r32.is_infinite() {
            return true;
        }
        if r32 != 0.0 {
            all_zero = false;
        }
    }
    all_zero
}

/// SNR of each mode on every (exp_a, exp_b) cell of the grid.
pub fn exponent_sweep(spec: &ExponentGridSpec, modes: &[Mode]) -> Result<Vec<ExponentCell>> {
    spec.exp_a.validate("A")?;
    spec.exp_b.validate("B")?;
    if spec.m == 0 || spec.n == 0 || spec.k == 0 {
        return Err(Error::InvalidArgument("grid dims must be positive".into()));
    }
    let policy = DispatchPolicy::default();
    let cells: Vec<(i32, i32)> = spec
        .exp_a
        .values()
        .into_iter()
        .flat_map(|ea| spec.exp_b.values().into_iter().map(move |eb| (ea, eb)))
        .collect();
    cells
        .into_par_iter()
        .map(|(ea, eb)| {
            let mut rng = rng_from(derive_seed(spec.seed, &[ea as i64 as u64, eb as i64 as u64]));
            let a = exponent_matrix(spec.m, spec.k, ea, &mut rng);
            let b = exponent_matrix(spec.k, spec.n, eb, &mut rng);
            let req = GemmRequest::new(spec.m, spec.n, spec.k);
            let reference = gemm_fp64(&req, &a.to_f64(), &b.to_f64(), &MatrixF64::zeros(spec.m, spec.n))?;
            if is_degenerate(&reference) {
                return Ok(ExponentCell { exp_a: ea, exp_b: eb, degenerate: true, snr_db: Vec::new() });
            }
            let zero = MatrixF32::zeros(spec.m, spec.n);
            let mut snr = Vec::with_capacity(modes.len());
            for &mode in modes {
                let out = gemm(&req.with_mode(mode), &a, &b, &zero, &policy)?.c;
                snr.push((mode, snr_db(rms_error(&out, &reference)?)));
            }
            Ok(ExponentCell { exp_a: ea, exp_b: eb, degenerate: false, snr_db: snr })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn orthonormal_n1() {
        let q = random_orthonormal(1, 3);
        assert_eq!(q.get(0, 0).abs(), 1.0);
    }

    #[test]
    fn orthonormal_property() {
        for (n, seed) in [(2, 1), (7, 2), (40, 3), (160, 4)] {
            let q = random_orthonormal(n, seed);
            let qtq = gemm_fp64(&GemmRequest::new(n, n, n), &q.transpose(), &q, &MatrixF64::zeros(n, n)).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((qtq.get(i, j) - want).abs() <= 1e-12, "n={n} ({i},{j})");
                }
                let col: f64 = (0..n).map(|r| q.get(r, i).powi(2)).sum::<f64>().sqrt();
                assert!((col - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dot_condition_examples() {
        assert_eq!(dot_condition(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert!((dot_condition(&[3.0, 4.0], &[4.0, 3.0]) - 25.0 / 24.0).abs() < 1e-15);
        assert_eq!(dot_condition(&[1.0, 0.0], &[0.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn generator_rejects_bad_delta() {
        assert!(gen_cond_targeted(&GeneratorSpec::new(8, 0.5, 0)).is_err());
        assert!(gen_cond_targeted(&GeneratorSpec::new(1, 10.0, 0)).is_err());
    }

    #[test]
    fn generator_delta_one_small_n() {
        // n = 2: kappa = |C_j| / |C_ij| <= sqrt(2) * 1.1 / 0.9 < 2.
        for seed in 0..20 {
            let p = gen_cond_targeted(&GeneratorSpec::new(2, 1.0, seed)).unwrap();
            assert!((1.0..=2.0).contains(&p.realized.average), "{}", p.realized.average);
            assert!(p.c_exact.as_slice().iter().all(|c| (0.9..=1.1).contains(&c.abs())));
        }
    }

    #[test]
    fn generator_reproduces_c_and_is_deterministic() {
        for n in [16, 160] {
            for diag in [None, Some((0.5, 2.0))] {
                let spec = GeneratorSpec { n, delta: 1e3, seed: 9, diag_scaling: diag };
                let p = gen_cond_targeted(&spec).unwrap();
                let ab = gemm_fp64(&GemmRequest::new(n, n, n), &p.a64, &p.b64, &MatrixF64::zeros(n, n)).unwrap();
                let scale = p.c_exact.max_abs();
                for (x, y) in ab.as_slice().iter().zip(p.c_exact.as_slice()) {
                    assert!((x - y).abs() <= 1e-10 * scale);
                }
                let q = gen_cond_targeted(&spec).unwrap();
                assert!(p.a.bits_eq(&q.a) && p.b.bits_eq(&q.b));
                assert!(p.realized.kappa.as_slice().iter().all(|&k| k >= 1.0));
            }
        }
    }

    #[test]
    fn generator_hits_large_delta() {
        for seed in 0..3 {
            let p = gen_cond_targeted(&GeneratorSpec::new(160, 1e6, seed)).unwrap();
            let avg = p.realized.average;
            assert!(avg >= 1e6 / 4.0 && avg <= 4e6, "{avg}");
        }
    }

    #[test]
    fn relative_error_examples() {
        let r = MatrixF64::from_vec(1, 2, vec![1.0, 3.0]).unwrap();
        let s = relative_error_stats(&r.to_f32(), &r).unwrap();
        assert_eq!((s.avg, s.max), (0.0, 0.0));

        let s = relative_error_stats(&MatrixF32::filled(1, 1, 1.01), &MatrixF64::filled(1, 1, 1.0)).unwrap();
        assert!((s.max - 0.01).abs() < 1e-7);

        let third = MatrixF64::from_fn(4, 4, |i, j| 1.0 / (3.0 + i as f64 * 7.0 + j as f64));
        let s = relative_error_stats(&third.to_f32(), &third).unwrap();
        assert!(s.max <= 2f64.powi(-24) * (1.0 + 1e-12));

        let z = MatrixF64::from_vec(1, 2, vec![0.0, 2.0]).unwrap();
        let s = relative_error_stats(&MatrixF32::filled(1, 2, 2.0), &z).unwrap();
        assert_eq!(s.zero_reference, 1);
        assert_eq!(s.max, 0.0);
        assert!(relative_error_stats(&MatrixF32::zeros(2, 1), &z).is_err());
    }

    #[test]
    fn rms_and_snr_examples() {
        let r = MatrixF64::filled(2, 2, 3.0);
        assert_eq!(rms_error(&r.to_f32(), &r).unwrap(), 0.0);
        assert_eq!(snr_db(0.0), f64::INFINITY);
        let rms = rms_error(&MatrixF32::filled(1, 1, 1.01), &MatrixF64::filled(1, 1, 1.0)).unwrap();
        assert!((rms - 0.01).abs() < 1e-8);
        assert!((snr_db(rms) - 40.0).abs() < 1e-5);
        assert_eq!(snr_db(0.01), 40.0);
        assert!(matches!(rms_error(&MatrixF32::zeros(1, 1), &MatrixF64::zeros(1, 1)), Err(Error::ZeroReference)));
    }

    #[test]
    fn sweep_native_self_comparison_and_determinism() {
        let cfg = CondSweepConfig {
            deltas: vec![10.0, 1e3],
            n: 24,
            trials: 3,
            modes: vec![Mode::Native, Mode::Bf16x9, Mode::Fp64Oracle],
            seed: 5,
            diag_scaling: None,
        };
        let rows = cond_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert_eq!(r.trial_max_rel_err.len(), 3);
            assert!((0.0..=1.0).contains(&r.report.fraction_emulated_better));
            if r.mode == Mode::Native {
                assert_eq!(r.report.fraction_emulated_better, 0.0);
            }
        }
        assert_eq!(rows, cond_sweep(&cfg).unwrap());
        assert!(cond_sweep(&CondSweepConfig { trials: 0, ..cfg }).is_err());
    }

    #[test]
    fn native_report_against_itself_is_zero() {
        let mut rng = rng_from(1);
        let a = normal_matrix(8, 8, &mut rng);
        let b = normal_matrix(8, 8, &mut rng);
        let c = crate::gemm::gemm_fp32_native(&GemmRequest::new(8, 8, 8), &a, &b, &MatrixF32::zeros(8, 8)).unwrap();
        let rep = accuracy_report(&c, &c.to_f64(), Some(&c), 1.0).unwrap();
        assert_eq!(rep.avg_rel_err, 0.0);
        assert_eq!(rep.max_rel_err, 0.0);
        assert_eq!(rep.fraction_emulated_better, 0.0);
        assert_eq!(rep.snr_db, f64::INFINITY);
    }

    #[test]
    fn exponent_grid_cells_and_degenerate() {
        let spec = ExponentGridSpec {
            exp_a: ExponentRange::new(-149, -141, 8),
            exp_b: ExponentRange::new(-149, 0, 149),
            m: 4,
            n: 4,
            k: 4,
            seed: 2,
        };
        let cells = exponent_sweep(&spec, &[Mode::Native, Mode::Bf16x9]).unwrap();
        assert_eq!(cells.len(), 4);
        let dd = cells.iter().find(|c| c.exp_a == -149 && c.exp_b == -149).unwrap();
        assert!(dd.degenerate && dd.snr_db.is_empty());
        let dn = cells.iter().find(|c| c.exp_a == -141 && c.exp_b == 0).unwrap();
        assert!(!dn.degenerate);
        assert!(dn.snr(Mode::Bf16x9).is_some());
        assert_eq!(cells, exponent_sweep(&spec, &[Mode::Native, Mode::Bf16x9]).unwrap());
    }

    #[test]
    fn exponent_grid_validation() {
        let mut spec = ExponentGridSpec { m: 2, n: 2, k: 2, ..Default::default() };
        spec.exp_a = ExponentRange::new(-150, 0, 1);
        assert!(exponent_sweep(&spec, &[Mode::Native]).is_err());
        spec.exp_a = ExponentRange::new(3, 2, 1);
        assert!(exponent_sweep(&spec, &[Mode::Native]).is_err());
        assert_eq!(ExponentRange::new(-140, 124, 8).values().len(), 34);
    }

    #[test]
    fn exponent_matrix_hits_subnormals() {
        let mut rng = rng_from(0);
        let m = exponent_matrix(8, 8, -140, &mut rng);
        assert!(m.as_slice().iter().all(|x| x.is_subnormal()));
        let m = exponent_matrix(8, 8, 5, &mut rng);
        assert!(m.as_slice().iter().all(|x| (32.0..64.0).contains(&x.abs())));
    }

    proptest! {
        #[test]
        fn rms_is_scale_invariant(vals in proptest::collection::vec(0.1f64..10.0, 6), p in -20i32..20) {
            let r = MatrixF64::from_vec(2, 3, vals.clone()).unwrap();
            let t = MatrixF32::from_fn(2, 3, |i, j| (vals[i * 3 + j] * 1.001) as f32);
            let s = 2f64.powi(p);
            let rs = r.map(|x| x * s);
            let ts = t.map(|x| x * s as f32);
            prop_assert_eq!(rms_error(&t, &r).unwrap(), rms_error(&ts, &rs).unwrap());
        }

        #[test]
        fn kappa_at_least_one(x in proptest::collection::vec(-5.0f64..5.0, 1..12), seed in any::<u64>()) {
            let mut rng = rng_from(seed);
            let y: Vec<f64> = x.iter().map(|_| rng.random_range(-5.0..5.0)).collect();
            let k = dot_condition(&x, &y);
            prop_assert!(k >= 1.0 - 1e-12);
        }
    }
}

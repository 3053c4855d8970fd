//! Choosing between native and emulated SGEMM for `Mode::Auto`.
//!
//! The rule is a size gate (k and m*n thresholds) followed by a two-term
//! roofline estimate. Emulation runs nine times the multiply-adds on units
//! that are `bf16_flops_per_unit / native_flops_per_unit` times faster, and
//! moves three times the operand traffic for A and B.
//!
//! The environment opt-in:
//!
//! * `GEMM_EMULATION_MODE` = `auto` | `native` | `bf16x9` | `bf16x6`.
//!   Unset means `native`. A concrete mode forces every auto request.
//! * `GEMM_EMULATION_MIN_K` = positive integer, overrides the k threshold.
//!
//! Both are read once per process and cached.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::gemm::{GemmRequest, Mode};

pub const ENV_MODE: &str = "GEMM_EMULATION_MODE";
pub const ENV_MIN_K: &str = "GEMM_EMULATION_MIN_K";

/// Roofline parameters, in arbitrary but consistent time units.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CostParams {
    /// Native FP32 multiply-adds per time unit.
    pub native_flops_per_unit: f64,
    /// bf16 multiply-adds (with FP32 accumulate) per time unit.
    pub bf16_flops_per_unit: f64,
    /// Memory bytes per time unit.
    pub bytes_per_unit: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        // bf16 peak 28x native FP32; 5 native multiply-adds per byte.
        CostParams {
            native_flops_per_unit: 1.0,
            bf16_flops_per_unit: 28.0,
            bytes_per_unit: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchPolicy {
    pub min_k: usize,
    /// Minimum output size m*n, in elements.
    pub min_mn: usize,
    pub forced_mode: Option<Mode>,
    pub cost: CostParams,
}

impl Default for DispatchPolicy {
    fn default() -> Self {
        DispatchPolicy {
            min_k: 16,
            min_mn: 4096,
            forced_mode: None,
            cost: CostParams::default(),
        }
    }
}

impl DispatchPolicy {
    /// Policy with the environment's forced mode and k threshold applied.
    pub fn from_env() -> Result<Self> {
        Ok(env_settings()?.policy())
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_k == 0 || self.min_mn == 0 {
            return Err(Error::InvalidArgument("dispatch thresholds must be >= 1".into()));
        }
        let c = &self.cost;
        if !(c.native_flops_per_unit > 0.0 && c.bf16_flops_per_unit > 0.0 && c.bytes_per_unit > 0.0) {
            return Err(Error::InvalidArgument("cost parameters must be positive".into()));
        }
        if matches!(self.forced_mode, Some(Mode::Auto)) {
            return Err(Error::InvalidArgument("forced mode cannot be auto".into()));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CostEstimate {
    pub native_time_units: f64,
    pub emulated_time_units: f64,
}

/// Roofline time estimates for the native and nine-product kernels.
pub fn predict_cost(req: &GemmRequest, policy: &DispatchPolicy) -> CostEstimate {
    let (m, n, k) = (req.m as f64, req.n as f64, req.k as f64);
    let c = &policy.cost;
    let mnk = m * n * k;
    let operand_bytes = 4.0 * (m * k + k * n);
    let c_bytes = 4.0 * 2.0 * m * n;

    let native_compute = mnk / c.native_flops_per_unit;
    let native_memory = (operand_bytes + c_bytes) / c.bytes_per_unit;
    let emulated_compute = 9.0 * mnk / c.bf16_flops_per_unit;
    let emulated_memory = (3.0 * operand_bytes + c_bytes) / c.bytes_per_unit;

    CostEstimate {
        native_time_units: native_compute.max(native_memory),
        emulated_time_units: emulated_compute.max(emulated_memory),
    }
}

/// Resolve an auto request to a concrete mode.
pub fn select_mode(req: &GemmRequest, policy: &DispatchPolicy) -> Mode {
    if let Some(forced) = policy.forced_mode {
        return forced;
    }
    if req.k < policy.min_k || req.m.saturating_mul(req.n) < policy.min_mn {
        return Mode::Native;
    }
    let est = predict_cost(req, policy);
    if est.emulated_time_units < est.native_time_units {
        Mode::Bf16x9
    } else {
        Mode::Native
    }
}

/// Parsed emulation environment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnvSettings {
    /// `None` when the variable is unset.
    pub mode: Option<Mode>,
    pub min_k: Option<usize>,
}

impl EnvSettings {
    pub fn parse(mode: Option<&str>, min_k: Option<&str>) -> Result<Self> {
        let mode = match mode.map(str::trim) {
            None | Some("") => None,
            Some(s) => match s.parse::<Mode>()? {
                Mode::Fp64Oracle => {
                    return Err(Error::InvalidArgument(format!("{ENV_MODE}={s} is not supported")))
                }
                m => Some(m),
            },
        };
        let min_k = match min_k.map(str::trim) {
            None | Some("") => None,
            Some(s) => match s.parse::<usize>() {
                Ok(v) if v >= 1 => Some(v),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "{ENV_MIN_K} must be a positive integer, got `{s}`"
                    )))
                }
            },
        };
        Ok(EnvSettings { mode, min_k })
    }

    pub fn from_process_env() -> Result<Self> {
        let mode = std::env::var(ENV_MODE).ok();
        let min_k = std::env::var(ENV_MIN_K).ok();
        Self::parse(mode.as_deref(), min_k.as_deref())
    }

    /// Mode used by callers that do not pick one; unset means native.
    pub fn default_mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Native)
    }

    pub fn policy(&self) -> DispatchPolicy {
        let mut p = DispatchPolicy::default();
        if let Some(k) = self.min_k {
            p.min_k = k;
        }
        p.forced_mode = self.mode.filter(|&m| m != Mode::Auto);
        p
    }
}

/// Process-wide settings, read on first use.
pub fn env_settings() -> Result<&'static EnvSettings> {
    static SETTINGS: OnceLock<std::result::Result<EnvSettings, String>> = OnceLock::new();
    SETTINGS
        .get_or_init(|| EnvSettings::from_process_env().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::InvalidArgument(e.clone()))
}

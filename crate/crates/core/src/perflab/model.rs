use crate::error::{Error, Result};

use super::OpCounters;

/// Flops credited to one reciprocal square root (throughput ratio to add/mul).
pub const RSQRT_FLOPS: u64 = 4;

/// Newer-over-older hardware ratios feeding the speed-up model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardwareRatios {
    /// Theoretical floating-point peak ratio.
    pub peak_ratio: f64,
    /// Memory-bandwidth ratio; reported alongside the prediction, not used by it.
    pub bandwidth_ratio: f64,
}

impl Default for HardwareRatios {
    fn default() -> Self {
        Self {
            peak_ratio: 1.5,
            bandwidth_ratio: 900.0 / 732.0,
        }
    }
}

impl HardwareRatios {
    pub fn new(peak_ratio: f64, bandwidth_ratio: f64) -> Result<Self> {
        if !(peak_ratio > 0.0 && peak_ratio.is_finite()) {
            return Err(Error::invalid(format!("peak ratio must be > 0, got {peak_ratio}")));
        }
        if !(bandwidth_ratio > 0.0 && bandwidth_ratio.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth ratio must be > 0, got {bandwidth_ratio}"
            )));
        }
        Ok(Self { peak_ratio, bandwidth_ratio })
    }
}

/// Speed-up expected when integer and floating-point instructions move from a
/// shared unit (cost I + F) onto independent units (cost max(I, F)).
///
/// Reciprocal square roots are assumed fully hidden and do not enter F.
pub fn predict_speedup(c: &OpCounters, hw: &HardwareRatios) -> Result<f64> {
    let f = c.fp_total() as f64;
    let i = c.integer as f64;
    if f == 0.0 && i == 0.0 {
        return Err(Error::invalid("speed-up undefined: integer and FP counts are both zero"));
    }
    Ok(hw.peak_ratio * (i + f) / i.max(f))
}

/// Flop/s with FMA = 2 and rsqrt = [`RSQRT_FLOPS`].
pub fn flops_estimate(c: &OpCounters, elapsed: f64) -> Result<f64> {
    if !(elapsed > 0.0 && elapsed.is_finite()) {
        return Err(Error::invalid(format!("elapsed time must be > 0, got {elapsed}")));
    }
    let flops = 2 * c.fp_fma + c.fp_add + c.fp_mul + RSQRT_FLOPS * c.fp_rsqrt;
    Ok(flops as f64 / elapsed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    ComputeBound,
    /// Sustained rate fell below the configured fraction of the calibrated peak.
    MemoryOrLatencyBound,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ComputeBound => "compute",
            Regime::MemoryOrLatencyBound => "memory_or_latency",
        }
    }
}

pub fn classify_regime(flops: f64, calibrated_peak: f64, fraction: f64) -> Regime {
    if flops >= fraction * calibrated_peak {
        Regime::ComputeBound
    } else {
        Regime::MemoryOrLatencyBound
    }
}

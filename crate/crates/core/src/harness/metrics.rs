//! Scalar summaries of a run.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::integrator::{SimulationOutput, StepRecord};

use super::diagnostics::{max_increase_after, LyapunovTerms};

/// Nominal steady-state window; clamped to the run length.
pub const STEADY_WINDOW_S: (f64, f64) = (15.0, 30.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub samples: usize,
    pub rms_position_error_m: f64,
    pub max_position_error_m: f64,
    pub rms_attitude_error: f64,
    pub max_attitude_error: f64,
    pub rms_angular_velocity_error_rad_s: f64,
    pub max_angular_velocity_error_rad_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(flatten)]
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateExtrema {
    pub mass_min_kg: [f64; 3],
    pub mass_max_kg: [f64; 3],
    pub inertia_min_kg_m2: [f64; 3],
    pub inertia_max_kg_m2: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSummary {
    pub initial: f64,
    pub last: f64,
    /// Largest increase between consecutive records from 5 s on.
    pub max_increase_after_5s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub label: String,
    pub mode: String,
    pub records: usize,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_reason: Option<String>,
    pub compression_steps: usize,
    pub max_step_drift: f64,
    pub max_manifold_residual: f64,
    pub whole_run: ErrorStats,
    pub steady_state: WindowStats,
    pub estimates: EstimateExtrema,
    pub lyapunov: LyapunovSummary,
}

fn rms(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
    for v in values {
        sum += v * v;
        max = max.max(v);
        n += 1;
    }
    let rms = if n == 0 { 0.0 } else { (sum / n as f64).sqrt() };
    (rms, max, n)
}

pub fn error_stats(records: &[&StepRecord]) -> ErrorStats {
    let (rx, mx, n) = rms(records.iter().map(|r| r.errors.e_x.norm()));
    let (rr, mr, _) = rms(records.iter().map(|r| r.errors.e_r.norm()));
    let (rw, mw, _) = rms(records.iter().map(|r| r.errors.e_omega.norm()));
    ErrorStats {
        samples: n,
        rms_position_error_m: rx,
        max_position_error_m: mx,
        rms_attitude_error: rr,
        max_attitude_error: mr,
        rms_angular_velocity_error_rad_s: rw,
        max_angular_velocity_error_rad_s: mw,
    }
}

/// Steady-state window for a run of length `duration`: the nominal window
/// when it fits, otherwise the second half of the run.
pub fn steady_window(duration: f64) -> (f64, f64) {
    if duration >= STEADY_WINDOW_S.1 {
        STEADY_WINDOW_S
    } else {
        (duration.min(STEADY_WINDOW_S.0).min(0.5 * duration), duration)
    }
}

pub fn estimate_extrema(records: &[StepRecord]) -> EstimateExtrema {
    let fold = |f: &dyn Fn(&StepRecord) -> Vec3, init: f64, pick: fn(f64, f64) -> f64| {
        let mut out = [init; 3];
        for r in records {
            let v = f(r);
            for j in 0..3 {
                out[j] = pick(out[j], v[j]);
            }
        }
        if records.is_empty() {
            [0.0; 3]
        } else {
            out
        }
    };
    EstimateExtrema {
        mass_min_kg: fold(&|r| r.estimates.mass, f64::INFINITY, f64::min),
        mass_max_kg: fold(&|r| r.estimates.mass, f64::NEG_INFINITY, f64::max),
        inertia_min_kg_m2: fold(&|r| r.estimates.inertia, f64::INFINITY, f64::min),
        inertia_max_kg_m2: fold(&|r| r.estimates.inertia, f64::NEG_INFINITY, f64::max),
    }
}

pub fn compute_metrics(
    label: &str,
    mode: &str,
    duration: f64,
    sim: &SimulationOutput,
    lyapunov: &[LyapunovTerms],
) -> Metrics {
    let all: Vec<&StepRecord> = sim.records.iter().collect();
    let (start, end) = steady_window(duration);
    let window: Vec<&StepRecord> = sim.records.iter().filter(|r| r.t >= start - 1e-9 && r.t <= end + 1e-9).collect();
    let times: Vec<f64> = sim.records.iter().map(|r| r.t).collect();
    let increase = max_increase_after(&times, lyapunov, 5.0);
    Metrics {
        label: label.into(),
        mode: mode.into(),
        records: sim.records.len(),
        diverged: sim.divergence.is_some(),
        divergence_time_s: sim.divergence.as_ref().map(|d| d.0),
        divergence_reason: sim.divergence.as_ref().map(|d| d.1.clone()),
        compression_steps: sim.compression_steps,
        max_step_drift: sim.max_step_drift,
        max_manifold_residual: sim.max_residual,
        whole_run: error_stats(&all),
        steady_state: WindowStats { start_s: start, end_s: end, stats: error_stats(&window) },
        estimates: estimate_extrema(&sim.records),
        lyapunov: LyapunovSummary {
            initial: lyapunov.first().map_or(0.0, |v| v.total),
            last: lyapunov.last().map_or(0.0, |v| v.total),
            max_increase_after_5s: if increase.is_finite() { increase } else { 0.0 },
        },
    }
}

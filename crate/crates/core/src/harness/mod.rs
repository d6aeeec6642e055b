//! Experiment orchestration: running scenarios, paired comparisons, and
//! writing results.

pub mod diagnostics;
pub mod metrics;
pub mod output;
pub mod scenario;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::controller::Mode;
use crate::error::{Error, Result};
use crate::integrator::{simulate, Simulation, SimulationOutput};

pub use diagnostics::{lyapunov_terms, LyapunovTerms};
pub use metrics::{compute_metrics, Metrics};
pub use output::write_outputs;
pub use scenario::{load_scenario, Scenario, ScenarioFile};

pub const COMPARISON_FILE: &str = "comparison.txt";

#[derive(Debug, Clone)]
pub struct RunResult {
    pub label: String,
    pub mode: Mode,
    pub n: usize,
    pub sim: SimulationOutput,
    pub lyapunov: Vec<LyapunovTerms>,
    pub metrics: Metrics,
    /// Resolved scenario, including defaults, as written to the output directory.
    pub scenario_toml: String,
}

impl RunResult {
    pub fn diverged(&self) -> bool {
        self.sim.divergence.is_some()
    }
}

/// Simulates the scenario and evaluates diagnostics and metrics.
pub fn run(scenario: &Scenario) -> RunResult {
    let sp = scenario.setpoint.clone();
    let setpoint = move |t: f64| sp.at(t);
    let sim = simulate(&Simulation {
        params: &scenario.params,
        gains: &scenario.gains,
        layout: &scenario.layout,
        profile: &scenario.profile,
        setpoint: &setpoint,
        initial: scenario.initial.clone(),
        config: &scenario.integrator,
        mode: scenario.mode,
    });
    let lyapunov: Vec<LyapunovTerms> =
        sim.records.iter().map(|r| lyapunov_terms(r, &scenario.gains, &scenario.params)).collect();
    let metrics =
        compute_metrics(&scenario.label, scenario.mode.as_str(), scenario.integrator.duration_s, &sim, &lyapunov);
    let mut file = scenario.file.clone();
    file.mode = scenario.mode;
    RunResult {
        label: scenario.label.clone(),
        mode: scenario.mode,
        n: scenario.params.n(),
        sim,
        lyapunov,
        metrics,
        scenario_toml: file.to_toml(),
    }
}

/// Which steady-state quantity decides a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Both modes bounded and within a factor of two on position error.
    Parity,
    /// Adaptive steady-state position error at least 20% below baseline.
    Translational,
    /// Adaptive steady-state attitude error at least 20% below baseline.
    Rotational,
}

impl Criterion {
    pub fn for_label(label: &str) -> Self {
        match label {
            "groupB" => Criterion::Translational,
            "groupC" => Criterion::Rotational,
            _ => Criterion::Parity,
        }
    }
}

/// Minimum relative improvement for an ordering verdict.
pub const ORDERING_MARGIN: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct Comparison {
    pub label: String,
    pub criterion: Criterion,
    pub adaptive: RunResult,
    pub baseline: RunResult,
}

impl Comparison {
    /// `(adaptive, baseline)` values of the deciding steady-state metric.
    pub fn deciding_values(&self) -> (f64, f64) {
        let pick = |m: &Metrics| match self.criterion {
            Criterion::Parity | Criterion::Translational => m.steady_state.stats.rms_position_error_m,
            Criterion::Rotational => m.steady_state.stats.rms_attitude_error,
        };
        (pick(&self.adaptive.metrics), pick(&self.baseline.metrics))
    }

    pub fn passed(&self) -> bool {
        if self.adaptive.diverged() || self.baseline.diverged() {
            return false;
        }
        let (a, b) = self.deciding_values();
        if !(a.is_finite() && b.is_finite()) {
            return false;
        }
        match self.criterion {
            Criterion::Parity => a <= 2.0 * b && b <= 2.0 * a,
            Criterion::Translational | Criterion::Rotational => a < (1.0 - ORDERING_MARGIN) * b,
        }
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let (a, b) = (&self.adaptive.metrics, &self.baseline.metrics);
        let _ = writeln!(s, "comparison: {}", self.label);
        let _ = writeln!(s, "setpoint: payload station-keeping (assumed; the reference trajectory is not given)");
        let _ = writeln!(
            s,
            "steady-state window: [{}, {}] s",
            a.steady_state.start_s, a.steady_state.end_s
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<40} {:>16} {:>16}", "metric", "adaptive", "baseline");
        let rows: [(&str, fn(&Metrics) -> f64); 9] = [
            ("steady rms |e_x0| (m)", |m| m.steady_state.stats.rms_position_error_m),
            ("steady rms |e_R0|", |m| m.steady_state.stats.rms_attitude_error),
            ("steady rms |e_Omega0| (rad/s)", |m| m.steady_state.stats.rms_angular_velocity_error_rad_s),
            ("run rms |e_x0| (m)", |m| m.whole_run.rms_position_error_m),
            ("run max |e_x0| (m)", |m| m.whole_run.max_position_error_m),
            ("run rms |e_R0|", |m| m.whole_run.rms_attitude_error),
            ("run max |e_R0|", |m| m.whole_run.max_attitude_error),
            ("compression steps", |m| m.compression_steps as f64),
            ("max manifold residual", |m| m.max_manifold_residual),
        ];
        for (name, f) in rows {
            let _ = writeln!(s, "{:<40} {:>16.6e} {:>16.6e}", name, f(a), f(b));
        }
        let _ = writeln!(s, "{:<40} {:>16} {:>16}", "diverged", a.diverged, b.diverged);
        let _ = writeln!(s);
        let (va, vb) = self.deciding_values();
        let rule = match self.criterion {
            Criterion::Parity => "both bounded, steady rms |e_x0| within 2x".to_string(),
            Criterion::Translational => {
                format!("adaptive steady rms |e_x0| below baseline by >= {:.0}%", ORDERING_MARGIN * 100.0)
            }
            Criterion::Rotational => {
                format!("adaptive steady rms |e_R0| below baseline by >= {:.0}%", ORDERING_MARGIN * 100.0)
            }
        };
        let _ = writeln!(s, "rule: {rule}");
        let _ = writeln!(s, "ratio adaptive/baseline: {:.4}", va / vb);
        let _ = writeln!(s, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Runs the scenario in both modes with everything else identical.
pub fn compare(scenario: &Scenario) -> Comparison {
    let with_mode = |mode| Scenario { mode, ..scenario.clone() };
    let (adaptive, baseline) = std::thread::scope(|s| {
        let a = s.spawn(|| run(&with_mode(Mode::Adaptive)));
        let b = run(&with_mode(Mode::Baseline));
        (a.join().expect("adaptive run panicked"), b)
    });
    Comparison {
        label: scenario.label.clone(),
        criterion: Criterion::for_label(&scenario.label),
        adaptive,
        baseline,
    }
}

/// Writes both runs into `adaptive/` and `baseline/` plus the report.
pub fn write_comparison(cmp: &Comparison, dir: &Path) -> Result<()> {
    write_outputs(&cmp.adaptive, &dir.join("adaptive"))?;
    write_outputs(&cmp.baseline, &dir.join("baseline"))?;
    let path = dir.join(COMPARISON_FILE);
    fs::write(&path, cmp.report()).map_err(|e| Error::io(&path, e))
}

//! Fixed-step Bogacki–Shampine integration of the plant with a sampled
//! controller.
//!
//! Each step samples the disturbances, evaluates the controller once, holds
//! the resulting control across the three stages, advances the plant, and
//! renormalizes the manifold states. Estimators advance by Euler inside the
//! controller, outside the stage vector.

use serde::{Deserialize, Serialize};

use crate::controller::{step_controller, ControllerGains, ControllerState, Mode, RbfLayout, Setpoint};
use crate::disturbances::{DisturbanceEval, DisturbanceProfile};
use crate::dynamics::{system_derivative, ControlOutput, SystemParams, SystemState};
use crate::error::{Error, Result};
use crate::geometry::{CableErrors, PayloadErrors, Vec3};

/// One Bogacki–Shampine third-order step of `y' = f(t, y)`.
pub fn rk3_step<F>(mut f: F, y: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let check = |k: &[f64], stage: usize| {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Divergence { t, reason: format!("non-finite derivative in stage {stage}") })
        }
    };
    let offset = |k: &[f64], h: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + h * k).collect() };

    let k1 = f(t, y);
    check(&k1, 1)?;
    let k2 = f(t + 0.5 * dt, &offset(&k1, 0.5 * dt));
    check(&k2, 2)?;
    let k3 = f(t + 0.75 * dt, &offset(&k2, 0.75 * dt));
    check(&k3, 3)?;

    Ok((0..y.len()).map(|i| y[i] + dt * (2.0 * k1[i] + 3.0 * k2[i] + 4.0 * k3[i]) / 9.0).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt_s: f64,
    pub duration_s: f64,
    /// Spacing of logged records; a whole multiple of `dt_s`.
    #[serde(default = "default_log_interval")]
    pub log_interval_s: f64,
    #[serde(default = "default_true")]
    pub renormalize: bool,
}

fn default_log_interval() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt_s: 1e-3, duration_s: 30.0, log_interval_s: default_log_interval(), renormalize: true }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0 && self.dt_s <= 0.01) {
            return Err(Error::config(format!("integrator.dt_s must lie in (0, 0.01], got {}", self.dt_s)));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::config(format!("integrator.duration_s must be >= 0, got {}", self.duration_s)));
        }
        let ratio = self.log_interval_s / self.dt_s;
        if !(ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() <= 1e-6) {
            return Err(Error::config(format!(
                "integrator.log_interval_s ({}) must be a whole multiple of dt_s ({})",
                self.log_interval_s, self.dt_s
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration_s / self.dt_s + 1e-9).floor() as usize
    }

    pub fn log_every(&self) -> usize {
        ((self.log_interval_s / self.dt_s).round() as usize).max(1)
    }

    /// Number of records a run without divergence produces.
    pub fn record_count(&self) -> usize {
        (self.duration_s / self.log_interval_s + 1e-9).floor() as usize + 1
    }
}

/// Estimator state captured at a log instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSnapshot {
    pub mass: Vec3,
    pub inertia: Vec3,
    pub payload_force: Vec3,
    pub payload_moment: Vec3,
    pub quadrotor_force: Vec<Vec3>,
    pub weights_x: [Vec<f64>; 3],
    pub weights_r: [Vec<f64>; 3],
}

impl EstimateSnapshot {
    pub fn of(cs: &ControllerState) -> Self {
        Self {
            mass: cs.mass,
            inertia: cs.inertia,
            payload_force: cs.disturbances.payload_force,
            payload_moment: cs.disturbances.payload_moment,
            quadrotor_force: cs.disturbances.quadrotor_force.clone(),
            weights_x: cs.nets_x.clone().map(|n| n.weights),
            weights_r: cs.nets_r.clone().map(|n| n.weights),
        }
    }
}

/// Everything logged at one instant. Control and errors are those computed
/// from `state` at `t`; estimates are the values in use at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub state: SystemState,
    pub setpoint: Setpoint,
    pub estimates: EstimateSnapshot,
    pub output: ControlOutput,
    pub errors: PayloadErrors,
    pub cable_errors: Vec<CableErrors>,
    pub disturbance: DisturbanceEval,
    pub u_x: Vec3,
    pub u_r: Vec3,
    pub phi_x_est: Vec3,
    pub phi_r_est: Vec3,
}

/// Inputs of one closed-loop run.
pub struct Simulation<'a> {
    pub params: &'a SystemParams,
    pub gains: &'a ControllerGains,
    pub layout: &'a RbfLayout,
    pub profile: &'a DisturbanceProfile,
    pub setpoint: &'a dyn Fn(f64) -> Setpoint,
    pub initial: SystemState,
    pub config: &'a IntegratorConfig,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub records: Vec<StepRecord>,
    /// Divergence time and reason; the records stop at the last good state.
    pub divergence: Option<(f64, String)>,
    /// Largest manifold residual right after a step, before renormalization.
    pub max_step_drift: f64,
    /// Largest manifold residual of any state used by the controller.
    pub max_residual: f64,
    /// Control steps in which some desired tension pushes along its cable.
    pub compression_steps: usize,
    pub steps_taken: usize,
}

/// Time of step `k`, rounded to the nanosecond so logged times print cleanly.
pub fn step_time(k: usize, dt: f64) -> f64 {
    (k as f64 * dt * 1e9).round() / 1e9
}

/// Runs the closed loop. Identical inputs give bitwise-identical output.
pub fn simulate(sim: &Simulation) -> SimulationOutput {
    let cfg = sim.config;
    let (dt, steps, log_every) = (cfg.dt_s, cfg.steps(), cfg.log_every());
    let n = sim.params.n();
    let mut state = sim.initial.clone();
    let mut cs = ControllerState::new(sim.params, sim.layout);
    let mut out = SimulationOutput {
        records: Vec::with_capacity(steps / log_every + 1),
        divergence: None,
        max_step_drift: 0.0,
        max_residual: state.manifold_residual(),
        compression_steps: 0,
        steps_taken: 0,
    };

    for k in 0..=steps {
        let t = step_time(k, dt);
        let dist = sim.profile.eval(t);
        let setpoint = (sim.setpoint)(t);
        let step = step_controller(&state, &setpoint, &cs, sim.gains, sim.params, dt, sim.mode);

        if k % log_every == 0 {
            out.records.push(StepRecord {
                t,
                state: state.clone(),
                setpoint,
                estimates: EstimateSnapshot::of(&cs),
                output: step.output.clone(),
                errors: step.errors,
                cable_errors: step.cable_errors.clone(),
                disturbance: dist.clone(),
                u_x: step.u_x,
                u_r: step.u_r,
                phi_x_est: step.phi_x,
                phi_r_est: step.phi_r,
            });
        }
        if k == steps {
            break;
        }
        if step.output.mu_d.iter().zip(&state.cables).any(|(mu, c)| mu.dot(&c.q) > 0.0) {
            out.compression_steps += 1;
        }

        let ctrl = &step.output;
        let derivative = |_tau: f64, y: &[f64]| {
            let s = SystemState::from_flat(y, n);
            system_derivative(&s, ctrl, &dist.sample, &dist.phi_x, &dist.phi_r, sim.params).to_flat()
        };
        let y = match rk3_step(derivative, &state.to_flat(), t, dt) {
            Ok(y) => y,
            Err(e) => {
                out.divergence = Some((t, e.to_string()));
                break;
            }
        };
        let mut next = SystemState::from_flat(&y, n);
        out.max_step_drift = out.max_step_drift.max(next.manifold_residual());
        if cfg.renormalize {
            if let Err(e) = next.renormalize() {
                out.divergence = Some((step_time(k + 1, dt), e.to_string()));
                break;
            }
        }
        if !next.is_finite() {
            out.divergence = Some((step_time(k + 1, dt), "non-finite state".into()));
            break;
        }
        out.max_residual = out.max_residual.max(next.manifold_residual());
        state = next;
        cs = step.next;
        out.steps_taken = k + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(f: impl Fn(f64, &[f64]) -> Vec<f64> + Copy, y0: f64, t_end: f64, dt: f64) -> f64 {
        let steps = (t_end / dt).round() as usize;
        let mut y = vec![y0];
        for k in 0..steps {
            y = rk3_step(f, &y, k as f64 * dt, dt).unwrap();
        }
        y[0]
    }

    #[test]
    fn zero_field_is_identity() {
        let y = vec![1.0, -2.0, 3.5];
        assert_eq!(rk3_step(|_, y| vec![0.0; y.len()], &y, 0.0, 0.1).unwrap(), y);
    }

    #[test]
    fn exponential_single_step() {
        let y = rk3_step(|_, y| y.to_vec(), &[1.0], 0.0, 0.1).unwrap();
        let hand = 1.0 + 0.1 * (2.0 + 3.0 * 1.05 + 4.0 * 1.07875) / 9.0;
        assert!((y[0] - hand).abs() < 1e-15);
        assert!((y[0] - 1.105_166_666_666_667).abs() < 1e-14);
        assert!((y[0] - 0.1f64.exp()).abs() < 1e-5);
    }

    #[test]
    fn third_order_convergence() {
        let f = |_: f64, y: &[f64]| vec![-y[0]];
        let exact = (-1.0f64).exp();
        let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|dt| (integrate(f, 1.0, 1.0, *dt) - exact).abs()).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((7.0..=9.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn time_dependent_field_uses_stage_times() {
        // y' = 2t is integrated exactly by a third-order method
        let y = rk3_step(|t, _| vec![2.0 * t], &[0.0], 0.3, 0.2).unwrap();
        assert!((y[0] - (0.5f64.powi(2) - 0.3f64.powi(2))).abs() < 1e-15);
    }

    #[test]
    fn non_finite_stage_is_divergence() {
        let err = rk3_step(|t, _| vec![if t > 0.0 { f64::NAN } else { 1.0 }], &[0.0], 0.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn config_counts() {
        let c = IntegratorConfig::default();
        c.validate().unwrap();
        assert_eq!(c.steps(), 30_000);
        assert_eq!(c.log_every(), 10);
        assert_eq!(c.record_count(), 3001);
        assert!(IntegratorConfig { dt_s: 0.02, ..c.clone() }.validate().is_err());
        assert!(IntegratorConfig { log_interval_s: 0.0015, ..c.clone() }.validate().is_err());
        assert_eq!(IntegratorConfig { duration_s: 0.0, ..c }.record_count(), 1);
    }
}

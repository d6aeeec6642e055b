//! Time-parameterized disturbance generators.
//!
//! Every channel is a three-axis [`SignalSpec`]. Signals are pure functions of
//! time; splitting quadrotor forces along the cables happens in the dynamics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::DisturbanceSample;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Carrier used inside a product chirp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Sin,
    Cos,
}

impl Carrier {
    fn apply(self, x: f64) -> f64 {
        match self {
            Carrier::Sin => x.sin(),
            Carrier::Cos => x.cos(),
        }
    }
}

/// A three-axis signal. Every non-zero kind is zero before `start_time_s` and
/// is evaluated at absolute time afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalSpec {
    #[default]
    Zero,
    Constant {
        value: [f64; 3],
        #[serde(default)]
        start_time_s: f64,
    },
    /// `A sin(ω t + φ)` per axis.
    Sinusoid {
        amplitude: [f64; 3],
        frequency_rad_s: [f64; 3],
        #[serde(default)]
        phase_rad: [f64; 3],
        #[serde(default)]
        start_time_s: f64,
    },
    /// `A sin(c(ω t + φ) · t)` per axis, with `c` a sine or cosine carrier.
    ProductChirp {
        amplitude: [f64; 3],
        carrier: [Carrier; 3],
        frequency_rad_s: [f64; 3],
        #[serde(default)]
        phase_rad: [f64; 3],
        #[serde(default)]
        start_time_s: f64,
    },
    CompositeSum {
        terms: Vec<SignalSpec>,
    },
}

impl SignalSpec {
    pub fn eval(&self, t: f64) -> Vec3 {
        match self {
            SignalSpec::Zero => Vec3::zeros(),
            SignalSpec::Constant { value, start_time_s } => {
                if t < *start_time_s {
                    Vec3::zeros()
                } else {
                    Vec3::from(*value)
                }
            }
            SignalSpec::Sinusoid { amplitude, frequency_rad_s, phase_rad, start_time_s } => {
                if t < *start_time_s {
                    return Vec3::zeros();
                }
                Vec3::from_fn(|j, _| amplitude[j] * (frequency_rad_s[j] * t + phase_rad[j]).sin())
            }
            SignalSpec::ProductChirp { amplitude, carrier, frequency_rad_s, phase_rad, start_time_s } => {
                if t < *start_time_s {
                    return Vec3::zeros();
                }
                Vec3::from_fn(|j, _| {
                    amplitude[j] * (carrier[j].apply(frequency_rad_s[j] * t + phase_rad[j]) * t).sin()
                })
            }
            SignalSpec::CompositeSum { terms } => terms.iter().fold(Vec3::zeros(), |acc, s| acc + s.eval(t)),
        }
    }

    /// Per-axis upper bound on `|eval(t)|` over all `t`.
    pub fn amplitude_bound(&self) -> Vec3 {
        match self {
            SignalSpec::Zero => Vec3::zeros(),
            SignalSpec::Constant { value, .. } => Vec3::from(*value).abs(),
            SignalSpec::Sinusoid { amplitude, .. } | SignalSpec::ProductChirp { amplitude, .. } => {
                Vec3::from(*amplitude).abs()
            }
            SignalSpec::CompositeSum { terms } => terms.iter().fold(Vec3::zeros(), |acc, s| acc + s.amplitude_bound()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude_bound() == Vec3::zeros()
    }

    pub fn validate(&self, channel: &str) -> Result<()> {
        let finite = |name: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::config(format!("disturbance {channel}: {name} must be finite")))
            }
        };
        let start = |s: f64| {
            if s >= 0.0 && s.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("disturbance {channel}: start_time_s must be >= 0, got {s}")))
            }
        };
        match self {
            SignalSpec::Zero => Ok(()),
            SignalSpec::Constant { value, start_time_s } => {
                finite("value", value)?;
                start(*start_time_s)
            }
            SignalSpec::Sinusoid { amplitude, frequency_rad_s, phase_rad, start_time_s }
            | SignalSpec::ProductChirp { amplitude, frequency_rad_s, phase_rad, start_time_s, .. } => {
                finite("amplitude", amplitude)?;
                finite("frequency_rad_s", frequency_rad_s)?;
                finite("phase_rad", phase_rad)?;
                start(*start_time_s)
            }
            SignalSpec::CompositeSum { terms } => terms.iter().try_for_each(|s| s.validate(channel)),
        }
    }

    /// Sum of two signals, dropping zero terms.
    pub fn plus(self, other: SignalSpec) -> SignalSpec {
        let mut terms = Vec::new();
        for s in [self, other] {
            match s {
                SignalSpec::Zero => {}
                SignalSpec::CompositeSum { terms: t } => terms.extend(t),
                s => terms.push(s),
            }
        }
        match terms.len() {
            0 => SignalSpec::Zero,
            1 => terms.pop().unwrap(),
            _ => SignalSpec::CompositeSum { terms },
        }
    }
}

/// One signal per disturbance channel, plus the true unknown dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceProfile {
    /// Force on the payload, inertial frame (N).
    #[serde(default)]
    pub payload_force: SignalSpec,
    /// Moment on the payload, body frame (N·m).
    #[serde(default)]
    pub payload_moment: SignalSpec,
    /// Force on each quadrotor, inertial frame (N).
    #[serde(default)]
    pub quadrotor_force: Vec<SignalSpec>,
    /// Moment on each quadrotor, body frame (N·m).
    #[serde(default)]
    pub quadrotor_moment: Vec<SignalSpec>,
    /// Unknown translational dynamics (m/s²).
    #[serde(default)]
    pub phi_x: SignalSpec,
    /// Unknown rotational dynamics (rad/s²).
    #[serde(default)]
    pub phi_r: SignalSpec,
}

/// Disturbances and unknown dynamics at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceEval {
    pub sample: DisturbanceSample,
    pub phi_x: Vec3,
    pub phi_r: Vec3,
}

impl DisturbanceProfile {
    pub fn zero(n: usize) -> Self {
        Self {
            payload_force: SignalSpec::Zero,
            payload_moment: SignalSpec::Zero,
            quadrotor_force: vec![SignalSpec::Zero; n],
            quadrotor_moment: vec![SignalSpec::Zero; n],
            phi_x: SignalSpec::Zero,
            phi_r: SignalSpec::Zero,
        }
    }

    /// Per-axis sinusoids on every quadrotor channel: 1 N forces and 0.1 N·m
    /// moments at 1.1, 1.3 and 1.7 rad/s, phase-shifted by `2π i / n`.
    pub fn full(n: usize) -> Self {
        let channel = |i: usize, amp: f64| {
            let phase = 2.0 * PI * i as f64 / n as f64;
            SignalSpec::Sinusoid {
                amplitude: [amp; 3],
                frequency_rad_s: [1.1, 1.3, 1.7],
                phase_rad: [phase; 3],
                start_time_s: 0.0,
            }
        };
        Self {
            quadrotor_force: (0..n).map(|i| channel(i, 1.0)).collect(),
            quadrotor_moment: (0..n).map(|i| channel(i, 0.1)).collect(),
            ..Self::zero(n)
        }
    }

    /// Full disturbances plus the strong payload force waveform.
    pub fn group_b(n: usize) -> Self {
        let mut p = Self::full(n);
        p.payload_force = group_b_payload_force();
        p
    }

    /// Full disturbances plus the payload moment step about the body x-axis.
    pub fn group_c(n: usize) -> Self {
        let mut p = Self::full(n);
        p.payload_moment = group_c_payload_moment();
        p
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.quadrotor_force.len() != n || self.quadrotor_moment.len() != n {
            return Err(Error::config(format!(
                "disturbance profile has {} quadrotor force and {} moment channels, expected {n}",
                self.quadrotor_force.len(),
                self.quadrotor_moment.len()
            )));
        }
        self.payload_force.validate("payload_force")?;
        self.payload_moment.validate("payload_moment")?;
        for (i, s) in self.quadrotor_force.iter().enumerate() {
            s.validate(&format!("quadrotor_force[{i}]"))?;
        }
        for (i, s) in self.quadrotor_moment.iter().enumerate() {
            s.validate(&format!("quadrotor_moment[{i}]"))?;
        }
        self.phi_x.validate("phi_x")?;
        self.phi_r.validate("phi_r")
    }

    pub fn eval(&self, t: f64) -> DisturbanceEval {
        DisturbanceEval {
            sample: DisturbanceSample {
                dx0: self.payload_force.eval(t),
                dr0: self.payload_moment.eval(t),
                dxi: self.quadrotor_force.iter().map(|s| s.eval(t)).collect(),
                dri: self.quadrotor_moment.iter().map(|s| s.eval(t)).collect(),
            },
            phi_x: self.phi_x.eval(t),
            phi_r: self.phi_r.eval(t),
        }
    }
}

/// `[15 sin(sin(0.02t)t) + cos(0.5t), 15 sin(cos(0.04t+π)t) + 5cos(0.5t), −25 sin(1.5t) + cos(0.5t)]` N.
pub fn group_b_payload_force() -> SignalSpec {
    SignalSpec::CompositeSum {
        terms: vec![
            SignalSpec::ProductChirp {
                amplitude: [15.0, 15.0, 0.0],
                carrier: [Carrier::Sin, Carrier::Cos, Carrier::Sin],
                frequency_rad_s: [0.02, 0.04, 0.0],
                phase_rad: [0.0, PI, 0.0],
                start_time_s: 0.0,
            },
            SignalSpec::Sinusoid {
                amplitude: [0.0, 0.0, -25.0],
                frequency_rad_s: [0.0, 0.0, 1.5],
                phase_rad: [0.0; 3],
                start_time_s: 0.0,
            },
            SignalSpec::Sinusoid {
                amplitude: [1.0, 5.0, 1.0],
                frequency_rad_s: [0.5; 3],
                phase_rad: [PI / 2.0; 3],
                start_time_s: 0.0,
            },
        ],
    }
}

/// `[10 sin(t − 5), 0, 0]` N·m from `t = 5 s`.
pub fn group_c_payload_moment() -> SignalSpec {
    SignalSpec::Sinusoid {
        amplitude: [10.0, 0.0, 0.0],
        frequency_rad_s: [1.0, 0.0, 0.0],
        phase_rad: [-5.0, 0.0, 0.0],
        start_time_s: 5.0,
    }
}

//! Scenario files and the built-in comparison groups.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerGains, GainSet, Mode, RbfLayout, Setpoint};
use crate::disturbances::{DisturbanceProfile, SignalSpec};
use crate::dynamics::{QuadrotorParams, ReferenceModel, SystemParams, SystemState, GRAVITY};
use crate::error::{Error, Result};
use crate::geometry::{exp_so3, Mat3, Vec3};
use crate::integrator::IntegratorConfig;

pub const BUILTIN_NAMES: [&str; 3] = ["groupA", "groupB", "groupC"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub payload_mass_kg: f64,
    /// Diagonal of the payload inertia.
    pub payload_inertia_kg_m2: [f64; 3],
    #[serde(default = "default_gravity")]
    pub gravity_m_s2: f64,
}

fn default_gravity() -> f64 {
    GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub payload_mass_kg: f64,
    pub payload_inertia_kg_m2: [f64; 3],
    pub max_payload_mass_kg: f64,
    pub max_payload_inertia_kg_m2: [f64; 3],
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            payload_mass_kg: 1.0,
            payload_inertia_kg_m2: [1.0 / 8.0, 1.0 / 8.0, 1.0 / 6.0],
            max_payload_mass_kg: 6.0,
            max_payload_inertia_kg_m2: [0.75, 0.75, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrotorSpec {
    pub mass_kg: f64,
    pub inertia_kg_m2: [f64; 3],
    pub cable_length_m: f64,
    /// Cable attachment point in the payload frame.
    pub attachment_m: [f64; 3],
}

/// `n` identical quadrotors (1 kg, diag(0.02, 0.02, 0.04) kg·m², 1 m cables)
/// attached on a 0.5 m circle at equal spacing.
pub fn default_quadrotors(n: usize) -> Vec<QuadrotorSpec> {
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            QuadrotorSpec {
                mass_kg: 1.0,
                inertia_kg_m2: [0.02, 0.02, 0.04],
                cable_length_m: 1.0,
                attachment_m: [0.5 * a.cos(), 0.5 * a.sin(), 0.0],
            }
        })
        .collect()
}

fn default_quadrotor_list() -> Vec<QuadrotorSpec> {
    default_quadrotors(3)
}

/// Desired payload motion. Attitude is always held at identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetpointSpec {
    Hold {
        position_m: [f64; 3],
    },
    /// `x = c + (A_x sin ωt, A_y sin 2ωt, 0)` with `ω = 2π / period`.
    FigureEight {
        center_m: [f64; 3],
        amplitude_m: [f64; 2],
        period_s: f64,
    },
}

impl Default for SetpointSpec {
    fn default() -> Self {
        SetpointSpec::Hold { position_m: [0.0; 3] }
    }
}

impl SetpointSpec {
    pub fn at(&self, t: f64) -> Setpoint {
        match self {
            SetpointSpec::Hold { position_m } => Setpoint::hold(Vec3::from(*position_m)),
            SetpointSpec::FigureEight { center_m, amplitude_m, period_s } => {
                let w = 2.0 * PI / period_s;
                let (ax, ay) = (amplitude_m[0], amplitude_m[1]);
                let (s1, c1) = (w * t).sin_cos();
                let (s2, c2) = (2.0 * w * t).sin_cos();
                let mut sp = Setpoint::hold(Vec3::from(*center_m) + Vec3::new(ax * s1, ay * s2, 0.0));
                sp.v_d = Vec3::new(ax * w * c1, 2.0 * ay * w * c2, 0.0);
                sp.a_d = Vec3::new(-ax * w * w * s1, -4.0 * ay * w * w * s2, 0.0);
                sp
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SetpointSpec::Hold { position_m } if position_m.iter().all(|v| v.is_finite()) => Ok(()),
            SetpointSpec::FigureEight { center_m, amplitude_m, period_s }
                if *period_s > 0.0 && center_m.iter().chain(amplitude_m).all(|v| v.is_finite()) =>
            {
                Ok(())
            }
            _ => Err(Error::config("setpoint values must be finite and period_s positive")),
        }
    }
}

/// Initial payload condition; cables start straight down and quadrotors level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub payload_position_m: [f64; 3],
    #[serde(default)]
    pub payload_velocity_m_s: [f64; 3],
    /// Rotation vector of the initial payload attitude.
    #[serde(default)]
    pub payload_attitude_rad: [f64; 3],
    #[serde(default)]
    pub payload_angular_velocity_rad_s: [f64; 3],
}

impl InitialSpec {
    pub fn state(&self, n: usize) -> SystemState {
        let mut s = SystemState::hover(Vec3::from(self.payload_position_m), n);
        s.v0 = Vec3::from(self.payload_velocity_m_s);
        s.r0 = exp_so3(&Vec3::from(self.payload_attitude_rad));
        s.omega0 = Vec3::from(self.payload_angular_velocity_rad_s);
        s
    }
}

fn default_mode() -> Mode {
    Mode::Adaptive
}

/// On-disk scenario description. Unit suffixes name the SI unit of each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub label: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub plant: PlantSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default = "default_quadrotor_list")]
    pub quadrotors: Vec<QuadrotorSpec>,
    #[serde(default)]
    pub gains: GainSet,
    #[serde(default)]
    pub network: RbfLayout,
    #[serde(default)]
    pub setpoint: SetpointSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Missing quadrotor channel lists mean zero disturbance on every quadrotor.
    #[serde(default = "empty_profile")]
    pub disturbances: DisturbanceProfile,
}

fn empty_profile() -> DisturbanceProfile {
    DisturbanceProfile::zero(0)
}

/// Validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub mode: Mode,
    pub params: SystemParams,
    pub gains: ControllerGains,
    pub layout: RbfLayout,
    pub profile: DisturbanceProfile,
    pub setpoint: SetpointSpec,
    pub initial: SystemState,
    pub integrator: IntegratorConfig,
    /// The resolved description the scenario was built from.
    pub file: ScenarioFile,
}

pub fn reference_inertia() -> Mat3 {
    Mat3::from_diagonal(&Vec3::from(ReferenceSpec::default().payload_inertia_kg_m2))
}

fn reference_model(spec: &ReferenceSpec) -> ReferenceModel {
    ReferenceModel {
        mass: spec.payload_mass_kg,
        inertia: Mat3::from_diagonal(&Vec3::from(spec.payload_inertia_kg_m2)),
        max_mass: spec.max_payload_mass_kg,
        max_inertia: Mat3::from_diagonal(&Vec3::from(spec.max_payload_inertia_kg_m2)),
    }
}

fn quadrotor_params(spec: &QuadrotorSpec) -> QuadrotorParams {
    QuadrotorParams {
        mass: spec.mass_kg,
        inertia: Mat3::from_diagonal(&Vec3::from(spec.inertia_kg_m2)),
        cable_length: spec.cable_length_m,
        attachment: Vec3::from(spec.attachment_m),
    }
}

/// Default three-quadrotor system around a payload of the given mass and inertia.
pub fn default_system_params(payload_mass: f64, payload_inertia: Mat3) -> SystemParams {
    SystemParams::new(
        payload_mass,
        payload_inertia,
        default_quadrotors(3).iter().map(quadrotor_params).collect(),
        reference_model(&ReferenceSpec::default()),
        GRAVITY,
    )
    .expect("default system is valid")
}

impl ScenarioFile {
    fn group(label: &str, payload_mass_kg: f64, payload_inertia_kg_m2: [f64; 3], profile: DisturbanceProfile) -> Self {
        Self {
            label: label.into(),
            mode: Mode::Adaptive,
            plant: PlantSpec { payload_mass_kg, payload_inertia_kg_m2, gravity_m_s2: GRAVITY },
            reference: ReferenceSpec::default(),
            quadrotors: default_quadrotors(3),
            gains: GainSet::default(),
            network: RbfLayout::default(),
            setpoint: SetpointSpec::default(),
            initial: InitialSpec::default(),
            integrator: IntegratorConfig::default(),
            disturbances: profile,
        }
    }

    /// Model-matched plant under the quadrotor disturbances.
    pub fn group_a() -> Self {
        let r = ReferenceSpec::default();
        Self::group("groupA", r.payload_mass_kg, r.payload_inertia_kg_m2, DisturbanceProfile::full(3))
    }

    /// Heavier, mismatched payload with a strong payload force disturbance.
    pub fn group_b() -> Self {
        Self::group("groupB", 5.0, [0.688, 0.594, 0.783], DisturbanceProfile::group_b(3))
    }

    /// Mismatched payload with a payload moment disturbance from 5 s.
    pub fn group_c() -> Self {
        Self::group("groupC", 5.0, [0.688, 0.594, 0.783], DisturbanceProfile::group_c(3))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "groupA" => Some(Self::group_a()),
            "groupB" => Some(Self::group_b()),
            "groupC" => Some(Self::group_c()),
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Validates every part and builds the runtime scenario.
    pub fn build(&self) -> Result<Scenario> {
        let n = self.quadrotors.len();
        let plant = &self.plant;
        let params = SystemParams::new(
            plant.payload_mass_kg,
            Mat3::from_diagonal(&Vec3::from(plant.payload_inertia_kg_m2)),
            self.quadrotors.iter().map(quadrotor_params).collect(),
            reference_model(&self.reference),
            plant.gravity_m_s2,
        )?;
        let gains = ControllerGains::new(self.gains.clone())?;
        self.network.validate()?;
        self.setpoint.validate()?;
        self.integrator.validate()?;
        if !self.initial.payload_position_m.iter().chain(&self.initial.payload_velocity_m_s).all(|v| v.is_finite()) {
            return Err(Error::config("initial conditions must be finite"));
        }

        let mut file = self.clone();
        let d = &mut file.disturbances;
        if d.quadrotor_force.is_empty() {
            d.quadrotor_force = vec![SignalSpec::Zero; n];
        }
        if d.quadrotor_moment.is_empty() {
            d.quadrotor_moment = vec![SignalSpec::Zero; n];
        }
        d.validate(n)?;

        Ok(Scenario {
            label: file.label.clone(),
            mode: file.mode,
            params,
            gains,
            layout: file.network.clone(),
            profile: file.disturbances.clone(),
            setpoint: file.setpoint.clone(),
            initial: file.initial.state(n),
            integrator: file.integrator.clone(),
            file,
        })
    }
}

/// Reads and validates a scenario file.
pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioFile::parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Resolves a built-in group name or a path to a scenario file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    match ScenarioFile::builtin(name_or_path) {
        Some(file) => file.build(),
        None => read_scenario_file(Path::new(name_or_path))?.build(),
    }
}

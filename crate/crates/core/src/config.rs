//! Scenario and experiment configuration, loadable from TOML.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HispError, Result};
use crate::filter::FilterConfig;
use crate::metrics::OspaParams;
use crate::phd::PhdConfig;
use crate::sensor::{
    BirthModel, ClutterModel, Models, MotionModel, RangeBearingSensor, SensorGrid,
};

/// Initial object states `[x, y, vx, vy]` of the benchmark scenario.
pub const BENCHMARK_INITIAL_STATES: [[f64; 4]; 5] = [
    [-400.0, -50.0, 1.0, 1.1],
    [-50.0, -300.0, 0.4, 0.6],
    [50.0, -300.0, -0.4, 0.6],
    [150.0, 150.0, -0.2, 0.2],
    [200.0, 300.0, 0.25, -1.0],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scan period [s].
    pub dt: f64,
    /// Scans are produced at `dt, 2dt, …, duration` [s].
    pub duration: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Range extent of a resolution cell [m].
    pub cell_dr: f64,
    /// Bearing extent of a resolution cell [deg].
    pub cell_dtheta_deg: f64,
    pub sigma_r: f64,
    /// Bearing noise standard deviation [rad].
    pub sigma_theta: f64,
    pub p_d: f64,
    pub p_fa: f64,
    /// Birth intensity per m².
    pub p_b: f64,
    /// Acceleration noise variance assumed by the filters [m² s⁻⁴].
    pub q_var: f64,
    /// Acceleration noise variance of the simulated truth [m² s⁻⁴].
    pub truth_q_var: f64,
    pub p_survival: f64,
    /// Velocity standard deviation of the birth prior [m/s].
    pub sigma_v: f64,
    pub initial_states: Vec<[f64; 4]>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::case(1).expect("case 1 exists")
    }
}

impl ScenarioConfig {
    /// The three benchmark cases.
    pub fn case(id: u32) -> Result<Self> {
        let (p_b, p_d, p_fa, sigma_r, sigma_theta) = match id {
            1 => (1e-6, 0.5, 1.34e-3, 6.2, 4.5e-3),
            2 => (5e-7, 0.8, 1.54e-2, 6.2, 4.5e-3),
            3 => (1e-6, 0.995, 7.67e-3, 4.87, 3.5e-3),
            _ => {
                return Err(HispError::Config(format!(
                    "unknown case {id}; expected 1, 2 or 3"
                )))
            }
        };
        Ok(Self {
            dt: 4.0,
            duration: 300.0,
            r_min: 50.0,
            r_max: 500.0,
            cell_dr: 15.0,
            cell_dtheta_deg: 1.0,
            sigma_r,
            sigma_theta,
            p_d,
            p_fa,
            p_b,
            q_var: 0.05,
            truth_q_var: 0.0,
            p_survival: 1.0,
            sigma_v: 1.5,
            initial_states: BENCHMARK_INITIAL_STATES.to_vec(),
        })
    }

    pub fn n_steps(&self) -> u32 {
        (self.duration / self.dt + 1e-9).floor() as u32
    }

    pub fn grid(&self) -> Result<SensorGrid> {
        SensorGrid::new(
            self.r_min,
            self.r_max,
            self.cell_dr,
            self.cell_dtheta_deg * PI / 180.0,
        )
    }

    /// Builds and validates every model.
    pub fn models(&self) -> Result<Models> {
        if !(self.duration >= self.dt) {
            return Err(HispError::Config(
                "duration must cover at least one scan".into(),
            ));
        }
        if !(self.truth_q_var >= 0.0) {
            return Err(HispError::Config("truth_q_var must be non-negative".into()));
        }
        Ok(Models {
            motion: MotionModel::constant_velocity(self.dt, self.q_var, self.p_survival)?,
            sensor: RangeBearingSensor::new(
                self.grid()?,
                self.sigma_r,
                self.sigma_theta,
                self.p_d,
            )?,
            birth: BirthModel::new(self.p_b, self.sigma_v)?,
            clutter: ClutterModel::new(self.p_fa)?,
        })
    }
}

/// Everything a Monte Carlo experiment needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label written to the `case` column of the outputs.
    pub case: String,
    pub runs: usize,
    pub seed: u64,
    /// Scans excluded from time averages.
    pub burn_in_steps: usize,
    pub scenario: ScenarioConfig,
    pub filter: FilterConfig,
    pub phd: PhdConfig,
    pub ospa: OspaParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: "1".into(),
            runs: 50,
            seed: 0,
            burn_in_steps: 10,
            scenario: ScenarioConfig::default(),
            filter: FilterConfig::default(),
            phd: PhdConfig::default(),
            ospa: OspaParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_case(id: u32) -> Result<Self> {
        Ok(Self {
            case: id.to_string(),
            scenario: ScenarioConfig::case(id)?,
            ..Self::default()
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| HispError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HispError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.models()?;
        self.filter.validate()?;
        self.phd.validate()?;
        self.ospa.validate()?;
        if self.runs == 0 {
            return Err(HispError::Config("runs must be at least 1".into()));
        }
        Ok(())
    }
}

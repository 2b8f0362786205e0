//! Gaussian-mixture PHD filter used as the comparison baseline.

use serde::{Deserialize, Serialize};

use crate::error::{HispError, Result};
use crate::gaussian::{
    merge, prune, GaussianMixture, MeasurementModel, PredictedObservation, StateVector,
};
use crate::scan::Scan;
use crate::sensor::{BirthModel, Models, MotionModel, RangeBearingSensor, SensorGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhdConfig {
    pub tau: f64,
    pub merge_threshold: f64,
    /// Components above this weight are reported.
    pub extract_threshold: f64,
    pub max_components: usize,
    /// Squared Mahalanobis gate; contributions outside it are dropped.
    pub gate: f64,
}

impl Default for PhdConfig {
    fn default() -> Self {
        Self {
            tau: 1e-5,
            merge_threshold: 4.0,
            extract_threshold: 0.5,
            max_components: 100,
            gate: 25.0,
        }
    }
}

impl PhdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau >= 0.0
            && self.merge_threshold >= 0.0
            && self.gate > 0.0
            && self.max_components > 0
        {
            Ok(())
        } else {
            Err(HispError::Config(format!(
                "invalid PHD configuration: {self:?}"
            )))
        }
    }
}

/// First-moment intensity of the multi-object state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhdIntensity {
    pub mixture: GaussianMixture,
}

impl PhdIntensity {
    pub fn expected_count(&self) -> f64 {
        self.mixture.total_weight()
    }
}

/// Survival-scaled prediction plus birth components.
pub fn phd_predict(
    intensity: &PhdIntensity,
    motion: &MotionModel,
    birth: &GaussianMixture,
) -> PhdIntensity {
    let mut m = intensity
        .mixture
        .predict(&motion.transition, &motion.process_noise);
    m.scale(motion.p_survival);
    m.components.extend(birth.components.iter().cloned());
    PhdIntensity { mixture: m }
}

/// Clutter intensity in observation space: per-cell false-alarm
/// probability over the cell's `(r, θ)` volume.
pub fn clutter_density(p_fa: f64, grid: &SensorGrid) -> f64 {
    p_fa / grid.cell_volume()
}

/// Standard GM-PHD update: missed-detection terms plus one normalised term
/// per observation.
pub fn phd_update(
    intensity: &PhdIntensity,
    scan: &Scan,
    sensor: &RangeBearingSensor,
    clutter_density: f64,
    gate: f64,
) -> Result<PhdIntensity> {
    let noise = sensor.noise_covariance();
    let mut prepared = Vec::with_capacity(intensity.mixture.len());
    let mut out = Vec::with_capacity(intensity.mixture.len() * (1 + scan.len()));
    for c in &intensity.mixture.components {
        let pd = sensor.detection_probability(&c.mean);
        if pd < 1.0 {
            out.push(c.scaled(1.0 - pd));
        }
        if pd > 0.0 {
            prepared.push((c, pd, PredictedObservation::new(c, sensor)?));
        }
    }
    for o in &scan.observations {
        let mut terms = Vec::new();
        let mut sum = 0.0;
        for (c, pd, pred) in &prepared {
            let res = sensor.residual(&o.z, &pred.predicted);
            if pred.mahalanobis2(&res) > gate {
                continue;
            }
            let q = pd * c.weight * pred.log_density(&res).exp();
            let mut u = pred.update(c, &res, &noise);
            u.weight = q;
            sum += q;
            terms.push(u);
        }
        let denom = clutter_density + sum;
        if denom > 0.0 {
            for mut u in terms {
                u.weight /= denom;
                out.push(u);
            }
        }
    }
    Ok(PhdIntensity {
        mixture: GaussianMixture::new(out),
    })
}

/// Means of the components whose weight exceeds `threshold`.
pub fn phd_extract(intensity: &PhdIntensity, threshold: f64) -> Vec<StateVector> {
    intensity
        .mixture
        .components
        .iter()
        .filter(|c| c.weight > threshold)
        .map(|c| c.mean)
        .collect()
}

/// Measurement-driven birth: one component per previous-scan observation,
/// the cell prior updated with that observation, sharing a total weight of
/// `p_b × surveillance area`.
pub fn adaptive_birth(
    previous: &Scan,
    sensor: &RangeBearingSensor,
    birth: &BirthModel,
) -> Result<GaussianMixture> {
    if previous.is_empty() {
        return Ok(GaussianMixture::empty());
    }
    let grid = &sensor.grid;
    let weight = (birth.p_b * grid.surveillance_area()) / previous.len() as f64;
    let noise = sensor.noise_covariance();
    let mut comps = Vec::with_capacity(previous.len());
    for o in &previous.observations {
        let prior = birth.cell_gaussian(grid, o.cell, weight);
        let pred = PredictedObservation::new(&prior, sensor)?;
        let res = sensor.residual(&o.z, &pred.predicted);
        comps.push(pred.update(&prior, &res, &noise));
    }
    Ok(GaussianMixture::new(comps))
}

#[derive(Debug, Clone)]
pub struct PhdFilter {
    pub models: Models,
    pub config: PhdConfig,
    pub intensity: PhdIntensity,
    previous: Option<Scan>,
}

impl PhdFilter {
    pub fn new(models: Models, config: PhdConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            models,
            config,
            intensity: PhdIntensity::default(),
            previous: None,
        })
    }

    /// Prediction (with births seeded by the previous scan), update and
    /// reduction.
    pub fn step(&mut self, scan: &Scan) -> Result<()> {
        let m = &self.models;
        let births = match &self.previous {
            Some(prev) => adaptive_birth(prev, &m.sensor, &m.birth)?
                .predict(&m.motion.transition, &m.motion.process_noise),
            None => GaussianMixture::empty(),
        };
        let predicted = phd_predict(&self.intensity, &m.motion, &births);
        let kappa = clutter_density(m.clutter.p_fa, &m.sensor.grid);
        let updated = phd_update(&predicted, scan, &m.sensor, kappa, self.config.gate)?;
        let (pruned, _) = prune(&updated.mixture, self.config.tau);
        let mut reduced = merge(&pruned, self.config.merge_threshold);
        reduced.truncate(self.config.max_components);
        self.intensity = PhdIntensity { mixture: reduced };
        self.previous = Some(scan.clone());
        Ok(())
    }

    pub fn extract_estimates(&self) -> Vec<StateVector> {
        phd_extract(&self.intensity, self.config.extract_threshold)
    }
}

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::config::ScenarioConfig;
use crate::error::{HispError, Result};
use crate::gaussian::{ObsVector, StateVector};
use crate::scan::Scan;
use crate::sensor::{range_bearing, wrap_angle, Models};

/// Object states at every scan: `states[k][i]` is object `i` at scan
/// `k + 1`, time `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub times: Vec<f64>,
    pub states: Vec<Vec<StateVector>>,
}

impl Truth {
    pub fn positions(&self, k: usize) -> Vec<[f64; 2]> {
        self.states[k].iter().map(|s| [s[0], s[1]]).collect()
    }
}

/// Constant-velocity propagation with white acceleration noise of variance
/// `truth_q_var`; objects never disappear.
pub fn generate_truth<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Truth> {
    let dt = cfg.dt;
    let accel = Normal::new(0.0, cfg.truth_q_var.sqrt())
        .map_err(|e| HispError::Config(format!("truth noise: {e}")))?;
    let mut current: Vec<StateVector> = cfg
        .initial_states
        .iter()
        .map(|s| StateVector::new(s[0], s[1], s[2], s[3]))
        .collect();
    let n = cfg.n_steps() as usize;
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for k in 1..=n {
        for s in &mut current {
            let (ax, ay) = if cfg.truth_q_var > 0.0 {
                (accel.sample(rng), accel.sample(rng))
            } else {
                (0.0, 0.0)
            };
            *s = StateVector::new(
                s[0] + dt * s[2] + 0.5 * dt * dt * ax,
                s[1] + dt * s[3] + 0.5 * dt * dt * ay,
                s[2] + dt * ax,
                s[3] + dt * ay,
            );
        }
        times.push(k as f64 * dt);
        states.push(current.clone());
    }
    Ok(Truth { times, states })
}

/// One scan: each object detected with its detection probability, noisy
/// range and bearing clipped to the sensor bounds, and an independent
/// false alarm in each cell with probability `p_fa`, placed uniformly in
/// range and bearing within the cell.
pub fn simulate_scan<R: Rng>(
    step: u32,
    time: f64,
    objects: &[StateVector],
    models: &Models,
    rng: &mut R,
) -> Result<Scan> {
    let sensor = &models.sensor;
    let grid = &sensor.grid;
    let noise_r = Normal::new(0.0, sensor.sigma_r).map_err(|e| HispError::Config(e.to_string()))?;
    let noise_t =
        Normal::new(0.0, sensor.sigma_theta).map_err(|e| HispError::Config(e.to_string()))?;
    let mut zs = Vec::new();
    for s in objects {
        let pd = sensor.detection_probability(s);
        if pd > 0.0 && rng.random_bool(pd) {
            let rb = range_bearing(s, grid)?;
            let r = (rb.z[0] + noise_r.sample(rng)).clamp(grid.r_min, grid.r_max);
            let t = wrap_angle(rb.z[1] + noise_t.sample(rng));
            zs.push(ObsVector::new(r, t));
        }
    }
    let n_cells = grid.cell_count();
    let p_fa = models.clutter.p_fa;
    let count = if p_fa > 0.0 {
        Binomial::new(n_cells as u64, p_fa)
            .map_err(|e| HispError::Config(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    for idx in index::sample(rng, n_cells, count) {
        let (r0, r1, t0, t1) = grid.cell_bounds(grid.cell_from_index(idx));
        let r = rng.random_range(r0..r1).min(grid.r_max);
        let t = wrap_angle(rng.random_range(t0..t1));
        zs.push(ObsVector::new(r, t));
    }
    zs.shuffle(rng);
    Scan::from_measurements(step, time, &zs, grid)
}

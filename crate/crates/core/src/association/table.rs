use std::io::Write;

use crate::error::{HispError, Result};
use crate::gaussian::{GaussianMixture, MeasurementModel, PredictedObservation};
use crate::hypothesis::Hypothesis;
use crate::scan::Scan;
use crate::sensor::{BirthModel, ClutterModel, RangeBearingSensor};

/// Prior association mass of one propagated row with one observation,
/// together with the conditional (updated) law on the state space.
#[derive(Debug, Clone)]
pub struct Detection {
    pub obs: usize,
    pub mass: f64,
    /// Normalised to unit weight; empty for synthetic tables.
    pub posterior: GaussianMixture,
}

#[derive(Debug, Clone)]
pub struct PropagatedRow {
    /// `p^{x,φ}`
    pub miss: f64,
    /// Non-zero entries only, sorted by observation index.
    pub detections: Vec<Detection>,
}

/// The birth and false-alarm representations attached to one observation.
#[derive(Debug, Clone)]
pub struct ObservationRows {
    /// `p^{b_z,z}`
    pub birth_hit: f64,
    /// `p^{b_z,φ}`
    pub birth_miss: f64,
    /// `p^{op_z,z}`
    pub clutter_hit: f64,
    /// `p^{op_z,φ}`
    pub clutter_miss: f64,
    pub birth_posterior: GaussianMixture,
}

impl ObservationRows {
    pub fn new(birth_hit: f64, birth_miss: f64, clutter_hit: f64, clutter_miss: f64) -> Self {
        Self {
            birth_hit,
            birth_miss,
            clutter_hit,
            clutter_miss,
            birth_posterior: GaussianMixture::empty(),
        }
    }
}

/// Scalar prior association masses for every row of `X⁺` against every
/// column of `Z ∪ {φ}`. Entries that are not stored are exactly zero.
#[derive(Debug, Clone)]
pub struct AssociationTable {
    pub rows: Vec<PropagatedRow>,
    pub observations: Vec<ObservationRows>,
    /// For each observation, the `(row, detection index)` pairs gating it.
    column_index: Vec<Vec<(usize, usize)>>,
}

fn check_mass(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(HispError::DegenerateTable(format!(
            "{what} must be finite and non-negative (got {v})"
        )))
    }
}

impl AssociationTable {
    pub fn new(mut rows: Vec<PropagatedRow>, observations: Vec<ObservationRows>) -> Result<Self> {
        let n = observations.len();
        let mut column_index = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            check_mass(row.miss, "miss mass")?;
            row.detections.retain(|d| d.mass != 0.0);
            row.detections.sort_by_key(|d| d.obs);
            for w in row.detections.windows(2) {
                if w[0].obs == w[1].obs {
                    return Err(HispError::DegenerateTable(format!(
                        "row {i} has two entries for observation {}",
                        w[0].obs
                    )));
                }
            }
            for (k, d) in row.detections.iter().enumerate() {
                check_mass(d.mass, "detection mass")?;
                if d.obs >= n {
                    return Err(HispError::DegenerateTable(format!(
                        "row {i} references observation {} of {n}",
                        d.obs
                    )));
                }
                column_index[d.obs].push((i, k));
            }
        }
        for o in &observations {
            for v in [o.birth_hit, o.birth_miss, o.clutter_hit, o.clutter_miss] {
                check_mass(v, "birth/clutter mass")?;
            }
        }
        Ok(Self {
            rows,
            observations,
            column_index,
        })
    }

    /// Table from bare masses: `rows[i] = (p^{x,φ}, [(z, p^{x,z})])`,
    /// `obs[j] = (p^{b,z}, p^{b,φ}, p^{op,z}, p^{op,φ})`.
    pub fn from_masses(
        rows: &[(f64, Vec<(usize, f64)>)],
        obs: &[(f64, f64, f64, f64)],
    ) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|(miss, dets)| PropagatedRow {
                miss: *miss,
                detections: dets
                    .iter()
                    .map(|&(obs, mass)| Detection {
                        obs,
                        mass,
                        posterior: GaussianMixture::empty(),
                    })
                    .collect(),
            })
            .collect();
        let observations = obs
            .iter()
            .map(|&(bh, bm, ch, cm)| ObservationRows::new(bh, bm, ch, cm))
            .collect();
        Self::new(rows, observations)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_obs(&self) -> usize {
        self.observations.len()
    }

    /// `(row, detection index)` pairs with a non-zero entry in column `z`.
    pub fn column(&self, z: usize) -> &[(usize, usize)] {
        &self.column_index[z]
    }

    /// `p^{x,z}` with zero for entries outside the gate.
    pub fn mass(&self, row: usize, z: usize) -> f64 {
        self.rows[row]
            .detections
            .binary_search_by_key(&z, |d| d.obs)
            .map(|k| self.rows[row].detections[k].mass)
            .unwrap_or(0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.rows.iter().map(|r| r.detections.len()).sum()
    }

    /// Writes `hypothesis-id,observation-id,log-mass` lines for every stored
    /// entry, including the birth and false-alarm rows.
    pub fn write_dump<W: Write>(
        &self,
        out: &mut W,
        row_ids: &[String],
        obs_ids: &[String],
    ) -> Result<()> {
        writeln!(out, "hypothesis-id,observation-id,log-mass")?;
        let obs_label = |j: usize| obs_ids.get(j).cloned().unwrap_or_else(|| j.to_string());
        for (i, row) in self.rows.iter().enumerate() {
            let label = row_ids.get(i).cloned().unwrap_or_else(|| i.to_string());
            writeln!(out, "{label},phi,{:e}", row.miss.ln())?;
            for d in &row.detections {
                writeln!(out, "{label},{},{:e}", obs_label(d.obs), d.mass.ln())?;
            }
        }
        for (j, o) in self.observations.iter().enumerate() {
            let z = obs_label(j);
            writeln!(out, "b:{z},{z},{:e}", o.birth_hit.ln())?;
            writeln!(out, "b:{z},phi,{:e}", o.birth_miss.ln())?;
            writeln!(out, "op:{z},{z},{:e}", o.clutter_hit.ln())?;
            writeln!(out, "op:{z},phi,{:e}", o.clutter_miss.ln())?;
        }
        Ok(())
    }
}

/// Per-observation normaliser combining the birth and false-alarm odds.
pub fn compute_cz(table: &AssociationTable, z: usize) -> Result<f64> {
    let o = &table.observations[z];
    if o.birth_miss <= 0.0 || o.clutter_miss <= 0.0 {
        return Err(HispError::Config(format!(
            "observation {z}: birth or false-alarm probability equal to one leaves a zero denominator"
        )));
    }
    Ok(o.birth_hit / o.birth_miss + o.clutter_hit / o.clutter_miss)
}

/// Builds the table for the propagated hypotheses and one scan.
///
/// The observation likelihood is taken per resolution cell: the Gaussian
/// density in `(r, θ)` times the cell volume, which puts detections on the
/// same footing as the per-cell false-alarm probability. Pairs whose
/// innovation has squared Mahalanobis distance above `gate` for every
/// component are left at exactly zero.
pub fn build_table(
    hypotheses: &[Hypothesis],
    scan: &Scan,
    sensor: &RangeBearingSensor,
    birth: &BirthModel,
    clutter: &ClutterModel,
    gate: f64,
) -> Result<AssociationTable> {
    let volume = sensor.likelihood_volume();
    let noise = sensor.noise_covariance();
    let mut rows = Vec::with_capacity(hypotheses.len());
    for h in hypotheses {
        let law = &h.law;
        let mut miss = law.mass_phi + law.mass_psi;
        let mut prepared = Vec::with_capacity(law.alive.len());
        for c in &law.alive.components {
            let pd = sensor.detection_probability(&c.mean);
            miss += (1.0 - pd) * c.weight;
            if pd > 0.0 && c.weight > 0.0 {
                prepared.push((c, pd, PredictedObservation::new(c, sensor)?));
            }
        }
        let mut detections = Vec::new();
        if !prepared.is_empty() {
            for (j, o) in scan.observations.iter().enumerate() {
                let mut comps = Vec::new();
                let mut mass = 0.0;
                for (c, pd, pred) in &prepared {
                    let residual = sensor.residual(&o.z, &pred.predicted);
                    if pred.mahalanobis2(&residual) > gate {
                        continue;
                    }
                    let m = pd * c.weight * pred.log_density(&residual).exp() * volume;
                    if m > 0.0 {
                        let mut u = pred.update(c, &residual, &noise);
                        u.weight = m;
                        mass += m;
                        comps.push(u);
                    }
                }
                if mass > 0.0 {
                    detections.push(Detection {
                        obs: j,
                        mass,
                        posterior: GaussianMixture::new(comps).normalized_to(1.0),
                    });
                }
            }
        }
        rows.push(PropagatedRow { miss, detections });
    }

    let mut observations = Vec::with_capacity(scan.len());
    for o in &scan.observations {
        let law = birth.birth_law_for(&sensor.grid, &o.z)?;
        let prior = &law.alive.components[0];
        let pred = PredictedObservation::new(prior, sensor)?;
        let residual = sensor.residual(&o.z, &pred.predicted);
        let hit = prior.weight * pred.log_density(&residual).exp() * volume;
        let mut post = pred.update(prior, &residual, &noise);
        post.weight = 1.0;
        let p_fa = clutter.clutter_terms(&o.z);
        observations.push(ObservationRows {
            birth_hit: hit,
            birth_miss: law.mass_phi + law.mass_psi,
            clutter_hit: p_fa,
            clutter_miss: 1.0 - p_fa,
            birth_posterior: GaussianMixture::single(post),
        });
    }
    AssociationTable::new(rows, observations)
}

//! The HISP recursion over Gaussian-mixture hypothesis laws.

use std::collections::HashMap;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::association::{
    build_table, compute_weights_approx1, compute_weights_exact_clustered, AssociationTable,
    NormalizationResiduals, WeightTable,
};
use crate::error::{HispError, Result};
use crate::gaussian::{merge, prune, GaussianMixture, StateVector};
use crate::hypothesis::{
    update_confirmation, ExtendedLaw, Hypothesis, IndividualKind, Interval, PotentialIndividual,
};
use crate::scan::Scan;
use crate::sensor::Models;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMethod {
    /// Factorised weights, linear in the table size.
    Approx1,
    /// Exact weights per gating cluster.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Pruning threshold on alive probability and on component weight.
    pub tau: f64,
    /// Squared Mahalanobis merging threshold.
    pub merge_threshold: f64,
    pub tau_c: f64,
    pub tau_uc: f64,
    /// Squared Mahalanobis gate on the innovation.
    pub gate: f64,
    pub max_components: usize,
    pub weight_method: WeightMethod,
    /// Whose covariance measures the distance between two hypotheses.
    pub merge_metric: MergeMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMetric {
    /// Candidate's own covariance, as in mixture reduction.
    Candidate,
    /// The leader's covariance.
    Leader,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            tau: 1e-5,
            merge_threshold: 4.0,
            tau_c: 0.99,
            tau_uc: 0.9,
            gate: 25.0,
            max_components: 8,
            weight_method: WeightMethod::Approx1,
            merge_metric: MergeMetric::Candidate,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau >= 0.0
            && self.tau < 1.0
            && self.merge_threshold >= 0.0
            && (0.0..=1.0).contains(&self.tau_c)
            && (0.0..=self.tau_c).contains(&self.tau_uc)
            && self.gate > 0.0
            && self.max_components >= 1;
        if ok {
            Ok(())
        } else {
            Err(HispError::Config(format!(
                "invalid filter configuration: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub id: u64,
    pub state: StateVector,
}

/// Per-scan bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    pub step: u32,
    pub observations: usize,
    pub before_reduce: usize,
    pub after_reduce: usize,
    pub confirmed: usize,
    /// `ln P_t`
    pub log_p: f64,
    pub residuals: NormalizationResiduals,
}

#[derive(Debug, Clone)]
pub struct HispFilter {
    pub models: Models,
    pub config: FilterConfig,
    pub step: u32,
    pub hypotheses: Vec<Hypothesis>,
    next_id: u64,
}

impl HispFilter {
    /// Starts from the single representation `({0}, ())`, whose law is
    /// entirely on the non-existence point.
    pub fn new(models: Models, config: FilterConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            models,
            config,
            step: 0,
            hypotheses: vec![Hypothesis {
                id: 0,
                individual: PotentialIndividual::initial(),
                law: ExtendedLaw::non_existent(),
                confirmed: false,
            }],
            next_id: 1,
        })
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Chapman-Kolmogorov prediction of every law; survivors stay alive,
    /// the rest of the alive mass moves to the disappeared point.
    pub fn time_update(&mut self) {
        let motion = &self.models.motion;
        for h in &mut self.hypotheses {
            let alive = h.law.alive.total_weight();
            let mut predicted = h
                .law
                .alive
                .predict(&motion.transition, &motion.process_noise);
            predicted.scale(motion.p_survival);
            h.law.mass_psi += (1.0 - motion.p_survival) * alive;
            h.law.alive = predicted;
        }
    }

    pub fn build_table(&self, scan: &Scan) -> Result<AssociationTable> {
        let m = &self.models;
        build_table(
            &self.hypotheses,
            scan,
            &m.sensor,
            &m.birth,
            &m.clutter,
            self.config.gate,
        )
    }

    pub fn compute_weights(&self, table: &AssociationTable) -> Result<WeightTable> {
        match self.config.weight_method {
            WeightMethod::Approx1 => compute_weights_approx1(table),
            WeightMethod::Exact => compute_weights_exact_clustered(table),
        }
    }

    /// Replaces the hypothesis set by its posterior children: one detected
    /// child per gated `(x, z)`, one undetected child per `x`, and one
    /// newborn per observation. False-alarm representations are dropped.
    pub fn observation_update(&mut self, scan: &Scan) -> Result<StepDiagnostics> {
        scan.validate(&self.models.sensor.grid)?;
        if scan.step <= self.step {
            return Err(HispError::Config(format!(
                "scan step {} does not follow filter step {}",
                scan.step, self.step
            )));
        }
        let table = self.build_table(scan)?;
        let weights = self.compute_weights(&table)?;
        let residuals = weights.normalization_residuals(&table);
        let step = scan.step;
        let sensor = self.models.sensor.clone();

        let columns: Vec<_> = (0..table.n_obs())
            .map(|z| weights.column_posterior(&table, z))
            .collect();
        let mut children = Vec::with_capacity(self.hypotheses.len() * 2 + scan.len());
        let parents = std::mem::take(&mut self.hypotheses);

        for (i, parent) in parents.iter().enumerate() {
            let row = &table.rows[i];
            let interval = parent.individual.interval.map(|iv| Interval {
                birth: iv.birth,
                until: step,
            });

            let m = weights.row_posterior(&table, i).miss;
            if m > 0.0 && row.miss > 0.0 {
                let k = m / row.miss;
                let alive = GaussianMixture::new(
                    parent
                        .law
                        .alive
                        .components
                        .iter()
                        .map(|c| c.scaled(k * (1.0 - sensor.detection_probability(&c.mean))))
                        .filter(|c| c.weight > 0.0)
                        .collect(),
                );
                let psi = k * parent.law.mass_psi;
                let phi = (1.0 - alive.total_weight() - psi).max(0.0);
                let id = self.fresh_id();
                children.push(Hypothesis {
                    id,
                    individual: PotentialIndividual {
                        interval,
                        path: parent.individual.path.extended(None),
                        kind: IndividualKind::Propagated,
                    },
                    law: ExtendedLaw {
                        mass_phi: phi,
                        mass_psi: psi,
                        alive,
                    },
                    confirmed: parent.confirmed,
                });
            }
        }
        for (z, col) in columns.iter().enumerate() {
            let obs = &scan.observations[z];
            for &(i, k, r) in &col.propagated {
                if r <= 0.0 {
                    continue;
                }
                let parent = &parents[i];
                let id = self.fresh_id();
                children.push(Hypothesis {
                    id,
                    individual: PotentialIndividual {
                        interval: parent.individual.interval.map(|iv| Interval {
                            birth: iv.birth,
                            until: step,
                        }),
                        path: parent.individual.path.extended(Some(obs.id)),
                        kind: IndividualKind::Propagated,
                    },
                    law: ExtendedLaw {
                        mass_phi: 1.0 - r.min(1.0),
                        mass_psi: 0.0,
                        alive: table.rows[i].detections[k].posterior.scaled(r.min(1.0)),
                    },
                    confirmed: parent.confirmed,
                });
            }
            if col.birth > 0.0 {
                let r = col.birth.min(1.0);
                let id = self.fresh_id();
                children.push(Hypothesis {
                    id,
                    individual: PotentialIndividual::birth(step, obs.id),
                    law: ExtendedLaw {
                        mass_phi: 1.0 - r,
                        mass_psi: 0.0,
                        alive: table.observations[z].birth_posterior.scaled(r),
                    },
                    confirmed: false,
                });
            }
        }
        self.hypotheses = children;
        self.step = step;
        Ok(StepDiagnostics {
            step,
            observations: scan.len(),
            before_reduce: self.hypotheses.len(),
            log_p: weights.log_p,
            residuals,
            ..Default::default()
        })
    }

    /// Pruning, merging and confirmation.
    pub fn reduce(&mut self) {
        let cfg = self.config.clone();
        let mut kept: Vec<Hypothesis> = Vec::with_capacity(self.hypotheses.len());
        for mut h in std::mem::take(&mut self.hypotheses) {
            let (mut alive, removed) = prune(&h.law.alive, cfg.tau);
            alive = merge(&alive, cfg.merge_threshold);
            let before = alive.total_weight();
            alive.truncate(cfg.max_components);
            let dropped = removed + before - alive.total_weight();
            if alive.total_weight() < cfg.tau {
                continue;
            }
            h.law.mass_phi += dropped;
            h.law.alive = alive;
            kept.push(h);
        }

        let mut groups: HashMap<Option<crate::hypothesis::ObsId>, Vec<Hypothesis>> = HashMap::new();
        let mut order = Vec::new();
        for h in kept {
            let key = h.individual.path.last().flatten();
            if !groups.contains_key(&key) {
                order.push(key);
            }
            groups.entry(key).or_default().push(h);
        }
        let mut out = Vec::new();
        for key in order {
            let mut group = groups.remove(&key).unwrap_or_default();
            group.sort_by(|a, b| {
                b.alive_probability()
                    .total_cmp(&a.alive_probability())
                    .then(a.id.cmp(&b.id))
            });
            while !group.is_empty() {
                let leader = group.remove(0);
                let lead = leader.law.alive.dominant().cloned();
                let chol = lead.as_ref().and_then(|c| c.covariance.cholesky());
                let (absorbed, rest): (Vec<_>, Vec<_>) =
                    group
                        .into_iter()
                        .partition(|h| match (&lead, &chol, h.law.alive.dominant()) {
                            (Some(l), Some(ch), Some(d)) => {
                                let diff = d.mean - l.mean;
                                let lead_d = diff.dot(&ch.solve(&diff));
                                let cand_d = d.mahalanobis2(&l.mean).unwrap_or(f64::INFINITY);
                                let d2 = match cfg.merge_metric {
                                    MergeMetric::Candidate => cand_d,
                                    MergeMetric::Leader => lead_d,
                                };
                                d2 <= cfg.merge_threshold
                            }
                            _ => false,
                        });
                group = rest;
                out.push(if absorbed.is_empty() {
                    leader
                } else {
                    merge_hypotheses(leader, absorbed, &cfg)
                });
            }
        }
        self.hypotheses = out
            .iter()
            .map(|h| update_confirmation(h, cfg.tau_c, cfg.tau_uc))
            .collect();
    }

    /// Prediction, update and reduction for one scan.
    pub fn step(&mut self, scan: &Scan) -> Result<StepDiagnostics> {
        self.time_update();
        let mut d = self.observation_update(scan)?;
        self.reduce();
        d.after_reduce = self.hypotheses.len();
        d.confirmed = self.hypotheses.iter().filter(|h| h.confirmed).count();
        debug!(
            "step {}: {} obs, {} -> {} hypotheses, {} confirmed, ln P = {:.3}",
            d.step, d.observations, d.before_reduce, d.after_reduce, d.confirmed, d.log_p
        );
        Ok(d)
    }

    /// Mean of the heaviest alive component of every confirmed hypothesis.
    pub fn extract_estimates(&self) -> Vec<Estimate> {
        self.hypotheses
            .iter()
            .filter(|h| h.confirmed)
            .filter_map(|h| {
                h.law.alive.dominant().map(|c| Estimate {
                    id: h.id,
                    state: c.mean,
                })
            })
            .collect()
    }
}

/// Hypotheses assumed to represent the same object: mixtures are pooled and
/// reduced, the alive probability is capped at one.
fn merge_hypotheses(
    leader: Hypothesis,
    absorbed: Vec<Hypothesis>,
    cfg: &FilterConfig,
) -> Hypothesis {
    let mut components = leader.law.alive.components.clone();
    let mut psi = leader.law.mass_psi;
    let mut confirmed = leader.confirmed;
    for h in &absorbed {
        components.extend(h.law.alive.components.iter().cloned());
        psi += h.law.mass_psi;
        confirmed |= h.confirmed;
    }
    let mut alive = merge(&GaussianMixture::new(components), cfg.merge_threshold);
    alive.truncate(cfg.max_components);
    let total = alive.total_weight();
    if total > 1.0 {
        alive.scale(1.0 / total);
    }
    let a = alive.total_weight();
    let psi = psi.min(1.0 - a).max(0.0);
    Hypothesis {
        id: leader.id,
        individual: leader.individual,
        law: ExtendedLaw {
            mass_phi: (1.0 - a - psi).max(0.0),
            mass_psi: psi,
            alive,
        },
        confirmed,
    }
}

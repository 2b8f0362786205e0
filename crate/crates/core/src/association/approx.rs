//! Factorised joint weights.
//!
//! For every propagated row the algorithm forms `S(x,z) = p^{x,z}/C^z`,
//! `T(x,φ) = p^{x,φ} + Σ_z S(x,z)` and `T(x,z) = T(x,φ) − S(x,z)`; then
//! `P(z) = Π_x T(x,z)` and `w(x,z) = C'(x,z) P(z) / T(x,z)`. Everything runs
//! in log domain. The quotient `P(z)/T(x,z)` is taken as a leave-one-out
//! product: each column keeps the log-sum of its non-zero factors and a
//! count of its exactly-zero factors, so a zero `T(x,z)` never divides.
//! The cost is linear in the number of stored entries plus rows plus
//! columns, i.e. `O(|Z||X|)` for a dense table.

use crate::association::table::{compute_cz, AssociationTable};
use crate::association::weights::{ObsWeights, RowWeights, WeightTable};
use crate::error::{HispError, Result};
use crate::numeric::{ln, log_sum_exp};

/// Running product of one column's factors `T(x, c)`.
#[derive(Debug, Clone, Copy, Default)]
struct ColumnProduct {
    log_sum: f64,
    zeros: u32,
}

impl ColumnProduct {
    fn push(&mut self, log_t: f64) {
        if log_t == f64::NEG_INFINITY {
            self.zeros += 1;
        } else {
            self.log_sum += log_t;
        }
    }

    fn remove(&mut self, log_t: f64) {
        if log_t == f64::NEG_INFINITY {
            self.zeros -= 1;
        } else {
            self.log_sum -= log_t;
        }
    }

    /// `ln P(c)`
    fn log_total(&self) -> f64 {
        if self.zeros == 0 {
            self.log_sum
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `ln Π_{x'≠x} T(x', c)` given `ln T(x, c)`.
    fn leave_one_out(&self, log_t: f64) -> f64 {
        if log_t == f64::NEG_INFINITY {
            if self.zeros == 1 {
                self.log_sum
            } else {
                f64::NEG_INFINITY
            }
        } else if self.zeros == 0 {
            self.log_sum - log_t
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Per-row intermediate quantities.
struct RowTerms {
    log_t_phi: f64,
    /// `ln T(x,z)` for each stored detection.
    log_t_det: Vec<f64>,
}

fn row_terms(log_miss: f64, log_s: &[f64]) -> RowTerms {
    let mut all = Vec::with_capacity(log_s.len() + 1);
    all.push(log_miss);
    all.extend_from_slice(log_s);
    let log_t_phi = log_sum_exp(&all);
    let log_t_det = log_s
        .iter()
        .enumerate()
        .map(|(k, &ls)| {
            let frac = (ls - log_t_phi).exp();
            if frac < 0.5 {
                log_t_phi + (-frac).ln_1p()
            } else {
                // cancellation: sum the remaining terms directly
                let rest: Vec<f64> = all
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k + 1)
                    .map(|(_, &v)| v)
                    .collect();
                log_sum_exp(&rest)
            }
        })
        .collect();
    RowTerms {
        log_t_phi,
        log_t_det,
    }
}

/// Joint weights under the factorised approximation.
pub fn compute_weights_approx1(table: &AssociationTable) -> Result<WeightTable> {
    let n_obs = table.n_obs();
    let mut log_cz = Vec::with_capacity(n_obs);
    let mut lb = 0.0;
    for z in 0..n_obs {
        let c = compute_cz(table, z)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(HispError::DegenerateTable(format!(
                "observation {z} has C^z = {c}; it cannot be explained by birth or false alarm"
            )));
        }
        log_cz.push(c.ln());
        let o = &table.observations[z];
        lb += o.birth_miss.ln() + o.clutter_miss.ln();
    }
    let lc: f64 = log_cz.iter().sum();

    let terms: Vec<RowTerms> = table
        .rows
        .iter()
        .map(|row| {
            let log_s: Vec<f64> = row
                .detections
                .iter()
                .map(|d| d.mass.ln() - log_cz[d.obs])
                .collect();
            row_terms(ln(row.miss), &log_s)
        })
        .collect();

    let mut phi_col = ColumnProduct::default();
    for t in &terms {
        phi_col.push(t.log_t_phi);
    }
    let mut cols = vec![phi_col; n_obs];
    for (z, col) in cols.iter_mut().enumerate() {
        for &(i, k) in table.column(z) {
            col.remove(terms[i].log_t_phi);
            col.push(terms[i].log_t_det[k]);
        }
    }

    let rows = terms
        .iter()
        .zip(&table.rows)
        .map(|(t, row)| RowWeights {
            miss: lb + lc + phi_col.leave_one_out(t.log_t_phi),
            detections: row
                .detections
                .iter()
                .zip(&t.log_t_det)
                .map(|(d, &ltd)| lb + lc - log_cz[d.obs] + cols[d.obs].leave_one_out(ltd))
                .collect(),
        })
        .collect();

    let observations = (0..n_obs)
        .map(|z| {
            let o = &table.observations[z];
            let col = &cols[z];
            let base = lb + lc - log_cz[z];
            let log_pz = col.log_total();
            // With the birth (resp. false-alarm) row on φ, z is explained by
            // the other representation of z or by a propagated row.
            let explained = |log_odds: f64| {
                let mut parts = Vec::with_capacity(table.column(z).len() + 1);
                parts.push(log_odds + log_pz);
                for &(i, k) in table.column(z) {
                    parts.push(
                        table.rows[i].detections[k].mass.ln()
                            + col.leave_one_out(terms[i].log_t_det[k]),
                    );
                }
                log_sum_exp(&parts)
            };
            ObsWeights {
                birth_hit: base - o.birth_miss.ln() + log_pz,
                birth_miss: base - o.birth_miss.ln()
                    + explained(ln(o.clutter_hit) - o.clutter_miss.ln()),
                clutter_hit: base - o.clutter_miss.ln() + log_pz,
                clutter_miss: base - o.clutter_miss.ln()
                    + explained(ln(o.birth_hit) - o.birth_miss.ln()),
            }
        })
        .collect();

    let log_p = lb + lc + phi_col.log_total();
    if log_p == f64::NEG_INFINITY {
        return Err(HispError::DegenerateTable(
            "joint probability is zero: some row can neither be missed nor detected".into(),
        ));
    }
    Ok(WeightTable {
        log_cz,
        rows,
        observations,
        log_p,
    })
}

/// `w(x, z)` for any propagated row and any observation, including pairs
/// outside the gate; `z = None` is the empty observation.
pub fn approx1_weight(table: &AssociationTable, x: usize, z: Option<usize>) -> Result<f64> {
    let n_obs = table.n_obs();
    let mut lb = 0.0;
    let mut log_cz = Vec::with_capacity(n_obs);
    for j in 0..n_obs {
        log_cz.push(compute_cz(table, j)?.ln());
        let o = &table.observations[j];
        lb += o.birth_miss.ln() + o.clutter_miss.ln();
    }
    let lc: f64 = log_cz.iter().sum();
    let mut total = lb + lc;
    if let Some(z) = z {
        total -= log_cz[z];
    }
    for (i, row) in table.rows.iter().enumerate() {
        if i == x {
            continue;
        }
        let parts: Vec<f64> = std::iter::once(ln(row.miss))
            .chain(
                row.detections
                    .iter()
                    .filter(|d| Some(d.obs) != z)
                    .map(|d| d.mass.ln() - log_cz[d.obs]),
            )
            .collect();
        total += log_sum_exp(&parts);
    }
    Ok(total.exp())
}

/// `P_t` from the product-over-rows factorisation.
pub fn factorised_p_approx1(table: &AssociationTable) -> Result<f64> {
    let mut log_p = 0.0;
    let mut log_cz = Vec::with_capacity(table.n_obs());
    for z in 0..table.n_obs() {
        let c = compute_cz(table, z)?;
        log_cz.push(ln(c));
        let o = &table.observations[z];
        log_p += o.birth_miss.ln() + o.clutter_miss.ln() + ln(c);
    }
    for row in &table.rows {
        let parts: Vec<f64> = std::iter::once(ln(row.miss))
            .chain(row.detections.iter().map(|d| d.mass.ln() - log_cz[d.obs]))
            .collect();
        log_p += log_sum_exp(&parts);
    }
    Ok(log_p.exp())
}

/// `P_t` from the product-over-observations factorisation,
/// `Π_{x∈X⁺} p^{x,φ} × Π_z [C^z + Σ_x p^{x,z}/p^{x,φ}]`.
pub fn factorised_p_approx2(table: &AssociationTable) -> Result<f64> {
    let mut log_p = 0.0;
    for (i, row) in table.rows.iter().enumerate() {
        if row.miss <= 0.0 {
            return Err(HispError::DegenerateTable(format!(
                "row {i} has p^(x,phi) = 0; the per-observation factorisation is undefined"
            )));
        }
        log_p += row.miss.ln();
    }
    for z in 0..table.n_obs() {
        let o = &table.observations[z];
        log_p += o.birth_miss.ln() + o.clutter_miss.ln();
        let mut sum = compute_cz(table, z)?;
        for &(i, k) in table.column(z) {
            sum += table.rows[i].detections[k].mass / table.rows[i].miss;
        }
        log_p += ln(sum);
    }
    Ok(log_p.exp())
}

use crate::association::table::AssociationTable;
use crate::numeric::log_sum_exp;

/// Joint weights of one propagated row, in log domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RowWeights {
    /// `ln w(x, φ)`
    pub miss: f64,
    /// `ln w(x, z)`, aligned with the row's stored detections.
    pub detections: Vec<f64>,
}

/// Joint weights of the birth and false-alarm rows of one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsWeights {
    pub birth_hit: f64,
    pub birth_miss: f64,
    pub clutter_hit: f64,
    pub clutter_miss: f64,
}

/// `w(x, z)` for every stored entry of an [`AssociationTable`], plus the
/// per-observation normalisers and the joint probability `P_t`, all as
/// natural logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub log_cz: Vec<f64>,
    pub rows: Vec<RowWeights>,
    pub observations: Vec<ObsWeights>,
    pub log_p: f64,
}

/// Column-normalised posterior masses for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPosterior {
    /// `(row, detection index, mass)`
    pub propagated: Vec<(usize, usize, f64)>,
    pub birth: f64,
    pub clutter: f64,
}

/// Row-normalised posterior masses for one propagated row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPosterior {
    pub miss: f64,
    pub detections: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormalizationResiduals {
    /// `max_z |Σ_{x∈X^z} w(x,z)p^{x,z} / P_t − 1|`
    pub max_column: f64,
    /// `max_x |Σ_{z∈Z̄} w(x,z)p^{x,z} / P_t − 1|` over all rows of `X⁺`.
    pub max_row: f64,
}

impl WeightTable {
    /// `ln w(x,z)p^{x,z}` terms of column `z`: propagated, then birth, then
    /// false alarm.
    fn column_log_terms(&self, table: &AssociationTable, z: usize) -> Vec<f64> {
        let mut terms: Vec<f64> = table
            .column(z)
            .iter()
            .map(|&(i, k)| self.rows[i].detections[k] + table.rows[i].detections[k].mass.ln())
            .collect();
        let o = &table.observations[z];
        let w = &self.observations[z];
        terms.push(w.birth_hit + o.birth_hit.ln());
        terms.push(w.clutter_hit + o.clutter_hit.ln());
        terms
    }

    fn row_log_terms(&self, table: &AssociationTable, x: usize) -> Vec<f64> {
        let row = &table.rows[x];
        let w = &self.rows[x];
        std::iter::once(w.miss + row.miss.ln())
            .chain(
                row.detections
                    .iter()
                    .zip(&w.detections)
                    .map(|(d, lw)| lw + d.mass.ln()),
            )
            .collect()
    }

    /// `ln Σ_{x∈X^z} w(x,z) p^{x,z}`.
    pub fn column_log_sum(&self, table: &AssociationTable, z: usize) -> f64 {
        log_sum_exp(&self.column_log_terms(table, z))
    }

    /// `ln Σ_{z∈Z̄} w(x,z) p^{x,z}` for a propagated row.
    pub fn row_log_sum(&self, table: &AssociationTable, x: usize) -> f64 {
        log_sum_exp(&self.row_log_terms(table, x))
    }

    /// Row sums of the birth and false-alarm rows attached to `z`.
    pub fn obs_row_log_sums(&self, table: &AssociationTable, z: usize) -> (f64, f64) {
        let o = &table.observations[z];
        let w = &self.observations[z];
        (
            log_sum_exp(&[
                w.birth_hit + o.birth_hit.ln(),
                w.birth_miss + o.birth_miss.ln(),
            ]),
            log_sum_exp(&[
                w.clutter_hit + o.clutter_hit.ln(),
                w.clutter_miss + o.clutter_miss.ln(),
            ]),
        )
    }

    /// Posterior association masses for column `z`, normalised over the
    /// column.
    pub fn column_posterior(&self, table: &AssociationTable, z: usize) -> ColumnPosterior {
        let terms = self.column_log_terms(table, z);
        let norm = log_sum_exp(&terms);
        let p = |t: f64| {
            if norm == f64::NEG_INFINITY {
                0.0
            } else {
                (t - norm).exp()
            }
        };
        let n = terms.len();
        ColumnPosterior {
            propagated: table
                .column(z)
                .iter()
                .zip(&terms)
                .map(|(&(i, k), &t)| (i, k, p(t)))
                .collect(),
            birth: p(terms[n - 2]),
            clutter: p(terms[n - 1]),
        }
    }

    /// Posterior association masses for propagated row `x`, normalised over
    /// the row.
    pub fn row_posterior(&self, table: &AssociationTable, x: usize) -> RowPosterior {
        let terms = self.row_log_terms(table, x);
        let norm = log_sum_exp(&terms);
        let p = |t: f64| {
            if norm == f64::NEG_INFINITY {
                0.0
            } else {
                (t - norm).exp()
            }
        };
        RowPosterior {
            miss: p(terms[0]),
            detections: terms[1..].iter().map(|&t| p(t)).collect(),
        }
    }

    /// How far the column and row sums stray from `P_t`.
    pub fn normalization_residuals(&self, table: &AssociationTable) -> NormalizationResiduals {
        let dev = |ls: f64| ((ls - self.log_p).exp() - 1.0).abs();
        let mut r = NormalizationResiduals::default();
        for z in 0..table.n_obs() {
            r.max_column = r.max_column.max(dev(self.column_log_sum(table, z)));
            let (b, c) = self.obs_row_log_sums(table, z);
            r.max_row = r.max_row.max(dev(b)).max(dev(c));
        }
        for x in 0..table.n_rows() {
            r.max_row = r.max_row.max(dev(self.row_log_sum(table, x)));
        }
        r
    }
}

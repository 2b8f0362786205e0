//! OSPA distance with an exact optimal assignment.

use serde::{Deserialize, Serialize};

use crate::error::{HispError, Result};

/// Minimum-cost assignment for a rectangular cost matrix given as rows.
/// Every row is assigned when there are no more rows than columns, every
/// column otherwise. Returns `assignment[row] = Some(col)` and the cost.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let m = cost[0].len();
    if m == 0 {
        return (vec![None; n], 0.0);
    }
    if n > m {
        let transposed: Vec<Vec<f64>> = (0..m)
            .map(|j| (0..n).map(|i| cost[i][j]).collect())
            .collect();
        let (cols, total) = optimal_assignment(&transposed);
        let mut rows = vec![None; n];
        for (j, i) in cols.into_iter().enumerate() {
            if let Some(i) = i {
                rows[i] = Some(j);
            }
        }
        return (rows, total);
    }
    // shortest augmenting paths with potentials; 1-based with a virtual
    // column 0
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![None; n];
    let mut total = 0.0;
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = Some(j - 1);
            total += cost[owner[j] - 1][j - 1];
        }
    }
    (assignment, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OspaParams {
    /// Cut-off distance `c` in metres.
    pub cutoff: f64,
    /// Order `p ≥ 1`.
    pub order: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            cutoff: 100.0,
            order: 1.0,
        }
    }
}

impl OspaParams {
    pub fn new(cutoff: f64, order: f64) -> Result<Self> {
        let p = Self { cutoff, order };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff > 0.0
            && self.cutoff.is_finite()
            && self.order >= 1.0
            && self.order.is_finite()
        {
            Ok(())
        } else {
            Err(HispError::Config(format!(
                "OSPA needs c > 0 and p >= 1 (got c = {}, p = {})",
                self.cutoff, self.order
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ospa {
    pub total: f64,
    pub localisation: f64,
    pub cardinality: f64,
}

/// OSPA between two sets of 2-D positions. The localisation and
/// cardinality parts are reported so that
/// `total^p = localisation^p + cardinality^p`.
pub fn ospa(x: &[[f64; 2]], y: &[[f64; 2]], params: &OspaParams) -> Ospa {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return Ospa::default();
    }
    let (c, p) = (params.cutoff, params.order);
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| {
            large
                .iter()
                .map(|b| ((a[0] - b[0]).hypot(a[1] - b[1])).min(c).powf(p))
                .collect()
        })
        .collect();
    let (_, loc_sum) = optimal_assignment(&cost);
    let card_sum = c.powf(p) * (n - small.len()) as f64;
    let nf = n as f64;
    Ospa {
        total: ((loc_sum + card_sum) / nf).powf(1.0 / p),
        localisation: (loc_sum / nf).powf(1.0 / p),
        cardinality: (card_sum / nf).powf(1.0 / p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_small_cases() {
        let (a, c) = optimal_assignment(&[vec![3.5]]);
        assert_eq!((a, c), (vec![Some(0)], 3.5));
        let m = vec![
            vec![0.0, 5.0, 5.0],
            vec![5.0, 0.0, 5.0],
            vec![5.0, 5.0, 0.0],
        ];
        let (a, c) = optimal_assignment(&m);
        assert_eq!(a, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(c, 0.0);
        assert_eq!(optimal_assignment(&[]).1, 0.0);
    }

    #[test]
    fn assignment_rectangular() {
        let m = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0]];
        let (a, c) = optimal_assignment(&m);
        assert_eq!(c, 3.0);
        assert_eq!(a, vec![Some(1), Some(0)]);
        let t = vec![vec![4.0, 3.0], vec![1.0, 0.0], vec![3.0, 5.0]];
        let (a, c) = optimal_assignment(&t);
        assert_eq!(c, 3.0);
        assert_eq!(a, vec![None, Some(1), Some(0)]);
    }

    #[test]
    fn ospa_examples() {
        let p = OspaParams::default();
        let pts = [
            [0.0, 0.0],
            [100.0, 50.0],
            [-30.0, 400.0],
            [7.0, 7.0],
            [300.0, -20.0],
        ];
        assert_eq!(ospa(&pts, &pts, &p).total, 0.0);
        let missing_one = ospa(&pts, &pts[..4], &p);
        assert!((missing_one.total - 100.0 / 5.0).abs() < 1e-12);
        assert_eq!(missing_one.localisation, 0.0);
        let far = ospa(&[[0.0, 0.0]], &[[1000.0, 0.0]], &p);
        assert_eq!(far.total, 100.0);
        assert_eq!(ospa(&[], &[], &p).total, 0.0);
        assert!(OspaParams::new(0.0, 1.0).is_err());
        assert!(OspaParams::new(10.0, 0.5).is_err());
    }
}

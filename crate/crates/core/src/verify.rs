//! Random association instances and the oracle suites behind `hisp verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::association::{
    compute_weights_approx1, compute_weights_exact, factorised_p_approx1, factorised_p_approx2,
    factorised_p_exact, AssociationTable, WeightTable,
};
use crate::error::Result;

fn observation_masses<R: Rng>(rng: &mut R) -> (f64, f64, f64, f64) {
    let beta = 10f64.powf(rng.random_range(-6.0..-1.0));
    let hit = beta * rng.random_range(0.05..2.0);
    let p_fa = 10f64.powf(rng.random_range(-4.0..-0.5));
    (hit, 1.0 - beta, p_fa, 1.0 - p_fa)
}

fn miss_mass<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.01..1.0)
}

fn detection_mass<R: Rng>(rng: &mut R) -> f64 {
    10f64.powf(rng.random_range(-4.0..0.0))
}

/// Table where every observation is gated by at most one propagated row;
/// a row may gate several observations.
pub fn random_disjoint_table<R: Rng>(
    rng: &mut R,
    max_rows: usize,
    max_obs: usize,
) -> AssociationTable {
    let n_rows = rng.random_range(0..=max_rows);
    let n_obs = rng.random_range(0..=max_obs);
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> =
        (0..n_rows).map(|_| (miss_mass(rng), Vec::new())).collect();
    for z in 0..n_obs {
        if n_rows > 0 && rng.random_bool(0.7) {
            let owner = rng.random_range(0..n_rows);
            let m = detection_mass(rng);
            rows[owner].1.push((z, m));
        }
    }
    let obs: Vec<_> = (0..n_obs).map(|_| observation_masses(rng)).collect();
    AssociationTable::from_masses(&rows, &obs).expect("generated masses are valid")
}

/// Table with independent random gating, so observations may be shared.
pub fn random_table<R: Rng>(
    rng: &mut R,
    max_rows: usize,
    max_obs: usize,
    gate_prob: f64,
) -> AssociationTable {
    let n_rows = rng.random_range(0..=max_rows);
    let n_obs = rng.random_range(0..=max_obs);
    let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..n_rows)
        .map(|_| {
            let mut dets = Vec::new();
            for z in 0..n_obs {
                if rng.random_bool(gate_prob) {
                    dets.push((z, detection_mass(rng)));
                }
            }
            (miss_mass(rng), dets)
        })
        .collect();
    let obs: Vec<_> = (0..n_obs).map(|_| observation_masses(rng)).collect();
    AssociationTable::from_masses(&rows, &obs).expect("generated masses are valid")
}

/// Disjoint table plus leak entries of mass about `eps` on every other
/// (row, observation) pair, so every cross product is at most `eps`.
pub fn leaky_table<R: Rng>(rng: &mut R, rows: usize, obs: usize, eps: f64) -> AssociationTable {
    let mut owner = vec![None; obs];
    for o in owner.iter_mut() {
        *o = Some(rng.random_range(0..rows));
    }
    let masses: Vec<(f64, Vec<(usize, f64)>)> = (0..rows)
        .map(|i| {
            let dets = (0..obs)
                .map(|z| {
                    let m = if owner[z] == Some(i) {
                        rng.random_range(0.05..1.0)
                    } else {
                        eps * rng.random_range(0.5..1.0)
                    };
                    (z, m)
                })
                .collect();
            (rng.random_range(0.1..1.0), dets)
        })
        .collect();
    let o: Vec<_> = (0..obs)
        .map(|_| {
            let beta = rng.random_range(1e-3..1e-2);
            let p_fa = rng.random_range(1e-3..1e-2);
            (
                beta * rng.random_range(0.5..2.0),
                1.0 - beta,
                p_fa,
                1.0 - p_fa,
            )
        })
        .collect();
    AssociationTable::from_masses(&masses, &o).expect("generated masses are valid")
}

/// Dense table: every row gates every observation.
pub fn dense_table<R: Rng>(rng: &mut R, rows: usize, obs: usize) -> AssociationTable {
    let masses: Vec<(f64, Vec<(usize, f64)>)> = (0..rows)
        .map(|_| {
            let dets = (0..obs).map(|z| (z, detection_mass(rng))).collect();
            (miss_mass(rng), dets)
        })
        .collect();
    let o: Vec<_> = (0..obs).map(|_| observation_masses(rng)).collect();
    AssociationTable::from_masses(&masses, &o).expect("generated masses are valid")
}

/// `|a/b − 1|` for two log values, zero when both are `−∞`.
pub fn log_rel_dev(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        0.0
    } else {
        (a - b).exp_m1().abs()
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// Largest relative deviation between two weight tables for the same
/// association table, over every stored weight and `P_t`.
pub fn max_weight_deviation(a: &WeightTable, b: &WeightTable) -> f64 {
    let mut d = log_rel_dev(a.log_p, b.log_p);
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        d = d.max(log_rel_dev(ra.miss, rb.miss));
        for (x, y) in ra.detections.iter().zip(&rb.detections) {
            d = d.max(log_rel_dev(*x, *y));
        }
    }
    for (oa, ob) in a.observations.iter().zip(&b.observations) {
        for (x, y) in [
            (oa.birth_hit, ob.birth_hit),
            (oa.birth_miss, ob.birth_miss),
            (oa.clutter_hit, ob.clutter_hit),
            (oa.clutter_miss, ob.clutter_miss),
        ] {
            d = d.max(log_rel_dev(x, y));
        }
    }
    d
}

/// Largest absolute deviation between the column and row posteriors.
pub fn max_posterior_deviation(table: &AssociationTable, a: &WeightTable, b: &WeightTable) -> f64 {
    let mut d: f64 = 0.0;
    for z in 0..table.n_obs() {
        let (pa, pb) = (a.column_posterior(table, z), b.column_posterior(table, z));
        d = d
            .max((pa.birth - pb.birth).abs())
            .max((pa.clutter - pb.clutter).abs());
        for (x, y) in pa.propagated.iter().zip(&pb.propagated) {
            d = d.max((x.2 - y.2).abs());
        }
    }
    for x in 0..table.n_rows() {
        let (pa, pb) = (a.row_posterior(table, x), b.row_posterior(table, x));
        d = d.max((pa.miss - pb.miss).abs());
        for (u, v) in pa.detections.iter().zip(&pb.detections) {
            d = d.max((u - v).abs());
        }
    }
    d
}

/// Worst violation of the identity that every column sum and every row sum
/// of `w(x,z) p^{x,z}` equals the same `P_t`.
pub fn consistency_deviation(table: &AssociationTable, w: &WeightTable) -> f64 {
    let r = w.normalization_residuals(table);
    r.max_column.max(r.max_row)
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn suite(name: &'static str, worst: f64, tol: f64) -> SuiteResult {
    SuiteResult {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tol {tol:.0e})"),
    }
}

/// Runs the oracle suites on random instances. A non-zero `perturb` is
/// added to every fast-path log weight before comparison, which must make
/// the equivalence suite fail.
pub fn run_suites(seed: u64, instances: usize, perturb: f64) -> Result<Vec<SuiteResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eq_w: f64 = 0.0;
    let mut eq_post: f64 = 0.0;
    let mut cons_exact: f64 = 0.0;
    let mut cons_approx: f64 = 0.0;
    let mut factorised: f64 = 0.0;
    let mut fact1: f64 = 0.0;
    for _ in 0..instances {
        let t = random_disjoint_table(&mut rng, 4, 4);
        let exact = compute_weights_exact(&t)?;
        let mut approx = compute_weights_approx1(&t)?;
        if perturb != 0.0 {
            for r in &mut approx.rows {
                r.miss += perturb;
                for d in &mut r.detections {
                    *d += perturb;
                }
            }
        }
        eq_w = eq_w.max(max_weight_deviation(&approx, &exact));
        eq_post = eq_post.max(max_posterior_deviation(&t, &approx, &exact));
        cons_exact = cons_exact.max(consistency_deviation(&t, &exact));
        cons_approx = cons_approx.max(consistency_deviation(&t, &approx));
        fact1 = fact1.max(rel_dev(factorised_p_approx1(&t)?, exact.log_p.exp()));

        let g = random_table(&mut rng, 4, 4, 0.5);
        let e = compute_weights_exact(&g)?;
        factorised = factorised.max(rel_dev(factorised_p_exact(&g)?, e.log_p.exp()));
    }
    // diagonal tables satisfy both approximations
    let mut fact2: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.random_range(0..=4);
        let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
            .map(|i| {
                (
                    rng.random_range(0.01..1.0),
                    vec![(i, rng.random_range(1e-3..1.0))],
                )
            })
            .collect();
        let obs: Vec<_> = (0..n).map(|_| observation_masses(&mut rng)).collect();
        let t = AssociationTable::from_masses(&rows, &obs)?;
        let e = compute_weights_exact(&t)?;
        fact2 = fact2.max(rel_dev(factorised_p_approx2(&t)?, e.log_p.exp()));
    }
    Ok(vec![
        suite("exact vs approx-1 weights", eq_w, 1e-10),
        suite("exact vs approx-1 posteriors", eq_post, 1e-10),
        suite("P_t consistency (exact)", cons_exact, 1e-10),
        suite("P_t consistency (approx-1)", cons_approx, 1e-10),
        suite("factorised P_t vs enumeration", factorised, 1e-12),
        suite("row-product P_t vs enumeration", fact1, 1e-12),
        suite("observation-product P_t on diagonal tables", fact2, 1e-12),
    ])
}

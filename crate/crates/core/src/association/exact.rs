//! Exact joint weights: brute enumeration for small tables, a forward-backward
//! sweep over the set of open observations for the rest.
//!
//! An association picks the detected propagated rows and their injective
//! assignment to observations, then splits the remaining observations into
//! births and false alarms. Its probability is the product of one table
//! entry per row of `X⁺`; `w(x, z)` is the sum, over associations pairing
//! `x` with `z`, of the product over every other row.

use crate::association::table::{
    compute_cz, AssociationTable, Detection, ObservationRows, PropagatedRow,
};
use crate::association::weights::{ObsWeights, RowWeights, WeightTable};
use crate::error::{HispError, Result};
use crate::numeric::{ln, log_sum_exp};

/// Largest number of propagated rows or observations accepted by
/// [`compute_weights_exact`].
pub const EXACT_LIMIT: usize = 10;

#[derive(Clone, Copy)]
enum Slot {
    RowMiss(usize),
    RowDet(usize, usize),
    BirthHit(usize),
    BirthMiss(usize),
    ClutterHit(usize),
    ClutterMiss(usize),
}

struct Accumulator {
    rows: Vec<(f64, Vec<f64>)>,
    obs: Vec<[f64; 4]>,
    total: f64,
}

impl Accumulator {
    fn add(&mut self, slot: Slot, v: f64) {
        match slot {
            Slot::RowMiss(i) => self.rows[i].0 += v,
            Slot::RowDet(i, k) => self.rows[i].1[k] += v,
            Slot::BirthHit(z) => self.obs[z][0] += v,
            Slot::BirthMiss(z) => self.obs[z][1] += v,
            Slot::ClutterHit(z) => self.obs[z][2] += v,
            Slot::ClutterMiss(z) => self.obs[z][3] += v,
        }
    }
}

struct Enumerator<'a> {
    table: &'a AssociationTable,
    assign: Vec<Option<usize>>,
    used: Vec<bool>,
    acc: Accumulator,
    factors: Vec<(Slot, f64)>,
    prefix: Vec<f64>,
}

impl Enumerator<'_> {
    fn recurse(&mut self, x: usize) {
        if x == self.table.n_rows() {
            self.leaf();
            return;
        }
        self.assign[x] = None;
        self.recurse(x + 1);
        for k in 0..self.table.rows[x].detections.len() {
            let z = self.table.rows[x].detections[k].obs;
            if !self.used[z] {
                self.used[z] = true;
                self.assign[x] = Some(k);
                self.recurse(x + 1);
                self.used[z] = false;
            }
        }
        self.assign[x] = None;
    }

    fn leaf(&mut self) {
        let table = self.table;
        let free: Vec<usize> = (0..table.n_obs()).filter(|&z| !self.used[z]).collect();
        for mask in 0u32..(1u32 << free.len()) {
            self.factors.clear();
            for (i, row) in table.rows.iter().enumerate() {
                self.factors.push(match self.assign[i] {
                    None => (Slot::RowMiss(i), row.miss),
                    Some(k) => (Slot::RowDet(i, k), row.detections[k].mass),
                });
            }
            for (z, o) in table.observations.iter().enumerate() {
                let birth = free
                    .iter()
                    .position(|&f| f == z)
                    .map(|p| mask & (1 << p) != 0);
                match birth {
                    // detected by a propagated row
                    None => {
                        self.factors.push((Slot::BirthMiss(z), o.birth_miss));
                        self.factors.push((Slot::ClutterMiss(z), o.clutter_miss));
                    }
                    Some(true) => {
                        self.factors.push((Slot::BirthHit(z), o.birth_hit));
                        self.factors.push((Slot::ClutterMiss(z), o.clutter_miss));
                    }
                    Some(false) => {
                        self.factors.push((Slot::BirthMiss(z), o.birth_miss));
                        self.factors.push((Slot::ClutterHit(z), o.clutter_hit));
                    }
                }
            }
            let n = self.factors.len();
            self.prefix.clear();
            self.prefix.push(1.0);
            for (_, v) in &self.factors {
                let last = *self.prefix.last().unwrap();
                self.prefix.push(last * v);
            }
            self.acc.total += self.prefix[n];
            let mut suffix = 1.0;
            for idx in (0..n).rev() {
                let (slot, v) = self.factors[idx];
                self.acc.add(slot, self.prefix[idx] * suffix);
                suffix *= v;
            }
        }
    }
}

/// Exact weights and `P_t` by exhaustive enumeration. Refuses tables with
/// more than [`EXACT_LIMIT`] propagated rows or observations.
pub fn compute_weights_exact(table: &AssociationTable) -> Result<WeightTable> {
    if table.n_rows() > EXACT_LIMIT || table.n_obs() > EXACT_LIMIT {
        return Err(HispError::InstanceTooLarge(format!(
            "{} rows × {} observations (limit {EXACT_LIMIT} each)",
            table.n_rows(),
            table.n_obs()
        )));
    }
    let acc = Accumulator {
        rows: table
            .rows
            .iter()
            .map(|r| (0.0, vec![0.0; r.detections.len()]))
            .collect(),
        obs: vec![[0.0; 4]; table.n_obs()],
        total: 0.0,
    };
    let mut e = Enumerator {
        table,
        assign: vec![None; table.n_rows()],
        used: vec![false; table.n_obs()],
        acc,
        factors: Vec::new(),
        prefix: Vec::new(),
    };
    e.recurse(0);
    let acc = e.acc;
    let log_cz = table
        .observations
        .iter()
        .map(|o| ln(o.birth_hit / o.birth_miss + o.clutter_hit / o.clutter_miss))
        .collect();
    Ok(WeightTable {
        log_cz,
        rows: acc
            .rows
            .into_iter()
            .map(|(m, d)| RowWeights {
                miss: ln(m),
                detections: d.into_iter().map(ln).collect(),
            })
            .collect(),
        observations: acc
            .obs
            .into_iter()
            .map(|o| ObsWeights {
                birth_hit: ln(o[0]),
                birth_miss: ln(o[1]),
                clutter_hit: ln(o[2]),
                clutter_miss: ln(o[3]),
            })
            .collect(),
        log_p: ln(acc.total),
    })
}

/// `P_t` through the birth/false-alarm factorisation: the enumeration runs
/// over detected subsets and assignments only, each undetected observation
/// contributing `C^z`.
pub fn factorised_p_exact(table: &AssociationTable) -> Result<f64> {
    if table.n_rows() > EXACT_LIMIT || table.n_obs() > EXACT_LIMIT {
        return Err(HispError::InstanceTooLarge("factorised enumeration".into()));
    }
    let mut c_phi = 1.0;
    for r in &table.rows {
        if r.miss <= 0.0 {
            return Err(HispError::DegenerateTable("p^(x,phi) = 0".into()));
        }
        c_phi *= r.miss;
    }
    let mut cz = Vec::with_capacity(table.n_obs());
    for (z, o) in table.observations.iter().enumerate() {
        c_phi *= o.birth_miss * o.clutter_miss;
        let c = compute_cz(table, z)?;
        if c <= 0.0 {
            return Err(HispError::DegenerateTable(format!(
                "C^z = 0 for observation {z}"
            )));
        }
        cz.push(c);
    }
    let all_c: f64 = cz.iter().product();

    fn walk(t: &AssociationTable, cz: &[f64], x: usize, used: &mut Vec<bool>, acc: f64) -> f64 {
        if x == t.n_rows() {
            return acc;
        }
        let mut s = walk(t, cz, x + 1, used, acc);
        for d in &t.rows[x].detections {
            if !used[d.obs] {
                used[d.obs] = true;
                s += walk(
                    t,
                    cz,
                    x + 1,
                    used,
                    acc * d.mass / (t.rows[x].miss * cz[d.obs]),
                );
                used[d.obs] = false;
            }
        }
        s
    }
    let sum = walk(table, &cz, 0, &mut vec![false; table.n_obs()], 1.0);
    Ok(c_phi * all_c * sum)
}

/// Connected components of the gating graph between propagated rows and
/// observations: `(rows, observations)` per component.
pub fn gating_clusters(table: &AssociationTable) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n_rows = table.n_rows();
    let n = n_rows + table.n_obs();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for (i, r) in table.rows.iter().enumerate() {
        for d in &r.detections {
            let (a, b) = (find(&mut parent, i), find(&mut parent, n_rows + d.obs));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut clusters: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push((Vec::new(), Vec::new()));
        }
        let c = &mut clusters[slot[r]];
        if v < n_rows {
            c.0.push(v);
        } else {
            c.1.push(v - n_rows);
        }
    }
    clusters
}

/// Largest number of simultaneously open observations accepted by
/// [`compute_weights_sequential`].
pub const FRONTIER_LIMIT: usize = 24;

/// Cap on floating point work for one call of
/// [`compute_weights_sequential`], checked before any summing starts.
pub const WORK_BUDGET: f64 = 2e10;

/// Cap on the number of stored state values.
pub const MEMORY_BUDGET: f64 = 8e7;

/// One step of the row-by-row sum. States are dense vectors indexed by
/// the used/unused pattern of the open observations, which sit in the low
/// bits.
enum Op {
    /// A new observation takes the next free bit.
    Open,
    Row {
        row: usize,
        miss: f64,
        /// `(bit, mass)` for every detection, in the row's own order.
        dets: Vec<(usize, f64)>,
    },
    /// No later row gates `obs`: its bit is folded with the taken/free
    /// factors and the highest bit moves into its place.
    Close {
        obs: usize,
        slot: usize,
        top: usize,
        taken: f64,
        free: f64,
    },
}

fn close_target(old: usize, slot: usize, top: usize) -> usize {
    let (sb, tb) = (1usize << slot, 1usize << top);
    if slot == top {
        old & !sb
    } else if old & tb != 0 {
        (old & !sb & !tb) | sb
    } else {
        old & !sb
    }
}

impl Op {
    fn forward(&self, f: &mut Vec<f64>) {
        match self {
            Op::Open => f.resize(f.len() * 2, 0.0),
            Op::Row { miss, dets, .. } => {
                // descending masks read only smaller, not yet updated ones
                for mask in (0..f.len()).rev() {
                    let mut v = f[mask] * miss;
                    for &(bit, mass) in dets {
                        if mask & bit != 0 {
                            v += f[mask ^ bit] * mass;
                        }
                    }
                    f[mask] = v;
                }
            }
            Op::Close {
                slot,
                top,
                taken,
                free,
                ..
            } => {
                let sb = 1usize << slot;
                let mut next = vec![0.0; f.len() / 2];
                for (old, &v) in f.iter().enumerate() {
                    let factor = if old & sb != 0 { *taken } else { *free };
                    next[close_target(old, *slot, *top)] += v * factor;
                }
                *f = next;
            }
        }
    }

    fn backward(&self, b: &mut Vec<f64>) {
        match self {
            Op::Open => b.truncate(b.len() / 2),
            Op::Row { miss, dets, .. } => {
                for mask in 0..b.len() {
                    let mut v = b[mask] * miss;
                    for &(bit, mass) in dets {
                        if mask & bit == 0 {
                            v += b[mask | bit] * mass;
                        }
                    }
                    b[mask] = v;
                }
            }
            Op::Close {
                slot,
                top,
                taken,
                free,
                ..
            } => {
                let sb = 1usize << slot;
                *b = (0..b.len() * 2)
                    .map(|old| {
                        let factor = if old & sb != 0 { *taken } else { *free };
                        factor * b[close_target(old, *slot, *top)]
                    })
                    .collect();
            }
        }
    }

    fn work(&self, states: f64) -> f64 {
        match self {
            Op::Row { dets, .. } => states * (dets.len() + 1) as f64,
            _ => states,
        }
    }
}

/// Scales `v` to a unit maximum, returning the log of the factor removed.
fn renormalise(v: &mut [f64]) -> f64 {
    let peak = v.iter().fold(0.0f64, |a, &b| a.max(b));
    if peak > 0.0 {
        for x in v.iter_mut() {
            *x /= peak;
        }
        peak.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// The row-by-row sum over associations as a fixed sequence of steps.
/// Rows are visited in a greedy order that keeps the open set small.
struct Frontier {
    ops: Vec<Op>,
    /// Open observations before each step, and after the last one.
    open: Vec<usize>,
    /// `ln` of the free term of every observation no row gates.
    log_ungated: f64,
    ungated: Vec<bool>,
}

impl Frontier {
    fn new(table: &AssociationTable) -> Self {
        let n = table.n_rows();
        let m = table.n_obs();
        let mut placed = vec![false; n];
        let mut touched = vec![false; m];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let mut best = None;
            for i in (0..n).filter(|&i| !placed[i]) {
                let dets = &table.rows[i].detections;
                let shared = dets.iter().filter(|d| touched[d.obs]).count();
                let fresh = dets.len() - shared;
                let key = (shared > 0, std::cmp::Reverse(fresh), shared);
                if best.as_ref().is_none_or(|(k, _)| key > *k) {
                    best = Some((key, i));
                }
            }
            let (_, i) = best.expect("an unplaced row remains");
            placed[i] = true;
            for d in &table.rows[i].detections {
                touched[d.obs] = true;
            }
            order.push(i);
        }
        let mut last = vec![None; m];
        for (pos, &i) in order.iter().enumerate() {
            for d in &table.rows[i].detections {
                last[d.obs] = Some(pos);
            }
        }
        let terms: Vec<(f64, f64)> = table
            .observations
            .iter()
            .map(|o| {
                (
                    o.birth_miss * o.clutter_miss,
                    o.birth_hit * o.clutter_miss + o.clutter_hit * o.birth_miss,
                )
            })
            .collect();

        let mut ops = Vec::new();
        let mut open = Vec::new();
        let mut slot_of: Vec<Option<usize>> = vec![None; m];
        let mut obs_at: Vec<usize> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let row = &table.rows[i];
            for d in &row.detections {
                if slot_of[d.obs].is_none() {
                    open.push(obs_at.len());
                    ops.push(Op::Open);
                    slot_of[d.obs] = Some(obs_at.len());
                    obs_at.push(d.obs);
                }
            }
            open.push(obs_at.len());
            ops.push(Op::Row {
                row: i,
                miss: row.miss,
                dets: row
                    .detections
                    .iter()
                    .map(|d| (1usize << slot_of[d.obs].unwrap(), d.mass))
                    .collect(),
            });
            for d in &row.detections {
                if last[d.obs] != Some(pos) {
                    continue;
                }
                let Some(slot) = slot_of[d.obs].take() else {
                    continue;
                };
                let top = obs_at.len() - 1;
                open.push(obs_at.len());
                ops.push(Op::Close {
                    obs: d.obs,
                    slot,
                    top,
                    taken: terms[d.obs].0,
                    free: terms[d.obs].1,
                });
                let moved = obs_at[top];
                if slot != top {
                    obs_at[slot] = moved;
                    slot_of[moved] = Some(slot);
                }
                obs_at.pop();
            }
        }
        open.push(obs_at.len());
        let ungated: Vec<bool> = last.iter().map(|l| l.is_none()).collect();
        let log_ungated = (0..m).filter(|&z| ungated[z]).map(|z| ln(terms[z].1)).sum();
        Self {
            ops,
            open,
            log_ungated,
            ungated,
        }
    }

    fn size(&self, j: usize) -> f64 {
        (self.open[j].min(60) as f64).exp2()
    }

    /// Above this many stored values a stretch of steps is split in two.
    fn leaf_cap(&self) -> f64 {
        4.0 * self.size_peak()
    }

    fn size_peak(&self) -> f64 {
        (self.open.iter().copied().max().unwrap_or(0).min(60) as f64).exp2()
    }

    /// First split point past half of the stored values of `a..b`, or
    /// `None` when the stretch is processed whole.
    fn split(&self, a: usize, b: usize) -> Option<usize> {
        let total: f64 = (a..b).map(|j| self.size(j)).sum();
        if b - a < 2 || total <= self.leaf_cap() {
            return None;
        }
        let mut acc = 0.0;
        for j in a..b {
            acc += self.size(j);
            if acc >= total / 2.0 {
                return Some((j + 1).min(b - 1));
            }
        }
        Some(b - 1)
    }

    /// `(work, extra stored values)` of the backward sweep over `a..b`,
    /// not counting the state held at `a`.
    fn plan(&self, a: usize, b: usize) -> (f64, f64) {
        let fwd =
            |r: std::ops::Range<usize>| -> f64 { r.map(|j| self.ops[j].work(self.size(j))).sum() };
        match self.split(a, b) {
            None => (3.0 * fwd(a..b), (a..b).map(|j| self.size(j)).sum::<f64>()),
            Some(mid) => {
                let (w_hi, m_hi) = self.plan(mid, b);
                let (w_lo, m_lo) = self.plan(a, mid);
                (fwd(a..mid) + w_hi + w_lo, (self.size(mid) + m_hi).max(m_lo))
            }
        }
    }

    /// Largest open set, work of the whole computation and peak number of
    /// stored state values.
    fn cost(&self) -> (usize, f64, f64) {
        let peak = self.open.iter().copied().max().unwrap_or(0);
        let (work, memory) = self.plan(0, self.ops.len());
        (peak, work, memory + 3.0 * self.size_peak())
    }

    /// Backward sweep over the steps `a..b`, given the forward state at
    /// `a`. Long stretches are split: the upper half is swept first from a
    /// recomputed middle state, so only one state per level is held.
    fn sweep(&self, a: usize, b: usize, f: Vec<f64>, lf: f64, acc: &mut Sweep) {
        if let Some(mid) = self.split(a, b) {
            let (mut g, mut lg) = (f.clone(), lf);
            for op in &self.ops[a..mid] {
                op.forward(&mut g);
                lg += renormalise(&mut g);
            }
            self.sweep(mid, b, g, lg, acc);
            self.sweep(a, mid, f, lf, acc);
            return;
        }
        let mut inputs = Vec::with_capacity(b - a);
        let (mut f, mut lf) = (f, lf);
        for op in &self.ops[a..b] {
            let mut next = f.clone();
            op.forward(&mut next);
            let step = renormalise(&mut next);
            inputs.push((f, lf));
            f = next;
            lf += step;
        }
        if b == self.ops.len() {
            acc.log_core = ln(f[0]) + lf;
        }
        drop(f);
        for (op, (f, lf)) in self.ops[a..b].iter().zip(inputs).rev() {
            let scale = lf + acc.lb;
            let back = &acc.b;
            match op {
                Op::Open => {}
                Op::Row { row, dets, .. } => {
                    let miss: f64 = f.iter().zip(back).map(|(x, y)| x * y).sum();
                    acc.rows[*row].miss = ln(miss) + scale;
                    for (slot, &(bit, _)) in dets.iter().enumerate() {
                        let s: f64 = (0..f.len())
                            .filter(|m| m & bit == 0)
                            .map(|m| f[m] * back[m | bit])
                            .sum();
                        acc.rows[*row].detections[slot] = ln(s) + scale;
                    }
                }
                Op::Close {
                    obs: z, slot, top, ..
                } => {
                    let sb = 1usize << slot;
                    let (mut unused, mut used) = (0.0, 0.0);
                    for (old, &v) in f.iter().enumerate() {
                        let w = v * back[close_target(old, *slot, *top)];
                        if old & sb != 0 {
                            used += w;
                        } else {
                            unused += w;
                        }
                    }
                    acc.obs[*z] = (ln(unused) + scale, ln(used) + scale);
                }
            }
            op.backward(&mut acc.b);
            acc.lb += renormalise(&mut acc.b);
        }
    }

    /// `ln P`, per-row weights and per-observation `(unused, used)` sums,
    /// the latter without the observation's own term.
    fn weights(&self, table: &AssociationTable) -> (f64, Vec<RowWeights>, Vec<(f64, f64)>) {
        let mut acc = Sweep {
            b: vec![1.0],
            lb: self.log_ungated,
            log_core: 0.0,
            rows: table
                .rows
                .iter()
                .map(|r| RowWeights {
                    miss: f64::NEG_INFINITY,
                    detections: vec![f64::NEG_INFINITY; r.detections.len()],
                })
                .collect(),
            obs: vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); table.n_obs()],
        };
        if !self.ops.is_empty() {
            self.sweep(0, self.ops.len(), vec![1.0], 0.0, &mut acc);
        }
        let log_p = acc.log_core + self.log_ungated;
        for (z, o) in table.observations.iter().enumerate() {
            if self.ungated[z] {
                let free = o.birth_hit * o.clutter_miss + o.clutter_hit * o.birth_miss;
                acc.obs[z] = (log_p - ln(free), f64::NEG_INFINITY);
            }
        }
        (log_p, acc.rows, acc.obs)
    }
}

/// State of a backward sweep and the sums collected so far.
struct Sweep {
    b: Vec<f64>,
    lb: f64,
    log_core: f64,
    rows: Vec<RowWeights>,
    obs: Vec<(f64, f64)>,
}

/// Largest number of simultaneously open observations, floating point work
/// and stored state values that [`compute_weights_sequential`] would need.
pub fn sequential_cost(table: &AssociationTable) -> (usize, f64, f64) {
    Frontier::new(table).cost()
}

/// Exact weights by summing over associations row by row, carrying only
/// the status of observations still open to later rows, once forward and
/// once backward. Equal to [`compute_weights_exact`] but polynomial in the
/// table size when the gating graph is sparse; refuses tables beyond
/// [`FRONTIER_LIMIT`], [`WORK_BUDGET`] or [`MEMORY_BUDGET`].
pub fn compute_weights_sequential(table: &AssociationTable) -> Result<WeightTable> {
    let m = table.n_obs();
    let log_cz = (0..m)
        .map(|z| compute_cz(table, z).map(ln))
        .collect::<Result<Vec<_>>>()?;
    let frontier = Frontier::new(table);
    let (peak, work, memory) = frontier.cost();
    if peak > FRONTIER_LIMIT || work > WORK_BUDGET || memory > MEMORY_BUDGET {
        return Err(HispError::InstanceTooLarge(format!(
            "{} rows and {m} observations leave {peak} open at once ({work:.1e} operations, {memory:.1e} stored values)",
            table.n_rows()
        )));
    }
    let (log_p, rows, used) = frontier.weights(table);
    let mix = |a: f64, fa: f64, b: f64, fb: f64| log_sum_exp(&[a + ln(fa), b + ln(fb)]);
    let observations = table
        .observations
        .iter()
        .zip(used)
        .map(|(o, (unused, used))| ObsWeights {
            birth_hit: unused + ln(o.clutter_miss),
            birth_miss: mix(used, o.clutter_miss, unused, o.clutter_hit),
            clutter_hit: unused + ln(o.birth_miss),
            clutter_miss: mix(used, o.birth_miss, unused, o.birth_hit),
        })
        .collect();
    Ok(WeightTable {
        log_cz,
        rows,
        observations,
        log_p,
    })
}

/// Exact weights for tables of any size. Independent gating clusters
/// multiply, so each is solved on its own by [`compute_weights_sequential`]
/// and scaled by the others' joint probabilities.
pub fn compute_weights_exact_clustered(table: &AssociationTable) -> Result<WeightTable> {
    let clusters = gating_clusters(table);
    let mut parts = Vec::with_capacity(clusters.len());
    for (rows, obs) in &clusters {
        let mut remap = vec![usize::MAX; table.n_obs()];
        for (new, &old) in obs.iter().enumerate() {
            remap[old] = new;
        }
        let sub_rows = rows
            .iter()
            .map(|&i| PropagatedRow {
                miss: table.rows[i].miss,
                detections: table.rows[i]
                    .detections
                    .iter()
                    .map(|d| Detection {
                        obs: remap[d.obs],
                        mass: d.mass,
                        posterior: crate::gaussian::GaussianMixture::empty(),
                    })
                    .collect(),
            })
            .collect();
        let sub_obs: Vec<ObservationRows> = obs
            .iter()
            .map(|&z| {
                let o = &table.observations[z];
                ObservationRows::new(o.birth_hit, o.birth_miss, o.clutter_hit, o.clutter_miss)
            })
            .collect();
        let sub = AssociationTable::new(sub_rows, sub_obs)?;
        parts.push(compute_weights_sequential(&sub)?);
    }
    let log_p: f64 = parts.iter().map(|w| w.log_p).sum();
    let mut rows = vec![
        RowWeights {
            miss: f64::NEG_INFINITY,
            detections: Vec::new()
        };
        table.n_rows()
    ];
    let mut observations = vec![
        ObsWeights {
            birth_hit: f64::NEG_INFINITY,
            birth_miss: f64::NEG_INFINITY,
            clutter_hit: f64::NEG_INFINITY,
            clutter_miss: f64::NEG_INFINITY,
        };
        table.n_obs()
    ];
    let mut log_cz = vec![0.0; table.n_obs()];
    for ((row_ids, obs_ids), w) in clusters.iter().zip(&parts) {
        // P of every other cluster; a zero-probability cluster zeroes the rest
        let others = if w.log_p == f64::NEG_INFINITY {
            parts
                .iter()
                .filter(|p| !std::ptr::eq(*p, w))
                .map(|p| p.log_p)
                .sum()
        } else {
            log_p - w.log_p
        };
        for (local, &i) in row_ids.iter().enumerate() {
            rows[i] = RowWeights {
                miss: w.rows[local].miss + others,
                detections: w.rows[local]
                    .detections
                    .iter()
                    .map(|v| v + others)
                    .collect(),
            };
        }
        for (local, &z) in obs_ids.iter().enumerate() {
            let o = w.observations[local];
            observations[z] = ObsWeights {
                birth_hit: o.birth_hit + others,
                birth_miss: o.birth_miss + others,
                clutter_hit: o.clutter_hit + others,
                clutter_miss: o.clutter_miss + others,
            };
            log_cz[z] = w.log_cz[local];
        }
    }
    Ok(WeightTable {
        log_cz,
        rows,
        observations,
        log_p,
    })
}

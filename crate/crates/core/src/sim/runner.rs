use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::filter::HispFilter;
use crate::metrics::{ospa, Ospa};
use crate::phd::PhdFilter;
use crate::sim::truth::{generate_truth, simulate_scan, Truth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Hisp,
    Phd,
}

impl FilterKind {
    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Hisp => "hisp",
            FilterKind::Phd => "phd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterSelection {
    Hisp,
    Phd,
    Both,
}

impl FilterSelection {
    pub fn kinds(self) -> Vec<FilterKind> {
        match self {
            FilterSelection::Hisp => vec![FilterKind::Hisp],
            FilterSelection::Phd => vec![FilterKind::Phd],
            FilterSelection::Both => vec![FilterKind::Hisp, FilterKind::Phd],
        }
    }
}

/// Output of one Monte Carlo run. Per-filter vectors are indexed by scan.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: usize,
    pub truth: Truth,
    pub hisp: Option<Vec<Ospa>>,
    pub phd: Option<Vec<Ospa>>,
    /// Positions reported by the HISP filter after every scan.
    pub hisp_estimates: Vec<Vec<[f64; 2]>>,
    pub phd_estimates: Vec<Vec<[f64; 2]>>,
    pub hisp_hypotheses: Vec<usize>,
}

impl RunResult {
    pub fn series(&self, kind: FilterKind) -> Option<&Vec<Ospa>> {
        match kind {
            FilterKind::Hisp => self.hisp.as_ref(),
            FilterKind::Phd => self.phd.as_ref(),
        }
    }
}

/// The random stream of run `run`: one ChaCha stream per run under a
/// common seed, so runs are independent of scheduling.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Simulates one run and feeds the same scans to the selected filters.
pub fn run_single(
    cfg: &ExperimentConfig,
    run: usize,
    selection: FilterSelection,
) -> Result<RunResult> {
    let models = cfg.scenario.models()?;
    let mut rng = run_rng(cfg.seed, run);
    let truth = generate_truth(&cfg.scenario, &mut rng)?;
    let kinds = selection.kinds();
    let mut hisp = if kinds.contains(&FilterKind::Hisp) {
        Some(HispFilter::new(models.clone(), cfg.filter.clone())?)
    } else {
        None
    };
    let mut phd = if kinds.contains(&FilterKind::Phd) {
        Some(PhdFilter::new(models.clone(), cfg.phd.clone())?)
    } else {
        None
    };
    let mut out = RunResult {
        run,
        truth: truth.clone(),
        hisp: hisp.as_ref().map(|_| Vec::new()),
        phd: phd.as_ref().map(|_| Vec::new()),
        hisp_estimates: Vec::new(),
        phd_estimates: Vec::new(),
        hisp_hypotheses: Vec::new(),
    };
    for (k, &t) in truth.times.iter().enumerate() {
        let scan = simulate_scan(k as u32 + 1, t, &truth.states[k], &models, &mut rng)?;
        let truth_pos = truth.positions(k);
        if let Some(f) = hisp.as_mut() {
            f.step(&scan)?;
            let est: Vec<[f64; 2]> = f
                .extract_estimates()
                .iter()
                .map(|e| [e.state[0], e.state[1]])
                .collect();
            out.hisp
                .as_mut()
                .unwrap()
                .push(ospa(&truth_pos, &est, &cfg.ospa));
            out.hisp_estimates.push(est);
            out.hisp_hypotheses.push(f.hypotheses.len());
        }
        if let Some(f) = phd.as_mut() {
            f.step(&scan)?;
            let est: Vec<[f64; 2]> = f.extract_estimates().iter().map(|s| [s[0], s[1]]).collect();
            out.phd
                .as_mut()
                .unwrap()
                .push(ospa(&truth_pos, &est, &cfg.ospa));
            out.phd_estimates.push(est);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub times: Vec<f64>,
    pub runs: Vec<RunResult>,
}

/// All runs in parallel; results come back ordered by run index.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    selection: FilterSelection,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let runs = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_single(cfg, r, selection))
        .collect::<Result<Vec<_>>>()?;
    let times = runs
        .first()
        .map(|r| r.truth.times.clone())
        .unwrap_or_default();
    Ok(ExperimentResult { times, runs })
}

/// Per-scan mean across runs.
pub fn mean_series(result: &ExperimentResult, kind: FilterKind) -> Option<Vec<Ospa>> {
    let series: Vec<&Vec<Ospa>> = result.runs.iter().filter_map(|r| r.series(kind)).collect();
    if series.is_empty() {
        return None;
    }
    let n = series.len() as f64;
    Some(
        (0..result.times.len())
            .map(|k| {
                let mut m = Ospa::default();
                for s in &series {
                    m.total += s[k].total / n;
                    m.localisation += s[k].localisation / n;
                    m.cardinality += s[k].cardinality / n;
                }
                m
            })
            .collect(),
    )
}

/// Mean over scans after the first `burn_in`.
pub fn time_average(series: &[Ospa], burn_in: usize) -> Ospa {
    let tail = &series[burn_in.min(series.len())..];
    let n = tail.len().max(1) as f64;
    tail.iter().fold(Ospa::default(), |mut acc, o| {
        acc.total += o.total / n;
        acc.localisation += o.localisation / n;
        acc.cardinality += o.cardinality / n;
        acc
    })
}

/// Time-averaged mean OSPA per filter.
pub fn summarize(result: &ExperimentResult, burn_in: usize) -> Vec<(FilterKind, Ospa)> {
    [FilterKind::Hisp, FilterKind::Phd]
        .into_iter()
        .filter_map(|k| mean_series(result, k).map(|s| (k, time_average(&s, burn_in))))
        .collect()
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use hisp_core::config::ExperimentConfig;
use hisp_core::filter::HispFilter;
use hisp_core::sim::{
    generate_truth, run_experiment, run_rng, simulate_scan, write_mean_csv, write_series_csv,
    write_summary_csv, FilterSelection,
};
use hisp_core::verify::run_suites;

#[derive(Parser)]
#[command(name = "hisp", version, about = "HISP multi-object filter benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo runs of a benchmark case; writes OSPA CSVs and a summary.
    Run(RunArgs),
    /// Association oracle suites; non-zero exit on any failure.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Added to every fast-path log weight before comparing.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        perturb: f64,
    },
    /// Prints the association table the filter builds at a given scan.
    DumpTable {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Which Monte Carlo run to simulate.
        #[arg(long, default_value_t = 0)]
        run: usize,
        /// 1-based scan index.
        #[arg(long, default_value_t = 1)]
        step: u32,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ConfigSource {
    /// Benchmark case 1, 2 or 3.
    #[arg(long, conflicts_with = "scenario")]
    case: Option<u32>,
    /// TOML experiment file.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ConfigSource {
    fn load(&self) -> Result<ExperimentConfig> {
        Ok(match (&self.scenario, self.case) {
            (Some(path), _) => ExperimentConfig::from_file(path)
                .with_context(|| format!("loading {}", path.display()))?,
            (None, Some(c)) => ExperimentConfig::for_case(c)?,
            (None, None) => ExperimentConfig::for_case(1)?,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Hisp,
    Phd,
    Both,
}

impl From<FilterArg> for FilterSelection {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Hisp => FilterSelection::Hisp,
            FilterArg::Phd => FilterSelection::Phd,
            FilterArg::Both => FilterSelection::Both,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    source: ConfigSource,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FilterArg::Both)]
    filter: FilterArg,
    #[arg(long, env = "HISP_OUT_DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    ospa_c: Option<f64>,
    #[arg(long)]
    ospa_p: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Squared Mahalanobis merging threshold.
    #[arg(long)]
    dm: Option<f64>,
    #[arg(long)]
    tau_c: Option<f64>,
    #[arg(long)]
    tau_uc: Option<f64>,
    #[arg(long)]
    gate: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.source.load()?;
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.ospa_c {
            cfg.ospa.cutoff = v;
        }
        if let Some(v) = self.ospa_p {
            cfg.ospa.order = v;
        }
        if let Some(v) = self.tau {
            cfg.filter.tau = v;
            cfg.phd.tau = v;
        }
        if let Some(v) = self.dm {
            cfg.filter.merge_threshold = v;
            cfg.phd.merge_threshold = v;
        }
        if let Some(v) = self.tau_c {
            cfg.filter.tau_c = v;
        }
        if let Some(v) = self.tau_uc {
            cfg.filter.tau_uc = v;
        }
        if let Some(v) = self.gate {
            cfg.filter.gate = v;
            cfg.phd.gate = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    info!("case {}: {} runs, seed {}", cfg.case, cfg.runs, cfg.seed);
    let result = run_experiment(&cfg, args.filter.into())?;
    let file = |suffix: &str| args.out.join(format!("case{}_{suffix}.csv", cfg.case));
    write_series_csv(&file("ospa"), &cfg.case, &result)?;
    write_mean_csv(&file("mean"), &cfg.case, &result)?;
    let rows = write_summary_csv(&file("summary"), &cfg.case, &result, cfg.burn_in_steps)?;
    for r in rows {
        println!(
            "case {} {:>4}: mean OSPA {:.2} (loc {:.2}, card {:.2}) over {} runs",
            r.case, r.filter, r.mean.total, r.mean.localisation, r.mean.cardinality, r.runs
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_verify(seed: u64, instances: usize, perturb: f64) -> Result<bool> {
    let results = run_suites(seed, instances, perturb)?;
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut ok = true;
    for r in &results {
        println!(
            "{:<width$}  {}  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
        ok &= r.passed;
    }
    Ok(ok)
}

fn cmd_dump(
    source: &ConfigSource,
    seed: u64,
    run: usize,
    step: u32,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = source.load()?;
    cfg.seed = seed;
    let models = cfg.scenario.models()?;
    if step == 0 || step > cfg.scenario.n_steps() {
        bail!("step must be in 1..={}", cfg.scenario.n_steps());
    }
    let mut rng = run_rng(cfg.seed, run);
    let truth = generate_truth(&cfg.scenario, &mut rng)?;
    let mut filter = HispFilter::new(models.clone(), cfg.filter.clone())?;
    for k in 0..step as usize {
        let scan = simulate_scan(
            k as u32 + 1,
            truth.times[k],
            &truth.states[k],
            &models,
            &mut rng,
        )?;
        if k + 1 < step as usize {
            filter.step(&scan)?;
            continue;
        }
        filter.time_update();
        let table = filter.build_table(&scan)?;
        let rows: Vec<String> = filter.hypotheses.iter().map(|h| h.id.to_string()).collect();
        let obs: Vec<String> = scan
            .observations
            .iter()
            .map(|o| format!("{}:{}", o.id.step, o.id.index))
            .collect();
        let mut buf = Vec::new();
        table.write_dump(&mut buf, &rows, &obs)?;
        match out {
            Some(p) => fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
            None => std::io::stdout().write_all(&buf)?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|_| true),
        Command::Verify {
            seed,
            instances,
            perturb,
        } => cmd_verify(*seed, *instances, *perturb),
        Command::DumpTable {
            source,
            seed,
            run,
            step,
            out,
        } => cmd_dump(source, *seed, *run, *step, out.as_deref()).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! `run` and `sweep`: every (seed, sweep value, strategy) combination is
//! simulated in parallel. All values are validated before the first run
//! starts. Combinations with the same seed and catalog size share one
//! scenario, so strategies are compared on identical inputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use volfied_core::broker::Strategy;
use volfied_core::io::{load_ads, load_poas, load_profiles, load_trace};
use volfied_core::sim::{gen_ads, gen_poas, gen_profiles, gen_synthetic, write_metrics, Scenario, SimConfig, StepMetrics};
use volfied_core::AdCatalog;

use crate::args::RunArgs;
use crate::config;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_atomic};
use crate::sweep::{self, Point};

pub const SUMMARY_HEADER: &str = "strategy,seed,param_value,final_revenue,final_impressions,final_avg_distance";

struct Job {
    config: SimConfig,
    seed: u64,
    point: Option<Point>,
}

impl Job {
    fn name(&self) -> String {
        let suffix = self.point.as_ref().map(Point::suffix).unwrap_or_default();
        format!("metrics_{}_seed{}{}.csv", self.config.strategy, self.seed, suffix)
    }

    /// Jobs with the same key replay the same scenario.
    fn scenario_key(&self) -> (u64, usize) {
        (self.seed, self.config.num_ads)
    }
}

struct Outcome {
    strategy: Strategy,
    seed: u64,
    param_value: String,
    last: StepMetrics,
}

pub fn execute(args: &RunArgs, sweep_required: bool) -> Result<()> {
    let base = config::resolve(&args.config)?;
    let points = match &args.sweep {
        Some(text) => Some(sweep::parse(text)?),
        None if sweep_required => return Err(CliError::Usage("`sweep` needs --sweep PARAM=V1,V2,...".into())),
        None => None,
    };
    let seeds = if args.seed.is_empty() { vec![base.seed] } else { args.seed.clone() };
    let strategies = if args.strategy.is_empty() { Strategy::ALL.to_vec() } else { dedup(&args.strategy) };

    let mut jobs = Vec::new();
    for &seed in &dedup(&seeds) {
        for point in points.iter().flatten().map(Some).chain(points.is_none().then_some(None)) {
            for &strategy in &strategies {
                let mut c = SimConfig { seed, strategy, ..base.clone() };
                if let Some(p) = point {
                    p.apply(&mut c);
                }
                jobs.push(Job { config: c, seed, point: point.cloned() });
            }
        }
    }
    for job in &jobs {
        let label = job.point.as_ref().map(|p| format!(" ({}={})", p.param.name(), p.token)).unwrap_or_default();
        config::check(&job.config, &label).map_err(|e| CliError::Usage(format!("{e}{label}")))?;
    }
    if points.as_ref().is_some_and(|p| p[0].param.affects_scenario()) && args.ads.is_some() {
        return Err(CliError::Usage("sweeping num_ads needs generated ads; drop --ads".into()));
    }

    ensure_dir(&args.out)?;
    let mut keys: Vec<(u64, usize)> = jobs.iter().map(Job::scenario_key).collect();
    keys.sort_unstable();
    keys.dedup();
    let scenarios: BTreeMap<(u64, usize), Result<Scenario, String>> = keys
        .par_iter()
        .map(|&key| {
            let config = jobs.iter().find(|j| j.scenario_key() == key).map(|j| &j.config).expect("key taken from a job");
            (key, build_scenario(args, config).map_err(|e| e.to_string()))
        })
        .collect();

    let results: Vec<Result<Outcome, String>> = jobs
        .par_iter()
        .map(|job| {
            let scenario = scenarios[&job.scenario_key()].as_ref().map_err(|e| format!("{}: {e}", job.name()))?;
            simulate(job, scenario, &args.out).map_err(|e| format!("{}: {e}", job.name()))
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(e),
        }
    }
    write_summary(&args.out, &outcomes)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runs(failures))
    }
}

fn dedup<T: PartialEq + Copy>(items: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Files given on the command line are used as is; the rest is drawn from
/// the seed.
fn build_scenario(args: &RunArgs, config: &SimConfig) -> Result<Scenario> {
    let seed = config.seed;
    let poas = match &args.poas {
        Some(p) => load_poas(p)?,
        None => gen_poas(&config.scenario, seed)?,
    };
    let ads = match &args.ads {
        Some(p) => load_ads(p)?,
        None => gen_ads(config, &poas, seed)?,
    };
    let profiles = match &args.profiles {
        Some(p) => load_profiles(p)?,
        None => gen_profiles(config.n, config.scenario.num_vehicles, seed)?,
    };
    let trace = match &args.trace {
        Some(p) => load_trace(p, config.scenario.step_duration_s)?,
        None => gen_synthetic(&config.synthetic_trace(), seed)?,
    };
    Ok(Scenario { poas, catalog: AdCatalog::new(ads)?, profiles, trace })
}

fn simulate(job: &Job, scenario: &Scenario, out: &Path) -> Result<Outcome> {
    let mut sim = scenario.simulation(&job.config)?;
    let mut rows = Vec::with_capacity(sim.total_steps());
    while let Some(r) = sim.step() {
        rows.push(r);
    }
    let name = job.name();
    write_atomic(out, &name, |w| write_metrics(w, &rows).map_err(|e| CliError::io(out.join(&name), e)))?;
    Ok(Outcome {
        strategy: job.config.strategy,
        seed: job.seed,
        param_value: job.point.as_ref().map(|p| p.token.clone()).unwrap_or_default(),
        last: sim.metrics(),
    })
}

fn write_summary(out: &Path, outcomes: &[Outcome]) -> Result<()> {
    let path = out.join("summary.csv");
    write_atomic(out, "summary.csv", |w| {
        let io = |e| CliError::io(&path, e);
        writeln!(w, "{SUMMARY_HEADER}").map_err(io)?;
        for o in outcomes {
            writeln!(
                w,
                "{},{},{},{:.6},{},{:.6}",
                o.strategy, o.seed, o.param_value, o.last.revenue_cum, o.last.impressions_cum, o.last.avg_distance_cum
            )
            .map_err(io)?;
        }
        Ok(())
    })?;
    Ok(())
}

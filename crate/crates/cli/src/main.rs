mod args;
mod config;
mod error;
mod output;
mod run;
mod sweep;

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use volfied_core::io::{load_ads, load_poas, write_ads, write_mapping, write_poas, write_profiles, write_trace};
use volfied_core::oracle::{simulate_display, solve_exact, InstanceFile, OracleInstance};
use volfied_core::sim::{gen_ads, gen_poas, gen_profiles, gen_synthetic, SimConfig};
use volfied_core::sparse::m_sparse_set;
use volfied_core::{Ad, AdCatalog, AdScope, PoAId};

use args::{Cli, Command, GenArgs, OracleArgs, SparsifyArgs};
use error::{CliError, Result};
use output::{ensure_dir, write_atomic};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// `VOLFIED_THREADS` caps the worker pool; rayon's default otherwise.
fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("VOLFIED_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("VOLFIED_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenAds(a) => gen(&a, Gen::Ads),
        Command::GenPoas(a) => gen(&a, Gen::Poas),
        Command::GenTrace(a) => gen(&a, Gen::Trace),
        Command::GenProfiles(a) => gen(&a, Gen::Profiles),
        Command::Sparsify(a) => sparsify(&a),
        Command::Run(a) => run::execute(&a, false),
        Command::Sweep(a) => run::execute(&a, true),
        Command::Oracle(a) => oracle(&a),
        Command::Config(a) => {
            let c = config::resolve(&a)?;
            let text = serde_json::to_string_pretty(&c).map_err(|source| CliError::Json { path: "<stdout>".into(), source })?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Clone, Copy)]
enum Gen {
    Ads,
    Poas,
    Trace,
    Profiles,
}

fn gen(args: &GenArgs, what: Gen) -> Result<()> {
    let mut c = config::resolve(&args.config)?;
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    config::check(&c, "")?;
    if args.poas.is_some() && !matches!(what, Gen::Ads) {
        return Err(CliError::Usage("--poas only applies to gen-ads".into()));
    }
    ensure_dir(&args.out)?;
    let path = match what {
        Gen::Ads => {
            let poas = match &args.poas {
                Some(p) => load_poas(p)?,
                None => gen_poas(&c.scenario, c.seed)?,
            };
            let ads = gen_ads(&c, &poas, c.seed)?;
            write_atomic(&args.out, "ads.csv", |w| Ok(write_ads(w, &ads)?))?
        }
        Gen::Poas => {
            let poas = gen_poas(&c.scenario, c.seed)?;
            write_atomic(&args.out, "poas.csv", |w| Ok(write_poas(w, &poas)?))?
        }
        Gen::Trace => {
            let trace = gen_synthetic(&c.synthetic_trace(), c.seed)?;
            write_atomic(&args.out, "trace.csv", |w| Ok(write_trace(w, &trace)?))?
        }
        Gen::Profiles => {
            let profiles = gen_profiles(c.n, c.scenario.num_vehicles, c.seed)?;
            write_atomic(&args.out, "profiles.csv", |w| Ok(write_profiles(w, &profiles)?))?
        }
    };
    println!("{}", path.display());
    Ok(())
}

fn sparsify(args: &SparsifyArgs) -> Result<()> {
    let c: SimConfig = config::resolve(&args.config)?;
    let catalog = AdCatalog::new(load_ads(&args.ads)?)?;
    let (ads, value): (Vec<Ad>, Box<dyn Fn(&Ad) -> f64>) = match args.poa {
        Some(id) => {
            let poa = PoAId(id);
            (catalog.valued_at(poa).cloned().collect(), Box::new(move |a: &Ad| a.value_at(poa)))
        }
        None => (
            catalog.ads().iter().filter(|a| a.scope == AdScope::Global).cloned().collect(),
            Box::new(|a: &Ad| a.base_value),
        ),
    };
    let set = m_sparse_set(&ads, c.epsilon, c.m, c.metric, value)?;
    if let Some(w) = c.sparse()?.check_against(c.d_max) {
        eprintln!("warning: {w}");
    }
    ensure_dir(&args.out)?;
    write_atomic(&args.out, "sparse_ads.csv", |w| Ok(write_ads(w, set.ads())?))?;
    write_atomic(&args.out, "mapping.csv", |w| Ok(write_mapping(w, &set)?))?;
    println!("{} of {} ads kept (epsilon {}, m {}, {})", set.len(), ads.len(), c.epsilon, c.m, c.metric);
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let text = fs::read_to_string(&args.instance).map_err(|e| CliError::io(&args.instance, e))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: args.instance.clone(), source })?;
    let instance = OracleInstance::from_file(file)?;
    let solution = solve_exact(&instance)?;
    let outcome = simulate_display(&solution.broadcast(), &instance)?;
    let report = json!({
        "revenue": solution.revenue,
        "impressions": outcome.impressions,
        "per_poa": solution.per_poa,
        "displays": outcome.displays,
    });
    ensure_dir(&args.out)?;
    let path = write_atomic(&args.out, "oracle.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report)
            .map_err(|source| CliError::Json { path: args.out.join("oracle.json"), source })
    })?;
    println!("optimal revenue {} ({} impressions) -> {}", solution.revenue, outcome.impressions, path.display());
    Ok(())
}

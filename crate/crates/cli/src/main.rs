mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use macromux::dicing::{brick_view, build_cuboidal_dicing, check_offset_balance, ErrorPattern};
use macromux::engine::{MacromuxConfig, Pipeline};
use macromux::gap::{frozen_gap, GapBoundarySpec, GapValue};
use macromux::lattice::{build_syndrome_graphs, Axis, FusionNetwork, OutcomeType};
use macromux::scoring::{tune_params, CountParams, GapParams, Scorer, ScorerKind};
use macromux::threshold::{estimate_config_rate, find_crossing, linear_grid, scan, RatePoint, ThresholdError};
use macromux::{EdgeWeight, Gap};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{BrickConfigFile, RunConfig};

#[derive(Parser)]
#[command(name = "macromux", version, about = "Macromux postselection on the 6-ring fusion network")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads (overrides MACROMUX_THREADS and the config file).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fusion network queries.
    #[command(subcommand)]
    Network(NetworkCmd),
    /// Dicing scheme queries.
    #[command(subcommand)]
    Dicing(DicingCmd),
    /// Run trials and emit one JSON line each.
    Sample(SampleArgs),
    /// Scan logical error rates and estimate the threshold.
    Threshold(ThresholdArgs),
    /// Evaluate scorer parameters on a grid.
    Tune(TuneArgs),
    /// Frozen gaps of one brick configuration.
    Gap(GapArgs),
}

#[derive(Subcommand)]
enum NetworkCmd {
    /// Counts of states, fusions, checks and edges.
    Info {
        #[arg(long = "L")]
        l: usize,
    },
}

#[derive(Subcommand)]
enum DicingCmd {
    /// Stage table and primal/dual balance.
    Check {
        #[arg(long = "L")]
        l: usize,
        #[arg(long, value_parser = parse_dims)]
        brick: [usize; 3],
        #[arg(long, default_value_t = 0)]
        offset_step: usize,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    p_min: f64,
    #[arg(long)]
    p_max: f64,
    #[arg(long)]
    p_steps: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    scorer: ScorerKind,
    /// JSON object of parameter lists, e.g. {"alpha": [0.5, 1], "beta": [2]}.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long)]
    brick_file: PathBuf,
    #[arg(long)]
    axis: Axis,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad brick dimension '{t}': {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "brick needs three comma-separated dimensions".to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config_threads = match &cli.command {
        Command::Sample(a) => Some(&a.config),
        Command::Threshold(a) => Some(&a.config),
        Command::Tune(a) => Some(&a.config),
        _ => None,
    }
    .map(|p| RunConfig::load(p))
    .transpose()?
    .and_then(|c| c.threads);
    init_threads(cli.threads, config_threads)?;
    match cli.command {
        Command::Network(NetworkCmd::Info { l }) => network_info(l),
        Command::Dicing(DicingCmd::Check { l, brick, offset_step }) => dicing_check(l, brick, offset_step),
        Command::Sample(a) => sample(&a),
        Command::Threshold(a) => threshold(&a),
        Command::Tune(a) => tune(&a),
        Command::Gap(a) => gap(&a),
    }
}

fn init_threads(flag: Option<usize>, config: Option<usize>) -> Result<()> {
    let env = match std::env::var("MACROMUX_THREADS") {
        Ok(v) => Some(v.parse::<usize>().with_context(|| format!("MACROMUX_THREADS = '{v}' is not a count"))?),
        Err(_) => None,
    };
    if let Some(n) = flag.or(env).or(config) {
        ensure!(n >= 1, "thread count must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker threads")?;
    }
    Ok(())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json serializes"));
}

fn provenance(command: &str, cfg: &RunConfig, extra: Value) -> Value {
    json!({
        "tool": "macromux",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "config": cfg.to_json(),
        "args": extra,
    })
}

fn load_with_seed(path: &Path, seed: Option<u64>) -> Result<(RunConfig, MacromuxConfig)> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let engine = cfg.engine_config()?;
    Ok((cfg, engine))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn network_info(l: usize) -> Result<()> {
    let net = FusionNetwork::new(l)?;
    let (primal, dual) = build_syndrome_graphs(&net);
    let graph = |g: &macromux::lattice::SyndromeGraph| {
        json!({
            "checks": g.num_checks(),
            "edges": g.num_edges(),
            "membranes": Axis::ALL.map(|a| g.membrane(a).len()),
        })
    };
    print_json(&json!({
        "L": l,
        "resource_states": net.num_states(),
        "fusions": net.num_fusions(),
        "outcomes": net.num_outcomes(),
        "cells": net.num_cells(),
        "primal": graph(&primal),
        "dual": graph(&dual),
    }));
    Ok(())
}

fn dicing_check(l: usize, brick: [usize; 3], offset_step: usize) -> Result<()> {
    let net = FusionNetwork::new(l)?;
    let scheme = build_cuboidal_dicing(&net, brick, offset_step)?;
    let stages: Vec<Value> = scheme
        .stages()
        .iter()
        .enumerate()
        .map(|(s, dims)| {
            let fusions = scheme.fusion_stages().iter().filter(|&&f| f == s).count();
            json!({ "stage": s, "dims": dims, "bricks": scheme.bricks(s).len(), "connecting_fusions": fusions })
        })
        .collect();
    let final_fusions = scheme.final_fusions().len();
    let (primal, dual) = check_offset_balance(&scheme);
    print_json(&json!({
        "L": l,
        "brick": brick,
        "offset_step": offset_step,
        "stages": stages,
        "final_fusions": final_fusions,
        "balance": { "primal": primal, "dual": dual, "balanced": primal == dual },
    }));
    Ok(())
}

fn sample(a: &SampleArgs) -> Result<()> {
    let (cfg, engine) = load_with_seed(&a.config, a.seed)?;
    let pipeline = Pipeline::new(engine)?;
    let results: Vec<_> = (0..a.trials).into_par_iter().map(|t| pipeline.run_trial(t)).collect::<Result<_, _>>()?;
    let mut text = serde_json::to_string(&json!({ "provenance": provenance("sample", &cfg, json!({ "trials": a.trials })) }))?;
    text.push('\n');
    for (t, r) in results.iter().enumerate() {
        let line = json!({
            "trial": t,
            "failed": r.failed(),
            "flags": { "primal": r.flags[0], "dual": r.flags[1] },
            "selected_erasures": r.selected_erasures,
            "stages": r.stages,
        });
        text.push_str(&serde_json::to_string(&line)?);
        text.push('\n');
    }
    write_output(a.out.as_deref(), &text)
}

const CSV_COLUMNS: &str = "trials,failures,rate,ci_lo,ci_hi";

fn rate_columns(pt: &RatePoint) -> String {
    format!("{},{},{},{},{}", pt.trials, pt.failures, pt.rate, pt.ci_lo, pt.ci_hi)
}

fn threshold(a: &ThresholdArgs) -> Result<()> {
    ensure!(a.p_steps >= 1, "--p-steps must be at least 1");
    ensure!(a.p_min <= a.p_max, "--p-min exceeds --p-max");
    ensure!(a.trials >= 1, "--trials must be at least 1");
    let (cfg, engine) = load_with_seed(&a.config, a.seed)?;
    let grid = linear_grid(a.p_min, a.p_max, a.p_steps);
    let args = json!({ "p_grid": grid, "sizes": a.sizes, "trials": a.trials });
    let prov = provenance("threshold", &cfg, args);
    let points = scan(&engine, &grid, &a.sizes, a.trials, |pt| {
        eprintln!("L={} p={} rate={:.5} ({}/{})", pt.l, pt.p, pt.rate, pt.failures, pt.trials);
    })?;
    let mut csv = format!("# {}\nL,p,{CSV_COLUMNS}\n", serde_json::to_string(&prov)?);
    for pt in &points {
        writeln!(csv, "{},{},{}", pt.l, pt.p, rate_columns(pt))?;
    }
    std::fs::write(&a.out, csv).with_context(|| format!("writing {}", a.out.display()))?;
    let summary = match find_crossing(&points) {
        Ok(est) => json!({ "p_th": est.p_th, "std": est.std, "crossings": est.crossings }),
        Err(e @ (ThresholdError::NoCrossing | ThresholdError::TooFewSizes(_))) => json!({ "p_th": null, "no_crossing": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    print_json(&json!({ "provenance": prov, "threshold": summary }));
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneGrid {
    alpha: Option<Vec<f64>>,
    beta: Option<Vec<f64>>,
    delta: Option<Vec<f64>>,
    phi: Option<Vec<f64>>,
}

fn product(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn tune(a: &TuneArgs) -> Result<()> {
    let (cfg, engine) = load_with_seed(&a.config, a.seed)?;
    let text = std::fs::read_to_string(&a.grid).with_context(|| format!("reading grid {}", a.grid.display()))?;
    let grid: TuneGrid = serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("invalid grid {}: {e}", a.grid.display()))?;
    let s = &cfg.scorer;
    let (names, scorers): ([&str; 2], Vec<Scorer<f64>>) = match a.scorer {
        ScorerKind::Count => {
            if grid.delta.is_some() || grid.phi.is_some() {
                bail!("count scorer grid takes alpha and beta only");
            }
            let pts = product(grid.alpha.as_deref().unwrap_or(&[s.alpha]), grid.beta.as_deref().unwrap_or(&[s.beta]));
            (["alpha", "beta"], pts.into_iter().map(|(x, y)| Scorer::Count(CountParams::new(x, y))).collect())
        }
        ScorerKind::Gap => {
            if grid.alpha.is_some() || grid.beta.is_some() {
                bail!("gap scorer grid takes delta and phi only");
            }
            let pts = product(grid.delta.as_deref().unwrap_or(&[s.delta]), grid.phi.as_deref().unwrap_or(&[s.phi]));
            (["delta", "phi"], pts.into_iter().map(|(x, y)| Scorer::Gap(GapParams { delta_coef: x, phi: y })).collect())
        }
    };
    ensure!(!scorers.is_empty(), "empty parameter grid");
    let mut points = Vec::new();
    let mut failure = None;
    let result = tune_params(&scorers, |sc| {
        let base = MacromuxConfig { scorer: *sc, ..engine.clone() };
        match estimate_config_rate(&base, base.l, base.model.rate(), a.trials) {
            Ok(pt) => {
                points.push((*sc, pt));
                (pt.failures, pt.trials)
            }
            Err(e) => {
                failure.get_or_insert(e);
                (a.trials, a.trials)
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let params = |sc: &Scorer<f64>| match sc {
        Scorer::Count(p) => (p.alpha, p.beta),
        Scorer::Gap(p) => (p.delta_coef, p.phi),
    };
    let prov = provenance("tune", &cfg, json!({ "scorer": a.scorer, "grid": a.grid.display().to_string(), "trials": a.trials }));
    let mut csv = format!("# {}\n{},{},{CSV_COLUMNS}\n", serde_json::to_string(&prov)?, names[0], names[1]);
    for (sc, pt) in &points {
        let (x, y) = params(sc);
        writeln!(csv, "{x},{y},{}", rate_columns(pt))?;
    }
    write_output(a.out.as_deref(), &csv)?;
    if a.out.is_some() {
        let best = result.best_point();
        let (x, y) = params(&best.params);
        print_json(&json!({ "best": { names[0]: x, names[1]: y, "rate": best.rate } }));
    }
    Ok(())
}

fn gap_value<T: serde::Serialize>(v: GapValue<T>) -> Value {
    match v {
        GapValue::Finite(x) => json!(x),
        GapValue::Infinite => json!("infinite"),
    }
}

fn gap(a: &GapArgs) -> Result<()> {
    let file = BrickConfigFile::load(&a.brick_file)?;
    let l = file.lattice_size();
    let net = FusionNetwork::new(l)?;
    let scheme = build_cuboidal_dicing(&net, file.dims, 0)?;
    let brick = &scheme.max_bricks()[0];
    let n = brick.num_outcomes();
    let mut errors = ErrorPattern::clean(n);
    for (name, list, bits) in [("erased", &file.erased, &mut errors.erased), ("flipped", &file.flipped, &mut errors.flipped)] {
        for &o in list {
            ensure!(o < n, "{name} outcome {o} out of range: the brick has {n} outcomes");
            bits[o] = true;
        }
    }
    let view = brick_view(&scheme, brick);
    let spec = GapBoundarySpec::new(a.axis);
    let mut out = serde_json::Map::new();
    for kind in OutcomeType::ALL {
        let r: Gap = frozen_gap::<EdgeWeight, f64>(view.of(kind), &errors, spec, a.phi)?;
        out.insert(
            format!("{kind:?}").to_lowercase(),
            json!({ "delta": gap_value(r.delta), "w": r.freeze_weight, "delta_f": gap_value(r.frozen_delta) }),
        );
    }
    print_json(&json!({
        "dims": file.dims,
        "L": l,
        "outcomes": n,
        "axis": format!("{:?}", a.axis).to_lowercase(),
        "phi": a.phi,
        "gaps": out,
    }));
    Ok(())
}

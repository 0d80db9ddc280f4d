//! The four experiment subcommands. Each writes its CSV files and a
//! manifest into the configured output directory and returns their paths.

use std::fs;
use std::path::{Path, PathBuf};

use irsmec::chanmodel::{generate_channels, save_channels, ChannelSet};
use irsmec::econ::server_earning_p2;
use irsmec::feasibility::{feasibility_check_from, feasibility_trial, trial_seed, FeasibilityMode};
use irsmec::signal::{LinkState, PhaseVector};
use irsmec::sumratio::{optimize, OptimizationStatus};
use irsmec::Error as CoreError;
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// RNG stream of the common initial point of the trace experiment.
const TRACE_STREAM: u64 = 2;
/// RNG stream of the feasibility starts of the earning experiment.
const OPTIMIZE_STREAM: u64 = 3;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn channels(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<ChannelSet<f64>> {
    Ok(generate_channels(&cfg.geometry.build(n)?, seed)?)
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.trials).map(|t| trial_seed(cfg.seed, t)).collect()
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Config(format!("{}: {other:?}", path.display())),
    })?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    harness_version: &'a str,
    library_version: &'a str,
    seeds: Vec<u64>,
    protocol: &'a str,
    outputs: Vec<String>,
    config: &'a ExperimentConfig,
}

fn write_manifest(cfg: &ExperimentConfig, command: &str, seeds: Vec<u64>, protocol: &str, outputs: &[PathBuf]) -> Result<PathBuf> {
    let manifest = Manifest {
        command,
        harness_version: env!("CARGO_PKG_VERSION"),
        library_version: irsmec::VERSION,
        seeds,
        protocol,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()))
            .collect(),
        config: cfg,
    };
    let path = cfg.output_dir.join(format!("{command}.manifest.toml"));
    let text = toml::to_string(&manifest).map_err(|e| HarnessError::Config(e.to_string()))?;
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes `channels/n<N>/seed<s>.txt` for every surface size and trial.
pub fn gen_channels(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for &n in &cfg.n_elements {
        let dir = cfg.output_dir.join("channels").join(format!("n{n}"));
        ensure_dir(&dir)?;
        for seed in seeds(cfg) {
            let ch = channels(cfg, n, seed)?;
            let path = dir.join(format!("seed{seed}.txt"));
            save_channels(&ch, &path).map_err(|e| match e {
                CoreError::Io(io) => HarnessError::io(&path, io),
                other => other.into(),
            })?;
            written.push(path);
        }
    }
    info!("wrote {} channel files", written.len());
    let manifest = write_manifest(cfg, "gen-channels", seeds(cfg), "one file per (N, seed)", &written)?;
    written.push(manifest);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub floor: f64,
    pub iteration: usize,
    pub alpha: f64,
    pub min_rate: f64,
    pub feasible: bool,
}

/// Feasibility check on the realization `cfg.seed` from one common random start per
/// surface size, for every floor of the sweep.
pub fn feas_trace(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir)?;
    let opts = cfg.solver.feasibility();
    let floors = cfg.sweep.floors();
    let mut rows = Vec::new();
    for &n in &cfg.n_elements {
        let ch = channels(cfg, n, cfg.seed)?;
        let start = PhaseVector::random(n, &mut rng_for(cfg.seed, TRACE_STREAM));
        let per_floor: Vec<Vec<TraceRow>> = floors
            .par_iter()
            .map(|&floor| -> Result<Vec<TraceRow>> {
                let run = feasibility_check_from(&ch, &vec![floor; ch.users()], &start, &opts)?;
                Ok(run
                    .alpha_trace
                    .iter()
                    .zip(&run.rate_trace)
                    .enumerate()
                    .map(|(iteration, (alpha, rates))| TraceRow {
                        n,
                        floor,
                        iteration,
                        alpha: *alpha,
                        min_rate: rates.iter().copied().fold(f64::INFINITY, f64::min),
                        feasible: run.feasible,
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        rows.extend(per_floor.into_iter().flatten());
    }
    let path = cfg.output_dir.join("feas_trace.csv");
    write_csv(&path, &rows)?;
    let manifest = write_manifest(
        cfg,
        "feas-trace",
        vec![cfg.seed],
        "single start: one random initial point per surface size, shared by all floors",
        std::slice::from_ref(&path),
    )?;
    Ok(vec![path, manifest])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityRow {
    pub n: usize,
    pub floor: f64,
    pub mode: &'static str,
    pub trials: usize,
    pub feasible: usize,
    pub probability: f64,
}

/// Monte-Carlo feasibility probability for every surface size, floor and
/// mode.
pub fn feas_prob(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir)?;
    let opts = cfg.solver.feasibility();
    let floors = cfg.sweep.floors();
    let tasks: Vec<(usize, u64)> = cfg
        .n_elements
        .iter()
        .flat_map(|&n| seeds(cfg).into_iter().map(move |s| (n, s)))
        .collect();
    // One entry per (N, seed): hits indexed by [floor][mode].
    let outcomes: Vec<(usize, Vec<[bool; 3]>)> = tasks
        .par_iter()
        .map(|&(n, seed)| -> Result<(usize, Vec<[bool; 3]>)> {
            let ch = channels(cfg, n, seed)?;
            let mut hits = Vec::with_capacity(floors.len());
            for &floor in &floors {
                let fl = vec![floor; ch.users()];
                let mut row = [false; 3];
                for (slot, mode) in row.iter_mut().zip(FeasibilityMode::ALL) {
                    *slot = feasibility_trial(&ch, &fl, seed, mode, &opts)?;
                }
                hits.push(row);
            }
            info!("feas-prob N={n} seed={seed} done");
            Ok((n, hits))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &n in &cfg.n_elements {
        for (fi, &floor) in floors.iter().enumerate() {
            for (mi, mode) in FeasibilityMode::ALL.iter().enumerate() {
                let feasible = outcomes.iter().filter(|(m, h)| *m == n && h[fi][mi]).count();
                rows.push(ProbabilityRow {
                    n,
                    floor,
                    mode: mode.name(),
                    trials: cfg.trials,
                    feasible,
                    probability: feasible as f64 / cfg.trials as f64,
                });
            }
        }
    }
    let path = cfg.output_dir.join("feas_prob.csv");
    write_csv(&path, &rows)?;
    let manifest = write_manifest(
        cfg,
        "feas-prob",
        seeds(cfg),
        "fresh random starts per (realization, restart); random and optimized modes share the draws",
        std::slice::from_ref(&path),
    )?;
    Ok(vec![path, manifest])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterRow {
    pub n: usize,
    pub seed: u64,
    pub t: usize,
    pub objective: f64,
    pub delta: f64,
    pub backtracks: usize,
    pub min_rate_slack: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub seed: u64,
    pub status: String,
    pub start_objective: Option<f64>,
    pub objective: Option<f64>,
    pub start_earning: Option<f64>,
    pub earning: Option<f64>,
    pub outer_iterations: usize,
    pub final_delta: Option<f64>,
    pub kkt_lambda: Option<f64>,
    pub kkt_mu: Option<f64>,
    /// Final rates, `;`-separated.
    pub rates: String,
}

fn status_name(s: OptimizationStatus) -> &'static str {
    match s {
        OptimizationStatus::Converged => "converged",
        OptimizationStatus::MaxIter => "max-iter",
        OptimizationStatus::LineSearchFailed => "line-search-failed",
    }
}

/// Feasibility check for a start, then the earning optimizer, on every realization.
pub fn optimize_cmd(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir)?;
    let opts = cfg.solver.sumratio();
    let tasks: Vec<(usize, u64)> = cfg
        .n_elements
        .iter()
        .flat_map(|&n| seeds(cfg).into_iter().map(move |s| (n, s)))
        .collect();
    let results: Vec<(SummaryRow, Vec<OuterRow>)> = tasks
        .par_iter()
        .map(|&(n, seed)| -> Result<(SummaryRow, Vec<OuterRow>)> {
            let ch = channels(cfg, n, seed)?;
            let econ = cfg.economy.build(ch.users())?;
            let mut rng = rng_for(seed, OPTIMIZE_STREAM);
            info!("optimize N={n} seed={seed}");
            match optimize(&ch, &econ, &opts, &mut rng) {
                Ok(res) => {
                    let start_rates = LinkState::new(&ch, &res.start_phi)?.rates()?;
                    let trace = res
                        .records
                        .iter()
                        .map(|r| OuterRow {
                            n,
                            seed,
                            t: r.t,
                            objective: r.objective,
                            delta: r.delta,
                            backtracks: r.backtracks,
                            min_rate_slack: r.min_rate_slack,
                            inner_iterations: r.inner_iterations,
                        })
                        .collect();
                    let summary = SummaryRow {
                        n,
                        seed,
                        status: status_name(res.status).into(),
                        start_objective: Some(res.start_objective),
                        objective: Some(res.objective),
                        start_earning: Some(server_earning_p2(&econ, &start_rates)?),
                        earning: Some(res.earning),
                        outer_iterations: res.records.len().saturating_sub(1),
                        final_delta: res.delta_trace.last().copied(),
                        kkt_lambda: Some(res.kkt_lambda),
                        kkt_mu: Some(res.kkt_mu),
                        rates: res.rates.iter().map(|r| format!("{r:e}")).collect::<Vec<_>>().join(";"),
                    };
                    Ok((summary, trace))
                }
                Err(CoreError::NoFeasibleStart { .. }) => Ok((
                    SummaryRow {
                        n,
                        seed,
                        status: "no-feasible-start".into(),
                        start_objective: None,
                        objective: None,
                        start_earning: None,
                        earning: None,
                        outer_iterations: 0,
                        final_delta: None,
                        kkt_lambda: None,
                        kkt_mu: None,
                        rates: String::new(),
                    },
                    Vec::new(),
                )),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_>>()?;

    let mut summary: Vec<SummaryRow> = Vec::new();
    let mut trace: Vec<OuterRow> = Vec::new();
    for (s, t) in results {
        summary.push(s);
        trace.extend(t);
    }
    summary.sort_by_key(|r| (r.n, r.seed));
    trace.sort_by_key(|r| (r.n, r.seed, r.t));
    let summary_path = cfg.output_dir.join("optimize_summary.csv");
    let trace_path = cfg.output_dir.join("optimize_trace.csv");
    write_csv(&summary_path, &summary)?;
    write_csv(&trace_path, &trace)?;
    let manifest = write_manifest(
        cfg,
        "optimize",
        seeds(cfg),
        "multi-start feasibility check for the start, then the multiplier iteration",
        &[summary_path.clone(), trace_path.clone()],
    )?;
    Ok(vec![summary_path, trace_path, manifest])
}

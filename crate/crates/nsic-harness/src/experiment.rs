//! Replication matrix: one schedule, demand path, oracle table, and paired
//! set of learners per replication, all on independent seeded streams.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use nsic_core::agent::{AlgoConfig, AlgoKind, LearningAgent, NsicAgent};
use nsic_core::benchmark::{
    dynamic_regret, optimal_tau, relative_regret, wrap_restart, OracleTable, RestartPolicy,
};
use nsic_core::demand::{make_schedule, DemandError, DemandSchedule};
use nsic_core::estimation::ConfidenceParams;
use nsic_core::inventory::{CostParams, InventoryError, InventoryModel, SystemConfig};
use nsic_core::rng::{
    stream_rng, CONSUMER_AGENT_BASE, CONSUMER_DEMAND, CONSUMER_GROUP_STRIDE, CONSUMER_ORACLE,
    CONSUMER_SCHEDULE,
};
use nsic_core::PolicyGrid;

use crate::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Metrics(#[from] nsic_core::benchmark::MetricsError),
    #[error(transparent)]
    Agent(#[from] nsic_core::agent::AgentError),
    #[error(transparent)]
    Estimation(#[from] nsic_core::estimation::EstimationError),
    #[error(transparent)]
    Counterfactual(#[from] nsic_core::counterfactual::CounterfactualError),
    #[error("summary requires at least one record")]
    EmptySummary,
    #[error("{0}")]
    Other(String),
}

/// One (algorithm, replication) result row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub algorithm: String,
    pub model: String,
    pub lead_time: usize,
    pub s_requested: u32,
    pub s_realized: u32,
    pub replication: u32,
    pub seed: u64,
    pub horizon: u32,
    pub dynamic_regret: f64,
    pub relative_regret_pct: f64,
    pub restarts: u32,
    pub epochs: u32,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub run_id: String,
    pub points: Vec<(u32, f64)>,
}

#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub trajectories: Vec<Trajectory>,
}

/// Fixed stream slots so enabling one algorithm never shifts another's draws.
const SLOT_NSIC: u64 = 0;
const SLOT_ORACLE_RESTART: u64 = 1;
const SLOT_SCHED_RESTART: u64 = 2;
const SLOT_STATIONARY: u64 = 3;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate().map_err(|e| HarnessError::Other(e.to_string()))?;
    let mut tasks: Vec<(usize, u32)> = Vec::new();
    for block in 0..cfg.segments.len() {
        for rep in 0..cfg.replications {
            tasks.push((block, rep));
        }
    }
    let worker_count = if cfg.workers == 0 { num_threads_default() } else { cfg.workers };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count)
        .build()
        .map_err(|e| HarnessError::Other(e.to_string()))?;
    let mut per_task: Vec<((usize, u32), ExperimentOutput)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(block, rep)| replicate(cfg, block, rep).map(|out| ((block, rep), out)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    per_task.sort_by_key(|(key, _)| *key);
    let mut out = ExperimentOutput::default();
    for (_, mut one) in per_task {
        out.records.append(&mut one.records);
        out.trajectories.append(&mut one.trajectories);
    }
    Ok(out)
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// The algorithm-facing description of one replication's environment.
pub struct ReplicationEnv {
    pub schedule: DemandSchedule,
    pub demands: Vec<f64>,
    pub table: OracleTable,
    pub grid: PolicyGrid,
    pub system: SystemConfig,
    pub costs: CostParams,
    pub conf: ConfidenceParams,
    pub s_requested: u32,
}

/// Draw the schedule and demand path, locate the per-segment optima, set
/// `U = 1.2 * max_t tau_t^*`, and price the oracle table on the policy grid.
/// `block` selects the entry of the segments sweep.
pub fn build_block_environment(
    cfg: &ExperimentConfig,
    block: usize,
    rep: u32,
) -> Result<ReplicationEnv, HarnessError> {
    let costs = CostParams::new(cfg.holding_cost, cfg.penalty_cost)?;
    let group = block as u64 * CONSUMER_GROUP_STRIDE;
    let s_requested = cfg.segments[block].resolve(cfg.horizon, cfg.segment_constant);

    let mut sched_rng = stream_rng(cfg.base_seed, rep as u64, group + CONSUMER_SCHEDULE);
    let schedule =
        make_schedule(s_requested, cfg.horizon, cfg.family, &cfg.ranges, &mut sched_rng)?;

    let mut demand_rng = stream_rng(cfg.base_seed, rep as u64, group + CONSUMER_DEMAND);
    let demands = schedule.sample_path(&mut demand_rng);

    // locate each segment's optimal level with a coarse common-random-number
    // scan, then set the policy-space cap
    let mut oracle_rng = stream_rng(cfg.base_seed, rep as u64, group + CONSUMER_ORACLE);
    let quantile = (costs.penalty / (costs.holding + costs.penalty)).clamp(0.5, 0.999);
    let mut max_tau_star = 0.0f64;
    for (_, family) in schedule.segments() {
        let cap = ((cfg.lead_time as f64 + 1.0) * family.quantile(quantile.max(0.995)) * 1.2)
            .max(1.0);
        let scan_sys = SystemConfig::new(cfg.model, cfg.lead_time, cap, cfg.horizon)?;
        let res = cap / cfg.oracle_scan_points.max(16) as f64;
        let (tau_star, _, _) =
            optimal_tau(family, &scan_sys, &costs, res, cfg.mc_horizon, &mut oracle_rng)?;
        max_tau_star = max_tau_star.max(tau_star);
    }
    let max_level = (1.2 * max_tau_star).max(1.0);
    let system = SystemConfig::new(cfg.model, cfg.lead_time, max_level, cfg.horizon)?;

    let t = cfg.horizon as f64;
    let gamma = cfg.gamma.unwrap_or_else(|| {
        let g = match algo_kind(cfg) {
            AlgoKind::Bl | AlgoKind::Ls => max_level * t.powf(-0.5),
            AlgoKind::Lsl => {
                max_level * (cfg.lead_time as f64 + 1.0).powf(2.0 / 3.0) * t.powf(-1.0 / 3.0)
            }
        };
        g.min(max_level)
    });
    let grid = PolicyGrid::new(gamma, max_level)?;
    let table =
        OracleTable::build(&schedule, grid.levels(), &system, &costs, cfg.mc_horizon, &mut oracle_rng)?;

    let delta = cfg.delta.unwrap_or_else(|| t.powi(-2).clamp(f64::MIN_POSITIVE, 0.5));
    let sigma = schedule
        .segments()
        .iter()
        .map(|(_, f)| f.sigma_proxy())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let conf = ConfidenceParams::new(
        delta,
        gamma,
        sigma,
        cfg.scale,
        cfg.horizon,
        max_level,
        cfg.lead_time,
        costs.holding,
        costs.penalty,
    )?
    .with_change_scale(cfg.change_scale.unwrap_or(cfg.scale));

    Ok(ReplicationEnv { schedule, demands, table, grid, system, costs, conf, s_requested })
}

/// [`build_block_environment`] for the first (often only) segments entry.
pub fn build_environment(cfg: &ExperimentConfig, rep: u32) -> Result<ReplicationEnv, HarnessError> {
    build_block_environment(cfg, 0, rep)
}

pub fn algo_kind(cfg: &ExperimentConfig) -> AlgoKind {
    match (cfg.model, cfg.lead_time) {
        (InventoryModel::Backlog, _) => AlgoKind::Bl,
        (InventoryModel::LostSales, 0) => AlgoKind::Ls,
        (InventoryModel::LostSales, _) => AlgoKind::Lsl,
    }
}

fn algo_config(env: &ReplicationEnv, cfg: &ExperimentConfig, detect: bool) -> AlgoConfig {
    let mut base = AlgoConfig::theory_defaults(
        algo_kind(cfg),
        env.system,
        env.costs,
        env.conf.sigma,
    );
    base.conf = env.conf.clone();
    base.grid = env.grid.clone();
    base.detect_changes = detect;
    base.min_window_len = cfg.min_window;
    base.interval_mode = cfg.interval_mode;
    base.detection_scope = cfg.detection_scope;
    base
}

fn replicate(cfg: &ExperimentConfig, block: usize, rep: u32) -> Result<ExperimentOutput, HarnessError> {
    let env = build_block_environment(cfg, block, rep)?;
    let group = block as u64 * CONSUMER_GROUP_STRIDE;
    let mut out = ExperimentOutput::default();

    let mut plans: Vec<(u64, Box<dyn LearningAgent>)> = Vec::new();
    if cfg.run_nsic {
        plans.push((SLOT_NSIC, Box::new(NsicAgent::new(algo_config(&env, cfg, true))?)));
    }
    if cfg.run_oracle_restart {
        let points: Vec<u32> =
            env.schedule.segments().iter().skip(1).map(|(s, _)| *s).collect();
        let agent =
            wrap_restart(algo_config(&env, cfg, false), RestartPolicy::Oracle { change_points: points })?;
        plans.push((SLOT_ORACLE_RESTART, Box::new(agent)));
    }
    if cfg.run_sched_restart {
        let period = cfg.horizon.div_ceil(env.s_requested);
        let agent = wrap_restart(algo_config(&env, cfg, false), RestartPolicy::Fixed { period })?;
        plans.push((SLOT_SCHED_RESTART, Box::new(agent)));
    }
    if cfg.run_stationary {
        let agent = wrap_restart(algo_config(&env, cfg, false), RestartPolicy::Never)?;
        plans.push((SLOT_STATIONARY, Box::new(agent)));
    }

    for (slot, mut agent) in plans {
        let started = Instant::now();
        let mut rng = stream_rng(cfg.base_seed, rep as u64, group + CONSUMER_AGENT_BASE + slot);
        let mut played = Vec::with_capacity(env.demands.len());
        for (i, &d) in env.demands.iter().enumerate() {
            let rec = agent.act(i as u32 + 1, d, &mut rng);
            played.push(rec.level);
        }
        let regret = dynamic_regret(&played, &env.schedule, &env.table)?;
        let rel = relative_regret(regret.total, &env.schedule, &env.table)?;
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        let run_id = if cfg.segments.len() > 1 {
            format!("b{block}-r{rep:04}-{}", agent.name())
        } else {
            format!("r{rep:04}-{}", agent.name())
        };
        if cfg.trajectory_stride > 0 {
            let stride = cfg.trajectory_stride as usize;
            let points = regret
                .trajectory
                .iter()
                .enumerate()
                .filter(|(i, _)| (i + 1) % stride == 0)
                .map(|(i, &v)| (i as u32 + 1, v))
                .collect();
            out.trajectories.push(Trajectory { run_id: run_id.clone(), points });
        }
        out.records.push(RunRecord {
            run_id,
            algorithm: agent.name(),
            model: match cfg.model {
                InventoryModel::Backlog => "backlog".into(),
                InventoryModel::LostSales => "lost_sales".into(),
            },
            lead_time: cfg.lead_time,
            s_requested: env.s_requested,
            s_realized: env.schedule.num_segments(),
            replication: rep,
            seed: cfg.base_seed,
            horizon: cfg.horizon,
            dynamic_regret: regret.total,
            relative_regret_pct: rel,
            restarts: agent.restarts(),
            epochs: agent.epochs(),
            wall_ms,
        });
    }
    Ok(out)
}

/// Group records by (algorithm, model, lead time, requested segments) and
/// report the mean, standard error, min and max of both regret metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub model: String,
    pub lead_time: usize,
    pub s_requested: u32,
    pub count: usize,
    pub dyn_mean: f64,
    pub dyn_stderr: f64,
    pub dyn_min: f64,
    pub dyn_max: f64,
    pub rel_mean: f64,
    pub rel_stderr: f64,
    pub rel_min: f64,
    pub rel_max: f64,
}

pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptySummary);
    }
    let mut keys: Vec<(String, String, usize, u32)> = records
        .iter()
        .map(|r| (r.algorithm.clone(), r.model.clone(), r.lead_time, r.s_requested))
        .collect();
    keys.sort();
    keys.dedup();
    let mut rows = Vec::with_capacity(keys.len());
    for (alg, model, lead, s_req) in keys {
        let group: Vec<&RunRecord> = records
            .iter()
            .filter(|r| {
                r.algorithm == alg && r.model == model && r.lead_time == lead && r.s_requested == s_req
            })
            .collect();
        let stats = |xs: Vec<f64>| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let stderr = if xs.len() < 2 {
                0.0
            } else {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            };
            let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (mean, stderr, min, max)
        };
        let (dyn_mean, dyn_stderr, dyn_min, dyn_max) =
            stats(group.iter().map(|r| r.dynamic_regret).collect());
        let (rel_mean, rel_stderr, rel_min, rel_max) =
            stats(group.iter().map(|r| r.relative_regret_pct).collect());
        rows.push(SummaryRow {
            algorithm: alg,
            model,
            lead_time: lead,
            s_requested: s_req,
            count: group.len(),
            dyn_mean,
            dyn_stderr,
            dyn_min,
            dyn_max,
            rel_mean,
            rel_stderr,
            rel_min,
            rel_max,
        });
    }
    Ok(rows)
}

/// Round to six significant digits and render without an exponent.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let shift = 5 - exp;
    let factor = 10f64.powi(shift);
    let rounded = (v * factor).round() / factor;
    let decimals = shift.clamp(0, 17) as usize;
    format!("{rounded:.decimals$}")
}

/// `runs.csv` with the exact column set, UTF-8, LF line endings.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "run_id,algorithm,model,lead_time,S_requested,S_realized,replication,seed,T,dynamic_regret,relative_regret_pct,restarts,epochs,wall_ms\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.run_id,
            r.algorithm,
            r.model,
            r.lead_time,
            r.s_requested,
            r.s_realized,
            r.replication,
            r.seed,
            r.horizon,
            fmt_sig6(r.dynamic_regret),
            fmt_sig6(r.relative_regret_pct),
            r.restarts,
            r.epochs,
            fmt_sig6(r.wall_ms),
        ));
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,cum_regret\n");
    for &(t, v) in &traj.points {
        out.push_str(&format!("{t},{}\n", fmt_sig6(v)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn fmt_sig6_rounds_to_six_digits() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(6.091234567), "6.09123");
        assert_eq!(fmt_sig6(123456789.0), "123457000");
        assert_eq!(fmt_sig6(-0.0001234567), "-0.000123457");
        assert_eq!(fmt_sig6(2.0), "2.00000");
    }

    #[test]
    fn paired_algorithms_share_schedule_and_demands() {
        let cfg = parse_config(
            "[system]\nhorizon = 300\n[demand]\nsegments = 3\n[algorithms]\nstationary = true\n[run]\nreplications = 2\nmc_horizon = 400\nworkers = 1\n",
        )
        .unwrap();
        let env_a = build_environment(&cfg, 0).unwrap();
        let env_b = build_environment(&cfg, 0).unwrap();
        assert_eq!(env_a.demands, env_b.demands);
        assert_eq!(env_a.schedule, env_b.schedule);
        let env_c = build_environment(&cfg, 1).unwrap();
        assert_ne!(env_a.demands, env_c.demands);
    }

    #[test]
    fn run_experiment_produces_paired_records() {
        let cfg = parse_config(
            "[system]\nhorizon = 200\nlead_time = 0\n[demand]\nfamily = poisson\nsegments = 1\n[algorithms]\nnsic = true\nstationary = true\n[run]\nreplications = 2\nmc_horizon = 300\nworkers = 1\n",
        )
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        // paired rows share seed and realized schedule
        let by_rep: Vec<&RunRecord> =
            out.records.iter().filter(|r| r.replication == 0).collect();
        assert_eq!(by_rep.len(), 2);
        assert_eq!(by_rep[0].s_realized, by_rep[1].s_realized);
        assert_eq!(by_rep[0].seed, by_rep[1].seed);
        let csv = runs_csv(&out.records);
        assert!(csv.starts_with("run_id,algorithm,model,lead_time,S_requested,S_realized,"));
        assert_eq!(csv.lines().count(), 5);
        // default stride of zero emits no trajectories
        assert!(out.trajectories.is_empty());
    }

    #[test]
    fn segments_sweep_runs_one_block_per_entry() {
        let cfg = parse_config(
            "[system]\nhorizon = 200\n[demand]\nfamily = poisson\nsegments = 1, 4\n[run]\nreplications = 2\nmc_horizon = 300\nworkers = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.segments_resolved_list(), vec![1, 4]);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        let s_values: Vec<u32> = out.records.iter().map(|r| r.s_requested).collect();
        assert_eq!(s_values, vec![1, 1, 4, 4]);
        let rows = summarize(&out.records).unwrap();
        assert_eq!(rows.len(), 2, "one summary row per S value");
        // blocks carry distinct run ids
        assert!(out.records[0].run_id.starts_with("b0-"));
        assert!(out.records[2].run_id.starts_with("b1-"));
    }

    #[test]
    fn single_stationary_replication_has_no_restarts() {
        let cfg = parse_config(
            "[system]\nhorizon = 500\n[demand]\nfamily = trunc_normal\nsegments = 1\n[run]\nreplications = 1\nmc_horizon = 600\nworkers = 1\n",
        )
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        let rec = &out.records[0];
        assert_eq!(rec.restarts, 0);
        assert_eq!(rec.s_requested, 1);
        assert_eq!(rec.s_realized, 1);
        assert_eq!(rec.algorithm, "nsic-ls");
    }

    #[test]
    fn single_threaded_and_parallel_runs_agree() {
        let text = "[system]\nhorizon = 150\n[demand]\nfamily = uniform\nsegments = 2\n[run]\nreplications = 3\nmc_horizon = 200\n";
        let mut cfg = parse_config(text).unwrap();
        cfg.workers = 1;
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_experiment(&cfg).unwrap();
        // every column except the wall-clock measurement is deterministic
        let strip = |csv: String| -> String {
            csv.lines()
                .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(runs_csv(&a.records)), strip(runs_csv(&b.records)));
    }

    #[test]
    fn summarize_groups_and_averages() {
        let rec = |alg: &str, val: f64| RunRecord {
            run_id: format!("{alg}-{val}"),
            algorithm: alg.into(),
            model: "lost_sales".into(),
            lead_time: 0,
            s_requested: 1,
            s_realized: 1,
            replication: 0,
            seed: 1,
            horizon: 10,
            dynamic_regret: val,
            relative_regret_pct: val,
            restarts: 0,
            epochs: 1,
            wall_ms: 1.0,
        };
        let rows = summarize(&[rec("a", 1.0), rec("a", 2.0), rec("a", 3.0), rec("b", 5.0)]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].dyn_mean, 2.0);
        assert_eq!(rows[0].count, 3);
        assert_eq!(rows[1].dyn_mean, 5.0);
        assert_eq!(rows[1].dyn_stderr, 0.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn trajectories_emitted_at_stride() {
        let cfg = parse_config(
            "[system]\nhorizon = 100\n[demand]\nfamily = poisson\n[run]\nreplications = 1\nmc_horizon = 200\ntrajectory_stride = 25\nworkers = 1\n",
        )
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.trajectories.len(), 1);
        let pts: Vec<u32> = out.trajectories[0].points.iter().map(|p| p.0).collect();
        assert_eq!(pts, vec![25, 50, 75, 100]);
        let csv = trajectory_csv(&out.trajectories[0]);
        assert!(csv.starts_with("t,cum_regret\n"));
    }
}

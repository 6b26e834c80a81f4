use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nsic_core::benchmark::check_segment_shape;
use nsic_core::estimation::{IntervalStats, Window};
use nsic_core::simcheck::run_equivalence_suite;
use nsic_harness::experiment::{runs_csv, summarize, trajectory_csv};
use nsic_harness::{build_environment, parse_config, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "nsic-harness", about = "Benchmark harness for non-stationary base-stock learning", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured replication matrix and write runs.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured replication count.
        #[arg(long)]
        reps: Option<u32>,
        /// Override the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured worker count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Emit cumulative-regret trajectories sampled every STRIDE periods.
        #[arg(long, value_name = "STRIDE")]
        emit_traj: Option<u32>,
    },
    /// Build and dump the oracle cost table for replication 0 of a config.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the library invariant suites and print pass/fail lines.
    Selftest,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, reps, seed, workers, emit_traj } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(msg) => return fail(&msg),
            };
            if let Some(r) = reps {
                cfg.replications = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(stride) = emit_traj {
                cfg.trajectory_stride = stride;
            }
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            let output = match run_experiment(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(&format!("run failed: {e}")),
            };
            if let Err(e) = fs::create_dir_all(&out) {
                return fail(&format!("cannot create {}: {e}", out.display()));
            }
            let runs_path = out.join("runs.csv");
            if let Err(e) = fs::write(&runs_path, runs_csv(&output.records)) {
                return fail(&format!("cannot write {}: {e}", runs_path.display()));
            }
            for traj in &output.trajectories {
                let path = out.join(format!("traj_{}.csv", traj.run_id));
                if let Err(e) = fs::write(&path, trajectory_csv(traj)) {
                    return fail(&format!("cannot write {}: {e}", path.display()));
                }
            }
            println!("wrote {} records to {}", output.records.len(), runs_path.display());
            match summarize(&output.records) {
                Ok(rows) => {
                    println!(
                        "{:<12} {:<11} {:>2} {:>6} {:>5} {:>14} {:>12} {:>10}",
                        "algorithm", "model", "L", "S", "reps", "dyn_regret", "rel_pct", "stderr"
                    );
                    for r in rows {
                        println!(
                            "{:<12} {:<11} {:>2} {:>6} {:>5} {:>14.1} {:>12.3} {:>10.3}",
                            r.algorithm,
                            r.model,
                            r.lead_time,
                            r.s_requested,
                            r.count,
                            r.dyn_mean,
                            r.rel_mean,
                            r.rel_stderr
                        );
                    }
                }
                Err(e) => return fail(&format!("summary failed: {e}")),
            }
            ExitCode::SUCCESS
        }
        Command::Oracle { config, out } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(msg) => return fail(&msg),
            };
            let env = match build_environment(&cfg, 0) {
                Ok(e) => e,
                Err(e) => return fail(&format!("oracle build failed: {e}")),
            };
            let mut buf = Vec::new();
            if let Err(e) = env.table.write_columnar(&mut buf) {
                return fail(&format!("serialize failed: {e}"));
            }
            if let Err(e) = fs::write(&out, buf) {
                return fail(&format!("cannot write {}: {e}", out.display()));
            }
            println!(
                "wrote oracle table: {} segments x {} levels (U = {:.3}) to {}",
                env.table.segments.len(),
                env.table.levels.len(),
                env.grid.max_level(),
                out.display()
            );
            ExitCode::SUCCESS
        }
        Command::Selftest => selftest(),
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::FAILURE
}

fn selftest() -> ExitCode {
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("{} {}", if pass { "PASS" } else { "FAIL" }, name);
        ok &= pass;
    };

    let report = run_equivalence_suite(300, 2024);
    check(
        "counterfactual equivalence (300 random scenarios, tol 1e-12)",
        report.ok(1e-12),
    );
    check("dominance invariant", report.dominance_violations == 0);
    check("position-cap invariant", report.position_cap_violations == 0);

    // prefix-sum means against a naive sum, every admissible window
    let n_costs = 1448u32;
    let mut st = IntervalStats::new(1);
    let costs: Vec<f64> = (1..=n_costs as u64)
        .map(|i| ((i * 2654435761 % 1000) as f64) / 7.0 - 50.0)
        .collect();
    for (i, &c) in costs.iter().enumerate() {
        st.record(0, i as u32 + 1, c);
    }
    let mut mean_ok = true;
    let mut queries = 0u64;
    let total_abs: f64 = costs.iter().map(|c| c.abs()).sum();
    for s in 1..=n_costs {
        for e in s + 1..=n_costs + 1 {
            let window = &costs[(s - 1) as usize..(e - 1) as usize];
            let naive = window.iter().sum::<f64>() / (e - s) as f64;
            // 1e-12 relative to the summand scale, plus the forward error a
            // prefix difference inherits from accumulating the whole stream
            let scale = window.iter().map(|c| c.abs()).sum::<f64>() / (e - s) as f64;
            let slack = 1e-12 * (1.0 + scale) + 4.0 * f64::EPSILON * total_abs / (e - s) as f64;
            let fast = st.mean(0, Window::new(s, e)).unwrap();
            mean_ok &= (fast - naive).abs() <= slack;
            queries += 1;
        }
    }
    check(
        &format!("prefix-sum interval means ({queries} windows)"),
        mean_ok && queries > 1_000_000,
    );

    // oracle-table shape on a small default environment
    let cfg_text = "[system]\nhorizon = 400\n[demand]\nfamily = uniform\nsegments = 2\n[run]\nreplications = 1\nmc_horizon = 3000\nworkers = 1\n";
    match parse_config(cfg_text)
        .map_err(|e| e.to_string())
        .and_then(|cfg| build_environment(&cfg, 0).map_err(|e| e.to_string()))
    {
        Ok(env) => {
            let mut shape_ok = true;
            for seg in 0..env.table.segments.len() {
                let rep = check_segment_shape(&env.table, seg, env.costs.max_rate());
                shape_ok &= rep.convex_ok && rep.lipschitz_ok;
            }
            check("oracle table convexity and Lipschitz bounds", shape_ok);
        }
        Err(e) => {
            eprintln!("  selftest environment failed: {e}");
            check("oracle table convexity and Lipschitz bounds", false);
        }
    }

    if ok {
        println!("selftest: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("selftest: FAILURES detected");
        ExitCode::FAILURE
    }
}

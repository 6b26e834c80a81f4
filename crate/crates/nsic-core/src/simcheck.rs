//! Independent verification of the counterfactual feedback engine.
//!
//! The checks here never go through the censored-update path they audit:
//! a [`DirectSim`] advances a fixed base-stock policy with the *true* demand
//! realizations, while the bank under test advances with whatever its
//! feedback model permits. The two cost streams must agree exactly whenever
//! the feedback conditions hold, the bank's post-replenishment stock must be
//! monotone in the level, and every shadow position must stay capped by its
//! level. These routines back the unit tests, the acceptance suite, and the
//! `selftest` command.

use rand::Rng;

use crate::counterfactual::{CounterfactualBank, PolicyGrid};
use crate::demand::DemandFamily;
use crate::inventory::{step_in_place, CostParams, InventoryModel, InventoryState};
use crate::rng::{stream_rng, StreamRng};

/// Fixed-policy simulator fed with true demands only.
#[derive(Debug, Clone)]
pub struct DirectSim {
    pub state: InventoryState,
    tau: f64,
    model: InventoryModel,
}

impl DirectSim {
    pub fn new(state: InventoryState, tau: f64, model: InventoryModel) -> Self {
        Self { state, tau, model }
    }

    pub fn step(&mut self, demand: f64, costs: &CostParams) -> f64 {
        let order = self.state.order_up_to(self.tau);
        let (_, c) = step_in_place(&mut self.state, order, demand, self.model, costs);
        c
    }
}

/// Closed-form long-run pseudo cost of a fixed level under zero lead time:
/// `(h + b) * E[(tau - D)^+] - b * tau`. With instantaneous replenishment the
/// pre-demand stock equals `tau` every period, so this is exact for both
/// inventory models.
pub fn newsvendor_pseudo_cost(family: &DemandFamily, tau: f64, costs: &CostParams) -> f64 {
    (costs.holding + costs.penalty) * family.expected_overage(tau) - costs.penalty * tau
}

/// Outcome of one equivalence scenario.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScenarioReport {
    pub steps_checked: u64,
    pub max_cost_gap: f64,
    pub dominance_violations: u64,
    pub position_cap_violations: u64,
}

impl ScenarioReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.max_cost_gap <= tol
            && self.dominance_violations == 0
            && self.position_cap_violations == 0
    }

    fn absorb(&mut self, other: &ScenarioReport) {
        self.steps_checked += other.steps_checked;
        self.max_cost_gap = self.max_cost_gap.max(other.max_cost_gap);
        self.dominance_violations += other.dominance_violations;
        self.position_cap_violations += other.position_cap_violations;
    }
}

fn check_caps(bank: &CounterfactualBank, upto: usize, report: &mut ScenarioReport) {
    for i in 0..upto {
        let tau = bank.grid().level(i);
        if bank.state(i).position() > tau + 1e-9 * tau.max(1.0) {
            report.position_cap_violations += 1;
        }
    }
}

fn check_dominance(
    bank: &CounterfactualBank,
    upto: usize,
    factual_avail: f64,
    report: &mut ScenarioReport,
) {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..upto {
        let s = bank.state(i);
        let arriving =
            if s.pipeline.is_empty() { s.order_up_to(bank.grid().level(i)) } else { s.pipeline[0] };
        let avail = s.on_hand + arriving;
        if avail < prev - 1e-9 {
            report.dominance_violations += 1;
        }
        prev = avail;
    }
    if factual_avail < prev - 1e-9 {
        report.dominance_violations += 1;
    }
}

/// Backlogging: the bank prices every level from the shared demand stream
/// and must match direct simulation bit for bit.
pub fn run_backlog_scenario(
    grid: &PolicyGrid,
    lead_time: usize,
    demands: &[f64],
    costs: &CostParams,
) -> ScenarioReport {
    let mut report = ScenarioReport::default();
    let mut bank = CounterfactualBank::init_zero(grid.clone(), lead_time);
    let mut direct: Vec<DirectSim> = grid
        .levels()
        .iter()
        .map(|&tau| DirectSim::new(InventoryState::zero(lead_time), tau, InventoryModel::Backlog))
        .collect();
    let mut buf = Vec::new();
    for (i, &d) in demands.iter().enumerate() {
        let t = i as u32 + 1;
        bank.advance_backlog(t, d, costs, &mut buf);
        for (idx, sim) in direct.iter_mut().enumerate() {
            let c = sim.step(d, costs);
            report.max_cost_gap = report.max_cost_gap.max((c - buf[idx]).abs());
            report.steps_checked += 1;
        }
        check_caps(&bank, grid.len(), &mut report);
    }
    report
}

/// Lost-sales, zero lead time: an arbitrary played sequence prices the
/// prefix at or below the played level; frozen levels must resume cleanly
/// from their held state.
pub fn run_ls_scenario(
    grid: &PolicyGrid,
    demands: &[f64],
    played_idx: &[usize],
    costs: &CostParams,
) -> ScenarioReport {
    assert_eq!(demands.len(), played_idx.len());
    let mut report = ScenarioReport::default();
    let mut bank = CounterfactualBank::init_zero(grid.clone(), 0);
    let mut factual = InventoryState::zero(0);
    let mut direct: Vec<DirectSim> = grid
        .levels()
        .iter()
        .map(|&tau| DirectSim::new(InventoryState::zero(0), tau, InventoryModel::LostSales))
        .collect();
    let mut last_updated: Vec<Option<u32>> = vec![None; grid.len()];
    let mut buf = Vec::new();
    for (i, (&d, &p)) in demands.iter().zip(played_idx).enumerate() {
        let t = i as u32 + 1;
        let played_tau = grid.level(p);
        let order = factual.order_up_to(played_tau);
        let factual_avail = factual.on_hand + order;
        let (sales, _) = step_in_place(&mut factual, order, d, InventoryModel::LostSales, costs);

        let valid_len = p + 1;
        // a level resuming after a frozen stretch restarts its direct twin
        // from the held shadow state, the start state the feedback
        // conditions require
        for (idx, last) in last_updated.iter_mut().enumerate().take(valid_len) {
            if *last != Some(t - 1) {
                direct[idx] =
                    DirectSim::new(bank.state(idx).clone(), grid.level(idx), InventoryModel::LostSales);
            }
            *last = Some(t);
        }
        check_dominance(&bank, valid_len, factual_avail, &mut report);
        bank.advance_lost_sales(t, valid_len, sales, costs, &mut buf);
        for idx in 0..valid_len {
            let c = direct[idx].step(d, costs);
            report.max_cost_gap = report.max_cost_gap.max((c - buf[idx]).abs());
            report.steps_checked += 1;
        }
        check_caps(&bank, grid.len(), &mut report);
    }
    report
}

/// Lost-sales with positive lead time: targets only decrease, orders stop
/// while the position drains, and each drain point reseeds the bank through
/// the capped reset. Within every post-reset stretch the tracked prefix must
/// match direct simulation started from the reset vectors.
pub fn run_lsl_scenario(
    grid: &PolicyGrid,
    lead_time: usize,
    demands: &[f64],
    targets_idx: &[usize],
    costs: &CostParams,
) -> ScenarioReport {
    assert!(lead_time >= 1);
    assert_eq!(demands.len(), targets_idx.len());
    assert!(targets_idx.windows(2).all(|w| w[1] <= w[0]), "targets must be non-increasing");
    let mut report = ScenarioReport::default();
    let mut bank = CounterfactualBank::init_zero(grid.clone(), lead_time);
    let mut factual = InventoryState::zero(lead_time);
    let mut direct: Vec<DirectSim> = grid
        .levels()
        .iter()
        .map(|&tau| DirectSim::new(InventoryState::zero(lead_time), tau, InventoryModel::LostSales))
        .collect();
    let mut ready = false;
    let mut prev_target = usize::MAX;
    let mut buf = Vec::new();
    for (i, (&d, &target)) in demands.iter().zip(targets_idx).enumerate() {
        let t = i as u32 + 1;
        if target != prev_target {
            ready = false;
            prev_target = target;
        }
        let tau_cur = grid.level(target);
        if !ready && factual.position() <= tau_cur + 1e-9 * tau_cur.max(1.0) {
            bank.reset_lsl(&factual, tau_cur).expect("position drained below target");
            for (idx, sim) in direct.iter_mut().enumerate().take(target + 1) {
                *sim = DirectSim::new(
                    bank.state(idx).clone(),
                    grid.level(idx),
                    InventoryModel::LostSales,
                );
            }
            ready = true;
        }
        let order = factual.order_up_to(tau_cur);
        let factual_avail =
            factual.on_hand + if factual.pipeline.is_empty() { order } else { factual.pipeline[0] };
        let (sales, _) = step_in_place(&mut factual, order, d, InventoryModel::LostSales, costs);
        if ready {
            let valid_len = target + 1;
            check_dominance(&bank, valid_len, factual_avail, &mut report);
            bank.advance_lost_sales(t, valid_len, sales, costs, &mut buf);
            for idx in 0..valid_len {
                let c = direct[idx].step(d, costs);
                report.max_cost_gap = report.max_cost_gap.max((c - buf[idx]).abs());
                report.steps_checked += 1;
            }
            check_caps(&bank, valid_len, &mut report);
        }
    }
    report
}

/// One randomized scenario drawn from the full cross of models, lead times,
/// grids, demand families, and played sequences.
pub fn run_random_scenario(rng: &mut StreamRng) -> ScenarioReport {
    let horizon = rng.random_range(40..160usize);
    let max_level = 2.0 + 28.0 * rng.random::<f64>();
    let divisions = rng.random_range(2..12usize);
    let grid = PolicyGrid::new(max_level / divisions as f64, max_level).unwrap();
    let costs = CostParams::new(0.5 + 2.0 * rng.random::<f64>(), 1.0 + 30.0 * rng.random::<f64>())
        .unwrap();
    let family = match rng.random_range(0..4u8) {
        0 => DemandFamily::TruncNormal { mean: max_level / 2.0, sd: max_level / 4.0 },
        1 => DemandFamily::Uniform { lower: 0.0, width: max_level },
        2 => DemandFamily::Poisson { rate: (max_level / 2.0).max(0.5) },
        _ => DemandFamily::Exponential { rate: 2.0 / max_level },
    };
    let demands: Vec<f64> = (0..horizon).map(|_| family.sample(rng)).collect();

    match rng.random_range(0..3u8) {
        0 => {
            let lead = [0usize, 2, 5][rng.random_range(0..3usize)];
            run_backlog_scenario(&grid, lead, &demands, &costs)
        }
        1 => {
            // random walk over grid indices
            let mut idx = grid.top_index();
            let played: Vec<usize> = (0..horizon)
                .map(|_| {
                    let step = rng.random_range(0..5u8);
                    idx = match step {
                        0 => idx.saturating_sub(1),
                        1 => (idx + 1).min(grid.top_index()),
                        2 => rng.random_range(0..grid.len()),
                        _ => idx,
                    };
                    idx
                })
                .collect();
            run_ls_scenario(&grid, &demands, &played, &costs)
        }
        _ => {
            let lead = [2usize, 5][rng.random_range(0..2usize)];
            // non-increasing targets with a few random drops
            let mut target = grid.top_index();
            let targets: Vec<usize> = (0..horizon)
                .map(|_| {
                    if target > 0 && rng.random::<f64>() < 0.05 {
                        target -= rng.random_range(1..=target.min(3));
                    }
                    target
                })
                .collect();
            run_lsl_scenario(&grid, lead, &demands, &targets, &costs)
        }
    }
}

/// Run `n` randomized scenarios and merge the reports.
pub fn run_equivalence_suite(n: u32, seed: u64) -> ScenarioReport {
    let mut total = ScenarioReport::default();
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64, 7);
        let report = run_random_scenario(&mut rng);
        total.absorb(&report);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backlog_bank_matches_direct_sim_exactly() {
        let grid = PolicyGrid::new(2.0, 10.0).unwrap();
        let costs = CostParams::new(1.0, 9.0).unwrap();
        let mut rng = stream_rng(31, 0, 0);
        let fam = DemandFamily::Poisson { rate: 4.0 };
        let demands: Vec<f64> = (0..300).map(|_| fam.sample(&mut rng)).collect();
        for lead in [0usize, 2, 5] {
            let rep = run_backlog_scenario(&grid, lead, &demands, &costs);
            assert_eq!(rep.max_cost_gap, 0.0, "lead {lead}");
            assert!(rep.ok(1e-12));
        }
    }

    #[test]
    fn ls_played_level_reproduces_factual_trace() {
        let grid = PolicyGrid::new(1.0, 6.0).unwrap();
        let costs = CostParams::new(1.0, 9.0).unwrap();
        let mut rng = stream_rng(32, 0, 0);
        let fam = DemandFamily::Uniform { lower: 0.0, width: 6.0 };
        let demands: Vec<f64> = (0..200).map(|_| fam.sample(&mut rng)).collect();
        // constant played sequence: the top-level stream is the factual one
        let played = vec![grid.top_index(); 200];
        let rep = run_ls_scenario(&grid, &demands, &played, &costs);
        assert!(rep.ok(1e-12), "{rep:?}");
        assert_eq!(rep.max_cost_gap, 0.0);
    }

    #[test]
    fn ls_random_play_with_freezes_still_exact() {
        let grid = PolicyGrid::new(1.5, 9.0).unwrap();
        let costs = CostParams::new(1.0, 19.0).unwrap();
        let mut rng = stream_rng(33, 0, 0);
        let fam = DemandFamily::Poisson { rate: 5.0 };
        let demands: Vec<f64> = (0..400).map(|_| fam.sample(&mut rng)).collect();
        let played: Vec<usize> = (0..400).map(|_| rng.random_range(0..grid.len())).collect();
        let rep = run_ls_scenario(&grid, &demands, &played, &costs);
        assert!(rep.ok(1e-12), "{rep:?}");
    }

    #[test]
    fn lsl_reductions_and_resets_stay_exact() {
        let grid = PolicyGrid::new(2.0, 12.0).unwrap();
        let costs = CostParams::new(1.0, 9.0).unwrap();
        let mut rng = stream_rng(34, 0, 0);
        let fam = DemandFamily::Uniform { lower: 1.0, width: 4.0 };
        let demands: Vec<f64> = (0..300).map(|_| fam.sample(&mut rng)).collect();
        let mut targets = Vec::new();
        let mut cur = grid.top_index();
        for i in 0..300 {
            if i == 60 || i == 140 || i == 220 {
                cur = cur.saturating_sub(2);
            }
            targets.push(cur);
        }
        let rep = run_lsl_scenario(&grid, 2, &demands, &targets, &costs);
        assert!(rep.ok(1e-12), "{rep:?}");
        assert!(rep.steps_checked > 0);
    }

    #[test]
    fn randomized_suite_is_exact() {
        let rep = run_equivalence_suite(60, 99);
        assert!(rep.ok(1e-12), "{rep:?}");
        assert!(rep.steps_checked > 10_000);
    }

    #[test]
    fn newsvendor_closed_form_matches_simulation() {
        let costs = CostParams::new(1.0, 9.0).unwrap();
        let fam = DemandFamily::Uniform { lower: 2.0, width: 6.0 };
        let tau = 6.5;
        let analytic = newsvendor_pseudo_cost(&fam, tau, &costs);
        let mut rng = stream_rng(35, 0, 0);
        let demands: Vec<f64> = (0..200_000).map(|_| fam.sample(&mut rng)).collect();
        let (mc, se) = crate::benchmark::fixed_policy_mean(
            &demands,
            tau,
            0,
            InventoryModel::LostSales,
            &costs,
        );
        assert!(
            (mc - analytic).abs() < 4.0 * se.max(1e-3),
            "analytic {analytic} vs mc {mc} (se {se})"
        );
    }
}

//! The central check behind the whole feedback engine: counterfactual cost
//! streams must be indistinguishable from directly simulating each fixed
//! policy, whenever the feedback conditions hold.

use nsic_core::counterfactual::PolicyGrid;
use nsic_core::demand::DemandFamily;
use nsic_core::inventory::CostParams;
use nsic_core::rng::stream_rng;
use nsic_core::simcheck::{
    run_backlog_scenario, run_equivalence_suite, run_ls_scenario, run_lsl_scenario,
};

#[test]
fn randomized_equivalence_suite_is_exact() {
    let report = run_equivalence_suite(250, 4242);
    assert!(report.ok(1e-12), "{report:?}");
    assert!(report.steps_checked > 50_000);
}

/// Fixed-seed scenarios with every lead time the experiments use.
#[test]
fn pinned_scenarios_cover_all_lead_times() {
    let costs = CostParams::new(1.0, 49.0).unwrap();
    let grid = PolicyGrid::new(7.0, 70.0).unwrap();
    let fam = DemandFamily::TruncNormal { mean: 30.0, sd: 20.0 };
    let mut rng = stream_rng(55, 0, 0);
    let demands: Vec<f64> = (0..500).map(|_| fam.sample(&mut rng)).collect();

    for lead in [0usize, 2, 5] {
        let rep = run_backlog_scenario(&grid, lead, &demands, &costs);
        assert_eq!(rep.max_cost_gap, 0.0, "backlog L={lead} must be bit-exact");
        assert!(rep.ok(1e-12));
    }

    let played: Vec<usize> = (0..500).map(|i| (i / 40) % grid.len()).collect();
    let rep = run_ls_scenario(&grid, &demands, &played, &costs);
    assert!(rep.ok(1e-12), "lost-sales L=0: {rep:?}");

    for lead in [2usize, 5] {
        let mut target = grid.top_index();
        let targets: Vec<usize> = (0..500)
            .map(|i| {
                if i % 120 == 119 && target > 0 {
                    target -= 1;
                }
                target
            })
            .collect();
        let rep = run_lsl_scenario(&grid, lead, &demands, &targets, &costs);
        assert!(rep.ok(1e-12), "lost-sales L={lead}: {rep:?}");
        assert!(rep.steps_checked > 0);
    }
}

/// Degenerate corners: zero demand everywhere, all-zero grid level, and a
/// policy that never orders.
#[test]
fn degenerate_streams_stay_exact() {
    let costs = CostParams::new(2.0, 5.0).unwrap();
    let grid = PolicyGrid::new(1.0, 3.0).unwrap();
    let zeros = vec![0.0; 100];
    let rep = run_backlog_scenario(&grid, 2, &zeros, &costs);
    assert_eq!(rep.max_cost_gap, 0.0);
    let played = vec![grid.top_index(); 100];
    let rep = run_ls_scenario(&grid, &zeros, &played, &costs);
    assert_eq!(rep.max_cost_gap, 0.0);
    let played = vec![0usize; 100];
    let fam = DemandFamily::Exponential { rate: 0.8 };
    let mut rng = stream_rng(56, 0, 0);
    let demands: Vec<f64> = (0..100).map(|_| fam.sample(&mut rng)).collect();
    let rep = run_ls_scenario(&grid, &demands, &played, &costs);
    assert!(rep.ok(1e-12));
}

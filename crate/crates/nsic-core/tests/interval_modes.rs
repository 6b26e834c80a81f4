//! The pruned candidate-window scheme against the exhaustive scan it
//! replaces, at horizons where the exhaustive scan is feasible.

use nsic_core::agent::{AlgoConfig, AlgoKind, IntervalMode, LearningAgent, NsicAgent};
use nsic_core::counterfactual::PolicyGrid;
use nsic_core::inventory::{CostParams, InventoryModel, SystemConfig};
use nsic_core::rng::stream_rng;

fn run(mode: IntervalMode, demands: &[f64]) -> (Option<u32>, u32) {
    let system = SystemConfig::new(InventoryModel::LostSales, 0, 6.0, 400).unwrap();
    let costs = CostParams::new(1.0, 9.0).unwrap();
    let mut cfg = AlgoConfig::theory_defaults(AlgoKind::Ls, system, costs, 1.0);
    cfg.grid = PolicyGrid::new(1.0, 6.0).unwrap();
    cfg.conf.grid_step = 1.0;
    cfg.conf.scale = 3e-5;
    cfg.conf.change_scale = 3e-4;
    cfg.min_window_len = 8;
    cfg.interval_mode = mode;
    let mut agent = NsicAgent::new(cfg).unwrap();
    let mut rng = stream_rng(91, 0, 3);
    let mut first_restart = None;
    for (i, &d) in demands.iter().enumerate() {
        let rec = agent.act(i as u32 + 1, d, &mut rng);
        if rec.restarted && first_restart.is_none() {
            first_restart = Some(i as u32 + 1);
        }
    }
    (first_restart, agent.restarts())
}

#[test]
fn exhaustive_and_pruned_agree_on_a_clean_change() {
    let mut demands = vec![2.0; 200];
    demands.extend(vec![5.0; 200]);
    let (pruned_at, pruned_restarts) = run(IntervalMode::Pruned, &demands);
    let (exhaustive_at, exhaustive_restarts) = run(IntervalMode::Exhaustive, &demands);
    let p = pruned_at.expect("pruned scheme detects the switch");
    let e = exhaustive_at.expect("exhaustive scan detects the switch");
    assert!(e <= p, "exhaustive ({e}) cannot be slower than pruned ({p})");
    assert!(p - e <= 16, "pruning may cost at most a doubling of the delay");
    assert_eq!(pruned_restarts, exhaustive_restarts);
}

#[test]
fn both_modes_quiet_on_stationary_demand() {
    let mut rng = stream_rng(92, 0, 1);
    let fam = nsic_core::demand::DemandFamily::Uniform { lower: 2.0, width: 2.0 };
    let demands: Vec<f64> = (0..400).map(|_| fam.sample(&mut rng)).collect();
    let (at_p, n_p) = run(IntervalMode::Pruned, &demands);
    let (at_e, n_e) = run(IntervalMode::Exhaustive, &demands);
    assert_eq!((at_p, n_p), (None, 0));
    assert_eq!((at_e, n_e), (None, 0));
}

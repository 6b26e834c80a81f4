//! Physical inventory dynamics for a single-item, periodic-review system
//! under base-stock ordering.
//!
//! A period unfolds as: place an order, receive the order placed `L` periods
//! ago, observe demand, pay holding/shortage cost. Unmet demand is either
//! carried forward as negative stock (backlogging) or lost and censored
//! (lost-sales). Costs are tracked as the observable pseudo cost, which
//! differs from the true cost by `b * demand`, a policy-independent term.

use thiserror::Error;

/// How unmet demand is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InventoryModel {
    /// Unmet demand carries over; on-hand stock may go negative and the full
    /// demand realization is observed each period.
    Backlog,
    /// Unmet demand is lost; only sales are observed.
    LostSales,
}

#[derive(Debug, Error, PartialEq)]
pub enum InventoryError {
    #[error("invalid cost parameters: holding={holding}, penalty={penalty}")]
    InvalidCosts { holding: f64, penalty: f64 },
    #[error("invalid system config: {0}")]
    InvalidConfig(String),
    #[error("invalid inventory state: {0}")]
    InvalidState(String),
}

/// Per-unit, per-period cost rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Holding cost per unit of leftover stock.
    pub holding: f64,
    /// Shortage (backlog or lost-sales) penalty per unit.
    pub penalty: f64,
}

impl CostParams {
    pub fn new(holding: f64, penalty: f64) -> Result<Self, InventoryError> {
        if !(holding >= 0.0) || !(penalty >= 0.0) || (holding == 0.0 && penalty == 0.0) {
            return Err(InventoryError::InvalidCosts { holding, penalty });
        }
        Ok(Self { holding, penalty })
    }

    /// Lipschitz factor of the average cost in the base-stock level.
    pub fn max_rate(&self) -> f64 {
        self.holding.max(self.penalty)
    }
}

/// Static description of one inventory system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub model: InventoryModel,
    /// Deterministic delay, in periods, between placing and receiving an order.
    pub lead_time: usize,
    /// Upper bound on the optimal base-stock level; the policy space is [0, max_level].
    pub max_level: f64,
    /// Number of periods.
    pub horizon: u32,
}

impl SystemConfig {
    pub fn new(
        model: InventoryModel,
        lead_time: usize,
        max_level: f64,
        horizon: u32,
    ) -> Result<Self, InventoryError> {
        if !(max_level > 0.0) {
            return Err(InventoryError::InvalidConfig(format!(
                "max_level must be positive, got {max_level}"
            )));
        }
        if horizon < 1 {
            return Err(InventoryError::InvalidConfig("horizon must be >= 1".into()));
        }
        Ok(Self { model, lead_time, max_level, horizon })
    }
}

/// On-hand stock plus the in-transit order pipeline, oldest order first.
///
/// `pipeline.len()` equals the lead time; `pipeline[0]` is the order that
/// arrives next.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryState {
    pub on_hand: f64,
    pub pipeline: Vec<f64>,
}

impl InventoryState {
    /// The empty system: no stock, nothing in transit.
    pub fn zero(lead_time: usize) -> Self {
        Self { on_hand: 0.0, pipeline: vec![0.0; lead_time] }
    }

    pub fn new(
        on_hand: f64,
        pipeline: Vec<f64>,
        model: InventoryModel,
    ) -> Result<Self, InventoryError> {
        if pipeline.iter().any(|&q| !(q >= 0.0)) {
            return Err(InventoryError::InvalidState("pipeline entries must be >= 0".into()));
        }
        if model == InventoryModel::LostSales && !(on_hand >= 0.0) {
            return Err(InventoryError::InvalidState(
                "on-hand stock must be >= 0 under lost-sales".into(),
            ));
        }
        Ok(Self { on_hand, pipeline })
    }

    /// Inventory position: on-hand plus everything in transit (minus backlog).
    pub fn position(&self) -> f64 {
        self.on_hand + self.pipeline.iter().sum::<f64>()
    }

    /// Order quantity that raises the inventory position up to `target`.
    /// Never negative; zero whenever the position already exceeds the target.
    pub fn order_up_to(&self, target: f64) -> f64 {
        debug_assert!(target >= 0.0, "base-stock target must be >= 0");
        (target - self.position()).max(0.0)
    }
}

/// What the decision maker sees after a period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Full demand realization (backlogging).
    Demand(f64),
    /// Sales only (lost-sales; demand is censored).
    Sales(f64),
}

/// Result of one period of the physical system.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Quantity sold or backlogged, `min(available, demand)`. May be negative
    /// under backlogging when the system starts the period short.
    pub sales: f64,
    /// Pseudo cost `h*(available - sales) - b*sales`.
    pub pseudo_cost: f64,
    pub observation: Observation,
    pub next_state: InventoryState,
}

/// Advance `state` by one period. The oldest pipeline slot arrives (or the
/// order itself when the lead time is zero), demand is realized, and the
/// pipeline shifts with `order` appended.
pub fn transition(
    state: &InventoryState,
    order: f64,
    demand: f64,
    model: InventoryModel,
    costs: &CostParams,
) -> StepOutcome {
    let mut next = state.clone();
    let (sales, pseudo_cost) = step_in_place(&mut next, order, demand, model, costs);
    let observation = match model {
        InventoryModel::Backlog => Observation::Demand(demand),
        InventoryModel::LostSales => Observation::Sales(sales),
    };
    StepOutcome { sales, pseudo_cost, observation, next_state: next }
}

/// Allocation-free variant of [`transition`] for simulation inner loops.
/// Returns `(sales, pseudo_cost)`.
pub fn step_in_place(
    state: &mut InventoryState,
    order: f64,
    demand: f64,
    model: InventoryModel,
    costs: &CostParams,
) -> (f64, f64) {
    assert!(order >= 0.0, "order must be >= 0, got {order}");
    assert!(demand >= 0.0, "demand must be >= 0, got {demand}");
    let arriving = if state.pipeline.is_empty() { order } else { state.pipeline[0] };
    let available = state.on_hand + arriving;
    let sales = available.min(demand);
    let pseudo_cost = costs.holding * (available - sales) - costs.penalty * sales;
    state.on_hand = match model {
        InventoryModel::Backlog => available - demand,
        InventoryModel::LostSales => (available - demand).max(0.0),
    };
    if !state.pipeline.is_empty() {
        state.pipeline.rotate_left(1);
        let last = state.pipeline.len() - 1;
        state.pipeline[last] = order;
    }
    (sales, pseudo_cost)
}

/// One period of a lost-sales system driven by a sales cap instead of the
/// demand itself: sales are `min(available, cap)`. This is the update a
/// shadow state performs when the true demand is censored and only the
/// factual sales are known.
pub fn step_censored(
    state: &mut InventoryState,
    order: f64,
    sales_cap: f64,
    costs: &CostParams,
) -> (f64, f64) {
    debug_assert!(order >= 0.0 && sales_cap >= 0.0);
    let arriving = if state.pipeline.is_empty() { order } else { state.pipeline[0] };
    let available = state.on_hand + arriving;
    let sales = available.min(sales_cap);
    let pseudo_cost = costs.holding * (available - sales) - costs.penalty * sales;
    state.on_hand = available - sales;
    if !state.pipeline.is_empty() {
        state.pipeline.rotate_left(1);
        let last = state.pipeline.len() - 1;
        state.pipeline[last] = order;
    }
    (sales, pseudo_cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HB: CostParams = CostParams { holding: 1.0, penalty: 49.0 };

    #[test]
    fn position_sums_stock_and_pipeline() {
        assert_eq!(InventoryState { on_hand: 0.0, pipeline: vec![] }.position(), 0.0);
        assert_eq!(InventoryState { on_hand: -2.0, pipeline: vec![1.0] }.position(), -1.0);
        assert_eq!(InventoryState { on_hand: 3.0, pipeline: vec![2.0, 5.0] }.position(), 10.0);
    }

    #[test]
    fn order_up_to_is_clamped_shortfall() {
        let s = InventoryState { on_hand: 10.0, pipeline: vec![] };
        assert_eq!(s.order_up_to(4.0), 0.0);
        let s = InventoryState { on_hand: -2.0, pipeline: vec![1.0] };
        assert_eq!(s.order_up_to(4.0), 5.0);
        let s = InventoryState { on_hand: 0.0, pipeline: vec![0.0, 0.0] };
        assert_eq!(s.order_up_to(7.0), 7.0);
        // position plus the ordered quantity tops out at the target exactly
        // whenever the target exceeds the position
        let s = InventoryState { on_hand: -3.5, pipeline: vec![2.0, 0.25] };
        assert_eq!(s.position() + s.order_up_to(9.0), 9.0);
    }

    #[test]
    fn backlog_transition_goes_negative() {
        // available 5, demand 7
        let s = InventoryState { on_hand: 5.0, pipeline: vec![] };
        let out = transition(&s, 0.0, 7.0, InventoryModel::Backlog, &HB);
        assert_eq!(out.sales, 5.0);
        assert_eq!(out.pseudo_cost, -245.0);
        assert_eq!(out.next_state.on_hand, -2.0);
        assert_eq!(out.observation, Observation::Demand(7.0));
    }

    #[test]
    fn lost_sales_transition_censors_at_zero() {
        let s = InventoryState { on_hand: 5.0, pipeline: vec![] };
        let out = transition(&s, 0.0, 7.0, InventoryModel::LostSales, &HB);
        assert_eq!(out.sales, 5.0);
        assert_eq!(out.pseudo_cost, -245.0);
        assert_eq!(out.next_state.on_hand, 0.0);
        assert_eq!(out.observation, Observation::Sales(5.0));
    }

    #[test]
    fn lost_sales_leftover_pays_holding() {
        let s = InventoryState { on_hand: 10.0, pipeline: vec![] };
        let out = transition(&s, 0.0, 4.0, InventoryModel::LostSales, &HB);
        assert_eq!(out.sales, 4.0);
        assert_eq!(out.pseudo_cost, 6.0 - 196.0);
        assert_eq!(out.next_state.on_hand, 6.0);
    }

    #[test]
    fn zero_lead_time_order_arrives_same_period() {
        let s = InventoryState::zero(0);
        let out = transition(&s, 7.0, 7.0, InventoryModel::LostSales, &HB);
        assert_eq!(out.sales, 7.0);
        assert_eq!(out.next_state.on_hand, 0.0);
    }

    #[test]
    fn pipeline_shifts_and_appends() {
        let s = InventoryState { on_hand: 0.0, pipeline: vec![3.0, 1.0] };
        let out = transition(&s, 9.0, 2.0, InventoryModel::LostSales, &HB);
        // the oldest slot (3.0) arrived; the new order lands at the back
        assert_eq!(out.next_state.pipeline, vec![1.0, 9.0]);
        assert_eq!(out.next_state.on_hand, 1.0);
    }

    #[test]
    fn cost_params_reject_degenerate_values() {
        assert!(CostParams::new(-1.0, 2.0).is_err());
        assert!(CostParams::new(0.0, 0.0).is_err());
        assert!(CostParams::new(0.0, 49.0).is_ok());
        assert_eq!(CostParams::new(1.0, 49.0).unwrap().max_rate(), 49.0);
    }

    #[test]
    fn censored_step_matches_cap_rule() {
        let costs = CostParams::new(1.0, 1.0).unwrap();
        // counterfactual available 3, observed factual sales 5 -> stockout
        let mut s = InventoryState { on_hand: 3.0, pipeline: vec![] };
        let (y, _) = step_censored(&mut s, 0.0, 5.0, &costs);
        assert_eq!(y, 3.0);
        assert_eq!(s.on_hand, 0.0);
        // counterfactual available 3, observed sales 2 -> leftover 1
        let mut s = InventoryState { on_hand: 3.0, pipeline: vec![] };
        let (y, _) = step_censored(&mut s, 0.0, 2.0, &costs);
        assert_eq!(y, 2.0);
        assert_eq!(s.on_hand, 1.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// pseudo_cost + b*demand == h*[avail-D]^+ + b*[D-avail]^+ exactly.
            #[test]
            fn cost_identity(on_hand in -50.0f64..50.0, arriving in 0.0f64..30.0,
                             demand in 0.0f64..60.0, h in 0.0f64..5.0, b in 0.1f64..50.0) {
                let costs = CostParams::new(h, b).unwrap();
                for model in [InventoryModel::Backlog, InventoryModel::LostSales] {
                    let oh = if model == InventoryModel::LostSales { on_hand.abs() } else { on_hand };
                    let s = InventoryState { on_hand: oh, pipeline: vec![arriving] };
                    let out = transition(&s, 0.0, demand, model, &costs);
                    let avail = oh + arriving;
                    let truth = h * (avail - demand).max(0.0) + b * (demand - avail).max(0.0);
                    // algebraically exact; the two evaluation orders differ
                    // by at most one ulp per term
                    let got = out.pseudo_cost + b * demand;
                    prop_assert!((got - truth).abs() <= 1e-12 * (1.0 + truth.abs()));
                }
            }

            /// A fixed base-stock policy from the zero state never pushes the
            /// position above its target, in either model.
            #[test]
            fn position_never_exceeds_target(tau in 0.0f64..40.0, lead in 0usize..4,
                                             demands in prop::collection::vec(0.0f64..30.0, 1..60)) {
                let costs = CostParams::new(1.0, 9.0).unwrap();
                for model in [InventoryModel::Backlog, InventoryModel::LostSales] {
                    let mut s = InventoryState::zero(lead);
                    for &d in &demands {
                        let q = s.order_up_to(tau);
                        let (_, _) = step_in_place(&mut s, q, d, model, &costs);
                        prop_assert!(s.position() <= tau + 1e-9);
                        if model == InventoryModel::LostSales {
                            prop_assert!(s.on_hand >= 0.0);
                        }
                    }
                }
            }

            /// Identical inputs yield bit-identical outputs.
            #[test]
            fn transition_is_deterministic(on_hand in 0.0f64..20.0, demand in 0.0f64..20.0) {
                let s = InventoryState { on_hand, pipeline: vec![1.5, 0.5] };
                let a = transition(&s, 2.0, demand, InventoryModel::LostSales, &HB);
                let b = transition(&s, 2.0, demand, InventoryModel::LostSales, &HB);
                prop_assert_eq!(a, b);
            }
        }
    }
}

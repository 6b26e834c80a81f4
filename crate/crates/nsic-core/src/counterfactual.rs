//! Shadow inventory states that let one played base-stock level price every
//! other level on the grid.
//!
//! Under backlogging the demand itself is observed, so every grid level can
//! be advanced with the shared demand. Under lost-sales only the factual
//! sales are observed; a shadow state for a lower level advances with
//! `min(its availability, observed sales)`, which equals its true sales as
//! long as the played level dominates it in post-replenishment stock. The
//! bank maintains exactly that dominance: each state starts at zero (or at a
//! reset vector capped below its level) and is only advanced while its level
//! is at most the played one.

use thiserror::Error;

use crate::inventory::{step_censored, step_in_place, CostParams, InventoryModel, InventoryState};

#[derive(Debug, Error, PartialEq)]
pub enum CounterfactualError {
    #[error("grid step must be positive and at most max_level, got step={step}, max={max_level}")]
    BadGrid { step: f64, max_level: f64 },
    #[error("reset requires factual position {position} <= cap {cap}")]
    ResetAbovePosition { position: f64, cap: f64 },
}

/// Discretization of the base-stock continuum: `{0, g, 2g, ..., floor(U/g)*g, U}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrid {
    step: f64,
    max_level: f64,
    levels: Vec<f64>,
}

impl PolicyGrid {
    pub fn new(step: f64, max_level: f64) -> Result<Self, CounterfactualError> {
        if !(step > 0.0) || !(max_level > 0.0) {
            return Err(CounterfactualError::BadGrid { step, max_level });
        }
        let mut levels = Vec::new();
        let mut k = 0u64;
        loop {
            let x = k as f64 * step;
            if x >= max_level * (1.0 - 1e-12) {
                break;
            }
            levels.push(x);
            k += 1;
        }
        levels.push(max_level);
        Ok(Self { step, max_level, levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn max_level(&self) -> f64 {
        self.max_level
    }

    pub fn level(&self, idx: usize) -> f64 {
        self.levels[idx]
    }

    pub fn top_index(&self) -> usize {
        self.levels.len() - 1
    }

    /// Index of the grid level closest to `tau`; ties go to the smaller level.
    pub fn nearest_index(&self, tau: f64) -> usize {
        match self.levels.binary_search_by(|x| x.partial_cmp(&tau).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.levels.len() => self.levels.len() - 1,
            Err(i) => {
                if tau - self.levels[i - 1] <= self.levels[i] - tau {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Largest index whose level is `<= tau` (with a small tolerance).
    pub fn prefix_len_at_or_below(&self, tau: f64) -> usize {
        let tol = 1e-9 * self.max_level.max(1.0);
        self.levels.iter().take_while(|&&x| x <= tau + tol).count()
    }
}

/// Grid levels whose costs are observable this period, as a prefix length of
/// the sorted grid: the whole grid under backlogging, `{tau <= played}` under
/// lost-sales.
pub fn valid_policies(model: InventoryModel, played_tau: f64, grid: &PolicyGrid) -> usize {
    match model {
        InventoryModel::Backlog => grid.len(),
        InventoryModel::LostSales => grid.prefix_len_at_or_below(played_tau),
    }
}

/// One shadow inventory state per grid level, each evolved under its fixed
/// base-stock policy, plus a per-level segment counter that increments
/// whenever that level's cost stream is interrupted or reset.
#[derive(Debug, Clone)]
pub struct CounterfactualBank {
    grid: PolicyGrid,
    states: Vec<InventoryState>,
    segment_ids: Vec<u32>,
    last_updated: Vec<Option<u32>>,
}

impl CounterfactualBank {
    /// All shadow states start as the zero vector.
    pub fn init_zero(grid: PolicyGrid, lead_time: usize) -> Self {
        let n = grid.len();
        Self {
            grid,
            states: vec![InventoryState::zero(lead_time); n],
            segment_ids: vec![0; n],
            last_updated: vec![None; n],
        }
    }

    pub fn grid(&self) -> &PolicyGrid {
        &self.grid
    }

    pub fn state(&self, idx: usize) -> &InventoryState {
        &self.states[idx]
    }

    pub fn segment_id(&self, idx: usize) -> u32 {
        self.segment_ids[idx]
    }

    /// Advance every level with the shared demand realization (backlogging).
    /// `costs_out[i]` receives the period's pseudo cost for level `i`.
    pub fn advance_backlog(
        &mut self,
        t: u32,
        demand: f64,
        costs: &CostParams,
        costs_out: &mut Vec<f64>,
    ) {
        costs_out.clear();
        for i in 0..self.states.len() {
            let tau = self.grid.levels[i];
            let state = &mut self.states[i];
            let order = state.order_up_to(tau);
            let (_, c) = step_in_place(state, order, demand, InventoryModel::Backlog, costs);
            costs_out.push(c);
            debug_assert!(self.states[i].position() <= tau + 1e-9 * tau.max(1.0));
            self.note_update(i, t);
        }
    }

    /// Advance the first `valid_len` levels with the observed factual sales
    /// as the cap (lost-sales). Levels outside the prefix stay frozen; their
    /// segment counter bumps when they next resume.
    pub fn advance_lost_sales(
        &mut self,
        t: u32,
        valid_len: usize,
        sales_cap: f64,
        costs: &CostParams,
        costs_out: &mut Vec<f64>,
    ) {
        assert!(valid_len <= self.states.len());
        assert!(sales_cap >= 0.0);
        costs_out.clear();
        for i in 0..valid_len {
            let tau = self.grid.levels[i];
            let state = &mut self.states[i];
            let order = state.order_up_to(tau);
            let (_, c) = step_censored(state, order, sales_cap, costs);
            costs_out.push(c);
            debug_assert!(self.states[i].position() <= tau + 1e-9 * tau.max(1.0));
            self.note_update(i, t);
        }
    }

    fn note_update(&mut self, idx: usize, t: u32) {
        match self.last_updated[idx] {
            Some(prev) if prev + 1 == t => {}
            Some(_) => self.segment_ids[idx] += 1,
            None => {}
        }
        self.last_updated[idx] = Some(t);
    }

    /// Re-seed every level at or below `tau_cap` from the factual pre-order
    /// state, capping each slot so the shadow vector is dominated by the
    /// factual one and its position never exceeds its level. Every level's
    /// segment counter is incremented.
    pub fn reset_lsl(
        &mut self,
        factual: &InventoryState,
        tau_cap: f64,
    ) -> Result<(), CounterfactualError> {
        let position = factual.position();
        if position > tau_cap + 1e-9 * tau_cap.max(1.0) {
            return Err(CounterfactualError::ResetAbovePosition { position, cap: tau_cap });
        }
        let tol = 1e-9 * self.grid.max_level.max(1.0);
        for i in 0..self.states.len() {
            let tau = self.grid.levels[i];
            if tau > tau_cap + tol {
                continue;
            }
            let state = &mut self.states[i];
            state.on_hand = tau.min(factual.on_hand);
            let mut running = state.on_hand;
            for (slot, &q) in state.pipeline.iter_mut().zip(factual.pipeline.iter()) {
                *slot = q.min(tau - running);
                running += *slot;
            }
            debug_assert!(state.position() <= tau + 1e-9);
        }
        for id in &mut self.segment_ids {
            *id += 1;
        }
        for lu in &mut self.last_updated {
            *lu = None;
        }
        Ok(())
    }
}

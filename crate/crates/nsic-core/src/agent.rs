//! Step-driven learners that pick a base-stock level each period, price the
//! whole policy grid through counterfactual feedback, eliminate levels that
//! test suboptimal, and restart from scratch when a distribution change is
//! detected.
//!
//! Time is organized into episodes (between detected changes) and epochs
//! (stretches of one played level within an episode). The played level is
//! always the largest surviving one, which maximizes how much of the grid
//! the feedback structure can price.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::counterfactual::{valid_policies, CounterfactualBank, PolicyGrid};
use crate::estimation::{
    anchored_windows, argmin_mean, candidate_intervals, change_evicted_check, change_pair_check,
    elimination_violators, separation_check, ConfidenceParams, EvictionRecord, IntervalStats,
    Window,
};
use crate::inventory::{step_in_place, CostParams, InventoryModel, InventoryState, SystemConfig};
use crate::rng::StreamRng;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("{kind:?} requires {requirement}")]
    ModelMismatch { kind: AlgoKind, requirement: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgoKind {
    /// Backlogging, any lead time: full counterfactual feedback.
    Bl,
    /// Lost-sales with zero lead time: left-sided feedback plus forced
    /// top-level sampling for change detection among evicted levels.
    Ls,
    /// Lost-sales with positive lead time: left-sided feedback with inventory
    /// resets and a convexity-based separation gate instead of exploration.
    Lsl,
}

impl AlgoKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bl => "nsic-bl",
            Self::Ls => "nsic-ls",
            Self::Lsl => "nsic-lsl",
        }
    }
}

/// Which levels the positive-lead-time change check monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionScope {
    /// The played level and the current empirical minimizer. Sufficient by
    /// convexity; the default.
    TwoPolicies,
    /// Every level at or below the played one; for small-horizon verification.
    AllPolicies,
}

/// Candidate-window generation strategy for the checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalMode {
    /// Dyadic suffixes plus structural anchors; O(log t) windows per period.
    Pruned,
    /// Every admissible window; O(t^2) per period, for small-horizon
    /// verification only.
    Exhaustive,
}

#[derive(Debug, Clone)]
pub struct AlgoConfig {
    pub kind: AlgoKind,
    pub system: SystemConfig,
    pub costs: CostParams,
    pub conf: ConfidenceParams,
    pub grid: PolicyGrid,
    /// Change detection on/off; off turns the learner into a stationary
    /// eliminator suitable for scheduled-restart baselines.
    pub detect_changes: bool,
    pub detection_scope: DetectionScope,
    pub interval_mode: IntervalMode,
    /// Cap on dyadic windows rooted at one anchor.
    pub max_windows_per_anchor: usize,
    /// Discard candidate windows shorter than this many observations
    /// (interval pruning; the backlog model additionally enforces the
    /// lead-time minimum).
    pub min_window_len: u32,
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let err = |requirement| Err(AgentError::ModelMismatch { kind: self.kind, requirement });
        match self.kind {
            AlgoKind::Bl => {
                if self.system.model != InventoryModel::Backlog {
                    return err("the backlog model");
                }
            }
            AlgoKind::Ls => {
                if self.system.model != InventoryModel::LostSales || self.system.lead_time != 0 {
                    return err("the lost-sales model with zero lead time");
                }
            }
            AlgoKind::Lsl => {
                if self.system.model != InventoryModel::LostSales || self.system.lead_time == 0 {
                    return err("the lost-sales model with positive lead time");
                }
            }
        }
        Ok(())
    }

    /// Asymptotic tuning defaults: failure probability `T^-2` and grid step
    /// `U * T^(-1/2)` (backlog / zero-lead-time lost-sales) or
    /// `U * (L+1)^(2/3) * T^(-1/3)` (lost-sales with lead time), with
    /// unrescaled concentration constants.
    pub fn theory_defaults(
        kind: AlgoKind,
        system: SystemConfig,
        costs: CostParams,
        sigma: f64,
    ) -> Self {
        let t = system.horizon as f64;
        let u = system.max_level;
        let delta = t.powi(-2).clamp(f64::MIN_POSITIVE, 0.5);
        let gamma = match kind {
            AlgoKind::Bl | AlgoKind::Ls => u * t.powf(-0.5),
            AlgoKind::Lsl => u * (system.lead_time as f64 + 1.0).powf(2.0 / 3.0) * t.powf(-1.0 / 3.0),
        }
        .min(u);
        let grid = PolicyGrid::new(gamma, u).expect("valid grid from defaults");
        let conf = ConfidenceParams::new(
            delta,
            gamma,
            sigma,
            1.0,
            system.horizon,
            u,
            system.lead_time,
            costs.holding,
            costs.penalty,
        )
        .expect("valid confidence params from defaults");
        Self {
            kind,
            system,
            costs,
            conf,
            grid,
            detect_changes: true,
            detection_scope: DetectionScope::TwoPolicies,
            interval_mode: IntervalMode::Pruned,
            max_windows_per_anchor: 32,
            min_window_len: 1,
        }
    }
}

/// The learner's memory: episode/epoch counters, the active set, eviction
/// records, and the forced-sampling obligation counter.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    /// Episode count `v` (1-based).
    pub episode: u32,
    /// First period of the current episode.
    pub episode_start: u32,
    /// Epoch count within the episode (1-based).
    pub epoch: u32,
    /// First period of the current epoch.
    pub epoch_start: u32,
    /// First period of the epoch at which the inventory position had drained
    /// to the played level; estimation windows start here (positive lead
    /// time only).
    pub epoch_ready: Option<u32>,
    /// Surviving grid level indices, sorted ascending; never empty.
    pub active: Vec<usize>,
    /// Index of the played level, `max(active)`.
    pub current_idx: usize,
    /// Eviction records keyed by grid index.
    pub evicted: BTreeMap<usize, EvictionRecord>,
    /// Outstanding forced plays of the top level.
    pub pending_top_plays: u64,
    /// Start of the current maximal run of top-level plays, if inside one.
    pub top_block_start: Option<u32>,
    pub restarts: u32,
    pub epochs_total: u32,
    /// Closed `(ready_start, end_exclusive)` estimation ranges of earlier
    /// epochs in this episode (positive lead time only).
    closed_epochs: Vec<(u32, u32)>,
}

impl EpisodeState {
    fn fresh(grid_len: usize, start: u32) -> Self {
        Self {
            episode: 1,
            episode_start: start,
            epoch: 1,
            epoch_start: start,
            epoch_ready: None,
            active: (0..grid_len).collect(),
            current_idx: grid_len - 1,
            evicted: BTreeMap::new(),
            pending_top_plays: 0,
            top_block_start: None,
            restarts: 0,
            epochs_total: 1,
            closed_epochs: Vec::new(),
        }
    }
}

/// What one period produced, from the learner's point of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub level_idx: usize,
    pub level: f64,
    pub sales: f64,
    pub pseudo_cost: f64,
    pub restarted: bool,
}

/// Anything the simulation driver can run: the learners and their
/// scheduled-restart wrappers.
pub trait LearningAgent {
    /// Advance one period: choose a level, absorb the period's observation,
    /// run detection and elimination. `demand` is the true realization; the
    /// learner only consumes what its feedback model permits (full demand
    /// under backlogging, sales under lost-sales).
    fn act(&mut self, t: u32, demand: f64, rng: &mut StreamRng) -> StepRecord;
    fn restarts(&self) -> u32;
    fn epochs(&self) -> u32;
    fn name(&self) -> String;
}

#[derive(Debug, Clone)]
pub struct NsicAgent {
    cfg: AlgoConfig,
    bank: CounterfactualBank,
    stats: IntervalStats,
    factual: InventoryState,
    ep: EpisodeState,
    cost_buf: Vec<f64>,
}

impl NsicAgent {
    pub fn new(cfg: AlgoConfig) -> Result<Self, AgentError> {
        cfg.validate()?;
        let grid_len = cfg.grid.len();
        let lead = cfg.system.lead_time;
        Ok(Self {
            bank: CounterfactualBank::init_zero(cfg.grid.clone(), lead),
            stats: IntervalStats::new(grid_len),
            factual: InventoryState::zero(lead),
            ep: EpisodeState::fresh(grid_len, 1),
            cost_buf: Vec::with_capacity(grid_len),
            cfg,
        })
    }

    pub fn config(&self) -> &AlgoConfig {
        &self.cfg
    }

    /// Mutable config access for scenario construction in tests and tools.
    pub fn config_mut(&mut self) -> &mut AlgoConfig {
        &mut self.cfg
    }

    pub fn episode_state(&self) -> &EpisodeState {
        &self.ep
    }

    /// Mutable episode-state access for scenario construction in tests and
    /// tools; normal drivers never need this.
    pub fn episode_state_mut(&mut self) -> &mut EpisodeState {
        &mut self.ep
    }

    pub fn factual_state(&self) -> &InventoryState {
        &self.factual
    }

    pub fn current_level(&self) -> f64 {
        self.cfg.grid.level(self.ep.current_idx)
    }

    /// Start a new episode whose first period is `t`: full active set, top
    /// level selected, all interval statistics discarded.
    pub fn restart(&mut self, t: u32) {
        let restarts = self.ep.restarts + 1;
        let epochs_total = self.ep.epochs_total + 1;
        let episode = self.ep.episode + 1;
        self.ep = EpisodeState::fresh(self.cfg.grid.len(), t);
        self.ep.restarts = restarts;
        self.ep.epochs_total = epochs_total;
        self.ep.episode = episode;
        self.stats.clear();
        self.stats.break_all();
    }

    fn step(&mut self, t: u32, demand: f64, rng: &mut StreamRng) -> StepRecord {
        match self.cfg.kind {
            AlgoKind::Bl => self.step_bl(t, demand),
            AlgoKind::Ls => self.step_ls(t, demand, rng),
            AlgoKind::Lsl => self.step_lsl(t, demand),
        }
    }

    // ---- backlogging -----------------------------------------------------

    fn step_bl(&mut self, t: u32, demand: f64) -> StepRecord {
        let played_idx = self.ep.current_idx;
        let level = self.cfg.grid.level(played_idx);
        let order = self.factual.order_up_to(level);
        let (sales, pseudo_cost) =
            step_in_place(&mut self.factual, order, demand, InventoryModel::Backlog, &self.cfg.costs);

        self.bank.advance_backlog(t, demand, &self.cfg.costs, &mut self.cost_buf);
        let lead = self.cfg.system.lead_time as u32;
        // the shadow states are stationary only after the L-period ramp;
        // ramp costs would bias the window means, so they are not recorded
        if t >= self.estimation_start() {
            for (idx, &c) in self.cost_buf.iter().enumerate() {
                self.stats.record(idx, t, c);
            }
        }

        let mut restarted = false;
        if t >= self.ep.episode_start + lead {
            let min_len = lead.max(self.cfg.min_window_len).max(1);
            let (suffixes, historical) = self.windows_bl_ls(t, min_len);
            if self.cfg.detect_changes {
                let levels: Vec<usize> = (0..self.cfg.grid.len()).collect();
                let changed = change_pair_check(
                    &self.stats,
                    &levels,
                    &historical,
                    &suffixes,
                    &self.cfg.conf,
                    InventoryModel::Backlog,
                )
                .expect("windows constructed within one episode segment");
                if changed {
                    self.restart(t + 1);
                    restarted = true;
                }
            }
            if !restarted {
                self.eliminate(t, &suffixes, self.cfg.grid.top_index(), 4.0, InventoryModel::Backlog);
            }
        }
        StepRecord { level_idx: played_idx, level, sales, pseudo_cost, restarted }
    }

    // ---- lost-sales, zero lead time ---------------------------------------

    /// Randomized forced-sampling schedule: for each scale `2^-i` still worth
    /// monitoring, occasionally queue enough top-level plays to detect a
    /// change of that size among evicted levels.
    fn draw_obligations(&mut self, rng: &mut StreamRng) {
        let conf = &self.cfg.conf;
        let ln_term = conf.obligation_log_term();
        let top = self.cfg.grid.top_index();
        let top_gap = if self.ep.current_idx == top {
            0.0
        } else {
            self.ep.evicted.get(&top).map_or(0.0, |r| r.gap)
        };
        let eps_floor = conf.grid_step.max(top_gap / (16.0 * conf.scale * conf.h_ls()));
        let base = (self.ep.episode as f64
            / (conf.max_level * conf.horizon as f64 * ln_term))
            .sqrt();
        let mut eps = 0.5f64;
        for i in 1..=60u32 {
            if eps < eps_floor {
                break;
            }
            let p = (eps * base).min(1.0);
            if rng.random::<f64>() < p {
                let add = (2f64.powi(2 * i as i32 + 1) * ln_term).ceil() as u64;
                self.ep.pending_top_plays += add;
            }
            eps *= 0.5;
        }
    }

    fn step_ls(&mut self, t: u32, demand: f64, rng: &mut StreamRng) -> StepRecord {
        self.draw_obligations(rng);
        let top = self.cfg.grid.top_index();
        let played_idx = if self.ep.pending_top_plays >= 1 {
            self.ep.pending_top_plays -= 1;
            top
        } else {
            self.ep.current_idx
        };
        if played_idx == top {
            self.ep.top_block_start.get_or_insert(t);
        } else {
            self.ep.top_block_start = None;
        }

        let level = self.cfg.grid.level(played_idx);
        let order = self.factual.order_up_to(level);
        let (sales, pseudo_cost) = step_in_place(
            &mut self.factual,
            order,
            demand,
            InventoryModel::LostSales,
            &self.cfg.costs,
        );

        let valid_len = valid_policies(InventoryModel::LostSales, level, &self.cfg.grid);
        debug_assert_eq!(valid_len, played_idx + 1);
        self.bank
            .advance_lost_sales(t, valid_len, sales, &self.cfg.costs, &mut self.cost_buf);
        for (idx, &c) in self.cost_buf.iter().enumerate() {
            self.stats.record(idx, t, c);
        }

        let (suffixes, historical) = self.windows_bl_ls(t, self.cfg.min_window_len.max(1));
        let mut restarted = false;
        if self.cfg.detect_changes {
            let levels: Vec<usize> = (0..=self.ep.current_idx).collect();
            let changed = change_pair_check(
                &self.stats,
                &levels,
                &historical,
                &suffixes,
                &self.cfg.conf,
                InventoryModel::LostSales,
            )
            .expect("windows constructed within one episode segment");
            if changed {
                self.restart(t + 1);
                restarted = true;
            }
            if !restarted {
                if let Some(block_start) = self.ep.top_block_start {
                    let above: Vec<(usize, EvictionRecord)> = self
                        .ep
                        .evicted
                        .range(self.ep.current_idx + 1..)
                        .map(|(&i, &r)| (i, r))
                        .collect();
                    if !above.is_empty() {
                        let min_len = self.cfg.min_window_len.max(1);
                        let block: Vec<Window> = candidate_intervals(
                            t,
                            &[block_start],
                            self.cfg.max_windows_per_anchor,
                        )
                        .suffixes
                        .into_iter()
                        .filter(|w| w.len() >= min_len)
                        .collect();
                        let changed =
                            change_evicted_check(&self.stats, &above, &block, &self.cfg.conf)
                                .expect("block windows lie inside the current top-level run");
                        if changed {
                            self.restart(t + 1);
                            restarted = true;
                        }
                    }
                }
            }
        }
        if !restarted {
            self.eliminate(t, &suffixes, self.ep.current_idx, 6.0, InventoryModel::LostSales);
        }
        StepRecord { level_idx: played_idx, level, sales, pseudo_cost, restarted }
    }

    // ---- lost-sales, positive lead time -----------------------------------

    fn step_lsl(&mut self, t: u32, demand: f64) -> StepRecord {
        let played_idx = self.ep.current_idx;
        let level = self.cfg.grid.level(played_idx);
        if self.ep.epoch_ready.is_none()
            && self.factual.position() <= level + 1e-9 * level.max(1.0)
        {
            // position has drained to the new target: re-seed the shadow
            // states from the factual pre-order vector and start estimating
            self.ep.epoch_ready = Some(t);
            self.bank
                .reset_lsl(&self.factual, level)
                .expect("reset precondition checked above");
            self.stats.break_all();
        }

        let order = self.factual.order_up_to(level);
        let (sales, pseudo_cost) = step_in_place(
            &mut self.factual,
            order,
            demand,
            InventoryModel::LostSales,
            &self.cfg.costs,
        );

        let mut restarted = false;
        if let Some(ready) = self.ep.epoch_ready {
            let valid_len = self.ep.current_idx + 1;
            self.bank
                .advance_lost_sales(t, valid_len, sales, &self.cfg.costs, &mut self.cost_buf);
            for (idx, &c) in self.cost_buf.iter().enumerate() {
                self.stats.record(idx, t, c);
            }

            let full = Window::new(ready, t + 1);
            if self.cfg.detect_changes {
                let levels: Vec<usize> = match self.cfg.detection_scope {
                    DetectionScope::TwoPolicies => {
                        let emp_min = argmin_mean(&self.stats, self.ep.current_idx, full)
                            .expect("full epoch window is recorded");
                        let mut v = vec![self.ep.current_idx];
                        if emp_min != self.ep.current_idx {
                            v.push(emp_min);
                        }
                        v
                    }
                    DetectionScope::AllPolicies => (0..=self.ep.current_idx).collect(),
                };
                let min_len = self.cfg.min_window_len.max(1);
                let recent: Vec<Window> =
                    candidate_intervals(t, &[ready], self.cfg.max_windows_per_anchor)
                        .suffixes
                        .into_iter()
                        .filter(|w| w.len() >= min_len)
                        .collect();
                let mut historical = Vec::new();
                for &(r, e) in &self.ep.closed_epochs {
                    historical.extend(anchored_windows(r, e, self.cfg.max_windows_per_anchor));
                }
                historical.extend(anchored_windows(
                    ready,
                    t + 1,
                    self.cfg.max_windows_per_anchor,
                ));
                historical.retain(|w| w.len() >= min_len);
                let changed = change_pair_check(
                    &self.stats,
                    &levels,
                    &historical,
                    &recent,
                    &self.cfg.conf,
                    InventoryModel::LostSales,
                )
                .expect("windows constructed within per-epoch segments");
                if changed {
                    self.restart(t + 1);
                    restarted = true;
                }
            }
            if !restarted {
                let suffixes = self.suffix_windows(t, ready, self.cfg.min_window_len.max(1));
                let candidates = elimination_violators(
                    &self.stats,
                    &self.ep.active,
                    self.ep.current_idx,
                    &suffixes,
                    4.0,
                    &self.cfg.conf,
                    InventoryModel::LostSales,
                )
                .expect("windows constructed within the current epoch segment");
                let mut violators = Vec::new();
                for idx in candidates {
                    let prev = idx.checked_sub(1);
                    let separated = separation_check(
                        &self.stats,
                        prev,
                        self.ep.current_idx,
                        full,
                        &self.cfg.conf,
                    )
                    .expect("full epoch window is recorded");
                    if separated {
                        violators.push(idx);
                    }
                }
                if !violators.is_empty() {
                    self.apply_evictions(&violators, &suffixes, full, false);
                    let new_top = *self.ep.active.last().unwrap();
                    if new_top < self.ep.current_idx {
                        self.ep.closed_epochs.push((ready, t + 1));
                        self.ep.epoch += 1;
                        self.ep.epochs_total += 1;
                        self.ep.epoch_start = t + 1;
                        self.ep.epoch_ready = None;
                        self.ep.current_idx = new_top;
                    }
                }
            }
        }
        StepRecord { level_idx: played_idx, level, sales, pseudo_cost, restarted }
    }

    // ---- shared machinery --------------------------------------------------

    /// First period whose cost enters the interval statistics: under
    /// backlogging the episode start plus the lead time, otherwise the
    /// episode start.
    fn estimation_start(&self) -> u32 {
        match self.cfg.kind {
            AlgoKind::Bl => self.ep.episode_start + self.cfg.system.lead_time as u32,
            _ => self.ep.episode_start,
        }
    }

    /// Suffix and historical candidate windows over the whole episode, with a
    /// minimum length (backlog concentration needs `len >= L`).
    fn windows_bl_ls(&self, t: u32, min_len: u32) -> (Vec<Window>, Vec<Window>) {
        match self.cfg.interval_mode {
            IntervalMode::Pruned => {
                let anchors = [self.estimation_start()];
                let cand = candidate_intervals(t, &anchors, self.cfg.max_windows_per_anchor);
                let suffixes =
                    cand.suffixes.into_iter().filter(|w| w.len() >= min_len).collect();
                let historical =
                    cand.historical.into_iter().filter(|w| w.len() >= min_len).collect();
                (suffixes, historical)
            }
            IntervalMode::Exhaustive => {
                let lo = self.estimation_start();
                let mut all = Vec::new();
                for s in lo..=t {
                    for e in s + min_len..=t + 1 {
                        all.push(Window::new(s, e));
                    }
                }
                let suffixes = all.iter().copied().filter(|w| w.end == t + 1).collect();
                (suffixes, all)
            }
        }
    }

    fn suffix_windows(&self, t: u32, lo: u32, min_len: u32) -> Vec<Window> {
        match self.cfg.interval_mode {
            IntervalMode::Pruned => candidate_intervals(t, &[lo], self.cfg.max_windows_per_anchor)
                .suffixes
                .into_iter()
                .filter(|w| w.len() >= min_len)
                .collect(),
            IntervalMode::Exhaustive => (lo..=t + 1 - min_len)
                .map(|s| Window::new(s, t + 1))
                .collect(),
        }
    }

    /// Run the one-sided elimination test and apply the evictions.
    fn eliminate(
        &mut self,
        t: u32,
        windows: &[Window],
        tau_max_idx: usize,
        mult: f64,
        model: InventoryModel,
    ) {
        if windows.is_empty() {
            return;
        }
        let violators = elimination_violators(
            &self.stats,
            &self.ep.active,
            tau_max_idx,
            windows,
            mult,
            &self.cfg.conf,
            model,
        )
        .expect("windows constructed within recorded segments");
        if violators.is_empty() {
            return;
        }
        let full = Window::new(self.estimation_start().max(windows.last().unwrap().start), t + 1);
        let full = if self.stats.covers(self.ep.current_idx, full) {
            full
        } else {
            *windows.last().unwrap()
        };
        let record = self.cfg.kind == AlgoKind::Ls;
        self.apply_evictions(&violators, windows, full, record);
        let new_top = *self.ep.active.last().unwrap();
        let epoch_changed = match self.cfg.kind {
            // a new epoch on every eviction round
            AlgoKind::Bl => true,
            // only when the played level actually drops
            _ => new_top < self.ep.current_idx,
        };
        if epoch_changed {
            self.ep.epoch += 1;
            self.ep.epochs_total += 1;
            self.ep.epoch_start = t + 1;
            self.ep.current_idx = new_top;
        }
    }

    /// Remove `violators` from the active set, never emptying it: if every
    /// level tests suboptimal (possible when the running minimum sits on an
    /// already-evicted level), the empirical argmin over `keep_window` stays.
    fn apply_evictions(
        &mut self,
        violators: &[usize],
        windows: &[Window],
        keep_window: Window,
        record: bool,
    ) {
        let mut violators = violators.to_vec();
        if violators.len() >= self.ep.active.len() {
            let keeper = self
                .ep
                .active
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let ma = self.stats.mean(a, keep_window).unwrap_or(f64::INFINITY);
                    let mb = self.stats.mean(b, keep_window).unwrap_or(f64::INFINITY);
                    ma.partial_cmp(&mb).unwrap().then(a.cmp(&b))
                })
                .unwrap();
            violators.retain(|&v| v != keeper);
        }
        if record {
            for &idx in &violators {
                if let Some(rec) = self.eviction_record(idx, windows) {
                    self.ep.evicted.insert(idx, rec);
                }
            }
        }
        self.ep.active.retain(|i| !violators.contains(i));
        debug_assert!(!self.ep.active.is_empty());
    }

    /// Mean and gap from the window with the largest elimination violation.
    fn eviction_record(&self, idx: usize, windows: &[Window]) -> Option<EvictionRecord> {
        let mut best: Option<(f64, EvictionRecord)> = None;
        for &w in windows {
            let Ok(m) = self.stats.mean(idx, w) else { continue };
            let mut lowest = f64::INFINITY;
            for j in 0..=self.ep.current_idx {
                let Ok(mj) = self.stats.mean(j, w) else { continue };
                lowest = lowest.min(mj);
            }
            if !lowest.is_finite() {
                continue;
            }
            let gap = m - lowest;
            let radius = self
                .cfg
                .conf
                .radius(InventoryModel::LostSales, w.len())
                .expect("nonempty window");
            let violation = gap - 6.0 * radius;
            if best.as_ref().is_none_or(|(v, _)| violation > *v) {
                best = Some((violation, EvictionRecord { mean: m, gap }));
            }
        }
        best.map(|(_, rec)| rec)
    }
}

impl LearningAgent for NsicAgent {
    fn act(&mut self, t: u32, demand: f64, rng: &mut StreamRng) -> StepRecord {
        self.step(t, demand, rng)
    }

    fn restarts(&self) -> u32 {
        self.ep.restarts
    }

    fn epochs(&self) -> u32 {
        self.ep.epochs_total
    }

    fn name(&self) -> String {
        self.cfg.kind.name().to_string()
    }
}

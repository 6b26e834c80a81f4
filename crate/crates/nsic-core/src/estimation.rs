//! Interval cost means, confidence radii, and the elimination / change /
//! separation predicates shared by the learners.
//!
//! Cost streams are stored as contiguous segments of prefix sums, so any
//! in-segment interval mean is an O(1) difference. A window `(s, t)` covers
//! the recorded costs of periods `s..t-1` and has `t - s` observations.

use thiserror::Error;

use crate::inventory::InventoryModel;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("window [{start},{end}) not inside one contiguous segment for level {level}")]
    WindowNotCovered { level: usize, start: u32, end: u32 },
    #[error("window must contain at least one observation")]
    EmptyWindow,
    #[error("invalid confidence parameters: {0}")]
    InvalidParams(String),
}

/// Half-open time window `[start, end)` over recorded per-period costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: u32,
    pub end: u32,
}

impl Window {
    pub fn new(start: u32, end: u32) -> Self {
        debug_assert!(end > start);
        Self { start, end }
    }

    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone)]
struct Segment {
    start: u32,
    /// prefix[k] = sum of the first k recorded costs; len = count + 1
    prefix: Vec<f64>,
}

impl Segment {
    /// One past the last recorded period.
    fn end(&self) -> u32 {
        self.start + (self.prefix.len() - 1) as u32
    }
}

#[derive(Debug, Clone, Default)]
struct LevelTrack {
    segments: Vec<Segment>,
    sealed: bool,
}

/// Per-level cost history as contiguous prefix-sum segments.
#[derive(Debug, Clone)]
pub struct IntervalStats {
    levels: Vec<LevelTrack>,
}

impl IntervalStats {
    pub fn new(num_levels: usize) -> Self {
        Self { levels: vec![LevelTrack::default(); num_levels] }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Append the period-`t` cost for `level`. Starts a new segment whenever
    /// the stream was interrupted or a break was forced.
    pub fn record(&mut self, level: usize, t: u32, cost: f64) {
        let track = &mut self.levels[level];
        let contiguous = !track.sealed
            && track.segments.last().is_some_and(|seg| seg.end() == t);
        if contiguous {
            let seg = track.segments.last_mut().unwrap();
            let total = seg.prefix.last().unwrap() + cost;
            seg.prefix.push(total);
        } else {
            track.sealed = false;
            track.segments.push(Segment { start: t, prefix: vec![0.0, cost] });
        }
    }

    /// Force the next record on every level to open a fresh segment.
    pub fn break_all(&mut self) {
        for track in &mut self.levels {
            track.sealed = true;
        }
    }

    /// Drop all recorded history (episode restart).
    pub fn clear(&mut self) {
        for track in &mut self.levels {
            track.segments.clear();
            track.sealed = false;
        }
    }

    fn covering_segment(&self, level: usize, w: Window) -> Option<&Segment> {
        let track = &self.levels[level];
        let i = match track.segments.binary_search_by_key(&w.start, |s| s.start) {
            Ok(i) => i,
            Err(0) => return None,
            Err(i) => i - 1,
        };
        let seg = &track.segments[i];
        (seg.start <= w.start && w.end <= seg.end()).then_some(seg)
    }

    /// True when `[w.start, w.end)` lies inside one contiguous segment.
    pub fn covers(&self, level: usize, w: Window) -> bool {
        !w.is_empty() && self.covering_segment(level, w).is_some()
    }

    /// Interval mean of the recorded costs over `w` for `level`.
    pub fn mean(&self, level: usize, w: Window) -> Result<f64, EstimationError> {
        if w.is_empty() {
            return Err(EstimationError::EmptyWindow);
        }
        let seg = self.covering_segment(level, w).ok_or(EstimationError::WindowNotCovered {
            level,
            start: w.start,
            end: w.end,
        })?;
        let lo = (w.start - seg.start) as usize;
        let hi = (w.end - seg.start) as usize;
        Ok((seg.prefix[hi] - seg.prefix[lo]) / w.len() as f64)
    }
}

/// Everything needed to price a confidence radius, with the failure
/// probability already rebalanced across windows and grid levels
/// (`delta' = delta * grid_step / (horizon^2 * max_level)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceParams {
    pub delta: f64,
    pub grid_step: f64,
    /// Sub-Gaussian proxy of the demand distribution (backlog radius only).
    pub sigma: f64,
    /// Multiplier on the concentration constant used by elimination and
    /// separation checks. 1.0 is the unrescaled theoretical constant.
    pub scale: f64,
    /// Multiplier used by change-detection radii; defaults to `scale`.
    pub change_scale: f64,
    pub horizon: u32,
    pub max_level: f64,
    pub lead_time: usize,
    pub holding: f64,
    pub penalty: f64,
}

impl ConfidenceParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        delta: f64,
        grid_step: f64,
        sigma: f64,
        scale: f64,
        horizon: u32,
        max_level: f64,
        lead_time: usize,
        holding: f64,
        penalty: f64,
    ) -> Result<Self, EstimationError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(EstimationError::InvalidParams(format!("delta must be in (0,1): {delta}")));
        }
        if !(scale > 0.0) {
            return Err(EstimationError::InvalidParams(format!("scale must be > 0: {scale}")));
        }
        if !(grid_step > 0.0) || !(max_level > 0.0) || horizon == 0 {
            return Err(EstimationError::InvalidParams(
                "grid_step, max_level and horizon must be positive".into(),
            ));
        }
        Ok(Self {
            delta,
            grid_step,
            sigma,
            scale,
            change_scale: scale,
            horizon,
            max_level,
            lead_time,
            holding,
            penalty,
        })
    }

    pub fn with_change_scale(mut self, change_scale: f64) -> Self {
        self.change_scale = change_scale;
        self
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta * self.grid_step / ((self.horizon as f64).powi(2) * self.max_level)
    }

    /// Concentration constant for the backlog model.
    pub fn h_bl(&self) -> f64 {
        let l = self.lead_time as f64;
        let hb = self.holding + self.penalty;
        2.0 * 2.0f64.sqrt()
            * self.sigma
            * ((l + 1.0) * (l * self.holding.powi(2) + hb.powi(2) * (4.0 * l + 5.0))).sqrt()
    }

    /// Concentration constant for the lost-sales model.
    pub fn h_ls(&self) -> f64 {
        72.0 * (self.lead_time as f64 + 3.0) * self.max_level * self.holding.max(self.penalty)
    }

    fn log_term(&self, model: InventoryModel) -> f64 {
        match model {
            InventoryModel::Backlog => {
                (4.0 * (self.lead_time as f64 + 1.0) / self.delta_prime()).ln()
            }
            InventoryModel::LostSales => (2.0 / self.delta_prime()).ln(),
        }
    }

    fn h_const(&self, model: InventoryModel) -> f64 {
        match model {
            InventoryModel::Backlog => self.h_bl(),
            InventoryModel::LostSales => self.h_ls(),
        }
    }

    /// `ln(2 T^2 U / (delta * gamma))`, the log factor in the sampling
    /// obligation schedule. Identical to the lost-sales radius log term.
    pub fn obligation_log_term(&self) -> f64 {
        (2.0 / self.delta_prime()).ln()
    }

    /// Confidence radius over `n` observations, with the algorithmic
    /// `delta'` substitution and the elimination-side `scale` applied.
    pub fn radius(&self, model: InventoryModel, n: u32) -> Result<f64, EstimationError> {
        if n < 1 {
            return Err(EstimationError::EmptyWindow);
        }
        Ok(self.scale
            * self.h_const(model)
            * (2.0 * self.log_term(model) / n as f64).sqrt())
    }

    /// Same shape as [`Self::radius`] with the change-detection multiplier.
    pub fn change_radius(&self, model: InventoryModel, n: u32) -> Result<f64, EstimationError> {
        if n < 1 {
            return Err(EstimationError::EmptyWindow);
        }
        Ok(self.change_scale
            * self.h_const(model)
            * (2.0 * self.log_term(model) / n as f64).sqrt())
    }

    /// Raw concentration radius at failure probability `delta`, without the
    /// `delta'` substitution or any rescaling. This is the bound a single
    /// stationary interval satisfies.
    pub fn concentration_radius(&self, model: InventoryModel, n: u32, delta: f64) -> f64 {
        assert!(n >= 1 && delta > 0.0);
        let c = match model {
            InventoryModel::Backlog => 4.0 * (self.lead_time as f64 + 1.0),
            InventoryModel::LostSales => 2.0,
        };
        self.h_const(model) * (2.0 * (c / delta).ln() / n as f64).sqrt()
    }
}

/// Candidate estimation windows at time `now`: dyadic suffixes ending at
/// `now` plus dyadic-length historical windows anchored at each anchor.
#[derive(Debug, Clone, Default)]
pub struct CandidateWindows {
    /// Windows `[s, now]`, most recent first; starts are `now - 2^j + 1`
    /// values and the anchors, clipped to the first anchor.
    pub suffixes: Vec<Window>,
    /// Windows `[a, a + 2^j)` per anchor, ordered by anchor then length.
    pub historical: Vec<Window>,
}

/// Dyadic suffix starts plus anchor-rooted dyadic windows, clipped to
/// validity. `anchors` must be sorted ascending; the first anchor is the
/// start of valid data.
pub fn candidate_intervals(now: u32, anchors: &[u32], max_per_anchor: usize) -> CandidateWindows {
    let mut out = CandidateWindows::default();
    if anchors.is_empty() || now < anchors[0] {
        return out;
    }
    let lo = anchors[0];
    let end = now + 1;
    let mut starts: Vec<u32> = Vec::new();
    let mut span = 1u64;
    loop {
        let back = now as u64 + 1 - span.min(now as u64 + 1);
        let s = back as u32;
        if s < lo {
            break;
        }
        starts.push(s);
        if s == lo {
            break;
        }
        span *= 2;
    }
    for &a in anchors {
        if a <= now {
            starts.push(a);
        }
    }
    starts.sort_unstable();
    starts.dedup();
    out.suffixes = starts.into_iter().rev().map(|s| Window::new(s, end)).collect();

    for &a in anchors {
        out.historical.extend(anchored_windows(a, end, max_per_anchor));
    }
    out
}

/// Dyadic-length windows `[anchor, anchor + 2^j)` clipped to `range_end`,
/// at most `max_windows` of them.
pub fn anchored_windows(anchor: u32, range_end: u32, max_windows: usize) -> Vec<Window> {
    let mut out = Vec::new();
    if range_end <= anchor {
        return out;
    }
    let mut len = 1u64;
    while out.len() < max_windows {
        let end = (anchor as u64 + len).min(range_end as u64) as u32;
        out.push(Window::new(anchor, end));
        if end == range_end {
            break;
        }
        len *= 2;
    }
    out
}

/// Levels in `active` whose estimated cost exceeds the running grid minimum
/// (over levels `<= tau_max_idx`) by more than `threshold_mult` radii on some
/// window. Ties in the minimum resolve toward the smallest level.
pub fn elimination_violators(
    stats: &IntervalStats,
    active: &[usize],
    tau_max_idx: usize,
    windows: &[Window],
    threshold_mult: f64,
    params: &ConfidenceParams,
    model: InventoryModel,
) -> Result<Vec<usize>, EstimationError> {
    let mut violators: Vec<usize> = Vec::new();
    let mut means: Vec<f64> = Vec::with_capacity(tau_max_idx + 1);
    for &w in windows {
        means.clear();
        let mut best = f64::INFINITY;
        for idx in 0..=tau_max_idx {
            let m = stats.mean(idx, w)?;
            means.push(m);
            if m < best {
                best = m;
            }
        }
        let threshold = threshold_mult * params.radius(model, w.len())?;
        for &idx in active {
            debug_assert!(idx <= tau_max_idx);
            if means[idx] - best > threshold && !violators.contains(&idx) {
                violators.push(idx);
            }
        }
    }
    violators.sort_unstable();
    Ok(violators)
}

/// True when some tested level's mean over a historical window and a recent
/// window differ by more than the two change radii. Only pairs with
/// `historical.end <= recent.start` are compared (disjoint, ordered), and
/// both window lists must be segment-valid for every tested level.
pub fn change_pair_check(
    stats: &IntervalStats,
    levels: &[usize],
    historical: &[Window],
    recent: &[Window],
    params: &ConfidenceParams,
    model: InventoryModel,
) -> Result<bool, EstimationError> {
    if historical.is_empty() || recent.is_empty() {
        return Ok(false);
    }
    // sorted by end so a prefix of the list is "everything ending by s"
    let mut hist: Vec<Window> = historical.to_vec();
    hist.sort_unstable_by_key(|w| w.end);

    let mut lower_env: Vec<f64> = Vec::with_capacity(hist.len()); // max of mean - b
    let mut upper_env: Vec<f64> = Vec::with_capacity(hist.len()); // min of mean + b
    for &level in levels {
        lower_env.clear();
        upper_env.clear();
        let mut max_lo = f64::NEG_INFINITY;
        let mut min_hi = f64::INFINITY;
        for &w in &hist {
            let m = stats.mean(level, w)?;
            let b = params.change_radius(model, w.len())?;
            max_lo = max_lo.max(m - b);
            min_hi = min_hi.min(m + b);
            lower_env.push(max_lo);
            upper_env.push(min_hi);
        }
        for &r in recent {
            let eligible = hist.partition_point(|w| w.end <= r.start);
            if eligible == 0 {
                continue;
            }
            let m = stats.mean(level, r)?;
            let b = params.change_radius(model, r.len())?;
            if lower_env[eligible - 1] > m + b || m - b > upper_env[eligible - 1] {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Recorded mean and suboptimality gap of a level at the moment it was
/// evicted from the active set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvictionRecord {
    pub mean: f64,
    pub gap: f64,
}

/// True when some evicted level's fresh estimate over a full-information
/// window drifts from its recorded eviction mean by more than a quarter of
/// the recorded gap plus the window radius.
pub fn change_evicted_check(
    stats: &IntervalStats,
    evicted: &[(usize, EvictionRecord)],
    windows: &[Window],
    params: &ConfidenceParams,
) -> Result<bool, EstimationError> {
    for &(level, rec) in evicted {
        for &w in windows {
            let m = stats.mean(level, w)?;
            let b = params.change_radius(InventoryModel::LostSales, w.len())?;
            if (m - rec.mean).abs() > rec.gap / 4.0 + b {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Separation condition on the level one grid step below an elimination
/// candidate: its estimated gap over the epoch window must exceed two radii
/// plus the Lipschitz discretization slack. `prev_idx` is that next-smaller
/// level; pass `None` when the candidate is the smallest level (then the
/// condition is vacuously false).
pub fn separation_check(
    stats: &IntervalStats,
    prev_idx: Option<usize>,
    tau_max_idx: usize,
    window: Window,
    params: &ConfidenceParams,
) -> Result<bool, EstimationError> {
    let Some(prev) = prev_idx else {
        return Ok(false);
    };
    let mut best = f64::INFINITY;
    for idx in 0..=tau_max_idx {
        best = best.min(stats.mean(idx, window)?);
    }
    let m = stats.mean(prev, window)?;
    let b = params.radius(InventoryModel::LostSales, window.len())?;
    let slack = params.holding.max(params.penalty) * params.grid_step;
    Ok(m - best > 2.0 * b + slack)
}

/// Index attaining the minimum mean over levels `0..=tau_max_idx` on
/// `window`; ties go to the smallest level.
pub fn argmin_mean(
    stats: &IntervalStats,
    tau_max_idx: usize,
    window: Window,
) -> Result<usize, EstimationError> {
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for idx in 0..=tau_max_idx {
        let m = stats.mean(idx, window)?;
        if m < best {
            best = m;
            best_idx = idx;
        }
    }
    Ok(best_idx)
}

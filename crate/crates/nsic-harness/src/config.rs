//! INI-style experiment configuration: `[section]` headers and `key = value`
//! lines, `#` comments, unknown keys rejected with line numbers.

use std::fmt;

use nsic_core::agent::{DetectionScope, IntervalMode};
use nsic_core::demand::{FamilyKind, ParamRanges};
use nsic_core::inventory::InventoryModel;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Parse { line, msg: msg.into() })
}

/// Number of stationary segments, possibly symbolic in the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentsSpec {
    Fixed(u32),
    /// The configurable O(1) constant.
    Constant,
    LogT,
    TPow1over3,
    TPow1over2,
    TPow2over3,
}

impl SegmentsSpec {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "C" => Some(Self::Constant),
            "logT" => Some(Self::LogT),
            "T^1/3" => Some(Self::TPow1over3),
            "T^1/2" => Some(Self::TPow1over2),
            "T^2/3" => Some(Self::TPow2over3),
            _ => s.parse::<u32>().ok().map(Self::Fixed),
        }
    }

    /// Resolve to a concrete count: floor of the symbolic value, at least 1.
    pub fn resolve(&self, horizon: u32, constant: u32) -> u32 {
        let t = horizon as f64;
        let raw = match self {
            Self::Fixed(n) => return (*n).max(1),
            Self::Constant => return constant.max(1),
            Self::LogT => t.ln(),
            Self::TPow1over3 => t.powf(1.0 / 3.0),
            Self::TPow1over2 => t.powf(0.5),
            Self::TPow2over3 => t.powf(2.0 / 3.0),
        };
        (raw.floor() as u32).max(1)
    }
}

impl fmt::Display for SegmentsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(n) => write!(f, "{n}"),
            Self::Constant => write!(f, "C"),
            Self::LogT => write!(f, "logT"),
            Self::TPow1over3 => write!(f, "T^1/3"),
            Self::TPow1over2 => write!(f, "T^1/2"),
            Self::TPow2over3 => write!(f, "T^2/3"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: InventoryModel,
    pub lead_time: usize,
    pub horizon: u32,
    pub holding_cost: f64,
    pub penalty_cost: f64,

    pub family: FamilyKind,
    /// One run block per entry; full benchmark tables sweep this list.
    pub segments: Vec<SegmentsSpec>,
    pub segment_constant: u32,
    pub ranges: ParamRanges,

    /// None means the asymptotic default `horizon^-2`.
    pub delta: Option<f64>,
    /// None means the asymptotic default grid step.
    pub gamma: Option<f64>,
    pub scale: f64,
    /// None means "same as scale".
    pub change_scale: Option<f64>,
    /// Minimum candidate-window length for the checks (interval pruning).
    pub min_window: u32,
    /// Pruned (dyadic) or exhaustive candidate windows.
    pub interval_mode: IntervalMode,
    /// Which levels the positive-lead-time change check monitors.
    pub detection_scope: DetectionScope,

    pub run_nsic: bool,
    pub run_oracle_restart: bool,
    pub run_sched_restart: bool,
    pub run_stationary: bool,

    pub replications: u32,
    pub base_seed: u64,
    pub workers: usize,
    pub mc_horizon: u32,
    pub trajectory_stride: u32,
    pub oracle_scan_points: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: InventoryModel::LostSales,
            lead_time: 0,
            horizon: 10_000,
            holding_cost: 1.0,
            penalty_cost: 49.0,
            family: FamilyKind::TruncNormal,
            segments: vec![SegmentsSpec::Fixed(1)],
            segment_constant: 5,
            ranges: ParamRanges::default(),
            delta: None,
            gamma: None,
            scale: 1.0,
            change_scale: None,
            min_window: 1,
            interval_mode: IntervalMode::Pruned,
            detection_scope: DetectionScope::TwoPolicies,
            run_nsic: true,
            run_oracle_restart: false,
            run_sched_restart: false,
            run_stationary: false,
            replications: 500,
            base_seed: 1,
            workers: 0,
            mc_horizon: 5_000,
            trajectory_stride: 0,
            oracle_scan_points: 256,
        }
    }
}

impl ExperimentConfig {
    /// Resolved segment counts, one per configured spec.
    pub fn segments_resolved_list(&self) -> Vec<u32> {
        self.segments.iter().map(|s| s.resolve(self.horizon, self.segment_constant)).collect()
    }

    /// Resolved count of the first (often only) segments spec.
    pub fn segments_resolved(&self) -> u32 {
        self.segments[0].resolve(self.horizon, self.segment_constant)
    }

    /// Non-fatal observations about the configuration, e.g. demand families
    /// outside the sub-Gaussian backlog assumption.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.model == InventoryModel::Backlog
            && matches!(self.family, FamilyKind::Poisson | FamilyKind::Exponential)
        {
            out.push(format!(
                "family `{}` is not sub-Gaussian with a fixed proxy; the backlog                  confidence constant uses its standard deviation as a stand-in",
                self.family.name()
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |msg: String| Err(ConfigError::Invalid(msg));
        if self.horizon < 1 {
            return inv("horizon must be >= 1".into());
        }
        if self.replications < 1 {
            return inv("replications must be >= 1".into());
        }
        if self.segments.is_empty() {
            return inv("at least one segments value required".into());
        }
        if self.segments.len() > 32 {
            return inv("at most 32 segments values per run".into());
        }
        for resolved in self.segments_resolved_list() {
            if resolved > self.horizon {
                return inv(format!("segments {resolved} exceed horizon {}", self.horizon));
            }
        }
        if self.holding_cost < 0.0 || self.penalty_cost < 0.0 {
            return inv("cost rates must be >= 0".into());
        }
        if self.holding_cost == 0.0 && self.penalty_cost == 0.0 {
            return inv("holding and penalty cost cannot both be zero".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return inv(format!("delta must be in (0,1): {d}"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return inv(format!("gamma must be > 0: {g}"));
            }
        }
        if !(self.scale > 0.0) {
            return inv(format!("scale must be > 0: {}", self.scale));
        }
        if (self.mc_horizon as usize) < self.lead_time + 2 {
            return inv("mc_horizon must exceed lead_time + 1".into());
        }
        if !(self.run_nsic || self.run_oracle_restart || self.run_sched_restart || self.run_stationary)
        {
            return inv("no algorithms enabled".into());
        }
        Ok(())
    }
}

/// Parse the config text, starting from defaults. Unknown sections or keys,
/// malformed values, and constraint violations are reported with their line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return perr(line_no, "unterminated section header");
            };
            section = name.trim().to_string();
            match section.as_str() {
                "system" | "demand" | "confidence" | "algorithms" | "run" => continue,
                other => return perr(line_no, format!("unknown section [{other}]")),
            }
        }
        let Some((key, value)) = line.split_once('=') else {
            return perr(line_no, format!("expected `key = value`, got `{line}`"));
        };
        let key = key.trim();
        let value = value.trim();
        apply_kv(&mut cfg, &section, key, value, line_no)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_kv(
    cfg: &mut ExperimentConfig,
    section: &str,
    key: &str,
    value: &str,
    line: usize,
) -> Result<(), ConfigError> {
    macro_rules! num {
        ($ty:ty) => {
            value.parse::<$ty>().map_err(|_| ConfigError::Parse {
                line,
                msg: format!("`{key}` expects a {}, got `{value}`", stringify!($ty)),
            })?
        };
    }
    let flag = |v: &str| match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => perr(line, format!("`{key}` expects true/false, got `{v}`")),
    };
    match (section, key) {
        ("system", "model") => {
            cfg.model = match value {
                "backlog" => InventoryModel::Backlog,
                "lost_sales" => InventoryModel::LostSales,
                _ => return perr(line, format!("model must be backlog|lost_sales, got `{value}`")),
            };
        }
        ("system", "lead_time") => {
            let v = num!(i64);
            if v < 0 {
                return perr(line, format!("lead_time must be >= 0, got {v}"));
            }
            cfg.lead_time = v as usize;
        }
        ("system", "horizon") => cfg.horizon = num!(u32),
        ("system", "holding_cost") => cfg.holding_cost = num!(f64),
        ("system", "penalty_cost") => cfg.penalty_cost = num!(f64),

        ("demand", "family") => {
            cfg.family = match value {
                "trunc_normal" => FamilyKind::TruncNormal,
                "uniform" => FamilyKind::Uniform,
                "poisson" => FamilyKind::Poisson,
                "exponential" => FamilyKind::Exponential,
                _ => {
                    return perr(
                        line,
                        format!("family must be trunc_normal|uniform|poisson|exponential, got `{value}`"),
                    )
                }
            };
        }
        ("demand", "segments" | "S") => {
            let mut specs = Vec::new();
            for part in value.split(',') {
                let part = part.trim();
                specs.push(SegmentsSpec::parse(part).ok_or(ConfigError::Parse {
                    line,
                    msg: format!(
                        "segments must be integers or C|logT|T^1/3|T^1/2|T^2/3 (comma-separated), got `{part}`"
                    ),
                })?);
            }
            cfg.segments = specs;
        }
        ("demand", "segment_constant") => cfg.segment_constant = num!(u32),
        ("demand", "normal_mean_min") => cfg.ranges.normal_mean.0 = num!(f64),
        ("demand", "normal_mean_max") => cfg.ranges.normal_mean.1 = num!(f64),
        ("demand", "normal_sd") => cfg.ranges.normal_sd = num!(f64),
        ("demand", "uniform_lower_min") => cfg.ranges.uniform_lower.0 = num!(f64),
        ("demand", "uniform_lower_max") => cfg.ranges.uniform_lower.1 = num!(f64),
        ("demand", "uniform_width_min") => cfg.ranges.uniform_width.0 = num!(f64),
        ("demand", "uniform_width_max") => cfg.ranges.uniform_width.1 = num!(f64),
        ("demand", "poisson_rate_min") => cfg.ranges.poisson_rate.0 = num!(f64),
        ("demand", "poisson_rate_max") => cfg.ranges.poisson_rate.1 = num!(f64),
        ("demand", "exponential_rate_min") => cfg.ranges.exponential_rate.0 = num!(f64),
        ("demand", "exponential_rate_max") => cfg.ranges.exponential_rate.1 = num!(f64),

        ("confidence", "delta") => {
            cfg.delta = if value == "auto" { None } else { Some(num!(f64)) };
        }
        ("confidence", "gamma") => {
            cfg.gamma = if value == "auto" { None } else { Some(num!(f64)) };
        }
        ("confidence", "scale") => cfg.scale = num!(f64),
        ("confidence", "min_window") => cfg.min_window = num!(u32),
        ("confidence", "intervals") => {
            cfg.interval_mode = match value {
                "pruned" => IntervalMode::Pruned,
                "exhaustive" => IntervalMode::Exhaustive,
                _ => return perr(line, format!("intervals must be pruned|exhaustive, got `{value}`")),
            };
        }
        ("confidence", "detection_scope") => {
            cfg.detection_scope = match value {
                "two" => DetectionScope::TwoPolicies,
                "all" => DetectionScope::AllPolicies,
                _ => return perr(line, format!("detection_scope must be two|all, got `{value}`")),
            };
        }
        ("confidence", "change_scale") => {
            cfg.change_scale = if value == "auto" { None } else { Some(num!(f64)) };
        }

        ("algorithms", "nsic") => cfg.run_nsic = flag(value)?,
        ("algorithms", "oracle_restart") => cfg.run_oracle_restart = flag(value)?,
        ("algorithms", "sched_restart") => cfg.run_sched_restart = flag(value)?,
        ("algorithms", "stationary") => cfg.run_stationary = flag(value)?,

        ("run", "replications") => cfg.replications = num!(u32),
        ("run", "base_seed") => cfg.base_seed = num!(u64),
        ("run", "workers") => cfg.workers = num!(usize),
        ("run", "mc_horizon") => cfg.mc_horizon = num!(u32),
        ("run", "trajectory_stride") => cfg.trajectory_stride = num!(u32),
        ("run", "oracle_scan_points") => cfg.oracle_scan_points = num!(u32),

        ("", k) => return perr(line, format!("key `{k}` outside any [section]")),
        (s, k) => return perr(line, format!("unknown key `{k}` in section [{s}]")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_benchmark_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.horizon, 10_000);
        assert_eq!(cfg.holding_cost, 1.0);
        assert_eq!(cfg.penalty_cost, 49.0);
        assert_eq!(cfg.replications, 500);
        assert_eq!(cfg.mc_horizon, 5_000);
        assert_eq!(cfg.segments_resolved(), 1);
    }

    #[test]
    fn negative_lead_time_rejected_with_line() {
        let err = parse_config("[system]\nlead_time = -1\n").unwrap_err();
        match err {
            ConfigError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("lead_time"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn symbolic_segments_resolve_by_floor() {
        let cfg = parse_config("[demand]\nsegments = logT\n").unwrap();
        assert_eq!(cfg.segments_resolved(), 9); // floor(ln 1e4) = 9
        let cfg = parse_config("[demand]\nS = T^1/2\n").unwrap();
        assert_eq!(cfg.segments_resolved(), 100);
        let cfg = parse_config("[demand]\nsegments = T^2/3\n").unwrap();
        assert_eq!(cfg.segments_resolved(), 464);
        let cfg = parse_config("[demand]\nsegments = C\nsegment_constant = 7\n").unwrap();
        assert_eq!(cfg.segments_resolved(), 7);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(matches!(
            parse_config("[system]\nfoo = 1\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_config("[nope]\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(parse_config("x = 1\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(parse_config("[system]\nhorizon = ten\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_config("# comment\n\n[system]\nhorizon = 100 # trailing\n").unwrap();
        assert_eq!(cfg.horizon, 100);
    }

    #[test]
    fn interval_and_scope_keys_parse() {
        let cfg = parse_config(
            "[confidence]\nintervals = exhaustive\ndetection_scope = all\n",
        )
        .unwrap();
        assert_eq!(cfg.interval_mode, IntervalMode::Exhaustive);
        assert_eq!(cfg.detection_scope, DetectionScope::AllPolicies);
        assert!(parse_config("[confidence]\nintervals = sometimes\n").is_err());
    }

    #[test]
    fn backlog_with_heavy_tails_warns() {
        let cfg = parse_config("[system]\nmodel = backlog\n[demand]\nfamily = exponential\n")
            .unwrap();
        assert_eq!(cfg.warnings().len(), 1);
        let cfg = parse_config("[system]\nmodel = backlog\n[demand]\nfamily = uniform\n")
            .unwrap();
        assert!(cfg.warnings().is_empty());
        let cfg = parse_config("[demand]\nfamily = exponential\n").unwrap();
        assert!(cfg.warnings().is_empty(), "lost-sales needs no sub-Gaussian proxy");
    }

    #[test]
    fn segments_list_parses() {
        let cfg = parse_config("[demand]\nsegments = 1, C, logT\n").unwrap();
        assert_eq!(cfg.segments_resolved_list(), vec![1, 5, 9]);
        assert!(parse_config("[demand]\nsegments = 1, nope\n").is_err());
    }

    #[test]
    fn constraint_violations_reported() {
        assert!(parse_config("[system]\nhorizon = 10\n[demand]\nsegments = 20\n").is_err());
        assert!(parse_config("[confidence]\ndelta = 2.0\n").is_err());
        let all_off = "[algorithms]\nnsic = false\n";
        assert!(parse_config(all_off).is_err());
    }
}

//! Demand distribution families and piecewise-stationary demand schedules.
//!
//! All families are supported on `[0, inf)`. The truncated normal clamps
//! negative draws at zero (point mass at 0) rather than renormalizing, so
//! that a draw is literally `max(0, N(mean, sd^2))`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParams(String),
    #[error("piecewise CDF invalid: {0}")]
    InvalidCdf(String),
    #[error("time {t} outside schedule horizon")]
    TimeOutOfRange { t: u32 },
    #[error("cannot place {segments} segments in a horizon of {horizon}")]
    TooManySegments { segments: u32, horizon: u32 },
    #[error("horizon must be at least 5 to build the two-point family pair, got {0}")]
    HorizonTooShort(u32),
}

/// A demand distribution on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DemandFamily {
    /// `max(0, N(mean, sd^2))`; mass at zero, not renormalized.
    TruncNormal { mean: f64, sd: f64 },
    /// Continuous uniform on `[lower, lower + width]`.
    Uniform { lower: f64, width: f64 },
    Poisson { rate: f64 },
    /// Rate parameterization; mean is `1/rate`.
    Exponential { rate: f64 },
    /// Distribution given by a piecewise-linear CDF through `points`,
    /// starting at `(0, 0)` and ending at `(x_max, 1)`.
    PiecewiseLinearCdf { points: Vec<(f64, f64)> },
    /// Point mass, for tests and degenerate schedules.
    Deterministic { value: f64 },
}

impl DemandFamily {
    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self, DemandError> {
        if points.len() < 2 {
            return Err(DemandError::InvalidCdf("need at least two breakpoints".into()));
        }
        if points[0] != (0.0, 0.0) {
            return Err(DemandError::InvalidCdf("first breakpoint must be (0, 0)".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(DemandError::InvalidCdf("x values must be strictly increasing".into()));
            }
            if !(w[1].1 >= w[0].1) {
                return Err(DemandError::InvalidCdf("F values must be nondecreasing".into()));
            }
        }
        let last = points.last().unwrap().1;
        if (last - 1.0).abs() > 1e-12 {
            return Err(DemandError::InvalidCdf(format!("last F must be 1, got {last}")));
        }
        Ok(Self::PiecewiseLinearCdf { points })
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        let bad = |m: &str| Err(DemandError::InvalidParams(m.into()));
        match self {
            Self::TruncNormal { mean, sd } => {
                if !mean.is_finite() || !(*sd > 0.0) {
                    return bad("trunc normal requires finite mean and sd > 0");
                }
            }
            Self::Uniform { lower, width } => {
                if !(*lower >= 0.0) || !(*width >= 0.0) {
                    return bad("uniform requires lower >= 0 and width >= 0");
                }
            }
            Self::Poisson { rate } => {
                if !(*rate > 0.0) {
                    return bad("poisson requires rate > 0");
                }
            }
            Self::Exponential { rate } => {
                if !(*rate > 0.0) {
                    return bad("exponential requires rate > 0");
                }
            }
            Self::PiecewiseLinearCdf { points } => {
                Self::piecewise_linear(points.clone())?;
            }
            Self::Deterministic { value } => {
                if !(*value >= 0.0) {
                    return bad("deterministic demand must be >= 0");
                }
            }
        }
        Ok(())
    }

    /// Draw one demand realization; always `>= 0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::TruncNormal { mean, sd } => {
                let n = Normal::new(*mean, *sd).expect("validated");
                n.sample(rng).max(0.0)
            }
            Self::Uniform { lower, width } => lower + width * rng.random::<f64>(),
            Self::Poisson { rate } => Poisson::new(*rate).expect("validated").sample(rng),
            Self::Exponential { rate } => Exp::new(*rate).expect("validated").sample(rng),
            Self::PiecewiseLinearCdf { points } => {
                let u = rng.random::<f64>();
                inverse_piecewise(points, u)
            }
            Self::Deterministic { value } => *value,
        }
    }

    /// Exact CDF, `P(D <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Self::TruncNormal { mean, sd } => normal_cdf((x - mean) / sd),
            Self::Uniform { lower, width } => {
                if *width == 0.0 {
                    if x >= *lower { 1.0 } else { 0.0 }
                } else {
                    ((x - lower) / width).clamp(0.0, 1.0)
                }
            }
            Self::Poisson { rate } => {
                // sum of pmf up to floor(x), iteratively
                let k_max = x.floor() as u64;
                let mut term = (-rate).exp();
                let mut acc = term;
                for k in 1..=k_max {
                    term *= rate / k as f64;
                    acc += term;
                }
                acc.min(1.0)
            }
            Self::Exponential { rate } => 1.0 - (-rate * x).exp(),
            Self::PiecewiseLinearCdf { points } => piecewise_cdf(points, x),
            Self::Deterministic { value } => {
                if x >= *value { 1.0 } else { 0.0 }
            }
        }
    }

    /// Exact mean.
    pub fn mean(&self) -> f64 {
        match self {
            Self::TruncNormal { mean, sd } => {
                // E[max(0, D)] = mean*Phi(mean/sd) + sd*phi(mean/sd)
                let z = mean / sd;
                mean * normal_cdf(z) + sd * normal_pdf(z)
            }
            Self::Uniform { lower, width } => lower + width / 2.0,
            Self::Poisson { rate } => *rate,
            Self::Exponential { rate } => 1.0 / rate,
            Self::PiecewiseLinearCdf { points } => {
                // mean = integral of (1 - F); trapezoid rule is exact here
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let (x0, f0) = w[0];
                    let (x1, f1) = w[1];
                    acc += (x1 - x0) * (1.0 - 0.5 * (f0 + f1));
                }
                acc
            }
            Self::Deterministic { value } => *value,
        }
    }

    /// Smallest `x` with `F(x) >= p`, found by bisection on the exact CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..1.0).contains(&p) || p == 0.0, "p must be in [0, 1)");
        if p == 0.0 {
            return 0.0;
        }
        let mut hi = 1.0f64.max(self.mean() * 2.0);
        while self.cdf(hi) < p {
            hi *= 2.0;
            if hi > 1e12 {
                return hi;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Exact `E[(tau - D)^+]`, the integral of the CDF over `[0, tau]`.
    pub fn expected_overage(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        match self {
            Self::TruncNormal { mean, sd } => {
                // integral of Phi((x-mean)/sd) over [0, tau]
                let g = |z: f64| z * normal_cdf(z) + normal_pdf(z);
                sd * (g((tau - mean) / sd) - g(-mean / sd))
            }
            Self::Uniform { lower, width } => {
                if *width == 0.0 {
                    (tau - lower).max(0.0)
                } else if tau <= *lower {
                    0.0
                } else if tau <= lower + width {
                    (tau - lower).powi(2) / (2.0 * width)
                } else {
                    tau - lower - width / 2.0
                }
            }
            Self::Poisson { rate } => {
                // F is constant on [k, k+1): the integral is a step sum
                let whole = tau.floor() as u64;
                let mut term = (-rate).exp();
                let mut cdf = term;
                let mut acc = 0.0;
                for k in 0..whole {
                    acc += cdf;
                    term *= rate / (k + 1) as f64;
                    cdf = (cdf + term).min(1.0);
                }
                acc + cdf * (tau - whole as f64)
            }
            Self::Exponential { rate } => tau - (1.0 - (-rate * tau).exp()) / rate,
            Self::PiecewiseLinearCdf { points } => {
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let (x0, f0) = w[0];
                    let (x1, f1) = w[1];
                    if tau <= x0 {
                        break;
                    }
                    let hi = tau.min(x1);
                    let f_hi = f0 + (hi - x0) / (x1 - x0) * (f1 - f0);
                    acc += (hi - x0) * 0.5 * (f0 + f_hi);
                }
                if tau > points.last().unwrap().0 {
                    acc += tau - points.last().unwrap().0;
                }
                acc
            }
            Self::Deterministic { value } => (tau - value).max(0.0),
        }
    }

    /// Sub-Gaussian variance-proxy stand-in used for the backlog confidence
    /// constant. Exact for truncated normal (sd) and bounded uniform
    /// (width/2); Poisson and exponential are not sub-Gaussian, so their
    /// standard deviation is used and [`Self::is_sub_gaussian`] reports false.
    pub fn sigma_proxy(&self) -> f64 {
        match self {
            Self::TruncNormal { sd, .. } => *sd,
            Self::Uniform { width, .. } => (width / 2.0).max(1e-9),
            Self::Poisson { rate } => rate.sqrt(),
            Self::Exponential { rate } => 1.0 / rate,
            Self::PiecewiseLinearCdf { points } => {
                (points.last().unwrap().0 / 2.0).max(1e-9)
            }
            Self::Deterministic { .. } => 1e-9,
        }
    }

    pub fn is_sub_gaussian(&self) -> bool {
        !matches!(self, Self::Poisson { .. } | Self::Exponential { .. })
    }
}

fn inverse_piecewise(points: &[(f64, f64)], u: f64) -> f64 {
    // smallest x with F(x) >= u
    if u <= 0.0 {
        return points[0].0;
    }
    for w in points.windows(2) {
        let (x0, f0) = w[0];
        let (x1, f1) = w[1];
        if u <= f1 {
            if f1 > f0 {
                return x0 + (u - f0) / (f1 - f0) * (x1 - x0);
            }
            // flat stretch: next segment will catch it
            continue;
        }
    }
    points.last().unwrap().0
}

fn piecewise_cdf(points: &[(f64, f64)], x: f64) -> f64 {
    if x <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let (x0, f0) = w[0];
        let (x1, f1) = w[1];
        if x <= x1 {
            return f0 + (x - x0) / (x1 - x0) * (f1 - f0);
        }
    }
    1.0
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Which family a schedule draws its segments from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    TruncNormal,
    Uniform,
    Poisson,
    Exponential,
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TruncNormal => "trunc_normal",
            Self::Uniform => "uniform",
            Self::Poisson => "poisson",
            Self::Exponential => "exponential",
        }
    }
}

/// Per-family parameter ranges for drawing segment distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRanges {
    pub normal_mean: (f64, f64),
    pub normal_sd: f64,
    pub uniform_lower: (f64, f64),
    pub uniform_width: (f64, f64),
    pub poisson_rate: (f64, f64),
    pub exponential_rate: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            normal_mean: (1.0, 100.0),
            normal_sd: 20.0,
            uniform_lower: (1.0, 100.0),
            uniform_width: (0.0, 50.0),
            poisson_rate: (1.0, 100.0),
            exponential_rate: (0.01, 1.0),
        }
    }
}

impl ParamRanges {
    fn draw<R: Rng + ?Sized>(&self, kind: FamilyKind, rng: &mut R) -> DemandFamily {
        let unif = |(lo, hi): (f64, f64), rng: &mut R| lo + (hi - lo) * rng.random::<f64>();
        match kind {
            FamilyKind::TruncNormal => DemandFamily::TruncNormal {
                mean: unif(self.normal_mean, rng),
                sd: self.normal_sd,
            },
            FamilyKind::Uniform => DemandFamily::Uniform {
                lower: unif(self.uniform_lower, rng),
                width: unif(self.uniform_width, rng),
            },
            FamilyKind::Poisson => DemandFamily::Poisson { rate: unif(self.poisson_rate, rng) },
            FamilyKind::Exponential => {
                DemandFamily::Exponential { rate: unif(self.exponential_rate, rng) }
            }
        }
    }
}

/// Ordered list of `(start period, distribution)` segments covering `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSchedule {
    segments: Vec<(u32, DemandFamily)>,
    horizon: u32,
}

impl DemandSchedule {
    pub fn new(segments: Vec<(u32, DemandFamily)>, horizon: u32) -> Result<Self, DemandError> {
        if segments.is_empty() || segments[0].0 != 1 {
            return Err(DemandError::InvalidParams("first segment must start at period 1".into()));
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(DemandError::InvalidParams(
                    "segment starts must be strictly increasing".into(),
                ));
            }
        }
        if segments.last().unwrap().0 > horizon {
            return Err(DemandError::InvalidParams("segment starts beyond the horizon".into()));
        }
        for (_, fam) in &segments {
            fam.validate()?;
        }
        Ok(Self { segments, horizon })
    }

    /// Number of stationary segments.
    pub fn num_segments(&self) -> u32 {
        self.segments.len() as u32
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn segments(&self) -> &[(u32, DemandFamily)] {
        &self.segments
    }

    /// Index of the segment containing period `t`.
    pub fn segment_index_at(&self, t: u32) -> Result<usize, DemandError> {
        if t < 1 || t > self.horizon {
            return Err(DemandError::TimeOutOfRange { t });
        }
        Ok(match self.segments.binary_search_by_key(&t, |(s, _)| *s) {
            Ok(i) => i,
            Err(i) => i - 1,
        })
    }

    /// Distribution in force at period `t`.
    pub fn family_at(&self, t: u32) -> Result<&DemandFamily, DemandError> {
        Ok(&self.segments[self.segment_index_at(t)?].1)
    }

    /// Length in periods of segment `i`.
    pub fn segment_len(&self, i: usize) -> u32 {
        let start = self.segments[i].0;
        let end = self.segments.get(i + 1).map_or(self.horizon + 1, |(s, _)| *s);
        end - start
    }

    /// Draw the full demand path, one value per period.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.horizon as usize);
        for (i, (start, fam)) in self.segments.iter().enumerate() {
            let _ = start;
            for _ in 0..self.segment_len(i) {
                out.push(fam.sample(rng));
            }
        }
        out
    }
}

/// Build a schedule with exactly `segments` stationary pieces: the
/// `segments - 1` change points are drawn uniformly without replacement from
/// `{2..=horizon}`, and each segment's distribution parameters are drawn
/// independently from `ranges`.
pub fn make_schedule<R: Rng + ?Sized>(
    segments: u32,
    horizon: u32,
    kind: FamilyKind,
    ranges: &ParamRanges,
    rng: &mut R,
) -> Result<DemandSchedule, DemandError> {
    if segments < 1 || segments > horizon {
        return Err(DemandError::TooManySegments { segments, horizon });
    }
    let mut starts = Vec::with_capacity(segments as usize);
    starts.push(1u32);
    if segments > 1 {
        // partial Fisher-Yates over {2..=horizon}: exact count, uniform draw
        let mut pool: Vec<u32> = (2..=horizon).collect();
        let k = (segments - 1) as usize;
        for i in 0..k {
            let j = i + rng.random_range(0..pool.len() - i);
            pool.swap(i, j);
        }
        let mut picked: Vec<u32> = pool[..k].to_vec();
        picked.sort_unstable();
        starts.extend(picked);
    }
    let segs = starts.into_iter().map(|s| (s, ranges.draw(kind, rng))).collect();
    DemandSchedule::new(segs, horizon)
}

/// The two piecewise-linear CDFs whose optima sit at opposite ends of the
/// policy space while the distributions differ only by O(1/sqrt(horizon))
/// perturbations. Requires `horizon >= 5`.
pub fn lower_bound_pair(horizon: u32) -> Result<(DemandFamily, DemandFamily), DemandError> {
    if horizon < 5 {
        return Err(DemandError::HorizonTooShort(horizon));
    }
    let eps = 1.0 / (horizon as f64).sqrt();
    let mid_hi = 0.5 + eps;
    let mid_lo = 0.5 - eps;
    let fa = DemandFamily::piecewise_linear(vec![
        (0.0, 0.0),
        (4.0, mid_hi),
        (400.0, mid_hi),
        (404.0, 1.0),
    ])?;
    let fb = DemandFamily::piecewise_linear(vec![
        (0.0, 0.0),
        (4.0, mid_lo),
        (400.0, mid_lo),
        (404.0, 1.0),
    ])?;
    Ok((fa, fb))
}

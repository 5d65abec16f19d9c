//! Arm reward distributions and time-varying schedules.
//!
//! A schedule assigns a reward model to every arm for every timestep of the
//! horizon, either piecewise (ordered segments) or as a parametric sinusoid
//! for gradually drifting environments.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

fn default_high() -> f64 {
    1.0
}

/// Per-arm reward distribution; the environment's hidden truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RewardModel {
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Bernoulli {
        p: f64,
        #[serde(default)]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
    },
}

impl RewardModel {
    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        RewardModel::Gaussian { mu, sigma }
    }

    pub fn bernoulli(p: f64) -> Self {
        RewardModel::Bernoulli { p, low: 0.0, high: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardModel::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
                    return Err(Error::config(format!(
                        "gaussian arm requires finite mu and sigma >= 0, got mu={mu}, sigma={sigma}"
                    )));
                }
            }
            RewardModel::Bernoulli { p, low, high } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config(format!("bernoulli p must be in [0,1], got {p}")));
                }
                if !(low < high) {
                    return Err(Error::config(format!(
                        "bernoulli payoffs require low < high, got low={low}, high={high}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Expected reward; the mean-field payoff used by the replicator model.
    pub fn mean(&self) -> f64 {
        match *self {
            RewardModel::Gaussian { mu, .. } => mu,
            RewardModel::Bernoulli { p, low, high } => p * high + (1.0 - p) * low,
        }
    }

    /// One draw from the distribution. Gaussian draws are not clipped.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            RewardModel::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            RewardModel::Bernoulli { p, low, high } => {
                if rng.random::<f64>() < p {
                    high
                } else {
                    low
                }
            }
        }
    }
}

/// sin-wave parameter track: `offset + amplitude * sin(2*pi*t/period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub offset: f64,
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Sinusoid {
    pub fn constant(value: f64) -> Self {
        Sinusoid { offset: value, amplitude: 0.0, period: 1.0, phase: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (std::f64::consts::TAU * t / self.period + self.phase).sin()
    }
}

/// Gradually drifting Gaussian arms: one (mu, sigma) track pair per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradualSpec {
    pub arms: Vec<ArmTrack>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTrack {
    pub mu: Sinusoid,
    pub sigma: Sinusoid,
}

impl GradualSpec {
    fn model_at(&self, arm: usize, t: f64) -> RewardModel {
        let track = &self.arms[arm];
        RewardModel::Gaussian {
            mu: track.mu.value(t),
            // a configured sigma track must never go negative; clamp so a
            // zero-crossing sinusoid degrades to a point mass, not a panic
            sigma: track.sigma.value(t).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: u32,
    pub models: Vec<RewardModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ScheduleKind {
    Segments(Vec<Segment>),
    Gradual(GradualSpec),
}

/// Assignment of reward models to arms over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSchedule {
    arms: usize,
    horizon: u32,
    kind: ScheduleKind,
    /// cumulative segment end times (empty for gradual schedules)
    #[serde(skip)]
    boundaries: Vec<u32>,
}

/// Ground truth for evaluating change detectors: the timesteps at which the
/// active arm models actually switch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvChangeLog {
    pub change_points: Vec<u32>,
}

impl EnvironmentSchedule {
    pub fn from_segments(arms: usize, segments: Vec<Segment>) -> Result<Self> {
        if arms < 2 {
            return Err(Error::config(format!("need at least 2 arms, got {arms}")));
        }
        if segments.is_empty() {
            return Err(Error::config("schedule needs at least one segment"));
        }
        let mut boundaries = Vec::with_capacity(segments.len());
        let mut total: u32 = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.duration < 1 {
                return Err(Error::config(format!("segment {i} has zero duration")));
            }
            if seg.models.len() != arms {
                return Err(Error::config(format!(
                    "segment {i} defines {} models for {arms} arms",
                    seg.models.len()
                )));
            }
            for model in &seg.models {
                model.validate()?;
            }
            total = total
                .checked_add(seg.duration)
                .ok_or_else(|| Error::config("horizon overflow"))?;
            boundaries.push(total);
        }
        Ok(EnvironmentSchedule {
            arms,
            horizon: total,
            kind: ScheduleKind::Segments(segments),
            boundaries,
        })
    }

    pub fn from_gradual(horizon: u32, spec: GradualSpec) -> Result<Self> {
        if spec.arms.len() < 2 {
            return Err(Error::config("gradual schedule needs at least 2 arms"));
        }
        if horizon == 0 {
            return Err(Error::config("gradual schedule needs a positive horizon"));
        }
        for track in &spec.arms {
            if track.mu.period <= 0.0 || track.sigma.period <= 0.0 {
                return Err(Error::config("sinusoid period must be positive"));
            }
        }
        Ok(EnvironmentSchedule {
            arms: spec.arms.len(),
            horizon,
            kind: ScheduleKind::Gradual(spec),
            boundaries: Vec::new(),
        })
    }

    /// Rebuilds derived state after deserialization.
    pub fn rebuild(mut self) -> Result<Self> {
        match &self.kind {
            ScheduleKind::Segments(segments) => {
                let rebuilt = Self::from_segments(self.arms, segments.clone())?;
                if rebuilt.horizon != self.horizon && self.horizon != 0 {
                    return Err(Error::config(format!(
                        "declared horizon {} != segment total {}",
                        self.horizon, rebuilt.horizon
                    )));
                }
                Ok(rebuilt)
            }
            ScheduleKind::Gradual(_) => {
                self.boundaries.clear();
                Ok(self)
            }
        }
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// The active arm models at timestep `t` (0-based, within the horizon).
    pub fn models_at(&self, t: u32) -> Result<Vec<RewardModel>> {
        if t >= self.horizon {
            return Err(Error::config(format!(
                "timestep {t} outside horizon [0, {})",
                self.horizon
            )));
        }
        Ok(match &self.kind {
            ScheduleKind::Segments(segments) => {
                let idx = self.boundaries.partition_point(|&end| end <= t);
                segments[idx].models.clone()
            }
            ScheduleKind::Gradual(spec) => {
                (0..self.arms).map(|a| spec.model_at(a, t as f64)).collect()
            }
        })
    }

    /// Index of the arm with the highest mean reward at `t`.
    pub fn optimal_arm(&self, t: u32) -> Result<usize> {
        let models = self.models_at(t)?;
        Ok(argmax_f64(models.iter().map(|m| m.mean())))
    }

    /// Timesteps at which the model assignment actually changes. Boundaries
    /// between identical segments are skipped; gradual schedules report none.
    pub fn change_log(&self) -> EnvChangeLog {
        match &self.kind {
            ScheduleKind::Segments(segments) => {
                let mut points = Vec::new();
                let mut t = 0;
                for w in segments.windows(2) {
                    t += w[0].duration;
                    if w[0].models != w[1].models {
                        points.push(t);
                    }
                }
                EnvChangeLog { change_points: points }
            }
            ScheduleKind::Gradual(_) => EnvChangeLog::default(),
        }
    }
}

/// First index attaining the maximum; deterministic tie-break.
pub(crate) fn argmax_f64(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0;
    for (i, v) in values.into_iter().enumerate() {
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    best_idx
}

/// Two equal halves with the arm-model association swapped in the second.
pub fn make_reversal_schedule(
    mu1: f64,
    sigma1: f64,
    mu2: f64,
    sigma2: f64,
    horizon: u32,
) -> Result<EnvironmentSchedule> {
    if horizon % 2 != 0 || horizon == 0 {
        return Err(Error::config(format!("reversal horizon must be even and positive, got {horizon}")));
    }
    let a = RewardModel::gaussian(mu1, sigma1);
    let b = RewardModel::gaussian(mu2, sigma2);
    EnvironmentSchedule::from_segments(
        2,
        vec![
            Segment { duration: horizon / 2, models: vec![a, b] },
            Segment { duration: horizon / 2, models: vec![b, a] },
        ],
    )
}

/// Reversal schedule over arbitrary payoff models (used for binary rewards).
pub fn make_reversal_from_models(
    a: RewardModel,
    b: RewardModel,
    horizon: u32,
) -> Result<EnvironmentSchedule> {
    if horizon % 2 != 0 || horizon == 0 {
        return Err(Error::config(format!("reversal horizon must be even and positive, got {horizon}")));
    }
    EnvironmentSchedule::from_segments(
        2,
        vec![
            Segment { duration: horizon / 2, models: vec![a, b] },
            Segment { duration: horizon / 2, models: vec![b, a] },
        ],
    )
}

/// Randomly volatile schedule: the number of environment changes is drawn
/// uniformly from [10, 30], segment durations split the horizon nearly
/// equally, and each segment's models are drawn uniformly from the pool.
pub fn make_random_volatile(
    pool: &[Vec<RewardModel>],
    horizon: u32,
    rng: &mut SimRng,
) -> Result<EnvironmentSchedule> {
    if pool.is_empty() {
        return Err(Error::config("random volatile schedule needs a non-empty pool"));
    }
    let arms = pool[0].len();
    for (i, models) in pool.iter().enumerate() {
        if models.len() != arms {
            return Err(Error::config(format!("pool entry {i} has inconsistent arm count")));
        }
    }
    let changes: u32 = rng.random_range(10..=30);
    let segments_n = changes + 1;
    if horizon < segments_n {
        return Err(Error::config(format!(
            "horizon {horizon} too short for {segments_n} segments"
        )));
    }
    let base = horizon / segments_n;
    let remainder = horizon % segments_n;
    let mut segments = Vec::with_capacity(segments_n as usize);
    for i in 0..segments_n {
        let duration = base + u32::from(i < remainder);
        let models = pool[rng.random_range(0..pool.len())].clone();
        segments.push(Segment { duration, models });
    }
    EnvironmentSchedule::from_segments(arms, segments)
}

/// Concatenates `n` copies of a segment schedule; used to train lifetime
/// learners over repeated passes of an environment.
pub fn tile_schedule(schedule: &EnvironmentSchedule, n: u32) -> Result<EnvironmentSchedule> {
    let segments = match &schedule.kind {
        ScheduleKind::Segments(s) => s,
        ScheduleKind::Gradual(_) => {
            return Err(Error::config("only segment schedules can be tiled"))
        }
    };
    let mut tiled = Vec::with_capacity(segments.len() * n as usize);
    for _ in 0..n {
        tiled.extend(segments.iter().cloned());
    }
    EnvironmentSchedule::from_segments(schedule.arms, tiled)
}

pub mod presets;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn bernoulli_degenerate_probability() {
        let mut rng = stream_rng(1, 0);
        let m = RewardModel::bernoulli(1.0);
        for _ in 0..100 {
            assert_eq!(m.sample(&mut rng), 1.0);
        }
    }

    #[test]
    fn gaussian_zero_variance() {
        let mut rng = stream_rng(1, 1);
        let m = RewardModel::gaussian(1.0, 0.0);
        for _ in 0..100 {
            assert_eq!(m.sample(&mut rng), 1.0);
        }
    }

    #[test]
    fn gaussian_sample_mean_converges() {
        // law of large numbers: SE of the mean is 0.05/sqrt(1e5) ~ 1.6e-4
        let mut rng = stream_rng(1, 2);
        let m = RewardModel::gaussian(1.0, 0.05);
        let n = 100_000;
        let mean = (0..n).map(|_| m.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn bernoulli_mean_converges_to_mixture() {
        let mut rng = stream_rng(1, 3);
        let m = RewardModel::Bernoulli { p: 0.3, low: -0.5, high: 2.0 };
        let n = 200_000;
        let mean = (0..n).map(|_| m.sample(&mut rng)).sum::<f64>() / n as f64;
        let expect = 0.3 * 2.0 + 0.7 * (-0.5);
        // 3 standard errors of the sample mean
        let se = ((0.3f64 * 0.7) * (2.5f64).powi(2) / n as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * se, "mean {mean} expect {expect}");
    }

    #[test]
    fn segment_lookup() {
        let a = RewardModel::gaussian(1.0, 0.05);
        let b = RewardModel::gaussian(0.4, 0.05);
        let sched = EnvironmentSchedule::from_segments(
            2,
            vec![
                Segment { duration: 200, models: vec![a, b] },
                Segment { duration: 200, models: vec![b, a] },
            ],
        )
        .unwrap();
        assert_eq!(sched.models_at(150).unwrap(), vec![a, b]);
        assert_eq!(sched.models_at(250).unwrap(), vec![b, a]);
        assert_eq!(sched.models_at(199).unwrap(), vec![a, b]);
        assert_eq!(sched.models_at(200).unwrap(), vec![b, a]);
        assert!(sched.models_at(400).is_err());
    }

    #[test]
    fn reversal_schedule_swaps_models() {
        let sched = make_reversal_schedule(1.0, 0.05, 0.4, 0.05, 400).unwrap();
        assert_eq!(sched.models_at(0).unwrap()[0], RewardModel::gaussian(1.0, 0.05));
        assert_eq!(sched.models_at(200).unwrap()[0], RewardModel::gaussian(0.4, 0.05));
        assert_eq!(sched.models_at(399).unwrap()[1], RewardModel::gaussian(1.0, 0.05));
        // swapped association: arm 0 before the midpoint equals arm 1 after
        for t in [0u32, 57, 123, 199] {
            assert_eq!(
                sched.models_at(t).unwrap()[0],
                sched.models_at(t + 200).unwrap()[1]
            );
            assert_eq!(
                sched.models_at(t).unwrap()[1],
                sched.models_at(t + 200).unwrap()[0]
            );
        }
        assert_eq!(sched.change_log().change_points, vec![200]);
    }

    #[test]
    fn reversal_of_identical_arms_is_noop() {
        let sched = make_reversal_schedule(0.7, 0.1, 0.7, 0.1, 100).unwrap();
        assert_eq!(sched.models_at(10).unwrap(), sched.models_at(60).unwrap());
        assert!(sched.change_log().change_points.is_empty());
    }

    #[test]
    fn gradual_constant_sigma_track() {
        let spec = GradualSpec {
            arms: vec![
                ArmTrack {
                    mu: Sinusoid { offset: 0.7, amplitude: 0.3, period: 400.0, phase: 0.0 },
                    sigma: Sinusoid::constant(0.05),
                },
                ArmTrack {
                    mu: Sinusoid { offset: 0.7, amplitude: -0.3, period: 400.0, phase: 0.0 },
                    sigma: Sinusoid { offset: 0.275, amplitude: 0.225, period: 400.0, phase: 0.0 },
                },
            ],
        };
        let sched = EnvironmentSchedule::from_gradual(400, spec).unwrap();
        for t in [0, 100, 200, 399] {
            match sched.models_at(t).unwrap()[0] {
                RewardModel::Gaussian { sigma, .. } => assert_eq!(sigma, 0.05),
                _ => panic!("expected gaussian"),
            }
        }
        // arms drift in antiphase and cross at the half period
        let m = sched.models_at(100).unwrap();
        assert!(m[0].mean() > 0.99 && m[1].mean() < 0.41, "{:?}", m);
    }

    #[test]
    fn random_volatile_singleton_pool() {
        let mut rng = stream_rng(5, 0);
        let pair = vec![RewardModel::gaussian(1.0, 0.05), RewardModel::gaussian(0.4, 0.05)];
        let sched = make_random_volatile(&[pair.clone()], 400, &mut rng).unwrap();
        // every segment identical, so no real change points
        assert!(sched.change_log().change_points.is_empty());
        assert_eq!(sched.models_at(399).unwrap(), pair);
    }

    #[test]
    fn random_volatile_partitions_horizon() {
        let pool: Vec<Vec<RewardModel>> = (0..4)
            .map(|i| {
                vec![
                    RewardModel::gaussian(1.0, 0.05 + 0.1 * i as f64),
                    RewardModel::gaussian(0.4, 0.05),
                ]
            })
            .collect();
        for s in 0..20u64 {
            let mut rng = stream_rng(9, s);
            let sched = make_random_volatile(&pool, 401, &mut rng).unwrap();
            assert_eq!(sched.horizon(), 401);
            // total on the horizon
            assert!(sched.models_at(400).is_ok());
            assert!(sched.models_at(401).is_err());
        }
    }

    #[test]
    fn random_volatile_rejects_short_horizon() {
        let mut rng = stream_rng(5, 1);
        let pair = vec![RewardModel::gaussian(1.0, 0.05), RewardModel::gaussian(0.4, 0.05)];
        assert!(make_random_volatile(&[pair], 8, &mut rng).is_err());
    }

    #[test]
    fn random_volatile_change_count_is_uniform() {
        // chi-squared frequency test over the 21 possible change counts
        let pair = vec![RewardModel::gaussian(1.0, 0.05), RewardModel::gaussian(0.4, 0.05)];
        let pool = [pair];
        let n = 10_000usize;
        let mut counts = [0u32; 21];
        for s in 0..n {
            let mut rng = stream_rng(77, s as u64);
            let sched = make_random_volatile(&pool, 4000, &mut rng).unwrap();
            // segments = changes + 1; identical pool entries hide the changes
            // from the change log, so recount from the boundary structure
            let segs = match &sched.kind {
                ScheduleKind::Segments(s) => s.len(),
                _ => unreachable!(),
            };
            counts[segs - 1 - 10] += 1;
        }
        let expected = n as f64 / 21.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // critical value of chi-squared with 20 dof at p = 0.01
        assert!(chi2 < 37.566, "chi2 {chi2} counts {counts:?}");
    }
}

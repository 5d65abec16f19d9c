//! Context encoding from population-level social information: environment
//! change EC(t), conformity C(t) and uncertainty U(t).
//!
//! Estimates are per-step snapshots: arms nobody chose this step keep their
//! previously estimated mean and spread, while the uncertainty measure runs
//! only on the arms with fresh observations. The context is computed once per
//! timestep and shared by every agent; only the thresholds are applied
//! per controller.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::learning::SocialInfo;
use crate::odpu::odpu_from_estimates;

/// Detector thresholds and the lookback for change detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextParams {
    pub th_ec: f64,
    pub th_u: f64,
    pub delta: u32,
}

impl Default for ContextParams {
    fn default() -> Self {
        ContextParams { th_ec: 0.15, th_u: 0.1, delta: 1 }
    }
}

/// Binary context flags plus the underlying uncertainty value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub ec: bool,
    pub conf: bool,
    pub unc: bool,
    pub odpu_value: f64,
}

impl Context {
    pub const ZERO: Context = Context { ec: false, conf: false, unc: false, odpu_value: 0.0 };

    /// Row index in (EC, C, U) truth-table order: 4 EC + 2 C + U.
    pub fn state_index(&self) -> usize {
        4 * usize::from(self.ec) + 2 * usize::from(self.conf) + usize::from(self.unc)
    }
}

/// Fresh per-arm statistics for a single step. Arms without observations
/// carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats {
    pub mu: Vec<Option<f64>>,
    pub sigma: Vec<Option<f64>>,
    pub counts: Vec<u32>,
}

/// Mean and sample standard deviation (n-1 denominator) of the rewards
/// received on each arm this step; counts equal the action frequencies.
pub fn estimate_arm_stats(info: &SocialInfo) -> ArmStats {
    let arms = info.freq.len();
    let mut sum = vec![0.0f64; arms];
    let mut sum_sq = vec![0.0f64; arms];
    for r in &info.rewards {
        let a = r.action as usize;
        sum[a] += r.reward;
        sum_sq[a] += r.reward * r.reward;
    }
    let mut mu = vec![None; arms];
    let mut sigma = vec![None; arms];
    for a in 0..arms {
        let n = info.freq[a];
        if n == 0 {
            continue;
        }
        let mean = sum[a] / n as f64;
        mu[a] = Some(mean);
        sigma[a] = Some(if n < 2 {
            0.0
        } else {
            ((sum_sq[a] - n as f64 * mean * mean).max(0.0) / (n as f64 - 1.0)).sqrt()
        });
    }
    ArmStats { mu, sigma, counts: info.freq.clone() }
}

fn argmax_opt(values: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn argmax_u32(values: &[u32]) -> usize {
    let mut best = 0u32;
    let mut idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    idx
}

/// Environment change: did the estimated-optimal arm's mean move more than
/// `th_ec` across the lookback? The optimal arm is fixed by the current
/// estimates; an unavailable past reads as "no change".
pub fn detect_ec(mu_now: &[Option<f64>], mu_past: Option<&[Option<f64>]>, th_ec: f64) -> bool {
    ec_delta(mu_now, mu_past).map_or(false, |d| d > th_ec)
}

fn ec_delta(mu_now: &[Option<f64>], mu_past: Option<&[Option<f64>]>) -> Option<f64> {
    let past = mu_past?;
    let star = argmax_opt(mu_now)?;
    let now = mu_now[star]?;
    let before = past.get(star).copied().flatten()?;
    Some((now - before).abs())
}

/// Conformity: the majority performs the estimated-best action, and no
/// environment change is flagged.
pub fn detect_conformity(mu_hat: &[Option<f64>], freq: &[u32], ec: bool) -> bool {
    if ec {
        return false;
    }
    match argmax_opt(mu_hat) {
        Some(best) => best == argmax_u32(freq),
        None => false,
    }
}

/// Uncertainty: the order-statistic measure over the freshly observed arms
/// exceeds `th_u` (strict). Fewer than two observed arms reads as certainty.
pub fn detect_uncertainty(
    mu_hat: &[Option<f64>],
    sigma_hat: &[Option<f64>],
    counts: &[u32],
    th_u: f64,
    tol: f64,
) -> (bool, f64) {
    let mu: Vec<f64> = mu_hat.iter().map(|v| v.unwrap_or(0.0)).collect();
    let sigma: Vec<f64> = sigma_hat.iter().map(|v| v.unwrap_or(0.0)).collect();
    // arms with no estimate have count zero and are excluded downstream
    let odpu = odpu_from_estimates(&mu, &sigma, counts, tol).unwrap_or(0.0);
    (odpu > th_u, odpu)
}

/// Threshold-independent context material for one step, shared by all
/// agents; flags are derived from it per threshold set.
///
/// Detectors run on the fresh per-step estimates: an arm that nobody chose
/// this step cannot claim the argmax with a stale value, otherwise a herded
/// population would never notice a reward reversal on its own arm. The
/// retained vectors (stale values kept for unobserved arms) feed the network
/// controller and exports.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextRaw {
    /// fresh mean estimates for arms observed this step
    pub mu_fresh: Vec<Option<f64>>,
    /// fresh spread estimates for arms observed this step
    pub sigma_fresh: Vec<Option<f64>>,
    /// retained mean estimates (previous value kept for empty arms)
    pub mu_hat: Vec<Option<f64>>,
    /// retained spread estimates
    pub sigma_hat: Vec<Option<f64>>,
    /// action frequencies this step
    pub counts: Vec<u32>,
    /// |mu*_now - mu*_past| across the lookback, when the past is available
    pub ec_delta: Option<f64>,
    /// argmax of fresh means equals argmax of frequencies
    pub conformity_match: bool,
    pub odpu: f64,
}

impl ContextRaw {
    pub fn zero(arms: usize) -> Self {
        ContextRaw {
            mu_fresh: vec![None; arms],
            sigma_fresh: vec![None; arms],
            mu_hat: vec![None; arms],
            sigma_hat: vec![None; arms],
            counts: vec![0; arms],
            ec_delta: None,
            conformity_match: false,
            odpu: 0.0,
        }
    }

    /// Applies a threshold set to the shared material.
    pub fn derive(&self, params: &ContextParams) -> Context {
        let ec = self.ec_delta.map_or(false, |d| d > params.th_ec);
        let conf = self.conformity_match && !ec;
        let unc = self.odpu > params.th_u;
        Context { ec, conf, unc, odpu_value: self.odpu }
    }

    /// Inputs for the network controller: retained estimates (0 when never
    /// observed) and frequencies normalized to proportions.
    pub fn fcn_inputs(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mu = self.mu_hat.iter().map(|v| v.unwrap_or(0.0)).collect();
        let sigma = self.sigma_hat.iter().map(|v| v.unwrap_or(0.0)).collect();
        let total: u32 = self.counts.iter().sum();
        let freq = if total == 0 {
            vec![0.0; self.counts.len()]
        } else {
            self.counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        (mu, sigma, freq)
    }
}

/// Maintains retained estimates and the lookback window across a run.
#[derive(Debug, Clone)]
pub struct ContextTracker {
    arms: usize,
    delta: u32,
    odpu_tol: f64,
    retained_mu: Vec<Option<f64>>,
    retained_sigma: Vec<Option<f64>>,
    /// snapshots of `retained_mu` after each observed step, oldest first
    mu_snapshots: VecDeque<Vec<Option<f64>>>,
}

impl ContextTracker {
    pub fn new(arms: usize, delta: u32, odpu_tol: f64) -> Self {
        assert!(delta >= 1);
        ContextTracker {
            arms,
            delta,
            odpu_tol,
            retained_mu: vec![None; arms],
            retained_sigma: vec![None; arms],
            mu_snapshots: VecDeque::with_capacity(delta as usize + 1),
        }
    }

    /// Folds one step's social information into the tracker and returns the
    /// shared context material for the next decision point.
    pub fn observe(&mut self, info: &SocialInfo) -> ContextRaw {
        let fresh = estimate_arm_stats(info);
        // past values are read from the retained snapshots so the lookback
        // stays defined while an arm goes briefly unobserved
        let past = if self.mu_snapshots.len() >= self.delta as usize {
            let idx = self.mu_snapshots.len() - self.delta as usize;
            Some(self.mu_snapshots[idx].as_slice())
        } else {
            None
        };
        let ec_delta = ec_delta(&fresh.mu, past);
        let conformity_match = match argmax_opt(&fresh.mu) {
            Some(best) => best == argmax_u32(&fresh.counts),
            None => false,
        };
        let (_, odpu) =
            detect_uncertainty(&fresh.mu, &fresh.sigma, &fresh.counts, 0.0, self.odpu_tol);

        for a in 0..self.arms {
            if let Some(m) = fresh.mu[a] {
                self.retained_mu[a] = Some(m);
                self.retained_sigma[a] = fresh.sigma[a];
            }
        }
        if self.mu_snapshots.len() > self.delta as usize {
            self.mu_snapshots.pop_front();
        }
        self.mu_snapshots.push_back(self.retained_mu.clone());

        ContextRaw {
            mu_fresh: fresh.mu,
            sigma_fresh: fresh.sigma,
            mu_hat: self.retained_mu.clone(),
            sigma_hat: self.retained_sigma.clone(),
            counts: fresh.counts,
            ec_delta,
            conformity_match,
            odpu,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{RewardRecord, SocialInfo};
    use crate::rng::stream_rng;

    fn info(entries: &[(u32, f64)]) -> SocialInfo {
        SocialInfo::from_records(
            1,
            2,
            entries
                .iter()
                .enumerate()
                .map(|(i, &(action, reward))| RewardRecord { agent: i as u32, action, reward })
                .collect(),
        )
    }

    #[test]
    fn constant_sample_yields_zero_spread() {
        let stats = estimate_arm_stats(&info(&[(0, 0.7), (0, 0.7), (0, 0.7)]));
        assert!((stats.mu[0].unwrap() - 0.7).abs() < 1e-12);
        assert!(stats.sigma[0].unwrap() < 1e-7);
        assert_eq!(stats.mu[1], None);
        assert_eq!(stats.counts, vec![3, 0]);
    }

    #[test]
    fn two_point_mean() {
        let stats = estimate_arm_stats(&info(&[(1, 0.4), (1, 0.6)]));
        assert!((stats.mu[1].unwrap() - 0.5).abs() < 1e-12);
        // sample sd of {0.4, 0.6} with the n-1 denominator
        let expected_sd = 0.1f64 * std::f64::consts::SQRT_2;
        assert!((stats.sigma[1].unwrap() - expected_sd).abs() < 1e-12);
    }

    #[test]
    fn large_sample_mean_is_tight() {
        // SE = 0.05 / sqrt(1000) ~ 1.6e-3
        let mut rng = stream_rng(21, 0);
        let model = crate::env::RewardModel::gaussian(1.0, 0.05);
        let records: Vec<RewardRecord> = (0..1000)
            .map(|i| RewardRecord { agent: i, action: 0, reward: model.sample(&mut rng) })
            .collect();
        let stats = estimate_arm_stats(&SocialInfo::from_records(1, 2, records));
        assert!((stats.mu[0].unwrap() - 1.0).abs() < 0.005);
        assert!((stats.sigma[0].unwrap() - 0.05).abs() < 0.01);
    }

    #[test]
    fn ec_threshold_semantics() {
        let now = vec![Some(1.0), Some(0.4)];
        let past = vec![Some(0.4), Some(0.4)];
        assert!(detect_ec(&now, Some(&past), 0.15));
        let past = vec![Some(0.9), Some(0.4)];
        assert!(!detect_ec(&now, Some(&past), 0.15));
        assert!(!detect_ec(&now, None, 0.15));
    }

    #[test]
    fn ec_ignores_non_optimal_arms() {
        let now = vec![Some(1.0), Some(0.4)];
        for other in [0.0, 0.2, 0.39, -3.0] {
            let past = vec![Some(1.05), Some(other)];
            assert!(!detect_ec(&now, Some(&past), 0.15), "other {other}");
        }
    }

    #[test]
    fn conformity_cases() {
        let mu = vec![Some(1.0), Some(0.4)];
        assert!(detect_conformity(&mu, &[80, 20], false));
        assert!(!detect_conformity(&mu, &[80, 20], true));
        assert!(!detect_conformity(&mu, &[20, 80], false));
    }

    #[test]
    fn conformity_is_reset_by_change_for_all_inputs() {
        for freq in [[80u32, 20], [20, 80], [50, 50]] {
            for mu0 in [0.1, 0.9] {
                let mu = vec![Some(mu0), Some(0.5)];
                assert!(!detect_conformity(&mu, &freq, true));
            }
        }
    }

    #[test]
    fn uncertainty_examples() {
        let (u, v) = detect_uncertainty(
            &[Some(1.0), Some(0.4)],
            &[Some(0.05), Some(0.05)],
            &[50, 50],
            0.1,
            1e-8,
        );
        assert!(!u);
        assert!(v < 1e-6);

        let (u, v) = detect_uncertainty(
            &[Some(0.7), Some(0.7)],
            &[Some(0.3), Some(0.3)],
            &[50, 50],
            0.1,
            1e-8,
        );
        assert!(u);
        assert!((v - 0.5).abs() < 1e-6);

        // strict comparison at the boundary
        let mut ctx = ContextRaw::zero(2);
        ctx.odpu = 0.1;
        assert!(!ctx.derive(&ContextParams::default()).unc);
        ctx.odpu = 0.1 + 1e-12;
        assert!(ctx.derive(&ContextParams::default()).unc);
    }

    #[test]
    fn uncertainty_needs_two_observed_arms() {
        let (u, v) = detect_uncertainty(
            &[Some(1.0), None],
            &[Some(0.05), None],
            &[100, 0],
            0.1,
            1e-8,
        );
        assert!(!u);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn tracker_retains_stale_estimates() {
        let mut tracker = ContextTracker::new(2, 1, 1e-6);
        let raw = tracker.observe(&info(&[(0, 1.0), (1, 0.4)]));
        assert_eq!(raw.mu_hat[1], Some(0.4));
        // arm 1 unobserved now; its estimate persists
        let raw = tracker.observe(&info(&[(0, 1.0), (0, 1.0)]));
        assert_eq!(raw.mu_hat[1], Some(0.4));
        assert_eq!(raw.counts, vec![2, 0]);
        // only one observed arm, so no uncertainty measure
        assert_eq!(raw.odpu, 0.0);
    }

    #[test]
    fn tracker_flags_change_after_lookback() {
        let mut tracker = ContextTracker::new(2, 1, 1e-6);
        let mk = |mu0: f64| info(&[(0, mu0), (0, mu0), (1, 0.2)]);
        let raw = tracker.observe(&mk(1.0));
        assert_eq!(raw.ec_delta, None);
        let raw = tracker.observe(&mk(1.0));
        assert_eq!(raw.ec_delta, Some(0.0));
        let raw = tracker.observe(&mk(0.3));
        // estimated optimum collapsed from 1.0 to 0.3
        assert!(raw.ec_delta.unwrap() > 0.6);
        assert!(raw.derive(&ContextParams::default()).ec);
        // conformity is suppressed while the change flag is up
        assert!(!raw.derive(&ContextParams::default()).conf);
    }

    #[test]
    fn derive_is_pure() {
        let mut raw = ContextRaw::zero(2);
        raw.ec_delta = Some(0.05);
        raw.conformity_match = true;
        raw.odpu = 0.25;
        let p = ContextParams::default();
        assert_eq!(raw.derive(&p), raw.derive(&p));
        let c = raw.derive(&p);
        assert!(!c.ec && c.conf && c.unc);
        assert_eq!(c.state_index(), 3);
    }

    #[test]
    fn herded_population_still_detects_reversal() {
        // everyone sits on arm 0; arm 1 has only a stale estimate slightly
        // above the post-reversal mean. The change detector must run on
        // fresh estimates, so the reversal on the herded arm still fires.
        let mut tracker = ContextTracker::new(2, 1, 1e-6);
        tracker.observe(&info(&[(0, 1.0), (0, 1.0), (1, 0.42)]));
        for _ in 0..5 {
            let raw = tracker.observe(&info(&[(0, 1.0), (0, 0.99), (0, 1.01)]));
            let c = raw.derive(&ContextParams::default());
            assert!(!c.ec && c.conf, "steady herd should read as conformity");
        }
        // reversal: the herded arm's fresh mean collapses to ~0.4
        let raw = tracker.observe(&info(&[(0, 0.40), (0, 0.41), (0, 0.39)]));
        let c = raw.derive(&ContextParams::default());
        assert!(c.ec, "fresh-estimate detector must flag the reversal");
        assert!(!c.conf);
    }
}

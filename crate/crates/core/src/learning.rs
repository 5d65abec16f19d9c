//! Individual epsilon-greedy learning and the two primitive social-learning
//! copy rules, observed through a latency window.
//!
//! Timesteps are 1-based here: social information for step `t` becomes
//! available once the whole population has acted at `t`, and a copy rule at
//! step `t` with latency `tau` reads the record at `t - tau`, which exists
//! only when `t - tau > 0`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::argmax_f64;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Per-agent estimated reward per action, updated by exponential averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub q: Vec<f64>,
    /// step size in (0, 1]
    pub beta: f64,
}

impl QTable {
    pub fn new(arms: usize, beta: f64) -> Self {
        assert!(beta > 0.0 && beta <= 1.0, "beta must be in (0,1], got {beta}");
        QTable { q: vec![0.0; arms], beta }
    }

    /// `q[a] <- q[a] + beta (r - q[a])`; other entries untouched.
    pub fn update(&mut self, action: usize, reward: f64) {
        self.q[action] += self.beta * (reward - self.q[action]);
    }

    pub fn greedy(&self) -> usize {
        argmax_f64(self.q.iter().copied())
    }
}

/// Greedy action with probability `1 - epsilon`, otherwise a uniformly random
/// arm (which may coincide with the greedy one).
pub fn epsilon_greedy(q: &QTable, epsilon: f64, rng: &mut SimRng) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.q.len())
    } else {
        q.greedy()
    }
}

/// One reward observation: who acted, what they chose, what they received.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub agent: u32,
    pub action: u32,
    pub reward: f64,
}

/// Population record for one timestep: action frequencies and every agent's
/// reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialInfo {
    /// 1-based timestep this record belongs to
    pub t: u32,
    /// action counts, summing to the population size
    pub freq: Vec<u32>,
    pub rewards: Vec<RewardRecord>,
}

impl SocialInfo {
    pub fn from_records(t: u32, arms: usize, rewards: Vec<RewardRecord>) -> Self {
        let mut freq = vec![0u32; arms];
        for r in &rewards {
            freq[r.action as usize] += 1;
        }
        SocialInfo { t, freq, rewards }
    }

    /// Action of the agent with the maximum reward; ties go to the lowest
    /// agent id.
    pub fn best_action(&self) -> Option<u32> {
        self.rewards
            .iter()
            .max_by(|a, b| {
                a.reward
                    .partial_cmp(&b.reward)
                    .unwrap()
                    .then(b.agent.cmp(&a.agent))
            })
            .map(|r| r.action)
    }

    /// Most frequent action; ties go to the lowest index.
    pub fn majority_action(&self) -> u32 {
        let mut best = 0u32;
        let mut best_idx = 0;
        for (i, &c) in self.freq.iter().enumerate() {
            if c > best {
                best = c;
                best_idx = i;
            }
        }
        best_idx as u32
    }
}

/// Ring buffer of recent `SocialInfo`, indexed by timestep.
#[derive(Debug, Clone)]
pub struct SocialHistory {
    ring: VecDeque<SocialInfo>,
    capacity: usize,
}

impl SocialHistory {
    /// `capacity` must cover the largest lag that will be queried
    /// (tau_max plus the context lookback).
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        SocialHistory { ring: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, info: SocialInfo) {
        if let Some(last) = self.ring.back() {
            assert_eq!(last.t + 1, info.t, "history must be pushed in step order");
        }
        if self.ring.len() == self.capacity {
            self.ring.pop_front();
        }
        self.ring.push_back(info);
    }

    /// The record for 1-based timestep `t`, if still retained.
    pub fn lookup(&self, t: u32) -> Option<&SocialInfo> {
        let first = self.ring.front()?.t;
        if t < first {
            return None;
        }
        self.ring.get((t - first) as usize)
    }

    pub fn latest(&self) -> Option<&SocialInfo> {
        self.ring.back()
    }
}

fn observe(hist: &SocialHistory, t: u32, tau: u32) -> Result<&SocialInfo> {
    if tau == 0 || t <= tau {
        return Err(Error::NotYetObservable { t, tau });
    }
    hist.lookup(t - tau).ok_or(Error::NotYetObservable { t, tau })
}

/// Copy the action of the individual with the best reward at `t - tau`.
pub fn success_based_copy(hist: &SocialHistory, t: u32, tau: u32) -> Result<usize> {
    let info = observe(hist, t, tau)?;
    info.best_action()
        .map(|a| a as usize)
        .ok_or(Error::NotYetObservable { t, tau })
}

/// Copy the most frequent action in the population at `t - tau`.
pub fn conformist_copy(hist: &SocialHistory, t: u32, tau: u32) -> Result<usize> {
    let info = observe(hist, t, tau)?;
    Ok(info.majority_action() as usize)
}

/// Reference models for the baseline comparisons: a perfect demonstrator, a
/// 90%-correct demonstrator, and a random one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Perfect,
    Correct90,
    Random,
}

/// Action suggested by a demonstrator model given the true optimal arm.
pub fn model_copy(kind: ModelKind, optimal_arm: usize, arms: usize, rng: &mut SimRng) -> usize {
    match kind {
        ModelKind::Perfect => optimal_arm,
        ModelKind::Correct90 => {
            if rng.random::<f64>() < 0.9 {
                optimal_arm
            } else {
                // uniform among the other arms
                let r = rng.random_range(0..arms - 1);
                if r >= optimal_arm {
                    r + 1
                } else {
                    r
                }
            }
        }
        ModelKind::Random => rng.random_range(0..arms),
    }
}

//! Experiment definitions, replicate orchestration, statistics aggregation
//! and cost accounting.

pub mod report;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::env::EnvironmentSchedule;
use crate::error::{Error, Result};
use crate::evolution::{
    run_competition, run_il_only_evolution, run_msl_population, run_replicates,
    run_sls_evolution, RunResult, SimParams, SlsChoice,
};
use crate::learning::{success_based_copy, RewardRecord, SocialHistory, SocialInfo};
use crate::meta::{ControllerAssets, MetaKind};
use crate::rng::{derive_seed, stream_rng};

/// What a single experiment compares.
#[derive(Debug, Clone)]
pub enum ExperimentMode {
    /// one lifetime-learning population per controller kind
    MetaCompare(Vec<MetaKind>),
    /// evolving populations: one per social-learning strategy, plus a pure
    /// individual-learning population
    SlsEvolution(Vec<SlsChoice>),
    /// one population mixing all the given controller kinds
    Competition(Vec<MetaKind>),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub env: EnvironmentSchedule,
    pub mode: ExperimentMode,
    pub replicates: usize,
    pub params: SimParams,
    /// half-open step windows for windowed reward averages
    pub eval_windows: Vec<(usize, usize)>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("experiment needs at least one replicate"));
        }
        let horizon = self.env.horizon() as usize;
        for &(lo, hi) in &self.eval_windows {
            if lo >= hi || hi > horizon {
                return Err(Error::config(format!(
                    "eval window [{lo}, {hi}) outside horizon {horizon}"
                )));
            }
        }
        if self.params.horizon != self.env.horizon() {
            return Err(Error::config(format!(
                "params horizon {} != environment horizon {}",
                self.params.horizon,
                self.env.horizon()
            )));
        }
        Ok(())
    }
}

/// Replicate set for one compared arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmResults {
    pub label: String,
    pub runs: Vec<RunResult>,
}

impl ArmResults {
    pub fn cum_psis(&self) -> Vec<f64> {
        self.runs.iter().map(RunResult::cumulative_psi).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.runs.iter().map(RunResult::total_cost).collect()
    }

    pub fn window_means(&self, lo: usize, hi: usize) -> Vec<f64> {
        self.runs.iter().map(|r| r.window_mean_psi(lo, hi)).collect()
    }

    /// Mean psi curve across replicates.
    pub fn mean_curve(&self) -> Vec<f64> {
        let steps = self.runs[0].psi.len();
        let mut out = vec![0.0; steps];
        for run in &self.runs {
            for (acc, v) in out.iter_mut().zip(&run.psi) {
                *acc += v;
            }
        }
        for v in out.iter_mut() {
            *v /= self.runs.len() as f64;
        }
        out
    }
}

/// Statistics across arms, computed on the cumulative rewards.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StatsReport {
    /// (label a, label b, two-sided rank-sum p)
    pub pairwise_wilcoxon: Vec<(String, String, f64)>,
    /// Friedman omnibus statistic and p-value
    pub friedman: Option<(f64, f64)>,
    pub avg_ranks: Vec<(String, f64)>,
    pub critical_difference: Option<f64>,
    /// linked groups of labels whose rank differences are not significant
    pub linked_groups: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub name: String,
    pub master_seed: u64,
    pub arms: Vec<ArmResults>,
    pub stats: StatsReport,
    /// environment change points, for plot markers
    pub change_points: Vec<u32>,
    /// half-open step windows used for the windowed summaries
    pub eval_windows: Vec<(usize, usize)>,
}

/// Cumulative exploration cost per run of one arm; non-decreasing series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostLedger {
    pub label: String,
    pub cumulative: Vec<Vec<f64>>,
}

impl CostLedger {
    pub fn from_arm(arm: &ArmResults) -> Self {
        CostLedger {
            label: arm.label.clone(),
            cumulative: arm.runs.iter().map(|r| r.cum_cost.clone()).collect(),
        }
    }

    pub fn totals(&self) -> Vec<f64> {
        self.cumulative.iter().map(|c| *c.last().unwrap_or(&0.0)).collect()
    }
}

/// Total exploration cost of a run: individual-learning executions times
/// the exploration rate.
pub fn exploration_cost(run: &RunResult) -> f64 {
    run.total_cost()
}

/// Runs every arm of the experiment and aggregates the cross-arm statistics.
pub fn run_experiment(
    spec: &ExperimentSpec,
    assets: &ControllerAssets,
    master_seed: u64,
) -> Result<ExperimentResults> {
    spec.validate()?;
    let mut arms = Vec::new();
    match &spec.mode {
        ExperimentMode::MetaCompare(kinds) => {
            for (i, kind) in kinds.iter().enumerate() {
                let arm_seed = derive_seed(master_seed, 101 + i as u64);
                let runs = run_replicates(spec.replicates, arm_seed, |seed| {
                    run_msl_population(&spec.env, *kind, assets, &spec.params, seed)
                })?;
                arms.push(ArmResults { label: kind.name().to_string(), runs });
            }
        }
        ExperimentMode::SlsEvolution(choices) => {
            for (i, sls) in choices.iter().enumerate() {
                let arm_seed = derive_seed(master_seed, 201 + i as u64);
                let runs = run_replicates(spec.replicates, arm_seed, |seed| {
                    run_sls_evolution(&spec.env, *sls, &spec.params, seed)
                })?;
                let label = runs[0].label.clone();
                arms.push(ArmResults { label, runs });
            }
            let arm_seed = derive_seed(master_seed, 299);
            let runs = run_replicates(spec.replicates, arm_seed, |seed| {
                run_il_only_evolution(&spec.env, &spec.params, seed)
            })?;
            arms.push(ArmResults { label: "il-only".to_string(), runs });
        }
        ExperimentMode::Competition(kinds) => {
            let arm_seed = derive_seed(master_seed, 301);
            let runs = run_replicates(spec.replicates, arm_seed, |seed| {
                run_competition(&spec.env, kinds, assets, &spec.params, seed)
            })?;
            arms.push(ArmResults { label: "competition".to_string(), runs });
        }
    }

    let stats = cross_arm_stats(&arms)?;
    Ok(ExperimentResults {
        name: spec.name.clone(),
        master_seed,
        change_points: spec.env.change_log().change_points,
        eval_windows: spec.eval_windows.clone(),
        arms,
        stats,
    })
}

/// Pairwise rank-sum tests plus Friedman/Nemenyi ranks over cumulative
/// rewards, when the shape allows.
pub fn cross_arm_stats(arms: &[ArmResults]) -> Result<StatsReport> {
    let mut report = StatsReport::default();
    if arms.len() < 2 {
        return Ok(report);
    }
    for i in 0..arms.len() {
        for j in i + 1..arms.len() {
            let p = stats::wilcoxon_rank_sum(&arms[i].cum_psis(), &arms[j].cum_psis())?;
            report.pairwise_wilcoxon.push((
                arms[i].label.clone(),
                arms[j].label.clone(),
                p,
            ));
        }
    }
    let runs = arms.iter().map(|a| a.runs.len()).min().unwrap_or(0);
    if runs >= 2 && (2..=20).contains(&arms.len()) {
        let matrix: Vec<Vec<f64>> = (0..runs)
            .map(|r| arms.iter().map(|a| a.runs[r].cumulative_psi()).collect())
            .collect();
        report.friedman = Some(stats::friedman(&matrix)?);
        let nem = stats::nemenyi_cd(&matrix)?;
        report.avg_ranks = arms
            .iter()
            .zip(&nem.avg_ranks)
            .map(|(a, &r)| (a.label.clone(), r))
            .collect();
        report.critical_difference = Some(nem.cd);
        report.linked_groups = nem
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| arms[i].label.clone()).collect())
            .collect();
    }
    Ok(report)
}

/// Frequency with which the success-based rule copies arm 0 on a frozen
/// population: `n_a` agents on arm 0 with hit probability `p_a`, `n_b` on
/// arm 1 with `p_b`, agent ids shuffled fresh each trial.
pub fn success_copy_frequency(
    n_a: usize,
    n_b: usize,
    p_a: f64,
    p_b: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    use rand::Rng;
    let mut rng = stream_rng(seed, 0);
    let mut arm_of: Vec<u32> = (0..n_a + n_b).map(|i| u32::from(i >= n_a)).collect();
    let mut hits = 0usize;
    for t in 1..=trials {
        for i in (1..arm_of.len()).rev() {
            let j = rng.random_range(0..=i);
            arm_of.swap(i, j);
        }
        let records: Vec<RewardRecord> = arm_of
            .iter()
            .enumerate()
            .map(|(id, &arm)| {
                let p = if arm == 0 { p_a } else { p_b };
                let reward = f64::from(rng.random::<f64>() < p);
                RewardRecord { agent: id as u32, action: arm, reward }
            })
            .collect();
        let mut hist = SocialHistory::new(2);
        hist.push(SocialInfo::from_records(t as u32, 2, records));
        if success_based_copy(&hist, t as u32 + 1, 1).unwrap() == 0 {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}

// built-in experiment definitions -------------------------------------------

/// The four fixed comparison environments: stable/volatile crossed with
/// low/high uncertainty.
pub fn experiment1_specs(m: usize, replicates: usize, horizon: u32) -> Vec<ExperimentSpec> {
    use crate::env::presets;
    let envs = [
        ("exp1-stable-low", presets::exp1_stable_low(horizon)),
        ("exp1-stable-high", presets::exp1_stable_high(horizon)),
        ("exp1-volatile-low", presets::exp1_volatile_low(horizon)),
        ("exp1-volatile-high", presets::exp1_volatile_high(horizon)),
    ];
    envs.into_iter()
        .map(|(name, env)| ExperimentSpec {
            name: name.to_string(),
            params: SimParams { m, horizon: env.horizon(), ..Default::default() },
            env,
            mode: ExperimentMode::MetaCompare(MetaKind::ALL.to_vec()),
            replicates,
            eval_windows: vec![(200, 250), (350, 400)],
        })
        .collect()
}

/// Random volatile environment drawn from the reconstructed pair pool.
pub fn experiment2_spec(
    m: usize,
    replicates: usize,
    horizon: u32,
    env_seed: u64,
) -> Result<ExperimentSpec> {
    use crate::env::presets;
    let mut rng = stream_rng(env_seed, 7);
    let env = presets::exp2_random(horizon, &mut rng)?;
    Ok(ExperimentSpec {
        name: "exp2-random".to_string(),
        params: SimParams { m, horizon: env.horizon(), ..Default::default() },
        env,
        mode: ExperimentMode::MetaCompare(MetaKind::ALL.to_vec()),
        replicates,
        eval_windows: vec![(200, 250), (350, 400)],
    })
}

/// Gradual sinusoidal environment.
pub fn experiment3_spec(m: usize, replicates: usize, horizon: u32) -> ExperimentSpec {
    use crate::env::presets;
    let env = presets::exp3_gradual(horizon);
    ExperimentSpec {
        name: "exp3-gradual".to_string(),
        params: SimParams { m, horizon: env.horizon(), ..Default::default() },
        env,
        mode: ExperimentMode::MetaCompare(MetaKind::ALL.to_vec()),
        replicates,
        eval_windows: vec![(200, 250), (350, 400)],
    }
}

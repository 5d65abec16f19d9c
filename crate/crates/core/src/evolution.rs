//! Agent-based population simulation.
//!
//! Three modes share one engine:
//!
//! * social-learning evolution: individual learners against one social
//!   learning strategy, with fitness-proportionate selection and type
//!   mutation every generation;
//! * meta-strategy populations: every agent runs the same meta controller
//!   for a lifetime, no selection (used for the performance comparisons and
//!   for controller training);
//! * meta-strategy competition: each agent carries its own controller kind,
//!   with selection, kind mutation and age tracking.
//!
//! One timestep is one generation: every agent acts once, rewards land, the
//! population record is frozen, and (in the evolving modes) selection and
//! mutation produce the next generation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{Context, ContextParams, ContextRaw, ContextTracker};
use crate::env::EnvironmentSchedule;
use crate::error::Result;
use crate::learning::{
    conformist_copy, epsilon_greedy, model_copy, success_based_copy, ModelKind, QTable,
    RewardRecord, SocialHistory, SocialInfo,
};
use crate::meta::{
    controller_feedback, select_strategy, ControllerAssets, CtlState, MetaKind, StrategyKind,
};
use crate::rng::{stream_rng, SimRng};

/// Minimum selection weight; keeps fitness-proportionate selection defined
/// when Gaussian rewards go negative.
pub const FITNESS_FLOOR: f64 = 1e-6;

/// Engine parameters shared by all modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// population size
    pub m: usize,
    /// horizon in generations
    pub horizon: u32,
    /// individual-learning exploration rate
    pub epsilon: f64,
    /// value-update step size
    pub beta: f64,
    /// social observation latency
    pub tau: u32,
    /// default context thresholds and lookback
    pub ctx: ContextParams,
    /// type mutation rate per generation (evolving modes)
    pub mr: f64,
    /// selection strength exponent
    pub s: f64,
    /// exploration rate of the bandit strategy selector
    pub epsilon_rl: f64,
    /// exploration constant of the UCB strategy selector
    pub ucb_c: f64,
    /// quadrature tolerance for the in-run uncertainty measure
    pub odpu_tol: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            m: 100,
            horizon: 400,
            epsilon: 0.1,
            beta: 0.2,
            tau: 1,
            ctx: ContextParams::default(),
            mr: 0.005,
            s: 1.0,
            epsilon_rl: 0.1,
            ucb_c: 1.0,
            odpu_tol: 1e-6,
        }
    }
}

/// The social-learning strategy evolving against individual learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlsChoice {
    Success,
    Conformist,
    /// appendix baselines: copy a demonstrator model instead of peers
    #[serde(skip)]
    Model(ModelKind),
}

/// What an agent is.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentKind {
    /// individual learner (social-learning evolution mode)
    Il,
    /// social learner (social-learning evolution mode)
    Sl,
    /// meta-social learner carrying its own controller
    Meta { kind: MetaKind, ctl: CtlState },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub q: QTable,
    pub kind: AgentKind,
    pub age: u32,
    pub last_action: u32,
    pub last_reward: f64,
}

/// Population snapshot: the agents plus the frozen social record.
#[derive(Debug, Clone)]
pub struct Population {
    pub agents: Vec<Agent>,
    pub history: SocialHistory,
    pub generation: u32,
}

/// Per-step context flags recorded with the default thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextPoint {
    pub ec: u8,
    pub conf: u8,
    pub unc: u8,
    pub odpu: f64,
}

/// Time series produced by one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub label: String,
    /// average population reward per generation
    pub psi: Vec<f64>,
    /// fraction of agents that executed individual learning per generation
    pub il_exec_frac: Vec<f64>,
    /// cumulative exploration cost: IL executions times epsilon
    pub cum_cost: Vec<f64>,
    /// per-generation composition, columns named by `ratio_labels`
    pub ratios: Vec<Vec<f64>>,
    pub ratio_labels: Vec<String>,
    /// per-generation mean age per kind (competition mode)
    pub mean_age: Option<Vec<Vec<f64>>>,
    /// context flags active at each generation (default thresholds)
    pub ctx_series: Vec<ContextPoint>,
    pub change_points: Vec<u32>,
}

impl RunResult {
    pub fn cumulative_psi(&self) -> f64 {
        self.psi.iter().sum()
    }

    /// Mean psi over the half-open window [lo, hi).
    pub fn window_mean_psi(&self, lo: usize, hi: usize) -> f64 {
        let hi = hi.min(self.psi.len());
        assert!(lo < hi, "empty window [{lo}, {hi})");
        self.psi[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
    }

    pub fn total_cost(&self) -> f64 {
        *self.cum_cost.last().unwrap_or(&0.0)
    }

    /// Mean of a ratio column over the final `n` generations.
    pub fn terminal_ratio(&self, column: usize, n: usize) -> f64 {
        let rows = self.ratios.len();
        let lo = rows.saturating_sub(n);
        let slice = &self.ratios[lo..];
        slice.iter().map(|r| r[column]).sum::<f64>() / slice.len() as f64
    }
}

enum Mode {
    SlsEvolution { sls: SlsChoice },
    MslPopulation { kind: MetaKind },
    Competition { kinds: Vec<MetaKind> },
}

struct Simulation<'a> {
    schedule: &'a EnvironmentSchedule,
    params: SimParams,
    mode: Mode,
    assets: ControllerAssets,
    agents: Vec<Agent>,
    history: SocialHistory,
    tracker: ContextTracker,
    raw: ContextRaw,
    rng: SimRng,
}

impl<'a> Simulation<'a> {
    fn new(
        schedule: &'a EnvironmentSchedule,
        params: SimParams,
        mode: Mode,
        assets: ControllerAssets,
        seed: u64,
    ) -> Result<Self> {
        let arms = schedule.arms();
        let mut rng = stream_rng(seed, 0);
        let agents = match &mode {
            Mode::SlsEvolution { .. } => {
                // initial half/half split of learner types
                (0..params.m)
                    .map(|i| Agent {
                        id: i as u32,
                        q: QTable::new(arms, params.beta),
                        kind: if rng.random::<f64>() < 0.5 { AgentKind::Sl } else { AgentKind::Il },
                        age: 0,
                        last_action: 0,
                        last_reward: 0.0,
                    })
                    .collect()
            }
            Mode::MslPopulation { kind } => (0..params.m)
                .map(|i| Agent {
                    id: i as u32,
                    q: QTable::new(arms, params.beta),
                    kind: AgentKind::Meta {
                        kind: *kind,
                        ctl: CtlState::fresh(*kind, params.beta, &assets.ql_init),
                    },
                    age: 0,
                    last_action: 0,
                    last_reward: 0.0,
                })
                .collect(),
            Mode::Competition { kinds } => (0..params.m)
                .map(|i| {
                    let kind = kinds[rng.random_range(0..kinds.len())];
                    Agent {
                        id: i as u32,
                        q: QTable::new(arms, params.beta),
                        kind: AgentKind::Meta {
                            kind,
                            ctl: CtlState::fresh(kind, params.beta, &assets.ql_init),
                        },
                        age: 0,
                        last_action: 0,
                        last_reward: 0.0,
                    }
                })
                .collect(),
        };
        let capacity = (params.tau + params.ctx.delta + 4) as usize;
        Ok(Simulation {
            schedule,
            tracker: ContextTracker::new(arms, params.ctx.delta, params.odpu_tol),
            raw: ContextRaw::zero(arms),
            history: SocialHistory::new(capacity),
            agents,
            params,
            mode,
            assets,
            rng,
        })
    }

    fn run(self, seed: u64, label: String) -> Result<RunResult> {
        self.run_with_agents(seed, label).map(|(result, _)| result)
    }

    fn run_with_agents(mut self, seed: u64, label: String) -> Result<(RunResult, Vec<Agent>)> {
        let horizon = self.params.horizon;
        let m = self.params.m;
        let arms = self.schedule.arms();

        let ratio_labels: Vec<String> = match &self.mode {
            Mode::SlsEvolution { .. } => vec!["A1".into(), "A2".into(), "SL".into()],
            Mode::MslPopulation { .. } => {
                vec!["IL".into(), "Success".into(), "Conformist".into()]
            }
            Mode::Competition { kinds } => kinds.iter().map(|k| k.name().to_string()).collect(),
        };
        let track_age = matches!(self.mode, Mode::Competition { .. });

        let mut result = RunResult {
            seed,
            label,
            psi: Vec::with_capacity(horizon as usize),
            il_exec_frac: Vec::with_capacity(horizon as usize),
            cum_cost: Vec::with_capacity(horizon as usize),
            ratios: Vec::with_capacity(horizon as usize),
            ratio_labels,
            mean_age: track_age.then(Vec::new),
            ctx_series: Vec::with_capacity(horizon as usize),
            change_points: self.schedule.change_log().change_points.clone(),
        };

        let mut fitness = vec![0.0f64; m];
        let mut records: Vec<RewardRecord> = Vec::with_capacity(m);
        let mut cost_acc = 0.0f64;

        for step in 0..horizon {
            let t = step + 1; // 1-based generation counter
            let models = self.schedule.models_at(step)?;
            let ctx_default = self.raw.derive(&self.params.ctx);
            let ctx_table =
                self.raw.derive(&self.assets.rule_table.context_params(self.params.ctx.delta));

            // per-step memo: every success/conformist copier sees the same
            // lagged record, so resolve each rule once; the network dispatch
            // is likewise a pure function of the shared context
            let succ_choice = success_based_copy(&self.history, t, self.params.tau).ok();
            let conf_choice = conformist_copy(&self.history, t, self.params.tau).ok();
            let optimal_arm = self.schedule.optimal_arm(step)?;
            let mut fcn_memo: Option<StrategyKind> = None;

            records.clear();
            let mut il_execs = 0usize;
            let mut psi_sum = 0.0f64;
            let mut strat_counts = [0usize; 3];

            for i in 0..m {
                let agent = &mut self.agents[i];
                // what the controller wants this step
                let intent = match (&mut agent.kind, &self.mode) {
                    (AgentKind::Il, _) => StrategyKind::IndividualLearning,
                    (AgentKind::Sl, Mode::SlsEvolution { sls }) => {
                        if t == 1 {
                            StrategyKind::IndividualLearning
                        } else {
                            match sls {
                                SlsChoice::Success => StrategyKind::SuccessBased,
                                SlsChoice::Conformist => StrategyKind::Conformist,
                                // demonstrator baselines execute through the
                                // success slot and are resolved below
                                SlsChoice::Model(_) => StrategyKind::SuccessBased,
                            }
                        }
                    }
                    (AgentKind::Sl, _) => unreachable!("Sl agents only exist in evolution mode"),
                    (AgentKind::Meta { kind: MetaKind::SlNe, .. }, _) => {
                        *fcn_memo.get_or_insert_with(|| {
                            let (mu, sigma, freq) = self.raw.fcn_inputs();
                            crate::meta::msl_fcn(&self.assets.fcn, &mu, &sigma, &freq)
                                .unwrap_or(StrategyKind::IndividualLearning)
                        })
                    }
                    (AgentKind::Meta { kind, ctl }, _) => {
                        let ctx: &Context =
                            if *kind == MetaKind::SlGa { &ctx_table } else { &ctx_default };
                        select_strategy(
                            *kind,
                            ctl,
                            ctx,
                            &self.raw,
                            &self.assets,
                            self.params.epsilon_rl,
                            self.params.ucb_c,
                            &mut self.rng,
                        )
                    }
                };

                // execution, with individual learning as the fallback while
                // the social record is unobservable
                let model_sls = match (&agent.kind, &self.mode) {
                    (AgentKind::Sl, Mode::SlsEvolution { sls: SlsChoice::Model(mk) }) => Some(*mk),
                    _ => None,
                };
                let (action, executed) = if let (Some(mk), true) = (model_sls, t > 1) {
                    (model_copy(mk, optimal_arm, arms, &mut self.rng), StrategyKind::SuccessBased)
                } else {
                    match intent {
                        StrategyKind::IndividualLearning => (
                            epsilon_greedy(&agent.q, self.params.epsilon, &mut self.rng),
                            StrategyKind::IndividualLearning,
                        ),
                        StrategyKind::SuccessBased => match succ_choice {
                            Some(a) => (a, StrategyKind::SuccessBased),
                            None => (
                                epsilon_greedy(&agent.q, self.params.epsilon, &mut self.rng),
                                StrategyKind::IndividualLearning,
                            ),
                        },
                        StrategyKind::Conformist => match conf_choice {
                            Some(a) => (a, StrategyKind::Conformist),
                            None => (
                                epsilon_greedy(&agent.q, self.params.epsilon, &mut self.rng),
                                StrategyKind::IndividualLearning,
                            ),
                        },
                    }
                };

                let reward = models[action].sample(&mut self.rng);
                agent.q.update(action, reward);
                if let AgentKind::Meta { ctl, .. } = &mut agent.kind {
                    controller_feedback(ctl, reward);
                }
                agent.last_action = action as u32;
                agent.last_reward = reward;

                if executed == StrategyKind::IndividualLearning {
                    il_execs += 1;
                }
                strat_counts[executed.code() as usize] += 1;
                psi_sum += reward;
                fitness[i] = reward;
                records.push(RewardRecord { agent: agent.id, action: action as u32, reward });
            }

            // freeze the population record and fold it into the context
            let info = SocialInfo::from_records(t, arms, records.clone());
            self.raw = self.tracker.observe(&info);
            self.history.push(info);

            // bookkeeping
            let psi = psi_sum / m as f64;
            cost_acc += il_execs as f64 * self.params.epsilon;
            result.psi.push(psi);
            result.il_exec_frac.push(il_execs as f64 / m as f64);
            result.cum_cost.push(cost_acc);
            result.ctx_series.push(ContextPoint {
                ec: ctx_default.ec.into(),
                conf: ctx_default.conf.into(),
                unc: ctx_default.unc.into(),
                odpu: ctx_default.odpu_value,
            });
            result.ratios.push(self.composition(&strat_counts));
            if let Some(ages) = result.mean_age.as_mut() {
                ages.push(self.mean_ages());
            }

            // generation turnover
            match &self.mode {
                Mode::MslPopulation { .. } => {}
                Mode::SlsEvolution { .. } | Mode::Competition { .. } => {
                    let selected = roulette_select(&fitness, self.params.s, m, &mut self.rng);
                    self.agents = next_generation(&self.agents, &selected);
                    let kind_set: Option<&[MetaKind]> = match &self.mode {
                        Mode::Competition { kinds } => Some(kinds),
                        _ => None,
                    };
                    mutate_population(
                        &mut self.agents,
                        self.params.mr,
                        kind_set,
                        self.params.beta,
                        &self.assets.ql_init,
                        &mut self.rng,
                    );
                }
            }
            let _ = &t;
        }
        Ok((result, self.agents))
    }

    /// Composition row for the ratios table.
    fn composition(&self, strat_counts: &[usize; 3]) -> Vec<f64> {
        let m = self.params.m as f64;
        match &self.mode {
            Mode::SlsEvolution { .. } => {
                // A1/A2: individual learners split by current action
                let mut a = [0usize; 2];
                let mut sl = 0usize;
                for agent in &self.agents {
                    match agent.kind {
                        AgentKind::Il => a[(agent.last_action as usize).min(1)] += 1,
                        _ => sl += 1,
                    }
                }
                vec![a[0] as f64 / m, a[1] as f64 / m, sl as f64 / m]
            }
            Mode::MslPopulation { .. } => {
                strat_counts.iter().map(|&c| c as f64 / m).collect()
            }
            Mode::Competition { kinds } => {
                let mut counts = vec![0usize; kinds.len()];
                for agent in &self.agents {
                    if let AgentKind::Meta { kind, .. } = &agent.kind {
                        if let Some(pos) = kinds.iter().position(|k| k == kind) {
                            counts[pos] += 1;
                        }
                    }
                }
                counts.into_iter().map(|c| c as f64 / m).collect()
            }
        }
    }

    fn mean_ages(&self) -> Vec<f64> {
        let kinds = match &self.mode {
            Mode::Competition { kinds } => kinds,
            _ => return Vec::new(),
        };
        let mut sums = vec![0.0f64; kinds.len()];
        let mut counts = vec![0usize; kinds.len()];
        for agent in &self.agents {
            if let AgentKind::Meta { kind, .. } = &agent.kind {
                if let Some(pos) = kinds.iter().position(|k| k == kind) {
                    sums[pos] += agent.age as f64;
                    counts[pos] += 1;
                }
            }
        }
        sums.iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    }
}

/// Fitness-proportionate selection with strength exponent `s`:
/// p_i = max(f_i, floor)^s / sum_j max(f_j, floor)^s, m draws with
/// replacement.
pub fn roulette_select(fitness: &[f64], s: f64, m: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(fitness.len());
    let mut total = 0.0f64;
    for &f in fitness {
        total += f.max(FITNESS_FLOOR).powf(s);
        cumulative.push(total);
    }
    (0..m)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cumulative.partition_point(|&c| c <= u).min(fitness.len() - 1)
        })
        .collect()
}

/// Clones the selected agents into the next generation. The first copy of a
/// source agent inherits its age plus one; further copies restart at zero.
fn next_generation(agents: &[Agent], selected: &[usize]) -> Vec<Agent> {
    let ages = age_update(selected, &agents.iter().map(|a| a.age).collect::<Vec<_>>());
    selected
        .iter()
        .zip(ages)
        .enumerate()
        .map(|(slot, (&src, age))| {
            let mut agent = agents[src].clone();
            agent.id = slot as u32;
            agent.age = age;
            agent
        })
        .collect()
}

/// Ages for the selected copies: first copy of each source keeps the lineage
/// (age + 1), later copies are newborns.
pub fn age_update(selected: &[usize], ages: &[u32]) -> Vec<u32> {
    let mut seen = vec![false; ages.len()];
    selected
        .iter()
        .map(|&src| {
            if seen[src] {
                0
            } else {
                seen[src] = true;
                ages[src] + 1
            }
        })
        .collect()
}

/// Type mutation. Without a kind set (social-learning evolution) each agent
/// flips between individual and social learner with probability `mr`; with a
/// kind set (competition) the controller kind is resampled uniformly. A
/// mutated agent keeps its reward estimates, gets a fresh controller, and
/// restarts its age.
pub fn mutate_population(
    agents: &mut [Agent],
    mr: f64,
    kind_set: Option<&[MetaKind]>,
    beta: f64,
    ql_init: &[[f64; 3]; 8],
    rng: &mut SimRng,
) {
    if mr <= 0.0 {
        return;
    }
    for agent in agents.iter_mut() {
        if rng.random::<f64>() >= mr {
            continue;
        }
        match (&mut agent.kind, kind_set) {
            (kind @ AgentKind::Il, None) => *kind = AgentKind::Sl,
            (kind @ AgentKind::Sl, None) => *kind = AgentKind::Il,
            (AgentKind::Meta { kind, ctl }, Some(set)) => {
                let new_kind = set[rng.random_range(0..set.len())];
                *kind = new_kind;
                *ctl = CtlState::fresh(new_kind, beta, ql_init);
            }
            _ => {}
        }
        agent.age = 0;
    }
}

/// Evolution of individual learners against one social-learning strategy.
pub fn run_sls_evolution(
    schedule: &EnvironmentSchedule,
    sls: SlsChoice,
    params: &SimParams,
    seed: u64,
) -> Result<RunResult> {
    let label = match sls {
        SlsChoice::Success => "success".to_string(),
        SlsChoice::Conformist => "conformist".to_string(),
        SlsChoice::Model(mk) => format!("model-{mk:?}").to_ascii_lowercase(),
    };
    Simulation::new(schedule, *params, Mode::SlsEvolution { sls }, ControllerAssets::default(), seed)?
        .run(seed, label)
}

/// A pure individual-learning population (no social learners, no mutation).
pub fn run_il_only_evolution(
    schedule: &EnvironmentSchedule,
    params: &SimParams,
    seed: u64,
) -> Result<RunResult> {
    let mut sim = Simulation::new(
        schedule,
        SimParams { mr: 0.0, ..*params },
        Mode::SlsEvolution { sls: SlsChoice::Success },
        ControllerAssets::default(),
        seed,
    )?;
    for agent in &mut sim.agents {
        agent.kind = AgentKind::Il;
    }
    sim.run(seed, "il-only".to_string())
}

/// Lifetime meta-social learning: all agents run the given controller kind.
pub fn run_msl_population(
    schedule: &EnvironmentSchedule,
    kind: MetaKind,
    assets: &ControllerAssets,
    params: &SimParams,
    seed: u64,
) -> Result<RunResult> {
    Simulation::new(schedule, *params, Mode::MslPopulation { kind }, assets.clone(), seed)?
        .run(seed, kind.name().to_string())
}

/// Like [`run_msl_population`] but also returns the final agents, exposing
/// their learned controller state to offline training.
pub fn run_msl_population_with_agents(
    schedule: &EnvironmentSchedule,
    kind: MetaKind,
    assets: &ControllerAssets,
    params: &SimParams,
    seed: u64,
) -> Result<(RunResult, Vec<Agent>)> {
    Simulation::new(schedule, *params, Mode::MslPopulation { kind }, assets.clone(), seed)?
        .run_with_agents(seed, kind.name().to_string())
}

/// Evolutionary competition among controller kinds with selection strength
/// and age tracking.
pub fn run_competition(
    schedule: &EnvironmentSchedule,
    kinds: &[MetaKind],
    assets: &ControllerAssets,
    params: &SimParams,
    seed: u64,
) -> Result<RunResult> {
    Simulation::new(
        schedule,
        *params,
        Mode::Competition { kinds: kinds.to_vec() },
        assets.clone(),
        seed,
    )?
    .run(seed, "competition".to_string())
}

/// Runs `n` independent replicates with derived seeds.
pub fn run_replicates<F>(n: usize, master_seed: u64, runner: F) -> Result<Vec<RunResult>>
where
    F: Fn(u64) -> Result<RunResult> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| runner(crate::rng::derive_seed(master_seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets;

    fn low_unc() -> EnvironmentSchedule {
        presets::reversal_low(400)
    }

    #[test]
    fn first_generation_is_individual_learning_everywhere() {
        let env = low_unc();
        let r = run_sls_evolution(&env, SlsChoice::Success, &SimParams::default(), 7).unwrap();
        assert_eq!(r.il_exec_frac[0], 1.0);
        // with tau = 1 the social learners can copy from generation 2 on
        assert!(r.il_exec_frac[2] < 1.0);
    }

    #[test]
    fn il_only_population_reaches_mean_field_plateau() {
        // uniform exploration that may repeat the greedy arm:
        // (1 - eps) mu* + eps (mu1 + mu2) / 2 = 0.9 + 0.1 * 0.7 = 0.97
        let env = low_unc();
        let params = SimParams { m: 100, ..Default::default() };
        let runs = run_replicates(8, 11, |seed| run_il_only_evolution(&env, &params, seed)).unwrap();
        let plateau: f64 =
            runs.iter().map(|r| r.window_mean_psi(100, 200)).sum::<f64>() / runs.len() as f64;
        assert!((plateau - 0.97).abs() < 0.01, "plateau {plateau}");
    }

    #[test]
    fn conformist_population_beats_pure_individual_learning() {
        let env = low_unc();
        let params = SimParams::default();
        let conf: f64 = run_replicates(6, 13, |seed| {
            run_sls_evolution(&env, SlsChoice::Conformist, &params, seed)
        })
        .unwrap()
        .iter()
        .map(|r| r.window_mean_psi(150, 200))
        .sum::<f64>()
            / 6.0;
        let il: f64 = run_replicates(6, 13, |seed| run_il_only_evolution(&env, &params, seed))
            .unwrap()
            .iter()
            .map(|r| r.window_mean_psi(150, 200))
            .sum::<f64>()
            / 6.0;
        assert!(
            conf > il + 0.005,
            "conformist population should avoid the exploration cost: {conf} vs {il}"
        );
    }

    #[test]
    fn roulette_degenerate_fitness() {
        let mut rng = stream_rng(17, 0);
        let selected = roulette_select(&[1.0, 0.0, 0.0], 1.0, 1000, &mut rng);
        let zeros = selected.iter().filter(|&&i| i != 0).count();
        // floored weights leave ~2e-6 probability mass on the zero-fitness pair
        assert!(zeros < 5, "selected {zeros} zero-fitness agents");
    }

    #[test]
    fn roulette_uniform_cases() {
        let mut rng = stream_rng(17, 1);
        // equal fitness: each index within 3 standard errors of uniform
        let n = 100_000;
        let selected = roulette_select(&[0.7; 4], 1.0, n, &mut rng);
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        for idx in 0..4 {
            let f = selected.iter().filter(|&&i| i == idx).count() as f64 / n as f64;
            assert!((f - 0.25).abs() < 3.0 * se + 0.003, "idx {idx} freq {f}");
        }
        // s = 0 flattens any fitness profile
        let selected = roulette_select(&[5.0, 0.1, 2.2, 0.9], 0.0, n, &mut rng);
        for idx in 0..4 {
            let f = selected.iter().filter(|&&i| i == idx).count() as f64 / n as f64;
            assert!((f - 0.25).abs() < 3.0 * se + 0.003, "idx {idx} freq {f}");
        }
    }

    #[test]
    fn roulette_respects_selection_strength() {
        let mut rng = stream_rng(17, 2);
        let n = 200_000;
        let fitness = [1.0, 0.5];
        let expected = |s: f64| 1.0f64.powf(s) / (1.0f64.powf(s) + 0.5f64.powf(s));
        for s in [0.5, 1.0, 2.0] {
            let selected = roulette_select(&fitness, s, n, &mut rng);
            let f = selected.iter().filter(|&&i| i == 0).count() as f64 / n as f64;
            let e = expected(s);
            assert!((f - e).abs() < 0.005, "s {s}: freq {f} expected {e}");
        }
    }

    #[test]
    fn age_update_rules() {
        // agent 0 selected three times: lineage + two newborns
        assert_eq!(age_update(&[0, 0, 0], &[4, 9]), vec![5, 0, 0]);
        // order of first appearance decides the lineage copy
        assert_eq!(age_update(&[1, 0, 1], &[4, 9]), vec![10, 5, 0]);
        // unselected agents simply vanish
        assert_eq!(age_update(&[1, 1], &[4, 9]), vec![10, 0]);
    }

    #[test]
    fn mutation_zero_is_identity() {
        let env = low_unc();
        let mut sim = Simulation::new(
            &env,
            SimParams::default(),
            Mode::SlsEvolution { sls: SlsChoice::Success },
            ControllerAssets::default(),
            3,
        )
        .unwrap();
        let before = sim.agents.clone();
        let mut rng = stream_rng(3, 9);
        mutate_population(&mut sim.agents, 0.0, None, 0.2, &[[0.0; 3]; 8], &mut rng);
        assert_eq!(before, sim.agents);
    }

    #[test]
    fn mutation_resamples_kinds_uniformly() {
        let mut rng = stream_rng(17, 3);
        let n = 100_000;
        let mut agents: Vec<Agent> = (0..n)
            .map(|i| Agent {
                id: i as u32,
                q: QTable::new(2, 0.2),
                kind: AgentKind::Meta {
                    kind: MetaKind::IlOnly,
                    ctl: CtlState::Stateless,
                },
                age: 7,
                last_action: 0,
                last_reward: 0.0,
            })
            .collect();
        mutate_population(&mut agents, 1.0, Some(&MetaKind::ALL), 0.2, &[[0.0; 3]; 8], &mut rng);
        let mut counts = std::collections::HashMap::new();
        for a in &agents {
            if let AgentKind::Meta { kind, .. } = &a.kind {
                *counts.entry(*kind).or_insert(0usize) += 1;
            }
            assert_eq!(a.age, 0, "mutated agents restart their age");
        }
        for kind in MetaKind::ALL {
            let f = counts[&kind] as f64 / n as f64;
            assert!((f - 1.0 / 13.0).abs() < 0.01, "{kind}: {f}");
        }
    }

    #[test]
    fn singleton_competition_keeps_full_ratio() {
        let env = low_unc();
        let params = SimParams { m: 50, horizon: 60, ..Default::default() };
        let r = run_competition(
            &env,
            &[MetaKind::SlRand],
            &ControllerAssets::default(),
            &params,
            23,
        )
        .unwrap();
        for row in &r.ratios {
            assert_eq!(row.len(), 1);
            assert_eq!(row[0], 1.0);
        }
    }

    #[test]
    fn competition_ratios_sum_to_one() {
        let env = low_unc();
        let params = SimParams { m: 120, horizon: 80, ..Default::default() };
        let r = run_competition(
            &env,
            &MetaKind::ALL,
            &ControllerAssets::default(),
            &params,
            29,
        )
        .unwrap();
        for row in &r.ratios {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        assert_eq!(r.mean_age.as_ref().unwrap().len(), 80);
    }

    #[test]
    fn il_only_cost_is_closed_form() {
        let env = low_unc();
        let params = SimParams { m: 100, horizon: 400, ..Default::default() };
        let r = run_msl_population(
            &env,
            MetaKind::IlOnly,
            &ControllerAssets::default(),
            &params,
            31,
        )
        .unwrap();
        assert!((r.total_cost() - 4000.0).abs() < 1e-9, "cost {}", r.total_cost());
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let env = low_unc();
        let params = SimParams { m: 60, horizon: 50, ..Default::default() };
        let assets = ControllerAssets::default();
        let a = run_msl_population(&env, MetaKind::SlEcConfUnc, &assets, &params, 5).unwrap();
        let b = run_msl_population(&env, MetaKind::SlEcConfUnc, &assets, &params, 5).unwrap();
        assert_eq!(a.psi, b.psi);
        assert_eq!(a.ratios, b.ratios);
        let c = run_msl_population(&env, MetaKind::SlEcConfUnc, &assets, &params, 6).unwrap();
        assert_ne!(a.psi, c.psi);
    }

    #[test]
    fn population_size_is_invariant() {
        let env = low_unc();
        let params = SimParams { m: 80, horizon: 100, ..Default::default() };
        let mut sim = Simulation::new(
            &env,
            params,
            Mode::Competition { kinds: MetaKind::ALL.to_vec() },
            ControllerAssets::default(),
            37,
        )
        .unwrap();
        for step in 0..3u32 {
            let _ = step;
            assert_eq!(sim.agents.len(), 80);
            let fitness: Vec<f64> = (0..80).map(|i| i as f64 * 0.01).collect();
            let selected = roulette_select(&fitness, 1.0, 80, &mut sim.rng);
            sim.agents = next_generation(&sim.agents, &selected);
            assert_eq!(sim.agents.len(), 80);
        }
    }
}

//! Offline controller training: a generational genetic algorithm over rule
//! tables and network weights, differential evolution over network weights,
//! and value pretraining for the Q-learning controller.
//!
//! Fitness of a candidate controller is the median, over a fixed set of
//! replicate seeds, of the cumulative average population reward achieved by
//! a population running that controller for a lifetime. The seed set is
//! frozen per training run, so fitness is deterministic and elite fitness
//! can never regress.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::env::EnvironmentSchedule;
use crate::error::{Error, Result};
use crate::evolution::{
    roulette_select, run_msl_population, run_msl_population_with_agents, AgentKind, SimParams,
};
use crate::meta::{ControllerAssets, CtlState, FcnWeights, MetaKind, RuleTable, StrategyKind};
use crate::rng::{derive_seed, stream_rng, SimRng};

/// Threshold genes stay inside this interval under every operator.
pub const TH_MIN: f64 = 1e-3;
pub const TH_MAX: f64 = 1.0;

/// A trainable controller.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidateController {
    Table(RuleTable),
    Fcn(FcnWeights),
}

/// Which genotype space to search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    RuleTable,
    Fcn,
}

/// Genetic-algorithm settings.
#[derive(Debug, Clone, Copy)]
pub struct GaConfig {
    pub pop: usize,
    pub elites: usize,
    pub crossover_p: f64,
    /// stop after this many generations without a best-fitness improvement
    pub stall_limit: u32,
    pub max_gens: u32,
    /// replicate seeds per fitness evaluation
    pub replicates: usize,
    /// perturb every weight dimension each mutation instead of gating each
    /// dimension at 1/L
    pub mutate_all_dims: bool,
}

impl GaConfig {
    /// Settings used for the rule-table search.
    pub fn for_rule_table() -> Self {
        GaConfig {
            pop: 50,
            elites: 4,
            crossover_p: 0.8,
            stall_limit: 20,
            max_gens: 200,
            replicates: 24,
            mutate_all_dims: false,
        }
    }

    /// Settings used for the network-weight search.
    pub fn for_fcn() -> Self {
        GaConfig { elites: 5, stall_limit: 50, ..Self::for_rule_table() }
    }
}

/// Differential-evolution settings (rand/1 with binomial crossover).
#[derive(Debug, Clone, Copy)]
pub struct DeConfig {
    pub pop: usize,
    pub f: f64,
    pub cr: f64,
    pub stall_limit: u32,
    pub max_gens: u32,
    pub replicates: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig { pop: 50, f: 0.5, cr: 0.1, stall_limit: 50, max_gens: 200, replicates: 24 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub best: CandidateController,
    pub best_fitness: f64,
    /// best-ever fitness after each generation (including the initial one)
    pub trace: Vec<f64>,
    pub generations: u32,
}

/// Replicate seed set used for every evaluation within one training run.
pub fn fitness_seeds(master: u64, replicates: usize) -> Vec<u64> {
    (0..replicates).map(|i| derive_seed(master, 0x5eed ^ i as u64)).collect()
}

/// Median over replicate seeds of the cumulative average population reward
/// of a population running `candidate` on `env`.
pub fn controller_fitness(
    candidate: &CandidateController,
    env: &EnvironmentSchedule,
    params: &SimParams,
    seeds: &[u64],
) -> Result<f64> {
    let mut assets = ControllerAssets::default();
    let kind = match candidate {
        CandidateController::Table(t) => {
            assets.rule_table = Arc::new(t.clone());
            MetaKind::SlGa
        }
        CandidateController::Fcn(w) => {
            assets.fcn = Arc::new(w.clone());
            MetaKind::SlNe
        }
    };
    let run_params = SimParams { horizon: env.horizon(), ..*params };
    let mut cums = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        cums.push(run_msl_population(env, kind, &assets, &run_params, seed)?.cumulative_psi());
    }
    Ok(median(&mut cums))
}

fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

// ---------------------------------------------------------------------------
// genotypes and operators
// ---------------------------------------------------------------------------

/// Rule-table genotype: 8 discrete strategy genes plus 2 threshold genes.
pub const RULE_GENOTYPE_LEN: usize = 10;

fn random_table(rng: &mut SimRng) -> RuleTable {
    let mut table = RuleTable::reference();
    for slot in table.rules.iter_mut() {
        *slot = StrategyKind::ALL[rng.random_range(0..3)];
    }
    table.th_ec = rng.random_range(TH_MIN..TH_MAX);
    table.th_u = rng.random_range(TH_MIN..TH_MAX);
    table
}

/// One-point crossover over the 10-gene layout [rules.., th_ec, th_u]:
/// head from the first parent, tail from the second. Parent order is
/// randomized by selection.
fn crossover_table(a: &RuleTable, b: &RuleTable, rng: &mut SimRng) -> RuleTable {
    let cut = rng.random_range(1..RULE_GENOTYPE_LEN);
    let mut child = a.clone();
    for i in cut..8 {
        child.rules[i] = b.rules[i];
    }
    if cut <= 8 {
        child.th_ec = b.th_ec;
    }
    child.th_u = b.th_u;
    child
}

/// Discrete genes resample with probability 1/(L-2); threshold genes get a
/// Gaussian perturbation, clamped to stay meaningful.
fn mutate_table(table: &mut RuleTable, rng: &mut SimRng) {
    let p = 1.0 / (RULE_GENOTYPE_LEN - 2) as f64;
    for slot in table.rules.iter_mut() {
        if rng.random::<f64>() < p {
            *slot = StrategyKind::ALL[rng.random_range(0..3)];
        }
    }
    let z: f64 = rng.sample(StandardNormal);
    table.th_ec = (table.th_ec + 0.1 * z).clamp(TH_MIN, TH_MAX);
    let z: f64 = rng.sample(StandardNormal);
    table.th_u = (table.th_u + 0.1 * z).clamp(TH_MIN, TH_MAX);
}

fn random_weights(rng: &mut SimRng) -> Vec<f64> {
    (0..FcnWeights::LEN).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn crossover_weights(a: &[f64], b: &[f64], rng: &mut SimRng) -> Vec<f64> {
    let cut = rng.random_range(1..a.len());
    let mut child = a.to_vec();
    child[cut..].copy_from_slice(&b[cut..]);
    child
}

fn mutate_weights(w: &mut [f64], all_dims: bool, rng: &mut SimRng) {
    let p = 1.0 / w.len() as f64;
    for v in w.iter_mut() {
        if all_dims || rng.random::<f64>() < p {
            let z: f64 = rng.sample(StandardNormal);
            *v += 0.1 * z;
        }
    }
}

// ---------------------------------------------------------------------------
// generational GA
// ---------------------------------------------------------------------------

/// Generic generational GA with elitism and roulette parent selection.
/// Children are the only fresh evaluations per generation; elite fitness is
/// carried, which together with the frozen seed set makes the best-ever
/// trace monotone.
fn ga_core<G, FI, FC, FM, FF>(
    cfg: &GaConfig,
    mut init: FI,
    mut crossover: FC,
    mut mutate: FM,
    fitness: FF,
    rng: &mut SimRng,
) -> Result<(G, f64, Vec<f64>, u32)>
where
    G: Clone + Send + Sync,
    FI: FnMut(&mut SimRng) -> G,
    FC: FnMut(&G, &G, &mut SimRng) -> G,
    FM: FnMut(&mut G, &mut SimRng),
    FF: Fn(&G) -> Result<f64> + Sync,
{
    if cfg.pop < cfg.elites + 1 {
        return Err(Error::config("population must exceed the elite count"));
    }
    let mut pop: Vec<G> = (0..cfg.pop).map(|_| init(rng)).collect();
    let mut fit: Vec<f64> =
        pop.par_iter().map(|g| fitness(g)).collect::<Result<Vec<_>>>()?;

    let mut order = rank_desc(&fit);
    let mut best = pop[order[0]].clone();
    let mut best_fit = fit[order[0]];
    let mut trace = vec![best_fit];
    let mut stall = 0u32;
    let mut gens = 0u32;

    while gens < cfg.max_gens && stall < cfg.stall_limit {
        gens += 1;
        let mut next: Vec<G> = Vec::with_capacity(cfg.pop);
        let mut next_fit: Vec<Option<f64>> = Vec::with_capacity(cfg.pop);
        for &idx in order.iter().take(cfg.elites) {
            next.push(pop[idx].clone());
            next_fit.push(Some(fit[idx]));
        }
        while next.len() < cfg.pop {
            let parents = roulette_select(&fit, 1.0, 2, rng);
            let mut child = if rng.random::<f64>() < cfg.crossover_p {
                crossover(&pop[parents[0]], &pop[parents[1]], rng)
            } else {
                pop[parents[0]].clone()
            };
            mutate(&mut child, rng);
            next.push(child);
            next_fit.push(None);
        }
        let fresh: Vec<f64> = next
            .par_iter()
            .zip(next_fit.par_iter())
            .filter(|(_, f)| f.is_none())
            .map(|(g, _)| fitness(g))
            .collect::<Result<Vec<_>>>()?;
        let mut fresh_iter = fresh.into_iter();
        let fit_next: Vec<f64> = next_fit
            .into_iter()
            .map(|f| f.unwrap_or_else(|| fresh_iter.next().expect("fresh fitness")))
            .collect();

        pop = next;
        fit = fit_next;
        order = rank_desc(&fit);
        if fit[order[0]] > best_fit {
            best_fit = fit[order[0]];
            best = pop[order[0]].clone();
            stall = 0;
        } else {
            stall += 1;
        }
        trace.push(best_fit);
    }
    Ok((best, best_fit, trace, gens))
}

fn rank_desc(fit: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.sort_by(|&a, &b| fit[b].partial_cmp(&fit[a]).unwrap());
    order
}

/// Trains a controller with the genetic algorithm on `env`.
pub fn ga_train(
    space: Space,
    cfg: &GaConfig,
    env: &EnvironmentSchedule,
    params: &SimParams,
    seed: u64,
) -> Result<TrainResult> {
    let seeds = fitness_seeds(seed, cfg.replicates);
    let mut rng = stream_rng(seed, 0xa11);
    match space {
        Space::RuleTable => {
            let eval = |g: &RuleTable| {
                controller_fitness(&CandidateController::Table(g.clone()), env, params, &seeds)
            };
            let (best, best_fitness, trace, generations) = ga_core(
                cfg,
                random_table,
                crossover_table,
                |g, r| mutate_table(g, r),
                eval,
                &mut rng,
            )?;
            Ok(TrainResult {
                best: CandidateController::Table(best),
                best_fitness,
                trace,
                generations,
            })
        }
        Space::Fcn => {
            let eval = |g: &Vec<f64>| {
                let w = FcnWeights::new(g.clone())?;
                controller_fitness(&CandidateController::Fcn(w), env, params, &seeds)
            };
            let all = cfg.mutate_all_dims;
            let (best, best_fitness, trace, generations) = ga_core(
                cfg,
                random_weights,
                |a: &Vec<f64>, b: &Vec<f64>, r: &mut SimRng| crossover_weights(a, b, r),
                |g: &mut Vec<f64>, r: &mut SimRng| mutate_weights(g, all, r),
                eval,
                &mut rng,
            )?;
            Ok(TrainResult {
                best: CandidateController::Fcn(FcnWeights::new(best)?),
                best_fitness,
                trace,
                generations,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// differential evolution
// ---------------------------------------------------------------------------

/// rand/1 differential evolution with binomial crossover and greedy
/// replacement, generic over the fitness function.
fn de_core<FF>(
    cfg: &DeConfig,
    dim: usize,
    fitness: FF,
    rng: &mut SimRng,
) -> Result<(Vec<f64>, f64, Vec<f64>, u32)>
where
    FF: Fn(&Vec<f64>) -> Result<f64> + Sync,
{
    if cfg.pop < 4 {
        return Err(Error::config("differential evolution needs at least 4 individuals"));
    }
    let mut pop: Vec<Vec<f64>> =
        (0..cfg.pop).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut fit: Vec<f64> =
        pop.par_iter().map(|g| fitness(g)).collect::<Result<Vec<_>>>()?;

    let mut best_idx = rank_desc(&fit)[0];
    let mut best = pop[best_idx].clone();
    let mut best_fit = fit[best_idx];
    let mut trace = vec![best_fit];
    let mut stall = 0u32;
    let mut gens = 0u32;

    while gens < cfg.max_gens && stall < cfg.stall_limit {
        gens += 1;
        // build all trials first so evaluations can run as a batch
        let mut trials: Vec<Vec<f64>> = Vec::with_capacity(cfg.pop);
        for i in 0..cfg.pop {
            let mut picks = [0usize; 3];
            let mut chosen = 0;
            while chosen < 3 {
                let r = rng.random_range(0..cfg.pop);
                if r != i && !picks[..chosen].contains(&r) {
                    picks[chosen] = r;
                    chosen += 1;
                }
            }
            let (r1, r2, r3) = (picks[0], picks[1], picks[2]);
            let jrand = rng.random_range(0..dim);
            let mut trial = pop[i].clone();
            for j in 0..dim {
                if j == jrand || rng.random::<f64>() < cfg.cr {
                    trial[j] = pop[r1][j] + cfg.f * (pop[r2][j] - pop[r3][j]);
                }
            }
            trials.push(trial);
        }
        let trial_fit: Vec<f64> =
            trials.par_iter().map(|g| fitness(g)).collect::<Result<Vec<_>>>()?;
        for i in 0..cfg.pop {
            if trial_fit[i] >= fit[i] {
                pop[i] = trials[i].clone();
                fit[i] = trial_fit[i];
            }
        }
        best_idx = rank_desc(&fit)[0];
        if fit[best_idx] > best_fit {
            best_fit = fit[best_idx];
            best = pop[best_idx].clone();
            stall = 0;
        } else {
            stall += 1;
        }
        trace.push(best_fit);
    }
    Ok((best, best_fit, trace, gens))
}

/// Trains network weights with differential evolution on `env`.
pub fn de_train(
    cfg: &DeConfig,
    env: &EnvironmentSchedule,
    params: &SimParams,
    seed: u64,
) -> Result<TrainResult> {
    let seeds = fitness_seeds(seed, cfg.replicates);
    let mut rng = stream_rng(seed, 0xde);
    let eval = |g: &Vec<f64>| {
        let w = FcnWeights::new(g.clone())?;
        controller_fitness(&CandidateController::Fcn(w), env, params, &seeds)
    };
    let (best, best_fitness, trace, generations) =
        de_core(cfg, FcnWeights::LEN, eval, &mut rng)?;
    Ok(TrainResult {
        best: CandidateController::Fcn(FcnWeights::new(best)?),
        best_fitness,
        trace,
        generations,
    })
}

// ---------------------------------------------------------------------------
// Q-learning pretraining
// ---------------------------------------------------------------------------

/// Learns strategy values by running a Q-learning population over `tiles`
/// consecutive passes of the environment, then averaging the agents' tables.
pub fn pretrain_ql(
    env: &EnvironmentSchedule,
    tiles: u32,
    params: &SimParams,
    seed: u64,
) -> Result<[[f64; 3]; 8]> {
    let tiled = crate::env::tile_schedule(env, tiles)?;
    let run_params = SimParams { horizon: tiled.horizon(), ..*params };
    let assets = ControllerAssets::default();
    let (_, agents) =
        run_msl_population_with_agents(&tiled, MetaKind::SlQl, &assets, &run_params, seed)?;
    let mut mean = [[0.0f64; 3]; 8];
    let mut n = 0usize;
    for agent in &agents {
        if let AgentKind::Meta { ctl: CtlState::Ql(q), .. } = &agent.kind {
            for s in 0..8 {
                for a in 0..3 {
                    mean[s][a] += q.q[s][a];
                }
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::numeric("no Q-learning agents survived pretraining"));
    }
    for row in mean.iter_mut() {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    Ok(mean)
}

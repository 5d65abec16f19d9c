//! Command-line interface of the social-learning bandit simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use msl_core::config;
use msl_core::env::{presets, EnvironmentSchedule};
use msl_core::error::Error;
use msl_core::evolution::{run_competition, run_replicates, run_sls_evolution, SimParams};
use msl_core::harness::{self, report, ExperimentMode, ExperimentSpec, StatsReport};
use msl_core::meta::{
    self, ControllerAssets, ControllerFile, MetaKind,
};
use msl_core::odpu::{odpu_monte_carlo, odpu_quadrature, Group, GroupSpec};
use msl_core::optimizers::{
    self, CandidateController, DeConfig, GaConfig, Space as TrainSpace,
};
use msl_core::replicator::{
    basin_sweep, integrate, MutationMatrix, Payoff, ReplicatorConfig, SlsKind,
};
use msl_core::rng::{derive_seed, stream_rng};

#[derive(Parser)]
#[command(name = "msl", version, about = "meta-social learning bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run lifetime-learning populations on an environment and report
    Run(RunArgs),
    /// Parameter sweeps: mutation rate, selection strength, or the
    /// uncertainty grid against strategy performance
    Sweep(SweepArgs),
    /// Train a controller (rule table, network weights, or strategy values)
    Train(TrainArgs),
    /// Evolutionary competition among all meta strategies
    EvolveMeta(EvolveArgs),
    /// Integrate the replicator-mutator model
    Replicator(ReplicatorArgs),
    /// Evaluate the uncertainty measure
    Odpu(OdpuArgs),
    /// Re-render reports from saved results
    Report(ReportArgs),
}

#[derive(Args)]
struct EnvArgs {
    /// environment: preset name or a TOML file path
    #[arg(long, default_value = "reversal-low")]
    env: String,
    /// horizon in steps (presets only)
    #[arg(long, default_value_t = 400)]
    horizon: u32,
    /// seed for randomly generated environments (exp2-random)
    #[arg(long, default_value_t = 7)]
    env_seed: u64,
}

impl EnvArgs {
    fn load(&self) -> Result<EnvironmentSchedule, Error> {
        if self.env == "exp2-random" {
            let mut rng = stream_rng(self.env_seed, 7);
            return presets::exp2_random(self.horizon, &mut rng);
        }
        if let Some(env) = presets::by_name(&self.env, self.horizon) {
            return Ok(env);
        }
        let path = Path::new(&self.env);
        if path.exists() {
            return config::parse_env_toml(&fs::read_to_string(path)?);
        }
        Err(Error::Config(format!(
            "unknown environment '{}'; presets: {}, exp2-random, or a TOML file",
            self.env,
            presets::PRESET_NAMES.join(", ")
        )))
    }
}

#[derive(Args)]
struct CommonSim {
    /// population size
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 24)]
    replicates: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// simulation parameter TOML file (overrides defaults, flags win)
    #[arg(long)]
    config: Option<PathBuf>,
    /// rule-table controller file for the evolved-table strategy
    #[arg(long)]
    controller: Option<PathBuf>,
    /// network controller file for the network strategy
    #[arg(long)]
    network: Option<PathBuf>,
}

impl CommonSim {
    fn params(&self, horizon: u32) -> Result<SimParams, Error> {
        let mut params = match &self.config {
            Some(path) => config::parse_params_toml(&fs::read_to_string(path)?)?,
            None => SimParams::default(),
        };
        params.m = self.m;
        params.horizon = horizon;
        Ok(params)
    }

    fn assets(&self) -> Result<ControllerAssets, Error> {
        let mut assets = ControllerAssets::default();
        if let Some(path) = &self.controller {
            match meta::parse_controller(&fs::read_to_string(path)?)? {
                ControllerFile::RuleTable(t) => assets.rule_table = Arc::new(t),
                ControllerFile::QlTable(q) => assets.ql_init = Arc::new(q),
                ControllerFile::Fcn(_) => {
                    return Err(Error::Config(
                        "--controller expects a rule-table or strategy-value file; use --network for weights".into(),
                    ))
                }
            }
        }
        if let Some(path) = &self.network {
            match meta::parse_controller(&fs::read_to_string(path)?)? {
                ControllerFile::Fcn(w) => assets.fcn = Arc::new(w),
                _ => return Err(Error::Config("--network expects a network controller file".into())),
            }
        }
        Ok(assets)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    sim: CommonSim,
    /// meta strategy name, or "all" for the full comparison
    #[arg(long, default_value = "all")]
    meta: String,
    #[arg(long, default_value = "out/run")]
    out: PathBuf,
    /// also write one CSV per replicate
    #[arg(long, default_value_t = true)]
    per_run_csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    /// mean social-learner reward against mutation rate
    MutationRate,
    /// dominant-strategy age against selection strength and mutation rate
    Selection,
    /// uncertainty measure against the conformist/success reward difference
    SigmaGrid,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    #[command(flatten)]
    sim: CommonSim,
    #[arg(long, default_value = "out/sweep")]
    out: PathBuf,
    /// horizon for the underlying runs
    #[arg(long, default_value_t = 400)]
    horizon: u32,
    /// comma-separated sweep values (defaults per kind)
    #[arg(long)]
    values: Option<String>,
    /// grid resolution per axis for the sigma grid
    #[arg(long, default_value_t = 5)]
    grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Rule,
    Fcn,
    Ql,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Ga,
    De,
    Online,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    space: SpaceArg,
    #[arg(long, value_enum, default_value = "ga")]
    algo: AlgoArg,
    #[command(flatten)]
    env: EnvArgs,
    /// independent training runs; the best by fitness is kept
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// population size during fitness evaluation
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// replicate seeds per fitness evaluation
    #[arg(long, default_value_t = 24)]
    replicates: usize,
    #[arg(long, default_value = "out/train")]
    out: PathBuf,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    sim: CommonSim,
    /// type mutation rate
    #[arg(long, default_value_t = 0.005)]
    mr: f64,
    /// selection strength
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value = "out/evolve")]
    out: PathBuf,
}

#[derive(Args)]
struct ReplicatorArgs {
    #[arg(long, value_enum, default_value = "success")]
    sls: SlsArg,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 400.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// payoff means "mu1,mu2" before the midpoint reversal
    #[arg(long, default_value = "1.0,0.4")]
    payoffs: String,
    /// sweep initial social-learner ratios over a grid instead of one run
    #[arg(long)]
    basin: bool,
    #[arg(long, default_value = "out/replicator.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SlsArg {
    Success,
    Conformist,
}

#[derive(Args)]
struct OdpuArgs {
    /// comma-separated group means; the first group is checked as optimal
    #[arg(long)]
    mu: String,
    #[arg(long)]
    sigma: String,
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// also run the direct-simulation estimate with this many trials
    #[arg(long)]
    monte_carlo: Option<u64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// write a sigma-grid heatmap CSV instead of a single value
    #[arg(long)]
    grid: Option<PathBuf>,
    /// grid resolution per axis
    #[arg(long, default_value_t = 9)]
    grid_size: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// results.json produced by a previous command
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "out/report")]
    out: PathBuf,
    #[arg(long, default_value_t = false)]
    per_run_csv: bool,
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number '{v}': {e}"))))
        .collect()
}

fn parse_u32_list(text: &str) -> Result<Vec<u32>, Error> {
    text.split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|e| Error::Parse(format!("bad count '{v}': {e}"))))
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let env = args.env.load()?;
    let params = args.sim.params(env.horizon())?;
    let assets = args.sim.assets()?;
    let kinds = if args.meta.eq_ignore_ascii_case("all") {
        MetaKind::ALL.to_vec()
    } else {
        vec![MetaKind::from_name(&args.meta)?]
    };
    let horizon = env.horizon() as usize;
    let windows = if horizon >= 400 { vec![(200, 250), (350, 400)] } else { vec![] };
    let spec = ExperimentSpec {
        name: format!("run-{}", args.env.env),
        env,
        mode: ExperimentMode::MetaCompare(kinds),
        replicates: args.sim.replicates,
        params,
        eval_windows: windows,
    };
    let results = harness::run_experiment(&spec, &assets, args.sim.seed)?;
    let written = report::emit_report(&results, &args.out, args.per_run_csv)?;
    println!("wrote {} files under {}", written.len(), args.out.display());
    for (label, rank) in &results.stats.avg_ranks {
        println!("  rank {rank:5.2}  {label}");
    }
    print_pairwise(&results.stats);
    Ok(())
}

fn cmd_evolve(args: EvolveArgs) -> Result<(), Error> {
    let env = args.env.load()?;
    let mut params = args.sim.params(env.horizon())?;
    params.mr = args.mr;
    params.s = args.s;
    let assets = args.sim.assets()?;
    let spec = ExperimentSpec {
        name: format!("evolve-{}", args.env.env),
        env,
        mode: ExperimentMode::Competition(MetaKind::ALL.to_vec()),
        replicates: args.sim.replicates,
        params,
        eval_windows: vec![],
    };
    let results = harness::run_experiment(&spec, &assets, args.sim.seed)?;
    let written = report::emit_report(&results, &args.out, true)?;
    println!("wrote {} files under {}", written.len(), args.out.display());
    // terminal composition, averaged over the final 10 generations and runs
    let arm = &results.arms[0];
    let labels = arm.runs[0].ratio_labels.clone();
    let mut terminal: Vec<(String, f64)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mean = arm.runs.iter().map(|r| r.terminal_ratio(i, 10)).sum::<f64>()
                / arm.runs.len() as f64;
            (l.clone(), mean)
        })
        .collect();
    terminal.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    for (label, ratio) in terminal {
        println!("  terminal ratio {ratio:.4}  {label}");
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let env = args.env.load()?;
    let params = SimParams { m: args.m, horizon: env.horizon(), ..Default::default() };
    fs::create_dir_all(&args.out)?;
    match (args.space, args.algo) {
        (SpaceArg::Ql, _) => {
            let q = optimizers::pretrain_ql(&env, 150, &params, args.seed)?;
            let path = args.out.join("slql-qtable.txt");
            fs::write(&path, meta::ql_table_to_text(&q))?;
            println!("wrote {}", path.display());
        }
        (SpaceArg::Rule, AlgoArg::Ga) => {
            let cfg = GaConfig { replicates: args.replicates, ..GaConfig::for_rule_table() };
            let mut best: Option<optimizers::TrainResult> = None;
            for run in 0..args.runs {
                let result = optimizers::ga_train(
                    TrainSpace::RuleTable,
                    &cfg,
                    &env,
                    &params,
                    derive_seed(args.seed, run as u64),
                )?;
                write_trace(&args.out, run, &result)?;
                println!("run {run}: fitness {:.3} after {} generations", result.best_fitness, result.generations);
                if best.as_ref().map_or(true, |b| result.best_fitness > b.best_fitness) {
                    best = Some(result);
                }
            }
            let best = best.expect("at least one run");
            if let CandidateController::Table(t) = &best.best {
                let path = args.out.join("slga-rules.txt");
                fs::write(&path, meta::rule_table_to_text(t))?;
                println!("best fitness {:.3}; wrote {}", best.best_fitness, path.display());
            }
        }
        (SpaceArg::Fcn, algo) => {
            let mut best: Option<optimizers::TrainResult> = None;
            for run in 0..args.runs {
                let seed = derive_seed(args.seed, run as u64);
                let result = match algo {
                    AlgoArg::De => {
                        let cfg = DeConfig { replicates: args.replicates, ..Default::default() };
                        optimizers::de_train(&cfg, &env, &params, seed)?
                    }
                    _ => {
                        let cfg = GaConfig { replicates: args.replicates, ..GaConfig::for_fcn() };
                        optimizers::ga_train(TrainSpace::Fcn, &cfg, &env, &params, seed)?
                    }
                };
                write_trace(&args.out, run, &result)?;
                println!("run {run}: fitness {:.3} after {} generations", result.best_fitness, result.generations);
                if best.as_ref().map_or(true, |b| result.best_fitness > b.best_fitness) {
                    best = Some(result);
                }
            }
            let best = best.expect("at least one run");
            if let CandidateController::Fcn(w) = &best.best {
                let path = args.out.join("slne-weights.txt");
                fs::write(&path, meta::fcn_to_text(w))?;
                println!("best fitness {:.3}; wrote {}", best.best_fitness, path.display());
            }
        }
        (SpaceArg::Rule, _) => {
            return Err(Error::Config("rule-table training uses --algo ga".into()));
        }
    }
    Ok(())
}

fn write_trace(dir: &Path, run: usize, result: &optimizers::TrainResult) -> Result<(), Error> {
    let mut csv = String::from("generation,best_fitness\n");
    for (g, f) in result.trace.iter().enumerate() {
        csv.push_str(&format!("{g},{f:.6}\n"));
    }
    fs::write(dir.join(format!("fitness_trace_{run:02}.csv")), csv)?;
    Ok(())
}

fn cmd_replicator(args: ReplicatorArgs) -> Result<(), Error> {
    let payoffs = parse_f64_list(&args.payoffs)?;
    if payoffs.len() != 2 {
        return Err(Error::Config("--payoffs expects two means".into()));
    }
    let horizon_steps = args.horizon as u32;
    let env = msl_core::env::make_reversal_schedule(
        payoffs[0],
        0.05,
        payoffs[1],
        0.05,
        horizon_steps + horizon_steps % 2,
    )?;
    let config = ReplicatorConfig {
        sls: match args.sls {
            SlsArg::Success => SlsKind::Success,
            SlsArg::Conformist => SlsKind::Conformist,
        },
        epsilon: args.eps,
        tau: args.tau,
        payoff: Payoff::Schedule(env),
        mutation: MutationMatrix::default_rates(),
        init: [0.25, 0.25, 0.5],
    };
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut csv = String::from("start_sl,t,a1,a2,sl,psi,h1,h2\n");
    if args.basin {
        let starts: Vec<[f64; 3]> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&sl| [(1.0 - sl) / 2.0, (1.0 - sl) / 2.0, sl])
            .collect();
        for (traj, terminal) in basin_sweep(&config, &starts, args.horizon, args.dt)? {
            let start = traj.points[0].sl;
            for p in &traj.points {
                csv.push_str(&format!(
                    "{start:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                    p.t, p.a1, p.a2, p.sl, p.psi, p.h1, p.h2
                ));
            }
            println!("start sl={start:.2} -> terminal sl={terminal:.4}");
        }
    } else {
        let traj = integrate(&config, args.horizon, args.dt)?;
        for p in &traj.points {
            csv.push_str(&format!(
                "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                config.init[2], p.t, p.a1, p.a2, p.sl, p.psi, p.h1, p.h2
            ));
        }
        let end = traj.terminal();
        println!("terminal: a1={:.4} a2={:.4} sl={:.4} psi={:.4}", end.a1, end.a2, end.sl, end.psi);
    }
    fs::write(&args.out, csv)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_odpu(args: OdpuArgs) -> Result<(), Error> {
    if let Some(path) = &args.grid {
        // heatmap over (sigma_opt, sigma_sub) at fixed means and counts
        let mu = parse_f64_list(&args.mu)?;
        let n = parse_u32_list(&args.n)?;
        if mu.len() != 2 || n.len() != 2 {
            return Err(Error::Config("--grid expects two groups".into()));
        }
        let mut csv = String::from("sigma_opt,sigma_sub,odpu\n");
        for i in 0..args.grid_size {
            for j in 0..args.grid_size {
                let frac_i = i as f64 / (args.grid_size - 1).max(1) as f64;
                let frac_j = j as f64 / (args.grid_size - 1).max(1) as f64;
                let s_opt = 0.05 + 0.45 * frac_i;
                let s_sub = 0.05 + 0.45 * frac_j;
                let spec = GroupSpec::new(vec![
                    Group { mu: mu[0], sigma: s_opt, n: n[0] },
                    Group { mu: mu[1], sigma: s_sub, n: n[1] },
                ])?;
                let v = odpu_quadrature(&spec, args.tol)?;
                csv.push_str(&format!("{s_opt:.6},{s_sub:.6},{v:.6}\n"));
            }
        }
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, csv)?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let mu = parse_f64_list(&args.mu)?;
    let sigma = parse_f64_list(&args.sigma)?;
    let n = parse_u32_list(&args.n)?;
    if mu.len() != sigma.len() || mu.len() != n.len() || mu.len() < 2 {
        return Err(Error::Config("--mu/--sigma/--n must list the same number of groups (>= 2)".into()));
    }
    let groups: Vec<Group> = mu
        .iter()
        .zip(&sigma)
        .zip(&n)
        .map(|((&mu, &sigma), &n)| Group { mu, sigma, n })
        .collect();
    let spec = GroupSpec::new(groups)?;
    let v = odpu_quadrature(&spec, args.tol)?;
    println!("{v:.9}");
    if let Some(trials) = args.monte_carlo {
        let mut rng = stream_rng(args.seed, 0);
        let mc = odpu_monte_carlo(&spec, trials, &mut rng);
        println!("monte-carlo ({trials} trials): {mc:.9}");
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    fs::create_dir_all(&args.out)?;
    let assets = args.sim.assets()?;
    match args.kind {
        SweepKind::MutationRate => {
            let values = match &args.values {
                Some(v) => parse_f64_list(v)?,
                None => vec![0.001, 0.005, 0.02, 0.05],
            };
            let env = presets::reversal_low(args.horizon);
            let mut csv = String::from("mr,sls,run,mean_psi\n");
            for &mr in &values {
                for sls in [msl_core::SlsChoice::Success, msl_core::SlsChoice::Conformist] {
                    let mut params = args.sim.params(env.horizon())?;
                    params.mr = mr;
                    let runs = run_replicates(
                        args.sim.replicates,
                        derive_seed(args.sim.seed, (mr * 1e6) as u64),
                        |seed| run_sls_evolution(&env, sls, &params, seed),
                    )?;
                    for (i, r) in runs.iter().enumerate() {
                        csv.push_str(&format!(
                            "{mr:.6},{},{i},{:.6}\n",
                            r.label,
                            r.cumulative_psi() / r.psi.len() as f64
                        ));
                    }
                }
            }
            fs::write(args.out.join("mutation_rate.csv"), csv)?;
        }
        SweepKind::Selection => {
            let values = match &args.values {
                Some(v) => parse_f64_list(v)?,
                None => vec![0.5, 1.0, 2.0],
            };
            let env = presets::exp1_volatile_high(args.horizon);
            let mut csv = String::from("s,run,kind,terminal_ratio,mean_age\n");
            for &s in &values {
                let mut params = args.sim.params(env.horizon())?;
                params.s = s;
                let runs = run_replicates(
                    args.sim.replicates,
                    derive_seed(args.sim.seed, (s * 1000.0) as u64),
                    |seed| run_competition(&env, &MetaKind::ALL, &assets, &params, seed),
                )?;
                for (i, r) in runs.iter().enumerate() {
                    let ages = r.mean_age.as_ref().unwrap().last().unwrap();
                    for (k, kind) in MetaKind::ALL.iter().enumerate() {
                        csv.push_str(&format!(
                            "{s:.3},{i},{},{:.6},{:.6}\n",
                            kind.name(),
                            r.terminal_ratio(k, 10),
                            ages[k]
                        ));
                    }
                }
            }
            fs::write(args.out.join("selection_strength.csv"), csv)?;
        }
        SweepKind::SigmaGrid => {
            // uncertainty against the end-of-run reward difference between
            // conformist and success-based populations
            let grid = args.grid.max(2);
            let mut csv = String::from("sigma_opt,sigma_sub,odpu,diff_conf_minus_succ\n");
            for i in 0..grid {
                for j in 0..grid {
                    let s_opt = 0.05 + 0.45 * i as f64 / (grid - 1) as f64;
                    let s_sub = 0.05 + 0.45 * j as f64 / (grid - 1) as f64;
                    let spec = GroupSpec::new(vec![
                        Group { mu: 1.0, sigma: s_opt, n: 50 },
                        Group { mu: 0.4, sigma: s_sub, n: 50 },
                    ])?;
                    let odpu = odpu_quadrature(&spec, 1e-8)?;
                    let env = msl_core::env::make_reversal_schedule(
                        1.0, s_opt, 0.4, s_sub, args.horizon,
                    )?;
                    let params = args.sim.params(env.horizon())?;
                    let point_seed = derive_seed(args.sim.seed, (i * grid + j) as u64);
                    let window = (args.horizon as usize * 7 / 8, args.horizon as usize);
                    let conf = run_replicates(args.sim.replicates, point_seed, |seed| {
                        run_sls_evolution(&env, msl_core::SlsChoice::Conformist, &params, seed)
                    })?;
                    let succ = run_replicates(args.sim.replicates, derive_seed(point_seed, 1), |seed| {
                        run_sls_evolution(&env, msl_core::SlsChoice::Success, &params, seed)
                    })?;
                    let mean = |rs: &[msl_core::RunResult]| {
                        rs.iter().map(|r| r.window_mean_psi(window.0, window.1)).sum::<f64>()
                            / rs.len() as f64
                    };
                    csv.push_str(&format!(
                        "{s_opt:.6},{s_sub:.6},{odpu:.6},{:.6}\n",
                        mean(&conf) - mean(&succ)
                    ));
                }
            }
            fs::write(args.out.join("sigma_grid.csv"), csv)?;
        }
    }
    println!("wrote sweep data under {}", args.out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Error> {
    let results = report::parse_results_json(&fs::read_to_string(&args.results)?)?;
    let written = report::emit_report(&results, &args.out, args.per_run_csv)?;
    println!("wrote {} files under {}", written.len(), args.out.display());
    Ok(())
}

fn print_pairwise(stats: &StatsReport) {
    for (a, b, p) in &stats.pairwise_wilcoxon {
        println!("  p={p:.4}  {a} vs {b}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Train(args) => cmd_train(args),
        Command::EvolveMeta(args) => cmd_evolve(args),
        Command::Replicator(args) => cmd_replicator(args),
        Command::Odpu(args) => cmd_odpu(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Parse(_) => ExitCode::from(2),
                Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

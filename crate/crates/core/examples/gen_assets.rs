// dev scratch: bake trained controller assets
use msl_core::env::presets;
use msl_core::evolution::SimParams;
use msl_core::meta::{fcn_to_text, ql_table_to_text, CONTROLLER_FORMAT_VERSION};
use msl_core::optimizers::*;
use std::time::Instant;

fn main() {
    let _ = CONTROLLER_FORMAT_VERSION;
    let env = presets::training_env();
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("time");

    match mode {
        "time" => {
            let params = SimParams { m: 50, ..Default::default() };
            let seeds = fitness_seeds(1, 12);
            let cand = CandidateController::Table(msl_core::meta::RuleTable::reference());
            let t0 = Instant::now();
            let f = controller_fitness(&cand, &env, &params, &seeds).unwrap();
            println!("rule fitness eval (m=50, 12 reps): {:?}  f={f:.2}", t0.elapsed());
            let cand = CandidateController::Fcn(msl_core::meta::FcnWeights::zeros());
            let t0 = Instant::now();
            let f = controller_fitness(&cand, &env, &params, &seeds).unwrap();
            println!("fcn fitness eval  (m=50, 12 reps): {:?}  f={f:.2}", t0.elapsed());
        }
        "ql" => {
            let params = SimParams { m: 100, ..Default::default() };
            let t0 = Instant::now();
            let q = pretrain_ql(&env, 150, &params, 20260810).unwrap();
            println!("pretrain_ql 150 tiles: {:?}", t0.elapsed());
            std::fs::write("crates/core/assets/slql-qtable-v1.txt", ql_table_to_text(&q)).unwrap();
            for (s, row) in q.iter().enumerate() {
                println!("state {s}: IL={:.3} Succ={:.3} Conf={:.3}", row[0], row[1], row[2]);
            }
        }
        "fcn" => {
            let params = SimParams { m: 50, ..Default::default() };
            let cfg = DeConfig { replicates: 12, max_gens: 150, ..Default::default() };
            let t0 = Instant::now();
            let result = de_train(&cfg, &env, &params, 20260810).unwrap();
            println!("de_train: {:?} gens={} best={:.2}", t0.elapsed(), result.generations, result.best_fitness);
            println!("trace: {:?}", result.trace.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>());
            if let CandidateController::Fcn(w) = result.best {
                std::fs::write("crates/core/assets/slne-weights-v1.txt", fcn_to_text(&w)).unwrap();
            }
        }
        other => eprintln!("unknown mode {other}"),
    }
}

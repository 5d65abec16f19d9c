// dev scratch: asset sanity + gradual-environment comparison
use msl_core::env::presets;
use msl_core::evolution::*;
use msl_core::meta::{ControllerAssets, MetaKind};

fn mean(v: &[f64]) -> f64 { v.iter().sum::<f64>() / v.len() as f64 }

fn main() {
    let assets = ControllerAssets::default();
    assert_eq!(assets.fcn.weights.len(), 123, "fcn asset must parse");
    assert!(assets.ql_init[2][2] > 0.9, "ql asset must parse");
    println!("assets parsed: fcn[0..3]={:?} ql[2]={:?}", &assets.fcn.weights[..3], assets.ql_init[2]);

    let params = SimParams { m: 1000, ..Default::default() };
    let n = 24;
    for (name, env) in [
        ("exp3-gradual", presets::exp3_gradual(400)),
        ("exp1-vol-high", presets::exp1_volatile_high(400)),
        ("reversal-low", presets::reversal_low(400)),
    ] {
        let mut lines = Vec::new();
        let mut ne_cums = Vec::new();
        let mut ecu_cums = Vec::new();
        for kind in [MetaKind::SlNe, MetaKind::SlEcConfUnc, MetaKind::SlGa, MetaKind::SlQl, MetaKind::IlOnly] {
            let runs = run_replicates(n, 1234, |s| run_msl_population(&env, kind, &assets, &params, s)).unwrap();
            let cums: Vec<f64> = runs.iter().map(|r| r.cumulative_psi()).collect();
            let cost = mean(&runs.iter().map(|r| r.total_cost()).collect::<Vec<_>>());
            lines.push(format!("  {:16} cum={:7.1} cost={:8.0}", kind.name(), mean(&cums), cost));
            if kind == MetaKind::SlNe { ne_cums = cums.clone(); }
            if kind == MetaKind::SlEcConfUnc { ecu_cums = cums.clone(); }
        }
        let wins = ne_cums.iter().zip(&ecu_cums).filter(|(a, b)| a > b).count();
        println!("{name}: SL-NE beats SL-EC-Conf-Unc in {wins}/{n} runs");
        for l in lines { println!("{l}"); }
    }
}

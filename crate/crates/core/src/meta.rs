//! Meta-level strategy arbitration: the thirteen controllers that pick one of
//! {individual learning, success-based copy, conformist copy} each timestep.
//!
//! Controllers fall into four families: fixed-probability baselines,
//! observation-based rules over the binary context flags, bandit learners
//! over the three strategies, and trained artifacts (an evolved rule table
//! and a small feedforward network).

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::context::{Context, ContextParams, ContextRaw};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// A base learning strategy executed by an agent for one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    IndividualLearning,
    SuccessBased,
    Conformist,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::IndividualLearning,
        StrategyKind::SuccessBased,
        StrategyKind::Conformist,
    ];

    pub fn code(self) -> u8 {
        match self {
            StrategyKind::IndividualLearning => 0,
            StrategyKind::SuccessBased => 1,
            StrategyKind::Conformist => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => StrategyKind::IndividualLearning,
            1 => StrategyKind::SuccessBased,
            2 => StrategyKind::Conformist,
            other => return Err(Error::Parse(format!("unknown strategy code {other}"))),
        })
    }
}

/// The thirteen meta-social learning strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetaKind {
    IlOnly,
    SlRand,
    SlProp,
    SlConf,
    SlSucc,
    SlEcConf,
    SlEcSucc,
    SlEcConfUnc,
    SlRl,
    SlQl,
    SlUcb,
    SlGa,
    SlNe,
}

impl MetaKind {
    pub const ALL: [MetaKind; 13] = [
        MetaKind::IlOnly,
        MetaKind::SlRand,
        MetaKind::SlProp,
        MetaKind::SlConf,
        MetaKind::SlSucc,
        MetaKind::SlEcConf,
        MetaKind::SlEcSucc,
        MetaKind::SlEcConfUnc,
        MetaKind::SlRl,
        MetaKind::SlQl,
        MetaKind::SlUcb,
        MetaKind::SlGa,
        MetaKind::SlNe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetaKind::IlOnly => "IL-Only",
            MetaKind::SlRand => "SL-Rand",
            MetaKind::SlProp => "SL-Prop",
            MetaKind::SlConf => "SL-Conf",
            MetaKind::SlSucc => "SL-Succ",
            MetaKind::SlEcConf => "SL-EC-Conf",
            MetaKind::SlEcSucc => "SL-EC-Succ",
            MetaKind::SlEcConfUnc => "SL-EC-Conf-Unc",
            MetaKind::SlRl => "SL-RL",
            MetaKind::SlQl => "SL-QL",
            MetaKind::SlUcb => "SL-UCB",
            MetaKind::SlGa => "SL-GA",
            MetaKind::SlNe => "SL-NE",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let norm = name.to_ascii_lowercase();
        // SL-EC-Unc is an alias of SL-EC-Succ
        if norm == "sl-ec-unc" {
            return Ok(MetaKind::SlEcSucc);
        }
        MetaKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown meta strategy '{name}'")))
    }
}

impl fmt::Display for MetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// observation-based rules
// ---------------------------------------------------------------------------

/// Full context rule: individual learning on a detected change, conformist
/// when the majority tracks the best estimate, success-based while the
/// environment is certain, individual learning otherwise.
pub fn msl_ec_conf_unc(ctx: &Context) -> StrategyKind {
    if ctx.ec {
        StrategyKind::IndividualLearning
    } else if ctx.conf {
        StrategyKind::Conformist
    } else if !ctx.unc {
        StrategyKind::SuccessBased
    } else {
        StrategyKind::IndividualLearning
    }
}

/// Change + conformity rule: conformist under conformity, individual
/// learning otherwise.
pub fn msl_ec_conf(ctx: &Context) -> StrategyKind {
    if !ctx.ec && ctx.conf {
        StrategyKind::Conformist
    } else {
        StrategyKind::IndividualLearning
    }
}

/// Change + uncertainty rule: success-based in low uncertainty, individual
/// learning otherwise.
pub fn msl_ec_succ(ctx: &Context) -> StrategyKind {
    if !ctx.ec && !ctx.unc {
        StrategyKind::SuccessBased
    } else {
        StrategyKind::IndividualLearning
    }
}

// ---------------------------------------------------------------------------
// fixed-probability baselines
// ---------------------------------------------------------------------------

/// Strategy draw for the fixed baselines.
pub fn msl_fixed(kind: MetaKind, rng: &mut SimRng) -> StrategyKind {
    match kind {
        MetaKind::IlOnly => StrategyKind::IndividualLearning,
        MetaKind::SlRand => StrategyKind::ALL[rng.random_range(0..3)],
        MetaKind::SlProp => {
            let u = rng.random::<f64>();
            if u < 0.45 {
                StrategyKind::SuccessBased
            } else if u < 0.90 {
                StrategyKind::Conformist
            } else {
                StrategyKind::IndividualLearning
            }
        }
        MetaKind::SlConf => {
            if rng.random::<f64>() < 0.95 {
                StrategyKind::Conformist
            } else {
                StrategyKind::IndividualLearning
            }
        }
        MetaKind::SlSucc => {
            if rng.random::<f64>() < 0.95 {
                StrategyKind::SuccessBased
            } else {
                StrategyKind::IndividualLearning
            }
        }
        other => panic!("msl_fixed called with non-baseline kind {other}"),
    }
}

// ---------------------------------------------------------------------------
// rule table (evolved policy genotype)
// ---------------------------------------------------------------------------

/// Policy over the 8 binary context states plus its own detector thresholds;
/// the genotype evolved for the table-based controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    /// strategy per state, indexed 4 EC + 2 C + U
    pub rules: [StrategyKind; 8],
    pub th_ec: f64,
    pub th_u: f64,
}

impl RuleTable {
    /// The reference controller: the full context rule with the evolved
    /// thresholds th_ec = 0.15, th_u = 0.05.
    pub fn reference() -> Self {
        use StrategyKind::*;
        RuleTable {
            rules: [
                SuccessBased,       // (0,0,0)
                IndividualLearning, // (0,0,1)
                Conformist,         // (0,1,0)
                Conformist,         // (0,1,1)
                IndividualLearning, // (1,0,0)
                IndividualLearning, // (1,0,1)
                IndividualLearning, // (1,1,0)
                IndividualLearning, // (1,1,1)
            ],
            th_ec: 0.15,
            th_u: 0.05,
        }
    }

    pub fn context_params(&self, delta: u32) -> ContextParams {
        ContextParams { th_ec: self.th_ec, th_u: self.th_u, delta }
    }
}

/// Table lookup dispatch.
pub fn msl_rule_table(table: &RuleTable, ctx: &Context) -> StrategyKind {
    table.rules[ctx.state_index()]
}

// ---------------------------------------------------------------------------
// feedforward network controller
// ---------------------------------------------------------------------------

pub const FCN_HIDDEN: usize = 12;
pub const FCN_OUTPUTS: usize = 3;

/// Weights of the one-hidden-layer network controller for two arms:
/// 12 x (6+1) input-to-hidden plus 3 x (12+1) hidden-to-output, 123 values,
/// both layers row-major with the bias weight last in each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcnWeights {
    pub weights: Vec<f64>,
}

impl FcnWeights {
    pub const ARMS: usize = 2;
    pub const INPUTS: usize = 3 * Self::ARMS;
    pub const LEN: usize = FCN_HIDDEN * (Self::INPUTS + 1) + FCN_OUTPUTS * (FCN_HIDDEN + 1);

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != Self::LEN {
            return Err(Error::config(format!(
                "network controller needs {} weights, got {}",
                Self::LEN,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::config("network weights must be finite"));
        }
        Ok(FcnWeights { weights })
    }

    pub fn zeros() -> Self {
        FcnWeights { weights: vec![0.0; Self::LEN] }
    }

    /// Raw output activations: tanh hidden layer, linear outputs.
    pub fn forward(&self, mu: &[f64], sigma: &[f64], freq_norm: &[f64]) -> Result<[f64; 3]> {
        if mu.len() != Self::ARMS || sigma.len() != Self::ARMS || freq_norm.len() != Self::ARMS {
            return Err(Error::config(format!(
                "network controller expects {} arms, got {}/{}/{}",
                Self::ARMS,
                mu.len(),
                sigma.len(),
                freq_norm.len()
            )));
        }
        let mut input = [0.0f64; Self::INPUTS + 1];
        input[..2].copy_from_slice(mu);
        input[2..4].copy_from_slice(sigma);
        input[4..6].copy_from_slice(freq_norm);
        input[6] = 1.0;

        let mut hidden = [0.0f64; FCN_HIDDEN + 1];
        for j in 0..FCN_HIDDEN {
            let row = &self.weights[j * (Self::INPUTS + 1)..(j + 1) * (Self::INPUTS + 1)];
            let sum: f64 = row.iter().zip(input.iter()).map(|(w, x)| w * x).sum();
            hidden[j] = sum.tanh();
        }
        hidden[FCN_HIDDEN] = 1.0;

        let base = FCN_HIDDEN * (Self::INPUTS + 1);
        let mut out = [0.0f64; FCN_OUTPUTS];
        for (o, out_o) in out.iter_mut().enumerate() {
            let row = &self.weights[base + o * (FCN_HIDDEN + 1)..base + (o + 1) * (FCN_HIDDEN + 1)];
            *out_o = row.iter().zip(hidden.iter()).map(|(w, x)| w * x).sum();
        }
        Ok(out)
    }
}

/// Network dispatch: argmax over the three strategy outputs, ties to the
/// lowest index.
pub fn msl_fcn(
    weights: &FcnWeights,
    mu: &[f64],
    sigma: &[f64],
    freq_norm: &[f64],
) -> Result<StrategyKind> {
    let out = weights.forward(mu, sigma, freq_norm)?;
    let idx = crate::env::argmax_f64(out.iter().copied());
    Ok(StrategyKind::ALL[idx])
}

// ---------------------------------------------------------------------------
// bandit controllers over the three strategies
// ---------------------------------------------------------------------------

/// Per-agent value estimates over the three strategies, shared by the
/// epsilon-greedy and UCB strategy selectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyBandit {
    pub q: [f64; 3],
    pub n: [u32; 3],
    /// selections made so far
    pub t: u32,
    last: Option<usize>,
    beta: f64,
}

impl StrategyBandit {
    pub fn new(beta: f64) -> Self {
        StrategyBandit { q: [0.0; 3], n: [0; 3], t: 0, last: None, beta }
    }

    /// Epsilon-greedy over the strategy values.
    pub fn select_rl(&mut self, epsilon: f64, rng: &mut SimRng) -> StrategyKind {
        let idx = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            rng.random_range(0..3)
        } else {
            crate::env::argmax_f64(self.q.iter().copied())
        };
        self.commit(idx)
    }

    /// Upper confidence bound over the strategy values. Unvisited strategies
    /// are forced (infinite bonus convention).
    pub fn select_ucb(&mut self, c: f64) -> StrategyKind {
        if let Some(idx) = self.n.iter().position(|&n| n == 0) {
            return self.commit(idx);
        }
        let t = (self.t + 1) as f64;
        let idx = crate::env::argmax_f64(
            (0..3).map(|a| self.q[a] + c * (t.ln() / self.n[a] as f64).sqrt()),
        );
        self.commit(idx)
    }

    fn commit(&mut self, idx: usize) -> StrategyKind {
        self.last = Some(idx);
        self.n[idx] += 1;
        self.t += 1;
        StrategyKind::ALL[idx]
    }

    /// Value update for the most recent selection.
    pub fn feedback(&mut self, reward: f64) {
        if let Some(idx) = self.last {
            self.q[idx] += self.beta * (reward - self.q[idx]);
        }
    }
}

/// Per-agent Q-learning over (context state, strategy). The Bellman update
/// for step t is applied when the next step's context becomes known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyQl {
    pub q: [[f64; 3]; 8],
    pending: Option<(usize, usize, f64)>,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for StrategyQl {
    fn default() -> Self {
        StrategyQl { q: [[0.0; 3]; 8], pending: None, epsilon: 0.2, alpha: 0.01, gamma: 0.0 }
    }
}

impl StrategyQl {
    /// Applies the deferred update now that the successor state is observed.
    pub fn observe_state(&mut self, next_state: usize) {
        if let Some((s, a, r)) = self.pending.take() {
            let max_next = self.q[next_state]
                .iter()
                .fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
            self.q[s][a] += self.alpha * (r + self.gamma * max_next - self.q[s][a]);
        }
    }

    pub fn select(&mut self, state: usize, rng: &mut SimRng) -> StrategyKind {
        let idx = if self.epsilon > 0.0 && rng.random::<f64>() < self.epsilon {
            rng.random_range(0..3)
        } else {
            crate::env::argmax_f64(self.q[state].iter().copied())
        };
        self.pending = Some((state, idx, 0.0));
        StrategyKind::ALL[idx]
    }

    pub fn feedback(&mut self, reward: f64) {
        if let Some((_, _, r)) = self.pending.as_mut() {
            *r = reward;
        }
    }
}

// ---------------------------------------------------------------------------
// unified controller used by the simulation engine
// ---------------------------------------------------------------------------

/// Shared trained artifacts for a run: the rule table used by the evolved
/// table controller and the network weights used by the network controller.
#[derive(Debug, Clone)]
pub struct ControllerAssets {
    pub rule_table: Arc<RuleTable>,
    pub fcn: Arc<FcnWeights>,
    /// initial strategy values for the Q-learning controller, produced by
    /// offline training on the training environment
    pub ql_init: Arc<[[f64; 3]; 8]>,
}

impl Default for ControllerAssets {
    fn default() -> Self {
        ControllerAssets {
            rule_table: Arc::new(RuleTable::reference()),
            fcn: Arc::new(default_fcn_weights()),
            ql_init: Arc::new(default_ql_table()),
        }
    }
}

/// Ships with the crate: strategy values learned on the built-in training
/// environment; zero when the asset is absent.
pub fn default_ql_table() -> [[f64; 3]; 8] {
    let text = include_str!("../assets/slql-qtable-v1.txt");
    match parse_controller(text) {
        Ok(ControllerFile::QlTable(q)) => q,
        _ => [[0.0; 3]; 8],
    }
}

/// Ships with the crate: network weights trained with differential evolution
/// on the built-in training environment.
pub fn default_fcn_weights() -> FcnWeights {
    let text = include_str!("../assets/slne-weights-v1.txt");
    match parse_controller(text) {
        Ok(ControllerFile::Fcn(w)) => w,
        _ => FcnWeights::zeros(),
    }
}

/// Per-agent controller state. Stateless kinds carry nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CtlState {
    Stateless,
    Bandit(StrategyBandit),
    Ql(StrategyQl),
}

impl CtlState {
    pub fn fresh(kind: MetaKind, beta: f64, ql_init: &[[f64; 3]; 8]) -> Self {
        match kind {
            MetaKind::SlRl | MetaKind::SlUcb => CtlState::Bandit(StrategyBandit::new(beta)),
            MetaKind::SlQl => CtlState::Ql(StrategyQl { q: *ql_init, ..Default::default() }),
            _ => CtlState::Stateless,
        }
    }
}

/// Strategy selection for one agent at one step.
#[allow(clippy::too_many_arguments)]
pub fn select_strategy(
    kind: MetaKind,
    state: &mut CtlState,
    ctx: &Context,
    raw: &ContextRaw,
    assets: &ControllerAssets,
    epsilon_rl: f64,
    ucb_c: f64,
    rng: &mut SimRng,
) -> StrategyKind {
    match kind {
        MetaKind::IlOnly
        | MetaKind::SlRand
        | MetaKind::SlProp
        | MetaKind::SlConf
        | MetaKind::SlSucc => msl_fixed(kind, rng),
        MetaKind::SlEcConf => msl_ec_conf(ctx),
        MetaKind::SlEcSucc => msl_ec_succ(ctx),
        MetaKind::SlEcConfUnc => msl_ec_conf_unc(ctx),
        MetaKind::SlGa => msl_rule_table(&assets.rule_table, ctx),
        MetaKind::SlNe => {
            let (mu, sigma, freq) = raw.fcn_inputs();
            msl_fcn(&assets.fcn, &mu, &sigma, &freq)
                .unwrap_or(StrategyKind::IndividualLearning)
        }
        MetaKind::SlRl => match state {
            CtlState::Bandit(b) => b.select_rl(epsilon_rl, rng),
            _ => StrategyKind::IndividualLearning,
        },
        MetaKind::SlUcb => match state {
            CtlState::Bandit(b) => b.select_ucb(ucb_c),
            _ => StrategyKind::IndividualLearning,
        },
        MetaKind::SlQl => match state {
            CtlState::Ql(q) => {
                q.observe_state(ctx.state_index());
                q.select(ctx.state_index(), rng)
            }
            _ => StrategyKind::IndividualLearning,
        },
    }
}

/// Reward feedback into whatever controller state the agent carries.
pub fn controller_feedback(state: &mut CtlState, reward: f64) {
    match state {
        CtlState::Bandit(b) => b.feedback(reward),
        CtlState::Ql(q) => q.feedback(reward),
        CtlState::Stateless => {}
    }
}

// ---------------------------------------------------------------------------
// controller file format
// ---------------------------------------------------------------------------

pub const CONTROLLER_FORMAT_VERSION: &str = "msl-controller v1";

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerFile {
    RuleTable(RuleTable),
    Fcn(FcnWeights),
    QlTable([[f64; 3]; 8]),
}

/// Serializes a rule table to the versioned text format.
pub fn rule_table_to_text(table: &RuleTable) -> String {
    let rules: Vec<String> = table.rules.iter().map(|s| s.code().to_string()).collect();
    format!(
        "{CONTROLLER_FORMAT_VERSION}\nkind SL-GA\nth_ec {:.12}\nth_u {:.12}\nrules {}\n",
        table.th_ec,
        table.th_u,
        rules.join(" ")
    )
}

/// Serializes network weights to the versioned text format.
pub fn fcn_to_text(weights: &FcnWeights) -> String {
    let mut out = format!(
        "{CONTROLLER_FORMAT_VERSION}\nkind SL-NE\nactivation tanh\nweights {}\n",
        weights.weights.len()
    );
    for row in weights.weights.chunks(6) {
        let line: Vec<String> = row.iter().map(|w| format!("{w:.12}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Serializes a trained Q-learning table to the versioned text format.
pub fn ql_table_to_text(q: &[[f64; 3]; 8]) -> String {
    let mut out = format!("{CONTROLLER_FORMAT_VERSION}\nkind SL-QL\nq 24\n");
    for row in q {
        out.push_str(&format!("{:.12} {:.12} {:.12}\n", row[0], row[1], row[2]));
    }
    out
}

/// Parses any controller kind from the versioned text format.
pub fn parse_controller(text: &str) -> Result<ControllerFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty controller file".into()))?;
    if header.trim() != CONTROLLER_FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported controller header '{}', expected '{CONTROLLER_FORMAT_VERSION}'",
            header.trim()
        )));
    }
    let mut kind: Option<String> = None;
    let mut th_ec: Option<f64> = None;
    let mut th_u: Option<f64> = None;
    let mut rules: Option<Vec<u8>> = None;
    let mut weights_expected: Option<usize> = None;
    let mut weights: Vec<f64> = Vec::new();

    for line in lines {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        match key {
            "kind" => kind = parts.next().map(str::to_owned),
            "activation" => {
                let act = parts.next().unwrap_or_default();
                if act != "tanh" {
                    return Err(Error::Parse(format!("unsupported activation '{act}'")));
                }
            }
            "th_ec" => th_ec = parts.next().and_then(|v| v.parse().ok()),
            "th_u" => th_u = parts.next().and_then(|v| v.parse().ok()),
            "rules" => {
                let parsed: std::result::Result<Vec<u8>, _> =
                    parts.map(|v| v.parse::<u8>()).collect();
                rules = Some(parsed.map_err(|e| Error::Parse(format!("bad rule gene: {e}")))?);
            }
            "weights" | "q" => {
                weights_expected = parts.next().and_then(|v| v.parse().ok());
            }
            _ => {
                // continuation lines of the weight block
                for tok in line.split_whitespace() {
                    let w: f64 =
                        tok.parse().map_err(|e| Error::Parse(format!("bad weight '{tok}': {e}")))?;
                    weights.push(w);
                }
            }
        }
    }

    match kind.as_deref() {
        Some("SL-GA") => {
            let rules = rules.ok_or_else(|| Error::Parse("missing rules line".into()))?;
            if rules.len() != 8 {
                return Err(Error::Parse(format!("expected 8 rule genes, got {}", rules.len())));
            }
            let mut table = RuleTable::reference();
            for (slot, code) in table.rules.iter_mut().zip(&rules) {
                *slot = StrategyKind::from_code(*code)?;
            }
            table.th_ec = th_ec.ok_or_else(|| Error::Parse("missing th_ec".into()))?;
            table.th_u = th_u.ok_or_else(|| Error::Parse("missing th_u".into()))?;
            Ok(ControllerFile::RuleTable(table))
        }
        Some("SL-NE") => {
            let expected = weights_expected
                .ok_or_else(|| Error::Parse("missing weights count line".into()))?;
            if weights.len() != expected {
                return Err(Error::Parse(format!(
                    "weight count mismatch: header says {expected}, found {}",
                    weights.len()
                )));
            }
            Ok(ControllerFile::Fcn(FcnWeights::new(weights)?))
        }
        Some("SL-QL") => {
            let expected =
                weights_expected.ok_or_else(|| Error::Parse("missing q count line".into()))?;
            if weights.len() != expected || expected != 24 {
                return Err(Error::Parse(format!(
                    "q count mismatch: header says {expected}, found {}",
                    weights.len()
                )));
            }
            let mut q = [[0.0; 3]; 8];
            for (i, w) in weights.iter().enumerate() {
                q[i / 3][i % 3] = *w;
            }
            Ok(ControllerFile::QlTable(q))
        }
        other => Err(Error::Parse(format!("unknown controller kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn ctx(ec: bool, conf: bool, unc: bool) -> Context {
        Context { ec, conf, unc, odpu_value: if unc { 0.5 } else { 0.0 } }
    }

    #[test]
    fn full_rule_dispatch_table() {
        use StrategyKind::*;
        assert_eq!(msl_ec_conf_unc(&ctx(false, true, true)), Conformist);
        assert_eq!(msl_ec_conf_unc(&ctx(false, true, false)), Conformist);
        assert_eq!(msl_ec_conf_unc(&ctx(false, false, false)), SuccessBased);
        assert_eq!(msl_ec_conf_unc(&ctx(false, false, true)), IndividualLearning);
        for conf in [false, true] {
            for unc in [false, true] {
                assert_eq!(msl_ec_conf_unc(&ctx(true, conf, unc)), IndividualLearning);
            }
        }
    }

    #[test]
    fn partial_rules_dispatch() {
        use StrategyKind::*;
        assert_eq!(msl_ec_conf(&ctx(false, true, false)), Conformist);
        assert_eq!(msl_ec_conf(&ctx(false, true, true)), Conformist);
        assert_eq!(msl_ec_conf(&ctx(false, false, false)), IndividualLearning);
        assert_eq!(msl_ec_conf(&ctx(true, true, false)), IndividualLearning);

        assert_eq!(msl_ec_succ(&ctx(false, false, false)), SuccessBased);
        assert_eq!(msl_ec_succ(&ctx(false, true, true)), IndividualLearning);
        assert_eq!(msl_ec_succ(&ctx(true, false, false)), IndividualLearning);
    }

    #[test]
    fn il_only_never_copies() {
        let mut rng = stream_rng(31, 0);
        for _ in 0..50 {
            assert_eq!(msl_fixed(MetaKind::IlOnly, &mut rng), StrategyKind::IndividualLearning);
        }
    }

    #[test]
    fn fixed_baseline_frequencies() {
        let mut rng = stream_rng(31, 1);
        let n = 300_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[msl_fixed(MetaKind::SlRand, &mut rng).code() as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.005, "rand freq {f}");
        }

        let n = 100_000;
        let conf = (0..n)
            .filter(|_| msl_fixed(MetaKind::SlConf, &mut rng) == StrategyKind::Conformist)
            .count();
        let f = conf as f64 / n as f64;
        assert!((f - 0.95).abs() < 0.005, "conf freq {f}");

        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[msl_fixed(MetaKind::SlProp, &mut rng).code() as usize] += 1;
        }
        assert!((counts[1] as f64 / n as f64 - 0.45).abs() < 0.01);
        assert!((counts[2] as f64 / n as f64 - 0.45).abs() < 0.01);
        assert!((counts[0] as f64 / n as f64 - 0.10).abs() < 0.01);
    }

    #[test]
    fn rule_table_reference_matches_dispatch_on_all_states() {
        let table = RuleTable::reference();
        for idx in 0..8usize {
            let c = ctx(idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
            assert_eq!(msl_rule_table(&table, &c), msl_ec_conf_unc(&c), "state {idx}");
        }
    }

    #[test]
    fn rule_table_total_over_all_tables_and_states() {
        // any gene assignment yields a valid strategy on every state
        use StrategyKind::*;
        for genes in [[0u8; 8], [1; 8], [2; 8], [0, 1, 2, 0, 1, 2, 0, 1]] {
            let mut table = RuleTable::reference();
            for (slot, g) in table.rules.iter_mut().zip(genes) {
                *slot = StrategyKind::from_code(g).unwrap();
            }
            for idx in 0..8usize {
                let c = ctx(idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
                let s = msl_rule_table(&table, &c);
                assert!(matches!(s, IndividualLearning | SuccessBased | Conformist));
            }
        }
    }

    #[test]
    fn bandit_rl_greedy_argmax() {
        let mut b = StrategyBandit::new(0.2);
        b.q = [1.0, 0.0, 0.0];
        let mut rng = stream_rng(31, 2);
        assert_eq!(b.select_rl(0.0, &mut rng), StrategyKind::IndividualLearning);
    }

    #[test]
    fn ucb_forces_unvisited_then_prefers_large_bonus() {
        let mut b = StrategyBandit::new(0.2);
        // all unvisited: forced in index order
        assert_eq!(b.select_ucb(1.0), StrategyKind::IndividualLearning);
        assert_eq!(b.select_ucb(1.0), StrategyKind::SuccessBased);
        assert_eq!(b.select_ucb(1.0), StrategyKind::Conformist);
        // equal values, middle strategy has the smallest count
        b.q = [0.5, 0.5, 0.5];
        b.n = [10, 1, 10];
        b.t = 21;
        assert_eq!(b.select_ucb(1.0), StrategyKind::SuccessBased);
    }

    #[test]
    fn bandit_feedback_updates_last_selection() {
        let mut b = StrategyBandit::new(0.2);
        let mut rng = stream_rng(31, 3);
        let s = b.select_rl(0.0, &mut rng);
        assert_eq!(s, StrategyKind::IndividualLearning);
        b.feedback(1.0);
        assert!((b.q[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn qlearn_gamma_zero_reduces_to_value_update() {
        let mut q = StrategyQl::default();
        q.q[2][1] = 0.5;
        q.pending = Some((2, 1, 1.0));
        q.observe_state(5);
        assert!((q.q[2][1] - 0.505).abs() < 1e-12);
    }

    #[test]
    fn qlearn_greedy_selection() {
        let mut q = StrategyQl { epsilon: 0.0, ..Default::default() };
        q.q[3] = [0.9, 0.1, 0.1];
        let mut rng = stream_rng(31, 4);
        assert_eq!(q.select(3, &mut rng), StrategyKind::IndividualLearning);
    }

    #[test]
    fn qlearn_discounted_update_uses_next_state_max() {
        let mut q = StrategyQl { alpha: 0.5, gamma: 0.9, ..Default::default() };
        q.q[1] = [0.0, 0.2, 0.0];
        q.pending = Some((0, 0, 1.0));
        q.observe_state(1);
        // 0 + 0.5 (1.0 + 0.9 * 0.2 - 0) = 0.59
        assert!((q.q[0][0] - 0.59).abs() < 1e-12);
    }

    #[test]
    fn fcn_parameter_count() {
        assert_eq!(FcnWeights::LEN, 123);
        assert!(FcnWeights::new(vec![0.0; 122]).is_err());
    }

    #[test]
    fn fcn_zero_weights_tie_breaks_to_first_strategy() {
        let w = FcnWeights::zeros();
        let s = msl_fcn(&w, &[0.5, 0.5], &[0.1, 0.1], &[0.5, 0.5]).unwrap();
        assert_eq!(s, StrategyKind::IndividualLearning);
    }

    #[test]
    fn fcn_rejects_wrong_arity() {
        let w = FcnWeights::zeros();
        assert!(msl_fcn(&w, &[0.5], &[0.1, 0.1], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn fcn_hand_routed_weights_select_conformist() {
        // hidden 0 reads the first frequency input, output "conformist"
        // reads hidden 0; the forward pass is verified by hand:
        // tanh(5 * 1) ~ 0.9999, output_2 = 5 * 0.9999 > 0
        let mut w = vec![0.0; FcnWeights::LEN];
        w[4] = 5.0;
        let base = FCN_HIDDEN * (FcnWeights::INPUTS + 1);
        w[base + 2 * (FCN_HIDDEN + 1)] = 5.0;
        let w = FcnWeights::new(w).unwrap();
        let out = w.forward(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((out[2] - 5.0 * 5.0f64.tanh()).abs() < 1e-12);
        assert_eq!(
            msl_fcn(&w, &[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]).unwrap(),
            StrategyKind::Conformist
        );
        assert_eq!(
            msl_fcn(&w, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]).unwrap(),
            StrategyKind::IndividualLearning
        );
    }

    #[test]
    fn fcn_hidden_permutation_invariance() {
        let mut rng = stream_rng(31, 5);
        let w: Vec<f64> = (0..FcnWeights::LEN).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let original = FcnWeights::new(w.clone()).unwrap();

        // swap hidden units 0 and 1 with matched weight rows/columns
        let mut permuted = w.clone();
        let in_w = FcnWeights::INPUTS + 1;
        for i in 0..in_w {
            permuted.swap(i, in_w + i);
        }
        let base = FCN_HIDDEN * in_w;
        for o in 0..FCN_OUTPUTS {
            permuted.swap(base + o * (FCN_HIDDEN + 1), base + o * (FCN_HIDDEN + 1) + 1);
        }
        let permuted = FcnWeights::new(permuted).unwrap();

        let mu = [0.8, 0.3];
        let sigma = [0.1, 0.4];
        let freq = [0.7, 0.3];
        let a = original.forward(&mu, &sigma, &freq).unwrap();
        let b = permuted.forward(&mu, &sigma, &freq).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn controller_file_round_trips() {
        let table = RuleTable::reference();
        let text = rule_table_to_text(&table);
        match parse_controller(&text).unwrap() {
            ControllerFile::RuleTable(parsed) => assert_eq!(parsed, table),
            _ => panic!("expected rule table"),
        }

        let mut rng = stream_rng(31, 6);
        let w = FcnWeights::new(
            (0..FcnWeights::LEN).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        )
        .unwrap();
        let text = fcn_to_text(&w);
        match parse_controller(&text).unwrap() {
            ControllerFile::Fcn(parsed) => {
                for (a, b) in parsed.weights.iter().zip(&w.weights) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
            _ => panic!("expected network weights"),
        }
    }

    #[test]
    fn controller_parser_rejects_malformed_input() {
        assert!(parse_controller("").is_err());
        assert!(parse_controller("msl-controller v2\nkind SL-GA\n").is_err());
        assert!(parse_controller(
            "msl-controller v1\nkind SL-GA\nth_ec 0.1\nth_u 0.1\nrules 1 2\n"
        )
        .is_err());
        assert!(parse_controller(
            "msl-controller v1\nkind SL-NE\nactivation tanh\nweights 3\n0.1 0.2\n"
        )
        .is_err());
    }

    #[test]
    fn meta_kind_names_round_trip() {
        for kind in MetaKind::ALL {
            assert_eq!(MetaKind::from_name(kind.name()).unwrap(), kind);
        }
        // the alias from the methods section
        assert_eq!(MetaKind::from_name("SL-EC-Unc").unwrap(), MetaKind::SlEcSucc);
        assert!(MetaKind::from_name("SL-???").is_err());
    }
}

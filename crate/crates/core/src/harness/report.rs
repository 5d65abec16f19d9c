//! Deterministic result emission: per-run CSV, aggregate JSON, and SVG plots
//! (reward curves, cost-vs-reward scatter, critical-difference diagram).
//!
//! Everything is rendered with fixed six-decimal formatting and stable
//! ordering, so re-rendering saved results reproduces the bytes exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{stats, ExperimentResults, StatsReport};
use crate::error::Result;
use crate::evolution::RunResult;

/// First 16 hex digits of the SHA-256 of a canonical description.
pub fn config_hash(description: &str) -> String {
    let digest = Sha256::digest(description.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

const PALETTE: [&str; 13] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#ad494a", "#637939",
];

fn fmt6(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".to_string()
    }
}

/// Per-replicate CSV: one row per generation with the reward, cost and
/// context series plus the composition columns.
pub fn run_csv(run: &RunResult) -> String {
    let mut out = String::new();
    out.push_str("step,psi,cum_psi,il_frac,cum_cost,ec,conf,unc,odpu");
    for label in &run.ratio_labels {
        let _ = write!(out, ",ratio_{}", label.to_ascii_lowercase());
    }
    if run.mean_age.is_some() {
        for label in &run.ratio_labels {
            let _ = write!(out, ",age_{}", label.to_ascii_lowercase());
        }
    }
    out.push('\n');
    let mut cum = 0.0;
    for i in 0..run.psi.len() {
        cum += run.psi[i];
        let c = &run.ctx_series[i];
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            i,
            fmt6(run.psi[i]),
            fmt6(cum),
            fmt6(run.il_exec_frac[i]),
            fmt6(run.cum_cost[i]),
            c.ec,
            c.conf,
            c.unc,
            fmt6(c.odpu)
        );
        for v in &run.ratios[i] {
            let _ = write!(out, ",{}", fmt6(*v));
        }
        if let Some(ages) = &run.mean_age {
            for v in &ages[i] {
                let _ = write!(out, ",{}", fmt6(*v));
            }
        }
        out.push('\n');
    }
    out
}

/// Aggregate summary: per-arm mean and standard deviation of cumulative
/// reward, cost and window means, plus the statistics block.
pub fn summary_json(results: &ExperimentResults) -> Result<String> {
    let mut arms = Vec::new();
    for arm in &results.arms {
        let cums = arm.cum_psis();
        let costs = arm.costs();
        let mut windows = serde_json::Map::new();
        for &(lo, hi) in &results.eval_windows {
            let means = arm.window_means(lo, hi);
            windows.insert(
                format!("psi_{lo}_{hi}"),
                serde_json::json!({
                    "mean": round6(stats::mean(&means)),
                    "std": round6(stats::std_dev(&means)),
                }),
            );
        }
        arms.push(serde_json::json!({
            "label": arm.label,
            "replicates": arm.runs.len(),
            "seeds": arm.runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
            "cum_psi": { "mean": round6(stats::mean(&cums)), "std": round6(stats::std_dev(&cums)) },
            "cost": { "mean": round6(stats::mean(&costs)), "std": round6(stats::std_dev(&costs)) },
            "windows": windows,
        }));
    }
    let value = serde_json::json!({
        "version": 1,
        "name": results.name,
        "master_seed": results.master_seed,
        "config_hash": results_hash(results),
        "environments_reconstructed": true,
        "change_points": results.change_points,
        "arms": arms,
        "stats": results.stats,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

impl From<serde_json::Error> for crate::error::Error {
    fn from(e: serde_json::Error) -> Self {
        crate::error::Error::Parse(e.to_string())
    }
}

/// Full payload for byte-exact re-rendering.
pub fn results_json(results: &ExperimentResults) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string(results)?))
}

pub fn parse_results_json(text: &str) -> Result<ExperimentResults> {
    Ok(serde_json::from_str(text)?)
}

fn results_hash(results: &ExperimentResults) -> String {
    let desc = format!(
        "{}|seed={}|arms={}|runs={}",
        results.name,
        results.master_seed,
        results.arms.iter().map(|a| a.label.as_str()).collect::<Vec<_>>().join(","),
        results.arms.first().map(|a| a.runs.len()).unwrap_or(0),
    );
    config_hash(&desc)
}

fn svg_open(width: u32, height: u32, title: &str, results: &ExperimentResults) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"11\">\n\
         <metadata>name={} seed={} config_hash={}</metadata>\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"10\" y=\"16\" font-size=\"13\">{title}</text>\n",
        results.name,
        results.master_seed,
        results_hash(results),
    )
}

/// Mean reward curves per arm with markers at the environment change points.
pub fn psi_plot_svg(results: &ExperimentResults) -> String {
    let (w, h) = (720u32, 400u32);
    let (ml, mr, mt, mb) = (56.0, 160.0, 30.0, 36.0);
    let plot_w = w as f64 - ml - mr;
    let plot_h = h as f64 - mt - mb;
    let curves: Vec<(String, Vec<f64>)> = results
        .arms
        .iter()
        .map(|a| (a.label.clone(), a.mean_curve()))
        .collect();
    let steps = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(1).max(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, c) in &curves {
        for &v in c {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) || lo == hi {
        lo = 0.0;
        hi = 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = |step: usize| ml + plot_w * step as f64 / (steps - 1) as f64;
    let y = |v: f64| mt + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = svg_open(w, h, "average population reward", results);
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        fmt6(ml),
        fmt6(mt),
        fmt6(plot_w),
        fmt6(plot_h)
    );
    let _ = write!(
        svg,
        "<text x=\"6\" y=\"{}\">{}</text>\n<text x=\"6\" y=\"{}\">{}</text>\n",
        fmt6(mt + 10.0),
        fmt6(hi),
        fmt6(mt + plot_h),
        fmt6(lo)
    );
    for &cp in &results.change_points {
        let cx = x(cp as usize);
        let _ = write!(
            svg,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ff8c00\" \
             stroke-dasharray=\"4 3\"/>\n",
            fmt6(cx),
            fmt6(mt),
            fmt6(mt + plot_h)
        );
    }
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curve
            .iter()
            .enumerate()
            .map(|(s, &v)| format!("{},{}", fmt6(x(s)), fmt6(y(v))))
            .collect();
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
            points.join(" ")
        );
        let ly = mt + 14.0 * i as f64;
        let _ = write!(
            svg,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" stroke-width=\"3\"/>\
             <text x=\"{3}\" y=\"{4}\">{label}</text>\n",
            fmt6(w as f64 - mr + 8.0),
            fmt6(ly + 6.0),
            fmt6(w as f64 - mr + 26.0),
            fmt6(w as f64 - mr + 32.0),
            fmt6(ly + 10.0),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Performance against exploration cost, one labeled point per arm.
pub fn cost_scatter_svg(results: &ExperimentResults) -> String {
    let (w, h) = (640u32, 420u32);
    let (ml, mr, mt, mb) = (70.0, 40.0, 30.0, 46.0);
    let plot_w = w as f64 - ml - mr;
    let plot_h = h as f64 - mt - mb;
    let points: Vec<(String, f64, f64)> = results
        .arms
        .iter()
        .map(|a| {
            (a.label.clone(), stats::mean(&a.costs()), stats::mean(&a.cum_psis()))
        })
        .collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, c, p) in &points {
        x_lo = x_lo.min(c);
        x_hi = x_hi.max(c);
        y_lo = y_lo.min(p);
        y_hi = y_hi.max(p);
    }
    if x_lo == x_hi {
        x_hi = x_lo + 1.0;
    }
    if y_lo == y_hi {
        y_hi = y_lo + 1.0;
    }
    let xpad = 0.06 * (x_hi - x_lo);
    let ypad = 0.06 * (y_hi - y_lo);
    let (x_lo, x_hi) = (x_lo - xpad, x_hi + xpad);
    let (y_lo, y_hi) = (y_lo - ypad, y_hi + ypad);
    let x = |c: f64| ml + plot_w * (c - x_lo) / (x_hi - x_lo);
    let y = |p: f64| mt + plot_h * (1.0 - (p - y_lo) / (y_hi - y_lo));

    let mut svg = svg_open(w, h, "cumulative reward vs exploration cost", results);
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\">exploration cost</text>\n",
        fmt6(ml),
        fmt6(mt),
        fmt6(plot_w),
        fmt6(plot_h),
        fmt6(ml + plot_w / 2.0 - 50.0),
        fmt6(h as f64 - 12.0),
    );
    for (i, (label, c, p)) in points.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = write!(
            svg,
            "<circle cx=\"{0}\" cy=\"{1}\" r=\"4\" fill=\"{color}\"/>\
             <text x=\"{2}\" y=\"{3}\" fill=\"{color}\">{label}</text>\n",
            fmt6(x(*c)),
            fmt6(y(*p)),
            fmt6(x(*c) + 6.0),
            fmt6(y(*p) - 4.0),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Critical-difference diagram: rank axis, one marker per algorithm in rank
/// order, bold bars linking groups whose differences are not significant.
pub fn cd_diagram_svg(results: &ExperimentResults) -> String {
    let stats_report: &StatsReport = &results.stats;
    let k = stats_report.avg_ranks.len().max(2);
    let (w, h) = (720u32, (140 + 16 * k) as u32);
    let (ml, mr) = (60.0, 60.0);
    let axis_w = w as f64 - ml - mr;
    let axis_y = 70.0;
    let x = |rank: f64| ml + axis_w * (rank - 1.0) / (k as f64 - 1.0);

    let mut svg = svg_open(w, h, "average ranks (lower is better)", results);
    let _ = write!(
        svg,
        "<line x1=\"{}\" y1=\"{axis_y}\" x2=\"{}\" y2=\"{axis_y}\" stroke=\"black\"/>\n",
        fmt6(ml),
        fmt6(ml + axis_w)
    );
    for tick in 1..=k {
        let tx = x(tick as f64);
        let _ = write!(
            svg,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\
             <text x=\"{3}\" y=\"{4}\">{tick}</text>\n",
            fmt6(tx),
            fmt6(axis_y - 4.0),
            fmt6(axis_y + 4.0),
            fmt6(tx - 3.0),
            fmt6(axis_y - 10.0),
        );
    }
    if let Some(cd) = stats_report.critical_difference {
        let _ = write!(
            svg,
            "<line x1=\"{0}\" y1=\"30\" x2=\"{1}\" y2=\"30\" stroke=\"black\" stroke-width=\"2\"/>\
             <text x=\"{2}\" y=\"26\">CD = {3}</text>\n",
            fmt6(x(1.0)),
            fmt6(x(1.0 + cd)),
            fmt6(x(1.0)),
            fmt6(cd),
        );
    }
    // linkage bars under the axis
    let rank_of = |label: &str| -> f64 {
        stats_report
            .avg_ranks
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, r)| *r)
            .unwrap_or(1.0)
    };
    for (g, group) in stats_report.linked_groups.iter().enumerate() {
        let lo = group.iter().map(|l| rank_of(l)).fold(f64::INFINITY, f64::min);
        let hi = group.iter().map(|l| rank_of(l)).fold(f64::NEG_INFINITY, f64::max);
        let by = axis_y + 8.0 + 6.0 * g as f64;
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{by}\" x2=\"{}\" y2=\"{by}\" stroke=\"black\" stroke-width=\"3.5\"/>\n",
            fmt6(x(lo) - 2.0),
            fmt6(x(hi) + 2.0)
        );
    }
    // labels stacked below in rank order
    let mut order: Vec<usize> = (0..stats_report.avg_ranks.len()).collect();
    order.sort_by(|&a, &b| {
        stats_report.avg_ranks[a]
            .1
            .partial_cmp(&stats_report.avg_ranks[b].1)
            .unwrap()
            .then(a.cmp(&b))
    });
    for (row, &idx) in order.iter().enumerate() {
        let (label, rank) = &stats_report.avg_ranks[idx];
        let ly = axis_y + 40.0 + 16.0 * row as f64;
        let lx = x(*rank);
        let _ = write!(
            svg,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#888\"/>\
             <text x=\"{3}\" y=\"{4}\">{5} {label}</text>\n",
            fmt6(lx),
            fmt6(axis_y),
            fmt6(ly - 4.0),
            fmt6((lx + 4.0).min(w as f64 - 170.0)),
            fmt6(ly),
            fmt6(*rank),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the full report tree under `dir` and returns the created paths.
pub fn emit_report(
    results: &ExperimentResults,
    dir: &Path,
    per_run_csv: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let emit = |name: &str, content: String| -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, content)?;
        Ok(path)
    };
    written.push(emit("results.json", results_json(results)?)?);
    written.push(emit("summary.json", summary_json(results)?)?);
    written.push(emit("psi.svg", psi_plot_svg(results))?);
    written.push(emit("cost_vs_reward.svg", cost_scatter_svg(results))?);
    if !results.stats.avg_ranks.is_empty() {
        written.push(emit("cd_diagram.svg", cd_diagram_svg(results))?);
    }
    if per_run_csv {
        for arm in &results.arms {
            let arm_dir = dir.join("runs").join(sanitize(&arm.label));
            fs::create_dir_all(&arm_dir)?;
            for (i, run) in arm.runs.iter().enumerate() {
                let path = arm_dir.join(format!("run_{i:03}.csv"));
                fs::write(&path, run_csv(run))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

//! Nonparametric statistics for the experiment suites: rank-sum comparison,
//! Friedman omnibus test, critical-difference ranks with Nemenyi linkage,
//! and correlation measures.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Midranks of the pooled sample (average ties), returned per input slot.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value. Exact for samples of
/// up to 10 per side (subset-sum enumeration over the observed midranks,
/// ties included), otherwise the normal approximation with tie correction.
/// Degenerate all-equal input gives 1.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<f64> {
    let (n1, n2) = (x.len(), y.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::config("rank-sum test needs at least 2 samples per side"));
    }
    let pooled: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
    let r = ranks(&pooled);
    let w: f64 = r[..n1].iter().sum();
    let n = n1 + n2;

    // tie bookkeeping
    let mut sorted = pooled.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut has_ties = false;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        if t > 1.0 {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        i = j + 1;
    }

    if n1 <= 10 && n2 <= 10 {
        // doubled midranks are integers, so the subset-sum enumeration is
        // exact with or without ties
        let scaled: Vec<u64> = r.iter().map(|&v| (2.0 * v).round() as u64).collect();
        let w_scaled = scaled[..n1].iter().sum::<u64>();
        return Ok(exact_rank_sum_p(&scaled, n1, w_scaled));
    }

    let mean = n1 as f64 * (n + 1) as f64 / 2.0;
    let var = (n1 as f64 * n2 as f64 / 12.0)
        * ((n + 1) as f64 - tie_term / (n as f64 * (n as f64 - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    // continuity correction on the untied integer lattice only; midranks
    // break the unit spacing
    let cc = if has_ties { 0.0 } else { 0.5 };
    let z = ((w - mean).abs() - cc).max(0.0) / var.sqrt();
    Ok((2.0 * (1.0 - std_normal_cdf(z))).clamp(0.0, 1.0))
}

/// Exact two-sided p: counts size-n1 subsets of the (scaled) rank multiset
/// by sum and compares both tails of the observed rank sum.
fn exact_rank_sum_p(scaled_ranks: &[u64], n1: usize, w_scaled: u64) -> f64 {
    let total_sum: usize = scaled_ranks.iter().sum::<u64>() as usize;
    let mut count = vec![vec![0.0f64; total_sum + 1]; n1 + 1];
    count[0][0] = 1.0;
    for &v in scaled_ranks {
        let v = v as usize;
        for j in (1..=n1).rev() {
            for s in (v..=total_sum).rev() {
                let add = count[j - 1][s - v];
                if add > 0.0 {
                    count[j][s] += add;
                }
            }
        }
    }
    let row = &count[n1];
    let w = (w_scaled as usize).min(total_sum);
    let total: f64 = row.iter().sum();
    let le: f64 = row[..=w].iter().sum();
    let ge: f64 = row[w..].iter().sum();
    (2.0 * le.min(ge) / total).min(1.0)
}

/// Friedman test over a runs x algorithms matrix (larger value = better).
/// Returns the tie-corrected statistic and its chi-squared p-value.
pub fn friedman(matrix: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = matrix.len();
    let k = matrix.first().map(Vec::len).unwrap_or(0);
    if n < 2 || k < 2 {
        return Err(Error::config("friedman needs at least 2 runs and 2 algorithms"));
    }
    let rank_rows: Vec<Vec<f64>> = matrix.iter().map(|row| in_row_ranks(row)).collect();
    let mut rank_sums = vec![0.0; k];
    for row in &rank_rows {
        for (j, &r) in row.iter().enumerate() {
            rank_sums[j] += r;
        }
    }
    let nf = n as f64;
    let kf = k as f64;
    let stat_uncorrected = 12.0 / (nf * kf * (kf + 1.0))
        * rank_sums.iter().map(|r| r * r).sum::<f64>()
        - 3.0 * nf * (kf + 1.0);
    // tie correction over within-row tie groups
    let mut tie_term = 0.0;
    for row in &rank_rows {
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    let correction = 1.0 - tie_term / (nf * kf * (kf * kf - 1.0));
    let stat = if correction > 0.0 { stat_uncorrected / correction } else { 0.0 };
    let dist = ChiSquared::new(kf - 1.0).map_err(|e| Error::numeric(e.to_string()))?;
    let p = 1.0 - dist.cdf(stat.max(0.0));
    Ok((stat, p))
}

/// Within-row ranks with 1 = best (largest value), average ties.
fn in_row_ranks(row: &[f64]) -> Vec<f64> {
    let negated: Vec<f64> = row.iter().map(|v| -v).collect();
    ranks(&negated)
}

/// Critical values q_alpha for the two-tailed Nemenyi test at alpha = 0.05,
/// indexed by the number of algorithms (2..=20).
const NEMENYI_Q05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030879, 3.101730, 3.163684,
    3.218654, 3.268004, 3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073,
    3.543799,
];

#[derive(Debug, Clone, PartialEq)]
pub struct NemenyiResult {
    /// average rank per algorithm, 1 = best
    pub avg_ranks: Vec<f64>,
    /// critical difference at alpha = 0.05
    pub cd: f64,
    /// maximal groups of algorithm indices whose ranks are within the CD,
    /// sorted by rank; only groups of two or more
    pub groups: Vec<Vec<usize>>,
}

impl NemenyiResult {
    /// Algorithms whose average rank is within one CD of the best rank.
    pub fn top_group(&self) -> Vec<usize> {
        let best = self.avg_ranks.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        (0..self.avg_ranks.len())
            .filter(|&i| self.avg_ranks[i] - best <= self.cd)
            .collect()
    }
}

/// Average ranks over the runs x algorithms matrix plus Nemenyi linkage at
/// alpha = 0.05.
pub fn nemenyi_cd(matrix: &[Vec<f64>]) -> Result<NemenyiResult> {
    let n = matrix.len();
    let k = matrix.first().map(Vec::len).unwrap_or(0);
    if n < 2 || k < 2 {
        return Err(Error::config("nemenyi needs at least 2 runs and 2 algorithms"));
    }
    if !(2..=20).contains(&k) {
        return Err(Error::config(format!("no critical value tabulated for k={k}")));
    }
    let mut avg_ranks = vec![0.0; k];
    for row in matrix {
        for (j, r) in in_row_ranks(row).into_iter().enumerate() {
            avg_ranks[j] += r;
        }
    }
    for r in avg_ranks.iter_mut() {
        *r /= n as f64;
    }
    let q = NEMENYI_Q05[k - 2];
    let cd = q * (k as f64 * (k as f64 + 1.0) / (6.0 * n as f64)).sqrt();

    // maximal linked intervals over the rank-sorted algorithms
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| avg_ranks[a].partial_cmp(&avg_ranks[b]).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev_end = 0usize;
    for i in 0..k {
        let mut j = i;
        while j + 1 < k && avg_ranks[order[j + 1]] - avg_ranks[order[i]] <= cd {
            j += 1;
        }
        if j > i && j + 1 > prev_end {
            groups.push(order[i..=j].to_vec());
            prev_end = j + 1;
        }
    }
    Ok(NemenyiResult { avg_ranks, cd, groups })
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::config("pearson needs two equal-length samples of size >= 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::numeric("pearson undefined for constant samples"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with a two-sided t-approximation p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::config("spearman needs two equal-length samples of size >= 3"));
    }
    let rho = pearson(&ranks(x), &ranks(y))?;
    let n = x.len() as f64;
    if rho.abs() >= 1.0 {
        return Ok((rho, 0.0));
    }
    let t = rho * ((n - 2.0) / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 2.0).map_err(|e| Error::numeric(e.to_string()))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok((rho, p.clamp(0.0, 1.0)))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)).sqrt()
}

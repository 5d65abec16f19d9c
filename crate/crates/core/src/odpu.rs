//! Optimum distribution prediction uncertainty.
//!
//! For k groups of iid Gaussians with counts n_i, this is the probability
//! that the maximum of some sub-optimal group exceeds the maximum of the
//! optimal group (the one with the highest mean):
//!
//! ```text
//! ODPU = 1 - P(max_1 >= max_i for all i >= 2)
//!      = 1 - integral f_max1(y) * prod_i F_maxi(y) dy
//! ```
//!
//! with f and F the order-statistic density/CDF of each group's maximum.
//! The integral is evaluated with adaptive Gauss-Kronrod quadrature; a
//! direct-simulation Monte Carlo estimator serves as an independent check.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Sigma floor: point-mass estimates break the density form, so degenerate
/// spreads are widened to this value.
pub const SIGMA_FLOOR: f64 = 1e-9;

/// Default absolute tolerance of the quadrature.
pub const DEFAULT_TOL: f64 = 1e-8;

/// One group of iid Gaussian draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Group {
    pub mu: f64,
    pub sigma: f64,
    pub n: u32,
}

/// Group 0 is the designated optimal group (highest mean).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub groups: Vec<Group>,
}

impl GroupSpec {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::config("ODPU needs at least 2 groups"));
        }
        for (i, g) in groups.iter().enumerate() {
            if !g.mu.is_finite() || !g.sigma.is_finite() || g.sigma <= 0.0 {
                return Err(Error::config(format!(
                    "group {i} needs finite mu and sigma > 0, got mu={}, sigma={}",
                    g.mu, g.sigma
                )));
            }
            if g.n < 1 {
                return Err(Error::config(format!("group {i} needs n >= 1")));
            }
        }
        let best = groups
            .iter()
            .skip(1)
            .fold(f64::NEG_INFINITY, |acc, g| acc.max(g.mu));
        if groups[0].mu < best {
            return Err(Error::config(
                "group 0 must have the maximal mean; reorder with from_estimates",
            ));
        }
        Ok(GroupSpec { groups })
    }
}

#[inline]
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (std::f64::consts::TAU).sqrt()
}

/// Density of the maximum of `n` iid N(mu, sigma) draws at `y`, times the
/// product of max-CDFs of the remaining groups.
fn integrand(spec: &GroupSpec, y: f64) -> f64 {
    let g0 = spec.groups[0];
    let z0 = (y - g0.mu) / g0.sigma;
    let phi0 = std_normal_cdf(z0);
    if phi0 <= 0.0 {
        return 0.0;
    }
    let mut v = g0.n as f64 / g0.sigma * std_normal_pdf(z0) * phi0.powi(g0.n as i32 - 1);
    for g in &spec.groups[1..] {
        if v == 0.0 {
            return 0.0;
        }
        let z = (y - g.mu) / g.sigma;
        v *= std_normal_cdf(z).powi(g.n as i32);
    }
    v
}

// Gauss-Kronrod 7-15 pair on [-1, 1] (QUADPACK constants).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7-K15 panel: returns (kronrod estimate, |gauss - kronrod|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let fsum = f(c - x) + f(c + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= h;
    gauss *= h;
    (kronrod, (kronrod - gauss).abs())
}

/// Adaptive quadrature to an absolute tolerance by splitting the worst panel.
fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (v, e) = gk15(f, a, b);
    if !v.is_finite() {
        return Err(Error::numeric("non-finite integrand"));
    }
    // (estimate, error, lo, hi)
    let mut panels = vec![(v, e, a, b)];
    let mut total_err: f64 = e;
    let mut iterations = 0usize;
    while total_err > tol {
        iterations += 1;
        if iterations > 2000 {
            return Err(Error::numeric(format!(
                "quadrature failed to reach tolerance {tol}: residual {total_err}"
            )));
        }
        // split the panel with the largest error estimate
        let (worst_idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
            .unwrap();
        let (_, err, lo, hi) = panels.swap_remove(worst_idx);
        total_err -= err;
        let mid = 0.5 * (lo + hi);
        for (l, r) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(f, l, r);
            if !v.is_finite() {
                return Err(Error::numeric("non-finite integrand"));
            }
            total_err += e;
            panels.push((v, e, l, r));
        }
    }
    Ok(panels.iter().map(|p| p.0).sum())
}

/// Cheap upper bound on the probability that some sub-optimal maximum
/// exceeds the optimal one, splitting each pair at the midpoint between the
/// means. Sound for any split point.
fn odpu_upper_bound(spec: &GroupSpec) -> f64 {
    let g0 = spec.groups[0];
    let mut bound = 0.0;
    for g in &spec.groups[1..] {
        let c = 0.5 * (g0.mu + g.mu);
        // P(max_sub > c) + P(max_opt <= c)
        let p_sub = 1.0 - std_normal_cdf((c - g.mu) / g.sigma).powi(g.n as i32);
        let p_opt = std_normal_cdf((c - g0.mu) / g0.sigma).powi(g0.n as i32);
        bound += p_sub + p_opt;
    }
    bound
}

/// ODPU by adaptive quadrature, within `tol` of the exact integral.
pub fn odpu_quadrature(spec: &GroupSpec, tol: f64) -> Result<f64> {
    // well-separated groups: the union bound already certifies a value
    // below the tolerance, no integration needed
    if odpu_upper_bound(spec) < tol {
        return Ok(0.0);
    }
    let mu_min = spec.groups.iter().map(|g| g.mu).fold(f64::INFINITY, f64::min);
    let mu_max = spec.groups.iter().map(|g| g.mu).fold(f64::NEG_INFINITY, f64::max);
    let sigma_max = spec.groups.iter().map(|g| g.sigma).fold(0.0, f64::max);
    let lo = mu_min - 8.0 * sigma_max;
    let hi = mu_max + 8.0 * sigma_max;

    // the optimal-group max density vanishes outside mu_0 +/- ~8 sigma_0;
    // seeding splits there keeps the adaptive refinement local
    let g0 = spec.groups[0];
    let f = |y: f64| integrand(spec, y);
    let mut cut_lo = (g0.mu - 8.0 * g0.sigma).max(lo);
    let mut cut_hi = (g0.mu + 8.0 * g0.sigma).min(hi);
    if cut_lo >= cut_hi {
        cut_lo = lo;
        cut_hi = hi;
    }
    let mut p = 0.0;
    for (l, r) in [(lo, cut_lo), (cut_lo, cut_hi), (cut_hi, hi)] {
        if r > l {
            p += adaptive_gk(&f, l, r, tol / 3.0)?;
        }
    }
    Ok((1.0 - p).clamp(0.0, 1.0))
}

/// ODPU by direct simulation: the fraction of trials in which some
/// sub-optimal group's maximum strictly exceeds the optimal group's maximum.
pub fn odpu_monte_carlo(spec: &GroupSpec, trials: u64, rng: &mut SimRng) -> f64 {
    assert!(trials >= 1);
    let mut hits = 0u64;
    for _ in 0..trials {
        let max0 = sample_group_max(spec.groups[0], rng);
        let exceeded = spec.groups[1..]
            .iter()
            .any(|&g| sample_group_max(g, rng) > max0);
        hits += u64::from(exceeded);
    }
    hits as f64 / trials as f64
}

fn sample_group_max(g: Group, rng: &mut SimRng) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for _ in 0..g.n {
        let z: f64 = rng.sample(StandardNormal);
        best = best.max(g.mu + g.sigma * z);
    }
    best
}

/// ODPU from population estimates. Arms with zero observations are excluded;
/// with fewer than two observed arms the uncertainty is defined as 0. The
/// remaining arms are reordered so the highest estimated mean is group 0, and
/// degenerate spreads are floored.
pub fn odpu_from_estimates(
    mu_hat: &[f64],
    sigma_hat: &[f64],
    counts: &[u32],
    tol: f64,
) -> Result<f64> {
    assert!(mu_hat.len() == sigma_hat.len() && mu_hat.len() == counts.len());
    let mut groups: Vec<Group> = mu_hat
        .iter()
        .zip(sigma_hat)
        .zip(counts)
        .filter(|&((_, _), &n)| n > 0)
        .map(|((&mu, &sigma), &n)| Group { mu, sigma: sigma.max(SIGMA_FLOOR), n })
        .collect();
    if groups.len() < 2 {
        return Ok(0.0);
    }
    let best = (0..groups.len())
        .max_by(|&a, &b| groups[a].mu.partial_cmp(&groups[b].mu).unwrap())
        .unwrap();
    groups.swap(0, best);
    odpu_quadrature(&GroupSpec::new(groups)?, tol)
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // adding a constant to every mean leaves the measure unchanged
        #[test]
        fn translation_invariance(
            gap in 0.0f64..1.0,
            sigma0 in 0.02f64..0.6,
            sigma1 in 0.02f64..0.6,
            n0 in 1u32..120,
            n1 in 1u32..120,
            shift in -5.0f64..5.0,
        ) {
            let base = GroupSpec::new(vec![
                Group { mu: 1.0, sigma: sigma0, n: n0 },
                Group { mu: 1.0 - gap, sigma: sigma1, n: n1 },
            ]).unwrap();
            let shifted = GroupSpec::new(vec![
                Group { mu: 1.0 + shift, sigma: sigma0, n: n0 },
                Group { mu: 1.0 - gap + shift, sigma: sigma1, n: n1 },
            ]).unwrap();
            let a = odpu_quadrature(&base, 1e-9).unwrap();
            let b = odpu_quadrature(&shifted, 1e-9).unwrap();
            prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
        }

        // probabilities stay in the unit interval
        #[test]
        fn result_is_probability(
            gap in 0.0f64..2.0,
            sigma0 in 0.01f64..1.0,
            sigma1 in 0.01f64..1.0,
            n0 in 1u32..200,
            n1 in 1u32..200,
        ) {
            let spec = GroupSpec::new(vec![
                Group { mu: 0.5, sigma: sigma0, n: n0 },
                Group { mu: 0.5 - gap, sigma: sigma1, n: n1 },
            ]).unwrap();
            let v = odpu_quadrature(&spec, 1e-8).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

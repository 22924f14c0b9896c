//! Annealed product estimator for the hard-core partition function.
//!
//! For a schedule `0 < l_1 < ... < l_M = lambda`,
//!
//! ```text
//! Z(lambda) = Z(l_1) * prod_k Z(l_{k+1}) / Z(l_k),
//! Z(l_1)    = 1 / mu_{l_1}(empty set),
//! Z(l_{k+1}) / Z(l_k) = E_{mu_{l_k}}[(l_{k+1} / l_k)^|I|].
//! ```
//!
//! Each factor is estimated from Glauber samples, the chain being carried
//! over from one level to the next. Independent runs are combined by a
//! median of means to reach the requested failure probability. Connected
//! components small enough for exact counting are handled exactly.

use rand::Rng;
use rayon::prelude::*;

use super::exact::hardcore_partition;
use super::glauber::{default_glauber_steps, GlauberChain};
use super::{below_tree_threshold, Estimate};
use crate::error::{invalid, Result};
use crate::graph::LabeledGraph;
use crate::rng::{replicate_stream, StreamRng};

/// Tuning knobs of [`estimate_partition_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealSettings {
    /// Constant in the initial burn-in `c * n * ln(n / eps_tv)`.
    pub glauber_constant: f64,
    /// Sweeps (multiples of `n` steps) between consecutive samples.
    pub thin_sweeps: f64,
    /// Sweeps of burn-in after each change of activity.
    pub level_burn_in_sweeps: f64,
    /// Multiplier applied to the sample size implied by the pilot variance.
    pub safety: f64,
    pub min_samples_per_level: usize,
    pub max_samples_per_level: usize,
    /// Components up to this size are counted exactly.
    pub exact_component_limit: usize,
    /// Minimum number of median-of-means groups.
    pub min_groups: usize,
}

impl Default for AnnealSettings {
    fn default() -> Self {
        AnnealSettings {
            glauber_constant: 20.0,
            thin_sweeps: 1.0,
            level_burn_in_sweeps: 1.0,
            safety: 2.0,
            min_samples_per_level: 4,
            max_samples_per_level: 100_000,
            exact_component_limit: 20,
            min_groups: 12,
        }
    }
}

/// Activities `l_1 < ... < l_M = lambda` with
/// `l_{k+1} = min(lambda, l_k (1 + 1/n) + (lambda + 1) / n^2)`, `l_0 = 0`.
pub fn annealing_schedule(n: usize, lambda: f64) -> Vec<f64> {
    if lambda <= 0.0 || n == 0 {
        return Vec::new();
    }
    let nf = n as f64;
    let floor = (lambda + 1.0) / (nf * nf);
    let mut out = Vec::new();
    let mut l = 0.0;
    while l < lambda {
        l = (l * (1.0 + 1.0 / nf) + floor).min(lambda);
        out.push(l);
    }
    out
}

/// Number of median-of-means groups giving failure probability `delta` when
/// each group fails with probability at most 1/4 (Hoeffding on the count of
/// failing groups).
fn group_count(delta: f64, min_groups: usize) -> usize {
    let g = ((1.0 / delta).ln() / 0.125).ceil() as usize;
    g.max(min_groups).max(1)
}

/// One pass through the schedule: the empirical probability of the empty set
/// at the first level and the first two sample moments of each ratio.
struct Pass {
    first: f64,
    ratios: Vec<(f64, f64)>,
}

fn run_pass(
    graph: &LabeledGraph,
    schedule: &[f64],
    samples: usize,
    settings: &AnnealSettings,
    eps_tv: f64,
    rng: &mut StreamRng,
) -> Result<Pass> {
    let n = graph.n();
    let thin = ((settings.thin_sweeps * n as f64).ceil() as u64).max(1);
    let level_burn = (settings.level_burn_in_sweeps * n as f64).ceil() as u64;
    let mut chain = GlauberChain::new(graph, schedule[0])?;
    chain.run(default_glauber_steps(n, eps_tv, settings.glauber_constant), rng);

    let mut empties = 0usize;
    for _ in 0..samples {
        chain.run(thin, rng);
        if chain.size() == 0 {
            empties += 1;
        }
    }
    let p_empty = empties as f64 / samples as f64;
    let mut ratios = Vec::with_capacity(schedule.len().saturating_sub(1));
    for w in schedule.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if w[0] != schedule[0] {
            chain.set_lambda(lo)?;
            chain.run(level_burn, rng);
        }
        let ln_r = (hi / lo).ln();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            chain.run(thin, rng);
            let x = (chain.size() as f64 * ln_r).exp();
            s1 += x;
            s2 += x * x;
        }
        ratios.push((s1 / samples as f64, s2 / samples as f64));
    }
    Ok(Pass {
        first: p_empty,
        ratios,
    })
}

fn validate(lambda: f64, eps: f64, fail_prob: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", "must be finite and nonnegative"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("eps", "must lie in (0, 1]"));
    }
    if !(fail_prob > 0.0 && fail_prob < 1.0) {
        return Err(invalid("fail_prob", "must lie in (0, 1)"));
    }
    Ok(())
}

/// [`estimate_partition_with`] under default settings.
pub fn estimate_partition<R: Rng + ?Sized>(
    graph: &LabeledGraph,
    lambda: f64,
    eps: f64,
    fail_prob: f64,
    rng: &mut R,
) -> Result<Estimate> {
    estimate_partition_with(graph, lambda, eps, fail_prob, &AnnealSettings::default(), rng)
}

/// Estimates the hard-core partition function `Z_G(lambda)` to relative
/// error `eps` with probability at least `1 - fail_prob`.
///
/// The estimate is flagged `above_tree_threshold` when `lambda` is not below
/// the tree threshold of the maximum degree; the value is still returned.
pub fn estimate_partition_with<R: Rng + ?Sized>(
    graph: &LabeledGraph,
    lambda: f64,
    eps: f64,
    fail_prob: f64,
    settings: &AnnealSettings,
    rng: &mut R,
) -> Result<Estimate> {
    validate(lambda, eps, fail_prob)?;
    let mut exact_log = 0.0;
    let mut large: Vec<usize> = Vec::new();
    if lambda > 0.0 {
        for comp in graph.components() {
            if comp.len() <= settings.exact_component_limit {
                exact_log += hardcore_partition(&graph.induced(&comp), lambda)?.ln();
            } else {
                large.extend(comp);
            }
        }
    }
    let flag = |e: Estimate| {
        if below_tree_threshold(graph, lambda) {
            e
        } else {
            e.flagged("above_tree_threshold")
        }
    };
    if large.is_empty() {
        let mut e = Estimate::exact(exact_log.exp());
        e.rel_error_target = eps;
        return Ok(flag(e));
    }
    large.sort_unstable();
    let h = graph.induced(&large);
    let n = h.n();
    let schedule = annealing_schedule(n, lambda);
    let eps_tv = (eps / 8.0).min(0.01);

    // Pilot pass to size the per-level sample counts.
    let pilot_samples = settings
        .min_samples_per_level
        .max((1000 / schedule.len()).max(1))
        .max(4);
    let mut pilot_rng = replicate_stream(rng.random(), u64::MAX);
    let pilot = run_pass(&h, &schedule, pilot_samples, settings, eps_tv, &mut pilot_rng)?;
    // Relative variance of the empty-set indicator, smoothed away from 0 and 1.
    let p = (pilot.first * pilot_samples as f64 + 0.5) / (pilot_samples as f64 + 1.0);
    let mut rel_var = (1.0 - p) / p;
    for (m1, m2) in &pilot.ratios {
        if *m1 > 0.0 {
            rel_var += (m2 / (m1 * m1) - 1.0).max(0.0);
        }
    }
    // Each group should miss by more than eps with probability <= 1/4:
    // by Chebyshev on the log scale, relative variance <= ln(1 + eps^2 / 4).
    let per_group_target = (1.0 + eps * eps / 4.0).ln();
    let samples = ((settings.safety * rel_var / per_group_target).ceil() as usize)
        .clamp(settings.min_samples_per_level, settings.max_samples_per_level);
    let groups = group_count(fail_prob, settings.min_groups);

    let master: u64 = rng.random();
    let logs: Vec<f64> = (0..groups as u64)
        .into_par_iter()
        .map(|g| {
            let mut r = replicate_stream(master, g);
            let pass = run_pass(&h, &schedule, samples, settings, eps_tv, &mut r)?;
            let p_empty = pass.first.max(0.5 / samples as f64);
            let mut log = -p_empty.ln();
            for (m1, _) in &pass.ratios {
                log += m1.ln();
            }
            Ok(log)
        })
        .collect::<Result<_>>()?;
    let mut sorted = logs.clone();
    sorted.sort_by(f64::total_cmp);
    let med = crate::stats::median(&sorted);
    let value = (exact_log + med).exp();
    let spread = crate::stats::variance(&logs).sqrt() / (groups as f64).sqrt();
    log::debug!(
        "anneal: n = {n}, levels = {}, samples/level = {samples}, groups = {groups}",
        schedule.len()
    );
    Ok(flag(Estimate {
        value,
        rel_error_target: eps,
        confidence: 1.0 - fail_prob,
        replicates: groups,
        std_error: Some(value * spread),
        tail_bound: None,
        valid: true,
        reason: None,
    }))
}

//! Concentration, approximation, sampling, connective-constant and spatial
//! mixing experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_sub_box, par_rows, ExperimentSpec, RowRole, TrialRow};
use crate::error::{Error, Result};
use crate::gpp::{
    approximate_partition, default_truncation, oracle_series, sample_configuration, void_probability_oracle,
    GppInstance, SamplerKind, SubBox,
};
use crate::graph::{sample_graph, LabeledGraph};
use crate::hardcore::{
    estimate_partition, hardcore_partition, ln_hardcore_partition_sweep, EXACT_HARDCORE_LIMIT,
    SWEEP_STATE_LIMIT,
};
use crate::rng::replicate_stream;
use crate::stats::{check_domination, dkw_epsilon, empirical_pmf, poisson_cdf, total_variation};
use crate::weitz::{
    connective_bound_check, distance_ordering, pwcc_estimate, ssm_decay_table, DEFAULT_NODE_BUDGET, SSM_LIMIT,
};

fn instance(spec: &ExperimentSpec) -> Result<&GppInstance> {
    spec.require_instance()
}

/// Running mean and variance; identical inputs give variance exactly 0.
fn welford(xs: impl IntoIterator<Item = f64>) -> (f64, f64, usize) {
    let (mut mean, mut m2, mut k) = (0.0, 0.0, 0usize);
    for x in xs {
        k += 1;
        let d = x - mean;
        mean += d / k as f64;
        m2 += d * (x - mean);
    }
    let var = if k > 1 { m2 / (k - 1) as f64 } else { 0.0 };
    (mean, var, k)
}

// ---------------------------------------------------------------------------
// Concentration

/// `ln Z_G(lambda)`: recursion for `n <= 30`, the sweep when its state space
/// stays small, otherwise the annealing estimator at accuracy `eps`.
fn ln_partition(
    graph: &LabeledGraph,
    lambda: f64,
    eps: f64,
    rng: &mut crate::rng::StreamRng,
) -> Result<(f64, bool)> {
    if lambda == 0.0 {
        return Ok((0.0, true));
    }
    if graph.n() <= EXACT_HARDCORE_LIMIT {
        return Ok((hardcore_partition(graph, lambda)?.ln(), true));
    }
    match ln_hardcore_partition_sweep(graph, lambda, SWEEP_STATE_LIMIT) {
        Ok(v) => Ok((v, true)),
        Err(Error::SizeLimit { .. }) => {
            let e = estimate_partition(graph, lambda, eps, 1.0 / 9.0, rng)?;
            Ok((e.value.ln(), false))
        }
        Err(e) => Err(e),
    }
}

fn grid(spec: &ExperimentSpec) -> Vec<usize> {
    if spec.n_grid.is_empty() {
        spec.n.into_iter().collect()
    } else {
        spec.n_grid.clone()
    }
}

pub(crate) fn concentration_rows(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    let inst = instance(spec)?;
    let ns = grid(spec);
    let trials = spec.trials as u64;
    par_rows(
        spec.seed,
        0..ns.len() as u64 * trials,
        RowRole::Trial,
        |row, rng| {
            let n = ns[(row.id / trials) as usize];
            let g = sample_graph(&inst.region, &inst.potential, n, rng)?;
            let (ln_z, exact) = ln_partition(&g, inst.activity(n), spec.eps / 10.0, rng)?;
            row.set("n", n as f64)
                .set("z", ln_z.exp())
                .set("ln_z", ln_z)
                .set("max_degree", g.max_degree() as f64)
                .set_flag("exact", exact);
            Ok(())
        },
    )
}

/// Concentration statistics at one vertex count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    /// Empirical `Pr[|Z - mean| >= eps mean]`.
    pub failure_rate: f64,
    /// `C = n lambda_n^2 + (n choose 2) lambda_n^4`.
    pub es_constant: f64,
    /// `(2 / (2 - C) - 1) / eps^2`; infinite when `C >= 2`.
    pub bound: f64,
    pub slack: f64,
    pub slacked_bound: f64,
    /// Set when `C >= 2`, in which case the bound says nothing.
    pub bound_void: bool,
    /// Every `Z` was computed exactly.
    pub exact: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub eps: f64,
    pub rows: Vec<ConcentrationRow>,
    pub passed: bool,
}

/// Slack applied to probabilistic bounds.
const SLACK: f64 = 2.0;

pub(crate) fn summarize_concentration(
    spec: &ExperimentSpec,
    rows: &[TrialRow],
) -> Result<ConcentrationSummary> {
    let inst = instance(spec)?;
    let eps = spec.eps;
    let mut out = Vec::new();
    for n in grid(spec) {
        let group: Vec<&TrialRow> = rows.iter().filter(|r| r.value("n") == Some(n as f64)).collect();
        let zs: Vec<f64> = group.iter().filter_map(|r| r.value("z")).collect();
        let (mean, variance, k) = welford(zs.iter().copied());
        let fails = zs.iter().filter(|z| (*z - mean).abs() >= eps * mean).count();
        let failure_rate = if k > 0 { fails as f64 / k as f64 } else { 0.0 };
        let lam = inst.activity(n);
        let nf = n as f64;
        let c = nf * lam * lam + nf * (nf - 1.0) / 2.0 * lam.powi(4);
        let bound_void = c >= 2.0;
        let bound = if bound_void {
            f64::INFINITY
        } else {
            (2.0 / (2.0 - c) - 1.0) / (eps * eps)
        };
        let slacked_bound = SLACK * bound;
        out.push(ConcentrationRow {
            n,
            trials: k,
            mean,
            variance,
            failure_rate,
            es_constant: c,
            bound,
            slack: SLACK,
            slacked_bound,
            bound_void,
            exact: group.iter().all(|r| r.flag("exact") == Some(true)),
            passed: bound_void || failure_rate <= slacked_bound,
        });
    }
    let passed = out.iter().all(|r| r.passed);
    Ok(ConcentrationSummary {
        eps,
        rows: out,
        passed,
    })
}

/// Runs a concentration experiment and returns its summary.
pub fn run_concentration(spec: &ExperimentSpec) -> Result<ConcentrationSummary> {
    summarize_concentration(spec, &concentration_rows(spec)?)
}

// ---------------------------------------------------------------------------
// Approximation and sampling

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingOptions {
    /// Draws for `sample_validate`.
    pub draws: usize,
    pub sampler: Option<SamplerKind>,
    /// Monte Carlo samples per order of the oracle series.
    pub oracle_samples: usize,
    /// Oracle truncation order; defaults to `max(e^3 lambda vol, ln(2 / eps))`.
    pub truncation: Option<usize>,
    /// Box for the void-probability check; defaults to the lower corner
    /// quarter of each side.
    pub sub_box: Option<SubBox>,
    pub tv_threshold: f64,
    /// Confidence parameter of the DKW band for Poisson domination.
    pub domination_alpha: f64,
    /// Standard errors allowed in the void-probability comparison.
    pub void_sigmas: f64,
    /// Fraction of `approximate_z` trials that must land within `eps`.
    pub required_fraction: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            draws: 100_000,
            sampler: None,
            oracle_samples: 200_000,
            truncation: None,
            sub_box: None,
            tv_threshold: 0.05,
            domination_alpha: 1e-3,
            void_sigmas: 3.0,
            required_fraction: 2.0 / 3.0,
        }
    }
}

impl SamplingOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(format!("sampling: {m}")));
        if self.draws == 0 || self.oracle_samples == 0 {
            return bad("draws and oracle_samples must be positive");
        }
        if !(self.domination_alpha > 0.0 && self.domination_alpha < 1.0) {
            return bad("domination_alpha must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.required_fraction) {
            return bad("required_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

fn truncation(spec: &ExperimentSpec, inst: &GppInstance) -> usize {
    spec.sampling
        .truncation
        .unwrap_or_else(|| default_truncation(inst, spec.eps))
}

pub(crate) fn approximate_rows(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    let inst = instance(spec)?;
    let m = truncation(spec, inst);
    let mut rows = par_rows(spec.seed, 0..1, RowRole::Oracle, |row, rng| {
        let s = oracle_series(inst, m, spec.sampling.oracle_samples, rng)?;
        row.set("value", s.xi())
            .set("std_error", s.xi_std_error())
            .set("tail_bound", s.tail_bound)
            .set("truncation", m as f64);
        Ok(())
    })?;
    // Trials one at a time: the estimator parallelises internally.
    for id in 1..=spec.trials as u64 {
        rows.extend(par_rows(spec.seed, id..id + 1, RowRole::Trial, |row, rng| {
            let a = approximate_partition(inst, spec.eps, rng, spec.n_mode())?;
            row.set("value", a.estimate.value)
                .set("n", a.n as f64)
                .set("max_degree", a.max_degree as f64)
                .set("degree_threshold", a.degree_threshold)
                .set_flag("valid", a.estimate.valid)
                .set_flag("degree_failure", a.estimate.reason.as_deref() == Some("degree"));
            Ok(())
        })?);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximateSummary {
    pub oracle: f64,
    pub oracle_std_error: f64,
    pub oracle_tail_bound: f64,
    pub trials: usize,
    /// Trials with `|estimate / oracle - 1| <= eps`.
    pub hits: usize,
    pub required: usize,
    pub degree_failures: usize,
    pub mean_relative_error: f64,
    pub passed: bool,
}

fn oracle_row(rows: &[TrialRow]) -> Result<&TrialRow> {
    rows.iter()
        .find(|r| r.role == RowRole::Oracle)
        .ok_or_else(|| Error::Spec("rows contain no oracle row".into()))
}

pub(crate) fn summarize_approximate(spec: &ExperimentSpec, rows: &[TrialRow]) -> Result<ApproximateSummary> {
    let o = oracle_row(rows)?;
    let oracle = o.value("value").unwrap_or(f64::NAN);
    let trials: Vec<&TrialRow> = rows.iter().filter(|r| r.role == RowRole::Trial).collect();
    let rel: Vec<f64> = trials
        .iter()
        .map(|r| (r.value("value").unwrap_or(0.0) / oracle - 1.0).abs())
        .collect();
    let hits = rel.iter().filter(|e| **e <= spec.eps).count();
    let required = (spec.sampling.required_fraction * trials.len() as f64).ceil() as usize;
    Ok(ApproximateSummary {
        oracle,
        oracle_std_error: o.value("std_error").unwrap_or(f64::NAN),
        oracle_tail_bound: o.value("tail_bound").unwrap_or(f64::NAN),
        trials: trials.len(),
        hits,
        required,
        degree_failures: trials
            .iter()
            .filter(|r| r.flag("degree_failure") == Some(true))
            .count(),
        mean_relative_error: crate::stats::mean(&rel),
        passed: hits >= required,
    })
}

/// Runs the end-to-end approximation experiment.
pub fn run_approximate_z(spec: &ExperimentSpec) -> Result<ApproximateSummary> {
    summarize_approximate(spec, &approximate_rows(spec)?)
}

pub(crate) fn sample_validate_rows(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    let inst = instance(spec)?;
    let m = truncation(spec, inst);
    let sub_box = spec
        .sampling
        .sub_box
        .clone()
        .unwrap_or_else(|| default_sub_box(inst));
    let samples = spec.sampling.oracle_samples;
    let mut rows = par_rows(spec.seed, 0..1, RowRole::Oracle, |row, rng| {
        let series = oracle_series(inst, m, samples, rng)?;
        let void = void_probability_oracle(inst, &sub_box, m, samples, rng)?;
        let xi = series.xi();
        let law = series.count_law();
        // TV error of the oracle law: per-order errors plus the omitted tail.
        let mut law_err = series.tail_bound / xi;
        for (k, p) in law.iter().enumerate() {
            row.set(&format!("p_{k}"), *p);
            if series.integrals[k] > 0.0 {
                law_err += p * series.std_errors[k] / series.integrals[k];
            }
        }
        row.set("xi", xi)
            .set("xi_std_error", series.xi_std_error())
            .set("tail_bound", series.tail_bound)
            .set("truncation", m as f64)
            .set("law_error", law_err)
            .set("void", void.value)
            .set("void_std_error", void.std_error.unwrap_or(0.0))
            .set("void_tail_bound", void.tail_bound.unwrap_or(0.0));
        Ok(())
    })?;
    let sampler = super::sampler_or_default(spec.sampling.sampler);
    rows.extend(par_rows(
        spec.seed,
        1..spec.sampling.draws as u64 + 1,
        RowRole::Trial,
        |row, rng| {
            let d = sample_configuration(inst, spec.eps, rng, spec.n_mode(), sampler)?;
            let void = !d
                .configuration
                .points
                .iter()
                .any(|p| sub_box.contains(p.coords()));
            row.set("count", d.configuration.len() as f64)
                .set_flag("void", void)
                .set_flag("degree_failure", d.degree_failure);
            Ok(())
        },
    )?);
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoidCheck {
    pub oracle: f64,
    pub empirical: f64,
    pub gap: f64,
    /// Oracle and sampling standard errors combined in quadrature.
    pub std_error: f64,
    pub tail_bound: f64,
    pub sigmas: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleValidateSummary {
    pub draws: usize,
    pub degree_failures: usize,
    pub count_tv: f64,
    pub tv_threshold: f64,
    /// Bound on the oracle's own error in total variation.
    pub oracle_law_error: f64,
    /// Set when the oracle error is too large to resolve the threshold.
    pub inconclusive: bool,
    pub void: VoidCheck,
    pub domination_band: f64,
    pub domination_worst_excess: f64,
    pub domination_holds: bool,
    pub mean_count: f64,
    pub passed: bool,
}

pub(crate) fn summarize_sample_validate(
    spec: &ExperimentSpec,
    rows: &[TrialRow],
) -> Result<SampleValidateSummary> {
    let inst = instance(spec)?;
    let o = oracle_row(rows)?;
    let m = o.value("truncation").unwrap_or(0.0) as usize;
    let law: Vec<f64> = (0..=m)
        .map(|k| o.value(&format!("p_{k}")).unwrap_or(0.0))
        .collect();
    let draws: Vec<&TrialRow> = rows.iter().filter(|r| r.role == RowRole::Trial).collect();
    let counts: Vec<usize> = draws
        .iter()
        .map(|r| r.value("count").unwrap_or(0.0) as usize)
        .collect();
    let count_tv = total_variation(&empirical_pmf(&counts), &law);
    let n_draws = draws.len();
    let oracle_law_error = o.value("law_error").unwrap_or(f64::INFINITY);
    let tv_threshold = spec.sampling.tv_threshold;

    let p_void = o.value("void").unwrap_or(f64::NAN);
    let empirical =
        draws.iter().filter(|r| r.flag("void") == Some(true)).count() as f64 / n_draws.max(1) as f64;
    let sampling_var = p_void * (1.0 - p_void) / n_draws.max(1) as f64;
    let std_error = (o.value("void_std_error").unwrap_or(0.0).powi(2) + sampling_var).sqrt();
    let tail_bound = o.value("void_tail_bound").unwrap_or(0.0);
    let gap = (empirical - p_void).abs();
    let sigmas = spec.sampling.void_sigmas;
    let void = VoidCheck {
        oracle: p_void,
        empirical,
        gap,
        std_error,
        tail_bound,
        sigmas,
        holds: gap <= sigmas * std_error + tail_bound,
    };

    let band = dkw_epsilon(n_draws.max(1), spec.sampling.domination_alpha);
    let lv = inst.lambda_volume();
    let dom = check_domination(&counts, |k| poisson_cdf(lv, k), band);
    let inconclusive = oracle_law_error > tv_threshold / 2.0;
    let passed = !inconclusive && count_tv <= tv_threshold && void.holds && dom.holds;
    Ok(SampleValidateSummary {
        draws: n_draws,
        degree_failures: draws
            .iter()
            .filter(|r| r.flag("degree_failure") == Some(true))
            .count(),
        count_tv,
        tv_threshold,
        oracle_law_error,
        inconclusive,
        void,
        domination_band: band,
        domination_worst_excess: dom.worst_excess,
        domination_holds: dom.holds,
        mean_count: counts.iter().sum::<usize>() as f64 / n_draws.max(1) as f64,
        passed,
    })
}

/// Runs the sampler validation experiment.
pub fn run_sample_validate(spec: &ExperimentSpec) -> Result<SampleValidateSummary> {
    summarize_sample_validate(spec, &sample_validate_rows(spec)?)
}

// ---------------------------------------------------------------------------
// Connective constant

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectiveOptions {
    /// Graphs used only to fit the constant `c`. A fresh graph exceeds the
    /// largest of `N` exchangeable calibration ratios with probability
    /// `1 / (N + 1)`, so `N` must sit well above `1 / (1 - required_fraction)`.
    pub calibration_graphs: usize,
    /// Depth `m = ceil(a ln n)`.
    pub a: f64,
    /// `c` is this factor times the largest calibration ratio.
    pub slack: f64,
    /// The target growth rate is `e^growth_eps n Delta_phi / vol`.
    pub growth_eps: f64,
    pub k_max: usize,
    pub pwcc_samples: usize,
    pub node_budget: u64,
    /// Fraction of test graphs that must pass.
    pub required_fraction: f64,
}

impl Default for ConnectiveOptions {
    fn default() -> Self {
        ConnectiveOptions {
            calibration_graphs: 100,
            a: 4.0,
            slack: 2.0,
            growth_eps: 0.2,
            k_max: 4,
            pwcc_samples: 200_000,
            node_budget: DEFAULT_NODE_BUDGET,
            required_fraction: 0.95,
        }
    }
}

impl ConnectiveOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(format!("connective: {m}")));
        if self.calibration_graphs == 0 {
            return bad("calibration_graphs must be positive");
        }
        if !(self.a > 0.0 && self.slack >= 1.0 && self.growth_eps >= 0.0) {
            return bad("need a > 0, slack >= 1 and growth_eps >= 0");
        }
        if self.k_max == 0 || self.pwcc_samples == 0 {
            return bad("k_max and pwcc_samples must be positive");
        }
        Ok(())
    }
}

fn depth(n: usize, a: f64) -> usize {
    (a * (n as f64).ln()).ceil().max(1.0) as usize
}

pub(crate) fn connective_rows(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    let inst = instance(spec)?;
    let opts = &spec.connective;
    let n = spec.n.expect("validated");
    let m = depth(n, opts.a);
    let d = inst.region.dim();
    let mut rows = par_rows(spec.seed, 0..1, RowRole::Oracle, |row, rng| {
        let e = pwcc_estimate(&inst.potential, d, opts.k_max, opts.pwcc_samples, rng)?;
        let target = opts.growth_eps.exp() * n as f64 * e.value / inst.volume();
        row.set("pwcc", e.value)
            .set("pwcc_std_error", e.std_error.unwrap_or(0.0))
            .set("target", target)
            .set("delta", target.max(1.0))
            .set("m", m as f64);
        Ok(())
    })?;
    let delta = rows[0].value("delta").expect("set above");
    let cal = opts.calibration_graphs as u64;
    let total = cal + spec.trials as u64;
    // Graphs run one after another; roots are checked in parallel.
    for id in 1..=total {
        let role = if id <= cal {
            RowRole::Calibration
        } else {
            RowRole::Trial
        };
        rows.extend(par_rows(spec.seed, id..id + 1, role, |row, rng| {
            let g = sample_graph(&inst.region, &inst.potential, n, rng)?;
            let ord = distance_ordering(&g);
            let check = connective_bound_check(&g, &ord, m, delta, f64::INFINITY, opts.a, opts.node_budget)?;
            let max_total = check.roots.iter().map(|r| r.total).max().unwrap_or(0);
            row.set("max_ratio", check.max_ratio)
                .set("max_total", max_total as f64)
                .set("max_degree", g.max_degree() as f64)
                .set_flag("truncated", check.roots.iter().any(|r| r.truncated));
            Ok(())
        })?);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectiveSummary {
    pub pwcc: f64,
    pub pwcc_std_error: f64,
    /// `e^growth_eps n Delta_phi / vol` before clamping.
    pub target: f64,
    /// Growth rate used in the check: the target clamped below at 1.
    pub delta: f64,
    pub m: usize,
    /// Largest ratio `sum_k L_k / delta^m` on the calibration graphs.
    pub calibration_max_ratio: f64,
    pub slack: f64,
    /// Fitted `c` = slack times the calibration maximum.
    pub c: f64,
    pub graphs: usize,
    pub passing: usize,
    pub pass_fraction: f64,
    pub required_fraction: f64,
    pub passed: bool,
}

pub(crate) fn summarize_connective(spec: &ExperimentSpec, rows: &[TrialRow]) -> Result<ConnectiveSummary> {
    let o = oracle_row(rows)?;
    let opts = &spec.connective;
    let cal_max = rows
        .iter()
        .filter(|r| r.role == RowRole::Calibration)
        .filter_map(|r| r.value("max_ratio"))
        .fold(0.0, f64::max);
    let c = opts.slack * cal_max.max(f64::MIN_POSITIVE);
    let tests: Vec<&TrialRow> = rows.iter().filter(|r| r.role == RowRole::Trial).collect();
    let passing = tests
        .iter()
        .filter(|r| r.flag("truncated") != Some(true) && r.value("max_ratio").unwrap_or(f64::INFINITY) <= c)
        .count();
    let pass_fraction = passing as f64 / tests.len().max(1) as f64;
    Ok(ConnectiveSummary {
        pwcc: o.value("pwcc").unwrap_or(f64::NAN),
        pwcc_std_error: o.value("pwcc_std_error").unwrap_or(f64::NAN),
        target: o.value("target").unwrap_or(f64::NAN),
        delta: o.value("delta").unwrap_or(f64::NAN),
        m: o.value("m").unwrap_or(0.0) as usize,
        calibration_max_ratio: cal_max,
        slack: opts.slack,
        c,
        graphs: tests.len(),
        passing,
        pass_fraction,
        required_fraction: opts.required_fraction,
        passed: pass_fraction >= opts.required_fraction,
    })
}

/// Runs the connective-constant experiment.
pub fn run_connective(spec: &ExperimentSpec) -> Result<ConnectiveSummary> {
    summarize_connective(spec, &connective_rows(spec)?)
}

// ---------------------------------------------------------------------------
// Strong spatial mixing

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsmOptions {
    /// Path graphs `P_n`, rooted at an endpoint.
    pub path_lengths: Vec<usize>,
    /// Additional graphs sampled from the instance with `n` vertices, rooted
    /// at vertex 0.
    pub sampled_graphs: usize,
    pub lambda: f64,
    pub s_max: usize,
    /// Random pinnings per sphere when the sphere is too large to enumerate.
    pub pinning_budget: usize,
}

impl Default for SsmOptions {
    fn default() -> Self {
        SsmOptions {
            path_lengths: vec![20],
            sampled_graphs: 0,
            lambda: 0.5,
            s_max: 6,
            pinning_budget: 256,
        }
    }
}

impl SsmOptions {
    pub(crate) fn validate(&self, has_instance: bool, n: Option<usize>) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(format!("ssm: {m}")));
        if self.path_lengths.iter().any(|p| !(2..=SSM_LIMIT).contains(p)) {
            return bad("path lengths must lie in 2..=22");
        }
        if self.s_max == 0 || !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("need s_max >= 1 and a finite nonnegative lambda");
        }
        if self.sampled_graphs > 0 && !(has_instance && n.is_some_and(|n| (2..=SSM_LIMIT).contains(&n))) {
            return bad("sampled graphs need an instance and 2 <= n <= 22");
        }
        Ok(())
    }
}

pub(crate) fn ssm_rows(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    let opts = &spec.ssm;
    let stride = opts.s_max as u64 + 1;
    let paths = opts.path_lengths.len();
    let graphs = paths + opts.sampled_graphs;
    let per_graph: Vec<Vec<TrialRow>> = (0..graphs)
        .into_par_iter()
        .map(|gi| {
            let mut rng = replicate_stream(spec.seed, gi as u64 * stride);
            let (g, label) = if gi < paths {
                (
                    LabeledGraph::path(opts.path_lengths[gi]),
                    format!("path_{}", opts.path_lengths[gi]),
                )
            } else {
                let inst = instance(spec)?;
                let n = spec.n.expect("validated");
                (
                    sample_graph(&inst.region, &inst.potential, n, &mut rng)?,
                    format!("sampled_{gi}"),
                )
            };
            let dist = g.bfs_distances(0);
            let reach = dist.iter().flatten().copied().max().unwrap_or(0).min(opts.s_max);
            if reach == 0 {
                return Ok(Vec::new());
            }
            let table = ssm_decay_table(&g, opts.lambda, 0, 1..=reach, opts.pinning_budget, &mut rng)?;
            Ok(table
                .iter()
                .map(|t| {
                    let mut row = TrialRow::new(spec.seed, gi as u64 * stride + t.s as u64, RowRole::Trial);
                    row.set("graph", gi as f64)
                        .set("n", g.n() as f64)
                        .set("s", t.s as f64)
                        .set("gap", t.gap)
                        .set("sphere_size", t.sphere_size as f64)
                        .set("pinnings", t.pinnings as f64)
                        .set_flag("exhaustive", t.exhaustive)
                        .set_flag(&label, true);
                    row
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_graph.into_iter().flatten().collect())
}

/// Gap sequence of one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsmGraph {
    pub label: String,
    pub n: usize,
    /// `(s, gap)` pairs in increasing `s`.
    pub gaps: Vec<(usize, f64)>,
    pub strictly_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsmSummary {
    pub graphs: Vec<SsmGraph>,
    pub passed: bool,
}

pub(crate) fn summarize_ssm(rows: &[TrialRow]) -> SsmSummary {
    let mut graphs: Vec<SsmGraph> = Vec::new();
    let mut current: Option<usize> = None;
    for r in rows {
        let gi = r.value("graph").unwrap_or(-1.0) as usize;
        if current != Some(gi) {
            current = Some(gi);
            graphs.push(SsmGraph {
                label: r
                    .flags
                    .keys()
                    .find(|k| *k != "exhaustive")
                    .cloned()
                    .unwrap_or_default(),
                n: r.value("n").unwrap_or(0.0) as usize,
                gaps: Vec::new(),
                strictly_decreasing: true,
            });
        }
        let g = graphs.last_mut().expect("pushed above");
        g.gaps.push((
            r.value("s").unwrap_or(0.0) as usize,
            r.value("gap").unwrap_or(f64::NAN),
        ));
    }
    for g in &mut graphs {
        g.strictly_decreasing = g.gaps.windows(2).all(|w| w[1].1 < w[0].1);
    }
    let passed = !graphs.is_empty() && graphs.iter().all(|g| g.strictly_decreasing);
    SsmSummary { graphs, passed }
}

/// Runs the spatial mixing sweep.
pub fn run_ssm(spec: &ExperimentSpec) -> Result<SsmSummary> {
    Ok(summarize_ssm(&ssm_rows(spec)?))
}

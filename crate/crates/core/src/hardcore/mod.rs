//! Two-state antiferromagnetic spin systems with `beta_0 = 1`.
//!
//! A configuration `sigma: [n] -> {0, 1}` has weight
//! `lambda^|sigma| * beta^m(sigma)` where `m` counts edges with both ends
//! occupied. `beta = 0` is the hard-core model, whose support is the family
//! of independent sets.

mod anneal;
mod exact;
mod glauber;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::LabeledGraph;

pub use anneal::{annealing_schedule, estimate_partition, estimate_partition_with, AnnealSettings};
pub use exact::{
    configuration_probabilities, exact_sample, hardcore_partition, independence_polynomial,
    ln_hardcore_partition_sweep, occupation_ratio_exact, partition_exact, partition_sweep, sweep_order,
    Pinning, EXACT_HARDCORE_LIMIT, EXACT_SWEEP_LIMIT, OCCUPATION_RATIO_LIMIT, SWEEP_STATE_LIMIT,
};
pub use glauber::{default_glauber_steps, glauber_sample, GlauberChain};

/// Spin assignment over the vertices of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinConfiguration(Vec<bool>);

impl SpinConfiguration {
    pub fn zeros(n: usize) -> Self {
        SpinConfiguration(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        SpinConfiguration(bits)
    }

    /// Configuration whose occupied set is the bit mask `mask` (n <= 64).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        SpinConfiguration((0..n).map(|v| mask >> v & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: usize) -> bool {
        self.0[v]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Number of occupied vertices.
    pub fn size(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b).map(|(v, _)| v)
    }

    pub fn to_mask(&self) -> u64 {
        assert!(self.0.len() <= 64);
        self.occupied().fold(0u64, |m, v| m | 1 << v)
    }

    /// Whether the occupied set is independent in `graph`.
    pub fn is_independent(&self, graph: &LabeledGraph) -> bool {
        self.0.len() == graph.n()
            && self
                .occupied()
                .all(|v| graph.neighbors(v).iter().all(|&u| !self.0[u as usize]))
    }
}

/// Activity and edge interaction of a spin system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemParams {
    pub lambda: f64,
    #[serde(default)]
    pub beta: f64,
}

impl SpinSystemParams {
    pub fn new(lambda: f64, beta: f64) -> Result<Self> {
        let p = SpinSystemParams { lambda, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn hardcore(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid("beta", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A Monte Carlo or exact value together with its accuracy contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub rel_error_target: f64,
    pub confidence: f64,
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    /// Deterministic truncation bound, where one applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Estimate {
    /// An exactly known value.
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            rel_error_target: 0.0,
            confidence: 1.0,
            replicates: 1,
            std_error: Some(0.0),
            tail_bound: None,
            valid: true,
            reason: None,
        }
    }

    pub fn flagged(mut self, reason: impl Into<String>) -> Self {
        self.valid = false;
        self.reason = Some(reason.into());
        self
    }

    /// Total error half-width: `k` standard errors plus the tail bound.
    pub fn error_band(&self, k: f64) -> f64 {
        k * self.std_error.unwrap_or(0.0) + self.tail_bound.unwrap_or(0.0)
    }
}

/// Tree threshold `(D - 1)^(D - 1) / (D - 2)^D` for maximum degree `D >= 3`.
pub fn critical_fugacity(max_degree: usize) -> Result<f64> {
    if max_degree < 3 {
        return Err(Error::InvalidParameter {
            name: "max_degree",
            reason: format!("tree threshold needs degree >= 3, got {max_degree}"),
        });
    }
    let d = max_degree as f64;
    if max_degree <= 40 {
        // Exact in floating point for small degrees.
        let num = (d - 1.0).powi(max_degree as i32 - 1);
        let den = (d - 2.0).powi(max_degree as i32);
        Ok(num / den)
    } else {
        Ok(((d - 1.0) * (d - 1.0).ln() - d * (d - 2.0).ln()).exp())
    }
}

/// Whether `lambda` lies strictly below the tree threshold of `graph`'s
/// maximum degree (always true for maximum degree at most 2).
pub fn below_tree_threshold(graph: &LabeledGraph, lambda: f64) -> bool {
    match critical_fugacity(graph.max_degree()) {
        Ok(lc) => lambda < lc,
        Err(_) => true,
    }
}

//! Repulsive Gibbs point processes on boxes.
//!
//! The grand-canonical partition function is
//! `Xi = sum_k lambda^k / k! * I_k` with `I_k = int_{V^k} exp(-H)`, where
//! `H` is the pairwise Hamiltonian of a configuration.

mod oracle;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Point, Region};
use crate::potential::PotentialSpec;

pub use oracle::{
    default_truncation, expected_hardcore_partition, oracle_partition, oracle_series,
    void_probability_oracle, OracleSeries, SubBox,
};
pub use pipeline::{
    approximate_partition, approximate_partition_with, degree_threshold, sample_configuration, Approximation,
    Draw,
};

/// A point process instance `(V, lambda, phi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GppInstance {
    pub region: Region,
    pub potential: PotentialSpec,
    pub lambda: f64,
}

impl GppInstance {
    pub fn new(region: Region, potential: PotentialSpec, lambda: f64) -> Result<Self> {
        let inst = GppInstance {
            region,
            potential,
            lambda,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid("lambda", "fugacity must be finite and nonnegative"));
        }
        self.potential.validate()
    }

    pub fn volume(&self) -> f64 {
        self.region.volume()
    }

    /// `lambda * vol(V)`, the expected number of points without interaction.
    pub fn lambda_volume(&self) -> f64 {
        self.lambda * self.volume()
    }

    /// Hard-core activity `lambda * vol(V) / n` used on graphs with `n`
    /// vertices.
    pub fn activity(&self, n: usize) -> f64 {
        self.lambda_volume() / n as f64
    }

    /// Free-space temperedness constant in the region's dimension.
    pub fn temperedness(&self) -> Result<f64> {
        self.potential.temperedness_constant(self.region.dim())
    }

    /// Whether `lambda < e / C_phi`, the regime covered by the approximation
    /// and sampling guarantees.
    pub fn in_regime(&self) -> Result<bool> {
        Ok(self.lambda * self.temperedness()? < std::f64::consts::E)
    }
}

/// A finite multiset of points, kept as a list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointConfiguration {
    pub points: Vec<Point>,
}

impl PointConfiguration {
    pub fn new(points: Vec<Point>) -> Self {
        PointConfiguration { points }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// How the number of graph vertices is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NMode {
    /// The worst-case bound from the analysis.
    Paper,
    /// A user-supplied vertex count.
    Practical(usize),
}

/// Which hard-core sampler [`sample_configuration`] uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Glauber,
    /// Exact sampling by conditioning; small graphs only.
    Exact,
}

/// Resolved vertex count together with the bound it may deviate from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NChoice {
    pub n: usize,
    /// The concentration bound `4 eps^-2 delta^-1 max{e^6 (lambda vol)^2, ln(4/eps)^2}`.
    pub paper_n: f64,
    /// Set when `n` is a user override rather than the bound.
    pub practical: bool,
}

/// Pairwise Hamiltonian: the sum of `phi` over all unordered index pairs.
///
/// Repeated points contribute `m (m - 1) / 2 * phi(x, x)`, as required for
/// multisets. Infinite interactions propagate.
pub fn hamiltonian(instance: &GppInstance, config: &PointConfiguration) -> f64 {
    let pts = &config.points;
    let mut h = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = instance
                .region
                .distance_unchecked(pts[i].coords(), pts[j].coords());
            h += instance.potential.phi_at(d);
            if h == f64::INFINITY {
                return h;
            }
        }
    }
    h
}

/// Vertex count for which the hard-core partition function of the random
/// graph is an `eps`-approximation of `Xi` with probability `1 - delta`.
pub fn concentration_n(lambda_volume: f64, eps: f64, delta: f64) -> f64 {
    let a = 6f64.exp() * lambda_volume * lambda_volume;
    let b = (4.0 / eps).ln().powi(2);
    4.0 / (eps * eps * delta) * a.max(b)
}

/// Chooses the number of vertices.
pub fn choose_n(instance: &GppInstance, eps: f64, delta: f64, mode: NMode) -> Result<NChoice> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("eps", "must lie in (0, 1]"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", "must lie in (0, 1]"));
    }
    let paper_n = concentration_n(instance.lambda_volume(), eps, delta);
    match mode {
        NMode::Paper => Ok(NChoice {
            n: paper_n.ceil() as usize,
            paper_n,
            practical: false,
        }),
        NMode::Practical(n) => {
            if n < 1 {
                return Err(invalid("n", "practical vertex count must be at least 1"));
            }
            Ok(NChoice {
                n,
                paper_n,
                practical: true,
            })
        }
    }
}

//! Partition function approximation and approximate sampling through the
//! random hard-core model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GppInstance, NMode, PointConfiguration, SamplerKind};
use crate::error::{invalid, Error, Result};
use crate::graph::{sample_graph, LabeledGraph};
use crate::hardcore::{
    default_glauber_steps, estimate_partition_with, exact_sample, glauber_sample, AnnealSettings, Estimate,
    OCCUPATION_RATIO_LIMIT,
};

/// Largest vertex count the pipeline will build a graph for.
const MAX_VERTICES: usize = 2_000_000;

/// Maximum degree at or above which the algorithms give up:
/// `e * n / (lambda vol)`.
pub fn degree_threshold(instance: &GppInstance, n: usize) -> f64 {
    std::f64::consts::E * n as f64 / instance.lambda_volume()
}

/// `max{1/(e - x), x/(e - x)^2}` with `x = lambda C_phi`, or infinity outside
/// the regime.
fn regime_factor(instance: &GppInstance) -> Result<f64> {
    let x = instance.lambda * instance.temperedness()?;
    let gap = std::f64::consts::E - x;
    if gap <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 / gap).max(x / (gap * gap)))
}

/// Vertex count used by the approximation algorithm: the maximum of the
/// concentration requirement at `eps / 3` and the degree-check requirement.
pub(crate) fn approximation_n(instance: &GppInstance, eps: f64) -> Result<f64> {
    let lv = instance.lambda_volume();
    let a = 324.0 / (eps * eps) * (6f64.exp() * lv * lv).max((4.0 / eps).ln().powi(2));
    let z = 24.0 * regime_factor(instance)? * lv;
    let b = z * z.ln().powi(2);
    Ok(a.max(b))
}

/// Vertex count used by the sampler for accuracy `eps`.
pub(crate) fn sampling_n(instance: &GppInstance, eps: f64) -> Result<f64> {
    let lv = instance.lambda_volume();
    let a = 8.0 * 18f64.powi(2) * 12.0 / eps.powi(3) * (6f64.exp() * lv * lv).max((4.0 * 18.0 / eps).ln());
    let l = (4.0 * std::f64::consts::E / eps).ln();
    let f = regime_factor(instance)?;
    let b = 6.0 * l * f * lv * (3.0 * l * f * lv).ln().powi(2);
    Ok(a.max(b))
}

fn resolve_n(bound: f64, mode: NMode) -> Result<usize> {
    match mode {
        NMode::Practical(n) if n >= 1 => Ok(n),
        NMode::Practical(_) => Err(invalid("n", "practical vertex count must be at least 1")),
        NMode::Paper => {
            if !bound.is_finite() || bound > MAX_VERTICES as f64 {
                return Err(Error::SizeLimit {
                    n: if bound.is_finite() {
                        bound.ceil() as usize
                    } else {
                        usize::MAX
                    },
                    limit: MAX_VERTICES,
                });
            }
            Ok(bound.ceil().max(1.0) as usize)
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("eps", "must lie in (0, 1]"));
    }
    Ok(())
}

/// Result of [`approximate_partition`] with the diagnostics of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    pub estimate: Estimate,
    pub n: usize,
    /// The analysis' vertex count for this `eps`, for comparison with `n`.
    pub paper_n: f64,
    pub practical: bool,
    pub max_degree: usize,
    pub degree_threshold: f64,
}

/// [`approximate_partition_with`] under default annealing settings.
pub fn approximate_partition<R: Rng + ?Sized>(
    instance: &GppInstance,
    eps: f64,
    rng: &mut R,
    mode: NMode,
) -> Result<Approximation> {
    approximate_partition_with(instance, eps, rng, mode, &AnnealSettings::default())
}

/// Randomized `eps`-approximation of `Xi`: draw `G ~ D(n, V, phi)`, reject
/// graphs whose maximum degree reaches [`degree_threshold`], and estimate
/// `Z_G(lambda vol / n)` to accuracy `eps / 3` with failure probability 1/9.
///
/// A rejected graph yields an estimate flagged `degree`.
pub fn approximate_partition_with<R: Rng + ?Sized>(
    instance: &GppInstance,
    eps: f64,
    rng: &mut R,
    mode: NMode,
    settings: &AnnealSettings,
) -> Result<Approximation> {
    check_eps(eps)?;
    instance.validate()?;
    let paper_n = approximation_n(instance, eps)?;
    if instance.lambda == 0.0 {
        let mut estimate = Estimate::exact(1.0);
        estimate.rel_error_target = eps;
        return Ok(Approximation {
            estimate,
            n: 0,
            paper_n,
            practical: matches!(mode, NMode::Practical(_)),
            max_degree: 0,
            degree_threshold: f64::INFINITY,
        });
    }
    let n = resolve_n(paper_n, mode)?;
    let graph = sample_graph(&instance.region, &instance.potential, n, rng)?;
    let threshold = degree_threshold(instance, n);
    let max_degree = graph.max_degree();
    let estimate = if max_degree as f64 >= threshold {
        Estimate {
            value: 0.0,
            rel_error_target: eps,
            confidence: 0.0,
            replicates: 0,
            std_error: None,
            tail_bound: None,
            valid: false,
            reason: Some("degree".into()),
        }
    } else {
        estimate_partition_with(&graph, instance.activity(n), eps / 3.0, 1.0 / 9.0, settings, rng)?
    };
    Ok(Approximation {
        estimate,
        n,
        paper_n,
        practical: matches!(mode, NMode::Practical(_)),
        max_degree,
        degree_threshold: threshold,
    })
}

/// One output of [`sample_configuration`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub configuration: PointConfiguration,
    /// Set when the degree check failed and the empty configuration was
    /// returned by rule.
    pub degree_failure: bool,
}

/// Approximate sample from the point process.
///
/// Draws `n` uniform points and the random graph on them; if the maximum
/// degree reaches [`degree_threshold`] the empty configuration is returned,
/// otherwise a hard-core sample at activity `lambda vol / n` selects the
/// points. The Glauber sampler targets total variation `eps / 4`; the exact
/// sampler conditions vertex by vertex and needs `n <= 26`.
pub fn sample_configuration<R: Rng + ?Sized>(
    instance: &GppInstance,
    eps: f64,
    rng: &mut R,
    mode: NMode,
    sampler: SamplerKind,
) -> Result<Draw> {
    check_eps(eps)?;
    if instance.lambda == 0.0 {
        return Ok(Draw {
            configuration: PointConfiguration::empty(),
            degree_failure: false,
        });
    }
    let n = resolve_n(sampling_n(instance, eps)?, mode)?;
    if sampler == SamplerKind::Exact && n > OCCUPATION_RATIO_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: OCCUPATION_RATIO_LIMIT,
        });
    }
    let graph = sample_graph(&instance.region, &instance.potential, n, rng)?;
    if graph.max_degree() as f64 >= degree_threshold(instance, n) {
        return Ok(Draw {
            configuration: PointConfiguration::empty(),
            degree_failure: true,
        });
    }
    let lambda_n = instance.activity(n);
    let sigma = match sampler {
        SamplerKind::Glauber => {
            let steps = default_glauber_steps(n, eps / 4.0, 20.0);
            glauber_sample(&graph, lambda_n, steps, rng, None)?
        }
        SamplerKind::Exact => exact_sample(&graph, lambda_n, rng)?,
    };
    Ok(Draw {
        configuration: select_points(&graph, sigma.occupied()),
        degree_failure: false,
    })
}

fn select_points(graph: &LabeledGraph, occupied: impl Iterator<Item = usize>) -> PointConfiguration {
    PointConfiguration::new(occupied.map(|i| graph.points()[i].clone()).collect())
}

/// Uncapped worst-case vertex counts for approximation and sampling.
#[cfg(test)]
pub(crate) fn worst_case_counts(instance: &GppInstance, eps: f64) -> (f64, f64) {
    (
        approximation_n(instance, eps).unwrap(),
        sampling_n(instance, eps).unwrap(),
    )
}

//! Single-site heat-bath (Glauber) dynamics for the hard-core model.

use rand::Rng;

use super::SpinConfiguration;
use crate::error::{invalid, Result};
use crate::graph::LabeledGraph;

/// Step count `ceil(c * n * ln(n / eps_tv))`, at least `n` so every vertex
/// is likely touched.
pub fn default_glauber_steps(n: usize, eps_tv: f64, c: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    let nf = n as f64;
    let raw = (c * nf * (nf / eps_tv).ln()).ceil();
    if raw.is_finite() && raw > nf {
        raw as u64
    } else {
        n as u64
    }
}

/// `p` rounded to a multiple of `2^-32`, scaled to `[0, 2^32]`.
fn occupy_threshold(p: f64) -> u64 {
    (p * 4_294_967_296.0).round() as u64
}

/// A uniform vertex in `0..n` and an independent uniform `u32`, both taken
/// from one 64-bit draw. The vertex uses Lemire's multiply-and-reject on the
/// high half; the rare rejections fall back to a fresh draw.
#[inline]
fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, u64) {
    let x = rng.next_u64();
    let m = (x >> 32) * n as u64;
    let low = m as u32;
    if low < n as u32 && low < (n as u32).wrapping_neg() % n as u32 {
        return (rng.random_range(0..n), x & 0xffff_ffff);
    }
    ((m >> 32) as usize, x & 0xffff_ffff)
}

/// A running Glauber chain. Each vertex keeps the number of occupied
/// neighbours so that a step costs O(1) plus the degree of a vertex whose
/// spin changes.
#[derive(Clone, Debug)]
pub struct GlauberChain<'g> {
    graph: &'g LabeledGraph,
    /// Occupation probability of an unblocked vertex, see [`occupy_threshold`].
    threshold: u64,
    state: Vec<bool>,
    blocked: Vec<u32>,
    size: usize,
}

impl<'g> GlauberChain<'g> {
    /// Starts from the empty configuration.
    pub fn new(graph: &'g LabeledGraph, lambda: f64) -> Result<Self> {
        Self::from_configuration(graph, lambda, &SpinConfiguration::zeros(graph.n()))
    }

    pub fn from_configuration(
        graph: &'g LabeledGraph,
        lambda: f64,
        initial: &SpinConfiguration,
    ) -> Result<Self> {
        if initial.len() != graph.n() {
            return Err(invalid(
                "initial",
                format!(
                    "configuration has {} spins for {} vertices",
                    initial.len(),
                    graph.n()
                ),
            ));
        }
        if !initial.is_independent(graph) {
            return Err(invalid(
                "initial",
                "occupied vertices must form an independent set",
            ));
        }
        let mut chain = GlauberChain {
            graph,
            threshold: 0,
            state: vec![false; graph.n()],
            blocked: vec![0; graph.n()],
            size: 0,
        };
        chain.set_lambda(lambda)?;
        for v in initial.occupied() {
            chain.occupy(v);
        }
        Ok(chain)
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        self.threshold = occupy_threshold(lambda / (1.0 + lambda));
        Ok(())
    }

    fn occupy(&mut self, v: usize) {
        self.state[v] = true;
        self.size += 1;
        for &u in self.graph.neighbors(v) {
            self.blocked[u as usize] += 1;
        }
    }

    fn vacate(&mut self, v: usize) {
        self.state[v] = false;
        self.size -= 1;
        for &u in self.graph.neighbors(v) {
            self.blocked[u as usize] -= 1;
        }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.state.len();
        if n == 0 {
            return;
        }
        let (v, u) = draw(n, rng);
        let want = (self.blocked[v] == 0) & (u < self.threshold);
        if want != self.state[v] {
            if want {
                self.occupy(v);
            } else {
                self.vacate(v);
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, steps: u64, rng: &mut R) {
        for _ in 0..steps {
            self.step(rng);
        }
    }

    /// Number of occupied vertices.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn state(&self) -> &[bool] {
        &self.state
    }

    pub fn configuration(&self) -> SpinConfiguration {
        SpinConfiguration::from_bits(self.state.clone())
    }
}

/// Heat-bath chain on graphs with at most 64 vertices, state kept as a mask.
fn run_masked<R: Rng + ?Sized>(adj: &[u64], p: f64, mut state: u64, steps: u64, rng: &mut R) -> u64 {
    let n = adj.len();
    let threshold = occupy_threshold(p);
    for _ in 0..steps {
        let (v, u) = draw(n, rng);
        let bit = 1u64 << v;
        if (adj[v] & state == 0) & (u < threshold) {
            state |= bit;
        } else {
            state &= !bit;
        }
    }
    state
}

/// Runs `steps` Glauber updates from `initial` (the empty set when `None`)
/// and returns the final configuration.
pub fn glauber_sample<R: Rng + ?Sized>(
    graph: &LabeledGraph,
    lambda: f64,
    steps: u64,
    rng: &mut R,
    initial: Option<&SpinConfiguration>,
) -> Result<SpinConfiguration> {
    let n = graph.n();
    let zeros;
    let initial = match initial {
        Some(c) => c,
        None => {
            zeros = SpinConfiguration::zeros(n);
            &zeros
        }
    };
    if (1..=64).contains(&n) {
        if initial.len() != n || !initial.is_independent(graph) {
            // Delegate to the checked constructor for the error message.
            GlauberChain::from_configuration(graph, lambda, initial)?;
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        let adj = graph.adjacency_masks();
        let out = run_masked(&adj, lambda / (1.0 + lambda), initial.to_mask(), steps, rng);
        return Ok(SpinConfiguration::from_mask(n, out));
    }
    let mut chain = GlauberChain::from_configuration(graph, lambda, initial)?;
    chain.run(steps, rng);
    Ok(chain.configuration())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardcore::configuration_probabilities;
    use crate::rng::stream;

    #[test]
    fn zero_activity_empties_the_graph() {
        let g = LabeledGraph::path(4);
        let init = SpinConfiguration::from_bits(vec![true, false, true, false]);
        let mut rng = stream(1);
        let s = glauber_sample(&g, 0.0, 2000, &mut rng, Some(&init)).unwrap();
        assert_eq!(s.size(), 0);
    }

    #[test]
    fn rejects_infeasible_start() {
        let g = LabeledGraph::path(2);
        let init = SpinConfiguration::from_bits(vec![true, true]);
        assert!(glauber_sample(&g, 1.0, 10, &mut stream(1), Some(&init)).is_err());
    }

    #[test]
    fn single_vertex_occupation_frequency() {
        let g = LabeledGraph::empty(1);
        let lambda = 0.7;
        let mut chain = GlauberChain::new(&g, lambda).unwrap();
        let mut rng = stream(2);
        let draws = 200_000;
        let mut hits = 0usize;
        for _ in 0..draws {
            chain.step(&mut rng);
            hits += chain.size();
        }
        let p = lambda / (1.0 + lambda);
        // Each step resamples the only vertex, so the draws are independent.
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((hits as f64 / draws as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn chain_and_masked_paths_agree_in_law() {
        let mut rng = stream(3);
        let g = LabeledGraph::gnp(7, 0.4, &mut rng);
        let probs = configuration_probabilities(&g, 1.0).unwrap();
        let steps = default_glauber_steps(7, 0.01, 20.0);
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..50_000 {
            let mut chain = GlauberChain::new(&g, 1.0).unwrap();
            chain.run(steps, &mut rng);
            assert!(chain.configuration().is_independent(&g));
            counts[chain.configuration().to_mask() as usize] += 1;
        }
        let r = crate::stats::chi_square_gof(&counts, &probs, 5.0);
        assert!(r.p_value > 0.001, "{r:?}");
    }

    #[test]
    fn draws_are_uniform() {
        let mut rng = crate::rng::stream(12);
        let n = 7;
        let mut counts = vec![0u64; n];
        let mut below = 0u64;
        let draws = 700_000;
        let t = occupy_threshold(0.3);
        for _ in 0..draws {
            let (v, u) = draw(n, &mut rng);
            counts[v] += 1;
            below += (u < t) as u64;
        }
        let r = crate::stats::chi_square_gof(&counts, &vec![1.0 / n as f64; n], 5.0);
        assert!(r.p_value > 0.001, "{r:?}");
        let frac = below as f64 / draws as f64;
        assert!(
            (frac - 0.3).abs() < 4.0 * (0.21f64 / draws as f64).sqrt(),
            "{frac}"
        );
    }

    #[test]
    fn threshold_extremes() {
        assert_eq!(occupy_threshold(0.0), 0);
        assert_eq!(occupy_threshold(1.0), 1 << 32);
        assert!((u32::MAX as u64) < occupy_threshold(1.0));
    }

    #[test]
    fn step_defaults() {
        assert_eq!(default_glauber_steps(0, 0.1, 20.0), 0);
        assert_eq!(default_glauber_steps(1, 1.0, 20.0), 1);
        assert_eq!(
            default_glauber_steps(10, 0.1, 20.0),
            (200.0 * 100f64.ln()).ceil() as u64
        );
    }
}

//! Exact partition functions, conditional ratios and exact sampling for
//! small graphs.

use std::collections::HashMap;

use rand::Rng;

use super::{SpinConfiguration, SpinSystemParams};
use crate::error::{invalid, Error, Result};
use crate::graph::LabeledGraph;

/// Largest graph for the hard-core vertex-elimination recursion.
pub const EXACT_HARDCORE_LIMIT: usize = 30;
/// Largest graph for the full configuration sweep (`beta > 0`).
pub const EXACT_SWEEP_LIMIT: usize = 20;
/// Largest graph for exact conditional occupation ratios and exact sampling.
pub const OCCUPATION_RATIO_LIMIT: usize = 26;

/// Hard-core partition function on masked graphs by branching on a
/// highest-degree vertex: `Z(G) = Z(G - v) + lambda Z(G - N[v])`, with
/// connected components split off and results memoised by vertex set.
pub(crate) struct MaskSolver<'a> {
    adj: &'a [u64],
    lambda: f64,
    memo: HashMap<u64, f64>,
}

impl<'a> MaskSolver<'a> {
    pub(crate) fn new(adj: &'a [u64], lambda: f64) -> Self {
        MaskSolver {
            adj,
            lambda,
            memo: HashMap::new(),
        }
    }

    fn component_of_lowest(&self, alive: u64) -> u64 {
        let start = alive & alive.wrapping_neg();
        let mut comp = start;
        let mut frontier = start;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.adj[v] & alive & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        comp
    }

    pub(crate) fn z(&mut self, alive: u64) -> f64 {
        match alive.count_ones() {
            0 => return 1.0,
            1 => return 1.0 + self.lambda,
            _ => {}
        }
        if let Some(&z) = self.memo.get(&alive) {
            return z;
        }
        let comp = self.component_of_lowest(alive);
        let z = if comp != alive {
            self.z(comp) * self.z(alive & !comp)
        } else {
            let mut best = (0usize, 0u32);
            let mut rest = alive;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let d = (self.adj[v] & alive).count_ones();
                if d > best.1 {
                    best = (v, d);
                }
            }
            let v = best.0;
            let bit = 1u64 << v;
            self.z(alive & !bit) + self.lambda * self.z(alive & !(bit | self.adj[v]))
        };
        self.memo.insert(alive, z);
        z
    }
}

fn all_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Hard-core partition function `sum over independent sets of lambda^|I|`
/// for any graph whose connected components have at most 64 vertices.
pub fn hardcore_partition(graph: &LabeledGraph, lambda: f64) -> Result<f64> {
    let mut log_z = 0.0;
    for comp in graph.components() {
        if comp.len() > 64 {
            return Err(Error::SizeLimit {
                n: comp.len(),
                limit: 64,
            });
        }
        let sub = graph.induced(&comp);
        let adj = sub.adjacency_masks();
        log_z += MaskSolver::new(&adj, lambda).z(all_mask(comp.len())).ln();
    }
    Ok(log_z.exp())
}

/// Default cap on the number of frontier states in
/// [`ln_hardcore_partition_sweep`].
pub const SWEEP_STATE_LIMIT: usize = 1 << 20;

/// Vertex order used by [`ln_hardcore_partition_sweep`]: by first coordinate
/// for embedded graphs, by ID otherwise.
pub fn sweep_order(graph: &LabeledGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.n()).collect();
    if graph.has_points() {
        let pts = graph.points();
        order.sort_by(|&a, &b| pts[a].coords()[0].total_cmp(&pts[b].coords()[0]).then(a.cmp(&b)));
    }
    order
}

/// `ln Z_G(lambda)` by a sweep over [`sweep_order`].
///
/// The state is the set of occupied vertices among the processed vertices
/// that still have unprocessed neighbours. The cost is linear in `n` times
/// the number of states, which stays small for graphs of low pathwidth such
/// as geometric graphs in one dimension. Fails with [`Error::SizeLimit`]
/// when more than `max_states` states are live.
pub fn ln_hardcore_partition_sweep(graph: &LabeledGraph, lambda: f64, max_states: usize) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", "must be finite and nonnegative"));
    }
    let n = graph.n();
    let order = sweep_order(graph);
    let mut pos = vec![0usize; n];
    for (t, &v) in order.iter().enumerate() {
        pos[v] = t;
    }
    // Position after which a vertex can be forgotten.
    let last_use: Vec<usize> = (0..n)
        .map(|v| {
            graph
                .neighbors(v)
                .iter()
                .map(|&u| pos[u as usize])
                .fold(pos[v], usize::max)
        })
        .collect();
    let mut states: HashMap<Vec<u32>, f64> = HashMap::from([(Vec::new(), 1.0)]);
    let mut log_scale = 0.0;
    for (t, &v) in order.iter().enumerate() {
        let nb = graph.neighbors(v);
        let keep_v = last_use[v] > t;
        let mut next: HashMap<Vec<u32>, f64> = HashMap::with_capacity(states.len() * 2);
        for (occ, w) in states {
            let free = occ.iter().all(|u| nb.binary_search(u).is_err());
            let drop = |x: &u32| last_use[*x as usize] > t;
            if free && lambda > 0.0 {
                let mut with: Vec<u32> = occ.iter().copied().filter(drop).collect();
                if keep_v {
                    let at = with.binary_search(&(v as u32)).unwrap_err();
                    with.insert(at, v as u32);
                }
                *next.entry(with).or_insert(0.0) += lambda * w;
            }
            let without: Vec<u32> = occ.into_iter().filter(drop).collect();
            *next.entry(without).or_insert(0.0) += w;
        }
        if next.len() > max_states {
            return Err(Error::SizeLimit {
                n: next.len(),
                limit: max_states,
            });
        }
        let top = next.values().copied().fold(0.0, f64::max);
        if top > 1e100 {
            next.values_mut().for_each(|w| *w /= top);
            log_scale += top.ln();
        }
        states = next;
    }
    Ok(log_scale + states.values().sum::<f64>().ln())
}

/// Exact `Z_G(lambda, beta)`.
///
/// `beta = 0` uses the elimination recursion (n <= 30); `beta > 0` sums over
/// all `2^n` configurations (n <= 20).
pub fn partition_exact(graph: &LabeledGraph, params: SpinSystemParams) -> Result<f64> {
    params.validate()?;
    let n = graph.n();
    if params.beta == 0.0 {
        if n > EXACT_HARDCORE_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: EXACT_HARDCORE_LIMIT,
            });
        }
        let adj = graph.adjacency_masks();
        Ok(MaskSolver::new(&adj, params.lambda).z(all_mask(n)))
    } else {
        partition_sweep(graph, params)
    }
}

/// Brute-force `Z_G(lambda, beta)` over all configurations (n <= 20), valid
/// for every `beta` in `[0, 1]` with `0^0 = 1`.
pub fn partition_sweep(graph: &LabeledGraph, params: SpinSystemParams) -> Result<f64> {
    params.validate()?;
    let n = graph.n();
    if n > EXACT_SWEEP_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: EXACT_SWEEP_LIMIT,
        });
    }
    let adj = graph.adjacency_masks();
    let lambda_pow: Vec<f64> = (0..=n).map(|k| params.lambda.powi(k as i32)).collect();
    let max_edges = graph.edge_count();
    let beta_pow: Vec<f64> = (0..=max_edges).map(|m| params.beta.powi(m as i32)).collect();
    let mut z = 0.0;
    for mask in 0..(1u64 << n) {
        let mut twice_m = 0u32;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            twice_m += (adj[v] & mask).count_ones();
        }
        z += lambda_pow[mask.count_ones() as usize] * beta_pow[(twice_m / 2) as usize];
    }
    Ok(z)
}

/// Hard-core probability of every configuration, indexed by occupied-set
/// bit mask (n <= 20). Non-independent sets have probability zero.
pub fn configuration_probabilities(graph: &LabeledGraph, lambda: f64) -> Result<Vec<f64>> {
    let n = graph.n();
    if n > EXACT_SWEEP_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: EXACT_SWEEP_LIMIT,
        });
    }
    let adj = graph.adjacency_masks();
    let mut w: Vec<f64> = (0..(1u64 << n))
        .map(|mask| {
            let mut rest = mask;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if adj[v] & mask != 0 {
                    return 0.0;
                }
            }
            lambda.powi(mask.count_ones() as i32)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// Number of independent sets of each size, `i_0, i_1, ...` (n <= 30).
pub fn independence_polynomial(graph: &LabeledGraph) -> Result<Vec<f64>> {
    let n = graph.n();
    if n > EXACT_HARDCORE_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: EXACT_HARDCORE_LIMIT,
        });
    }
    fn rec(adj: &[u64], alive: u64, memo: &mut HashMap<u64, Vec<f64>>) -> Vec<f64> {
        if alive == 0 {
            return vec![1.0];
        }
        if let Some(p) = memo.get(&alive) {
            return p.clone();
        }
        let v = (0..adj.len())
            .filter(|v| alive >> v & 1 == 1)
            .max_by_key(|&v| (adj[v] & alive).count_ones())
            .unwrap();
        let bit = 1u64 << v;
        let without = rec(adj, alive & !bit, memo);
        let with = rec(adj, alive & !(bit | adj[v]), memo);
        let mut out = vec![0.0; without.len().max(with.len() + 1)];
        for (k, c) in without.iter().enumerate() {
            out[k] += c;
        }
        for (k, c) in with.iter().enumerate() {
            out[k + 1] += c;
        }
        memo.insert(alive, out.clone());
        out
    }
    let adj = graph.adjacency_masks();
    Ok(rec(&adj, all_mask(n), &mut HashMap::new()))
}

/// Partial assignment of spins to vertices.
pub type Pinning = [(usize, bool)];

/// Vertices still free after applying `pinning`, plus whether the pinned
/// occupied set is independent.
fn apply_pinning(graph: &LabeledGraph, adj: &[u64], pinning: &Pinning) -> Result<u64> {
    let n = graph.n();
    let mut pinned = 0u64;
    let mut ones = 0u64;
    for &(u, s) in pinning {
        if u >= n {
            return Err(Error::VertexOutOfRange { vertex: u, n });
        }
        if pinned >> u & 1 == 1 {
            let prev = ones >> u & 1 == 1;
            if prev != s {
                return Err(Error::InfeasiblePinning(format!("vertex {u} pinned twice")));
            }
        }
        pinned |= 1 << u;
        if s {
            ones |= 1 << u;
        }
    }
    let mut rest = ones;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if adj[u] & ones != 0 {
            return Err(Error::InfeasiblePinning(format!(
                "occupied pinned vertex {u} has an occupied pinned neighbour"
            )));
        }
    }
    let mut blocked = 0u64;
    let mut rest = ones;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        blocked |= adj[u];
    }
    Ok(all_mask(n) & !pinned & !blocked)
}

/// `Pr[sigma(v) = 1 | pin] / Pr[sigma(v) = 0 | pin]` under the hard-core
/// model, computed exactly (n <= 26).
///
/// Pinning a vertex to 0 deletes it; pinning it to 1 deletes its closed
/// neighbourhood.
pub fn occupation_ratio_exact(graph: &LabeledGraph, lambda: f64, v: usize, pinning: &Pinning) -> Result<f64> {
    let n = graph.n();
    if n > OCCUPATION_RATIO_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: OCCUPATION_RATIO_LIMIT,
        });
    }
    if v >= n {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    if pinning.iter().any(|&(u, _)| u == v) {
        return Err(Error::VertexPinned(v));
    }
    let adj = graph.adjacency_masks();
    let free = apply_pinning(graph, &adj, pinning)?;
    let bit = 1u64 << v;
    if free & bit == 0 {
        // v is adjacent to an occupied pinned vertex.
        return Ok(0.0);
    }
    let mut solver = MaskSolver::new(&adj, lambda);
    let occupied = solver.z(free & !(bit | adj[v]));
    let empty = solver.z(free & !bit);
    Ok(lambda * occupied / empty)
}

/// Exact hard-core sample by sequential conditioning (n <= 26).
pub fn exact_sample<R: Rng + ?Sized>(
    graph: &LabeledGraph,
    lambda: f64,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    let n = graph.n();
    if n > OCCUPATION_RATIO_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: OCCUPATION_RATIO_LIMIT,
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", "must be finite and nonnegative"));
    }
    let adj = graph.adjacency_masks();
    let mut solver = MaskSolver::new(&adj, lambda);
    let mut free = all_mask(n);
    let mut ones = 0u64;
    for v in 0..n {
        let bit = 1u64 << v;
        if free & bit == 0 {
            continue;
        }
        let with = lambda * solver.z(free & !(bit | adj[v]));
        let without = solver.z(free & !bit);
        if rng.random::<f64>() * (with + without) < with {
            ones |= bit;
            free &= !(bit | adj[v]);
        } else {
            free &= !bit;
        }
    }
    Ok(SpinConfiguration::from_mask(n, ones))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn hc(l: f64) -> SpinSystemParams {
        SpinSystemParams::hardcore(l).unwrap()
    }

    #[test]
    fn small_partition_functions() {
        let k2 = LabeledGraph::complete(2);
        assert_eq!(partition_exact(&k2, hc(1.0)).unwrap(), 3.0);
        assert_eq!(
            partition_exact(&k2, SpinSystemParams::new(1.0, 1.0).unwrap()).unwrap(),
            4.0
        );
        let l = 0.7;
        let e3 = partition_exact(&LabeledGraph::empty(3), hc(l)).unwrap();
        assert!((e3 - (1.0f64 + l).powi(3)).abs() < 1e-12);
        assert_eq!(partition_exact(&LabeledGraph::complete(3), hc(1.0)).unwrap(), 4.0);
    }

    #[test]
    fn size_limits() {
        assert!(matches!(
            partition_exact(&LabeledGraph::empty(31), hc(1.0)),
            Err(Error::SizeLimit { .. })
        ));
        assert!(partition_exact(&LabeledGraph::empty(30), hc(1.0)).is_ok());
        assert!(matches!(
            partition_exact(&LabeledGraph::empty(21), SpinSystemParams::new(1.0, 0.5).unwrap()),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn recursion_agrees_with_sweep() {
        let mut rng = stream(1);
        for _ in 0..200 {
            let n = rng.random_range(1..=14);
            let p = rng.random::<f64>();
            let g = LabeledGraph::gnp(n, p, &mut rng);
            for l in [0.1, 1.0, 3.0] {
                let a = partition_exact(&g, hc(l)).unwrap();
                let b = partition_sweep(&g, hc(l)).unwrap();
                assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
                let c = hardcore_partition(&g, l).unwrap();
                assert!((c - b).abs() <= 1e-12 * b);
                let poly = independence_polynomial(&g).unwrap();
                let d: f64 = poly.iter().enumerate().map(|(k, c)| c * l.powi(k as i32)).sum();
                assert!((d - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn beta_one_counts_all_configurations() {
        let g = LabeledGraph::complete(5);
        let z = partition_exact(&g, SpinSystemParams::new(0.5, 1.0).unwrap()).unwrap();
        assert!((z - 1.5f64.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn occupation_ratio_examples() {
        let iso = LabeledGraph::empty(1);
        assert_eq!(occupation_ratio_exact(&iso, 0.5, 0, &[]).unwrap(), 0.5);
        let k2 = LabeledGraph::complete(2);
        assert_eq!(occupation_ratio_exact(&k2, 1.0, 0, &[(1, true)]).unwrap(), 0.0);
        // P3 centre: occupied weight 1, empty weight (1 + lambda)^2 = 4.
        let p3 = LabeledGraph::path(3);
        assert_eq!(occupation_ratio_exact(&p3, 1.0, 1, &[]).unwrap(), 0.25);
    }

    #[test]
    fn occupation_ratio_matches_conditioned_enumeration() {
        let mut rng = stream(2);
        for _ in 0..100 {
            let n = rng.random_range(2..=10);
            let g = LabeledGraph::gnp(n, 0.3, &mut rng);
            let l = 0.8;
            let probs = configuration_probabilities(&g, l).unwrap();
            let v = 0;
            let pinned_vertex = n - 1;
            for s in [false, true] {
                let pin = [(pinned_vertex, s)];
                let mut num = 0.0;
                let mut den = 0.0;
                for (mask, p) in probs.iter().enumerate() {
                    if (mask >> pinned_vertex & 1 == 1) != s {
                        continue;
                    }
                    if mask & 1 == 1 {
                        num += p;
                    } else {
                        den += p;
                    }
                }
                match occupation_ratio_exact(&g, l, v, &pin) {
                    Ok(r) => assert!((r - num / den).abs() < 1e-12 * (1.0 + r)),
                    Err(Error::InfeasiblePinning(_)) => unreachable!(),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn occupation_ratio_errors() {
        let k3 = LabeledGraph::complete(3);
        assert!(matches!(
            occupation_ratio_exact(&k3, 1.0, 0, &[(1, true), (2, true)]),
            Err(Error::InfeasiblePinning(_))
        ));
        assert!(matches!(
            occupation_ratio_exact(&k3, 1.0, 0, &[(0, false)]),
            Err(Error::VertexPinned(0))
        ));
        assert!(matches!(
            occupation_ratio_exact(&LabeledGraph::empty(27), 1.0, 0, &[]),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn exact_sampler_matches_distribution() {
        let mut rng = stream(3);
        let g = LabeledGraph::cycle(5);
        let probs = configuration_probabilities(&g, 1.3).unwrap();
        let draws = 100_000;
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..draws {
            let s = exact_sample(&g, 1.3, &mut rng).unwrap();
            assert!(s.is_independent(&g));
            counts[s.to_mask() as usize] += 1;
        }
        let r = crate::stats::chi_square_gof(&counts, &probs, 5.0);
        assert!(r.p_value > 0.001, "{r:?}");
    }

    #[test]
    fn sweep_matches_recursion() {
        let mut rng = stream(21);
        for _ in 0..200 {
            let n = rng.random_range(1..=16);
            let g = LabeledGraph::gnp(n, rng.random_range(0.05..0.6), &mut rng);
            let lambda = rng.random_range(0.0..3.0);
            let a = ln_hardcore_partition_sweep(&g, lambda, SWEEP_STATE_LIMIT).unwrap();
            let b = hardcore_partition(&g, lambda).unwrap().ln();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn sweep_on_long_interval_graphs() {
        // Hard rods on a line: Z obeys Z_i = Z_{i-1} + lambda Z_{p(i)} with
        // p(i) the last point at distance at least the rod length.
        let region = crate::geometry::Region::new(vec![40.0], crate::geometry::Boundary::Open).unwrap();
        let pot = crate::potential::PotentialSpec::HardSphere { r: 0.1 };
        let g = crate::graph::sample_graph(&region, &pot, 2000, &mut stream(22)).unwrap();
        let mut xs: Vec<f64> = g.points().iter().map(|p| p.coords()[0]).collect();
        xs.sort_by(f64::total_cmp);
        let lambda: f64 = 0.3;
        let mut ln_z = vec![0.0f64; xs.len() + 1];
        for i in 1..=xs.len() {
            let p = xs[..i - 1].partition_point(|&x| x <= xs[i - 1] - 0.2);
            let (a, b) = (ln_z[i - 1], lambda.ln() + ln_z[p]);
            let m = a.max(b);
            ln_z[i] = m + ((a - m).exp() + (b - m).exp()).ln();
        }
        let got = ln_hardcore_partition_sweep(&g, lambda, SWEEP_STATE_LIMIT).unwrap();
        assert!(
            (got / ln_z[xs.len()] - 1.0).abs() < 1e-10,
            "{got} vs {}",
            ln_z[xs.len()]
        );
        assert!(ln_hardcore_partition_sweep(&g, lambda, 3).is_err());
    }
}

//! Self-avoiding-walk and Weitz trees, connective constants and spatial
//! mixing.
//!
//! The Weitz tree of a root `r` under a neighbourhood ordering keeps the
//! simple paths `v_0 = r, v_1, ..., v_k` such that whenever `v_i` is adjacent
//! to an earlier `v_j` (`j <= i - 2`), `v_i` ranks strictly after `v_{j+1}`
//! among the neighbours of `v_j`. Layer `k` of the tree counts such paths of
//! length `k`.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Boundary, Region};
use crate::graph::LabeledGraph;
use crate::hardcore::{occupation_ratio_exact, Estimate};
use crate::potential::PotentialSpec;

/// Default cap on the number of enumerated paths per root.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Largest graph accepted by [`ssm_decay_table`].
pub const SSM_LIMIT: usize = 22;

/// For every vertex, a bijection from its neighbours to `1..=deg(v)`.
///
/// `ranks[v][i]` is the rank of the `i`-th entry of the (sorted) neighbour
/// list of `v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodOrdering {
    ranks: Vec<Vec<u32>>,
}

impl NeighborhoodOrdering {
    /// Ranks from a per-vertex list of neighbours in increasing order.
    pub fn from_orders(graph: &LabeledGraph, orders: &[Vec<u32>]) -> Result<Self> {
        if orders.len() != graph.n() {
            return Err(invalid("orders", "one order per vertex is required"));
        }
        let mut ranks = Vec::with_capacity(graph.n());
        for (v, order) in orders.iter().enumerate() {
            let nb = graph.neighbors(v);
            let mut r = vec![0u32; nb.len()];
            if order.len() != nb.len() {
                return Err(invalid(
                    "orders",
                    format!("order of vertex {v} has the wrong length"),
                ));
            }
            for (pos, u) in order.iter().enumerate() {
                let i = nb
                    .binary_search(u)
                    .map_err(|_| invalid("orders", format!("{u} is not a neighbour of {v}")))?;
                if r[i] != 0 {
                    return Err(invalid("orders", format!("{u} repeated in the order of {v}")));
                }
                r[i] = pos as u32 + 1;
            }
            ranks.push(r);
        }
        Ok(NeighborhoodOrdering { ranks })
    }

    /// Rank of neighbour `u` of `v` (1-based).
    pub fn rank(&self, graph: &LabeledGraph, v: usize, u: usize) -> Option<u32> {
        let i = graph.neighbors(v).binary_search(&(u as u32)).ok()?;
        Some(self.ranks[v][i])
    }

    /// Whether every per-vertex map is a bijection onto `1..=deg(v)`.
    pub fn is_bijection(&self, graph: &LabeledGraph) -> bool {
        self.ranks.len() == graph.n()
            && self.ranks.iter().enumerate().all(|(v, r)| {
                let mut seen = vec![false; r.len()];
                r.len() == graph.degree(v)
                    && r.iter().all(|&k| {
                        let k = k as usize;
                        k >= 1 && k <= seen.len() && !std::mem::replace(&mut seen[k - 1], true)
                    })
            })
    }
}

/// Neighbours ranked by vertex ID.
pub fn id_ordering(graph: &LabeledGraph) -> NeighborhoodOrdering {
    NeighborhoodOrdering {
        ranks: (0..graph.n())
            .map(|v| (1..=graph.degree(v) as u32).collect())
            .collect(),
    }
}

/// Neighbours ranked by increasing distance, ties broken by vertex ID.
///
/// Uses the region stored in the graph metadata (Euclidean distance when
/// absent). Graphs without points fall back to [`id_ordering`].
pub fn distance_ordering(graph: &LabeledGraph) -> NeighborhoodOrdering {
    if !graph.has_points() {
        return id_ordering(graph);
    }
    let region = graph.meta().region.clone();
    let pts = graph.points();
    let dist = |a: usize, b: usize| -> f64 {
        match &region {
            Some(r) => r.distance_unchecked(pts[a].coords(), pts[b].coords()),
            None => pts[a]
                .coords()
                .iter()
                .zip(pts[b].coords())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    };
    let orders: Vec<Vec<u32>> = (0..graph.n())
        .map(|v| {
            let mut nb = graph.neighbors(v).to_vec();
            nb.sort_by(|&a, &b| {
                dist(v, a as usize)
                    .total_cmp(&dist(v, b as usize))
                    .then(a.cmp(&b))
            });
            nb
        })
        .collect();
    NeighborhoodOrdering::from_orders(graph, &orders).expect("orders are permutations")
}

/// Layer sizes `L_0..L_m` of a path tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeitzLayerProfile {
    pub root: usize,
    pub counts: Vec<u64>,
    /// Set when enumeration stopped at the node budget; counts are then
    /// lower bounds.
    pub truncated: bool,
}

impl WeitzLayerProfile {
    /// `sum_{k <= m} L_k`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

struct Frame {
    v: usize,
    next: usize,
    /// Rank of `v` among its parent's neighbours (0 for the root).
    rank_in_parent: u32,
}

fn enumerate_paths(
    graph: &LabeledGraph,
    root: usize,
    ordering: Option<&NeighborhoodOrdering>,
    max_depth: usize,
    node_budget: u64,
) -> Result<WeitzLayerProfile> {
    let n = graph.n();
    if root >= n {
        return Err(Error::VertexOutOfRange { vertex: root, n });
    }
    let mut counts = vec![0u64; max_depth + 1];
    counts[0] = 1;
    let mut visited = vec![false; n];
    // Number of path vertices forbidding each vertex as a later extension.
    let mut forbidden = vec![0u32; n];
    visited[root] = true;
    let mut stack = vec![Frame {
        v: root,
        next: 0,
        rank_in_parent: 0,
    }];
    let mut nodes = 1u64;
    let mut truncated = false;

    // When `child` (rank `rank` at `parent`) follows `parent`, neighbours of
    // `parent` ranked at most `rank` may no longer appear later on the path.
    let mark = |forbidden: &mut [u32], parent: usize, rank: u32, delta: i32| {
        if let Some(ord) = ordering {
            for (i, &u) in graph.neighbors(parent).iter().enumerate() {
                if ord.ranks[parent][i] <= rank {
                    let f = &mut forbidden[u as usize];
                    *f = (*f as i32 + delta) as u32;
                }
            }
        }
    };

    'outer: while !stack.is_empty() {
        let depth = stack.len() - 1;
        let top = &mut stack[depth];
        let v = top.v;
        if depth < max_depth {
            let nb = graph.neighbors(v);
            while top.next < nb.len() {
                let i = top.next;
                top.next += 1;
                let u = nb[i] as usize;
                if visited[u] || forbidden[u] > 0 {
                    continue;
                }
                if nodes >= node_budget {
                    truncated = true;
                    break 'outer;
                }
                nodes += 1;
                counts[depth + 1] += 1;
                let rank = ordering.map_or(0, |o| o.ranks[v][i]);
                mark(&mut forbidden, v, rank, 1);
                visited[u] = true;
                stack.push(Frame {
                    v: u,
                    next: 0,
                    rank_in_parent: rank,
                });
                continue 'outer;
            }
        }
        let done = stack.pop().unwrap();
        visited[done.v] = false;
        if let Some(parent) = stack.last() {
            mark(&mut forbidden, parent.v, done.rank_in_parent, -1);
        }
    }
    Ok(WeitzLayerProfile {
        root,
        counts,
        truncated,
    })
}

/// Layer counts of the Weitz tree of `root` up to depth `max_depth`.
pub fn weitz_layer_counts(
    graph: &LabeledGraph,
    root: usize,
    ordering: &NeighborhoodOrdering,
    max_depth: usize,
    node_budget: u64,
) -> Result<WeitzLayerProfile> {
    enumerate_paths(graph, root, Some(ordering), max_depth, node_budget)
}

/// Layer counts of the self-avoiding-walk tree of `root`.
pub fn saw_layer_counts(
    graph: &LabeledGraph,
    root: usize,
    max_depth: usize,
    node_budget: u64,
) -> Result<WeitzLayerProfile> {
    enumerate_paths(graph, root, None, max_depth, node_budget)
}

/// Outcome of [`connective_bound_check`] for one root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootCheck {
    pub root: usize,
    pub total: u64,
    pub truncated: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectiveCheck {
    pub m: usize,
    /// `c * Delta^m`.
    pub bound: f64,
    pub roots: Vec<RootCheck>,
    /// Largest `sum_k L_k / Delta^m` over roots.
    pub max_ratio: f64,
    pub passed: bool,
}

impl ConnectiveCheck {
    pub fn failing_roots(&self) -> Vec<usize> {
        self.roots.iter().filter(|r| !r.pass).map(|r| r.root).collect()
    }
}

/// Checks `sum_{k <= m} L_k(r) <= c * delta^m` for every root `r`.
///
/// Requires `m >= ceil(a ln n)`. A root whose enumeration hit the node
/// budget without exceeding the bound is reported as failing, since its
/// count is only a lower bound.
pub fn connective_bound_check(
    graph: &LabeledGraph,
    ordering: &NeighborhoodOrdering,
    m: usize,
    delta: f64,
    c: f64,
    a: f64,
    node_budget: u64,
) -> Result<ConnectiveCheck> {
    let n = graph.n();
    let need = (a * (n.max(1) as f64).ln()).ceil();
    if (m as f64) < need {
        return Err(invalid("m", format!("must be at least ceil(a ln n) = {need}")));
    }
    let scale = delta.powi(m as i32);
    let bound = c * scale;
    let roots: Vec<RootCheck> = (0..n)
        .into_par_iter()
        .map(|r| {
            let p = weitz_layer_counts(graph, r, ordering, m, node_budget)?;
            let total = p.total();
            Ok(RootCheck {
                root: r,
                total,
                truncated: p.truncated,
                pass: !p.truncated && total as f64 <= bound,
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio = roots.iter().map(|r| r.total as f64 / scale).fold(0.0, f64::max);
    let passed = roots.iter().all(|r| r.pass);
    Ok(ConnectiveCheck {
        m,
        bound,
        roots,
        max_ratio,
        passed,
    })
}

/// Monte Carlo estimate of `Delta_phi^(k)` in free space.
///
/// With `x_0` at the origin, each `x_j` is drawn from the density
/// `(1 - exp(-phi(x_{j-1}, .))) / C_phi` around `x_{j-1}`, and the path is
/// weighted by `exp(-sum_{i <= j-2} 1{d(x_i, x_j) < d(x_i, x_{i+1})} phi(x_i, x_j))`.
/// The estimate is `C_phi^k` times the mean weight.
pub fn pwcc_k<R: Rng + ?Sized>(
    potential: &PotentialSpec,
    d: usize,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if k == 0 {
        return Ok(Estimate::exact(1.0));
    }
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let c = potential.temperedness_constant(d)?;
    if c == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let sampler = potential.interaction_sampler(d)?;
    let space = Region::new(vec![1.0; d], Boundary::Open)?;
    let mut path: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        path.clear();
        path.push(vec![0.0; d]);
        let mut log_w = 0.0;
        for j in 1..=k {
            let step = sampler.sample(rng);
            let x: Vec<f64> = path[j - 1].iter().zip(&step).map(|(a, b)| a + b).collect();
            for i in 0..j.saturating_sub(1) {
                let dij = space.distance_unchecked(&path[i], &x);
                let next = space.distance_unchecked(&path[i], &path[i + 1]);
                if dij < next {
                    log_w -= potential.phi_at(dij);
                }
            }
            if log_w == f64::NEG_INFINITY {
                break;
            }
            path.push(x);
        }
        let w = log_w.exp();
        s1 += w;
        s2 += w * w;
    }
    let s = samples as f64;
    let mean = s1 / s;
    let var = if samples > 1 {
        ((s2 / s - mean * mean) * s / (s - 1.0)).max(0.0)
    } else {
        0.0
    };
    let scale = c.powi(k as i32);
    Ok(Estimate {
        value: mean * scale,
        rel_error_target: 0.0,
        confidence: 0.997,
        replicates: samples,
        std_error: Some((var / s).sqrt() * scale),
        tail_bound: None,
        valid: true,
        reason: None,
    })
}

/// `(Delta_phi^(k))^(1/k)` for one `k`, with a delta-method standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwccRoot {
    pub k: usize,
    pub value: f64,
    pub std_error: f64,
}

/// The `k`-th roots of `Delta_phi^(k)` for `k = 1..=k_max`.
pub fn pwcc_roots<R: Rng + ?Sized>(
    potential: &PotentialSpec,
    d: usize,
    k_max: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<PwccRoot>> {
    if k_max == 0 {
        return Err(invalid("k_max", "must be at least 1"));
    }
    (1..=k_max)
        .map(|k| {
            let e = pwcc_k(potential, d, k, samples, rng)?;
            let value = e.value.max(0.0).powf(1.0 / k as f64);
            let se = if e.value > 0.0 {
                value * e.std_error.unwrap_or(0.0) / (k as f64 * e.value)
            } else {
                0.0
            };
            Ok(PwccRoot {
                k,
                value,
                std_error: se,
            })
        })
        .collect()
}

/// Free-space estimate of the potential-weighted connective constant:
/// the smallest `k`-th root over `k <= k_max` (the sequence is
/// sub-multiplicative, so every root is an upper bound on the limit).
pub fn pwcc_estimate<R: Rng + ?Sized>(
    potential: &PotentialSpec,
    d: usize,
    k_max: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let roots = pwcc_roots(potential, d, k_max, samples, rng)?;
    let best = roots
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("k_max >= 1");
    Ok(Estimate {
        value: best.value,
        rel_error_target: 0.0,
        confidence: 0.997,
        replicates: samples,
        std_error: Some(best.std_error),
        tail_bound: None,
        valid: true,
        reason: None,
    })
}

/// One row of a strong-spatial-mixing table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsmRow {
    pub s: usize,
    pub sphere_size: usize,
    /// Number of feasible pinnings of the sphere evaluated.
    pub pinnings: usize,
    /// Whether all feasible pinnings were evaluated.
    pub exhaustive: bool,
    /// `max |R^tau - R^tau'|` over evaluated pinnings.
    pub gap: f64,
}

/// Largest sphere whose pinnings are enumerated exhaustively.
const SSM_EXHAUSTIVE_SPHERE: usize = 16;

/// For each distance `s`, pins the sphere of radius `s` around `root` in
/// every feasible way (or in `budget` random ways for large spheres) and
/// reports the spread of the root's occupation ratio.
pub fn ssm_decay_table<R: Rng + ?Sized>(
    graph: &LabeledGraph,
    lambda: f64,
    root: usize,
    distances: std::ops::RangeInclusive<usize>,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<SsmRow>> {
    let n = graph.n();
    if n > SSM_LIMIT {
        return Err(Error::SizeLimit { n, limit: SSM_LIMIT });
    }
    if root >= n {
        return Err(Error::VertexOutOfRange { vertex: root, n });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", "must be finite and nonnegative"));
    }
    let dist = graph.bfs_distances(root);
    let mut rows = Vec::new();
    for s in distances {
        let sphere: Vec<usize> = (0..n).filter(|&v| dist[v] == Some(s)).collect();
        if sphere.is_empty() || s == 0 {
            return Err(Error::EmptySphere(s));
        }
        let k = sphere.len();
        let feasible = |mask: u64| -> bool {
            (0..k).all(|i| {
                mask >> i & 1 == 0
                    || (i + 1..k).all(|j| mask >> j & 1 == 0 || !graph.has_edge(sphere[i], sphere[j]))
            })
        };
        let (masks, exhaustive): (Vec<u64>, bool) = if k <= SSM_EXHAUSTIVE_SPHERE {
            ((0..1u64 << k).filter(|m| feasible(*m)).collect(), true)
        } else {
            let mut out = vec![0u64];
            let mut order: Vec<usize> = (0..k).collect();
            while out.len() < budget.max(1) {
                // Random maximal-ish independent subset of the sphere.
                order.shuffle(rng);
                let mut m = 0u64;
                for &i in &order {
                    if rng.random::<bool>() && feasible(m | 1 << i) {
                        m |= 1 << i;
                    }
                }
                out.push(m);
            }
            (out, false)
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &m in &masks {
            let pin: Vec<(usize, bool)> = sphere
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, m >> i & 1 == 1))
                .collect();
            let r = occupation_ratio_exact(graph, lambda, root, &pin)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        rows.push(SsmRow {
            s,
            sphere_size: k,
            pinnings: masks.len(),
            exhaustive,
            gap: hi - lo,
        });
    }
    Ok(rows)
}

/// CSV with header `root,k,count`.
pub fn profiles_csv(profiles: &[WeitzLayerProfile]) -> String {
    let mut out = String::from("root,k,count\n");
    for p in profiles {
        for (k, c) in p.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", p.root, k, c);
        }
    }
    out
}

/// CSV with header `root,s,gap`.
pub fn ssm_csv(root: usize, rows: &[SsmRow]) -> String {
    let mut out = String::from("root,s,gap\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:e}", root, r.s, r.gap);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::graph::{sample_graph, GraphMeta};
    use crate::rng::stream;

    #[test]
    fn path_and_triangle_profiles() {
        let p3 = LabeledGraph::path(3);
        let ord = id_ordering(&p3);
        assert_eq!(
            weitz_layer_counts(&p3, 0, &ord, 2, 100).unwrap().counts,
            vec![1, 1, 1]
        );
        assert_eq!(saw_layer_counts(&p3, 0, 2, 100).unwrap().counts, vec![1, 1, 1]);

        let k3 = LabeledGraph::complete(3);
        let ord = id_ordering(&k3);
        assert_eq!(
            weitz_layer_counts(&k3, 0, &ord, 2, 100).unwrap().counts,
            vec![1, 2, 1]
        );
        assert_eq!(saw_layer_counts(&k3, 0, 2, 100).unwrap().counts, vec![1, 2, 2]);
    }

    #[test]
    fn triangle_keeps_the_path_through_the_lower_ranked_neighbour() {
        // Root 0 ranks neighbour 2 before neighbour 1: 0,2,1 survives.
        let k3 = LabeledGraph::complete(3);
        let ord = NeighborhoodOrdering::from_orders(&k3, &[vec![2, 1], vec![0, 2], vec![0, 1]]).unwrap();
        assert_eq!(ord.rank(&k3, 0, 2), Some(1));
        let p = weitz_layer_counts(&k3, 0, &ord, 2, 100).unwrap();
        assert_eq!(p.counts, vec![1, 2, 1]);
    }

    /// Brute-force path enumeration straight from the definition.
    fn brute_force(
        graph: &LabeledGraph,
        root: usize,
        ord: Option<&NeighborhoodOrdering>,
        m: usize,
    ) -> Vec<u64> {
        let mut counts = vec![0u64; m + 1];
        let mut paths = vec![vec![root]];
        counts[0] = 1;
        for k in 1..=m {
            let mut next = Vec::new();
            for p in &paths {
                for &u in graph.neighbors(*p.last().unwrap()) {
                    let u = u as usize;
                    if p.contains(&u) {
                        continue;
                    }
                    let ok = ord.is_none_or(|o| {
                        (0..p.len() - 1).all(|j| {
                            !graph.has_edge(p[j], u)
                                || o.rank(graph, p[j], u).unwrap() > o.rank(graph, p[j], p[j + 1]).unwrap()
                        })
                    });
                    if ok {
                        let mut q = p.clone();
                        q.push(u);
                        next.push(q);
                    }
                }
            }
            counts[k] = next.len() as u64;
            paths = next;
        }
        counts
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let mut rng = stream(4);
        for _ in 0..100 {
            let n = rng.random_range(1..=9);
            let g = LabeledGraph::gnp(n, 0.4, &mut rng);
            let ord = id_ordering(&g);
            for r in 0..n {
                let w = weitz_layer_counts(&g, r, &ord, n, u64::MAX).unwrap();
                let s = saw_layer_counts(&g, r, n, u64::MAX).unwrap();
                assert_eq!(w.counts, brute_force(&g, r, Some(&ord), n));
                assert_eq!(s.counts, brute_force(&g, r, None, n));
                assert!(w.counts.iter().zip(&s.counts).all(|(a, b)| a <= b));
                if n > 1 {
                    assert_eq!(w.counts[1], g.degree(r) as u64);
                }
                let dmax = g.max_degree() as f64;
                let cap: f64 = (0..=n).map(|k| dmax.powi(k as i32)).sum();
                assert!(w.total() as f64 <= cap);
            }
        }
    }

    #[test]
    fn trees_have_no_pruning() {
        let mut rng = stream(5);
        for _ in 0..50 {
            let n = rng.random_range(2..=30);
            let edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
            let g = LabeledGraph::from_edges(n, &edges).unwrap();
            let ord = id_ordering(&g);
            let r = rng.random_range(0..n);
            assert_eq!(
                weitz_layer_counts(&g, r, &ord, n, u64::MAX).unwrap().counts,
                saw_layer_counts(&g, r, n, u64::MAX).unwrap().counts
            );
        }
    }

    #[test]
    fn node_budget_truncates() {
        let g = LabeledGraph::complete(8);
        let p = saw_layer_counts(&g, 0, 7, 50).unwrap();
        assert!(p.truncated);
        assert_eq!(p.total(), 50);
    }

    #[test]
    fn distance_ordering_is_a_bijection_with_id_ties() {
        let mut rng = stream(6);
        let region = Region::new(vec![3.0, 3.0], Boundary::Periodic).unwrap();
        let pot = PotentialSpec::HardSphere { r: 0.3 };
        for _ in 0..100 {
            let g = sample_graph(&region, &pot, 40, &mut rng).unwrap();
            assert!(distance_ordering(&g).is_bijection(&g));
        }
        // Periodic ring of four points: 0 sees 1 and 3 at equal distance.
        let ring = Region::new(vec![4.0], Boundary::Periodic).unwrap();
        let pts = (0..4).map(|i| Point::new(vec![i as f64])).collect();
        let g = crate::graph::graph_from_points(pts, &PotentialSpec::HardSphere { r: 0.6 }, &ring, &mut rng)
            .unwrap();
        let ord = distance_ordering(&g);
        assert_eq!(ord.rank(&g, 0, 1), Some(1));
        assert_eq!(ord.rank(&g, 0, 3), Some(2));
        let single = LabeledGraph::path(2);
        assert_eq!(distance_ordering(&single).rank(&single, 0, 1), Some(1));
        let _ = GraphMeta::default();
    }

    #[test]
    fn connective_checks() {
        let e = LabeledGraph::empty(5);
        let c = connective_bound_check(&e, &id_ordering(&e), 3, 1.0, 1.0, 1.0, 1000).unwrap();
        assert!(c.passed);
        let cyc = LabeledGraph::cycle(9);
        let p = weitz_layer_counts(&cyc, 0, &id_ordering(&cyc), 8, u64::MAX).unwrap();
        assert!(p.counts[1..].iter().all(|&l| l <= 2));
        let s = saw_layer_counts(&cyc, 0, 8, u64::MAX).unwrap();
        assert!(s.counts[1..].iter().all(|&l| l == 2));
        // sum_{k <= 8} L_k <= 1 + 2 * 8 = 17 <= c * 2^8 with c = 1.
        let ok = connective_bound_check(&cyc, &id_ordering(&cyc), 8, 2.0, 1.0, 1.0, 1000).unwrap();
        assert!(ok.passed);
        assert!(connective_bound_check(&cyc, &id_ordering(&cyc), 1, 2.0, 1.0, 1.0, 1000).is_err());
    }

    #[test]
    fn pwcc_basics() {
        let mut rng = stream(7);
        let hs = PotentialSpec::HardSphere { r: 0.5 };
        assert_eq!(pwcc_k(&hs, 1, 0, 10, &mut rng).unwrap().value, 1.0);
        let k1 = pwcc_k(&hs, 1, 1, 1000, &mut rng).unwrap();
        assert!((k1.value - 2.0).abs() < 1e-12);
        assert_eq!(
            pwcc_estimate(&PotentialSpec::Zero, 2, 3, 100, &mut rng)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn pwcc_two_steps_against_grid_quadrature() {
        // Hard rods of length 1 in one dimension (r = 0.5). With x_0 = 0:
        // x_1 in (-1, 1), x_2 in (x_1 - 1, x_1 + 1), weight 0 iff
        // |x_2| < |x_1| and |x_2| < 1.
        let g = 2000;
        let h = 2.0 / g as f64;
        let mut acc = 0.0;
        for a in 0..g {
            let x1 = -1.0 + (a as f64 + 0.5) * h;
            for b in 0..g {
                let x2 = x1 - 1.0 + (b as f64 + 0.5) * h;
                if !(x2.abs() < x1.abs() && x2.abs() < 1.0) {
                    acc += h * h;
                }
            }
        }
        let est = pwcc_k(
            &PotentialSpec::HardSphere { r: 0.5 },
            1,
            2,
            1_000_000,
            &mut stream(8),
        )
        .unwrap();
        assert!(
            (est.value - acc).abs() < 4.0 * est.std_error.unwrap() + 1e-3,
            "{} vs {acc}",
            est.value
        );
        let roots = pwcc_roots(
            &PotentialSpec::HardSphere { r: 0.5 },
            1,
            2,
            200_000,
            &mut stream(9),
        )
        .unwrap();
        assert!(roots[1].value + 4.0 * roots[1].std_error < roots[0].value);
    }

    #[test]
    fn pwcc_below_temperedness() {
        let pot = PotentialSpec::GaussianOverlap { eps: 1.0, sigma: 1.0 };
        let c = pot.temperedness_constant(2).unwrap();
        let e = pwcc_estimate(&pot, 2, 3, 20_000, &mut stream(10)).unwrap();
        assert!(e.value <= c + e.error_band(4.0));
    }

    #[test]
    fn ssm_trivial_cases() {
        let mut rng = stream(11);
        let p = LabeledGraph::path(8);
        let rows = ssm_decay_table(&p, 0.0, 0, 1..=4, 10, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0));
        let iso = LabeledGraph::empty(3);
        assert!(matches!(
            ssm_decay_table(&iso, 1.0, 0, 1..=1, 10, &mut rng),
            Err(Error::EmptySphere(1))
        ));
        let with_iso = LabeledGraph::from_edges(4, &[(1, 2), (2, 3)]).unwrap();
        assert!(ssm_decay_table(&with_iso, 1.0, 0, 1..=1, 10, &mut rng).is_err());
        let big = LabeledGraph::path(23);
        assert!(matches!(
            ssm_decay_table(&big, 1.0, 0, 1..=1, 10, &mut rng),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn ssm_on_paths_decays() {
        let p = LabeledGraph::path(12);
        let rows = ssm_decay_table(&p, 0.5, 0, 1..=6, 10, &mut stream(12)).unwrap();
        assert!(rows.windows(2).all(|w| w[1].gap < w[0].gap), "{rows:?}");
        assert!(rows.iter().all(|r| r.exhaustive));
        let csv = ssm_csv(0, &rows);
        assert!(csv.starts_with("root,s,gap\n0,1,"));
    }

    #[test]
    fn profile_csv_shape() {
        let k3 = LabeledGraph::complete(3);
        let p = saw_layer_counts(&k3, 0, 2, 100).unwrap();
        assert_eq!(profiles_csv(&[p]), "root,k,count\n0,0,1\n0,1,2\n0,2,2\n");
    }
}

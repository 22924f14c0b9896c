//! The geometric random graph model and graph utilities.
//!
//! A graph is drawn by placing `n` independent uniform points in a region and
//! joining each pair `{i, j}` with probability `1 - exp(-phi(x_i, x_j))`.
//! Pairs are visited in lexicographic order and every pair consumes exactly
//! one uniform variate, so `(seed, n)` determines the graph.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Region};
use crate::potential::PotentialSpec;

/// Generation metadata attached to sampled graphs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// Unix time of generation; left unset by the library so that outputs
    /// are reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

/// Undirected simple graph on `0..n`, optionally with an embedded point per
/// vertex.
///
/// Abstract graphs (built from an edge list) carry no points; sampled graphs
/// carry exactly `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    points: Vec<Point>,
    adjacency: Vec<Vec<u32>>,
    /// Bit matrix for dense graphs (mean degree above n / 8).
    dense: Option<Vec<u64>>,
    meta: GraphMeta,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    #[serde(default)]
    points: Vec<Point>,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    meta: GraphMeta,
}

impl LabeledGraph {
    /// Builds a graph from sorted, symmetric adjacency lists.
    fn from_adjacency(points: Vec<Point>, adjacency: Vec<Vec<u32>>, meta: GraphMeta) -> Self {
        let n = adjacency.len();
        let edges2: usize = adjacency.iter().map(Vec::len).sum();
        let dense = if n > 0 && edges2 as f64 / n as f64 > n as f64 / 8.0 {
            let words = n.div_ceil(64);
            let mut bits = vec![0u64; n * words];
            for (v, nb) in adjacency.iter().enumerate() {
                for &u in nb {
                    bits[v * words + u as usize / 64] |= 1 << (u % 64);
                }
            }
            Some(bits)
        } else {
            None
        };
        let g = LabeledGraph {
            points,
            adjacency,
            dense,
            meta,
        };
        debug_assert!(g.check_invariants().is_ok());
        g
    }

    /// Abstract graph from an edge list. Duplicate edges are merged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at {i}")));
            }
            adj[i].insert(j as u32);
            adj[j].insert(i as u32);
        }
        Ok(Self::from_adjacency(
            vec![],
            adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            GraphMeta::default(),
        ))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_adjacency(vec![], vec![vec![]; n], GraphMeta::default())
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::from_edges(n, &edges).expect("valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("valid")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("valid")
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges).expect("valid")
    }

    /// Erdős-Rényi G(n, p), used for test corpora.
    pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, &edges).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn has_points(&self) -> bool {
        !self.points.is_empty()
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub fn set_meta(&mut self, meta: GraphMeta) {
        self.meta = meta;
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.edge_count() as f64 / self.n() as f64
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if let Some(bits) = &self.dense {
            let words = self.n().div_ceil(64);
            bits[u * words + v / 64] >> (v % 64) & 1 == 1
        } else {
            self.adjacency[u].binary_search(&(v as u32)).is_ok()
        }
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, nb)| {
            nb.iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        if !self.points.is_empty() && self.points.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} points for {} vertices",
                self.points.len(),
                n
            )));
        }
        for (v, nb) in self.adjacency.iter().enumerate() {
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGraph(format!("neighbors of {v} not sorted")));
            }
            for &u in nb {
                let u = u as usize;
                if u >= n {
                    return Err(Error::InvalidGraph(format!("neighbor {u} out of range")));
                }
                if u == v {
                    return Err(Error::InvalidGraph(format!("self-loop at {v}")));
                }
                if self.adjacency[u].binary_search(&(v as u32)).is_err() {
                    return Err(Error::InvalidGraph(format!("edge ({v}, {u}) not symmetric")));
                }
            }
        }
        if let Some(region) = &self.meta.region {
            if let Some(p) = self.points.iter().find(|p| !region.contains(p)) {
                return Err(Error::InvalidGraph(format!("point {:?} outside region", p.0)));
            }
        }
        Ok(())
    }

    /// Graph with the edge `{u, v}` removed.
    pub fn without_edge(&self, u: usize, v: usize) -> Self {
        let mut adj = self.adjacency.clone();
        adj[u].retain(|&x| x as usize != v);
        adj[v].retain(|&x| x as usize != u);
        Self::from_adjacency(self.points.clone(), adj, self.meta.clone())
    }

    /// Graph with one extra vertex `n` joined to `attach`.
    pub fn with_vertex(&self, attach: &[usize]) -> Self {
        let n = self.n();
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        edges.extend(attach.iter().map(|&u| (u, n)));
        Self::from_edges(n + 1, &edges).expect("valid attachment")
    }

    /// Subgraph induced by `vertices` (relabelled in the given order).
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let mut index = vec![u32::MAX; self.n()];
        for (k, &v) in vertices.iter().enumerate() {
            index[v] = k as u32;
        }
        let adj = vertices
            .iter()
            .map(|&v| {
                let mut nb: Vec<u32> = self.adjacency[v]
                    .iter()
                    .filter_map(|&u| {
                        let k = index[u as usize];
                        (k != u32::MAX).then_some(k)
                    })
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        let points = if self.has_points() {
            vertices.iter().map(|&v| self.points[v].clone()).collect()
        } else {
            vec![]
        };
        Self::from_adjacency(points, adj, GraphMeta::default())
    }

    /// Connected components, each sorted ascending, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &u in &self.adjacency[v] {
                    let u = u as usize;
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }

    /// Graph distances from `root` (`None` when unreachable).
    pub fn bfs_distances(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &u in &self.adjacency[v] {
                if dist[u as usize].is_none() {
                    dist[u as usize] = Some(d + 1);
                    queue.push_back(u as usize);
                }
            }
        }
        dist
    }

    /// Neighborhood bit masks; requires `n <= 64`.
    pub fn adjacency_masks(&self) -> Vec<u64> {
        assert!(self.n() <= 64, "bit mask form needs at most 64 vertices");
        self.adjacency
            .iter()
            .map(|nb| nb.iter().fold(0u64, |m, &u| m | 1 << u))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GraphRepr {
            n: self.n(),
            points: self.points.clone(),
            edges: self.edges().map(|(i, j)| [i, j]).collect(),
            meta: self.meta.clone(),
        })
        .expect("graph serializes")
    }

    /// Parses and validates the JSON export format.
    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let repr: GraphRepr = serde_json::from_value(value)?;
        let mut seen = BTreeSet::new();
        for &[i, j] in &repr.edges {
            if i >= j {
                return Err(Error::InvalidGraph(format!("edge [{i}, {j}] must have i < j")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge [{i}, {j}]")));
            }
        }
        let edges: Vec<_> = repr.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = Self::from_edges(repr.n, &edges)?;
        if !repr.points.is_empty() {
            if repr.points.len() != repr.n {
                return Err(Error::InvalidGraph(format!(
                    "{} points for n = {}",
                    repr.points.len(),
                    repr.n
                )));
            }
            if let Some(region) = &repr.meta.region {
                if let Some(p) = repr.points.iter().find(|p| p.dim() != region.dim()) {
                    return Err(Error::DimensionMismatch {
                        expected: region.dim(),
                        actual: p.dim(),
                    });
                }
            }
        }
        g.points = repr.points;
        g.meta = repr.meta;
        g.check_invariants()?;
        Ok(g)
    }
}

/// `n` independent uniform points in `region`.
pub fn sample_points<R: Rng + ?Sized>(region: &Region, n: usize, rng: &mut R) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(invalid("n", "at least one point is required"));
    }
    Ok((0..n).map(|_| region.sample_uniform(rng)).collect())
}

/// Joins each pair independently with probability `1 - exp(-phi)`.
pub fn graph_from_points<R: Rng + ?Sized>(
    points: Vec<Point>,
    potential: &PotentialSpec,
    region: &Region,
    rng: &mut R,
) -> Result<LabeledGraph> {
    if let Some(p) = points.iter().find(|p| p.dim() != region.dim()) {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            actual: p.dim(),
        });
    }
    let n = points.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        let xi = points[i].coords();
        for j in i + 1..n {
            let u: f64 = rng.random();
            let p = potential.edge_probability_at(region.distance_unchecked(xi, points[j].coords()));
            if u < p {
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            }
        }
    }
    // Pairs were visited in lexicographic order, so every list is sorted.
    let meta = GraphMeta {
        seed: None,
        potential: Some(potential.clone()),
        region: Some(region.clone()),
        generated_at: None,
    };
    let g = LabeledGraph::from_adjacency(points, adj, meta);
    assert!(
        g.check_invariants().is_ok(),
        "generated graph violates invariants"
    );
    Ok(g)
}

/// Draws `G ~ D(n, region, potential)`.
pub fn sample_graph<R: Rng + ?Sized>(
    region: &Region,
    potential: &PotentialSpec,
    n: usize,
    rng: &mut R,
) -> Result<LabeledGraph> {
    let points = sample_points(region, n, rng)?;
    graph_from_points(points, potential, region, rng)
}

/// Seeded graph: stream derived from `seed`, seed recorded in the metadata.
pub fn sample_graph_seeded(
    region: &Region,
    potential: &PotentialSpec,
    n: usize,
    seed: u64,
) -> Result<LabeledGraph> {
    let mut rng = crate::rng::stream(seed);
    let mut g = sample_graph(region, potential, n, &mut rng)?;
    g.meta.seed = Some(seed);
    Ok(g)
}

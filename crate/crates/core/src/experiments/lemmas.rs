//! Exact checks of the perturbation, monotonicity and domination properties
//! of two-state spin systems on a seeded corpus of small graphs.
//!
//! Partition functions are evaluated in exact rational arithmetic: the
//! counts `c[k][m]` of configurations with `k` ones and `m` edges between
//! ones are enumerated, and `Z = sum c[k][m] lambda^k beta^m` is formed over
//! a common denominator. Activities given as `f64` are converted exactly, so
//! every inequality is decided without rounding.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{par_rows, ExperimentSpec, RowRole, TrialRow};
use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::hardcore::{default_glauber_steps, glauber_sample};
use crate::stats::{binomial_cdf, check_domination, dkw_epsilon};

/// Largest corpus graph; the vertex added by the `add_vertex` check makes
/// the sweep `2^(max_n + 1)` configurations.
pub const LEMMA_MAX_N: usize = 15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaOptions {
    /// Corpus size.
    pub graphs: usize,
    /// Vertex counts are drawn uniformly from `1..=max_n`.
    pub max_n: usize,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Random attachment pairs per graph for the `add_vertex` check.
    pub attach_pairs: usize,
    /// Graphs for the binomial domination check (0 disables it).
    pub domination_graphs: usize,
    pub domination_n: usize,
    pub domination_samples: usize,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions {
            graphs: 200,
            max_n: 10,
            lambdas: vec![0.1, 0.5, 1.0],
            betas: vec![0.0, 0.5, 1.0],
            attach_pairs: 3,
            domination_graphs: 2,
            domination_n: 12,
            domination_samples: 100_000,
        }
    }
}

impl LemmaOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(format!("lemma: {m}")));
        if self.max_n < 1 || self.max_n > LEMMA_MAX_N {
            return bad("max_n must lie in 1..=15");
        }
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambdas must be finite and nonnegative");
        }
        if self.betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return bad("betas must lie in [0, 1]");
        }
        if self.domination_graphs > 0 && !(1..=64).contains(&self.domination_n) {
            return bad("domination_n must lie in 1..=64");
        }
        if self.domination_graphs > 0 && self.domination_samples == 0 {
            return bad("domination_samples must be positive");
        }
        Ok(())
    }
}

/// A rational `num / den` kept unreduced; `den > 0`.
#[derive(Clone, Debug)]
struct Frac {
    num: BigInt,
    den: BigInt,
}

impl Frac {
    fn from_f64(x: f64) -> Frac {
        let r = BigRational::from_float(x).expect("finite");
        Frac {
            num: r.numer().clone(),
            den: r.denom().clone(),
        }
    }

    fn from_u64(x: u64) -> Frac {
        Frac {
            num: BigInt::from(x),
            den: BigInt::one(),
        }
    }

    fn add(&self, o: &Frac) -> Frac {
        Frac {
            num: &self.num * &o.den + &o.num * &self.den,
            den: &self.den * &o.den,
        }
    }

    fn sub(&self, o: &Frac) -> Frac {
        Frac {
            num: &self.num * &o.den - &o.num * &self.den,
            den: &self.den * &o.den,
        }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac {
            num: &self.num * &o.num,
            den: &self.den * &o.den,
        }
    }

    fn abs(&self) -> Frac {
        Frac {
            num: if self.num < BigInt::zero() {
                -&self.num
            } else {
                self.num.clone()
            },
            den: self.den.clone(),
        }
    }

    fn le(&self, o: &Frac) -> bool {
        &self.num * &o.den <= &o.num * &self.den
    }

    fn min<'a>(&'a self, o: &'a Frac) -> &'a Frac {
        if self.le(o) {
            self
        } else {
            o
        }
    }
}

/// `sum_{j <= 40 + 4x} x^j / j!`, a lower bound on `e^x`.
fn exp_lower(x: &Frac) -> Frac {
    let xf = BigRational::new(x.num.clone(), x.den.clone())
        .to_f64()
        .unwrap_or(f64::MAX);
    let terms = 40 + (4.0 * xf).ceil() as u64;
    let mut term = Frac::from_u64(1);
    let mut sum = term.clone();
    for j in 1..=terms {
        term = term.mul(x);
        term.den *= BigInt::from_u64(j).unwrap();
        sum = sum.add(&term);
    }
    sum
}

/// `counts[k][m]`: configurations with `k` ones and `m` edges between ones.
struct CountTable {
    n: usize,
    max_m: usize,
    counts: Vec<Vec<u64>>,
}

impl CountTable {
    fn new(graph: &LabeledGraph) -> CountTable {
        let n = graph.n();
        let adj = graph.adjacency_masks();
        let max_m = graph.edge_count();
        let mut counts = vec![vec![0u64; max_m + 1]; n + 1];
        for mask in 0u64..1 << n {
            let k = mask.count_ones() as usize;
            let mut twice_m = 0;
            let mut rest = mask;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                twice_m += (adj[v] & mask).count_ones() as usize;
            }
            counts[k][twice_m / 2] += 1;
        }
        CountTable { n, max_m, counts }
    }

    /// Exact `Z(lambda, beta)` with `0^0 = 1`.
    fn eval(&self, lambda: &Frac, beta: &Frac) -> Frac {
        let pows = |b: &BigInt, top: usize| -> Vec<BigInt> {
            let mut v = vec![BigInt::one()];
            for i in 0..top {
                let next = &v[i] * b;
                v.push(next);
            }
            v
        };
        let (la, lb) = (pows(&lambda.num, self.n), pows(&lambda.den, self.n));
        let (ba, bb) = (pows(&beta.num, self.max_m), pows(&beta.den, self.max_m));
        let mut num = BigInt::zero();
        for (k, row) in self.counts.iter().enumerate() {
            let lk = &la[k] * &lb[self.n - k];
            for (m, &c) in row.iter().enumerate() {
                if c == 0 || (beta.num.is_zero() && m > 0) {
                    continue;
                }
                num += &lk * &ba[m] * &bb[self.max_m - m] * BigInt::from(c);
            }
        }
        Frac {
            num,
            den: &lb[self.n] * &bb[self.max_m],
        }
    }
}

/// Checks and violations of one property.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaTally {
    pub checks: u64,
    pub violations: u64,
}

impl LemmaTally {
    fn record(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
        }
    }
}

const LEMMAS: [&str; 4] = ["remove_edge", "add_vertex", "monotonicity", "vertex_removal"];

fn check_graph(graph: &LabeledGraph, opts: &LemmaOptions, rng: &mut impl Rng) -> [LemmaTally; 4] {
    let mut t = [LemmaTally::default(); 4];
    let n = graph.n();
    let lambdas: Vec<Frac> = opts.lambdas.iter().map(|&l| Frac::from_f64(l)).collect();
    let betas: Vec<Frac> = opts.betas.iter().map(|&b| Frac::from_f64(b)).collect();
    let zero = Frac::from_u64(0);
    let base = CountTable::new(graph);
    let z_base: Vec<Vec<Frac>> = lambdas
        .iter()
        .map(|l| betas.iter().map(|b| base.eval(l, b)).collect())
        .collect();

    // 0 <= Z_{G-e} - Z_G <= lambda^2 Z_G
    for (u, v) in graph.edges() {
        let table = CountTable::new(&graph.without_edge(u, v));
        for (i, l) in lambdas.iter().enumerate() {
            let l2 = l.mul(l);
            for (j, b) in betas.iter().enumerate() {
                let z = &z_base[i][j];
                let diff = table.eval(l, b).sub(z);
                t[0].record(zero.le(&diff) && diff.le(&l2.mul(z)));
            }
        }
    }

    // |Z_H - Z_H'| <= lambda Z_G <= lambda min(Z_H, Z_H')
    for _ in 0..opts.attach_pairs {
        let mut pick = || -> Vec<usize> { (0..n).filter(|_| rng.random::<bool>()).collect() };
        let (a, b) = (pick(), pick());
        let (ha, hb) = (
            CountTable::new(&graph.with_vertex(&a)),
            CountTable::new(&graph.with_vertex(&b)),
        );
        for (i, l) in lambdas.iter().enumerate() {
            for (j, beta) in betas.iter().enumerate() {
                let (za, zb) = (ha.eval(l, beta), hb.eval(l, beta));
                let lz = l.mul(&z_base[i][j]);
                t[1].record(za.sub(&zb).abs().le(&lz) && lz.le(&l.mul(za.min(&zb))));
            }
        }
    }

    // Hard-core only: Z(l1) <= Z(l1 + l2) <= e^{l2 n} Z(l1).
    let hc = Frac::from_u64(0);
    for l1 in &lambdas {
        let z1 = base.eval(l1, &hc);
        for l2 in &lambdas {
            let z12 = base.eval(&l1.add(l2), &hc);
            let bound = exp_lower(&l2.mul(&Frac::from_u64(n as u64)));
            t[2].record(z1.le(&z12) && z12.le(&bound.mul(&z1)));
        }
    }

    // Hard-core only: Z_{G-S} <= Z_G <= e^{lambda |S|} Z_{G-S}.
    let s: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
    let keep: Vec<usize> = (0..n).filter(|v| !s.contains(v)).collect();
    let reduced = CountTable::new(&graph.induced(&keep));
    for l in &lambdas {
        let (zg, zs) = (base.eval(l, &hc), reduced.eval(l, &hc));
        let bound = exp_lower(&l.mul(&Frac::from_u64(s.len() as u64)));
        t[3].record(zs.le(&zg) && zg.le(&bound.mul(&zs)));
    }
    t
}

pub(crate) fn lemma_rows(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    let opts = &spec.lemma;
    let mut rows = par_rows(spec.seed, 0..opts.graphs as u64, RowRole::Trial, |row, rng| {
        let n = rng.random_range(1..=opts.max_n);
        let p = rng.random_range(0.1..0.9);
        let g = LabeledGraph::gnp(n, p, rng);
        row.set("n", n as f64).set("edges", g.edge_count() as f64);
        for (name, tally) in LEMMAS.iter().zip(check_graph(&g, opts, rng)) {
            row.set(&format!("{name}_checks"), tally.checks as f64)
                .set(&format!("{name}_violations"), tally.violations as f64);
        }
        Ok(())
    })?;
    let start = opts.graphs as u64;
    let dom_rows = opts.domination_graphs * opts.lambdas.len();
    rows.extend(par_rows(
        spec.seed,
        start..start + dom_rows as u64,
        RowRole::Auxiliary,
        |row, rng| {
            let idx = (row.id - start) as usize;
            let lambda = opts.lambdas[idx % opts.lambdas.len()];
            let n = opts.domination_n;
            let g = LabeledGraph::gnp(n, rng.random_range(0.1..0.5), rng);
            let steps = default_glauber_steps(n, 0.01, 20.0);
            let mut sizes = Vec::with_capacity(opts.domination_samples);
            for _ in 0..opts.domination_samples {
                sizes.push(glauber_sample(&g, lambda, steps, rng, None)?.size());
            }
            // Four standard errors of an empirical CDF value: 4 * 0.5 / sqrt(N).
            let band = dkw_epsilon(sizes.len(), 2.0 * (-8f64).exp());
            let p = lambda / (1.0 + lambda);
            let check = check_domination(&sizes, |k| binomial_cdf(n as u64, p, k), band);
            row.set("lambda", lambda)
                .set("n", n as f64)
                .set("band", check.band)
                .set("worst_excess", check.worst_excess)
                .set_flag("holds", check.holds);
            Ok(())
        },
    )?);
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub graphs: usize,
    pub remove_edge: LemmaTally,
    pub add_vertex: LemmaTally,
    pub monotonicity: LemmaTally,
    pub vertex_removal: LemmaTally,
    /// Domination checks run and held.
    pub domination: LemmaTally,
    pub passed: bool,
}

pub(crate) fn summarize_lemmas(rows: &[TrialRow]) -> LemmaSummary {
    let mut tallies = [LemmaTally::default(); 4];
    let mut dom = LemmaTally::default();
    let mut graphs = 0;
    for r in rows {
        match r.role {
            RowRole::Trial => {
                graphs += 1;
                for (name, t) in LEMMAS.iter().zip(tallies.iter_mut()) {
                    t.checks += r.value(&format!("{name}_checks")).unwrap_or(0.0) as u64;
                    t.violations += r.value(&format!("{name}_violations")).unwrap_or(0.0) as u64;
                }
            }
            RowRole::Auxiliary => dom.record(r.flag("holds").unwrap_or(false)),
            _ => {}
        }
    }
    let passed = tallies.iter().chain([&dom]).all(|t| t.violations == 0);
    LemmaSummary {
        graphs,
        remove_edge: tallies[0],
        add_vertex: tallies[1],
        monotonicity: tallies[2],
        vertex_removal: tallies[3],
        domination: dom,
        passed,
    }
}

/// Runs the lemma suite and returns its summary.
pub fn run_lemma_suite(spec: &ExperimentSpec) -> Result<LemmaSummary> {
    let mut spec = spec.clone();
    spec.kind = super::ExperimentKind::LemmaSuite;
    spec.lemma.validate()?;
    Ok(summarize_lemmas(&lemma_rows(&spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardcore::{partition_sweep, SpinSystemParams};
    use crate::rng::stream;

    fn to_f64(f: &Frac) -> f64 {
        BigRational::new(f.num.clone(), f.den.clone()).to_f64().unwrap()
    }

    #[test]
    fn exact_values_match_the_float_sweep() {
        let mut rng = stream(1);
        for _ in 0..50 {
            let n = rng.random_range(1..=8);
            let g = LabeledGraph::gnp(n, 0.4, &mut rng);
            let table = CountTable::new(&g);
            for (l, b) in [(0.1, 0.0), (0.5, 0.5), (1.0, 1.0), (0.3, 0.25)] {
                let exact = to_f64(&table.eval(&Frac::from_f64(l), &Frac::from_f64(b)));
                let float = partition_sweep(&g, SpinSystemParams::new(l, b).unwrap()).unwrap();
                assert!((exact / float - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_edge_gap() {
        // Z_{G-e} - Z_G = 4 - 3 = 1 <= lambda^2 Z_G = 3 at lambda = 1.
        let g = LabeledGraph::path(2);
        let one = Frac::from_u64(1);
        let zero = Frac::from_u64(0);
        let z = CountTable::new(&g).eval(&one, &zero);
        let z2 = CountTable::new(&g.without_edge(0, 1)).eval(&one, &zero);
        assert_eq!(to_f64(&z), 3.0);
        assert_eq!(to_f64(&z2.sub(&z)), 1.0);
    }

    #[test]
    fn exp_lower_is_below_exp() {
        for x in [0.0, 0.5, 3.0, 12.0] {
            let e = to_f64(&exp_lower(&Frac::from_f64(x)));
            assert!(e <= x.exp() * (1.0 + 1e-15) && e >= x.exp() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn zero_activity_gaps_vanish() {
        let mut spec = ExperimentSpec::new(super::super::ExperimentKind::LemmaSuite, 2);
        spec.lemma.graphs = 20;
        spec.lemma.lambdas = vec![0.0];
        spec.lemma.domination_graphs = 0;
        let s = run_lemma_suite(&spec).unwrap();
        assert!(s.passed);
        assert!(s.remove_edge.checks > 0);
    }

    #[test]
    fn small_suite_passes() {
        let mut spec = ExperimentSpec::new(super::super::ExperimentKind::LemmaSuite, 3);
        spec.lemma.graphs = 30;
        spec.lemma.domination_graphs = 1;
        spec.lemma.domination_samples = 20_000;
        let s = run_lemma_suite(&spec).unwrap();
        assert!(s.passed, "{s:?}");
        assert_eq!(s.domination.checks, 3);
    }
}

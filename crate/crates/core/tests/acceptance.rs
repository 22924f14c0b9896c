//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero when any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 1 8`.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gibbsgraph_core::experiments::{self, ExperimentKind, ExperimentSpec};
use gibbsgraph_core::gpp::{approximate_partition, expected_hardcore_partition, oracle_series, GppInstance};
use gibbsgraph_core::graph::sample_graph;
use gibbsgraph_core::hardcore::{
    configuration_probabilities, critical_fugacity, default_glauber_steps, glauber_sample, hardcore_partition,
};
use gibbsgraph_core::rng::{replicate_stream, stream};
use gibbsgraph_core::stats::{chi_square_gof, mean, std_error};
use gibbsgraph_core::weitz::{id_ordering, pwcc_k, saw_layer_counts, weitz_layer_counts};
use gibbsgraph_core::{Boundary, LabeledGraph, NMode, PotentialSpec, Region};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Hard rods of length 0.2 on `[0, 4]` at `lambda = 1`.
fn rods() -> GppInstance {
    GppInstance {
        region: Region::new(vec![4.0], Boundary::Open).unwrap(),
        potential: PotentialSpec::HardSphere { r: 0.1 },
        lambda: 1.0,
    }
}

/// `I_k` of the rods: `max(0, L - (k - 1) sigma)^k`.
fn tonks_integral(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (4.0 - 0.2 * (k - 1) as f64).max(0.0).powi(k as i32)
}

fn poisson_identity() -> Outcome {
    let inst = GppInstance {
        region: Region::new(vec![1.0], Boundary::Open).unwrap(),
        potential: PotentialSpec::Zero,
        lambda: 2.0,
    };
    let n = 2000;
    let a = approximate_partition(&inst, 0.1, &mut stream(1), NMode::Practical(n)).unwrap();
    let b = approximate_partition(&inst, 0.1, &mut stream(2), NMode::Practical(n)).unwrap();
    let exact = (1.0 + 2.0 / n as f64).powi(n as i32);
    let e2 = 2f64.exp();
    let v = a.estimate.value;
    let rel = (v / e2 - 1.0).abs();
    let ok = rel <= 0.01 && (v / exact - 1.0).abs() < 1e-9 && v == b.estimate.value;
    outcome(
        ok,
        format!("Z = {v:.6}, (1+2/n)^n = {exact:.6}, |Z/e^2 - 1| = {rel:.2e}"),
    )
}

fn lemma_suite() -> Outcome {
    let spec = ExperimentSpec::new(ExperimentKind::LemmaSuite, 20260101);
    let s = experiments::run_lemma_suite(&spec).unwrap();
    let violations = s.remove_edge.violations + s.add_vertex.violations + s.monotonicity.violations;
    outcome(
        violations == 0 && s.passed,
        format!(
            "{} graphs; remove_edge {}/{}, add_vertex {}/{}, monotonicity {}/{} violations/checks",
            s.graphs,
            s.remove_edge.violations,
            s.remove_edge.checks,
            s.add_vertex.violations,
            s.add_vertex.checks,
            s.monotonicity.violations,
            s.monotonicity.checks
        ),
    )
}

fn expected_partition() -> Outcome {
    let inst = rods();
    let n = 8;
    let lambda_n = inst.activity(n);
    let graphs = 5000;
    let zs: Vec<f64> = (0..graphs)
        .map(|i| {
            let mut rng = replicate_stream(3, i);
            let g = sample_graph(&inst.region, &inst.potential, n, &mut rng).unwrap();
            hardcore_partition(&g, lambda_n).unwrap()
        })
        .collect();
    let (mc, mc_se) = (mean(&zs), std_error(&zs));
    let series = oracle_series(&inst, n, 200_000, &mut stream(4)).unwrap();
    let (oracle, oracle_se) = expected_hardcore_partition(&series, n);
    let combined = (mc_se * mc_se + oracle_se * oracle_se).sqrt();
    let gap = (mc - oracle).abs();
    // Independent check of the oracle against the Tonks integrals.
    let exact: f64 = (0..=n)
        .map(|k| {
            let ln_c = gibbsgraph_core::stats::ln_binomial(n as u64, k as u64);
            ln_c.exp() * (lambda_n / 4.0).powi(k as i32) * tonks_integral(k)
        })
        .sum();
    let ok = gap <= 3.0 * combined && (exact - oracle).abs() <= 3.0 * oracle_se.max(1e-12);
    outcome(
        ok,
        format!(
            "MC {mc:.5} +- {mc_se:.5}, oracle {oracle:.5} +- {oracle_se:.5}, closed form {exact:.5}, gap {:.2} SE",
            gap / combined
        ),
    )
}

fn concentration() -> Outcome {
    let mut spec = ExperimentSpec::new(ExperimentKind::Concentration, 44);
    spec.instance = Some(rods());
    spec.n = Some(400);
    spec.trials = 200;
    spec.eps = 0.2;
    let s = experiments::run_concentration(&spec).unwrap();
    let r = &s.rows[0];
    outcome(
        s.passed,
        format!(
            "failure rate {:.4} vs bound {:.4} x{} = {:.4} (C = {:.4}, mean Z {:.4}, exact Z {})",
            r.failure_rate, r.bound, r.slack, r.slacked_bound, r.es_constant, r.mean, r.exact
        ),
    )
}

fn approximation() -> Outcome {
    let mut spec = ExperimentSpec::new(ExperimentKind::ApproximateZ, 55);
    spec.instance = Some(rods());
    spec.n = Some(600);
    spec.trials = 20;
    spec.eps = 0.15;
    let s = experiments::run_approximate_z(&spec).unwrap();
    outcome(
        s.passed && s.hits >= 14,
        format!(
            "{}/{} within eps of oracle {:.4} +- {:.4} (required {}), mean rel. error {:.4}, degree failures {}",
            s.hits, s.trials, s.oracle, s.oracle_std_error, s.required, s.mean_relative_error, s.degree_failures
        ),
    )
}

fn sampler_validation() -> Outcome {
    let mut spec = ExperimentSpec::new(ExperimentKind::SampleValidate, 66);
    spec.instance = Some(rods());
    spec.n = Some(600);
    spec.eps = 0.15;
    spec.sampling.draws = 100_000;
    let s = experiments::run_sample_validate(&spec).unwrap();
    outcome(
        s.passed,
        format!(
            "count TV {:.4} (thr {}), void {:.4} vs {:.4} (gap {:.2} SE, allowed {} SE + tail {:.1e}), domination excess {:.4} vs band {:.4}",
            s.count_tv,
            s.tv_threshold,
            s.void.empirical,
            s.void.oracle,
            s.void.gap / s.void.std_error,
            s.void.sigmas,
            s.void.tail_bound,
            s.domination_worst_excess,
            s.domination_band
        ),
    )
}

/// Canonical form of an edge mask over `pairs`: the least mask over all
/// relabelings. `index[i][j]` is the position of pair `{i, j}`.
fn canonical(mask: u32, pairs: &[(usize, usize)], index: &[Vec<usize>], perms: &[Vec<usize>]) -> u32 {
    let mut best = u32::MAX;
    for p in perms {
        let mut m = 0u32;
        for (e, &(i, j)) in pairs.iter().enumerate() {
            if mask >> e & 1 == 1 {
                m |= 1 << index[p[i]][p[j]];
            }
        }
        best = best.min(m);
    }
    best
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// One representative of every connected graph on `n` vertices up to
/// isomorphism.
fn connected_graphs(n: usize) -> Vec<LabeledGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut index = vec![vec![0; n]; n];
    for (e, &(i, j)) in pairs.iter().enumerate() {
        index[i][j] = e;
        index[j][i] = e;
    }
    let perms = permutations(n);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> = (0..pairs.len())
            .filter(|e| mask >> e & 1 == 1)
            .map(|e| pairs[e])
            .collect();
        let g = LabeledGraph::from_edges(n, &edges).unwrap();
        if !g.is_connected() {
            continue;
        }
        if seen.insert(canonical(mask, &pairs, &index, &perms)) {
            out.push(g);
        }
    }
    out
}

fn glauber_correctness() -> Outcome {
    let mut graphs: Vec<LabeledGraph> = Vec::new();
    let mut class_sizes = Vec::new();
    for n in 1..=6 {
        let gs = connected_graphs(n);
        class_sizes.push(gs.len());
        graphs.extend(gs);
    }
    let mut added = 0;
    let mut rng = stream(77);
    while added < 20 {
        let g = LabeledGraph::gnp(8, 0.35, &mut rng);
        if g.is_connected() {
            graphs.push(g);
            added += 1;
        }
    }
    let samples = 100_000;
    let mut cases = 0;
    let mut passing = 0;
    let mut worst = 1.0f64;
    for (gi, g) in graphs.iter().enumerate() {
        for (li, &lambda) in [0.3, 1.0].iter().enumerate() {
            let probs = configuration_probabilities(g, lambda).unwrap();
            let steps = default_glauber_steps(g.n(), 0.01, 20.0);
            let mut counts = vec![0u64; probs.len()];
            let mut rng = replicate_stream(7000 + li as u64, gi as u64);
            for _ in 0..samples {
                let c = glauber_sample(g, lambda, steps, &mut rng, None).unwrap();
                counts[c.to_mask() as usize] += 1;
            }
            let r = chi_square_gof(&counts, &probs, 5.0);
            cases += 1;
            worst = worst.min(r.p_value);
            if r.p_value > 0.01 {
                passing += 1;
            }
        }
    }
    let frac = passing as f64 / cases as f64;
    let classes_ok = class_sizes == [1, 1, 2, 6, 21, 112];
    outcome(
        frac >= 0.95 && classes_ok,
        format!(
            "{passing}/{cases} cases with p > 0.01 ({:.1}%), smallest p {worst:.2e}, connected classes {class_sizes:?}",
            100.0 * frac
        ),
    )
}

fn exact_small_values() -> Outcome {
    let c3 = critical_fugacity(3).unwrap();
    let c4 = critical_fugacity(4).unwrap();
    let k3 = LabeledGraph::complete(3);
    let weitz = weitz_layer_counts(&k3, 0, &id_ordering(&k3), 2, 1000)
        .unwrap()
        .counts;
    let saw = saw_layer_counts(&k3, 0, 2, 1000).unwrap().counts;
    let mut pwcc_ok = true;
    let mut notes = Vec::new();
    let potentials = [
        (PotentialSpec::HardSphere { r: 0.1 }, 2),
        (PotentialSpec::GaussianOverlap { eps: 1.0, sigma: 0.2 }, 2),
        (
            PotentialSpec::HardCoreYukawa {
                hard_radius: 0.05,
                eps: 1.0,
                kappa: 5.0,
            },
            3,
        ),
    ];
    for (i, (pot, d)) in potentials.iter().enumerate() {
        let c = pot.temperedness_constant(*d).unwrap();
        let e = pwcc_k(pot, *d, 1, 1_000_000, &mut stream(80 + i as u64)).unwrap();
        let se = e.std_error.unwrap_or(0.0);
        let ok = (e.value - c).abs() <= (4.0 * se).max(1e-9 * c);
        pwcc_ok &= ok;
        notes.push(format!("{:.5}/{:.5}", e.value, c));
    }
    let ok = c3 == 4.0 && c4 == 1.6875 && weitz == [1, 2, 1] && saw == [1, 2, 2] && pwcc_ok;
    outcome(
        ok,
        format!(
            "lambda_c(3) = {c3}, lambda_c(4) = {c4}, K3 Weitz {weitz:?}, SAW {saw:?}, pwcc_1/C {}",
            notes.join(" ")
        ),
    )
}

fn connective() -> Outcome {
    let mut spec = ExperimentSpec::new(ExperimentKind::Connective, 99);
    spec.instance = Some(GppInstance {
        region: Region::new(vec![6.0, 6.0], Boundary::Open).unwrap(),
        potential: PotentialSpec::HardSphere { r: 0.15 },
        lambda: 1.0,
    });
    spec.n = Some(300);
    spec.trials = 50;
    let s = experiments::run_connective(&spec).unwrap();
    outcome(
        s.passed,
        format!(
            "{}/{} graphs pass ({:.0}%), m = {}, Delta = {:.4}, c = {:.3e}",
            s.passing,
            s.graphs,
            100.0 * s.pass_fraction,
            s.m,
            s.delta,
            s.c
        ),
    )
}

fn ssm_decay() -> Outcome {
    let mut spec = ExperimentSpec::new(ExperimentKind::Ssm, 10);
    spec.ssm.path_lengths = vec![14, 17, 20];
    spec.ssm.lambda = 0.5;
    spec.ssm.s_max = 6;
    let s = experiments::run_ssm(&spec).unwrap();
    let detail: Vec<String> = s
        .graphs
        .iter()
        .map(|g| {
            let gaps: Vec<String> = g.gaps.iter().map(|(_, x)| format!("{x:.2e}")).collect();
            format!("{}: [{}]", g.label, gaps.join(", "))
        })
        .collect();
    let covers = s.graphs.iter().all(|g| g.gaps.iter().map(|&(s, _)| s).eq(1..=6));
    outcome(s.passed && covers, detail.join("; "))
}

/// Number, name, runtime budget in seconds, check.
type Criterion = (usize, &'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "Poisson identity", 5, poisson_identity),
        (2, "lemma suite", 60, lemma_suite),
        (3, "expected partition identity", 120, expected_partition),
        (4, "concentration", 300, concentration),
        (5, "approximation end to end", 600, approximation),
        (6, "sampler validation", 600, sampler_validation),
        (7, "Glauber correctness", 900, glauber_correctness),
        (8, "exact small values", 60, exact_small_values),
        (9, "connective constant growth", 1200, connective),
        (10, "SSM decay", 60, ssm_decay),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, limit, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let passed = o.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1} s of {limit} s]",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}

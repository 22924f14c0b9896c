//! Fixtures shared by the benchmarks in `benches/`.

use gibbsgraph_core::gpp::GppInstance;
use gibbsgraph_core::graph::sample_graph_seeded;
use gibbsgraph_core::{Boundary, LabeledGraph, PotentialSpec, Region};

/// Hard rods of length 0.2 on `[0, 4]` at `lambda = 1`.
pub fn rods() -> GppInstance {
    GppInstance {
        region: Region::new(vec![4.0], Boundary::Open).expect("valid region"),
        potential: PotentialSpec::HardSphere { r: 0.1 },
        lambda: 1.0,
    }
}

/// Hard disks of radius 0.15 in `[0, 6]^2` at `lambda = 1`.
pub fn disks() -> GppInstance {
    GppInstance {
        region: Region::new(vec![6.0, 6.0], Boundary::Open).expect("valid region"),
        potential: PotentialSpec::HardSphere { r: 0.15 },
        lambda: 1.0,
    }
}

/// Soft Gaussian overlap in `[0, 3]^2` at `lambda = 1`.
pub fn gaussian() -> GppInstance {
    GppInstance {
        region: Region::new(vec![3.0, 3.0], Boundary::Open).expect("valid region"),
        potential: PotentialSpec::GaussianOverlap { eps: 1.0, sigma: 0.2 },
        lambda: 1.0,
    }
}

/// A seeded graph `D(n, V, phi)` of `instance`.
pub fn graph(instance: &GppInstance, n: usize, seed: u64) -> LabeledGraph {
    sample_graph_seeded(&instance.region, &instance.potential, n, seed).expect("graph samples")
}

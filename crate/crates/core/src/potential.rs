//! Repulsive pair potentials.
//!
//! Every registered family is a function of distance only, nonnegative and
//! nonincreasing in distance. `f64::INFINITY` encodes a hard core and
//! `exp(-inf)` is taken to be exactly zero.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Region};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
#[serde(try_from = "RawPotential", into = "RawPotential")]
pub enum PotentialSpec {
    Zero,
    /// Spheres of radius `r`: infinite below distance `2r`, zero above.
    HardSphere {
        r: f64,
    },
    /// `eps * exp(-(d / sigma)^2)`
    GaussianOverlap {
        eps: f64,
        sigma: f64,
    },
    /// `eps * exp(-(d / sigma)^p)`
    GeneralizedExponential {
        eps: f64,
        sigma: f64,
        p: f64,
    },
    /// Infinite below `hard_radius`, `eps * exp(-kappa d) / d` above.
    HardCoreYukawa {
        hard_radius: f64,
        eps: f64,
        kappa: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum RawPotential {
    Zero,
    HardSphere { r: f64 },
    GaussianOverlap { eps: f64, sigma: f64 },
    GeneralizedExponential { eps: f64, sigma: f64, p: f64 },
    HardCoreYukawa { hard_radius: f64, eps: f64, kappa: f64 },
}

impl TryFrom<RawPotential> for PotentialSpec {
    type Error = Error;

    fn try_from(raw: RawPotential) -> Result<Self> {
        let spec = match raw {
            RawPotential::Zero => PotentialSpec::Zero,
            RawPotential::HardSphere { r } => PotentialSpec::HardSphere { r },
            RawPotential::GaussianOverlap { eps, sigma } => PotentialSpec::GaussianOverlap { eps, sigma },
            RawPotential::GeneralizedExponential { eps, sigma, p } => {
                PotentialSpec::GeneralizedExponential { eps, sigma, p }
            }
            RawPotential::HardCoreYukawa {
                hard_radius,
                eps,
                kappa,
            } => PotentialSpec::HardCoreYukawa {
                hard_radius,
                eps,
                kappa,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<PotentialSpec> for RawPotential {
    fn from(p: PotentialSpec) -> Self {
        match p {
            PotentialSpec::Zero => RawPotential::Zero,
            PotentialSpec::HardSphere { r } => RawPotential::HardSphere { r },
            PotentialSpec::GaussianOverlap { eps, sigma } => RawPotential::GaussianOverlap { eps, sigma },
            PotentialSpec::GeneralizedExponential { eps, sigma, p } => {
                RawPotential::GeneralizedExponential { eps, sigma, p }
            }
            PotentialSpec::HardCoreYukawa {
                hard_radius,
                eps,
                kappa,
            } => RawPotential::HardCoreYukawa {
                hard_radius,
                eps,
                kappa,
            },
        }
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {x}")))
    }
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
}

/// Surface area of the unit sphere in `d` dimensions (2 for `d = 1`).
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::HardSphere { r } => positive("r", r),
            PotentialSpec::GaussianOverlap { eps, sigma } => {
                positive("eps", eps)?;
                positive("sigma", sigma)
            }
            PotentialSpec::GeneralizedExponential { eps, sigma, p } => {
                positive("eps", eps)?;
                positive("sigma", sigma)?;
                positive("p", p)
            }
            PotentialSpec::HardCoreYukawa {
                hard_radius,
                eps,
                kappa,
            } => {
                if !(hard_radius.is_finite() && hard_radius >= 0.0) {
                    return Err(invalid("hard_radius", "must be nonnegative and finite"));
                }
                positive("eps", eps)?;
                positive("kappa", kappa)
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::HardSphere { .. } => "hard_sphere",
            PotentialSpec::GaussianOverlap { .. } => "gaussian_overlap",
            PotentialSpec::GeneralizedExponential { .. } => "generalized_exponential",
            PotentialSpec::HardCoreYukawa { .. } => "hard_core_yukawa",
        }
    }

    /// Potential value at distance `d`.
    #[inline]
    pub fn phi_at(&self, d: f64) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::HardSphere { r } => {
                if d < 2.0 * r {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PotentialSpec::GaussianOverlap { eps, sigma } => {
                let t = d / sigma;
                eps * (-t * t).exp()
            }
            PotentialSpec::GeneralizedExponential { eps, sigma, p } => eps * (-(d / sigma).powf(p)).exp(),
            PotentialSpec::HardCoreYukawa {
                hard_radius,
                eps,
                kappa,
            } => {
                if d < hard_radius || d == 0.0 {
                    f64::INFINITY
                } else {
                    eps * (-kappa * d).exp() / d
                }
            }
        }
    }

    /// `1 - exp(-phi(d))`, exactly 1 for a hard core and exactly 0 for no
    /// interaction.
    #[inline]
    pub fn edge_probability_at(&self, d: f64) -> f64 {
        boltzmann_complement(self.phi_at(d))
    }

    /// `phi(p, q)` for points of `region`.
    pub fn phi(&self, region: &Region, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.phi_at(region.distance(p, q)?))
    }

    pub fn edge_probability(&self, region: &Region, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.edge_probability_at(region.distance(p, q)?))
    }

    /// Whether every edge probability is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, PotentialSpec::Zero | PotentialSpec::HardSphere { .. })
    }

    /// Largest distance at which the edge probability is nonzero, if finite.
    pub fn range(&self) -> Option<f64> {
        match *self {
            PotentialSpec::Zero => Some(0.0),
            PotentialSpec::HardSphere { r } => Some(2.0 * r),
            _ => None,
        }
    }

    /// Length scale used to start the radial quadrature.
    fn length_scale(&self) -> f64 {
        match *self {
            PotentialSpec::Zero => 1.0,
            PotentialSpec::HardSphere { r } => 2.0 * r,
            PotentialSpec::GaussianOverlap { sigma, .. }
            | PotentialSpec::GeneralizedExponential { sigma, .. } => sigma,
            PotentialSpec::HardCoreYukawa {
                hard_radius, kappa, ..
            } => hard_radius.max(1.0 / kappa),
        }
    }

    /// Radial integrand `S_d * rho^(d-1) * (1 - exp(-phi(rho)))`.
    fn radial_density(&self, d: usize, rho: f64) -> f64 {
        let shell = if d == 1 { 1.0 } else { rho.powi(d as i32 - 1) };
        unit_sphere_area(d) * shell * self.edge_probability_at(rho)
    }

    /// Radius beyond which the radial integrand carries negligible mass, and
    /// the breakpoints at which it may be discontinuous.
    fn radial_support(&self, d: usize) -> Result<(f64, Vec<f64>)> {
        match *self {
            PotentialSpec::Zero => Ok((0.0, vec![])),
            PotentialSpec::HardSphere { r } => Ok((2.0 * r, vec![])),
            _ => {
                let scale = self.length_scale();
                let mut rmax = scale;
                // Grow until the integrand times the radius is negligible.
                for _ in 0..200 {
                    let tail = self.radial_density(d, rmax) * rmax;
                    if tail < 1e-17 * unit_sphere_area(d) * scale.powi(d as i32) {
                        let breaks = match *self {
                            PotentialSpec::HardCoreYukawa { hard_radius, .. } if hard_radius > 0.0 => {
                                vec![hard_radius]
                            }
                            _ => vec![],
                        };
                        return Ok((rmax, breaks));
                    }
                    rmax *= 1.5;
                }
                Err(Error::Divergent(format!(
                    "{} integrand does not decay",
                    self.family()
                )))
            }
        }
    }

    /// `C_phi = integral over R^d of (1 - exp(-phi(|y|))) dy`.
    ///
    /// Closed form for hard spheres; otherwise adaptive radial quadrature.
    /// This is the free-space constant, an upper bound on the supremum over
    /// points of a bounded box.
    pub fn temperedness_constant(&self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        match *self {
            PotentialSpec::Zero => Ok(0.0),
            PotentialSpec::HardSphere { r } => Ok(unit_ball_volume(d) * (2.0 * r).powi(d as i32)),
            _ => {
                let (rmax, breaks) = self.radial_support(d)?;
                let mut knots = vec![0.0];
                knots.extend(breaks.into_iter().filter(|b| *b < rmax));
                knots.push(rmax);
                let f = |rho: f64| self.radial_density(d, rho);
                let mut total = 0.0;
                for w in knots.windows(2) {
                    total += integrate(&f, w[0], w[1], 1e-10);
                }
                if !total.is_finite() {
                    return Err(Error::Divergent(self.family().to_string()));
                }
                Ok(total)
            }
        }
    }

    /// Exact sampler for the normalized density `(1 - exp(-phi(|y|))) / C_phi`
    /// on `R^d`.
    pub fn interaction_sampler(&self, d: usize) -> Result<InteractionSampler> {
        InteractionSampler::new(self.clone(), d)
    }
}

/// `1 - exp(-phi)` with the conventions for 0 and infinity.
#[inline]
pub fn boltzmann_complement(phi: f64) -> f64 {
    if phi == f64::INFINITY {
        1.0
    } else if phi <= 0.0 {
        0.0
    } else {
        -(-phi).exp_m1()
    }
}

/// `exp(-phi)` with `exp(-inf) = 0`.
#[inline]
pub fn boltzmann(phi: f64) -> f64 {
    if phi == f64::INFINITY {
        0.0
    } else {
        (-phi).exp()
    }
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature with relative tolerance `rel_tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // Coarse pass to fix an absolute tolerance, then refine per panel.
    let panels = 64;
    let h = (b - a) / panels as f64;
    let coarse: f64 = (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1))
        })
        .sum();
    let abs_tol = (rel_tol * coarse.abs()).max(1e-300) / panels as f64;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(f, x0, x1, f0, fm, f1, whole, abs_tol, 40)
        })
        .sum()
}

/// Draws displacement vectors `y` with density `(1 - exp(-phi(|y|))) / C_phi`.
///
/// The radius is drawn by rejection from a piecewise-constant envelope, which
/// is valid because every registered edge probability is nonincreasing in
/// distance; the direction is uniform on the sphere.
#[derive(Clone, Debug)]
pub struct InteractionSampler {
    potential: PotentialSpec,
    dim: usize,
    total: f64,
    edges: Vec<f64>,
    heights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl InteractionSampler {
    const BINS: usize = 2048;

    fn new(potential: PotentialSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        let total = potential.temperedness_constant(dim)?;
        if total <= 0.0 {
            return Ok(InteractionSampler {
                potential,
                dim,
                total,
                edges: vec![],
                heights: vec![],
                cumulative: vec![],
            });
        }
        let (rmax, breaks) = potential.radial_support(dim)?;
        let mut edges: Vec<f64> = (0..=Self::BINS)
            .map(|i| rmax * i as f64 / Self::BINS as f64)
            .chain(breaks.into_iter().filter(|b| *b > 0.0 && *b < rmax))
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let area = unit_sphere_area(dim);
        let mut heights = Vec::with_capacity(edges.len() - 1);
        let mut cumulative = Vec::with_capacity(edges.len() - 1);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            // Upper bound on the radial density within [a, b].
            let shell = if dim == 1 { 1.0 } else { b.powi(dim as i32 - 1) };
            let h = area * shell * potential.edge_probability_at(a);
            heights.push(h);
            acc += h * (b - a);
            cumulative.push(acc);
        }
        Ok(InteractionSampler {
            potential,
            dim,
            total,
            edges,
            heights,
            cumulative,
        })
    }

    /// `C_phi` as used by this sampler.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        assert!(self.total > 0.0, "no interaction mass to sample from");
        let mass = *self.cumulative.last().unwrap();
        loop {
            let u = rng.random::<f64>() * mass;
            let bin = self
                .cumulative
                .partition_point(|c| *c <= u)
                .min(self.heights.len() - 1);
            let (a, b) = (self.edges[bin], self.edges[bin + 1]);
            let rho = a + rng.random::<f64>() * (b - a);
            let density = self.potential.radial_density(self.dim, rho);
            if rng.random::<f64>() * self.heights[bin] <= density {
                return rho;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let rho = self.sample_radius(rng);
        let mut dir = random_direction(self.dim, rng);
        dir.iter_mut().for_each(|x| *x *= rho);
        dir
    }
}

/// Uniform unit vector.
pub(crate) fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    if d == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rand_distr_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Standard normal variate by Box-Muller.
fn rand_distr_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

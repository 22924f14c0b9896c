//! Monte Carlo oracle for the partition function series.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GppInstance;
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::hardcore::Estimate;
use crate::rng::replicate_stream;
use crate::stats::{ln_binomial, ln_factorial};

/// Hamiltonians above this are treated as infinite: `exp(-800)` underflows.
const H_CUTOFF: f64 = 800.0;

/// The closed box `[lo, lo + sides]`; a zero side makes it empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubBox {
    pub lo: Point,
    pub sides: Vec<f64>,
}

impl SubBox {
    pub fn new(lo: Point, sides: Vec<f64>) -> Self {
        SubBox { lo, sides }
    }

    pub fn is_empty(&self) -> bool {
        self.sides.iter().any(|s| *s <= 0.0)
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        !self.is_empty()
            && x.iter()
                .zip(self.lo.coords())
                .zip(&self.sides)
                .all(|((x, a), s)| *x >= *a && *x <= a + s)
    }
}

/// Per-order integrals `I_k`, `k = 0..=m`, with Monte Carlo standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSeries {
    pub lambda: f64,
    pub volume: f64,
    pub integrals: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples_per_order: usize,
    /// Bound on the omitted terms `k > m`.
    pub tail_bound: f64,
}

impl OracleSeries {
    pub fn truncation(&self) -> usize {
        self.integrals.len() - 1
    }

    fn weight(&self, k: usize) -> f64 {
        if self.lambda == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        (k as f64 * self.lambda.ln() - ln_factorial(k as u64)).exp()
    }

    /// Truncated series `sum_{k <= m} lambda^k / k! * I_k`.
    pub fn xi(&self) -> f64 {
        self.integrals
            .iter()
            .enumerate()
            .map(|(k, i)| self.weight(k) * i)
            .sum()
    }

    pub fn xi_std_error(&self) -> f64 {
        self.std_errors
            .iter()
            .enumerate()
            .map(|(k, s)| (self.weight(k) * s).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        let value = self.xi();
        let se = self.xi_std_error();
        Estimate {
            value,
            rel_error_target: (3.0 * se + self.tail_bound) / value,
            confidence: 0.997,
            replicates: self.samples_per_order,
            std_error: Some(se),
            tail_bound: Some(self.tail_bound),
            valid: true,
            reason: None,
        }
    }

    /// Law of the number of points, `Pr[N = k] = lambda^k I_k / (k! Xi)`,
    /// restricted to `k <= m`.
    pub fn count_law(&self) -> Vec<f64> {
        let xi = self.xi();
        self.integrals
            .iter()
            .enumerate()
            .map(|(k, i)| self.weight(k) * i / xi)
            .collect()
    }
}

/// Truncation order `max(ceil(e^3 lambda vol), ceil(ln(2 / eps)))`.
pub fn default_truncation(instance: &GppInstance, eps: f64) -> usize {
    let a = (3f64.exp() * instance.lambda_volume()).ceil();
    let b = (2.0 / eps).ln().ceil();
    a.max(b).max(0.0) as usize
}

/// `e^{x} x^{m+1} / (m+1)!` for `x = lambda vol`.
fn tail_bound(lambda_volume: f64, m: usize) -> f64 {
    if lambda_volume == 0.0 {
        return 0.0;
    }
    let k = (m + 1) as u64;
    (lambda_volume + k as f64 * lambda_volume.ln() - ln_factorial(k)).exp()
}

struct OrderSums {
    all: (f64, f64),
    avoiding: (f64, f64),
}

fn order_sums(
    instance: &GppInstance,
    k: usize,
    samples: usize,
    avoid: Option<&SubBox>,
    seed: u64,
) -> OrderSums {
    let mut rng = replicate_stream(seed, k as u64);
    let region = &instance.region;
    let pot = &instance.potential;
    let mut pts: Vec<Point> = Vec::with_capacity(k);
    let mut all = (0.0, 0.0);
    let mut avoiding = (0.0, 0.0);
    for _ in 0..samples {
        pts.clear();
        let mut h = 0.0;
        for _ in 0..k {
            let x = region.sample_uniform(&mut rng);
            for y in &pts {
                h += pot.phi_at(region.distance_unchecked(x.coords(), y.coords()));
            }
            if h > H_CUTOFF {
                break;
            }
            pts.push(x);
        }
        if h > H_CUTOFF {
            continue;
        }
        let w = (-h).exp();
        all.0 += w;
        all.1 += w * w;
        if let Some(b) = avoid {
            if !pts.iter().any(|p| b.contains(p.coords())) {
                avoiding.0 += w;
                avoiding.1 += w * w;
            }
        }
    }
    OrderSums { all, avoiding }
}

fn to_series(instance: &GppInstance, sums: &[(f64, f64)], samples: usize, m: usize) -> OracleSeries {
    let vol = instance.volume();
    let s = samples as f64;
    let mut integrals = vec![1.0];
    let mut std_errors = vec![0.0];
    for (k, (s1, s2)) in sums.iter().enumerate() {
        let k = k + 1;
        let mean = s1 / s;
        let var = if samples > 1 {
            ((s2 / s - mean * mean) * s / (s - 1.0)).max(0.0)
        } else {
            0.0
        };
        let scale = vol.powi(k as i32);
        integrals.push(mean * scale);
        std_errors.push((var / s).sqrt() * scale);
    }
    OracleSeries {
        lambda: instance.lambda,
        volume: vol,
        integrals,
        std_errors,
        samples_per_order: samples,
        tail_bound: tail_bound(instance.lambda_volume(), m),
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(invalid("samples_per_order", "must be at least 1"));
    }
    Ok(())
}

/// Estimates `I_1..I_m` by averaging `exp(-H)` over uniform `k`-tuples.
pub fn oracle_series<R: Rng + ?Sized>(
    instance: &GppInstance,
    m: usize,
    samples_per_order: usize,
    rng: &mut R,
) -> Result<OracleSeries> {
    check_samples(samples_per_order)?;
    let seed: u64 = rng.random();
    let sums: Vec<(f64, f64)> = (1..=m)
        .into_par_iter()
        .map(|k| order_sums(instance, k, samples_per_order, None, seed).all)
        .collect();
    Ok(to_series(instance, &sums, samples_per_order, m))
}

/// `Xi` truncated at order `m`, with its standard error and tail bound.
pub fn oracle_partition<R: Rng + ?Sized>(
    instance: &GppInstance,
    m: usize,
    samples_per_order: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if instance.lambda == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    Ok(oracle_series(instance, m, samples_per_order, rng)?.estimate())
}

/// `Pr[no point in B] = Xi_{V \ B} / Xi_V`. Both series are estimated from
/// the same tuples; tuples with a point in `B` count only in the
/// denominator.
pub fn void_probability_oracle<R: Rng + ?Sized>(
    instance: &GppInstance,
    sub_box: &SubBox,
    m: usize,
    samples_per_order: usize,
    rng: &mut R,
) -> Result<Estimate> {
    check_samples(samples_per_order)?;
    if sub_box.lo.dim() != instance.region.dim() || sub_box.sides.len() != instance.region.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.region.dim(),
            actual: sub_box.lo.dim(),
        });
    }
    if !instance.region.contains_box(&sub_box.lo, &sub_box.sides) {
        return Err(Error::NotContained);
    }
    if sub_box.is_empty() || instance.lambda == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let seed: u64 = rng.random();
    let sums: Vec<OrderSums> = (1..=m)
        .into_par_iter()
        .map(|k| order_sums(instance, k, samples_per_order, Some(sub_box), seed))
        .collect();
    let all: Vec<(f64, f64)> = sums.iter().map(|s| s.all).collect();
    let avoiding: Vec<(f64, f64)> = sums.iter().map(|s| s.avoiding).collect();
    let den = to_series(instance, &all, samples_per_order, m);
    let num = to_series(instance, &avoiding, samples_per_order, m);
    let (n, d) = (num.xi(), den.xi());
    let ratio = n / d;
    let rel = ((num.xi_std_error() / n).powi(2) + (den.xi_std_error() / d).powi(2)).sqrt();
    Ok(Estimate {
        value: ratio,
        rel_error_target: 0.0,
        confidence: 0.997,
        replicates: samples_per_order,
        std_error: Some(ratio * rel),
        tail_bound: Some(2.0 * den.tail_bound / d),
        valid: true,
        reason: None,
    })
}

/// `E[Z_G(lambda vol / n)] = sum_k C(n, k) (lambda vol / n)^k I_k / vol^k`
/// over `G ~ D(n, V, phi)`, with its standard error.
pub fn expected_hardcore_partition(series: &OracleSeries, n: usize) -> (f64, f64) {
    let lv = series.lambda * series.volume;
    let mut value = 0.0;
    let mut var = 0.0;
    for (k, (i, s)) in series.integrals.iter().zip(&series.std_errors).enumerate() {
        if k > n {
            break;
        }
        let w = if k == 0 {
            1.0
        } else {
            (ln_binomial(n as u64, k as u64) + k as f64 * (lv / n as f64).ln()
                - k as f64 * series.volume.ln())
            .exp()
        };
        value += w * i;
        var += (w * s).powi(2);
    }
    (value, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Boundary, Region};
    use crate::potential::PotentialSpec;
    use crate::rng::stream;

    fn rods(l: f64, r: f64, lambda: f64) -> GppInstance {
        GppInstance::new(
            Region::new(vec![l], Boundary::Open).unwrap(),
            PotentialSpec::HardSphere { r },
            lambda,
        )
        .unwrap()
    }

    /// Volume of `{x in [0, l]^k : |x_i - x_j| >= s}` (hard rods).
    fn tonks(l: f64, s: f64, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        (l - (k as f64 - 1.0) * s).max(0.0).powi(k as i32)
    }

    #[test]
    fn zero_potential_gives_exponential() {
        let inst = GppInstance::new(
            Region::new(vec![2.0], Boundary::Open).unwrap(),
            PotentialSpec::Zero,
            1.0,
        )
        .unwrap();
        let m = default_truncation(&inst, 1e-3).max(12);
        let e = oracle_partition(&inst, m, 10, &mut stream(1)).unwrap();
        assert_eq!(e.std_error, Some(0.0));
        let err = (e.value - 2f64.exp()).abs();
        assert!(err <= e.error_band(3.0) + 1e-12, "{err} vs {:?}", e);
    }

    #[test]
    fn second_order_rods() {
        let inst = rods(1.0, 0.1, 1.0);
        let s = oracle_series(&inst, 2, 400_000, &mut stream(2)).unwrap();
        assert_eq!(s.integrals[1], 1.0);
        assert!((s.integrals[2] - 0.64).abs() < 4.0 * s.std_errors[2]);
        assert!((s.xi() - 2.32).abs() < 4.0 * s.xi_std_error());
    }

    #[test]
    fn rods_against_closed_form() {
        let inst = rods(1.0, 0.1, 1.0);
        let m = default_truncation(&inst, 0.01);
        let s = oracle_series(&inst, m, 200_000, &mut stream(3)).unwrap();
        for k in 0..=5 {
            let t = tonks(1.0, 0.2, k);
            assert!(
                (s.integrals[k] - t).abs() <= 4.0 * s.std_errors[k] + 1e-12,
                "k = {k}: {} vs {t}",
                s.integrals[k]
            );
        }
        let exact: f64 = (0..=m)
            .map(|k| tonks(1.0, 0.2, k) / (1..=k).map(|i| i as f64).product::<f64>())
            .sum();
        assert!((s.xi() - exact).abs() <= 4.0 * s.xi_std_error() + s.tail_bound);
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(tail_bound(0.0, 3), 0.0);
        let t = tail_bound(1.0, 1);
        assert!((t - std::f64::consts::E / 2.0).abs() < 1e-12);
    }

    #[test]
    fn void_probability_trivial_cases() {
        let inst = rods(2.0, 0.1, 1.0);
        let empty = SubBox::new(Point::new(vec![0.5]), vec![0.0]);
        assert_eq!(
            void_probability_oracle(&inst, &empty, 10, 10, &mut stream(1))
                .unwrap()
                .value,
            1.0
        );
        let outside = SubBox::new(Point::new(vec![1.5]), vec![1.0]);
        assert!(matches!(
            void_probability_oracle(&inst, &outside, 10, 10, &mut stream(1)),
            Err(Error::NotContained)
        ));
        let whole = SubBox::new(Point::new(vec![0.0]), vec![2.0]);
        let m = default_truncation(&inst, 0.01);
        let v = void_probability_oracle(&inst, &whole, m, 50_000, &mut stream(4)).unwrap();
        let xi = oracle_partition(&inst, m, 50_000, &mut stream(4)).unwrap();
        assert!((v.value - 1.0 / xi.value).abs() < 1e-12);
    }

    #[test]
    fn poisson_voids() {
        let inst = GppInstance::new(
            Region::new(vec![2.0], Boundary::Open).unwrap(),
            PotentialSpec::Zero,
            1.0,
        )
        .unwrap();
        let b = SubBox::new(Point::new(vec![0.25]), vec![0.5]);
        let v = void_probability_oracle(&inst, &b, 20, 100_000, &mut stream(5)).unwrap();
        let want = (-0.5f64).exp();
        assert!((v.value - want).abs() <= v.error_band(4.0), "{v:?}");
    }

    #[test]
    fn expected_partition_for_edgeless_graphs() {
        let inst = GppInstance::new(
            Region::new(vec![2.0], Boundary::Open).unwrap(),
            PotentialSpec::Zero,
            1.0,
        )
        .unwrap();
        let s = oracle_series(&inst, 10, 4, &mut stream(1)).unwrap();
        let (v, se) = expected_hardcore_partition(&s, 10);
        assert_eq!(se, 0.0);
        assert!((v - 1.2f64.powi(10)).abs() < 1e-9);
    }
}

//! Small statistics toolkit used by the validators.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Poisson};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Kolmogorov survival function `Pr[K > t]`.
fn kolmogorov_sf(t: f64) -> f64 {
    if t < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * t * t).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS test.
pub fn ks_test(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let d = ks_statistic(xs, cdf);
    let sn = (xs.len() as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// Two-sample KS test; returns `(statistic, p-value)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    (d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d))
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band at confidence `1 - alpha`.
pub fn dkw_epsilon(samples: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}

/// Total variation distance between two finite laws (shorter one zero padded).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Normalized histogram of nonnegative integer observations.
pub fn empirical_pmf(counts: &[usize]) -> Vec<f64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut h = vec![0.0; max + 1];
    for c in counts {
        h[*c] += 1.0;
    }
    let n = counts.len().max(1) as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

pub fn cumulative(pmf: &[f64]) -> Vec<f64> {
    pmf.iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit test of observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled
/// into one cell (and that pooled cell is folded into its predecessor if it
/// is still too small).
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareResult {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probs) {
        let e = p * total;
        if e >= min_expected {
            cells.push((*o as f64, e));
        } else {
            pooled.0 += *o as f64;
            pooled.1 += e;
        }
    }
    if pooled.1 > 0.0 || pooled.0 > 0.0 {
        if pooled.1 >= min_expected || cells.is_empty() {
            cells.push(pooled);
        } else {
            let last = cells.last_mut().unwrap();
            last.0 += pooled.0;
            last.1 += pooled.1;
        }
    }
    let statistic: f64 = cells
        .iter()
        .map(|(o, e)| {
            if *e > 0.0 {
                (o - e) * (o - e) / e
            } else if *o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        if statistic.is_finite() {
            1.0
        } else {
            0.0
        }
    } else {
        let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - chi.cdf(statistic)
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value,
    }
}

pub fn binomial_cdf(trials: u64, p: f64, k: u64) -> f64 {
    Binomial::new(p.clamp(0.0, 1.0), trials)
        .map(|b| b.cdf(k))
        .unwrap_or(f64::NAN)
}

pub fn poisson_cdf(mean: f64, k: u64) -> f64 {
    if mean <= 0.0 {
        return 1.0;
    }
    Poisson::new(mean).map(|p| p.cdf(k)).unwrap_or(f64::NAN)
}

/// Probability mass of Binomial(trials, p) at `k`, computed in log space.
pub fn binomial_pmf(trials: u64, p: f64, k: u64) -> f64 {
    if k > trials {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == trials { 1.0 } else { 0.0 };
    }
    (ln_binomial(trials, k) + k as f64 * p.ln() + (trials - k) as f64 * (-p).ln_1p()).exp()
}

pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

/// Result of comparing an empirical CDF with a reference CDF that should lie
/// (weakly) below it.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationCheck {
    pub band: f64,
    /// Largest value of `reference(k) - empirical(k)` over all `k`.
    pub worst_excess: f64,
    pub holds: bool,
}

/// Checks `empirical_cdf(k) >= reference_cdf(k) - band` for all `k`.
pub fn check_domination(samples: &[usize], reference_cdf: impl Fn(u64) -> f64, band: f64) -> DominationCheck {
    let ecdf = cumulative(&empirical_pmf(samples));
    let max = ecdf.len().max(1);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..max + 1 {
        let e = ecdf.get(k).copied().unwrap_or(1.0);
        worst = worst.max(reference_cdf(k as u64) - e);
    }
    DominationCheck {
        band,
        worst_excess: worst,
        holds: worst <= band,
    }
}

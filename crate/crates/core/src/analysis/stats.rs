//! Goodness-of-fit statistics.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Outcome of a Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome {
    /// `sup |F_n - F|` (one sample) or `sup |F_n - G_m|` (two samples).
    pub statistic: f64,
    /// Effective sample size: `n`, or `nm / (n + m)`.
    pub effective_n: f64,
    pub p_value: f64,
}

impl KsOutcome {
    fn new(statistic: f64, effective_n: f64) -> Self {
        Self {
            statistic,
            effective_n,
            p_value: kolmogorov_sf(scaled_statistic(statistic, effective_n)),
        }
    }

    /// Critical value of the statistic at level `alpha`.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        ks_critical_value(alpha, self.effective_n)
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Stephens' finite-sample scaling `(√n + 0.12 + 0.11/√n) D`.
fn scaled_statistic(d: f64, n: f64) -> f64 {
    let r = n.sqrt();
    (r + 0.12 + 0.11 / r) * d
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // theta-transformed series converges fast for small λ
        let c = PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// Smallest `D` with `P(K > (√n + 0.12 + 0.11/√n) D) ≤ alpha`.
pub fn ks_critical_value(alpha: f64, effective_n: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = effective_n.sqrt();
    hi / (r + 0.12 + 0.11 / r)
}

/// One-sample test of `sample` against the continuous CDF `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsOutcome> {
    if sample.is_empty() {
        return Err(Error::invalid("KS test needs a non-empty sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsOutcome::new(d, n))
}

/// Two-sample test; ties are handled by advancing both samples together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS test needs non-empty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsOutcome::new(d, n * m / (n + m)))
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// CDF on `(-π, π]` of a centred normal with variance `var` wrapped onto
/// the circle: an image sum for `var < 1`, the Fourier series
/// `(x + π)/2π + Σ_k e^{-k² var/2} sin(kx) / (kπ)` otherwise.
pub fn wrapped_normal_cdf(x: f64, var: f64) -> f64 {
    if x <= -PI {
        return 0.0;
    }
    if x >= PI {
        return 1.0;
    }
    if var >= 1.0 {
        let k_max = (80.0 / var).sqrt().ceil() as usize + 1;
        let series: f64 = (1..=k_max)
            .map(|k| {
                let k = k as f64;
                (-k * k * var / 2.0).exp() * (k * x).sin() / k
            })
            .sum();
        return ((x + PI) / (2.0 * PI) + series / PI).clamp(0.0, 1.0);
    }
    let s = var.sqrt();
    (-1i64..=1)
        .map(|k| {
            let shift = 2.0 * PI * k as f64;
            normal_cdf((x + shift) / s) - normal_cdf((-PI + shift) / s)
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Pearson correlation of consecutive pairs `(x_k, x_{k+1})` pooled over
/// independent sequences, with the pooled mean and variance. Returns
/// `(r, pairs)`.
pub fn lag1_correlation(sequences: &[Vec<f64>]) -> (f64, usize) {
    let (mut n, mut sum) = (0usize, 0.0);
    for s in sequences {
        n += s.len();
        sum += s.iter().sum::<f64>();
    }
    if n == 0 {
        return (0.0, 0);
    }
    let mean = sum / n as f64;
    let (mut num, mut den, mut pairs) = (0.0, 0.0, 0usize);
    for s in sequences {
        den += s.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        for w in s.windows(2) {
            num += (w[0] - mean) * (w[1] - mean);
            pairs += 1;
        }
    }
    if den == 0.0 || pairs == 0 {
        return (0.0, pairs);
    }
    (num * n as f64 / (den * pairs as f64), pairs)
}

/// Nearest-rank quantile of `xs` at level `q ∈ [0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

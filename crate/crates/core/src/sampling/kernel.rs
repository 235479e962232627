//! Heat kernel densities on `S^1` and `S^2` for the generator `½Δ`.
//!
//! On the circle the density is a theta series: the `2π`-periodized
//! Gaussian of variance `t` (image sum) for small `t`, or its Fourier series
//! `(1/2π)(1 + 2 Σ e^{-k²t/2} cos kθ)` for large `t`. On the 2-sphere it is
//! the Legendre expansion `Σ (2l+1)/(4π) e^{-l(l+1)t/2} P_l(x·y)`.
//!
//! The Legendre series alternates in sign and for small `t` cancels down to
//! values far below the size of its terms (around `1e-21` at `t = 0.1` for
//! antipodal points), so it is summed in 256-bit binary floating point.

use std::f64::consts::PI;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use super::{uniform_point, RngStream};
use crate::error::{Error, Result};
use crate::geometry::{arc_between, dot, reflect_into, SpherePoint};

/// Target bound on the dropped series tail used by [`default_truncation`].
pub const KERNEL_SERIES_TAIL: f64 = 1e-10;

const SERIES_PRECISION: usize = 256;
const MAX_TRUNCATION: usize = 100_000;

type Big = FBig<HalfEven, 2>;

fn use_image_sum(t: f64) -> bool {
    t < 2.0 * PI
}

/// Smallest truncation whose dropped tail is bounded by [`KERNEL_SERIES_TAIL`]
/// (and by `1e-30` relative to the leading image term on the circle).
pub fn default_truncation(t: f64, d: usize) -> Result<usize> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("heat time t = {t} must be positive")));
    }
    match d {
        1 if use_image_sum(t) => {
            // the k-th image term is at distance ≥ (2k - 1)π from the argument
            let mut k = 1;
            while ((2 * k - 1) as f64 * PI).powi(2) / (2.0 * t) < 80.0 {
                k += 1;
            }
            Ok(k)
        }
        1 => {
            let mut k = 1usize;
            let tail = |k: usize| {
                (k + 1..k + 200)
                    .map(|j| 2.0 / (2.0 * PI) * (-((j * j) as f64) * t / 2.0).exp())
                    .sum::<f64>()
            };
            while tail(k) >= KERNEL_SERIES_TAIL && k < MAX_TRUNCATION {
                k += 1;
            }
            Ok(k)
        }
        2 => {
            let term = |l: usize| (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * t / 2.0).exp();
            let mut l = 1usize;
            loop {
                let tail: f64 = (l + 1..l + 400).map(term).sum();
                if tail < KERNEL_SERIES_TAIL || l >= MAX_TRUNCATION {
                    return Ok(l);
                }
                l += 1;
            }
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// Heat kernel `p(t, x, y)` with respect to the Riemannian volume of `S^d`,
/// `d ∈ {1, 2}`. `truncation` is the number of image/Fourier terms on each
/// side (`d = 1`) or the top Legendre degree (`d = 2`).
pub fn heat_kernel_density(
    t: f64,
    x: &SpherePoint,
    y: &SpherePoint,
    d: usize,
    truncation: usize,
) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("heat time t = {t} must be positive")));
    }
    if truncation == 0 {
        return Err(Error::invalid("truncation must be at least 1"));
    }
    if d != 1 && d != 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if x.dim() != d || y.dim() != d {
        return Err(Error::mismatch(format!("d = {d}"), format!("d = {} / {}", x.dim(), y.dim())));
    }
    Ok(match d {
        1 => circle_density(t, arc_between(x.coords(), y.coords()), truncation),
        _ => two_sphere_density(t, dot(x.coords(), y.coords()).clamp(-1.0, 1.0), truncation),
    })
}

fn circle_density(t: f64, theta: f64, truncation: usize) -> f64 {
    if use_image_sum(t) {
        let k = truncation as i64;
        let norm = 1.0 / (2.0 * PI * t).sqrt();
        // smallest terms first
        let mut sum = 0.0;
        for j in (1..=k).rev() {
            for shift in [theta + 2.0 * PI * j as f64, theta - 2.0 * PI * j as f64] {
                sum += (-shift * shift / (2.0 * t)).exp();
            }
        }
        sum += (-theta * theta / (2.0 * t)).exp();
        norm * sum
    } else {
        let mut sum = 0.0;
        for k in (1..=truncation).rev() {
            let kf = k as f64;
            sum += 2.0 * (-kf * kf * t / 2.0).exp() * (kf * theta).cos();
        }
        (1.0 + sum) / (2.0 * PI)
    }
}

fn big(x: f64) -> Big {
    Big::try_from(x)
        .expect("finite input")
        .with_precision(SERIES_PRECISION)
        .value()
}

fn two_sphere_density(t: f64, z: f64, truncation: usize) -> f64 {
    // w_l = e^{-l(l+1)t/2} = w_{l-1} · q^{2l}, q = e^{-t/2}
    let q = big(-t / 2.0).exp();
    let q2 = &q * &q;
    let z = big(z);
    let one = big(1.0);

    let mut step = one.clone(); // q^{2l}
    let mut weight = one.clone(); // w_l
    let mut p_prev = one.clone(); // P_{l-1}
    let mut p_cur = z.clone(); // P_l
    let mut sum = one.clone(); // l = 0 term, times 4π
    for l in 1..=truncation {
        step = &step * &q2;
        weight = &weight * &step;
        sum += &weight * &p_cur * big((2 * l + 1) as f64);
        // (l+1) P_{l+1} = (2l+1) z P_l - l P_{l-1}
        let next = (&z * &p_cur * big((2 * l + 1) as f64) - &p_prev * big(l as f64))
            / big((l + 1) as f64);
        p_prev = std::mem::replace(&mut p_cur, next);
    }
    sum.to_f64().value() / (4.0 * PI)
}

/// Draws `trials` random triples `(P, Q, S)` on `S^d` and returns the largest
/// relative discrepancy between `p(t, P, R S) p(t, R S, Q)` and
/// `p(t, P, S) p(t, S, Q)`, with `R` the reflection across `P + Q`.
pub fn kernel_reflection_identity_check(
    t: f64,
    d: usize,
    trials: usize,
    truncation: Option<usize>,
    rng: &mut RngStream,
) -> Result<f64> {
    let truncation = match truncation {
        Some(k) => k,
        None => default_truncation(t, d)?,
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = uniform_point(rng, d)?;
        let q = uniform_point(rng, d)?;
        let s = uniform_point(rng, d)?;
        worst = worst.max(reflection_identity_error(t, d, truncation, &p, &q, &s)?);
    }
    Ok(worst)
}

pub(crate) fn reflection_identity_error(
    t: f64,
    d: usize,
    truncation: usize,
    p: &SpherePoint,
    q: &SpherePoint,
    s: &SpherePoint,
) -> Result<f64> {
    let axis: Vec<f64> = p.coords().iter().zip(q.coords()).map(|(a, b)| a + b).collect();
    let mut rs = vec![0.0; s.coords().len()];
    reflect_into(&axis, s.coords(), &mut rs);
    let rs = SpherePoint::from_raw(rs);
    let lhs = heat_kernel_density(t, p, &rs, d, truncation)?
        * heat_kernel_density(t, &rs, q, d, truncation)?;
    let rhs = heat_kernel_density(t, p, s, d, truncation)? * heat_kernel_density(t, s, q, d, truncation)?;
    let scale = lhs.abs().max(rhs.abs());
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
}

//! Exploratory statistics of a fixed-time slice `ψ(T, x) = φ(T + x, T - x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::dot;
use crate::solver::InterpolatedField;

/// Sums over slice points; merging two instances pools their samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GibbsSliceSums {
    pub points: usize,
    pub spacing: f64,
    pub dt_sq: f64,
    pub dx_sq: f64,
    pub dt_dx: f64,
    pub lag_pairs: usize,
    pub lag_num: f64,
    pub lag_den: f64,
}

impl GibbsSliceSums {
    pub fn merge(mut self, other: &Self) -> Self {
        if self.points == 0 {
            self.spacing = other.spacing;
        }
        self.points += other.points;
        self.dt_sq += other.dt_sq;
        self.dx_sq += other.dx_sq;
        self.dt_dx += other.dt_dx;
        self.lag_pairs += other.lag_pairs;
        self.lag_num += other.lag_num;
        self.lag_den += other.lag_den;
        self
    }

    pub fn report(&self) -> GibbsSliceReport {
        let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let per = (2.0 * self.points as f64 * self.spacing).max(f64::MIN_POSITIVE);
        GibbsSliceReport {
            points: self.points,
            spacing: self.spacing,
            mean_sq_dt: self.dt_sq / per,
            mean_sq_dx: self.dx_sq / per,
            corr_dt_dx: ratio(self.dt_dx, (self.dt_sq * self.dx_sq).sqrt()),
            lag1_dx: ratio(self.lag_num, self.lag_den),
        }
    }
}

/// Quadratic variation per unit length of the central-difference proxies
/// for `∂_t ψ` and `∂_x ψ`, their correlation, and the lag-1 correlation of
/// disjoint forward `x`-increments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSliceReport {
    pub points: usize,
    pub spacing: f64,
    /// `Σ |ψ(T+δ, x) - ψ(T-δ, x)|² / (2δ points)`.
    pub mean_sq_dt: f64,
    /// `Σ |ψ(T, x+δ) - ψ(T, x-δ)|² / (2δ points)`.
    pub mean_sq_dx: f64,
    pub corr_dt_dx: f64,
    /// Correlation of consecutive increments `ψ(T, x+δ) - ψ(T, x)`.
    pub lag1_dx: f64,
}

/// Samples the slice at `x = -T + kδ` with `x ± δ` inside `(-T, T)` and
/// accumulates the difference statistics.
pub fn gibbs_slice_diagnostic(field: &InterpolatedField, t: f64, spacing: f64) -> Result<GibbsSliceSums> {
    if !(t > 0.0 && spacing > 0.0 && 2.0 * spacing < t) {
        return Err(Error::invalid("need 0 < 2 spacing < T"));
    }
    let psi = |tt: f64, x: f64| field.eval(tt + x, tt - x).map(|v| v.into_inner());
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };

    let mut s = GibbsSliceSums {
        spacing,
        ..Default::default()
    };
    let mut prev_fwd: Option<Vec<f64>> = None;
    let mut k = 2;
    loop {
        let x = -t + k as f64 * spacing;
        if x + spacing >= t {
            break;
        }
        let here = psi(t, x)?;
        let right = psi(t, x + spacing)?;
        let dt = diff(&psi(t + spacing, x)?, &psi(t - spacing, x)?);
        let dx = diff(&right, &psi(t, x - spacing)?);
        s.points += 1;
        s.dt_sq += dot(&dt, &dt);
        s.dx_sq += dot(&dx, &dx);
        s.dt_dx += dot(&dt, &dx);
        let fwd = diff(&right, &here);
        if let Some(p) = &prev_fwd {
            s.lag_pairs += 1;
            s.lag_num += dot(p, &fwd);
            s.lag_den += dot(&fwd, &fwd);
        }
        prev_fwd = Some(fwd);
        k += 1;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpherePoint;
    use crate::sampling::RngStream;
    use crate::solver::{phi_n, BoundarySource, DiscreteField, SolveOptions};

    #[test]
    fn constant_field_has_zero_variation() {
        let f = InterpolatedField::new(DiscreteField::constant(64, 64, &SpherePoint::pole(2)), 6);
        let r = gibbs_slice_diagnostic(&f, 0.4, 1.0 / 64.0).unwrap().report();
        assert!(r.points > 40);
        assert_eq!(r.mean_sq_dt, 0.0);
        assert_eq!(r.mean_sq_dx, 0.0);
    }

    #[test]
    fn slice_outside_window_is_a_domain_error() {
        let f = InterpolatedField::new(DiscreteField::constant(16, 16, &SpherePoint::pole(1)), 4);
        assert!(matches!(gibbs_slice_diagnostic(&f, 0.6, 1.0 / 16.0), Err(Error::Domain(_))));
    }

    #[test]
    fn brownian_slices_pool_and_show_small_correlations() {
        let mut total = GibbsSliceSums::default();
        for r in 0..20 {
            let mut rng = RngStream::replica(3, crate::sampling::Purpose::Boundary, r);
            let f = phi_n(BoundarySource::Brownian { d: 1, rng: &mut rng }, 7, 0, &SolveOptions::default()).unwrap();
            let s = gibbs_slice_diagnostic(&f, 0.5, 1.0 / 128.0).unwrap();
            total = total.merge(&s);
        }
        let rep = total.report();
        assert!(rep.points > 1000);
        assert!(rep.lag1_dx.abs() < 0.1, "{rep:?}");
        assert!(rep.corr_dt_dx.abs() < 0.1, "{rep:?}");
        // circle-valued Brownian slices: each proxy has quadratic variation 2
        assert!((rep.mean_sq_dt - 2.0).abs() < 0.2, "{rep:?}");
        assert!((rep.mean_sq_dx - 2.0).abs() < 0.2, "{rep:?}");
    }
}

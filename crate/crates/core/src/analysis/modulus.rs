//! Modulus-of-continuity statistics of lattice fields.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::chordal;
use crate::sampling::{lattice_side, RngStream};
use crate::solver::DiscreteField;

/// Number of random pairs examined by default.
pub const DEFAULT_PAIRS: usize = 1_000_000;

/// `h(ρ) = √(-ρ log ρ)` for `ρ ≤ e^{-1}`, `e^{-1/2}` beyond.
pub fn h_modulus(rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("h(ρ) needs ρ > 0, got {rho}")));
    }
    Ok(if rho <= 1.0 / E {
        (-rho * rho.ln()).sqrt()
    } else {
        (-0.5f64).exp()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub mesh_exp: u32,
    pub window_exp: u32,
    /// `max_{j,k} |Y((j+1)2^s, k 2^s) - Y(j 2^s, k 2^s)| / h(2^{s-N})` for `s = 0..=N-3`.
    pub per_scale_m: Vec<f64>,
    /// The same along the second lattice direction.
    pub per_scale_n: Vec<f64>,
    /// `max |Y(a) - Y(b)| / h(2^{-N} |a - b|_1)` over the random pairs and
    /// the dyadic pairs above.
    pub sup_ratio: f64,
    pub pairs_examined: usize,
}

/// Exact per-scale maxima plus a random-pair estimate of the full sup.
pub fn modulus_report(
    field: &DiscreteField,
    mesh_exp: u32,
    window_exp: u32,
    pairs: usize,
    rng: &mut RngStream,
) -> Result<ModulusReport> {
    let side = lattice_side(mesh_exp, window_exp)?;
    if field.m() != side || field.n() != side {
        return Err(Error::invalid(format!(
            "modulus report needs a {0}x{0} lattice, got {1}x{2}",
            side,
            field.m(),
            field.n()
        )));
    }
    let rho0 = (-(mesh_exp as f64)).exp2();
    // h at every possible ℓ¹ lattice distance
    let h: Vec<f64> = (0..=2 * side)
        .map(|k| if k == 0 { f64::INFINITY } else { h_modulus(k as f64 * rho0).expect("ρ > 0") })
        .collect();

    let scales = mesh_exp.saturating_sub(2);
    let mut per_scale_m = Vec::with_capacity(scales as usize);
    let mut per_scale_n = Vec::with_capacity(scales as usize);
    for s in 0..scales {
        let step = 1usize << s;
        let cells = side / step;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for j in 0..cells {
            for k in 0..=cells {
                a = a.max(chordal(field.get((j + 1) * step, k * step), field.get(j * step, k * step)));
                b = b.max(chordal(field.get(k * step, (j + 1) * step), field.get(k * step, j * step)));
            }
        }
        per_scale_m.push(a / h[step]);
        per_scale_n.push(b / h[step]);
    }

    let mut sup = per_scale_m.iter().chain(&per_scale_n).fold(0.0f64, |x, &y| x.max(y));
    let mut examined = 0;
    for _ in 0..pairs {
        let (i, j) = (rng.below(side + 1), rng.below(side + 1));
        let (k, l) = (rng.below(side + 1), rng.below(side + 1));
        let dist = i.abs_diff(k) + j.abs_diff(l);
        if dist == 0 {
            continue;
        }
        examined += 1;
        sup = sup.max(chordal(field.get(i, j), field.get(k, l)) / h[dist]);
    }
    Ok(ModulusReport {
        mesh_exp,
        window_exp,
        per_scale_m,
        per_scale_n,
        sup_ratio: sup,
        pairs_examined: examined,
    })
}

/// Empirical `A ↦ P(sup_ratio ≥ 32 A)` over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub samples: usize,
    pub points: Vec<(f64, f64)>,
}

impl TailCurve {
    pub fn from_ratios(sup_ratios: &[f64], a_grid: &[f64]) -> Self {
        let n = sup_ratios.len();
        let points = a_grid
            .iter()
            .map(|&a| {
                let hits = sup_ratios.iter().filter(|&&s| s >= 32.0 * a).count();
                (a, if n == 0 { 0.0 } else { hits as f64 / n as f64 })
            })
            .collect();
        Self { samples: n, points }
    }

    /// `A = k / 160` for `k = 0..=40`, i.e. thresholds `32 A` from 0 to 8.
    pub fn default_grid() -> Vec<f64> {
        (0..=40).map(|k| k as f64 / 160.0).collect()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    /// `A,probability` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("A,probability\n");
        for (a, p) in &self.points {
            s.push_str(&format!("{a:?},{p:?}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpherePoint;
    use crate::sampling::sample_brownian_boundary;
    use crate::solver::solve;
    use proptest::prelude::*;

    #[test]
    fn h_examples() {
        assert!((h_modulus(1.0 / E).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((h_modulus(0.25).unwrap() - (0.25 * 4f64.ln()).sqrt()).abs() < 1e-15);
        assert!((h_modulus(0.25).unwrap() - 0.588_705).abs() < 1e-6);
        assert_eq!(h_modulus(10.0).unwrap(), (-0.5f64).exp());
        assert!(h_modulus(0.0).is_err());
        assert!(h_modulus(-1.0).is_err());
    }

    #[test]
    fn h_is_continuous_at_the_junction() {
        let x = 1.0 / E;
        let left = h_modulus(x * (1.0 - 1e-15)).unwrap();
        let right = h_modulus(x * (1.0 + 1e-15)).unwrap();
        assert!((left - right).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn h_is_bounded_by_its_junction_value(rho in 1e-12f64..100.0) {
            prop_assert!(h_modulus(rho).unwrap() <= (-0.5f64).exp() + 1e-16);
        }
    }

    #[test]
    fn constant_field_has_zero_ratio() {
        let f = DiscreteField::constant(16, 16, &SpherePoint::pole(2));
        let mut rng = RngStream::new(0, 0);
        let r = modulus_report(&f, 4, 0, 1000, &mut rng).unwrap();
        assert_eq!(r.sup_ratio, 0.0);
        assert_eq!(r.per_scale_m.len(), 2);
    }

    #[test]
    fn non_square_is_rejected() {
        let f = DiscreteField::constant(16, 8, &SpherePoint::pole(1));
        let mut rng = RngStream::new(0, 0);
        assert!(modulus_report(&f, 4, 0, 10, &mut rng).is_err());
    }

    #[test]
    fn finest_scale_is_the_max_cell_increment() {
        let mut rng = RngStream::new(8, 1);
        let b = sample_brownian_boundary(5, 1, 2, &mut rng).unwrap();
        let f = solve(&b, None, false).unwrap();
        let r = modulus_report(&f, 5, 1, 0, &mut rng).unwrap();
        let (mut dm, mut dn) = (0.0f64, 0.0f64);
        for i in 0..=64 {
            for j in 0..64 {
                dm = dm.max(chordal(f.get(j + 1, i), f.get(j, i)));
                dn = dn.max(chordal(f.get(i, j + 1), f.get(i, j)));
            }
        }
        let h0 = h_modulus(1.0 / 32.0).unwrap();
        assert!((r.per_scale_m[0] * h0 - dm).abs() < 1e-15);
        assert!((r.per_scale_n[0] * h0 - dn).abs() < 1e-15);
        assert!(r.sup_ratio >= r.per_scale_m[0].max(r.per_scale_n[0]));
    }

    #[test]
    fn tail_curve_counts_exceedances() {
        let t = TailCurve::from_ratios(&[0.0, 32.0, 64.0, 96.0], &[0.5, 1.0, 2.0, 3.5]);
        assert_eq!(t.points, vec![(0.5, 0.75), (1.0, 0.75), (2.0, 0.5), (3.5, 0.0)]);
        assert!(t.is_non_increasing());
        assert!(t.to_csv().starts_with("A,probability\n0.5,0.75\n"));
    }
}

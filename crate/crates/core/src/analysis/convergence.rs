//! Convergence of `Φ_N` under mesh refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chordal, SpherePoint};
use crate::solver::{phi_n, BoundaryFunctions, BoundarySource, InterpolatedField, SolveOptions};

/// Slack allowed when checking that errors do not grow.
pub const MONOTONE_SLACK: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub mesh_exp: u32,
    /// Sup error over the shared evaluation grid.
    pub sup_error: f64,
    /// Sup error over the lattice points of this `N` against the exact
    /// solution; only available with an oracle.
    pub grid_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Mesh exponent of the reference solution in self-convergence mode.
    pub reference_exp: Option<u32>,
    pub eval_resolution: usize,
}

impl ConvergenceTable {
    /// `e_{k+1} ≤ (1 + slack) e_k` for consecutive rows.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_error <= (1.0 + slack) * w[0].sup_error)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error)
    }

    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.sup_error)
    }

    pub fn max_grid_error(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.grid_error)
            .try_fold(0.0f64, |acc, e| e.map(|e| acc.max(e)))
    }

    /// `N,sup_error` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,sup_error\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:?}\n", r.mesh_exp, r.sup_error));
        }
        s
    }
}

/// The comparison target of a convergence study.
pub enum Target<'a> {
    /// Exact solution `φ(u, v)`.
    Exact(&'a (dyn Fn(f64, f64) -> SpherePoint + Sync)),
    /// `Φ_N` at this finer mesh exponent.
    Reference(u32),
}

/// Sup errors of `Φ_N(φ_+, φ_-)` on `[0, 1]²` for every `N` in `mesh_exps`,
/// evaluated on the grid `(a/res, b/res)`, `0 ≤ a, b ≤ res`.
pub fn convergence_study(
    boundary: &dyn BoundaryFunctions,
    target: Target<'_>,
    mesh_exps: std::ops::RangeInclusive<u32>,
    eval_resolution: usize,
) -> Result<ConvergenceTable> {
    if eval_resolution == 0 {
        return Err(Error::invalid("evaluation resolution must be positive"));
    }
    let opts = SolveOptions::default();
    let build = |n: u32| phi_n(BoundarySource::Functions(boundary), n, 0, &opts);
    let grid: Vec<(f64, f64)> = (0..=eval_resolution)
        .flat_map(|a| (0..=eval_resolution).map(move |b| (a, b)))
        .map(|(a, b)| (a as f64 / eval_resolution as f64, b as f64 / eval_resolution as f64))
        .collect();

    let (reference, reference_exp) = match target {
        Target::Reference(n) => {
            if mesh_exps.clone().any(|k| k >= n) {
                return Err(Error::invalid("reference mesh must be finer than every studied mesh"));
            }
            (Some(build(n)?), Some(n))
        }
        Target::Exact(_) => (None, None),
    };
    let target_at = |u: f64, v: f64| -> Result<Vec<f64>> {
        match (&reference, &target) {
            (Some(r), _) => Ok(r.eval(u, v)?.into_inner()),
            (None, Target::Exact(f)) => Ok(f(u, v).into_inner()),
            (None, Target::Reference(_)) => unreachable!("reference built above"),
        }
    };

    let mut rows = Vec::new();
    for n in mesh_exps {
        let field = build(n)?;
        let sup_error = sup_error(&field, &grid, &target_at)?;
        let grid_error = match &target {
            Target::Exact(f) => Some(lattice_error(&field, *f)),
            Target::Reference(_) => None,
        };
        rows.push(ConvergenceRow {
            mesh_exp: n,
            sup_error,
            grid_error,
        });
    }
    Ok(ConvergenceTable {
        rows,
        reference_exp,
        eval_resolution,
    })
}

fn sup_error(
    field: &InterpolatedField,
    grid: &[(f64, f64)],
    target: &(dyn Fn(f64, f64) -> Result<Vec<f64>> + Sync),
) -> Result<f64> {
    grid.par_iter()
        .map(|&(u, v)| Ok(chordal(field.eval(u, v)?.coords(), &target(u, v)?)))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn lattice_error(field: &InterpolatedField, exact: &(dyn Fn(f64, f64) -> SpherePoint + Sync)) -> f64 {
    let base = field.base();
    let h = 1.0 / field.scale();
    (0..=base.m())
        .into_par_iter()
        .map(|i| {
            (0..=base.n())
                .map(|j| chordal(base.get(i, j), exact(i as f64 * h, j as f64 * h).coords()))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

//! Monotone lattice paths from the upper-left corner `(0, N)` to the
//! lower-right corner `(M, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::solver::DiscreteField;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircasePath {
    m: usize,
    n: usize,
    coords: Vec<(usize, usize)>,
}

impl StaircasePath {
    /// Validates that `coords` starts at `(0, n)`, ends at `(m, 0)` and
    /// moves by `(+1, 0)` or `(0, -1)` at every step.
    pub fn new(m: usize, n: usize, coords: Vec<(usize, usize)>) -> Result<Self> {
        if coords.len() != m + n + 1 {
            return Err(Error::invalid(format!(
                "a staircase path on {m}x{n} has {} points, found {}",
                m + n + 1,
                coords.len()
            )));
        }
        if coords[0] != (0, n) || coords[m + n] != (m, 0) {
            return Err(Error::invalid("staircase path must run from (0, N) to (M, 0)"));
        }
        for w in coords.windows(2) {
            let ((a, b), (c, e)) = (w[0], w[1]);
            if !((c == a + 1 && e == b) || (c == a && e + 1 == b)) {
                return Err(Error::invalid(format!("illegal step {:?} -> {:?}", w[0], w[1])));
            }
        }
        Ok(Self { m, n, coords })
    }

    /// Builds a path from a step sequence; `true` is a step in `m`.
    pub fn from_steps(m: usize, n: usize, steps: impl IntoIterator<Item = bool>) -> Result<Self> {
        let mut at = (0, n);
        let mut coords = vec![at];
        for right in steps {
            if right {
                at.0 += 1;
            } else if at.1 == 0 {
                return Err(Error::invalid("staircase path leaves the grid"));
            } else {
                at.1 -= 1;
            }
            coords.push(at);
        }
        Self::new(m, n, coords)
    }

    /// Down column `m = 0`, then along row `n = 0`: the boundary data.
    pub fn boundary(m: usize, n: usize) -> Self {
        Self::from_steps(m, n, (0..n).map(|_| false).chain((0..m).map(|_| true)))
            .expect("boundary path is valid")
    }

    /// Along row `n = N`, then down column `m = M`.
    pub fn far_corner(m: usize, n: usize) -> Self {
        Self::from_steps(m, n, (0..m).map(|_| true).chain((0..n).map(|_| false)))
            .expect("far-corner path is valid")
    }

    /// Alternating steps starting in `m`, finishing with the remaining
    /// direction once one is exhausted.
    pub fn diagonal(m: usize, n: usize) -> Self {
        let (mut r, mut d) = (m, n);
        let mut steps = Vec::with_capacity(m + n);
        let mut right = true;
        while r + d > 0 {
            if (right && r > 0) || d == 0 {
                steps.push(true);
                r -= 1;
            } else {
                steps.push(false);
                d -= 1;
            }
            right = !right;
        }
        Self::from_steps(m, n, steps).expect("diagonal path is valid")
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }
}

/// `Y(m_j, n_j)` along the path.
pub fn extract_path(field: &DiscreteField, path: &StaircasePath) -> Result<Vec<SpherePoint>> {
    if path.dims() != (field.m(), field.n()) {
        return Err(Error::invalid(format!(
            "path for {:?} does not fit a {}x{} field",
            path.dims(),
            field.m(),
            field.n()
        )));
    }
    Ok(path.coords.iter().map(|&(i, j)| field.point(i, j)).collect())
}

/// Raw coordinate slices along the path, without renormalization.
pub(crate) fn path_values<'a>(field: &'a DiscreteField, path: &StaircasePath) -> Vec<&'a [f64]> {
    path.coords.iter().map(|&(i, j)| field.get(i, j)).collect()
}

//! The linear characteristic problem `δ_m δ_n Y = F` in closed form.

use super::ForcingGrid;
use crate::error::{Error, Result};
use crate::geometry::AmbientVector;

/// `(M+1) × (N+1)` lattice of unconstrained vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientField {
    m: usize,
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl AmbientField {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let o = (i * (self.n + 1) + j) * self.width;
        &self.data[o..o + self.width]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = (i * (self.n + 1) + j) * self.width;
        &mut self.data[o..o + self.width]
    }
}

/// `Y(m, n) = Y_+(m) + Y_-(n) - Y_+(0) + Σ_{j<m} Σ_{k<n} F(j, k)`.
pub fn solve_linear(
    y_plus: &[AmbientVector],
    y_minus: &[AmbientVector],
    forcing: &ForcingGrid,
) -> Result<AmbientField> {
    if y_plus.is_empty() || y_minus.is_empty() {
        return Err(Error::invalid("boundary sequences must be non-empty"));
    }
    let width = y_plus[0].len();
    if y_plus.iter().chain(y_minus).any(|v| v.len() != width) {
        return Err(Error::mismatch(width, "mixed vector lengths"));
    }
    if y_plus[0] != y_minus[0] {
        return Err(Error::invalid("boundary data must share the origin Y+(0) = Y-(0)"));
    }
    let (m, n) = (y_plus.len() - 1, y_minus.len() - 1);
    if forcing.m() != m || forcing.n() != n || forcing.dim() + 1 != width {
        return Err(Error::mismatch(
            format!("forcing {m}x{n} in R^{width}"),
            format!("{}x{} in R^{}", forcing.m(), forcing.n(), forcing.dim() + 1),
        ));
    }

    // prefix sums S(i, j) = Σ_{a<i, b<j} F(a, b)
    let mut sums = AmbientField {
        m,
        n,
        width,
        data: vec![0.0; (m + 1) * (n + 1) * width],
    };
    for i in 1..=m {
        for j in 1..=n {
            for c in 0..width {
                let v = sums.get(i - 1, j)[c] + sums.get(i, j - 1)[c] - sums.get(i - 1, j - 1)[c]
                    + forcing.get(i - 1, j - 1)[c];
                sums.get_mut(i, j)[c] = v;
            }
        }
    }
    let origin = y_plus[0].coords();
    for i in 0..=m {
        for j in 0..=n {
            let (p, q) = (y_plus[i].coords(), y_minus[j].coords());
            let out = sums.get_mut(i, j);
            for c in 0..width {
                out[c] += p[c] + q[c] - origin[c];
            }
        }
    }
    Ok(sums)
}

/// `δ_m δ_n Y(i, j) = Y(i+1, j+1) - Y(i+1, j) - Y(i, j+1) + Y(i, j)`.
pub fn mixed_difference(field: &AmbientField, i: usize, j: usize) -> Vec<f64> {
    (0..field.width)
        .map(|c| {
            field.get(i + 1, j + 1)[c] - field.get(i + 1, j)[c] - field.get(i, j + 1)[c]
                + field.get(i, j)[c]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;

    fn av(c: &[f64]) -> AmbientVector {
        AmbientVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn homogeneous_case() {
        let plus = vec![av(&[1.0, 0.0]), av(&[2.0, 1.0]), av(&[0.5, 0.5])];
        let minus = vec![av(&[1.0, 0.0]), av(&[-1.0, 3.0])];
        let f = ForcingGrid::zeros(2, 1, 1);
        let y = solve_linear(&plus, &minus, &f).unwrap();
        assert_eq!(y.get(2, 1), &[0.5 - 1.0 - 1.0, 0.5 + 3.0]);
        assert_eq!(y.get(0, 1), minus[1].coords());
        assert_eq!(y.get(1, 0), plus[1].coords());
    }

    #[test]
    fn single_source() {
        let zero = av(&[0.0, 0.0, 0.0]);
        let f = ForcingGrid::from_fn(1, 1, 2, |_, _| vec![0.3, -0.2, 0.7]).unwrap();
        let y = solve_linear(&[zero.clone(), zero.clone()], &[zero.clone(), zero], &f).unwrap();
        assert_eq!(y.get(1, 1), &[0.3, -0.2, 0.7]);
    }

    #[test]
    fn inverts_mixed_difference() {
        let mut rng = RngStream::new(77, 0);
        let mut v = || av(&[rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5]);
        let origin = v();
        let mut plus: Vec<_> = (0..9).map(|_| v()).collect();
        let mut minus: Vec<_> = (0..9).map(|_| v()).collect();
        plus[0] = origin.clone();
        minus[0] = origin;
        let mut rng = RngStream::new(78, 0);
        let values: Vec<Vec<f64>> = (0..64)
            .map(|_| (0..3).map(|_| 2.0 * rng.uniform() - 1.0).collect())
            .collect();
        let f = ForcingGrid::from_fn(8, 8, 2, |i, j| values[i * 8 + j].clone()).unwrap();
        let y = solve_linear(&plus, &minus, &f).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let d = mixed_difference(&y, i, j);
                for (a, b) in d.iter().zip(f.get(i, j)) {
                    assert!((a - b).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn mismatched_forcing() {
        let z = av(&[0.0, 0.0]);
        let f = ForcingGrid::zeros(2, 2, 1);
        assert!(solve_linear(&[z.clone(), z.clone()], &[z.clone(), z], &f).is_err());
    }
}

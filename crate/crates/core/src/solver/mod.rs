//! The lattice evolution and its exact diagnostics.

mod interp;
mod io;
mod linear;
mod wavefront;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chordal, norm, wave_step_into, AmbientVector, SpherePoint};
use crate::sampling::BoundaryPair;

pub use interp::{
    extend_eval, phi_n, BoundaryFunctions, BoundarySource, InterpolatedField, Preset,
};
pub use io::{
    read_field_binary, read_field_csv, read_forcing_csv, write_field_binary, write_field_csv,
    write_forcing_csv, FIELD_MAGIC,
};
pub use linear::{mixed_difference, solve_linear, AmbientField};

/// `(M+1) × (N+1)` lattice of points in `R^{d+1}`, stored row-major in `m`.
///
/// Row `m = 0` holds `Y_-`, column `n = 0` holds `Y_+`. Entries are unit
/// vectors up to rounding when the field was produced without forcing.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteField {
    m: usize,
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl DiscreteField {
    pub(crate) fn from_parts(m: usize, n: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if width < 2 {
            return Err(Error::UnsupportedDimension(width.saturating_sub(1)));
        }
        if data.len() != (m + 1) * (n + 1) * width {
            return Err(Error::mismatch((m + 1) * (n + 1) * width, data.len()));
        }
        Ok(Self { m, n, width, data })
    }

    /// Constant field `Y ≡ p` of size `(m+1) × (n+1)`.
    pub fn constant(m: usize, n: usize, p: &SpherePoint) -> Self {
        let data = p
            .coords()
            .iter()
            .copied()
            .cycle()
            .take((m + 1) * (n + 1) * p.coords().len())
            .collect();
        Self {
            m,
            n,
            width: p.coords().len(),
            data,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sphere dimension `d`.
    pub fn dim(&self) -> usize {
        self.width - 1
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        (i * (self.n + 1) + j) * self.width
    }

    /// Raw coordinates of `Y(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.width]
    }

    #[inline]
    pub(crate) fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = self.offset(i, j);
        &mut self.data[o..o + self.width]
    }

    /// `Y(i, j)` as a [`SpherePoint`], normalized if rounding drift is present.
    pub fn point(&self, i: usize, j: usize) -> SpherePoint {
        let c = self.get(i, j).to_vec();
        SpherePoint::new(c.clone())
            .or_else(|_| SpherePoint::normalized(c))
            .expect("non-zero lattice value")
    }

    /// Largest `| |Y(i, j)| - 1 |`.
    pub fn max_norm_drift(&self) -> f64 {
        self.data
            .chunks_exact(self.width)
            .map(|c| (norm(c) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest reflection axis `|Y(i+1, j) + Y(i, j+1)|` used by the recursion.
    pub fn min_axis_norm(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.m {
            for j in 0..self.n {
                let a = self.get(i + 1, j);
                let b = self.get(i, j + 1);
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum();
                min = min.min(s.sqrt());
            }
        }
        min
    }

    /// `(y_plus, y_minus)` read back from column 0 and row 0.
    pub fn boundary(&self) -> (Vec<&[f64]>, Vec<&[f64]>) {
        (
            (0..=self.m).map(|i| self.get(i, 0)).collect(),
            (0..=self.n).map(|j| self.get(0, j)).collect(),
        )
    }
}

/// External forcing `F_e(m, n)` for `0 ≤ m < M`, `0 ≤ n < N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingGrid {
    m: usize,
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl ForcingGrid {
    pub fn zeros(m: usize, n: usize, d: usize) -> Self {
        Self {
            m,
            n,
            width: d + 1,
            data: vec![0.0; m * n * (d + 1)],
        }
    }

    pub fn from_fn(m: usize, n: usize, d: usize, f: impl Fn(usize, usize) -> Vec<f64>) -> Result<Self> {
        let mut g = Self::zeros(m, n, d);
        for i in 0..m {
            for j in 0..n {
                let v = f(i, j);
                if v.len() != d + 1 {
                    return Err(Error::mismatch(d + 1, v.len()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("forcing has non-finite entries"));
                }
                g.get_mut(i, j).copy_from_slice(&v);
            }
        }
        Ok(g)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.width - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let o = (i * self.n + j) * self.width;
        &self.data[o..o + self.width]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = (i * self.n + j) * self.width;
        &mut self.data[o..o + self.width]
    }

    pub fn value(&self, i: usize, j: usize) -> AmbientVector {
        AmbientVector::new(self.get(i, j).to_vec()).expect("finite forcing")
    }

    /// `Σ |F(i, j)|`.
    pub fn l1_norm(&self) -> f64 {
        self.data.chunks_exact(self.width).map(norm).sum()
    }

    /// `max |F(i, j)|`.
    pub fn linf_norm(&self) -> f64 {
        self.data.chunks_exact(self.width).map(norm).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0.0)
    }
}

/// Update rule of a single lattice cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellRule {
    /// `Y(m+1, n+1) = R_{Y(m+1, n) + Y(m, n+1)} Y(m, n)`.
    #[default]
    Reflection,
    /// `Y(m+1, n+1) = Y(m+1, n)`. A deliberately wrong rule for negative controls.
    IdentityStep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Wavefront for grids larger than one tile, sequential otherwise.
    #[default]
    Auto,
    Sequential,
    Wavefront,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub renormalize: bool,
    pub rule: CellRule,
    pub schedule: Schedule,
}

#[inline]
pub(crate) fn update_cell(
    p: &[f64],
    q: &[f64],
    s: &[f64],
    forcing: Option<&[f64]>,
    opts: &SolveOptions,
    out: &mut [f64],
) {
    match opts.rule {
        CellRule::Reflection => {
            wave_step_into(p, q, s, out, opts.renormalize && forcing.is_none());
        }
        CellRule::IdentityStep => out.copy_from_slice(p),
    }
    if let Some(f) = forcing {
        out.iter_mut().zip(f).for_each(|(o, x)| *o += x);
        if opts.renormalize {
            let n = norm(out);
            out.iter_mut().for_each(|x| *x /= n);
        }
    }
}

fn seeded_field(boundary: &BoundaryPair) -> DiscreteField {
    let (m, n) = (boundary.m(), boundary.n());
    let width = boundary.dim() + 1;
    let mut field = DiscreteField {
        m,
        n,
        width,
        data: vec![0.0; (m + 1) * (n + 1) * width],
    };
    for (i, p) in boundary.y_plus().iter().enumerate() {
        field.get_mut(i, 0).copy_from_slice(p.coords());
    }
    for (j, p) in boundary.y_minus().iter().enumerate() {
        field.get_mut(0, j).copy_from_slice(p.coords());
    }
    field
}

/// Discrete wave map with the given boundary data and optional forcing,
/// using the default reflection rule.
pub fn solve(
    boundary: &BoundaryPair,
    forcing: Option<&ForcingGrid>,
    renormalize: bool,
) -> Result<DiscreteField> {
    solve_with(
        boundary,
        forcing,
        &SolveOptions {
            renormalize,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with(
    boundary: &BoundaryPair,
    forcing: Option<&ForcingGrid>,
    opts: &SolveOptions,
) -> Result<DiscreteField> {
    if let Some(f) = forcing {
        if f.m != boundary.m() || f.n != boundary.n() || f.width != boundary.dim() + 1 {
            return Err(Error::mismatch(
                format!("forcing {}x{} in R^{}", boundary.m(), boundary.n(), boundary.dim() + 1),
                format!("{}x{} in R^{}", f.m, f.n, f.width),
            ));
        }
    }
    // an all-zero forcing grid is the unforced equation, bit for bit
    let forcing = forcing.filter(|f| !f.is_zero());
    let mut field = seeded_field(boundary);
    let parallel = match opts.schedule {
        Schedule::Sequential => false,
        Schedule::Wavefront => true,
        Schedule::Auto => field.m.min(field.n) > wavefront::TILE,
    };
    if parallel {
        wavefront::fill(&mut field, forcing, opts);
    } else {
        fill_sequential(&mut field, forcing, opts);
    }
    Ok(field)
}

fn fill_sequential(field: &mut DiscreteField, forcing: Option<&ForcingGrid>, opts: &SolveOptions) {
    let width = field.width;
    let row = (field.n + 1) * width;
    for i in 0..field.m {
        let (done, rest) = field.data.split_at_mut((i + 1) * row);
        let prev = &done[i * row..];
        let cur = &mut rest[..row];
        for j in 0..field.n {
            let (left, right) = cur.split_at_mut((j + 1) * width);
            update_cell(
                &left[j * width..],
                &prev[(j + 1) * width..(j + 2) * width],
                &prev[j * width..(j + 1) * width],
                forcing.map(|f| f.get(i, j)),
                opts,
                &mut right[..width],
            );
        }
    }
}

/// Maximum deviations from the exact per-cell conservation identities
///
/// ```text
/// |Y(m+1, n+1) - Y(m, n+1)| = |Y(m+1, n) - Y(m, n)|
/// |Y(m+1, n+1) - Y(m+1, n)| = |Y(m, n+1) - Y(m, n)|
/// ```
///
/// and the norm drift of the field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub cells: usize,
    /// Deviation in the first identity (`u`-increments carried along `v`).
    pub max_u_deviation: f64,
    /// Deviation in the second identity (`v`-increments carried along `u`).
    pub max_v_deviation: f64,
    pub max_norm_drift: f64,
}

impl ConservationReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_u_deviation.max(self.max_v_deviation)
    }

    fn absorb_cell(&mut self, s: &[f64], p: &[f64], q: &[f64], y: &[f64]) {
        // s = Y(m,n), p = Y(m+1,n), q = Y(m,n+1), y = Y(m+1,n+1)
        self.cells += 1;
        let du = (chordal(y, q) - chordal(p, s)).abs();
        let dv = (chordal(y, p) - chordal(q, s)).abs();
        self.max_u_deviation = self.max_u_deviation.max(du);
        self.max_v_deviation = self.max_v_deviation.max(dv);
    }

    fn absorb_norm(&mut self, y: &[f64]) {
        self.max_norm_drift = self.max_norm_drift.max((norm(y) - 1.0).abs());
    }
}

pub fn conservation_report(field: &DiscreteField) -> ConservationReport {
    let mut r = ConservationReport::default();
    for i in 0..field.m {
        for j in 0..field.n {
            r.absorb_cell(
                field.get(i, j),
                field.get(i + 1, j),
                field.get(i, j + 1),
                field.get(i + 1, j + 1),
            );
        }
    }
    field.data.chunks_exact(field.width).for_each(|y| r.absorb_norm(y));
    r
}

/// Same report as [`conservation_report`] without storing the field: rows
/// are evolved with two buffers, so memory is `O(N)` instead of `O(MN)`.
pub fn conservation_streaming(boundary: &BoundaryPair, opts: &SolveOptions) -> ConservationReport {
    let n = boundary.n();
    let width = boundary.dim() + 1;
    let mut prev: Vec<f64> = boundary
        .y_minus()
        .iter()
        .flat_map(|p| p.coords().iter().copied())
        .collect();
    let mut cur = vec![0.0; prev.len()];
    let mut r = ConservationReport::default();
    prev.chunks_exact(width).for_each(|y| r.absorb_norm(y));
    for p in &boundary.y_plus()[1..] {
        cur[..width].copy_from_slice(p.coords());
        r.absorb_norm(p.coords());
        for j in 0..n {
            let (left, right) = cur.split_at_mut((j + 1) * width);
            let out = &mut right[..width];
            update_cell(
                &left[j * width..],
                &prev[(j + 1) * width..(j + 2) * width],
                &prev[j * width..(j + 1) * width],
                None,
                opts,
                out,
            );
            r.absorb_norm(out);
            r.absorb_cell(
                &prev[j * width..(j + 1) * width],
                &left[j * width..],
                &prev[(j + 1) * width..(j + 2) * width],
                out,
            );
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    r
}

/// `max_{i,j} |a(i,j) - b(i,j)|` over two fields of equal shape.
pub fn sup_distance(a: &DiscreteField, b: &DiscreteField) -> Result<f64> {
    if a.m != b.m || a.n != b.n || a.width != b.width {
        return Err(Error::mismatch(
            format!("{}x{}x{}", a.m, a.n, a.width),
            format!("{}x{}x{}", b.m, b.n, b.width),
        ));
    }
    Ok(a.data
        .chunks_exact(a.width)
        .zip(b.data.chunks_exact(b.width))
        .map(|(x, y)| chordal(x, y))
        .fold(0.0, f64::max))
}

/// `‖δ(Ŷ_+ - Y_+)‖_{ℓ¹} + ‖δ(Ŷ_- - Y_-)‖_{ℓ¹}`.
pub fn boundary_increment_l1(reference: &BoundaryPair, perturbed: &BoundaryPair) -> Result<f64> {
    if reference.m() != perturbed.m() || reference.n() != perturbed.n() || reference.dim() != perturbed.dim() {
        return Err(Error::mismatch("boundaries of equal shape", "different shapes"));
    }
    let side = |a: &[SpherePoint], b: &[SpherePoint]| -> f64 {
        let diff: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(x, y)| y.coords().iter().zip(x.coords()).map(|(u, v)| u - v).collect())
            .collect();
        diff.windows(2).map(|w| chordal(&w[1], &w[0])).sum()
    };
    Ok(side(reference.y_plus(), perturbed.y_plus()) + side(reference.y_minus(), perturbed.y_minus()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    /// `max_{m,n} |Ŷ(m, n) - Y(m, n)|`.
    pub sup_diff: f64,
    pub epsilon: f64,
    /// `sup_diff / ε`; zero when `ε = 0`.
    pub ratio: f64,
    /// Largest norm deviation of the perturbed field.
    pub perturbed_norm_drift: f64,
}

/// Solves the unperturbed problem and the problem with forcing
/// `ε · shape` and/or replaced boundary data, and compares them cell-wise.
pub fn perturbation_experiment(
    boundary: &BoundaryPair,
    epsilon: f64,
    shape: Option<&ForcingGrid>,
    perturbed_boundary: Option<&BoundaryPair>,
) -> Result<PerturbationOutcome> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("perturbation size {epsilon} must be non-negative")));
    }
    let reference = solve(boundary, None, false)?;
    let forcing = shape.map(|s| s.scaled(epsilon));
    let perturbed = solve(perturbed_boundary.unwrap_or(boundary), forcing.as_ref(), false)?;
    let sup_diff = sup_distance(&reference, &perturbed)?;
    Ok(PerturbationOutcome {
        sup_diff,
        epsilon,
        ratio: if epsilon > 0.0 { sup_diff / epsilon } else { 0.0 },
        perturbed_norm_drift: perturbed.max_norm_drift(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{wave_step, wrap_angle};
    use crate::sampling::{sample_brownian_boundary, RngStream};

    fn circle_pair(plus: &[f64], minus: &[f64]) -> BoundaryPair {
        BoundaryPair::new(
            plus.iter().map(|&a| SpherePoint::from_angle(a)).collect(),
            minus.iter().map(|&a| SpherePoint::from_angle(a)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_cell() {
        let x0 = SpherePoint::normalized(vec![0.1, 0.7, -0.2]).unwrap();
        let p = SpherePoint::normalized(vec![0.4, 0.5, 0.1]).unwrap();
        let q = SpherePoint::normalized(vec![-0.3, 0.9, 0.3]).unwrap();
        let b = BoundaryPair::new(vec![x0.clone(), p.clone()], vec![x0.clone(), q.clone()]).unwrap();
        let f = solve(&b, None, false).unwrap();
        assert_eq!(f.get(1, 1), wave_step(&p, &q, &x0).unwrap().coords());
    }

    #[test]
    fn constant_boundary_gives_constant_field() {
        let x0 = SpherePoint::normalized(vec![0.1, 0.7, -0.2, 0.4]).unwrap();
        let b = BoundaryPair::new(vec![x0.clone(); 9], vec![x0.clone(); 5]).unwrap();
        let f = solve(&b, None, false).unwrap();
        let c = DiscreteField::constant(8, 4, &x0);
        assert!(sup_distance(&f, &c).unwrap() < 1e-15);
        let r = conservation_report(&f);
        assert!(r.max_deviation() < 1e-15);
    }

    /// Pure angle arithmetic, independent of the reflection code path.
    fn additive_angles(plus: &[f64], minus: &[f64], i: usize, j: usize) -> f64 {
        plus[i] + minus[j] - plus[0]
    }

    #[test]
    fn circle_field_is_additive() {
        let mut rng = RngStream::new(21, 0);
        let plus: Vec<f64> = (0..20).scan(0.3, |a, _| {
            *a += 0.2 * (rng.uniform() - 0.5);
            Some(*a)
        }).collect();
        let mut minus: Vec<f64> = (0..13).scan(0.3, |a, _| {
            *a += 0.2 * (rng.uniform() - 0.5);
            Some(*a)
        }).collect();
        minus[0] = plus[0];
        let b = circle_pair(&plus, &minus);
        let f = solve(&b, None, false).unwrap();
        for i in 0..plus.len() {
            for j in 0..minus.len() {
                let angle = f.get(i, j)[1].atan2(f.get(i, j)[0]);
                let err = wrap_angle(angle - additive_angles(&plus, &minus, i, j)).abs();
                assert!(err < 1e-9, "({i}, {j}): {err}");
            }
        }
    }

    #[test]
    fn zero_forcing_is_bitwise_unforced() {
        let mut rng = RngStream::new(5, 5);
        let b = sample_brownian_boundary(4, 0, 2, &mut rng).unwrap();
        let zero = ForcingGrid::zeros(16, 16, 2);
        let a = solve(&b, None, false).unwrap();
        let c = solve(&b, Some(&zero), false).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn forcing_shape_mismatch_is_rejected() {
        let mut rng = RngStream::new(5, 5);
        let b = sample_brownian_boundary(3, 0, 2, &mut rng).unwrap();
        let f = ForcingGrid::zeros(4, 8, 2);
        assert!(matches!(solve(&b, Some(&f), false), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn schedules_agree_bitwise() {
        let mut rng = RngStream::new(8, 1);
        let b = sample_brownian_boundary(8, 0, 2, &mut rng).unwrap();
        let forcing = ForcingGrid::from_fn(256, 256, 2, |i, j| {
            vec![1e-4 * ((i * j) as f64).sin(), 0.0, 1e-4]
        })
        .unwrap();
        for f in [None, Some(&forcing)] {
            let run = |schedule| {
                solve_with(&b, f, &SolveOptions { schedule, ..Default::default() }).unwrap()
            };
            let seq = run(Schedule::Sequential);
            let wave = run(Schedule::Wavefront);
            assert_eq!(seq, wave);
            let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
            assert_eq!(seq, pool.install(|| run(Schedule::Wavefront)));
        }
    }

    #[test]
    fn brownian_field_conserves() {
        let mut rng = RngStream::new(2, 2);
        let b = sample_brownian_boundary(8, 0, 2, &mut rng).unwrap();
        let f = solve(&b, None, false).unwrap();
        let r = conservation_report(&f);
        assert!(r.max_deviation() <= 1e-9, "{r:?}");
        assert!(r.max_norm_drift <= 1e-9);
        let streamed = conservation_streaming(&b, &SolveOptions::default());
        assert_eq!(r, streamed);
    }

    #[test]
    fn forcing_breaks_conservation_at_its_scale() {
        let mut rng = RngStream::new(2, 3);
        let b = sample_brownian_boundary(5, 0, 2, &mut rng).unwrap();
        let forcing = ForcingGrid::from_fn(32, 32, 2, |_, _| vec![0.0, 1e-3, 0.0]).unwrap();
        let f = solve(&b, Some(&forcing), false).unwrap();
        let r = conservation_report(&f);
        assert!(r.max_deviation() > 1e-6);
        assert!(r.max_norm_drift > 0.0);
    }

    #[test]
    fn perturbation_zero_and_small() {
        let mut rng = RngStream::new(3, 3);
        let b = sample_brownian_boundary(4, 0, 2, &mut rng).unwrap();
        let shape = ForcingGrid::from_fn(16, 16, 2, |_, _| vec![0.0, 0.0, 1.0 / 256.0]).unwrap();
        assert!((shape.l1_norm() - 1.0).abs() < 1e-12);
        let zero = perturbation_experiment(&b, 0.0, Some(&shape), None).unwrap();
        assert_eq!(zero.sup_diff, 0.0);
        assert_eq!(zero.ratio, 0.0);
        let small = perturbation_experiment(&b, 1e-6, Some(&shape), None).unwrap();
        assert!(small.sup_diff > 0.0 && small.sup_diff < 1e-3);
    }

    #[test]
    fn boundary_l1_of_identical_pairs_is_zero() {
        let mut rng = RngStream::new(3, 4);
        let b = sample_brownian_boundary(3, 0, 2, &mut rng).unwrap();
        assert_eq!(boundary_increment_l1(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn identity_step_copies_lower_neighbour() {
        let mut rng = RngStream::new(1, 9);
        let b = sample_brownian_boundary(3, 0, 1, &mut rng).unwrap();
        let f = solve_with(
            &b,
            None,
            &SolveOptions { rule: CellRule::IdentityStep, ..Default::default() },
        )
        .unwrap();
        for i in 1..=8 {
            for j in 0..=8 {
                assert_eq!(f.get(i, j), f.get(i, 0));
            }
        }
    }
}

//! Continuous-parameter view of a lattice field and the operator `Φ_N`.

use serde::{Deserialize, Serialize};

use super::{solve_with, DiscreteField, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::{AmbientVector, SpherePoint};
use crate::sampling::{lattice_side, sample_brownian_boundary, BoundaryPair, RngStream};

/// Bilinear extension of a [`DiscreteField`] rescaled to mesh `2^{-N}`:
/// lattice index `(i, j)` sits at `(u, v) = origin + 2^{-N} (i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatedField {
    base: DiscreteField,
    mesh_exp: u32,
    origin: (f64, f64),
}

impl InterpolatedField {
    pub fn new(base: DiscreteField, mesh_exp: u32) -> Self {
        Self::with_origin(base, mesh_exp, (0.0, 0.0))
    }

    pub fn with_origin(base: DiscreteField, mesh_exp: u32, origin: (f64, f64)) -> Self {
        Self {
            base,
            mesh_exp,
            origin,
        }
    }

    pub fn base(&self) -> &DiscreteField {
        &self.base
    }

    pub fn into_base(self) -> DiscreteField {
        self.base
    }

    pub fn mesh_exp(&self) -> u32 {
        self.mesh_exp
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    /// `2^N`, lattice steps per unit of `u` or `v`.
    pub fn scale(&self) -> f64 {
        (self.mesh_exp as f64).exp2()
    }

    /// `([u_lo, u_hi], [v_lo, v_hi])`.
    pub fn window(&self) -> ((f64, f64), (f64, f64)) {
        let s = self.scale();
        (
            (self.origin.0, self.origin.0 + self.base.m() as f64 / s),
            (self.origin.1, self.origin.1 + self.base.n() as f64 / s),
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let ((u0, u1), (v0, v1)) = self.window();
        (u0..=u1).contains(&u) && (v0..=v1).contains(&v)
    }

    /// Bilinear interpolation of the four corners of the cell containing
    /// `(u, v)`. Exact at lattice points; the upper window edge belongs to
    /// the last cell.
    pub fn eval(&self, u: f64, v: f64) -> Result<AmbientVector> {
        if !self.contains(u, v) {
            let ((u0, u1), (v0, v1)) = self.window();
            return Err(Error::Domain(format!(
                "({u}, {v}) outside the window [{u0}, {u1}] x [{v0}, {v1}]"
            )));
        }
        let s = self.scale();
        let (i, a) = cell_coord((u - self.origin.0) * s, self.base.m());
        let (j, b) = cell_coord((v - self.origin.1) * s, self.base.n());
        let (i1, j1) = ((i + 1).min(self.base.m()), (j + 1).min(self.base.n()));
        let (y00, y10, y01, y11) = (
            self.base.get(i, j),
            self.base.get(i1, j),
            self.base.get(i, j1),
            self.base.get(i1, j1),
        );
        let w = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
        let out = (0..y00.len())
            .map(|c| w[0] * y00[c] + w[1] * y10[c] + w[2] * y01[c] + w[3] * y11[c])
            .collect();
        AmbientVector::new(out)
    }
}

/// Splits a lattice coordinate `x ∈ [0, len]` into a cell index and a
/// fraction in `[0, 1]`.
fn cell_coord(x: f64, len: usize) -> (usize, f64) {
    if len == 0 {
        return (0, 0.0);
    }
    let i = (x.floor() as usize).min(len - 1);
    (i, x - i as f64)
}

/// `φ_N(u, v)`: the bilinear extension evaluated in continuum coordinates.
pub fn extend_eval(field: &InterpolatedField, u: f64, v: f64) -> Result<AmbientVector> {
    field.eval(u, v)
}

/// A pair of boundary curves `φ_+(u)`, `φ_-(v)` with `φ_+(0) = φ_-(0)`.
pub trait BoundaryFunctions: Sync {
    fn dim(&self) -> usize;
    fn plus(&self, u: f64) -> SpherePoint;
    fn minus(&self, v: f64) -> SpherePoint;
}

/// Built-in smooth boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `φ_± ≡ e_0` on `S^d`.
    Constant { d: usize },
    /// Circle-valued with angles `θ_+(u) = sin u`, `θ_-(v) = v/2`.
    CircleSin,
    /// `φ_+(u) = R_z(u/2)(cos u, 0, sin u)` and
    /// `φ_-(v) = R_x(0.3 v)(cos 0.8v, sin 0.8v, 0)`, zero-padded for `d > 2`.
    GreatCirclePrecession { d: usize },
}

impl Preset {
    pub const NAMES: [&'static str; 3] = ["constant", "circle-sin", "great-circle-precession"];

    pub fn from_name(name: &str, d: usize) -> Result<Self> {
        let preset = match name {
            "constant" => Preset::Constant { d },
            "circle-sin" => Preset::CircleSin,
            "great-circle-precession" => Preset::GreatCirclePrecession { d },
            _ => {
                return Err(Error::invalid(format!(
                    "unknown preset {name:?}; expected one of {:?}",
                    Self::NAMES
                )))
            }
        };
        preset.validate(d)?;
        Ok(preset)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant { .. } => "constant",
            Preset::CircleSin => "circle-sin",
            Preset::GreatCirclePrecession { .. } => "great-circle-precession",
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match *self {
            Preset::Constant { d: 0 } => Err(Error::UnsupportedDimension(0)),
            Preset::CircleSin if d != 1 => Err(Error::invalid("circle-sin requires d = 1")),
            Preset::GreatCirclePrecession { d } if d < 2 => {
                Err(Error::invalid("great-circle-precession requires d >= 2"))
            }
            _ => Ok(()),
        }
    }

    /// The exact continuum solution where one is known in closed form.
    ///
    /// On the circle the wave map equation is linear in the angle, so
    /// `θ(u, v) = θ_+(u) + θ_-(v) - θ_+(0)`.
    pub fn exact(&self, u: f64, v: f64) -> Option<SpherePoint> {
        match *self {
            Preset::Constant { d } => Some(SpherePoint::pole(d)),
            Preset::CircleSin => Some(SpherePoint::from_angle(u.sin() + 0.5 * v)),
            Preset::GreatCirclePrecession { .. } => None,
        }
    }

    fn padded(d: usize, head: [f64; 3]) -> SpherePoint {
        let mut c = vec![0.0; d + 1];
        c[..3].copy_from_slice(&head);
        SpherePoint::from_raw(c)
    }
}

impl BoundaryFunctions for Preset {
    fn dim(&self) -> usize {
        match *self {
            Preset::Constant { d } | Preset::GreatCirclePrecession { d } => d,
            Preset::CircleSin => 1,
        }
    }

    fn plus(&self, u: f64) -> SpherePoint {
        match *self {
            Preset::Constant { d } => SpherePoint::pole(d),
            Preset::CircleSin => SpherePoint::from_angle(u.sin()),
            Preset::GreatCirclePrecession { d } => {
                let (a, c) = (0.5 * u, u.cos());
                Self::padded(d, [c * a.cos(), c * a.sin(), u.sin()])
            }
        }
    }

    fn minus(&self, v: f64) -> SpherePoint {
        match *self {
            Preset::Constant { d } => SpherePoint::pole(d),
            Preset::CircleSin => SpherePoint::from_angle(0.5 * v),
            Preset::GreatCirclePrecession { d } => {
                let (b, s) = (0.3 * v, (0.8 * v).sin());
                Self::padded(d, [(0.8 * v).cos(), s * b.cos(), s * b.sin()])
            }
        }
    }
}

/// Where the boundary data of `Φ_N` comes from.
pub enum BoundarySource<'a> {
    /// Already sampled at mesh `2^{-N}`; both sides must have `2^{N+L} + 1` points.
    Pair(&'a BoundaryPair),
    /// Sampled at the dyadic points `k 2^{-N}`, `k = 0..=2^{N+L}`.
    Functions(&'a dyn BoundaryFunctions),
    /// A fresh Brownian boundary with chain parameter `2^{-N}`.
    Brownian { d: usize, rng: &'a mut RngStream },
}

/// `Φ_N`: samples the boundary at mesh `2^{-N}` on `[0, 2^L]`, solves the
/// lattice recursion and rescales the bilinear extension to continuum
/// coordinates.
pub fn phi_n(
    source: BoundarySource<'_>,
    mesh_exp: u32,
    window_exp: u32,
    opts: &SolveOptions,
) -> Result<InterpolatedField> {
    let side = lattice_side(mesh_exp, window_exp)?;
    let sampled;
    let boundary = match source {
        BoundarySource::Pair(p) => {
            if p.m() != side || p.n() != side {
                return Err(Error::mismatch(
                    format!("{side}x{side} boundary"),
                    format!("{}x{}", p.m(), p.n()),
                ));
            }
            p
        }
        BoundarySource::Functions(f) => {
            let h = (-(mesh_exp as f64)).exp2();
            sampled = BoundaryPair::from_fns(
                side,
                side,
                |k| f.plus(k as f64 * h),
                |k| f.minus(k as f64 * h),
            )?;
            &sampled
        }
        BoundarySource::Brownian { d, rng } => {
            sampled = sample_brownian_boundary(mesh_exp, window_exp, d, rng)?;
            &sampled
        }
    };
    let field = solve_with(boundary, None, opts)?;
    Ok(InterpolatedField::new(field, mesh_exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{chordal, norm, wrap_angle};

    fn brownian(n: u32, d: usize, seed: u64) -> InterpolatedField {
        let mut rng = RngStream::new(seed, 0);
        phi_n(
            BoundarySource::Brownian { d, rng: &mut rng },
            n,
            0,
            &SolveOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn lattice_points_are_exact() {
        let f = brownian(4, 2, 3);
        for i in 0..=16 {
            for j in 0..=16 {
                let y = f.eval(i as f64 / 16.0, j as f64 / 16.0).unwrap();
                assert_eq!(y.coords(), f.base().get(i, j));
            }
        }
    }

    #[test]
    fn cell_center_is_corner_mean() {
        let f = brownian(3, 3, 5);
        let y = f.eval(2.5 / 8.0, 6.5 / 8.0).unwrap();
        let b = f.base();
        for c in 0..4 {
            let mean = 0.25 * (b.get(2, 6)[c] + b.get(3, 6)[c] + b.get(2, 7)[c] + b.get(3, 7)[c]);
            assert!((y.coords()[c] - mean).abs() < 1e-15);
        }
        assert!(y.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn u_derivative_bounded_by_lattice_increments() {
        let f = brownian(4, 2, 9);
        let b = f.base();
        let mut max_dm: f64 = 0.0;
        for i in 0..b.m() {
            for j in 0..=b.n() {
                max_dm = max_dm.max(chordal(b.get(i + 1, j), b.get(i, j)));
            }
        }
        let h = 1e-7;
        for k in 0..200 {
            let u = 0.003 + 0.99 * k as f64 / 200.0;
            let v = 0.37 + 0.001 * k as f64;
            let a = f.eval(u, v.min(1.0)).unwrap();
            let c = f.eval(u + h, v.min(1.0)).unwrap();
            let slope = chordal(a.coords(), c.coords()) / h;
            assert!(slope <= max_dm * 16.0 * (1.0 + 1e-6));
        }
    }

    #[test]
    fn outside_window_is_a_domain_error() {
        let f = brownian(2, 1, 1);
        assert!(matches!(f.eval(1.0 + 1e-9, 0.5), Err(Error::Domain(_))));
        assert!(matches!(f.eval(0.5, -1e-9), Err(Error::Domain(_))));
        assert!(f.eval(1.0, 1.0).is_ok());
    }

    #[test]
    fn origin_shifts_the_window() {
        let base = brownian(2, 1, 1).into_base();
        let f = InterpolatedField::with_origin(base.clone(), 2, (1.0, 2.0));
        assert_eq!(f.eval(1.25, 2.5).unwrap().coords(), base.get(1, 2));
        assert!(f.eval(0.5, 2.5).is_err());
    }

    #[test]
    fn constant_preset_gives_constant_field() {
        let p = Preset::from_name("constant", 3).unwrap();
        let f = phi_n(BoundarySource::Functions(&p), 3, 1, &SolveOptions::default()).unwrap();
        assert_eq!(f.base().max_norm_drift(), 0.0);
        for i in 0..=16 {
            for j in 0..=16 {
                assert_eq!(f.base().get(i, j), SpherePoint::pole(3).coords());
            }
        }
    }

    #[test]
    fn circle_preset_exact_at_grid_points() {
        let p = Preset::CircleSin;
        let f = phi_n(BoundarySource::Functions(&p), 6, 0, &SolveOptions::default()).unwrap();
        for i in 0..=64 {
            for j in 0..=64 {
                let (u, v) = (i as f64 / 64.0, j as f64 / 64.0);
                let got = f.base().point(i, j).angle();
                assert!(wrap_angle(got - (u.sin() + v / 2.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn precession_preset_is_on_sphere_and_shares_origin() {
        let p = Preset::from_name("great-circle-precession", 4).unwrap();
        for k in 0..50 {
            let x = k as f64 * 0.13;
            assert!((norm(p.plus(x).coords()) - 1.0).abs() < 1e-15);
            assert!((norm(p.minus(x).coords()) - 1.0).abs() < 1e-15);
        }
        assert_eq!(p.plus(0.0), p.minus(0.0));
        assert!(Preset::from_name("great-circle-precession", 1).is_err());
        assert!(Preset::from_name("circle-sin", 2).is_err());
        assert!(Preset::from_name("spiral", 2).is_err());
    }

    #[test]
    fn pair_source_checks_size() {
        let mut rng = RngStream::new(1, 0);
        let b = sample_brownian_boundary(3, 0, 1, &mut rng).unwrap();
        let opts = SolveOptions::default();
        assert!(phi_n(BoundarySource::Pair(&b), 3, 0, &opts).is_ok());
        assert!(phi_n(BoundarySource::Pair(&b), 2, 0, &opts).is_err());
    }
}

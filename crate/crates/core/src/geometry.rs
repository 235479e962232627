//! Vector geometry on the unit sphere `S^d ⊂ R^{d+1}`.
//!
//! The lattice recursion only ever needs one primitive: the reflection
//! `R_Q P = 2 |Q|^{-2} (Q·P) Q - P` across the line spanned by `Q`, with the
//! convention `R_0 P = -P`. Everything here is pure and allocation-light; the
//! slice kernels (`*_into`) are what the solver and samplers call in their
//! inner loops, the typed wrappers are the public surface.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this norm the reflection axis is treated as zero and `R_0 = -Id` is used.
pub const AXIS_ZERO_TOL: f64 = 1e-14;
/// Allowed deviation of `|coords|` from 1 when constructing a [`SpherePoint`].
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Normal component of a tangent vector that is silently projected away.
pub const TANGENT_TOL: f64 = 1e-10;

/// A vector in `R^{d+1}` with finite entries, not necessarily of unit length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientVector(Vec<f64>);

impl AmbientVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("ambient vector must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ambient vector has non-finite entries"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl From<SpherePoint> for AmbientVector {
    fn from(p: SpherePoint) -> Self {
        Self(p.0)
    }
}

/// A unit vector in `R^{d+1}`, `d ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Validates `| |coords| - 1 | ≤ 1e-12` and `d ≥ 1`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(coords, UNIT_NORM_TOL)
    }

    pub fn with_tolerance(coords: Vec<f64>, tol: f64) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::UnsupportedDimension(coords.len().saturating_sub(1)));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("sphere point has non-finite entries"));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > tol {
            return Err(Error::Validation(format!(
                "sphere point norm {n} deviates from 1 by more than {tol:e}"
            )));
        }
        Ok(Self(coords))
    }

    /// Projects a non-zero vector radially onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::UnsupportedDimension(coords.len().saturating_sub(1)));
        }
        let n = norm(&coords);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self(coords))
    }

    /// The point `(cos θ, sin θ)` on the circle `S^1`.
    pub fn from_angle(theta: f64) -> Self {
        Self(vec![theta.cos(), theta.sin()])
    }

    /// The first basis vector `e_0` of `R^{d+1}`.
    pub fn pole(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[0] = 1.0;
        Self(c)
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.len() >= 2);
        Self(coords)
    }

    /// Sphere dimension `d` (one less than the ambient dimension).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Polar angle of the projection onto the first two coordinates.
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    pub fn to_ambient(&self) -> AmbientVector {
        AmbientVector(self.0.clone())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance `|a - b|`.
#[inline]
pub fn chordal(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out = R_axis p`.
#[inline]
pub fn reflect_into(axis: &[f64], p: &[f64], out: &mut [f64]) {
    let nsq = dot(axis, axis);
    if nsq > AXIS_ZERO_TOL * AXIS_ZERO_TOL {
        let c = 2.0 * dot(axis, p) / nsq;
        for ((o, a), x) in out.iter_mut().zip(axis).zip(p) {
            *o = c * a - x;
        }
    } else {
        for (o, x) in out.iter_mut().zip(p) {
            *o = -x;
        }
    }
}

/// `out = R_{p+q} s`, the single-cell update of the discrete wave map.
///
/// Returns `|p + q|²` so callers can monitor how close the step came to the
/// antipodal branch.
#[inline]
pub fn wave_step_into(p: &[f64], q: &[f64], s: &[f64], out: &mut [f64], renormalize: bool) -> f64 {
    let mut nsq = 0.0;
    let mut proj = 0.0;
    for i in 0..s.len() {
        let a = p[i] + q[i];
        nsq += a * a;
        proj += a * s[i];
    }
    if nsq > AXIS_ZERO_TOL * AXIS_ZERO_TOL {
        let c = 2.0 * proj / nsq;
        for i in 0..s.len() {
            out[i] = c * (p[i] + q[i]) - s[i];
        }
    } else {
        for i in 0..s.len() {
            out[i] = -s[i];
        }
    }
    if renormalize {
        let n = norm(out);
        out.iter_mut().for_each(|x| *x /= n);
    }
    nsq
}

/// `out = exp_x(v)`; `v` is projected onto the tangent plane at `x` first.
///
/// `scratch` must have the same length as `x`.
pub fn exp_map_into(x: &[f64], v: &[f64], scratch: &mut [f64], out: &mut [f64]) {
    let normal = dot(x, v);
    for i in 0..x.len() {
        scratch[i] = v[i] - normal * x[i];
    }
    let speed = norm(scratch);
    if speed < 1e-15 {
        out.copy_from_slice(x);
        return;
    }
    let (s, c) = speed.sin_cos();
    for i in 0..x.len() {
        out[i] = c * x[i] + s * scratch[i] / speed;
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::mismatch(format!("ambient dimension {a}"), b));
    }
    Ok(())
}

/// Reflection of `p` across the line spanned by `axis`; `R_0 p = -p`.
pub fn reflect_across(axis: &AmbientVector, p: &AmbientVector) -> Result<AmbientVector> {
    check_dims(axis.len(), p.len())?;
    if axis.0.iter().chain(&p.0).any(|c| !c.is_finite()) {
        return Err(Error::invalid("reflection input has non-finite entries"));
    }
    let mut out = vec![0.0; p.len()];
    reflect_into(&axis.0, &p.0, &mut out);
    Ok(AmbientVector(out))
}

/// `R_{p+q} s` with renormalization off.
pub fn wave_step(p: &SpherePoint, q: &SpherePoint, s: &SpherePoint) -> Result<SpherePoint> {
    wave_step_with(p, q, s, false)
}

pub fn wave_step_with(
    p: &SpherePoint,
    q: &SpherePoint,
    s: &SpherePoint,
    renormalize: bool,
) -> Result<SpherePoint> {
    check_dims(p.0.len(), q.0.len())?;
    check_dims(p.0.len(), s.0.len())?;
    let mut out = vec![0.0; s.0.len()];
    wave_step_into(&p.0, &q.0, &s.0, &mut out, renormalize);
    Ok(SpherePoint(out))
}

/// The same update written through the inversion `I(p+q) = (p+q)/|p+q|²`:
/// `p + q - s - 2[(s-p)·(s-q)] I(p+q)`. Only defined off the antipodal set.
pub fn wave_step_inversion_form(
    p: &SpherePoint,
    q: &SpherePoint,
    s: &SpherePoint,
) -> Result<AmbientVector> {
    check_dims(p.0.len(), q.0.len())?;
    check_dims(p.0.len(), s.0.len())?;
    let sum: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| a + b).collect();
    let inv = invert_in_sphere(&AmbientVector(sum.clone()))?;
    let w: f64 = (0..s.0.len())
        .map(|i| (s.0[i] - p.0[i]) * (s.0[i] - q.0[i]))
        .sum();
    Ok(AmbientVector(
        (0..s.0.len())
            .map(|i| sum[i] - s.0[i] - 2.0 * w * inv.0[i])
            .collect(),
    ))
}

/// Inversion in the unit sphere, `q / |q|²`.
pub fn invert_in_sphere(q: &AmbientVector) -> Result<AmbientVector> {
    let nsq = dot(&q.0, &q.0);
    if nsq.sqrt() <= AXIS_ZERO_TOL {
        return Err(Error::DegenerateAxis(nsq.sqrt()));
    }
    Ok(AmbientVector(q.0.iter().map(|c| c / nsq).collect()))
}

/// Exponential map of the sphere at `x`.
pub fn exp_map(x: &SpherePoint, v: &AmbientVector) -> Result<SpherePoint> {
    check_dims(x.0.len(), v.len())?;
    let mut scratch = vec![0.0; x.0.len()];
    let mut out = vec![0.0; x.0.len()];
    exp_map_into(&x.0, &v.0, &mut scratch, &mut out);
    Ok(SpherePoint(out))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    /// `|x - y|`, in `[0, 2]`.
    pub chordal: f64,
    /// Great-circle distance in radians, in `[0, π]`.
    pub geodesic: f64,
}

pub fn distances(x: &SpherePoint, y: &SpherePoint) -> Distances {
    let c = chordal(&x.0, &y.0);
    Distances {
        chordal: c,
        geodesic: arc_between(&x.0, &y.0).max(c).min(PI),
    }
}

/// Angle between unit vectors, `2 atan2(|a - b|, |a + b|)`.
///
/// Equal to `arccos(a·b)` but well conditioned for both nearly coincident
/// and nearly antipodal pairs.
#[inline]
pub fn arc_between(a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Null coordinates `(u, v) = (t + x, t - x)` of a point in the forward cone `|x| ≤ t`.
pub fn null_coords(t: f64, x: f64) -> Result<(f64, f64)> {
    if !(t.is_finite() && x.is_finite()) || x.abs() > t {
        return Err(Error::Domain(format!("(t, x) = ({t}, {x}) lies outside the light cone")));
    }
    Ok((t + x, t - x))
}

/// Inverse of [`null_coords`]: `(t, x) = ((u + v)/2, (u - v)/2)`.
pub fn from_null_coords(u: f64, v: f64) -> (f64, f64) {
    (0.5 * (u + v), 0.5 * (u - v))
}

/// Reduces an angle to `(-π, π]`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn amb(c: &[f64]) -> AmbientVector {
        AmbientVector::new(c.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn reflect_examples() {
        let r = reflect_across(&amb(&[1.0, 1.0]), &amb(&[1.0, 0.0])).unwrap();
        assert!(close(r.coords(), &[0.0, 1.0], 1e-15));
        let r = reflect_across(&amb(&[0.0, 0.0]), &amb(&[0.0, 1.0])).unwrap();
        assert_eq!(r.coords(), &[-0.0, -1.0]);
        let r = reflect_across(&amb(&[0.6, 0.8]), &amb(&[0.6, 0.8])).unwrap();
        assert!(close(r.coords(), &[0.6, 0.8], 1e-15));
    }

    #[test]
    fn reflect_rejects_non_finite() {
        let bad = AmbientVector(vec![f64::NAN, 0.0]);
        assert!(matches!(
            reflect_across(&bad, &amb(&[1.0, 0.0])),
            Err(Error::InvalidArgument(_))
        ));
        assert!(AmbientVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn wave_step_examples() {
        let x0 = SpherePoint::normalized(vec![0.3, -0.2, 0.9]).unwrap();
        let y = wave_step(&x0, &x0, &x0).unwrap();
        assert!(close(y.coords(), x0.coords(), 1e-15));

        // planar reflection: angle law 2ψ - γ with ψ = (α+β)/2
        let y = wave_step(
            &SpherePoint::from_angle(0.3),
            &SpherePoint::from_angle(0.5),
            &SpherePoint::from_angle(0.1),
        )
        .unwrap();
        let expected_angle = 0.3 + 0.5 - 0.1;
        assert!((y.angle() - expected_angle).abs() < 1e-14);

        let p = SpherePoint::new(vec![1.0, 0.0]).unwrap();
        let q = SpherePoint::new(vec![-1.0, 0.0]).unwrap();
        let s = SpherePoint::new(vec![0.0, 1.0]).unwrap();
        let y = wave_step(&p, &q, &s).unwrap();
        assert!(close(y.coords(), &[0.0, -1.0], 0.0));
    }

    #[test]
    fn renormalized_step_is_unit() {
        let p = SpherePoint::normalized(vec![1.0, 2.0, 3.0]).unwrap();
        let q = SpherePoint::normalized(vec![-1.0, 0.5, 3.0]).unwrap();
        let s = SpherePoint::normalized(vec![0.0, 1.0, -1.0]).unwrap();
        let y = wave_step_with(&p, &q, &s, true).unwrap();
        assert!((norm(y.coords()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inversion_examples() {
        assert!(close(invert_in_sphere(&amb(&[2.0, 0.0])).unwrap().coords(), &[0.5, 0.0], 0.0));
        assert!(close(invert_in_sphere(&amb(&[0.0, 1.0])).unwrap().coords(), &[0.0, 1.0], 0.0));
        assert!(close(
            invert_in_sphere(&amb(&[0.5, 0.5])).unwrap().coords(),
            &[1.0, 1.0],
            1e-15
        ));
        assert!(matches!(
            invert_in_sphere(&amb(&[0.0, 1e-16])),
            Err(Error::DegenerateAxis(_))
        ));
    }

    #[test]
    fn exp_map_examples() {
        let x = SpherePoint::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(exp_map(&x, &amb(&[0.0, 0.0])).unwrap(), x);
        let y = exp_map(&x, &amb(&[0.0, PI / 2.0])).unwrap();
        assert!(close(y.coords(), &[0.0, 1.0], 1e-15));
        let x = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let y = exp_map(&x, &amb(&[0.0, PI, 0.0])).unwrap();
        assert!(close(y.coords(), &[-1.0, 0.0, 0.0], 1e-15));
        // slightly off-tangent input is projected
        let y = exp_map(&x, &amb(&[1e-11, PI / 2.0, 0.0])).unwrap();
        assert!(close(y.coords(), &[0.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn distance_examples() {
        let a = SpherePoint::new(vec![1.0, 0.0]).unwrap();
        let b = SpherePoint::new(vec![-1.0, 0.0]).unwrap();
        let c = SpherePoint::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(distances(&a, &a), Distances { chordal: 0.0, geodesic: 0.0 });
        let d = distances(&a, &b);
        assert_eq!(d.chordal, 2.0);
        assert!((d.geodesic - PI).abs() < 1e-15);
        let d = distances(&a, &c);
        assert!((d.chordal - 2f64.sqrt()).abs() < 1e-15);
        assert!((d.geodesic - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn null_coordinate_examples() {
        assert_eq!(null_coords(1.0, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(null_coords(1.0, 1.0).unwrap(), (2.0, 0.0));
        assert_eq!(null_coords(2.0, -1.0).unwrap(), (1.0, 3.0));
        assert_eq!(from_null_coords(1.0, 3.0), (2.0, -1.0));
        assert!(matches!(null_coords(1.0, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn sphere_point_validation() {
        assert!(SpherePoint::new(vec![1.0]).is_err());
        assert!(SpherePoint::new(vec![1.0, 1e-5]).is_err());
        assert!(SpherePoint::new(vec![0.6, 0.8]).is_ok());
    }

    fn sphere(dim: usize) -> impl Strategy<Value = SpherePoint> {
        prop::collection::vec(-1.0f64..1.0, dim + 1)
            .prop_filter("non-zero", |v| norm(v) > 1e-3)
            .prop_map(|v| SpherePoint::normalized(v).unwrap())
    }

    fn triple() -> impl Strategy<Value = (SpherePoint, SpherePoint, SpherePoint)> {
        (1usize..=3).prop_flat_map(|d| (sphere(d), sphere(d), sphere(d)))
    }

    proptest! {
        #[test]
        fn reflection_is_involutive_isometry(
            a in prop::collection::vec(-2.0f64..2.0, 3),
            p in prop::collection::vec(-2.0f64..2.0, 3),
            q in prop::collection::vec(-2.0f64..2.0, 3),
            zero_axis in any::<bool>(),
        ) {
            let a = if zero_axis { AmbientVector::zeros(3) } else { amb(&a) };
            let p = amb(&p);
            let q = amb(&q);
            let rp = reflect_across(&a, &p).unwrap();
            let rrp = reflect_across(&a, &rp).unwrap();
            prop_assert!(close(rrp.coords(), p.coords(), 1e-12));
            prop_assert!((rp.norm() - p.norm()).abs() < 1e-12);
            let rq = reflect_across(&a, &q).unwrap();
            let lhs = chordal(rp.coords(), rq.coords());
            let rhs = chordal(p.coords(), q.coords());
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn exchange_identity((p, q, _s) in triple()) {
            prop_assume!(chordal(p.coords(), &q.coords().iter().map(|c| -c).collect::<Vec<_>>()) > 1e-3);
            let axis = AmbientVector(p.coords().iter().zip(q.coords()).map(|(a, b)| a + b).collect());
            let rp = reflect_across(&axis, &p.to_ambient()).unwrap();
            let rq = reflect_across(&axis, &q.to_ambient()).unwrap();
            prop_assert!(close(rp.coords(), q.coords(), 1e-12));
            prop_assert!(close(rq.coords(), p.coords(), 1e-12));
        }

        #[test]
        fn inversion_form_matches((p, q, s) in triple()) {
            let sum: Vec<f64> = p.coords().iter().zip(q.coords()).map(|(a, b)| a + b).collect();
            prop_assume!(norm(&sum) > 1e-3);
            let a = wave_step(&p, &q, &s).unwrap();
            let b = wave_step_inversion_form(&p, &q, &s).unwrap();
            prop_assert!(close(a.coords(), b.coords(), 1e-12));
            prop_assert!((norm(a.coords()) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn circle_angle_law(a in -PI..PI, b in -PI..PI, c in -PI..PI) {
            prop_assume!((wrap_angle(a - b).abs() - PI).abs() > 1e-3);
            let y = wave_step(
                &SpherePoint::from_angle(a),
                &SpherePoint::from_angle(b),
                &SpherePoint::from_angle(c),
            ).unwrap();
            prop_assert!(wrap_angle(y.angle() - (a + b - c)).abs() < 1e-10);
        }

        #[test]
        fn chordal_below_geodesic((p, q, _s) in triple()) {
            let d = distances(&p, &q);
            prop_assert!(d.chordal <= d.geodesic);
            prop_assert!((0.0..=2.0).contains(&d.chordal));
            prop_assert!((0.0..=PI).contains(&d.geodesic));
        }
    }
}

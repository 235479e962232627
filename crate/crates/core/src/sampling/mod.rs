//! Sphere-valued random boundary data.
//!
//! Heat-kernel transitions use the generator `½Δ`. On the circle the kernel
//! is exactly a wrapped Gaussian of variance `t`, so `d = 1` steps are exact;
//! for `d ≥ 2` a geodesic random walk with `K` substeps is used, which has a
//! weak bias of order `t/K` per step.

mod io;
mod kernel;
mod rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{exp_map_into, norm, SpherePoint};

pub use io::{read_boundary_csv, write_boundary_csv, IMPORT_NORM_TOL};
pub use kernel::{
    default_truncation, heat_kernel_density, kernel_reflection_identity_check,
    KERNEL_SERIES_TAIL,
};
pub use rng::{Purpose, RngStream};

pub const DEFAULT_SUBSTEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMethod {
    /// Wrapped Gaussian angle increment; circle only.
    ExactWrap,
    /// `K` exponential-map steps with tangent Gaussian increments.
    GeodesicWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatChainParams {
    pub t: f64,
    pub d: usize,
    pub method: SamplerMethod,
    pub substeps: usize,
}

impl HeatChainParams {
    pub fn new(t: f64, d: usize, method: SamplerMethod, substeps: usize) -> Result<Self> {
        let params = Self {
            t,
            d,
            method,
            substeps,
        };
        params.validate()?;
        Ok(params)
    }

    /// Exact sampler at `d = 1`, geodesic walk with [`DEFAULT_SUBSTEPS`] otherwise.
    pub fn for_dimension(t: f64, d: usize) -> Result<Self> {
        let method = if d == 1 {
            SamplerMethod::ExactWrap
        } else {
            SamplerMethod::GeodesicWalk
        };
        Self::new(t, d, method, DEFAULT_SUBSTEPS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Domain(format!("heat time t = {} must be positive", self.t)));
        }
        if self.d == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        if self.method == SamplerMethod::ExactWrap && self.d != 1 {
            return Err(Error::invalid("exact-wrap sampling requires d = 1"));
        }
        Ok(())
    }
}

/// Reusable buffers for stepping a chain without allocating.
pub(crate) struct StepScratch {
    noise: Vec<f64>,
    tangent: Vec<f64>,
    tmp: Vec<f64>,
}

impl StepScratch {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            noise: vec![0.0; len],
            tangent: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }
}

pub(crate) fn uniform_point_into(rng: &mut RngStream, out: &mut [f64]) {
    loop {
        out.iter_mut().for_each(|c| *c = rng.standard_normal());
        let n = norm(out);
        if n > 1e-8 {
            out.iter_mut().for_each(|c| *c /= n);
            return;
        }
    }
}

/// Uniformly distributed point on `S^d` (normalized standard Gaussian).
pub fn uniform_point(rng: &mut RngStream, d: usize) -> Result<SpherePoint> {
    if d == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let mut c = vec![0.0; d + 1];
    uniform_point_into(rng, &mut c);
    Ok(SpherePoint::from_raw(c))
}

pub(crate) fn heat_step_into(
    x: &[f64],
    params: &HeatChainParams,
    rng: &mut RngStream,
    scratch: &mut StepScratch,
    out: &mut [f64],
) {
    match params.method {
        SamplerMethod::ExactWrap => {
            let theta = x[1].atan2(x[0]) + params.t.sqrt() * rng.standard_normal();
            let theta = theta.rem_euclid(std::f64::consts::TAU);
            let (s, c) = theta.sin_cos();
            out[0] = c;
            out[1] = s;
        }
        SamplerMethod::GeodesicWalk => {
            let sigma = (params.t / params.substeps as f64).sqrt();
            scratch.tmp.copy_from_slice(x);
            for _ in 0..params.substeps {
                scratch
                    .noise
                    .iter_mut()
                    .for_each(|c| *c = sigma * rng.standard_normal());
                exp_map_into(&scratch.tmp, &scratch.noise, &mut scratch.tangent, out);
                scratch.tmp.copy_from_slice(out);
            }
            let n = norm(out);
            out.iter_mut().for_each(|c| *c /= n);
        }
    }
}

/// One transition of the heat Markov chain with parameter `params.t`.
pub fn heat_step(x: &SpherePoint, params: &HeatChainParams, rng: &mut RngStream) -> Result<SpherePoint> {
    params.validate()?;
    if x.dim() != params.d {
        return Err(Error::mismatch(format!("d = {}", params.d), format!("d = {}", x.dim())));
    }
    let len = params.d + 1;
    let mut scratch = StepScratch::new(len);
    let mut out = vec![0.0; len];
    heat_step_into(x.coords(), params, rng, &mut scratch, &mut out);
    Ok(SpherePoint::from_raw(out))
}

/// `X(0) = x0`, then `length` heat steps; returns `length + 1` points.
pub fn sample_heat_chain(
    x0: &SpherePoint,
    params: &HeatChainParams,
    length: usize,
    rng: &mut RngStream,
) -> Result<Vec<SpherePoint>> {
    params.validate()?;
    if x0.dim() != params.d {
        return Err(Error::mismatch(format!("d = {}", params.d), format!("d = {}", x0.dim())));
    }
    let len = params.d + 1;
    let mut scratch = StepScratch::new(len);
    let mut chain = Vec::with_capacity(length + 1);
    chain.push(x0.clone());
    for i in 0..length {
        let mut out = vec![0.0; len];
        heat_step_into(chain[i].coords(), params, rng, &mut scratch, &mut out);
        chain.push(SpherePoint::from_raw(out));
    }
    Ok(chain)
}

/// Two sphere-valued sequences with a common origin `y_plus[0] == y_minus[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    y_plus: Vec<SpherePoint>,
    y_minus: Vec<SpherePoint>,
}

impl BoundaryPair {
    pub fn new(y_plus: Vec<SpherePoint>, y_minus: Vec<SpherePoint>) -> Result<Self> {
        if y_plus.is_empty() || y_minus.is_empty() {
            return Err(Error::invalid("boundary sequences must be non-empty"));
        }
        let d = y_plus[0].dim();
        if y_plus.iter().chain(&y_minus).any(|p| p.dim() != d) {
            return Err(Error::mismatch(format!("d = {d}"), "mixed sphere dimensions"));
        }
        if y_plus[0] != y_minus[0] {
            return Err(Error::invalid("boundary data must share the origin Y+(0) = Y-(0)"));
        }
        Ok(Self { y_plus, y_minus })
    }

    /// Builds a pair from sampled boundary functions on `[0, m]` and `[0, n]`.
    pub fn from_fns(
        m: usize,
        n: usize,
        plus: impl Fn(usize) -> SpherePoint,
        minus: impl Fn(usize) -> SpherePoint,
    ) -> Result<Self> {
        let y_plus: Vec<_> = (0..=m).map(&plus).collect();
        let mut y_minus: Vec<_> = (0..=n).map(&minus).collect();
        y_minus[0] = y_plus[0].clone();
        Self::new(y_plus, y_minus)
    }

    pub fn y_plus(&self) -> &[SpherePoint] {
        &self.y_plus
    }

    pub fn y_minus(&self) -> &[SpherePoint] {
        &self.y_minus
    }

    /// `M`, the last index of `y_plus`.
    pub fn m(&self) -> usize {
        self.y_plus.len() - 1
    }

    /// `N`, the last index of `y_minus`.
    pub fn n(&self) -> usize {
        self.y_minus.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.y_plus[0].dim()
    }

    /// `Y-(N), …, Y-(0) = Y+(0), …, Y+(M)`.
    pub fn as_chain(&self) -> Vec<SpherePoint> {
        self.y_minus
            .iter()
            .rev()
            .chain(&self.y_plus[1..])
            .cloned()
            .collect()
    }
}

/// How the junction point `Y±(0)` of a sampled boundary is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum JunctionStart {
    /// Uniform on the sphere; the resulting chain is stationary.
    Uniform,
    /// A fixed point; breaks stationarity (used as a negative control).
    Fixed(SpherePoint),
}

/// Samples a heat Markov chain through the junction: the junction point is
/// drawn first, then `y_plus` and `y_minus` are run outward from it. By
/// reversibility of the heat kernel the concatenation
/// `Y-(n), …, Y-(0), …, Y+(m)` is a single heat chain.
pub fn sample_boundary(
    m: usize,
    n: usize,
    params: &HeatChainParams,
    start: &JunctionStart,
    rng: &mut RngStream,
) -> Result<BoundaryPair> {
    params.validate()?;
    let origin = match start {
        JunctionStart::Uniform => uniform_point(rng, params.d)?,
        JunctionStart::Fixed(p) => {
            if p.dim() != params.d {
                return Err(Error::mismatch(format!("d = {}", params.d), format!("d = {}", p.dim())));
            }
            p.clone()
        }
    };
    let y_plus = sample_heat_chain(&origin, params, m, rng)?;
    let y_minus = sample_heat_chain(&origin, params, n, rng)?;
    BoundaryPair::new(y_plus, y_minus)
}

/// Brownian boundary at mesh `2^{-N}` over the window `[0, 2^L]`: both sides
/// have `2^{N+L} + 1` points and the chain parameter is `t = 2^{-N}`.
pub fn sample_brownian_boundary(
    mesh_exp: u32,
    window_exp: u32,
    d: usize,
    rng: &mut RngStream,
) -> Result<BoundaryPair> {
    let params = HeatChainParams::for_dimension(mesh_time(mesh_exp), d)?;
    sample_brownian_boundary_with(mesh_exp, window_exp, &params, &JunctionStart::Uniform, rng)
}

pub fn sample_brownian_boundary_with(
    mesh_exp: u32,
    window_exp: u32,
    params: &HeatChainParams,
    start: &JunctionStart,
    rng: &mut RngStream,
) -> Result<BoundaryPair> {
    let side = lattice_side(mesh_exp, window_exp)?;
    sample_boundary(side, side, params, start, rng)
}

/// `2^{-N}`.
pub fn mesh_time(mesh_exp: u32) -> f64 {
    (-(mesh_exp as f64)).exp2()
}

/// `2^{N+L}`, the number of lattice steps across the window.
pub fn lattice_side(mesh_exp: u32, window_exp: u32) -> Result<usize> {
    let e = mesh_exp + window_exp;
    if e > 24 {
        return Err(Error::invalid(format!("N + L = {e} is too large")));
    }
    Ok(1usize << e)
}

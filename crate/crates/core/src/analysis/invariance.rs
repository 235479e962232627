//! Distributional invariance of sampled lattice fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::path::{path_values, StaircasePath};
use super::stats::{ks_one_sample, ks_two_sample, lag1_correlation, wrapped_normal_cdf};
use crate::error::{Error, Result};
use crate::geometry::{chordal, dot, wrap_angle};
use crate::sampling::{
    lattice_side, mesh_time, sample_brownian_boundary_with, sample_heat_chain, uniform_point,
    HeatChainParams, JunctionStart, Purpose, RngStream,
};
use crate::solver::{solve_with, CellRule, DiscreteField, SolveOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Fail,
}

impl Decision {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Decision::Pass
        } else {
            Decision::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Decision::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub name: String,
    pub sample_size: usize,
    pub statistic: f64,
    /// The statistic passes iff it does not exceed this value.
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub decision: Decision,
}

impl TestStatistic {
    fn new(name: String, sample_size: usize, statistic: f64, threshold: f64, p_value: Option<f64>) -> Self {
        Self {
            name,
            sample_size,
            statistic,
            threshold,
            p_value,
            decision: Decision::from_pass(statistic <= threshold),
        }
    }
}

/// Reproducible record of a statistical test: rerunning with the same
/// `seed` and `params` yields the same report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub test: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub statistics: Vec<TestStatistic>,
    pub decision: Decision,
}

impl StatsReport {
    fn new(test: &str, params: serde_json::Value, seed: u64, statistics: Vec<TestStatistic>) -> Self {
        let decision = Decision::from_pass(statistics.iter().all(|s| s.decision.passed()));
        Self {
            test: test.into(),
            params,
            seed,
            statistics,
            decision,
        }
    }

    pub fn passed(&self) -> bool {
        self.decision.passed()
    }

    /// Largest ratio of statistic to threshold.
    pub fn worst_ratio(&self) -> f64 {
        self.statistics
            .iter()
            .map(|s| s.statistic / s.threshold)
            .fold(0.0, f64::max)
    }
}

/// Common ensemble parameters: `replicas` Brownian boundaries at mesh
/// `2^{-N}` on `[0, 2^L]`, one stream per replica.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replicas: usize,
    pub mesh_exp: u32,
    pub window_exp: u32,
    pub d: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl EnsembleConfig {
    fn params(&self) -> Result<HeatChainParams> {
        HeatChainParams::for_dimension(mesh_time(self.mesh_exp), self.d)
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "replicas": self.replicas,
            "mesh_exp": self.mesh_exp,
            "window_exp": self.window_exp,
            "d": self.d,
            "alpha": self.alpha,
        })
    }

    /// Solves every replica in parallel and maps it through `f`; results
    /// are returned in replica order.
    fn map_fields<T: Send>(
        &self,
        start: &JunctionStart,
        opts: &SolveOptions,
        f: impl Fn(&DiscreteField) -> T + Sync,
    ) -> Result<Vec<T>> {
        let params = self.params()?;
        (0..self.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::replica(self.seed, Purpose::Boundary, r);
                let b = sample_brownian_boundary_with(self.mesh_exp, self.window_exp, &params, start, &mut rng)?;
                Ok(f(&solve_with(&b, None, opts)?))
            })
            .collect()
    }
}

/// Boundary, diagonal and far-corner paths on a `side × side` lattice.
pub fn standard_paths(side: usize) -> Vec<(String, StaircasePath)> {
    vec![
        ("boundary".into(), StaircasePath::boundary(side, side)),
        ("diagonal".into(), StaircasePath::diagonal(side, side)),
        ("far-corner".into(), StaircasePath::far_corner(side, side)),
    ]
}

/// Per-step statistic: signed angle increment at `d = 1`, chordal step
/// length otherwise.
fn increments(values: &[&[f64]], d: usize) -> Vec<f64> {
    values
        .windows(2)
        .map(|w| {
            if d == 1 {
                wrap_angle(w[1][1].atan2(w[1][0]) - w[0][1].atan2(w[0][0]))
            } else {
                chordal(w[0], w[1])
            }
        })
        .collect()
}

/// Checks that field values along each staircase path form a heat chain
/// with parameter `2^{-N}`.
///
/// At `d = 1` the pooled signed increments are tested against the wrapped
/// normal law exactly. At `d ≥ 2` pooled chordal step lengths are compared
/// with an independently sampled chain, and `bias_budget` is added to the
/// critical value to absorb the sampler's discretization bias. Both modes
/// also require the lag-1 correlation of increments to satisfy
/// `|r| ≤ 4/√pairs`.
pub fn chain_invariance_test(
    config: &EnsembleConfig,
    paths: &[(String, StaircasePath)],
    rule: CellRule,
    bias_budget: f64,
) -> Result<StatsReport> {
    if paths.is_empty() {
        return Err(Error::invalid("at least one path is required"));
    }
    let side = lattice_side(config.mesh_exp, config.window_exp)?;
    if let Some((name, _)) = paths.iter().find(|(_, p)| p.dims() != (side, side)) {
        return Err(Error::invalid(format!("path {name} does not fit the {side}x{side} lattice")));
    }
    let opts = SolveOptions {
        rule,
        ..SolveOptions::default()
    };
    let d = config.d;
    let per_replica = config.map_fields(&JunctionStart::Uniform, &opts, |f| {
        paths
            .iter()
            .map(|(_, p)| increments(&path_values(f, p), d))
            .collect::<Vec<_>>()
    })?;
    let t = mesh_time(config.mesh_exp);
    let level = config.alpha / paths.len() as f64;

    let reference = if d == 1 {
        Vec::new()
    } else {
        let params = config.params()?;
        let mut rng = RngStream::with_purpose(config.seed, Purpose::Diagnostics, 0);
        let x0 = uniform_point(&mut rng, d)?;
        let chain = sample_heat_chain(&x0, &params, config.replicas * 2 * side, &mut rng)?;
        chain.windows(2).map(|w| chordal(w[0].coords(), w[1].coords())).collect()
    };

    let mut stats = Vec::new();
    for (k, (name, _)) in paths.iter().enumerate() {
        let seqs: Vec<Vec<f64>> = per_replica.iter().map(|r| r[k].clone()).collect();
        let pooled: Vec<f64> = seqs.iter().flatten().copied().collect();
        if d == 1 {
            let ks = ks_one_sample(&pooled, |x| wrapped_normal_cdf(x, t))?;
            stats.push(TestStatistic::new(
                format!("{name}/ks-wrapped-normal"),
                pooled.len(),
                ks.statistic,
                ks.critical_value(level),
                Some(ks.p_value),
            ));
        } else {
            let ks = ks_two_sample(&pooled, &reference)?;
            stats.push(TestStatistic::new(
                format!("{name}/ks-step-length"),
                pooled.len(),
                ks.statistic,
                ks.critical_value(level) + bias_budget,
                Some(ks.p_value),
            ));
        }
        let (r, pairs) = lag1_correlation(&seqs);
        stats.push(TestStatistic::new(
            format!("{name}/lag1-correlation"),
            pairs,
            r.abs(),
            4.0 / (pairs.max(1) as f64).sqrt(),
            None,
        ));
    }
    let mut params = config.json();
    params["paths"] = json!(paths.iter().map(|(n, _)| n).collect::<Vec<_>>());
    params["rule"] = json!(rule);
    params["bias_budget"] = json!(bias_budget);
    Ok(StatsReport::new("chain-invariance", params, config.seed, stats))
}

/// Compares the joint law of field values at `probes` with the law at the
/// translated probes `probes + offset`: first-coordinate marginals at every
/// probe and pairwise dot products, each by a two-sample KS test. Both
/// probe sets are read from the same replicas.
pub fn translation_invariance_test(
    config: &EnsembleConfig,
    offset: (usize, usize),
    probes: &[(usize, usize)],
    start: &JunctionStart,
) -> Result<StatsReport> {
    if probes.is_empty() {
        return Err(Error::invalid("at least one probe is required"));
    }
    let side = lattice_side(config.mesh_exp, config.window_exp)?;
    let fits = |&(i, j): &(usize, usize)| i + offset.0 <= side && j + offset.1 <= side;
    if !probes.iter().all(fits) {
        return Err(Error::invalid(format!(
            "translated probes leave the {side}x{side} lattice"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..probes.len())
        .flat_map(|a| (a + 1..probes.len()).map(move |b| (a, b)))
        .collect();
    let shifted: Vec<(usize, usize)> = probes.iter().map(|&(i, j)| (i + offset.0, j + offset.1)).collect();
    let statistics = |f: &DiscreteField, at: &[(usize, usize)]| -> Vec<f64> {
        let marg = at.iter().map(|&(i, j)| f.get(i, j)[0]);
        let dots = pairs
            .iter()
            .map(|&(a, b)| dot(f.get(at[a].0, at[a].1), f.get(at[b].0, at[b].1)));
        marg.chain(dots).collect()
    };
    let samples = config.map_fields(start, &SolveOptions::default(), |f| {
        (statistics(f, probes), statistics(f, &shifted))
    })?;

    let mut names: Vec<String> = probes.iter().map(|p| format!("x0 at {p:?}")).collect();
    names.extend(pairs.iter().map(|&(a, b)| format!("dot {:?}.{:?}", probes[a], probes[b])));
    let level = config.alpha / names.len() as f64;
    let mut stats = Vec::new();
    for (k, name) in names.into_iter().enumerate() {
        let base: Vec<f64> = samples.iter().map(|s| s.0[k]).collect();
        let moved: Vec<f64> = samples.iter().map(|s| s.1[k]).collect();
        let ks = ks_two_sample(&base, &moved)?;
        stats.push(TestStatistic::new(
            name,
            base.len(),
            ks.statistic,
            ks.critical_value(level),
            Some(ks.p_value),
        ));
    }
    let mut params = config.json();
    params["offset"] = json!(offset);
    params["probes"] = json!(probes);
    params["junction"] = json!(match start {
        JunctionStart::Uniform => "uniform".to_string(),
        JunctionStart::Fixed(p) => format!("fixed {:?}", p.coords()),
    });
    Ok(StatsReport::new("translation", params, config.seed, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpherePoint;

    fn config(replicas: usize, d: usize) -> EnsembleConfig {
        EnsembleConfig {
            replicas,
            mesh_exp: 4,
            window_exp: 0,
            d,
            seed: 21,
            alpha: 0.01,
        }
    }

    #[test]
    fn chain_test_passes_and_is_reproducible() {
        let c = config(200, 1);
        let paths = standard_paths(16);
        let a = chain_invariance_test(&c, &paths, CellRule::Reflection, 0.0).unwrap();
        assert!(a.passed(), "{a:?}");
        let b = chain_invariance_test(&c, &paths, CellRule::Reflection, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_test_rejects_identity_step() {
        let c = config(200, 1);
        let r = chain_invariance_test(&c, &standard_paths(16), CellRule::IdentityStep, 0.0).unwrap();
        assert!(!r.passed());
        // the boundary path is untouched by the corruption
        assert!(r.statistics[0].decision.passed());
    }

    #[test]
    fn chain_test_in_bias_budget_mode() {
        let c = config(100, 2);
        let r = chain_invariance_test(&c, &standard_paths(16), CellRule::Reflection, 0.02).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = chain_invariance_test(&c, &standard_paths(16), CellRule::IdentityStep, 0.02).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn zero_offset_is_trivial() {
        let c = config(50, 1);
        let r = translation_invariance_test(&c, (0, 0), &[(1, 1), (2, 5)], &JunctionStart::Uniform).unwrap();
        assert!(r.statistics.iter().all(|s| s.statistic == 0.0));
        assert_eq!(r.statistics.len(), 3);
    }

    #[test]
    fn translation_passes_for_stationary_and_fails_for_fixed_start() {
        let c = config(400, 1);
        let probes = [(1, 1), (2, 5)];
        let ok = translation_invariance_test(&c, (8, 8), &probes, &JunctionStart::Uniform).unwrap();
        assert!(ok.passed(), "{ok:?}");
        let fixed = JunctionStart::Fixed(SpherePoint::pole(1));
        let bad = translation_invariance_test(&c, (8, 8), &probes, &fixed).unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn probes_must_fit() {
        let c = config(2, 1);
        assert!(translation_invariance_test(&c, (8, 8), &[(9, 1)], &JunctionStart::Uniform).is_err());
        assert!(chain_invariance_test(&c, &standard_paths(8), CellRule::Reflection, 0.0).is_err());
    }
}

//! Edge-independent random graphs and their mean-field block quantities.
//!
//! Every unordered pair `{u, v}`, including `u == v`, is an independent
//! Bernoulli draw. Pairs are visited in a fixed order (`u` ascending, then
//! `v >= u` ascending), one uniform draw per pair, so a given stream always
//! produces the same graph.

use rand::Rng;

use crate::graph::{CommunitySet, Graph};
use crate::rng::{RngConfig, TrialRng};
use crate::{Error, Result};

/// Two-block stochastic block model `(n1, p1, n0, p0, q)`.
///
/// Vertices `0..n1` form block C₁ (the community of interest) and
/// `n1..n1 + n0` form C₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmSpec {
    pub n1: usize,
    pub p1: f64,
    pub n0: usize,
    pub p0: f64,
    pub q: f64,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {p} must lie in (0, 1)")))
    }
}

impl SbmSpec {
    pub fn new(n1: usize, p1: f64, n0: usize, p0: f64, q: f64) -> Result<SbmSpec> {
        let spec = SbmSpec { n1, p1, n0, p0, q };
        spec.validate()?;
        Ok(spec)
    }

    /// Symmetric model `(n, p, n, p, q)`.
    pub fn symmetric(n: usize, p: f64, q: f64) -> Result<SbmSpec> {
        SbmSpec::new(n, p, n, p, q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n0 == 0 {
            return Err(Error::InvalidParameter(format!(
                "block sizes must be positive, got n1 = {}, n0 = {}",
                self.n1, self.n0
            )));
        }
        check_probability("p1", self.p1)?;
        check_probability("p0", self.p0)?;
        check_probability("q", self.q)
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n0
    }

    pub fn in_c1(&self, v: usize) -> bool {
        v < self.n1
    }

    pub fn edge_probability(&self, u: usize, v: usize) -> f64 {
        match (self.in_c1(u), self.in_c1(v)) {
            (true, true) => self.p1,
            (false, false) => self.p0,
            _ => self.q,
        }
    }

    pub fn communities(&self) -> CommunitySet {
        CommunitySet::new(vec![(0..self.n1).collect(), (self.n1..self.n()).collect()])
    }
}

/// Exact mean-field quantities of a two-block SBM (self-loops included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldModel {
    pub spec: SbmSpec,
    pub beta1: f64,
    pub beta0: f64,
    pub lambda2_bar: f64,
    /// Expected degree of a C₁ vertex, `n1 p1 + n0 q`.
    pub dbar1: f64,
    /// Expected degree of a C₀ vertex, `n0 p0 + n1 q`.
    pub dbar0: f64,
    /// `n1 dbar1 + n0 dbar0`.
    pub total_dbar: f64,
}

impl MeanFieldModel {
    pub fn dbar_min(&self) -> f64 {
        self.dbar1.min(self.dbar0)
    }

    pub fn dbar_max(&self) -> f64 {
        self.dbar1.max(self.dbar0)
    }

    /// Mass of the mean-field stationary distribution on C₁.
    pub fn stationary_c1(&self) -> f64 {
        self.spec.n1 as f64 * self.dbar1 / self.total_dbar
    }
}

pub fn mean_field(spec: &SbmSpec) -> MeanFieldModel {
    let n1 = spec.n1 as f64;
    let n0 = spec.n0 as f64;
    let dbar1 = n1 * spec.p1 + n0 * spec.q;
    let dbar0 = n0 * spec.p0 + n1 * spec.q;
    let beta1 = n1 * spec.p1 / dbar1;
    let beta0 = n0 * spec.p0 / dbar0;
    MeanFieldModel {
        spec: *spec,
        beta1,
        beta0,
        lambda2_bar: beta1 + beta0 - 1.0,
        dbar1,
        dbar0,
        total_dbar: n1 * dbar1 + n0 * dbar0,
    }
}

fn sample_edge_independent<F>(n: usize, prob: F, rng: &mut TrialRng) -> Graph
where
    F: Fn(usize, usize) -> f64,
{
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u..n {
            if rng.random::<f64>() < prob(u, v) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("n >= 1 and all endpoints in range")
}

/// Draws one SBM graph from the stream of `trial`. Isolated vertices are
/// possible; see [`sample_sbm_without_isolated`].
pub fn sample_sbm(spec: &SbmSpec, rng: &RngConfig, trial: u64) -> Result<(Graph, CommunitySet)> {
    spec.validate()?;
    let mut stream = rng.stream(trial);
    let g = sample_edge_independent(spec.n(), |u, v| spec.edge_probability(u, v), &mut stream);
    Ok((g, spec.communities()))
}

/// Erdős–Rényi `G(n, p)` with self-loops; identical to an SBM whose three
/// probabilities all equal `p`.
pub fn sample_er(n: usize, p: f64, rng: &RngConfig, trial: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    check_probability("p", p)?;
    let mut stream = rng.stream(trial);
    Ok(sample_edge_independent(n, |_, _| p, &mut stream))
}

/// Attempts made before giving up on drawing a graph without isolated vertices.
pub const MAX_RESAMPLES: usize = 100;

/// A graph drawn for one trial, plus how many draws were rejected for having
/// an isolated vertex.
#[derive(Debug, Clone)]
pub struct TrialGraph {
    pub graph: Graph,
    pub resampled: usize,
}

/// Redraws until no vertex is isolated. Attempt 0 uses `rng` itself; attempt
/// `a > 0` uses `rng.derive(a)`, so the accepted draw is still a pure
/// function of `(rng, trial)`.
pub fn sample_without_isolated<F>(rng: &RngConfig, trial: u64, mut draw: F) -> Result<TrialGraph>
where
    F: FnMut(&RngConfig, u64) -> Result<Graph>,
{
    for attempt in 0..MAX_RESAMPLES {
        let cfg = if attempt == 0 { *rng } else { rng.derive(attempt as u64) };
        let graph = draw(&cfg, trial)?;
        if graph.isolated_vertex().is_none() {
            return Ok(TrialGraph {
                graph,
                resampled: attempt,
            });
        }
    }
    Err(Error::ResampleExhausted {
        attempts: MAX_RESAMPLES,
    })
}

pub fn sample_sbm_without_isolated(spec: &SbmSpec, rng: &RngConfig, trial: u64) -> Result<TrialGraph> {
    sample_without_isolated(rng, trial, |cfg, t| Ok(sample_sbm(spec, cfg, t)?.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spec_validation() {
        assert!(SbmSpec::new(10, 0.5, 10, 0.5, 0.1).is_ok());
        assert!(SbmSpec::new(0, 0.5, 10, 0.5, 0.1).is_err());
        assert!(SbmSpec::new(10, 1.2, 10, 0.5, 0.1).is_err());
        assert!(SbmSpec::new(10, 0.5, 10, 0.0, 0.1).is_err());
        assert!(SbmSpec::new(10, 0.5, 10, 0.5, 1.0).is_err());
        assert!(sample_er(10, 1.0, &RngConfig::default(), 0).is_err());
    }

    #[test]
    fn mean_field_hand_values() {
        let mf = mean_field(&SbmSpec::new(2, 0.5, 3, 0.4, 0.1).unwrap());
        assert!(close(mf.beta1, 1.0 / 1.3, 1e-15));
        assert!(close(mf.beta0, 1.2 / 1.4, 1e-15));
        assert!(close(mf.lambda2_bar, 1.0 / 1.3 + 1.2 / 1.4 - 1.0, 1e-15));
        assert!(close(mf.lambda2_bar, 0.626374, 1e-6));
        assert!(close(mf.dbar1, 1.3, 1e-15));
        assert!(close(mf.dbar0, 1.4, 1e-15));
        assert!(close(mf.total_dbar, 2.0 * 1.3 + 3.0 * 1.4, 1e-14));
    }

    #[test]
    fn mean_field_symmetric_and_experiment_values() {
        let mf = mean_field(&SbmSpec::symmetric(500, 0.05, 0.02).unwrap());
        assert!(close(mf.lambda2_bar, 3.0 / 7.0, 1e-15));
        assert!(close(mf.lambda2_bar, (0.05 - 0.02) / (0.05 + 0.02), 1e-15));
        assert_eq!(mf.beta1, mf.beta0);
        assert!(close(mf.dbar1, 35.0, 1e-12));

        let mf = mean_field(&SbmSpec::symmetric(40, 0.3, 0.1).unwrap());
        assert!(close(mf.lambda2_bar, 0.2 / 0.4, 1e-15));
    }

    #[test]
    fn sampling_is_deterministic_per_trial() {
        let spec = SbmSpec::new(30, 0.3, 20, 0.2, 0.05).unwrap();
        let rng = RngConfig::new(9);
        let (a, ca) = sample_sbm(&spec, &rng, 4).unwrap();
        let (b, _) = sample_sbm(&spec, &rng, 4).unwrap();
        let (c, _) = sample_sbm(&spec, &rng, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(ca.len(), 2);
        assert_eq!(ca.get(0), (0..30).collect::<Vec<_>>().as_slice());
        assert_eq!(ca.get(1), (30..50).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn er_equals_flat_sbm() {
        let rng = RngConfig::new(77);
        let er = sample_er(60, 0.1, &rng, 2).unwrap();
        let spec = SbmSpec::new(13, 0.1, 47, 0.1, 0.1).unwrap();
        assert_eq!(er, sample_sbm(&spec, &rng, 2).unwrap().0);
    }

    #[test]
    fn two_vertex_edge_frequency() {
        // P(edge 0-1) = q for spec (1, p, 1, p, q); 4000 draws, 4 sigma band.
        let spec = SbmSpec::new(1, 0.5, 1, 0.5, 0.3).unwrap();
        let rng = RngConfig::new(3);
        let trials = 4000;
        let hits = (0..trials)
            .filter(|&t| sample_sbm(&spec, &rng, t).unwrap().0.has_edge(0, 1))
            .count() as f64;
        let sigma = (trials as f64 * 0.3 * 0.7).sqrt();
        assert!((hits - 0.3 * trials as f64).abs() < 4.0 * sigma, "hits = {hits}");
    }

    #[test]
    fn resampling_avoids_isolated_vertices() {
        // Very sparse: most plain draws have an isolated vertex.
        let spec = SbmSpec::new(3, 0.6, 3, 0.6, 0.3).unwrap();
        let rng = RngConfig::new(5);
        for trial in 0..20 {
            let t = sample_sbm_without_isolated(&spec, &rng, trial).unwrap();
            assert!(t.graph.isolated_vertex().is_none());
            let again = sample_sbm_without_isolated(&spec, &rng, trial).unwrap();
            assert_eq!(t.graph, again.graph);
            assert_eq!(t.resampled, again.resampled);
        }
    }
}

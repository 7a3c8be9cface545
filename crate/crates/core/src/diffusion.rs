//! Landing probabilities, GPR scores, the mean-field LP recursion and the
//! sub-dominant spectral estimate.
//!
//! # Numerical representation
//!
//! Because `W d_N = d_N` for the stationary distribution `d_N = d / sum(d)`,
//! the walk is iterated on the deviation `y(k) = x(k) - d_N` instead of on
//! `x(k)` itself: `y(k + 1) = W y(k)`. Both give the same `x(k) = d_N + y(k)`,
//! but `y(k)` keeps full relative precision as it decays, whereas the
//! community signal inside `x(k)` sinks below one ulp of `d_N` after a few
//! dozen steps. DNLPs are `z(k) = 1 + sum(d) y(k) / d`, and GPR scores over
//! DNLPs are reported centred, as `sum_k gamma_k (z(k) - 1)`. The shift is
//! the same for every vertex, so rankings are unaffected; without it, weight
//! sequences that grow like `theta^-k` would cancel catastrophically.

use crate::graph::{check_walk_input, Graph, GraphError};
use crate::randgraph::{mean_field, MeanFieldModel, SbmSpec};
use crate::rng::TrialRng;
use crate::weights::WeightScheme;
use crate::{Error, Result};

/// Which per-step feature a GPR accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Features {
    /// Landing probabilities `x(k)`.
    Raw,
    /// Degree-normalized landing probabilities `z(k) = sum(d) D^-1 x(k)`.
    Normalized,
}

impl Features {
    pub fn suffix(self) -> &'static str {
        match self {
            Features::Raw => "",
            Features::Normalized => "-d",
        }
    }
}

/// Degree data needed to turn walk deviations into features.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DegreeScale {
    degrees: Vec<f64>,
    total: f64,
}

impl DegreeScale {
    pub(crate) fn of(g: &Graph) -> DegreeScale {
        DegreeScale {
            degrees: (0..g.n()).map(|v| g.degree(v) as f64).collect(),
            total: g.total_degree() as f64,
        }
    }

    fn stationary(&self, v: usize) -> f64 {
        self.degrees[v] / self.total
    }

    /// Adds `weight * feature(y)` to `out`, with DNLPs centred at 1.
    pub(crate) fn accumulate(&self, features: Features, y: &[f64], weight: f64, out: &mut [f64]) {
        match features {
            Features::Raw => {
                for (v, slot) in out.iter_mut().enumerate() {
                    *slot += weight * (self.stationary(v) + y[v]);
                }
            }
            Features::Normalized => {
                for (v, slot) in out.iter_mut().enumerate() {
                    *slot += weight * (self.total * y[v] / self.degrees[v]);
                }
            }
        }
    }
}

/// Streams `y(k) = x(k) - d_N` for k = 0, 1, 2, ...
pub(crate) struct DeviationWalk<'g> {
    graph: &'g Graph,
    current: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'g> DeviationWalk<'g> {
    pub(crate) fn new(graph: &'g Graph, x0: &[f64]) -> Result<DeviationWalk<'g>, GraphError> {
        check_walk_input(graph, x0)?;
        let stationary = graph.degree_distribution();
        let current = x0.iter().zip(&stationary).map(|(x, d)| x - d).collect();
        Ok(DeviationWalk {
            graph,
            current,
            next: vec![0.0; graph.n()],
            scratch: Vec::with_capacity(graph.n()),
        })
    }

    pub(crate) fn current(&self) -> &[f64] {
        &self.current
    }

    pub(crate) fn advance(&mut self) {
        self.graph
            .apply_walk(&self.current, &mut self.scratch, &mut self.next);
        std::mem::swap(&mut self.current, &mut self.next);
    }
}

/// Uniform distribution over `seeds` (duplicates count once).
pub fn seed_distribution(n: usize, seeds: &[usize]) -> Result<Vec<f64>, GraphError> {
    if seeds.is_empty() {
        return Err(GraphError::NoSeeds);
    }
    let mut x = vec![0.0; n];
    for &s in seeds {
        if s >= n {
            return Err(GraphError::VertexOutOfRange { vertex: s, n });
        }
        x[s] = 1.0;
    }
    let count = x.iter().filter(|&&v| v > 0.0).count() as f64;
    x.iter_mut().for_each(|v| *v /= count);
    Ok(x)
}

/// Landing probabilities `x(0..=K)` of one walk, stored as deviations from
/// the stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSequence {
    scale: DegreeScale,
    deviations: Vec<Vec<f64>>,
    features: Features,
}

impl LpSequence {
    /// Builds a sequence from explicit step vectors over a graph with the
    /// given (positive) degrees.
    pub fn from_steps(degrees: Vec<f64>, steps: Vec<Vec<f64>>, features: Features) -> Result<LpSequence> {
        let n = degrees.len();
        if steps.is_empty() || steps.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "need at least one step, each of length {n}"
            )));
        }
        if degrees.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::InvalidParameter("degrees must be positive".into()));
        }
        let total = degrees.iter().sum::<f64>();
        let scale = DegreeScale { degrees, total };
        let deviations = steps
            .into_iter()
            .map(|x| x.iter().enumerate().map(|(v, xv)| xv - scale.stationary(v)).collect())
            .collect();
        Ok(LpSequence {
            scale,
            deviations,
            features,
        })
    }

    pub fn n(&self) -> usize {
        self.scale.degrees.len()
    }

    /// Largest stored step K.
    pub fn k_max(&self) -> usize {
        self.deviations.len() - 1
    }

    pub fn features(&self) -> Features {
        self.features
    }

    pub fn degrees(&self) -> &[f64] {
        &self.scale.degrees
    }

    pub fn total_degree(&self) -> f64 {
        self.scale.total
    }

    /// `x(k) - d_N`.
    pub fn deviation(&self, k: usize) -> &[f64] {
        &self.deviations[k]
    }

    /// Landing probabilities `x(k)`.
    pub fn x(&self, k: usize) -> Vec<f64> {
        self.deviations[k]
            .iter()
            .enumerate()
            .map(|(v, y)| self.scale.stationary(v) + y)
            .collect()
    }

    /// Degree-normalized landing probabilities `z(k)`.
    pub fn z(&self, k: usize) -> Vec<f64> {
        self.z_excess(k).into_iter().map(|e| 1.0 + e).collect()
    }

    /// `z(k) - 1`, computed without cancellation.
    pub fn z_excess(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.scale
            .accumulate(Features::Normalized, &self.deviations[k], 1.0, &mut out);
        out
    }

    /// The feature vector selected by [`LpSequence::features`]; DNLPs are
    /// centred as in [`gpr`].
    pub fn feature(&self, k: usize) -> Vec<f64> {
        match self.features {
            Features::Raw => self.x(k),
            Features::Normalized => self.z_excess(k),
        }
    }

    pub(crate) fn accumulate(&self, gamma: &[f64], out: &mut [f64]) {
        for (k, &w) in gamma.iter().enumerate() {
            if w != 0.0 {
                self.scale.accumulate(self.features, &self.deviations[k], w, out);
            }
        }
    }
}

/// `x(k) = W^k x0` for k = 0..=K.
pub fn landing_probabilities(g: &Graph, x0: &[f64], k_max: usize, features: Features) -> Result<LpSequence> {
    let mut walk = DeviationWalk::new(g, x0)?;
    let mut deviations = Vec::with_capacity(k_max + 1);
    deviations.push(walk.current().to_vec());
    for _ in 0..k_max {
        walk.advance();
        deviations.push(walk.current().to_vec());
    }
    Ok(LpSequence {
        scale: DegreeScale::of(g),
        deviations,
        features,
    })
}

/// Generalized PageRank `sum_k gamma_k f(k)` over the stored steps, where
/// `f` is `x` for raw features and `z - 1` for normalized ones.
///
/// Schemes that rescale for scoring (Inverse PageRank over DNLPs) are applied
/// in their rescaled form; see [`WeightScheme::scoring_weights`].
pub fn gpr(lps: &LpSequence, scheme: &WeightScheme) -> Result<Vec<f64>> {
    if scheme.len() != lps.deviations.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} stored steps",
            scheme.len(),
            lps.deviations.len()
        )));
    }
    let mut out = vec![0.0; lps.n()];
    lps.accumulate(&scheme.scoring_weights(), &mut out);
    Ok(out)
}

/// Block-level mean-field landing probabilities of a two-block SBM whose
/// walk starts inside C₁.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldLp {
    pub model: MeanFieldModel,
    /// `(P1(k), P0(k))`, the mean-field LP mass on each block.
    pub block_mass: Vec<(f64, f64)>,
    /// `P1(k) - pi1`, where `pi1` is the stationary mass of C₁.
    deviation: Vec<f64>,
}

impl MeanFieldLp {
    pub fn k_max(&self) -> usize {
        self.block_mass.len() - 1
    }

    fn block(&self, k: usize, in_c1: bool) -> (f64, f64, f64) {
        let (p1, p0) = self.block_mass[k];
        let s = &self.model.spec;
        if in_c1 {
            (p1, s.n1 as f64, self.model.dbar1)
        } else {
            (p0, s.n0 as f64, self.model.dbar0)
        }
    }

    /// Per-vertex `x̄(k)` on the given block (k >= 1; at k = 0 the mean
    /// field equals the initial distribution itself).
    pub fn x_bar(&self, k: usize, in_c1: bool) -> f64 {
        let (mass, size, _) = self.block(k, in_c1);
        mass / size
    }

    /// Per-vertex `z̄(k) = sum(d̄) x̄(k) / d̄_i`.
    pub fn z_bar(&self, k: usize, in_c1: bool) -> f64 {
        let (_, _, dbar) = self.block(k, in_c1);
        self.model.total_dbar * self.x_bar(k, in_c1) / dbar
    }

    pub fn mu1(&self, k: usize) -> f64 {
        self.z_bar(k, true)
    }

    pub fn mu0(&self, k: usize) -> f64 {
        self.z_bar(k, false)
    }

    /// `mu1(k) - mu0(k)` without the `sum(d̄)` factor, i.e.
    /// `P1/(n1 d̄1) - P0/(n0 d̄0)`.
    ///
    /// The stationary part of both terms is identical, so the gap is carried
    /// entirely by the deviation `P1(k) - pi1` and is computed from it.
    pub fn gap_unscaled(&self, k: usize) -> f64 {
        let m = &self.model;
        let spread = 1.0 / (m.spec.n1 as f64 * m.dbar1) + 1.0 / (m.spec.n0 as f64 * m.dbar0);
        self.deviation[k] * spread
    }

    /// `mu1(k) - mu0(k)` on the DNLP scale.
    pub fn gap(&self, k: usize) -> f64 {
        self.model.total_dbar * self.gap_unscaled(k)
    }
}

/// Runs the 2×2 block recursion `P(k) = W' P(k-1)` from `P(0) = (1, 0)`,
/// `W' = [[b1, 1 - b0], [1 - b1, b0]]`.
///
/// The recursion is applied to `P(k) - pi` (W' fixes its stationary vector
/// `pi`) and `P0` is taken as `1 - P1`, so the masses sum to one exactly.
pub fn mean_field_lp(spec: &SbmSpec, k_max: usize) -> Result<MeanFieldLp> {
    spec.validate()?;
    let model = mean_field(spec);
    let pi1 = model.stationary_c1();
    let (b1, b0) = (model.beta1, model.beta0);
    let mut d1 = 1.0 - pi1;
    let mut block_mass = Vec::with_capacity(k_max + 1);
    let mut deviation = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k == 0 {
            block_mass.push((1.0, 0.0));
        } else {
            let d0 = -d1;
            d1 = b1 * d1 + (1.0 - b0) * d0;
            let p1 = pi1 + d1;
            block_mass.push((p1, 1.0 - p1));
        }
        deviation.push(d1);
    }
    Ok(MeanFieldLp {
        model,
        block_mass,
        deviation,
    })
}

/// Mean gap between the block DNLP means at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanGap {
    pub k: usize,
    /// `P1/(n1 d̄1) - P0/(n0 d̄0)` from the recursion.
    pub value: f64,
    /// Exact constant `c` of `value = c * lambda2_bar^k`:
    /// `(1 - pi1) (1/(n1 d̄1) + 1/(n0 d̄0))`.
    pub constant: f64,
    /// The often-quoted constant `(1 - lambda2_bar) / (n1 (n1 p1 + n0 q))`.
    /// It differs from `constant` (by the factor `1 - lambda2_bar` in the
    /// symmetric case) and is reported for comparison only.
    pub quoted_constant: f64,
}

pub fn mean_gap(spec: &SbmSpec, k: usize) -> Result<MeanGap> {
    let mf = mean_field_lp(spec, k)?;
    let m = &mf.model;
    let spread = 1.0 / (spec.n1 as f64 * m.dbar1) + 1.0 / (spec.n0 as f64 * m.dbar0);
    Ok(MeanGap {
        k,
        value: mf.gap_unscaled(k),
        constant: (1.0 - m.stationary_c1()) * spread,
        quoted_constant: (1.0 - m.lambda2_bar) / (spec.n1 as f64 * m.dbar1),
    })
}

/// Estimate of `max(|lambda_2|, |lambda_n|)` of the walk matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub lambda_sub: f64,
    pub iterations: usize,
    /// `|| R^2 v - lambda_sub^2 v ||` for the final unit iterate `v`.
    pub residual: f64,
    pub converged: bool,
    /// The walk barely mixes (bipartite or nearly so); step counts derived
    /// from mixing arguments are meaningless.
    pub mixing_degenerate: bool,
}

/// Power iteration on the Randić matrix `R = D^-1/2 A D^-1/2` (isospectral
/// with `W`) with the top eigenvector `sqrt(d / sum(d))` projected out at
/// every step.
///
/// Iterates track `||R v||` for unit `v`, which converges monotonically to the
/// largest remaining eigenvalue magnitude even when `+lambda` and `-lambda`
/// are both present.
pub fn lambda_sub_estimate(g: &Graph, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    if let Some(vertex) = g.isolated_vertex() {
        return Err(GraphError::ZeroDegree { vertex }.into());
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
    let total = g.total_degree() as f64;
    let top: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64 / total).sqrt()).collect();

    let project = |v: &mut [f64]| {
        let dot: f64 = v.iter().zip(&top).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&top).for_each(|(a, b)| *a -= dot * b);
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut scratch = vec![0.0; n];
    let mut apply = |v: &[f64], out: &mut [f64]| {
        for (s, (a, w)) in scratch.iter_mut().zip(v.iter().zip(&inv_sqrt)) {
            *s = a * w;
        }
        for (u, slot) in out.iter_mut().enumerate() {
            *slot = inv_sqrt[u] * g.neighbors(u).iter().map(|&w| scratch[w]).sum::<f64>();
        }
    };

    use rand::{Rng, SeedableRng};
    let mut start_rng = TrialRng::seed_from_u64(0x5EED_1A3B_DA00_0002);
    let mut v: Vec<f64> = (0..n).map(|_| start_rng.random::<f64>() - 0.5).collect();
    project(&mut v);
    let start_norm = norm(&v);
    if start_norm < 1e-200 {
        // Nothing left after deflation (a single vertex).
        return Ok(SpectralEstimate {
            lambda_sub: 0.0,
            iterations: 0,
            residual: 0.0,
            converged: true,
            mixing_degenerate: false,
        });
    }
    v.iter_mut().for_each(|a| *a /= start_norm);

    // Residual of `v` as an eigenvector of the squared operator.
    let mut rv = vec![0.0; n];
    let mut rrv = vec![0.0; n];
    let mut residual_of = |v: &[f64], rho: f64, apply: &mut dyn FnMut(&[f64], &mut [f64])| {
        apply(v, &mut rv);
        project(&mut rv);
        apply(&rv, &mut rrv);
        project(&mut rrv);
        rrv.iter()
            .zip(v)
            .map(|(a, b)| (a - rho * rho * b).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    let mut w = vec![0.0; n];
    let mut rho = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        apply(&v, &mut w);
        project(&mut w);
        let next = norm(&w);
        if next == 0.0 {
            rho = 0.0;
            residual = 0.0;
            converged = true;
            break;
        }
        w.iter_mut().for_each(|a| *a /= next);
        std::mem::swap(&mut v, &mut w);
        let delta = (next - rho).abs();
        rho = next;
        // The norm can stall while the vector is still mixing two nearly
        // equal eigenvalues of opposite sign; the residual catches that.
        if delta < tol {
            residual = residual_of(&v, rho, &mut apply);
            if residual <= tol.sqrt() {
                converged = true;
                break;
            }
        }
    }
    if !converged || !residual.is_finite() {
        residual = residual_of(&v, rho, &mut apply);
    }

    Ok(SpectralEstimate {
        lambda_sub: rho,
        iterations,
        residual,
        converged,
        mixing_degenerate: rho > 1.0 - 1e-6,
    })
}

/// Deviation of one empirical step from its mean-field value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDeviation {
    pub k: usize,
    /// `||x(k) - x̄(k)||_2^2`
    pub sq_l2_x: f64,
    /// `||z(k) - z̄(k)||_2^2`
    pub sq_l2_z: f64,
    pub l1_x: f64,
    pub l1_z: f64,
}

/// Per-step distances between an empirical LP sequence and the SBM mean
/// field, expanding block values by `in_c1` membership.
///
/// At k = 0 the mean field is the initial distribution itself
/// (`x̄(0) = x(0)`), so only the DNLP scale can differ there. For k >= 1 the
/// block expansion is exact whenever `x(0)` is supported on C₁.
pub fn deviation_norms(lps: &LpSequence, mf: &MeanFieldLp, in_c1: &[bool]) -> Result<Vec<StepDeviation>> {
    let n = lps.n();
    if mf.model.spec.n() != n || in_c1.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "LP sequence has {n} vertices, mean field {}, membership {}",
            mf.model.spec.n(),
            in_c1.len()
        )));
    }
    if mf.k_max() != lps.k_max() {
        return Err(Error::DimensionMismatch(format!(
            "LP sequence has K = {}, mean field K = {}",
            lps.k_max(),
            mf.k_max()
        )));
    }
    let dbar = |c1: bool| if c1 { mf.model.dbar1 } else { mf.model.dbar0 };
    let x0 = lps.x(0);
    (0..=lps.k_max())
        .map(|k| {
            let x = lps.x(k);
            let z = lps.z(k);
            let mut row = StepDeviation {
                k,
                ..Default::default()
            };
            for v in 0..n {
                let xb = if k == 0 { x0[v] } else { mf.x_bar(k, in_c1[v]) };
                let zb = mf.model.total_dbar * xb / dbar(in_c1[v]);
                let (dx, dz) = (x[v] - xb, z[v] - zb);
                row.sq_l2_x += dx * dx;
                row.sq_l2_z += dz * dz;
                row.l1_x += dx.abs();
                row.l1_z += dz.abs();
            }
            Ok(row)
        })
        .collect()
}

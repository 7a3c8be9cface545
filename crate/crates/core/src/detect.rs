//! Seed-expansion community detection.
//!
//! A trial samples seeds from the community, starts a walk from the uniform
//! distribution over them, scores every vertex with a GPR and predicts the
//! top-Q vertices. Recall is `|P ∩ C| / |C|`.
//!
//! Sweeps over schemes, step counts K and budgets Q reuse one walk per trial,
//! so every row of a sweep sees the same seeds (paired comparison).

use rand::seq::index;
use rayon::prelude::*;

use crate::diffusion::{seed_distribution, DegreeScale, DeviationWalk, Features};
use crate::graph::{bfs_subgraph, max_seed_eccentricity, CommunitySet, Graph, GraphError};
use crate::randgraph::{sample_sbm_without_isolated, SbmSpec};
use crate::rng::RngConfig;
use crate::stats::{mean, sample_std};
use crate::weights::WeightScheme;
use crate::{Error, Result};

/// Stream label for seed draws, kept apart from graph sampling.
pub const SEED_STREAM: u64 = 0x5EED_5EED;

#[derive(Debug, Clone)]
pub struct DetectionConfig {
    /// Weights; the truncation step K is `scheme.k()`.
    pub scheme: WeightScheme,
    /// Budget; `None` means `|C|`.
    pub q: Option<usize>,
    pub seed_count: usize,
    pub trials: usize,
    pub features: Features,
    pub rng: RngConfig,
    /// Force the seeds into the prediction (and so into the recall).
    pub include_seeds: bool,
}

impl DetectionConfig {
    /// 20 seeds, 100 trials, DNLP features, seeds included.
    pub fn new(scheme: WeightScheme) -> DetectionConfig {
        DetectionConfig {
            scheme,
            q: None,
            seed_count: 20,
            trials: 100,
            features: Features::Normalized,
            rng: RngConfig::default(),
            include_seeds: true,
        }
    }

    pub fn k(&self) -> usize {
        self.scheme.k()
    }

    pub fn budget(&self, community: &[usize]) -> usize {
        self.q.unwrap_or(community.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub scheme: String,
    pub k: usize,
    pub q: usize,
    pub recalls: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl DetectionResult {
    pub fn from_recalls(scheme: String, k: usize, q: usize, recalls: Vec<f64>) -> DetectionResult {
        DetectionResult {
            scheme,
            k,
            q,
            mean: mean(&recalls),
            std: sample_std(&recalls),
            recalls,
        }
    }
}

/// Uniform sample of `count` members without replacement, sorted.
pub fn sample_seeds(community: &[usize], count: usize, rng: &RngConfig, trial: u64) -> Result<Vec<usize>> {
    if count == 0 || count > community.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {count} seeds from a community of {}",
            community.len()
        )));
    }
    let mut stream = rng.stream(trial);
    let mut seeds: Vec<usize> = index::sample(&mut stream, community.len(), count)
        .into_iter()
        .map(|i| community[i])
        .collect();
    seeds.sort_unstable();
    Ok(seeds)
}

/// The `q` highest-scoring vertices, always including `forced`. Ties go to
/// the lower index. The result is sorted.
pub fn top_q(scores: &[f64], q: usize, forced: &[usize]) -> Result<Vec<usize>> {
    let n = scores.len();
    if q > n {
        return Err(Error::InvalidParameter(format!("Q = {q} exceeds n = {n}")));
    }
    let mut is_forced = vec![false; n];
    for &v in forced {
        if v >= n {
            return Err(GraphError::VertexOutOfRange { vertex: v, n }.into());
        }
        is_forced[v] = true;
    }
    let mut chosen: Vec<usize> = (0..n).filter(|&v| is_forced[v]).collect();
    if chosen.len() > q {
        return Err(Error::InvalidParameter(format!(
            "Q = {q} is smaller than the {} forced vertices",
            chosen.len()
        )));
    }
    let slots = q - chosen.len();
    let mut rest: Vec<usize> = (0..n).filter(|&v| !is_forced[v]).collect();
    let order = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if slots > 0 && slots < rest.len() {
        rest.select_nth_unstable_by(slots - 1, order);
    }
    rest.truncate(slots);
    chosen.extend(rest);
    chosen.sort_unstable();
    Ok(chosen)
}

/// `|pred ∩ truth| / |truth|`. Both sides are treated as sets.
pub fn recall(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("recall against an empty community".into()));
    }
    let mut truth = truth.to_vec();
    truth.sort_unstable();
    truth.dedup();
    let mut pred = pred.to_vec();
    pred.sort_unstable();
    pred.dedup();
    let hits = pred.iter().filter(|v| truth.binary_search(v).is_ok()).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// One scoring rule evaluated inside a trial.
struct Plan {
    label: String,
    k: usize,
    weights: Vec<f64>,
}

fn plans(schemes: &[WeightScheme], k_list: &[usize], features: Features) -> Result<Vec<Plan>> {
    let mut out = Vec::new();
    for scheme in schemes {
        let label = format!("{}{}", scheme.family(), features.suffix());
        let ks: Vec<usize> = if k_list.is_empty() { vec![scheme.k()] } else { k_list.to_vec() };
        for k in ks {
            let truncated = scheme.truncate(k)?;
            out.push(Plan {
                label: label.clone(),
                k,
                weights: truncated.scoring_weights(),
            });
        }
    }
    Ok(out)
}

/// Scores of every plan for one seed set, from a single walk.
fn score_plans(g: &Graph, seeds: &[usize], features: Features, plans: &[Plan]) -> Result<Vec<Vec<f64>>> {
    let x0 = seed_distribution(g.n(), seeds)?;
    let mut walk = DeviationWalk::new(g, &x0)?;
    let scale = DegreeScale::of(g);
    let k_max = plans.iter().map(|p| p.k).max().unwrap_or(0);
    let mut scores = vec![vec![0.0; g.n()]; plans.len()];
    for k in 0..=k_max {
        for (plan, out) in plans.iter().zip(scores.iter_mut()) {
            if k <= plan.k && plan.weights[k] != 0.0 {
                scale.accumulate(features, walk.current(), plan.weights[k], out);
            }
        }
        if k < k_max {
            walk.advance();
        }
    }
    Ok(scores)
}

fn check_community(community: &[usize], n: usize) -> Result<()> {
    if community.is_empty() {
        return Err(Error::InvalidParameter("community is empty".into()));
    }
    if let Some(&v) = community.iter().find(|&&v| v >= n) {
        return Err(GraphError::VertexOutOfRange { vertex: v, n }.into());
    }
    Ok(())
}

fn check_config(cfg: &DetectionConfig, community: &[usize], q_list: &[usize], n: usize) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if cfg.seed_count == 0 || cfg.seed_count > community.len() {
        return Err(Error::InvalidParameter(format!(
            "seed count {} is not in 1..={}",
            cfg.seed_count,
            community.len()
        )));
    }
    for &q in q_list {
        if q > n {
            return Err(Error::InvalidParameter(format!("Q = {q} exceeds n = {n}")));
        }
        if cfg.include_seeds && q < cfg.seed_count {
            return Err(Error::InvalidParameter(format!(
                "Q = {q} is smaller than the seed count {}",
                cfg.seed_count
            )));
        }
    }
    Ok(())
}

/// Per-trial recalls, laid out plan-major then by budget.
fn trial_recalls(
    g: &Graph,
    seeds: &[usize],
    truth: &[usize],
    cfg: &DetectionConfig,
    plans: &[Plan],
    q_list: &[usize],
) -> Result<Vec<f64>> {
    let scores = score_plans(g, seeds, cfg.features, plans)?;
    let forced: &[usize] = if cfg.include_seeds { seeds } else { &[] };
    let mut out = Vec::with_capacity(plans.len() * q_list.len());
    for s in &scores {
        for &q in q_list {
            out.push(recall(&top_q(s, q, forced)?, truth)?);
        }
    }
    Ok(out)
}

fn collect_results(plans: &[Plan], q_list: &[usize], per_trial: Vec<Vec<f64>>) -> Vec<DetectionResult> {
    let mut results = Vec::with_capacity(plans.len() * q_list.len());
    for (p, plan) in plans.iter().enumerate() {
        for (j, &q) in q_list.iter().enumerate() {
            let col = p * q_list.len() + j;
            let recalls = per_trial.iter().map(|row| row[col]).collect();
            results.push(DetectionResult::from_recalls(plan.label.clone(), plan.k, q, recalls));
        }
    }
    results
}

fn default_q(cfg: &DetectionConfig, community: &[usize], q_list: &[usize]) -> Vec<usize> {
    if q_list.is_empty() {
        vec![cfg.budget(community)]
    } else {
        q_list.to_vec()
    }
}

/// Paired sweep over `schemes × k_list × q_list` on a fixed graph. An empty
/// `k_list` uses each scheme's own K; an empty `q_list` uses the configured
/// budget. `cfg.scheme` is ignored. Rows come out scheme-major, then K, then Q.
pub fn sweep(
    g: &Graph,
    community: &[usize],
    cfg: &DetectionConfig,
    schemes: &[WeightScheme],
    k_list: &[usize],
    q_list: &[usize],
) -> Result<Vec<DetectionResult>> {
    check_community(community, g.n())?;
    let q_list = default_q(cfg, community, q_list);
    check_config(cfg, community, &q_list, g.n())?;
    let plans = plans(schemes, k_list, cfg.features)?;
    let seed_rng = cfg.rng.derive(SEED_STREAM);
    let per_trial = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seeds = sample_seeds(community, cfg.seed_count, &seed_rng, trial)?;
            trial_recalls(g, &seeds, community, cfg, &plans, &q_list)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_results(&plans, &q_list, per_trial))
}

pub fn run_detection(g: &Graph, community: &[usize], cfg: &DetectionConfig) -> Result<DetectionResult> {
    let mut rows = sweep(g, community, cfg, std::slice::from_ref(&cfg.scheme), &[], &[])?;
    Ok(rows.remove(0))
}

/// Recall at each K of `k_list` (each at most `cfg.k()`), same seeds per trial.
pub fn recall_vs_steps(
    g: &Graph,
    community: &[usize],
    cfg: &DetectionConfig,
    k_list: &[usize],
) -> Result<Vec<DetectionResult>> {
    if k_list.is_empty() {
        return Ok(Vec::new());
    }
    sweep(g, community, cfg, std::slice::from_ref(&cfg.scheme), k_list, &[])
}

/// Recall at each budget of `q_list` at K = `cfg.k()`, same seeds per trial.
pub fn recall_vs_budget(
    g: &Graph,
    community: &[usize],
    cfg: &DetectionConfig,
    q_list: &[usize],
) -> Result<Vec<DetectionResult>> {
    if q_list.is_empty() {
        return Ok(Vec::new());
    }
    sweep(g, community, cfg, std::slice::from_ref(&cfg.scheme), &[], q_list)
}

/// Results of a sweep over freshly sampled SBM graphs.
#[derive(Debug, Clone)]
pub struct SbmSweep {
    pub results: Vec<DetectionResult>,
    /// Total graph draws rejected for isolated vertices.
    pub resampled: usize,
}

/// Like [`sweep`], but trial `t` samples its own graph from `spec` and
/// detects C₁ (vertices `0..n1`). Seeds are drawn from C₁.
pub fn sbm_sweep(
    spec: &SbmSpec,
    cfg: &DetectionConfig,
    schemes: &[WeightScheme],
    k_list: &[usize],
    q_list: &[usize],
) -> Result<SbmSweep> {
    spec.validate()?;
    let community: Vec<usize> = (0..spec.n1).collect();
    let q_list = default_q(cfg, &community, q_list);
    check_config(cfg, &community, &q_list, spec.n())?;
    let plans = plans(schemes, k_list, cfg.features)?;
    let seed_rng = cfg.rng.derive(SEED_STREAM);
    let per_trial = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let drawn = sample_sbm_without_isolated(spec, &cfg.rng, trial)?;
            let seeds = sample_seeds(&community, cfg.seed_count, &seed_rng, trial)?;
            let recalls = trial_recalls(&drawn.graph, &seeds, &community, cfg, &plans, &q_list)?;
            Ok((recalls, drawn.resampled))
        })
        .collect::<Result<Vec<_>>>()?;
    let resampled = per_trial.iter().map(|(_, r)| r).sum();
    let per_trial = per_trial.into_iter().map(|(r, _)| r).collect();
    Ok(SbmSweep {
        results: collect_results(&plans, &q_list, per_trial),
        resampled,
    })
}

/// Results of detection on BFS sub-networks around the seeds.
#[derive(Debug, Clone)]
pub struct LocalSweep {
    pub results: Vec<DetectionResult>,
    pub mean_vertices: f64,
    /// Mean fraction of the community inside the sub-network.
    pub mean_coverage: f64,
}

/// Per trial, extracts the `hops`-step BFS sub-network around the seeds and
/// runs the sweep there. Recall is still measured against the whole
/// community, and a budget larger than the sub-network is capped at its size.
pub fn local_sweep(
    g: &Graph,
    community: &[usize],
    cfg: &DetectionConfig,
    hops: usize,
    schemes: &[WeightScheme],
    k_list: &[usize],
    q_list: &[usize],
) -> Result<LocalSweep> {
    check_community(community, g.n())?;
    let q_list = default_q(cfg, community, q_list);
    check_config(cfg, community, &q_list, g.n())?;
    let plans = plans(schemes, k_list, cfg.features)?;
    let seed_rng = cfg.rng.derive(SEED_STREAM);
    let per_trial = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seeds = sample_seeds(community, cfg.seed_count, &seed_rng, trial)?;
            let (sub, vmap) = bfs_subgraph(g, &seeds, hops)?;
            let local_seeds: Vec<usize> = seeds
                .iter()
                .map(|&s| vmap.dense(s as u64).expect("seeds lie in their own BFS ball"))
                .collect();
            let covered = community.iter().filter(|&&v| vmap.dense(v as u64).is_some()).count();
            let scores = score_plans(&sub, &local_seeds, cfg.features, &plans)?;
            let forced: &[usize] = if cfg.include_seeds { &local_seeds } else { &[] };
            let mut recalls = Vec::with_capacity(plans.len() * q_list.len());
            for s in &scores {
                for &q in &q_list {
                    let pred: Vec<usize> = top_q(s, q.min(sub.n()), forced)?
                        .into_iter()
                        .map(|v| vmap.original(v) as usize)
                        .collect();
                    recalls.push(recall(&pred, community)?);
                }
            }
            Ok((recalls, sub.n(), covered as f64 / community.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<f64> = per_trial.iter().map(|t| t.1 as f64).collect();
    let coverage: Vec<f64> = per_trial.iter().map(|t| t.2).collect();
    let per_trial = per_trial.into_iter().map(|t| t.0).collect();
    Ok(LocalSweep {
        results: collect_results(&plans, &q_list, per_trial),
        mean_vertices: mean(&sizes),
        mean_coverage: mean(&coverage),
    })
}

/// Step count for real networks: four times the largest hop distance from a
/// non-seed vertex to the seeds.
pub fn default_steps(g: &Graph, seeds: &[usize]) -> Result<usize> {
    Ok(4 * max_seed_eccentricity(g, seeds)?)
}

/// How [`select_communities_m34`] filters by size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeFilter {
    /// The `n` communities whose sizes are closest to `m^(3/4)`.
    Nearest(usize),
    /// Every community with `min <= size <= max`.
    Window { min: usize, max: usize },
}

impl Default for SizeFilter {
    fn default() -> Self {
        SizeFilter::Nearest(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub communities: CommunitySet,
    /// Positions of the selected communities in the input.
    pub indices: Vec<usize>,
    /// `m^(3/4)` for the largest community size `m`.
    pub target: f64,
}

/// Keeps communities of size comparable to `m^(3/4)`, `m` the largest size,
/// in input order. Nearest-size ties go to the earlier community.
pub fn select_communities_m34(cs: &CommunitySet, filter: SizeFilter) -> Result<Selection> {
    let sizes = cs.sizes();
    let m = *sizes
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParameter("no communities to select from".into()))?;
    let target = (m as f64).powf(0.75);
    let mut indices: Vec<usize> = match filter {
        SizeFilter::Nearest(count) => {
            let mut order: Vec<usize> = (0..sizes.len()).collect();
            order.sort_by(|&a, &b| {
                let da = (sizes[a] as f64 - target).abs();
                let db = (sizes[b] as f64 - target).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            order.truncate(count);
            order
        }
        SizeFilter::Window { min, max } => (0..sizes.len())
            .filter(|&i| sizes[i] >= min && sizes[i] <= max)
            .collect(),
    };
    indices.sort_unstable();
    if indices.is_empty() {
        log::warn!("size filter {filter:?} selected no communities (m^(3/4) = {target:.1})");
    }
    let communities = CommunitySet::new(indices.iter().map(|&i| cs.get(i).to_vec()).collect());
    Ok(Selection {
        communities,
        indices,
        target,
    })
}

/// Fraction of vertices misclassified when the top `|C₁|` vertices by
/// `feature` are predicted to be C₁ (ties to the lower index).
pub fn single_feature_error(feature: &[f64], in_c1: &[bool]) -> Result<f64> {
    if feature.len() != in_c1.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature values for {} labels",
            feature.len(),
            in_c1.len()
        )));
    }
    let n1 = in_c1.iter().filter(|&&c| c).count();
    let pred = top_q(feature, n1, &[])?;
    let hits = pred.iter().filter(|&&v| in_c1[v]).count();
    // Each missed C₁ vertex displaces one C₀ vertex into the prediction.
    Ok(2.0 * (n1 - hits) as f64 / feature.len() as f64)
}

/// Per-trial single-step classification errors at each step of `k_list`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationTable {
    pub k_list: Vec<usize>,
    /// `dnlp[i][t]`: error of the `z(k_list[i])` ranking in trial `t`.
    pub dnlp: Vec<Vec<f64>>,
    pub lp: Vec<Vec<f64>>,
    pub resampled: usize,
}

/// Single-step classifiers on freshly sampled SBM graphs, walking from
/// vertex 0 (in C₁).
pub fn classification_errors(
    spec: &SbmSpec,
    k_list: &[usize],
    trials: usize,
    rng: &RngConfig,
) -> Result<ClassificationTable> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let in_c1: Vec<bool> = (0..spec.n()).map(|v| spec.in_c1(v)).collect();
    let k_max = k_list.iter().copied().max().unwrap_or(0);
    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let drawn = sample_sbm_without_isolated(spec, rng, trial)?;
            let g = &drawn.graph;
            let x0 = seed_distribution(g.n(), &[0])?;
            let mut walk = DeviationWalk::new(g, &x0)?;
            let scale = DegreeScale::of(g);
            let mut z_err = vec![0.0; k_list.len()];
            let mut x_err = vec![0.0; k_list.len()];
            for k in 0..=k_max {
                for (i, _) in k_list.iter().enumerate().filter(|(_, &kk)| kk == k) {
                    let mut z = vec![0.0; g.n()];
                    scale.accumulate(Features::Normalized, walk.current(), 1.0, &mut z);
                    let mut x = vec![0.0; g.n()];
                    scale.accumulate(Features::Raw, walk.current(), 1.0, &mut x);
                    z_err[i] = single_feature_error(&z, &in_c1)?;
                    x_err[i] = single_feature_error(&x, &in_c1)?;
                }
                if k < k_max {
                    walk.advance();
                }
            }
            Ok((z_err, x_err, drawn.resampled))
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>, usize)) -> &Vec<f64>, i: usize| {
        per_trial.iter().map(|t| pick(t)[i]).collect::<Vec<f64>>()
    };
    Ok(ClassificationTable {
        k_list: k_list.to_vec(),
        dnlp: (0..k_list.len()).map(|i| column(&|t| &t.0, i)).collect(),
        lp: (0..k_list.len()).map(|i| column(&|t| &t.1, i)).collect(),
        resampled: per_trial.iter().map(|t| t.2).sum(),
    })
}

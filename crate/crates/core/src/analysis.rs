//! Monte Carlo laboratories for the concentration of landing probabilities
//! around their mean-field values.

use rayon::prelude::*;

use crate::diffusion::{
    deviation_norms, landing_probabilities, lambda_sub_estimate, mean_field_lp, seed_distribution, Features,
};
use crate::graph::{walk_step, Graph};
use crate::randgraph::{sample_er, sample_sbm_without_isolated, sample_without_isolated, SbmSpec};
use crate::rng::RngConfig;
use crate::stats::{mean, ols_slope};
use crate::weights::{FeatureMoments, SchemeSpec, WeightScheme};
use crate::{Error, Result};

/// Convergence tolerance used for the per-trial spectral estimate.
pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRow {
    pub k: usize,
    pub trials: usize,
    pub mean_sq_l2_x: f64,
    pub mean_sq_l2_z: f64,
    pub mean_l1_x: f64,
    pub mean_l1_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTable {
    pub spec: SbmSpec,
    pub master_seed: u64,
    pub rows: Vec<VarianceRow>,
    /// `lambda_sub` of every sampled graph, in trial order.
    pub lambda_sub: Vec<f64>,
    pub resampled: usize,
}

/// Which curve of a [`VarianceTable`] to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    SqL2X,
    SqL2Z,
}

impl VarianceTable {
    pub fn value(&self, k: usize, curve: Curve) -> f64 {
        let row = &self.rows[k];
        match curve {
            Curve::SqL2X => row.mean_sq_l2_x,
            Curve::SqL2Z => row.mean_sq_l2_z,
        }
    }

    /// OLS slope of `ln(curve)` against k over `lo..=hi`.
    pub fn log_slope(&self, curve: Curve, lo: usize, hi: usize) -> Result<f64> {
        if lo >= hi || hi >= self.rows.len() {
            return Err(Error::InvalidParameter(format!(
                "slope window [{lo}, {hi}] does not fit k = 0..={}",
                self.rows.len() - 1
            )));
        }
        let ks: Vec<f64> = (lo..=hi).map(|k| k as f64).collect();
        let ys: Vec<f64> = (lo..=hi).map(|k| self.value(k, curve).ln()).collect();
        Ok(ols_slope(&ks, &ys))
    }

    pub fn mean_lambda_sub(&self) -> f64 {
        mean(&self.lambda_sub)
    }

    /// Mean-field gaps paired with per-vertex DNLP variances
    /// `mean ||z - z̄||² / n`, ready for pseudo-Fisher weights.
    pub fn moments(&self) -> Result<FeatureMoments> {
        let mf = mean_field_lp(&self.spec, self.rows.len() - 1)?;
        let n = self.spec.n() as f64;
        Ok(FeatureMoments {
            gaps: (0..self.rows.len()).map(|k| mf.gap(k)).collect(),
            variances: self.rows.iter().map(|r| r.mean_sq_l2_z / n).collect(),
        })
    }
}

/// Distances of sampled LPs from the mean field for k = 0..=K, averaged over
/// trials. Each trial draws a graph (redrawing on isolated vertices) and
/// walks from vertex 0, which lies in C₁.
pub fn variance_experiment(spec: &SbmSpec, k_max: usize, trials: usize, rng: &RngConfig) -> Result<VarianceTable> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mf = mean_field_lp(spec, k_max)?;
    let in_c1: Vec<bool> = (0..spec.n()).map(|v| spec.in_c1(v)).collect();
    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let drawn = sample_sbm_without_isolated(spec, rng, trial)?;
            let g = &drawn.graph;
            let x0 = seed_distribution(g.n(), &[0])?;
            let lps = landing_probabilities(g, &x0, k_max, Features::Normalized)?;
            let rows = deviation_norms(&lps, &mf, &in_c1)?;
            let est = lambda_sub_estimate(g, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
            if !est.converged {
                log::warn!("trial {trial}: spectral estimate did not converge (residual {:.2e})", est.residual);
            }
            Ok((rows, est.lambda_sub, drawn.resampled))
        })
        .collect::<Result<Vec<_>>>()?;

    let t = trials as f64;
    let rows = (0..=k_max)
        .map(|k| {
            let sum = |f: fn(&crate::diffusion::StepDeviation) -> f64| {
                per_trial.iter().map(|(rows, _, _)| f(&rows[k])).sum::<f64>() / t
            };
            VarianceRow {
                k,
                trials,
                mean_sq_l2_x: sum(|r| r.sq_l2_x),
                mean_sq_l2_z: sum(|r| r.sq_l2_z),
                mean_l1_x: sum(|r| r.l1_x),
                mean_l1_z: sum(|r| r.l1_z),
            }
        })
        .collect();
    let resampled = per_trial.iter().map(|p| p.2).sum();
    if resampled > 0 {
        log::info!("{resampled} graph draws rejected for isolated vertices");
    }
    Ok(VarianceTable {
        spec: *spec,
        master_seed: rng.master_seed,
        rows,
        lambda_sub: per_trial.iter().map(|p| p.1).collect(),
        resampled,
    })
}

/// Quantities the concentration bounds are stated in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub dbar_min: f64,
    pub dbar_max: f64,
    /// `max(|lambda_2|, |lambda_n|)` of the mean-field walk.
    pub lambda_bar: f64,
    /// `||x(0)||_2`.
    pub x0_norm: f64,
}

impl BoundInputs {
    /// Inputs for a two-block SBM walked from a single seed.
    pub fn from_sbm(spec: &SbmSpec) -> BoundInputs {
        let mf = crate::randgraph::mean_field(spec);
        BoundInputs {
            n: spec.n(),
            dbar_min: mf.dbar_min(),
            dbar_max: mf.dbar_max(),
            lambda_bar: mf.lambda2_bar.abs(),
            x0_norm: 1.0,
        }
    }
}

/// Unspecified constants of the bounds. `c1` scales the degree-noise floor,
/// `c2` the k-dependent term and `c3` the spectral perturbation inside the
/// bracket `rho = lambda_bar + c3 sqrt(ln n / dbar_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

/// Weights fed to the `g` series.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSeries {
    /// A finite sequence, summed exactly.
    Truncated(WeightScheme),
    /// The untruncated family, summed term by term.
    Infinite(SchemeSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    /// Partial sum reached; meaningful only when `divergent` is false.
    pub value: f64,
    pub terms: usize,
    pub divergent: bool,
}

/// Cap on summed terms for infinite families.
pub const MAX_SERIES_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub constants: BoundConstants,
    /// `lambda_bar + c3 sqrt(ln n / dbar_min)`.
    pub rho: f64,
    /// `sqrt(dbar_max ln n / dbar_min²)`.
    pub degree_factor: f64,
    /// `c1 sqrt(ln n / (n dbar_min)) / ||x(0)||_2`.
    pub floor_term: f64,
    /// `rho < 1`; without it the LP bound grows with k.
    pub decay_condition: bool,
    pub k: Option<usize>,
    /// Relative LP bound at step k: `floor_term + c2 k rho^(k-1) degree_factor`.
    pub lp_bound: Option<f64>,
    /// Relative DNLP bound at step k: `c2 k rho^(k-1) degree_factor`.
    pub dnlp_bound: Option<f64>,
    pub g: Option<SeriesValue>,
    /// Relative GPR bound `floor_term + c2 g degree_factor`; infinite when
    /// `g` diverges.
    pub gpr_bound: Option<f64>,
}

impl BoundReport {
    /// Flat `(key, value)` pairs for a key-value CSV.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("n".to_string(), self.inputs.n.to_string()),
            ("dbar_min".into(), self.inputs.dbar_min.to_string()),
            ("dbar_max".into(), self.inputs.dbar_max.to_string()),
            ("lambda_bar".into(), self.inputs.lambda_bar.to_string()),
            ("x0_norm".into(), self.inputs.x0_norm.to_string()),
            ("c1".into(), self.constants.c1.to_string()),
            ("c2".into(), self.constants.c2.to_string()),
            ("c3".into(), self.constants.c3.to_string()),
            ("rho".into(), self.rho.to_string()),
            ("degree_factor".into(), self.degree_factor.to_string()),
            ("floor_term".into(), self.floor_term.to_string()),
            ("decay_condition".into(), self.decay_condition.to_string()),
        ];
        if let Some(k) = self.k {
            kv.push(("k".into(), k.to_string()));
        }
        let opt = |key: &str, v: Option<f64>| v.map(|v| (key.to_string(), v.to_string()));
        kv.extend(opt("lp_bound", self.lp_bound));
        kv.extend(opt("dnlp_bound", self.dnlp_bound));
        if let Some(g) = self.g {
            kv.push(("g".into(), g.value.to_string()));
            kv.push(("g_terms".into(), g.terms.to_string()));
            kv.push(("g_divergent".into(), g.divergent.to_string()));
        }
        kv.extend(opt("gpr_bound", self.gpr_bound));
        kv
    }
}

/// `k rho^(k-1)`, zero at k = 0.
fn step_factor(k: usize, rho: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * rho.powi(k as i32 - 1)
    }
}

/// `gamma_k` of an untruncated family, and whether `sum gamma_k k rho^(k-1)`
/// converges (ratio test on the tail).
fn infinite_family(spec: &SchemeSpec, rho: f64) -> (Box<dyn Fn(usize) -> f64 + '_>, bool) {
    match spec {
        SchemeSpec::Ppr(alpha) => {
            let a = *alpha;
            (Box::new(move |k| (1.0 - a) * a.powi(k as i32)), a * rho < 1.0)
        }
        SchemeSpec::Hpr(h) => {
            let h = *h;
            (
                Box::new(move |k| {
                    let ln = -h + k as f64 * h.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
                    ln.exp()
                }),
                true,
            )
        }
        SchemeSpec::IprNormalized(theta) => {
            let t = *theta;
            (Box::new(move |k| t.powi(-(k as i32))), rho < t)
        }
        SchemeSpec::IprUnnormalized(theta, phi) => {
            let t = *theta;
            let p = phi.resolve(t);
            (
                Box::new(move |k| {
                    let tk = t.powi(k as i32);
                    tk / ((p + tk) * (p + tk))
                }),
                t * rho < 1.0,
            )
        }
        SchemeSpec::Custom { values, .. } => {
            (Box::new(move |k| values.get(k).copied().unwrap_or(0.0)), true)
        }
    }
}

/// `g = sum_{k>=1} gamma_k k rho^(k-1)`.
pub fn g_series(series: &GammaSeries, rho: f64) -> SeriesValue {
    match series {
        GammaSeries::Truncated(w) => {
            let terms: Vec<f64> = w
                .gamma()
                .iter()
                .enumerate()
                .map(|(k, g)| if *g == 0.0 { 0.0 } else { g * step_factor(k, rho) })
                .collect();
            let value: f64 = terms.iter().sum();
            SeriesValue {
                value,
                terms: terms.len(),
                divergent: !value.is_finite(),
            }
        }
        GammaSeries::Infinite(spec) => {
            let (gamma, converges) = infinite_family(spec, rho);
            if !converges {
                return SeriesValue {
                    value: f64::INFINITY,
                    terms: 0,
                    divergent: true,
                };
            }
            let mut sum = 0.0;
            let mut previous = f64::INFINITY;
            for k in 1..MAX_SERIES_TERMS {
                let term = gamma(k) * step_factor(k, rho);
                if !term.is_finite() {
                    return SeriesValue {
                        value: f64::INFINITY,
                        terms: k,
                        divergent: true,
                    };
                }
                sum += term;
                // Stop once terms are past their peak and negligible.
                if term <= previous && term <= 1e-16 * sum.max(f64::MIN_POSITIVE) {
                    return SeriesValue {
                        value: sum,
                        terms: k,
                        divergent: false,
                    };
                }
                if term == 0.0 && sum == 0.0 && k > 1 {
                    return SeriesValue {
                        value: 0.0,
                        terms: k,
                        divergent: false,
                    };
                }
                previous = term;
            }
            SeriesValue {
                value: sum,
                terms: MAX_SERIES_TERMS,
                divergent: true,
            }
        }
    }
}

/// Evaluates the LP and DNLP bounds at step `k` and the GPR bound for
/// `series`, whichever are given.
pub fn bound_eval(
    inputs: &BoundInputs,
    constants: &BoundConstants,
    k: Option<usize>,
    series: Option<&GammaSeries>,
) -> Result<BoundReport> {
    if !(inputs.dbar_min > 1.0) || inputs.dbar_max < inputs.dbar_min {
        return Err(Error::InvalidParameter(format!(
            "need 1 < dbar_min <= dbar_max, got {} and {}",
            inputs.dbar_min, inputs.dbar_max
        )));
    }
    if inputs.n < 2 || !(inputs.x0_norm > 0.0) || !(inputs.lambda_bar >= 0.0) {
        return Err(Error::InvalidParameter(
            "need n >= 2, ||x(0)|| > 0 and lambda_bar >= 0".into(),
        ));
    }
    let BoundConstants { c1, c2, c3 } = *constants;
    if !(c1 > 0.0 && c2 > 0.0 && c3 > 0.0) {
        return Err(Error::InvalidParameter("bound constants must be positive".into()));
    }
    let ln_n = (inputs.n as f64).ln();
    let rho = inputs.lambda_bar + c3 * (ln_n / inputs.dbar_min).sqrt();
    let degree_factor = (inputs.dbar_max * ln_n).sqrt() / inputs.dbar_min;
    let floor_term = c1 * (ln_n / (inputs.n as f64 * inputs.dbar_min)).sqrt() / inputs.x0_norm;
    let dnlp_bound = k.map(|k| c2 * step_factor(k, rho) * degree_factor);
    let g = series.map(|s| g_series(s, rho));
    let gpr_bound = g.map(|g| {
        if g.divergent {
            f64::INFINITY
        } else {
            floor_term + c2 * g.value * degree_factor
        }
    });
    if g.is_some_and(|g| g.divergent) {
        log::warn!("g series diverges at rho = {rho}");
    }
    Ok(BoundReport {
        inputs: *inputs,
        constants: *constants,
        rho,
        degree_factor,
        floor_term,
        decay_condition: rho < 1.0,
        k,
        lp_bound: dnlp_bound.map(|d| floor_term + d),
        dnlp_bound,
        g,
        gpr_bound,
    })
}

/// `||x(1) - u||_1` for the walk from `seed`, `u` the uniform distribution.
pub fn l1_deviation_from_uniform(g: &Graph, seed: usize) -> Result<f64> {
    let x1 = walk_step(g, &seed_distribution(g.n(), &[seed])?)?;
    let u = 1.0 / g.n() as f64;
    Ok(x1.iter().map(|x| (x - u).abs()).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Demo {
    pub values: Vec<f64>,
    pub mean: f64,
    pub resampled: usize,
}

/// Mean `||x(1) - x̄(1)||_1` over ER(n, p) graphs walked from vertex 0. With
/// self-loops the mean-field `x̄(1)` is uniform.
pub fn l1_divergence_demo(n: usize, p: f64, trials: usize, rng: &RngConfig) -> Result<L1Demo> {
    if (n as f64) * p < 5.0 {
        return Err(Error::InvalidParameter(format!("n p = {} must be at least 5", n as f64 * p)));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let drawn = sample_without_isolated(rng, trial, |cfg, t| sample_er(n, p, cfg, t))?;
            Ok((l1_deviation_from_uniform(&drawn.graph, 0)?, drawn.resampled))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    Ok(L1Demo {
        mean: mean(&values),
        resampled: per_trial.iter().map(|t| t.1).sum(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{ppr_weights, Phi};

    fn inputs() -> BoundInputs {
        BoundInputs {
            n: 1000,
            dbar_min: 35.0,
            dbar_max: 40.0,
            lambda_bar: 0.3,
            x0_norm: 1.0,
        }
    }

    #[test]
    fn k1_term() {
        let c = BoundConstants {
            c1: 0.5,
            c2: 2.0,
            c3: 0.1,
        };
        let r = bound_eval(&inputs(), &c, Some(1), None).unwrap();
        let ln_n = 1000f64.ln();
        let want = 2.0 * (40.0 * ln_n).sqrt() / 35.0;
        assert!((r.dnlp_bound.unwrap() - want).abs() < 1e-14);
        assert!((r.lp_bound.unwrap() - r.floor_term - want).abs() < 1e-14);
        assert!(r.g.is_none() && r.gpr_bound.is_none());
    }

    #[test]
    fn ppr_series_matches_closed_form() {
        let c = BoundConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 0.05,
        };
        for alpha in [0.3, 0.7, 0.95] {
            let r = bound_eval(&inputs(), &c, None, Some(&GammaSeries::Infinite(SchemeSpec::Ppr(alpha)))).unwrap();
            let rho = r.rho;
            assert!(alpha * rho < 1.0);
            let closed = (1.0 - alpha) * alpha / (1.0 - alpha * rho).powi(2);
            let g = r.g.unwrap();
            assert!(!g.divergent);
            assert!((g.value - closed).abs() < 1e-12 * closed, "{} vs {closed}", g.value);
        }
    }

    #[test]
    fn delta_weights_give_zero() {
        let w = WeightScheme::custom(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = bound_eval(&inputs(), &BoundConstants::default(), None, Some(&GammaSeries::Truncated(w))).unwrap();
        assert_eq!(r.g.unwrap().value, 0.0);
        assert_eq!(r.gpr_bound.unwrap(), r.floor_term);
    }

    #[test]
    fn divergence_is_flagged() {
        let mut i = inputs();
        i.lambda_bar = 0.99;
        let r = bound_eval(&i, &BoundConstants::default(), Some(3), Some(&GammaSeries::Infinite(SchemeSpec::Ppr(0.95))))
            .unwrap();
        assert!(!r.decay_condition);
        assert!(r.g.unwrap().divergent);
        assert!(r.gpr_bound.unwrap().is_infinite());
        let r = bound_eval(
            &inputs(),
            &BoundConstants::default(),
            None,
            Some(&GammaSeries::Infinite(SchemeSpec::IprNormalized(0.5))),
        )
        .unwrap();
        assert!(r.g.unwrap().divergent);
        // Heat kernel weights always converge.
        let r = bound_eval(&i, &BoundConstants::default(), None, Some(&GammaSeries::Infinite(SchemeSpec::Hpr(5.0))))
            .unwrap();
        assert!(!r.g.unwrap().divergent);
        let r = bound_eval(
            &inputs(),
            &BoundConstants { c1: 1.0, c2: 1.0, c3: 0.01 },
            None,
            Some(&GammaSeries::Infinite(SchemeSpec::IprUnnormalized(0.9, Phi::Auto))),
        )
        .unwrap();
        assert!(!r.g.unwrap().divergent);
    }

    #[test]
    fn hpr_series_with_large_h() {
        let c = BoundConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 0.01,
        };
        let r = bound_eval(&inputs(), &c, None, Some(&GammaSeries::Infinite(SchemeSpec::Hpr(40.0)))).unwrap();
        // sum_k e^-h h^k/k! k rho^(k-1) = h e^(h (rho - 1)).
        let want = 40.0 * (40.0 * (r.rho - 1.0)).exp();
        assert!((r.g.unwrap().value - want).abs() < 1e-10 * want);
        let truncated = GammaSeries::Truncated(ppr_weights(0.5, 200).unwrap());
        let inf = GammaSeries::Infinite(SchemeSpec::Ppr(0.5));
        assert!((g_series(&truncated, r.rho).value - g_series(&inf, r.rho).value).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_degree_and_bracket() {
        let c = BoundConstants::default();
        let mut prev = f64::INFINITY;
        for dmin in [5.0, 10.0, 20.0, 40.0] {
            let mut i = inputs();
            i.dbar_min = dmin;
            i.dbar_max = 40.0;
            let r = bound_eval(&i, &c, Some(4), None).unwrap();
            assert!(r.lp_bound.unwrap() <= prev);
            prev = r.lp_bound.unwrap();
        }
        let lo = bound_eval(&inputs(), &c, Some(4), None).unwrap();
        let mut i = inputs();
        i.lambda_bar = 0.5;
        let hi = bound_eval(&i, &c, Some(4), None).unwrap();
        assert!(hi.lp_bound.unwrap() >= lo.lp_bound.unwrap());
    }

    #[test]
    fn invalid_inputs() {
        let mut i = inputs();
        i.dbar_min = 1.0;
        assert!(bound_eval(&i, &BoundConstants::default(), Some(1), None).is_err());
        let c = BoundConstants {
            c1: 0.0,
            c2: 1.0,
            c3: 1.0,
        };
        assert!(bound_eval(&inputs(), &c, Some(1), None).is_err());
    }

    #[test]
    fn complete_graph_with_loops_is_exactly_uniform() {
        let n = 7;
        let g = Graph::from_edges(n, (0..n).flat_map(|u| (u..n).map(move |v| (u, v)))).unwrap();
        assert!(l1_deviation_from_uniform(&g, 0).unwrap() < 1e-15);
    }

    #[test]
    fn l1_demo_bounds() {
        let demo = l1_divergence_demo(200, 0.05, 8, &RngConfig::new(2)).unwrap();
        assert_eq!(demo.values.len(), 8);
        assert!(demo.values.iter().all(|&v| v <= 2.0 && v > 1.0));
        assert!(l1_divergence_demo(100, 0.01, 5, &RngConfig::new(2)).is_err());
    }

    #[test]
    fn er_shell_mean_field_is_uniform() {
        let spec = SbmSpec::new(15, 0.3, 25, 0.3, 0.3).unwrap();
        let mf = mean_field_lp(&spec, 5).unwrap();
        for k in 1..=5 {
            assert!((mf.x_bar(k, true) - 1.0 / 40.0).abs() < 1e-15);
            assert!((mf.x_bar(k, false) - 1.0 / 40.0).abs() < 1e-15);
        }
        let table = variance_experiment(&spec, 5, 1, &RngConfig::new(8)).unwrap();
        assert_eq!(table.rows.len(), 6);
        assert!(table.rows.iter().all(|r| r.trials == 1 && r.mean_sq_l2_x >= 0.0));
        assert_eq!(table.lambda_sub.len(), 1);
    }
}

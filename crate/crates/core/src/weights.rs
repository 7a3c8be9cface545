//! GPR weight sequences.
//!
//! | family | gamma_k |
//! |---|---|
//! | personalized PageRank `ppr:alpha` | `(1 - alpha) alpha^k` |
//! | heat kernel PageRank `hpr:h` | `e^-h h^k / k!` |
//! | Inverse PageRank over DNLPs `ipr-d:theta` | `theta^-k` |
//! | Inverse PageRank over LPs `ipr-u:theta:phi` | `theta^k / (phi + theta^k)^2` |
//! | pseudo-Fisher | `(mu1 - mu0) / sigma^2` per step |
//! | `custom:<path>` | one value per line |
//!
//! Every sequence is truncated at a finite step K, giving K + 1 weights.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("{name} = {value} is out of range ({range})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("weight {index} is {value}; weights must be finite and nonnegative")]
    Invalid { index: usize, value: f64 },

    #[error("{family} weights overflow at K = {k}; use fewer steps or a larger theta")]
    Overflow { family: &'static str, k: usize },

    #[error("zero variance at step {k}")]
    ZeroVariance { k: usize },

    #[error("moment sequences differ in length ({gaps} gaps, {variances} variances)")]
    MomentLength { gaps: usize, variances: usize },

    #[error("weight sequence is empty")]
    Empty,

    #[error("scheme provides {available} weights, {needed} needed for K = {k}", needed = k + 1)]
    TooShort { available: usize, k: usize },

    #[error("cannot parse scheme {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, WeightError>;

/// How `phi` is chosen for unnormalized Inverse PageRank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    /// `phi = theta^10`, placing the peak weight at k = 10.
    Auto,
    Value(f64),
}

impl Phi {
    pub fn resolve(self, theta: f64) -> f64 {
        match self {
            Phi::Auto => theta.powi(10),
            Phi::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Ppr { alpha: f64 },
    Hpr { h: f64 },
    IprNormalized { theta: f64 },
    IprUnnormalized { theta: f64, phi: f64 },
    PseudoFisher,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Ppr { alpha } => write!(f, "ppr:{alpha}"),
            Family::Hpr { h } => write!(f, "hpr:{h}"),
            Family::IprNormalized { theta } => write!(f, "ipr-d:{theta}"),
            Family::IprUnnormalized { theta, phi } => write!(f, "ipr-u:{theta}:{phi}"),
            Family::PseudoFisher => f.write_str("pseudo-fisher"),
            Family::Custom => f.write_str("custom"),
        }
    }
}

/// A truncated, nonnegative weight sequence `gamma_0..=gamma_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    family: Family,
    gamma: Vec<f64>,
}

fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(WeightError::OutOfRange {
            name,
            value,
            range: "0 < x < 1",
        })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(WeightError::OutOfRange {
            name,
            value,
            range: "x > 0",
        })
    }
}

impl WeightScheme {
    fn new(family: Family, gamma: Vec<f64>) -> Result<WeightScheme> {
        if gamma.is_empty() {
            return Err(WeightError::Empty);
        }
        if let Some((index, &value)) = gamma
            .iter()
            .enumerate()
            .find(|(_, g)| !(g.is_finite() && **g >= 0.0))
        {
            return Err(WeightError::Invalid { index, value });
        }
        Ok(WeightScheme { family, gamma })
    }

    pub fn custom(gamma: Vec<f64>) -> Result<WeightScheme> {
        WeightScheme::new(Family::Custom, gamma)
    }

    /// One weight per line; blank lines and `#` comments are skipped.
    pub fn load_custom<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| WeightError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<f64>().map_err(|_| WeightError::Parse {
                    input: l.to_string(),
                    reason: format!("not a number in {}", path.display()),
                })
            })
            .collect()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Truncation step K.
    pub fn k(&self) -> usize {
        self.gamma.len() - 1
    }

    /// Number of weights, `K + 1`.
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sum(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// Weights actually used for scoring. Inverse PageRank over DNLPs is
    /// divided by its largest weight `gamma_K`, which keeps scores O(1) for
    /// long walks and leaves rankings unchanged; every other family is used
    /// as is.
    pub fn scoring_weights(&self) -> Vec<f64> {
        match self.family {
            Family::IprNormalized { theta } => {
                let k = self.k() as i32;
                (0..=k).map(|i| theta.powi(k - i)).collect()
            }
            _ => self.gamma.clone(),
        }
    }

    /// The first `k + 1` weights, keeping the family.
    pub fn truncate(&self, k: usize) -> Result<WeightScheme> {
        if k + 1 > self.gamma.len() {
            return Err(WeightError::TooShort {
                available: self.gamma.len(),
                k,
            });
        }
        Ok(WeightScheme {
            family: self.family.clone(),
            gamma: self.gamma[..=k].to_vec(),
        })
    }
}

/// `gamma_k = (1 - alpha) alpha^k`.
pub fn ppr_weights(alpha: f64, k: usize) -> Result<WeightScheme> {
    check_open_unit("alpha", alpha)?;
    let gamma = (0..=k as i32).map(|i| (1.0 - alpha) * alpha.powi(i)).collect();
    WeightScheme::new(Family::Ppr { alpha }, gamma)
}

/// Poisson(h) probabilities, built with the log-space recurrence
/// `ln gamma_{k+1} = ln gamma_k + ln h - ln(k + 1)`.
pub fn hpr_weights(h: f64, k: usize) -> Result<WeightScheme> {
    check_positive("h", h)?;
    let ln_h = h.ln();
    let mut log_gamma = -h;
    let mut gamma = Vec::with_capacity(k + 1);
    for i in 0..=k {
        if i > 0 {
            log_gamma += ln_h - (i as f64).ln();
        }
        gamma.push(log_gamma.exp());
    }
    WeightScheme::new(Family::Hpr { h }, gamma)
}

/// `gamma_k = theta^-k`.
pub fn ipr_normalized_weights(theta: f64, k: usize) -> Result<WeightScheme> {
    check_open_unit("theta", theta)?;
    let gamma: Vec<f64> = (0..=k).map(|i| (-(i as f64) * theta.ln()).exp()).collect();
    if gamma.last().is_some_and(|g| !g.is_finite()) {
        return Err(WeightError::Overflow { family: "ipr-d", k });
    }
    WeightScheme::new(Family::IprNormalized { theta }, gamma)
}

/// `gamma_k = theta^k / (phi + theta^k)^2`, peaking where `theta^k = phi`.
pub fn ipr_unnormalized_weights(theta: f64, phi: Phi, k: usize) -> Result<WeightScheme> {
    check_open_unit("theta", theta)?;
    let phi = phi.resolve(theta);
    check_positive("phi", phi)?;
    let gamma = (0..=k as i32)
        .map(|i| {
            let t = theta.powi(i);
            t / ((phi + t) * (phi + t))
        })
        .collect();
    WeightScheme::new(Family::IprUnnormalized { theta, phi }, gamma)
}

/// Per-step class-mean gaps and feature variances.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMoments {
    pub gaps: Vec<f64>,
    pub variances: Vec<f64>,
}

/// Pseudo-Fisher weights together with the number of steps whose negative
/// weight was clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoFisher {
    pub scheme: WeightScheme,
    pub clamped: usize,
}

/// `gamma_k = gap_k / variance_k`: the discriminant that uses each
/// feature's own variance and ignores cross-step correlations.
///
/// GPR weights are nonnegative, so a negative mean gap yields weight zero;
/// this is logged at warn level.
pub fn pseudo_fisher_weights(moments: &FeatureMoments) -> Result<PseudoFisher> {
    let FeatureMoments { gaps, variances } = moments;
    if gaps.len() != variances.len() {
        return Err(WeightError::MomentLength {
            gaps: gaps.len(),
            variances: variances.len(),
        });
    }
    if let Some(k) = variances.iter().position(|&v| !(v > 0.0)) {
        return Err(WeightError::ZeroVariance { k });
    }
    let mut clamped = 0;
    let gamma = gaps
        .iter()
        .zip(variances)
        .map(|(g, v)| {
            let w = g / v;
            if w < 0.0 {
                clamped += 1;
                0.0
            } else {
                w
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!("pseudo-Fisher: {clamped} negative weights clamped to zero");
    }
    Ok(PseudoFisher {
        scheme: WeightScheme::new(Family::PseudoFisher, gamma)?,
        clamped,
    })
}

/// A weight family independent of K, as written on the command line:
/// `ppr:0.95`, `hpr:5`, `ipr-d:0.99`, `ipr-u:0.9:auto`, `ipr-u:0.9:0.3`,
/// `custom:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    Ppr(f64),
    Hpr(f64),
    IprNormalized(f64),
    IprUnnormalized(f64, Phi),
    Custom { label: String, values: Vec<f64> },
}

impl SchemeSpec {
    /// Materialises K + 1 weights. Custom sequences must be long enough and
    /// are cut to length.
    pub fn build(&self, k: usize) -> Result<WeightScheme> {
        match self {
            SchemeSpec::Ppr(alpha) => ppr_weights(*alpha, k),
            SchemeSpec::Hpr(h) => hpr_weights(*h, k),
            SchemeSpec::IprNormalized(theta) => ipr_normalized_weights(*theta, k),
            SchemeSpec::IprUnnormalized(theta, phi) => ipr_unnormalized_weights(*theta, *phi, k),
            SchemeSpec::Custom { values, .. } => {
                if values.len() < k + 1 {
                    return Err(WeightError::TooShort {
                        available: values.len(),
                        k,
                    });
                }
                WeightScheme::custom(values[..=k].to_vec())
            }
        }
    }

    /// Checks parameters without building.
    pub fn validate(&self) -> Result<()> {
        self.build(0).map(|_| ())
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::Ppr(a) => write!(f, "ppr:{a}"),
            SchemeSpec::Hpr(h) => write!(f, "hpr:{h}"),
            SchemeSpec::IprNormalized(t) => write!(f, "ipr-d:{t}"),
            SchemeSpec::IprUnnormalized(t, Phi::Auto) => write!(f, "ipr-u:{t}:auto"),
            SchemeSpec::IprUnnormalized(t, Phi::Value(p)) => write!(f, "ipr-u:{t}:{p}"),
            SchemeSpec::Custom { label, .. } => write!(f, "custom:{label}"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = WeightError;

    fn from_str(input: &str) -> Result<SchemeSpec> {
        let parse_err = |reason: &str| WeightError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(&format!("{s:?} is not a number")))
        };
        let (name, rest) = input
            .split_once(':')
            .ok_or_else(|| parse_err("expected <family>:<parameters>"))?;
        let spec = match name.trim() {
            "ppr" => SchemeSpec::Ppr(number(rest)?),
            "hpr" => SchemeSpec::Hpr(number(rest)?),
            "ipr-d" => SchemeSpec::IprNormalized(number(rest)?),
            "ipr-u" => {
                let (theta, phi) = match rest.split_once(':') {
                    Some((t, p)) => (number(t)?, p.trim()),
                    None => (number(rest)?, "auto"),
                };
                let phi = if phi == "auto" {
                    Phi::Auto
                } else {
                    Phi::Value(number(phi)?)
                };
                SchemeSpec::IprUnnormalized(theta, phi)
            }
            "custom" => SchemeSpec::Custom {
                label: rest.to_string(),
                values: WeightScheme::load_custom(rest)?,
            },
            other => return Err(parse_err(&format!("unknown family {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn ppr_values_and_sum() {
        let w = ppr_weights(0.5, 2).unwrap();
        assert_close(w.gamma(), &[0.5, 0.25, 0.125], 1e-16);
        for (alpha, k) in [(0.3, 5), (0.95, 40), (0.5, 0)] {
            let w = ppr_weights(alpha, k).unwrap();
            let want = 1.0 - alpha.powi(k as i32 + 1);
            assert!((w.sum() - want).abs() < 1e-13);
        }
        assert!(ppr_weights(1.0, 3).is_err());
        assert!(ppr_weights(0.0, 3).is_err());
    }

    #[test]
    fn hpr_values_mode_and_sum() {
        let e = (-1.0f64).exp();
        assert_close(hpr_weights(1.0, 2).unwrap().gamma(), &[e, e, e / 2.0], 1e-15);
        for h in [2.5, 5.0, 10.0, 7.3] {
            let w = hpr_weights(h, 60).unwrap();
            let argmax = w
                .gamma()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, h.floor() as usize, "h = {h}");
            assert!((w.sum() - 1.0).abs() < 1e-12);
        }
        assert!(hpr_weights(0.0, 3).is_err());
        assert!(hpr_weights(-1.0, 3).is_err());
    }

    #[test]
    fn ipr_normalized_values() {
        let w = ipr_normalized_weights(0.9, 2).unwrap();
        assert_close(w.gamma(), &[1.0, 1.0 / 0.9, 1.0 / 0.81], 1e-14);
        assert!((w.gamma()[1] - 1.111111).abs() < 1e-6);
        assert!((w.gamma()[2] - 1.234568).abs() < 1e-6);
        let w = ipr_normalized_weights(0.99, 80).unwrap();
        assert!(w.gamma().windows(2).all(|p| p[1] > p[0]));
        assert!(ipr_normalized_weights(1.0, 3).is_err());
        assert!(matches!(
            ipr_normalized_weights(0.01, 400),
            Err(WeightError::Overflow { .. })
        ));
    }

    #[test]
    fn ipr_normalized_scoring_is_rescaled() {
        let w = ipr_normalized_weights(0.25, 50).unwrap();
        let s = w.scoring_weights();
        assert_eq!(s[50], 1.0);
        for (raw, scaled) in w.gamma().iter().zip(&s) {
            assert!((raw / w.gamma()[50] - scaled).abs() <= 1e-13 * scaled);
        }
        let p = ppr_weights(0.5, 3).unwrap();
        assert_eq!(p.scoring_weights(), p.gamma());
    }

    #[test]
    fn ipr_unnormalized_values() {
        let theta: f64 = 0.9;
        let w = ipr_unnormalized_weights(theta, Phi::Auto, 40).unwrap();
        let phi = theta.powi(10);
        assert!((phi - 0.348678).abs() < 1e-6);
        assert!((w.gamma()[0] - 1.0 / (1.0 + phi).powi(2)).abs() < 1e-15);
        assert!((w.gamma()[0] - 0.549773).abs() < 1e-6);
        assert!((w.gamma()[10] - 1.0 / (4.0 * phi)).abs() < 1e-14);
        // 0.716994 is the commonly listed rounding of 0.7169930.
        assert!((w.gamma()[10] - 0.716994).abs() < 2e-6);
        let argmax = w
            .gamma()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 10);
        assert!(ipr_unnormalized_weights(0.9, Phi::Value(0.0), 3).is_err());
    }

    #[test]
    fn ipr_unnormalized_small_phi_tracks_inverse_powers() {
        let theta: f64 = 0.8;
        let w = ipr_unnormalized_weights(theta, Phi::Value(1e-12), 10).unwrap();
        for (k, g) in w.gamma().iter().enumerate() {
            let limit = theta.powi(-(k as i32));
            assert!((g - limit).abs() < 1e-9 * limit);
        }
    }

    #[test]
    fn pseudo_fisher_cases() {
        let m = FeatureMoments {
            gaps: vec![0.8, 0.4, 0.2],
            variances: vec![2.0, 2.0, 2.0],
        };
        let pf = pseudo_fisher_weights(&m).unwrap();
        assert_close(pf.scheme.gamma(), &[0.4, 0.2, 0.1], 1e-16);
        assert_eq!(pf.clamped, 0);

        // gaps c lam_bar^k over variances lam^2k give (lam_bar / lam)^k lam^-k.
        let (lam_bar, lam, c): (f64, f64, f64) = (0.4, 0.45, 0.3);
        let m = FeatureMoments {
            gaps: (0..10).map(|k| c * lam_bar.powi(k)).collect(),
            variances: (0..10).map(|k| lam.powi(2 * k)).collect(),
        };
        let pf = pseudo_fisher_weights(&m).unwrap();
        for (k, g) in pf.scheme.gamma().iter().enumerate() {
            let want = c * (lam_bar / lam).powi(k as i32) * lam.powi(-(k as i32));
            assert!((g - want).abs() < 1e-12 * want);
        }

        let zero = FeatureMoments {
            gaps: vec![0.0; 4],
            variances: vec![1.0; 4],
        };
        assert!(pseudo_fisher_weights(&zero).unwrap().scheme.gamma().iter().all(|&g| g == 0.0));

        let negative = FeatureMoments {
            gaps: vec![1.0, -1.0],
            variances: vec![1.0, 1.0],
        };
        let pf = pseudo_fisher_weights(&negative).unwrap();
        assert_eq!(pf.scheme.gamma(), &[1.0, 0.0]);
        assert_eq!(pf.clamped, 1);

        let bad = FeatureMoments {
            gaps: vec![1.0, 1.0],
            variances: vec![1.0, 0.0],
        };
        assert!(matches!(pseudo_fisher_weights(&bad), Err(WeightError::ZeroVariance { k: 1 })));
    }

    #[test]
    fn scheme_grammar() {
        assert_eq!("ppr:0.95".parse::<SchemeSpec>().unwrap(), SchemeSpec::Ppr(0.95));
        assert_eq!("hpr:5".parse::<SchemeSpec>().unwrap(), SchemeSpec::Hpr(5.0));
        assert_eq!(
            "ipr-d:0.99".parse::<SchemeSpec>().unwrap(),
            SchemeSpec::IprNormalized(0.99)
        );
        assert_eq!(
            "ipr-u:0.9:auto".parse::<SchemeSpec>().unwrap(),
            SchemeSpec::IprUnnormalized(0.9, Phi::Auto)
        );
        assert_eq!(
            "ipr-u:0.9:0.25".parse::<SchemeSpec>().unwrap(),
            SchemeSpec::IprUnnormalized(0.9, Phi::Value(0.25))
        );
        for bad in ["ppr", "ppr:1.5", "hpr:x", "nope:1", "ipr-d:0", "custom:/no/such/file"] {
            assert!(bad.parse::<SchemeSpec>().is_err(), "{bad}");
        }
        let spec: SchemeSpec = "ipr-u:0.9:auto".parse().unwrap();
        assert_eq!(spec.to_string(), "ipr-u:0.9:auto");
    }

    #[test]
    fn custom_weights_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        std::fs::write(&path, "# weights\n1\n0.5\n\n0.25\n").unwrap();
        let spec: SchemeSpec = format!("custom:{}", path.display()).parse().unwrap();
        assert_eq!(spec.build(2).unwrap().gamma(), &[1.0, 0.5, 0.25]);
        assert_eq!(spec.build(1).unwrap().gamma(), &[1.0, 0.5]);
        assert!(matches!(spec.build(3), Err(WeightError::TooShort { .. })));
        assert!(WeightScheme::custom(vec![1.0, -0.1]).is_err());
        assert!(WeightScheme::custom(vec![]).is_err());
    }
}

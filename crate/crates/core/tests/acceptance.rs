//! Acceptance checks. Run with `cargo test --release --test acceptance`;
//! prints one PASS/FAIL line per criterion and exits nonzero if any fail.

mod common;

use std::time::Instant;

use gprank::analysis::{l1_divergence_demo, variance_experiment, Curve};
use gprank::detect::{classification_errors, recall, run_detection, sbm_sweep, top_q, DetectionConfig};
use gprank::diffusion::{
    gpr, lambda_sub_estimate, landing_probabilities, mean_field_lp, mean_gap, seed_distribution, Features,
};
use gprank::graph::{walk_step, Graph};
use gprank::randgraph::{mean_field, SbmSpec};
use gprank::rng::RngConfig;
use gprank::stats::{mean, pooled_standard_error, pooled_std};
use gprank::weights::{hpr_weights, ipr_normalized_weights, ipr_unnormalized_weights, ppr_weights, Phi, WeightScheme};
use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const MASTER_SEED: u64 = 2019;

const RECURSION_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-10;
const SLOPE_REL_TOL: f64 = 0.15;
const FLOOR_FACTOR: f64 = 2.0;
const FLAT_POOLED_STDS: f64 = 2.0;
const SPECTRAL_TOL: f64 = 1e-8;
const L1_MIN: f64 = 1.5;
const L1_MAX: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1  mean-field recursion vs closed form", c1_recursion),
        ("2  mean gap decays at rate lambda2_bar", c2_mean_gap),
        ("3a DNLP variance slope over k in [2,10]", c3a_slope),
        ("3b raw-LP deviation floor", c3b_floor),
        ("4  single-step classification errors", c4_classification),
        ("5  IPR-d ordering on SBMs", c5_ordering),
        ("6  spectral estimate vs dense oracle", c6_spectral),
        ("7  l1 divergence on ER(1000, 0.01)", c7_l1),
        ("8  invariant suite", c8_invariants),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} {name} ({secs:.1}s): {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        if !result.pass {
            failed += 1;
        }
    }
    println!("SKIP 9  real-network recalls: needs downloaded datasets");
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn random_specs(count: usize) -> Vec<SbmSpec> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(MASTER_SEED);
    (0..count)
        .map(|_| {
            SbmSpec::new(
                rng.random_range(20..=1000),
                rng.random_range(0.05..0.6),
                rng.random_range(20..=1000),
                rng.random_range(0.05..0.6),
                rng.random_range(0.001..0.05),
            )
            .unwrap()
        })
        .collect()
}

fn c1_recursion() -> Outcome {
    let mut worst_mass: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for spec in random_specs(10) {
        let m = mean_field(&spec);
        let w = Matrix2::new(m.beta1, 1.0 - m.beta0, 1.0 - m.beta1, m.beta0);
        let eig = w.eigenvalues().expect("real spectrum");
        let lam = if (eig[0] - 1.0).abs() < (eig[1] - 1.0).abs() { eig[1] } else { eig[0] };
        // Stationary vector spans the kernel of W' - I.
        let pi1 = (1.0 - m.beta0) / ((1.0 - m.beta0) + (1.0 - m.beta1));
        let mf = mean_field_lp(&spec, 50).unwrap();
        for k in 0..=50 {
            let closed1 = pi1 + (1.0 - pi1) * lam.powi(k as i32);
            let closed0 = (1.0 - pi1) - (1.0 - pi1) * lam.powi(k as i32);
            let (p1, p0) = mf.block_mass[k];
            worst_mass = worst_mass.max((p1 - closed1).abs()).max((p0 - closed0).abs());
            if k < 50 {
                let ratio = mf.gap_unscaled(k + 1) / mf.gap_unscaled(k);
                worst_ratio = worst_ratio.max((ratio - m.lambda2_bar).abs());
            }
        }
        worst_ratio = worst_ratio.max((lam - m.lambda2_bar).abs());
    }
    outcome(
        worst_mass <= RECURSION_TOL && worst_ratio <= RATIO_TOL,
        format!("max |P - closed form| = {worst_mass:.2e}, max |ratio - lambda2_bar| = {worst_ratio:.2e}"),
    )
}

fn c2_mean_gap() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    let mut quoted = Vec::new();
    let mut specs = random_specs(10);
    specs.push(SbmSpec::symmetric(500, 0.05, 0.02).unwrap());
    for spec in &specs {
        let lam = mean_field(spec).lambda2_bar;
        for k in 0..30 {
            let a = mean_gap(spec, k).unwrap();
            let b = mean_gap(spec, k + 1).unwrap();
            worst_ratio = worst_ratio.max((b.value / a.value - lam).abs());
            let c = a.constant * lam.powi(k as i32);
            worst_const = worst_const.max(((a.value - c) / c).abs());
        }
        let g = mean_gap(spec, 0).unwrap();
        quoted.push(g.quoted_constant / g.constant);
    }
    let sym = quoted.last().copied().unwrap_or(f64::NAN);
    outcome(
        worst_ratio <= RATIO_TOL && worst_const <= RECURSION_TOL,
        format!(
            "max |ratio - lambda2_bar| = {worst_ratio:.2e}, max rel |gap - c lambda^k| = {worst_const:.2e}; \
             quoted/exact constant = {sym:.4} on (500,.05,500,.05,.02) (reported only)"
        ),
    )
}

fn fig1_left() -> &'static gprank::analysis::VarianceTable {
    use std::sync::OnceLock;
    static TABLE: OnceLock<gprank::analysis::VarianceTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let spec = SbmSpec::symmetric(500, 0.2, 0.05).unwrap();
        variance_experiment(&spec, 30, 100, &RngConfig::new(MASTER_SEED)).unwrap()
    })
}

fn c3a_slope() -> Outcome {
    let table = fig1_left();
    let reference = 2.0 * mean(&table.lambda_sub.iter().map(|l| l.ln()).collect::<Vec<_>>());
    let slope = table.log_slope(Curve::SqL2Z, 2, 10).unwrap();
    let ratio = slope / reference;
    let late = table.log_slope(Curve::SqL2Z, 3, 10).unwrap() / reference;
    outcome(
        (ratio - 1.0).abs() <= SLOPE_REL_TOL,
        format!(
            "slope {slope:.4} vs 2 ln lambda {reference:.4}, ratio {ratio:.3} (tolerance ±{SLOPE_REL_TOL}); \
             diagnostic window [3,10] ratio {late:.3}; mean lambda_sub {:.4}",
            table.mean_lambda_sub()
        ),
    )
}

fn c3b_floor() -> Outcome {
    let table = fig1_left();
    let (v20, v30) = (table.value(20, Curve::SqL2X), table.value(30, Curve::SqL2X));
    let r = v30 / v20;
    outcome(
        (1.0 / FLOOR_FACTOR..=FLOOR_FACTOR).contains(&r),
        format!("mean ||x - x̄||² at k=30 / k=20 = {r:.3}"),
    )
}

fn c4_classification() -> Outcome {
    let spec = SbmSpec::symmetric(500, 0.05, 0.02).unwrap();
    let t = classification_errors(&spec, &[5, 30], 100, &RngConfig::new(MASTER_SEED)).unwrap();
    let (z5, z30) = (&t.dnlp[0], &t.dnlp[1]);
    let (x5, x30) = (&t.lp[0], &t.lp[1]);
    let spread = pooled_std(z5, z30);
    let flat = (mean(z30) - mean(z5)).abs() <= FLAT_POOLED_STDS * spread;
    let degrades = mean(x30) > mean(x5);
    outcome(
        flat && degrades,
        format!(
            "DNLP error {:.4} (k=5) vs {:.4} (k=30), pooled std {spread:.4}; LP error {:.4} (k=5) vs {:.4} (k=30)",
            mean(z5),
            mean(z30),
            mean(x5),
            mean(x30)
        ),
    )
}

fn c5_ordering() -> Outcome {
    let k_list = [10, 20, 30, 40, 50];
    let mut pass = true;
    let mut detail = Vec::new();
    for q in [0.02, 0.03] {
        let spec = SbmSpec::symmetric(500, 0.05, q).unwrap();
        let theta = 3.0 / 7.0;
        let schemes = vec![
            ipr_normalized_weights(theta, 50).unwrap(),
            ppr_weights(0.95, 50).unwrap(),
            hpr_weights(5.0, 50).unwrap(),
            hpr_weights(10.0, 50).unwrap(),
        ];
        let mut cfg = DetectionConfig::new(schemes[0].clone());
        cfg.seed_count = 1;
        cfg.trials = 200;
        cfg.rng = RngConfig::new(MASTER_SEED);
        let out = sbm_sweep(&spec, &cfg, &schemes, &k_list, &[]).unwrap();
        let at = |scheme: usize, k: usize| &out.results[scheme * k_list.len() + k_list.iter().position(|&x| x == k).unwrap()];
        let ipr = at(0, 50);
        let mut margins = Vec::new();
        for other in 1..schemes.len() {
            let o = at(other, 50);
            let se = pooled_standard_error(&ipr.recalls, &o.recalls);
            let margin = (ipr.mean - o.mean) / se;
            pass &= ipr.mean - o.mean > se;
            margins.push(format!("{} {:.4} ({margin:+.1} SE)", o.scheme, o.mean));
        }
        for pair in k_list.windows(2) {
            let (a, b) = (at(0, pair[0]), at(0, pair[1]));
            pass &= b.mean >= a.mean - pooled_standard_error(&a.recalls, &b.recalls);
        }
        let curve: Vec<String> = k_list.iter().map(|&k| format!("{:.4}", at(0, k).mean)).collect();
        detail.push(format!(
            "q={q}: {} {:.4} vs {}; IPR-d over K {}",
            ipr.scheme,
            ipr.mean,
            margins.join(", "),
            curve.join(" ")
        ));
    }
    outcome(pass, detail.join(" | "))
}

fn c6_spectral() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(MASTER_SEED);
    for i in 0..100 {
        let n = rng.random_range(2..=50);
        let p = rng.random_range(0.02..0.6);
        let g = common::random_connected(n, p, MASTER_SEED + i);
        let est = lambda_sub_estimate(&g, 1e-15, 1_000_000).unwrap();
        worst = worst.max((est.lambda_sub - common::dense_lambda_sub(&g)).abs());
    }
    let fixtures = [
        (common::complete(4), 1.0 / 3.0),
        (common::cycle(3), 0.5),
        (common::star(5), 1.0),
    ];
    let mut worst_fixture: f64 = 0.0;
    for (g, expected) in &fixtures {
        let est = lambda_sub_estimate(g, 1e-15, 1_000_000).unwrap();
        worst_fixture = worst_fixture.max((est.lambda_sub - expected).abs());
    }
    outcome(
        worst <= SPECTRAL_TOL && worst_fixture <= SPECTRAL_TOL,
        format!("max error {worst:.2e} on 100 random graphs, {worst_fixture:.2e} on K4/triangle/star"),
    )
}

fn c7_l1() -> Outcome {
    let demo = l1_divergence_demo(1000, 0.01, 50, &RngConfig::new(MASTER_SEED)).unwrap();
    let max = demo.values.iter().copied().fold(0.0, f64::max);
    outcome(
        demo.mean >= L1_MIN && max <= L1_MAX,
        format!("mean {:.4}, max {max:.4}", demo.mean),
    )
}

fn c8_invariants() -> Outcome {
    let checks: Vec<(&str, fn() -> bool)> = vec![
        ("mass conservation", inv_mass),
        ("DNLP weighted mass", inv_dnlp_mass),
        ("permutation equivariance", inv_permutation),
        ("top-Q scaling invariance", inv_scaling),
        ("PPR/HPR weight sums", inv_weight_sums),
        ("IPR-u argmax at k=10", inv_ipr_u_argmax),
        ("thread-count determinism", inv_threads),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, f)| !f()).map(|(n, _)| *n).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} checks", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn test_graph() -> Graph {
    common::random_connected(60, 0.08, MASTER_SEED)
}

fn inv_mass() -> bool {
    let g = test_graph();
    let mut x = seed_distribution(g.n(), &[0, 5]).unwrap();
    for _ in 0..200 {
        x = walk_step(&g, &x).unwrap();
        if (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 || x.iter().any(|&v| v < 0.0) {
            return false;
        }
    }
    true
}

fn inv_dnlp_mass() -> bool {
    let g = test_graph();
    let x0 = seed_distribution(g.n(), &[3]).unwrap();
    let lps = landing_probabilities(&g, &x0, 100, Features::Normalized).unwrap();
    let total = g.total_degree() as f64;
    (0..=100).all(|k| {
        let z = lps.z(k);
        let mass: f64 = (0..g.n()).map(|v| g.degree(v) as f64 * z[v]).sum();
        ((mass - total) / total).abs() <= 1e-9
    })
}

fn inv_permutation() -> bool {
    let g = test_graph();
    let n = g.n();
    let perm: Vec<usize> = (0..n).map(|v| (v * 7 + 3) % n).collect();
    let h = Graph::from_edges(n, g.edges().map(|(u, v)| (perm[u], perm[v]))).unwrap();
    let x = seed_distribution(n, &[1, 2, 9]).unwrap();
    let mut px = vec![0.0; n];
    for v in 0..n {
        px[perm[v]] = x[v];
    }
    let (a, b) = (walk_step(&g, &x).unwrap(), walk_step(&h, &px).unwrap());
    (0..n).all(|v| (a[v] - b[perm[v]]).abs() <= 1e-15)
}

fn inv_scaling() -> bool {
    let g = test_graph();
    let x0 = seed_distribution(g.n(), &[0]).unwrap();
    let lps = landing_probabilities(&g, &x0, 20, Features::Normalized).unwrap();
    let base = hpr_weights(5.0, 20).unwrap();
    let scaled = WeightScheme::custom(base.gamma().iter().map(|w| w * 37.5).collect()).unwrap();
    let truth: Vec<usize> = (0..30).collect();
    let (s1, s2) = (gpr(&lps, &base).unwrap(), gpr(&lps, &scaled).unwrap());
    let (p1, p2) = (top_q(&s1, 30, &[0]).unwrap(), top_q(&s2, 30, &[0]).unwrap());
    p1 == p2 && recall(&p1, &truth).unwrap() == recall(&p2, &truth).unwrap()
}

fn inv_weight_sums() -> bool {
    let alpha: f64 = 0.9;
    let ppr = ppr_weights(alpha, 40).unwrap();
    let hpr = hpr_weights(5.0, 40).unwrap();
    let poisson_cdf: f64 = (0..=40)
        .map(|k| (-5.0 + k as f64 * 5f64.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()).exp())
        .sum();
    (ppr.sum() - (1.0 - alpha.powi(41))).abs() <= 1e-12 && (hpr.sum() - poisson_cdf).abs() <= 1e-12
}

fn inv_ipr_u_argmax() -> bool {
    [0.8, 0.9, 0.95].iter().all(|&theta| {
        let w = ipr_unnormalized_weights(theta, Phi::Auto, 40).unwrap();
        let argmax = w
            .gamma()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k);
        argmax == Some(10)
    })
}

fn inv_threads() -> bool {
    let spec = SbmSpec::symmetric(100, 0.2, 0.05).unwrap();
    let drawn = gprank::randgraph::sample_sbm_without_isolated(&spec, &RngConfig::new(MASTER_SEED), 0).unwrap();
    let community: Vec<usize> = (0..100).collect();
    let mut cfg = DetectionConfig::new(ipr_normalized_weights(0.5, 15).unwrap());
    cfg.trials = 24;
    cfg.seed_count = 3;
    cfg.rng = RngConfig::new(MASTER_SEED);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_detection(&drawn.graph, &community, &cfg).unwrap())
    };
    let (a, b) = (run(1), run(4));
    a.recalls.iter().zip(&b.recalls).all(|(x, y)| x.to_bits() == y.to_bits())
}

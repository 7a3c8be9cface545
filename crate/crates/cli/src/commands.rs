use std::path::PathBuf;

use serde_json::json;

use gprank::analysis::{bound_eval, variance_experiment, BoundConstants, BoundInputs, Curve, GammaSeries};
use gprank::detect::{
    local_sweep, sample_seeds, sbm_sweep, select_communities_m34, sweep, DetectionConfig, DetectionResult,
    SizeFilter, SEED_STREAM,
};
use gprank::diffusion::{lambda_sub_estimate, landing_probabilities, seed_distribution, Features};
use gprank::graph::{
    bfs_subgraph, largest_connected_component, load_communities, load_edge_list, max_seed_eccentricity,
    save_graph_files, write_edge_list, CommunitySet, Graph, VertexMap,
};
use gprank::randgraph::{mean_field, sample_sbm_without_isolated, SbmSpec};
use gprank::rng::RngConfig;
use gprank::weights::{SchemeSpec, WeightScheme};

use crate::config::FileConfig;
use crate::error::CliError;
use crate::output::{line_plot, num, OutDir, Series};
use crate::{
    BoundArgs, Cli, Command, DetectArgs, DetectionArgs, GenSbmArgs, GraphSource, Lambda2Args, LpArgs, PrepArgs,
    SweepArgs, VarianceArgs,
};

const DEFAULT_OUT: &str = "gprank-out";
const DEFAULT_SBM_STEPS: usize = 50;

struct Ctx {
    file: FileConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn rng(&self) -> RngConfig {
        RngConfig::new(self.seed)
    }

    fn out_dir(&self) -> Result<OutDir, CliError> {
        OutDir::create(&self.out)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let file = FileConfig::load(cli.config.as_deref(), name)?;
    if let Some(threads) = file.pick(cli.threads, "threads")? {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Ctx {
        seed: file.pick(cli.seed, "seed")?.unwrap_or(1),
        out: file.pick(cli.out, "out")?.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        file,
    };
    match cli.command {
        Command::GenSbm(a) => gen_sbm(&ctx, a),
        Command::Lp(a) => lp(&ctx, a),
        Command::Detect(a) => detect(&ctx, a),
        Command::Sweep(a) => sweep_cmd(&ctx, a),
        Command::Variance(a) => variance(&ctx, a),
        Command::Lambda2(a) => lambda2(&ctx, a),
        Command::Prep(a) => prep(&ctx, a),
        Command::Bound(a) => bound(&ctx, a),
    }
}

fn parse_sbm(s: &str) -> Result<SbmSpec, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Config(format!("--sbm {s:?}: expected n1,p1,n0,p0,q"));
    if parts.len() != 5 {
        return Err(bad());
    }
    let int = |p: &str| p.parse::<usize>().map_err(|_| bad());
    let real = |p: &str| p.parse::<f64>().map_err(|_| bad());
    Ok(SbmSpec::new(
        int(parts[0])?,
        real(parts[1])?,
        int(parts[2])?,
        real(parts[3])?,
        real(parts[4])?,
    )?)
}

fn parse_pair(flag: &str, s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("--{flag} {s:?}: expected LO,HI"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_scheme(s: &str) -> Result<SchemeSpec, CliError> {
    Ok(s.parse::<SchemeSpec>()?)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("--{flag} is required (as a flag or in the config file)")))
}

enum Loaded {
    File {
        graph: Graph,
        vmap: VertexMap,
        communities: Option<CommunitySet>,
        path: PathBuf,
    },
    Sbm {
        spec: SbmSpec,
        graph: Graph,
        trial: u64,
    },
}

impl Loaded {
    fn graph(&self) -> &Graph {
        match self {
            Loaded::File { graph, .. } | Loaded::Sbm { graph, .. } => graph,
        }
    }

    fn vmap(&self) -> VertexMap {
        match self {
            Loaded::File { vmap, .. } => vmap.clone(),
            Loaded::Sbm { graph, .. } => VertexMap::identity(graph.n()),
        }
    }

    fn communities(&self) -> Option<CommunitySet> {
        match self {
            Loaded::File { communities, .. } => communities.clone(),
            Loaded::Sbm { spec, .. } => Some(spec.communities()),
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            Loaded::File { path, .. } => json!({ "graph": path }),
            Loaded::Sbm { spec, trial, .. } => json!({ "sbm": sbm_json(spec), "trial": trial }),
        }
    }
}

fn sbm_json(s: &SbmSpec) -> serde_json::Value {
    json!({ "n1": s.n1, "p1": s.p1, "n0": s.n0, "p0": s.p0, "q": s.q })
}

/// Either `--sbm` or `--graph` (with optional `--communities`).
enum Source {
    File { graph: PathBuf, communities: Option<PathBuf> },
    Sbm { spec: SbmSpec, trial: u64 },
}

fn resolve_source(ctx: &Ctx, src: &GraphSource) -> Result<Source, CliError> {
    let graph: Option<PathBuf> = ctx.file.pick(src.graph.clone(), "graph")?;
    let sbm: Option<String> = ctx.file.pick(src.sbm.clone(), "sbm")?;
    match (graph, sbm) {
        (Some(graph), None) => Ok(Source::File {
            graph,
            communities: ctx.file.pick(src.communities.clone(), "communities")?,
        }),
        (None, Some(sbm)) => Ok(Source::Sbm {
            spec: parse_sbm(&sbm)?,
            trial: ctx.file.pick(src.trial, "trial")?.unwrap_or(0),
        }),
        (Some(_), Some(_)) => Err(CliError::Config("give either --graph or --sbm, not both".into())),
        (None, None) => Err(CliError::Config("a graph source is required: --graph PATH or --sbm SPEC".into())),
    }
}

fn load(ctx: &Ctx, source: Source) -> Result<Loaded, CliError> {
    match source {
        Source::File { graph: path, communities } => {
            let (graph, vmap) = load_edge_list(&path)?;
            let communities = match communities {
                Some(cpath) => {
                    let loaded = load_communities(&cpath, &vmap)?;
                    if loaded.dropped_members > 0 || loaded.skipped_lines > 0 {
                        log::warn!(
                            "{}: dropped {} members absent from the graph, skipped {} lines",
                            cpath.display(),
                            loaded.dropped_members,
                            loaded.skipped_lines
                        );
                    }
                    Some(loaded.communities)
                }
                None => None,
            };
            Ok(Loaded::File {
                graph,
                vmap,
                communities,
                path,
            })
        }
        Source::Sbm { spec, trial } => {
            let drawn = sample_sbm_without_isolated(&spec, &ctx.rng(), trial)?;
            if drawn.resampled > 0 {
                log::info!("redrew the graph {} times to avoid isolated vertices", drawn.resampled);
            }
            Ok(Loaded::Sbm {
                spec,
                graph: drawn.graph,
                trial,
            })
        }
    }
}

fn gen_sbm(ctx: &Ctx, a: GenSbmArgs) -> Result<(), CliError> {
    let spec = parse_sbm(&required(ctx.file.pick(a.sbm, "sbm")?, "sbm")?)?;
    let trial = ctx.file.pick(a.trial, "trial")?.unwrap_or(0);
    let drawn = sample_sbm_without_isolated(&spec, &ctx.rng(), trial)?;
    let mut out = ctx.out_dir()?;
    let vmap = VertexMap::identity(spec.n());
    save_graph_files(
        &drawn.graph,
        &spec.communities(),
        &vmap,
        &out.path("sbm.edges"),
        &out.path("sbm.cmty"),
    )?;
    out.record("sbm.edges");
    out.record("sbm.cmty");
    println!(
        "n = {}, edges = {}, redraws = {}",
        drawn.graph.n(),
        drawn.graph.edge_count(),
        drawn.resampled
    );
    out.manifest(
        "gen-sbm",
        Some(ctx.seed),
        &json!({ "sbm": sbm_json(&spec), "trial": trial, "redraws": drawn.resampled }),
    )
}

fn lp(ctx: &Ctx, a: LpArgs) -> Result<(), CliError> {
    let loaded = load(ctx, resolve_source(ctx, &a.source)?)?;
    let g = loaded.graph();
    let vmap = loaded.vmap();
    let from = ctx.file.list(a.from, "from")?;
    let seeds: Vec<usize> = if from.is_empty() {
        vec![0]
    } else {
        from.iter()
            .map(|&id| {
                vmap.dense(id)
                    .ok_or_else(|| CliError::Config(format!("--from {id}: no such vertex")))
            })
            .collect::<Result<_, _>>()?
    };
    let k = ctx.file.pick(a.steps, "steps")?.unwrap_or(10);
    let x0 = seed_distribution(g.n(), &seeds)?;
    let lps = landing_probabilities(g, &x0, k, Features::Normalized)?;
    let mut out = ctx.out_dir()?;
    let mut csv = out.csv("lp.csv")?;
    csv.row(["k", "vertex", "x", "z"])?;
    for step in 0..=k {
        let (x, z) = (lps.x(step), lps.z(step));
        for v in 0..g.n() {
            csv.row([step.to_string(), vmap.original(v).to_string(), num(x[v]), num(z[v])])?;
        }
    }
    csv.finish()?;
    out.manifest(
        "lp",
        Some(ctx.seed),
        &json!({ "source": loaded.describe(), "from": seeds.iter().map(|&s| vmap.original(s)).collect::<Vec<_>>(), "steps": k }),
    )
}

/// Resolved detection settings shared by `detect` and `sweep`.
struct Detection {
    features: Features,
    include_seeds: bool,
    trials: usize,
    seed_count: Option<usize>,
    hops: Option<usize>,
    community: Option<usize>,
}

fn detection_settings(ctx: &Ctx, a: &DetectionArgs) -> Result<Detection, CliError> {
    Ok(Detection {
        features: if ctx.file.switch(a.raw, "raw")? {
            Features::Raw
        } else {
            Features::Normalized
        },
        include_seeds: !ctx.file.switch(a.exclude_seeds, "exclude-seeds")?,
        trials: ctx.file.pick(a.trials, "trials")?.unwrap_or(100),
        seed_count: ctx.file.pick(a.seed_count, "seed-count")?,
        hops: ctx.file.pick(a.hops, "hops")?,
        community: ctx.file.pick(a.community, "community")?,
    })
}

impl Detection {
    fn config(&self, ctx: &Ctx, scheme: WeightScheme, synthetic: bool) -> DetectionConfig {
        let mut cfg = DetectionConfig::new(scheme);
        cfg.features = self.features;
        cfg.include_seeds = self.include_seeds;
        cfg.trials = self.trials;
        cfg.seed_count = self.seed_count.unwrap_or(if synthetic { 1 } else { 20 });
        cfg.rng = ctx.rng();
        cfg
    }

    fn echo(&self) -> serde_json::Value {
        json!({
            "features": if self.features == Features::Raw { "lp" } else { "dnlp" },
            "include_seeds": self.include_seeds,
            "trials": self.trials,
            "seed_count": self.seed_count,
            "hops": self.hops,
            "community": self.community,
        })
    }
}

/// Four times the seed eccentricity of trial 0, on the BFS sub-network when
/// `hops` is set.
fn auto_steps(g: &Graph, community: &[usize], seed_count: usize, rng: &RngConfig, hops: Option<usize>) -> Result<usize, CliError> {
    let seeds = sample_seeds(community, seed_count, &rng.derive(SEED_STREAM), 0)?;
    let ecc = match hops {
        Some(h) => {
            let (sub, vmap) = bfs_subgraph(g, &seeds, h)?;
            let local: Vec<usize> = seeds.iter().filter_map(|&s| vmap.dense(s as u64)).collect();
            max_seed_eccentricity(&sub, &local)?
        }
        None => max_seed_eccentricity(g, &seeds).map_err(|e| {
            CliError::Config(format!("cannot pick a default K ({e}); pass --steps or run `prep` first"))
        })?,
    };
    Ok(4 * ecc.max(1))
}

/// Communities to evaluate on a loaded graph.
fn pick_communities(
    loaded: &Loaded,
    index: Option<usize>,
    all: bool,
    filter: Option<SizeFilter>,
) -> Result<Vec<Vec<usize>>, CliError> {
    let cs = loaded
        .communities()
        .ok_or_else(|| CliError::Config("--communities is required with --graph".into()))?;
    if cs.is_empty() {
        return Err(CliError::Config("the community file has no usable communities".into()));
    }
    let cs = match filter {
        Some(f) => select_communities_m34(&cs, f)?.communities,
        None => cs,
    };
    if all || filter.is_some() {
        if cs.is_empty() {
            return Err(CliError::Config("the size filter selected no communities".into()));
        }
        return Ok(cs.iter().map(<[usize]>::to_vec).collect());
    }
    let i = index.unwrap_or(0);
    if i >= cs.len() {
        return Err(CliError::Config(format!("--community {i}: only {} communities", cs.len())));
    }
    Ok(vec![cs.get(i).to_vec()])
}

struct SweepOutcome {
    rows: Vec<DetectionResult>,
    /// Budget label per row; `|C|` when communities with different default
    /// budgets were pooled.
    q_labels: Vec<String>,
    notes: serde_json::Value,
}

/// Runs the sweep on every community and pools the per-trial recalls row by
/// row, which weights communities uniformly.
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    ctx: &Ctx,
    loaded: &Loaded,
    det: &Detection,
    communities: &[Vec<usize>],
    specs: &[SchemeSpec],
    k_list: Vec<usize>,
    q_list: &[usize],
) -> Result<SweepOutcome, CliError> {
    if let Loaded::Sbm { spec, .. } = loaded {
        let k_list = if k_list.is_empty() { vec![DEFAULT_SBM_STEPS] } else { k_list };
        let k_max = *k_list.iter().max().expect("nonempty");
        let schemes = specs.iter().map(|s| s.build(k_max)).collect::<Result<Vec<_>, _>>()?;
        let cfg = det.config(ctx, schemes[0].clone(), true);
        let out = sbm_sweep(spec, &cfg, &schemes, &k_list, q_list)?;
        let q_labels = out.results.iter().map(|r| r.q.to_string()).collect();
        return Ok(SweepOutcome {
            rows: out.results,
            q_labels,
            notes: json!({ "graphs": "fresh SBM draw per trial", "redraws": out.resampled, "steps": k_list }),
        });
    }

    let g = loaded.graph();
    let seed_count = det.seed_count.unwrap_or(20);
    let (k_list, steps_rule) = if k_list.is_empty() {
        let k = auto_steps(g, &communities[0], seed_count, &ctx.rng(), det.hops)?;
        log::info!("K = {k} (4x the seed eccentricity)");
        (vec![k], "4x seed eccentricity")
    } else {
        (k_list, "given")
    };
    let k_max = *k_list.iter().max().expect("nonempty");
    let schemes = specs.iter().map(|s| s.build(k_max)).collect::<Result<Vec<_>, _>>()?;
    let cfg = det.config(ctx, schemes[0].clone(), false);

    let mut pooled: Vec<DetectionResult> = Vec::new();
    let mut coverage = Vec::new();
    for community in communities {
        let rows = match det.hops {
            Some(h) => {
                let local = local_sweep(g, community, &cfg, h, &schemes, &k_list, q_list)?;
                coverage.push(json!({ "vertices": local.mean_vertices, "coverage": local.mean_coverage }));
                local.results
            }
            None => sweep(g, community, &cfg, &schemes, &k_list, q_list)?,
        };
        if pooled.is_empty() {
            pooled = rows;
        } else {
            for (acc, row) in pooled.iter_mut().zip(rows) {
                acc.recalls.extend(row.recalls);
                if acc.q != row.q {
                    acc.q = 0;
                }
            }
        }
    }
    let q_labels = pooled
        .iter()
        .map(|r| if r.q == 0 && q_list.is_empty() { "|C|".to_string() } else { r.q.to_string() })
        .collect();
    let rows = pooled
        .into_iter()
        .map(|r| DetectionResult::from_recalls(r.scheme, r.k, r.q, r.recalls))
        .collect();
    Ok(SweepOutcome {
        rows,
        q_labels,
        notes: json!({
            "communities": communities.len(),
            "steps": k_list,
            "steps_rule": steps_rule,
            "subnetworks": coverage,
        }),
    })
}

fn write_summary(out: &mut OutDir, name: &str, outcome: &SweepOutcome) -> Result<(), CliError> {
    let mut csv = out.csv(name)?;
    csv.row(["scheme", "K", "Q", "trials", "mean_recall", "std_recall"])?;
    for (r, q) in outcome.rows.iter().zip(&outcome.q_labels) {
        csv.row([
            r.scheme.clone(),
            r.k.to_string(),
            q.clone(),
            r.recalls.len().to_string(),
            num(r.mean),
            num(r.std),
        ])?;
        println!("{:<24} K={:<4} Q={:<6} recall {:.4} ± {:.4}", r.scheme, r.k, q, r.mean, r.std);
    }
    csv.finish()
}

fn detect(ctx: &Ctx, a: DetectArgs) -> Result<(), CliError> {
    let det = detection_settings(ctx, &a.common)?;
    let scheme = parse_scheme(&required(ctx.file.pick(a.scheme, "scheme")?, "scheme")?)?;
    let steps: Option<usize> = ctx.file.pick(a.steps, "steps")?;
    let budget: Option<usize> = ctx.file.pick(a.budget, "budget")?;
    let loaded = load(ctx, resolve_source(ctx, &a.common.source)?)?;
    let communities = match loaded {
        Loaded::Sbm { .. } => Vec::new(),
        _ => pick_communities(&loaded, det.community, false, None)?,
    };
    let q_list: Vec<usize> = budget.into_iter().collect();
    let outcome = run_sweep(
        ctx,
        &loaded,
        &det,
        &communities,
        std::slice::from_ref(&scheme),
        steps.into_iter().collect(),
        &q_list,
    )?;
    let mut out = ctx.out_dir()?;
    let mut csv = out.csv("detect.csv")?;
    csv.row(["scheme", "trial", "recall"])?;
    let row = &outcome.rows[0];
    for (t, r) in row.recalls.iter().enumerate() {
        csv.row([row.scheme.clone(), t.to_string(), num(*r)])?;
    }
    csv.finish()?;
    write_summary(&mut out, "summary.csv", &outcome)?;
    out.manifest(
        "detect",
        Some(ctx.seed),
        &json!({
            "source": loaded.describe(),
            "scheme": scheme.to_string(),
            "steps": steps,
            "budget": budget,
            "detection": det.echo(),
            "run": outcome.notes,
        }),
    )
}

fn size_filter(ctx: &Ctx, nearest: Option<usize>, window: Option<String>) -> Result<Option<SizeFilter>, CliError> {
    let nearest: Option<usize> = ctx.file.pick(nearest, "nearest")?;
    let window: Option<String> = ctx.file.pick(window, "window")?;
    match (nearest, window) {
        (Some(_), Some(_)) => Err(CliError::Config("give either --nearest or --window".into())),
        (Some(n), None) => Ok(Some(SizeFilter::Nearest(n))),
        (None, Some(w)) => {
            let (min, max) = parse_pair("window", &w)?;
            Ok(Some(SizeFilter::Window { min, max }))
        }
        (None, None) => Ok(None),
    }
}

fn sweep_cmd(ctx: &Ctx, a: SweepArgs) -> Result<(), CliError> {
    let det = detection_settings(ctx, &a.common)?;
    let specs = ctx
        .file
        .list(a.scheme, "scheme")?
        .iter()
        .map(|s| parse_scheme(s))
        .collect::<Result<Vec<_>, _>>()?;
    if specs.is_empty() {
        return Err(CliError::Config("--scheme is required (repeat it for several)".into()));
    }
    let k_list: Vec<usize> = ctx.file.list(a.steps, "steps")?;
    let q_list: Vec<usize> = ctx.file.list(a.budget, "budget")?;
    let filter = size_filter(ctx, a.nearest, a.window)?;
    let all = ctx.file.switch(a.all_communities, "all-communities")?;
    let plot = ctx.file.switch(a.plot, "plot")?;
    let loaded = load(ctx, resolve_source(ctx, &a.common.source)?)?;
    let communities = match loaded {
        Loaded::Sbm { .. } => Vec::new(),
        _ => pick_communities(&loaded, det.community, all, filter)?,
    };
    let outcome = run_sweep(ctx, &loaded, &det, &communities, &specs, k_list, &q_list)?;
    let mut out = ctx.out_dir()?;
    write_summary(&mut out, "sweep.csv", &outcome)?;
    if plot {
        let mut series: Vec<Series> = Vec::new();
        for r in &outcome.rows {
            match series.iter_mut().find(|s| s.label == r.scheme) {
                Some(s) => s.points.push((r.k as f64, r.mean)),
                None => series.push(Series {
                    label: r.scheme.clone(),
                    points: vec![(r.k as f64, r.mean)],
                }),
            }
        }
        out.text("sweep.svg", &line_plot("Mean recall", "K", "recall", &series, false))?;
    }
    out.manifest(
        "sweep",
        Some(ctx.seed),
        &json!({
            "source": loaded.describe(),
            "schemes": specs.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "budgets": q_list,
            "filter": filter.map(|f| format!("{f:?}")),
            "detection": det.echo(),
            "run": outcome.notes,
        }),
    )
}

fn variance(ctx: &Ctx, a: VarianceArgs) -> Result<(), CliError> {
    let spec = parse_sbm(&ctx.file.pick(a.sbm, "sbm")?.unwrap_or_else(|| "500,0.2,500,0.2,0.05".into()))?;
    let k = ctx.file.pick(a.steps, "steps")?.unwrap_or(30);
    let trials = ctx.file.pick(a.trials, "trials")?.unwrap_or(100);
    let (lo, hi) = match ctx.file.pick::<String>(a.slope_window, "slope-window")? {
        Some(w) => parse_pair("slope-window", &w)?,
        None => (2, 10.min(k)),
    };
    let no_plot = ctx.file.switch(a.no_plot, "no-plot")?;
    let table = variance_experiment(&spec, k, trials, &ctx.rng())?;
    let mut out = ctx.out_dir()?;
    let mut csv = out.csv("variance.csv")?;
    csv.row(["k", "trials", "mean_sq_l2_x", "mean_sq_l2_z", "mean_l1_x"])?;
    for r in &table.rows {
        csv.row([
            r.k.to_string(),
            r.trials.to_string(),
            num(r.mean_sq_l2_x),
            num(r.mean_sq_l2_z),
            num(r.mean_l1_x),
        ])?;
    }
    csv.finish()?;
    let slope = table.log_slope(Curve::SqL2Z, lo, hi)?;
    let lambda = table.mean_lambda_sub();
    let reference = 2.0 * lambda.ln();
    println!("mean lambda_sub = {lambda:.6} (mean field {:.6})", mean_field(&spec).lambda2_bar);
    println!("slope of ln mean ||z - z̄||² over k in [{lo}, {hi}] = {slope:.4}; 2 ln lambda = {reference:.4}; ratio = {:.3}", slope / reference);
    if !no_plot {
        let curve = |c: Curve| (0..table.rows.len()).map(|k| (k as f64, table.value(k, c))).collect();
        let series = [
            Series {
                label: "||x - x̄||²".into(),
                points: curve(Curve::SqL2X),
            },
            Series {
                label: "||z - z̄||²".into(),
                points: curve(Curve::SqL2Z),
            },
        ];
        out.text("variance.svg", &line_plot("Deviation from the mean field", "k", "mean squared distance", &series, true))?;
    }
    out.manifest(
        "variance",
        Some(ctx.seed),
        &json!({
            "sbm": sbm_json(&spec),
            "steps": k,
            "trials": trials,
            "slope_window": [lo, hi],
            "slope": slope,
            "mean_lambda_sub": lambda,
            "redraws": table.resampled,
        }),
    )
}

fn lambda2(ctx: &Ctx, a: Lambda2Args) -> Result<(), CliError> {
    let tol = ctx.file.pick(a.tol, "tol")?.unwrap_or(1e-10);
    let max_iter = ctx.file.pick(a.max_iter, "max-iter")?.unwrap_or(100_000);
    let loaded = load(ctx, resolve_source(ctx, &a.source)?)?;
    let est = lambda_sub_estimate(loaded.graph(), tol, max_iter)?;
    println!("lambda_sub = {}", est.lambda_sub);
    println!("residual = {:e}", est.residual);
    println!("iterations = {}", est.iterations);
    println!("converged = {}", est.converged);
    if est.mixing_degenerate {
        log::warn!("lambda_sub is 1 to within 1e-6: the walk does not mix, step counts from mixing arguments are meaningless");
    }
    let mut out = ctx.out_dir()?;
    let mut csv = out.csv("lambda2.csv")?;
    csv.row(["key", "value"])?;
    csv.row(["lambda_sub".to_string(), num(est.lambda_sub)])?;
    csv.row(["residual".to_string(), num(est.residual)])?;
    csv.row(["iterations".to_string(), est.iterations.to_string()])?;
    csv.row(["converged".to_string(), est.converged.to_string()])?;
    csv.row(["mixing_degenerate".to_string(), est.mixing_degenerate.to_string()])?;
    csv.finish()?;
    out.manifest(
        "lambda2",
        Some(ctx.seed),
        &json!({ "source": loaded.describe(), "tol": tol, "max_iter": max_iter }),
    )
}

fn prep(ctx: &Ctx, a: PrepArgs) -> Result<(), CliError> {
    let graph_path: PathBuf = required(ctx.file.pick(a.graph, "graph")?, "graph")?;
    let cmty_path: Option<PathBuf> = ctx.file.pick(a.communities, "communities")?;
    let filter = size_filter(ctx, a.nearest, a.window)?;
    let hops: Option<usize> = ctx.file.pick(a.hops, "hops")?;
    let seed_count = ctx.file.pick(a.seed_count, "seed-count")?.unwrap_or(20);

    let (g, vmap) = load_edge_list(&graph_path)?;
    let (lcc, inner) = largest_connected_component(&g);
    let lcc_map = vmap.then(&inner);
    println!("graph: {} vertices, largest component: {} vertices", g.n(), lcc.n());
    let mut out = ctx.out_dir()?;
    let mut w = out.file("lcc.edges")?;
    write_edge_list(&lcc, &lcc_map, &mut w).map_err(CliError::io(out.path("lcc.edges")))?;
    let mut w = out.file("lcc_map.csv")?;
    lcc_map.write_csv(&mut w).map_err(CliError::io(out.path("lcc_map.csv")))?;
    drop(w);

    let mut notes = json!({ "vertices": g.n(), "lcc_vertices": lcc.n(), "lcc_edges": lcc.edge_count() });
    if let Some(cpath) = cmty_path {
        let loaded = load_communities(&cpath, &vmap)?;
        let communities = loaded.communities.restrict(&inner);
        let selection = select_communities_m34(&communities, filter.unwrap_or_default())?;
        println!(
            "communities: {} in the component, {} selected (m^(3/4) = {:.1})",
            communities.len(),
            selection.communities.len(),
            selection.target
        );
        let mut w = out.file("selected.cmty")?;
        selection
            .communities
            .write(&mut w, &lcc_map)
            .map_err(CliError::io(out.path("selected.cmty")))?;
        drop(w);
        notes["communities"] = json!(communities.len());
        notes["selected"] = json!(selection.communities.len());
        notes["target_size"] = json!(selection.target);

        if let Some(h) = hops {
            let rng = ctx.rng().derive(SEED_STREAM);
            let mut csv = out.csv("subnetworks.csv")?;
            csv.row(["community", "size", "seeds", "vertices", "edges", "coverage"])?;
            for (i, c) in selection.communities.iter().enumerate() {
                let seeds = sample_seeds(c, seed_count.min(c.len()), &rng, 0)?;
                let (sub, sub_map) = bfs_subgraph(&lcc, &seeds, h)?;
                let covered = c.iter().filter(|&&v| sub_map.dense(v as u64).is_some()).count();
                let name = format!("sub_{i}.edges");
                let mut w = out.file(&name)?;
                write_edge_list(&sub, &lcc_map.then(&sub_map), &mut w).map_err(CliError::io(out.path(&name)))?;
                csv.row([
                    i.to_string(),
                    c.len().to_string(),
                    seeds.len().to_string(),
                    sub.n().to_string(),
                    sub.edge_count().to_string(),
                    num(covered as f64 / c.len() as f64),
                ])?;
            }
            csv.finish()?;
        }
    }
    out.manifest(
        "prep",
        Some(ctx.seed),
        &json!({
            "graph": graph_path,
            "filter": filter.map(|f| format!("{f:?}")),
            "hops": hops,
            "seed_count": seed_count,
            "result": notes,
        }),
    )
}

fn bound(ctx: &Ctx, a: BoundArgs) -> Result<(), CliError> {
    let sbm: Option<String> = ctx.file.pick(a.sbm, "sbm")?;
    let mut inputs = match sbm {
        Some(s) => BoundInputs::from_sbm(&parse_sbm(&s)?),
        None => BoundInputs {
            n: required(ctx.file.pick(a.n, "n")?, "n")?,
            dbar_min: required(ctx.file.pick(a.dbar_min, "dbar-min")?, "dbar-min")?,
            dbar_max: required(ctx.file.pick(a.dbar_max, "dbar-max")?, "dbar-max")?,
            lambda_bar: required(ctx.file.pick(a.lambda_bar, "lambda-bar")?, "lambda-bar")?,
            x0_norm: 1.0,
        },
    };
    if let Some(x) = ctx.file.pick(a.x0_norm, "x0-norm")? {
        inputs.x0_norm = x;
    }
    let d = BoundConstants::default();
    let constants = BoundConstants {
        c1: ctx.file.pick(a.c1, "c1")?.unwrap_or(d.c1),
        c2: ctx.file.pick(a.c2, "c2")?.unwrap_or(d.c2),
        c3: ctx.file.pick(a.c3, "c3")?.unwrap_or(d.c3),
    };
    let k: Option<usize> = ctx.file.pick(a.k, "k")?;
    let steps: Option<usize> = ctx.file.pick(a.steps, "steps")?;
    let series = match ctx.file.pick::<String>(a.scheme, "scheme")? {
        Some(s) => {
            let spec = parse_scheme(&s)?;
            Some(match steps {
                Some(k) => GammaSeries::Truncated(spec.build(k)?),
                None => GammaSeries::Infinite(spec),
            })
        }
        None => None,
    };
    if k.is_none() && series.is_none() {
        return Err(CliError::Config("give --k, --scheme or both".into()));
    }
    let report = bound_eval(&inputs, &constants, k, series.as_ref())?;
    let mut out = ctx.out_dir()?;
    let mut csv = out.csv("bound.csv")?;
    csv.row(["key", "value"])?;
    for (key, value) in report.key_values() {
        println!("{key} = {value}");
        csv.row([key, value])?;
    }
    csv.finish()?;
    out.manifest("bound", None, &json!({ "k": k, "steps": steps }))
}

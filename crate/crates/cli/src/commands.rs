//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpnngb::bounds::{
    bounded_degree_bound, cover_points, inductive_bound, transductive_bound, xu_mannor_bound, xu_mannor_iid_bound, BoundInputs, CoverPoint, KProvenance,
};
use mpnngb::concentration::{azuma_check, mc_bhc_dependent, mc_bhc_permutation, TailReport};
use mpnngb::covering::{cover_sweep, EXACT_COVER_LIMIT};
use mpnngb::dependency::{chromatic_number, DependencyGraph};
use mpnngb::distance::{pairwise_matrix, ud, ud_oracle, Weighting, ORACLE_GUARD};
use mpnngb::gmpnn::embed_many;
use mpnngb::graph::SelectionKind;
use mpnngb::rng::stream_seed;
use mpnngb::{BoundReport, Dataset, DistanceParams};
use serde::Deserialize;
use serde_json::json;

use crate::error::usage;
use crate::experiments::{q1_correlation, q2_sampling, q2_split, ExperimentConfig, ModelSpec, SampleSpec};
use crate::generate::{generate, FeatureRule, GeneratorSpec, GraphKind, LabelRule};
use crate::matrix::{default_epsilon_grid, matrix_table, read_matrix};
use crate::output::{num, Format, Report, Table};
use crate::targets::{collect_targets, TargetSet, TargetSpec};
use crate::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "mpnngb", version, about = "Generalization analysis for message-passing neural networks")]
pub struct Cli {
    /// Master seed; experiment configs keep their own seed unless this is given.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write one file per table here instead of printing to stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Structural and feature checks of a dataset.
    Validate(DatasetArg),
    /// Unrolling distance between two targets.
    Distance(DistanceArgs),
    /// All pairwise unrolling distances between targets.
    DistanceMatrix(MatrixArgs),
    /// Greedy and exact ε-covers of a distance matrix.
    Cover(CoverArgs),
    /// Dependency statistics of a training sample.
    Depgraph(DepgraphArgs),
    /// Embeddings of a randomly initialised model.
    Embed(EmbedArgs),
    /// Empirical Lipschitz ratio against the certified constant.
    LipschitzCheck(LipschitzArgs),
    /// Monte-Carlo tail checks of the concentration inequalities.
    ConcentrationCheck(ConcentrationArgs),
    /// Generalization bounds over an ε sweep.
    Bound(BoundArgs),
    /// Embedding distance vs. unrolling distance for a random model.
    Q1(ExperimentArgs),
    /// Generalization gap of concentrated vs. spread training samples.
    Q2(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// Dataset JSON, or an edge list with a `<stem>.features.csv` sidecar.
    pub dataset: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Regular,
    Planted,
    Er,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FeatureArg {
    OnehotDegree,
    UniformBox,
    BlockIndicator,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LabelArg {
    DegreeParity,
    BlockMembership,
    TriangleIncidence,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator spec (TOML or JSON); overrides the flags below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Er)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub deg: usize,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.05)]
    pub p_out: f64,
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = FeatureArg::UniformBox)]
    pub features: FeatureArg,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, value_enum, default_value_t = LabelArg::DegreeParity)]
    pub labels: LabelArg,
    #[arg(long, default_value_t = 0.0)]
    pub graph_shift: f64,
    /// Dataset path; defaults to `<out-dir>/dataset.json`, else stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl GenArgs {
    fn spec(&self) -> Result<GeneratorSpec> {
        if let Some(p) = &self.spec {
            return load_config(p);
        }
        let graph = match self.kind {
            KindArg::Regular => GraphKind::RandomRegular { n: self.n, deg: self.deg },
            KindArg::Planted => GraphKind::PlantedPartition { n: self.n, blocks: self.blocks, p_in: self.p_in, p_out: self.p_out },
            KindArg::Er => GraphKind::ErdosRenyi { n: self.n, p: self.p },
        };
        let features = match self.features {
            FeatureArg::OnehotDegree => FeatureRule::OneHotDegree { dim: self.dim },
            FeatureArg::UniformBox => FeatureRule::UniformBox { lo: self.lo, hi: self.hi, dim: self.dim },
            FeatureArg::BlockIndicator => FeatureRule::BlockIndicator,
        };
        let labels = match self.labels {
            LabelArg::DegreeParity => LabelRule::DegreeParity,
            LabelArg::BlockMembership => LabelRule::BlockMembership,
            LabelArg::TriangleIncidence => LabelRule::TriangleIncidence,
        };
        Ok(GeneratorSpec { graph, count: self.count, features, labels, graph_shift: self.graph_shift })
    }
}

#[derive(Debug, Args)]
pub struct DistanceOpts {
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// identity | seal[:radius] | pairwise
    #[arg(long, default_value = "identity")]
    pub transform: String,
    /// flat | binomial
    #[arg(long, default_value = "binomial")]
    pub weighting: String,
    /// Select the common `k`-hop neighbours of a link (as NCN pooling does).
    #[arg(long)]
    pub ncn_hops: Option<usize>,
}

impl DistanceOpts {
    fn params(&self) -> Result<DistanceParams> {
        let w: Weighting = self.weighting.parse()?;
        let mut p = DistanceParams::new(self.depth, self.transform.parse()?, w);
        if let Some(hops) = self.ncn_hops {
            p = p.with_selection(SelectionKind::CommonNeighbors { hops });
        }
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub dataset: PathBuf,
    /// First target, `graph:u` or `graph:u,v`.
    #[arg(long)]
    pub x: TargetSpec,
    #[arg(long)]
    pub y: TargetSpec,
    #[command(flatten)]
    pub opts: DistanceOpts,
    /// Also run the brute-force oracle and require agreement.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct TargetOpts {
    #[arg(long, value_enum, default_value_t = TargetSet::Nodes)]
    pub targets: TargetSet,
    /// Use a seeded sample of this many targets.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub targets: TargetOpts,
    #[command(flatten)]
    pub opts: DistanceOpts,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// Distance-matrix CSV as written by `distance-matrix`.
    pub matrix: PathBuf,
    /// Comma-separated ε values; a 16-point grid around the median distance otherwise.
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = EXACT_COVER_LIMIT)]
    pub exact_limit: usize,
}

#[derive(Debug, Args)]
pub struct DepgraphArgs {
    pub dataset: PathBuf,
    /// Sampling strategy 1 (few graphs) or 2 (spread); every labelled node when absent.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub strategy: Option<u8>,
    #[arg(long, default_value_t = 48)]
    pub n_train: usize,
    #[arg(long, default_value_t = 1)]
    pub n_test: usize,
}

#[derive(Debug, Args)]
pub struct ModelOpts {
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value = "identity")]
    pub transform: String,
    /// sum | hadamard | concat | ncn[:k]
    #[arg(long, default_value = "sum")]
    pub pooling: String,
    /// relu | identity
    #[arg(long, default_value = "relu")]
    pub activation: String,
    #[arg(long, default_value_t = 1.0)]
    pub norm_bound: f64,
}

impl ModelOpts {
    fn spec(&self) -> ModelSpec {
        ModelSpec {
            layers: self.layers,
            width: self.width,
            transform: self.transform.clone(),
            pooling: self.pooling.clone(),
            activation: self.activation.clone(),
            norm_bound: self.norm_bound,
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub targets: TargetOpts,
}

#[derive(Debug, Args)]
pub struct LipschitzArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub targets: TargetOpts,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
}

#[derive(Debug, Args)]
pub struct ConcentrationArgs {
    #[command(subcommand)]
    pub check: ConcentrationKind,
    #[arg(long, default_value_t = 100_000, global = true)]
    pub trials: usize,
    /// Comma-separated thresholds; 20 evenly spaced points up to the largest
    /// possible deviation otherwise.
    #[arg(long, value_delimiter = ',', global = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum ConcentrationKind {
    /// Cliques sharing one categorical draw.
    Dependent {
        #[arg(long, value_delimiter = ',', required = true)]
        cliques: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
    },
    /// Sampling without replacement from labelled cells.
    Permutation {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        cells: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        subset: Vec<usize>,
    },
    /// Martingale with bounded differences.
    Azuma {
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundKindArg {
    Inductive,
    Transductive,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(value_enum)]
    pub kind: BoundKindArg,
    /// Parameters file (TOML or JSON).
    #[arg(long)]
    pub params: PathBuf,
    /// Distance matrix from which cover sizes are computed.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = EXACT_COVER_LIMIT)]
    pub exact_limit: usize,
}

/// Contents of a `bound --params` file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub loss_bound: f64,
    #[serde(default = "one")]
    pub loss_lipschitz: f64,
    pub lipschitz_c: f64,
    pub delta: f64,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub u: Option<usize>,
    pub d_s: Option<usize>,
    pub chi: Option<usize>,
    #[serde(default)]
    pub beta: f64,
    /// Explicit `(epsilon, k)` points, used when no matrix is given.
    #[serde(default)]
    pub covers: Vec<CoverSize>,
    /// Also evaluate the bounded-degree form for these tree parameters.
    pub bounded_degree: Option<DegreeSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct CoverSize {
    pub epsilon: f64,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct DegreeSpec {
    pub d: usize,
    pub q: usize,
    pub depth: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config (TOML or JSON); built-in defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset overriding the config's generator.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub pairs: Option<usize>,
}

impl ExperimentArgs {
    fn config(&self, seed: Option<u64>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if self.dataset.is_some() {
            cfg.dataset.clone_from(&self.dataset);
        }
        if let Some(r) = self.repetitions {
            cfg.sample.repetitions = r;
        }
        if let Some(p) = self.pairs {
            cfg.pairs = p;
        }
        Ok(cfg)
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    Ok(Dataset::load(path)?)
}

/// Runs a parsed command. Writing the tables is left to the caller, except
/// for `gen`, whose output is the dataset file itself.
pub fn run(cli: &Cli) -> Result<Report> {
    let seed = cli.seed();
    match &cli.command {
        Command::Gen(a) => run_gen(a, seed, cli.out_dir.as_deref()),
        Command::Validate(a) => run_validate(&load_dataset(&a.dataset)?),
        Command::Distance(a) => run_distance(a),
        Command::DistanceMatrix(a) => {
            let ds = load_dataset(&a.dataset)?;
            let targets = collect_targets(&ds, a.targets.targets, a.targets.limit, seed);
            let m = pairwise_matrix(&targets, &a.opts.params()?, true)?;
            let labels: Vec<String> = targets.iter().map(|t| t.label()).collect();
            Ok(Report::new(vec![matrix_table(&labels, &m)]))
        }
        Command::Cover(a) => run_cover(a),
        Command::Depgraph(a) => run_depgraph(a, seed),
        Command::Embed(a) => {
            let ds = load_dataset(&a.dataset)?;
            let targets = collect_targets(&ds, a.targets.targets, a.targets.limit, seed);
            let model = a.model.spec().build(ds.d, seed)?;
            let emb = embed_many(&targets, &model)?;
            let width = model.output_dim(ds.d);
            let mut cols = vec!["target".to_owned()];
            cols.extend((0..width).map(|k| format!("e{k}")));
            let mut t = Table::with_columns("embeddings", cols);
            for e in &emb {
                t.push(std::iter::once(json!(e.label)).chain(e.vector.iter().map(|&x| num(x))).collect());
            }
            Ok(Report::new(vec![t]))
        }
        Command::LipschitzCheck(a) => {
            let ds = load_dataset(&a.dataset)?;
            let cfg = ExperimentConfig {
                seed,
                model: a.model.spec(),
                targets: a.targets.targets,
                max_targets: a.targets.limit,
                pairs: a.pairs,
                ..ExperimentConfig::default()
            };
            let mut r = q1_correlation(&cfg, &ds)?;
            for (t, name) in r.tables.iter_mut().zip(["lipschitz_pairs", "lipschitz_summary"]) {
                t.name = name.into();
            }
            Ok(r)
        }
        Command::ConcentrationCheck(a) => run_concentration(a, seed),
        Command::Bound(a) => run_bound(a),
        Command::Q1(a) => {
            let cfg = a.config(cli.seed)?;
            q1_correlation(&cfg, &cfg.dataset()?)
        }
        Command::Q2(a) => {
            let cfg = a.config(cli.seed)?;
            q2_sampling(&cfg, &cfg.dataset()?)
        }
    }
}

fn run_gen(a: &GenArgs, seed: u64, out_dir: Option<&Path>) -> Result<Report> {
    let spec = a.spec()?;
    let ds = generate(&spec, seed)?;
    let json = ds.to_json_string();
    match (&a.output, out_dir) {
        (Some(p), _) => std::fs::write(p, json)?,
        (None, Some(dir)) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("dataset.json"), json)?;
        }
        (None, None) => println!("{json}"),
    }
    let mut report = run_validate(&ds)?;
    report.tables.clear();
    Ok(report)
}

fn run_validate(ds: &Dataset) -> Result<Report> {
    let mut t = Table::new("validation", &["graph", "nodes", "edges", "labels", "well_formed", "nonzero_features"]);
    let mut report = Report::default();
    for g in &ds.graphs {
        let v = g.graph.validate();
        t.push(vec![
            json!(g.graph.id()),
            json!(g.graph.node_count()),
            json!(g.graph.edge_count()),
            json!(g.node_labels.len() + g.link_labels.len()),
            json!(v.is_well_formed()),
            json!(v.nonzero_features()),
        ]);
        report.check(v.is_well_formed(), format!("graph {} is malformed: {v:?}", g.graph.id()));
        report.check(v.nonzero_features(), format!("graph {} has zero feature vectors at {:?}", g.graph.id(), v.zero_feature_nodes));
    }
    report.tables.push(t);
    Ok(report)
}

fn run_distance(a: &DistanceArgs) -> Result<Report> {
    let ds = load_dataset(&a.dataset)?;
    let (x, y) = (a.x.resolve(&ds)?, a.y.resolve(&ds)?);
    let params = a.opts.params()?;
    let d = ud(&x, &y, &params)?;
    let mut cols = vec!["x", "y", "depth", "transform", "weighting", "distance"];
    let mut row = vec![json!(x.label()), json!(y.label()), json!(a.opts.depth), json!(a.opts.transform), json!(a.opts.weighting), num(d)];
    let mut report = Report::default();
    if a.oracle {
        let o = ud_oracle(&x, &y, &params, ORACLE_GUARD)?;
        cols.push("oracle");
        row.push(num(o));
        report.check((d - o).abs() <= 1e-9, format!("solver {d} and oracle {o} disagree"));
    }
    let mut t = Table::new("distance", &cols);
    t.push(row);
    report.tables.push(t);
    Ok(report)
}

fn run_cover(a: &CoverArgs) -> Result<Report> {
    let (labels, m) = read_matrix(&a.matrix)?;
    let grid = if a.epsilon.is_empty() { default_epsilon_grid(&m)? } else { a.epsilon.clone() };
    if grid.iter().any(|e| !(*e > 0.0)) {
        return usage("ε values must be positive");
    }
    let sweep = cover_sweep(&m, &grid, a.exact_limit)?;
    let mut t = Table::new("cover", &["epsilon", "method", "size", "radius", "max_cell_diameter", "centers"]);
    let mut report = Report::default();
    for row in &sweep {
        for (method, c) in std::iter::once(("greedy", &row.greedy)).chain(row.exact.as_ref().map(|c| ("exact", c))) {
            let diam = c.cell_diameters(&m).into_iter().fold(0.0, f64::max);
            let centers: Vec<&str> = c.centers.iter().map(|&i| labels[i].as_str()).collect();
            t.push(vec![json!(row.epsilon), json!(method), json!(c.size()), num(c.radius(&m)), num(diam), json!(centers.join(" "))]);
            report.check(c.is_valid(&m) && diam <= 2.0 * row.epsilon * (1.0 + 1e-12), format!("{method} cover at ε={} is invalid", row.epsilon));
        }
        if let Some(e) = &row.exact {
            report.check(e.size() <= row.greedy.size(), format!("exact cover larger than greedy at ε={}", row.epsilon));
        }
    }
    report.tables.push(t);
    Ok(report)
}

fn run_depgraph(a: &DepgraphArgs, seed: u64) -> Result<Report> {
    let ds = load_dataset(&a.dataset)?;
    let nodes = ds.labeled_nodes();
    let chosen: Vec<usize> = match a.strategy {
        None => (0..nodes.len()).collect(),
        Some(s) => {
            let spec = SampleSpec { n_train: a.n_train, n_test: a.n_test, strategy: Some(s), repetitions: 1, strategy1_graphs: None };
            q2_split(&nodes, &spec, stream_seed(seed, 100))?.1.remove(0).train
        }
    };
    if chosen.is_empty() {
        return usage("dataset has no labelled nodes");
    }
    let ids: Vec<&str> = chosen.iter().map(|&i| ds.graphs[nodes[i].0.graph].graph.id()).collect();
    let g = DependencyGraph::from_groups(&ids);
    let col = chromatic_number(&g);
    let d_s = mpnngb::dependency::max_same_graph(&ids);
    let mut sizes = g.component_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let sizes: Vec<String> = sizes.iter().map(ToString::to_string).collect();
    let mut t = Table::new("depgraph", &["samples", "d_s", "chi", "chi_exact", "components", "component_sizes"]);
    t.push(vec![json!(chosen.len()), json!(d_s), json!(col.chi), json!(col.exact), json!(sizes.len()), json!(sizes.join(" "))]);
    let mut report = Report::new(vec![t]);
    report.check(col.chi == d_s, format!("chromatic number {} differs from D_S {d_s}", col.chi));
    Ok(report)
}

fn default_t_grid(max: f64) -> Vec<f64> {
    (1..=20).map(|i| max * i as f64 / 20.0).collect()
}

fn run_concentration(a: &ConcentrationArgs, seed: u64) -> Result<Report> {
    let grid = |max: f64| if a.t.is_empty() { default_t_grid(max) } else { a.t.clone() };
    let r: TailReport = match &a.check {
        ConcentrationKind::Dependent { cliques, mu } => {
            let n: usize = cliques.iter().sum();
            mc_bhc_dependent(cliques, mu, a.trials, &grid(n as f64), seed)?
        }
        ConcentrationKind::Permutation { n, cells, subset } => mc_bhc_permutation(*n, cells, subset, a.trials, &grid(*n as f64), seed)?,
        ConcentrationKind::Azuma { c } => azuma_check(c, a.trials, &grid(c.iter().sum()), seed)?,
    };
    let mut tail = Table::new("tail", &["check", "t", "empirical", "bound", "slack", "pass"]);
    for row in &r.rows {
        tail.push(vec![json!(r.check), num(row.t), num(row.empirical), num(row.bound), num(r.slack), json!(row.pass)]);
    }
    let mut summary = Table::new("tail_summary", &["check", "trials", "slack", "pass", "notes"]);
    summary.push(vec![json!(r.check), json!(r.trials), num(r.slack), json!(r.pass), json!(r.notes.join("; "))]);
    let mut report = Report::new(vec![tail, summary]);
    report.check(r.pass, format!("{} tail exceeds its bound plus slack", r.check));
    Ok(report)
}

fn run_bound(a: &BoundArgs) -> Result<Report> {
    let p: BoundParams = load_config(&a.params)?;
    let mut inputs = BoundInputs::new(p.loss_bound, p.lipschitz_c, p.delta);
    inputs.loss_lipschitz = p.loss_lipschitz;
    (inputs.n, inputs.m, inputs.u, inputs.d_s, inputs.chi, inputs.beta) = (p.n, p.m, p.u, p.d_s, p.chi, p.beta);
    inputs.covers = match &a.matrix {
        Some(path) => {
            let (_, m) = read_matrix(path)?;
            let grid = if a.epsilon.is_empty() { default_epsilon_grid(&m)? } else { a.epsilon.clone() };
            cover_points(&cover_sweep(&m, &grid, a.exact_limit)?)
        }
        None if !p.covers.is_empty() => p.covers.iter().map(|c| CoverPoint::new(c.epsilon, c.k, KProvenance::Given)).collect(),
        None => return usage("bound needs --matrix or `covers` in the parameters file"),
    };
    let mut reports: Vec<BoundReport> = Vec::new();
    match a.kind {
        BoundKindArg::Inductive => {
            reports.push(inductive_bound(&inputs)?);
            if inputs.chi.is_some() {
                reports.push(xu_mannor_bound(&inputs)?);
            }
            reports.push(xu_mannor_iid_bound(&inputs)?);
            if let Some(d) = p.bounded_degree {
                let mut sub = inputs.clone();
                sub.covers.retain(|c| c.epsilon < 1.0);
                if !sub.covers.is_empty() {
                    reports.push(bounded_degree_bound(&sub, d.d, d.q, d.depth)?);
                }
            }
        }
        BoundKindArg::Transductive => reports.push(transductive_bound(&inputs)?),
    }
    let mut t =
        Table::new("bound", &["kind", "epsilon", "log_k", "k_provenance", "robustness_term", "concentration_term", "stability_term", "total", "argmin"]);
    for r in &reports {
        let kind = serde_json::to_value(r.kind)?;
        for (i, (row, prov)) in r.rows.iter().zip(&r.provenance).enumerate() {
            t.push(vec![
                kind.clone(),
                num(row.epsilon),
                num(row.log_k),
                serde_json::to_value(prov)?,
                num(row.robustness_term),
                num(row.concentration_term),
                num(row.stability_term),
                num(row.total),
                json!(i == r.argmin),
            ]);
        }
    }
    Ok(Report::new(vec![t]))
}

/// Exit status: 0 when every check passed, 2 on a failed check or a
/// diverging computation, 1 on usage and input errors.
pub fn exit_code(result: &Result<Report>) -> i32 {
    match result {
        Ok(r) if r.passed() => 0,
        Ok(_) | Err(CliError::Divergence { .. }) => 2,
        Err(_) => 1,
    }
}

//! The correlation (Q1) and sampling-strategy (Q2) experiments.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mpnngb::dataset::NodeRef;
use mpnngb::distance::Weighting;
use mpnngb::gmpnn::{embed_many, lipschitz_certify, Activation, Pooling};
use mpnngb::graph::TransformKind;
use mpnngb::rng::{stream_rng, stream_seed};
use mpnngb::stability::stability_gap_check;
use mpnngb::{Dataset, DistanceParams, GmpnnConfig, Target};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::usage;
use crate::generate::{generate, GeneratorSpec};
use crate::output::{num, Report, Table};
use crate::readout::{bce, fit_logits, ReadoutLearner};
use crate::targets::{collect_targets, TargetSet};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub layers: usize,
    pub width: usize,
    pub transform: String,
    pub pooling: String,
    pub activation: String,
    /// Spectral-norm bound `B` of every weight matrix.
    pub norm_bound: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { layers: 2, width: 16, transform: "identity".into(), pooling: "sum".into(), activation: "relu".into(), norm_bound: 1.0 }
    }
}

impl ModelSpec {
    pub fn transform(&self) -> Result<TransformKind> {
        Ok(self.transform.parse()?)
    }

    pub fn pooling(&self) -> Result<Pooling> {
        Ok(self.pooling.parse()?)
    }

    pub fn build(&self, d: usize, seed: u64) -> Result<GmpnnConfig> {
        let act: Activation = self.activation.parse()?;
        Ok(GmpnnConfig::random(d, self.width, self.layers, act, self.transform()?, self.pooling()?, self.norm_bound, seed)?)
    }

    /// Distance matching the model: depth = layer count, same transform and selection.
    pub fn distance_params(&self, weighting: Weighting) -> Result<DistanceParams> {
        Ok(DistanceParams::new(self.layers, self.transform()?, weighting).with_selection(self.pooling()?.selection()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub n_train: usize,
    pub n_test: usize,
    /// Run only this strategy; both when absent.
    pub strategy: Option<u8>,
    pub repetitions: usize,
    /// Graphs used by strategy 1; defaults to as few as can hold `n_train` nodes.
    pub strategy1_graphs: Option<usize>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { n_train: 48, n_test: 480, strategy: None, repetitions: 5, strategy1_graphs: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSpec {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        Self { lr: 0.5, epochs: 300 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Dataset file; the generator is used when absent.
    pub dataset: Option<PathBuf>,
    pub generator: GeneratorSpec,
    pub model: ModelSpec,
    pub targets: TargetSet,
    /// Q1 pair count.
    pub pairs: usize,
    /// Q1 target sample size; all targets when absent.
    pub max_targets: Option<usize>,
    pub sample: SampleSpec,
    pub readout: ReadoutSpec,
    /// Train/test swaps for the stability estimate in Q2; 0 disables it.
    pub stability_swaps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dataset: None,
            generator: GeneratorSpec::desk_scale(),
            model: ModelSpec::default(),
            targets: TargetSet::Nodes,
            pairs: 200,
            max_targets: Some(200),
            sample: SampleSpec::default(),
            readout: ReadoutSpec::default(),
            stability_swaps: 10,
        }
    }
}

impl ExperimentConfig {
    /// TOML, or JSON for `.json` files.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_str(&text)?)
        } else {
            Ok(toml::from_str(&text)?)
        }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            Some(p) => Ok(Dataset::load(p)?),
            None => generate(&self.generator, self.seed),
        }
    }
}

/// Embedding distance against unrolling distance for random target pairs of a
/// randomly initialised model.
pub fn q1_correlation(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    let targets = collect_targets(ds, cfg.targets, cfg.max_targets, stream_seed(cfg.seed, 1));
    if targets.len() < 2 {
        return usage("q1 needs at least two targets");
    }
    let model = cfg.model.build(ds.d, cfg.seed)?;
    let params = cfg.model.distance_params(Weighting::Binomial)?;
    let r = lipschitz_certify(&targets, &model, &params, cfg.pairs, stream_seed(cfg.seed, 2))?;
    let mut pairs = Table::new("q1_pairs", &["left", "right", "ud", "embedding_distance"]);
    for p in &r.pairs {
        pairs.push(vec![json!(p.left), json!(p.right), num(p.ud), num(p.embedding_distance)]);
    }
    let above = r.pairs.iter().all(|p| p.embedding_distance <= r.max_ratio * p.ud * (1.0 + 1e-12) || p.ud == 0.0);
    let mut summary =
        Table::new("q1_summary", &["pairs", "slope", "theoretical_c", "b", "subsum_constant", "zero_distance_violations", "slope_finite_positive", "pass"]);
    let slope_ok = r.max_ratio.is_finite() && r.max_ratio > 0.0;
    summary.push(vec![
        json!(r.pairs.len()),
        num(r.max_ratio),
        num(r.theoretical_c),
        num(r.b),
        num(r.subsum_constant),
        json!(r.zero_distance_violations),
        json!(slope_ok),
        json!(r.pass),
    ]);
    let mut report = Report::new(vec![pairs, summary]);
    report.check(above, "a pair lies above the fitted slope");
    report.check(r.pass, format!("empirical slope {} exceeds certified constant {}", r.max_ratio, r.theoretical_c));
    Ok(report)
}

/// One strategy's training sample within a repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategySample {
    pub strategy: u8,
    pub train: Vec<usize>,
    pub d_s: usize,
    pub graphs: usize,
}

/// Splits graphs into a training half and a test half, draws `n_test` test
/// nodes from the test half and builds each strategy's training sample from
/// the training half. Indices refer to `nodes`.
pub fn q2_split(nodes: &[(NodeRef, u8)], spec: &SampleSpec, seed: u64) -> Result<(Vec<usize>, Vec<StrategySample>)> {
    let mut by_graph: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, (r, _)) in nodes.iter().enumerate() {
        by_graph.entry(r.graph).or_default().push(i);
    }
    let mut rng = stream_rng(seed, 0);
    let mut graphs: Vec<Vec<usize>> = by_graph.into_values().collect();
    graphs.shuffle(&mut rng);
    for g in &mut graphs {
        g.shuffle(&mut rng);
    }
    let half = graphs.len() / 2;
    let (train_graphs, test_graphs) = graphs.split_at(half);
    let test_pool: Vec<usize> = test_graphs.iter().flatten().copied().collect();
    let train_pool: usize = train_graphs.iter().map(Vec::len).sum();
    if spec.n_test > test_pool.len() || spec.n_train > train_pool || spec.n_train == 0 || spec.n_test == 0 {
        return usage(format!("need 0 < n_train ≤ {train_pool} and 0 < n_test ≤ {} (got {} and {})", test_pool.len(), spec.n_train, spec.n_test));
    }
    let mut test: Vec<usize> = rand::seq::index::sample(&mut rng, test_pool.len(), spec.n_test).into_iter().map(|k| test_pool[k]).collect();
    test.sort_unstable();

    let mut samples = Vec::new();
    let wanted = |s: u8| spec.strategy.is_none_or(|x| x == s);
    if wanted(1) {
        // Fill graph by graph from as few graphs as possible.
        let limit = spec.strategy1_graphs.unwrap_or(train_graphs.len());
        let mut train = Vec::new();
        for (used, g) in train_graphs.iter().take(limit).enumerate() {
            if train.len() == spec.n_train {
                break;
            }
            let need = spec.n_train - train.len();
            let take = if spec.strategy1_graphs.is_some() { need.min(g.len()).min(need.div_ceil(limit - used)) } else { need.min(g.len()) };
            train.extend_from_slice(&g[..take]);
        }
        if train.len() < spec.n_train {
            return usage("strategy 1 graphs hold fewer than n_train nodes");
        }
        samples.push(sample_of(1, train, nodes));
    }
    if wanted(2) {
        // Round-robin over all training graphs: one node per graph per round.
        let mut train = Vec::new();
        let mut round = 0;
        while train.len() < spec.n_train {
            for g in train_graphs {
                if train.len() == spec.n_train {
                    break;
                }
                if let Some(&i) = g.get(round) {
                    train.push(i);
                }
            }
            round += 1;
        }
        samples.push(sample_of(2, train, nodes));
    }
    Ok((test, samples))
}

fn sample_of(strategy: u8, mut train: Vec<usize>, nodes: &[(NodeRef, u8)]) -> StrategySample {
    train.sort_unstable();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &train {
        *counts.entry(nodes[i].0.graph).or_default() += 1;
    }
    StrategySample { strategy, d_s: counts.values().copied().max().unwrap_or(0), graphs: counts.len(), train }
}

/// FNV-1a over the sorted index list, as a fingerprint of a test multiset.
pub fn fingerprint(idx: &[usize]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &i in idx {
        for b in (i as u64).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    format!("{h:016x}")
}

fn mean_clipped_loss(logits: &[f64], labels: &[u8], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| bce(logits[i], labels[i])).sum::<f64>() / idx.len() as f64
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Frozen random embeddings of every labelled node, a linear readout per
/// strategy, and the train/test gap over seeded repetitions.
pub fn q2_sampling(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    let nodes = ds.labeled_nodes();
    if nodes.is_empty() {
        return usage("q2 needs node labels");
    }
    let labels: Vec<u8> = nodes.iter().map(|n| n.1).collect();
    let targets: Vec<Target<'_>> = nodes.iter().map(|(r, _)| ds.node_target(*r)).collect::<mpnngb::Result<_>>()?;
    let mut runs = Table::new(
        "q2_runs",
        &["repetition", "strategy", "n_train", "d_s", "train_graphs", "train_loss", "test_loss", "gap", "test_fingerprint", "smoothed_monotone"],
    );
    let mut stability = Table::new("q2_stability", &["repetition", "swaps", "beta_hat", "loss_lipschitz", "swap_gap", "pass"]);
    let mut report = Report::default();
    let mut gaps: BTreeMap<u8, Vec<(f64, f64, f64, usize)>> = BTreeMap::new();
    let mut wins = 0;
    for rep in 0..cfg.sample.repetitions {
        let rep_seed = stream_seed(cfg.seed, 100 + rep as u64);
        let model = cfg.model.build(ds.d, rep_seed)?;
        let pool: Vec<Vec<f64>> = embed_many(&targets, &model)?.into_iter().map(|e| e.vector).collect();
        let (test, samples) = q2_split(&nodes, &cfg.sample, rep_seed)?;
        let fp = fingerprint(&test);
        let mut rep_gaps = BTreeMap::new();
        for s in &samples {
            report.check(s.train.len() == cfg.sample.n_train, format!("strategy {} drew {} training nodes", s.strategy, s.train.len()));
            report.check(s.train.iter().all(|i| test.binary_search(i).is_err()), format!("strategy {} overlaps the test set", s.strategy));
            let (readout, logits) = fit_logits(&pool, &labels, &s.train, cfg.readout.lr, cfg.readout.epochs, rep_seed)?;
            let train_loss = mean_clipped_loss(&logits, &labels, &s.train);
            let test_loss = mean_clipped_loss(&logits, &labels, &test);
            let gap = (test_loss - train_loss).abs();
            let monotone = readout.smoothed_monotone(10);
            report.check(monotone, format!("readout loss increased (repetition {rep}, strategy {})", s.strategy));
            runs.push(vec![
                json!(rep),
                json!(s.strategy),
                json!(s.train.len()),
                json!(s.d_s),
                json!(s.graphs),
                num(train_loss),
                num(test_loss),
                num(gap),
                json!(fp),
                json!(monotone),
            ]);
            gaps.entry(s.strategy).or_default().push((train_loss, test_loss, gap, s.d_s));
            rep_gaps.insert(s.strategy, gap);
        }
        if let (Some(a), Some(b)) = (rep_gaps.get(&1), rep_gaps.get(&2)) {
            wins += usize::from(a > b);
        }
        if rep == 0 && cfg.stability_swaps > 0 {
            if let Some(s) = samples.last() {
                let idx: Vec<usize> = s.train.iter().chain(&test).copied().collect();
                let sub: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].clone()).collect();
                let sub_labels: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
                let learner = ReadoutLearner { pool: &sub, labels: &sub_labels, lr: cfg.readout.lr, epochs: cfg.readout.epochs, seed: rep_seed };
                let st = stability_gap_check(&learner, s.train.len(), cfg.stability_swaps, rep_seed)?;
                report.check(st.pass, format!("swap gap {} exceeds L·beta {}", st.swap_gap, st.beta_hat));
                stability.push(vec![json!(rep), json!(st.swaps), num(st.beta_hat), num(st.loss_lipschitz), num(st.swap_gap), json!(st.pass)]);
            }
        }
    }
    let mut summary =
        Table::new("q2_summary", &["strategy", "repetitions", "d_s", "train_loss_mean", "test_loss_mean", "gap_mean", "gap_std", "strategy1_wins"]);
    for (s, rows) in &gaps {
        let pick = |f: fn(&(f64, f64, f64, usize)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let (gm, gs) = mean_std(&pick(|r| r.2));
        summary.push(vec![
            json!(s),
            json!(rows.len()),
            json!(rows.iter().map(|r| r.3).max().unwrap_or(0)),
            num(mean_std(&pick(|r| r.0)).0),
            num(mean_std(&pick(|r| r.1)).0),
            num(gm),
            num(gs),
            json!(wins),
        ]);
    }
    report.tables = vec![runs, summary, stability];
    Ok(report)
}

/// Number of repetitions in which strategy 1 had the larger gap.
pub fn strategy1_wins(report: &Report) -> Option<usize> {
    let t = report.table("q2_summary")?;
    let c = t.column("strategy1_wins")?;
    t.rows.first()?.get(c)?.as_u64().map(|w| w as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{FeatureRule, GraphKind, LabelRule};

    fn small_nodes(graphs: usize, per: usize) -> Vec<(NodeRef, u8)> {
        (0..graphs).flat_map(|g| (0..per).map(move |v| (NodeRef { graph: g, node: v }, (v % 2) as u8))).collect()
    }

    #[test]
    fn strategies_share_test_set_and_differ_in_dependency() {
        let nodes = small_nodes(40, 10);
        let spec = SampleSpec { n_train: 20, n_test: 50, ..SampleSpec::default() };
        let (test, samples) = q2_split(&nodes, &spec, 3).unwrap();
        assert_eq!(test.len(), 50);
        assert_eq!(samples[0].d_s, 10);
        assert_eq!(samples[0].graphs, 2);
        assert_eq!(samples[1].d_s, 1);
        assert_eq!(samples[1].graphs, 20);
        for s in &samples {
            assert_eq!(s.train.len(), 20);
            assert!(s.train.iter().all(|i| !test.contains(i)));
        }
        let test_graphs: Vec<usize> = test.iter().map(|&i| nodes[i].0.graph).collect();
        assert!(samples.iter().flat_map(|s| &s.train).all(|&i| !test_graphs.contains(&nodes[i].0.graph)));
    }

    #[test]
    fn single_graph_strategy_has_d_s_equal_n_train() {
        let nodes = small_nodes(10, 30);
        let spec = SampleSpec { n_train: 25, n_test: 10, strategy: Some(1), strategy1_graphs: Some(1), ..SampleSpec::default() };
        let (_, samples) = q2_split(&nodes, &spec, 0).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].d_s, 25);
    }

    #[test]
    fn oversized_samples_are_rejected() {
        let nodes = small_nodes(4, 5);
        assert!(q2_split(&nodes, &SampleSpec { n_train: 11, n_test: 5, ..SampleSpec::default() }, 0).is_err());
        assert!(q2_split(&nodes, &SampleSpec { n_train: 5, n_test: 11, ..SampleSpec::default() }, 0).is_err());
    }

    #[test]
    fn separable_partition_reaches_small_test_loss() {
        let mut cfg = ExperimentConfig {
            generator: GeneratorSpec {
                graph: GraphKind::PlantedPartition { n: 20, blocks: 2, p_in: 1.0, p_out: 0.0 },
                count: 40,
                features: FeatureRule::BlockIndicator,
                labels: LabelRule::BlockMembership,
                graph_shift: 0.0,
            },
            ..ExperimentConfig::default()
        };
        cfg.sample = SampleSpec { n_train: 20, n_test: 100, repetitions: 1, ..SampleSpec::default() };
        cfg.stability_swaps = 0;
        let ds = cfg.dataset().unwrap();
        let r = q2_sampling(&cfg, &ds).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        let t = r.table("q2_runs").unwrap();
        let c = t.column("test_loss").unwrap();
        for row in &t.rows {
            assert!(row[c].as_f64().unwrap() < 0.05, "{row:?}");
        }
    }

    #[test]
    fn identical_targets_give_zero_rows() {
        let mut cfg = ExperimentConfig {
            generator: GeneratorSpec {
                graph: GraphKind::RandomRegular { n: 6, deg: 2 },
                count: 3,
                features: FeatureRule::OneHotDegree { dim: 3 },
                labels: LabelRule::DegreeParity,
                graph_shift: 0.0,
            },
            ..ExperimentConfig::default()
        };
        cfg.pairs = 30;
        let ds = cfg.dataset().unwrap();
        let r = q1_correlation(&cfg, &ds).unwrap();
        assert!(r.passed());
        let t = r.table("q1_pairs").unwrap();
        for row in &t.rows {
            assert_eq!(row[2].as_f64().unwrap(), 0.0);
            assert!(row[3].as_f64().unwrap() <= 1e-9);
        }
    }
}

//! Command-line surface. [`run`] executes one parsed command and returns
//! the text destined for stdout.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use mlgcn_core::ablation::{self, SweepSetup};
use mlgcn_core::embeddings::{build_label_embeddings, EmbeddingMatrix, EmbeddingSource, LabelVocabulary};
use mlgcn_core::graph::{count_cooccurrence, GraphConfig, LabelGraph};
use mlgcn_core::metrics::{self, DecisionRule};
use mlgcn_core::model::{self, ModelConfig};
use mlgcn_core::train::{self, TrainConfig};

use crate::artifacts::Artifacts;
use crate::checkpoint;
use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report;
use crate::synth::{self, SynthConfig};
use crate::text;

#[derive(Debug, Parser)]
#[command(name = "mlgcn", version, about = "Graph-convolutional multi-label classifier learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the conditional, binary, re-weighted and normalized label graphs.
    BuildGraph(BuildGraphArgs),
    /// Train GCN weights and write a checkpoint with its loss history.
    Train(TrainArgs),
    /// Score a dataset with a checkpoint and print the metrics.
    Evaluate(EvaluateArgs),
    /// Train and score every point of a tau × p × depth grid.
    Sweep(SweepArgs),
    /// Print the k nearest samples to a query sample in feature space.
    Retrieve(RetrieveArgs),
    /// Write the generated classifier matrix of a checkpoint.
    ExportClassifiers(ExportArgs),
    /// Generate a seeded synthetic dataset with planted label pairs.
    Synth(SynthArgs),
}

/// Label representation source: a word-vector file or `one-hot`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Embeddings {
    OneHot,
    File(PathBuf),
}

impl FromStr for Embeddings {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s == "one-hot" { Embeddings::OneHot } else { Embeddings::File(s.into()) })
    }
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    let items = s
        .split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list entry {x:?}")))
        .collect::<std::result::Result<Vec<T>, String>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_dims(s: &str) -> std::result::Result<Vec<usize>, String> {
    parse_list(s)
}

fn parse_reals(s: &str) -> std::result::Result<Vec<f64>, String> {
    parse_list(s)
}

fn parse_dims_grid(s: &str) -> std::result::Result<Vec<Vec<usize>>, String> {
    s.split(';').map(parse_dims).collect()
}

fn parse_rule(s: &str) -> std::result::Result<DecisionRule, String> {
    s.parse().map_err(|e: mlgcn_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Binarization threshold on conditional probabilities.
    #[arg(long, default_value_t = 0.4)]
    pub tau: f64,
    /// Total weight given to neighbors after re-weighting.
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    /// Use the re-weighted matrix without degree normalization.
    #[arg(long)]
    pub skip_normalization: bool,
}

impl GraphArgs {
    fn config(&self) -> GraphConfig {
        GraphConfig { tau: self.tau, p: self.p, normalize: !self.skip_normalization }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Word-vector file, or `one-hot`.
    #[arg(long)]
    pub embeddings: Embeddings,
    /// Comma-separated GCN output widths; the last must equal the feature dimension.
    #[arg(long, value_parser = parse_dims, default_value = "1024,2048")]
    pub layer_dims: ::std::vec::Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub slope: f64,
    /// Apply LeakyReLU after the last GCN layer too.
    #[arg(long)]
    pub final_activation: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 0.01)]
    pub lr0: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Epochs between 10× decays; defaults to 40% of the epoch count.
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OptimArgs {
    fn config(&self) -> TrainConfig {
        let scaled = TrainConfig::scaled(self.epochs);
        TrainConfig {
            lr0: self.lr0,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            decay_every: self.decay_every.unwrap_or(scaled.decay_every),
            batch_size: self.batch_size,
            seed: self.seed,
            ..scaled
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// `threshold:<t>` or `topk:<k>`.
    #[arg(long, value_parser = parse_rule, default_value = "threshold:0.5")]
    pub rule: DecisionRule,
    /// Also write `metrics.txt` and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub test_annotations: PathBuf,
    #[arg(long)]
    pub test_features: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Comma-separated thresholds; defaults to `--tau` alone.
    #[arg(long, value_parser = parse_reals)]
    pub tau_grid: Option<::std::vec::Vec<f64>>,
    /// Comma-separated neighbor weights; defaults to `--p` alone.
    #[arg(long, value_parser = parse_reals)]
    pub p_grid: Option<::std::vec::Vec<f64>>,
    /// Layer stacks separated by `;`, e.g. `64,32;64,64,32`.
    #[arg(long, value_parser = parse_dims_grid)]
    pub layer_dims_grid: Option<::std::vec::Vec<Vec<usize>>>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long, value_parser = parse_rule, default_value = "threshold:0.5")]
    pub rule: DecisionRule,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Sample id to search around.
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub labels: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 2000)]
    pub train: usize,
    #[arg(long, default_value_t = 500)]
    pub test: usize,
    /// Probability a label switches on when its planted partner is drawn.
    #[arg(long, default_value_t = 0.8)]
    pub strength: f64,
    /// Independent activation probability of every label.
    #[arg(long, default_value_t = 0.15)]
    pub base_rate: f64,
    /// Standard deviation of the additive feature noise.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::BuildGraph(a) => build_graph(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Retrieve(a) => retrieve(a),
        Command::ExportClassifiers(a) => export(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn finish(mut out: Artifacts, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
    let mut names = out.names();
    names.push("manifest.txt".into());
    manifest.artifacts(&names);
    out.write_text("manifest.txt", &manifest.render())?;
    Ok(out.commit())
}

fn listing(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| format!("wrote {}\n", p.display())).collect()
}

fn record_graph(m: &mut RunManifest, g: &GraphArgs) {
    m.set("tau", g.tau);
    m.set("p", g.p);
    m.set("normalize", !g.skip_normalization);
}

fn record_model(m: &mut RunManifest, a: &ModelArgs) -> Result<()> {
    match &a.embeddings {
        Embeddings::OneHot => m.set("embeddings", "one-hot"),
        Embeddings::File(p) => m.input("embeddings", p)?,
    }
    let dims: Vec<String> = a.layer_dims.iter().map(|d| d.to_string()).collect();
    m.set("layer_dims", dims.join(","));
    m.set("slope", a.slope);
    m.set("final_activation", a.final_activation);
    Ok(())
}

fn record_optim(m: &mut RunManifest, c: &TrainConfig) {
    m.set("lr0", c.lr0);
    m.set("momentum", c.momentum);
    m.set("weight_decay", c.weight_decay);
    m.set("epochs", c.epochs);
    m.set("decay_every", c.decay_every);
    m.set("decay_factor", c.decay_factor);
    m.set("batch_size", c.batch_size);
    m.set("seed", c.seed);
}

fn label_embeddings(a: &ModelArgs, vocab: &LabelVocabulary) -> Result<EmbeddingMatrix> {
    Ok(match &a.embeddings {
        Embeddings::OneHot => build_label_embeddings(vocab, EmbeddingSource::OneHot)?,
        Embeddings::File(p) => {
            let table = text::load_word_vectors(p)?;
            build_label_embeddings(vocab, EmbeddingSource::WordVectors(&table))?
        }
    })
}

fn build_graph(a: BuildGraphArgs) -> Result<String> {
    let vocab = text::load_vocabulary(&a.vocab)?;
    let samples = text::load_annotations(&a.annotations, &vocab)?;
    let sets: Vec<&[usize]> = samples.iter().map(|s| s.labels.as_slice()).collect();
    let stats = count_cooccurrence(&sets, vocab.len())?;
    let graph = LabelGraph::build(&stats, &a.graph.config())?;

    let mut manifest = RunManifest::new("build-graph");
    manifest.input("annotations", &a.annotations)?;
    manifest.input("vocab", &a.vocab)?;
    record_graph(&mut manifest, &a.graph);
    let mut out = Artifacts::create(&a.out)?;
    out.write_tensor("conditional.mlgf", &graph.conditional.to_tensor())?;
    out.write_tensor("binary.mlgf", &graph.binary.to_tensor())?;
    out.write_tensor("reweighted.mlgf", &graph.reweighted.to_tensor())?;
    if let Some(n) = &graph.normalized {
        out.write_tensor("normalized.mlgf", &n.to_tensor())?;
    }
    manifest.set("edges", graph.binary.edge_count());
    manifest.set("zero_diagonal_rows", graph.reweighted.zero_diagonal_rows());
    Ok(listing(&finish(out, manifest)?))
}

fn train_cmd(a: TrainArgs) -> Result<String> {
    let vocab = text::load_vocabulary(&a.vocab)?;
    let data = FeatureDataset::load(&a.annotations, &a.features, vocab)?;
    let config = a.optim.config();

    let mut manifest = RunManifest::new("train");
    manifest.input("annotations", &a.annotations)?;
    manifest.input("features", &a.features)?;
    manifest.input("vocab", &a.vocab)?;
    record_graph(&mut manifest, &a.graph);
    record_model(&mut manifest, &a.model)?;
    record_optim(&mut manifest, &config);

    let stats = count_cooccurrence(&data.label_sets(), data.vocab.len())?;
    let graph = LabelGraph::build(&stats, &a.graph.config())?;
    let embedding = label_embeddings(&a.model, &data.vocab)?;
    let model_config = ModelConfig {
        layer_dims: a.model.layer_dims.clone(),
        slope: a.model.slope,
        final_activation: a.model.final_activation,
        seed: config.seed,
    };
    let initial = model::init_model(&model_config, embedding, graph.adjacency().clone(), data.dim())?;
    let (trained, history) = train::train(initial, &data.training_data()?, &config, None)?;

    let mut out = Artifacts::create(&a.out)?;
    checkpoint::save(&mut out, &trained, &data.vocab, config.seed)?;
    out.write_text("history.tsv", &report::history_tsv(&history))?;
    if let (Some(first), Some(last)) = (history.first_loss(), history.final_loss()) {
        manifest.set("first_loss", first);
        manifest.set("final_loss", last);
    }
    Ok(listing(&finish(out, manifest)?))
}

fn evaluate(a: EvaluateArgs) -> Result<String> {
    let ck = checkpoint::load(&a.checkpoint)?;
    let data = FeatureDataset::load(&a.annotations, &a.features, ck.vocab.clone())?;
    let w = model::generate_classifiers(&ck.model)?;
    let scores = model::predict_batch(&w, &data.features)?;
    let report = metrics::evaluate(&scores, &data.targets()?, a.rule)?;
    let text = report::metrics_text(&report, &ck.vocab);
    if let Some(dir) = &a.out {
        let mut manifest = RunManifest::new("evaluate");
        for name in ["model.txt", "vocab.txt"] {
            manifest.input(&format!("checkpoint.{name}"), &a.checkpoint.join(name))?;
        }
        manifest.input("annotations", &a.annotations)?;
        manifest.input("features", &a.features)?;
        manifest.set("rule", a.rule);
        let mut out = Artifacts::create(dir)?;
        out.write_text("metrics.txt", &text)?;
        finish(out, manifest)?;
    }
    Ok(text)
}

fn sweep(a: SweepArgs) -> Result<String> {
    let vocab = text::load_vocabulary(&a.vocab)?;
    let train_set = FeatureDataset::load(&a.annotations, &a.features, vocab.clone())?;
    let test_set = FeatureDataset::load(&a.test_annotations, &a.test_features, vocab)?;
    let config = a.optim.config();
    let taus = a.tau_grid.clone().unwrap_or_else(|| vec![a.graph.tau]);
    let ps = a.p_grid.clone().unwrap_or_else(|| vec![a.graph.p]);
    let dims = a.layer_dims_grid.clone().unwrap_or_else(|| vec![a.model.layer_dims.clone()]);

    let mut manifest = RunManifest::new("sweep");
    manifest.input("annotations", &a.annotations)?;
    manifest.input("features", &a.features)?;
    manifest.input("test_annotations", &a.test_annotations)?;
    manifest.input("test_features", &a.test_features)?;
    manifest.input("vocab", &a.vocab)?;
    record_model(&mut manifest, &a.model)?;
    record_optim(&mut manifest, &config);
    let show = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    manifest.set("tau_grid", show(&taus));
    manifest.set("p_grid", show(&ps));
    let dims_text: Vec<String> = dims
        .iter()
        .map(|d| d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    manifest.set("layer_dims_grid", dims_text.join(";"));
    manifest.set("normalize", !a.graph.skip_normalization);
    manifest.set("rule", a.rule);

    let stats = count_cooccurrence(&train_set.label_sets(), train_set.vocab.len())?;
    let embedding = label_embeddings(&a.model, &train_set.vocab)?;
    let train_data = train_set.training_data()?;
    let test_data = test_set.training_data()?;
    let setup = SweepSetup {
        stats: &stats,
        embedding: &embedding,
        train: &train_data,
        test: &test_data,
        model: ModelConfig {
            layer_dims: a.model.layer_dims.clone(),
            slope: a.model.slope,
            final_activation: a.model.final_activation,
            seed: config.seed,
        },
        training: config,
        normalize: !a.graph.skip_normalization,
        rule: a.rule,
    };
    let rows = ablation::run_sweep(&setup, &ablation::grid(&taus, &ps, &dims));
    let table = report::sweep_tsv(&rows);
    let mut out = Artifacts::create(&a.out)?;
    out.write_text("sweep.tsv", &table)?;
    finish(out, manifest)?;
    Ok(table)
}

fn retrieve(a: RetrieveArgs) -> Result<String> {
    let vocab = text::load_vocabulary(&a.vocab)?;
    let data = FeatureDataset::load(&a.annotations, &a.features, vocab)?;
    let q = data
        .samples
        .iter()
        .position(|s| s.id == a.query)
        .ok_or_else(|| Error::Invalid(format!("query id {:?} not found", a.query)))?;
    let gallery: Vec<&[f64]> = (0..data.len()).map(|i| data.features.row(i)).collect();
    let hits = metrics::knn_retrieve(data.features.row(q), &gallery, a.k)?;
    Ok(hits
        .iter()
        .enumerate()
        .map(|(r, h)| format!("{}\t{}\t{}\n", r + 1, data.samples[h.index].id, h.distance))
        .collect())
}

fn export(a: ExportArgs) -> Result<String> {
    let ck = checkpoint::load(&a.checkpoint)?;
    let w = model::generate_classifiers(&ck.model)?;
    let mut manifest = RunManifest::new("export-classifiers");
    for name in ["model.txt", "vocab.txt"] {
        manifest.input(&format!("checkpoint.{name}"), &a.checkpoint.join(name))?;
    }
    for l in 0..ck.model.layers().len() {
        let name = format!("layer{l}.mlgf");
        manifest.input(&format!("checkpoint.{name}"), &a.checkpoint.join(&name))?;
    }
    let mut out = Artifacts::create(&a.out)?;
    out.write_tensor("classifiers.mlgf", &w)?;
    out.write_csv("classifiers.csv", &w)?;
    out.write_text("vocab.txt", &text::vocabulary_text(&ck.vocab))?;
    Ok(listing(&finish(out, manifest)?))
}

fn synth_cmd(a: SynthArgs) -> Result<String> {
    let config = SynthConfig {
        labels: a.labels,
        dim: a.dim,
        samples: a.train + a.test,
        strength: a.strength,
        base_rate: a.base_rate,
        noise: a.noise,
        seed: a.seed,
    };
    if a.train == 0 || a.test == 0 {
        return Err(Error::Invalid("train and test splits must be non-empty".into()));
    }
    let data = synth::generate(&config)?;
    let (train_set, test_set) = data.split_at(a.train)?;

    let mut manifest = RunManifest::new("synth");
    for (k, v) in [("labels", a.labels), ("dim", a.dim), ("train", a.train), ("test", a.test)] {
        manifest.set(k, v);
    }
    manifest.set("strength", a.strength);
    manifest.set("base_rate", a.base_rate);
    manifest.set("noise", a.noise);
    manifest.set("seed", a.seed);
    manifest.set("planted_conditional", synth::planted_conditional(a.base_rate, a.strength));

    let mut out = Artifacts::create(&a.out)?;
    out.write_text("vocab.txt", &text::vocabulary_text(&data.vocab))?;
    for (name, part) in [("train", &train_set), ("test", &test_set)] {
        out.write_text(&format!("{name}.tsv"), &text::annotations_text(&part.samples, &part.vocab))?;
        out.write_tensor(&format!("{name}.mlgf"), &part.features)?;
    }
    Ok(listing(&finish(out, manifest)?))
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, S>(args: I) -> Result<String>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Invalid(e.to_string()))?;
    run(cli)
}


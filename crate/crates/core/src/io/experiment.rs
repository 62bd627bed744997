use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::archive::{load_graph, save_graph, write_json};
use super::synthetic::{generate_synthetic, toy_graph, Preset, SyntheticSpec, CITES, LAW_CITES};
use crate::autodiff::GradCheckConfig;
use crate::enrich::{default_attributes, enrich, plan_enrichment, EnrichmentPlan};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_view, temporal_folds, EvalConfig, EvalLabels, Induction, MetricsReport, SplitPlan,
    TestView, TransferMatrix,
};
use crate::graph::{add_all_reverse_relations, add_reverse_relations, HeteroGraph};
use crate::model::{
    ablation_ladder, train_sgd, Checkpoint, ModelConfig, ModelPreset, RelationMapping, SgdConfig,
};
use crate::train::{
    check_loss_gradient, derive_seed, train_with_progress, LossHistory, Model, TrainConfig,
    TrainedModel,
};

/// File written next to partial outputs when a run fails.
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Archive directory as written by [`save_graph`].
    Archive {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Synthetic { spec: SyntheticSpec },
}

impl DatasetSource {
    pub fn preset(p: Preset, seed: u64) -> Self {
        DatasetSource::Synthetic { spec: p.spec(seed) }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSource::Archive { path, name } => name.clone().unwrap_or_else(|| {
                path.file_name()
                    .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
            }),
            DatasetSource::Synthetic { spec } => spec.name.clone(),
        }
    }

    pub fn load(&self) -> Result<HeteroGraph> {
        match self {
            DatasetSource::Archive { path, .. } => load_graph(path),
            DatasetSource::Synthetic { spec } => generate_synthetic(spec),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            DatasetSource::Archive { path, .. } if !path.is_dir() => Err(Error::InvalidArgument(
                format!("dataset archive {} does not exist", path.display()),
            )),
            DatasetSource::Archive { .. } => Ok(()),
            DatasetSource::Synthetic { spec } => spec.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichmentConfig {
    pub enabled: bool,
    /// `(node type, attribute)` pairs; `None` takes every standard attribute
    /// present on the training graph.
    pub attributes: Option<Vec<(String, String)>>,
    pub date_bucket_years: u32,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            attributes: None,
            date_bucket_years: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    /// Datasets of the matrix; empty means the two synthetic presets.
    pub datasets: Vec<DatasetSource>,
    pub mapping: RelationMapping,
}

impl Default for TransferConfig {
    fn default() -> Self {
        let mut rename = BTreeMap::new();
        rename.insert(LAW_CITES.to_owned(), CITES.to_owned());
        rename.insert(format!("rev-{LAW_CITES}"), format!("rev-{CITES}"));
        Self {
            datasets: Vec::new(),
            mapping: RelationMapping {
                rename,
                fallback: Some(CITES.to_owned()),
            },
        }
    }
}

/// Everything a run needs. `seed` drives training (per fold), evaluation
/// subsamples and negatives; the `seed` fields of `train` and `eval` are
/// overwritten from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub models: Vec<ModelPreset>,
    /// Replaces the layer sizes of every GNN model.
    pub layer_sizes: Option<Vec<usize>>,
    pub train: TrainConfig,
    pub sgd: SgdConfig,
    pub eval: EvalConfig,
    pub enrichment: EnrichmentConfig,
    /// Forward relations to reverse; `None` reverses every non-meta one.
    pub reverse_relations: Option<Vec<String>>,
    pub transfer: TransferConfig,
    /// Output directory of an earlier `train` run whose checkpoints
    /// `evaluate` should score instead of retraining.
    pub checkpoints: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::preset(Preset::LioLike, 0),
            models: vec![ModelPreset::RHge],
            layer_sizes: None,
            train: TrainConfig::default(),
            sgd: SgdConfig::default(),
            eval: EvalConfig::default(),
            enrichment: EnrichmentConfig::default(),
            reverse_relations: None,
            transfer: TransferConfig::default(),
            checkpoints: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidArgument("no models configured".into()));
        }
        self.train.validate()?;
        for s in self.model_specs() {
            if let Some(c) = &s.config {
                c.validate()?;
            }
        }
        self.dataset.check()?;
        for d in &self.transfer.datasets {
            d.check()?;
        }
        if let Some(p) = &self.checkpoints {
            if !p.is_dir() {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint directory {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }

    fn gnn(&self, mut c: ModelConfig) -> ModelConfig {
        if let Some(sizes) = &self.layer_sizes {
            c.layer_sizes = sizes.clone();
        }
        c
    }

    pub fn model_specs(&self) -> Vec<ModelSpec> {
        self.models
            .iter()
            .map(|&p| ModelSpec {
                label: p.name().to_owned(),
                slug: slug(p.name()),
                config: p.config().map(|c| self.gnn(c)),
            })
            .collect()
    }

    /// The ablation ladder on top of the default R-HGE.
    pub fn ablation_specs(&self) -> Vec<ModelSpec> {
        ablation_ladder(&self.gnn(ModelConfig::r_hge()))
            .into_iter()
            .enumerate()
            .map(|(i, s)| ModelSpec {
                label: s.label.to_owned(),
                slug: format!("{i}-{}", slug(s.label)),
                config: Some(s.config),
            })
            .collect()
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: self.seed,
            ..self.eval.clone()
        }
    }

    pub fn train_config(&self, fold: usize) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, fold as u64),
            ..self.train.clone()
        }
    }

    fn transfer_datasets(&self) -> Vec<DatasetSource> {
        if self.transfer.datasets.is_empty() {
            Preset::ALL.iter().map(|&p| DatasetSource::preset(p, self.seed)).collect()
        } else {
            self.transfer.datasets.clone()
        }
    }
}

fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

/// A labelled model to train: a GNN configuration or, when `config` is
/// `None`, the feature-only SGD baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub label: String,
    /// Subdirectory name for this model's outputs.
    pub slug: String,
    pub config: Option<ModelConfig>,
}

/// Training graph and test view of one fold, enriched and reversed alike.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub fold: usize,
    pub train: HeteroGraph,
    pub view: TestView,
    pub enrichment: Option<EnrichmentPlan>,
}

fn add_reverses(g: &HeteroGraph, names: &Option<Vec<String>>) -> Result<HeteroGraph> {
    match names {
        None => add_all_reverse_relations(g),
        Some(names) => {
            let mut ids = Vec::new();
            for n in names {
                let r = g.require_relation(n)?;
                if g.schema().reverse_of(r).is_none() {
                    ids.push(r);
                }
            }
            add_reverse_relations(g, &ids)
        }
    }
}

/// Splits off fold `fold`, builds the enrichment vocabulary from the
/// training graph only and applies it (and reverse relations) to both sides.
pub fn prepare_fold(
    g: &HeteroGraph,
    plan: &SplitPlan,
    fold: usize,
    cfg: &RunConfig,
    mode: Induction,
    enrichment: bool,
) -> Result<PreparedFold> {
    let train_raw = plan.train_graph(g, fold)?;
    let mut view = plan.test_view(g, fold, mode)?;
    let (train, eplan) = if enrichment {
        let attrs = cfg
            .enrichment
            .attributes
            .clone()
            .unwrap_or_else(|| default_attributes(&train_raw));
        let ep = plan_enrichment(&train_raw, &attrs, cfg.enrichment.date_bucket_years)?;
        view.graph = enrich(&view.graph, &ep)?;
        (enrich(&train_raw, &ep)?, Some(ep))
    } else {
        (train_raw, None)
    };
    view.graph = add_reverses(&view.graph, &cfg.reverse_relations)?;
    Ok(PreparedFold {
        fold,
        train: add_reverses(&train, &cfg.reverse_relations)?,
        view,
        enrichment: eplan,
    })
}

/// Trains one model on a fold's training graph.
pub fn train_fold(g: &HeteroGraph, spec: &ModelSpec, cfg: &RunConfig, fold: usize) -> Result<TrainedModel> {
    let tc = cfg.train_config(fold);
    match &spec.config {
        Some(mc) => {
            let every = (tc.epochs / 10).max(1);
            train_with_progress(g, mc, &tc, |e| {
                if (e.epoch + 1) % every == 0 {
                    log::debug!("{} fold {fold} epoch {} loss {:.5}", spec.label, e.epoch + 1, e.loss);
                }
            })
        }
        None => Ok(TrainedModel {
            model: Model::Sgd(train_sgd(g, &cfg.sgd, tc.seed)?),
            history: LossHistory::default(),
        }),
    }
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_text(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).map_err(|e| Error::io(p, e))
}

/// Saves the loss curve (GNNs only) and the checkpoint of one fold.
fn save_fold_outputs(dir: &Path, fold: usize, m: &TrainedModel) -> Result<()> {
    create_dir(dir)?;
    if !m.history.epochs.is_empty() {
        m.history.save_csv(&dir.join(format!("loss_{fold}.csv")))?;
    }
    m.checkpoint().save(&dir.join(format!("checkpoint_{fold}.json")))
}

fn fold_model(
    prepared: &PreparedFold,
    spec: &ModelSpec,
    cfg: &RunConfig,
    out: Option<&Path>,
    cache: &mut BTreeMap<String, TrainedModel>,
) -> Result<TrainedModel> {
    let fold = prepared.fold;
    if let Some(dir) = &cfg.checkpoints {
        let path = dir.join(&spec.slug).join(format!("checkpoint_{fold}.json"));
        let model = Model::from_checkpoint(&Checkpoint::load(&path)?)?;
        return Ok(TrainedModel {
            model,
            history: LossHistory::default(),
        });
    }
    // identical configurations (e.g. the first and last ablation rows)
    // train once
    let key = format!("{fold}/{}", serde_json::to_string(&spec.config)?);
    let trained = match cache.get(&key) {
        Some(m) => m.clone(),
        None => {
            log::info!("training {} on fold {fold}", spec.label);
            let m = train_fold(&prepared.train, spec, cfg, fold)?;
            cache.insert(key, m.clone());
            m
        }
    };
    if let Some(out) = out {
        save_fold_outputs(&out.join(&spec.slug), fold, &trained)?;
    }
    Ok(trained)
}

/// Temporal protocol: for every fold, train each model on the fold's
/// training graph and score the hidden edges of its semi-inductive view.
fn run_protocol(cfg: &RunConfig, specs: &[ModelSpec], out: Option<&Path>) -> Result<MetricsReport> {
    cfg.validate()?;
    let g = cfg.dataset.load()?;
    let dataset = cfg.dataset.name();
    let ec = cfg.eval_config();
    let plan = temporal_folds(&g, &ec.dated_type, ec.n_folds)?;
    let mut report = MetricsReport::new();
    let mut cache = BTreeMap::new();
    for fold in 0..plan.n_folds() {
        let prepared = prepare_fold(&g, &plan, fold, cfg, Induction::Semi, cfg.enrichment.enabled)?;
        for spec in specs {
            let m = fold_model(&prepared, spec, cfg, out, &mut cache)?;
            let scorer = m.model.scorer(&prepared.view.graph, &RelationMapping::identity())?;
            let labels = EvalLabels {
                model: &spec.label,
                dataset: &dataset,
            };
            report.extend(evaluate_view(&scorer, &prepared.view, fold, &ec, labels)?);
        }
    }
    Ok(report)
}

/// Full temporal evaluation of the configured models.
pub fn run_evaluation(cfg: &RunConfig, out: Option<&Path>) -> Result<MetricsReport> {
    run_protocol(cfg, &cfg.model_specs(), out)
}

/// The seven-row ablation ladder under the temporal protocol.
pub fn run_ablation(cfg: &RunConfig, out: Option<&Path>) -> Result<MetricsReport> {
    run_protocol(cfg, &cfg.ablation_specs(), out)
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub report: MetricsReport,
    /// One matrix per model label.
    pub matrices: Vec<(String, TransferMatrix)>,
}

fn semi_label(dataset: &str) -> String {
    format!("{dataset} (semi)")
}

/// Train on each dataset's folds with enrichment off, then score the
/// fully-inductive views of every dataset with the frozen model. Each
/// training dataset's own semi-inductive score is kept as the reference of
/// the deviation grid.
pub fn run_transfer(cfg: &RunConfig, out: Option<&Path>) -> Result<TransferOutcome> {
    cfg.validate()?;
    let sources = cfg.transfer_datasets();
    let names: Vec<String> = sources.iter().map(DatasetSource::name).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Transfer(format!("dataset name `{n}` appears twice")));
        }
    }
    let ec = cfg.eval_config();
    let mut graphs = Vec::new();
    for s in &sources {
        let g = s.load()?;
        let plan = temporal_folds(&g, &ec.dated_type, ec.n_folds)?;
        graphs.push((g, plan));
    }
    let n_folds = graphs.iter().map(|(_, p)| p.n_folds()).min().unwrap_or(0);
    let specs = cfg.model_specs();
    let mut report = MetricsReport::new();
    for fold in 0..n_folds {
        let mut semi = Vec::new();
        let mut full = Vec::new();
        for (g, plan) in &graphs {
            semi.push(prepare_fold(g, plan, fold, cfg, Induction::Semi, false)?);
            full.push(prepare_fold(g, plan, fold, cfg, Induction::Full, false)?.view);
        }
        for (i, source) in semi.iter().enumerate() {
            for spec in &specs {
                let label = format!("{}@{}", spec.label, names[i]);
                log::info!("training {label} on fold {fold}");
                let m = train_fold(&source.train, spec, cfg, fold)?;
                if let Some(out) = out {
                    save_fold_outputs(&out.join(format!("{}@{}", spec.slug, names[i])), fold, &m)?;
                }
                let own = m.model.scorer(&source.view.graph, &RelationMapping::identity())?;
                let own_name = semi_label(&names[i]);
                report.extend(evaluate_view(
                    &own,
                    &source.view,
                    fold,
                    &ec,
                    EvalLabels {
                        model: &label,
                        dataset: &own_name,
                    },
                )?);
                for (j, view) in full.iter().enumerate() {
                    if fold == 0 {
                        log_mapping(&m.model, &view.graph, &cfg.transfer.mapping, &label, &names[j]);
                    }
                    let scorer = m.model.scorer(&view.graph, &cfg.transfer.mapping)?;
                    report.extend(evaluate_view(
                        &scorer,
                        view,
                        fold,
                        &ec,
                        EvalLabels {
                            model: &label,
                            dataset: &names[j],
                        },
                    )?);
                }
            }
        }
    }
    let mut matrices = Vec::new();
    for spec in &specs {
        let prefix = format!("{}@", spec.label);
        let mut t = TransferMatrix::from_report(&report, &names, &prefix)?;
        let mut ap = Vec::new();
        let mut auc = Vec::new();
        for n in &names {
            let s = report.summary(&format!("{prefix}{n}"), &semi_label(n))?;
            ap.push(s.ap.0);
            auc.push(s.auc_roc.0);
        }
        t.reference_ap = Some(ap);
        t.reference_auc_roc = Some(auc);
        matrices.push((spec.label.clone(), t));
    }
    Ok(TransferOutcome { report, matrices })
}

fn log_mapping(model: &Model, g: &HeteroGraph, mapping: &RelationMapping, label: &str, target: &str) {
    let known: Vec<String> = match model {
        Model::Gnn { params, .. } => params
            .names()
            .filter_map(|n| n.strip_prefix("layer0/rel/").map(str::to_owned))
            .collect(),
        Model::Sgd(m) => m.relations.keys().cloned().collect(),
    };
    for r in g.schema().relation_ids() {
        let name = &g.relation(r).name;
        match mapping.resolve(name, |n| known.iter().any(|k| k == n)) {
            Some(to) if &to != name => log::info!("{label} on {target}: `{name}` uses the weights of `{to}`"),
            Some(_) => {}
            None => log::info!("{label} on {target}: `{name}` has no weights"),
        }
    }
}

/// CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Generate,
    Split,
    Train,
    Evaluate,
    Ablate,
    Transfer,
    Gradcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Split => "split",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Ablate => "ablate",
            Command::Transfer => "transfer",
            Command::Gradcheck => "gradcheck",
        }
    }
}

/// Provenance of a run; enough to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
struct FoldSplit {
    fold: usize,
    start: i32,
    end: i32,
    train_nodes: usize,
    train_edges: usize,
    test_edges: BTreeMap<String, usize>,
}

fn write_split(cfg: &RunConfig, out: &Path) -> Result<String> {
    let g = cfg.dataset.load()?;
    let plan = temporal_folds(&g, &cfg.eval.dated_type, cfg.eval.n_folds)?;
    let mut folds = Vec::new();
    let mut md = format!("# Split of {}\n\n| fold | period | train nodes | train edges | test edges |\n|---|---|---|---|---|\n", cfg.dataset.name());
    for f in 0..plan.n_folds() {
        let train = plan.train_graph(&g, f)?;
        let view = plan.test_view(&g, f, Induction::Semi)?;
        let (start, end) = plan.period(f);
        let fs = FoldSplit {
            fold: f,
            start,
            end,
            train_nodes: train.total_nodes(),
            train_edges: train.total_edges(),
            test_edges: view.relations.iter().map(|r| (r.name.clone(), r.positives.len())).collect(),
        };
        let _ = writeln!(
            md,
            "| {f} | {} to {} | {} | {} | {} |",
            super::format_date(start),
            super::format_date(end - 1),
            fs.train_nodes,
            fs.train_edges,
            view.num_test_edges()
        );
        folds.push(fs);
    }
    write_json(
        &out.join("split.json"),
        &serde_json::json!({ "plan": plan, "folds": folds }),
    )?;
    Ok(md)
}

fn write_report(report: &MetricsReport, out: &Path, title: &str) -> Result<String> {
    report.save_csv(&out.join("metrics.csv"))?;
    Ok(format!("# {title}\n\nMean ± σ over fold × subsample cells, macro-averaged over target relations, in %.\n\n{}", report.markdown()?))
}

fn run_command(command: Command, cfg: &RunConfig, out: &Path) -> Result<()> {
    let summary = match command {
        Command::Generate => {
            cfg.dataset.check()?;
            let g = cfg.dataset.load()?;
            save_graph(&g, out)?;
            let mut md = format!("# Dataset {}\n\n| node type | nodes |\n|---|---|\n", cfg.dataset.name());
            for t in g.schema().node_type_ids() {
                let _ = writeln!(md, "| {} | {} |", g.schema().node_type(t).name, g.node_count(t));
            }
            md.push_str("\n| relation | edges |\n|---|---|\n");
            for r in g.schema().relation_ids() {
                let _ = writeln!(md, "| {} | {} |", g.relation(r).name, g.num_edges(r));
            }
            md
        }
        Command::Split => {
            cfg.validate()?;
            write_split(cfg, out)?
        }
        Command::Train => {
            cfg.validate()?;
            let g = cfg.dataset.load()?;
            let plan = temporal_folds(&g, &cfg.eval.dated_type, cfg.eval.n_folds)?;
            let mut md = String::from("# Training\n\n| model | fold | first loss | last loss |\n|---|---|---|---|\n");
            for fold in 0..plan.n_folds() {
                let prepared = prepare_fold(&g, &plan, fold, cfg, Induction::Semi, cfg.enrichment.enabled)?;
                for spec in cfg.model_specs() {
                    log::info!("training {} on fold {fold}", spec.label);
                    let m = train_fold(&prepared.train, &spec, cfg, fold)?;
                    save_fold_outputs(&out.join(&spec.slug), fold, &m)?;
                    let f = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{v:.5}"));
                    let _ = writeln!(md, "| {} | {fold} | {} | {} |", spec.label, f(m.history.first()), f(m.history.last()));
                }
            }
            md
        }
        Command::Evaluate => {
            let report = run_evaluation(cfg, Some(out))?;
            write_report(&report, out, &format!("Temporal evaluation on {}", cfg.dataset.name()))?
        }
        Command::Ablate => {
            let report = run_ablation(cfg, Some(out))?;
            write_report(&report, out, &format!("Ablation on {}", cfg.dataset.name()))?
        }
        Command::Transfer => {
            let t = run_transfer(cfg, Some(out))?;
            let mut md = write_report(&t.report, out, "Transfer")?;
            let mut json = BTreeMap::new();
            for (label, m) in &t.matrices {
                let _ = write!(md, "\n## {label}\n\nRows: training dataset. Columns: evaluation dataset. In parentheses: deviation of a diagonal cell from the semi-inductive score and of an off-diagonal cell from the diagonal cell of its column.\n\n{}", m.markdown());
                json.insert(label.clone(), m.clone());
            }
            write_json(&out.join("transfer.json"), &json)?;
            md
        }
        Command::Gradcheck => {
            let g = toy_graph();
            let mc = ModelConfig::r_hge().with_width(8, 2);
            let report = check_loss_gradient(&g, &mc, cfg.seed, &GradCheckConfig::default())?;
            let text = report.to_string();
            write_text(&out.join("gradcheck.txt"), &text)?;
            if !report.passed {
                return Err(Error::NonFinite(format!(
                    "gradient check failed, max relative error {:.3e}",
                    report.max_rel_error()
                )));
            }
            format!("# Gradient check\n\n```\n{text}\n```\n")
        }
    };
    write_text(&out.join("summary.md"), &summary)
}

/// Runs `command` into `out`, always writing `manifest.json`. On failure
/// the outputs produced so far stay in place next to a [`FAILED_MARKER`]
/// file holding the error.
pub fn execute(command: Command, cfg: &RunConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    let _ = std::fs::remove_file(out.join(FAILED_MARKER));
    let result = run_command(command, cfg, out);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        command,
        seed: cfg.seed,
        config_hash: cfg.hash()?,
        config: cfg.clone(),
        status: if result.is_ok() { "ok" } else { "failed" }.to_owned(),
        error: result.as_ref().err().map(ToString::to_string),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    if let Err(e) = &result {
        write_text(&out.join(FAILED_MARKER), &format!("{e}\n"))?;
    }
    result
}

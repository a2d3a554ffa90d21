//! Config-driven experiments: source localization, stability sweeps and spectral dumps.
//!
//! Every random draw derives from the config seed through [`derive_seed`], so a config
//! file and seed reproduce every artifact byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{cyclic_graph, line_graph, path_graph, sbm_generate, Graph, HeatDiffusion};
use crate::io::write_graph_json;
use crate::nn::{
    evaluate, standard_config, train, Architecture, GtcnnModel, Loss, Metric, Readout, Sample,
    Target, TrainConfig,
};
use crate::perturbation::{
    empirical_gtcnn_distance, misalignment_delta_with, model_lipschitz, normalized_model,
    relative_perturb, sample_error_at_snr, sample_error_with_norm, snr_db, stability_bound,
    unit_probes, write_reports_csv, DeltaForm, ErrorMatrix, FrequencySupport, PerturbationReport,
};
use crate::spectral::{frequency_response, spatial_frequency_range, temporal_frequency_set, uniform_grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SourceLocalization,
    StabilitySweep,
    SpectralDump,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SourceLocalization => "source_localization",
            Self::StabilitySweep => "stability_sweep",
            Self::SpectralDump => "spectral_dump",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphParams {
    pub nodes: usize,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionParams {
    pub t_min: usize,
    pub t_max: usize,
    /// Window length `T`.
    pub window: usize,
    /// Multiplies the Laplacian: snapshots are `e^{-rate·τ·L} e_source`.
    #[serde(default = "one")]
    pub rate: f64,
    /// Multiplies every emitted window (the source injects `signal_scale` units of heat).
    #[serde(default = "one")]
    pub signal_scale: f64,
    /// Standardize each window to zero mean and unit variance over its `N·T` entries.
    #[serde(default)]
    pub standardize: bool,
    /// Debug override of the window start (ignores `t_min`).
    #[serde(default)]
    pub start_override: Option<usize>,
}

fn one() -> f64 {
    1.0
}

/// Temporal graph joining consecutive snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalKind {
    /// Directed line graph (causal, nilpotent).
    Line,
    /// Undirected path (symmetric, real spectrum).
    #[default]
    Path,
    /// Directed cycle.
    Cycle,
}

impl TemporalKind {
    pub fn build(self, t: usize) -> Result<Graph> {
        match self {
            Self::Line => line_graph(t),
            Self::Path => path_graph(t),
            Self::Cycle => cyclic_graph(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    NodeLinear,
    NodeMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Hidden and output feature counts `F_1 … F_L`.
    pub features: Vec<usize>,
    pub order: usize,
    #[serde(default = "default_readout")]
    pub readout: ReadoutKind,
    #[serde(default)]
    pub l1_weight: f64,
}

fn default_readout() -> ReadoutKind {
    ReadoutKind::NodeLinear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityParams {
    /// SNR levels in dB; one accuracy and report row per (level, trial).
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Operator-norm levels `ε`; report rows only.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    pub trials: usize,
    /// Unit probe signals per distance estimate.
    pub probes: usize,
    #[serde(default = "default_grid")]
    pub grid_intervals: usize,
    /// Trained checkpoint to perturb.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Index into `seeds` whose graph and dataset the checkpoint was trained on.
    #[serde(default)]
    pub seed_index: usize,
    #[serde(default)]
    pub delta_form: DeltaForm,
}

fn default_grid() -> usize {
    crate::perturbation::DEFAULT_GRID_INTERVALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralParams {
    pub checkpoint: PathBuf,
    #[serde(default)]
    pub seed_index: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub graph: GraphParams,
    pub diffusion: DiffusionParams,
    #[serde(default)]
    pub temporal: TemporalKind,
    pub samples: usize,
    pub model: ModelParams,
    pub train: TrainConfig,
    /// Model families to compare, by name (`gcnn`, `joint`, `kronecker`, `cartesian`,
    /// `strong`, `parametric`).
    pub models: Vec<String>,
    /// Repetition indices; each gets its own graph, dataset, initialization and batches.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub stability: Option<StabilityParams>,
    #[serde(default)]
    pub spectral: Option<SpectralParams>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.graph;
        if g.nodes == 0 || g.communities == 0 || g.communities > g.nodes {
            return config_err("need 1 <= communities <= nodes");
        }
        for p in [g.p_in, g.p_out] {
            if !(0.0..=1.0).contains(&p) {
                return config_err("edge probabilities must be in [0, 1]");
            }
        }
        let d = &self.diffusion;
        if d.t_min > d.t_max {
            return config_err(format!("t_min {} exceeds t_max {}", d.t_min, d.t_max));
        }
        if d.window == 0 {
            return config_err("window must be positive");
        }
        if d.start_override.is_none() && d.window > d.t_max - d.t_min {
            return config_err(format!(
                "window {} does not fit between t_min {} and t_max {}",
                d.window, d.t_min, d.t_max
            ));
        }
        if d.start_override.is_none() && d.window > d.t_min {
            return config_err(format!("window {} is longer than t_min {}", d.window, d.t_min));
        }
        if !d.rate.is_finite() || d.rate <= 0.0 {
            return config_err("diffusion rate must be positive");
        }
        if !d.signal_scale.is_finite() || d.signal_scale <= 0.0 {
            return config_err("signal_scale must be positive");
        }
        if self.samples == 0 {
            return config_err("samples must be positive");
        }
        if self.model.features.is_empty() || self.model.features.contains(&0) {
            return config_err("model needs at least one layer of positive width");
        }
        if self.model.order > crate::filters::MAX_PARAMETRIC_ORDER {
            return config_err("filter order exceeds the expansion cap");
        }
        if self.model.l1_weight.is_nan() || self.model.l1_weight < 0.0 {
            return config_err("l1_weight must be non-negative");
        }
        self.train
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.models.is_empty() {
            return config_err("models list is empty");
        }
        for m in &self.models {
            Architecture::from_name(m)?;
        }
        if self.seeds.is_empty() {
            return config_err("seeds list is empty");
        }
        match self.task {
            Task::StabilitySweep => {
                let Some(s) = &self.stability else {
                    return config_err("stability_sweep needs a \"stability\" section");
                };
                if s.trials == 0 || s.probes == 0 {
                    return config_err("stability trials and probes must be positive");
                }
                if s.snr_db.iter().chain(&s.epsilons).any(|v| !v.is_finite()) {
                    return config_err("SNR and epsilon levels must be finite");
                }
                if s.epsilons.iter().any(|&e| e < 0.0) {
                    return config_err("epsilons must be non-negative");
                }
                if s.seed_index >= self.seeds.len() {
                    return config_err("stability seed_index out of range");
                }
                if s.grid_intervals < 2 {
                    return config_err("grid_intervals must be at least 2");
                }
            }
            Task::SpectralDump => {
                let Some(s) = &self.spectral else {
                    return config_err("spectral_dump needs a \"spectral\" section");
                };
                if s.intervals < 2 {
                    return config_err("spectral intervals must be at least 2");
                }
                if s.seed_index >= self.seeds.len() {
                    return config_err("spectral seed_index out of range");
                }
            }
            Task::SourceLocalization => {}
        }
        Ok(())
    }

    pub fn temporal_graph(&self) -> Result<Graph> {
        self.temporal.build(self.diffusion.window)
    }

    pub fn architectures(&self) -> Result<Vec<Architecture>> {
        self.models.iter().map(|m| Architecture::from_name(m)).collect()
    }

    fn readout(&self) -> Readout {
        match self.model.readout {
            ReadoutKind::NodeLinear => Readout::NodeLinear {
                classes: self.graph.communities,
                nodes: self.graph.nodes,
            },
            ReadoutKind::NodeMean => Readout::NodeMean {
                classes: self.graph.communities,
            },
        }
    }

    /// Untrained model of one family for this config.
    pub fn build_model(&self, arch: Architecture, seed: u64) -> Result<GtcnnModel> {
        let cfg = standard_config(
            arch,
            &self.model.features,
            self.model.order,
            self.diffusion.window,
            self.readout(),
            self.model.l1_weight,
        );
        GtcnnModel::init(cfg, seed)
    }

    /// Desk-scale source-localization setup.
    pub fn desk() -> Self {
        Self {
            task: Task::SourceLocalization,
            seed: 7,
            graph: GraphParams {
                nodes: 40,
                communities: 4,
                p_in: 0.8,
                p_out: 0.2,
            },
            diffusion: DiffusionParams {
                t_min: 15,
                t_max: 30,
                window: 3,
                rate: DESK_DIFFUSION_RATE,
                signal_scale: 1.0,
                standardize: true,
                start_override: None,
            },
            temporal: TemporalKind::Path,
            samples: 600,
            model: ModelParams {
                features: vec![4, 4],
                order: 2,
                readout: ReadoutKind::NodeLinear,
                l1_weight: 0.05,
            },
            train: TrainConfig {
                epochs: 200,
                batch_size: 50,
                learning_rate: 1e-3,
                ..TrainConfig::default()
            },
            models: ["gcnn", "kronecker", "cartesian", "strong", "parametric"]
                .map(String::from)
                .to_vec(),
            seeds: vec![0, 1, 2, 3, 4],
            stability: None,
            spectral: None,
        }
    }

    /// The full-scale setup (slow on a desk machine).
    pub fn full() -> Self {
        let mut cfg = Self::desk();
        cfg.graph.nodes = 100;
        cfg.graph.communities = 5;
        cfg.diffusion.rate = 1.0;
        cfg.diffusion.signal_scale = 1.0;
        cfg.diffusion.standardize = false;
        cfg.samples = 2000;
        cfg.model.features = vec![2, 2];
        cfg.train = TrainConfig {
            epochs: 1000,
            batch_size: 100,
            ..TrainConfig::default()
        };
        cfg
    }

    /// A seconds-long configuration for smoke and determinism checks.
    pub fn smoke() -> Self {
        let mut cfg = Self::desk();
        cfg.graph.nodes = 12;
        cfg.graph.communities = 3;
        cfg.samples = 60;
        cfg.model.features = vec![2];
        cfg.train.epochs = 2;
        cfg.train.batch_size = 16;
        cfg.seeds = vec![0, 1];
        cfg
    }
}

/// Laplacian scale of the desk-scale config.
pub const DESK_DIFFUSION_RATE: f64 = 0.1;

/// Independent stream of seeds: SplitMix64 over `(base, stream, index)`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ stream) ^ index)
}

const STREAM_GRAPH: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_INIT: u64 = 3;
const STREAM_BATCHES: u64 = 4;
const STREAM_PERTURB: u64 = 5;
const STREAM_PROBES: u64 = 6;

/// One labelled window of a diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceLocalizationSample {
    pub source: usize,
    pub start: usize,
    pub label: usize,
    /// `N × T`, column `j` is the state at diffusion time `start + j`.
    pub x: DenseMatrix,
}

impl SourceLocalizationSample {
    pub fn to_sample(&self) -> Sample {
        Sample {
            x: self.x.clone(),
            target: Target::Class(self.label),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceLocalizationData {
    pub spatial: Graph,
    pub communities: Vec<usize>,
    pub samples: Vec<SourceLocalizationSample>,
}

impl SourceLocalizationData {
    /// Train / validation / test parts.
    pub fn split(&self, tc: &TrainConfig) -> (Vec<Sample>, Vec<Sample>, Vec<Sample>) {
        let (a, b, _) = tc.split_sizes(self.samples.len());
        let all: Vec<Sample> = self.samples.iter().map(|s| s.to_sample()).collect();
        let test = all[a + b..].to_vec();
        let val = all[a..a + b].to_vec();
        let mut train = all;
        train.truncate(a);
        (train, val, test)
    }
}

/// Graph and samples of repetition `seed`.
pub fn gen_source_localization(cfg: &ExperimentConfig, seed: u64) -> Result<SourceLocalizationData> {
    cfg.validate()?;
    let g = &cfg.graph;
    let (spatial, communities) = sbm_generate(
        g.nodes,
        g.communities,
        g.p_in,
        g.p_out,
        derive_seed(cfg.seed, STREAM_GRAPH, seed),
    )?;
    let heat = HeatDiffusion::new(&spatial)?;
    let d = &cfg.diffusion;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_DATA, seed));
    let mut samples = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let source = rng.gen_range(0..g.nodes);
        let start = match d.start_override {
            Some(t) => t,
            None => rng.gen_range(d.t_min..=d.t_max - d.window),
        };
        let mut x0 = vec![0.0; g.nodes];
        x0[source] = d.signal_scale;
        let mut x = DenseMatrix::zeros(g.nodes, d.window);
        for j in 0..d.window {
            let tau = (start + j) as f64;
            let col = if tau == 0.0 {
                x0.clone()
            } else {
                heat.apply(&x0, d.rate * tau)?
            };
            x.set_col(j, &col);
        }
        if d.standardize {
            x = standardize(&x);
        }
        samples.push(SourceLocalizationSample {
            source,
            start,
            label: communities[source],
            x,
        });
    }
    Ok(SourceLocalizationData {
        spatial,
        communities,
        samples,
    })
}

fn standardize(x: &DenseMatrix) -> DenseMatrix {
    let vals = x.as_slice();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 0.0 { 1.0 / std } else { 1.0 };
    DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - mean) * scale)
}

/// Test accuracy of one trained run, or why it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub seed: u64,
    pub test_accuracy: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub runs: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceLocalizationResults {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<ModelSummary>,
}

impl SourceLocalizationResults {
    pub fn summary_for(&self, model: &str) -> Option<&ModelSummary> {
        self.summary.iter().find(|s| s.model == model)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_csv_with_header<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Checkpoint path of one run inside an output directory.
pub fn checkpoint_path(out: &Path, model: &str, seed: u64) -> PathBuf {
    out.join("checkpoints").join(format!("{model}_seed{seed}.json"))
}

pub fn save_checkpoint(model: &GtcnnModel, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<GtcnnModel> {
    let model: GtcnnModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    model.config.validate()?;
    Ok(model)
}

/// Trains every configured model family on every seed and writes
/// `runs.csv`, `results.csv`, `failed_runs.csv`, histories and checkpoints.
pub fn run_source_localization(cfg: &ExperimentConfig, out: &Path) -> Result<SourceLocalizationResults> {
    cfg.validate()?;
    let archs = cfg.architectures()?;
    fs::create_dir_all(out.join("histories"))?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let data = gen_source_localization(cfg, seed)?;
        let (train_set, val, test) = data.split(&cfg.train);
        let temporal = cfg.temporal_graph()?;
        for (&arch, name) in archs.iter().zip(&cfg.models) {
            let mut model = cfg.build_model(arch, derive_seed(cfg.seed, STREAM_INIT, seed))?;
            let tc = TrainConfig {
                seed: derive_seed(cfg.seed, STREAM_BATCHES, seed),
                ..cfg.train.clone()
            };
            let outcome = train(&mut model, &data.spatial, &temporal, &train_set, &val, &tc, Loss::CrossEntropy);
            let record = match outcome {
                Ok(history) => {
                    let mut f = fs::File::create(out.join("histories").join(format!("{name}_seed{seed}.csv")))?;
                    history.write_csv(&mut f)?;
                    save_checkpoint(&model, &checkpoint_path(out, name, seed))?;
                    let eval_set = if test.is_empty() { &val } else { &test };
                    let acc = if eval_set.is_empty() {
                        None
                    } else {
                        let ops = model.operators(&data.spatial, &temporal)?;
                        Some(evaluate(&model, &ops, eval_set, Metric::Accuracy)?.value)
                    };
                    RunRecord {
                        model: name.clone(),
                        seed,
                        test_accuracy: acc,
                        failure: None,
                    }
                }
                Err(Error::Numerical(msg)) => RunRecord {
                    model: name.clone(),
                    seed,
                    test_accuracy: None,
                    failure: Some(msg),
                },
                Err(e) => return Err(e),
            };
            runs.push(record);
        }
    }
    let summary: Vec<ModelSummary> = cfg
        .models
        .iter()
        .map(|name| {
            let accs: Vec<f64> = runs
                .iter()
                .filter(|r| &r.model == name)
                .filter_map(|r| r.test_accuracy)
                .collect();
            let failed = runs
                .iter()
                .filter(|r| &r.model == name && r.failure.is_some())
                .count();
            let (mean, std) = mean_std(&accs);
            ModelSummary {
                model: name.clone(),
                mean_accuracy: mean,
                std_accuracy: std,
                runs: accs.len(),
                failed,
            }
        })
        .collect();
    let ok: Vec<(&str, u64, f64)> = runs
        .iter()
        .filter_map(|r| r.test_accuracy.map(|a| (r.model.as_str(), r.seed, a)))
        .collect();
    write_csv_with_header(&out.join("runs.csv"), &["model", "seed", "test_accuracy"], &ok)?;
    let failed: Vec<(&str, u64, &str)> = runs
        .iter()
        .filter_map(|r| r.failure.as_deref().map(|f| (r.model.as_str(), r.seed, f)))
        .collect();
    write_csv_with_header(&out.join("failed_runs.csv"), &["model", "seed", "reason"], &failed)?;
    write_csv(&out.join("results.csv"), &summary)?;
    Ok(SourceLocalizationResults { runs, summary })
}

/// Writes the dataset of one seed: `graph.json` and `dataset.json`.
pub fn write_dataset(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<SourceLocalizationData> {
    let data = gen_source_localization(cfg, seed)?;
    fs::create_dir_all(out)?;
    write_graph_json(&data.spatial, out.join("graph.json"))?;
    fs::write(out.join("dataset.json"), serde_json::to_string(&data.samples)?)?;
    let (a, b, c) = cfg.train.split_sizes(data.samples.len());
    let meta = serde_json::json!({
        "seed": seed,
        "communities": data.communities,
        "split": {"train": a, "val": b, "test": c},
    });
    fs::write(out.join("dataset_meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(data)
}

/// Accuracy on the perturbed graph for one (level, trial).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub snr_db: f64,
    pub trial: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityResults {
    pub reports: Vec<PerturbationReport>,
    pub accuracy: Vec<AccuracyRow>,
    pub unperturbed_accuracy: f64,
    pub c_est: f64,
}

impl StabilityResults {
    /// Mean accuracy per SNR level in config order.
    pub fn mean_accuracy_by_snr(&self, levels: &[f64]) -> Vec<f64> {
        levels
            .iter()
            .map(|&l| {
                let v: Vec<f64> = self
                    .accuracy
                    .iter()
                    .filter(|r| r.snr_db == l)
                    .map(|r| r.accuracy)
                    .collect();
                mean_std(&v).0
            })
            .collect()
    }
}

/// Everything needed to perturb one trained model.
pub struct StabilityContext {
    pub model: GtcnnModel,
    pub normalized: GtcnnModel,
    pub spatial: Graph,
    pub temporal: Graph,
    pub test: Vec<Sample>,
    pub c_est: f64,
    pub probes: Vec<DenseMatrix>,
}

impl StabilityContext {
    pub fn new(cfg: &ExperimentConfig, model: GtcnnModel, seed: u64, probes: usize, grid_intervals: usize) -> Result<Self> {
        let data = gen_source_localization(cfg, seed)?;
        let (_, val, test) = data.split(&cfg.train);
        let test = if test.is_empty() { val } else { test };
        let temporal = cfg.temporal_graph()?;
        let support = FrequencySupport::new(&data.spatial, &temporal, grid_intervals)?;
        let normalized = normalized_model(&model, &support)?;
        let c_est = model_lipschitz(&normalized, &support)?;
        let probes = unit_probes(
            data.spatial.n(),
            cfg.diffusion.window,
            probes,
            derive_seed(cfg.seed, STREAM_PROBES, seed),
        );
        Ok(Self {
            model,
            normalized,
            spatial: data.spatial,
            temporal,
            test,
            c_est,
            probes,
        })
    }

    /// Bound and empirical feature distance of the normalized network for one `E`.
    pub fn report(&self, e: &ErrorMatrix, form: DeltaForm) -> Result<(PerturbationReport, Graph)> {
        let perturbed = relative_perturb(&self.spatial, e)?;
        let delta = misalignment_delta_with(&self.spatial, e, form)?;
        let distance = empirical_gtcnn_distance(&self.normalized, &self.spatial, &perturbed, &self.temporal, &self.probes)?;
        let input_norm = self.probes.iter().map(|p| p.frobenius_norm()).fold(0.0, f64::max);
        let layers = self.normalized.n_layers();
        let features = self.normalized.config.max_features();
        let (n, t) = (self.spatial.n(), self.temporal.n());
        let eps = e.operator_norm();
        Ok((
            PerturbationReport {
                epsilon: eps,
                snr_db: snr_db(&self.spatial, e),
                delta,
                c_est: self.c_est,
                layers,
                features,
                n,
                t,
                bound: stability_bound(self.c_est, delta, eps, layers, features, n, t, input_norm),
                empirical_distance: distance,
                input_norm,
            },
            perturbed,
        ))
    }

    pub fn accuracy_on(&self, spatial: &Graph) -> Result<f64> {
        let ops = self.model.operators(spatial, &self.temporal)?;
        Ok(evaluate(&self.model, &ops, &self.test, Metric::Accuracy)?.value)
    }
}

/// Perturbs a trained checkpoint at every configured SNR and `ε` level.
///
/// Writes `reports.csv` (one row per level and trial), `accuracy.csv`
/// (`snr_db,trial,accuracy`) and `stability_meta.json` (grid size, `C_est`,
/// unperturbed accuracy).
pub fn run_stability_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<StabilityResults> {
    cfg.validate()?;
    let Some(params) = &cfg.stability else {
        return config_err("stability_sweep needs a \"stability\" section");
    };
    let Some(path) = &params.checkpoint else {
        return config_err("stability sweep needs a checkpoint path");
    };
    let model = load_checkpoint(path)?;
    stability_sweep_with_model(cfg, model, out)
}

/// Same as [`run_stability_sweep`] with the model already in memory.
pub fn stability_sweep_with_model(cfg: &ExperimentConfig, model: GtcnnModel, out: &Path) -> Result<StabilityResults> {
    let Some(params) = &cfg.stability else {
        return config_err("stability_sweep needs a \"stability\" section");
    };
    let seed = cfg.seeds[params.seed_index];
    let ctx = StabilityContext::new(cfg, model, seed, params.probes, params.grid_intervals)?;
    let unperturbed = ctx.accuracy_on(&ctx.spatial)?;
    let mut reports = Vec::new();
    let mut accuracy = Vec::new();
    for (level, &snr) in params.snr_db.iter().enumerate() {
        for trial in 0..params.trials {
            let e = sample_error_at_snr(
                &ctx.spatial,
                snr,
                derive_seed(cfg.seed, STREAM_PERTURB, (level * params.trials + trial) as u64),
            )?;
            let (report, perturbed) = ctx.report(&e, params.delta_form)?;
            reports.push(report);
            accuracy.push(AccuracyRow {
                snr_db: snr,
                trial,
                accuracy: ctx.accuracy_on(&perturbed)?,
            });
        }
    }
    let offset = params.snr_db.len() * params.trials;
    for (level, &eps) in params.epsilons.iter().enumerate() {
        for trial in 0..params.trials {
            let e = sample_error_with_norm(
                ctx.spatial.n(),
                eps,
                derive_seed(cfg.seed, STREAM_PERTURB, (offset + level * params.trials + trial) as u64),
            )?;
            reports.push(ctx.report(&e, params.delta_form)?.0);
        }
    }
    fs::create_dir_all(out)?;
    write_reports_csv(&reports, fs::File::create(out.join("reports.csv"))?)?;
    write_csv(&out.join("accuracy.csv"), &accuracy)?;
    let meta = serde_json::json!({
        "grid_intervals": params.grid_intervals,
        "c_est": ctx.c_est,
        "unperturbed_accuracy": unperturbed,
        "delta_form": params.delta_form,
        "probes": params.probes,
    });
    fs::write(out.join("stability_meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(StabilityResults {
        reports,
        accuracy,
        unperturbed_accuracy: unperturbed,
        c_est: ctx.c_est,
    })
}

/// One row of a spectral dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub layer: usize,
    /// `f · F_in + g` for the scalar filter from input feature `g` to output `f`.
    pub filter: usize,
    pub lambda_t: f64,
    pub lambda: f64,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDump {
    pub rows: Vec<SpectralRow>,
    /// `(layer, filter)` pairs whose response vanishes on the whole grid.
    pub degenerate: Vec<(usize, usize)>,
}

/// `|h(λ_T, λ)|` of every scalar filter, each divided by its own grid maximum.
///
/// Layers are numbered from 1. Degenerate (all-zero) filters are emitted as zeros and
/// listed separately.
pub fn spectral_dump(model: &GtcnnModel, spatial: &Graph, temporal: &Graph, intervals: usize) -> Result<SpectralDump> {
    let range = spatial_frequency_range(spatial)?;
    let lambda_t = temporal_frequency_set(temporal, intervals)?;
    let grid = uniform_grid(range, intervals);
    let mut rows = Vec::new();
    let mut degenerate = Vec::new();
    for (idx, bank) in model.effective_banks().iter().enumerate() {
        for f in 0..bank.f_out() {
            for g in 0..bank.f_in() {
                let h = bank.scalar_filter(f, g);
                let filter = f * bank.f_in() + g;
                let values: Vec<(f64, f64, f64)> = lambda_t
                    .iter()
                    .flat_map(|&lt| grid.iter().map(move |&l| (lt, l)))
                    .map(|(lt, l)| (lt, l, frequency_response(&h, lt, l).abs()))
                    .collect();
                let peak = values.iter().map(|v| v.2).fold(0.0, f64::max);
                if peak == 0.0 {
                    degenerate.push((idx + 1, filter));
                }
                let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
                rows.extend(values.into_iter().map(|(lt, l, r)| SpectralRow {
                    layer: idx + 1,
                    filter,
                    lambda_t: lt,
                    lambda: l,
                    response: r * scale,
                }));
            }
        }
    }
    Ok(SpectralDump { rows, degenerate })
}

/// Loads the configured checkpoint and writes `spectral.csv` and `degenerate_filters.csv`.
pub fn run_spectral_dump(cfg: &ExperimentConfig, out: &Path) -> Result<SpectralDump> {
    cfg.validate()?;
    let Some(params) = &cfg.spectral else {
        return config_err("spectral_dump needs a \"spectral\" section");
    };
    let model = load_checkpoint(&params.checkpoint)?;
    let data = gen_source_localization(cfg, cfg.seeds[params.seed_index])?;
    let temporal = match model.config.filter {
        crate::nn::FilterMode::TimeAsFeatures { .. } => line_graph(1)?,
        _ => cfg.temporal_graph()?,
    };
    let dump = spectral_dump(&model, &data.spatial, &temporal, params.intervals)?;
    fs::create_dir_all(out)?;
    write_csv(&out.join("spectral.csv"), &dump.rows)?;
    write_csv_with_header(&out.join("degenerate_filters.csv"), &["layer", "filter"], &dump.degenerate)?;
    Ok(dump)
}

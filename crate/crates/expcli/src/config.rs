//! Run configuration, read from a single TOML document.
//!
//! Every section is optional and falls back to the desk-scale defaults
//! below; only `seed` (here or via `--seed`) and the dataset paths are
//! required. Relative paths resolve against the working directory.

use std::path::{Path, PathBuf};

use hm_core::machine::count_free_parameters;
use hm_core::Architecture;
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Probe,
    Replicate,
    TenMachine,
    Transcend,
    MultiDataset,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Probe => "probe",
            Self::Replicate => "replicate",
            Self::TenMachine => "ten_machine",
            Self::Transcend => "transcend",
            Self::MultiDataset => "multi_dataset",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zero,
    Random,
    Pyramid,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Random => "random",
            Self::Pyramid => "pyramid",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    #[default]
    Idx,
    Cifar10,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMode {
    #[default]
    Head,
    Shuffled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinarizeKind {
    #[default]
    Threshold,
    Stochastic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleOutput {
    #[default]
    Probabilities,
    Binary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeFeatures {
    #[default]
    Probabilities,
    Samples,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PyramidBase {
    Zero,
    #[default]
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub name: String,
    pub format: DataFormat,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// CIFAR-10 batch files.
    pub train_batches: Vec<PathBuf>,
    pub test_batches: Vec<PathBuf>,
    /// Number of train / test images kept after loading; all when absent.
    pub train_size: Option<usize>,
    pub test_size: Option<usize>,
    pub subset: SubsetMode,
    pub subset_seed: u64,
    pub binarize: BinarizeKind,
    pub threshold: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            name: "mnist".into(),
            format: DataFormat::Idx,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            train_batches: Vec::new(),
            test_batches: Vec::new(),
            train_size: Some(10_000),
            test_size: None,
            subset: SubsetMode::Head,
            subset_seed: 0,
            binarize: BinarizeKind::Threshold,
            threshold: 0.5,
        }
    }
}

impl DataConfig {
    /// IDX paths under `dir` using the canonical MNIST file names.
    pub fn mnist_in(dir: &Path) -> Self {
        Self {
            train_images: Some(dir.join("train-images-idx3-ubyte")),
            train_labels: Some(dir.join("train-labels-idx1-ubyte")),
            test_images: Some(dir.join("t10k-images-idx3-ubyte")),
            test_labels: Some(dir.join("t10k-labels-idx1-ubyte")),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Vec<usize>,
    pub inits: Vec<InitKind>,
    pub random_sigma: f64,
    pub sample_output: SampleOutput,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: vec![784, 625, 484, 289, 196, 100, 16],
            inits: vec![InitKind::Random, InitKind::Pyramid],
            random_sigma: hm_core::machine::DEFAULT_RANDOM_SIGMA,
            sample_output: SampleOutput::Probabilities,
        }
    }
}

/// Conventional full-resolution training. Pyramid-initialized machines get
/// the same number of epochs after their staged pretraining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub shuffle: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 1,
            learning_rate: hm_core::machine::DEFAULT_LEARNING_RATE,
            shuffle: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PyramidSection {
    pub stage_epochs: usize,
    pub stage_learning_rate: f64,
    /// Defaults to `train.learning_rate`.
    pub finetune_learning_rate: Option<f64>,
    pub base: PyramidBase,
}

impl Default for PyramidSection {
    fn default() -> Self {
        Self {
            stage_epochs: 1,
            stage_learning_rate: hm_core::machine::DEFAULT_LEARNING_RATE,
            finetune_learning_rate: None,
            base: PyramidBase::Random,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub iterations: usize,
    pub step: f64,
    pub standardize: bool,
    pub features: ProbeFeatures,
    /// Feature subsets to fit, e.g. `["layer_6", "concat_1_6"]`; all when absent.
    pub subsets: Option<Vec<String>>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let h = hm_core::eval::ProbeHyper::default();
        Self {
            iterations: h.iterations,
            step: h.step,
            standardize: h.standardize,
            features: ProbeFeatures::Probabilities,
            subsets: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicateSection {
    pub n_values: Vec<usize>,
    pub g: usize,
    pub deep: Vec<usize>,
    pub shallow: Vec<usize>,
}

impl Default for ReplicateSection {
    fn default() -> Self {
        Self {
            n_values: (1..=10).map(|p| 1usize << p).collect(),
            g: 500,
            deep: vec![784, 484, 225, 64],
            shallow: vec![784, 709],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TenMachineSection {
    /// Fixed architectures; when absent, `sweep` architectures are sampled.
    pub architectures: Option<Vec<Vec<usize>>>,
    pub sweep: usize,
    pub min_depth: usize,
    pub max_depth: usize,
    pub allowed_sides: Vec<usize>,
    /// Generated pool size, split evenly over the ten class machines.
    pub g: usize,
}

impl Default for TenMachineSection {
    fn default() -> Self {
        Self {
            architectures: None,
            sweep: 10,
            min_depth: 1,
            max_depth: 4,
            allowed_sides: vec![25, 22, 20, 17, 14, 10, 7, 4],
            g: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranscendSection {
    pub architecture: Vec<usize>,
    pub g_schedule: Vec<usize>,
}

impl Default for TranscendSection {
    fn default() -> Self {
        Self {
            architecture: vec![784, 400, 100],
            g_schedule: vec![1000, 2000, 5000, 10_000, 20_000],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    /// Hidden layer sizes; the visible size comes from the dataset.
    pub hidden: Vec<usize>,
    pub data: DataConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiDatasetSection {
    pub datasets: Vec<DatasetEntry>,
    pub g: usize,
}

impl Default for MultiDatasetSection {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            g: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Generated images written as PGM per condition.
    pub samples: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            samples: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub precision: Precision,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub pyramid: PyramidSection,
    pub probe: ProbeSection,
    pub replicate: ReplicateSection,
    pub ten_machine: TenMachineSection,
    pub transcend: TranscendSection,
    pub multi_dataset: MultiDatasetSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExpError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|message| ExpError::ConfigFile {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| ExpError::config("seed", "no seed given in the config or via --seed"))
    }

    /// Checks everything that does not need the data files.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(declared) = self.experiment {
            if declared != kind {
                return Err(ExpError::config(
                    "experiment",
                    format!("config is for {} but {} was requested", declared.name(), kind.name()),
                ));
            }
        }
        self.seed()?;
        check_positive_rate("train.learning_rate", self.train.learning_rate)?;
        check_positive_rate("pyramid.stage_learning_rate", self.pyramid.stage_learning_rate)?;
        if let Some(lr) = self.pyramid.finetune_learning_rate {
            check_positive_rate("pyramid.finetune_learning_rate", lr)?;
        }
        if !(self.model.random_sigma >= 0.0 && self.model.random_sigma.is_finite()) {
            return Err(ExpError::config("model.random_sigma", "must be finite and nonnegative"));
        }
        if self.model.inits.is_empty() {
            return Err(ExpError::config("model.inits", "at least one init kind is required"));
        }
        let mut seen = self.model.inits.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.model.inits.len() {
            return Err(ExpError::config("model.inits", "init kinds must be distinct"));
        }
        if kind == ExperimentKind::MultiDataset {
            // Only the binarization settings of the top-level section are used.
            check_threshold("data", &self.data)?;
        } else {
            validate_data("data", &self.data)?;
        }

        match kind {
            ExperimentKind::Probe => {
                let arch = architecture("model.architecture", &self.model.architecture)?;
                self.check_pyramid("model.architecture", &arch)?;
                if !(self.probe.step > 0.0 && self.probe.step.is_finite()) {
                    return Err(ExpError::config("probe.step", "must be positive"));
                }
                if let Some(subsets) = &self.probe.subsets {
                    let depth = arch.depth();
                    for s in subsets {
                        if !subset_names(depth).contains(s) {
                            return Err(ExpError::config(
                                "probe.subsets",
                                format!("unknown subset {s:?} for a machine with {depth} hidden layers"),
                            ));
                        }
                    }
                }
            }
            ExperimentKind::Replicate => {
                let r = &self.replicate;
                if r.g == 0 {
                    return Err(ExpError::config("replicate.g", "G must be at least 1"));
                }
                if r.n_values.is_empty() || r.n_values.contains(&0) {
                    return Err(ExpError::config("replicate.n_values", "need at least one positive N"));
                }
                let deep = architecture("replicate.deep", &r.deep)?;
                let shallow = architecture("replicate.shallow", &r.shallow)?;
                if !deep.is_pyramid_compatible() {
                    return Err(ExpError::config("replicate.deep", "deep machine must be pyramid-compatible"));
                }
                if deep.visible() != shallow.visible() {
                    return Err(ExpError::config("replicate.shallow", "visible size differs from the deep machine"));
                }
                let (rd, rs) = (count_free_parameters(&deep), count_free_parameters(&shallow));
                if rd >= rs {
                    return Err(ExpError::config(
                        "replicate.shallow",
                        format!("shallow machine must have more free parameters ({rs}) than the deep one ({rd})"),
                    ));
                }
            }
            ExperimentKind::TenMachine => {
                let t = &self.ten_machine;
                check_pool_size("ten_machine.g", t.g)?;
                match &t.architectures {
                    Some(list) => {
                        if list.is_empty() {
                            return Err(ExpError::config("ten_machine.architectures", "list is empty"));
                        }
                        for (i, sizes) in list.iter().enumerate() {
                            let field = format!("ten_machine.architectures[{i}]");
                            let arch = architecture(&field, sizes)?;
                            self.check_pyramid(&field, &arch)?;
                        }
                    }
                    None => {
                        if t.sweep == 0 {
                            return Err(ExpError::config("ten_machine.sweep", "must be at least 1"));
                        }
                        crate::sampling::check_constraints(&self.arch_constraints(usize::MAX))
                            .map_err(|e| ExpError::config("ten_machine", e.to_string()))?;
                    }
                }
            }
            ExperimentKind::Transcend => {
                let t = &self.transcend;
                let arch = architecture("transcend.architecture", &t.architecture)?;
                self.check_pyramid("transcend.architecture", &arch)?;
                if t.g_schedule.is_empty() {
                    return Err(ExpError::config("transcend.g_schedule", "schedule is empty"));
                }
                if t.g_schedule.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ExpError::config("transcend.g_schedule", "G values must be strictly increasing"));
                }
                for &g in &t.g_schedule {
                    check_pool_size("transcend.g_schedule", g)?;
                }
            }
            ExperimentKind::MultiDataset => {
                let m = &self.multi_dataset;
                check_pool_size("multi_dataset.g", m.g)?;
                if m.datasets.is_empty() {
                    return Err(ExpError::config("multi_dataset.datasets", "no datasets listed"));
                }
                for (i, entry) in m.datasets.iter().enumerate() {
                    validate_data(&format!("multi_dataset.datasets[{i}].data"), &entry.data)?;
                    if entry.hidden.is_empty() {
                        return Err(ExpError::config(
                            format!("multi_dataset.datasets[{i}].hidden"),
                            "need at least one hidden layer",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_pyramid(&self, field: &str, arch: &Architecture) -> Result<()> {
        if self.model.inits.contains(&InitKind::Pyramid) && !arch.is_pyramid_compatible() {
            return Err(ExpError::config(
                field,
                format!("{arch} is not pyramid-compatible (strictly decreasing perfect squares)"),
            ));
        }
        Ok(())
    }

    pub fn arch_constraints(&self, visible_side: usize) -> crate::sampling::ArchConstraints {
        crate::sampling::ArchConstraints {
            min_depth: self.ten_machine.min_depth,
            max_depth: self.ten_machine.max_depth,
            visible_side,
            allowed_sides: self.ten_machine.allowed_sides.clone(),
        }
    }
}

/// Probe subset names in report order.
pub fn subset_names(depth: usize) -> Vec<String> {
    (1..=depth)
        .map(|k| format!("layer_{k}"))
        .chain((1..=depth).map(|k| format!("concat_1_{k}")))
        .collect()
}

pub(crate) fn architecture(field: &str, sizes: &[usize]) -> Result<Architecture> {
    Architecture::new(sizes.to_vec()).map_err(|e| ExpError::config(field, e.to_string()))
}

fn check_positive_rate(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ExpError::config(field, format!("must be positive, got {v}")))
    }
}

fn check_pool_size(field: &str, g: usize) -> Result<()> {
    if g < hm_core::datasets::NUM_CLASSES {
        return Err(ExpError::config(
            field,
            format!("G = {g} leaves some class machine without samples; need at least 10"),
        ));
    }
    Ok(())
}

fn check_threshold(field: &str, d: &DataConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&d.threshold) {
        return Err(ExpError::config(format!("{field}.threshold"), "must lie in [0, 1]"));
    }
    Ok(())
}

fn validate_data(field: &str, d: &DataConfig) -> Result<()> {
    match d.format {
        DataFormat::Idx => {
            if d.train_images.is_none() {
                return Err(ExpError::config(format!("{field}.train_images"), "missing"));
            }
        }
        DataFormat::Cifar10 => {
            if d.train_batches.is_empty() {
                return Err(ExpError::config(format!("{field}.train_batches"), "missing"));
            }
        }
    }
    check_threshold(field, d)?;
    if d.train_size == Some(0) {
        return Err(ExpError::config(format!("{field}.train_size"), "must be positive"));
    }
    if d.test_size == Some(0) {
        return Err(ExpError::config(format!("{field}.test_size"), "must be positive"));
    }
    Ok(())
}

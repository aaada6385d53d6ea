//! The five experiments. Each returns a [`Report`] whose rows come out in a
//! fixed order, so a run is byte-reproducible from its config and seed no
//! matter how many worker threads it uses.
//!
//! Seeds: every unit of work derives its own seed from the run seed with
//! [`derive_seed`]. Machines compared across init kinds share their seed,
//! so random and pyramid machines see the same shuffles and binarizations
//! during full-resolution training.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use hm_core::datasets::{split_by_class, Dataset};
use hm_core::eval::{
    adm, assign_nearest, density_from_assignment, entropy, feature_subset, improvement_factor,
    knn1_accuracy, layer_features, normalized_entropy, novelty, probe_train, unrepresented_count,
    FeatureMode, ProbeHyper,
};
use hm_core::machine::count_free_parameters;
use hm_core::numerics::derive_seed;
use hm_core::pyramid::{pyramid_pretrain, stage_data};
use hm_core::{
    Architecture, BaseInit, BinarizeMode, Error, HelmholtzMachine, Image, Real, RngStream, StageConfig,
    TrainConfig,
};
use rayon::prelude::*;

use crate::config::{
    architecture, subset_names, BinarizeKind, ExperimentConfig, ExperimentKind, InitKind, Precision,
    ProbeFeatures, PyramidBase, SampleOutput,
};
use crate::data::{load_splits, Splits};
use crate::error::{DataContext, ExpError, Result};
use crate::report::{Report, Row, SampleImage};
use crate::sampling::sample_random_architecture;

// First element of every derive_seed path, one per kind of work.
const SALT_MACHINE: u64 = 1;
const SALT_GENERATE: u64 = 2;
const SALT_FEATURES: u64 = 3;
const SALT_SWEEP: u64 = 4;

/// Validates `cfg`, then runs the experiment at the configured precision.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate(kind)?;
    match cfg.precision {
        Precision::F32 => run_typed::<f32>(kind, cfg, false),
        Precision::F64 => run_typed::<f64>(kind, cfg, false),
    }
}

/// Validates the config and loads and checks the data without training.
pub fn dry_run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate(kind)?;
    match cfg.precision {
        Precision::F32 => run_typed::<f32>(kind, cfg, true),
        Precision::F64 => run_typed::<f64>(kind, cfg, true),
    }
}

fn run_typed<T: Real>(kind: ExperimentKind, cfg: &ExperimentConfig, dry: bool) -> Result<Report> {
    let mut rec = Recorder::new(kind, cfg)?;
    match kind {
        ExperimentKind::Probe => probe::<T>(cfg, &mut rec, dry)?,
        ExperimentKind::Replicate => replicate::<T>(cfg, &mut rec, dry)?,
        ExperimentKind::TenMachine => ten_machine::<T>(cfg, &mut rec, dry)?,
        ExperimentKind::Transcend => transcend::<T>(cfg, &mut rec, dry)?,
        ExperimentKind::MultiDataset => multi_dataset::<T>(cfg, &mut rec, dry)?,
    }
    Ok(rec.finish())
}

pub fn run_probe_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run(ExperimentKind::Probe, cfg)
}

pub fn run_replication_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run(ExperimentKind::Replicate, cfg)
}

pub fn run_ten_machine_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run(ExperimentKind::TenMachine, cfg)
}

pub fn run_transcend_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run(ExperimentKind::Transcend, cfg)
}

pub fn run_multi_dataset_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run(ExperimentKind::MultiDataset, cfg)
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// The condition columns of a row.
#[derive(Clone, Debug, Default)]
struct Cond {
    dataset: String,
    init: String,
    architecture: String,
    n: Option<usize>,
    g: Option<usize>,
    condition: String,
    split: String,
}

struct Recorder {
    report: Report,
    sample_limit: usize,
}

impl Recorder {
    fn new(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            report: Report {
                experiment: kind.name().into(),
                seed: cfg.seed()?,
                threads: rayon::current_num_threads(),
                config: cfg.to_toml(),
                started_unix: unix_now(),
                ..Default::default()
            },
            sample_limit: cfg.output.samples,
        })
    }

    fn push(&mut self, c: &Cond, metric: &str, value: f64) {
        self.report.rows.push(Row {
            experiment: self.report.experiment.clone(),
            seed: self.report.seed,
            dataset: c.dataset.clone(),
            init: c.init.clone(),
            architecture: c.architecture.clone(),
            n: c.n,
            g: c.g,
            condition: c.condition.clone(),
            split: c.split.clone(),
            metric: metric.into(),
            value,
        });
    }

    fn time<R>(&mut self, label: String, f: impl FnOnce() -> Result<R>) -> Result<R> {
        let t = Instant::now();
        let out = f()?;
        self.report.timings.push((label, t.elapsed().as_secs_f64()));
        Ok(out)
    }

    fn samples<T: Real>(&mut self, prefix: &str, side: usize, images: &[Vec<T>]) {
        for (i, px) in images.iter().take(self.sample_limit).enumerate() {
            self.report.samples.push(SampleImage {
                name: format!("{prefix}_{i:04}"),
                side,
                pixels: px.iter().map(|v| v.as_f64()).collect(),
            });
        }
    }

    fn finish(mut self) -> Report {
        self.report.finished_unix = unix_now();
        self.report
    }
}

fn binarize_mode(cfg: &ExperimentConfig) -> BinarizeMode {
    match cfg.data.binarize {
        BinarizeKind::Threshold => BinarizeMode::Threshold,
        BinarizeKind::Stochastic => BinarizeMode::Stochastic,
    }
}

fn check_visible<T: Real>(field: &str, arch: &Architecture, ds: &Dataset<T>) -> Result<()> {
    if arch.visible() != ds.side * ds.side {
        return Err(ExpError::config(
            field,
            format!(
                "visible layer {} does not match {}x{} images of {}",
                arch.visible(),
                ds.side,
                ds.side,
                ds.name
            ),
        ));
    }
    Ok(())
}

fn pixels<T: Real>(ds: &Dataset<T>) -> Vec<Vec<T>> {
    ds.pixel_vectors()
}

/// Initializes and trains one machine. Zero and random machines get
/// `train.epochs` epochs on binarized full-resolution images; pyramid
/// machines get staged pretraining followed by the same full-resolution
/// training, using the same seed for shuffling and binarization.
pub fn train_machine<T: Real>(
    cfg: &ExperimentConfig,
    arch: &Architecture,
    init: InitKind,
    images: &[Image<T>],
    seed: u64,
) -> Result<HelmholtzMachine<T>> {
    let mode = binarize_mode(cfg);
    let threshold = cfg.data.threshold;
    match init {
        InitKind::Pyramid => {
            let stages = StageConfig {
                stage_epochs: cfg.pyramid.stage_epochs,
                stage_learning_rate: cfg.pyramid.stage_learning_rate,
                binarize: mode,
                threshold,
                finetune_epochs: cfg.train.epochs,
                finetune_learning_rate: cfg.pyramid.finetune_learning_rate.unwrap_or(cfg.train.learning_rate),
                shuffle: cfg.train.shuffle,
                base: match cfg.pyramid.base {
                    PyramidBase::Zero => BaseInit::Zero,
                    PyramidBase::Random => BaseInit::Random {
                        sigma: cfg.model.random_sigma,
                    },
                },
            };
            Ok(pyramid_pretrain(arch, images, &stages, seed)?)
        }
        InitKind::Zero | InitKind::Random => {
            let mut machine = if init == InitKind::Zero {
                HelmholtzMachine::zeros(arch)
            } else {
                HelmholtzMachine::random(arch, cfg.model.random_sigma, seed)?
            };
            if cfg.train.epochs > 0 {
                // Same seed as the fine-tuning phase of pyramid pretraining.
                let train_seed = derive_seed(seed, &[arch.depth() as u64 + 1]);
                let side = images
                    .first()
                    .map(Image::side)
                    .ok_or_else(|| Error::Precondition("no training images".into()))?;
                let patterns = stage_data(images, side, mode, threshold, &mut RngStream::new(train_seed, 1))?;
                machine.train(
                    &patterns,
                    &TrainConfig {
                        epochs: cfg.train.epochs,
                        learning_rate: cfg.train.learning_rate,
                        seed: train_seed,
                        shuffle: cfg.train.shuffle,
                    },
                )?;
            }
            Ok(machine)
        }
    }
}

fn generate<T: Real>(
    cfg: &ExperimentConfig,
    machine: &HelmholtzMachine<T>,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<T>>> {
    Ok(machine.generate(count, rng, cfg.model.sample_output == SampleOutput::Binary)?)
}

fn probe<T: Real>(cfg: &ExperimentConfig, rec: &mut Recorder, dry: bool) -> Result<()> {
    let seed = cfg.seed()?;
    let data = load_splits::<T>("data", &cfg.data)?;
    let test = data.test("data.test_images")?;
    let arch = architecture("model.architecture", &cfg.model.architecture)?;
    check_visible("model.architecture", &arch, &data.train)?;
    let train_labels = data.train.labels().data_err()?;
    let test_labels = test.labels().data_err()?;
    if dry {
        return Ok(());
    }

    let subsets = cfg.probe.subsets.clone().unwrap_or_else(|| subset_names(arch.depth()));
    let hyper = ProbeHyper {
        iterations: cfg.probe.iterations,
        step: cfg.probe.step,
        seed,
        init_sigma: 0.0,
        standardize: cfg.probe.standardize,
    };
    let mode = binarize_mode(cfg);
    let feature_seed = derive_seed(seed, &[SALT_FEATURES]);
    let side = data.train.side;
    let train_patterns = stage_data(
        &data.train.images,
        side,
        mode,
        cfg.data.threshold,
        &mut RngStream::new(feature_seed, 0),
    )?;
    let test_patterns = stage_data(&test.images, side, mode, cfg.data.threshold, &mut RngStream::new(feature_seed, 1))?;
    let feature_mode = match cfg.probe.features {
        ProbeFeatures::Probabilities => FeatureMode::Probabilities,
        ProbeFeatures::Samples => FeatureMode::Samples {
            seed: derive_seed(feature_seed, &[2]),
        },
    };
    let machine_seed = derive_seed(seed, &[SALT_MACHINE]);

    for &init in &cfg.model.inits {
        let machine = rec.time(format!("train/{}", init.name()), || {
            train_machine(cfg, &arch, init, &data.train.images, machine_seed)
        })?;
        let (train_layers, test_layers) = rec.time(format!("features/{}", init.name()), || {
            Ok((
                layer_features(&machine, &train_patterns, feature_mode)?,
                layer_features(&machine, &test_patterns, feature_mode)?,
            ))
        })?;
        for subset in &subsets {
            let (train_acc, test_acc) = rec.time(format!("probe/{}/{subset}", init.name()), || {
                let xtr = feature_subset(&train_layers, subset)?;
                let xte = feature_subset(&test_layers, subset)?;
                let model = probe_train(&xtr, train_labels, &hyper)?;
                Ok((model.accuracy(&xtr, train_labels), model.accuracy(&xte, test_labels)))
            })?;
            for (split, acc) in [("train", train_acc), ("test", test_acc)] {
                let c = Cond {
                    dataset: data.train.name.clone(),
                    init: init.name().into(),
                    architecture: arch.to_string(),
                    condition: subset.clone(),
                    split: split.into(),
                    ..Default::default()
                };
                rec.push(&c, "accuracy", acc);
            }
        }
    }
    Ok(())
}

/// The three machines compared by the replication experiment.
pub fn replication_machines(cfg: &ExperimentConfig) -> Result<[(&'static str, Architecture, InitKind); 3]> {
    let deep = architecture("replicate.deep", &cfg.replicate.deep)?;
    let shallow = architecture("replicate.shallow", &cfg.replicate.shallow)?;
    Ok([
        ("deep_pyramid", deep.clone(), InitKind::Pyramid),
        ("deep_random", deep, InitKind::Random),
        ("shallow_random", shallow, InitKind::Random),
    ])
}

fn replicate<T: Real>(cfg: &ExperimentConfig, rec: &mut Recorder, dry: bool) -> Result<()> {
    let seed = cfg.seed()?;
    let r = &cfg.replicate;
    let data = load_splits::<T>("data", &cfg.data)?;
    let machines = replication_machines(cfg)?;
    for (_, arch, _) in &machines {
        check_visible("replicate", arch, &data.train)?;
    }
    if let Some(&n) = r.n_values.iter().find(|&&n| n > data.train.len()) {
        return Err(ExpError::config(
            "replicate.n_values",
            format!("N = {n} exceeds the {} available train images", data.train.len()),
        ));
    }
    if dry {
        return Ok(());
    }

    for (ni, &n) in r.n_values.iter().enumerate() {
        let subset = data.train.head(n);
        let reference = pixels(&subset);
        let machine_seed = derive_seed(seed, &[SALT_MACHINE, ni as u64]);
        let gen_seed = derive_seed(seed, &[SALT_GENERATE, ni as u64]);
        let results = rec.time(format!("n{n}"), || {
            machines
                .par_iter()
                .enumerate()
                .map(|(mi, (_, arch, init))| {
                    let m = train_machine(cfg, arch, *init, &subset.images, machine_seed)?;
                    let generated = generate(cfg, &m, r.g, &mut RngStream::new(gen_seed, mi as u64))?;
                    let nearest = assign_nearest(&generated, &reference)?;
                    Ok((generated, nearest))
                })
                .collect::<Result<Vec<_>>>()
        })?;

        for ((label, arch, init), (generated, nearest)) in machines.iter().zip(results) {
            let dv = density_from_assignment(&nearest, n);
            let mean_distance = nearest.iter().map(|x| x.1.as_f64()).sum::<f64>() / nearest.len() as f64;
            let c = Cond {
                dataset: data.train.name.clone(),
                init: init.name().into(),
                architecture: arch.to_string(),
                n: Some(n),
                g: Some(r.g),
                condition: (*label).into(),
                ..Default::default()
            };
            rec.push(&c, "mean_min_distance", mean_distance);
            if n >= 2 {
                rec.push(&c, "normalized_entropy", normalized_entropy(&dv)?);
            }
            rec.push(&c, "entropy", entropy(&dv));
            rec.push(&c, "unrepresented_count", unrepresented_count(&dv) as f64);
            rec.push(&c, "free_parameters", count_free_parameters(arch) as f64);
            rec.samples(&format!("n{n}_{label}"), subset.side, &generated);
        }
    }
    Ok(())
}

/// A labelled pool produced by ten per-class machines.
pub struct GeneratedPool<T> {
    pub samples: Vec<Vec<T>>,
    pub labels: Vec<u8>,
}

/// Trains one machine per class. Class `c` uses seed
/// `derive_seed(seed, &[c])`, so the result does not depend on scheduling.
pub fn train_class_machines<T: Real>(
    cfg: &ExperimentConfig,
    arch: &Architecture,
    init: InitKind,
    classes: &[Dataset<T>],
    seed: u64,
) -> Result<Vec<HelmholtzMachine<T>>> {
    classes
        .par_iter()
        .enumerate()
        .map(|(c, ds)| {
            if ds.is_empty() {
                return Err(ExpError::Data(Error::Precondition(format!(
                    "class {c} has no training images"
                ))));
            }
            train_machine(cfg, arch, init, &ds.images, derive_seed(seed, &[c as u64]))
        })
        .collect()
}

/// `per_machine` samples from every class machine; machine `c` draws from
/// stream `(seed, c)`. Samples are grouped by class in class order.
pub fn generate_pool<T: Real>(
    cfg: &ExperimentConfig,
    machines: &[HelmholtzMachine<T>],
    per_machine: usize,
    seed: u64,
) -> Result<GeneratedPool<T>> {
    let per_class = machines
        .par_iter()
        .enumerate()
        .map(|(c, m)| generate(cfg, m, per_machine, &mut RngStream::new(seed, c as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut pool = GeneratedPool {
        samples: Vec::with_capacity(per_machine * machines.len()),
        labels: Vec::with_capacity(per_machine * machines.len()),
    };
    for (c, samples) in per_class.into_iter().enumerate() {
        pool.labels.extend(std::iter::repeat(c as u8).take(samples.len()));
        pool.samples.extend(samples);
    }
    Ok(pool)
}

struct Labelled<T> {
    name: String,
    side: usize,
    train: Vec<Vec<T>>,
    train_labels: Vec<u8>,
    test: Vec<Vec<T>>,
    test_labels: Vec<u8>,
    classes: Vec<Dataset<T>>,
}

fn labelled<T: Real>(data: &Splits<T>, test_field: &str) -> Result<Labelled<T>> {
    let test = data.test(test_field)?;
    Ok(Labelled {
        name: data.train.name.clone(),
        side: data.train.side,
        train: pixels(&data.train),
        train_labels: data.train.labels().data_err()?.to_vec(),
        test: pixels(test),
        test_labels: test.labels().data_err()?.to_vec(),
        classes: split_by_class(&data.train).data_err()?,
    })
}

fn baseline<T: Real>(rec: &mut Recorder, d: &Labelled<T>) -> Result<f64> {
    let acc = rec.time(format!("baseline/{}", d.name), || {
        Ok(knn1_accuracy(&d.train, &d.train_labels, &d.test, &d.test_labels)?)
    })?;
    let c = Cond {
        dataset: d.name.clone(),
        init: "baseline".into(),
        condition: "train_set".into(),
        split: "test".into(),
        n: Some(d.train.len()),
        ..Default::default()
    };
    rec.push(&c, "knn1_accuracy", acc);
    Ok(acc)
}

/// Least-squares slope of `y` against `x`; `None` when `x` is constant.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

fn ten_machine<T: Real>(cfg: &ExperimentConfig, rec: &mut Recorder, dry: bool) -> Result<()> {
    let seed = cfg.seed()?;
    let t = &cfg.ten_machine;
    let data = load_splits::<T>("data", &cfg.data)?;
    let d = labelled(&data, "data.test_images")?;

    let archs: Vec<Architecture> = match &t.architectures {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, sizes)| {
                let field = format!("ten_machine.architectures[{i}]");
                let a = architecture(&field, sizes)?;
                check_visible(&field, &a, &data.train)?;
                Ok(a)
            })
            .collect::<Result<_>>()?,
        None => {
            let constraints = cfg.arch_constraints(d.side);
            let mut rng = RngStream::new(derive_seed(seed, &[SALT_SWEEP]), 0);
            (0..t.sweep)
                .map(|_| {
                    sample_random_architecture(&mut rng, &constraints)
                        .map_err(|e| ExpError::config("ten_machine", e.to_string()))
                })
                .collect::<Result<_>>()?
        }
    };
    if dry {
        return Ok(());
    }

    let base = baseline(rec, &d)?;
    let per_machine = t.g / d.classes.len();
    let g = per_machine * d.classes.len();
    let mut sweep: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); cfg.model.inits.len()];

    for (ai, arch) in archs.iter().enumerate() {
        for (ci, &init) in cfg.model.inits.iter().enumerate() {
            let label = format!("a{ai}/{}", init.name());
            let machines = rec.time(format!("train/{label}"), || {
                train_class_machines(cfg, arch, init, &d.classes, derive_seed(seed, &[SALT_MACHINE, ai as u64]))
            })?;
            let pool = generate_pool(
                cfg,
                &machines,
                per_machine,
                derive_seed(seed, &[SALT_GENERATE, ai as u64, ci as u64]),
            )?;
            let (train_acc, test_acc, diversity, novel) = rec.time(format!("eval/{label}"), || {
                Ok((
                    knn1_accuracy(&pool.samples, &pool.labels, &d.train, &d.train_labels)?,
                    knn1_accuracy(&pool.samples, &pool.labels, &d.test, &d.test_labels)?,
                    adm(&pool.samples)?,
                    novelty(&d.train, &pool.samples)?,
                ))
            })?;
            let mut c = Cond {
                dataset: d.name.clone(),
                init: init.name().into(),
                architecture: arch.to_string(),
                g: Some(g),
                condition: format!("arch_{ai}"),
                ..Default::default()
            };
            c.split = "train".into();
            rec.push(&c, "knn1_accuracy", train_acc);
            c.split = "test".into();
            rec.push(&c, "knn1_accuracy", test_acc);
            rec.push(&c, "improvement_factor", improvement_factor(test_acc, base)?);
            c.split = String::new();
            rec.push(&c, "adm", diversity);
            rec.push(&c, "novelty", novel);
            rec.push(&c, "depth", arch.depth() as f64);
            rec.push(&c, "hidden_units", arch.hidden_units() as f64);
            rec.push(&c, "free_parameters", count_free_parameters(arch) as f64);
            rec.samples(&format!("a{ai}_{}", init.name()), d.side, &pool.samples);
            sweep[ci].push((arch.depth() as f64, arch.hidden_units() as f64, test_acc));
        }
    }

    for (ci, &init) in cfg.model.inits.iter().enumerate() {
        let pts = &sweep[ci];
        let acc: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let c = Cond {
            dataset: d.name.clone(),
            init: init.name().into(),
            architecture: "sweep".into(),
            g: Some(g),
            condition: "trend".into(),
            split: "test".into(),
            ..Default::default()
        };
        let depth: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let units: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if let Some(s) = ls_slope(&depth, &acc) {
            rec.push(&c, "slope_accuracy_per_layer", s);
        }
        if let Some(s) = ls_slope(&units, &acc) {
            rec.push(&c, "slope_accuracy_per_unit", s);
        }
    }
    Ok(())
}

fn transcend<T: Real>(cfg: &ExperimentConfig, rec: &mut Recorder, dry: bool) -> Result<()> {
    let seed = cfg.seed()?;
    let t = &cfg.transcend;
    let data = load_splits::<T>("data", &cfg.data)?;
    let d = labelled(&data, "data.test_images")?;
    let arch = architecture("transcend.architecture", &t.architecture)?;
    check_visible("transcend.architecture", &arch, &data.train)?;
    if dry {
        return Ok(());
    }

    let base = baseline(rec, &d)?;
    let classes = d.classes.len();
    for (ci, &init) in cfg.model.inits.iter().enumerate() {
        let machines = rec.time(format!("train/{}", init.name()), || {
            train_class_machines(cfg, &arch, init, &d.classes, derive_seed(seed, &[SALT_MACHINE]))
        })?;
        for (gi, &g_target) in t.g_schedule.iter().enumerate() {
            let per_machine = g_target / classes;
            let pool = generate_pool(
                cfg,
                &machines,
                per_machine,
                derive_seed(seed, &[SALT_GENERATE, ci as u64, gi as u64]),
            )?;
            let (train_acc, test_acc) = rec.time(format!("eval/{}/g{g_target}", init.name()), || {
                Ok((
                    knn1_accuracy(&pool.samples, &pool.labels, &d.train, &d.train_labels)?,
                    knn1_accuracy(&pool.samples, &pool.labels, &d.test, &d.test_labels)?,
                ))
            })?;
            let mut c = Cond {
                dataset: d.name.clone(),
                init: init.name().into(),
                architecture: arch.to_string(),
                g: Some(per_machine * classes),
                condition: format!("g_{gi}"),
                split: "train".into(),
                ..Default::default()
            };
            rec.push(&c, "knn1_accuracy", train_acc);
            c.split = "test".into();
            rec.push(&c, "knn1_accuracy", test_acc);
            rec.push(&c, "improvement_factor", improvement_factor(test_acc, base)?);
            rec.push(&c, "reaches_baseline", if test_acc >= base { 1.0 } else { 0.0 });
            if gi + 1 == t.g_schedule.len() {
                rec.samples(&format!("{}_g{g_target}", init.name()), d.side, &pool.samples);
            }
        }
    }
    Ok(())
}

fn multi_dataset<T: Real>(cfg: &ExperimentConfig, rec: &mut Recorder, dry: bool) -> Result<()> {
    let seed = cfg.seed()?;
    let m = &cfg.multi_dataset;
    let mut prepared = Vec::with_capacity(m.datasets.len());
    for (di, entry) in m.datasets.iter().enumerate() {
        let field = format!("multi_dataset.datasets[{di}]");
        let data = load_splits::<T>(&format!("{field}.data"), &entry.data)?;
        let d = labelled(&data, &format!("{field}.data.test_images"))?;
        let sizes: Vec<usize> = std::iter::once(d.side * d.side).chain(entry.hidden.iter().copied()).collect();
        let arch = architecture(&format!("{field}.hidden"), &sizes)?;
        if cfg.model.inits.contains(&InitKind::Pyramid) && !arch.is_pyramid_compatible() {
            return Err(ExpError::config(
                format!("{field}.hidden"),
                format!("{arch} is not pyramid-compatible"),
            ));
        }
        prepared.push((d, arch));
    }
    if dry {
        return Ok(());
    }

    for (di, (d, arch)) in prepared.iter().enumerate() {
        let base = baseline(rec, d)?;
        let per_machine = m.g / d.classes.len();
        for (ci, &init) in cfg.model.inits.iter().enumerate() {
            let label = format!("{}/{}", d.name, init.name());
            let machines = rec.time(format!("train/{label}"), || {
                train_class_machines(cfg, arch, init, &d.classes, derive_seed(seed, &[SALT_MACHINE, di as u64]))
            })?;
            let pool = generate_pool(
                cfg,
                &machines,
                per_machine,
                derive_seed(seed, &[SALT_GENERATE, di as u64, ci as u64]),
            )?;
            let (test_acc, diversity, novel) = rec.time(format!("eval/{label}"), || {
                Ok((
                    knn1_accuracy(&pool.samples, &pool.labels, &d.test, &d.test_labels)?,
                    adm(&pool.samples)?,
                    novelty(&d.train, &pool.samples)?,
                ))
            })?;
            let mut c = Cond {
                dataset: d.name.clone(),
                init: init.name().into(),
                architecture: arch.to_string(),
                g: Some(per_machine * d.classes.len()),
                condition: "generated".into(),
                split: "test".into(),
                ..Default::default()
            };
            rec.push(&c, "knn1_accuracy", test_acc);
            rec.push(&c, "improvement_factor", improvement_factor(test_acc, base)?);
            c.split = String::new();
            rec.push(&c, "adm", diversity);
            rec.push(&c, "novelty", novel);
            rec.samples(&format!("{}_{}", d.name, init.name()), d.side, &pool.samples);
        }
    }
    Ok(())
}

//! Softmax-regression probe over recognition activations.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::machine::HelmholtzMachine;
use crate::numerics::{axpy, derive_seed, dot, Real, RngStream};

/// Samples per gradient chunk. Fixed so the reduction order does not depend
/// on the number of threads.
const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeHyper {
    pub iterations: usize,
    pub step: f64,
    /// Only used when `init_sigma > 0`.
    pub seed: u64,
    /// Standard deviation of the initial weights; 0 means zero init.
    pub init_sigma: f64,
    /// Z-score every feature with train-set statistics before fitting.
    pub standardize: bool,
}

impl Default for ProbeHyper {
    fn default() -> Self {
        Self {
            iterations: 200,
            step: 0.5,
            seed: 0,
            init_sigma: 0.0,
            standardize: true,
        }
    }
}

/// Multinomial logistic regression: `classes × (features + 1)` weights,
/// row-major with the bias last, plus the input standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeModel<T> {
    pub classes: usize,
    pub weights: Vec<T>,
    pub offset: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> ProbeModel<T> {
    fn width(&self) -> usize {
        self.offset.len() + 1
    }

    fn augment(&self, x: &[T]) -> Vec<T> {
        let mut a: Vec<T> = x
            .iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((&v, &o), &s)| (v - o) * s)
            .collect();
        a.push(T::one());
        a
    }

    fn logits(&self, augmented: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.width())
            .map(|w| dot(w, augmented))
            .collect()
    }

    pub fn predict(&self, x: &[T]) -> u8 {
        argmax(&self.logits(&self.augment(x))) as u8
    }

    pub fn accuracy(&self, features: &[Vec<T>], labels: &[u8]) -> f64 {
        let correct = features
            .par_iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        correct as f64 / features.len().max(1) as f64
    }

    /// Mean cross-entropy in nats.
    pub fn loss(&self, features: &[Vec<T>], labels: &[u8]) -> f64 {
        let augmented: Vec<Vec<T>> = features.iter().map(|x| self.augment(x)).collect();
        self.loss_augmented(&augmented, labels)
    }

    fn loss_augmented(&self, augmented: &[Vec<T>], labels: &[u8]) -> f64 {
        let total: f64 = augmented
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let p = softmax(&self.logits(x));
                -(p[y as usize].as_f64().max(1e-300)).ln()
            })
            .sum();
        total / augmented.len() as f64
    }
}

fn argmax<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn probe_train<T: Real>(features: &[Vec<T>], labels: &[u8], hyper: &ProbeHyper) -> Result<ProbeModel<T>> {
    Ok(probe_train_traced(features, labels, hyper)?.0)
}

/// Full-batch gradient descent on the mean cross-entropy. Also returns the
/// loss before every iteration and after the last one.
pub fn probe_train_traced<T: Real>(
    features: &[Vec<T>],
    labels: &[u8],
    hyper: &ProbeHyper,
) -> Result<(ProbeModel<T>, Vec<f64>)> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::dim("probe_train labels", features.len(), labels.len()));
    }
    let dim = features[0].len();
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::dim("probe_train features", dim, f.len()));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("probe needs at least two classes".into()));
    }
    let classes = *distinct.last().unwrap() as usize + 1;
    let n = features.len();

    let (offset, scale) = if hyper.standardize {
        standardization(features)
    } else {
        (vec![T::zero(); dim], vec![T::one(); dim])
    };
    let mut model = ProbeModel {
        classes,
        weights: vec![T::zero(); classes * (dim + 1)],
        offset,
        scale,
    };
    if hyper.init_sigma > 0.0 {
        let mut rng = RngStream::new(derive_seed(hyper.seed, &[0]), 0);
        model
            .weights
            .iter_mut()
            .for_each(|w| *w = T::of(rng.gaussian(hyper.init_sigma)));
    }
    let augmented: Vec<Vec<T>> = features.iter().map(|x| model.augment(x)).collect();
    let width = dim + 1;
    let step = T::of(hyper.step / n as f64);

    let mut trace = Vec::with_capacity(hyper.iterations + 1);
    for _ in 0..hyper.iterations {
        let partials: Vec<(Vec<T>, f64)> = augmented
            .par_chunks(CHUNK)
            .zip(labels.par_chunks(CHUNK))
            .map(|(xs, ys)| {
                let mut grad = vec![T::zero(); classes * width];
                let mut loss = 0.0;
                for (x, &y) in xs.iter().zip(ys) {
                    let mut p = softmax(&model.logits(x));
                    loss -= p[y as usize].as_f64().max(1e-300).ln();
                    p[y as usize] -= T::one();
                    for (c, &pc) in p.iter().enumerate() {
                        axpy(pc, x, &mut grad[c * width..(c + 1) * width]);
                    }
                }
                (grad, loss)
            })
            .collect();
        let mut grad = vec![T::zero(); classes * width];
        let mut loss = 0.0;
        for (g, l) in partials {
            grad.iter_mut().zip(&g).for_each(|(a, &b)| *a += b);
            loss += l;
        }
        trace.push(loss / n as f64);
        axpy(-step, &grad, &mut model.weights);
    }
    trace.push(model.loss_augmented(&augmented, labels));
    Ok((model, trace))
}

fn standardization<T: Real>(features: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let dim = features[0].len();
    let n = features.len() as f64;
    let mut mean = vec![0.0f64; dim];
    let mut sq = vec![0.0f64; dim];
    for f in features {
        for (j, &x) in f.iter().enumerate() {
            let x = x.as_f64();
            mean[j] += x;
            sq[j] += x * x;
        }
    }
    let offset = mean.iter().map(|&m| T::of(m / n)).collect();
    let scale = mean
        .iter()
        .zip(&sq)
        .map(|(&m, &s)| {
            let var = (s / n - (m / n).powi(2)).max(0.0);
            // Constant features stay at zero after centring.
            T::of(if var > 1e-12 { 1.0 / var.sqrt() } else { 1.0 })
        })
        .collect();
    (offset, scale)
}

/// Which recognition activations become probe features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureMode {
    /// Deterministic mean-field firing probabilities.
    Probabilities,
    /// One stochastic recognition sample per pattern, from stream
    /// `(seed, pattern index)`.
    Samples { seed: u64 },
}

/// Recognition activations of every hidden layer, per pattern.
pub fn layer_features<T: Real>(
    machine: &HelmholtzMachine<T>,
    patterns: &[Vec<u8>],
    mode: FeatureMode,
) -> Result<Vec<Vec<Vec<T>>>> {
    patterns
        .par_iter()
        .enumerate()
        .map(|(i, p)| match mode {
            FeatureMode::Probabilities => {
                let visible: Vec<T> = p.iter().map(|&b| T::from_u8(b).unwrap()).collect();
                machine.recognition_probs(&visible)
            }
            FeatureMode::Samples { seed } => {
                let mut rng = RngStream::new(seed, i as u64);
                let states = machine.recognition_sample(p, &mut rng)?;
                Ok(states.layers[1..]
                    .iter()
                    .map(|l| l.iter().map(|&b| T::from_u8(b).unwrap()).collect())
                    .collect())
            }
        })
        .collect()
}

/// Builds the named subset (`layer_k` or `concat_1_k`) from
/// [`layer_features`] output.
pub fn feature_subset<T: Real>(layers: &[Vec<Vec<T>>], name: &str) -> Result<Vec<Vec<T>>> {
    let depth = layers.first().map(Vec::len).unwrap_or(0);
    let parse = |prefix: &str| {
        name.strip_prefix(prefix)
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| (1..=depth).contains(&k))
    };
    if let Some(k) = parse("layer_") {
        Ok(layers.iter().map(|l| l[k - 1].clone()).collect())
    } else if let Some(k) = parse("concat_1_") {
        Ok(layers.iter().map(|l| l[..k].concat()).collect())
    } else {
        Err(Error::precondition(format!(
            "unknown feature subset {name:?} for {depth} hidden layers"
        )))
    }
}

/// Features per hidden layer (`layer_k`) and per prefix concatenation of
/// layers `1..=k` (`concat_1_k`), one row per pattern.
pub fn probe_feature_sets<T: Real>(
    machine: &HelmholtzMachine<T>,
    patterns: &[Vec<u8>],
    mode: FeatureMode,
) -> Result<BTreeMap<String, Vec<Vec<T>>>> {
    let layers = layer_features(machine, patterns, mode)?;
    let mut sets = BTreeMap::new();
    for k in 1..=machine.arch().depth() {
        for name in [format!("layer_{k}"), format!("concat_1_{k}")] {
            let set = feature_subset(&layers, &name)?;
            sets.insert(name, set);
        }
    }
    Ok(sets)
}

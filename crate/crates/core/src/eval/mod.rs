//! Nearest-neighbour classification, generative replication metrics and
//! the logistic-regression probe.
//!
//! Distances are euclidean on real vectors; nearest-neighbour ties resolve
//! to the lowest pool index. Searches run in parallel over queries and are
//! merged in input order, so results do not depend on the thread count.

mod probe;

pub use probe::{feature_subset, layer_features, probe_feature_sets, probe_train, probe_train_traced, FeatureMode, ProbeHyper, ProbeModel};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{squared_distance, Real};

/// Per-train-sample fraction of generated samples assigned to it.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityVector {
    pub fractions: Vec<f64>,
}

fn check_pool<T>(pool: &[Vec<T>], dim: usize, what: &'static str) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::precondition(format!("{what} is empty")));
    }
    if let Some(v) = pool.iter().find(|v| v.len() != dim) {
        return Err(Error::dim(what, dim, v.len()));
    }
    Ok(())
}

fn nearest_unchecked<T: Real>(sample: &[T], pool: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, squared_distance(sample, &pool[0]));
    for (i, p) in pool.iter().enumerate().skip(1) {
        let d = squared_distance(sample, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1.sqrt())
}

/// Index of the closest pool entry and its distance.
pub fn nearest_in_set<T: Real>(sample: &[T], pool: &[Vec<T>]) -> Result<(usize, T)> {
    check_pool(pool, sample.len(), "nearest_in_set pool")?;
    Ok(nearest_unchecked(sample, pool))
}

/// Nearest pool entry for every query, in query order.
pub fn assign_nearest<T: Real>(queries: &[Vec<T>], pool: &[Vec<T>]) -> Result<Vec<(usize, T)>> {
    let dim = pool.first().map(Vec::len).unwrap_or(0);
    check_pool(pool, dim, "reference pool")?;
    check_pool(queries, dim, "queries")?;
    Ok(queries.par_iter().map(|q| nearest_unchecked(q, pool)).collect())
}

pub fn density_vector<T: Real>(generated: &[Vec<T>], train: &[Vec<T>]) -> Result<DensityVector> {
    Ok(density_from_assignment(&assign_nearest(generated, train)?, train.len()))
}

pub fn density_from_assignment<T>(assignment: &[(usize, T)], n: usize) -> DensityVector {
    let mut counts = vec![0usize; n];
    for &(i, _) in assignment {
        counts[i] += 1;
    }
    let g = assignment.len() as f64;
    DensityVector {
        fractions: counts.into_iter().map(|c| c as f64 / g).collect(),
    }
}

/// Shannon entropy of the density vector in nats, `0 ln 0 = 0`.
pub fn entropy(dv: &DensityVector) -> f64 {
    -dv.fractions
        .iter()
        .filter(|&&f| f > 0.0)
        .map(|&f| f * f.ln())
        .sum::<f64>()
}

/// Entropy divided by `ln N`: 1 for a uniform density, 0 for a point mass.
pub fn normalized_entropy(dv: &DensityVector) -> Result<f64> {
    let n = dv.fractions.len();
    if n < 2 {
        return Err(Error::precondition(format!(
            "normalized entropy needs at least 2 train samples, got {n}"
        )));
    }
    Ok((entropy(dv) / (n as f64).ln()).clamp(0.0, 1.0))
}

/// Train samples no generated sample was assigned to.
pub fn unrepresented_count(dv: &DensityVector) -> usize {
    dv.fractions.iter().filter(|&&f| f == 0.0).count()
}

fn mean_of<T: Real>(xs: impl Iterator<Item = T>, n: usize) -> f64 {
    xs.map(Real::as_f64).sum::<f64>() / n as f64
}

/// Mean over generated samples of the distance to the closest train sample.
pub fn mean_min_distance<T: Real>(generated: &[Vec<T>], train: &[Vec<T>]) -> Result<f64> {
    let a = assign_nearest(generated, train)?;
    Ok(mean_of(a.iter().map(|x| x.1), a.len()))
}

/// Average distance of generated samples to their componentwise mean.
pub fn adm<T: Real>(generated: &[Vec<T>]) -> Result<f64> {
    let dim = generated.first().map(Vec::len).unwrap_or(0);
    check_pool(generated, dim, "adm samples")?;
    let mut centre = vec![0.0f64; dim];
    for g in generated {
        for (c, x) in centre.iter_mut().zip(g) {
            *c += x.as_f64();
        }
    }
    let n = generated.len() as f64;
    centre.iter_mut().for_each(|c| *c /= n);
    let total: f64 = generated
        .par_iter()
        .map(|g| {
            g.iter()
                .zip(&centre)
                .map(|(x, c)| (x.as_f64() - c).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total / n)
}

/// Sum over train samples of the distance to the closest generated sample.
pub fn novelty<T: Real>(train: &[Vec<T>], generated: &[Vec<T>]) -> Result<f64> {
    let a = assign_nearest(train, generated)?;
    Ok(a.iter().map(|x| x.1.as_f64()).sum())
}

pub fn knn1_classify<T: Real>(train: &[Vec<T>], labels: &[u8], query: &[T]) -> Result<u8> {
    if labels.len() != train.len() {
        return Err(Error::dim("knn1 labels", train.len(), labels.len()));
    }
    Ok(labels[nearest_in_set(query, train)?.0])
}

pub fn knn1_predict<T: Real>(train: &[Vec<T>], labels: &[u8], queries: &[Vec<T>]) -> Result<Vec<u8>> {
    if labels.len() != train.len() {
        return Err(Error::dim("knn1 labels", train.len(), labels.len()));
    }
    Ok(assign_nearest(queries, train)?
        .into_iter()
        .map(|(i, _)| labels[i])
        .collect())
}

pub fn knn1_accuracy<T: Real>(
    train: &[Vec<T>],
    labels: &[u8],
    test: &[Vec<T>],
    test_labels: &[u8],
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::precondition("knn1 test set is empty"));
    }
    if test_labels.len() != test.len() {
        return Err(Error::dim("knn1 test labels", test.len(), test_labels.len()));
    }
    let predicted = knn1_predict(train, labels, test)?;
    let correct = predicted.iter().zip(test_labels).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / test.len() as f64)
}

/// Ratio of generated-data 1-NN accuracy to train-set 1-NN accuracy.
pub fn improvement_factor(acc_generated: f64, acc_baseline: f64) -> Result<f64> {
    if acc_baseline <= 0.0 {
        return Err(Error::Domain(format!(
            "baseline accuracy must be positive, got {acc_baseline}"
        )));
    }
    Ok(acc_generated / acc_baseline)
}

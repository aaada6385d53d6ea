use hm_core::datasets::{load_cifar10, load_idx, Dataset};
use hm_core::Real;

use crate::config::{DataConfig, DataFormat, SubsetMode};
use crate::error::{DataContext, ExpError, Result};

#[derive(Clone, Debug)]
pub struct Splits<T> {
    pub train: Dataset<T>,
    pub test: Option<Dataset<T>>,
}

impl<T: Real> Splits<T> {
    pub fn test(&self, field: &str) -> Result<&Dataset<T>> {
        self.test
            .as_ref()
            .ok_or_else(|| ExpError::config(field, "this experiment needs a test split"))
    }
}

/// Loads the configured splits and trims them to `train_size` / `test_size`.
pub fn load_splits<T: Real>(field: &str, d: &DataConfig) -> Result<Splits<T>> {
    let (train, test) = match d.format {
        DataFormat::Idx => {
            let images = d
                .train_images
                .as_deref()
                .ok_or_else(|| ExpError::config(format!("{field}.train_images"), "missing"))?;
            let train = load_idx(images, d.train_labels.as_deref()).data_err()?;
            let test = match &d.test_images {
                Some(p) => Some(load_idx(p, d.test_labels.as_deref()).data_err()?),
                None => None,
            };
            (train, test)
        }
        DataFormat::Cifar10 => {
            let train = load_cifar10(&d.train_batches).data_err()?;
            let test = if d.test_batches.is_empty() {
                None
            } else {
                Some(load_cifar10(&d.test_batches).data_err()?)
            };
            (train, test)
        }
    };
    let train = trim(format!("{field}.train_size"), train, d.train_size, d)?;
    let test = match test {
        Some(t) => Some(trim(format!("{field}.test_size"), t, d.test_size, d)?),
        None => None,
    };
    let mut train = train;
    train.name = d.name.clone();
    Ok(Splits { train, test })
}

fn trim<T: Real>(field: String, ds: Dataset<T>, size: Option<usize>, d: &DataConfig) -> Result<Dataset<T>> {
    let Some(n) = size else { return Ok(ds) };
    if n > ds.len() {
        return Err(ExpError::config(
            field,
            format!("asks for {n} images but {} has only {}", d.name, ds.len()),
        ));
    }
    Ok(match d.subset {
        SubsetMode::Head => ds.head(n),
        SubsetMode::Shuffled => ds.shuffled_head(n, d.subset_seed),
    })
}

//! Image pyramids and staged freeze-and-grow pretraining.
//!
//! Stage `t` (counted from the top) trains the pair between layers `L-t`
//! and `L-t+1` on images downsampled to the side of layer `L-t`. Everything
//! learned in earlier stages stays frozen but still participates in sampling.
//! After the last stage the whole machine is fine-tuned on full resolution.

use crate::error::{Error, Result};
use crate::machine::{Architecture, FrozenMask, HelmholtzMachine, TrainConfig};
use crate::numerics::{derive_seed, Real, RngStream};

/// Square grayscale image with pixels in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    side: usize,
    pixels: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(side: usize, pixels: Vec<T>) -> Result<Self> {
        if side == 0 {
            return Err(Error::precondition("image side must be positive"));
        }
        if pixels.len() != side * side {
            return Err(Error::dim("Image::new", side * side, pixels.len()));
        }
        if let Some(p) = pixels.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
            return Err(Error::precondition(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Self { side, pixels })
    }

    pub fn constant(side: usize, value: T) -> Result<Self> {
        Self::new(side, vec![value; side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.pixels[row * self.side + col]
    }

    pub fn mean(&self) -> T {
        self.pixels.iter().copied().sum::<T>() / T::from_usize(self.pixels.len()).unwrap()
    }
}

/// Row `i` holds the weights of source pixels for output pixel `i` along one
/// axis. Output box `[i a/b, (i+1) a/b)` is measured in units of `1/b` so
/// every overlap is an exact integer before the final division by `a`.
fn axis_weights(a: usize, b: usize) -> Vec<Vec<(usize, f64)>> {
    (0..b)
        .map(|i| {
            let (lo, hi) = (i * a, (i + 1) * a);
            (lo / b..hi.div_ceil(b).min(a))
                .filter_map(|p| {
                    let overlap = hi.min((p + 1) * b).saturating_sub(lo.max(p * b));
                    (overlap > 0).then(|| (p, overlap as f64 / a as f64))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted box resampling to `target_side × target_side`.
pub fn downsample<T: Real>(img: &Image<T>, target_side: usize) -> Result<Image<T>> {
    let a = img.side;
    if target_side == 0 || target_side > a {
        return Err(Error::precondition(format!(
            "target side {target_side} outside 1..={a}"
        )));
    }
    if target_side == a {
        return Ok(img.clone());
    }
    let b = target_side;
    let w = axis_weights(a, b);
    // Horizontal pass: a rows × b cols, then vertical: b × b.
    let mut tmp = vec![0.0f64; a * b];
    for r in 0..a {
        for (j, wj) in w.iter().enumerate() {
            tmp[r * b + j] = wj.iter().map(|&(p, wt)| wt * img.get(r, p).as_f64()).sum();
        }
    }
    let mut out = Vec::with_capacity(b * b);
    for wi in &w {
        for j in 0..b {
            let v: f64 = wi.iter().map(|&(p, wt)| wt * tmp[p * b + j]).sum();
            out.push(T::of(v.clamp(0.0, 1.0)));
        }
    }
    Ok(Image { side: b, pixels: out })
}

/// One level per requested side, each downsampled from the original.
pub fn build_pyramid<T: Real>(img: &Image<T>, sides: &[usize]) -> Result<Vec<Image<T>>> {
    if sides.is_empty() {
        return Err(Error::precondition("no pyramid sides requested"));
    }
    if sides.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::precondition(format!(
            "pyramid sides must be strictly decreasing, got {sides:?}"
        )));
    }
    if sides[0] > img.side {
        return Err(Error::precondition(format!(
            "largest side {} exceeds image side {}",
            sides[0], img.side
        )));
    }
    sides.iter().map(|&s| downsample(img, s)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinarizeMode {
    /// `pixel > threshold`.
    Threshold,
    /// Pixel value used as a Bernoulli probability.
    Stochastic,
}

pub fn binarize<T: Real>(
    img: &Image<T>,
    mode: BinarizeMode,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<Vec<u8>> {
    match mode {
        BinarizeMode::Threshold => {
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(Error::precondition(format!(
                    "threshold {threshold} outside (0, 1)"
                )));
            }
            Ok(img.pixels.iter().map(|p| (p.as_f64() > threshold) as u8).collect())
        }
        BinarizeMode::Stochastic => Ok(img.pixels.iter().map(|p| rng.bit(p.as_f64())).collect()),
    }
}

/// Weights the staged procedure starts from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseInit {
    Zero,
    Random { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageConfig {
    pub stage_epochs: usize,
    pub stage_learning_rate: f64,
    pub binarize: BinarizeMode,
    pub threshold: f64,
    pub finetune_epochs: usize,
    pub finetune_learning_rate: f64,
    pub shuffle: bool,
    pub base: BaseInit,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            stage_epochs: 1,
            stage_learning_rate: crate::machine::DEFAULT_LEARNING_RATE,
            binarize: BinarizeMode::Threshold,
            threshold: 0.5,
            finetune_epochs: 1,
            finetune_learning_rate: crate::machine::DEFAULT_LEARNING_RATE,
            shuffle: true,
            base: BaseInit::Random {
                sigma: crate::machine::DEFAULT_RANDOM_SIGMA,
            },
        }
    }
}

/// Downsamples every image to `side` and binarizes it once.
pub fn stage_data<T: Real>(
    data: &[Image<T>],
    side: usize,
    mode: BinarizeMode,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<Vec<Vec<u8>>> {
    data.iter()
        .map(|img| binarize(&downsample(img, side)?, mode, threshold, rng))
        .collect()
}

pub fn pyramid_pretrain<T: Real>(
    arch: &Architecture,
    data: &[Image<T>],
    cfg: &StageConfig,
    seed: u64,
) -> Result<HelmholtzMachine<T>> {
    pyramid_pretrain_with(arch, data, cfg, seed, |_, _| {})
}

/// Like [`pyramid_pretrain`], calling `observe(t, machine)` after the base
/// initialization (`t = 0`), after every stage `t = 1..=L`, and after
/// fine-tuning (`t = L + 1`).
pub fn pyramid_pretrain_with<T: Real>(
    arch: &Architecture,
    data: &[Image<T>],
    cfg: &StageConfig,
    seed: u64,
    mut observe: impl FnMut(usize, &HelmholtzMachine<T>),
) -> Result<HelmholtzMachine<T>> {
    let sides = arch.image_sides()?;
    if data.is_empty() {
        return Err(Error::precondition("pyramid pretraining needs training images"));
    }
    if let Some(img) = data.iter().find(|img| img.side() != sides[0]) {
        return Err(Error::dim("pyramid_pretrain image side", sides[0], img.side()));
    }

    let mut machine = match cfg.base {
        BaseInit::Zero => HelmholtzMachine::zeros(arch),
        BaseInit::Random { sigma } => HelmholtzMachine::random(arch, sigma, seed)?,
    };
    observe(0, &machine);

    let depth = arch.depth();
    for t in 1..=depth {
        let base = depth - t;
        let stage_seed = derive_seed(seed, &[t as u64]);
        if cfg.stage_epochs > 0 {
            let patterns = stage_data(
                data,
                sides[base],
                cfg.binarize,
                cfg.threshold,
                &mut RngStream::new(stage_seed, 1),
            )?;
            let mut sub = machine.substack(base)?;
            let mut mask = FrozenMask::all(t);
            mask.recognition[0] = false;
            mask.generative[0] = false;
            mask.top_bias = t != 1;
            sub.set_frozen_mask(mask);
            sub.train(
                &patterns,
                &TrainConfig {
                    epochs: cfg.stage_epochs,
                    learning_rate: cfg.stage_learning_rate,
                    seed: stage_seed,
                    shuffle: cfg.shuffle,
                },
            )?;
            machine.write_substack(base, &sub)?;
        }
        observe(t, &machine);
    }

    if cfg.finetune_epochs > 0 {
        let finetune_seed = derive_seed(seed, &[depth as u64 + 1]);
        let patterns = stage_data(
            data,
            sides[0],
            cfg.binarize,
            cfg.threshold,
            &mut RngStream::new(finetune_seed, 1),
        )?;
        machine.train(
            &patterns,
            &TrainConfig {
                epochs: cfg.finetune_epochs,
                learning_rate: cfg.finetune_learning_rate,
                seed: finetune_seed,
                shuffle: cfg.shuffle,
            },
        )?;
    }
    machine.unfreeze_all();
    observe(depth + 1, &machine);
    Ok(machine)
}

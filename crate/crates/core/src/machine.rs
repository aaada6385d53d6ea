//! Helmholtz machine state and the wake-sleep learning rule.
//!
//! Layer 0 is the visible layer, layer `L` the top. `R_k` maps layer `k-1`
//! up to layer `k`, `G_k` maps layer `k` down to layer `k-1`. Both carry
//! their bias as the last input column (a constant-1 unit). The top layer's
//! generative prior is the separate `top_bias` vector.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Real, RngStream};
use crate::pyramid::{pyramid_pretrain, Image, StageConfig};

/// Ordered layer sizes, visible first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Architecture {
    sizes: Vec<usize>,
}

impl Architecture {
    pub fn new(sizes: impl Into<Vec<usize>>) -> Result<Self> {
        let sizes = sizes.into();
        if sizes.len() < 2 {
            return Err(Error::Architecture(format!(
                "need a visible and at least one hidden layer, got {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Architecture(format!(
                "layer sizes must be positive, got {sizes:?}"
            )));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn visible(&self) -> usize {
        self.sizes[0]
    }

    pub fn top(&self) -> usize {
        self.sizes[self.depth()]
    }

    pub fn hidden_units(&self) -> usize {
        self.sizes[1..].iter().sum()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] > w[1])
    }

    /// Every layer below the top must be a square image size and sizes must
    /// shrink towards the top.
    pub fn is_pyramid_compatible(&self) -> bool {
        self.is_strictly_decreasing()
            && self.sizes[..self.depth()]
                .iter()
                .all(|&s| exact_sqrt(s).is_some())
    }

    /// Image side for layers `0..L`, i.e. every layer except the top.
    pub fn image_sides(&self) -> Result<Vec<usize>> {
        if !self.is_pyramid_compatible() {
            return Err(Error::Architecture(format!(
                "{self} is not pyramid compatible: layers below the top must be \
                 strictly decreasing perfect squares"
            )));
        }
        Ok(self.sizes[..self.depth()]
            .iter()
            .map(|&s| exact_sqrt(s).unwrap())
            .collect())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

pub(crate) fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Number of free weights: top bias plus one direction of every weight
/// matrix, connection biases excluded.
pub fn count_free_parameters(arch: &Architecture) -> u64 {
    let s = arch.sizes();
    let weights: u64 = s.windows(2).map(|w| (w[0] * w[1]) as u64).sum();
    arch.top() as u64 + weights
}

/// Dense weight block stored input-major: column `c` (one input unit, the
/// last column being the bias) is contiguous, so binary inputs reduce the
/// forward pass and the delta rule to sums over active columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Builds from row-major values.
    pub fn from_rows(rows: usize, cols: usize, values: &[T]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dim("Matrix::from_rows", rows * cols, values.len()));
        }
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, values[r * cols + c]);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn column(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    fn column_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Values in row-major order.
    pub fn to_rows(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    fn bias(&self) -> &[T] {
        self.column(self.cols - 1)
    }

    /// `out = W · [x; 1]` for a binary `x` given by its active indices.
    fn drive_active(&self, active: &[usize], out: &mut [T]) {
        out.copy_from_slice(self.bias());
        for &j in active {
            for (o, &w) in out.iter_mut().zip(self.column(j)) {
                *o += w;
            }
        }
    }

    /// `out = W · [x; 1]` for a real-valued `x`.
    fn drive_dense(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(self.bias());
        for (j, &xj) in x.iter().enumerate() {
            if xj != T::zero() {
                for (o, &w) in out.iter_mut().zip(self.column(j)) {
                    *o += xj * w;
                }
            }
        }
    }

    /// `W += delta ⊗ [x; 1]` for a binary `x` given by its active indices.
    fn add_outer_active(&mut self, delta: &[T], active: &[usize]) {
        let bias = self.cols - 1;
        for &j in active.iter().chain(std::iter::once(&bias)) {
            for (w, &d) in self.column_mut(j).iter_mut().zip(delta) {
                *w += d;
            }
        }
    }
}

/// One weight block of a machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    /// `R_k`, `k` in `1..=L`.
    Recognition(usize),
    /// `G_k`, `k` in `1..=L`.
    Generative(usize),
    TopBias,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrozenMask {
    pub recognition: Vec<bool>,
    pub generative: Vec<bool>,
    pub top_bias: bool,
}

impl FrozenMask {
    pub fn none(depth: usize) -> Self {
        Self {
            recognition: vec![false; depth],
            generative: vec![false; depth],
            top_bias: false,
        }
    }

    pub fn all(depth: usize) -> Self {
        Self {
            recognition: vec![true; depth],
            generative: vec![true; depth],
            top_bias: true,
        }
    }

    pub fn is_clear(&self) -> bool {
        !self.top_bias && !self.recognition.iter().chain(&self.generative).any(|&f| f)
    }
}

/// Binary state of every layer, visible first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerStates {
    pub layers: Vec<Vec<u8>>,
}

impl LayerStates {
    pub fn visible(&self) -> &[u8] {
        &self.layers[0]
    }

    pub fn top(&self) -> &[u8] {
        self.layers.last().unwrap()
    }
}

fn active_indices(bits: &[u8]) -> Vec<usize> {
    bits.iter()
        .enumerate()
        .filter_map(|(i, &b)| (b != 0).then_some(i))
        .collect()
}

fn sample_layer<T: Real>(drive: &[T], rng: &mut RngStream) -> Vec<u8> {
    drive
        .iter()
        .map(|&x| rng.bit(sigmoid(x).as_f64()))
        .collect()
}

fn check_binary(bits: &[u8], expected: usize, context: &'static str) -> Result<()> {
    if bits.len() != expected {
        return Err(Error::dim(context, expected, bits.len()));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::precondition(format!("{context}: pattern is not binary")));
    }
    Ok(())
}

/// Weight initialization scheme.
#[derive(Clone, Debug)]
pub enum InitSpec<'a, T> {
    Zero,
    Random {
        sigma: f64,
    },
    /// Staged image-pyramid pretraining on full-resolution images.
    Pyramid {
        stages: StageConfig,
        data: &'a [Image<T>],
    },
}

pub const DEFAULT_RANDOM_SIGMA: f64 = 0.05;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
            shuffle: true,
        }
    }
}

/// Recognition weights, generative weights, generative top bias and the
/// per-block freeze flags.
#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzMachine<T> {
    arch: Architecture,
    recognition: Vec<Matrix<T>>,
    generative: Vec<Matrix<T>>,
    top_bias: Vec<T>,
    frozen: FrozenMask,
}

pub fn init_machine<T: Real>(
    arch: &Architecture,
    init: &InitSpec<'_, T>,
    seed: u64,
) -> Result<HelmholtzMachine<T>> {
    match init {
        InitSpec::Zero => Ok(HelmholtzMachine::zeros(arch)),
        InitSpec::Random { sigma } => HelmholtzMachine::random(arch, *sigma, seed),
        InitSpec::Pyramid { stages, data } => pyramid_pretrain(arch, data, stages, seed),
    }
}

impl<T: Real> HelmholtzMachine<T> {
    pub fn zeros(arch: &Architecture) -> Self {
        let s = arch.sizes();
        let depth = arch.depth();
        Self {
            recognition: (1..=depth).map(|k| Matrix::zeros(s[k], s[k - 1] + 1)).collect(),
            generative: (1..=depth).map(|k| Matrix::zeros(s[k - 1], s[k] + 1)).collect(),
            top_bias: vec![T::zero(); arch.top()],
            frozen: FrozenMask::none(depth),
            arch: arch.clone(),
        }
    }

    /// i.i.d. `N(0, sigma²)` entries drawn from stream `(seed, 0)` in
    /// serialization order: `R_1..R_L`, `G_1..G_L` row-major, then `top_bias`.
    pub fn random(arch: &Architecture, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::precondition(format!(
                "random init sigma must be positive, got {sigma}"
            )));
        }
        let mut m = Self::zeros(arch);
        let mut rng = RngStream::new(seed, 0);
        for w in m.recognition.iter_mut().chain(m.generative.iter_mut()) {
            for r in 0..w.rows {
                for c in 0..w.cols {
                    w.set(r, c, T::of(rng.gaussian(sigma)));
                }
            }
        }
        for b in &mut m.top_bias {
            *b = T::of(rng.gaussian(sigma));
        }
        Ok(m)
    }

    /// Assembles a machine from explicit blocks (`R_k`, `G_k` in order).
    pub fn from_parts(
        arch: &Architecture,
        recognition: Vec<Matrix<T>>,
        generative: Vec<Matrix<T>>,
        top_bias: Vec<T>,
    ) -> Result<Self> {
        let s = arch.sizes();
        let depth = arch.depth();
        if recognition.len() != depth || generative.len() != depth {
            return Err(Error::dim(
                "HelmholtzMachine::from_parts blocks",
                depth,
                recognition.len().min(generative.len()),
            ));
        }
        for k in 1..=depth {
            let r = &recognition[k - 1];
            if (r.rows, r.cols) != (s[k], s[k - 1] + 1) {
                return Err(Error::dim("recognition block", s[k] * (s[k - 1] + 1), r.rows * r.cols));
            }
            let g = &generative[k - 1];
            if (g.rows, g.cols) != (s[k - 1], s[k] + 1) {
                return Err(Error::dim("generative block", s[k - 1] * (s[k] + 1), g.rows * g.cols));
            }
        }
        if top_bias.len() != arch.top() {
            return Err(Error::dim("top bias", arch.top(), top_bias.len()));
        }
        Ok(Self {
            arch: arch.clone(),
            recognition,
            generative,
            top_bias,
            frozen: FrozenMask::none(depth),
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    /// `R_1..R_L`; index `i` holds `R_{i+1}`.
    pub fn recognition(&self) -> &[Matrix<T>] {
        &self.recognition
    }

    /// `G_1..G_L`; index `i` holds `G_{i+1}`.
    pub fn generative(&self) -> &[Matrix<T>] {
        &self.generative
    }

    pub fn top_bias(&self) -> &[T] {
        &self.top_bias
    }

    pub fn recognition_mut(&mut self, k: usize) -> &mut Matrix<T> {
        &mut self.recognition[k - 1]
    }

    pub fn generative_mut(&mut self, k: usize) -> &mut Matrix<T> {
        &mut self.generative[k - 1]
    }

    pub fn top_bias_mut(&mut self) -> &mut [T] {
        &mut self.top_bias
    }

    pub fn frozen(&self) -> &FrozenMask {
        &self.frozen
    }

    pub fn set_frozen(&mut self, block: Block, frozen: bool) {
        match block {
            Block::Recognition(k) => self.frozen.recognition[k - 1] = frozen,
            Block::Generative(k) => self.frozen.generative[k - 1] = frozen,
            Block::TopBias => self.frozen.top_bias = frozen,
        }
    }

    pub fn set_frozen_mask(&mut self, mask: FrozenMask) {
        assert_eq!(mask.recognition.len(), self.arch.depth());
        assert_eq!(mask.generative.len(), self.arch.depth());
        self.frozen = mask;
    }

    pub fn unfreeze_all(&mut self) {
        self.frozen = FrozenMask::none(self.arch.depth());
    }

    pub fn is_finite(&self) -> bool {
        self.recognition
            .iter()
            .chain(&self.generative)
            .flat_map(|m| m.iter())
            .chain(&self.top_bias)
            .all(|w| w.is_finite())
    }

    /// Copy of the layers `base..=L` as a standalone machine whose visible
    /// layer is layer `base`. Freeze flags are carried along.
    pub fn substack(&self, base: usize) -> Result<Self> {
        let depth = self.arch.depth();
        if base >= depth {
            return Err(Error::precondition(format!(
                "substack base {base} must be below the top layer {depth}"
            )));
        }
        Ok(Self {
            arch: Architecture::new(&self.arch.sizes()[base..])?,
            recognition: self.recognition[base..].to_vec(),
            generative: self.generative[base..].to_vec(),
            top_bias: self.top_bias.clone(),
            frozen: FrozenMask {
                recognition: self.frozen.recognition[base..].to_vec(),
                generative: self.frozen.generative[base..].to_vec(),
                top_bias: self.frozen.top_bias,
            },
        })
    }

    /// Writes the weights of a machine produced by [`Self::substack`] back.
    pub fn write_substack(&mut self, base: usize, sub: &Self) -> Result<()> {
        if sub.arch.sizes() != &self.arch.sizes()[base..] {
            return Err(Error::Architecture(format!(
                "substack {} does not match layers {base}.. of {}",
                sub.arch, self.arch
            )));
        }
        self.recognition[base..].clone_from_slice(&sub.recognition);
        self.generative[base..].clone_from_slice(&sub.generative);
        self.top_bias.clone_from(&sub.top_bias);
        Ok(())
    }

    fn sample_up(&self, visible: &[u8], rng: &mut RngStream) -> LayerStates {
        let mut layers = Vec::with_capacity(self.arch.depth() + 1);
        layers.push(visible.to_vec());
        for r in &self.recognition {
            let below = layers.last().unwrap();
            let mut drive = vec![T::zero(); r.rows];
            r.drive_active(&active_indices(below), &mut drive);
            layers.push(sample_layer(&drive, rng));
        }
        LayerStates { layers }
    }

    /// Samples the dream and returns the visible firing probabilities too.
    fn sample_down(&self, rng: &mut RngStream) -> (LayerStates, Vec<T>) {
        let depth = self.arch.depth();
        let mut layers = vec![Vec::new(); depth + 1];
        layers[depth] = sample_layer(&self.top_bias, rng);
        let mut visible_probs = Vec::new();
        for k in (1..=depth).rev() {
            let g = &self.generative[k - 1];
            let mut drive = vec![T::zero(); g.rows];
            g.drive_active(&active_indices(&layers[k]), &mut drive);
            layers[k - 1] = sample_layer(&drive, rng);
            if k == 1 {
                visible_probs = drive.into_iter().map(sigmoid).collect();
            }
        }
        (LayerStates { layers }, visible_probs)
    }

    /// Bottom-up stochastic pass: `h_k ~ Bernoulli(σ(R_k · [h_{k-1}; 1]))`,
    /// draws consumed layer by layer, unit by unit.
    pub fn recognition_sample(&self, visible: &[u8], rng: &mut RngStream) -> Result<LayerStates> {
        check_binary(visible, self.arch.visible(), "recognition_sample")?;
        Ok(self.sample_up(visible, rng))
    }

    /// Mean-field upward pass feeding probabilities, not samples, to the
    /// next layer. Consumes no randomness.
    pub fn recognition_probs(&self, visible: &[T]) -> Result<Vec<Vec<T>>> {
        if visible.len() != self.arch.visible() {
            return Err(Error::dim("recognition_probs", self.arch.visible(), visible.len()));
        }
        let mut out: Vec<Vec<T>> = Vec::with_capacity(self.arch.depth());
        for r in &self.recognition {
            let input = out.last().map(Vec::as_slice).unwrap_or(visible);
            let mut drive = vec![T::zero(); r.rows];
            r.drive_dense(input, &mut drive);
            out.push(drive.into_iter().map(sigmoid).collect());
        }
        Ok(out)
    }

    /// Top-down ancestral sample from the generative model.
    pub fn generative_dream(&self, rng: &mut RngStream) -> LayerStates {
        self.sample_down(rng).0
    }

    /// Wake phase on one pattern: samples the recognition states, then moves
    /// every unfrozen generative block towards reproducing them. Returns the
    /// sampled states.
    pub fn wake_step(&mut self, visible: &[u8], learning_rate: T, rng: &mut RngStream) -> Result<LayerStates> {
        check_binary(visible, self.arch.visible(), "wake_step")?;
        let states = self.sample_up(visible, rng);
        self.wake_update(&states, learning_rate);
        Ok(states)
    }

    /// Generative delta rule for given states:
    /// `G_k += ε (h_{k-1} - σ(G_k [h_k; 1])) ⊗ [h_k; 1]`,
    /// `top_bias += ε (h_L - σ(top_bias))`.
    pub fn wake_update(&mut self, states: &LayerStates, learning_rate: T) {
        let depth = self.arch.depth();
        for k in 1..=depth {
            if self.frozen.generative[k - 1] {
                continue;
            }
            let g = &mut self.generative[k - 1];
            let active = active_indices(&states.layers[k]);
            let mut delta = vec![T::zero(); g.rows];
            g.drive_active(&active, &mut delta);
            for (d, &target) in delta.iter_mut().zip(&states.layers[k - 1]) {
                *d = learning_rate * (T::from_u8(target).unwrap() - sigmoid(*d));
            }
            g.add_outer_active(&delta, &active);
        }
        if !self.frozen.top_bias {
            for (b, &h) in self.top_bias.iter_mut().zip(states.top()) {
                *b += learning_rate * (T::from_u8(h).unwrap() - sigmoid(*b));
            }
        }
    }

    /// Sleep phase: dreams a full state top-down, then moves every unfrozen
    /// recognition block towards inferring it. Returns the dreamed states.
    pub fn sleep_step(&mut self, learning_rate: T, rng: &mut RngStream) -> LayerStates {
        let states = self.generative_dream(rng);
        self.sleep_update(&states, learning_rate);
        states
    }

    /// Recognition delta rule for given states:
    /// `R_k += ε (h_k - σ(R_k [h_{k-1}; 1])) ⊗ [h_{k-1}; 1]`.
    pub fn sleep_update(&mut self, states: &LayerStates, learning_rate: T) {
        for k in 1..=self.arch.depth() {
            if self.frozen.recognition[k - 1] {
                continue;
            }
            let r = &mut self.recognition[k - 1];
            let active = active_indices(&states.layers[k - 1]);
            let mut delta = vec![T::zero(); r.rows];
            r.drive_active(&active, &mut delta);
            for (d, &target) in delta.iter_mut().zip(&states.layers[k]) {
                *d = learning_rate * (T::from_u8(target).unwrap() - sigmoid(*d));
            }
            r.add_outer_active(&delta, &active);
        }
    }

    /// Per-pattern wake/sleep alternation for `config.epochs` epochs. All
    /// randomness (shuffling and unit sampling) comes from stream
    /// `(config.seed, 0)`.
    pub fn train(&mut self, data: &[Vec<u8>], config: &TrainConfig) -> Result<()> {
        if data.is_empty() {
            return Err(Error::precondition("training data is empty"));
        }
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::precondition(format!(
                "learning rate must be positive, got {}",
                config.learning_rate
            )));
        }
        for pattern in data {
            check_binary(pattern, self.arch.visible(), "train")?;
        }
        let eps = T::of(config.learning_rate);
        let mut rng = RngStream::new(config.seed, 0);
        let mut order: Vec<usize> = (0..data.len()).collect();
        for _ in 0..config.epochs {
            if config.shuffle {
                rng.shuffle(&mut order);
            }
            for &i in &order {
                let states = self.sample_up(&data[i], &mut rng);
                self.wake_update(&states, eps);
                self.sleep_step(eps, &mut rng);
            }
        }
        Ok(())
    }

    /// Dreams `count` patterns. Returns the sampled visible layer when
    /// `binary_output` is set, otherwise the visible firing probabilities
    /// `σ(G_1 [h_1; 1])`. Both modes consume identical draws.
    pub fn generate(&self, count: usize, rng: &mut RngStream, binary_output: bool) -> Result<Vec<Vec<T>>> {
        if count == 0 {
            return Err(Error::precondition("generate count must be at least 1"));
        }
        Ok((0..count)
            .map(|_| {
                let (states, probs) = self.sample_down(rng);
                if binary_output {
                    states.layers[0].iter().map(|&b| T::from_u8(b).unwrap()).collect()
                } else {
                    probs
                }
            })
            .collect())
    }
}

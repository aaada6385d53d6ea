//! Helmholtz machines trained with the wake-sleep algorithm, image-pyramid
//! initialization, dataset loaders and the evaluation battery used to
//! compare initializations.
//!
//! - [`numerics`]: scalar trait, seeded random streams, sigmoid, distances
//! - [`machine`]: architecture, machine state, wake/sleep updates, training
//! - [`pyramid`]: image pyramids and staged freeze-and-grow pretraining
//! - [`datasets`]: IDX and CIFAR-10 loaders
//! - [`eval`]: 1-NN, replication metrics, logistic-regression probe
//! - [`oracle`]: exact free energies of tiny machines by enumeration
//! - [`serialize`]: the `HMW1` weight file format
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below name the common instantiations.

pub mod datasets;
pub mod error;
pub mod eval;
pub mod machine;
pub mod numerics;
pub mod oracle;
pub mod pyramid;
pub mod serialize;

pub use error::{Error, Result};
pub use machine::{
    count_free_parameters, init_machine, Architecture, Block, FrozenMask, HelmholtzMachine, InitSpec,
    LayerStates, Matrix, TrainConfig,
};
pub use numerics::{make_rng, Real, RngStream};
pub use pyramid::{BaseInit, BinarizeMode, Image, StageConfig};

pub type Machine = HelmholtzMachine<f64>;
pub type Machine32 = HelmholtzMachine<f32>;
pub type Image64 = Image<f64>;
pub type Image32 = Image<f32>;
pub type Dataset64 = datasets::Dataset<f64>;
pub type Dataset32 = datasets::Dataset<f32>;

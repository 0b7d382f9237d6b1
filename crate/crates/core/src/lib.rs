//! Corpus-to-embeddings toolkit built around a shared view of word embedding
//! objectives: every supported model scores a (context, focal) word pair with
//! a kernel `psi` of its parameters and pushes that score toward a target
//! statistic of the cooccurrence counts. Training is full-batch gradient
//! descent over dense rectangular shards of the pair space; a sampling-based
//! solver for the exponential-family model is provided as an alternative.
//!
//! Pipeline stages, each usable on its own:
//!
//! * [`corpus`]: vocabulary extraction and windowed cooccurrence counting.
//! * [`stats`]: probabilities, PMI, and sharding of the pair space.
//! * [`losses`]: the five loss models and their gradients.
//! * [`trainer`]: Adam-based full-batch training over shards.
//! * [`sampler`]: positive/negative pair sampling and the sampled solver.
//! * [`eval`]: similarity, analogy, and nearest-neighbor evaluation.
//! * [`io`]: plain-text artifact formats and their validation.
//!
//! Model math is generic over the scalar type via [`Scalar`]; corpus
//! statistics are always kept in `f64`.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod losses;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for training and evaluation.
pub type Real = f64;

/// Model parameters at the default precision.
pub type RealParams = trainer::ModelParams<Real>;

/// Model parameters in single precision.
pub type Params32 = trainer::ModelParams<f32>;

//! Knowledge-aware two-layered attention for sentence-level sentiment
//! regression.
//!
//! The pieces, bottom up:
//!
//! - [`autodiff`]: a small reverse-mode differentiation tape over `f64` tensors.
//! - [`corpus`]: tokenizer plus loaders for datasets, embedding tables,
//!   distributional thesauri and sentiment lexicons.
//! - [`knowledge`]: knowledge-graph triplets with DistMult embeddings and
//!   thesaurus expansion, producing the relevant-term sets each token attends over.
//! - [`model`]: the BiLSTM encoder with word-level (knowledge) attention and
//!   sentence-level attention feeding a tanh regression head.
//! - [`trainer`]: MSE loss, Adam and the seeded multi-run training loop.
//! - [`features`] and [`svr`]: TF-IDF / lexicon / embedding features and an
//!   epsilon-SVR dual solver.
//! - [`ensemble`]: out-of-fold stacking and the MLP combiner.
//! - [`eval`]: cosine-similarity scoring, experiment orchestration and reports.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`.

pub mod autodiff;
pub mod checkpoint;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod io_util;
pub mod knowledge;
pub mod model;
pub mod selftest;
pub mod svr;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};

/// Seedable generator used for every stochastic step.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Creates the run generator for `seed`.
pub fn seeded_rng(seed: u64) -> Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

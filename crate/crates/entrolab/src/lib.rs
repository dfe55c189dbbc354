//! Empirical entropy over large alphabets.
//!
//! Computes order-`l` empirical entropy, stores probability distributions and
//! Markov models in sublinear space with bounded relative entropy, compresses
//! strings under those models with an arithmetic coder, and runs Monte Carlo
//! experiments around the incompressibility threshold for random strings.

pub mod codec;
pub mod entropy;
pub mod generators;
pub mod quantize;
pub mod sequence;
pub mod threshold;
pub mod varint;

pub use entropy::{ContextTable, Distribution, MarkovModel};
pub use sequence::Sequence;

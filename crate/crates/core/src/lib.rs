//! Stable matchings between `n` men and `n` women whose pairs are admissible
//! independently with probability `p`.
//!
//! The crate covers the whole experimental pipeline:
//!
//! * [`instance`]: seeded random instances, either fully materialized
//!   ([`DenseInstance`]) or generated on demand ([`LazyInstance`]) for large `n`;
//! * [`matching`]: the sequential proposal algorithm restricted to admissible
//!   pairs, stability verification and partner ranks;
//! * [`enumeration`]: brute-force enumeration of every stable partial matching
//!   of a small instance;
//! * [`analytic`]: Monte Carlo evaluation of the integral formulas for the
//!   expected number of complete stable matchings and its rank refinement;
//! * [`spacings`]: uniform spacings of `[0, 1]` with exact distribution oracles;
//! * [`experiments`]: parameter sweeps with CSV / JSONL output.
//!
//! All randomness flows through [`StreamSpec`], so every result is reproducible
//! and independent of the number of worker threads.

pub mod analytic;
pub mod enumeration;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod matching;
mod precise;
pub mod rng;
pub mod spacings;
pub mod stats;

pub use error::{Error, Result};
pub use instance::{DenseInstance, LazyInstance, LazyStrategy};
pub use matching::{MatchOutcome, Matching, Side};
pub use rng::{derive_stream, Stream, StreamSpec};
pub use stats::MCEstimate;

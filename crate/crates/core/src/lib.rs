//! Computer-algebra and simulation engine for operator-valued free
//! probability over finite-dimensional multi-matrix algebras.
//!
//! The crate provides, bottom-up:
//!
//! * [`algebra`] — multi-matrix algebras `⊕_k M_{d_k}(ℂ)`, conditional
//!   expectations, pinching constructions, and verification of the
//!   expectation axioms;
//! * [`poly`] — noncommutative *-polynomials in formal generators with
//!   algebra-valued coefficients interleaved between the letters;
//! * [`combinat`] — non-crossing pairings/partitions, Kreweras complements,
//!   and Möbius coefficients;
//! * [`engine`] — moment/cumulant calculus for families of operator-valued
//!   semicircular and circular generators: moments from covariances via the
//!   cumulant recurrence, an independent non-crossing pairing evaluator,
//!   cumulant extraction from moments, freeness tests, and the 2×2 matrix
//!   amplification machinery;
//! * [`fisher`] — conjugate systems, their verification, and the free
//!   Fisher information, including the matrix-assembly identities relating
//!   the Fisher information of a non-self-adjoint element to a 2×2 matrix
//!   model;
//! * [`frames`] — Hilbert-module inner products, tight frames, the index of
//!   a conditional expectation, and the frame-based transfer identities for
//!   conjugate variables under change of expectation;
//! * [`randmat`] — Monte-Carlo cross-checks against Gaussian random
//!   matrices;
//! * [`scenario`] — declarative TOML scenarios and the task runner behind
//!   the `ovfp` command-line tool.

pub mod algebra;
pub mod combinat;
pub mod engine;
pub mod error;
pub mod fisher;
pub mod frames;
pub mod poly;
pub mod randmat;
pub mod report;
pub mod scenario;

pub use error::{CoreError, Result};

use rand::SeedableRng;

/// The deterministic RNG used everywhere randomness is needed.
pub type Rng64 = rand_chacha::ChaCha8Rng;

/// A deterministic RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// A deterministic RNG for sample `stream` of a run seeded with `seed`;
/// distinct streams are independent, and results do not depend on the order
/// in which streams are consumed.
pub fn stream_rng(seed: u64, stream: u64) -> Rng64 {
    let mut rng = Rng64::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

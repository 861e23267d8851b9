//! Moment/cumulant calculus for families of operator-valued generators.
//!
//! The engine is organized around two abstractions:
//!
//! * a [`CumulantRule`] answers "what is the joint cumulant
//!   `k^{(s)}(ℓ₁·b₁, ℓ₂·b₂, …, ℓ_s)` of these letters with these interleaved
//!   middle coefficients"; moments are then computed from the rule by the
//!   gap recurrence in [`eval`];
//! * a [`MomentOracle`] answers "what is the expected value of this
//!   polynomial" — implemented by symbolic distributions
//!   ([`spec::DistributionSpec`]), by 2×2 matrix amplifications
//!   ([`matrix::MatrixScene`]), and by Monte-Carlo estimators.
//!
//! Cumulant extraction ([`cumulant`]) inverts the recurrence, turning any
//! oracle back into a numeric cumulant table, with an independent
//! Möbius-sum evaluator used for cross-checks and for cumulants of
//! polynomial (non-letter) arguments.

pub mod cumulant;
pub mod eval;
pub mod freeness;
pub mod matrix;
pub mod spec;

use crate::algebra::{AlgebraElement, CondExpectation, MultiMatrixAlgebra};
use crate::poly::{Letter, NcPoly, VarTable};
use std::sync::Arc;

/// Joint-cumulant source driving the moment recurrence.
pub trait CumulantRule {
    /// Orders above this bound vanish identically.
    fn order_bound(&self) -> usize;

    /// `k^{(s)}(ℓ₁·b₁, ℓ₂·b₂, …, ℓ_{s-1}·b_{s-1}, ℓ_s)` where
    /// `letters.len() == s` and `middles.len() == s - 1`.
    /// `None` means structurally zero.
    fn eval(&self, letters: &[Letter], middles: &[&AlgebraElement])
        -> Option<AlgebraElement>;
}

/// Anything that can produce operator-valued moments of polynomials in a
/// fixed family of generators.
pub trait MomentOracle {
    /// The coefficient algebra the moments take values in.
    fn coeff_algebra(&self) -> &Arc<MultiMatrixAlgebra>;

    /// The generator table polynomials must be written over.
    fn var_table(&self) -> &Arc<VarTable>;

    /// The word-level expected value of `poly`.
    fn expect(&self, poly: &NcPoly) -> AlgebraElement;

    /// The base compression applied after word-level moments (identity when
    /// the moments already live where they should).
    fn base_expectation(&self) -> Arc<CondExpectation>;

    /// `base ∘ expect`.
    fn expect_base(&self, poly: &NcPoly) -> AlgebraElement {
        let e = self.expect(poly);
        let base = self.base_expectation();
        if base.is_identity() {
            e
        } else {
            base.apply(&e)
        }
    }
}

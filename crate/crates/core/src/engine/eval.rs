//! Moment evaluation.
//!
//! Two independent algorithms compute the expected value of a monomial
//! `c₀·ℓ₁·c₁ ⋯ ℓ_m·c_m`:
//!
//! 1. [`expect_monomial`] runs the *gap recurrence* driven by a
//!    [`CumulantRule`]: writing `G(p,q)` for the expected value of the
//!    sub-word strictly between letter slots `p` and `q` (so
//!    `G(p,p+1) = c_p`), the recurrence conditions on the cumulant block
//!    containing the first letter of the span:
//!
//!    ```text
//!    G(p,q) = Σ_s Σ_{p+1 = v₁ < v₂ < … < v_s ≤ q-1}
//!             c_p · k^{(s)}(ℓ_{v₁}·G(v₁,v₂), …, ℓ_{v_{s-1}}·G(v_{s-1},v_s), ℓ_{v_s})
//!                 · G(v_s, q)
//!    ```
//!
//!    and the full moment is `G(0, m+1)`.  Spans are memoized bottom-up by
//!    width, so the cost is one table of `O(m²)` entries with, at worst,
//!    `2^{span}` block choices per entry (linear when the rule's order
//!    bound is 2).
//!
//! 2. [`expect_monomial_pairings`] sums over non-crossing pairings, valid
//!    exactly for centered families whose cumulants vanish beyond order 2
//!    (semicircular/circular families).  Each pairing is evaluated in one
//!    left-to-right pass with a stack: an opener saves the running
//!    coefficient, a closer applies the covariance map of its (opener,
//!    closer) letter pair to the enclosed value.
//!
//! The two algorithms share no code, which makes them useful as mutual
//! checks.

use super::CumulantRule;
use crate::algebra::AlgebraElement;
use crate::combinat::nc_pairings;
use crate::poly::{Letter, Monomial, NcPoly};

/// Expected value of one monomial under the gap recurrence.
pub fn expect_monomial(rule: &dyn CumulantRule, t: &Monomial) -> AlgebraElement {
    let m = t.letters.len();
    if m == 0 {
        return t.coeffs[0].clone();
    }
    let alg = &t.coeffs[0].algebra;
    // g[p][q] for 0 ≤ p < q ≤ m+1, filled by increasing width.
    let mut g: Vec<Vec<Option<AlgebraElement>>> = vec![vec![None; m + 2]; m + 1];
    for (p, c) in t.coeffs.iter().enumerate() {
        g[p][p + 1] = Some(c.clone());
    }
    let order_bound = rule.order_bound();

    for width in 2..=m + 1 {
        for p in 0..=(m + 1 - width) {
            let q = p + width;
            let mut acc = AlgebraElement::zero(alg);
            // Choose v₂ < … < v_s from {p+2, …, q-1}; v₁ = p+1 is forced.
            let mut chosen: Vec<usize> = vec![p + 1];
            sum_blocks(rule, t, &g, p, q, order_bound, &mut chosen, &mut acc);
            g[p][q] = Some(acc);
        }
    }
    g[0][m + 1].take().expect("top span was computed")
}

/// Recursive enumeration of the cumulant block `{v₁, …, v_s}` for the span
/// `(p, q)`; `chosen` always starts with `v₁ = p+1`.
fn sum_blocks(
    rule: &dyn CumulantRule,
    t: &Monomial,
    g: &[Vec<Option<AlgebraElement>>],
    p: usize,
    q: usize,
    order_bound: usize,
    chosen: &mut Vec<usize>,
    acc: &mut AlgebraElement,
) {
    // Contribute the current block.
    let s = chosen.len();
    let letters: Vec<Letter> = chosen.iter().map(|&v| t.letters[v - 1]).collect();
    let middles: Vec<&AlgebraElement> = (0..s - 1)
        .map(|i| {
            g[chosen[i]][chosen[i + 1]]
                .as_ref()
                .expect("narrower span already computed")
        })
        .collect();
    if let Some(k) = rule.eval(&letters, &middles) {
        let tail = g[chosen[s - 1]][q]
            .as_ref()
            .expect("narrower span already computed");
        let term = t.coeffs[p].mul(&k).mul(tail);
        *acc = acc.add(&term);
    }
    // Extend the block.
    if s < order_bound {
        let from = chosen[s - 1] + 1;
        for v in from..q {
            chosen.push(v);
            sum_blocks(rule, t, g, p, q, order_bound, chosen, acc);
            chosen.pop();
        }
    }
}

/// Expected value of a polynomial under the gap recurrence.
pub fn expect_poly(rule: &dyn CumulantRule, poly: &NcPoly) -> AlgebraElement {
    let mut acc = AlgebraElement::zero(&poly.algebra);
    for t in &poly.terms {
        acc = acc.add(&expect_monomial(rule, t));
    }
    acc
}

/// Expected value of one monomial by direct summation over non-crossing
/// pairings.  `cov(ℓ_opener, ℓ_closer, inner)` is the covariance map of the
/// letter pair applied to the enclosed value; `None` means the pair never
/// couples (so the whole pairing dies).
///
/// Only valid for families whose cumulants vanish at order 1 and beyond
/// order 2 — which is what it is for: an independent evaluator for
/// semicircular/circular families.
pub fn expect_monomial_pairings(
    cov: &dyn Fn(Letter, Letter, &AlgebraElement) -> Option<AlgebraElement>,
    t: &Monomial,
) -> AlgebraElement {
    let m = t.letters.len();
    let alg = &t.coeffs[0].algebra;
    if m == 0 {
        return t.coeffs[0].clone();
    }
    let mut total = AlgebraElement::zero(alg);
    'pairing: for pairing in nc_pairings(m) {
        // partner[i] for letters 1..=m; openers hold their closer and vice
        // versa.
        let mut partner = vec![0usize; m + 1];
        for &(a, b) in &pairing {
            partner[a + 1] = b + 1;
            partner[b + 1] = a + 1;
        }
        let mut stack: Vec<AlgebraElement> = Vec::new();
        let mut acc = t.coeffs[0].clone();
        for pos in 1..=m {
            if partner[pos] > pos {
                // Opener: save the running value, start fresh inside.
                stack.push(acc);
                acc = t.coeffs[pos].clone();
            } else {
                // Closer: apply the covariance of (opener, closer) to the
                // enclosed value.
                let opener = partner[pos];
                let inner = acc;
                match cov(t.letters[opener - 1], t.letters[pos - 1], &inner) {
                    Some(v) => {
                        let saved = stack.pop().expect("opener pushed a frame");
                        acc = saved.mul(&v).mul(&t.coeffs[pos]);
                    }
                    None => continue 'pairing,
                }
            }
        }
        debug_assert!(stack.is_empty());
        total = total.add(&acc);
    }
    total
}

/// Polynomial version of [`expect_monomial_pairings`].
pub fn expect_poly_pairings(
    cov: &dyn Fn(Letter, Letter, &AlgebraElement) -> Option<AlgebraElement>,
    poly: &NcPoly,
) -> AlgebraElement {
    let mut acc = AlgebraElement::zero(&poly.algebra);
    for t in &poly.terms {
        acc = acc.add(&expect_monomial_pairings(cov, t));
    }
    acc
}

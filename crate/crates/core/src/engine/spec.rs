//! Symbolic distributions: families of operator-valued semicircular and
//! circular generators described by their covariance maps.
//!
//! A [`DistributionSpec`] fixes a coefficient algebra `B`, a table of
//! generators, and for each ordered pair of letters a covariance map
//! `η_{ℓℓ'} : B → B` with
//!
//! ```text
//! k²(ℓ·b, ℓ') = η_{ℓℓ'}(b),        all other cumulants = 0.
//! ```
//!
//! Moments of arbitrary polynomials follow from the gap recurrence.  The
//! covariance table is deliberately unconstrained — scenario files may
//! inject cross-family covariances on purpose (negative controls), and it
//! is the job of the freeness checker, not the constructor, to flag them.

use super::eval::{expect_poly, expect_poly_pairings};
use super::{CumulantRule, MomentOracle};
use crate::algebra::{AlgebraElement, CondExpectation, MultiMatrixAlgebra};
use crate::poly::{Letter, NcPoly, VarTable};
use std::collections::HashMap;
use std::sync::Arc;

/// A family of centered operator-valued generators with prescribed
/// second-order structure (all higher free cumulants vanish).
#[derive(Clone)]
pub struct DistributionSpec {
    algebra: Arc<MultiMatrixAlgebra>,
    vars: Arc<VarTable>,
    /// `η_{(ℓ, ℓ')}`, keyed by canonical letters.
    cov: HashMap<(Letter, Letter), Arc<CondExpectation>>,
    /// Family id of each generator (same id ⇔ same family).
    families: Vec<usize>,
    /// Compression applied after word-level moments; identity by default.
    base: Arc<CondExpectation>,
    next_family: usize,
}

impl DistributionSpec {
    pub fn new(algebra: &Arc<MultiMatrixAlgebra>) -> Self {
        DistributionSpec {
            algebra: algebra.clone(),
            vars: Arc::new(VarTable::new()),
            cov: HashMap::new(),
            families: Vec::new(),
            base: CondExpectation::identity(algebra),
            next_family: 0,
        }
    }

    /// Add a self-adjoint generator with covariance `η` as its own family.
    pub fn add_semicircular(&mut self, name: &str, eta: Arc<CondExpectation>) -> Letter {
        let fam = self.fresh_family();
        self.add_semicircular_in_family(name, eta, fam)
    }

    /// Add a self-adjoint generator to an existing family.
    pub fn add_semicircular_in_family(
        &mut self,
        name: &str,
        eta: Arc<CondExpectation>,
        family: usize,
    ) -> Letter {
        assert!(
            eta.domain().compatible(&self.algebra),
            "covariance map must act on the coefficient algebra"
        );
        let v = Arc::make_mut(&mut self.vars).add(name, true);
        self.families.push(family);
        self.next_family = self.next_family.max(family + 1);
        let l = Letter::new(v);
        self.cov.insert((l, l), eta);
        l
    }

    /// Add a circular generator with covariance `η` as its own family:
    /// `k²(c·b, c*) = k²(c*·b, c) = η(b)` and `k²(c·b, c) = k²(c*·b, c*) = 0`.
    /// Returns the letters `(c, c*)`.
    pub fn add_circular(&mut self, name: &str, eta: Arc<CondExpectation>) -> (Letter, Letter) {
        let fam = self.fresh_family();
        self.add_circular_in_family(name, eta, fam)
    }

    pub fn add_circular_in_family(
        &mut self,
        name: &str,
        eta: Arc<CondExpectation>,
        family: usize,
    ) -> (Letter, Letter) {
        assert!(
            eta.domain().compatible(&self.algebra),
            "covariance map must act on the coefficient algebra"
        );
        let v = Arc::make_mut(&mut self.vars).add(name, false);
        self.families.push(family);
        self.next_family = self.next_family.max(family + 1);
        let (c, cs) = (Letter::new(v), Letter::star(v));
        self.cov.insert((c, cs), eta.clone());
        self.cov.insert((cs, c), eta);
        (c, cs)
    }

    pub fn fresh_family(&mut self) -> usize {
        let f = self.next_family;
        self.next_family += 1;
        f
    }

    /// Install (or overwrite) a covariance entry directly.  This is the
    /// hook scenario files use to inject deliberate violations; nothing is
    /// validated here.
    pub fn set_cov(&mut self, l1: Letter, l2: Letter, eta: Arc<CondExpectation>) {
        let l1 = self.vars.canonical(l1);
        let l2 = self.vars.canonical(l2);
        self.cov.insert((l1, l2), eta);
    }

    pub fn cov_map(&self, l1: Letter, l2: Letter) -> Option<&Arc<CondExpectation>> {
        self.cov
            .get(&(self.vars.canonical(l1), self.vars.canonical(l2)))
    }

    /// All stored covariance entries, keyed by canonical letter pairs.
    pub fn cov_entries(
        &self,
    ) -> impl Iterator<Item = (&(Letter, Letter), &Arc<CondExpectation>)> {
        self.cov.iter()
    }

    pub fn family_of(&self, var: u32) -> usize {
        self.families[var as usize]
    }

    pub fn set_base(&mut self, base: Arc<CondExpectation>) {
        assert!(
            base.domain().compatible(&self.algebra),
            "base expectation must act on the coefficient algebra"
        );
        self.base = base;
    }

    pub fn algebra(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.algebra
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    /// All canonical letters of the scene (`x` for self-adjoint generators,
    /// `c` and `c*` otherwise), in generator order.
    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for v in 0..self.vars.len() as u32 {
            out.push(Letter::new(v));
            if !self.vars.is_self_adjoint(v) {
                out.push(Letter::star(v));
            }
        }
        out
    }

    /// The cumulant rule backing this distribution.
    pub fn rule(&self) -> SpecRule<'_> {
        SpecRule { spec: self }
    }

    /// Independent moment evaluation by non-crossing pairing summation.
    pub fn expect_via_pairings(&self, poly: &NcPoly) -> AlgebraElement {
        let cov = |l1: Letter, l2: Letter, inner: &AlgebraElement| {
            self.cov.get(&(l1, l2)).map(|eta| eta.apply(inner))
        };
        expect_poly_pairings(&cov, poly)
    }

    /// Convenience: the polynomial `1·ℓ·1`.
    pub fn letter_poly(&self, l: Letter) -> NcPoly {
        NcPoly::letter(&self.algebra, &self.vars, l)
    }

    /// Convenience: the word `ℓ₁ ⋯ ℓ_m` with unit coefficients.
    pub fn word_poly(&self, letters: &[Letter]) -> NcPoly {
        NcPoly::word(&self.algebra, &self.vars, letters)
    }
}

/// [`CumulantRule`] view of a [`DistributionSpec`]: second order comes from
/// the covariance table, everything else vanishes.
pub struct SpecRule<'a> {
    spec: &'a DistributionSpec,
}

impl CumulantRule for SpecRule<'_> {
    fn order_bound(&self) -> usize {
        2
    }

    fn eval(
        &self,
        letters: &[Letter],
        middles: &[&AlgebraElement],
    ) -> Option<AlgebraElement> {
        if letters.len() != 2 {
            return None;
        }
        self.spec
            .cov
            .get(&(letters[0], letters[1]))
            .map(|eta| eta.apply(middles[0]))
    }
}

impl MomentOracle for DistributionSpec {
    fn coeff_algebra(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.algebra
    }

    fn var_table(&self) -> &Arc<VarTable> {
        &self.vars
    }

    fn expect(&self, poly: &NcPoly) -> AlgebraElement {
        expect_poly(&self.rule(), poly)
    }

    fn base_expectation(&self) -> Arc<CondExpectation> {
        self.base.clone()
    }
}

/// Free-function alias: the expected value of a polynomial under a
/// distribution.
pub fn expectation_of_polynomial(spec: &DistributionSpec, poly: &NcPoly) -> AlgebraElement {
    spec.expect(poly)
}

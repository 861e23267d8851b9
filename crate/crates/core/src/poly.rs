//! Noncommutative *-polynomials in formal generators with algebra-valued
//! coefficients *interleaved between the letters*.
//!
//! A monomial of degree `m` is `c₀·ℓ₁·c₁·ℓ₂ ⋯ ℓ_m·c_m` where the `cᵢ` are
//! concrete elements of a coefficient algebra `B` and the `ℓᵢ` are formal
//! letters (a generator or its adjoint).  A polynomial is a finite sum of
//! monomials.  This shape is exactly what operator-valued moment
//! computations consume: the coefficients never commute past the letters.
//!
//! Normalization keeps term lists canonical enough for structural equality
//! tests: terms are pruned when a coefficient is exactly zero (a zero
//! coefficient annihilates its whole monomial), merged when two terms share
//! the same word and their coefficient tuples agree in all but at most one
//! slot, and sorted deterministically.

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra, C64};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// One formal letter: a generator index plus an adjoint flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub var: u32,
    pub starred: bool,
}

impl Letter {
    pub fn new(var: u32) -> Self {
        Letter { var, starred: false }
    }

    pub fn star(var: u32) -> Self {
        Letter { var, starred: true }
    }
}

/// Registry of formal generators: names plus self-adjointness flags.
/// Self-adjoint generators have `x* = x`, so their starred letters are
/// canonicalized away at construction time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    self_adjoint: Vec<bool>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, self_adjoint: bool) -> u32 {
        let name = name.into();
        assert!(
            self.index(&name).is_none(),
            "duplicate generator name {name}"
        );
        self.names.push(name);
        self.self_adjoint.push(self_adjoint);
        (self.names.len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn name(&self, var: u32) -> &str {
        &self.names[var as usize]
    }

    pub fn is_self_adjoint(&self, var: u32) -> bool {
        self.self_adjoint[var as usize]
    }

    /// Drop the adjoint flag on self-adjoint generators.
    pub fn canonical(&self, l: Letter) -> Letter {
        if l.starred && self.is_self_adjoint(l.var) {
            Letter::new(l.var)
        } else {
            l
        }
    }

    /// The adjoint of a letter, canonicalized.
    pub fn adjoint_letter(&self, l: Letter) -> Letter {
        self.canonical(Letter {
            var: l.var,
            starred: !l.starred,
        })
    }

    pub fn display_letter(&self, l: Letter) -> String {
        if l.starred {
            format!("{}*", self.name(l.var))
        } else {
            self.name(l.var).to_string()
        }
    }
}

/// `c₀·ℓ₁·c₁ ⋯ ℓ_m·c_m`; always `coeffs.len() == letters.len() + 1`.
#[derive(Debug, Clone)]
pub struct Monomial {
    pub coeffs: Vec<AlgebraElement>,
    pub letters: Vec<Letter>,
}

impl Monomial {
    pub fn constant(c: AlgebraElement) -> Self {
        Monomial {
            coeffs: vec![c],
            letters: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }

    fn exact_eq_coeff(a: &AlgebraElement, b: &AlgebraElement) -> bool {
        a.blocks == b.blocks
    }

    /// Deterministic ordering key on the coefficient tuple (raw IEEE bits,
    /// so the order is total and reproducible).
    fn coeff_key(&self) -> Vec<(u64, u64)> {
        self.coeffs
            .iter()
            .flat_map(|c| c.blocks.iter().flat_map(|b| b.iter()))
            .map(|z| (z.re.to_bits(), z.im.to_bits()))
            .collect()
    }
}

/// A noncommutative *-polynomial over a coefficient algebra and a generator
/// table.
#[derive(Debug, Clone)]
pub struct NcPoly {
    pub algebra: Arc<MultiMatrixAlgebra>,
    pub vars: Arc<VarTable>,
    pub terms: Vec<Monomial>,
}

impl NcPoly {
    pub fn zero(algebra: &Arc<MultiMatrixAlgebra>, vars: &Arc<VarTable>) -> Self {
        NcPoly {
            algebra: algebra.clone(),
            vars: vars.clone(),
            terms: Vec::new(),
        }
    }

    pub fn constant(
        algebra: &Arc<MultiMatrixAlgebra>,
        vars: &Arc<VarTable>,
        c: AlgebraElement,
    ) -> Self {
        assert!(c.algebra.compatible(algebra), "constant from wrong algebra");
        let mut p = NcPoly {
            algebra: algebra.clone(),
            vars: vars.clone(),
            terms: vec![Monomial::constant(c)],
        };
        p.normalize();
        p
    }

    pub fn one(algebra: &Arc<MultiMatrixAlgebra>, vars: &Arc<VarTable>) -> Self {
        Self::constant(algebra, vars, AlgebraElement::unit(algebra))
    }

    /// The polynomial `1·ℓ·1`.
    pub fn letter(
        algebra: &Arc<MultiMatrixAlgebra>,
        vars: &Arc<VarTable>,
        l: Letter,
    ) -> Self {
        let unit = AlgebraElement::unit(algebra);
        NcPoly {
            algebra: algebra.clone(),
            vars: vars.clone(),
            terms: vec![Monomial {
                coeffs: vec![unit.clone(), unit],
                letters: vec![vars.canonical(l)],
            }],
        }
    }

    /// The word `1·ℓ₁·1·ℓ₂ ⋯ ℓ_m·1`.
    pub fn word(
        algebra: &Arc<MultiMatrixAlgebra>,
        vars: &Arc<VarTable>,
        letters: &[Letter],
    ) -> Self {
        let unit = AlgebraElement::unit(algebra);
        NcPoly {
            algebra: algebra.clone(),
            vars: vars.clone(),
            terms: vec![Monomial {
                coeffs: vec![unit; letters.len() + 1],
                letters: letters.iter().map(|&l| vars.canonical(l)).collect(),
            }],
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn assert_compatible(&self, other: &Self) {
        assert!(
            self.algebra.compatible(&other.algebra),
            "polynomials over incompatible algebras"
        );
        assert!(
            self.vars == other.vars,
            "polynomials over different generator tables"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let mut out = NcPoly {
            algebra: self.algebra.clone(),
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .chain(other.terms.iter())
                .cloned()
                .collect(),
        };
        out.normalize();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeffs[0] = t.coeffs[0].scale(z);
        }
        out.normalize();
        out
    }

    /// Multiply every term by `e` on the left: `e·p`.
    pub fn left_mul_elem(&self, e: &AlgebraElement) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeffs[0] = e.mul(&t.coeffs[0]);
        }
        out.normalize();
        out
    }

    /// Multiply every term by `e` on the right: `p·e`.
    pub fn right_mul_elem(&self, e: &AlgebraElement) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            let last = t.coeffs.len() - 1;
            t.coeffs[last] = t.coeffs[last].mul(e);
        }
        out.normalize();
        out
    }

    /// Product of polynomials; the junction coefficient of each term pair is
    /// the single product `a_m·b₀`.
    pub fn mul(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for s in &self.terms {
            for t in &other.terms {
                let mut coeffs = Vec::with_capacity(s.coeffs.len() + t.coeffs.len() - 1);
                coeffs.extend_from_slice(&s.coeffs[..s.coeffs.len() - 1]);
                coeffs.push(s.coeffs[s.coeffs.len() - 1].mul(&t.coeffs[0]));
                coeffs.extend_from_slice(&t.coeffs[1..]);
                let mut letters = Vec::with_capacity(s.letters.len() + t.letters.len());
                letters.extend_from_slice(&s.letters);
                letters.extend_from_slice(&t.letters);
                terms.push(Monomial { coeffs, letters });
            }
        }
        let mut out = NcPoly {
            algebra: self.algebra.clone(),
            vars: self.vars.clone(),
            terms,
        };
        out.normalize();
        out
    }

    /// Formal adjoint: letters reversed and starred, coefficients reversed
    /// and adjointed.
    pub fn adjoint(&self) -> Self {
        let mut out = NcPoly {
            algebra: self.algebra.clone(),
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coeffs: t.coeffs.iter().rev().map(AlgebraElement::adjoint).collect(),
                    letters: t
                        .letters
                        .iter()
                        .rev()
                        .map(|&l| self.vars.adjoint_letter(l))
                        .collect(),
                })
                .collect(),
        };
        out.normalize();
        out
    }

    /// Substitute concrete algebra elements for the generators (`values[v]`
    /// for generator `v`; its adjoint for the starred letter) and evaluate.
    pub fn eval_subst(&self, values: &[AlgebraElement]) -> AlgebraElement {
        assert_eq!(values.len(), self.vars.len(), "one value per generator");
        let mut acc = AlgebraElement::zero(&self.algebra);
        for t in &self.terms {
            let mut prod = t.coeffs[0].clone();
            for (i, l) in t.letters.iter().enumerate() {
                let v = if l.starred {
                    values[l.var as usize].adjoint()
                } else {
                    values[l.var as usize].clone()
                };
                prod = prod.mul(&v).mul(&t.coeffs[i + 1]);
            }
            acc = acc.add(&prod);
        }
        acc
    }

    /// Canonicalize the term list: prune exact zeros, merge same-word terms
    /// whose coefficient tuples differ in at most one slot, sort.
    fn normalize(&mut self) {
        // Prune: a single exactly-zero coefficient kills its monomial.
        self.terms
            .retain(|t| t.coeffs.iter().all(|c| c.sup_norm() != 0.0));

        // Group by word.
        let mut by_word: BTreeMap<Vec<Letter>, Vec<Monomial>> = BTreeMap::new();
        for t in std::mem::take(&mut self.terms) {
            by_word.entry(t.letters.clone()).or_default().push(t);
        }

        for (_, mut group) in by_word {
            // Quadratic merge pass; polynomials stay small.
            let mut merged: Vec<Monomial> = Vec::with_capacity(group.len());
            while let Some(t) = group.pop() {
                let hit = merged
                    .iter()
                    .enumerate()
                    .find_map(|(mi, m)| mergeable_slot(m, &t).map(|slot| (mi, slot)));
                match hit {
                    Some((mi, slot)) => {
                        merged[mi].coeffs[slot] = merged[mi].coeffs[slot].add(&t.coeffs[slot]);
                        if merged[mi].coeffs[slot].sup_norm() == 0.0 {
                            // The merged coefficient cancelled exactly, which
                            // annihilates the whole monomial.
                            merged.remove(mi);
                        }
                    }
                    None => merged.push(t),
                }
            }
            merged.sort_by(|a, b| a.coeff_key().cmp(&b.coeff_key()));
            self.terms.extend(merged);
        }
    }
}

/// If `a` and `b` share their word and their coefficient tuples agree
/// exactly in all but at most one slot, return that slot (slot 0 when the
/// tuples agree everywhere).
fn mergeable_slot(a: &Monomial, b: &Monomial) -> Option<usize> {
    debug_assert_eq!(a.letters, b.letters);
    let mut differ = None;
    for i in 0..a.coeffs.len() {
        if !Monomial::exact_eq_coeff(&a.coeffs[i], &b.coeffs[i]) {
            if differ.is_some() {
                return None;
            }
            differ = Some(i);
        }
    }
    Some(differ.unwrap_or(0))
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let unit = AlgebraElement::unit(&self.algebra);
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let mut pieces: Vec<String> = Vec::new();
                for (i, c) in t.coeffs.iter().enumerate() {
                    let trivial = c.dist(&unit) == 0.0;
                    if !trivial || (t.letters.is_empty() && i == 0) {
                        pieces.push(format!("{c}"));
                    }
                    if i < t.letters.len() {
                        pieces.push(self.vars.display_letter(t.letters[i]));
                    }
                }
                pieces.join("·")
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Free-function aliases for the polynomial ring operations.
pub fn poly_mul(a: &NcPoly, b: &NcPoly) -> NcPoly {
    a.mul(b)
}

pub fn poly_adjoint(a: &NcPoly) -> NcPoly {
    a.adjoint()
}

/// A 2×2 matrix of polynomials (entries over a common algebra and generator
/// table), the data type for expanded matrix-level polynomials.
#[derive(Debug, Clone)]
pub struct PolyMat2 {
    pub e: [[NcPoly; 2]; 2],
}

impl PolyMat2 {
    pub fn zero(algebra: &Arc<MultiMatrixAlgebra>, vars: &Arc<VarTable>) -> Self {
        let z = NcPoly::zero(algebra, vars);
        PolyMat2 {
            e: [[z.clone(), z.clone()], [z.clone(), z]],
        }
    }

    pub fn from_entries(e11: NcPoly, e12: NcPoly, e21: NcPoly, e22: NcPoly) -> Self {
        PolyMat2 {
            e: [[e11, e12], [e21, e22]],
        }
    }

    /// Constant matrix from a 2×2 array of coefficient-algebra elements.
    pub fn from_coeffs(
        algebra: &Arc<MultiMatrixAlgebra>,
        vars: &Arc<VarTable>,
        m: &[[AlgebraElement; 2]; 2],
    ) -> Self {
        PolyMat2 {
            e: [
                [
                    NcPoly::constant(algebra, vars, m[0][0].clone()),
                    NcPoly::constant(algebra, vars, m[0][1].clone()),
                ],
                [
                    NcPoly::constant(algebra, vars, m[1][0].clone()),
                    NcPoly::constant(algebra, vars, m[1][1].clone()),
                ],
            ],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        PolyMat2 {
            e: [
                [
                    self.e[0][0].add(&other.e[0][0]),
                    self.e[0][1].add(&other.e[0][1]),
                ],
                [
                    self.e[1][0].add(&other.e[1][0]),
                    self.e[1][1].add(&other.e[1][1]),
                ],
            ],
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let ent = |i: usize, j: usize| {
            self.e[i][0]
                .mul(&other.e[0][j])
                .add(&self.e[i][1].mul(&other.e[1][j]))
        };
        PolyMat2 {
            e: [[ent(0, 0), ent(0, 1)], [ent(1, 0), ent(1, 1)]],
        }
    }

    /// Right-multiply by a constant 2×2 coefficient matrix.
    pub fn mul_coeffs(&self, m: &[[AlgebraElement; 2]; 2]) -> Self {
        let ent = |i: usize, j: usize| {
            self.e[i][0]
                .right_mul_elem(&m[0][j])
                .add(&self.e[i][1].right_mul_elem(&m[1][j]))
        };
        PolyMat2 {
            e: [[ent(0, 0), ent(0, 1)], [ent(1, 0), ent(1, 1)]],
        }
    }

    /// Matrix adjoint: transpose of entrywise adjoints.
    pub fn adjoint(&self) -> Self {
        PolyMat2 {
            e: [
                [self.e[0][0].adjoint(), self.e[1][0].adjoint()],
                [self.e[0][1].adjoint(), self.e[1][1].adjoint()],
            ],
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        PolyMat2 {
            e: [
                [self.e[0][0].scale(z), self.e[0][1].scale(z)],
                [self.e[1][0].scale(z), self.e[1][1].scale(z)],
            ],
        }
    }
}

/// Expand a polynomial over an amplified algebra, whose letters stand for
/// 2×2 matrices of lower-level polynomials, into such a matrix.
///
/// * `split` decomposes an amplified coefficient into its 2×2 array of
///   lower-level coefficients;
/// * `realize` maps each letter to its 2×2 polynomial matrix.
///
/// The contraction follows the monomial structure exactly:
/// `c₀·ℓ₁·c₁ ⋯` becomes `split(c₀) · realize(ℓ₁) · split(c₁) ⋯` with 2×2
/// matrix products throughout.
pub fn matrix_lift(
    poly: &NcPoly,
    scalar_algebra: &Arc<MultiMatrixAlgebra>,
    scalar_vars: &Arc<VarTable>,
    split: impl Fn(&AlgebraElement) -> [[AlgebraElement; 2]; 2],
    realize: impl Fn(Letter) -> PolyMat2,
) -> PolyMat2 {
    let mut acc = PolyMat2::zero(scalar_algebra, scalar_vars);
    for t in &poly.terms {
        let mut m = PolyMat2::from_coeffs(scalar_algebra, scalar_vars, &split(&t.coeffs[0]));
        for (i, &l) in t.letters.iter().enumerate() {
            m = m.mul(&realize(l)).mul_coeffs(&split(&t.coeffs[i + 1]));
        }
        acc = acc.add(&m);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraElement;
    use proptest::prelude::*;

    fn setup() -> (Arc<MultiMatrixAlgebra>, Arc<VarTable>) {
        let alg = MultiMatrixAlgebra::new("M2", vec![2]).unwrap();
        let mut vt = VarTable::new();
        vt.add("s", true);
        vt.add("c", false);
        (alg, Arc::new(vt))
    }

    #[test]
    fn self_adjoint_letters_canonicalize() {
        let (alg, vars) = setup();
        let s_star = NcPoly::letter(&alg, &vars, Letter::star(0));
        let s = NcPoly::letter(&alg, &vars, Letter::new(0));
        assert_eq!(s_star.terms[0].letters, s.terms[0].letters);
        // Adjoint of the non-self-adjoint generator keeps its star.
        let c = NcPoly::letter(&alg, &vars, Letter::new(1));
        assert_eq!(c.adjoint().terms[0].letters, vec![Letter::star(1)]);
    }

    #[test]
    fn adjoint_is_involutive_exactly() {
        let (alg, vars) = setup();
        let mut rng = crate::seeded_rng(3);
        let a = AlgebraElement::random(&alg, &mut rng);
        let b = AlgebraElement::random(&alg, &mut rng);
        let p = NcPoly {
            algebra: alg.clone(),
            vars: vars.clone(),
            terms: vec![Monomial {
                coeffs: vec![a.clone(), b.clone(), a.clone()],
                letters: vec![Letter::new(1), Letter::star(1)],
            }],
        };
        let pss = p.adjoint().adjoint();
        assert_eq!(pss.terms.len(), 1);
        assert_eq!(pss.terms[0].letters, p.terms[0].letters);
        for (x, y) in pss.terms[0].coeffs.iter().zip(&p.terms[0].coeffs) {
            assert_eq!(x.blocks, y.blocks, "double adjoint must be bit-exact");
        }
    }

    #[test]
    fn product_adjoint_antihomomorphism_is_exact() {
        let (alg, vars) = setup();
        let mut rng = crate::seeded_rng(5);
        let mk = |rng: &mut crate::Rng64, letters: Vec<Letter>| {
            let coeffs = (0..letters.len() + 1)
                .map(|_| AlgebraElement::random(&alg, rng))
                .collect();
            NcPoly {
                algebra: alg.clone(),
                vars: vars.clone(),
                terms: vec![Monomial { coeffs, letters }],
            }
        };
        let p = mk(&mut rng, vec![Letter::new(0), Letter::new(1)]);
        let q = mk(&mut rng, vec![Letter::star(1)]);
        let lhs = p.mul(&q).adjoint();
        let rhs = q.adjoint().mul(&p.adjoint());
        assert_eq!(lhs.terms.len(), rhs.terms.len());
        for (s, t) in lhs.terms.iter().zip(&rhs.terms) {
            assert_eq!(s.letters, t.letters);
            for (x, y) in s.coeffs.iter().zip(&t.coeffs) {
                assert_eq!(x.blocks, y.blocks, "(pq)* and q*p* must agree bit-exactly");
            }
        }
    }

    #[test]
    fn zero_coefficient_prunes_term() {
        let (alg, vars) = setup();
        let z = AlgebraElement::zero(&alg);
        let p = NcPoly {
            algebra: alg.clone(),
            vars: vars.clone(),
            terms: vec![Monomial {
                coeffs: vec![z, AlgebraElement::unit(&alg)],
                letters: vec![Letter::new(0)],
            }],
        };
        assert!(p.mul(&NcPoly::one(&alg, &vars)).is_zero());
        let x = NcPoly::letter(&alg, &vars, Letter::new(0));
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn same_word_terms_merge() {
        let (alg, vars) = setup();
        let x = NcPoly::letter(&alg, &vars, Letter::new(0));
        let two_x = x.add(&x);
        assert_eq!(two_x.num_terms(), 1);
        let expected = x.scale(C64::new(2.0, 0.0));
        assert_eq!(
            two_x.terms[0].coeffs[0].blocks,
            expected.terms[0].coeffs[0].blocks
        );
    }

    #[test]
    fn matrix_lift_expands_products() {
        // Over the scalars, lift a degree-2 word in one matrix letter whose
        // realization is [[0, c],[c*, 0]]; the (0,0) entry of the lift must
        // be the word c·c*.
        let scal = MultiMatrixAlgebra::scalars();
        let mut vt = VarTable::new();
        vt.add("c", false);
        let vars = Arc::new(vt);
        let mut mt = VarTable::new();
        mt.add("S", true);
        let mvars = Arc::new(mt);
        // Amplified algebra M2 standing for 2×2 over ℂ.
        let amp = MultiMatrixAlgebra::new("M2", vec![2]).unwrap();
        let word = NcPoly::word(&amp, &mvars, &[Letter::new(0), Letter::new(0)]);

        let c = NcPoly::letter(&scal, &vars, Letter::new(0));
        let cs = c.adjoint();
        let zero = NcPoly::zero(&scal, &vars);
        let real = PolyMat2::from_entries(zero.clone(), c.clone(), cs.clone(), zero.clone());

        let split = |a: &AlgebraElement| {
            let b = &a.blocks[0];
            let s = |z: C64| AlgebraElement::scalar(&scal, z);
            [
                [s(b[(0, 0)]), s(b[(0, 1)])],
                [s(b[(1, 0)]), s(b[(1, 1)])],
            ]
        };
        let lifted = matrix_lift(&word, &scal, &vars, split, |_| real.clone());
        let cc_star = c.mul(&cs);
        let cstar_c = cs.mul(&c);
        assert_eq!(lifted.e[0][0].terms[0].letters, cc_star.terms[0].letters);
        assert_eq!(lifted.e[1][1].terms[0].letters, cstar_c.terms[0].letters);
        assert!(lifted.e[0][1].is_zero());
        assert!(lifted.e[1][0].is_zero());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Ring laws hold under random substitution.
        #[test]
        fn ring_laws_under_substitution(seed in 0u64..1_000_000) {
            let (alg, vars) = setup();
            let mut rng = crate::seeded_rng(seed);
            let rand_poly = |rng: &mut crate::Rng64| {
                let n_terms = rng.random_range(1..3usize);
                let terms = (0..n_terms)
                    .map(|_| {
                        let deg = rng.random_range(0..3usize);
                        let letters = (0..deg)
                            .map(|_| {
                                vars.canonical(Letter {
                                    var: rng.random_range(0..2u32),
                                    starred: rng.random(),
                                })
                            })
                            .collect::<Vec<_>>();
                        let coeffs = (0..deg + 1)
                            .map(|_| AlgebraElement::random(&alg, rng))
                            .collect();
                        Monomial { coeffs, letters }
                    })
                    .collect();
                let mut p = NcPoly { algebra: alg.clone(), vars: vars.clone(), terms };
                p.normalize();
                p
            };
            let p = rand_poly(&mut rng);
            let q = rand_poly(&mut rng);
            let r = rand_poly(&mut rng);
            let vals: Vec<AlgebraElement> = (0..vars.len())
                .map(|_| AlgebraElement::random(&alg, &mut rng))
                .collect();
            // Make the self-adjoint generator actually self-adjoint.
            let mut vals = vals;
            vals[0] = vals[0].hermitize();

            let tol = 1e-10;
            // Distributivity.
            let lhs = p.mul(&q.add(&r)).eval_subst(&vals);
            let rhs = p.mul(&q).add(&p.mul(&r)).eval_subst(&vals);
            prop_assert!(lhs.dist(&rhs) < tol);
            // Associativity.
            let lhs = p.mul(&q).mul(&r).eval_subst(&vals);
            let rhs = p.mul(&q.mul(&r)).eval_subst(&vals);
            prop_assert!(lhs.dist(&rhs) < tol);
            // Adjoint against substitution.
            let lhs = p.adjoint().eval_subst(&vals);
            let rhs = p.eval_subst(&vals).adjoint();
            prop_assert!(lhs.dist(&rhs) < tol);
        }
    }
}

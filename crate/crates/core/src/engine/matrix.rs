//! 2×2 matrix amplification: the algebra `M₂(B)`, expectations and
//! covariance maps lifted to it, and matrix scenes whose generators are 2×2
//! matrices over a scalar scene.
//!
//! `M₂(⊕_k M_{d_k})` is represented as `⊕_k M_{2d_k}` with the quadrant
//! layout: block `k` of an amplified element is the 2×2 array of the
//! original block `k`s.

use super::cumulant::cumulant_via_moebius;
use super::spec::DistributionSpec;
use super::MomentOracle;
use crate::algebra::{
    AlgebraElement, AlgebraEmbedding, CondExpectation, ExpectationOrigin, LinMap, MapKind,
    MultiMatrixAlgebra,
};
use crate::poly::{matrix_lift, Letter, Monomial, NcPoly, PolyMat2, VarTable};
use crate::report::{CheckLine, VerificationReport};
use nalgebra::DMatrix;
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

/// The algebra `M₂(B)`: every block side doubled.
pub fn amplify2(alg: &Arc<MultiMatrixAlgebra>) -> Arc<MultiMatrixAlgebra> {
    MultiMatrixAlgebra::new(
        format!("M2({})", alg.label),
        alg.blocks.iter().map(|d| 2 * d).collect(),
    )
    .expect("amplified algebra is valid")
}

/// Assemble an amplified element from its 2×2 quadrants over the scalar
/// algebra.
pub fn embed2(amp: &Arc<MultiMatrixAlgebra>, quad: &[[AlgebraElement; 2]; 2]) -> AlgebraElement {
    let scalar = &quad[0][0].algebra;
    debug_assert!(amp
        .blocks
        .iter()
        .zip(&scalar.blocks)
        .all(|(a, s)| *a == 2 * s));
    let mut out = AlgebraElement::zero(amp);
    for (k, &d) in scalar.blocks.iter().enumerate() {
        out.blocks[k] = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
            quad[r / d][c / d].blocks[k][(r % d, c % d)]
        });
    }
    out
}

/// Decompose an amplified element into its 2×2 quadrants over the scalar
/// algebra.
pub fn split2(
    x: &AlgebraElement,
    scalar: &Arc<MultiMatrixAlgebra>,
) -> [[AlgebraElement; 2]; 2] {
    let mut quad = [
        [
            AlgebraElement::zero(scalar),
            AlgebraElement::zero(scalar),
        ],
        [
            AlgebraElement::zero(scalar),
            AlgebraElement::zero(scalar),
        ],
    ];
    for (k, &d) in scalar.blocks.iter().enumerate() {
        for (i, row) in quad.iter_mut().enumerate() {
            for (j, q) in row.iter_mut().enumerate() {
                q.blocks[k] = x.blocks[k].view((i * d, j * d), (d, d)).into_owned();
            }
        }
    }
    quad
}

/// `diag(a, b)` inside the amplified algebra.
pub fn diag2(
    amp: &Arc<MultiMatrixAlgebra>,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> AlgebraElement {
    let zero = AlgebraElement::zero(&a.algebra);
    embed2(amp, &[[a.clone(), zero.clone()], [zero, b.clone()]])
}

/// Lift a conditional expectation entrywise: `(E ⊗ I₂)([b_ij]) = [E(b_ij)]`.
pub fn amp_expectation(
    e: &CondExpectation,
    amp: &Arc<MultiMatrixAlgebra>,
) -> crate::error::Result<Arc<CondExpectation>> {
    let scalar = e.domain().clone();
    let (range, embedding) = match (&e.kind, e.embedding()) {
        (MapKind::Expectation { range, .. }, Some(emb)) => (range.clone(), emb.clone()),
        _ => {
            return Err(crate::error::CoreError::ExpectationInvalid(
                "entrywise lift needs an expectation, not a plain linear map".into(),
            ))
        }
    };
    let amp_range = amplify2(&range);
    // Embedding of M₂(range): apply the scalar embedding on each quadrant.
    let mut images = Vec::with_capacity(amp_range.dim());
    for idx in 0..amp_range.dim() {
        let b = AlgebraElement::basis(&amp_range, idx);
        let quad = split2(&b, &range);
        let mapped = [
            [embedding.apply(&quad[0][0]), embedding.apply(&quad[0][1])],
            [embedding.apply(&quad[1][0]), embedding.apply(&quad[1][1])],
        ];
        images.push(embed2(amp, &mapped));
    }
    let amp_embedding = Arc::new(AlgebraEmbedding::new(&amp_range, amp, &images)?);

    let e_map = e.map.clone();
    let scalar_cl = scalar.clone();
    let amp_cl = amp.clone();
    let map = LinMap::from_fn(amp, amp, move |x| {
        let quad = split2(x, &scalar_cl);
        let mapped = [
            [e_map.apply(&quad[0][0]), e_map.apply(&quad[0][1])],
            [e_map.apply(&quad[1][0]), e_map.apply(&quad[1][1])],
        ];
        embed2(&amp_cl, &mapped)
    });
    Ok(Arc::new(CondExpectation {
        map,
        kind: MapKind::Expectation {
            range: amp_range,
            embedding: amp_embedding,
        },
        origin: ExpectationOrigin::Custom,
    }))
}

/// The compression `[b_ij] ↦ diag(m, m)` with `m = (b₁₁ + b₂₂)/2`: the
/// conditional expectation of `M₂(B)` onto the diagonally embedded copy of
/// `B` given by averaging the diagonal.
pub fn diagonal_average_expectation(
    scalar: &Arc<MultiMatrixAlgebra>,
    amp: &Arc<MultiMatrixAlgebra>,
) -> crate::error::Result<Arc<CondExpectation>> {
    let mut images = Vec::with_capacity(scalar.dim());
    for idx in 0..scalar.dim() {
        let b = AlgebraElement::basis(scalar, idx);
        images.push(diag2(amp, &b, &b));
    }
    let embedding = Arc::new(AlgebraEmbedding::new(scalar, amp, &images)?);

    let scalar_cl = scalar.clone();
    let amp_cl = amp.clone();
    let map = LinMap::from_fn(amp, amp, move |x| {
        let quad = split2(x, &scalar_cl);
        let m = quad[0][0]
            .add(&quad[1][1])
            .scale(crate::algebra::C64::new(0.5, 0.0));
        diag2(&amp_cl, &m, &m)
    });
    Ok(Arc::new(CondExpectation {
        map,
        kind: MapKind::Expectation {
            range: scalar.clone(),
            embedding,
        },
        origin: ExpectationOrigin::Custom,
    }))
}

/// The lifted covariance map
/// `η⁺([b_ij]) = diag(η(b₁₁ + b₂₂), η(b₁₁ + b₂₂))` on `M₂(B)`.
pub fn eta_plus(
    eta: &CondExpectation,
    amp: &Arc<MultiMatrixAlgebra>,
) -> Arc<CondExpectation> {
    let scalar = eta.domain().clone();
    let eta_map = eta.map.clone();
    let amp_cl = amp.clone();
    CondExpectation::linear_from_fn(amp, move |x| {
        let quad = split2(x, &scalar);
        let v = eta_map.apply(&quad[0][0].add(&quad[1][1]));
        diag2(&amp_cl, &v, &v)
    })
}

/// A family of 2×2-matrix generators over a scalar scene: each matrix
/// letter is realized as a 2×2 matrix of scalar-scene polynomials, and
/// moments are computed entrywise — which makes the word-level expectation
/// of this oracle exactly `E ⊗ I₂` of the matrix word.
pub struct MatrixScene {
    scalar: Arc<DistributionSpec>,
    algebra2: Arc<MultiMatrixAlgebra>,
    vars2: Arc<VarTable>,
    realizations: Vec<PolyMat2>,
    base: Arc<CondExpectation>,
    memo: RefCell<HashMap<Vec<u8>, AlgebraElement>>,
}

impl MatrixScene {
    pub fn new(scalar: Arc<DistributionSpec>) -> Self {
        let algebra2 = amplify2(scalar.algebra());
        let base = CondExpectation::identity(&algebra2);
        MatrixScene {
            scalar,
            algebra2,
            vars2: Arc::new(VarTable::new()),
            realizations: Vec::new(),
            base,
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// Add a matrix generator with its realization.  The adjoint letter is
    /// realized automatically as the matrix adjoint.
    pub fn add_var(
        &mut self,
        name: &str,
        self_adjoint: bool,
        realization: PolyMat2,
    ) -> Letter {
        let v = Arc::make_mut(&mut self.vars2).add(name, self_adjoint);
        self.realizations.push(realization);
        self.memo.borrow_mut().clear();
        Letter::new(v)
    }

    pub fn set_base(&mut self, base: Arc<CondExpectation>) {
        assert!(
            base.domain().compatible(&self.algebra2),
            "base expectation must act on the amplified algebra"
        );
        self.base = base;
    }

    pub fn scalar(&self) -> &Arc<DistributionSpec> {
        &self.scalar
    }

    pub fn algebra2(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.algebra2
    }

    pub fn realize(&self, l: Letter) -> PolyMat2 {
        let r = &self.realizations[l.var as usize];
        if l.starred {
            r.adjoint()
        } else {
            r.clone()
        }
    }

    pub fn letter_poly(&self, l: Letter) -> NcPoly {
        NcPoly::letter(&self.algebra2, &self.vars2, l)
    }

    pub fn word_poly(&self, letters: &[Letter]) -> NcPoly {
        NcPoly::word(&self.algebra2, &self.vars2, letters)
    }

    fn expect_monomial_cached(&self, t: &Monomial) -> AlgebraElement {
        let key = monomial_memo_key(t);
        if let Some(v) = self.memo.borrow().get(&key) {
            return v.clone();
        }
        let single = NcPoly {
            algebra: self.algebra2.clone(),
            vars: self.vars2.clone(),
            terms: vec![t.clone()],
        };
        let scalar_alg = self.scalar.algebra().clone();
        let lifted = matrix_lift(
            &single,
            self.scalar.algebra(),
            self.scalar.vars(),
            |c| split2(c, &scalar_alg),
            |l| self.realize(l),
        );
        let quad = [
            [
                self.scalar.expect(&lifted.e[0][0]),
                self.scalar.expect(&lifted.e[0][1]),
            ],
            [
                self.scalar.expect(&lifted.e[1][0]),
                self.scalar.expect(&lifted.e[1][1]),
            ],
        ];
        let v = embed2(&self.algebra2, &quad);
        self.memo.borrow_mut().insert(key, v.clone());
        v
    }
}

/// Stable hash key for a monomial: letters plus raw coefficient bits.
pub(crate) fn monomial_memo_key(t: &Monomial) -> Vec<u8> {
    let mut key = Vec::with_capacity(8 + t.letters.len() * 5 + t.coeffs.len() * 32);
    key.extend_from_slice(&(t.letters.len() as u32).to_le_bytes());
    for l in &t.letters {
        key.extend_from_slice(&l.var.to_le_bytes());
        key.push(l.starred as u8);
    }
    for c in &t.coeffs {
        for b in &c.blocks {
            for z in b.iter() {
                key.extend_from_slice(&z.re.to_bits().to_le_bytes());
                key.extend_from_slice(&z.im.to_bits().to_le_bytes());
            }
        }
    }
    key
}

impl MomentOracle for MatrixScene {
    fn coeff_algebra(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.algebra2
    }

    fn var_table(&self) -> &Arc<VarTable> {
        &self.vars2
    }

    fn expect(&self, poly: &NcPoly) -> AlgebraElement {
        assert!(poly.algebra.compatible(&self.algebra2));
        let mut acc = AlgebraElement::zero(&self.algebra2);
        for t in &poly.terms {
            acc = acc.add(&self.expect_monomial_cached(t));
        }
        acc
    }

    fn base_expectation(&self) -> Arc<CondExpectation> {
        self.base.clone()
    }
}

/// Verify that a matrix generator is semicircular over the amplified
/// algebra with the claimed covariance map: its order-2 cumulants
/// `k²(S·C, S)` must equal `claimed_eta(C)` on a full basis sweep, and all
/// other orders up to `maxdeg` must vanish on sampled coefficient tuples.
pub fn verify_matrix_semicircular(
    scene: &MatrixScene,
    var: Letter,
    claimed_eta: &CondExpectation,
    maxdeg: usize,
    tol: f64,
    probes_per_order: usize,
    seed: u64,
) -> VerificationReport {
    let amp = scene.algebra2().clone();
    let mut report = VerificationReport::new(format!(
        "matrix semicircularity of {} over {}",
        scene.var_table().display_letter(var),
        amp
    ));
    let expect = |p: &NcPoly| scene.expect(p);
    let sp = scene.letter_poly(var);
    let mut rng = crate::seeded_rng(seed ^ 0x6d617472);

    // Order 1: the generator is centered.
    let mean = scene.expect(&sp).sup_norm();
    report.push(CheckLine::new("order 1 (centered)", mean, tol));

    // Order 2 on the full coefficient basis.
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for j in 0..amp.dim() {
        let b = AlgebraElement::basis(&amp, j);
        let got = cumulant_via_moebius(&expect, &[sp.right_mul_elem(&b), sp.clone()]);
        let want = claimed_eta.apply(&b);
        let d = got.dist(&want);
        if d > worst {
            worst = d;
            witness = format!("k²(S·b{j}, S) ≠ η⁺(b{j})");
        }
    }
    report.push(CheckLine::new("order 2 matches η⁺ (basis sweep)", worst, tol).with_witness(witness));

    // Higher orders vanish on random coefficient tuples.
    for s in 3..=maxdeg {
        let mut worst = 0.0f64;
        for probe in 0..probes_per_order {
            let slots: Vec<NcPoly> = (0..s)
                .map(|i| {
                    if i < s - 1 {
                        sp.right_mul_elem(&AlgebraElement::random(&amp, &mut rng))
                    } else {
                        sp.clone()
                    }
                })
                .collect();
            let k = cumulant_via_moebius(&expect, &slots).sup_norm();
            worst = worst.max(k);
            let _ = probe;
        }
        report.push(CheckLine::new(
            format!("order {s} vanishes ({probes_per_order} random tuples)"),
            worst,
            tol,
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::C64;

    #[test]
    fn embed_split_roundtrip() {
        let scalar = MultiMatrixAlgebra::new("B", vec![2, 1]).unwrap();
        let amp = amplify2(&scalar);
        assert_eq!(amp.blocks, vec![4, 2]);
        let mut rng = crate::seeded_rng(9);
        let x = AlgebraElement::random(&amp, &mut rng);
        let quad = split2(&x, &scalar);
        let back = embed2(&amp, &quad);
        assert!(x.dist(&back) == 0.0);
        // Quadrant products match amplified products.
        let y = AlgebraElement::random(&amp, &mut rng);
        let qy = split2(&y, &scalar);
        let prod = x.mul(&y);
        let qp = split2(&prod, &scalar);
        for i in 0..2 {
            for j in 0..2 {
                let manual = quad[i][0].mul(&qy[0][j]).add(&quad[i][1].mul(&qy[1][j]));
                assert!(manual.dist(&qp[i][j]) < 1e-12);
            }
        }
    }

    #[test]
    fn amplified_expectation_is_entrywise() {
        let scalar = MultiMatrixAlgebra::new("M2", vec![2]).unwrap();
        let e = crate::algebra::make_pinching_expectation(
            &scalar,
            &crate::algebra::PinchSpec::DiagonalGroups {
                groups: vec![vec![0]],
                weights: None,
            },
        )
        .unwrap();
        let amp = amplify2(&scalar);
        let lifted = amp_expectation(&e, &amp).unwrap();
        assert!(crate::algebra::verify_expectation(&lifted, 1e-9).passed);
        let mut rng = crate::seeded_rng(21);
        let x = AlgebraElement::random(&amp, &mut rng);
        let quad = split2(&x, &scalar);
        let manual = embed2(
            &amp,
            &[
                [e.apply(&quad[0][0]), e.apply(&quad[0][1])],
                [e.apply(&quad[1][0]), e.apply(&quad[1][1])],
            ],
        );
        assert!(lifted.apply(&x).dist(&manual) < 1e-12);
    }

    #[test]
    fn diagonal_average_is_expectation() {
        let scalar = MultiMatrixAlgebra::new("C^2", vec![1, 1]).unwrap();
        let amp = amplify2(&scalar);
        let e = diagonal_average_expectation(&scalar, &amp).unwrap();
        assert!(crate::algebra::verify_expectation(&e, 1e-9).passed);
    }

    /// The standard matrix model: S = [[s₁, c],[c*, s₂]] over B = ℂ with
    /// standard semicircular corners and a standard circular off-diagonal
    /// is M₂(ℂ)-semicircular with η⁺(C) = tr-ish diagonal lift; its square
    /// has expectation diag(2, 2).
    #[test]
    fn standard_corner_matrix_is_semicircular() {
        let b = MultiMatrixAlgebra::scalars();
        let id = CondExpectation::identity(&b);
        let mut spec = DistributionSpec::new(&b);
        let s1 = spec.add_semicircular("s1", id.clone());
        let s2 = spec.add_semicircular("s2", id.clone());
        let (c, cs) = spec.add_circular("c", id.clone());
        let spec = Arc::new(spec);

        let alg = spec.algebra().clone();
        let vars = spec.vars().clone();
        let lp = |l: Letter| NcPoly::letter(&alg, &vars, l);
        let s_mat = PolyMat2::from_entries(lp(s1), lp(c), lp(cs), lp(s2));

        let mut scene = MatrixScene::new(spec);
        let s = scene.add_var("S", true, s_mat);

        // E⁺(S²) = diag(2, 2): the (0,0) entry is E(s₁² + c c*) = 1 + 1.
        let sq = scene.word_poly(&[s, s]);
        let got = scene.expect(&sq);
        let want = AlgebraElement::scalar(scene.algebra2(), C64::new(2.0, 0.0));
        assert!(got.dist(&want) < 1e-12, "got {got}");

        let claimed = eta_plus(&CondExpectation::identity(&b), scene.algebra2());
        let report = verify_matrix_semicircular(&scene, s, &claimed, 4, 1e-9, 4, 7);
        assert!(report.passed, "{report}");
    }
}

//! Hilbert-module frames for the inner product `⟨x, y⟩ = E(x*y)`, the index
//! element `Σ f_k f_k*` of a conditional expectation, and the corner-embedding
//! scenes that tie the frame machinery to Fisher-information values.
//!
//! The corner construction places two self-adjoint generators on the diagonal
//! and a circular pair in the corners of a 2×2 block matrix.  That matrix is
//! itself semicircular over the amplified algebra, and frame-conjugated
//! versions of it are conjugate candidates for it — which pins the
//! Fisher information of the circular pair to `2·1` relative to `(B, E)` and
//! to `2·Index(E)` relative to `(B, id)`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::algebra::{AlgebraElement, C64, CondExpectation, LinMap, MultiMatrixAlgebra};
use crate::engine::matrix::{
    diag2, eta_plus, split2, verify_matrix_semicircular, MatrixScene,
};
use crate::engine::spec::DistributionSpec;
use crate::engine::MomentOracle;
use crate::error::{CoreError, Result};
use crate::fisher::{
    fisher_information, run_matrix_fisher, verify_conjugate_system, ConjugateCandidate,
    VerifyOptions,
};
use crate::poly::{Letter, NcPoly, PolyMat2};
use crate::report::{CheckLine, VerificationReport};
use crate::{seeded_rng, Rng64};

/// Module inner product `⟨x, y⟩ = E(x*y)`, conjugate-linear in `x` and
/// right-linear in `y`.
pub fn module_inner(
    e: &CondExpectation,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> AlgebraElement {
    e.apply(&x.adjoint().mul(y))
}

/// Apply the frame operator `S(x) = Σ_k g_k·E(g_k* x)` of a generating set.
pub fn frame_operator_apply(
    e: &CondExpectation,
    gens: &[AlgebraElement],
    x: &AlgebraElement,
) -> AlgebraElement {
    let mut acc = AlgebraElement::zero(e.domain());
    for g in gens {
        acc = acc.add(&g.mul(&module_inner(e, g, x)));
    }
    acc
}

/// A normalized tight frame: `Σ_k f_k·E(f_k* x) = x` for every `x`.
pub struct ModuleFrame {
    pub expectation: Arc<CondExpectation>,
    pub vectors: Vec<AlgebraElement>,
}

/// Eigenvalue floor below which the frame operator counts as singular
/// (signals a near-degenerate expectation).
pub const FRAME_OPERATOR_FLOOR: f64 = 1e-8;

/// Tighten an arbitrary generating set: returns `{S^{−1/2}(g_k)}` where `S`
/// is the frame operator of the set.
///
/// `S` is self-adjoint and positive for the scalar product
/// `(x, y) ↦ τ(E(x*y))`, so it is whitened by the Cholesky factor of that
/// product's Gram matrix before the eigendecomposition that produces
/// `S^{−1/2}`.
pub fn tight_frame_from(
    e: &Arc<CondExpectation>,
    gens: &[AlgebraElement],
) -> Result<ModuleFrame> {
    let alg = e.domain().clone();
    let n = alg.dim();
    let basis: Vec<AlgebraElement> = (0..n).map(|k| AlgebraElement::basis(&alg, k)).collect();

    let gram = DMatrix::from_fn(n, n, |i, j| {
        module_inner(e, &basis[i], &basis[j]).total_trace()
    });
    let chol = gram.clone().cholesky().ok_or_else(|| {
        CoreError::Degenerate(
            "module inner product is degenerate; the expectation is not faithful".into(),
        )
    })?;
    let lh = chol.l().adjoint();
    let lh_inv = lh
        .clone()
        .try_inverse()
        .ok_or_else(|| CoreError::Degenerate("Gram factor is not invertible".into()))?;

    let op = LinMap::from_fn(&alg, &alg, |x| frame_operator_apply(e, gens, x));

    // The frame operator must commute with the right action of the range
    // subalgebra; a violation means the expectation structure is broken.
    if let (Some(range), Some(embed)) = (e.range(), e.embedding()) {
        let mut worst: f64 = 0.0;
        for j in 0..range.dim() {
            let d = embed.apply(&AlgebraElement::basis(range, j));
            for x in &basis {
                let lhs = op.apply(&x.mul(&d));
                let rhs = op.apply(x).mul(&d);
                worst = worst.max(lhs.dist(&rhs));
            }
        }
        if worst > 1e-7 {
            return Err(CoreError::ExpectationInvalid(format!(
                "frame operator does not commute with the right module action (defect {worst:.3e})"
            )));
        }
    }

    let white = &lh * &op.matrix * &lh_inv;
    let sym = (&white + white.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < FRAME_OPERATOR_FLOOR {
        return Err(CoreError::Degenerate(format!(
            "frame operator is numerically singular (min eigenvalue {min:.3e})"
        )));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
    let white_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let op_inv_sqrt = &lh_inv * white_inv_sqrt * &lh;

    let vectors = gens
        .iter()
        .map(|g| AlgebraElement::from_coords(&alg, &(&op_inv_sqrt * g.coords())))
        .collect();
    Ok(ModuleFrame {
        expectation: e.clone(),
        vectors,
    })
}

/// Normalized tight frame via the canonical construction: tighten the
/// matrix-unit basis of the domain.
pub fn compute_tight_frame(e: &Arc<CondExpectation>) -> Result<ModuleFrame> {
    let alg = e.domain().clone();
    let basis: Vec<AlgebraElement> = (0..alg.dim())
        .map(|k| AlgebraElement::basis(&alg, k))
        .collect();
    tight_frame_from(e, &basis)
}

/// Largest reconstruction error `‖Σ_k f_k·E(f_k* b) − b‖` over the basis.
pub fn frame_defect(frame: &ModuleFrame) -> f64 {
    let e = frame.expectation.as_ref();
    let alg = e.domain();
    (0..alg.dim())
        .map(|k| {
            let b = AlgebraElement::basis(alg, k);
            frame_operator_apply(e, &frame.vectors, &b).dist(&b)
        })
        .fold(0.0, f64::max)
}

/// The element `Σ_k f_k f_k*` of a frame.
pub fn frame_index_element(frame: &ModuleFrame) -> AlgebraElement {
    let alg = frame.expectation.domain();
    frame
        .vectors
        .iter()
        .fold(AlgebraElement::zero(alg), |acc, f| {
            acc.add(&f.mul(&f.adjoint()))
        })
}

/// A second generating set: the basis recombined by a random invertible
/// linear map, used to confirm that the index does not depend on the frame.
fn recombined_basis(
    alg: &Arc<MultiMatrixAlgebra>,
    rng: &mut Rng64,
) -> Result<Vec<AlgebraElement>> {
    let n = alg.dim();
    for _ in 0..8 {
        let t = DMatrix::from_fn(n, n, |i, j| {
            let noise = C64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            if i == j {
                C64::new(1.0, 0.0) + noise
            } else {
                noise
            }
        });
        if t.clone().try_inverse().is_some() {
            return Ok((0..n)
                .map(|k| {
                    AlgebraElement::from_coords(alg, &(&t * AlgebraElement::basis(alg, k).coords()))
                })
                .collect());
        }
    }
    Err(CoreError::Degenerate(
        "could not draw an invertible recombination of the basis".into(),
    ))
}

/// The index element `Σ_k f_k f_k*` of a conditional expectation, together
/// with a report on its defining invariants: tight-frame reconstruction,
/// self-adjointness, positivity, centrality, and independence of the
/// generating set.
pub fn index(
    e: &Arc<CondExpectation>,
    tol: f64,
) -> Result<(AlgebraElement, VerificationReport)> {
    let alg = e.domain().clone();
    let mut report = VerificationReport::new(format!("index of the expectation on {alg}"));
    let frame = compute_tight_frame(e)?;
    report.fact("frame size", frame.vectors.len());
    report.push(CheckLine::new(
        "frame reconstructs every basis element",
        frame_defect(&frame),
        tol,
    ));

    let idx = frame_index_element(&frame);
    report.push(CheckLine::new(
        "index is self-adjoint",
        idx.hermitian_defect(),
        tol,
    ));
    let min_eig = idx.min_eigenvalue();
    report.push(CheckLine::verdict(
        "index is positive and invertible",
        min_eig > 1e-6,
        format!("min eigenvalue {min_eig:.6}"),
    ));
    let central = (0..alg.dim())
        .map(|k| {
            let b = AlgebraElement::basis(&alg, k);
            idx.mul(&b).dist(&b.mul(&idx))
        })
        .fold(0.0, f64::max);
    report.push(CheckLine::new("index is central", central, tol));

    let mut rng = seeded_rng(0x6672_616d);
    let gens2 = recombined_basis(&alg, &mut rng)?;
    let frame2 = tight_frame_from(e, &gens2)?;
    let itol = tol.max(1e-8);
    report.push(CheckLine::new(
        "recombined generating set also yields a tight frame",
        frame_defect(&frame2),
        itol,
    ));
    report.push(CheckLine::new(
        "index is independent of the generating set",
        frame_index_element(&frame2).dist(&idx),
        itol,
    ));
    report.fact("index", &idx);
    Ok((idx, report))
}

// ---------------------------------------------------------------------------
// The 2×2 corner scene.
// ---------------------------------------------------------------------------

/// Two self-adjoint generators on the diagonal and a circular pair in the
/// corners, every generator with the same covariance map and all of them
/// mutually free.
pub struct CornerScene {
    pub spec: Arc<DistributionSpec>,
    pub s1: Letter,
    pub c: Letter,
    pub c_star: Letter,
    pub s2: Letter,
}

/// Build the standard corner scene over the domain of `cov`.
pub fn standard_corner_scene(cov: &Arc<CondExpectation>) -> CornerScene {
    let mut spec = DistributionSpec::new(cov.domain());
    let s1 = spec.add_semicircular("s1", cov.clone());
    let (c, c_star) = spec.add_circular("c", cov.clone());
    let s2 = spec.add_semicircular("s2", cov.clone());
    CornerScene {
        spec: Arc::new(spec),
        s1,
        c,
        c_star,
        s2,
    }
}

impl CornerScene {
    /// The block matrix `[[s₁, c], [c*, s₂]]` as a polynomial matrix.
    pub fn corner_matrix(&self) -> PolyMat2 {
        PolyMat2::from_entries(
            self.spec.letter_poly(self.s1),
            self.spec.letter_poly(self.c),
            self.spec.letter_poly(self.c_star),
            self.spec.letter_poly(self.s2),
        )
    }
}

/// Check that the corner matrix built over covariance `eta` is itself
/// semicircular over the amplified algebra, with the lifted covariance
/// `C ↦ diag(η(c₁₁ + c₂₂), η(c₁₁ + c₂₂))`.
pub fn corner_matrix_semicircularity(
    eta: &Arc<CondExpectation>,
    maxdeg: usize,
    tol: f64,
    probes_per_order: usize,
    seed: u64,
) -> VerificationReport {
    let scene = standard_corner_scene(eta);
    let mut mscene = MatrixScene::new(scene.spec.clone());
    let s = mscene.add_var("S", true, scene.corner_matrix());
    let amp = mscene.algebra2().clone();
    let claimed = eta_plus(eta, &amp);
    verify_matrix_semicircular(&mscene, s, &claimed, maxdeg, tol, probes_per_order, seed)
}

// ---------------------------------------------------------------------------
// Frame-conjugated corner candidates and the two Fisher-information values.
// ---------------------------------------------------------------------------

/// `Σ_k f_k·ℓ·f_k*` — a generator sandwiched by a frame.
fn frame_sandwich(spec: &DistributionSpec, frame: &[AlgebraElement], l: Letter) -> NcPoly {
    let mut acc = NcPoly::zero(spec.algebra(), spec.vars());
    for f in frame {
        acc = acc.add(
            &spec
                .letter_poly(l)
                .left_mul_elem(f)
                .right_mul_elem(&f.adjoint()),
        );
    }
    acc
}

/// The frame-built conjugate candidate `ξ = Σ_k f_k·X·f_k*` of a single
/// generator, relative to identity coefficient maps.
pub fn conjugate_semicircular_wrt_id(
    spec: &Arc<DistributionSpec>,
    x: Letter,
    frame: &[AlgebraElement],
) -> Result<ConjugateCandidate> {
    let xi = frame_sandwich(spec, frame, x);
    ConjugateCandidate::new(
        vec![x],
        vec![xi],
        vec![CondExpectation::identity(spec.algebra())],
    )
}

/// `Σ_k diag(f_k, f_k) · S · diag(r(f_k), r(f_k))` for a frame and a
/// right-coefficient rule `r` — the corner-matrix conjugate candidates.
fn frame_corner_candidate(
    scene: &CornerScene,
    vectors: &[AlgebraElement],
    right: impl Fn(&AlgebraElement) -> AlgebraElement,
) -> PolyMat2 {
    let alg = scene.spec.algebra();
    let vars = scene.spec.vars();
    let zero = AlgebraElement::zero(alg);
    let s_pm = scene.corner_matrix();
    let mut acc = PolyMat2::zero(alg, vars);
    for f in vectors {
        let r = right(f);
        let left = [[f.clone(), zero.clone()], [zero.clone(), f.clone()]];
        let right_m = [[r.clone(), zero.clone()], [zero.clone(), r]];
        acc = acc.add(
            &PolyMat2::from_coeffs(alg, vars, &left)
                .mul(&s_pm)
                .mul_coeffs(&right_m),
        );
    }
    acc
}

/// Verification budgets for the corner scenes: scalar-level and
/// matrix-level settings.
#[derive(Clone, Debug)]
pub struct FrameCheckOptions {
    pub scalar: VerifyOptions,
    pub matrix: VerifyOptions,
}

impl Default for FrameCheckOptions {
    fn default() -> Self {
        FrameCheckOptions {
            scalar: VerifyOptions {
                maxdeg: 6,
                budget: 256,
                ..VerifyOptions::default()
            },
            matrix: VerifyOptions {
                maxdeg: 4,
                budget: 48,
                seed: 0x66726d78,
                ..VerifyOptions::default()
            },
        }
    }
}

/// Outcome of a corner-scene Fisher-information check.
pub struct FrameTheoremOutcome {
    pub report: VerificationReport,
    /// Fisher information of the circular pair at the scalar level.
    pub phi_scalar: Option<AlgebraElement>,
    /// Fisher information of the corner matrix at the matrix level.
    pub phi_matrix: Option<AlgebraElement>,
    /// The index element, for the identity-coefficient scene.
    pub index: Option<AlgebraElement>,
}

/// Fisher information of a circular pair relative to `(B, E)`: verifies the
/// scalar conjugate system `{s₁, c*, c, s₂}`, the frame-built matrix
/// conjugate of the corner matrix, extracts the corner values
/// `E(xx*) = E(yy*) = 1`, and pins the pair value to `2·1`.
pub fn theorem8_check(
    e: &Arc<CondExpectation>,
    opts: &FrameCheckOptions,
) -> Result<FrameTheoremOutcome> {
    let alg = e.domain().clone();
    let unit = AlgebraElement::unit(&alg);
    let tol = opts.scalar.tol;
    let mut report = VerificationReport::new(format!(
        "circular pair relative to the expectation on {alg}"
    ));

    let scene = standard_corner_scene(e);
    let spec = scene.spec.clone();
    let lp = |l: Letter| spec.letter_poly(l);

    let cand = ConjugateCandidate::new(
        vec![scene.s1, scene.c, scene.c_star, scene.s2],
        vec![lp(scene.s1), lp(scene.c_star), lp(scene.c), lp(scene.s2)],
        vec![e.clone(), e.clone(), e.clone(), e.clone()],
    )?;
    let verdict = verify_conjugate_system(spec.as_ref(), &cand, &opts.scalar);
    let scalar_ok = verdict.report.passed;
    report.absorb(verdict.report);

    let cross = [
        (scene.s1, scene.c_star),
        (scene.s1, scene.c),
        (scene.c_star, scene.s2),
        (scene.c, scene.s2),
    ]
    .iter()
    .map(|&(u, v)| spec.expect(&lp(u).mul(&lp(v))).sup_norm())
    .fold(0.0, f64::max);
    report.push(CheckLine::new(
        "conjugates of distinct generators are orthogonal",
        cross,
        tol,
    ));

    let two = unit.scale(C64::new(2.0, 0.0));
    let phi_scalar = if scalar_ok {
        let pair = spec
            .expect(&lp(scene.c_star).mul(&lp(scene.c_star).adjoint()))
            .add(&spec.expect(&lp(scene.c).mul(&lp(scene.c).adjoint())));
        report.push(CheckLine::new(
            "pair Fisher information equals 2·1",
            pair.dist(&two),
            tol,
        ));
        Some(pair)
    } else {
        report.push(CheckLine::verdict(
            "pair Fisher information equals 2·1",
            false,
            "scalar verification failed",
        ));
        None
    };

    let frame = compute_tight_frame(e)?;
    report.fact("frame size", frame.vectors.len());
    report.push(CheckLine::new(
        "frame is normalized tight",
        frame_defect(&frame),
        tol,
    ));

    let mut mscene = MatrixScene::new(scene.spec.clone());
    let s_letter = mscene.add_var("S", true, scene.corner_matrix());
    let y_pm = frame_corner_candidate(&scene, &frame.vectors, |f| e.apply(&f.adjoint()));
    let y_letter = mscene.add_var("Y", false, y_pm);
    let amp = mscene.algebra2().clone();

    let cand_m = ConjugateCandidate::new(
        vec![s_letter],
        vec![mscene.letter_poly(y_letter)],
        vec![eta_plus(e, &amp)],
    )?;
    let formula = diag2(&amp, &two, &two);
    let outcome = run_matrix_fisher(
        "matrix-level conjugate of the corner matrix",
        &mscene,
        &cand_m,
        &formula,
        &opts.matrix,
    );
    report.absorb(outcome.report);
    let phi_matrix = outcome.phi;

    if let Some(phi_m) = &phi_matrix {
        let q = split2(phi_m, &alg);
        let phi_s1 = spec.expect(&lp(scene.s1).mul(&lp(scene.s1).adjoint()));
        let phi_s2 = spec.expect(&lp(scene.s2).mul(&lp(scene.s2).adjoint()));
        let yy = spec.expect(&lp(scene.c).mul(&lp(scene.c).adjoint()));
        let xx = spec.expect(&lp(scene.c_star).mul(&lp(scene.c_star).adjoint()));
        report.push(CheckLine::new(
            "corner (1,1) extracts E(yy*) = 1",
            q[0][0].sub(&phi_s1).dist(&unit),
            tol,
        ));
        report.push(CheckLine::new(
            "corner (2,2) extracts E(xx*) = 1",
            q[1][1].sub(&phi_s2).dist(&unit),
            tol,
        ));
        report.push(CheckLine::new(
            "extraction matches the direct products",
            q[0][0]
                .sub(&phi_s1)
                .dist(&yy)
                .max(q[1][1].sub(&phi_s2).dist(&xx)),
            tol,
        ));
        report.push(CheckLine::new(
            "off-diagonal corners vanish",
            q[0][1].sup_norm().max(q[1][0].sup_norm()),
            tol,
        ));
        if let Some(ps) = &phi_scalar {
            report.push(CheckLine::new(
                "matrix route reproduces the scalar pair value",
                q[0][0].sub(&phi_s1).add(&q[1][1].sub(&phi_s2)).dist(ps),
                tol,
            ));
        }
    }

    Ok(FrameTheoremOutcome {
        report,
        phi_scalar,
        phi_matrix,
        index: None,
    })
}

/// Fisher information of a circular pair relative to `(B, id)`: verifies the
/// frame-sandwiched scalar conjugate system, the identity `E(ξξ*) = Index`,
/// the matrix-level frame candidate, and pins the pair value to
/// `2·Index(E)`.
pub fn theorem9_check(
    e: &Arc<CondExpectation>,
    opts: &FrameCheckOptions,
) -> Result<FrameTheoremOutcome> {
    let alg = e.domain().clone();
    let tol = opts.scalar.tol;
    let mut report = VerificationReport::new(format!(
        "circular pair relative to identity coefficients on {alg}"
    ));

    let (idx, idx_report) = index(e, tol)?;
    report.absorb(idx_report);

    let scene = standard_corner_scene(e);
    let spec = scene.spec.clone();
    let frame = compute_tight_frame(e)?;
    let sandwich = |l: Letter| frame_sandwich(&spec, &frame.vectors, l);

    let id_map = CondExpectation::identity(&alg);
    let cand = ConjugateCandidate::new(
        vec![scene.s1, scene.c, scene.c_star, scene.s2],
        vec![
            sandwich(scene.s1),
            sandwich(scene.c_star),
            sandwich(scene.c),
            sandwich(scene.s2),
        ],
        vec![
            id_map.clone(),
            id_map.clone(),
            id_map.clone(),
            id_map.clone(),
        ],
    )?;
    let verdict = verify_conjugate_system(spec.as_ref(), &cand, &opts.scalar);
    let scalar_ok = verdict.report.passed;
    report.absorb(verdict.report);

    let xi_for_c = sandwich(scene.c_star);
    let xi_for_cs = sandwich(scene.c);
    let val_c = spec.expect(&xi_for_c.mul(&xi_for_c.adjoint()));
    let val_cs = spec.expect(&xi_for_cs.mul(&xi_for_cs.adjoint()));
    report.push(CheckLine::new(
        "E(ξξ*) of each pair member equals the index",
        val_c.dist(&idx).max(val_cs.dist(&idx)),
        tol,
    ));
    let two_idx = idx.scale(C64::new(2.0, 0.0));
    let phi_scalar = if scalar_ok {
        let pair = val_c.add(&val_cs);
        report.push(CheckLine::new(
            "pair Fisher information equals 2·Index",
            pair.dist(&two_idx),
            tol,
        ));
        Some(pair)
    } else {
        report.push(CheckLine::verdict(
            "pair Fisher information equals 2·Index",
            false,
            "scalar verification failed",
        ));
        None
    };

    let mut mscene = MatrixScene::new(scene.spec.clone());
    let s_letter = mscene.add_var("S", true, scene.corner_matrix());
    let y_pm = frame_corner_candidate(&scene, &frame.vectors, |f| f.adjoint());
    let y_letter = mscene.add_var("Y", false, y_pm);
    let amp = mscene.algebra2().clone();

    let cand_m = ConjugateCandidate::new(
        vec![s_letter],
        vec![mscene.letter_poly(y_letter)],
        vec![eta_plus(&id_map, &amp)],
    )?;
    let formula = diag2(&amp, &two_idx, &two_idx);
    let outcome = run_matrix_fisher(
        "matrix-level conjugate of the corner matrix (identity coefficients)",
        &mscene,
        &cand_m,
        &formula,
        &opts.matrix,
    );
    report.absorb(outcome.report);
    let phi_matrix = outcome.phi;

    if let Some(phi_m) = &phi_matrix {
        let q = split2(phi_m, &alg);
        let xi_s1 = sandwich(scene.s1);
        let xi_s2 = sandwich(scene.s2);
        let phi_s1 = spec.expect(&xi_s1.mul(&xi_s1.adjoint()));
        let phi_s2 = spec.expect(&xi_s2.mul(&xi_s2.adjoint()));
        report.push(CheckLine::new(
            "single-generator value equals the index",
            phi_s1.dist(&idx).max(phi_s2.dist(&idx)),
            tol,
        ));
        report.push(CheckLine::new(
            "corner extraction equals the index",
            q[0][0]
                .sub(&phi_s1)
                .dist(&idx)
                .max(q[1][1].sub(&phi_s2).dist(&idx)),
            tol,
        ));
        if let Some(ps) = &phi_scalar {
            report.push(CheckLine::new(
                "matrix route reproduces the scalar pair value",
                q[0][0].sub(&phi_s1).add(&q[1][1].sub(&phi_s2)).dist(ps),
                tol,
            ));
        }
    }

    // Closure: one generator with the frame-built conjugate has the index
    // itself as its Fisher information.
    let mut single = DistributionSpec::new(&alg);
    let x = single.add_semicircular("x", e.clone());
    let single = Arc::new(single);
    let closure_cand = conjugate_semicircular_wrt_id(&single, x, &frame.vectors)?;
    match fisher_information(single.as_ref(), &closure_cand, &opts.scalar) {
        Ok((phi_x, _)) => report.push(CheckLine::new(
            "frame-built conjugate of one generator has the index as its value",
            phi_x.dist(&idx),
            tol,
        )),
        Err(err) => report.push(CheckLine::verdict(
            "frame-built conjugate of one generator has the index as its value",
            false,
            err.to_string(),
        )),
    }

    Ok(FrameTheoremOutcome {
        report,
        phi_scalar,
        phi_matrix,
        index: Some(idx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_pinching_expectation, PinchSpec};

    fn m2() -> Arc<MultiMatrixAlgebra> {
        MultiMatrixAlgebra::new("M2", vec![2]).unwrap()
    }

    fn c2() -> Arc<MultiMatrixAlgebra> {
        MultiMatrixAlgebra::new("C2", vec![1, 1]).unwrap()
    }

    fn trace_m2() -> Arc<CondExpectation> {
        make_pinching_expectation(
            &m2(),
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0]],
                weights: None,
            },
        )
        .unwrap()
    }

    fn average_c2() -> Arc<CondExpectation> {
        make_pinching_expectation(
            &c2(),
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0, 1]],
                weights: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn identity_expectation_has_index_one() {
        let alg = m2();
        let e = CondExpectation::identity(&alg);
        let (idx, report) = index(&e, 1e-9).unwrap();
        assert!(report.passed, "{report}");
        assert!(idx.dist(&AlgebraElement::unit(&alg)) < 1e-9, "index = {idx}");
    }

    #[test]
    fn trace_expectation_has_index_four() {
        let alg = m2();
        let e = trace_m2();
        let (idx, report) = index(&e, 1e-9).unwrap();
        assert!(report.passed, "{report}");
        let four = AlgebraElement::unit(&alg).scale(C64::new(4.0, 0.0));
        assert!(idx.dist(&four) < 1e-8, "index = {idx}");

        // The canonical construction tightens the matrix units to √2-scaled
        // matrix units.
        let frame = compute_tight_frame(&e).unwrap();
        assert_eq!(frame.vectors.len(), 4);
        let root2 = C64::new(2f64.sqrt(), 0.0);
        for (k, f) in frame.vectors.iter().enumerate() {
            let expected = AlgebraElement::basis(&alg, k).scale(root2);
            assert!(f.dist(&expected) < 1e-9, "vector {k} = {f}");
        }
    }

    #[test]
    fn averaging_expectation_has_index_two() {
        let alg = c2();
        let e = average_c2();
        let (idx, report) = index(&e, 1e-9).unwrap();
        assert!(report.passed, "{report}");
        let twice = AlgebraElement::unit(&alg).scale(C64::new(2.0, 0.0));
        assert!(idx.dist(&twice) < 1e-8, "index = {idx}");
    }

    #[test]
    fn weighted_averaging_has_central_nonscalar_index() {
        let alg = c2();
        let e = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0, 1]],
                weights: Some(vec![vec![0.25, 0.75]]),
            },
        )
        .unwrap();
        let (idx, report) = index(&e, 1e-9).unwrap();
        assert!(report.passed, "{report}");
        let expected = AlgebraElement::from_fn(&alg, |k, _, _| {
            if k == 0 {
                C64::new(4.0, 0.0)
            } else {
                C64::new(4.0 / 3.0, 0.0)
            }
        });
        assert!(idx.dist(&expected) < 1e-8, "index = {idx}");
    }

    #[test]
    fn corner_matrix_is_semicircular_over_averaged_pair() {
        let e = average_c2();
        let report = corner_matrix_semicircularity(&e, 4, 1e-9, 3, 17);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn circular_pair_value_is_two_over_scalars() {
        let alg = MultiMatrixAlgebra::scalars();
        let e = CondExpectation::identity(&alg);
        let opts = FrameCheckOptions {
            scalar: VerifyOptions {
                maxdeg: 5,
                budget: 128,
                ..VerifyOptions::default()
            },
            matrix: VerifyOptions {
                maxdeg: 4,
                budget: 32,
                ..VerifyOptions::default()
            },
        };
        let out = theorem8_check(&e, &opts).unwrap();
        assert!(out.report.passed, "{}", out.report);
        let two = AlgebraElement::unit(&alg).scale(C64::new(2.0, 0.0));
        assert!(out.phi_scalar.unwrap().dist(&two) < 1e-9);
        assert!(out.phi_matrix.is_some());
    }

    #[test]
    fn identity_coefficient_value_doubles_the_index() {
        let alg = c2();
        let e = average_c2();
        let opts = FrameCheckOptions {
            scalar: VerifyOptions {
                maxdeg: 4,
                budget: 64,
                ..VerifyOptions::default()
            },
            matrix: VerifyOptions {
                maxdeg: 3,
                budget: 24,
                ..VerifyOptions::default()
            },
        };
        let out = theorem9_check(&e, &opts).unwrap();
        assert!(out.report.passed, "{}", out.report);
        let four = AlgebraElement::unit(&alg).scale(C64::new(4.0, 0.0));
        assert!(out.phi_scalar.unwrap().dist(&four) < 1e-8);
        let twice = AlgebraElement::unit(&alg).scale(C64::new(2.0, 0.0));
        assert!(out.index.unwrap().dist(&twice) < 1e-8);
    }
}

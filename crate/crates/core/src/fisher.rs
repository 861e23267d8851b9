//! Conjugate-system verification and free Fisher information.
//!
//! A candidate conjugate system for a variable family `{Z_i}` consists of
//! vectors `ξ_i` (polynomials in the scene's letters) together with linear
//! maps `η_i` on the coefficient algebra.  Verification runs two
//! independent routes:
//!
//! 1. **moment route** — the defining identity, with `E` the scene's
//!    word-level expectation and `F` its base compression:
//!    `F(E(ξ_i c₀ Z_{i₁} c₁ ⋯ Z_{i_m} c_m)) =
//!       Σ_j δ_{i,i_j} F(η_i(E(c₀ Z_{i₁} ⋯ c_{j−1}))) · F(E(c_j Z_{i_{j+1}} ⋯ c_m))`
//!    for all `m ≥ 0` and coefficients from the full coefficient algebra;
//! 2. **cumulant route** — `k¹(ξ_i c) = 0`,
//!    `k²(ξ_i ⊗ c·Z_j) = δ_{ij} F(η_i(c))`, `k²` against higher-degree word
//!    arguments vanishes, and all cumulants of order ≥ 3 with `ξ_i` in the
//!    first slot vanish.  Cumulants are induced by the *uncompressed*
//!    word-level expectation.
//!
//! Both routes report the first violated degree and must agree on it.  The
//! Fisher information `Σ_i F(E(ξ_i ξ_i*))` is only computable on a
//! verified candidate.

use crate::algebra::{AlgebraElement, CondExpectation, MultiMatrixAlgebra, C64};
use crate::engine::cumulant::cumulant_via_moebius;
use crate::engine::matrix::{diagonal_average_expectation, embed2, split2, MatrixScene};
use crate::engine::spec::DistributionSpec;
use crate::engine::MomentOracle;
use crate::error::{CoreError, Result};
use crate::poly::{Letter, NcPoly, PolyMat2};
use crate::report::{CheckLine, VerificationReport};
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A candidate conjugate system: one vector and one coefficient map per
/// variable.  Variables are letters of the oracle (a non-self-adjoint
/// variable and its adjoint are separate entries).
#[derive(Clone)]
pub struct ConjugateCandidate {
    pub variables: Vec<Letter>,
    pub xi: Vec<NcPoly>,
    pub eta: Vec<Arc<CondExpectation>>,
}

impl ConjugateCandidate {
    pub fn new(
        variables: Vec<Letter>,
        xi: Vec<NcPoly>,
        eta: Vec<Arc<CondExpectation>>,
    ) -> Result<Self> {
        if variables.len() != xi.len() || variables.len() != eta.len() {
            return Err(CoreError::InvalidConstruction(
                "conjugate candidate needs one vector and one map per variable".into(),
            ));
        }
        if variables.is_empty() {
            return Err(CoreError::InvalidConstruction(
                "conjugate candidate needs at least one variable".into(),
            ));
        }
        Ok(ConjugateCandidate { variables, xi, eta })
    }
}

/// Options for conjugate-system verification.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Maximum total word degree probed (the moment route tests words of
    /// up to `maxdeg − 1` variable letters; the cumulant route tests
    /// cumulant orders up to `maxdeg`).
    pub maxdeg: usize,
    pub tol: f64,
    /// Tuple budget per degree and check: sweeps are exhaustive when the
    /// tuple space is at most this large, otherwise this many seeded
    /// random tuples are drawn.
    pub budget: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            maxdeg: 6,
            tol: 1e-9,
            budget: 512,
            seed: 0xc0217a6e,
        }
    }
}

/// Outcome of a conjugate-system verification.
pub struct ConjugateVerdict {
    pub report: VerificationReport,
    /// First word degree at which the moment route found a violation.
    pub moment_first_violated: Option<usize>,
    /// First degree at which the cumulant route found a violation.
    pub cumulant_first_violated: Option<usize>,
}

/// Enumerate index tuples over the product space with the given per-slot
/// sizes: exhaustive when the space fits in the budget, otherwise a seeded
/// random sample of `budget` tuples.  Returns the tuples and whether the
/// sweep was exhaustive.
pub(crate) fn sample_index_tuples(
    sizes: &[usize],
    budget: usize,
    rng: &mut crate::Rng64,
) -> (Vec<Vec<usize>>, bool) {
    let mut total = 1usize;
    for &s in sizes {
        total = total.saturating_mul(s.max(1));
    }
    if sizes.iter().any(|&s| s == 0) {
        return (Vec::new(), true);
    }
    if total <= budget {
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; sizes.len()];
        loop {
            out.push(idx.clone());
            let mut k = 0;
            loop {
                if k == sizes.len() {
                    return (out, true);
                }
                idx[k] += 1;
                if idx[k] < sizes[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(budget);
    for _ in 0..budget {
        out.push(sizes.iter().map(|&s| rng.random_range(0..s)).collect());
    }
    (out, false)
}

struct DegreeTracker {
    worst: BTreeMap<usize, f64>,
}

impl DegreeTracker {
    fn new() -> Self {
        DegreeTracker {
            worst: BTreeMap::new(),
        }
    }
    fn record(&mut self, degree: usize, violation: f64) {
        let e = self.worst.entry(degree).or_insert(0.0);
        if violation > *e {
            *e = violation;
        }
    }
    fn first_violated(&self, tol: f64) -> Option<usize> {
        self.worst
            .iter()
            .find(|(_, &v)| v > tol)
            .map(|(&d, _)| d)
    }
    fn max(&self) -> f64 {
        self.worst.values().cloned().fold(0.0, f64::max)
    }
}

/// Verify a candidate conjugate system against the oracle's distribution.
pub fn verify_conjugate_system(
    oracle: &dyn MomentOracle,
    cand: &ConjugateCandidate,
    opts: &VerifyOptions,
) -> ConjugateVerdict {
    let alg = oracle.coeff_algebra().clone();
    let vars = oracle.var_table().clone();
    let base = oracle.base_expectation();
    let dim = alg.dim();
    let nv = cand.variables.len();
    let lp = |l: Letter| NcPoly::letter(&alg, &vars, l);

    let mut report = VerificationReport::new(format!(
        "conjugate system of {} variable(s) over {}",
        nv, alg
    ));
    report.fact("maxdeg", format!("{}", opts.maxdeg));
    report.fact("tuple budget per degree", format!("{}", opts.budget));
    report.fact("seed", format!("{:#x}", opts.seed));

    let mut rng = crate::seeded_rng(opts.seed);
    let mut moment = DegreeTracker::new();
    let mut moment_witness = String::new();

    // ---- Moment route ----------------------------------------------------
    let mut any_sampled = false;
    for m in 0..opts.maxdeg {
        // Words with m variable letters and m+1 coefficients; one sweep per
        // candidate variable index i.
        let mut sizes = vec![nv; m];
        sizes.extend(std::iter::repeat(dim).take(m + 1));
        for i in 0..nv {
            let (tuples, exhaustive) = sample_index_tuples(&sizes, opts.budget, &mut rng);
            any_sampled |= !exhaustive;
            for t in &tuples {
                let letters: Vec<Letter> =
                    t[..m].iter().map(|&k| cand.variables[k]).collect();
                let coeffs: Vec<AlgebraElement> = t[m..]
                    .iter()
                    .map(|&k| AlgebraElement::basis(&alg, k))
                    .collect();

                // Running prefixes: pref[j] = c₀ Z₁ c₁ ⋯ Z_j c_j.
                let mut prefixes = Vec::with_capacity(m + 1);
                let mut acc = NcPoly::constant(&alg, &vars, coeffs[0].clone());
                prefixes.push(acc.clone());
                for (j, &z) in letters.iter().enumerate() {
                    acc = acc.mul(&lp(z)).right_mul_elem(&coeffs[j + 1]);
                    prefixes.push(acc.clone());
                }
                let word = prefixes[m].clone();

                // Suffixes: suf[j] = c_j Z_{j+1} ⋯ Z_m c_m.
                let mut suffixes = vec![NcPoly::constant(&alg, &vars, coeffs[m].clone())];
                for j in (0..m).rev() {
                    let rest = lp(letters[j]).mul(&suffixes[0]);
                    suffixes.insert(0, rest.left_mul_elem(&coeffs[j]));
                }

                let lhs = base.apply(&oracle.expect(&cand.xi[i].mul(&word)));
                let mut rhs = AlgebraElement::zero(&alg);
                for (j, &z) in letters.iter().enumerate() {
                    if z != cand.variables[i] {
                        continue;
                    }
                    let pre = oracle.expect(&prefixes[j]);
                    let factor = base.apply(&cand.eta[i].apply(&pre));
                    let suf = base.apply(&oracle.expect(&suffixes[j + 1]));
                    rhs = rhs.add(&factor.mul(&suf));
                }
                let v = lhs.dist(&rhs);
                moment.record(m + 1, v);
                if v > opts.tol && moment_witness.is_empty() {
                    moment_witness = format!(
                        "identity fails for ξ_{} against a word of {} letter(s)",
                        vars.display_letter(cand.variables[i]),
                        m
                    );
                }
            }
        }
    }
    report.fact(
        "moment-route sweeps",
        if any_sampled {
            "sampled (budget-limited)".to_string()
        } else {
            "exhaustive".to_string()
        },
    );
    report.push(
        CheckLine::new("moment identity (all degrees)", moment.max(), opts.tol)
            .with_witness(moment_witness),
    );

    // ---- Cumulant route --------------------------------------------------
    let expect = |p: &NcPoly| oracle.expect(p);
    let mut cumulant = DegreeTracker::new();
    let mut cumulant_witness = String::new();
    let note_violation = |tracker: &mut DegreeTracker,
                              witness: &mut String,
                              degree: usize,
                              v: f64,
                              label: &str| {
        tracker.record(degree, v);
        if v > opts.tol && witness.is_empty() {
            *witness = label.to_string();
        }
    };

    // k¹(ξ_i c) = 0.
    for i in 0..nv {
        for k in 0..dim {
            let c = AlgebraElement::basis(&alg, k);
            let v = oracle.expect(&cand.xi[i].right_mul_elem(&c)).sup_norm();
            note_violation(
                &mut cumulant,
                &mut cumulant_witness,
                1,
                v,
                "k¹(ξ·c) does not vanish",
            );
        }
    }

    // k²(ξ_i ⊗ c·Z_j) = δ_{ij} F(η_i(c)) on the full coefficient basis.
    for i in 0..nv {
        for j in 0..nv {
            for k in 0..dim {
                let c = AlgebraElement::basis(&alg, k);
                let slot = lp(cand.variables[j]).left_mul_elem(&c);
                let got = cumulant_via_moebius(&expect, &[cand.xi[i].clone(), slot]);
                let want = if i == j {
                    base.apply(&cand.eta[i].apply(&c))
                } else {
                    AlgebraElement::zero(&alg)
                };
                let v = got.dist(&want);
                note_violation(
                    &mut cumulant,
                    &mut cumulant_witness,
                    2,
                    v,
                    "k²(ξ_i ⊗ c·Z_j) has the wrong value",
                );
            }
        }
    }

    // k²(ξ_i ⊗ c·a) = 0 when the second slot carries a coefficient a instead of
    // a variable; products c·a span the coefficient algebra, so sweeping a
    // single basis element per slot suffices by bilinearity.
    for i in 0..nv {
        for k in 0..dim {
            let c = NcPoly::constant(&alg, &vars, AlgebraElement::basis(&alg, k));
            let got = cumulant_via_moebius(&expect, &[cand.xi[i].clone(), c]);
            let v = got.sup_norm();
            note_violation(
                &mut cumulant,
                &mut cumulant_witness,
                2,
                v,
                "k²(ξ ⊗ coefficient) does not vanish",
            );
        }
    }

    // k^{m+1}(ξ_i ⊗ c₁Z ⊗ ⋯ ⊗ c_mZ) = 0 for m ≥ 2.
    for m in 2..opts.maxdeg {
        let mut sizes = vec![nv; m];
        sizes.extend(std::iter::repeat(dim).take(m));
        for i in 0..nv {
            let (tuples, _) = sample_index_tuples(&sizes, opts.budget.div_euclid(4).max(8), &mut rng);
            for t in &tuples {
                let mut slots = Vec::with_capacity(m + 1);
                slots.push(cand.xi[i].clone());
                for p in 0..m {
                    let c = AlgebraElement::basis(&alg, t[m + p]);
                    slots.push(lp(cand.variables[t[p]]).left_mul_elem(&c));
                }
                let v = cumulant_via_moebius(&expect, &slots).sup_norm();
                note_violation(
                    &mut cumulant,
                    &mut cumulant_witness,
                    m + 1,
                    v,
                    "higher-order cumulant does not vanish",
                );
            }
        }
    }
    report.push(
        CheckLine::new("cumulant characterization (all orders)", cumulant.max(), opts.tol)
            .with_witness(cumulant_witness),
    );

    // ---- Route agreement ---------------------------------------------------
    let mf = moment.first_violated(opts.tol);
    let cf = cumulant.first_violated(opts.tol);
    report.fact(
        "first violated degree (moment route)",
        mf.map_or("none".to_string(), |d| d.to_string()),
    );
    report.fact(
        "first violated degree (cumulant route)",
        cf.map_or("none".to_string(), |d| d.to_string()),
    );
    report.push(CheckLine::verdict(
        "routes agree on first violated degree",
        mf == cf,
        if mf == cf {
            String::new()
        } else {
            format!("moment route: {mf:?}, cumulant route: {cf:?}")
        },
    ));

    ConjugateVerdict {
        report,
        moment_first_violated: mf,
        cumulant_first_violated: cf,
    }
}

/// The free Fisher information `Σ_i F(E(ξ_i ξ_i*))` of a verified
/// candidate.  Refuses to produce a value when verification fails.
pub fn fisher_information(
    oracle: &dyn MomentOracle,
    cand: &ConjugateCandidate,
    opts: &VerifyOptions,
) -> Result<(AlgebraElement, VerificationReport)> {
    let verdict = verify_conjugate_system(oracle, cand, opts);
    if !verdict.report.passed {
        return Err(CoreError::VerificationFailed(format!(
            "conjugate-system verification failed (max violation {:.3e}); no Fisher information value is produced",
            verdict.report.max_violation()
        )));
    }
    let base = oracle.base_expectation();
    let mut phi = AlgebraElement::zero(oracle.coeff_algebra());
    for xi in &cand.xi {
        phi = phi.add(&base.apply(&oracle.expect(&xi.mul(&xi.adjoint()))));
    }
    let mut report = verdict.report;
    report.push(CheckLine::new(
        "Fisher information is self-adjoint",
        phi.hermitian_defect(),
        opts.tol,
    ));
    report.push(CheckLine::new(
        "Fisher information is positive semidefinite",
        (-phi.min_eigenvalue()).max(0.0),
        opts.tol,
    ));
    Ok((phi, report))
}

// ---------------------------------------------------------------------------
// 2×2 assembly: Fisher information of a matrix from entrywise data.
// ---------------------------------------------------------------------------

/// Entrywise inputs for the 2×2 matrix assembly: the four entry letters of
/// `A = [a_ij]`, candidate conjugates `x_ij` for `a_ij` and `y_ij` for
/// `a_ij*`, and the coefficient maps `η_ij` (pairing the `x`) and `ξ_ij`
/// (pairing the `y`).
pub struct Theorem5Inputs {
    pub scalar: Arc<DistributionSpec>,
    pub entries: [[Letter; 2]; 2],
    pub conj_x: [[NcPoly; 2]; 2],
    pub conj_y: [[NcPoly; 2]; 2],
    pub eta: [[Arc<CondExpectation>; 2]; 2],
    pub xi: [[Arc<CondExpectation>; 2]; 2],
}

/// The assembled matrix-level objects: the scene containing the matrix
/// variable `A` and the candidate vectors `X₁, X₂`, plus the matrix-level
/// coefficient maps.
pub struct Theorem5Assembly {
    pub scene: MatrixScene,
    pub var_a: Letter,
    pub candidate: ConjugateCandidate,
}

/// Outcome of an assembled matrix Fisher-information computation.
pub struct MatrixFisherOutcome {
    pub report: VerificationReport,
    /// Matrix-level Fisher information (present only when verified).
    pub phi: Option<AlgebraElement>,
    /// The entrywise prediction for the same quantity.
    pub formula: AlgebraElement,
}

/// The matrix-level coefficient map
/// `C ↦ diag(η₁₁(c₁₁) + η₂₁(c₂₂), η₁₂(c₁₁) + η₂₂(c₂₂))`.
fn matrix_eta_map(
    maps: &[[Arc<CondExpectation>; 2]; 2],
    scalar: &Arc<MultiMatrixAlgebra>,
    amp: &Arc<MultiMatrixAlgebra>,
) -> Arc<CondExpectation> {
    let maps = maps.clone();
    let scalar = scalar.clone();
    let amp_cl = amp.clone();
    CondExpectation::linear_from_fn(amp, move |x| {
        let q = split2(x, &scalar);
        let top = maps[0][0].apply(&q[0][0]).add(&maps[1][0].apply(&q[1][1]));
        let bot = maps[0][1].apply(&q[0][0]).add(&maps[1][1].apply(&q[1][1]));
        crate::engine::matrix::diag2(&amp_cl, &top, &bot)
    })
}

/// The matrix-level coefficient map
/// `C ↦ diag(ξ₁₁(c₁₁) + ξ₁₂(c₂₂), ξ₂₁(c₁₁) + ξ₂₂(c₂₂))`.
fn matrix_xi_map(
    maps: &[[Arc<CondExpectation>; 2]; 2],
    scalar: &Arc<MultiMatrixAlgebra>,
    amp: &Arc<MultiMatrixAlgebra>,
) -> Arc<CondExpectation> {
    let maps = maps.clone();
    let scalar = scalar.clone();
    let amp_cl = amp.clone();
    CondExpectation::linear_from_fn(amp, move |x| {
        let q = split2(x, &scalar);
        let top = maps[0][0].apply(&q[0][0]).add(&maps[0][1].apply(&q[1][1]));
        let bot = maps[1][0].apply(&q[0][0]).add(&maps[1][1].apply(&q[1][1]));
        crate::engine::matrix::diag2(&amp_cl, &top, &bot)
    })
}

/// Assemble the matrix scene for `A = [a_ij]` with candidate conjugate
/// vectors `X₁ = [[x₁₁, x₂₁],[x₁₂, x₂₂]]` (note the transposed placement)
/// and `X₂ = [[y₁₁, y₁₂],[y₂₁, y₂₂]]`, paired with the matrix-level maps
/// built from the entrywise ones.
pub fn theorem5_assemble(inputs: &Theorem5Inputs) -> Result<Theorem5Assembly> {
    let scalar_alg = inputs.scalar.algebra().clone();
    let vars = inputs.scalar.vars().clone();
    let lp = |l: Letter| NcPoly::letter(&scalar_alg, &vars, l);

    let a_mat = PolyMat2::from_entries(
        lp(inputs.entries[0][0]),
        lp(inputs.entries[0][1]),
        lp(inputs.entries[1][0]),
        lp(inputs.entries[1][1]),
    );
    // Transposed placement for the x-side candidate.
    let x1_mat = PolyMat2::from_entries(
        inputs.conj_x[0][0].clone(),
        inputs.conj_x[1][0].clone(),
        inputs.conj_x[0][1].clone(),
        inputs.conj_x[1][1].clone(),
    );
    let x2_mat = PolyMat2::from_entries(
        inputs.conj_y[0][0].clone(),
        inputs.conj_y[0][1].clone(),
        inputs.conj_y[1][0].clone(),
        inputs.conj_y[1][1].clone(),
    );

    let mut scene = MatrixScene::new(inputs.scalar.clone());
    let var_a = scene.add_var("A", false, a_mat);
    let var_x1 = scene.add_var("X1", false, x1_mat);
    let var_x2 = scene.add_var("X2", false, x2_mat);
    let amp = scene.algebra2().clone();

    let eta_m = matrix_eta_map(&inputs.eta, &scalar_alg, &amp);
    let xi_m = matrix_xi_map(&inputs.xi, &scalar_alg, &amp);
    let candidate = ConjugateCandidate::new(
        vec![var_a, Letter::star(var_a.var)],
        vec![scene.letter_poly(var_x1), scene.letter_poly(var_x2)],
        vec![eta_m, xi_m],
    )?;
    Ok(Theorem5Assembly {
        scene,
        var_a,
        candidate,
    })
}

/// Entrywise prediction for the matrix Fisher information of `A = [a_ij]`:
/// the diagonal entries are the entry Fisher informations plus the
/// column/row cross terms, the off-diagonal entries are mixed products of
/// the entry conjugates.
pub fn theorem5_formula(inputs: &Theorem5Inputs, amp: &Arc<MultiMatrixAlgebra>) -> AlgebraElement {
    let sp = &inputs.scalar;
    let e = |p: &NcPoly, q: &NcPoly| sp.expect(&p.mul(&q.adjoint()));
    let x = &inputs.conj_x;
    let y = &inputs.conj_y;

    let a11 = e(&x[0][0], &x[0][0])
        .add(&e(&y[0][0], &y[0][0]))
        .add(&e(&x[1][0], &x[1][0]))
        .add(&e(&y[0][1], &y[0][1]));
    let a22 = e(&x[1][1], &x[1][1])
        .add(&e(&y[1][1], &y[1][1]))
        .add(&e(&x[0][1], &x[0][1]))
        .add(&e(&y[1][0], &y[1][0]));
    let a12 = e(&x[0][0], &x[0][1])
        .add(&e(&x[1][0], &x[1][1]))
        .add(&e(&y[0][0], &y[1][0]))
        .add(&e(&y[0][1], &y[1][1]));
    let a21 = e(&x[0][1], &x[0][0])
        .add(&e(&x[1][1], &x[1][0]))
        .add(&e(&y[1][0], &y[0][0]))
        .add(&e(&y[1][1], &y[0][1]));
    embed2(amp, &[[a11, a12], [a21, a22]])
}

/// Full dual-path check for the 2×2 assembly: verify the matrix-level
/// candidate, compute the assembled Fisher information, and compare it to
/// the entrywise prediction.
pub fn theorem5_check(inputs: &Theorem5Inputs, opts: &VerifyOptions) -> Result<MatrixFisherOutcome> {
    let assembly = theorem5_assemble(inputs)?;
    let formula = theorem5_formula(inputs, assembly.scene.algebra2());
    let mut outcome = run_matrix_fisher(
        "2x2 assembly from entrywise conjugates",
        &assembly.scene,
        &assembly.candidate,
        &formula,
        opts,
    );
    // Independence cross-check on the scalar side: each entry pair
    // (a_ij, a_ij*) must itself carry a verified conjugate system.
    for i in 0..2 {
        for j in 0..2 {
            let entry_cand = ConjugateCandidate::new(
                vec![inputs.entries[i][j], inputs.scalar.vars().adjoint_letter(inputs.entries[i][j])],
                vec![inputs.conj_x[i][j].clone(), inputs.conj_y[i][j].clone()],
                vec![inputs.eta[i][j].clone(), inputs.xi[i][j].clone()],
            )?;
            let v = verify_conjugate_system(inputs.scalar.as_ref(), &entry_cand, opts);
            outcome.report.push(CheckLine::verdict(
                format!("entry ({},{}) conjugate pair verified", i + 1, j + 1),
                v.report.passed,
                format!("max violation {:.3e}", v.report.max_violation()),
            ));
        }
    }
    Ok(outcome)
}

/// Self-adjoint degenerate assembly: one matrix variable
/// `S = [[e₀₀, e₀₁],[e₁₀, e₁₁]]` with `S* = S`, a single candidate vector
/// `X₁` in transposed placement, and a single matrix-level map.  The
/// two-variable formula would double-count `S = S*`; this mode counts the
/// variable once.
pub struct Theorem5SelfAdjointInputs {
    pub scalar: Arc<DistributionSpec>,
    pub entries: [[Letter; 2]; 2],
    pub conj: [[NcPoly; 2]; 2],
    pub eta: [[Arc<CondExpectation>; 2]; 2],
}

pub fn theorem5_selfadjoint_check(
    inputs: &Theorem5SelfAdjointInputs,
    opts: &VerifyOptions,
) -> Result<MatrixFisherOutcome> {
    let scalar_alg = inputs.scalar.algebra().clone();
    let vars = inputs.scalar.vars().clone();
    let lp = |l: Letter| NcPoly::letter(&scalar_alg, &vars, l);

    let s_mat = PolyMat2::from_entries(
        lp(inputs.entries[0][0]),
        lp(inputs.entries[0][1]),
        lp(inputs.entries[1][0]),
        lp(inputs.entries[1][1]),
    );
    let x1_mat = PolyMat2::from_entries(
        inputs.conj[0][0].clone(),
        inputs.conj[1][0].clone(),
        inputs.conj[0][1].clone(),
        inputs.conj[1][1].clone(),
    );
    let mut scene = MatrixScene::new(inputs.scalar.clone());
    let var_s = scene.add_var("S", true, s_mat);
    let var_x1 = scene.add_var("X1", false, x1_mat);
    let amp = scene.algebra2().clone();
    let eta_m = matrix_eta_map(&inputs.eta, &scalar_alg, &amp);
    let candidate = ConjugateCandidate::new(
        vec![var_s],
        vec![scene.letter_poly(var_x1)],
        vec![eta_m],
    )?;

    // Entrywise prediction: E⁺ of X₁X₁* assembled from scalar products
    // (single-variable count, so only the x-family appears).
    let sp = &inputs.scalar;
    let e = |p: &NcPoly, q: &NcPoly| sp.expect(&p.mul(&q.adjoint()));
    let x = &inputs.conj;
    let a11 = e(&x[0][0], &x[0][0]).add(&e(&x[1][0], &x[1][0]));
    let a22 = e(&x[1][1], &x[1][1]).add(&e(&x[0][1], &x[0][1]));
    let a12 = e(&x[0][0], &x[0][1]).add(&e(&x[1][0], &x[1][1]));
    let a21 = e(&x[0][1], &x[0][0]).add(&e(&x[1][1], &x[1][0]));
    let formula = embed2(&amp, &[[a11, a12], [a21, a22]]);

    Ok(run_matrix_fisher(
        "self-adjoint 2x2 assembly (single-variable count)",
        &scene,
        &candidate,
        &formula,
        opts,
    ))
}

pub(crate) fn run_matrix_fisher(
    title: &str,
    scene: &MatrixScene,
    candidate: &ConjugateCandidate,
    formula: &AlgebraElement,
    opts: &VerifyOptions,
) -> MatrixFisherOutcome {
    let mut report = VerificationReport::new(title.to_string());
    let verdict = verify_conjugate_system(scene, candidate, opts);
    let verified = verdict.report.passed;
    report.absorb(verdict.report);
    let phi = if verified {
        let base = scene.base_expectation();
        let mut phi = AlgebraElement::zero(scene.algebra2());
        for xi in &candidate.xi {
            phi = phi.add(&base.apply(&scene.expect(&xi.mul(&xi.adjoint()))));
        }
        report.push(CheckLine::new(
            "assembled value matches entrywise prediction",
            phi.dist(formula),
            opts.tol,
        ));
        Some(phi)
    } else {
        report.push(CheckLine::verdict(
            "assembled value matches entrywise prediction",
            false,
            "skipped: candidate verification failed".to_string(),
        ));
        None
    };
    MatrixFisherOutcome {
        report,
        phi,
        formula: formula.clone(),
    }
}

/// The trace-compressed corollary: over the diagonal base
/// `{diag(b, b)}` with the compression `C ↦ diag((E(c₁₁)+E(c₂₂))/2, …)`,
/// the candidate `{½X₁, ½X₂}` with identity coefficient maps is a
/// conjugate system for `{A, A*}`, and the Fisher information equals
/// `⅛ Σ_ij Φ*(a_ij, a_ij*)` on the diagonal.
pub fn corollary6_check(inputs: &Theorem5Inputs, opts: &VerifyOptions) -> Result<MatrixFisherOutcome> {
    let assembly = theorem5_assemble(inputs)?;
    let mut scene = assembly.scene;
    let amp = scene.algebra2().clone();
    let scalar_alg = inputs.scalar.algebra().clone();
    scene.set_base(diagonal_average_expectation(&scalar_alg, &amp)?);

    let half = C64::new(0.5, 0.0);
    let id_map = CondExpectation::identity(&amp);
    let candidate = ConjugateCandidate::new(
        assembly.candidate.variables.clone(),
        assembly
            .candidate
            .xi
            .iter()
            .map(|p| p.scale(half))
            .collect(),
        vec![id_map.clone(), id_map],
    )?;

    // Entrywise prediction: ⅛ Σ_ij Φ*(a_ij, a_ij*) on both diagonal slots.
    let mut report = VerificationReport::new("trace-compressed 2x2 Fisher information");
    let mut total = AlgebraElement::zero(&scalar_alg);
    let mut all_entries_ok = true;
    for i in 0..2 {
        for j in 0..2 {
            let entry_cand = ConjugateCandidate::new(
                vec![inputs.entries[i][j], inputs.scalar.vars().adjoint_letter(inputs.entries[i][j])],
                vec![inputs.conj_x[i][j].clone(), inputs.conj_y[i][j].clone()],
                vec![inputs.eta[i][j].clone(), inputs.xi[i][j].clone()],
            )?;
            match fisher_information(inputs.scalar.as_ref(), &entry_cand, opts) {
                Ok((phi, _)) => total = total.add(&phi),
                Err(_) => all_entries_ok = false,
            }
        }
    }
    report.push(CheckLine::verdict(
        "entry Fisher informations computable",
        all_entries_ok,
        String::new(),
    ));
    let eighth = total.scale(C64::new(0.125, 0.0));
    let formula = crate::engine::matrix::diag2(&amp, &eighth, &eighth);

    let outcome = run_matrix_fisher(
        "trace-compressed candidate {X1/2, X2/2}",
        &scene,
        &candidate,
        &formula,
        opts,
    );
    report.absorb(outcome.report);
    Ok(MatrixFisherOutcome {
        report,
        phi: outcome.phi,
        formula,
    })
}

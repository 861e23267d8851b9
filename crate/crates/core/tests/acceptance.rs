//! End-to-end acceptance battery: one test per headline guarantee, each
//! printing a single pass/fail line.  Tolerances are pinned here and must
//! not be loosened: 1e-9 for symbolic identities, 1e-8 for the
//! frame-derived index residuals, and the max(3·stderr, 10/N) policy for
//! Monte-Carlo agreement.

use std::sync::{Arc, OnceLock};

use ovfp_core::algebra::{
    make_pinching_expectation, AlgebraElement, CondExpectation, MultiMatrixAlgebra, PinchSpec,
    C64,
};
use ovfp_core::combinat::catalan;
use ovfp_core::engine::cumulant::roundtrip_battery;
use ovfp_core::engine::freeness::{check_freeness, FreenessOptions};
use ovfp_core::engine::spec::DistributionSpec;
use ovfp_core::engine::MomentOracle;
use ovfp_core::fisher::{
    corollary6_check, theorem5_check, theorem5_selfadjoint_check, verify_conjugate_system,
    ConjugateCandidate, Theorem5Inputs, Theorem5SelfAdjointInputs, VerifyOptions,
};
use ovfp_core::frames::{
    corner_matrix_semicircularity, index, standard_corner_scene, theorem8_check, theorem9_check,
    FrameCheckOptions,
};
use ovfp_core::poly::{Letter, NcPoly};
use ovfp_core::randmat::{mc_crosscheck, MCConfig};
use ovfp_core::report::VerificationReport;

const TOL: f64 = 1e-9;
const FRAME_TOL: f64 = 1e-8;
const BATTERY_LEN: usize = 8;

// ---------------------------------------------------------------------------
// The three coefficient algebras every identity is exercised over.
// ---------------------------------------------------------------------------

fn scalars_id() -> (Arc<MultiMatrixAlgebra>, Arc<CondExpectation>) {
    let alg = MultiMatrixAlgebra::new("C", vec![1]).unwrap();
    let e = CondExpectation::identity(&alg);
    (alg, e)
}

fn c2_average() -> (Arc<MultiMatrixAlgebra>, Arc<CondExpectation>) {
    let alg = MultiMatrixAlgebra::new("C2", vec![1, 1]).unwrap();
    let e = make_pinching_expectation(
        &alg,
        PinchSpec::DiagonalGroups {
            groups: vec![vec![0, 1]],
            weights: None,
        },
    )
    .unwrap();
    (alg, e)
}

fn m2_trace() -> (Arc<MultiMatrixAlgebra>, Arc<CondExpectation>) {
    let alg = MultiMatrixAlgebra::new("M2", vec![2]).unwrap();
    let e = make_pinching_expectation(
        &alg,
        PinchSpec::DiagonalGroups {
            groups: vec![vec![0]],
            weights: None,
        },
    )
    .unwrap();
    (alg, e)
}

fn three_expectations() -> Vec<(&'static str, Arc<CondExpectation>)> {
    vec![
        ("identity on C", scalars_id().1),
        ("averaging on C+C", c2_average().1),
        ("trace on M2", m2_trace().1),
    ]
}

// ---------------------------------------------------------------------------
// Shared moment/cumulant battery (built once, used by the first two tests).
// ---------------------------------------------------------------------------

fn battery_reports() -> &'static Vec<(&'static str, VerificationReport)> {
    static REPORTS: OnceLock<Vec<(&'static str, VerificationReport)>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        let mut out = Vec::new();

        // Over C: a free semicircular and circular together, so the word
        // battery interleaves letters from two families plus adjoints.
        let (_, id) = scalars_id();
        let mut spec = DistributionSpec::new(id.domain());
        spec.add_semicircular("x", id.clone());
        let _ = spec.add_circular("c", id.clone());
        out.push(("C", roundtrip_battery(&spec, BATTERY_LEN, TOL)));

        // Over C ⊕ C and M2: a semicircular whose covariance is the
        // block-averaging / trace expectation, with coefficient middles
        // sweeping the full coordinate basis.
        let (_, avg) = c2_average();
        let mut spec = DistributionSpec::new(avg.domain());
        spec.add_semicircular("x", avg.clone());
        out.push(("C+C", roundtrip_battery(&spec, BATTERY_LEN, TOL)));

        let (_, tr) = m2_trace();
        let mut spec = DistributionSpec::new(tr.domain());
        spec.add_semicircular("x", tr.clone());
        out.push(("M2", roundtrip_battery(&spec, BATTERY_LEN, TOL)));

        out
    })
}

fn line<'r>(report: &'r VerificationReport, name: &str) -> &'r ovfp_core::report::CheckLine {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing check line {name:?} in:\n{report}"))
}

/// Moments-to-cumulants and cumulants-to-moments compose to the identity on
/// every word of length ≤ 8 with basis-vector coefficients, over C, C ⊕ C,
/// and M2(C), within 1e-9 in both directions.
#[test]
fn c01_moment_cumulant_roundtrip_is_identity_over_three_algebras() {
    for (label, report) in battery_reports() {
        assert!(
            line(report, "extracted second cumulants equal the covariance rule").passed,
            "[{label}]\n{report}"
        );
        assert!(
            line(report, "extracted cumulants of order ≠ 2 vanish").passed,
            "[{label}]\n{report}"
        );
        assert!(
            line(report, "moments reconstructed from the extracted table").passed,
            "[{label}]\n{report}"
        );
        assert!(report.passed, "[{label}]\n{report}");
    }
}

/// The noncrossing-pairing evaluator agrees with the gap-recurrence
/// evaluator on the same word battery to 1e-9, and the even moments of a
/// standard scalar semicircular are the Catalan numbers 1, 2, 5, 14.
#[test]
fn c02_dual_evaluators_agree_and_even_moments_are_catalan() {
    for (label, report) in battery_reports() {
        assert!(
            line(report, "independent pairing evaluator agrees").passed,
            "[{label}]\n{report}"
        );
    }

    let (alg, id) = scalars_id();
    let mut spec = DistributionSpec::new(&alg);
    let x = spec.add_semicircular("x", id);
    let xp = spec.letter_poly(x);
    let mut pow = NcPoly::one(&alg, spec.vars());
    for k in 1..=4usize {
        pow = pow.mul(&xp).mul(&xp);
        let want = AlgebraElement::scalar(&alg, C64::new(catalan(k) as f64, 0.0));
        let via_recurrence = spec.expect(&pow);
        let via_pairings = spec.expect_via_pairings(&pow);
        assert!(
            via_recurrence.dist(&want) < TOL,
            "E(x^{}) = {via_recurrence}, want {want}",
            2 * k
        );
        assert!(
            via_pairings.dist(&want) < TOL,
            "pairing E(x^{}) = {via_pairings}, want {want}",
            2 * k
        );
    }
}

/// Families constructed as free pass the freeness check; injecting a
/// cross-family covariance makes it fail and name a witness.
#[test]
fn c03_freeness_holds_for_free_families_and_fails_with_witness_when_broken() {
    let (_, avg) = c2_average();
    let opts = FreenessOptions {
        max_factors: 4,
        probes: 4,
        tol: TOL,
        ..Default::default()
    };

    let mut spec = DistributionSpec::new(avg.domain());
    let x = spec.add_semicircular("x", avg.clone());
    spec.fresh_family();
    let (c, _) = spec.add_circular("c", avg.clone());
    let report = check_freeness(&spec, &opts);
    assert!(report.passed, "{report}");

    spec.set_cov(x, c, avg.clone());
    spec.set_cov(c, x, avg.clone());
    let report = check_freeness(&spec, &opts);
    assert!(!report.passed, "{report}");
    let witness = report
        .checks
        .iter()
        .filter(|l| !l.passed)
        .filter_map(|l| l.witness.as_deref())
        .next()
        .expect("a failing line must carry a witness");
    assert!(witness.contains("cov("), "witness was {witness:?}");
}

/// The moment-identity route and the cumulant-condition route for
/// recognizing a conjugate system agree on pass/fail — and, when they
/// fail, on the first violated degree — across a battery of passing and
/// failing candidates.
#[test]
fn c04_conjugate_recognition_routes_agree_on_every_candidate() {
    let opts = VerifyOptions {
        maxdeg: 6,
        tol: TOL,
        budget: 192,
        seed: 0x0401,
    };
    let mut verdicts = Vec::new();

    // Passing: a standard semicircular is its own conjugate.
    let (alg, id) = scalars_id();
    let mut spec = DistributionSpec::new(&alg);
    let x = spec.add_semicircular("x", id.clone());
    let xp = spec.letter_poly(x);
    let cand = ConjugateCandidate::new(vec![x], vec![xp.clone()], vec![id.clone()]).unwrap();
    verdicts.push(("semicircular self-conjugate", false, {
        verify_conjugate_system(&spec, &cand, &opts)
    }));

    // Failing: the doubled candidate breaks the degree-2 identity.
    let cand = ConjugateCandidate::new(
        vec![x],
        vec![xp.scale(C64::new(2.0, 0.0))],
        vec![id.clone()],
    )
    .unwrap();
    verdicts.push(("doubled candidate", true, {
        verify_conjugate_system(&spec, &cand, &opts)
    }));

    // Passing: a circular pair with swapped adjoints.
    let mut spec = DistributionSpec::new(&alg);
    let (c, cs) = spec.add_circular("c", id.clone());
    let cand = ConjugateCandidate::new(
        vec![c, cs],
        vec![spec.letter_poly(cs), spec.letter_poly(c)],
        vec![id.clone(), id.clone()],
    )
    .unwrap();
    verdicts.push(("circular pair", false, {
        verify_conjugate_system(&spec, &cand, &opts)
    }));

    // Failing: an un-swapped circular candidate pairs c with itself.
    let cand = ConjugateCandidate::new(
        vec![c, cs],
        vec![spec.letter_poly(c), spec.letter_poly(cs)],
        vec![id.clone(), id.clone()],
    )
    .unwrap();
    verdicts.push(("un-swapped circular candidate", true, {
        verify_conjugate_system(&spec, &cand, &opts)
    }));

    // Failing: right candidate, wrong coefficient map (identity instead of
    // the averaging covariance).
    let (alg2, avg) = c2_average();
    let mut spec = DistributionSpec::new(&alg2);
    let x = spec.add_semicircular("x", avg.clone());
    let cand = ConjugateCandidate::new(
        vec![x],
        vec![spec.letter_poly(x)],
        vec![CondExpectation::identity(&alg2)],
    )
    .unwrap();
    verdicts.push(("wrong coefficient map", true, {
        verify_conjugate_system(&spec, &cand, &opts)
    }));

    // Passing: averaging-covariance semicircular with the right map.
    let cand = ConjugateCandidate::new(vec![x], vec![spec.letter_poly(x)], vec![avg.clone()])
        .unwrap();
    verdicts.push(("averaging-covariance self-conjugate", false, {
        verify_conjugate_system(&spec, &cand, &opts)
    }));

    for (label, expect_fail, verdict) in &verdicts {
        assert_eq!(
            !verdict.report.passed, *expect_fail,
            "[{label}]\n{}",
            verdict.report
        );
        assert_eq!(
            verdict.moment_first_violated, verdict.cumulant_first_violated,
            "[{label}] routes disagree on the first violated degree"
        );
        assert!(
            line(&verdict.report, "routes agree on first violated degree").passed,
            "[{label}]\n{}",
            verdict.report
        );
        if *expect_fail {
            assert!(
                verdict.moment_first_violated.is_some(),
                "[{label}] expected a violated degree"
            );
        } else {
            assert_eq!(verdict.moment_first_violated, None, "[{label}]");
        }
    }
}

/// The 2×2 corner matrix [[s1, c], [c*, s2]] of free standard
/// (semi)circulars with common covariance η is matrix-semicircular: its
/// order-2 matrix cumulants equal the entrywise-η map η⁺ on a basis of
/// M2(B) and all cumulants of orders 1 and 3–6 vanish, within 1e-9, for η
/// the identity, the M2 trace, and the C ⊕ C average.
#[test]
fn c05_corner_matrix_is_semicircular_with_entrywise_covariance() {
    for (label, eta) in three_expectations() {
        let report = corner_matrix_semicircularity(&eta, 6, TOL, 3, 0x0501);
        assert!(report.passed, "[{label}]\n{report}");
    }
}

/// The Fisher information of the assembled 2×2 matrix equals the
/// four-entry formula — cross terms between the (1,2) and (2,1) slots
/// included — entrywise to 1e-9, on the corner scene over each test
/// algebra and on a fully non-self-adjoint matrix of four free circulars.
#[test]
fn c06_assembled_matrix_fisher_information_matches_the_entrywise_formula() {
    let opts = VerifyOptions {
        maxdeg: 4,
        tol: TOL,
        budget: 48,
        seed: 0x0601,
    };

    // Corner scene (self-adjoint assembly) over the three algebras.
    for (label, e) in three_expectations() {
        let scene = standard_corner_scene(&e);
        let lp = |l: Letter| scene.spec.letter_poly(l);
        let inputs = Theorem5SelfAdjointInputs {
            scalar: scene.spec.clone(),
            entries: [[scene.s1, scene.c], [scene.c_star, scene.s2]],
            conj: [[lp(scene.s1), lp(scene.c_star)], [lp(scene.c), lp(scene.s2)]],
            eta: [[e.clone(), e.clone()], [e.clone(), e.clone()]],
        };
        let outcome = theorem5_selfadjoint_check(&inputs, &opts).unwrap();
        assert!(outcome.report.passed, "[{label}]\n{}", outcome.report);
        let phi = outcome.phi.expect("verified candidate produces a value");
        assert!(
            phi.dist(&outcome.formula) < TOL,
            "[{label}] phi = {phi}, formula = {}",
            outcome.formula
        );
    }

    // Non-self-adjoint assembly: four free standard circular entries.
    let (alg, id) = scalars_id();
    let mut spec = DistributionSpec::new(&alg);
    let entries: Vec<(Letter, Letter)> = ["a11", "a12", "a21", "a22"]
        .iter()
        .map(|n| spec.add_circular(n, id.clone()))
        .collect();
    let spec = Arc::new(spec);
    let lp = |l: Letter| spec.letter_poly(l);
    let maps = || {
        [
            [id.clone(), id.clone()],
            [id.clone(), id.clone()],
        ]
    };
    let inputs = Theorem5Inputs {
        scalar: spec.clone(),
        entries: [
            [entries[0].0, entries[1].0],
            [entries[2].0, entries[3].0],
        ],
        conj_x: [
            [lp(entries[0].1), lp(entries[1].1)],
            [lp(entries[2].1), lp(entries[3].1)],
        ],
        conj_y: [
            [lp(entries[0].0), lp(entries[1].0)],
            [lp(entries[2].0), lp(entries[3].0)],
        ],
        eta: maps(),
        xi: maps(),
    };
    let outcome = theorem5_check(&inputs, &opts).unwrap();
    assert!(outcome.report.passed, "{}", outcome.report);
    let phi = outcome.phi.expect("verified candidate produces a value");
    assert!(
        phi.dist(&outcome.formula) < TOL,
        "phi = {phi}, formula = {}",
        outcome.formula
    );
}

/// Compressing the 2×2 matrix of four free scalar circulars by the
/// normalized trace turns the halved candidates {X1/2, X2/2} into a
/// verified conjugate system whose Fisher information is diag(1, 1), the
/// one-eighth sum of the entry Fisher informations.
#[test]
fn c07_trace_compression_of_four_circulars_gives_identity_fisher_information() {
    let (alg, id) = scalars_id();
    let mut spec = DistributionSpec::new(&alg);
    let entries: Vec<(Letter, Letter)> = ["a11", "a12", "a21", "a22"]
        .iter()
        .map(|n| spec.add_circular(n, id.clone()))
        .collect();
    let spec = Arc::new(spec);
    let lp = |l: Letter| spec.letter_poly(l);
    let maps = || {
        [
            [id.clone(), id.clone()],
            [id.clone(), id.clone()],
        ]
    };
    let inputs = Theorem5Inputs {
        scalar: spec.clone(),
        entries: [
            [entries[0].0, entries[1].0],
            [entries[2].0, entries[3].0],
        ],
        conj_x: [
            [lp(entries[0].1), lp(entries[1].1)],
            [lp(entries[2].1), lp(entries[3].1)],
        ],
        conj_y: [
            [lp(entries[0].0), lp(entries[1].0)],
            [lp(entries[2].0), lp(entries[3].0)],
        ],
        eta: maps(),
        xi: maps(),
    };
    let opts = VerifyOptions {
        maxdeg: 4,
        tol: TOL,
        budget: 48,
        seed: 0x0701,
    };
    let outcome = corollary6_check(&inputs, &opts).unwrap();
    assert!(outcome.report.passed, "{}", outcome.report);
    let phi = outcome.phi.expect("verified candidate produces a value");
    let amp = phi.algebra().clone();
    let one = AlgebraElement::unit(&amp);
    assert!(phi.dist(&one) < TOL, "phi = {phi}");
    assert!(outcome.formula.dist(&one) < TOL, "formula = {}", outcome.formula);
}

/// A circular variable and its adjoint relative to (B, E) have Fisher
/// information exactly 2·1 for all three expectations, and the
/// matrix-level corner extraction recovers E(xx*) = E(yy*) = 1.
#[test]
fn c08_circular_pair_fisher_information_is_two_for_every_expectation() {
    for (label, e) in three_expectations() {
        let opts = FrameCheckOptions {
            scalar: VerifyOptions {
                maxdeg: 6,
                tol: TOL,
                budget: 192,
                seed: 0x0801,
            },
            matrix: VerifyOptions {
                maxdeg: 4,
                tol: TOL,
                budget: 32,
                seed: 0x0801,
            },
        };
        let outcome = theorem8_check(&e, &opts).unwrap();
        assert!(outcome.report.passed, "[{label}]\n{}", outcome.report);
        let phi = outcome.phi_scalar.expect("scalar pair value");
        let two = AlgebraElement::scalar(e.domain(), C64::new(2.0, 0.0));
        assert!(phi.dist(&two) < TOL, "[{label}] phi = {phi}");
        assert!(
            line(&outcome.report, "corner (1,1) extracts E(yy*) = 1").passed,
            "[{label}]\n{}",
            outcome.report
        );
        assert!(
            line(&outcome.report, "corner (2,2) extracts E(xx*) = 1").passed,
            "[{label}]\n{}",
            outcome.report
        );
    }
}

/// A semicircular pair relative to (B, id) has Fisher information
/// 2·Index(E): 2 for the identity on C, 4 for the C ⊕ C average, 8 for
/// the M2 trace.  The tight-frame sum Σ fᵢfᵢ* reproduces the index with
/// centrality and frame-independence residuals at most 1e-8.
#[test]
fn c09_semicircular_pair_fisher_information_is_twice_the_index() {
    let cases = [
        ("identity on C", scalars_id().1, 2.0),
        ("averaging on C+C", c2_average().1, 4.0),
        ("trace on M2", m2_trace().1, 8.0),
    ];
    for (label, e, want) in cases {
        let opts = FrameCheckOptions {
            scalar: VerifyOptions {
                maxdeg: 6,
                tol: FRAME_TOL,
                budget: 192,
                seed: 0x0901,
            },
            matrix: VerifyOptions {
                maxdeg: 4,
                tol: FRAME_TOL,
                budget: 32,
                seed: 0x0901,
            },
        };
        let outcome = theorem9_check(&e, &opts).unwrap();
        assert!(outcome.report.passed, "[{label}]\n{}", outcome.report);

        let phi = outcome.phi_scalar.expect("scalar pair value");
        let want_el = AlgebraElement::scalar(e.domain(), C64::new(want, 0.0));
        assert!(phi.dist(&want_el) < FRAME_TOL, "[{label}] phi = {phi}");

        // Independent index computation: Σ fᵢfᵢ* with its own report.
        let (idx, idx_report) = index(&e, FRAME_TOL).unwrap();
        assert!(idx_report.passed, "[{label}]\n{idx_report}");
        assert!(
            phi.dist(&idx.scale(C64::new(2.0, 0.0))) < FRAME_TOL,
            "[{label}] phi = {phi}, index = {idx}"
        );
        let theorem_idx = outcome.index.expect("index value");
        assert!(idx.dist(&theorem_idx) < FRAME_TOL, "[{label}]");
    }
}

/// Monte-Carlo estimates from the matrix realizations agree with the
/// symbolic moments for a battery of degree ≤ 6 words at inner dimension
/// 256 with 100 samples, within max(3·stderr, 10/N) per entry — and a
/// negative control with doubled symbolic covariance fails the same gate.
#[test]
fn c10_monte_carlo_matches_symbolic_moments_and_rejects_doubled_covariance() {
    let cfg = MCConfig::new(256, 100, 0x0a01).unwrap();

    // Scalars: semicircular and circular words up to degree 6.
    let (alg, id) = scalars_id();
    let mut spec = DistributionSpec::new(&alg);
    let x = spec.add_semicircular("x", id.clone());
    let (c, cs) = spec.add_circular("c", id.clone());
    let xp = spec.letter_poly(x);
    let cp = spec.letter_poly(c);
    let csp = spec.letter_poly(cs);
    let x2 = xp.mul(&xp);
    let words = vec![
        ("x^2".to_string(), x2.clone()),
        ("x^4".to_string(), x2.mul(&x2)),
        ("x^6".to_string(), x2.mul(&x2).mul(&x2)),
        ("c c*".to_string(), cp.mul(&csp)),
        ("x c c* x".to_string(), xp.mul(&cp).mul(&csp).mul(&xp)),
    ];
    let report = mc_crosscheck(&cfg, &spec, &words);
    assert!(report.passed, "{report}");

    // M2 with trace covariance: one 2N-dimensional matrix read as blocks,
    // words with coefficient middles.
    let (alg_m2, tr) = m2_trace();
    let mut spec = DistributionSpec::new(&alg_m2);
    let x = spec.add_semicircular("x", tr.clone());
    let xp = spec.letter_poly(x);
    let e11 = AlgebraElement::basis(&alg_m2, alg_m2.basis_index(0, 0, 0));
    let words = vec![
        ("x^2".to_string(), xp.mul(&xp)),
        (
            "x e11 x".to_string(),
            xp.mul(&NcPoly::constant(&alg_m2, spec.vars(), e11)).mul(&xp),
        ),
    ];
    let report = mc_crosscheck(&cfg, &spec, &words);
    assert!(report.passed, "{report}");

    // C ⊕ C with averaging covariance: the blocks are diagonal corners of
    // one doubled matrix.
    let (alg_c2, avg) = c2_average();
    let mut spec = DistributionSpec::new(&alg_c2);
    let x = spec.add_semicircular("x", avg.clone());
    let xp = spec.letter_poly(x);
    let e1 = AlgebraElement::basis(&alg_c2, alg_c2.basis_index(0, 0, 0));
    let words = vec![
        ("x^2".to_string(), xp.mul(&xp)),
        (
            "x e1 x".to_string(),
            xp.mul(&NcPoly::constant(&alg_c2, spec.vars(), e1)).mul(&xp),
        ),
    ];
    let report = mc_crosscheck(&cfg, &spec, &words);
    assert!(report.passed, "{report}");

    // Negative control: double the symbolic covariance of a scalar
    // semicircular without touching the sampler.  Every moment is now
    // wrong by a factor 2^(deg/2) and the gate must fail.
    let mut spec = DistributionSpec::new(&alg);
    let x = spec.add_semicircular("x", id.clone());
    spec.set_cov(
        x,
        x,
        CondExpectation::linear_scaled_identity(&alg, C64::new(2.0, 0.0)),
    );
    let xp = spec.letter_poly(x);
    let control_cfg = MCConfig::new(256, 30, 0x0a02).unwrap();
    let report = mc_crosscheck(&control_cfg, &spec, &[("x^2".to_string(), xp.mul(&xp))]);
    assert!(
        !report.passed,
        "doubled covariance must fail the gate:\n{report}"
    );
}

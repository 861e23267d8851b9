//! Freeness-with-amalgamation checks between generator families.
//!
//! Two routes that must agree:
//! 1. **structural** — families are free iff no cross-family covariance is
//!    stored, since the joint distribution here is determined by second
//!    order data;
//! 2. **moment** — alternating products of centered family elements with
//!    interleaved coefficients must have vanishing expectation.

use super::spec::DistributionSpec;
use super::MomentOracle;
use crate::algebra::AlgebraElement;
use crate::poly::{Letter, NcPoly};
use crate::report::{CheckLine, VerificationReport};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Options for [`check_freeness`].
#[derive(Clone, Copy, Debug)]
pub struct FreenessOptions {
    /// Longest alternating word (number of centered factors) to test.
    pub max_factors: usize,
    /// Random alternating words per family pair and length.
    pub probes: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FreenessOptions {
    fn default() -> Self {
        FreenessOptions {
            max_factors: 5,
            probes: 6,
            tol: 1e-9,
            seed: 0xf12e,
        }
    }
}

/// Group the canonical letters of a scene by family.
fn letters_by_family(spec: &DistributionSpec) -> Vec<Vec<Letter>> {
    let mut out: Vec<Vec<Letter>> = Vec::new();
    for l in spec.letters() {
        let f = spec.family_of(l.var);
        if f >= out.len() {
            out.resize(f + 1, Vec::new());
        }
        out[f].push(l);
    }
    out.retain(|v| !v.is_empty());
    out
}

/// A random factor from one family: a degree-one polynomial in the family's
/// letters (stars included) with random left coefficients, centered so its
/// expectation vanishes.
fn centered_factor(
    spec: &DistributionSpec,
    letters: &[Letter],
    rng: &mut crate::Rng64,
) -> NcPoly {
    let alg = spec.algebra().clone();
    let n_terms = rng.random_range(1..=2usize);
    let mut p = NcPoly::zero(&alg, spec.vars());
    for _ in 0..n_terms {
        let l = *letters.choose(rng).expect("family has letters");
        let l = if !spec.vars().is_self_adjoint(l.var) && rng.random::<bool>() {
            spec.vars().adjoint_letter(l)
        } else {
            l
        };
        let c = AlgebraElement::random(&alg, rng);
        p = p.add(&spec.letter_poly(l).left_mul_elem(&c));
    }
    let mean = spec.expect(&p);
    p.sub(&NcPoly::constant(&alg, spec.vars(), mean))
}

/// Check that the generator families of a scene are free with amalgamation
/// over the coefficient algebra.
pub fn check_freeness(spec: &DistributionSpec, opts: &FreenessOptions) -> VerificationReport {
    let mut report = VerificationReport::new(format!(
        "freeness of generator families over {}",
        spec.algebra()
    ));
    let fams = letters_by_family(spec);
    report.fact("families", format!("{}", fams.len()));
    if fams.len() < 2 {
        report.fact("note", "fewer than two families: freeness is vacuous");
        return report;
    }

    // Route 1: structural scan of the covariance table.
    let mut structural_worst = 0.0f64;
    let mut structural_witness = String::new();
    for (&(a, b), cov) in spec.cov_entries() {
        if spec.family_of(a.var) == spec.family_of(b.var) {
            continue;
        }
        let norm = cov.map.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if norm > structural_worst {
            structural_worst = norm;
            structural_witness = format!(
                "cov({}, {}) is nonzero across families",
                spec.vars().display_letter(a),
                spec.vars().display_letter(b)
            );
        }
    }
    report.push(
        CheckLine::new(
            "no cross-family covariance (structural)",
            structural_worst,
            opts.tol,
        )
        .with_witness(structural_witness),
    );
    let structural_pass = structural_worst <= opts.tol;

    // Route 2: alternating centered moments.
    let mut rng = crate::seeded_rng(opts.seed);
    let mut moment_worst = 0.0f64;
    let mut moment_witness = String::new();
    let mut words = 0usize;
    for i in 0..fams.len() {
        for j in 0..fams.len() {
            if i == j {
                continue;
            }
            for n_factors in 2..=opts.max_factors {
                for _ in 0..opts.probes {
                    // Alternate i, j, i, j, ... with interleaved coefficients.
                    let mut word = NcPoly::one(spec.algebra(), spec.vars());
                    for pos in 0..n_factors {
                        let fam = if pos % 2 == 0 { &fams[i] } else { &fams[j] };
                        let f = centered_factor(spec, fam, &mut rng);
                        word = word.mul(&f);
                        if pos + 1 < n_factors {
                            let mid = AlgebraElement::random(spec.algebra(), &mut rng);
                            word = word.right_mul_elem(&mid);
                        }
                    }
                    let v = spec.expect(&word).sup_norm();
                    words += 1;
                    if v > moment_worst {
                        moment_worst = v;
                        moment_witness = format!(
                            "alternating word of {} centered factors from families {} and {}",
                            n_factors, i, j
                        );
                    }
                }
            }
        }
    }
    report.fact("alternating words tested", format!("{words}"));
    report.push(
        CheckLine::new(
            "alternating centered words vanish (moments)",
            moment_worst,
            opts.tol,
        )
        .with_witness(moment_witness),
    );
    let moment_pass = moment_worst <= opts.tol;

    report.push(CheckLine::verdict(
        "routes agree",
        structural_pass == moment_pass,
        if structural_pass == moment_pass {
            String::new()
        } else {
            "structural and moment routes disagree".into()
        },
    ));
    report
}

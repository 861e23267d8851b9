//! Monte Carlo oracle: realize a scene's generators as large Gaussian
//! random matrices and estimate expectation values empirically.  This is an
//! independent numerical cross-check of the symbolic moment engine — the
//! two share no code path beyond the scene description itself.
//!
//! Supported realizations (anything else is refused, never silently
//! approximated):
//!
//! * coefficients `ℂ`, any expectation (necessarily the identity on `ℂ`):
//!   each self-adjoint generator is an `N×N` GUE matrix, each adjoint pair
//!   a Gaussian circular matrix, and the expectation is the normalized
//!   trace;
//! * coefficients `M_d` with the uniform-trace pinching covariance: one
//!   `(d·N)×(d·N)` GUE matrix viewed as a `d×d` grid of `N×N` blocks, with
//!   the expectation taking the normalized trace of each block — blockwise
//!   traces of a big GUE converge exactly to the pinching map;
//! * coefficients `ℂ^k` with the uniform averaging covariance: the same
//!   `(k·N)×(k·N)` GUE construction, read only on the diagonal blocks.
//!   (Independent per-block matrices would realize the identity covariance
//!   instead, which is the wrong map.)

use std::sync::Arc;

use cblas_sys::{cblas_zgemm, CblasColMajor, CblasNoTrans};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{
    AlgebraElement, CondExpectation, ExpectationOrigin, MultiMatrixAlgebra, C64,
};
use crate::engine::spec::DistributionSpec;
use crate::engine::MomentOracle;
use crate::error::{CoreError, Result};
use crate::poly::{Letter, Monomial, NcPoly};
use crate::report::{CheckLine, VerificationReport};
use crate::stream_rng;

/// Finite-size bias allowance: the per-word tolerance in
/// [`mc_crosscheck`] is `max(3·stderr, FINITE_SIZE_CONSTANT / N)`.  The
/// `1/N` term covers the deterministic genus-one correction of Gaussian
/// matrix moments, which the statistical error bars cannot see.
pub const FINITE_SIZE_CONSTANT: f64 = 10.0;

/// Monte Carlo sampling configuration.
#[derive(Clone, Debug)]
pub struct MCConfig {
    /// Inner matrix size `N`: each coefficient-block entry becomes an
    /// `N×N` block, so the sampled matrices are `(grid·N)` square.
    pub inner_dim: usize,
    pub samples: usize,
    pub seed: u64,
}

impl MCConfig {
    pub fn new(inner_dim: usize, samples: usize, seed: u64) -> Result<Self> {
        if inner_dim < 16 {
            return Err(CoreError::Config(format!(
                "mc.inner_dim: must be at least 16, got {inner_dim}"
            )));
        }
        if samples < 10 {
            return Err(CoreError::Config(format!(
                "mc.samples: must be at least 10, got {samples}"
            )));
        }
        Ok(MCConfig {
            inner_dim,
            samples,
            seed,
        })
    }
}

/// Which random-matrix model realizes the scene's coefficient algebra and
/// covariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McRealization {
    /// Scalar coefficients; expectation = normalized trace.
    Scalar,
    /// `M_d` with the uniform-trace covariance; one big GUE per generator,
    /// expectation = blockwise normalized traces.
    MatrixTrace { d: usize },
    /// `ℂ^k` with uniform averaging; same big-GUE model, expectation read
    /// on the diagonal blocks only.
    DiagonalAverage { k: usize },
}

impl McRealization {
    /// Number of `N×N` blocks per side of a sampled matrix.
    pub fn grid(&self) -> usize {
        match self {
            McRealization::Scalar => 1,
            McRealization::MatrixTrace { d } => *d,
            McRealization::DiagonalAverage { k } => *k,
        }
    }
}

fn weights_uniform(weights: &[Vec<f64>]) -> bool {
    weights.iter().all(|g| {
        let w0 = 1.0 / g.len() as f64;
        g.iter().all(|w| (w - w0).abs() < 1e-12)
    })
}

fn realization_of_map(
    alg: &Arc<MultiMatrixAlgebra>,
    cov: &CondExpectation,
) -> Result<McRealization> {
    if alg.dim() == 1 {
        // Every unital linear self-map of ℂ that fixes 1 is the identity;
        // covariance maps here are expectations, so this is always the
        // scalar model.
        return Ok(McRealization::Scalar);
    }
    if let ExpectationOrigin::Pinch { groups, weights } = &cov.origin {
        if weights_uniform(weights) && groups.len() == 1 {
            let sorted = {
                let mut g = groups[0].clone();
                g.sort_unstable();
                g
            };
            if alg.num_blocks() == 1 && sorted == [0] {
                return Ok(McRealization::MatrixTrace { d: alg.blocks[0] });
            }
            let all_blocks: Vec<usize> = (0..alg.num_blocks()).collect();
            if alg.blocks.iter().all(|&b| b == 1) && sorted == all_blocks {
                return Ok(McRealization::DiagonalAverage {
                    k: alg.num_blocks(),
                });
            }
        }
    }
    Err(CoreError::UnsupportedRealization(format!(
        "no Gaussian matrix model realizes this covariance over {}; \
         supported pairs: scalars with any expectation, full matrix \
         coefficients with the uniform-trace covariance, diagonal \
         coefficients with the uniform averaging covariance",
        alg
    )))
}

/// Decide how (and whether) the scene can be realized by Gaussian block
/// matrices.  Requirements: at least one generator, every generator in its
/// own freeness family (independent samples realize free generators, not
/// correlated ones), and one common covariance map of a supported shape.
pub fn realization_for(spec: &DistributionSpec) -> Result<McRealization> {
    let nvars = spec.vars().len();
    if nvars == 0 {
        return Err(CoreError::UnsupportedRealization(
            "the scene has no generators".into(),
        ));
    }
    let mut families: Vec<usize> = (0..nvars as u32).map(|v| spec.family_of(v)).collect();
    families.sort_unstable();
    let n_families = families.len();
    families.dedup();
    if families.len() != n_families {
        return Err(CoreError::UnsupportedRealization(
            "generators sharing a freeness family are correlated; independent \
             Gaussian samples only realize generators that are free from each \
             other"
                .into(),
        ));
    }
    let mut cov: Option<&Arc<CondExpectation>> = None;
    for &l in &spec.letters() {
        let ls = spec.vars().adjoint_letter(l);
        for pair in [(l, ls), (l, l)] {
            let Some(m) = spec.cov_map(pair.0, pair.1) else {
                continue;
            };
            match cov {
                None => cov = Some(m),
                Some(prev) => {
                    if prev.map.dist(&m.map) > 1e-12 {
                        return Err(CoreError::UnsupportedRealization(
                            "generators with different covariance maps would need \
                             different matrix models in one scene"
                                .into(),
                        ));
                    }
                }
            }
        }
    }
    let cov = cov.ok_or_else(|| {
        CoreError::UnsupportedRealization("the scene has no covariance entries".into())
    })?;
    realization_of_map(spec.algebra(), cov)
}

/// One GUE sample: self-adjoint (exactly, in floating point), centered
/// Gaussian entries with `E|g_ij|² = 1/n`, so the spectral distribution
/// converges to the semicircle law of variance 1.
pub fn sample_gue(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let sigma = (0.5 / n as f64).sqrt();
    let a = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * sigma, im * sigma)
    });
    (&a + a.adjoint()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Gaussian circular sample: `(g₁ + i·g₂)/√2` for independent GUE `g₁, g₂`,
/// so `E|c_ij|² = 1/n` and the `*`-distribution converges to a standard
/// circular element.
fn sample_circular(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g1 = sample_gue(n, rng);
    let g2 = sample_gue(n, rng);
    (&g1 + &g2 * C64::new(0.0, 1.0)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// `a·b` through BLAS (`zgemm`); nalgebra's generic path is too slow for
/// the `N ≥ 256` matrices the cross-checks use on one core.
fn mat_mul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions must agree");
    let mut c = DMatrix::<C64>::zeros(m, n);
    let one: [f64; 2] = [1.0, 0.0];
    let zero: [f64; 2] = [0.0, 0.0];
    // SAFETY: num_complex::Complex<f64> is repr(C) { re, im }, layout
    // identical to [f64; 2]; nalgebra stores column-major, matching
    // CblasColMajor with leading dimension = rows; all buffers outlive the
    // call and `c` is exclusively borrowed.
    unsafe {
        cblas_zgemm(
            CblasColMajor,
            CblasNoTrans,
            CblasNoTrans,
            m as i32,
            n as i32,
            k as i32,
            &one,
            a.as_ptr() as *const [f64; 2],
            m as i32,
            b.as_ptr() as *const [f64; 2],
            k as i32,
            &zero,
            c.as_mut_ptr() as *mut [f64; 2],
            m as i32,
        );
    }
    c
}

/// The coefficient as a small `grid×grid` matrix acting blockwise.
fn small_coeff(b: &AlgebraElement, real: &McRealization) -> DMatrix<C64> {
    match real {
        McRealization::Scalar => b.blocks[0].clone(),
        McRealization::MatrixTrace { .. } => b.blocks[0].clone(),
        McRealization::DiagonalAverage { k } => DMatrix::from_fn(*k, *k, |i, j| {
            if i == j {
                b.blocks[i][(0, 0)]
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    }
}

/// `(small ⊗ 1_N)·w` without materializing the Kronecker factor: block-row
/// recombination of `w`.
fn coeff_left(small: &DMatrix<C64>, w: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let d = small.nrows();
    let sz = w.nrows();
    let mut out = DMatrix::zeros(sz, sz);
    for i in 0..d {
        for k in 0..d {
            let z = small[(i, k)];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let src = w.view((k * n, 0), (n, sz));
            let mut dst = out.view_mut((i * n, 0), (n, sz));
            dst.zip_apply(&src, |o, s| *o += z * s);
        }
    }
    out
}

/// `w·(small ⊗ 1_N)`: block-column recombination of `w`.
fn coeff_right(w: &DMatrix<C64>, small: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let d = small.nrows();
    let sz = w.nrows();
    let mut out = DMatrix::zeros(sz, sz);
    for j in 0..d {
        for k in 0..d {
            let z = small[(k, j)];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let src = w.view((0, k * n), (sz, n));
            let mut dst = out.view_mut((0, j * n), (sz, n));
            dst.zip_apply(&src, |o, s| *o += z * s);
        }
    }
    out
}

/// Draw one matrix per generator, in generator order (the order pins the
/// random stream, so it is part of the determinism contract).
fn draw_letters(
    spec: &DistributionSpec,
    real: &McRealization,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<DMatrix<C64>> {
    let sz = real.grid() * n;
    (0..spec.vars().len() as u32)
        .map(|v| {
            if spec.vars().is_self_adjoint(v) {
                sample_gue(sz, rng)
            } else {
                sample_circular(sz, rng)
            }
        })
        .collect()
}

/// Extract the sampled conditional expectation of a big matrix.
fn extract_expectation(
    w: &DMatrix<C64>,
    real: &McRealization,
    alg: &Arc<MultiMatrixAlgebra>,
    n: usize,
) -> AlgebraElement {
    let norm = 1.0 / n as f64;
    match real {
        McRealization::Scalar => {
            AlgebraElement::scalar(alg, w.trace() * C64::new(norm, 0.0))
        }
        McRealization::MatrixTrace { .. } => AlgebraElement::from_fn(alg, |_, r, c| {
            w.view((r * n, c * n), (n, n)).diagonal().sum() * C64::new(norm, 0.0)
        }),
        McRealization::DiagonalAverage { .. } => AlgebraElement::from_fn(alg, |k, _, _| {
            w.view((k * n, k * n), (n, n)).diagonal().sum() * C64::new(norm, 0.0)
        }),
    }
}

/// Evaluate one monomial `c₀·ℓ₁·c₁⋯ℓ_m·c_m` at the sampled matrices.
/// Coefficients act by block recombination, letters by `zgemm`.
fn eval_monomial(
    t: &Monomial,
    mats: &[DMatrix<C64>],
    star_mats: &[Option<DMatrix<C64>>],
    real: &McRealization,
    n: usize,
) -> DMatrix<C64> {
    let mat_of = |l: Letter| -> &DMatrix<C64> {
        if l.starred {
            star_mats[l.var as usize].as_ref().unwrap_or(&mats[l.var as usize])
        } else {
            &mats[l.var as usize]
        }
    };
    let mut acc = coeff_left(
        &small_coeff(&t.coeffs[0], real),
        mat_of(t.letters[0]),
        n,
    );
    for j in 1..t.letters.len() {
        let step = coeff_left(&small_coeff(&t.coeffs[j], real), mat_of(t.letters[j]), n);
        acc = mat_mul(&acc, &step);
    }
    coeff_right(&acc, &small_coeff(&t.coeffs[t.letters.len()], real), n)
}

/// One sample of `E_B(poly)` under the realization.
fn sample_value(
    spec: &DistributionSpec,
    poly: &NcPoly,
    real: &McRealization,
    n: usize,
    rng: &mut impl Rng,
) -> AlgebraElement {
    let alg = spec.algebra();
    let mats = draw_letters(spec, real, n, rng);
    let star_mats: Vec<Option<DMatrix<C64>>> = (0..spec.vars().len() as u32)
        .map(|v| {
            if spec.vars().is_self_adjoint(v) {
                None
            } else {
                Some(mats[v as usize].adjoint())
            }
        })
        .collect();
    let mut val = AlgebraElement::zero(alg);
    for t in &poly.terms {
        if t.letters.is_empty() {
            // A constant passes through the expectation unchanged.
            val = val.add(&t.coeffs[0]);
        } else {
            let big = eval_monomial(t, &mats, &star_mats, real, n);
            val = val.add(&extract_expectation(&big, real, alg, n));
        }
    }
    val
}

/// Deterministic pairwise summation: the reduction order is a balanced
/// binary tree over the sample indices, independent of any evaluation
/// interleaving, so repeated runs are bit-for-bit identical.
fn pairwise_sum(vals: &[AlgebraElement]) -> AlgebraElement {
    match vals.len() {
        0 => unreachable!("sample count is validated to be positive"),
        1 => vals[0].clone(),
        2 => vals[0].add(&vals[1]),
        len => {
            let (a, b) = vals.split_at(len / 2);
            pairwise_sum(a).add(&pairwise_sum(b))
        }
    }
}

/// Structural fingerprint of a polynomial: the multiset of its terms with
/// letters and coefficient entries rendered to canonical bytes (negative
/// zeros normalized so that conjugation of a real number is a fixed point).
fn structural_key(p: &NcPoly) -> Vec<Vec<u8>> {
    let canon = |x: f64| -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x
        }
    };
    let mut keys: Vec<Vec<u8>> = p
        .terms
        .iter()
        .map(|t| {
            let mut k = Vec::new();
            for l in &t.letters {
                k.extend_from_slice(&l.var.to_le_bytes());
                k.push(l.starred as u8);
            }
            k.push(0xff);
            for c in &t.coeffs {
                for b in &c.blocks {
                    for z in b.iter() {
                        k.extend_from_slice(&canon(z.re).to_bits().to_le_bytes());
                        k.extend_from_slice(&canon(z.im).to_bits().to_le_bytes());
                    }
                }
            }
            k
        })
        .collect();
    keys.sort();
    keys
}

/// Term-for-term equality of `p` and `p*`.  Conservative: a polynomial that
/// is self-adjoint only up to rearrangement of equivalent terms may be
/// missed, which merely skips the symmetrization below.
fn formally_self_adjoint(p: &NcPoly) -> bool {
    structural_key(p) == structural_key(&p.adjoint())
}

/// A Monte Carlo estimate of one expectation value.
#[derive(Clone, Debug)]
pub struct McEstimate {
    pub value: AlgebraElement,
    /// Largest per-entry standard error of the mean.
    pub std_err: f64,
    pub samples: usize,
    pub inner_dim: usize,
}

/// Estimate `E_B(poly)` by averaging over independent Gaussian samples.
///
/// The estimator is deterministic for a fixed config: sample `s` draws from
/// its own counter-derived stream, and the reduction is an order-pinned
/// pairwise sum.  If the polynomial is formally self-adjoint, the estimate
/// is symmetrized so that it is exactly self-adjoint, as the limit value
/// must be.
pub fn mc_moment(
    cfg: &MCConfig,
    spec: &DistributionSpec,
    poly: &NcPoly,
) -> Result<McEstimate> {
    let real = realization_for(spec)?;
    if !poly.algebra.compatible(spec.algebra()) {
        return Err(CoreError::AlgebraMismatch(
            "polynomial and scene live over different coefficient algebras".into(),
        ));
    }
    let n = cfg.inner_dim;
    let vals: Vec<AlgebraElement> = (0..cfg.samples)
        .map(|s| {
            let mut rng = stream_rng(cfg.seed, s as u64);
            sample_value(spec, poly, &real, n, &mut rng)
        })
        .collect();
    let mean = pairwise_sum(&vals).scale(C64::new(1.0 / cfg.samples as f64, 0.0));
    let mean_coords = mean.coords();
    let s = cfg.samples as f64;
    let mut worst = 0.0f64;
    for i in 0..mean_coords.len() {
        let mut acc = 0.0;
        for v in &vals {
            acc += (v.coords()[i] - mean_coords[i]).norm_sqr();
        }
        worst = worst.max((acc / (s * (s - 1.0))).sqrt());
    }
    let value = if formally_self_adjoint(poly) {
        mean.hermitize()
    } else {
        mean
    };
    Ok(McEstimate {
        value,
        std_err: worst,
        samples: cfg.samples,
        inner_dim: n,
    })
}

/// Compare the symbolic engine against the Monte Carlo estimator on a list
/// of labeled words.  Per-word tolerance: `max(3·stderr, c/N)` with
/// `c = `[`FINITE_SIZE_CONSTANT`] — three error bars for the statistical
/// part plus a `1/N` allowance for the deterministic finite-size bias.
/// An empty word list is a vacuous pass (stated as such in the report).
pub fn mc_crosscheck(
    cfg: &MCConfig,
    spec: &DistributionSpec,
    words: &[(String, NcPoly)],
) -> VerificationReport {
    let mut report = VerificationReport::new(format!(
        "Monte Carlo cross-check over {}",
        spec.algebra()
    ));
    report.fact("inner dimension", cfg.inner_dim);
    report.fact("samples per word", cfg.samples);
    report.fact("seed", cfg.seed);
    report.fact(
        "tolerance policy",
        format!("max(3·stderr, {FINITE_SIZE_CONSTANT}/N) per word"),
    );
    if words.is_empty() {
        report.push(CheckLine::verdict(
            "no words requested (vacuous pass)",
            true,
            String::new(),
        ));
        return report;
    }
    for (label, poly) in words {
        match mc_moment(cfg, spec, poly) {
            Ok(est) => {
                let symbolic = spec.expect(poly);
                let tol =
                    (3.0 * est.std_err).max(FINITE_SIZE_CONSTANT / cfg.inner_dim as f64);
                report.push(CheckLine::new(
                    format!("word {label}: sampled mean matches the engine"),
                    est.value.dist(&symbolic),
                    tol,
                ));
            }
            Err(err) => report.push(CheckLine::verdict(
                format!("word {label}: estimator refused"),
                false,
                err.to_string(),
            )),
        }
    }
    report
}

/// Mean absolute deviation of the estimator from the symbolic value at
/// several inner dimensions, averaged over seeds.  Used to confirm that the
/// finite-size bias decays as `N` grows.
pub fn bias_curve(
    spec: &DistributionSpec,
    poly: &NcPoly,
    inner_dims: &[usize],
    samples: usize,
    seeds: &[u64],
) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(CoreError::Config("mc.seeds: need at least one seed".into()));
    }
    let symbolic = spec.expect(poly);
    inner_dims
        .iter()
        .map(|&n| {
            let mut acc = 0.0;
            for &seed in seeds {
                let cfg = MCConfig::new(n, samples, seed)?;
                acc += mc_moment(&cfg, spec, poly)?.value.dist(&symbolic);
            }
            Ok(acc / seeds.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_pinching_expectation, PinchSpec};
    use crate::seeded_rng;

    fn scalar_semicircular() -> (Arc<DistributionSpec>, Letter) {
        let alg = MultiMatrixAlgebra::scalars();
        let e = CondExpectation::identity(&alg);
        let mut spec = DistributionSpec::new(&alg);
        let x = spec.add_semicircular("x", e);
        (Arc::new(spec), x)
    }

    #[test]
    fn gue_sample_is_exactly_self_adjoint() {
        let mut rng = seeded_rng(7);
        let g = sample_gue(32, &mut rng);
        assert_eq!(g, g.adjoint());
    }

    #[test]
    fn blas_product_matches_nalgebra() {
        let mut rng = seeded_rng(11);
        let a = DMatrix::from_fn(17, 23, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let b = DMatrix::from_fn(23, 9, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let fast = mat_mul(&a, &b);
        let slow = &a * &b;
        assert!((fast - slow).norm() < 1e-12);
    }

    #[test]
    fn scalar_moments_match_catalan_numbers() {
        let (spec, x) = scalar_semicircular();
        let cfg = MCConfig::new(64, 100, 0x5eed).unwrap();
        let words = vec![
            ("x^2".to_string(), spec.word_poly(&[x, x])),
            ("x^4".to_string(), spec.word_poly(&[x, x, x, x])),
        ];
        let report = mc_crosscheck(&cfg, &spec, &words);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn scalar_circular_unit_covariance() {
        let alg = MultiMatrixAlgebra::scalars();
        let e = CondExpectation::identity(&alg);
        let mut spec = DistributionSpec::new(&alg);
        let (c, cs) = spec.add_circular("c", e);
        let spec = Arc::new(spec);
        let cfg = MCConfig::new(64, 80, 0xace).unwrap();
        let words = vec![
            ("c c*".to_string(), spec.word_poly(&[c, cs])),
            ("c c".to_string(), spec.word_poly(&[c, c])),
        ];
        let report = mc_crosscheck(&cfg, &spec, &words);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn matrix_trace_realization_sees_the_pinching_covariance() {
        let alg = Arc::new(MultiMatrixAlgebra::new("M2", vec![2]).unwrap());
        let e = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0]],
                weights: None,
            },
        )
        .unwrap();
        let mut spec = DistributionSpec::new(&alg);
        let x = spec.add_semicircular("x", e);
        let spec = Arc::new(spec);
        // E(x·e₁₁·x) = η(e₁₁) = tr(e₁₁)·1 = ½·1.
        let e11 = NcPoly::constant(&alg, spec.vars(), AlgebraElement::basis(&alg, 0));
        let word = spec.letter_poly(x).mul(&e11).mul(&spec.letter_poly(x));
        let cfg = MCConfig::new(32, 80, 0xbead).unwrap();
        let report = mc_crosscheck(&cfg, &spec, &[("x e11 x".to_string(), word)]);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn diagonal_average_realization_sees_the_averaging_covariance() {
        let alg = Arc::new(MultiMatrixAlgebra::new("C2", vec![1, 1]).unwrap());
        let e = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0, 1]],
                weights: None,
            },
        )
        .unwrap();
        let mut spec = DistributionSpec::new(&alg);
        let x = spec.add_semicircular("x", e);
        let spec = Arc::new(spec);
        // E(x·e₁·x) = η(e₁) = ½·(1,1): a genuinely non-identity covariance,
        // which independent per-block samples would get wrong.
        let e1 = NcPoly::constant(&alg, spec.vars(), AlgebraElement::basis(&alg, 0));
        let word = spec.letter_poly(x).mul(&e1).mul(&spec.letter_poly(x));
        let cfg = MCConfig::new(32, 80, 0xfeed).unwrap();
        let report = mc_crosscheck(&cfg, &spec, &[("x e1 x".to_string(), word)]);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn doubled_covariance_is_detected() {
        // Negative control: the engine is told the covariance is 2·id, but
        // the sampler realizes a standard GUE; the cross-check must fail.
        let alg = MultiMatrixAlgebra::scalars();
        let doubled = CondExpectation::linear_scaled_identity(&alg, C64::new(2.0, 0.0));
        let mut spec = DistributionSpec::new(&alg);
        let x = spec.add_semicircular("x", doubled);
        let spec = Arc::new(spec);
        let cfg = MCConfig::new(64, 100, 0xd0b1).unwrap();
        let report =
            mc_crosscheck(&cfg, &spec, &[("x^2".to_string(), spec.word_poly(&[x, x]))]);
        assert!(!report.passed, "{report}");
    }

    #[test]
    fn fixed_seed_estimates_are_bitwise_reproducible() {
        let (spec, x) = scalar_semicircular();
        let cfg = MCConfig::new(32, 20, 42).unwrap();
        let word = spec.word_poly(&[x, x, x, x]);
        let a = mc_moment(&cfg, &spec, &word).unwrap();
        let b = mc_moment(&cfg, &spec, &word).unwrap();
        assert_eq!(a.value.coords(), b.value.coords());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    }

    #[test]
    fn self_adjoint_words_get_exactly_self_adjoint_estimates() {
        let alg = Arc::new(MultiMatrixAlgebra::new("M2", vec![2]).unwrap());
        let e = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0]],
                weights: None,
            },
        )
        .unwrap();
        let mut spec = DistributionSpec::new(&alg);
        let x = spec.add_semicircular("x", e);
        let spec = Arc::new(spec);
        let word = spec.word_poly(&[x, x]);
        let est = mc_moment(&MCConfig::new(16, 12, 3).unwrap(), &spec, &word).unwrap();
        assert_eq!(est.value.dist(&est.value.adjoint()), 0.0);
    }

    #[test]
    fn config_bounds_are_enforced() {
        assert!(MCConfig::new(8, 100, 0).is_err());
        assert!(MCConfig::new(64, 5, 0).is_err());
    }

    #[test]
    fn shared_family_is_refused() {
        let alg = MultiMatrixAlgebra::scalars();
        let e = CondExpectation::identity(&alg);
        let mut spec = DistributionSpec::new(&alg);
        let fam = spec.fresh_family();
        spec.add_semicircular_in_family("x", e.clone(), fam);
        spec.add_semicircular_in_family("y", e, fam);
        assert!(matches!(
            realization_for(&spec),
            Err(CoreError::UnsupportedRealization(_))
        ));
    }

    #[test]
    fn empty_word_list_is_a_vacuous_pass() {
        let (spec, _) = scalar_semicircular();
        let cfg = MCConfig::new(16, 10, 1).unwrap();
        let report = mc_crosscheck(&cfg, &spec, &[]);
        assert!(report.passed);
    }
}

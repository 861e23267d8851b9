//! Finite-dimensional multi-matrix algebras `⊕_k M_{d_k}(ℂ)`, their
//! elements, linear maps between them, unital *-embeddings, and conditional
//! expectations.
//!
//! Everything downstream (polynomials, moment engines, frames, Monte-Carlo)
//! works over these objects, so the conventions are fixed here once:
//!
//! * an algebra is an ordered list of square block sizes;
//! * an element stores one dense complex matrix per block;
//! * the coordinate vector of an element concatenates its blocks row-major,
//!   block by block, giving a ℂ-linear isomorphism with `ℂ^dim`;
//! * linear maps are stored as `dim × dim` matrices acting on coordinates;
//! * a conditional expectation is a linear map `A → A` whose image is a
//!   unital *-subalgebra, carried together with a model of that subalgebra
//!   and the embedding identifying the two.

use crate::error::{CoreError, Result};
use crate::report::{CheckLine, VerificationReport};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use std::fmt;
use std::sync::Arc;

/// Shorthand for the scalar type used throughout.
pub type C64 = Complex64;

pub(crate) const ONE: C64 = Complex64::new(1.0, 0.0);
pub(crate) const ZERO_C: C64 = Complex64::new(0.0, 0.0);

/// A finite-dimensional C*-algebra presented as a direct sum of full matrix
/// blocks `M_{d_0} ⊕ M_{d_1} ⊕ …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiMatrixAlgebra {
    /// Display name used in reports (`"C"`, `"M2"`, `"C^2"`, ...).
    pub label: String,
    /// Side lengths of the matrix blocks, in order.
    pub blocks: Vec<usize>,
}

impl MultiMatrixAlgebra {
    pub fn new(label: impl Into<String>, blocks: Vec<usize>) -> Result<Arc<Self>> {
        if blocks.is_empty() || blocks.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidConstruction(
                "algebra needs at least one block, all of positive size".into(),
            ));
        }
        Ok(Arc::new(MultiMatrixAlgebra {
            label: label.into(),
            blocks,
        }))
    }

    /// The scalars ℂ, as a single 1×1 block.
    pub fn scalars() -> Arc<Self> {
        Self::new("C", vec![1]).expect("scalar algebra is valid")
    }

    /// Linear dimension `Σ d_k²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|d| d * d).sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Coordinate offset of block `k` inside the flattened vector.
    pub fn block_offset(&self, k: usize) -> usize {
        self.blocks[..k].iter().map(|d| d * d).sum()
    }

    /// Whether two algebra handles describe the same block structure (labels
    /// are cosmetic and do not participate).
    pub fn compatible(&self, other: &Self) -> bool {
        self.blocks == other.blocks
    }

    /// Flattened index of the matrix unit `e^{(k)}_{rc}`.
    pub fn basis_index(&self, k: usize, r: usize, c: usize) -> usize {
        debug_assert!(r < self.blocks[k] && c < self.blocks[k]);
        self.block_offset(k) + r * self.blocks[k] + c
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn basis_position(&self, idx: usize) -> (usize, usize, usize) {
        let mut rest = idx;
        for (k, &d) in self.blocks.iter().enumerate() {
            if rest < d * d {
                return (k, rest / d, rest % d);
            }
            rest -= d * d;
        }
        panic!("basis index {idx} out of range for algebra of dim {}", self.dim());
    }
}

impl fmt::Display for MultiMatrixAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)
    }
}

/// An element of a [`MultiMatrixAlgebra`]: one dense matrix per block.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub algebra: Arc<MultiMatrixAlgebra>,
    pub blocks: Vec<DMatrix<C64>>,
}

impl AlgebraElement {
    pub fn zero(alg: &Arc<MultiMatrixAlgebra>) -> Self {
        AlgebraElement {
            algebra: alg.clone(),
            blocks: alg.blocks.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn unit(alg: &Arc<MultiMatrixAlgebra>) -> Self {
        AlgebraElement {
            algebra: alg.clone(),
            blocks: alg.blocks.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        }
    }

    /// `z · 1`.
    pub fn scalar(alg: &Arc<MultiMatrixAlgebra>, z: C64) -> Self {
        Self::unit(alg).scale(z)
    }

    /// The matrix-unit basis element with flattened index `idx`.
    pub fn basis(alg: &Arc<MultiMatrixAlgebra>, idx: usize) -> Self {
        let (k, r, c) = alg.basis_position(idx);
        let mut out = Self::zero(alg);
        out.blocks[k][(r, c)] = ONE;
        out
    }

    /// Build from per-block closures (block index, row, col) → entry.
    pub fn from_fn(
        alg: &Arc<MultiMatrixAlgebra>,
        mut f: impl FnMut(usize, usize, usize) -> C64,
    ) -> Self {
        let blocks = alg
            .blocks
            .iter()
            .enumerate()
            .map(|(k, &d)| DMatrix::from_fn(d, d, |r, c| f(k, r, c)))
            .collect();
        AlgebraElement {
            algebra: alg.clone(),
            blocks,
        }
    }

    /// Element with independent entries uniform in the complex unit square,
    /// used for randomized verification sweeps.
    pub fn random(alg: &Arc<MultiMatrixAlgebra>, rng: &mut impl Rng) -> Self {
        Self::from_fn(alg, |_, _, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Flattened coordinates (blocks concatenated row-major).
    pub fn coords(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.algebra.dim());
        let mut off = 0;
        for (k, &d) in self.algebra.blocks.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    v[off + r * d + c] = self.blocks[k][(r, c)];
                }
            }
            off += d * d;
        }
        v
    }

    pub fn from_coords(alg: &Arc<MultiMatrixAlgebra>, v: &DVector<C64>) -> Self {
        assert_eq!(v.len(), alg.dim(), "coordinate vector has wrong length");
        let mut out = Self::zero(alg);
        let mut off = 0;
        for (k, &d) in alg.blocks.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    out.blocks[k][(r, c)] = v[off + r * d + c];
                }
            }
            off += d * d;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_algebra(other);
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_algebra(other);
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.map(|x| x * z)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_algebra(other);
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Conjugate transpose, block by block.
    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Largest absolute entry over all blocks.
    pub fn sup_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest spectral norm over all blocks.
    pub fn op_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    /// `sup_norm(self − other)`.
    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other).sup_norm()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.sup_norm() <= tol
    }

    /// Sum of plain (unnormalized) traces over all blocks.
    pub fn total_trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// For an element of the scalar algebra ℂ: its value.
    pub fn as_scalar(&self) -> C64 {
        assert_eq!(self.algebra.dim(), 1, "as_scalar needs a 1-dimensional algebra");
        self.blocks[0][(0, 0)]
    }

    /// `(x + x*) / 2`.
    pub fn hermitize(&self) -> Self {
        self.add(&self.adjoint()).scale(C64::new(0.5, 0.0))
    }

    /// Smallest eigenvalue, valid for (approximately) Hermitian elements;
    /// the input is symmetrized first so tiny non-Hermitian noise is benign.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = self.hermitize();
        h.blocks
            .iter()
            .map(|b| {
                nalgebra::SymmetricEigen::new(b.clone())
                    .eigenvalues
                    .min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Deviation from being Hermitian.
    pub fn hermitian_defect(&self) -> f64 {
        self.dist(&self.adjoint())
    }

    fn assert_same_algebra(&self, other: &Self) {
        assert!(
            self.algebra.compatible(&other.algebra),
            "elements of incompatible algebras ({} vs {})",
            self.algebra,
            other.algebra
        );
    }
}

fn fmt_c(z: C64) -> String {
    if z.im.abs() < 5e-13 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{}{:.6}i", z.re, if z.im < 0.0 { "-" } else { "+" }, z.im.abs())
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                if b.nrows() == 1 {
                    fmt_c(b[(0, 0)])
                } else {
                    let rows: Vec<String> = (0..b.nrows())
                        .map(|r| {
                            let row: Vec<String> =
                                (0..b.ncols()).map(|c| fmt_c(b[(r, c)])).collect();
                            row.join(", ")
                        })
                        .collect();
                    format!("[{}]", rows.join("; "))
                }
            })
            .collect();
        write!(f, "({})", parts.join(" ⊕ "))
    }
}

impl std::ops::Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::add(self, rhs)
    }
}

impl std::ops::Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::sub(self, rhs)
    }
}

impl std::ops::Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::mul(self, rhs)
    }
}

impl std::ops::Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// A ℂ-linear map between (possibly different) multi-matrix algebras,
/// stored as its matrix on flattened coordinates.
#[derive(Debug, Clone)]
pub struct LinMap {
    pub domain: Arc<MultiMatrixAlgebra>,
    pub codomain: Arc<MultiMatrixAlgebra>,
    /// `codomain.dim() × domain.dim()`.
    pub matrix: DMatrix<C64>,
}

impl LinMap {
    pub fn identity(alg: &Arc<MultiMatrixAlgebra>) -> Self {
        LinMap {
            domain: alg.clone(),
            codomain: alg.clone(),
            matrix: DMatrix::identity(alg.dim(), alg.dim()),
        }
    }

    /// Build a map from its action on the matrix-unit basis.
    pub fn from_fn(
        domain: &Arc<MultiMatrixAlgebra>,
        codomain: &Arc<MultiMatrixAlgebra>,
        mut f: impl FnMut(&AlgebraElement) -> AlgebraElement,
    ) -> Self {
        let (dd, cd) = (domain.dim(), codomain.dim());
        let mut matrix = DMatrix::zeros(cd, dd);
        for j in 0..dd {
            let img = f(&AlgebraElement::basis(domain, j));
            assert!(
                img.algebra.compatible(codomain),
                "image lands in the wrong algebra"
            );
            matrix.set_column(j, &img.coords());
        }
        LinMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        }
    }

    pub fn from_images(
        domain: &Arc<MultiMatrixAlgebra>,
        codomain: &Arc<MultiMatrixAlgebra>,
        images: &[AlgebraElement],
    ) -> Result<Self> {
        if images.len() != domain.dim() {
            return Err(CoreError::InvalidConstruction(format!(
                "need {} basis images, got {}",
                domain.dim(),
                images.len()
            )));
        }
        let mut idx = 0;
        Ok(Self::from_fn(domain, codomain, |_| {
            let img = images[idx].clone();
            idx += 1;
            img
        }))
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        assert!(
            x.algebra.compatible(&self.domain),
            "map applied to element of the wrong algebra"
        );
        AlgebraElement::from_coords(&self.codomain, &(&self.matrix * x.coords()))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinMap) -> LinMap {
        assert!(
            inner.codomain.compatible(&self.domain),
            "composition domain mismatch"
        );
        LinMap {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &inner.matrix,
        }
    }

    /// Operator distance `max_j |(self − other) b_j|_sup` on the basis.
    pub fn dist(&self, other: &LinMap) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// A unital *-embedding `ι : B → A`, verified at construction and carrying a
/// retraction used to pull elements of `ι(B)` back to the model `B`.
#[derive(Debug, Clone)]
pub struct AlgebraEmbedding {
    pub map: LinMap,
    /// Moore–Penrose pseudo-inverse of `map.matrix`; a left inverse because
    /// the embedding is injective.
    retract_matrix: DMatrix<C64>,
}

impl AlgebraEmbedding {
    /// Build from images of the domain's matrix-unit basis, verifying that
    /// the induced map is a unital, *-preserving, multiplicative injection.
    pub fn new(
        domain: &Arc<MultiMatrixAlgebra>,
        codomain: &Arc<MultiMatrixAlgebra>,
        images: &[AlgebraElement],
    ) -> Result<Self> {
        let map = LinMap::from_images(domain, codomain, images)?;
        let tol = 1e-9;

        let unit_defect = map
            .apply(&AlgebraElement::unit(domain))
            .dist(&AlgebraElement::unit(codomain));
        if unit_defect > tol {
            return Err(CoreError::InvalidConstruction(format!(
                "embedding is not unital (defect {unit_defect:.3e})"
            )));
        }
        let d = domain.dim();
        for i in 0..d {
            let bi = AlgebraElement::basis(domain, i);
            let star_defect = map.apply(&bi.adjoint()).dist(&map.apply(&bi).adjoint());
            if star_defect > tol {
                return Err(CoreError::InvalidConstruction(format!(
                    "embedding does not preserve adjoints (defect {star_defect:.3e})"
                )));
            }
            for j in 0..d {
                let bj = AlgebraElement::basis(domain, j);
                let mult_defect = map
                    .apply(&bi.mul(&bj))
                    .dist(&map.apply(&bi).mul(&map.apply(&bj)));
                if mult_defect > tol {
                    return Err(CoreError::InvalidConstruction(format!(
                        "embedding is not multiplicative (defect {mult_defect:.3e})"
                    )));
                }
            }
        }

        let svd = nalgebra::SVD::new(map.matrix.clone(), true, true);
        if svd.rank(1e-10) < d {
            return Err(CoreError::InvalidConstruction(
                "embedding is not injective".into(),
            ));
        }
        let retract_matrix = svd
            .pseudo_inverse(1e-12)
            .map_err(|e| CoreError::Degenerate(format!("pseudo-inverse failed: {e}")))?;

        Ok(AlgebraEmbedding {
            map,
            retract_matrix,
        })
    }

    pub fn identity(alg: &Arc<MultiMatrixAlgebra>) -> Self {
        AlgebraEmbedding {
            map: LinMap::identity(alg),
            retract_matrix: DMatrix::identity(alg.dim(), alg.dim()),
        }
    }

    pub fn domain(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.map.domain
    }

    pub fn codomain(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.map.codomain
    }

    pub fn apply(&self, b: &AlgebraElement) -> AlgebraElement {
        self.map.apply(b)
    }

    /// Pull an element of the big algebra back through the embedding.
    /// Errors when the element is not (numerically) in the image.
    pub fn retract(&self, a: &AlgebraElement, tol: f64) -> Result<AlgebraElement> {
        let b = AlgebraElement::from_coords(self.domain(), &(&self.retract_matrix * a.coords()));
        let defect = self.apply(&b).dist(a);
        if defect > tol {
            return Err(CoreError::AlgebraMismatch(format!(
                "element lies outside the embedded subalgebra (defect {defect:.3e})"
            )));
        }
        Ok(b)
    }
}

/// How a [`CondExpectation`] was constructed; Monte-Carlo realizations and
/// reports dispatch on this.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpectationOrigin {
    /// The identity map of the algebra.
    Identity,
    /// Block pinching: blocks are partitioned into groups, each group is
    /// compressed to a single scalar by a weighted normalized trace and
    /// re-expanded as that scalar times the identity of every block in the
    /// group.
    Pinch {
        groups: Vec<Vec<usize>>,
        weights: Vec<Vec<f64>>,
    },
    /// Anything else (explicit images, amplifications, compositions).
    Custom,
}

/// Structural role of a linear self-map of an algebra.
#[derive(Debug, Clone)]
pub enum MapKind {
    /// A conditional expectation onto an embedded unital *-subalgebra:
    /// `range` is a model of the subalgebra and `embedding` identifies it
    /// with the image inside the domain.
    Expectation {
        range: Arc<MultiMatrixAlgebra>,
        embedding: Arc<AlgebraEmbedding>,
    },
    /// A plain linear map (covariance maps live here); no projection
    /// structure is claimed, and only positivity-style checks apply.
    Linear,
}

/// A linear map `A → A` together with its claimed structure.  The
/// `Expectation` kind is what the name says; the `Linear` kind reuses the
/// same plumbing for covariance maps `η : A → A`.
#[derive(Debug, Clone)]
pub struct CondExpectation {
    pub map: LinMap,
    pub kind: MapKind,
    pub origin: ExpectationOrigin,
}

impl CondExpectation {
    pub fn domain(&self) -> &Arc<MultiMatrixAlgebra> {
        &self.map.domain
    }

    /// Identity expectation (every algebra is a subalgebra of itself).
    pub fn identity(alg: &Arc<MultiMatrixAlgebra>) -> Arc<Self> {
        Arc::new(CondExpectation {
            map: LinMap::identity(alg),
            kind: MapKind::Expectation {
                range: alg.clone(),
                embedding: Arc::new(AlgebraEmbedding::identity(alg)),
            },
            origin: ExpectationOrigin::Identity,
        })
    }

    /// A plain linear self-map built from basis images.
    pub fn linear_from_fn(
        alg: &Arc<MultiMatrixAlgebra>,
        f: impl FnMut(&AlgebraElement) -> AlgebraElement,
    ) -> Arc<Self> {
        Arc::new(CondExpectation {
            map: LinMap::from_fn(alg, alg, f),
            kind: MapKind::Linear,
            origin: ExpectationOrigin::Custom,
        })
    }

    /// A plain linear self-map scaling the input: `x ↦ z·x`.
    pub fn linear_scaled_identity(alg: &Arc<MultiMatrixAlgebra>, z: C64) -> Arc<Self> {
        Self::linear_from_fn(alg, |x| x.scale(z))
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        self.map.apply(x)
    }

    /// For the `Expectation` kind: apply and pull the value back to the
    /// range model.
    pub fn apply_to_range(&self, x: &AlgebraElement, tol: f64) -> Result<AlgebraElement> {
        match &self.kind {
            MapKind::Expectation { embedding, .. } => embedding.retract(&self.apply(x), tol),
            MapKind::Linear => Err(CoreError::ExpectationInvalid(
                "plain linear map has no range model".into(),
            )),
        }
    }

    pub fn range(&self) -> Option<&Arc<MultiMatrixAlgebra>> {
        match &self.kind {
            MapKind::Expectation { range, .. } => Some(range),
            MapKind::Linear => None,
        }
    }

    pub fn embedding(&self) -> Option<&Arc<AlgebraEmbedding>> {
        match &self.kind {
            MapKind::Expectation { embedding, .. } => Some(embedding),
            MapKind::Linear => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.origin, ExpectationOrigin::Identity)
    }
}

/// Recipe for [`make_pinching_expectation`].
#[derive(Debug, Clone, PartialEq)]
pub enum PinchSpec {
    /// The identity map (the subalgebra is everything).
    Identity,
    /// Partition the blocks into groups; each group is compressed to a
    /// weighted normalized trace and re-expanded.  `weights[g][i]` weighs
    /// block `groups[g][i]`; weights must be positive and sum to 1 within
    /// each group.  `None` means uniform weights within each group.
    DiagonalGroups {
        groups: Vec<Vec<usize>>,
        weights: Option<Vec<Vec<f64>>>,
    },
}

/// Build the conditional expectation of `alg` described by `spec`.
///
/// For `DiagonalGroups`, the image subalgebra is `ℂ^{#groups}` embedded as
/// group-constant multiples of the block identities, and the map is
/// `x ↦ Σ_g (Σ_{k∈g} w_{gk} · tr(x_k)/d_k) · (Σ_{k∈g} 1_k)`.
/// With positive weights this is a faithful conditional expectation.
pub fn make_pinching_expectation(
    alg: &Arc<MultiMatrixAlgebra>,
    spec: &PinchSpec,
) -> Result<Arc<CondExpectation>> {
    match spec {
        PinchSpec::Identity => Ok(CondExpectation::identity(alg)),
        PinchSpec::DiagonalGroups { groups, weights } => {
            let n = alg.num_blocks();
            let mut seen = vec![false; n];
            for g in groups {
                if g.is_empty() {
                    return Err(CoreError::InvalidConstruction(
                        "pinch group must be non-empty".into(),
                    ));
                }
                for &k in g {
                    if k >= n {
                        return Err(CoreError::InvalidConstruction(format!(
                            "pinch group references block {k}, but the algebra has {n} blocks"
                        )));
                    }
                    if seen[k] {
                        return Err(CoreError::InvalidConstruction(format!(
                            "block {k} appears in more than one pinch group"
                        )));
                    }
                    seen[k] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(CoreError::InvalidConstruction(
                    "pinch groups must cover every block".into(),
                ));
            }
            let weights: Vec<Vec<f64>> = match weights {
                None => groups
                    .iter()
                    .map(|g| vec![1.0 / g.len() as f64; g.len()])
                    .collect(),
                Some(ws) => {
                    if ws.len() != groups.len() {
                        return Err(CoreError::InvalidConstruction(
                            "one weight list per pinch group is required".into(),
                        ));
                    }
                    for (g, w) in groups.iter().zip(ws) {
                        if w.len() != g.len() {
                            return Err(CoreError::InvalidConstruction(
                                "weight list length must match its group".into(),
                            ));
                        }
                        if w.iter().any(|&x| x <= 0.0) {
                            return Err(CoreError::InvalidConstruction(
                                "pinch weights must be positive".into(),
                            ));
                        }
                        let s: f64 = w.iter().sum();
                        if (s - 1.0).abs() > 1e-12 {
                            return Err(CoreError::InvalidConstruction(format!(
                                "pinch weights must sum to 1 within each group (got {s})"
                            )));
                        }
                    }
                    ws.clone()
                }
            };

            let range = MultiMatrixAlgebra::new(
                format!("C^{}", groups.len()),
                vec![1; groups.len()],
            )?;
            // Embedding: g-th coordinate ↦ identity on every block of group g.
            let images: Vec<AlgebraElement> = (0..groups.len())
                .map(|g| {
                    let mut img = AlgebraElement::zero(alg);
                    for &k in &groups[g] {
                        let d = alg.blocks[k];
                        img.blocks[k] = DMatrix::identity(d, d);
                    }
                    img
                })
                .collect();
            let embedding = Arc::new(AlgebraEmbedding::new(&range, alg, &images)?);

            let groups_cl = groups.clone();
            let weights_cl = weights.clone();
            let alg_cl = alg.clone();
            let map = LinMap::from_fn(alg, alg, move |x| {
                let mut out = AlgebraElement::zero(&alg_cl);
                for (g, group) in groups_cl.iter().enumerate() {
                    let mut lambda = ZERO_C;
                    for (i, &k) in group.iter().enumerate() {
                        let d = alg_cl.blocks[k] as f64;
                        lambda += x.blocks[k].trace() / d * C64::new(weights_cl[g][i], 0.0);
                    }
                    for &k in group {
                        let d = alg_cl.blocks[k];
                        out.blocks[k] += DMatrix::identity(d, d).map(|e: C64| e * lambda);
                    }
                }
                out
            });

            Ok(Arc::new(CondExpectation {
                map,
                kind: MapKind::Expectation {
                    range,
                    embedding,
                },
                origin: ExpectationOrigin::Pinch {
                    groups: groups.clone(),
                    weights,
                },
            }))
        }
    }
}

/// Number of deterministic + random probes used by verification sweeps.
const POSITIVITY_PROBES: usize = 24;

/// Check that a claimed conditional expectation really is one: unital,
/// idempotent, range-valued, range-fixing, bimodular over the range,
/// *-preserving, and positive.  Faithfulness is *reported* (as a fact) but
/// does not affect the verdict: non-faithful expectations are legitimate.
///
/// For a `Linear`-kind map the projection checks are skipped and only
/// *-preservation and positivity-style checks run (that is what a
/// covariance map must satisfy).
pub fn verify_expectation(e: &CondExpectation, tol: f64) -> VerificationReport {
    let alg = e.domain();
    let dim = alg.dim();
    let mut report = VerificationReport::new(format!("expectation on {}", alg));

    let is_expectation = matches!(e.kind, MapKind::Expectation { .. });

    // Unital.
    let unit = AlgebraElement::unit(alg);
    if is_expectation {
        report.push(CheckLine::new("unital", e.apply(&unit).dist(&unit), tol));
    }

    // *-preserving: E(x*) = E(x)* on the basis.
    let mut star_defect: f64 = 0.0;
    let mut star_witness = String::new();
    for i in 0..dim {
        let b = AlgebraElement::basis(alg, i);
        let d = e.apply(&b.adjoint()).dist(&e.apply(&b).adjoint());
        if d > star_defect {
            star_defect = d;
            star_witness = format!("basis element #{i}");
        }
    }
    report.push(CheckLine::new("adjoint-compatible", star_defect, tol).with_witness(star_witness));

    if is_expectation {
        // Idempotent.
        let composed = e.map.compose(&e.map);
        report.push(CheckLine::new("idempotent", composed.dist(&e.map), tol));

        let (range, embedding) = match &e.kind {
            MapKind::Expectation { range, embedding } => (range, embedding),
            MapKind::Linear => unreachable!(),
        };

        // Values land in the embedded subalgebra.
        let mut range_defect: f64 = 0.0;
        let mut fix_defect: f64 = 0.0;
        for i in 0..dim {
            let v = e.apply(&AlgebraElement::basis(alg, i));
            match embedding.retract(&v, f64::INFINITY) {
                Ok(b) => range_defect = range_defect.max(embedding.apply(&b).dist(&v)),
                Err(_) => range_defect = f64::INFINITY,
            }
        }
        report.push(CheckLine::new("range-valued", range_defect, tol));

        // E fixes the subalgebra pointwise.
        for j in 0..range.dim() {
            let emb = embedding.apply(&AlgebraElement::basis(range, j));
            fix_defect = fix_defect.max(e.apply(&emb).dist(&emb));
        }
        report.push(CheckLine::new("fixes subalgebra", fix_defect, tol));

        // Bimodularity: E(ι(b1)·x·ι(b2)) = ι(b1)·E(x)·ι(b2).
        let mut bimod_defect: f64 = 0.0;
        let mut bimod_witness = String::new();
        for j1 in 0..range.dim() {
            let b1 = embedding.apply(&AlgebraElement::basis(range, j1));
            for i in 0..dim {
                let x = AlgebraElement::basis(alg, i);
                let b1x = b1.mul(&x);
                let eb1x = b1.mul(&e.apply(&x));
                for j2 in 0..range.dim() {
                    let b2 = embedding.apply(&AlgebraElement::basis(range, j2));
                    let lhs = e.apply(&b1x.mul(&b2));
                    let rhs = eb1x.mul(&b2);
                    let d = lhs.dist(&rhs);
                    if d > bimod_defect {
                        bimod_defect = d;
                        bimod_witness = format!("E(b{j1}·x{i}·b{j2}) ≠ b{j1}·E(x{i})·b{j2}");
                    }
                }
            }
        }
        report.push(CheckLine::new("bimodular over range", bimod_defect, tol).with_witness(bimod_witness));
    }

    // Positivity: E(x*x) ⪰ 0 for a sweep of probes (all basis elements,
    // then seeded random elements).
    let mut pos_defect: f64 = 0.0;
    let mut pos_witness = String::new();
    let mut probes: Vec<AlgebraElement> =
        (0..dim).map(|i| AlgebraElement::basis(alg, i)).collect();
    let mut rng = crate::seeded_rng(0x706f73);
    for _ in 0..POSITIVITY_PROBES {
        probes.push(AlgebraElement::random(alg, &mut rng));
    }
    for (i, x) in probes.iter().enumerate() {
        let v = e.apply(&x.adjoint().mul(x));
        let herm = v.hermitian_defect();
        let min_eig = v.min_eigenvalue();
        let defect = herm.max((-min_eig).max(0.0));
        if defect > pos_defect {
            pos_defect = defect;
            pos_witness = format!("probe #{i}: min eig {min_eig:.3e}, hermitian defect {herm:.3e}");
        }
    }
    report.push(CheckLine::new("positive", pos_defect, tol).with_witness(pos_witness));

    // Faithfulness, reported as a fact only: smallest eigenvalue of the
    // Gram form (x, y) ↦ Tr E(x*y) over the full basis.
    let mut gram = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        let bi = AlgebraElement::basis(alg, i);
        for j in 0..dim {
            let bj = AlgebraElement::basis(alg, j);
            gram[(i, j)] = e.apply(&bi.adjoint().mul(&bj)).total_trace();
        }
    }
    let gram_min = nalgebra::SymmetricEigen::new(gram).eigenvalues.min();
    report.fact(
        "faithful",
        format!(
            "{} (Gram min eigenvalue {:.3e})",
            if gram_min > tol { "yes" } else { "no" },
            gram_min
        ),
    );

    report
}

/// Compose two conditional expectations on the same algebra
/// (`outer ∘ inner`), verifying that the composite is again a conditional
/// expectation — which requires the outer range to sit inside the inner one.
pub fn expectation_compose(
    outer: &CondExpectation,
    inner: &CondExpectation,
) -> Result<Arc<CondExpectation>> {
    if !outer.domain().compatible(inner.domain()) {
        return Err(CoreError::AlgebraMismatch(
            "expectation composition needs a common algebra".into(),
        ));
    }
    let (range, embedding) = match &outer.kind {
        MapKind::Expectation { range, embedding } => (range.clone(), embedding.clone()),
        MapKind::Linear => {
            return Err(CoreError::ExpectationInvalid(
                "outer map of a composition must be an expectation".into(),
            ))
        }
    };
    let composed = Arc::new(CondExpectation {
        map: outer.map.compose(&inner.map),
        kind: MapKind::Expectation { range, embedding },
        origin: ExpectationOrigin::Custom,
    });
    let report = verify_expectation(&composed, 1e-9);
    if !report.passed {
        return Err(CoreError::ExpectationInvalid(format!(
            "composite map is not a conditional expectation (max violation {:.3e})",
            report.max_violation()
        )));
    }
    Ok(composed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> Arc<MultiMatrixAlgebra> {
        MultiMatrixAlgebra::new("M2", vec![2]).unwrap()
    }

    fn c2() -> Arc<MultiMatrixAlgebra> {
        MultiMatrixAlgebra::new("C^2", vec![1, 1]).unwrap()
    }

    #[test]
    fn coords_roundtrip() {
        let alg = MultiMatrixAlgebra::new("A", vec![2, 1, 3]).unwrap();
        assert_eq!(alg.dim(), 4 + 1 + 9);
        let mut rng = crate::seeded_rng(7);
        let x = AlgebraElement::random(&alg, &mut rng);
        let back = AlgebraElement::from_coords(&alg, &x.coords());
        assert!(x.dist(&back) == 0.0);
        for idx in 0..alg.dim() {
            let (k, r, c) = alg.basis_position(idx);
            assert_eq!(alg.basis_index(k, r, c), idx);
        }
    }

    #[test]
    fn product_adjoint_reverses() {
        let alg = MultiMatrixAlgebra::new("A", vec![2, 3]).unwrap();
        let mut rng = crate::seeded_rng(11);
        let a = AlgebraElement::random(&alg, &mut rng);
        let b = AlgebraElement::random(&alg, &mut rng);
        let lhs = a.mul(&b).adjoint();
        let rhs = b.adjoint().mul(&a.adjoint());
        assert!(lhs.dist(&rhs) < 1e-14);
    }

    #[test]
    fn trace_pinch_on_m2_is_expectation() {
        let alg = m2();
        let e = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0]],
                weights: None,
            },
        )
        .unwrap();
        // x ↦ tr(x)/2 · 1 on the matrix units.
        let e01 = AlgebraElement::basis(&alg, alg.basis_index(0, 0, 1));
        assert!(e.apply(&e01).is_zero(1e-12));
        let e00 = AlgebraElement::basis(&alg, alg.basis_index(0, 0, 0));
        let expected = AlgebraElement::scalar(&alg, C64::new(0.5, 0.0));
        assert!(e.apply(&e00).dist(&expected) < 1e-12);

        let report = verify_expectation(&e, 1e-9);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn averaging_pinch_on_c2() {
        let alg = c2();
        let e = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0, 1]],
                weights: None,
            },
        )
        .unwrap();
        let x = AlgebraElement::from_fn(&alg, |k, _, _| {
            if k == 0 {
                C64::new(3.0, 0.0)
            } else {
                C64::new(1.0, 0.0)
            }
        });
        let avg = AlgebraElement::scalar(&alg, C64::new(2.0, 0.0));
        assert!(e.apply(&x).dist(&avg) < 1e-12);
        assert!(verify_expectation(&e, 1e-9).passed);

        // Weighted variant keeps the expectation property.
        let ew = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0, 1]],
                weights: Some(vec![vec![0.25, 0.75]]),
            },
        )
        .unwrap();
        assert!(verify_expectation(&ew, 1e-9).passed);
        let wavg = AlgebraElement::scalar(&alg, C64::new(0.25 * 3.0 + 0.75, 0.0));
        assert!(ew.apply(&x).dist(&wavg) < 1e-12);
    }

    #[test]
    fn corner_compression_passes_but_is_not_faithful() {
        // x ↦ x_00 · 1 on M2 is a legitimate conditional expectation onto ℂ·1
        // (conditioned on a rank-one projection), but it is not faithful.
        let alg = m2();
        let range = MultiMatrixAlgebra::scalars();
        let embedding = Arc::new(
            AlgebraEmbedding::new(&range, &alg, &[AlgebraElement::unit(&alg)]).unwrap(),
        );
        let alg_cl = alg.clone();
        let map = LinMap::from_fn(&alg, &alg, move |x| {
            AlgebraElement::scalar(&alg_cl, x.blocks[0][(0, 0)])
        });
        let e = CondExpectation {
            map,
            kind: MapKind::Expectation { range, embedding },
            origin: ExpectationOrigin::Custom,
        };
        let report = verify_expectation(&e, 1e-9);
        assert!(report.passed, "{report}");
        let faithful = report
            .facts
            .iter()
            .find(|(k, _)| k == "faithful")
            .map(|(_, v)| v.clone())
            .unwrap();
        assert!(faithful.starts_with("no"), "expected non-faithful, got {faithful}");
    }

    #[test]
    fn pinch_validation_rejects_bad_partitions() {
        let alg = c2();
        let overlapping = PinchSpec::DiagonalGroups {
            groups: vec![vec![0], vec![0, 1]],
            weights: None,
        };
        assert!(make_pinching_expectation(&alg, &overlapping).is_err());
        let incomplete = PinchSpec::DiagonalGroups {
            groups: vec![vec![0]],
            weights: None,
        };
        assert!(make_pinching_expectation(&alg, &incomplete).is_err());
        let bad_weights = PinchSpec::DiagonalGroups {
            groups: vec![vec![0, 1]],
            weights: Some(vec![vec![0.5, 0.6]]),
        };
        assert!(make_pinching_expectation(&alg, &bad_weights).is_err());
    }

    #[test]
    fn composition_requires_nested_ranges() {
        let alg = c2();
        let avg = make_pinching_expectation(
            &alg,
            &PinchSpec::DiagonalGroups {
                groups: vec![vec![0, 1]],
                weights: None,
            },
        )
        .unwrap();
        let id = CondExpectation::identity(&alg);
        // avg ∘ id = avg: fine.
        let c = expectation_compose(&avg, &id).unwrap();
        assert!(c.map.dist(&avg.map) < 1e-12);
        // id ∘ avg = avg, but the claimed range (everything) is wrong ⇒ the
        // composite must be rejected because "fixes subalgebra" fails.
        assert!(expectation_compose(&id, &avg).is_err());
    }

    #[test]
    fn scaled_identity_linear_map() {
        let alg = m2();
        let eta = CondExpectation::linear_scaled_identity(&alg, C64::new(2.0, 0.0));
        let x = AlgebraElement::basis(&alg, 1);
        assert!(eta.apply(&x).dist(&x.scale(C64::new(2.0, 0.0))) < 1e-14);
        // Positivity sweep applies to linear maps too.
        assert!(verify_expectation(&eta, 1e-9).passed);
    }
}

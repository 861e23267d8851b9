//! Scenario files: the declarative TOML schema and its validation into
//! ready-to-run objects.
//!
//! One file describes one scenario.  Schema (also documented in the README):
//!
//! ```toml
//! title  = "display name"        # optional
//! task   = "theorem8"            # required; see [`Task`]
//! maxdeg = 6                     # optional, 1..=12; default depends on task
//! tol    = 1e-9                  # optional, > 0
//! seed   = 1234                  # optional
//!
//! [algebra]
//! label  = "M2"                  # optional
//! blocks = [2]                   # required: block sizes of ⊕ M_d
//!
//! [expectation]                  # optional; identity when absent
//! kind   = "pinch"               # "identity" | "pinch" | "matrix"
//! groups  = [[0, 1]]             # pinch: partition of block indices
//! weights = [[0.25, 0.75]]       # pinch, optional: per-group weights
//! matrix  = [[[1.0, 0.0], ...]]  # matrix: dim×dim of [re, im] on coords
//!
//! [[maps]]                       # optional named auxiliary maps
//! name  = "doubled"
//! kind  = "scaled"               # the expectation kinds plus "scaled"
//! scale = 2.0
//!
//! [[variables]]
//! name       = "x"
//! role       = "semicircular"    # "semicircular" | "circular"
//! covariance = "expectation"     # "expectation" | "identity" | map name
//! family     = 7                 # optional: generators sharing a family id
//!                                # are jointly, not freely, distributed
//!
//! [[constants]]                  # optional named coefficients for words
//! name   = "p"
//! blocks = [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]]
//!
//! [candidate]                    # verify-fisher only
//! variables = ["c", "c^*"]
//! xi        = ["c^*", "c"]
//! eta       = ["expectation", "expectation"]   # optional
//!
//! [mc]                           # mc only
//! inner_dim = 256
//! samples   = 100
//! words     = [{ label = "x^2", expr = "x*x" }]
//!
//! [roundtrip]                    # roundtrip only
//! max_len = 8                    # optional; default = maxdeg
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Deserialize;

use super::words::{parse_letter, parse_word, WordContext};
use crate::algebra::{
    make_pinching_expectation, verify_expectation, AlgebraElement, CondExpectation,
    MultiMatrixAlgebra, PinchSpec, C64,
};
use crate::engine::spec::DistributionSpec;
use crate::error::{CoreError, Result};
use crate::fisher::ConjugateCandidate;
use crate::poly::Letter;
use crate::report::CheckLine;

/// The tasks a scenario can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    VerifyFisher,
    Index,
    Theorem5,
    Corollary6,
    Theorem8,
    Theorem9,
    Lemma7,
    Mc,
    Roundtrip,
}

impl Task {
    pub fn parse(s: &str) -> Result<Task> {
        Ok(match s {
            "verify-fisher" => Task::VerifyFisher,
            "index" => Task::Index,
            "theorem5" => Task::Theorem5,
            "corollary6" => Task::Corollary6,
            "theorem8" => Task::Theorem8,
            "theorem9" => Task::Theorem9,
            "lemma7" => Task::Lemma7,
            "mc" => Task::Mc,
            "roundtrip" => Task::Roundtrip,
            other => {
                return Err(CoreError::Config(format!(
                    "task: unknown task {other:?}; expected one of verify-fisher, \
                     index, theorem5, corollary6, theorem8, theorem9, lemma7, mc, \
                     roundtrip"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::VerifyFisher => "verify-fisher",
            Task::Index => "index",
            Task::Theorem5 => "theorem5",
            Task::Corollary6 => "corollary6",
            Task::Theorem8 => "theorem8",
            Task::Theorem9 => "theorem9",
            Task::Lemma7 => "lemma7",
            Task::Mc => "mc",
            Task::Roundtrip => "roundtrip",
        }
    }

    /// Default polynomial degree bound for the task's sweeps.
    fn default_maxdeg(&self) -> usize {
        match self {
            // Scalar-only sweeps afford longer words.
            Task::VerifyFisher | Task::Roundtrip | Task::Mc => 8,
            // 2×2 amplified scenes square the coefficient dimension.
            Task::Theorem5 | Task::Corollary6 => 4,
            Task::Lemma7 | Task::Theorem8 | Task::Theorem9 => 6,
            Task::Index => 2,
        }
    }
}

// --------------------------------------------------------------------------
// Raw file schema (serde).
// --------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub title: Option<String>,
    pub task: String,
    pub maxdeg: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    /// Accepted for interface stability; the engine runs single-threaded
    /// per scenario.
    pub jobs: Option<usize>,
    pub algebra: AlgebraSection,
    pub expectation: Option<MapSection>,
    #[serde(default)]
    pub maps: Vec<NamedMapSection>,
    #[serde(default)]
    pub variables: Vec<VariableSection>,
    #[serde(default)]
    pub constants: Vec<ConstantSection>,
    pub candidate: Option<CandidateSection>,
    pub mc: Option<McSection>,
    pub roundtrip: Option<RoundtripSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub label: Option<String>,
    pub blocks: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub kind: String,
    pub groups: Option<Vec<Vec<usize>>>,
    pub weights: Option<Vec<Vec<f64>>>,
    /// Row-major `dim×dim` complex matrix acting on basis coordinates.
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    pub scale: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMapSection {
    pub name: String,
    pub kind: String,
    pub groups: Option<Vec<Vec<usize>>>,
    pub weights: Option<Vec<Vec<f64>>>,
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    pub scale: Option<f64>,
}

impl NamedMapSection {
    fn as_section(&self) -> MapSection {
        MapSection {
            kind: self.kind.clone(),
            groups: self.groups.clone(),
            weights: self.weights.clone(),
            matrix: self.matrix.clone(),
            scale: self.scale,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSection {
    pub name: String,
    pub role: String,
    pub covariance: Option<String>,
    pub family: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSection {
    pub name: String,
    /// Per block: rows × cols of `[re, im]`.
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSection {
    pub variables: Vec<String>,
    pub xi: Vec<String>,
    pub eta: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub inner_dim: usize,
    pub samples: usize,
    #[serde(default)]
    pub words: Vec<McWord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McWord {
    pub label: String,
    pub expr: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripSection {
    pub max_len: Option<usize>,
}

// --------------------------------------------------------------------------
// Validated, ready-to-run form.
// --------------------------------------------------------------------------

pub struct BuiltCandidate {
    pub candidate: ConjugateCandidate,
}

pub struct BuiltScenario {
    pub title: String,
    pub task: Task,
    pub maxdeg: usize,
    pub tol: f64,
    pub seed: u64,
    pub algebra: Arc<MultiMatrixAlgebra>,
    pub expectation: Arc<CondExpectation>,
    pub spec: Arc<DistributionSpec>,
    pub words: WordContext,
    pub candidate: Option<BuiltCandidate>,
    pub mc: Option<(usize, usize, Vec<(String, crate::poly::NcPoly)>)>,
    pub roundtrip_len: usize,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub maxdeg: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> CoreError {
    CoreError::Config(format!("{field}: {msg}"))
}

fn build_map(
    field: &str,
    section: &MapSection,
    alg: &Arc<MultiMatrixAlgebra>,
    tol: f64,
) -> Result<Arc<CondExpectation>> {
    let reject = |allowed: &str, present: &str| -> CoreError {
        cfg_err(
            field,
            format!("kind {allowed:?} does not take the field {present}"),
        )
    };
    match section.kind.as_str() {
        "identity" => {
            if section.groups.is_some() || section.weights.is_some() {
                return Err(reject("identity", "groups/weights"));
            }
            if section.matrix.is_some() || section.scale.is_some() {
                return Err(reject("identity", "matrix/scale"));
            }
            Ok(CondExpectation::identity(alg))
        }
        "pinch" => {
            if section.matrix.is_some() || section.scale.is_some() {
                return Err(reject("pinch", "matrix/scale"));
            }
            let groups = section
                .groups
                .clone()
                .ok_or_else(|| cfg_err(field, "pinch requires `groups`"))?;
            make_pinching_expectation(
                alg,
                &PinchSpec::DiagonalGroups {
                    groups,
                    weights: section.weights.clone(),
                },
            )
            .map_err(|e| cfg_err(field, e))
        }
        "scaled" => {
            if section.groups.is_some()
                || section.weights.is_some()
                || section.matrix.is_some()
            {
                return Err(reject("scaled", "groups/weights/matrix"));
            }
            let scale = section
                .scale
                .ok_or_else(|| cfg_err(field, "scaled requires `scale`"))?;
            Ok(CondExpectation::linear_scaled_identity(
                alg,
                C64::new(scale, 0.0),
            ))
        }
        "matrix" => {
            if section.groups.is_some()
                || section.weights.is_some()
                || section.scale.is_some()
            {
                return Err(reject("matrix", "groups/weights/scale"));
            }
            let rows = section
                .matrix
                .as_ref()
                .ok_or_else(|| cfg_err(field, "matrix requires `matrix`"))?;
            let dim = alg.dim();
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(cfg_err(
                    field,
                    format!("matrix must be {dim}×{dim} for this algebra"),
                ));
            }
            let m: Vec<Vec<C64>> = rows
                .iter()
                .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
                .collect();
            let e = CondExpectation::linear_from_fn(alg, |x| {
                let c = x.coords();
                let out = DVector::from_fn(dim, |i, _| {
                    (0..dim).map(|j| m[i][j] * c[j]).sum::<C64>()
                });
                AlgebraElement::from_coords(alg, &out)
            });
            // An explicit matrix claims to be a conditional expectation;
            // gate it before anything downstream trusts it.  The map
            // carries no range model, so the projection-onto-a-subalgebra
            // axioms reduce to: unital, idempotent, *-preserving, positive
            // (the latter two via the shared verifier).
            let mut check = verify_expectation(&e, tol);
            let unit = AlgebraElement::unit(alg);
            check.push(CheckLine::new(
                "unital",
                e.apply(&unit).dist(&unit),
                tol,
            ));
            check.push(CheckLine::new(
                "idempotent",
                e.map.compose(&e.map).dist(&e.map),
                tol,
            ));
            if !check.passed {
                return Err(cfg_err(
                    field,
                    format!("the matrix is not a conditional expectation:\n{check}"),
                ));
            }
            Ok(e)
        }
        other => Err(cfg_err(
            field,
            format!(
                "unknown kind {other:?}; expected identity, pinch, scaled, or matrix"
            ),
        )),
    }
}

fn build_constant(
    field: &str,
    section: &ConstantSection,
    alg: &Arc<MultiMatrixAlgebra>,
) -> Result<AlgebraElement> {
    if section.blocks.len() != alg.num_blocks() {
        return Err(cfg_err(
            field,
            format!(
                "expected {} blocks, got {}",
                alg.num_blocks(),
                section.blocks.len()
            ),
        ));
    }
    let mut out = AlgebraElement::zero(alg);
    for (k, (rows, &d)) in section.blocks.iter().zip(&alg.blocks).enumerate() {
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(cfg_err(
                field,
                format!("block {k} must be {d}×{d}"),
            ));
        }
        for (r, row) in rows.iter().enumerate() {
            for (c, &[re, im]) in row.iter().enumerate() {
                out.blocks[k][(r, c)] = C64::new(re, im);
            }
        }
    }
    Ok(out)
}

/// Validate the raw file and build every object the tasks need.
pub fn build_scenario(file: &ScenarioFile, overrides: &Overrides) -> Result<BuiltScenario> {
    let task = Task::parse(&file.task)?;

    let maxdeg = overrides.maxdeg.or(file.maxdeg).unwrap_or_else(|| task.default_maxdeg());
    if maxdeg == 0 || maxdeg > 12 {
        return Err(cfg_err("maxdeg", format!("must be in 1..=12, got {maxdeg}")));
    }
    let tol = overrides.tol.or(file.tol).unwrap_or(1e-9);
    if !(tol > 0.0) {
        return Err(cfg_err("tol", format!("must be positive, got {tol}")));
    }
    let seed = overrides.seed.or(file.seed).unwrap_or(0x6f76_6670);

    if file.algebra.blocks.is_empty() {
        return Err(cfg_err("algebra.blocks", "must not be empty"));
    }
    if file.algebra.blocks.iter().any(|&b| b == 0) {
        return Err(cfg_err("algebra.blocks", "block sizes must be positive"));
    }
    let dim: usize = file.algebra.blocks.iter().map(|d| d * d).sum();
    if dim > 64 {
        return Err(cfg_err(
            "algebra.blocks",
            format!("total coordinate dimension {dim} exceeds the supported 64"),
        ));
    }
    let label = file.algebra.label.clone().unwrap_or_else(|| "B".to_string());
    let algebra = MultiMatrixAlgebra::new(&label, file.algebra.blocks.clone())
        .map_err(|e| cfg_err("algebra", e))?;

    let expectation = match &file.expectation {
        Some(section) => build_map("expectation", section, &algebra, tol)?,
        None => CondExpectation::identity(&algebra),
    };

    let mut maps: HashMap<String, Arc<CondExpectation>> = HashMap::new();
    for (i, named) in file.maps.iter().enumerate() {
        let field = format!("maps[{i}]");
        if named.name.is_empty() {
            return Err(cfg_err(&field, "name must not be empty"));
        }
        if named.name == "expectation" || named.name == "identity" {
            return Err(cfg_err(
                &field,
                format!("name {:?} is reserved", named.name),
            ));
        }
        let map = build_map(&field, &named.as_section(), &algebra, tol)?;
        if maps.insert(named.name.clone(), map).is_some() {
            return Err(cfg_err(&field, format!("duplicate map name {:?}", named.name)));
        }
    }

    let resolve_map = |field: &str, name: &str| -> Result<Arc<CondExpectation>> {
        match name {
            "expectation" => Ok(expectation.clone()),
            "identity" => Ok(CondExpectation::identity(&algebra)),
            other => maps.get(other).cloned().ok_or_else(|| {
                cfg_err(field, format!("unknown map reference {other:?}"))
            }),
        }
    };

    let mut spec = DistributionSpec::new(&algebra);
    let mut letters: HashMap<String, Letter> = HashMap::new();
    let mut family_ids: HashMap<usize, usize> = HashMap::new();
    for (i, v) in file.variables.iter().enumerate() {
        let field = format!("variables[{i}]");
        if letters.contains_key(&v.name) {
            return Err(cfg_err(&field, format!("duplicate variable name {:?}", v.name)));
        }
        let cov = resolve_map(
            &format!("{field}.covariance"),
            v.covariance.as_deref().unwrap_or("expectation"),
        )?;
        let family = match v.family {
            Some(id) => *family_ids.entry(id).or_insert_with(|| spec.fresh_family()),
            None => spec.fresh_family(),
        };
        let letter = match v.role.as_str() {
            "semicircular" => spec.add_semicircular_in_family(&v.name, cov, family),
            "circular" => spec.add_circular_in_family(&v.name, cov, family).0,
            other => {
                return Err(cfg_err(
                    &format!("{field}.role"),
                    format!("unknown role {other:?}; expected semicircular or circular"),
                ))
            }
        };
        letters.insert(v.name.clone(), letter);
    }
    let spec = Arc::new(spec);

    let mut constants: HashMap<String, AlgebraElement> = HashMap::new();
    for (i, c) in file.constants.iter().enumerate() {
        let field = format!("constants[{i}]");
        if c.name == "one" || letters.contains_key(&c.name) {
            return Err(cfg_err(&field, format!("name {:?} is already taken", c.name)));
        }
        let value = build_constant(&field, c, &algebra)?;
        if constants.insert(c.name.clone(), value).is_some() {
            return Err(cfg_err(&field, format!("duplicate constant name {:?}", c.name)));
        }
    }

    let words = WordContext {
        algebra: algebra.clone(),
        vars: spec.vars().clone(),
        letters,
        constants,
    };

    let candidate = match &file.candidate {
        None => None,
        Some(section) => {
            if section.variables.is_empty() {
                return Err(cfg_err("candidate.variables", "must not be empty"));
            }
            if section.xi.len() != section.variables.len() {
                return Err(cfg_err(
                    "candidate.xi",
                    format!(
                        "need one entry per candidate variable ({}), got {}",
                        section.variables.len(),
                        section.xi.len()
                    ),
                ));
            }
            let mut vars_l = Vec::new();
            for (i, name) in section.variables.iter().enumerate() {
                vars_l.push(parse_letter(
                    name,
                    &format!("candidate.variables[{i}]"),
                    &words,
                )?);
            }
            let mut xi = Vec::new();
            for (i, expr) in section.xi.iter().enumerate() {
                xi.push(parse_word(expr, &format!("candidate.xi[{i}]"), &words)?);
            }
            let eta = match &section.eta {
                None => vec![expectation.clone(); vars_l.len()],
                Some(names) => {
                    if names.len() != vars_l.len() {
                        return Err(cfg_err(
                            "candidate.eta",
                            format!(
                                "need one entry per candidate variable ({}), got {}",
                                vars_l.len(),
                                names.len()
                            ),
                        ));
                    }
                    let mut out = Vec::new();
                    for (i, name) in names.iter().enumerate() {
                        out.push(resolve_map(&format!("candidate.eta[{i}]"), name)?);
                    }
                    out
                }
            };
            let candidate = ConjugateCandidate::new(vars_l, xi, eta)
                .map_err(|e| cfg_err("candidate", e))?;
            Some(BuiltCandidate { candidate })
        }
    };

    let mc = match &file.mc {
        None => None,
        Some(section) => {
            let mut parsed = Vec::new();
            for (i, w) in section.words.iter().enumerate() {
                let poly = parse_word(&w.expr, &format!("mc.words[{i}].expr"), &words)?;
                parsed.push((w.label.clone(), poly));
            }
            Some((section.inner_dim, section.samples, parsed))
        }
    };

    let roundtrip_len = file
        .roundtrip
        .as_ref()
        .and_then(|r| r.max_len)
        .unwrap_or(maxdeg);
    if roundtrip_len == 0 || roundtrip_len > 12 {
        return Err(cfg_err(
            "roundtrip.max_len",
            format!("must be in 1..=12, got {roundtrip_len}"),
        ));
    }

    // Task-required sections.
    match task {
        Task::VerifyFisher => {
            if candidate.is_none() {
                return Err(cfg_err("candidate", "task verify-fisher requires a [candidate]"));
            }
        }
        Task::Mc => {
            if mc.is_none() {
                return Err(cfg_err("mc", "task mc requires an [mc] section"));
            }
            if file.variables.is_empty() {
                return Err(cfg_err("variables", "task mc requires at least one variable"));
            }
        }
        Task::Roundtrip => {
            if file.variables.is_empty() {
                return Err(cfg_err(
                    "variables",
                    "task roundtrip requires at least one variable",
                ));
            }
        }
        _ => {}
    }

    Ok(BuiltScenario {
        title: file.title.clone().unwrap_or_else(|| task.name().to_string()),
        task,
        maxdeg,
        tol,
        seed,
        algebra,
        expectation,
        spec,
        words,
        candidate,
        mc,
        roundtrip_len,
    })
}

/// Parse TOML text into the raw schema, mapping syntax/shape problems to
/// config errors (the TOML error already carries a path and span).
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))
}

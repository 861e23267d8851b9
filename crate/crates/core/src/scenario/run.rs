//! Scenario execution: dispatch the configured task, collect a [`Report`],
//! and render it for humans or machines.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{build_scenario, parse_scenario, BuiltScenario, Overrides, Task};
use crate::algebra::AlgebraElement;
use crate::engine::cumulant::roundtrip_battery;
use crate::engine::MomentOracle;
use crate::error::{CoreError, Result};
use crate::fisher::{
    corollary6_check, theorem5_selfadjoint_check, verify_conjugate_system,
    Theorem5Inputs, Theorem5SelfAdjointInputs, VerifyOptions,
};
use crate::frames::{
    self, corner_matrix_semicircularity, theorem8_check, theorem9_check, FrameCheckOptions,
};
use crate::randmat::{mc_crosscheck, MCConfig};
use crate::report::{CheckLine, VerificationReport};

/// Version of the structured report schema; bumped only on breaking changes.
pub const SCHEMA_VERSION: u32 = 1;

/// One check in the machine-readable report.  `residual` is absent for
/// pure verdict lines whose violation is not a finite number.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub tol: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckRecord {
    fn from_line(line: &CheckLine) -> Self {
        CheckRecord {
            name: line.name.clone(),
            residual: line.max_violation.is_finite().then_some(line.max_violation),
            tol: line.tol,
            passed: line.passed,
            witness: line.witness.clone(),
        }
    }
}

/// A named block-matrix value (a Fisher information, an index, ...):
/// per block, rows × cols of `[re, im]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NamedBlockValue {
    pub label: String,
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
}

impl NamedBlockValue {
    fn new(label: &str, v: &AlgebraElement) -> Self {
        NamedBlockValue {
            label: label.to_string(),
            blocks: v
                .blocks
                .iter()
                .map(|b| {
                    (0..b.nrows())
                        .map(|r| {
                            (0..b.ncols())
                                .map(|c| {
                                    let z = b[(r, c)];
                                    [z.re, z.im]
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// The result of one scenario run, in the documented schema.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub schema: u32,
    pub task: String,
    pub title: String,
    pub passed: bool,
    /// 0 = pass, 1 = a verification failed, 2 = the scenario is invalid.
    pub exit_code: i32,
    pub checks: Vec<CheckRecord>,
    pub facts: Vec<(String, String)>,
    pub values: Vec<NamedBlockValue>,
    pub elapsed_ms: f64,
}

/// Output format for [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
}

fn config_exit_code(err: &CoreError) -> i32 {
    match err {
        CoreError::Config(_)
        | CoreError::Io(_)
        | CoreError::InvalidConstruction(_)
        | CoreError::AlgebraMismatch(_)
        | CoreError::UnsupportedRealization(_) => 2,
        _ => 1,
    }
}

/// Run the scenario at `path` with command-line overrides applied.
/// Always returns a report; `report.exit_code` is the process exit code
/// (0 pass, 1 verification failure, 2 config error).
pub fn run_scenario(path: &Path, overrides: &Overrides) -> Report {
    let start = Instant::now();
    let built = std::fs::read_to_string(path)
        .map_err(CoreError::from)
        .and_then(|text| parse_scenario(&text))
        .and_then(|file| build_scenario(&file, overrides));
    let mut report = match built {
        Err(err) => {
            let mut r = Report {
                schema: SCHEMA_VERSION,
                task: "(invalid)".to_string(),
                title: path.display().to_string(),
                passed: false,
                exit_code: config_exit_code(&err),
                checks: Vec::new(),
                facts: Vec::new(),
                values: Vec::new(),
                elapsed_ms: 0.0,
            };
            r.checks.push(CheckRecord {
                name: "scenario loads and validates".to_string(),
                residual: None,
                tol: 0.0,
                passed: false,
                witness: Some(err.to_string()),
            });
            r
        }
        Ok(built) => {
            let task = built.task;
            let title = built.title.clone();
            match dispatch(&built) {
                Ok((vr, values)) => {
                    let passed = vr.passed;
                    Report {
                        schema: SCHEMA_VERSION,
                        task: task.name().to_string(),
                        title,
                        passed,
                        exit_code: i32::from(!passed),
                        checks: vr.checks.iter().map(CheckRecord::from_line).collect(),
                        facts: vr.facts.clone(),
                        values: values
                            .iter()
                            .map(|(label, v)| NamedBlockValue::new(label, v))
                            .collect(),
                        elapsed_ms: 0.0,
                    }
                }
                Err(err) => {
                    let code = config_exit_code(&err);
                    let mut r = Report {
                        schema: SCHEMA_VERSION,
                        task: task.name().to_string(),
                        title,
                        passed: false,
                        exit_code: code,
                        checks: Vec::new(),
                        facts: Vec::new(),
                        values: Vec::new(),
                        elapsed_ms: 0.0,
                    };
                    r.checks.push(CheckRecord {
                        name: "task completes".to_string(),
                        residual: None,
                        tol: 0.0,
                        passed: false,
                        witness: Some(err.to_string()),
                    });
                    r
                }
            }
        }
    };
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

fn dispatch(
    built: &BuiltScenario,
) -> Result<(VerificationReport, Vec<(String, AlgebraElement)>)> {
    let opts = VerifyOptions {
        maxdeg: built.maxdeg,
        tol: built.tol,
        budget: 256,
        seed: built.seed,
    };
    match built.task {
        Task::VerifyFisher => {
            let cand = &built.candidate.as_ref().expect("validated upstream").candidate;
            let verdict = verify_conjugate_system(built.spec.as_ref(), cand, &opts);
            let verified = verdict.report.passed;
            let mut report = verdict.report;
            let mut values = Vec::new();
            if verified {
                let base = built.spec.base_expectation();
                let mut phi = AlgebraElement::zero(&built.algebra);
                for xi in &cand.xi {
                    phi = phi.add(&base.apply(&built.spec.expect(&xi.mul(&xi.adjoint()))));
                }
                report.push(CheckLine::new(
                    "Fisher information is self-adjoint",
                    phi.hermitian_defect(),
                    built.tol,
                ));
                report.push(CheckLine::new(
                    "Fisher information is positive semidefinite",
                    (-phi.min_eigenvalue()).max(0.0),
                    built.tol,
                ));
                report.fact("fisher information", &phi);
                values.push(("fisher information".to_string(), phi));
            } else {
                report.push(CheckLine::verdict(
                    "Fisher information value",
                    false,
                    "refused: candidate verification failed",
                ));
            }
            Ok((report, values))
        }
        Task::Index => {
            let (idx, report) = frames::index(&built.expectation, built.tol)?;
            Ok((report, vec![("index".to_string(), idx)]))
        }
        Task::Theorem5 => {
            let scene = frames::standard_corner_scene(&built.expectation);
            let lp = |l| scene.spec.letter_poly(l);
            let e4 = || {
                [
                    [built.expectation.clone(), built.expectation.clone()],
                    [built.expectation.clone(), built.expectation.clone()],
                ]
            };
            let inputs = Theorem5SelfAdjointInputs {
                scalar: scene.spec.clone(),
                entries: [[scene.s1, scene.c], [scene.c_star, scene.s2]],
                conj: [[lp(scene.s1), lp(scene.c_star)], [lp(scene.c), lp(scene.s2)]],
                eta: e4(),
            };
            let opts = VerifyOptions {
                budget: 48,
                ..opts
            };
            let outcome = theorem5_selfadjoint_check(&inputs, &opts)?;
            let mut values = vec![("entrywise prediction".to_string(), outcome.formula)];
            if let Some(phi) = outcome.phi {
                values.insert(0, ("matrix fisher information".to_string(), phi));
            }
            Ok((outcome.report, values))
        }
        Task::Corollary6 => {
            let mut spec = crate::engine::spec::DistributionSpec::new(&built.algebra);
            let pairs: Vec<_> = ["a11", "a12", "a21", "a22"]
                .iter()
                .map(|name| spec.add_circular(name, built.expectation.clone()))
                .collect();
            let spec = Arc::new(spec);
            let lp = |l| spec.letter_poly(l);
            let e4 = || {
                [
                    [built.expectation.clone(), built.expectation.clone()],
                    [built.expectation.clone(), built.expectation.clone()],
                ]
            };
            let inputs = Theorem5Inputs {
                scalar: spec.clone(),
                entries: [[pairs[0].0, pairs[1].0], [pairs[2].0, pairs[3].0]],
                conj_x: [
                    [lp(pairs[0].1), lp(pairs[1].1)],
                    [lp(pairs[2].1), lp(pairs[3].1)],
                ],
                conj_y: [
                    [lp(pairs[0].0), lp(pairs[1].0)],
                    [lp(pairs[2].0), lp(pairs[3].0)],
                ],
                eta: e4(),
                xi: e4(),
            };
            let opts = VerifyOptions {
                budget: 48,
                ..opts
            };
            let outcome = corollary6_check(&inputs, &opts)?;
            let mut values = vec![("entrywise prediction".to_string(), outcome.formula)];
            if let Some(phi) = outcome.phi {
                values.insert(0, ("matrix fisher information".to_string(), phi));
            }
            Ok((outcome.report, values))
        }
        Task::Theorem8 | Task::Theorem9 => {
            let fopts = FrameCheckOptions {
                scalar: VerifyOptions {
                    maxdeg: built.maxdeg,
                    tol: built.tol,
                    budget: 192,
                    seed: built.seed,
                },
                matrix: VerifyOptions {
                    maxdeg: built.maxdeg.min(4),
                    tol: built.tol,
                    budget: 32,
                    seed: built.seed,
                },
            };
            let outcome = if built.task == Task::Theorem8 {
                theorem8_check(&built.expectation, &fopts)?
            } else {
                theorem9_check(&built.expectation, &fopts)?
            };
            let mut values = Vec::new();
            if let Some(v) = outcome.phi_scalar {
                values.push(("pair fisher information".to_string(), v));
            }
            if let Some(v) = outcome.phi_matrix {
                values.push(("matrix fisher information".to_string(), v));
            }
            if let Some(v) = outcome.index {
                values.push(("index".to_string(), v));
            }
            Ok((outcome.report, values))
        }
        Task::Lemma7 => {
            let report = corner_matrix_semicircularity(
                &built.expectation,
                built.maxdeg,
                built.tol,
                3,
                built.seed,
            );
            Ok((report, Vec::new()))
        }
        Task::Mc => {
            let (inner_dim, samples, words) = built.mc.as_ref().expect("validated upstream");
            let cfg = MCConfig::new(*inner_dim, *samples, built.seed)?;
            Ok((mc_crosscheck(&cfg, &built.spec, words), Vec::new()))
        }
        Task::Roundtrip => Ok((
            roundtrip_battery(&built.spec, built.roundtrip_len, built.tol),
            Vec::new(),
        )),
    }
}

/// Render a report.  The text form is for terminals; the structured form is
/// JSON following the schema in the README (stable: new fields may be
/// added, existing ones are never renamed within a schema version).
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            serde_json::to_string_pretty(report).expect("report serialization cannot fail")
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let push = |out: &mut String, s: String| {
                out.push_str(&s);
                out.push('\n');
            };
            push(&mut out, format!("scenario: {}", report.title));
            push(&mut out, format!("task:     {}", report.task));
            for c in &report.checks {
                let mut line = format!(
                    "[{}] {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name
                );
                if let Some(r) = c.residual {
                    line.push_str(&format!("  (residual {:.3e}, tol {:.1e})", r, c.tol));
                }
                push(&mut out, line);
                if let Some(w) = &c.witness {
                    push(&mut out, format!("       witness: {w}"));
                }
            }
            if !report.facts.is_empty() {
                push(&mut out, "facts:".to_string());
                for (label, value) in &report.facts {
                    push(&mut out, format!("  {label} = {value}"));
                }
            }
            for value in &report.values {
                push(&mut out, format!("{}:", value.label));
                for (k, block) in value.blocks.iter().enumerate() {
                    let d = block.len();
                    push(&mut out, format!("  block {k} ({d}×{d}):"));
                    for row in block {
                        let cells: Vec<String> = row
                            .iter()
                            .map(|[re, im]| format!("{re:+12.6}{im:+12.6}i"))
                            .collect();
                        push(&mut out, format!("    {}", cells.join("  ")));
                    }
                }
            }
            push(
                &mut out,
                format!(
                    "overall:  {} (exit {}, {:.1} ms)",
                    if report.passed { "PASS" } else { "FAIL" },
                    report.exit_code,
                    report.elapsed_ms
                ),
            );
            out
        }
    }
}

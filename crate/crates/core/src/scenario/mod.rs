//! Declarative scenario runner.
//!
//! A scenario is a single TOML file describing a coefficient algebra, a
//! conditional expectation onto it, a family of generators with covariance
//! references, optional candidate conjugate data, and one task to run.
//! [`run_scenario`] loads, validates, and executes it, producing a
//! [`Report`] that renders as terminal text or as schema-stable JSON via
//! [`emit_report`].
//!
//! Exit-code conventions (also stored in [`Report::exit_code`]): `0` the
//! task ran and every check passed, `1` the task ran and a mathematical
//! check failed, `2` the scenario never ran (unreadable file, schema
//! violation, invalid construction).  Schema violations are reported with
//! the path of the offending field.
//!
//! Word expressions (`candidate.xi`, `mc.words[*].expr`) use the grammar in
//! [`words`]: sums and differences of products of factors, `^*` for the
//! adjoint, `(`…`)` for grouping, numeric literals for scalar coefficients,
//! and names referring to declared variables or constants.

pub mod config;
pub mod run;
pub mod words;

pub use config::{build_scenario, parse_scenario, BuiltScenario, Overrides, Task};
pub use run::{emit_report, run_scenario, CheckRecord, NamedBlockValue, Report, ReportFormat, SCHEMA_VERSION};
pub use words::{parse_letter, parse_word, WordContext};

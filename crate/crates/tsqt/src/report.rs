//! Query execution and report rendering.
//!
//! A report runs every query of a scenario against its protocol; a failing
//! query never aborts the rest. Where a query declares an expectation the
//! report carries a verdict, and the whole report passes only when every
//! verdict does and no query failed unexpectedly. Machine and human
//! renderings are built from the same rounded numbers, so they can never
//! disagree on a value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::abl::{self, EnsembleRates};
use crate::error::Result;
use crate::protocol::{CounterfactualQuery, QueryMode, QueryResult, Readiness};
use crate::scenario::{
    parse_tuple_key, Expect, ModeSpec, QuerySpec, ReadinessLevel, Scenario,
};
use crate::trajectory::{self, AblComparison};

/// Options shared by every query of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Monte Carlo sample count.
    pub samples: u64,
    pub seed: u64,
    /// Default tolerance for expectations that do not carry their own, and
    /// the slack on element-of-reality unity checks.
    pub tol: f64,
    /// When set, forces every counterfactual-style query to this mode;
    /// otherwise queries use their own declared mode, defaulting to gated.
    pub mode: Option<QueryMode>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            tol: 1e-9,
            mode: None,
        }
    }
}

/// What one query produced.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutcome {
    Abl {
        observable: String,
        probabilities: Vec<f64>,
    },
    Sequence {
        observables: Vec<String>,
        /// Nonzero entries only, `(1-based tuple, probability)`.
        entries: Vec<(Vec<usize>, f64)>,
        /// Dense table kept for verdicts; tuples are 0-based here.
        full: Vec<(Vec<usize>, f64)>,
    },
    Counterfactual {
        mode: QueryMode,
        result: QueryResult,
    },
    ElementOfReality {
        mode: QueryMode,
        holds: bool,
        probability: Option<f64>,
        reason: Option<String>,
    },
    EnsembleRates {
        observable: Option<String>,
        rates: EnsembleRates,
    },
    Readiness {
        observable: String,
        t: f64,
        readiness: Readiness,
    },
    MonteCarlo {
        comparison: AblComparison,
        threshold: f64,
    },
    Failed {
        kind: &'static str,
        message: String,
    },
}

/// One executed query with its verdict, when an expectation was declared.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryReport {
    pub kind: &'static str,
    pub outcome: QueryOutcome,
    pub verdict: Option<bool>,
}

impl QueryReport {
    /// A query drags the report down when its expectation fails or when it
    /// errored without an expectation saying it should.
    pub fn ok(&self) -> bool {
        match self.verdict {
            Some(v) => v,
            None => !matches!(self.outcome, QueryOutcome::Failed { .. }),
        }
    }
}

/// The results of running every query of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub options: RunOptions,
    pub queries: Vec<QueryReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.queries.iter().all(QueryReport::ok)
    }
}

/// Execute every query of the scenario. Individual failures are recorded in
/// place; this function itself does not fail.
pub fn run_report(scenario: &Scenario, options: &RunOptions) -> Report {
    let queries = scenario
        .queries()
        .iter()
        .map(|spec| {
            let outcome = execute(spec, scenario, options)
                .unwrap_or_else(|e| QueryOutcome::Failed {
                    kind: e.kind(),
                    message: e.to_string(),
                });
            let verdict = judge(spec, &outcome, options);
            QueryReport {
                kind: spec.kind(),
                outcome,
                verdict,
            }
        })
        .collect();
    Report {
        scenario: scenario.name().to_string(),
        options: *options,
        queries,
    }
}

fn effective_mode(declared: Option<ModeSpec>, options: &RunOptions) -> QueryMode {
    options
        .mode
        .unwrap_or_else(|| declared.map(QueryMode::from).unwrap_or_default())
}

fn execute(spec: &QuerySpec, scenario: &Scenario, options: &RunOptions) -> Result<QueryOutcome> {
    let protocol = scenario.protocol();
    match spec {
        QuerySpec::Abl { observable, .. } => {
            let obs = protocol.observable(observable)?;
            let dist = abl::abl_single(&protocol.ensemble(), obs)?;
            Ok(QueryOutcome::Abl {
                observable: observable.clone(),
                probabilities: dist.single_stage().expect("single stage").to_vec(),
            })
        }
        QuerySpec::Sequence { observables, .. } => {
            let obs: Vec<_> = observables
                .iter()
                .map(|name| protocol.observable(name))
                .collect::<Result<_>>()?;
            let dist = abl::abl_sequence(&protocol.ensemble(), &obs)?;
            let full: Vec<_> = dist.entries().collect();
            let entries = full
                .iter()
                .filter(|(_, p)| *p >= 1e-15)
                .map(|(tuple, p)| (tuple.iter().map(|o| o + 1).collect(), *p))
                .collect();
            Ok(QueryOutcome::Sequence {
                observables: observables.clone(),
                entries,
                full,
            })
        }
        QuerySpec::Counterfactual {
            measured,
            target_stage,
            target_outcome,
            mode,
            ..
        } => {
            let mode = effective_mode(*mode, options);
            let result = protocol.counterfactual(&CounterfactualQuery {
                measured: measured
                    .iter()
                    .map(|m| (m.observable.clone(), m.t))
                    .collect(),
                target_stage: target_stage - 1,
                target_outcome: target_outcome - 1,
                mode,
            })?;
            Ok(QueryOutcome::Counterfactual { mode, result })
        }
        QuerySpec::ElementOfReality {
            measured,
            target_stage,
            target_outcome,
            mode,
            ..
        } => {
            let mode = effective_mode(*mode, options);
            let result = protocol.counterfactual(&CounterfactualQuery {
                measured: measured
                    .iter()
                    .map(|m| (m.observable.clone(), m.t))
                    .collect(),
                target_stage: target_stage - 1,
                target_outcome: target_outcome - 1,
                mode,
            })?;
            let (holds, probability, reason) = match result {
                QueryResult::Defined(v) => (v >= 1.0 - options.tol, Some(v), None),
                QueryResult::Undefined(reason) => (false, None, Some(reason)),
            };
            Ok(QueryOutcome::ElementOfReality {
                mode,
                holds,
                probability,
                reason,
            })
        }
        QuerySpec::EnsembleRates { observable, .. } => {
            let obs = observable
                .as_ref()
                .map(|name| protocol.observable(name))
                .transpose()?;
            let rates = abl::ensemble_rates(&protocol.ensemble(), obs)?;
            Ok(QueryOutcome::EnsembleRates {
                observable: observable.clone(),
                rates,
            })
        }
        QuerySpec::Readiness { observable, t, .. } => {
            let obs = protocol.observable(observable)?;
            let readiness = protocol.readiness(obs, *t)?;
            Ok(QueryOutcome::Readiness {
                observable: observable.clone(),
                t: *t,
                readiness,
            })
        }
        QuerySpec::Montecarlo { expect } => {
            let comparison = trajectory::compare_to_abl(protocol, options.samples, options.seed)?;
            let threshold = match expect {
                Some(Expect::Value(e)) => e.max_abs_z,
                _ => 5.0,
            };
            Ok(QueryOutcome::MonteCarlo {
                comparison,
                threshold,
            })
        }
    }
}

/// Compare an outcome against the query's declared expectation, if any.
fn judge(spec: &QuerySpec, outcome: &QueryOutcome, options: &RunOptions) -> Option<bool> {
    // An expected error passes exactly when that error occurred.
    macro_rules! with_expect {
        ($expect:expr, $value:pat => $check:expr) => {
            match ($expect, outcome) {
                (None, _) => None,
                (Some(Expect::Error { error }), QueryOutcome::Failed { kind, .. }) => {
                    Some(error == kind)
                }
                (Some(Expect::Error { .. }), _) => Some(false),
                (Some(Expect::Value(_)), QueryOutcome::Failed { .. }) => Some(false),
                (Some(Expect::Value($value)), _) => Some($check),
            }
        };
    }

    let tol = |t: Option<f64>| t.unwrap_or(options.tol);
    match (spec, outcome) {
        (QuerySpec::Abl { expect, .. }, QueryOutcome::Abl { probabilities, .. }) => {
            with_expect!(expect, e => {
                e.probabilities.len() == probabilities.len()
                    && e.probabilities
                        .iter()
                        .zip(probabilities)
                        .all(|(want, got)| (want - got).abs() <= tol(e.tol))
            })
        }
        (QuerySpec::Sequence { observables, expect, .. }, QueryOutcome::Sequence { full, .. }) => {
            with_expect!(expect, e => {
                // Keys were validated at load; tuples missing from the table
                // are expected to vanish.
                let mut want: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                for (key, value) in &e.table {
                    if let Ok(tuple) =
                        parse_tuple_key(key, observables.len(), usize::MAX, "expect.table")
                    {
                        want.insert(tuple, *value);
                    }
                }
                full.iter().all(|(tuple, p)| {
                    let target = want.get(tuple).copied().unwrap_or(0.0);
                    (p - target).abs() <= tol(e.tol)
                })
            })
        }
        (
            QuerySpec::Counterfactual { expect, .. },
            QueryOutcome::Counterfactual { result, .. },
        ) => {
            with_expect!(expect, e => match (e.defined, result) {
                (true, QueryResult::Defined(v)) => e
                    .value
                    .map(|want| (want - v).abs() <= tol(e.tol))
                    .unwrap_or(true),
                (false, QueryResult::Undefined(_)) => true,
                _ => false,
            })
        }
        (
            QuerySpec::ElementOfReality { expect, .. },
            QueryOutcome::ElementOfReality { holds, .. },
        ) => {
            with_expect!(expect, e => e.value == *holds)
        }
        (QuerySpec::EnsembleRates { expect, .. }, QueryOutcome::EnsembleRates { rates, .. }) => {
            with_expect!(expect, e => {
                (e.rw - rates.rw).abs() <= tol(e.tol) && (e.cfw - rates.cfw).abs() <= tol(e.tol)
            })
        }
        (QuerySpec::Readiness { expect, .. }, QueryOutcome::Readiness { readiness, .. }) => {
            with_expect!(expect, e => match (e.level, readiness) {
                (ReadinessLevel::Ready, Readiness::Ready) => true,
                (ReadinessLevel::NotReady, Readiness::NotReady) => true,
                (ReadinessLevel::PartiallyReady, Readiness::PartiallyReady(on_path)) => {
                    e.outcomes.as_ref().is_none_or(|want| {
                        let got: Vec<usize> = on_path.iter().map(|o| o + 1).collect();
                        want == &got
                    })
                }
                _ => false,
            })
        }
        (
            QuerySpec::Montecarlo { expect },
            QueryOutcome::MonteCarlo {
                comparison,
                threshold,
            },
        ) => {
            with_expect!(expect, _e => comparison.passes(*threshold))
        }
        // Kind mismatch only happens on failure outcomes.
        (spec, QueryOutcome::Failed { kind, .. }) => match spec {
            QuerySpec::Abl { expect, .. } => expected_error(expect, kind),
            QuerySpec::Sequence { expect, .. } => expected_error(expect, kind),
            QuerySpec::Counterfactual { expect, .. } => expected_error(expect, kind),
            QuerySpec::ElementOfReality { expect, .. } => expected_error(expect, kind),
            QuerySpec::EnsembleRates { expect, .. } => expected_error(expect, kind),
            QuerySpec::Readiness { expect, .. } => expected_error(expect, kind),
            QuerySpec::Montecarlo { expect } => expected_error(expect, kind),
        },
        _ => Some(false),
    }
}

fn expected_error<T>(expect: &Option<Expect<T>>, kind: &str) -> Option<bool> {
    match expect {
        None => None,
        Some(Expect::Error { error }) => Some(error == kind),
        Some(Expect::Value(_)) => Some(false),
    }
}

/// Round to 12 significant digits, the machine-report precision: below the
/// algebra tolerance, above double-precision noise.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        format!("{x:.11e}").parse().expect("valid float")
    }
}

fn num(x: f64) -> Value {
    match serde_json::Number::from_f64(sig12(x)) {
        Some(n) => Value::Number(n),
        None => Value::Null,
    }
}

fn mode_str(mode: QueryMode) -> &'static str {
    match mode {
        QueryMode::Gated => "gated",
        QueryMode::Ungated => "ungated",
    }
}

/// Render the whole report as a single JSON document. Identical inputs give
/// byte-identical output.
pub fn render_json(report: &Report) -> String {
    let queries: Vec<Value> = report
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut object = Map::new();
            object.insert("index".into(), json!(i + 1));
            object.insert("type".into(), json!(q.kind));
            outcome_fields(&q.outcome, &mut object);
            if let Some(verdict) = q.verdict {
                object.insert("pass".into(), json!(verdict));
            }
            Value::Object(object)
        })
        .collect();
    let document = json!({
        "scenario": report.scenario,
        "samples": report.options.samples,
        "seed": report.options.seed,
        "tol": num(report.options.tol),
        "mode": report.options.mode.map(mode_str),
        "queries": queries,
        "pass": report.passed(),
    });
    let mut text = serde_json::to_string_pretty(&document).expect("reports always serialize");
    text.push('\n');
    text
}

fn outcome_fields(outcome: &QueryOutcome, object: &mut Map<String, Value>) {
    match outcome {
        QueryOutcome::Abl {
            observable,
            probabilities,
        } => {
            object.insert("observable".into(), json!(observable));
            object.insert(
                "probabilities".into(),
                Value::Array(probabilities.iter().map(|&p| num(p)).collect()),
            );
        }
        QueryOutcome::Sequence {
            observables,
            entries,
            ..
        } => {
            object.insert("observables".into(), json!(observables));
            let mut table = Map::new();
            for (tuple, p) in entries {
                let key = tuple
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                table.insert(key, num(*p));
            }
            object.insert("table".into(), Value::Object(table));
        }
        QueryOutcome::Counterfactual { mode, result } => {
            object.insert("mode".into(), json!(mode_str(*mode)));
            match result {
                QueryResult::Defined(v) => {
                    object.insert("defined".into(), json!(true));
                    object.insert("value".into(), num(*v));
                }
                QueryResult::Undefined(reason) => {
                    object.insert("defined".into(), json!(false));
                    object.insert("reason".into(), json!(reason));
                }
            }
        }
        QueryOutcome::ElementOfReality {
            mode,
            holds,
            probability,
            reason,
        } => {
            object.insert("mode".into(), json!(mode_str(*mode)));
            object.insert("holds".into(), json!(holds));
            if let Some(p) = probability {
                object.insert("probability".into(), num(*p));
            }
            if let Some(r) = reason {
                object.insert("reason".into(), json!(r));
            }
        }
        QueryOutcome::EnsembleRates { observable, rates } => {
            if let Some(name) = observable {
                object.insert("observable".into(), json!(name));
            }
            object.insert("rw".into(), num(rates.rw));
            object.insert("cfw".into(), num(rates.cfw));
        }
        QueryOutcome::Readiness {
            observable,
            t,
            readiness,
        } => {
            object.insert("observable".into(), json!(observable));
            object.insert("t".into(), num(*t));
            let (level, outcomes) = match readiness {
                Readiness::Ready => ("ready", None),
                Readiness::NotReady => ("not_ready", None),
                Readiness::PartiallyReady(on_path) => (
                    "partially_ready",
                    Some(on_path.iter().map(|o| o + 1).collect::<Vec<_>>()),
                ),
            };
            object.insert("level".into(), json!(level));
            if let Some(outcomes) = outcomes {
                object.insert("outcomes".into(), json!(outcomes));
            }
        }
        QueryOutcome::MonteCarlo {
            comparison,
            threshold,
        } => {
            object.insert("observables".into(), json!(comparison.labels));
            object.insert("samples_total".into(), json!(comparison.samples_total));
            object.insert("samples_kept".into(), json!(comparison.samples_kept));
            object.insert("acceptance_rate".into(), num(comparison.acceptance_rate()));
            object.insert("threshold".into(), num(*threshold));
            object.insert("max_abs_z".into(), num(comparison.max_abs_z()));
            let tuples: Vec<Value> = comparison
                .tuples
                .iter()
                .map(|t| {
                    json!({
                        "outcomes": t.outcomes.iter().map(|o| o + 1).collect::<Vec<_>>(),
                        "closed_form": num(t.closed_form),
                        "frequency": num(t.frequency),
                        "z": num(t.z),
                    })
                })
                .collect();
            object.insert("tuples".into(), Value::Array(tuples));
        }
        QueryOutcome::Failed { kind, message } => {
            object.insert("error".into(), json!(kind));
            object.insert("message".into(), json!(message));
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{}", sig12(x))
}

fn fmt_probs(probs: &[f64]) -> String {
    let inner = probs.iter().map(|&p| fmt_num(p)).collect::<Vec<_>>();
    format!("[{}]", inner.join(", "))
}

/// Render the report as a human-readable table. Every number shown here is
/// the same 12-significant-digit value the JSON rendering carries.
pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    let mode = match report.options.mode {
        Some(m) => mode_str(m),
        None => "per-query",
    };
    let _ = writeln!(
        out,
        "scenario {}  (samples={} seed={} tol={} mode={})",
        report.scenario,
        report.options.samples,
        report.options.seed,
        fmt_num(report.options.tol),
        mode
    );
    for (i, q) in report.queries.iter().enumerate() {
        let verdict = match q.verdict {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "-",
        };
        let body = describe(&q.outcome);
        let _ = writeln!(out, "[{:>2}] {:<20} {:<60} {}", i + 1, q.kind, body, verdict);
        if let QueryOutcome::MonteCarlo { comparison, .. } = &q.outcome {
            for t in &comparison.tuples {
                if t.closed_form == 0.0 && t.frequency == 0.0 {
                    continue;
                }
                let outcomes = t
                    .outcomes
                    .iter()
                    .map(|o| (o + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let _ = writeln!(
                    out,
                    "      ({outcomes})  closed={} sampled={} z={}",
                    fmt_num(t.closed_form),
                    fmt_num(t.frequency),
                    fmt_num(t.z)
                );
            }
        }
    }
    let _ = writeln!(
        out,
        "overall: {}",
        if report.passed() { "pass" } else { "FAIL" }
    );
    out
}

fn describe(outcome: &QueryOutcome) -> String {
    match outcome {
        QueryOutcome::Abl {
            observable,
            probabilities,
        } => format!("{observable} -> {}", fmt_probs(probabilities)),
        QueryOutcome::Sequence {
            observables,
            entries,
            ..
        } => {
            let cells = entries
                .iter()
                .map(|(tuple, p)| {
                    let key = tuple
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(",");
                    format!("({key})={}", fmt_num(*p))
                })
                .collect::<Vec<_>>();
            format!("[{}] -> {}", observables.join(","), cells.join("  "))
        }
        QueryOutcome::Counterfactual { mode, result } => match result {
            QueryResult::Defined(v) => {
                format!("{} -> defined {}", mode_str(*mode), fmt_num(*v))
            }
            QueryResult::Undefined(reason) => {
                format!("{} -> undefined ({reason})", mode_str(*mode))
            }
        },
        QueryOutcome::ElementOfReality {
            mode,
            holds,
            probability,
            reason,
        } => {
            let detail = match (probability, reason) {
                (Some(p), _) => format!("probability {}", fmt_num(*p)),
                (None, Some(r)) => r.clone(),
                (None, None) => String::new(),
            };
            format!("{} -> {holds} ({detail})", mode_str(*mode))
        }
        QueryOutcome::EnsembleRates { observable, rates } => {
            let label = observable.as_deref().unwrap_or("-");
            format!(
                "{label} -> rw={} cfw={}",
                fmt_num(rates.rw),
                fmt_num(rates.cfw)
            )
        }
        QueryOutcome::Readiness {
            observable,
            t,
            readiness,
        } => {
            let level = match readiness {
                Readiness::Ready => "ready".to_string(),
                Readiness::NotReady => "not ready".to_string(),
                Readiness::PartiallyReady(on_path) => {
                    let outcomes = on_path
                        .iter()
                        .map(|o| (o + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    format!("partially ready {{{outcomes}}}")
                }
            };
            format!("{observable} at t={} -> {level}", fmt_num(*t))
        }
        QueryOutcome::MonteCarlo {
            comparison,
            threshold,
        } => format!(
            "[{}] kept {}/{} max|z|={} (limit {})",
            comparison.labels.join(","),
            comparison.samples_kept,
            comparison.samples_total,
            fmt_num(comparison.max_abs_z()),
            fmt_num(*threshold)
        ),
        QueryOutcome::Failed { kind, message } => format!("error {kind}: {message}"),
    }
}

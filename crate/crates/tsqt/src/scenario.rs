//! Scenario files: a JSON format describing states, observables, a timeline
//! and a list of queries, plus the built-in gedanken experiments.
//!
//! Indices in files are 1-based (outcome 2 is the second eigenket, matching
//! the usual x1..x3 naming); everything internal is 0-based. State and
//! eigenvector amplitude lists are normalized on load, so `[[1,0],[1,0]]` is
//! a perfectly good way to write an equal superposition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::protocol::{EventKind, Protocol, QueryMode, TimelineEvent};
use crate::qlinalg::{Amplitude, Ket};

/// Raw scenario file contents, mirroring the JSON field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub dimension: usize,
    pub states: BTreeMap<String, Vec<[f64; 2]>>,
    pub observables: BTreeMap<String, ObservableFile>,
    pub timeline: Vec<EventFile>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFile {
    pub t: f64,
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    /// 1-based kept outcome, for `block_filter` events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep: Option<usize>,
}

/// `(observable, time)` pair of a counterfactual query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredAt {
    pub observable: String,
    pub t: f64,
}

/// Gated/ungated selector as written in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Gated,
    Ungated,
}

impl From<ModeSpec> for QueryMode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::Gated => QueryMode::Gated,
            ModeSpec::Ungated => QueryMode::Ungated,
        }
    }
}

/// An expectation: either a value to check or an error kind that must occur.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expect<T> {
    Error { error: String },
    Value(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblExpect {
    /// Expected probability per outcome, in eigenket order.
    pub probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceExpect {
    /// Expected probability per outcome tuple, keyed like `"1,3,2"`
    /// (1-based); omitted tuples are expected to vanish.
    pub table: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualExpect {
    pub defined: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoolExpect {
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesExpect {
    pub rw: f64,
    pub cfw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadinessLevel {
    Ready,
    PartiallyReady,
    NotReady,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadinessExpect {
    pub level: ReadinessLevel,
    /// 1-based outcomes expected on paths, for `partially_ready`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloExpect {
    /// Largest tolerated |z| across outcome tuples.
    pub max_abs_z: f64,
}

/// One query as written in a scenario file. Stage, outcome and keep indices
/// are 1-based here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QuerySpec {
    Abl {
        observable: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<AblExpect>>,
    },
    Sequence {
        observables: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<SequenceExpect>>,
    },
    Counterfactual {
        measured: Vec<MeasuredAt>,
        target_stage: usize,
        target_outcome: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<ModeSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<CounterfactualExpect>>,
    },
    ElementOfReality {
        measured: Vec<MeasuredAt>,
        target_stage: usize,
        target_outcome: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<ModeSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<BoolExpect>>,
    },
    EnsembleRates {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<RatesExpect>>,
    },
    Readiness {
        observable: String,
        t: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<ReadinessExpect>>,
    },
    Montecarlo {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect<MonteCarloExpect>>,
    },
}

impl QuerySpec {
    /// The `type` tag as written in files.
    pub fn kind(&self) -> &'static str {
        match self {
            QuerySpec::Abl { .. } => "abl",
            QuerySpec::Sequence { .. } => "sequence",
            QuerySpec::Counterfactual { .. } => "counterfactual",
            QuerySpec::ElementOfReality { .. } => "element_of_reality",
            QuerySpec::EnsembleRates { .. } => "ensemble_rates",
            QuerySpec::Readiness { .. } => "readiness",
            QuerySpec::Montecarlo { .. } => "montecarlo",
        }
    }
}

/// A loaded, validated scenario: the raw file plus the protocol it builds.
#[derive(Debug, Clone)]
pub struct Scenario {
    file: ScenarioFile,
    protocol: Protocol,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

fn parse_error(path: impl Into<String>, message: impl ToString) -> Error {
    Error::ParseError {
        path: path.into(),
        message: message.to_string(),
    }
}

impl Scenario {
    /// Parse and validate a scenario from JSON text.
    pub fn load(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| parse_error("$", e))?;
        Self::from_file(file)
    }

    /// Validate an already-parsed scenario file.
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let dim = file.dimension;
        if dim == 0 {
            return Err(parse_error("dimension", "dimension must be at least 1"));
        }

        let mut states = BTreeMap::new();
        for (name, pairs) in &file.states {
            let path = format!("states.{name}");
            if pairs.len() != dim {
                return Err(parse_error(
                    &path,
                    format!("expected {dim} amplitudes, got {}", pairs.len()),
                ));
            }
            states.insert(name.clone(), ket_from_pairs(pairs, &path)?);
        }

        let mut observables = BTreeMap::new();
        for (name, obs) in &file.observables {
            let path = format!("observables.{name}");
            if obs.eigenvalues.len() != dim {
                return Err(parse_error(
                    format!("{path}.eigenvalues"),
                    format!("expected {dim} eigenvalues, got {}", obs.eigenvalues.len()),
                ));
            }
            if obs.eigenvectors.len() != dim {
                return Err(parse_error(
                    format!("{path}.eigenvectors"),
                    format!("expected {dim} eigenvectors, got {}", obs.eigenvectors.len()),
                ));
            }
            let mut kets = Vec::with_capacity(dim);
            for (k, pairs) in obs.eigenvectors.iter().enumerate() {
                let vec_path = format!("{path}.eigenvectors[{k}]");
                if pairs.len() != dim {
                    return Err(parse_error(
                        &vec_path,
                        format!("expected {dim} amplitudes, got {}", pairs.len()),
                    ));
                }
                kets.push(ket_from_pairs(pairs, &vec_path)?);
            }
            let observable = Observable::new(name, &obs.eigenvalues, &kets)
                .map_err(|e| parse_error(&path, e))?;
            observables.insert(name.clone(), observable);
        }

        let mut events = Vec::with_capacity(file.timeline.len());
        for (i, event) in file.timeline.iter().enumerate() {
            events.push(convert_event(event, dim, &format!("timeline[{i}]"))?);
        }
        // Protocol validation errors (ordering, nesting, unknown names) keep
        // their own kinds; they already carry precise context.
        let protocol = Protocol::build(dim, states, observables, events)?;

        for (i, query) in file.queries.iter().enumerate() {
            validate_query(query, &file, &format!("queries[{i}]"))?;
        }

        Ok(Self { file, protocol })
    }

    /// Serialize back to JSON. `load(save(s))` equals `s` structurally.
    pub fn save(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("scenario files always serialize")
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn dimension(&self) -> usize {
        self.file.dimension
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn queries(&self) -> &[QuerySpec] {
        &self.file.queries
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }
}

fn ket_from_pairs(pairs: &[[f64; 2]], path: &str) -> Result<Ket> {
    let amps: Vec<Amplitude> = pairs
        .iter()
        .map(|[re, im]| Amplitude::new(*re, *im))
        .collect();
    Ket::normalize(&amps).map_err(|e| parse_error(path, e))
}

fn convert_event(event: &EventFile, dim: usize, path: &str) -> Result<TimelineEvent> {
    let state = || {
        event
            .state
            .clone()
            .ok_or_else(|| parse_error(path, format!("{} requires a state", event.event)))
    };
    let observable = || {
        event.observable.clone().ok_or_else(|| {
            parse_error(path, format!("{} requires an observable", event.event))
        })
    };
    let kind = match event.event.as_str() {
        "prepare" => EventKind::Prepare { state: state()? },
        "align" => EventKind::Align {
            observable: observable()?,
        },
        "unalign" => EventKind::Unalign {
            observable: observable()?,
        },
        "measure" => EventKind::Measure {
            observable: observable()?,
        },
        "block_filter" => {
            let keep = event
                .keep
                .ok_or_else(|| parse_error(path, "block_filter requires a keep outcome"))?;
            EventKind::BlockFilter {
                observable: observable()?,
                keep: to_zero_based(keep, dim, &format!("{path}.keep"))?,
            }
        }
        "postselect" => EventKind::Postselect { state: state()? },
        other => {
            return Err(parse_error(
                path,
                format!("unknown event kind {other:?}"),
            ));
        }
    };
    Ok(TimelineEvent::new(event.t, kind))
}

/// Convert a 1-based file index into a 0-based internal one.
fn to_zero_based(index: usize, len: usize, path: &str) -> Result<usize> {
    if index == 0 {
        Err(parse_error(path, "indices in scenario files are 1-based"))
    } else if index > len {
        Err(parse_error(
            path,
            format!("index {index} out of range 1..={len}"),
        ))
    } else {
        Ok(index - 1)
    }
}

fn check_observable_exists(name: &str, file: &ScenarioFile, path: &str) -> Result<()> {
    if file.observables.contains_key(name) {
        Ok(())
    } else {
        Err(parse_error(path, format!("unknown observable {name:?}")))
    }
}

fn validate_query(query: &QuerySpec, file: &ScenarioFile, path: &str) -> Result<()> {
    let dim = file.dimension;
    match query {
        QuerySpec::Abl { observable, expect } => {
            check_observable_exists(observable, file, &format!("{path}.observable"))?;
            if let Some(Expect::Value(e)) = expect {
                if e.probabilities.len() != dim {
                    return Err(parse_error(
                        format!("{path}.expect.probabilities"),
                        format!("expected {dim} entries, got {}", e.probabilities.len()),
                    ));
                }
            }
        }
        QuerySpec::Sequence {
            observables,
            expect,
        } => {
            if observables.is_empty() {
                return Err(parse_error(
                    format!("{path}.observables"),
                    "a sequence needs at least one stage",
                ));
            }
            for name in observables {
                check_observable_exists(name, file, &format!("{path}.observables"))?;
            }
            if let Some(Expect::Value(e)) = expect {
                for key in e.table.keys() {
                    parse_tuple_key(key, observables.len(), dim, &format!("{path}.expect.table"))?;
                }
            }
        }
        QuerySpec::Counterfactual {
            measured,
            target_stage,
            target_outcome,
            ..
        }
        | QuerySpec::ElementOfReality {
            measured,
            target_stage,
            target_outcome,
            ..
        } => {
            if measured.is_empty() {
                return Err(parse_error(
                    format!("{path}.measured"),
                    "at least one measurement is required",
                ));
            }
            for m in measured {
                check_observable_exists(&m.observable, file, &format!("{path}.measured"))?;
            }
            to_zero_based(*target_stage, measured.len(), &format!("{path}.target_stage"))?;
            to_zero_based(*target_outcome, dim, &format!("{path}.target_outcome"))?;
        }
        QuerySpec::EnsembleRates { observable, .. } => {
            if let Some(name) = observable {
                check_observable_exists(name, file, &format!("{path}.observable"))?;
            }
        }
        QuerySpec::Readiness {
            observable, expect, ..
        } => {
            check_observable_exists(observable, file, &format!("{path}.observable"))?;
            if let Some(Expect::Value(e)) = expect {
                for &o in e.outcomes.iter().flatten() {
                    to_zero_based(o, dim, &format!("{path}.expect.outcomes"))?;
                }
            }
        }
        QuerySpec::Montecarlo { .. } => {}
    }
    Ok(())
}

/// Parse a `"1,3,2"`-style tuple key into 0-based outcome indices.
pub(crate) fn parse_tuple_key(
    key: &str,
    stages: usize,
    dim: usize,
    path: &str,
) -> Result<Vec<usize>> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    if parts.len() != stages {
        return Err(parse_error(
            path,
            format!("key {key:?} has {} indices, expected {stages}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            let index: usize = p
                .parse()
                .map_err(|_| parse_error(path, format!("bad index {p:?} in key {key:?}")))?;
            to_zero_based(index, dim, path)
        })
        .collect()
}

/// A built-in gedanken experiment shipped with the crate.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinScenario {
    pub name: &'static str,
    pub description: &'static str,
    source: &'static str,
}

impl BuiltinScenario {
    pub fn load(&self) -> Scenario {
        Scenario::load(self.source).expect("built-in scenarios are valid")
    }

    pub fn source(&self) -> &'static str {
        self.source
    }
}

/// The built-in scenarios, in stable order.
pub fn builtins() -> &'static [BuiltinScenario] {
    &[
        BuiltinScenario {
            name: "three_box_x",
            description: "three-box ensemble measured in the box basis: the middle box is certain",
            source: include_str!("../scenarios/three_box_x.json"),
        },
        BuiltinScenario {
            name: "three_box_q",
            description: "three-box ensemble measured in the rotated basis: certainty is gone",
            source: include_str!("../scenarios/three_box_q.json"),
        },
        BuiltinScenario {
            name: "three_box_xq",
            description: "nested alignment windows for both box observables and the gated queries they allow",
            source: include_str!("../scenarios/three_box_xq.json"),
        },
        BuiltinScenario {
            name: "three_box_xqx",
            description: "the box/rotated/box measurement sequence whose end stage repopulates the third box",
            source: include_str!("../scenarios/three_box_xqx.json"),
        },
        BuiltinScenario {
            name: "spin_dispersion",
            description: "qubit preselected along z and postselected along x: readiness windows never overlap",
            source: include_str!("../scenarios/spin_dispersion.json"),
        },
        BuiltinScenario {
            name: "empty_ensemble",
            description: "orthogonal selections: empty without an intermediate measurement, half-full with one",
            source: include_str!("../scenarios/empty_ensemble.json"),
        },
    ]
}

/// Look up a built-in scenario by name.
pub fn find_builtin(name: &str) -> Option<&'static BuiltinScenario> {
    builtins().iter().find(|b| b.name == name)
}

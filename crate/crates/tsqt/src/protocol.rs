//! Timelines of physical interactions and the measurement-ready gate for
//! counterfactual queries.
//!
//! A protocol is an ordered list of events between a preparation and a
//! postselection. `Align(C)` applies the interaction that maps `C`'s
//! eigenbasis onto distinct spatial paths; `Unalign(C)` applies its inverse,
//! restoring whatever alignment was in force before. While an observable's
//! eigenstates sit on distinct paths, any one of them could be certified by
//! null results at blocks on all the *other* paths, without coupling to the
//! state itself — that is the measurement-ready condition.
//!
//! Counterfactual queries about unperformed measurements are answered with
//! the closed-form ABL value, but in the default gated mode only at times
//! when the system was actually measurement-ready for each queried
//! observable; otherwise they are undefined. The ungated mode answers
//! unconditionally and exists for contrast.

use std::collections::{BTreeMap, BTreeSet};

use crate::abl::{self, EnsembleSpec};
use crate::error::{Error, Result};
use crate::observables::{Observable, RAY_TOL};
use crate::qlinalg::{Ket, Operator};

/// What happens at one instant of the timeline.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Prepare the named state. Always the first event.
    Prepare { state: String },
    /// Apply the alignment interaction for the named observable, replacing
    /// the alignment currently in force.
    Align { observable: String },
    /// Revert the most recent un-reverted align, which must name the same
    /// observable.
    Unalign { observable: String },
    /// A projective measurement of the first kind in the aligned frame.
    Measure { observable: String },
    /// Block every path except `keep` and retain only null results.
    BlockFilter { observable: String, keep: usize },
    /// Final measurement; runs are kept when it finds the named state.
    /// Always the last event.
    Postselect { state: String },
}

impl EventKind {
    fn name(&self) -> &str {
        match self {
            EventKind::Prepare { state } | EventKind::Postselect { state } => state,
            EventKind::Align { observable }
            | EventKind::Unalign { observable }
            | EventKind::Measure { observable }
            | EventKind::BlockFilter { observable, .. } => observable,
        }
    }
}

/// One timestamped event. Timestamps are dimensionless ordinals: only their
/// order matters.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineEvent {
    pub t: f64,
    pub kind: EventKind,
}

impl TimelineEvent {
    pub fn new(t: f64, kind: EventKind) -> Self {
        Self { t, kind }
    }
}

/// Measurement readiness of one observable at one instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Readiness {
    /// Every eigenstate sits on its own path: any outcome could be certified
    /// interaction-free.
    Ready,
    /// Only the listed outcomes sit on paths of their own.
    PartiallyReady(BTreeSet<usize>),
    NotReady,
}

impl Readiness {
    pub fn is_ready(&self) -> bool {
        matches!(self, Readiness::Ready)
    }
}

/// Which semantics a counterfactual query uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    /// Answers only while the system is measurement-ready for every queried
    /// observable; undefined otherwise.
    #[default]
    Gated,
    /// Legacy semantics: always answers with the ABL value, readiness
    /// ignored.
    Ungated,
}

/// A counterfactual question: had these measurements been performed at these
/// times, what is the probability of `target_outcome` at stage
/// `target_stage`?
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualQuery {
    /// `(observable name, time)` pairs, strictly increasing in time, strictly
    /// between preparation and postselection.
    pub measured: Vec<(String, f64)>,
    /// Which stage of `measured` the question is about (0-based).
    pub target_stage: usize,
    /// Which outcome of that stage (0-based eigenket index).
    pub target_outcome: usize,
    pub mode: QueryMode,
}

/// The answer to a counterfactual query.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Defined(f64),
    Undefined(String),
}

impl QueryResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            QueryResult::Defined(v) => Some(*v),
            QueryResult::Undefined(_) => None,
        }
    }
}

/// A validated timeline with its named states and observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    dim: usize,
    states: BTreeMap<String, Ket>,
    observables: BTreeMap<String, Observable>,
    events: Vec<TimelineEvent>,
}

impl Protocol {
    /// Validate ordering, prepare/postselect placement, align/unalign
    /// nesting, name resolution and dimensions.
    pub fn build(
        dim: usize,
        states: BTreeMap<String, Ket>,
        observables: BTreeMap<String, Observable>,
        events: Vec<TimelineEvent>,
    ) -> Result<Self> {
        for ket in states.values() {
            if ket.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: ket.dim(),
                });
            }
        }
        for obs in observables.values() {
            if obs.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: obs.dim(),
                });
            }
        }
        if !events.iter().any(|e| matches!(e.kind, EventKind::Prepare { .. })) {
            return Err(Error::MissingPrepare);
        }
        if !events.iter().any(|e| matches!(e.kind, EventKind::Postselect { .. })) {
            return Err(Error::MissingPostselect);
        }
        for pair in events.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::UnorderedTimeline {
                    detail: format!("t={} does not increase past t={}", pair[1].t, pair[0].t),
                });
            }
        }
        for (i, event) in events.iter().enumerate() {
            match event.kind {
                EventKind::Prepare { .. } if i != 0 => {
                    return Err(Error::UnorderedTimeline {
                        detail: format!("prepare at t={} is not the first event", event.t),
                    });
                }
                EventKind::Postselect { .. } if i != events.len() - 1 => {
                    return Err(Error::UnorderedTimeline {
                        detail: format!("postselect at t={} is not the last event", event.t),
                    });
                }
                _ => {}
            }
        }
        for event in &events {
            let name = event.kind.name();
            let known = match event.kind {
                EventKind::Prepare { .. } | EventKind::Postselect { .. } => {
                    states.contains_key(name)
                }
                _ => observables.contains_key(name),
            };
            if !known {
                return Err(Error::UnknownName {
                    name: name.to_string(),
                });
            }
            if let EventKind::BlockFilter { keep, .. } = event.kind {
                if keep >= dim {
                    return Err(Error::IndexOutOfRange {
                        what: "keep outcome",
                        index: keep,
                        len: dim,
                    });
                }
            }
        }
        // Well-nested align/unalign windows.
        let mut stack: Vec<&str> = Vec::new();
        for event in &events {
            match &event.kind {
                EventKind::Align { observable } => stack.push(observable),
                EventKind::Unalign { observable } => match stack.pop() {
                    Some(top) if top == observable => {}
                    Some(top) => {
                        return Err(Error::BadNesting {
                            detail: format!(
                                "unalign {observable} at t={} while {top} is innermost",
                                event.t
                            ),
                        });
                    }
                    None => {
                        return Err(Error::BadNesting {
                            detail: format!(
                                "unalign {observable} at t={} without a matching align",
                                event.t
                            ),
                        });
                    }
                },
                _ => {}
            }
        }
        Ok(Self {
            dim,
            states,
            observables,
            events,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn events(&self) -> &[TimelineEvent] {
        &self.events
    }

    pub fn state(&self, name: &str) -> Result<&Ket> {
        self.states.get(name).ok_or_else(|| Error::UnknownName {
            name: name.to_string(),
        })
    }

    pub fn observable(&self, name: &str) -> Result<&Observable> {
        self.observables
            .get(name)
            .ok_or_else(|| Error::UnknownName {
                name: name.to_string(),
            })
    }

    /// Time of the preparation event.
    pub fn t_start(&self) -> f64 {
        self.events.first().expect("validated").t
    }

    /// Time of the postselection event.
    pub fn t_end(&self) -> f64 {
        self.events.last().expect("validated").t
    }

    /// The prepared state.
    pub fn pre(&self) -> &Ket {
        let EventKind::Prepare { state } = &self.events.first().expect("validated").kind else {
            unreachable!("validated: first event is prepare");
        };
        &self.states[state]
    }

    /// The postselected state.
    pub fn post(&self) -> &Ket {
        let EventKind::Postselect { state } = &self.events.last().expect("validated").kind else {
            unreachable!("validated: last event is postselect");
        };
        &self.states[state]
    }

    /// The pre/post-selected ensemble this protocol realizes.
    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec::new(self.pre().clone(), self.post().clone()).expect("same dim by validation")
    }

    /// The `Measure` events in timeline order, with their observables.
    pub fn measurements(&self) -> Vec<(f64, &Observable)> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Measure { observable } => Some((e.t, &self.observables[observable])),
                _ => None,
            })
            .collect()
    }

    fn check_inside(&self, t: f64) -> Result<()> {
        let (lo, hi) = (self.t_start(), self.t_end());
        if t > lo && t < hi {
            Ok(())
        } else {
            Err(Error::OutOfRange { t, lo, hi })
        }
    }

    /// Walk the timeline up to `t`, returning the composed alignment and the
    /// stack of alignments it replaced. An align takes effect strictly after
    /// its instant, an unalign at its instant, so readiness windows are open
    /// intervals: at neither boundary is the observable ready.
    fn alignment_state_at(&self, t: f64) -> Result<(Operator, usize)> {
        self.check_inside(t)?;
        let mut current = Operator::identity(self.dim);
        let mut stack: Vec<Operator> = Vec::new();
        let in_force = |e: &&TimelineEvent| {
            e.t < t || (e.t == t && matches!(e.kind, EventKind::Unalign { .. }))
        };
        for event in self.events.iter().take_while(in_force) {
            match &event.kind {
                EventKind::Align { observable } => {
                    let next = self.observables[observable].alignment_unitary();
                    stack.push(std::mem::replace(&mut current, next));
                }
                EventKind::Unalign { .. } => {
                    current = stack.pop().expect("validated nesting");
                }
                _ => {}
            }
        }
        Ok((current, stack.len()))
    }

    /// The alignment `V(t)` in force at time `t`: the identity before the
    /// first align and after the last unalign, and piecewise constant between
    /// events. Each `Align(C)` at time `s` replaces the alignment by applying
    /// `V_C · V(s⁻)†`; each `Unalign` restores what the matching align
    /// replaced.
    pub fn alignment_at(&self, t: f64) -> Result<Operator> {
        Ok(self.alignment_state_at(t)?.0)
    }

    /// Measurement readiness of `c` at time `t`.
    ///
    /// While an alignment window is open, outcome `i` is ready when
    /// `V(t)|c_i⟩` lies on a computational path ray to within [`RAY_TOL`];
    /// the observable is `Ready` when all its outcomes do, on distinct paths.
    /// With no window open nothing is ready: no path-separating interaction
    /// has been applied, so no outcome could be certified interaction-free,
    /// whatever the coordinates of `c`'s eigenbasis happen to be.
    pub fn readiness(&self, c: &Observable, t: f64) -> Result<Readiness> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: c.dim(),
            });
        }
        let (alignment, open_windows) = self.alignment_state_at(t)?;
        if open_windows == 0 {
            return Ok(Readiness::NotReady);
        }
        let mut on_path = BTreeSet::new();
        let mut paths = BTreeSet::new();
        let mut distinct = true;
        for (i, ket) in c.eigenkets().iter().enumerate() {
            let image = alignment.apply(ket).expect("dims match");
            if let Some(path) = path_index(&image) {
                on_path.insert(i);
                distinct &= paths.insert(path);
            }
        }
        Ok(if on_path.len() == c.dim() && distinct {
            Readiness::Ready
        } else if on_path.is_empty() {
            Readiness::NotReady
        } else {
            Readiness::PartiallyReady(on_path)
        })
    }

    /// Answer a counterfactual query about unperformed measurements.
    ///
    /// Gated mode requires `readiness` to be `Ready` for every queried
    /// `(observable, time)`; the value itself is the ABL marginal for the
    /// target stage and outcome, identical to what ungated mode returns. The
    /// gate changes definedness, never the number.
    pub fn counterfactual(&self, query: &CounterfactualQuery) -> Result<QueryResult> {
        if query.measured.is_empty() {
            return Err(Error::EmptySequence);
        }
        for pair in query.measured.windows(2) {
            if pair[1].1 <= pair[0].1 {
                return Err(Error::UnorderedTimeline {
                    detail: format!(
                        "query time {} does not increase past {}",
                        pair[1].1, pair[0].1
                    ),
                });
            }
        }
        let mut observables = Vec::with_capacity(query.measured.len());
        for (name, t) in &query.measured {
            self.check_inside(*t)?;
            observables.push(self.observable(name)?);
        }
        if query.mode == QueryMode::Gated {
            for ((name, t), obs) in query.measured.iter().zip(&observables) {
                if !self.readiness(obs, *t)?.is_ready() {
                    return Ok(QueryResult::Undefined(format!(
                        "{name} not measurement-ready at t={t}"
                    )));
                }
            }
        }
        let dist = match abl::abl_sequence(&self.ensemble(), &observables) {
            Ok(dist) => dist,
            Err(Error::EmptyEnsemble) => {
                return Ok(QueryResult::Undefined("empty ensemble".to_string()));
            }
            Err(e) => return Err(e),
        };
        Ok(QueryResult::Defined(
            dist.marginal(query.target_stage, query.target_outcome)?,
        ))
    }

    /// Retain only null results at blocks on every path except `keep`.
    ///
    /// `state` is the logical state at time `t`. The null probability is
    /// computed solely from the blocked components — the blocking interaction
    /// has no matrix elements with the kept eigenstate, so the kept
    /// component's amplitude (in particular its phase) never enters. On a
    /// null result the state is the kept eigenket.
    pub fn block_filter(
        &self,
        state: &Ket,
        c: &Observable,
        keep: usize,
        t: f64,
    ) -> Result<(f64, Ket)> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: state.dim(),
            });
        }
        let kept_ket = c.eigenket(keep)?;
        let allowed = match self.readiness(c, t)? {
            Readiness::Ready => true,
            Readiness::PartiallyReady(on_path) => on_path.contains(&keep),
            Readiness::NotReady => false,
        };
        if !allowed {
            return Err(Error::NotMeasurementReady {
                label: c.label().to_string(),
                t,
            });
        }
        let mut blocked = 0.0;
        for (j, ket) in c.eigenkets().iter().enumerate() {
            if j != keep {
                blocked += ket.overlap_sqr(state)?;
            }
        }
        let null_probability = (1.0 - blocked).max(0.0);
        if null_probability < 1e-24 {
            return Err(Error::NullImpossible);
        }
        Ok((null_probability, kept_ket.clone()))
    }

    /// Apply every align/unalign interaction in order to `state` and return
    /// the fidelity `|⟨final|initial⟩|²` — 1 within 1e-10 for any well-nested
    /// protocol, since the interactions compose to the identity.
    ///
    /// Rejects protocols containing measurements or block filters: those are
    /// not unitary and not reversible.
    pub fn reversibility_check(&self, state: &Ket) -> Result<f64> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: state.dim(),
            });
        }
        for event in &self.events {
            match event.kind {
                EventKind::Measure { .. } => {
                    return Err(Error::ContainsIrreversibleEvent("measure"));
                }
                EventKind::BlockFilter { .. } => {
                    return Err(Error::ContainsIrreversibleEvent("block_filter"));
                }
                _ => {}
            }
        }
        let mut current = Operator::identity(self.dim);
        let mut stack: Vec<Operator> = Vec::new();
        let mut evolved = state.clone();
        for event in &self.events {
            let next = match &event.kind {
                EventKind::Align { observable } => {
                    let v = self.observables[observable].alignment_unitary();
                    stack.push(current.clone());
                    v
                }
                EventKind::Unalign { .. } => stack.pop().expect("validated nesting"),
                _ => continue,
            };
            // The physical interaction realizing the alignment change.
            let interaction = next.mul(&current.adjoint())?;
            evolved = interaction.apply(&evolved)?;
            current = next;
        }
        Ok(evolved.inner(state)?.norm_sqr())
    }
}

/// If `ket` lies on a computational path ray to within [`RAY_TOL`], the path
/// index.
fn path_index(ket: &Ket) -> Option<usize> {
    let (index, amp) = ket
        .amps()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))?;
    // |⟨path_k|ket⟩| = |ket_k| for unit kets.
    (amp.norm() >= 1.0 - RAY_TOL).then_some(index)
}

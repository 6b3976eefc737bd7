//! Closed-form conditional probabilities for pre- and post-selected
//! ensembles: the ABL rule.
//!
//! For an ensemble preselected in `|a⟩` and postselected in `|b⟩`, the
//! probability that an intermediate measurement of `C` yields outcome `c_i`
//! is
//!
//! ```text
//! Pr[c_i | a, C, b] = |⟨a|c_i⟩⟨c_i|b⟩|² / Σ_j |⟨a|c_j⟩⟨c_j|b⟩|²
//! ```
//!
//! The sequence form generalizes this to an ordered chain of measurements of
//! the first kind, multiplying the stage-transition amplitudes along each
//! outcome tuple and renormalizing, following the original sequential-
//! measurement analysis of Aharonov, Bergmann and Lebowitz (1964). Free
//! evolution between stages is the identity; the alignment interactions that
//! make these measurements physically possible live in the protocol module
//! and cancel out of every probability here by unitarity.

use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::qlinalg::Ket;

/// Denominators below this squared-modulus threshold mean the selected
/// ensemble is empty.
pub const EMPTY_ENSEMBLE_TOL: f64 = 1e-24;

/// Sequence distributions are stored densely over all `dim^N` outcome
/// tuples, so the stage count is capped at desk scale.
pub const MAX_STAGES: usize = 6;

/// A pre/post-selected ensemble: prepared in `pre` and kept only when the
/// final measurement finds `post`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pre: Ket,
    post: Ket,
}

impl EnsembleSpec {
    pub fn new(pre: Ket, post: Ket) -> Result<Self> {
        if pre.dim() != post.dim() {
            return Err(Error::DimensionMismatch {
                left: pre.dim(),
                right: post.dim(),
            });
        }
        Ok(Self { pre, post })
    }

    pub fn pre(&self) -> &Ket {
        &self.pre
    }

    pub fn post(&self) -> &Ket {
        &self.post
    }

    pub fn dim(&self) -> usize {
        self.pre.dim()
    }
}

/// A normalized joint distribution over outcome tuples of an ordered list of
/// measurement stages. Entries sum to 1 within 1e-12 and are indexed by
/// per-stage outcome indices (eigenket order).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    labels: Vec<String>,
    dim: usize,
    // dense, row-major over tuples: stage 0 varies slowest
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    fn new(labels: Vec<String>, dim: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), dim.pow(labels.len() as u32));
        Self { labels, dim, probs }
    }

    /// Observable labels, one per measurement stage.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn stages(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn flat_index(&self, outcomes: &[usize]) -> Result<usize> {
        if outcomes.len() != self.stages() {
            return Err(Error::IndexOutOfRange {
                what: "stage tuple",
                index: outcomes.len(),
                len: self.stages(),
            });
        }
        let mut idx = 0;
        for &o in outcomes {
            if o >= self.dim {
                return Err(Error::IndexOutOfRange {
                    what: "outcome",
                    index: o,
                    len: self.dim,
                });
            }
            idx = idx * self.dim + o;
        }
        Ok(idx)
    }

    /// Decode a flat table index into its per-stage outcome tuple.
    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.stages()];
        for slot in tuple.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
        tuple
    }

    /// Probability of one full outcome tuple.
    pub fn probability(&self, outcomes: &[usize]) -> Result<f64> {
        Ok(self.probs[self.flat_index(outcomes)?])
    }

    /// Marginal probability that stage `stage` yields `outcome`, summed over
    /// all other stages.
    pub fn marginal(&self, stage: usize, outcome: usize) -> Result<f64> {
        if stage >= self.stages() {
            return Err(Error::IndexOutOfRange {
                what: "stage",
                index: stage,
                len: self.stages(),
            });
        }
        if outcome >= self.dim {
            return Err(Error::IndexOutOfRange {
                what: "outcome",
                index: outcome,
                len: self.dim,
            });
        }
        let mut total = 0.0;
        for (flat, p) in self.probs.iter().enumerate() {
            if self.tuple_of(flat)[stage] == outcome {
                total += p;
            }
        }
        Ok(total)
    }

    /// Iterate `(tuple, probability)` over the full dense table.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(flat, &p)| (self.tuple_of(flat), p))
    }

    /// For single-stage distributions, the probability vector by outcome.
    pub fn single_stage(&self) -> Option<&[f64]> {
        (self.stages() == 1).then_some(&self.probs[..])
    }

    /// Sum of the whole table; 1 within 1e-12 by construction.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// The ABL probability distribution for a single intermediate measurement.
///
/// Fails with `EmptyEnsemble` when `Σ_j |⟨a|c_j⟩⟨c_j|b⟩|²` vanishes: no run
/// survives both selections once `C` is measured in between.
pub fn abl_single(ensemble: &EnsembleSpec, c: &Observable) -> Result<OutcomeDistribution> {
    abl_sequence(ensemble, &[c])
}

/// The ABL distribution over outcome tuples of an ordered sequence of
/// intermediate measurements (each of the first kind).
///
/// The weight of tuple `(i_1, …, i_N)` is
/// `|⟨b|c^N_{i_N}⟩ ⟨c^N_{i_N}|c^{N−1}_{i_{N−1}}⟩ ⋯ ⟨c^1_{i_1}|a⟩|²`,
/// normalized over all tuples.
pub fn abl_sequence(ensemble: &EnsembleSpec, cs: &[&Observable]) -> Result<OutcomeDistribution> {
    if cs.is_empty() {
        return Err(Error::EmptySequence);
    }
    if cs.len() > MAX_STAGES {
        return Err(Error::TooManyStages {
            stages: cs.len(),
            max: MAX_STAGES,
        });
    }
    let dim = ensemble.dim();
    for c in cs {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: c.dim(),
            });
        }
    }
    let stages = cs.len();

    // Per-stage squared overlaps; the tuple weight factorizes across them.
    let start: Vec<f64> = cs[0]
        .eigenkets()
        .iter()
        .map(|k| overlap2(k, ensemble.pre()))
        .collect();
    let end: Vec<f64> = cs[stages - 1]
        .eigenkets()
        .iter()
        .map(|k| overlap2(ensemble.post(), k))
        .collect();
    let mut transitions: Vec<Vec<f64>> = Vec::with_capacity(stages.saturating_sub(1));
    for w in cs.windows(2) {
        let (prev, next) = (w[0], w[1]);
        let mut table = vec![0.0; dim * dim];
        for (i, ki) in prev.eigenkets().iter().enumerate() {
            for (j, kj) in next.eigenkets().iter().enumerate() {
                table[i * dim + j] = overlap2(kj, ki);
            }
        }
        transitions.push(table);
    }

    let mut probs = vec![0.0; dim.pow(stages as u32)];
    let mut tuple = vec![0usize; stages];
    for (flat, slot) in probs.iter_mut().enumerate() {
        decode(flat, dim, &mut tuple);
        let mut w = start[tuple[0]] * end[tuple[stages - 1]];
        for (k, table) in transitions.iter().enumerate() {
            w *= table[tuple[k] * dim + tuple[k + 1]];
        }
        *slot = w;
    }

    let total: f64 = probs.iter().sum();
    if total < EMPTY_ENSEMBLE_TOL {
        return Err(Error::EmptyEnsemble);
    }
    for p in &mut probs {
        *p /= total;
    }
    let labels = cs.iter().map(|c| c.label().to_string()).collect();
    Ok(OutcomeDistribution::new(labels, dim, probs))
}

fn overlap2(u: &Ket, v: &Ket) -> f64 {
    u.inner(v).expect("dims checked by caller").norm_sqr()
}

fn decode(mut flat: usize, dim: usize, tuple: &mut [usize]) {
    for slot in tuple.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// True iff the marginal ABL probability of `outcome` at `stage` is unity to
/// within `tol`.
///
/// This evaluates only the probability clause of the element-of-reality
/// predicate; the measurement-ready clause is the protocol module's job.
pub fn element_of_reality(
    ensemble: &EnsembleSpec,
    cs: &[&Observable],
    stage: usize,
    outcome: usize,
    tol: f64,
) -> Result<bool> {
    let dist = abl_sequence(ensemble, cs)?;
    Ok(dist.marginal(stage, outcome)? >= 1.0 - tol)
}

/// Relative sizes of the selected ensembles with and without the
/// intermediate measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleRates {
    /// Fraction of prepared runs that pass postselection when nothing is
    /// measured in between: `|⟨b|a⟩|²`.
    pub rw: f64,
    /// Fraction that pass when `C` is measured in between:
    /// `Σ_j |⟨a|c_j⟩⟨c_j|b⟩|²` (the ABL denominator).
    pub cfw: f64,
}

/// Selection rates for the undisturbed ensemble versus the one where `c` is
/// actually measured. With `c = None` both rates coincide. The two are
/// conceptually different and usually also differ numerically; either may
/// legitimately be zero.
pub fn ensemble_rates(ensemble: &EnsembleSpec, c: Option<&Observable>) -> Result<EnsembleRates> {
    let rw = ensemble.post().overlap_sqr(ensemble.pre())?;
    let cfw = match c {
        None => rw,
        Some(c) => {
            if c.dim() != ensemble.dim() {
                return Err(Error::DimensionMismatch {
                    left: ensemble.dim(),
                    right: c.dim(),
                });
            }
            c.eigenkets()
                .iter()
                .map(|k| overlap2(k, ensemble.pre()) * overlap2(ensemble.post(), k))
                .sum()
        }
    };
    Ok(EnsembleRates { rw, cfw })
}

//! Monte Carlo trajectory oracle.
//!
//! Simulates individual runs of a protocol with Born-rule sampling and
//! first-kind collapse, postselects by rejection, and estimates conditional
//! frequencies. The sampling path shares nothing with the closed-form ABL
//! code, so agreement between the two is a real cross-check.
//!
//! Randomness is seed-addressed: run `i` of a batch draws from an
//! independent substream derived from `(seed, i)`, so results are
//! deterministic and independent of how runs might be distributed across
//! workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abl;
use crate::error::{Error, Result};
use crate::protocol::{EventKind, Protocol};
use crate::qlinalg::{Ket, Operator};

/// Everything observed in one sampled run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// `(event time, observable label, outcome index)` per measurement, in
    /// timeline order.
    pub outcomes: Vec<(f64, String, usize)>,
    /// False when some block filter absorbed the system.
    pub null_filters_passed: bool,
    /// True when the final measurement found the postselection state.
    pub postselected: bool,
}

impl TrajectoryRecord {
    /// A run contributes to conditional statistics only when it passed every
    /// block filter and the postselection.
    pub fn kept(&self) -> bool {
        self.null_filters_passed && self.postselected
    }
}

/// A conditional frequency estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub frequency: f64,
    /// `sqrt(f(1−f)/samples_kept)`.
    pub standard_error: f64,
    pub samples_kept: u64,
    pub samples_total: u64,
}

/// The random stream for run `run_index` of a batch seeded with `seed`.
pub fn run_stream(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}

/// Simulate one run of the protocol, drawing from `rng`.
///
/// The state evolves in the lab frame: align/unalign events apply their
/// interactions, and measurements, block filters and the postselection are
/// evaluated against the aligned images of their eigenkets. Collapse is of
/// the first kind. Deterministic given the stream.
pub fn run_once<R: Rng>(protocol: &Protocol, rng: &mut R) -> TrajectoryRecord {
    let dim = protocol.dim();
    let mut current = Operator::identity(dim);
    let mut stack: Vec<Operator> = Vec::new();
    let mut state = protocol.pre().clone();
    let mut outcomes = Vec::new();
    let mut null_filters_passed = true;
    let mut postselected = false;

    for event in protocol.events() {
        match &event.kind {
            EventKind::Prepare { state: name } => {
                state = protocol.state(name).expect("validated").clone();
            }
            EventKind::Align { observable } => {
                let next = protocol
                    .observable(observable)
                    .expect("validated")
                    .alignment_unitary();
                let interaction = next.mul(&current.adjoint()).expect("same dim");
                state = interaction.apply(&state).expect("same dim");
                stack.push(std::mem::replace(&mut current, next));
            }
            EventKind::Unalign { .. } => {
                let next = stack.pop().expect("validated nesting");
                let interaction = next.mul(&current.adjoint()).expect("same dim");
                state = interaction.apply(&state).expect("same dim");
                current = next;
            }
            EventKind::Measure { observable } => {
                let obs = protocol.observable(observable).expect("validated");
                let aligned: Vec<Ket> = obs
                    .eigenkets()
                    .iter()
                    .map(|k| current.apply(k).expect("same dim"))
                    .collect();
                let probs: Vec<f64> = aligned
                    .iter()
                    .map(|k| k.overlap_sqr(&state).expect("same dim"))
                    .collect();
                let outcome = sample(&probs, rng.random::<f64>());
                state = aligned[outcome].clone();
                outcomes.push((event.t, obs.label().to_string(), outcome));
            }
            EventKind::BlockFilter { observable, keep } => {
                let obs = protocol.observable(observable).expect("validated");
                let mut blocked = 0.0;
                for (j, ket) in obs.eigenkets().iter().enumerate() {
                    if j != *keep {
                        let aligned = current.apply(ket).expect("same dim");
                        blocked += aligned.overlap_sqr(&state).expect("same dim");
                    }
                }
                let null_probability = (1.0 - blocked).max(0.0);
                if rng.random::<f64>() < null_probability {
                    let kept = obs.eigenket(*keep).expect("validated");
                    state = current.apply(kept).expect("same dim");
                } else {
                    // Absorbed at a block; the run is over.
                    null_filters_passed = false;
                    break;
                }
            }
            EventKind::Postselect { state: name } => {
                let target = protocol.state(name).expect("validated");
                let aligned = current.apply(target).expect("same dim");
                let p = aligned.overlap_sqr(&state).expect("same dim");
                postselected = rng.random::<f64>() < p;
            }
        }
    }

    TrajectoryRecord {
        outcomes,
        null_filters_passed,
        postselected,
    }
}

/// Draw an index from an (approximately normalized) probability vector.
fn sample(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
    }
    // Rounding left a sliver at the top; assign it to the last live outcome.
    last_nonzero
}

/// Estimate the conditional frequency of `outcome` at measurement stage
/// `stage` among runs that pass every filter and the postselection.
pub fn estimate(
    protocol: &Protocol,
    stage: usize,
    outcome: usize,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    let stages = protocol.measurements().len();
    if stage >= stages {
        return Err(Error::IndexOutOfRange {
            what: "stage",
            index: stage,
            len: stages,
        });
    }
    if outcome >= protocol.dim() {
        return Err(Error::IndexOutOfRange {
            what: "outcome",
            index: outcome,
            len: protocol.dim(),
        });
    }
    let mut kept = 0u64;
    let mut hits = 0u64;
    for run in 0..samples {
        let record = run_once(protocol, &mut run_stream(seed, run));
        if record.kept() {
            kept += 1;
            if record.outcomes[stage].2 == outcome {
                hits += 1;
            }
        }
    }
    if kept == 0 {
        return Err(Error::NoSamplesKept);
    }
    let frequency = hits as f64 / kept as f64;
    Ok(Estimate {
        frequency,
        standard_error: (frequency * (1.0 - frequency) / kept as f64).sqrt(),
        samples_kept: kept,
        samples_total: samples,
    })
}

/// One outcome tuple's closed form versus its sampled frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleComparison {
    pub outcomes: Vec<usize>,
    pub closed_form: f64,
    pub frequency: f64,
    /// `(frequency − closed_form) / sqrt(closed_form(1−closed_form)/kept)`.
    /// Zero when the closed form is degenerate (0 or 1) and matched exactly;
    /// infinite when degenerate and missed.
    pub z: f64,
}

/// Closed form versus Monte Carlo for every outcome tuple of a protocol's
/// measurement sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct AblComparison {
    pub labels: Vec<String>,
    pub samples_total: u64,
    pub samples_kept: u64,
    pub tuples: Vec<TupleComparison>,
}

impl AblComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.tuples.iter().map(|t| t.z.abs()).fold(0.0, f64::max)
    }

    /// All tuples within `threshold` standard errors of their closed form.
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_abs_z() <= threshold
    }

    /// Fraction of runs that survived filters and postselection.
    pub fn acceptance_rate(&self) -> f64 {
        self.samples_kept as f64 / self.samples_total as f64
    }
}

/// The z-score of an observed conditional frequency against a closed-form
/// probability, under the closed form's binomial error.
pub fn z_score(closed_form: f64, frequency: f64, kept: u64) -> f64 {
    let variance = closed_form * (1.0 - closed_form) / kept as f64;
    if variance > 0.0 {
        (frequency - closed_form) / variance.sqrt()
    } else if frequency == closed_form {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Run the protocol `samples` times and compare the conditional frequency of
/// every measurement-outcome tuple against the closed-form ABL value.
pub fn compare_to_abl(protocol: &Protocol, samples: u64, seed: u64) -> Result<AblComparison> {
    let measured: Vec<_> = protocol.measurements().iter().map(|(_, o)| *o).collect();
    let closed = abl::abl_sequence(&protocol.ensemble(), &measured)?;

    let dim = protocol.dim();
    let stages = measured.len();
    let mut counts = vec![0u64; dim.pow(stages as u32)];
    let mut kept = 0u64;
    for run in 0..samples {
        let record = run_once(protocol, &mut run_stream(seed, run));
        if record.kept() {
            kept += 1;
            let mut flat = 0;
            for (_, _, outcome) in &record.outcomes {
                flat = flat * dim + outcome;
            }
            counts[flat] += 1;
        }
    }
    if kept == 0 {
        return Err(Error::NoSamplesKept);
    }

    let tuples = counts
        .iter()
        .enumerate()
        .map(|(flat, &count)| {
            let outcomes = closed.tuple_of(flat);
            let closed_form = closed.probability(&outcomes).expect("in range");
            let frequency = count as f64 / kept as f64;
            TupleComparison {
                outcomes,
                closed_form,
                frequency,
                z: z_score(closed_form, frequency, kept),
            }
        })
        .collect();

    Ok(AblComparison {
        labels: closed.labels().to_vec(),
        samples_total: samples,
        samples_kept: kept,
        tuples,
    })
}

//! Error types shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two objects that must live in the same Hilbert space do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Attempted to normalize a (near-)zero amplitude vector.
    #[error("cannot normalize a vector with norm below {0:e}")]
    ZeroVector(f64),

    /// An amplitude was NaN or infinite.
    #[error("non-finite amplitude in {context}")]
    NonFinite { context: &'static str },

    /// Eigenkets handed to an observable are not an orthonormal set.
    #[error("observable {label}: eigenkets {i} and {j} are not orthonormal (|overlap - expected| = {deviation:e})")]
    NotOrthonormal {
        label: String,
        i: usize,
        j: usize,
        deviation: f64,
    },

    /// Two eigenvalues of a would-be observable coincide.
    #[error("observable {label}: eigenvalues {i} and {j} are degenerate ({a} vs {b})")]
    DegenerateSpectrum {
        label: String,
        i: usize,
        j: usize,
        a: f64,
        b: f64,
    },

    /// The pre/post-selected ensemble contains no runs for this measurement.
    #[error("empty ensemble: the pre/post-selected ensemble has vanishing weight")]
    EmptyEnsemble,

    /// A stage or outcome index fell outside its range.
    #[error("index {index} out of range for {what} of size {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// A measurement sequence was empty where at least one stage is required.
    #[error("measurement sequence is empty")]
    EmptySequence,

    /// A measurement sequence exceeded the supported number of stages.
    #[error("sequence of {stages} stages exceeds the supported maximum of {max}")]
    TooManyStages { stages: usize, max: usize },

    /// Timeline events are not in strictly increasing time order, or the
    /// prepare/postselect events are misplaced or duplicated.
    #[error("unordered timeline: {detail}")]
    UnorderedTimeline { detail: String },

    /// The timeline has no prepare event.
    #[error("timeline has no prepare event")]
    MissingPrepare,

    /// The timeline has no postselect event.
    #[error("timeline has no postselect event")]
    MissingPostselect,

    /// An unalign event does not match the most recent un-reverted align.
    #[error("bad nesting: {detail}")]
    BadNesting { detail: String },

    /// An event or query referenced a state or observable that was never defined.
    #[error("unknown name: {name}")]
    UnknownName { name: String },

    /// A queried time lies outside the open interval between preparation and
    /// postselection.
    #[error("time {t} outside the open interval ({lo}, {hi})")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// A blocking filter was requested while the observable is not
    /// measurement-ready for the kept outcome.
    #[error("{label} not measurement-ready at t={t}")]
    NotMeasurementReady { label: String, t: f64 },

    /// A null result is impossible: the blocked components carry all the weight.
    #[error("null result impossible: blocked components carry all probability")]
    NullImpossible,

    /// Reversibility can only be checked on protocols free of measurements
    /// and blocking filters.
    #[error("protocol contains an irreversible event ({0})")]
    ContainsIrreversibleEvent(&'static str),

    /// Postselection never succeeded, so no conditional frequency exists.
    #[error("no samples survived postselection")]
    NoSamplesKept,

    /// A scenario file failed to parse or validate.
    #[error("parse error at {path}: {message}")]
    ParseError { path: String, message: String },
}

impl Error {
    /// Stable machine-readable kind, used by scenario expectations and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroVector(_) => "zero_vector",
            Error::NonFinite { .. } => "non_finite",
            Error::NotOrthonormal { .. } => "not_orthonormal",
            Error::DegenerateSpectrum { .. } => "degenerate_spectrum",
            Error::EmptyEnsemble => "empty_ensemble",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EmptySequence => "empty_sequence",
            Error::TooManyStages { .. } => "too_many_stages",
            Error::UnorderedTimeline { .. } => "unordered_timeline",
            Error::MissingPrepare => "missing_prepare",
            Error::MissingPostselect => "missing_postselect",
            Error::BadNesting { .. } => "bad_nesting",
            Error::UnknownName { .. } => "unknown_name",
            Error::OutOfRange { .. } => "out_of_range",
            Error::NotMeasurementReady { .. } => "not_measurement_ready",
            Error::NullImpossible => "null_impossible",
            Error::ContainsIrreversibleEvent(_) => "contains_irreversible_event",
            Error::NoSamplesKept => "no_samples_kept",
            Error::ParseError { .. } => "parse_error",
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

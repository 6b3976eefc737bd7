//! Time-symmetric quantum mechanics on small Hilbert spaces.
//!
//! This crate computes conditional probabilities for quantum ensembles that
//! are both preselected (prepared in `|a⟩`) and postselected (kept only when
//! a final measurement finds `|b⟩`):
//!
//! - closed-form ABL probabilities for one intermediate measurement and for
//!   ordered sequences of them ([`abl`]);
//! - timelines of alignment interactions, the measurement-ready condition
//!   they create, and the gate that makes counterfactual queries answerable
//!   only while that condition holds ([`protocol`]);
//! - a Monte Carlo trajectory oracle that re-derives every closed-form
//!   number by sampling individual runs ([`trajectory`]);
//! - a JSON scenario format, built-in gedanken experiments (the three-box
//!   problem among them), and report generation behind the `tsqt` command
//!   line ([`scenario`], [`report`]).
//!
//! ```
//! use tsqt::abl::{abl_single, EnsembleSpec};
//! use tsqt::observables::Observable;
//! use tsqt::qlinalg::Ket;
//!
//! // The three-box ensemble, asked about the boxes themselves: certainty.
//! let ensemble = EnsembleSpec::new(
//!     Ket::normalize_real(&[1.0, 1.0, 0.0])?,
//!     Ket::normalize_real(&[0.0, 1.0, 1.0])?,
//! )?;
//! let boxes = Observable::new(
//!     "X",
//!     &[1.0, 2.0, 3.0],
//!     &[Ket::basis(3, 0), Ket::basis(3, 1), Ket::basis(3, 2)],
//! )?;
//! let dist = abl_single(&ensemble, &boxes)?;
//! assert!((dist.marginal(0, 1)? - 1.0).abs() < 1e-12);
//! # Ok::<(), tsqt::Error>(())
//! ```
//!
//! See the book under `book/` for a guided tour.

pub mod abl;
pub mod error;
pub mod observables;
pub mod protocol;
pub mod qlinalg;
pub mod report;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};
pub use qlinalg::{Amplitude, Ket, Operator};

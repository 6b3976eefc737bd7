//! Observables with non-degenerate spectra, given as an ordered eigenbasis.
//!
//! Outcomes are identified by eigenket index throughout the crate; the
//! eigenvalues are carried as labels only, since every probability in sight
//! depends only on the eigenprojectors. Degenerate spectra are rejected.

use crate::error::{Error, Result};
use crate::qlinalg::{Amplitude, Ket, Operator};

/// Pairwise eigenket overlaps may deviate from orthonormality by this much.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Eigenvalues closer than this are considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Ray-coincidence tolerance for shared eigenrays and readiness checks,
/// looser than the algebra tolerance to absorb rounding in composed
/// constructions.
pub const RAY_TOL: f64 = 1e-9;

/// An observable with a non-degenerate spectrum: ordered eigenvalues and an
/// orthonormal eigenbasis. The eigenket order defines outcome indexing
/// everywhere downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    label: String,
    eigenvalues: Vec<f64>,
    eigenkets: Vec<Ket>,
}

impl Observable {
    /// Validate and build an observable.
    ///
    /// Fails with `NotOrthonormal` when any eigenket norm or pairwise overlap
    /// is off by more than [`ORTHONORMAL_TOL`], and with `DegenerateSpectrum`
    /// when two eigenvalues are within [`DEGENERACY_TOL`] of each other.
    pub fn new(label: &str, eigenvalues: &[f64], eigenkets: &[Ket]) -> Result<Self> {
        if eigenvalues.len() != eigenkets.len() {
            return Err(Error::DimensionMismatch {
                left: eigenvalues.len(),
                right: eigenkets.len(),
            });
        }
        let dim = eigenkets.len();
        for (i, k) in eigenkets.iter().enumerate() {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: k.dim(),
                });
            }
            let norm_dev = (k.norm_sqr() - 1.0).abs();
            if norm_dev > ORTHONORMAL_TOL {
                return Err(Error::NotOrthonormal {
                    label: label.to_string(),
                    i,
                    j: i,
                    deviation: norm_dev,
                });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let overlap = eigenkets[i].inner(&eigenkets[j])?.norm();
                if overlap > ORTHONORMAL_TOL {
                    return Err(Error::NotOrthonormal {
                        label: label.to_string(),
                        i,
                        j,
                        deviation: overlap,
                    });
                }
                if (eigenvalues[i] - eigenvalues[j]).abs() < DEGENERACY_TOL {
                    return Err(Error::DegenerateSpectrum {
                        label: label.to_string(),
                        i,
                        j,
                        a: eigenvalues[i],
                        b: eigenvalues[j],
                    });
                }
            }
        }
        Ok(Self {
            label: label.to_string(),
            eigenvalues: eigenvalues.to_vec(),
            eigenkets: eigenkets.to_vec(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.eigenkets.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenkets(&self) -> &[Ket] {
        &self.eigenkets
    }

    pub fn eigenket(&self, outcome: usize) -> Result<&Ket> {
        self.eigenkets.get(outcome).ok_or(Error::IndexOutOfRange {
            what: "outcome",
            index: outcome,
            len: self.dim(),
        })
    }

    /// The dense matrix `Σ_k λ_k |c_k⟩⟨c_k|` of this observable.
    pub fn matrix(&self) -> Operator {
        let d = self.dim();
        let mut rows = vec![vec![Amplitude::new(0.0, 0.0); d]; d];
        for (k, ket) in self.eigenkets.iter().enumerate() {
            let lambda = self.eigenvalues[k];
            for (r, row) in rows.iter_mut().enumerate() {
                for (c, entry) in row.iter_mut().enumerate() {
                    *entry += lambda * ket.amps()[r] * ket.amps()[c].conj();
                }
            }
        }
        Operator::from_rows(&rows).expect("square by construction")
    }

    /// True iff the commutator of the two spectral matrices vanishes to
    /// within `tol` in max-entry norm.
    pub fn commutes_with(&self, other: &Observable, tol: f64) -> Result<bool> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let c = self.matrix();
        let d = other.matrix();
        let commutator = c.mul(&d)?.sub(&d.mul(&c)?)?;
        Ok(commutator.max_entry_norm() <= tol)
    }

    /// All eigenray coincidences between two observables: pairs `(i, j)` with
    /// `|⟨c_i|d_j⟩| ≥ 1 − tol`. Each index appears in at most one pair.
    pub fn shared_eigenrays(&self, other: &Observable, tol: f64) -> Result<EigenrayMatch> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let mut pairs = Vec::new();
        let mut used = vec![false; other.dim()];
        for (i, ci) in self.eigenkets.iter().enumerate() {
            for (j, dj) in other.eigenkets.iter().enumerate() {
                if !used[j] && ci.inner(dj)?.norm() >= 1.0 - tol {
                    pairs.push((i, j));
                    used[j] = true;
                    break;
                }
            }
        }
        Ok(EigenrayMatch { pairs })
    }

    /// The alignment interaction `V_c = Σ_k |path_k⟩⟨c_k|` that maps this
    /// observable's eigenbasis onto the computational path basis. Always
    /// unitary; `V_c |c_k⟩ = |path_k⟩` exactly (up to phase).
    pub fn alignment_unitary(&self) -> Operator {
        let d = self.dim();
        let rows: Vec<Vec<Amplitude>> = self
            .eigenkets
            .iter()
            .map(|k| k.amps().iter().map(|a| a.conj()).collect())
            .collect();
        debug_assert_eq!(rows.len(), d);
        Operator::from_rows(&rows).expect("square by construction")
    }
}

/// Eigenray coincidences between two observables, by outcome index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenrayMatch {
    pairs: Vec<(usize, usize)>,
}

impl EigenrayMatch {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }
}

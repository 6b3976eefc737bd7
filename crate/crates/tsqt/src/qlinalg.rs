//! Dense complex linear algebra for kets and operators on small Hilbert
//! spaces (dimensions 2 through ~16).
//!
//! Everything here is plain double-precision dense storage: the spaces are
//! tiny, so exactness and transparency beat cleverness. Values are immutable
//! after construction and all operations are pure.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex probability amplitude.
pub type Amplitude = Complex64;

/// Norm deviation tolerated on kets produced by unitary evolution.
pub const NORM_TOL: f64 = 1e-10;

/// Below this norm a raw vector is considered zero and cannot be normalized.
pub const ZERO_NORM: f64 = 1e-12;

fn check_finite(amps: &[Amplitude], context: &'static str) -> Result<()> {
    if amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

/// A pure state: a complex amplitude vector, unit-norm when built via
/// [`Ket::normalize`]. Unitary application preserves the norm to within
/// [`NORM_TOL`]; global phase is never stripped — ray equality is
/// `|⟨u|v⟩| = 1` within tolerance, decided by callers.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: Vec<Amplitude>,
}

impl Ket {
    /// Normalize a raw amplitude vector into a unit ket.
    ///
    /// Returns `ZeroVector` if the input norm is below [`ZERO_NORM`]. Inputs
    /// that are already unit-norm to ~1e-14 are returned bit-unchanged, so
    /// normalization is idempotent.
    pub fn normalize(amps: &[Amplitude]) -> Result<Self> {
        check_finite(amps, "ket")?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < ZERO_NORM {
            return Err(Error::ZeroVector(ZERO_NORM));
        }
        let amps = if (norm - 1.0).abs() < 1e-14 {
            amps.to_vec()
        } else {
            amps.iter().map(|a| a / norm).collect()
        };
        Ok(Self { amps })
    }

    /// Normalize a vector of real amplitudes.
    pub fn normalize_real(amps: &[f64]) -> Result<Self> {
        let amps: Vec<Amplitude> = amps.iter().map(|&re| Amplitude::new(re, 0.0)).collect();
        Self::normalize(&amps)
    }

    /// The computational ("path") basis ket `|k⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
        amps[index] = Amplitude::new(1.0, 0.0);
        Self { amps }
    }

    /// Wrap amplitudes without normalizing. Internal: used where linearity
    /// must be preserved exactly (e.g. operator application).
    pub(crate) fn from_raw(amps: Vec<Amplitude>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    /// Squared Euclidean norm `Σ|amps_k|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product `⟨self|other⟩`, with `self` conjugated.
    ///
    /// Conjugate-symmetric: `u.inner(v) == v.inner(u).conj()`.
    pub fn inner(&self, other: &Ket) -> Result<Amplitude> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`, the Born weight of `other` on `self`.
    pub fn overlap_sqr(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// A dense square operator on the same small Hilbert space as [`Ket`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    // row-major, entries[r * dim + c]
    entries: Vec<Amplitude>,
}

impl Operator {
    /// Build from rows; every row must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<Amplitude>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        check_finite(&entries, "operator")?;
        Ok(Self { dim, entries })
    }

    /// The identity on a `dim`-dimensional space.
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = Amplitude::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    /// Conjugate transpose. An exact involution: `u.adjoint().adjoint() == u`
    /// entrywise.
    pub fn adjoint(&self) -> Operator {
        let mut entries = vec![Amplitude::new(0.0, 0.0); self.dim * self.dim];
        for r in 0..self.dim {
            for c in 0..self.dim {
                entries[c * self.dim + r] = self.entry(r, c).conj();
            }
        }
        Operator {
            dim: self.dim,
            entries,
        }
    }

    /// Matrix-vector product. Preserves the norm to within [`NORM_TOL`] when
    /// `self` is unitary; for non-unitary operators the result is the raw
    /// linear image, not re-normalized.
    pub fn apply(&self, v: &Ket) -> Result<Ket> {
        if self.dim != v.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.dim(),
            });
        }
        let amps = (0..self.dim)
            .map(|r| {
                (0..self.dim)
                    .map(|c| self.entry(r, c) * v.amps()[c])
                    .sum()
            })
            .collect();
        Ok(Ket::from_raw(amps))
    }

    /// Matrix-matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![Amplitude::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                entries[r * d + c] = (0..d).map(|k| self.entry(r, k) * rhs.entry(k, c)).sum();
            }
        }
        Ok(Operator { dim: d, entries })
    }

    /// Subtraction, entrywise.
    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| a - b)
            .collect();
        Ok(Operator {
            dim: self.dim,
            entries,
        })
    }

    /// Largest entry modulus, the max-entry norm used by validity checks.
    pub fn max_entry_norm(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// True iff the max-entry deviation of `U†U` from the identity is ≤ `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let gram = self.adjoint().mul(self).expect("same dim");
        gram.sub(&Operator::identity(self.dim))
            .expect("same dim")
            .max_entry_norm()
            <= tol
    }
}

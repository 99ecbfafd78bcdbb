//! Simplex codec: maps model vectors to probability weights over a finite
//! codebook and back.
//!
//! The codebook for dimension `d` and radius `r` has `M = 2d + 1` entries:
//! `±√d·r` times each coordinate axis, plus the zero vector. Any `w` with
//! `‖w‖ ≤ r` is an (M-1)-simplex combination of these codewords, and the
//! weights are what the radio layer turns into transmit energies. The free
//! parameter `φ` spreads extra mass uniformly over the nonzero codewords
//! instead of the zero codeword; `φ = φ_max(w)` removes the zero codeword's
//! mass entirely, which maximizes received energy per frame.

use crate::domain::norm;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("codebook dimension must be at least 1")]
    EmptyDimension,
    #[error("codebook radius must be finite and positive, got {0}")]
    BadRadius(f64),
    #[error("vector length {got} does not match codebook dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("vector norm {norm} exceeds codebook radius {radius}")]
    OutsideBall { norm: f64, radius: f64 },
    #[error("energy profile length {got} is not odd of the form 2d+1")]
    BadProfileLength { got: usize },
    #[error("energy profile entry {index} is {value}; entries must be finite and nonnegative")]
    NegativeWeight { index: usize, value: f64 },
    #[error("energy profile sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
}

/// The `M = 2d + 1` codeword set `{±√d·r·e_m} ∪ {0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Codebook {
    dim: usize,
    radius: f64,
}

/// Probability weights over a codebook: nonnegative entries summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile(Vec<f64>);

/// How much entries may drift from an exact simplex point before
/// [`EnergyProfile::new`] renormalizes or rejects them.
pub const PROFILE_SUM_TOL: f64 = 1e-12;

impl Codebook {
    pub fn new(dim: usize, radius: f64) -> Result<Self, CodecError> {
        if dim == 0 {
            return Err(CodecError::EmptyDimension);
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(CodecError::BadRadius(radius));
        }
        Ok(Codebook { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of codewords `M = 2d + 1`.
    pub fn len(&self) -> usize {
        2 * self.dim + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Scale `√d·r` of the nonzero codewords.
    pub fn spoke(&self) -> f64 {
        (self.dim as f64).sqrt() * self.radius
    }

    /// Codeword `m` (0-based): `0..d` are `+√d·r·e_m`, `d..2d` are
    /// `−√d·r·e_(m−d)`, and `2d` is the zero vector.
    pub fn codeword(&self, m: usize) -> Vec<f64> {
        assert!(m < self.len(), "codeword index out of range");
        let mut z = vec![0.0; self.dim];
        if m < self.dim {
            z[m] = self.spoke();
        } else if m < 2 * self.dim {
            z[m - self.dim] = -self.spoke();
        }
        z
    }

    /// Largest admissible spreading parameter for `w`:
    /// `φ_max = 1 − ‖w‖₁/(√d·r)`. Nonnegative for every `w` in the ball.
    pub fn phi_max(&self, w: &[f64]) -> Result<f64, CodecError> {
        self.check_input(w)?;
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        Ok((1.0 - l1 / self.spoke()).max(0.0))
    }

    /// Encodes `w` into simplex weights with spreading parameter `φ`,
    /// clipped into its admissible range `[0, φ_max(w)]`.
    ///
    /// Weight layout: positive part of each coordinate, then negative part,
    /// then the zero-codeword remainder. Reconstruction is exact:
    /// `Σ_m p_m z_m = w`.
    pub fn encode(&self, w: &[f64], phi: f64) -> Result<EnergyProfile, CodecError> {
        self.check_input(w)?;
        let spoke = self.spoke();
        let phi = phi.clamp(0.0, self.phi_max(w)?);
        let spread = phi / (2.0 * self.dim as f64);
        let mut p = Vec::with_capacity(self.len());
        for &x in w {
            p.push(x.max(0.0) / spoke + spread);
        }
        for &x in w {
            p.push((-x).max(0.0) / spoke + spread);
        }
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        p.push((1.0 - l1 / spoke - phi).max(0.0));
        EnergyProfile::new(p)
    }

    /// Encoding with all mass on the nonzero codewords (`φ = φ_max`), so the
    /// zero codeword's weight is exactly 0 and frame energy is maximal.
    pub fn encode_full(&self, w: &[f64]) -> Result<EnergyProfile, CodecError> {
        let mut p = self.encode(w, self.phi_max(w)?)?.into_inner();
        let m = p.len();
        p[m - 1] = 0.0;
        EnergyProfile::new(p)
    }

    /// Reconstructs the encoded vector: `w = Σ_m p_m z_m`, i.e.
    /// `w_m = √d·r·(p_m − p_(d+m))`.
    pub fn reconstruct(&self, p: &EnergyProfile) -> Result<Vec<f64>, CodecError> {
        if p.len() != self.len() {
            return Err(CodecError::DimensionMismatch { got: p.len(), want: self.len() });
        }
        let spoke = self.spoke();
        Ok((0..self.dim).map(|m| spoke * (p[m] - p[m + self.dim])).collect())
    }

    fn check_input(&self, w: &[f64]) -> Result<(), CodecError> {
        if w.len() != self.dim {
            return Err(CodecError::DimensionMismatch { got: w.len(), want: self.dim });
        }
        let n = norm(w);
        if n > self.radius * (1.0 + 1e-9) {
            return Err(CodecError::OutsideBall { norm: n, radius: self.radius });
        }
        Ok(())
    }
}

impl EnergyProfile {
    /// Validates simplex weights. Entries in `[-1e-12, 0)` are clamped to 0
    /// (floating-point cancellation), genuinely negative entries are
    /// rejected, and the vector is renormalized when its sum strays from 1
    /// by more than [`PROFILE_SUM_TOL`].
    pub fn new(mut p: Vec<f64>) -> Result<Self, CodecError> {
        if p.len() % 2 == 0 || p.is_empty() {
            return Err(CodecError::BadProfileLength { got: p.len() });
        }
        for (i, x) in p.iter_mut().enumerate() {
            if !x.is_finite() || *x < -PROFILE_SUM_TOL {
                return Err(CodecError::NegativeWeight { index: i, value: *x });
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 0.5 {
            return Err(CodecError::NotNormalized { sum });
        }
        if (sum - 1.0).abs() > PROFILE_SUM_TOL {
            for x in p.iter_mut() {
                *x /= sum;
            }
        }
        Ok(EnergyProfile(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for EnergyProfile {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

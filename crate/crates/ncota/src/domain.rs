//! Search domain: the closed Euclidean ball of radius `r` in `R^d`.
//!
//! Every node's model estimate lives in this ball; each optimizer step ends
//! with a projection back onto it, so a [`ModelVector`] can only be built
//! through the domain and always satisfies `‖w‖ ≤ r` (up to roundoff).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("domain dimension must be at least 1")]
    EmptyDimension,
    #[error("domain radius must be finite and positive, got {0}")]
    BadRadius(f64),
    #[error("vector length {got} does not match domain dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("vector norm {norm} exceeds domain radius {radius}")]
    OutsideBall { norm: f64, radius: f64 },
}

/// Ball `{w ∈ R^d : ‖w‖ ≤ r}` that all node states are confined to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomain {
    dim: usize,
    radius: f64,
}

/// A point of the domain ball. Construction goes through [`ParamDomain`],
/// which enforces the norm constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelVector(Vec<f64>);

impl ParamDomain {
    pub fn new(dim: usize, radius: f64) -> Result<Self, DomainError> {
        if dim == 0 {
            return Err(DomainError::EmptyDimension);
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(DomainError::BadRadius(radius));
        }
        Ok(ParamDomain { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Euclidean projection onto the ball: identity inside, radial rescale
    /// outside. Nearest-point property: for any z in the ball and any input a,
    /// `‖project(a) − z‖ ≤ ‖a − z‖`.
    pub fn project(&self, v: Vec<f64>) -> ModelVector {
        assert_eq!(v.len(), self.dim, "projection input has wrong dimension");
        let n = norm(&v);
        if n <= self.radius {
            ModelVector(v)
        } else {
            let scale = self.radius / n;
            ModelVector(v.into_iter().map(|x| x * scale).collect())
        }
    }

    /// Wraps a vector that is already claimed to lie in the ball. A relative
    /// slack of 1e-9 absorbs accumulated roundoff from callers that did the
    /// projection arithmetic themselves.
    pub fn try_member(&self, v: Vec<f64>) -> Result<ModelVector, DomainError> {
        if v.len() != self.dim {
            return Err(DomainError::DimensionMismatch { got: v.len(), want: self.dim });
        }
        let n = norm(&v);
        if n > self.radius * (1.0 + 1e-9) {
            return Err(DomainError::OutsideBall { norm: n, radius: self.radius });
        }
        Ok(ModelVector(v))
    }

    /// The center of the ball, the usual common initializer.
    pub fn origin(&self) -> ModelVector {
        ModelVector(vec![0.0; self.dim])
    }
}

impl ModelVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for ModelVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ModelVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean norm of the stacked state `(w_1, …, w_N)`, i.e.
/// `sqrt(Σ_i ‖w_i‖²)`.
pub fn stacked_norm(states: &[ModelVector]) -> f64 {
    states.iter().map(|w| w.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += c * x`.
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

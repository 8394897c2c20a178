//! Least-squares identification of `(A, B)` from one input/state trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_singular_value, pseudoinverse, spectral_norm, Matrix, Vector};
use crate::robustness::LtiSystem;
use crate::signals::{hankel, stack_state_input, Signal};

/// Identified one-step predictor `x⁺ = Â x + B̂ u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    #[serde(with = "crate::linalg::rows")]
    pub a_hat: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub b_hat: Matrix,
}

impl PredictorModel {
    pub fn n(&self) -> usize {
        self.a_hat.nrows()
    }

    pub fn m(&self) -> usize {
        self.b_hat.ncols()
    }

    /// `[Â B̂]`.
    pub fn stacked(&self) -> Matrix {
        let (n, m) = (self.n(), self.m());
        let mut out = Matrix::zeros(n, n + m);
        out.columns_mut(0, n).copy_from(&self.a_hat);
        out.columns_mut(n, m).copy_from(&self.b_hat);
        out
    }

    /// The true model itself, useful as a noise-free reference predictor.
    pub fn exact(sys: &LtiSystem) -> Self {
        PredictorModel { a_hat: sys.a.clone(), b_hat: sys.b.clone() }
    }

    /// `‖[Â B̂] − [A B]‖₂`.
    pub fn spectral_error(&self, sys: &LtiSystem) -> Result<f64> {
        spectral_norm(&(self.stacked() - PredictorModel::exact(sys).stacked()))
    }

    pub fn predict(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        if x.len() != self.n() || u.len() != self.m() {
            return Err(Error::dimension(format!(
                "predictor expects (x, u) of lengths ({}, {}), got ({}, {})",
                self.n(),
                self.m(),
                x.len(),
                u.len()
            )));
        }
        Ok(&self.a_hat * x + &self.b_hat * u)
    }
}

/// `[Â B̂] = H₁(x_{[1,T]}) [H₁(x_{[0,T−1]}); H₁(u_{[0,T−1]})]†`, the
/// minimum-Frobenius-norm least-squares fit.
///
/// `x` carries `T + 1` samples (including the final state), `u` carries `T`.
pub fn ls_estimate(u: &Signal, x: &Signal) -> Result<PredictorModel> {
    let t = u.len();
    if x.len() != t + 1 {
        return Err(Error::dimension(format!(
            "state trajectory needs T + 1 = {} samples, has {}",
            t + 1,
            x.len()
        )));
    }
    let n = x.dim();
    let past = x.shift(0, t)?;
    let next = x.shift(1, t)?;
    let data = stack_state_input(&past, u)?;
    let ab = hankel(&next, 1)? * pseudoinverse(&data)?;
    Ok(PredictorModel {
        a_hat: ab.columns(0, n).into_owned(),
        b_hat: ab.columns(n, u.dim()).into_owned(),
    })
}

/// Upper bound on `‖[Â B̂] − [A B]‖₂` from the noise realisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ErrorBound {
    Finite(f64),
    /// The data matrix is singular, nothing can be guaranteed.
    Unbounded,
}

impl ErrorBound {
    /// The bound as a float, `+∞` when unbounded.
    pub fn value(self) -> f64 {
        match self {
            ErrorBound::Finite(v) => v,
            ErrorBound::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, ErrorBound::Unbounded)
    }
}

/// `‖H₁(w)‖₂ / σ₁([H₁(x); H₁(u)])` over the aligned window `0..T−1`.
///
/// In ascending singular-value notation the numerator reads `σ_n(H₁(w))`:
/// `H₁(w)` has `n` rows, so its `n`-th singular value is the largest one.
/// `x` may carry one extra trailing sample (the final state), which is
/// ignored.
pub fn error_bound(noise: &Signal, u: &Signal, x: &Signal) -> Result<ErrorBound> {
    let t = u.len();
    if noise.len() != t {
        return Err(Error::dimension(format!("noise length {} differs from input length {t}", noise.len())));
    }
    if x.len() != t && x.len() != t + 1 {
        return Err(Error::dimension(format!("state length {} does not match input length {t}", x.len())));
    }
    if noise.dim() != x.dim() {
        return Err(Error::dimension(format!(
            "noise dimension {} differs from state dimension {}",
            noise.dim(),
            x.dim()
        )));
    }
    let numerator = spectral_norm(noise.as_matrix())?;
    let denominator = min_singular_value(&stack_state_input(&x.shift(0, t)?, u)?)?;
    if denominator <= 0.0 {
        return Ok(ErrorBound::Unbounded);
    }
    Ok(ErrorBound::Finite(numerator / denominator))
}

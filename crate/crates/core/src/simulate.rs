//! Plant simulation `x(t+1) = A x(t) + B u(t) + w(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng::{self, streams};
use crate::robustness::LtiSystem;
use crate::signals::Signal;

/// i.i.d. `w(t) ~ N(0, std² I)`. `std = 0` gives the noise-free plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub std: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel { std: 0.0, seed: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.std.is_finite() && self.std >= 0.0 {
            Ok(())
        } else {
            Err(Error::validation(format!("noise std must be finite and nonnegative, got {}", self.std)))
        }
    }

    /// `n × len` noise samples from stream `stream_id`. Sample `t` depends
    /// only on `(seed, stream_id, t)`, never on the inputs or states.
    pub fn draws(&self, n: usize, len: usize, stream_id: u64) -> Result<Matrix> {
        self.validate()?;
        if self.std == 0.0 {
            return Ok(Matrix::zeros(n, len));
        }
        Ok(rng::standard_normal(&mut rng::stream(self.seed, stream_id), n, len) * self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    /// `u(0) … u(T−1)`.
    pub u: Signal,
    /// `x(0) … x(T)`.
    pub x: Signal,
    /// `w(0) … w(T−1)` as realised.
    pub w: Signal,
    pub noise_std: f64,
    pub seed: u64,
    pub sys_tag: String,
}

impl TrajectoryDataset {
    pub fn n(&self) -> usize {
        self.x.dim()
    }

    pub fn m(&self) -> usize {
        self.u.dim()
    }

    /// Horizon `T` (number of inputs).
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `x(0) … x(T−1)`, aligned with `u`.
    pub fn x_past(&self) -> Signal {
        self.x.shift(0, self.len()).expect("x has T + 1 samples")
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.sys_tag = tag.into();
        self
    }
}

pub(crate) fn check_state(sys: &LtiSystem, x0: &Vector) -> Result<()> {
    if x0.len() != sys.n() {
        return Err(Error::dimension(format!("x0 has length {}, system has n = {}", x0.len(), sys.n())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("x0 must be finite"));
    }
    Ok(())
}

/// Runs the plant from `x0` under `u`, drawing process noise from the
/// data-noise stream of `noise.seed`.
pub fn simulate(sys: &LtiSystem, x0: &Vector, u: &Signal, noise: &NoiseModel) -> Result<TrajectoryDataset> {
    sys.validate()?;
    check_state(sys, x0)?;
    if u.dim() != sys.m() {
        return Err(Error::dimension(format!("input has dimension {}, system has m = {}", u.dim(), sys.m())));
    }
    let (n, t) = (sys.n(), u.len());
    let w = noise.draws(n, t, streams::DATA_NOISE)?;
    let mut x = Matrix::zeros(n, t + 1);
    x.set_column(0, x0);
    for k in 0..t {
        let next = &sys.a * x.column(k) + &sys.b * u.as_matrix().column(k) + w.column(k);
        x.set_column(k + 1, &next);
    }
    let x = Signal::from_matrix(u.first_index(), x)
        .map_err(|_| Error::Numerical("state trajectory diverged to a non-finite value".into()))?;
    Ok(TrajectoryDataset {
        u: u.clone(),
        x,
        w: Signal::from_matrix(u.first_index(), w)?,
        noise_std: noise.std,
        seed: noise.seed,
        sys_tag: "custom".into(),
    })
}

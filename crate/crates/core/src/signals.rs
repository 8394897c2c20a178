//! Finite vector-valued time series and their Hankel matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, Matrix, Vector};

/// Samples `z(first_index) … z(last_index)` of a `dim`-dimensional signal,
/// stored column-wise in a `dim × len` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct Signal {
    first_index: i64,
    data: Matrix,
}

/// Serialized form: one inner list per time step.
#[derive(Serialize, Deserialize)]
struct SignalRepr {
    first_index: i64,
    samples: Vec<Vec<f64>>,
}

impl TryFrom<SignalRepr> for Signal {
    type Error = Error;

    fn try_from(r: SignalRepr) -> Result<Self> {
        Signal::from_samples(r.first_index, &r.samples)
    }
}

impl From<Signal> for SignalRepr {
    fn from(z: Signal) -> Self {
        SignalRepr {
            first_index: z.first_index,
            samples: z.samples().map(|v| v.iter().copied().collect()).collect(),
        }
    }
}

impl Signal {
    /// Wraps a `dim × len` matrix whose columns are the samples.
    pub fn from_matrix(first_index: i64, data: Matrix) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::validation("signal dimension must be positive"));
        }
        if data.ncols() == 0 {
            return Err(Error::validation("signal must hold at least one sample"));
        }
        ensure_finite(&data)?;
        Ok(Signal { first_index, data })
    }

    pub fn from_samples(first_index: i64, samples: &[Vec<f64>]) -> Result<Self> {
        let dim = samples.first().map(Vec::len).unwrap_or(0);
        if let Some((t, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != dim) {
            return Err(Error::dimension(format!(
                "sample {t} has length {}, expected {dim}",
                s.len()
            )));
        }
        let data = Matrix::from_fn(dim, samples.len(), |r, c| samples[c][r]);
        Self::from_matrix(first_index, data)
    }

    /// Scalar signal starting at t = 0.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::from_matrix(0, Matrix::from_row_slice(1, values.len(), values))
    }

    pub fn zeros(dim: usize, len: usize) -> Result<Self> {
        Self::from_matrix(0, Matrix::zeros(dim, len))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.len() as i64 - 1
    }

    /// Sample at absolute time `t`.
    pub fn at(&self, t: i64) -> Option<Vector> {
        let j = usize::try_from(t - self.first_index).ok()?;
        (j < self.len()).then(|| self.data.column(j).into_owned())
    }

    /// Samples as columns, in time order.
    pub fn as_matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn samples(&self) -> impl Iterator<Item = Vector> + '_ {
        self.data.column_iter().map(|c| c.into_owned())
    }

    /// Same values re-indexed to start at `first_index`.
    pub fn reindexed(mut self, first_index: i64) -> Self {
        self.first_index = first_index;
        self
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_matrix(self.first_index, &self.data * c)
    }

    /// Window of `new_length` samples starting `offset` samples after the
    /// first one. The window keeps absolute time indices.
    pub fn shift(&self, offset: i64, new_length: usize) -> Result<Self> {
        let start = usize::try_from(offset)
            .map_err(|_| Error::dimension(format!("negative window offset {offset}")))?;
        if new_length == 0 || start + new_length > self.len() {
            return Err(Error::dimension(format!(
                "window [{start}, {start}+{new_length}) exceeds signal of length {}",
                self.len()
            )));
        }
        Ok(Signal {
            first_index: self.first_index + offset,
            data: self.data.columns(start, new_length).into_owned(),
        })
    }

    /// Samples `z(i) … z(j)` by absolute index, inclusive.
    pub fn window(&self, i: i64, j: i64) -> Result<Self> {
        if j < i {
            return Err(Error::dimension(format!("empty window [{i}, {j}]")));
        }
        self.shift(i - self.first_index, (j - i + 1) as usize)
    }
}

/// Hankel matrix of depth `depth`: block `(r, c)` is `z(first + r + c)`.
pub fn hankel(z: &Signal, depth: usize) -> Result<Matrix> {
    if depth == 0 {
        return Err(Error::validation("Hankel depth must be positive"));
    }
    let len = z.len();
    if depth > len {
        return Err(Error::dimension(format!(
            "Hankel depth {depth} exceeds signal length {len}"
        )));
    }
    let dim = z.dim();
    let cols = len - depth + 1;
    let mut h = Matrix::zeros(depth * dim, cols);
    for r in 0..depth {
        h.view_mut((r * dim, 0), (dim, cols))
            .copy_from(&z.data.columns(r, cols));
    }
    Ok(h)
}

/// `[H₁(x); H₁(u)]`, the `(n+m) × T` input/state data matrix.
pub fn stack_state_input(x: &Signal, u: &Signal) -> Result<Matrix> {
    if x.len() != u.len() {
        return Err(Error::dimension(format!(
            "state length {} differs from input length {}",
            x.len(),
            u.len()
        )));
    }
    let (n, m) = (x.dim(), u.dim());
    let mut out = Matrix::zeros(n + m, x.len());
    out.rows_mut(0, n).copy_from(&x.data);
    out.rows_mut(n, m).copy_from(&u.data);
    Ok(out)
}

//! Dense real-matrix helpers.
//!
//! Singular values are reported in **ascending** order throughout the crate:
//! `spectrum.values[0]` is the smallest singular value. All entry points reject
//! matrices carrying NaN or infinite entries.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Singular values sorted ascending, `min(rows, cols)` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest singular value, zero for an empty spectrum.
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Largest singular value (the spectral norm), zero for an empty spectrum.
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `i`-th smallest singular value, 1-based.
    pub fn nth_smallest(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|j| self.values.get(j).copied())
    }
}

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    match m.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(idx) => {
            let (r, c) = (idx % m.nrows(), idx / m.nrows());
            Err(Error::validation(format!(
                "matrix entry ({r}, {c}) is not finite: {}",
                m[(r, c)]
            )))
        }
    }
}

fn ascending(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.total_cmp(b));
    values
}

pub fn singular_values(m: &Matrix) -> Result<SingularSpectrum> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(SingularSpectrum { values: Vec::new() });
    }
    let sv = m.singular_values();
    Ok(SingularSpectrum {
        values: ascending(sv.iter().map(|v| v.max(0.0)).collect()),
    })
}

/// Singular values padded with zeros up to `rows` entries, ascending.
///
/// These are the square roots of the eigenvalues of `m mᵀ`; for a tall
/// matrix the extra eigenvalues are exactly zero.
pub fn row_gram_singular_values(m: &Matrix) -> Result<SingularSpectrum> {
    let mut values = singular_values(m)?.values;
    let pad = m.nrows().saturating_sub(values.len());
    values.splice(0..0, std::iter::repeat_n(0.0, pad));
    Ok(SingularSpectrum { values })
}

pub fn min_singular_value(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.min())
}

pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.max())
}

/// Relative tolerance used when the caller does not supply one:
/// machine epsilon times the larger dimension.
pub fn default_rank_tol(m: &Matrix) -> f64 {
    f64::EPSILON * m.nrows().max(m.ncols()) as f64
}

/// Number of singular values strictly above `rel_tol * σ_max`.
pub fn numerical_rank(m: &Matrix, rel_tol: Option<f64>) -> Result<usize> {
    let tol = rel_tol.unwrap_or_else(|| default_rank_tol(m));
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::validation(format!("rank tolerance must be positive, got {tol}")));
    }
    let spec = singular_values(m)?;
    let cutoff = tol * spec.max();
    if spec.max() == 0.0 {
        return Ok(0);
    }
    Ok(spec.values.iter().filter(|&&s| s > cutoff).count())
}

/// Moore–Penrose pseudoinverse via a full SVD. Singular values at or below
/// the default numerical-rank cutoff are treated as zero.
pub fn pseudoinverse(m: &Matrix) -> Result<Matrix> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Ok(Matrix::zeros(cols, rows));
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD did not return Vᵀ".into()))?;
    let s_max = svd.singular_values.max();
    let cutoff = default_rank_tol(m) * s_max;

    let mut out = Matrix::zeros(cols, rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            // out += v_i u_iᵀ / s_i
            let v_i = v_t.row(i).transpose();
            let u_i = u.column(i);
            out += (v_i * u_i.transpose()) / s;
        }
    }
    Ok(out)
}

/// Serde adapter writing a matrix as a list of rows.
pub mod rows {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Matrix;

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("matrix rows have unequal lengths"));
        }
        Ok(Matrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
    }
}

/// Serde adapter writing a vector as a flat list.
pub mod entries {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

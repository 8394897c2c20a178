//! Persistency of excitation: the binary rank test, the quantitative level
//! α (smallest singular value of the input Hankel matrix), and input design.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values};
use crate::rng::{self, streams};
use crate::signals::{hankel, Signal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationReport {
    pub order: usize,
    /// Depth-`order` Hankel matrix has full row rank.
    pub is_pe: bool,
    /// Smallest singular value of the depth-`order` Hankel matrix; the
    /// signal is α-persistently exciting for every α up to this value.
    pub alpha: f64,
    pub hankel_rows: usize,
    pub hankel_cols: usize,
    /// Set when `order·m > T − order + 1`: the Hankel matrix is tall and
    /// can never have full row rank, whatever the samples.
    pub structurally_infeasible: bool,
}

/// Whether a depth-`k` Hankel matrix of an `m`-input signal of length `t`
/// can have full row rank at all.
pub fn pe_feasible(m: usize, t: usize, k: usize) -> bool {
    k >= 1 && k <= t && k * m <= t - k + 1
}

pub fn pe_check(u: &Signal, k: usize) -> Result<ExcitationReport> {
    let h = hankel(u, k)?;
    let (rows, cols) = h.shape();
    if rows > cols {
        return Ok(ExcitationReport {
            order: k,
            is_pe: false,
            alpha: 0.0,
            hankel_rows: rows,
            hankel_cols: cols,
            structurally_infeasible: true,
        });
    }
    let alpha = singular_values(&h)?.min();
    let is_pe = numerical_rank(&h, None)? == rows;
    Ok(ExcitationReport {
        order: k,
        is_pe,
        alpha,
        hankel_rows: rows,
        hankel_cols: cols,
        structurally_infeasible: false,
    })
}

/// `m × t` i.i.d. `N(0, std²)` input drawn from the seed's input stream.
pub fn gaussian_input(m: usize, t: usize, std: f64, seed: u64) -> Result<Signal> {
    if m == 0 || t == 0 {
        return Err(Error::validation("input dimension and length must be positive"));
    }
    if !(std.is_finite() && std >= 0.0) {
        return Err(Error::validation(format!("input std must be finite and nonnegative, got {std}")));
    }
    let draw = rng::standard_normal(&mut rng::stream(seed, streams::INPUT), m, t);
    Signal::from_matrix(0, draw * std)
}

/// Draws a standard-normal input and rescales it so that its order-`k`
/// excitation level is exactly `target_alpha`.
///
/// The Hankel map and the singular values are both positively homogeneous,
/// so a single rescale lands on the target. A draw with α₀ = 0 (probability
/// zero) is discarded and the stream continues.
pub fn design_input(m: usize, t: usize, k: usize, target_alpha: f64, seed: u64) -> Result<Signal> {
    if m == 0 || t == 0 || k == 0 {
        return Err(Error::validation("m, T and k must be positive"));
    }
    if !pe_feasible(m, t, k) {
        return Err(Error::Structural(format!(
            "order {k} needs k·m = {} ≤ T − k + 1 = {}",
            k * m,
            (t + 1).saturating_sub(k)
        )));
    }
    if !(target_alpha.is_finite() && target_alpha > 0.0) {
        return Err(Error::validation(format!("target alpha must be positive, got {target_alpha}")));
    }
    let mut stream = rng::stream(seed, streams::INPUT);
    for _ in 0..64 {
        let u = Signal::from_matrix(0, rng::standard_normal(&mut stream, m, t))?;
        let alpha0 = pe_check(&u, k)?.alpha;
        if alpha0 > 0.0 {
            return u.scaled(target_alpha / alpha0);
        }
    }
    Err(Error::Numerical("could not draw a persistently exciting input".into()))
}

pub fn scale_input(u: &Signal, c: f64) -> Result<Signal> {
    u.scaled(c)
}

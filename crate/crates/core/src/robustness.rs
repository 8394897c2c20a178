//! Certified lower bounds on the smallest singular value of the input/state
//! data matrix `[H₁(x); H₁(u)]`.
//!
//! The chain is:
//!
//! 1. the block matrix `M` built from `(A, B)` and, for a direction
//!    `z = (ξ, η, 0)`, the matrix `Θ_z` whose rows are `zᵀ Mʲ`, `j = 0..=n`;
//! 2. a uniform constant `ρ` with `σ₁(Θ_z) ≥ ρ` for every unit `z`
//!    (positive whenever `(A, B)` is controllable);
//! 3. if `u` is α-persistently exciting of order `n + 1`, then
//!    `σ₁([H₁(x); H₁(u)]) ≥ α ρ / √(n + 1)` on noise-free data.
//!
//! [`estimate_rho0`] computes the best `ρ` numerically. The result is an
//! *estimate*: a local search over the sphere can only overshoot the true
//! infimum, never undershoot it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excitation::pe_check;
use crate::linalg::{min_singular_value, numerical_rank, row_gram_singular_values, Matrix, Vector};
use crate::optim::NelderMead;
use crate::rng::{self, streams};
use crate::signals::{hankel, stack_state_input, Signal};

/// Discrete-time pair `x(t+1) = A x(t) + B u(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiSystem {
    #[serde(with = "crate::linalg::rows")]
    pub a: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub b: Matrix,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        let sys = LtiSystem { a, b };
        sys.validate()?;
        Ok(sys)
    }

    /// Double integrator `A = [[1, 1], [0, 1]]`, `B = (0, 1)ᵀ`.
    pub fn double_integrator() -> Self {
        LtiSystem {
            a: Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            b: Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if n == 0 || self.a.ncols() != n {
            return Err(Error::dimension(format!("A must be square and nonempty, got {:?}", self.a.shape())));
        }
        if self.b.nrows() != n {
            return Err(Error::dimension(format!("B has {} rows, A has {n}", self.b.nrows())));
        }
        if self.b.ncols() == 0 {
            return Err(Error::validation("system needs at least one input (m = 0)"));
        }
        crate::linalg::ensure_finite(&self.a)?;
        crate::linalg::ensure_finite(&self.b)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `[B, AB, …, A^{n−1}B]`.
    pub fn controllability_matrix(&self) -> Matrix {
        let (n, m) = (self.n(), self.m());
        let mut out = Matrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for j in 0..n {
            out.columns_mut(j * m, m).copy_from(&block);
            block = &self.a * block;
        }
        out
    }

    pub fn controllability_rank(&self) -> Result<usize> {
        numerical_rank(&self.controllability_matrix(), None)
    }

    pub fn is_controllable(&self) -> Result<bool> {
        Ok(self.controllability_rank()? == self.n())
    }

    /// `A x + B u`.
    pub fn step(&self, x: &Vector, u: &Vector) -> Vector {
        &self.a * x + &self.b * u
    }

    /// `(QᵀAQ, QᵀB)` for an orthogonal state transform `Q`.
    pub fn transformed(&self, q: &Matrix) -> Result<Self> {
        LtiSystem::new(q.transpose() * &self.a * q, q.transpose() * &self.b)
    }
}

/// Direction `(ξ, η)` in `ℝⁿ × ℝᵐ`; padded with `n·m` zeros it gives the
/// vector `z` that seeds `Θ_z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDirection {
    #[serde(with = "crate::linalg::entries")]
    pub xi: Vector,
    #[serde(with = "crate::linalg::entries")]
    pub eta: Vector,
}

impl ExtendedDirection {
    pub fn new(xi: Vector, eta: Vector) -> Self {
        ExtendedDirection { xi, eta }
    }

    /// Splits a stacked `(ξ, η)` vector.
    pub fn from_stacked(v: &Vector, n: usize) -> Self {
        ExtendedDirection {
            xi: v.rows(0, n).into_owned(),
            eta: v.rows(n, v.len() - n).into_owned(),
        }
    }

    pub fn stacked(&self) -> Vector {
        let mut v = Vector::zeros(self.xi.len() + self.eta.len());
        v.rows_mut(0, self.xi.len()).copy_from(&self.xi);
        v.rows_mut(self.xi.len(), self.eta.len()).copy_from(&self.eta);
        v
    }

    pub fn norm(&self) -> f64 {
        (self.xi.norm_squared() + self.eta.norm_squared()).sqrt()
    }

    /// `z = (ξ, η, 0_{nm})`.
    pub fn padded(&self) -> Vector {
        let (n, m) = (self.xi.len(), self.eta.len());
        let mut z = Vector::zeros(n + m * (n + 1));
        z.rows_mut(0, n + m).copy_from(&self.stacked());
        z
    }
}

/// Square matrix of size `n + m(n+1)`:
///
/// ```text
/// [ A  B  0  ⋯  0  ]
/// [ 0  0  Iₘ ⋯  0  ]
/// [ ⋮           ⋱  ]
/// [ 0  0  0  ⋯  Iₘ ]
/// [ 0  0  0  ⋯  0  ]
/// ```
pub fn build_m(sys: &LtiSystem) -> Result<Matrix> {
    sys.validate()?;
    let (n, m) = (sys.n(), sys.m());
    let size = n + m * (n + 1);
    let mut out = Matrix::zeros(size, size);
    out.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    out.view_mut((0, n), (n, m)).copy_from(&sys.b);
    for i in 0..n {
        let row = n + i * m;
        let col = n + (i + 1) * m;
        out.view_mut((row, col), (m, m)).fill_with_identity();
    }
    Ok(out)
}

fn check_direction(sys: &LtiSystem, d: &ExtendedDirection) -> Result<()> {
    if d.xi.len() != sys.n() || d.eta.len() != sys.m() {
        return Err(Error::dimension(format!(
            "direction has (ξ, η) lengths ({}, {}), system has (n, m) = ({}, {})",
            d.xi.len(),
            d.eta.len(),
            sys.n(),
            sys.m()
        )));
    }
    Ok(())
}

/// `(n+1) × L` matrix with row `j` equal to `zᵀ Mʲ`.
pub fn theta_z(sys: &LtiSystem, d: &ExtendedDirection) -> Result<Matrix> {
    check_direction(sys, d)?;
    let m_mat = build_m(sys)?;
    Ok(theta_from_m(&m_mat, &d.padded(), sys.n()))
}

fn theta_from_m(m_mat: &Matrix, z: &Vector, n: usize) -> Matrix {
    let size = z.len();
    let mut out = Matrix::zeros(n + 1, size);
    let mut row = z.transpose();
    for j in 0..=n {
        out.row_mut(j).copy_from(&row);
        row *= m_mat;
    }
    out
}

/// `σ₁(Θ_z)` for the unit vector along `d`.
pub fn sigma_theta(sys: &LtiSystem, d: &ExtendedDirection) -> Result<f64> {
    check_direction(sys, d)?;
    let norm = d.norm();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(Error::validation("direction (ξ, η) must be nonzero and finite"));
    }
    let unit = ExtendedDirection::new(&d.xi / norm, &d.eta / norm);
    min_singular_value(&theta_z(sys, &unit)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho0Options {
    /// Random starting directions, in addition to the `n + m` coordinate axes.
    pub starts: usize,
    pub seed: u64,
    /// Convergence tolerance of each local search.
    pub refine_tol: f64,
}

impl Default for Rho0Options {
    fn default() -> Self {
        Rho0Options { starts: 32, seed: 0, refine_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rho0Estimate {
    /// Smallest `σ₁(Θ_z)` found; an upper bound on the true infimum.
    pub value: f64,
    /// Unit `(ξ, η)` attaining it.
    pub direction: ExtendedDirection,
    pub evaluations: usize,
}

/// Orthonormal basis of the complement of the unit vector `d`, from the
/// Householder reflector mapping `e₁` to `d`.
fn tangent_basis(d: &Vector) -> Matrix {
    let p = d.len();
    let mut v = d.clone();
    let sign = if d[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv = v.norm_squared();
    let h = Matrix::identity(p, p) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, p - 1).into_owned()
}

struct Evaluator<'a> {
    m_mat: &'a Matrix,
    n: usize,
    m: usize,
}

impl Evaluator<'_> {
    fn theta(&self, d: &Vector) -> Matrix {
        let norm = d.norm();
        let mut z = Vector::zeros(self.n + self.m * (self.n + 1));
        z.rows_mut(0, self.n + self.m).copy_from(&(d / norm));
        theta_from_m(self.m_mat, &z, self.n)
    }

    /// `σ₁(Θ_z)` by SVD.
    fn sigma(&self, d: &Vector) -> f64 {
        min_singular_value(&self.theta(d)).unwrap_or(f64::INFINITY)
    }

    /// `σ₁(Θ_z)` from the smallest eigenvalue of the `(n+1) × (n+1)` Gram
    /// matrix `Θ_z Θ_zᵀ`. Cheaper than the SVD and accurate enough to steer
    /// the search; reported values are recomputed with [`Self::sigma`].
    fn sigma_fast(&self, d: &Vector) -> f64 {
        let theta = self.theta(d);
        let gram = &theta * theta.transpose();
        let lambda = gram.symmetric_eigenvalues().min();
        if lambda.is_finite() { lambda.max(0.0).sqrt() } else { f64::INFINITY }
    }

    /// Repeated Nelder–Mead on the tangent plane at the current point,
    /// re-centred after each pass until a pass stops improving.
    fn refine(&self, start: &Vector, tol: f64) -> (Vector, f64, usize) {
        let mut point = start / start.norm();
        let mut value = self.sigma_fast(&point);
        let mut evaluations = 1;
        let mut step = 0.25;
        for _ in 0..8 {
            let basis = tangent_basis(&point);
            let nm = NelderMead { initial_step: step, tol, max_iter: 4000 };
            let min = nm.minimize(
                |y| self.sigma_fast(&(&point + &basis * y)),
                &Vector::zeros(point.len() - 1),
            );
            evaluations += min.evaluations;
            let improved = value - min.value;
            if min.value < value {
                let next = &point + &basis * &min.x;
                point = &next / next.norm();
                value = min.value;
            }
            if improved <= tol {
                break;
            }
            step = (min.x.amax() * 0.5).clamp(1e-4, 0.25);
        }
        (point.clone(), self.sigma(&point), evaluations + 1)
    }
}

/// Multi-start search for `min σ₁(Θ_z)` over unit `(ξ, η)`.
///
/// Starts are the coordinate axes followed by `opts.starts` uniformly
/// distributed directions from the seed's sphere stream. Starts run in
/// parallel; the minimum is taken in start order, so the result does not
/// depend on scheduling.
pub fn estimate_rho0(sys: &LtiSystem, opts: &Rho0Options) -> Result<Rho0Estimate> {
    sys.validate()?;
    let (n, m) = (sys.n(), sys.m());
    let rank = sys.controllability_rank()?;
    if rank < n {
        return Err(Error::NotControllable { rank, n });
    }
    if opts.refine_tol.is_nan() || opts.refine_tol <= 0.0 {
        return Err(Error::validation("refine_tol must be positive"));
    }
    let p = n + m;
    let mut starts: Vec<Vector> = (0..p)
        .map(|i| {
            let mut e = Vector::zeros(p);
            e[i] = 1.0;
            e
        })
        .collect();
    let mut stream = rng::stream(opts.seed, streams::SPHERE_STARTS);
    while starts.len() < p + opts.starts {
        let g = rng::standard_normal(&mut stream, p, 1).column(0).into_owned();
        let norm = g.norm();
        if norm > 1e-12 {
            starts.push(g / norm);
        }
    }

    let m_mat = build_m(sys)?;
    let eval = Evaluator { m_mat: &m_mat, n, m };
    if p == 1 {
        // The sphere is {±1}; nothing to search.
        let value = eval.sigma(&starts[0]);
        return Ok(Rho0Estimate {
            value,
            direction: ExtendedDirection::from_stacked(&starts[0], n),
            evaluations: 1,
        });
    }
    let results: Vec<(Vector, f64, usize)> =
        starts.par_iter().map(|s| eval.refine(s, opts.refine_tol)).collect();

    let evaluations = results.iter().map(|r| r.2).sum();
    let (best, value, _) = results
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one start");
    if !value.is_finite() {
        return Err(Error::Numerical("σ₁(Θ_z) evaluation failed".into()));
    }
    Ok(Rho0Estimate {
        value,
        direction: ExtendedDirection::from_stacked(&best, n),
        evaluations,
    })
}

fn ensure_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Excitation level `δ √(n+1) / ρ` an input needs (at order `n+1`) for the
/// data matrix to satisfy `σ₁ ≥ δ`.
pub fn required_pe_level(delta: f64, rho: f64, n: usize) -> Result<f64> {
    ensure_positive("delta", delta)?;
    ensure_positive("rho", rho)?;
    if n == 0 {
        return Err(Error::validation("state dimension n must be positive"));
    }
    Ok(delta * ((n + 1) as f64).sqrt() / rho)
}

/// `α ρ / √(n+1)`.
pub fn certified_delta(alpha: f64, rho: f64, n: usize) -> f64 {
    alpha * rho / ((n + 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCertificate {
    /// Excitation level of the input at order `n+1`.
    pub alpha: f64,
    pub rho: f64,
    pub n: usize,
    /// Guaranteed lower bound on `σ₁([H₁(x); H₁(u)])`.
    pub delta_cert: f64,
    /// Measured `σ₁([H₁(x); H₁(u)])`.
    pub delta_actual: f64,
}

impl RobustnessCertificate {
    /// `delta_actual ≥ delta_cert − slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.delta_actual >= self.delta_cert - slack
    }
}

/// Certificate for aligned input/state data `u(0..T−1)`, `x(0..T−1)`.
pub fn certify(u: &Signal, x: &Signal, rho: f64, n: usize) -> Result<RobustnessCertificate> {
    ensure_positive("rho", rho)?;
    if n == 0 {
        return Err(Error::validation("state dimension n must be positive"));
    }
    if x.dim() != n {
        return Err(Error::dimension(format!("state signal has dimension {}, n = {n}", x.dim())));
    }
    if u.len() != x.len() {
        return Err(Error::dimension(format!(
            "input length {} differs from state length {}",
            u.len(),
            x.len()
        )));
    }
    if u.len() < n + 1 {
        return Err(Error::dimension(format!("need T ≥ n + 1 = {}, got T = {}", n + 1, u.len())));
    }
    let alpha = pe_check(u, n + 1)?.alpha;
    let delta_actual = min_singular_value(&stack_state_input(x, u)?)?;
    Ok(RobustnessCertificate {
        alpha,
        rho,
        n,
        delta_cert: certified_delta(alpha, rho, n),
        delta_actual,
    })
}

/// The two sides of the interlacing step
/// `σ₁(H_{n+1}(u)) ≤ σ_{n+1}([H₁(x_{[0,T−n−1]}); H_{n+1}(u)])`.
///
/// Both sides use the row-space convention (singular values padded with
/// zeros up to the row count), which coincides with the ordinary spectrum
/// whenever the matrices are wide and makes the inequality unconditional.
pub fn interlacing_gap(u: &Signal, x: &Signal, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::validation("state dimension n must be positive"));
    }
    let t = u.len();
    if t < n + 1 {
        return Err(Error::dimension(format!("need T ≥ n + 1 = {}, got T = {t}", n + 1)));
    }
    if x.dim() != n {
        return Err(Error::dimension(format!("state signal has dimension {}, n = {n}", x.dim())));
    }
    let cols = t - n;
    if x.len() < cols {
        return Err(Error::dimension(format!("state signal needs at least {cols} samples, has {}", x.len())));
    }
    let hu = hankel(u, n + 1)?;
    let hx = hankel(&x.shift(0, cols)?, 1)?;
    let mut stacked = Matrix::zeros(hx.nrows() + hu.nrows(), cols);
    stacked.rows_mut(0, hx.nrows()).copy_from(&hx);
    stacked.rows_mut(hx.nrows(), hu.nrows()).copy_from(&hu);

    let lhs = row_gram_singular_values(&hu)?.min();
    let rhs = row_gram_singular_values(&stacked)?
        .nth_smallest(n + 1)
        .expect("stacked matrix has more than n rows");
    Ok((lhs, rhs))
}

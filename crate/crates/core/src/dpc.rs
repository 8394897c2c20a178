//! Receding-horizon reference tracking on top of an identified one-step
//! predictor.
//!
//! Each step solves
//!
//! ```text
//! min  Σ_{k=0}^{T_f−1} q‖x_k − r‖² + ρ_u‖u_k‖²
//! s.t. x_0 = x(t),  x_{k+1} = Â x_k + B̂ u_k
//! ```
//!
//! with `q = ρ_u = 1` by default. Only `x_0 … x_{T_f−1}` enter the cost, so
//! the last input `u_{T_f−1}` never affects it and comes out as zero. The
//! problem is unconstrained, so it is condensed into a ridge least-squares
//! problem in the stacked inputs and solved by Cholesky.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng::streams;
use crate::robustness::LtiSystem;
use crate::simulate::{check_state, NoiseModel};
use crate::signals::Signal;
use crate::sysid::PredictorModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpcConfig {
    /// Prediction horizon `T_f`.
    pub horizon: usize,
    #[serde(with = "crate::linalg::entries")]
    pub reference: Vector,
    pub predictor: PredictorModel,
    /// Weight on `‖x_k − r‖²`. Extension knob, 1 reproduces the unit-weight problem.
    #[serde(default = "one")]
    pub state_weight: f64,
    /// Weight on `‖u_k‖²`; must stay positive.
    #[serde(default = "one")]
    pub input_weight: f64,
}

fn one() -> f64 {
    1.0
}

impl DpcConfig {
    pub fn new(horizon: usize, reference: Vector, predictor: PredictorModel) -> Self {
        DpcConfig { horizon, reference, predictor, state_weight: 1.0, input_weight: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::validation("horizon must be at least 1"));
        }
        if self.reference.len() != self.predictor.n() {
            return Err(Error::dimension(format!(
                "reference has length {}, predictor state has n = {}",
                self.reference.len(),
                self.predictor.n()
            )));
        }
        if self.reference.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("reference must be finite"));
        }
        if !(self.state_weight.is_finite() && self.state_weight >= 0.0) {
            return Err(Error::validation("state weight must be finite and nonnegative"));
        }
        if !(self.input_weight.is_finite() && self.input_weight > 0.0) {
            return Err(Error::validation("input weight must be finite and positive"));
        }
        crate::linalg::ensure_finite(&self.predictor.a_hat)?;
        crate::linalg::ensure_finite(&self.predictor.b_hat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSolution {
    /// `u_0 … u_{T_f−1}`.
    pub inputs: Signal,
    /// `x_0 … x_{T_f−1}` as rolled out by the predictor.
    pub predicted: Signal,
    /// Optimal objective, including the fixed `q‖x_0 − r‖²` term.
    pub cost: f64,
}

/// Condensed problem for one configuration; reusable across time steps.
#[derive(Debug, Clone)]
pub struct HorizonController {
    cfg: DpcConfig,
    /// Free response: row block `k` is `Âᵏ`.
    free: Matrix,
    /// Forced response: block `(k, j)` is `Â^{k−1−j} B̂` for `j < k`.
    forced: Matrix,
    hessian: Cholesky<f64, nalgebra::Dyn>,
}

impl HorizonController {
    pub fn new(cfg: DpcConfig) -> Result<Self> {
        cfg.validate()?;
        let (n, m, tf) = (cfg.predictor.n(), cfg.predictor.m(), cfg.horizon);
        let a = &cfg.predictor.a_hat;
        let b = &cfg.predictor.b_hat;

        let mut powers = Vec::with_capacity(tf);
        powers.push(Matrix::identity(n, n));
        for k in 1..tf {
            powers.push(a * &powers[k - 1]);
        }
        let mut free = Matrix::zeros(n * tf, n);
        let mut forced = Matrix::zeros(n * tf, m * tf);
        for k in 0..tf {
            free.rows_mut(k * n, n).copy_from(&powers[k]);
            for j in 0..k {
                forced
                    .view_mut((k * n, j * m), (n, m))
                    .copy_from(&(&powers[k - 1 - j] * b));
            }
        }
        let h = forced.transpose() * &forced * cfg.state_weight
            + Matrix::identity(m * tf, m * tf) * cfg.input_weight;
        let hessian = Cholesky::new(h).ok_or_else(|| Error::Numerical("condensed Hessian is not positive definite".into()))?;
        Ok(HorizonController { cfg, free, forced, hessian })
    }

    pub fn config(&self) -> &DpcConfig {
        &self.cfg
    }

    /// Objective of an arbitrary input stack `(u_0, …, u_{T_f−1})`,
    /// evaluated by rolling the predictor forward.
    pub fn objective(&self, x_now: &Vector, inputs: &Matrix) -> f64 {
        let (a, b) = (&self.cfg.predictor.a_hat, &self.cfg.predictor.b_hat);
        let mut x = x_now.clone();
        let mut cost = 0.0;
        for k in 0..self.cfg.horizon {
            let u = inputs.column(k);
            cost += self.cfg.state_weight * (&x - &self.cfg.reference).norm_squared()
                + self.cfg.input_weight * u.norm_squared();
            x = a * &x + b * u;
        }
        cost
    }

    pub fn solve(&self, x_now: &Vector) -> Result<HorizonSolution> {
        let (n, m, tf) = (self.cfg.predictor.n(), self.cfg.predictor.m(), self.cfg.horizon);
        if x_now.len() != n {
            return Err(Error::dimension(format!("state has length {}, predictor has n = {n}", x_now.len())));
        }
        let target = Vector::from_iterator(n * tf, (0..tf).flat_map(|_| self.cfg.reference.iter().copied()));
        let rhs = self.forced.transpose() * (target - &self.free * x_now) * self.cfg.state_weight;
        let stacked = self.hessian.solve(&rhs);
        let inputs = Matrix::from_column_slice(m, tf, stacked.as_slice());
        let predicted = Matrix::from_column_slice(n, tf, (&self.free * x_now + &self.forced * &stacked).as_slice());
        let cost = self.objective(x_now, &inputs);
        Ok(HorizonSolution {
            inputs: Signal::from_matrix(0, inputs)?,
            predicted: Signal::from_matrix(0, predicted)?,
            cost,
        })
    }
}

pub fn predict_one_step(p: &PredictorModel, x: &Vector, u: &Vector) -> Result<Vector> {
    p.predict(x, u)
}

pub fn solve_horizon(cfg: &DpcConfig, x_now: &Vector) -> Result<HorizonSolution> {
    HorizonController::new(cfg.clone())?.solve(x_now)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopRun {
    /// `x(0) … x(steps)`, one column per time.
    #[serde(with = "crate::linalg::rows")]
    pub x: Matrix,
    /// `u(0) … u(steps−1)`; zero columns when `steps = 0`.
    #[serde(with = "crate::linalg::rows")]
    pub u: Matrix,
    /// `q‖x(t) − r‖² + ρ_u‖u(t)‖²` for each executed step.
    pub stage_costs: Vec<f64>,
    pub tracking_cost: f64,
}

/// Closes the loop on the true plant: at each step solve the horizon problem
/// at the measured state, apply the first input, and advance the plant with
/// process noise from the closed-loop stream of `noise.seed`.
pub fn receding_horizon(
    cfg: &DpcConfig,
    sys: &LtiSystem,
    x0: &Vector,
    steps: usize,
    noise: &NoiseModel,
) -> Result<ClosedLoopRun> {
    sys.validate()?;
    check_state(sys, x0)?;
    if cfg.predictor.n() != sys.n() || cfg.predictor.m() != sys.m() {
        return Err(Error::dimension(format!(
            "predictor is ({}, {}), plant is ({}, {})",
            cfg.predictor.n(),
            cfg.predictor.m(),
            sys.n(),
            sys.m()
        )));
    }
    let controller = HorizonController::new(cfg.clone())?;
    let (n, m) = (sys.n(), sys.m());
    let w = noise.draws(n, steps, streams::CLOSED_LOOP_NOISE)?;
    let mut xs = Matrix::zeros(n, steps + 1);
    let mut us = Matrix::zeros(m, steps);
    let mut stage_costs = Vec::with_capacity(steps);
    xs.set_column(0, x0);
    for t in 0..steps {
        let x = xs.column(t).into_owned();
        let u = controller.solve(&x)?.inputs.as_matrix().column(0).into_owned();
        stage_costs.push(
            cfg.state_weight * (&x - &cfg.reference).norm_squared() + cfg.input_weight * u.norm_squared(),
        );
        let next = sys.step(&x, &u) + w.column(t);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("closed loop diverged at step {t}")));
        }
        xs.set_column(t + 1, &next);
        us.set_column(t, &u);
    }
    let tracking_cost = stage_costs.iter().sum();
    Ok(ClosedLoopRun { x: xs, u: us, stage_costs, tracking_cost })
}

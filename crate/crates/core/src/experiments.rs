//! End-to-end study: excite the plant with scaled copies of one input,
//! certify and identify each dataset, then close the loop with the
//! identified predictors and compare tracking cost.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpc::{receding_horizon, ClosedLoopRun, DpcConfig};
use crate::error::{Error, Result, StageExt};
use crate::excitation::{design_input, gaussian_input, scale_input};
use crate::io;
use crate::linalg::Vector;
use crate::plot::{self, Panel, Series};
use crate::robustness::{certify, estimate_rho0, LtiSystem, Rho0Estimate, Rho0Options, RobustnessCertificate};
use crate::signals::Signal;
use crate::simulate::{simulate, NoiseModel, TrajectoryDataset};
use crate::sysid::{error_bound, ls_estimate, ErrorBound, PredictorModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub system: LtiSystem,
    /// Data length `T`.
    #[serde(rename = "T")]
    pub t: usize,
    /// Standard deviation of the base input draw.
    pub base_input_std: f64,
    /// When set, the base input is rescaled to this order-`n+1` level
    /// instead of using `base_input_std`.
    pub target_alpha: Option<f64>,
    /// Multipliers applied to the base input, one dataset each.
    pub scalings: Vec<f64>,
    /// Process-noise standard deviation, for data collection and closed loop.
    pub noise_std: f64,
    pub horizon: usize,
    pub steps: usize,
    pub reference: Vec<f64>,
    /// Closed-loop initial state.
    pub x0: Vec<f64>,
    /// Initial state for data collection.
    pub data_x0: Vec<f64>,
    pub seed: u64,
    pub rho0: Rho0Options,
    /// User-supplied lower bound on ρ₀; when absent the estimate is used.
    pub rho: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: LtiSystem::double_integrator(),
            t: 50,
            base_input_std: 0.1,
            target_alpha: None,
            scalings: vec![1.0, 0.05, 0.01],
            noise_std: 0.01,
            horizon: 10,
            steps: 60,
            reference: vec![1.0, 0.0],
            x0: vec![0.0, 0.0],
            data_x0: vec![0.0, 0.0],
            seed: 0,
            rho0: Rho0Options::default(),
            rho: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let n = self.system.n();
        for (name, v) in [("reference", &self.reference), ("x0", &self.x0), ("data_x0", &self.data_x0)] {
            if v.len() != n {
                return Err(Error::dimension(format!("{name} has length {}, system has n = {n}", v.len())));
            }
        }
        if self.scalings.is_empty() {
            return Err(Error::validation("at least one scaling is required"));
        }
        if self.t < n + 1 {
            return Err(Error::validation(format!("T = {} is shorter than n + 1", self.t)));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::validation("rho must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub scaling: f64,
    pub alpha: f64,
    pub delta_cert: f64,
    pub delta_actual: f64,
    /// `‖[Â B̂] − [A B]‖₂`.
    pub id_error: f64,
    pub error_bound: ErrorBound,
    pub tracking_cost: f64,
}

/// Everything produced for one seed.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub datasets: Vec<TrajectoryDataset>,
    pub certificates: Vec<RobustnessCertificate>,
    pub predictors: Vec<PredictorModel>,
    pub runs: Vec<ClosedLoopRun>,
    pub records: Vec<ScalingRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub seeds: Vec<u64>,
    /// `costs[s][i]`: tracking cost of scaling `i` under seed `s`.
    pub costs: Vec<Vec<f64>>,
    pub mean_tracking_cost: Vec<f64>,
    /// Mean cost strictly increases as |scaling| decreases.
    pub ordered_by_excitation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Multi-start estimate of ρ₀ (an upper bound on the true value).
    pub rho0_estimate: f64,
    pub rho0_direction: Vec<f64>,
    pub rho_used: f64,
    pub seed: u64,
    pub records: Vec<ScalingRecord>,
    pub batch: Option<BatchSummary>,
}

/// Seeds written next to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub seed: u64,
    pub batch_seeds: Vec<u64>,
    pub rho0_seed: u64,
    pub generator: String,
}

pub fn base_input(cfg: &ExperimentConfig, seed: u64) -> Result<Signal> {
    let (n, m) = (cfg.system.n(), cfg.system.m());
    match cfg.target_alpha {
        Some(alpha) => design_input(m, cfg.t, n + 1, alpha, seed),
        None => gaussian_input(m, cfg.t, cfg.base_input_std, seed),
    }
}

pub fn rho0_for(cfg: &ExperimentConfig) -> Result<Rho0Estimate> {
    estimate_rho0(&cfg.system, &cfg.rho0)
}

/// One full pass for `seed` with a given `ρ`.
pub fn run_seed(cfg: &ExperimentConfig, rho: f64, seed: u64) -> Result<SeedOutcome> {
    cfg.validate()?;
    let sys = &cfg.system;
    let n = sys.n();
    let base = base_input(cfg, seed).stage("design")?;
    let data_x0 = Vector::from_row_slice(&cfg.data_x0);
    let loop_x0 = Vector::from_row_slice(&cfg.x0);
    let reference = Vector::from_row_slice(&cfg.reference);
    let noise = NoiseModel { std: cfg.noise_std, seed };

    let mut out = SeedOutcome {
        seed,
        datasets: Vec::new(),
        certificates: Vec::new(),
        predictors: Vec::new(),
        runs: Vec::new(),
        records: Vec::new(),
    };
    for &c in &cfg.scalings {
        let u = scale_input(&base, c).stage("design")?;
        let data = simulate(sys, &data_x0, &u, &noise).stage("simulate")?;
        let cert = certify(&data.u, &data.x_past(), rho, n).stage("certify")?;
        let predictor = ls_estimate(&data.u, &data.x).stage("identify")?;
        let id_error = predictor.spectral_error(sys).stage("identify")?;
        let bound = error_bound(&data.w, &data.u, &data.x).stage("identify")?;
        let dpc = DpcConfig::new(cfg.horizon, reference.clone(), predictor.clone());
        let run = receding_horizon(&dpc, sys, &loop_x0, cfg.steps, &noise).stage("closed-loop")?;
        out.records.push(ScalingRecord {
            scaling: c,
            alpha: cert.alpha,
            delta_cert: cert.delta_cert,
            delta_actual: cert.delta_actual,
            id_error,
            error_bound: bound,
            tracking_cost: run.tracking_cost,
        });
        out.datasets.push(data.with_tag(format!("scaling={c}")));
        out.certificates.push(cert);
        out.predictors.push(predictor);
        out.runs.push(run);
    }
    Ok(out)
}

/// Runs `seeds` in parallel and summarises tracking cost per scaling.
pub fn run_batch(cfg: &ExperimentConfig, rho: f64, seeds: &[u64]) -> Result<BatchSummary> {
    let costs: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| run_seed(cfg, rho, s).map(|o| o.records.iter().map(|r| r.tracking_cost).collect()))
        .collect::<Result<_>>()?;
    let k = cfg.scalings.len();
    let mean_tracking_cost: Vec<f64> = (0..k)
        .map(|i| costs.iter().map(|c| c[i]).sum::<f64>() / costs.len().max(1) as f64)
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| cfg.scalings[b].abs().total_cmp(&cfg.scalings[a].abs()));
    let ordered_by_excitation = order.windows(2).all(|w| mean_tracking_cost[w[0]] < mean_tracking_cost[w[1]]);
    Ok(BatchSummary { seeds: seeds.to_vec(), costs, mean_tracking_cost, ordered_by_excitation })
}

pub fn trajectories_svg(cfg: &ExperimentConfig, outcome: &SeedOutcome) -> String {
    let n = cfg.system.n();
    let panels: Vec<Panel> = (0..n)
        .map(|i| Panel {
            y_label: format!("x{}(t)", i + 1),
            guide: cfg.reference.get(i).copied(),
            series: outcome
                .runs
                .iter()
                .zip(&outcome.records)
                .map(|(run, rec)| Series {
                    label: format!("σ₁ = {:.2e}", rec.delta_actual),
                    points: run.x.row(i).iter().enumerate().map(|(t, &v)| (t as f64, v)).collect(),
                })
                .collect(),
        })
        .collect();
    plot::render("Closed-loop state trajectories", "t", &panels)
}

/// Full reproduction: writes `config.json`, `seeds.json`, `report.json`,
/// one `dataset_<i>/` and `closed_loop_<i>.csv` per scaling,
/// `trajectories.svg`, and `batch.csv` when `batch > 0`.
pub fn reproduce(cfg: &ExperimentConfig, out_dir: &Path, batch: usize) -> Result<ExperimentReport> {
    cfg.validate().stage("config")?;
    io::ensure_dir(out_dir).stage("output")?;
    let est = rho0_for(cfg).stage("rho0")?;
    let rho = cfg.rho.unwrap_or(est.value);
    let outcome = run_seed(cfg, rho, cfg.seed)?;

    let batch_seeds: Vec<u64> = (0..batch as u64).map(|i| cfg.seed + i).collect();
    let summary = if batch > 0 { Some(run_batch(cfg, rho, &batch_seeds)?) } else { None };

    let write = || -> Result<()> {
        io::write_json(out_dir.join("config.json"), cfg)?;
        io::write_json(
            out_dir.join("seeds.json"),
            &SeedManifest {
                seed: cfg.seed,
                batch_seeds: batch_seeds.clone(),
                rho0_seed: cfg.rho0.seed,
                generator: "ChaCha20, seed_from_u64(seed), one stream id per purpose".into(),
            },
        )?;
        for (i, (data, run)) in outcome.datasets.iter().zip(&outcome.runs).enumerate() {
            io::write_dataset(out_dir.join(format!("dataset_{}", i + 1)), data)?;
            io::write_closed_loop_csv(out_dir.join(format!("closed_loop_{}.csv", i + 1)), run)?;
        }
        std::fs::write(out_dir.join("trajectories.svg"), trajectories_svg(cfg, &outcome))
            .map_err(|e| Error::io(out_dir.join("trajectories.svg"), e))?;
        if let Some(s) = &summary {
            let mut csv = String::from("seed");
            for i in 1..=cfg.scalings.len() {
                csv.push_str(&format!(",cost_{i}"));
            }
            csv.push('\n');
            for (seed, costs) in s.seeds.iter().zip(&s.costs) {
                csv.push_str(&seed.to_string());
                costs.iter().for_each(|c| csv.push_str(&format!(",{c}")));
                csv.push('\n');
            }
            std::fs::write(out_dir.join("batch.csv"), csv).map_err(|e| Error::io(out_dir.join("batch.csv"), e))?;
        }
        Ok(())
    };
    write().stage("output")?;

    let report = ExperimentReport {
        rho0_estimate: est.value,
        rho0_direction: est.direction.stacked().iter().copied().collect(),
        rho_used: rho,
        seed: cfg.seed,
        records: outcome.records,
        batch: summary,
    };
    io::write_json(out_dir.join("report.json"), &report).stage("output")?;
    Ok(report)
}

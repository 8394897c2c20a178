#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use robustfl::{LtiSystem, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Controllable `(A, B)` with `‖A‖₂ ≤ 1.1`, drawn until the controllability
/// matrix is comfortably full rank.
pub fn random_controllable(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LtiSystem {
    loop {
        let mut a = normal_matrix(rng, n, n) / (n as f64).sqrt();
        let norm = a.clone().singular_values().max();
        if norm > 1.1 {
            a *= 1.1 / norm;
        }
        let b = normal_matrix(rng, n, m);
        let sys = LtiSystem::new(a, b).unwrap();
        let sv = sys.controllability_matrix().singular_values();
        if sv.min() > 1e-3 * sv.max() {
            return sys;
        }
    }
}

/// Round to `digits` significant figures.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let exp = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - exp);
    (v * scale).round() / scale
}

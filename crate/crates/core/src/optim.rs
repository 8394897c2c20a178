//! Small derivative-free local minimizer (Nelder–Mead with standard
//! coefficients: reflection 1, expansion 2, contraction ½, shrink ½).

use crate::linalg::Vector;

pub(crate) struct NelderMead {
    pub initial_step: f64,
    /// Stop once the spread of objective values falls below `tol` and the
    /// simplex diameter below `√tol`.
    pub tol: f64,
    pub max_iter: usize,
}

pub(crate) struct Minimum {
    pub x: Vector,
    pub value: f64,
    pub evaluations: usize,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&Vector) -> f64>(&self, mut f: F, x0: &Vector) -> Minimum {
        let dim = x0.len();
        let mut evaluations = 0usize;
        let mut eval = |x: &Vector, count: &mut usize| {
            *count += 1;
            f(x)
        };

        let mut simplex: Vec<(Vector, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(x0, &mut evaluations);
        simplex.push((x0.clone(), v0));
        for i in 0..dim {
            let mut x = x0.clone();
            x[i] += self.initial_step;
            let v = eval(&x, &mut evaluations);
            simplex.push((x, v));
        }

        for _ in 0..self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| (x - &simplex[0].0).amax())
                .fold(0.0, f64::max);
            if (worst - best).abs() <= self.tol && diameter <= self.tol.sqrt() {
                break;
            }

            let centroid = simplex[..dim]
                .iter()
                .fold(Vector::zeros(dim), |acc, (x, _)| acc + x)
                / dim as f64;
            let worst_x = simplex[dim].0.clone();

            let reflected = &centroid + (&centroid - &worst_x);
            let fr = eval(&reflected, &mut evaluations);
            if fr < simplex[0].1 {
                let expanded = &centroid + (&centroid - &worst_x) * 2.0;
                let fe = eval(&expanded, &mut evaluations);
                simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < simplex[dim].1 {
                let c = &centroid + (&reflected - &centroid) * 0.5;
                let v = eval(&c, &mut evaluations);
                (c, v)
            } else {
                let c = &centroid + (&worst_x - &centroid) * 0.5;
                let v = eval(&c, &mut evaluations);
                (c, v)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (contracted, fc);
                continue;
            }
            let best_x = simplex[0].0.clone();
            for entry in simplex.iter_mut().skip(1) {
                let x = &best_x + (&entry.0 - &best_x) * 0.5;
                let v = eval(&x, &mut evaluations);
                *entry = (x, v);
            }
        }

        let (x, value) = simplex
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("simplex is never empty");
        Minimum { x, value, evaluations }
    }
}

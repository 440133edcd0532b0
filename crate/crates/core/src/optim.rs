//! Derivative-free minimisation used by every fitting stage.
//!
//! A box-constrained Nelder–Mead simplex with dimension-adaptive
//! coefficients (Gao & Han, 2012), plus a multi-start driver whose winner is
//! chosen by `(value, start index)` so results never depend on scheduling.

use rayon::prelude::*;

/// Axis-aligned box. Points are projected onto it before every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "bound vectors differ in length");
        debug_assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(lo, hi);
        }
    }

    /// True when any coordinate sits on a finite bound.
    pub fn touches(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(&xi, (&lo, &hi))| (lo.is_finite() && xi <= lo) || (hi.is_finite() && xi >= hi))
    }
}

#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop once `f_worst - f_best <= ftol * (1 + |f_best|)` ...
    pub ftol: f64,
    /// ... and the simplex diameter is below `xtol`.
    pub xtol: f64,
    /// Edge length of the initial simplex, per coordinate.
    pub initial_step: Vec<f64>,
}

impl NelderMead {
    pub fn new(dim: usize) -> Self {
        Self {
            max_iterations: 200 * dim.max(1),
            ftol: 1e-10,
            xtol: 1e-8,
            initial_step: vec![0.1; dim],
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.initial_step.iter_mut().for_each(|s| *s = step);
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_ftol(mut self, ftol: f64) -> Self {
        self.ftol = ftol;
        self
    }

    pub fn minimize<F>(&self, f: F, x0: &[f64], bounds: &Bounds) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        self.minimize_observed(f, x0, bounds, |_| std::ops::ControlFlow::Continue(()))
    }

    /// Like [`minimize`](Self::minimize) but calls `observe` after every
    /// iteration with the current best vertex; returning `Break` stops early.
    pub fn minimize_observed<F, O>(
        &self,
        mut f: F,
        x0: &[f64],
        bounds: &Bounds,
        mut observe: O,
    ) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
        O: FnMut(&IterationRecord) -> std::ops::ControlFlow<()>,
    {
        let n = x0.len();
        assert_eq!(bounds.dim(), n, "bounds dimension mismatch");
        assert_eq!(
            self.initial_step.len(),
            n,
            "initial step dimension mismatch"
        );
        let nf = n as f64;
        let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf.max(1.0));
        let rho = 0.75 - 1.0 / (2.0 * nf.max(1.0));
        let sigma = 1.0 - 1.0 / nf.max(1.0);
        let sigma = if n == 1 { 0.5 } else { sigma };

        let mut evaluations = 0usize;
        let mut eval = |x: &mut Vec<f64>, evaluations: &mut usize| -> f64 {
            bounds.project(x);
            *evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut start = x0.to_vec();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(&mut start, &mut evaluations);
        simplex.push((start.clone(), f0));
        for i in 0..n {
            let mut v = start.clone();
            let step = self.initial_step[i];
            v[i] += step;
            // flip the step inward when it lands on a bound
            if v[i] > bounds.upper[i] {
                v[i] = start[i] - step;
            }
            let fv = eval(&mut v, &mut evaluations);
            simplex.push((v, fv));
        }

        let mut iterations = 0;
        let mut converged = false;
        let order = |s: &mut Vec<(Vec<f64>, f64)>| {
            s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        };
        order(&mut simplex);

        while iterations < self.max_iterations {
            let f_best = simplex[0].1;
            let f_worst = simplex[n].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(v, _)| max_abs_diff(v, &simplex[0].0))
                .fold(0.0, f64::max);
            if f_worst - f_best <= self.ftol * (1.0 + f_best.abs()) && diameter <= self.xtol {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / nf;
                }
            }
            let worst = simplex[n].0.clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let mut xr = along(alpha);
            let fr = eval(&mut xr, &mut evaluations);
            if fr < simplex[0].1 {
                let mut xe = along(alpha * gamma);
                let fe = eval(&mut xe, &mut evaluations);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let outside = fr < simplex[n].1;
                let mut xc = if outside {
                    along(alpha * rho)
                } else {
                    along(-rho)
                };
                let fc = eval(&mut xc, &mut evaluations);
                let accept = if outside { fc <= fr } else { fc < simplex[n].1 };
                if accept {
                    simplex[n] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for (v, fv) in simplex.iter_mut().skip(1) {
                        for (x, b) in v.iter_mut().zip(&best) {
                            *x = b + sigma * (*x - b);
                        }
                        *fv = eval(v, &mut evaluations);
                    }
                }
            }
            order(&mut simplex);

            let record = IterationRecord {
                iteration: iterations,
                best_x: simplex[0].0.clone(),
                best_value: simplex[0].1,
            };
            if observe(&record).is_break() {
                break;
            }
        }

        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            iterations,
            evaluations,
            converged,
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub best_x: Vec<f64>,
    pub best_value: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Runs one local search per start point (in parallel) and keeps the best.
/// Ties go to the lower start index.
pub fn multi_start<F>(
    optimizer: &NelderMead,
    f: F,
    starts: &[Vec<f64>],
    bounds: &Bounds,
) -> Option<(usize, Minimum)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| (i, optimizer.minimize(&f, x0, bounds)))
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|(_, m)| m.value.is_finite())
        .min_by(|(ia, a), (ib, b)| a.value.total_cmp(&b.value).then(ia.cmp(ib)))
}

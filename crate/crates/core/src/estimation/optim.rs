//! Quasi-Newton (BFGS) gradient ascent with a step-halving line search.
//!
//! Only objective values and gradients are used. A trial step is accepted
//! only if it satisfies the Armijo condition, so the sequence of accepted
//! objective values is non-decreasing.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub max_iters: usize,
    /// Upper bound on the Euclidean length of a trial step.
    pub step_size: f64,
    /// Stop once the gradient norm drops below this.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Inverse-Hessian approximation for the minimization of `-f`.
struct InverseHessian {
    n: usize,
    h: Vec<f64>,
    scaled: bool,
}

impl InverseHessian {
    fn identity(n: usize) -> Self {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        Self { n, h, scaled: false }
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.h[i * self.n..(i + 1) * self.n], g)).collect()
    }

    /// BFGS update with step `s` and gradient change `y` of `-f`.
    fn update(&mut self, s: &[f64], y: &[f64]) {
        let n = self.n;
        let sy = dot(s, y);
        if !(sy > 1e-12 * norm(s) * norm(y)) {
            return;
        }
        if !self.scaled {
            let scale = sy / dot(y, y);
            *self = Self::identity(n);
            self.h.iter_mut().for_each(|v| *v *= scale);
            self.scaled = true;
        }
        let rho = 1.0 / sy;
        let hy = self.apply(y);
        let yhy = dot(y, &hy);
        let coef = (1.0 + rho * yhy) * rho;
        for i in 0..n {
            for j in 0..n {
                self.h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }
}

/// Maximize `f` from `x0`. `f` returns the value and gradient; a
/// non-finite value marks an infeasible point that the line search backs
/// away from.
pub fn maximize<F>(f: F, x0: Vec<f64>, opts: &AscentOptions) -> AscentOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut history = vec![fx];
    if !fx.is_finite() {
        return AscentOutcome { x, value: fx, grad_norm: f64::NAN, iterations: 0, converged: false, history };
    }
    let mut hess = InverseHessian::identity(n);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        if norm(&g) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d = hess.apply(&g);
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            hess = InverseHessian::identity(n);
            d = g.clone();
            slope = dot(&g, &d);
        }
        let len = norm(&d);
        let mut t = if len > opts.step_size { opts.step_size / len } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft >= fx + ARMIJO * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // No ascent possible along the search direction at working precision.
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        hess.update(&s, &y);
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
    }
    if !converged && norm(&g) < opts.tol {
        converged = true;
    }
    AscentOutcome { grad_norm: norm(&g), x, value: fx, iterations, converged, history }
}

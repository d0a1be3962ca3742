//! Limited-memory BFGS for smooth, strongly convex objectives.
//!
//! Two-loop recursion with a backtracking Armijo search. Near the optimum
//! of a large sum the change in objective value drops below rounding, so a
//! step is also accepted when the value is unchanged up to a few ulps and
//! the gradient shrinks.

use std::collections::VecDeque;

use nalgebra::DVector;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            tolerance: 1e-8,
            max_iterations: 500,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn minimize<F>(mut objective: F, x0: DVector<f64>, opts: &LbfgsOptions) -> LbfgsOutcome
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    while g.norm() > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let mut dir = -two_loop(&g, &history);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            history.clear();
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        // Unscaled first step: keep the trial inside a unit ball.
        let mut step = if history.is_empty() {
            (1.0 / dir.norm()).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = &x + &dir * step;
            let (ft, gt) = objective(&trial);
            let flat = (ft - f).abs() <= 8.0 * f64::EPSILON * f.abs().max(1.0);
            if ft <= f + opts.armijo * step * slope || (flat && gt.norm() < g.norm()) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }

    let grad_norm = g.norm();
    LbfgsOutcome {
        x,
        value: f,
        grad_norm,
        iterations,
        converged: grad_norm <= opts.tolerance,
    }
}

fn two_loop(g: &DVector<f64>, history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    q
}

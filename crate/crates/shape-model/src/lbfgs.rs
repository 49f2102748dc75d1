//! Limited-memory BFGS with backtracking Armijo line search.
//!
//! Minimizes a smooth objective given a callback returning the value and
//! filling the gradient. Convergence at gradient norm below `grad_tol` or at
//! the iteration cap.

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iterations: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            max_iterations: 500,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Objective at each accepted iterate, starting with the initial point.
    pub values: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f`, which must return the objective and write the gradient.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, cfg: &LbfgsConfig) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    let mut values = vec![value];

    let mut s_list: Vec<Vec<f64>> = Vec::new();
    let mut y_list: Vec<Vec<f64>> = Vec::new();
    let mut rho_list: Vec<f64> = Vec::new();

    let mut iterations = 0;
    let mut converged = norm(&grad) < cfg.grad_tol;

    while !converged && iterations < cfg.max_iterations {
        // Two-loop recursion for the search direction.
        let mut q = grad.clone();
        let k = s_list.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let a = rho_list[i] * dot(&s_list[i], &q);
            alphas[i] = a;
            for (qj, yj) in q.iter_mut().zip(&y_list[i]) {
                *qj -= a * yj;
            }
        }
        let gamma = if k > 0 {
            let i = k - 1;
            dot(&s_list[i], &y_list[i]) / dot(&y_list[i], &y_list[i])
        } else {
            1.0
        };
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
        for i in 0..k {
            let beta = rho_list[i] * dot(&y_list[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_list[i]) {
                *qj += (alphas[i] - beta) * sj;
            }
        }
        let direction: Vec<f64> = q.iter().map(|v| -v).collect();

        let mut slope = dot(&grad, &direction);
        let descent = if slope < 0.0 {
            direction
        } else {
            // Fall back to steepest descent if curvature information is stale.
            slope = -dot(&grad, &grad);
            grad.iter().map(|g| -g).collect()
        };

        // Weak-Wolfe line search by bracketing: sufficient decrease plus a
        // curvature condition, which guarantees sᵀy > 0 for the update pair.
        let c1 = 1e-4;
        let c2 = 0.9;
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        let mut step = 1.0f64;
        let mut new_x = vec![0.0; n];
        let mut new_grad = vec![0.0; n];
        let mut new_value = f64::INFINITY;
        let mut accepted = false;
        // Best point meeting sufficient decrease, kept in case the curvature
        // condition never holds (e.g. at machine precision).
        let mut fallback: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for _ in 0..60 {
            for i in 0..n {
                new_x[i] = x[i] + step * descent[i];
            }
            new_value = f(&new_x, &mut new_grad);
            if !new_value.is_finite() || new_value > value + c1 * step * slope {
                hi = step;
                step = 0.5 * (lo + hi);
            } else if dot(&new_grad, &descent) < c2 * slope {
                fallback = Some((new_value, new_x.clone(), new_grad.clone()));
                lo = step;
                step = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * step };
            } else {
                accepted = true;
                break;
            }
            if hi.is_finite() && (hi - lo) < 1e-16 {
                break;
            }
        }
        if !accepted {
            if let Some((fv, fx, fg)) = fallback {
                new_value = fv;
                new_x = fx;
                new_grad = fg;
                accepted = true;
            }
        }
        if accepted {
            let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) {
                if s_list.len() == cfg.memory {
                    s_list.remove(0);
                    y_list.remove(0);
                    rho_list.remove(0);
                }
                rho_list.push(1.0 / sy);
                s_list.push(s);
                y_list.push(y);
            }
            x.copy_from_slice(&new_x);
            grad.copy_from_slice(&new_grad);
            value = new_value;
        }

        iterations += 1;
        if !accepted {
            break; // no progress possible at machine precision
        }
        values.push(value);
        converged = norm(&grad) < cfg.grad_tol;
    }

    LbfgsOutcome {
        x,
        value,
        iterations,
        values,
        converged,
    }
}

//! BFGS maximizer with numerical gradients.
//!
//! The objective is maximized over an unconstrained vector; evaluations may
//! return `-inf` to mark infeasible points, which the backtracking line
//! search treats as rejections rather than errors.

/// Relative step for central-difference gradients.
pub const GRAD_STEP: f64 = 1e-5;
/// Relative step for the central-difference Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct BfgsOptions {
    /// Convergence threshold on the gradient max-norm.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { grad_tol: 1e-6, max_iters: 400 }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    /// Objective value at `x` (the maximized function).
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn rel_step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Central-difference gradient with per-coordinate relative steps. Falls
/// back to a one-sided stencil when a perturbed point is infeasible.
pub fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel: f64) -> Vec<f64> {
    let f0 = f(x);
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = rel_step(x[j], rel);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        grad[j] = if fp.is_finite() && fm.is_finite() {
            (fp - fm) / (2.0 * h)
        } else if fp.is_finite() {
            (fp - f0) / h
        } else if fm.is_finite() {
            (f0 - fm) / h
        } else {
            0.0
        };
    }
    grad
}

/// Symmetric central-difference Hessian.
pub fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let f0 = f(x);
    let h: Vec<f64> = x.iter().map(|&xi| rel_step(xi, rel)).collect();
    let mut m = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        m[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            let fmm = f(&xp);
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Maximize `f` from `x0` by BFGS with an Armijo backtracking line search.
pub fn maximize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult {
    let n = x0.len();
    let g = |x: &[f64]| -f(x); // minimize the negation

    let mut x = x0.to_vec();
    let mut fx = g(&x);
    if !fx.is_finite() {
        return BfgsResult {
            x,
            value: -fx,
            grad_norm: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    }
    let mut grad = numerical_gradient(&g, &x, GRAD_STEP);
    // Inverse Hessian approximation.
    let mut h_inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut first_update = true;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        if max_norm(&grad) < opts.grad_tol {
            return BfgsResult {
                x,
                value: -fx,
                grad_norm: max_norm(&grad),
                iterations: iter,
                converged: true,
            };
        }

        // Search direction d = -H_inv * grad.
        let mut dir = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                dir[i] -= h_inv[i][j] * grad[j];
            }
        }
        let mut slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope >= 0.0 {
            // Not a descent direction; fall back to steepest descent.
            for i in 0..n {
                dir[i] = -grad[i];
                h_inv[i].iter_mut().enumerate().for_each(|(j, v)| {
                    *v = if i == j { 1.0 } else { 0.0 };
                });
            }
            first_update = true;
            slope = -grad.iter().map(|gi| gi * gi).sum::<f64>();
        }

        // Armijo backtracking. The first trial is capped so no coordinate
        // moves more than one unit in transformed space; raw-gradient
        // directions can otherwise teleport onto a distant flat plateau
        // whose vanishing numerical gradient masquerades as convergence.
        const C1: f64 = 1e-4;
        const MAX_COORD_STEP: f64 = 1.0;
        let dir_inf = max_norm(&dir);
        let mut alpha = if dir_inf > MAX_COORD_STEP { MAX_COORD_STEP / dir_inf } else { 1.0 };
        let mut accepted = None;
        for _ in 0..50 {
            let xt: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
            let ft = g(&xt);
            if ft.is_finite() && ft <= fx + C1 * alpha * slope {
                accepted = Some((xt, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No acceptable step along this direction.
            break;
        };

        let grad_new = numerical_gradient(&g, &x_new, GRAD_STEP);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();

        if sy > 1e-12 * s.iter().map(|v| v * v).sum::<f64>().sqrt() * yy.sqrt() {
            if first_update {
                // Scale the seed matrix to the problem's curvature.
                let scale = sy / yy;
                for i in 0..n {
                    for j in 0..n {
                        h_inv[i][j] = if i == j { scale } else { 0.0 };
                    }
                }
                first_update = false;
            }
            // H <- (I - r s y') H (I - r y s') + r s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| h_inv[i][j] * y[j]).sum::<f64>())
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] += rho * rho * yhy * s[i] * s[j]
                        - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * s[i] * s[j];
                }
            }
        }

        let f_change = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        grad = grad_new;

        if f_change < 1e-13 * (1.0 + fx.abs()) && max_norm(&s) < 1e-12 {
            break;
        }
    }

    let gn = max_norm(&grad);
    BfgsResult {
        x,
        value: -fx,
        grad_norm: gn,
        iterations,
        converged: gn < opts.grad_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn maximizes_concave_quadratic() {
        let f = |x: &[f64]| -((x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2));
        let r = maximize(f, &[0.0, 0.0], &BfgsOptions::default());
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn handles_rosenbrock_valley() {
        let f = |x: &[f64]| {
            -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        };
        let r = maximize(f, &[-1.2, 1.0], &BfgsOptions { grad_tol: 1e-5, max_iters: 2000 });
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn respects_infeasible_regions() {
        // -inf outside x0 > 0; optimum at ln-transformed-like boundary-free point.
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::NEG_INFINITY
            } else {
                -(x[0].ln().powi(2)) - x[1] * x[1]
            }
        };
        let r = maximize(f, &[3.0, 0.5], &BfgsOptions::default());
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(r.x[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn hessian_of_quadratic() {
        let f = |x: &[f64]| -(2.0 * x[0] * x[0] + 3.0 * x[0] * x[1] + 4.0 * x[1] * x[1]);
        let h = numerical_hessian(&f, &[0.3, -0.2], HESSIAN_STEP);
        assert_abs_diff_eq!(h[0][0], -4.0, epsilon = 1e-5);
        assert_abs_diff_eq!(h[0][1], -3.0, epsilon = 1e-5);
        assert_abs_diff_eq!(h[1][1], -8.0, epsilon = 1e-5);
    }
}

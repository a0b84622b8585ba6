//! Damped least squares (Levenberg-Marquardt) with a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of the residual sum of squares falls below this.
    pub ftol: f64,
    /// Stop when the relative parameter step falls below this.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-12,
            xtol: 1e-10,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Standard errors from `(J^T J)^-1 rss / (m - n)`; infinite when singular.
    pub std_errors: Vec<f64>,
}

fn eval<F: FnMut(&[f64], &mut [f64])>(f: &mut F, p: &[f64], r: &mut [f64]) -> f64 {
    f(p, r);
    let s: f64 = r.iter().map(|v| v * v).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

fn jacobian<F: FnMut(&[f64], &mut [f64])>(f: &mut F, p: &[f64], m: usize) -> DMatrix<f64> {
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut q = p.to_vec();
    for i in 0..n {
        let h = 1e-6 * p[i].abs().max(1e-4);
        q[i] = p[i] + h;
        f(&q, &mut rp);
        q[i] = p[i] - h;
        f(&q, &mut rm);
        q[i] = p[i];
        for k in 0..m {
            jac[(k, i)] = (rp[k] - rm[k]) / (2.0 * h);
        }
    }
    jac
}

/// Minimize `sum r_k(p)^2` where `residuals(p, r)` fills `r` (length `m`).
pub fn levenberg_marquardt<F>(mut residuals: F, p0: &[f64], m: usize, opts: &LmOptions) -> LmOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    let mut rss = eval(&mut residuals, &p, &mut r);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&mut residuals, &p, m);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        if g.amax() < 1e-300 {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            for i in 0..n {
                trial[i] = p[i] + step[i];
            }
            let rss_trial = eval(&mut residuals, &trial, &mut r_trial);
            if rss_trial < rss {
                let rel_f = (rss - rss_trial) / rss.max(f64::MIN_POSITIVE);
                let rel_x = step
                    .iter()
                    .zip(&p)
                    .map(|(s, x)| s.abs() / x.abs().max(1e-8))
                    .fold(0.0, f64::max);
                p.copy_from_slice(&trial);
                r.copy_from_slice(&r_trial);
                rss = rss_trial;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                if rel_f < opts.ftol || rel_x < opts.xtol {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no downhill step at any damping: stationary point
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let jac = jacobian(&mut residuals, &p, m);
    let jtj = jac.transpose() * &jac;
    let dof = (m as f64 - n as f64).max(1.0);
    let std_errors = match jtj.try_inverse() {
        Some(cov) => (0..n).map(|i| (cov[(i, i)].max(0.0) * rss / dof).sqrt()).collect(),
        None => vec![f64::INFINITY; n],
    };
    LmOutcome {
        params: p,
        residuals: r,
        rss,
        iterations,
        converged,
        std_errors,
    }
}

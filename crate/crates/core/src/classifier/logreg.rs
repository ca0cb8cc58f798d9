use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, softplus, Scalar};
use crate::sparse::BinaryCsr;

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 1000;

// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub lambda: T,
    /// Convergence threshold on the gradient max-norm.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::lit(DEFAULT_LAMBDA),
            tol: T::lit(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta<T> {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: T,
    pub gradient_max_norm: T,
    /// Objective after each accepted step, starting at the initial point.
    #[serde(skip, default = "Vec::new")]
    pub objective_trace: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub lambda: T,
    pub meta: TrainingMeta<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad<T> {
    pub objective: T,
    pub weights: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> LossGrad<T> {
    pub fn max_norm(&self) -> T {
        self.weights
            .iter()
            .fold(self.intercept.abs(), |m, g| m.max(g.abs()))
    }

    fn squared_norm(&self) -> T {
        self.weights
            .iter()
            .fold(self.intercept * self.intercept, |s, &g| s + g * g)
    }
}

fn check_inputs<T: Scalar>(weights: &[T], x: &BinaryCsr, y: &[bool], lambda: T) -> Result<()> {
    if weights.len() != x.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: x.n_cols(),
            found: weights.len(),
        });
    }
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    if x.n_rows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if !(lambda > T::zero()) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    Ok(())
}

/// Mean negative log-likelihood plus `lambda / (2N) * |w|^2` (intercept not
/// penalized), and its gradient.
pub fn loss_and_gradient<T: Scalar>(
    weights: &[T],
    intercept: T,
    x: &BinaryCsr,
    y: &[bool],
    lambda: T,
) -> Result<LossGrad<T>> {
    check_inputs(weights, x, y, lambda)?;
    let n = T::from_count(x.n_rows());
    let z = x.linear(weights, intercept)?;
    let mut nll = T::zero();
    let mut residual = Vec::with_capacity(z.len());
    for (&zi, &yi) in z.iter().zip(y) {
        // -log p(y | z) = softplus(z) - y z
        nll = nll + softplus(zi) - if yi { zi } else { T::zero() };
        let target = if yi { T::one() } else { T::zero() };
        residual.push(sigmoid(zi) - target);
    }
    let penalty = weights.iter().fold(T::zero(), |s, &w| s + w * w);
    let objective = nll / n + lambda / (T::lit(2.0) * n) * penalty;
    let grad_w = x
        .transpose_mul(&residual)?
        .into_iter()
        .zip(weights)
        .map(|(g, &w)| (g + lambda * w) / n)
        .collect();
    let grad_b = residual.into_iter().sum::<T>() / n;
    Ok(LossGrad {
        objective,
        weights: grad_w,
        intercept: grad_b,
    })
}

/// Full-batch gradient descent from the origin with Barzilai-Borwein trial
/// steps and Armijo backtracking; every accepted step lowers the objective.
pub fn train<T: Scalar>(x: &BinaryCsr, y: &[bool], config: &TrainConfig<T>) -> Result<LogRegModel<T>> {
    if y.len() < 2 {
        return Err(Error::Insufficient("training needs at least two rows".into()));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::Insufficient(
            "training labels contain a single class".into(),
        ));
    }
    if !(config.tol > T::zero()) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let mut w = vec![T::zero(); x.n_cols()];
    let mut b = T::zero();
    let mut current = loss_and_gradient(&w, b, x, y, config.lambda)?;
    let mut trace = vec![current.objective];
    let mut step = T::one();
    let mut iterations = 0;
    let c = T::lit(ARMIJO_C);

    while iterations < config.max_iter && !(current.max_norm() < config.tol) {
        let g_sq = current.squared_norm();
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let w_try: Vec<T> = w
                .iter()
                .zip(&current.weights)
                .map(|(&wi, &gi)| wi - t * gi)
                .collect();
            let b_try = b - t * current.intercept;
            let next = loss_and_gradient(&w_try, b_try, x, y, config.lambda)?;
            if next.objective <= current.objective - c * t * g_sq
                && next.objective < current.objective
            {
                accepted = Some((w_try, b_try, next));
                break;
            }
            t = t * T::lit(0.5);
        }
        let Some((w_new, b_new, next)) = accepted else {
            log::debug!("line search stalled after {iterations} iterations");
            break;
        };
        // Barzilai-Borwein step for the next trial: s.s / s.y
        let mut ss = (b_new - b) * (b_new - b);
        let mut sy = (b_new - b) * (next.intercept - current.intercept);
        for i in 0..w.len() {
            let s = w_new[i] - w[i];
            ss = ss + s * s;
            sy = sy + s * (next.weights[i] - current.weights[i]);
        }
        step = if sy > T::zero() {
            (ss / sy).max(T::lit(1e-10)).min(T::lit(1e10))
        } else {
            t * T::lit(2.0)
        };
        w = w_new;
        b = b_new;
        current = next;
        trace.push(current.objective);
        iterations += 1;
    }

    let gradient_max_norm = current.max_norm();
    let converged = gradient_max_norm < config.tol;
    if !converged {
        log::warn!(
            "logistic regression stopped after {iterations} iterations with gradient max-norm {gradient_max_norm}"
        );
    }
    Ok(LogRegModel {
        weights: w,
        intercept: b,
        lambda: config.lambda,
        meta: TrainingMeta {
            iterations,
            converged,
            final_objective: current.objective,
            gradient_max_norm,
            objective_trace: trace,
        },
    })
}

impl<T: Scalar> LogRegModel<T> {
    pub fn predict_proba(&self, x: &BinaryCsr) -> Result<Vec<T>> {
        Ok(x.linear(&self.weights, self.intercept)?
            .into_iter()
            .map(sigmoid)
            .collect())
    }

    /// Positive iff probability `>= threshold`.
    pub fn predict(&self, x: &BinaryCsr, threshold: T) -> Result<Vec<bool>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| p >= threshold)
            .collect())
    }
}

//! R-step: weighted multinomial logistic regression with soft labels.
//!
//! Maximizes `sum_i w_i sum_k B_ik log pi_k(x_i; alpha)` over the gating
//! coefficients with the baseline row pinned to zero, by Newton-Raphson with
//! step halving. Coefficients are capped at +-30 in magnitude, which encodes
//! the extended-real optimum finitely (a suppressed state's probability is
//! then below 1e-13); hitting the cap raises the separation flag.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moe::{softmax_pi, DesignRow, GatingCoefficients};

/// Magnitude cap on gating coefficients.
pub const COEFFICIENT_CAP: f64 = 30.0;

const GRADIENT_TOLERANCE: f64 = 1e-12;
const MAX_NEWTON_ITERATIONS: usize = 100;

/// Outcome flags of an R-step solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RStepReport {
    /// Some coefficient hit the magnitude cap (quasi-separation).
    pub separation: bool,
    /// Gradient dropped below tolerance (false: stopped on halvings budget).
    pub converged: bool,
    /// Final objective value.
    pub objective: f64,
}

/// Weighted multinomial log-likelihood at `alpha` (optionally ridge-penalized
/// on non-intercept coefficients).
pub fn multinomial_objective(
    b: &DMatrix<f64>,
    designs: &[DesignRow],
    weights: &[f64],
    alpha: &GatingCoefficients,
    ridge: f64,
) -> Result<f64> {
    let p = alpha.states();
    let mut total = 0.0;
    for (i, x) in designs.iter().enumerate() {
        let pi = softmax_pi(x, alpha)?;
        for k in 0..p {
            let weight = b[(i, k)];
            if weight > 0.0 {
                total += weights[i] * weight * pi[k].max(f64::MIN_POSITIVE).ln();
            }
        }
    }
    Ok(total - 0.5 * ridge * penalty_norm(alpha))
}

fn penalty_norm(alpha: &GatingCoefficients) -> f64 {
    let m = alpha.matrix();
    let mut s = 0.0;
    for k in 1..m.nrows() {
        for j in 1..m.ncols() {
            s += m[(k, j)] * m[(k, j)];
        }
    }
    s
}

/// Gradient of the objective with respect to the free rows `2..p`, flattened
/// row-major into a `(p-1) d` vector.
pub fn multinomial_gradient(
    b: &DMatrix<f64>,
    designs: &[DesignRow],
    weights: &[f64],
    alpha: &GatingCoefficients,
    ridge: f64,
) -> Result<DVector<f64>> {
    let p = alpha.states();
    let d = alpha.design_dim();
    let mut grad = DVector::zeros((p - 1) * d);
    for (i, x) in designs.iter().enumerate() {
        let pi = softmax_pi(x, alpha)?;
        for k in 1..p {
            let resid = weights[i] * (b[(i, k)] - pi[k]);
            for j in 0..d {
                grad[(k - 1) * d + j] += resid * x.values()[j];
            }
        }
    }
    if ridge > 0.0 {
        let m = alpha.matrix();
        for k in 1..p {
            for j in 1..d {
                grad[(k - 1) * d + j] -= ridge * m[(k, j)];
            }
        }
    }
    Ok(grad)
}

/// Negated Hessian (the observed information) of the objective over the free
/// coefficients; positive semi-definite.
pub fn multinomial_information(
    b: &DMatrix<f64>,
    designs: &[DesignRow],
    weights: &[f64],
    alpha: &GatingCoefficients,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    let _ = b; // the information of the multinomial likelihood is label-free
    let p = alpha.states();
    let d = alpha.design_dim();
    let dim = (p - 1) * d;
    let mut info = DMatrix::zeros(dim, dim);
    for (i, x) in designs.iter().enumerate() {
        let pi = softmax_pi(x, alpha)?;
        let xv = x.values();
        for k in 1..p {
            for l in k..p {
                let coeff = weights[i]
                    * if k == l {
                        pi[k] * (1.0 - pi[k])
                    } else {
                        -pi[k] * pi[l]
                    };
                if coeff == 0.0 {
                    continue;
                }
                for a in 0..d {
                    for c in 0..d {
                        let v = coeff * xv[a] * xv[c];
                        info[((k - 1) * d + a, (l - 1) * d + c)] += v;
                        if k != l {
                            info[((l - 1) * d + c, (k - 1) * d + a)] += v;
                        }
                    }
                }
            }
        }
    }
    if ridge > 0.0 {
        for k in 1..p {
            for j in 1..d {
                info[((k - 1) * d + j, (k - 1) * d + j)] += ridge;
            }
        }
    }
    Ok(info)
}

fn apply_step(
    alpha: &GatingCoefficients,
    direction: &DVector<f64>,
    step: f64,
) -> (GatingCoefficients, bool) {
    let p = alpha.states();
    let d = alpha.design_dim();
    let mut m = alpha.matrix().clone();
    let mut capped = false;
    for k in 1..p {
        for j in 0..d {
            let mut v = m[(k, j)] + step * direction[(k - 1) * d + j];
            if v.abs() > COEFFICIENT_CAP {
                v = v.signum() * COEFFICIENT_CAP;
                capped = true;
            }
            m[(k, j)] = v;
        }
    }
    (
        GatingCoefficients::new(m).expect("capped coefficients are finite"),
        capped,
    )
}

/// Runs the Newton solve from `alpha_start`. The returned objective is never
/// below the incoming one.
pub fn rstep(
    b: &DMatrix<f64>,
    designs: &[DesignRow],
    weights: &[f64],
    alpha_start: &GatingCoefficients,
    max_halvings: usize,
    ridge: f64,
) -> Result<(GatingCoefficients, RStepReport)> {
    let p = alpha_start.states();
    if b.nrows() != designs.len() || weights.len() != designs.len() {
        return Err(Error::invalid(format!(
            "B rows ({}), designs ({}), and weights ({}) must agree",
            b.nrows(),
            designs.len(),
            weights.len()
        )));
    }
    if b.ncols() != p {
        return Err(Error::invalid(format!(
            "B has {} columns but gating has {p} states",
            b.ncols()
        )));
    }
    if p == 1 {
        // No free coefficients.
        return Ok((
            alpha_start.clone(),
            RStepReport {
                separation: false,
                converged: true,
                objective: 0.0,
            },
        ));
    }

    let mut alpha = alpha_start.clone();
    let incoming_objective = multinomial_objective(b, designs, weights, &alpha, ridge)?;
    let mut objective = incoming_objective;
    let mut gradient_norm = f64::INFINITY;
    let mut separation = false;
    let mut converged = false;

    for _ in 0..MAX_NEWTON_ITERATIONS {
        let grad = multinomial_gradient(b, designs, weights, &alpha, ridge)?;
        gradient_norm = grad.amax();
        if gradient_norm < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        let info = multinomial_information(b, designs, weights, &alpha, ridge)?;
        // Escalating jitter until the information factorizes.
        let mut direction = None;
        let mut jitter = 0.0;
        let scale = info.diagonal().amax().max(1.0);
        for _ in 0..8 {
            let mut damped = info.clone();
            if jitter > 0.0 {
                for i in 0..damped.nrows() {
                    damped[(i, i)] += jitter;
                }
            }
            if let Some(chol) = damped.cholesky() {
                direction = Some(chol.solve(&grad));
                break;
            }
            jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 100.0 };
        }
        let direction = match direction {
            Some(dir) => dir,
            None => break,
        };

        // Near the optimum the objective gain falls below float resolution;
        // a within-slack step still counts when it shrinks the gradient, so
        // Newton can finish its quadratic-convergence tail.
        let slack = 1e-13 * (1.0 + objective.abs());
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=max_halvings {
            let (candidate, capped) = apply_step(&alpha, &direction, step);
            let cand_obj = multinomial_objective(b, designs, weights, &candidate, ridge)?;
            let improves = cand_obj > objective;
            let flat_but_closer = cand_obj > objective - slack
                && multinomial_gradient(b, designs, weights, &candidate, ridge)?.amax()
                    < gradient_norm;
            if improves || flat_but_closer || (cand_obj >= objective && capped) {
                alpha = candidate;
                objective = cand_obj;
                separation |= capped;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Newton stalled at float resolution; the iterate is optimal to
            // working precision.
            break;
        }
    }

    if objective < incoming_objective {
        // Slack-accepted dips never pay off in aggregate here; keep the
        // incoming coefficients so the R-step is a true ascent step.
        return Ok((
            alpha_start.clone(),
            RStepReport {
                separation,
                converged: false,
                objective: incoming_objective,
            },
        ));
    }
    Ok((
        alpha,
        RStepReport {
            separation,
            converged,
            objective,
        },
    ))
}

//! Inhomogeneity step: direct maximization of the incomplete log-likelihood
//! over the transform parameters, holding the gating and rates fixed.

use crate::emfit::{log_likelihood_with_transform, Observation};
use crate::error::Result;
use crate::moe::PhMoeModel;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::transforms::Transform;

/// Result of a theta step: the (never worse) transform and an optional
/// warning when the optimizer failed to improve.
#[derive(Debug, Clone)]
pub struct ThetaStepOutcome {
    pub transform: Transform,
    pub warning: Option<String>,
}

/// Number of order-statistic candidates tried when the threshold is free.
const THRESHOLD_GRID: usize = 9;

/// Maximizes the incomplete log-likelihood over `theta` (Nelder-Mead on
/// `log theta`), and over the threshold on a grid of response order
/// statistics when it is not fixed. Identity transforms pass through.
pub fn theta_step(data: &[Observation], model: &PhMoeModel) -> Result<ThetaStepOutcome> {
    let current = model.transform.clone();
    if current.theta().is_none() {
        return Ok(ThetaStepOutcome {
            transform: current,
            warning: None,
        });
    }
    let incumbent_value = objective(data, model, &current);

    let thresholds: Vec<Option<f64>> = if current.threshold().is_some() && !current.threshold_fixed()
    {
        let mut candidates: Vec<f64> = order_statistic_grid(data);
        if let Some(t0) = current.threshold() {
            candidates.push(t0);
        }
        candidates.into_iter().map(Some).collect()
    } else {
        vec![current.threshold()]
    };

    let mut best = current.clone();
    let mut best_value = incumbent_value;
    for threshold in thresholds {
        let base = match threshold {
            Some(t) => current.with_threshold(t),
            None => current.clone(),
        };
        let theta0 = base.theta().expect("non-identity transform has theta");
        let objective_log = |params: &[f64]| {
            let theta = params[0].exp();
            let candidate = base.with_theta(theta);
            -objective(data, model, &candidate)
        };
        let result = nelder_mead(
            objective_log,
            &[theta0.max(1e-12).ln()],
            &NelderMeadOptions {
                initial_step: 0.3,
                max_iterations: 60,
                f_tolerance: 1e-10,
                x_tolerance: 1e-8,
            },
        );
        if -result.value > best_value {
            best_value = -result.value;
            best = base.with_theta(result.x[0].exp());
        }
    }

    let warning = if best_value < incumbent_value - 1e-10 {
        Some("theta step failed to improve the likelihood; keeping incoming parameters".into())
    } else {
        None
    };
    if best_value <= incumbent_value {
        best = current;
    }
    Ok(ThetaStepOutcome {
        transform: best,
        warning,
    })
}

fn objective(data: &[Observation], model: &PhMoeModel, transform: &Transform) -> f64 {
    if !transform.validate().is_empty() {
        return f64::NEG_INFINITY;
    }
    log_likelihood_with_transform(model, transform, data).unwrap_or(f64::NEG_INFINITY)
}

fn order_statistic_grid(data: &[Observation]) -> Vec<f64> {
    let mut ys: Vec<f64> = data
        .iter()
        .filter_map(|obs| obs.response.exact_value())
        .collect();
    if ys.len() < THRESHOLD_GRID + 2 {
        return Vec::new();
    }
    ys.sort_by(f64::total_cmp);
    (1..=THRESHOLD_GRID)
        .map(|q| {
            let idx = (q * ys.len()) / (THRESHOLD_GRID + 1);
            ys[idx.min(ys.len() - 2).max(1)]
        })
        .collect()
}

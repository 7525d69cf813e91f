//! Goodness-of-fit tooling: model residuals, the Kaplan-Meier curve with
//! Greenwood bands, PP-plot data, and Hill-estimator threshold diagnostics.
//!
//! The residual of an observation is `r = -log S(y | x)` under the fitted
//! model; if the model is correct these are unit exponential (right-censored
//! rows stay right-censored), so their Kaplan-Meier curve should track
//! `exp(-r)`.

use crate::emfit::{Observation, Response};
use crate::error::{Error, Result};
use crate::moe::PhMoeModel;

/// Residuals with censoring indicators (`true` = event, `false` =
/// right-censored). Interval-censored input rows are excluded and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub r: Vec<f64>,
    pub delta: Vec<bool>,
    pub excluded_intervals: usize,
}

/// Kaplan-Meier product-limit curve over residuals with Greenwood variance
/// and normal confidence bands clipped to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    /// Sorted distinct residual values.
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub variance: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub confidence_level: f64,
}

/// Cox-Snell-type residuals `r_i = -log S(y_i | x_i)`; right-censored rows
/// contribute the residual at the censoring point with `delta = false`.
pub fn residuals(model: &PhMoeModel, data: &[Observation]) -> Result<ResidualSample> {
    let mut r = Vec::with_capacity(data.len());
    let mut delta = Vec::with_capacity(data.len());
    let mut excluded = 0usize;
    for obs in data {
        let (y, event) = match &obs.response {
            Response::Exact(y) => (*y, true),
            Response::Interval { low, high } if high.is_infinite() => (*low, false),
            Response::Interval { .. } => {
                excluded += 1;
                continue;
            }
        };
        let dist = model.conditional_distribution(&obs.design)?;
        let survival = dist.survival(y)?.max(f64::MIN_POSITIVE);
        r.push(-survival.ln());
        delta.push(event);
    }
    Ok(ResidualSample {
        r,
        delta,
        excluded_intervals: excluded,
    })
}

/// Product-limit estimator with tied values grouped; Greenwood's formula
/// supplies the variance and the bands.
pub fn kaplan_meier(sample: &ResidualSample, confidence_level: f64) -> Result<SurvivalCurve> {
    if sample.r.is_empty() {
        return Err(Error::invalid("Kaplan-Meier requires a nonempty sample"));
    }
    if !(confidence_level > 0.0 && confidence_level < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level must be in (0, 1), got {confidence_level}"
        )));
    }
    let mut order: Vec<usize> = (0..sample.r.len()).collect();
    order.sort_by(|&a, &b| sample.r[a].total_cmp(&sample.r[b]));

    let n = sample.r.len();
    let z = normal_quantile(0.5 + confidence_level / 2.0);
    let mut times = Vec::new();
    let mut survival = Vec::new();
    let mut variance = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();

    let mut s = 1.0;
    let mut greenwood_sum = 0.0;
    let mut at_risk = n;
    let mut idx = 0;
    while idx < n {
        let time = sample.r[order[idx]];
        let mut events = 0usize;
        let mut ties = 0usize;
        while idx + ties < n && sample.r[order[idx + ties]] == time {
            if sample.delta[order[idx + ties]] {
                events += 1;
            }
            ties += 1;
        }
        if events > 0 {
            let d = events as f64;
            let risk = at_risk as f64;
            s *= 1.0 - d / risk;
            if at_risk > events {
                greenwood_sum += d / (risk * (risk - d));
            }
        }
        let var = if s > 0.0 { s * s * greenwood_sum } else { 0.0 };
        let half_width = z * var.sqrt();
        times.push(time);
        survival.push(s);
        variance.push(var);
        lower.push((s - half_width).clamp(0.0, 1.0));
        upper.push((s + half_width).clamp(0.0, 1.0));
        at_risk -= ties;
        idx += ties;
    }

    Ok(SurvivalCurve {
        times,
        survival,
        variance,
        lower,
        upper,
        confidence_level,
    })
}

/// PP-plot data over the uncensored rows: pairs `(i / (N + 1), F(y_(i)))`
/// sorted by the fitted probability.
pub fn pp_points(model: &PhMoeModel, data: &[Observation]) -> Result<Vec<(f64, f64)>> {
    let mut fitted = Vec::new();
    for obs in data {
        if let Response::Exact(y) = obs.response {
            let dist = model.conditional_distribution(&obs.design)?;
            fitted.push(1.0 - dist.survival(y)?);
        }
    }
    if fitted.is_empty() {
        return Err(Error::invalid("PP plot requires at least one exact observation"));
    }
    fitted.sort_by(f64::total_cmp);
    let n = fitted.len() as f64;
    Ok(fitted
        .into_iter()
        .enumerate()
        .map(|(i, f)| ((i as f64 + 1.0) / (n + 1.0), f))
        .collect())
}

/// Hill estimates `H_k = (1/k) sum_{i=1..k} log(X_(n-i+1) / X_(n-k))` for
/// each `k` in `k_min..=k_max`.
pub fn hill_estimator(sample: &[f64], k_min: usize, k_max: usize) -> Result<Vec<(usize, f64)>> {
    if k_min == 0 || k_max < k_min {
        return Err(Error::invalid(format!(
            "need 1 <= k_min <= k_max, got ({k_min}, {k_max})"
        )));
    }
    if sample.len() <= k_max + 1 {
        return Err(Error::invalid(format!(
            "sample size {} must exceed k_max + 1 = {}",
            sample.len(),
            k_max + 1
        )));
    }
    if sample.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("Hill estimator requires positive finite values"));
    }
    // Descending order statistics.
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let logs: Vec<f64> = sorted.iter().map(|v| v.ln()).collect();

    let mut out = Vec::with_capacity(k_max - k_min + 1);
    let mut prefix = 0.0;
    for k in 1..=k_max {
        prefix += logs[k - 1];
        if k >= k_min {
            out.push((k, prefix / k as f64 - logs[k]));
        }
    }
    Ok(out)
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a reference
/// CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.max(lo));
    }
    d
}

/// Asymptotic KS critical value `c(alpha) / sqrt(n)`; supported levels are
/// 10%, 5%, and 1%.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let c = if alpha <= 0.01 {
        1.63
    } else if alpha <= 0.05 {
        1.36
    } else {
        1.22
    };
    c / (n as f64).sqrt()
}

fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

//! Conditional expectations of the complete-data sufficient statistics for a
//! single observation, exact or interval-censored.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{expm, expm_cumulative, expm_rank_one_integral, SubIntensityMatrix};

/// Smallest conditioning probability considered non-degenerate.
const DENOM_FLOOR: f64 = 1e-300;

/// Per-observation expected statistics: start counts, sojourn times, jump
/// counts, and absorption counts, all conditional on the observed response.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsStats {
    /// Expected start counts `E[B_k]`; a probability vector.
    pub b_row: DVector<f64>,
    /// Expected sojourn times `E[V_k]`.
    pub v: DVector<f64>,
    /// Expected jump counts `E[N_kl]`, `k != l`; zero diagonal.
    pub n_trans: DMatrix<f64>,
    /// Expected absorption counts `E[N_k]`.
    pub n_exit: DVector<f64>,
}

fn check_pi(pi: &DVector<f64>, p: usize) -> Result<()> {
    if pi.len() != p {
        return Err(Error::invalid(format!(
            "initial vector length {} does not match order {p}",
            pi.len()
        )));
    }
    Ok(())
}

/// E-step for an exactly observed (transformed) absorption time `z`.
///
/// The shared kernel is `J(z) = ∫_0^z exp(T(z-u)) t pi' exp(Tu) du`, read off
/// a block matrix exponential together with `exp(Tz)`; the four statistics
/// are ratios against the density `pi' exp(Tz) t`.
pub fn estep_exact(
    pi: &DVector<f64>,
    sub: &SubIntensityMatrix,
    z: f64,
) -> Result<ObsStats> {
    let p = sub.order();
    check_pi(pi, p)?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::invalid(format!(
            "exact E-step requires a positive finite z, got {z}"
        )));
    }
    let exit = sub.exit_vector();
    let (etz, j) = expm_rank_one_integral(sub, exit, pi, z)?;
    let etz_t = &etz * exit;
    let pi_etz = etz.transpose() * pi;
    let denom = pi.dot(&etz_t);
    if !(denom > DENOM_FLOOR) {
        return Err(Error::numerical(format!(
            "conditional density underflow ({denom:e}) at z = {z}"
        )));
    }

    let mut b_row = DVector::zeros(p);
    let mut v = DVector::zeros(p);
    let mut n_exit = DVector::zeros(p);
    let mut n_trans = DMatrix::zeros(p, p);
    for k in 0..p {
        b_row[k] = (pi[k] * etz_t[k] / denom).max(0.0);
        v[k] = (j[(k, k)] / denom).max(0.0);
        n_exit[k] = (exit[k] * pi_etz[k] / denom).max(0.0);
        for l in 0..p {
            if l != k {
                n_trans[(k, l)] = (sub.matrix()[(k, l)] * j[(l, k)] / denom).max(0.0);
            }
        }
    }
    Ok(ObsStats {
        b_row,
        v,
        n_trans,
        n_exit,
    })
}

/// E-step for an interval-censored (transformed) response in `(a, b]`;
/// `b = +inf` gives right censoring, `a = 0` left censoring.
pub fn estep_censored(
    pi: &DVector<f64>,
    sub: &SubIntensityMatrix,
    a: f64,
    b: f64,
) -> Result<ObsStats> {
    let p = sub.order();
    check_pi(pi, p)?;
    if !(a >= 0.0) || !a.is_finite() || !(b > a) {
        return Err(Error::invalid(format!(
            "censored E-step requires 0 <= a < b, got ({a}, {b})"
        )));
    }
    let exit = sub.exit_vector();
    let t = sub.matrix();

    let eta_a = expm(t, a)?;
    let row_sums_a: DVector<f64> = DVector::from_fn(p, |k, _| eta_a.row(k).sum());
    let (row_sums_b, j_b) = if b.is_finite() {
        let eta_b = expm(t, b)?;
        let (_, j_b) = expm_rank_one_integral(sub, exit, pi, b)?;
        (DVector::from_fn(p, |k, _| eta_b.row(k).sum()), Some(j_b))
    } else {
        (DVector::zeros(p), None)
    };
    let j_a = if a > 0.0 {
        let (_, j_a) = expm_rank_one_integral(sub, exit, pi, a)?;
        j_a
    } else {
        DMatrix::zeros(p, p)
    };

    let denom: f64 = (0..p).map(|k| pi[k] * (row_sums_a[k] - row_sums_b[k])).sum();
    if !(denom > DENOM_FLOOR) {
        return Err(Error::numerical(format!(
            "censoring interval ({a}, {b}] has vanishing probability ({denom:e})"
        )));
    }

    // pi' ∫_a^b exp(Tu) du, entry k.
    let cumulative = expm_cumulative(sub, a, b)?;
    let pi_cum = cumulative.transpose() * pi;

    let mut b_row = DVector::zeros(p);
    let mut v = DVector::zeros(p);
    let mut n_exit = DVector::zeros(p);
    let mut n_trans = DMatrix::zeros(p, p);
    for k in 0..p {
        b_row[k] = (pi[k] * (row_sums_a[k] - row_sums_b[k]) / denom).max(0.0);
        let j_b_kk = j_b.as_ref().map_or(0.0, |m| m[(k, k)]);
        v[k] = ((pi_cum[k] - j_b_kk + j_a[(k, k)]) / denom).max(0.0);
        n_exit[k] = (exit[k] * pi_cum[k] / denom).max(0.0);
        for l in 0..p {
            if l != k {
                let j_b_lk = j_b.as_ref().map_or(0.0, |m| m[(l, k)]);
                n_trans[(k, l)] =
                    (t[(k, l)] * (pi_cum[k] - j_b_lk + j_a[(l, k)]) / denom).max(0.0);
            }
        }
    }
    Ok(ObsStats {
        b_row,
        v,
        n_trans,
        n_exit,
    })
}

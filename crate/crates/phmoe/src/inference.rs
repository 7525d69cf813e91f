//! Partial-likelihood inference for the gating coefficients and information
//! criteria.
//!
//! After the EM loop converges, the rates and transform are treated as
//! nuisance parameters and standard errors come from the inverse observed
//! information of the weighted multinomial objective at the fitted
//! coefficients. Because the E-step uncertainty is ignored, these standard
//! errors are lower bounds.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::emfit::{multinomial_information, Observation};
use crate::error::{Error, Result};
use crate::moe::{DesignRow, GatingCoefficients};

/// Eigenvalues at or below this fraction of the largest are treated as null
/// directions of the information matrix.
const RANK_TOLERANCE: f64 = 1e-10;

/// One free coefficient (state >= 2) with its partial-likelihood inference.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEntry {
    /// One-based state index (2..=p; state 1 is the baseline).
    pub state: usize,
    pub column: String,
    pub estimate: f64,
    /// Missing when the information matrix is singular in this direction.
    pub std_error: Option<f64>,
    pub z_value: Option<f64>,
    pub p_value: Option<f64>,
}

impl CoefficientEntry {
    /// Significance stars mirroring the usual 0.001 / 0.01 / 0.05 coding.
    pub fn stars(&self) -> &'static str {
        match self.p_value {
            Some(p) if p < 0.001 => "***",
            Some(p) if p < 0.01 => "**",
            Some(p) if p < 0.05 => "*",
            _ => "",
        }
    }
}

/// Coefficient table over the `(p-1) * d` free gating coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub entries: Vec<CoefficientEntry>,
    /// The information matrix was rank-deficient; affected coefficients have
    /// missing standard errors.
    pub rank_deficient: bool,
}

/// Computes the coefficient table at the fitted gating. `column_names` must
/// align with the design-row entries ([`crate::moe::CovariateSchema::design_names`]).
pub fn gating_inference(
    b: &DMatrix<f64>,
    designs: &[DesignRow],
    weights: &[f64],
    alpha: &GatingCoefficients,
    column_names: &[String],
) -> Result<CoefficientTable> {
    let p = alpha.states();
    let d = alpha.design_dim();
    if column_names.len() != d {
        return Err(Error::invalid(format!(
            "{} column names supplied for design dimension {d}",
            column_names.len()
        )));
    }
    if p == 1 {
        return Ok(CoefficientTable {
            entries: Vec::new(),
            rank_deficient: false,
        });
    }
    let info = multinomial_information(b, designs, weights, alpha, 0.0)?;
    let dim = (p - 1) * d;

    // Diagonal of the (pseudo-)inverse information through the spectral
    // decomposition; coefficients that participate in a null direction get a
    // missing standard error instead of a garbage one.
    let eigen = nalgebra::SymmetricEigen::new(info);
    let max_ev = eigen.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let threshold = RANK_TOLERANCE * max_ev;
    let mut se_diag: Vec<Option<f64>> = vec![None; dim];
    for j in 0..dim {
        let mut in_null_space = false;
        let mut diag = 0.0;
        for (i, &ev) in eigen.eigenvalues.iter().enumerate() {
            let load = eigen.eigenvectors[(j, i)];
            if ev <= threshold {
                if load * load > 1e-8 {
                    in_null_space = true;
                    break;
                }
            } else {
                diag += load * load / ev;
            }
        }
        se_diag[j] = if in_null_space { None } else { Some(diag.sqrt()) };
    }

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut entries = Vec::with_capacity(dim);
    for k in 1..p {
        for j in 0..d {
            let estimate = alpha.matrix()[(k, j)];
            let std_error = se_diag[(k - 1) * d + j];
            let z_value = std_error.map(|se| estimate / se);
            let p_value = z_value.map(|z| 2.0 * (1.0 - normal.cdf(z.abs())));
            entries.push(CoefficientEntry {
                state: k + 1,
                column: column_names[j].clone(),
                estimate,
                std_error,
                z_value,
                p_value,
            });
        }
    }
    Ok(CoefficientTable {
        entries,
        rank_deficient: se_diag.iter().any(Option::is_none),
    })
}

/// Fit summary: log-likelihood, degrees of freedom, and information
/// criteria. `n` is the total observation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationCriteria {
    pub loglik: f64,
    pub dof: usize,
    pub n: f64,
    pub aic: f64,
    pub bic: f64,
}

/// `AIC = -2 l + 2 dof`, `BIC = -2 l + dof log
/// n`, with `n` the summed observation weights.
pub fn information_criteria(loglik: f64, dof: usize, data: &[Observation]) -> InformationCriteria {
    let n: f64 = data.iter().map(|o| o.weight).sum();
    InformationCriteria {
        loglik,
        dof,
        n,
        aic: -2.0 * loglik + 2.0 * dof as f64,
        bic: -2.0 * loglik + dof as f64 * n.ln(),
    }
}

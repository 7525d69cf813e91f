//! Softmax gating: covariate schema, design-matrix construction, and the
//! full mixture-of-experts model type.
//!
//! Covariates enter the model only through the initial state probabilities:
//! a design row `x` (intercept-leading) is mapped to the simplex via
//! `pi_k(x) = exp(x' a_k) / sum_j exp(x' a_j)`. The first coefficient row is
//! pinned to zero so the parametrization is identifiable.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::SubIntensityMatrix;
use crate::phcore::{IphDistribution, PhaseDistribution};
use crate::transforms::{Transform, TransformFamily};

/// Standardization parameters recorded for a numeric column so that
/// predictions can apply the same shift and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

/// Kind of a covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        standardize: Option<Standardization>,
    },
    /// Dummy-coded with the first declared level as the baseline.
    Categorical { levels: Vec<String> },
}

/// One declared covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Ordered covariate declaration. The design always carries a leading
/// intercept; numeric columns contribute one entry each and categorical
/// columns one indicator per non-baseline level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CovariateSchema {
    pub columns: Vec<Column>,
}

/// A raw covariate cell prior to design encoding.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateValue {
    Numeric(f64),
    Categorical(String),
}

/// Intercept-leading encoded covariate row.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow(DVector<f64>);

impl DesignRow {
    /// Wraps an encoded row; the first entry must be the intercept 1.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() || values[0] != 1.0 {
            return Err(Error::invalid("design row must start with an intercept of 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design row has non-finite entries"));
        }
        Ok(DesignRow(values))
    }

    /// The intercept-only row of dimension 1.
    pub fn intercept_only() -> Self {
        DesignRow(DVector::from_element(1, 1.0))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl CovariateSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for col in &columns {
            if !seen.insert(col.name.clone()) {
                return Err(Error::Schema(format!("duplicate column '{}'", col.name)));
            }
            if let ColumnKind::Categorical { levels } = &col.kind {
                if levels.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical column '{}' declares no levels",
                        col.name
                    )));
                }
                let mut level_seen = std::collections::BTreeSet::new();
                for level in levels {
                    if !level_seen.insert(level.clone()) {
                        return Err(Error::Schema(format!(
                            "categorical column '{}' repeats level '{level}'",
                            col.name
                        )));
                    }
                }
            }
        }
        Ok(CovariateSchema { columns })
    }

    /// Design dimension `d`: intercept plus per-column contributions.
    pub fn design_dim(&self) -> usize {
        1 + self
            .columns
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Numeric { .. } => 1,
                ColumnKind::Categorical { levels } => levels.len() - 1,
            })
            .sum::<usize>()
    }

    /// Names of the design columns, aligned with [`DesignRow`] entries.
    pub fn design_names(&self) -> Vec<String> {
        let mut names = vec!["(Intercept)".to_string()];
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Numeric { .. } => names.push(col.name.clone()),
                ColumnKind::Categorical { levels } => {
                    for level in &levels[1..] {
                        names.push(format!("{}{}", col.name, level));
                    }
                }
            }
        }
        names
    }

    /// Encodes a raw row into a design row, validating coverage and levels.
    pub fn build_design(&self, raw: &BTreeMap<String, CovariateValue>) -> Result<DesignRow> {
        let mut values = Vec::with_capacity(self.design_dim());
        values.push(1.0);
        for col in &self.columns {
            let cell = raw
                .get(&col.name)
                .ok_or_else(|| Error::Schema(format!("missing column '{}'", col.name)))?;
            match (&col.kind, cell) {
                (ColumnKind::Numeric { standardize }, CovariateValue::Numeric(v)) => {
                    if !v.is_finite() {
                        return Err(Error::Schema(format!(
                            "non-finite value in numeric column '{}'",
                            col.name
                        )));
                    }
                    match standardize {
                        Some(s) => values.push((v - s.mean) / s.sd),
                        None => values.push(*v),
                    }
                }
                (ColumnKind::Categorical { levels }, CovariateValue::Categorical(level)) => {
                    let idx = levels.iter().position(|l| l == level).ok_or_else(|| {
                        Error::Schema(format!(
                            "unknown level '{level}' for column '{}' (declared: {})",
                            col.name,
                            levels.join(", ")
                        ))
                    })?;
                    for candidate in 1..levels.len() {
                        values.push(if candidate == idx { 1.0 } else { 0.0 });
                    }
                }
                (ColumnKind::Numeric { .. }, CovariateValue::Categorical(v)) => {
                    return Err(Error::Schema(format!(
                        "column '{}' is numeric but got '{v}'",
                        col.name
                    )));
                }
                (ColumnKind::Categorical { .. }, CovariateValue::Numeric(v)) => {
                    return Err(Error::Schema(format!(
                        "column '{}' is categorical but got numeric {v}",
                        col.name
                    )));
                }
            }
        }
        DesignRow::new(DVector::from_vec(values))
    }
}

/// Gating coefficient matrix, one row per state; row 1 is identically zero
/// (baseline normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct GatingCoefficients {
    alpha: DMatrix<f64>,
}

impl GatingCoefficients {
    /// Wraps a `p x d` coefficient matrix, normalizing the baseline by
    /// subtracting the first row from every row (a softmax no-op).
    pub fn new(alpha: DMatrix<f64>) -> Result<Self> {
        if alpha.nrows() == 0 || alpha.ncols() == 0 {
            return Err(Error::invalid("gating coefficients must be non-empty"));
        }
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gating coefficients have non-finite entries"));
        }
        let first = alpha.row(0).into_owned();
        let mut normalized = alpha;
        for k in 0..normalized.nrows() {
            for j in 0..normalized.ncols() {
                normalized[(k, j)] -= first[j];
            }
        }
        Ok(GatingCoefficients { alpha: normalized })
    }

    pub fn zeros(p: usize, d: usize) -> Self {
        GatingCoefficients {
            alpha: DMatrix::zeros(p, d),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn states(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn design_dim(&self) -> usize {
        self.alpha.ncols()
    }
}

/// Softmax initial-state probabilities `pi(x)`, computed with
/// max-subtraction so linear predictors up to +-700 do not overflow.
pub fn softmax_pi(x: &DesignRow, alpha: &GatingCoefficients) -> Result<DVector<f64>> {
    if x.dim() != alpha.design_dim() {
        return Err(Error::invalid(format!(
            "design row dimension {} does not match gating dimension {}",
            x.dim(),
            alpha.design_dim()
        )));
    }
    let linear = alpha.matrix() * x.values();
    if linear.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite linear predictor in softmax"));
    }
    let max = linear.max();
    let mut out = DVector::zeros(linear.len());
    let mut total = 0.0;
    for k in 0..linear.len() {
        let e = (linear[k] - max).exp();
        out[k] = e;
        total += e;
    }
    out /= total;
    Ok(out)
}

/// Log odds `log(pi_k(x) / pi_j(x)) = x' (a_k - a_j)`.
pub fn log_odds(x: &DesignRow, alpha: &GatingCoefficients, k: usize, j: usize) -> Result<f64> {
    let p = alpha.states();
    if k >= p || j >= p {
        return Err(Error::invalid(format!(
            "state indices ({k}, {j}) out of range for p = {p}"
        )));
    }
    let diff = alpha.matrix().row(k) - alpha.matrix().row(j);
    Ok(diff.transpose().dot(x.values()))
}

/// The full regression model: schema, gating, Markov engine, and transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PhMoeModel {
    pub schema: CovariateSchema,
    pub gating: GatingCoefficients,
    pub sub: SubIntensityMatrix,
    pub transform: Transform,
}

impl PhMoeModel {
    pub fn new(
        schema: CovariateSchema,
        gating: GatingCoefficients,
        sub: SubIntensityMatrix,
        transform: Transform,
    ) -> Result<Self> {
        if gating.states() != sub.order() {
            return Err(Error::invalid(format!(
                "gating has {} states but sub-intensity order is {}",
                gating.states(),
                sub.order()
            )));
        }
        if gating.design_dim() != schema.design_dim() {
            return Err(Error::invalid(format!(
                "gating dimension {} does not match schema design dimension {}",
                gating.design_dim(),
                schema.design_dim()
            )));
        }
        let violations = transform.validate();
        if !violations.is_empty() {
            return Err(Error::invalid(violations.join("; ")));
        }
        Ok(PhMoeModel {
            schema,
            gating,
            sub,
            transform,
        })
    }

    pub fn order(&self) -> usize {
        self.sub.order()
    }

    /// Initial probabilities for a design row.
    pub fn pi(&self, x: &DesignRow) -> Result<DVector<f64>> {
        softmax_pi(x, &self.gating)
    }

    /// Conditional severity distribution given a design row.
    pub fn conditional_distribution(&self, x: &DesignRow) -> Result<IphDistribution> {
        let pi = self.pi(x)?;
        let base = PhaseDistribution::new(pi, self.sub.clone())?;
        IphDistribution::new(base, self.transform.clone())
    }

    /// Conditional mean `E[Y | X = x]`.
    ///
    /// Identity and Weibull transforms use the explicit matrix formulas;
    /// Pareto-type and semi-composite transforms integrate the conditional
    /// survival numerically. Configurations whose accessible-state tail index
    /// implies an infinite mean produce [`Error::InfiniteMean`].
    pub fn conditional_mean(&self, x: &DesignRow) -> Result<f64> {
        self.conditional_distribution(x)?.mean()
    }
}

/// Degrees of freedom of a fitted model: `p^2` rates, `(p-1) d` free gating
/// coefficients, plus the transform parameters.
pub fn degrees_of_freedom(p: usize, design_dim: usize, transform: &Transform) -> usize {
    p * p + (p - 1) * design_dim + transform.parameter_dim()
}

/// Convenience: the family of a model's transform.
pub fn transform_family(model: &PhMoeModel) -> TransformFamily {
    model.transform.family()
}

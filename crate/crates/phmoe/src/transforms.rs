//! Parametric inhomogeneity families.
//!
//! A transform is determined by an intensity `lambda(y; theta) > 0` through
//! `G(y) = ∫_0^y lambda(s) ds` (written `g_inverse` here) and its inverse
//! `g_forward`. Pushing a homogeneous phase-type variable `Z` through
//! `g_forward` yields the corresponding inhomogeneous law, so the choice of
//! family selects the tail behavior: identity keeps exponential-type tails,
//! Pareto gives regular variation, Weibull stretches or compresses the
//! exponential decay, and the semi-composite families switch intensity at a
//! threshold `y0` to combine a body with a chosen tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inhomogeneity transform family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// `lambda = 1`: the homogeneous (plain phase-type) case.
    Identity,
    /// `lambda(y) = 1 / (y + theta)`: regularly varying tails.
    Pareto { theta: f64 },
    /// `lambda(y) = theta y^(theta-1)`: Weibull-type tails.
    Weibull { theta: f64 },
    /// Unit intensity below `threshold`, Weibull beyond.
    SemiCompositeWeibullTail {
        theta: f64,
        threshold: f64,
        threshold_fixed: bool,
    },
    /// Unit intensity below `threshold`, Pareto beyond.
    SemiCompositeParetoTail {
        theta: f64,
        threshold: f64,
        threshold_fixed: bool,
    },
}

/// Transform family without parameters; used to request a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformFamily {
    Identity,
    Pareto,
    Weibull,
    SemiCompositeWeibullTail,
    SemiCompositeParetoTail,
}

impl TransformFamily {
    pub const ALL: [TransformFamily; 5] = [
        TransformFamily::Identity,
        TransformFamily::Pareto,
        TransformFamily::Weibull,
        TransformFamily::SemiCompositeWeibullTail,
        TransformFamily::SemiCompositeParetoTail,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TransformFamily::Identity => "identity",
            TransformFamily::Pareto => "pareto",
            TransformFamily::Weibull => "weibull",
            TransformFamily::SemiCompositeWeibullTail => "semi-composite-weibull-tail",
            TransformFamily::SemiCompositeParetoTail => "semi-composite-pareto-tail",
        }
    }

    pub fn parse(s: &str) -> Result<TransformFamily> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "none" => Ok(TransformFamily::Identity),
            "pareto" => Ok(TransformFamily::Pareto),
            "weibull" => Ok(TransformFamily::Weibull),
            "semi-composite-weibull-tail" | "sc-weibull" => {
                Ok(TransformFamily::SemiCompositeWeibullTail)
            }
            "semi-composite-pareto-tail" | "sc-pareto" => {
                Ok(TransformFamily::SemiCompositeParetoTail)
            }
            other => Err(Error::invalid(format!("unknown transform family '{other}'"))),
        }
    }

    pub fn is_semi_composite(&self) -> bool {
        matches!(
            self,
            TransformFamily::SemiCompositeWeibullTail | TransformFamily::SemiCompositeParetoTail
        )
    }
}

impl Transform {
    pub fn family(&self) -> TransformFamily {
        match self {
            Transform::Identity => TransformFamily::Identity,
            Transform::Pareto { .. } => TransformFamily::Pareto,
            Transform::Weibull { .. } => TransformFamily::Weibull,
            Transform::SemiCompositeWeibullTail { .. } => {
                TransformFamily::SemiCompositeWeibullTail
            }
            Transform::SemiCompositeParetoTail { .. } => TransformFamily::SemiCompositeParetoTail,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Transform::Identity => None,
            Transform::Pareto { theta }
            | Transform::Weibull { theta }
            | Transform::SemiCompositeWeibullTail { theta, .. }
            | Transform::SemiCompositeParetoTail { theta, .. } => Some(*theta),
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Transform::SemiCompositeWeibullTail { threshold, .. }
            | Transform::SemiCompositeParetoTail { threshold, .. } => Some(*threshold),
            _ => None,
        }
    }

    pub fn threshold_fixed(&self) -> bool {
        match self {
            Transform::SemiCompositeWeibullTail { threshold_fixed, .. }
            | Transform::SemiCompositeParetoTail { threshold_fixed, .. } => *threshold_fixed,
            _ => true,
        }
    }

    /// Number of transform parameters estimated during fitting; enters the
    /// degrees-of-freedom count.
    pub fn parameter_dim(&self) -> usize {
        match self {
            Transform::Identity => 0,
            Transform::Pareto { .. } | Transform::Weibull { .. } => 1,
            Transform::SemiCompositeWeibullTail { threshold_fixed, .. }
            | Transform::SemiCompositeParetoTail { threshold_fixed, .. } => {
                if *threshold_fixed {
                    1
                } else {
                    2
                }
            }
        }
    }

    /// Returns a copy with `theta` replaced (no-op for Identity).
    pub fn with_theta(&self, new_theta: f64) -> Transform {
        let mut out = self.clone();
        match &mut out {
            Transform::Identity => {}
            Transform::Pareto { theta }
            | Transform::Weibull { theta }
            | Transform::SemiCompositeWeibullTail { theta, .. }
            | Transform::SemiCompositeParetoTail { theta, .. } => *theta = new_theta,
        }
        out
    }

    /// Returns a copy with the threshold replaced (semi-composite only).
    pub fn with_threshold(&self, new_threshold: f64) -> Transform {
        let mut out = self.clone();
        match &mut out {
            Transform::SemiCompositeWeibullTail { threshold, .. }
            | Transform::SemiCompositeParetoTail { threshold, .. } => *threshold = new_threshold,
            _ => {}
        }
        out
    }

    /// Intensity `lambda(y)`.
    ///
    /// Defined for `y >= 0`; at `y = 0` the Weibull intensity with
    /// `theta < 1` diverges, and the boundary value `+inf` is returned so the
    /// caller can flag it.
    pub fn lambda(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::invalid(format!("lambda requires y >= 0, got {y}")));
        }
        Ok(match self {
            Transform::Identity => 1.0,
            Transform::Pareto { theta } => 1.0 / (y + theta),
            Transform::Weibull { theta } => {
                if y == 0.0 && *theta < 1.0 {
                    f64::INFINITY
                } else {
                    theta * y.powf(theta - 1.0)
                }
            }
            Transform::SemiCompositeWeibullTail { theta, threshold, .. } => {
                if y <= *threshold {
                    1.0
                } else {
                    theta * (y - threshold).powf(theta - 1.0)
                }
            }
            Transform::SemiCompositeParetoTail { theta, threshold, .. } => {
                if y <= *threshold {
                    1.0
                } else {
                    1.0 / (y - threshold + theta)
                }
            }
        })
    }

    /// `G(y) = ∫_0^y lambda(s) ds`; strictly increasing with `G(0) = 0`.
    pub fn g_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::invalid(format!("g_inverse requires y >= 0, got {y}")));
        }
        Ok(match self {
            Transform::Identity => y,
            Transform::Pareto { theta } => (y / theta).ln_1p(),
            Transform::Weibull { theta } => y.powf(*theta),
            Transform::SemiCompositeWeibullTail { theta, threshold, .. } => {
                if y <= *threshold {
                    y
                } else {
                    threshold + (y - threshold).powf(*theta)
                }
            }
            Transform::SemiCompositeParetoTail { theta, threshold, .. } => {
                if y <= *threshold {
                    y
                } else {
                    threshold + ((y - threshold) / theta).ln_1p()
                }
            }
        })
    }

    /// Inverse of [`Transform::g_inverse`]: maps operational time back to the
    /// observation scale, `g_forward(g_inverse(y)) = y`.
    pub fn g_forward(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::invalid(format!("g_forward requires z >= 0, got {z}")));
        }
        Ok(match self {
            Transform::Identity => z,
            Transform::Pareto { theta } => theta * z.exp_m1(),
            Transform::Weibull { theta } => z.powf(1.0 / theta),
            Transform::SemiCompositeWeibullTail { theta, threshold, .. } => {
                if z <= *threshold {
                    z
                } else {
                    threshold + (z - threshold).powf(1.0 / theta)
                }
            }
            Transform::SemiCompositeParetoTail { theta, threshold, .. } => {
                if z <= *threshold {
                    z
                } else {
                    threshold + theta * (z - threshold).exp_m1()
                }
            }
        })
    }

    /// Checks parameter constraints; returns one message per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if let Some(theta) = self.theta() {
            if !(theta > 0.0) || !theta.is_finite() {
                violations.push(format!("theta must be positive and finite, got {theta}"));
            }
        }
        if let Some(threshold) = self.threshold() {
            if !(threshold > 0.0) || !threshold.is_finite() {
                violations.push(format!(
                    "threshold must be positive and finite, got {threshold}"
                ));
            }
        }
        violations
    }
}

/// Wire representation used inside the model JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TransformRepr {
    family: String,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    threshold_fixed: bool,
}

impl Serialize for Transform {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TransformRepr {
            family: self.family().name().to_string(),
            theta: self.theta(),
            threshold: self.threshold(),
            threshold_fixed: self.threshold_fixed(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Transform {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = TransformRepr::deserialize(deserializer)?;
        let family = TransformFamily::parse(&repr.family).map_err(D::Error::custom)?;
        let theta = || {
            repr.theta
                .ok_or_else(|| D::Error::custom(format!("family '{}' requires theta", repr.family)))
        };
        let threshold = || {
            repr.threshold.ok_or_else(|| {
                D::Error::custom(format!("family '{}' requires threshold", repr.family))
            })
        };
        let tr = match family {
            TransformFamily::Identity => Transform::Identity,
            TransformFamily::Pareto => Transform::Pareto { theta: theta()? },
            TransformFamily::Weibull => Transform::Weibull { theta: theta()? },
            TransformFamily::SemiCompositeWeibullTail => Transform::SemiCompositeWeibullTail {
                theta: theta()?,
                threshold: threshold()?,
                threshold_fixed: repr.threshold_fixed,
            },
            TransformFamily::SemiCompositeParetoTail => Transform::SemiCompositeParetoTail {
                theta: theta()?,
                threshold: threshold()?,
                threshold_fixed: repr.threshold_fixed,
            },
        };
        let violations = tr.validate();
        if !violations.is_empty() {
            return Err(D::Error::custom(violations.join("; ")));
        }
        Ok(tr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        let pareto = Transform::Pareto { theta: 2.0 };
        assert_eq!(pareto.lambda(0.0).unwrap(), 0.5);

        let weibull = Transform::Weibull { theta: 1.0 };
        for y in [0.1, 1.0, 7.3] {
            assert_eq!(weibull.lambda(y).unwrap(), 1.0);
        }

        let sc = Transform::SemiCompositeParetoTail {
            theta: 1.0,
            threshold: 3.0,
            threshold_fixed: true,
        };
        assert_eq!(sc.lambda(2.0).unwrap(), 1.0);
        assert_eq!(sc.lambda(4.0).unwrap(), 0.5);
    }

    #[test]
    fn lambda_boundary_and_errors() {
        let weibull = Transform::Weibull { theta: 0.5 };
        assert!(weibull.lambda(0.0).unwrap().is_infinite());
        assert!(weibull.lambda(-1.0).is_err());
    }

    #[test]
    fn g_inverse_examples() {
        let pareto = Transform::Pareto { theta: 1.0 };
        assert!((pareto.g_inverse(std::f64::consts::E - 1.0).unwrap() - 1.0).abs() < 1e-14);

        let weibull = Transform::Weibull { theta: 2.0 };
        assert!((weibull.g_inverse(3.0).unwrap() - 9.0).abs() < 1e-14);

        let scw = Transform::SemiCompositeWeibullTail {
            theta: 2.0,
            threshold: 1.0,
            threshold_fixed: true,
        };
        assert!((scw.g_inverse(2.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn g_forward_examples() {
        let pareto = Transform::Pareto { theta: 2.0 };
        assert!((pareto.g_forward(2f64.ln()).unwrap() - 2.0).abs() < 1e-14);

        let weibull = Transform::Weibull { theta: 2.0 };
        assert!((weibull.g_forward(9.0).unwrap() - 3.0).abs() < 1e-14);

        let scp = Transform::SemiCompositeParetoTail {
            theta: 1.0,
            threshold: 2.0,
            threshold_fixed: true,
        };
        assert!((scp.g_forward(2.0 + 3f64.ln()).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn validate_reports_violations() {
        assert!(Transform::Weibull { theta: 1.5 }.validate().is_empty());

        let bad = Transform::Pareto { theta: -1.0 };
        let violations = bad.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("theta must be positive"));

        let bad_threshold = Transform::SemiCompositeWeibullTail {
            theta: 2.0,
            threshold: 0.0,
            threshold_fixed: true,
        };
        let violations = bad_threshold.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("threshold must be positive"));
    }

    #[test]
    fn weibull_unit_theta_is_identity_on_g() {
        let weibull = Transform::Weibull { theta: 1.0 };
        for y in [0.0, 0.5, 1.0, 10.0, 1e6] {
            assert_eq!(weibull.g_inverse(y).unwrap(), y);
        }
    }

    #[test]
    fn serde_round_trip() {
        let tr = Transform::SemiCompositeParetoTail {
            theta: 1.5,
            threshold: 2.25,
            threshold_fixed: true,
        };
        let json = serde_json::to_string(&tr).unwrap();
        assert!(json.contains("\"family\":\"semi-composite-pareto-tail\""));
        let back: Transform = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tr);

        let id_json = serde_json::to_string(&Transform::Identity).unwrap();
        assert!(id_json.contains("\"threshold\":null"));
        let back: Transform = serde_json::from_str(&id_json).unwrap();
        assert_eq!(back, Transform::Identity);
    }
}

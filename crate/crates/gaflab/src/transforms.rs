//! Vector-level gradient transforms: identity, element-wise activation,
//! value clipping, and norm clipping, behind one pluggable interface.

use crate::gaf::{GafError, GafSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("threshold must be strictly positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("gradient component {index} is not finite ({value})")]
    NonFiniteComponent { index: usize, value: f64 },
    #[error(transparent)]
    Gaf(#[from] GafError),
}

/// A pluggable map applied to the gradient (or velocity) vector before
/// the parameter update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum GradientTransform {
    Identity,
    Gaf(GafSpec),
    ClipValue { threshold: f64 },
    ClipNorm { threshold: f64 },
}

fn check_threshold(threshold: f64) -> Result<f64, TransformError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(TransformError::InvalidThreshold(threshold));
    }
    Ok(threshold)
}

impl GradientTransform {
    pub fn clip_value(threshold: f64) -> Result<Self, TransformError> {
        Ok(Self::ClipValue {
            threshold: check_threshold(threshold)?,
        })
    }

    pub fn clip_norm(threshold: f64) -> Result<Self, TransformError> {
        Ok(Self::ClipNorm {
            threshold: check_threshold(threshold)?,
        })
    }

    pub fn label(&self) -> String {
        match self {
            GradientTransform::Identity => "identity".into(),
            GradientTransform::Gaf(spec) => format!("gaf_{}", spec.label()),
            GradientTransform::ClipValue { threshold } => format!("clip_value({threshold})"),
            GradientTransform::ClipNorm { threshold } => format!("clip_norm({threshold})"),
        }
    }

    /// True when output component i depends only on input component i.
    pub fn is_elementwise(&self) -> bool {
        !matches!(self, GradientTransform::ClipNorm { .. })
    }

    /// The scalar map for element-wise variants. Panics for norm clipping.
    pub fn component_map(&self, x: f64) -> f64 {
        match self {
            GradientTransform::Identity => x,
            GradientTransform::Gaf(spec) => spec.eval(x).expect("finite input"),
            GradientTransform::ClipValue { threshold } => x.clamp(-threshold, *threshold),
            GradientTransform::ClipNorm { .. } => {
                panic!("norm clipping has no per-component form")
            }
        }
    }

    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>, TransformError> {
        if let Some((index, &value)) = g.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(TransformError::NonFiniteComponent { index, value });
        }
        let out = match self {
            GradientTransform::Identity => g.to_vec(),
            GradientTransform::Gaf(spec) => g
                .iter()
                .map(|&c| spec.eval(c))
                .collect::<Result<Vec<_>, _>>()?,
            GradientTransform::ClipValue { threshold } => {
                g.iter().map(|&c| c.clamp(-threshold, *threshold)).collect()
            }
            GradientTransform::ClipNorm { threshold } => {
                let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > *threshold {
                    let scale = threshold / norm;
                    g.iter().map(|&c| c * scale).collect()
                } else {
                    g.to_vec()
                }
            }
        };
        Ok(out)
    }
}

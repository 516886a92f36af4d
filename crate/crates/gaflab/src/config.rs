//! TOML experiment configuration: strict parsing (unknown keys are
//! errors) plus semantic validation with field-level error messages.

use crate::curvature::RegionSpec;
use crate::gaf::GafKind;
use crate::optim::{OptimizerKind, Placement};
use crate::transforms::GradientTransform;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("`{field}`: {message}")]
    InvalidField { field: String, message: String },
    #[error("missing section `{0}` required by this experiment kind")]
    MissingSection(&'static str),
}

fn field_err(field: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::InvalidField {
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Validate,
    Race,
    Saddle,
    Curvature,
    Surface,
    Bound,
    Train,
    Suggest,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Validate => "validate",
            ExperimentKind::Race => "race",
            ExperimentKind::Saddle => "saddle",
            ExperimentKind::Curvature => "curvature",
            ExperimentKind::Surface => "surface",
            ExperimentKind::Bound => "bound",
            ExperimentKind::Train => "train",
            ExperimentKind::Suggest => "suggest",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    /// Hidden-layer width for the `mlp` problem.
    pub width: Option<usize>,
    pub dataset_size: Option<usize>,
    pub dataset_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: OptimizerKind,
    pub eta: f64,
    pub momentum: Option<f64>,
    pub batch_size: Option<usize>,
    pub placement: Option<Placement>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "variant")]
pub enum TransformSection {
    Identity,
    Gaf { kind: GafKind, alpha: f64, beta: f64 },
    ClipValue { threshold: f64 },
    ClipNorm { threshold: f64 },
}

impl TransformSection {
    pub fn build(&self) -> Result<GradientTransform, ConfigError> {
        match *self {
            TransformSection::Identity => Ok(GradientTransform::Identity),
            TransformSection::Gaf { kind, alpha, beta } => {
                let spec = crate::gaf::GafSpec::new(kind, alpha, beta).map_err(|e| {
                    let field = if alpha <= 0.0 || !alpha.is_finite() {
                        "gaf.alpha"
                    } else {
                        "gaf.beta"
                    };
                    field_err(field, format!("must be positive and finite ({e})"))
                })?;
                Ok(GradientTransform::Gaf(spec))
            }
            TransformSection::ClipValue { threshold } => GradientTransform::clip_value(threshold)
                .map_err(|e| field_err("transform.threshold", e)),
            TransformSection::ClipNorm { threshold } => GradientTransform::clip_norm(threshold)
                .map_err(|e| field_err("transform.threshold", e)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub bounds: Vec<(f64, f64)>,
    pub points_per_dim: usize,
    pub epsilon0: Option<f64>,
    pub epsilon2: Option<f64>,
}

impl RegionSection {
    pub fn build(&self) -> Result<RegionSpec, ConfigError> {
        let spec = match (self.epsilon0, self.epsilon2) {
            (None, None) => RegionSpec::new(self.bounds.clone(), self.points_per_dim),
            (Some(e0), Some(e2)) => {
                RegionSpec::new(self.bounds.clone(), self.points_per_dim).with_segments(e0, e2)
            }
            _ => {
                return Err(field_err(
                    "region.epsilon0/epsilon2",
                    "must be given together",
                ))
            }
        };
        spec.grid_points().map_err(|e| field_err("region", e))?;
        Ok(spec)
    }
}

/// Free-form per-experiment parameters; each kind reads the subset it
/// needs and defaults the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub w0: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub target_loss: Option<f64>,
    pub delta: Option<usize>,
    pub offset: Option<f64>,
    pub epoch_length: Option<usize>,
    pub grid_half_width: Option<f64>,
    pub grid_points: Option<usize>,
    pub k_max: Option<usize>,
    pub initial_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub problem: Option<ProblemSection>,
    pub optimizer: Option<OptimizerSection>,
    pub transform: Option<TransformSection>,
    pub region: Option<RegionSection>,
    #[serde(default)]
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn problem(&self) -> Result<&ProblemSection, ConfigError> {
        self.problem
            .as_ref()
            .ok_or(ConfigError::MissingSection("problem"))
    }

    pub fn transform_or_identity(&self) -> Result<GradientTransform, ConfigError> {
        match &self.transform {
            Some(t) => t.build(),
            None => Ok(GradientTransform::Identity),
        }
    }

    pub fn region(&self) -> Result<RegionSpec, ConfigError> {
        self.region
            .as_ref()
            .ok_or(ConfigError::MissingSection("region"))?
            .build()
    }
}

/// Parses and validates a config document. Unknown keys, missing
/// required keys, and constraint violations all surface with the
/// offending field named.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text)?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if let Some(t) = &cfg.transform {
        t.build()?;
    }
    if let Some(r) = &cfg.region {
        r.build()?;
    }
    if let Some(o) = &cfg.optimizer {
        if !(o.eta > 0.0 && o.eta.is_finite()) {
            return Err(field_err("optimizer.eta", "must be positive and finite"));
        }
        if let Some(mu) = o.momentum {
            if !(0.0..1.0).contains(&mu) {
                return Err(field_err("optimizer.momentum", "must lie in [0, 1)"));
            }
        }
    }
    if let Some(p) = &cfg.problem {
        if p.name != "mlp" {
            crate::problems::BuiltinProblem::parse(&p.name)
                .map_err(|e| field_err("problem.name", e))?;
        }
    }
    // stochastic experiments draw batches per seed and need at least one
    if matches!(cfg.kind, ExperimentKind::Train) && cfg.seeds.is_empty() {
        return Err(field_err("seeds", "must be non-empty for train experiments"));
    }
    if let Some(w0) = &cfg.run.w0 {
        if w0.iter().any(|x| !x.is_finite()) {
            return Err(field_err("run.w0", "components must be finite"));
        }
    }
    Ok(())
}

//! gaflab: a numerical laboratory for gradient activation functions —
//! odd, monotone, saturating maps applied element-wise to gradients
//! before the optimizer update.
//!
//! The crate covers the activation family itself (`gaf`), pluggable
//! gradient transforms including clipping baselines (`transforms`),
//! from-scratch optimizers with a transform stage (`optim`), a test
//! problem suite with a toy MLP (`problems`), tight curvature-constant
//! estimation (`curvature`), convergence bounds, races and
//! saddle-escape measurements (`convergence`), equivalent-loss-surface
//! export (`surface`), and data-driven parameter suggestion
//! (`hyperparam`). The `config` and `experiment` modules plus the
//! `gaflab` binary tie these together into deterministic, CSV-emitting
//! experiments.

pub mod config;
pub mod convergence;
pub mod curvature;
pub mod experiment;
pub mod gaf;
pub mod hyperparam;
pub mod optim;
pub mod problems;
pub mod quad;
pub mod surface;
pub mod transforms;

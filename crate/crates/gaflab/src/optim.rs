//! First-order optimizers (GD, SGD, SGDM, Adam) with a configurable
//! gradient-transform stage and deterministic seeded runs.

use crate::problems::Problem;
use crate::transforms::{GradientTransform, TransformError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("learning rate must be strictly positive and finite, got {0}")]
    InvalidEta(f64),
    #[error("momentum must lie in [0, 1), got {0}")]
    InvalidMomentum(f64),
    #[error("adam betas must lie in (0, 1), got ({0}, {1})")]
    InvalidAdamBetas(f64, f64),
    #[error("placement on_velocity is only valid for the sgdm kind")]
    PlacementMismatch,
    #[error("batch_size set but problem `{0}` has no sample set")]
    NoBatchSupport(String),
    #[error("batch_size must be >= 1")]
    InvalidBatchSize,
    #[error("w0 dimension {got} does not match problem dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    Sgd,
    Sgdm,
    Adam,
}

/// Where the transform sits in the update chain: on the raw mini-batch
/// gradient, or on the momentum velocity (sgdm only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    OnRawGradient,
    OnVelocity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub eta: f64,
    pub momentum: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: Option<usize>,
    pub transform: GradientTransform,
    pub placement: Placement,
}

impl OptimizerSpec {
    pub fn new(kind: OptimizerKind, eta: f64, transform: GradientTransform) -> Self {
        let placement = match kind {
            OptimizerKind::Sgdm => Placement::OnVelocity,
            _ => Placement::OnRawGradient,
        };
        Self {
            kind,
            eta,
            momentum: 0.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: None,
            transform,
            placement,
        }
    }

    pub fn gd(eta: f64, transform: GradientTransform) -> Self {
        Self::new(OptimizerKind::Gd, eta, transform)
    }

    pub fn sgdm(eta: f64, momentum: f64, transform: GradientTransform) -> Self {
        let mut spec = Self::new(OptimizerKind::Sgdm, eta, transform);
        spec.momentum = momentum;
        spec
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(OptimError::InvalidEta(self.eta));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(OptimError::InvalidMomentum(self.momentum));
        }
        for b in [self.adam_beta1, self.adam_beta2] {
            if !(0.0 < b && b < 1.0) {
                return Err(OptimError::InvalidAdamBetas(self.adam_beta1, self.adam_beta2));
            }
        }
        if self.placement == Placement::OnVelocity && self.kind != OptimizerKind::Sgdm {
            return Err(OptimError::PlacementMismatch);
        }
        if self.batch_size == Some(0) {
            return Err(OptimError::InvalidBatchSize);
        }
        Ok(())
    }
}

/// Per-run mutable state: momentum velocity and Adam moments.
#[derive(Debug, Clone, Default)]
pub struct OptimizerState {
    pub velocity: Vec<f64>,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        Self {
            velocity: vec![0.0; dim],
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
        }
    }
}

/// One optimizer step; returns the updated parameter vector.
pub fn step(
    spec: &OptimizerSpec,
    state: &mut OptimizerState,
    w: &[f64],
    grad: &[f64],
) -> Result<Vec<f64>, OptimError> {
    spec.validate()?;
    state.step_count += 1;
    let mut next = w.to_vec();
    match (spec.kind, spec.placement) {
        (OptimizerKind::Sgdm, Placement::OnVelocity) => {
            // velocity update with the pre-transform velocity kept in
            // state; the transform acts on the velocity, and the result
            // is added to the parameters.
            for (v, g) in state.velocity.iter_mut().zip(grad) {
                *v = spec.momentum * *v - spec.eta * g;
            }
            let update = spec.transform.apply(&state.velocity)?;
            for (wi, u) in next.iter_mut().zip(&update) {
                *wi += u;
            }
        }
        (OptimizerKind::Sgdm, Placement::OnRawGradient) => {
            let transformed = spec.transform.apply(grad)?;
            for (v, g) in state.velocity.iter_mut().zip(&transformed) {
                *v = spec.momentum * *v - spec.eta * g;
            }
            for (wi, v) in next.iter_mut().zip(&state.velocity) {
                *wi += v;
            }
        }
        (OptimizerKind::Gd | OptimizerKind::Sgd, _) => {
            let transformed = spec.transform.apply(grad)?;
            for (wi, g) in next.iter_mut().zip(&transformed) {
                *wi -= spec.eta * g;
            }
        }
        (OptimizerKind::Adam, _) => {
            let transformed = spec.transform.apply(grad)?;
            let k = state.step_count as i32;
            let bc1 = 1.0 - spec.adam_beta1.powi(k);
            let bc2 = 1.0 - spec.adam_beta2.powi(k);
            for i in 0..next.len() {
                let g = transformed[i];
                state.first_moment[i] =
                    spec.adam_beta1 * state.first_moment[i] + (1.0 - spec.adam_beta1) * g;
                state.second_moment[i] =
                    spec.adam_beta2 * state.second_moment[i] + (1.0 - spec.adam_beta2) * g * g;
                let m_hat = state.first_moment[i] / bc1;
                let v_hat = state.second_moment[i] / bc2;
                next[i] -= spec.eta * m_hat / (v_hat.sqrt() + spec.adam_eps);
            }
        }
    }
    Ok(next)
}

/// Full record of a seeded run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub iterates: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    /// Per-iterate max |component| of the raw gradient used there.
    pub grad_max_abs: Vec<f64>,
    pub seed: u64,
    pub diverged: bool,
    pub spec_snapshot: OptimizerSpec,
}

impl Trajectory {
    pub fn final_iterate(&self) -> &[f64] {
        self.iterates.last().expect("non-empty trajectory")
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("non-empty trajectory")
    }

    /// Number of steps taken (iterates minus the starting point).
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    /// First iterate index whose loss is at or below `target`.
    pub fn first_at_or_below(&self, target: f64) -> Option<usize> {
        self.losses.iter().position(|&l| l <= target)
    }

    /// One row per iterate: k, loss, max_abs_grad, then parameter
    /// components when the dimension is at most 16.
    pub fn to_csv_string(&self) -> String {
        let dim = self.iterates.first().map_or(0, Vec::len);
        let mut out = String::from("k,loss,max_abs_grad");
        if dim <= 16 {
            for i in 0..dim {
                out.push_str(&format!(",w{i}"));
            }
        }
        out.push('\n');
        for (k, (loss, gmax)) in self.losses.iter().zip(&self.grad_max_abs).enumerate() {
            out.push_str(&format!("{k},{loss},{gmax}"));
            if dim <= 16 {
                for c in &self.iterates[k] {
                    out.push_str(&format!(",{c}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Runs the optimizer from `w0`, halting at `stop_loss`, `max_iters`, or
/// divergence. Deterministic given identical inputs and seed.
pub fn run(
    problem: &Problem,
    spec: &OptimizerSpec,
    w0: &[f64],
    max_iters: usize,
    stop_loss: Option<f64>,
    seed: u64,
) -> Result<Trajectory, OptimError> {
    spec.validate()?;
    if w0.len() != problem.dim {
        return Err(OptimError::DimensionMismatch {
            expected: problem.dim,
            got: w0.len(),
        });
    }
    let stochastic = matches!(
        spec.kind,
        OptimizerKind::Sgd | OptimizerKind::Sgdm | OptimizerKind::Adam
    );
    let batch = match spec.batch_size {
        Some(size) if stochastic => {
            let ops = problem
                .batch()
                .ok_or_else(|| OptimError::NoBatchSupport(problem.name.clone()))?;
            Some((ops, size.min(ops.n_samples)))
        }
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut state = OptimizerState::new(problem.dim);
    let mut w = w0.to_vec();
    let mut trajectory = Trajectory {
        iterates: vec![w.clone()],
        losses: vec![problem.loss(&w)],
        grad_max_abs: Vec::new(),
        seed,
        diverged: false,
        spec_snapshot: spec.clone(),
    };

    for _ in 0..max_iters {
        if let Some(target) = stop_loss {
            if trajectory.final_loss() <= target {
                break;
            }
        }
        let grad = match &batch {
            Some((ops, size)) => {
                let indices = rand::seq::index::sample(&mut rng, ops.n_samples, *size).into_vec();
                ops.grad(&w, &indices)
            }
            None => problem.grad(&w),
        };
        trajectory.grad_max_abs.push(max_abs(&grad));
        if !all_finite(&grad) {
            trajectory.diverged = true;
            break;
        }
        w = step(spec, &mut state, &w, &grad)?;
        let loss = problem.loss(&w);
        trajectory.iterates.push(w.clone());
        trajectory.losses.push(loss);
        if !loss.is_finite() || !all_finite(&w) {
            trajectory.diverged = true;
            break;
        }
    }
    // Pad the gradient statistic so every iterate row has one; the final
    // entry is the full-batch gradient at the last iterate.
    while trajectory.grad_max_abs.len() < trajectory.iterates.len() {
        let last = trajectory.final_iterate().to_vec();
        trajectory.grad_max_abs.push(max_abs(&problem.grad(&last)));
    }
    Ok(trajectory)
}

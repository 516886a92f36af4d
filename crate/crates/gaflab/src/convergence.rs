//! Convergence-bound evaluation, transform-vs-baseline races, and
//! saddle-escape displacement experiments.

use crate::optim::{run, OptimError, OptimizerSpec, Trajectory};
use crate::problems::Problem;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("noise model requires mu_G >= mu > 0, got mu={mu}, mu_G={mu_g}")]
    InvalidNoiseRates { mu: f64, mu_g: f64 },
    #[error("noise model requires M >= 0 and M_V >= 0, got M={m}, M_V={m_v}")]
    InvalidNoiseBounds { m: f64, m_v: f64 },
    #[error("bound requires k >= 1")]
    InvalidIterationIndex,
    #[error("bound requires 0 < c <= ell, got c={c}, ell={ell}")]
    InvalidCurvatureConstants { c: f64, ell: f64 },
    #[error("contraction premise violated: c*mu^2/(ell*M_G) = {0} is outside (0, 1]")]
    ContractionOutOfRange(f64),
    #[error("race arms must share the learning rate and optimizer kind")]
    MismatchedArms,
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// Noise constants of the stochastic-gradient model behind the
/// convergence bound.
#[derive(Debug, Clone, Copy)]
pub struct SgdNoiseModel {
    pub mu: f64,
    pub mu_g: f64,
    pub m: f64,
    pub m_v: f64,
}

impl SgdNoiseModel {
    pub fn new(mu: f64, mu_g: f64, m: f64, m_v: f64) -> Result<Self, ConvergenceError> {
        if !(mu > 0.0 && mu_g >= mu) {
            return Err(ConvergenceError::InvalidNoiseRates { mu, mu_g });
        }
        if !(m >= 0.0 && m_v >= 0.0) {
            return Err(ConvergenceError::InvalidNoiseBounds { m, m_v });
        }
        Ok(Self { mu, mu_g, m, m_v })
    }

    /// Deterministic full-batch limit: no noise, exact descent direction.
    pub fn deterministic() -> Self {
        Self {
            mu: 1.0,
            mu_g: 1.0,
            m: 0.0,
            m_v: 0.0,
        }
    }

    pub fn m_g(&self) -> f64 {
        self.m_v + self.mu_g * self.mu_g
    }
}

/// Right-hand side of the expected-gap bound at iterate `k` (1-based,
/// `k = 1` is the starting point), with the learning rate implicitly
/// `mu / (ell * M_G)`.
pub fn sgd_gap_bound(
    k: usize,
    ell: f64,
    c: f64,
    noise: &SgdNoiseModel,
    initial_gap: f64,
) -> Result<f64, ConvergenceError> {
    if k < 1 {
        return Err(ConvergenceError::InvalidIterationIndex);
    }
    if !(0.0 < c && c <= ell) {
        return Err(ConvergenceError::InvalidCurvatureConstants { c, ell });
    }
    let m_g = noise.m_g();
    let contraction_term = c * noise.mu * noise.mu / (ell * m_g);
    if !(contraction_term > 0.0 && contraction_term <= 1.0) {
        return Err(ConvergenceError::ContractionOutOfRange(contraction_term));
    }
    let factor = 1.0 - contraction_term;
    let offset = if noise.m == 0.0 {
        0.0
    } else {
        noise.m / (2.0 * c * m_g)
    };
    Ok(factor.powi(k as i32 - 1) * (initial_gap - offset) + offset)
}

/// Two runs differing only in the gradient transform, compared by the
/// first iterate reaching a target loss.
#[derive(Debug, Clone)]
pub struct RaceResult {
    pub iterations_baseline: Option<usize>,
    pub iterations_treatment: Option<usize>,
    pub baseline_diverged: bool,
    pub treatment_diverged: bool,
    pub target_loss: f64,
    pub baseline: Trajectory,
    pub treatment: Trajectory,
}

impl RaceResult {
    /// True when the treatment arm reached the target in strictly fewer
    /// iterations.
    pub fn treatment_faster(&self) -> bool {
        match (self.iterations_treatment, self.iterations_baseline) {
            (Some(t), Some(b)) => t < b,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

pub fn race(
    problem: &Problem,
    baseline: &OptimizerSpec,
    treatment: &OptimizerSpec,
    w0: &[f64],
    target_loss: f64,
    max_iters: usize,
    seed: u64,
) -> Result<RaceResult, ConvergenceError> {
    if baseline.eta != treatment.eta || baseline.kind != treatment.kind {
        return Err(ConvergenceError::MismatchedArms);
    }
    let base = run(problem, baseline, w0, max_iters, Some(target_loss), seed)?;
    let treat = run(problem, treatment, w0, max_iters, Some(target_loss), seed)?;
    Ok(RaceResult {
        iterations_baseline: base.first_at_or_below(target_loss),
        iterations_treatment: treat.first_at_or_below(target_loss),
        baseline_diverged: base.diverged,
        treatment_diverged: treat.diverged,
        target_loss,
        baseline: base,
        treatment: treat,
    })
}

/// Displacement of the parameter vector after `delta` steps from a
/// start near a saddle.
#[derive(Debug, Clone)]
pub struct EscapeResult {
    pub displacement: f64,
    pub diverged: bool,
    pub trajectory: Trajectory,
}

pub fn saddle_escape(
    problem: &Problem,
    spec: &OptimizerSpec,
    w_start: &[f64],
    delta: usize,
) -> Result<EscapeResult, ConvergenceError> {
    let trajectory = run(problem, spec, w_start, delta, None, 0)?;
    let end = trajectory.final_iterate();
    let displacement = w_start
        .iter()
        .zip(end)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(EscapeResult {
        displacement,
        diverged: trajectory.diverged,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaf::GafSpec;
    use crate::optim::OptimizerSpec;
    use crate::problems::{builtin_problem, BuiltinProblem};
    use crate::transforms::GradientTransform;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn bound_at_first_iterate_equals_initial_gap() {
        let noise = SgdNoiseModel::deterministic();
        let gap = sgd_gap_bound(1, 2.0, 0.4, &noise, 1.2).unwrap();
        assert_eq!(gap, 1.2);
    }

    #[test]
    fn deterministic_bound_matches_direct_arithmetic() {
        let noise = SgdNoiseModel::deterministic();
        let gap = sgd_gap_bound(11, 2.0, 0.4, &noise, 1.2).unwrap();
        assert_relative_eq!(gap, 0.8f64.powi(10) * 1.2, max_relative = 1e-15);
        assert_abs_diff_eq!(gap, 0.1073741824 * 1.2, epsilon = 1e-12);
    }

    #[test]
    fn bound_decreases_when_convexity_constant_grows() {
        let noise = SgdNoiseModel::deterministic();
        let loose = sgd_gap_bound(5, 2.0, 0.4, &noise, 1.0).unwrap();
        let tight = sgd_gap_bound(5, 2.0, 0.8, &noise, 1.0).unwrap();
        assert!(tight < loose);
    }

    #[test]
    fn bound_rejects_bad_premises() {
        let noise = SgdNoiseModel::deterministic();
        assert!(matches!(
            sgd_gap_bound(0, 2.0, 0.4, &noise, 1.0),
            Err(ConvergenceError::InvalidIterationIndex)
        ));
        assert!(matches!(
            sgd_gap_bound(3, 0.4, 2.0, &noise, 1.0),
            Err(ConvergenceError::InvalidCurvatureConstants { .. })
        ));
        assert!(SgdNoiseModel::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(SgdNoiseModel::new(1.0, 0.5, 0.0, 0.0).is_err());
        assert!(SgdNoiseModel::new(1.0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn noise_model_composite_constant() {
        let noise = SgdNoiseModel::new(0.5, 2.0, 1.0, 3.0).unwrap();
        assert_eq!(noise.m_g(), 3.0 + 4.0);
    }

    #[test]
    fn empirical_gap_never_exceeds_the_bound() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let noise = SgdNoiseModel::deterministic();
        // eta = mu / (ell * M_G) = 1/2
        let spec = OptimizerSpec::gd(0.5, GradientTransform::Identity);
        let t = run(&p, &spec, &[1.0, 1.0], 200, None, 0).unwrap();
        let gap1 = t.losses[0];
        for (i, &loss) in t.losses.iter().enumerate() {
            let bound = sgd_gap_bound(i + 1, 2.0, 0.4, &noise, gap1).unwrap();
            assert!(loss <= bound + 1e-15, "k={} loss={loss} bound={bound}", i + 1);
        }
    }

    #[test]
    fn gaf_arm_wins_the_low_gradient_race() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let baseline = OptimizerSpec::gd(0.1, GradientTransform::Identity);
        let treatment = OptimizerSpec::gd(
            0.1,
            GradientTransform::Gaf(GafSpec::arctan(0.1, 20.0).unwrap()),
        );
        let result = race(&p, &baseline, &treatment, &[0.05, 0.05], 1e-8, 20_000, 0).unwrap();
        let b = result.iterations_baseline.unwrap();
        let t = result.iterations_treatment.unwrap();
        assert!(t < b, "treatment {t} baseline {b}");
        assert!(result.treatment_faster());
    }

    #[test]
    fn identical_arms_tie_exactly() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let spec = OptimizerSpec::gd(0.1, GradientTransform::Identity);
        let result = race(&p, &spec, &spec, &[0.5, 0.5], 1e-6, 10_000, 0).unwrap();
        assert_eq!(result.iterations_baseline, result.iterations_treatment);
        assert!(!result.treatment_faster());
    }

    #[test]
    fn mismatched_arms_are_rejected() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let a = OptimizerSpec::gd(0.1, GradientTransform::Identity);
        let b = OptimizerSpec::gd(0.2, GradientTransform::Identity);
        assert!(matches!(
            race(&p, &a, &b, &[0.5, 0.5], 1e-6, 100, 0),
            Err(ConvergenceError::MismatchedArms)
        ));
    }

    #[test]
    fn identity_saddle_displacement_matches_closed_form() {
        let p = builtin_problem(BuiltinProblem::Saddle).unwrap();
        let spec = OptimizerSpec::gd(0.01, GradientTransform::Identity);
        let res = saddle_escape(&p, &spec, &[0.0, 1e-3], 50).unwrap();
        // w2 grows by (1 + 2*eta) each step, w1 stays at 0
        let expected = (1.02f64.powi(50) - 1.0) * 1e-3;
        assert_abs_diff_eq!(res.displacement, expected, epsilon = 1e-9);
    }

    #[test]
    fn gaf_escapes_the_saddle_faster() {
        let p = builtin_problem(BuiltinProblem::Saddle).unwrap();
        let identity = OptimizerSpec::gd(0.01, GradientTransform::Identity);
        let gaf = OptimizerSpec::gd(
            0.01,
            GradientTransform::Gaf(GafSpec::arctan(0.1, 20.0).unwrap()),
        );
        let base = saddle_escape(&p, &identity, &[0.0, 1e-3], 50).unwrap();
        let treat = saddle_escape(&p, &gaf, &[0.0, 1e-3], 50).unwrap();
        assert!(treat.displacement > base.displacement);
        // per-step displacement dominates while gradients stay amplified
        for (a, b) in base
            .trajectory
            .iterates
            .windows(2)
            .zip(treat.trajectory.iterates.windows(2))
        {
            let da = (a[1][1] - a[0][1]).abs();
            let db = (b[1][1] - b[0][1]).abs();
            assert!(db >= da);
        }
    }

    #[test]
    fn zero_steps_means_zero_displacement() {
        let p = builtin_problem(BuiltinProblem::Saddle).unwrap();
        let spec = OptimizerSpec::gd(0.01, GradientTransform::Identity);
        let res = saddle_escape(&p, &spec, &[0.0, 1e-3], 0).unwrap();
        assert_eq!(res.displacement, 0.0);
    }

    #[test]
    fn exact_saddle_point_is_stationary_for_both_arms() {
        let p = builtin_problem(BuiltinProblem::Saddle).unwrap();
        for transform in [
            GradientTransform::Identity,
            GradientTransform::Gaf(GafSpec::arctan(0.1, 20.0).unwrap()),
        ] {
            let spec = OptimizerSpec::gd(0.01, transform);
            let res = saddle_escape(&p, &spec, &[0.0, 0.0], 50).unwrap();
            assert_eq!(res.displacement, 0.0);
        }
    }

    #[test]
    fn transformed_contraction_factor_is_smaller_on_premise_problem() {
        use crate::curvature::{check_condition_reduction, RegionSpec};
        let p = builtin_problem(BuiltinProblem::QuarticWell).unwrap();
        let gaf = GradientTransform::Gaf(GafSpec::arctan(0.1, 20.0).unwrap());
        let region = RegionSpec::new(vec![(-1.5, 1.5)], 301).with_segments(0.05, 0.5);
        let report = check_condition_reduction(&p, &gaf, &region).unwrap();
        assert!(report.premise_failures.is_empty());
        let noise = SgdNoiseModel::deterministic();
        let factor = |ell: f64, c: f64| 1.0 - c * noise.mu * noise.mu / (ell * noise.m_g());
        let original = factor(report.original.ell, report.original.c);
        let transformed = factor(report.transformed.ell, report.transformed.c);
        assert!(transformed < original);
    }
}

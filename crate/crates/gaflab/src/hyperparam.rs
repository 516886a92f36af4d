//! Hyperparameter determination: gradient-magnitude statistics over
//! training, loss-curve-shape classification, and ordered GAF
//! parameter suggestions.

use crate::gaf::GafSpec;
use crate::optim::Trajectory;
use thiserror::Error;

/// Normalized-evidence threshold below which a slice counts as quadric.
pub const CLASSIFIER_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum HyperparamError {
    #[error("trajectory has no recorded steps")]
    EmptyTrajectory,
    #[error("epoch length must be at least 1")]
    InvalidEpochLength,
    #[error("loss slice needs at least 21 samples, got {0}")]
    SliceTooSmall(usize),
    #[error("loss slice is not unimodal")]
    NotUnimodal,
    #[error("gradient statistics must have a positive global maximum")]
    InvalidStats,
}

/// Per-epoch maxima of the gradient-magnitude channel of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct GradStats {
    pub per_epoch_max_abs: Vec<f64>,
    pub global_max_abs: f64,
    pub epochs: usize,
}

impl GradStats {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,max_abs_grad\n");
        for (i, m) in self.per_epoch_max_abs.iter().enumerate() {
            out.push_str(&format!("{i},{m}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveLabel {
    Type1Flat,
    Type2Sharp,
    Quadric,
}

impl CurveLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveLabel::Type1Flat => "type1_flat",
            CurveLabel::Type2Sharp => "type2_sharp",
            CurveLabel::Quadric => "quadric",
        }
    }
}

/// Classification outcome with its signed deviation score from the
/// best-fit quadratic (positive: flatter than quadratic near the
/// minimum; negative: sharper).
#[derive(Debug, Clone, Copy)]
pub struct CurveClass {
    pub label: CurveLabel,
    pub evidence: f64,
}

/// Aggregates the per-step max-|g| channel of a trajectory into
/// per-epoch maxima.
pub fn record_grad_stats(
    trajectory: &Trajectory,
    epoch_length: usize,
) -> Result<GradStats, HyperparamError> {
    if trajectory.grad_max_abs.is_empty() {
        return Err(HyperparamError::EmptyTrajectory);
    }
    if epoch_length == 0 {
        return Err(HyperparamError::InvalidEpochLength);
    }
    let per_epoch_max_abs: Vec<f64> = trajectory
        .grad_max_abs
        .chunks(epoch_length)
        .map(|chunk| chunk.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let global_max_abs = per_epoch_max_abs
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GradStats {
        epochs: per_epoch_max_abs.len(),
        per_epoch_max_abs,
        global_max_abs,
    })
}

/// Classifies a symmetric 1-D loss slice as flatter than, sharper
/// than, or indistinguishable from a quadratic.
///
/// The reference quadratic `a·(w − w*)²` is fit by least squares
/// through the slice minimum; the evidence is the normalized gap
/// between the mean residual on the outer half of the slice and the
/// mean residual on the inner half. A flat-bottomed curve sits below
/// its fit near the minimum and above it in the tails, giving positive
/// evidence; a sharp-bottomed curve gives the reverse.
pub fn classify_curve(loss_slice: &[(f64, f64)]) -> Result<CurveClass, HyperparamError> {
    if loss_slice.len() < 21 {
        return Err(HyperparamError::SliceTooSmall(loss_slice.len()));
    }
    let (min_idx, &(w_star, l_star)) = loss_slice
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty slice");
    // unimodality: non-decreasing away from the minimum on both sides
    let slack = 1e-12
        * loss_slice
            .iter()
            .map(|&(_, l)| l.abs())
            .fold(1.0, f64::max);
    for pair in loss_slice[min_idx..].windows(2) {
        if pair[1].1 < pair[0].1 - slack {
            return Err(HyperparamError::NotUnimodal);
        }
    }
    for pair in loss_slice[..=min_idx].windows(2) {
        if pair[0].1 < pair[1].1 - slack {
            return Err(HyperparamError::NotUnimodal);
        }
    }

    let centered: Vec<(f64, f64)> = loss_slice
        .iter()
        .map(|&(w, l)| (w - w_star, l - l_star))
        .collect();
    let num: f64 = centered.iter().map(|&(d, l)| l * d * d).sum();
    let den: f64 = centered.iter().map(|&(d, _)| d.powi(4)).sum();
    let a = if den > 0.0 { num / den } else { 0.0 };

    let half_range = centered
        .iter()
        .map(|&(d, _)| d.abs())
        .fold(0.0, f64::max);
    let scale = centered.iter().map(|&(_, l)| l.abs()).fold(0.0, f64::max);
    if half_range == 0.0 || scale == 0.0 {
        return Ok(CurveClass {
            label: CurveLabel::Quadric,
            evidence: 0.0,
        });
    }
    let (mut inner_sum, mut inner_n, mut outer_sum, mut outer_n) = (0.0, 0usize, 0.0, 0usize);
    for &(d, l) in &centered {
        let residual = l - a * d * d;
        if d.abs() <= 0.5 * half_range {
            inner_sum += residual;
            inner_n += 1;
        } else {
            outer_sum += residual;
            outer_n += 1;
        }
    }
    let evidence =
        (outer_sum / outer_n.max(1) as f64 - inner_sum / inner_n.max(1) as f64) / scale;
    let label = if evidence.abs() <= CLASSIFIER_TOL {
        CurveLabel::Quadric
    } else if evidence > 0.0 {
        CurveLabel::Type1Flat
    } else {
        CurveLabel::Type2Sharp
    };
    Ok(CurveClass { label, evidence })
}

/// Ordered GAF suggestions: the two robust defaults first, then a
/// problem-adapted set whose ceiling matches the observed gradient
/// scale. A quadric verdict keeps only the defaults.
pub fn suggest_params(
    stats: &GradStats,
    curve: &CurveClass,
) -> Result<Vec<GafSpec>, HyperparamError> {
    if !(stats.global_max_abs > 0.0) || !stats.global_max_abs.is_finite() {
        return Err(HyperparamError::InvalidStats);
    }
    let mut out = vec![
        GafSpec::arctan(0.1, 20.0).expect("valid default"),
        GafSpec::arctan(0.2, 10.0).expect("valid default"),
    ];
    let alpha = stats.global_max_abs;
    match curve.label {
        CurveLabel::Type1Flat => {
            let beta = (2.0 / alpha).max(1.1 / alpha);
            out.push(GafSpec::arctan(alpha, beta).expect("positive parameters"));
        }
        CurveLabel::Type2Sharp => {
            out.push(GafSpec::arctan(alpha, 0.9 / alpha).expect("positive parameters"));
        }
        CurveLabel::Quadric => {}
    }
    Ok(out)
}

/// Human-readable report block for a suggestion run.
pub fn suggestion_report(stats: &GradStats, curve: &CurveClass, specs: &[GafSpec]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "curve class: {} (evidence {:.6e}, quadric tolerance {CLASSIFIER_TOL:e})\n",
        curve.label.as_str(),
        curve.evidence
    ));
    out.push_str(&format!(
        "global max |g|: {} over {} epochs\n",
        stats.global_max_abs, stats.epochs
    ));
    for (i, s) in specs.iter().enumerate() {
        out.push_str(&format!(
            "suggestion {}: arctan(alpha={}, beta={}) alpha*beta={}\n",
            i + 1,
            s.alpha,
            s.beta,
            s.alpha * s.beta
        ));
    }
    out
}

//! Empirical secant-ratio estimators for the tight Lipschitz constant,
//! the tight strong-convexity constant, and their ratio, with
//! low/high-gradient segmentation.

use crate::problems::Problem;
use crate::transforms::GradientTransform;
use thiserror::Error;

/// Pairs closer than this are treated as coincident and skipped.
const COINCIDENT_TOL: f64 = 1e-12;
/// Grid-size cap keeping the pairwise enumeration at desk scale.
const MAX_GRID_POINTS: usize = 2500;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("region bounds are empty or inverted")]
    InvalidRegion,
    #[error("epsilon0 must not exceed epsilon2")]
    InvalidThresholds,
    #[error("grid needs at least 2 points per dimension")]
    GridTooSmall,
    #[error("grid of {0} points exceeds the pair-enumeration budget")]
    GridTooLarge(usize),
    #[error("no admissible point pair in the region")]
    NoAdmissiblePairs,
    #[error("all secants are zero; constants are undefined for a constant field")]
    DegenerateField,
}

/// A sampled box region with optional low/high gradient thresholds.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub bounds: Vec<(f64, f64)>,
    pub points_per_dim: usize,
    pub epsilon0: Option<f64>,
    pub epsilon2: Option<f64>,
}

impl RegionSpec {
    pub fn new(bounds: Vec<(f64, f64)>, points_per_dim: usize) -> Self {
        Self {
            bounds,
            points_per_dim,
            epsilon0: None,
            epsilon2: None,
        }
    }

    pub fn with_segments(mut self, epsilon0: f64, epsilon2: f64) -> Self {
        self.epsilon0 = Some(epsilon0);
        self.epsilon2 = Some(epsilon2);
        self
    }

    fn validate(&self) -> Result<(), CurvatureError> {
        if self.bounds.is_empty() || self.bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(CurvatureError::InvalidRegion);
        }
        if self.points_per_dim < 2 {
            return Err(CurvatureError::GridTooSmall);
        }
        if let (Some(e0), Some(e2)) = (self.epsilon0, self.epsilon2) {
            if e0 > e2 {
                return Err(CurvatureError::InvalidThresholds);
            }
        }
        let total = self.points_per_dim.pow(self.bounds.len() as u32);
        if total > MAX_GRID_POINTS {
            return Err(CurvatureError::GridTooLarge(total));
        }
        Ok(())
    }

    /// Regular grid over the box, row-major in dimension order.
    pub fn grid_points(&self) -> Result<Vec<Vec<f64>>, CurvatureError> {
        self.validate()?;
        let dim = self.bounds.len();
        let n = self.points_per_dim;
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|(lo, hi)| {
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            })
            .collect();
        let total = n.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut p = Vec::with_capacity(dim);
            for axis in axes.iter().rev() {
                p.push(axis[rem % n]);
                rem /= n;
            }
            p.reverse();
            points.push(p);
        }
        Ok(points)
    }

    /// Deterministic hash of the region definition, used in file names.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |bits: u64| {
            h ^= bits;
            h = h.wrapping_mul(0x100000001b3);
        };
        for (lo, hi) in &self.bounds {
            mix(lo.to_bits());
            mix(hi.to_bits());
        }
        mix(self.points_per_dim as u64);
        mix(self.epsilon0.unwrap_or(f64::NAN).to_bits());
        mix(self.epsilon2.unwrap_or(f64::NAN).to_bits());
        h
    }
}

/// Empirical curvature constants over a sampled region.
#[derive(Debug, Clone)]
pub struct CurvatureEstimate {
    /// Max secant ratio (tight Lipschitz constant of the field).
    pub ell: f64,
    /// Min secant ratio (tight strong-convexity constant).
    pub c: f64,
    /// `ell / c`; infinite when the minimum secant is zero.
    pub zeta: f64,
    pub ell_low: Option<f64>,
    pub ell_high: Option<f64>,
    pub c_low: Option<f64>,
    pub c_high: Option<f64>,
    pub pair_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Segment {
    Low,
    High,
    Middle,
}

fn classify(grad: &[f64], epsilon0: Option<f64>, epsilon2: Option<f64>) -> Segment {
    match (epsilon0, epsilon2) {
        (Some(e0), _) if grad.iter().all(|g| g.abs() <= e0) => Segment::Low,
        (_, Some(e2)) if grad.iter().all(|g| g.abs() > e2) => Segment::High,
        _ => Segment::Middle,
    }
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Max/min of the gradient secant ratio over all grid-point pairs, plus
/// per-segment values when thresholds are set.
pub fn estimate_curvature<F>(field: F, region: &RegionSpec) -> Result<CurvatureEstimate, CurvatureError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let points = region.grid_points()?;
    let values: Vec<Vec<f64>> = points.iter().map(|p| field(p)).collect();
    let segments: Vec<Segment> = values
        .iter()
        .map(|g| classify(g, region.epsilon0, region.epsilon2))
        .collect();

    let mut ell = f64::NEG_INFINITY;
    let mut c = f64::INFINITY;
    let mut ell_low = f64::NEG_INFINITY;
    let mut c_low = f64::INFINITY;
    let mut ell_high = f64::NEG_INFINITY;
    let mut c_high = f64::INFINITY;
    let mut pair_count = 0usize;
    let mut low_pairs = 0usize;
    let mut high_pairs = 0usize;

    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dw = norm_diff(&points[i], &points[j]);
            if dw <= COINCIDENT_TOL {
                continue;
            }
            let ratio = norm_diff(&values[i], &values[j]) / dw;
            pair_count += 1;
            ell = ell.max(ratio);
            c = c.min(ratio);
            match (segments[i], segments[j]) {
                (Segment::Low, Segment::Low) => {
                    low_pairs += 1;
                    ell_low = ell_low.max(ratio);
                    c_low = c_low.min(ratio);
                }
                (Segment::High, Segment::High) => {
                    high_pairs += 1;
                    ell_high = ell_high.max(ratio);
                    c_high = c_high.min(ratio);
                }
                _ => {}
            }
        }
    }

    if pair_count == 0 {
        return Err(CurvatureError::NoAdmissiblePairs);
    }
    if ell == 0.0 {
        return Err(CurvatureError::DegenerateField);
    }
    let seg = |v: f64, count: usize, is_max: bool| {
        if count == 0 {
            None
        } else if is_max {
            (v > f64::NEG_INFINITY).then_some(v)
        } else {
            (v < f64::INFINITY).then_some(v)
        }
    };
    Ok(CurvatureEstimate {
        ell,
        c,
        zeta: ell / c,
        ell_low: seg(ell_low, low_pairs, true),
        ell_high: seg(ell_high, high_pairs, true),
        c_low: seg(c_low, low_pairs, false),
        c_high: seg(c_high, high_pairs, false),
        pair_count,
    })
}

/// Condition-number comparison of a problem's gradient field with and
/// without a transform, including the per-segment premise and secant
/// checks that support the comparison.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub zeta_original: f64,
    pub zeta_transformed: f64,
    pub reduced: bool,
    pub original: CurvatureEstimate,
    pub transformed: CurvatureEstimate,
    /// Premise violations, empty when all hold (or when the transform is
    /// not an activation, where the premises do not apply).
    pub premise_failures: Vec<String>,
    /// Low-segment pairs: transformed secant strictly larger.
    pub low_segment_expansion_ok: Option<bool>,
    /// High-segment pairs: transformed secant strictly smaller.
    pub high_segment_contraction_ok: Option<bool>,
    /// Smallest sampled slope-crossing point in [epsilon0, epsilon2],
    /// when the transform is an activation.
    pub epsilon1: Option<f64>,
}

pub fn check_condition_reduction(
    problem: &Problem,
    transform: &GradientTransform,
    region: &RegionSpec,
) -> Result<ConditionReport, CurvatureError> {
    let raw_field = |w: &[f64]| problem.grad(w);
    let transformed_field = |w: &[f64]| transform.apply(&problem.grad(w)).expect("finite gradient");

    let original = estimate_curvature(raw_field, region)?;
    let transformed = estimate_curvature(transformed_field, region)?;

    let mut premise_failures = Vec::new();
    let mut epsilon1 = None;
    let mut low_ok = None;
    let mut high_ok = None;

    if let GradientTransform::Gaf(spec) = transform {
        match (original.ell_low, original.ell_high) {
            (Some(l), Some(h)) if l < h => {}
            (Some(_), Some(_)) => premise_failures.push("ell_low < ell_high".into()),
            _ => premise_failures.push("low/high segment empty for ell".into()),
        }
        match (original.c_low, original.c_high) {
            (Some(l), Some(h)) if l < h => {}
            (Some(_), Some(_)) => premise_failures.push("c_low < c_high".into()),
            _ => premise_failures.push("low/high segment empty for c".into()),
        }
        if let (Some(e0), Some(e2)) = (region.epsilon0, region.epsilon2) {
            // Slope above 1 at every gradient value encountered in the
            // low segment.
            let points = region.grid_points()?;
            let slope_ok = points
                .iter()
                .map(|p| problem.grad(p))
                .filter(|g| classify(g, region.epsilon0, region.epsilon2) == Segment::Low)
                .flatten()
                .all(|g| spec.deriv(g).expect("finite") > 1.0);
            if !slope_ok {
                premise_failures.push("activation slope > 1 on the low segment".into());
            }
            // Smallest point in [e0, e2] where the slope falls to 1.
            let samples = 1001;
            epsilon1 = (0..samples)
                .map(|i| e0 + (e2 - e0) * i as f64 / (samples - 1) as f64)
                .find(|&g| spec.deriv(g).expect("finite") <= 1.0);
            if epsilon1.is_none() {
                premise_failures.push("no slope-crossing point in [epsilon0, epsilon2]".into());
            }
            if spec.eval(e2).expect("finite") > e2 {
                premise_failures.push("activation exceeds identity at epsilon2".into());
            }
        } else {
            premise_failures.push("epsilon0/epsilon2 not set".into());
        }

        if premise_failures.is_empty() {
            let (l, h) = per_segment_secant_checks(problem, transform, region)?;
            low_ok = Some(l);
            high_ok = Some(h);
        }
    }

    Ok(ConditionReport {
        zeta_original: original.zeta,
        zeta_transformed: transformed.zeta,
        reduced: transformed.zeta < original.zeta,
        original,
        transformed,
        premise_failures,
        low_segment_expansion_ok: low_ok,
        high_segment_contraction_ok: high_ok,
        epsilon1,
    })
}

/// For every admissible pair with both endpoints in the low (resp. high)
/// segment, the transformed gradient difference must be strictly larger
/// (resp. smaller) than the raw difference.
fn per_segment_secant_checks(
    problem: &Problem,
    transform: &GradientTransform,
    region: &RegionSpec,
) -> Result<(bool, bool), CurvatureError> {
    let points = region.grid_points()?;
    let raw: Vec<Vec<f64>> = points.iter().map(|p| problem.grad(p)).collect();
    let mapped: Vec<Vec<f64>> = raw
        .iter()
        .map(|g| transform.apply(g).expect("finite gradient"))
        .collect();
    let segments: Vec<Segment> = raw
        .iter()
        .map(|g| classify(g, region.epsilon0, region.epsilon2))
        .collect();
    let mut low_ok = true;
    let mut high_ok = true;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dg = norm_diff(&raw[i], &raw[j]);
            if dg <= COINCIDENT_TOL {
                continue;
            }
            let dm = norm_diff(&mapped[i], &mapped[j]);
            match (segments[i], segments[j]) {
                (Segment::Low, Segment::Low) if dm <= dg => low_ok = false,
                (Segment::High, Segment::High) if dm >= dg => high_ok = false,
                _ => {}
            }
        }
    }
    Ok((low_ok, high_ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaf::GafSpec;
    use crate::problems::{builtin_problem, BuiltinProblem};
    use approx::assert_relative_eq;

    fn paper_quadratic_region() -> RegionSpec {
        RegionSpec::new(vec![(-1.0, 1.0), (-1.0, 1.0)], 21)
    }

    #[test]
    fn recovers_quadratic_eigenvalues() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let est = estimate_curvature(|w| p.grad(w), &paper_quadratic_region()).unwrap();
        assert_relative_eq!(est.ell, 2.0, max_relative = 0.02);
        assert_relative_eq!(est.c, 0.4, max_relative = 0.02);
        assert_relative_eq!(est.zeta, 5.0, max_relative = 0.02);
        assert_eq!(est.zeta, est.ell / est.c);
    }

    #[test]
    fn constant_field_is_degenerate() {
        let region = RegionSpec::new(vec![(-1.0, 1.0)], 11);
        let err = estimate_curvature(|_| vec![3.0], &region).unwrap_err();
        assert!(matches!(err, CurvatureError::DegenerateField));
    }

    #[test]
    fn secant_ratios_are_homogeneous_in_field_scale() {
        let p = builtin_problem(BuiltinProblem::QuarticWell).unwrap();
        let region = RegionSpec::new(vec![(-1.5, 1.5)], 101);
        let base = estimate_curvature(|w| p.grad(w), &region).unwrap();
        let scaled = estimate_curvature(
            |w| p.grad(w).iter().map(|g| 3.0 * g).collect(),
            &region,
        )
        .unwrap();
        assert_relative_eq!(scaled.ell, 3.0 * base.ell, max_relative = 1e-12);
        assert_relative_eq!(scaled.c, 3.0 * base.c, max_relative = 1e-12);
        assert_relative_eq!(scaled.zeta, base.zeta, max_relative = 1e-10);
    }

    #[test]
    fn grid_budget_is_enforced() {
        let region = RegionSpec::new(vec![(-1.0, 1.0), (-1.0, 1.0)], 60);
        assert!(matches!(
            region.grid_points(),
            Err(CurvatureError::GridTooLarge(3600))
        ));
    }

    #[test]
    fn quartic_well_condition_number_is_reduced_by_arctan() {
        let p = builtin_problem(BuiltinProblem::QuarticWell).unwrap();
        let gaf = GradientTransform::Gaf(GafSpec::arctan(0.1, 20.0).unwrap());
        let region = RegionSpec::new(vec![(-1.5, 1.5)], 301).with_segments(0.05, 0.5);
        let report = check_condition_reduction(&p, &gaf, &region).unwrap();
        assert!(report.premise_failures.is_empty(), "{:?}", report.premise_failures);
        assert!(report.reduced);
        assert!(report.zeta_transformed < report.zeta_original);
        assert_eq!(report.low_segment_expansion_ok, Some(true));
        assert_eq!(report.high_segment_contraction_ok, Some(true));
        assert!(report.epsilon1.is_some());
    }

    #[test]
    fn identity_transform_leaves_zeta_unchanged() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let report = check_condition_reduction(
            &p,
            &GradientTransform::Identity,
            &paper_quadratic_region(),
        )
        .unwrap();
        assert_eq!(report.zeta_original, report.zeta_transformed);
        assert!(!report.reduced);
    }

    #[test]
    fn norm_clipping_worsens_the_condition_number() {
        let p = builtin_problem(BuiltinProblem::PaperQuadratic).unwrap();
        let clip = GradientTransform::clip_norm(0.1).unwrap();
        let report =
            check_condition_reduction(&p, &clip, &paper_quadratic_region()).unwrap();
        assert!(report.zeta_transformed > report.zeta_original);
        assert!(!report.reduced);
    }

    #[test]
    fn low_band_secants_expand_for_steep_activation() {
        // slope > 1 on a band implies every in-band pair expands
        let spec = GafSpec::arctan(0.1, 20.0).unwrap();
        let vals: Vec<f64> = (0..200).map(|i| -0.045 + 0.09 * i as f64 / 199.0).collect();
        for (i, &a) in vals.iter().enumerate() {
            for &b in &vals[i + 1..] {
                let da = (spec.eval(a).unwrap() - spec.eval(b).unwrap()).abs();
                assert!(da > (a - b).abs());
            }
        }
    }

    #[test]
    fn high_tail_secants_contract_for_saturated_activation() {
        let spec = GafSpec::arctan(0.1, 20.0).unwrap();
        let vals: Vec<f64> = (0..100)
            .map(|i| 0.51 + 2.0 * i as f64 / 99.0)
            .flat_map(|v| [v, -v])
            .collect();
        for (i, &a) in vals.iter().enumerate() {
            for &b in &vals[i + 1..] {
                if (a - b).abs() <= 1e-12 {
                    continue;
                }
                let da = (spec.eval(a).unwrap() - spec.eval(b).unwrap()).abs();
                assert!(da < (a - b).abs());
            }
        }
    }
}

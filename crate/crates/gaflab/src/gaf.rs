//! Gradient activation functions: closed forms, derivatives, validity
//! checks, and the positive fixed point that separates amplification
//! from attenuation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute residual tolerance for the fixed-point bisection.
pub const EPSILON3_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GafError {
    #[error("gaf.alpha must be strictly positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("gaf.beta must be strictly positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("input must be finite, got {0}")]
    NonFiniteInput(f64),
    #[error("second derivative of the log-type activation is undefined at 0")]
    UndefinedPoint,
    #[error("validation grid must be non-empty, finite, and symmetric about 0")]
    InvalidGrid,
    #[error("validation grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GafKind {
    Arctan,
    Tanh,
    Log,
}

impl GafKind {
    pub fn name(&self) -> &'static str {
        match self {
            GafKind::Arctan => "arctan",
            GafKind::Tanh => "tanh",
            GafKind::Log => "log",
        }
    }
}

/// A gradient activation function with shape factors `alpha` (output
/// scale) and `beta` (input scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GafSpec {
    pub kind: GafKind,
    pub alpha: f64,
    pub beta: f64,
}

impl GafSpec {
    pub fn new(kind: GafKind, alpha: f64, beta: f64) -> Result<Self, GafError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(GafError::InvalidAlpha(alpha));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(GafError::InvalidBeta(beta));
        }
        Ok(Self { kind, alpha, beta })
    }

    pub fn arctan(alpha: f64, beta: f64) -> Result<Self, GafError> {
        Self::new(GafKind::Arctan, alpha, beta)
    }

    pub fn tanh(alpha: f64, beta: f64) -> Result<Self, GafError> {
        Self::new(GafKind::Tanh, alpha, beta)
    }

    pub fn log(alpha: f64, beta: f64) -> Result<Self, GafError> {
        Self::new(GafKind::Log, alpha, beta)
    }

    /// Slope at the origin; equals `alpha * beta` for every kind.
    pub fn slope_at_origin(&self) -> f64 {
        self.alpha * self.beta
    }

    pub fn label(&self) -> String {
        format!("{}({},{})", self.kind.name(), self.alpha, self.beta)
    }

    /// The activated gradient value.
    pub fn eval(&self, g: f64) -> Result<f64, GafError> {
        if !g.is_finite() {
            return Err(GafError::NonFiniteInput(g));
        }
        let x = self.beta * g;
        let y = match self.kind {
            GafKind::Arctan => self.alpha * x.atan(),
            GafKind::Tanh => self.alpha * x.tanh(),
            // alpha * (ln(relu(x)+1) - ln(relu(-x)+1)); exactly one branch
            // is active for x != 0.
            GafKind::Log => self.alpha * ((x.max(0.0) + 1.0).ln() - ((-x).max(0.0) + 1.0).ln()),
        };
        Ok(y)
    }

    /// First derivative with respect to the raw gradient.
    pub fn deriv(&self, g: f64) -> Result<f64, GafError> {
        if !g.is_finite() {
            return Err(GafError::NonFiniteInput(g));
        }
        let x = self.beta * g;
        let ab = self.alpha * self.beta;
        let d = match self.kind {
            GafKind::Arctan => ab / (1.0 + x * x),
            // sech²(x) in exponential form; 1 − tanh²(x) rounds to zero
            // once tanh saturates near |x| ≈ 20
            GafKind::Tanh => ab * sech_squared(x),
            GafKind::Log => ab / (1.0 + x.abs()),
        };
        Ok(d)
    }

    /// Second derivative with respect to the raw gradient. The log kind
    /// has a curvature jump at the origin, reported as an error.
    pub fn second_deriv(&self, g: f64) -> Result<f64, GafError> {
        if !g.is_finite() {
            return Err(GafError::NonFiniteInput(g));
        }
        let x = self.beta * g;
        let ab2 = self.alpha * self.beta * self.beta;
        let d = match self.kind {
            GafKind::Arctan => {
                let denom = 1.0 + x * x;
                -2.0 * ab2 * x / (denom * denom)
            }
            GafKind::Tanh => -2.0 * ab2 * x.tanh() * sech_squared(x),
            GafKind::Log => {
                if g == 0.0 {
                    return Err(GafError::UndefinedPoint);
                }
                let denom = 1.0 + x.abs();
                -ab2 * x.signum() / (denom * denom)
            }
        };
        Ok(d)
    }

    /// Checks the four validity conditions numerically on `grid`:
    /// positive slope, oddness, eventual domination by the identity, and
    /// concavity for positive inputs.
    pub fn validate(&self, grid: &[f64]) -> Result<GafValidationReport, GafError> {
        const MIN_POINTS: usize = 101;
        if grid.len() < MIN_POINTS {
            return Err(GafError::GridTooSmall {
                min: MIN_POINTS,
                got: grid.len(),
            });
        }
        if grid.iter().any(|g| !g.is_finite()) {
            return Err(GafError::InvalidGrid);
        }
        // Symmetry about 0: every point must have its mirror on the grid.
        let mut sorted = grid.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (lo, hi) in sorted.iter().zip(sorted.iter().rev()) {
            if (lo + hi).abs() > 1e-12 {
                return Err(GafError::InvalidGrid);
            }
        }

        let mut failures = Vec::new();
        let mut monotone_ok = true;
        let mut odd_ok = true;
        let mut curvature_sign_ok = true;

        for &g in grid {
            if self.deriv(g)? <= 0.0 {
                monotone_ok = false;
                failures.push((g, ValidityCondition::MonotoneIncreasing));
            }
            if (self.eval(g)? + self.eval(-g)?).abs() > 1e-12 {
                odd_ok = false;
                failures.push((g, ValidityCondition::Odd));
            }
            if g != 0.0 {
                match self.second_deriv(g) {
                    Ok(dd) => {
                        if g * dd >= 0.0 {
                            curvature_sign_ok = false;
                            failures.push((g, ValidityCondition::CurvatureSign));
                        }
                    }
                    // Only the log kind at 0, which the g != 0 guard
                    // already excludes; other undefined points fail.
                    Err(GafError::UndefinedPoint) => {
                        curvature_sign_ok = false;
                        failures.push((g, ValidityCondition::CurvatureSign));
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        // Condition 3: some epsilon >= 0 with eval(g) <= g beyond it.
        // The fixed point is the tight choice when the origin slope
        // exceeds 1; otherwise 0 works.
        let candidate = if self.slope_at_origin() > 1.0 {
            self.solve_epsilon3().value
        } else {
            Some(0.0)
        };
        let dominated_beyond_epsilon = match candidate {
            Some(eps) => {
                let mut ok = true;
                for &g in grid {
                    if g >= eps && self.eval(g)? > g + 1e-12 {
                        ok = false;
                        failures.push((g, ValidityCondition::DominatedBeyondEpsilon));
                    }
                }
                if ok {
                    Some(eps)
                } else {
                    None
                }
            }
            None => None,
        };

        Ok(GafValidationReport {
            monotone_ok,
            odd_ok,
            dominated_beyond_epsilon,
            curvature_sign_ok,
            failures,
        })
    }

    /// Solves `eval(g) = g` for the unique positive root when the origin
    /// slope exceeds 1. Gradients below the root in magnitude are
    /// amplified, those above are attenuated (for the bounded kinds).
    pub fn solve_epsilon3(&self) -> Epsilon3Result {
        let lo0 = 1e-9;
        let mut hi = f64::max(10.0, 10.0 / self.beta);
        let f = |g: f64| self.eval(g).expect("finite input") - g;
        if self.slope_at_origin() <= 1.0 {
            return Epsilon3Result {
                value: None,
                residual: f64::NAN,
                bracket: (lo0, hi),
            };
        }
        // The root is finite for all three kinds once alpha*beta > 1;
        // expand the bracket until f changes sign.
        while f(hi) >= 0.0 {
            hi *= 2.0;
        }
        let bracket = (lo0, hi);
        let (mut lo, mut hi) = bracket;
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..500 {
            mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.abs() <= EPSILON3_TOL {
                break;
            }
            if fm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Epsilon3Result {
            value: Some(mid),
            residual: f(mid).abs(),
            bracket,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidityCondition {
    MonotoneIncreasing,
    Odd,
    DominatedBeyondEpsilon,
    CurvatureSign,
}

impl std::fmt::Display for ValidityCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ValidityCondition::MonotoneIncreasing => "monotone_increasing",
            ValidityCondition::Odd => "odd",
            ValidityCondition::DominatedBeyondEpsilon => "dominated_beyond_epsilon",
            ValidityCondition::CurvatureSign => "curvature_sign",
        };
        f.write_str(s)
    }
}

/// Outcome of the grid validity check.
#[derive(Debug, Clone)]
pub struct GafValidationReport {
    pub monotone_ok: bool,
    pub odd_ok: bool,
    /// Threshold beyond which `eval(g) <= g` held at every sampled point,
    /// when one was found.
    pub dominated_beyond_epsilon: Option<f64>,
    pub curvature_sign_ok: bool,
    pub failures: Vec<(f64, ValidityCondition)>,
}

impl GafValidationReport {
    pub fn all_ok(&self) -> bool {
        self.monotone_ok
            && self.odd_ok
            && self.dominated_beyond_epsilon.is_some()
            && self.curvature_sign_ok
    }
}

/// Result of the fixed-point search. `value` is absent when the origin
/// slope does not exceed 1 (no amplification region exists).
#[derive(Debug, Clone, Copy)]
pub struct Epsilon3Result {
    pub value: Option<f64>,
    pub residual: f64,
    pub bracket: (f64, f64),
}

/// `sech²(x)` computed without the catastrophic cancellation of
/// `1 − tanh²(x)`; stays positive out to `|x| ≈ 354`.
fn sech_squared(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Uniform symmetric grid over `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && points % 2 == 1, "need an odd point count");
    let n = (points - 1) / 2;
    let step = half_width / n as f64;
    (0..points)
        .map(|i| (i as isize - n as isize) as f64 * step)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn arctan_01_20() -> GafSpec {
        GafSpec::arctan(0.1, 20.0).unwrap()
    }

    #[test]
    fn rejects_nonpositive_shape_factors() {
        assert!(GafSpec::arctan(-0.1, 20.0).is_err());
        assert!(GafSpec::arctan(0.0, 20.0).is_err());
        assert!(GafSpec::tanh(0.1, -1.0).is_err());
        assert!(GafSpec::log(0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn eval_known_values() {
        let spec = arctan_01_20();
        assert_eq!(spec.eval(0.0).unwrap(), 0.0);
        // 0.1 * arctan(1) = pi/40
        assert_relative_eq!(
            spec.eval(0.05).unwrap(),
            std::f64::consts::PI / 40.0,
            max_relative = 1e-15
        );
        let log = GafSpec::log(0.1, 20.0).unwrap();
        assert_relative_eq!(log.eval(0.05).unwrap(), 0.1 * 2.0f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn eval_rejects_non_finite() {
        let spec = arctan_01_20();
        assert!(spec.eval(f64::NAN).is_err());
        assert!(spec.deriv(f64::INFINITY).is_err());
    }

    #[test]
    fn tanh_is_odd() {
        let spec = GafSpec::tanh(0.2, 10.0).unwrap();
        for g in [0.0, 0.01, 0.3, 2.5] {
            assert_relative_eq!(
                spec.eval(-g).unwrap(),
                -spec.eval(g).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn deriv_known_values() {
        let spec = arctan_01_20();
        assert_eq!(spec.deriv(0.0).unwrap(), 2.0);
        assert!(spec.second_deriv(0.1).unwrap() < 0.0);
    }

    #[test]
    fn log_second_deriv_undefined_at_origin() {
        let spec = GafSpec::log(0.1, 20.0).unwrap();
        assert!(matches!(
            spec.second_deriv(0.0),
            Err(GafError::UndefinedPoint)
        ));
        assert!(spec.second_deriv(1e-6).is_ok());
    }

    fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let specs = [
            arctan_01_20(),
            GafSpec::tanh(0.2, 10.0).unwrap(),
            GafSpec::log(0.1, 20.0).unwrap(),
        ];
        for spec in specs {
            for g in [-0.5, -0.01, 0.01, 0.5] {
                let fd = central_diff(|x| spec.eval(x).unwrap(), g, 1e-6);
                assert_relative_eq!(spec.deriv(g).unwrap(), fd, max_relative = 1e-5);
                let fd2 = central_diff(|x| spec.deriv(x).unwrap(), g, 1e-6);
                assert_relative_eq!(spec.second_deriv(g).unwrap(), fd2, max_relative = 1e-4);
            }
        }
    }

    /// Independent oracle: plain bisection on the fixed-point residual,
    /// no shared code with the solver.
    fn bisect_fixed_point(eval: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval(mid) - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn epsilon3_matches_oracle_arctan() {
        let spec = arctan_01_20();
        let res = spec.solve_epsilon3();
        let root = res.value.unwrap();
        assert!(res.residual <= EPSILON3_TOL);
        let oracle = bisect_fixed_point(|g| 0.1 * (20.0 * g).atan(), 1e-9, 10.0);
        assert!((root - oracle).abs() < 1e-9, "root {root} oracle {oracle}");
        assert!((root - 0.1166).abs() < 1e-3);
    }

    #[test]
    fn epsilon3_matches_oracle_tanh() {
        let spec = GafSpec::tanh(0.2, 10.0).unwrap();
        let root = spec.solve_epsilon3().value.unwrap();
        let oracle = bisect_fixed_point(|g| 0.2 * (10.0 * g).tanh(), 1e-9, 10.0);
        assert!((root - oracle).abs() < 1e-9);
        assert!((root - 0.1915).abs() < 1e-3);
    }

    #[test]
    fn epsilon3_absent_when_origin_slope_at_most_one() {
        let spec = GafSpec::arctan(0.05, 10.0).unwrap();
        assert!(spec.solve_epsilon3().value.is_none());
    }

    #[test]
    fn epsilon3_exists_for_log_kind() {
        let spec = GafSpec::log(0.1, 20.0).unwrap();
        let root = spec.solve_epsilon3().value.unwrap();
        assert!(root > 0.0);
        assert!((spec.eval(root).unwrap() - root).abs() <= EPSILON3_TOL);
    }

    #[test]
    fn validate_passes_for_standard_specs() {
        let grid = symmetric_grid(2.0, 1001);
        for spec in [
            arctan_01_20(),
            GafSpec::arctan(0.2, 10.0).unwrap(),
            GafSpec::tanh(0.1, 20.0).unwrap(),
            GafSpec::log(0.1, 20.0).unwrap(),
        ] {
            let report = spec.validate(&grid).unwrap();
            assert!(report.all_ok(), "{}: {:?}", spec.label(), report.failures);
        }
    }

    #[test]
    fn validate_rejects_bad_grids() {
        let spec = arctan_01_20();
        assert!(matches!(
            spec.validate(&[0.0; 5]),
            Err(GafError::GridTooSmall { .. })
        ));
        let mut grid = symmetric_grid(2.0, 1001);
        grid[0] = -1.9; // break symmetry
        assert!(matches!(spec.validate(&grid), Err(GafError::InvalidGrid)));
    }

    #[test]
    fn symmetric_grid_contains_zero_and_mirrors() {
        let grid = symmetric_grid(2.0, 101);
        assert_eq!(grid.len(), 101);
        assert_eq!(grid[50], 0.0);
        assert_eq!(grid[0], -2.0);
        assert_eq!(grid[100], 2.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn any_spec() -> impl Strategy<Value = GafSpec> {
            (
                prop_oneof![
                    Just(GafKind::Arctan),
                    Just(GafKind::Tanh),
                    Just(GafKind::Log)
                ],
                0.01f64..2.0,
                0.1f64..50.0,
            )
                .prop_map(|(kind, a, b)| GafSpec::new(kind, a, b).unwrap())
        }

        proptest! {
            #[test]
            fn oddness(spec in any_spec(), g in -10.0f64..10.0) {
                let s = spec.eval(g).unwrap() + spec.eval(-g).unwrap();
                prop_assert!(s.abs() <= 1e-12);
            }

            #[test]
            fn monotonicity(spec in any_spec(), g1 in -10.0f64..10.0, d in 1e-6f64..5.0) {
                let g2 = g1 + d;
                let (y1, y2) = (spec.eval(g1).unwrap(), spec.eval(g2).unwrap());
                prop_assert!(y1 <= y2);
                // strict ordering is representable only before saturation
                if (spec.beta * g1.abs().max(g2.abs())) < 18.0 {
                    prop_assert!(y1 < y2);
                }
            }

            #[test]
            fn boundedness(spec in any_spec(), g in -1e6f64..1e6) {
                let y = spec.eval(g).unwrap().abs();
                // saturation can round exactly onto the ceiling
                match spec.kind {
                    GafKind::Arctan => prop_assert!(y <= spec.alpha * std::f64::consts::FRAC_PI_2),
                    GafKind::Tanh => prop_assert!(y <= spec.alpha),
                    GafKind::Log => prop_assert!(y.is_finite()),
                }
            }

            #[test]
            fn curvature_sign(spec in any_spec(), g in -10.0f64..10.0) {
                prop_assume!(g != 0.0);
                // beyond this the stable sech² form itself underflows
                prop_assume!((spec.beta * g).abs() < 300.0);
                let dd = spec.second_deriv(g).unwrap();
                prop_assert!(g * dd < 0.0);
            }

            #[test]
            fn amplification_threshold(spec in any_spec(), u in 1e-6f64..1.0) {
                if let Some(eps3) = spec.solve_epsilon3().value {
                    let inside = u * (eps3 - 1e-9);
                    if inside > 0.0 {
                        prop_assert!(spec.eval(inside).unwrap().abs() > inside.abs());
                        prop_assert!(spec.eval(-inside).unwrap().abs() > inside.abs());
                    }
                    if matches!(spec.kind, GafKind::Arctan | GafKind::Tanh) {
                        let outside = eps3 + 1e-9 + u * 10.0;
                        prop_assert!(spec.eval(outside).unwrap().abs() < outside.abs());
                    }
                }
            }
        }
    }
}

//! Equivalent-loss-surface generation: the potential obtained by
//! integrating a transformed gradient field, with the surface anchored
//! at zero at the origin.

use crate::problems::Problem;
use crate::quad::integrate;
use crate::transforms::GradientTransform;
use thiserror::Error;

/// Per-segment absolute quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("axes must match the problem dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {0} must be strictly increasing and contain 0")]
    InvalidAxis(usize),
    #[error("element-wise transform on non-separable problem `{0}` has no exact surface")]
    UnsupportedConfiguration(String),
    #[error("surface is degenerate at the requested offset")]
    DegenerateSurface,
    #[error("offset {0} is not a grid coordinate")]
    OffsetNotOnGrid(f64),
    #[error("flatness ratio requires a 2-D grid")]
    NotTwoDimensional,
}

/// A sampled equivalent loss surface, row-major over the axis mesh.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub transform_snapshot: GradientTransform,
    pub problem_name: String,
}

impl SurfaceGrid {
    pub fn value_at(&self, indices: &[usize]) -> f64 {
        let mut flat = 0usize;
        for (axis, &i) in self.axes.iter().zip(indices) {
            flat = flat * axis.len() + i;
            debug_assert!(i < axis.len());
        }
        self.values[flat]
    }

    fn axis_index(&self, axis: usize, coordinate: f64) -> Result<usize, SurfaceError> {
        self.axes[axis]
            .iter()
            .position(|&x| (x - coordinate).abs() <= 1e-9)
            .ok_or(SurfaceError::OffsetNotOnGrid(coordinate))
    }

    /// Header rows with the axis coordinates, then the value matrix.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (i, axis) in self.axes.iter().enumerate() {
            out.push_str(&format!("axis{i}"));
            for x in axis {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        match self.axes.len() {
            2 => {
                let cols = self.axes[1].len();
                for row in self.values.chunks(cols) {
                    let line: Vec<String> = row.iter().map(f64::to_string).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
            }
            _ => {
                for v in &self.values {
                    out.push_str(&format!("{v}\n"));
                }
            }
        }
        out
    }

    /// Deterministic fingerprint of the mesh, used in file names.
    pub fn grid_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for axis in &self.axes {
            for x in axis {
                h ^= x.to_bits();
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}

fn check_axes(problem: &Problem, axes: &[Vec<f64>]) -> Result<(), SurfaceError> {
    if axes.len() != problem.dim {
        return Err(SurfaceError::DimensionMismatch {
            expected: problem.dim,
            got: axes.len(),
        });
    }
    for (i, axis) in axes.iter().enumerate() {
        let increasing = axis.windows(2).all(|w| w[0] < w[1]);
        let has_zero = axis.iter().any(|&x| x.abs() <= 1e-12);
        if axis.is_empty() || !increasing || !has_zero {
            return Err(SurfaceError::InvalidAxis(i));
        }
    }
    Ok(())
}

/// Builds the equivalent surface of `transform` applied to the gradient
/// field of `problem` on the mesh spanned by `axes`.
///
/// Element-wise transforms on separable problems integrate each
/// coordinate exactly; the norm-clipping field is non-conservative, so
/// its surface uses the straight ray from the origin as the fixed path
/// convention.
pub fn equivalent_surface(
    problem: &Problem,
    transform: &GradientTransform,
    axes: &[Vec<f64>],
) -> Result<SurfaceGrid, SurfaceError> {
    check_axes(problem, axes)?;
    let values = if transform.is_elementwise() {
        if !problem.separable {
            return Err(SurfaceError::UnsupportedConfiguration(problem.name.clone()));
        }
        separable_surface(problem, transform, axes)
    } else {
        ray_surface(problem, transform, axes)
    };
    Ok(SurfaceGrid {
        axes: axes.to_vec(),
        values,
        transform_snapshot: *transform,
        problem_name: problem.name.clone(),
    })
}

/// Per-axis cumulative integrals of the transformed per-coordinate
/// gradient, summed across coordinates.
fn separable_surface(
    problem: &Problem,
    transform: &GradientTransform,
    axes: &[Vec<f64>],
) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = axes
        .iter()
        .enumerate()
        .map(|(n, axis)| cumulative_axis_integrals(problem, transform, n, axis))
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut values = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut sum = 0.0;
        for (axis, phi) in axes.iter().zip(&per_axis).rev() {
            sum += phi[rem % axis.len()];
            rem /= axis.len();
        }
        values.push(sum);
    }
    values
}

/// Integrals from 0 to each axis coordinate, accumulated segment by
/// segment outward from the zero sample.
fn cumulative_axis_integrals(
    problem: &Problem,
    transform: &GradientTransform,
    axis_index: usize,
    axis: &[f64],
) -> Vec<f64> {
    let integrand = |u: f64| transform.component_map(problem.axis_grad(axis_index, u));
    let zero_pos = axis
        .iter()
        .position(|&x| x.abs() <= 1e-12)
        .expect("axis contains 0");
    let mut phi = vec![0.0; axis.len()];
    // anchor: the integral from 0 to the zero sample itself
    phi[zero_pos] = integrate(&integrand, 0.0, axis[zero_pos], QUAD_TOL);
    for i in (zero_pos + 1)..axis.len() {
        phi[i] = phi[i - 1] + integrate(&integrand, axis[i - 1], axis[i], QUAD_TOL);
    }
    for i in (0..zero_pos).rev() {
        phi[i] = phi[i + 1] + integrate(&integrand, axis[i + 1], axis[i], QUAD_TOL);
    }
    phi
}

/// Line integral of the transformed field along the straight ray from
/// the origin to each mesh point.
fn ray_surface(problem: &Problem, transform: &GradientTransform, axes: &[Vec<f64>]) -> Vec<f64> {
    let total: usize = axes.iter().map(Vec::len).product();
    let mut values = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut w = vec![0.0; axes.len()];
        for (n, axis) in axes.iter().enumerate().rev() {
            w[n] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        let integrand = |s: f64| {
            let point: Vec<f64> = w.iter().map(|c| c * s).collect();
            let field = transform
                .apply(&problem.grad(&point))
                .expect("finite gradient");
            field.iter().zip(&w).map(|(f, c)| f * c).sum::<f64>()
        };
        values.push(integrate(&integrand, 0.0, 1.0, QUAD_TOL));
    }
    values
}

/// Ratio of the surface value at `(offset, 0)` to the value at
/// `(0, offset)`; 1 means isotropic.
pub fn flatness_ratio(grid: &SurfaceGrid, offset: f64) -> Result<f64, SurfaceError> {
    if grid.axes.len() != 2 {
        return Err(SurfaceError::NotTwoDimensional);
    }
    let i_off = grid.axis_index(0, offset)?;
    let i_zero0 = grid.axis_index(0, 0.0)?;
    let j_off = grid.axis_index(1, offset)?;
    let j_zero1 = grid.axis_index(1, 0.0)?;
    let sharp = grid.value_at(&[i_off, j_zero1]);
    let flat = grid.value_at(&[i_zero0, j_off]);
    if flat.abs() < 1e-14 {
        return Err(SurfaceError::DegenerateSurface);
    }
    Ok(sharp / flat)
}

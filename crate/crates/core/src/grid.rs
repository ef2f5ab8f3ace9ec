//! Scalar and vector fields on regular Cartesian grids.
//!
//! Fields are stored row-major. Row index `i` runs over `0..rows`, column
//! index `j` over `0..cols`. A 1D signal is an `M x 1` grid.
//!
//! The discrete gradient uses forward differences with a zero last row
//! (first component) and zero last column (second component). The
//! divergence is defined so that `<grad u, p> = -<u, div p>` holds exactly,
//! i.e. `K = grad` and `K* = -div`.
//!
//! All reductions (`dot`, `norm`, `sum`) run sequentially in row-major order,
//! so results are bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bound on the squared operator norm of the discrete gradient, `8 / h^2`.
pub const GRADIENT_NORM_SQ_FACTOR: f64 = 8.0;

/// A real-valued function on an `rows x cols` grid with spacing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    rows: usize,
    cols: usize,
    spacing: f64,
    values: Vec<f64>,
}

/// A two-component field `(p1, p2)` on a grid. `p1` is the component along
/// rows (index `i`), `p2` along columns (index `j`).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    rows: usize,
    cols: usize,
    spacing: f64,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    Ok(())
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::invalid(format!(
            "grid spacing must be positive and finite, got {spacing}"
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

/// Sequential row-major dot product.
fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

impl ScalarField {
    /// Builds a field with unit spacing. Fails on empty shape, wrong length
    /// or non-finite entries.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_spacing(rows, cols, 1.0, values)
    }

    pub fn with_spacing(rows: usize, cols: usize, spacing: f64, values: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        check_spacing(spacing)?;
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} grid, got {}",
                rows * cols,
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            rows,
            cols,
            spacing,
            values,
        })
    }

    /// A 1D signal as an `M x 1` grid.
    pub fn signal(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        Self::new(m, 1, values)
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::constant(rows, cols, 0.0)
    }

    /// Builds a field from a function of `(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// already-valid fields.
    pub(crate) fn from_parts(rows: usize, cols: usize, spacing: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self {
            rows,
            cols,
            spacing,
            values,
        }
    }

    /// Same shape and spacing as `self`, with new values.
    pub(crate) fn like(&self, values: Vec<f64>) -> Self {
        Self::from_parts(self.rows, self.cols, self.spacing, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True for `M x 1` or `1 x N` grids.
    pub fn is_one_dimensional(&self) -> bool {
        self.rows == 1 || self.cols == 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// Returns a copy with a different grid spacing.
    pub fn respaced(&self, spacing: f64) -> Result<Self> {
        check_spacing(spacing)?;
        Ok(Self::from_parts(self.rows, self.cols, spacing, self.values.clone()))
    }

    pub fn check_same_shape(&self, other: &ScalarField) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }

    /// Entrywise map. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        check_finite(&values)?;
        Ok(self.like(values))
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.like(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.like(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        self.map(|v| v * factor)
    }

    /// Row-major inner product.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(dot_slices(&self.values, &other.values))
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        dot_slices(&self.values, &self.values).sqrt()
    }

    pub fn sum(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.values {
            acc += v;
        }
        acc
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl VectorField {
    pub fn new(rows: usize, cols: usize, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        Self::with_spacing(rows, cols, 1.0, first, second)
    }

    pub fn with_spacing(
        rows: usize,
        cols: usize,
        spacing: f64,
        first: Vec<f64>,
        second: Vec<f64>,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        check_spacing(spacing)?;
        if first.len() != rows * cols || second.len() != rows * cols {
            return Err(Error::invalid(format!(
                "vector field components must have {} entries",
                rows * cols
            )));
        }
        check_finite(&first)?;
        check_finite(&second)?;
        Ok(Self {
            rows,
            cols,
            spacing,
            first,
            second,
        })
    }

    /// Zero field shaped like `u`.
    pub fn zeros_like(u: &ScalarField) -> Self {
        let n = u.len();
        Self {
            rows: u.rows,
            cols: u.cols,
            spacing: u.spacing,
            first: vec![0.0; n],
            second: vec![0.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }

    pub(crate) fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.first, &mut self.second)
    }

    /// The 2-vector at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let k = i * self.cols + j;
        (self.first[k], self.second[k])
    }

    /// Pointwise Euclidean magnitude `|p_{i,j}|`.
    pub fn magnitude(&self) -> ScalarField {
        let values = self
            .first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| a.hypot(*b))
            .collect();
        ScalarField::from_parts(self.rows, self.cols, self.spacing, values)
    }

    /// Row-major inner product over both components.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        let mut acc = 0.0;
        for k in 0..self.len() {
            acc += self.first[k] * other.first[k];
            acc += self.second[k] * other.second[k];
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).map(f64::sqrt).unwrap_or(0.0)
    }

    /// Sum of pointwise magnitudes (isotropic total variation when `self`
    /// is a gradient).
    pub fn magnitude_sum(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len() {
            acc += self.first[k].hypot(self.second[k]);
        }
        acc
    }
}

/// Forward-difference gradient into a preallocated field.
pub(crate) fn gradient_into(u: &ScalarField, out: &mut VectorField) {
    let (m, n, h) = (u.rows, u.cols, u.spacing);
    let inv_h = 1.0 / h;
    let v = &u.values;
    for i in 0..m {
        for j in 0..n {
            let k = i * n + j;
            out.first[k] = if i + 1 < m { (v[k + n] - v[k]) * inv_h } else { 0.0 };
            out.second[k] = if j + 1 < n { (v[k + 1] - v[k]) * inv_h } else { 0.0 };
        }
    }
}

/// Divergence (negative adjoint of [`gradient`]) into a preallocated buffer.
pub(crate) fn divergence_into(p: &VectorField, out: &mut [f64]) {
    let (m, n, h) = (p.rows, p.cols, p.spacing);
    let inv_h = 1.0 / h;
    let (p1, p2) = (&p.first, &p.second);
    for i in 0..m {
        for j in 0..n {
            let k = i * n + j;
            let d1 = if m == 1 {
                0.0
            } else if i == 0 {
                p1[k]
            } else if i + 1 == m {
                -p1[k - n]
            } else {
                p1[k] - p1[k - n]
            };
            let d2 = if n == 1 {
                0.0
            } else if j == 0 {
                p2[k]
            } else if j + 1 == n {
                -p2[k - 1]
            } else {
                p2[k] - p2[k - 1]
            };
            out[k] = (d1 + d2) * inv_h;
        }
    }
}

/// Discrete gradient with forward differences, zero on the last row (first
/// component) and last column (second component).
pub fn gradient(u: &ScalarField) -> VectorField {
    let mut out = VectorField::zeros_like(u);
    gradient_into(u, &mut out);
    out
}

/// Discrete divergence, the exact negative adjoint of [`gradient`].
pub fn divergence(p: &VectorField) -> ScalarField {
    let mut out = vec![0.0; p.len()];
    divergence_into(p, &mut out);
    ScalarField::from_parts(p.rows, p.cols, p.spacing, out)
}

/// How the classical `8 / h^2` gradient bound is read when validating step
/// sizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormBoundReading {
    /// `8 / h^2` bounds `||grad||^2`, so `L^2 = 8 / h^2`.
    #[default]
    SquaredNorm,
    /// `8 / h^2` bounds `||grad||` itself, so `L^2 = 64 / h^4`.
    Norm,
}

impl NormBoundReading {
    /// The value of `L^2` used in `tau * sigma * L^2` checks.
    pub fn l_squared(self, spacing: f64) -> f64 {
        let bound = operator_norm_bound(spacing);
        match self {
            NormBoundReading::SquaredNorm => bound,
            NormBoundReading::Norm => bound * bound,
        }
    }
}

/// The classical gradient bound `8 / h^2`. The field shape does not enter.
pub fn operator_norm_bound(spacing: f64) -> f64 {
    GRADIENT_NORM_SQ_FACTOR / (spacing * spacing)
}

/// Power-iteration estimate of the largest eigenvalue of `K*K = -div grad`
/// on the given grid, i.e. of `||grad||^2`.
pub fn estimate_gradient_norm_sq(rows: usize, cols: usize, spacing: f64, iterations: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let start: Vec<f64> = (0..rows * cols).map(|_| normal.sample(&mut rng)).collect();
    let mut u = ScalarField::with_spacing(rows, cols, spacing, start)?;
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let norm = u.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        u = u.scale(1.0 / norm)?;
        let next = divergence(&gradient(&u)).scale(-1.0)?;
        estimate = u.dot(&next)?;
        u = next;
    }
    Ok(estimate)
}

/// Offsets of the discrete disk `{d : |d| <= r}` restricted to the axes
/// along which the grid actually extends.
fn disk_offsets(radius: f64, along_rows: bool, along_cols: bool) -> Vec<(isize, isize)> {
    let reach = radius.floor() as isize;
    let r2 = radius * radius;
    let row_reach = if along_rows { reach } else { 0 };
    let col_reach = if along_cols { reach } else { 0 };
    let mut offsets = Vec::new();
    for di in -row_reach..=row_reach {
        for dj in -col_reach..=col_reach {
            if ((di * di + dj * dj) as f64) <= r2 {
                offsets.push((di, dj));
            }
        }
    }
    offsets
}

/// Convolution with the normalized indicator of the discrete disk of radius
/// `radius` (grid units), with clamp-to-edge padding. Radii below one return
/// the field unchanged.
pub fn mollify(u: &ScalarField, radius: f64) -> Result<ScalarField> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::invalid(format!(
            "mollification radius must be nonnegative, got {radius}"
        )));
    }
    if radius < 1.0 {
        return Ok(u.clone());
    }
    let (m, n) = u.shape();
    let offsets = disk_offsets(radius, m > 1, n > 1);
    let weight = 1.0 / offsets.len() as f64;
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for &(di, dj) in &offsets {
                let ii = (i as isize + di).clamp(0, m as isize - 1) as usize;
                let jj = (j as isize + dj).clamp(0, n as isize - 1) as usize;
                acc += u.values[ii * n + jj];
            }
            out[i * n + j] = acc * weight;
        }
    }
    Ok(u.like(out))
}

/// Gaussian noise description: standard deviation in image units and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "noise sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }
}

/// Adds i.i.d. `N(0, sigma^2)` noise drawn from a seeded ChaCha20 stream.
/// The result is not clamped.
pub fn add_gaussian_noise(u: &ScalarField, spec: NoiseSpec) -> Result<ScalarField> {
    let spec = NoiseSpec::new(spec.sigma, spec.seed)?;
    if spec.sigma == 0.0 {
        return Ok(u.clone());
    }
    let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let values = u
        .values
        .iter()
        .map(|&v| v + normal.sample(&mut rng))
        .collect();
    Ok(u.like(values))
}

//! Reconstruction quality metrics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, ScalarField};

/// Isotropic discrete total variation, using the solver's gradient.
pub fn total_variation(u: &ScalarField) -> f64 {
    gradient(u).magnitude_sum()
}

/// `TV(result - original) / TV(original)`.
pub fn d_tv_image(result: &ScalarField, original: &ScalarField) -> Result<f64> {
    let diff = result.sub(original)?;
    let tv = total_variation(original);
    if tv == 0.0 {
        return Err(Error::ConstantOriginal);
    }
    Ok(total_variation(&diff) / tv)
}

/// `||result - original|| / ||original||`.
pub fn d_l2_image(result: &ScalarField, original: &ScalarField) -> Result<f64> {
    let diff = result.sub(original)?;
    let norm = original.norm();
    if norm == 0.0 {
        return Err(Error::ZeroOriginal);
    }
    Ok(diff.norm() / norm)
}

pub fn mean_squared_error(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(diff.dot(&diff)? / diff.len() as f64)
}

/// Peak signal-to-noise ratio for peak value 1. Serializes as a number, or
/// as the string `"inf"` for identical inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Db(f64),
    /// Identical inputs.
    Infinite,
}

impl Psnr {
    pub fn from_mse(mse: f64) -> Self {
        if mse == 0.0 {
            Psnr::Infinite
        } else {
            Psnr::Db(10.0 * (1.0 / mse).log10())
        }
    }

    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Infinite => None,
        }
    }

    /// Numeric value with `+inf` for identical inputs; for ordering only.
    pub fn as_f64(self) -> f64 {
        self.db().unwrap_or(f64::INFINITY)
    }
}

impl Serialize for Psnr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Db(v) => s.serialize_f64(*v),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Psnr::Db(v)),
            Repr::Text(t) if t == "inf" => Ok(Psnr::Infinite),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid psnr `{t}`"))),
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

pub fn psnr(result: &ScalarField, original: &ScalarField) -> Result<Psnr> {
    Ok(Psnr::from_mse(mean_squared_error(result, original)?))
}

/// SSIM parameters. Defaults: 11-point Gaussian window with standard
/// deviation 1.5, `K1 = 0.01`, `K2 = 0.03`, dynamic range 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            gaussian_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    /// Normalized 1D Gaussian taps.
    pub fn kernel(&self) -> Vec<f64> {
        let center = (self.window as f64 - 1.0) / 2.0;
        let taps: Vec<f64> = (0..self.window)
            .map(|k| {
                let d = k as f64 - center;
                (-d * d / (2.0 * self.gaussian_sigma * self.gaussian_sigma)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }

    fn constants(&self) -> (f64, f64) {
        let c1 = (self.k1 * self.dynamic_range).powi(2);
        let c2 = (self.k2 * self.dynamic_range).powi(2);
        (c1, c2)
    }
}

/// Valid-mode separable filtering; the axis with extent 1 is left alone.
fn filter_valid(values: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let w = kernel.len();
    let (filter_rows, filter_cols) = (rows > 1, cols > 1);
    let out_cols = if filter_cols { cols - w + 1 } else { cols };
    let mut horizontal = vec![0.0; rows * out_cols];
    for i in 0..rows {
        for j in 0..out_cols {
            horizontal[i * out_cols + j] = if filter_cols {
                let mut acc = 0.0;
                for (t, kv) in kernel.iter().enumerate() {
                    acc += kv * values[i * cols + j + t];
                }
                acc
            } else {
                values[i * cols + j]
            };
        }
    }
    let out_rows = if filter_rows { rows - w + 1 } else { rows };
    let mut out = vec![0.0; out_rows * out_cols];
    for i in 0..out_rows {
        for j in 0..out_cols {
            out[i * out_cols + j] = if filter_rows {
                let mut acc = 0.0;
                for (t, kv) in kernel.iter().enumerate() {
                    acc += kv * horizontal[(i + t) * out_cols + j];
                }
                acc
            } else {
                horizontal[i * out_cols + j]
            };
        }
    }
    (out, out_rows, out_cols)
}

/// Mean structural similarity with the default parameters.
pub fn ssim(result: &ScalarField, original: &ScalarField) -> Result<f64> {
    ssim_with(result, original, &SsimParams::default())
}

/// Mean SSIM over all window positions fully inside the grid. 1D grids use
/// a 1D window.
pub fn ssim_with(result: &ScalarField, original: &ScalarField, params: &SsimParams) -> Result<f64> {
    result.check_same_shape(original)?;
    let (rows, cols) = result.shape();
    let w = params.window;
    if w == 0 {
        return Err(Error::invalid("SSIM window must be positive"));
    }
    let too_small = if rows == 1 || cols == 1 {
        rows.max(cols) < w
    } else {
        rows < w || cols < w
    };
    if too_small {
        return Err(Error::GridTooSmall { rows, cols, window: w });
    }
    let kernel = params.kernel();
    let x = result.values();
    let y = original.values();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let (mu_x, _, _) = filter_valid(x, rows, cols, &kernel);
    let (mu_y, _, _) = filter_valid(y, rows, cols, &kernel);
    let (e_xx, _, _) = filter_valid(&xx, rows, cols, &kernel);
    let (e_yy, _, _) = filter_valid(&yy, rows, cols, &kernel);
    let (e_xy, _, _) = filter_valid(&xy, rows, cols, &kernel);

    let (c1, c2) = params.constants();
    let mut acc = 0.0;
    for k in 0..mu_x.len() {
        let (mx, my) = (mu_x[k], mu_y[k]);
        let vx = e_xx[k] - mx * mx;
        let vy = e_yy[k] - my * my;
        let cov = e_xy[k] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// All metrics of one reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub d_tv: f64,
    pub d_l2: f64,
    pub psnr: Psnr,
    pub ssim: f64,
    /// Normalized L2 distance of the result to the noisy datum.
    pub d_l2_noisy: f64,
}

impl MetricReport {
    pub fn compute(result: &ScalarField, original: &ScalarField, noisy: &ScalarField) -> Result<Self> {
        Ok(Self {
            d_tv: d_tv_image(result, original)?,
            d_l2: d_l2_image(result, original)?,
            psnr: psnr(result, original)?,
            ssim: ssim(result, original)?,
            d_l2_noisy: d_l2_image(result, noisy)?,
        })
    }
}

//! Closed-form resolvents for the fidelity term and for the conjugates of
//! the three regularizers.
//!
//! With `F(p) = sum phi(|p_ij|)` the dual resolvent `(I + sigma dF*)^-1`
//! acts node by node on the 2-vector `p_ij`:
//!
//! * TV, `phi(t) = t`: projection onto the unit disk.
//! * Huber, `phi(t) = |t|_alpha`: shrink by `1 + sigma*alpha`, then project.
//! * double phase, `phi(t) = t + (w/2) t^2`: projection where `w = 0`,
//!   otherwise scaling by `min(1, (w|p| + sigma) / (w|p| + sigma|p|))`.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};

/// Fidelity term `G(u) = (1 / 2 lambda) sum (u - g)^2`.
#[derive(Clone, Debug)]
pub struct FidelityParams {
    lambda: f64,
    datum: ScalarField,
}

impl FidelityParams {
    pub fn new(lambda: f64, datum: ScalarField) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda, datum })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn datum(&self) -> &ScalarField {
        &self.datum
    }

    /// Value of `G(u)`.
    pub fn value(&self, u: &ScalarField) -> Result<f64> {
        let diff = u.sub(&self.datum)?;
        let sq = diff.dot(&diff)?;
        Ok(sq / (2.0 * self.lambda))
    }
}

/// The regularizer integrand `phi`.
#[derive(Clone, Debug)]
pub enum Regularizer {
    /// Classical total variation.
    Tv,
    /// Huber-regularized TV with threshold `alpha`.
    Huber { alpha: f64 },
    /// Double-phase integrand with a nonnegative spatial weight.
    DoublePhase { weight: ScalarField },
}

impl Regularizer {
    pub fn huber(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!("huber alpha must be nonnegative, got {alpha}")));
        }
        Ok(Regularizer::Huber { alpha })
    }

    pub fn double_phase(weight: ScalarField) -> Result<Self> {
        if let Some(k) = weight.values().iter().position(|&w| w < 0.0) {
            return Err(Error::invalid(format!(
                "double-phase weight must be nonnegative (index {k} is {})",
                weight.values()[k]
            )));
        }
        Ok(Regularizer::DoublePhase { weight })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Tv => "tv",
            Regularizer::Huber { .. } => "huber",
            Regularizer::DoublePhase { .. } => "double-phase",
        }
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if let Regularizer::DoublePhase { weight } = self {
            if weight.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: shape,
                    actual: weight.shape(),
                });
            }
        }
        Ok(())
    }

    /// Integrand `phi(node, t)` at gradient magnitude `t >= 0`.
    pub fn integrand(&self, node: usize, t: f64) -> f64 {
        match self {
            Regularizer::Tv => t,
            Regularizer::Huber { alpha } => huber(t, *alpha),
            Regularizer::DoublePhase { weight } => t + 0.5 * weight.values()[node] * t * t,
        }
    }

    /// Applies `(I + sigma dF*)^-1` in place.
    pub(crate) fn apply_dual_prox(&self, p: &mut VectorField, sigma: f64) {
        let (p1, p2) = p.components_mut();
        match self {
            Regularizer::Tv => project_unit_disk(p1, p2),
            Regularizer::Huber { alpha } => {
                let shrink = 1.0 / (1.0 + sigma * alpha);
                for (a, b) in p1.iter_mut().zip(p2.iter_mut()) {
                    *a *= shrink;
                    *b *= shrink;
                }
                project_unit_disk(p1, p2);
            }
            Regularizer::DoublePhase { weight } => {
                double_phase_scale(p1, p2, weight.values(), sigma);
            }
        }
    }
}

/// Huber function `|t|_alpha`; `alpha = 0` gives `|t|`.
pub fn huber(t: f64, alpha: f64) -> f64 {
    let t = t.abs();
    if t <= alpha {
        if alpha == 0.0 {
            0.0
        } else {
            t * t / (2.0 * alpha)
        }
    } else {
        t - 0.5 * alpha
    }
}

fn project_unit_disk(p1: &mut [f64], p2: &mut [f64]) {
    for (a, b) in p1.iter_mut().zip(p2.iter_mut()) {
        let norm = a.hypot(*b);
        if norm > 1.0 {
            *a /= norm;
            *b /= norm;
        }
    }
}

fn double_phase_scale(p1: &mut [f64], p2: &mut [f64], weight: &[f64], sigma: f64) {
    for ((a, b), &w) in p1.iter_mut().zip(p2.iter_mut()).zip(weight) {
        let norm = a.hypot(*b);
        if w == 0.0 {
            if norm > 1.0 {
                *a /= norm;
                *b /= norm;
            }
        } else if norm > 0.0 {
            let factor = ((w * norm + sigma) / (w * norm + sigma * norm)).min(1.0);
            *a *= factor;
            *b *= factor;
        }
    }
}

fn check_step(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::invalid(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

/// Resolvent of the fidelity term:
/// `u = (u_tilde + (tau / lambda) g) / (1 + tau / lambda)`.
pub fn prox_g(u_tilde: &ScalarField, params: &FidelityParams, tau: f64) -> Result<ScalarField> {
    check_step("tau", tau)?;
    u_tilde.check_same_shape(&params.datum)?;
    let mut out = u_tilde.clone();
    prox_g_in_place(out.values_mut(), params.datum.values(), params.lambda, tau);
    Ok(out)
}

pub(crate) fn prox_g_in_place(u: &mut [f64], g: &[f64], lambda: f64, tau: f64) {
    let ratio = tau / lambda;
    let denom = 1.0 + ratio;
    for (x, &gv) in u.iter_mut().zip(g) {
        *x = (*x + ratio * gv) / denom;
    }
}

/// TV dual resolvent: pointwise projection onto the unit disk. `sigma` does
/// not enter the formula.
pub fn prox_fstar_tv(p_tilde: &VectorField, sigma: f64) -> Result<VectorField> {
    check_step("sigma", sigma)?;
    let mut out = p_tilde.clone();
    Regularizer::Tv.apply_dual_prox(&mut out, sigma);
    Ok(out)
}

/// Huber dual resolvent: `q = p / (1 + sigma alpha)`, then projection.
pub fn prox_fstar_huber(p_tilde: &VectorField, sigma: f64, alpha: f64) -> Result<VectorField> {
    check_step("sigma", sigma)?;
    let reg = Regularizer::huber(alpha)?;
    let mut out = p_tilde.clone();
    reg.apply_dual_prox(&mut out, sigma);
    Ok(out)
}

/// Double-phase dual resolvent.
pub fn prox_fstar_double_phase(p_tilde: &VectorField, sigma: f64, weight: &ScalarField) -> Result<VectorField> {
    check_step("sigma", sigma)?;
    if weight.shape() != p_tilde.shape() {
        return Err(Error::ShapeMismatch {
            expected: p_tilde.shape(),
            actual: weight.shape(),
        });
    }
    let reg = Regularizer::double_phase(weight.clone())?;
    let mut out = p_tilde.clone();
    reg.apply_dual_prox(&mut out, sigma);
    Ok(out)
}

/// `F*(p)` for the double-phase integrand: `sum max(0, |p| - 1)^2 / (2 w)`
/// over nodes with `w > 0`, and `+inf` if some node with `w = 0` has
/// `|p| > 1`.
pub fn conjugate_value_double_phase(p: &VectorField, weight: &ScalarField) -> Result<f64> {
    if weight.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            expected: p.shape(),
            actual: weight.shape(),
        });
    }
    let mut acc = 0.0;
    for (k, &w) in weight.values().iter().enumerate() {
        let norm = p.first()[k].hypot(p.second()[k]);
        let excess = (norm - 1.0).max(0.0);
        if w == 0.0 {
            if excess > 0.0 {
                return Ok(f64::INFINITY);
            }
        } else {
            acc += excess * excess / (2.0 * w);
        }
    }
    Ok(acc)
}

//! Spatial weights `w = W(|grad u~|)` for the double-phase regularizer.
//!
//! `u~` is either the mollified ROF solution (adaptive pipeline) or the
//! mollified noisy datum. `W` is one of three nonincreasing, compactly
//! supported profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, mollify, ScalarField};
use crate::prox::{FidelityParams, Regularizer};
use crate::solver::{solve, DenoiseProblem, SolverConfig};

/// Parametric weight profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightFamily {
    /// `max(0, a - b max(x, a / 2b))`: plateau `a / 2` up to `a / 2b`, zero from `a / b`.
    W1 { a: f64, b: f64 },
    /// `max(0, a - b x)`.
    W2 { a: f64, b: f64 },
    /// `height` on `[0, cutoff]`, zero beyond.
    W3 { height: f64, cutoff: f64 },
}

impl WeightFamily {
    pub fn name(&self) -> &'static str {
        match self {
            WeightFamily::W1 { .. } => "w1",
            WeightFamily::W2 { .. } => "w2",
            WeightFamily::W3 { .. } => "w3",
        }
    }

    fn validate(&self) -> Result<()> {
        let params: [(&str, f64); 2] = match *self {
            WeightFamily::W1 { a, b } | WeightFamily::W2 { a, b } => [("a", a), ("b", b)],
            WeightFamily::W3 { height, cutoff } => [("height", height), ("cutoff", cutoff)],
        };
        for (name, v) in params {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "weight parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates `W(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightFamily::W1 { a, b } => {
                if x >= a / b {
                    0.0
                } else {
                    (a - b * x.max(a / (2.0 * b))).max(0.0)
                }
            }
            WeightFamily::W2 { a, b } => {
                if x >= a / b {
                    0.0
                } else {
                    (a - b * x).max(0.0)
                }
            }
            WeightFamily::W3 { height, cutoff } => {
                if x <= cutoff {
                    height
                } else {
                    0.0
                }
            }
        }
    }

    /// Gradient magnitude beyond which the weight vanishes: `a / b` for W1
    /// and W2 (where `W = 0`), `R` for W3 (where `W > 0` ends).
    pub fn cutoff(&self) -> f64 {
        match *self {
            WeightFamily::W1 { a, b } | WeightFamily::W2 { a, b } => a / b,
            WeightFamily::W3 { cutoff, .. } => cutoff,
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// The profile `x -> alpha W(beta x)` in the same family.
    pub fn rescaled(&self, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(match *self {
            WeightFamily::W1 { a, b } => WeightFamily::W1 {
                a: alpha * a,
                b: alpha * beta * b,
            },
            WeightFamily::W2 { a, b } => WeightFamily::W2 {
                a: alpha * a,
                b: alpha * beta * b,
            },
            WeightFamily::W3 { height, cutoff } => WeightFamily::W3 {
                height: alpha * height,
                cutoff: cutoff / beta,
            },
        })
    }
}

/// A weight profile together with the mollification radius (grid units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub family: WeightFamily,
    pub mollify_radius: f64,
}

impl WeightSpec {
    pub fn new(family: WeightFamily, mollify_radius: f64) -> Result<Self> {
        family.validate()?;
        if !(mollify_radius.is_finite() && mollify_radius >= 0.0) {
            return Err(Error::invalid(format!(
                "mollification radius must be nonnegative, got {mollify_radius}"
            )));
        }
        Ok(Self {
            family,
            mollify_radius,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.family.eval(x)
    }
}

/// Evaluates `W(x)`; rejects negative `x`.
pub fn eval_weight_function(spec: &WeightSpec, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("weight argument must be nonnegative, got {x}")));
    }
    Ok(spec.eval(x))
}

/// The spec of `x -> alpha W(beta x)`. The mollification radius is kept.
pub fn rescale_weight_spec(spec: &WeightSpec, alpha: f64, beta: f64) -> Result<WeightSpec> {
    Ok(WeightSpec {
        family: spec.family.rescaled(alpha, beta)?,
        mollify_radius: spec.mollify_radius,
    })
}

/// Order of mollification and differentiation in the weight pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MollifyOrder {
    /// `|grad (rho * u)|`.
    #[default]
    FieldThenGradient,
    /// `rho * |grad u|`.
    GradientThenField,
}

/// Weight field and the gradient-magnitude field it was built from.
#[derive(Clone, Debug)]
pub struct WeightField {
    pub weight: ScalarField,
    pub gradient_magnitude: ScalarField,
}

impl WeightField {
    /// Fraction of nodes with `w > 0`.
    pub fn support_fraction(&self) -> f64 {
        let n = self.weight.values().iter().filter(|&&w| w > 0.0).count();
        n as f64 / self.weight.len() as f64
    }
}

/// Shared tail of both pipelines: mollify, differentiate, apply `W`.
pub fn weight_from_field(field: &ScalarField, spec: &WeightSpec, order: MollifyOrder) -> Result<WeightField> {
    let gradient_magnitude = match order {
        MollifyOrder::FieldThenGradient => {
            gradient(&mollify(field, spec.mollify_radius)?).magnitude()
        }
        MollifyOrder::GradientThenField => mollify(&gradient(field).magnitude(), spec.mollify_radius)?,
    };
    let weight = gradient_magnitude.map(|x| spec.eval(x))?;
    Ok(WeightField {
        weight,
        gradient_magnitude,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub rof_iterations: usize,
    pub rof_converged: bool,
    pub rof_residual: f64,
    pub support_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct AdaptiveWeight {
    pub weight: ScalarField,
    pub u_rof: ScalarField,
    pub gradient_magnitude: ScalarField,
    pub report: WeightReport,
}

/// Adaptive pipeline: classical ROF pre-solve, mollification, `W` of the
/// gradient magnitude. A non-converged pre-solve is flagged in the report
/// and its last iterate is used.
pub fn build_weight_adaptive(
    g: &ScalarField,
    lambda: f64,
    spec: &WeightSpec,
    solver_cfg: &SolverConfig,
) -> Result<AdaptiveWeight> {
    build_weight_adaptive_with(g, lambda, spec, solver_cfg, MollifyOrder::default())
}

pub fn build_weight_adaptive_with(
    g: &ScalarField,
    lambda: f64,
    spec: &WeightSpec,
    solver_cfg: &SolverConfig,
    order: MollifyOrder,
) -> Result<AdaptiveWeight> {
    let problem = DenoiseProblem::new(FidelityParams::new(lambda, g.clone())?, Regularizer::Tv)?;
    let rof = solve(&problem, solver_cfg)?;
    let field = weight_from_field(&rof.u, spec, order)?;
    let report = WeightReport {
        rof_iterations: rof.iterations,
        rof_converged: rof.converged,
        rof_residual: rof.final_residual(),
        support_fraction: field.support_fraction(),
    };
    Ok(AdaptiveWeight {
        weight: field.weight,
        u_rof: rof.u,
        gradient_magnitude: field.gradient_magnitude,
        report,
    })
}

/// Weight computed directly from the mollified noisy datum.
pub fn build_weight_noisy(g: &ScalarField, spec: &WeightSpec) -> Result<WeightField> {
    weight_from_field(g, spec, MollifyOrder::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w1(a: f64, b: f64, r: f64) -> WeightSpec {
        WeightSpec::new(WeightFamily::W1 { a, b }, r).unwrap()
    }

    #[test]
    fn family_examples() {
        assert_eq!(w1(500.0, 5000.0, 0.0).eval(0.0), 250.0);
        let w2 = WeightFamily::W2 { a: 60.0, b: 900.0 };
        assert_eq!(w2.eval(60.0 / 900.0), 0.0);
        assert_eq!(w2.eval(0.0), 60.0);
        let w3 = WeightFamily::W3 { height: 10.0, cutoff: 0.05 };
        assert_eq!(w3.eval(0.05), 10.0);
        assert_eq!(w3.eval(0.0501), 0.0);
    }

    #[test]
    fn w1_plateau_and_ramp() {
        let f = WeightFamily::W1 { a: 4.0, b: 8.0 };
        assert_eq!(f.eval(0.1), 2.0);
        assert_eq!(f.eval(0.25), 2.0);
        assert_eq!(f.eval(0.375), 1.0);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(3.0), 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(WeightSpec::new(WeightFamily::W1 { a: 0.0, b: 1.0 }, 1.0).is_err());
        assert!(WeightSpec::new(WeightFamily::W3 { height: 1.0, cutoff: -1.0 }, 1.0).is_err());
        assert!(WeightSpec::new(WeightFamily::W2 { a: 1.0, b: 1.0 }, -0.5).is_err());
        assert!(eval_weight_function(&w1(1.0, 1.0, 0.0), -0.1).is_err());
    }

    #[test]
    fn rescale_examples() {
        let s = w1(3.0, 7.0, 2.0);
        assert_eq!(rescale_weight_spec(&s, 1.0, 1.0).unwrap(), s);
        let s3 = WeightSpec::new(WeightFamily::W3 { height: 1.0, cutoff: 0.1 }, 0.0).unwrap();
        let r = rescale_weight_spec(&s3, 2.0, 4.0).unwrap();
        assert_eq!(r.family, WeightFamily::W3 { height: 2.0, cutoff: 0.025 });
        let s2 = WeightSpec::new(WeightFamily::W2 { a: 1.5, b: 2.5 }, 0.0).unwrap();
        let r = rescale_weight_spec(&s2, 2.0, 3.0).unwrap();
        assert_eq!(r.family, WeightFamily::W2 { a: 3.0, b: 15.0 });
        assert!((r.family.cutoff() - 1.5 / 7.5).abs() < 1e-15);
        for k in 0..200 {
            let x = k as f64 * 0.005;
            let lhs = 2.0 * s2.eval(3.0 * x);
            assert!((lhs - r.eval(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn constant_datum_gives_flat_weight() {
        let g = ScalarField::constant(8, 8, 0.3).unwrap();
        let spec = w1(500.0, 5000.0, 2.0);
        let aw = build_weight_adaptive(&g, 0.24, &spec, &SolverConfig::default()).unwrap();
        assert_eq!(aw.u_rof, g);
        assert!(aw.weight.values().iter().all(|&w| w == 250.0));
        let nw = build_weight_noisy(&g, &spec).unwrap();
        assert!(nw.weight.values().iter().all(|&w| w == 250.0));
    }

    #[test]
    fn zero_radius_uses_rof_gradient_directly() {
        let g = ScalarField::signal((0..32).map(|k| if k < 16 { 0.2 } else { 0.7 }).collect()).unwrap();
        let spec = w1(500.0, 5000.0, 0.0);
        let aw = build_weight_adaptive(&g, 0.24, &spec, &SolverConfig::default()).unwrap();
        assert_eq!(aw.gradient_magnitude, gradient(&aw.u_rof).magnitude());
    }

    #[test]
    fn noisy_weight_is_shared_tail() {
        let g = ScalarField::from_fn(6, 7, |i, j| ((i * 3 + j * 5) % 4) as f64 / 4.0).unwrap();
        let spec = w1(2.0, 10.0, 1.5);
        let a = build_weight_noisy(&g, &spec).unwrap();
        let b = weight_from_field(&g, &spec, MollifyOrder::FieldThenGradient).unwrap();
        assert_eq!(a.weight, b.weight);
    }

    #[test]
    fn step_weight_vanishes_at_jump() {
        let g = ScalarField::signal((0..64).map(|k| if k < 32 { 0.25 } else { 0.75 }).collect()).unwrap();
        let spec = w1(500.0, 5000.0, 1.0);
        let aw = build_weight_adaptive(&g, 0.24, &spec, &SolverConfig::default()).unwrap();
        let mag = aw.gradient_magnitude.values();
        let argmax = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
        assert_eq!(aw.weight.values()[argmax], 0.0);
        for (k, &m) in mag.iter().enumerate() {
            if m >= 0.1 {
                assert_eq!(aw.weight.values()[k], 0.0);
            }
        }
        assert!(aw.weight.values()[5] > 0.0);
    }

    #[test]
    fn gradient_then_field_order_differs() {
        let g = ScalarField::signal((0..16).map(|k| if k < 8 { 0.0 } else { 1.0 }).collect()).unwrap();
        let spec = w1(2.0, 10.0, 2.0);
        let a = weight_from_field(&g, &spec, MollifyOrder::FieldThenGradient).unwrap();
        let b = weight_from_field(&g, &spec, MollifyOrder::GradientThenField).unwrap();
        assert_ne!(a.gradient_magnitude, b.gradient_magnitude);
    }
}

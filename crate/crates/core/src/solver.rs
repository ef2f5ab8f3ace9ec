//! Chambolle-Pock primal-dual iterations for
//! `min_u sum phi(|grad u|) + (1 / 2 lambda) ||u - g||^2`
//! with `K = grad`, `K* = -div`.
//!
//! Both variants share the same resolvents. The accelerated variant updates
//! `theta_n = 1 / sqrt(1 + 2 gamma tau_n)`, `tau_{n+1} = theta_n tau_n`,
//! `sigma_{n+1} = sigma_n / theta_n` after every primal step.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{divergence_into, gradient, gradient_into, NormBoundReading, ScalarField, VectorField};
use crate::prox::{prox_g_in_place, FidelityParams, Regularizer};

/// Which Chambolle-Pock scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Fixed steps and fixed extrapolation `theta`.
    Standard,
    /// Step sizes adapted with the uniform-convexity constant `gamma`.
    Accelerated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tau0: f64,
    pub sigma0: f64,
    /// Extrapolation parameter of the standard variant.
    pub theta: f64,
    /// Uniform-convexity constant for the accelerated variant. `None` uses
    /// the modulus `1 / lambda` of the fidelity term.
    pub gamma: Option<f64>,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub variant: Variant,
    pub norm_bound: NormBoundReading,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau0: 0.25,
            sigma0: 0.25,
            theta: 1.0,
            gamma: None,
            max_iters: 20_000,
            stop_tol: 1e-4,
            variant: Variant::Accelerated,
            norm_bound: NormBoundReading::SquaredNorm,
        }
    }
}

impl SolverConfig {
    pub fn standard() -> Self {
        Self {
            variant: Variant::Standard,
            ..Self::default()
        }
    }

    pub fn accelerated() -> Self {
        Self::default()
    }

    pub fn with_tolerance(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Checks parameter ranges and the step-size condition
    /// `tau0 sigma0 L^2 < 1` (standard) or `<= 1` (accelerated).
    pub fn validate(&self, spacing: f64) -> Result<()> {
        for (name, v) in [("tau0", self.tau0), ("sigma0", self.sigma0), ("stop_tol", self.stop_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if let Some(gamma) = self.gamma {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
            }
        }
        let product = self.tau0 * self.sigma0 * self.norm_bound.l_squared(spacing);
        let ok = match self.variant {
            Variant::Standard => product < 1.0,
            Variant::Accelerated => product <= 1.0,
        };
        if !ok {
            return Err(Error::invalid(format!(
                "step sizes violate tau*sigma*L^2 bound: {product}"
            )));
        }
        Ok(())
    }
}

/// A denoising problem: fidelity term plus regularizer.
#[derive(Clone, Debug)]
pub struct DenoiseProblem {
    pub fidelity: FidelityParams,
    pub regularizer: Regularizer,
}

impl DenoiseProblem {
    pub fn new(fidelity: FidelityParams, regularizer: Regularizer) -> Result<Self> {
        regularizer.check_shape(fidelity.datum().shape())?;
        Ok(Self { fidelity, regularizer })
    }

    pub fn datum(&self) -> &ScalarField {
        self.fidelity.datum()
    }

    pub fn energy(&self, u: &ScalarField) -> Result<f64> {
        primal_energy(u, &self.fidelity, &self.regularizer)
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: ScalarField,
    pub p: VectorField,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `(tau, sigma)` after the last iteration.
    pub final_steps: (f64, f64),
}

impl SolveResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// One line of iteration diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    pub energy: f64,
}

/// Receives per-iteration diagnostics.
pub trait IterationObserver {
    fn observe(&mut self, record: &IterationRecord);
}

impl<F: FnMut(&IterationRecord)> IterationObserver for F {
    fn observe(&mut self, record: &IterationRecord) {
        self(record)
    }
}

/// Streams diagnostics as CSV with header `iter,residual,energy`.
pub struct DiagnosticsCsv<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> DiagnosticsCsv<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        out.write_all(b"iter,residual,energy\n")?;
        Ok(Self { out, error: None })
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> IterationObserver for DiagnosticsCsv<W> {
    fn observe(&mut self, r: &IterationRecord) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = writeln!(self.out, "{},{},{}", r.iter, r.residual, r.energy) {
            self.error = Some(e);
        }
    }
}

/// Relative primal change `||u_curr - u_prev|| / max(||u_prev||, eps)`.
pub fn stopping_residual(u_prev: &ScalarField, u_curr: &ScalarField) -> Result<f64> {
    u_prev.check_same_shape(u_curr)?;
    Ok(relative_change(u_prev.values(), u_curr.values()))
}

fn relative_change(prev: &[f64], curr: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut base = 0.0;
    for (a, b) in prev.iter().zip(curr) {
        diff += (b - a) * (b - a);
        base += a * a;
    }
    diff.sqrt() / base.sqrt().max(f64::EPSILON)
}

/// Discrete primal energy `sum phi(|grad u|) + (1 / 2 lambda) ||u - g||^2`.
pub fn primal_energy(u: &ScalarField, fidelity: &FidelityParams, regularizer: &Regularizer) -> Result<f64> {
    regularizer.check_shape(u.shape())?;
    let grad = gradient(u);
    let mut reg = 0.0;
    for k in 0..grad.len() {
        let t = grad.first()[k].hypot(grad.second()[k]);
        reg += regularizer.integrand(k, t);
    }
    Ok(reg + fidelity.value(u)?)
}

/// Standard Chambolle-Pock iteration. `cfg.variant` must be `Standard`.
pub fn solve_standard(problem: &DenoiseProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    if cfg.variant != Variant::Standard {
        return Err(Error::invalid("solve_standard requires the standard variant"));
    }
    solve(problem, cfg)
}

/// Accelerated Chambolle-Pock iteration. `cfg.variant` must be `Accelerated`.
pub fn solve_accelerated(problem: &DenoiseProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    if cfg.variant != Variant::Accelerated {
        return Err(Error::invalid("solve_accelerated requires the accelerated variant"));
    }
    solve(problem, cfg)
}

/// Runs the variant selected by `cfg` from `x0 = g`, `y0 = 0`.
pub fn solve(problem: &DenoiseProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_from(problem, cfg, problem.datum(), None)
}

/// Runs the variant selected by `cfg` from a given primal start, optionally
/// reporting every iteration to `observer`.
pub fn solve_from(
    problem: &DenoiseProblem,
    cfg: &SolverConfig,
    init: &ScalarField,
    mut observer: Option<&mut dyn IterationObserver>,
) -> Result<SolveResult> {
    let datum = problem.datum();
    cfg.validate(datum.spacing())?;
    datum.check_same_shape(init)?;
    problem.regularizer.check_shape(datum.shape())?;

    let lambda = problem.fidelity.lambda();
    let gamma = cfg.gamma.unwrap_or(1.0 / lambda);
    let g = datum.values();
    let mut x = init.respaced(datum.spacing())?;
    let mut x_prev = x.clone();
    let mut x_bar = x.clone();
    let mut y = VectorField::zeros_like(&x);
    let mut k_xbar = VectorField::zeros_like(&x);
    let mut div_y = vec![0.0; x.len()];

    let (mut tau, mut sigma) = (cfg.tau0, cfg.sigma0);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for n in 0..cfg.max_iters {
        // dual step: y <- prox_{sigma F*}(y + sigma K x_bar)
        gradient_into(&x_bar, &mut k_xbar);
        {
            let (y1, y2) = y.components_mut();
            for (yv, kv) in y1.iter_mut().zip(k_xbar.first()) {
                *yv += sigma * kv;
            }
            for (yv, kv) in y2.iter_mut().zip(k_xbar.second()) {
                *yv += sigma * kv;
            }
        }
        problem.regularizer.apply_dual_prox(&mut y, sigma);

        // primal step: x <- prox_{tau G}(x + tau div y)
        divergence_into(&y, &mut div_y);
        std::mem::swap(&mut x, &mut x_prev);
        {
            let xv = x.values_mut();
            for ((xn, xp), d) in xv.iter_mut().zip(x_prev.values()).zip(&div_y) {
                *xn = xp + tau * d;
            }
            prox_g_in_place(xv, g, lambda, tau);
        }

        let theta = match cfg.variant {
            Variant::Standard => cfg.theta,
            Variant::Accelerated => {
                let theta = 1.0 / (1.0 + 2.0 * gamma * tau).sqrt();
                tau *= theta;
                sigma /= theta;
                theta
            }
        };
        {
            let xb = x_bar.values_mut();
            for ((b, xn), xp) in xb.iter_mut().zip(x.values()).zip(x_prev.values()) {
                *b = xn + theta * (xn - xp);
            }
        }

        let residual = relative_change(x_prev.values(), x.values());
        history.push(residual);
        iterations = n + 1;
        if let Some(obs) = observer.as_deref_mut() {
            let energy = primal_energy(&x, &problem.fidelity, &problem.regularizer)?;
            obs.observe(&IterationRecord {
                iter: iterations,
                residual,
                energy,
            });
        }
        if !residual.is_finite() {
            break;
        }
        if residual <= cfg.stop_tol {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        u: x,
        p: y,
        iterations,
        residual_history: history,
        converged,
        final_steps: (tau, sigma),
    })
}

//! End-to-end denoising runs and parameter sweeps.
//!
//! A sweep is the cross product `model x lambda x sigma`. The noise for a
//! given sigma is seeded from `(base seed, sigma index)`, so every model sees
//! the same noisy datum at that sigma. Cells run in parallel; rows come back
//! in cross-product order.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{add_gaussian_noise, NoiseSpec, ScalarField};
use crate::metrics::MetricReport;
use crate::prox::{FidelityParams, Regularizer};
use crate::solver::{solve_from, DenoiseProblem, IterationObserver, SolveResult, SolverConfig};
use crate::weight::{build_weight_adaptive, build_weight_noisy, WeightFamily, WeightSpec};

/// Header of the sweep CSV. The first thirteen columns are the metric row;
/// the last three carry the weight family, first-stage iterations and the
/// convergence flag.
pub const SWEEP_CSV_HEADER: &str =
    "model,lambda,sigma,alpha,a,b,r,d_l2_noisy,d_tv,d_l2,psnr,ssim,iterations,family,pre_iterations,converged";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Rof,
    Huber { alpha: f64 },
    /// Weight from the mollified ROF solution.
    DpAdaptive(WeightSpec),
    /// Weight from the mollified noisy datum.
    DpNoisy(WeightSpec),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Rof => "rof",
            Model::Huber { .. } => "huber",
            Model::DpAdaptive(_) => "dp-adaptive",
            Model::DpNoisy(_) => "dp-noisy",
        }
    }

    pub fn weight_spec(&self) -> Option<&WeightSpec> {
        match self {
            Model::DpAdaptive(s) | Model::DpNoisy(s) => Some(s),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Model::Huber { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl From<&SolveResult> for StageReport {
    fn from(r: &SolveResult) -> Self {
        Self {
            iterations: r.iterations,
            converged: r.converged,
            residual: r.final_residual(),
        }
    }
}

/// Output of one model run on one noisy datum.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub result: ScalarField,
    /// The double-phase weight, when the model has one.
    pub weight: Option<ScalarField>,
    /// The ROF pre-solve of the adaptive pipeline.
    pub pre_stage: Option<StageReport>,
    pub stage: StageReport,
}

impl ModelRun {
    pub fn converged(&self) -> bool {
        self.stage.converged && self.pre_stage.is_none_or(|s| s.converged)
    }
}

/// Runs `model` on `noisy` with fidelity weight `lambda`.
pub fn run_model(noisy: &ScalarField, lambda: f64, model: &Model, cfg: &SolverConfig) -> Result<ModelRun> {
    run_model_observed(noisy, lambda, model, cfg, None)
}

/// As [`run_model`], reporting the iterations of the final stage to
/// `observer`.
pub fn run_model_observed(
    noisy: &ScalarField,
    lambda: f64,
    model: &Model,
    cfg: &SolverConfig,
    observer: Option<&mut dyn IterationObserver>,
) -> Result<ModelRun> {
    let fidelity = FidelityParams::new(lambda, noisy.clone())?;
    let (regularizer, weight, pre_stage) = match model {
        Model::Rof => (Regularizer::Tv, None, None),
        Model::Huber { alpha } => {
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(Error::invalid(format!("huber alpha must be positive, got {alpha}")));
            }
            (Regularizer::huber(*alpha)?, None, None)
        }
        Model::DpAdaptive(spec) => {
            let aw = build_weight_adaptive(noisy, lambda, spec, cfg)?;
            let pre = StageReport {
                iterations: aw.report.rof_iterations,
                converged: aw.report.rof_converged,
                residual: aw.report.rof_residual,
            };
            (Regularizer::double_phase(aw.weight.clone())?, Some(aw.weight), Some(pre))
        }
        Model::DpNoisy(spec) => {
            let w = build_weight_noisy(noisy, spec)?.weight;
            (Regularizer::double_phase(w.clone())?, Some(w), None)
        }
    };
    let problem = DenoiseProblem::new(fidelity, regularizer)?;
    let solved = solve_from(&problem, cfg, noisy, observer)?;
    Ok(ModelRun {
        stage: StageReport::from(&solved),
        result: solved.u,
        weight,
        pre_stage,
    })
}

/// Per-run record printed by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub model: String,
    pub lambda: f64,
    pub alpha: Option<f64>,
    pub weight: Option<WeightSpec>,
    pub noise: Option<NoiseSpec>,
    pub solver: SolverConfig,
    pub pre_stage: Option<StageReport>,
    pub stage: StageReport,
    pub converged: bool,
    pub metrics: Option<MetricReport>,
}

impl RunReport {
    pub fn new(
        model: &Model,
        lambda: f64,
        noise: Option<NoiseSpec>,
        solver: &SolverConfig,
        run: &ModelRun,
        metrics: Option<MetricReport>,
    ) -> Self {
        Self {
            model: model.name().to_string(),
            lambda,
            alpha: model.alpha(),
            weight: model.weight_spec().copied(),
            noise,
            solver: solver.clone(),
            pre_stage: run.pre_stage,
            stage: run.stage,
            converged: run.converged(),
            metrics,
        }
    }
}

/// Noise seed for the `sigma_index`-th noise level of a sweep.
pub fn noise_seed(base_seed: u64, sigma_index: usize) -> u64 {
    // splitmix64 step keyed by the index
    let mut z = base_seed.wrapping_add((sigma_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub models: Vec<Model>,
    pub lambdas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.lambdas.is_empty() || self.sigmas.is_empty() {
            return Err(Error::invalid("sweep ranges must be nonempty"));
        }
        if let Some(l) = self.lambdas.iter().find(|&&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::invalid(format!("lambda must be positive, got {l}")));
        }
        if let Some(s) = self.sigmas.iter().find(|&&s| !(s.is_finite() && s >= 0.0)) {
            return Err(Error::invalid(format!("sigma must be nonnegative, got {s}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: Model,
    pub lambda: f64,
    pub sigma: f64,
    pub metrics: MetricReport,
    pub iterations: usize,
    pub pre_iterations: Option<usize>,
    pub converged: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let (family, a, b, r) = match self.model.weight_spec() {
            Some(spec) => {
                let (a, b) = match spec.family {
                    WeightFamily::W1 { a, b } | WeightFamily::W2 { a, b } => (a, b),
                    WeightFamily::W3 { height, cutoff } => (height, cutoff),
                };
                (spec.family.name(), Some(a), Some(b), Some(spec.mollify_radius))
            }
            None => ("", None, None, None),
        };
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model.name(),
            self.lambda,
            self.sigma,
            opt(self.model.alpha()),
            opt(a),
            opt(b),
            opt(r),
            m.d_l2_noisy,
            m.d_tv,
            m.d_l2,
            m.psnr,
            m.ssim,
            self.iterations,
            family,
            self.pre_iterations.map(|n| n.to_string()).unwrap_or_default(),
            self.converged
        )
    }
}

/// Runs every cell of the sweep against the clean `original`.
pub fn run_sweep(original: &ScalarField, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    cfg.solver.validate(original.spacing())?;
    let noisy: Vec<ScalarField> = cfg
        .sigmas
        .iter()
        .enumerate()
        .map(|(k, &sigma)| add_gaussian_noise(original, NoiseSpec::new(sigma, noise_seed(cfg.seed, k))?))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for model in &cfg.models {
        for &lambda in &cfg.lambdas {
            for (k, &sigma) in cfg.sigmas.iter().enumerate() {
                cells.push((model, lambda, k, sigma));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(model, lambda, k, sigma)| {
            let run = run_model(&noisy[k], lambda, model, &cfg.solver)?;
            let metrics = MetricReport::compute(&run.result, original, &noisy[k])?;
            Ok(SweepRow {
                model: model.clone(),
                lambda,
                sigma,
                metrics,
                iterations: run.stage.iterations,
                pre_iterations: run.pre_stage.map(|s| s.iterations),
                converged: run.converged(),
            })
        })
        .collect()
}

/// Writes the header and rows, flushing after every row.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    out.write_all(format!("{SWEEP_CSV_HEADER}\n").as_bytes())?;
    out.flush()?;
    for row in rows {
        out.write_all(format!("{}\n", row.csv_line()).as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

/// Metric optimized by a summary entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SummaryMetric {
    DTv,
    DL2,
    Psnr,
    Ssim,
}

impl SummaryMetric {
    pub const ALL: [SummaryMetric; 4] = [
        SummaryMetric::DTv,
        SummaryMetric::DL2,
        SummaryMetric::Psnr,
        SummaryMetric::Ssim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SummaryMetric::DTv => "d_tv",
            SummaryMetric::DL2 => "d_l2",
            SummaryMetric::Psnr => "psnr",
            SummaryMetric::Ssim => "ssim",
        }
    }

    /// Value oriented so that larger is better.
    fn score(self, m: &MetricReport) -> f64 {
        match self {
            SummaryMetric::DTv => -m.d_tv,
            SummaryMetric::DL2 => -m.d_l2,
            SummaryMetric::Psnr => m.psnr.as_f64(),
            SummaryMetric::Ssim => m.ssim,
        }
    }

    fn value(self, m: &MetricReport) -> String {
        match self {
            SummaryMetric::DTv => m.d_tv.to_string(),
            SummaryMetric::DL2 => m.d_l2.to_string(),
            SummaryMetric::Psnr => m.psnr.to_string(),
            SummaryMetric::Ssim => m.ssim.to_string(),
        }
    }
}

/// Best lambda of one model at one noise level for one metric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub sigma: f64,
    pub metric: SummaryMetric,
    pub best_lambda: f64,
    pub d_l2_noisy: f64,
    pub value: String,
}

pub const SUMMARY_CSV_HEADER: &str = "summary,model,sigma,metric,best_lambda,d_l2_noisy,value";

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        format!(
            "summary,{},{},{},{},{},{}",
            self.model,
            self.sigma,
            self.metric.name(),
            self.best_lambda,
            self.d_l2_noisy,
            self.value
        )
    }
}

/// Extremal lambda per `(model, sigma)` and metric: minimum for the
/// distances, maximum for PSNR and SSIM. Ties keep the first lambda.
pub fn sweep_summary(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(&Model, f64, Vec<&SweepRow>)> = Vec::new();
    for row in rows {
        match groups
            .iter_mut()
            .find(|(m, s, _)| **m == row.model && s.to_bits() == row.sigma.to_bits())
        {
            Some(g) => g.2.push(row),
            None => groups.push((&row.model, row.sigma, vec![row])),
        }
    }
    let mut out = Vec::new();
    for (model, sigma, members) in groups {
        for metric in SummaryMetric::ALL {
            let mut best = members[0];
            for &r in &members[1..] {
                if metric.score(&r.metrics) > metric.score(&best.metrics) {
                    best = r;
                }
            }
            out.push(SummaryRow {
                model: model.name().to_string(),
                sigma,
                metric,
                best_lambda: best.lambda,
                d_l2_noisy: best.metrics.d_l2_noisy,
                value: metric.value(&best.metrics),
            });
        }
    }
    out
}

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.csv_line())
    }
}

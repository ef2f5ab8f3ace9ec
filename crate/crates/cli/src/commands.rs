use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dpdenoise_core::experiment::{
    run_model_observed, run_sweep, sweep_summary, write_sweep_csv, Model, RunReport, SweepConfig,
    SUMMARY_CSV_HEADER,
};
use dpdenoise_core::grid::{add_gaussian_noise, NoiseSpec};
use dpdenoise_core::image_io::{load_image, save_image, save_image_auto, write_text, ImageFormat};
use dpdenoise_core::metrics::{d_l2_image, d_tv_image, psnr, ssim};
use dpdenoise_core::solver::{DiagnosticsCsv, IterationObserver, SolverConfig};
use dpdenoise_core::synth::{make_synthetic, SynthKind};
use dpdenoise_core::weight::{build_weight_adaptive, build_weight_noisy, WeightFamily, WeightSpec};
use dpdenoise_core::{Error, ScalarField};
use serde_json::json;

use crate::args::{Command, FamilyKind, ModelKind, Params};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_EPSILON: f64 = 1e-4;
const DEFAULT_MAX_ITERS: usize = 20_000;
const CURVE_SAMPLES: usize = 256;

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Denoise(p) => denoise(p),
        Command::Sweep(p) => sweep(p),
        Command::Weight(p) => weight(p),
        Command::Metrics(p) => metrics(p),
        Command::Synth(p) => synth(p),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn required<T: Copy>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("--{flag} is required")))
}

/// Loads a path, or generates `synth:<kind>:<size>`.
fn load_field(spec: &str) -> Result<ScalarField> {
    if let Some(rest) = spec.strip_prefix("synth:") {
        let (kind, size) = rest
            .split_once(':')
            .ok_or_else(|| usage(format!("expected synth:<kind>:<size>, got `{spec}`")))?;
        let size = size
            .parse::<usize>()
            .map_err(|_| usage(format!("invalid synthetic size `{size}`")))?;
        return Ok(make_synthetic(kind.parse::<SynthKind>()?, size)?);
    }
    Ok(load_image(spec)?)
}

fn input(p: &Params) -> Result<ScalarField> {
    load_field(p.input.as_deref().ok_or_else(|| usage("--input is required"))?)
}

fn solver_config(p: &Params) -> Result<SolverConfig> {
    let base = if p.standard {
        SolverConfig::standard()
    } else {
        SolverConfig::accelerated()
    };
    let eps = p.epsilon.unwrap_or(DEFAULT_EPSILON);
    if !(eps.is_finite() && eps > 0.0) {
        return Err(usage(format!("--epsilon must be positive, got {eps}")));
    }
    let max_iters = p.max_iters.unwrap_or(DEFAULT_MAX_ITERS);
    if max_iters == 0 {
        return Err(usage("--max-iters must be positive"));
    }
    Ok(base.with_tolerance(eps).with_max_iters(max_iters))
}

fn weight_spec(p: &Params) -> Result<WeightSpec> {
    let family = match p.weight_family {
        Some(FamilyKind::W1) => WeightFamily::W1 {
            a: required(p.a, "a")?,
            b: required(p.b, "b")?,
        },
        Some(FamilyKind::W2) => WeightFamily::W2 {
            a: required(p.a, "a")?,
            b: required(p.b, "b")?,
        },
        Some(FamilyKind::W3) => WeightFamily::W3 {
            height: required(p.height, "height")?,
            cutoff: required(p.cutoff, "cutoff")?,
        },
        None => return Err(usage("double-phase models need --weight-family")),
    };
    let radius = required(p.radius, "radius")?;
    Ok(WeightSpec::new(family, radius)?)
}

/// Builds the models and checks that model-specific flags are only given
/// when some model uses them.
fn models(p: &Params, default: Option<ModelKind>) -> Result<Vec<Model>> {
    let kinds: Vec<ModelKind> = if p.model.is_empty() {
        default.into_iter().collect()
    } else {
        p.model.clone()
    };
    if kinds.is_empty() {
        return Err(usage("--model is required"));
    }
    let wants_alpha = kinds.contains(&ModelKind::Huber);
    let wants_weight = kinds.iter().any(|k| matches!(k, ModelKind::DpAdaptive | ModelKind::DpNoisy));
    if p.alpha.is_some() && !wants_alpha {
        return Err(usage("--alpha only applies to the huber model"));
    }
    let weight_flags = p.weight_family.is_some()
        || p.a.is_some()
        || p.b.is_some()
        || p.height.is_some()
        || p.cutoff.is_some()
        || p.radius.is_some();
    if weight_flags && !wants_weight {
        return Err(usage("weight flags only apply to the dp-adaptive and dp-noisy models"));
    }
    let spec = if wants_weight { Some(weight_spec(p)?) } else { None };
    kinds
        .into_iter()
        .map(|k| {
            Ok(match k {
                ModelKind::Rof => Model::Rof,
                ModelKind::Huber => Model::Huber {
                    alpha: p.alpha.ok_or_else(|| usage("the huber model needs --alpha"))?,
                },
                ModelKind::DpAdaptive => Model::DpAdaptive(spec.expect("spec built above")),
                ModelKind::DpNoisy => Model::DpNoisy(spec.expect("spec built above")),
            })
        })
        .collect()
}

fn noise(p: &Params) -> Result<Option<NoiseSpec>> {
    match p.sigma {
        None => Ok(None),
        Some(0.0) => Ok(None),
        Some(s) => Ok(Some(NoiseSpec::new(s, p.seed.unwrap_or(0))?)),
    }
}

fn check_converged(converged: bool, p: &Params, what: &str) -> Result<()> {
    if converged || p.allow_nonconverged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "{what} did not converge within the iteration limit (use --allow-nonconverged to accept)"
        )))
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    println!("{text}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn denoise(p: &Params) -> Result<()> {
    let model = match models(p, None)?.as_slice() {
        [m] => m.clone(),
        _ => return Err(usage("denoise takes exactly one --model")),
    };
    let lambda = required(p.lambda, "lambda")?;
    let cfg = solver_config(p)?;
    let clean = input(p)?;
    let noise = noise(p)?;
    let noisy = match noise {
        Some(spec) => add_gaussian_noise(&clean, spec)?,
        None => clean.clone(),
    };
    let original = match &p.original {
        Some(path) => Some(load_field(path)?),
        None if noise.is_some() => Some(clean),
        None => None,
    };

    let run = match &p.diagnostics {
        Some(path) => {
            let mut diag = DiagnosticsCsv::new(create(path)?).map_err(|e| Error::io(path, e))?;
            let run = run_model_observed(&noisy, lambda, &model, &cfg, Some(&mut diag as &mut dyn IterationObserver))?;
            diag.finish().map_err(|e| Error::io(path, e))?;
            run
        }
        None => run_model_observed(&noisy, lambda, &model, &cfg, None)?,
    };

    if let Some(out) = &p.output {
        save_image_auto(&run.result, out)?;
    }
    let metrics = match &original {
        Some(o) => Some(dpdenoise_core::metrics::MetricReport::compute(&run.result, o, &noisy)?),
        None => None,
    };
    print_json(&RunReport::new(&model, lambda, noise, &cfg, &run, metrics))?;
    check_converged(run.converged(), p, "the run")
}

fn sweep(p: &Params) -> Result<()> {
    let models = models(p, None)?;
    let lambdas = if p.lambdas.is_empty() {
        p.lambda.into_iter().collect()
    } else {
        p.lambdas.clone()
    };
    let sigmas = if p.sigmas.is_empty() {
        p.sigma.into_iter().collect()
    } else {
        p.sigmas.clone()
    };
    if lambdas.is_empty() {
        return Err(usage("sweep needs --lambdas or --lambda"));
    }
    if sigmas.is_empty() {
        return Err(usage("sweep needs --sigmas or --sigma"));
    }
    let cfg = SweepConfig {
        models,
        lambdas,
        sigmas,
        seed: p.seed.unwrap_or(0),
        solver: solver_config(p)?,
    };
    let original = input(p)?;
    let rows = run_sweep(&original, &cfg)?;

    let mut table = Vec::new();
    write_sweep_csv(&rows, &mut table).expect("writing to memory");
    let table = String::from_utf8(table).expect("csv is UTF-8");

    let summary = sweep_summary(&rows);
    let mut summary_text = format!("{SUMMARY_CSV_HEADER}\n");
    for row in &summary {
        summary_text.push_str(&row.csv_line());
        summary_text.push('\n');
    }

    match &p.csv {
        Some(path) => {
            write_text(path, &table)?;
            print!("{summary_text}");
        }
        None => print!("{table}"),
    }
    if let Some(path) = &p.summary {
        write_text(path, &summary_text)?;
    }
    std::io::stdout().flush().map_err(|e| Error::io("<stdout>", e))?;
    let failed = rows.iter().filter(|r| !r.converged).count();
    check_converged(failed == 0, p, &format!("{failed} of {} sweep cells", rows.len()))
}

fn normalized(field: &ScalarField, by: f64) -> Result<ScalarField> {
    if by > 0.0 {
        Ok(field.scale(1.0 / by)?)
    } else {
        Ok(field.map(|_| 0.0)?)
    }
}

fn weight(p: &Params) -> Result<()> {
    let model = match models(p, Some(ModelKind::DpAdaptive))?.as_slice() {
        [m @ (Model::DpAdaptive(_) | Model::DpNoisy(_))] => m.clone(),
        _ => return Err(usage("weight takes --model dp-adaptive or dp-noisy")),
    };
    let spec = *model.weight_spec().expect("double-phase model");
    let dir = p.output.as_deref().ok_or_else(|| usage("--output <DIR> is required"))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let clean = input(p)?;
    let g = match noise(p)? {
        Some(n) => add_gaussian_noise(&clean, n)?,
        None => clean,
    };

    let (field, grad, rof) = match model {
        Model::DpAdaptive(_) => {
            let lambda = required(p.lambda, "lambda")?;
            let aw = build_weight_adaptive(&g, lambda, &spec, &solver_config(p)?)?;
            (aw.weight, aw.gradient_magnitude, Some(aw.report))
        }
        _ => {
            let wf = build_weight_noisy(&g, &spec)?;
            (wf.weight, wf.gradient_magnitude, None)
        }
    };

    let w0 = spec.family.at_zero();
    let max_grad = grad.max();
    let x_max = if max_grad > 0.0 { max_grad } else { spec.family.cutoff() };
    let mut curve = String::from("x,w\n");
    for k in 0..CURVE_SAMPLES {
        let x = x_max * k as f64 / (CURVE_SAMPLES - 1) as f64;
        curve.push_str(&format!("{x},{}\n", spec.eval(x)));
    }

    let files = [
        ("gradient.pgm", normalized(&grad, max_grad)?, ImageFormat::Pgm),
        ("gradient.csv", grad.clone(), ImageFormat::Csv),
        ("weight.pgm", normalized(&field, w0)?, ImageFormat::Pgm),
        ("weight.csv", field.clone(), ImageFormat::Csv),
    ];
    for (name, f, format) in &files {
        save_image(f, dir.join(name), *format)?;
    }
    write_text(&dir.join("w_curve.csv"), &curve)?;

    let support = field.values().iter().filter(|&&v| v > 0.0).count() as f64 / field.len() as f64;
    print_json(&json!({
        "model": model.name(),
        "weight": spec,
        "w0": w0,
        "cutoff": spec.family.cutoff(),
        "max_gradient": max_grad,
        "support_fraction": support,
        "pre_stage": rof,
        "files": ["gradient.pgm", "gradient.csv", "weight.pgm", "weight.csv", "w_curve.csv"],
    }))?;
    check_converged(rof.is_none_or(|r| r.rof_converged), p, "the ROF pre-solve")
}

fn metrics(p: &Params) -> Result<()> {
    let result = input(p)?;
    let original = load_field(p.original.as_deref().ok_or_else(|| usage("--original is required"))?)?;
    let noisy = p.noisy.as_deref().map(load_field).transpose()?;
    let d_l2_noisy = match &noisy {
        Some(n) => Some(d_l2_image(&result, n)?),
        None => None,
    };
    print_json(&json!({
        "d_tv": d_tv_image(&result, &original)?,
        "d_l2": d_l2_image(&result, &original)?,
        "psnr": psnr(&result, &original)?,
        "ssim": ssim(&result, &original)?,
        "d_l2_noisy": d_l2_noisy,
    }))
}

fn synth(p: &Params) -> Result<()> {
    let kind: SynthKind = p.kind.as_deref().ok_or_else(|| usage("--kind is required"))?.parse()?;
    let size = required(p.size, "size")?;
    let out = p.output.as_deref().ok_or_else(|| usage("--output is required"))?;
    let clean = make_synthetic(kind, size)?;
    let field = match noise(p)? {
        Some(n) => add_gaussian_noise(&clean, n)?,
        None => clean,
    };
    save_image_auto(&field, out)?;
    Ok(())
}

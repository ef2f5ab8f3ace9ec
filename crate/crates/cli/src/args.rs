use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "dpdenoise", version, about = "Adaptive double-phase ROF denoising")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise one image or signal and print the run report as JSON.
    Denoise(Params),
    /// Run every (model, lambda, sigma) cell against a clean original.
    Sweep(Params),
    /// Emit the gradient magnitude, the W curve and the weight field.
    Weight(Params),
    /// Compare a result against the original.
    Metrics(Params),
    /// Write a synthetic signal or image.
    Synth(Params),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Rof,
    Huber,
    DpAdaptive,
    DpNoisy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    W1,
    W2,
    W3,
}

/// Flags shared by all subcommands. Every flag can also be given in the
/// `--config` file as `name = value`.
#[derive(Clone, Debug, Default, Args)]
pub struct Params {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Model, or comma-separated models for `sweep`.
    #[arg(long, value_enum, value_delimiter = ',', action = ArgAction::Set)]
    pub model: Vec<ModelKind>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Huber threshold, sometimes written `a`.
    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long, value_enum)]
    pub weight_family: Option<FamilyKind>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// W3 height `h`.
    #[arg(long)]
    pub height: Option<f64>,
    /// W3 cutoff `R`.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Mollification radius in grid units.
    #[arg(long)]
    pub radius: Option<f64>,

    /// Standard deviation of the noise added to the input.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Use the standard instead of the accelerated iteration.
    #[arg(long)]
    pub standard: bool,
    /// Exit with status zero even if a run did not converge.
    #[arg(long)]
    pub allow_nonconverged: bool,

    /// Image path, CSV path, or `synth:<kind>:<size>`.
    #[arg(long)]
    pub input: Option<String>,
    /// Clean reference used for metrics.
    #[arg(long)]
    pub original: Option<String>,
    /// Noisy datum, for the `d_l2_noisy` column of `metrics`.
    #[arg(long)]
    pub noisy: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Sweep summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Per-iteration `iter,residual,energy` CSV of the final stage.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub sigmas: Vec<f64>,

    /// Synthetic kind for `synth`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub size: Option<usize>,
}

pub enum ParseError {
    Clap(clap::Error),
    Config(CliError),
}

/// Parses the command line, splicing the entries of a `--config` file in
/// front of the explicit flags so that the latter win.
pub fn parse(mut argv: Vec<OsString>) -> Result<Cli, ParseError> {
    if let Some(config) = find_config(&argv) {
        let extra = read_config(&config).map_err(ParseError::Config)?;
        // argv[1] is the subcommand
        let at = 2.min(argv.len());
        argv.splice(at..at, extra);
    }
    Cli::try_parse_from(argv).map_err(ParseError::Clap)
}

fn find_config(argv: &[OsString]) -> Option<PathBuf> {
    let mut iter = argv.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = iter.next() {
        if a == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Turns `key = value` lines into flags. `#` starts a comment; boolean
/// keys take `true` or `false`.
pub fn read_config(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Core(dpdenoise_core::Error::FileNotFound(path.to_path_buf())),
        _ => CliError::Core(dpdenoise_core::Error::io(path, e)),
    })?;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected `key = value`", path.display(), n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            return Err(CliError::Usage(format!("{}:{}: nested config files are not supported", path.display(), n + 1)));
        }
        if matches!(key.as_str(), "standard" | "allow-nonconverged") {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "{}:{}: `{key}` expects true or false, got `{other}`",
                        path.display(),
                        n + 1
                    )))
                }
            }
            continue;
        }
        out.push(format!("--{key}").into());
        out.push(value.into());
    }
    Ok(out)
}

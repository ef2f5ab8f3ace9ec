//! Adaptive double-phase ROF denoising.
//!
//! The crate solves
//!
//! ```text
//! min_u  sum_ij phi(ij, |grad u|_ij) + (1 / 2 lambda) sum_ij (u_ij - g_ij)^2
//! ```
//!
//! on regular grids for three integrands: total variation (`phi = t`), the
//! Huber function, and the double-phase integrand `t + (w_ij / 2) t^2` whose
//! weight `w` vanishes near edges. The adaptive pipeline derives `w` from a
//! classical ROF pre-solve. Problems are solved with the standard or the
//! accelerated Chambolle-Pock primal-dual scheme.
//!
//! ```
//! use dpdenoise_core::experiment::{run_model, Model};
//! use dpdenoise_core::grid::{add_gaussian_noise, NoiseSpec};
//! use dpdenoise_core::solver::SolverConfig;
//! use dpdenoise_core::synth::make_saw;
//! use dpdenoise_core::weight::{WeightFamily, WeightSpec};
//!
//! let clean = make_saw(128, 4).unwrap();
//! let noisy = add_gaussian_noise(&clean, NoiseSpec::new(0.05, 1).unwrap()).unwrap();
//! let spec = WeightSpec::new(WeightFamily::W1 { a: 500.0, b: 5000.0 }, 1.0).unwrap();
//! let run = run_model(&noisy, 0.24, &Model::DpAdaptive(spec), &SolverConfig::default()).unwrap();
//! assert!(run.converged());
//! ```

pub mod error;
pub mod experiment;
pub mod grid;
pub mod image_io;
pub mod metrics;
pub mod prox;
pub mod solver;
pub mod synth;
pub mod weight;

pub use error::{Error, Result};
pub use grid::{ScalarField, VectorField};

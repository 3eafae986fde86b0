//! Seeded Monte Carlo harness for the spatial phase manifold receiver.
//!
//! Every mode takes an [`ExperimentConfig`] and returns a [`SweepResult`]
//! whose CSV form is byte-identical for a given config and seed, whatever
//! the thread count.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ber;
pub mod calibration;
pub mod coherent;
pub mod config;
pub mod error;
pub mod estimation;
mod observe;
pub mod output;
pub mod peb;
pub mod presets;
pub mod runner;

use std::path::Path;

pub use ber::{run_ber, run_coherent_baseline, ErrorCounts};
pub use config::{AlphabetConfig, CoherentConfig, ErrorModel, ExperimentConfig, Frontend, Mode};
pub use error::{Result, SimError};
pub use estimation::{run_error_pdf, run_rmse_crlb};
pub use output::{Cell, SweepResult};
pub use peb::{run_peb_map, Scene};

/// Loads the scene named by `cfg.scene`, relative to `base` when given,
/// falling back to the scenes built into the binary.
pub fn load_scene(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<Scene> {
    let name = cfg
        .scene
        .as_deref()
        .ok_or_else(|| SimError::Config(vec!["scene: required for mode peb-map".into()]))?;
    let path = base.map_or_else(|| Path::new(name).to_path_buf(), |b| b.join(name));
    if path.is_file() {
        let text = std::fs::read_to_string(&path)?;
        return Scene::from_json(&text, &path.display().to_string());
    }
    match presets::builtin_scene(name) {
        Some(text) => Scene::from_json(text, name),
        None => Err(std::io::Error::new(std::io::ErrorKind::NotFound, format!("scene {} not found", path.display())).into()),
    }
}

/// Dispatches on `cfg.mode`.
pub fn run(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<SweepResult> {
    match cfg.mode {
        Mode::Ber | Mode::BerPhaseNoise => run_ber(cfg),
        Mode::ErrorPdf => run_error_pdf(cfg),
        Mode::RmseCrlb => run_rmse_crlb(cfg),
        Mode::PebMap => {
            cfg.validate()?;
            run_peb_map(cfg, &load_scene(cfg, base)?)
        }
    }
}

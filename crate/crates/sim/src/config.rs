use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spmc_core::frontend::MIN_PROBES;
use spmc_core::inference::default_grid_points;
use spmc_core::{build_uniform_alphabet, Alphabet, ArrayGeometry, Channel, Geometry, Waveform, WrappedAngle};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ber,
    BerPhaseNoise,
    ErrorPdf,
    RmseCrlb,
    PebMap,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Ber, Mode::BerPhaseNoise, Mode::ErrorPdf, Mode::RmseCrlb, Mode::PebMap];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ber => "ber",
            Mode::BerPhaseNoise => "ber-phase-noise",
            Mode::ErrorPdf => "error-pdf",
            Mode::RmseCrlb => "rmse-crlb",
            Mode::PebMap => "peb-map",
        }
    }

    fn is_ber(self) -> bool {
        matches!(self, Mode::Ber | Mode::BerPhaseNoise)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// Which front-end produces the baseline observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frontend {
    #[default]
    Statistical,
    #[serde(alias = "waveform-oracle")]
    Waveform,
}

impl FromStr for Frontend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "statistical" => Ok(Frontend::Statistical),
            "waveform" | "waveform-oracle" => Ok(Frontend::Waveform),
            _ => Err(format!("unknown front-end {s:?}")),
        }
    }
}

/// Error law of the statistical front-end.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    /// Von Mises errors with the concentration calibrated on the waveform oracle.
    #[default]
    CalibratedVonMises,
    /// Gaussian errors with variance `1 / snr`, detected with `kappa = snr`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetConfig {
    /// Uniform alphabet of this size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Explicit increments in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increments_deg: Option<Vec<f64>>,
}

impl Default for AlphabetConfig {
    fn default() -> Self {
        AlphabetConfig { size: Some(16), increments_deg: None }
    }
}

impl AlphabetConfig {
    pub fn len(&self) -> usize {
        match (&self.size, &self.increments_deg) {
            (_, Some(v)) => v.len(),
            (Some(n), None) => *n,
            (None, None) => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn build(&self, geom: &Geometry) -> Result<Alphabet> {
        Ok(match &self.increments_deg {
            Some(v) => Alphabet::new(
                v.iter().map(|d| WrappedAngle::wrapped(d.to_radians())).collect(),
                geom,
                v.len().is_power_of_two(),
            )?,
            None => build_uniform_alphabet(self.len(), geom)?,
        })
    }
}

/// LO-based benchmark receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherentConfig {
    pub enabled: bool,
    /// Gain of the first-order data-aided phase tracker.
    pub tracker_gain: f64,
}

impl Default for CoherentConfig {
    fn default() -> Self {
        CoherentConfig { enabled: true, tracker_gain: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    #[serde(default)]
    pub channel: Channel,
    #[serde(default)]
    pub waveform: Waveform,
    #[serde(default)]
    pub alphabet: AlphabetConfig,
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    #[serde(default)]
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub phase_noise_grid_deg: Vec<f64>,
    /// Trials per sweep point; the cap when adaptive stopping is active.
    pub trials: u64,
    /// Adaptive stopping threshold on symbol errors.
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub frontend: Frontend,
    #[serde(default)]
    pub error_model: ErrorModel,
    #[serde(default = "default_probes")]
    pub calibration_probes: usize,
    /// True direction for the estimation modes.
    #[serde(default = "default_doa")]
    pub doa_deg: f64,
    #[serde(default = "default_bins")]
    pub pdf_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub coherent: CoherentConfig,
    /// Scene file for `peb-map`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
}

fn default_geometry() -> Geometry {
    ArrayGeometry::half_wavelength(3).expect("valid default geometry")
}

fn default_min_errors() -> u64 {
    100
}

fn default_batch_size() -> u64 {
    1000
}

fn default_probes() -> usize {
    MIN_PROBES
}

fn default_doa() -> f64 {
    20.0
}

fn default_bins() -> usize {
    201
}

impl ExperimentConfig {
    pub fn from_json(text: &str, what: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| SimError::Parse { what: what.to_string(), source })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Every problem found, each prefixed with the offending field.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut bad = |field: &str, msg: String| issues.push(format!("{field}: {msg}"));

        if self.trials < 1 {
            bad("trials", "must be >= 1".into());
        }
        if self.batch_size < 1 {
            bad("batch_size", "must be >= 1".into());
        }
        if self.min_errors < 1 {
            bad("min_errors", "must be >= 1".into());
        }
        if let Err(e) = self.geometry.validate() {
            bad("geometry", e.to_string());
        }
        if let Err(e) = self.channel.validate() {
            bad("channel", e.to_string());
        }
        if let Err(e) = self.waveform.validate() {
            bad("waveform", e.to_string());
        }

        let needs_snr = self.mode.is_ber() || self.mode == Mode::RmseCrlb;
        if needs_snr && self.snr_grid_db.is_empty() {
            bad("snr_grid_db", format!("must be nonempty for mode {}", self.mode));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            bad("snr_grid_db", "values must be finite".into());
        }
        if matches!(self.mode, Mode::ErrorPdf | Mode::RmseCrlb) {
            if self.m_grid.is_empty() {
                bad("m_grid", format!("must be nonempty for mode {}", self.mode));
            }
            if self.m_grid.iter().any(|&m| m < 2) {
                bad("m_grid", "array sizes must be >= 2".into());
            }
            if !(self.doa_deg.abs() < 90.0) {
                bad("doa_deg", format!("must lie in (-90, 90), got {}", self.doa_deg));
            }
        }
        if self.mode == Mode::BerPhaseNoise && self.phase_noise_grid_deg.is_empty() {
            bad("phase_noise_grid_deg", "must be nonempty for mode ber-phase-noise".into());
        }
        if self.phase_noise_grid_deg.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            bad("phase_noise_grid_deg", "values must be finite and >= 0".into());
        }
        if self.mode == Mode::ErrorPdf && self.pdf_bins < 3 {
            bad("pdf_bins", format!("must be >= 3, got {}", self.pdf_bins));
        }
        if self.mode == Mode::PebMap && self.scene.is_none() {
            bad("scene", "required for mode peb-map".into());
        }

        match (&self.alphabet.size, &self.alphabet.increments_deg) {
            (Some(_), Some(_)) => bad("alphabet", "give either size or increments_deg, not both".into()),
            (None, None) => bad("alphabet", "needs size or increments_deg".into()),
            _ => {}
        }
        let n = self.alphabet.len();
        if n < 2 {
            bad("alphabet", format!("needs at least 2 entries, got {n}"));
        } else if self.mode.is_ber() {
            if !n.is_power_of_two() {
                bad("alphabet", format!("size must be a power of two for bit mapping, got {n}"));
            } else if let Err(e) = self.alphabet.build(&self.geometry) {
                bad("alphabet", e.to_string());
            }
            if self.coherent.enabled && self.alphabet.increments_deg.is_some() {
                bad("coherent.enabled", "the PSK benchmark needs a uniform alphabet (alphabet.size)".into());
            }
        }
        if !(self.coherent.tracker_gain > 0.0 && self.coherent.tracker_gain <= 1.0) {
            bad("coherent.tracker_gain", format!("must lie in (0, 1], got {}", self.coherent.tracker_gain));
        }

        let calibrates = self.error_model == ErrorModel::CalibratedVonMises || self.frontend == Frontend::Waveform;
        if calibrates && self.mode != Mode::PebMap && self.calibration_probes < MIN_PROBES {
            bad(
                "calibration_probes",
                format!("must be >= {MIN_PROBES}, got {}", self.calibration_probes),
            );
        }
        if self.error_model == ErrorModel::Gaussian {
            if self.frontend == Frontend::Waveform {
                bad("error_model", "gaussian applies to the statistical front-end only".into());
            }
            if self.channel.rician_k_db.is_some() || self.channel.residual_phase_std_deg != 0.0 {
                bad(
                    "error_model",
                    "gaussian needs a clean channel (rician_k_db null, residual_phase_std_deg 0)".into(),
                );
            }
        }
        if let Some(g) = self.grid_points {
            let m_max = self.m_grid.iter().copied().chain([self.geometry.num_rx]).max().unwrap_or(2);
            if g < 8 * (m_max.max(2) - 1) {
                bad("grid_points", format!("must be >= 8 (M - 1) = {} for M = {m_max}", 8 * (m_max - 1)));
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config(issues))
        }
    }

    pub fn grid_points_for(&self, num_rx: usize) -> usize {
        self.grid_points.unwrap_or_else(|| default_grid_points(num_rx - 1))
    }
}

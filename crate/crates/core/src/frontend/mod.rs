//! Observation generation: a waveform-level correlator oracle and the fast
//! von Mises statistical model, plus the channel impairments both share.

mod calibrate;
mod channel;
mod geometry;
mod statistical;
mod waveform;

pub use calibrate::{
    calibrate_kappa, kappa_from_resultant, probe_symbol, KappaCalibration, ResultantAccumulator, MIN_PROBES,
};
pub use channel::{ChannelConfig, ChannelRealization};
pub(crate) use geometry::check_sector;
pub use geometry::{doa_phase_increment, ArrayGeometry};
pub use statistical::generate_observation_statistical;
pub use waveform::{
    correlate_quadrature, synthesize_passband, QuadratureCorrelator, WaveformConfig, WaveformOracle,
};

use crate::error::{invalid, Result};
use crate::manifold::ManifoldPoint;
use crate::scalar::Real;

/// Magnitudes at or below `UNRELIABLE_FACTOR * epsilon` mark a baseline as
/// unreliable; fusion then gives it zero weight.
pub const UNRELIABLE_FACTOR: f64 = 10.0;

/// Default normalization guard.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// The `M - 1` normalized baseline phasors `q_m`, `m = 2..M`, of one symbol.
///
/// `None` marks a baseline whose correlator output was too small to project
/// onto the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolObservation<T> {
    pub baselines: Vec<Option<ManifoldPoint<T>>>,
    /// `||z_m||` before normalization.
    pub raw_magnitudes: Vec<T>,
}

impl<T: Real> SymbolObservation<T> {
    /// Noiseless observation with every baseline reliable.
    pub fn from_points(points: Vec<ManifoldPoint<T>>) -> Self {
        let n = points.len();
        SymbolObservation {
            baselines: points.into_iter().map(Some).collect(),
            raw_magnitudes: vec![T::one(); n],
        }
    }

    /// Builds the observation from baseline angles (index 0 is baseline `m = 2`).
    pub fn from_angles(angles: &[T]) -> Self {
        Self::from_points(angles.iter().map(|&a| ManifoldPoint::from_angle(a)).collect())
    }

    pub fn num_baselines(&self) -> usize {
        self.baselines.len()
    }

    pub fn num_rx(&self) -> usize {
        self.baselines.len() + 1
    }

    pub fn reliable_count(&self) -> usize {
        self.baselines.iter().filter(|b| b.is_some()).count()
    }
}

/// Projects each `(z_c, z_s)` correlator pair onto the unit circle.
///
/// The guarded form `z / (||z|| + eps)` is re-projected to exact unit norm
/// whenever `||z|| > 10 eps`, which is the same direction as `z / ||z||`;
/// below that the baseline is flagged unreliable.
pub fn normalize_observation<T: Real>(z_pairs: &[(T, T)], epsilon: T) -> Result<SymbolObservation<T>> {
    if !(epsilon > T::zero()) {
        return Err(invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    let threshold = T::lit(UNRELIABLE_FACTOR) * epsilon;
    let mut baselines = Vec::with_capacity(z_pairs.len());
    let mut raw_magnitudes = Vec::with_capacity(z_pairs.len());
    for &(zc, zs) in z_pairs {
        let mag = zc.hypot(zs);
        raw_magnitudes.push(mag);
        if mag > threshold && mag.is_finite() {
            baselines.push(ManifoldPoint::from_components(zc, zs).ok());
        } else {
            baselines.push(None);
        }
    }
    Ok(SymbolObservation { baselines, raw_magnitudes })
}

use rand::Rng;
use rand_distr::{Distribution, Normal};
use spmc_core::{generate_observation_statistical, Channel, Geometry, Kappa, Observation, WaveformOracle, WrappedAngle};

use crate::config::ErrorModel;
use crate::error::Result;

/// Draws one SPMC observation from the configured front-end.
pub(crate) struct SpmcSymbol<'a> {
    pub geom: &'a Geometry,
    pub ch: &'a Channel,
    pub kappas: &'a [Kappa],
    pub model: ErrorModel,
}

impl SpmcSymbol<'_> {
    pub fn observe<R: Rng + ?Sized>(
        &self,
        dtheta: WrappedAngle<f64>,
        oracle: Option<&WaveformOracle<f64>>,
        rng: &mut R,
    ) -> Result<Observation> {
        Ok(match (oracle, self.model) {
            (Some(o), _) => o.observe(self.ch, dtheta, rng)?,
            (None, ErrorModel::CalibratedVonMises) => {
                generate_observation_statistical(self.geom, self.ch, dtheta, self.kappas, rng)?
            }
            (None, ErrorModel::Gaussian) => gaussian_observation(dtheta, self.kappas, rng),
        })
    }
}

/// `angle_m = wrap((m - 1) dtheta + e_m)`, `e_m ~ N(0, 1 / kappa_m)`.
fn gaussian_observation<R: Rng + ?Sized>(dtheta: WrappedAngle<f64>, kappas: &[Kappa], rng: &mut R) -> Observation {
    let angles: Vec<f64> = kappas
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let e = Normal::new(0.0, 1.0 / k.value().sqrt()).map(|n| n.sample(rng)).unwrap_or(0.0);
            WrappedAngle::wrapped((i + 1) as f64 * dtheta.value() + e).value()
        })
        .collect();
    Observation::from_angles(&angles)
}

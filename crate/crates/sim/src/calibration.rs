use std::collections::BTreeMap;

use spmc_core::frontend::{probe_symbol, ResultantAccumulator};
use spmc_core::{ArrayGeometry, Channel, KappaCalibration, WaveformOracle};

use crate::config::{ErrorModel, ExperimentConfig, Frontend};
use crate::error::Result;
use crate::runner::{run_batches, substream, Domain};

const PROBE_BATCH: u64 = 500;

/// Concentration per SNR, calibrated once per run.
///
/// The pooled baseline error law does not depend on the array size, so the
/// oracle runs a two-element array with the configured spacing and waveform.
pub struct KappaTable {
    oracle: WaveformOracle<f64>,
    seed: u64,
    probes: usize,
    model: ErrorModel,
    cache: BTreeMap<u64, KappaCalibration<f64>>,
}

impl KappaTable {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let geom = ArrayGeometry::new(2, cfg.geometry.spacing_over_lambda, cfg.geometry.carrier_hz)?;
        // the waveform front-end is always paired with calibrated concentrations
        let model = match cfg.frontend {
            Frontend::Waveform => ErrorModel::CalibratedVonMises,
            Frontend::Statistical => cfg.error_model,
        };
        Ok(KappaTable {
            oracle: WaveformOracle::new(geom, cfg.waveform)?,
            seed: cfg.seed,
            probes: cfg.calibration_probes,
            model,
            cache: BTreeMap::new(),
        })
    }

    pub fn kappa(&mut self, snr_db: f64) -> Result<KappaCalibration<f64>> {
        if let Some(k) = self.cache.get(&snr_db.to_bits()) {
            return Ok(*k);
        }
        let k = match self.model {
            ErrorModel::Gaussian => gaussian_kappa(snr_db)?,
            ErrorModel::CalibratedVonMises => self.calibrate(snr_db)?,
        };
        self.cache.insert(snr_db.to_bits(), k);
        Ok(k)
    }

    fn calibrate(&self, snr_db: f64) -> Result<KappaCalibration<f64>> {
        let ch = Channel::clean(snr_db);
        let point = stream_point(snr_db);
        let acc: ResultantAccumulator = run_batches(
            self.probes as u64,
            PROBE_BATCH,
            |_| false,
            |b, n| {
                let mut rng = substream(self.seed, Domain::Calibration, point, b);
                let mut acc = ResultantAccumulator::default();
                for _ in 0..n {
                    probe_symbol(&self.oracle, &ch, &mut rng, &mut acc)?;
                }
                Ok(acc)
            },
        )?;
        Ok(acc.calibration()?)
    }
}

fn gaussian_kappa(snr_db: f64) -> Result<KappaCalibration<f64>> {
    let snr = Channel::clean(snr_db).snr_linear();
    Ok(KappaCalibration {
        kappa: spmc_core::Concentration::new(snr)?,
        saturated: false,
        resultant_length: (-0.5 / snr).exp(),
        probes: 0,
    })
}

/// Calibration streams are keyed by SNR in milli-dB, so every mode sees the
/// same concentration at the same SNR.
fn stream_point(snr_db: f64) -> u32 {
    let milli = (snr_db * 1000.0).round() as i64 + (1 << 23);
    (milli.clamp(0, (1 << 24) - 1)) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_points_are_distinct_and_in_range() {
        assert_ne!(stream_point(10.0), stream_point(10.5));
        assert!(stream_point(1e9) < 1 << 24);
        assert_eq!(stream_point(-1e9), 0);
    }

    #[test]
    fn gaussian_kappa_is_snr() {
        let k = gaussian_kappa(10.0).unwrap();
        assert!((k.kappa.value() - 10.0).abs() < 1e-12);
    }
}

use rand::Rng;

use crate::error::{invalid, Result};
use crate::manifold::{Concentration, WrappedAngle};
use crate::scalar::Real;
use crate::special::rho_inverse;

use super::channel::ChannelConfig;
use super::waveform::WaveformOracle;

/// Smallest probe count accepted by [`calibrate_kappa`].
pub const MIN_PROBES: usize = 10_000;

/// Concentration fitted to a batch of angle errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaCalibration<T> {
    pub kappa: Concentration<T>,
    /// The resultant length sat at or above `1 - 1e-12`; `kappa` is the cap.
    pub saturated: bool,
    pub resultant_length: T,
    pub probes: usize,
}

/// Running sum of unit phasors of angle errors. Mergeable, so batches can be
/// accumulated on separate workers and combined in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResultantAccumulator {
    pub sum_cos: f64,
    pub sum_sin: f64,
    pub count: u64,
}

impl ResultantAccumulator {
    pub fn push(&mut self, err: f64) {
        self.sum_cos += err.cos();
        self.sum_sin += err.sin();
        self.count += 1;
    }

    /// An error with no usable phase: counts toward the total, adds nothing.
    pub fn push_missing(&mut self) {
        self.count += 1;
    }

    pub fn merge(&mut self, other: &ResultantAccumulator) {
        self.sum_cos += other.sum_cos;
        self.sum_sin += other.sum_sin;
        self.count += other.count;
    }

    pub fn resultant_length(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.sum_cos.hypot(self.sum_sin) / self.count as f64).min(1.0)
    }

    /// `1 - R`.
    pub fn circular_variance(&self) -> f64 {
        1.0 - self.resultant_length()
    }

    pub fn calibration<T: Real>(&self) -> Result<KappaCalibration<T>> {
        let mut c = kappa_from_resultant(T::lit(self.resultant_length()))?;
        c.probes = self.count as usize;
        Ok(c)
    }
}

/// `kappa = rho^{-1}(R)` with saturation at the concentration cap.
pub fn kappa_from_resultant<T: Real>(resultant_length: T) -> Result<KappaCalibration<T>> {
    let (k, saturated) = rho_inverse(resultant_length)?;
    Ok(KappaCalibration { kappa: Concentration::new(k)?, saturated, resultant_length, probes: 0 })
}

/// Runs the waveform oracle on a line-of-sight channel at `snr_db` with a
/// uniformly drawn increment per probe symbol, and fits one concentration to
/// the pooled baseline errors `wrap(angle_m - (m - 1) delta_theta)`.
pub fn calibrate_kappa<T: Real, R: Rng + ?Sized>(
    oracle: &WaveformOracle<T>,
    snr_db: T,
    num_probe: usize,
    rng: &mut R,
) -> Result<KappaCalibration<T>> {
    if num_probe < MIN_PROBES {
        return Err(invalid(format!("calibration needs at least {MIN_PROBES} probes, got {num_probe}")));
    }
    let cfg = ChannelConfig::clean(snr_db);
    let mut acc = ResultantAccumulator::default();
    for _ in 0..num_probe {
        probe_symbol(oracle, &cfg, rng, &mut acc)?;
    }
    acc.calibration()
}

/// One calibration probe: draws an increment, observes it and accumulates
/// every baseline error.
pub fn probe_symbol<T: Real, R: Rng + ?Sized>(
    oracle: &WaveformOracle<T>,
    cfg: &ChannelConfig<T>,
    rng: &mut R,
    acc: &mut ResultantAccumulator,
) -> Result<()> {
    let u: f64 = rng.random();
    let dtheta = WrappedAngle::wrapped(T::lit(std::f64::consts::PI * (2.0 * u - 1.0)));
    let obs = oracle.observe(cfg, dtheta, rng)?;
    for (i, b) in obs.baselines.iter().enumerate() {
        match b {
            Some(p) => {
                let expected = T::from_usize_lossy(i + 1) * dtheta.value();
                acc.push(p.angle().distance(WrappedAngle::wrapped(expected)).as_f64());
            }
            None => acc.push_missing(),
        }
    }
    Ok(())
}

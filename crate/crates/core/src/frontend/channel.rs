use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::scalar::Real;

use super::waveform::WaveformConfig;

/// Impairment settings shared by both front-ends.
///
/// `snr_db` is the per-baseline post-correlation observable SNR,
/// `(A1 Am / 2)^2 / Var(n_c)` at unit amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ChannelConfig<T> {
    pub snr_db: T,
    /// LOS-to-diffuse power ratio. `None` is a pure line-of-sight channel.
    pub rician_k_db: Option<T>,
    /// Std of the common transmitter phase walk `psi`, per symbol.
    pub phase_noise_std_deg: T,
    /// Per-antenna receiver gain std.
    pub agc_jitter_db: T,
    /// Std of the per-symbol disturbance `nu_k` on the phase increment.
    pub residual_phase_std_deg: T,
}

impl<T: Real> Default for ChannelConfig<T> {
    fn default() -> Self {
        ChannelConfig {
            snr_db: T::lit(20.0),
            rician_k_db: Some(T::lit(10.0)),
            phase_noise_std_deg: T::zero(),
            agc_jitter_db: T::zero(),
            residual_phase_std_deg: T::zero(),
        }
    }
}

impl<T: Real> ChannelConfig<T> {
    /// Line-of-sight, no jitter, no residual disturbance.
    pub fn clean(snr_db: T) -> Self {
        ChannelConfig { snr_db, rician_k_db: None, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() {
            return Err(invalid("snr_db is NaN"));
        }
        for (name, v) in [
            ("phase_noise_std_deg", self.phase_noise_std_deg),
            ("agc_jitter_db", self.agc_jitter_db),
            ("residual_phase_std_deg", self.residual_phase_std_deg),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(invalid(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        if let Some(k) = self.rician_k_db {
            if !k.is_finite() {
                return Err(invalid(format!("rician_k_db must be finite, got {k}")));
            }
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> T {
        T::lit(10.0).powf(self.snr_db / T::lit(10.0))
    }

    pub fn rician_k_linear(&self) -> Option<T> {
        self.rician_k_db.map(|k| T::lit(10.0).powf(k / T::lit(10.0)))
    }

    /// Diffuse scatter folded into a phase perturbation, `sqrt(1 / (2K))` rad.
    pub fn rician_phase_std(&self) -> T {
        match self.rician_k_linear() {
            Some(k) => (T::one() / (T::lit(2.0) * k)).sqrt(),
            None => T::zero(),
        }
    }

    /// Total std of `nu_k` in radians.
    pub fn nu_std(&self) -> T {
        let res = self.residual_phase_std_deg.to_radians();
        res.hypot(self.rician_phase_std())
    }

    pub fn phase_noise_std_rad(&self) -> T {
        self.phase_noise_std_deg.to_radians()
    }
}

/// One symbol's draw of every impairment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    /// Pre-noise amplitudes `A_m` (unit LOS times the common Rician envelope).
    pub amplitudes: Vec<T>,
    /// Post-noise receiver gains (AGC), applied to signal and noise alike.
    pub agc_gains: Vec<T>,
    /// Common phase noise `psi[n]` per sample. Empty means `psi = 0`.
    pub phase_trajectory: Vec<T>,
    /// `nu_k`, added to the per-element phase increment.
    pub residual_phase: T,
    /// Std of the white receiver noise per sample and antenna.
    pub noise_std: T,
}

impl<T: Real> ChannelRealization<T> {
    /// Unit amplitudes, no noise of any kind.
    pub fn ideal(num_rx: usize) -> Self {
        ChannelRealization {
            amplitudes: vec![T::one(); num_rx],
            agc_gains: vec![T::one(); num_rx],
            phase_trajectory: Vec::new(),
            residual_phase: T::zero(),
            noise_std: T::zero(),
        }
    }

    /// Draws impairments for one waveform-oracle symbol.
    pub fn draw<R: Rng + ?Sized>(
        cfg: &ChannelConfig<T>,
        wf: &WaveformConfig<T>,
        num_rx: usize,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let (residual_phase, amplitudes, agc_gains) = draw_impairments(cfg, num_rx, rng);
        let phase_trajectory = phase_walk(wf.samples_per_symbol(), cfg.phase_noise_std_rad(), rng);
        Ok(ChannelRealization {
            amplitudes,
            agc_gains,
            phase_trajectory,
            residual_phase,
            noise_std: wf.noise_std_for_snr(cfg.snr_db),
        })
    }

    pub fn num_rx(&self) -> usize {
        self.amplitudes.len()
    }
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

/// `(nu_k, A_m, AGC gains)` in a fixed draw order.
pub(crate) fn draw_impairments<T: Real, R: Rng + ?Sized>(
    cfg: &ChannelConfig<T>,
    num_rx: usize,
    rng: &mut R,
) -> (T, Vec<T>, Vec<T>) {
    let nu = cfg.nu_std() * normal::<T, _>(rng);
    let envelope = match cfg.rician_k_linear() {
        Some(k) => {
            let los = (k / (k + T::one())).sqrt();
            let diffuse = (T::one() / (T::lit(2.0) * (k + T::one()))).sqrt();
            let re = los + diffuse * normal::<T, _>(rng);
            let im = diffuse * normal::<T, _>(rng);
            re.hypot(im)
        }
        None => T::one(),
    };
    let jitter = cfg.agc_jitter_db;
    let gains = (0..num_rx)
        .map(|_| {
            if jitter > T::zero() {
                T::lit(10.0).powf(jitter * normal::<T, _>(rng) / T::lit(20.0))
            } else {
                T::one()
            }
        })
        .collect();
    (nu, vec![envelope; num_rx], gains)
}

/// Random walk over `n` samples with total std `std_per_symbol` across the
/// symbol, started from a uniform absolute phase.
pub(crate) fn phase_walk<T: Real, R: Rng + ?Sized>(n: usize, std_per_symbol: T, rng: &mut R) -> Vec<T> {
    let u: f64 = rng.random();
    let mut psi = T::lit(std::f64::consts::PI * (2.0 * u - 1.0));
    let step = std_per_symbol / T::from_usize_lossy(n.max(1)).sqrt();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(psi);
        if step > T::zero() {
            psi = psi + step * normal::<T, _>(rng);
        }
    }
    out
}

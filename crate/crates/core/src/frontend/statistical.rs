use rand::Rng;

use crate::error::{invalid, Result};
use crate::manifold::{Concentration, ManifoldPoint, WrappedAngle};
use crate::scalar::Real;
use crate::von_mises::sample_von_mises;

use super::channel::{draw_impairments, ChannelConfig};
use super::geometry::ArrayGeometry;
use super::SymbolObservation;

/// Emits the normalized baseline phasors directly:
/// `angle_m = wrap((m - 1)(delta_theta + nu) + eps_m)`, `eps_m ~ VM(0, kappa_m)`.
///
/// Fading and AGC gains only change `raw_magnitudes`. `nu` (residual
/// disturbance plus the Rician phase term) is common to every baseline and
/// scales with the baseline order like the increment it perturbs.
pub fn generate_observation_statistical<T: Real, R: Rng + ?Sized>(
    geom: &ArrayGeometry<T>,
    ch: &ChannelConfig<T>,
    delta_theta: WrappedAngle<T>,
    kappas: &[Concentration<T>],
    rng: &mut R,
) -> Result<SymbolObservation<T>> {
    geom.validate()?;
    ch.validate()?;
    let nb = geom.num_baselines();
    if kappas.len() != nb {
        return Err(invalid(format!("expected {nb} concentrations, got {}", kappas.len())));
    }
    let (nu, amplitudes, gains) = draw_impairments(ch, geom.num_rx, rng);
    let increment = delta_theta.value() + nu;
    let ref_amp = amplitudes[0] * gains[0];
    let mut baselines = Vec::with_capacity(nb);
    let mut raw_magnitudes = Vec::with_capacity(nb);
    for (i, &kappa) in kappas.iter().enumerate() {
        let order = T::from_usize_lossy(i + 1);
        let mean = WrappedAngle::wrapped(order * increment);
        let angle = sample_von_mises(mean, kappa, rng);
        baselines.push(Some(ManifoldPoint::from_angle(angle.value())));
        raw_magnitudes.push(ref_amp * amplitudes[i + 1] * gains[i + 1] / T::lit(2.0));
    }
    Ok(SymbolObservation { baselines, raw_magnitudes })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::special::bessel_ratio_rho;

    fn angles(obs: &SymbolObservation<f64>) -> Vec<f64> {
        obs.baselines.iter().map(|b| b.unwrap().angle().value()).collect()
    }

    #[test]
    fn noiseless_progression() {
        let geom = ArrayGeometry::half_wavelength(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = vec![Concentration::infinite(); 3];
        let obs = generate_observation_statistical(
            &geom,
            &ChannelConfig::clean(20.0),
            WrappedAngle::wrapped(0.3),
            &k,
            &mut rng,
        )
        .unwrap();
        let a = angles(&obs);
        for (m, v) in a.iter().enumerate() {
            assert!((v - 0.3 * (m + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn wrap_boundary() {
        let geom = ArrayGeometry::half_wavelength(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = generate_observation_statistical(
            &geom,
            &ChannelConfig::clean(20.0),
            WrappedAngle::wrapped(PI),
            &[Concentration::infinite()],
            &mut rng,
        )
        .unwrap();
        assert!((angles(&obs)[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn moments_match_rho() {
        let geom = ArrayGeometry::half_wavelength(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = vec![Concentration::new(5.0).unwrap(); 2];
        let ch = ChannelConfig::clean(20.0);
        let n = 1_000_000;
        let mut sums = [[0.0f64; 4]; 2];
        for _ in 0..n {
            let obs = generate_observation_statistical(&geom, &ch, WrappedAngle::wrapped(0.0), &k, &mut rng).unwrap();
            for (m, p) in obs.baselines.iter().enumerate() {
                let p = p.unwrap();
                let s = &mut sums[m];
                s[0] += p.re();
                s[1] += p.im();
                s[2] += p.re() * p.re();
                s[3] += p.im() * p.im();
            }
        }
        let rho = bessel_ratio_rho(5.0).unwrap();
        let nf = n as f64;
        for s in sums {
            let (c, sn) = (s[0] / nf, s[1] / nf);
            let se_c = ((s[2] / nf - c * c) / nf).sqrt();
            let se_s = ((s[3] / nf - sn * sn) / nf).sqrt();
            assert!(sn.abs() < 3.0 * se_s, "mean sin {sn}");
            assert!((c - rho).abs() < 3.0 * se_c, "resultant {c} vs {rho}");
        }
    }

    #[test]
    fn amplitudes_only_touch_magnitudes() {
        let geom = ArrayGeometry::half_wavelength(3).unwrap();
        let k = vec![Concentration::new(50.0).unwrap(); 2];
        let quiet = ChannelConfig::clean(20.0);
        let loud = ChannelConfig { agc_jitter_db: 3.0, ..quiet };
        let a = generate_observation_statistical(&geom, &quiet, WrappedAngle::wrapped(0.4), &k, &mut ChaCha8Rng::seed_from_u64(3))
            .unwrap();
        let b = generate_observation_statistical(&geom, &loud, WrappedAngle::wrapped(0.4), &k, &mut ChaCha8Rng::seed_from_u64(3))
            .unwrap();
        assert_eq!(a.raw_magnitudes, vec![0.5, 0.5]);
        assert_ne!(b.raw_magnitudes, a.raw_magnitudes);
        assert!(generate_observation_statistical(&geom, &quiet, WrappedAngle::wrapped(0.4), &k[..1], &mut ChaCha8Rng::seed_from_u64(3))
            .is_err());
    }
}

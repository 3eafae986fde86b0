//! Waveform-level oracle: sampled passband tones at a normalized carrier,
//! RF multiplication, a Hilbert quadrature branch and boxcar low-pass
//! filtering over the symbol.
//!
//! Time is measured in carrier cycles. Only `d / lambda` and the relative
//! phases matter to the correlator, so nothing runs at the real carrier.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::manifold::WrappedAngle;
use crate::scalar::Real;

use super::channel::{ChannelConfig, ChannelRealization};
use super::geometry::ArrayGeometry;
use super::{normalize_observation, SymbolObservation, DEFAULT_EPSILON};

/// Discretization of one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct WaveformConfig<T> {
    pub cycles_per_symbol: usize,
    pub samples_per_cycle: usize,
    /// Low-pass cutoff relative to the carrier. Sets the settling time that is
    /// discarded at each end of the symbol: `ceil(1 / (4 * fraction))` cycles.
    pub lpf_cutoff_fraction: T,
    /// Support of the quadrature (Hilbert) filter in carrier cycles. Half of
    /// it is also discarded at each end of the symbol.
    pub quadrature_span_cycles: usize,
}

impl<T: Real> Default for WaveformConfig<T> {
    fn default() -> Self {
        WaveformConfig {
            cycles_per_symbol: 64,
            samples_per_cycle: 32,
            lpf_cutoff_fraction: T::lit(0.25),
            quadrature_span_cycles: 4,
        }
    }
}

impl<T: Real> WaveformConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_cycle < 8 {
            return Err(invalid(format!(
                "samples_per_cycle must be >= 8 to resolve the 2 f_c product, got {}",
                self.samples_per_cycle
            )));
        }
        let f = self.lpf_cutoff_fraction;
        if !(f > T::zero() && f < T::lit(0.5)) {
            return Err(invalid(format!("lpf_cutoff_fraction must lie in (0, 0.5), got {f}")));
        }
        if self.quadrature_span_cycles < 2 {
            return Err(invalid(format!(
                "quadrature_span_cycles must be >= 2, got {}",
                self.quadrature_span_cycles
            )));
        }
        if self.cycles_per_symbol <= 2 * self.guard_cycles() {
            return Err(invalid(format!(
                "cycles_per_symbol = {} leaves no samples after discarding {} settling cycles per side",
                self.cycles_per_symbol,
                self.guard_cycles()
            )));
        }
        Ok(())
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.cycles_per_symbol * self.samples_per_cycle
    }

    /// Cycles dropped at each end of the symbol before averaging.
    pub fn guard_cycles(&self) -> usize {
        let lpf = (T::one() / (T::lit(4.0) * self.lpf_cutoff_fraction)).ceil();
        let lpf = lpf.to_usize().unwrap_or(1).max(1);
        lpf.max(self.quadrature_span_cycles.div_ceil(2))
    }

    /// Sample range averaged by the boxcar: whole carrier cycles only.
    pub fn window(&self) -> Range<usize> {
        let g = self.guard_cycles() * self.samples_per_cycle;
        g..self.samples_per_symbol() - g
    }

    pub fn window_len(&self) -> usize {
        let w = self.window();
        w.end - w.start
    }

    /// Per-sample white-noise std giving the requested post-correlation SNR at
    /// unit amplitudes: `Var(n_c) = (sigma^2 + sigma^4) / N_w`.
    pub fn noise_std_for_snr(&self, snr_db: T) -> T {
        let snr = T::lit(10.0).powf(snr_db / T::lit(10.0));
        if snr.is_infinite() {
            return T::zero();
        }
        let nw = T::from_usize_lossy(self.window_len());
        let var = ((T::one() + nw / snr).sqrt() - T::one()) / T::lit(2.0);
        var.sqrt()
    }
}

/// Samples `r_m[n] = g_m (A_m cos(2 pi n / S + psi[n] + alpha_m) + w_m[n])`
/// for every antenna, with `alpha_m = (m - 1)(delta_theta + nu)`.
pub fn synthesize_passband<T: Real, R: Rng + ?Sized>(
    geom: &ArrayGeometry<T>,
    wf: &WaveformConfig<T>,
    ch: &ChannelRealization<T>,
    delta_theta: WrappedAngle<T>,
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    geom.validate()?;
    wf.validate()?;
    let m_count = geom.num_rx;
    let n = wf.samples_per_symbol();
    if ch.amplitudes.len() != m_count || ch.agc_gains.len() != m_count {
        return Err(invalid(format!(
            "channel realization has {} amplitudes / {} gains for a {m_count}-element array",
            ch.amplitudes.len(),
            ch.agc_gains.len()
        )));
    }
    if !ch.phase_trajectory.is_empty() && ch.phase_trajectory.len() != n {
        return Err(invalid(format!(
            "phase trajectory has {} samples, symbol has {n}",
            ch.phase_trajectory.len()
        )));
    }
    let s = wf.samples_per_cycle;
    let step = T::two_pi() / T::from_usize_lossy(s);
    let increment = delta_theta.value() + ch.residual_phase;
    let noisy = ch.noise_std > T::zero();
    let traj = &ch.phase_trajectory;
    let constant_phase = match traj.first() {
        None => Some(T::zero()),
        Some(&p0) if traj.iter().all(|&p| p == p0) => Some(p0),
        Some(_) => None,
    };

    let mut streams = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let alpha = T::from_usize_lossy(m) * increment;
        let (amp, gain) = (ch.amplitudes[m], ch.agc_gains[m]);
        // with a constant phase the tone repeats every cycle
        let cycle: Vec<T> = match constant_phase {
            Some(psi) => (0..s).map(|i| amp * (step * T::from_usize_lossy(i) + psi + alpha).cos()).collect(),
            None => Vec::new(),
        };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = match constant_phase {
                Some(_) => cycle[i % s],
                // reduce the carrier index first so long symbols keep full precision
                None => amp * (step * T::from_usize_lossy(i % s) + ch.phase_trajectory[i] + alpha).cos(),
            };
            if noisy {
                let z: f64 = StandardNormal.sample(rng);
                v = v + ch.noise_std * T::lit(z);
            }
            out.push(gain * v);
        }
        streams.push(out);
    }
    Ok(streams)
}

/// In-phase / quadrature correlator for one symbol length.
///
/// The quadrature branch is a zero-phase FIR Hilbert transformer
/// (Blackman-windowed `2 / (pi k)` taps, odd `k` only) scaled to unit gain
/// at the carrier. It turns `cos(2 pi f_c t + phase)` into
/// `sin(2 pi f_c t + phase)` for any slowly varying `phase`, so a common
/// phase walk enters both correlator inputs at the same instant and drops out
/// of the product. Only samples whose filter support lies inside the symbol
/// are used.
#[derive(Debug, Clone)]
pub struct QuadratureCorrelator<T> {
    len: usize,
    window: Range<usize>,
    /// `(k, h_k)` for odd `k > 0`; `h_{-k} = -h_k`.
    taps: Vec<(usize, T)>,
}

impl<T: Real> QuadratureCorrelator<T> {
    pub fn new(wf: &WaveformConfig<T>) -> Result<Self> {
        wf.validate()?;
        let half = wf.quadrature_span_cycles * wf.samples_per_cycle / 2;
        let span = (2 * half) as f64;
        let w0 = std::f64::consts::TAU / wf.samples_per_cycle as f64;
        let mut taps: Vec<(usize, f64)> = (1..=half)
            .step_by(2)
            .map(|k| {
                let x = std::f64::consts::TAU * (k + half) as f64 / span;
                let blackman = 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos();
                (k, 2.0 / (std::f64::consts::PI * k as f64) * blackman)
            })
            .collect();
        // H(w0) = -2j sum_k h_k sin(k w0) must equal -j
        let gain: f64 = taps.iter().map(|&(k, h)| 2.0 * h * (k as f64 * w0).sin()).sum();
        for t in &mut taps {
            t.1 /= gain;
        }
        Ok(QuadratureCorrelator {
            len: wf.samples_per_symbol(),
            window: wf.window(),
            taps: taps.into_iter().map(|(k, h)| (k, T::lit(h))).collect(),
        })
    }

    /// Quadrature sample `sum_k h_k (x[n - k] - x[n + k])`. `n` must be at
    /// least the filter half-span away from both ends.
    #[inline]
    pub fn quadrature_at(&self, x: &[T], n: usize) -> T {
        let mut acc = T::zero();
        for &(k, h) in &self.taps {
            acc = acc + h * (x[n - k] - x[n + k]);
        }
        acc
    }

    /// Quadrature branch over the averaging window (index 0 is the window start).
    pub fn hilbert_window(&self, x: &[T]) -> Vec<T> {
        self.window.clone().map(|n| self.quadrature_at(x, n)).collect()
    }

    pub fn window(&self) -> Range<usize> {
        self.window.clone()
    }

    /// Returns `(z_c, z_s) = (LPF{r_1 r_m}, LPF{r_1 H{r_m}})`.
    pub fn correlate(&self, wave_1: &[T], wave_m: &[T]) -> Result<(T, T)> {
        if wave_1.len() != wave_m.len() {
            return Err(invalid(format!(
                "correlator inputs differ in length: {} vs {}",
                wave_1.len(),
                wave_m.len()
            )));
        }
        if wave_1.len() != self.len {
            return Err(invalid(format!(
                "correlator built for {} samples, got {}",
                self.len,
                wave_1.len()
            )));
        }
        let (mut zc, mut zs) = (T::zero(), T::zero());
        for n in self.window.clone() {
            zc = zc + wave_1[n] * wave_m[n];
            zs = zs + wave_1[n] * self.quadrature_at(wave_m, n);
        }
        let inv = T::one() / T::from_usize_lossy(self.window.len());
        Ok((zc * inv, zs * inv))
    }
}

/// One-shot form of [`QuadratureCorrelator::correlate`].
pub fn correlate_quadrature<T: Real>(
    wave_1: &[T],
    wave_m: &[T],
    wf: &WaveformConfig<T>,
) -> Result<(T, T)> {
    if wave_1.len() != wave_m.len() {
        return Err(invalid(format!(
            "correlator inputs differ in length: {} vs {}",
            wave_1.len(),
            wave_m.len()
        )));
    }
    QuadratureCorrelator::new(wf)?.correlate(wave_1, wave_m)
}

/// Geometry, discretization and a correlator bundled for repeated use.
#[derive(Debug, Clone)]
pub struct WaveformOracle<T> {
    pub geometry: ArrayGeometry<T>,
    pub waveform: WaveformConfig<T>,
    pub epsilon: T,
    correlator: QuadratureCorrelator<T>,
}

impl<T: Real> WaveformOracle<T> {
    pub fn new(geometry: ArrayGeometry<T>, waveform: WaveformConfig<T>) -> Result<Self> {
        geometry.validate()?;
        let correlator = QuadratureCorrelator::new(&waveform)?;
        Ok(WaveformOracle { geometry, waveform, epsilon: T::lit(DEFAULT_EPSILON), correlator })
    }

    pub fn correlator(&self) -> &QuadratureCorrelator<T> {
        &self.correlator
    }

    /// Correlator outputs `(z_c, z_s)` for baselines `m = 2..M`.
    pub fn correlate_all(&self, streams: &[Vec<T>]) -> Result<Vec<(T, T)>> {
        let (first, rest) = streams
            .split_first()
            .ok_or_else(|| invalid("no antenna streams"))?;
        rest.iter().map(|w| self.correlator.correlate(first, w)).collect()
    }

    /// Full chain for a given channel realization.
    pub fn observe_realization<R: Rng + ?Sized>(
        &self,
        ch: &ChannelRealization<T>,
        delta_theta: WrappedAngle<T>,
        rng: &mut R,
    ) -> Result<SymbolObservation<T>> {
        let streams = synthesize_passband(&self.geometry, &self.waveform, ch, delta_theta, rng)?;
        let pairs = self.correlate_all(&streams)?;
        normalize_observation(&pairs, self.epsilon)
    }

    /// Draws a channel realization and runs the full chain.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        cfg: &ChannelConfig<T>,
        delta_theta: WrappedAngle<T>,
        rng: &mut R,
    ) -> Result<SymbolObservation<T>> {
        let ch = ChannelRealization::draw(cfg, &self.waveform, self.geometry.num_rx, rng)?;
        self.observe_realization(&ch, delta_theta, rng)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn wf() -> WaveformConfig<f64> {
        WaveformConfig::default()
    }

    fn tones(dtheta: f64, m: usize) -> Vec<Vec<f64>> {
        let geom = ArrayGeometry::half_wavelength(m).unwrap();
        let ch = ChannelRealization::ideal(m);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        synthesize_passband(&geom, &wf(), &ch, WrappedAngle::wrapped(dtheta), &mut rng).unwrap()
    }

    #[test]
    fn zero_increment_gives_identical_streams() {
        let s = tones(0.0, 4);
        for m in 1..4 {
            assert_eq!(s[0], s[m]);
        }
    }

    #[test]
    fn quarter_cycle_offset() {
        // alpha_2 = pi/2 advances stream 2 by S/4 samples: r_2[n] = r_1[n + S/4]
        let s = tones(PI / 2.0, 2);
        let q = wf().samples_per_cycle / 4;
        for n in 0..s[0].len() - q {
            assert!((s[1][n] - s[0][n + q]).abs() < 1e-12);
        }
    }

    #[test]
    fn tone_power() {
        let cfg = WaveformConfig { cycles_per_symbol: 10_000, samples_per_cycle: 16, ..WaveformConfig::default() };
        let geom = ArrayGeometry::half_wavelength(2).unwrap();
        let mut ch = ChannelRealization::ideal(2);
        ch.amplitudes = vec![1.7, 0.6];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = synthesize_passband(&geom, &cfg, &ch, WrappedAngle::wrapped(0.4), &mut rng).unwrap();
        for (m, a) in [1.7f64, 0.6].iter().enumerate() {
            let ms = s[m].iter().map(|v| v * v).sum::<f64>() / s[m].len() as f64;
            assert!((ms - a * a / 2.0).abs() / (a * a / 2.0) < 0.01);
        }
    }

    /// Direct product-and-average of two synthetic tones with an explicit
    /// `sin` for the quadrature input.
    fn direct_products(dtheta: f64) -> (f64, f64) {
        let w = wf();
        let s = w.samples_per_cycle as f64;
        let (mut c, mut q) = (0.0, 0.0);
        let win = w.window();
        for n in win.clone() {
            let x = 2.0 * PI * n as f64 / s;
            c += x.cos() * (x + dtheta).cos();
            q += x.cos() * (x + dtheta).sin();
        }
        let k = win.len() as f64;
        (c / k, q / k)
    }

    #[test]
    fn correlator_examples() {
        for (dtheta, want) in [
            (0.0, (0.5, 0.0)),
            (PI / 2.0, (0.0, 0.5)),
            (PI / 3.0, (0.25, 0.4330127019)),
        ] {
            let s = tones(dtheta, 2);
            let (zc, zs) = correlate_quadrature(&s[0], &s[1], &wf()).unwrap();
            assert!((zc - want.0).abs() < 1e-3 && (zs - want.1).abs() < 1e-3, "{dtheta}: {zc} {zs}");
            let (dc, ds) = direct_products(dtheta);
            assert!((zc - dc).abs() < 1e-9 && (zs - ds).abs() < 1e-9);
        }
    }

    #[test]
    fn quadrature_branch_of_a_tone_is_its_sine() {
        let w = wf();
        let c = QuadratureCorrelator::new(&w).unwrap();
        let s = w.samples_per_cycle as f64;
        let x: Vec<f64> = (0..w.samples_per_symbol()).map(|n| (2.0 * PI * n as f64 / s + 0.3).cos()).collect();
        for (i, h) in c.hilbert_window(&x).iter().enumerate() {
            let n = w.window().start + i;
            assert!((h - (2.0 * PI * n as f64 / s + 0.3).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn correlator_rejects_mismatched_lengths() {
        let s = tones(0.1, 2);
        assert!(correlate_quadrature(&s[0], &s[1][1..], &wf()).is_err());
    }

    #[test]
    fn noise_std_hits_target_snr() {
        let w = wf();
        let sigma = w.noise_std_for_snr(10.0);
        let nw = w.window_len() as f64;
        let var = (sigma.powi(2) + sigma.powi(4)) / nw;
        assert!((0.25 / var - 10.0).abs() < 1e-9);
        assert_eq!(w.noise_std_for_snr(f64::INFINITY), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut w = wf();
        w.samples_per_cycle = 4;
        assert!(w.validate().is_err());
        let mut w = wf();
        w.lpf_cutoff_fraction = 0.5;
        assert!(w.validate().is_err());
        let mut w = wf();
        w.cycles_per_symbol = 2;
        assert!(w.validate().is_err());
        assert_eq!(wf().guard_cycles(), 2);
        assert_eq!(wf().window(), 64..1984);
        let mut w = wf();
        w.quadrature_span_cycles = 1;
        assert!(w.validate().is_err());
    }
}

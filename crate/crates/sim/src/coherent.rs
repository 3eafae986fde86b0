//! LO-based coherent benchmark: Gray-mapped PSK, maximal-ratio combining
//! with perfect channel knowledge, and a first-order data-aided tracker for
//! the common LO phase walk.
//!
//! A causal tracker cannot see the current symbol's phase step, so its
//! residual error is at least `sigma_phi` per symbol. With gain `g` the
//! steady-state residual of the walk alone is `sigma_phi / sqrt(g (2 - g))`.
//! Absolute curves are therefore model dependent.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use spmc_core::{q_function, GrayMap};

use crate::ber::ErrorCounts;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLink {
    pub psk_order: usize,
    pub num_rx: usize,
    /// Per-antenna, per-component noise std of the matched-filter output at
    /// unit amplitude.
    pub noise_std: f64,
    pub phase_noise_std_rad: f64,
    pub tracker_gain: f64,
    pub rician_k: Option<f64>,
}

impl CoherentLink {
    /// `Es/N0` of the combined symbol at unit envelope.
    pub fn es_n0(&self) -> f64 {
        self.num_rx as f64 / (2.0 * self.noise_std * self.noise_std)
    }

    fn tracking(&self) -> bool {
        self.phase_noise_std_rad > 0.0
    }

    /// Runs `n` counted symbols after a pilot burn-in that lets the tracker
    /// settle. Without phase noise the LO phase is static and known.
    pub fn run<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<ErrorCounts> {
        let gray = GrayMap::new(self.psk_order)?;
        let order = self.psk_order as u32;
        let step = 2.0 * PI / self.psk_order as f64;
        let burn = if self.tracking() { (10.0 / self.tracker_gain).ceil() as u64 } else { 0 };
        let combined_noise = (self.num_rx as f64).sqrt() * self.noise_std;
        let mut psi = 0.0;
        let mut psi_hat = 0.0;
        let mut counts = ErrorCounts::default();
        for k in 0..burn + n {
            let word = rng.random_range(0..order);
            let sent = gray.index(word);
            let theta = step * sent as f64;
            if self.tracking() {
                let w: f64 = StandardNormal.sample(rng);
                psi = wrap(psi + self.phase_noise_std_rad * w);
            }
            let amp = self.num_rx as f64 * self.envelope(rng);
            let (nr, ni): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
            let re = amp * (theta + psi).cos() + combined_noise * nr;
            let im = amp * (theta + psi).sin() + combined_noise * ni;
            let est = im.atan2(re) - psi_hat;
            let detected = ((est / step).round() as i64).rem_euclid(self.psk_order as i64) as usize;
            if self.tracking() {
                psi_hat = wrap(psi_hat + self.tracker_gain * wrap(est - theta));
            }
            if k >= burn {
                counts.record(sent, detected, &gray);
            }
        }
        Ok(counts)
    }

    fn envelope<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.rician_k {
            Some(k) => {
                let los = (k / (k + 1.0)).sqrt();
                let diffuse = (0.5 / (k + 1.0)).sqrt();
                let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
                (los + diffuse * a).hypot(diffuse * b)
            }
            None => 1.0,
        }
    }
}

fn wrap(x: f64) -> f64 {
    spmc_core::WrappedAngle::wrapped(x).value()
}

/// Exact `n`-PSK symbol error rate on AWGN:
/// `(1/pi) int_0^{(n-1) pi/n} exp(-es_n0 sin^2(pi/n) / sin^2 t) dt`.
pub fn psk_ser_awgn(n: usize, es_n0: f64) -> f64 {
    if n == 2 {
        return q_function((2.0 * es_n0).sqrt()).expect("finite argument");
    }
    let s = (PI / n as f64).sin().powi(2);
    let upper = PI * (n - 1) as f64 / n as f64;
    let f = |t: f64| {
        let st = t.sin();
        if st == 0.0 {
            0.0
        } else {
            (-es_n0 * s / (st * st)).exp()
        }
    };
    // composite Simpson; the integrand is smooth and flat near t = 0
    let panels = 4000;
    let h = upper / panels as f64;
    let mut acc = f(0.0) + f(upper);
    for i in 1..panels {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0 / PI
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn q(x: f64) -> f64 {
        q_function(x).unwrap()
    }

    #[test]
    fn qpsk_closed_form() {
        for g in [1.0f64, 4.0, 10.0, 30.0] {
            let p = q(g.sqrt());
            let want = 2.0 * p - p * p;
            assert!((psk_ser_awgn(4, g) - want).abs() < 1e-10 * want.max(1e-300), "{g}");
        }
    }

    #[test]
    fn large_order_high_snr_approximation() {
        let g: f64 = 400.0;
        let approx = 2.0 * q((2.0 * g).sqrt() * (PI / 16.0).sin());
        assert!((psk_ser_awgn(16, g) / approx - 1.0).abs() < 0.02);
    }

    #[test]
    fn no_phase_noise_matches_awgn_theory() {
        let link = CoherentLink {
            psk_order: 16,
            num_rx: 3,
            noise_std: 0.15,
            phase_noise_std_rad: 0.0,
            tracker_gain: 0.1,
            rician_k: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = link.run(200_000, &mut rng).unwrap();
        let ser = c.symbol_errors as f64 / c.symbols as f64;
        let want = psk_ser_awgn(16, link.es_n0());
        assert!((ser / want - 1.0).abs() < 0.05, "{ser} vs {want}");
        // Gray mapping: almost every symbol error costs one bit
        assert!(c.bit_errors as f64 / (c.symbol_errors as f64) < 1.05);
    }

    #[test]
    fn tracker_residual_matches_loop_formula() {
        // noise-free: every error comes from the walk residual
        let sigma = 3f64.to_radians();
        let g = 0.1;
        let link = CoherentLink {
            psk_order: 16,
            num_rx: 1,
            noise_std: 1e-9,
            phase_noise_std_rad: sigma,
            tracker_gain: g,
            rician_k: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = link.run(400_000, &mut rng).unwrap();
        let ser = c.symbol_errors as f64 / c.symbols as f64;
        let resid = sigma / (g * (2.0 - g)).sqrt();
        let want = 2.0 * q(PI / 16.0 / resid);
        assert!((ser / want - 1.0).abs() < 0.1, "{ser} vs {want}");
    }
}

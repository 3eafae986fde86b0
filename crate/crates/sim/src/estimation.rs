use std::f64::consts::FRAC_PI_2;

use spmc_core::{crlb_doa, doa_phase_increment, fuse_ml, ArrayGeometry, Channel, Geometry, WaveformOracle, WrappedAngle};

use crate::calibration::KappaTable;
use crate::config::{ExperimentConfig, Frontend};
use crate::error::Result;
use crate::observe::SpmcSymbol;
use crate::output::SweepResult;
use crate::runner::{run_batches, substream, Domain};

/// Sample statistics of wrapped direction errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub trials: u64,
    pub mean: f64,
    pub mean_stderr: f64,
    pub mse: f64,
    pub mse_stderr: f64,
    pub circular_variance: f64,
    pub circular_variance_stderr: f64,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Self {
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
        let sq_var = errors.iter().map(|e| (e * e - mse).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);

        let c = errors.iter().map(|e| e.cos()).sum::<f64>() / n;
        let s = errors.iter().map(|e| e.sin()).sum::<f64>() / n;
        let r = c.hypot(s);
        // delta method on R = |(mean cos, mean sin)|
        let (mut vcc, mut vss, mut vcs) = (0.0, 0.0, 0.0);
        for e in errors {
            let (dc, ds) = (e.cos() - c, e.sin() - s);
            vcc += dc * dc;
            vss += ds * ds;
            vcs += dc * ds;
        }
        let d = (n - 1.0).max(1.0);
        let (vcc, vss, vcs) = (vcc / d, vss / d, vcs / d);
        let var_r = if r > 0.0 { (c * c * vcc + s * s * vss + 2.0 * c * s * vcs) / (r * r * n) } else { 0.0 };

        ErrorStats {
            trials: errors.len() as u64,
            mean,
            mean_stderr: (var / n).sqrt(),
            mse,
            mse_stderr: (sq_var / n).sqrt(),
            circular_variance: 1.0 - r,
            circular_variance_stderr: var_r.sqrt(),
        }
    }

    pub fn rmse(&self) -> f64 {
        self.mse.sqrt()
    }

    pub fn rmse_stderr(&self) -> f64 {
        if self.mse > 0.0 {
            self.mse_stderr / (2.0 * self.rmse())
        } else {
            0.0
        }
    }
}

/// `wrap(phi_hat - phi)` over `cfg.trials` symbols for an `m`-element array.
/// Increments beyond the visible range map to endfire.
fn doa_errors(cfg: &ExperimentConfig, m: usize, snr_db: f64, kappa: f64, point: u32) -> Result<Vec<f64>> {
    let geom = array(cfg, m)?;
    let phi = cfg.doa_deg.to_radians();
    let dtheta = doa_phase_increment(&geom, phi)?;
    let kappas = vec![spmc_core::Concentration::new(kappa)?; m - 1];
    let ch = Channel { snr_db, ..cfg.channel };
    let oracle = match cfg.frontend {
        Frontend::Waveform => Some(WaveformOracle::new(geom, cfg.waveform)?),
        Frontend::Statistical => None,
    };
    let grid = cfg.grid_points_for(m);
    run_batches(cfg.trials, cfg.batch_size, |_| false, |b, n| {
        let mut rng = substream(cfg.seed, Domain::Estimation, point, b);
        let sym = SpmcSymbol { geom: &geom, ch: &ch, kappas: &kappas, model: cfg.error_model };
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let obs = sym.observe(dtheta, oracle.as_ref(), &mut rng)?;
            let est = fuse_ml(&obs, &kappas, Some(grid))?.delta_theta_hat.value();
            let phi_hat = geom.doa_from_increment(est).unwrap_or(FRAC_PI_2.copysign(est));
            out.push(WrappedAngle::wrapped(phi_hat - phi).value());
        }
        Ok(out)
    })
}

fn array(cfg: &ExperimentConfig, m: usize) -> Result<Geometry> {
    Ok(ArrayGeometry::new(m, cfg.geometry.spacing_over_lambda, cfg.geometry.carrier_hz)?)
}

fn sorted_m(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut v = cfg.m_grid.clone();
    v.sort_unstable();
    v.dedup();
    v
}

pub const PDF_COLUMNS: [&str; 9] = [
    "m",
    "bin_center_rad",
    "density",
    "density_stderr",
    "circ_var",
    "circ_var_stderr",
    "mean_error_rad",
    "mean_error_stderr",
    "trials",
];

/// Density of the direction error per array size at `channel.snr_db`,
/// over `pdf_bins` bins spanning the largest observed error.
pub fn run_error_pdf(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut table = KappaTable::new(cfg)?;
    let snr = cfg.channel.snr_db;
    let cal = table.kappa(snr)?;
    let mut out = SweepResult::new(cfg, PDF_COLUMNS.to_vec());
    out.note("snr_db", format!("{snr:.16e}"));
    out.note("kappa", format!("{:.16e}", cal.kappa.value()));
    for (mi, m) in sorted_m(cfg).into_iter().enumerate() {
        let errors = doa_errors(cfg, m, snr, cal.kappa.value(), mi as u32)?;
        let st = ErrorStats::from_errors(&errors);
        let (centers, density, stderr) = histogram(&errors, cfg.pdf_bins);
        for i in 0..centers.len() {
            out.push(vec![
                m.into(),
                centers[i].into(),
                density[i].into(),
                stderr[i].into(),
                st.circular_variance.into(),
                st.circular_variance_stderr.into(),
                st.mean.into(),
                st.mean_stderr.into(),
                st.trials.into(),
            ]);
        }
    }
    Ok(out)
}

/// Symmetric bins over `[-s, s]`, `s` the largest `|error|`. Densities are
/// normalized so that `sum density * width = 1`.
pub fn histogram(errors: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let spread = errors.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(1e-12);
    let width = 2.0 * spread / bins as f64;
    let mut counts = vec![0u64; bins];
    for e in errors {
        let i = (((e + spread) / width).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = errors.len() as f64;
    let centers = (0..bins).map(|i| -spread + (i as f64 + 0.5) * width).collect();
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let stderr = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p * (1.0 - p) / n).sqrt() / width
        })
        .collect();
    (centers, density, stderr)
}

pub const RMSE_COLUMNS: [&str; 12] = [
    "m",
    "snr_db",
    "kappa",
    "rmse_rad",
    "rmse_stderr",
    "crlb_rad",
    "crlb_high_concentration_rad",
    "ratio",
    "ratio_stderr",
    "mean_error_rad",
    "mean_error_stderr",
    "trials",
];

/// Direction RMSE of the ML fusion estimator and the square root of the
/// direction CRLB at the calibrated concentration, per `(M, SNR)`.
pub fn run_rmse_crlb(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut table = KappaTable::new(cfg)?;
    let mut snrs = cfg.snr_grid_db.clone();
    snrs.sort_by(f64::total_cmp);
    let phi = cfg.doa_deg.to_radians();
    let mut out = SweepResult::new(cfg, RMSE_COLUMNS.to_vec());
    for (mi, m) in sorted_m(cfg).into_iter().enumerate() {
        for (pi, &snr) in snrs.iter().enumerate() {
            let kappa = table.kappa(snr)?.kappa;
            let errors = doa_errors(cfg, m, snr, kappa.value(), (mi * 4096 + pi) as u32)?;
            let st = ErrorStats::from_errors(&errors);
            let bound = crlb_doa(&vec![kappa; m - 1], &array(cfg, m)?, phi)?;
            let crlb = bound.var_phi.value().sqrt();
            out.push(vec![
                m.into(),
                snr.into(),
                kappa.value().into(),
                st.rmse().into(),
                st.rmse_stderr().into(),
                crlb.into(),
                bound.var_phi_high_concentration.value().sqrt().into(),
                (st.rmse() / crlb).into(),
                (st.rmse_stderr() / crlb).into(),
                st.mean.into(),
                st.mean_stderr.into(),
                st.trials.into(),
            ]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_integrates_to_one() {
        let errs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect();
        let (c, d, _) = histogram(&errs, 201);
        let w = c[1] - c[0];
        assert!((d.iter().sum::<f64>() * w - 1.0).abs() < 1e-12);
        assert_eq!(c.len(), 201);
        assert!(c[100].abs() < 1e-12);
    }

    #[test]
    fn stats_of_known_sample() {
        let st = ErrorStats::from_errors(&[0.1, -0.1, 0.2, -0.2]);
        assert!(st.mean.abs() < 1e-15);
        assert!((st.mse - 0.025).abs() < 1e-15);
        let r = (0.1f64.cos() + 0.2f64.cos()) / 2.0;
        assert!((st.circular_variance - (1.0 - r)).abs() < 1e-15);
    }
}

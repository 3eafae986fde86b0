use rand::Rng;
use spmc_core::inference::symbol_error_union_bound;
use spmc_core::{detect_ml, Channel, GrayMap, WaveformOracle};

use crate::calibration::KappaTable;
use crate::coherent::{psk_ser_awgn, CoherentLink};
use crate::config::{ExperimentConfig, Frontend, Mode};
use crate::error::Result;
use crate::observe::SpmcSymbol;
use crate::output::{rate_stderr, Cell, SweepResult};
use crate::runner::{run_batches, substream, Domain, Merge};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub symbols: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
}

impl ErrorCounts {
    pub fn record(&mut self, sent: usize, detected: usize, gray: &GrayMap) {
        self.symbols += 1;
        if sent != detected {
            self.symbol_errors += 1;
            self.bit_errors += u64::from(gray.bit_errors(sent, detected));
        }
    }
}

impl Merge for ErrorCounts {
    fn merge(&mut self, o: Self) {
        self.symbols += o.symbols;
        self.symbol_errors += o.symbol_errors;
        self.bit_errors += o.bit_errors;
    }
}

pub const COLUMNS: [&str; 12] = [
    "receiver",
    "sigma_phi_deg",
    "snr_db",
    "kappa",
    "ber",
    "ber_stderr",
    "ser",
    "ser_stderr",
    "ser_theory",
    "bit_errors",
    "symbol_errors",
    "trials",
];

/// SPMC detection, and the coherent benchmark when enabled, over the SNR
/// grid. In `ber-phase-noise` mode the sweep repeats for every phase-noise
/// level; otherwise the channel's own level is used.
///
/// `ser_theory` is the union bound for SPMC and the exact AWGN PSK rate for
/// the coherent receiver (ignoring fading and phase noise).
pub fn run_ber(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut table = KappaTable::new(cfg)?;
    let mut out = SweepResult::new(cfg, COLUMNS.to_vec());
    for row in spmc_rows(cfg, &mut table)? {
        out.push(row);
    }
    if cfg.coherent.enabled {
        for row in coherent_rows(cfg)? {
            out.push(row);
        }
    }
    Ok(out)
}

/// The coherent benchmark alone.
pub fn run_coherent_baseline(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut out = SweepResult::new(cfg, COLUMNS.to_vec());
    for row in coherent_rows(cfg)? {
        out.push(row);
    }
    Ok(out)
}

fn phase_noise_levels(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut v = match cfg.mode {
        Mode::BerPhaseNoise => cfg.phase_noise_grid_deg.clone(),
        _ => vec![cfg.channel.phase_noise_std_deg],
    };
    v.sort_by(f64::total_cmp);
    v
}

fn sorted_snr(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut v = cfg.snr_grid_db.clone();
    v.sort_by(f64::total_cmp);
    v
}

fn stop_rule(cfg: &ExperimentConfig) -> impl Fn(&ErrorCounts) -> bool {
    let min = cfg.min_errors;
    move |c: &ErrorCounts| c.symbol_errors >= min
}

fn rate_cells(c: &ErrorCounts, bits: u32) -> Vec<Cell> {
    let nbits = c.symbols * u64::from(bits);
    vec![
        Cell::Num(c.bit_errors as f64 / nbits as f64),
        Cell::Num(rate_stderr(c.bit_errors, nbits)),
        Cell::Num(c.symbol_errors as f64 / c.symbols as f64),
        Cell::Num(rate_stderr(c.symbol_errors, c.symbols)),
    ]
}

fn spmc_rows(cfg: &ExperimentConfig, table: &mut KappaTable) -> Result<Vec<Vec<Cell>>> {
    let geom = cfg.geometry;
    let alphabet = cfg.alphabet.build(&geom)?;
    let gray = alphabet.bit_map().cloned().expect("validated power-of-two alphabet");
    let oracle = match cfg.frontend {
        Frontend::Waveform => Some(WaveformOracle::new(geom, cfg.waveform)?),
        Frontend::Statistical => None,
    };
    let mut rows = Vec::new();
    for (si, &sigma) in phase_noise_levels(cfg).iter().enumerate() {
        for (pi, &snr) in sorted_snr(cfg).iter().enumerate() {
            let cal = table.kappa(snr)?;
            let kappas = vec![cal.kappa; geom.num_baselines()];
            let ch = Channel { snr_db: snr, phase_noise_std_deg: sigma, ..cfg.channel };
            let point = (si * 4096 + pi) as u32;
            let counts = run_batches(cfg.trials, cfg.batch_size, stop_rule(cfg), |b, n| {
                let mut rng = substream(cfg.seed, Domain::Spmc, point, b);
                let sym = SpmcSymbol { geom: &geom, ch: &ch, kappas: &kappas, model: cfg.error_model };
                let mut c = ErrorCounts::default();
                for _ in 0..n {
                    let sent = gray.index(rng.random_range(0..gray.size() as u32));
                    let obs = sym.observe(alphabet.increment(sent), oracle.as_ref(), &mut rng)?;
                    let detected = detect_ml(&obs, &alphabet, &kappas)?.index_hat;
                    c.record(sent, detected, &gray);
                }
                Ok(c)
            })?;
            let theory = symbol_error_union_bound(&alphabet, 1.0, &kappas)?.min(1.0);
            let mut row = vec![Cell::from("spmc"), sigma.into(), snr.into(), cal.kappa.value().into()];
            row.extend(rate_cells(&counts, gray.bits()));
            row.extend([theory.into(), counts.bit_errors.into(), counts.symbol_errors.into(), counts.symbols.into()]);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn coherent_rows(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>> {
    let order = cfg.alphabet.len();
    let bits = order.trailing_zeros();
    let mut rows = Vec::new();
    for (si, &sigma) in phase_noise_levels(cfg).iter().enumerate() {
        for (pi, &snr) in sorted_snr(cfg).iter().enumerate() {
            let link = coherent_link(cfg, snr, sigma);
            let point = (si * 4096 + pi) as u32;
            let counts = run_batches(cfg.trials, cfg.batch_size, stop_rule(cfg), |b, n| {
                link.run(n, &mut substream(cfg.seed, Domain::Coherent, point, b))
            })?;
            let mut row = vec![Cell::from("coherent"), sigma.into(), snr.into(), f64::NAN.into()];
            row.extend(rate_cells(&counts, bits));
            row.extend([
                psk_ser_awgn(order, link.es_n0()).into(),
                counts.bit_errors.into(),
                counts.symbol_errors.into(),
                counts.symbols.into(),
            ]);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// The benchmark is put on the same SNR axis as SPMC: `snr_db` is the
/// per-branch observable SNR, signal power over per-component noise
/// variance, here of each antenna's matched-filter output.
pub fn coherent_link(cfg: &ExperimentConfig, snr_db: f64, sigma_phi_deg: f64) -> CoherentLink {
    CoherentLink {
        psk_order: cfg.alphabet.len(),
        num_rx: cfg.geometry.num_rx,
        noise_std: 10f64.powf(-snr_db / 20.0),
        phase_noise_std_rad: sigma_phi_deg.to_radians(),
        tracker_gain: cfg.coherent.tracker_gain,
        rician_k: cfg.channel.rician_k_linear(),
    }
}

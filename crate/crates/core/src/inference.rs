//! Manifold-domain fusion and detection.
//!
//! Every baseline `m` (stored at index `m - 2`) contributes
//! `kappa_m Re{q_m exp(-j (m - 1) x)}` to the objective `l(x)`.
//! Hypothesis and baseline indices are 0-based throughout.

use crate::error::{invalid, Error, Result};
use crate::frontend::{ArrayGeometry, SymbolObservation};
use crate::manifold::{Concentration, ManifoldPoint, WrappedAngle};
use crate::scalar::Real;
use crate::special::q_function;

/// Exact phasors are recomputed after this many recurrence steps on the grid.
const RESYNC_STEPS: usize = 512;
const NEWTON_MAX_ITER: usize = 20;
const SCORE_TOL: f64 = 1e-10;

/// Gray code over `bits`-bit words: adjacent indices differ in one bit,
/// including the wrap from the last index back to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrayMap {
    bits: u32,
}

impl GrayMap {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(invalid(format!("Gray mapping needs a power-of-two alphabet >= 2, got {size}")));
        }
        Ok(GrayMap { bits: size.trailing_zeros() })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    pub fn word(&self, index: usize) -> u32 {
        (index ^ (index >> 1)) as u32
    }

    pub fn index(&self, word: u32) -> usize {
        let mut w = word;
        let mut shift = 1;
        while shift < self.bits {
            w ^= w >> shift;
            shift <<= 1;
        }
        w as usize
    }

    pub fn bit_errors(&self, sent: usize, detected: usize) -> u32 {
        (self.word(sent) ^ self.word(detected)).count_ones()
    }
}

/// The `N_tx` phase increments a transmitter can induce at the array.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAlphabet<T> {
    increments: Vec<WrappedAngle<T>>,
    /// Implied direction per entry; `None` when the increment exceeds
    /// `2 pi d / lambda` and no direction produces it.
    doas: Vec<Option<T>>,
    bit_map: Option<GrayMap>,
}

impl<T: Real> SpatialAlphabet<T> {
    pub fn new(increments: Vec<WrappedAngle<T>>, geom: &ArrayGeometry<T>, gray: bool) -> Result<Self> {
        if increments.is_empty() {
            return Err(invalid("alphabet is empty"));
        }
        for (i, a) in increments.iter().enumerate() {
            for (j, b) in increments.iter().enumerate().skip(i + 1) {
                if a.distance(*b) == T::zero() {
                    return Err(invalid(format!("alphabet entries {i} and {j} coincide")));
                }
            }
        }
        let bit_map = if gray { Some(GrayMap::new(increments.len())?) } else { None };
        let doas = increments.iter().map(|d| geom.doa_from_increment(d.value())).collect();
        Ok(SpatialAlphabet { increments, doas, bit_map })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[WrappedAngle<T>] {
        &self.increments
    }

    pub fn increment(&self, i: usize) -> WrappedAngle<T> {
        self.increments[i]
    }

    pub fn doas(&self) -> &[Option<T>] {
        &self.doas
    }

    pub fn bit_map(&self) -> Option<&GrayMap> {
        self.bit_map.as_ref()
    }

    pub fn min_separation(&self) -> T {
        let mut best = T::infinity();
        for (i, a) in self.increments.iter().enumerate() {
            for b in &self.increments[i + 1..] {
                best = best.min(a.distance(*b).abs());
            }
        }
        best
    }
}

/// `delta_i = -pi + (2 i + 1) pi / n_tx` for `i = 0..n_tx`, Gray mapped.
pub fn build_uniform_alphabet<T: Real>(n_tx: usize, geom: &ArrayGeometry<T>) -> Result<SpatialAlphabet<T>> {
    if n_tx < 2 {
        return Err(invalid(format!("alphabet needs at least 2 entries, got {n_tx}")));
    }
    let n = T::from_usize_lossy(n_tx);
    let increments = (0..n_tx)
        .map(|i| WrappedAngle::wrapped(-T::PI() + T::from_usize_lossy(2 * i + 1) * T::PI() / n))
        .collect();
    SpatialAlphabet::new(increments, geom, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T> {
    pub delta_theta_hat: WrappedAngle<T>,
    /// The objective at `delta_theta_hat`, with the effective weights.
    pub objective_value: T,
    /// `wrap(angle(q_m) - (m - 1) delta_theta_hat)`; `None` for unreliable baselines.
    pub per_baseline_residuals: Vec<Option<T>>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult<T> {
    pub index_hat: usize,
    pub log_likelihoods: Vec<T>,
}

/// Per-baseline weights used by every estimator: `kappa_m` for reliable
/// baselines, 0 for unreliable ones. If any reliable baseline is noiseless
/// (`kappa = inf`) only the noiseless ones count, with unit weight.
pub fn effective_weights<T: Real>(obs: &SymbolObservation<T>, kappas: &[Concentration<T>]) -> Result<Vec<T>> {
    if kappas.len() != obs.num_baselines() {
        return Err(invalid(format!(
            "expected {} concentrations, got {}",
            obs.num_baselines(),
            kappas.len()
        )));
    }
    let any_inf = obs.baselines.iter().zip(kappas).any(|(b, k)| b.is_some() && k.is_infinite());
    let w: Vec<T> = obs
        .baselines
        .iter()
        .zip(kappas)
        .map(|(b, k)| match (b, any_inf) {
            (None, _) => T::zero(),
            (Some(_), true) => {
                if k.is_infinite() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            (Some(_), false) => k.value(),
        })
        .collect();
    if !w.iter().any(|&x| x > T::zero()) {
        return Err(Error::NoSignal);
    }
    Ok(w)
}

/// `sum_m w_m cos(angle_m - (m - 1) x)`.
pub fn objective<T: Real>(obs: &SymbolObservation<T>, weights: &[T], x: T) -> T {
    let mut acc = T::zero();
    for (i, (b, &w)) in obs.baselines.iter().zip(weights).enumerate() {
        if let Some(q) = b {
            if w > T::zero() {
                acc = acc + w * q.project(T::from_usize_lossy(i + 1) * x);
            }
        }
    }
    acc
}

/// Score and curvature of the objective at `x`.
fn derivatives<T: Real>(obs: &SymbolObservation<T>, weights: &[T], x: T) -> (T, T) {
    let (mut score, mut curv) = (T::zero(), T::zero());
    for (i, (b, &w)) in obs.baselines.iter().zip(weights).enumerate() {
        if let (Some(q), true) = (b, w > T::zero()) {
            let n = T::from_usize_lossy(i + 1);
            let (s, c) = (n * x).sin_cos();
            // q e^{-j n x}
            let re = q.re() * c + q.im() * s;
            let im = q.im() * c - q.re() * s;
            score = score + w * n * im;
            curv = curv - w * n * n * re;
        }
    }
    (score, curv)
}

fn residuals<T: Real>(obs: &SymbolObservation<T>, x: T) -> Vec<Option<T>> {
    obs.baselines
        .iter()
        .enumerate()
        .map(|(i, b)| {
            b.map(|q| q.angle().distance(WrappedAngle::wrapped(T::from_usize_lossy(i + 1) * x)))
        })
        .collect()
}

/// `max(4096, 64 (M - 1))`.
pub fn default_grid_points(num_baselines: usize) -> usize {
    4096.max(64 * num_baselines)
}

/// Maximizes the objective over `(-pi, pi]`: exhaustive grid, then a
/// Newton iteration on the score kept inside the winning grid cell.
pub fn fuse_ml<T: Real>(
    obs: &SymbolObservation<T>,
    kappas: &[Concentration<T>],
    grid_points: Option<usize>,
) -> Result<EstimateResult<T>> {
    let nb = obs.num_baselines();
    let weights = effective_weights(obs, kappas)?;
    let g = grid_points.unwrap_or_else(|| default_grid_points(nb));
    if g < 8 * nb {
        return Err(invalid(format!("grid_points must be >= 8 (M - 1) = {}, got {g}", 8 * nb)));
    }

    // a lone first baseline is maximized at its own angle
    let active: Vec<usize> = (0..nb).filter(|&i| weights[i] > T::zero()).collect();
    if active == [0] {
        let x = obs.baselines[0].expect("weighted baseline is reliable").angle();
        return Ok(EstimateResult {
            delta_theta_hat: x,
            objective_value: objective(obs, &weights, x.value()),
            per_baseline_residuals: residuals(obs, x.value()),
            iterations: 0,
            converged: true,
        });
    }

    let step = T::two_pi() / T::from_usize_lossy(g);
    let start = -T::PI() + step;
    let (best_idx, best_val) = grid_search(obs, &weights, start, step, g);
    let x0 = start + T::from_usize_lossy(best_idx) * step;

    let (x, iterations, converged) = newton(obs, &weights, x0, step);
    let val = objective(obs, &weights, x);
    let (x, val) = if val >= best_val { (x, val) } else { (x0, best_val) };
    let hat = WrappedAngle::wrapped(x);
    Ok(EstimateResult {
        delta_theta_hat: hat,
        objective_value: val,
        per_baseline_residuals: residuals(obs, hat.value()),
        iterations,
        converged,
    })
}

/// Objective on `start + g step`, `g = 0..points`, by phasor recurrence.
/// Returns the first maximizing index and its value.
fn grid_search<T: Real>(obs: &SymbolObservation<T>, weights: &[T], start: T, step: T, points: usize) -> (usize, T) {
    struct Term<T> {
        w: T,
        order: T,
        q: ManifoldPoint<T>,
        re: T,
        im: T,
        rot_re: T,
        rot_im: T,
    }
    let mut terms: Vec<Term<T>> = obs
        .baselines
        .iter()
        .zip(weights)
        .enumerate()
        .filter_map(|(i, (b, &w))| {
            let q = (*b)?;
            if w <= T::zero() {
                return None;
            }
            let order = T::from_usize_lossy(i + 1);
            let (s, c) = (order * step).sin_cos();
            Some(Term { w, order, q, re: T::zero(), im: T::zero(), rot_re: c, rot_im: -s })
        })
        .collect();

    let mut best = (0usize, T::neg_infinity());
    for gi in 0..points {
        if gi % RESYNC_STEPS == 0 {
            let x = start + T::from_usize_lossy(gi) * step;
            for t in &mut terms {
                let (s, c) = (t.order * x).sin_cos();
                t.re = t.q.re() * c + t.q.im() * s;
                t.im = t.q.im() * c - t.q.re() * s;
            }
        }
        let mut val = T::zero();
        for t in &terms {
            val = val + t.w * t.re;
        }
        if val > best.1 {
            best = (gi, val);
        }
        for t in &mut terms {
            let re = t.re * t.rot_re - t.im * t.rot_im;
            let im = t.re * t.rot_im + t.im * t.rot_re;
            t.re = re;
            t.im = im;
        }
    }
    best
}

/// Safeguarded Newton on the score inside `[x0 - h, x0 + h]`, falling back
/// to bisection whenever the Newton step is uphill or leaves the bracket.
fn newton<T: Real>(obs: &SymbolObservation<T>, weights: &[T], x0: T, h: T) -> (T, usize, bool) {
    let scale: T = weights
        .iter()
        .enumerate()
        .fold(T::zero(), |a, (i, &w)| a + w * T::from_usize_lossy(i + 1));
    let tol = T::lit(SCORE_TOL).max(T::lit(64.0) * T::epsilon() * scale);

    let (mut lo, mut hi) = (x0 - h, x0 + h);
    let bracketed = derivatives(obs, weights, lo).0 >= T::zero() && derivatives(obs, weights, hi).0 <= T::zero();
    let mut x = x0;
    for it in 0..NEWTON_MAX_ITER {
        let (s, c) = derivatives(obs, weights, x);
        if s.abs() < tol {
            return (x, it, true);
        }
        if bracketed {
            if s > T::zero() {
                lo = x;
            } else {
                hi = x;
            }
        }
        let mut next = if c < T::zero() { x - s / c } else { T::nan() };
        if !(next > lo && next < hi) {
            next = if bracketed { (lo + hi) / T::lit(2.0) } else { x.max(lo).min(hi) };
            if !bracketed {
                return (x, it, false);
            }
        }
        if next == x {
            return (x, it + 1, true);
        }
        x = next;
    }
    let s = derivatives(obs, weights, x).0;
    (x, NEWTON_MAX_ITER, s.abs() < tol)
}

/// Closed-form weighted least squares in unwrapped phase. Each angle is
/// unwrapped to the branch nearest `(m - 1)` times the estimate built from
/// the shorter baselines, starting at `m = 2`.
pub fn fuse_wls<T: Real>(obs: &SymbolObservation<T>, kappas: &[Concentration<T>]) -> Result<EstimateResult<T>> {
    let weights = effective_weights(obs, kappas)?;
    let (mut num, mut den) = (T::zero(), T::zero());
    for (i, (b, &w)) in obs.baselines.iter().zip(&weights).enumerate() {
        let Some(q) = b else { continue };
        if w <= T::zero() {
            continue;
        }
        let n = T::from_usize_lossy(i + 1);
        let est = if den > T::zero() { num / den } else { T::zero() };
        let a = q.angle().value();
        let k = ((n * est - a) / T::two_pi()).round();
        let u = a + k * T::two_pi();
        num = num + w * n * u;
        den = den + w * n * n;
    }
    let hat = WrappedAngle::wrapped(num / den);
    Ok(EstimateResult {
        delta_theta_hat: hat,
        objective_value: objective(obs, &weights, hat.value()),
        per_baseline_residuals: residuals(obs, hat.value()),
        iterations: 0,
        converged: true,
    })
}

/// Evaluates the objective at every alphabet entry and returns the argmax.
/// Values within `8 eps sum(w)` of the maximum count as ties and go to the
/// lowest index.
pub fn detect_ml<T: Real>(
    obs: &SymbolObservation<T>,
    alphabet: &SpatialAlphabet<T>,
    kappas: &[Concentration<T>],
) -> Result<DetectionResult<T>> {
    if alphabet.is_empty() {
        return Err(invalid("alphabet is empty"));
    }
    let weights = effective_weights(obs, kappas)?;
    let lls: Vec<T> = alphabet.increments().iter().map(|d| objective(obs, &weights, d.value())).collect();
    let max = lls.iter().copied().fold(T::neg_infinity(), T::max);
    let total = weights.iter().copied().fold(T::zero(), |a, b| a + b);
    let tol = T::lit(8.0) * T::epsilon() * total;
    let index_hat = lls.iter().position(|&v| v >= max - tol).unwrap_or(0);
    Ok(DetectionResult { index_hat, log_likelihoods: lls })
}

/// `Q(|delta| / (2 sigma) * sqrt(sum_m kappa_m (m - 1)^2))`.
pub fn pairwise_error_probability<T: Real>(
    delta_ij: WrappedAngle<T>,
    sigma_eps: T,
    kappas: &[Concentration<T>],
) -> Result<T> {
    if !(sigma_eps > T::zero()) {
        return Err(invalid(format!("sigma_eps must be > 0, got {sigma_eps}")));
    }
    let d = delta_ij.value().abs();
    if d == T::zero() {
        return q_function(T::zero());
    }
    let s = kappas.iter().enumerate().fold(T::zero(), |a, (i, k)| {
        let n = T::from_usize_lossy(i + 1);
        a + k.value() * n * n
    });
    q_function(d / (T::lit(2.0) * sigma_eps) * s.sqrt())
}

/// Union bound on the symbol-error rate, averaged over equiprobable symbols.
pub fn symbol_error_union_bound<T: Real>(
    alphabet: &SpatialAlphabet<T>,
    sigma_eps: T,
    kappas: &[Concentration<T>],
) -> Result<T> {
    let n = alphabet.len();
    let mut total = T::zero();
    for (i, a) in alphabet.increments().iter().enumerate() {
        for (j, b) in alphabet.increments().iter().enumerate() {
            if i != j {
                total = total + pairwise_error_probability(*a - *b, sigma_eps, kappas)?;
            }
        }
    }
    Ok(total / T::from_usize_lossy(n))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::manifold::uniform_kappas;
    use crate::von_mises::sample_von_mises;

    fn noiseless(dtheta: f64, m: usize) -> SymbolObservation<f64> {
        let angles: Vec<f64> = (1..m).map(|n| WrappedAngle::wrapped(n as f64 * dtheta).value()).collect();
        SymbolObservation::from_angles(&angles)
    }

    fn geom(m: usize) -> ArrayGeometry<f64> {
        ArrayGeometry::half_wavelength(m).unwrap()
    }

    #[test]
    fn gray_map_adjacent_single_bit() {
        let g = GrayMap::new(16).unwrap();
        for i in 0..16 {
            assert_eq!(g.bit_errors(i, (i + 1) % 16), 1);
            assert_eq!(g.index(g.word(i)), i);
        }
        assert!(GrayMap::new(12).is_err());
    }

    #[test]
    fn uniform_alphabet_examples() {
        let a = build_uniform_alphabet(2, &geom(2)).unwrap();
        assert!((a.increment(0).value() + PI / 2.0).abs() < 1e-15);
        assert!((a.increment(1).value() - PI / 2.0).abs() < 1e-15);
        let a16 = build_uniform_alphabet(16, &geom(2)).unwrap();
        assert!((a16.min_separation() - 2.0 * PI / 16.0).abs() < 1e-12);
        assert!((a.doas()[1].unwrap() - PI / 6.0).abs() < 1e-12);
        assert!(build_uniform_alphabet(12, &geom(2)).is_err());
        let tight = ArrayGeometry::new(2, 0.1, 1.0).unwrap();
        let a = build_uniform_alphabet(2, &tight).unwrap();
        assert_eq!(a.doas(), &[None, None]);
    }

    #[test]
    fn fuse_ml_noiseless() {
        let k = uniform_kappas(7, 10.0).unwrap();
        let r = fuse_ml(&noiseless(0.7, 8), &k, None).unwrap();
        assert!((r.delta_theta_hat.value() - 0.7).abs() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn fuse_ml_single_baseline_is_exact() {
        let obs = SymbolObservation::from_angles(&[-2.345]);
        let r = fuse_ml(&obs, &uniform_kappas(1, 3.0).unwrap(), None).unwrap();
        assert_eq!(r.delta_theta_hat.value(), obs.baselines[0].unwrap().angle().value());
    }

    #[test]
    fn fuse_ml_avoids_sidelobes() {
        let obs = noiseless(2.9, 5);
        let k = uniform_kappas(4, 1.0).unwrap();
        let r = fuse_ml(&obs, &k, Some(4096)).unwrap();
        // brute force over a dense grid
        let w = vec![1.0; 4];
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..1_000_000 {
            let x = -PI + 2.0 * PI * (i + 1) as f64 / 1e6;
            let v = objective(&obs, &w, x);
            if v > best.1 {
                best = (x, v);
            }
        }
        assert!((best.0 - 2.9).abs() < 1e-5);
        assert!((r.delta_theta_hat.value() - 2.9).abs() < 1e-9);
    }

    #[test]
    fn fuse_ml_beats_every_grid_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = uniform_kappas(5, 2.0).unwrap();
        for _ in 0..50 {
            let angles: Vec<f64> = (0..5)
                .map(|_| sample_von_mises(WrappedAngle::wrapped(0.0), Concentration::new(0.5).unwrap(), &mut rng).value())
                .collect();
            let obs = SymbolObservation::from_angles(&angles);
            let g = 256;
            let r = fuse_ml(&obs, &k, Some(g)).unwrap();
            let w = vec![2.0; 5];
            for i in 0..g {
                let x = -PI + 2.0 * PI * (i + 1) as f64 / g as f64;
                assert!(r.objective_value >= objective(&obs, &w, x));
            }
        }
    }

    #[test]
    fn fuse_ml_errors() {
        let mut obs = noiseless(0.1, 3);
        obs.baselines = vec![None, None];
        let k = uniform_kappas(2, 1.0).unwrap();
        assert_eq!(fuse_ml(&obs, &k, None), Err(Error::NoSignal));
        assert_eq!(fuse_wls(&obs, &k), Err(Error::NoSignal));
        assert!(fuse_ml(&noiseless(0.1, 3), &k, Some(15)).is_err());
        assert!(fuse_ml(&noiseless(0.1, 3), &k[..1], None).is_err());
    }

    #[test]
    fn infinite_kappa_dominates() {
        let obs = SymbolObservation::<f64>::from_angles(&[0.4, 3.0]);
        let k = vec![Concentration::infinite(), Concentration::new(5.0).unwrap()];
        let r = fuse_ml(&obs, &k, None).unwrap();
        assert!((r.delta_theta_hat.value() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn wls_examples() {
        let obs = SymbolObservation::<f64>::from_angles(&[0.1, 0.2]);
        let k = uniform_kappas(2, 1.0).unwrap();
        let r = fuse_wls(&obs, &k).unwrap();
        assert!((r.delta_theta_hat.value() - 0.1).abs() < 1e-15);
        let w = vec![1.0; 2];
        assert_eq!(r.objective_value, objective(&obs, &w, r.delta_theta_hat.value()));
    }

    #[test]
    fn wls_unwraps_long_baselines() {
        // (m - 1) dtheta crosses pi for m = 3, 4
        let obs = noiseless(1.2, 4);
        let r = fuse_wls(&obs, &uniform_kappas(3, 1.0).unwrap()).unwrap();
        assert!((r.delta_theta_hat.value() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn wls_agrees_with_ml_at_high_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = uniform_kappas(7, 200.0).unwrap();
        let mut close = 0;
        let n = 1000;
        for _ in 0..n {
            let u: f64 = rand::Rng::random(&mut rng);
            let d = PI * (2.0 * u - 1.0);
            let angles: Vec<f64> = (1..8)
                .map(|m| sample_von_mises(WrappedAngle::wrapped(m as f64 * d), k[0], &mut rng).value())
                .collect();
            let obs = SymbolObservation::from_angles(&angles);
            let a = fuse_ml(&obs, &k, None).unwrap().delta_theta_hat;
            let b = fuse_wls(&obs, &k).unwrap().delta_theta_hat;
            if a.distance(b).abs() < 0.01 {
                close += 1;
            }
        }
        assert!(close as f64 >= 0.99 * n as f64, "{close}");
    }

    #[test]
    fn detect_examples() {
        let a = build_uniform_alphabet(16, &geom(4)).unwrap();
        let k = vec![
            Concentration::new(2.0).unwrap(),
            Concentration::new(3.0).unwrap(),
            Concentration::new(4.5).unwrap(),
        ];
        let obs = noiseless(a.increment(5).value(), 4);
        let d = detect_ml(&obs, &a, &k).unwrap();
        assert_eq!(d.index_hat, 5);
        assert!((d.log_likelihoods[5] - 9.5).abs() < 1e-12);

        let a2 = build_uniform_alphabet(16, &geom(2)).unwrap();
        let mid = (a2.increment(0).value() + a2.increment(1).value()) / 2.0;
        let d = detect_ml(&SymbolObservation::from_angles(&[mid]), &a2, &uniform_kappas(1, 1.0).unwrap()).unwrap();
        assert_eq!(d.index_hat, 0);
    }

    #[test]
    fn pep_examples() {
        let k1 = uniform_kappas(1, 1.0).unwrap();
        assert_eq!(pairwise_error_probability(WrappedAngle::wrapped(0.0), 0.1, &k1).unwrap(), 0.5);
        let p = pairwise_error_probability(WrappedAngle::wrapped(2.0 * PI / 16.0), 0.1, &k1).unwrap();
        assert!((p - 0.0247943187).abs() < 1e-9, "{p}");
        assert!(pairwise_error_probability(WrappedAngle::wrapped(0.1), 0.0, &k1).is_err());
    }

    #[test]
    fn pep_kappa_doubling_scales_argument() {
        let k = vec![Concentration::new(0.7).unwrap(), Concentration::new(1.9).unwrap()];
        let k2: Vec<_> = k.iter().map(|c| Concentration::new(2.0 * c.value()).unwrap()).collect();
        let d = WrappedAngle::wrapped(0.3);
        let p1 = pairwise_error_probability(d, 0.4, &k).unwrap();
        let p2 = pairwise_error_probability(d, 0.4, &k2).unwrap();
        // invert Q on each side through the erfc relation
        let inv = |p: f64| {
            let (mut lo, mut hi) = (0.0, 40.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if q_function(mid).unwrap() > p {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            0.5 * (lo + hi)
        };
        assert!((inv(p2) / inv(p1) - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn ser_nonincreasing_in_kappa() {
        let a = build_uniform_alphabet(16, &geom(2)).unwrap();
        let n = 100_000;
        let mut rates = Vec::new();
        for (s, kappa) in [1.0, 5.0, 20.0, 100.0].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(10 + s as u64);
            let k = uniform_kappas(1, kappa).unwrap();
            let mut errors = 0;
            for t in 0..n {
                let i = t % 16;
                let x = sample_von_mises(a.increment(i), k[0], &mut rng).value();
                if detect_ml(&SymbolObservation::from_angles(&[x]), &a, &k).unwrap().index_hat != i {
                    errors += 1;
                }
            }
            rates.push(errors as f64 / n as f64);
        }
        for w in rates.windows(2) {
            let se = (w[0] * (1.0 - w[0]) / n as f64).sqrt() + (w[1] * (1.0 - w[1]) / n as f64).sqrt();
            assert!(w[1] <= w[0] + 3.0 * se, "{rates:?}");
        }
    }

    #[test]
    fn union_bound_tracks_ser() {
        // small-noise identification sigma_eps^2 = 1 / kappa with unit weights
        let a = build_uniform_alphabet(16, &geom(2)).unwrap();
        let unit = uniform_kappas(1, 1.0).unwrap();
        for (s, kappa) in [200.0, 300.0, 400.0].into_iter().enumerate() {
            let bound = symbol_error_union_bound(&a, 1.0 / f64::sqrt(kappa), &unit).unwrap();
            let k = uniform_kappas(1, kappa).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(20 + s as u64);
            let n = 400_000;
            let mut errors = 0;
            for t in 0..n {
                let i = t % 16;
                let x = sample_von_mises(a.increment(i), k[0], &mut rng).value();
                if detect_ml(&SymbolObservation::from_angles(&[x]), &a, &k).unwrap().index_hat != i {
                    errors += 1;
                }
            }
            let ser = errors as f64 / n as f64;
            assert!(ser < 1e-2 && ser > bound / 2.0 && ser < bound * 2.0, "kappa {kappa}: {ser} vs {bound}");
        }
    }

    proptest! {
        #[test]
        fn rotation_covariance(d in -PI..PI, c in -PI..PI, m in 2usize..9) {
            let k = uniform_kappas(m - 1, 4.0).unwrap();
            let a = fuse_ml(&noiseless(d, m), &k, None).unwrap().delta_theta_hat;
            let b = fuse_ml(&noiseless(d + c, m), &k, None).unwrap().delta_theta_hat;
            prop_assert!(b.distance(a + WrappedAngle::wrapped(c)).abs() < 1e-9);
        }

        #[test]
        fn detection_ignores_magnitudes(d in -PI..PI, g in 1e-3f64..1e3) {
            let a = build_uniform_alphabet(16, &geom(4)).unwrap();
            let k = uniform_kappas(3, 2.0).unwrap();
            let mut obs = noiseless(d, 4);
            let before = detect_ml(&obs, &a, &k).unwrap();
            obs.raw_magnitudes.iter_mut().for_each(|v| *v *= g);
            prop_assert_eq!(detect_ml(&obs, &a, &k).unwrap(), before);
        }
    }
}

//! Von Mises (Tikhonov) sampling by the Best-Fisher wrapped-Cauchy
//! rejection scheme.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::manifold::{Concentration, WrappedAngle};
use crate::scalar::Real;

/// Above this concentration the law is indistinguishable from a wrapped
/// normal with variance `1/kappa`, and the rejection constants lose precision.
const NORMAL_LIMIT: f64 = 1e6;

/// Draws one angle from `VM(mean, kappa)`. `kappa = 0` is circular uniform,
/// `kappa = +inf` returns the mean.
pub fn sample_von_mises<T: Real, R: Rng + ?Sized>(
    mean: WrappedAngle<T>,
    kappa: Concentration<T>,
    rng: &mut R,
) -> WrappedAngle<T> {
    let k = kappa.value().as_f64();
    let mu = mean.value().as_f64();
    let pi = std::f64::consts::PI;

    if k.is_infinite() {
        return mean;
    }
    if k < 1e-8 {
        let u: f64 = rng.random();
        return WrappedAngle::wrapped(T::lit(pi * (2.0 * u - 1.0)));
    }
    if k > NORMAL_LIMIT {
        let z: f64 = StandardNormal.sample(rng);
        return WrappedAngle::wrapped(T::lit(mu + z / k.sqrt()));
    }

    let s = if k < 1e-5 {
        // second-order expansion of (1 + r^2) / (2 r)
        1.0 / k + k
    } else {
        let tau = 1.0 + (1.0 + 4.0 * k * k).sqrt();
        let r = (tau - (2.0 * tau).sqrt()) / (2.0 * k);
        (1.0 + r * r) / (2.0 * r)
    };

    let w = loop {
        let u: f64 = rng.random();
        let z = (pi * u).cos();
        let w = (1.0 + s * z) / (s + z);
        let y = k * (s - w);
        let v: f64 = rng.random();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            break w;
        }
    };
    let u: f64 = rng.random();
    let mut x = w.clamp(-1.0, 1.0).acos();
    if u < 0.5 {
        x = -x;
    }
    WrappedAngle::wrapped(T::lit(mu + x))
}

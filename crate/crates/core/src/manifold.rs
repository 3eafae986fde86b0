//! Angles on `(-pi, pi]`, points on the unit circle and concentration
//! parameters.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Reduces `x` to the canonical representative in `(-pi, pi]`.
///
/// `-pi` maps to `+pi`. Non-finite input is rejected.
pub fn wrap<T: Real>(x: T) -> Result<WrappedAngle<T>> {
    if !x.is_finite() {
        return Err(invalid(format!("cannot wrap non-finite angle {x}")));
    }
    Ok(WrappedAngle(wrap_unchecked(x)))
}

#[inline]
pub(crate) fn wrap_unchecked<T: Real>(x: T) -> T {
    let pi = T::PI();
    let mut r = x % T::two_pi();
    if r > pi {
        r = r - T::two_pi();
    } else if r <= -pi {
        r = r + T::two_pi();
    }
    r
}

/// An angle in radians, always in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WrappedAngle<T>(T);

impl<T: Real> WrappedAngle<T> {
    pub fn new(x: T) -> Result<Self> {
        wrap(x)
    }

    /// Wraps without the finiteness check. NaN stays NaN.
    #[inline]
    pub fn wrapped(x: T) -> Self {
        WrappedAngle(wrap_unchecked(x))
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// `wrap(self - other)`: the signed shortest rotation from `other` to `self`.
    #[inline]
    pub fn distance(self, other: Self) -> T {
        wrap_unchecked(self.0 - other.0)
    }
}

impl<T: Real> Add for WrappedAngle<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::wrapped(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for WrappedAngle<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::wrapped(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for WrappedAngle<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::wrapped(-self.0)
    }
}

impl<T: Real> fmt::Display for WrappedAngle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A unit-norm point on the circle, the normalized correlator output `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ManifoldPoint<T> {
    re: T,
    im: T,
}

impl<T: Real> ManifoldPoint<T> {
    #[inline]
    pub fn from_angle(a: T) -> Self {
        let (im, re) = a.sin_cos();
        ManifoldPoint { re, im }
    }

    /// Projects a nonzero vector onto the circle.
    pub fn from_components(re: T, im: T) -> Result<Self> {
        let r = re.hypot(im);
        if !(r > T::zero()) || !r.is_finite() {
            return Err(invalid(format!("cannot project ({re}, {im}) onto the unit circle")));
        }
        Ok(ManifoldPoint { re: re / r, im: im / r })
    }

    #[inline]
    pub fn re(self) -> T {
        self.re
    }

    #[inline]
    pub fn im(self) -> T {
        self.im
    }

    #[inline]
    pub fn angle(self) -> WrappedAngle<T> {
        WrappedAngle::wrapped(self.im.atan2(self.re))
    }

    #[inline]
    pub fn as_complex(self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }

    /// `Re{q e^{-j phi}} = cos(angle(q) - phi)`.
    #[inline]
    pub fn project(self, phi: T) -> T {
        let (s, c) = phi.sin_cos();
        self.re * c + self.im * s
    }
}

/// Von Mises concentration `kappa >= 0`. `+inf` stands for a noiseless baseline.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Concentration<T>(T);

impl<T: Real> Concentration<T> {
    pub fn new(kappa: T) -> Result<Self> {
        if kappa.is_nan() || kappa < T::zero() {
            return Err(invalid(format!("concentration must be >= 0, got {kappa}")));
        }
        Ok(Concentration(kappa))
    }

    pub fn zero() -> Self {
        Concentration(T::zero())
    }

    pub fn infinite() -> Self {
        Concentration(T::infinity())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// Builds `n` equal concentrations.
pub fn uniform_kappas<T: Real>(n: usize, kappa: T) -> Result<Vec<Concentration<T>>> {
    let k = Concentration::new(kappa)?;
    Ok(vec![k; n])
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    #[test]
    fn wrap_examples() {
        assert!((wrap(1.5 * PI).unwrap().value() + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap(-PI).unwrap().value(), PI);
        assert_eq!(wrap(PI).unwrap().value(), PI);
        assert!((wrap(0.1 + 4.0 * PI).unwrap().value() - 0.1).abs() < 1e-12);
        assert!(wrap(f64::NAN).is_err());
        assert!(wrap(f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_f32() {
        let w = wrap(-std::f32::consts::PI).unwrap().value();
        assert_eq!(w, std::f32::consts::PI);
    }

    #[test]
    fn point_is_unit_norm() {
        for i in 0..1000 {
            let a = -PI + 2.0 * PI * (i as f64 + 0.5) / 1000.0;
            let p = ManifoldPoint::from_angle(a);
            assert!((p.re().hypot(p.im()) - 1.0).abs() < 1e-12);
            assert!((p.angle().value() - a).abs() < 1e-12);
        }
        let p = ManifoldPoint::from_angle(PI);
        assert_eq!(p.angle().value(), PI);
    }

    #[test]
    fn from_components_rejects_origin() {
        assert!(ManifoldPoint::from_components(0.0, 0.0).is_err());
        let p = ManifoldPoint::<f64>::from_components(3.0, 4.0).unwrap();
        assert!((p.re() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn concentration_rejects_negative() {
        assert!(Concentration::new(-1e-9).is_err());
        assert!(Concentration::new(f64::NAN).is_err());
        assert!(Concentration::new(f64::INFINITY).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn wrap_idempotent_and_periodic(x in -1e4f64..1e4, k in -50i32..50) {
            let w = wrap(x).unwrap().value();
            prop_assert!(w > -PI && w <= PI);
            prop_assert_eq!(wrap(w).unwrap().value(), w);
            let shifted = wrap(x + 2.0 * PI * k as f64).unwrap();
            prop_assert!(shifted.distance(WrappedAngle::wrapped(w)).abs() < 1e-9);
        }

        #[test]
        fn angle_round_trip(a in -PI..=PI) {
            let a = wrap(a).unwrap().value();
            let back = ManifoldPoint::from_angle(a).angle();
            prop_assert!(back.distance(WrappedAngle::wrapped(a)).abs() < 1e-12);
        }
    }
}

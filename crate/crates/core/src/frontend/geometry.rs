use crate::error::{invalid, Error, Result};
use crate::manifold::WrappedAngle;
use crate::scalar::Real;

/// Receive uniform linear array. Only `d / lambda` enters the physics; the
/// carrier frequency is carried as metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ArrayGeometry<T> {
    pub num_rx: usize,
    pub spacing_over_lambda: T,
    pub carrier_hz: T,
}

impl<T: Real> ArrayGeometry<T> {
    pub fn new(num_rx: usize, spacing_over_lambda: T, carrier_hz: T) -> Result<Self> {
        let g = ArrayGeometry { num_rx, spacing_over_lambda, carrier_hz };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength array at 28 GHz.
    pub fn half_wavelength(num_rx: usize) -> Result<Self> {
        Self::new(num_rx, T::lit(0.5), T::lit(28e9))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_rx < 2 {
            return Err(invalid(format!("array needs at least 2 elements, got {}", self.num_rx)));
        }
        if !(self.spacing_over_lambda > T::zero()) || !self.spacing_over_lambda.is_finite() {
            return Err(invalid(format!("d/lambda must be > 0, got {}", self.spacing_over_lambda)));
        }
        Ok(())
    }

    pub fn num_baselines(&self) -> usize {
        self.num_rx - 1
    }

    /// `2 pi d / lambda`, the phase slope with respect to `sin(phi)`.
    pub fn spatial_gain(&self) -> T {
        T::two_pi() * self.spacing_over_lambda
    }

    /// Unwrapped `2 pi (d/lambda) sin(phi)`.
    pub fn raw_increment(&self, doa: T) -> Result<T> {
        check_sector(doa)?;
        Ok(self.spatial_gain() * doa.sin())
    }

    /// Inverse of the phase increment map; `None` when `|dtheta| > 2 pi d / lambda`.
    pub fn doa_from_increment(&self, delta_theta: T) -> Option<T> {
        let s = delta_theta / self.spatial_gain();
        if s.abs() > T::one() {
            None
        } else {
            Some(s.asin())
        }
    }
}

pub(crate) fn check_sector<T: Real>(doa: T) -> Result<()> {
    if !doa.is_finite() || doa.abs() >= T::FRAC_PI_2() {
        return Err(Error::OutOfSector(doa.as_f64()));
    }
    Ok(())
}

/// Per-element phase increment `wrap(2 pi (d/lambda) sin(doa))`.
pub fn doa_phase_increment<T: Real>(geom: &ArrayGeometry<T>, doa: T) -> Result<WrappedAngle<T>> {
    Ok(WrappedAngle::wrapped(geom.raw_increment(doa)?))
}

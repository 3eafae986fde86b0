//! Fisher information of the baseline phasors and the resulting bounds on
//! the phase increment and the direction of arrival.
//!
//! The additive budget treats baselines as conditionally independent. The
//! physical correlator shares antenna 1's noise across all of them, so the
//! bound is optimistic when that correlation matters (low SNR, many
//! baselines).

use crate::error::{invalid, Result};
use crate::frontend::{check_sector, ArrayGeometry};
use crate::manifold::Concentration;
use crate::scalar::Real;
use crate::special::rho_unchecked;

/// A variance bound. `Infinite` is the explicit zero-information sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Bound<T> {
    /// `1 / information`, with `Infinite` for zero information.
    pub fn from_information(info: T) -> Self {
        if info > T::zero() {
            Bound::Finite(T::one() / info)
        } else {
            Bound::Infinite
        }
    }

    /// The bound as a float, `+inf` for the sentinel.
    pub fn value(self) -> T {
        match self {
            Bound::Finite(v) => v,
            Bound::Infinite => T::infinity(),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn map(self, f: impl FnOnce(T) -> T) -> Self {
        match self {
            Bound::Finite(v) => Bound::Finite(f(v)),
            Bound::Infinite => Bound::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherBudget<T> {
    /// Index 0 is baseline `m = 2`.
    pub per_baseline: Vec<T>,
    pub total: T,
}

/// Bounds on the increment variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbDeltaTheta<T> {
    /// `1 / sum kappa_m (m-1)^2 rho(kappa_m)`.
    pub exact: Bound<T>,
    /// The `rho -> 1` form `1 / sum kappa_m (m-1)^2`.
    pub high_concentration: Bound<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport<T> {
    pub doa: T,
    pub var_delta_theta: Bound<T>,
    pub var_phi: Bound<T>,
    pub var_delta_theta_high_concentration: Bound<T>,
    pub var_phi_high_concentration: Bound<T>,
}

/// `kappa (m-1)^2 rho(kappa)` for baseline `m >= 2`.
pub fn fisher_per_baseline<T: Real>(m: usize, kappa: Concentration<T>) -> Result<T> {
    if m < 2 {
        return Err(invalid(format!("baseline index must be >= 2, got {m}")));
    }
    let k = kappa.value();
    if k == T::zero() {
        return Ok(T::zero());
    }
    let n = T::from_usize_lossy(m - 1);
    Ok(k * n * n * rho_unchecked(k))
}

/// Per-baseline information for `kappas[i]` at baseline `m = i + 2`, and the sum.
pub fn fisher_budget<T: Real>(kappas: &[Concentration<T>]) -> Result<FisherBudget<T>> {
    let per_baseline = kappas
        .iter()
        .enumerate()
        .map(|(i, &k)| fisher_per_baseline(i + 2, k))
        .collect::<Result<Vec<_>>>()?;
    let total = per_baseline.iter().fold(T::zero(), |a, &b| a + b);
    Ok(FisherBudget { per_baseline, total })
}

fn high_concentration_information<T: Real>(kappas: &[Concentration<T>]) -> T {
    kappas.iter().enumerate().fold(T::zero(), |a, (i, k)| {
        let n = T::from_usize_lossy(i + 1);
        a + k.value() * n * n
    })
}

pub fn crlb_delta_theta<T: Real>(kappas: &[Concentration<T>]) -> Result<CrlbDeltaTheta<T>> {
    if kappas.is_empty() {
        return Err(invalid("no baselines"));
    }
    let budget = fisher_budget(kappas)?;
    Ok(CrlbDeltaTheta {
        exact: Bound::from_information(budget.total),
        high_concentration: Bound::from_information(high_concentration_information(kappas)),
    })
}

/// Maps the increment bound through `dtheta = (2 pi d / lambda) sin(phi)`.
pub fn crlb_doa<T: Real>(kappas: &[Concentration<T>], geom: &ArrayGeometry<T>, phi: T) -> Result<CrlbReport<T>> {
    check_sector(phi)?;
    geom.validate()?;
    let dt = crlb_delta_theta(kappas)?;
    let slope = geom.spatial_gain() * phi.cos();
    let s2 = slope * slope;
    let to_phi = |b: Bound<T>| match b {
        Bound::Finite(v) if s2 > T::zero() => Bound::Finite(v / s2),
        Bound::Finite(_) => Bound::Infinite,
        Bound::Infinite => Bound::Infinite,
    };
    Ok(CrlbReport {
        doa: phi,
        var_delta_theta: dt.exact,
        var_phi: to_phi(dt.exact),
        var_delta_theta_high_concentration: dt.high_concentration,
        var_phi_high_concentration: to_phi(dt.high_concentration),
    })
}

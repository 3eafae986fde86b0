//! Spatial phase manifold receiver primitives.
//!
//! The receiver never touches an absolute carrier phase. Each antenna pair
//! `(1, m)` is correlated at RF, the in-phase/quadrature correlator outputs are
//! projected onto the unit circle, and every downstream stage (fusion,
//! detection, Fisher analysis, localization) works on those manifold points.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`). The aliases at
//! the bottom of this file fix the scalar to `f64`, which is what the
//! simulation harness uses.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frontend;
pub mod inference;
pub mod localization;
pub mod manifold;
pub mod scalar;
pub mod sensing;
pub mod special;
pub mod von_mises;

pub use error::{Error, Result};
pub use frontend::{
    calibrate_kappa, correlate_quadrature, doa_phase_increment, generate_observation_statistical,
    normalize_observation, synthesize_passband, ArrayGeometry, ChannelConfig, ChannelRealization,
    KappaCalibration, SymbolObservation, WaveformConfig, WaveformOracle,
};
pub use inference::{
    build_uniform_alphabet, detect_ml, fuse_ml, fuse_wls, pairwise_error_probability,
    DetectionResult, EstimateResult, GrayMap, SpatialAlphabet,
};
pub use localization::{
    bearing, bearing_gradient, peb, position_fim, sigma_phi_from_crlb, solve_wls, AnchorSet,
    BearingMeasurement, Point2, PositionEstimate, Sym2,
};
pub use manifold::{wrap, Concentration, ManifoldPoint, WrappedAngle};
pub use scalar::Real;
pub use sensing::{
    crlb_delta_theta, crlb_doa, fisher_budget, fisher_per_baseline, Bound, CrlbDeltaTheta,
    CrlbReport, FisherBudget,
};
pub use special::{bessel_i0, bessel_i0e, bessel_i1e, bessel_ratio_rho, q_function, rho_inverse};
pub use von_mises::sample_von_mises;

pub type Angle = WrappedAngle<f64>;
pub type Point = ManifoldPoint<f64>;
pub type Kappa = Concentration<f64>;
pub type Geometry = ArrayGeometry<f64>;
pub type Channel = ChannelConfig<f64>;
pub type Waveform = WaveformConfig<f64>;
pub type Observation = SymbolObservation<f64>;
pub type Alphabet = SpatialAlphabet<f64>;
pub type Position = Point2<f64>;

//! Bearing-only positioning from scheduled anchors: the bearing model, its
//! gradient, the position Fisher information and a wrapped-residual
//! Gauss-Newton solver.

use std::ops::{Add, Mul, Sub};

use crate::error::{invalid, Error, Result};
use crate::frontend::ArrayGeometry;
use crate::manifold::{Concentration, WrappedAngle};
use crate::scalar::Real;
use crate::sensing::{crlb_doa, Bound};

const MAX_ITER: usize = 50;
const STEP_TOL: f64 = 1e-9;
/// `det(J) <= COND_TOL * trace(J)^2` counts as singular.
const COND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// Counter-clockwise rotation about the origin.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Real> Sym2<T> {
    pub fn zero() -> Self {
        Sym2 { xx: T::zero(), xy: T::zero(), yy: T::zero() }
    }

    pub fn identity() -> Self {
        Sym2 { xx: T::one(), xy: T::zero(), yy: T::one() }
    }

    /// `w v v^T`.
    pub fn outer(v: Point2<T>, w: T) -> Self {
        Sym2 { xx: w * v.x * v.x, xy: w * v.x * v.y, yy: w * v.y * v.y }
    }

    pub fn det(&self) -> T {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    pub fn scale(&self, s: T) -> Self {
        Sym2 { xx: self.xx * s, xy: self.xy * s, yy: self.yy * s }
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> (T, T) {
        let half = T::lit(0.5);
        let mean = half * self.trace();
        let r = (half * (self.xx - self.yy)).hypot(self.xy);
        (mean - r, mean + r)
    }

    /// `true` when the matrix has no usable inverse.
    pub fn is_singular(&self) -> bool {
        let t = self.trace();
        !(t > T::zero()) || self.det() <= T::lit(COND_TOL) * t * t
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_singular() {
            return None;
        }
        let d = self.det();
        Some(Sym2 { xx: self.yy / d, xy: -self.xy / d, yy: self.xx / d })
    }

    pub fn mul_vec(&self, v: Point2<T>) -> Point2<T> {
        Point2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    fn to_array(self) -> [f64; 3] {
        [self.xx.as_f64(), self.xy.as_f64(), self.yy.as_f64()]
    }
}

impl<T: Real> Add for Sym2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Sym2 { xx: self.xx + o.xx, xy: self.xy + o.xy, yy: self.yy + o.yy }
    }
}

/// Known anchor positions and the order in which they transmit.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet<T> {
    pub positions: Vec<Point2<T>>,
    pub schedule: Vec<usize>,
}

impl<T: Real> AnchorSet<T> {
    pub fn new(positions: Vec<Point2<T>>, schedule: Vec<usize>) -> Result<Self> {
        if schedule.is_empty() {
            return Err(invalid("anchor schedule is empty"));
        }
        if let Some(&bad) = schedule.iter().find(|&&i| i >= positions.len()) {
            return Err(invalid(format!(
                "schedule references anchor {bad}, only {} anchors exist",
                positions.len()
            )));
        }
        Ok(AnchorSet { positions, schedule })
    }

    /// Every anchor once, in order.
    pub fn each_once(positions: Vec<Point2<T>>) -> Result<Self> {
        let schedule = (0..positions.len()).collect();
        Self::new(positions, schedule)
    }

    pub fn scheduled(&self) -> impl Iterator<Item = Point2<T>> + '_ {
        self.schedule.iter().map(|&i| self.positions[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingMeasurement<T> {
    pub phi_hat: WrappedAngle<T>,
    /// `sigma_phi^2`; `+inf` gives the measurement zero weight.
    pub variance: T,
    /// Index into [`AnchorSet::positions`].
    pub anchor_index: usize,
}

impl<T: Real> BearingMeasurement<T> {
    pub fn new(phi_hat: WrappedAngle<T>, variance: T, anchor_index: usize) -> Result<Self> {
        if !(variance > T::zero()) {
            return Err(invalid(format!("bearing variance must be > 0, got {variance}")));
        }
        Ok(BearingMeasurement { phi_hat, variance, anchor_index })
    }

    pub fn weight(&self) -> T {
        T::one() / self.variance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate<T> {
    pub p_hat: Point2<T>,
    pub fim: Sym2<T>,
    pub peb: Bound<T>,
    pub iterations: usize,
    pub converged: bool,
}

fn offset<T: Real>(p: Point2<T>, anchor: Point2<T>) -> Result<Point2<T>> {
    let d = p - anchor;
    if d.x == T::zero() && d.y == T::zero() {
        return Err(Error::DegenerateGeometry(format!(
            "position ({}, {}) coincides with an anchor",
            p.x, p.y
        )));
    }
    Ok(d)
}

/// `atan2(y - y_i, x - x_i)`.
pub fn bearing<T: Real>(p: Point2<T>, anchor: Point2<T>) -> Result<WrappedAngle<T>> {
    let d = offset(p, anchor)?;
    Ok(WrappedAngle::wrapped(d.y.atan2(d.x)))
}

/// `(-dy, dx) / r^2`, the derivative of [`bearing`] with respect to `p`.
pub fn bearing_gradient<T: Real>(p: Point2<T>, anchor: Point2<T>) -> Result<Point2<T>> {
    let d = offset(p, anchor)?;
    let r2 = d.dot(d);
    Ok(Point2::new(-d.y / r2, d.x / r2))
}

/// `J(p) = sum_k grad_k grad_k^T / sigma_k^2` over the schedule.
pub fn position_fim<T: Real>(p: Point2<T>, anchors: &AnchorSet<T>, variances: &[T]) -> Result<Sym2<T>> {
    if variances.len() != anchors.schedule.len() {
        return Err(invalid(format!(
            "{} variances for a schedule of {}",
            variances.len(),
            anchors.schedule.len()
        )));
    }
    let mut j = Sym2::zero();
    for (a, &v) in anchors.scheduled().zip(variances) {
        if !(v > T::zero()) {
            return Err(invalid(format!("bearing variance must be > 0, got {v}")));
        }
        let g = bearing_gradient(p, a)?;
        j = j + Sym2::outer(g, T::one() / v);
    }
    Ok(j)
}

/// `sqrt(tr(J^-1))`, or the infinite sentinel when `J` is singular.
pub fn peb<T: Real>(fim: &Sym2<T>) -> Bound<T> {
    match fim.inverse() {
        Some(inv) => Bound::Finite(inv.trace().sqrt()),
        None => Bound::Infinite,
    }
}

/// Bearing variance implied by the array CRLB at broadside-relative angle `phi`.
pub fn sigma_phi_from_crlb<T: Real>(kappas: &[Concentration<T>], geom: &ArrayGeometry<T>, phi: T) -> Result<T> {
    Ok(crlb_doa(kappas, geom, phi)?.var_phi.value())
}

fn measurement_fim<T: Real>(
    p: Point2<T>,
    meas: &[BearingMeasurement<T>],
    anchors: &AnchorSet<T>,
) -> Result<(Sym2<T>, Point2<T>, T)> {
    let mut j = Sym2::zero();
    let mut b = Point2::new(T::zero(), T::zero());
    let mut cost = T::zero();
    for m in meas {
        let w = m.weight();
        if w == T::zero() {
            continue;
        }
        let a = anchors.positions[m.anchor_index];
        let g = bearing_gradient(p, a)?;
        let r = m.phi_hat.distance(bearing(p, a)?);
        j = j + Sym2::outer(g, w);
        b = b + g * (w * r);
        cost = cost + w * r * r;
    }
    Ok((j, b, cost))
}

fn auto_init<T: Real>(meas: &[BearingMeasurement<T>], anchors: &AnchorSet<T>) -> Point2<T> {
    let mut order: Vec<&BearingMeasurement<T>> = meas.iter().collect();
    order.sort_by(|a, b| b.weight().partial_cmp(&a.weight()).unwrap_or(std::cmp::Ordering::Equal));
    if order.len() >= 2 {
        let (m1, m2) = (order[0], order[1]);
        let (a1, a2) = (anchors.positions[m1.anchor_index], anchors.positions[m2.anchor_index]);
        let (s1, c1) = m1.phi_hat.value().sin_cos();
        let (s2, c2) = m2.phi_hat.value().sin_cos();
        // a1 + t d1 = a2 + u d2
        let cross = c1 * s2 - s1 * c2;
        if cross.abs() > T::lit(1e-9) {
            let d = a2 - a1;
            let t = (d.x * s2 - d.y * c2) / cross;
            let p = a1 + Point2::new(c1, s1) * t;
            if p.x.is_finite() && p.y.is_finite() {
                return p;
            }
        }
    }
    let n = T::from_usize_lossy(meas.len().max(1));
    let sum = meas
        .iter()
        .fold(Point2::new(T::zero(), T::zero()), |acc, m| acc + anchors.positions[m.anchor_index]);
    sum * (T::one() / n)
}

/// Minimizes `sum_k w_k wrap(phi_hat_k - bearing(p, anchor_k))^2` by
/// Gauss-Newton with step halving. `init = None` intersects the two
/// highest-weight bearing lines, falling back to the anchor centroid.
pub fn solve_wls<T: Real>(
    measurements: &[BearingMeasurement<T>],
    anchors: &AnchorSet<T>,
    init: Option<Point2<T>>,
) -> Result<PositionEstimate<T>> {
    if measurements.is_empty() {
        return Err(invalid("no bearing measurements"));
    }
    if let Some(m) = measurements.iter().find(|m| m.anchor_index >= anchors.positions.len()) {
        return Err(invalid(format!("measurement references unknown anchor {}", m.anchor_index)));
    }
    let mut p = init.unwrap_or_else(|| auto_init(measurements, anchors));
    let mut iterations = 0;
    let mut converged = false;
    let (mut j, mut b, mut cost) = measurement_fim(p, measurements, anchors)?;
    while iterations < MAX_ITER {
        let inv = j.inverse().ok_or(Error::IllConditioned { fim: j.to_array() })?;
        let step = inv.mul_vec(b);
        iterations += 1;
        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..30 {
            let cand = p + step * scale;
            if let Ok(next) = measurement_fim(cand, measurements, anchors) {
                if next.2 <= cost * (T::one() + T::lit(1e-12)) {
                    accepted = Some((cand, next));
                    break;
                }
            }
            scale = scale * T::lit(0.5);
        }
        let Some((cand, next)) = accepted else {
            converged = true;
            break;
        };
        let moved = (cand - p).norm();
        p = cand;
        (j, b, cost) = next;
        if moved < T::lit(STEP_TOL) {
            converged = true;
            break;
        }
    }
    if j.is_singular() {
        return Err(Error::IllConditioned { fim: j.to_array() });
    }
    Ok(PositionEstimate { p_hat: p, fim: j, peb: peb(&j), iterations, converged })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn o() -> Point2<f64> {
        Point2::new(0.0, 0.0)
    }

    fn noiseless(p: Point2<f64>, anchors: &AnchorSet<f64>, var: f64) -> Vec<BearingMeasurement<f64>> {
        anchors
            .schedule
            .iter()
            .map(|&i| BearingMeasurement::new(bearing(p, anchors.positions[i]).unwrap(), var, i).unwrap())
            .collect()
    }

    #[test]
    fn bearing_examples() {
        assert_eq!(bearing(Point2::new(1.0, 0.0), o()).unwrap().value(), 0.0);
        assert!((bearing(Point2::new(0.0, 1.0), o()).unwrap().value() - PI / 2.0).abs() < 1e-15);
        assert!((bearing(Point2::new(-1.0, -1.0), o()).unwrap().value() + 3.0 * PI / 4.0).abs() < 1e-15);
        assert!(matches!(bearing(o(), o()), Err(Error::DegenerateGeometry(_))));
        assert_eq!(bearing_gradient(Point2::new(1.0, 0.0), o()).unwrap(), Point2::new(-0.0, 1.0));
    }

    #[test]
    fn fim_examples() {
        let r = 3.0;
        let s2 = 0.01;
        let anchors = AnchorSet::each_once(vec![Point2::new(r, 0.0), Point2::new(0.0, r)]).unwrap();
        let j = position_fim(o(), &anchors, &[s2, s2]).unwrap();
        let c = 1.0 / (s2 * r * r);
        assert!((j.xx - c).abs() < 1e-9 && j.xy.abs() < 1e-12 && (j.yy - c).abs() < 1e-9);
        match peb(&j) {
            Bound::Finite(v) => assert!((v - s2.sqrt() * r * 2f64.sqrt()).abs() < 1e-12),
            Bound::Infinite => panic!("singular"),
        }

        let one = AnchorSet::each_once(vec![Point2::new(2.0, 1.0)]).unwrap();
        let j1 = position_fim(o(), &one, &[s2]).unwrap();
        assert!(j1.det().abs() < 1e-9 * j1.trace().powi(2));
        assert_eq!(peb(&j1), Bound::Infinite);

        // moving one anchor from r to 2r along its bearing quarters its term
        let near = AnchorSet::each_once(vec![Point2::new(1.0, 2.0)]).unwrap();
        let far = AnchorSet::each_once(vec![Point2::new(2.0, 4.0)]).unwrap();
        let a = position_fim(o(), &near, &[1.0]).unwrap();
        let b = position_fim(o(), &far, &[1.0]).unwrap();
        assert!((a.xx / b.xx - 4.0).abs() < 1e-12);
    }

    #[test]
    fn peb_scales_with_variance() {
        let anchors = AnchorSet::each_once(vec![Point2::new(5.0, 0.0), Point2::new(1.0, 4.0), Point2::new(-3.0, -2.0)]).unwrap();
        let p = Point2::new(0.5, 0.2);
        let a: f64 = peb(&position_fim(p, &anchors, &[0.01, 0.02, 0.03]).unwrap()).value();
        let b = peb(&position_fim(p, &anchors, &[0.09, 0.18, 0.27]).unwrap()).value();
        assert!((b / a - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_noiseless() {
        let anchors = AnchorSet::each_once(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(5.0, 10.0)]).unwrap();
        let p = Point2::new(3.0, 4.0);
        let est = solve_wls(&noiseless(p, &anchors, 1e-4), &anchors, None).unwrap();
        assert!((est.p_hat - p).norm() < 1e-7);
        assert!(est.converged);
        let far = solve_wls(&noiseless(p, &anchors, 1e-4), &anchors, Some(Point2::new(8.0, 1.0))).unwrap();
        assert!((far.p_hat - p).norm() < 1e-7);
    }

    #[test]
    fn orthogonal_bearings_one_step() {
        let anchors = AnchorSet::each_once(vec![Point2::new(0.0, 0.0), Point2::new(5.0, -5.0)]).unwrap();
        let p = Point2::new(5.0, 0.0);
        let est = solve_wls(&noiseless(p, &anchors, 1e-4), &anchors, None).unwrap();
        assert!((est.p_hat - p).norm() < 1e-12);
        assert!(est.iterations <= 1);
    }

    #[test]
    fn collinear_bearings_are_ill_conditioned() {
        let anchors = AnchorSet::each_once(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).unwrap();
        let p = Point2::new(4.0, 0.0);
        let r = solve_wls(&noiseless(p, &anchors, 1e-4), &anchors, Some(Point2::new(3.0, 0.0)));
        assert!(matches!(r, Err(Error::IllConditioned { .. })), "{r:?}");
    }

    #[test]
    fn crlb_bridge() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let k = vec![Concentration::new(30.0).unwrap(); 3];
        let v = sigma_phi_from_crlb(&k, &g, 0.4).unwrap();
        assert_eq!(v, crlb_doa(&k, &g, 0.4).unwrap().var_phi.value());
        let big: Vec<_> = vec![Concentration::new(1e9).unwrap(); 15];
        let g16 = ArrayGeometry::half_wavelength(16).unwrap();
        let g2 = ArrayGeometry::half_wavelength(2).unwrap();
        let w16: f64 = 1.0 / sigma_phi_from_crlb(&big, &g16, 0.1).unwrap();
        let w2 = 1.0 / sigma_phi_from_crlb(&big[..1], &g2, 0.1).unwrap();
        assert!((w16 / w2 - 1240.0).abs() < 1e-4);
        assert!(1.0 / sigma_phi_from_crlb(&k, &g, PI / 2.0 - 1e-9).unwrap() < 1e-10);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            px in -50.0f64..50.0, py in -50.0f64..50.0,
            ax in -50.0f64..50.0, ay in -50.0f64..50.0,
        ) {
            let p = Point2::new(px, py);
            let a = Point2::new(ax, ay);
            prop_assume!((p - a).norm() > 0.5);
            let g = bearing_gradient(p, a).unwrap();
            let h = 1e-6;
            let fd = |dx: f64, dy: f64| {
                let plus = bearing(p + Point2::new(dx, dy), a).unwrap();
                let minus = bearing(p - Point2::new(dx, dy), a).unwrap();
                plus.distance(minus) / (2.0 * h)
            };
            let (gx, gy) = (fd(h, 0.0), fd(0.0, h));
            let scale = g.norm();
            prop_assert!((gx - g.x).abs() <= 1e-6 * scale && (gy - g.y).abs() <= 1e-6 * scale);
            prop_assert!((g.norm() - 1.0 / (p - a).norm()).abs() < 1e-12 / (p - a).norm());
        }

        #[test]
        fn adding_measurements_never_loses_information(
            pts in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0, 1e-4f64..1.0), 2..10),
        ) {
            let p = Point2::new(0.3, -0.7);
            let mut j = Sym2::zero();
            for (x, y, v) in pts {
                let a = Point2::new(x, y);
                if (a - p).norm() < 1e-3 { continue; }
                let next = j + Sym2::outer(bearing_gradient(p, a).unwrap(), 1.0 / v);
                let (l0, l1) = j.eigenvalues();
                let (m0, m1) = next.eigenvalues();
                prop_assert!(m0 >= l0 - 1e-9 * m1.abs() && m1 >= l1 - 1e-9 * m1.abs());
                prop_assert!(m0 >= -1e-9 * m1.abs());
                j = next;
            }
        }
    }
}

//! Upper half-space and unit-ball models of hyperbolic 3-space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::{sending_to_zero_infinity, ExtComplex, MoebiusMap, C64};

/// A point `(z, t)` of upper half-space, `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    #[serde(with = "crate::io::complex_pair")]
    pub z: C64,
    pub t: f64,
}

impl HalfSpacePoint {
    pub fn new(z: C64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidPoint(format!("({}, {}, {t})", z.re, z.im)));
        }
        Ok(HalfSpacePoint { z, t })
    }

    /// The point `j = (0, 1)`.
    pub fn j() -> Self {
        HalfSpacePoint { z: C64::new(0.0, 0.0), t: 1.0 }
    }
}

impl Default for HalfSpacePoint {
    fn default() -> Self {
        Self::j()
    }
}

/// A point of the closed unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BallPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = BallPoint { x, y, z };
        if !(p.norm_sqr() <= 1.0 + 1e-12) {
            return Err(Error::InvalidPoint(format!("({x}, {y}, {z}) lies outside the ball")));
        }
        Ok(p)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn is_boundary(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    pub fn dist(&self, o: &BallPoint) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

/// A geodesic of upper half-space given by its two boundary endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geodesic {
    pub p: ExtComplex,
    pub q: ExtComplex,
}

impl Geodesic {
    pub fn new(p: ExtComplex, q: ExtComplex) -> Result<Self> {
        if p.chordal_distance(q) <= 1e-14 {
            return Err(Error::DegenerateGeodesic);
        }
        Ok(Geodesic { p, q })
    }

    /// The vertical axis over 0.
    pub fn vertical() -> Self {
        Geodesic { p: ExtComplex::Finite(C64::new(0.0, 0.0)), q: ExtComplex::Infinity }
    }

    /// Axis of a loxodromic (or at least non-parabolic) map.
    pub fn axis_of(m: &MoebiusMap) -> Result<Self> {
        let fp = m.fixed_points()?;
        Geodesic::new(fp.z_minus, fp.z_plus)
    }
}

/// `d(p, q) = 2 asinh(sqrt(|dz|^2 + dt^2) / (2 sqrt(t1 t2)))`, the stable form of
/// `cosh d = (|dz|^2 + dt^2)/(2 t1 t2) + 1`.
pub fn hyp_distance(p: &HalfSpacePoint, q: &HalfSpacePoint) -> f64 {
    let num = ((p.z - q.z).norm_sqr() + (p.t - q.t).powi(2)).sqrt();
    2.0 * (num / (2.0 * (p.t * q.t).sqrt())).asinh()
}

/// Poincare extension of `m` to upper half-space.
pub fn apply_halfspace(m: &MoebiusMap, p: &HalfSpacePoint) -> HalfSpacePoint {
    let [a, b, c, d] = m.entries();
    let w = c * p.z + d;
    let t2 = p.t * p.t;
    let den = w.norm_sqr() + c.norm_sqr() * t2;
    let z = ((a * p.z + b) * w.conj() + a * c.conj() * t2) / den;
    HalfSpacePoint { z, t: p.t / den }
}

/// `d(x, m x)`, computed as `acosh(||h m h^{-1}||_F^2 / 2)` with `h` moving `x` to `j`.
pub fn displacement(m: &MoebiusMap, x: &HalfSpacePoint) -> f64 {
    let h = to_j(x);
    displacement_from_j(&m.conjugate_by(&h))
}

/// `d(j, m j)`.
pub fn displacement_from_j(m: &MoebiusMap) -> f64 {
    let f = m.frobenius_sqr() / 2.0;
    // acosh(1 + e) loses accuracy near e = 0; use the log1p form.
    let e = (f - 1.0).max(0.0);
    (e + (e * (e + 2.0)).sqrt()).ln_1p()
}

/// The map `z -> (z - x.z)/x.t`, which carries `x` to `j`.
pub fn to_j(x: &HalfSpacePoint) -> MoebiusMap {
    let s = x.t.sqrt();
    MoebiusMap::new(C64::from(1.0 / s), -x.z / s, C64::from(0.0), C64::from(s))
        .expect("translation-scaling is invertible")
}

/// Half-space to ball; `j` goes to the origin and boundary `infinity` to the north pole.
pub fn to_ball(p: &HalfSpacePoint) -> BallPoint {
    let (x1, x2, x3) = (p.z.re, p.z.im, p.t);
    let n2 = x1 * x1 + x2 * x2 + x3 * x3;
    let den = n2 + 2.0 * x3 + 1.0;
    BallPoint { x: 2.0 * x1 / den, y: 2.0 * x2 / den, z: (n2 - 1.0) / den }
}

/// Inverse of [`to_ball`] on the open ball.
pub fn to_halfspace(q: &BallPoint) -> Result<HalfSpacePoint> {
    let n2 = q.norm_sqr();
    let den = n2 - 2.0 * q.z + 1.0;
    let t = (1.0 - n2) / den;
    HalfSpacePoint::new(C64::new(2.0 * q.x / den, 2.0 * q.y / den), t)
}

/// Stereographic lift of the boundary, `pi^{-1}`, with `infinity -> (0, 0, 1)`.
pub fn sphere_from_plane(z: ExtComplex) -> BallPoint {
    match z {
        ExtComplex::Infinity => BallPoint { x: 0.0, y: 0.0, z: 1.0 },
        ExtComplex::Finite(z) => {
            let n = z.norm_sqr();
            BallPoint { x: 2.0 * z.re / (n + 1.0), y: 2.0 * z.im / (n + 1.0), z: (n - 1.0) / (n + 1.0) }
        }
    }
}

/// Stereographic projection `pi` from the north pole.
pub fn plane_from_sphere(xi: &BallPoint) -> ExtComplex {
    let den = 1.0 - xi.z;
    if den <= 0.0 {
        ExtComplex::Infinity
    } else {
        ExtComplex::new(C64::new(xi.x / den, xi.y / den))
    }
}

/// `|(pi^{-1})'(z)| = 2/(1 + |z|^2)`.
pub fn sphere_derivative(z: C64) -> f64 {
    2.0 / (1.0 + z.norm_sqr())
}

/// Hyperbolic distance from `x` to a geodesic.
pub fn point_geodesic_distance(x: &HalfSpacePoint, g: &Geodesic) -> Result<f64> {
    let h = sending_to_zero_infinity(g.p, g.q)?;
    let y = apply_halfspace(&h, x);
    Ok(vertical_axis_distance(&y))
}

/// Distance from `(z, t)` to the vertical axis over 0: `cosh d = sqrt(|z|^2 + t^2)/t`.
pub fn vertical_axis_distance(x: &HalfSpacePoint) -> f64 {
    (x.z.norm() / x.t).asinh()
}

/// Radius of the isometric sphere of `m` in the ball model, from
/// `1/rho = cosh d(o, axis) sinh(T/2)` with `o` the ball origin.
pub fn ball_isometric_sphere_radius(m: &MoebiusMap) -> Result<f64> {
    let (_, t) = m.multiplier_and_length()?;
    let d = point_geodesic_distance(&HalfSpacePoint::j(), &Geodesic::axis_of(m)?)?;
    Ok(1.0 / (d.cosh() * (t / 2.0).sinh()))
}

/// Distance between two geodesics; zero when they meet or share an endpoint.
///
/// After moving the first axis to `(0, infinity)` the second has endpoints
/// `u, v`; with `w = (u + v)/(v - u)` the distance satisfies
/// `cosh d = (|w - 1| + |w + 1|)/2`.
pub fn axis_distance(g1: &Geodesic, g2: &Geodesic) -> Result<f64> {
    let h = sending_to_zero_infinity(g1.p, g1.q)?;
    let (u, v) = match (h.apply(g2.p), h.apply(g2.q)) {
        (ExtComplex::Finite(u), ExtComplex::Finite(v)) => (u, v),
        _ => return Ok(0.0),
    };
    if u.norm() <= 1e-300 || v.norm() <= 1e-300 {
        return Ok(0.0);
    }
    if (v - u).norm() == 0.0 {
        return Err(Error::DegenerateGeodesic);
    }
    let w = (u + v) / (v - u);
    let ch = ((w - 1.0).norm() + (w + 1.0).norm()) / 2.0;
    Ok(ch.max(1.0).acosh())
}

/// Upper bound for the distance from the vertical axis to the geodesic with
/// endpoints `z_u, z_l`, using the point of that geodesic over their midpoint.
pub fn midpoint_axis_bound(z_u: C64, z_l: C64) -> f64 {
    let m = (z_u + z_l) / 2.0;
    let h = (z_u - z_l).norm() / 2.0;
    ((m.norm_sqr() + h * h).sqrt() / h).acosh()
}

/// Diagnostic for the bound `d(axis(0,inf), axis(z_+, z_-)) < log(delta/|z_+ - z_-|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBoundCheck {
    pub distance: f64,
    pub delta: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn axis_log_bound(z_plus: C64, z_minus: C64) -> Result<AxisBoundCheck> {
    let sep = (z_plus - z_minus).norm();
    let g = Geodesic::new(ExtComplex::Finite(z_minus), ExtComplex::Finite(z_plus))?;
    let distance = axis_distance(&Geodesic::vertical(), &g)?;
    let delta = 2.0 * ((z_plus + z_minus).norm_sqr() + sep * sep).sqrt();
    let bound = (delta / sep).ln();
    Ok(AxisBoundCheck { distance, delta, bound, holds: distance < bound })
}

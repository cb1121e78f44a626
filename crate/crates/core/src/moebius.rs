//! Moebius transformations of the Riemann sphere, stored as unit-determinant
//! 2x2 complex matrices.
//!
//! Every constructor normalizes the determinant to 1 and fixes the overall
//! sign so that `Re(tr) >= 0` (ties broken by `Im(tr) >= 0`, then by the first
//! nonzero entry). A matrix and its negation therefore produce identical
//! values, and all derived quantities are sign invariant.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Half-width of the parabolic band on `|tr^2 - 4|`.
pub const TOL_CLASS: f64 = 1e-9;

const IDENTITY_TOL: f64 = 1e-12;

const DET_EXACT: f64 = 1e-15;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square root on the principal branch, argument in `(-pi/2, pi/2]`.
///
/// `num_complex` honours the sign of a zero imaginary part, which would send
/// `-4 - 0i` to `-2i`; here every negative real maps to the upper half-axis.
pub fn principal_sqrt(z: C64) -> C64 {
    let z = if z.im == 0.0 { C64::new(z.re, 0.0) } else { z };
    z.sqrt()
}

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex {
    Finite(C64),
    Infinity,
}

impl ExtComplex {
    /// Non-finite inputs collapse to the point at infinity.
    pub fn new(z: C64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            ExtComplex::Finite(z)
        } else {
            ExtComplex::Infinity
        }
    }

    pub fn from_re_im(re: f64, im: f64) -> Self {
        Self::new(c(re, im))
    }

    pub fn finite(self) -> Option<C64> {
        match self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    /// `|z|`, with infinity counting as the largest value.
    pub fn modulus(self) -> f64 {
        match self {
            ExtComplex::Finite(z) => z.norm(),
            ExtComplex::Infinity => f64::INFINITY,
        }
    }

    /// Chordal distance on the unit sphere: `2|z-w| / sqrt((1+|z|^2)(1+|w|^2))`.
    pub fn chordal_distance(self, other: ExtComplex) -> f64 {
        match (self, other) {
            (ExtComplex::Finite(z), ExtComplex::Finite(w)) => {
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
            }
            (ExtComplex::Finite(z), ExtComplex::Infinity) | (ExtComplex::Infinity, ExtComplex::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (ExtComplex::Infinity, ExtComplex::Infinity) => 0.0,
        }
    }

    pub fn approx_eq(self, other: ExtComplex, tol: f64) -> bool {
        self.chordal_distance(other) <= tol
    }
}

impl From<C64> for ExtComplex {
    fn from(z: C64) -> Self {
        ExtComplex::new(z)
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtComplex::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            ExtComplex::Infinity => f.write_str("inf"),
        }
    }
}

/// Classification by the `tr^2` test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MapClass {
    Identity,
    Parabolic,
    Elliptic,
    Loxodromic,
}

/// The two fixed points of a non-identity map under both labelling
/// conventions, plus the multiplier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointPair {
    /// Quadratic-formula root taken with `-sqrt(tr^2 - 4)`.
    pub z_minus: ExtComplex,
    /// Quadratic-formula root taken with `+sqrt(tr^2 - 4)`.
    pub z_plus: ExtComplex,
    /// Smaller-modulus fixed point (ties broken lexicographically).
    pub z_lower: ExtComplex,
    pub z_upper: ExtComplex,
    /// Eigenvalue with `|lambda| >= 1`; `lambda + 1/lambda = tr`.
    pub multiplier: C64,
    /// Whether `z_plus` is the attracting fixed point.
    pub plus_attracting: bool,
}

impl FixedPointPair {
    pub fn attracting(&self) -> ExtComplex {
        if self.plus_attracting {
            self.z_plus
        } else {
            self.z_minus
        }
    }

    pub fn repelling(&self) -> ExtComplex {
        if self.plus_attracting {
            self.z_minus
        } else {
            self.z_plus
        }
    }

    /// Both pairings of the `+/-` labels against the `l/u` labels:
    /// `[(z_minus, z_plus), (z_plus, z_minus)]`.
    pub fn pairings(&self) -> [(ExtComplex, ExtComplex); 2] {
        [(self.z_minus, self.z_plus), (self.z_plus, self.z_minus)]
    }

    /// `|z_+ - z_-|`, infinite when a fixed point is at infinity.
    pub fn separation(&self) -> f64 {
        match (self.z_plus, self.z_minus) {
            (ExtComplex::Finite(p), ExtComplex::Finite(m)) => (p - m).norm(),
            _ => f64::INFINITY,
        }
    }
}

/// Isometric circle `|cz + d| = 1` of a map (or of its inverse).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IsometricCircle {
    #[serde(with = "crate::io::complex_pair")]
    pub center: C64,
    pub radius: f64,
}

#[derive(Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
}

impl fmt::Debug for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl MoebiusMap {
    /// Builds the map `z -> (az + b)/(cz + d)` from any invertible matrix,
    /// rescaling to determinant 1.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        let n = det.norm();
        let finite = [a, b, c, d].iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite || !(n > 1e-300) || !n.is_finite() {
            return Err(Error::Singular(n));
        }
        Ok(Self::rescaled(a, b, c, d, det))
    }

    /// Entries whose determinant is already 1 up to the rounding error of
    /// evaluating `ad - bc` are kept as they are, so that serialized maps
    /// round-trip bit for bit.
    fn rescaled(a: C64, b: C64, c: C64, d: C64, det: C64) -> Self {
        let rounding = 8.0 * f64::EPSILON * ((a * d).norm() + (b * c).norm());
        if (det - 1.0).norm() <= DET_EXACT.max(rounding) {
            return Self::canonical_sign(a, b, c, d);
        }
        let s = principal_sqrt(det);
        Self::canonical_sign(a / s, b / s, c / s, d / s)
    }

    /// Convenience constructor from real entries.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(C64::from(a), C64::from(b), C64::from(c), C64::from(d))
    }

    /// Wraps entries that already have unit determinant, only fixing the sign.
    pub(crate) fn from_unit_det(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self::canonical_sign(a, b, c, d)
    }

    fn canonical_sign(a: C64, b: C64, c: C64, d: C64) -> Self {
        let tr = a + d;
        let positive = |z: C64| z.re > 0.0 || (z.re == 0.0 && z.im > 0.0);
        let zero = |z: C64| z.re == 0.0 && z.im == 0.0;
        let keep = if !zero(tr) {
            positive(tr)
        } else {
            [a, b, c, d].into_iter().find(|z| !zero(*z)).map(positive).unwrap_or(true)
        };
        if keep {
            MoebiusMap { a, b, c, d }
        } else {
            MoebiusMap { a: -a, b: -b, c: -c, d: -d }
        }
    }

    pub fn identity() -> Self {
        MoebiusMap { a: C64::from(1.0), b: C64::from(0.0), c: C64::from(0.0), d: C64::from(1.0) }
    }

    /// `diag(lambda, 1/lambda)`, i.e. `z -> lambda^2 z`.
    pub fn diagonal(lambda: C64) -> Result<Self> {
        Self::new(lambda, C64::from(0.0), C64::from(0.0), lambda.inv())
    }

    /// The similarity `z -> s z`.
    pub fn scaling(s: C64) -> Result<Self> {
        Self::new(s, C64::from(0.0), C64::from(0.0), C64::from(1.0))
    }

    pub fn translation(t: C64) -> Self {
        Self::from_unit_det(C64::from(1.0), t, C64::from(0.0), C64::from(1.0))
    }

    pub fn a(&self) -> C64 {
        self.a
    }
    pub fn b(&self) -> C64 {
        self.b
    }
    pub fn c(&self) -> C64 {
        self.c
    }
    pub fn d(&self) -> C64 {
        self.d
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// Sum of squared entry moduli; `2 cosh d(j, m j)` for the point `j = (0, 1)`.
    pub fn frobenius_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// `self ∘ other`, with the raw product entries.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let (a, b, c, d) = raw_product(self, other);
        Self::from_unit_det(a, b, c, d)
    }

    pub fn inverse(&self) -> MoebiusMap {
        Self::canonical_sign(self.d, -self.b, -self.c, self.a)
    }

    /// `h ∘ self ∘ h^{-1}`.
    pub fn conjugate_by(&self, h: &MoebiusMap) -> MoebiusMap {
        h.compose(self).compose(&h.inverse())
    }

    /// Integer power by repeated squaring; negative powers use the inverse.
    pub fn pow(&self, n: i64) -> MoebiusMap {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = MoebiusMap::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        match z {
            ExtComplex::Infinity => {
                if self.c == C64::from(0.0) {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::new(self.a / self.c)
                }
            }
            ExtComplex::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                if den == C64::from(0.0) {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::new(num / den)
                }
            }
        }
    }

    pub fn apply_finite(&self, z: C64) -> ExtComplex {
        self.apply(ExtComplex::Finite(z))
    }

    /// `|m'(z)| = 1/|cz + d|^2`.
    pub fn derivative_modulus(&self, z: C64) -> f64 {
        1.0 / (self.c * z + self.d).norm_sqr()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let one = C64::from(1.0);
        (self.a - one).norm() <= tol && self.b.norm() <= tol && self.c.norm() <= tol && (self.d - one).norm() <= tol
    }

    /// Largest entrywise difference, minimized over the sign ambiguity.
    pub fn distance(&self, other: &MoebiusMap) -> f64 {
        let plus = self.entries().iter().zip(other.entries()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let minus = self.entries().iter().zip(other.entries()).map(|(x, y)| (x + y).norm()).fold(0.0, f64::max);
        plus.min(minus)
    }

    pub fn approx_eq(&self, other: &MoebiusMap, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    pub fn classify(&self) -> MapClass {
        if self.is_identity(IDENTITY_TOL) {
            return MapClass::Identity;
        }
        let t2 = self.trace() * self.trace();
        if (t2 - 4.0).norm() <= TOL_CLASS {
            MapClass::Parabolic
        } else if t2.im.abs() <= TOL_CLASS && t2.re >= 0.0 && t2.re < 4.0 - TOL_CLASS {
            MapClass::Elliptic
        } else {
            MapClass::Loxodromic
        }
    }

    pub fn is_loxodromic(&self) -> bool {
        self.classify() == MapClass::Loxodromic
    }

    /// Fixed points under both conventions, principal branch for the root.
    pub fn fixed_points(&self) -> Result<FixedPointPair> {
        if self.classify() == MapClass::Identity {
            return Err(Error::IdentityMap);
        }
        let tr = self.trace();
        let s = principal_sqrt(tr * tr - 4.0);
        let amd = self.a - self.d;
        let (z_plus, z_minus) = if self.c == C64::from(0.0) {
            let finite =
                if amd == C64::from(0.0) { ExtComplex::Infinity } else { ExtComplex::new(self.b / (self.d - self.a)) };
            if (amd + s).norm() >= (amd - s).norm() {
                (ExtComplex::Infinity, finite)
            } else {
                (finite, ExtComplex::Infinity)
            }
        } else {
            // The larger-magnitude numerator is cancellation free; the other
            // root comes from the product of roots, -b/c.
            let two_c = self.c * 2.0;
            let np = amd + s;
            let nm = amd - s;
            if np.norm() >= nm.norm() {
                let zp = np / two_c;
                let zm = if zp == C64::from(0.0) { nm / two_c } else { -self.b / self.c / zp };
                (ExtComplex::new(zp), ExtComplex::new(zm))
            } else {
                let zm = nm / two_c;
                let zp = if zm == C64::from(0.0) { np / two_c } else { -self.b / self.c / zm };
                (ExtComplex::new(zp), ExtComplex::new(zm))
            }
        };
        let mu_plus = (tr + s) / 2.0;
        let mu_minus = (tr - s) / 2.0;
        let plus_attracting = mu_plus.norm() > mu_minus.norm();
        let multiplier = if plus_attracting { mu_plus } else { mu_minus };
        let (z_lower, z_upper) = order_by_modulus(z_minus, z_plus);
        Ok(FixedPointPair { z_minus, z_plus, z_lower, z_upper, multiplier, plus_attracting })
    }

    /// `(zeta, eta) = (a/c, -d/c)`, the isometric-circle centers of the
    /// inverse and of the map itself.
    pub fn zeta_eta(&self) -> Result<(C64, C64)> {
        if self.c == C64::from(0.0) {
            return Err(Error::InfiniteFixedPoint);
        }
        Ok((self.a / self.c, -self.d / self.c))
    }

    pub fn zeta(&self) -> Result<C64> {
        self.zeta_eta().map(|(z, _)| z)
    }

    pub fn eta(&self) -> Result<C64> {
        self.zeta_eta().map(|(_, e)| e)
    }

    /// `(circle of self, circle of self^{-1})`, both of radius `1/|c|`.
    pub fn isometric_circles(&self) -> Result<(IsometricCircle, IsometricCircle)> {
        let (zeta, eta) = self.zeta_eta()?;
        let radius = 1.0 / self.c.norm();
        Ok((IsometricCircle { center: eta, radius }, IsometricCircle { center: zeta, radius }))
    }

    /// Multiplier `lambda` with `|lambda| > 1` and translation length `2 ln|lambda|`.
    pub fn multiplier_and_length(&self) -> Result<(C64, f64)> {
        if !self.is_loxodromic() {
            return Err(Error::NotLoxodromic);
        }
        let tr = self.trace();
        let s = principal_sqrt(tr * tr - 4.0);
        let p = (tr + s) / 2.0;
        let m = (tr - s) / 2.0;
        let lambda = if p.norm() >= m.norm() { p } else { m };
        Ok((lambda, 2.0 * lambda.norm().ln()))
    }

    pub fn translation_length(&self) -> Result<f64> {
        self.multiplier_and_length().map(|(_, t)| t)
    }

    /// Maps the fixed points `z_minus -> 0` and `z_plus -> infinity`.
    pub fn standardizer(&self) -> Result<MoebiusMap> {
        let fp = self.fixed_points()?;
        sending_to_zero_infinity(fp.z_minus, fp.z_plus)
    }
}

/// A map sending `p -> 0` and `q -> infinity`, normalized so that in the
/// two-finite case it is `(z - p)/(z - q)` up to the determinant scale.
pub fn sending_to_zero_infinity(p: ExtComplex, q: ExtComplex) -> Result<MoebiusMap> {
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    match (p, q) {
        (ExtComplex::Finite(p), ExtComplex::Finite(q)) => MoebiusMap::new(one, -p, one, -q),
        (ExtComplex::Finite(p), ExtComplex::Infinity) => Ok(MoebiusMap::translation(-p)),
        (ExtComplex::Infinity, ExtComplex::Finite(q)) => MoebiusMap::new(zero, one, one, -q),
        (ExtComplex::Infinity, ExtComplex::Infinity) => Err(Error::DegenerateGeodesic),
    }
}

fn order_by_modulus(x: ExtComplex, y: ExtComplex) -> (ExtComplex, ExtComplex) {
    let key = |z: ExtComplex| match z {
        ExtComplex::Finite(w) => (w.norm(), w.re, w.im),
        ExtComplex::Infinity => (f64::INFINITY, 0.0, 0.0),
    };
    let (kx, ky) = (key(x), key(y));
    let x_first = match kx.0.partial_cmp(&ky.0) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => (kx.1, kx.2) <= (ky.1, ky.2),
    };
    if x_first {
        (x, y)
    } else {
        (y, x)
    }
}

#[inline]
pub(crate) fn raw_product(m: &MoebiusMap, n: &MoebiusMap) -> (C64, C64, C64, C64) {
    (m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d)
}

impl Mul for MoebiusMap {
    type Output = MoebiusMap;
    fn mul(self, rhs: MoebiusMap) -> MoebiusMap {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a MoebiusMap> for &'a MoebiusMap {
    type Output = MoebiusMap;
    fn mul(self, rhs: &'a MoebiusMap) -> MoebiusMap {
        self.compose(rhs)
    }
}

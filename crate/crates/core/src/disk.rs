//! Round disks on the Riemann sphere: closed-up discs, disc complements and
//! half-planes.
//!
//! Internally every disk is the negative set of a Hermitian form
//! `Q(z) = A|z|^2 + 2 Re(conj(B) z) + D`, which makes Moebius images exact:
//! the image of `{Q < 0}` under `M` is the negative set of `(M^{-1})^* H M^{-1}`.

use serde::{Deserialize, Serialize};

use crate::moebius::{c, ExtComplex, MoebiusMap, C64};

/// Which complementary component of a circle is the disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Disk {
    Round {
        #[serde(with = "crate::io::complex_pair")]
        center: C64,
        radius: f64,
        side: Side,
    },
    /// `{z : <z, normal> > offset}` with `normal` of unit length.
    HalfPlane {
        #[serde(with = "crate::io::complex_pair")]
        normal: C64,
        offset: f64,
    },
}

/// Hermitian form `[[A, B], [conj B, D]]`, disk = `{Q < 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianForm {
    pub a: f64,
    pub b: C64,
    pub d: f64,
}

impl HermitianForm {
    pub fn eval(&self, z: C64) -> f64 {
        self.a * z.norm_sqr() + 2.0 * (self.b.conj() * z).re + self.d
    }

    /// Value at infinity, up to a positive factor: the sign of `A`.
    pub fn at_infinity(&self) -> f64 {
        self.a
    }

    /// Pulls the form back by `n`: the form of `{Q(n z) < 0}`, i.e. `n^* H n`.
    pub fn pullback(&self, n: &MoebiusMap) -> HermitianForm {
        let [p, q, r, s] = n.entries();
        let (a, b, d) = (C64::from(self.a), self.b, C64::from(self.d));
        // H n, then n^* (H n)
        let h11 = a * p + b * r;
        let h12 = a * q + b * s;
        let h21 = b.conj() * p + d * r;
        let h22 = b.conj() * q + d * s;
        let na = p.conj() * h11 + r.conj() * h21;
        let nb = p.conj() * h12 + r.conj() * h22;
        let nd = q.conj() * h12 + s.conj() * h22;
        HermitianForm { a: na.re, b: nb, d: nd.re }
    }

    fn scaled(&self) -> HermitianForm {
        let m = self.a.abs().max(self.b.norm()).max(self.d.abs());
        if m > 0.0 && m.is_finite() {
            HermitianForm { a: self.a / m, b: self.b / m, d: self.d / m }
        } else {
            *self
        }
    }

    /// Converts back to a geometric disk. Forms with `|A|` negligible
    /// relative to the other coefficients become half-planes.
    pub fn to_disk(&self) -> Disk {
        let h = self.scaled();
        if h.a.abs() <= 1e-14 {
            let bn = h.b.norm();
            let normal = -h.b / bn;
            return Disk::HalfPlane { normal, offset: h.d / (2.0 * bn) };
        }
        let center = -h.b / h.a;
        let radius = ((h.b.norm_sqr() - h.a * h.d).max(0.0)).sqrt() / h.a.abs();
        let side = if h.a > 0.0 { Side::In } else { Side::Out };
        Disk::Round { center, radius, side }
    }
}

impl Disk {
    pub fn round(center: C64, radius: f64) -> Disk {
        Disk::Round { center, radius, side: Side::In }
    }

    pub fn round_out(center: C64, radius: f64) -> Disk {
        Disk::Round { center, radius, side: Side::Out }
    }

    pub fn half_plane(normal: C64, offset: f64) -> Disk {
        let n = normal.norm();
        Disk::HalfPlane { normal: normal / n, offset: offset / n }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Disk::Round { center, radius, .. } => {
                radius > 0.0 && radius.is_finite() && center.re.is_finite() && center.im.is_finite()
            }
            Disk::HalfPlane { normal, offset } => (normal.norm() - 1.0).abs() < 1e-9 && offset.is_finite(),
        }
    }

    pub fn form(&self) -> HermitianForm {
        match *self {
            Disk::Round { center, radius, side } => {
                let f = HermitianForm { a: 1.0, b: -center, d: center.norm_sqr() - radius * radius };
                match side {
                    Side::In => f,
                    Side::Out => HermitianForm { a: -f.a, b: -f.b, d: -f.d },
                }
            }
            Disk::HalfPlane { normal, offset } => HermitianForm { a: 0.0, b: -normal / 2.0, d: offset },
        }
    }

    /// The other component of the sphere minus the boundary circle.
    pub fn complement(&self) -> Disk {
        match *self {
            Disk::Round { center, radius, side } => Disk::Round {
                center,
                radius,
                side: match side {
                    Side::In => Side::Out,
                    Side::Out => Side::In,
                },
            },
            Disk::HalfPlane { normal, offset } => Disk::HalfPlane { normal: -normal, offset: -offset },
        }
    }

    /// Open-disk membership.
    pub fn contains(&self, z: ExtComplex) -> bool {
        self.signed_value(z) < 0.0
    }

    /// Signed Euclidean distance to the boundary, negative inside.
    /// At infinity returns `-inf` (inside) or `+inf` (outside), or 0 for a
    /// half-plane.
    pub fn signed_value(&self, z: ExtComplex) -> f64 {
        match (*self, z) {
            (Disk::Round { side, .. }, ExtComplex::Infinity) => match side {
                Side::In => f64::INFINITY,
                Side::Out => f64::NEG_INFINITY,
            },
            (Disk::HalfPlane { .. }, ExtComplex::Infinity) => 0.0,
            (Disk::Round { center, radius, side }, ExtComplex::Finite(z)) => {
                let s = (z - center).norm() - radius;
                match side {
                    Side::In => s,
                    Side::Out => -s,
                }
            }
            (Disk::HalfPlane { normal, offset }, ExtComplex::Finite(z)) => offset - (z.conj() * normal).re,
        }
    }

    /// Euclidean distance from a finite point to the closed disk (0 inside).
    pub fn distance_to(&self, z: C64) -> f64 {
        self.signed_value(ExtComplex::Finite(z)).max(0.0)
    }

    /// Image of the disk under `m`.
    pub fn image(&self, m: &MoebiusMap) -> Disk {
        self.form().pullback(&m.inverse()).to_disk()
    }

    /// A point strictly inside the disk.
    pub fn interior_point(&self) -> ExtComplex {
        match *self {
            Disk::Round { center, side: Side::In, .. } => ExtComplex::Finite(center),
            Disk::Round { .. } => ExtComplex::Infinity,
            Disk::HalfPlane { normal, offset } => ExtComplex::Finite(normal * (offset + 1.0)),
        }
    }

    /// `n` evenly spaced points on the boundary (half-planes use a window
    /// of half-width `span` around the foot of the normal).
    pub fn boundary_points(&self, n: usize, span: f64) -> Vec<C64> {
        match *self {
            Disk::Round { center, radius, .. } => {
                (0..n).map(|k| center + C64::from_polar(radius, k as f64 * std::f64::consts::TAU / n as f64)).collect()
            }
            Disk::HalfPlane { normal, offset } => {
                let foot = normal * offset;
                let dir = normal * c(0.0, 1.0);
                (0..n)
                    .map(|k| {
                        let s = if n > 1 { -span + 2.0 * span * k as f64 / (n - 1) as f64 } else { 0.0 };
                        foot + dir * s
                    })
                    .collect()
            }
        }
    }

    /// Geometric difference between two disks: `|dc| + |dr|` for round
    /// disks, `|dn| + |do|` for half-planes, infinite if the kinds differ.
    pub fn residual(&self, other: &Disk) -> f64 {
        match (*self, *other) {
            (Disk::Round { center: c1, radius: r1, side: s1 }, Disk::Round { center: c2, radius: r2, side: s2 })
                if s1 == s2 =>
            {
                (c1 - c2).norm() + (r1 - r2).abs()
            }
            (Disk::HalfPlane { normal: n1, offset: o1 }, Disk::HalfPlane { normal: n2, offset: o2 }) => {
                (n1 - n2).norm() + (o1 - o2).abs()
            }
            _ => f64::INFINITY,
        }
    }

    /// Signed gap between two disks: positive when their closures are
    /// disjoint. Configurations in which both disks contain a neighbourhood
    /// of infinity (or two non-opposite half-planes) are `-inf`.
    pub fn margin(&self, other: &Disk) -> f64 {
        use Disk::*;
        match (*self, *other) {
            (Round { center: c1, radius: r1, side: Side::In }, Round { center: c2, radius: r2, side: Side::In }) => {
                (c1 - c2).norm() - r1 - r2
            }
            (Round { center: c1, radius: r1, side: Side::In }, Round { center: c2, radius: r2, side: Side::Out })
            | (Round { center: c2, radius: r2, side: Side::Out }, Round { center: c1, radius: r1, side: Side::In }) => {
                r2 - (c1 - c2).norm() - r1
            }
            (Round { center, radius, side: Side::In }, HalfPlane { normal, offset })
            | (HalfPlane { normal, offset }, Round { center, radius, side: Side::In }) => {
                offset - (center.conj() * normal).re - radius
            }
            (HalfPlane { normal: n1, offset: o1 }, HalfPlane { normal: n2, offset: o2 })
                if (n1 + n2).norm() <= 1e-12 =>
            {
                o1 + o2
            }
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Circle through three distinct finite points, `None` if they are collinear.
pub fn circle_through(p: C64, q: C64, r: C64) -> Option<(C64, f64)> {
    let (b, cc) = (q - p, r - p);
    let den = 2.0 * (b.re * cc.im - b.im * cc.re);
    if den.abs() <= 1e-14 * b.norm() * cc.norm() {
        return None;
    }
    let ux = (cc.im * b.norm_sqr() - b.im * cc.norm_sqr()) / den;
    let uy = (b.re * cc.norm_sqr() - cc.re * b.norm_sqr()) / den;
    let u = C64::new(ux, uy);
    Some((p + u, u.norm()))
}

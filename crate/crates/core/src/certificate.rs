//! Explicit disjoint circles for a single loxodromic map.
//!
//! In the frame where the fixed points are `0` and `infinity` the circles
//! `|x| = 1/|lambda|` and `|x| = |lambda|` are paired by the map. They are
//! carried back by `theta ∘ psi ∘ phi` with `phi(x) = (x-1)/(x+1)`,
//! `psi(x) = x + (z_+ + z_-)/(z_+ - z_-)` and `theta(x) = (z_+ - z_-) x / 2`,
//! which sends `0 -> z_-` and `infinity -> z_+`.

use serde::{Deserialize, Serialize};

use crate::disk::Disk;
use crate::error::{Error, Result};
use crate::moebius::{c, ExtComplex, MoebiusMap, C64};

pub const DEFAULT_PROBES: usize = 64;

/// Absolute slack subtracted from computed margins.
pub const CONSERVATIVE_SLACK: f64 = 1e-7;

/// Which fixed point a certificate disk contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedPointTag {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateCircle {
    #[serde(with = "crate::io::complex_pair")]
    pub center: C64,
    pub radius: f64,
    pub contains: FixedPointTag,
}

impl CertificateCircle {
    pub fn disk(&self) -> Disk {
        Disk::round(self.center, self.radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionChain {
    pub phi: MoebiusMap,
    pub psi: MoebiusMap,
    pub theta: MoebiusMap,
    /// `theta ∘ psi ∘ phi`.
    pub total: MoebiusMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateMargins {
    /// `|o - o'| - r - r'`.
    pub disjoint: f64,
    /// Smallest clearance of `gamma(interior probe)` from the partner disk.
    pub mapping: f64,
    /// Largest deviation of `gamma(boundary probe)` from the partner circle.
    pub boundary_residual: f64,
    /// `|(r + r') - |z_+ - z_-| 2|lambda|/(|lambda|^2 - 1)| / (r + r')`.
    pub formula_residual: f64,
    pub contains_fixed_points: bool,
    /// `min(disjoint, mapping) - CONSERVATIVE_SLACK`.
    pub conservative: f64,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificatePair {
    pub map: MoebiusMap,
    pub z_plus: ExtComplex,
    pub z_minus: ExtComplex,
    #[serde(with = "crate::io::complex_pair")]
    pub multiplier: C64,
    /// Disk around the repelling fixed point; the map sends it off `attracting`.
    pub repelling: CertificateCircle,
    pub attracting: CertificateCircle,
    pub chain: ConstructionChain,
    /// Centers from the closed-form expression
    /// `(z_+ - z_-) x_1 / 2 + (z_+ + z_-)/2` with `x_1 = -/+ (|l|^2+1)/(|l|^2-1)`,
    /// kept for comparison with the exact images.
    #[serde(with = "pair_of_complex")]
    pub closed_form_centers: [C64; 2],
    pub margins: CertificateMargins,
}

mod pair_of_complex {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64; 2], s: S) -> Result<S::Ok, S::Error> {
        [[v[0].re, v[0].im], [v[1].re, v[1].im]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[C64; 2], D::Error> {
        let v = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok([C64::new(v[0][0], v[0][1]), C64::new(v[1][0], v[1][1])])
    }
}

/// `|z_+ - z_-| 2|lambda|/(|lambda|^2 - 1)`.
pub fn radius_sum_formula(separation: f64, lambda_abs: f64) -> f64 {
    separation * 2.0 * lambda_abs / (lambda_abs * lambda_abs - 1.0)
}

/// Builds the certificate for `gamma`.
pub fn disjoint_pair(gamma: &MoebiusMap) -> Result<CertificatePair> {
    disjoint_pair_with(gamma, DEFAULT_PROBES)
}

pub fn disjoint_pair_with(gamma: &MoebiusMap, probes: usize) -> Result<CertificatePair> {
    if !gamma.is_loxodromic() {
        return Err(Error::NotLoxodromic);
    }
    let fp = gamma.fixed_points()?;
    let (zp, zm) = match (fp.z_plus, fp.z_minus) {
        (ExtComplex::Finite(p), ExtComplex::Finite(m)) => (p, m),
        _ => return Err(Error::FixedPointAtInfinity),
    };
    let lam = fp.multiplier;
    let l = lam.norm();
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    let phi = MoebiusMap::new(one, -one, one, one)?;
    let psi = MoebiusMap::translation((zp + zm) / (zp - zm));
    let theta = MoebiusMap::scaling((zp - zm) / 2.0)?;
    let total = theta.compose(&psi).compose(&phi);

    // In the standard frame the repelling fixed point is 0 exactly when z_+ attracts.
    let small = Disk::round(zero, 1.0 / l).image(&total);
    let large = Disk::round_out(zero, l).image(&total);
    let (rep_disk, att_disk) = if fp.plus_attracting { (small, large) } else { (large, small) };
    let circle = |d: Disk| -> Result<(C64, f64)> {
        match d {
            Disk::Round { center, radius, side: crate::disk::Side::In } => Ok((center, radius)),
            other => Err(Error::InvalidArgument(format!("certificate disk is unbounded: {other:?}"))),
        }
    };
    let (rc, rr) = circle(rep_disk)?;
    let (ac, ar) = circle(att_disk)?;
    let tag_of = |center: C64, radius: f64| {
        if (zp - center).norm() < radius {
            FixedPointTag::Plus
        } else {
            FixedPointTag::Minus
        }
    };
    let repelling = CertificateCircle { center: rc, radius: rr, contains: tag_of(rc, rr) };
    let attracting = CertificateCircle { center: ac, radius: ar, contains: tag_of(ac, ar) };

    let x1 = (l * l + 1.0) / (l * l - 1.0);
    let closed = |x: f64| (zp - zm) * x / 2.0 + (zp + zm) / 2.0;
    let closed_form_centers = [closed(-x1), closed(x1)];

    let mut cert = CertificatePair {
        map: *gamma,
        z_plus: fp.z_plus,
        z_minus: fp.z_minus,
        multiplier: lam,
        repelling,
        attracting,
        chain: ConstructionChain { phi, psi, theta, total },
        closed_form_centers,
        margins: CertificateMargins {
            disjoint: 0.0,
            mapping: 0.0,
            boundary_residual: 0.0,
            formula_residual: 0.0,
            contains_fixed_points: false,
            conservative: 0.0,
            verified: false,
        },
    };
    cert.margins = verify_certificate(&cert, probes);
    Ok(cert)
}

/// Recomputes every check from the map and the two circles alone.
///
/// Uses `probes` boundary points and `probes / 4` interior points.
pub fn verify_certificate(cert: &CertificatePair, probes: usize) -> CertificateMargins {
    let g = &cert.map;
    let (o, r) = (cert.repelling.center, cert.repelling.radius);
    let (o2, r2) = (cert.attracting.center, cert.attracting.radius);
    let disjoint = (o - o2).norm() - r - r2;

    let clearance = |w: ExtComplex| match w {
        ExtComplex::Finite(w) => (w - o2).norm() - r2,
        ExtComplex::Infinity => f64::INFINITY,
    };
    let mut mapping = f64::INFINITY;
    let inner = (probes / 4).max(1);
    for k in 0..inner {
        // spiral through the disk, staying off the boundary
        let s = (k as f64 + 0.5) / inner as f64;
        let z = o + C64::from_polar(r * 0.95 * s, k as f64 * 2.399963229728653);
        mapping = mapping.min(clearance(g.apply_finite(z)));
    }
    let mut boundary_residual: f64 = 0.0;
    for k in 0..probes.max(1) {
        let z = o + C64::from_polar(r, k as f64 * std::f64::consts::TAU / probes.max(1) as f64);
        boundary_residual = boundary_residual.max(clearance(g.apply_finite(z)).abs());
    }

    let fp = g.fixed_points().ok();
    let contains_fixed_points = fp.is_some_and(|fp| {
        let inside = |z: ExtComplex, c0: C64, rad: f64| z.finite().is_some_and(|z| (z - c0).norm() < rad);
        inside(fp.repelling(), o, r) && inside(fp.attracting(), o2, r2)
    });
    let sep = match (cert.z_plus, cert.z_minus) {
        (ExtComplex::Finite(p), ExtComplex::Finite(m)) => (p - m).norm(),
        _ => f64::INFINITY,
    };
    let want = radius_sum_formula(sep, cert.multiplier.norm());
    let formula_residual = ((r + r2) - want).abs() / (r + r2);

    let conservative = disjoint.min(mapping) - CONSERVATIVE_SLACK;
    let scale = 1.0 + o2.norm() + r2;
    let verified =
        conservative > 0.0 && contains_fixed_points && boundary_residual <= 1e-9 * scale && formula_residual <= 1e-9;
    CertificateMargins {
        disjoint,
        mapping,
        boundary_residual,
        formula_residual,
        contains_fixed_points,
        conservative,
        verified,
    }
}

/// Random loxodromic map with fixed points of modulus in `[rmin, rmax]`
/// and `|tr|` in `[tmin, tmax]`; used by tests and benchmarks.
pub fn random_loxodromic<R: rand::Rng>(rng: &mut R, (rmin, rmax): (f64, f64), (tmin, tmax): (f64, f64)) -> MoebiusMap {
    use std::f64::consts::TAU;
    loop {
        let p = C64::from_polar(rng.gen_range(rmin..=rmax), rng.gen_range(0.0..TAU));
        let q = C64::from_polar(rng.gen_range(rmin..=rmax), rng.gen_range(0.0..TAU));
        if (p - q).norm() < 1e-3 {
            continue;
        }
        let t = C64::from_polar(rng.gen_range(tmin..=tmax), rng.gen_range(0.0..TAU));
        let s = crate::moebius::principal_sqrt(t * t - 4.0);
        let lam = (t + s) / 2.0;
        let Ok(m) = MoebiusMap::new(q, p, c(1.0, 0.0), c(1.0, 0.0)) else { continue };
        let Ok(d) = MoebiusMap::diagonal(lam) else { continue };
        let g = d.conjugate_by(&m);
        if g.is_loxodromic() && g.c().norm() > 0.0 {
            return g;
        }
    }
}

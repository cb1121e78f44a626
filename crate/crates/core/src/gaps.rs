//! Gap and interaction quantities for generators relative to a first
//! generator in standard position (fixed points `0` and `infinity`).

use serde::{Deserialize, Serialize};

use crate::certificate::disjoint_pair;
use crate::disk::Disk;
use crate::error::{Error, Result};
use crate::moebius::{ExtComplex, FixedPointPair, MoebiusMap, C64};

pub const DEFAULT_KAPPA_THRESHOLD: f64 = 1e3;

/// Off-diagonal size (relative to the diagonal) below which a map counts
/// as fixing `0` and `infinity`.
pub const STANDARD_TOL: f64 = 1e-10;

pub fn is_standard(m: &MoebiusMap) -> bool {
    let scale = m.a().norm().max(m.d().norm());
    m.b().norm() <= STANDARD_TOL * scale && m.c().norm() <= STANDARD_TOL * scale
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZEntry {
    /// `min(|z_- - z_+|, |1/z_- - 1/z_+|)`.
    pub z_beta: f64,
    /// `min(z_beta, |z_+|, |z_-|, 1/|z_+|, 1/|z_-|)`.
    pub z_pair: f64,
    /// A fixed point sits at 0 or infinity; both values are reported as 0.
    pub at_pole: bool,
}

/// `Z` values for one generator from its fixed points.
pub fn z_entry(fp: &FixedPointPair) -> ZEntry {
    match (fp.z_minus, fp.z_plus) {
        (ExtComplex::Finite(m), ExtComplex::Finite(p)) if m.norm() > 0.0 && p.norm() > 0.0 => {
            let z_beta = (m - p).norm().min((m.inv() - p.inv()).norm());
            let z_pair = z_beta.min(p.norm()).min(m.norm()).min(1.0 / p.norm()).min(1.0 / m.norm());
            ZEntry { z_beta, z_pair, at_pole: false }
        }
        _ => ZEntry { z_beta: 0.0, z_pair: 0.0, at_pole: true },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZReport {
    pub entries: Vec<ZEntry>,
    /// Minimum of the `z_pair` values.
    pub z_marked: f64,
}

pub fn z_quantities(alpha: &MoebiusMap, betas: &[MoebiusMap]) -> Result<ZReport> {
    if !is_standard(alpha) {
        return Err(Error::NeedStandardPosition);
    }
    let mut entries = Vec::with_capacity(betas.len());
    for b in betas {
        entries.push(z_entry(&b.fixed_points()?));
    }
    let z_marked = entries.iter().map(|e| e.z_pair).fold(f64::INFINITY, f64::min);
    Ok(ZReport { entries, z_marked })
}

/// `min` over the fixed points of `beta` and the two disks of the Euclidean
/// distance from the point to the disk.
pub fn exclusion_gap(disks: (&Disk, &Disk), beta: &MoebiusMap) -> Result<f64> {
    if !beta.is_loxodromic() {
        return Err(Error::NotLoxodromic);
    }
    let fp = beta.fixed_points()?;
    let mut g = f64::INFINITY;
    for z in [fp.z_minus, fp.z_plus] {
        for d in [disks.0, disks.1] {
            let v = match z {
                ExtComplex::Finite(z) => d.distance_to(z),
                ExtComplex::Infinity => {
                    if d.contains(z) {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            };
            g = g.min(v);
        }
    }
    Ok(g)
}

/// `|z_- - z_+| / (|lambda| - 1)`.
pub fn r_quantity(gamma: &MoebiusMap) -> Result<f64> {
    let (lam, _) = gamma.multiplier_and_length()?;
    let fp = gamma.fixed_points()?;
    Ok(fp.separation() / (lam.norm() - 1.0))
}

/// `G_{i;j}` using the certificate disks of `beta_i` and the fixed points of `beta_j`.
pub fn certificate_gap(beta_i: &MoebiusMap, beta_j: &MoebiusMap) -> Result<f64> {
    let cert = disjoint_pair(beta_i)?;
    exclusion_gap((&cert.repelling.disk(), &cert.attracting.disk()), beta_j)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBranch {
    /// `min |a_i - a_j| |tr_i|` over isometric-circle centers.
    CenterGap,
    /// `G_{i;j} / R_j`.
    GapRatio,
    /// Fewer than two generators besides the first.
    Vacuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaPair {
    /// Zero-based generator indices with `|tr_i| <= |tr_j|`.
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::io::ext_f64")]
    pub value: f64,
    pub branch: KappaBranch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    #[serde(with = "crate::io::ext_f64")]
    pub value: f64,
    pub branch: KappaBranch,
    pub pairs: Vec<KappaPair>,
    pub threshold: f64,
}

/// Interaction function over pairs of generators after the first.
///
/// For each pair ordered by `|tr_i| <= |tr_j|`: if `|tr_i| > threshold` the
/// value is `min |a_i - a_j| |tr_i|` with `a` ranging over `{zeta, eta}`;
/// otherwise it is `G_{i;j} / R_j`. The result is the smallest pair value.
pub fn kappa(gens: &[MoebiusMap], threshold: f64) -> Result<KappaReport> {
    let first = gens.first().ok_or(Error::NeedStandardPosition)?;
    if !is_standard(first) {
        return Err(Error::NeedStandardPosition);
    }
    let mut pairs = Vec::new();
    for p in 1..gens.len() {
        for q in p + 1..gens.len() {
            let (i, j) = if gens[p].trace().norm() <= gens[q].trace().norm() { (p, q) } else { (q, p) };
            let (bi, bj) = (&gens[i], &gens[j]);
            let tr = bi.trace().norm();
            let pair = if tr > threshold {
                let (zi, ei) = bi.zeta_eta()?;
                let (zj, ej) = bj.zeta_eta()?;
                let mut gap = f64::INFINITY;
                for a in [zi, ei] {
                    for b in [zj, ej] {
                        gap = gap.min((a - b).norm());
                    }
                }
                KappaPair { i, j, value: gap * tr, branch: KappaBranch::CenterGap }
            } else {
                let g = certificate_gap(bi, bj)?;
                let r = r_quantity(bj)?;
                KappaPair { i, j, value: g / r, branch: KappaBranch::GapRatio }
            };
            pairs.push(pair);
        }
    }
    let best = pairs.iter().min_by(|a, b| a.value.total_cmp(&b.value)).copied();
    Ok(match best {
        Some(b) => KappaReport { value: b.value, branch: b.branch, pairs, threshold },
        None => KappaReport { value: f64::INFINITY, branch: KappaBranch::Vacuous, pairs, threshold },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::io::ext_f64")]
    pub value: f64,
}

/// Everything above for one generating set whose first generator is standard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub z: ZReport,
    /// `G_{i;j}` for ordered pairs of generators after the first.
    pub g: Vec<GapEntry>,
    /// `R` for each generator after the first (`inf` if not loxodromic).
    #[serde(with = "ext_vec")]
    pub r: Vec<f64>,
    pub kappa: KappaReport,
}

mod ext_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "crate::io::ext_f64")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| W(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

pub fn gap_report(gens: &[MoebiusMap], threshold: f64) -> Result<GapReport> {
    let first = gens.first().ok_or(Error::NeedStandardPosition)?;
    let z = z_quantities(first, &gens[1..])?;
    let mut g = Vec::new();
    for i in 1..gens.len() {
        for j in 1..gens.len() {
            if i != j {
                let value = certificate_gap(&gens[i], &gens[j]).unwrap_or(f64::NAN);
                g.push(GapEntry { i, j, value });
            }
        }
    }
    let r = gens[1..].iter().map(|b| r_quantity(b).unwrap_or(f64::INFINITY)).collect();
    let kappa = kappa(gens, threshold)?;
    Ok(GapReport { z, g, r, kappa })
}

/// A generator with given isometric-circle centers and trace, helper for
/// tests and examples: `c = tr/(zeta - eta)`.
pub fn generator_with_centers(zeta: C64, eta: C64, tr: C64) -> Result<MoebiusMap> {
    let c = tr / (zeta - eta);
    let a = zeta * c;
    let d = -eta * c;
    MoebiusMap::new(a, (a * d - 1.0) / c, c, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::c;

    fn with_fixed_points(p: C64, q: C64, lam: f64) -> MoebiusMap {
        let m = MoebiusMap::new(p, q, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        MoebiusMap::diagonal(c(lam, 0.0)).unwrap().conjugate_by(&m)
    }

    fn alpha() -> MoebiusMap {
        MoebiusMap::diagonal(c(3.0, 0.0)).unwrap()
    }

    #[test]
    fn z_examples() {
        let b = with_fixed_points(c(1.0, 0.0), c(3.0, 0.0), 2.0);
        let rep = z_quantities(&alpha(), &[b]).unwrap();
        assert!((rep.entries[0].z_beta - 2.0 / 3.0).abs() < 1e-12);

        let b = with_fixed_points(c(1.0, 0.0), c(-1.0, 0.0), 2.0);
        let rep = z_quantities(&alpha(), &[b]).unwrap();
        assert!((rep.entries[0].z_beta - 2.0).abs() < 1e-12);
        assert!((rep.z_marked - 1.0).abs() < 1e-12);

        let b = with_fixed_points(c(0.5, 0.0), c(2.0, 0.0), 2.0);
        let rep = z_quantities(&alpha(), &[b]).unwrap();
        assert!((rep.z_marked - 0.5).abs() < 1e-12);
    }

    #[test]
    fn z_flags_poles() {
        let b = with_fixed_points(c(0.0, 0.0), c(2.0, 0.0), 2.0);
        let rep = z_quantities(&alpha(), &[b]).unwrap();
        assert!(rep.entries[0].at_pole && rep.z_marked == 0.0);
        let not_std = MoebiusMap::real(2.0, 3.0, 1.0, 2.0).unwrap();
        assert_eq!(z_quantities(&not_std, &[b]), Err(Error::NeedStandardPosition));
    }

    #[test]
    fn exclusion_gap_examples() {
        let unit = Disk::round(c(0.0, 0.0), 1.0);
        let far = Disk::round(c(100.0, 0.0), 1.0);
        let b = with_fixed_points(c(5.0, 0.0), c(-50.0, 0.0), 2.0);
        assert!((exclusion_gap((&unit, &far), &b).unwrap() - 4.0).abs() < 1e-12);
        let b = with_fixed_points(c(0.0, 0.0), c(-50.0, 0.0), 2.0);
        assert_eq!(exclusion_gap((&unit, &far), &b).unwrap(), 0.0);
    }

    #[test]
    fn r_and_ratio() {
        let b = with_fixed_points(c(1.0, 0.0), c(3.0, 0.0), 2.0);
        assert!((r_quantity(&b).unwrap() - 2.0).abs() < 1e-12);
        let cert_owner = with_fixed_points(c(10.0, 0.0), c(12.0, 0.0), 4.0);
        let g = certificate_gap(&cert_owner, &b).unwrap();
        assert!(g > 0.0 && (g / r_quantity(&b).unwrap()).is_finite());
    }

    #[test]
    fn kappa_center_branch() {
        let b1 = generator_with_centers(c(10.0, 0.0), c(-10.0, 0.0), c(100.0, 0.0)).unwrap();
        let b2 = generator_with_centers(c(11.0, 0.0), c(-20.0, 0.0), c(100.0, 0.0)).unwrap();
        assert!((b1.trace().norm() - 100.0).abs() < 1e-9);
        let k = kappa(&[alpha(), b1, b2], 50.0).unwrap();
        assert_eq!(k.branch, KappaBranch::CenterGap);
        assert!((k.value - 100.0).abs() < 1e-9);
        // coincident centers
        let b3 = generator_with_centers(c(10.0, 0.0), c(-30.0, 0.0), c(100.0, 0.0)).unwrap();
        assert!(kappa(&[alpha(), b1, b3], 50.0).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn kappa_ratio_branch_and_vacuous() {
        let b1 = with_fixed_points(c(1.0, 0.0), c(1.5, 0.0), 2.0);
        let b2 = with_fixed_points(c(-1.0, 0.0), c(-1.5, 0.5), 2.2);
        let k = kappa(&[alpha(), b1, b2], DEFAULT_KAPPA_THRESHOLD).unwrap();
        assert_eq!(k.branch, KappaBranch::GapRatio);
        let p = k.pairs[0];
        let want =
            certificate_gap(&[b1, b2][p.i - 1], &[b1, b2][p.j - 1]).unwrap() / r_quantity(&[b1, b2][p.j - 1]).unwrap();
        assert!((k.value - want).abs() < 1e-12);
        let k = kappa(&[alpha(), b1], DEFAULT_KAPPA_THRESHOLD).unwrap();
        assert_eq!(k.branch, KappaBranch::Vacuous);
        assert!(k.value.is_infinite());
        assert_eq!(kappa(&[b1, b2], 10.0), Err(Error::NeedStandardPosition));
    }

    #[test]
    fn similarity_covariance() {
        let b = with_fixed_points(c(1.0, 0.5), c(3.0, -0.2), 2.0);
        let disks = (Disk::round(c(0.0, 0.0), 0.3), Disk::round(c(5.0, 5.0), 0.5));
        let s = 3.5;
        let h = MoebiusMap::scaling(c(s, 0.0)).unwrap();
        let g0 = exclusion_gap((&disks.0, &disks.1), &b).unwrap();
        let g1 = exclusion_gap((&disks.0.image(&h), &disks.1.image(&h)), &b.conjugate_by(&h)).unwrap();
        assert!((g1 - s * g0).abs() < 1e-12);
        let sep0 = b.fixed_points().unwrap().separation();
        let sep1 = b.conjugate_by(&h).fixed_points().unwrap().separation();
        assert!((sep1 - s * sep0).abs() < 1e-12);
        assert!((r_quantity(&b.conjugate_by(&h)).unwrap() - s * r_quantity(&b).unwrap()).abs() < 1e-12);
    }
}

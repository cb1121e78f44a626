//! Markings: generators paired with round Schottky disks.
//!
//! Disks are stored as `[D_1, D_1', D_2, D_2', ...]`; generator `g_i` must
//! carry the boundary of `D_i` onto the boundary of `D_i'` and send `D_i`
//! onto the complement of `D_i'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disk::Disk;
use crate::error::{Error, Result};
use crate::io::GroupFile;
use crate::moebius::{c, ExtComplex, MoebiusMap, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marking {
    pub generators: Vec<MoebiusMap>,
    pub disks: Vec<Disk>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMargin {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::io::ext_f64")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    /// `|dc| + |dr|` between `g(D)` and the complement of `D'`.
    #[serde(with = "crate::io::ext_f64")]
    pub pairing_residual: f64,
    /// An interior point of `D` lands outside `D'`.
    pub interior_ok: bool,
    /// An exterior point of `D` lands inside `D'`.
    pub exterior_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verified: bool,
    pub tol: f64,
    #[serde(with = "crate::io::ext_f64")]
    pub min_margin: f64,
    #[serde(with = "crate::io::ext_f64")]
    pub max_residual: f64,
    pub margins: Vec<PairMargin>,
    pub generators: Vec<GeneratorCheck>,
}

impl Marking {
    pub fn new(generators: Vec<MoebiusMap>, disks: Vec<Disk>) -> Result<Self> {
        let mk = Marking { generators, disks };
        mk.check_shape()?;
        Ok(mk)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// `(D_i, D_i')` for zero-based `i`.
    pub fn pair(&self, i: usize) -> (Disk, Disk) {
        (self.disks[2 * i], self.disks[2 * i + 1])
    }

    pub fn from_group_file(f: &GroupFile) -> Result<Self> {
        let disks = f.disks.clone().ok_or_else(|| Error::MalformedMarking("group file has no disks".into()))?;
        Marking::new(f.generators.clone(), disks)
    }

    pub fn to_group_file(&self) -> GroupFile {
        GroupFile::new(self.generators.clone(), Some(self.disks.clone()))
    }

    fn check_shape(&self) -> Result<()> {
        let k = self.generators.len();
        if k == 0 {
            return Err(Error::MalformedMarking("no generators".into()));
        }
        if self.disks.len() != 2 * k {
            return Err(Error::MalformedMarking(format!(
                "{} disks for {k} generators (need {})",
                self.disks.len(),
                2 * k
            )));
        }
        for (i, d) in self.disks.iter().enumerate() {
            if !d.is_valid() {
                return Err(Error::MalformedMarking(format!("disk {i} is degenerate")));
            }
        }
        for i in 0..self.disks.len() {
            for j in i + 1..self.disks.len() {
                if self.disks[i].residual(&self.disks[j]) <= 1e-12 {
                    return Err(Error::MalformedMarking(format!("disks {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    /// Checks disjointness and the pairing conditions.
    pub fn verify(&self, tol: f64) -> Result<VerificationReport> {
        self.check_shape()?;
        let mut margins = Vec::new();
        let mut min_margin = f64::INFINITY;
        for i in 0..self.disks.len() {
            for j in i + 1..self.disks.len() {
                let m = self.disks[i].margin(&self.disks[j]);
                min_margin = min_margin.min(m);
                margins.push(PairMargin { i, j, margin: m });
            }
        }
        let mut generators = Vec::with_capacity(self.rank());
        let mut max_residual: f64 = 0.0;
        for (i, g) in self.generators.iter().enumerate() {
            let (d, dp) = self.pair(i);
            let img = d.image(g);
            let r = img.residual(&dp.complement());
            max_residual = max_residual.max(r);
            let interior_ok = !dp.contains(g.apply(d.interior_point()));
            let exterior_ok = dp.contains(g.apply(d.complement().interior_point()));
            generators.push(GeneratorCheck { pairing_residual: r, interior_ok, exterior_ok });
        }
        let verified =
            min_margin > tol && max_residual < tol && generators.iter().all(|g| g.interior_ok && g.exterior_ok);
        Ok(VerificationReport { verified, tol, min_margin, max_residual, margins, generators })
    }

    /// Conjugates every generator by `h` and moves the disks along.
    pub fn conjugate_by(&self, h: &MoebiusMap) -> Marking {
        Marking {
            generators: self.generators.iter().map(|g| g.conjugate_by(h)).collect(),
            disks: self.disks.iter().map(|d| d.image(h)).collect(),
        }
    }

    /// Whether `z` lies in the union of the open disks.
    pub fn union_contains(&self, z: ExtComplex) -> bool {
        self.disks.iter().any(|d| d.contains(z))
    }
}

/// The map whose isometric circle is `|z - eta| = r` and whose inverse's is
/// `|z - zeta| = r`, with `c = e^{i theta}/r`.
pub fn generator_from_circles(eta: C64, zeta: C64, r: f64, theta: f64) -> Result<MoebiusMap> {
    let cc = C64::from_polar(1.0 / r, theta);
    let a = zeta * cc;
    let d = -eta * cc;
    let b = (a * d - 1.0) / cc;
    MoebiusMap::new(a, b, cc, d)
}

/// Two generators `[[2,3],[1,2]]` and `[[2i,-5],[1,2i]]` with unit disks at
/// `-2, 2, -2i, 2i`.
pub fn template_marking() -> Marking {
    let g = MoebiusMap::real(2.0, 3.0, 1.0, 2.0).expect("unit determinant");
    let h = MoebiusMap::new(c(0.0, 2.0), c(-5.0, 0.0), c(1.0, 0.0), c(0.0, 2.0)).expect("unit determinant");
    Marking {
        generators: vec![g, h],
        disks: vec![
            Disk::round(c(-2.0, 0.0), 1.0),
            Disk::round(c(2.0, 0.0), 1.0),
            Disk::round(c(0.0, -2.0), 1.0),
            Disk::round(c(0.0, 2.0), 1.0),
        ],
    }
}

/// The template with both generators built for disks of radius `r`
/// (same centers).
pub fn scaled_template(r: f64) -> Result<Marking> {
    let centers = [(c(-2.0, 0.0), c(2.0, 0.0)), (c(0.0, -2.0), c(0.0, 2.0))];
    let mut generators = Vec::new();
    let mut disks = Vec::new();
    for (eta, zeta) in centers {
        generators.push(generator_from_circles(eta, zeta, r, 0.0)?);
        disks.push(Disk::round(eta, r));
        disks.push(Disk::round(zeta, r));
    }
    Marking::new(generators, disks)
}

/// A random classical marking of rank `k`: `2k` circles spread around a
/// circle large enough that neighbours keep a gap of at least `radius`
/// after angular jitter.
/// Pair radii are drawn from `[radius/2, radius]`.
pub fn random_marking(k: usize, seed: u64, radius: f64) -> Result<Marking> {
    if k == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * k;
    let step = std::f64::consts::TAU / n as f64;
    // neighbouring centers are 4 radius apart before jitter, over 3 radius after
    let big = 2.0 * radius / (step / 2.0).sin();
    let jitter = 0.1 * step;
    let angles: Vec<f64> = (0..n).map(|j| j as f64 * step + rng.gen_range(-jitter..jitter)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut generators = Vec::with_capacity(k);
    let mut disks = Vec::with_capacity(n);
    for i in 0..k {
        let r = radius * rng.gen_range(0.5..=1.0);
        let eta = C64::from_polar(big, angles[order[2 * i]]);
        let zeta = C64::from_polar(big, angles[order[2 * i + 1]]);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        generators.push(generator_from_circles(eta, zeta, r, theta)?);
        disks.push(Disk::round(eta, r));
        disks.push(Disk::round(zeta, r));
    }
    Marking::new(generators, disks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{enumerate_words, word_to_map};

    #[test]
    fn template_verifies() {
        let rep = template_marking().verify(1e-9).unwrap();
        assert!(rep.verified, "{rep:?}");
        assert!((rep.min_margin - (8f64.sqrt() - 2.0)).abs() < 1e-15);
        assert!(rep.max_residual < 1e-14);
    }

    #[test]
    fn inflated_template_fails() {
        let mut mk = template_marking();
        for d in &mut mk.disks {
            if let Disk::Round { radius, .. } = d {
                *radius = 1.5;
            }
        }
        let rep = mk.verify(1e-9).unwrap();
        assert!(!rep.verified);
        assert!(rep.min_margin < 0.0);
    }

    #[test]
    fn rank_one_side_flags() {
        let zero = c(0.0, 0.0);
        let g = MoebiusMap::diagonal(c(4.0, 0.0)).unwrap();
        let good = Marking::new(vec![g], vec![Disk::round(zero, 0.5), Disk::round_out(zero, 8.0)]).unwrap();
        assert!(good.verify(1e-9).unwrap().verified);
        let bad = Marking::new(vec![g], vec![Disk::round(zero, 0.5), Disk::round_out(zero, 2.0)]).unwrap();
        assert!(!bad.verify(1e-9).unwrap().verified);
        let g2 = MoebiusMap::diagonal(c(2.0, 0.0)).unwrap();
        let ok = Marking::new(vec![g2], vec![Disk::round(zero, 0.5), Disk::round_out(zero, 2.0)]).unwrap();
        assert!(ok.verify(1e-9).unwrap().verified);
        // swapping the roles of the two disks breaks the side condition
        let swapped = Marking::new(vec![g2], vec![Disk::round_out(zero, 2.0), Disk::round(zero, 0.5)]).unwrap();
        assert!(!swapped.verify(1e-9).unwrap().verified);
    }

    #[test]
    fn malformed_markings() {
        assert!(matches!(Marking::new(vec![], vec![]), Err(Error::MalformedMarking(_))));
        let mk = template_marking();
        assert!(Marking::new(mk.generators.clone(), mk.disks[..3].to_vec()).is_err());
        let mut dup = mk.disks.clone();
        dup[1] = dup[0];
        assert!(Marking::new(mk.generators.clone(), dup).is_err());
    }

    #[test]
    fn random_markings_verify() {
        for k in 1..=5 {
            for seed in 0..10 {
                let mk = random_marking(k, seed, 1.0).unwrap();
                assert_eq!(mk.disks.len(), 2 * k);
                let rep = mk.verify(1e-9).unwrap();
                assert!(rep.verified, "k={k} seed={seed} {rep:?}");
            }
        }
        assert_eq!(random_marking(3, 5, 0.7).unwrap(), random_marking(3, 5, 0.7).unwrap());
    }

    #[test]
    fn verification_survives_conjugation() {
        let mk = random_marking(3, 11, 1.0).unwrap();
        let h = MoebiusMap::new(c(1.0, 0.3), c(0.2, -0.1), c(0.05, 0.02), c(0.9, 0.1)).unwrap();
        let moved = mk.conjugate_by(&h);
        assert!(moved.verify(1e-6).unwrap().verified);
        let bad = template_marking();
        let mut bad = bad.clone();
        bad.disks[0] = Disk::round(c(-2.0, 0.0), 1.8);
        assert!(!bad.conjugate_by(&h).verify(1e-6).unwrap().verified);
    }

    #[test]
    fn exterior_maps_inside_partner() {
        let mk = random_marking(2, 3, 1.0).unwrap();
        for i in 0..mk.rank() {
            let (d, dp) = mk.pair(i);
            let g = mk.generators[i];
            let Disk::Round { center, .. } = d else { unreachable!() };
            for k in 0..64 {
                let z = center + C64::from_polar(1e3, k as f64 * std::f64::consts::TAU / 64.0);
                assert!(dp.contains(g.apply_finite(z)));
            }
        }
    }

    #[test]
    fn ping_pong_containment_short_words() {
        let mk = template_marking();
        for w in enumerate_words(2, 5, 10_000).unwrap() {
            let m = word_to_map(&w, &mk.generators).unwrap();
            let fp = m.fixed_points().unwrap();
            assert!(mk.union_contains(fp.attracting()), "{:?}", w.to_signed());
            assert!(mk.union_contains(fp.repelling()));
        }
    }

    #[test]
    fn scaled_template_matches_template_at_unit_radius() {
        let mk = scaled_template(1.0).unwrap();
        for (a, b) in mk.generators.iter().zip(template_marking().generators) {
            assert!(a.approx_eq(&b, 1e-14));
        }
        assert!(scaled_template(0.1).unwrap().verify(1e-9).unwrap().verified);
    }
}

//! Generator moves (standard-position conjugation, annulus powers, scaling
//! conjugations, Nielsen moves) and a budgeted search for a classical
//! marking.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::disjoint_pair;
use crate::disk::{Disk, HermitianForm};
use crate::error::{Error, Result};
use crate::gaps::{is_standard, kappa, DEFAULT_KAPPA_THRESHOLD};
use crate::hyperbolic::{apply_halfspace, displacement_from_j, hyp_distance, to_j, HalfSpacePoint};
use crate::marking::{Marking, VerificationReport};
use crate::moebius::{c, MoebiusMap, C64};
use crate::words::{word_to_map, GroupWord};

pub const DEFAULT_BOUNDED_TRACE: f64 = 6.0;
pub const DEFAULT_SEARCH_BUDGET: usize = 200;
pub const PROXIMITY: f64 = 1e-2;
pub const PLATEAU_TOL: f64 = 1e-12;
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnulusConvention {
    /// `[1, |lambda|^2)`.
    #[default]
    Sec7,
    /// `(|lambda|^-2, 1]`.
    Sec6,
}

impl AnnulusConvention {
    pub fn contains(self, lambda_abs: f64, modulus: f64) -> bool {
        let l2 = lambda_abs * lambda_abs;
        match self {
            AnnulusConvention::Sec7 => (1.0..l2).contains(&modulus),
            AnnulusConvention::Sec6 => modulus > 1.0 / l2 && modulus <= 1.0,
        }
    }

    /// Lower and upper modulus of the annulus.
    pub fn bounds(self, lambda_abs: f64) -> (f64, f64) {
        let l2 = lambda_abs * lambda_abs;
        match self {
            AnnulusConvention::Sec7 => (1.0, l2),
            AnnulusConvention::Sec6 => (1.0 / l2, 1.0),
        }
    }
}

impl std::str::FromStr for AnnulusConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sec7" => Ok(AnnulusConvention::Sec7),
            "sec6" => Ok(AnnulusConvention::Sec6),
            other => Err(format!("unknown annulus convention '{other}' (expected sec6 or sec7)")),
        }
    }
}

/// Conjugates so that `gens[i]` fixes `0` and `infinity`:
/// `h(z) = (z - z_-)/(z - z_+)`.
pub fn standardize(gens: &[MoebiusMap], i: usize) -> Result<(MoebiusMap, Vec<MoebiusMap>)> {
    let g = gens.get(i).ok_or(Error::IndexOutOfRange { index: i, rank: gens.len() })?;
    if !g.is_loxodromic() {
        return Err(Error::NotLoxodromic);
    }
    let h = if is_standard(g) { MoebiusMap::identity() } else { g.standardizer()? };
    let moved = gens.iter().map(|m| m.conjugate_by(&h)).collect();
    Ok((h, moved))
}

/// Integers `(k, l)` placing `|lambda^{2k} zeta|` and `|lambda^{-2l} eta|`
/// in the annulus of the convention.
pub fn annulus_powers(lambda: C64, beta: &MoebiusMap, conv: AnnulusConvention) -> Result<(i64, i64)> {
    let la = lambda.norm();
    if (la - 1.0).abs() <= 1e-12 || !la.is_finite() {
        return Err(Error::DegenerateModulus(la));
    }
    if la < 1.0 {
        let (k, l) = annulus_powers(lambda.inv(), beta, conv)?;
        return Ok((-k, -l));
    }
    let (zeta, eta) = beta.zeta_eta()?;
    if zeta.norm() == 0.0 || eta.norm() == 0.0 {
        return Err(Error::InvalidArgument("isometric-circle center at the origin".into()));
    }
    let k = place(zeta.norm(), la, conv);
    let l = -place(eta.norm(), la, conv);
    Ok((k, l))
}

/// Exponent `p` with `|x| la^{2p}` inside the annulus, corrected against
/// the floating-point modulus.
fn place(x: f64, la: f64, conv: AnnulusConvention) -> i64 {
    let step = 2.0 * la.ln();
    let (lo, _) = conv.bounds(la);
    let mut p = -((x.ln() - lo.ln()) / step).floor() as i64;
    let at = |p: i64| x * la.powi((2 * p) as i32);
    for _ in 0..4 {
        let m = at(p);
        if conv.contains(la, m) {
            break;
        }
        let (lo, hi) = conv.bounds(la);
        let below = match conv {
            AnnulusConvention::Sec7 => m < lo,
            AnnulusConvention::Sec6 => m <= lo,
        };
        if below {
            p += 1;
        } else if m >= hi {
            p -= 1;
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleKind {
    /// `x / (sqrt(sigma) |lambda|)`.
    CaseD,
    /// `(1 + eps/(2 z_u)) lambda^{-1} x`.
    Psi1,
    /// `lambda^{-1} (1 - eps_2)^{-1} x`.
    Psi2,
    /// `min_i |zeta_i^{-1/2} lambda^{1 - k_i}| x`.
    Psi3,
    /// `lambda / sqrt(rho) x`.
    Chi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleCandidate {
    pub kind: RescaleKind,
    #[serde(with = "crate::io::complex_pair")]
    pub factor: C64,
}

/// Parameters read off the current generators; see [`rescale_candidates`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub sigma: f64,
    pub delta: f64,
    pub chi: f64,
    pub epsilon: f64,
    pub z_u: f64,
    pub rho: f64,
}

fn first_multiplier(gens: &[MoebiusMap]) -> Option<C64> {
    let a = gens.first()?.a();
    let la = a.norm();
    if !(la.is_finite()) || (la - 1.0).abs() <= 1e-12 {
        return None;
    }
    Some(if la > 1.0 { a } else { a.inv() })
}

/// Rescale parameters for a standard first generator; `None` when the
/// other generators do not all have finite isometric circles.
pub fn rescale_params(gens: &[MoebiusMap]) -> Option<RescaleParams> {
    let lam = first_multiplier(gens)?;
    let la = lam.norm();
    let l2 = la * la;
    let mut max_zeta: f64 = 0.0;
    let mut min_eta = f64::INFINITY;
    let mut delta = f64::INFINITY;
    let mut chi: f64 = 0.0;
    let mut z_u: f64 = 0.0;
    let mut min_trace = f64::INFINITY;
    for b in &gens[1..] {
        let (zeta, eta) = b.zeta_eta().ok()?;
        let fp = b.fixed_points().ok()?;
        let zu = fp.z_upper.modulus();
        let tr = b.trace().norm();
        max_zeta = max_zeta.max(zeta.norm());
        min_eta = min_eta.min(eta.norm());
        delta = delta.min((l2 - zeta.norm()) / (l2 - 1.0));
        chi = chi.max((zu - zeta.norm()).abs() * tr);
        z_u = z_u.max(zu);
        min_trace = min_trace.min(tr);
    }
    if gens.len() < 2 || !z_u.is_finite() {
        return None;
    }
    let epsilon = (delta * (l2 - 1.0) - chi / min_trace).max(0.0);
    let rho = ((l2 * min_eta) - 1.0).clamp(1.0, la.max(1.0 + 1e-12));
    Some(RescaleParams { sigma: max_zeta / l2, delta: delta.clamp(0.0, 1.0), chi, epsilon, z_u, rho })
}

/// The scaling conjugations available from the current generators. The
/// first generator must be standard; the list is empty otherwise.
pub fn rescale_candidates(gens: &[MoebiusMap], conv: AnnulusConvention) -> Vec<RescaleCandidate> {
    if gens.is_empty() || !is_standard(&gens[0]) {
        return Vec::new();
    }
    let Some(lam) = first_multiplier(gens) else {
        return Vec::new();
    };
    let Some(p) = rescale_params(gens) else {
        return Vec::new();
    };
    let la = lam.norm();
    let mut out = Vec::new();
    let mut push = |kind, factor: C64| {
        if factor.norm() > 0.0 && factor.norm().is_finite() {
            out.push(RescaleCandidate { kind, factor });
        }
    };
    push(RescaleKind::CaseD, C64::from(1.0 / (p.sigma.sqrt() * la)));
    push(RescaleKind::Psi1, (1.0 + p.epsilon / (2.0 * p.z_u)) * lam.inv());
    let eps2 = p.delta * (la * la - 1.0) / (2.0 * la * la);
    push(RescaleKind::Psi2, lam.inv() / (1.0 - eps2));
    let psi3 = gens[1..]
        .iter()
        .filter_map(|b| {
            let (k, _) = annulus_powers(lam, b, conv).ok()?;
            let zeta = b.zeta().ok()?;
            Some(zeta.norm().powf(-0.5) * la.powi((1 - k) as i32))
        })
        .fold(f64::INFINITY, f64::min);
    push(RescaleKind::Psi3, C64::from(psi3));
    push(RescaleKind::Chi, lam / p.rho.sqrt());
    out
}

/// Which end of the annulus a transformed generator's center sits close to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProximityCase {
    /// `zeta` near the outer boundary.
    I,
    /// `zeta` near the inner boundary.
    II,
    /// `eta` near the outer boundary.
    III,
    /// `eta` near the inner boundary.
    IV,
}

fn proximity_case(beta: &MoebiusMap, la: f64, conv: AnnulusConvention) -> Option<ProximityCase> {
    let (zeta, eta) = beta.zeta_eta().ok()?;
    let (lo, hi) = conv.bounds(la);
    let rel = |m: f64| (m.ln() - lo.ln()) / (hi.ln() - lo.ln());
    let (pz, pe) = (rel(zeta.norm()), rel(eta.norm()));
    if pz > 1.0 - PROXIMITY {
        Some(ProximityCase::I)
    } else if pz < PROXIMITY {
        Some(ProximityCase::II)
    } else if pe > 1.0 - PROXIMITY {
        Some(ProximityCase::III)
    } else if pe < PROXIMITY {
        Some(ProximityCase::IV)
    } else {
        None
    }
}

/// One recorded move. Indices are zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum Move {
    /// Conjugation by the standardizer of generator `index`.
    Standardize {
        index: usize,
        conjugator: MoebiusMap,
    },
    /// `g_target <- g_by^k g_target g_by^l`.
    Power {
        target: usize,
        by: usize,
        k: i64,
        l: i64,
    },
    /// `g_target <- g_by^exponent g_target`.
    Premultiply {
        target: usize,
        by: usize,
        exponent: i64,
    },
    /// `g_target <- g_target g_by^exponent`.
    Postmultiply {
        target: usize,
        by: usize,
        exponent: i64,
    },
    Invert {
        index: usize,
    },
    /// Conjugation by `x -> factor x`.
    Rescale {
        #[serde(with = "crate::io::complex_pair")]
        factor: C64,
        kind: Option<RescaleKind>,
    },
    Swap {
        i: usize,
        j: usize,
    },
}

impl Move {
    /// Global conjugation carried out by the move, if any.
    pub fn conjugator(&self) -> Option<MoebiusMap> {
        match self {
            Move::Standardize { conjugator, .. } => Some(*conjugator),
            Move::Rescale { factor, .. } => MoebiusMap::scaling(*factor).ok(),
            _ => None,
        }
    }

    pub fn apply(&self, gens: &mut [MoebiusMap]) {
        match *self {
            Move::Standardize { .. } | Move::Rescale { .. } => {
                let h = self.conjugator().expect("conjugation move");
                for g in gens.iter_mut() {
                    *g = g.conjugate_by(&h);
                }
            }
            Move::Power { target, by, k, l } => {
                let a = gens[by];
                gens[target] = a.pow(k).compose(&gens[target]).compose(&a.pow(l));
            }
            Move::Premultiply { target, by, exponent } => {
                gens[target] = gens[by].pow(exponent).compose(&gens[target]);
            }
            Move::Postmultiply { target, by, exponent } => {
                gens[target] = gens[target].compose(&gens[by].pow(exponent));
            }
            Move::Invert { index } => gens[index] = gens[index].inverse(),
            Move::Swap { i, j } => gens.swap(i, j),
        }
    }

    /// The same move on words in the original generators.
    pub fn apply_words(&self, words: &mut [GroupWord]) {
        match *self {
            Move::Standardize { .. } | Move::Rescale { .. } => {}
            Move::Power { target, by, k, l } => {
                let a = words[by].clone();
                words[target] = a.pow(k).concat(&words[target]).concat(&a.pow(l));
            }
            Move::Premultiply { target, by, exponent } => {
                words[target] = words[by].pow(exponent).concat(&words[target]);
            }
            Move::Postmultiply { target, by, exponent } => {
                words[target] = words[target].concat(&words[by].pow(exponent));
            }
            Move::Invert { index } => words[index] = words[index].inverse(),
            Move::Swap { i, j } => words.swap(i, j),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `None` unless the first generator is standard and all are loxodromic.
    pub kappa: Option<f64>,
    pub min_trace: f64,
    /// Best minimum pairwise disk margin over the candidate disk systems.
    #[serde(with = "crate::io::ext_f64")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    #[serde(flatten)]
    pub mv: Move,
    pub accepted: bool,
    pub case: Option<ProximityCase>,
    pub before: Diagnostics,
    pub after: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveTrace {
    pub records: Vec<MoveRecord>,
}

impl MoveTrace {
    /// Applies the accepted moves in order.
    pub fn replay(&self, gens: &[MoebiusMap]) -> Vec<MoebiusMap> {
        let mut out = gens.to_vec();
        for r in self.records.iter().filter(|r| r.accepted) {
            r.mv.apply(&mut out);
        }
        out
    }

    /// Composite of the accepted global conjugations.
    pub fn conjugator(&self) -> MoebiusMap {
        self.records
            .iter()
            .filter(|r| r.accepted)
            .filter_map(|r| r.mv.conjugator())
            .fold(MoebiusMap::identity(), |acc, h| h.compose(&acc))
    }

    /// The accepted moves replayed on the words `g_1, ..., g_k`.
    pub fn words(&self, k: usize) -> Vec<GroupWord> {
        let mut w: Vec<GroupWord> = (0..k).map(GroupWord::generator).collect();
        for r in self.records.iter().filter(|r| r.accepted) {
            r.mv.apply_words(&mut w);
        }
        w
    }

    pub fn accepted(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }
}

/// Largest sign-invariant distance between two generator lists.
pub fn max_distance(a: &[MoebiusMap], b: &[MoebiusMap]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| x.distance(y)).fold(0.0, f64::max)
}

/// Worst discrepancy, over `samples` random words, between a word in the
/// new generators and the same word in the recorded move words (evaluated
/// in the original generators and conjugated along). Each discrepancy is
/// divided by the product of the letter norms, the scale of the rounding
/// error of the product.
pub fn group_preservation_error<R: Rng>(
    original: &[MoebiusMap],
    current: &[MoebiusMap],
    trace: &MoveTrace,
    samples: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = original.len();
    let h = trace.conjugator();
    let images = trace
        .words(k)
        .iter()
        .map(|w| word_to_map(w, original).map(|m| m.conjugate_by(&h)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let len = rng.gen_range(1..=max_len.max(1));
        let w = GroupWord::from_letters((0..len).map(|_| rng.gen_range(0..2 * k) as u16));
        let direct = word_to_map(&w, current)?;
        let via = word_to_map(&w, &images)?;
        let scale: f64 = w.letters().iter().map(|&l| current[(l / 2) as usize].frobenius_sqr().sqrt()).product();
        worst = worst.max(direct.distance(&via) / scale);
    }
    Ok(worst)
}

fn diagnose(gens: &[MoebiusMap], margin: f64) -> Diagnostics {
    let kappa = if gens.len() >= 2 && is_standard(&gens[0]) && gens.iter().all(|g| g.is_loxodromic()) {
        kappa(gens, DEFAULT_KAPPA_THRESHOLD).ok().map(|k| k.value)
    } else {
        None
    };
    let min_trace = gens.iter().map(|g| g.trace().norm()).fold(f64::INFINITY, f64::min);
    Diagnostics { kappa, min_trace, margin }
}

/// One cyclic pass over generators `2..k` placing the isometric-circle
/// centers of each in the annulus of the (standard) first generator.
pub fn gamma_pass(gens: &[MoebiusMap], conv: AnnulusConvention) -> Result<(Vec<MoebiusMap>, MoveTrace)> {
    if gens.len() < 2 {
        return Err(Error::InvalidArgument("need at least two generators".into()));
    }
    if !is_standard(&gens[0]) {
        return Err(Error::NeedStandardPosition);
    }
    let lam = first_multiplier(gens).ok_or(Error::DegenerateModulus(gens[0].a().norm()))?;
    let la = lam.norm();
    let mut cur = gens.to_vec();
    let mut trace = MoveTrace::default();
    for i in 1..cur.len() {
        let before = diagnose(&cur, frame_margin(&cur));
        let (k, l) = annulus_powers(gens[0].a(), &cur[i], conv)?;
        let mv = Move::Power { target: i, by: 0, k, l };
        let mut next = cur.clone();
        mv.apply(&mut next);
        if !next[i].is_loxodromic() {
            trace.records.push(MoveRecord {
                mv,
                accepted: false,
                case: None,
                before,
                after: before,
                note: Some(Error::NonLoxodromicIntermediate.to_string()),
            });
            continue;
        }
        let case = proximity_case(&next[i], la, conv);
        let after = diagnose(&next, frame_margin(&next));
        trace.records.push(MoveRecord { mv, accepted: true, case, before, after, note: None });
        cur = next;
    }
    Ok((cur, trace))
}

/// Candidate disk system names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum DiskSystem {
    /// Bisectors of `x` and `g^{+-1} x` for the displacement-minimizing `x`.
    Dirichlet { basepoint: HalfSpacePoint },
    /// Chordal isometric circles in the working frame.
    Chordal,
    /// Isometric circles `|cz + d| = 1` in the working frame.
    Isometric,
    /// Round annulus for the standard first generator, isometric circles
    /// (or certificate circles for bounded traces) for the rest.
    Annulus { rho: f64, rescale: Option<RescaleKind>, certificates: bool },
}

/// Disk `{|az + b|^2 + |cz + d|^2 < 1 + |z|^2}` where `g` expands the
/// chordal metric.
pub fn chordal_disk(g: &MoebiusMap) -> Option<Disk> {
    let [a, b, cc, d] = g.entries();
    let form = HermitianForm {
        a: a.norm_sqr() + cc.norm_sqr() - 1.0,
        b: a.conj() * b + cc.conj() * d,
        d: b.norm_sqr() + d.norm_sqr() - 1.0,
    };
    let disk = form.to_disk();
    disk.is_valid().then_some(disk)
}

/// Bisector disk of `x` and `g^{-1} x`.
pub fn dirichlet_disk(g: &MoebiusMap, x: &HalfSpacePoint) -> Option<Disk> {
    let h = to_j(x);
    let d = chordal_disk(&g.conjugate_by(&h))?;
    let back = d.image(&h.inverse());
    back.is_valid().then_some(back)
}

fn isometric_disk(g: &MoebiusMap) -> Option<Disk> {
    let (ic, _) = g.isometric_circles().ok()?;
    Some(Disk::round(ic.center, ic.radius))
}

/// First disks `D_i` of each candidate system in the working frame.
fn candidate_systems(
    gens: &[MoebiusMap],
    basepoint: &HalfSpacePoint,
    conv: AnnulusConvention,
    bounded_trace: f64,
) -> Vec<(DiskSystem, Vec<Disk>)> {
    let mut out = Vec::new();
    if let Some(ds) = gens.iter().map(|g| dirichlet_disk(g, basepoint)).collect::<Option<Vec<_>>>() {
        out.push((DiskSystem::Dirichlet { basepoint: *basepoint }, ds));
    }
    if let Some(ds) = gens.iter().map(chordal_disk).collect::<Option<Vec<_>>>() {
        out.push((DiskSystem::Chordal, ds));
    }
    if let Some(ds) = gens.iter().map(isometric_disk).collect::<Option<Vec<_>>>() {
        out.push((DiskSystem::Isometric, ds));
    }
    if gens.is_empty() || !is_standard(&gens[0]) {
        return out;
    }
    let a = gens[0].a();
    let la = a.norm().max(1.0 / a.norm());
    if !(la > 1.0 + 1e-12) {
        return out;
    }
    let mut rest_variants: Vec<(bool, Vec<Disk>)> = Vec::new();
    if let Some(ds) = gens[1..].iter().map(isometric_disk).collect::<Option<Vec<_>>>() {
        rest_variants.push((false, ds));
    }
    if gens[1..].iter().any(|g| g.trace().norm() < bounded_trace) {
        let ds: Option<Vec<Disk>> = gens[1..]
            .iter()
            .map(|g| {
                if g.trace().norm() < bounded_trace {
                    disjoint_pair(g).ok().map(|cp| cp.repelling.disk())
                } else {
                    isometric_disk(g)
                }
            })
            .collect();
        if let Some(ds) = ds {
            rest_variants.push((true, ds));
        }
    }
    let mut rhos: Vec<(f64, Option<RescaleKind>)> =
        rescale_candidates(gens, conv).into_iter().map(|r| (1.0 / (r.factor.norm() * la), Some(r.kind))).collect();
    rhos.push((1.0 / la, None));
    for (certificates, rest) in rest_variants {
        let mut inner = f64::INFINITY;
        let mut outer: f64 = 0.0;
        for (g, d) in gens[1..].iter().zip(&rest) {
            for disk in [*d, d.image(g).complement()] {
                if let Disk::Round { center, radius, side: crate::disk::Side::In } = disk {
                    inner = inner.min(center.norm() - radius);
                    outer = outer.max(center.norm() + radius);
                }
            }
        }
        let mut local = rhos.clone();
        if inner > 0.0 && outer.is_finite() {
            local.push(((inner * outer).sqrt() / la, None));
        }
        for (rho, rescale) in local {
            let first = if a.norm() > 1.0 { Disk::round(c(0.0, 0.0), rho) } else { Disk::round_out(c(0.0, 0.0), rho) };
            let mut ds = vec![first];
            ds.extend(rest.iter().copied());
            out.push((DiskSystem::Annulus { rho, rescale, certificates }, ds));
        }
    }
    out
}

/// Builds the marking `D_i`, `D_i' = complement(g_i D_i)` in the original
/// frame and verifies it.
fn realize(
    first_disks: &[Disk],
    to_original: &MoebiusMap,
    original_gens: &[MoebiusMap],
) -> Option<(Marking, VerificationReport)> {
    let mut disks = Vec::with_capacity(2 * first_disks.len());
    for (d, g) in first_disks.iter().zip(original_gens) {
        let d0 = d.image(to_original);
        disks.push(d0);
        disks.push(d0.image(g).complement());
    }
    let mk = Marking::new(original_gens.to_vec(), disks).ok()?;
    let rep = mk.verify(VERIFY_TOL).ok()?;
    Some((mk, rep))
}

/// Best minimum margin of the candidate systems in the given frame.
fn frame_margin(gens: &[MoebiusMap]) -> f64 {
    let x = HalfSpacePoint::j();
    candidate_systems(gens, &x, AnnulusConvention::Sec7, DEFAULT_BOUNDED_TRACE)
        .into_iter()
        .filter_map(|(_, ds)| realize(&ds, &MoebiusMap::identity(), gens))
        .map(|(_, rep)| rep.min_margin)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sum_i d(x, g_i x)`.
pub fn total_displacement(gens: &[MoebiusMap], x: &HalfSpacePoint) -> f64 {
    let h = to_j(x);
    gens.iter().map(|g| displacement_from_j(&g.conjugate_by(&h))).sum()
}

fn nelder_mead<F: Fn([f64; 3]) -> f64>(f: F, start: [f64; 3], step: f64, iters: usize) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut p = start;
            if i > 0 {
                p[i - 1] += step;
            }
            (p, f(p))
        })
        .collect();
    let lerp = |a: [f64; 3], b: [f64; 3], t: f64| {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[3].1 - simplex[0].1).abs() <= 1e-13 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += p[k] / 3.0;
            }
        }
        let worst = simplex[3];
        let refl = lerp(centroid, worst.0, -1.0);
        let fr = f(refl);
        if fr < simplex[0].1 {
            let exp = lerp(centroid, worst.0, -2.0);
            let fe = f(exp);
            simplex[3] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (refl, fr);
        } else {
            let con = lerp(centroid, worst.0, 0.5);
            let fc = f(con);
            if fc < worst.1 {
                simplex[3] = (con, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let p = lerp(best, s.0, 0.5);
                    *s = (p, f(p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Basepoint minimizing the total generator displacement, found by
/// Nelder-Mead in coordinates re-centred at the current best point.
pub fn balanced_basepoint(gens: &[MoebiusMap], start: &HalfSpacePoint) -> HalfSpacePoint {
    let mut x = *start;
    let mut fx = total_displacement(gens, &x);
    for round in 0..12 {
        let h = to_j(&x).inverse();
        let local = |p: [f64; 3]| HalfSpacePoint { z: c(p[0], p[1]), t: p[2].exp() };
        let f = |p: [f64; 3]| total_displacement(gens, &apply_halfspace(&h, &local(p)));
        let step = if round == 0 { 0.5 } else { 0.1 };
        let (p, fp) = nelder_mead(f, [0.0, 0.0, 0.0], step, 400);
        let moved = p[0].abs() + p[1].abs() + p[2].abs();
        if fp < fx {
            x = apply_halfspace(&h, &local(p));
            fx = fp;
        }
        if moved < 1e-7 {
            break;
        }
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub budget: usize,
    pub convention: AnnulusConvention,
    pub bounded_trace: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_SEARCH_BUDGET,
            convention: AnnulusConvention::Sec7,
            bounded_trace: DEFAULT_BOUNDED_TRACE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    ClassicalFound,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// Verified marking in the frame of the input generators.
    pub marking: Option<Marking>,
    pub system: Option<DiskSystem>,
    /// The marking's generators as words in the input generators.
    pub words: Vec<GroupWord>,
    pub trace: MoveTrace,
    /// Generators in the working frame after all accepted moves.
    pub final_generators: Vec<MoebiusMap>,
    #[serde(with = "crate::io::ext_f64")]
    pub best_margin: f64,
    pub moves: usize,
}

struct SearchState<'a> {
    original: &'a [MoebiusMap],
    gens: Vec<MoebiusMap>,
    trace: MoveTrace,
    basepoint: HalfSpacePoint,
    opts: SearchOptions,
    best_margin: f64,
    moves: usize,
}

struct Found {
    marking: Marking,
    system: DiskSystem,
    margin: f64,
}

fn cancels(a: &Move, b: &Move) -> bool {
    match (a, b) {
        (
            Move::Premultiply { target: t1, by: b1, exponent: e1 },
            Move::Premultiply { target: t2, by: b2, exponent: e2 },
        )
        | (
            Move::Postmultiply { target: t1, by: b1, exponent: e1 },
            Move::Postmultiply { target: t2, by: b2, exponent: e2 },
        ) => t1 == t2 && b1 == b2 && e1 == &-e2,
        _ => false,
    }
}

impl<'a> SearchState<'a> {
    fn original_gens(&self) -> Vec<MoebiusMap> {
        let words = self.trace.words(self.original.len());
        words
            .iter()
            .map(|w| {
                let g = word_to_map(w, self.original).expect("words use valid generators");
                MoebiusMap::new(g.a(), g.b(), g.c(), g.d()).unwrap_or(g)
            })
            .collect()
    }

    /// Evaluates every candidate system; returns the best verified one, or
    /// `None` with `best_margin` updated.
    fn evaluate(&mut self) -> (Option<Found>, f64) {
        let to_original = self.trace.conjugator().inverse();
        let original = self.original_gens();
        self.basepoint = balanced_basepoint(&self.gens, &self.basepoint);
        let mut best: Option<Found> = None;
        let mut margin = f64::NEG_INFINITY;
        for (system, ds) in
            candidate_systems(&self.gens, &self.basepoint, self.opts.convention, self.opts.bounded_trace)
        {
            let Some((mk, rep)) = realize(&ds, &to_original, &original) else {
                continue;
            };
            margin = margin.max(rep.min_margin);
            if rep.verified && best.as_ref().is_none_or(|b| rep.min_margin > b.margin) {
                best = Some(Found { marking: mk, system, margin: rep.min_margin });
            }
        }
        if best.is_none() {
            if let Some((x, mk, rep)) = self.margin_optimal_dirichlet(&to_original, &original) {
                margin = margin.max(rep.min_margin);
                if rep.verified {
                    best = Some(Found {
                        marking: mk,
                        system: DiskSystem::Dirichlet { basepoint: x },
                        margin: rep.min_margin,
                    });
                }
            }
        }
        self.best_margin = self.best_margin.max(margin);
        (best, margin)
    }

    /// Dirichlet system at the basepoint maximizing the realized margin,
    /// searched from the balanced basepoint.
    fn margin_optimal_dirichlet(
        &self,
        to_original: &MoebiusMap,
        original: &[MoebiusMap],
    ) -> Option<(HalfSpacePoint, Marking, VerificationReport)> {
        let h = to_j(&self.basepoint).inverse();
        let at = |p: [f64; 3]| apply_halfspace(&h, &HalfSpacePoint { z: c(p[0], p[1]), t: p[2].exp() });
        let system = |x: &HalfSpacePoint| {
            let ds = self.gens.iter().map(|g| dirichlet_disk(g, x)).collect::<Option<Vec<_>>>()?;
            realize(&ds, to_original, original)
        };
        let f = |p: [f64; 3]| system(&at(p)).map_or(f64::INFINITY, |(_, rep)| -rep.min_margin);
        let (p, _) = nelder_mead(f, [0.0, 0.0, 0.0], 0.3, 300);
        let x = at(p);
        let (mk, rep) = system(&x)?;
        Some((x, mk, rep))
    }

    fn push(&mut self, mv: Move, accepted: bool, case: Option<ProximityCase>, before: Diagnostics, after: Diagnostics) {
        if accepted {
            mv.apply(&mut self.gens);
            self.moves += 1;
        }
        self.trace.records.push(MoveRecord { mv, accepted, case, before, after, note: None });
    }

    fn nielsen_moves(&self) -> Vec<Move> {
        let k = self.gens.len();
        let mut out = Vec::new();
        for target in 0..k {
            for by in (0..k).filter(|&by| by != target) {
                for exponent in [-1, 1] {
                    out.push(Move::Premultiply { target, by, exponent });
                    out.push(Move::Postmultiply { target, by, exponent });
                }
            }
        }
        out
    }

    /// Shortest sequence of at most two Nielsen moves lowering the total
    /// displacement at the basepoint, preferring the largest drop.
    fn reduction(&self) -> Vec<Move> {
        let current = total_displacement(&self.gens, &self.basepoint);
        let bar = current - 1e-9 * (1.0 + current);
        let moves = self.nielsen_moves();
        let mut best: Option<(f64, Vec<Move>)> = None;
        let consider = |best: &mut Option<(f64, Vec<Move>)>, t: f64, seq: Vec<Move>| {
            if t < bar && best.as_ref().is_none_or(|b| t < b.0) {
                *best = Some((t, seq));
            }
        };
        let firsts: Vec<(Move, Vec<MoebiusMap>)> = moves
            .iter()
            .map(|mv| {
                let mut trial = self.gens.clone();
                mv.apply(&mut trial);
                (mv.clone(), trial)
            })
            .collect();
        for (mv, trial) in &firsts {
            consider(&mut best, total_displacement(trial, &self.basepoint), vec![mv.clone()]);
        }
        if best.is_none() {
            for (mv, trial) in &firsts {
                for second in moves.iter().filter(|m| !cancels(mv, m)) {
                    let mut t2 = trial.clone();
                    second.apply(&mut t2);
                    consider(&mut best, total_displacement(&t2, &self.basepoint), vec![mv.clone(), second.clone()]);
                }
            }
        }
        if best.is_none() {
            let balanced = |gens: &[MoebiusMap]| total_displacement(gens, &balanced_basepoint(gens, &self.basepoint));
            let bar = balanced(&self.gens).min(current);
            let bar = bar - 1e-9 * (1.0 + bar);
            for (mv, trial) in &firsts {
                let t = balanced(trial);
                if t < bar && best.as_ref().is_none_or(|b| t < b.0) {
                    best = Some((t, vec![mv.clone()]));
                }
            }
        }
        best.map(|(_, seq)| seq).unwrap_or_default()
    }

    /// Inner automorphism `g_i <- g_j^e g_i g_j^-e` moving the balanced
    /// basepoint closest to `j`, when that brings it closer.
    fn centering(&self) -> Option<(Vec<Move>, HalfSpacePoint)> {
        let k = self.gens.len();
        let j = HalfSpacePoint::j();
        let current = hyp_distance(&j, &self.basepoint);
        let mut best: Option<(f64, usize, i64, HalfSpacePoint)> = None;
        for by in 0..k {
            for e in [-1, 1] {
                let g = if e > 0 { self.gens[by] } else { self.gens[by].inverse() };
                let p = apply_halfspace(&g, &self.basepoint);
                let d = hyp_distance(&j, &p);
                if d < current - 1e-9 * (1.0 + current) && best.as_ref().is_none_or(|b| d < b.0) {
                    best = Some((d, by, e, p));
                }
            }
        }
        let (_, by, e, p) = best?;
        let moves = (0..k)
            .filter(|&i| i != by)
            .flat_map(|target| {
                [Move::Premultiply { target, by, exponent: e }, Move::Postmultiply { target, by, exponent: -e }]
            })
            .collect();
        Some((moves, p))
    }

    /// Standardize the smallest-trace generator as generator 1, then run a
    /// greedy annulus pass over the rest.
    fn normal_form_round(&mut self, margin: f64) -> Result<()> {
        let k = self.gens.len();
        let i = (0..k)
            .filter(|&i| self.gens[i].is_loxodromic())
            .min_by(|&a, &b| self.gens[a].trace().norm().total_cmp(&self.gens[b].trace().norm()))
            .ok_or(Error::NotLoxodromic)?;
        let before = diagnose(&self.gens, margin);
        if i != 0 {
            self.push(Move::Swap { i: 0, j: i }, true, None, before, before);
        }
        if !is_standard(&self.gens[0]) {
            let (h, _) = standardize(&self.gens, 0)?;
            self.push(Move::Standardize { index: 0, conjugator: h }, true, None, before, before);
        }
        if self.gens[0].a().norm() < 1.0 {
            self.push(Move::Invert { index: 0 }, true, None, before, before);
        }
        if k < 2 {
            return Ok(());
        }
        let (_, pass) = gamma_pass(&self.gens, self.opts.convention)?;
        for rec in pass.records {
            if self.moves >= self.opts.budget {
                break;
            }
            let mut trial = self.gens.clone();
            rec.mv.apply(&mut trial);
            let m_before = frame_margin(&self.gens);
            let m_after = frame_margin(&trial);
            let ok = rec.accepted && m_after >= m_before - PLATEAU_TOL;
            let (b, a) = (diagnose(&self.gens, m_before), diagnose(&trial, m_after));
            self.push(rec.mv, ok, rec.case, b, a);
        }
        Ok(())
    }
}

/// Searches for a classical marking of the group generated by `gens`.
pub fn search_classical(gens: &[MoebiusMap], opts: SearchOptions) -> Result<SearchOutcome> {
    if gens.is_empty() {
        return Err(Error::InvalidArgument("no generators".into()));
    }
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let mut st = SearchState {
        original: gens,
        gens: gens.to_vec(),
        trace: MoveTrace::default(),
        basepoint: HalfSpacePoint::j(),
        opts,
        best_margin: f64::NEG_INFINITY,
        moves: 0,
    };
    let mut seen: HashSet<Vec<GroupWord>> = HashSet::new();
    let mut normal_form_tried = false;
    let found = loop {
        let (found, margin) = st.evaluate();
        if found.is_some() {
            break found;
        }
        if st.moves >= opts.budget {
            break None;
        }
        seen.insert(st.trace.words(gens.len()));
        let unseen = |seq: &[Move]| {
            let mut words = st.trace.words(gens.len());
            for mv in seq {
                mv.apply_words(&mut words);
            }
            !seq.is_empty() && !seen.contains(&words)
        };
        let mut step = Some((st.reduction(), None)).filter(|(seq, _)| unseen(seq));
        if step.is_none() {
            step = st.centering().map(|(seq, p)| (seq, Some(p))).filter(|(seq, _)| unseen(seq));
        }
        if let Some((seq, recentre)) = step {
            for mv in seq {
                let before = diagnose(&st.gens, frame_margin(&st.gens));
                let mut trial = st.gens.clone();
                mv.apply(&mut trial);
                st.push(mv, true, None, before, diagnose(&trial, frame_margin(&trial)));
            }
            if let Some(p) = recentre {
                st.basepoint = p;
            }
            normal_form_tried = false;
            continue;
        }
        if normal_form_tried {
            break None;
        }
        normal_form_tried = true;
        let before_moves = st.moves;
        if st.normal_form_round(margin).is_err() || st.moves == before_moves {
            let (found, _) = st.evaluate();
            break found;
        }
    };
    let words = st.trace.words(gens.len());
    Ok(match found {
        Some(f) => {
            if let DiskSystem::Annulus { rescale: Some(kind), .. } = f.system {
                if let Some(r) = rescale_candidates(&st.gens, opts.convention).into_iter().find(|r| r.kind == kind) {
                    let d = diagnose(&st.gens, f.margin);
                    st.trace.records.push(MoveRecord {
                        mv: Move::Rescale { factor: r.factor, kind: Some(kind) },
                        accepted: true,
                        case: None,
                        before: d,
                        after: d,
                        note: None,
                    });
                    st.gens = st.trace.replay(gens);
                }
            }
            SearchOutcome {
                status: SearchStatus::ClassicalFound,
                marking: Some(f.marking),
                system: Some(f.system),
                words,
                final_generators: st.gens,
                best_margin: st.best_margin.max(f.margin),
                moves: st.moves,
                trace: st.trace,
            }
        }
        None => SearchOutcome {
            status: SearchStatus::BudgetExhausted,
            marking: None,
            system: None,
            words,
            final_generators: st.gens,
            best_margin: st.best_margin,
            moves: st.moves,
            trace: st.trace,
        },
    })
}

/// A random Moebius map with entries in the unit square around the
/// identity, rejecting nearly singular draws.
pub fn random_conjugator<R: Rng>(rng: &mut R) -> MoebiusMap {
    loop {
        let mut e = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (a, b, cc, d) = (e() + 1.0, e(), e(), e() + 1.0);
        let det = a * d - b * cc;
        if det.norm() > 0.25 {
            if let Ok(m) = MoebiusMap::new(a, b, cc, d) {
                return m;
            }
        }
    }
}

/// Applies `n` random moves of the forms `g_i <- g_j g_i` and
/// `g_i <- g_i^{-1}`.
pub fn scramble<R: Rng>(gens: &[MoebiusMap], n: usize, rng: &mut R) -> (Vec<MoebiusMap>, Vec<Move>) {
    let k = gens.len();
    let mut out = gens.to_vec();
    let mut moves = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.gen_range(0..k);
        let mv = if k > 1 && rng.gen_bool(0.7) {
            let mut by = rng.gen_range(0..k - 1);
            if by >= target {
                by += 1;
            }
            Move::Premultiply { target, by, exponent: 1 }
        } else {
            Move::Invert { index: target }
        };
        mv.apply(&mut out);
        moves.push(mv);
    }
    (out, moves)
}

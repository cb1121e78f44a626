//! Critical-exponent bounds from generator displacements and shell-ratio
//! estimates of the critical exponent from orbit enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{displacement, to_j, HalfSpacePoint};
use crate::moebius::{ExtComplex, MoebiusMap, C64};
use crate::words::{shell_size, total_words, ShellIter, DEFAULT_WORD_BUDGET};

const BISECTION_TOL: f64 = 1e-12;
const SERIES_TOL: f64 = 1e-6;
const CHUNK: usize = 4096;

#[inline]
fn logistic_tail(x: f64) -> f64 {
    // 1/(1 + e^x) without overflow
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn check_displacements(ds: &[f64]) -> Result<()> {
    match ds.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        Some(&d) => Err(Error::NonpositiveDisplacement(d)),
        None => Ok(()),
    }
}

/// `F(D) = sum_i 1/(1 + e^{D d_i})`.
pub fn displacement_sum(dim: f64, displacements: &[f64]) -> Result<f64> {
    check_displacements(displacements)?;
    if !(dim >= 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be nonnegative, got {dim}")));
    }
    Ok(displacements.iter().map(|d| logistic_tail(dim * d)).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// Root of `F(D) = 1/2`; 0 when the rank is below 2.
    pub d_low: f64,
    pub rank_too_small: bool,
    pub displacements: Vec<f64>,
    /// `F(d_low) - 1/2`.
    pub residual: f64,
    /// `log 3 / d_low`, the rank-2 threshold.
    #[serde(with = "crate::io::ext_f64")]
    pub threshold_rank2: f64,
    /// `log(2k - 1) / d_low`: some generator displaces at least this much
    /// whenever `d_low` is the true exponent.
    #[serde(with = "crate::io::ext_f64")]
    pub threshold_rank_k: f64,
}

/// Bisection root of `F(D) = 1/2` from raw displacements.
pub fn lower_bound_from_displacements(displacements: &[f64]) -> Result<LowerBound> {
    check_displacements(displacements)?;
    let k = displacements.len();
    if k < 2 {
        return Ok(LowerBound {
            d_low: 0.0,
            rank_too_small: true,
            displacements: displacements.to_vec(),
            residual: displacement_sum(0.0, displacements)? - 0.5,
            threshold_rank2: f64::INFINITY,
            threshold_rank_k: f64::INFINITY,
        });
    }
    let f = |x: f64| displacements.iter().map(|d| logistic_tail(x * d)).sum::<f64>() - 0.5;
    let (mut lo, mut hi) = (0.0, 64.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > BISECTION_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d_low = 0.5 * (lo + hi);
    Ok(LowerBound {
        d_low,
        rank_too_small: false,
        displacements: displacements.to_vec(),
        residual: f(d_low),
        threshold_rank2: 3f64.ln() / d_low,
        threshold_rank_k: ((2 * k - 1) as f64).ln() / d_low,
    })
}

/// Generator displacements `d(x, g_i x)`.
pub fn generator_displacements(gens: &[MoebiusMap], basepoint: &HalfSpacePoint) -> Vec<f64> {
    gens.iter().map(|g| displacement(g, basepoint)).collect()
}

pub fn critical_lower_bound(gens: &[MoebiusMap], basepoint: &HalfSpacePoint) -> Result<LowerBound> {
    lower_bound_from_displacements(&generator_displacements(gens, basepoint))
}

/// `(1/D) log(((2k-3) e^{D d} + (2k-1)) / (e^{D d} - 1))`.
pub fn partner_bound(dim: f64, d: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument("rank must be at least 2".into()));
    }
    if !(dim > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be positive, got {dim}")));
    }
    check_displacements(&[d])?;
    let x = dim * d;
    let em1 = x.exp_m1();
    if em1 <= 1e-15 {
        return Err(Error::DegenerateDenominator(x.exp()));
    }
    let k = k as f64;
    let ratio = if x > 700.0 {
        // e^x overflows; the ratio tends to 2k - 3 from above
        (2.0 * k - 3.0) + (4.0 * k - 4.0) * (-x).exp()
    } else {
        ((2.0 * k - 3.0) * x.exp() + (2.0 * k - 1.0)) / em1
    };
    Ok(ratio.ln() / dim)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairThresholdCheck {
    pub m: i64,
    pub d_first: f64,
    pub d_second: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// For `g_1^m g_2` and `g_1^{m+1} g_2`, whether one of them displaces the
/// basepoint by at least `log 3 / dim`.
pub fn pair_threshold_check(
    g1: &MoebiusMap,
    g2: &MoebiusMap,
    basepoint: &HalfSpacePoint,
    dim: f64,
    m: i64,
) -> PairThresholdCheck {
    let a = g1.pow(m).compose(g2);
    let b = g1.pow(m + 1).compose(g2);
    let (d_first, d_second) = (displacement(&a, basepoint), displacement(&b, basepoint));
    let threshold = 3f64.ln() / dim;
    PairThresholdCheck { m, d_first, d_second, threshold, holds: d_first.max(d_second) >= threshold }
}

#[derive(Clone, Copy)]
struct Mat {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
}

impl Mat {
    fn of(m: &MoebiusMap) -> Self {
        let [a, b, c, d] = m.entries();
        Mat { a, b, c, d }
    }

    #[inline(always)]
    fn mul(&self, o: &Mat) -> Mat {
        Mat {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    #[inline(always)]
    fn frobenius_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    fn to_map(self) -> MoebiusMap {
        MoebiusMap::new(self.a, self.b, self.c, self.d).expect("products of unit-determinant maps")
    }
}

#[inline]
fn displacement_at_j(m: &Mat) -> f64 {
    let e = (m.frobenius_sqr() / 2.0 - 1.0).max(0.0);
    (e + (e * (e + 2.0)).sqrt()).ln_1p()
}

/// Visits every reduced word of length `1..=max_len` whose letters start
/// with `prefix`, depth first, calling `visit(len, product)`.
fn dfs<F: FnMut(usize, &Mat)>(alphabet: &[Mat], prefix: &[u16], max_len: usize, visit: &mut F) {
    if prefix.is_empty() || prefix.len() > max_len {
        return;
    }
    let mut m = alphabet[prefix[0] as usize];
    for &l in &prefix[1..] {
        m = m.mul(&alphabet[l as usize]);
    }
    visit(prefix.len(), &m);
    let n_letters = alphabet.len() as u16;
    fn rec<F: FnMut(usize, &Mat)>(
        alphabet: &[Mat],
        n_letters: u16,
        m: &Mat,
        last: u16,
        len: usize,
        max_len: usize,
        visit: &mut F,
    ) {
        if len == max_len {
            return;
        }
        for l in 0..n_letters {
            if l == (last ^ 1) {
                continue;
            }
            let next = m.mul(&alphabet[l as usize]);
            visit(len + 1, &next);
            rec(alphabet, n_letters, &next, l, len + 1, max_len, visit);
        }
    }
    rec(alphabet, n_letters, &m, *prefix.last().unwrap(), prefix.len(), max_len, visit);
}

/// Runs `f` on every reduced word up to `max_len`, in parallel over
/// two-letter prefixes, and returns the outputs shell by shell in
/// enumeration order.
fn collect_shells<T, F>(gens: &[MoebiusMap], max_len: usize, f: F) -> Vec<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Mat) -> T + Sync,
{
    let k = gens.len();
    let alphabet: Vec<Mat> = gens.iter().flat_map(|g| [Mat::of(g), Mat::of(&g.inverse())]).collect();
    let mut shells: Vec<Vec<T>> = (0..max_len).map(|_| Vec::new()).collect();
    if max_len == 0 || k == 0 {
        return shells;
    }
    for w in ShellIter::new(k, 1) {
        shells[0].push(f(1, &alphabet[w.letters()[0] as usize]));
    }
    if max_len == 1 {
        return shells;
    }
    let prefixes: Vec<Vec<u16>> = ShellIter::new(k, 2).map(|w| w.letters().to_vec()).collect();
    let parts: Vec<Vec<Vec<T>>> = prefixes
        .par_iter()
        .map(|p| {
            let mut local: Vec<Vec<T>> = (0..max_len).map(|_| Vec::new()).collect();
            dfs(&alphabet, p, max_len, &mut |len, m| local[len - 1].push(f(len, m)));
            local
        })
        .collect();
    for part in parts {
        for (n, v) in part.into_iter().enumerate() {
            shells[n].extend(v);
        }
    }
    shells
}

/// Displacements `d(x, w x)` for every reduced word, grouped by length.
pub fn shell_displacements(gens: &[MoebiusMap], basepoint: &HalfSpacePoint, max_len: usize) -> Vec<Vec<f64>> {
    let h = to_j(basepoint);
    let moved: Vec<MoebiusMap> = gens.iter().map(|g| g.conjugate_by(&h)).collect();
    collect_shells(&moved, max_len, |_, m| displacement_at_j(m))
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            comp += (s - t) + x;
        } else {
            comp += (x - t) + s;
        }
        s = t;
    }
    s + comp
}

/// `log sum_i e^{-s d_i}`, reduced over fixed chunks so the result does not
/// depend on the number of worker threads.
pub fn log_shell_sum(s: f64, ds: &[f64]) -> f64 {
    if ds.is_empty() {
        return f64::NEG_INFINITY;
    }
    let dmin = ds.iter().copied().fold(f64::INFINITY, f64::min);
    let partial: Vec<f64> =
        ds.par_chunks(CHUNK).map(|c| compensated_sum(c.iter().map(|d| (-s * (d - dmin)).exp()))).collect();
    compensated_sum(partial.into_iter()).ln() - s * dmin
}

/// Root of `log S_n(s) = log S_{n-1}(s)` on `s >= 0`; 0 when the ratio is
/// already at most 1 at `s = 0`.
fn shell_ratio_root(prev: &[f64], cur: &[f64]) -> f64 {
    let f = |s: f64| log_shell_sum(s, cur) - log_shell_sum(s, prev);
    if f(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 4.0);
    while f(hi) > 0.0 && hi < 1024.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > SERIES_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRoot {
    /// Shell pair `(n - 1, n)`.
    pub n: usize,
    pub root: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSum {
    pub n: usize,
    pub words: u64,
    /// `sum_{|w| = n} e^{-s d(x, w x)}` at the reported estimate.
    pub sum: f64,
    pub log_sum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub s: f64,
    /// `log S_N(s) - log S_{N-1}(s)` for the last shell pair.
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    /// Heuristic estimate of the critical exponent (not a bound).
    pub d_series: f64,
    pub shells: usize,
    pub requested_max_len: usize,
    pub words: u64,
    /// Roots for the last (up to) three shell pairs, oldest first.
    pub last_roots: Vec<ShellRoot>,
    pub spread: f64,
    pub shell_sums: Vec<ShellSum>,
    pub ratio_curve: Vec<RatioPoint>,
}

/// Largest `n <= max_len` whose cumulative word count fits the budget.
pub fn shells_within_budget(k: usize, max_len: usize, budget: u64) -> usize {
    (0..=max_len).rev().find(|&n| total_words(k, n) <= u128::from(budget)).unwrap_or(0)
}

pub const MIN_SHELLS: usize = 4;

/// Shell-ratio estimate from precomputed per-shell displacements.
pub fn series_from_shells(shells: &[Vec<f64>], requested_max_len: usize) -> Result<SeriesEstimate> {
    let n = shells.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two shells".into()));
    }
    let first = 2.max(n.saturating_sub(2));
    let last_roots: Vec<ShellRoot> =
        (first..=n).map(|m| ShellRoot { n: m, root: shell_ratio_root(&shells[m - 2], &shells[m - 1]) }).collect();
    let d_series = last_roots.last().map(|r| r.root).unwrap_or(0.0);
    let lo = last_roots.iter().map(|r| r.root).fold(f64::INFINITY, f64::min);
    let hi = last_roots.iter().map(|r| r.root).fold(f64::NEG_INFINITY, f64::max);
    let shell_sums = shells
        .iter()
        .enumerate()
        .map(|(i, ds)| {
            let log_sum = log_shell_sum(d_series, ds);
            ShellSum { n: i + 1, words: ds.len() as u64, sum: log_sum.exp(), log_sum }
        })
        .collect();
    let ratio_curve = (0..=16)
        .map(|i| {
            let s = i as f64 * 0.125;
            RatioPoint { s, log_ratio: log_shell_sum(s, &shells[n - 1]) - log_shell_sum(s, &shells[n - 2]) }
        })
        .collect();
    Ok(SeriesEstimate {
        d_series,
        shells: n,
        requested_max_len,
        words: shells.iter().map(|s| s.len() as u64).sum(),
        last_roots,
        spread: hi - lo,
        shell_sums,
        ratio_curve,
    })
}

/// Enumerates shells up to `max_len` (or fewer if the budget runs out)
/// and estimates the exponent from the growth of the last shells.
pub fn series_estimate(
    gens: &[MoebiusMap],
    basepoint: &HalfSpacePoint,
    max_len: usize,
    budget: u64,
) -> Result<SeriesEstimate> {
    let k = gens.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no generators".into()));
    }
    if max_len < MIN_SHELLS {
        return Err(Error::InvalidArgument(format!("max_len must be at least {MIN_SHELLS}")));
    }
    let n = shells_within_budget(k, max_len, budget);
    if n < MIN_SHELLS {
        return Err(Error::BudgetExceeded { needed: total_words(k, MIN_SHELLS), budget, shells: MIN_SHELLS });
    }
    let shells = shell_displacements(gens, basepoint, n);
    series_from_shells(&shells, max_len)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionBounds {
    pub basepoint: HalfSpacePoint,
    pub lower: LowerBound,
    pub series: SeriesEstimate,
    /// `d_low <= d_series + slack` with the slack used by the caller.
    pub ordered: bool,
    pub slack: f64,
}

pub const ORDER_SLACK: f64 = 0.05;

pub fn dimension_bounds(
    gens: &[MoebiusMap],
    basepoint: &HalfSpacePoint,
    max_len: usize,
    budget: u64,
) -> Result<DimensionBounds> {
    let lower = critical_lower_bound(gens, basepoint)?;
    let series = series_estimate(gens, basepoint, max_len, budget)?;
    let ordered = lower.d_low <= series.d_series + ORDER_SLACK;
    Ok(DimensionBounds { basepoint: *basepoint, lower, series, ordered, slack: ORDER_SLACK })
}

pub fn default_budget() -> u64 {
    DEFAULT_WORD_BUDGET
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub word_len: usize,
    pub point: ExtComplex,
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub points: Vec<OrbitPoint>,
    /// Words whose map is not loxodromic.
    pub skipped: u64,
}

/// Attracting fixed point and displacement from `j` of every reduced word
/// up to `max_len`, in enumeration order.
pub fn sample_limit_points(gens: &[MoebiusMap], max_len: usize, budget: u64) -> Result<OrbitSample> {
    let k = gens.len();
    let count = total_words(k, max_len);
    if count > u128::from(budget) {
        return Err(Error::CapExceeded { count, budget });
    }
    let shells = collect_shells(gens, max_len, |len, m| {
        let map = m.to_map();
        if !map.is_loxodromic() {
            return None;
        }
        let fp = map.fixed_points().ok()?;
        Some(OrbitPoint { word_len: len, point: fp.attracting(), displacement: displacement_at_j(m) })
    });
    let mut points = Vec::new();
    let mut skipped = 0u64;
    for p in shells.into_iter().flatten() {
        match p {
            Some(p) => points.push(p),
            None => skipped += 1,
        }
    }
    Ok(OrbitSample { points, skipped })
}

/// Cross-check helper: the number of words the sampler visits.
pub fn sample_size(k: usize, max_len: usize) -> u128 {
    (1..=max_len).map(|n| shell_size(k, n)).sum()
}

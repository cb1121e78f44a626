//! Freely reduced words over `g_1, g_1^{-1}, ..., g_k, g_k^{-1}`.
//!
//! Letters are coded as `2i` for `g_{i+1}` and `2i + 1` for its inverse, so
//! the inverse of a letter is `code ^ 1` and the natural order of codes is
//! the alphabet order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::moebius::MoebiusMap;

pub type Letter = u16;

pub const DEFAULT_WORD_BUDGET: u64 = 5_000_000;

#[inline]
pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn empty() -> Self {
        GroupWord { letters: Vec::new() }
    }

    /// Builds a word from letter codes, freely reducing as it goes.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut w = GroupWord::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    /// Signed 1-based generator indices: `2` is `g_2`, `-1` is `g_1^{-1}`.
    pub fn from_signed(idx: &[i32]) -> Result<Self> {
        let mut out = Vec::with_capacity(idx.len());
        for &i in idx {
            if i == 0 {
                return Err(Error::InvalidArgument("generator index 0 in word".into()));
            }
            let g = (i.unsigned_abs() - 1) as Letter;
            out.push(2 * g + u16::from(i < 0));
        }
        Ok(Self::from_letters(out))
    }

    pub fn to_signed(&self) -> Vec<i32> {
        self.letters
            .iter()
            .map(|&l| {
                let g = (l / 2) as i32 + 1;
                if l & 1 == 1 {
                    -g
                } else {
                    g
                }
            })
            .collect()
    }

    pub fn generator(i: usize) -> Self {
        GroupWord { letters: vec![2 * i as Letter] }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Appends a letter, cancelling against the last one if needed.
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&inverse_letter(l)) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn inverse(&self) -> Self {
        GroupWord { letters: self.letters.iter().rev().map(|&l| inverse_letter(l)).collect() }
    }

    /// Reduced product `self * other`.
    pub fn concat(&self, other: &GroupWord) -> Self {
        let mut w = self.clone();
        for &l in &other.letters {
            w.push(l);
        }
        w
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = GroupWord::empty();
        for _ in 0..n.unsigned_abs() {
            w = w.concat(&base);
        }
        w
    }

    /// Rewrites every letter `g_i` as `images[i]` (a substitution of generators).
    pub fn substitute(&self, images: &[GroupWord]) -> Self {
        let mut w = GroupWord::empty();
        for &l in &self.letters {
            let img = &images[(l / 2) as usize];
            let piece = if l & 1 == 1 { img.inverse() } else { img.clone() };
            w = w.concat(&piece);
        }
        w
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|p| p[1] != inverse_letter(p[0]))
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|&l| (l / 2) as usize).max()
    }
}

impl Serialize for GroupWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_signed().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        GroupWord::from_signed(&v).map_err(serde::de::Error::custom)
    }
}

/// Number of reduced words of length exactly `n` in rank `k`.
pub fn shell_size(k: usize, n: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let k = k as u128;
    let mut s = 2 * k;
    for _ in 1..n {
        s = s.saturating_mul(2 * k - 1);
    }
    s
}

/// Number of nonempty reduced words of length at most `max_len`.
pub fn total_words(k: usize, max_len: usize) -> u128 {
    (1..=max_len).fold(0u128, |acc, n| acc.saturating_add(shell_size(k, n)))
}

/// Composes the letters left to right, `g_{w_1} g_{w_2} ... g_{w_n}`.
pub fn word_to_map(w: &GroupWord, gens: &[MoebiusMap]) -> Result<MoebiusMap> {
    if let Some(g) = w.max_generator() {
        if g >= gens.len() {
            return Err(Error::IndexOutOfRange { index: g + 1, rank: gens.len() });
        }
    }
    let alphabet = alphabet(gens);
    let mut acc = MoebiusMap::identity();
    for &l in w.letters() {
        acc = acc.compose(&alphabet[l as usize]);
    }
    Ok(acc)
}

/// `[g_1, g_1^{-1}, g_2, g_2^{-1}, ...]`.
pub fn alphabet(gens: &[MoebiusMap]) -> Vec<MoebiusMap> {
    gens.iter().flat_map(|g| [*g, g.inverse()]).collect()
}

/// Iterator over the reduced words of one length, in alphabet order.
#[derive(Clone, Debug)]
pub struct ShellIter {
    alphabet: Letter,
    fixed: usize,
    cur: Vec<Letter>,
    done: bool,
}

#[inline]
fn first_allowed(prev: Option<Letter>) -> Letter {
    if prev == Some(1) {
        1
    } else {
        0
    }
}

impl ShellIter {
    pub fn new(k: usize, n: usize) -> Self {
        Self::with_prefix(k, n, &[])
    }

    /// Words of length `n` beginning with the reduced word `prefix`.
    pub fn with_prefix(k: usize, n: usize, prefix: &[Letter]) -> Self {
        let alphabet = (2 * k) as Letter;
        let valid = prefix.iter().all(|&l| l < alphabet) && prefix.windows(2).all(|p| p[1] != inverse_letter(p[0]));
        if k == 0 || prefix.len() > n || !valid {
            return ShellIter { alphabet, fixed: prefix.len(), cur: Vec::new(), done: true };
        }
        let mut cur = prefix.to_vec();
        while cur.len() < n {
            cur.push(first_allowed(cur.last().copied()));
        }
        ShellIter { alphabet, fixed: prefix.len(), cur, done: false }
    }

    fn advance(&mut self) {
        let n = self.cur.len();
        let mut pos = n;
        while pos > self.fixed {
            pos -= 1;
            let banned = if pos > 0 { Some(inverse_letter(self.cur[pos - 1])) } else { None };
            let mut l = self.cur[pos] + 1;
            if Some(l) == banned {
                l += 1;
            }
            if l < self.alphabet {
                self.cur[pos] = l;
                for q in pos + 1..n {
                    self.cur[q] = first_allowed(Some(self.cur[q - 1]));
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for ShellIter {
    type Item = GroupWord;

    fn next(&mut self) -> Option<GroupWord> {
        if self.done {
            return None;
        }
        let out = GroupWord { letters: self.cur.clone() };
        self.advance();
        Some(out)
    }
}

/// All nonempty reduced words of length `1..=max_len`, shell by shell.
pub fn enumerate_words(k: usize, max_len: usize, budget: u64) -> Result<impl Iterator<Item = GroupWord>> {
    if k == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let count = total_words(k, max_len);
    if count > u128::from(budget) {
        return Err(Error::CapExceeded { count, budget });
    }
    Ok((1..=max_len).flat_map(move |n| ShellIter::new(k, n)))
}

//! Spiking patterns (one raster column) and rasters (the neural code).
//!
//! Text form of a pattern is a bitstring of `'0'`/`'1'` characters with the
//! neuron index increasing left to right.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Binary firing vector `eta` with `eta_i = 1` iff neuron `i` is at or above
/// threshold.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpikingPattern {
    len: usize,
    words: Vec<u64>,
}

impl SpikingPattern {
    pub fn zeros(n: usize) -> Self {
        SpikingPattern {
            len: n,
            words: vec![0; n.div_ceil(WORD)],
        }
    }

    pub fn ones(n: usize) -> Self {
        let mut p = Self::zeros(n);
        for i in 0..n {
            p.set(i, true);
        }
        p
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut p = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            p.set(i, b);
        }
        p
    }

    /// Pattern whose bit `i` is bit `i` of `index`. Used to enumerate the
    /// `2^n` domains of the natural partition.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= WORD, "index encoding supports at most 64 neurons");
        let mut p = Self::zeros(n);
        if n > 0 {
            let mask = if n == WORD { u64::MAX } else { (1u64 << n) - 1 };
            p.words[0] = index & mask;
        }
        p
    }

    /// Inverse of [`SpikingPattern::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= WORD, "index encoding supports at most 64 neurons");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, fired: bool) {
        debug_assert!(i < self.len);
        let bit = 1u64 << (i % WORD);
        if fired {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    /// Cardinality `c(eta)` of the firing set.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of the firing set `D(eta)` in increasing order.
    pub fn fire_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * WORD + b)
            })
        })
    }

    pub fn is_all_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.count_ones() == self.len
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for SpikingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl fmt::Debug for SpikingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpikingPattern({})", self.to_bitstring())
    }
}

impl FromStr for SpikingPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = SpikingPattern::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => p.set(i, true),
                other => return Err(Error::parse(format!("unexpected character {other:?} in spiking pattern"))),
            }
        }
        Ok(p)
    }
}

/// Time-indexed sequence of spiking patterns sharing one width.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Raster {
    n: usize,
    patterns: Vec<SpikingPattern>,
}

impl Raster {
    pub fn new(n: usize) -> Self {
        Raster {
            n,
            patterns: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Raster {
            n,
            patterns: Vec::with_capacity(capacity),
        }
    }

    pub fn from_patterns(n: usize, patterns: Vec<SpikingPattern>) -> Result<Self> {
        if let Some(bad) = patterns.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(Raster { n, patterns })
    }

    pub fn push(&mut self, pattern: SpikingPattern) -> Result<()> {
        if pattern.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: pattern.len(),
            });
        }
        self.patterns.push(pattern);
        Ok(())
    }

    /// Number of neurons.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<&SpikingPattern> {
        self.patterns.get(t)
    }

    pub fn patterns(&self) -> &[SpikingPattern] {
        &self.patterns
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SpikingPattern> {
        self.patterns.iter()
    }

    /// Firing times of neuron `i`, ascending. Empty when the neuron never
    /// fires within the raster.
    pub fn firing_times(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        Ok(self
            .patterns
            .iter()
            .enumerate()
            .filter_map(|(t, p)| p.get(i).then_some(t))
            .collect())
    }

    /// Cyclic rotation so that index `shift` becomes the first pattern.
    pub fn rotated(&self, shift: usize) -> Raster {
        let mut patterns = self.patterns.clone();
        if !patterns.is_empty() {
            let k = shift % patterns.len();
            patterns.rotate_left(k);
        }
        Raster { n: self.n, patterns }
    }

    /// Smallest rotation `r` with `self.rotated(r) == other`, if any.
    pub fn rotation_to(&self, other: &Raster) -> Option<usize> {
        if self.n != other.n || self.len() != other.len() {
            return None;
        }
        let p = self.len();
        if p == 0 {
            return Some(0);
        }
        (0..p).find(|&r| (0..p).all(|k| self.patterns[(r + k) % p] == other.patterns[k]))
    }

    /// One line per time step, `n` characters each.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.n + 1));
        for p in &self.patterns {
            out.push_str(&p.to_bitstring());
            out.push('\n');
        }
        out
    }

    /// Parses the text form. An empty input yields an empty raster of width
    /// `0`, so callers that know `n` should check it.
    pub fn from_text(text: &str) -> Result<Raster> {
        let patterns = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .map(SpikingPattern::from_str)
            .collect::<Result<Vec<_>>>()?;
        let n = patterns.first().map_or(0, SpikingPattern::len);
        Raster::from_patterns(n, patterns)
    }
}

impl<'a> IntoIterator for &'a Raster {
    type Item = &'a SpikingPattern;
    type IntoIter = std::slice::Iter<'a, SpikingPattern>;

    fn into_iter(self) -> Self::IntoIter {
        self.patterns.iter()
    }
}

impl std::ops::Index<usize> for Raster {
    type Output = SpikingPattern;

    fn index(&self, t: usize) -> &SpikingPattern {
        &self.patterns[t]
    }
}

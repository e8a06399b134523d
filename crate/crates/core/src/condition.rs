//! Sparse ternary conditions over bit positions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::instance::Instance;

/// Specified positions with their required bit, sorted by position.
/// Unlisted positions are `#`.
#[derive(Debug, Clone, Default)]
pub struct Condition {
    specified: Vec<(u32, bool)>,
    created_length: u32,
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.specified == other.specified
    }
}

impl Eq for Condition {}

impl std::hash::Hash for Condition {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.specified.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("malformed condition item {0:?}")]
    Item(String),
    #[error("position {0} listed twice")]
    Duplicate(u32),
}

impl Condition {
    /// The all-`#` condition; matches instances of any length.
    pub fn general() -> Self {
        Condition::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, bool)>, created_length: u32) -> Self {
        let mut specified: Vec<(u32, bool)> = pairs.into_iter().collect();
        specified.sort_unstable();
        specified.dedup_by_key(|p| p.0);
        let created_length = created_length.max(specified.last().map_or(0, |p| p.0 + 1));
        Condition { specified, created_length }
    }

    /// Specifies each instance bit with probability `1 - p_dontcare`.
    pub fn cover<R: Rng + ?Sized>(instance: &Instance, p_dontcare: f64, rng: &mut R) -> Self {
        let mut specified = Vec::new();
        if let Some(bits) = instance.as_bits() {
            for (i, &b) in bits.as_slice().iter().enumerate() {
                if rng.gen::<f64>() >= p_dontcare {
                    specified.push((i as u32, b));
                }
            }
        }
        Condition { specified, created_length: instance.len() as u32 }
    }

    pub fn specified(&self) -> &[(u32, bool)] {
        &self.specified
    }

    pub fn specificity(&self) -> usize {
        self.specified.len()
    }

    pub fn is_general(&self) -> bool {
        self.specified.is_empty()
    }

    pub fn created_length(&self) -> u32 {
        self.created_length
    }

    pub fn matches(&self, instance: &Instance) -> bool {
        if self.specified.is_empty() {
            return true;
        }
        match instance.as_bits() {
            Some(bits) => {
                let bits = bits.as_slice();
                self.specified
                    .iter()
                    .all(|&(p, b)| bits.get(p as usize) == Some(&b))
            }
            None => false,
        }
    }

    /// `self` accepts every instance `other` accepts: its specified set is a
    /// subset of `other`'s, with equal bits.
    pub fn is_more_general(&self, other: &Condition) -> bool {
        if self.specified.len() > other.specified.len() {
            return false;
        }
        let mut theirs = other.specified.iter();
        'outer: for mine in &self.specified {
            for t in theirs.by_ref() {
                if t.0 == mine.0 {
                    if t.1 != mine.1 {
                        return false;
                    }
                    continue 'outer;
                }
                if t.0 > mine.0 {
                    return false;
                }
            }
            return false;
        }
        true
    }

    fn get(&self, position: u32) -> Option<bool> {
        self.specified
            .binary_search_by_key(&position, |p| p.0)
            .ok()
            .map(|i| self.specified[i].1)
    }

    fn set(&mut self, position: u32, bit: Option<bool>) {
        match (self.specified.binary_search_by_key(&position, |p| p.0), bit) {
            (Ok(i), Some(b)) => self.specified[i].1 = b,
            (Ok(i), None) => {
                self.specified.remove(i);
            }
            (Err(i), Some(b)) => self.specified.insert(i, (position, b)),
            (Err(_), None) => {}
        }
    }

    /// Two-point crossover: positions in `[lo, hi)` swap between the children.
    pub fn crossover<R: Rng + ?Sized>(a: &mut Condition, b: &mut Condition, rng: &mut R) {
        let span = a.created_length.max(b.created_length).max(
            a.specified
                .iter()
                .chain(&b.specified)
                .map(|p| p.0 + 1)
                .max()
                .unwrap_or(0),
        );
        if span < 2 {
            return;
        }
        let mut x = rng.gen_range(0..=span);
        let mut y = rng.gen_range(0..=span);
        if x > y {
            std::mem::swap(&mut x, &mut y);
        }
        let mut positions: Vec<u32> = a
            .specified
            .iter()
            .chain(&b.specified)
            .map(|p| p.0)
            .filter(|p| (x..y).contains(p))
            .collect();
        positions.sort_unstable();
        positions.dedup();
        for p in positions {
            let (va, vb) = (a.get(p), b.get(p));
            a.set(p, vb);
            b.set(p, va);
        }
        a.created_length = span;
        b.created_length = span;
    }

    /// Niche mutation: each position of the instance toggles, with probability
    /// `mu`, between `#` and the instance's bit.
    pub fn mutate<R: Rng + ?Sized>(&mut self, instance: &Instance, mu: f64, rng: &mut R) -> bool {
        let Some(bits) = instance.as_bits() else { return false };
        let mut changed = false;
        for (i, &b) in bits.as_slice().iter().enumerate() {
            if rng.gen::<f64>() < mu {
                let p = i as u32;
                let next = if self.get(p).is_some() { None } else { Some(b) };
                self.set(p, next);
                changed = true;
            }
        }
        self.created_length = self.created_length.max(bits.len() as u32);
        changed
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.specified.is_empty() {
            return f.write_str("#");
        }
        for (n, (p, b)) in self.specified.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}:{}", u8::from(*b))?;
        }
        Ok(())
    }
}

impl FromStr for Condition {
    type Err = ConditionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "#" {
            return Ok(Condition::general());
        }
        let mut pairs = Vec::new();
        for item in s.split(',') {
            let bad = || ConditionError::Item(item.to_string());
            let (p, b) = item.split_once(':').ok_or_else(bad)?;
            let p: u32 = p.trim().parse().map_err(|_| bad())?;
            let b = match b.trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            pairs.push((p, b));
        }
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ConditionError::Duplicate(w[0].0));
        }
        Ok(Condition::from_pairs(pairs, 0))
    }
}

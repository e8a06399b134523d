//! Runtime values, the four-type lattice, and bit strings.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("cannot use a {from} value where {to} is required")]
    IncompatibleType { from: ValueType, to: ValueType },
    #[error("bit strings may not be empty")]
    EmptyBitString,
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
}

/// The four value types. `Binary` doubles as Boolean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Binary,
    Integer,
    Real,
    BitString,
}

impl ValueType {
    pub const ALL: [ValueType; 4] = [
        ValueType::Binary,
        ValueType::Integer,
        ValueType::Real,
        ValueType::BitString,
    ];

    /// One-way widening: Binary -> Integer -> Real. BitString stands alone.
    pub fn is_compatible_with(self, to: ValueType) -> bool {
        use ValueType::*;
        matches!(
            (self, to),
            (Binary, Binary | Integer | Real)
                | (Integer, Integer | Real)
                | (Real, Real)
                | (BitString, BitString)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueType::Binary => "Binary",
            ValueType::Integer => "Integer",
            ValueType::Real => "Real",
            ValueType::BitString => "BitString",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ValueType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Binary" | "Boolean" => Ok(ValueType::Binary),
            "Integer" => Ok(ValueType::Integer),
            "Real" | "Float" => Ok(ValueType::Real),
            "BitString" | "String" => Ok(ValueType::BitString),
            other => Err(format!("unknown value type {other:?}")),
        }
    }
}

pub fn is_compatible(from: ValueType, to: ValueType) -> bool {
    from.is_compatible_with(to)
}

/// A small set of value types, e.g. the types one function slot accepts.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TypeSet(u8);

impl TypeSet {
    pub const EMPTY: TypeSet = TypeSet(0);

    pub fn of(types: &[ValueType]) -> TypeSet {
        TypeSet(types.iter().fold(0, |acc, t| acc | t.bit()))
    }

    pub fn single(t: ValueType) -> TypeSet {
        TypeSet(t.bit())
    }

    pub fn contains(self, t: ValueType) -> bool {
        self.0 & t.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ValueType> {
        ValueType::ALL.into_iter().filter(move |t| self.contains(*t))
    }

    /// True when a value of type `from` may fill this slot.
    pub fn accepts(self, from: ValueType) -> bool {
        self.iter().any(|t| from.is_compatible_with(t))
    }

    /// The narrowest member of the set that `from` widens into.
    pub fn target_for(self, from: ValueType) -> Option<ValueType> {
        self.iter().find(|t| from.is_compatible_with(*t))
    }
}

impl fmt::Debug for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(ValueType::name).collect();
        f.write_str(&names.join("|"))
    }
}

impl FromStr for TypeSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = TypeSet::EMPTY;
        for part in s.split('|') {
            set = TypeSet(set.0 | part.parse::<ValueType>()?.bit());
        }
        Ok(set)
    }
}

/// Immutable, non-empty sequence of bits. Index 0 is the leftmost bit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Arc<[bool]>);

impl Bits {
    pub fn new(bits: Vec<bool>) -> Result<Bits, ValueError> {
        if bits.is_empty() {
            return Err(ValueError::EmptyBitString);
        }
        Ok(Bits(bits.into()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.0.get(index).copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    /// Value read as an unsigned base-2 numeral; `None` past 63 significant bits.
    pub fn to_unsigned(&self) -> Option<u64> {
        let start = self.0.iter().position(|b| *b).unwrap_or(self.0.len());
        if self.0.len() - start > 63 {
            return None;
        }
        Some(self.0[start..].iter().fold(0u64, |acc, b| (acc << 1) | *b as u64))
    }

    pub fn from_unsigned(mut n: u64) -> Bits {
        if n == 0 {
            return Bits(vec![false].into());
        }
        let mut bits = Vec::new();
        while n > 0 {
            bits.push(n & 1 == 1);
            n >>= 1;
        }
        bits.reverse();
        Bits(bits.into())
    }

    pub fn head(&self, n: usize) -> Result<Bits, ValueError> {
        Bits::new(self.0[..n.min(self.len())].to_vec())
    }

    pub fn tail(&self, n: usize) -> Result<Bits, ValueError> {
        let n = n.min(self.len());
        Bits::new(self.0[self.len() - n..].to_vec())
    }

    /// Unsigned binary addition without leading zeros.
    pub fn add(&self, other: &Bits) -> Bits {
        let (a, b) = (&self.0, &other.0);
        let width = a.len().max(b.len());
        let mut out = Vec::with_capacity(width + 1);
        let mut carry = false;
        for i in 0..width {
            let x = i < a.len() && a[a.len() - 1 - i];
            let y = i < b.len() && b[b.len() - 1 - i];
            out.push(x ^ y ^ carry);
            carry = (x && y) || (carry && (x ^ y));
        }
        if carry {
            out.push(true);
        }
        out.reverse();
        strip_leading_zeros(out)
    }

    /// |self - other| without leading zeros.
    pub fn abs_diff(&self, other: &Bits) -> Bits {
        let (big, small) = if compare_magnitude(&self.0, &other.0).is_lt() {
            (&other.0, &self.0)
        } else {
            (&self.0, &other.0)
        };
        let mut out = Vec::with_capacity(big.len());
        let mut borrow = false;
        for i in 0..big.len() {
            let x = big[big.len() - 1 - i];
            let y = i < small.len() && small[small.len() - 1 - i];
            let d = (x as i8) - (y as i8) - (borrow as i8);
            out.push(d.rem_euclid(2) == 1);
            borrow = d < 0;
        }
        out.reverse();
        strip_leading_zeros(out)
    }
}

fn strip_leading_zeros(bits: Vec<bool>) -> Bits {
    let start = bits.iter().position(|b| *b).unwrap_or(bits.len() - 1);
    Bits(bits[start..].into())
}

fn compare_magnitude(a: &[bool], b: &[bool]) -> std::cmp::Ordering {
    let trim = |s: &[bool]| -> usize { s.iter().position(|x| *x).unwrap_or(s.len()) };
    let (a, b) = (&a[trim(a)..], &b[trim(b)..]);
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|b| if *b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl FromStr for Bits {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ValueError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Bits::new(bits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Binary(bool),
    Integer(i64),
    Real(f64),
    BitString(Bits),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Binary(_) => ValueType::Binary,
            Value::Integer(_) => ValueType::Integer,
            Value::Real(_) => ValueType::Real,
            Value::BitString(_) => ValueType::BitString,
        }
    }

    pub fn bits(s: &str) -> Result<Value, ValueError> {
        Ok(Value::BitString(s.parse()?))
    }

    /// Numeric widening along the lattice; identity on equal tags.
    pub fn coerce(&self, to: ValueType) -> Result<Value, ValueError> {
        let from = self.value_type();
        if !from.is_compatible_with(to) {
            return Err(ValueError::IncompatibleType { from, to });
        }
        Ok(match (self, to) {
            (Value::Binary(b), ValueType::Integer) => Value::Integer(*b as i64),
            (Value::Binary(b), ValueType::Real) => Value::Real(*b as u8 as f64),
            (Value::Integer(i), ValueType::Real) => Value::Real(*i as f64),
            _ => self.clone(),
        })
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Binary(b) => Some(*b as u8 as f64),
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::BitString(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Binary(b) => Some(*b as i64),
            Value::Integer(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bits(&self) -> Option<&Bits> {
        match self {
            Value::BitString(b) => Some(b),
            _ => None,
        }
    }

    /// Grouping token: same-type equality, reals rounded to 9 decimals.
    pub fn canonical_key(&self) -> CanonicalKey {
        match self {
            Value::Binary(b) => CanonicalKey::Binary(*b),
            Value::Integer(i) => CanonicalKey::Integer(*i),
            Value::Real(r) => CanonicalKey::Real((r * 1e9).round() as i128),
            Value::BitString(b) => CanonicalKey::BitString(b.clone()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Binary(b) => write!(f, "{}", *b as u8),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => {
                let s = format!("{r:.9}");
                let s = s.trim_end_matches('0');
                if s.ends_with('.') {
                    write!(f, "{s}0")
                } else {
                    f.write_str(s)
                }
            }
            Value::BitString(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalKey {
    Binary(bool),
    Integer(i64),
    Real(i128),
    BitString(Bits),
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn add_and_diff_match_integers(a in 0u64..1 << 40, b in 0u64..1 << 40) {
            let (x, y) = (Bits::from_unsigned(a), Bits::from_unsigned(b));
            prop_assert_eq!(x.add(&y).to_unsigned(), Some(a + b));
            prop_assert_eq!(x.abs_diff(&y).to_unsigned(), Some(a.abs_diff(b)));
        }

        #[test]
        fn coerce_preserves_magnitude(i in any::<i32>()) {
            let v = Value::Integer(i as i64).coerce(ValueType::Real).unwrap();
            prop_assert_eq!(v.as_f64(), Some(i as f64));
        }
    }
}

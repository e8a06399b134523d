//! Curriculum subproblems, their ground-truth oracles and instance samplers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{Instance, Schema};
use crate::value::{Bits, Value, ValueType};

pub const REWARD_CORRECT: f64 = 1000.0;
pub const REWARD_INCORRECT: f64 = 0.0;

const MUX_LENGTHS: [usize; 7] = [3, 6, 11, 20, 37, 70, 135];
const BALANCE_TRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("{problem} is undefined for length {length}")]
    InvalidLength { problem: ProblemKind, length: usize },
    #[error("{0} expects a different instance layout")]
    WrongSchema(ProblemKind),
    #[error("unknown problem {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    KBitsGivenLength,
    KBits,
    KBitString,
    Bin2Int,
    AddressOf,
    ValueAt,
    HalfLength,
    HeadString,
    TailString,
    BinarySum,
    SumStringLength,
    IsCarried,
    SumMod2,
    EvenParity,
    IsMajorityOn,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 15] = [
        ProblemKind::KBitsGivenLength,
        ProblemKind::KBits,
        ProblemKind::KBitString,
        ProblemKind::Bin2Int,
        ProblemKind::AddressOf,
        ProblemKind::ValueAt,
        ProblemKind::HalfLength,
        ProblemKind::HeadString,
        ProblemKind::TailString,
        ProblemKind::BinarySum,
        ProblemKind::SumStringLength,
        ProblemKind::IsCarried,
        ProblemKind::SumMod2,
        ProblemKind::EvenParity,
        ProblemKind::IsMajorityOn,
    ];

    pub fn name(self) -> &'static str {
        use ProblemKind::*;
        match self {
            KBitsGivenLength => "KBitsGivenLength",
            KBits => "KBits",
            KBitString => "KBitString",
            Bin2Int => "Bin2Int",
            AddressOf => "AddressOf",
            ValueAt => "ValueAt",
            HalfLength => "HalfLength",
            HeadString => "HeadString",
            TailString => "TailString",
            BinarySum => "BinarySum",
            SumStringLength => "SumStringLength",
            IsCarried => "isCarried",
            SumMod2 => "SumMod2",
            EvenParity => "isEvenParity",
            IsMajorityOn => "isMajorityOn",
        }
    }

    /// Tag under which the layer's learned function is registered.
    pub fn tag(self) -> &'static str {
        use ProblemKind::*;
        match self {
            KBitsGivenLength => "k_l",
            KBits => "k",
            KBitString => "k_s",
            Bin2Int => "b2d",
            AddressOf => "d_c",
            ValueAt => "M@",
            HalfLength => "h",
            HeadString => "S_h",
            TailString => "S_t",
            BinarySum => "S_+",
            SumStringLength => "L_+",
            IsCarried => "iC",
            SumMod2 => "sm2",
            EvenParity => "iP_e",
            IsMajorityOn => "iM",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ProblemKind> {
        ProblemKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn schema(self) -> Schema {
        if self == ProblemKind::KBitsGivenLength {
            Schema::Scalar
        } else {
            Schema::Bits
        }
    }

    /// Type of the learned function's argument.
    pub fn input_type(self) -> ValueType {
        match self.schema() {
            Schema::Bits => ValueType::BitString,
            Schema::Scalar => ValueType::Integer,
        }
    }

    pub fn action_type(self) -> ValueType {
        use ProblemKind::*;
        match self {
            KBitsGivenLength | KBits | Bin2Int | AddressOf | HalfLength | SumStringLength
            | SumMod2 => ValueType::Integer,
            KBitString | HeadString | TailString | BinarySum => ValueType::BitString,
            ValueAt | IsCarried | EvenParity | IsMajorityOn => ValueType::Binary,
        }
    }

    /// Tags of the learned functions this layer is built on.
    pub fn prerequisites(self) -> &'static [&'static str] {
        use ProblemKind::*;
        match self {
            KBitsGivenLength | Bin2Int | HalfLength | SumMod2 => &[],
            KBits => &["k_l"],
            KBitString => &["k"],
            AddressOf => &["k", "b2d", "k_s"],
            ValueAt => &["d_c"],
            HeadString | TailString => &["h"],
            BinarySum => &["S_h", "S_t"],
            SumStringLength => &["S_+"],
            IsCarried => &["L_+", "h"],
            EvenParity => &["sm2"],
            IsMajorityOn => &["h"],
        }
    }

    /// Instance lengths (or integer values, for the scalar layout) used in training.
    pub fn training_lengths(self) -> Vec<usize> {
        use ProblemKind::*;
        match self {
            KBitsGivenLength | KBits => MUX_LENGTHS.to_vec(),
            KBitString | AddressOf | ValueAt => MUX_LENGTHS[..4].to_vec(),
            Bin2Int => (1..=8).collect(),
            SumMod2 | EvenParity => (1..=11).collect(),
            HalfLength | HeadString | TailString | BinarySum | SumStringLength | IsCarried => {
                (1..=6).map(|n| 2 * n).collect()
            }
            IsMajorityOn => (1..=7).collect(),
        }
    }

    pub fn valid_length(self, n: usize) -> bool {
        use ProblemKind::*;
        match self {
            KBitsGivenLength | KBits | KBitString | AddressOf | ValueAt => is_mux_length(n),
            Bin2Int => (1..=63).contains(&n),
            HalfLength | HeadString | TailString | BinarySum | SumStringLength | IsCarried => {
                n >= 2 && n.is_multiple_of(2)
            }
            SumMod2 | EvenParity | IsMajorityOn => n >= 1,
        }
    }

    pub fn oracle(self, instance: &Instance) -> Result<Value, ProblemError> {
        use ProblemKind::*;
        let n = match (self.schema(), instance) {
            (Schema::Scalar, Instance::Scalar(n)) => usize::try_from(*n).unwrap_or(0),
            (Schema::Bits, Instance::Bits(b)) => b.len(),
            _ => return Err(ProblemError::WrongSchema(self)),
        };
        if !self.valid_length(n) {
            return Err(ProblemError::InvalidLength { problem: self, length: n });
        }
        if self == KBitsGivenLength {
            return Ok(Value::Integer(k_of(n) as i64));
        }
        let s = instance.as_bits().expect("bit layout checked above");
        Ok(match self {
            KBitsGivenLength => unreachable!(),
            KBits => Value::Integer(k_of(n) as i64),
            KBitString => Value::BitString(prefix(s, k_of(n))),
            Bin2Int => Value::Integer(s.to_unsigned().expect("at most 63 bits") as i64),
            AddressOf => Value::Integer(address_of(s) as i64),
            ValueAt => Value::Binary(s.get(address_of(s)).expect("address within length")),
            HalfLength => Value::Integer((n / 2) as i64),
            HeadString => Value::BitString(prefix(s, n / 2)),
            TailString => Value::BitString(s.tail(n / 2).expect("half of an even length")),
            BinarySum => Value::BitString(binary_sum(s)),
            SumStringLength => Value::Integer(binary_sum(s).len() as i64),
            IsCarried => Value::Binary(binary_sum(s).len() > n / 2),
            SumMod2 => Value::Integer((s.count_ones() % 2) as i64),
            EvenParity => Value::Binary(s.count_ones().is_multiple_of(2)),
            IsMajorityOn => Value::Binary(s.count_ones() > n / 2),
        })
    }

    /// Accepts a layer name (any case), a tag, or a domain name.
    pub fn parse_name(name: &str) -> Result<ProblemKind, ProblemError> {
        let lower = name.to_ascii_lowercase();
        if let Some(domain) = Domain::parse(&lower) {
            return Ok(domain.final_problem());
        }
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == lower || k.tag() == name)
            .ok_or_else(|| ProblemError::Unknown(name.to_string()))
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemKind::parse_name(s)
    }
}

/// Any-scale target domains and the layer whose function solves each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Multiplexer,
    CarryOne,
    EvenParity,
    MajorityOn,
}

impl Domain {
    pub const ALL: [Domain; 4] =
        [Domain::Multiplexer, Domain::CarryOne, Domain::EvenParity, Domain::MajorityOn];

    pub fn parse(name: &str) -> Option<Domain> {
        match name.to_ascii_lowercase().as_str() {
            "mux" | "multiplexer" => Some(Domain::Multiplexer),
            "carry" | "carry-one" | "carryone" => Some(Domain::CarryOne),
            "parity" | "even-parity" | "evenparity" => Some(Domain::EvenParity),
            "majority" | "majority-on" | "majorityon" => Some(Domain::MajorityOn),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Multiplexer => "mux",
            Domain::CarryOne => "carry",
            Domain::EvenParity => "parity",
            Domain::MajorityOn => "majority",
        }
    }

    pub fn final_problem(self) -> ProblemKind {
        match self {
            Domain::Multiplexer => ProblemKind::ValueAt,
            Domain::CarryOne => ProblemKind::IsCarried,
            Domain::EvenParity => ProblemKind::EvenParity,
            Domain::MajorityOn => ProblemKind::IsMajorityOn,
        }
    }

    /// Large-scale validation rows: (instance length, instance count).
    pub fn validation_rows(self) -> &'static [(usize, usize)] {
        match self {
            Domain::Multiplexer => &[(1034, 1000), (8205, 100)],
            Domain::CarryOne => &[(100, 1000), (200, 1000)],
            Domain::EvenParity => &[(50, 1000), (100, 1000)],
            Domain::MajorityOn => &[(50, 1000), (105, 1000)],
        }
    }
}

pub fn is_mux_length(n: usize) -> bool {
    n >= 3 && {
        let k = k_of(n);
        k < 63 && k + (1usize << k) == n
    }
}

/// Address width of a multiplexer of length `n`.
pub fn k_of(n: usize) -> usize {
    (usize::BITS - 1 - n.max(1).leading_zeros()) as usize
}

fn prefix(s: &Bits, k: usize) -> Bits {
    s.head(k).expect("prefix within length")
}

fn address_of(s: &Bits) -> usize {
    let k = k_of(s.len());
    k + s.as_slice()[..k].iter().fold(0usize, |acc, &b| acc * 2 + usize::from(b))
}

fn binary_sum(s: &Bits) -> Bits {
    let h = s.len() / 2;
    prefix(s, h).add(&s.tail(h).expect("half of an even length"))
}

/// A problem restricted to a set of lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub kind: ProblemKind,
    lengths: Vec<usize>,
}

impl Problem {
    pub fn training(kind: ProblemKind) -> Problem {
        Problem { kind, lengths: kind.training_lengths() }
    }

    pub fn at_scale(kind: ProblemKind, length: usize) -> Result<Problem, ProblemError> {
        Problem::with_lengths(kind, vec![length])
    }

    pub fn with_lengths(kind: ProblemKind, lengths: Vec<usize>) -> Result<Problem, ProblemError> {
        if let Some(&bad) = lengths.iter().find(|&&n| !kind.valid_length(n)) {
            return Err(ProblemError::InvalidLength { problem: kind, length: bad });
        }
        if lengths.is_empty() {
            return Err(ProblemError::InvalidLength { problem: kind, length: 0 });
        }
        Ok(Problem { kind, lengths })
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn max_length(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(1)
    }

    /// Uniform over lengths, then uniform over contents.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let n = self.lengths[rng.gen_range(0..self.lengths.len())];
        match self.kind.schema() {
            Schema::Scalar => Instance::Scalar(n as i64),
            Schema::Bits => {
                let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
                Instance::Bits(Bits::new(bits).expect("lengths are positive"))
            }
        }
    }

    pub fn oracle(&self, instance: &Instance) -> Result<Value, ProblemError> {
        self.kind.oracle(instance)
    }
}

/// Seeded instance stream. Binary-target problems alternate the wanted class.
#[derive(Debug, Clone)]
pub struct Sampler {
    problem: Problem,
    rng: ChaCha8Rng,
    balanced: bool,
    drawn: u64,
}

impl Sampler {
    pub fn new(problem: Problem, seed: u64) -> Sampler {
        let balanced = problem.kind.action_type() == ValueType::Binary;
        Sampler { problem, rng: ChaCha8Rng::seed_from_u64(seed), balanced, drawn: 0 }
    }

    pub fn uniform(problem: Problem, seed: u64) -> Sampler {
        Sampler { balanced: false, ..Sampler::new(problem, seed) }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn next_pair(&mut self) -> (Instance, Value) {
        let oracle = |i: &Instance| self.problem.oracle(i).expect("sampled lengths are valid");
        if !self.balanced {
            let i = self.problem.sample_uniform(&mut self.rng);
            let v = oracle(&i);
            return (i, v);
        }
        // classes run 0,1,1,0 so that alternate draws are balanced as well
        let want = Value::Binary(self.drawn.div_ceil(2) % 2 == 1);
        self.drawn += 1;
        let mut last = None;
        for _ in 0..BALANCE_TRIES {
            let i = self.problem.sample_uniform(&mut self.rng);
            let v = oracle(&i);
            if v == want {
                return (i, v);
            }
            last = Some((i, v));
        }
        last.expect("at least one draw")
    }
}

/// One `instance<TAB>target` line.
pub fn dataset_line(instance: &Instance, target: &Value) -> String {
    format!("{instance}\t{target}")
}

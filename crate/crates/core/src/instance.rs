use std::fmt;

use crate::value::{Bits, Value, ValueType};

/// Attribute layout of the instances a problem presents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schema {
    /// A run of Binary attributes `D0, D1, ...`.
    Bits,
    /// One Integer attribute `D0`.
    Scalar,
}

impl Schema {
    pub fn attribute_type(self) -> ValueType {
        match self {
            Schema::Bits => ValueType::Binary,
            Schema::Scalar => ValueType::Integer,
        }
    }
}

/// One environment state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instance {
    Bits(Bits),
    Scalar(i64),
}

impl Instance {
    pub fn schema(&self) -> Schema {
        match self {
            Instance::Bits(_) => Schema::Bits,
            Instance::Scalar(_) => Schema::Scalar,
        }
    }

    /// Number of attributes.
    pub fn len(&self) -> usize {
        match self {
            Instance::Bits(b) => b.len(),
            Instance::Scalar(_) => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn attribute(&self, index: usize) -> Option<Value> {
        match self {
            Instance::Bits(b) => b.get(index).map(Value::Binary),
            Instance::Scalar(n) if index == 0 => Some(Value::Integer(*n)),
            Instance::Scalar(_) => None,
        }
    }

    pub fn bit(&self, index: usize) -> Option<bool> {
        match self {
            Instance::Bits(b) => b.get(index),
            Instance::Scalar(_) => None,
        }
    }

    pub fn as_bits(&self) -> Option<&Bits> {
        match self {
            Instance::Bits(b) => Some(b),
            Instance::Scalar(_) => None,
        }
    }

    /// The whole instance as one value: the `attlst` reading.
    pub fn to_value(&self) -> Value {
        match self {
            Instance::Bits(b) => Value::BitString(b.clone()),
            Instance::Scalar(n) => Value::Integer(*n),
        }
    }

    /// Inverse of [`Instance::to_value`]; learned functions see their argument this way.
    pub fn from_value(value: &Value) -> Option<Instance> {
        match value {
            Value::BitString(b) => Some(Instance::Bits(b.clone())),
            Value::Integer(n) => Some(Instance::Scalar(*n)),
            Value::Binary(b) => Some(Instance::Scalar(*b as i64)),
            Value::Real(_) => None,
        }
    }

    pub fn parse(text: &str, schema: Schema) -> Option<Instance> {
        match schema {
            Schema::Bits => text.parse().ok().map(Instance::Bits),
            Schema::Scalar => text.trim().parse().ok().map(Instance::Scalar),
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instance::Bits(b) => write!(f, "{b}"),
            Instance::Scalar(n) => write!(f, "{n}"),
        }
    }
}

impl From<Bits> for Instance {
    fn from(b: Bits) -> Self {
        Instance::Bits(b)
    }
}

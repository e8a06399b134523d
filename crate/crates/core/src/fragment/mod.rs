//! Typed code fragments: the computed actions of classifiers.

mod generate;
mod text;

use std::collections::HashMap;

use thiserror::Error;

use crate::instance::{Instance, Schema};
use crate::registry::{FnId, FunctionKind, Registry};
use crate::value::{CanonicalKey, TypeSet, Value, ValueType};

pub use generate::{generate_typed_cf, mutate_cf, GenerationExhausted, MAX_GENERATION_RETRIES};
pub use text::{deserialize, dump, dump_expanded, serialize, ParseError};

/// Function-nesting depth limit of generated fragments.
pub const MAX_DEPTH: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("division by zero")]
    DivideByZero,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("arithmetic overflow")]
    Overflow,
    #[error("attribute D{0} not present in instance")]
    MissingAttribute(usize),
    #[error("no rule of the ruleset matches")]
    NoMatchingRule,
    #[error("unknown fragment CF{0}")]
    UnknownFragment(u32),
    #[error("type error: {0}")]
    Type(String),
}

impl EvalError {
    pub fn is_type_error(&self) -> bool {
        matches!(self, EvalError::Type(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("unknown function tag {0:?}")]
    UnknownTag(String),
    #[error("{tag} takes {expected} arguments, got {got}")]
    Arity { tag: String, expected: usize, got: usize },
    #[error("argument {slot} of {tag} cannot be {found}")]
    SlotType { tag: String, slot: usize, found: ValueType },
    #[error("leaf {0} is not available for this instance layout")]
    Leaf(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Leaf {
    /// Base CF `D<i>`.
    Attribute(usize),
    /// The whole input as one bit string.
    AttList,
    /// Integer constant frozen at generation time.
    Constant(i64),
    /// Binary constant action; used only by the plain-XCS baseline.
    Bit(bool),
    /// Reference to a transferred fragment `CF<n>`.
    Fragment(u32),
}

/// A typed expression tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CodeFragment {
    Leaf(Leaf),
    Node { func: FnId, children: Vec<CodeFragment> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Callee {
    Function(FnId),
    Fragment(u32),
}

/// Memo of learned-function and fragment results. Valid for one registry;
/// clones start empty.
#[derive(Debug, Default)]
pub struct EvalCache {
    memo: HashMap<(Callee, CanonicalKey), Result<Value, EvalError>>,
}

impl Clone for EvalCache {
    fn clone(&self) -> Self {
        EvalCache::new()
    }
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn clear(&mut self) {
        self.memo.clear();
    }
}

impl CodeFragment {
    pub fn attlst() -> Self {
        CodeFragment::Leaf(Leaf::AttList)
    }

    pub fn attribute(index: usize) -> Self {
        CodeFragment::Leaf(Leaf::Attribute(index))
    }

    pub fn constant(value: i64) -> Self {
        CodeFragment::Leaf(Leaf::Constant(value))
    }

    pub fn bit(value: bool) -> Self {
        CodeFragment::Leaf(Leaf::Bit(value))
    }

    pub fn fragment(id: u32) -> Self {
        CodeFragment::Leaf(Leaf::Fragment(id))
    }

    /// Builds `tag(children...)` over bit-string instances, checking slot types.
    pub fn call(
        registry: &Registry,
        tag: &str,
        children: Vec<CodeFragment>,
    ) -> Result<Self, FragmentError> {
        Self::call_in(registry, Schema::Bits, tag, children)
    }

    pub fn call_in(
        registry: &Registry,
        schema: Schema,
        tag: &str,
        children: Vec<CodeFragment>,
    ) -> Result<Self, FragmentError> {
        let func = registry
            .lookup(tag)
            .ok_or_else(|| FragmentError::UnknownTag(tag.to_string()))?;
        let cf = CodeFragment::Node { func, children };
        cf.output_type(registry, schema)?;
        Ok(cf)
    }

    /// Function-nesting depth; leaves are 0.
    pub fn depth(&self) -> u32 {
        match self {
            CodeFragment::Leaf(_) => 0,
            CodeFragment::Node { children, .. } => {
                1 + children.iter().map(CodeFragment::depth).max().unwrap_or(0)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            CodeFragment::Leaf(_) => 1,
            CodeFragment::Node { children, .. } => {
                1 + children.iter().map(CodeFragment::size).sum::<usize>()
            }
        }
    }

    /// Type-checks the tree and returns its static output type.
    pub fn output_type(&self, registry: &Registry, schema: Schema) -> Result<ValueType, FragmentError> {
        match self {
            CodeFragment::Leaf(leaf) => leaf_type(leaf, registry, schema),
            CodeFragment::Node { func, children } => {
                let spec = registry.get(*func);
                if children.len() != spec.arity() {
                    return Err(FragmentError::Arity {
                        tag: spec.tag.clone(),
                        expected: spec.arity(),
                        got: children.len(),
                    });
                }
                let mut types = Vec::with_capacity(children.len());
                for (slot, (child, accepts)) in children.iter().zip(&spec.inputs).enumerate() {
                    let t = child.output_type(registry, schema)?;
                    if !accepts.accepts(t) {
                        return Err(FragmentError::SlotType { tag: spec.tag.clone(), slot, found: t });
                    }
                    types.push(t);
                }
                Ok(spec.result_type(&types))
            }
        }
    }

    pub fn evaluate(&self, instance: &Instance, registry: &Registry) -> Result<Value, EvalError> {
        self.evaluate_cached(instance, registry, &mut EvalCache::new())
    }

    /// Post-order evaluation; learned calls and fragments go through `cache`.
    pub fn evaluate_cached(
        &self,
        instance: &Instance,
        registry: &Registry,
        cache: &mut EvalCache,
    ) -> Result<Value, EvalError> {
        match self {
            CodeFragment::Leaf(leaf) => match leaf {
                Leaf::Attribute(i) => instance.attribute(*i).ok_or(EvalError::MissingAttribute(*i)),
                Leaf::AttList => match instance {
                    Instance::Bits(b) => Ok(Value::BitString(b.clone())),
                    Instance::Scalar(_) => Err(EvalError::Type("attlst on a scalar instance".into())),
                },
                Leaf::Constant(c) => Ok(Value::Integer(*c)),
                Leaf::Bit(b) => Ok(Value::Binary(*b)),
                Leaf::Fragment(id) => {
                    let key = (Callee::Fragment(*id), instance.to_value().canonical_key());
                    if let Some(hit) = cache.memo.get(&key) {
                        return hit.clone();
                    }
                    let fragment = registry.fragment(*id).ok_or(EvalError::UnknownFragment(*id))?;
                    let out = fragment.cf.evaluate_cached(instance, registry, cache);
                    cache.memo.insert(key, out.clone());
                    out
                }
            },
            CodeFragment::Node { func, children } => {
                let spec = registry.get(*func);
                if children.len() != spec.arity() {
                    return Err(EvalError::Type(format!("arity mismatch for {}", spec.tag)));
                }
                let mut args = Vec::with_capacity(children.len());
                for (child, slot) in children.iter().zip(&spec.inputs) {
                    let v = child.evaluate_cached(instance, registry, cache)?;
                    args.push(coerce_into(v, *slot)?);
                }
                match &spec.kind {
                    FunctionKind::Axiom(axiom) => axiom.apply(&args),
                    FunctionKind::Learned(_) => {
                        let key = (Callee::Function(*func), args[0].canonical_key());
                        if let Some(hit) = cache.memo.get(&key) {
                            return hit.clone();
                        }
                        let out = registry.call_learned(*func, &args[0], cache);
                        cache.memo.insert(key, out.clone());
                        out
                    }
                }
            }
        }
    }

    /// Visits every node, pre-order.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a CodeFragment)) {
        visit(self);
        if let CodeFragment::Node { children, .. } = self {
            for c in children {
                c.walk(visit);
            }
        }
    }
}

fn coerce_into(v: Value, slot: TypeSet) -> Result<Value, EvalError> {
    let target = slot
        .target_for(v.value_type())
        .ok_or_else(|| EvalError::Type(format!("{v} does not fit {slot}")))?;
    v.coerce(target).map_err(|e| EvalError::Type(e.to_string()))
}

fn leaf_type(leaf: &Leaf, registry: &Registry, schema: Schema) -> Result<ValueType, FragmentError> {
    match leaf {
        Leaf::Attribute(_) => Ok(schema.attribute_type()),
        Leaf::AttList if schema == Schema::Bits => Ok(ValueType::BitString),
        Leaf::AttList => Err(FragmentError::Leaf("attlst".into())),
        Leaf::Constant(_) => Ok(ValueType::Integer),
        Leaf::Bit(_) => Ok(ValueType::Binary),
        Leaf::Fragment(id) => registry
            .fragment(*id)
            .map(|f| f.output)
            .ok_or_else(|| FragmentError::Leaf(format!("CF{id}"))),
    }
}

pub fn structurally_equal(a: &CodeFragment, b: &CodeFragment) -> bool {
    a == b
}

//! Hard-coded axiom functions, learned ruleset-functions, and the pool of
//! transferred code fragments.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::classifier::Classifier;
use crate::fragment::{CodeFragment, EvalCache, EvalError};
use crate::instance::{Instance, Schema};
use crate::value::{Bits, TypeSet, Value, ValueType};

/// Index of a function inside its registry. Stable because registries only grow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FnId(pub u16);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("tag {0:?} is already registered")]
    DuplicateTag(String),
    #[error("tag {0:?} is reserved for leaf tokens or contains whitespace")]
    ReservedTag(String),
    #[error("learned function {0:?} has an empty ruleset")]
    EmptyRuleset(String),
    #[error("learned function {0:?} must take exactly one argument")]
    BadArity(String),
    #[error("fragment id CF{0} is already in use")]
    DuplicateFragment(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Floor,
    Ceiling,
    Log,
    Length,
    Power2Loop,
    Add,
    Subtract,
    Multiply,
    Divide,
    ValueAt,
    Constant,
    StringSum,
    BinaryAddition,
    BinarySubtraction,
    HeadList,
    TailList,
    IsGreater,
    Modulo,
}

impl Axiom {
    pub const ALL: [Axiom; 18] = [
        Axiom::Floor,
        Axiom::Ceiling,
        Axiom::Log,
        Axiom::Length,
        Axiom::Power2Loop,
        Axiom::Add,
        Axiom::Subtract,
        Axiom::Multiply,
        Axiom::Divide,
        Axiom::ValueAt,
        Axiom::Constant,
        Axiom::StringSum,
        Axiom::BinaryAddition,
        Axiom::BinarySubtraction,
        Axiom::HeadList,
        Axiom::TailList,
        Axiom::IsGreater,
        Axiom::Modulo,
    ];

    pub fn spec(self) -> FunctionSpec {
        use ValueType::*;
        let real = TypeSet::single(Real);
        let num = TypeSet::of(&[Integer, Real]);
        let int = TypeSet::single(Integer);
        let string = TypeSet::single(BitString);
        let (name, tag, inputs, output): (&str, &str, Vec<TypeSet>, ValueType) = match self {
            Axiom::Floor => ("Floor", "[", vec![real], Integer),
            Axiom::Ceiling => ("Ceiling", "]", vec![real], Integer),
            Axiom::Log => ("Log", "{", vec![real], Real),
            Axiom::Length => ("Length", "L", vec![string], Integer),
            Axiom::Power2Loop => ("Power2Loop", "2d", vec![string], Integer),
            Axiom::Add => ("Add", "+", vec![num, num], Real),
            Axiom::Subtract => ("Subtract", "-", vec![num, num], Real),
            Axiom::Multiply => ("Multiply", "*", vec![num, num], Real),
            Axiom::Divide => ("Divide", "/", vec![num, num], Real),
            Axiom::ValueAt => ("ValueAt", "@", vec![string, int], Binary),
            Axiom::Constant => ("Constant", "c", vec![], Integer),
            Axiom::StringSum => ("StringSum", "sum", vec![string], Integer),
            Axiom::BinaryAddition => ("BinaryAddition", "⊕", vec![string, string], BitString),
            Axiom::BinarySubtraction => {
                ("BinarySubtraction", "⊖", vec![string, string], BitString)
            }
            Axiom::HeadList => ("HeadList", "(", vec![string, int], BitString),
            Axiom::TailList => ("TailList", ")", vec![string, int], BitString),
            Axiom::IsGreater => ("isGreater", ">", vec![num, num], Binary),
            Axiom::Modulo => ("Modulo", "%", vec![int, int], Integer),
        };
        FunctionSpec {
            name: name.to_string(),
            tag: tag.to_string(),
            inputs,
            output,
            level: 1,
            promotes: matches!(
                self,
                Axiom::Add | Axiom::Subtract | Axiom::Multiply | Axiom::Divide
            ),
            kind: FunctionKind::Axiom(self),
        }
    }

    /// Applies the axiom to arguments already coerced into its slot types.
    pub fn apply(self, args: &[Value]) -> Result<Value, EvalError> {
        use Value::*;
        let arity = self.spec().inputs.len();
        if args.len() != arity {
            return Err(EvalError::Type(format!(
                "{self:?} takes {arity} arguments, got {}",
                args.len()
            )));
        }
        match self {
            Axiom::Floor | Axiom::Ceiling => {
                let x = num(&args[0])?;
                let r = if self == Axiom::Floor { x.floor() } else { x.ceil() };
                real_to_int(r).map(Integer)
            }
            Axiom::Log => {
                let x = num(&args[0])?;
                if x <= 0.0 {
                    return Err(EvalError::Domain("log of a non-positive number"));
                }
                finite(x.log2())
            }
            Axiom::Length => Ok(Integer(bits(&args[0])?.len() as i64)),
            Axiom::Power2Loop => bits(&args[0])?
                .to_unsigned()
                .and_then(|n| i64::try_from(n).ok())
                .map(Integer)
                .ok_or(EvalError::Overflow),
            Axiom::Add | Axiom::Subtract | Axiom::Multiply | Axiom::Divide => {
                arithmetic(self, &args[0], &args[1])
            }
            Axiom::ValueAt => {
                let s = bits(&args[0])?;
                let i = int(&args[1])?;
                usize::try_from(i)
                    .ok()
                    .and_then(|i| s.get(i))
                    .map(Binary)
                    .ok_or(EvalError::IndexOutOfRange { index: i, len: s.len() })
            }
            Axiom::Constant => Err(EvalError::Type(
                "Constant is materialised as a leaf and never applied".into(),
            )),
            Axiom::StringSum => Ok(Integer(bits(&args[0])?.count_ones() as i64)),
            Axiom::BinaryAddition => Ok(BitString(bits(&args[0])?.add(bits(&args[1])?))),
            Axiom::BinarySubtraction => {
                Ok(BitString(bits(&args[0])?.abs_diff(bits(&args[1])?)))
            }
            Axiom::HeadList | Axiom::TailList => {
                let s = bits(&args[0])?;
                let n = int(&args[1])?;
                if n < 1 || n as usize > s.len() {
                    return Err(EvalError::IndexOutOfRange { index: n, len: s.len() });
                }
                let out = if self == Axiom::HeadList {
                    s.head(n as usize)
                } else {
                    s.tail(n as usize)
                };
                Ok(BitString(out.expect("n is within 1..=len")))
            }
            Axiom::IsGreater => match (&args[0], &args[1]) {
                (Integer(a), Integer(b)) => Ok(Binary(a > b)),
                (a, b) => Ok(Binary(num(a)? > num(b)?)),
            },
            Axiom::Modulo => {
                let (a, b) = (int(&args[0])?, int(&args[1])?);
                if b == 0 {
                    return Err(EvalError::DivideByZero);
                }
                Ok(Integer(a.rem_euclid(b) + if b < 0 && a.rem_euclid(b) != 0 { b } else { 0 }))
            }
        }
    }
}

fn arithmetic(op: Axiom, a: &Value, b: &Value) -> Result<Value, EvalError> {
    if let (Value::Integer(x), Value::Integer(y)) = (a, b) {
        let (x, y) = (*x, *y);
        let out = match op {
            Axiom::Add => x.checked_add(y),
            Axiom::Subtract => x.checked_sub(y),
            Axiom::Multiply => x.checked_mul(y),
            _ => {
                if y == 0 {
                    return Err(EvalError::DivideByZero);
                }
                let q = x / y;
                Some(if x % y != 0 && ((x < 0) != (y < 0)) { q - 1 } else { q })
            }
        };
        return out.map(Value::Integer).ok_or(EvalError::Overflow);
    }
    let (x, y) = (num(a)?, num(b)?);
    let out = match op {
        Axiom::Add => x + y,
        Axiom::Subtract => x - y,
        Axiom::Multiply => x * y,
        _ => {
            if y == 0.0 {
                return Err(EvalError::DivideByZero);
            }
            x / y
        }
    };
    finite(out)
}

fn finite(x: f64) -> Result<Value, EvalError> {
    if x.is_finite() {
        Ok(Value::Real(x))
    } else {
        Err(EvalError::Overflow)
    }
}

fn real_to_int(x: f64) -> Result<i64, EvalError> {
    if x.is_finite() && x.abs() < 9.0e18 {
        Ok(x as i64)
    } else {
        Err(EvalError::Overflow)
    }
}

fn num(v: &Value) -> Result<f64, EvalError> {
    v.as_f64().ok_or_else(|| EvalError::Type(format!("expected a number, got {v}")))
}

fn int(v: &Value) -> Result<i64, EvalError> {
    v.as_i64().ok_or_else(|| EvalError::Type(format!("expected an integer, got {v}")))
}

fn bits(v: &Value) -> Result<&Bits, EvalError> {
    v.as_bits().ok_or_else(|| EvalError::Type(format!("expected a bit string, got {v}")))
}

/// A compacted ruleset wrapped as a one-argument function.
#[derive(Debug, Clone)]
pub struct LearnedFunction {
    /// Ordered by decreasing fitness; the first matching, non-abstaining rule answers.
    pub rules: Vec<Classifier>,
    pub schema: Schema,
}

impl LearnedFunction {
    pub fn new(mut rules: Vec<Classifier>, schema: Schema, registry: &Registry) -> Self {
        sort_ruleset(&mut rules, registry);
        LearnedFunction { rules, schema }
    }
}

/// Ruleset decision order: fitness, then numerosity, then serialized form.
pub fn sort_ruleset(rules: &mut [Classifier], registry: &Registry) {
    rules.sort_by(|a, b| {
        b.fitness
            .total_cmp(&a.fitness)
            .then(b.numerosity.cmp(&a.numerosity))
            .then_with(|| a.render_key(registry).cmp(&b.render_key(registry)))
    });
}

/// Answer of a ruleset used as a function on `instance`.
pub fn decide(
    rules: &[Classifier],
    instance: &Instance,
    registry: &Registry,
    cache: &mut EvalCache,
) -> Result<Value, EvalError> {
    for rule in rules {
        if !rule.condition.matches(instance) {
            continue;
        }
        if let Ok(v) = rule.action.evaluate_cached(instance, registry, cache) {
            return Ok(v);
        }
    }
    Err(EvalError::NoMatchingRule)
}

#[derive(Debug, Clone)]
pub enum FunctionKind {
    Axiom(Axiom),
    Learned(Arc<LearnedFunction>),
}

#[derive(Debug, Clone)]
pub struct FunctionSpec {
    pub name: String,
    pub tag: String,
    pub inputs: Vec<TypeSet>,
    /// Declared output; promoting arithmetic answers Integer on Integer inputs.
    pub output: ValueType,
    pub level: u32,
    /// Integer arguments give an Integer result (Add, Subtract, Multiply, Divide).
    pub promotes: bool,
    pub kind: FunctionKind,
}

impl FunctionSpec {
    pub fn learned(
        name: &str,
        tag: &str,
        input: ValueType,
        output: ValueType,
        function: LearnedFunction,
    ) -> FunctionSpec {
        FunctionSpec {
            name: name.to_string(),
            tag: tag.to_string(),
            inputs: vec![TypeSet::single(input)],
            output,
            level: 1,
            promotes: false,
            kind: FunctionKind::Learned(Arc::new(function)),
        }
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_learned(&self) -> bool {
        matches!(self.kind, FunctionKind::Learned(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FunctionKind::Axiom(_) => "axiom",
            FunctionKind::Learned(_) => "learned",
        }
    }

    /// Slot types to use when this function must produce one of `required`,
    /// or `None` when it cannot.
    pub fn slots_for(&self, required: TypeSet) -> Option<Vec<TypeSet>> {
        if required.accepts(self.output) {
            Some(self.inputs.clone())
        } else if self.promotes && required.accepts(ValueType::Integer) {
            Some(vec![TypeSet::single(ValueType::Integer); self.inputs.len()])
        } else {
            None
        }
    }

    /// Result type given the (already checked) child types.
    pub fn result_type(&self, children: &[ValueType]) -> ValueType {
        if self.promotes
            && children
                .iter()
                .all(|t| t.is_compatible_with(ValueType::Integer))
        {
            ValueType::Integer
        } else {
            self.output
        }
    }
}

/// A code fragment transferred from an earlier layer, usable as a leaf.
#[derive(Debug, Clone)]
pub struct PoolFragment {
    pub id: u32,
    /// Tag of the learned function whose layer produced it.
    pub source: String,
    pub cf: CodeFragment,
    pub output: ValueType,
}

/// Ordered, append-only store of functions and transferred fragments.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    functions: Vec<FunctionSpec>,
    by_tag: HashMap<String, FnId>,
    fragments: Vec<PoolFragment>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry::default()
    }

    pub fn with_axioms() -> Registry {
        let mut registry = Registry::empty();
        for axiom in Axiom::ALL {
            registry.push(axiom.spec()).expect("axiom tags are unique");
        }
        registry
    }

    fn push(&mut self, spec: FunctionSpec) -> Result<FnId, RegistryError> {
        if self.by_tag.contains_key(&spec.tag) {
            return Err(RegistryError::DuplicateTag(spec.tag));
        }
        if is_reserved_token(&spec.tag) {
            return Err(RegistryError::ReservedTag(spec.tag));
        }
        let id = FnId(self.functions.len() as u16);
        self.by_tag.insert(spec.tag.clone(), id);
        self.functions.push(spec);
        Ok(id)
    }

    pub fn register_learned(&mut self, spec: FunctionSpec) -> Result<FnId, RegistryError> {
        match &spec.kind {
            FunctionKind::Learned(f) if f.rules.is_empty() => {
                return Err(RegistryError::EmptyRuleset(spec.tag))
            }
            FunctionKind::Learned(_) if spec.arity() != 1 => {
                return Err(RegistryError::BadArity(spec.tag))
            }
            _ => {}
        }
        self.push(spec)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn get(&self, id: FnId) -> &FunctionSpec {
        &self.functions[id.0 as usize]
    }

    pub fn lookup(&self, tag: &str) -> Option<FnId> {
        self.by_tag.get(tag).copied()
    }

    pub fn spec(&self, tag: &str) -> Option<&FunctionSpec> {
        self.lookup(tag).map(|id| self.get(id))
    }

    pub fn functions(&self) -> impl Iterator<Item = (FnId, &FunctionSpec)> {
        self.functions
            .iter()
            .enumerate()
            .map(|(i, f)| (FnId(i as u16), f))
    }

    /// Functions able to produce one of `required`, in registration order.
    pub fn query_by_output(&self, required: TypeSet) -> Vec<(FnId, &FunctionSpec)> {
        self.functions()
            .filter(|(_, f)| f.slots_for(required).is_some())
            .collect()
    }

    pub fn add_fragment(&mut self, source: &str, cf: CodeFragment, output: ValueType) -> u32 {
        let id = self.fragments.iter().map(|f| f.id).max().unwrap_or(0) + 1;
        self.fragments.push(PoolFragment { id, source: source.to_string(), cf, output });
        id
    }

    pub fn insert_fragment(&mut self, fragment: PoolFragment) -> Result<(), RegistryError> {
        if self.fragment(fragment.id).is_some() {
            return Err(RegistryError::DuplicateFragment(fragment.id));
        }
        self.fragments.push(fragment);
        Ok(())
    }

    pub fn fragment(&self, id: u32) -> Option<&PoolFragment> {
        self.fragments.iter().find(|f| f.id == id)
    }

    pub fn fragments(&self) -> &[PoolFragment] {
        &self.fragments
    }

    /// Calls a learned function: its argument becomes the instance its ruleset sees.
    pub fn call_learned(
        &self,
        id: FnId,
        input: &Value,
        cache: &mut EvalCache,
    ) -> Result<Value, EvalError> {
        let spec = self.get(id);
        let FunctionKind::Learned(function) = &spec.kind else {
            return Err(EvalError::Type(format!("{} is not a learned function", spec.tag)));
        };
        let target = spec.inputs[0]
            .target_for(input.value_type())
            .ok_or_else(|| EvalError::Type(format!("{} cannot take {input}", spec.tag)))?;
        let arg = input
            .coerce(target)
            .map_err(|e| EvalError::Type(e.to_string()))?;
        let instance = Instance::from_value(&arg)
            .ok_or_else(|| EvalError::Type(format!("{} cannot take {arg}", spec.tag)))?;
        let out = decide(&function.rules, &instance, self, cache)?;
        out.coerce(spec.output)
            .map_err(|e| EvalError::Type(e.to_string()))
    }
}

/// Tokens the postfix format reserves for leaves.
pub fn is_reserved_token(tag: &str) -> bool {
    let numbered = |prefix: &str| {
        tag.strip_prefix(prefix)
            .is_some_and(|rest| !rest.is_empty() && rest.trim_start_matches('-').chars().all(|c| c.is_ascii_digit()))
    };
    tag.is_empty()
        || tag.chars().any(char::is_whitespace)
        || tag == "attlst"
        || tag == "b0"
        || tag == "b1"
        || numbered("D")
        || numbered("c")
        || numbered("CF")
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inputs: Vec<String> = self.inputs.iter().map(ToString::to_string).collect();
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.tag,
            self.name,
            self.kind_name(),
            if inputs.is_empty() { "-".to_string() } else { inputs.join(",") },
            self.output
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ValueType::*;

    fn apply(tag: &str, args: &[Value]) -> Result<Value, EvalError> {
        match Registry::with_axioms().spec(tag).unwrap().kind {
            FunctionKind::Axiom(a) => a.apply(args),
            _ => unreachable!(),
        }
    }

    fn b(s: &str) -> Value {
        Value::bits(s).unwrap()
    }

    #[test]
    fn one_axiom_per_table_row() {
        let r = Registry::with_axioms();
        assert_eq!(r.len(), 18);
        let arity0: Vec<_> = r.functions().filter(|(_, f)| f.arity() == 0).collect();
        assert_eq!(arity0.len(), 1);
        assert_eq!(arity0[0].1.tag, "c");
        assert!(r.functions().all(|(_, f)| f.level == 1));
    }

    #[test]
    fn log_floor_and_power2loop() {
        let log6 = apply("{", &[Value::Real(6.0)]).unwrap();
        assert!((log6.as_f64().unwrap() - 6f64.ln() / 2f64.ln()).abs() < 1e-9);
        assert!((log6.as_f64().unwrap() - 2.584962500721156).abs() < 1e-9);
        assert_eq!(apply("[", &[log6]), Ok(Value::Integer(2)));
        assert_eq!(apply("2d", &[b("01")]), Ok(Value::Integer(1)));
        assert_eq!(apply("]", &[Value::Real(2.1)]), Ok(Value::Integer(3)));
    }

    #[test]
    fn string_axioms() {
        assert_eq!(apply("⊕", &[b("101"), b("011")]), Ok(b("1000")));
        assert_eq!(apply("⊖", &[b("011"), b("101")]), Ok(b("10")));
        assert_eq!(apply("@", &[b("011011"), Value::Integer(3)]), Ok(Value::Binary(false)));
        assert_eq!(apply("@", &[b("011011"), Value::Integer(2)]), Ok(Value::Binary(true)));
        assert_eq!(apply("(", &[b("110110"), Value::Integer(3)]), Ok(b("110")));
        assert_eq!(apply(")", &[b("1001"), Value::Integer(2)]), Ok(b("01")));
        assert_eq!(apply("sum", &[b("10110")]), Ok(Value::Integer(3)));
        assert_eq!(apply("L", &[b("10110")]), Ok(Value::Integer(5)));
    }

    #[test]
    fn numeric_axioms_promote() {
        assert_eq!(apply("+", &[Value::Integer(2), Value::Integer(3)]), Ok(Value::Integer(5)));
        assert_eq!(apply("+", &[Value::Real(2.5), Value::Integer(3)]), Ok(Value::Real(5.5)));
        assert_eq!(apply("/", &[Value::Integer(7), Value::Integer(2)]), Ok(Value::Integer(3)));
        assert_eq!(apply("/", &[Value::Integer(-7), Value::Integer(2)]), Ok(Value::Integer(-4)));
        assert_eq!(apply("/", &[Value::Real(1.0), Value::Integer(2)]), Ok(Value::Real(0.5)));
        assert_eq!(apply("%", &[Value::Integer(5), Value::Integer(2)]), Ok(Value::Integer(1)));
        assert_eq!(apply("%", &[Value::Integer(-5), Value::Integer(3)]), Ok(Value::Integer(1)));
        assert_eq!(apply("%", &[Value::Integer(5), Value::Integer(-3)]), Ok(Value::Integer(-1)));
        assert_eq!(apply(">", &[Value::Integer(3), Value::Real(2.5)]), Ok(Value::Binary(true)));
        assert_eq!(apply(">", &[Value::Integer(2), Value::Integer(2)]), Ok(Value::Binary(false)));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(apply("{", &[Value::Real(0.0)]), Err(EvalError::Domain("log of a non-positive number")));
        assert_eq!(apply("/", &[Value::Integer(1), Value::Integer(0)]), Err(EvalError::DivideByZero));
        assert_eq!(apply("%", &[Value::Integer(1), Value::Integer(0)]), Err(EvalError::DivideByZero));
        assert!(matches!(apply("@", &[b("01"), Value::Integer(2)]), Err(EvalError::IndexOutOfRange { .. })));
        assert!(matches!(apply("(", &[b("01"), Value::Integer(0)]), Err(EvalError::IndexOutOfRange { .. })));
        assert!(matches!(apply(")", &[b("01"), Value::Integer(3)]), Err(EvalError::IndexOutOfRange { .. })));
        assert_eq!(apply("*", &[Value::Integer(i64::MAX), Value::Integer(2)]), Err(EvalError::Overflow));
        assert!(matches!(apply("L", &[Value::Integer(1)]), Err(EvalError::Type(_))));
    }

    #[test]
    fn query_by_output_filters_in_order() {
        let r = Registry::with_axioms();
        let tags = |req: TypeSet| -> Vec<String> {
            r.query_by_output(req).into_iter().map(|(_, f)| f.tag.clone()).collect()
        };
        assert_eq!(tags(TypeSet::single(Binary)), vec!["@", ">"]);
        assert_eq!(tags(TypeSet::single(BitString)), vec!["⊕", "⊖", "(", ")"]);
        let reals = tags(TypeSet::single(Real));
        for t in ["[", "]", "{", "L", "2d", "+", "-", "*", "/", "@", "c", "sum", ">", "%"] {
            assert!(reals.contains(&t.to_string()), "{t}");
        }
        assert!(!reals.contains(&"⊕".to_string()));
        let ints = tags(TypeSet::single(Integer));
        assert!(ints.contains(&"+".to_string()));
        assert!(!ints.contains(&"{".to_string()));
    }

    #[test]
    fn query_results_are_compatible() {
        let r = Registry::with_axioms();
        for t in ValueType::ALL {
            let req = TypeSet::single(t);
            for (_, f) in r.query_by_output(req) {
                let slots = f.slots_for(req).unwrap();
                let produced = f.result_type(&slots.iter().map(|s| s.iter().next().unwrap()).collect::<Vec<_>>());
                assert!(req.accepts(produced), "{} -> {produced} for {t}", f.tag);
            }
        }
    }

    #[test]
    fn duplicate_and_reserved_tags() {
        let mut r = Registry::with_axioms();
        let rule = crate::classifier::Classifier::new(
            crate::condition::Condition::general(),
            CodeFragment::attlst(),
            1.0,
        );
        let f = || LearnedFunction { rules: vec![rule.clone()], schema: Schema::Bits };
        let dup = FunctionSpec::learned("X", "@", BitString, BitString, f());
        assert_eq!(r.register_learned(dup), Err(RegistryError::DuplicateTag("@".into())));
        let reserved = FunctionSpec::learned("X", "CF3", BitString, BitString, f());
        assert!(matches!(r.register_learned(reserved), Err(RegistryError::ReservedTag(_))));
        let empty = FunctionSpec::learned(
            "X",
            "x",
            BitString,
            BitString,
            LearnedFunction { rules: vec![], schema: Schema::Bits },
        );
        assert!(matches!(r.register_learned(empty), Err(RegistryError::EmptyRuleset(_))));
        let ok = FunctionSpec::learned("Echo", "echo", BitString, BitString, f());
        let id = r.register_learned(ok).unwrap();
        assert!(r
            .query_by_output(TypeSet::single(BitString))
            .iter()
            .any(|(i, _)| *i == id));
        let again = FunctionSpec::learned("Echo", "echo", BitString, BitString, f());
        assert_eq!(r.register_learned(again), Err(RegistryError::DuplicateTag("echo".into())));
    }
}

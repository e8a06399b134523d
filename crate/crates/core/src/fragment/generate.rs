use rand::Rng;
use thiserror::Error;

use super::{CodeFragment, Leaf, MAX_DEPTH};
use crate::instance::Schema;
use crate::registry::Registry;
use crate::value::{TypeSet, ValueType};

pub const MAX_GENERATION_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no well-typed fragment producing {0} after {MAX_GENERATION_RETRIES} attempts")]
pub struct GenerationExhausted(pub TypeSet);

/// Top-down typed generation. Each slot recurses into a function node with
/// probability 0.5 while depth budget remains, otherwise takes a leaf.
pub fn generate_typed_cf<R: Rng + ?Sized>(
    action_types: TypeSet,
    registry: &Registry,
    schema: Schema,
    instance_len: usize,
    rng: &mut R,
) -> Result<CodeFragment, GenerationExhausted> {
    let gen = Generator { registry, schema, instance_len: instance_len.max(1) };
    for _ in 0..MAX_GENERATION_RETRIES {
        if let Some(cf) = gen.node(action_types, MAX_DEPTH, rng) {
            return Ok(cf);
        }
    }
    Err(GenerationExhausted(action_types))
}

/// Replaces the whole action with a fresh fragment with probability `rate`.
pub fn mutate_cf<R: Rng + ?Sized>(
    cf: &CodeFragment,
    action_types: TypeSet,
    registry: &Registry,
    schema: Schema,
    instance_len: usize,
    rate: f64,
    rng: &mut R,
) -> Result<CodeFragment, GenerationExhausted> {
    if rng.gen::<f64>() < rate {
        generate_typed_cf(action_types, registry, schema, instance_len, rng)
    } else {
        Ok(cf.clone())
    }
}

struct Generator<'a> {
    registry: &'a Registry,
    schema: Schema,
    instance_len: usize,
}

impl Generator<'_> {
    fn node<R: Rng + ?Sized>(&self, required: TypeSet, budget: u32, rng: &mut R) -> Option<CodeFragment> {
        let candidates = self.registry.query_by_output(required);
        if candidates.is_empty() {
            return None;
        }
        let (id, spec) = candidates[rng.gen_range(0..candidates.len())];
        if spec.arity() == 0 {
            // the Constant axiom materialises as a frozen constant leaf
            return Some(self.constant(rng));
        }
        let slots = spec.slots_for(required)?;
        let remaining = budget.saturating_sub(spec.level);
        let mut children = Vec::with_capacity(slots.len());
        for slot in slots {
            let child = if remaining > 0 && rng.gen::<f64>() < 0.5 {
                match self.node(slot, remaining, rng) {
                    Some(c) => c,
                    None => self.leaf(slot, rng)?,
                }
            } else {
                match self.leaf(slot, rng) {
                    Some(c) => c,
                    None if remaining > 0 => self.node(slot, remaining, rng)?,
                    None => return None,
                }
            };
            children.push(child);
        }
        Some(CodeFragment::Node { func: id, children })
    }

    fn constant<R: Rng + ?Sized>(&self, rng: &mut R) -> CodeFragment {
        CodeFragment::constant(rng.gen_range(1..=self.instance_len as i64))
    }

    /// Uniform over members: each base CF, attlst, one constant (value drawn
    /// afterwards), and each transferred fragment. Members whose type is listed
    /// in the slot come first; widening is used only when none is.
    fn leaf<R: Rng + ?Sized>(&self, slot: TypeSet, rng: &mut R) -> Option<CodeFragment> {
        let exact = self.candidates(|t| slot.contains(t));
        let members = if exact.total() > 0 { exact } else { self.candidates(|t| slot.accepts(t)) };
        let total = members.total();
        if total == 0 {
            return None;
        }
        let mut pick = rng.gen_range(0..total);
        if pick < members.attributes {
            return Some(CodeFragment::attribute(pick));
        }
        pick -= members.attributes;
        if pick < members.attlst {
            return Some(CodeFragment::Leaf(Leaf::AttList));
        }
        pick -= members.attlst;
        if pick < members.constant {
            return Some(self.constant(rng));
        }
        pick -= members.constant;
        Some(CodeFragment::fragment(members.fragments[pick]))
    }

    fn candidates(&self, fits: impl Fn(ValueType) -> bool) -> LeafMembers {
        let bits = self.schema == Schema::Bits;
        LeafMembers {
            attributes: if fits(self.schema.attribute_type()) { self.instance_len } else { 0 },
            attlst: usize::from(bits && fits(ValueType::BitString)),
            constant: usize::from(fits(ValueType::Integer)),
            fragments: if bits {
                self.registry
                    .fragments()
                    .iter()
                    .filter(|f| fits(f.output))
                    .map(|f| f.id)
                    .collect()
            } else {
                Vec::new()
            },
        }
    }
}

struct LeafMembers {
    attributes: usize,
    attlst: usize,
    constant: usize,
    fragments: Vec<u32>,
}

impl LeafMembers {
    fn total(&self) -> usize {
        self.attributes + self.attlst + self.constant + self.fragments.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::structurally_equal;
    use crate::value::ValueType::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_root_is_binary_output_axiom() {
        let r = Registry::with_axioms();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let cf = generate_typed_cf(TypeSet::single(Binary), &r, Schema::Bits, 6, &mut rng).unwrap();
            let CodeFragment::Node { func, .. } = &cf else { panic!("leaf root") };
            assert!(["@", ">"].contains(&r.get(*func).tag.as_str()));
        }
    }

    #[test]
    fn bitstring_slot_at_depth_limit_takes_attlst() {
        let r = Registry::with_axioms();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let cf = generate_typed_cf(TypeSet::single(BitString), &r, Schema::Bits, 6, &mut rng).unwrap();
            cf.walk(&mut |node| {
                if let CodeFragment::Node { func, children } = node {
                    for (child, slot) in children.iter().zip(&r.get(*func).inputs) {
                        if *slot == TypeSet::single(BitString) && child.depth() == 0 {
                            assert_eq!(child, &CodeFragment::attlst());
                        }
                    }
                }
            });
        }
    }

    #[test]
    fn empty_registry_exhausts() {
        let r = Registry::empty();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            generate_typed_cf(TypeSet::single(Real), &r, Schema::Bits, 6, &mut rng),
            Err(GenerationExhausted(TypeSet::single(Real)))
        );
    }

    #[test]
    fn same_seed_same_fragment() {
        let r = Registry::with_axioms();
        let gen = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| generate_typed_cf(TypeSet::single(Integer), &r, Schema::Bits, 11, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(gen(9), gen(9));
        assert_ne!(gen(9), gen(10));
    }

    #[test]
    fn constants_lie_in_one_to_len() {
        let r = Registry::with_axioms();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let cf = generate_typed_cf(TypeSet::single(Integer), &r, Schema::Bits, 5, &mut rng).unwrap();
            cf.walk(&mut |n| {
                if let CodeFragment::Leaf(Leaf::Constant(c)) = n {
                    assert!((1..=5).contains(c));
                }
                if let CodeFragment::Leaf(Leaf::Attribute(i)) = n {
                    assert!(*i < 5);
                }
            });
        }
    }

    #[test]
    fn mutation_paths() {
        let r = Registry::with_axioms();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let types = TypeSet::single(Binary);
        let cf = generate_typed_cf(types, &r, Schema::Bits, 6, &mut rng).unwrap();
        let same = mutate_cf(&cf, types, &r, Schema::Bits, 6, 0.0, &mut rng).unwrap();
        assert!(structurally_equal(&cf, &same));
        for _ in 0..1000 {
            let m = mutate_cf(&cf, types, &r, Schema::Bits, 6, 1.0, &mut rng).unwrap();
            assert!(m.depth() <= MAX_DEPTH);
            assert_eq!(m.output_type(&r, Schema::Bits), Ok(Binary));
        }
    }

    #[test]
    fn transferred_fragments_are_leaf_candidates() {
        let mut r = Registry::with_axioms();
        let body = CodeFragment::call(&r, "sum", vec![CodeFragment::attlst()]).unwrap();
        let id = r.add_fragment("s", body, Integer);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut seen = false;
        for _ in 0..2000 {
            let cf = generate_typed_cf(TypeSet::single(Integer), &r, Schema::Bits, 3, &mut rng).unwrap();
            cf.walk(&mut |n| seen |= *n == CodeFragment::fragment(id));
        }
        assert!(seen);
        // scalar layouts never see them
        for _ in 0..500 {
            let cf = generate_typed_cf(TypeSet::single(Integer), &r, Schema::Scalar, 1, &mut rng).unwrap();
            cf.walk(&mut |n| assert_ne!(*n, CodeFragment::fragment(id)));
        }
    }
}

//! Hand-written solutions for every layer, registered exactly as learned
//! rulesets are. Used as ground truth for the evaluator and as a fixed
//! toolbox when a single layer is trained in isolation.

use crate::classifier::Classifier;
use crate::condition::Condition;
use crate::fragment::{deserialize, CodeFragment, ParseError};
use crate::layered::wrap_as_function;
use crate::problem::ProblemKind;
use crate::registry::Registry;

/// Postfix action of the one-rule reference solution of `kind`.
pub fn solution_text(kind: ProblemKind) -> &'static str {
    use ProblemKind::*;
    match kind {
        KBitsGivenLength => "D0 { [",
        KBits => "attlst L k_l",
        KBitString => "attlst attlst k (",
        Bin2Int => "attlst 2d",
        AddressOf => "attlst k attlst k_s b2d +",
        ValueAt => "attlst attlst d_c @",
        HalfLength => "attlst L c2 /",
        HeadString => "attlst attlst h (",
        TailString => "attlst attlst h )",
        BinarySum => "attlst S_h attlst S_t ⊕",
        SumStringLength => "attlst S_+ L",
        IsCarried => "attlst L_+ attlst h >",
        SumMod2 => "attlst sum c2 %",
        EvenParity => "c1 attlst sm2 >",
        IsMajorityOn => "attlst sum attlst h >",
    }
}

/// A maximally general, fully experienced rule with `action`.
pub fn general_rule(action: CodeFragment) -> Classifier {
    let mut rule = Classifier::new(Condition::general(), action, 1.0);
    rule.prediction = 1000.0;
    rule.experience = 1000;
    rule
}

/// Parses and registers the reference solution of `kind` into `registry`.
pub fn register(registry: &mut Registry, kind: ProblemKind) -> Result<(), ParseError> {
    let action = deserialize(solution_text(kind), registry)?;
    wrap_as_function(registry, kind, vec![general_rule(action)])
        .expect("reference tags are unique");
    Ok(())
}

/// Axioms plus the reference solutions of everything `kind` builds on,
/// directly or through other layers, in curriculum order.
pub fn toolbox_before(kind: ProblemKind) -> Registry {
    let mut needed = vec![kind];
    let mut i = 0;
    while i < needed.len() {
        for tag in needed[i].prerequisites() {
            let dep = ProblemKind::from_tag(tag).expect("known tag");
            if !needed.contains(&dep) {
                needed.push(dep);
            }
        }
        i += 1;
    }
    let mut registry = Registry::with_axioms();
    for layer in ProblemKind::ALL {
        if layer != kind && needed.contains(&layer) {
            register(&mut registry, layer).expect("reference solutions parse");
        }
    }
    registry
}

/// Axioms plus every reference solution.
pub fn full_toolbox() -> Registry {
    let mut registry = Registry::with_axioms();
    for kind in ProblemKind::ALL {
        register(&mut registry, kind).expect("reference solutions parse");
    }
    registry
}

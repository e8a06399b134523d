use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{CodeFragment, Leaf};
use crate::registry::{FunctionKind, Registry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token {position}: {message}")]
pub struct ParseError {
    /// Zero-based token index.
    pub position: usize,
    pub message: String,
}

/// Postfix rendering: children first, then the function tag.
pub fn serialize(cf: &CodeFragment, registry: &Registry) -> String {
    let mut out = Vec::new();
    push_tokens(cf, registry, &mut out);
    out.join(" ")
}

fn push_tokens(cf: &CodeFragment, registry: &Registry, out: &mut Vec<String>) {
    match cf {
        CodeFragment::Leaf(leaf) => out.push(leaf_token(leaf)),
        CodeFragment::Node { func, children } => {
            for c in children {
                push_tokens(c, registry, out);
            }
            out.push(registry.get(*func).tag.clone());
        }
    }
}

fn leaf_token(leaf: &Leaf) -> String {
    match leaf {
        Leaf::Attribute(i) => format!("D{i}"),
        Leaf::AttList => "attlst".to_string(),
        Leaf::Constant(c) => format!("c{c}"),
        Leaf::Bit(b) => format!("b{}", u8::from(*b)),
        Leaf::Fragment(id) => format!("CF{id}"),
    }
}

fn parse_leaf(token: &str) -> Option<Leaf> {
    let number = |prefix: &str| token.strip_prefix(prefix).filter(|r| !r.is_empty());
    match token {
        "attlst" => Some(Leaf::AttList),
        "b0" => Some(Leaf::Bit(false)),
        "b1" => Some(Leaf::Bit(true)),
        _ => {
            if let Some(r) = number("CF") {
                r.parse().ok().map(Leaf::Fragment)
            } else if let Some(r) = number("D") {
                r.parse().ok().map(Leaf::Attribute)
            } else if let Some(r) = number("c") {
                r.parse().ok().map(Leaf::Constant)
            } else {
                None
            }
        }
    }
}

/// Parses postfix text produced by [`serialize`].
pub fn deserialize(text: &str, registry: &Registry) -> Result<CodeFragment, ParseError> {
    let mut stack: Vec<CodeFragment> = Vec::new();
    let mut count = 0;
    for (position, token) in text.split_whitespace().enumerate() {
        count += 1;
        let err = |message: String| ParseError { position, message };
        if let Some(leaf) = parse_leaf(token) {
            stack.push(CodeFragment::Leaf(leaf));
            continue;
        }
        let Some(func) = registry.lookup(token) else {
            return Err(err(format!("unknown token {token:?}")));
        };
        let arity = registry.get(func).arity();
        if arity == 0 {
            return Err(err("constants are written c<value>".into()));
        }
        if stack.len() < arity {
            return Err(err(format!("{token} needs {arity} arguments, found {}", stack.len())));
        }
        let children = stack.split_off(stack.len() - arity);
        stack.push(CodeFragment::Node { func, children });
    }
    match stack.len() {
        1 => Ok(stack.pop().expect("one element")),
        0 => Err(ParseError { position: 0, message: "empty fragment".into() }),
        n => Err(ParseError { position: count, message: format!("{n} expressions left over") }),
    }
}

/// Indented tree, one node per line.
pub fn dump(cf: &CodeFragment, registry: &Registry) -> String {
    let mut out = String::new();
    dump_into(cf, registry, 0, &mut out);
    out
}

fn dump_into(cf: &CodeFragment, registry: &Registry, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match cf {
        CodeFragment::Leaf(leaf) => {
            let _ = writeln!(out, "{pad}{}", leaf_token(leaf));
        }
        CodeFragment::Node { func, children } => {
            let spec = registry.get(*func);
            let _ = writeln!(out, "{pad}{} {}", spec.tag, spec.name);
            for c in children {
                dump_into(c, registry, indent + 1, out);
            }
        }
    }
}

/// Like [`dump`], but opens learned functions and transferred fragments
/// (each once) down to axioms and leaves.
pub fn dump_expanded(cf: &CodeFragment, registry: &Registry) -> String {
    let mut out = String::new();
    let mut seen = HashSet::new();
    expand_into(cf, registry, 0, &mut seen, &mut out);
    out
}

fn expand_into(
    cf: &CodeFragment,
    registry: &Registry,
    indent: usize,
    seen: &mut HashSet<String>,
    out: &mut String,
) {
    let pad = "  ".repeat(indent);
    match cf {
        CodeFragment::Leaf(Leaf::Fragment(id)) => match registry.fragment(*id) {
            Some(f) => {
                let _ = writeln!(out, "{pad}⟦{}⟧ via CF{id}", f.source);
                if seen.insert(format!("CF{id}")) {
                    expand_into(&f.cf, registry, indent + 1, seen, out);
                }
            }
            None => {
                let _ = writeln!(out, "{pad}CF{id} (missing)");
            }
        },
        CodeFragment::Leaf(leaf) => {
            let _ = writeln!(out, "{pad}{}", leaf_token(leaf));
        }
        CodeFragment::Node { func, children } => {
            let spec = registry.get(*func);
            match &spec.kind {
                FunctionKind::Axiom(_) => {
                    let _ = writeln!(out, "{pad}{} {}", spec.tag, spec.name);
                    for c in children {
                        expand_into(c, registry, indent + 1, seen, out);
                    }
                }
                FunctionKind::Learned(function) => {
                    let _ = writeln!(out, "{pad}⟦{}⟧ {}", spec.tag, spec.name);
                    let _ = writeln!(out, "{pad}  input:");
                    for c in children {
                        expand_into(c, registry, indent + 2, seen, out);
                    }
                    if seen.insert(spec.tag.clone()) {
                        let _ = writeln!(out, "{pad}  body:");
                        for rule in &function.rules {
                            let _ = writeln!(out, "{pad}    rule {} ->", rule.condition);
                            expand_into(&rule.action, registry, indent + 3, seen, out);
                        }
                    }
                }
            }
        }
    }
}

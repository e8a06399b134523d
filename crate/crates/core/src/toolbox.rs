//! Toolbox files: the registry manifest, each learned ruleset and the
//! transferred fragment pool, written in creation order.
//!
//! ```text
//! lcs-toolbox 1
//! axiom   L   Length  axiom   BitString   Integer
//! learned h   HalfLength  BitString   Integer Bits    seed=7  trials=1200 accuracy=1
//! rule    #   attlst L c2 /   ...
//! fragment    1   h   Integer attlst L c2 /
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{format_classifier, parse_classifier};
use crate::fragment::{deserialize, serialize};
use crate::instance::Schema;
use crate::layered::CurriculumResult;
use crate::registry::{FunctionKind, FunctionSpec, LearnedFunction, PoolFragment, Registry};
use crate::value::{TypeSet, ValueType};

pub const HEADER: &str = "lcs-toolbox 1";

#[derive(Debug, Error)]
pub enum ToolboxError {
    #[error("not a toolbox file (expected {HEADER:?} on the first line)")]
    Header,
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Where a learned function came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tag: String,
    pub seed: u64,
    pub trials: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct Toolbox {
    pub registry: Registry,
    pub provenance: Vec<Provenance>,
}

impl Toolbox {
    pub fn axioms() -> Toolbox {
        Toolbox { registry: Registry::with_axioms(), provenance: Vec::new() }
    }

    /// Toolbox of a curriculum run, with provenance from the registered runs.
    pub fn from_result(result: &CurriculumResult, base: &Toolbox) -> Toolbox {
        let mut provenance = base.provenance.clone();
        for report in &result.layers {
            if let Some(run) = report.chosen_run() {
                provenance.push(Provenance {
                    tag: run.kind.tag().to_string(),
                    seed: run.seed,
                    trials: run.trials,
                    accuracy: run.final_accuracy,
                });
            }
        }
        Toolbox { registry: result.registry.clone(), provenance }
    }

    /// Tags of all learned functions, in registration order.
    pub fn learned_tags(&self) -> Vec<&str> {
        self.registry
            .functions()
            .filter(|(_, f)| f.is_learned())
            .map(|(_, f)| f.tag.as_str())
            .collect()
    }

    pub fn provenance(&self, tag: &str) -> Option<&Provenance> {
        self.provenance.iter().find(|p| p.tag == tag)
    }

    pub fn save(&self) -> String {
        let registry = &self.registry;
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        let mut written = 0;
        for (_, spec) in registry.functions() {
            match &spec.kind {
                FunctionKind::Axiom(_) => {
                    let _ = writeln!(out, "axiom\t{spec}");
                }
                FunctionKind::Learned(function) => {
                    let (seed, trials, accuracy) = self
                        .provenance(&spec.tag)
                        .map_or((0, 0, 0.0), |p| (p.seed, p.trials, p.accuracy));
                    let _ = writeln!(
                        out,
                        "learned\t{}\t{}\t{}\t{}\t{}\tseed={seed}\ttrials={trials}\taccuracy={accuracy}",
                        spec.tag,
                        spec.name,
                        spec.inputs[0],
                        spec.output,
                        schema_name(function.schema),
                    );
                    for rule in &function.rules {
                        let _ = writeln!(out, "rule\t{}", format_classifier(rule, registry));
                    }
                    for fragment in registry.fragments().iter().filter(|f| f.source == spec.tag) {
                        write_fragment(&mut out, fragment, registry);
                        written += 1;
                    }
                }
            }
        }
        for fragment in registry.fragments() {
            if registry.spec(&fragment.source).is_none_or(|s| !s.is_learned()) {
                write_fragment(&mut out, fragment, registry);
                written += 1;
            }
        }
        debug_assert_eq!(written, registry.fragments().len());
        out
    }

    pub fn load(text: &str) -> Result<Toolbox, ToolboxError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, first)) if first.trim() == HEADER => {}
            _ => return Err(ToolboxError::Header),
        }
        let mut registry = Registry::with_axioms();
        let mut provenance = Vec::new();
        let mut pending: Option<Pending> = None;
        for (line, raw) in lines {
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |message: String| ToolboxError::Line { line, message };
            let (record, rest) = raw.split_once('\t').unwrap_or((raw, ""));
            if record != "rule" {
                if let Some(p) = pending.take() {
                    p.register(&mut registry)?;
                }
            }
            match record {
                "axiom" => {
                    let tag = rest.split('\t').next().unwrap_or("");
                    match registry.spec(tag) {
                        Some(spec) if !spec.is_learned() && spec.to_string() == rest => {}
                        _ => return Err(err(format!("axiom {tag:?} does not match the built-in set"))),
                    }
                }
                "learned" => {
                    let (p, prov) = Pending::parse(rest, line).map_err(err)?;
                    provenance.push(prov);
                    pending = Some(p);
                }
                "rule" => {
                    let p = pending
                        .as_mut()
                        .ok_or_else(|| err("rule outside a learned function".into()))?;
                    let rule = parse_classifier(rest, &registry, line)
                        .map_err(|e| err(e.to_string()))?;
                    p.rules.push(rule);
                }
                "fragment" => {
                    let fields: Vec<&str> = rest.splitn(4, '\t').collect();
                    if fields.len() != 4 {
                        return Err(err("fragment needs id, source, output and body".into()));
                    }
                    let id = fields[0].parse::<u32>().map_err(|_| err(format!("bad fragment id {:?}", fields[0])))?;
                    let output = fields[2].parse::<ValueType>().map_err(err)?;
                    let cf = deserialize(fields[3], &registry).map_err(|e| err(e.to_string()))?;
                    registry
                        .insert_fragment(PoolFragment { id, source: fields[1].to_string(), cf, output })
                        .map_err(|e| err(e.to_string()))?;
                }
                other => return Err(err(format!("unknown record {other:?}"))),
            }
        }
        if let Some(p) = pending.take() {
            p.register(&mut registry)?;
        }
        Ok(Toolbox { registry, provenance })
    }
}

fn write_fragment(out: &mut String, fragment: &PoolFragment, registry: &Registry) {
    let _ = writeln!(
        out,
        "fragment\t{}\t{}\t{}\t{}",
        fragment.id,
        fragment.source,
        fragment.output,
        serialize(&fragment.cf, registry)
    );
}

fn schema_name(schema: Schema) -> &'static str {
    match schema {
        Schema::Bits => "Bits",
        Schema::Scalar => "Scalar",
    }
}

struct Pending {
    line: usize,
    tag: String,
    name: String,
    input: ValueType,
    output: ValueType,
    schema: Schema,
    rules: Vec<crate::classifier::Classifier>,
}

impl Pending {
    fn parse(rest: &str, line: usize) -> Result<(Pending, Provenance), String> {
        let fields: Vec<&str> = rest.split('\t').collect();
        if fields.len() != 8 {
            return Err(format!("learned record needs 8 fields, found {}", fields.len()));
        }
        let input = fields[2]
            .parse::<TypeSet>()?
            .iter()
            .next()
            .ok_or("empty input type")?;
        let output = fields[3].parse::<ValueType>()?;
        let schema = match fields[4] {
            "Bits" => Schema::Bits,
            "Scalar" => Schema::Scalar,
            other => return Err(format!("unknown schema {other:?}")),
        };
        let field = |i: usize, key: &str| {
            fields[i]
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .ok_or_else(|| format!("expected {key}=..., found {:?}", fields[i]))
        };
        let seed = field(5, "seed")?.parse::<u64>().map_err(|e| e.to_string())?;
        let trials = field(6, "trials")?.parse::<u64>().map_err(|e| e.to_string())?;
        let accuracy = field(7, "accuracy")?.parse::<f64>().map_err(|e| e.to_string())?;
        let tag = fields[0].to_string();
        Ok((
            Pending { line, tag: tag.clone(), name: fields[1].to_string(), input, output, schema, rules: Vec::new() },
            Provenance { tag, seed, trials, accuracy },
        ))
    }

    fn register(self, registry: &mut Registry) -> Result<(), ToolboxError> {
        let function = LearnedFunction::new(self.rules, self.schema, registry);
        let spec = FunctionSpec::learned(&self.name, &self.tag, self.input, self.output, function);
        registry
            .register_learned(spec)
            .map(|_| ())
            .map_err(|e| ToolboxError::Line { line: self.line, message: e.to_string() })
    }
}

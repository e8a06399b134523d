//! Layer training, compaction into ruleset-functions, and curricula.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::classifier::Classifier;
use crate::curriculum::{Curriculum, LayerConfig};
use crate::engine::{ActionSpace, Engine, EngineConfig};
use crate::fragment::{dump_expanded, serialize, CodeFragment, EvalCache, EvalError};
use crate::instance::{Instance, Schema};
use crate::problem::{Domain, Problem, ProblemKind, Sampler, REWARD_CORRECT};
use crate::registry::{sort_ruleset, FnId, FunctionSpec, LearnedFunction, Registry, RegistryError};
use crate::value::{CanonicalKey, Value};

/// Exploit trials per accuracy window.
pub const WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayerError {
    #[error("{tag}: windowed accuracy stayed below 100% within the trial budget")]
    BudgetExhaustedBelowTarget { tag: String },
    #[error("{tag}: no subset of accurate rules answers every validation instance")]
    CompactionFailed { tag: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Explore trials completed.
    pub trial: u64,
    pub accuracy: f64,
    pub macro_size: usize,
}

#[derive(Debug, Clone)]
pub struct LayerRun {
    pub kind: ProblemKind,
    pub seed: u64,
    pub curve: Vec<CurvePoint>,
    pub trials: u64,
    pub final_accuracy: f64,
    pub population: Vec<Classifier>,
    pub ruleset: Result<Vec<Classifier>, LayerError>,
}

impl LayerRun {
    pub fn succeeded(&self) -> bool {
        self.final_accuracy >= 1.0 && self.ruleset.is_ok()
    }

    pub fn rule_count(&self) -> Option<usize> {
        self.ruleset.as_ref().ok().map(Vec::len)
    }
}

/// 64-bit mixing step used to derive independent stream seeds.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `stream` for run `run` of layer `layer`.
pub fn derive_seed(base: u64, layer: usize, run: u32, stream: u64) -> u64 {
    mix_seed(mix_seed(mix_seed(base ^ layer as u64) ^ run as u64) ^ stream)
}

fn engine_for(kind: ProblemKind, registry: Arc<Registry>, config: EngineConfig, seed: u64) -> Engine {
    Engine::new(config, registry, kind.schema(), kind.action_type(), ActionSpace::Computed, seed)
}

/// Trains one layer. Stops early once `patience` consecutive windows are
/// perfect and the population compacts.
pub fn train_layer(
    layer: &LayerConfig,
    registry: Arc<Registry>,
    config: &EngineConfig,
    seed: u64,
) -> LayerRun {
    let engine = engine_for(layer.kind, registry, config.clone(), mix_seed(seed ^ 1));
    train_engine(engine, layer, seed)
}

/// Training loop shared by computed and constant action spaces.
pub fn train_engine(mut engine: Engine, layer: &LayerConfig, seed: u64) -> LayerRun {
    let kind = layer.kind;
    let mut sampler = Sampler::new(Problem::training(kind), mix_seed(seed ^ 2));
    let validation = validation_set(kind, layer.validation_count, mix_seed(seed ^ 3));
    let mut window: VecDeque<bool> = VecDeque::with_capacity(WINDOW);
    let mut curve = Vec::new();
    let mut streak = 0;
    let mut exploits = 0usize;
    let mut trials = 0;
    let mut ruleset = None;
    while trials < layer.budget {
        let (instance, target) = sampler.next_pair();
        engine.run_trial(&instance, &target, true);
        trials += 1;
        let (instance, target) = sampler.next_pair();
        let out = engine.run_trial(&instance, &target, false);
        if window.len() == WINDOW {
            window.pop_front();
        }
        window.push_back(out.correct);
        exploits += 1;
        if exploits.is_multiple_of(WINDOW) {
            let accuracy = windowed(&window);
            curve.push(CurvePoint { trial: trials, accuracy, macro_size: engine.macro_size() });
            streak = if accuracy >= 1.0 { streak + 1 } else { 0 };
            if layer.patience > 0 && streak >= layer.patience {
                match compact(engine.population(), engine.registry(), kind, &validation) {
                    Ok(rules) => {
                        ruleset = Some(rules);
                        break;
                    }
                    Err(_) => streak = 0,
                }
            }
        }
    }
    let final_accuracy = if window.is_empty() { 0.0 } else { windowed(&window) };
    let ruleset = match ruleset {
        Some(r) => Ok(r),
        None if final_accuracy < 1.0 => {
            Err(LayerError::BudgetExhaustedBelowTarget { tag: kind.tag().to_string() })
        }
        None => compact(engine.population(), engine.registry(), kind, &validation),
    };
    LayerRun {
        kind,
        seed,
        curve,
        trials,
        final_accuracy,
        population: engine.population().to_vec(),
        ruleset,
    }
}

fn windowed(window: &VecDeque<bool>) -> f64 {
    window.iter().filter(|&&c| c).count() as f64 / window.len() as f64
}

/// Fresh instances spanning the layer's training lengths.
pub fn validation_set(kind: ProblemKind, count: usize, seed: u64) -> Vec<(Instance, Value)> {
    let mut sampler = Sampler::uniform(Problem::training(kind), seed);
    (0..count).map(|_| sampler.next_pair()).collect()
}

/// Greedy accuracy-preserving reduction of a trained population.
pub fn compact(
    population: &[Classifier],
    registry: &Registry,
    kind: ProblemKind,
    validation: &[(Instance, Value)],
) -> Result<Vec<Classifier>, LayerError> {
    let failed = || LayerError::CompactionFailed { tag: kind.tag().to_string() };
    let config = EngineConfig::default();
    let mut candidates: Vec<Classifier> = population
        .iter()
        .filter(|c| {
            c.error < config.eps0
                && c.experience > config.theta_sub
                && c.prediction > REWARD_CORRECT / 2.0
        })
        .cloned()
        .collect();
    if candidates.is_empty() || validation.is_empty() {
        return Err(failed());
    }
    candidates.sort_by(|a, b| {
        a.condition
            .specificity()
            .cmp(&b.condition.specificity())
            .then(b.numerosity.cmp(&a.numerosity))
            .then(b.fitness.total_cmp(&a.fitness))
            .then_with(|| a.render_key(registry).cmp(&b.render_key(registry)))
    });

    // rank in decision order, lower answers first
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    {
        let mut tmp: Vec<Classifier> = candidates.clone();
        sort_ruleset(&mut tmp, registry);
        let keys: Vec<String> = tmp.iter().map(|c| c.render_key(registry)).collect();
        for (i, c) in candidates.iter().enumerate() {
            let key = c.render_key(registry);
            order[i] = keys.iter().position(|k| *k == key).expect("same rules");
        }
    }

    let targets: Vec<CanonicalKey> = validation
        .iter()
        .map(|(_, t)| t.coerce(kind.action_type()).unwrap_or_else(|_| t.clone()).canonical_key())
        .collect();
    let mut cache = EvalCache::new();
    // per candidate, per instance: None when it abstains, else whether it is right
    let outcomes: Vec<Vec<Option<bool>>> = candidates
        .iter()
        .map(|c| {
            validation
                .iter()
                .zip(&targets)
                .map(|((instance, _), target)| {
                    if !c.condition.matches(instance) {
                        return None;
                    }
                    c.action
                        .evaluate_cached(instance, registry, &mut cache)
                        .ok()
                        .and_then(|v| v.coerce(kind.action_type()).ok())
                        .map(|v| v.canonical_key() == *target)
                })
                .collect()
        })
        .collect();

    let mut current: Vec<Option<(usize, bool)>> = vec![None; validation.len()];
    let mut score = 0;
    let mut chosen = Vec::new();
    for (ci, results) in outcomes.iter().enumerate() {
        let rank = order[ci];
        let mut next = current.clone();
        for (slot, r) in next.iter_mut().zip(results) {
            if let Some(right) = r {
                if slot.is_none_or(|(best, _)| rank < best) {
                    *slot = Some((rank, *right));
                }
            }
        }
        let next_score = next.iter().filter(|s| matches!(s, Some((_, true)))).count();
        if next_score > score {
            score = next_score;
            current = next;
            chosen.push(ci);
            if score == validation.len() {
                let mut rules: Vec<Classifier> = chosen.iter().map(|&i| candidates[i].clone()).collect();
                sort_ruleset(&mut rules, registry);
                return Ok(rules);
            }
        }
    }
    Err(failed())
}

/// Registers the ruleset as the layer's learned function and adds its rule
/// actions to the fragment pool.
pub fn wrap_as_function(
    registry: &mut Registry,
    kind: ProblemKind,
    rules: Vec<Classifier>,
) -> Result<FnId, RegistryError> {
    let actions: Vec<CodeFragment> = rules.iter().map(|r| r.action.clone()).collect();
    let function = LearnedFunction::new(rules, kind.schema(), registry);
    let spec = FunctionSpec::learned(kind.name(), kind.tag(), kind.input_type(), kind.action_type(), function);
    let id = registry.register_learned(spec)?;
    if kind.schema() == Schema::Bits {
        let mut seen: Vec<CodeFragment> = Vec::new();
        for action in actions {
            if seen.contains(&action) {
                continue;
            }
            if let Ok(output) = action.output_type(registry, Schema::Bits) {
                registry.add_fragment(kind.tag(), action.clone(), output);
            }
            seen.push(action);
        }
    }
    Ok(id)
}

pub fn call_ruleset_function(registry: &Registry, tag: &str, input: &Value) -> Result<Value, EvalError> {
    let id = registry
        .lookup(tag)
        .ok_or_else(|| EvalError::Type(format!("unknown function {tag}")))?;
    registry.call_learned(id, input, &mut EvalCache::new())
}

/// Accuracy of the learned function `tag` on `count` fresh instances of `problem`.
pub fn validate_function(registry: &Registry, tag: &str, problem: Problem, count: usize, seed: u64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let Some(id) = registry.lookup(tag) else { return 0.0 };
    let mut sampler = Sampler::uniform(problem, seed);
    let mut cache = EvalCache::new();
    let mut correct = 0;
    for _ in 0..count {
        let (instance, target) = sampler.next_pair();
        let answer = registry.call_learned(id, &instance.to_value(), &mut cache);
        if answer.is_ok_and(|v| v.canonical_key() == target.canonical_key()) {
            correct += 1;
        }
        cache.clear();
    }
    correct as f64 / count as f64
}

#[derive(Debug, Clone)]
pub struct LayerReport {
    pub layer: LayerConfig,
    pub runs: Vec<LayerRun>,
    /// Index into `runs` of the run whose ruleset was registered.
    pub chosen: Option<usize>,
}

impl LayerReport {
    pub fn successes(&self) -> usize {
        self.runs.iter().filter(|r| r.succeeded()).count()
    }

    pub fn successes_within(&self, max_rules: usize) -> usize {
        self.runs
            .iter()
            .filter(|r| r.succeeded() && r.rule_count().is_some_and(|n| n <= max_rules))
            .count()
    }

    pub fn chosen_run(&self) -> Option<&LayerRun> {
        self.chosen.map(|i| &self.runs[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub domain: Domain,
    pub length: usize,
    pub count: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct CurriculumResult {
    pub seed: u64,
    pub registry: Registry,
    pub layers: Vec<LayerReport>,
    pub validation: Vec<ValidationRow>,
    /// Index of the first layer no run of which succeeded.
    pub failed_layer: Option<usize>,
}

impl CurriculumResult {
    pub fn succeeded(&self) -> bool {
        self.failed_layer.is_none()
    }
}

/// Trains every layer in order, registering the first successful run of each.
pub fn run_curriculum(
    curriculum: &Curriculum,
    seed: u64,
    mut registry: Registry,
    config: &EngineConfig,
    mut progress: impl FnMut(&LayerConfig, &LayerRun),
) -> CurriculumResult {
    let mut layers = Vec::new();
    let mut failed_layer = None;
    for (index, layer) in curriculum.layers.iter().enumerate() {
        let frozen = Arc::new(registry.clone());
        let mut runs = Vec::new();
        let mut chosen = None;
        for run in 0..layer.runs {
            let result = train_layer(layer, frozen.clone(), config, derive_seed(seed, index, run, 0));
            progress(layer, &result);
            if chosen.is_none() && result.succeeded() {
                chosen = Some(runs.len());
            }
            runs.push(result);
        }
        let report = LayerReport { layer: layer.clone(), runs, chosen };
        match report.chosen_run() {
            Some(run) => {
                let rules = run.ruleset.clone().expect("successful run has a ruleset");
                if wrap_as_function(&mut registry, layer.kind, rules).is_err() {
                    failed_layer = Some(index);
                }
            }
            None => failed_layer = Some(index),
        }
        layers.push(report);
        if failed_layer.is_some() {
            break;
        }
    }
    let mut validation = Vec::new();
    if failed_layer.is_none() {
        for domain in Domain::ALL {
            let kind = domain.final_problem();
            if !curriculum.layers.iter().any(|l| l.kind == kind) {
                continue;
            }
            for (i, &(length, count)) in domain.validation_rows().iter().enumerate() {
                let problem = Problem::at_scale(kind, length).expect("table scales are valid");
                let accuracy = validate_function(&registry, kind.tag(), problem, count, derive_seed(seed, 1000 + i, 0, 7));
                validation.push(ValidationRow { domain, length, count, accuracy });
            }
        }
    }
    CurriculumResult { seed, registry, layers, validation, failed_layer }
}

/// Postfix text of each rule of a learned function, in decision order.
pub fn solution_lines(registry: &Registry, tag: &str) -> Vec<String> {
    let Some(spec) = registry.spec(tag) else { return Vec::new() };
    match &spec.kind {
        crate::registry::FunctionKind::Learned(f) => f
            .rules
            .iter()
            .map(|r| format!("{} -> {}", r.condition, serialize(&r.action, registry)))
            .collect(),
        crate::registry::FunctionKind::Axiom(_) => Vec::new(),
    }
}

/// Expanded tree of a learned function's rules.
pub fn solution_tree(registry: &Registry, tag: &str) -> Option<String> {
    let id = registry.lookup(tag)?;
    let spec = registry.get(id);
    if !spec.is_learned() {
        return None;
    }
    let call = CodeFragment::Node { func: id, children: vec![CodeFragment::attlst()] };
    Some(dump_expanded(&call, registry))
}

/// Plain-text run report; free of timing so that reruns are byte-identical.
pub fn render_report(result: &CurriculumResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed\t{}", result.seed);
    let _ = writeln!(out, "\n[layers]");
    let _ = writeln!(out, "layer\ttag\truns\tsucceeded\tsucceeded_le3_rules\tchosen_seed\ttrials\trules");
    for report in &result.layers {
        let chosen = report.chosen_run();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            report.layer.kind.name(),
            report.layer.kind.tag(),
            report.runs.len(),
            report.successes(),
            report.successes_within(3),
            chosen.map_or("-".to_string(), |r| r.seed.to_string()),
            chosen.map_or("-".to_string(), |r| r.trials.to_string()),
            chosen.and_then(LayerRun::rule_count).map_or("-".to_string(), |n| n.to_string()),
        );
    }
    let _ = writeln!(out, "\n[runs]");
    let _ = writeln!(out, "tag\trun\tseed\ttrials\tfinal_accuracy\toutcome");
    for report in &result.layers {
        for (i, run) in report.runs.iter().enumerate() {
            let outcome = match &run.ruleset {
                Ok(rules) if run.final_accuracy >= 1.0 => format!("ok {} rules", rules.len()),
                Ok(_) => "below target".to_string(),
                Err(e) => e.to_string(),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.4}\t{}",
                report.layer.kind.tag(),
                i,
                run.seed,
                run.trials,
                run.final_accuracy,
                outcome
            );
        }
    }
    let _ = writeln!(out, "\n[solutions]");
    for report in &result.layers {
        if report.chosen.is_none() {
            continue;
        }
        let tag = report.layer.kind.tag();
        for line in solution_lines(&result.registry, tag) {
            let _ = writeln!(out, "{tag}\t{line}");
        }
    }
    let _ = writeln!(out, "\n[validation]");
    let _ = writeln!(out, "problem\tscale\tinstances\taccuracy");
    for row in &result.validation {
        let _ = writeln!(out, "{}\t{}\t{}\t{:.4}", row.domain.name(), row.length, row.count, row.accuracy);
    }
    if let Some(i) = result.failed_layer {
        let _ = writeln!(out, "\nfailed at layer {} ({})", i, result.layers[i].layer.kind.tag());
    }
    out
}

/// Curve CSV: `trial,windowed_accuracy,macro_population_size`.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("trial,windowed_accuracy,macro_population_size\n");
    for p in curve {
        let _ = writeln!(out, "{},{:.4},{}", p.trial, p.accuracy, p.macro_size);
    }
    out
}

//! Single-step XCS over classifiers with computed actions.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::Classifier;
use crate::condition::{Condition, ConditionError};
use crate::fragment::{deserialize, generate_typed_cf, serialize, CodeFragment, EvalCache, ParseError};
use crate::instance::{Instance, Schema};
use crate::problem::{Sampler, REWARD_CORRECT, REWARD_INCORRECT};
use crate::registry::Registry;
use crate::value::{CanonicalKey, TypeSet, Value, ValueType};

const COVER_TRIES: usize = 100;
const CACHE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub n: u32,
    pub beta: f64,
    pub chi: f64,
    pub mu: f64,
    pub p_dontcare: f64,
    pub theta_sub: u64,
    pub f_i: f64,
    pub tau: f64,
    pub eps0: f64,
    pub alpha: f64,
    pub nu: f64,
    pub theta_ga: f64,
    pub theta_del: u64,
    pub delta: f64,
    pub p_i: f64,
    pub eps_i: f64,
    pub ga_subsumption: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            n: 1000,
            beta: 0.2,
            chi: 0.8,
            mu: 0.04,
            p_dontcare: 0.33,
            theta_sub: 20,
            f_i: 0.01,
            tau: 0.4,
            eps0: 10.0,
            alpha: 0.1,
            nu: 5.0,
            theta_ga: 25.0,
            theta_del: 20,
            delta: 0.1,
            p_i: 10.0,
            eps_i: 0.0,
            ga_subsumption: true,
        }
    }
}

/// Where actions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    /// Typed code fragments generated from the registry.
    Computed,
    /// A fixed menu of constant actions (plain XCS).
    Constants(Vec<CodeFragment>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub covered: u64,
    pub covering_exhausted: u64,
    pub ga_runs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub action: Option<Value>,
    pub correct: bool,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: {source}")]
    Condition { line: usize, source: ConditionError },
    #[error("line {line}: {source}")]
    Action { line: usize, source: ParseError },
}

struct MatchEntry {
    index: usize,
    key: CanonicalKey,
    value: Value,
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub config: EngineConfig,
    registry: Arc<Registry>,
    schema: Schema,
    action_type: ValueType,
    space: ActionSpace,
    theta_mna: usize,
    population: Vec<Classifier>,
    rng: ChaCha8Rng,
    time: u64,
    stats: EngineStats,
    cache: EvalCache,
}

impl Engine {
    pub fn new(
        config: EngineConfig,
        registry: Arc<Registry>,
        schema: Schema,
        action_type: ValueType,
        space: ActionSpace,
        seed: u64,
    ) -> Engine {
        let theta_mna = if action_type == ValueType::Binary { 2 } else { 1 };
        Engine {
            config,
            registry,
            schema,
            action_type,
            space,
            theta_mna,
            population: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: 0,
            stats: EngineStats::default(),
            cache: EvalCache::new(),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn population(&self) -> &[Classifier] {
        &self.population
    }

    pub fn set_population(&mut self, population: Vec<Classifier>) {
        self.population = population;
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn action_type(&self) -> ValueType {
        self.action_type
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn micro_size(&self) -> u32 {
        self.population.iter().map(|c| c.numerosity).sum()
    }

    pub fn macro_size(&self) -> usize {
        self.population.len()
    }

    /// One learning (explore) or performance (exploit) step against `target`.
    pub fn run_trial(&mut self, instance: &Instance, target: &Value, explore: bool) -> TrialOutcome {
        if self.cache_len() > CACHE_LIMIT {
            self.cache.clear();
        }
        let mut matched = self.match_set(instance);
        self.cover(instance, &mut matched);
        matched.retain(|m| self.population[m.index].numerosity > 0);

        let outcome = if matched.is_empty() {
            TrialOutcome { action: None, correct: false }
        } else {
            let array = prediction_array(&self.population, &matched);
            let chosen = if explore {
                let keys: Vec<&CanonicalKey> = array.keys().collect();
                keys[self.rng.gen_range(0..keys.len())].clone()
            } else {
                best_action(&array)
            };
            let target_key = target
                .coerce(self.action_type)
                .map(|t| t.canonical_key())
                .unwrap_or_else(|_| target.canonical_key());
            let correct = chosen == target_key;
            let action_set: Vec<usize> =
                matched.iter().filter(|m| m.key == chosen).map(|m| m.index).collect();
            if explore {
                self.time += 1;
                let reward = if correct { REWARD_CORRECT } else { REWARD_INCORRECT };
                self.update_action_set(&action_set, reward);
                self.run_ga(&action_set, instance);
            }
            let value = array[&chosen].value.clone();
            TrialOutcome { action: Some(value), correct }
        };
        self.population.retain(|c| c.numerosity > 0);
        outcome
    }

    fn cache_len(&self) -> usize {
        self.cache.len()
    }

    fn evaluate(&mut self, index: usize, instance: &Instance) -> Option<Value> {
        let cl = &self.population[index];
        cl.action
            .evaluate_cached(instance, &self.registry, &mut self.cache)
            .ok()
            .and_then(|v| v.coerce(self.action_type).ok())
    }

    fn match_set(&mut self, instance: &Instance) -> Vec<MatchEntry> {
        let mut out = Vec::new();
        for index in 0..self.population.len() {
            if self.population[index].numerosity == 0
                || !self.population[index].condition.matches(instance)
            {
                continue;
            }
            if let Some(value) = self.evaluate(index, instance) {
                out.push(MatchEntry { index, key: value.canonical_key(), value });
            }
        }
        out
    }

    fn distinct(matched: &[MatchEntry]) -> Vec<CanonicalKey> {
        let mut keys: Vec<CanonicalKey> = matched.iter().map(|m| m.key.clone()).collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// Adds matching classifiers until the match set advocates at least
    /// `theta_mna` distinct values.
    fn cover(&mut self, instance: &Instance, matched: &mut Vec<MatchEntry>) {
        let mut inserted = false;
        loop {
            let present = Self::distinct(matched);
            if present.len() >= self.theta_mna {
                break;
            }
            let condition = Condition::cover(instance, self.config.p_dontcare, &mut self.rng);
            let mut found = None;
            for _ in 0..COVER_TRIES {
                let Some(action) = self.new_action(instance) else { break };
                let value = action
                    .evaluate_cached(instance, &self.registry, &mut self.cache)
                    .ok()
                    .and_then(|v| v.coerce(self.action_type).ok());
                if let Some(value) = value {
                    let key = value.canonical_key();
                    if !present.contains(&key) {
                        found = Some((action, key, value));
                        break;
                    }
                }
            }
            let Some((action, key, value)) = found else {
                self.stats.covering_exhausted += 1;
                break;
            };
            let mut cl = Classifier::new(condition, action, self.config.f_i);
            cl.prediction = self.config.p_i;
            cl.error = self.config.eps_i;
            cl.timestamp = self.time;
            self.stats.covered += 1;
            let index = self.insert(cl);
            matched.retain(|m| m.index != index);
            matched.push(MatchEntry { index, key, value });
            inserted = true;
        }
        if inserted {
            self.delete_to_capacity();
        }
    }

    fn new_action(&mut self, instance: &Instance) -> Option<CodeFragment> {
        match &self.space {
            ActionSpace::Computed => generate_typed_cf(
                TypeSet::single(self.action_type),
                &self.registry,
                self.schema,
                instance.len(),
                &mut self.rng,
            )
            .ok(),
            ActionSpace::Constants(menu) => menu.choose(&mut self.rng).cloned(),
        }
    }

    fn mutate_action(&mut self, action: &CodeFragment, instance: &Instance) -> Option<CodeFragment> {
        if self.rng.gen::<f64>() >= self.config.mu {
            return None;
        }
        match &self.space {
            ActionSpace::Computed => self.new_action(instance),
            ActionSpace::Constants(menu) => {
                let others: Vec<&CodeFragment> = menu.iter().filter(|a| *a != action).collect();
                others.choose(&mut self.rng).map(|a| (*a).clone())
            }
        }
    }

    pub fn update_action_set(&mut self, action_set: &[usize], reward: f64) {
        let c = &self.config;
        let set_size: f64 = action_set.iter().map(|&i| self.population[i].numerosity as f64).sum();
        for &i in action_set {
            let cl = &mut self.population[i];
            cl.experience += 1;
            let exp = cl.experience as f64;
            let rate = if exp < 1.0 / c.beta { 1.0 / exp } else { c.beta };
            cl.prediction += rate * (reward - cl.prediction);
            cl.error += rate * ((reward - cl.prediction).abs() - cl.error);
            cl.action_set_size += rate * (set_size - cl.action_set_size);
        }
        let accuracy: Vec<f64> = action_set
            .iter()
            .map(|&i| {
                let e = self.population[i].error;
                if e < c.eps0 {
                    1.0
                } else {
                    c.alpha * (e / c.eps0).powf(-c.nu)
                }
            })
            .collect();
        let total: f64 = action_set
            .iter()
            .zip(&accuracy)
            .map(|(&i, k)| k * self.population[i].numerosity as f64)
            .sum();
        if total <= 0.0 {
            return;
        }
        for (&i, k) in action_set.iter().zip(&accuracy) {
            let cl = &mut self.population[i];
            let relative = k * cl.numerosity as f64 / total;
            cl.fitness += c.beta * (relative - cl.fitness);
        }
    }

    fn select_parent(&mut self, action_set: &[usize]) -> usize {
        let size = ((self.config.tau * action_set.len() as f64).ceil() as usize).clamp(1, action_set.len());
        let sample: Vec<usize> = action_set.choose_multiple(&mut self.rng, size).copied().collect();
        let mut best = sample[0];
        for &i in &sample[1..] {
            if self.population[i].fitness > self.population[best].fitness {
                best = i;
            }
        }
        best
    }

    pub fn run_ga(&mut self, action_set: &[usize], instance: &Instance) {
        if action_set.is_empty() {
            return;
        }
        let (weighted, count) = action_set.iter().fold((0.0, 0.0), |(w, n), &i| {
            let cl = &self.population[i];
            (w + cl.timestamp as f64 * cl.numerosity as f64, n + cl.numerosity as f64)
        });
        if self.time as f64 - weighted / count <= self.config.theta_ga {
            return;
        }
        self.stats.ga_runs += 1;
        for &i in action_set {
            self.population[i].timestamp = self.time;
        }
        let p1 = self.select_parent(action_set);
        let p2 = self.select_parent(action_set);
        let mut children = [self.offspring(p1), self.offspring(p2)];
        if self.rng.gen::<f64>() < self.config.chi {
            let [a, b] = &mut children;
            Condition::crossover(&mut a.condition, &mut b.condition, &mut self.rng);
            let p = (a.prediction + b.prediction) / 2.0;
            let e = (a.error + b.error) / 2.0;
            let f = (a.fitness + b.fitness) / 2.0;
            for child in [a, b] {
                child.prediction = p;
                child.error = e;
                child.fitness = f;
            }
        }
        for child in &mut children {
            child.fitness *= 0.1;
        }
        for child in &mut children {
            child.condition.mutate(instance, self.config.mu, &mut self.rng);
            if let Some(action) = self.mutate_action(&child.action, instance) {
                if action != child.action {
                    child.action = action;
                    child.prediction = self.config.p_i;
                    child.error = self.config.eps_i;
                    child.fitness = self.config.f_i;
                }
            }
        }
        for child in children {
            if self.config.ga_subsumption {
                if let Some(p) = [p1, p2].into_iter().find(|&p| self.subsumes(p, &child)) {
                    self.population[p].numerosity += 1;
                    continue;
                }
            }
            self.insert(child);
        }
        self.delete_to_capacity();
    }

    fn offspring(&self, parent: usize) -> Classifier {
        let p = &self.population[parent];
        Classifier {
            numerosity: 1,
            experience: 0,
            timestamp: self.time,
            ..p.clone()
        }
    }

    fn subsumes(&self, parent: usize, child: &Classifier) -> bool {
        let p = &self.population[parent];
        p.numerosity > 0
            && p.experience > self.config.theta_sub
            && p.error < self.config.eps0
            && p.action == child.action
            && p.condition.is_more_general(&child.condition)
    }

    /// Adds `cl`, merging into an identical live macro-classifier. Returns its index.
    pub fn insert(&mut self, cl: Classifier) -> usize {
        if let Some(i) = self
            .population
            .iter()
            .position(|c| c.numerosity > 0 && c.same_rule(&cl))
        {
            self.population[i].numerosity += cl.numerosity;
            return i;
        }
        self.population.push(cl);
        self.population.len() - 1
    }

    fn delete_to_capacity(&mut self) {
        while self.micro_size() > self.config.n {
            self.delete_one();
        }
    }

    /// Roulette-wheel removal of one micro-classifier.
    pub fn delete_one(&mut self) {
        let votes = self.deletion_votes();
        let total: f64 = votes.iter().sum();
        if total <= 0.0 {
            return;
        }
        let mut point = self.rng.gen::<f64>() * total;
        let mut victim = votes.len() - 1;
        for (i, v) in votes.iter().enumerate() {
            if point < *v {
                victim = i;
                break;
            }
            point -= v;
        }
        while self.population[victim].numerosity == 0 {
            victim -= 1;
        }
        self.population[victim].numerosity -= 1;
    }

    pub fn deletion_votes(&self) -> Vec<f64> {
        let (f_sum, n_sum) = self
            .population
            .iter()
            .fold((0.0, 0.0), |(f, n), c| (f + c.fitness, n + c.numerosity as f64));
        let mean = if n_sum > 0.0 { f_sum / n_sum } else { 0.0 };
        self.population
            .iter()
            .map(|c| {
                if c.numerosity == 0 {
                    return 0.0;
                }
                let num = c.numerosity as f64;
                let mut vote = c.action_set_size * num;
                let micro_fitness = c.fitness / num;
                if c.experience > self.config.theta_del && micro_fitness < self.config.delta * mean {
                    vote *= 3.0;
                }
                vote
            })
            .collect()
    }

    /// Exploit decision of the current population, without covering.
    pub fn decide(&self, instance: &Instance, cache: &mut EvalCache) -> Option<Value> {
        exploit_decision(&self.population, instance, &self.registry, self.action_type, cache)
    }

    /// Fraction of `n` fresh instances answered correctly; the engine is untouched.
    pub fn exploit_accuracy(&self, sampler: &mut Sampler, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut cache = EvalCache::new();
        let mut correct = 0;
        for _ in 0..n {
            let (instance, target) = sampler.next_pair();
            if self.decide(&instance, &mut cache).is_some_and(|v| v.canonical_key() == target.canonical_key()) {
                correct += 1;
            }
            if cache.len() > CACHE_LIMIT {
                cache.clear();
            }
        }
        correct as f64 / n as f64
    }
}

struct ArrayEntry {
    weighted: f64,
    fitness: f64,
    value: Value,
}

fn prediction_array(population: &[Classifier], matched: &[MatchEntry]) -> BTreeMap<CanonicalKey, ArrayEntry> {
    let mut array: BTreeMap<CanonicalKey, ArrayEntry> = BTreeMap::new();
    for m in matched {
        let cl = &population[m.index];
        let entry = array.entry(m.key.clone()).or_insert_with(|| ArrayEntry {
            weighted: 0.0,
            fitness: 0.0,
            value: m.value.clone(),
        });
        entry.weighted += cl.prediction * cl.fitness;
        entry.fitness += cl.fitness;
    }
    array
}

fn best_action(array: &BTreeMap<CanonicalKey, ArrayEntry>) -> CanonicalKey {
    let score = |e: &ArrayEntry| if e.fitness > 0.0 { e.weighted / e.fitness } else { 0.0 };
    let mut best: Option<(&CanonicalKey, f64, String)> = None;
    for (key, entry) in array {
        let s = score(entry);
        let text = entry.value.to_string();
        let better = match &best {
            None => true,
            Some((_, bs, bt)) => s > *bs || (s == *bs && text < *bt),
        };
        if better {
            best = Some((key, s, text));
        }
    }
    best.expect("non-empty prediction array").0.clone()
}

/// Prediction-array argmax over the rules matching `instance`.
pub fn exploit_decision(
    population: &[Classifier],
    instance: &Instance,
    registry: &Registry,
    action_type: ValueType,
    cache: &mut EvalCache,
) -> Option<Value> {
    let mut matched = Vec::new();
    for (index, cl) in population.iter().enumerate() {
        if cl.numerosity == 0 || !cl.condition.matches(instance) {
            continue;
        }
        if let Some(value) = cl
            .action
            .evaluate_cached(instance, registry, cache)
            .ok()
            .and_then(|v| v.coerce(action_type).ok())
        {
            matched.push(MatchEntry { index, key: value.canonical_key(), value });
        }
    }
    if matched.is_empty() {
        return None;
    }
    let array = prediction_array(population, &matched);
    let key = best_action(&array);
    array.get(&key).map(|e| e.value.clone())
}

/// Tab-separated snapshot: condition, action, p, error, F, num, exp, as, ts.
pub fn write_population(population: &[Classifier], registry: &Registry) -> String {
    let mut out = String::new();
    for c in population {
        out.push_str(&format_classifier(c, registry));
        out.push('\n');
    }
    out
}

pub fn format_classifier(c: &Classifier, registry: &Registry) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        c.condition,
        serialize(&c.action, registry),
        c.prediction,
        c.error,
        c.fitness,
        c.numerosity,
        c.experience,
        c.action_set_size,
        c.timestamp
    )
}

pub fn parse_classifier(line: &str, registry: &Registry, line_no: usize) -> Result<Classifier, SnapshotError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 9 {
        return Err(SnapshotError::Format {
            line: line_no,
            message: format!("expected 9 fields, found {}", fields.len()),
        });
    }
    let condition = fields[0]
        .parse::<Condition>()
        .map_err(|source| SnapshotError::Condition { line: line_no, source })?;
    let action = deserialize(fields[1], registry)
        .map_err(|source| SnapshotError::Action { line: line_no, source })?;
    let bad = |what: &str| SnapshotError::Format { line: line_no, message: format!("bad {what}") };
    let real = |i: usize, what: &str| fields[i].parse::<f64>().map_err(|_| bad(what));
    Ok(Classifier {
        condition,
        action,
        prediction: real(2, "prediction")?,
        error: real(3, "error")?,
        fitness: real(4, "fitness")?,
        numerosity: fields[5].parse().map_err(|_| bad("numerosity"))?,
        experience: fields[6].parse().map_err(|_| bad("experience"))?,
        action_set_size: real(7, "action set size")?,
        timestamp: fields[8].parse().map_err(|_| bad("timestamp"))?,
    })
}

pub fn read_population(text: &str, registry: &Registry) -> Result<Vec<Classifier>, SnapshotError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_classifier(l, registry, i + 1))
        .collect()
}

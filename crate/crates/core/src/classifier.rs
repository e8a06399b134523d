use crate::condition::Condition;
use crate::fragment::{serialize, CodeFragment};
use crate::registry::Registry;

/// A macro-classifier: condition, computed action and XCS bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub condition: Condition,
    pub action: CodeFragment,
    pub prediction: f64,
    pub error: f64,
    pub fitness: f64,
    pub numerosity: u32,
    pub experience: u64,
    pub action_set_size: f64,
    pub timestamp: u64,
}

impl Classifier {
    pub fn new(condition: Condition, action: CodeFragment, fitness: f64) -> Self {
        Classifier {
            condition,
            action,
            prediction: 10.0,
            error: 0.0,
            fitness,
            numerosity: 1,
            experience: 0,
            action_set_size: 1.0,
            timestamp: 0,
        }
    }

    /// Sort key for deterministic tie-breaks.
    pub fn render_key(&self, registry: &Registry) -> String {
        format!("{} {}", self.condition, serialize(&self.action, registry))
    }

    /// Same condition and structurally equal action.
    pub fn same_rule(&self, other: &Classifier) -> bool {
        self.condition == other.condition && self.action == other.action
    }
}

//! Line-oriented curriculum files.
//!
//! ```text
//! # comment
//! problem=KBitsGivenLength tag=k_l budget=20000 runs=1
//! problem=KBits tag=k budget=20000
//! ```

use thiserror::Error;

use crate::problem::ProblemKind;

pub const DEFAULT_BUDGET: u64 = 200_000;
pub const DEFAULT_PATIENCE: u32 = 1;
pub const DEFAULT_VALIDATION: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerConfig {
    pub kind: ProblemKind,
    /// Explore/exploit trial pairs.
    pub budget: u64,
    pub runs: u32,
    /// Perfect windows in a row before compaction is attempted; 0 trains the full budget.
    pub patience: u32,
    pub validation_count: usize,
}

impl LayerConfig {
    pub fn new(kind: ProblemKind) -> LayerConfig {
        LayerConfig {
            kind,
            budget: DEFAULT_BUDGET,
            runs: 1,
            patience: DEFAULT_PATIENCE,
            validation_count: DEFAULT_VALIDATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Curriculum {
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurriculumError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: layer {layer} needs {missing}, which no earlier layer provides")]
    MissingPrerequisite { line: usize, layer: String, missing: String },
    #[error("curriculum has no layers")]
    Empty,
}

impl CurriculumError {
    /// Tag of the unmet prerequisite, if that is the problem.
    pub fn unmet_tag(&self) -> Option<&str> {
        match self {
            CurriculumError::MissingPrerequisite { missing, .. } => Some(missing),
            _ => None,
        }
    }
}

impl Curriculum {
    /// Parses a curriculum; `available` lists tags already provided by a base toolbox.
    pub fn parse(text: &str, available: &[&str]) -> Result<Curriculum, CurriculumError> {
        let mut provided: Vec<String> = available.iter().map(|s| s.to_string()).collect();
        let mut layers = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| CurriculumError::Syntax { line, message };
            let mut kind = None;
            let mut tag = None;
            let mut budget = None;
            let mut runs = None;
            let mut patience = None;
            let mut validation = None;
            for field in content.split_whitespace() {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| syntax(format!("expected key=value, found {field:?}")))?;
                let number = |what: &str| {
                    value
                        .parse::<u64>()
                        .map_err(|_| syntax(format!("{what} must be a non-negative integer, found {value:?}")))
                };
                match key {
                    "problem" => {
                        kind = Some(value.parse::<ProblemKind>().map_err(|e| syntax(e.to_string()))?)
                    }
                    "tag" => tag = Some(value.to_string()),
                    "budget" => budget = Some(number("budget")?),
                    "runs" => runs = Some(number("runs")?),
                    "patience" => patience = Some(number("patience")?),
                    "validation" => validation = Some(number("validation")?),
                    other => return Err(syntax(format!("unknown key {other:?}"))),
                }
            }
            let kind = kind.ok_or_else(|| syntax("missing problem=".into()))?;
            if let Some(tag) = tag {
                if tag != kind.tag() {
                    return Err(syntax(format!("{} registers as {}, not {tag}", kind.name(), kind.tag())));
                }
            }
            if let Some(missing) = kind.prerequisites().iter().find(|p| !provided.iter().any(|t| t == *p)) {
                return Err(CurriculumError::MissingPrerequisite {
                    line,
                    layer: kind.tag().to_string(),
                    missing: missing.to_string(),
                });
            }
            if provided.iter().any(|t| t == kind.tag()) {
                return Err(syntax(format!("{} is already provided", kind.tag())));
            }
            let runs = runs.unwrap_or(1);
            if runs == 0 {
                return Err(syntax("runs must be at least 1".into()));
            }
            provided.push(kind.tag().to_string());
            let mut layer = LayerConfig::new(kind);
            layer.budget = budget.unwrap_or(DEFAULT_BUDGET);
            layer.runs = runs as u32;
            layer.patience = patience.map_or(DEFAULT_PATIENCE, |p| p as u32);
            layer.validation_count = validation.map_or(DEFAULT_VALIDATION, |v| v as usize);
            layers.push(layer);
        }
        if layers.is_empty() {
            return Err(CurriculumError::Empty);
        }
        Ok(Curriculum { layers })
    }

    pub fn with_runs(mut self, runs: u32) -> Curriculum {
        for l in &mut self.layers {
            l.runs = runs.max(1);
        }
        self
    }

    pub fn render(&self) -> String {
        self.layers
            .iter()
            .map(|l| {
                format!(
                    "problem={} tag={} budget={} runs={} patience={} validation={}\n",
                    l.kind.name(),
                    l.kind.tag(),
                    l.budget,
                    l.runs,
                    l.patience,
                    l.validation_count
                )
            })
            .collect()
    }
}

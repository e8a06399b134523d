//! Accuracy-based learning classifier system whose rule actions are typed
//! code fragments, trained layer by layer so that each compacted ruleset
//! becomes a function for later layers.

pub mod classifier;
pub mod condition;
pub mod curriculum;
pub mod engine;
pub mod fragment;
pub mod instance;
pub mod layered;
pub mod problem;
pub mod reference;
pub mod registry;
pub mod toolbox;
pub mod value;

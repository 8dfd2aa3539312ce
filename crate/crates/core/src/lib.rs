//! Pattern-driven multi-level on-chip memory hierarchy: address pattern
//! tools, a cycle-level simulator with a reference model, area and power
//! estimation, and loop-nest analysis of neural network layers.

pub mod cli;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod loopnest;
pub mod pattern;
pub mod refmodel;
pub mod sim;
pub mod word;

pub use error::{Error, Result, Violation};
pub use word::Word;

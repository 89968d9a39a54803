//! Autonomy Model and Notation (AMN) toolkit: a textual modeling language
//! for autonomous agents in cyber-physical systems, with a conformance
//! validator, an autonomy-level and interaction-pattern classifier, a
//! deterministic multi-agent simulator and a DOT diagram emitter.

pub mod autonomy;
pub mod diagnostic;
pub mod dsl;
pub mod model;
pub mod render;
pub mod simulator;
pub mod validator;

pub use diagnostic::{Diagnostic, Severity};
pub use model::Model;

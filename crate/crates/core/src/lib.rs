//! Probe-then-plan search planning, desk scale.
//!
//! A retrieval snapshot is taken before any query reformulation happens.
//! A diagnosis of that snapshot drives either a teacher oracle or a trained
//! student policy to a grounded search plan, plans are executed against the
//! lexical retrieval environment under a hard relevance gate, and a
//! complexity router keeps simple traffic away from the whole machinery.
//!
//! The crate is organized along the pipeline:
//!
//! - [`world`]: catalog and query data model plus seeded world generation
//! - [`retrieval`]: inverted index, probe and full ranking, scoring models
//! - [`diagnosis`]: the three-state retrieval diagnosis
//! - [`planning`]: plans, the teacher oracle, and the student policy
//! - [`executor`]: parallel plan execution and the gated reward
//! - [`training`]: offline synthesis, supervised fit, group-relative updates
//! - [`pipeline`]: staged training orchestration
//! - [`routing`]: the fast/complex path classifier
//! - [`eval`]: metrics and end-to-end system comparison

pub mod config;
pub mod diagnosis;
pub mod error;
pub mod eval;
pub mod executor;
pub mod pipeline;
pub mod planning;
pub mod retrieval;
pub mod routing;
pub mod training;
pub mod world;

pub use config::PipelineConfig;
pub use error::{Error, Result};

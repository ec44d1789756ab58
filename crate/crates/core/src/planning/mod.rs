//! Plan representation, the teacher oracle, and the trainable student
//! policy.

mod candidates;
mod context;
mod plan;
mod policy;
mod sanitize;
mod teacher;

pub use candidates::{
    concretize, enumerate_candidates, filter_for_subcase, select_argmax, Candidate, CandidateKind,
};
pub use context::{blind_context, extract_context, PolicyContext, FEATURE_DIM, STRATEGY_COUNT};
pub use plan::{compare_values, numeric_prefix, FilterOp, Plan, Provenance, SearchAction};
pub use policy::{
    blind_rewrite, grad_logprob, student_argmax_strategy, student_logprob, student_sample,
    PolicyGrad, PolicyParams, Strategy, STRATEGIES,
};
pub use sanitize::{correct_against_vocab, edit_distance_within, sanitize};
pub use teacher::teacher_plan;

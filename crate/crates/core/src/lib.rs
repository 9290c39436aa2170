//! Samu: a developmental chatbot engine that reads sentences as
//! subject-predicate-object triplets and learns to predict the next one.
//!
//! The learner is Q-learning where every action (a predicted triplet) owns a
//! small sigmoidal perceptron that approximates `Q(state, action)`. The state
//! is a "mental image": the recent `S.P(O);` statement list rendered into a
//! fixed numeric grid. An LZW dictionary tree over the triplet stream can
//! optionally narrow the candidate actions.
//!
//! Module map:
//!
//! - [`triplet`]: the triplet value type, reward policies and corpus loading
//! - [`nlp`]: triplet extraction over a parser-neutral linkage format
//! - [`imagery`]: statement window and mental image rendering
//! - [`mlp`]: the per-action perceptron
//! - [`soul`]: the `samu.soul.txt` persistence format
//! - [`lzw`]: the triplet LZW tree
//! - [`qengine`]: the Q-learning engine, tabular baseline and bogo-relevance
//! - [`agent`]: the caregiver-facing session
//! - [`harness`]: deterministic learning-curve experiments
//! - [`tui`]: the three-pane terminal front end and its line-mode fallback

pub mod agent;
pub mod error;
pub mod harness;
pub mod imagery;
pub mod lzw;
pub mod mlp;
pub mod nlp;
pub mod qengine;
pub mod soul;
pub mod triplet;
pub mod tui;

pub use error::{Error, Result};
pub use triplet::{Corpus, RewardPolicy, Triplet};

//! A diagnostic expert-system shell built on Dempster-Shafer evidence
//! combination.
//!
//! - [`evidence`]: frames, mass functions, belief, plausibility and
//!   Dempster's rule.
//! - [`kb`]: the rule language, its text format, validation and the rule
//!   editor.
//! - [`network`]: off-line compilation of each partition into a rule network.
//! - [`engine`]: the mixed-initiative consultation loop.
//! - [`report`] and [`script`]: consultation reports and answer scripts.

pub mod demo;
pub mod engine;
pub mod evidence;
pub mod kb;
pub mod network;
pub mod report;
pub mod script;

//! Independent reference implementations and fixture builders used only by
//! tests.
//!
//! The oracles are written the slow, obvious way on purpose and share no
//! code with the crates under test.

pub mod oracle;
pub mod tables;
pub mod workflow;

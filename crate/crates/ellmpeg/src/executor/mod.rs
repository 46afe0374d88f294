//! Command extraction, validation, and dispatch.
//!
//! Answers are scanned for executable content: lines inside fenced code
//! blocks and bare lines whose first token is an allowlisted program.
//! Candidates are tokenized with a POSIX-subset tokenizer (no expansion of
//! any kind), validated against the allowlist and the work-directory
//! confinement policy, and dispatched by direct process spawn. A shell is
//! never involved.

mod extract;
mod run;
mod tokenize;
mod validate;

pub use extract::{extract_commands, ExtractedCommand};
pub use run::{execute, ExecutionError, ExecutionResult, RunOptions};
pub use tokenize::{join_argv, tokenize, TokenizeError};
pub use validate::{validate, ExecPolicy, Program, RejectionReason, ValidatedCommand};

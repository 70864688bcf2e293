//! putforge: a deterministic generator of C programs-under-test, each with
//! exactly one seeded, input-triggerable bug.
//!
//! Programs are grown by composing parametric transformations (conditionals,
//! loops, string checks) around a failing statement. Every generated program
//! ships with a triggering input, a clean input when one exists, static
//! complexity metrics, and a machine-readable manifest; a verification
//! harness replays the ground truth through system C compilers.

pub mod batch;
pub mod cli;
pub mod dsl;
pub mod emit;
pub mod instantiate;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod verify;

pub use batch::{build_put, generate_batch, make_batch, BatchPreset};
pub use instantiate::{instantiate, random_sequence, ArgvPolicy, Ranges, Rng};
pub use model::{BugKind, InstantiatedSequence, Put, SequenceSpec, TransformationKind};
pub use oracle::{brute_force_check, derive_inputs, interpret, Outcome};

//! Static measures per PUT: cyclomatic complexity of the generated `main`
//! and an analytic count of the statements executed on the trigger path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConcreteTransformation, HoleFiller, InstantiatedSequence, TransformationKind};
use crate::oracle::{self, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub cyclomatic: u64,
    pub path_statements: u64,
    pub transformation_count: u64,
}

/// Decision points a kind contributes to the generated `main`: one per
/// `if`/`for`/`while` in its template.
pub fn increment(kind: TransformationKind) -> u64 {
    match kind {
        TransformationKind::Ic | TransformationKind::Sc | TransformationKind::Fl => 1,
        // Guard if + while + inner if; declarations + for + two ifs.
        TransformationKind::Pc | TransformationKind::Cc => 3,
    }
}

/// Cyclomatic complexity of the generated `main`: 1 for the base path, 1 for
/// the argc guard, plus the per-item increments. Computed from the sequence
/// alone, without emitting.
pub fn cyclomatic(seq: &InstantiatedSequence) -> u64 {
    2 + seq.items.iter().map(|item| increment(item.kind)).sum::<u64>()
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("argv vector does not reach the bug (interpreter verdict: {0:?})")]
    NotATrigger(Outcome),
}

/// Statements executed from entry to the bug on the given trigger input.
/// Loop bodies count once per iteration (condition, body, increment), loop
/// setup and the final failing condition check count once. The vector must
/// actually trigger the bug; this is checked through the interpreter.
///
/// Per item on the path:
/// - IC, SC: 1 (the condition)
/// - FL with bound e: 2 + 3·max(e, 0)
/// - PC on a string of length L: 4 + 4·ceil(L/2)
/// - CC on a string of length L: 4 + 3·L
///
/// plus 1 for the argc guard and 1 for the bug statement itself.
pub fn path_statements(
    seq: &InstantiatedSequence,
    argv: &[String],
) -> Result<u64, MetricsError> {
    let outcome = oracle::interpret(seq, argv);
    if outcome != Outcome::FailReached {
        return Err(MetricsError::NotATrigger(outcome));
    }
    let mut total = 1; // argc guard
    for item in &seq.items {
        total += item_statements(item, argv);
        let on_path = item
            .holes
            .iter()
            .find(|h| matches!(h, HoleFiller::Next | HoleFiller::Fail(_)))
            .expect("validated item");
        if matches!(on_path, HoleFiller::Fail(_)) {
            total += 1; // the bug statement
        }
    }
    Ok(total)
}

fn item_statements(item: &ConcreteTransformation, argv: &[String]) -> u64 {
    match item.kind {
        TransformationKind::Ic | TransformationKind::Sc => 1,
        TransformationKind::Fl => {
            let e = oracle::int_value(&item.params[0], argv).max(0) as u64;
            2 + 3 * e
        }
        TransformationKind::Pc => {
            let len = oracle::str_value(&item.params[0], argv).len() as u64;
            4 + 4 * len.div_ceil(2)
        }
        TransformationKind::Cc => {
            let len = oracle::str_value(&item.params[0], argv).len() as u64;
            4 + 3 * len
        }
    }
}

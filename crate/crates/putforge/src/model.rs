//! Transformation catalogue and the program model shared by every stage.
//!
//! A program-under-test (PUT) is described by a flat [`SequenceSpec`]: a
//! chain of transformation applications where each non-last item carries a
//! `NEXT` hole that the following item occupies, and the last item carries
//! the single `FAIL` hole (the seeded bug). The flat form is equivalent to
//! an explicitly nested tree, available through [`SequenceSpec::to_nested`].

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::metrics::Metrics;

/// The five supported transformation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformationKind {
    /// Integer comparison: conditional on two integer parameters being equal.
    Ic,
    /// String comparison: conditional on two string parameters being equal.
    Sc,
    /// For loop iterating a fixed number of times, then running its body hole.
    Fl,
    /// Palindrome check: body hole runs iff the string parameter is a
    /// palindrome of at least a given length.
    Pc,
    /// Character counting: conditional on a character occurring exactly a
    /// given number of times in the string parameter.
    Cc,
}

/// All kinds, in catalogue order.
pub const ALL_KINDS: [TransformationKind; 5] = [
    TransformationKind::Ic,
    TransformationKind::Sc,
    TransformationKind::Fl,
    TransformationKind::Pc,
    TransformationKind::Cc,
];

/// Static type of a parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    IntLike,
    Str,
    Char,
}

/// Role of a hole slot: `Then`/`Else` for conditionals, `Body` for the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleType {
    Then,
    Else,
    Body,
}

impl TransformationKind {
    pub fn param_types(self) -> &'static [ParamType] {
        use ParamType::*;
        match self {
            TransformationKind::Ic => &[IntLike, IntLike],
            TransformationKind::Sc => &[Str, Str],
            TransformationKind::Fl => &[IntLike],
            TransformationKind::Pc => &[Str, IntLike],
            TransformationKind::Cc => &[Str, Char, IntLike],
        }
    }

    pub fn hole_types(self) -> &'static [HoleType] {
        use HoleType::*;
        match self {
            TransformationKind::Ic | TransformationKind::Sc | TransformationKind::Cc => {
                &[Then, Else]
            }
            TransformationKind::Fl | TransformationKind::Pc => &[Body],
        }
    }

    /// Index of the slot conventionally bound to a command-line argument
    /// (`v1` for IC, `s1` for SC, `s` for PC and CC). `FL` has none.
    pub fn input_slot(self) -> Option<usize> {
        match self {
            TransformationKind::Fl => None,
            _ => Some(0),
        }
    }

    /// Human-readable slot name, used in diagnostics.
    pub fn slot_name(self, slot: usize) -> &'static str {
        match (self, slot) {
            (TransformationKind::Ic, 0) => "v1",
            (TransformationKind::Ic, 1) => "v2",
            (TransformationKind::Sc, 0) => "s1",
            (TransformationKind::Sc, 1) => "s2",
            (TransformationKind::Fl, 0) => "e",
            (TransformationKind::Pc, 0) | (TransformationKind::Cc, 0) => "s",
            (TransformationKind::Cc, 1) => "c",
            (TransformationKind::Pc, 1) | (TransformationKind::Cc, 2) => "n",
            _ => "?",
        }
    }
}

impl fmt::Display for TransformationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransformationKind::Ic => "IC",
            TransformationKind::Sc => "SC",
            TransformationKind::Fl => "FL",
            TransformationKind::Pc => "PC",
            TransformationKind::Cc => "CC",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TransformationKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "IC" => Ok(TransformationKind::Ic),
            "SC" => Ok(TransformationKind::Sc),
            "FL" => Ok(TransformationKind::Fl),
            "PC" => Ok(TransformationKind::Pc),
            "CC" => Ok(TransformationKind::Cc),
            _ => Err(()),
        }
    }
}

/// Fixed parameter and hole signatures of a transformation kind.
pub fn arity(kind: TransformationKind) -> (&'static [ParamType], &'static [HoleType]) {
    (kind.param_types(), kind.hole_types())
}

/// A concrete literal value carried by a parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamValue {
    Int(i64),
    Str(String),
    Char(char),
}

impl ParamValue {
    pub fn param_type(&self) -> ParamType {
        match self {
            ParamValue::Int(_) => ParamType::IntLike,
            ParamValue::Str(_) => ParamType::Str,
            ParamValue::Char(_) => ParamType::Char,
        }
    }
}

/// An actual parameter of a transformation application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Param {
    /// A fixed constant.
    Literal(ParamValue),
    /// `argv[i]` used as a string; index is 1-based.
    ArgvString(u32),
    /// `atoll(argv[i])`: the integer parse of a command-line argument.
    ArgvInt(u32),
    /// Placeholder resolved at instantiation time, written `?` in the DSL.
    Fresh,
}

/// The two supported bug payloads for the `FAIL` hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BugKind {
    Assert,
    #[serde(rename = "oob")]
    OutOfBounds,
}

impl fmt::Display for BugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BugKind::Assert => f.write_str("assert"),
            BugKind::OutOfBounds => f.write_str("oob"),
        }
    }
}

/// What fills a hole of a transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HoleFiller {
    /// Opaque, brace-balanced C statement text.
    Snippet(String),
    /// Occupied by the next transformation in the sequence.
    Next,
    /// The seeded bug.
    Fail(BugKind),
    /// A no-op statement.
    Skip,
}

/// One transformation application: a kind plus its actual parameters and
/// hole fillers, in slot order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationSpec {
    pub kind: TransformationKind,
    pub params: Vec<Param>,
    pub holes: Vec<HoleFiller>,
}

/// A chain of transformations; item `k + 1` occupies item `k`'s `NEXT` hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSpec {
    pub items: Vec<TransformationSpec>,
}

/// A single validation problem. `item` is the 0-based offending item, when
/// the problem is attributable to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub item: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.item {
            Some(i) => write!(f, "item {}: {}", i + 1, self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn violation(item: impl Into<Option<usize>>, message: impl Into<String>) -> Violation {
    Violation {
        item: item.into(),
        message: message.into(),
    }
}

/// Renders a violation list as one `;`-separated line for error messages.
pub fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Characters admissible in `char` parameters: printable ASCII without the
/// double quote, backslash, and space, so that C emission and shell quoting
/// stay trivial.
pub fn is_char_literal(c: char) -> bool {
    ('!'..='~').contains(&c) && c != '"' && c != '\\'
}

/// Characters admissible in string literals: printable ASCII (space allowed)
/// without the double quote and backslash.
pub fn is_string_literal_char(c: char) -> bool {
    (' '..='~').contains(&c) && c != '"' && c != '\\'
}

/// The full pool of admissible `char` literals, in code-point order.
pub fn char_literal_pool() -> Vec<char> {
    ('!'..='~').filter(|&c| is_char_literal(c)).collect()
}

fn is_brace_balanced(text: &str) -> bool {
    let mut depth = 0i64;
    for c in text.chars() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

fn param_matches(param: &Param, ty: ParamType) -> bool {
    match param {
        Param::Fresh => true,
        Param::Literal(v) => v.param_type() == ty,
        Param::ArgvString(_) => ty == ParamType::Str,
        Param::ArgvInt(_) => ty == ParamType::IntLike,
    }
}

fn describe_param(param: &Param) -> &'static str {
    match param {
        Param::Literal(ParamValue::Int(_)) => "int literal",
        Param::Literal(ParamValue::Str(_)) => "string literal",
        Param::Literal(ParamValue::Char(_)) => "char literal",
        Param::ArgvString(_) => "string argument reference",
        Param::ArgvInt(_) => "integer argument reference",
        Param::Fresh => "fresh parameter",
    }
}

fn describe_type(ty: ParamType) -> &'static str {
    match ty {
        ParamType::IntLike => "int-like",
        ParamType::Str => "string",
        ParamType::Char => "char",
    }
}

/// Checks a sequence against every structural rule. Total: malformed input
/// yields violations, never a panic. An empty result means the sequence is
/// well-formed.
pub fn validate(seq: &SequenceSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if seq.items.is_empty() {
        out.push(violation(None, "empty sequence"));
        return out;
    }
    let last = seq.items.len() - 1;
    for (i, item) in seq.items.iter().enumerate() {
        let (ptypes, htypes) = arity(item.kind);
        if item.params.len() != ptypes.len() {
            out.push(violation(
                i,
                format!(
                    "{} takes {} parameters, got {}",
                    item.kind,
                    ptypes.len(),
                    item.params.len()
                ),
            ));
        }
        if item.holes.len() != htypes.len() {
            out.push(violation(
                i,
                format!(
                    "{} takes {} holes, got {}",
                    item.kind,
                    htypes.len(),
                    item.holes.len()
                ),
            ));
        }
        for (slot, (param, &ty)) in item.params.iter().zip(ptypes).enumerate() {
            if !param_matches(param, ty) {
                out.push(violation(
                    i,
                    format!(
                        "{} requires {}, got {}",
                        item.kind.slot_name(slot),
                        describe_type(ty),
                        describe_param(param)
                    ),
                ));
            }
            match param {
                Param::ArgvString(idx) | Param::ArgvInt(idx) if *idx < 1 => {
                    out.push(violation(i, "argv index must be at least 1"));
                }
                Param::Literal(ParamValue::Char(c)) if !is_char_literal(*c) => {
                    out.push(violation(
                        i,
                        format!("char literal {c:?} outside the admissible set"),
                    ));
                }
                Param::Literal(ParamValue::Str(s)) => {
                    if let Some(bad) = s.chars().find(|&c| !is_string_literal_char(c)) {
                        out.push(violation(
                            i,
                            format!("string literal contains inadmissible character {bad:?}"),
                        ));
                    }
                }
                _ => {}
            }
        }
        let nexts = item
            .holes
            .iter()
            .filter(|h| matches!(h, HoleFiller::Next))
            .count();
        let fails = item
            .holes
            .iter()
            .filter(|h| matches!(h, HoleFiller::Fail(_)))
            .count();
        if i < last {
            if nexts != 1 {
                out.push(violation(
                    i,
                    format!("non-last item must have exactly one NEXT hole, found {nexts}"),
                ));
            }
            if fails != 0 {
                out.push(violation(i, "FAIL is only allowed in the last item"));
            }
        } else {
            if nexts != 0 {
                out.push(violation(i, "last item must not have a NEXT hole"));
            }
            if fails != 1 {
                out.push(violation(
                    i,
                    format!("last item must have exactly one FAIL hole, found {fails}"),
                ));
            }
        }
        for hole in &item.holes {
            if let HoleFiller::Snippet(text) = hole {
                if !is_brace_balanced(text) {
                    out.push(violation(i, "snippet text is not brace-balanced"));
                }
            }
        }
    }
    out
}

impl SequenceSpec {
    pub fn new(items: Vec<TransformationSpec>) -> Self {
        SequenceSpec { items }
    }

    pub fn is_valid(&self) -> bool {
        validate(self).is_empty()
    }

    /// Explicitly nested view: each `NEXT` hole replaced by the following
    /// item. Requires a well-formed sequence.
    pub fn to_nested(&self) -> Option<NestedTransformation> {
        if !self.is_valid() {
            return None;
        }
        fn build(items: &[TransformationSpec]) -> NestedTransformation {
            let item = &items[0];
            let holes = item
                .holes
                .iter()
                .map(|h| match h {
                    HoleFiller::Next => NestedHole::Child(Box::new(build(&items[1..]))),
                    other => NestedHole::Leaf(other.clone()),
                })
                .collect();
            NestedTransformation {
                kind: item.kind,
                params: item.params.clone(),
                holes,
            }
        }
        Some(build(&self.items))
    }

    /// Inverse of [`SequenceSpec::to_nested`].
    pub fn from_nested(root: &NestedTransformation) -> Self {
        let mut items = Vec::new();
        let mut current = Some(root);
        while let Some(node) = current {
            let mut next = None;
            let holes = node
                .holes
                .iter()
                .map(|h| match h {
                    NestedHole::Leaf(f) => f.clone(),
                    NestedHole::Child(child) => {
                        next = Some(child.as_ref());
                        HoleFiller::Next
                    }
                })
                .collect();
            items.push(TransformationSpec {
                kind: node.kind,
                params: node.params.clone(),
                holes,
            });
            current = next;
        }
        SequenceSpec { items }
    }
}

/// A transformation with its holes resolved either to leaves or to a nested
/// child transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedTransformation {
    pub kind: TransformationKind,
    pub params: Vec<Param>,
    pub holes: Vec<NestedHole>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NestedHole {
    Leaf(HoleFiller),
    Child(Box<NestedTransformation>),
}

/// A parameter after instantiation: no `Fresh` remains by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConcreteParam {
    Literal(ParamValue),
    ArgvString(u32),
    ArgvInt(u32),
}

impl ConcreteParam {
    /// The argv index this parameter reads, if any.
    pub fn argv_index(&self) -> Option<u32> {
        match self {
            ConcreteParam::ArgvString(i) | ConcreteParam::ArgvInt(i) => Some(*i),
            ConcreteParam::Literal(_) => None,
        }
    }
}

/// A fully concrete transformation application. `suffix` is the 1-based item
/// position, appended to every template-local identifier so that repeated
/// kinds never redeclare a name in the same scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteTransformation {
    pub kind: TransformationKind,
    pub params: Vec<ConcreteParam>,
    pub holes: Vec<HoleFiller>,
    pub suffix: u32,
}

/// A fully concrete chain, ready for emission and input derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantiatedSequence {
    pub items: Vec<ConcreteTransformation>,
    /// Highest argv index referenced by any parameter (0 when none).
    pub argv_arity: u32,
}

impl InstantiatedSequence {
    /// The bug kind of the single `FAIL` hole.
    pub fn bug_kind(&self) -> Option<BugKind> {
        self.items.iter().find_map(|item| {
            item.holes.iter().find_map(|h| match h {
                HoleFiller::Fail(kind) => Some(*kind),
                _ => None,
            })
        })
    }
}

/// A generated program-under-test together with its ground truth.
#[derive(Debug, Clone)]
pub struct Put {
    /// Complete C source text.
    pub source: String,
    /// 1-based line of the bug statement in `source`.
    pub bug_line: u32,
    /// Command-line arguments (`argv[1..]`) that reach the bug.
    pub trigger: Vec<String>,
    /// Arguments of the same arity on which the program exits cleanly.
    /// `None` when the bug is unconditionally reachable (for example a pure
    /// FL chain), in which case no such input exists.
    pub non_trigger: Option<Vec<String>>,
    pub metrics: Metrics,
    /// Seed the instantiation draws came from.
    pub seed: u64,
    /// The sequence the PUT was instantiated from.
    pub spec: SequenceSpec,
    pub bug_kind: BugKind,
    pub argv_arity: u32,
}

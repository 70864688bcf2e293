//! Reference semantics for instantiated sequences: an interpreter that
//! mirrors the emitted C, constraint extraction per hole, constructive
//! derivation of triggering and non-triggering inputs, and a brute-force
//! enumerator for cross-checking small instances.
//!
//! Snippet holes are treated as clean leaves: every snippet a sequence can
//! legally carry terminates without reaching the bug (the bug is always the
//! dedicated `FAIL` filler).

use thiserror::Error;

use crate::model::{
    ConcreteParam, ConcreteTransformation, HoleFiller, InstantiatedSequence, ParamValue,
    TransformationKind,
};

/// Result of running a sequence on an argv vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Control reached the `FAIL` hole.
    FailReached,
    /// The program exited normally (fall-through, `exit(0)`, or a snippet).
    CleanExit,
    /// Fewer arguments than the argc guard requires; the program returns 0.
    InsufficientArgs,
}

/// C `atoll` semantics: optional leading whitespace, optional sign, longest
/// digit prefix, 0 when no digits, saturating at the 64-bit limits.
pub fn atoll(s: &str) -> i64 {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() && matches!(bytes[i], b' ' | b'\t' | b'\n' | 0x0B | 0x0C | b'\r') {
        i += 1;
    }
    let mut negative = false;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        negative = bytes[i] == b'-';
        i += 1;
    }
    let mut acc: i128 = 0;
    let limit = i64::MAX as i128 + 1;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        if acc < limit {
            acc = acc * 10 + (bytes[i] - b'0') as i128;
        }
        i += 1;
    }
    if negative {
        (-acc).max(i64::MIN as i128) as i64
    } else {
        acc.min(i64::MAX as i128) as i64
    }
}

fn arg(argv: &[String], index: u32) -> &str {
    &argv[index as usize - 1]
}

/// Integer value of an int-like parameter under a given argv vector.
pub(crate) fn int_value(param: &ConcreteParam, argv: &[String]) -> i64 {
    match param {
        ConcreteParam::Literal(ParamValue::Int(v)) => *v,
        ConcreteParam::ArgvInt(i) => atoll(arg(argv, *i)),
        other => unreachable!("int slot holds {other:?}"),
    }
}

/// String value of a string parameter under a given argv vector.
pub(crate) fn str_value<'a>(param: &'a ConcreteParam, argv: &'a [String]) -> &'a str {
    match param {
        ConcreteParam::Literal(ParamValue::Str(s)) => s,
        ConcreteParam::ArgvString(i) => arg(argv, *i),
        other => unreachable!("string slot holds {other:?}"),
    }
}

fn char_value(param: &ConcreteParam) -> char {
    match param {
        ConcreteParam::Literal(ParamValue::Char(c)) => *c,
        other => unreachable!("char slot holds {other:?}"),
    }
}

fn is_palindrome(s: &str) -> bool {
    let b = s.as_bytes();
    (0..b.len() / 2).all(|i| b[i] == b[b.len() - 1 - i])
}

fn char_count(s: &str, c: char) -> i64 {
    s.chars().filter(|&x| x == c).count() as i64
}

/// Evaluates the sequence on an argv vector, mirroring the emitted C
/// statement by statement. FL loop bodies are skipped: they are
/// side-effect-free by construction and cannot change the outcome.
pub fn interpret(seq: &InstantiatedSequence, argv: &[String]) -> Outcome {
    if (argv.len() as u32) < seq.argv_arity {
        return Outcome::InsufficientArgs;
    }
    let mut idx = 0;
    loop {
        let item = &seq.items[idx];
        let hole = match item.kind {
            TransformationKind::Ic => {
                let v1 = int_value(&item.params[0], argv);
                let v2 = int_value(&item.params[1], argv);
                if v1 == v2 {
                    0
                } else {
                    1
                }
            }
            TransformationKind::Sc => {
                let s1 = str_value(&item.params[0], argv);
                let s2 = str_value(&item.params[1], argv);
                if s1 == s2 {
                    0
                } else {
                    1
                }
            }
            TransformationKind::Fl => 0,
            TransformationKind::Pc => {
                let s = str_value(&item.params[0], argv);
                let n = int_value(&item.params[1], argv);
                if (s.len() as i64) < n || !is_palindrome(s) {
                    return Outcome::CleanExit; // exit(0)
                }
                0
            }
            TransformationKind::Cc => {
                let s = str_value(&item.params[0], argv);
                let c = char_value(&item.params[1]);
                let n = int_value(&item.params[2], argv);
                if char_count(s, c) == n {
                    0
                } else {
                    1
                }
            }
        };
        match &item.holes[hole] {
            HoleFiller::Next => idx += 1,
            HoleFiller::Fail(_) => return Outcome::FailReached,
            HoleFiller::Skip | HoleFiller::Snippet(_) => return Outcome::CleanExit,
        }
    }
}

/// One condition on a single argv slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    IntEquals(i64),
    IntNotEquals(i64),
    StrEquals(String),
    StrNotEquals(String),
    PalindromeMinLen(i64),
    CharCountEquals(char, i64),
    CharCountNotEquals(char, i64),
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Atom::IntEquals(v) => write!(f, "integer value = {v}"),
            Atom::IntNotEquals(v) => write!(f, "integer value != {v}"),
            Atom::StrEquals(s) => write!(f, "string = {s:?}"),
            Atom::StrNotEquals(s) => write!(f, "string != {s:?}"),
            Atom::PalindromeMinLen(n) => write!(f, "palindrome of length >= {n}"),
            Atom::CharCountEquals(c, n) => write!(f, "exactly {n} occurrences of {c:?}"),
            Atom::CharCountNotEquals(c, n) => write!(f, "not {n} occurrences of {c:?}"),
        }
    }
}

/// Checks an atom against a concrete argument string, using the same value
/// semantics as the interpreter.
pub fn atom_holds(atom: &Atom, value: &str) -> bool {
    match atom {
        Atom::IntEquals(v) => atoll(value) == *v,
        Atom::IntNotEquals(v) => atoll(value) != *v,
        Atom::StrEquals(s) => value == s,
        Atom::StrNotEquals(s) => value != s,
        Atom::PalindromeMinLen(n) => (value.len() as i64) >= *n && is_palindrome(value),
        Atom::CharCountEquals(c, n) => char_count(value, *c) == *n,
        Atom::CharCountNotEquals(c, n) => char_count(value, *c) != *n,
    }
}

/// What entering a given hole of a transformation requires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HoleConstraint {
    /// The hole executes on every input (FL's body).
    Unconstrained,
    /// The predicate involves no argv slot and holds on this branch.
    StaticallyTrue,
    /// The predicate involves no argv slot and this branch is dead.
    StaticallyFalse,
    /// A single-slot condition.
    Atom { argv: u32, atom: Atom },
    /// Outside the supported algebra (for example a comparison between two
    /// different argv slots, or a runtime PC/CC bound).
    Unsupported(String),
}

/// The condition under which control entering `item` proceeds into hole
/// `hole` (0 = then/body, 1 = else).
pub fn constraints_for(item: &ConcreteTransformation, hole: usize) -> HoleConstraint {
    let then_branch = hole == 0;
    match item.kind {
        TransformationKind::Fl => HoleConstraint::Unconstrained,
        TransformationKind::Ic => {
            let lhs = &item.params[0];
            let rhs = &item.params[1];
            match (lhs, rhs) {
                (ConcreteParam::ArgvInt(i), ConcreteParam::ArgvInt(j)) => {
                    if i == j {
                        static_outcome(true, then_branch)
                    } else {
                        HoleConstraint::Unsupported(
                            "comparison between two different argv slots".into(),
                        )
                    }
                }
                (ConcreteParam::ArgvInt(i), ConcreteParam::Literal(ParamValue::Int(v)))
                | (ConcreteParam::Literal(ParamValue::Int(v)), ConcreteParam::ArgvInt(i)) => {
                    int_atom(*i, *v, then_branch)
                }
                (
                    ConcreteParam::Literal(ParamValue::Int(a)),
                    ConcreteParam::Literal(ParamValue::Int(b)),
                ) => static_outcome(a == b, then_branch),
                _ => HoleConstraint::Unsupported("ill-typed IC operands".into()),
            }
        }
        TransformationKind::Sc => {
            let lhs = &item.params[0];
            let rhs = &item.params[1];
            match (lhs, rhs) {
                (ConcreteParam::ArgvString(i), ConcreteParam::ArgvString(j)) => {
                    if i == j {
                        static_outcome(true, then_branch)
                    } else {
                        HoleConstraint::Unsupported(
                            "comparison between two different argv slots".into(),
                        )
                    }
                }
                (ConcreteParam::ArgvString(i), ConcreteParam::Literal(ParamValue::Str(s)))
                | (ConcreteParam::Literal(ParamValue::Str(s)), ConcreteParam::ArgvString(i)) => {
                    str_atom(*i, s.clone(), then_branch)
                }
                (
                    ConcreteParam::Literal(ParamValue::Str(a)),
                    ConcreteParam::Literal(ParamValue::Str(b)),
                ) => static_outcome(a == b, then_branch),
                _ => HoleConstraint::Unsupported("ill-typed SC operands".into()),
            }
        }
        TransformationKind::Pc => {
            let n = match &item.params[1] {
                ConcreteParam::Literal(ParamValue::Int(n)) => *n,
                _ => return HoleConstraint::Unsupported("runtime palindrome bound".into()),
            };
            match &item.params[0] {
                ConcreteParam::ArgvString(i) => HoleConstraint::Atom {
                    argv: *i,
                    atom: Atom::PalindromeMinLen(n),
                },
                ConcreteParam::Literal(ParamValue::Str(s)) => {
                    static_outcome((s.len() as i64) >= n && is_palindrome(s), true)
                }
                _ => HoleConstraint::Unsupported("ill-typed PC operand".into()),
            }
        }
        TransformationKind::Cc => {
            let c = char_value(&item.params[1]);
            let n = match &item.params[2] {
                ConcreteParam::Literal(ParamValue::Int(n)) => *n,
                _ => return HoleConstraint::Unsupported("runtime character-count bound".into()),
            };
            match &item.params[0] {
                ConcreteParam::ArgvString(i) => HoleConstraint::Atom {
                    argv: *i,
                    atom: if then_branch {
                        Atom::CharCountEquals(c, n)
                    } else {
                        Atom::CharCountNotEquals(c, n)
                    },
                },
                ConcreteParam::Literal(ParamValue::Str(s)) => {
                    static_outcome(char_count(s, c) == n, then_branch)
                }
                _ => HoleConstraint::Unsupported("ill-typed CC operand".into()),
            }
        }
    }
}

fn static_outcome(predicate: bool, then_branch: bool) -> HoleConstraint {
    if predicate == then_branch {
        HoleConstraint::StaticallyTrue
    } else {
        HoleConstraint::StaticallyFalse
    }
}

fn int_atom(argv: u32, v: i64, then_branch: bool) -> HoleConstraint {
    HoleConstraint::Atom {
        argv,
        atom: if then_branch {
            Atom::IntEquals(v)
        } else {
            Atom::IntNotEquals(v)
        },
    }
}

fn str_atom(argv: u32, s: String, then_branch: bool) -> HoleConstraint {
    HoleConstraint::Atom {
        argv,
        atom: if then_branch {
            Atom::StrEquals(s)
        } else {
            Atom::StrNotEquals(s)
        },
    }
}

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error(
        "argv[{argv}]: cannot satisfy \"{wanted}\" (item {}) together with \"{conflicting}\" (item {})",
        .first_item + 1, .second_item + 1
    )]
    Conflict {
        argv: u32,
        first_item: usize,
        second_item: usize,
        wanted: Atom,
        conflicting: Atom,
    },
    #[error("item {}: bug-guarding branch is statically infeasible", .item + 1)]
    Infeasible { item: usize },
    #[error("item {}: {detail}", .item + 1)]
    Unsupported { item: usize, detail: String },
    #[error("derived input rejected by the interpreter: {0}")]
    Internal(String),
}

/// Ground-truth inputs for one PUT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedInputs {
    /// Reaches the `FAIL` hole.
    pub trigger: Vec<String>,
    /// Same arity, exits cleanly. `None` when the bug is reached on every
    /// input of that arity (no constrained atom anywhere on the path), in
    /// which case no such input exists.
    pub non_trigger: Option<Vec<String>>,
}

/// The hole each item routes through on the way to the bug: the `NEXT` hole
/// for every non-last item, the `FAIL` hole for the last.
pub fn trigger_path(seq: &InstantiatedSequence) -> Vec<(usize, usize)> {
    seq.items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let hole = item
                .holes
                .iter()
                .position(|h| {
                    matches!(h, HoleFiller::Next) || matches!(h, HoleFiller::Fail(_))
                })
                .expect("validated sequence has a NEXT or FAIL hole per item");
            (i, hole)
        })
        .collect()
}

/// Derives an input reaching hole `hole` of item `item_idx`: the path
/// constraints of every enclosing item, plus the requested hole's own
/// condition. Unconstrained slots stay `""`.
pub fn derive_leaf_input(
    seq: &InstantiatedSequence,
    item_idx: usize,
    hole: usize,
) -> Result<Vec<String>, DeriveError> {
    let path = trigger_path(seq);
    let mut constraints: Vec<(usize, HoleConstraint)> = Vec::new();
    for &(i, path_hole) in path.iter().take(item_idx) {
        constraints.push((i, constraints_for(&seq.items[i], path_hole)));
    }
    constraints.push((item_idx, constraints_for(&seq.items[item_idx], hole)));

    let mut per_slot: Vec<Vec<(usize, Atom)>> = vec![Vec::new(); seq.argv_arity as usize];
    for (i, constraint) in constraints {
        match constraint {
            HoleConstraint::Unconstrained | HoleConstraint::StaticallyTrue => {}
            HoleConstraint::StaticallyFalse => return Err(DeriveError::Infeasible { item: i }),
            HoleConstraint::Unsupported(detail) => {
                return Err(DeriveError::Unsupported { item: i, detail })
            }
            HoleConstraint::Atom { argv, atom } => {
                per_slot[argv as usize - 1].push((i, atom));
            }
        }
    }
    per_slot
        .iter()
        .enumerate()
        .map(|(slot, atoms)| solve_slot(slot as u32 + 1, atoms))
        .collect()
}

/// Constructive witness for a conjunction of atoms on one argv slot.
/// Candidates are built by simple rules and checked against every atom; a
/// combination no rule covers is reported as a conflict rather than solved
/// generally.
fn solve_slot(argv: u32, atoms: &[(usize, Atom)]) -> Result<String, DeriveError> {
    if atoms.is_empty() {
        return Ok(String::new());
    }

    // Directly contradictory positive pairs give the clearest reports.
    for (a, (item_a, atom_a)) in atoms.iter().enumerate() {
        for (item_b, atom_b) in atoms.iter().skip(a + 1) {
            let clash = match (atom_a, atom_b) {
                (Atom::IntEquals(x), Atom::IntEquals(y)) => x != y,
                (Atom::StrEquals(x), Atom::StrEquals(y)) => x != y,
                (Atom::IntEquals(x), Atom::IntNotEquals(y))
                | (Atom::IntNotEquals(y), Atom::IntEquals(x)) => x == y,
                (Atom::StrEquals(x), Atom::StrNotEquals(y))
                | (Atom::StrNotEquals(y), Atom::StrEquals(x)) => x == y,
                (Atom::CharCountEquals(c, x), Atom::CharCountEquals(d, y)) => c == d && x != y,
                (Atom::CharCountEquals(c, x), Atom::CharCountNotEquals(d, y))
                | (Atom::CharCountNotEquals(d, y), Atom::CharCountEquals(c, x)) => {
                    c == d && x == y
                }
                _ => false,
            };
            if clash {
                return Err(DeriveError::Conflict {
                    argv,
                    first_item: *item_a,
                    second_item: *item_b,
                    wanted: atom_a.clone(),
                    conflicting: atom_b.clone(),
                });
            }
        }
    }

    let mut candidates: Vec<String> = Vec::new();
    if let Some((_, Atom::StrEquals(s))) = atoms
        .iter()
        .find(|(_, a)| matches!(a, Atom::StrEquals(_)))
    {
        candidates.push(s.clone());
    } else if let Some((_, Atom::IntEquals(v))) = atoms
        .iter()
        .find(|(_, a)| matches!(a, Atom::IntEquals(_)))
    {
        candidates.push(v.to_string());
    } else {
        let mut count_eqs: Vec<(char, i64)> = Vec::new();
        for (_, atom) in atoms {
            if let Atom::CharCountEquals(c, n) = atom {
                if !count_eqs.iter().any(|(d, _)| d == c) {
                    count_eqs.push((*c, *n));
                }
            }
        }
        count_eqs.sort();
        let pal_min = atoms
            .iter()
            .filter_map(|(_, a)| match a {
                Atom::PalindromeMinLen(n) => Some(*n),
                _ => None,
            })
            .max();
        if !count_eqs.is_empty() {
            if let [(c, n)] = count_eqs[..] {
                // A single repeated character is trivially a palindrome, so
                // one count atom composes with a palindrome bound whenever
                // the count is long enough.
                if n >= 0 {
                    candidates.push(c.to_string().repeat(n as usize));
                }
            } else if pal_min.is_none() {
                let mut s = String::new();
                for (c, n) in &count_eqs {
                    if *n > 0 {
                        s.push_str(&c.to_string().repeat(*n as usize));
                    }
                }
                candidates.push(s);
            }
        } else if let Some(n) = pal_min {
            let len = n.max(0) as usize;
            for base in ['a', 'b', 'c'] {
                candidates.push(base.to_string().repeat(len));
            }
        } else {
            // Only negative atoms: try the empty string, then values clear
            // of every forbidden one.
            candidates.push(String::new());
            let int_neqs: Vec<i64> = atoms
                .iter()
                .filter_map(|(_, a)| match a {
                    Atom::IntNotEquals(v) => Some(*v),
                    _ => None,
                })
                .collect();
            if let Some(max) = int_neqs.iter().max() {
                if *max < i64::MAX {
                    candidates.push((max + 1).to_string());
                }
            }
            if let Some(longest) = atoms
                .iter()
                .filter_map(|(_, a)| match a {
                    Atom::StrNotEquals(s) => Some(s),
                    _ => None,
                })
                .max_by_key(|s| s.len())
            {
                candidates.push(format!("{longest}x"));
            }
        }
    }

    for candidate in candidates {
        if atoms.iter().all(|(_, a)| atom_holds(a, &candidate)) {
            return Ok(candidate);
        }
    }

    // No rule produced a witness: report the first atom pair involved.
    let (first_item, wanted) = atoms[0].clone();
    let (second_item, conflicting) = atoms.last().cloned().unwrap();
    Err(DeriveError::Conflict {
        argv,
        first_item,
        second_item,
        wanted,
        conflicting,
    })
}

/// Witness for the negation of a path atom, or `None` when the negation is
/// unsatisfiable (only possible for count atoms with a negative bound).
fn negation_witness(atom: &Atom) -> Option<String> {
    match atom {
        Atom::IntEquals(v) => Some(v.wrapping_add(1).to_string()),
        Atom::IntNotEquals(v) => Some(v.to_string()),
        Atom::StrEquals(s) => Some(format!("{s}x")),
        Atom::StrNotEquals(s) => Some(s.clone()),
        Atom::PalindromeMinLen(n) => {
            let mut s = String::from("ab");
            while (s.len() as i64) < n + 1 {
                s.push('b');
            }
            Some(s)
        }
        Atom::CharCountEquals(c, n) => {
            if *n >= 1 {
                Some(String::new())
            } else if *n == 0 {
                Some(c.to_string())
            } else {
                Some(String::new()) // count is never negative
            }
        }
        Atom::CharCountNotEquals(c, n) => {
            if *n >= 0 {
                Some(c.to_string().repeat(*n as usize))
            } else {
                None // no string has a negative count
            }
        }
    }
}

/// Derives the triggering input and, when one exists, a clean input of the
/// same arity. The non-trigger flips the outermost constrained atom on the
/// path to its negation witness and leaves every other slot empty;
/// execution then diverges at that transformation into a skip leaf.
pub fn derive_inputs(seq: &InstantiatedSequence) -> Result<DerivedInputs, DeriveError> {
    let path = trigger_path(seq);
    let (last_item, fail_hole) = *path.last().expect("non-empty sequence");
    let trigger = derive_leaf_input(seq, last_item, fail_hole)?;
    if interpret(seq, &trigger) != Outcome::FailReached {
        return Err(DeriveError::Internal(format!(
            "trigger {trigger:?} does not reach the bug"
        )));
    }

    let mut non_trigger = None;
    for &(i, hole) in &path {
        if let HoleConstraint::Atom { argv, atom } = constraints_for(&seq.items[i], hole) {
            if let Some(witness) = negation_witness(&atom) {
                let mut vector = vec![String::new(); seq.argv_arity as usize];
                vector[argv as usize - 1] = witness;
                if interpret(seq, &vector) != Outcome::CleanExit {
                    return Err(DeriveError::Internal(format!(
                        "non-trigger {vector:?} does not exit cleanly"
                    )));
                }
                non_trigger = Some(vector);
                break;
            }
        }
    }
    Ok(DerivedInputs {
        trigger,
        non_trigger,
    })
}

/// Enumeration limits for [`brute_force_check`].
#[derive(Debug, Clone)]
pub struct BruteForceBudget {
    /// Alphabet for string-valued slots (at most 4 symbols).
    pub alphabet: Vec<char>,
    /// Maximum string length per slot (at most 4).
    pub max_len: usize,
    /// Inclusive window of integers enumerated for integer-parsed slots.
    pub int_window: (i64, i64),
    /// Hard cap on the number of argv vectors.
    pub max_vectors: u64,
}

impl Default for BruteForceBudget {
    fn default() -> Self {
        BruteForceBudget {
            alphabet: vec!['a', 'b'],
            max_len: 3,
            int_window: (-1, 3),
            max_vectors: 2_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("combinatorial budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Derive(#[from] DeriveError),
}

/// Outcome of exhaustively comparing the interpreter with the trigger-path
/// constraint characterization on every vector of a finite universe.
#[derive(Debug, Clone)]
pub struct BruteForceReport {
    pub vectors_checked: u64,
    /// Vectors on which the interpreter reached the bug.
    pub failing: Vec<Vec<String>>,
    /// True when the failing set equals the constraint-satisfying set and
    /// the derived trigger (when derivable) reaches the bug.
    pub confirmed: bool,
    /// First disagreeing vector, with the interpreter verdict.
    pub counterexample: Option<(Vec<String>, Outcome)>,
}

/// Enumerates every argv vector of the budgeted universe and checks that the
/// set of bug-reaching vectors is exactly the set satisfying the
/// trigger-path constraints.
pub fn brute_force_check(
    seq: &InstantiatedSequence,
    budget: &BruteForceBudget,
) -> Result<BruteForceReport, BruteForceError> {
    if seq.argv_arity > 3 {
        return Err(BruteForceError::BudgetExceeded(format!(
            "argv arity {} exceeds 3",
            seq.argv_arity
        )));
    }
    if budget.alphabet.len() > 4 || budget.max_len > 4 {
        return Err(BruteForceError::BudgetExceeded(
            "alphabet is limited to 4 symbols and strings to length 4".into(),
        ));
    }

    let arity = seq.argv_arity as usize;
    let mut used_str = vec![false; arity];
    let mut used_int = vec![false; arity];
    for item in &seq.items {
        for param in &item.params {
            match param {
                ConcreteParam::ArgvString(i) => used_str[*i as usize - 1] = true,
                ConcreteParam::ArgvInt(i) => used_int[*i as usize - 1] = true,
                ConcreteParam::Literal(_) => {}
            }
        }
    }

    let mut universes: Vec<Vec<String>> = Vec::with_capacity(arity);
    for slot in 0..arity {
        let mut universe: Vec<String> = Vec::new();
        if used_str[slot] {
            let mut frontier = vec![String::new()];
            universe.push(String::new());
            for _ in 0..budget.max_len {
                let mut next = Vec::new();
                for prefix in &frontier {
                    for &c in &budget.alphabet {
                        let mut s = prefix.clone();
                        s.push(c);
                        universe.push(s.clone());
                        next.push(s);
                    }
                }
                frontier = next;
            }
        }
        if used_int[slot] {
            for v in budget.int_window.0..=budget.int_window.1 {
                let s = v.to_string();
                if !universe.contains(&s) {
                    universe.push(s);
                }
            }
        }
        if universe.is_empty() {
            universe.push(String::new());
        }
        universes.push(universe);
    }

    let total: u64 = universes
        .iter()
        .try_fold(1u64, |acc, u| acc.checked_mul(u.len() as u64))
        .ok_or_else(|| BruteForceError::BudgetExceeded("vector count overflow".into()))?;
    if total > budget.max_vectors {
        return Err(BruteForceError::BudgetExceeded(format!(
            "{total} vectors exceed the cap of {}",
            budget.max_vectors
        )));
    }

    // Constraint characterization of the bug-reaching inputs.
    let path = trigger_path(seq);
    let mut path_constraints = Vec::new();
    let mut feasible = true;
    for &(i, hole) in &path {
        match constraints_for(&seq.items[i], hole) {
            HoleConstraint::Unconstrained | HoleConstraint::StaticallyTrue => {}
            HoleConstraint::StaticallyFalse => feasible = false,
            HoleConstraint::Unsupported(detail) => {
                return Err(BruteForceError::Derive(DeriveError::Unsupported {
                    item: i,
                    detail,
                }))
            }
            HoleConstraint::Atom { argv, atom } => path_constraints.push((argv, atom)),
        }
    }

    let mut report = BruteForceReport {
        vectors_checked: 0,
        failing: Vec::new(),
        confirmed: true,
        counterexample: None,
    };
    let mut odometer = vec![0usize; arity];
    loop {
        let vector: Vec<String> = odometer
            .iter()
            .enumerate()
            .map(|(slot, &i)| universes[slot][i].clone())
            .collect();
        report.vectors_checked += 1;
        let outcome = interpret(seq, &vector);
        let interp_fails = outcome == Outcome::FailReached;
        let constraints_hold = feasible
            && path_constraints
                .iter()
                .all(|(argv, atom)| atom_holds(atom, &vector[*argv as usize - 1]));
        if interp_fails != constraints_hold {
            report.confirmed = false;
            report.counterexample = Some((vector.clone(), outcome));
            break;
        }
        if interp_fails {
            report.failing.push(vector);
        }

        // Advance the odometer; empty arity means the single empty vector.
        let mut digit = 0;
        loop {
            if digit == arity {
                if report.confirmed {
                    match derive_inputs(seq) {
                        Ok(inputs) => {
                            if interpret(seq, &inputs.trigger) != Outcome::FailReached {
                                report.confirmed = false;
                            }
                        }
                        Err(DeriveError::Conflict { .. }) | Err(DeriveError::Infeasible { .. }) => {
                            // Infeasible bug: enumeration must have found
                            // nothing either.
                            if !report.failing.is_empty() {
                                report.confirmed = false;
                            }
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                return Ok(report);
            }
            odometer[digit] += 1;
            if odometer[digit] < universes[digit].len() {
                break;
            }
            odometer[digit] = 0;
            digit += 1;
        }
    }
    Ok(report)
}

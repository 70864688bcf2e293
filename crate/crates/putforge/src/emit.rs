//! Rendering of an [`InstantiatedSequence`] as a complete, warning-free C
//! program: nested template expansion wrapped in a fixed main-function
//! scaffold with an argc guard.
//!
//! Emission is a pure function of its inputs; calling it twice yields
//! identical bytes. Every hole body is wrapped in braces so that snippet
//! text cannot change the surrounding control flow.

use thiserror::Error;

use crate::model::{
    BugKind, ConcreteParam, ConcreteTransformation, HoleFiller, InstantiatedSequence, ParamValue,
    TransformationKind,
};

/// Options for [`emit`]. The include set and the argc guard are fixed and
/// cannot be disabled.
#[derive(Debug, Clone, Default)]
pub struct EmitOptions {
    /// Replaces the bug kind of the `FAIL` hole at render time.
    pub bug_override: Option<BugKind>,
}

/// Result of emission: the program text plus the exact bug location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedSource {
    pub source: String,
    /// 1-based line of the bug statement.
    pub bug_line: u32,
    /// Effective bug kind after any override.
    pub bug_kind: BugKind,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("item {item}: PC bound must be at least 1, got {bound}")]
    PcBoundNonPositive { item: usize, bound: i64 },
    #[error("sequence has no FAIL hole")]
    MissingFail,
}

/// Definition of the loop body worker: a file-scope volatile counter
/// increment, so FL loops survive optimization and produce no warnings.
pub fn do_something_definition() -> &'static str {
    "static volatile long long do_something_calls = 0;\n\nstatic void do_something(void) {\n    do_something_calls++;\n}\n"
}

const INDENT: &str = "    ";
// Indentation stops growing past this depth so thousand-deep chains do not
// blow the source up quadratically.
const MAX_INDENT_DEPTH: usize = 32;

struct Emitter {
    lines: Vec<String>,
    depth: usize,
    bug_line: Option<u32>,
    bug_kind: Option<BugKind>,
}

impl Emitter {
    fn push(&mut self, text: &str) {
        let depth = self.depth.min(MAX_INDENT_DEPTH);
        let mut line = INDENT.repeat(depth);
        line.push_str(text);
        self.lines.push(line);
    }
}

/// Renders the full program. The sequence must be well-formed (as produced
/// by instantiation); literal PC bounds below 1 are rejected.
pub fn emit(seq: &InstantiatedSequence, opts: &EmitOptions) -> Result<EmittedSource, EmitError> {
    for (i, item) in seq.items.iter().enumerate() {
        if item.kind == TransformationKind::Pc {
            if let ConcreteParam::Literal(ParamValue::Int(n)) = item.params[1] {
                if n < 1 {
                    return Err(EmitError::PcBoundNonPositive { item: i, bound: n });
                }
            }
        }
    }

    let has_loop_worker = seq
        .items
        .iter()
        .any(|item| item.kind == TransformationKind::Fl);

    let mut em = Emitter {
        lines: Vec::new(),
        depth: 0,
        bug_line: None,
        bug_kind: None,
    };
    em.push("#include <stdio.h>");
    em.push("#include <stdlib.h>");
    em.push("#include <string.h>");
    em.push("#include <assert.h>");
    em.push("");
    if has_loop_worker {
        for line in do_something_definition().lines() {
            em.push(line);
        }
        em.push("");
    }
    em.push("int main(int argc, char** argv) {");
    em.depth += 1;
    em.push(&format!("if (argc < {}) return 0;", seq.argv_arity + 1));
    render_item(&mut em, &seq.items, 0, opts);
    em.depth -= 1;
    em.push("}");

    let bug_line = em.bug_line.ok_or(EmitError::MissingFail)?;
    let bug_kind = em.bug_kind.expect("bug kind recorded with bug line");
    let mut source = em.lines.join("\n");
    source.push('\n');
    Ok(EmittedSource {
        source,
        bug_line,
        bug_kind,
    })
}

fn render_item(
    em: &mut Emitter,
    items: &[ConcreteTransformation],
    idx: usize,
    opts: &EmitOptions,
) {
    let item = &items[idx];
    let sfx = item.suffix;
    match item.kind {
        TransformationKind::Ic => {
            em.push(&format!(
                "if ({} == {}) {{",
                int_expr(&item.params[0]),
                int_expr(&item.params[1])
            ));
            render_hole(em, items, idx, 0, opts);
            em.push("} else {");
            render_hole(em, items, idx, 1, opts);
            em.push("}");
        }
        TransformationKind::Sc => {
            em.push(&format!(
                "if (strcmp({}, {}) == 0) {{",
                str_expr(&item.params[0]),
                str_expr(&item.params[1])
            ));
            render_hole(em, items, idx, 0, opts);
            em.push("} else {");
            render_hole(em, items, idx, 1, opts);
            em.push("}");
        }
        TransformationKind::Fl => {
            em.push(&format!(
                "for (long long j_{sfx} = 0; j_{sfx} < {}; j_{sfx}++) {{ do_something(); }}",
                int_expr(&item.params[0])
            ));
            // B follows the loop at the same level.
            render_hole_flat(em, items, idx, 0, opts);
        }
        TransformationKind::Pc => {
            let s = str_expr(&item.params[0]);
            let n = int_expr(&item.params[1]);
            em.push(&format!("if ((long long)strlen({s}) < {n}) exit(0);"));
            // Signed counters: the unsigned `h >= l` form of the template
            // wraps around when `h` underflows at 0.
            em.push(&format!(
                "long long l_{sfx} = 0, h_{sfx} = (long long)strlen({s}) - 1;"
            ));
            em.push(&format!(
                "while (h_{sfx} >= l_{sfx}) {{ if ({s}[h_{sfx}] != {s}[l_{sfx}]) exit(0); h_{sfx}--; l_{sfx}++; }}"
            ));
            render_hole_flat(em, items, idx, 0, opts);
        }
        TransformationKind::Cc => {
            let s = str_expr(&item.params[0]);
            let c = char_expr(&item.params[1]);
            let n = int_expr(&item.params[2]);
            em.push(&format!("int count_{sfx} = 0;"));
            em.push(&format!(
                "for (size_t k_{sfx} = 0; k_{sfx} < strlen({s}); k_{sfx}++) {{ if ({s}[k_{sfx}] == {c}) count_{sfx}++; }}"
            ));
            em.push(&format!("if (count_{sfx} == {n}) {{"));
            render_hole(em, items, idx, 0, opts);
            em.push("} else {");
            render_hole(em, items, idx, 1, opts);
            em.push("}");
        }
    }
}

fn render_hole(
    em: &mut Emitter,
    items: &[ConcreteTransformation],
    idx: usize,
    hole: usize,
    opts: &EmitOptions,
) {
    em.depth += 1;
    render_filler(em, items, idx, hole, opts);
    em.depth -= 1;
}

/// Renders a body hole that follows its construct at the same depth (FL, PC).
fn render_hole_flat(
    em: &mut Emitter,
    items: &[ConcreteTransformation],
    idx: usize,
    hole: usize,
    opts: &EmitOptions,
) {
    render_filler(em, items, idx, hole, opts);
}

fn render_filler(
    em: &mut Emitter,
    items: &[ConcreteTransformation],
    idx: usize,
    hole: usize,
    opts: &EmitOptions,
) {
    match &items[idx].holes[hole] {
        HoleFiller::Next => render_item(em, items, idx + 1, opts),
        HoleFiller::Skip => em.push(";"),
        HoleFiller::Snippet(text) => {
            for line in text.lines() {
                em.push(line.trim());
            }
        }
        HoleFiller::Fail(kind) => {
            let kind = opts.bug_override.unwrap_or(*kind);
            let sfx = items[idx].suffix;
            let stmt = match kind {
                BugKind::Assert => "assert(0 == 1);".to_string(),
                // The index goes through a volatile so no compiler can prove
                // the access out of bounds at build time; the write itself
                // is the seeded bug. The trailing (void) use keeps gcc's
                // set-but-not-used check quiet without reading any element.
                BugKind::OutOfBounds => format!(
                    "{{ volatile int a_{sfx}[3]; volatile int i_{sfx} = 4; a_{sfx}[i_{sfx}] = 0; (void)a_{sfx}; }}"
                ),
            };
            em.push(&stmt);
            em.bug_line = Some(em.lines.len() as u32);
            em.bug_kind = Some(kind);
        }
    }
}

fn int_expr(param: &ConcreteParam) -> String {
    match param {
        ConcreteParam::Literal(ParamValue::Int(v)) => {
            if *v == i64::MIN {
                // No valid decimal literal exists for the minimum value.
                "(-9223372036854775807LL - 1)".to_string()
            } else {
                v.to_string()
            }
        }
        ConcreteParam::ArgvInt(i) => format!("atoll(argv[{i}])"),
        other => unreachable!("int slot holds {other:?}"),
    }
}

fn str_expr(param: &ConcreteParam) -> String {
    match param {
        ConcreteParam::Literal(ParamValue::Str(s)) => format!("\"{s}\""),
        ConcreteParam::ArgvString(i) => format!("argv[{i}]"),
        other => unreachable!("string slot holds {other:?}"),
    }
}

fn char_expr(param: &ConcreteParam) -> String {
    match param {
        ConcreteParam::Literal(ParamValue::Char('\'')) => "'\\''".to_string(),
        ConcreteParam::Literal(ParamValue::Char(c)) => format!("'{c}'"),
        other => unreachable!("char slot holds {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl;
    use crate::instantiate::{instantiate, ArgvPolicy, Ranges, Rng};

    fn emit_line(text: &str) -> EmittedSource {
        let seq = dsl::parse(text).unwrap();
        let mut rng = Rng::new(7);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        emit(&inst, &EmitOptions::default()).unwrap()
    }

    #[test]
    fn eq1_matches_the_reference_structure() {
        let emitted = emit_line(
            r#"SC(argv[2], "hello", SKIP, NEXT) IC(atoll(argv[1]), 69, FAIL, { return 0; })"#,
        );
        let expected = "\
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <assert.h>

int main(int argc, char** argv) {
    if (argc < 3) return 0;
    if (strcmp(argv[2], \"hello\") == 0) {
        ;
    } else {
        if (atoll(argv[1]) == 69) {
            assert(0 == 1);
        } else {
            return 0;
        }
    }
}
";
        assert_eq!(emitted.source, expected);
        assert_eq!(emitted.bug_line, 12);
    }

    #[test]
    fn bug_line_points_at_the_fail_statement() {
        let emitted = emit_line("FL(3, NEXT) CC(argv[1], 'q', 2, FAIL, SKIP)");
        let line = emitted
            .source
            .lines()
            .nth(emitted.bug_line as usize - 1)
            .unwrap();
        assert!(line.contains("assert(0 == 1);"), "{line}");
    }

    #[test]
    fn zero_iteration_loop_still_reaches_the_bug_site() {
        let emitted = emit_line("FL(0, FAIL)");
        let loop_line = emitted
            .source
            .lines()
            .position(|l| l.contains("for (long long j_1"))
            .unwrap();
        // B follows the loop: the bug is on the next line, outside the body.
        assert_eq!(emitted.bug_line as usize, loop_line + 2);
        assert!(emitted.source.contains("j_1 < 0"));
    }

    #[test]
    fn exactly_one_fail_site() {
        let emitted = emit_line("IC(?, ?, NEXT, SKIP) IC(?, ?, NEXT, SKIP) IC(?, ?, FAIL, SKIP)");
        let count = emitted.source.matches("assert(0 == 1);").count();
        assert_eq!(count, 1);
    }

    #[test]
    fn oob_bug_is_a_single_line_with_fresh_names() {
        let emitted = emit_line("PC(argv[1], 3, FAIL_OOB)");
        assert_eq!(emitted.bug_kind, BugKind::OutOfBounds);
        let line = emitted
            .source
            .lines()
            .nth(emitted.bug_line as usize - 1)
            .unwrap();
        assert!(line.contains("volatile int a_1[3]"), "{line}");
        assert!(line.contains("a_1[i_1] = 0;"), "{line}");
    }

    #[test]
    fn bug_override_replaces_the_kind() {
        let seq = dsl::parse("FL(2, FAIL)").unwrap();
        let mut rng = Rng::new(0);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        let emitted = emit(
            &inst,
            &EmitOptions {
                bug_override: Some(BugKind::OutOfBounds),
            },
        )
        .unwrap();
        assert_eq!(emitted.bug_kind, BugKind::OutOfBounds);
        assert!(!emitted.source.contains("assert(0 == 1)"));
    }

    #[test]
    fn worker_definition_only_with_fl() {
        let with = emit_line("FL(2, FAIL)");
        assert!(with.source.contains("static void do_something(void)"));
        let without = emit_line("IC(?, ?, FAIL, SKIP)");
        assert!(!without.source.contains("do_something"));
        assert_eq!(
            with.source.matches("static void do_something").count(),
            1
        );
    }

    #[test]
    fn emission_is_idempotent() {
        let seq = dsl::parse("CC(argv[1], 'x', 3, NEXT, SKIP) PC(argv[2], 4, FAIL)").unwrap();
        let mut rng = Rng::new(11);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        let a = emit(&inst, &EmitOptions::default()).unwrap();
        let b = emit(&inst, &EmitOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    /// Scans declaration sites (`<type> <name> =` and `, <name> =`) and
    /// checks no identifier is declared twice.
    fn declared_names(source: &str) -> Vec<String> {
        let mut names = Vec::new();
        for line in source.lines() {
            for marker in ["long long ", "int ", "size_t ", ", "] {
                let mut rest = line;
                while let Some(pos) = rest.find(marker) {
                    rest = &rest[pos + marker.len()..];
                    let name: String = rest
                        .chars()
                        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                        .collect();
                    let after = &rest[name.len()..];
                    if !name.is_empty() && (after.starts_with(" =") || after.starts_with("[3]")) {
                        names.push(name);
                    }
                }
            }
        }
        names
    }

    #[test]
    fn repeated_kinds_never_redeclare_a_name() {
        let emitted = emit_line(
            "CC(?, ?, ?, NEXT, SKIP) CC(?, ?, ?, NEXT, SKIP) PC(?, ?, NEXT) PC(?, ?, FAIL)",
        );
        let names = declared_names(&emitted.source);
        assert!(names.iter().any(|n| n.starts_with("count_")));
        assert!(names.iter().any(|n| n.starts_with("h_")));
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            assert!(seen.insert(name), "redeclared {name}");
        }
    }

    #[test]
    fn pc_bound_below_one_is_rejected() {
        let seq = dsl::parse("PC(argv[1], 0, FAIL)").unwrap();
        let mut rng = Rng::new(0);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        assert!(matches!(
            emit(&inst, &EmitOptions::default()),
            Err(EmitError::PcBoundNonPositive { item: 0, bound: 0 })
        ));
    }

    #[test]
    fn quote_char_is_escaped_in_c() {
        let emitted = emit_line("CC(argv[1], ''', 2, FAIL, SKIP)");
        assert!(emitted.source.contains("== '\\''"));
    }

    #[test]
    fn indentation_is_clamped_for_deep_chains() {
        let text = (0..60)
            .map(|i| {
                if i == 59 {
                    "IC(?, ?, FAIL, SKIP)".to_string()
                } else {
                    "IC(?, ?, NEXT, SKIP)".to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        let emitted = emit_line(&text);
        let max_lead = emitted
            .source
            .lines()
            .map(|l| l.len() - l.trim_start().len())
            .max()
            .unwrap();
        assert_eq!(max_lead, MAX_INDENT_DEPTH * INDENT.len());
    }
}

//! Textual transformation-sequence language.
//!
//! Grammar (whitespace-insensitive, `#` starts a comment outside literals):
//!
//! ```text
//! sequence    := application+
//! application := KIND '(' arg (',' arg)* ')'
//! arg         := INT | CHAR | STRING
//!              | 'argv[' INT ']' | 'atoll(argv[' INT '])'
//!              | '?' | 'NEXT' | 'FAIL' | 'FAIL_OOB' | 'SKIP'
//!              | '{' raw-C '}'
//! ```
//!
//! `raw-C` is brace-balanced opaque statement text. For each application the
//! leading arguments fill the kind's parameter slots and the trailing ones
//! its hole slots, in catalogue order (`T` before `E` for two-hole kinds).
//! `?` marks a parameter to be drawn at instantiation time; `FAIL_OOB`
//! selects the out-of-bounds bug instead of the default assertion failure.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    arity, is_char_literal, is_string_literal_char, join_violations, validate, BugKind,
    HoleFiller, Param, ParamValue, SequenceSpec, TransformationSpec, Violation,
};

#[derive(Debug, Error)]
pub enum DslError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid sequence: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("cannot print an invalid sequence: {}", join_violations(.0))]
    Unprintable(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    CharLit(char),
    StrLit(String),
    Snippet(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Question,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Int(v) => format!("integer {v}"),
            Token::CharLit(c) => format!("char literal {c:?}"),
            Token::StrLit(_) => "string literal".into(),
            Token::Snippet(_) => "snippet".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Comma => "`,`".into(),
            Token::Question => "`?`".into(),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

type Spanned = (Token, usize, usize);

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, DslError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let token = match c {
                '(' => {
                    self.bump();
                    Token::LParen
                }
                ')' => {
                    self.bump();
                    Token::RParen
                }
                '[' => {
                    self.bump();
                    Token::LBracket
                }
                ']' => {
                    self.bump();
                    Token::RBracket
                }
                ',' => {
                    self.bump();
                    Token::Comma
                }
                '?' => {
                    self.bump();
                    Token::Question
                }
                '{' => self.lex_snippet()?,
                '"' => self.lex_string()?,
                '\'' => self.lex_char()?,
                '-' => self.lex_int()?,
                c if c.is_ascii_digit() => self.lex_int()?,
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            ident.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Token::Ident(ident)
                }
                other => return Err(self.error(format!("unexpected character {other:?}"))),
            };
            out.push((token, line, col));
        }
        Ok(out)
    }

    fn lex_int(&mut self) -> Result<Token, DslError> {
        let mut text = String::new();
        if self.chars.peek() == Some(&'-') {
            text.push('-');
            self.bump();
        }
        if !matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
            return Err(self.error("expected digits after `-`"));
        }
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        text.parse::<i64>()
            .map(Token::Int)
            .map_err(|_| self.error(format!("integer literal `{text}` out of 64-bit range")))
    }

    fn lex_string(&mut self) -> Result<Token, DslError> {
        self.bump(); // opening quote
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(Token::StrLit(text)),
                Some(c) if is_string_literal_char(c) => text.push(c),
                Some(c) => {
                    return Err(self.error(format!("inadmissible character {c:?} in string")))
                }
                None => return Err(self.error("unterminated string literal")),
            }
        }
    }

    fn lex_char(&mut self) -> Result<Token, DslError> {
        self.bump(); // opening quote
        let c = match self.bump() {
            Some(c) if is_char_literal(c) => c,
            Some(c) => return Err(self.error(format!("inadmissible char literal {c:?}"))),
            None => return Err(self.error("unterminated char literal")),
        };
        match self.bump() {
            Some('\'') => Ok(Token::CharLit(c)),
            _ => Err(self.error("char literal must contain exactly one character")),
        }
    }

    fn lex_snippet(&mut self) -> Result<Token, DslError> {
        self.bump(); // opening brace
        let mut depth = 1usize;
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('{') => {
                    depth += 1;
                    text.push('{');
                }
                Some('}') => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(Token::Snippet(text.trim().to_string()));
                    }
                    text.push('}');
                }
                Some(c) => text.push(c),
                None => return Err(self.error("unterminated snippet (missing `}`)")),
            }
        }
    }
}

/// An argument as written, before slot assignment.
enum Arg {
    Param(Param),
    Hole(HoleFiller),
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, message: impl Into<String>) -> DslError {
        let (line, col) = self
            .tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1));
        DslError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Token) -> Result<(), DslError> {
        match self.next() {
            Some((t, _, _)) if t == want => Ok(()),
            Some((t, line, col)) => Err(DslError::Syntax {
                line,
                col,
                message: format!("expected {}, found {}", want.describe(), t.describe()),
            }),
            None => Err(self.err_at(format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn parse_sequence(&mut self) -> Result<SequenceSpec, DslError> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            items.push(self.parse_application()?);
        }
        if items.is_empty() {
            return Err(self.err_at("expected at least one transformation"));
        }
        Ok(SequenceSpec { items })
    }

    fn parse_application(&mut self) -> Result<TransformationSpec, DslError> {
        let (kind, line, col) = match self.next() {
            Some((Token::Ident(name), line, col)) => match name.parse() {
                Ok(kind) => (kind, line, col),
                Err(()) => {
                    return Err(DslError::Syntax {
                        line,
                        col,
                        message: format!("unknown transformation kind `{name}`"),
                    })
                }
            },
            Some((t, line, col)) => {
                return Err(DslError::Syntax {
                    line,
                    col,
                    message: format!("expected transformation kind, found {}", t.describe()),
                })
            }
            None => return Err(self.err_at("expected transformation kind")),
        };
        self.expect(Token::LParen)?;
        let mut args = vec![self.parse_arg()?];
        loop {
            match self.next() {
                Some((Token::Comma, _, _)) => args.push(self.parse_arg()?),
                Some((Token::RParen, _, _)) => break,
                Some((t, l, c)) => {
                    return Err(DslError::Syntax {
                        line: l,
                        col: c,
                        message: format!("expected `,` or `)`, found {}", t.describe()),
                    })
                }
                None => return Err(self.err_at("unterminated argument list")),
            }
        }
        let (ptypes, htypes) = arity(kind);
        let expected = ptypes.len() + htypes.len();
        if args.len() != expected {
            return Err(DslError::Syntax {
                line,
                col,
                message: format!(
                    "{kind} takes {expected} arguments ({} parameters + {} holes), got {}",
                    ptypes.len(),
                    htypes.len(),
                    args.len()
                ),
            });
        }
        let mut params = Vec::with_capacity(ptypes.len());
        let mut holes = Vec::with_capacity(htypes.len());
        for (slot, arg) in args.into_iter().enumerate() {
            if slot < ptypes.len() {
                match arg {
                    Arg::Param(p) => params.push(p),
                    Arg::Hole(h) => {
                        return Err(DslError::Syntax {
                            line,
                            col,
                            message: format!(
                                "parameter slot {} of {kind} cannot hold a hole argument ({})",
                                kind.slot_name(slot),
                                describe_hole(&h),
                            ),
                        })
                    }
                }
            } else {
                match arg {
                    Arg::Hole(h) => holes.push(h),
                    Arg::Param(_) => {
                        return Err(DslError::Syntax {
                            line,
                            col,
                            message: format!(
                                "hole slot {} of {kind} needs NEXT, FAIL, FAIL_OOB, SKIP, or a snippet",
                                slot - ptypes.len() + 1
                            ),
                        })
                    }
                }
            }
        }
        Ok(TransformationSpec {
            kind,
            params,
            holes,
        })
    }

    fn parse_arg(&mut self) -> Result<Arg, DslError> {
        match self.next() {
            Some((Token::Int(v), _, _)) => Ok(Arg::Param(Param::Literal(ParamValue::Int(v)))),
            Some((Token::CharLit(c), _, _)) => Ok(Arg::Param(Param::Literal(ParamValue::Char(c)))),
            Some((Token::StrLit(s), _, _)) => Ok(Arg::Param(Param::Literal(ParamValue::Str(s)))),
            Some((Token::Question, _, _)) => Ok(Arg::Param(Param::Fresh)),
            Some((Token::Snippet(text), _, _)) => Ok(Arg::Hole(HoleFiller::Snippet(text))),
            Some((Token::Ident(name), line, col)) => match name.as_str() {
                "NEXT" => Ok(Arg::Hole(HoleFiller::Next)),
                "FAIL" => Ok(Arg::Hole(HoleFiller::Fail(BugKind::Assert))),
                "FAIL_OOB" => Ok(Arg::Hole(HoleFiller::Fail(BugKind::OutOfBounds))),
                "SKIP" => Ok(Arg::Hole(HoleFiller::Skip)),
                "argv" => Ok(Arg::Param(Param::ArgvString(self.parse_argv_index()?))),
                "atoll" => {
                    self.expect(Token::LParen)?;
                    match self.next() {
                        Some((Token::Ident(inner), _, _)) if inner == "argv" => {}
                        _ => {
                            return Err(DslError::Syntax {
                                line,
                                col,
                                message: "expected `argv[...]` inside `atoll(...)`".into(),
                            })
                        }
                    }
                    let idx = self.parse_argv_index()?;
                    self.expect(Token::RParen)?;
                    Ok(Arg::Param(Param::ArgvInt(idx)))
                }
                other => Err(DslError::Syntax {
                    line,
                    col,
                    message: format!("unexpected identifier `{other}` in argument position"),
                }),
            },
            Some((t, line, col)) => Err(DslError::Syntax {
                line,
                col,
                message: format!("expected an argument, found {}", t.describe()),
            }),
            None => Err(self.err_at("expected an argument, found end of input")),
        }
    }

    fn parse_argv_index(&mut self) -> Result<u32, DslError> {
        self.expect(Token::LBracket)?;
        let idx = match self.next() {
            Some((Token::Int(v), line, col)) => {
                if v < 1 || v > u32::MAX as i64 {
                    return Err(DslError::Syntax {
                        line,
                        col,
                        message: format!("argv index must be at least 1, got {v}"),
                    });
                }
                v as u32
            }
            Some((t, line, col)) => {
                return Err(DslError::Syntax {
                    line,
                    col,
                    message: format!("expected argv index, found {}", t.describe()),
                })
            }
            None => return Err(self.err_at("expected argv index")),
        };
        self.expect(Token::RBracket)?;
        Ok(idx)
    }
}

fn describe_hole(h: &HoleFiller) -> &'static str {
    match h {
        HoleFiller::Next => "NEXT",
        HoleFiller::Fail(BugKind::Assert) => "FAIL",
        HoleFiller::Fail(BugKind::OutOfBounds) => "FAIL_OOB",
        HoleFiller::Skip => "SKIP",
        HoleFiller::Snippet(_) => "snippet",
    }
}

/// Parses one transformation sequence. On success the result always
/// validates cleanly.
pub fn parse(text: &str) -> Result<SequenceSpec, DslError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser { tokens, pos: 0 };
    let seq = parser.parse_sequence()?;
    let violations = validate(&seq);
    if violations.is_empty() {
        Ok(seq)
    } else {
        Err(DslError::Invalid(violations))
    }
}

/// Parses a spec file: one sequence per line, `#` comments, blank lines
/// ignored. Returns each sequence with its 1-based line number.
pub fn parse_file(text: &str) -> Result<Vec<(usize, SequenceSpec)>, DslError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens = Lexer::new(raw).tokenize().map_err(|e| at_line(e, line_no))?;
        if tokens.is_empty() {
            continue;
        }
        let mut parser = Parser { tokens, pos: 0 };
        let seq = parser.parse_sequence().map_err(|e| at_line(e, line_no))?;
        let violations = validate(&seq);
        if !violations.is_empty() {
            return Err(DslError::Invalid(violations));
        }
        out.push((line_no, seq));
    }
    Ok(out)
}

fn at_line(err: DslError, line_no: usize) -> DslError {
    match err {
        DslError::Syntax { col, message, .. } => DslError::Syntax {
            line: line_no,
            col,
            message,
        },
        other => other,
    }
}

/// Canonical single-line rendering; `parse(print(s)) == s` for every valid
/// sequence.
pub fn print(seq: &SequenceSpec) -> Result<String, DslError> {
    let violations = validate(seq);
    if !violations.is_empty() {
        return Err(DslError::Unprintable(violations));
    }
    let mut out = String::new();
    for (i, item) in seq.items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{}(", item.kind).unwrap();
        let mut first = true;
        for param in &item.params {
            if !first {
                out.push_str(", ");
            }
            first = false;
            print_param(&mut out, param);
        }
        for hole in &item.holes {
            if !first {
                out.push_str(", ");
            }
            first = false;
            print_hole(&mut out, hole);
        }
        out.push(')');
    }
    Ok(out)
}

fn print_param(out: &mut String, param: &Param) {
    match param {
        Param::Literal(ParamValue::Int(v)) => write!(out, "{v}").unwrap(),
        Param::Literal(ParamValue::Str(s)) => write!(out, "\"{s}\"").unwrap(),
        Param::Literal(ParamValue::Char(c)) => write!(out, "'{c}'").unwrap(),
        Param::ArgvString(i) => write!(out, "argv[{i}]").unwrap(),
        Param::ArgvInt(i) => write!(out, "atoll(argv[{i}])").unwrap(),
        Param::Fresh => out.push('?'),
    }
}

fn print_hole(out: &mut String, hole: &HoleFiller) {
    match hole {
        HoleFiller::Next => out.push_str("NEXT"),
        HoleFiller::Fail(BugKind::Assert) => out.push_str("FAIL"),
        HoleFiller::Fail(BugKind::OutOfBounds) => out.push_str("FAIL_OOB"),
        HoleFiller::Skip => out.push_str("SKIP"),
        HoleFiller::Snippet(text) => {
            if text.is_empty() {
                out.push_str("{ }");
            } else {
                write!(out, "{{ {text} }}").unwrap();
            }
        }
    }
}

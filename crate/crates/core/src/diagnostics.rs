//! Diagnostic records and their human / JSON renderings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        })
    }
}

/// Stable diagnostic codes, one per category.
pub mod codes {
    pub const SYNTAX: &str = "E-SYN-001";
    pub const INVALID_LITERAL: &str = "E-SYN-002";

    pub const UNDEFINED_PROTECTION: &str = "E-PROT-001";
    pub const INCOMPATIBLE_PROTECTION: &str = "E-PROT-002";
    pub const INCOMPATIBLE_TYPESTATE: &str = "E-PROT-003";
    pub const AMBIGUOUS_PROTECTION: &str = "W-PROT-004";
    pub const UNDEFINED_TYPESTATE: &str = "E-STATE-001";
    pub const TYPESTATE_COLLISION: &str = "E-STATE-002";

    pub const MUTATING_IN_NONMUTATING: &str = "E-MUT-001";
    pub const UNNECESSARY_MUTATING: &str = "W-MUT-002";
    pub const LET_REASSIGNMENT: &str = "E-MUT-003";
    pub const MUTATING_FALLBACK: &str = "W-MUT-004";
    pub const FALLBACK_MUTATION: &str = "E-MUT-005";

    pub const UNASSIGNED_NO_INIT: &str = "E-INIT-001";
    pub const RETURN_UNINITIALISED: &str = "E-INIT-002";
    pub const MISSING_PUBLIC_INIT: &str = "E-INIT-003";
    pub const MULTIPLE_PUBLIC_INIT: &str = "E-INIT-004";
    pub const PUBLIC_INIT_NOT_ANY: &str = "E-INIT-005";

    pub const REDECLARATION: &str = "E-DECL-001";
    pub const INVALID_CHARACTER: &str = "E-DECL-002";
    pub const ORPHAN_BEHAVIOUR: &str = "E-DECL-003";
    pub const PAYABLE_NO_IMPLICIT: &str = "E-DECL-004";
    pub const AMBIGUOUS_PAYABLE: &str = "E-DECL-005";
    pub const DYNAMIC_PARAMETER: &str = "E-DECL-006";
    pub const UNDECLARED_IDENTIFIER: &str = "E-DECL-007";
    pub const MISSING_RETURN: &str = "E-DECL-008";
    pub const CODE_AFTER_RETURN: &str = "W-DECL-009";
    pub const DISCARDED_RESULT: &str = "E-DECL-010";
    pub const DYNAMIC_RETURN: &str = "E-DECL-011";
    pub const UNDECLARED_TYPE: &str = "E-DECL-012";
    pub const INVALID_DECLARATION: &str = "E-DECL-013";

    pub const RETURN_TYPE: &str = "E-TYPE-001";
    pub const ASSIGNMENT_TYPE: &str = "E-TYPE-002";
    pub const ARGUMENT_TYPE: &str = "E-TYPE-003";
    pub const OPERATOR_TYPE: &str = "E-TYPE-004";
    pub const CONDITION_TYPE: &str = "E-TYPE-005";
    pub const UNSUPPORTED_LITERAL: &str = "E-TYPE-006";
    pub const NO_MEMBER: &str = "E-TYPE-007";
    pub const INVALID_INOUT: &str = "E-TYPE-008";
    pub const NOT_ASSIGNABLE: &str = "E-TYPE-009";
    pub const KEY_CONVERSION: &str = "W-TYPE-010";
    pub const INVALID_EXPRESSION: &str = "E-TYPE-011";

    pub const MISSING_TRAIT_MEMBER: &str = "E-TRAIT-001";
    pub const DUPLICATE_TRAIT_BODY: &str = "E-TRAIT-002";
    pub const UNDEFINED_TRAIT: &str = "E-TRAIT-003";

    pub const SELECTOR_COLLISION: &str = "E-ABI-001";
}

/// A position inside one input file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub message: String,
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub notes: Vec<Note>,
    /// Index of the pass that produced the diagnostic; a tie-breaker for ordering.
    #[serde(default)]
    pub pass: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
}

impl Diagnostic {
    fn new(severity: Severity, code: &str, message: impl Into<String>, span: Span, files: &[String]) -> Self {
        Diagnostic {
            code: code.to_string(),
            severity,
            message: message.into(),
            file: files.get(span.file as usize).cloned().unwrap_or_default(),
            line: span.line,
            column: span.column,
            notes: Vec::new(),
            pass: 0,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn with_note(mut self, message: impl Into<String>) -> Self {
        self.notes.push(Note { message: message.into(), line: None, column: None });
        self
    }

    pub fn with_note_at(mut self, message: impl Into<String>, span: Span) -> Self {
        self.notes.push(Note { message: message.into(), line: Some(span.line), column: Some(span.column) });
        self
    }

    pub fn location(&self) -> Location {
        Location { file: self.file.clone(), line: self.line, column: self.column }
    }

    /// `<severity>: <message>` followed by indented notes.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Human => {
                let mut out = format!("{}: {}", self.severity, self.message);
                for note in &self.notes {
                    out.push_str("\n  Note: ");
                    out.push_str(&note.message);
                }
                out
            }
            Format::Json => serde_json::to_string(self).expect("diagnostic serializes"),
        }
    }

    /// Human rendering prefixed by `file:line:column: `.
    pub fn render_located(&self) -> String {
        format!("{}:{}:{}: {}", self.file, self.line, self.column, self.render(Format::Human))
    }
}

/// Collects diagnostics for one pass, stamping each with the pass index.
#[derive(Debug)]
pub struct Sink<'a> {
    files: &'a [String],
    pass: u8,
    pub diagnostics: Vec<Diagnostic>,
}

impl<'a> Sink<'a> {
    pub fn new(files: &'a [String], pass: u8) -> Self {
        Sink { files, pass, diagnostics: Vec::new() }
    }

    pub fn error(&mut self, code: &str, message: impl Into<String>, span: Span) -> &mut Diagnostic {
        self.push(Severity::Error, code, message, span)
    }

    pub fn warning(&mut self, code: &str, message: impl Into<String>, span: Span) -> &mut Diagnostic {
        self.push(Severity::Warning, code, message, span)
    }

    fn push(&mut self, severity: Severity, code: &str, message: impl Into<String>, span: Span) -> &mut Diagnostic {
        let mut d = Diagnostic::new(severity, code, message, span, self.files);
        d.pass = self.pass;
        self.diagnostics.push(d);
        self.diagnostics.last_mut().unwrap()
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// Orders diagnostics by file, line, column, then pass index.
pub fn sort(diagnostics: &mut [Diagnostic], files: &[String]) {
    let file_index = |name: &str| files.iter().position(|f| f == name).unwrap_or(usize::MAX);
    diagnostics.sort_by(|a, b| {
        (file_index(&a.file), a.line, a.column, a.pass).cmp(&(file_index(&b.file), b.line, b.column, b.pass))
    });
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Diagnostic {
        Diagnostic {
            code: codes::LET_REASSIGNMENT.into(),
            severity: Severity::Error,
            message: "Cannot reassign to value: 'manager' is a let-constant.".into(),
            file: "bank.flint".into(),
            line: 30,
            column: 5,
            notes: vec![Note {
                message: "'manager' is declared on line 18, column 12.".into(),
                line: Some(18),
                column: Some(12),
            }],
            pass: 1,
        }
    }

    #[test]
    fn renders_notes_indented() {
        assert_eq!(
            sample().render(Format::Human),
            "error: Cannot reassign to value: 'manager' is a let-constant.\n  Note: 'manager' is declared on line 18, column 12."
        );
    }

    #[test]
    fn no_notes_is_single_line() {
        let mut d = sample();
        d.notes.clear();
        assert!(!d.render(Format::Human).contains('\n'));
    }

    #[test]
    fn json_round_trips() {
        let d = sample();
        let text = d.render(Format::Json);
        let back: Diagnostic = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for field in ["severity", "message", "line", "column", "notes", "code"] {
            assert!(value.get(field).is_some(), "missing {field}");
        }
    }
}

//! Diagnostics produced while loading and checking grammar files.
//!
//! Every diagnostic carries the 1-based line number of the grammar file
//! line it refers to. Errors prevent generation; warnings do not.

use std::fmt;

/// How serious a diagnostic is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => f.write_str("warning"),
            Severity::Error => f.write_str("error"),
        }
    }
}

/// A single problem found in a grammar file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Stable short identifier, one of the constants in [`codes`].
    pub code: &'static str,
    pub message: String,
    /// 1-based line number in the source text.
    pub source_line: usize,
}

impl Diagnostic {
    pub fn error(code: &'static str, source_line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            source_line,
        }
    }

    pub fn warning(code: &'static str, source_line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            source_line,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: {}[{}]: {}",
            self.source_line, self.severity, self.code, self.message
        )
    }
}

/// True if any diagnostic in the slice is an error.
pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

/// Stable diagnostic codes.
pub mod codes {
    pub const EMPTY_GRAMMAR: &str = "empty-grammar";
    pub const DUPLICATE_RULE: &str = "duplicate-rule";
    pub const MALFORMED_RULE: &str = "malformed-rule";
    pub const EMPTY_SYMBOL: &str = "empty-symbol";
    pub const BAD_SYMBOL_NAME: &str = "bad-symbol-name";
    pub const OPTION_MISSING_PROBABILITY: &str = "option-missing-probability";
    pub const EMPTY_PROBABILITY: &str = "empty-probability";
    pub const ZERO_PROBABILITY: &str = "zero-probability";
    pub const BAD_PROBABILITY: &str = "bad-probability";
    pub const BAD_UNIT: &str = "bad-unit";
    pub const MIXED_RULE: &str = "mixed-rule";
    pub const ANNOTATED_TERMINAL: &str = "annotated-terminal";
    pub const UNKNOWN_SYMBOL: &str = "unknown-symbol";
    pub const PROB_SUM_EXCEEDS_ONE: &str = "prob-sum-exceeds-one";
    pub const UNREACHABLE_RULE: &str = "unreachable-rule";
    pub const POSSIBLE_UNBOUNDED_RECURSION: &str = "possible-unbounded-recursion";
    pub const UNITS_INCONSISTENT: &str = "units-inconsistent";
    pub const UNITS_REQUIRED: &str = "units-required";
    pub const EXCEEDS_ORIGINAL_LIMITS: &str = "exceeds-original-limits";
}

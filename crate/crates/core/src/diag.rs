//! Source positions and diagnostics shared by every pipeline stage.

use std::fmt;

use serde::Serialize;

/// A 1-based line/column position in a source file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// Stable diagnostic codes. The string form is part of the CLI output
/// contract and must not change between releases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Code {
    IllegalCharacter,
    Syntax,
    OrphanAnnotation,
    AnnotationSyntax,
    UnknownAnnotation,
    DuplicateAnnotation,
    DuplicateFunction,
    UnsupportedType,
    UnboundVariable,
    UnknownFunction,
    TypeMismatch,
    ArityMismatch,
    MeasureRelationTypeMismatch,
    UncheckedGroupMeasure,
    GenericFunction,
    UnknownFunctionInAnnotation,
    SynthesisFailure,
    NoMeasure,
    UnsupportedConstruct,
    MissingWitness,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::IllegalCharacter => "illegal-character",
            Code::Syntax => "syntax",
            Code::OrphanAnnotation => "orphan-annotation",
            Code::AnnotationSyntax => "annotation-syntax",
            Code::UnknownAnnotation => "unknown-annotation",
            Code::DuplicateAnnotation => "duplicate-annotation",
            Code::DuplicateFunction => "duplicate-function",
            Code::UnsupportedType => "unsupported-type",
            Code::UnboundVariable => "unbound-variable",
            Code::UnknownFunction => "unknown-function",
            Code::TypeMismatch => "type-mismatch",
            Code::ArityMismatch => "arity-mismatch",
            Code::MeasureRelationTypeMismatch => "measure-relation-type-mismatch",
            Code::UncheckedGroupMeasure => "unchecked-group-measure",
            Code::GenericFunction => "generic-function",
            Code::UnknownFunctionInAnnotation => "unknown-function-in-annotation",
            Code::SynthesisFailure => "synthesis-failure",
            Code::NoMeasure => "no-measure",
            Code::UnsupportedConstruct => "unsupported-construct",
            Code::MissingWitness => "missing-witness",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub pos: Pos,
    pub message: String,
    #[serde(serialize_with = "serialize_code")]
    pub code: Code,
}

fn serialize_code<S: serde::Serializer>(code: &Code, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(code.as_str())
}

impl Diagnostic {
    pub fn error(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, pos, message: message.into(), code }
    }

    pub fn warning(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, pos, message: message.into(), code }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Renders as `file:line:col: severity[code]: message`.
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.pos.line, self.pos.col, self.severity, self.code, self.message
        )
    }
}

pub fn has_errors<'a>(diags: impl IntoIterator<Item = &'a Diagnostic>) -> bool {
    diags.into_iter().any(Diagnostic::is_error)
}

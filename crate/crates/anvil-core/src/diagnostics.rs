//! Compiler diagnostics and their human and JSON renderings.

use crate::frontend::span::{SourceMap, Span};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Stable machine-readable class, e.g. `value-use` or `reg-mutation`.
    pub code: String,
    pub message: String,
    pub span: Span,
    pub notes: Vec<String>,
}

impl Diagnostic {
    pub fn error(code: &str, message: impl Into<String>, span: Span) -> Diagnostic {
        Diagnostic { severity: Severity::Error, code: code.to_string(), message: message.into(), span, notes: vec![] }
    }

    pub fn warning(code: &str, message: impl Into<String>, span: Span) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, code: code.to_string(), message: message.into(), span, notes: vec![] }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Diagnostic {
        self.notes.push(note.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Sorts by position and drops repeats of the same message at the same span.
pub fn dedup(ds: &mut Vec<Diagnostic>) {
    ds.sort_by(|a, b| {
        (a.span.file, a.span.lo, a.span.hi, &a.message).cmp(&(b.span.file, b.span.lo, b.span.hi, &b.message))
    });
    ds.dedup_by(|a, b| a.span == b.span && a.message == b.message);
}

/// Message, `file:line:col:` with a 0-based column, the source line, and carets
/// under the span (clipped to its first line).
pub fn render_human(d: &Diagnostic, sm: &SourceMap) -> String {
    let mut out = String::new();
    if d.severity == Severity::Warning {
        out.push_str("warning: ");
    }
    out.push_str(&d.message);
    out.push('\n');
    let (line, col) = sm.line_col(d.span.file, d.span.lo);
    let (end_line, end_col) = sm.line_col(d.span.file, d.span.hi);
    let (col, end_col) = (col as usize, end_col as usize);
    out.push_str(&format!("{}:{}:{}:\n", sm.name(d.span.file), line, col - 1));
    let text = sm.line_text(d.span.file, line);
    out.push_str(&format!("{line:>7}| {text}\n"));
    let last = if end_line == line { end_col } else { text.chars().count() + 1 };
    let width = last.saturating_sub(col).max(1);
    out.push_str(&format!("{:>7}| {}{}\n", "", " ".repeat(col - 1), "^".repeat(width)));
    for n in &d.notes {
        out.push_str(&format!("  note: {n}\n"));
    }
    out
}

pub fn to_json(d: &Diagnostic, sm: &SourceMap) -> serde_json::Value {
    let s = sm.resolve(d.span);
    serde_json::json!({
        "severity": d.severity,
        "code": d.code,
        "message": d.message,
        "span": {
            "file": s.file,
            "line_start": s.line_start,
            "col_start": s.col_start,
            "line_end": s.line_end,
            "col_end": s.col_end,
        },
        "notes": d.notes,
    })
}

pub fn to_json_list(ds: &[Diagnostic], sm: &SourceMap) -> serde_json::Value {
    serde_json::json!({
        "schema": "anvil-diagnostics/1",
        "diagnostics": ds.iter().map(|d| to_json(d, sm)).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caret_rendering() {
        let mut sm = SourceMap::new();
        let f = sm.add("a.anvil", "x\n    send ep.data (v) >>\n");
        let lo = 6;
        let hi = lo + "send ep.data (v)".len();
        let d = Diagnostic::error("send-coverage", "Oops", Span::new(f, lo, hi));
        let r = render_human(&d, &sm);
        let lines: Vec<&str> = r.lines().collect();
        assert_eq!(lines[1], "a.anvil:2:4:");
        assert_eq!(lines[2], "      2|     send ep.data (v) >>");
        assert_eq!(lines[3], format!("       |     {}", "^".repeat(16)));
        let j = to_json(&d, &sm);
        assert_eq!(j["span"]["line_start"], 2);
        assert_eq!(j["span"]["col_start"], 5);
    }
}

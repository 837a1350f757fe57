use serde::Serialize;
use std::fmt;

/// Index of a file registered in a [`SourceMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct FileId(pub u32);

/// Compact byte-offset span. Resolved to lines and columns through a [`SourceMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Span {
    pub file: FileId,
    pub lo: u32,
    pub hi: u32,
}

impl Span {
    pub fn new(file: FileId, lo: usize, hi: usize) -> Self {
        Span { file, lo: lo as u32, hi: hi as u32 }
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        Span { file: self.file, lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.file == other.file && self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn empty_at(file: FileId, pos: usize) -> Span {
        Span::new(file, pos, pos)
    }
}

/// Line/column form of a span. Lines and columns are 1-based; the end is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceSpan {
    pub file: String,
    pub line_start: u32,
    pub col_start: u32,
    pub line_end: u32,
    pub col_end: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line_start, self.col_start)
    }
}

#[derive(Debug, Clone)]
struct SourceFile {
    name: String,
    text: String,
    line_starts: Vec<usize>,
}

/// Owns the text of every compiled file.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, text: impl Into<String>) -> FileId {
        let text = text.into();
        let mut line_starts = vec![0];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        self.files.push(SourceFile { name: name.into(), text, line_starts });
        FileId(self.files.len() as u32 - 1)
    }

    pub fn name(&self, id: FileId) -> &str {
        &self.files[id.0 as usize].name
    }

    pub fn text(&self, id: FileId) -> &str {
        &self.files[id.0 as usize].text
    }

    pub fn files(&self) -> impl Iterator<Item = FileId> + '_ {
        (0..self.files.len()).map(|i| FileId(i as u32))
    }

    /// 1-based (line, column) of a byte offset. Columns count characters.
    pub fn line_col(&self, id: FileId, offset: u32) -> (u32, u32) {
        let f = &self.files[id.0 as usize];
        let offset = (offset as usize).min(f.text.len());
        let line = match f.line_starts.binary_search(&offset) {
            Ok(l) => l,
            Err(l) => l - 1,
        };
        let col = f.text[f.line_starts[line]..offset].chars().count();
        (line as u32 + 1, col as u32 + 1)
    }

    /// Text of a 1-based line, without its newline.
    pub fn line_text(&self, id: FileId, line: u32) -> &str {
        let f = &self.files[id.0 as usize];
        let idx = (line as usize).saturating_sub(1);
        if idx >= f.line_starts.len() {
            return "";
        }
        let start = f.line_starts[idx];
        let end = f.line_starts.get(idx + 1).map(|e| e - 1).unwrap_or(f.text.len());
        f.text[start..end.max(start)].trim_end_matches('\r')
    }

    pub fn snippet(&self, span: Span) -> &str {
        &self.text(span.file)[span.lo as usize..span.hi as usize]
    }

    pub fn resolve(&self, span: Span) -> SourceSpan {
        let (ls, cs) = self.line_col(span.file, span.lo);
        let (le, ce) = self.line_col(span.file, span.hi);
        SourceSpan { file: self.name(span.file).to_string(), line_start: ls, col_start: cs, line_end: le, col_end: ce }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_roundtrip() {
        let mut sm = SourceMap::new();
        let f = sm.add("a.anvil", "ab\n  cd\n");
        assert_eq!(sm.line_col(f, 0), (1, 1));
        assert_eq!(sm.line_col(f, 5), (2, 3));
        assert_eq!(sm.line_text(f, 2), "  cd");
        let s = sm.resolve(Span::new(f, 5, 7));
        assert_eq!((s.line_start, s.col_start, s.line_end, s.col_end), (2, 3, 2, 5));
    }
}

//! End-to-end entry points shared by the command-line tool and the Python bindings.

use crate::diagnostics::{self, Diagnostic};
use crate::frontend::ast::{Item, Program};
use crate::frontend::resolve::{resolve, ResolvedProgram};
use crate::frontend::span::SourceMap;
use crate::frontend::{parse_into, FrontendError};
use crate::typecheck::{check_program, CheckOptions, ProgramCheck};

/// A parsed and resolved set of source files.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub sources: SourceMap,
    pub ast: Program,
    pub program: ResolvedProgram,
}

/// Front-end failure: the diagnostics plus the sources needed to render them.
#[derive(Debug, Clone)]
pub struct FrontendFailure {
    pub sources: SourceMap,
    pub diagnostics: Vec<Diagnostic>,
}

fn frontend_diag(e: &FrontendError) -> Diagnostic {
    Diagnostic::error("syntax", e.to_string(), e.span())
}

/// Parses and resolves `(name, text)` files as one program.
pub fn compile_sources(files: &[(String, String)]) -> Result<Compilation, FrontendFailure> {
    let mut sources = SourceMap::new();
    let mut items: Vec<Item> = Vec::new();
    let mut errors = Vec::new();
    for (name, text) in files {
        match parse_into(&mut sources, name, text) {
            Ok(p) => items.extend(p.items),
            Err(e) => errors.push(frontend_diag(&e)),
        }
    }
    if !errors.is_empty() {
        return Err(FrontendFailure { sources, diagnostics: errors });
    }
    let ast = Program { items };
    match resolve(&ast) {
        Ok(program) => Ok(Compilation { sources, ast, program }),
        Err(es) => {
            let mut diagnostics: Vec<Diagnostic> =
                es.into_iter().map(|e| Diagnostic::error("resolve", e.message, e.span)).collect();
            diagnostics::dedup(&mut diagnostics);
            Err(FrontendFailure { sources, diagnostics })
        }
    }
}

pub fn compile_source(name: &str, text: &str) -> Result<Compilation, FrontendFailure> {
    compile_sources(&[(name.to_string(), text.to_string())])
}

impl Compilation {
    pub fn check(&self, opts: CheckOptions) -> ProgramCheck {
        check_program(&self.program, opts)
    }

    pub fn render(&self, ds: &[Diagnostic]) -> String {
        ds.iter().map(|d| diagnostics::render_human(d, &self.sources)).collect()
    }
}

impl FrontendFailure {
    pub fn render(&self) -> String {
        self.diagnostics.iter().map(|d| diagnostics::render_human(d, &self.sources)).collect()
    }
}

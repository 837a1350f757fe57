//! Python bindings. Results are returned as JSON text or SystemVerilog; failures
//! raise `ValueError` carrying rendered diagnostics.

use anvil_core::codegen::{emit_program, gen_fsm};
use anvil_core::diagnostics::to_json_list;
use anvil_core::driver::{compile_source, Compilation};
use anvil_core::event_graph::dump_dot;
use anvil_core::optimizer::PassConfig;
use anvil_core::semantics::{verify_program, Bounds, Mode};
use anvil_core::typecheck::CheckOptions;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn compile(name: &str, source: &str) -> PyResult<Compilation> {
    compile_source(name, source).map_err(|f| PyValueError::new_err(f.render()))
}

/// Type-checks `source`; returns the diagnostics as JSON (`anvil-diagnostics/1`).
/// Front-end errors are reported the same way.
#[pyfunction]
#[pyo3(signature = (source, name = "input.anvil", iters = 2))]
fn check(source: &str, name: &str, iters: usize) -> PyResult<String> {
    if iters < 2 {
        return Err(PyValueError::new_err("iters must be at least 2"));
    }
    Ok(match compile_source(name, source) {
        Ok(c) => to_json_list(&c.check(CheckOptions { iters }).diagnostics, &c.sources),
        Err(f) => to_json_list(&f.diagnostics, &f.sources),
    }
    .to_string())
}

/// Type-checks and emits SystemVerilog for `top` and the processes it spawns.
#[pyfunction]
#[pyo3(signature = (source, top, name = "input.anvil", opt_level = 1))]
fn build(source: &str, top: &str, name: &str, opt_level: u8) -> PyResult<String> {
    let c = compile(name, source)?;
    let pc = c.check(CheckOptions::default());
    if !pc.ok() {
        return Err(PyValueError::new_err(c.render(&pc.diagnostics)));
    }
    emit_program(&c.program, Some(top), PassConfig::for_level(opt_level))
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Event graph of one thread as DOT, or as JSON (`anvil-event-graph/1`) when `json` is set.
#[pyfunction]
#[pyo3(signature = (source, process, thread = 0, name = "input.anvil", optimized = true, json = false))]
fn graph(source: &str, process: &str, thread: usize, name: &str, optimized: bool, json: bool) -> PyResult<String> {
    let c = compile(name, source)?;
    let pi = c
        .program
        .procs
        .iter()
        .position(|p| p.name == process)
        .ok_or_else(|| PyValueError::new_err(format!("unknown process `{process}`")))?;
    if thread >= c.program.procs[pi].threads.len() {
        return Err(PyValueError::new_err(format!("`{process}` has no thread {thread}")));
    }
    let cfg = if optimized { PassConfig::all() } else { PassConfig::none() };
    let plan = gen_fsm(&c.program, pi, thread, cfg).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(if json { plan.graph.to_json().to_string() } else { dump_dot(&plan.graph, &format!("{process}_t{thread}")) })
}

/// Bounded search for an unsafe execution log; returns the report as JSON.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (source, name = "input.anvil", slack = 3, iters = 2, budget = 1_000_000, composed = false, top = None))]
fn verify(
    py: Python<'_>,
    source: &str,
    name: &str,
    slack: u32,
    iters: usize,
    budget: u64,
    composed: bool,
    top: Option<&str>,
) -> PyResult<String> {
    let c = compile(name, source)?;
    let bounds = Bounds { slack, iters, budget };
    let mode = if composed { Mode::Composed } else { Mode::Local };
    let r = py
        .detach(|| verify_program(&c.program, top, bounds, mode))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    serde_json::to_string(&r).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn anvil_hdl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    m.add_function(wrap_pyfunction!(graph, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

//! SystemVerilog backend: one module per process.
//!
//! Each message of an endpoint lowers to up to three ports (`data`, `valid`, `ack`).
//! A handshake port is only emitted for a side whose sync mode is dynamic; the other
//! side's timing is already fixed by its contract. Each thread becomes a small FSM that
//! tracks which events of its optimized event graph have been reached.

mod emit;
mod fsm;

pub use emit::{emit_program, emit_sv};
pub use fsm::{gen_fsm, EventState, FsmPlan};

use crate::frontend::ast::Side;
use crate::frontend::resolve::{polarity, ChannelInfo, Polarity, ProcId, ResolvedProgram, Sync};
use crate::optimizer::{OptError, PassConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortDir {
    Input,
    Output,
}

impl PortDir {
    pub fn keyword(self) -> &'static str {
        match self {
            PortDir::Input => "input",
            PortDir::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub dir: PortDir,
    pub width: u32,
}

/// Ports of one message at one endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSet {
    pub msg: usize,
    pub polarity: Polarity,
    pub data: Port,
    pub valid: Option<Port>,
    pub ack: Option<Port>,
}

impl PortSet {
    pub fn ports(&self) -> Vec<&Port> {
        let mut v = vec![&self.data];
        v.extend(self.valid.as_ref());
        v.extend(self.ack.as_ref());
        v
    }

    /// Names of the ports present, as `data`/`valid`/`ack`.
    pub fn kinds(&self) -> Vec<&'static str> {
        let mut v = vec!["data"];
        if self.valid.is_some() {
            v.push("valid");
        }
        if self.ack.is_some() {
            v.push("ack");
        }
        v
    }
}

/// Whether a message carries `valid` and `ack` wires given both sides' sync modes.
pub fn handshake_ports(sender: &Sync, receiver: &Sync) -> (bool, bool) {
    (matches!(sender, Sync::Dynamic), matches!(receiver, Sync::Dynamic))
}

/// Ports for every message of `chan` as seen from an endpoint named `ep` on `side`.
pub fn lower_messages(chan: &ChannelInfo, side: Side, ep: &str) -> Vec<PortSet> {
    chan.messages
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let pol = polarity(side, m.direction);
            let sender = m.sync_of(m.sender_side());
            let receiver = m.sync_of(m.sender_side().flip());
            let (has_valid, has_ack) = handshake_ports(sender, receiver);
            let (out, inp) = match pol {
                Polarity::Send => (PortDir::Output, PortDir::Input),
                Polarity::Recv => (PortDir::Input, PortDir::Output),
            };
            let base = format!("{}_{}", mangle(ep), mangle(&m.name));
            PortSet {
                msg: i,
                polarity: pol,
                data: Port { name: format!("{base}_data"), dir: out, width: m.width.max(1) },
                valid: has_valid.then(|| Port { name: format!("{base}_valid"), dir: out, width: 1 }),
                ack: has_ack.then(|| Port { name: format!("{base}_ack"), dir: inp, width: 1 }),
            }
        })
        .collect()
}

const SV_KEYWORDS: &[&str] = &[
    "accept_on",
    "alias",
    "always",
    "always_comb",
    "always_ff",
    "always_latch",
    "and",
    "assert",
    "assign",
    "assume",
    "automatic",
    "before",
    "begin",
    "bind",
    "bins",
    "binsof",
    "bit",
    "break",
    "buf",
    "bufif0",
    "bufif1",
    "byte",
    "case",
    "casex",
    "casez",
    "cell",
    "chandle",
    "checker",
    "class",
    "clocking",
    "cmos",
    "config",
    "const",
    "constraint",
    "context",
    "continue",
    "cover",
    "covergroup",
    "coverpoint",
    "cross",
    "deassign",
    "default",
    "defparam",
    "design",
    "disable",
    "dist",
    "do",
    "edge",
    "else",
    "end",
    "endcase",
    "endchecker",
    "endclass",
    "endclocking",
    "endconfig",
    "endfunction",
    "endgenerate",
    "endgroup",
    "endinterface",
    "endmodule",
    "endpackage",
    "endprimitive",
    "endprogram",
    "endproperty",
    "endsequence",
    "endspecify",
    "endtable",
    "endtask",
    "enum",
    "event",
    "eventually",
    "expect",
    "export",
    "extends",
    "extern",
    "final",
    "first_match",
    "for",
    "force",
    "foreach",
    "forever",
    "fork",
    "forkjoin",
    "function",
    "generate",
    "genvar",
    "global",
    "highz0",
    "highz1",
    "if",
    "iff",
    "ifnone",
    "ignore_bins",
    "illegal_bins",
    "implements",
    "implies",
    "import",
    "incdir",
    "include",
    "initial",
    "inout",
    "input",
    "inside",
    "instance",
    "int",
    "integer",
    "interconnect",
    "interface",
    "intersect",
    "join",
    "join_any",
    "join_none",
    "large",
    "let",
    "liblist",
    "library",
    "local",
    "localparam",
    "logic",
    "longint",
    "macromodule",
    "matches",
    "medium",
    "modport",
    "module",
    "nand",
    "negedge",
    "nettype",
    "new",
    "nexttime",
    "nmos",
    "nor",
    "noshowcancelled",
    "not",
    "notif0",
    "notif1",
    "null",
    "or",
    "output",
    "package",
    "packed",
    "parameter",
    "pmos",
    "posedge",
    "primitive",
    "priority",
    "program",
    "property",
    "protected",
    "pull0",
    "pull1",
    "pulldown",
    "pullup",
    "pulsestyle_ondetect",
    "pulsestyle_onevent",
    "pure",
    "rand",
    "randc",
    "randcase",
    "randsequence",
    "rcmos",
    "real",
    "realtime",
    "ref",
    "reg",
    "reject_on",
    "release",
    "repeat",
    "restrict",
    "return",
    "rnmos",
    "rpmos",
    "rtran",
    "rtranif0",
    "rtranif1",
    "s_always",
    "s_eventually",
    "s_nexttime",
    "s_until",
    "s_until_with",
    "scalared",
    "sequence",
    "shortint",
    "shortreal",
    "showcancelled",
    "signed",
    "small",
    "soft",
    "solve",
    "specify",
    "specparam",
    "static",
    "string",
    "strong",
    "strong0",
    "strong1",
    "struct",
    "super",
    "supply0",
    "supply1",
    "sync_accept_on",
    "sync_reject_on",
    "table",
    "tagged",
    "task",
    "this",
    "throughout",
    "time",
    "timeprecision",
    "timeunit",
    "tran",
    "tranif0",
    "tranif1",
    "tri",
    "tri0",
    "tri1",
    "triand",
    "trior",
    "trireg",
    "type",
    "typedef",
    "union",
    "unique",
    "unique0",
    "unsigned",
    "until",
    "until_with",
    "untyped",
    "use",
    "uwire",
    "var",
    "vectored",
    "virtual",
    "void",
    "wait",
    "wait_order",
    "wand",
    "weak",
    "weak0",
    "weak1",
    "while",
    "wildcard",
    "wire",
    "with",
    "within",
    "wor",
    "xnor",
    "xor",
];

/// Maps a source identifier to a legal SystemVerilog identifier.
///
/// Keywords, names starting with `_` (reserved for generated signals), and the clock
/// and reset port names get an `_anv` suffix; everything else passes through.
pub fn mangle(name: &str) -> String {
    if SV_KEYWORDS.binary_search(&name).is_ok() || name.starts_with('_') || name == "clk_i" || name == "rst_ni" {
        format!("{name}_anv")
    } else {
        name.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodegenError {
    #[error("unknown process `{0}`")]
    UnknownTop(String),
    #[error("process `{0}` is instantiated recursively")]
    RecursiveSpawn(String),
    #[error("optimizing `{proc}` thread {thread}: {err}")]
    Optimizer { proc: String, thread: usize, err: OptError },
}

/// FSM plans for every thread of a process, built from optimized graphs.
pub fn plan_process(prog: &ResolvedProgram, proc: ProcId, cfg: PassConfig) -> Result<Vec<FsmPlan>, CodegenError> {
    let p = &prog.procs[proc];
    (0..p.threads.len())
        .map(|i| {
            gen_fsm(prog, proc, i, cfg).map_err(|err| CodegenError::Optimizer { proc: p.name.clone(), thread: i, err })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, resolve::resolve};

    #[test]
    fn keywords_sorted_for_lookup() {
        assert!(SV_KEYWORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mangling() {
        assert_eq!(mangle("address"), "address");
        assert_eq!(mangle("logic"), "logic_anv");
        assert_eq!(mangle("_"), "__anv");
        assert_eq!(mangle("clk_i"), "clk_i_anv");
    }

    fn modes() -> Vec<(&'static str, bool)> {
        // (source text, is dynamic)
        vec![("dyn", true), ("#2", false), ("#a+1", false)]
    }

    #[test]
    fn elision_table() {
        for (l, ldyn) in modes() {
            for (r, rdyn) in modes() {
                let src = format!("chan c {{ left a : (logic[4]@#1), right m : (logic[4]@#1) @{l}-@{r} }}");
                let (_, ast) = parse_source("t.anvil", &src).unwrap();
                let prog = resolve(&ast).unwrap();
                let c = &prog.channels[0];
                // `m` travels right, so the left side sends.
                let (sender_dyn, receiver_dyn) = (ldyn, rdyn);
                for side in [Side::Left, Side::Right] {
                    let ps = &lower_messages(c, side, "ep")[1];
                    assert_eq!(ps.valid.is_some(), sender_dyn, "{l}-{r}");
                    assert_eq!(ps.ack.is_some(), receiver_dyn, "{l}-{r}");
                    assert_eq!(ps.data.width, 4);
                    let send = side == Side::Left;
                    assert_eq!(ps.data.dir == PortDir::Output, send);
                    if let Some(v) = &ps.valid {
                        assert_eq!(v.dir == PortDir::Output, send);
                    }
                    if let Some(a) = &ps.ack {
                        assert_eq!(a.dir == PortDir::Input, send);
                    }
                }
            }
        }
    }
}

use super::{EventGraph, EventLabel};
use std::fmt::Write;

/// Graphviz rendering; edges point from predecessor to successor.
pub fn dump_dot(g: &EventGraph, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", name.replace('"', "\\\""));
    out.push_str("  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n");
    for e in g.ids() {
        let head = match g.label(e) {
            EventLabel::Root => "root".to_string(),
            EventLabel::Delay { k, .. } => format!("#{k}"),
            EventLabel::MsgSync { msg, .. } => g.msg_name(*msg),
            EventLabel::Branch { cond, side, .. } => format!("&c{cond}{}", if *side { "+" } else { "-" }),
            EventLabel::Join { .. } => "join".to_string(),
        };
        let mut text = format!("{e}: {head}");
        for a in g.actions(e) {
            text.push_str("\\n");
            text.push_str(&g.describe_action(a).replace('"', "'"));
        }
        let _ = writeln!(out, "  {} [label=\"{}\"];", e, text);
    }
    // Delay and sync edges are solid and labelled, branch edges bold, join edges dashed.
    for e in g.ids() {
        match g.label(e) {
            EventLabel::Root => {}
            EventLabel::Delay { k, preds } => {
                for p in preds {
                    let _ = writeln!(out, "  {p} -> {e} [label=\"#{k}\"];");
                }
            }
            EventLabel::MsgSync { msg, pred, pin } => {
                let _ = writeln!(out, "  {pred} -> {e} [label=\"{}\"];", g.msg_name(*msg));
                if let Some((p, k)) = pin {
                    let _ = writeln!(out, "  {p} -> {e} [style=dotted, label=\"pin #{k}\"];");
                }
            }
            EventLabel::Branch { pred, .. } => {
                let _ = writeln!(out, "  {pred} -> {e} [style=bold];");
            }
            EventLabel::Join { preds } => {
                for p in preds {
                    let _ = writeln!(out, "  {p} -> {e} [style=dashed];");
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

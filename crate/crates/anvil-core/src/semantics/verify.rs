//! Bounded verification: every thread, unrolled up to a bound, with every slack and
//! branch choice, must produce only safe logs.

use super::enumerate::{msg_of_key, Enumerator};
use super::log::{check_log_safety, compose_logs, Action, ExecutionLog, LogDuration, MsgKey, RegKey, ValId, Violation};
use crate::frontend::desugar::check_term;
use crate::frontend::resolve::{EndpointOrigin, ProcId, RKind, RTerm, ResolvedProc, ResolvedProgram, ResolvedThread};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Largest number of cycles a send or receive may wait.
    pub slack: u32,
    /// Largest number of loop iterations unrolled.
    pub iters: usize,
    /// Largest number of logs examined before giving up.
    pub budget: u64,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds { slack: 3, iters: 2, budget: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each thread against an arbitrary environment.
    #[default]
    Local,
    /// All threads of the instance tree under a top process, with matched messages
    /// between them composed away.
    Composed,
}

/// The family `t`, `t >> t`, ... up to `iters` copies.
pub fn concretize(thread: &ResolvedThread, iters: usize) -> Vec<RTerm> {
    (1..=iters.max(1)).map(|k| check_term(thread, k)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// Process instance and thread, e.g. `child thread 0`.
    pub scope: String,
    /// Unrolled iterations per thread in scope.
    pub iterations: Vec<usize>,
    pub log: ExecutionLog,
    pub violation: Violation,
    /// Human-readable `violation`.
    pub reason: String,
    /// The log, one line per cycle.
    pub trace: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub bounds: Bounds,
    /// Distinct logs checked. The budget counts every explored path, duplicates included.
    pub logs: u64,
    /// Thread and unrolling combinations explored.
    pub concretizations: usize,
    /// False if the budget ran out first.
    pub complete: bool,
    pub witness: Option<Witness>,
}

impl VerifyReport {
    pub fn is_safe(&self) -> bool {
        self.witness.is_none()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        match &self.witness {
            Some(w) => {
                let _ = writeln!(s, "unsafe log in {} (iterations {:?}): {}", w.scope, w.iterations, w.reason);
                s.push_str(&w.trace);
            }
            None => {
                let _ = writeln!(
                    s,
                    "{} logs over {} concretizations are safe (slack {}, {} iterations){}",
                    self.logs,
                    self.concretizations,
                    self.bounds.slack,
                    self.bounds.iters,
                    if self.complete { "" } else { "; budget exhausted, result incomplete" }
                );
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown process `{0}`")]
    UnknownTop(String),
    #[error("process `{0}` is instantiated recursively")]
    RecursiveSpawn(String),
}

/// Names used when rendering logs.
#[derive(Debug, Clone, Default)]
pub struct Names {
    pub msgs: BTreeMap<MsgKey, String>,
    pub regs: BTreeMap<RegKey, String>,
}

impl Names {
    fn local(prog: &ResolvedProgram, proc: &ResolvedProc) -> Names {
        let mut n = Names::default();
        for (ep, e) in proc.endpoints.iter().enumerate() {
            for (i, m) in prog.channels[e.chan].messages.iter().enumerate() {
                let k = super::enumerate::msg_key(crate::frontend::resolve::MsgRef { ep, msg: i });
                n.msgs.insert(k, format!("{}.{}", e.name, m.name));
            }
        }
        for (i, r) in proc.regs.iter().enumerate() {
            n.regs.insert(i as RegKey, r.name.clone());
        }
        n
    }

    fn msg(&self, k: MsgKey) -> String {
        self.msgs.get(&k).cloned().unwrap_or_else(|| format!("m{k}"))
    }

    fn reg(&self, k: RegKey) -> String {
        self.regs.get(&k).cloned().unwrap_or_else(|| format!("r{k}"))
    }

    fn dur(&self, d: LogDuration) -> String {
        match d {
            LogDuration::Cycles(l) => format!("#{l}"),
            LogDuration::Msg(m) => format!("@{}", self.msg(m)),
            LogDuration::Eternal => "eternal".into(),
        }
    }

    pub fn action(&self, a: &Action) -> String {
        let vals = |vs: &[ValId]| vs.iter().map(|v| format!("v{v}")).collect::<Vec<_>>().join(", ");
        match a {
            Action::Create { v, regs, vals: vs } => {
                let regs: Vec<String> = regs.iter().map(|r| self.reg(*r)).collect();
                format!("create v{v} regs {{{}}} values {{{}}}", regs.join(", "), vals(vs))
            }
            Action::Use(v) => format!("use v{v}"),
            Action::Mut(r) => format!("mutate {}", self.reg(*r)),
            Action::Send { msg, v, dur } => format!("send {} v{v} {}", self.msg(*msg), self.dur(*dur)),
            Action::Recv { msg, v, dur } => format!("recv {} v{v} {}", self.msg(*msg), self.dur(*dur)),
        }
    }

    pub fn trace(&self, log: &ExecutionLog) -> String {
        let mut s = String::new();
        for (i, c) in log.cycles.iter().enumerate() {
            let acts: Vec<String> = c.iter().map(|a| self.action(a)).collect();
            let _ = writeln!(s, "  cycle {i}: {}", if acts.is_empty() { "-".into() } else { acts.join("; ") });
        }
        s
    }

    pub fn violation(&self, v: &Violation) -> String {
        match &v.reason {
            super::log::UnsafeReason::Mutated { reg, at, hull } => format!(
                "value v{} depends on register `{}`, which is mutated at cycle {at} while the value is needed over [{}, {}]",
                v.value,
                self.reg(*reg),
                hull.0,
                hull.1
            ),
            _ => v.to_string(),
        }
    }
}

fn log_hash(l: &ExecutionLog) -> u64 {
    let mut h = DefaultHasher::new();
    l.hash(&mut h);
    h.finish()
}

/// Shared budget across parallel jobs.
struct Budget {
    used: AtomicU64,
    limit: u64,
}

impl Budget {
    fn take(&self) -> bool {
        self.used.fetch_add(1, Ordering::Relaxed) < self.limit
    }
}

fn reachable(prog: &ResolvedProgram, top: Option<&str>) -> Result<Vec<ProcId>, VerifyError> {
    let Some(top) = top else { return Ok((0..prog.procs.len()).collect()) };
    let root = prog.proc_by_name(top).ok_or_else(|| VerifyError::UnknownTop(top.into()))?;
    let mut out = vec![];
    let mut stack = vec![root];
    while let Some(p) = stack.pop() {
        if out.contains(&p) {
            continue;
        }
        out.push(p);
        stack.extend(prog.procs[p].spawns.iter().map(|s| s.proc));
    }
    out.sort();
    Ok(out)
}

/// Checks every thread of every process (or those under `top`) on its own.
pub fn verify_program(
    prog: &ResolvedProgram,
    top: Option<&str>,
    bounds: Bounds,
    mode: Mode,
) -> Result<VerifyReport, VerifyError> {
    match mode {
        Mode::Local => verify_local(prog, &reachable(prog, top)?, bounds),
        Mode::Composed => {
            let top = match top {
                Some(t) => t.to_string(),
                None => {
                    prog.procs.last().map(|p| p.name.clone()).ok_or_else(|| VerifyError::UnknownTop(String::new()))?
                }
            };
            verify_composed(prog, &top, bounds)
        }
    }
}

fn verify_local(prog: &ResolvedProgram, procs: &[ProcId], bounds: Bounds) -> Result<VerifyReport, VerifyError> {
    let mut jobs = vec![];
    for &p in procs {
        for (t, th) in prog.procs[p].threads.iter().enumerate() {
            for (k, term) in concretize(th, bounds.iters).into_iter().enumerate() {
                jobs.push((p, t, k + 1, term));
            }
        }
    }
    let budget = Budget { used: AtomicU64::new(0), limit: bounds.budget };
    let found = AtomicUsize::new(usize::MAX);
    let results: Vec<(u64, bool, Option<Witness>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(j, (p, t, k, term))| {
            let proc = &prog.procs[*p];
            let en = Enumerator::new(prog, proc, term, bounds.slack);
            let mut seen = HashSet::new();
            let mut witness = None;
            let mut complete = true;
            en.run(term, &mut |log| {
                if found.load(Ordering::Relaxed) < j {
                    return false;
                }
                if !budget.take() {
                    complete = false;
                    return false;
                }
                if !seen.insert(log_hash(&log)) {
                    return true;
                }
                if let Err(v) = check_log_safety(&log) {
                    witness = Some((log, v));
                    found.fetch_min(j, Ordering::Relaxed);
                    return false;
                }
                true
            });
            let witness = witness.map(|(log, violation)| {
                let names = Names::local(prog, proc);
                Witness {
                    scope: format!("{} thread {t}", proc.name),
                    iterations: vec![*k],
                    trace: names.trace(&log),
                    reason: names.violation(&violation),
                    log,
                    violation,
                }
            });
            (seen.len() as u64, complete, witness)
        })
        .collect();
    // Jobs after the first witness may have been cut short at any point; leave them
    // out so the count does not depend on scheduling.
    let first = results.iter().position(|r| r.2.is_some()).unwrap_or(results.len());
    let witness = results.get(first).and_then(|r| r.2.clone());
    Ok(VerifyReport {
        mode: Mode::Local,
        bounds,
        logs: results[..(first + 1).min(results.len())].iter().map(|r| r.0).sum::<u64>().min(bounds.budget),
        concretizations: jobs.len(),
        complete: witness.is_some() || results.iter().all(|r| r.1),
        witness,
    })
}

/// One running thread in the instance tree.
struct Component {
    name: String,
    proc: ProcId,
    thread: usize,
    /// Global channel per endpoint of the process.
    chans: Vec<u32>,
    reg_base: u32,
}

fn instantiate(prog: &ResolvedProgram, top: &str) -> Result<(Vec<Component>, Names), VerifyError> {
    let root = prog.proc_by_name(top).ok_or_else(|| VerifyError::UnknownTop(top.into()))?;
    let mut comps = vec![];
    let mut names = Names::default();
    let mut next_chan = 0u32;
    let mut next_reg = 0u32;
    // (process, channel per parameter, instance path, ancestors)
    let mut stack: Vec<(ProcId, Vec<u32>, String, Vec<ProcId>)> = vec![(root, vec![], top.to_string(), vec![])];
    while let Some((p, args, path, anc)) = stack.pop() {
        let proc = &prog.procs[p];
        if anc.contains(&p) {
            return Err(VerifyError::RecursiveSpawn(proc.name.clone()));
        }
        let mut chans = vec![u32::MAX; proc.endpoints.len()];
        for (ep, e) in proc.endpoints.iter().enumerate() {
            chans[ep] = match e.origin {
                EndpointOrigin::Param(i) if i < args.len() => args[i],
                EndpointOrigin::Param(_) => {
                    next_chan += 1;
                    next_chan - 1
                }
                EndpointOrigin::Local(c) => {
                    let lc = &proc.chans[c];
                    if lc.left == ep {
                        next_chan += 1;
                        next_chan - 1
                    } else {
                        chans[lc.left]
                    }
                }
            };
            let named = match e.origin {
                EndpointOrigin::Param(i) => i >= args.len(),
                EndpointOrigin::Local(c) => proc.chans[c].left == ep,
            };
            if named {
                for (i, m) in prog.channels[e.chan].messages.iter().enumerate() {
                    names.msgs.insert(chans[ep] << 8 | i as u32, format!("{path}.{}.{}", e.name, m.name));
                }
            }
        }
        for (i, r) in proc.regs.iter().enumerate() {
            names.regs.insert(next_reg + i as u32, format!("{path}.{}", r.name));
        }
        for t in 0..proc.threads.len() {
            comps.push(Component {
                name: format!("{path} thread {t}"),
                proc: p,
                thread: t,
                chans: chans.clone(),
                reg_base: next_reg,
            });
        }
        next_reg += proc.regs.len() as u32;
        let mut anc = anc.clone();
        anc.push(p);
        for s in proc.spawns.iter().rev() {
            let child = &prog.procs[s.proc].name;
            let args = s.args.iter().map(|a| chans[*a]).collect();
            stack.push((s.proc, args, format!("{path}/{child}"), anc.clone()));
        }
    }
    Ok((comps, names))
}

fn term_msgs(t: &RTerm, out: &mut BTreeSet<crate::frontend::resolve::MsgRef>) {
    match &t.kind {
        RKind::Send { msg, .. } | RKind::Recv { msg } => {
            out.insert(*msg);
        }
        _ => {}
    }
    for c in t.children() {
        term_msgs(c, out);
    }
}

impl Component {
    fn msg(&self, k: MsgKey) -> MsgKey {
        let m = msg_of_key(k);
        self.chans[m.ep] << 8 | m.msg as u32
    }

    fn globalize(&self, idx: usize, log: &ExecutionLog) -> ExecutionLog {
        let v = |v: &ValId| (idx as u32) << 20 | *v;
        let d = |d: &LogDuration| match d {
            LogDuration::Msg(m) => LogDuration::Msg(self.msg(*m)),
            x => *x,
        };
        let cycles = log
            .cycles
            .iter()
            .map(|c| {
                c.iter()
                    .map(|a| match a {
                        Action::Create { v: x, regs, vals } => Action::create(
                            v(x),
                            &regs.iter().map(|r| self.reg_base + r).collect::<Vec<_>>(),
                            &vals.iter().map(v).collect::<Vec<_>>(),
                        ),
                        Action::Use(x) => Action::Use(v(x)),
                        Action::Mut(r) => Action::Mut(self.reg_base + r),
                        Action::Send { msg, v: x, dur } => Action::Send { msg: self.msg(*msg), v: v(x), dur: d(dur) },
                        Action::Recv { msg, v: x, dur } => Action::Recv { msg: self.msg(*msg), v: v(x), dur: d(dur) },
                    })
                    .collect()
            })
            .collect();
        ExecutionLog::new(cycles)
    }
}

/// Composes the longest prefix of `a` and `b` on which every message in `sigma`
/// matches. A received value is renamed to the value its sender sent.
pub fn compose_prefix(a: &ExecutionLog, b: &ExecutionLog, sigma: &BTreeSet<MsgKey>) -> ExecutionLog {
    let n = a.len().max(b.len());
    let empty = BTreeSet::new();
    let mut ren_a = BTreeMap::new();
    let mut ren_b = BTreeMap::new();
    let mut m = 0;
    'outer: for i in 0..n {
        let (x, y) = (a.cycles.get(i).unwrap_or(&empty), b.cycles.get(i).unwrap_or(&empty));
        let mut ra = BTreeMap::new();
        let mut rb = BTreeMap::new();
        for (mine, other, ren) in [(x, y, &mut ra), (y, x, &mut rb)] {
            for act in mine {
                let Some(msg) = act.message().filter(|k| sigma.contains(k)) else { continue };
                let hit = other.iter().find_map(|o| match (act, o) {
                    (Action::Send { dur, .. }, Action::Recv { msg: m2, dur: d2, .. }) if *m2 == msg && d2 == dur => {
                        Some(None)
                    }
                    (Action::Recv { dur, v, .. }, Action::Send { msg: m2, dur: d2, v: sv })
                        if *m2 == msg && d2 == dur =>
                    {
                        Some(Some((*v, *sv)))
                    }
                    _ => None,
                });
                match hit {
                    None => break 'outer,
                    Some(Some((from, to))) => {
                        ren.insert(from, to);
                    }
                    Some(None) => {}
                }
            }
        }
        ren_a.extend(ra);
        ren_b.extend(rb);
        m = i + 1;
    }
    let a = a.prefix(m).rename(&ren_a);
    let b = b.prefix(m).rename(&ren_b);
    compose_logs(&a, &b, sigma).expect("prefix matches by construction")
}

/// Logs kept in memory at once by composed mode; beyond this the result is partial.
const STORE_CAP: usize = 100_000;

fn verify_composed(prog: &ResolvedProgram, top: &str, bounds: Bounds) -> Result<VerifyReport, VerifyError> {
    let (comps, names) = instantiate(prog, top)?;
    let mut used = 0u64;
    let mut stored = 0usize;
    let mut complete = true;
    // Logs per component and unrolling count.
    let mut per_comp: Vec<Vec<Vec<ExecutionLog>>> = vec![];
    let mut msgs: Vec<BTreeSet<MsgKey>> = vec![];
    for (idx, c) in comps.iter().enumerate() {
        let proc = &prog.procs[c.proc];
        let th = &proc.threads[c.thread];
        let mut refs = BTreeSet::new();
        term_msgs(&th.body, &mut refs);
        msgs.push(refs.iter().map(|m| c.msg(super::enumerate::msg_key(*m))).collect());
        let mut fam = vec![];
        for term in concretize(th, bounds.iters) {
            let en = Enumerator::new(prog, proc, &term, bounds.slack);
            let mut set = BTreeSet::new();
            en.run(&term, &mut |l| {
                if used >= bounds.budget || stored >= STORE_CAP {
                    complete = false;
                    return false;
                }
                used += 1;
                if set.insert(c.globalize(idx, &l)) {
                    stored += 1;
                }
                true
            });
            fam.push(set.into_iter().collect());
        }
        per_comp.push(fam);
    }
    // Every choice of unrolling per component.
    let mut choices: Vec<Vec<usize>> = vec![vec![]];
    for fam in &per_comp {
        choices =
            choices.into_iter().flat_map(|c| (0..fam.len()).map(move |k| [c.clone(), vec![k]].concat())).collect();
    }
    let mut logs = 0u64;
    for choice in &choices {
        let mut group: BTreeSet<ExecutionLog> = per_comp[0][choice[0]].iter().cloned().collect();
        let mut gmsgs = msgs[0].clone();
        for i in 1..comps.len() {
            let sigma: BTreeSet<MsgKey> = gmsgs.intersection(&msgs[i]).copied().collect();
            let mut next = BTreeSet::new();
            'pairs: for a in &group {
                for b in &per_comp[i][choice[i]] {
                    if used >= bounds.budget {
                        complete = false;
                        break 'pairs;
                    }
                    used += 1;
                    next.insert(compose_prefix(a, b, &sigma));
                    if next.len() >= STORE_CAP {
                        complete = false;
                        break 'pairs;
                    }
                }
            }
            group = next;
            gmsgs.extend(msgs[i].iter().copied());
        }
        for log in group {
            logs += 1;
            if let Err(v) = check_log_safety(&log) {
                let witness = Witness {
                    scope: comps.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", "),
                    iterations: choice.iter().map(|k| k + 1).collect(),
                    trace: names.trace(&log),
                    reason: names.violation(&v),
                    log,
                    violation: v,
                };
                return Ok(VerifyReport {
                    mode: Mode::Composed,
                    bounds,
                    logs,
                    concretizations: choices.len(),
                    complete: true,
                    witness: Some(witness),
                });
            }
        }
        if !complete {
            break;
        }
    }
    Ok(VerifyReport { mode: Mode::Composed, bounds, logs, concretizations: choices.len(), complete, witness: None })
}

/// Number of compositions `verify_program` explores in composed mode.
pub fn composition_count(prog: &ResolvedProgram, top: &str, iters: usize) -> Result<usize, VerifyError> {
    let (comps, _) = instantiate(prog, top)?;
    Ok(iters.max(1).pow(comps.len() as u32))
}

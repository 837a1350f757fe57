use crate::event_graph::{EventGraph, EventId, EventLabel};
use crate::frontend::ast::ThreadKind;
use crate::frontend::desugar::codegen_term;
use crate::frontend::resolve::{ProcId, ResolvedProgram};
use crate::optimizer::{optimize, OptError, PassConfig};
use crate::typecheck::build;

/// State kept for one event. Events with no state are purely combinational.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventState {
    /// Inputs whose arrival is remembered until all of them have arrived.
    pub inputs: Vec<Input>,
    /// Width of the cycle counter of a `Delay(k)` with `k > 0`.
    pub counter_bits: u32,
    /// A handshake may stall, so the attempt is remembered.
    pub wait: bool,
    /// Width of the timer counting from the referenced sync of a dependent mode.
    pub timer_bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Event(EventId),
    /// The timer of this event expiring.
    Timer,
}

impl EventState {
    /// Join-tracking bits; a single input needs none.
    pub fn seen_bits(&self) -> usize {
        if self.inputs.len() > 1 {
            self.inputs.len()
        } else {
            0
        }
    }

    pub fn register_bits(&self) -> u32 {
        self.seen_bits() as u32 + self.counter_bits + self.wait as u32 + self.timer_bits
    }
}

/// How one thread's optimized event graph is realized in hardware.
#[derive(Debug, Clone)]
pub struct FsmPlan {
    pub proc: ProcId,
    pub thread: usize,
    pub kind: ThreadKind,
    pub graph: EventGraph,
    /// Completion of one loop iteration.
    pub done: EventId,
    /// Events at which a recursive thread starts its next iteration.
    pub restarts: Vec<EventId>,
    /// The next iteration starts in the same cycle it is signalled. False when that
    /// would form a combinational loop; the restart is then registered.
    pub comb_restart: bool,
    /// FSM copies; recursive threads alternate between two so iterations can overlap.
    pub copies: usize,
    pub states: Vec<EventState>,
}

impl FsmPlan {
    pub fn register_bits(&self) -> u32 {
        self.states.iter().map(|s| s.register_bits()).sum::<u32>() * self.copies as u32
    }
}

pub(crate) fn bits_for(k: u32) -> u32 {
    32 - k.leading_zeros()
}

/// Events whose `current` depends combinationally on the root's.
fn comb_reach(g: &EventGraph) -> Vec<bool> {
    let mut r = vec![false; g.len()];
    r[g.entry.idx()] = true;
    for e in g.ids() {
        let hit = |p: &EventId| r[p.idx()];
        let v = match g.label(e) {
            EventLabel::Root => e == g.entry,
            EventLabel::Delay { k: 0, preds } | EventLabel::Join { preds } => preds.iter().any(hit),
            EventLabel::Delay { .. } => false,
            EventLabel::Branch { pred, .. } | EventLabel::MsgSync { pred, pin: None, .. } => hit(pred),
            EventLabel::MsgSync { pred, pin: Some((p, k)), .. } => hit(pred) || (*k == 0 && hit(p)),
        };
        r[e.idx()] = v;
    }
    r
}

fn state_of(prog: &ResolvedProgram, proc: ProcId, g: &EventGraph, e: EventId) -> EventState {
    let p = &prog.procs[proc];
    match g.label(e) {
        EventLabel::Delay { k, preds } => EventState {
            inputs: preds.iter().map(|p| Input::Event(*p)).collect(),
            counter_bits: if *k > 0 { bits_for(*k) } else { 0 },
            ..Default::default()
        },
        EventLabel::MsgSync { msg, pred, pin } => {
            let info = prog.msg(p, *msg);
            let side = p.endpoints[msg.ep].side;
            // The peer's handshake port is present iff the peer side is dynamic.
            let wait = matches!(info.sync_of(side.flip()), crate::frontend::resolve::Sync::Dynamic);
            let (inputs, timer_bits) = match pin {
                None => (vec![Input::Event(*pred)], 0),
                Some((q, 0)) if q == pred => (vec![Input::Event(*pred)], 0),
                Some((q, 0)) => (vec![Input::Event(*pred), Input::Event(*q)], 0),
                Some((_, k)) => (vec![Input::Event(*pred), Input::Timer], bits_for(*k)),
            };
            EventState { inputs, wait, timer_bits, ..Default::default() }
        }
        _ => EventState::default(),
    }
}

/// Lowers one thread: builds its single-iteration graph, optimizes it, and assigns
/// state to each event.
pub fn gen_fsm(prog: &ResolvedProgram, proc: ProcId, thread: usize, cfg: PassConfig) -> Result<FsmPlan, OptError> {
    let p = &prog.procs[proc];
    let th = &p.threads[thread];
    let tc = build(prog, p, &codegen_term(th));
    let mut graph = tc.graph;
    let map = optimize(&mut graph, cfg)?;
    let at = |e: EventId| map[e.idx()].expect("optimizer maps every event");
    let done = at(tc.ty.start);
    let mut restarts: Vec<EventId> = tc.recurse_points.iter().map(|e| at(*e)).collect();
    restarts.sort();
    restarts.dedup();
    let reach = comb_reach(&graph);
    let comb_restart = match th.kind {
        ThreadKind::Loop => !reach[done.idx()],
        ThreadKind::Recursive => !restarts.iter().any(|e| reach[e.idx()]),
    };
    let states = graph.ids().map(|e| state_of(prog, proc, &graph, e)).collect();
    let copies = match th.kind {
        ThreadKind::Loop => 1,
        ThreadKind::Recursive => 2,
    };
    Ok(FsmPlan { proc, thread, kind: th.kind, graph, done, restarts, comb_restart, copies, states })
}

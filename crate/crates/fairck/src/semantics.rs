//! Operational semantics: transitions, traces, synchronization and the
//! reference reachability analyses.
//!
//! The transition relation treats sends and receives asymmetrically. An
//! output `!x` is enabled only when the continuation on `x` is defined
//! (nobody sends into the void), while an input branch is receptive: it can
//! receive any label of the alphabet, moving to `Nil` on a label it does not
//! actually support. A trace, by contrast, only ever passes through defined
//! states, so the actions extending a trace are exactly those whose target is
//! non-`Nil`, for both polarities.
//!
//! A client/server pair reduces by synchronizing complementary actions
//! ([`reduce`]); configurations and their reductions form a finite graph
//! ([`config_graph`]).
//!
//! The `oracle_*` functions at the bottom decide fair termination and both
//! compliance properties by breadth-first reachability over these graphs,
//! with no inference rules involved. They exist to cross-check the rule-based
//! checkers: the two sides are developed independently and are compared on
//! enumerated and randomized systems by `fairck selftest` and the acceptance
//! suite.

use std::collections::HashMap;

use crate::system::{Node, Polarity, SessionSystem, StateRef};
use crate::witness::{Verdict, Witness};

/// A polarized message: `?x` receives label `x`, `!x` sends it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub polarity: Polarity,
    pub label: usize,
}

impl Action {
    pub fn new(polarity: Polarity, label: usize) -> Action {
        Action { polarity, label }
    }

    /// The complementary action that synchronizes with this one.
    pub fn co(self) -> Action {
        Action {
            polarity: self.polarity.dual(),
            label: self.label,
        }
    }

    pub fn render(&self, sys: &SessionSystem) -> String {
        format!("{}{}", self.polarity.symbol(), sys.alphabet().label(self.label))
    }

    /// Parses the rendering produced by [`render`](Self::render), e.g.
    /// `"?true"` or `"!z"`.
    pub fn parse(sys: &SessionSystem, text: &str) -> Option<Action> {
        let mut chars = text.chars();
        let polarity = match chars.next() {
            Some('?') => Polarity::In,
            Some('!') => Polarity::Out,
            _ => return None,
        };
        let label = sys.alphabet().lookup(chars.as_str())?;
        Some(Action { polarity, label })
    }
}

/// A sequence of actions performed by a single session type.
pub type Trace = Vec<Action>;

pub fn render_trace(sys: &SessionSystem, trace: &[Action]) -> Vec<String> {
    trace.iter().map(|a| a.render(sys)).collect()
}

/// A client paired with a server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub client: StateRef,
    pub server: StateRef,
}

impl Config {
    pub fn new(client: StateRef, server: StateRef) -> Config {
        Config { client, server }
    }

    pub fn describe(&self, sys: &SessionSystem) -> String {
        format!("⟨{}, {}⟩", sys.describe(self.client), sys.describe(self.server))
    }
}

/// The single-step transition function. Inputs are receptive (any label,
/// possibly moving to `Nil`); outputs require a defined continuation; `Nil`
/// and polarity mismatches do not move.
pub fn step(sys: &SessionSystem, s: StateRef, action: Action) -> Option<StateRef> {
    match sys.node(s) {
        Node::Nil => None,
        Node::Branch { polarity, cont } => {
            if *polarity != action.polarity {
                return None;
            }
            let target = cont[action.label];
            match polarity {
                Polarity::In => Some(target),
                Polarity::Out => (target != sys.nil()).then_some(target),
            }
        }
    }
}

/// Runs a whole trace from `s`, returning the state it leaves the system in.
/// The result may be `Nil` (after receiving an unsupported label); `None`
/// means some step was not enabled at all.
pub fn residual(sys: &SessionSystem, s: StateRef, trace: &[Action]) -> Option<StateRef> {
    let mut cur = s;
    for &a in trace {
        cur = step(sys, cur, a)?;
    }
    Some(cur)
}

/// The actions that extend a trace of `s` by one step: those leading to a
/// defined state. In alphabet order; all share the polarity of `s`.
pub fn trace_next(sys: &SessionSystem, s: StateRef) -> Vec<Action> {
    match sys.polarity(s) {
        None => Vec::new(),
        Some(p) => sys
            .dom(s)
            .into_iter()
            .map(|x| Action::new(p, x))
            .collect(),
    }
}

/// Whether `trace` is a trace of `s`: every step enabled and the residual
/// defined. The empty trace is a trace of every defined state.
pub fn is_trace(sys: &SessionSystem, s: StateRef, trace: &[Action]) -> bool {
    matches!(residual(sys, s, trace), Some(r) if sys.is_defined(r))
}

/// Whether `trace` is a trace of `s` that no action extends, i.e. it ends in
/// a terminated state (`end!` or `end?`).
pub fn is_maximal_trace(sys: &SessionSystem, s: StateRef, trace: &[Action]) -> bool {
    match residual(sys, s, trace) {
        Some(r) => sys.is_defined(r) && sys.dom(r).is_empty(),
        None => false,
    }
}

/// Checks that every trace of `t` is a trace of `s`. On failure returns the
/// shortest offending trace (ties broken towards the alphabet order).
pub fn trace_inclusion(sys: &SessionSystem, t: StateRef, s: StateRef) -> Result<(), Trace> {
    if !sys.is_defined(t) {
        return Ok(());
    }
    if !sys.is_defined(s) {
        // The empty trace already separates them.
        return Err(Vec::new());
    }
    let mut nodes: Vec<(StateRef, StateRef)> = vec![(t, s)];
    let mut index: HashMap<(StateRef, StateRef), usize> = HashMap::from([((t, s), 0)]);
    let mut parent: Vec<Option<(usize, Action)>> = vec![None];
    let mut head = 0;
    while head < nodes.len() {
        let (a, b) = nodes[head];
        let next_b: Vec<Action> = trace_next(sys, b);
        for action in trace_next(sys, a) {
            if !next_b.contains(&action) {
                let mut trace = path_actions(&parent, head);
                trace.push(action);
                return Err(trace);
            }
            let pair = (
                step(sys, a, action).expect("trace_next actions are enabled"),
                step(sys, b, action).expect("shared action is enabled"),
            );
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(pair) {
                e.insert(nodes.len());
                nodes.push(pair);
                parent.push(Some((head, action)));
            }
        }
        head += 1;
    }
    Ok(())
}

fn path_actions(parent: &[Option<(usize, Action)>], mut node: usize) -> Vec<Action> {
    let mut rev = Vec::new();
    while let Some((prev, action)) = parent[node] {
        rev.push(action);
        node = prev;
    }
    rev.reverse();
    rev
}

/// All synchronizations available to a configuration, in alphabet order.
/// Each is reported as the server's action paired with the configuration it
/// leads to; the receiving side may end up in `Nil`.
pub fn reduce(sys: &SessionSystem, config: Config) -> Vec<(Action, Config)> {
    let Some(server_polarity) = sys.polarity(config.server) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for label in 0..sys.alphabet().len() {
        let action = Action::new(server_polarity, label);
        let (Some(server), Some(client)) = (
            step(sys, config.server, action),
            step(sys, config.client, action.co()),
        ) else {
            continue;
        };
        out.push((action, Config { client, server }));
    }
    out
}

/// The reachable configuration graph of a client/server pair. Nodes are in
/// breadth-first discovery order (node 0 is the root); `parent` records the
/// BFS tree, giving shortest synchronization paths.
pub struct ConfigGraph {
    pub nodes: Vec<Config>,
    pub edges: Vec<Vec<(Action, usize)>>,
    pub parent: Vec<Option<(usize, Action)>>,
    index: HashMap<Config, usize>,
}

impl ConfigGraph {
    pub fn index_of(&self, config: Config) -> Option<usize> {
        self.index.get(&config).copied()
    }

    /// The synchronization sequence from the root to `node` along the BFS
    /// tree; shortest, with ties broken towards the alphabet order.
    pub fn path_to(&self, node: usize) -> Vec<Action> {
        path_actions(&self.parent, node)
    }
}

pub fn config_graph(sys: &SessionSystem, root: Config) -> ConfigGraph {
    let mut graph = ConfigGraph {
        nodes: vec![root],
        edges: Vec::new(),
        parent: vec![None],
        index: HashMap::from([(root, 0)]),
    };
    let mut head = 0;
    while head < graph.nodes.len() {
        let mut out = Vec::new();
        for (action, next) in reduce(sys, graph.nodes[head]) {
            let target = match graph.index.get(&next) {
                Some(&i) => i,
                None => {
                    let i = graph.nodes.len();
                    graph.index.insert(next, i);
                    graph.nodes.push(next);
                    graph.parent.push(Some((head, action)));
                    i
                }
            };
            out.push((action, target));
        }
        graph.edges.push(out);
        head += 1;
    }
    graph
}

/// Reference decision procedure for fair termination: every state reachable
/// from `s` along trace steps must itself reach, along trace steps, a state
/// with an empty domain (a completed session). `Nil` terminates vacuously,
/// having no traces.
pub fn oracle_fair_termination(sys: &SessionSystem, s: StateRef) -> Verdict {
    if !sys.is_defined(s) {
        return Verdict::holds(None);
    }
    let mut nodes: Vec<StateRef> = vec![s];
    let mut index: HashMap<StateRef, usize> = HashMap::from([(s, 0)]);
    let mut parent: Vec<Option<(usize, Action)>> = vec![None];
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut head = 0;
    while head < nodes.len() {
        let mut out = Vec::new();
        for action in trace_next(sys, nodes[head]) {
            let target = step(sys, nodes[head], action).expect("trace_next actions are enabled");
            let i = match index.get(&target) {
                Some(&i) => i,
                None => {
                    let i = nodes.len();
                    index.insert(target, i);
                    nodes.push(target);
                    parent.push(Some((head, action)));
                    i
                }
            };
            out.push(i);
        }
        edges.push(out);
        head += 1;
    }

    let mut can_finish: Vec<bool> = nodes.iter().map(|&n| sys.dom(n).is_empty()).collect();
    loop {
        let mut changed = false;
        for i in 0..nodes.len() {
            if !can_finish[i] && edges[i].iter().any(|&j| can_finish[j]) {
                can_finish[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    match (0..nodes.len()).find(|&i| !can_finish[i]) {
        None => Verdict::holds(None),
        Some(bad) => Verdict::fails(Some(Witness::Trace {
            trace: render_trace(sys, &path_actions(&parent, bad)),
            terminal: sys.describe(nodes[bad]),
            note: "residual with no terminating extension".to_string(),
        })),
    }
}

fn is_success(sys: &SessionSystem, config: Config) -> bool {
    sys.is_win(config.client) && sys.is_defined(config.server)
}

/// Reference decision procedure for compliance: every stuck configuration
/// reachable from `root` must have a satisfied client (`end!`) facing a
/// defined server.
pub fn oracle_compliance(sys: &SessionSystem, root: Config) -> Verdict {
    let graph = config_graph(sys, root);
    for (i, &config) in graph.nodes.iter().enumerate() {
        if graph.edges[i].is_empty() && !is_success(sys, config) {
            return Verdict::fails(Some(Witness::Trace {
                trace: render_trace(sys, &graph.path_to(i)),
                terminal: config.describe(sys),
                note: "stuck configuration without client success".to_string(),
            }));
        }
    }
    Verdict::holds(None)
}

/// Reference decision procedure for fair compliance: from every reachable
/// configuration, some sequence of synchronizations leads to a satisfied
/// client facing a defined server.
pub fn oracle_fair_compliance(sys: &SessionSystem, root: Config) -> Verdict {
    let graph = config_graph(sys, root);
    let mut can_succeed: Vec<bool> = graph
        .nodes
        .iter()
        .map(|&c| is_success(sys, c))
        .collect();
    loop {
        let mut changed = false;
        for i in 0..graph.nodes.len() {
            if !can_succeed[i] && graph.edges[i].iter().any(|&(_, j)| can_succeed[j]) {
                can_succeed[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    match (0..graph.nodes.len()).find(|&i| !can_succeed[i]) {
        None => Verdict::holds(None),
        Some(bad) => Verdict::fails(Some(Witness::Trace {
            trace: render_trace(sys, &graph.path_to(bad)),
            terminal: graph.nodes[bad].describe(sys),
            note: "configuration from which success is unreachable".to_string(),
        })),
    }
}

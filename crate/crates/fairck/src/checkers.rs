//! The rule-based deciders for termination, compliance and subtyping.
//!
//! Each property is phrased as a finite system of inference rules over a
//! universe of judgments extracted from the state table, then handed to the
//! fixpoint engine in [`gis`](crate::gis). Safety properties are coinductive
//! interpretations; the fairness refinements bound them, either with corules
//! or, for subtyping, with a convergence analysis compiled into a product
//! graph. None of this code inspects traces or reachability directly, which
//! is what makes agreement with the oracles in
//! [`semantics`](crate::semantics) informative.

use std::collections::{HashMap, HashSet};

use crate::gis::{generalized, JudgmentSet, RuleSystem};
use crate::semantics::{Action, Config};
use crate::system::{Polarity, SessionSystem, StateRef};
use crate::witness::Verdict;

fn dedup_stable(mut premises: Vec<usize>) -> Vec<usize> {
    let mut seen = HashSet::new();
    premises.retain(|&p| seen.insert(p));
    premises
}

/// The judgment universe and rules for fair termination of a single type.
///
/// Judgments are the states reachable from the root. Rules: `t-nil` accepts
/// the undefined state outright and `t-all` concludes a branch from all of
/// its continuations, so the coinductive reading is vacuous on its own. The
/// corules `t-any` conclude a branch from any single offered continuation;
/// their inductive closure contains exactly the states that can reach a
/// terminated branch, and pruning the coinductive reading within that bound
/// keeps the states that can reach termination from everywhere they lead.
pub struct TermInstance {
    pub universe: Vec<StateRef>,
    pub rules: RuleSystem,
    pub corules: RuleSystem,
    root: usize,
    index: HashMap<StateRef, usize>,
    actions: HashMap<(usize, usize), Action>,
}

impl TermInstance {
    pub fn new(sys: &SessionSystem, root: StateRef) -> TermInstance {
        let universe: Vec<StateRef> = sys.reachable(&[root]).into_iter().collect();
        let index: HashMap<StateRef, usize> =
            universe.iter().enumerate().map(|(j, &s)| (s, j)).collect();
        let mut rules = RuleSystem::new(universe.len());
        let mut corules = RuleSystem::new(universe.len());
        let mut actions = HashMap::new();
        for (j, &s) in universe.iter().enumerate() {
            if !sys.is_defined(s) {
                rules.add_rule(j, "t-nil", vec![]);
                continue;
            }
            let polarity = sys.polarity(s).expect("defined states have a polarity");
            let all: Vec<usize> = (0..sys.alphabet().len())
                .map(|x| index[&sys.cont(s, x).expect("defined states are total")])
                .collect();
            rules.add_rule(j, "t-all", dedup_stable(all));
            for x in sys.dom(s) {
                let action = Action::new(polarity, x);
                let premise = index[&sys.cont(s, x).expect("dom labels have continuations")];
                corules.add_rule(j, format!("t-any({})", action.render(sys)), vec![premise]);
                actions.entry((j, premise)).or_insert(action);
            }
        }
        TermInstance {
            root: index[&root],
            universe,
            rules,
            corules,
            index,
            actions,
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn judgment(&self, s: StateRef) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn render(&self, sys: &SessionSystem, j: usize) -> String {
        sys.describe(self.universe[j])
    }

    /// The action labelling the rule edge between two judgments, if any.
    pub fn action(&self, from: usize, to: usize) -> Option<Action> {
        self.actions.get(&(from, to)).copied()
    }
}

/// Whether every run of the type can be extended to a terminated branch.
pub fn fair_termination(sys: &SessionSystem, root: StateRef) -> Verdict {
    let inst = TermInstance::new(sys, root);
    let gen = generalized(&inst.rules, &inst.corules);
    if gen.set.contains(inst.root()) {
        Verdict::holds(None)
    } else {
        Verdict::fails(None)
    }
}

/// The judgment universe and rules for (fair) compliance of a client with a
/// server.
///
/// Judgments are the configurations reachable from the root through
/// synchronizations. `c-success` accepts a configuration whose client has
/// terminated on the winning side while the server is still defined;
/// `c-inp-out` and `c-out-inp` conclude a configuration from the residuals
/// of every message the sending side may choose. The `c-sync` corules follow
/// a single synchronization each, so their closure bounds compliance by the
/// configurations from which success is inductively reachable.
pub struct CompInstance {
    pub universe: Vec<Config>,
    pub rules: RuleSystem,
    pub corules: RuleSystem,
    index: HashMap<Config, usize>,
    actions: HashMap<(usize, usize), Action>,
}

/// The synchronizations a configuration offers, labelled by the server's
/// action, together with the resulting configurations. Empty when the two
/// sides cannot exchange a message.
fn sync_premises(sys: &SessionSystem, config: Config) -> Vec<(Action, Config)> {
    let (client, server) = (config.client, config.server);
    match (sys.polarity(client), sys.polarity(server)) {
        (Some(Polarity::In), Some(Polarity::Out)) => sys
            .dom(server)
            .into_iter()
            .map(|x| {
                let next = Config::new(
                    sys.cont(client, x).expect("inputs are total"),
                    sys.cont(server, x).expect("dom labels have continuations"),
                );
                (Action::new(Polarity::Out, x), next)
            })
            .collect(),
        (Some(Polarity::Out), Some(Polarity::In)) => sys
            .dom(client)
            .into_iter()
            .map(|x| {
                let next = Config::new(
                    sys.cont(client, x).expect("dom labels have continuations"),
                    sys.cont(server, x).expect("inputs are total"),
                );
                (Action::new(Polarity::In, x), next)
            })
            .collect(),
        _ => Vec::new(),
    }
}

impl CompInstance {
    pub fn new(sys: &SessionSystem, root: Config) -> CompInstance {
        let mut universe = vec![root];
        let mut index = HashMap::from([(root, 0)]);
        let mut at = 0;
        while at < universe.len() {
            let config = universe[at];
            at += 1;
            for (_, next) in sync_premises(sys, config) {
                if !index.contains_key(&next) {
                    index.insert(next, universe.len());
                    universe.push(next);
                }
            }
        }
        let mut rules = RuleSystem::new(universe.len());
        let mut corules = RuleSystem::new(universe.len());
        let mut actions = HashMap::new();
        for (j, &config) in universe.iter().enumerate() {
            if sys.is_win(config.client) && sys.is_defined(config.server) {
                rules.add_rule(j, "c-success", vec![]);
            }
            let syncs = sync_premises(sys, config);
            if syncs.is_empty() {
                continue;
            }
            let name = match sys.polarity(config.client) {
                Some(Polarity::In) => "c-inp-out",
                _ => "c-out-inp",
            };
            let premises: Vec<usize> = syncs.iter().map(|(_, next)| index[next]).collect();
            rules.add_rule(j, name, dedup_stable(premises));
            for (action, next) in syncs {
                let premise = index[&next];
                // corules are named after the client's half of the exchange
                corules.add_rule(
                    j,
                    format!("c-sync({})", action.co().render(sys)),
                    vec![premise],
                );
                actions.entry((j, premise)).or_insert(action);
            }
        }
        CompInstance {
            universe,
            rules,
            corules,
            index,
            actions,
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn judgment(&self, config: Config) -> Option<usize> {
        self.index.get(&config).copied()
    }

    pub fn render(&self, sys: &SessionSystem, j: usize) -> String {
        self.universe[j].describe(sys)
    }

    pub fn action(&self, from: usize, to: usize) -> Option<Action> {
        self.actions.get(&(from, to)).copied()
    }
}

/// Whether every maximal run of the session leaves the client satisfied:
/// all reachable configurations that cannot synchronize any further have a
/// winning client facing a defined server.
pub fn compliance(sys: &SessionSystem, client: StateRef, server: StateRef) -> Verdict {
    let inst = CompInstance::new(sys, Config::new(client, server));
    if inst.rules.gfp().set.contains(inst.root()) {
        Verdict::holds(None)
    } else {
        Verdict::fails(None)
    }
}

/// Compliance strengthened by fairness: client success must stay reachable
/// along every run, not merely hold at the runs' endpoints.
pub fn fair_compliance(sys: &SessionSystem, client: StateRef, server: StateRef) -> Verdict {
    let inst = CompInstance::new(sys, Config::new(client, server));
    let gen = generalized(&inst.rules, &inst.corules);
    if gen.set.contains(inst.root()) {
        Verdict::holds(None)
    } else {
        Verdict::fails(None)
    }
}

/// The judgment universe and rules for (fair) subtyping between two types.
///
/// Judgments are pairs of states. `s-nil` accepts any pair with an undefined
/// left side, `s-end` any terminated left side facing a defined right side.
/// `s-inp` lets the right side offer more inputs, `s-out` lets it offer
/// fewer outputs, and both step into the residuals of the labels the two
/// sides share. The coinductive reading is safety subtyping; bounding it by
/// the convergent pairs (see [`ProductGraph`]) gives the fair version.
pub struct SubInstance {
    pub universe: Vec<(StateRef, StateRef)>,
    pub rules: RuleSystem,
    index: HashMap<(StateRef, StateRef), usize>,
    actions: HashMap<(usize, usize), Action>,
}

/// The stepping-rule premises available at a pair, labelled by the shared
/// action. Empty when neither `s-inp` nor `s-out` applies.
fn sub_premises(
    sys: &SessionSystem,
    (a, b): (StateRef, StateRef),
) -> Vec<(Action, (StateRef, StateRef))> {
    let follow = |labels: Vec<usize>, polarity: Polarity| {
        labels
            .into_iter()
            .map(|x| {
                let next = (
                    sys.cont(a, x).expect("shared labels are offered by both"),
                    sys.cont(b, x).expect("shared labels are offered by both"),
                );
                (Action::new(polarity, x), next)
            })
            .collect()
    };
    let subset = |xs: &[usize], ys: &[usize]| xs.iter().all(|x| ys.contains(x));
    match (sys.polarity(a), sys.polarity(b)) {
        (Some(Polarity::In), Some(Polarity::In)) => {
            let (da, db) = (sys.dom(a), sys.dom(b));
            if !da.is_empty() && subset(&da, &db) {
                follow(da, Polarity::In)
            } else {
                Vec::new()
            }
        }
        (Some(Polarity::Out), Some(Polarity::Out)) => {
            let (da, db) = (sys.dom(a), sys.dom(b));
            if !db.is_empty() && subset(&db, &da) {
                follow(db, Polarity::Out)
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    }
}

impl SubInstance {
    pub fn new(sys: &SessionSystem, left: StateRef, right: StateRef) -> SubInstance {
        let root = (left, right);
        let mut universe = vec![root];
        let mut index = HashMap::from([(root, 0)]);
        let mut at = 0;
        while at < universe.len() {
            let pair = universe[at];
            at += 1;
            for (_, next) in sub_premises(sys, pair) {
                if !index.contains_key(&next) {
                    index.insert(next, universe.len());
                    universe.push(next);
                }
            }
        }
        let mut rules = RuleSystem::new(universe.len());
        let mut actions = HashMap::new();
        for (j, &pair) in universe.iter().enumerate() {
            let (a, b) = pair;
            if !sys.is_defined(a) {
                rules.add_rule(j, "s-nil", vec![]);
                continue;
            }
            if sys.is_end(a) && sys.is_defined(b) {
                rules.add_rule(j, "s-end", vec![]);
                continue;
            }
            let steps = sub_premises(sys, pair);
            if steps.is_empty() {
                continue;
            }
            let name = match sys.polarity(a) {
                Some(Polarity::In) => "s-inp",
                _ => "s-out",
            };
            let premises: Vec<usize> = steps.iter().map(|(_, next)| index[next]).collect();
            rules.add_rule(j, name, dedup_stable(premises));
            for (action, next) in steps {
                actions.entry((j, index[&next])).or_insert(action);
            }
        }
        SubInstance {
            universe,
            rules,
            index,
            actions,
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn judgment(&self, pair: (StateRef, StateRef)) -> Option<usize> {
        self.index.get(&pair).copied()
    }

    pub fn render(&self, sys: &SessionSystem, j: usize) -> String {
        let (a, b) = self.universe[j];
        format!("{} ≤ {}", sys.describe(a), sys.describe(b))
    }

    pub fn action(&self, from: usize, to: usize) -> Option<Action> {
        self.actions.get(&(from, to)).copied()
    }

    /// The bound for the fair interpretation: pairs whose left side is
    /// undefined or which converge. Every pair of this universe with both
    /// sides defined appears in the product graph of the root, because rule
    /// premises only follow actions both sides share.
    pub fn bound(&self, sys: &SessionSystem) -> JudgmentSet {
        let (left, right) = self.universe[0];
        let graph = if sys.is_defined(left) && sys.is_defined(right) {
            Some(ProductGraph::new(sys, left, right))
        } else {
            None
        };
        let mut bound = JudgmentSet::empty(self.universe.len());
        for (j, &(a, b)) in self.universe.iter().enumerate() {
            let converging = if !sys.is_defined(a) {
                true
            } else if !sys.is_defined(b) {
                false
            } else {
                let graph = graph.as_ref().expect("defined pairs imply a defined root");
                graph
                    .converges_at((a, b))
                    .expect("universe pairs appear in the product graph")
            };
            if converging {
                bound.insert(j);
            }
        }
        bound
    }

    /// The bound as a literal rule system: an axiom at every converging pair.
    /// Its least fixpoint together with the stepping rules carries the finite
    /// derivations that justify a positive fair verdict. Pairs with an
    /// undefined left side stay out; `s-nil` already grounds those.
    pub fn corules(&self, sys: &SessionSystem) -> RuleSystem {
        let bound = self.bound(sys);
        let mut corules = RuleSystem::new(self.universe.len());
        for j in bound.iter() {
            let (a, _) = self.universe[j];
            if sys.is_defined(a) {
                corules.add_rule(j, "s-converge", vec![]);
            }
        }
        corules
    }
}

/// Whether any client of the left type is also a client of the right type,
/// ignoring fairness: the right side may widen inputs and narrow outputs.
pub fn subtyping(sys: &SessionSystem, left: StateRef, right: StateRef) -> Verdict {
    let inst = SubInstance::new(sys, left, right);
    if inst.rules.gfp().set.contains(inst.root()) {
        Verdict::holds(None)
    } else {
        Verdict::fails(None)
    }
}

/// Subtyping strengthened by fairness: replacing the left type by the right
/// one must also preserve every client's ability to reach success.
pub fn fair_subtyping(sys: &SessionSystem, left: StateRef, right: StateRef) -> Verdict {
    let inst = SubInstance::new(sys, left, right);
    let bound = inst.bound(sys);
    if inst.rules.prune_within(&bound).set.contains(inst.root()) {
        Verdict::holds(None)
    } else {
        Verdict::fails(None)
    }
}

/// The synchronous product of two types, annotated with the analysis behind
/// the fair-subtyping bound.
///
/// Nodes are pairs of defined states reached by following actions both
/// sides offer. At each node the left side may also have `escape` actions
/// the right side lacks. The left type converges to the right one at a node
/// when the pair is in the least set `C` closed under: a node is in `C` if
/// it has a shared output leading into `C` (the left side can actively steer
/// the session towards agreement), or if no escape is reachable from it
/// through nodes outside the steering set. A node outside `C` has a run
/// along which the left side keeps its extra actions available without the
/// right side ever regaining control, and such a run separates their
/// clients.
pub struct ProductGraph {
    pub pairs: Vec<(StateRef, StateRef)>,
    index: HashMap<(StateRef, StateRef), usize>,
    edges: Vec<Vec<(Action, usize)>>,
    escapes: Vec<Vec<Action>>,
    converging: Vec<bool>,
    steering: Vec<bool>,
}

impl ProductGraph {
    /// Builds the product reachable from `(left, right)`; both states must
    /// be defined.
    pub fn new(sys: &SessionSystem, left: StateRef, right: StateRef) -> ProductGraph {
        assert!(sys.is_defined(left) && sys.is_defined(right));
        let root = (left, right);
        let mut pairs = vec![root];
        let mut index = HashMap::from([(root, 0)]);
        let mut edges: Vec<Vec<(Action, usize)>> = Vec::new();
        let mut escapes: Vec<Vec<Action>> = Vec::new();
        let mut at = 0;
        while at < pairs.len() {
            let (a, b) = pairs[at];
            at += 1;
            let (pa, pb) = (
                sys.polarity(a).expect("product nodes are defined"),
                sys.polarity(b).expect("product nodes are defined"),
            );
            let (da, db) = (sys.dom(a), sys.dom(b));
            let mut out_edges = Vec::new();
            let mut out_escapes = Vec::new();
            for x in da {
                if pa == pb && db.contains(&x) {
                    let next = (
                        sys.cont(a, x).expect("dom labels have continuations"),
                        sys.cont(b, x).expect("dom labels have continuations"),
                    );
                    let target = *index.entry(next).or_insert_with(|| {
                        pairs.push(next);
                        pairs.len() - 1
                    });
                    out_edges.push((Action::new(pa, x), target));
                } else {
                    out_escapes.push(Action::new(pa, x));
                }
            }
            edges.push(out_edges);
            escapes.push(out_escapes);
        }

        // grow the converging set until it stabilizes; each step recomputes
        // which nodes can steer (shared output into the current set) and
        // which still have an uncontrolled path to an escape
        let n = pairs.len();
        let mut converging = vec![false; n];
        let mut steering = vec![false; n];
        loop {
            for i in 0..n {
                steering[i] = edges[i]
                    .iter()
                    .any(|&(action, t)| action.polarity == Polarity::Out && converging[t]);
            }
            let mut doomed: Vec<bool> = (0..n)
                .map(|i| !steering[i] && !escapes[i].is_empty())
                .collect();
            loop {
                let mut changed = false;
                for i in 0..n {
                    if doomed[i] || steering[i] {
                        continue;
                    }
                    if edges[i].iter().any(|&(_, t)| doomed[t]) {
                        doomed[i] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            let next: Vec<bool> = (0..n).map(|i| steering[i] || !doomed[i]).collect();
            if next == converging {
                break;
            }
            converging = next;
        }
        ProductGraph {
            pairs,
            index,
            edges,
            escapes,
            converging,
            steering,
        }
    }

    pub fn converges_at(&self, pair: (StateRef, StateRef)) -> Option<bool> {
        self.index.get(&pair).map(|&i| self.converging[i])
    }

    pub fn root_converges(&self) -> bool {
        self.converging[0]
    }

    /// For a non-converging pair: a run through nodes that cannot steer,
    /// ending with an action only the left side has. The result is a trace
    /// of the left type that the right type lacks.
    pub fn escape_path(&self, pair: (StateRef, StateRef)) -> Option<Vec<Action>> {
        let start = *self.index.get(&pair)?;
        if self.converging[start] {
            return None;
        }
        let mut parent: Vec<Option<(usize, Action)>> = vec![None; self.pairs.len()];
        let mut queue = std::collections::VecDeque::from([start]);
        let mut seen = vec![false; self.pairs.len()];
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            if let Some(&escape) = self.escapes[i].first() {
                let mut trace = vec![escape];
                let mut at = i;
                while let Some((prev, action)) = parent[at] {
                    trace.push(action);
                    at = prev;
                }
                trace.reverse();
                return Some(trace);
            }
            for &(action, t) in &self.edges[i] {
                if !seen[t] && !self.steering[t] {
                    seen[t] = true;
                    parent[t] = Some((i, action));
                    queue.push_back(t);
                }
            }
        }
        None
    }
}

/// Whether the left type converges to the right one: `true` when the left
/// side is undefined, `false` when only the right side is, and otherwise
/// the product-graph analysis at the root.
pub fn converges(sys: &SessionSystem, left: StateRef, right: StateRef) -> bool {
    if !sys.is_defined(left) {
        return true;
    }
    if !sys.is_defined(right) {
        return false;
    }
    ProductGraph::new(sys, left, right).root_converges()
}

//! Evidence for verdicts: derivations, traces and synthesized clients.
//!
//! Every check in this crate answers with a [`Verdict`], and [`explain`] can
//! attach a [`Witness`] that a third party (or the test suite) can replay
//! against the semantics to confirm the verdict without trusting the checker;
//! [`replay`] implements that confirmation. For pairs where plain subtyping
//! holds but its fair refinement does not, [`synth_discriminating_client`]
//! searches for a client telling the two types apart.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::checkers::{
    fair_compliance, fair_subtyping, subtyping, CompInstance, ProductGraph, SubInstance,
    TermInstance,
};
use crate::gis::{generalized, JudgmentSet, Pruning, RuleSystem};
use crate::semantics::{
    config_graph, is_trace, oracle_compliance, oracle_fair_compliance, oracle_fair_termination,
    reduce, render_trace, residual, step, trace_next, Action, Config,
};
use crate::syntax::{elaborate, parse, print};
use crate::system::{Node, Polarity, SessionSystem, StateRef};

/// Outcome of a check, optionally carrying evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn holds(witness: Option<Witness>) -> Verdict {
        Verdict { holds: true, witness }
    }

    pub fn fails(witness: Option<Witness>) -> Verdict {
        Verdict { holds: false, witness }
    }
}

/// One node of an inference-rule derivation: the judgment it establishes,
/// the rule applied, and the subtrees for the rule's premises.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivationNode {
    pub judgment: String,
    pub rule: String,
    pub children: Vec<DerivationNode>,
}

/// A single self-justifying rule application: the root judgment of a check
/// that holds coinductively, together with the premises (all of which hold
/// in the same fixpoint) that keep it justified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Justification {
    pub judgment: String,
    pub rule: String,
    pub premises: Vec<String>,
}

/// Machine-checkable evidence attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A positive answer: a well-founded derivation bounding the judgment
    /// (when corules are involved) and/or the rule application that keeps it
    /// justified in the coinductive fixpoint.
    Derivation {
        bounding: Option<DerivationNode>,
        justification: Option<Justification>,
    },
    /// A path through a transition system ending in a state or configuration
    /// that exhibits the failure (or, for positive trace facts, the fact).
    Trace {
        trace: Vec<String>,
        terminal: String,
        note: String,
    },
    /// A reachable pair of residuals from which the left type can escape
    /// into traces the right type does not have, with no way to force
    /// convergence beforehand.
    Divergence {
        left: String,
        right: String,
        escape_trace: Vec<String>,
        note: String,
    },
    /// A synthesized client, rendered as a self-contained source file.
    Client { source: String, root: String },
    /// Synthesis gave up within its budget; the verdict stands on its own.
    SearchExhausted { budget: usize, note: String },
}

/// A judgment one of the checkers can decide, with its arguments. Used to
/// request explained verdicts and to replay witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    FairTermination(StateRef),
    /// Client first, server second.
    Compliance(StateRef, StateRef),
    FairCompliance(StateRef, StateRef),
    /// Left (smaller) type first.
    Subtyping(StateRef, StateRef),
    FairSubtyping(StateRef, StateRef),
}

impl Check {
    /// The judgment in words, preferring declared names over structure so
    /// the line echoes what the user asked about.
    pub fn describe(&self, sys: &SessionSystem) -> String {
        let show =
            |s: StateRef| sys.name_of(s).map(str::to_string).unwrap_or_else(|| sys.describe(s));
        match *self {
            Check::FairTermination(s) => format!("fair termination of {}", show(s)),
            Check::Compliance(c, s) => format!("compliance of ⟨{}, {}⟩", show(c), show(s)),
            Check::FairCompliance(c, s) => {
                format!("fair compliance of ⟨{}, {}⟩", show(c), show(s))
            }
            Check::Subtyping(a, b) => format!("subtyping {} ≤ {}", show(a), show(b)),
            Check::FairSubtyping(a, b) => format!("fair subtyping {} ≤ {}", show(a), show(b)),
        }
    }
}

/// Runs a check and attaches evidence to the verdict.
///
/// A positive verdict carries the rule application justifying the root in
/// the coinductive fixpoint and, for the corule-bounded checks, the finite
/// derivation placing it inside the bound. A negative verdict carries a path
/// the participants can actually follow into the failure: a residual that
/// cannot finish, a stuck or hopeless configuration, a point where the
/// subtyping rules find no counterpart, or a divergence between the two
/// sides of a subtyping question.
pub fn explain(sys: &SessionSystem, check: Check) -> Verdict {
    match check {
        Check::FairTermination(root) => explain_termination(sys, root),
        Check::Compliance(client, server) => explain_compliance(sys, client, server, false),
        Check::FairCompliance(client, server) => explain_compliance(sys, client, server, true),
        Check::Subtyping(left, right) => explain_subtyping(sys, left, right, false),
        Check::FairSubtyping(left, right) => explain_subtyping(sys, left, right, true),
    }
}

fn justification_at(
    rules: &RuleSystem,
    set: &JudgmentSet,
    j: usize,
    render: &impl Fn(usize) -> String,
) -> Option<Justification> {
    rules.justifying_rule(set, j).map(|rule| Justification {
        judgment: render(j),
        rule: rule.name.clone(),
        premises: rule.premises.iter().map(|&p| render(p)).collect(),
    })
}

/// Walks a refutation out of a pruning. Starting from a removed judgment,
/// repeatedly follow the premise that was removed earliest; rounds strictly
/// decrease, so this reaches a judgment that either fell outside the bound
/// from the start (round 0) or has no applicable rule at all. The actions
/// labelling the steps form a path the session can actually take.
fn descend(
    rules: &RuleSystem,
    pruning: &Pruning,
    action_of: &impl Fn(usize, usize) -> Option<Action>,
    root: usize,
) -> (Vec<Action>, usize) {
    let round = |j: usize| pruning.removed_round[j];
    let mut at = root;
    let mut path = Vec::new();
    loop {
        let k = round(at).expect("refutations descend through removed judgments");
        if k == 0 || rules.rules_for(at).is_empty() {
            return (path, at);
        }
        // Removed judgments never have axioms, and each judgment family in
        // this crate attaches at most one stepping rule.
        debug_assert_eq!(rules.rules_for(at).len(), 1);
        let rule = &rules.rules_for(at)[0];
        let next = rule
            .premises
            .iter()
            .copied()
            .min_by_key(|&p| round(p).unwrap_or(usize::MAX))
            .expect("a pruned judgment has a rule with a removed premise");
        debug_assert!(round(next).unwrap_or(usize::MAX) < k);
        path.push(action_of(at, next).expect("stepping-rule edges carry actions"));
        at = next;
    }
}

fn explain_termination(sys: &SessionSystem, root: StateRef) -> Verdict {
    let inst = TermInstance::new(sys, root);
    let gen = generalized(&inst.rules, &inst.corules);
    let render = |j: usize| inst.render(sys, j);
    let j = inst.root();
    if gen.set.contains(j) {
        return Verdict::holds(Some(Witness::Derivation {
            bounding: gen.bound.derivation(&gen.combined, j, &render),
            justification: justification_at(&inst.rules, &gen.set, j, &render),
        }));
    }
    let (path, terminal) = descend(&inst.rules, &gen.pruning, &|a, b| inst.action(a, b), j);
    Verdict::fails(Some(Witness::Trace {
        trace: render_trace(sys, &path),
        terminal: render(terminal),
        note: "residual with no terminating extension".to_string(),
    }))
}

fn explain_compliance(sys: &SessionSystem, client: StateRef, server: StateRef, fair: bool) -> Verdict {
    let inst = CompInstance::new(sys, Config::new(client, server));
    let render = |j: usize| inst.render(sys, j);
    let j = inst.root();
    if fair {
        let gen = generalized(&inst.rules, &inst.corules);
        if gen.set.contains(j) {
            return Verdict::holds(Some(Witness::Derivation {
                bounding: gen.bound.derivation(&gen.combined, j, &render),
                justification: justification_at(&inst.rules, &gen.set, j, &render),
            }));
        }
        let (path, terminal) = descend(&inst.rules, &gen.pruning, &|a, b| inst.action(a, b), j);
        return Verdict::fails(Some(compliance_failure(sys, &inst, &path, terminal)));
    }
    let pruning = inst.rules.gfp();
    if pruning.set.contains(j) {
        return Verdict::holds(Some(Witness::Derivation {
            bounding: None,
            justification: justification_at(&inst.rules, &pruning.set, j, &render),
        }));
    }
    let (path, terminal) = descend(&inst.rules, &pruning, &|a, b| inst.action(a, b), j);
    Verdict::fails(Some(compliance_failure(sys, &inst, &path, terminal)))
}

fn compliance_failure(
    sys: &SessionSystem,
    inst: &CompInstance,
    path: &[Action],
    terminal: usize,
) -> Witness {
    let note = if inst.rules.rules_for(terminal).is_empty() {
        "stuck configuration without client success"
    } else {
        "configuration from which client success is unreachable"
    };
    Witness::Trace {
        trace: render_trace(sys, path),
        terminal: inst.render(sys, terminal),
        note: note.to_string(),
    }
}

fn explain_subtyping(sys: &SessionSystem, left: StateRef, right: StateRef, fair: bool) -> Verdict {
    let inst = SubInstance::new(sys, left, right);
    let render = |j: usize| inst.render(sys, j);
    let j = inst.root();
    let pruning = if fair {
        inst.rules.prune_within(&inst.bound(sys))
    } else {
        inst.rules.gfp()
    };
    if pruning.set.contains(j) {
        let bounding = if fair {
            let combined = inst.corules(sys).union(&inst.rules);
            combined.lfp().derivation(&combined, j, &render)
        } else {
            None
        };
        return Verdict::holds(Some(Witness::Derivation {
            bounding,
            justification: justification_at(&inst.rules, &pruning.set, j, &render),
        }));
    }
    let (path, terminal) = descend(&inst.rules, &pruning, &|a, b| inst.action(a, b), j);
    let (a, b) = inst.universe[terminal];
    // In the fair interpretation a terminal outside the bound with both
    // sides defined is a non-converging pair: the left type has a run that
    // keeps an escape available while the right type never regains control.
    if fair
        && pruning.removed_round[terminal] == Some(0)
        && sys.is_defined(a)
        && sys.is_defined(b)
    {
        let graph = ProductGraph::new(sys, a, b);
        let escape = graph
            .escape_path((a, b))
            .expect("non-converging pairs have an escape run");
        let mut full = path.clone();
        full.extend(escape);
        return Verdict::fails(Some(Witness::Divergence {
            left: sys.describe(a),
            right: sys.describe(b),
            escape_trace: render_trace(sys, &full),
            note: "a trace of the left-hand type the right-hand type cannot follow".to_string(),
        }));
    }
    Verdict::fails(Some(Witness::Trace {
        trace: render_trace(sys, &path),
        terminal: render(terminal),
        note: mismatch_note(sys, a, b),
    }))
}

/// Says why no subtyping rule concludes the pair, naming a label where that
/// helps. Only called on pairs the descent bottomed out on, so exactly one
/// of the cases applies.
fn mismatch_note(sys: &SessionSystem, a: StateRef, b: StateRef) -> String {
    if !sys.is_defined(b) {
        return "the right-hand side is the unusable type".to_string();
    }
    match (sys.polarity(a), sys.polarity(b)) {
        (Some(Polarity::In), Some(Polarity::In)) => {
            let db = sys.dom(b);
            let missing = sys
                .dom(a)
                .into_iter()
                .find(|x| !db.contains(x))
                .expect("an input mismatch has a label the right side lacks");
            format!(
                "the right-hand side does not accept ?{}",
                sys.alphabet().label(missing)
            )
        }
        (Some(Polarity::Out), Some(Polarity::Out)) => {
            let da = sys.dom(a);
            match sys.dom(b).into_iter().find(|x| !da.contains(x)) {
                Some(extra) => format!(
                    "the right-hand side may send !{}, which the left-hand side never sends",
                    sys.alphabet().label(extra)
                ),
                None => "the right-hand side has terminated while the left-hand side still sends"
                    .to_string(),
            }
        }
        _ => "the two sides disagree on the direction of communication".to_string(),
    }
}

/// Validates a verdict and its witness against the reference semantics.
///
/// The verdict itself is compared with the independent oracle (or, for
/// subtyping, with a fresh run of the checker). Derivations are walked node
/// by node and must consist of genuine rule instances; traces are re-run
/// step by step and their terminal claim is re-established by plain
/// reachability; divergences must be traces of the left type only; clients
/// are re-parsed and re-checked on both sides.
pub fn replay(sys: &SessionSystem, check: Check, verdict: &Verdict) -> Result<(), String> {
    let reference = match check {
        Check::FairTermination(s) => oracle_fair_termination(sys, s).holds,
        Check::Compliance(c, s) => oracle_compliance(sys, Config::new(c, s)).holds,
        Check::FairCompliance(c, s) => oracle_fair_compliance(sys, Config::new(c, s)).holds,
        Check::Subtyping(a, b) => subtyping(sys, a, b).holds,
        Check::FairSubtyping(a, b) => fair_subtyping(sys, a, b).holds,
    };
    if verdict.holds != reference {
        return Err(format!(
            "the verdict claims the judgment {} but the reference says it {}",
            if verdict.holds { "holds" } else { "fails" },
            if reference { "holds" } else { "fails" },
        ));
    }
    let Some(witness) = &verdict.witness else {
        return Ok(());
    };
    match witness {
        Witness::Derivation { bounding, justification } => {
            if !verdict.holds {
                return Err("a derivation cannot witness a failure".to_string());
            }
            if bounding.is_none() && justification.is_none() {
                return Err("an empty derivation witnesses nothing".to_string());
            }
            replay_derivation(sys, check, bounding.as_ref(), justification.as_ref())
        }
        Witness::Trace { trace, terminal, .. } => {
            if verdict.holds {
                return Err("the failure traces here only witness negative verdicts".to_string());
            }
            replay_trace(sys, check, trace, terminal)
        }
        Witness::Divergence { escape_trace, .. } => {
            let Check::FairSubtyping(left, right) = check else {
                return Err("divergence only witnesses fair subtyping".to_string());
            };
            if verdict.holds {
                return Err("a divergence cannot witness a positive verdict".to_string());
            }
            let actions = parse_trace(sys, escape_trace)?;
            if !is_trace(sys, left, &actions) {
                return Err("the escape trace is not a trace of the left-hand type".to_string());
            }
            if is_trace(sys, right, &actions) {
                return Err("the right-hand type can follow the escape trace".to_string());
            }
            Ok(())
        }
        Witness::Client { source, root } => {
            let Check::FairSubtyping(left, right) = check else {
                return Err("clients only witness fair subtyping".to_string());
            };
            if verdict.holds {
                return Err("a discriminating client refutes, it cannot confirm".to_string());
            }
            let file = parse(source).map_err(|e| format!("client source: {e}"))?;
            let client_sys = elaborate(&file).map_err(|e| format!("client source: {e}"))?;
            let client_root = client_sys
                .lookup_name(root)
                .ok_or_else(|| format!("the client source does not define {root}"))?;
            let mut merged = sys.clone();
            let map = merged.absorb(&client_sys);
            let client = map[client_root.0];
            if !fair_compliance(&merged, client, left).holds {
                return Err("the client is not fairly compliant with the left-hand type".to_string());
            }
            if fair_compliance(&merged, client, right).holds {
                return Err("the client is fairly compliant with the right-hand type too".to_string());
            }
            Ok(())
        }
        Witness::SearchExhausted { .. } => Ok(()),
    }
}

fn replay_derivation(
    sys: &SessionSystem,
    check: Check,
    bounding: Option<&DerivationNode>,
    justification: Option<&Justification>,
) -> Result<(), String> {
    match check {
        Check::FairTermination(root) => {
            let inst = TermInstance::new(sys, root);
            let gen = generalized(&inst.rules, &inst.corules);
            let render = |j: usize| inst.render(sys, j);
            if let Some(tree) = bounding {
                check_derivation(&gen.combined, inst.root(), tree, &render)?;
            }
            if let Some(just) = justification {
                check_justification(&inst.rules, &gen.set, inst.root(), just, &render)?;
            }
            Ok(())
        }
        Check::Compliance(c, s) | Check::FairCompliance(c, s) => {
            let inst = CompInstance::new(sys, Config::new(c, s));
            let render = |j: usize| inst.render(sys, j);
            let set = match check {
                Check::Compliance(..) => inst.rules.gfp().set,
                _ => generalized(&inst.rules, &inst.corules).set,
            };
            if let Some(tree) = bounding {
                let combined = inst.corules.union(&inst.rules);
                check_derivation(&combined, inst.root(), tree, &render)?;
            }
            if let Some(just) = justification {
                check_justification(&inst.rules, &set, inst.root(), just, &render)?;
            }
            Ok(())
        }
        Check::Subtyping(a, b) | Check::FairSubtyping(a, b) => {
            let fair = matches!(check, Check::FairSubtyping(..));
            if !fair && bounding.is_some() {
                return Err("plain subtyping has no bounding rule system".to_string());
            }
            let inst = SubInstance::new(sys, a, b);
            let render = |j: usize| inst.render(sys, j);
            let set = if fair {
                inst.rules.prune_within(&inst.bound(sys)).set
            } else {
                inst.rules.gfp().set
            };
            if let Some(tree) = bounding {
                let combined = inst.corules(sys).union(&inst.rules);
                check_derivation(&combined, inst.root(), tree, &render)?;
            }
            if let Some(just) = justification {
                check_justification(&inst.rules, &set, inst.root(), just, &render)?;
            }
            Ok(())
        }
    }
}

fn check_derivation(
    rules: &RuleSystem,
    j: usize,
    node: &DerivationNode,
    render: &impl Fn(usize) -> String,
) -> Result<(), String> {
    if node.judgment != render(j) {
        return Err(format!(
            "derivation node claims {:?} where the instance has {:?}",
            node.judgment,
            render(j)
        ));
    }
    let rule = rules
        .rules_for(j)
        .iter()
        .find(|r| {
            r.name == node.rule
                && r.premises.len() == node.children.len()
                && r.premises
                    .iter()
                    .zip(&node.children)
                    .all(|(&p, child)| render(p) == child.judgment)
        })
        .ok_or_else(|| {
            format!(
                "no rule instance {:?} concludes {:?} from the given premises",
                node.rule, node.judgment
            )
        })?;
    for (&p, child) in rule.premises.iter().zip(&node.children) {
        check_derivation(rules, p, child, render)?;
    }
    Ok(())
}

fn check_justification(
    rules: &RuleSystem,
    set: &JudgmentSet,
    j: usize,
    just: &Justification,
    render: &impl Fn(usize) -> String,
) -> Result<(), String> {
    if just.judgment != render(j) {
        return Err(format!(
            "the justification claims {:?} where the instance has {:?}",
            just.judgment,
            render(j)
        ));
    }
    let rule = rules
        .rules_for(j)
        .iter()
        .find(|r| {
            r.name == just.rule
                && r.premises.len() == just.premises.len()
                && r.premises
                    .iter()
                    .zip(&just.premises)
                    .all(|(&p, claimed)| render(p) == *claimed)
        })
        .ok_or_else(|| format!("no rule instance {:?} concludes {:?}", just.rule, just.judgment))?;
    if let Some(&outside) = rule.premises.iter().find(|&&p| !set.contains(p)) {
        return Err(format!(
            "premise {:?} of the justifying rule is outside the fixpoint",
            render(outside)
        ));
    }
    Ok(())
}

fn replay_trace(
    sys: &SessionSystem,
    check: Check,
    trace: &[String],
    terminal: &str,
) -> Result<(), String> {
    let actions = parse_trace(sys, trace)?;
    match check {
        Check::FairTermination(root) => {
            if !is_trace(sys, root, &actions) {
                return Err("the reported trace is not a trace of the type".to_string());
            }
            let r = residual(sys, root, &actions).expect("traces have residuals");
            if sys.describe(r) != terminal {
                return Err(format!(
                    "the trace ends at {:?}, not the claimed {:?}",
                    sys.describe(r),
                    terminal
                ));
            }
            if can_reach_termination(sys, r) {
                return Err("the residual can still reach a terminated branch".to_string());
            }
            Ok(())
        }
        Check::Compliance(c, s) | Check::FairCompliance(c, s) => {
            let mut config = Config::new(c, s);
            for action in actions {
                config = reduce(sys, config)
                    .into_iter()
                    .find(|(a, _)| *a == action)
                    .map(|(_, next)| next)
                    .ok_or_else(|| {
                        format!(
                            "synchronization {} is not available at {}",
                            action.render(sys),
                            config.describe(sys)
                        )
                    })?;
            }
            if config.describe(sys) != terminal {
                return Err(format!(
                    "the trace ends at {}, not the claimed {}",
                    config.describe(sys),
                    terminal
                ));
            }
            let success =
                |c: Config| sys.is_win(c.client) && sys.is_defined(c.server);
            match check {
                Check::Compliance(..) => {
                    if !reduce(sys, config).is_empty() {
                        return Err("the terminal configuration can still synchronize".to_string());
                    }
                    if success(config) {
                        return Err("the terminal configuration is a success".to_string());
                    }
                }
                _ => {
                    let graph = config_graph(sys, config);
                    if graph.nodes.iter().any(|&c| success(c)) {
                        return Err(
                            "client success is still reachable from the terminal configuration"
                                .to_string(),
                        );
                    }
                }
            }
            Ok(())
        }
        Check::Subtyping(left, right) | Check::FairSubtyping(left, right) => {
            let a = residual(sys, left, &actions)
                .filter(|&r| sys.is_defined(r))
                .ok_or("the reported path is not a trace of the left-hand type")?;
            let b = residual(sys, right, &actions)
                .ok_or("the reported path is not a path of the right-hand type")?;
            let claimed = format!("{} ≤ {}", sys.describe(a), sys.describe(b));
            if claimed != terminal {
                return Err(format!(
                    "the path ends at {:?}, not the claimed {:?}",
                    claimed, terminal
                ));
            }
            if sub_rule_applies(sys, a, b) {
                return Err("some subtyping rule still concludes the terminal pair".to_string());
            }
            Ok(())
        }
    }
}

fn parse_trace(sys: &SessionSystem, trace: &[String]) -> Result<Vec<Action>, String> {
    trace
        .iter()
        .map(|text| {
            Action::parse(sys, text).ok_or_else(|| format!("unparseable action {text:?}"))
        })
        .collect()
}

/// Whether a terminated branch is reachable from `s` along trace steps.
fn can_reach_termination(sys: &SessionSystem, s: StateRef) -> bool {
    let mut seen = HashSet::from([s]);
    let mut work = vec![s];
    while let Some(cur) = work.pop() {
        if sys.is_defined(cur) && sys.dom(cur).is_empty() {
            return true;
        }
        for action in trace_next(sys, cur) {
            let next = step(sys, cur, action).expect("trace steps are enabled");
            if seen.insert(next) {
                work.push(next);
            }
        }
    }
    false
}

/// Whether any subtyping rule concludes the pair, mirroring the side
/// conditions of the rule set without building an instance.
fn sub_rule_applies(sys: &SessionSystem, a: StateRef, b: StateRef) -> bool {
    if !sys.is_defined(a) {
        return true;
    }
    if sys.is_end(a) && sys.is_defined(b) {
        return true;
    }
    let subset = |xs: &[usize], ys: &[usize]| xs.iter().all(|x| ys.contains(x));
    match (sys.polarity(a), sys.polarity(b)) {
        (Some(Polarity::In), Some(Polarity::In)) => {
            let (da, db) = (sys.dom(a), sys.dom(b));
            !da.is_empty() && subset(&da, &db)
        }
        (Some(Polarity::Out), Some(Polarity::Out)) => {
            let (da, db) = (sys.dom(a), sys.dom(b));
            !db.is_empty() && subset(&db, &da)
        }
        _ => false,
    }
}

/// Why synthesis produced no client.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    /// Synthesis separates plain subtyping from its fair refinement, so it
    /// needs the former to hold and the latter to fail.
    #[error("synthesis needs plain subtyping to hold and fair subtyping to fail")]
    Inapplicable,
    /// The candidate space within the budget is exhausted (or the internal
    /// step allowance ran out). The verdict stands; only the witness is
    /// missing.
    #[error("no discriminating client found within a budget of {budget} states")]
    NotFound { budget: usize },
}

/// Upper bound on enumeration steps across one synthesis call, so degenerate
/// search spaces give up instead of stalling.
const SYNTH_FUEL: usize = 2_000_000;

/// Searches for a client that is fairly compliant with `left` but not with
/// `right`, witnessing that the two types have different client sets.
///
/// Candidates are the strategy clients of `left` (see [`strategy_clients`]),
/// enumerated by increasing number of states up to `budget`; each complete
/// candidate is verified on both sides with the compliance checker before it
/// is returned, so a returned client is correct by construction. The search
/// is deterministic: equal inputs yield byte-identical witnesses.
pub fn synth_discriminating_client(
    sys: &SessionSystem,
    left: StateRef,
    right: StateRef,
    budget: usize,
) -> Result<Witness, SynthError> {
    if !subtyping(sys, left, right).holds || fair_subtyping(sys, left, right).holds {
        return Err(SynthError::Inapplicable);
    }
    let mut fuel = SYNTH_FUEL;
    for target in 1..=budget {
        let mut found: Option<(SessionSystem, StateRef)> = None;
        let mut visit = |csys: &SessionSystem, root: StateRef, size: usize| {
            if size != target {
                return false;
            }
            if fair_compliance(csys, root, left).holds
                && !fair_compliance(csys, root, right).holds
            {
                found = Some((csys.clone(), root));
                return true;
            }
            false
        };
        let covered = strategy_clients(sys, left, target, &mut fuel, &mut visit);
        if let Some((mut csys, root)) = found {
            let name = fresh_client_name(&csys);
            csys.add_name(name.clone(), root);
            let source = print(&csys, root);
            return Ok(Witness::Client { source, root: name });
        }
        if !covered {
            break;
        }
    }
    Err(SynthError::NotFound { budget })
}

fn fresh_client_name(sys: &SessionSystem) -> String {
    let taken: HashSet<&str> = sys.names().map(|(name, _)| name).collect();
    if !taken.contains("Client") {
        return "Client".to_string();
    }
    (0..)
        .map(|i| format!("Client{i}"))
        .find(|name| !taken.contains(name.as_str()))
        .expect("the naturals outlast any name table")
}

/// How an arm of a candidate client is resolved during the search.
#[derive(Clone, Copy)]
enum Arm {
    Pending,
    End,
    Node(usize),
}

/// One state of a candidate client. `tracked` is the residual of the server
/// type this state is played against; arms point at other plan nodes or at
/// the shared `end!` leaf.
struct PlanNode {
    polarity: Polarity,
    tracked: StateRef,
    parent: Option<usize>,
    arms: Vec<(usize, Arm)>,
}

/// An unfilled arm: the plan node owning it (`None` for the overall root)
/// and the server residual its subtree will be played against.
struct Slot {
    parent: Option<usize>,
    arm: usize,
    tracked: StateRef,
}

/// What to do with each complete candidate: build it and show it to a
/// visitor, or merely count it.
enum Sink<'a> {
    Visit(&'a mut dyn FnMut(&SessionSystem, StateRef, usize) -> bool),
    Count(&'a mut usize),
}

struct ClientSearch<'a> {
    sys: &'a SessionSystem,
    max_size: usize,
    fuel: &'a mut usize,
    sink: Sink<'a>,
    plan: Vec<PlanNode>,
    root_arm: Arm,
    ends: usize,
    stopped: bool,
    starved: bool,
}

/// Enumerates the strategy clients of `server` with up to `max_size` branch
/// states, calling `visit` on each complete candidate with its system, root
/// and state count; `visit` returns `true` to stop the enumeration early.
///
/// A strategy client plays along with the server: where the server receives,
/// the client sends some non-empty subset of the supported labels; where the
/// server sends, the client is ready for every possible message; and any arm
/// may instead terminate with `end!` or loop back to an ancestor facing the
/// same server residual. The enumeration is deterministic (arms are filled
/// in label order; choices try termination, then back edges from the nearest
/// ancestor outwards, then engagements with label sets by size and order).
///
/// Every step consumes one unit of `fuel`; the return value is `false` when
/// fuel ran out before the space was covered, and `true` otherwise.
pub fn strategy_clients(
    sys: &SessionSystem,
    server: StateRef,
    max_size: usize,
    fuel: &mut usize,
    visit: &mut dyn FnMut(&SessionSystem, StateRef, usize) -> bool,
) -> bool {
    run_search(sys, server, max_size, fuel, Sink::Visit(visit))
}

/// Counts the strategy clients [`strategy_clients`] would enumerate, without
/// building any of them. Returns `None` when `fuel` runs out first; useful
/// for sizing a space before paying to visit it.
pub fn strategy_space(
    sys: &SessionSystem,
    server: StateRef,
    max_size: usize,
    fuel: &mut usize,
) -> Option<usize> {
    let mut count = 0;
    run_search(sys, server, max_size, fuel, Sink::Count(&mut count)).then_some(count)
}

fn run_search<'a>(
    sys: &'a SessionSystem,
    server: StateRef,
    max_size: usize,
    fuel: &'a mut usize,
    sink: Sink<'a>,
) -> bool {
    if max_size == 0 {
        return true;
    }
    let mut search = ClientSearch {
        sys,
        max_size,
        fuel,
        sink,
        plan: Vec::new(),
        root_arm: Arm::Pending,
        ends: 0,
        stopped: false,
        starved: false,
    };
    search.fill(&[Slot { parent: None, arm: 0, tracked: server }]);
    !search.starved
}

impl ClientSearch<'_> {
    fn size(&self) -> usize {
        self.plan.len() + usize::from(self.ends > 0)
    }

    fn set_arm(&mut self, slot: &Slot, arm: Arm) {
        match slot.parent {
            Some(p) => self.plan[p].arms[slot.arm].1 = arm,
            None => self.root_arm = arm,
        }
    }

    fn fill(&mut self, pending: &[Slot]) {
        if self.stopped || self.starved {
            return;
        }
        if *self.fuel == 0 {
            self.starved = true;
            return;
        }
        *self.fuel -= 1;
        let Some((slot, rest)) = pending.split_last() else {
            let size = self.size();
            if let Sink::Count(count) = &mut self.sink {
                **count += 1;
                return;
            }
            let (csys, root) = self.materialize();
            let Sink::Visit(visit) = &mut self.sink else { unreachable!() };
            if visit(&csys, root, size) {
                self.stopped = true;
            }
            return;
        };

        // terminate this arm with the client's success state
        let end_cost = usize::from(self.ends == 0);
        if self.size() + end_cost <= self.max_size {
            self.set_arm(slot, Arm::End);
            self.ends += 1;
            self.fill(rest);
            self.ends -= 1;
            self.set_arm(slot, Arm::Pending);
            if self.stopped || self.starved {
                return;
            }
        }

        // loop back to an ancestor playing against the same server residual
        let mut ancestor = slot.parent;
        while let Some(i) = ancestor {
            if self.plan[i].tracked == slot.tracked {
                self.set_arm(slot, Arm::Node(i));
                self.fill(rest);
                self.set_arm(slot, Arm::Pending);
                if self.stopped || self.starved {
                    return;
                }
            }
            ancestor = self.plan[i].parent;
        }

        // engage the server residual with a fresh node
        if self.size() + 1 > self.max_size {
            return;
        }
        let dom = self.sys.dom(slot.tracked);
        match self.sys.polarity(slot.tracked) {
            Some(Polarity::In) => {
                for labels in label_subsets(&dom) {
                    self.engage(slot, Polarity::Out, &labels, rest);
                    if self.stopped || self.starved {
                        return;
                    }
                }
            }
            Some(Polarity::Out) if !dom.is_empty() => {
                self.engage(slot, Polarity::In, &dom, rest);
            }
            _ => {}
        }
    }

    fn engage(&mut self, slot: &Slot, polarity: Polarity, labels: &[usize], rest: &[Slot]) {
        let id = self.plan.len();
        self.plan.push(PlanNode {
            polarity,
            tracked: slot.tracked,
            parent: slot.parent,
            arms: labels.iter().map(|&x| (x, Arm::Pending)).collect(),
        });
        self.set_arm(slot, Arm::Node(id));
        let mut pending: Vec<Slot> = rest
            .iter()
            .map(|s| Slot { parent: s.parent, arm: s.arm, tracked: s.tracked })
            .collect();
        // slots are filled from the back, so push in reverse label order
        for (arm, &x) in labels.iter().enumerate().rev() {
            pending.push(Slot {
                parent: Some(id),
                arm,
                tracked: self
                    .sys
                    .cont(slot.tracked, x)
                    .expect("engaged labels have continuations"),
            });
        }
        self.fill(&pending);
        self.set_arm(slot, Arm::Pending);
        self.plan.pop();
    }

    fn materialize(&self) -> (SessionSystem, StateRef) {
        let mut out = self.sys.clone();
        let nil = out.nil();
        let width = out.alphabet().len();
        let end = out.intern(Node::Branch { polarity: Polarity::Out, cont: vec![nil; width] });
        let ids: Vec<StateRef> = self.plan.iter().map(|_| out.alloc_slot()).collect();
        for (i, node) in self.plan.iter().enumerate() {
            let mut cont = vec![nil; width];
            for &(x, arm) in &node.arms {
                cont[x] = match arm {
                    Arm::Node(j) => ids[j],
                    Arm::End => end,
                    Arm::Pending => unreachable!("complete plans have no pending arms"),
                };
            }
            out.set_state(ids[i], Node::Branch { polarity: node.polarity, cont });
        }
        let root = match self.root_arm {
            Arm::Node(i) => ids[i],
            Arm::End => end,
            Arm::Pending => unreachable!("complete plans have no pending arms"),
        };
        (out, root)
    }
}

/// Non-empty subsets of `dom`, ordered by size and then lexicographically,
/// so the enumeration prefers small focused choices.
fn label_subsets(dom: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..1 << dom.len())
        .map(|mask| {
            dom.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::DemoSystems;

    fn derivation(verdict: &Verdict) -> (&Option<DerivationNode>, &Option<Justification>) {
        match verdict.witness.as_ref().expect("explained verdicts carry witnesses") {
            Witness::Derivation { bounding, justification } => (bounding, justification),
            other => panic!("expected a derivation, got {other:?}"),
        }
    }

    fn failure_trace(verdict: &Verdict) -> (&[String], &str, &str) {
        match verdict.witness.as_ref().expect("explained verdicts carry witnesses") {
            Witness::Trace { trace, terminal, note } => (trace, terminal, note),
            other => panic!("expected a trace, got {other:?}"),
        }
    }

    #[test]
    fn positive_explanations_carry_self_justifying_rules() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::FairTermination(f.t1));
        assert!(verdict.holds);
        let (bounding, justification) = derivation(&verdict);
        let bounding = bounding.as_ref().expect("corule-bounded checks include the bound");
        assert_eq!(bounding.rule, "t-any(!false)", "the corules carry the derivation");
        let justification = justification.as_ref().unwrap();
        assert_eq!(justification.rule, "t-all");
        assert_eq!(justification.premises.len(), 3);
    }

    #[test]
    fn terminated_branches_explain_themselves() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::FairTermination(f.sys.nil()));
        assert!(verdict.holds);
        let (bounding, justification) = derivation(&verdict);
        let bounding = bounding.as_ref().unwrap();
        assert_eq!(bounding.rule, "t-nil");
        assert!(bounding.children.is_empty());
        assert_eq!(justification.as_ref().unwrap().rule, "t-nil");
    }

    #[test]
    fn termination_refutations_descend_to_states_that_cannot_finish() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::FairTermination(f.r));
        assert!(!verdict.holds);
        let (trace, terminal, _) = failure_trace(&verdict);
        assert!(trace.is_empty(), "the root itself can never finish");
        assert_eq!(terminal, f.sys.describe(f.r));

        let verdict = explain(&f.sys, Check::FairTermination(f.rprime));
        assert!(!verdict.holds);
        let (trace, terminal, _) = failure_trace(&verdict);
        assert_eq!(trace, ["!true"], "one send abandons the terminating branch");
        assert_eq!(terminal, f.sys.describe(f.r));
    }

    #[test]
    fn compliance_explanations_name_the_synchronizations() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::FairCompliance(f.r2, f.t2));
        assert!(verdict.holds);
        let (bounding, _) = derivation(&verdict);
        let mut spine = Vec::new();
        let mut node = bounding.as_ref().unwrap();
        loop {
            spine.push(node.rule.clone());
            match node.children.first() {
                Some(child) => node = child,
                None => break,
            }
        }
        assert_eq!(spine, ["c-sync(!true)", "c-sync(?z)", "c-success"]);
    }

    #[test]
    fn stuck_sessions_are_reported_with_their_path() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::Compliance(f.rasym, f.sasym));
        assert!(!verdict.holds);
        let (trace, terminal, note) = failure_trace(&verdict);
        assert_eq!(trace, ["?false"], "the server receives the label it cannot handle");
        assert_eq!(terminal, Config::new(f.f, f.sys.nil()).describe(&f.sys));
        assert_eq!(note, "stuck configuration without client success");
    }

    #[test]
    fn hopeless_sessions_are_distinguished_from_stuck_ones() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::FairCompliance(f.r2, f.s2));
        assert!(!verdict.holds);
        let (trace, terminal, note) = failure_trace(&verdict);
        assert!(trace.is_empty(), "the session is hopeless from the start");
        assert_eq!(terminal, Config::new(f.r2, f.s2).describe(&f.sys));
        assert_eq!(note, "configuration from which client success is unreachable");
    }

    #[test]
    fn divergence_witnesses_carry_the_left_only_trace() {
        let f = DemoSystems::build();
        let verdict = explain(&f.sys, Check::FairSubtyping(f.t2, f.s2));
        assert!(!verdict.holds);
        let Some(Witness::Divergence { escape_trace, .. }) = &verdict.witness else {
            panic!("expected a divergence, got {:?}", verdict.witness);
        };
        assert_eq!(escape_trace, &["?true", "!z"]);
        replay(&f.sys, Check::FairSubtyping(f.t2, f.s2), &verdict).unwrap();
    }

    #[test]
    fn mismatch_refutations_name_the_offending_label() {
        let f = DemoSystems::build();
        for check in [Check::Subtyping(f.z, f.n), Check::FairSubtyping(f.z, f.n)] {
            let verdict = explain(&f.sys, check);
            assert!(!verdict.holds);
            let (trace, _, note) = failure_trace(&verdict);
            assert!(trace.is_empty());
            assert_eq!(
                note,
                "the right-hand side may send !p, which the left-hand side never sends"
            );
        }
    }

    #[test]
    fn witnesses_replay_against_the_semantics() {
        let f = DemoSystems::build();
        for s in f.sys.states() {
            let check = Check::FairTermination(s);
            replay(&f.sys, check, &explain(&f.sys, check)).unwrap();
        }
        for (client, server) in [
            (f.r2, f.t2),
            (f.r2, f.s2),
            (f.r1, f.t1),
            (f.r1, f.s1),
            (f.rasym, f.sasym),
            (f.r, f.t1),
        ] {
            for check in [Check::Compliance(client, server), Check::FairCompliance(client, server)] {
                replay(&f.sys, check, &explain(&f.sys, check)).unwrap();
            }
        }
        for (left, right) in [(f.t1, f.s1), (f.t2, f.s2), (f.z, f.n), (f.tco, f.sco), (f.s1, f.t1)] {
            for check in [Check::Subtyping(left, right), Check::FairSubtyping(left, right)] {
                replay(&f.sys, check, &explain(&f.sys, check)).unwrap();
            }
        }
    }

    #[test]
    fn replay_rejects_tampered_witnesses() {
        let f = DemoSystems::build();
        let check = Check::FairSubtyping(f.t2, f.s2);
        let verdict = explain(&f.sys, check);
        let Some(Witness::Divergence { left, right, escape_trace, note }) = verdict.witness else {
            panic!("expected a divergence");
        };
        let mut tampered = escape_trace.clone();
        tampered.push("!z".to_string());
        let forged = Verdict::fails(Some(Witness::Divergence {
            left,
            right,
            escape_trace: tampered,
            note,
        }));
        assert!(replay(&f.sys, check, &forged).is_err());

        let check = Check::FairTermination(f.t1);
        let verdict = explain(&f.sys, check);
        let Some(Witness::Derivation { bounding, justification }) = verdict.witness else {
            panic!("expected a derivation");
        };
        let mut tree = bounding.unwrap();
        tree.rule = "t-all".to_string();
        let forged = Verdict::holds(Some(Witness::Derivation {
            bounding: Some(tree),
            justification,
        }));
        assert!(replay(&f.sys, check, &forged).is_err());

        let check = Check::FairSubtyping(f.tco, f.sco);
        let verdict = explain(&f.sys, check);
        let Some(Witness::Derivation { bounding, justification }) = verdict.witness else {
            panic!("expected a derivation");
        };
        let mut tree = bounding.unwrap();
        assert_eq!(tree.rule, "s-converge");
        tree.rule = "s-out".to_string();
        let forged = Verdict::holds(Some(Witness::Derivation {
            bounding: Some(tree),
            justification,
        }));
        assert!(replay(&f.sys, check, &forged).is_err());
    }

    #[test]
    fn synthesized_clients_separate_the_pair() {
        let f = DemoSystems::build();
        let witness = synth_discriminating_client(&f.sys, f.t2, f.s2, 64).unwrap();
        let Witness::Client { source, root } = &witness else {
            panic!("expected a client, got {witness:?}");
        };
        let client_sys = elaborate(&parse(source).unwrap()).unwrap();
        let mut merged = f.sys.clone();
        let map = merged.absorb(&client_sys);
        let client = map[client_sys.lookup_name(root).unwrap().0];
        assert!(
            merged.bisimilar(client, f.r2),
            "the minimal discriminating client has exactly the known shape: {source}"
        );
        let verdict = Verdict::fails(Some(witness));
        replay(&f.sys, Check::FairSubtyping(f.t2, f.s2), &verdict).unwrap();
    }

    #[test]
    fn synthesis_reports_inapplicable_pairs() {
        let f = DemoSystems::build();
        // fair subtyping already holds, so no client can tell the types apart
        assert_eq!(
            synth_discriminating_client(&f.sys, f.t1, f.s1, 64),
            Err(SynthError::Inapplicable)
        );
        // the unusable type is below everything, fairly so
        assert_eq!(
            synth_discriminating_client(&f.sys, f.sys.nil(), f.end_in, 64),
            Err(SynthError::Inapplicable)
        );
        // plain subtyping fails, so the question does not arise
        assert_eq!(
            synth_discriminating_client(&f.sys, f.z, f.n, 64),
            Err(SynthError::Inapplicable)
        );
    }

    #[test]
    fn strategy_enumeration_is_deterministic_and_bounded() {
        let f = DemoSystems::build();
        let count = |max_size: usize| {
            let mut n = 0usize;
            let mut fuel = 1_000_000;
            let covered = strategy_clients(&f.sys, f.t2, max_size, &mut fuel, &mut |_, _, _| {
                n += 1;
                false
            });
            assert!(covered, "the space of small clients fits in the fuel allowance");
            n
        };
        let three = count(3);
        assert_eq!(three, count(3), "re-running the enumeration changes nothing");
        assert!(count(4) > three, "a larger budget strictly widens the space");

        // every enumerated candidate respects the size bound and plays one
        // of the two roles against the tracked server residual
        let mut fuel = 1_000_000;
        strategy_clients(&f.sys, f.t2, 4, &mut fuel, &mut |csys, root, size| {
            assert!(size <= 4);
            let reachable = csys.reachable(&[root]);
            let branches = reachable.iter().filter(|&&s| csys.is_defined(s)).count();
            assert_eq!(branches, size, "reported sizes count the branch states");
            false
        });
    }
}

//! Generated-system sweeps pitting every checker against its oracle.
//!
//! The fixpoint checkers and the reachability oracles decide the same
//! properties by unrelated means, so agreement on large families of
//! mechanically generated systems is strong evidence that both are right.
//! [`sweep`] runs the comparison (plus the fixpoint inclusion invariants)
//! over a list of systems; [`exhaustive_systems`] and [`random_systems`]
//! produce the families, and [`selftest`] bundles the whole procedure for
//! the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkers::{compliance, fair_compliance, fair_termination, CompInstance, SubInstance, TermInstance};
use crate::gis::generalized;
use crate::semantics::{oracle_compliance, oracle_fair_compliance, oracle_fair_termination, Config};
use crate::syntax::print_system;
use crate::system::{Alphabet, Node, Polarity, SessionSystem, StateRef};

fn fresh_alphabet(labels: usize) -> Alphabet {
    assert!(
        (1..=26).contains(&labels),
        "generated alphabets use single lowercase letters"
    );
    Alphabet::new((0..labels).map(|i| char::from(b'a' + i as u8).to_string()))
        .expect("single letters are distinct and non-empty")
}

/// Every session system with at most `max_states` states (nil included)
/// over `labels` labels, each branch state named so the system serializes.
///
/// A branch state is a polarity plus one target per label drawn from nil
/// and the branch states, so the space has `(2 * (k+1)^labels)^k` members
/// for `k` branch states; it grows brutally fast and is only meant for the
/// small sizes the sweeps use.
pub fn exhaustive_systems(max_states: usize, labels: usize) -> Vec<SessionSystem> {
    let mut out = Vec::new();
    if max_states == 0 {
        return out;
    }
    for branch_count in 0..max_states {
        let targets = branch_count + 1;
        let options = 2 * targets.pow(labels as u32);
        let mut digits = vec![0usize; branch_count];
        'space: loop {
            out.push(decode_system(labels, &digits, targets));
            let mut i = 0;
            loop {
                if i == digits.len() {
                    break 'space;
                }
                digits[i] += 1;
                if digits[i] < options {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
    out
}

fn decode_system(labels: usize, digits: &[usize], targets: usize) -> SessionSystem {
    let mut sys = SessionSystem::new(fresh_alphabet(labels));
    let nil = sys.nil();
    let ids: Vec<StateRef> = digits.iter().map(|_| sys.alloc_slot()).collect();
    for (i, &code) in digits.iter().enumerate() {
        let polarity = if code % 2 == 0 { Polarity::In } else { Polarity::Out };
        let mut rest = code / 2;
        let cont = (0..labels)
            .map(|_| {
                let t = rest % targets;
                rest /= targets;
                if t == 0 {
                    nil
                } else {
                    ids[t - 1]
                }
            })
            .collect();
        sys.set_state(ids[i], Node::Branch { polarity, cont });
        sys.add_name(format!("S{}", i + 1), ids[i]);
    }
    sys
}

/// `count` pseudorandom session systems with at most `max_states` states
/// (nil included) over `labels` labels, deterministic in `seed`.
pub fn random_systems(seed: u64, count: usize, max_states: usize, labels: usize) -> Vec<SessionSystem> {
    if max_states == 0 || count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let branch_count = rng.gen_range(0..max_states);
            let mut sys = SessionSystem::new(fresh_alphabet(labels));
            let nil = sys.nil();
            let ids: Vec<StateRef> = (0..branch_count).map(|_| sys.alloc_slot()).collect();
            for (i, &id) in ids.iter().enumerate() {
                let polarity = if rng.gen::<bool>() { Polarity::In } else { Polarity::Out };
                let cont = (0..labels)
                    .map(|_| {
                        let t = rng.gen_range(0..=branch_count);
                        if t == 0 {
                            nil
                        } else {
                            ids[t - 1]
                        }
                    })
                    .collect();
                sys.set_state(id, Node::Branch { polarity, cont });
                sys.add_name(format!("S{}", i + 1), id);
            }
            sys
        })
        .collect()
}

/// One disagreement between a checker and its oracle, or one violated
/// fixpoint inclusion, with the offending system serialized for replay.
#[derive(Debug, Clone)]
pub struct Discrepancy {
    pub system: String,
    pub detail: String,
}

/// Totals of an equivalence sweep.
#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub systems: usize,
    pub termination_checks: usize,
    pub compliance_checks: usize,
    pub inclusion_checks: usize,
    pub discrepancies: Vec<Discrepancy>,
}

impl SweepOutcome {
    fn report(&mut self, sys: &SessionSystem, detail: String) {
        self.discrepancies.push(Discrepancy { system: print_system(sys), detail });
    }
}

fn verdict_word(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}

/// Compares every checker with its oracle on each system: fair termination
/// on every state, both compliance checkers on every ordered pair of states,
/// and on every instance the fixpoint inclusions (the generalized set must
/// sit inside the plain greatest fixpoint and inside its inductive bound).
/// `inject_fault` deliberately misreports the first termination check, to
/// prove the sweep notices and reports disagreements.
pub fn sweep(systems: &[SessionSystem], inject_fault: bool) -> SweepOutcome {
    let mut outcome = SweepOutcome::default();
    let mut fault = inject_fault;
    for sys in systems {
        outcome.systems += 1;
        let states: Vec<StateRef> = sys.states().collect();
        for &s in &states {
            let mut checker = fair_termination(sys, s).holds;
            if std::mem::take(&mut fault) {
                checker = !checker;
            }
            let oracle = oracle_fair_termination(sys, s).holds;
            outcome.termination_checks += 1;
            if checker != oracle {
                outcome.report(
                    sys,
                    format!(
                        "fair termination of {}: the checker says it {}, the oracle says it {}",
                        sys.describe(s),
                        verdict_word(checker),
                        verdict_word(oracle),
                    ),
                );
            }
            let inst = TermInstance::new(sys, s);
            let gen = generalized(&inst.rules, &inst.corules);
            outcome.inclusion_checks += 2;
            if !gen.set.is_subset_of(&inst.rules.gfp().set) {
                outcome.report(
                    sys,
                    format!(
                        "termination instance at {}: the generalized set leaves the greatest fixpoint",
                        sys.describe(s),
                    ),
                );
            }
            if !gen.set.is_subset_of(&gen.bound.set) {
                outcome.report(
                    sys,
                    format!(
                        "termination instance at {}: the generalized set leaves its inductive bound",
                        sys.describe(s),
                    ),
                );
            }
        }
        for &client in &states {
            for &server in &states {
                let here = format!("⟨{}, {}⟩", sys.describe(client), sys.describe(server));
                let safety = compliance(sys, client, server).holds;
                let safety_oracle = oracle_compliance(sys, Config::new(client, server)).holds;
                let fair = fair_compliance(sys, client, server).holds;
                let fair_oracle = oracle_fair_compliance(sys, Config::new(client, server)).holds;
                outcome.compliance_checks += 2;
                if safety != safety_oracle {
                    outcome.report(
                        sys,
                        format!(
                            "compliance of {here}: the checker says it {}, the oracle says it {}",
                            verdict_word(safety),
                            verdict_word(safety_oracle),
                        ),
                    );
                }
                if fair != fair_oracle {
                    outcome.report(
                        sys,
                        format!(
                            "fair compliance of {here}: the checker says it {}, the oracle says it {}",
                            verdict_word(fair),
                            verdict_word(fair_oracle),
                        ),
                    );
                }
                if fair && !safety {
                    outcome.report(
                        sys,
                        format!("fair compliance of {here} holds but plain compliance fails"),
                    );
                }
                let inst = CompInstance::new(sys, Config::new(client, server));
                let gen = generalized(&inst.rules, &inst.corules);
                outcome.inclusion_checks += 2;
                if !gen.set.is_subset_of(&inst.rules.gfp().set) {
                    outcome.report(
                        sys,
                        format!("compliance instance at {here}: the generalized set leaves the greatest fixpoint"),
                    );
                }
                if !gen.set.is_subset_of(&gen.bound.set) {
                    outcome.report(
                        sys,
                        format!("compliance instance at {here}: the generalized set leaves its inductive bound"),
                    );
                }
            }
        }
    }
    outcome
}

/// Fixpoint inclusions for one subtyping instance: the fair set must sit
/// inside the plain greatest fixpoint and inside the convergence bound.
/// Returns the violations, empty when all inclusions hold.
pub fn subtyping_inclusions(sys: &SessionSystem, left: StateRef, right: StateRef) -> Vec<String> {
    let inst = SubInstance::new(sys, left, right);
    let bound = inst.bound(sys);
    let pruned = inst.rules.prune_within(&bound).set;
    let mut violations = Vec::new();
    if !pruned.is_subset_of(&inst.rules.gfp().set) {
        violations.push(format!(
            "subtyping instance {} ≤ {}: the fair set leaves the greatest fixpoint",
            sys.describe(left),
            sys.describe(right),
        ));
    }
    if !pruned.is_subset_of(&bound) {
        violations.push(format!(
            "subtyping instance {} ≤ {}: the fair set leaves the convergence bound",
            sys.describe(left),
            sys.describe(right),
        ));
    }
    violations
}

/// Caps on the exhaustive half of a selftest. The space of systems grows
/// brutally with both sizes, and beyond these the random half carries the
/// statistical weight anyway.
const EXHAUSTIVE_MAX_STATES: usize = 4;
const EXHAUSTIVE_MAX_LABELS: usize = 2;

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Bounds the states per generated system, nil included; zero makes the
    /// whole run vacuous.
    pub max_states: usize,
    /// Labels per generated alphabet, between 1 and 26.
    pub alphabet: usize,
    /// How many random systems to draw.
    pub random_count: usize,
    /// Misreport one verdict to prove the harness catches it.
    pub inject_fault: bool,
}

impl Default for SelftestOptions {
    fn default() -> SelftestOptions {
        SelftestOptions {
            seed: 42,
            max_states: 4,
            alphabet: 2,
            random_count: 500,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelftestOutcome {
    pub exhaustive: SweepOutcome,
    pub random: SweepOutcome,
}

impl SelftestOutcome {
    pub fn passed(&self) -> bool {
        self.exhaustive.discrepancies.is_empty() && self.random.discrepancies.is_empty()
    }

    pub fn discrepancies(&self) -> impl Iterator<Item = &Discrepancy> {
        self.exhaustive
            .discrepancies
            .iter()
            .chain(self.random.discrepancies.iter())
    }
}

/// The full self-check: an exhaustive sweep over every small system (capped
/// at 4 states over 2 labels however large the requested sizes are) plus a
/// seeded random sweep at the requested sizes.
pub fn selftest(opts: &SelftestOptions) -> SelftestOutcome {
    let small = exhaustive_systems(
        opts.max_states.min(EXHAUSTIVE_MAX_STATES),
        opts.alphabet.min(EXHAUSTIVE_MAX_LABELS),
    );
    let drawn = random_systems(opts.seed, opts.random_count, opts.max_states, opts.alphabet);
    SelftestOutcome {
        exhaustive: sweep(&small, opts.inject_fault),
        random: sweep(&drawn, false),
    }
}

//! A small engine for inference systems with corules over finite universes.
//!
//! A rule system is a set of rule instances, each with a conclusion and
//! finitely many premises, all drawn from a fixed finite universe of
//! judgments (indexed 0..n). Three interpretations matter here:
//!
//! * the inductive one, [`RuleSystem::lfp`]: judgments with a well-founded
//!   derivation, computed by saturation from nothing;
//! * the coinductive one, [`RuleSystem::gfp`]: the largest set in which
//!   every member is the conclusion of a rule whose premises are also
//!   members, computed by pruning from the full universe;
//! * the corule-bounded one, [`generalized`]: the coinductive
//!   interpretation of the rules, restricted to judgments that are
//!   inductively derivable when the corules are added. Corules thus cut
//!   unjustified infinite derivations out of the coinductive space without
//!   contributing derivation steps themselves.
//!
//! Both fixpoints converge within `n` rounds. The saturation records, for
//! each derived judgment, one rule application from the round in which it
//! first appeared, which yields minimal-depth derivation trees for
//! witnesses. The pruning records the round in which each judgment was
//! removed, which yields terminating refutation chains.
//!
//! [`bounded_coinduction`] checks the standard sufficient criterion for
//! proving a candidate set included in the corule-bounded interpretation;
//! the test suite applies it to randomly generated systems.

use crate::witness::DerivationNode;

/// A set of judgment indices within a universe of known size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgmentSet {
    bits: Vec<bool>,
    count: usize,
}

impl JudgmentSet {
    pub fn empty(universe: usize) -> JudgmentSet {
        JudgmentSet {
            bits: vec![false; universe],
            count: 0,
        }
    }

    pub fn full(universe: usize) -> JudgmentSet {
        JudgmentSet {
            bits: vec![true; universe],
            count: universe,
        }
    }

    pub fn universe_size(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, j: usize) -> bool {
        self.bits[j]
    }

    /// Inserts `j`; returns whether the set changed.
    pub fn insert(&mut self, j: usize) -> bool {
        if self.bits[j] {
            return false;
        }
        self.bits[j] = true;
        self.count += 1;
        true
    }

    /// Removes `j`; returns whether the set changed.
    pub fn remove(&mut self, j: usize) -> bool {
        if !self.bits[j] {
            return false;
        }
        self.bits[j] = false;
        self.count -= 1;
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bits.len()).filter(move |&j| self.bits[j])
    }

    pub fn is_subset_of(&self, other: &JudgmentSet) -> bool {
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| !*a || *b)
    }
}

/// One rule instance. The conclusion is implicit in where the rule is
/// stored; `premises` index into the same universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub premises: Vec<usize>,
}

/// All rule instances over a universe, grouped by conclusion.
#[derive(Debug, Clone)]
pub struct RuleSystem {
    by_conclusion: Vec<Vec<Rule>>,
}

/// Result of a saturation run: the derivable set plus, for each member, the
/// rule chosen when it was first derived (an index into its rule list).
#[derive(Debug, Clone)]
pub struct Saturation {
    pub set: JudgmentSet,
    choice: Vec<Option<usize>>,
}

/// Result of a pruning run: the surviving set plus, for each judgment that
/// did not survive, the round in which it was removed. Round 0 marks
/// judgments excluded by the starting bound rather than by pruning.
#[derive(Debug, Clone)]
pub struct Pruning {
    pub set: JudgmentSet,
    pub removed_round: Vec<Option<usize>>,
}

impl RuleSystem {
    pub fn new(universe: usize) -> RuleSystem {
        RuleSystem {
            by_conclusion: vec![Vec::new(); universe],
        }
    }

    pub fn universe_size(&self) -> usize {
        self.by_conclusion.len()
    }

    pub fn add_rule(&mut self, conclusion: usize, name: impl Into<String>, premises: Vec<usize>) {
        self.by_conclusion[conclusion].push(Rule {
            name: name.into(),
            premises,
        });
    }

    pub fn rules_for(&self, conclusion: usize) -> &[Rule] {
        &self.by_conclusion[conclusion]
    }

    pub fn rule_count(&self) -> usize {
        self.by_conclusion.iter().map(Vec::len).sum()
    }

    /// A system containing the rules of `self` followed by those of `other`.
    /// The order matters only for which rule a derivation prefers among
    /// equally shallow alternatives.
    pub fn union(&self, other: &RuleSystem) -> RuleSystem {
        assert_eq!(self.universe_size(), other.universe_size());
        let mut out = self.clone();
        for (j, rules) in other.by_conclusion.iter().enumerate() {
            out.by_conclusion[j].extend(rules.iter().cloned());
        }
        out
    }

    /// One application of the rules to a set: everything concluded by some
    /// rule whose premises all lie in `x`.
    pub fn inf_op(&self, x: &JudgmentSet) -> JudgmentSet {
        let mut out = JudgmentSet::empty(self.universe_size());
        for j in 0..self.universe_size() {
            let derivable = self.by_conclusion[j]
                .iter()
                .any(|r| r.premises.iter().all(|&p| x.contains(p)));
            if derivable {
                out.insert(j);
            }
        }
        out
    }

    /// The inductive interpretation: saturate from the empty set. Each
    /// judgment remembers a rule from its first round, so the recorded
    /// derivations have minimal depth.
    pub fn lfp(&self) -> Saturation {
        let n = self.universe_size();
        let mut set = JudgmentSet::empty(n);
        let mut choice: Vec<Option<usize>> = vec![None; n];
        loop {
            let mut added = Vec::new();
            for j in 0..n {
                if set.contains(j) {
                    continue;
                }
                let found = self.by_conclusion[j]
                    .iter()
                    .position(|r| r.premises.iter().all(|&p| set.contains(p)));
                if let Some(idx) = found {
                    choice[j] = Some(idx);
                    added.push(j);
                }
            }
            if added.is_empty() {
                return Saturation { set, choice };
            }
            for j in added {
                set.insert(j);
            }
        }
    }

    /// The coinductive interpretation: prune from the full universe.
    pub fn gfp(&self) -> Pruning {
        self.prune_within(&JudgmentSet::full(self.universe_size()))
    }

    /// The largest subset of `bound` in which every judgment is concluded by
    /// a rule whose premises stay in the subset.
    pub fn prune_within(&self, bound: &JudgmentSet) -> Pruning {
        let n = self.universe_size();
        let mut set = bound.clone();
        let mut removed_round: Vec<Option<usize>> = (0..n)
            .map(|j| if bound.contains(j) { None } else { Some(0) })
            .collect();
        let mut round = 0;
        loop {
            round += 1;
            let mut dropped = Vec::new();
            for j in set.iter() {
                let justified = self.by_conclusion[j]
                    .iter()
                    .any(|r| r.premises.iter().all(|&p| set.contains(p)));
                if !justified {
                    dropped.push(j);
                }
            }
            if dropped.is_empty() {
                return Pruning { set, removed_round };
            }
            for j in dropped {
                set.remove(j);
                removed_round[j] = Some(round);
            }
        }
    }

    /// The first rule keeping `j` justified within `set`, if any.
    pub fn justifying_rule(&self, set: &JudgmentSet, j: usize) -> Option<&Rule> {
        self.by_conclusion[j]
            .iter()
            .find(|r| r.premises.iter().all(|&p| set.contains(p)))
    }
}

impl Saturation {
    /// The minimal-depth derivation recorded for `j`, if `j` was derived.
    /// `render` turns judgment indices into display strings.
    pub fn derivation(
        &self,
        rules: &RuleSystem,
        j: usize,
        render: &impl Fn(usize) -> String,
    ) -> Option<DerivationNode> {
        if !self.set.contains(j) {
            return None;
        }
        let rule = &rules.rules_for(j)[self.choice[j].expect("derived judgments record a rule")];
        let children = rule
            .premises
            .iter()
            .map(|&p| {
                self.derivation(rules, p, render)
                    .expect("premises of a recorded rule were derived earlier")
            })
            .collect();
        Some(DerivationNode {
            judgment: render(j),
            rule: rule.name.clone(),
            children,
        })
    }
}

/// Result of interpreting rules with corules: the defined set, the bounding
/// saturation (over rules and corules together) and the combined system the
/// saturation refers to.
#[derive(Debug, Clone)]
pub struct Generalized {
    pub set: JudgmentSet,
    pub pruning: Pruning,
    pub bound: Saturation,
    pub combined: RuleSystem,
}

/// Interprets `rules` coinductively, bounded by the inductive
/// interpretation of rules and corules together.
pub fn generalized(rules: &RuleSystem, corules: &RuleSystem) -> Generalized {
    // Corules first, so recorded derivations prefer them among equally
    // shallow choices; this makes witnesses show where the corules bite.
    let combined = corules.union(rules);
    let bound = combined.lfp();
    let pruning = rules.prune_within(&bound.set);
    Generalized {
        set: pruning.set.clone(),
        pruning,
        bound,
        combined,
    }
}

/// A failed admissibility condition for [`bounded_coinduction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundedCoinductionViolation {
    /// The candidate judgment is not inductively derivable with corules.
    OutsideBound(usize),
    /// The candidate judgment is not the conclusion of any rule whose
    /// premises stay inside the candidate.
    NotConsistent(usize),
}

/// The bounded coinduction criterion: a candidate set that is contained in
/// the corule bound and consistent under the rules is contained in the
/// generalized interpretation. Returns the first violation, if any.
pub fn bounded_coinduction(
    rules: &RuleSystem,
    corules: &RuleSystem,
    candidate: &JudgmentSet,
) -> Result<(), BoundedCoinductionViolation> {
    let bound = corules.union(rules).lfp();
    for j in candidate.iter() {
        if !bound.set.contains(j) {
            return Err(BoundedCoinductionViolation::OutsideBound(j));
        }
    }
    let consistent = rules.inf_op(candidate);
    for j in candidate.iter() {
        if !consistent.contains(j) {
            return Err(BoundedCoinductionViolation::NotConsistent(j));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The classic two-judgment example over the infinite list 1,1,1,...:
    /// judgment 0 says the maximum element is 1, judgment 1 says it is 2.
    /// Unfolding one list constructor turns each claim into itself, and the
    /// coaxiom asserts judgment 0 (the head is an element).
    fn max_elem_demo() -> (RuleSystem, RuleSystem) {
        let mut rules = RuleSystem::new(2);
        rules.add_rule(0, "unfold", vec![0]);
        rules.add_rule(1, "unfold", vec![1]);
        let mut corules = RuleSystem::new(2);
        corules.add_rule(0, "co-head", vec![]);
        (rules, corules)
    }

    #[test]
    fn coinduction_alone_proves_too_much() {
        let (rules, corules) = max_elem_demo();
        let gfp = rules.gfp();
        assert!(gfp.set.contains(0));
        assert!(gfp.set.contains(1), "the wrong maximum is coinductively consistent");

        let bound = corules.union(&rules).lfp();
        assert!(bound.set.contains(0));
        assert!(!bound.set.contains(1));

        let gen = generalized(&rules, &corules);
        assert!(gen.set.contains(0));
        assert!(!gen.set.contains(1), "corules restore the intended meaning");
    }

    #[test]
    fn saturation_records_minimal_derivations() {
        // 2 <- 1 <- 0 (axiom), plus a deep detour 2 <- 3 <- 3.
        let mut rules = RuleSystem::new(4);
        rules.add_rule(0, "ax", vec![]);
        rules.add_rule(1, "step01", vec![0]);
        rules.add_rule(2, "detour", vec![3]);
        rules.add_rule(2, "step12", vec![1]);
        rules.add_rule(3, "loop", vec![3]);

        let sat = rules.lfp();
        assert!(sat.set.contains(2));
        assert!(!sat.set.contains(3));
        let tree = sat.derivation(&rules, 2, &|j| format!("j{j}")).unwrap();
        assert_eq!(tree.rule, "step12");
        assert_eq!(tree.children.len(), 1);
        assert_eq!(tree.children[0].rule, "step01");
        assert_eq!(tree.children[0].children[0].rule, "ax");
    }

    #[test]
    fn pruning_records_rounds() {
        // 0 has no rules; 1 depends on 0; 2 depends on 1; 3 is self-justified.
        let mut rules = RuleSystem::new(4);
        rules.add_rule(1, "need0", vec![0]);
        rules.add_rule(2, "need1", vec![1]);
        rules.add_rule(3, "self", vec![3]);

        let gfp = rules.gfp();
        assert!(!gfp.set.contains(0));
        assert!(!gfp.set.contains(1));
        assert!(!gfp.set.contains(2));
        assert!(gfp.set.contains(3));
        assert_eq!(gfp.removed_round[0], Some(1));
        assert_eq!(gfp.removed_round[1], Some(2));
        assert_eq!(gfp.removed_round[2], Some(3));
        assert_eq!(gfp.removed_round[3], None);
    }

    #[test]
    fn no_corules_yields_the_inductive_interpretation() {
        let mut rules = RuleSystem::new(3);
        rules.add_rule(0, "ax", vec![]);
        rules.add_rule(1, "from0", vec![0]);
        rules.add_rule(2, "self", vec![2]);
        let gen = generalized(&rules, &RuleSystem::new(3));
        let lfp = rules.lfp();
        assert_eq!(gen.set, lfp.set);
    }

    #[test]
    fn axiom_corules_everywhere_yield_the_coinductive_interpretation() {
        let mut rules = RuleSystem::new(3);
        rules.add_rule(0, "ax", vec![]);
        rules.add_rule(1, "self", vec![1]);
        let mut corules = RuleSystem::new(3);
        for j in 0..3 {
            corules.add_rule(j, "co-any", vec![]);
        }
        let gen = generalized(&rules, &corules);
        assert_eq!(gen.set, rules.gfp().set);
    }

    /// Random rule systems over a small universe.
    fn arb_rules(universe: usize, max_rules: usize) -> impl Strategy<Value = RuleSystem> {
        proptest::collection::vec(
            (0..universe, proptest::collection::vec(0..universe, 0..=3)),
            0..=max_rules,
        )
        .prop_map(move |specs| {
            let mut rs = RuleSystem::new(universe);
            for (i, (conclusion, premises)) in specs.into_iter().enumerate() {
                rs.add_rule(conclusion, format!("r{i}"), premises);
            }
            rs
        })
    }

    fn arb_set(universe: usize) -> impl Strategy<Value = JudgmentSet> {
        proptest::collection::vec(any::<bool>(), universe).prop_map(|bits| {
            let mut set = JudgmentSet::empty(bits.len());
            for (j, b) in bits.iter().enumerate() {
                if *b {
                    set.insert(j);
                }
            }
            set
        })
    }

    proptest! {
        #[test]
        fn inf_op_is_monotone(rules in arb_rules(6, 10), x in arb_set(6), y in arb_set(6)) {
            let mut union = x.clone();
            for j in y.iter() {
                union.insert(j);
            }
            prop_assert!(rules.inf_op(&x).is_subset_of(&rules.inf_op(&union)));
        }

        #[test]
        fn lfp_is_a_fixpoint_below_gfp(rules in arb_rules(6, 10)) {
            let lfp = rules.lfp();
            prop_assert_eq!(rules.inf_op(&lfp.set), lfp.set.clone());
            prop_assert!(lfp.set.is_subset_of(&rules.gfp().set));
        }

        #[test]
        fn generalized_interpretation_sits_in_both_bounds(
            rules in arb_rules(6, 10),
            corules in arb_rules(6, 6),
        ) {
            let gen = generalized(&rules, &corules);
            prop_assert!(gen.set.is_subset_of(&rules.gfp().set));
            prop_assert!(gen.set.is_subset_of(&gen.bound.set));
            // The result is itself consistent under the rules.
            prop_assert!(gen.set.is_subset_of(&rules.inf_op(&gen.set)));
        }

        #[test]
        fn bounded_coinduction_is_sound(
            rules in arb_rules(6, 10),
            corules in arb_rules(6, 6),
            candidate in arb_set(6),
        ) {
            let gen = generalized(&rules, &corules);
            if bounded_coinduction(&rules, &corules, &candidate).is_ok() {
                prop_assert!(candidate.is_subset_of(&gen.set));
            }
            // The generalized set itself always passes the criterion.
            prop_assert!(bounded_coinduction(&rules, &corules, &gen.set).is_ok());
        }
    }
}

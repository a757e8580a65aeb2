//! Turns parsed equations into a normalized state table.
//!
//! Every equation gets a state slot up front, so forward and mutual
//! references resolve without any ordering requirement. A term in guarded
//! position (a prefix continuation) simply becomes the referenced slot; a
//! term in unguarded position (an equation body or sum operand) must produce
//! node content on its own, which is where undefined names, unguarded
//! recursion and ill-formed sums surface. Equations that denote `nil` are
//! rewired to the canonical nil state afterwards, and unreachable states are
//! pruned so structurally equal inputs elaborate to identical tables.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::{Pos, SourceFile, Term, TermId};
use crate::system::{Alphabet, Node, SessionSystem, StateRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("{pos}: undefined type name `{name}`")]
    UndefinedTypeName { pos: Pos, name: String },
    #[error("{pos}: unguarded recursion through `{name}` (every cycle needs a prefix)")]
    UnguardedRecursion { pos: Pos, name: String },
    #[error("{pos}: operands of `+` must be prefixes of the same polarity")]
    PolarityMismatch { pos: Pos },
    #[error("{pos}: label `{label}` offered more than once in the same choice")]
    OverlappingLabels { pos: Pos, label: String },
}

pub fn elaborate(file: &SourceFile) -> Result<SessionSystem, ElabError> {
    let alphabet = Alphabet::new(file.alphabet.clone())
        .expect("the parser rejects empty and duplicated alphabets");
    // equations that are plain references share the referent's slot, so
    // `type Z = Y` binds Z to the very state Y denotes
    let mut alias_of: HashMap<&str, (&str, Pos)> = HashMap::new();
    for def in &file.typedefs {
        if let Term::Ref(target) = file.term(def.term) {
            alias_of.insert(&def.name, (target, file.term_pos(def.term)));
        }
    }
    let resolve = |name: &str| -> Result<String, ElabError> {
        let mut seen = HashSet::from([name]);
        let mut cur = name;
        while let Some(&(next, pos)) = alias_of.get(cur) {
            if !seen.insert(next) {
                return Err(ElabError::UnguardedRecursion {
                    pos,
                    name: next.to_string(),
                });
            }
            if file.typedef(next).is_none() {
                return Err(ElabError::UndefinedTypeName {
                    pos,
                    name: next.to_string(),
                });
            }
            cur = next;
        }
        Ok(cur.to_string())
    };

    let mut elab = Elaborator {
        file,
        sys: SessionSystem::new(alphabet),
        slots: HashMap::new(),
        values: HashMap::new(),
        shared: Vec::new(),
    };
    for def in &file.typedefs {
        if !alias_of.contains_key(def.name.as_str()) {
            let slot = elab.sys.alloc_slot();
            elab.slots.insert(def.name.clone(), slot);
        }
    }
    for def in &file.typedefs {
        let slot = elab.slots[&resolve(&def.name)?];
        elab.slots.insert(def.name.clone(), slot);
        elab.sys.add_name(def.name.clone(), slot);
    }
    let mut nil_slots: HashSet<StateRef> = HashSet::new();
    for def in &file.typedefs {
        if alias_of.contains_key(def.name.as_str()) {
            continue;
        }
        // an earlier equation may already have demanded this one
        let value = match elab.values.get(&def.name) {
            Some(value) => value.clone(),
            None => {
                let mut visiting = HashSet::new();
                visiting.insert(def.name.clone());
                elab.value_of(&def.name, def.term, &mut visiting)?
            }
        };
        match value {
            Node::Nil => {
                nil_slots.insert(elab.slots[&def.name]);
            }
            branch => elab.sys.set_state(elab.slots[&def.name], branch),
        }
    }
    Ok(normalize(elab.sys, &nil_slots))
}

struct Elaborator<'a> {
    file: &'a SourceFile,
    sys: SessionSystem,
    slots: HashMap<String, StateRef>,
    /// Node content per equation, computed at most once.
    values: HashMap<String, Node>,
    /// Finished anonymous states by content, so identical continuations
    /// written twice become one state.
    shared: Vec<(Node, StateRef)>,
}

impl Elaborator<'_> {
    fn value_of(
        &mut self,
        name: &str,
        term: TermId,
        visiting: &mut HashSet<String>,
    ) -> Result<Node, ElabError> {
        let value = self.node_of(term, visiting)?;
        self.values.insert(name.to_string(), value.clone());
        Ok(value)
    }

    /// The node content a term denotes in unguarded position.
    fn node_of(&mut self, term: TermId, visiting: &mut HashSet<String>) -> Result<Node, ElabError> {
        let pos = self.file.term_pos(term);
        match self.file.term(term).clone() {
            Term::Nil => Ok(Node::Nil),
            Term::End(polarity) => Ok(Node::Branch {
                polarity,
                cont: vec![self.sys.nil(); self.sys.alphabet().len()],
            }),
            Term::Ref(name) => {
                if !self.slots.contains_key(&name) {
                    return Err(ElabError::UndefinedTypeName { pos, name });
                }
                if let Some(value) = self.values.get(&name) {
                    return Ok(value.clone());
                }
                if !visiting.insert(name.clone()) {
                    return Err(ElabError::UnguardedRecursion { pos, name });
                }
                let def = self.file.typedef(&name).expect("slot implies definition");
                let value = self.value_of(&name, def.term, visiting)?;
                visiting.remove(&name);
                Ok(value)
            }
            Term::Prefix { polarity, labels, body } => {
                let target = self.state_of(body)?;
                let mut cont = vec![self.sys.nil(); self.sys.alphabet().len()];
                let mut seen = HashSet::new();
                for label in &labels {
                    let idx = self
                        .sys
                        .alphabet()
                        .lookup(label)
                        .expect("the parser checks labels against the alphabet");
                    if !seen.insert(idx) {
                        return Err(ElabError::OverlappingLabels {
                            pos,
                            label: label.clone(),
                        });
                    }
                    cont[idx] = target;
                }
                Ok(Node::Branch { polarity, cont })
            }
            Term::Sum(operands) => {
                let mut acc = self.node_of(operands[0], visiting)?;
                for &operand in &operands[1..] {
                    let next = self.node_of(operand, visiting)?;
                    acc = self.merge(acc, next, pos)?;
                }
                Ok(acc)
            }
        }
    }

    /// The state a term denotes in guarded position. References resolve to
    /// their slot directly, which is what lets cycles through equations work.
    fn state_of(&mut self, term: TermId) -> Result<StateRef, ElabError> {
        let pos = self.file.term_pos(term);
        match self.file.term(term) {
            Term::Nil => Ok(self.sys.nil()),
            Term::Ref(name) => match self.slots.get(name.as_str()) {
                Some(&slot) => Ok(slot),
                None => Err(ElabError::UndefinedTypeName {
                    pos,
                    name: name.clone(),
                }),
            },
            _ => {
                let mut visiting = HashSet::new();
                match self.node_of(term, &mut visiting)? {
                    Node::Nil => unreachable!("only literals and refs denote nil"),
                    branch => {
                        if let Some((_, s)) = self.shared.iter().find(|(n, _)| *n == branch) {
                            return Ok(*s);
                        }
                        let slot = self.sys.alloc_slot();
                        self.sys.set_state(slot, branch.clone());
                        self.shared.push((branch, slot));
                        Ok(slot)
                    }
                }
            }
        }
    }

    fn merge(&self, a: Node, b: Node, pos: Pos) -> Result<Node, ElabError> {
        let (pa, ca) = match a {
            Node::Branch { polarity, cont } => (polarity, cont),
            Node::Nil => return Err(ElabError::PolarityMismatch { pos }),
        };
        let (pb, cb) = match b {
            Node::Branch { polarity, cont } => (polarity, cont),
            Node::Nil => return Err(ElabError::PolarityMismatch { pos }),
        };
        if pa != pb {
            return Err(ElabError::PolarityMismatch { pos });
        }
        let nil = self.sys.nil();
        let mut cont = Vec::with_capacity(ca.len());
        for (idx, (&ta, &tb)) in ca.iter().zip(&cb).enumerate() {
            cont.push(match (ta == nil, tb == nil) {
                (true, _) => tb,
                (_, true) => ta,
                (false, false) => {
                    return Err(ElabError::OverlappingLabels {
                        pos,
                        label: self.sys.alphabet().label(idx).to_string(),
                    })
                }
            });
        }
        Ok(Node::Branch { polarity: pa, cont })
    }
}

/// Rewires nil-valued equations to state 0, drops unreachable states and
/// renumbers the survivors in ascending order.
fn normalize(mut sys: SessionSystem, nil_slots: &HashSet<StateRef>) -> SessionSystem {
    let unalias = |s: StateRef| if nil_slots.contains(&s) { StateRef(0) } else { s };
    for idx in 1..sys.state_count() {
        let s = StateRef(idx);
        if let Node::Branch { polarity, cont } = sys.node(s) {
            if cont.iter().any(|t| nil_slots.contains(t)) {
                let node = Node::Branch {
                    polarity: *polarity,
                    cont: cont.iter().map(|&t| unalias(t)).collect(),
                };
                sys.set_state(s, node);
            }
        }
    }
    let roots: Vec<StateRef> = sys.names().map(|(_, s)| unalias(s)).collect();
    let reachable = sys.reachable(&roots);
    let mut kept: Vec<usize> = vec![0];
    kept.extend((1..sys.state_count()).filter(|&i| reachable.contains(&StateRef(i))));

    let remap: HashMap<StateRef, StateRef> = kept
        .iter()
        .enumerate()
        .map(|(new, &old)| (StateRef(old), StateRef(new)))
        .collect();
    let states: Vec<Node> = kept
        .iter()
        .map(|&old| match sys.node(StateRef(old)) {
            Node::Nil => Node::Nil,
            Node::Branch { polarity, cont } => Node::Branch {
                polarity: *polarity,
                cont: cont.iter().map(|t| remap[t]).collect(),
            },
        })
        .collect();
    let mut out = SessionSystem::from_states(sys.alphabet().clone(), states);
    for (name, s) in sys.names() {
        out.add_name(name, remap[&unalias(s)]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use crate::system::Polarity;

    fn system(text: &str) -> SessionSystem {
        elaborate(&parse(text).unwrap()).unwrap()
    }

    fn error(text: &str) -> ElabError {
        elaborate(&parse(text).unwrap()).unwrap_err()
    }

    #[test]
    fn mutually_recursive_equations_resolve() {
        let sys = system("alphabet { a, b }\ntype X = !a.Y\ntype Y = ?b.X\n");
        assert_eq!(sys.state_count(), 3);
        let x = sys.lookup_name("X").unwrap();
        let y = sys.lookup_name("Y").unwrap();
        assert_eq!(sys.polarity(x), Some(Polarity::Out));
        assert_eq!(sys.cont(x, 0), Some(y));
        assert_eq!(sys.cont(y, 1), Some(x));
        assert_eq!(sys.dom(y), vec![1]);
    }

    #[test]
    fn equation_aliases_collapse() {
        // X is just another name for Y, so both bind to the same state
        let sys = system("alphabet { a }\ntype X = Y\ntype Y = !a.X\n");
        let x = sys.lookup_name("X").unwrap();
        let y = sys.lookup_name("Y").unwrap();
        assert_eq!(x, y);
        assert_eq!(sys.cont(x, 0), Some(x));
        assert_eq!(sys.state_count(), 2);
    }

    #[test]
    fn alias_chains_resolve_and_alias_cycles_are_rejected() {
        let sys = system("alphabet { a }\ntype A = B\ntype B = C\ntype C = !a.A\n");
        let a = sys.lookup_name("A").unwrap();
        assert_eq!(sys.lookup_name("B"), Some(a));
        assert_eq!(sys.lookup_name("C"), Some(a));
        assert!(matches!(
            error("alphabet { a }\ntype A = B\ntype B = A\n"),
            ElabError::UnguardedRecursion { .. }
        ));
        assert!(matches!(
            error("alphabet { a }\ntype A = B\n"),
            ElabError::UndefinedTypeName { .. }
        ));
    }

    #[test]
    fn nil_equations_rewire_to_state_zero() {
        let sys = system("alphabet { a }\ntype X = nil\ntype Y = !a.X\n");
        assert_eq!(sys.lookup_name("X"), Some(sys.nil()));
        let y = sys.lookup_name("Y").unwrap();
        assert_eq!(sys.cont(y, 0), Some(sys.nil()));
        assert!(sys.dom(y).is_empty(), "a nil continuation is not offered");
        assert_eq!(sys.state_count(), 2, "the placeholder slot is pruned");
    }

    #[test]
    fn sums_merge_disjoint_choices() {
        let sys = system("alphabet { a, b, c }\ntype X = !a.end! + !{b,c}.end?\n");
        let x = sys.lookup_name("X").unwrap();
        assert_eq!(sys.dom(x), vec![0, 1, 2]);
        assert_eq!(sys.cont(x, 1), sys.cont(x, 2));
        assert_ne!(sys.cont(x, 0), sys.cont(x, 1));
    }

    #[test]
    fn terminated_branches_are_neutral_sum_operands() {
        let sys = system("alphabet { a }\ntype X = end! + !a.X\ntype Y = !a.Y\n");
        let x = sys.lookup_name("X").unwrap();
        let y = sys.lookup_name("Y").unwrap();
        assert!(sys.bisimilar(x, y));
    }

    #[test]
    fn unguarded_recursion_is_rejected() {
        assert_eq!(
            error("alphabet { a }\ntype X = X\n"),
            ElabError::UnguardedRecursion {
                pos: Pos { line: 2, col: 10 },
                name: "X".to_string()
            }
        );
        // the cycle may pass through several equations
        assert!(matches!(
            error("alphabet { a }\ntype X = Y + !a.X\ntype Y = X + !a.nil\n"),
            ElabError::UnguardedRecursion { .. }
        ));
        // parentheses do not guard anything
        assert!(matches!(
            error("alphabet { a }\ntype X = (X)\n"),
            ElabError::UnguardedRecursion { .. }
        ));
    }

    #[test]
    fn guarded_cycles_are_fine_even_when_self_referential() {
        let sys = system("alphabet { a, b }\ntype X = !a.!b.X\n");
        let x = sys.lookup_name("X").unwrap();
        assert_eq!(sys.state_count(), 3);
        let mid = sys.cont(x, 0).unwrap();
        assert_eq!(sys.cont(mid, 1), Some(x));
    }

    #[test]
    fn undefined_names_are_reported_with_their_position() {
        assert_eq!(
            error("alphabet { a }\ntype X = !a.Missing\n"),
            ElabError::UndefinedTypeName {
                pos: Pos { line: 2, col: 13 },
                name: "Missing".to_string()
            }
        );
    }

    #[test]
    fn ill_formed_sums_are_rejected() {
        assert!(matches!(
            error("alphabet { a, b }\ntype X = !a.nil + ?b.nil\n"),
            ElabError::PolarityMismatch { .. }
        ));
        assert!(matches!(
            error("alphabet { a }\ntype X = nil + !a.nil\n"),
            ElabError::PolarityMismatch { .. }
        ));
        assert_eq!(
            error("alphabet { a, b }\ntype X = !a.end! + !a.end?\n"),
            ElabError::OverlappingLabels {
                pos: Pos { line: 2, col: 10 },
                label: "a".to_string()
            }
        );
        assert_eq!(
            error("alphabet { a, b }\ntype X = !{a,a}.nil\n"),
            ElabError::OverlappingLabels {
                pos: Pos { line: 2, col: 10 },
                label: "a".to_string()
            }
        );
    }

    #[test]
    fn identical_anonymous_continuations_become_one_state() {
        let sys = system("alphabet { a, b }\ntype X = !a.!b.end! + !b.!b.end!\n");
        let x = sys.lookup_name("X").unwrap();
        let left = sys.cont(x, 0).unwrap();
        let right = sys.cont(x, 1).unwrap();
        assert_eq!(left, right);
        // nil, X, the shared !b.end! continuation and end! itself
        assert_eq!(sys.state_count(), 4);
    }

    #[test]
    fn files_without_equations_elaborate_to_the_empty_system() {
        let sys = system("alphabet { a }\n");
        assert_eq!(sys.state_count(), 1);
        assert_eq!(sys.names().count(), 0);
    }
}

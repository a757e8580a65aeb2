//! Finite-state representation of binary session types.
//!
//! A session type is a state in a [`SessionSystem`]: a finite automaton over a
//! fixed message alphabet. Every state is either `Nil` (the absence of a
//! behaviour, used to model undefined continuations) or a `Branch` carrying a
//! polarity (input `?` or output `!`) and one continuation per alphabet label.
//! Continuation maps are total; a label that the type does not mention simply
//! continues to `Nil`. Terminated sessions are branches whose continuations
//! are all `Nil`: `end!` is an empty output branch (the "win" state of a
//! client), `end?` an empty input branch.
//!
//! Recursive types are ordinary cycles in the state graph, so all operations
//! here are plain graph algorithms. A system keeps exactly one `Nil` state at
//! index 0 and every `Nil` reference is aliased to it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Direction of a branch: `In` receives (`?`), `Out` sends (`!`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    In,
    Out,
}

impl Polarity {
    /// The opposite direction, so sends synchronize with receives.
    pub fn dual(self) -> Polarity {
        match self {
            Polarity::In => Polarity::Out,
            Polarity::Out => Polarity::In,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarity::In => '?',
            Polarity::Out => '!',
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Index of a state inside its [`SessionSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateRef(pub usize);

impl fmt::Display for StateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The finite message alphabet shared by every state of a system.
///
/// Labels are interned; operations refer to them by index, in declaration
/// order. The order is significant: it fixes the deterministic iteration
/// order used everywhere (domains, counterexamples, printed output).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

/// Errors raised while assembling an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("alphabet must contain at least one label")]
    Empty,
    #[error("duplicate alphabet label `{0}`")]
    DuplicateLabel(String),
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Result<Alphabet, AlphabetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Alphabet {
            labels: Vec::new(),
            index: HashMap::new(),
        };
        for label in labels {
            let label = label.into();
            if out.index.contains_key(&label) {
                return Err(AlphabetError::DuplicateLabel(label));
            }
            out.index.insert(label.clone(), out.labels.len());
            out.labels.push(label);
        }
        if out.labels.is_empty() {
            return Err(AlphabetError::Empty);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// A one-label alphabet makes every internal choice trivial, which is
    /// usually a modelling mistake; callers surface this as a warning.
    pub fn is_singleton(&self) -> bool {
        self.labels.len() == 1
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn lookup(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// One state of a session system.
///
/// `cont` always has one entry per alphabet label; unsupported labels point
/// at the canonical `Nil` state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Nil,
    Branch {
        polarity: Polarity,
        cont: Vec<StateRef>,
    },
}

/// Errors raised by [`SessionSystem::plus`], the branch-merging operation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlusError {
    #[error("cannot merge branches with different polarities (or a nil operand)")]
    PolarityMismatch,
    #[error("label `{0}` appears on both sides of a merge")]
    OverlappingLabels(String),
}

/// A session type automaton: an alphabet, a state table and the named roots.
///
/// Index 0 is always the canonical `Nil` state. Systems are assembled once
/// (by the elaborator, a generator or a test) and then treated as immutable;
/// every query below takes `&self`.
#[derive(Debug, Clone)]
pub struct SessionSystem {
    alphabet: Alphabet,
    states: Vec<Node>,
    names: Vec<(String, StateRef)>,
}

impl SessionSystem {
    pub fn new(alphabet: Alphabet) -> SessionSystem {
        SessionSystem {
            alphabet,
            states: vec![Node::Nil],
            names: Vec::new(),
        }
    }

    /// Builds a system from a complete state table. The table must respect
    /// the representation invariants checked here: state 0 is the only `Nil`
    /// state, every continuation map covers the alphabet, and every target is
    /// in range. Intended for generators and tests that assemble cyclic
    /// graphs directly; panics on a malformed table since that is a bug in
    /// the caller, not an input error.
    pub fn from_states(alphabet: Alphabet, states: Vec<Node>) -> SessionSystem {
        assert!(
            matches!(states.first(), Some(Node::Nil)),
            "state 0 must be the canonical Nil state"
        );
        for (i, node) in states.iter().enumerate() {
            match node {
                Node::Nil => assert_eq!(i, 0, "Nil may only appear at index 0"),
                Node::Branch { cont, .. } => {
                    assert_eq!(cont.len(), alphabet.len(), "state {i}: partial continuation map");
                    for t in cont {
                        assert!(t.0 < states.len(), "state {i}: dangling continuation");
                    }
                }
            }
        }
        SessionSystem {
            alphabet,
            states,
            names: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// The canonical `Nil` state.
    pub fn nil(&self) -> StateRef {
        StateRef(0)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateRef> + '_ {
        (0..self.states.len()).map(StateRef)
    }

    pub fn node(&self, s: StateRef) -> &Node {
        &self.states[s.0]
    }

    /// Appends a state and returns its reference. `Nil` nodes are never
    /// duplicated; pushing one yields the canonical `Nil` state instead.
    pub fn push_state(&mut self, node: Node) -> StateRef {
        match node {
            Node::Nil => self.nil(),
            Node::Branch { polarity, cont } => {
                assert_eq!(
                    cont.len(),
                    self.alphabet.len(),
                    "continuation map must cover the whole alphabet"
                );
                for target in &cont {
                    assert!(target.0 < self.states.len(), "dangling continuation");
                }
                self.states.push(Node::Branch { polarity, cont });
                StateRef(self.states.len() - 1)
            }
        }
    }

    /// Reserves a slot whose content will be filled in later with
    /// [`set_state`](Self::set_state). The placeholder is a legal branch so
    /// the table stays well formed even if construction is abandoned midway.
    pub(crate) fn alloc_slot(&mut self) -> StateRef {
        let nil = self.nil();
        self.states.push(Node::Branch {
            polarity: Polarity::In,
            cont: vec![nil; self.alphabet.len()],
        });
        StateRef(self.states.len() - 1)
    }

    /// Overwrites a previously reserved slot. The canonical `Nil` state is
    /// immutable and `Nil` content is rejected here; callers that discover a
    /// slot should have been `Nil` must rewire references to state 0 instead.
    pub(crate) fn set_state(&mut self, s: StateRef, node: Node) {
        assert!(s.0 != 0, "the nil state cannot be redefined");
        match &node {
            Node::Nil => panic!("slots cannot be set to nil, alias them to state 0"),
            Node::Branch { cont, .. } => {
                assert_eq!(
                    cont.len(),
                    self.alphabet.len(),
                    "continuation map must cover the whole alphabet"
                );
                for target in cont {
                    assert!(target.0 < self.states.len(), "dangling continuation");
                }
            }
        }
        self.states[s.0] = node;
    }

    /// Like [`push_state`](Self::push_state) but reuses an existing state
    /// with identical content when there is one.
    pub fn intern(&mut self, node: Node) -> StateRef {
        if let Some(idx) = self.states.iter().position(|n| *n == node) {
            return StateRef(idx);
        }
        self.push_state(node)
    }

    /// Builds an output branch with the given continuations, `Nil` elsewhere.
    pub fn branch(&mut self, polarity: Polarity, arms: &[(usize, StateRef)]) -> StateRef {
        let mut cont = vec![self.nil(); self.alphabet.len()];
        for &(label, target) in arms {
            cont[label] = target;
        }
        self.push_state(Node::Branch { polarity, cont })
    }

    pub fn add_name(&mut self, name: impl Into<String>, s: StateRef) {
        self.names.push((name.into(), s));
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, StateRef)> {
        self.names.iter().map(|(n, s)| (n.as_str(), *s))
    }

    pub fn lookup_name(&self, name: &str) -> Option<StateRef> {
        self.names
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }

    /// The first name bound to `s`, if any.
    pub fn name_of(&self, s: StateRef) -> Option<&str> {
        self.names
            .iter()
            .find(|(_, r)| *r == s)
            .map(|(n, _)| n.as_str())
    }

    pub fn polarity(&self, s: StateRef) -> Option<Polarity> {
        match self.node(s) {
            Node::Nil => None,
            Node::Branch { polarity, .. } => Some(*polarity),
        }
    }

    /// The continuation of `s` on `label`: `None` for `Nil` states, otherwise
    /// the (possibly `Nil`) target.
    pub fn cont(&self, s: StateRef, label: usize) -> Option<StateRef> {
        match self.node(s) {
            Node::Nil => None,
            Node::Branch { cont, .. } => Some(cont[label]),
        }
    }

    /// Labels with a non-`Nil` continuation, in alphabet order. `Nil` has an
    /// empty domain, as do the terminated branches `end!` and `end?`.
    pub fn dom(&self, s: StateRef) -> Vec<usize> {
        match self.node(s) {
            Node::Nil => Vec::new(),
            Node::Branch { cont, .. } => (0..cont.len())
                .filter(|&x| cont[x] != self.nil())
                .collect(),
        }
    }

    /// Whether `s` is an actual behaviour (any branch, including `end!` and
    /// `end?`), as opposed to `Nil`.
    pub fn is_defined(&self, s: StateRef) -> bool {
        !matches!(self.node(s), Node::Nil)
    }

    /// Whether `s` is `end!`, the state in which a client has successfully
    /// completed its interaction.
    pub fn is_win(&self, s: StateRef) -> bool {
        matches!(self.node(s), Node::Branch { polarity: Polarity::Out, .. })
            && self.dom(s).is_empty()
    }

    /// Whether `s` is a terminated branch (`end!` or `end?`).
    pub fn is_end(&self, s: StateRef) -> bool {
        self.is_defined(s) && self.dom(s).is_empty()
    }

    /// Merges two branches of the same polarity with disjoint domains into a
    /// single branch offering both sets of choices. The terminated branch of
    /// matching polarity is a neutral element.
    pub fn plus(&mut self, s1: StateRef, s2: StateRef) -> Result<StateRef, PlusError> {
        let (p1, c1) = match self.node(s1) {
            Node::Branch { polarity, cont } => (*polarity, cont.clone()),
            Node::Nil => return Err(PlusError::PolarityMismatch),
        };
        let (p2, c2) = match self.node(s2) {
            Node::Branch { polarity, cont } => (*polarity, cont.clone()),
            Node::Nil => return Err(PlusError::PolarityMismatch),
        };
        if p1 != p2 {
            return Err(PlusError::PolarityMismatch);
        }
        let nil = self.nil();
        let mut cont = Vec::with_capacity(c1.len());
        for x in 0..c1.len() {
            if c1[x] != nil && c2[x] != nil {
                return Err(PlusError::OverlappingLabels(
                    self.alphabet.label(x).to_string(),
                ));
            }
            cont.push(if c1[x] != nil { c1[x] } else { c2[x] });
        }
        Ok(self.intern(Node::Branch { polarity: p1, cont }))
    }

    /// Behavioural equality. Session types are deterministic, so two states
    /// are bisimilar exactly when their unfoldings into (possibly infinite)
    /// trees coincide; the check walks pairs of states and treats an already
    /// visited pair as equal, which is sound on cyclic graphs.
    pub fn bisimilar(&self, s1: StateRef, s2: StateRef) -> bool {
        let mut seen = BTreeSet::new();
        let mut work = vec![(s1, s2)];
        while let Some((a, b)) = work.pop() {
            if a == b || !seen.insert((a, b)) {
                continue;
            }
            match (self.node(a), self.node(b)) {
                (Node::Nil, Node::Nil) => {}
                (
                    Node::Branch { polarity: pa, cont: ca },
                    Node::Branch { polarity: pb, cont: cb },
                ) => {
                    if pa != pb {
                        return false;
                    }
                    for x in 0..ca.len() {
                        work.push((ca[x], cb[x]));
                    }
                }
                _ => return false,
            }
        }
        true
    }

    /// A short, deterministic rendering of a state for diagnostics and
    /// witnesses. Named states print as their name; anonymous ones unfold a
    /// few levels and fall back to `#index` where the graph loops or the
    /// depth budget runs out.
    pub fn describe(&self, s: StateRef) -> String {
        self.describe_depth(s, 3, true)
    }

    fn describe_depth(&self, s: StateRef, depth: usize, top: bool) -> String {
        if !top {
            if let Some(name) = self.name_of(s) {
                return name.to_string();
            }
        }
        match self.node(s) {
            Node::Nil => "nil".to_string(),
            Node::Branch { polarity, cont } => {
                let dom = self.dom(s);
                if dom.is_empty() {
                    return format!("end{}", polarity.symbol());
                }
                if depth == 0 {
                    return self
                        .name_of(s)
                        .map(str::to_string)
                        .unwrap_or_else(|| format!("{}", s));
                }
                // Group labels sharing a continuation, in alphabet order.
                let mut groups: Vec<(StateRef, Vec<usize>)> = Vec::new();
                for &x in &dom {
                    match groups.iter_mut().find(|(t, _)| *t == cont[x]) {
                        Some((_, labels)) => labels.push(x),
                        None => groups.push((cont[x], vec![x])),
                    }
                }
                let arms: Vec<String> = groups
                    .into_iter()
                    .map(|(target, labels)| {
                        let names: Vec<&str> =
                            labels.iter().map(|&x| self.alphabet.label(x)).collect();
                        let set = if names.len() == 1 {
                            names[0].to_string()
                        } else {
                            format!("{{{}}}", names.join(","))
                        };
                        format!(
                            "{}{}.{}",
                            polarity.symbol(),
                            set,
                            self.describe_depth(target, depth - 1, false)
                        )
                    })
                    .collect();
                arms.join(" + ")
            }
        }
    }

    /// Copies every state of `other` into this system, which must share the
    /// same alphabet. Returns the translation from `other`'s references to
    /// their copies here; the canonical `Nil` states are identified. Useful
    /// for comparing states that live in different systems.
    pub fn absorb(&mut self, other: &SessionSystem) -> Vec<StateRef> {
        assert_eq!(
            self.alphabet.labels().collect::<Vec<_>>(),
            other.alphabet.labels().collect::<Vec<_>>(),
            "absorb requires identical alphabets"
        );
        let offset = self.states.len();
        let map = |s: StateRef| {
            if s.0 == 0 {
                StateRef(0)
            } else {
                StateRef(offset + s.0 - 1)
            }
        };
        for node in other.states.iter().skip(1) {
            match node {
                Node::Nil => unreachable!("nil only lives at state 0"),
                Node::Branch { polarity, cont } => self.states.push(Node::Branch {
                    polarity: *polarity,
                    cont: cont.iter().map(|&t| map(t)).collect(),
                }),
            }
        }
        (0..other.states.len()).map(|i| map(StateRef(i))).collect()
    }

    /// Every state reachable from `roots` through continuation edges,
    /// including edges into `Nil`.
    pub fn reachable(&self, roots: &[StateRef]) -> BTreeSet<StateRef> {
        let mut seen: BTreeSet<StateRef> = BTreeSet::new();
        let mut work: Vec<StateRef> = roots.to_vec();
        while let Some(s) = work.pop() {
            if !seen.insert(s) {
                continue;
            }
            if let Node::Branch { cont, .. } = self.node(s) {
                for &t in cont {
                    if !seen.contains(&t) {
                        work.push(t);
                    }
                }
            }
        }
        seen
    }
}

//! Renders states back into source text.
//!
//! The output is a self-contained file: the full alphabet followed by one
//! equation per state that needs a name. A state needs a name when it is a
//! requested root or when it is referenced from more than one place; every
//! other state is inlined at its single point of use, which keeps the text
//! close to how a person would write it. Inlining always terminates because
//! any cycle either passes through a root or gives some state two incoming
//! references, and both cases force a name.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::KEYWORDS;
use crate::system::{Node, SessionSystem, StateRef};

/// Renders `root` as a file whose first equation denotes it. Re-parsing and
/// re-elaborating the output yields a state bisimilar to `root`.
pub fn print(sys: &SessionSystem, root: StateRef) -> String {
    let preferred = sys.name_of(root).map(|n| (root, n.to_string()));
    render(sys, &[root], &preferred.into_iter().collect(), &[])
}

/// Renders every named state of the system, one equation per name, in
/// declaration order. Extra names bound to an already printed state become
/// plain alias equations at the end.
pub fn print_system(sys: &SessionSystem) -> String {
    let mut roots = Vec::new();
    let mut preferred: HashMap<StateRef, String> = HashMap::new();
    let mut aliases: Vec<(String, String)> = Vec::new();
    for (name, s) in sys.names() {
        match preferred.get(&s) {
            Some(canonical) => aliases.push((name.to_string(), canonical.clone())),
            None => {
                preferred.insert(s, name.to_string());
                roots.push(s);
            }
        }
    }
    render(sys, &roots, &preferred, &aliases)
}

fn render(
    sys: &SessionSystem,
    roots: &[StateRef],
    preferred: &HashMap<StateRef, String>,
    aliases: &[(String, String)],
) -> String {
    let reachable = sys.reachable(roots);

    // one reference per (source state, distinct target); a state referenced
    // twice gets a name so its text is written once
    let mut refs: BTreeMap<StateRef, usize> = BTreeMap::new();
    for &s in &reachable {
        let mut targets: Vec<StateRef> = sys
            .dom(s)
            .iter()
            .filter_map(|&x| sys.cont(s, x))
            .collect();
        targets.dedup();
        targets.sort_unstable();
        targets.dedup();
        for t in targets {
            *refs.entry(t).or_insert(0) += 1;
        }
    }

    let needs_name = |s: StateRef| {
        roots.contains(&s)
            || (sys.is_defined(s) && !sys.is_end(s) && refs.get(&s).copied().unwrap_or(0) >= 2)
    };

    let mut taken: HashSet<String> = KEYWORDS.iter().map(|k| k.to_string()).collect();
    taken.extend(sys.alphabet().labels().map(str::to_string));
    let mut names: BTreeMap<StateRef, String> = BTreeMap::new();
    let mut order: Vec<StateRef> = roots.to_vec();
    order.extend(reachable.iter().copied().filter(|s| !roots.contains(s)));
    let mut fresh = 0;
    for s in order.iter().copied().filter(|&s| needs_name(s)) {
        if names.contains_key(&s) {
            continue;
        }
        let reuse = preferred
            .get(&s)
            .map(String::as_str)
            .or_else(|| sys.name_of(s))
            .filter(|n| is_identifier(n) && !taken.contains(*n));
        let name = match reuse {
            Some(n) => n.to_string(),
            None => loop {
                let candidate = format!("X{fresh}");
                fresh += 1;
                if !taken.contains(&candidate) {
                    break candidate;
                }
            },
        };
        taken.insert(name.clone());
        names.insert(s, name);
    }

    let mut out = String::from("alphabet { ");
    out.push_str(&sys.alphabet().labels().collect::<Vec<_>>().join(", "));
    out.push_str(" }\n");
    for s in order.iter().copied().filter(|s| names.contains_key(s)) {
        out.push('\n');
        out.push_str(&format!("type {} = {}\n", names[&s], rhs(sys, s, &names)));
    }
    for (name, canonical) in aliases {
        out.push('\n');
        out.push_str(&format!("type {name} = {canonical}\n"));
    }
    out
}

/// The right hand side of a named state's equation.
fn rhs(sys: &SessionSystem, s: StateRef, names: &BTreeMap<StateRef, String>) -> String {
    match sys.node(s) {
        Node::Nil => "nil".to_string(),
        Node::Branch { polarity, .. } if sys.dom(s).is_empty() => {
            format!("end{}", polarity.symbol())
        }
        Node::Branch { polarity, .. } => groups(sys, s)
            .into_iter()
            .map(|(target, labels)| {
                format!(
                    "{}{}.{}",
                    polarity.symbol(),
                    labelset(sys, &labels),
                    operand(sys, target, names)
                )
            })
            .collect::<Vec<_>>()
            .join(" + "),
    }
}

/// A state in continuation position: its name if it has one, otherwise its
/// text inline, parenthesized when it is a sum of several choices.
fn operand(sys: &SessionSystem, s: StateRef, names: &BTreeMap<StateRef, String>) -> String {
    if let Some(name) = names.get(&s) {
        return name.clone();
    }
    let text = rhs(sys, s, names);
    if groups(sys, s).len() > 1 {
        format!("({text})")
    } else {
        text
    }
}

/// Offered labels grouped by shared continuation, in order of each group's
/// first label; labels inside a group stay in alphabet order.
fn groups(sys: &SessionSystem, s: StateRef) -> Vec<(StateRef, Vec<usize>)> {
    let mut out: Vec<(StateRef, Vec<usize>)> = Vec::new();
    for x in sys.dom(s) {
        let target = sys.cont(s, x).expect("dom labels have continuations");
        match out.iter_mut().find(|(t, _)| *t == target) {
            Some((_, labels)) => labels.push(x),
            None => out.push((target, vec![x])),
        }
    }
    out
}

fn labelset(sys: &SessionSystem, labels: &[usize]) -> String {
    let rendered: Vec<&str> = labels.iter().map(|&x| sys.alphabet().label(x)).collect();
    if rendered.len() == 1 {
        rendered[0].to_string()
    } else {
        format!("{{{}}}", rendered.join(","))
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

//! Decision procedures for binary session types.
//!
//! The crate answers three families of questions about finite-state session
//! types: does a type always retain the option to terminate (fair
//! termination), does a client interact successfully with a server
//! (compliance, in a safety and a fairness flavour), and can one server be
//! substituted for another without breaking any client (subtyping, again in
//! two flavours).
//!
//! Each property is decided twice, by design: once through an inference-rule
//! engine computing finite fixpoints ([`gis`] and [`checkers`]), and once
//! through direct reachability analyses on the underlying transition systems
//! ([`semantics`]). The two implementations share no code, so agreement
//! between them is meaningful evidence of correctness; `fairck selftest` and
//! the acceptance test suite cross-check them on enumerated and randomly
//! generated systems.
//!
//! Types are written in a small textual language (see [`syntax`]) and checked
//! with the `fairck` command-line tool.

pub mod checkers;
pub mod gis;
pub mod report;
pub mod selftest;
pub mod semantics;
pub mod syntax;
pub mod system;
pub mod witness;

#[cfg(test)]
pub(crate) mod fixtures;

pub use semantics::{Action, Config};
pub use system::{Alphabet, Node, Polarity, SessionSystem, StateRef};
pub use witness::{Verdict, Witness};

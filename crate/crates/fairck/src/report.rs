//! The command line's uniform report: one schema for every check, with a
//! JSON form that is byte-identical across runs and a human form that can
//! color its verdicts.
//!
//! The JSON layout is fixed: `version`, `command`, `judgment`, `mode`
//! (`"safety"`, `"fair"` or null), `holds`, `witness` (an object tagged by
//! `kind`, or null) and `elapsed_ms`. Timing varies between runs, so the
//! JSON form pins `elapsed_ms` to zero; the measured value only appears in
//! the human rendering.

use serde::Serialize;

use crate::witness::{DerivationNode, Witness};

/// Which interpretation of a two-flavored judgment was checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Safety,
    Fair,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub judgment: String,
    pub mode: Option<Mode>,
    pub holds: bool,
    pub witness: Option<serde_json::Value>,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let frozen = Report { elapsed_ms: 0, ..self.clone() };
        serde_json::to_string_pretty(&frozen).expect("reports have no unserializable fields")
    }

    /// The one-line human verdict; witness details are rendered separately
    /// by [`render_witness`].
    pub fn headline(&self, style: &Style) -> String {
        let mode = match self.mode {
            Some(Mode::Safety) => " (safety mode)",
            Some(Mode::Fair) => " (fair mode)",
            None => "",
        };
        format!(
            "{}{}: {} [{} ms]",
            self.judgment,
            mode,
            style.verdict(self.holds),
            self.elapsed_ms,
        )
    }
}

/// Terminal styling, controlled by FAIRCK_COLOR=auto|always|never and
/// defaulting to color exactly when standard output is a terminal.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub enabled: bool,
}

impl Style {
    pub fn from_env() -> Style {
        use std::io::IsTerminal;
        let enabled = match std::env::var("FAIRCK_COLOR").as_deref() {
            Ok("always") => true,
            Ok("never") => false,
            _ => std::io::stdout().is_terminal(),
        };
        Style { enabled }
    }

    pub fn plain() -> Style {
        Style { enabled: false }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.enabled {
            format!("\u{1b}[{code}m{text}\u{1b}[0m")
        } else {
            text.to_string()
        }
    }

    pub fn verdict(&self, holds: bool) -> String {
        if holds {
            self.paint("32", "holds")
        } else {
            self.paint("31", "fails")
        }
    }

    fn emphasis(&self, text: &str) -> String {
        self.paint("1", text)
    }
}

/// The indented human block for a witness, newline-terminated.
pub fn render_witness(witness: &Witness, style: &Style) -> String {
    let mut out = String::new();
    match witness {
        Witness::Derivation { bounding, justification } => {
            if let Some(just) = justification {
                out.push_str(&format!("  justified by {}", style.emphasis(&just.rule)));
                if just.premises.is_empty() {
                    out.push_str(" with no premises\n");
                } else {
                    out.push_str(&format!(" with premises {}\n", just.premises.join("; ")));
                }
            }
            if let Some(tree) = bounding {
                out.push_str("  bounding derivation:\n");
                render_tree(tree, 2, style, &mut out);
            }
        }
        Witness::Trace { trace, terminal, note } => {
            out.push_str(&format!("  {note}\n"));
            out.push_str(&format!("    trace: {}\n", render_steps(trace)));
            out.push_str(&format!("    ends at {terminal}\n"));
        }
        Witness::Divergence { left, right, escape_trace, note } => {
            out.push_str(&format!("  {note}\n"));
            out.push_str(&format!("    left:  {left}\n"));
            out.push_str(&format!("    right: {right}\n"));
            out.push_str(&format!("    escape trace: {}\n", render_steps(escape_trace)));
        }
        Witness::Client { source, root } => {
            out.push_str(&format!("  discriminating client {}:\n", style.emphasis(root)));
            for line in source.lines() {
                if line.is_empty() {
                    out.push('\n');
                } else {
                    out.push_str(&format!("    {line}\n"));
                }
            }
        }
        Witness::SearchExhausted { budget, note } => {
            out.push_str(&format!("  no client found within {budget} states: {note}\n"));
        }
    }
    out
}

fn render_tree(node: &DerivationNode, depth: usize, style: &Style, out: &mut String) {
    out.push_str(&format!(
        "{}{} by {}\n",
        "  ".repeat(depth),
        node.judgment,
        style.emphasis(&node.rule),
    ));
    for child in &node.children {
        render_tree(child, depth + 1, style, out);
    }
}

fn render_steps(steps: &[String]) -> String {
    if steps.is_empty() {
        "(empty)".to_string()
    } else {
        steps.join(" · ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(witness: Option<serde_json::Value>) -> Report {
        Report {
            version: "0.0.0".to_string(),
            command: "comp".to_string(),
            judgment: "compliance of ⟨X, Y⟩".to_string(),
            mode: Some(Mode::Safety),
            holds: true,
            witness,
            elapsed_ms: 17,
        }
    }

    #[test]
    fn json_reports_are_independent_of_timing() {
        let mut a = sample(None);
        let mut b = sample(None);
        a.elapsed_ms = 1;
        b.elapsed_ms = 99;
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_json().contains("\"elapsed_ms\": 0"));
    }

    #[test]
    fn headlines_carry_the_mode_and_timing() {
        let report = sample(None);
        assert_eq!(
            report.headline(&Style::plain()),
            "compliance of ⟨X, Y⟩ (safety mode): holds [17 ms]"
        );
        let colored = Style { enabled: true };
        assert!(report.headline(&colored).contains("\u{1b}[32mholds\u{1b}[0m"));
    }

    #[test]
    fn traces_render_with_their_terminal() {
        let witness = Witness::Trace {
            trace: vec!["!a".to_string(), "?b".to_string()],
            terminal: "X".to_string(),
            note: "why".to_string(),
        };
        assert_eq!(
            render_witness(&witness, &Style::plain()),
            "  why\n    trace: !a · ?b\n    ends at X\n"
        );
        let empty = Witness::Trace {
            trace: Vec::new(),
            terminal: "X".to_string(),
            note: "why".to_string(),
        };
        assert!(render_witness(&empty, &Style::plain()).contains("trace: (empty)"));
    }
}

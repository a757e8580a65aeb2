//! Command-line front end: parse session type files, run the checkers and
//! report verdicts with stable exit codes (0 the judgment holds, 1 it
//! fails, 2 usage, parse or internal errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairck::checkers::{compliance, fair_compliance, fair_subtyping, fair_termination, subtyping};
use fairck::report::{render_witness, Mode, Report, Style};
use fairck::selftest::{selftest, SelftestOptions, SelftestOutcome};
use fairck::syntax::{elaborate, parse, print_system};
use fairck::system::{SessionSystem, StateRef};
use fairck::witness::{explain, synth_discriminating_client, Check, SynthError, Verdict, Witness};

#[derive(Parser)]
#[command(
    name = "fairck",
    version,
    about = "Decides fair termination, compliance and subtyping of binary session types"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a file and print the normalized system
    Parse {
        /// Session type file to check
        file: PathBuf,
    },
    /// Decide fair termination of a named type
    Term {
        /// Session type file defining the type
        file: PathBuf,
        /// Name of the type to check
        #[arg(short = 't', long = "type", value_name = "NAME")]
        name: String,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Decide compliance of a client with a server
    Comp {
        /// Session type file defining both types
        file: PathBuf,
        /// Name of the client type
        #[arg(short = 'c', long, value_name = "NAME")]
        client: String,
        /// Name of the server type
        #[arg(short = 's', long, value_name = "NAME")]
        server: String,
        /// Safety-only or fair interpretation; the two genuinely differ
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Decide whether one type can serve in place of another
    Sub {
        /// Session type file defining both types
        file: PathBuf,
        /// Name of the candidate subtype
        #[arg(short = 't', long, value_name = "NAME")]
        left: String,
        /// Name of the candidate supertype
        #[arg(short = 's', long, value_name = "NAME")]
        right: String,
        /// Safety-only or fair interpretation; the two genuinely differ
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// In fair mode, when the judgment fails, search for a client
        /// telling the two types apart and attach it as the witness
        #[arg(long)]
        synth_client: bool,
        /// State budget for the client search
        #[arg(long, default_value_t = 64, value_name = "STATES")]
        budget: usize,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Compare every checker with its oracle on generated systems
    Selftest {
        /// Seed for the random half of the sweep
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Largest generated system, counting nil; zero runs nothing
        #[arg(long, default_value_t = 4)]
        max_states: usize,
        /// Labels per generated alphabet
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=26))]
        alphabet: u8,
        /// How many random systems to draw
        #[arg(long, default_value_t = 500, value_name = "COUNT")]
        random: usize,
        /// Deliberately misreport one verdict to prove the sweep catches it
        #[arg(long, hide = true)]
        inject_fault: bool,
        /// Emit the report as JSON
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct OutputFlags {
    /// Attach replayable evidence to the verdict
    #[arg(long)]
    explain: bool,
    /// Emit the report as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Safety,
    Fair,
}

impl From<ModeArg> for Mode {
    fn from(mode: ModeArg) -> Mode {
        match mode {
            ModeArg::Safety => Mode::Safety,
            ModeArg::Fair => Mode::Fair,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(diagnostic) => {
            eprintln!("fairck: {diagnostic}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Parse { file } => {
            let sys = load(&file)?;
            print!("{}", print_system(&sys));
            Ok(ExitCode::SUCCESS)
        }
        Command::Term { file, name, output } => {
            let sys = load(&file)?;
            let root = resolve(&sys, &name)?;
            let started = Instant::now();
            let check = Check::FairTermination(root);
            let verdict = if output.explain {
                explain(&sys, check)
            } else {
                fair_termination(&sys, root)
            };
            // termination has no safety-only reading, the judgment is fair
            Ok(finish("term", &sys, check, Some(Mode::Fair), verdict, started, &output))
        }
        Command::Comp { file, client, server, mode, output } => {
            let sys = load(&file)?;
            let c = resolve(&sys, &client)?;
            let s = resolve(&sys, &server)?;
            let started = Instant::now();
            let check = match mode {
                ModeArg::Safety => Check::Compliance(c, s),
                ModeArg::Fair => Check::FairCompliance(c, s),
            };
            let verdict = match (output.explain, mode) {
                (true, _) => explain(&sys, check),
                (false, ModeArg::Safety) => compliance(&sys, c, s),
                (false, ModeArg::Fair) => fair_compliance(&sys, c, s),
            };
            Ok(finish("comp", &sys, check, Some(mode.into()), verdict, started, &output))
        }
        Command::Sub { file, left, right, mode, synth_client, budget, output } => {
            if synth_client && mode == ModeArg::Safety {
                return Err("--synth-client needs --mode fair; the client witnesses the \
                            fair judgment"
                    .to_string());
            }
            let sys = load(&file)?;
            let a = resolve(&sys, &left)?;
            let b = resolve(&sys, &right)?;
            let started = Instant::now();
            let check = match mode {
                ModeArg::Safety => Check::Subtyping(a, b),
                ModeArg::Fair => Check::FairSubtyping(a, b),
            };
            let mut verdict = match (output.explain, mode) {
                (true, _) => explain(&sys, check),
                (false, ModeArg::Safety) => subtyping(&sys, a, b),
                (false, ModeArg::Fair) => fair_subtyping(&sys, a, b),
            };
            if synth_client && !verdict.holds {
                match synth_discriminating_client(&sys, a, b, budget) {
                    Ok(client) => verdict.witness = Some(client),
                    Err(SynthError::NotFound { budget }) => {
                        verdict.witness = Some(Witness::SearchExhausted {
                            budget,
                            note: "the candidate space holds no discriminating client of this \
                                   size; the verdict stands on the checker alone"
                                .to_string(),
                        });
                    }
                    Err(SynthError::Inapplicable) => {
                        eprintln!(
                            "fairck: client synthesis is inapplicable here (it needs plain \
                             subtyping to hold and fair subtyping to fail)"
                        );
                    }
                }
            }
            Ok(finish("sub", &sys, check, Some(mode.into()), verdict, started, &output))
        }
        Command::Selftest { seed, max_states, alphabet, random, inject_fault, json } => {
            let started = Instant::now();
            let outcome = selftest(&SelftestOptions {
                seed,
                max_states,
                alphabet: alphabet as usize,
                random_count: random,
                inject_fault,
            });
            Ok(report_selftest(&outcome, started, json))
        }
    }
}

fn load(path: &Path) -> Result<SessionSystem, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file = parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    elaborate(&file).map_err(|e| format!("{}: {e}", path.display()))
}

fn resolve(sys: &SessionSystem, name: &str) -> Result<StateRef, String> {
    sys.lookup_name(name).ok_or_else(|| {
        let mut known: Vec<&str> = sys.names().map(|(n, _)| n).collect();
        known.sort_unstable();
        if known.is_empty() {
            format!("unknown type name `{name}` (the file defines no types)")
        } else {
            format!("unknown type name `{name}` (the file defines {})", known.join(", "))
        }
    })
}

fn finish(
    command: &str,
    sys: &SessionSystem,
    check: Check,
    mode: Option<Mode>,
    verdict: Verdict,
    started: Instant,
    output: &OutputFlags,
) -> ExitCode {
    let report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        judgment: check.describe(sys),
        mode,
        holds: verdict.holds,
        witness: verdict
            .witness
            .as_ref()
            .map(|w| serde_json::to_value(w).expect("witnesses have no unserializable fields")),
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    if output.json {
        println!("{}", report.to_json());
    } else {
        let style = Style::from_env();
        println!("{}", report.headline(&style));
        if let Some(witness) = &verdict.witness {
            print!("{}", render_witness(witness, &style));
        }
    }
    exit_for(verdict.holds)
}

fn report_selftest(outcome: &SelftestOutcome, started: Instant, json: bool) -> ExitCode {
    let holds = outcome.passed();
    let report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "selftest".to_string(),
        judgment: "agreement of the checkers with their oracles on generated systems".to_string(),
        mode: None,
        holds,
        witness: outcome.discrepancies().next().map(|d| {
            serde_json::json!({
                "kind": "discrepancy",
                "detail": d.detail,
                "system": d.system,
            })
        }),
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    if json {
        println!("{}", report.to_json());
        return exit_for(holds);
    }
    let style = Style::from_env();
    for (label, sweep) in [("exhaustive", &outcome.exhaustive), ("random", &outcome.random)] {
        println!(
            "{label}: {} systems, {} termination checks, {} compliance checks, {} inclusions",
            sweep.systems,
            sweep.termination_checks,
            sweep.compliance_checks,
            sweep.inclusion_checks,
        );
    }
    for d in outcome.discrepancies() {
        println!("discrepancy: {}", d.detail);
        for line in d.system.lines() {
            println!("    {line}");
        }
    }
    println!("{}", report.headline(&style));
    exit_for(holds)
}

fn exit_for(holds: bool) -> ExitCode {
    if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

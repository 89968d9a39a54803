//! `amn`: format, validate, classify, scaffold, simulate and render AMN models.

use std::collections::BTreeMap;
use std::io::{IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amn_core::autonomy::{self, ClassificationReport};
use amn_core::model::{AgentPath, Model};
use amn_core::render::{self, BadgeStyle, RenderOptions};
use amn_core::simulator::{self, ConformanceReport, Overflow, RunConfig};
use amn_core::{dsl, validator, Diagnostic, Severity};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const DIAGNOSTICS_SCHEMA: &str = "amn.diagnostics/1";
const CLASSIFICATION_SCHEMA: &str = "amn.classification/1";
const SIMULATION_SCHEMA: &str = "amn.simulation/1";

#[derive(Parser)]
#[command(name = "amn", version, about = "Autonomy Model and Notation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OverflowArg {
    Queue,
    Drop,
}

#[derive(Subcommand)]
enum Command {
    /// Print a model in canonical form.
    Fmt {
        /// Model file, or `-` for stdin.
        file: PathBuf,
        /// Report whether the file is canonical instead of printing it.
        #[arg(long)]
        check: bool,
    },
    /// Check a model and list its findings.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Autonomy levels and interaction pattern of a human-machine pair.
    Classify {
        file: PathBuf,
        #[arg(long)]
        human: String,
        #[arg(long)]
        machine: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the minimal model for an autonomy level.
    Scaffold {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=20))]
        level: u8,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a model and write its trace as JSON lines.
    Simulate {
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        ticks: u64,
        #[arg(long)]
        seed: u64,
        /// Injection schedule: lines of `tick=<n> <agent> <action> [args]`.
        #[arg(long)]
        inject: Option<PathBuf>,
        /// Write the trace here; a run summary then goes to stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Measure conformity and notification discipline on the trace.
        #[arg(long)]
        check_conformance: bool,
        #[arg(long, default_value_t = simulator::ATTENTION_BASE)]
        attention_base: u32,
        #[arg(long, default_value_t = simulator::RELIABILITY_THRESHOLD)]
        reliability_threshold: f64,
        /// Gate deliveries with probability equal to the channel reliability.
        #[arg(long)]
        stochastic: bool,
        #[arg(long, value_enum, default_value = "queue")]
        overflow: OverflowArg,
        /// Instance count for a multi-instance agent, as `Path=N`.
        #[arg(long = "count", value_parser = parse_count)]
        counts: Vec<(String, u32)>,
    },
    /// Emit the model as a DOT graph.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Draw agents at this depth without their sub-agents (roots are 1).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        collapse: Option<u64>,
        /// Spell badges out as words.
        #[arg(long)]
        words: bool,
        /// List rules and states in agent labels.
        #[arg(long)]
        behavior: bool,
        /// Leave channel parameters off edge labels.
        #[arg(long)]
        no_params: bool,
    },
    /// Emit a DOT graph explaining every badge and line style.
    Legend {
        #[arg(long)]
        words: bool,
    },
}

fn parse_count(s: &str) -> Result<(String, u32), String> {
    let (path, n) = s.split_once('=').ok_or("expected `Path=N`")?;
    let n = n.parse().map_err(|e| format!("bad count `{n}`: {e}"))?;
    Ok((path.to_owned(), n))
}

/// How a command ended, mapped onto the exit status.
enum Failure {
    /// Error-severity findings: exit 1.
    Findings,
    /// Bad invocation or unreadable input: exit 2.
    Usage(String),
    /// Something went wrong on our side: exit 3.
    Internal(String),
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn internal(msg: impl Into<String>) -> Failure {
    Failure::Internal(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| run(cli.command));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Findings)) => ExitCode::from(1),
        Ok(Err(Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
        Err(_) => ExitCode::from(3),
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Fmt { file, check } => fmt(&file, check),
        Command::Validate { file, format } => validate(&file, format),
        Command::Classify {
            file,
            human,
            machine,
            format,
        } => classify(&file, &human, &machine, format),
        Command::Scaffold { level, output } => {
            let model = autonomy::scaffold_level(level).ok_or_else(|| usage("level must be 1 to 20"))?;
            emit(output.as_deref(), &dsl::print(&model))
        }
        Command::Simulate {
            file,
            ticks,
            seed,
            inject,
            trace,
            check_conformance,
            attention_base,
            reliability_threshold,
            stochastic,
            overflow,
            counts,
        } => {
            let config = RunConfig {
                attention_base,
                reliability_threshold,
                stochastic_reliability: stochastic,
                overflow: match overflow {
                    OverflowArg::Queue => Overflow::Queue,
                    OverflowArg::Drop => Overflow::DropNewest,
                },
                instance_counts: counts.into_iter().collect::<BTreeMap<_, _>>(),
                ..RunConfig::default()
            };
            simulate(&file, ticks, seed, inject.as_deref(), trace.as_deref(), check_conformance, config)
        }
        Command::Render {
            file,
            output,
            collapse,
            words,
            behavior,
            no_params,
        } => {
            let opts = RenderOptions {
                show_params: !no_params,
                show_behavior: behavior,
                collapse_below_depth: collapse.map(|c| c as usize),
                badge_style: badge_style(words),
            };
            let (model, _) = load_valid(&file)?;
            let dot = render::to_dot(&model, &opts).map_err(|e| internal(e.to_string()))?;
            emit(output.as_deref(), &dot)
        }
        Command::Legend { words } => {
            let opts = RenderOptions {
                badge_style: badge_style(words),
                ..RenderOptions::default()
            };
            emit(None, &render::legend(&opts))
        }
    }
}

fn badge_style(words: bool) -> BadgeStyle {
    if words {
        BadgeStyle::Words
    } else {
        BadgeStyle::ShortCodes
    }
}

/// Display name and contents of an input, where `-` is stdin.
fn read_input(path: &Path) -> Result<(String, String), Failure> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| usage(format!("cannot read stdin: {e}")))?;
        return Ok(("<stdin>".into(), text));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok((path.display().to_string(), text))
}

fn color_enabled() -> bool {
    std::env::var_os("AMN_NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn diagnostic_line(d: &Diagnostic, color: bool) -> String {
    let line = d.to_string();
    if !color {
        return line;
    }
    let (word, code) = match d.severity {
        Severity::Error => ("error", "31"),
        Severity::Warning => ("warning", "33"),
    };
    line.replacen(&format!(": {word} "), &format!(": \x1b[{code}m{word}\x1b[0m "), 1)
}

fn report_to_stderr(diags: &[Diagnostic]) {
    let color = std::env::var_os("AMN_NO_COLOR").is_none() && std::io::stderr().is_terminal();
    for d in diags {
        eprintln!("{}", diagnostic_line(d, color));
    }
}

/// Parses a model, reporting syntax errors on stderr.
fn load(path: &Path) -> Result<(Model, String), Failure> {
    let (name, text) = read_input(path)?;
    let (model, diags) = dsl::parse(&text, &name);
    if diags.iter().any(Diagnostic::is_error) {
        report_to_stderr(&diags);
        return Err(Failure::Findings);
    }
    Ok((model, name))
}

/// Parses and validates a model, reporting error findings on stderr.
fn load_valid(path: &Path) -> Result<(Model, String), Failure> {
    let (model, name) = load(path)?;
    let errors: Vec<Diagnostic> = validator::validate(&model)
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        report_to_stderr(&errors);
        return Err(Failure::Findings);
    }
    Ok((model, name))
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) if p != Path::new("-") => std::fs::write(p, text)
            .map_err(|e| internal(format!("cannot write {}: {e}", p.display()))),
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| internal(format!("cannot write output: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| internal(e.to_string()))
}

fn fmt(path: &Path, check: bool) -> Outcome {
    let (name, text) = read_input(path)?;
    let formatted = match dsl::fmt(&text, &name) {
        Ok(f) => f,
        Err(diags) => {
            report_to_stderr(&diags);
            return Err(Failure::Findings);
        }
    };
    if !check {
        return emit(None, &formatted);
    }
    if formatted == text {
        Ok(())
    } else {
        eprintln!("{name}: not in canonical form");
        Err(Failure::Findings)
    }
}

#[derive(Serialize)]
struct DiagnosticsDoc<'a> {
    schema: &'static str,
    diagnostics: &'a [Diagnostic],
}

fn validate(path: &Path, format: Format) -> Outcome {
    let (name, text) = read_input(path)?;
    let (model, mut diags) = dsl::parse(&text, &name);
    diags.extend(validator::validate(&model));
    amn_core::diagnostic::sort(&mut diags);
    diags.dedup();
    let out = match format {
        Format::Text => {
            let color = color_enabled();
            diags
                .iter()
                .map(|d| diagnostic_line(d, color) + "\n")
                .collect()
        }
        Format::Json => to_json(&DiagnosticsDoc {
            schema: DIAGNOSTICS_SCHEMA,
            diagnostics: &diags,
        })?,
    };
    emit(None, &out)?;
    if diags.iter().any(Diagnostic::is_error) {
        Err(Failure::Findings)
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct ClassificationDoc<'a> {
    schema: &'static str,
    human: &'a str,
    machine: &'a str,
    #[serde(flatten)]
    report: &'a ClassificationReport,
}

fn classify(path: &Path, human: &str, machine: &str, format: Format) -> Outcome {
    let (model, _) = load_valid(path)?;
    let report = autonomy::classify(&model, &AgentPath::parse(human), &AgentPath::parse(machine))
        .map_err(|e| {
            eprintln!("error: {e}");
            Failure::Findings
        })?;
    let out = match format {
        Format::Json => to_json(&ClassificationDoc {
            schema: CLASSIFICATION_SCHEMA,
            human,
            machine,
            report: &report,
        })?,
        Format::Text => {
            let levels: Vec<String> = report.levels.iter().map(u8::to_string).collect();
            let p = &report.profile;
            let mut s = format!(
                "levels: {}{}\n",
                levels.join(", "),
                if report.approximate { " (approximate)" } else { "" }
            );
            s += &format!(
                "pattern: {}\n",
                report.pattern.map_or("none", |p| p.as_str())
            );
            s += &format!("decision_authority: {}\n", p.decision_authority);
            s += &format!("veto: {}\n", p.veto);
            s += &format!("candidate_flow: {}\n", p.candidate_flow);
            s += &format!("notification: {}\n", p.notification);
            s += &format!("task_transfer: {}\n", p.task_transfer);
            s += &format!("monitoring: {}\n", p.monitoring);
            s += &format!("executor: {}\n", p.executor);
            s += &format!("random_delegation: {}\n", p.random_delegation);
            s
        }
    };
    emit(None, &out)
}

#[derive(Serialize)]
struct SimulationDoc {
    schema: &'static str,
    seed: u64,
    end_tick: u64,
    quiescent: bool,
    events: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    conformance: Option<ConformanceReport>,
}

fn simulate(
    path: &Path,
    ticks: u64,
    seed: u64,
    inject: Option<&Path>,
    trace_out: Option<&Path>,
    check_conformance: bool,
    config: RunConfig,
) -> Outcome {
    let (model, _) = load_valid(path)?;
    let injections = match inject {
        Some(p) => {
            let (name, text) = read_input(p)?;
            simulator::parse_schedule(&text).map_err(|e| usage(format!("{name}: {e}")))?
        }
        None => Vec::new(),
    };
    let trace = simulator::run(&model, seed, ticks, &injections, config).map_err(|e| match e {
        simulator::SimError::ValidationRequired(diags) => {
            report_to_stderr(&diags);
            Failure::Findings
        }
        other => usage(other.to_string()),
    })?;
    let conformance = if check_conformance {
        Some(simulator::check_trace(&trace.events, &model).map_err(|e| internal(e.to_string()))?)
    } else {
        None
    };
    let conforming = conformance.as_ref().is_none_or(|c| c.conforming);
    let summary = to_json(&SimulationDoc {
        schema: SIMULATION_SCHEMA,
        seed,
        end_tick: trace.end_tick,
        quiescent: trace.quiescent,
        events: trace.events.len(),
        conformance,
    })?;
    let lines = simulator::events_to_jsonl(&trace.events);
    match trace_out {
        Some(p) => {
            emit(Some(p), &lines)?;
            emit(None, &summary)?;
        }
        None => {
            emit(None, &lines)?;
            if check_conformance {
                eprint!("{summary}");
            }
        }
    }
    if conforming {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

//! `caio`: run scripted dialogues, talk to the agent, plan, or serve the API.

use std::io::{BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use caio_core::engine::{
    load_scenario, run_scenario, to_jsonl, EngineConfig, Event, EventKind, Input, ScenarioError, Session, SessionSpec,
    StateView, StimulusSpec,
};
use caio_core::planner::{parse_domain, parse_problem, plan, PlanFailure, PlannerConfig, PlanningTask};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "caio", version, about = "Conversational agent with emotions, obligations and plans")]
struct Cli {
    /// Engine configuration file (JSON) replacing the one in the script.
    #[arg(long, global = true, env = "CAIO_CONFIG")]
    config: Option<PathBuf>,
    /// Surface pattern file replacing the one in the script.
    #[arg(long, global = true)]
    patterns: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and check its expectations.
    Run {
        script: PathBuf,
        /// Write the event log here as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Talk to the agent on stdin. `/stimulus <content> [by <agent>]`,
    /// `/state`, `/log` and `/quit` are commands; other lines are utterances.
    Repl {
        /// Scenario whose agents, facts and resources start the session.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Plan for a PDDL problem and print the steps.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, default_value_t = PlannerConfig::default().depth_bound)]
        depth_bound: usize,
        #[arg(long, default_value_t = PlannerConfig::default().deadline_ms)]
        deadline_ms: u64,
    },
    /// Serve the HTTP and WebSocket API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Console assets to serve at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Directory that scenario paths in requests are relative to.
        #[arg(long, default_value = ".")]
        base_dir: PathBuf,
        /// Scenario used for sessions created without a body.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    match &cli.command {
        Command::Run { script, log } => run(&cli, script, log.as_deref()),
        Command::Repl { script } => repl(&cli, script.as_deref()),
        Command::Plan { domain, problem, depth_bound, deadline_ms } => {
            plan_command(domain, problem, PlannerConfig { depth_bound: *depth_bound, deadline_ms: *deadline_ms })
        }
        Command::Serve { host, port, static_dir, base_dir, scenario } => {
            let mut default_spec = SessionSpec::default();
            if let Some(path) = scenario {
                let (s, dir) = load_scenario(path)?;
                default_spec = absolute(s.session, &dir);
            }
            apply_overrides(&cli, &mut default_spec)?;
            let config = caio_service::ServiceConfig {
                base_dir: base_dir.clone(),
                default_spec,
                static_dir: static_dir.clone(),
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(caio_service::serve(SocketAddr::new(*host, *port), config))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Command-line resources are relative to the working directory, so make
/// them absolute before the session resolves paths against its own base.
fn apply_overrides(cli: &Cli, spec: &mut SessionSpec) -> Result<()> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        spec.config = Some(EngineConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?);
    }
    if let Some(path) = &cli.patterns {
        spec.patterns = Some(std::path::absolute(path)?);
    }
    Ok(())
}

fn absolute(mut spec: SessionSpec, dir: &Path) -> SessionSpec {
    for path in [&mut spec.domain, &mut spec.catalog, &mut spec.patterns].into_iter().flatten() {
        *path = dir.join(&*path);
    }
    spec
}

fn run(cli: &Cli, script: &Path, log: Option<&Path>) -> Result<ExitCode> {
    let (mut scenario, base) = load_scenario(script)?;
    apply_overrides(cli, &mut scenario.session)?;
    let transcript = match run_scenario(&scenario, &base) {
        Ok(t) => t,
        Err(e @ ScenarioError::Assertion { .. }) => {
            println!("FAIL {}: {e}", scenario.name);
            return Ok(ExitCode::FAILURE);
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = std::io::stdout().lock();
    for step in &transcript.steps {
        let ticks = match (step.first_tick, step.last_tick) {
            (Some(a), Some(b)) => format!("ticks {a}-{b}"),
            _ => "no events".to_string(),
        };
        writeln!(out, "step {}: {} events, {ticks}", step.index, step.events)?;
        let range = step.first_tick.unwrap_or(1)..=step.last_tick.unwrap_or(0);
        for e in transcript.events.iter().filter(|e| range.contains(&e.tick)) {
            print_event(&mut out, e)?;
        }
    }
    writeln!(out, "PASS {}: {} steps, {} events", transcript.name, transcript.steps.len(), transcript.events.len())?;
    if let Some(path) = log {
        std::fs::write(path, to_jsonl(&transcript.events)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// One line for what a person would notice: what the agent says and feels.
fn print_event(out: &mut impl Write, e: &Event) -> std::io::Result<()> {
    let p = &e.payload;
    match e.kind {
        EventKind::UtteranceOut => writeln!(out, "  {}> {}", p["speaker"].as_str().unwrap_or("?"), p["surface_text"].as_str().unwrap_or("")),
        EventKind::EmotionTriggered => writeln!(
            out,
            "  [{} {} {}]",
            p["category"].as_str().unwrap_or("?"),
            p["content"].as_str().unwrap_or("?"),
            p["intensity"]
        ),
        EventKind::ActionExecuted if p["kind"] == "physical" => writeln!(out, "  ({})", p["step"].as_str().unwrap_or("?")),
        EventKind::PlanFailed => writeln!(out, "  (gave up on {}: {})", p["intention"].as_str().unwrap_or("?"), p["reason"]),
        _ => Ok(()),
    }
}

fn repl(cli: &Cli, script: Option<&Path>) -> Result<ExitCode> {
    let (mut spec, base) = match script {
        Some(path) => {
            let (s, dir) = load_scenario(path)?;
            (s.session, dir)
        }
        None => (SessionSpec::default(), PathBuf::from(".")),
    };
    apply_overrides(cli, &mut spec)?;
    let mut session = Session::create("repl", &spec, &base)?;
    let mut out = std::io::stdout().lock();
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        let line = line.trim();
        let input = match line.split_once(' ').map_or((line, ""), |(a, b)| (a, b.trim())) {
            ("/quit", _) => break,
            ("/state", _) => {
                writeln!(out, "{}", serde_json::to_string_pretty(&StateView::of(&session))?)?;
                continue;
            }
            ("/log", _) => {
                write!(out, "{}", to_jsonl(session.events()))?;
                continue;
            }
            ("/stimulus", rest) => {
                let (content, responsible) = match rest.split_once(" by ") {
                    Some((c, r)) => (c.trim(), Some(r.trim().to_string())),
                    None => (rest, None),
                };
                Input::Stimulus(StimulusSpec { content: content.to_string(), responsible })
            }
            (cmd, _) if cmd.starts_with('/') => {
                writeln!(out, "unknown command {cmd}")?;
                continue;
            }
            _ => Input::Utterance(line.to_string()),
        };
        match session.handle(&input) {
            Ok(events) => {
                for e in &events {
                    print_event(&mut out, e)?;
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
        out.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn plan_command(domain: &Path, problem: &Path, config: PlannerConfig) -> Result<ExitCode> {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let operators = parse_domain(&read(domain)?).with_context(|| format!("parsing {}", domain.display()))?;
    let problem = parse_problem(&read(problem)?).with_context(|| format!("parsing {}", problem.display()))?;
    let task = PlanningTask { init: problem.init, goal: problem.goal, operators, objects: problem.objects };
    match plan(&task, &config) {
        Ok(found) => {
            for step in &found.steps {
                println!("{step}");
            }
            println!("; cost {}", found.cost);
            Ok(ExitCode::SUCCESS)
        }
        Err(PlanFailure::Unreachable) => {
            println!("UNREACHABLE");
            Ok(ExitCode::from(2))
        }
        Err(e @ PlanFailure::Timeout) => bail!(e),
    }
}

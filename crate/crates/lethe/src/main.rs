//! Thin command-line front end over the library: replay activity logs,
//! generate synthetic workloads, and interrogate snapshots.
//!
//! Exit codes: 0 on success, 1 on any user or data error, 2 only when an
//! internal invariant is violated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use lethe::config::EngineConfig;
use lethe::engine::Engine;
use lethe::error::{Error, Result};
use lethe::generate::{generate_activity, generate_photos, ActivityProfile, PhotoProfile};
use lethe::kg::EntityId;
use lethe::preservation::{Decision, Persona};
use lethe::replay::replay_file;
use lethe::snapshot;

#[derive(Parser)]
#[command(
    name = "lethe",
    version,
    about = "Managed forgetting over a personal knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a JSONL activity log and write all reports.
    Replay {
        /// Activity log, one JSON event per line.
        #[arg(long)]
        log: PathBuf,
        /// Engine configuration (JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for reports and the final snapshot.
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce seeded synthetic workloads.
    Generate {
        #[command(subcommand)]
        what: GenerateWhat,
    },
    /// Run a forgetting-aware query against a snapshot.
    Query {
        #[arg(long)]
        snapshot: PathBuf,
        /// Search terms (free text, AND semantics).
        #[arg(long)]
        terms: String,
        /// Restrict hits to items linked to this concept (repeatable).
        #[arg(long = "concept")]
        concept: Vec<String>,
        /// Hide hits below this buoyancy (still counted in coverage).
        #[arg(long)]
        min_mb: Option<f64>,
    },
    /// Assess preservation value of every resource in a snapshot.
    Assess {
        #[arg(long)]
        snapshot: PathBuf,
        /// One of safe_curator, safe_filer, ff_curator, ff_filer.
        #[arg(long)]
        persona: String,
        /// Preserve-or-not cut; the configured default when omitted.
        #[arg(long)]
        threshold: Option<f64>,
        /// Output format: json or csv.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Inspect or canonicalize snapshot files.
    Snapshot {
        #[command(subcommand)]
        op: SnapshotOp,
    },
    /// Show configuration documents.
    Config {
        /// Print the built-in defaults as JSON.
        #[arg(long)]
        defaults: bool,
    },
}

#[derive(Subcommand)]
enum GenerateWhat {
    /// An activity log with planted context blocks plus a ground-truth
    /// sidecar (`<out stem>.truth.jsonl`).
    Activity {
        /// Profile JSON; defaults when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Log file to write (JSONL).
        #[arg(long)]
        out: PathBuf,
    },
    /// A photo collection with usage history, written as an engine snapshot.
    Photos {
        /// Profile JSON; defaults when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Snapshot file to write.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SnapshotOp {
    /// Verify a snapshot and print a short summary.
    Load {
        #[arg(long)]
        file: PathBuf,
    },
    /// Verify a snapshot and rewrite it in canonical bytes.
    Save {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Print a line to stdout; when the reader has gone away (e.g. `| head`),
/// stop quietly instead of panicking.
fn say(text: impl AsRef<str>) {
    use std::io::Write;
    let mut out = std::io::stdout();
    if out.write_all(text.as_ref().as_bytes()).is_err() || out.write_all(b"\n").is_err() {
        std::process::exit(0);
    }
}

fn load_profile<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::InvalidProfile(e.to_string()))
        }
    }
}

fn engine_summary(engine: &Engine) -> String {
    format!(
        "{} things, {} events ingested, {} context records, now = {}",
        engine.graph().things_iter().count(),
        engine.events_ingested(),
        engine.contexts().timeline().len(),
        engine.now()
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Replay { log, config, out } => {
            let cfg = match config {
                Some(path) => EngineConfig::load(path)?,
                None => EngineConfig::default(),
            };
            let report = replay_file(&log, cfg, &out)?;
            say(format!(
                "replayed {} events: {} things, {} contexts touched",
                report.events, report.things, report.contexts
            ));
            for name in &report.outputs {
                say(format!("wrote {}", out.join(name).display()));
            }
        }
        Command::Generate { what } => match what {
            GenerateWhat::Activity { profile, seed, out } => {
                let profile: ActivityProfile = load_profile(&profile)?;
                let (events, truth) = generate_activity(&profile, seed)?;
                let mut log = String::new();
                for ev in &events {
                    log.push_str(&ev.to_line());
                    log.push('\n');
                }
                std::fs::write(&out, log)?;
                let truth_path = truth_sidecar_path(&out);
                let mut sidecar = String::new();
                for t in &truth {
                    let line = serde_json::to_string(t)
                        .map_err(|e| Error::Internal(format!("truth serialization failed: {e}")))?;
                    sidecar.push_str(&line);
                    sidecar.push('\n');
                }
                std::fs::write(&truth_path, sidecar)?;
                say(format!("wrote {} events to {}", events.len(), out.display()));
                say(format!("wrote ground truth to {}", truth_path.display()));
            }
            GenerateWhat::Photos { profile, seed, out } => {
                let profile: PhotoProfile = load_profile(&profile)?;
                let engine = generate_photos(&profile, seed)?;
                snapshot::save(&engine, &out)?;
                say(format!(
                    "wrote {} photos ({}) to {}",
                    profile.photos,
                    engine_summary(&engine),
                    out.display()
                ));
            }
        },
        Command::Query { snapshot: snap, terms, concept, min_mb } => {
            let engine = snapshot::load(&snap)?;
            let filter: Vec<EntityId> = concept.iter().map(|c| EntityId::from(c.as_str())).collect();
            let result = engine.query(&terms, filter, min_mb)?;
            let text = serde_json::to_string_pretty(&result)
                .map_err(|e| Error::Internal(format!("result serialization failed: {e}")))?;
            say(text);
        }
        Command::Assess { snapshot: snap, persona, threshold, format } => {
            let persona: Persona = persona.parse()?;
            let engine = snapshot::load(&snap)?;
            let (assessments, capsule) = engine.assess(persona, threshold)?;
            match format.as_str() {
                "json" => {
                    #[derive(serde::Serialize)]
                    struct Report<'a> {
                        persona: Persona,
                        threshold: f64,
                        preserve: usize,
                        other: usize,
                        promotions: &'a [EntityId],
                        assessments: &'a [lethe::preservation::PVAssessment],
                    }
                    let report = Report {
                        persona,
                        threshold: threshold.unwrap_or(engine.config().pv_threshold),
                        preserve: capsule.preserve.len(),
                        other: capsule.other.len(),
                        promotions: &capsule.promotions,
                        assessments: &assessments,
                    };
                    let text = serde_json::to_string_pretty(&report)
                        .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))?;
                    say(text);
                }
                "csv" => {
                    let mut csv = String::from(
                        "item,investment,gravity,social_graph,popularity,coverage,quality,pv,decision,promoted\n",
                    );
                    for a in &assessments {
                        let _ = writeln!(
                            csv,
                            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{},{}",
                            a.item,
                            a.dims.investment,
                            a.dims.gravity,
                            a.dims.social_graph,
                            a.dims.popularity,
                            a.dims.coverage,
                            a.dims.quality,
                            a.pv,
                            match a.decision {
                                Decision::Preserve => "preserve",
                                Decision::Other => "other",
                            },
                            a.promoted
                        );
                    }
                    say(csv.trim_end_matches('\n'));
                }
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown format {other:?}; use json or csv"
                    )))
                }
            }
        }
        Command::Snapshot { op } => match op {
            SnapshotOp::Load { file } => {
                let engine = snapshot::load(&file)?;
                say(format!("snapshot ok: {}", engine_summary(&engine)));
            }
            SnapshotOp::Save { file, out } => {
                let engine = snapshot::load(&file)?;
                snapshot::save(&engine, &out)?;
                say(format!("rewrote {} -> {}", file.display(), out.display()));
            }
        },
        Command::Config { defaults } => {
            if !defaults {
                return Err(Error::InvalidConfig(
                    "nothing to show: pass --defaults".to_string(),
                ));
            }
            say(EngineConfig::default_json());
        }
    }
    Ok(())
}

/// `log.jsonl` gets its truth next to it as `log.truth.jsonl`.
fn truth_sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("truth.jsonl")
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; those are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

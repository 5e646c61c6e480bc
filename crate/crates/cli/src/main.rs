use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tsconnect_core::extract::{adapters_from_spec, AdapterSet};
use tsconnect_core::feedback::{replay_report, AggregateReport};
use tsconnect_core::graph::{render_svg, GraphDocument};
use tsconnect_core::keyframe::{load_frame_stream, KeyframeParams, StreamError};
use tsconnect_core::pipeline::{run_pipeline, ProcessParams};
use tsconnect_core::ChapterAnnotation;
use tsconnect_server::ServerConfig;

#[derive(Parser)]
#[command(name = "tsconnect", version, about = "Lecture video knowledge graphs and student feedback")]
struct Cli {
    /// SQLite file for the feedback store (in memory when omitted).
    #[arg(long, global = true, env = "TSCONNECT_STORE")]
    store: Option<PathBuf>,
    /// Adapter config file, or mock:<fixture-dir>.
    #[arg(long, global = true, env = "TSCONNECT_ADAPTERS")]
    adapters: Option<String>,
    /// Hann window length for smoothing frame differences (odd, >= 3).
    #[arg(long, global = true, default_value_t = 9)]
    window_len: usize,
    /// Similarity at or above which consecutive keyframes merge.
    #[arg(long, global = true, default_value_t = 0.9)]
    dedup_threshold: f64,
    /// Hexagon side length for the graph layout.
    #[arg(long, global = true, default_value_t = 20.0)]
    hex_side: f64,
    /// Serve the HTTP API on this address.
    #[arg(long, value_name = "ADDR:PORT")]
    serve: Option<SocketAddr>,
    /// Concurrent pipeline jobs when serving.
    #[arg(long, env = "TSCONNECT_WORKERS", default_value_t = 2)]
    workers: usize,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a frame stream and write graph.json,
    /// keyframes.json and warnings.json.
    Process {
        stream: PathBuf,
        #[arg(long)]
        chapters: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Render a laid-out graph.json as SVG.
    ExportSvg {
        graph: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay an event log and print the aggregates.
    Replay {
        log: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Bad invocation; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

impl Cli {
    fn params(&self) -> Result<ProcessParams> {
        if self.window_len < 3 || self.window_len.is_multiple_of(2) {
            return Err(usage(format!("--window-len must be odd and >= 3, got {}", self.window_len)));
        }
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return Err(usage(format!("--dedup-threshold must be in (0, 1], got {}", self.dedup_threshold)));
        }
        if !(self.hex_side > 0.0 && self.hex_side.is_finite()) {
            return Err(usage(format!("--hex-side must be positive, got {}", self.hex_side)));
        }
        Ok(ProcessParams {
            keyframes: KeyframeParams {
                window_len: self.window_len,
                dedup_threshold: self.dedup_threshold,
                noise_floor: None,
            },
            hex_side: self.hex_side,
        })
    }

    fn adapters(&self) -> Result<AdapterSet> {
        let spec = self
            .adapters
            .as_deref()
            .ok_or_else(|| usage("--adapters is required (a config file or mock:<dir>)"))?;
        Ok(adapters_from_spec(spec)?)
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn process(cli: &Cli, stream: &Path, chapters: Option<&Path>, out: &Path) -> Result<()> {
    const USAGE: &str = "usage: tsconnect process <stream> --chapters <file> --out <dir>";
    let chapters_path = chapters.ok_or_else(|| usage(format!("missing --chapters\n{USAGE}")))?;
    if !chapters_path.is_file() {
        return Err(usage(format!("chapters file {} not found\n{USAGE}", chapters_path.display())));
    }
    let params = cli.params()?;
    let chapters: Vec<ChapterAnnotation> = serde_json::from_str(&std::fs::read_to_string(chapters_path)?)
        .with_context(|| format!("parsing {}", chapters_path.display()))?;
    let file = File::open(stream).with_context(|| format!("opening {}", stream.display()))?;
    let video_id = stream.file_stem().and_then(|s| s.to_str()).unwrap_or("video");
    let seq = load_frame_stream(video_id, BufReader::new(file))?;
    let adapters = cli.adapters()?;

    let result = run_pipeline(&seq, &chapters, &adapters, &params)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("graph.json"), result.document.to_json())?;
    write_json(&out.join("keyframes.json"), &result.keyframes)?;
    write_json(&out.join("warnings.json"), &result.warnings)?;
    println!(
        "{} keyframes, {} nodes, {} edges, {} warnings -> {}",
        result.keyframes.len(),
        result.document.graph.node_count(),
        result.document.graph.edge_count(),
        result.warnings.len(),
        out.display()
    );
    Ok(())
}

fn export_svg(graph: &Path, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(graph).with_context(|| format!("reading {}", graph.display()))?;
    let svg = render_svg(&GraphDocument::from_json(&text)?)?;
    match out {
        Some(p) => std::fs::write(p, svg)?,
        None => std::io::stdout().write_all(svg.as_bytes())?,
    }
    Ok(())
}

fn print_report(report: &AggregateReport, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "video {}", report.video_id)?;
    writeln!(out, "{:>7} {:>6} {:>6} {:>9} {:>9}", "second", "plays", "pauses", "avg_speed", "comments")?;
    for s in &report.timeline.seconds {
        writeln!(
            out,
            "{:>7} {:>6} {:>6} {:>9.4} {:>9}",
            s.second, s.plays, s.pauses, s.avg_speed, s.cumulative_comments
        )?;
    }
    writeln!(out)?;
    writeln!(out, "{:<32} {:>6} {:>7} {:>9} {:>6}", "concept", "mean", "markers", "intensity", "alpha")?;
    for c in &report.concepts {
        writeln!(
            out,
            "{:<32} {:>6.3} {:>7} {:>9.4} {:>6.3}",
            c.concept_id, c.mean_score, c.marker_count, c.intensity, c.alpha
        )?;
    }
    writeln!(out)
}

fn replay(log: &Path, json: bool) -> Result<()> {
    let file = File::open(log).with_context(|| format!("opening {}", log.display()))?;
    let reports = replay_report(BufReader::new(file))?;
    let mut stdout = std::io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut stdout, &reports)?;
        writeln!(stdout)?;
    } else if reports.is_empty() {
        writeln!(stdout, "no videos in log")?;
    } else {
        for r in &reports {
            print_report(r, &mut stdout)?;
        }
    }
    Ok(())
}

fn serve(cli: &Cli, addr: SocketAddr) -> Result<()> {
    let mut config = ServerConfig::new(cli.adapters()?);
    config.store_path = cli.store.clone();
    config.params = cli.params()?;
    config.workers = cli.workers;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(tsconnect_server::serve(addr, &config))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match (&cli.command, cli.serve) {
        (Some(Command::Process { stream, chapters, out }), _) => process(cli, stream, chapters.as_deref(), out),
        (Some(Command::ExportSvg { graph, out }), _) => export_svg(graph, out.as_deref()),
        (Some(Command::Replay { log, json }), _) => replay(log, *json),
        (None, Some(addr)) => serve(cli, addr),
        (None, None) => bail!(Usage("nothing to do: give a subcommand or --serve ADDR:PORT".into())),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<StreamError>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

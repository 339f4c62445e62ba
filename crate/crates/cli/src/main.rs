use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfsearch_core::dpd::DEFAULT_CAP;
use lfsearch_core::pipeline::RunConfig;
use lfsearch_core::rules::RuleSet;

mod commands;
mod report;
mod session;

/// Consistent logical forms for table questions, fictitious worlds, and
/// pruning against annotations.
#[derive(Parser)]
#[command(name = "lfsearch", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest logical form size.
    #[arg(long = "s-max", global = true, default_value_t = 7)]
    s_max: usize,
    /// Beam width per cell, or `inf`.
    #[arg(long, global = true, default_value = "inf", value_parser = parse_beam)]
    beam: Beam,
    /// Number of fictitious worlds.
    #[arg(long, global = true, default_value_t = 30)]
    k: usize,
    /// Number of worlds to select for annotation.
    #[arg(long, global = true, default_value_t = 5)]
    l: usize,
    /// Disagreements a class may have and still survive pruning.
    #[arg(long, global = true, default_value_t = 0)]
    tolerance: usize,
    /// Rule manifest listing enabled rules and guards.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Most forms the second pass will enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Greedy forward world selection instead of exhaustive search.
    #[arg(long, global = true)]
    greedy: bool,
}

#[derive(Clone, Copy, Debug)]
struct Beam(Option<usize>);

fn parse_beam(s: &str) -> Result<Beam, String> {
    match s {
        "inf" | "infinity" | "none" => Ok(Beam(None)),
        _ => match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive width or `inf`, got `{s}`")),
            Ok(n) => Ok(Beam(Some(n))),
        },
    }
}

#[derive(Args, Clone)]
struct Batch {
    /// JSON-lines examples: {"id", "question", "table", "answer"}.
    examples: PathBuf,
    /// Output root; each example writes to `<out>/<id>/`.
    #[arg(long, short)]
    out: PathBuf,
    /// Only the example with this id.
    #[arg(long)]
    only: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a form on a table and print its denotation.
    Execute {
        form: String,
        #[arg(long)]
        table: PathBuf,
    },
    /// Print the world graph of a table, one edge per line.
    Graph {
        #[arg(long)]
        table: PathBuf,
    },
    /// Enumerate consistent forms with the two-pass chart.
    Dpd {
        #[command(flatten)]
        batch: Batch,
        /// Also write the pass-1 chart.
        #[arg(long)]
        dump_chart: bool,
    },
    /// Beam search with a seeded random scorer.
    Beam {
        #[command(flatten)]
        batch: Batch,
    },
    /// Generate fictitious worlds.
    Worlds {
        #[command(flatten)]
        batch: Batch,
    },
    /// Group consistent forms by their denotations on the worlds.
    Classes {
        #[command(flatten)]
        batch: Batch,
    },
    /// Choose the worlds to annotate.
    Select {
        #[command(flatten)]
        batch: Batch,
    },
    /// Annotate the selected worlds with the denotations of a given form.
    SelfAnnotate {
        #[command(flatten)]
        batch: Batch,
        #[arg(long)]
        form: String,
    },
    /// Prune classes against `annotations.jsonl`.
    Prune {
        #[command(flatten)]
        batch: Batch,
    },
    /// dpd, worlds, classes and select; then self-annotate and prune when
    /// `--form` is given.
    Run {
        #[command(flatten)]
        batch: Batch,
        #[arg(long)]
        form: Option<String>,
    },
    /// Aggregate per-example statistics under a directory.
    Report { dir: PathBuf },
    /// Write a suite of small random tables and examples.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        max_rows: usize,
        #[arg(long, default_value_t = 4)]
        max_cols: usize,
    },
    /// Convert a WikiTableQuestions data file to JSON-lines examples.
    ConvertWtq {
        /// TSV with id, utterance, context and targetValue columns.
        data: PathBuf,
        /// Directory the `context` paths are relative to.
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the session service.
    Serve {
        #[arg(long, env = "BIND_ADDR", default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, env = "DATA_DIR")]
        data_dir: Option<PathBuf>,
        /// Static annotator assets served under /ui.
        #[arg(long, env = "UI_DIR")]
        ui_dir: Option<PathBuf>,
    },
    /// Talk to a running service.
    Session {
        #[arg(long, env = "LFSEARCH_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
        #[command(subcommand)]
        command: session::SessionCommand,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> CliError {
        CliError { code: 3, message: message.into() }
    }
}

impl From<lfsearch_core::Error> for CliError {
    fn from(e: lfsearch_core::Error) -> CliError {
        use lfsearch_core::Error as E;
        let code = if matches!(e, E::Io { .. } | E::Json { .. }) { 3 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config(g: &Global) -> CliResult<RunConfig> {
    let rules = match &g.rules {
        Some(p) => {
            let raw = std::fs::read_to_string(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
            RuleSet::parse_manifest(&raw)?
        }
        None => RuleSet::default(),
    };
    let cfg = RunConfig {
        s_max: g.s_max,
        beam: g.beam.0,
        k: g.k,
        l: g.l,
        tolerance: g.tolerance,
        seed: g.seed,
        rules,
        cap: g.cap,
        jobs: g.jobs,
        greedy: g.greedy,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    use commands::Step;
    let cfg = config(&cli.global)?;
    match cli.command {
        Command::Execute { form, table } => commands::execute_cmd(&form, &table),
        Command::Graph { table } => commands::graph(&table),
        Command::Dpd { batch, dump_chart } => commands::batch(&batch, &cfg, &[Step::Dpd { dump_chart }]),
        Command::Beam { batch } => commands::batch(&batch, &cfg, &[Step::Beam]),
        Command::Worlds { batch } => commands::batch(&batch, &cfg, &[Step::Worlds]),
        Command::Classes { batch } => commands::batch(&batch, &cfg, &[Step::Classes]),
        Command::Select { batch } => commands::batch(&batch, &cfg, &[Step::Select]),
        Command::SelfAnnotate { batch, form } => commands::batch(&batch, &cfg, &[Step::SelfAnnotate(form)]),
        Command::Prune { batch } => commands::batch(&batch, &cfg, &[Step::Prune]),
        Command::Run { batch, form } => {
            let mut steps = vec![Step::Dpd { dump_chart: false }, Step::Worlds, Step::Classes, Step::Select];
            if let Some(f) = form {
                steps.push(Step::SelfAnnotate(f));
                steps.push(Step::Prune);
            }
            commands::batch(&batch, &cfg, &steps)
        }
        Command::Report { dir } => report::report(&dir),
        Command::Synth { out, count, max_rows, max_cols } => commands::synth(&out, cfg.seed, count, max_rows, max_cols),
        Command::ConvertWtq { data, base, out } => commands::convert_wtq(&data, &base, &out),
        Command::Serve { bind, data_dir, ui_dir } => {
            let defaults = lfsearch_service::Settings { s_max: cfg.s_max, k: cfg.k, l: cfg.l, tolerance: cfg.tolerance, seed: cfg.seed };
            lfsearch_service::init_tracing();
            runtime()?
                .block_on(lfsearch_service::serve(&bind, data_dir, ui_dir, defaults))
                .map_err(|e| CliError::io(format!("{bind}: {e}")))
        }
        Command::Session { server, command } => runtime()?.block_on(session::run(&server, command)),
    }
}

fn runtime() -> CliResult<tokio::runtime::Runtime> {
    tokio::runtime::Runtime::new().map_err(|e| CliError::io(format!("runtime: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lfsearch: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

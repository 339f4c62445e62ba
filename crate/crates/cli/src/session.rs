use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Subcommand;
use lfsearch_api::*;
use lfsearch_client::{Client, ClientError};
use lfsearch_core::exec::execute;
use lfsearch_core::lf::parse_form;
use lfsearch_core::pipeline::load_examples;
use lfsearch_core::table::{read_table, Table};
use lfsearch_core::target::answer_strings;
use lfsearch_core::build_world;
use serde::Serialize;

use crate::{CliError, CliResult};

#[derive(Subcommand)]
pub enum SessionCommand {
    /// Start a session for one example and print its id.
    Create {
        examples: PathBuf,
        #[arg(long)]
        only: String,
        #[arg(long)]
        idempotency_key: Option<String>,
    },
    Show {
        id: String,
    },
    /// Print the next world to annotate.
    Next {
        id: String,
        #[arg(long)]
        batch: bool,
    },
    Annotate {
        id: String,
        #[arg(long)]
        world: usize,
        #[arg(required = true)]
        answer: Vec<String>,
        #[arg(long)]
        annotator: Option<String>,
    },
    Result {
        id: String,
    },
    Classes {
        id: String,
    },
    /// Create a session and answer every suggested world with the
    /// denotation of `--form`, then print the result.
    Drive {
        examples: PathBuf,
        #[arg(long)]
        only: String,
        #[arg(long)]
        form: String,
        #[arg(long, default_value_t = 120)]
        timeout_secs: u64,
    },
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> CliError {
        match e.status() {
            Some(s) if (400..500).contains(&s) => CliError::usage(e.to_string()),
            _ => CliError::io(e.to_string()),
        }
    }
}

fn print<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn request(examples: &Path, only: &str) -> CliResult<CreateSession> {
    let ex = load_examples(examples)?
        .into_iter()
        .find(|e| e.id == only)
        .ok_or_else(|| CliError::usage(format!("no example with id {only}")))?;
    let t = read_table(&ex.table)?;
    Ok(CreateSession {
        table: TableInput { columns: t.columns, rows: t.rows },
        question: ex.question,
        answer: ex.answer,
        config: SessionConfig::default(),
    })
}

pub async fn run(server: &str, cmd: SessionCommand) -> CliResult<()> {
    let c = Client::new(server);
    match cmd {
        SessionCommand::Create { examples, only, idempotency_key } => {
            let v = c.create(&request(&examples, &only)?, idempotency_key.as_deref()).await?;
            println!("{}", v.id);
        }
        SessionCommand::Show { id } => print(&c.get(&id).await?),
        SessionCommand::Next { id, batch } => print(&c.next_world(&id, batch).await?),
        SessionCommand::Annotate { id, world, answer, annotator } => {
            print(&c.annotate(&id, &AnnotationRequest { world_id: world, answer, annotator }).await?)
        }
        SessionCommand::Result { id } => print(&c.result(&id).await?),
        SessionCommand::Classes { id } => print(&c.classes(&id).await?),
        SessionCommand::Drive { examples, only, form, timeout_secs } => {
            let z = parse_form(&form)?;
            let v = c.create(&request(&examples, &only)?, None).await?;
            c.wait_ready(&v.id, Duration::from_secs(timeout_secs)).await?;
            loop {
                let next = c.next_world(&v.id, false).await?;
                let Some(w) = next.world.filter(|_| !next.done) else { break };
                let table = Table::new("served", w.columns, w.rows)?;
                let answer = answer_strings(&execute(&z, &build_world(&table)))
                    .ok_or_else(|| CliError::usage(format!("form has no spellable answer on world {}", w.world_id)))?;
                let p = c.annotate(&v.id, &AnnotationRequest { world_id: w.world_id, answer, annotator: Some("drive".into()) }).await?;
                eprintln!("world {}: {} of {} classes left", w.world_id, p.progress.classes_surviving, p.progress.classes_initial);
            }
            print(&c.result(&v.id).await?);
        }
    }
    Ok(())
}

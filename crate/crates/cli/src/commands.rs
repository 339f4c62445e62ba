use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lfsearch_core::beam::{beam_search, RandomScorer};
use lfsearch_core::dpd::{dump_chart, run_dpd};
use lfsearch_core::exec;
use lfsearch_core::fictitious::{
    equivalence_classes, generate_worlds, prune, select_worlds, world_file, Annotation, EquivalenceClass, Expected,
    Selection, WorldSet,
};
use lfsearch_core::lf::parse_form;
use lfsearch_core::pipeline::{atomic_write, forms_text, load_examples, read_forms, read_json, to_json_pretty, Example, RunConfig};
use lfsearch_core::rng::stream_seed;
use lfsearch_core::synth::suite;
use lfsearch_core::table::{read_table, TableFormat};
use lfsearch_core::target::{answer_strings, Target};
use lfsearch_core::{build_world, Denotation, LogicalForm};
use rayon::prelude::*;

use crate::{CliError, CliResult};

pub enum Step {
    Dpd { dump_chart: bool },
    Beam,
    Worlds,
    Classes,
    Select,
    SelfAnnotate(String),
    Prune,
}

pub fn execute_cmd(form: &str, table: &Path) -> CliResult<()> {
    let z = parse_form(form)?;
    let t = read_table(table)?;
    println!("{}", exec::execute(&z, &build_world(&t)).canonical_json());
    Ok(())
}

pub fn graph(table: &Path) -> CliResult<()> {
    print!("{}", build_world(&read_table(table)?).export_edges());
    Ok(())
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    Ok(atomic_write(path, text.as_bytes())?)
}

fn record_time(dir: &Path, step: &str, start: Instant) -> CliResult<()> {
    let path = dir.join("timing.json");
    let mut times: BTreeMap<String, f64> = read_json(&path).unwrap_or_default();
    times.insert(format!("{step}_ms"), start.elapsed().as_secs_f64() * 1000.0);
    write(&path, &to_json_pretty(&times))
}

/// Runs `steps` in order on every selected example, in parallel across
/// examples. Prints one line per example and step.
pub fn batch(b: &crate::Batch, cfg: &RunConfig, steps: &[Step]) -> CliResult<()> {
    let mut examples = load_examples(&b.examples)?;
    if let Some(id) = &b.only {
        examples.retain(|e| &e.id == id);
        if examples.is_empty() {
            return Err(CliError::usage(format!("no example with id {id}")));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    let results: Vec<CliResult<Vec<String>>> = pool.install(|| {
        examples
            .par_iter()
            .map(|ex| {
                let dir = b.out.join(&ex.id);
                steps.iter().map(|s| run_step(ex, &dir, cfg, s)).collect()
            })
            .collect()
    });
    let mut failure: Option<CliError> = None;
    for (ex, r) in examples.iter().zip(results) {
        match r {
            Ok(lines) => lines.iter().for_each(|l| println!("{}: {l}", ex.id)),
            Err(e) => {
                if examples.len() > 1 {
                    eprintln!("lfsearch: {}: {}", ex.id, e.message);
                }
                if failure.as_ref().is_none_or(|f| e.code > f.code) {
                    failure = Some(e);
                }
            }
        }
    }
    match failure {
        Some(e) if examples.len() == 1 => Err(e),
        Some(e) => Err(CliError { code: e.code, message: "some examples failed".into() }),
        None => Ok(()),
    }
}

fn run_step(ex: &Example, dir: &Path, cfg: &RunConfig, step: &Step) -> CliResult<String> {
    let start = Instant::now();
    match step {
        Step::Dpd { dump_chart: dump } => {
            let w = build_world(&read_table(&ex.table)?);
            let target = Target::new(&ex.answer)?;
            let run = run_dpd(&ex.question, &w, &target, &cfg.rules, cfg.s_max, cfg.cap);
            write(&dir.join("forms.txt"), &forms_text(&run.z.forms))?;
            write(&dir.join("stats.json"), &to_json_pretty(&run.stats))?;
            if *dump {
                write(&dir.join("chart.txt"), &dump_chart(&run.chart))?;
            }
            record_time(dir, "dpd", start)?;
            let s = &run.stats;
            Ok(format!(
                "dpd |Z|={} pass1_cells={} pass2_cells={}{}",
                s.consistent_forms,
                s.pass1_cells,
                s.pass2_cells,
                if s.truncated { " truncated" } else { "" }
            ))
        }
        Step::Beam => {
            let w = build_world(&read_table(&ex.table)?);
            let target = Target::new(&ex.answer)?;
            let scorer = RandomScorer { seed: stream_seed(cfg.seed, "beam", 0) };
            let forms: Vec<LogicalForm> = beam_search(&ex.question, &w, &cfg.rules, cfg.s_max, cfg.beam, &scorer)
                .into_iter()
                .filter(|d| target.matches(&d.denotation))
                .map(|d| d.form.clone())
                .collect();
            write(&dir.join("beam.txt"), &forms_text(&forms))?;
            record_time(dir, "beam", start)?;
            Ok(format!("beam |Z_b|={}", forms.len()))
        }
        Step::Worlds => {
            let table = read_table(&ex.table)?;
            let ws = generate_worlds(&table, &ex.question, cfg.k, cfg.seed)?;
            let wdir = dir.join("worlds");
            for (i, t) in ws.tables.iter().enumerate() {
                write(&wdir.join(world_file(i)), &t.to_delimited(TableFormat::Tsv))?;
            }
            write(&wdir.join("manifest.json"), &ws.manifest_json())?;
            let bad = ws.violations(&table);
            if let Some(v) = bad.first() {
                return Err(CliError::usage(format!("generated worlds violate invariants: {v}")));
            }
            record_time(dir, "worlds", start)?;
            Ok(format!("worlds k={}", ws.len()))
        }
        Step::Classes => {
            let forms = read_forms(&dir.join("forms.txt"))?;
            let ws = WorldSet::load(&dir.join("worlds"))?;
            let classes = equivalence_classes(&forms, &ws.worlds);
            write(&dir.join("classes.json"), &to_json_pretty(&classes))?;
            record_time(dir, "classes", start)?;
            Ok(format!("classes {} over {} forms", classes.len(), forms.len()))
        }
        Step::Select => {
            let classes: Vec<EquivalenceClass> = read_json(&dir.join("classes.json"))?;
            let tuples: Vec<&[Denotation]> = classes.iter().map(|c| c.tuple.as_slice()).collect();
            let sel = if tuples.is_empty() {
                Selection { worlds: Vec::new(), objective: 0.0, entropy: 0.0, partition: Vec::new(), method: "none".into() }
            } else {
                select_worlds(&tuples, cfg.l, cfg.greedy)?
            };
            write(&dir.join("selection.json"), &to_json_pretty(&sel))?;
            record_time(dir, "select", start)?;
            Ok(format!("select worlds={:?} objective={}", sel.worlds, sel.objective))
        }
        Step::SelfAnnotate(form) => {
            let z = parse_form(form)?;
            let sel: Selection = read_json(&dir.join("selection.json"))?;
            let ws = WorldSet::load(&dir.join("worlds"))?;
            let mut lines = String::new();
            let mut skipped = 0;
            for &j in &sel.worlds {
                let w = ws.worlds.get(j).ok_or_else(|| CliError::usage(format!("selection names missing world {j}")))?;
                match answer_strings(&exec::execute(&z, w)) {
                    Some(answer) => {
                        let a = Annotation { world_id: j, answer, annotator: "self".into(), ts: String::new() };
                        lines.push_str(&serde_json::to_string(&a).expect("serializable"));
                        lines.push('\n');
                    }
                    None => skipped += 1,
                }
            }
            write(&dir.join("annotations.jsonl"), &lines)?;
            Ok(format!("self-annotate {} worlds, {skipped} without a spellable answer", sel.worlds.len() - skipped))
        }
        Step::Prune => {
            let classes: Vec<EquivalenceClass> = read_json(&dir.join("classes.json"))?;
            let annotations = read_annotations(&dir.join("annotations.jsonl"))?;
            let worlds: Vec<usize> = annotations.keys().copied().collect();
            let expected: Vec<Expected> = annotations
                .values()
                .map(|a| Target::new(&a.answer).map(Expected::Answer))
                .collect::<Result<_, _>>()?;
            let report = prune(&classes, &worlds, &expected, cfg.tolerance);
            write(&dir.join("pruned.txt"), &forms_text(&report.surviving_forms))?;
            write(&dir.join("prune.json"), &to_json_pretty(&report))?;
            record_time(dir, "prune", start)?;
            Ok(if report.all_pruned {
                "prune all-pruned".to_string()
            } else {
                format!("prune kept {}/{} classes", report.classes_after, report.classes_before)
            })
        }
    }
}

/// Annotations keyed by world; a later line for the same world replaces an
/// earlier one.
fn read_annotations(path: &Path) -> CliResult<BTreeMap<usize, Annotation>> {
    let raw = std::fs::read_to_string(path).map_err(|e| lfsearch_core::Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in raw.lines().filter(|l| !l.trim().is_empty()) {
        let a: Annotation = serde_json::from_str(line).map_err(|e| lfsearch_core::Error::json(path, e))?;
        out.insert(a.world_id, a);
    }
    Ok(out)
}

pub fn synth(out: &Path, seed: u64, count: usize, max_rows: usize, max_cols: usize) -> CliResult<()> {
    let mut lines = String::new();
    for ex in suite(seed, count, max_rows, max_cols) {
        let rel = PathBuf::from("tables").join(format!("{}.tsv", ex.id));
        write(&out.join(&rel), &ex.table.to_delimited(TableFormat::Tsv))?;
        let e = Example { id: ex.id, question: ex.question, table: rel, answer: ex.answer };
        lines.push_str(&serde_json::to_string(&e).expect("serializable"));
        lines.push('\n');
    }
    write(&out.join("examples.jsonl"), &lines)?;
    println!("{count} examples in {}", out.join("examples.jsonl").display());
    Ok(())
}

fn unescape_wtq(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('p') => out.push('|'),
            Some(o) => out.push(o),
            None => out.push('\\'),
        }
    }
    out
}

/// Best effort: rows whose answer is empty are skipped.
pub fn convert_wtq(data: &Path, base: &Path, out: &Path) -> CliResult<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_path(data)
        .map_err(|e| CliError::io(format!("{}: {e}", data.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::usage(format!("{}: {e}", data.display())))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::usage(format!("missing column {name}")))
    };
    let (id, utt, ctx, tgt) = (col("id")?, col("utterance")?, col("context")?, col("targetValue")?);
    let base = base.canonicalize().unwrap_or_else(|_| base.to_path_buf());
    let mut lines = String::new();
    let (mut kept, mut skipped) = (0, 0);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", data.display())))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let answer: Vec<String> =
            field(tgt).split('|').map(unescape_wtq).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if answer.is_empty() {
            skipped += 1;
            continue;
        }
        let e = Example { id: field(id).to_string(), question: unescape_wtq(field(utt)), table: base.join(field(ctx)), answer };
        lines.push_str(&serde_json::to_string(&e).expect("serializable"));
        lines.push('\n');
        kept += 1;
    }
    write(out, &lines)?;
    println!("{kept} examples, {skipped} skipped");
    Ok(())
}

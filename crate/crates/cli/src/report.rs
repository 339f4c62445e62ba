use std::path::Path;

use lfsearch_core::dpd::DpdStats;
use lfsearch_core::fictitious::{EquivalenceClass, PruneReport};
use lfsearch_core::pipeline::{atomic_write, read_json, to_json_pretty};
use serde::Serialize;

use crate::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct Report {
    pub examples: usize,
    pub mean_forms: f64,
    pub median_forms: f64,
    pub mean_pass1_cells: f64,
    pub mean_pass2_cells: f64,
    /// Mean of `1 - pass2/pass1` over examples with at least one consistent
    /// form.
    pub cell_reduction: Option<f64>,
    pub truncated: usize,
    pub with_classes: usize,
    pub mean_classes: Option<f64>,
    pub median_classes: Option<f64>,
    pub pruned: usize,
    pub single_class_fraction: Option<f64>,
    pub all_pruned_fraction: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn median(xs: &[f64]) -> Option<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(v[n / 2]),
        _ => Some((v[n / 2 - 1] + v[n / 2]) / 2.0),
    }
}

pub fn aggregate(dir: &Path) -> CliResult<Report> {
    let mut subdirs: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.join("stats.json").is_file())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(CliError::io(format!("{}: no stats", dir.display())));
    }
    let mut forms = Vec::new();
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    let mut reductions = Vec::new();
    let mut truncated = 0;
    let mut classes = Vec::new();
    let mut prunes: Vec<PruneReport> = Vec::new();
    for d in &subdirs {
        let s: DpdStats = read_json(&d.join("stats.json"))?;
        forms.push(s.consistent_forms as f64);
        p1.push(s.pass1_cells as f64);
        p2.push(s.pass2_cells as f64);
        if s.consistent_forms > 0 && s.pass1_cells > 0 {
            reductions.push(1.0 - s.pass2_cells as f64 / s.pass1_cells as f64);
        }
        truncated += usize::from(s.truncated);
        if d.join("classes.json").is_file() {
            let c: Vec<EquivalenceClass> = read_json(&d.join("classes.json"))?;
            classes.push(c.len() as f64);
        }
        if d.join("prune.json").is_file() {
            prunes.push(read_json(&d.join("prune.json"))?);
        }
    }
    let frac = |pred: &dyn Fn(&PruneReport) -> bool| {
        (!prunes.is_empty()).then(|| prunes.iter().filter(|r| pred(r)).count() as f64 / prunes.len() as f64)
    };
    Ok(Report {
        examples: subdirs.len(),
        mean_forms: mean(&forms).unwrap_or(0.0),
        median_forms: median(&forms).unwrap_or(0.0),
        mean_pass1_cells: mean(&p1).unwrap_or(0.0),
        mean_pass2_cells: mean(&p2).unwrap_or(0.0),
        cell_reduction: mean(&reductions),
        truncated,
        with_classes: classes.len(),
        mean_classes: mean(&classes),
        median_classes: median(&classes),
        pruned: prunes.len(),
        single_class_fraction: frac(&|r| r.classes_after == 1),
        all_pruned_fraction: frac(&|r| r.all_pruned),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3}"))
}

pub fn report(dir: &Path) -> CliResult<()> {
    let r = aggregate(dir)?;
    atomic_write(&dir.join("report.json"), to_json_pretty(&r).as_bytes())?;
    println!("examples\tmean|Z|\tmedian|Z|\tcell_reduction\tmean_classes\tmedian_classes\tsingle_class\tall_pruned");
    println!(
        "{}\t{:.3}\t{:.3}\t{}\t{}\t{}\t{}\t{}",
        r.examples,
        r.mean_forms,
        r.median_forms,
        opt(r.cell_reduction),
        opt(r.mean_classes),
        opt(r.median_classes),
        opt(r.single_class_fraction),
        opt(r.all_pruned_fraction)
    );
    Ok(())
}

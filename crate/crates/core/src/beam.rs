//! The floating beam-search parser: cells `(category, size)` filled bottom-up
//! by every rule, each pruned to the best `beam` derivations.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;

use crate::lf::Category;
use crate::rng::hash_unit;
use crate::rules::{apply, arg_tuples, base_cells, steps_for_size, Derivation, RuleSet};
use crate::world::World;

pub trait Scorer: Sync {
    fn score(&self, d: &Derivation) -> f64;
}

/// Scores every form by a seeded hash of its canonical text, modelling an
/// untrained parser that prunes at random.
#[derive(Clone, Copy, Debug)]
pub struct RandomScorer {
    pub seed: u64,
}

impl Scorer for RandomScorer {
    fn score(&self, d: &Derivation) -> f64 {
        hash_unit(self.seed, &d.form.canonical_string())
    }
}

impl<F: Fn(&Derivation) -> f64 + Sync> Scorer for F {
    fn score(&self, d: &Derivation) -> f64 {
        self(d)
    }
}

type Cells = HashMap<(Category, usize), Vec<Arc<Derivation>>>;

/// Fills every cell up to `s_max`. `beam = None` keeps everything, which is
/// exhaustive enumeration under the rules and guards.
pub fn populate(
    utterance: &str,
    w: &World,
    rules: &RuleSet,
    s_max: usize,
    beam: Option<usize>,
    scorer: &dyn Scorer,
) -> Vec<Arc<Derivation>> {
    let mut cells: Cells = HashMap::new();
    for d in base_cells(utterance, w, rules) {
        cells.entry((d.category(), 0)).or_default().push(d);
    }
    for s in 1..=s_max {
        let jobs: Vec<_> = steps_for_size(rules, s, s_max)
            .iter()
            .flat_map(|step| arg_tuples(step, |k| cells.get(&k).map_or(&[][..], Vec::as_slice)).into_iter().map(move |args| (step.rule, args)))
            .collect();
        let made: Vec<Derivation> =
            jobs.into_par_iter().filter_map(|(rule, args)| apply(rules, rule, &args, w).ok()).collect();
        let mut by_cat: HashMap<Category, Vec<(String, Derivation)>> = HashMap::new();
        let mut seen = HashSet::new();
        for d in made {
            let text = d.form.canonical_string();
            if seen.insert(text.clone()) {
                by_cat.entry(d.category()).or_default().push((text, d));
            }
        }
        for (cat, mut ds) in by_cat {
            if let Some(b) = beam {
                let mut scored: Vec<(f64, String, Derivation)> =
                    ds.into_iter().map(|(t, d)| (scorer.score(&d), t, d)).collect();
                scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
                scored.truncate(b);
                ds = scored.into_iter().map(|(_, t, d)| (t, d)).collect();
            } else {
                ds.sort_by(|a, b| a.0.cmp(&b.0));
            }
            cells.insert((cat, s), ds.into_iter().map(|(_, d)| Arc::new(d)).collect());
        }
    }
    let mut out: Vec<Arc<Derivation>> = cells.into_values().flatten().collect();
    out.sort_by_cached_key(|d| (d.size(), d.form.canonical_string()));
    out
}

/// `Z_b`: the Set-category derivations of size `1..=s_max` that survive the
/// beam, sorted by canonical text.
pub fn beam_search(
    utterance: &str,
    w: &World,
    rules: &RuleSet,
    s_max: usize,
    beam: Option<usize>,
    scorer: &dyn Scorer,
) -> Vec<Arc<Derivation>> {
    let mut out: Vec<Arc<Derivation>> = populate(utterance, w, rules, s_max, beam, scorer)
        .into_iter()
        .filter(|d| d.category() == Category::Set && d.size() >= 1)
        .collect();
    out.sort_by_cached_key(|d| d.form.canonical_string());
    out
}

//! Fictitious worlds, denotation tuples, equivalence classes, selection of
//! worlds to annotate, and pruning against annotations.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchor::{anchor_entities, anchored_values};
use crate::denotation::Denotation;
use crate::error::{Error, Result};
use crate::exec::execute;
use crate::lf::LogicalForm;
use crate::normalize::{normalize_cell, normalize_entity};
use crate::rng::stream;
use crate::table::{parse_table, Table, TableFormat};
use crate::target::Target;
use crate::value::{Date, Value};
use crate::world::{build_world, cell_values, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortKey {
    Number,
    Date,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortedColumn {
    pub column: String,
    pub key: SortKey,
    pub descending: bool,
}

#[derive(Clone, Debug, PartialEq)]
enum Key {
    Number(f64),
    Date(Date),
}

fn sort_key(text: &str, key: SortKey) -> Option<Key> {
    let norm = normalize_cell(text);
    match key {
        SortKey::Number => norm.number.map(Key::Number),
        SortKey::Date => norm.date.map(Key::Date),
    }
}

fn cmp_keys(a: &Key, b: &Key) -> Option<Ordering> {
    match (a, b) {
        (Key::Number(x), Key::Number(y)) => x.partial_cmp(y),
        (Key::Date(x), Key::Date(y)) => x.partial_cmp_date(y),
        _ => None,
    }
}

/// Direction in which the parsed cells of a column are non-strictly
/// monotone, if at least two parse and they are.
fn monotone(cells: &[&str], key: SortKey) -> Option<bool> {
    let keys: Vec<Key> = cells.iter().filter_map(|c| sort_key(c, key)).collect();
    if keys.len() < 2 {
        return None;
    }
    let ords = keys.windows(2).map(|p| cmp_keys(&p[0], &p[1])).collect::<Option<Vec<_>>>()?;
    if ords.iter().all(|o| *o != Ordering::Greater) {
        Some(false)
    } else if ords.iter().all(|o| *o != Ordering::Less) {
        Some(true)
    } else {
        None
    }
}

fn detect_sorted(table: &Table, j: usize) -> Option<SortedColumn> {
    let cells: Vec<&str> = table.column(j).collect();
    [SortKey::Number, SortKey::Date].into_iter().find_map(|key| {
        monotone(&cells, key).map(|descending| SortedColumn { column: table.columns[j].clone(), key, descending })
    })
}

/// Sorts the cells that parse under `s.key` among their own positions.
fn resort(cells: &mut [String], s: &SortedColumn) {
    let positions: Vec<usize> = (0..cells.len()).filter(|&i| sort_key(&cells[i], s.key).is_some()).collect();
    let mut parsed: Vec<(Key, String)> =
        positions.iter().map(|&i| (sort_key(&cells[i], s.key).expect("parsed"), cells[i].clone())).collect();
    parsed.sort_by(|a, b| {
        let o = cmp_keys(&a.0, &b.0).unwrap_or(Ordering::Equal);
        if s.descending {
            o.reverse()
        } else {
            o
        }
    });
    for (&i, (_, text)) in positions.iter().zip(parsed) {
        cells[i] = text;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedValue {
    pub column: String,
    pub value: Value,
    /// Original cell text carrying the value.
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldManifest {
    pub source: String,
    pub seed: u64,
    pub k: usize,
    pub anchored: Vec<Value>,
    pub sorted_columns: Vec<SortedColumn>,
    pub forced: Vec<ForcedValue>,
    pub files: Vec<String>,
    /// Share of the original world's entities present in each world.
    pub coverage: Vec<f64>,
}

/// The fictitious worlds `w_0 .. w_{k-1}` generated for one question.
#[derive(Clone, Debug)]
pub struct WorldSet {
    pub manifest: WorldManifest,
    pub tables: Vec<Table>,
    pub worlds: Vec<World>,
}

fn coverage(original: &World, w: &World) -> f64 {
    let ents = original.nodes_of_kind(crate::value::ValueKind::Entity);
    if ents.is_empty() {
        return 1.0;
    }
    ents.iter().filter(|v| w.contains(v)).count() as f64 / ents.len() as f64
}

/// One fictitious table: each column resampled from the original column's
/// cells, anchored values forced back in, sorted columns re-sorted.
fn resample(table: &Table, forced: &[ForcedValue], sorted: &[SortedColumn], rng: &mut impl Rng, id: String) -> Table {
    let n = table.num_rows();
    let mut columns: Vec<Vec<String>> = Vec::new();
    for (j, name) in table.columns.iter().enumerate() {
        let original: Vec<String> = table.column(j).map(String::from).collect();
        let mut distinct: Vec<String> = original.iter().map(|c| normalize_entity(c)).collect();
        distinct.sort();
        distinct.dedup();
        let mut cells = if distinct.len() == n {
            let mut c = original.clone();
            c.shuffle(rng);
            c
        } else {
            (0..n).map(|_| original[rng.random_range(0..n)].clone()).collect()
        };
        let mut pinned = vec![false; n];
        for f in forced.iter().filter(|f| &f.column == name) {
            if let Some(i) = cells.iter().position(|c| cell_values(c).contains(&f.value)) {
                pinned[i] = true;
                continue;
            }
            let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
            let Some(&i) = free.get(rng.random_range(0..free.len().max(1))) else { continue };
            cells[i] = f.text.clone();
            pinned[i] = true;
        }
        if let Some(s) = sorted.iter().find(|s| &s.column == name) {
            resort(&mut cells, s);
        }
        columns.push(cells);
    }
    let rows = (0..n).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
    Table::new(id, table.columns.clone(), rows).expect("same shape as the original")
}

/// Generates `k` worlds. World `i` draws from its own random stream, so a
/// longer run extends a shorter one with the same seed.
pub fn generate_worlds(table: &Table, utterance: &str, k: usize, seed: u64) -> Result<WorldSet> {
    if k == 0 {
        return Err(Error::NoWorlds);
    }
    let original = build_world(table);
    let anchored = anchored_values(&anchor_entities(utterance, &original));
    let n = table.num_rows();
    let mut forced = Vec::new();
    for (j, column) in table.columns.iter().enumerate() {
        let mut here = Vec::new();
        for v in &anchored {
            if let Some(text) = table.column(j).find(|c| cell_values(c).contains(v)) {
                here.push(ForcedValue { column: column.clone(), value: v.clone(), text: text.to_string() });
            }
        }
        let mut texts: Vec<&str> = here.iter().map(|f: &ForcedValue| f.text.as_str()).collect();
        texts.sort_unstable();
        texts.dedup();
        if texts.len() > n {
            return Err(Error::AnchorOverflow { column: column.clone(), required: texts.len(), rows: n });
        }
        forced.extend(here);
    }
    let sorted: Vec<SortedColumn> = (0..table.columns.len()).filter_map(|j| detect_sorted(table, j)).collect();
    let tables: Vec<Table> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "worlds", i as u64);
            resample(table, &forced, &sorted, &mut rng, format!("{}#w{i:02}", table.id))
        })
        .collect();
    let worlds: Vec<World> = tables.iter().map(build_world).collect();
    let manifest = WorldManifest {
        source: table.id.clone(),
        seed,
        k,
        anchored,
        sorted_columns: sorted,
        forced,
        files: (0..k).map(world_file).collect(),
        coverage: worlds.iter().map(|w| coverage(&original, w)).collect(),
    };
    Ok(WorldSet { manifest, tables, worlds })
}

pub fn world_file(i: usize) -> String {
    format!("w{i:02}.tsv")
}

impl WorldSet {
    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest).expect("serializable") + "\n"
    }

    /// Reads a manifest and its TSV tables from `dir`.
    pub fn load(dir: &Path) -> Result<WorldSet> {
        let path = dir.join("manifest.json");
        let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: WorldManifest = serde_json::from_str(&raw).map_err(|e| Error::json(&path, e))?;
        let tables = manifest
            .files
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let p = dir.join(f);
                let raw = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                parse_table(&raw, TableFormat::Tsv, format!("{}#w{i:02}", manifest.source))
            })
            .collect::<Result<Vec<_>>>()?;
        let worlds = tables.iter().map(build_world).collect();
        Ok(WorldSet { manifest, tables, worlds })
    }

    /// Violations of the generation invariants against `original`: equal
    /// columns, anchored values present, sorted columns still sorted.
    pub fn violations(&self, original: &Table) -> Vec<String> {
        let mut out = Vec::new();
        for (i, (t, w)) in self.tables.iter().zip(&self.worlds).enumerate() {
            if t.columns != original.columns {
                out.push(format!("w{i:02}: columns differ"));
            }
            if t.num_rows() != original.num_rows() {
                out.push(format!("w{i:02}: row count differs"));
            }
            for v in &self.manifest.anchored {
                if !w.contains(v) {
                    out.push(format!("w{i:02}: anchored value {v} missing"));
                }
            }
            for f in &self.manifest.forced {
                let j = t.columns.iter().position(|c| c == &f.column);
                if !j.is_some_and(|j| t.column(j).any(|c| cell_values(c).contains(&f.value))) {
                    out.push(format!("w{i:02}: {} missing from column {}", f.value, f.column));
                }
            }
            for s in &self.manifest.sorted_columns {
                let Some(j) = t.columns.iter().position(|c| c == &s.column) else { continue };
                let cells: Vec<&str> = t.column(j).collect();
                let keys: Vec<Key> = cells.iter().filter_map(|c| sort_key(c, s.key)).collect();
                let bad = keys.windows(2).any(|p| {
                    let o = cmp_keys(&p[0], &p[1]);
                    o.is_none() || o == Some(if s.descending { Ordering::Less } else { Ordering::Greater })
                });
                if bad {
                    out.push(format!("w{i:02}: column {} not sorted", s.column));
                }
            }
        }
        out
    }
}

/// Consistent forms sharing one denotation tuple across the worlds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub id: usize,
    pub tuple: Vec<Denotation>,
    pub representative: LogicalForm,
    /// Sorted by size, then canonical text.
    pub members: Vec<LogicalForm>,
}

/// `[[z]]_W` for each form.
pub fn denotation_tuples(z: &[LogicalForm], worlds: &[World]) -> Vec<Vec<Denotation>> {
    z.par_iter().map(|f| worlds.iter().map(|w| execute(f, w)).collect()).collect()
}

/// Groups forms by their denotation tuple. Classes are numbered in tuple
/// order; the representative is the smallest member.
pub fn equivalence_classes(z: &[LogicalForm], worlds: &[World]) -> Vec<EquivalenceClass> {
    let mut groups: BTreeMap<Vec<Denotation>, Vec<(usize, String, LogicalForm)>> = BTreeMap::new();
    for (f, t) in z.iter().zip(denotation_tuples(z, worlds)) {
        groups.entry(t).or_default().push((f.size(), f.canonical_string(), f.clone()));
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(id, (tuple, mut members))| {
            members.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            let members: Vec<LogicalForm> = members.into_iter().map(|m| m.2).collect();
            EquivalenceClass { id, tuple, representative: members[0].clone(), members }
        })
        .collect()
}

/// `sum_t |F_t| log2 |F_t|` over block sizes, summed in ascending order.
pub fn objective(sizes: &[usize]) -> f64 {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s.into_iter().filter(|&n| n > 1).map(|n| n as f64 * (n as f64).log2()).sum()
}

/// `(1/|Q|) sum_t |F_t| log2 |F_t|`.
pub fn entropy(sizes: &[usize], total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::NoClasses);
    }
    Ok(objective(sizes) / total as f64)
}

/// Class tuples re-encoded as small integers per world.
pub struct Grid {
    /// `ids[world][class]`
    ids: Vec<Vec<u32>>,
    classes: usize,
}

impl Grid {
    pub fn new(tuples: &[&[Denotation]]) -> Grid {
        let k = tuples.first().map_or(0, |t| t.len());
        let ids = (0..k)
            .map(|j| {
                let mut seen: HashMap<&Denotation, u32> = HashMap::new();
                tuples
                    .iter()
                    .map(|t| {
                        let next = seen.len() as u32;
                        *seen.entry(&t[j]).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        Grid { ids, classes: tuples.len() }
    }

    pub fn worlds(&self) -> usize {
        self.ids.len()
    }

    fn refine(&self, labels: &[u32], world: usize) -> Vec<u32> {
        let mut seen: HashMap<(u32, u32), u32> = HashMap::with_capacity(labels.len());
        labels
            .iter()
            .zip(&self.ids[world])
            .map(|(&l, &d)| {
                let next = seen.len() as u32;
                *seen.entry((l, d)).or_insert(next)
            })
            .collect()
    }

    /// Block labels of each class after splitting on `worlds`.
    pub fn labels(&self, worlds: &[usize]) -> Vec<u32> {
        worlds.iter().fold(vec![0; self.classes], |l, &j| self.refine(&l, j))
    }

    /// Class indices grouped into the blocks `F_t`, in first-member order.
    pub fn partition(&self, worlds: &[usize]) -> Vec<Vec<usize>> {
        let labels = self.labels(worlds);
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (q, &l) in labels.iter().enumerate() {
            if l as usize == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[l as usize].push(q);
        }
        blocks
    }
}

fn block_sizes(labels: &[u32]) -> Vec<usize> {
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_values().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub worlds: Vec<usize>,
    pub objective: f64,
    pub entropy: f64,
    /// Class ids per block.
    pub partition: Vec<Vec<usize>>,
    pub method: String,
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.1 < b.1,
    }
}

fn search(grid: &Grid, labels: &[u32], chosen: &mut Vec<usize>, l: usize, best: &mut Option<(f64, Vec<usize>)>) {
    if chosen.len() == l {
        let cand = (objective(&block_sizes(labels)), chosen.clone());
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            *best = Some(cand);
        }
        return;
    }
    let start = chosen.last().map_or(0, |&j| j + 1);
    let remaining = l - chosen.len();
    for j in start..=grid.worlds() - remaining {
        let next = grid.refine(labels, j);
        chosen.push(j);
        search(grid, &next, chosen, l, best);
        chosen.pop();
    }
}

/// The `l` worlds minimizing the objective over all subsets, ties broken by
/// the lexicographically smallest index tuple. `greedy` instead adds one
/// world at a time.
pub fn select_worlds(tuples: &[&[Denotation]], l: usize, greedy: bool) -> Result<Selection> {
    if tuples.is_empty() {
        return Err(Error::NoClasses);
    }
    let grid = Grid::new(tuples);
    let l = l.min(grid.worlds());
    let worlds = if greedy {
        let mut chosen: Vec<usize> = Vec::new();
        let mut labels = vec![0; tuples.len()];
        while chosen.len() < l {
            let (_, j, next) = (0..grid.worlds())
                .filter(|j| !chosen.contains(j))
                .map(|j| {
                    let next = grid.refine(&labels, j);
                    (objective(&block_sizes(&next)), j, next)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("unchosen world");
            chosen.push(j);
            labels = next;
        }
        chosen
    } else if l == 0 {
        Vec::new()
    } else {
        let root = vec![0; tuples.len()];
        (0..=grid.worlds() - l)
            .into_par_iter()
            .filter_map(|j| {
                let mut best = None;
                search(&grid, &grid.refine(&root, j), &mut vec![j], l, &mut best);
                best
            })
            .reduce_with(|a, b| if better(&b, &a) { b } else { a })
            .expect("at least one subset")
            .1
    };
    let partition = grid.partition(&worlds);
    let sizes: Vec<usize> = partition.iter().map(Vec::len).collect();
    let objective = objective(&sizes);
    Ok(Selection {
        worlds,
        objective,
        entropy: objective / tuples.len() as f64,
        partition,
        method: if greedy { "greedy" } else { "exhaustive" }.into(),
    })
}

/// One annotation: the answer given for a fictitious world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub world_id: usize,
    pub answer: Vec<String>,
    #[serde(default)]
    pub annotator: String,
    #[serde(default)]
    pub ts: String,
}

/// What a class must denote on one annotated world.
#[derive(Clone, Debug, PartialEq)]
pub enum Expected {
    /// The ideal annotation: a denotation, errors included.
    Exact(Denotation),
    Answer(Target),
}

impl Expected {
    pub fn agrees(&self, d: &Denotation) -> bool {
        match self {
            Expected::Exact(e) => e == d,
            Expected::Answer(t) => t.matches(d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub class: usize,
    pub representative: LogicalForm,
    pub members: usize,
    pub disagreements: usize,
    pub kept: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub tolerance: usize,
    pub worlds: Vec<usize>,
    pub classes_before: usize,
    pub classes_after: usize,
    pub all_pruned: bool,
    pub verdicts: Vec<ClassVerdict>,
    /// Members of surviving classes, sorted by canonical text.
    pub surviving_forms: Vec<LogicalForm>,
}

impl PruneReport {
    pub fn survivors(&self) -> Vec<usize> {
        self.verdicts.iter().filter(|v| v.kept).map(|v| v.class).collect()
    }
}

/// Keeps classes whose tuple on `worlds` differs from `expected` in at most
/// `tolerance` positions.
pub fn prune(classes: &[EquivalenceClass], worlds: &[usize], expected: &[Expected], tolerance: usize) -> PruneReport {
    let verdicts: Vec<ClassVerdict> = classes
        .iter()
        .map(|c| {
            let disagreements =
                worlds.iter().zip(expected).filter(|(&j, e)| c.tuple.get(j).is_none_or(|d| !e.agrees(d))).count();
            ClassVerdict {
                class: c.id,
                representative: c.representative.clone(),
                members: c.members.len(),
                disagreements,
                kept: disagreements <= tolerance,
            }
        })
        .collect();
    let mut surviving: Vec<(String, LogicalForm)> = classes
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.kept)
        .flat_map(|(c, _)| c.members.iter().map(|z| (z.canonical_string(), z.clone())))
        .collect();
    surviving.sort_by(|a, b| a.0.cmp(&b.0));
    let after = verdicts.iter().filter(|v| v.kept).count();
    PruneReport {
        tolerance,
        worlds: worlds.to_vec(),
        classes_before: classes.len(),
        classes_after: after,
        all_pruned: after == 0,
        verdicts,
        surviving_forms: surviving.into_iter().map(|s| s.1).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "world", rename_all = "kebab-case")]
pub enum NextWorld {
    World(usize),
    /// At most one class survives.
    NoneNeeded,
    /// Every world has been annotated.
    Exhausted,
}

/// The unannotated world minimizing the objective over surviving classes
/// split on the annotated worlds plus the candidate; lowest index on ties.
pub fn greedy_next_world(surviving: &[&[Denotation]], annotated: &[usize], num_worlds: usize) -> NextWorld {
    if surviving.len() <= 1 {
        return NextWorld::NoneNeeded;
    }
    let grid = Grid::new(surviving);
    let base = grid.labels(annotated);
    (0..num_worlds)
        .filter(|j| !annotated.contains(j))
        .map(|j| (objective(&block_sizes(&grid.refine(&base, j))), j))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map_or(NextWorld::Exhausted, |(_, j)| NextWorld::World(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::value::ValueSet;

    fn n(x: f64) -> Denotation {
        Denotation::Set(ValueSet::singleton(Value::number(x)))
    }

    #[test]
    fn fixture_worlds_keep_anchor_and_sorting() {
        let t = fixture_a();
        let ws = generate_worlds(&t, FIXTURE_A_QUESTION, 30, 11).unwrap();
        assert_eq!(ws.len(), 30);
        assert!(ws.violations(&t).is_empty(), "{:?}", ws.violations(&t));
        let pos = t.columns.iter().position(|c| c == "Position").unwrap();
        for w in &ws.tables {
            assert!(w.column(pos).any(|c| c == "1st"));
        }
        assert!(ws.manifest.sorted_columns.iter().any(|s| s.column == "Year" && !s.descending));
        let again = generate_worlds(&t, FIXTURE_A_QUESTION, 30, 11).unwrap();
        assert_eq!(again.manifest, ws.manifest);
        assert_eq!(again.tables, ws.tables);
        let longer = generate_worlds(&t, FIXTURE_A_QUESTION, 40, 11).unwrap();
        assert_eq!(&longer.tables[..30], &ws.tables[..]);
    }

    #[test]
    fn distinct_columns_are_permutations() {
        let t = fixture_a();
        let ws = generate_worlds(&t, FIXTURE_A_QUESTION, 10, 2).unwrap();
        let venue = 1;
        let mut orig: Vec<&str> = t.column(venue).collect();
        orig.sort();
        for w in &ws.tables {
            let mut got: Vec<&str> = w.column(venue).collect();
            got.sort();
            assert_eq!(got, orig);
        }
    }

    #[test]
    fn rejections() {
        let t = fixture_a();
        assert!(matches!(generate_worlds(&t, "x", 0, 1), Err(Error::NoWorlds)));
        let t = Table::new("t", vec!["A".into()], vec![vec!["3 apples".into()]]).unwrap();
        // one cell carries both anchored values
        let ws = generate_worlds(&t, "3 apples", 3, 1).unwrap();
        assert_eq!(ws.manifest.forced.len(), 2);
        assert!(ws.violations(&t).is_empty());
    }

    #[test]
    fn objective_and_entropy() {
        assert_eq!(objective(&[1, 1, 1, 1]), 0.0);
        assert_eq!(objective(&[2, 1, 1]), 2.0);
        assert_eq!(objective(&[4]), 8.0);
        assert_eq!(entropy(&[2, 1, 1], 4).unwrap(), 0.5);
        assert_eq!(entropy(&[2, 2], 4).unwrap(), 1.0);
        assert_eq!(entropy(&[8], 8).unwrap(), 3.0);
        assert!(entropy(&[], 0).is_err());
    }

    #[test]
    fn selection_prefers_fine_partitions() {
        // four classes; world 1 separates all, world 0 none
        let tuples: Vec<Vec<Denotation>> = (0..4).map(|q| vec![n(0.0), n(q as f64), n((q / 2) as f64)]).collect();
        let refs: Vec<&[Denotation]> = tuples.iter().map(Vec::as_slice).collect();
        let s = select_worlds(&refs, 1, false).unwrap();
        assert_eq!(s.worlds, vec![1]);
        assert_eq!(s.objective, 0.0);
        let g = select_worlds(&refs, 1, true).unwrap();
        assert_eq!(g.worlds, vec![1]);
        let s0 = select_worlds(&refs, 0, false).unwrap();
        assert_eq!(s0.objective, 8.0);
    }

    #[test]
    fn prune_tolerance() {
        let classes: Vec<EquivalenceClass> = (0..3)
            .map(|q| EquivalenceClass {
                id: q,
                tuple: vec![n(1.0), n(if q == 1 { 5.0 } else { 2.0 }), n(q as f64)],
                representative: LogicalForm::AllRows,
                members: vec![LogicalForm::AllRows],
            })
            .collect();
        let t = vec![Expected::Exact(n(1.0)), Expected::Exact(n(2.0)), Expected::Exact(n(0.0))];
        let r0 = prune(&classes, &[0, 1, 2], &t, 0);
        assert_eq!(r0.survivors(), vec![0]);
        let r1 = prune(&classes, &[0, 1, 2], &t, 1);
        assert_eq!(r1.survivors(), vec![0, 2]);
        let none = prune(&classes, &[0], &[Expected::Answer(Target::new(&["zzz"]).unwrap())], 0);
        assert!(none.all_pruned);
    }

    #[test]
    fn next_world() {
        let a = vec![n(0.0); 10];
        let mut b = a.clone();
        b[7] = n(1.0);
        assert_eq!(greedy_next_world(&[&a, &b], &[], 10), NextWorld::World(7));
        assert_eq!(greedy_next_world(&[&a], &[], 10), NextWorld::NoneNeeded);
        assert_eq!(greedy_next_world(&[&a, &a], &[], 10), NextWorld::World(0));
        assert_eq!(greedy_next_world(&[&a, &b], &(0..10).collect::<Vec<_>>(), 10), NextWorld::Exhausted);
    }

    #[test]
    fn fixture_classes() {
        let t = fixture_a();
        let w = build_world(&t);
        let target = Target::new(&[FIXTURE_A_ANSWER]).unwrap();
        let run = crate::dpd::run_dpd(FIXTURE_A_QUESTION, &w, &target, &Default::default(), 5, 1000);
        let ws = generate_worlds(&t, FIXTURE_A_QUESTION, 10, 1).unwrap();
        let classes = equivalence_classes(&run.z.forms, &ws.worlds);
        let total: usize = classes.iter().map(|c| c.members.len()).sum();
        assert_eq!(total, run.z.forms.len());
        assert_eq!(equivalence_classes(&run.z.forms, &[]).len(), 1);
        for c in &classes {
            for m in &c.members {
                assert!(m.size() >= c.representative.size());
            }
        }
    }
}

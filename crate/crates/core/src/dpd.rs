//! Dynamic programming on denotations.
//!
//! The first pass fills cells `(category, size, denotation)` keeping one
//! representative form each, while recording every rule combination that
//! reaches a cell. Marking walks those combinations backwards from the cells
//! whose denotation is the answer; the second pass expands only marked
//! combinations into concrete forms.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denotation::{Denotation, ErrorTag};
use crate::exec::{self, execute};
use crate::lf::{Category, LogicalForm, Relation};
use crate::rules::{arg_tuples, base_cells, build, guards_allow, steps_for_size, ArgView, RuleId, RuleSet, SemanticFunction};
use crate::target::Target;
use crate::world::World;

pub const DEFAULT_CAP: usize = 500_000;

pub type CellId = u32;

/// `den` indexes the chart's denotation table, or its relation table for
/// Rel cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub category: Category,
    pub size: usize,
    pub den: u32,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub key: CellKey,
    pub representative: LogicalForm,
    /// Size-0 forms placed directly by base rules.
    pub base_forms: Vec<LogicalForm>,
    pub combos_in: Vec<u32>,
    pub marked: bool,
}

#[derive(Clone, Debug)]
pub struct Combo {
    pub rule: RuleId,
    pub args: Vec<CellId>,
    pub result: CellId,
    pub marked: bool,
}

#[derive(Debug, Default)]
pub struct Chart {
    pub s_max: usize,
    denotations: Vec<Arc<Denotation>>,
    den_index: HashMap<Arc<Denotation>, u32>,
    relations: Vec<Relation>,
    rel_index: HashMap<Relation, u32>,
    pub cells: Vec<Cell>,
    index: HashMap<CellKey, CellId>,
    by_size: HashMap<(Category, usize), Vec<CellId>>,
    pub combos: Vec<Combo>,
    pub finals: Vec<CellId>,
}

enum Arg<'a> {
    Den(&'a Denotation),
    Rel(&'a Relation),
}

fn set<'a>(x: &Arg<'a>) -> Result<&'a crate::value::ValueSet, ErrorTag> {
    match x {
        Arg::Den(Denotation::Set(s)) => Ok(s),
        _ => Err(ErrorTag::Type),
    }
}

fn map<'a>(x: &Arg<'a>) -> Result<&'a crate::denotation::MapDenotation, ErrorTag> {
    match x {
        Arg::Den(Denotation::Map(m)) => Ok(m),
        _ => Err(ErrorTag::Type),
    }
}

fn rel<'a>(x: &Arg<'a>) -> Result<&'a Relation, ErrorTag> {
    match x {
        Arg::Rel(r) => Ok(r),
        _ => Err(ErrorTag::Type),
    }
}

impl Chart {
    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id as usize]
    }

    /// The denotation of a Set or Map cell.
    pub fn denotation(&self, id: CellId) -> Option<&Denotation> {
        let key = self.cell(id).key;
        (key.category != Category::Rel).then(|| &*self.denotations[key.den as usize])
    }

    pub fn relation(&self, id: CellId) -> Option<&Relation> {
        let key = self.cell(id).key;
        (key.category == Category::Rel).then(|| &self.relations[key.den as usize])
    }

    pub fn lookup(&self, category: Category, size: usize, d: &Denotation) -> Option<CellId> {
        let den = *self.den_index.get(d)?;
        self.index.get(&CellKey { category, size, den }).copied()
    }

    pub fn cells_of(&self, category: Category, size: usize) -> &[CellId] {
        self.by_size.get(&(category, size)).map_or(&[], Vec::as_slice)
    }

    fn arg(&self, id: CellId) -> Arg<'_> {
        match self.relation(id) {
            Some(r) => Arg::Rel(r),
            None => Arg::Den(self.denotation(id).expect("set or map cell")),
        }
    }

    fn view(&self, id: CellId) -> ArgView<'_> {
        ArgView { size: self.cell(id).key.size, denotation: self.denotation(id) }
    }

    fn key_for(&mut self, category: Category, size: usize, d: Denotation) -> CellKey {
        let den = match self.den_index.get(&d) {
            Some(&i) => i,
            None => {
                let d = Arc::new(d);
                let i = self.denotations.len() as u32;
                self.denotations.push(d.clone());
                self.den_index.insert(d, i);
                i
            }
        };
        CellKey { category, size, den }
    }

    fn insert_cell(&mut self, key: CellKey, representative: LogicalForm) -> (CellId, bool) {
        if let Some(&id) = self.index.get(&key) {
            return (id, false);
        }
        let id = self.cells.len() as CellId;
        self.cells.push(Cell { key, representative, base_forms: Vec::new(), combos_in: Vec::new(), marked: false });
        self.index.insert(key, id);
        self.by_size.entry((key.category, key.size)).or_default().push(id);
        (id, true)
    }

    fn add_base(&mut self, form: LogicalForm, d: Denotation) {
        let key = match &form {
            LogicalForm::Rel(r) => {
                let next = self.relations.len() as u32;
                let den = *self.rel_index.entry(r.clone()).or_insert(next);
                if den == next {
                    self.relations.push(r.clone());
                }
                CellKey { category: Category::Rel, size: 0, den }
            }
            _ => self.key_for(form.category(), 0, d),
        };
        let (id, _) = self.insert_cell(key, form.clone());
        let cell = &mut self.cells[id as usize];
        if !cell.base_forms.contains(&form) {
            cell.base_forms.push(form);
        }
    }

    /// Result of a rule on cell denotations, computed without building forms.
    fn combine(&self, rule: RuleId, args: &[CellId], w: &World) -> Denotation {
        let a: Vec<Arg<'_>> = args.iter().map(|&i| self.arg(i)).collect();
        if let Some(e) = a.iter().find_map(|x| match x {
            Arg::Den(Denotation::Error(e)) => Some(*e),
            _ => None,
        }) {
            return Denotation::Error(e);
        }
        let out: Result<Denotation, ErrorTag> = (|| {
            Ok(match rule {
                RuleId::C1 => exec::join(w, rel(&a[1])?, set(&a[0])?)?.into(),
                RuleId::CIsect => set(&a[0])?.intersect(set(&a[1])?).into(),
                RuleId::CUnion => set(&a[0])?.union(set(&a[1])?).into(),
                RuleId::CAgg(op) => exec::aggregate(op, set(&a[0])?)?.into(),
                RuleId::CSub => exec::sub(set(&a[0])?, set(&a[1])?)?.into(),
                RuleId::M1 => exec::map_identity(set(&a[0])?).into(),
                RuleId::M2 => exec::map_join(w, rel(&a[1])?, map(&a[0])?)?.into(),
                RuleId::MIsect => exec::map_intersect(map(&a[0])?, set(&a[1])?).into(),
                RuleId::MCount => exec::map_count(map(&a[0])?).into(),
                RuleId::M6(op) => exec::superlative(op, map(&a[0])?)?.into(),
                RuleId::B1 | RuleId::BRows | RuleId::B5 => return Err(ErrorTag::Type),
            })
        })();
        out.unwrap_or_else(Denotation::Error)
    }
}

/// Pass one: every reachable cell up to `s_max` with one representative, all
/// combinations into it, and the final cells `(Set, s >= 1, y)`.
pub fn first_pass(utterance: &str, w: &World, target: &Target, rules: &RuleSet, s_max: usize) -> Chart {
    let mut chart = Chart { s_max, ..Chart::default() };
    for d in base_cells(utterance, w, rules) {
        chart.add_base(d.form.clone(), d.denotation.clone());
    }
    for s in 1..=s_max {
        let jobs: Vec<(RuleId, Vec<CellId>)> = steps_for_size(rules, s, s_max)
            .iter()
            .flat_map(|step| {
                arg_tuples(step, |k| chart.cells_of(k.0, k.1)).into_iter().map(move |args| (step.rule, args))
            })
            .collect();
        let results: Vec<Option<Denotation>> = jobs
            .par_iter()
            .map(|(rule, args)| {
                let d = chart.combine(*rule, args, w);
                let views: Vec<ArgView<'_>> = args.iter().map(|&i| chart.view(i)).collect();
                guards_allow(rules, *rule, &views, &d).then_some(d)
            })
            .collect();
        for ((rule, args), d) in jobs.into_iter().zip(results) {
            let Some(d) = d else { continue };
            let key = chart.key_for(rule.result_category(), s, d);
            let id = match chart.index.get(&key) {
                Some(&id) => id,
                None => {
                    let forms: Vec<&LogicalForm> = args.iter().map(|&i| &chart.cell(i).representative).collect();
                    let rep = build(rule, &forms).expect("steps match rule categories");
                    chart.insert_cell(key, rep).0
                }
            };
            let c = chart.combos.len() as u32;
            chart.combos.push(Combo { rule, args, result: id, marked: false });
            chart.cells[id as usize].combos_in.push(c);
        }
    }
    chart.finals = (0..chart.cells.len() as CellId)
        .filter(|&id| {
            let key = chart.cell(id).key;
            key.category == Category::Set && key.size >= 1 && chart.denotation(id).is_some_and(|d| target.matches(d))
        })
        .collect();
    chart
}

/// Marks the cells and combinations on some hyperpath into a final cell.
pub fn mark_backward(chart: &mut Chart) {
    let mut stack: Vec<CellId> = chart.finals.clone();
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut chart.cells[id as usize].marked, true) {
            continue;
        }
        for &c in &chart.cells[id as usize].combos_in {
            let combo = &mut chart.combos[c as usize];
            combo.marked = true;
            stack.extend(combo.args.iter().copied().filter(|&a| !chart.cells[a as usize].marked));
        }
    }
}

/// Forms recovered by the second pass.
#[derive(Debug, Default)]
pub struct Enumeration {
    /// Consistent forms, sorted by canonical text.
    pub forms: Vec<LogicalForm>,
    pub truncated: bool,
    /// Every form of every marked cell.
    pub cell_forms: HashMap<CellId, Vec<LogicalForm>>,
}

/// Pass two: expands marked combinations bottom-up, one memoized form list
/// per marked cell, stopping once `cap` forms have been built.
pub fn second_pass(chart: &Chart, cap: usize) -> Enumeration {
    let mut marked: Vec<CellId> = (0..chart.cells.len() as CellId).filter(|&i| chart.cell(i).marked).collect();
    marked.sort_by_key(|&i| (chart.cell(i).key.size, i));
    let mut memo: HashMap<CellId, Vec<LogicalForm>> = HashMap::new();
    let mut built = 0usize;
    let mut truncated = false;
    'cells: for id in marked {
        let cell = chart.cell(id);
        let mut forms = cell.base_forms.clone();
        for &c in &cell.combos_in {
            let combo = &chart.combos[c as usize];
            if !combo.marked {
                continue;
            }
            let lists: Vec<&[LogicalForm]> =
                combo.args.iter().map(|a| memo.get(a).map_or(&[][..], Vec::as_slice)).collect();
            let same = combo.rule.symmetric() && combo.args.len() == 2 && combo.args[0] == combo.args[1];
            let mut emit = |args: &[&LogicalForm]| -> bool {
                if built >= cap {
                    return false;
                }
                forms.push(build(combo.rule, args).expect("marked combos are well typed"));
                built += 1;
                true
            };
            match lists.as_slice() {
                [xs] => {
                    for x in *xs {
                        if !emit(&[x]) {
                            truncated = true;
                            memo.insert(id, forms);
                            break 'cells;
                        }
                    }
                }
                [xs, ys] => {
                    for (i, x) in xs.iter().enumerate() {
                        for y in &ys[if same { i } else { 0 }..] {
                            if !emit(&[x, y]) {
                                truncated = true;
                                memo.insert(id, forms);
                                break 'cells;
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        memo.insert(id, forms);
    }
    let mut out: Vec<(String, LogicalForm)> = chart
        .finals
        .iter()
        .filter_map(|f| memo.get(f))
        .flatten()
        .map(|z| (z.canonical_string(), z.clone()))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    Enumeration { forms: out.into_iter().map(|(_, z)| z).collect(), truncated, cell_forms: memo }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpdStats {
    pub pass1_cells: usize,
    pub pass2_cells: usize,
    pub combos: usize,
    pub marked_combos: usize,
    pub finals: usize,
    pub consistent_forms: usize,
    pub truncated: bool,
}

impl DpdStats {
    pub fn of(chart: &Chart, z: &Enumeration) -> DpdStats {
        DpdStats {
            pass1_cells: chart.cells.len(),
            pass2_cells: chart.cells.iter().filter(|c| c.marked).count(),
            combos: chart.combos.len(),
            marked_combos: chart.combos.iter().filter(|c| c.marked).count(),
            finals: chart.finals.len(),
            consistent_forms: z.forms.len(),
            truncated: z.truncated,
        }
    }
}

pub struct DpdRun {
    pub chart: Chart,
    pub z: Enumeration,
    pub stats: DpdStats,
}

/// Both passes plus marking.
pub fn run_dpd(utterance: &str, w: &World, target: &Target, rules: &RuleSet, s_max: usize, cap: usize) -> DpdRun {
    let mut chart = first_pass(utterance, w, target, rules, s_max);
    mark_backward(&mut chart);
    let z = second_pass(&chart, cap);
    let stats = DpdStats::of(&chart, &z);
    DpdRun { chart, z, stats }
}

#[derive(Serialize)]
struct DumpCell {
    category: String,
    size: usize,
    denotation: serde_json::Value,
    representative: String,
    combos: usize,
    marked: bool,
}

/// JSON listing of every cell, for debugging and analysis.
pub fn dump_chart(chart: &Chart) -> String {
    let cells: Vec<DumpCell> = (0..chart.cells.len() as CellId)
        .map(|id| {
            let c = chart.cell(id);
            let denotation = match (chart.denotation(id), chart.relation(id)) {
                (Some(d), _) => serde_json::to_value(d).expect("serializable"),
                (_, Some(r)) => serde_json::Value::String(r.to_string()),
                _ => serde_json::Value::Null,
            };
            DumpCell {
                category: c.key.category.to_string(),
                size: c.key.size,
                denotation,
                representative: c.representative.canonical_string(),
                combos: c.combos_in.len(),
                marked: c.marked,
            }
        })
        .collect();
    serde_json::to_string_pretty(&cells).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub args: Vec<String>,
    pub args_prime: Vec<String>,
    pub result: Denotation,
    pub result_prime: Denotation,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub rule: String,
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Forms of size `<= max_size` grouped by category and denotation (relations
/// by identity), as pools of interchangeable arguments.
pub fn argument_pools(
    utterance: &str,
    w: &World,
    rules: &RuleSet,
    max_size: usize,
) -> BTreeMap<Category, Vec<Vec<LogicalForm>>> {
    let all = crate::beam::populate(utterance, w, rules, max_size, None, &crate::beam::RandomScorer { seed: 0 });
    let mut groups: BTreeMap<(Category, String), Vec<LogicalForm>> = BTreeMap::new();
    for d in all {
        let key = match &d.form {
            LogicalForm::Rel(r) => r.to_string(),
            _ => d.denotation.canonical_json(),
        };
        groups.entry((d.category(), key)).or_default().push(d.form.clone());
    }
    let mut out: BTreeMap<Category, Vec<Vec<LogicalForm>>> = BTreeMap::new();
    for ((cat, _), forms) in groups {
        out.entry(cat).or_default().push(forms);
    }
    out
}

/// Samples argument pairs with equal denotations from `pools` and checks that
/// `f` maps them to equal denotations on `w`. Pools with several members are
/// preferred so that most trials substitute distinct forms.
pub fn check_invariance(
    f: &dyn SemanticFunction,
    trials: usize,
    w: &World,
    pools: &BTreeMap<Category, Vec<Vec<LogicalForm>>>,
    rng: &mut impl Rng,
) -> InvarianceReport {
    let mut report = InvarianceReport { rule: f.name(), trials: 0, counterexample: None };
    let mut slots = Vec::new();
    for cat in f.arg_categories() {
        let Some(groups) = pools.get(cat) else { return report };
        let rich: Vec<&Vec<LogicalForm>> = groups.iter().filter(|g| g.len() >= 2).collect();
        slots.push(if rich.is_empty() { groups.iter().collect() } else { rich });
    }
    if slots.is_empty() {
        return report;
    }
    for _ in 0..trials {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for groups in &slots {
            let g = groups.choose(rng).expect("non-empty pool");
            a.push(g.choose(rng).expect("non-empty group"));
            b.push(g.choose(rng).expect("non-empty group"));
        }
        let (Some(za), Some(zb)) = (f.build(&a), f.build(&b)) else { continue };
        report.trials += 1;
        let (da, db) = (execute(&za, w), execute(&zb, w));
        if da != db {
            report.counterexample = Some(Counterexample {
                args: a.iter().map(|z| z.canonical_string()).collect(),
                args_prime: b.iter().map(|z| z.canonical_string()).collect(),
                result: da,
                result_prime: db,
            });
            break;
        }
    }
    report
}

/// A semantic function that is not denotationally invariant: it returns
/// whichever argument has the larger form.
pub struct LargerArgument;

impl SemanticFunction for LargerArgument {
    fn name(&self) -> String {
        "larger-argument".into()
    }

    fn arg_categories(&self) -> &[Category] {
        &[Category::Set, Category::Set]
    }

    fn build(&self, args: &[&LogicalForm]) -> Option<LogicalForm> {
        let [a, b] = args else { return None };
        Some(if b.size() > a.size() { (*b).clone() } else { (*a).clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::value::{Value, ValueSet};
    use crate::world::build_world;
    use rand::SeedableRng;

    fn texts(z: &[LogicalForm]) -> Vec<String> {
        z.iter().map(|z| z.canonical_string()).collect()
    }

    #[test]
    fn fixture_finals_and_collapse() {
        let w = build_world(&fixture_a());
        let t = Target::new(&[FIXTURE_A_ANSWER]).unwrap();
        let run = run_dpd(FIXTURE_A_RELAY_QUESTION, &w, &t, &RuleSet::default(), 5, DEFAULT_CAP);
        assert!(run.chart.finals.iter().any(|&f| run.chart.cell(f).key.size == 5));
        let r3 = Denotation::Set(ValueSet::singleton(Value::Row(3)));
        let cell = run.chart.lookup(Category::Set, 4, &r3).expect("cell (Set, 4, {r3})");
        assert!(run.chart.cell(cell).combos_in.len() >= 2);
        let forms = texts(&run.z.cell_forms[&cell]);
        assert!(forms.contains(&z1_argmax().canonical_string()));
        assert!(forms.contains(&z1_argmin_relay().canonical_string()));
        let z = texts(&run.z.forms);
        assert!(z.contains(&z_answer().canonical_string()));
        for f in &run.z.forms {
            assert!(t.matches(&execute(f, &w)), "{f}");
        }
        assert!(run.stats.pass2_cells < run.stats.pass1_cells);
    }

    #[test]
    fn representatives_execute_to_their_keys() {
        let w = build_world(&fixture_a());
        let t = Target::new(&[FIXTURE_A_ANSWER]).unwrap();
        let chart = first_pass(FIXTURE_A_QUESTION, &w, &t, &RuleSet::default(), 4);
        for id in 0..chart.cells.len() as CellId {
            if let Some(d) = chart.denotation(id) {
                assert_eq!(&execute(&chart.cell(id).representative, &w), d);
            }
        }
    }

    #[test]
    fn unreachable_answer() {
        let w = build_world(&fixture_a());
        let t = Target::new(&["Atlantis"]).unwrap();
        let run = run_dpd(FIXTURE_A_QUESTION, &w, &t, &RuleSet::default(), 3, DEFAULT_CAP);
        assert!(run.chart.finals.is_empty());
        assert_eq!(run.stats.marked_combos, 0);
        assert!(run.z.forms.is_empty());
    }

    #[test]
    fn cap_truncates() {
        let w = build_world(&fixture_a());
        let t = Target::new(&[FIXTURE_A_ANSWER]).unwrap();
        let run = run_dpd(FIXTURE_A_QUESTION, &w, &t, &RuleSet::default(), 4, 3);
        assert!(run.z.truncated);
    }

    #[test]
    fn invariance() {
        let w = build_world(&fixture_a());
        let rules = RuleSet::default();
        let pools = argument_pools(FIXTURE_A_RELAY_QUESTION, &w, &rules, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rep = check_invariance(&RuleId::C1, 200, &w, &pools, &mut rng);
        assert!(rep.passed() && rep.trials > 0);
        let rep = check_invariance(&LargerArgument, 500, &w, &pools, &mut rng);
        assert!(!rep.passed());
        assert!(check_invariance(&RuleId::M6(crate::lf::SupOp::Argmax), 10, &w, &BTreeMap::new(), &mut rng).passed());
    }
}

//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use lfsearch_core::anchor::anchor_entities;
use lfsearch_core::beam::{beam_search, RandomScorer};
use lfsearch_core::dpd::{argument_pools, check_invariance, run_dpd, LargerArgument, DEFAULT_CAP};
use lfsearch_core::exec::execute;
use lfsearch_core::fictitious::{entropy, equivalence_classes, generate_worlds, prune, select_worlds, Expected};
use lfsearch_core::fixtures::*;
use lfsearch_core::lf::{AggOp, Chain, CompareOp, MapForm, Relation, SupOp};
use lfsearch_core::normalize::normalize_cell;
use lfsearch_core::rules::{RuleId, RuleSet};
use lfsearch_core::synth::{suite, SynthExample};
use lfsearch_core::target::{answer_strings, Target};
use lfsearch_core::value::ValueSet;
use lfsearch_core::world::cell_values;
use lfsearch_core::{build_world, Denotation, LogicalForm, Table, Value, World};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_suite() -> Vec<SynthExample> {
    suite(7, 20, 5, 4)
}

fn set(vs: impl IntoIterator<Item = Value>) -> Denotation {
    Denotation::Set(vs.into_iter().collect::<ValueSet>())
}

// ---------------------------------------------------------------------------
// Brute-force enumerator: every form up to `s_max`, built by the grammar and
// evaluated whole by the executor, with no sharing by denotation.

struct Brute {
    rels: Vec<Relation>,
    sets: Vec<Vec<(LogicalForm, Denotation)>>,
    maps: Vec<Vec<(MapForm, Denotation)>>,
}

fn ok_set(d: &Denotation) -> bool {
    !d.is_error() && d.as_set().is_some_and(|s| !s.is_empty())
}

fn literal_value(z: &LogicalForm, d: &Denotation) -> Option<Value> {
    let v = d.as_set()?.single()?;
    (z.size() == 0 && !matches!(v, Value::Row(_))).then(|| v.clone())
}

fn not_singleton(d: &Denotation) -> bool {
    !d.as_set().is_some_and(|s| s.len() == 1)
}

fn extend(m: &MapForm, chain: Chain) -> MapForm {
    MapForm { unary: m.unary.clone(), chain: Arc::new(chain) }
}

impl Brute {
    fn run(question: &str, w: &World, s_max: usize) -> Brute {
        let mut rels: Vec<Relation> = Vec::new();
        for label in w.labels() {
            let r = Relation::Edge { label: label.clone(), reversed: false };
            rels.push(r.reverse());
            rels.push(r);
        }
        rels.extend(CompareOp::ALL.map(Relation::Compare));
        let mut base: Vec<LogicalForm> = Vec::new();
        for a in anchor_entities(question, w) {
            let z = LogicalForm::Entity(a.value);
            if !base.contains(&z) {
                base.push(z);
            }
        }
        base.push(LogicalForm::AllRows);
        let mut b = Brute {
            rels,
            sets: vec![base.into_iter().map(|z| (z.clone(), execute(&z, w))).collect()],
            maps: vec![Vec::new()],
        };
        for s in 1..=s_max {
            let mut sets: BTreeMap<String, (LogicalForm, Denotation)> = BTreeMap::new();
            let mut add = |z: LogicalForm| {
                let d = execute(&z, w);
                if ok_set(&d) {
                    sets.entry(z.canonical_string()).or_insert((z, d));
                }
            };
            for (u, _) in &b.sets[s - 1] {
                for r in &b.rels {
                    add(LogicalForm::join(r.clone(), u.clone()));
                }
            }
            for (u, d) in &b.sets[s - 1] {
                if not_singleton(d) {
                    for op in [AggOp::Count, AggOp::Max, AggOp::Min, AggOp::Sum] {
                        add(LogicalForm::aggregate(op, u.clone()));
                    }
                }
            }
            for i in 0..s {
                for (x, dx) in &b.sets[i] {
                    for (y, dy) in &b.sets[s - 1 - i] {
                        if dx != dy {
                            add(LogicalForm::intersect(x.clone(), y.clone()));
                        }
                        add(LogicalForm::sub(x.clone(), y.clone()));
                        if s == 1 {
                            if let (Some(a), Some(c)) = (literal_value(x, dx), literal_value(y, dy)) {
                                if a != c {
                                    add(LogicalForm::union(x.clone(), y.clone()));
                                }
                            }
                        }
                    }
                }
            }
            for (m, _) in &b.maps[s - 1] {
                for op in [SupOp::Argmax, SupOp::Argmin] {
                    add(LogicalForm::superlative(op, m.clone()));
                }
            }
            let mut maps: BTreeMap<String, (MapForm, Denotation)> = BTreeMap::new();
            if s < s_max {
                let mut addm = |m: MapForm| {
                    let z = LogicalForm::map(m.clone());
                    let d = execute(&z, w);
                    if !d.is_error() {
                        maps.entry(z.canonical_string()).or_insert((m, d));
                    }
                };
                for (u, _) in &b.sets[s - 1] {
                    addm(MapForm::new(u.clone(), Chain::Var));
                }
                for (m, _) in &b.maps[s - 1] {
                    for r in &b.rels {
                        addm(extend(m, Chain::Join(r.clone(), m.chain.clone())));
                    }
                    addm(extend(m, Chain::Count(m.chain.clone())));
                }
                for a in 1..s {
                    for (m, _) in &b.maps[a] {
                        for (u, _) in &b.sets[s - 1 - a] {
                            addm(extend(m, Chain::Intersect(m.chain.clone(), Arc::new(u.clone()))));
                        }
                    }
                }
            }
            b.sets.push(sets.into_values().collect());
            b.maps.push(maps.into_values().collect());
        }
        b
    }

    fn consistent(&self, target: &Target) -> BTreeSet<String> {
        self.sets[1..]
            .iter()
            .flatten()
            .filter(|(_, d)| target.matches(d))
            .map(|(z, _)| z.canonical_string())
            .collect()
    }
}

fn texts(z: &[LogicalForm]) -> BTreeSet<String> {
    z.iter().map(LogicalForm::canonical_string).collect()
}

fn dpd_forms(ex: &SynthExample, s_max: usize) -> (Vec<LogicalForm>, lfsearch_core::dpd::DpdStats) {
    let w = build_world(&ex.table);
    let run = run_dpd(&ex.question, &w, &Target::new(&ex.answer).unwrap(), &RuleSet::default(), s_max, DEFAULT_CAP);
    (run.z.forms, run.stats)
}

// ---------------------------------------------------------------------------

fn executor_goldens() -> Outcome {
    let start = Instant::now();
    let w = build_world(&fixture_a());
    let first = execute(&lfsearch_core::lf::column_join("Position", "1st"), &w);
    check(first == set([Value::Row(1), Value::Row(3)]), format!("Position.1st = {}", first.canonical_json()))?;
    let m1 = MapForm::new(lfsearch_core::lf::column_join("Position", "1st"), Chain::Var);
    let index = Relation::builtin(lfsearch_core::world::BuiltIn::Index).reverse();
    let m2 = MapForm { unary: m1.unary.clone(), chain: Arc::new(Chain::Join(index, Arc::new(Chain::Var))) };
    let md = execute(&LogicalForm::map(m2), &w);
    let pairs: Vec<(Value, ValueSet)> = md.as_map().ok_or("M2 result is not a map")?.pairs().to_vec();
    let want = vec![
        (Value::Row(1), ValueSet::singleton(Value::number(1.0))),
        (Value::Row(3), ValueSet::singleton(Value::number(3.0))),
    ];
    check(pairs == want, format!("map = {}", md.canonical_json()))?;
    let z1 = execute(&z1_argmax(), &w);
    check(z1 == set([Value::Row(3)]), format!("z1 = {}", z1.canonical_json()))?;
    let answer = execute(&z_answer(), &w);
    check(answer == set([Value::entity("thailand")]), format!("answer = {}", answer.canonical_json()))?;
    let t = start.elapsed();
    check(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!("{{r1,r3}}, map r1:{{1}} r3:{{3}}, {{thailand}} in {t:.2?}"))
}

fn dpd_completeness() -> Outcome {
    let mut total = 0;
    for ex in random_suite() {
        let w = build_world(&ex.table);
        let target = Target::new(&ex.answer).unwrap();
        let (z, _) = dpd_forms(&ex, 4);
        let brute = Brute::run(&ex.question, &w, 4).consistent(&target);
        let got = texts(&z);
        if got != brute {
            let missing: Vec<_> = brute.difference(&got).take(3).collect();
            let extra: Vec<_> = got.difference(&brute).take(3).collect();
            return Err(format!("{}: |Z|={} brute={} missing {missing:?} extra {extra:?}", ex.id, got.len(), brute.len()));
        }
        total += got.len();
    }
    Ok(format!("20 tables at s_max=4, {total} consistent forms, sets equal"))
}

fn beam_subset() -> Outcome {
    let mut widths: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for ex in random_suite() {
        let w = build_world(&ex.table);
        let target = Target::new(&ex.answer).unwrap();
        let z = texts(&dpd_forms(&ex, 4).0);
        let consistent_beam = |beam: Option<usize>, seed: u64| -> BTreeSet<String> {
            beam_search(&ex.question, &w, &RuleSet::default(), 4, beam, &RandomScorer { seed })
                .into_iter()
                .filter(|d| target.matches(&d.denotation))
                .map(|d| d.form.canonical_string())
                .collect()
        };
        for b in [1, 4, 16] {
            for seed in 0..5 {
                let zb = consistent_beam(Some(b), seed);
                check(zb.is_subset(&z), format!("{} beam={b} seed={seed} not a subset", ex.id))?;
                widths.entry(b).or_default().push(zb.len());
            }
        }
        // An unbounded beam keeps every derivation, so the scorer seed has no effect.
        let all = consistent_beam(None, 0);
        check(all == z, format!("{}: unbounded beam {} vs Z {}", ex.id, all.len(), z.len()))?;
        widths.entry(usize::MAX).or_default().push(all.len());
    }
    let recall: Vec<String> = widths
        .iter()
        .map(|(&b, v)| {
            let b = if b == usize::MAX { "inf".to_string() } else { b.to_string() };
            format!("beam {b}: mean |Z_b| {:.1}", v.iter().sum::<usize>() as f64 / v.len() as f64)
        })
        .collect();
    Ok(recall.join(", "))
}

fn cell_reduction() -> Outcome {
    let mut ratios = Vec::new();
    let w = build_world(&fixture_a());
    let run = run_dpd(FIXTURE_A_QUESTION, &w, &Target::new(&[FIXTURE_A_ANSWER]).unwrap(), &RuleSet::default(), 7, DEFAULT_CAP);
    let s = run.stats;
    check(s.consistent_forms > 0 && s.pass2_cells < s.pass1_cells, format!("fixture: {} vs {}", s.pass2_cells, s.pass1_cells))?;
    let fixture = 1.0 - s.pass2_cells as f64 / s.pass1_cells as f64;
    for ex in random_suite() {
        let (_, s) = dpd_forms(&ex, 4);
        if s.consistent_forms > 0 {
            check(s.pass2_cells < s.pass1_cells, format!("{}: {} vs {}", ex.id, s.pass2_cells, s.pass1_cells))?;
            ratios.push(1.0 - s.pass2_cells as f64 / s.pass1_cells as f64);
        }
    }
    Ok(format!(
        "fixture s_max=7: {} -> {} cells ({:.1}% reduction); suite mean {:.1}% over {} tables",
        s.pass1_cells,
        s.pass2_cells,
        100.0 * fixture,
        100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64,
        ratios.len()
    ))
}

fn invariance() -> Outcome {
    let w = build_world(&fixture_a());
    let pools = argument_pools(FIXTURE_A_QUESTION, &w, &RuleSet::default(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut n = 0;
    for rule in RuleId::compositional() {
        let rep = check_invariance(&rule, 500, &w, &pools, &mut rng);
        check(rep.trials >= 500, format!("{rule}: only {} trials", rep.trials))?;
        check(rep.passed(), format!("{rule}: {:?}", rep.counterexample))?;
        n += 1;
    }
    let broken = check_invariance(&LargerArgument, 500, &w, &pools, &mut rng);
    let cx = broken.counterexample.ok_or("size-dependent rule passed")?;
    Ok(format!("{n} rules x 500 trials invariant; larger-argument fails on {:?} vs {:?}", cx.args, cx.args_prime))
}

fn brute_objective(tuples: &[Vec<u8>], worlds: &[usize]) -> f64 {
    let mut groups: HashMap<Vec<u8>, usize> = HashMap::new();
    for t in tuples {
        *groups.entry(worlds.iter().map(|&j| t[j]).collect()).or_default() += 1;
    }
    let mut sizes: Vec<usize> = groups.into_values().collect();
    sizes.sort_unstable();
    sizes.iter().map(|&n| n as f64 * (n as f64).log2()).sum()
}

fn combinations(n: usize, l: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return vec![Vec::new()];
    }
    (l - 1..n).flat_map(|last| combinations(last, l - 1).into_iter().map(move |mut c| {
        c.push(last);
        c
    })).collect()
}

fn selection_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for inst in 0..50 {
        let nw = rng.random_range(1..=10);
        let nc = rng.random_range(1..=12);
        let alphabet = rng.random_range(2..=4);
        let l = rng.random_range(1..=3);
        let tuples: Vec<Vec<u8>> = (0..nc).map(|_| (0..nw).map(|_| rng.random_range(0..alphabet)).collect()).collect();
        let dens: Vec<Vec<Denotation>> =
            tuples.iter().map(|t| t.iter().map(|&x| set([Value::number(x as f64)])).collect()).collect();
        let refs: Vec<&[Denotation]> = dens.iter().map(Vec::as_slice).collect();
        let sel = select_worlds(&refs, l, false).map_err(|e| e.to_string())?;
        let best = combinations(nw, l.min(nw)).iter().map(|c| brute_objective(&tuples, c)).fold(f64::INFINITY, f64::min);
        check(sel.objective == best, format!("instance {inst}: {} vs brute {best}", sel.objective))?;
        check(brute_objective(&tuples, &sel.worlds) == best, format!("instance {inst}: chosen worlds do not attain it"))?;
    }
    let h = entropy(&[2, 1, 1], 4).map_err(|e| e.to_string())?;
    check(h == 0.5, format!("entropy {{2,1,1}} of 4 = {h}"))?;
    Ok("50 instances equal to brute force; entropy({2,1,1})/4 = 0.5".into())
}

/// Column checks written against the tables directly.
fn world_violations(original: &Table, question: &str, worlds: &[Table]) -> Vec<String> {
    let ow = build_world(original);
    let anchored: Vec<Value> = anchor_entities(question, &ow).into_iter().map(|a| a.value).collect();
    let keys = |t: &Table, j: usize| -> Vec<f64> { t.column(j).filter_map(|c| normalize_cell(c).number).collect() };
    let mut out = Vec::new();
    for (i, t) in worlds.iter().enumerate() {
        if t.columns != original.columns || t.num_rows() != original.num_rows() {
            out.push(format!("w{i}: shape"));
        }
        let tw = build_world(t);
        for v in &anchored {
            let in_cells = (0..original.columns.len()).any(|j| original.column(j).any(|c| cell_values(c).contains(v)));
            if in_cells && !tw.contains(v) {
                out.push(format!("w{i}: lost {v}"));
            }
        }
        for j in 0..original.columns.len() {
            let ok = keys(original, j);
            if ok.len() < 2 || ok.len() != original.num_rows() {
                continue;
            }
            let asc = ok.windows(2).all(|p| p[0] <= p[1]);
            let desc = ok.windows(2).all(|p| p[0] >= p[1]);
            let k = keys(t, j);
            if (asc && !k.windows(2).all(|p| p[0] <= p[1])) || (!asc && desc && !k.windows(2).all(|p| p[0] >= p[1])) {
                out.push(format!("w{i}: column {} unsorted", original.columns[j]));
            }
        }
    }
    out
}

fn world_properties() -> Outcome {
    let t = fixture_a();
    let ws = generate_worlds(&t, FIXTURE_A_QUESTION, 1000, 3).map_err(|e| e.to_string())?;
    let mut bad = ws.violations(&t);
    bad.extend(world_violations(&t, FIXTURE_A_QUESTION, &ws.tables));
    let mut count = ws.len();
    for ex in random_suite() {
        let s = generate_worlds(&ex.table, &ex.question, 50, 3).map_err(|e| e.to_string())?;
        bad.extend(s.violations(&ex.table));
        bad.extend(world_violations(&ex.table, &ex.question, &s.tables));
        count += s.len();
    }
    check(bad.is_empty(), format!("{} violations, first {:?}", bad.len(), bad.first()))?;
    let again = generate_worlds(&t, FIXTURE_A_QUESTION, 1000, 3).map_err(|e| e.to_string())?;
    check(again.manifest_json() == ws.manifest_json() && again.tables == ws.tables, "same seed, different worlds")?;
    let other = generate_worlds(&t, FIXTURE_A_QUESTION, 1000, 4).map_err(|e| e.to_string())?;
    check(other.tables != ws.tables, "different seeds gave identical worlds")?;
    Ok(format!("{count} worlds, 0 violations; equal seeds give identical manifests"))
}

fn refinement_and_safety() -> Outcome {
    let examples = random_suite();
    let mut prepared = Vec::new();
    for ex in &examples {
        let (z, _) = dpd_forms(ex, 4);
        let many = generate_worlds(&ex.table, &ex.question, 300, 11).map_err(|e| e.to_string())?;
        let few = generate_worlds(&ex.table, &ex.question, 30, 11).map_err(|e| e.to_string())?;
        check(few.tables[..] == many.tables[..30], format!("{}: 30 worlds are not a prefix of 300", ex.id))?;
        let coarse: HashMap<String, usize> = equivalence_classes(&z, &few.worlds)
            .iter()
            .flat_map(|c| c.members.iter().map(move |m| (m.canonical_string(), c.id)))
            .collect();
        for c in equivalence_classes(&z, &many.worlds) {
            let ids: BTreeSet<usize> = c.members.iter().map(|m| coarse[&m.canonical_string()]).collect();
            check(ids.len() == 1, format!("{}: a 300-world class spans {} classes over 30", ex.id, ids.len()))?;
        }
        if !z.is_empty() {
            prepared.push((z, few));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut answer_trials = 0;
    for trial in 0..1000 {
        let (z, ws) = prepared.choose(&mut rng).unwrap();
        let classes = equivalence_classes(z, &ws.worlds);
        let star = z.choose(&mut rng).unwrap();
        let home = classes.iter().find(|c| c.members.contains(star)).unwrap().id;
        let mut worlds: Vec<usize> = (0..ws.len()).collect();
        worlds.shuffle(&mut rng);
        worlds.truncate(rng.random_range(1..=5));
        worlds.sort_unstable();
        let ideal: Vec<Denotation> = worlds.iter().map(|&j| execute(star, &ws.worlds[j])).collect();
        let exact: Vec<Expected> = ideal.iter().cloned().map(Expected::Exact).collect();
        let kept = prune(&classes, &worlds, &exact, 0).survivors();
        check(kept.contains(&home), format!("trial {trial}: z* class pruned at m=0"))?;
        // The same annotation spelled as answer strings, where it can be.
        if let Some(answers) = ideal.iter().map(answer_strings).collect::<Option<Vec<_>>>() {
            let spelled: Vec<Expected> = answers.iter().map(|a| Expected::Answer(Target::new(a).unwrap())).collect();
            check(prune(&classes, &worlds, &spelled, 0).survivors().contains(&home), format!("trial {trial}: spelled answer pruned z*"))?;
            answer_trials += 1;
        }
        // Noisy annotations: each world answered by a random class.
        let noisy: Vec<Expected> =
            worlds.iter().map(|&j| Expected::Exact(classes.choose(&mut rng).unwrap().tuple[j].clone())).collect();
        let k0: BTreeSet<usize> = prune(&classes, &worlds, &noisy, 0).survivors().into_iter().collect();
        let k1: BTreeSet<usize> = prune(&classes, &worlds, &noisy, 1).survivors().into_iter().collect();
        check(k0.is_subset(&k1), format!("trial {trial}: Z_c(0) not within Z_c(1)"))?;
    }
    Ok(format!("20 tables refine 30 -> 300 worlds; 1000 safety trials ({answer_trials} also as answer strings); Z_c(0) within Z_c(1)"))
}

fn end_to_end_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("a.tsv"), FIXTURE_A_TSV).map_err(|e| e.to_string())?;
    let examples = dir.path().join("examples.jsonl");
    let line = serde_json::json!({"id": "fixture-a", "question": FIXTURE_A_QUESTION, "table": "a.tsv", "answer": [FIXTURE_A_ANSWER]});
    std::fs::write(&examples, format!("{line}\n")).map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let form = z_answer().canonical_string();
    let start = Instant::now();
    let steps: Vec<Vec<&str>> = vec![
        vec!["dpd"],
        vec!["worlds"],
        vec!["classes"],
        vec!["select"],
        vec!["self-annotate", "--form", &form],
        vec!["prune"],
    ];
    for step in &steps {
        let status = Command::new(env!("CARGO_BIN_EXE_lfsearch"))
            .args(step)
            .arg(&examples)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.success(), format!("{step:?}: {}", String::from_utf8_lossy(&status.stderr)))?;
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(30), format!("took {t:?}"))?;
    let pruned = std::fs::read_to_string(out.join("fixture-a/pruned.txt")).map_err(|e| e.to_string())?;
    check(pruned.lines().any(|l| l == form), "the answer form did not survive")?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fixture-a/prune.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let after = report["classes_after"].as_u64().unwrap_or(0);
    check(after >= 1, "no surviving class")?;
    Ok(format!("6 commands in {t:.2?}; {after} surviving class(es) keep {form}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("executor-goldens", executor_goldens),
        ("dpd-completeness", dpd_completeness),
        ("beam-subset", beam_subset),
        ("cell-reduction", cell_reduction),
        ("invariance", invariance),
        ("selection-optimality", selection_optimality),
        ("world-properties", world_properties),
        ("refinement-safety", refinement_and_safety),
        ("end-to-end-cli", end_to_end_cli),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

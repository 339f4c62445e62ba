//! Deduction rules, redundancy guards, and derivations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::anchor::Anchor;
use crate::denotation::Denotation;
use crate::error::{Error, Result};
use crate::exec::execute;
use crate::lf::{AggOp, Category, Chain, LogicalForm, MapForm, Relation, SupOp};
use crate::value::Value;
use crate::world::World;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    /// Triggered by an utterance span.
    BaseSpan,
    /// Triggered by nothing.
    BaseEmpty,
    Binary,
    Unary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    B1,
    BRows,
    B5,
    C1,
    CIsect,
    CUnion,
    CAgg(AggOp),
    CSub,
    M1,
    M2,
    MIsect,
    MCount,
    M6(SupOp),
}

impl RuleId {
    pub const ALL: [RuleId; 17] = [
        RuleId::B1,
        RuleId::BRows,
        RuleId::B5,
        RuleId::C1,
        RuleId::CIsect,
        RuleId::CUnion,
        RuleId::CAgg(AggOp::Count),
        RuleId::CAgg(AggOp::Max),
        RuleId::CAgg(AggOp::Min),
        RuleId::CAgg(AggOp::Sum),
        RuleId::CSub,
        RuleId::M1,
        RuleId::M2,
        RuleId::MIsect,
        RuleId::MCount,
        RuleId::M6(SupOp::Argmax),
        RuleId::M6(SupOp::Argmin),
    ];

    pub fn name(self) -> String {
        match self {
            RuleId::B1 => "B1".into(),
            RuleId::BRows => "B-rows".into(),
            RuleId::B5 => "B5".into(),
            RuleId::C1 => "C1".into(),
            RuleId::CIsect => "C-isect".into(),
            RuleId::CUnion => "C-union".into(),
            RuleId::CAgg(op) => format!("C-agg.{}", op.name()),
            RuleId::CSub => "C-sub".into(),
            RuleId::M1 => "M1".into(),
            RuleId::M2 => "M2".into(),
            RuleId::MIsect => "M-isect".into(),
            RuleId::MCount => "M-count".into(),
            RuleId::M6(op) => format!("M6.{}", op.name()),
        }
    }

    pub fn kind(self) -> RuleKind {
        match self {
            RuleId::B1 => RuleKind::BaseSpan,
            RuleId::BRows | RuleId::B5 => RuleKind::BaseEmpty,
            RuleId::C1 | RuleId::CIsect | RuleId::CUnion | RuleId::CSub | RuleId::M2 | RuleId::MIsect => {
                RuleKind::Binary
            }
            RuleId::CAgg(_) | RuleId::M1 | RuleId::MCount | RuleId::M6(_) => RuleKind::Unary,
        }
    }

    pub fn arg_categories(self) -> &'static [Category] {
        use Category::*;
        match self {
            RuleId::B1 | RuleId::BRows | RuleId::B5 => &[],
            RuleId::C1 => &[Set, Rel],
            RuleId::CIsect | RuleId::CUnion | RuleId::CSub => &[Set, Set],
            RuleId::CAgg(_) | RuleId::M1 => &[Set],
            RuleId::M2 => &[Map, Rel],
            RuleId::MIsect => &[Map, Set],
            RuleId::MCount | RuleId::M6(_) => &[Map],
        }
    }

    pub fn result_category(self) -> Category {
        match self {
            RuleId::B5 => Category::Rel,
            RuleId::M1 | RuleId::M2 | RuleId::MIsect | RuleId::MCount => Category::Map,
            _ => Category::Set,
        }
    }

    /// Local names for rules whose exact form is not pinned down by the
    /// original rule table.
    pub fn reconstructed(self) -> bool {
        !matches!(self, RuleId::B1 | RuleId::B5 | RuleId::C1 | RuleId::M1 | RuleId::M2 | RuleId::M6(_))
    }

    /// Intersection and union ignore argument order.
    pub fn symmetric(self) -> bool {
        matches!(self, RuleId::CIsect | RuleId::CUnion)
    }

    pub fn compositional() -> impl Iterator<Item = RuleId> {
        RuleId::ALL.into_iter().filter(|r| matches!(r.kind(), RuleKind::Binary | RuleKind::Unary))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| Error::UnknownRule(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    NoError,
    NoEmpty,
    AggSingleton,
    UnionEntities,
    NoSubInMap,
    IsectDistinct,
}

impl Guard {
    pub const ALL: [Guard; 6] = [
        Guard::NoError,
        Guard::NoEmpty,
        Guard::AggSingleton,
        Guard::UnionEntities,
        Guard::NoSubInMap,
        Guard::IsectDistinct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Guard::NoError => "guard.no-error",
            Guard::NoEmpty => "guard.no-empty",
            Guard::AggSingleton => "guard.agg-singleton",
            Guard::UnionEntities => "guard.union-entities",
            Guard::NoSubInMap => "guard.no-sub-in-map",
            Guard::IsectDistinct => "guard.isect-distinct",
        }
    }
}

/// Enabled rules and guards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: BTreeSet<RuleId>,
    pub guards: BTreeSet<Guard>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet { rules: RuleId::ALL.into_iter().collect(), guards: Guard::ALL.into_iter().collect() }
    }
}

impl RuleSet {
    /// One rule id or guard name per line; `#` starts a comment.
    pub fn parse_manifest(text: &str) -> Result<RuleSet> {
        let mut set = RuleSet { rules: BTreeSet::new(), guards: BTreeSet::new() };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(g) = Guard::ALL.into_iter().find(|g| g.name() == line) {
                set.guards.insert(g);
            } else {
                set.rules.insert(line.parse()?);
            }
        }
        Ok(set)
    }

    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.name());
            if r.reconstructed() {
                out.push_str("  # reconstructed");
            }
            out.push('\n');
        }
        for g in &self.guards {
            out.push_str(g.name());
            out.push('\n');
        }
        out
    }

    pub fn has(&self, r: RuleId) -> bool {
        self.rules.contains(&r)
    }

    pub fn guard(&self, g: Guard) -> bool {
        self.guards.contains(&g)
    }
}

/// What a guard sees of one argument: its size and, for sets and maps, its
/// denotation.
#[derive(Clone, Copy, Debug)]
pub struct ArgView<'a> {
    pub size: usize,
    pub denotation: Option<&'a Denotation>,
}

fn singleton_literal(a: &ArgView<'_>) -> Option<Value> {
    let v = a.denotation?.as_set()?.single()?;
    (a.size == 0 && !matches!(v, Value::Row(_))).then(|| v.clone())
}

/// Whether the enabled guards admit this rule application. Depends only on
/// the categories, sizes and denotations involved, so forms sharing a cell
/// are admitted or denied together.
pub fn guards_allow(rules: &RuleSet, rule: RuleId, args: &[ArgView<'_>], result: &Denotation) -> bool {
    if rules.guard(Guard::NoError) && result.is_error() {
        return false;
    }
    if rules.guard(Guard::NoEmpty) && result.as_set().is_some_and(|s| s.is_empty()) {
        return false;
    }
    match rule {
        RuleId::CAgg(_) if rules.guard(Guard::AggSingleton) => {
            !args[0].denotation.and_then(Denotation::as_set).is_some_and(|s| s.len() == 1)
        }
        RuleId::CUnion if rules.guard(Guard::UnionEntities) => {
            matches!((singleton_literal(&args[0]), singleton_literal(&args[1])), (Some(a), Some(b)) if a != b)
        }
        RuleId::CIsect if rules.guard(Guard::IsectDistinct) => args[0].denotation != args[1].denotation,
        // Chains have no subtraction step, so NoSubInMap holds by construction.
        _ => true,
    }
}

/// The semantic function of a rule, as seen by the invariance check.
pub trait SemanticFunction: Sync {
    fn name(&self) -> String;
    fn arg_categories(&self) -> &[Category];
    /// `None` when the arguments have the wrong categories.
    fn build(&self, args: &[&LogicalForm]) -> Option<LogicalForm>;
}

impl SemanticFunction for RuleId {
    fn name(&self) -> String {
        RuleId::name(*self)
    }

    fn arg_categories(&self) -> &[Category] {
        RuleId::arg_categories(*self)
    }

    fn build(&self, args: &[&LogicalForm]) -> Option<LogicalForm> {
        build(*self, args)
    }
}

fn map_of(z: &LogicalForm) -> Option<&MapForm> {
    match z {
        LogicalForm::Map(m) => Some(m),
        _ => None,
    }
}

fn rel_of(z: &LogicalForm) -> Option<&Relation> {
    match z {
        LogicalForm::Rel(r) => Some(r),
        _ => None,
    }
}

fn extend(m: &MapForm, f: impl FnOnce(Arc<Chain>) -> Chain) -> LogicalForm {
    LogicalForm::Map(Arc::new(MapForm { unary: m.unary.clone(), chain: Arc::new(f(m.chain.clone())) }))
}

/// Constructs the form `g(z1, z2)` of a compositional rule.
pub fn build(rule: RuleId, args: &[&LogicalForm]) -> Option<LogicalForm> {
    let cats = rule.arg_categories();
    if cats.is_empty() || args.len() != cats.len() || args.iter().zip(cats).any(|(a, c)| a.category() != *c) {
        return None;
    }
    Some(match rule {
        RuleId::C1 => LogicalForm::join(rel_of(args[1])?.clone(), args[0].clone()),
        RuleId::CIsect => LogicalForm::intersect(args[0].clone(), args[1].clone()),
        RuleId::CUnion => LogicalForm::union(args[0].clone(), args[1].clone()),
        RuleId::CAgg(op) => LogicalForm::aggregate(op, args[0].clone()),
        RuleId::CSub => LogicalForm::sub(args[0].clone(), args[1].clone()),
        RuleId::M1 => LogicalForm::map(MapForm::new(args[0].clone(), Chain::Var)),
        RuleId::M2 => {
            let r = rel_of(args[1])?.clone();
            extend(map_of(args[0])?, |c| Chain::Join(r, c))
        }
        RuleId::MIsect => {
            let s = Arc::new(args[1].clone());
            extend(map_of(args[0])?, |c| Chain::Intersect(c, s))
        }
        RuleId::MCount => extend(map_of(args[0])?, Chain::Count),
        RuleId::M6(op) => LogicalForm::Superlative(op, map_of(args[0])?.clone().into()),
        RuleId::B1 | RuleId::BRows | RuleId::B5 => return None,
    })
}

#[derive(Clone, Debug)]
pub enum Provenance {
    Anchor(Anchor),
    Base(RuleId),
    Rule { rule: RuleId, children: Vec<Arc<Derivation>> },
}

/// A form together with its denotation on the world it was built for and
/// the rule applications that produced it.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub form: LogicalForm,
    pub denotation: Denotation,
    pub provenance: Provenance,
}

impl Derivation {
    pub fn category(&self) -> Category {
        self.form.category()
    }

    pub fn size(&self) -> usize {
        self.form.size()
    }

    pub fn rule(&self) -> RuleId {
        match &self.provenance {
            Provenance::Anchor(_) => RuleId::B1,
            Provenance::Base(r) | Provenance::Rule { rule: r, .. } => *r,
        }
    }

    /// Rebuilds the form from the provenance alone.
    pub fn replay(&self) -> Option<LogicalForm> {
        match &self.provenance {
            Provenance::Anchor(a) => Some(LogicalForm::Entity(a.value.clone())),
            Provenance::Base(_) => Some(self.form.clone()),
            Provenance::Rule { rule, children } => {
                let forms = children.iter().map(|c| c.replay()).collect::<Option<Vec<_>>>()?;
                build(*rule, &forms.iter().collect::<Vec<_>>())
            }
        }
    }

    fn view(&self) -> ArgView<'_> {
        ArgView {
            size: self.size(),
            denotation: (self.category() != Category::Rel).then_some(&self.denotation),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reject {
    Category,
    Guard,
}

impl Reject {
    pub fn as_str(self) -> &'static str {
        match self {
            Reject::Category => "category",
            Reject::Guard => "guard",
        }
    }
}

/// Applies a compositional rule to derivations, executing the new form on
/// `w` to obtain its denotation.
pub fn apply(rules: &RuleSet, rule: RuleId, args: &[Arc<Derivation>], w: &World) -> Result<Derivation, Reject> {
    let forms: Vec<&LogicalForm> = args.iter().map(|d| &d.form).collect();
    let form = build(rule, &forms).ok_or(Reject::Category)?;
    let denotation = execute(&form, w);
    let views: Vec<ArgView<'_>> = args.iter().map(|d| d.view()).collect();
    if !guards_allow(rules, rule, &views, &denotation) {
        return Err(Reject::Guard);
    }
    Ok(Derivation { form, denotation, provenance: Provenance::Rule { rule, children: args.to_vec() } })
}

/// Every relation of the world, forwards and reversed, plus the five
/// comparisons.
pub fn base_relations(w: &World) -> Vec<Relation> {
    let mut out: Vec<Relation> = w
        .labels()
        .flat_map(|l| {
            let r = Relation::Edge { label: l.clone(), reversed: false };
            [r.reverse(), r]
        })
        .collect();
    out.extend(crate::lf::CompareOp::ALL.map(Relation::Compare));
    out.sort();
    out.dedup();
    out
}

/// Size-0 derivations: one per anchored value, all rows, and every relation.
pub fn base_cells(utterance: &str, w: &World, rules: &RuleSet) -> Vec<Arc<Derivation>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    if rules.has(RuleId::B1) {
        for a in crate::anchor::anchor_entities(utterance, w) {
            if seen.insert(a.value.clone()) {
                let form = LogicalForm::Entity(a.value.clone());
                let denotation = execute(&form, w);
                out.push(Arc::new(Derivation { form, denotation, provenance: Provenance::Anchor(a) }));
            }
        }
    }
    if rules.has(RuleId::BRows) {
        let form = LogicalForm::AllRows;
        let denotation = execute(&form, w);
        out.push(Arc::new(Derivation { form, denotation, provenance: Provenance::Base(RuleId::BRows) }));
    }
    if rules.has(RuleId::B5) {
        for r in base_relations(w) {
            out.push(Arc::new(Derivation {
                form: LogicalForm::Rel(r),
                denotation: Denotation::Error(crate::denotation::ErrorTag::Type),
                provenance: Provenance::Base(RuleId::B5),
            }));
        }
    }
    out
}

/// A rule application shape at one target size: argument categories and
/// sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: RuleId,
    pub args: Vec<(Category, usize)>,
}

/// All ways the enabled rules can produce a form of size `s`. Maps of size
/// `s_max` could never feed a superlative, so they are not built.
pub fn steps_for_size(rules: &RuleSet, s: usize, s_max: usize) -> Vec<Step> {
    use Category::*;
    let mut out = Vec::new();
    if s == 0 {
        return out;
    }
    let maps_ok = s < s_max;
    for &rule in &rules.rules {
        let mut push = |args: Vec<(Category, usize)>| out.push(Step { rule, args });
        match rule {
            RuleId::C1 => push(vec![(Set, s - 1), (Rel, 0)]),
            RuleId::M2 if maps_ok => push(vec![(Map, s - 1), (Rel, 0)]),
            RuleId::CAgg(_) | RuleId::M6(_) => push(vec![(rule.arg_categories()[0], s - 1)]),
            RuleId::M1 | RuleId::MCount if maps_ok => push(vec![(rule.arg_categories()[0], s - 1)]),
            RuleId::CUnion if s == 1 => push(vec![(Set, 0), (Set, 0)]),
            RuleId::CIsect => {
                for a in 0..=(s - 1) / 2 {
                    push(vec![(Set, a), (Set, s - 1 - a)]);
                }
            }
            RuleId::CSub => {
                for a in 0..s {
                    push(vec![(Set, a), (Set, s - 1 - a)]);
                }
            }
            RuleId::MIsect if maps_ok => {
                for a in 1..s {
                    push(vec![(Map, a), (Set, s - 1 - a)]);
                }
            }
            _ => {}
        }
    }
    out
}

/// Argument tuples for one step, drawing each argument from `get(category,
/// size)`. A symmetric rule over two equal slots takes each unordered pair
/// once.
pub fn arg_tuples<'a, T: Clone + 'a>(step: &Step, get: impl Fn((Category, usize)) -> &'a [T]) -> Vec<Vec<T>> {
    match step.args.as_slice() {
        [a] => get(*a).iter().map(|x| vec![x.clone()]).collect(),
        [a, b] => {
            let (xs, ys) = (get(*a), get(*b));
            let same = step.rule.symmetric() && a == b;
            let mut out = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                for y in &ys[if same { i } else { 0 }..] {
                    out.push(vec![x.clone(), y.clone()]);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

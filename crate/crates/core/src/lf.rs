//! Lambda DCS logical forms: the AST, its size metric, and the canonical
//! prefix-notation text format.
//!
//! Grammar of the canonical text:
//!
//! ```text
//! form     := set | rel | map
//! set      := "(entity" STRING ")" | "(number" NUM ")" | "(date" DATE ")"
//!           | "(all-rows)"
//!           | "(join" rel set ")"
//!           | "(and" set set ")" | "(or" set set ")" | "(sub" set set ")"
//!           | "(" ("count"|"max"|"min"|"sum") set ")"
//!           | "(" ("argmax"|"argmin") map ")"
//! rel      := COLUMN | STRING | "@next" | "@index" | "@number" | "@num2"
//!           | "@date" | "@part" | "@<" | "@>" | "@<=" | "@>=" | "@!="
//!           | "(reverse" rel ")"
//! map      := "(map" set chain ")"
//! chain    := "x" | "(join" rel chain ")" | "(and" chain set ")"
//!           | "(count" chain ")"
//! ```
//!
//! `COLUMN` is a bare identifier; column names that are not identifiers are
//! written as quoted strings. The two arguments of `and`/`or` at set level are
//! stored in sorted order, so commuted forms print identically.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::value::{quote, unquote_prefix, Value};
use crate::world::{column_token, BuiltIn, EdgeLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Set,
    Rel,
    Map,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Set => "Set",
            Category::Rel => "Rel",
            Category::Map => "Map",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompareOp {
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl CompareOp {
    pub const ALL: [CompareOp; 5] = [CompareOp::Lt, CompareOp::Gt, CompareOp::Le, CompareOp::Ge, CompareOp::Ne];

    fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "@<",
            CompareOp::Gt => "@>",
            CompareOp::Le => "@<=",
            CompareOp::Ge => "@>=",
            CompareOp::Ne => "@!=",
        }
    }

    fn flipped(self) -> CompareOp {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Ge => CompareOp::Le,
            CompareOp::Ne => CompareOp::Ne,
        }
    }
}

/// A binary relation: a stored edge set (possibly traversed backwards) or an
/// intensional comparison.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Edge { label: EdgeLabel, reversed: bool },
    Compare(CompareOp),
}

impl Relation {
    pub fn column(name: &str) -> Relation {
        Relation::Edge { label: EdgeLabel::Column(Arc::from(name)), reversed: false }
    }

    pub fn builtin(b: BuiltIn) -> Relation {
        Relation::Edge { label: EdgeLabel::BuiltIn(b), reversed: false }
    }

    /// `R[r]`. Reversing twice gives back `r`; a reversed comparison is the
    /// flipped comparison.
    pub fn reverse(&self) -> Relation {
        match self {
            Relation::Edge { label, reversed } => Relation::Edge { label: label.clone(), reversed: !reversed },
            Relation::Compare(op) => Relation::Compare(op.flipped()),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Edge { label, reversed: false } => write!(f, "{label}"),
            Relation::Edge { label, reversed: true } => write!(f, "(reverse {label})"),
            Relation::Compare(op) => f.write_str(op.symbol()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggOp {
    Count,
    Max,
    Min,
    Sum,
}

impl AggOp {
    pub const ALL: [AggOp; 4] = [AggOp::Count, AggOp::Max, AggOp::Min, AggOp::Sum];

    pub fn name(self) -> &'static str {
        match self {
            AggOp::Count => "count",
            AggOp::Max => "max",
            AggOp::Min => "min",
            AggOp::Sum => "sum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SupOp {
    Argmax,
    Argmin,
}

impl SupOp {
    pub fn name(self) -> &'static str {
        match self {
            SupOp::Argmax => "argmax",
            SupOp::Argmin => "argmin",
        }
    }
}

/// The binary half of a Map: a composition applied to the variable `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chain {
    Var,
    Join(Relation, Arc<Chain>),
    Intersect(Arc<Chain>, Arc<LogicalForm>),
    Count(Arc<Chain>),
}

impl Chain {
    pub fn size(&self) -> usize {
        match self {
            Chain::Var => 0,
            Chain::Join(_, c) | Chain::Count(c) => c.size() + 1,
            Chain::Intersect(c, s) => c.size() + s.size() + 1,
        }
    }
}

/// A pair `(u, b)` of a unary set and a chain over `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MapForm {
    pub unary: Arc<LogicalForm>,
    pub chain: Arc<Chain>,
}

impl MapForm {
    pub fn new(unary: LogicalForm, chain: Chain) -> MapForm {
        MapForm { unary: Arc::new(unary), chain: Arc::new(chain) }
    }

    /// The M1 rule adds one, plus whatever the chain steps cost.
    pub fn size(&self) -> usize {
        self.unary.size() + 1 + self.chain.size()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogicalForm {
    Entity(Value),
    AllRows,
    Rel(Relation),
    Join(Relation, Arc<LogicalForm>),
    Intersect(Arc<LogicalForm>, Arc<LogicalForm>),
    /// Union of two entity literals.
    Union(Arc<LogicalForm>, Arc<LogicalForm>),
    Aggregate(AggOp, Arc<LogicalForm>),
    Superlative(SupOp, Arc<MapForm>),
    Sub(Arc<LogicalForm>, Arc<LogicalForm>),
    Map(Arc<MapForm>),
}

fn sorted(a: LogicalForm, b: LogicalForm) -> (Arc<LogicalForm>, Arc<LogicalForm>) {
    if a <= b {
        (Arc::new(a), Arc::new(b))
    } else {
        (Arc::new(b), Arc::new(a))
    }
}

impl LogicalForm {
    pub fn join(rel: Relation, arg: LogicalForm) -> LogicalForm {
        LogicalForm::Join(rel, Arc::new(arg))
    }

    pub fn intersect(a: LogicalForm, b: LogicalForm) -> LogicalForm {
        let (a, b) = sorted(a, b);
        LogicalForm::Intersect(a, b)
    }

    pub fn union(a: LogicalForm, b: LogicalForm) -> LogicalForm {
        let (a, b) = sorted(a, b);
        LogicalForm::Union(a, b)
    }

    pub fn aggregate(op: AggOp, arg: LogicalForm) -> LogicalForm {
        LogicalForm::Aggregate(op, Arc::new(arg))
    }

    pub fn superlative(op: SupOp, map: MapForm) -> LogicalForm {
        LogicalForm::Superlative(op, Arc::new(map))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: LogicalForm, b: LogicalForm) -> LogicalForm {
        LogicalForm::Sub(Arc::new(a), Arc::new(b))
    }

    pub fn map(m: MapForm) -> LogicalForm {
        LogicalForm::Map(Arc::new(m))
    }

    pub fn category(&self) -> Category {
        match self {
            LogicalForm::Rel(_) => Category::Rel,
            LogicalForm::Map(_) => Category::Map,
            _ => Category::Set,
        }
    }

    /// Base forms have size 0; each compositional step adds 1.
    pub fn size(&self) -> usize {
        match self {
            LogicalForm::Entity(_) | LogicalForm::AllRows | LogicalForm::Rel(_) => 0,
            LogicalForm::Join(_, a) | LogicalForm::Aggregate(_, a) => a.size() + 1,
            LogicalForm::Intersect(a, b) | LogicalForm::Union(a, b) | LogicalForm::Sub(a, b) => {
                a.size() + b.size() + 1
            }
            LogicalForm::Superlative(_, m) => m.size() + 1,
            LogicalForm::Map(m) => m.size(),
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, LogicalForm::Entity(_))
    }

    pub fn canonical_string(&self) -> String {
        self.to_string()
    }
}

pub fn canonical_string(z: &LogicalForm) -> String {
    z.to_string()
}

fn write_value_literal(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Entity(s) => write!(f, "(entity {})", quote(s)),
        Value::Number(_) => write!(f, "(number {v})"),
        Value::Date(_) => write!(f, "(date {v})"),
        Value::Row(i) => write!(f, "(row {i})"),
    }
}

impl serde::Serialize for LogicalForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical_string())
    }
}

impl<'de> serde::Deserialize<'de> for LogicalForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<LogicalForm, D::Error> {
        let text = String::deserialize(d)?;
        parse_form(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalForm::Entity(v) => write_value_literal(f, v),
            LogicalForm::AllRows => f.write_str("(all-rows)"),
            LogicalForm::Rel(r) => write!(f, "{r}"),
            LogicalForm::Join(r, a) => write!(f, "(join {r} {a})"),
            LogicalForm::Intersect(a, b) => write!(f, "(and {a} {b})"),
            LogicalForm::Union(a, b) => write!(f, "(or {a} {b})"),
            LogicalForm::Aggregate(op, a) => write!(f, "({} {a})", op.name()),
            LogicalForm::Superlative(op, m) => write!(f, "({} {m})", op.name()),
            LogicalForm::Sub(a, b) => write!(f, "(sub {a} {b})"),
            LogicalForm::Map(m) => write!(f, "{m}"),
        }
    }
}

impl fmt::Display for MapForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(map {} {})", self.unary, self.chain)
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chain::Var => f.write_char('x'),
            Chain::Join(r, c) => write!(f, "(join {r} {c})"),
            Chain::Intersect(c, s) => write!(f, "(and {c} {s})"),
            Chain::Count(c) => write!(f, "(count {c})"),
        }
    }
}

/// Bare column tokens that would be read as something else.
pub(crate) fn is_reserved_word(name: &str) -> bool {
    name == "x"
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug)]
enum Sexp {
    Atom(String, usize),
    Str(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn parse_err<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { pos, msg: msg.into() })
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_ws();
        let start = self.pos;
        match self.text[self.pos..].chars().next() {
            None => parse_err(start, "unexpected end of input"),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.text[self.pos..].chars().next() {
                        None => return parse_err(start, "unclosed `(`"),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => parse_err(start, "unexpected `)`"),
            Some('"') => match unquote_prefix(&self.text[self.pos + 1..]) {
                Some((s, used)) => {
                    self.pos += 1 + used;
                    Ok(Sexp::Str(s, start))
                }
                None => parse_err(start, "unterminated string"),
            },
            Some(_) => {
                let rest = &self.text[self.pos..];
                let len = rest.find(|c: char| c.is_whitespace() || c == '(' || c == ')').unwrap_or(rest.len());
                self.pos += len;
                Ok(Sexp::Atom(rest[..len].to_string(), start))
            }
        }
    }
}

/// Parses canonical text back into a form.
pub fn parse_form(text: &str) -> Result<LogicalForm> {
    let mut r = Reader { text, pos: 0 };
    let sexp = r.read()?;
    r.skip_ws();
    if r.pos != text.len() {
        return parse_err(r.pos, "trailing input");
    }
    match &sexp {
        Sexp::Atom(..) | Sexp::Str(..) => Ok(LogicalForm::Rel(to_relation(&sexp)?)),
        Sexp::List(items, _) => match items.first() {
            Some(Sexp::Atom(head, _)) if head == "reverse" => Ok(LogicalForm::Rel(to_relation(&sexp)?)),
            Some(Sexp::Atom(head, _)) if head == "map" => Ok(LogicalForm::map(to_map(&sexp)?)),
            _ => to_set(&sexp),
        },
    }
}

pub fn parse_map(text: &str) -> Result<MapForm> {
    match parse_form(text)? {
        LogicalForm::Map(m) => Ok((*m).clone()),
        _ => parse_err(0, "expected a map form"),
    }
}

fn to_relation(s: &Sexp) -> Result<Relation> {
    match s {
        Sexp::Str(name, _) => Ok(Relation::column(name)),
        Sexp::Atom(a, pos) => {
            if let Some(b) = BuiltIn::from_keyword(a) {
                return Ok(Relation::builtin(b));
            }
            if let Some(op) = CompareOp::ALL.into_iter().find(|op| op.symbol() == a) {
                return Ok(Relation::Compare(op));
            }
            if a.starts_with('@') || is_reserved_word(a) {
                return parse_err(*pos, format!("unknown relation `{a}`"));
            }
            Ok(Relation::column(a))
        }
        Sexp::List(items, pos) => match items.as_slice() {
            [Sexp::Atom(h, _), inner] if h == "reverse" => Ok(to_relation(inner)?.reverse()),
            _ => parse_err(*pos, "expected a relation"),
        },
    }
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<(&'a str, &'a [Sexp], usize)> {
    match s {
        Sexp::List(items, pos) => match items.split_first() {
            Some((Sexp::Atom(h, _), rest)) => Ok((h.as_str(), rest, *pos)),
            _ => parse_err(*pos, format!("expected {what}")),
        },
        other => parse_err(other.pos(), format!("expected {what}")),
    }
}

fn arity(args: &[Sexp], n: usize, head: &str, pos: usize) -> Result<()> {
    if args.len() != n {
        return parse_err(pos, format!("`{head}` takes {n} argument(s), got {}", args.len()));
    }
    Ok(())
}

fn atom(s: &Sexp) -> Result<&str> {
    match s {
        Sexp::Atom(a, _) => Ok(a),
        other => parse_err(other.pos(), "expected an atom"),
    }
}

fn to_set(s: &Sexp) -> Result<LogicalForm> {
    let (head, args, pos) = list(s, "a set form")?;
    let agg = AggOp::ALL.into_iter().find(|op| op.name() == head);
    match head {
        "entity" => {
            arity(args, 1, head, pos)?;
            match &args[0] {
                Sexp::Str(v, _) => Ok(LogicalForm::Entity(Value::entity(v))),
                other => parse_err(other.pos(), "entity takes a quoted string"),
            }
        }
        "number" | "date" | "row" => {
            arity(args, 1, head, pos)?;
            let text = atom(&args[0])?;
            let v = match head {
                "row" => format!("r{text}"),
                _ => text.to_string(),
            };
            match (head, Value::parse_canonical(&v)) {
                ("number", Some(v @ Value::Number(_)))
                | ("date", Some(v @ Value::Date(_)))
                | ("row", Some(v @ Value::Row(_))) => Ok(LogicalForm::Entity(v)),
                _ => parse_err(args[0].pos(), format!("bad {head} literal `{text}`")),
            }
        }
        "all-rows" => {
            arity(args, 0, head, pos)?;
            Ok(LogicalForm::AllRows)
        }
        "join" => {
            arity(args, 2, head, pos)?;
            Ok(LogicalForm::join(to_relation(&args[0])?, to_set(&args[1])?))
        }
        "and" | "or" | "sub" => {
            arity(args, 2, head, pos)?;
            let (a, b) = (to_set(&args[0])?, to_set(&args[1])?);
            Ok(match head {
                "and" => LogicalForm::intersect(a, b),
                "or" => LogicalForm::union(a, b),
                _ => LogicalForm::sub(a, b),
            })
        }
        "argmax" | "argmin" => {
            arity(args, 1, head, pos)?;
            let op = if head == "argmax" { SupOp::Argmax } else { SupOp::Argmin };
            Ok(LogicalForm::superlative(op, to_map(&args[0])?))
        }
        _ if agg.is_some() => {
            arity(args, 1, head, pos)?;
            Ok(LogicalForm::aggregate(agg.unwrap(), to_set(&args[0])?))
        }
        _ => parse_err(pos, format!("unknown operator `{head}`")),
    }
}

fn to_map(s: &Sexp) -> Result<MapForm> {
    let (head, args, pos) = list(s, "a map form")?;
    if head != "map" {
        return parse_err(pos, "expected `(map ...)`");
    }
    arity(args, 2, head, pos)?;
    Ok(MapForm::new(to_set(&args[0])?, to_chain(&args[1])?))
}

fn to_chain(s: &Sexp) -> Result<Chain> {
    if let Sexp::Atom(a, pos) = s {
        return if a == "x" { Ok(Chain::Var) } else { parse_err(*pos, "expected `x` or a chain") };
    }
    let (head, args, pos) = list(s, "a chain")?;
    match head {
        "join" => {
            arity(args, 2, head, pos)?;
            Ok(Chain::Join(to_relation(&args[0])?, Arc::new(to_chain(&args[1])?)))
        }
        "and" => {
            arity(args, 2, head, pos)?;
            Ok(Chain::Intersect(Arc::new(to_chain(&args[0])?), Arc::new(to_set(&args[1])?)))
        }
        "count" => {
            arity(args, 1, head, pos)?;
            Ok(Chain::Count(Arc::new(to_chain(&args[0])?)))
        }
        _ => parse_err(pos, format!("unknown chain operator `{head}`")),
    }
}

/// Shorthand used in tests and docs: `Column.entity`.
pub fn column_join(column: &str, entity: &str) -> LogicalForm {
    LogicalForm::join(Relation::column(column), LogicalForm::Entity(Value::entity(entity)))
}

/// Renders a column name the way the canonical format does.
pub fn relation_token(name: &str) -> String {
    column_token(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn join_serialization() {
        assert_eq!(column_join("Position", "1st").canonical_string(), r#"(join Position (entity "1st"))"#);
    }

    #[test]
    fn intersect_is_commutative_in_text() {
        let a = column_join("Position", "1st");
        let b = column_join("Event", "relay");
        assert_eq!(
            LogicalForm::intersect(a.clone(), b.clone()).canonical_string(),
            LogicalForm::intersect(b, a).canonical_string()
        );
    }

    #[test]
    fn sizes() {
        assert_eq!(LogicalForm::Entity(Value::entity("1st")).size(), 0);
        assert_eq!(column_join("Position", "1st").size(), 1);
        let number_1 = LogicalForm::join(Relation::builtin(BuiltIn::Number), LogicalForm::Entity(Value::number(1.0)));
        assert_eq!(LogicalForm::join(Relation::column("Position"), number_1).size(), 2);
        let m = MapForm::new(
            column_join("Position", "1st"),
            Chain::Join(Relation::builtin(BuiltIn::Index).reverse(), Arc::new(Chain::Var)),
        );
        let z1 = LogicalForm::superlative(SupOp::Argmax, m);
        assert_eq!(z1.size(), 4);
        assert_eq!(LogicalForm::join(Relation::column("Venue").reverse(), z1).size(), 5);
    }

    #[test]
    fn reverse_is_an_involution() {
        let r = Relation::column("Venue");
        assert_eq!(r.reverse().reverse(), r);
        assert_eq!(Relation::Compare(CompareOp::Lt).reverse(), Relation::Compare(CompareOp::Gt));
    }

    #[test]
    fn quoted_columns_and_errors() {
        let z = LogicalForm::join(Relation::column("Points scored"), LogicalForm::AllRows);
        assert_eq!(z.canonical_string(), r#"(join "Points scored" (all-rows))"#);
        assert_eq!(parse_form(&z.canonical_string()).unwrap(), z);
        let x_col = LogicalForm::join(Relation::column("x"), LogicalForm::AllRows);
        assert_eq!(parse_form(&x_col.canonical_string()).unwrap(), x_col);
        assert!(matches!(parse_form("(join Position"), Err(Error::Parse { .. })));
        assert!(matches!(parse_form("(frob x)"), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(parse_form("(count (all-rows)) extra"), Err(Error::Parse { pos: 19, .. })));
    }

    fn arb_relation() -> impl Strategy<Value = Relation> {
        let base = prop_oneof![
            prop::sample::select(vec!["Year", "Venue", "Position", "Points scored", "x"]).prop_map(Relation::column),
            prop::sample::select(BuiltIn::ALL.to_vec()).prop_map(Relation::builtin),
            prop::sample::select(CompareOp::ALL.to_vec()).prop_map(Relation::Compare),
        ];
        (base, any::<bool>()).prop_map(|(r, rev)| if rev { r.reverse() } else { r })
    }

    fn arb_literal() -> impl Strategy<Value = LogicalForm> {
        prop_oneof![
            "[a-z \"\\\\]{0,6}".prop_map(|s| LogicalForm::Entity(Value::entity(&s))),
            (-50i32..3000).prop_map(|n| LogicalForm::Entity(Value::number(n as f64 / 4.0))),
            (proptest::option::of(1900i32..2100), proptest::option::of(1u8..=12), 1u8..=28).prop_map(|(y, m, d)| {
                LogicalForm::Entity(Value::Date(crate::value::Date::new(y, m, Some(d)).unwrap()))
            }),
            Just(LogicalForm::AllRows),
        ]
    }

    fn arb_chain(set: BoxedStrategy<LogicalForm>) -> impl Strategy<Value = Chain> {
        Just(Chain::Var).prop_recursive(3, 8, 2, move |inner| {
            prop_oneof![
                (arb_relation(), inner.clone()).prop_map(|(r, c)| Chain::Join(r, Arc::new(c))),
                (inner.clone(), set.clone()).prop_map(|(c, s)| Chain::Intersect(Arc::new(c), Arc::new(s))),
                inner.prop_map(|c| Chain::Count(Arc::new(c))),
            ]
        })
    }

    fn arb_set() -> BoxedStrategy<LogicalForm> {
        arb_literal()
            .prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    (arb_relation(), inner.clone()).prop_map(|(r, s)| LogicalForm::join(r, s)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| LogicalForm::intersect(a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| LogicalForm::union(a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| LogicalForm::sub(a, b)),
                    (prop::sample::select(AggOp::ALL.to_vec()), inner.clone())
                        .prop_map(|(op, s)| LogicalForm::aggregate(op, s)),
                    (any::<bool>(), inner.clone(), arb_chain(inner.clone().boxed())).prop_map(|(max, u, c)| {
                        let op = if max { SupOp::Argmax } else { SupOp::Argmin };
                        LogicalForm::superlative(op, MapForm::new(u, c))
                    }),
                ]
            })
            .boxed()
    }

    fn arb_form() -> impl Strategy<Value = LogicalForm> {
        prop_oneof![
            4 => arb_set(),
            1 => arb_relation().prop_map(LogicalForm::Rel),
            1 => (arb_set(), arb_chain(arb_set())).prop_map(|(u, c)| LogicalForm::map(MapForm::new(u, c))),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn canonical_text_round_trips(z in arb_form()) {
            let text = z.canonical_string();
            let back = parse_form(&text).unwrap();
            prop_assert_eq!(&back, &z);
            prop_assert_eq!(back.canonical_string(), text);
        }
    }
}

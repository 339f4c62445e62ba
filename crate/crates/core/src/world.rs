//! The graph view of a table: row, cell and value nodes joined by labeled
//! edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::normalize::{normalize_cell, normalize_entity};
use crate::table::Table;
use crate::value::{Value, ValueKind, ValueSet};

/// Relations every world carries besides its columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuiltIn {
    Next,
    Index,
    Number,
    Num2,
    Date,
    Part,
}

impl BuiltIn {
    pub const ALL: [BuiltIn; 6] =
        [BuiltIn::Next, BuiltIn::Index, BuiltIn::Number, BuiltIn::Num2, BuiltIn::Date, BuiltIn::Part];

    pub fn keyword(self) -> &'static str {
        match self {
            BuiltIn::Next => "@next",
            BuiltIn::Index => "@index",
            BuiltIn::Number => "@number",
            BuiltIn::Num2 => "@num2",
            BuiltIn::Date => "@date",
            BuiltIn::Part => "@part",
        }
    }

    pub fn from_keyword(s: &str) -> Option<BuiltIn> {
        BuiltIn::ALL.into_iter().find(|b| b.keyword() == s)
    }
}

/// Name of a stored edge set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Column(Arc<str>),
    BuiltIn(BuiltIn),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Column(name) => f.write_str(&column_token(name)),
            EdgeLabel::BuiltIn(b) => f.write_str(b.keyword()),
        }
    }
}

/// Column names print bare when they look like identifiers and are quoted
/// otherwise, so they never collide with `@` keywords or punctuation.
pub fn column_token(name: &str) -> String {
    let bare = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !crate::lf::is_reserved_word(name);
    if bare {
        name.to_string()
    } else {
        crate::value::quote(name)
    }
}

#[derive(Clone, Debug, Default)]
struct Edges {
    pairs: BTreeSet<(Value, Value)>,
    forward: HashMap<Value, Vec<Value>>,
    backward: HashMap<Value, Vec<Value>>,
}

impl Edges {
    fn insert(&mut self, src: Value, dst: Value) {
        if self.pairs.insert((src.clone(), dst.clone())) {
            self.forward.entry(src.clone()).or_default().push(dst.clone());
            self.backward.entry(dst).or_default().push(src);
        }
    }
}

/// Immutable knowledge graph built from a [`Table`].
#[derive(Clone, Debug)]
pub struct World {
    table: Arc<Table>,
    nodes: BTreeSet<Value>,
    edges: BTreeMap<EdgeLabel, Edges>,
    by_kind: HashMap<ValueKind, ValueSet>,
}

impl World {
    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn source_id(&self) -> &str {
        &self.table.id
    }

    pub fn num_rows(&self) -> usize {
        self.table.num_rows()
    }

    pub fn columns(&self) -> &[String] {
        &self.table.columns
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.edges.contains_key(&EdgeLabel::Column(Arc::from(name)))
    }

    pub fn nodes(&self) -> &BTreeSet<Value> {
        &self.nodes
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.nodes.contains(v)
    }

    /// All nodes of one kind.
    pub fn nodes_of_kind(&self, kind: ValueKind) -> &ValueSet {
        static EMPTY: ValueSet = ValueSet::empty();
        self.by_kind.get(&kind).unwrap_or(&EMPTY)
    }

    pub fn all_rows(&self) -> ValueSet {
        (0..self.num_rows() as u32).map(Value::Row).collect()
    }

    pub fn has_label(&self, label: &EdgeLabel) -> bool {
        self.edges.contains_key(label)
    }

    /// Sources with an edge into `targets`. `None` when the label is unknown.
    pub fn preimage(&self, label: &EdgeLabel, targets: &ValueSet) -> Option<ValueSet> {
        let edges = self.edges.get(label)?;
        Some(targets.iter().filter_map(|t| edges.backward.get(t)).flatten().cloned().collect())
    }

    /// Targets reachable from `sources`. `None` when the label is unknown.
    pub fn image(&self, label: &EdgeLabel, sources: &ValueSet) -> Option<ValueSet> {
        let edges = self.edges.get(label)?;
        Some(sources.iter().filter_map(|s| edges.forward.get(s)).flatten().cloned().collect())
    }

    pub fn edge_pairs(&self, label: &EdgeLabel) -> Option<&BTreeSet<(Value, Value)>> {
        self.edges.get(label).map(|e| &e.pairs)
    }

    pub fn labels(&self) -> impl Iterator<Item = &EdgeLabel> {
        self.edges.keys()
    }

    /// One `REL <name> <src> <dst>` line per edge, sorted.
    pub fn export_edges(&self) -> String {
        let mut out = String::new();
        for (label, edges) in &self.edges {
            for (s, d) in &edges.pairs {
                out.push_str(&format!("REL {label} {s} {d}\n"));
            }
        }
        out
    }
}

/// The nodes one cell text contributes: its entity, and any number, second
/// number, date and part values derived from it.
pub fn cell_values(text: &str) -> Vec<Value> {
    let norm = normalize_cell(text);
    let mut out = vec![Value::entity(&normalize_entity(text))];
    out.extend(norm.number.map(Value::number));
    out.extend(norm.num2.map(Value::number));
    out.extend(norm.date.map(Value::Date));
    out.extend(norm.parts.iter().map(|p| Value::entity(p)));
    out
}

/// Builds the graph for a table: row nodes `r_0..r_{n-1}`, one cell node per
/// distinct normalized cell string, column edges, `Next`, `Index`, and the
/// `Number`/`Num2`/`Date`/`Part` normalization edges.
pub fn build_world(table: &Table) -> World {
    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<EdgeLabel, Edges> = BTreeMap::new();
    for b in BuiltIn::ALL {
        edges.insert(EdgeLabel::BuiltIn(b), Edges::default());
    }
    let n = table.num_rows();
    for i in 0..n {
        let row = Value::Row(i as u32);
        nodes.insert(row.clone());
        let idx = Value::number(i as f64);
        nodes.insert(idx.clone());
        edges.get_mut(&EdgeLabel::BuiltIn(BuiltIn::Index)).unwrap().insert(row.clone(), idx);
        if i + 1 < n {
            edges
                .get_mut(&EdgeLabel::BuiltIn(BuiltIn::Next))
                .unwrap()
                .insert(row, Value::Row(i as u32 + 1));
        }
    }
    let mut normalized_cells = BTreeMap::new();
    for (j, column) in table.columns.iter().enumerate() {
        let label = EdgeLabel::Column(Arc::from(column.as_str()));
        let col_edges = edges.entry(label).or_default();
        for (i, text) in table.column(j).enumerate() {
            let cell = Value::entity(&normalize_entity(text));
            nodes.insert(cell.clone());
            col_edges.insert(Value::Row(i as u32), cell.clone());
            normalized_cells.entry(cell).or_insert_with(|| normalize_cell(text));
        }
    }
    for (cell, norm) in normalized_cells {
        let mut add = |b: BuiltIn, v: Value| {
            nodes.insert(v.clone());
            edges.get_mut(&EdgeLabel::BuiltIn(b)).unwrap().insert(cell.clone(), v);
        };
        if let Some(x) = norm.number {
            add(BuiltIn::Number, Value::number(x));
        }
        if let Some(x) = norm.num2 {
            add(BuiltIn::Num2, Value::number(x));
        }
        if let Some(d) = norm.date {
            add(BuiltIn::Date, Value::Date(d));
        }
        for part in norm.parts {
            add(BuiltIn::Part, Value::entity(&part));
        }
    }
    let mut by_kind: HashMap<ValueKind, Vec<Value>> = HashMap::new();
    for v in &nodes {
        by_kind.entry(v.kind()).or_default().push(v.clone());
    }
    let by_kind = by_kind.into_iter().map(|(k, vs)| (k, vs.into_iter().collect())).collect();
    World { table: Arc::new(table.clone()), nodes, edges, by_kind }
}

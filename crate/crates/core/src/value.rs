//! Values living in a world graph, and the sorted value sets that denotations
//! are built from.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use ordered_float::OrderedFloat;

/// A (possibly partial) calendar date. At least one component is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date {
    pub year: Option<i32>,
    pub month: Option<u8>,
    pub day: Option<u8>,
}

impl Date {
    /// Returns `None` when every component is unknown.
    pub fn new(year: Option<i32>, month: Option<u8>, day: Option<u8>) -> Option<Date> {
        if year.is_none() && month.is_none() && day.is_none() {
            return None;
        }
        Some(Date { year, month, day })
    }

    fn known_mask(&self) -> (bool, bool, bool) {
        (self.year.is_some(), self.month.is_some(), self.day.is_some())
    }

    /// Dates compare only when they know exactly the same components.
    pub fn partial_cmp_date(&self, other: &Date) -> Option<Ordering> {
        if self.known_mask() != other.known_mask() {
            return None;
        }
        Some(self.cmp(other))
    }

    pub fn is_complete(&self) -> bool {
        self.year.is_some() && self.month.is_some() && self.day.is_some()
    }

    /// Days since 1970-01-01 for fully known dates.
    pub fn days_from_epoch(&self) -> Option<i64> {
        let (y, m, d) = (self.year? as i64, self.month? as i64, self.day? as i64);
        // civil-to-days, proleptic Gregorian
        let y = if m <= 2 { y - 1 } else { y };
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let mp = (m + 9) % 12;
        let doy = (153 * mp + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        Some(era * 146_097 + doe - 719_468)
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.year {
            Some(y) => write!(f, "{y:04}")?,
            None => f.write_str("XX")?,
        }
        for part in [self.month, self.day] {
            match part {
                Some(v) => write!(f, "-{v:02}")?,
                None => f.write_str("-XX")?,
            }
        }
        Ok(())
    }
}

/// Coarse value kind, used for type checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueKind {
    Row,
    Entity,
    Number,
    Date,
}

/// A node of the world graph. Variant order fixes the canonical sort order
/// (kind first, then payload).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Row(u32),
    Entity(Arc<str>),
    Number(OrderedFloat<f64>),
    Date(Date),
}

impl Value {
    pub fn entity(s: &str) -> Value {
        Value::Entity(Arc::from(s))
    }

    pub fn number(x: f64) -> Value {
        // fold -0 into 0 so equal numbers hash equally
        Value::Number(OrderedFloat(if x == 0.0 { 0.0 } else { x }))
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Row(_) => ValueKind::Row,
            Value::Entity(_) => ValueKind::Entity,
            Value::Number(_) => ValueKind::Number,
            Value::Date(_) => ValueKind::Date,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(n.0),
            _ => None,
        }
    }

    /// Canonical text: `r<i>` for rows, shortest round-trip decimal for
    /// numbers, `Y-M-D` with `XX` for unknown date parts, and a quoted string
    /// for entities.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Inverse of [`Value::canonical`].
    pub fn parse_canonical(text: &str) -> Option<Value> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('"') {
            return unquote(rest).map(|s| Value::entity(&s));
        }
        if let Some(idx) = text.strip_prefix('r') {
            if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
                return idx.parse().ok().map(Value::Row);
            }
            return None;
        }
        if let Some(date) = parse_canonical_date(text) {
            return Some(Value::Date(date));
        }
        let x: f64 = text.parse().ok()?;
        x.is_finite().then(|| Value::number(x))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Row(i) => write!(f, "r{i}"),
            Value::Entity(s) => f.write_str(&quote(s)),
            Value::Number(n) => f.write_str(&format_number(n.0)),
            Value::Date(d) => write!(f, "{d}"),
        }
    }
}

impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical())
    }
}

impl<'de> serde::Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Value, D::Error> {
        let text = String::deserialize(d)?;
        Value::parse_canonical(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("not a canonical value: {text}")))
    }
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x}")
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Reads a quoted string body (after the opening quote) up to its closing
/// quote. Returns `None` on a missing terminator or trailing garbage.
fn unquote(rest: &str) -> Option<String> {
    let (s, used) = unquote_prefix(rest)?;
    (used == rest.len()).then_some(s)
}

/// Reads a quoted string body and reports how many bytes were consumed,
/// including the closing quote.
pub(crate) fn unquote_prefix(rest: &str) -> Option<(String, usize)> {
    let mut out = String::new();
    let mut chars = rest.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Some((out, i + 1)),
            '\\' => match chars.next()?.1 {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                other => out.push(other),
            },
            c => out.push(c),
        }
    }
    None
}

fn parse_canonical_date(text: &str) -> Option<Date> {
    let parts: Vec<&str> = text.split('-').collect();
    if parts.len() != 3 {
        return None;
    }
    let year = match parts[0] {
        "XX" => None,
        y if y.len() == 4 && y.bytes().all(|b| b.is_ascii_digit()) => Some(y.parse().ok()?),
        _ => return None,
    };
    let mut md = [None, None];
    for (slot, p) in md.iter_mut().zip(&parts[1..]) {
        *slot = match *p {
            "XX" => None,
            v if v.len() == 2 && v.bytes().all(|b| b.is_ascii_digit()) => Some(v.parse().ok()?),
            _ => return None,
        };
    }
    Date::new(year, md[0], md[1])
}

/// A finite set of values kept sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueSet(Vec<Value>);

impl ValueSet {
    pub const fn empty() -> ValueSet {
        ValueSet(Vec::new())
    }

    pub fn singleton(v: Value) -> ValueSet {
        ValueSet(vec![v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.0.binary_search(v).is_ok()
    }

    /// The single element, if there is exactly one.
    pub fn single(&self) -> Option<&Value> {
        match self.0.as_slice() {
            [v] => Some(v),
            _ => None,
        }
    }

    pub fn intersect(&self, other: &ValueSet) -> ValueSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push(self.0[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        ValueSet(out)
    }

    pub fn union(&self, other: &ValueSet) -> ValueSet {
        self.0.iter().chain(other.0.iter()).cloned().collect()
    }

    /// The kind shared by every element, or `None` for empty or mixed sets.
    pub fn uniform_kind(&self) -> Option<ValueKind> {
        let first = self.0.first()?.kind();
        self.0.iter().all(|v| v.kind() == first).then_some(first)
    }

    /// Bitmask of the kinds present, one bit per [`ValueKind`].
    pub fn kind_mask(&self) -> u8 {
        self.0.iter().fold(0, |m, v| m | (1 << v.kind() as u8))
    }
}

impl FromIterator<Value> for ValueSet {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut v: Vec<Value> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ValueSet(v)
    }
}

impl<'a> IntoIterator for &'a ValueSet {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for ValueSet {
    type Item = Value;
    type IntoIter = std::vec::IntoIter<Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

//! Denotations and their canonical JSON form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{Value, ValueSet};

/// Why execution failed. Errors are absorbing: any failing subexpression
/// makes the whole form fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorTag {
    Type,
    NonSingleton,
    Empty,
    UnknownRelation,
}

impl ErrorTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorTag::Type => "type",
            ErrorTag::NonSingleton => "nonsingleton",
            ErrorTag::Empty => "empty",
            ErrorTag::UnknownRelation => "unknown-relation",
        }
    }

    fn parse(s: &str) -> Option<ErrorTag> {
        [ErrorTag::Type, ErrorTag::NonSingleton, ErrorTag::Empty, ErrorTag::UnknownRelation]
            .into_iter()
            .find(|t| t.as_str() == s)
    }
}

impl fmt::Display for ErrorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A unary set together with each element's image under a binary; the key
/// set always equals the unary's denotation.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MapDenotation(Vec<(Value, ValueSet)>);

impl MapDenotation {
    /// Pairs must not repeat keys; they are sorted here.
    pub fn from_pairs(mut pairs: Vec<(Value, ValueSet)>) -> MapDenotation {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        MapDenotation(pairs)
    }

    pub fn pairs(&self) -> &[(Value, ValueSet)] {
        &self.0
    }

    pub fn keys(&self) -> ValueSet {
        self.0.iter().map(|(k, _)| k.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies `f` to every image, keeping keys.
    pub fn try_map_images<E>(&self, mut f: impl FnMut(&ValueSet) -> Result<ValueSet, E>) -> Result<MapDenotation, E> {
        let pairs = self
            .0
            .iter()
            .map(|(k, img)| Ok((k.clone(), f(img)?)))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(MapDenotation(pairs))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Denotation {
    Set(ValueSet),
    Map(MapDenotation),
    Error(ErrorTag),
}

impl Denotation {
    pub fn as_set(&self) -> Option<&ValueSet> {
        match self {
            Denotation::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&MapDenotation> {
        match self {
            Denotation::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Denotation::Error(_))
    }

    /// `{"kind":"set","values":[...]}`, `{"kind":"map","pairs":[[k,[...]],...]}`
    /// or `{"kind":"error","reason":"..."}`, with canonically sorted arrays.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("denotations always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Denotation> {
        serde_json::from_str(text)
    }
}

impl From<ValueSet> for Denotation {
    fn from(s: ValueSet) -> Self {
        Denotation::Set(s)
    }
}

impl From<MapDenotation> for Denotation {
    fn from(m: MapDenotation) -> Self {
        Denotation::Map(m)
    }
}

impl fmt::Display for Denotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_json())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Repr {
    Set { values: Vec<Value> },
    Map { pairs: Vec<(Value, Vec<Value>)> },
    Error { reason: String },
}

impl Serialize for Denotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Denotation::Set(v) => Repr::Set { values: v.iter().cloned().collect() },
            Denotation::Map(m) => Repr::Map {
                pairs: m.pairs().iter().map(|(k, img)| (k.clone(), img.iter().cloned().collect())).collect(),
            },
            Denotation::Error(tag) => Repr::Error { reason: tag.as_str().to_string() },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Denotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Denotation, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Set { values } => Denotation::Set(values.into_iter().collect()),
            Repr::Map { pairs } => Denotation::Map(MapDenotation::from_pairs(
                pairs.into_iter().map(|(k, vs)| (k, vs.into_iter().collect())).collect(),
            )),
            Repr::Error { reason } => Denotation::Error(
                ErrorTag::parse(&reason).ok_or_else(|| serde::de::Error::custom(format!("unknown reason {reason}")))?,
            ),
        })
    }
}

//! Matching denotations against answer strings.

use serde::{Deserialize, Serialize};

use crate::denotation::Denotation;
use crate::error::{Error, Result};
use crate::normalize::{normalize_entity, parse_date, parse_number_exact};
use crate::value::{format_number, Value};

/// The expected answer `y` as a list of strings. A string stands for the
/// entity it normalizes to, and also for the number or date it spells when
/// it is nothing but one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Target {
    answers: Vec<String>,
}

fn accepts(answer: &str, v: &Value) -> bool {
    match v {
        Value::Entity(e) => **e == *normalize_entity(answer),
        Value::Number(x) => parse_number_exact(answer).is_some_and(|y| y == x.0),
        Value::Date(d) => parse_date(answer).is_some_and(|e| e == *d),
        Value::Row(_) => false,
    }
}

impl Target {
    pub fn new<S: AsRef<str>>(answers: &[S]) -> Result<Target> {
        let answers: Vec<String> = answers.iter().map(|a| a.as_ref().trim().to_string()).collect();
        if answers.is_empty() || answers.iter().any(String::is_empty) {
            return Err(Error::EmptyAnswer);
        }
        Ok(Target { answers })
    }

    pub fn answers(&self) -> &[String] {
        &self.answers
    }

    /// True when `d` is a set whose values pair off one-to-one with the
    /// answers.
    pub fn matches(&self, d: &Denotation) -> bool {
        let Some(set) = d.as_set() else { return false };
        if set.len() != self.answers.len() {
            return false;
        }
        let values = set.as_slice();
        let adj: Vec<Vec<usize>> =
            self.answers.iter().map(|a| (0..values.len()).filter(|&j| accepts(a, &values[j])).collect()).collect();
        let mut owner: Vec<Option<usize>> = vec![None; values.len()];
        (0..adj.len()).all(|i| augment(i, &adj, &mut owner, &mut vec![false; values.len()]))
    }
}

/// Answer strings that `d` would be annotated with, when its values can be
/// spelled so that the resulting target matches `d` again.
pub fn answer_strings(d: &Denotation) -> Option<Vec<String>> {
    let set = d.as_set()?;
    if set.is_empty() {
        return None;
    }
    let answers: Vec<String> = set
        .iter()
        .map(|v| match v {
            Value::Entity(e) => Some(e.to_string()),
            Value::Number(x) => Some(format_number(x.0)),
            Value::Date(dt) => Some(match (dt.year, dt.month, dt.day) {
                (Some(y), None, None) => format!("{y:04}"),
                (Some(y), Some(m), Some(day)) => format!("{y:04}-{m}-{day}"),
                (None, Some(m), Some(day)) => format!("{m}-{day}"),
                _ => return None,
            }),
            Value::Row(_) => None,
        })
        .collect::<Option<_>>()?;
    Target::new(&answers).ok().filter(|t| t.matches(d)).map(|_| answers)
}

fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &adj[i] {
        if !seen[j] {
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, owner, seen)) {
                owner[j] = Some(i);
                return true;
            }
        }
    }
    false
}

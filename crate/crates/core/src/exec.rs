//! Executing logical forms against a world.
//!
//! The set-level operations are public so the chart builder can combine
//! denotations directly without re-executing whole forms.

use std::cmp::Ordering;

use crate::denotation::{Denotation, ErrorTag, MapDenotation};
use crate::lf::{AggOp, Chain, CompareOp, LogicalForm, MapForm, Relation, SupOp};
use crate::value::{Date, Value, ValueKind, ValueSet};
use crate::world::World;

pub type OpResult<T> = Result<T, ErrorTag>;

/// Recursively evaluates `z` on `w`. Never panics; failures become
/// [`Denotation::Error`].
pub fn execute(z: &LogicalForm, w: &World) -> Denotation {
    match z {
        LogicalForm::Map(m) => execute_map(m, w),
        LogicalForm::Rel(_) => Denotation::Error(ErrorTag::Type),
        _ => match eval_set(z, w) {
            Ok(s) => Denotation::Set(s),
            Err(tag) => Denotation::Error(tag),
        },
    }
}

/// Evaluates the unary, then the chain once per element with `x := {e}`.
pub fn execute_map(m: &MapForm, w: &World) -> Denotation {
    match eval_map(m, w) {
        Ok(d) => Denotation::Map(d),
        Err(tag) => Denotation::Error(tag),
    }
}

fn eval_map(m: &MapForm, w: &World) -> OpResult<MapDenotation> {
    let unary = eval_set(&m.unary, w)?;
    let pairs = unary
        .iter()
        .map(|e| Ok((e.clone(), eval_chain(&m.chain, ValueSet::singleton(e.clone()), w)?)))
        .collect::<OpResult<Vec<_>>>()?;
    Ok(MapDenotation::from_pairs(pairs))
}

fn eval_chain(c: &Chain, x: ValueSet, w: &World) -> OpResult<ValueSet> {
    match c {
        Chain::Var => Ok(x),
        Chain::Join(r, inner) => join(w, r, &eval_chain(inner, x, w)?),
        Chain::Intersect(inner, s) => {
            let img = eval_chain(inner, x, w)?;
            Ok(img.intersect(&eval_set(s, w)?))
        }
        Chain::Count(inner) => Ok(count(&eval_chain(inner, x, w)?)),
    }
}

fn eval_set(z: &LogicalForm, w: &World) -> OpResult<ValueSet> {
    match z {
        LogicalForm::Entity(v) => Ok(ValueSet::singleton(v.clone())),
        LogicalForm::AllRows => Ok(w.all_rows()),
        LogicalForm::Join(r, arg) => join(w, r, &eval_set(arg, w)?),
        LogicalForm::Intersect(a, b) => {
            let a = eval_set(a, w)?;
            Ok(a.intersect(&eval_set(b, w)?))
        }
        LogicalForm::Union(a, b) => {
            let a = eval_set(a, w)?;
            Ok(a.union(&eval_set(b, w)?))
        }
        LogicalForm::Aggregate(op, arg) => aggregate(*op, &eval_set(arg, w)?),
        LogicalForm::Superlative(op, m) => superlative(*op, &eval_map(m, w)?),
        LogicalForm::Sub(a, b) => {
            let a = eval_set(a, w)?;
            sub(&a, &eval_set(b, w)?)
        }
        LogicalForm::Rel(_) | LogicalForm::Map(_) => Err(ErrorTag::Type),
    }
}

/// `r.S`: every `a` with an `r`-edge `a -> b` for some `b` in `S`. A reversed
/// relation walks edges forwards instead. Comparisons filter the world's
/// values of the matching kind.
pub fn join(w: &World, r: &Relation, s: &ValueSet) -> OpResult<ValueSet> {
    match r {
        Relation::Edge { label, reversed: false } => w.preimage(label, s).ok_or(ErrorTag::UnknownRelation),
        Relation::Edge { label, reversed: true } => w.image(label, s).ok_or(ErrorTag::UnknownRelation),
        Relation::Compare(op) => compare(w, *op, s),
    }
}

/// Values `v` of the world with `v op s` for some `s` in `S`; `!=` yields the
/// values of the same kind outside `S`.
pub fn compare(w: &World, op: CompareOp, s: &ValueSet) -> OpResult<ValueSet> {
    if s.is_empty() {
        return Ok(ValueSet::empty());
    }
    let kind = s.uniform_kind().ok_or(ErrorTag::Type)?;
    let domain = w.nodes_of_kind(kind);
    if op == CompareOp::Ne {
        return Ok(domain.iter().filter(|v| !s.contains(v)).cloned().collect());
    }
    let (lo, hi) = extremes(s)?;
    let bound = match op {
        CompareOp::Lt | CompareOp::Le => hi,
        _ => lo,
    };
    let keep = |v: &Value| -> bool {
        let Some(ord) = compare_values(v, &bound) else { return false };
        match op {
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
            CompareOp::Ne => unreachable!(),
        }
    };
    Ok(domain.iter().filter(|v| keep(v)).cloned().collect())
}

/// Order between two numbers, or two dates with the same known components.
pub fn compare_values(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => Some(x.cmp(y)),
        (Value::Date(x), Value::Date(y)) => x.partial_cmp_date(y),
        _ => None,
    }
}

/// Smallest and largest elements of a non-empty set of mutually comparable
/// numbers or dates.
fn extremes(s: &ValueSet) -> OpResult<(Value, Value)> {
    let first = s.iter().next().ok_or(ErrorTag::Empty)?;
    if !matches!(first.kind(), ValueKind::Number | ValueKind::Date) {
        return Err(ErrorTag::Type);
    }
    let (mut lo, mut hi) = (first, first);
    for v in s.iter().skip(1) {
        let ord = compare_values(v, first).ok_or(ErrorTag::Type)?;
        let _ = ord;
        if compare_values(v, lo) == Some(Ordering::Less) {
            lo = v;
        }
        if compare_values(v, hi) == Some(Ordering::Greater) {
            hi = v;
        }
    }
    Ok((lo.clone(), hi.clone()))
}

pub fn count(s: &ValueSet) -> ValueSet {
    ValueSet::singleton(Value::number(s.len() as f64))
}

pub fn aggregate(op: AggOp, s: &ValueSet) -> OpResult<ValueSet> {
    match op {
        AggOp::Count => Ok(count(s)),
        AggOp::Max | AggOp::Min => {
            let (lo, hi) = extremes(s)?;
            Ok(ValueSet::singleton(if op == AggOp::Max { hi } else { lo }))
        }
        AggOp::Sum => {
            if s.is_empty() {
                return Err(ErrorTag::Empty);
            }
            let total = s.iter().map(|v| v.as_number().ok_or(ErrorTag::Type)).sum::<OpResult<f64>>()?;
            Ok(ValueSet::singleton(Value::number(total)))
        }
    }
}

/// Keys whose image holds the overall best comparable value; ties keep every
/// maximizer. Each image must hold at least one number or date, and all of
/// them must be mutually comparable.
pub fn superlative(op: SupOp, m: &MapDenotation) -> OpResult<ValueSet> {
    let mut best: Option<&Value> = None;
    for (_, img) in m.pairs() {
        let mut any = false;
        for v in img.iter().filter(|v| matches!(v.kind(), ValueKind::Number | ValueKind::Date)) {
            any = true;
            best = Some(match best {
                None => v,
                Some(b) => {
                    let ord = compare_values(v, b).ok_or(ErrorTag::Type)?;
                    let better = match op {
                        SupOp::Argmax => ord == Ordering::Greater,
                        SupOp::Argmin => ord == Ordering::Less,
                    };
                    if better {
                        v
                    } else {
                        b
                    }
                }
            });
        }
        if !any {
            return Err(ErrorTag::Type);
        }
    }
    let Some(best) = best else { return Ok(ValueSet::empty()) };
    Ok(m.pairs().iter().filter(|(_, img)| img.contains(best)).map(|(k, _)| k.clone()).collect())
}

/// `a - b` for singleton numbers, or the day difference of two fully known
/// dates.
pub fn sub(a: &ValueSet, b: &ValueSet) -> OpResult<ValueSet> {
    let (Some(x), Some(y)) = (a.single(), b.single()) else {
        return Err(ErrorTag::NonSingleton);
    };
    match (x, y) {
        (Value::Number(x), Value::Number(y)) => Ok(ValueSet::singleton(Value::number(x.0 - y.0))),
        (Value::Date(x), Value::Date(y)) => {
            let days = date_diff(x, y).ok_or(ErrorTag::Type)?;
            Ok(ValueSet::singleton(Value::number(days as f64)))
        }
        _ => Err(ErrorTag::Type),
    }
}

fn date_diff(a: &Date, b: &Date) -> Option<i64> {
    Some(a.days_from_epoch()? - b.days_from_epoch()?)
}

// Map-level steps, mirroring the chain constructors.

/// `(u, x)`: every element maps to itself.
pub fn map_identity(u: &ValueSet) -> MapDenotation {
    MapDenotation::from_pairs(u.iter().map(|e| (e.clone(), ValueSet::singleton(e.clone()))).collect())
}

pub fn map_join(w: &World, r: &Relation, m: &MapDenotation) -> OpResult<MapDenotation> {
    m.try_map_images(|img| join(w, r, img))
}

pub fn map_intersect(m: &MapDenotation, s: &ValueSet) -> MapDenotation {
    m.try_map_images::<ErrorTag>(|img| Ok(img.intersect(s))).expect("infallible")
}

pub fn map_count(m: &MapDenotation) -> MapDenotation {
    m.try_map_images::<ErrorTag>(|img| Ok(count(img))).expect("infallible")
}

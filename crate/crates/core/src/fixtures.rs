//! The four-row athletics table used throughout the examples and tests.

use std::sync::Arc;

use crate::lf::{column_join, Chain, LogicalForm, MapForm, Relation, SupOp};
use crate::table::Table;
use crate::world::BuiltIn;

pub const FIXTURE_A_QUESTION: &str = "Where did the last 1st place finish occur?";

/// Mentions both `1st` and `relay`, so both superlative readings are derivable.
pub const FIXTURE_A_RELAY_QUESTION: &str = "Where did the last 1st place finish in the relay occur?";

pub const FIXTURE_A_ANSWER: &str = "Thailand";

pub const FIXTURE_A_TSV: &str = "Year\tVenue\tPosition\tEvent
2001\tHungary\t2nd\t400m
2003\tFinland\t1st\t400m
2005\tGermany\t11th\t400m
2007\tThailand\t1st\tRelay
";

pub fn fixture_a() -> Table {
    let rows = [
        ["2001", "Hungary", "2nd", "400m"],
        ["2003", "Finland", "1st", "400m"],
        ["2005", "Germany", "11th", "400m"],
        ["2007", "Thailand", "1st", "Relay"],
    ];
    Table::new(
        "fixture-a",
        ["Year", "Venue", "Position", "Event"].map(String::from).to_vec(),
        rows.iter().map(|r| r.map(String::from).to_vec()).collect(),
    )
    .expect("fixture is well formed")
}

fn by_index(op: SupOp, unary: LogicalForm) -> LogicalForm {
    let chain = Chain::Join(Relation::builtin(BuiltIn::Index).reverse(), Arc::new(Chain::Var));
    LogicalForm::superlative(op, MapForm::new(unary, chain))
}

/// `argmax(Position.1st, R[Index])`, denoting `{r3}`.
pub fn z1_argmax() -> LogicalForm {
    by_index(SupOp::Argmax, column_join("Position", "1st"))
}

/// `argmin(Event.Relay, R[Index])`, also denoting `{r3}`.
pub fn z1_argmin_relay() -> LogicalForm {
    by_index(SupOp::Argmin, column_join("Event", "relay"))
}

/// `R[Venue].argmax(Position.1st, R[Index])`, denoting `{thailand}`.
pub fn z_answer() -> LogicalForm {
    LogicalForm::join(Relation::column("Venue").reverse(), z1_argmax())
}

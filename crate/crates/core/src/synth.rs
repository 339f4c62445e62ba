//! Small random tables and questions for property and oracle tests.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream;
use crate::table::Table;

const COLORS: &[&str] = &["red", "blue", "green", "gold"];
const NAMES: &[&str] = &["alpha", "bravo", "delta", "echo", "kilo", "lima", "oscar", "tango"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthExample {
    pub id: String,
    pub table: Table,
    pub question: String,
    pub answer: Vec<String>,
}

fn column(rng: &mut impl Rng, kind: usize, rows: usize) -> (String, Vec<String>) {
    match kind {
        0 => {
            let start = rng.random_range(1990..2010);
            let mut year = start;
            let cells = (0..rows)
                .map(|_| {
                    year += rng.random_range(0..3);
                    year.to_string()
                })
                .collect();
            ("Year".into(), cells)
        }
        1 => ("Rank".into(), (0..rows).map(|_| rng.random_range(1..7).to_string()).collect()),
        2 => ("Color".into(), (0..rows).map(|_| COLORS.choose(rng).unwrap().to_string()).collect()),
        _ => {
            let mut names = NAMES.to_vec();
            names.shuffle(rng);
            ("Name".into(), names[..rows].iter().map(|s| s.to_string()).collect())
        }
    }
}

/// A table of 2..=`max_rows` rows and 2..=`max_cols` columns, with a question
/// mentioning one cell and an answer taken from another cell of the same row.
pub fn random_example(seed: u64, index: usize, max_rows: usize, max_cols: usize) -> SynthExample {
    let mut rng = stream(seed, "synth", index as u64);
    let rows = rng.random_range(2..=max_rows.max(2));
    let cols = rng.random_range(2..=max_cols.clamp(2, 4));
    let mut kinds = vec![0, 1, 2, 3];
    kinds.shuffle(&mut rng);
    kinds.truncate(cols);
    kinds.sort_unstable();
    let built: Vec<(String, Vec<String>)> = kinds.iter().map(|&k| column(&mut rng, k, rows)).collect();
    let columns = built.iter().map(|c| c.0.clone()).collect();
    let table_rows: Vec<Vec<String>> = (0..rows).map(|i| built.iter().map(|c| c.1[i].clone()).collect()).collect();
    let id = format!("synth-{index:03}");
    let table = Table::new(id.clone(), columns, table_rows.clone()).expect("well formed");
    let r = rng.random_range(0..rows);
    let a = rng.random_range(0..cols);
    let m = (a + 1 + rng.random_range(0..cols - 1)) % cols;
    let question = format!("what {} goes with {}?", table.columns[a].to_lowercase(), table_rows[r][m]);
    SynthExample { id, table, question, answer: vec![table_rows[r][a].clone()] }
}

pub fn suite(seed: u64, count: usize, max_rows: usize, max_cols: usize) -> Vec<SynthExample> {
    (0..count).map(|i| random_example(seed, i, max_rows, max_cols)).collect()
}

//! Logical-form search over tables: execution, deduction, dynamic
//! programming on denotations, and fictitious-world disambiguation.

pub mod anchor;
pub mod beam;
pub mod denotation;
pub mod dpd;
pub mod error;
pub mod exec;
pub mod fictitious;
pub mod fixtures;
pub mod lf;
pub mod normalize;
pub mod pipeline;
pub mod rng;
pub mod rules;
pub mod synth;
pub mod table;
pub mod target;
pub mod value;
pub mod world;

pub use denotation::{Denotation, ErrorTag, MapDenotation};
pub use error::{Error, Result};
pub use lf::{Category, LogicalForm};
pub use table::Table;
pub use value::{Value, ValueSet};
pub use world::{build_world, World};

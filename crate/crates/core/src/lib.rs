//! Nested-sequent proof toolkit for the polymodal provability logic GLP.

pub mod formula;
pub mod sequent;
pub mod calculus;
pub mod export;
pub mod search;
pub mod transform;
pub mod cutelim;
pub mod reduction;

pub use calculus::{check, Derivation, Rule, SystemSpec};
pub use formula::{parse, AdequateSet, Formula, Modality, ParseError};
pub use sequent::{parse_sequent, AnnotatedFormula, Context, NestedSequent, NodePath};

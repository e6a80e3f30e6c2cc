//! Decide whether a finite relational structure admits a near-unanimity
//! polymorphism, returning either a verified table or a verifiable
//! certificate of impossibility.

pub mod certificates;
pub mod decider;
pub mod error;
pub mod essential;
pub mod formula;
pub mod indicator;
pub mod nuf;
pub mod relation;
pub mod solver;

pub use error::{Error, Result};
pub use formula::{eval_pp, Atom, PPFormula};
pub use relation::{
    const_relation, eq_relation, make_relation, subset_relation, Elem, NamedRelation, Relation,
    Structure,
};
pub use solver::Budget;
pub use certificates::{verify_certificate, Certificate};
pub use decider::{augment_sr, bound, decide, Budgets, Verdict};
pub use essential::EssentialTuple;
pub use nuf::{verify_nuf, NufTable};

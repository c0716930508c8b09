//! LTL: parsing, lasso semantics, Büchi automata and model checking.

mod buchi;
mod check;
mod syntax;
mod trace;

pub use buchi::{ltl_to_buchi, BuchiAutomaton, BuchiState};
pub use check::{certify, check_alphabet, label_trace, wsha_ltl_check, LtlCounterExample, LtlError, LtlVerdict};
pub use syntax::{parse_ltl, LtlFormula, SyntaxError};
pub use trace::{evaluate_all, evaluate_trace, Letter};

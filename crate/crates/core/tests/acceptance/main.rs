//! Integration suites: the numbered acceptance criteria, randomized
//! invariants, and the command-line contract.

mod cli;
mod criteria;
mod properties;

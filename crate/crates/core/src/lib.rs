//! Exact fair-division toolkit: maximin and any-price shares, a rational
//! simplex solver, a half-MMS pipeline for SPLC valuations and a
//! one-third-APS greedy for submodular valuations.
//!
//! All arithmetic is exact ([`rational::Rational`]). Runnable walkthroughs
//! live in `examples/`.

pub mod cli;
pub mod extensions;
pub mod generate;
pub mod lp;
pub mod model;
pub mod rational;
pub mod shares;
pub mod splc_mms;
pub mod sub_aps;

pub use model::{Allocation, FractionalAllocation, Instance, SetFunction, SplcValuation, ValuationSpec};
pub use rational::Rational;

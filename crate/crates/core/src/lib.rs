//! Fairness audits that compare statistical parity with counterfactual Burden.
//!
//! The pipeline trains a logistic-regression classifier, searches for the
//! nearest opposite-class counterfactual of every negatively classified point
//! with a genetic algorithm, and reports per-group acceptance rates, their
//! ratio, the 80% rule, per-group Burden (mean counterfactual distance) and the
//! Burden ratio.

pub mod classifier;
pub mod counterfactual;
pub mod dataset;
pub mod fairness;
pub mod harness;
pub mod synthgen;

//! Column-generation test of stochastic rationalizability under the
//! generalized axiom of revealed price preference.

pub mod geometry;
pub mod inducement;
pub mod simplex;
pub mod choice_types;
pub mod master;
pub mod pricing;
pub mod colgen;
pub mod io;
pub mod pipeline;
pub mod synth;

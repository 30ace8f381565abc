//! Quality-diversity action repertoires for a simulated desk-scale robot arm.
//!
//! The crate is organised in five layers:
//!
//! * [`archive`] holds genotypes, behaviors and the unstructured repertoire,
//!   together with the distance, kernel-density novelty and insertion policy.
//! * [`evolve`] runs the novelty-driven quality-diversity loop and the
//!   uniform-random baseline.
//! * [`sim`] provides the two kinematic evaluation domains (ball throw and
//!   lever) built on cubic joint trajectories, plus reality-gap injection.
//! * [`adapt`] estimates local Jacobians from the repertoire and uses them to
//!   reach arbitrary goals, cross a reality gap, and propagate observed gaps
//!   through the repertoire as compensation terms.
//! * [`bench`] wires everything into reproducible experiment pipelines and
//!   file emitters used by the `qd-reach` binary.

pub mod adapt;
pub mod archive;
pub mod bench;
pub mod error;
pub mod evolve;
pub mod sim;

pub use error::{Error, Result};

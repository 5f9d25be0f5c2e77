//! Exact verification of a five-parameter family of coupled Painlevé VI
//! Hamiltonian systems in two times, and numerical integration of its
//! commuting flows.
//!
//! Everything here is pure computation over exact rationals (symbolic work)
//! or complex floats (the [`flows`] module); IO, reports and the command line
//! live in the companion `garnier-cli` crate.

#![no_std]

extern crate alloc;

pub mod backlund;
pub mod charts;
pub mod exactalg;
pub mod flows;
pub mod model;
pub mod singular;

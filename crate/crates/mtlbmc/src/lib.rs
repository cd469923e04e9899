//! Bounded verification of assertions in multi-threaded integer programs.
//!
//! The pipeline: the [`frontend`] parses and flattens a program into guarded
//! statements with explicit shared-memory events; the [`encoder`] turns it
//! into CNF under bounded integer semantics; the [`driver`] solves either
//! monolithically (with full ordering constraints up front) or by abstraction
//! refinement, where candidate models are checked as event-order graphs
//! ([`eog`]) and refuted orders are fed back as blocking clauses. The
//! [`oracle`] is an independent explicit-state interpreter used for witness
//! replay and cross-checking.

pub mod bits;
pub mod driver;
pub mod encoder;
pub mod eog;
pub mod exactorder;
pub mod frontend;
pub mod intsem;
pub mod oracle;

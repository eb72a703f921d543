//! Encodes counter machines and a two-loop squaring program as QFLIA
//! transition systems, checks candidate inductive invariants, synthesizes
//! explicit invariants for halting machines, and constructively refutes
//! candidate DNF invariants for non-halting ones, producing replayable
//! certificates.

pub mod checker;
pub mod formula;
pub mod minsky;
pub mod refuter;
pub mod sexpr;
pub mod synthesizer;
pub mod systems;

//! hyperprove: proof search for analytic hypersequent-calculus extensions
//! of FL_ec and FL_ew.
//!
//! The crate decides provability of hypersequents in `HFL_ec(R)` and
//! `HFL_ew(R)` for sets `R` of analytic structural rules (e.g. MTL =
//! `HFL_ew` + (com)), via two backward procedures over refined invertible
//! calculi:
//!
//! * contraction mode: f-minimal proof search — branch histories are
//!   controlled bad sequences over the sequent wqo, which bounds the tree;
//! * weakening mode: Karp–Miller-style ω-acceleration (`Wkn`) — strictly
//!   growing coordinates along dependency chains are promoted into ω-sets.
//!
//! Proofs found in weakening mode can be reconstructed into ω-free,
//! independently checkable proofs (stage one K-annotation, stage two gadget
//! unrolling).

pub mod calculus;
pub mod hyperseq;
pub mod proofs;
pub mod prover_c;
pub mod prover_w;
pub mod syntax;
pub mod trace;

//! Checking, construction and translation of algebraic proofs with
//! extension variables, together with the bit-level machinery needed to
//! simulate inequality reasoning inside equational proofs.

pub mod algebra;
pub mod bitblast;
pub mod circuit;
pub mod cli;
pub mod corpus;
pub mod lemmas;
pub mod lowerbound;
pub mod proofs;
pub mod translate;

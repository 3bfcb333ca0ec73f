//! Borel codes over Cantor space, their evaluation, and the combinatorial
//! constructions built on top of them.

pub mod codes;
pub mod corpus;
pub mod decorate;
pub mod eval;
pub mod graphs;
pub mod lalpha;
pub mod ordinals;
pub mod ramsey;
pub mod stagecraft;
pub mod syntax;

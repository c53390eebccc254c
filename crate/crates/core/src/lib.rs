pub mod calculus;
pub mod cli;
pub mod context;
pub mod corpus;
pub mod cutelim;
pub mod hilbert;
pub mod par;
pub mod search;
pub mod semantics;
pub mod syntax;

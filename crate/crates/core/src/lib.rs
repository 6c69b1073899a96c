//! Determinacy of boolean conjunctive queries under bag semantics.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`] holds relational structures, conjunctive queries, homomorphism
//!   counting, canonical keys and the structure algebra (`+`, `×`, powers).
//! * [`exacta`] is exact rational linear algebra over arbitrary-precision
//!   integers.
//! * [`detbool`] decides `V₀ → q` for boolean CQs by a span test over the
//!   vector representations of the queries.
//! * [`witness`] synthesizes verified counterexample database pairs when the
//!   span test fails.
//! * [`pathdet`] decides determinacy of path queries via prefix-graph
//!   reachability and builds two-copy witnesses when it fails.
//! * [`h10`] encodes polynomial equations as boolean UCQ determinacy instances.
//!
//! Every counting result can be cross-checked against the brute-force
//! enumerator in [`oracle`].

pub mod detbool;
pub mod error;
pub mod exacta;
pub mod gen;
pub mod h10;
pub mod limits;
pub mod oracle;
pub mod pathdet;
pub mod qcore;
pub mod selftest;
pub mod witness;

pub use error::{Error, Result};
pub use limits::Limits;

//! Structures, queries, homomorphism counting and the structure algebra.

pub mod algebra;
pub mod canon;
pub mod hom;
pub mod parse;
pub mod query;
pub mod schema;
pub mod structure;

pub use algebra::{all_loops, combine, connected_components, is_connected, power, product};
pub use canon::{canonical_key, is_isomorphic, CanonKey};
pub use hom::{
    eval_boolean_cq, eval_cq_bag, eval_ucq, hom_count, hom_count_pinned, hom_exists, Bag,
};
pub use parse::{group_unions, infer_schema, parse_cq, parse_queries, parse_schema, parse_structure};
pub use query::{Atom, ConjunctiveQuery, PathQuery, UnionQuery};
pub use schema::{Relation, Schema};
pub use structure::{Elem, Fact, Structure, StructureBuilder};

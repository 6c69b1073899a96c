use serde::{Deserialize, Serialize};

/// Resource limits shared by every search in the crate.
///
/// Exceeding a limit is always reported as [`crate::Error::LimitExceeded`];
/// no operation ever returns an approximate answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Nodes visited by one homomorphism or canonical-labeling search.
    pub max_search_nodes: u64,
    /// Elements of a structure built by product or power.
    pub max_domain_size: u64,
    /// Elements of a witness structure before it is shipped symbolically.
    pub max_materialized_size: u64,
    /// Candidate structures tried by the exhaustive distinguisher search.
    pub max_distinguisher_candidates: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_search_nodes: 1_000_000,
            max_domain_size: 100_000,
            max_materialized_size: 100_000,
            max_distinguisher_candidates: 1 << 18,
        }
    }
}

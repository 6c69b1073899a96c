//! Bag determinacy of boolean conjunctive queries.
//!
//! `V₀ → q` holds iff the vector of `q` over the connected-component basis
//! lies in the span of the vectors of the relevant views (those `v` with a
//! homomorphism `v → q`).

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exacta::{span_membership, RationalVector};
use crate::qcore::{
    canonical_key, connected_components, eval_boolean_cq, hom_exists, CanonKey,
    ConjunctiveQuery, Structure,
};
use crate::witness::{self, WitnessPair};
use crate::{Error, Limits, Result};

/// Pairwise non-isomorphic connected structures `w₁ … w_k`, sorted by
/// canonical key.
#[derive(Debug, Clone)]
pub struct Basis {
    components: Vec<Structure>,
    keys: Vec<CanonKey>,
    index: BTreeMap<CanonKey, usize>,
}

impl Basis {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Structure] {
        &self.components
    }

    pub fn keys(&self) -> &[CanonKey] {
        &self.keys
    }

    pub fn position(&self, key: &CanonKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Multiplicity vector of `q` over the basis, or `None` if some
    /// component of `q` is not in the basis.
    pub fn vector_of(&self, q: &ConjunctiveQuery, limits: &Limits) -> Result<Option<RationalVector>> {
        let mut counts = vec![0i64; self.k()];
        for c in connected_components(&q.frozen_body()) {
            match self.position(&canonical_key(&c, limits)?) {
                Some(i) => counts[i] += 1,
                None => return Ok(None),
            }
        }
        Ok(Some(RationalVector::from_ints(&counts)))
    }

    /// Fact list of `w_i` with variables `x0, x1, …`.
    pub fn describe(&self, i: usize) -> String {
        ConjunctiveQuery::from_structure(format!("w{}", i + 1), &self.components[i].anonymized())
            .to_string()
    }
}

fn check_inputs(v0: &[ConjunctiveQuery], q: &ConjunctiveQuery) -> Result<()> {
    for x in v0.iter().chain(std::iter::once(q)) {
        if !x.is_boolean() {
            return Err(Error::Precondition(format!("`{}` is not boolean", x.name())));
        }
        if x.schema() != q.schema() {
            return Err(Error::SchemaMismatch);
        }
        if x.has_nullary_atom() {
            return Err(Error::Unsupported(format!(
                "`{}` has a nullary atom; determinacy is decided for queries over relations of positive arity",
                x.name()
            )));
        }
    }
    Ok(())
}

/// `{v ∈ V₀ : hom(v, q) ≠ ∅}` in input order.
pub fn relevant_views(
    v0: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    limits: &Limits,
) -> Result<Vec<ConjunctiveQuery>> {
    let body = q.frozen_body();
    let mut out = Vec::new();
    for v in v0 {
        if hom_exists(&v.frozen_body(), &body, limits)? {
            out.push(v.clone());
        }
    }
    Ok(out)
}

/// Isomorphism-invariant key of a whole query: its sorted component keys.
pub fn query_key(q: &ConjunctiveQuery, limits: &Limits) -> Result<Vec<CanonKey>> {
    let mut keys = connected_components(&q.frozen_body())
        .iter()
        .map(|c| canonical_key(c, limits))
        .collect::<Result<Vec<_>>>()?;
    keys.sort();
    Ok(keys)
}

/// Drops views isomorphic to an earlier one.
pub fn dedup_views(v0: &[ConjunctiveQuery], limits: &Limits) -> Result<Vec<ConjunctiveQuery>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for v in v0 {
        if seen.insert(query_key(v, limits)?) {
            out.push(v.clone());
        }
    }
    Ok(out)
}

/// The basis `W` of `queries` and each query's vector over it.
pub fn component_basis(
    queries: &[ConjunctiveQuery],
    limits: &Limits,
) -> Result<(Basis, Vec<RationalVector>)> {
    let mut found: BTreeMap<CanonKey, Structure> = BTreeMap::new();
    for q in queries {
        for c in connected_components(&q.frozen_body()) {
            let key = canonical_key(&c, limits)?;
            found.entry(key).or_insert(c);
        }
    }
    let mut components = Vec::new();
    let mut keys = Vec::new();
    let mut index = BTreeMap::new();
    for (i, (key, c)) in found.into_iter().enumerate() {
        index.insert(key.clone(), i);
        keys.push(key);
        components.push(c);
    }
    let basis = Basis {
        components,
        keys,
        index,
    };
    let vectors = queries
        .iter()
        .map(|q| {
            basis
                .vector_of(q, limits)
                .map(|v| v.expect("every component was added"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((basis, vectors))
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub determined: bool,
    /// Relevant views after isomorphic duplicates were dropped.
    pub relevant: Vec<ConjunctiveQuery>,
    pub basis: Basis,
    pub query_vector: RationalVector,
    pub view_vectors: Vec<RationalVector>,
    /// Present iff determined; one entry per relevant view.
    pub coefficients: Option<RationalVector>,
    pub witness: Option<WitnessPair>,
    pub diagnostics: Vec<String>,
}

/// JSON form of a [`Verdict`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub determined: bool,
    pub k: usize,
    pub relevant_views: Vec<String>,
    pub coefficients: Option<RationalVector>,
    pub basis: Vec<String>,
    pub query_vector: RationalVector,
    pub view_vectors: BTreeMap<String, RationalVector>,
    pub witness_files: Vec<String>,
    pub witness_verified: Option<bool>,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    pub fn k(&self) -> usize {
        self.basis.k()
    }

    pub fn relevant_names(&self) -> Vec<String> {
        self.relevant.iter().map(|v| v.name().to_string()).collect()
    }

    pub fn report(&self, witness_files: Vec<String>) -> VerdictReport {
        VerdictReport {
            determined: self.determined,
            k: self.k(),
            relevant_views: self.relevant_names(),
            coefficients: self.coefficients.clone(),
            basis: (0..self.k()).map(|i| self.basis.describe(i)).collect(),
            query_vector: self.query_vector.clone(),
            view_vectors: self
                .relevant
                .iter()
                .zip(&self.view_vectors)
                .map(|(v, x)| (v.name().to_string(), x.clone()))
                .collect(),
            witness_files,
            witness_verified: self.witness.as_ref().map(|w| w.report.passed),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Decides `V₀ →bag q`. With `synthesize`, a failed span test is followed by
/// witness construction; a resource limit hit there is reported in the
/// diagnostics instead of failing the decision.
pub fn decide(
    v0: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    synthesize: bool,
    limits: &Limits,
) -> Result<Verdict> {
    check_inputs(v0, q)?;
    let mut diagnostics = Vec::new();
    let views = dedup_views(v0, limits)?;
    if views.len() < v0.len() {
        diagnostics.push(format!(
            "dropped {} view(s) isomorphic to an earlier one",
            v0.len() - views.len()
        ));
    }
    let relevant = relevant_views(&views, q, limits)?;
    let mut all = relevant.clone();
    all.push(q.clone());
    let (basis, mut vectors) = component_basis(&all, limits)?;
    let query_vector = vectors.pop().expect("q is last");
    let coefficients = span_membership(&vectors, &query_vector)?;
    let determined = coefficients.is_some();
    let mut witness = None;
    if !determined && synthesize {
        match witness::synthesize(&views, q, &relevant, &basis, &vectors, &query_vector, limits) {
            Ok(w) => {
                if !w.report.passed {
                    diagnostics.push("witness failed verification".into());
                }
                diagnostics.extend(w.diagnostics.iter().cloned());
                witness = Some(w);
            }
            Err(e) if e.is_limit() => diagnostics.push(format!("no witness: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok(Verdict {
        determined,
        relevant,
        basis,
        query_vector,
        view_vectors: vectors,
        coefficients,
        witness,
        diagnostics,
    })
}

/// Result of checking `q(D) = Π v_j(D)^{α_j}` on one structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub view_counts: Vec<BigUint>,
    pub query_count: BigUint,
    /// `true` when some view counts zero, so `q` must count zero too.
    pub zero_case: bool,
    pub holds: bool,
}

/// Checks the reconstruction formula for a determined verdict on `d`.
///
/// With `L` the lcm of the denominators of `α` and `a = L·α`, the identity
/// is checked as `q(D)^L · Π_{a_j<0} v_j(D)^{-a_j} = Π_{a_j>0} v_j(D)^{a_j}`.
pub fn explain_determined(
    coefficients: &RationalVector,
    views: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    d: &Structure,
    limits: &Limits,
) -> Result<ExplainReport> {
    if coefficients.len() != views.len() {
        return Err(Error::DimensionMismatch {
            expected: views.len(),
            found: coefficients.len(),
        });
    }
    let view_counts = views
        .iter()
        .map(|v| eval_boolean_cq(v, d, limits))
        .collect::<Result<Vec<_>>>()?;
    let query_count = eval_boolean_cq(q, d, limits)?;
    if view_counts.iter().any(Zero::is_zero) {
        return Ok(ExplainReport {
            view_counts,
            holds: query_count.is_zero(),
            query_count,
            zero_case: true,
        });
    }
    let l = coefficients
        .entries()
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let mut lhs = pow_big(&query_count, &l);
    let mut rhs = BigUint::one();
    for (a, c) in coefficients.entries().iter().zip(&view_counts) {
        let a = (a * crate::exacta::Rational::from_integer(l.clone())).to_integer();
        if a.is_negative() {
            lhs *= pow_big(c, &-a);
        } else if a.is_positive() {
            rhs *= pow_big(c, &a);
        }
    }
    Ok(ExplainReport {
        view_counts,
        holds: lhs == rhs,
        query_count,
        zero_case: false,
    })
}

fn pow_big(base: &BigUint, e: &BigInt) -> BigUint {
    let e = u32::try_from(e).expect("exponent fits in u32");
    Pow::pow(base, e)
}

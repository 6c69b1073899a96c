//! Counterexample pairs from a good basis.
//!
//! With `z` orthogonal to every view vector but not to `q⃗`, the points
//! `p = M·1` and `p′ = t^z ∘ p` give equal `vecpow` values for every view and
//! different ones for `q`. For `t` close enough to 1 the preimage
//! `M⁻¹p′` stays nonnegative; clearing denominators turns both preimages
//! into multiplicity vectors over the basis structures.

use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::basis::GoodBasis;
use super::symbolic::Symbolic;
use super::verify::{verify_sides, Side, VerifyReport};
use crate::exacta::{
    as_string, nonneg_preimage, orthogonal_witness, rational_string,
    vec_as_string, Rational, RationalMatrix, RationalVector,
};
use crate::qcore::{ConjunctiveQuery, Schema, Structure};
use crate::{Error, Limits, Result};

/// Largest `n` tried in the `t = 1 ± 1/n` schedule is `2^MAX_DOUBLINGS`.
pub const MAX_DOUBLINGS: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub z: RationalVector,
    pub p: RationalVector,
    #[serde(with = "rational_string")]
    pub t: Rational,
    /// Number of `t` values tried, the chosen one included.
    pub t_candidates: u64,
    pub p_prime: RationalVector,
    pub alpha: RationalVector,
    pub alpha_prime: RationalVector,
    #[serde(with = "as_string")]
    pub c: BigInt,
    #[serde(with = "as_string")]
    pub c_prime: BigInt,
    #[serde(with = "vec_as_string")]
    pub s_vector: Vec<BigUint>,
    #[serde(with = "vec_as_string")]
    pub s_vector_prime: Vec<BigUint>,
    #[serde(with = "as_string")]
    pub radix: BigUint,
    pub eval_matrix: RationalMatrix,
}

#[derive(Debug, Clone)]
pub struct WitnessPair {
    pub schema: Arc<Schema>,
    pub d: Symbolic,
    pub d_prime: Symbolic,
    /// Both sides built explicitly, when within `max_materialized_size`.
    pub materialized: Option<(Structure, Structure)>,
    pub trace: Trace,
    pub report: VerifyReport,
    pub diagnostics: Vec<String>,
}

/// `t = 1 + 1/n` then `t = 1 − 1/(n+1)` for `n = 2..=64`, then the same
/// pair for `n = 128, 256, …`.
pub fn t_schedule() -> impl Iterator<Item = Rational> {
    let linear = (2u32..=64).map(BigInt::from);
    let doubling = (7..=MAX_DOUBLINGS).map(|e| BigInt::one() << e);
    linear.chain(doubling).flat_map(|n| {
        let one = Rational::one();
        let plus = &one + Rational::new(BigInt::one(), n.clone());
        let minus = &one - Rational::new(BigInt::one(), n + 1u32);
        [plus, minus]
    })
}

/// `t^z ∘ p`.
pub fn perturb(t: &Rational, z: &RationalVector, p: &RationalVector) -> Result<RationalVector> {
    let ints = z
        .to_integers()
        .ok_or_else(|| Error::Precondition("z must be integral".into()))?;
    ints.iter()
        .zip(p.entries())
        .map(|(e, x)| {
            let e = e
                .to_i32()
                .ok_or_else(|| Error::limit("exponent size", i32::MAX as u64))?;
            Ok(t.pow(e) * x)
        })
        .collect::<Result<Vec<_>>>()
        .map(RationalVector)
}

fn denominator_lcm(v: &RationalVector) -> BigInt {
    v.entries()
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

pub fn build_counterexample(
    gb: &GoodBasis,
    v0: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    view_vectors: &[RationalVector],
    q_vector: &RationalVector,
    limits: &Limits,
) -> Result<WitnessPair> {
    let k = gb.k();
    let z = orthogonal_witness(view_vectors, q_vector)?;
    let m = &gb.eval_matrix;
    let p = m.mul_vec(&RationalVector::from_ints(&vec![1; k]))?;

    let mut chosen = None;
    for (tried, t) in t_schedule().enumerate() {
        let p_prime = perturb(&t, &z, &p)?;
        if let Some(alpha_prime) = nonneg_preimage(&gb.inverse, &p_prime)? {
            chosen = Some((t, tried as u64 + 1, p_prime, alpha_prime));
            break;
        }
    }
    let Some((t, t_candidates, p_prime, alpha_prime)) = chosen else {
        return Err(Error::limit("t schedule doublings", MAX_DOUBLINGS as u64));
    };

    let alpha = gb.inverse.mul_vec(&p)?;
    let c = denominator_lcm(&alpha);
    let c_prime = denominator_lcm(&alpha_prime);
    let cc = Rational::from_integer(&c * &c_prime);
    let naturals = |v: &RationalVector| -> Result<Vec<BigUint>> {
        v.scale(&cc)
            .to_naturals()
            .ok_or_else(|| Error::Invalid("scaled preimage is not a natural vector".into()))
    };
    let s_vector = naturals(&alpha)?;
    let s_vector_prime = naturals(&alpha_prime)?;
    let d = gb.combination(&s_vector)?;
    let d_prime = gb.combination(&s_vector_prime)?;

    let mut diagnostics = Vec::new();
    let materialized = match (d.materialize(limits), d_prime.materialize(limits)) {
        (Ok(a), Ok(b)) => Some((a, b)),
        (Err(e), _) | (_, Err(e)) if e.is_limit() => {
            diagnostics.push(format!(
                "witness kept symbolic: domain bounds {} and {} ({e})",
                d.domain_bound(),
                d_prime.domain_bound()
            ));
            None
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let sides = materialized.as_ref();
    let report = verify_sides(
        v0,
        q,
        Side {
            symbolic: Some(&d),
            structure: sides.map(|s| &s.0),
        },
        Side {
            symbolic: Some(&d_prime),
            structure: sides.map(|s| &s.1),
        },
        limits,
    );
    Ok(WitnessPair {
        schema: q.schema().clone(),
        d,
        d_prime,
        materialized,
        trace: Trace {
            z,
            p,
            t,
            t_candidates,
            p_prime,
            alpha,
            alpha_prime,
            c,
            c_prime,
            s_vector,
            s_vector_prime,
            radix: gb.radix.clone(),
            eval_matrix: m.clone(),
        },
        report,
        diagnostics,
    })
}

/// `vecpow(M·s⃗, v⃗)`: the count of a query with vector `v⃗` on `Σ s⃗(j)·s_j`.
pub fn eval_on_basis(
    v_vector: &RationalVector,
    m: &RationalMatrix,
    s_vector: &[BigUint],
) -> Result<BigUint> {
    let s = RationalVector::from_biguints(s_vector);
    let u = m.mul_vec(&s)?;
    let v = v_vector
        .to_naturals()
        .ok_or_else(|| Error::Precondition("query vector must be natural".into()))?;
    if v.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let mut out = BigUint::one();
    for (x, e) in u.entries().iter().zip(&v) {
        if e.is_zero() {
            continue;
        }
        let x = x
            .to_integer()
            .to_biguint()
            .filter(|_| x.is_integer() && !x.is_negative())
            .ok_or_else(|| Error::Precondition("M·s must be natural".into()))?;
        let e = e
            .to_u32()
            .ok_or_else(|| Error::limit("exponent size", u32::MAX as u64))?;
        out *= num_traits::Pow::pow(x, e);
    }
    Ok(out)
}

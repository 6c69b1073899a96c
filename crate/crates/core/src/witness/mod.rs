//! Counterexample synthesis for non-determined boolean CQ instances.

pub mod basis;
pub mod counterexample;
pub mod distinguish;
pub mod symbolic;
pub mod verify;

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use basis::{build_good_basis, GoodBasis};
pub use counterexample::{build_counterexample, eval_on_basis, Trace, WitnessPair};
pub use distinguish::{find_distinguisher, Distinguisher, Origin};
pub use symbolic::{Symbolic, SymbolicDoc};
pub use verify::{verify_sides, verify_witness, CountRow, Side, VerifyReport};

use crate::detbool::Basis;
use crate::exacta::{Rational, RationalVector};
use crate::qcore::{ConjunctiveQuery, Schema};
use crate::{Error, Limits, Result};

/// Good basis plus counterexample for a failed span test.
pub fn synthesize(
    v0: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    relevant: &[ConjunctiveQuery],
    w: &Basis,
    view_vectors: &[RationalVector],
    q_vector: &RationalVector,
    limits: &Limits,
) -> Result<WitnessPair> {
    debug_assert_eq!(relevant.len(), view_vectors.len());
    let gb = build_good_basis(w, q, v0, limits)?;
    build_counterexample(&gb, v0, q, view_vectors, q_vector, limits)
}

/// `Π u(i)^{v(i)}` for an integral exponent vector, with `0⁰ = 1`.
pub fn vecpow(u: &RationalVector, v: &RationalVector) -> Result<Rational> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let exps = v
        .to_integers()
        .ok_or_else(|| Error::Precondition("exponents must be integers".into()))?;
    let mut out = Rational::one();
    for (x, e) in u.entries().iter().zip(&exps) {
        if e.is_zero() {
            continue;
        }
        if x.is_zero() && *e < BigInt::zero() {
            return Err(Error::Precondition("zero to a negative power".into()));
        }
        let e = e
            .to_i32()
            .ok_or_else(|| Error::limit("exponent size", i32::MAX as u64))?;
        out *= x.pow(e);
    }
    Ok(out)
}

/// On-disk form of a witness pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub schema: Vec<String>,
    pub d: SymbolicDoc,
    pub d_prime: SymbolicDoc,
    pub trace: Trace,
    pub report: VerifyReport,
    pub diagnostics: Vec<String>,
}

impl WitnessFile {
    pub fn from_pair(wp: &WitnessPair) -> Self {
        WitnessFile {
            schema: wp
                .schema
                .relations()
                .iter()
                .map(|r| format!("{}/{}", r.name, r.arity))
                .collect(),
            d: wp.d.to_doc(),
            d_prime: wp.d_prime.to_doc(),
            trace: wp.trace.clone(),
            report: wp.report.clone(),
            diagnostics: wp.diagnostics.clone(),
        }
    }

    /// Rebuilds both sides over `schema`.
    pub fn sides(&self, schema: &Arc<Schema>) -> Result<(Symbolic, Symbolic)> {
        Ok((
            Symbolic::from_doc(&self.d, schema)?,
            Symbolic::from_doc(&self.d_prime, schema)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exacta::ratio;

    #[test]
    fn vecpow_basics() {
        let u = RationalVector(vec![ratio(2, 1), ratio(1, 3), Rational::zero()]);
        let v = RationalVector::from_ints(&[3, -1, 0]);
        assert_eq!(vecpow(&u, &v).unwrap(), ratio(24, 1));
        let bad = RationalVector::from_ints(&[0, 0, -1]);
        assert!(vecpow(&u, &bad).is_err());
    }
}

#[cfg(test)]
mod synthesis_tests {
    use num_bigint::BigUint;

    use super::*;
    use crate::detbool::decide;
    use crate::qcore::{parse_cq, Schema};

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::new([("R", 2), ("S", 2)]).unwrap())
    }

    fn cq(t: &str) -> ConjunctiveQuery {
        parse_cq(t, &schema()).unwrap()
    }

    #[test]
    fn single_component_without_views() {
        let q = cq("q() :- R(x,y), R(y,z).");
        let l = Limits::default();
        let v = decide(&[], &q, true, &l).unwrap();
        assert!(!v.determined);
        let w = v.witness.expect("witness");
        assert!(w.report.passed, "{:?}", w.report);
        assert_eq!(w.trace.t, crate::exacta::ratio(3, 2));
        assert_eq!(w.trace.s_vector, vec![BigUint::from(2u8)]);
        assert_eq!(w.trace.s_vector_prime, vec![BigUint::from(3u8)]);
        let (d, dp) = w.materialized.as_ref().unwrap();
        assert_eq!(d.domain_size(), 6);
        assert_eq!(dp.domain_size(), 9);
    }

    #[test]
    fn two_components_one_view() {
        // q = R-edge + S-edge, v = 2·R-edge + S-edge: not determined
        let q = cq("q() :- R(a,b), S(c,d).");
        let v = cq("v() :- R(a,b), R(c,d), S(e,f).");
        let irrelevant = cq("u() :- R(x,x).");
        let l = Limits::default();
        let verdict = decide(&[v.clone(), irrelevant.clone()], &q, true, &l).unwrap();
        assert!(!verdict.determined);
        let w = verdict.witness.expect("witness");
        assert!(w.report.passed, "{:#?}", w.report);
        assert!(w.report.views.iter().any(|r| !r.relevant));
        let again = verify_witness(&[v, irrelevant], &q, &w, &l).unwrap();
        assert_eq!(again, w.report);
    }

    #[test]
    fn equal_sides_fail_condition_a() {
        let q = cq("q() :- R(x,y).");
        let l = Limits::default();
        let w = decide(&[], &q, true, &l).unwrap().witness.unwrap();
        let side = Side {
            symbolic: Some(&w.d),
            structure: None,
        };
        let r = verify_sides(&[], &q, side, side, &l);
        assert!(!r.condition_a && !r.passed);
    }

    #[test]
    fn witness_file_round_trip() {
        let q = cq("q() :- R(a,b), S(b,c).");
        let v = cq("v() :- R(a,b).");
        let l = Limits::default();
        let w = decide(std::slice::from_ref(&v), &q, true, &l).unwrap().witness.unwrap();
        let file = WitnessFile::from_pair(&w);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back: WitnessFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        let (d, dp) = back.sides(&schema()).unwrap();
        let r = verify_sides(
            &[v],
            &q,
            Side { symbolic: Some(&d), structure: None },
            Side { symbolic: Some(&dp), structure: None },
            &l,
        );
        assert!(r.passed, "{r:#?}");
    }
}

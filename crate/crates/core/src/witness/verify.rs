//! Independent checking of witness pairs.
//!
//! Every count is recomputed by up to three routes: direct homomorphism
//! counting on the built structures, symbolic counting on the expression,
//! and `vecpow(M·s⃗, v⃗)` when a side is a combination of basis structures.
//! All routes that run must agree.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::counterexample::eval_on_basis;
use super::symbolic::{Counter, Symbolic};
use crate::detbool::{component_basis, relevant_views};
use crate::exacta::{Rational, RationalMatrix};
use crate::qcore::{hom_count, ConjunctiveQuery, Structure};
use crate::{Limits, Result};

#[derive(Debug, Clone, Copy)]
pub struct Side<'a> {
    pub symbolic: Option<&'a Symbolic>,
    pub structure: Option<&'a Structure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub name: String,
    /// For views: whether the view is relevant. Always true for the query.
    pub relevant: bool,
    pub d: Option<String>,
    pub d_prime: Option<String>,
    pub routes: Vec<String>,
    pub routes_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    /// `q(D) ≠ q(D′)`.
    pub condition_a: bool,
    /// `v(D) = v(D′)` for every relevant view.
    pub condition_b: bool,
    /// `v(D) = v(D′)` for every other view.
    pub condition_b0: bool,
    pub routes_agree: bool,
    pub query: CountRow,
    pub views: Vec<CountRow>,
    pub notes: Vec<String>,
}

struct Evaluator<'a> {
    side: Side<'a>,
    built: Option<Structure>,
    /// `(M, s⃗)` when the side is a top-level sum.
    basis: Option<(RationalMatrix, Vec<BigUint>)>,
    label: &'static str,
}

impl<'a> Evaluator<'a> {
    fn new(
        side: Side<'a>,
        label: &'static str,
        w: Option<&[Structure]>,
        limits: &Limits,
        notes: &mut Vec<String>,
    ) -> Self {
        let built = match (side.structure, side.symbolic) {
            (Some(_), _) => None,
            (None, Some(s)) => match s.materialize(limits) {
                Ok(x) => Some(x),
                Err(e) => {
                    notes.push(format!("{label}: direct route skipped ({e})"));
                    None
                }
            },
            (None, None) => None,
        };
        let basis = match (side.symbolic.and_then(Symbolic::sum_terms), w) {
            (Some(terms), Some(w)) => {
                let mut counter = Counter::new(limits);
                let mut m = RationalMatrix::zeros(w.len(), terms.len());
                let mut ok = true;
                'outer: for (i, wi) in w.iter().enumerate() {
                    for (j, (_, part)) in terms.iter().enumerate() {
                        match counter.count(part, wi) {
                            Ok(n) => m.set(i, j, Rational::from_integer(n.into())),
                            Err(e) => {
                                notes.push(format!("{label}: basis route skipped ({e})"));
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                }
                ok.then(|| (m, terms.iter().map(|(c, _)| c.clone()).collect()))
            }
            _ => None,
        };
        Evaluator {
            side,
            built,
            basis,
            label,
        }
    }

    /// Counts by every available route: `(route, value)` pairs.
    fn counts(
        &self,
        q: &ConjunctiveQuery,
        vector: Option<&crate::exacta::RationalVector>,
        limits: &Limits,
        notes: &mut Vec<String>,
    ) -> Vec<(&'static str, BigUint)> {
        let mut out = Vec::new();
        let body = q.frozen_body();
        if let Some(s) = self.side.structure.or(self.built.as_ref()) {
            match hom_count(&body, s, limits) {
                Ok(n) => out.push(("direct", n)),
                Err(e) => notes.push(format!("{}: direct count of `{}` failed ({e})", self.label, q.name())),
            }
        }
        if let Some(s) = self.side.symbolic {
            match s.count(&body, limits) {
                Ok(n) => out.push(("symbolic", n)),
                Err(e) => notes.push(format!("{}: symbolic count of `{}` failed ({e})", self.label, q.name())),
            }
        }
        if let (Some((m, s)), Some(v)) = (&self.basis, vector) {
            match eval_on_basis(v, m, s) {
                Ok(n) => out.push(("basis", n)),
                Err(e) => notes.push(format!("{}: basis count of `{}` failed ({e})", self.label, q.name())),
            }
        }
        out
    }
}

fn row(
    name: &str,
    relevant: bool,
    d: &[(&'static str, BigUint)],
    dp: &[(&'static str, BigUint)],
) -> (CountRow, Option<(BigUint, BigUint)>) {
    let agree = |xs: &[(&str, BigUint)]| xs.windows(2).all(|w| w[0].1 == w[1].1);
    let routes_agree = agree(d) && agree(dp) && !d.is_empty() && !dp.is_empty();
    let mut routes: Vec<String> = d.iter().map(|(r, _)| format!("D:{r}")).collect();
    routes.extend(dp.iter().map(|(r, _)| format!("D':{r}")));
    let a = d.first().map(|x| x.1.clone());
    let b = dp.first().map(|x| x.1.clone());
    let values = match (&a, &b) {
        (Some(a), Some(b)) if routes_agree => Some((a.clone(), b.clone())),
        _ => None,
    };
    (
        CountRow {
            name: name.to_string(),
            relevant,
            d: a.map(|x| x.to_string()),
            d_prime: b.map(|x| x.to_string()),
            routes,
            routes_agree,
        },
        values,
    )
}

/// Checks (A) `q(D) ≠ q(D′)`, (B) relevant views agree and (B0) all other
/// views agree, recomputing relevance and the component basis from the
/// queries alone.
pub fn verify_sides(
    v0: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    d: Side<'_>,
    d_prime: Side<'_>,
    limits: &Limits,
) -> VerifyReport {
    let mut notes = Vec::new();
    let relevant = match relevant_views(v0, q, limits) {
        Ok(r) => r,
        Err(e) => return failed(q, format!("relevance check failed ({e})")),
    };
    let mut all = relevant.clone();
    all.push(q.clone());
    let basis = match component_basis(&all, limits) {
        Ok(b) => Some(b),
        Err(e) => {
            notes.push(format!("basis route skipped ({e})"));
            None
        }
    };
    let w = basis.as_ref().map(|(b, _)| b.components());
    let ed = Evaluator::new(d, "D", w, limits, &mut notes);
    let edp = Evaluator::new(d_prime, "D'", w, limits, &mut notes);

    let vector_of = |x: &ConjunctiveQuery| {
        let (_, vs) = basis.as_ref()?;
        if x.name() == q.name() && x == q {
            return vs.last();
        }
        relevant.iter().position(|r| r == x).map(|i| &vs[i])
    };

    let qd = ed.counts(q, vector_of(q), limits, &mut notes);
    let qdp = edp.counts(q, vector_of(q), limits, &mut notes);
    let (query, qvals) = row(q.name(), true, &qd, &qdp);
    let mut routes_agree = query.routes_agree;
    let condition_a = qvals.as_ref().is_some_and(|(a, b)| a != b);

    let mut condition_b = true;
    let mut condition_b0 = true;
    let mut views = Vec::new();
    for v in v0 {
        let rel = relevant.contains(v);
        let vec = if rel { vector_of(v) } else { None };
        let a = ed.counts(v, vec, limits, &mut notes);
        let b = edp.counts(v, vec, limits, &mut notes);
        let (r, vals) = row(v.name(), rel, &a, &b);
        routes_agree &= r.routes_agree;
        let equal = vals.as_ref().is_some_and(|(a, b)| a == b);
        if rel {
            condition_b &= equal;
        } else {
            condition_b0 &= equal;
        }
        views.push(r);
    }
    VerifyReport {
        passed: condition_a && condition_b && condition_b0 && routes_agree,
        condition_a,
        condition_b,
        condition_b0,
        routes_agree,
        query,
        views,
        notes,
    }
}

fn failed(q: &ConjunctiveQuery, note: String) -> VerifyReport {
    VerifyReport {
        passed: false,
        condition_a: false,
        condition_b: false,
        condition_b0: false,
        routes_agree: false,
        query: CountRow {
            name: q.name().to_string(),
            relevant: true,
            d: None,
            d_prime: None,
            routes: Vec::new(),
            routes_agree: false,
        },
        views: Vec::new(),
        notes: vec![note],
    }
}

/// Re-verifies a witness pair from scratch.
pub fn verify_witness(
    v0: &[ConjunctiveQuery],
    q: &ConjunctiveQuery,
    wp: &super::WitnessPair,
    limits: &Limits,
) -> Result<VerifyReport> {
    let m = wp.materialized.as_ref();
    Ok(verify_sides(
        v0,
        q,
        Side {
            symbolic: Some(&wp.d),
            structure: m.map(|x| &x.0),
        },
        Side {
            symbolic: Some(&wp.d_prime),
            structure: m.map(|x| &x.1),
        },
        limits,
    ))
}

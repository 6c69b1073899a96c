//! Built-in checks: the homomorphism-count identities on random structures
//! and a set of worked fixtures, each reported as a pass/fail record.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Pow;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detbool::decide;
use crate::exacta::{invert, RationalMatrix, RationalVector};
use crate::gen::{random_query, random_structure, rng, TestRng};
use crate::h10::{parse_instance, witness_from_solution};
use crate::pathdet::{
    build_path_witness, decide_path, reduce_walk, walk_from_path, PrefixGraph, ReductionSystem,
};
use crate::qcore::{
    combine, hom_count, is_connected, parse_cq, power, product, ConjunctiveQuery, PathQuery,
    Schema, Structure,
};
use crate::{oracle, Limits, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckRecord {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckRecord {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((ok, detail)) => CheckRecord::new(name, ok, detail),
            Err(e) => CheckRecord::new(name, false, format!("error: {e}")),
        }
    }
}

/// Identity `i` (1-based) was checked `checked[i-1]` times and failed
/// `failed[i-1]` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityTally {
    pub trials: usize,
    pub checked: [usize; 5],
    pub failed: [usize; 5],
    pub oracle_checked: usize,
    pub oracle_failed: usize,
    pub first_failure: Option<String>,
}

impl IdentityTally {
    pub fn passed(&self) -> bool {
        self.failed.iter().all(|&f| f == 0) && self.oracle_failed == 0
    }
}

/// Schema of the identity suite: two binary relations and one unary.
pub fn identity_schema() -> Arc<Schema> {
    Arc::new(Schema::new([("E", 2), ("F", 2), ("U", 1)]).expect("distinct names"))
}

fn random_side(r: &mut TestRng, schema: &Arc<Schema>) -> Structure {
    let density = r.gen_range(0.1..0.5);
    random_structure(r, schema, 5, density)
}

fn random_connected(r: &mut TestRng, schema: &Arc<Schema>) -> Structure {
    random_query(r, schema, 4, 5, true, "a").frozen_body()
}

/// The five identities
///
/// 1. `hom(A, B + C) = hom(A, B) + hom(A, C)` for connected `A`
/// 2. `hom(A, tB) = t · hom(A, B)` for connected `A`
/// 3. `hom(A, B × C) = hom(A, B) · hom(A, C)`
/// 4. `hom(A, Bᵗ) = hom(A, B)ᵗ`
/// 5. `hom(A + B, C) = hom(A, C) · hom(B, C)`
///
/// on `trials` random triples with at most five elements each. Base counts
/// are also compared with the brute-force oracle.
pub fn identity_suite(seed: u64, trials: usize, limits: &Limits) -> Result<IdentityTally> {
    let schema = identity_schema();
    let mut r = rng(seed);
    let mut tally = IdentityTally {
        trials,
        checked: [0; 5],
        failed: [0; 5],
        oracle_checked: 0,
        oracle_failed: 0,
        first_failure: None,
    };
    for trial in 0..trials {
        let a = if r.gen_bool(0.5) {
            random_connected(&mut r, &schema)
        } else {
            random_side(&mut r, &schema)
        };
        let b = random_side(&mut r, &schema);
        let c = random_side(&mut r, &schema);
        let t: u32 = r.gen_range(0..=3);
        let ab = hom_count(&a, &b, limits)?;
        let ac = hom_count(&a, &c, limits)?;
        let bc = hom_count(&b, &c, limits)?;
        for (x, y, n) in [(&a, &b, &ab), (&a, &c, &ac), (&b, &c, &bc)] {
            tally.oracle_checked += 1;
            if &oracle::hom_count(x, y)? != n {
                tally.oracle_failed += 1;
            }
        }
        let mut results = [None; 5];
        if !a.is_empty() && is_connected(&a) {
            let sum = combine(&[1, 1], &[b.clone(), c.clone()], limits)?;
            results[0] = Some(hom_count(&a, &sum, limits)? == &ab + &ac);
            let tb = combine(&[u64::from(t)], std::slice::from_ref(&b), limits)?;
            results[1] = Some(hom_count(&a, &tb, limits)? == BigUint::from(t) * &ab);
        }
        let bxc = product(&b, &c, limits)?;
        results[2] = Some(hom_count(&a, &bxc, limits)? == &ab * &ac);
        let bt = power(&b, t, limits)?;
        results[3] = Some(hom_count(&a, &bt, limits)? == Pow::pow(&ab, t));
        let apb = combine(&[1, 1], &[a.clone(), b.clone()], limits)?;
        results[4] = Some(hom_count(&apb, &c, limits)? == &ac * &bc);
        for (i, res) in results.iter().enumerate() {
            if let Some(ok) = res {
                tally.checked[i] += 1;
                if !ok {
                    tally.failed[i] += 1;
                    tally.first_failure.get_or_insert_with(|| {
                        format!("identity {} on trial {trial} (t = {t})", i + 1)
                    });
                }
            }
        }
    }
    Ok(tally)
}

/// `q` and `v₁, v₂` with component vectors `(1,1,2)`, `(2,1,3)`, `(5,2,7)`
/// over an `R`-edge, an `S`-edge and an `R`-loop.
pub fn worked_example() -> (ConjunctiveQuery, Vec<ConjunctiveQuery>) {
    let schema = Arc::new(Schema::new([("R", 2), ("S", 2)]).expect("distinct names"));
    let cq = |t: &str| parse_cq(t, &schema).expect("fixture parses");
    let q = cq("q() :- R(a,b), S(c,d), R(e,e), R(f,f).");
    let v1 = cq("v1() :- R(a,b), R(c,d), S(e,f), R(g,g), R(h,h), R(i,i).");
    let v2 = cq("v2() :- R(a1,b1), R(a2,b2), R(a3,b3), R(a4,b4), R(a5,b5), \
                 S(c1,d1), S(c2,d2), R(l1,l1), R(l2,l2), R(l3,l3), R(l4,l4), \
                 R(l5,l5), R(l6,l6), R(l7,l7).");
    (q, vec![v1, v2])
}

fn path_setup(q: &str, views: &[&str]) -> Result<(PathQuery, Vec<PathQuery>)> {
    let schema = PathQuery::infer_schema(std::iter::once(q).chain(views.iter().copied()))?;
    let q = PathQuery::parse(q, &schema)?;
    let views = views
        .iter()
        .map(|v| PathQuery::parse(v, &schema))
        .collect::<Result<Vec<_>>>()?;
    Ok((q, views))
}

fn fixture_worked_example(limits: &Limits) -> Result<(bool, String)> {
    let (q, v) = worked_example();
    let verdict = decide(&v, &q, false, limits)?;
    let ok = verdict.determined
        && verdict.coefficients == Some(RationalVector::from_ints(&[3, -1]));
    Ok((ok, format!("coefficients {:?}", verdict.coefficients.map(|c| c.to_strings()))))
}

fn fixture_k_one(limits: &Limits) -> Result<(bool, String)> {
    let schema = Arc::new(Schema::new([("R", 2)]).expect("one relation"));
    let q = parse_cq("q() :- R(x,y), R(y,z).", &schema)?;
    let verdict = decide(&[], &q, true, limits)?;
    let Some(w) = verdict.witness else {
        return Ok((false, "no witness".into()));
    };
    let a = q.frozen_body();
    let (d, dp) = match &w.materialized {
        Some(pair) => pair.clone(),
        None => return Ok((false, "witness not materialized".into())),
    };
    let qd = oracle::hom_count(&a, &d)?;
    let qdp = oracle::hom_count(&a, &dp)?;
    let ok = w.report.passed && &qd * BigUint::from(3u8) == &qdp * BigUint::from(2u8);
    Ok((ok, format!("q(D) = {qd}, q(D') = {qdp}")))
}

fn fixture_matrices() -> Result<(bool, String)> {
    let singular = RationalMatrix::from_ints(&[&[2, 4], &[1, 2]])?;
    let regular = RationalMatrix::from_ints(&[&[1, 4], &[1, 2]])?;
    let rejected = invert(&singular)?.is_none();
    let ok = match invert(&regular)? {
        Some(inv) => regular.mul(&inv)? == RationalMatrix::identity(2),
        None => false,
    };
    Ok((rejected && ok, format!("singular rejected: {rejected}, inverse verified: {ok}")))
}

fn fixture_path_determined() -> Result<(bool, String)> {
    let (q, views) = path_setup("ABCD", &["ABC", "BC", "BCD"])?;
    let graph = PrefixGraph::new(&q, &views)?;
    let Some(path) = graph.find_path() else {
        return Ok((false, "not determined".into()));
    };
    let walk = walk_from_path(&q, &views, &path)?;
    let mut ok = decide_path(&q, &views)?;
    for sys in [ReductionSystem::PlusMinus, ReductionSystem::MinusPlus] {
        ok &= reduce_walk(&walk, &q, sys)?.equals_query(&q);
    }
    Ok((ok, format!("walk {walk}")))
}

fn fixture_path_witness(limits: &Limits) -> Result<(bool, String)> {
    let (q, views) = path_setup("AB", &["A"])?;
    let w = build_path_witness(&q, &views, limits)?;
    Ok((
        w.report.passed,
        format!(
            "endpoint multiplicity {} vs {}",
            w.report.endpoint_in_d, w.report.endpoint_in_d_prime
        ),
    ))
}

fn fixture_h10(text: &str, value: u32, limits: &Limits) -> Result<(bool, String)> {
    let inst = parse_instance(text)?;
    let w = witness_from_solution(&inst, &[BigUint::from(value)], limits)?;
    Ok((
        w.report.passed,
        format!("q: {} vs {}", w.report.query_d, w.report.query_d_prime),
    ))
}

pub fn fixtures(limits: &Limits) -> Vec<CheckRecord> {
    vec![
        CheckRecord::from_result("worked example coefficients", fixture_worked_example(limits)),
        CheckRecord::from_result("single component trace", fixture_k_one(limits)),
        CheckRecord::from_result("singular and regular 2x2", fixture_matrices()),
        CheckRecord::from_result("path ABCD determined", fixture_path_determined()),
        CheckRecord::from_result("path AB witness", fixture_path_witness(limits)),
        CheckRecord::from_result("x - 1 witness", fixture_h10("1 x1\n-1", 1, limits)),
        CheckRecord::from_result("x - 2 witness", fixture_h10("1 x1\n-2", 2, limits)),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub seed: u64,
    pub identities: IdentityTally,
    pub checks: Vec<CheckRecord>,
}

pub fn run(seed: u64, trials: usize, limits: &Limits) -> Result<SelftestReport> {
    let identities = identity_suite(seed, trials, limits)?;
    let mut checks = vec![CheckRecord::new(
        "hom-count identities",
        identities.passed(),
        format!("{:?} checked, {:?} failed", identities.checked, identities.failed),
    )];
    checks.extend(fixtures(limits));
    Ok(SelftestReport {
        passed: checks.iter().all(|c| c.passed),
        seed,
        identities,
        checks,
    })
}

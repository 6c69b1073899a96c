//! Determinacy of path queries.
//!
//! The prefix graph has the prefixes of `q` as nodes (identified by their
//! length) and an undirected edge `w -- wv` for every view `v`. The views
//! determine `q`, under set and bag semantics alike, iff `q` is reachable
//! from `ε`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::qcore::{eval_cq_bag, Bag, Elem, Fact, PathQuery, Schema, Structure};
use crate::{Error, Limits, Result};

/// Undirected edge between prefixes of length `from` and `to = from + |v|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub view: usize,
}

#[derive(Debug, Clone)]
pub struct PrefixGraph {
    q: PathQuery,
    views: Vec<PathQuery>,
    edges: Vec<Edge>,
}

/// One step of a path in the prefix graph. Forward moves append the view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub view: usize,
    pub from: usize,
    pub to: usize,
    pub forward: bool,
}

fn check_schemas(q: &PathQuery, views: &[PathQuery]) -> Result<()> {
    if views.iter().any(|v| v.schema() != q.schema()) {
        return Err(Error::SchemaMismatch);
    }
    Ok(())
}

impl PrefixGraph {
    pub fn new(q: &PathQuery, views: &[PathQuery]) -> Result<Self> {
        check_schemas(q, views)?;
        let word = q.word();
        let mut edges = Vec::new();
        for from in 0..=word.len() {
            for (vi, v) in views.iter().enumerate() {
                let to = from + v.len();
                if to <= word.len() && &word[from..to] == v.word() {
                    edges.push(Edge { from, to, view: vi });
                }
            }
        }
        Ok(PrefixGraph {
            q: q.clone(),
            views: views.to_vec(),
            edges,
        })
    }

    pub fn query(&self) -> &PathQuery {
        &self.q
    }

    pub fn views(&self) -> &[PathQuery] {
        &self.views
    }

    pub fn node_count(&self) -> usize {
        self.q.len() + 1
    }

    /// Labeled edges; one per view occurrence.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct unordered node pairs joined by some edge.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    fn bfs(&self) -> Vec<Option<Move>> {
        let n = self.node_count();
        let mut adj: Vec<Vec<Move>> = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.from].push(Move {
                view: e.view,
                from: e.from,
                to: e.to,
                forward: true,
            });
            adj[e.to].push(Move {
                view: e.view,
                from: e.to,
                to: e.from,
                forward: false,
            });
        }
        let mut pred: Vec<Option<Move>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for m in &adj[x] {
                if !seen[m.to] {
                    seen[m.to] = true;
                    pred[m.to] = Some(*m);
                    queue.push_back(m.to);
                }
            }
        }
        pred
    }

    /// `reachable[i]`: the prefix of length `i` is reachable from `ε`.
    pub fn reachable(&self) -> Vec<bool> {
        let pred = self.bfs();
        (0..self.node_count())
            .map(|i| i == 0 || pred[i].is_some())
            .collect()
    }

    /// A shortest path from `ε` to `q`, if any.
    pub fn find_path(&self) -> Option<Vec<Move>> {
        let pred = self.bfs();
        let mut at = self.q.len();
        let mut path = Vec::new();
        while at != 0 {
            let m = pred[at]?;
            path.push(m);
            at = m.from;
        }
        path.reverse();
        Some(path)
    }
}

pub fn decide_path(q: &PathQuery, views: &[PathQuery]) -> Result<bool> {
    Ok(PrefixGraph::new(q, views)?.find_path().is_some())
}

/// A word over letters and their inverses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk {
    schema: Arc<Schema>,
    /// `(relation, +1 | -1)`.
    letters: Vec<(usize, i8)>,
}

impl Walk {
    pub fn new(schema: Arc<Schema>, letters: Vec<(usize, i8)>) -> Result<Self> {
        for &(r, s) in &letters {
            if r >= schema.len() || schema.arity(r) != 2 {
                return Err(Error::Invalid(format!("walk letter #{r} is not a binary relation")));
            }
            if s != 1 && s != -1 {
                return Err(Error::Invalid("walk signs must be ±1".into()));
            }
        }
        Ok(Walk { schema, letters })
    }

    pub fn from_path_query(q: &PathQuery) -> Self {
        Walk {
            schema: q.schema().clone(),
            letters: q.word().iter().map(|&r| (r, 1)).collect(),
        }
    }

    pub fn letters(&self) -> &[(usize, i8)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Whether this is a q-walk: partial sums stay in `[0, |q|]`, end at
    /// `|q|`, and each letter matches the symbol of `q` it crosses.
    pub fn is_q_walk(&self, q: &PathQuery) -> bool {
        let word = q.word();
        let mut s: i64 = 0;
        for &(r, sign) in &self.letters {
            let expected = if sign == 1 {
                word.get(s as usize)
            } else if s >= 1 {
                word.get(s as usize - 1)
            } else {
                None
            };
            if expected != Some(&r) {
                return false;
            }
            s += i64::from(sign);
            if s < 0 || s > word.len() as i64 {
                return false;
            }
        }
        s == word.len() as i64
    }

    /// Whether the walk is the positive word of `q`.
    pub fn equals_query(&self, q: &PathQuery) -> bool {
        self.letters.len() == q.len()
            && self.letters.iter().zip(q.word()).all(|(&(r, s), &w)| s == 1 && r == w)
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "ε");
        }
        let multi = self
            .letters
            .iter()
            .any(|&(r, _)| self.schema.name(r).chars().count() != 1);
        for (i, &(r, s)) in self.letters.iter().enumerate() {
            if multi && i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", self.schema.name(r))?;
            if s == -1 {
                write!(f, "⁻¹")?;
            }
        }
        Ok(())
    }
}

/// Concatenates `v` for forward moves and `v⁻¹` for backward ones.
pub fn walk_from_path(q: &PathQuery, views: &[PathQuery], path: &[Move]) -> Result<Walk> {
    check_schemas(q, views)?;
    let word = q.word();
    let mut at = 0usize;
    let mut letters = Vec::new();
    for (i, m) in path.iter().enumerate() {
        let bad = |why: &str| Error::Invalid(format!("move {i}: {why}"));
        let v = views.get(m.view).ok_or_else(|| bad("unknown view"))?;
        if m.from != at {
            return Err(bad("does not start where the previous move ended"));
        }
        let (lo, hi) = if m.forward {
            (m.from, m.to)
        } else {
            (m.to, m.from)
        };
        if hi > word.len() || hi < lo || hi - lo != v.len() || &word[lo..hi] != v.word() {
            return Err(bad("is not an edge of the prefix graph"));
        }
        if m.forward {
            letters.extend(v.word().iter().map(|&r| (r, 1i8)));
        } else {
            letters.extend(v.word().iter().rev().map(|&r| (r, -1i8)));
        }
        at = m.to;
    }
    if at != word.len() {
        return Err(Error::Invalid("path does not end at q".into()));
    }
    Walk::new(q.schema().clone(), letters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionSystem {
    /// Deletes `A A⁻¹`.
    PlusMinus,
    /// Deletes `A⁻¹ A`.
    MinusPlus,
}

impl ReductionSystem {
    fn cancels(self, left: (usize, i8), right: (usize, i8)) -> bool {
        left.0 == right.0
            && match self {
                ReductionSystem::PlusMinus => left.1 == 1 && right.1 == -1,
                ReductionSystem::MinusPlus => left.1 == -1 && right.1 == 1,
            }
    }
}

/// Normal form of a q-walk under one of the two reduction systems.
pub fn reduce_walk(w: &Walk, q: &PathQuery, system: ReductionSystem) -> Result<Walk> {
    if !w.is_q_walk(q) {
        return Err(Error::Precondition(format!("`{w}` is not a q-walk for `{q}`")));
    }
    let mut stack: Vec<(usize, i8)> = Vec::with_capacity(w.len());
    for &l in &w.letters {
        match stack.last() {
            Some(&top) if system.cancels(top, l) => {
                stack.pop();
            }
            _ => stack.push(l),
        }
    }
    Ok(Walk {
        schema: w.schema.clone(),
        letters: stack,
    })
}

/// Every intermediate word when the leftmost redex is rewritten each time.
pub fn reduction_steps(w: &Walk, system: ReductionSystem) -> Vec<Walk> {
    let mut out = vec![w.clone()];
    let mut cur = w.letters.clone();
    while let Some(i) = (1..cur.len()).find(|&i| system.cancels(cur[i - 1], cur[i])) {
        cur.drain(i - 1..=i);
        out.push(Walk {
            schema: w.schema.clone(),
            letters: cur.clone(),
        });
    }
    out
}

/// `M_R(i, j) = 1` iff `R(a_i, a_j)`.
pub fn incidence_matrix(d: &Structure, rel: usize) -> Vec<Vec<BigUint>> {
    let n = d.domain_size();
    let mut m = vec![vec![BigUint::zero(); n]; n];
    for f in d.facts().iter().filter(|f| f.rel == rel) {
        m[f.args[0] as usize][f.args[1] as usize] = BigUint::one();
    }
    m
}

fn mat_mul(a: &[Vec<BigUint>], b: &[Vec<BigUint>]) -> Vec<Vec<BigUint>> {
    let n = a.len();
    let mut out = vec![vec![BigUint::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

/// `M_{R₁}·…·M_{R_m}` over the domain of `d`.
pub fn eval_path_matrix(w: &PathQuery, d: &Structure) -> Result<Vec<Vec<BigUint>>> {
    if w.schema() != d.schema() {
        return Err(Error::SchemaMismatch);
    }
    let n = d.domain_size();
    let mut acc: Vec<Vec<BigUint>> = (0..n)
        .map(|i| (0..n).map(|j| BigUint::from(u8::from(i == j))).collect())
        .collect();
    for &r in w.word() {
        acc = mat_mul(&acc, &incidence_matrix(d, r));
    }
    Ok(acc)
}

/// Answer bag of a path query via incidence matrices.
pub fn eval_path_query(w: &PathQuery, d: &Structure) -> Result<Bag> {
    let m = eval_path_matrix(w, d)?;
    let mut bag = Bag::new();
    for (i, row) in m.into_iter().enumerate() {
        for (j, x) in row.into_iter().enumerate() {
            if !x.is_zero() {
                bag.insert(vec![i as Elem, j as Elem], x);
            }
        }
    }
    Ok(bag)
}

/// Answer bag of a path query via homomorphism counting of its CQ form.
pub fn eval_path_query_hom(w: &PathQuery, d: &Structure, limits: &Limits) -> Result<Bag> {
    eval_cq_bag(&w.to_cq("w")?, d, limits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRow {
    pub name: String,
    pub tuples: usize,
    pub bags_equal: bool,
    pub multiplicity_one: bool,
    pub routes_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathReport {
    pub passed: bool,
    pub query_differs: bool,
    /// Multiplicity of `⟨[ε,0], [q,0]⟩` in `q(D)` and `q(D′)`.
    pub endpoint_in_d: String,
    pub endpoint_in_d_prime: String,
    pub routes_agree: bool,
    pub views: Vec<PathRow>,
}

#[derive(Debug, Clone)]
pub struct PathWitness {
    pub d: Structure,
    pub d_prime: Structure,
    /// Reachability class of each prefix, by length.
    pub reachable: Vec<bool>,
    pub report: PathReport,
}

/// Element `[w, j]` for the prefix of length `i`.
pub fn node(i: usize, j: usize) -> Elem {
    (2 * i + j) as Elem
}

/// The two-copy witness: `D = q + q`, and `D′` twists exactly the edges
/// joining prefixes of different reachability classes.
pub fn build_path_witness(
    q: &PathQuery,
    views: &[PathQuery],
    limits: &Limits,
) -> Result<PathWitness> {
    let graph = PrefixGraph::new(q, views)?;
    let reachable = graph.reachable();
    if reachable[q.len()] {
        return Err(Error::Precondition("the views determine q".into()));
    }
    let n = q.len();
    let names: Vec<String> = (0..=n)
        .flat_map(|i| (0..2).map(move |j| node_name(i, j)))
        .collect();
    let mut d = Vec::new();
    let mut dp = Vec::new();
    for (i, &r) in q.word().iter().enumerate() {
        for j in 0..2 {
            d.push(Fact::new(r, vec![node(i, j), node(i + 1, j)]));
            let k = if reachable[i] == reachable[i + 1] { j } else { 1 - j };
            dp.push(Fact::new(r, vec![node(i, j), node(i + 1, k)]));
        }
    }
    let size = 2 * (n + 1);
    let d = Structure::with_domain(q.schema().clone(), size, Some(names.clone()), d)?;
    let d_prime = Structure::with_domain(q.schema().clone(), size, Some(names), dp)?;
    let report = verify_path_witness(q, views, &d, &d_prime, limits)?;
    Ok(PathWitness {
        d,
        d_prime,
        reachable,
        report,
    })
}

type NamedBag = BTreeMap<Vec<String>, BigUint>;

fn both_routes(w: &PathQuery, d: &Structure, limits: &Limits) -> Result<(NamedBag, bool)> {
    let m = eval_path_query(w, d)?;
    let h = eval_path_query_hom(w, d, limits)?;
    let agree = m == h;
    let named = m
        .into_iter()
        .map(|(t, c)| (t.into_iter().map(|e| d.name(e)).collect(), c))
        .collect();
    Ok((named, agree))
}

/// Element name of `[w, j]` where `w` is the prefix of length `i`.
pub fn node_name(i: usize, j: usize) -> String {
    format!("w{i}_{j}")
}

/// Compares the answer bags of every view and of `q` on `d` and `d_prime`.
/// Tuples are matched by element name, so the two sides may number their
/// elements differently.
pub fn verify_path_witness(
    q: &PathQuery,
    views: &[PathQuery],
    d: &Structure,
    d_prime: &Structure,
    limits: &Limits,
) -> Result<PathReport> {
    let mut routes_agree = true;
    let mut rows = Vec::new();
    for v in views {
        let (a, ok1) = both_routes(v, d, limits)?;
        let (b, ok2) = both_routes(v, d_prime, limits)?;
        routes_agree &= ok1 && ok2;
        rows.push(PathRow {
            name: v.to_string(),
            tuples: a.len(),
            bags_equal: a == b,
            multiplicity_one: a.values().chain(b.values()).all(One::is_one),
            routes_agree: ok1 && ok2,
        });
    }
    let (qa, ok1) = both_routes(q, d, limits)?;
    let (qb, ok2) = both_routes(q, d_prime, limits)?;
    routes_agree &= ok1 && ok2;
    let endpoint = vec![node_name(0, 0), node_name(q.len(), 0)];
    let (ea, eb) = (
        qa.get(&endpoint).cloned().unwrap_or_default(),
        qb.get(&endpoint).cloned().unwrap_or_default(),
    );
    let query_differs = qa != qb;
    let passed = query_differs
        && ea.is_one()
        && eb.is_zero()
        && routes_agree
        && rows.iter().all(|r| r.bags_equal && r.multiplicity_one);
    Ok(PathReport {
        passed,
        query_differs,
        endpoint_in_d: ea.to_string(),
        endpoint_in_d_prime: eb.to_string(),
        routes_agree,
        views: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(q: &str, vs: &[&str]) -> (PathQuery, Vec<PathQuery>) {
        let schema = PathQuery::infer_schema(std::iter::once(q).chain(vs.iter().copied())).unwrap();
        let q = PathQuery::parse(q, &schema).unwrap();
        let vs = vs.iter().map(|v| PathQuery::parse(v, &schema).unwrap()).collect();
        (q, vs)
    }

    #[test]
    fn abcd_is_determined_through_a() {
        let (q, vs) = setup("ABCD", &["ABC", "BC", "BCD"]);
        assert!(decide_path(&q, &vs).unwrap());
        let g = PrefixGraph::new(&q, &vs).unwrap();
        assert_eq!(g.node_count(), 5);
        let path = g.find_path().unwrap();
        let nodes: Vec<usize> = std::iter::once(0).chain(path.iter().map(|m| m.to)).collect();
        assert_eq!(nodes, vec![0, 3, 1, 4]);
        let walk = walk_from_path(&q, &vs, &path).unwrap();
        assert_eq!(walk.to_string(), "ABCC⁻¹B⁻¹BCD");
        assert!(walk.is_q_walk(&q));
        for sys in [ReductionSystem::PlusMinus, ReductionSystem::MinusPlus] {
            let r = reduce_walk(&walk, &q, sys).unwrap();
            assert_eq!(r.to_string(), "ABCD");
            assert!(r.equals_query(&q));
        }
    }

    #[test]
    fn step_by_step_minus_plus() {
        let (q, vs) = setup("ABCD", &["ABC", "BC", "BCD"]);
        let g = PrefixGraph::new(&q, &vs).unwrap();
        let walk = walk_from_path(&q, &vs, &g.find_path().unwrap()).unwrap();
        let steps: Vec<String> = reduction_steps(&walk, ReductionSystem::MinusPlus)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(steps, ["ABCC⁻¹B⁻¹BCD", "ABCC⁻¹CD", "ABCD"]);
        let steps: Vec<String> = reduction_steps(&walk, ReductionSystem::PlusMinus)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(steps, ["ABCC⁻¹B⁻¹BCD", "ABB⁻¹BCD", "ABCD"]);
    }

    #[test]
    fn trivial_and_negative_cases() {
        let (q, vs) = setup("A", &["A"]);
        assert!(decide_path(&q, &vs).unwrap());
        let g = PrefixGraph::new(&q, &vs).unwrap();
        let w = walk_from_path(&q, &vs, &g.find_path().unwrap()).unwrap();
        assert!(w.equals_query(&q));
        let (q, vs) = setup("AB", &["A"]);
        assert!(!decide_path(&q, &vs).unwrap());
        assert_eq!(PrefixGraph::new(&q, &vs).unwrap().reachable(), vec![true, true, false]);
    }

    #[test]
    fn non_walks_are_rejected() {
        let (q, _) = setup("AB", &[]);
        let bad = Walk::new(q.schema().clone(), vec![(1, 1), (0, 1)]).unwrap();
        assert!(!bad.is_q_walk(&q));
        assert!(reduce_walk(&bad, &q, ReductionSystem::PlusMinus).is_err());
    }

    #[test]
    fn ab_witness() {
        let (q, vs) = setup("AB", &["A"]);
        let w = build_path_witness(&q, &vs, &Limits::default()).unwrap();
        assert!(w.report.passed, "{:?}", w.report);
        assert_eq!(w.report.endpoint_in_d, "1");
        assert_eq!(w.report.endpoint_in_d_prime, "0");
        assert_eq!(w.reachable, vec![true, true, false]);
    }

    #[test]
    fn abcd_witness_without_views() {
        let (q, vs) = setup("ABCD", &[]);
        let w = build_path_witness(&q, &vs, &Limits::default()).unwrap();
        assert_eq!(w.reachable, vec![true, false, false, false, false]);
        assert!(w.report.passed);
        assert!(build_path_witness(&q, std::slice::from_ref(&q), &Limits::default()).is_err());
    }

    #[test]
    fn witness_survives_renumbering() {
        let (q, vs) = setup("ABCAB", &["AB", "CA"]);
        let w = build_path_witness(&q, &vs, &Limits::default()).unwrap();
        assert!(w.report.passed);
        let schema = q.schema().clone();
        let reparse = |s: &Structure| {
            let mut lines = s.to_fact_lines();
            lines.reverse();
            crate::qcore::parse_structure(&lines.join("\n"), Some(&schema)).unwrap()
        };
        let (d, dp) = (reparse(&w.d), reparse(&w.d_prime));
        let r = verify_path_witness(&q, &vs, &d, &dp, &Limits::default()).unwrap();
        assert_eq!(r, w.report);
        let r = verify_path_witness(&q, &vs, &d, &d, &Limits::default()).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn squared_edge_on_three_cycle() {
        let schema = PathQuery::infer_schema(["R"]).unwrap();
        let rr = PathQuery::parse("RR", &schema).unwrap();
        let d = crate::qcore::parse_structure("R(a,b)\nR(b,c)\nR(c,a)", Some(&schema)).unwrap();
        let bag = eval_path_query(&rr, &d).unwrap();
        assert_eq!(bag.len(), 3);
        assert!(bag.values().all(One::is_one));
        assert_eq!(bag, eval_path_query_hom(&rr, &d, &Limits::default()).unwrap());
    }
}

//! Homomorphism counting by backtracking.
//!
//! Source elements are split into connected components which are counted
//! independently and multiplied. Within a component, variables are ordered
//! by descending degree and then by the number of facts linking them to
//! already placed variables; each new variable draws its candidates from a
//! fact of the target that agrees with the placed positions.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::query::{ConjunctiveQuery, UnionQuery};
use super::structure::{Elem, Fact, Structure};
use crate::{Error, Limits, Result};

/// Answer multiset of a query with free variables: tuple ↦ multiplicity.
pub type Bag = BTreeMap<Vec<Elem>, BigUint>;

/// Free-variable positions of one component with its grouped counts.
type Part = (Vec<usize>, Vec<(Vec<Elem>, u128)>);

struct Target<'a> {
    b: &'a Structure,
    tuples: Vec<Vec<&'a [Elem]>>,
    by_pos: Vec<HashMap<(usize, Elem), Vec<u32>>>,
    members: Vec<HashSet<&'a [Elem]>>,
}

impl<'a> Target<'a> {
    fn new(b: &'a Structure) -> Self {
        let n = b.schema().len();
        let mut tuples: Vec<Vec<&[Elem]>> = vec![Vec::new(); n];
        let mut by_pos: Vec<HashMap<(usize, Elem), Vec<u32>>> = vec![HashMap::new(); n];
        let mut members: Vec<HashSet<&[Elem]>> = vec![HashSet::new(); n];
        for f in b.facts() {
            let idx = tuples[f.rel].len() as u32;
            for (p, &v) in f.args.iter().enumerate() {
                by_pos[f.rel].entry((p, v)).or_default().push(idx);
            }
            tuples[f.rel].push(&f.args);
            members[f.rel].insert(&f.args);
        }
        Target {
            b,
            tuples,
            by_pos,
            members,
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Fixed(Elem),
    /// Read the candidate at `pos` of tuples of `fact`'s relation.
    Gen { fact: usize, pos: usize },
    All,
}

#[derive(Debug, Clone)]
struct Step {
    var: usize,
    source: Source,
    /// Facts whose arguments are all placed once this step is placed.
    checks: Vec<usize>,
}

struct Search<'a> {
    facts: Vec<&'a Fact>,
    target: &'a Target<'a>,
    assign: Vec<Elem>,
    nodes: u64,
    limit: u64,
}

impl Search<'_> {
    fn candidates(&self, step: &Step) -> Vec<Elem> {
        match step.source {
            Source::Fixed(v) => vec![v],
            Source::All => (0..self.target.b.domain_size() as Elem).collect(),
            Source::Gen { fact, pos } => {
                let f = self.facts[fact];
                let rel = f.rel;
                let placed = f
                    .args
                    .iter()
                    .enumerate()
                    .find(|(_, &a)| self.assign[a as usize] != Elem::MAX);
                let mut out: Vec<Elem> = match placed {
                    Some((p, &a)) => {
                        let key = (p, self.assign[a as usize]);
                        match self.target.by_pos[rel].get(&key) {
                            Some(ids) => ids
                                .iter()
                                .map(|&i| self.target.tuples[rel][i as usize][pos])
                                .collect(),
                            None => Vec::new(),
                        }
                    }
                    None => self.target.tuples[rel].iter().map(|t| t[pos]).collect(),
                };
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }

    fn check(&self, step: &Step) -> bool {
        let mut buf: Vec<Elem> = Vec::new();
        step.checks.iter().all(|&fi| {
            let f = self.facts[fi];
            buf.clear();
            buf.extend(f.args.iter().map(|&a| self.assign[a as usize]));
            self.target.members[f.rel].contains(buf.as_slice())
        })
    }

    fn run(&mut self, steps: &[Step]) -> Result<u128> {
        let Some((step, rest)) = steps.split_first() else {
            return Ok(1);
        };
        let mut total: u128 = 0;
        for v in self.candidates(step) {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Err(Error::limit("homomorphism search nodes", self.limit));
            }
            self.assign[step.var] = v;
            if self.check(step) {
                total += self.run(rest)?;
            }
        }
        self.assign[step.var] = Elem::MAX;
        Ok(total)
    }
}

/// Plans the search for one component of the source.
/// Pinned variables come first, then those in `first`, then the rest.
fn plan(vars: &[usize], facts: &[&Fact], pins: &HashMap<usize, Elem>, first: &[usize]) -> Vec<Step> {
    let n = vars.len();
    let mut placed: HashMap<usize, usize> = HashMap::new();
    let mut degree: HashMap<usize, usize> = HashMap::new();
    let mut touching: HashMap<usize, Vec<usize>> = HashMap::new();
    for (fi, f) in facts.iter().enumerate() {
        let mut seen = Vec::new();
        for &a in &f.args {
            let a = a as usize;
            *degree.entry(a).or_default() += 1;
            if !seen.contains(&a) {
                seen.push(a);
                touching.entry(a).or_default().push(fi);
            }
        }
    }
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut pinned: Vec<usize> = vars.iter().copied().filter(|v| pins.contains_key(v)).collect();
    pinned.sort_unstable();
    for v in pinned {
        placed.insert(v, order.len());
        order.push(v);
    }
    while order.len() < n {
        let early = first.iter().any(|v| vars.contains(v) && !placed.contains_key(v));
        let best = vars
            .iter()
            .copied()
            .filter(|v| !placed.contains_key(v) && (!early || first.contains(v)))
            .max_by_key(|v| {
                let links = touching.get(v).map_or(0, |fs| {
                    fs.iter()
                        .filter(|&&fi| facts[fi].args.iter().any(|a| placed.contains_key(&(*a as usize))))
                        .count()
                });
                (links, degree.get(v).copied().unwrap_or(0), std::cmp::Reverse(*v))
            })
            .expect("unplaced variable remains");
        placed.insert(best, order.len());
        order.push(best);
    }

    order
        .iter()
        .enumerate()
        .map(|(i, &var)| {
            let source = if let Some(&p) = pins.get(&var) {
                Source::Fixed(p)
            } else {
                let fs = touching.get(&var).map(Vec::as_slice).unwrap_or(&[]);
                let linked = fs.iter().copied().find(|&fi| {
                    facts[fi]
                        .args
                        .iter()
                        .any(|&a| placed.get(&(a as usize)).is_some_and(|&j| j < i))
                });
                match linked.or_else(|| fs.first().copied()) {
                    Some(fi) => Source::Gen {
                        fact: fi,
                        pos: facts[fi]
                            .args
                            .iter()
                            .position(|&a| a as usize == var)
                            .expect("fact touches var"),
                    },
                    None => Source::All,
                }
            };
            let checks = touching
                .get(&var)
                .map(|fs| {
                    fs.iter()
                        .copied()
                        .filter(|&fi| facts[fi].args.iter().all(|&a| placed[&(a as usize)] <= i))
                        .collect()
                })
                .unwrap_or_default();
            Step {
                var,
                source,
                checks,
            }
        })
        .collect()
}

fn components(a: &Structure) -> Vec<(Vec<usize>, Vec<&Fact>)> {
    let n = a.domain_size();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for f in a.facts() {
        if let Some((&first, rest)) = f.args.split_first() {
            for &o in rest {
                let (x, y) = (find(&mut parent, first as usize), find(&mut parent, o as usize));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<&Fact>)> = BTreeMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().0.push(v);
    }
    for f in a.facts() {
        if let Some(&first) = f.args.first() {
            let r = find(&mut parent, first as usize);
            groups.get_mut(&r).expect("root exists").1.push(f);
        }
    }
    groups.into_values().collect()
}

fn count_impl(
    a: &Structure,
    b: &Structure,
    pins: &HashMap<usize, Elem>,
    limits: &Limits,
    stop_at_one: bool,
) -> Result<BigUint> {
    a.same_schema(b)?;
    for f in a.facts() {
        if f.args.is_empty() && !b.contains(f.rel, &[]) {
            return Ok(BigUint::zero());
        }
    }
    let target = Target::new(b);
    let mut total = BigUint::one();
    let mut nodes = 0;
    for (vars, facts) in components(a) {
        let steps = plan(&vars, &facts, pins, &[]);
        let mut search = Search {
            facts,
            target: &target,
            assign: vec![Elem::MAX; a.domain_size()],
            nodes,
            limit: limits.max_search_nodes,
        };
        let c = if stop_at_one {
            search.exists(&steps)? as u128
        } else {
            search.run(&steps)?
        };
        nodes = search.nodes;
        if c == 0 {
            return Ok(BigUint::zero());
        }
        total *= BigUint::from(c);
    }
    Ok(total)
}

impl Search<'_> {
    /// Runs the first `depth` steps and counts the completions of each
    /// partial assignment, keyed by the values of those steps' variables.
    fn grouped(
        &mut self,
        steps: &[Step],
        depth: usize,
        key: &mut Vec<Elem>,
        out: &mut HashMap<Vec<Elem>, u128>,
    ) -> Result<()> {
        if key.len() == depth {
            let c = self.run(&steps[depth..])?;
            if c != 0 {
                *out.entry(key.clone()).or_default() += c;
            }
            return Ok(());
        }
        let step = &steps[key.len()];
        for v in self.candidates(step) {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Err(Error::limit("homomorphism search nodes", self.limit));
            }
            self.assign[step.var] = v;
            if self.check(step) {
                key.push(v);
                self.grouped(steps, depth, key, out)?;
                key.pop();
            }
        }
        self.assign[step.var] = Elem::MAX;
        Ok(())
    }

    fn exists(&mut self, steps: &[Step]) -> Result<bool> {
        let Some((step, rest)) = steps.split_first() else {
            return Ok(true);
        };
        for v in self.candidates(step) {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Err(Error::limit("homomorphism search nodes", self.limit));
            }
            self.assign[step.var] = v;
            if self.check(step) && self.exists(rest)? {
                self.assign[step.var] = Elem::MAX;
                return Ok(true);
            }
        }
        self.assign[step.var] = Elem::MAX;
        Ok(false)
    }
}

/// Number of homomorphisms `a → b`.
pub fn hom_count(a: &Structure, b: &Structure, limits: &Limits) -> Result<BigUint> {
    count_impl(a, b, &HashMap::new(), limits, false)
}

/// Whether some homomorphism `a → b` exists.
pub fn hom_exists(a: &Structure, b: &Structure, limits: &Limits) -> Result<bool> {
    Ok(!count_impl(a, b, &HashMap::new(), limits, true)?.is_zero())
}

/// Number of homomorphisms `a → b` sending each pinned element `x` to `y`
/// for every pair `(x, y)` in `pins`.
pub fn hom_count_pinned(
    a: &Structure,
    b: &Structure,
    pins: &[(Elem, Elem)],
    limits: &Limits,
) -> Result<BigUint> {
    let mut map = HashMap::new();
    for &(x, y) in pins {
        if x as usize >= a.domain_size() || y as usize >= b.domain_size() {
            return Err(Error::Invalid("pinned element out of range".into()));
        }
        if map.insert(x as usize, y).is_some_and(|old| old != y) {
            return Ok(BigUint::zero());
        }
    }
    count_impl(a, b, &map, limits, false)
}

/// `q(D) = |hom(body(q), D)|` for a boolean query.
pub fn eval_boolean_cq(q: &ConjunctiveQuery, d: &Structure, limits: &Limits) -> Result<BigUint> {
    if !q.is_boolean() {
        return Err(Error::Precondition(format!("`{}` is not boolean", q.name())));
    }
    hom_count(&q.frozen_body(), d, limits)
}

/// Bag of answers of `q` on `d`. Free variables range over the whole domain
/// of `d`, isolated elements included.
pub fn eval_cq_bag(q: &ConjunctiveQuery, d: &Structure, limits: &Limits) -> Result<Bag> {
    let body = q.body_with_all_vars();
    let free: Vec<usize> = q.free_vars().to_vec();
    let mut out = Bag::new();
    if free.is_empty() {
        let c = hom_count(&body, d, limits)?;
        if !c.is_zero() {
            out.insert(Vec::new(), c);
        }
        return Ok(out);
    }
    body.same_schema(d)?;
    for f in body.facts() {
        if f.args.is_empty() && !d.contains(f.rel, &[]) {
            return Ok(out);
        }
    }
    let mut distinct = free.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let target = Target::new(d);
    let mut nodes = 0;
    let mut scalar = BigUint::one();
    // per component: its free variables and the counts per assignment
    let mut parts: Vec<Part> = Vec::new();
    for (vars, facts) in components(&body) {
        let fv: Vec<usize> = distinct.iter().copied().filter(|v| vars.contains(v)).collect();
        let steps = plan(&vars, &facts, &HashMap::new(), &fv);
        let mut search = Search {
            facts,
            target: &target,
            assign: vec![Elem::MAX; body.domain_size()],
            nodes,
            limit: limits.max_search_nodes,
        };
        if fv.is_empty() {
            let c = search.run(&steps)?;
            nodes = search.nodes;
            if c == 0 {
                return Ok(out);
            }
            scalar *= BigUint::from(c);
            continue;
        }
        let mut groups = HashMap::new();
        search.grouped(&steps, fv.len(), &mut Vec::new(), &mut groups)?;
        nodes = search.nodes;
        if groups.is_empty() {
            return Ok(out);
        }
        let order: Vec<usize> = steps[..fv.len()].iter().map(|s| s.var).collect();
        parts.push((order, groups.into_iter().collect()));
    }
    let mut value = vec![Elem::MAX; body.domain_size()];
    combine_parts(&parts, 0, &mut value, &scalar, &free, &mut out);
    Ok(out)
}

fn combine_parts(
    parts: &[Part],
    i: usize,
    value: &mut Vec<Elem>,
    acc: &BigUint,
    free: &[usize],
    out: &mut Bag,
) {
    let Some((order, groups)) = parts.get(i) else {
        let tuple = free.iter().map(|&v| value[v]).collect();
        out.insert(tuple, acc.clone());
        return;
    };
    for (key, c) in groups {
        for (&v, &e) in order.iter().zip(key) {
            value[v] = e;
        }
        combine_parts(parts, i + 1, value, &(acc * BigUint::from(*c)), free, out);
    }
}

/// Bag union: the sum of the disjuncts' counts.
pub fn eval_ucq(u: &UnionQuery, d: &Structure, limits: &Limits) -> Result<BigUint> {
    let mut total = BigUint::zero();
    for q in u.disjuncts() {
        total += eval_boolean_cq(q, d, limits)?;
    }
    Ok(total)
}

//! Structures held as expressions over `+`, `×` and powers.
//!
//! Counts of connected patterns are computed from the expression with the
//! sum, product and power identities, so structures far too large to build
//! can still be evaluated exactly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::qcore::{
    all_loops, combine, connected_components, hom_count, parse_structure, power, product, Schema,
    Structure,
};
use crate::{Error, Limits, Result};

#[derive(Debug)]
pub enum Node {
    Base(Structure),
    /// The one-element structure with every loop, `A⁰`.
    AllLoops,
    Sum(Vec<(BigUint, Symbolic)>),
    Product(Symbolic, Symbolic),
    Power(Symbolic, u32),
}

#[derive(Debug, Clone)]
pub struct Symbolic {
    schema: Arc<Schema>,
    node: Arc<Node>,
}

impl Symbolic {
    pub fn base(s: Structure) -> Self {
        Symbolic {
            schema: s.schema().clone(),
            node: Arc::new(Node::Base(s)),
        }
    }

    pub fn all_loops(schema: Arc<Schema>) -> Self {
        Symbolic {
            schema,
            node: Arc::new(Node::AllLoops),
        }
    }

    pub fn sum(schema: Arc<Schema>, terms: Vec<(BigUint, Symbolic)>) -> Result<Self> {
        for (_, t) in &terms {
            if t.schema != schema {
                return Err(Error::SchemaMismatch);
            }
        }
        Ok(Symbolic {
            schema,
            node: Arc::new(Node::Sum(terms)),
        })
    }

    pub fn product(a: &Symbolic, b: &Symbolic) -> Result<Self> {
        if a.schema != b.schema {
            return Err(Error::SchemaMismatch);
        }
        Ok(Symbolic {
            schema: a.schema.clone(),
            node: Arc::new(Node::Product(a.clone(), b.clone())),
        })
    }

    pub fn power(a: &Symbolic, t: u32) -> Self {
        Symbolic {
            schema: a.schema.clone(),
            node: Arc::new(Node::Power(a.clone(), t)),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    fn id(&self) -> usize {
        Arc::as_ptr(&self.node) as usize
    }

    /// Terms of a top-level sum, if this is one.
    pub fn sum_terms(&self) -> Option<&[(BigUint, Symbolic)]> {
        match &*self.node {
            Node::Sum(t) => Some(t),
            _ => None,
        }
    }

    /// Upper bound on the number of domain elements.
    pub fn domain_bound(&self) -> BigUint {
        match &*self.node {
            Node::Base(s) => BigUint::from(s.domain_size()),
            Node::AllLoops => BigUint::one(),
            Node::Sum(ts) => ts.iter().map(|(c, t)| c * t.domain_bound()).sum(),
            Node::Product(a, b) => a.domain_bound() * b.domain_bound(),
            Node::Power(a, t) => Pow::pow(a.domain_bound(), *t),
        }
    }

    /// `|hom(w, self)|`.
    pub fn count(&self, w: &Structure, limits: &Limits) -> Result<BigUint> {
        Counter::new(limits).count(self, w)
    }

    /// Builds the structure, refusing when the domain bound exceeds
    /// `max_materialized_size`.
    pub fn materialize(&self, limits: &Limits) -> Result<Structure> {
        let bound = self.domain_bound();
        if bound > BigUint::from(limits.max_materialized_size) {
            return Err(Error::limit(
                "materialized witness size",
                limits.max_materialized_size,
            ));
        }
        let inner = Limits {
            max_domain_size: limits.max_materialized_size,
            ..limits.clone()
        };
        let mut memo = HashMap::new();
        self.build(&inner, &mut memo)
    }

    fn build(&self, limits: &Limits, memo: &mut HashMap<usize, Structure>) -> Result<Structure> {
        if let Some(s) = memo.get(&self.id()) {
            return Ok(s.clone());
        }
        let s = match &*self.node {
            Node::Base(s) => s.clone(),
            Node::AllLoops => all_loops(&self.schema),
            Node::Sum(ts) => {
                let mut coeffs = Vec::new();
                let mut parts = Vec::new();
                for (c, t) in ts {
                    let c = c
                        .to_u64()
                        .ok_or_else(|| Error::limit("sum coefficient", u64::MAX))?;
                    coeffs.push(c);
                    parts.push(t.build(limits, memo)?);
                }
                if parts.is_empty() {
                    Structure::empty(self.schema.clone())
                } else {
                    combine(&coeffs, &parts, limits)?
                }
            }
            Node::Product(a, b) => product(&a.build(limits, memo)?, &b.build(limits, memo)?, limits)?,
            Node::Power(a, t) => power(&a.build(limits, memo)?, *t, limits)?,
        };
        memo.insert(self.id(), s.clone());
        Ok(s)
    }
}

/// Memoized symbolic counting. Patterns are split into connected
/// components; each (node, component) pair is counted once.
pub struct Counter<'l> {
    limits: &'l Limits,
    comps: Vec<Structure>,
    memo: HashMap<(usize, usize), BigUint>,
}

impl<'l> Counter<'l> {
    pub fn new(limits: &'l Limits) -> Self {
        Counter {
            limits,
            comps: Vec::new(),
            memo: HashMap::new(),
        }
    }

    pub fn count(&mut self, s: &Symbolic, w: &Structure) -> Result<BigUint> {
        if w.schema() != s.schema() {
            return Err(Error::SchemaMismatch);
        }
        if w.has_isolated() {
            return Err(Error::Unsupported(
                "symbolic counting of patterns with isolated elements".into(),
            ));
        }
        let mut total = BigUint::one();
        for c in connected_components(w) {
            let id = match self.comps.iter().position(|x| *x == c) {
                Some(i) => i,
                None => {
                    self.comps.push(c);
                    self.comps.len() - 1
                }
            };
            let n = self.connected(s, id)?;
            if n.is_zero() {
                return Ok(n);
            }
            total *= n;
        }
        Ok(total)
    }

    fn connected(&mut self, s: &Symbolic, wid: usize) -> Result<BigUint> {
        if let Some(n) = self.memo.get(&(s.id(), wid)) {
            return Ok(n.clone());
        }
        let n = match &*s.node {
            Node::Base(b) => hom_count(&self.comps[wid], b, self.limits)?,
            Node::AllLoops => BigUint::one(),
            Node::Sum(ts) => {
                let nullary = self.comps[wid].domain_size() == 0;
                let mut acc = BigUint::zero();
                for (c, t) in ts {
                    if c.is_zero() {
                        continue;
                    }
                    let x = self.connected(t, wid)?;
                    if nullary {
                        // nullary facts are shared by all summands
                        if !x.is_zero() {
                            acc = BigUint::one();
                            break;
                        }
                    } else {
                        acc += c * x;
                    }
                }
                acc
            }
            Node::Product(a, b) => {
                let x = self.connected(a, wid)?;
                if x.is_zero() {
                    x
                } else {
                    x * self.connected(b, wid)?
                }
            }
            Node::Power(a, t) => Pow::pow(self.connected(a, wid)?, *t),
        };
        self.memo.insert((s.id(), wid), n.clone());
        Ok(n)
    }
}

/// Serialized form: a node table in which children precede parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicDoc {
    pub nodes: Vec<NodeDoc>,
    pub root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum NodeDoc {
    Base { facts: Vec<String> },
    AllLoops,
    Sum { terms: Vec<(String, usize)> },
    Product { left: usize, right: usize },
    Power { base: usize, exponent: u32 },
}

impl Symbolic {
    pub fn to_doc(&self) -> SymbolicDoc {
        let mut nodes = Vec::new();
        let mut ids = HashMap::new();
        let root = self.emit(&mut nodes, &mut ids);
        SymbolicDoc { nodes, root }
    }

    fn emit(&self, nodes: &mut Vec<NodeDoc>, ids: &mut HashMap<usize, usize>) -> usize {
        if let Some(&i) = ids.get(&self.id()) {
            return i;
        }
        let doc = match &*self.node {
            Node::Base(s) => NodeDoc::Base {
                facts: s.anonymized().to_fact_lines(),
            },
            Node::AllLoops => NodeDoc::AllLoops,
            Node::Sum(ts) => NodeDoc::Sum {
                terms: ts
                    .iter()
                    .map(|(c, t)| (c.to_string(), t.emit(nodes, ids)))
                    .collect(),
            },
            Node::Product(a, b) => {
                let left = a.emit(nodes, ids);
                let right = b.emit(nodes, ids);
                NodeDoc::Product { left, right }
            }
            Node::Power(a, t) => NodeDoc::Power {
                base: a.emit(nodes, ids),
                exponent: *t,
            },
        };
        nodes.push(doc);
        ids.insert(self.id(), nodes.len() - 1);
        nodes.len() - 1
    }

    pub fn from_doc(doc: &SymbolicDoc, schema: &Arc<Schema>) -> Result<Self> {
        let mut built: Vec<Symbolic> = Vec::with_capacity(doc.nodes.len());
        let get = |built: &Vec<Symbolic>, i: usize| {
            built
                .get(i)
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("node {i} referenced before definition")))
        };
        for n in &doc.nodes {
            let s = match n {
                NodeDoc::Base { facts } => {
                    let text = facts.join("\n");
                    let s = parse_structure(&text, Some(schema))?;
                    Symbolic::base(s)
                }
                NodeDoc::AllLoops => Symbolic::all_loops(schema.clone()),
                NodeDoc::Sum { terms } => {
                    let mut ts = Vec::new();
                    for (c, i) in terms {
                        let c = BigUint::from_str(c)
                            .map_err(|_| Error::Invalid(format!("bad coefficient `{c}`")))?;
                        ts.push((c, get(&built, *i)?));
                    }
                    Symbolic::sum(schema.clone(), ts)?
                }
                NodeDoc::Product { left, right } => {
                    Symbolic::product(&get(&built, *left)?, &get(&built, *right)?)?
                }
                NodeDoc::Power { base, exponent } => {
                    Symbolic::power(&get(&built, *base)?, *exponent)
                }
            };
            built.push(s);
        }
        get(&built, doc.root)
    }
}

impl fmt::Display for Symbolic {
    /// Compact rendering; base structures print as their fact count.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Base(s) if s.fact_count() == 0 => write!(f, "∅"),
            Node::Base(s) => write!(f, "[{}]", s.to_fact_lines().join(" ")),
            Node::AllLoops => write!(f, "A⁰"),
            Node::Sum(ts) => {
                let parts: Vec<String> = ts.iter().map(|(c, t)| format!("{c}·{t}")).collect();
                write!(f, "({})", parts.join(" + "))
            }
            Node::Product(a, b) => write!(f, "({a} × {b})"),
            Node::Power(a, t) => write!(f, "{a}^{t}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::parse_structure;

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::new([("R", 2), ("S", 2)]).unwrap())
    }

    fn st(t: &str) -> Structure {
        parse_structure(t, Some(&schema())).unwrap()
    }

    fn expr() -> Symbolic {
        let a = Symbolic::base(st("R(a,b)\nR(b,c)\nS(c,a)"));
        let b = Symbolic::base(st("R(x,x)\nS(x,y)"));
        let s2 = Symbolic::sum(schema(), vec![(BigUint::from(2u8), a.clone()), (BigUint::one(), b)])
            .unwrap();
        let p = Symbolic::product(&Symbolic::power(&s2, 2), &a).unwrap();
        Symbolic::sum(
            schema(),
            vec![
                (BigUint::from(3u8), p),
                (BigUint::one(), Symbolic::all_loops(schema())),
            ],
        )
        .unwrap()
    }

    #[test]
    fn symbolic_counts_match_materialized() {
        let e = expr();
        let l = Limits::default();
        let d = e.materialize(&l).unwrap();
        for w in ["R(x,y)", "R(x,y)\nR(y,z)", "R(x,x)", "S(x,y)\nR(y,x)", "R(x,y)\nS(u,v)"] {
            let w = st(w);
            assert_eq!(e.count(&w, &l).unwrap(), hom_count(&w, &d, &l).unwrap(), "{w}");
        }
        assert!(BigUint::from(d.domain_size()) <= e.domain_bound());
    }

    #[test]
    fn doc_round_trip_preserves_counts() {
        let e = expr();
        let doc = e.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back = Symbolic::from_doc(&serde_json::from_str(&json).unwrap(), &schema()).unwrap();
        assert_eq!(back.to_doc(), doc);
        let l = Limits::default();
        let w = st("R(x,y)\nR(y,z)");
        assert_eq!(back.count(&w, &l).unwrap(), e.count(&w, &l).unwrap());
    }

    #[test]
    fn huge_powers_stay_symbolic() {
        let a = Symbolic::base(st("R(a,b)\nR(b,a)\nR(a,a)"));
        let big = Symbolic::power(&a, 200);
        let l = Limits::default();
        assert!(big.materialize(&l).unwrap_err().is_limit());
        let w = st("R(x,y)");
        assert_eq!(big.count(&w, &l).unwrap(), Pow::pow(BigUint::from(3u8), 200u32));
    }
}

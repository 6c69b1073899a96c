//! Polynomial equations over ℕ as boolean UCQ determinacy instances.
//!
//! The schema has nullary `H`, `C` and unary `X₁ … X_n`. The query is `H`;
//! the views are `H ∨ C`, `∃y Xᵢ(y)` for each unknown, and `Ψ_P ∨ Ψ_N`,
//! where `Ψ_P` repeats `Φ_m ∧ H` `c(m)` times for every positive monomial and
//! `Ψ_N` repeats `Φ_m ∧ C` `|c(m)|` times for every negative one. The views
//! determine `q` iff the equation has no solution in ℕ.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::qcore::{eval_ucq, Atom, ConjunctiveQuery, Elem, Fact, Schema, Structure, UnionQuery};
use crate::{Error, Limits, Result};

/// `c(m) · x₁^{m(x₁)} ⋯`; unknowns are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    coefficient: BigInt,
    degrees: BTreeMap<usize, u32>,
}

impl Monomial {
    pub fn new(coefficient: BigInt, degrees: BTreeMap<usize, u32>) -> Result<Self> {
        if coefficient.is_zero() {
            return Err(Error::Invalid("monomial coefficient must be nonzero".into()));
        }
        if degrees.contains_key(&0) {
            return Err(Error::Invalid("unknowns are numbered from x1".into()));
        }
        let degrees = degrees.into_iter().filter(|&(_, d)| d > 0).collect();
        Ok(Monomial {
            coefficient,
            degrees,
        })
    }

    pub fn coefficient(&self) -> &BigInt {
        &self.coefficient
    }

    /// `m(xᵢ)`; zero when `xᵢ` does not occur.
    pub fn degree(&self, i: usize) -> u32 {
        self.degrees.get(&i).copied().unwrap_or(0)
    }

    pub fn degrees(&self) -> &BTreeMap<usize, u32> {
        &self.degrees
    }

    pub fn max_unknown(&self) -> usize {
        self.degrees.keys().next_back().copied().unwrap_or(0)
    }

    /// Value at `x_i = values[i - 1]`; missing values count as 0.
    pub fn value(&self, values: &[BigUint]) -> BigInt {
        let mut acc = self.coefficient.clone();
        for (&i, &d) in &self.degrees {
            let x = values.get(i - 1).cloned().unwrap_or_default();
            acc *= BigInt::from(x.pow(d));
        }
        acc
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient.is_positive() {
            write!(f, "+")?;
        }
        write!(f, "{}", self.coefficient)?;
        for (i, d) in &self.degrees {
            if *d == 1 {
                write!(f, " x{i}")?;
            } else {
                write!(f, " x{i}^{d}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct H10Instance {
    monomials: Vec<Monomial>,
    unknowns: usize,
}

impl H10Instance {
    pub fn new(monomials: Vec<Monomial>) -> Result<Self> {
        if monomials.is_empty() {
            return Err(Error::Unsupported("instance has no monomials".into()));
        }
        let unknowns = monomials.iter().map(Monomial::max_unknown).max().unwrap_or(0);
        Ok(H10Instance {
            monomials,
            unknowns,
        })
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Number of unknowns `n`; the unknowns are `x1 … xn`.
    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn evaluate(&self, values: &[BigUint]) -> BigInt {
        self.monomials.iter().map(|m| m.value(values)).sum()
    }

    pub fn is_solution(&self, values: &[BigUint]) -> bool {
        values.len() == self.unknowns && self.evaluate(values).is_zero()
    }
}

impl fmt::Display for H10Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.monomials {
            writeln!(f, "{m}")?;
        }
        Ok(())
    }
}

fn syntax(line: usize, message: String) -> Error {
    Error::Syntax {
        line,
        column: 1,
        message,
    }
}

/// One monomial per line: `<signed-int> [x<i>^<d>]...`. Blank lines and
/// lines starting with `#` are skipped. `x<i>` alone means degree 1.
pub fn parse_instance(text: &str) -> Result<H10Instance> {
    let mut monomials = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("nonempty line");
        let coefficient: BigInt = head
            .strip_prefix('+')
            .unwrap_or(head)
            .parse()
            .map_err(|_| syntax(ln + 1, format!("expected an integer coefficient, found `{head}`")))?;
        let mut degrees: BTreeMap<usize, u32> = BTreeMap::new();
        for tok in tokens {
            let bad = || syntax(ln + 1, format!("expected `x<i>^<d>`, found `{tok}`"));
            let rest = tok.strip_prefix('x').ok_or_else(bad)?;
            let (idx, deg) = match rest.split_once('^') {
                Some((i, d)) => (i, d.parse::<u32>().map_err(|_| bad())?),
                None => (rest, 1),
            };
            let idx: usize = idx.parse().map_err(|_| bad())?;
            if idx == 0 {
                return Err(syntax(ln + 1, "unknowns are numbered from x1".into()));
            }
            *degrees.entry(idx).or_insert(0) += deg;
        }
        monomials.push(Monomial::new(coefficient, degrees).map_err(|e| syntax(ln + 1, e.to_string()))?);
    }
    H10Instance::new(monomials)
}

/// `x1=3,x2=0` or `3,0`.
pub fn parse_solution(text: &str, unknowns: usize) -> Result<Vec<BigUint>> {
    let mut out = vec![None; unknowns];
    for (pos, part) in text.split(',').map(str::trim).filter(|p| !p.is_empty()).enumerate() {
        let (idx, val) = match part.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                let i: usize = k
                    .strip_prefix('x')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Invalid(format!("bad unknown `{k}`")))?;
                (i, v.trim())
            }
            None => (pos + 1, part),
        };
        if idx == 0 || idx > unknowns {
            return Err(Error::Invalid(format!("unknown x{idx} is not in the instance")));
        }
        let v: BigUint = val
            .parse()
            .map_err(|_| Error::Invalid(format!("bad natural number `{val}`")))?;
        out[idx - 1] = Some(v);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Invalid(format!("no value for x{}", i + 1))))
        .collect()
}

pub const H: usize = 0;
pub const C: usize = 1;

/// Relation id of `X_i`.
pub fn x_rel(i: usize) -> usize {
    i + 1
}

pub fn schema_for(unknowns: usize) -> Arc<Schema> {
    let mut rels = vec![("H".to_string(), 0), ("C".to_string(), 0)];
    rels.extend((1..=unknowns).map(|i| (format!("X{i}"), 1)));
    Arc::new(Schema::new(rels).expect("distinct relation names"))
}

/// `Φ_m`, optionally conjoined with a nullary atom.
pub fn phi(m: &Monomial, schema: &Arc<Schema>, with: Option<usize>, name: &str) -> Result<ConjunctiveQuery> {
    let mut vars = Vec::new();
    let mut atoms = Vec::new();
    for (&i, &d) in m.degrees() {
        for j in 1..=d {
            vars.push(format!("y{i}_{j}"));
            atoms.push(Atom {
                rel: x_rel(i),
                args: vec![vars.len() - 1],
            });
        }
    }
    if let Some(r) = with {
        atoms.push(Atom { rel: r, args: vec![] });
    }
    ConjunctiveQuery::new(name, schema.clone(), vars, Vec::new(), atoms)
}

#[derive(Debug, Clone)]
pub struct Encoding {
    pub schema: Arc<Schema>,
    pub q: UnionQuery,
    pub v1: UnionQuery,
    pub vx: Vec<UnionQuery>,
    pub vi: UnionQuery,
    pub psi_p: Vec<ConjunctiveQuery>,
    pub psi_n: Vec<ConjunctiveQuery>,
}

impl Encoding {
    /// `V₁, V_{x₁} … V_{x_n}, V_I`.
    pub fn views(&self) -> Vec<UnionQuery> {
        let mut out = vec![self.v1.clone()];
        out.extend(self.vx.iter().cloned());
        out.push(self.vi.clone());
        out
    }
}

fn copies(c: &BigInt) -> Result<usize> {
    c.abs()
        .to_usize()
        .filter(|&n| n <= 1 << 20)
        .ok_or_else(|| Error::limit("monomial coefficient", 1 << 20))
}

pub fn encode(inst: &H10Instance) -> Result<Encoding> {
    let schema = schema_for(inst.unknowns());
    let nullary = |name: &str, r: usize| {
        ConjunctiveQuery::new(name, schema.clone(), vec![], vec![], vec![Atom { rel: r, args: vec![] }])
    };
    let q = UnionQuery::single(nullary("q", H)?);
    let v1 = UnionQuery::new("v1", vec![nullary("v1", H)?, nullary("v1", C)?])?;
    let vx = (1..=inst.unknowns())
        .map(|i| {
            let name = format!("vx{i}");
            let cq = ConjunctiveQuery::new(
                name.as_str(),
                schema.clone(),
                vec!["y".into()],
                vec![],
                vec![Atom {
                    rel: x_rel(i),
                    args: vec![0],
                }],
            )?;
            Ok(UnionQuery::single(cq))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut psi_p = Vec::new();
    let mut psi_n = Vec::new();
    for m in inst.monomials() {
        let (list, with) = match m.coefficient().sign() {
            Sign::Plus => (&mut psi_p, H),
            _ => (&mut psi_n, C),
        };
        let cq = phi(m, &schema, Some(with), "vi")?;
        for _ in 0..copies(m.coefficient())? {
            list.push(cq.clone());
        }
    }
    let vi = UnionQuery::new("vi", psi_p.iter().chain(&psi_n).cloned().collect())?;
    Ok(Encoding {
        schema,
        q,
        v1,
        vx,
        vi,
        psi_p,
        psi_n,
    })
}

/// `D_{Xᵢ}` for each unknown.
pub fn x_counts(d: &Structure, unknowns: usize) -> Vec<BigUint> {
    let counts = d.relation_counts();
    (1..=unknowns)
        .map(|i| BigUint::from(counts.get(x_rel(i)).copied().unwrap_or(0)))
        .collect()
}

fn nullary_count(d: &Structure, r: usize) -> BigInt {
    BigInt::from(d.relation_counts().get(r).copied().unwrap_or(0))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiCheck {
    pub monomial_value: String,
    pub coefficient: String,
    pub phi_count: String,
    pub holds: bool,
}

/// `m_D = c(m) · Φ_m(D)`.
pub fn phi_count_identity_check(m: &Monomial, d: &Structure, limits: &Limits) -> Result<PhiCheck> {
    let unknowns = d.schema().len().saturating_sub(2);
    if m.max_unknown() > unknowns {
        return Err(Error::SchemaMismatch);
    }
    let value = m.value(&x_counts(d, unknowns));
    let cq = phi(m, d.schema(), None, "phi")?;
    let count = eval_ucq(&UnionQuery::single(cq), d, limits)?;
    let holds = value == m.coefficient() * BigInt::from(count.clone());
    Ok(PhiCheck {
        monomial_value: value.to_string(),
        coefficient: m.coefficient().to_string(),
        phi_count: count.to_string(),
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiCheck {
    pub h: String,
    pub c: String,
    pub positive_sum: String,
    pub psi_p: String,
    pub negative_sum: String,
    pub psi_n: String,
    pub holds_p: bool,
    pub holds_n: bool,
}

fn eval_list(list: &[ConjunctiveQuery], d: &Structure, limits: &Limits) -> Result<BigUint> {
    if list.is_empty() {
        return Ok(BigUint::zero());
    }
    eval_ucq(&UnionQuery::new("psi", list.to_vec())?, d, limits)
}

/// `D_H · Σ_{m∈P} m_D = Ψ_P(D)` and `D_C · Σ_{m∈N} m_D = −Ψ_N(D)`.
pub fn psi_identity_check(
    inst: &H10Instance,
    enc: &Encoding,
    d: &Structure,
    limits: &Limits,
) -> Result<PsiCheck> {
    if d.schema() != &enc.schema {
        return Err(Error::SchemaMismatch);
    }
    let xs = x_counts(d, inst.unknowns());
    let (h, c) = (nullary_count(d, H), nullary_count(d, C));
    let pos: BigInt = inst
        .monomials()
        .iter()
        .filter(|m| m.coefficient().is_positive())
        .map(|m| m.value(&xs))
        .sum();
    let neg: BigInt = inst
        .monomials()
        .iter()
        .filter(|m| m.coefficient().is_negative())
        .map(|m| m.value(&xs))
        .sum();
    let psi_p = BigInt::from(eval_list(&enc.psi_p, d, limits)?);
    let psi_n = BigInt::from(eval_list(&enc.psi_n, d, limits)?);
    Ok(PsiCheck {
        holds_p: &h * &pos == psi_p,
        holds_n: &c * &neg == -&psi_n,
        h: h.to_string(),
        c: c.to_string(),
        positive_sum: pos.to_string(),
        psi_p: psi_p.to_string(),
        negative_sum: neg.to_string(),
        psi_n: psi_n.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcqRow {
    pub name: String,
    pub d: String,
    pub d_prime: String,
    pub expected: String,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct H10Report {
    pub passed: bool,
    pub views: Vec<UcqRow>,
    pub query_d: String,
    pub query_d_prime: String,
    pub swap_pattern: bool,
    /// Hom counts match the closed forms derived from relation counts.
    pub routes_agree: bool,
}

#[derive(Debug, Clone)]
pub struct H10Witness {
    pub d: Structure,
    pub d_prime: Structure,
    pub report: H10Report,
}

/// `D = {H()} ∪ X-facts` and `D′ = {C()} ∪ X-facts`, with `aᵢ` distinct
/// `Xᵢ`-elements per unknown.
pub fn witness_from_solution(
    inst: &H10Instance,
    solution: &[BigUint],
    limits: &Limits,
) -> Result<H10Witness> {
    if solution.len() != inst.unknowns() {
        return Err(Error::DimensionMismatch {
            expected: inst.unknowns(),
            found: solution.len(),
        });
    }
    if !inst.is_solution(solution) {
        return Err(Error::Precondition(format!(
            "not a solution: the polynomial evaluates to {}",
            inst.evaluate(solution)
        )));
    }
    let max = usize::try_from(limits.max_domain_size).unwrap_or(usize::MAX);
    let sizes: Vec<usize> = solution
        .iter()
        .map(|a| a.to_usize().filter(|&n| n <= max))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::limit("witness domain size", limits.max_domain_size))?;
    let total: usize = sizes.iter().sum();
    if total > max {
        return Err(Error::limit("witness domain size", limits.max_domain_size));
    }
    let enc = encode(inst)?;
    let mut names = Vec::with_capacity(total);
    let mut xfacts = Vec::with_capacity(total);
    for (i, &a) in sizes.iter().enumerate() {
        for j in 0..a {
            xfacts.push(Fact::new(x_rel(i + 1), vec![names.len() as Elem]));
            names.push(format!("a{}_{}", i + 1, j + 1));
        }
    }
    let build = |r: usize| {
        let mut facts = xfacts.clone();
        facts.push(Fact::new(r, vec![]));
        Structure::from_facts(enc.schema.clone(), total, Some(names.clone()), facts)
    };
    let d = build(H)?;
    let d_prime = build(C)?;
    let report = verify_h10_witness(inst, &enc, &d, &d_prime, limits)?;
    Ok(H10Witness { d, d_prime, report })
}

/// Closed form of a view on a structure, from relation counts alone.
fn predicted(inst: &H10Instance, d: &Structure) -> Vec<BigInt> {
    let xs = x_counts(d, inst.unknowns());
    let (h, c) = (nullary_count(d, H), nullary_count(d, C));
    let mut out = vec![&h + &c];
    out.extend(xs.iter().map(|x| BigInt::from(x.clone())));
    let vi: BigInt = inst
        .monomials()
        .iter()
        .map(|m| {
            let v = m.value(&xs);
            if m.coefficient().is_positive() {
                &h * v
            } else {
                -(&c * v)
            }
        })
        .sum();
    out.push(vi);
    out
}

/// `D_X = D′_X`, `D_H = D′_C`, `D_C = D′_H`, `D_H ≠ D_C`.
pub fn swap_pattern(d: &Structure, d_prime: &Structure, unknowns: usize) -> bool {
    let (h, c) = (nullary_count(d, H), nullary_count(d, C));
    let (h2, c2) = (nullary_count(d_prime, H), nullary_count(d_prime, C));
    x_counts(d, unknowns) == x_counts(d_prime, unknowns) && h == c2 && c == h2 && h != c
}

pub fn verify_h10_witness(
    inst: &H10Instance,
    enc: &Encoding,
    d: &Structure,
    d_prime: &Structure,
    limits: &Limits,
) -> Result<H10Report> {
    let views = enc.views();
    let (pa, pb) = (predicted(inst, d), predicted(inst, d_prime));
    let mut routes_agree = true;
    let mut rows = Vec::new();
    for (i, v) in views.iter().enumerate() {
        let a = eval_ucq(v, d, limits)?;
        let b = eval_ucq(v, d_prime, limits)?;
        routes_agree &= BigInt::from(a.clone()) == pa[i] && BigInt::from(b.clone()) == pb[i];
        rows.push(UcqRow {
            name: v.name().to_string(),
            equal: a == b,
            expected: pa[i].to_string(),
            d: a.to_string(),
            d_prime: b.to_string(),
        });
    }
    let qa = eval_ucq(&enc.q, d, limits)?;
    let qb = eval_ucq(&enc.q, d_prime, limits)?;
    routes_agree &= BigInt::from(qa.clone()) == nullary_count(d, H)
        && BigInt::from(qb.clone()) == nullary_count(d_prime, H);
    let swap = swap_pattern(d, d_prime, inst.unknowns());
    let passed = rows.iter().all(|r| r.equal) && qa != qb && swap && routes_agree;
    Ok(H10Report {
        passed,
        views: rows,
        query_d: qa.to_string(),
        query_d_prime: qb.to_string(),
        swap_pattern: swap,
        routes_agree,
    })
}

/// Structure with the given nullary flags and `Xᵢ`-counts.
pub fn structure_from_counts(schema: &Arc<Schema>, h: bool, c: bool, xs: &[usize]) -> Result<Structure> {
    let mut facts = Vec::new();
    let mut next: Elem = 0;
    for (i, &a) in xs.iter().enumerate() {
        for _ in 0..a {
            facts.push(Fact::new(x_rel(i + 1), vec![next]));
            next += 1;
        }
    }
    if h {
        facts.push(Fact::new(H, vec![]));
    }
    if c {
        facts.push(Fact::new(C, vec![]));
    }
    Structure::from_facts(schema.clone(), next as usize, None, facts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapSurvey {
    pub structures: usize,
    pub agreeing_pairs: usize,
    pub pattern_holds: bool,
    /// `X`-counts of every agreeing pair; each is a solution.
    pub solutions: Vec<Vec<usize>>,
}

/// Evaluates every view on all structures with `Xᵢ`-counts up to
/// `max_count` (one per isomorphism type) and checks the swap pattern on
/// every distinct pair with equal view answers.
pub fn survey_swap_pattern(inst: &H10Instance, max_count: usize, limits: &Limits) -> Result<SwapSurvey> {
    let enc = encode(inst)?;
    let views = enc.views();
    let n = inst.unknowns();
    let mut all = Vec::new();
    let mut xs = vec![0usize; n];
    loop {
        for (h, c) in [(false, false), (true, false), (false, true), (true, true)] {
            let d = structure_from_counts(&enc.schema, h, c, &xs)?;
            let answers = views
                .iter()
                .map(|v| eval_ucq(v, &d, limits))
                .collect::<Result<Vec<_>>>()?;
            all.push((d, answers));
        }
        let mut k = 0;
        while k < n && xs[k] == max_count {
            xs[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        xs[k] += 1;
    }
    let mut pairs = 0;
    let mut holds = true;
    let mut solutions = Vec::new();
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i != j && all[i].1 == all[j].1 {
                pairs += 1;
                holds &= swap_pattern(&all[i].0, &all[j].0, n);
                let x: Vec<usize> = x_counts(&all[i].0, n)
                    .iter()
                    .map(|v| v.to_usize().unwrap_or(usize::MAX))
                    .collect();
                if !solutions.contains(&x) {
                    solutions.push(x);
                }
            }
        }
    }
    solutions.sort();
    Ok(SwapSurvey {
        structures: all.len(),
        agreeing_pairs: pairs,
        pattern_holds: holds,
        solutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_structure, rng};
    use crate::oracle;

    fn nat(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn parse_and_display() {
        let inst = parse_instance("# x - 1\n+1 x1\n-1\n").unwrap();
        assert_eq!(inst.unknowns(), 1);
        assert_eq!(inst.to_string(), "+1 x1\n-1\n");
        let inst = parse_instance("3 x1^2 x2\n-2 x2^3").unwrap();
        assert_eq!(inst.monomials()[0].degree(1), 2);
        assert_eq!(inst.evaluate(&nat(&[2, 1])), BigInt::from(10));
        assert_eq!(parse_instance(&inst.to_string()).unwrap(), inst);
        assert!(matches!(parse_instance("0 x1"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_instance("1\n2 y1"), Err(Error::Syntax { line: 2, .. })));
        assert!(parse_instance("\n# nothing\n").is_err());
    }

    #[test]
    fn solutions_parse() {
        assert_eq!(parse_solution("x2=5, x1=0", 2).unwrap(), nat(&[0, 5]));
        assert_eq!(parse_solution("4,7", 2).unwrap(), nat(&[4, 7]));
        assert!(parse_solution("x1=1", 2).is_err());
        assert!(parse_solution("x3=1", 2).is_err());
    }

    #[test]
    fn x_minus_one_encoding() {
        let inst = parse_instance("1 x1\n-1").unwrap();
        let enc = encode(&inst).unwrap();
        assert_eq!(enc.views().len(), 3);
        let vi: Vec<String> = enc.vi.disjuncts().iter().map(|d| d.to_string()).collect();
        assert_eq!(vi, ["vi() :- X1(y1_1), H().", "vi() :- C()."]);
        assert_eq!(enc.q.disjuncts()[0].to_string(), "q() :- H().");
    }

    #[test]
    fn coefficient_two_duplicates_phi() {
        let inst = parse_instance("2 x1\n-3").unwrap();
        let enc = encode(&inst).unwrap();
        assert_eq!(enc.psi_p.len(), 2);
        assert_eq!(enc.psi_n.len(), 3);
        let two = parse_instance("1 x1\n1 x2\n-1").unwrap();
        assert_eq!(encode(&two).unwrap().views().len(), 4);
    }

    #[test]
    fn phi_identity_examples() {
        let schema = schema_for(2);
        let d = structure_from_counts(&schema, false, false, &[3, 0]).unwrap();
        let m = parse_instance("1 x1^2").unwrap().monomials()[0].clone();
        let r = phi_count_identity_check(&m, &d, &Limits::default()).unwrap();
        assert_eq!((r.monomial_value.as_str(), r.phi_count.as_str()), ("9", "9"));
        assert!(r.holds);
        let m = parse_instance("-1").unwrap().monomials()[0].clone();
        let r = phi_count_identity_check(&m, &d, &Limits::default()).unwrap();
        assert_eq!((r.monomial_value.as_str(), r.phi_count.as_str()), ("-1", "1"));
        assert!(r.holds);
        let d = structure_from_counts(&schema, true, false, &[2, 5]).unwrap();
        let m = parse_instance("1 x1 x2").unwrap().monomials()[0].clone();
        let r = phi_count_identity_check(&m, &d, &Limits::default()).unwrap();
        assert_eq!(r.phi_count, "10");
        let cq = phi(&m, &schema, None, "phi").unwrap();
        assert_eq!(oracle::eval_boolean_cq(&cq, &d).unwrap(), BigUint::from(10u32));
    }

    #[test]
    fn x_minus_one_witness() {
        let inst = parse_instance("1 x1\n-1").unwrap();
        let w = witness_from_solution(&inst, &nat(&[1]), &Limits::default()).unwrap();
        assert!(w.report.passed, "{:?}", w.report);
        assert_eq!(w.d.to_fact_lines(), ["H()", "X1(a1_1)"]);
        assert_eq!(w.d_prime.to_fact_lines(), ["C()", "X1(a1_1)"]);
        let counts: Vec<(&str, &str)> =
            w.report.views.iter().map(|r| (r.d.as_str(), r.d_prime.as_str())).collect();
        assert_eq!(counts, [("1", "1"), ("1", "1"), ("1", "1")]);
        assert_eq!((w.report.query_d.as_str(), w.report.query_d_prime.as_str()), ("1", "0"));
        assert!(witness_from_solution(&inst, &nat(&[3]), &Limits::default()).is_err());
    }

    #[test]
    fn x_minus_two_witness() {
        let inst = parse_instance("1 x1\n-2").unwrap();
        let w = witness_from_solution(&inst, &nat(&[2]), &Limits::default()).unwrap();
        assert!(w.report.passed);
        assert_eq!(w.report.views[2].d, "2");
        assert_eq!(w.report.views[2].d_prime, "2");
    }

    #[test]
    fn psi_identities_on_random_structures() {
        let inst = parse_instance("2 x1^2 x2\n-1 x1\n-3\n1 x2^2").unwrap();
        let enc = encode(&inst).unwrap();
        let mut r = rng(7);
        for _ in 0..40 {
            let d = random_structure(&mut r, &enc.schema, 4, 0.5);
            let c = psi_identity_check(&inst, &enc, &d, &Limits::default()).unwrap();
            assert!(c.holds_p && c.holds_n, "{c:?}");
            for m in inst.monomials() {
                assert!(phi_count_identity_check(m, &d, &Limits::default()).unwrap().holds);
            }
        }
    }

    #[test]
    fn swap_survey_finds_only_solutions() {
        let inst = parse_instance("1 x1\n-2").unwrap();
        let s = survey_swap_pattern(&inst, 4, &Limits::default()).unwrap();
        assert!(s.pattern_holds);
        assert_eq!(s.agreeing_pairs, 2);
        assert_eq!(s.solutions, vec![vec![2]]);
        let none = parse_instance("1 x1^2\n1").unwrap();
        let s = survey_swap_pattern(&none, 4, &Limits::default()).unwrap();
        assert_eq!(s.agreeing_pairs, 0);
    }
}

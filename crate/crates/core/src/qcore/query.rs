use std::fmt;
use std::sync::Arc;

use super::schema::Schema;
use super::structure::{Elem, Fact, Structure};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub rel: usize,
    /// Indices into the query's variable table.
    pub args: Vec<usize>,
}

/// `NAME(free) :- ATOM, ..., ATOM.`; boolean iff there are no free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    name: String,
    schema: Arc<Schema>,
    vars: Vec<String>,
    free: Vec<usize>,
    atoms: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(
        name: impl Into<String>,
        schema: Arc<Schema>,
        vars: Vec<String>,
        free: Vec<usize>,
        atoms: Vec<Atom>,
    ) -> Result<Self> {
        let name = name.into();
        for (i, &v) in free.iter().enumerate() {
            if v >= vars.len() {
                return Err(Error::Invalid(format!("free variable #{v} out of range")));
            }
            if free[..i].contains(&v) {
                return Err(Error::Invalid(format!(
                    "free variable `{}` listed twice in `{name}`",
                    vars[v]
                )));
            }
        }
        for atom in &atoms {
            if atom.rel >= schema.len() {
                return Err(Error::UnknownRelation(format!("#{}", atom.rel)));
            }
            let arity = schema.arity(atom.rel);
            if atom.args.len() != arity {
                return Err(Error::ArityMismatch {
                    relation: schema.name(atom.rel).to_string(),
                    expected: arity,
                    found: atom.args.len(),
                });
            }
            if atom.args.iter().any(|&a| a >= vars.len()) {
                return Err(Error::Invalid("atom argument out of range".into()));
            }
        }
        Ok(ConjunctiveQuery {
            name,
            schema,
            vars,
            free,
            atoms,
        })
    }

    /// Builds a boolean query from `(relation, variable names)` pairs.
    pub fn boolean(
        name: impl Into<String>,
        schema: Arc<Schema>,
        atoms: &[(&str, &[&str])],
    ) -> Result<Self> {
        let mut vars: Vec<String> = Vec::new();
        let mut out = Vec::new();
        for (rel, args) in atoms {
            let id = schema.resolve(rel, args.len())?;
            let args = args
                .iter()
                .map(|a| match vars.iter().position(|v| v == a) {
                    Some(i) => i,
                    None => {
                        vars.push(a.to_string());
                        vars.len() - 1
                    }
                })
                .collect();
            out.push(Atom { rel: id, args });
        }
        ConjunctiveQuery::new(name, schema, vars, Vec::new(), out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn free_vars(&self) -> &[usize] {
        &self.free
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn has_nullary_atom(&self) -> bool {
        self.atoms.iter().any(|a| a.args.is_empty())
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        ConjunctiveQuery {
            name: name.into(),
            ..self.clone()
        }
    }

    /// Frozen body keyed by variable index: element `i` is variable `i`,
    /// including free variables that occur in no atom.
    pub(crate) fn body_with_all_vars(&self) -> Structure {
        let facts = self.atoms.iter().map(|a| {
            Fact::new(a.rel, a.args.iter().map(|&v| v as Elem).collect())
        });
        Structure::with_domain(
            self.schema.clone(),
            self.vars.len(),
            Some(self.vars.clone()),
            facts,
        )
        .expect("query atoms are validated on construction")
    }

    /// The structure obtained by replacing each variable with a fresh
    /// constant named after it. Duplicate atoms collapse into one fact.
    pub fn frozen_body(&self) -> Structure {
        let facts = self.atoms.iter().map(|a| {
            Fact::new(a.rel, a.args.iter().map(|&v| v as Elem).collect())
        });
        Structure::from_facts(
            self.schema.clone(),
            self.vars.len(),
            Some(self.vars.clone()),
            facts,
        )
        .expect("query atoms are validated on construction")
    }

    /// Reads a structure back as a boolean query: constants become variables.
    pub fn from_structure(name: impl Into<String>, s: &Structure) -> Self {
        let vars: Vec<String> = (0..s.domain_size() as Elem).map(|e| s.name(e)).collect();
        let atoms = s
            .facts()
            .iter()
            .map(|f| Atom {
                rel: f.rel,
                args: f.args.iter().map(|&a| a as usize).collect(),
            })
            .collect();
        ConjunctiveQuery {
            name: name.into(),
            schema: s.schema().clone(),
            vars,
            free: Vec::new(),
            atoms,
        }
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let free: Vec<&str> = self.free.iter().map(|&v| self.vars[v].as_str()).collect();
        write!(f, "{}({}) :-", self.name, free.join(","))?;
        for (i, atom) in self.atoms.iter().enumerate() {
            let args: Vec<&str> = atom.args.iter().map(|&v| self.vars[v].as_str()).collect();
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{}({})", self.schema.name(atom.rel), args.join(","))?;
        }
        if self.atoms.is_empty() {
            write!(f, " .")
        } else {
            write!(f, ".")
        }
    }
}

/// A bag union of boolean conjunctive queries over one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionQuery {
    name: String,
    disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn new(name: impl Into<String>, disjuncts: Vec<ConjunctiveQuery>) -> Result<Self> {
        let name = name.into();
        let first = disjuncts
            .first()
            .ok_or_else(|| Error::Invalid(format!("union query `{name}` has no disjuncts")))?;
        for d in &disjuncts {
            if d.schema() != first.schema() {
                return Err(Error::SchemaMismatch);
            }
            if d.free_vars().len() != first.free_vars().len() {
                return Err(Error::Invalid(format!(
                    "disjuncts of `{name}` have different arities"
                )));
            }
        }
        Ok(UnionQuery { name, disjuncts })
    }

    pub fn single(q: ConjunctiveQuery) -> Self {
        UnionQuery {
            name: q.name().to_string(),
            disjuncts: vec![q],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn disjuncts(&self) -> &[ConjunctiveQuery] {
        &self.disjuncts
    }

    pub fn schema(&self) -> &Arc<Schema> {
        self.disjuncts[0].schema()
    }

    pub fn is_boolean(&self) -> bool {
        self.disjuncts.iter().all(|d| d.is_boolean())
    }
}

impl fmt::Display for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.disjuncts {
            writeln!(f, "{}", d.with_name(self.name.clone()))?;
        }
        Ok(())
    }
}

/// A word over the binary relations of a schema.
///
/// The empty word (the identity query) exists only as an internal value and
/// cannot be produced by the parser.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathQuery {
    schema: Arc<Schema>,
    word: Vec<usize>,
}

impl PathQuery {
    pub fn new(schema: Arc<Schema>, word: Vec<usize>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::Invalid("path query must be a nonempty word".into()));
        }
        Self::checked(schema, word)
    }

    pub fn identity(schema: Arc<Schema>) -> Self {
        PathQuery {
            schema,
            word: Vec::new(),
        }
    }

    fn checked(schema: Arc<Schema>, word: Vec<usize>) -> Result<Self> {
        for &r in &word {
            if r >= schema.len() {
                return Err(Error::UnknownRelation(format!("#{r}")));
            }
            if schema.arity(r) != 2 {
                return Err(Error::ArityMismatch {
                    relation: schema.name(r).to_string(),
                    expected: 2,
                    found: schema.arity(r),
                });
            }
        }
        Ok(PathQuery { schema, word })
    }

    /// Parses a word. Without whitespace every character is one letter
    /// (`ABC`); with whitespace the tokens are letters (`Ab Cd`).
    pub fn parse(text: &str, schema: &Arc<Schema>) -> Result<Self> {
        let text = text.trim();
        let letters: Vec<String> = if text.contains(char::is_whitespace) {
            text.split_whitespace().map(str::to_string).collect()
        } else {
            text.chars().map(|c| c.to_string()).collect()
        };
        if letters.is_empty() {
            return Err(Error::Syntax {
                line: 1,
                column: 1,
                message: "empty path query".into(),
            });
        }
        let word = letters
            .iter()
            .map(|l| schema.resolve(l, 2))
            .collect::<Result<Vec<_>>>()?;
        PathQuery::new(schema.clone(), word)
    }

    /// Schema with one binary relation per distinct letter of the words,
    /// in order of first appearance.
    pub fn infer_schema<'a>(words: impl IntoIterator<Item = &'a str>) -> Result<Arc<Schema>> {
        let mut schema = Schema::empty();
        for w in words {
            let w = w.trim();
            if w.contains(char::is_whitespace) {
                for l in w.split_whitespace() {
                    schema.declare(l, 2)?;
                }
            } else {
                for c in w.chars() {
                    schema.declare(&c.to_string(), 2)?;
                }
            }
        }
        Ok(Arc::new(schema))
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Conjunctive query `name(x,y) :- R1(x,z1), ..., Rn(z_{n-1},y)`.
    pub fn to_cq(&self, name: &str) -> Result<ConjunctiveQuery> {
        if self.word.is_empty() {
            return Err(Error::Unsupported(
                "the empty word has no conjunctive-query form".into(),
            ));
        }
        let n = self.word.len();
        let mut vars = vec!["x".to_string()];
        vars.extend((1..n).map(|i| format!("z{i}")));
        vars.push("y".to_string());
        let atoms = self
            .word
            .iter()
            .enumerate()
            .map(|(i, &r)| Atom {
                rel: r,
                args: vec![i, i + 1],
            })
            .collect();
        ConjunctiveQuery::new(name, self.schema.clone(), vars, vec![0, n], atoms)
    }
}

impl fmt::Display for PathQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "ε");
        }
        let multi = self.word.iter().any(|&r| self.schema.name(r).chars().count() != 1);
        let letters: Vec<&str> = self.word.iter().map(|&r| self.schema.name(r)).collect();
        if multi {
            write!(f, "{}", letters.join(" "))
        } else {
            write!(f, "{}", letters.concat())
        }
    }
}

//! Text formats.
//!
//! Query files hold statements `NAME(x,...) :- REL(x,...), ... .`, with
//! nullary atoms written `REL()` and the empty body as `NAME() :- .`.
//! Lines starting with `#` are comments. Schema files list `REL/arity`
//! tokens; structure files hold one `REL(const,...)` fact per line.

use std::sync::Arc;

use super::query::{Atom, ConjunctiveQuery, UnionQuery};
use super::schema::Schema;
use super::structure::{Structure, StructureBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAtom {
    pub rel: String,
    pub args: Vec<String>,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawStatement {
    pub name: String,
    pub free: Vec<String>,
    pub body: Vec<RawAtom>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Turnstile,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    /// Next token with the position of its first character.
    fn next(&mut self) -> Result<Option<(Tok, usize, usize)>> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
            }
        }
        let (line, column) = (self.line, self.column);
        let c = self.bump().expect("peeked");
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' => {
                if self.chars.peek() == Some(&'-') {
                    self.bump();
                    Tok::Turnstile
                } else {
                    return Err(Error::Syntax {
                        line,
                        column,
                        message: "expected `:-`".into(),
                    });
                }
            }
            c if is_ident_start(c) => {
                let mut s = String::from(c);
                while let Some(&c) = self.chars.peek() {
                    if is_ident_char(c) {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok(Some((tok, line, column)))
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '$'
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lexer: Lexer::new(text),
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<Option<&(Tok, usize, usize)>> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn next(&mut self) -> Result<Option<(Tok, usize, usize)>> {
        match self.peeked.take() {
            Some(t) => Ok(Some(t)),
            None => self.lexer.next(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(usize, usize)> {
        match self.next()? {
            Some((t, l, c)) if t == want => Ok((l, c)),
            Some((t, l, c)) => Err(Error::Syntax {
                line: l,
                column: c,
                message: format!("expected {what}, found {}", describe(&t)),
            }),
            None => Err(self.lexer.error(format!("expected {what}, found end of input"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize)> {
        match self.next()? {
            Some((Tok::Ident(s), l, c)) => Ok((s, l, c)),
            Some((t, l, c)) => Err(Error::Syntax {
                line: l,
                column: c,
                message: format!("expected {what}, found {}", describe(&t)),
            }),
            None => Err(self.lexer.error(format!("expected {what}, found end of input"))),
        }
    }

    /// `( [ident {, ident}] )`
    fn arg_list(&mut self) -> Result<Vec<String>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if let Some((Tok::RParen, _, _)) = self.peek()? {
            self.next()?;
            return Ok(args);
        }
        loop {
            args.push(self.ident("a variable")?.0);
            match self.next()? {
                Some((Tok::Comma, _, _)) => continue,
                Some((Tok::RParen, _, _)) => return Ok(args),
                Some((t, l, c)) => {
                    return Err(Error::Syntax {
                        line: l,
                        column: c,
                        message: format!("expected `,` or `)`, found {}", describe(&t)),
                    })
                }
                None => return Err(self.lexer.error("unterminated argument list")),
            }
        }
    }

    fn statement(&mut self) -> Result<Option<RawStatement>> {
        if self.peek()?.is_none() {
            return Ok(None);
        }
        let (name, line, _) = self.ident("a query name")?;
        let free = self.arg_list()?;
        self.expect(Tok::Turnstile, "`:-`")?;
        let mut body = Vec::new();
        if let Some((Tok::Dot, _, _)) = self.peek()? {
            self.next()?;
            return Ok(Some(RawStatement {
                name,
                free,
                body,
                line,
            }));
        }
        loop {
            let (rel, l, c) = self.ident("a relation name")?;
            let args = self.arg_list()?;
            body.push(RawAtom {
                rel,
                args,
                line: l,
                column: c,
            });
            match self.next()? {
                Some((Tok::Comma, _, _)) => continue,
                Some((Tok::Dot, _, _)) => break,
                Some((t, l, c)) => {
                    return Err(Error::Syntax {
                        line: l,
                        column: c,
                        message: format!("expected `,` or `.`, found {}", describe(&t)),
                    })
                }
                None => return Err(self.lexer.error("statement is missing its final `.`")),
            }
        }
        Ok(Some(RawStatement {
            name,
            free,
            body,
            line,
        }))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Turnstile => "`:-`".into(),
    }
}

/// Parses every statement without checking relations against a schema.
pub fn parse_statements(text: &str) -> Result<Vec<RawStatement>> {
    let mut parser = Parser::new(text);
    let mut out = Vec::new();
    while let Some(s) = parser.statement()? {
        out.push(s);
    }
    Ok(out)
}

/// Resolves a raw statement against a schema, interning variables in order
/// of first appearance (free variables first).
pub fn resolve(stmt: &RawStatement, schema: &Arc<Schema>) -> Result<ConjunctiveQuery> {
    let mut vars: Vec<String> = Vec::new();
    let intern = |v: &str, vars: &mut Vec<String>| match vars.iter().position(|x| x == v) {
        Some(i) => i,
        None => {
            vars.push(v.to_string());
            vars.len() - 1
        }
    };
    let mut free = Vec::new();
    for v in &stmt.free {
        if vars.iter().any(|x| x == v) {
            return Err(Error::Syntax {
                line: stmt.line,
                column: 1,
                message: format!("free variable `{v}` listed twice"),
            });
        }
        free.push(intern(v, &mut vars));
    }
    let mut atoms = Vec::new();
    for a in &stmt.body {
        let rel = schema.resolve(&a.rel, a.args.len())?;
        let args = a.args.iter().map(|v| intern(v, &mut vars)).collect();
        atoms.push(Atom { rel, args });
    }
    ConjunctiveQuery::new(stmt.name.clone(), schema.clone(), vars, free, atoms)
}

/// Parses exactly one conjunctive query.
pub fn parse_cq(text: &str, schema: &Arc<Schema>) -> Result<ConjunctiveQuery> {
    let stmts = parse_statements(text)?;
    match stmts.as_slice() {
        [one] => resolve(one, schema),
        [] => Err(Error::Syntax {
            line: 1,
            column: 1,
            message: "no query statement found".into(),
        }),
        [_, second, ..] => Err(Error::Syntax {
            line: second.line,
            column: 1,
            message: "expected a single query statement".into(),
        }),
    }
}

/// Adds every relation used by the statements to `schema`, checking arities.
pub fn extend_schema(schema: &mut Schema, stmts: &[RawStatement]) -> Result<()> {
    for s in stmts {
        for a in &s.body {
            schema.declare(&a.rel, a.args.len())?;
        }
    }
    Ok(())
}

/// Schema of every relation used in the given query texts.
pub fn infer_schema(texts: &[&str]) -> Result<Schema> {
    let mut schema = Schema::empty();
    for t in texts {
        extend_schema(&mut schema, &parse_statements(t)?)?;
    }
    Ok(schema)
}

/// Parses a query file against `schema`.
pub fn parse_queries(text: &str, schema: &Arc<Schema>) -> Result<Vec<ConjunctiveQuery>> {
    parse_statements(text)?
        .iter()
        .map(|s| resolve(s, schema))
        .collect()
}

/// Groups statements sharing a name into union queries, in order of first
/// appearance.
pub fn group_unions(cqs: Vec<ConjunctiveQuery>) -> Result<Vec<UnionQuery>> {
    let mut groups: Vec<(String, Vec<ConjunctiveQuery>)> = Vec::new();
    for q in cqs {
        match groups.iter_mut().find(|(n, _)| n == q.name()) {
            Some((_, g)) => g.push(q),
            None => groups.push((q.name().to_string(), vec![q])),
        }
    }
    groups
        .into_iter()
        .map(|(n, g)| UnionQuery::new(n, g))
        .collect()
}

/// Parses a schema file: whitespace-separated `REL/arity` tokens.
pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut schema = Schema::empty();
    for (i, line) in text.lines().enumerate() {
        let line = strip_comment(line);
        let mut column = 1;
        for tok in line.split_whitespace() {
            let pos = line[column - 1..].find(tok).map_or(column, |p| p + column);
            column = pos + tok.len();
            let err = |message: String| Error::Syntax {
                line: i + 1,
                column: pos,
                message,
            };
            let (name, arity) = tok
                .split_once('/')
                .ok_or_else(|| err(format!("expected `REL/arity`, found `{tok}`")))?;
            if name.is_empty() || !name.chars().all(is_ident_char) {
                return Err(err(format!("bad relation name `{name}`")));
            }
            let arity: usize = arity
                .parse()
                .map_err(|_| err(format!("bad arity `{arity}`")))?;
            schema.push(name.to_string(), arity)?;
        }
    }
    Ok(schema)
}

/// Parses a structure file. With `schema = None` the schema is inferred
/// from the facts and returned alongside the structure.
pub fn parse_structure(text: &str, schema: Option<&Arc<Schema>>) -> Result<Structure> {
    let facts = parse_fact_lines(text)?;
    let schema = match schema {
        Some(s) => s.clone(),
        None => {
            let mut s = Schema::empty();
            for (rel, args, _, _) in &facts {
                s.declare(rel, args.len())?;
            }
            Arc::new(s)
        }
    };
    let mut builder = StructureBuilder::new(schema);
    for (rel, args, line, column) in &facts {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        builder.fact(rel, &refs).map_err(|e| match e {
            Error::UnknownRelation(r) => Error::Syntax {
                line: *line,
                column: *column,
                message: format!("unknown relation `{r}`"),
            },
            other => other,
        })?;
    }
    builder.build()
}

type RawFact = (String, Vec<String>, usize, usize);

fn parse_fact_lines(text: &str) -> Result<Vec<RawFact>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut p = Parser::new(line);
        let (rel, _, column) = p.ident("a relation name").map_err(|e| at_line(e, i + 1))?;
        let args = p.arg_list().map_err(|e| at_line(e, i + 1))?;
        if let Some((Tok::Dot, _, _)) = p.peek().map_err(|e| at_line(e, i + 1))? {
            p.next().map_err(|e| at_line(e, i + 1))?;
        }
        if let Some((t, _, c)) = p.next().map_err(|e| at_line(e, i + 1))? {
            return Err(Error::Syntax {
                line: i + 1,
                column: c,
                message: format!("trailing {} after fact", describe(&t)),
            });
        }
        out.push((rel, args, i + 1, column));
    }
    Ok(out)
}

fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::Syntax {
            column, message, ..
        } => Error::Syntax {
            line,
            column,
            message,
        },
        other => other,
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs_schema() -> Arc<Schema> {
        Arc::new(Schema::new([("R", 2), ("S", 2), ("H", 0)]).unwrap())
    }

    #[test]
    fn two_atom_boolean_query() {
        let q = parse_cq("q() :- R(x,y), S(y,z).", &rs_schema()).unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.atoms().len(), 2);
        assert_eq!(q.vars().len(), 3);
        assert_eq!(q.atoms()[0].rel, 0);
        assert_eq!(q.atoms()[1].rel, 1);
    }

    #[test]
    fn empty_body() {
        let q = parse_cq("q() :- .", &rs_schema()).unwrap();
        assert!(q.is_boolean());
        assert!(q.is_empty());
        assert_eq!(q.to_string(), "q() :- .");
    }

    #[test]
    fn nullary_atom_round_trips() {
        let schema = rs_schema();
        let q = parse_cq("q() :- H().", &schema).unwrap();
        assert_eq!(q.atoms().len(), 1);
        assert!(q.atoms()[0].args.is_empty());
        let again = parse_cq(&q.to_string(), &schema).unwrap();
        assert_eq!(q, again);
    }

    #[test]
    fn comments_and_multiple_statements() {
        let text = "# views\nv1() :- R(x,y).\n\n# second\nv2(x) :- S(x,y), R(y,x).\n";
        let qs = parse_queries(text, &rs_schema()).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1].free_vars(), &[0]);
        assert!(!qs[1].is_boolean());
    }

    #[test]
    fn errors_carry_positions() {
        let schema = rs_schema();
        match parse_cq("q() :- R(x,y) S(y,z).", &schema) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 15)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_cq("q() :- R(x,y),\n  T(y).", &schema) {
            Err(Error::UnknownRelation(r)) => assert_eq!(r, "T"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_cq("q() :- R(x).", &schema) {
            Err(Error::ArityMismatch {
                expected, found, ..
            }) => assert_eq!((expected, found), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_cq("q() :- R(x,y)", &schema),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn unions_group_by_name() {
        let text = "V1() :- H().\nV1() :- R(x,y).\nW() :- S(a,b).\n";
        let us = group_unions(parse_queries(text, &rs_schema()).unwrap()).unwrap();
        assert_eq!(us.len(), 2);
        assert_eq!(us[0].disjuncts().len(), 2);
        assert_eq!(us[1].name(), "W");
    }

    #[test]
    fn schema_file() {
        let s = parse_schema("A/2 B/2\n# c\nC/2\nH/0\n").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.arity(3), 0);
        assert!(parse_schema("A/x").is_err());
        assert!(matches!(
            parse_schema("A/2 A/2"),
            Err(Error::DuplicateRelation(_))
        ));
    }

    #[test]
    fn structure_file() {
        let d = parse_structure("R(a,b)\nR(b,c)\n# x\nH()\n", Some(&rs_schema())).unwrap();
        assert_eq!(d.domain_size(), 3);
        assert_eq!(d.fact_count(), 3);
        let inferred = parse_structure("E(a,b).\nE(b,a)\n", None).unwrap();
        assert_eq!(inferred.schema().len(), 1);
        assert!(parse_structure("R(a,b) R(b,c)", Some(&rs_schema())).is_err());
    }
}

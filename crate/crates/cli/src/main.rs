use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use bagdet::detbool::decide;
use bagdet::h10::{self, parse_instance, parse_solution, witness_from_solution};
use bagdet::pathdet::{
    build_path_witness, eval_path_query, reduce_walk, verify_path_witness, walk_from_path,
    PrefixGraph, ReductionSystem,
};
use bagdet::qcore::{
    eval_cq_bag, eval_ucq, group_unions, infer_schema, parse_queries, parse_schema,
    parse_structure, ConjunctiveQuery, PathQuery, Schema, Structure,
};
use bagdet::witness::{verify_sides, Side, WitnessFile};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

mod config;

use config::{Config, OutputFormat};

#[derive(Parser)]
#[command(name = "bagdet", version, about = "Bag-semantics query determinacy toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Node budget for one homomorphism or labeling search.
    #[arg(long, global = true)]
    max_nodes: Option<u64>,
    /// Largest domain built by products and powers.
    #[arg(long, global = true)]
    max_domain: Option<u64>,
    /// Largest witness structure written out explicitly.
    #[arg(long, global = true)]
    max_materialized: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CqInput {
    /// File with the query `q`.
    #[arg(long)]
    query: PathBuf,
    /// File with the views, one rule per view.
    #[arg(long)]
    views: Option<PathBuf>,
    /// Schema file (`R/2 S/2 ...`); inferred from the queries if absent.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct PathInput {
    /// Path query word, e.g. `ABCD`.
    #[arg(long)]
    query: String,
    /// Comma-separated view words.
    #[arg(long, default_value = "")]
    views: String,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the views determine a boolean CQ.
    Decide {
        #[command(flatten)]
        input: CqInput,
        /// Write a counterexample here when not determined.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build and write a verified counterexample pair.
    Witness {
        #[command(flatten)]
        input: CqInput,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Decide determinacy of a path query by prefix-graph reachability.
    PathDecide {
        #[command(flatten)]
        input: PathInput,
        /// Write the two-copy witness here when not determined.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build and write the two-copy witness for a path query.
    PathWitness {
        #[command(flatten)]
        input: PathInput,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a query file (or a path word) on a structure file.
    Eval {
        #[arg(long, conflicts_with = "path")]
        query: Option<PathBuf>,
        /// Path query word instead of a query file.
        #[arg(long)]
        path: Option<String>,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Encode a polynomial equation as a UCQ determinacy instance.
    H10Encode {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build the witness pair for a solution of a polynomial equation.
    H10Witness {
        #[arg(long)]
        instance: PathBuf,
        /// `x1=3,x2=0` or `3,0`.
        #[arg(long)]
        solution: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-check a witness from files alone.
    Verify {
        /// CQ query file, or a path word with `--path-query`.
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long)]
        views: Option<String>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Path query word; `--views` is then a comma list of words.
        #[arg(long, conflicts_with_all = ["query", "instance"])]
        path_query: Option<String>,
        /// Polynomial instance file for an H10 witness.
        #[arg(long, conflicts_with = "query")]
        instance: Option<PathBuf>,
        /// Symbolic witness file written by `witness`.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Structure files for the two sides.
        #[arg(long, requires = "d_prime")]
        d: Option<PathBuf>,
        #[arg(long, requires = "d")]
        d_prime: Option<PathBuf>,
    },
    /// Run the built-in identity suite and fixtures.
    Selftest {
        /// Random triples for the identity suite.
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
}

struct Outcome {
    value: Value,
    code: u8,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Outcome { value, code: 0 }
    }

    fn with(value: Value, success: bool) -> Self {
        Outcome {
            value,
            code: if success { 0 } else { 1 },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config(&cli.global) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run(cli.command, &cfg) {
        Ok(out) => {
            print!("{}", render(&out.value, cfg.output_format));
            ExitCode::from(out.code)
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}

fn config(g: &Global) -> Result<Config> {
    let mut cfg = match std::env::var_os("BAGDET_CONFIG") {
        Some(p) if !p.is_empty() => Config::from_file(Path::new(&p))?,
        _ => Config::default(),
    };
    if let Some(n) = g.max_nodes {
        cfg.limits.max_search_nodes = n;
    }
    if let Some(n) = g.max_domain {
        cfg.limits.max_domain_size = n;
    }
    if let Some(n) = g.max_materialized {
        cfg.limits.max_materialized_size = n;
    }
    if let Some(f) = g.format {
        cfg.output_format = f;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render(v: &Value, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("values serialize");
            s.push('\n');
            s
        }
        OutputFormat::Text => {
            let mut s = String::new();
            if let Value::Object(map) = v {
                for (k, x) in map {
                    let shown = match x {
                        Value::String(t) => t.clone(),
                        other => other.to_string(),
                    };
                    s.push_str(&format!("{k}: {shown}\n"));
                }
            } else {
                s.push_str(&format!("{v}\n"));
            }
            s
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    let p = dir.join(name);
    fs::write(&p, contents).with_context(|| format!("cannot write `{}`", p.display()))?;
    Ok(name.to_string())
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn pretty<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("reports serialize");
    s.push('\n');
    s
}

fn structure_text(s: &Structure) -> String {
    let mut out = s.to_fact_lines().join("\n");
    out.push('\n');
    out
}

/// Schema from `--schema`, or inferred from the given query texts.
fn schema_for(schema: Option<&Path>, texts: &[&str]) -> Result<Arc<Schema>> {
    if let Some(p) = schema {
        return Ok(Arc::new(
            parse_schema(&read(p)?).with_context(|| format!("in `{}`", p.display()))?,
        ));
    }
    Ok(Arc::new(infer_schema(texts)?))
}

struct CqProblem {
    schema: Arc<Schema>,
    q: ConjunctiveQuery,
    views: Vec<ConjunctiveQuery>,
}

fn load_cq(query: &Path, views: Option<&Path>, schema: Option<&Path>) -> Result<CqProblem> {
    let qtext = read(query)?;
    let vtext = match views {
        Some(p) => read(p)?,
        None => String::new(),
    };
    let schema = schema_for(schema, &[&qtext, &vtext])?;
    let mut qs = parse_queries(&qtext, &schema).with_context(|| format!("in `{}`", query.display()))?;
    if qs.len() != 1 {
        bail!("`{}` must contain exactly one query, found {}", query.display(), qs.len());
    }
    let q = qs.remove(0);
    let views = match views {
        Some(p) => parse_queries(&vtext, &schema).with_context(|| format!("in `{}`", p.display()))?,
        None => Vec::new(),
    };
    Ok(CqProblem { schema, q, views })
}

fn run(cmd: Command, cfg: &Config) -> Result<Outcome> {
    let limits = &cfg.limits;
    match cmd {
        Command::Decide { input, out_dir } => {
            let p = load_cq(&input.query, input.views.as_deref(), input.schema.as_deref())?;
            let verdict = decide(&p.views, &p.q, out_dir.is_some(), limits)?;
            let files = match (&verdict.witness, &out_dir) {
                (Some(w), Some(dir)) => write_cq_witness(dir, w)?,
                _ => Vec::new(),
            };
            let report = verdict.report(files);
            Ok(Outcome::with(to_json(&report), verdict.determined))
        }
        Command::Witness { input, out_dir } => {
            let p = load_cq(&input.query, input.views.as_deref(), input.schema.as_deref())?;
            let verdict = decide(&p.views, &p.q, true, limits)?;
            if verdict.determined {
                bail!("the views determine the query; there is no counterexample");
            }
            let Some(w) = &verdict.witness else {
                bail!("no witness could be built: {}", verdict.diagnostics.join("; "));
            };
            let files = write_cq_witness(&out_dir, w)?;
            let passed = w.report.passed;
            Ok(Outcome::with(to_json(&verdict.report(files)), passed))
        }
        Command::PathDecide { input, out_dir } => {
            let (q, views) = load_path(&input.query, &input.views)?;
            path_decide(&q, &views, out_dir.as_deref(), limits)
        }
        Command::PathWitness { input, out_dir } => {
            let (q, views) = load_path(&input.query, &input.views)?;
            let w = build_path_witness(&q, &views, limits)?;
            let files = write_path_witness(&out_dir, &w.d, &w.d_prime, &w.report)?;
            Ok(Outcome::with(
                json!({ "report": to_json(&w.report), "files": files }),
                w.report.passed,
            ))
        }
        Command::Eval {
            query,
            path,
            structure,
            schema,
        } => eval(query.as_deref(), path.as_deref(), &structure, schema.as_deref(), limits),
        Command::H10Encode { instance, out_dir } => {
            let inst = parse_instance(&read(&instance)?)
                .with_context(|| format!("in `{}`", instance.display()))?;
            let enc = h10::encode(&inst)?;
            let schema_text = schema_line(&enc.schema);
            let query_text = enc.q.to_string();
            let views_text: String = enc.views().iter().map(ToString::to_string).collect();
            let mut out = json!({
                "unknowns": inst.unknowns(),
                "view_count": enc.views().len(),
                "views": enc.views().iter().map(|v| v.name().to_string()).collect::<Vec<_>>(),
            });
            if let Some(dir) = out_dir {
                let files = vec![
                    write(&dir, "schema.txt", &schema_text)?,
                    write(&dir, "query.cq", &query_text)?,
                    write(&dir, "views.cq", &views_text)?,
                ];
                out["files"] = json!(files);
            } else {
                out["schema"] = json!(schema_text);
                out["query"] = json!(query_text);
                out["views_text"] = json!(views_text);
            }
            Ok(Outcome::ok(out))
        }
        Command::H10Witness {
            instance,
            solution,
            out_dir,
        } => {
            let inst = parse_instance(&read(&instance)?)
                .with_context(|| format!("in `{}`", instance.display()))?;
            let sol = parse_solution(&solution, inst.unknowns())?;
            let w = witness_from_solution(&inst, &sol, limits)?;
            let mut out = json!({ "report": to_json(&w.report) });
            if let Some(dir) = out_dir {
                let files = vec![
                    write(&dir, "d.facts", &structure_text(&w.d))?,
                    write(&dir, "d_prime.facts", &structure_text(&w.d_prime))?,
                    write(&dir, "report.json", &pretty(&w.report))?,
                ];
                out["files"] = json!(files);
            } else {
                out["d"] = json!(w.d.to_fact_lines());
                out["d_prime"] = json!(w.d_prime.to_fact_lines());
            }
            Ok(Outcome::with(out, w.report.passed))
        }
        Command::Verify {
            query,
            views,
            schema,
            path_query,
            instance,
            witness,
            d,
            d_prime,
        } => {
            let sides = SideFiles {
                witness: witness.as_deref(),
                d: d.as_deref(),
                d_prime: d_prime.as_deref(),
            };
            if let Some(word) = path_query {
                verify_path(&word, views.as_deref().unwrap_or(""), &sides, limits)
            } else if let Some(inst) = instance {
                verify_h10(&inst, &sides, limits)
            } else if let Some(q) = query {
                let views = views.map(PathBuf::from);
                verify_cq(&q, views.as_deref(), schema.as_deref(), &sides, limits)
            } else {
                bail!("verify needs --query, --path-query or --instance")
            }
        }
        Command::Selftest { trials } => {
            let r = bagdet::selftest::run(cfg.seed, trials, limits)?;
            Ok(Outcome::with(to_json(&r), r.passed))
        }
    }
}

fn schema_line(schema: &Schema) -> String {
    let rels: Vec<String> = schema
        .relations()
        .iter()
        .map(|r| format!("{}/{}", r.name, r.arity))
        .collect();
    format!("{}\n", rels.join(" "))
}

fn write_cq_witness(dir: &Path, w: &bagdet::witness::WitnessPair) -> Result<Vec<String>> {
    let file = WitnessFile::from_pair(w);
    let mut files = vec![
        write(dir, "witness.json", &pretty(&file))?,
        write(dir, "trace.json", &pretty(&w.trace))?,
    ];
    if let Some((d, dp)) = &w.materialized {
        files.push(write(dir, "d.facts", &structure_text(d))?);
        files.push(write(dir, "d_prime.facts", &structure_text(dp))?);
    }
    Ok(files)
}

fn write_path_witness(
    dir: &Path,
    d: &Structure,
    dp: &Structure,
    report: &bagdet::pathdet::PathReport,
) -> Result<Vec<String>> {
    Ok(vec![
        write(dir, "d.facts", &structure_text(d))?,
        write(dir, "d_prime.facts", &structure_text(dp))?,
        write(dir, "report.json", &pretty(report))?,
    ])
}

fn load_path(query: &str, views: &str) -> Result<(PathQuery, Vec<PathQuery>)> {
    let words: Vec<&str> = views.split(',').map(str::trim).filter(|w| !w.is_empty()).collect();
    let schema = PathQuery::infer_schema(std::iter::once(query).chain(words.iter().copied()))?;
    let q = PathQuery::parse(query, &schema)?;
    let vs = words
        .iter()
        .map(|w| PathQuery::parse(w, &schema))
        .collect::<bagdet::Result<Vec<_>>>()?;
    Ok((q, vs))
}

fn prefix_name(q: &PathQuery, len: usize) -> String {
    if len == 0 {
        return "ε".into();
    }
    let sub = PathQuery::new(q.schema().clone(), q.word()[..len].to_vec()).expect("prefix");
    sub.to_string()
}

fn path_decide(
    q: &PathQuery,
    views: &[PathQuery],
    out_dir: Option<&Path>,
    limits: &bagdet::Limits,
) -> Result<Outcome> {
    let graph = PrefixGraph::new(q, views)?;
    match graph.find_path() {
        Some(path) => {
            let walk = walk_from_path(q, views, &path)?;
            let moves: Vec<Value> = path
                .iter()
                .map(|m| {
                    json!({
                        "view": views[m.view].to_string(),
                        "from": prefix_name(q, m.from),
                        "to": prefix_name(q, m.to),
                        "forward": m.forward,
                    })
                })
                .collect();
            let pm = reduce_walk(&walk, q, ReductionSystem::PlusMinus)?;
            let mp = reduce_walk(&walk, q, ReductionSystem::MinusPlus)?;
            Ok(Outcome::ok(json!({
                "determined": true,
                "query": q.to_string(),
                "path": moves,
                "walk": walk.to_string(),
                "reduced_plus_minus": pm.to_string(),
                "reduced_minus_plus": mp.to_string(),
            })))
        }
        None => {
            let reachable: Vec<String> = graph
                .reachable()
                .iter()
                .enumerate()
                .filter(|(_, &r)| r)
                .map(|(i, _)| prefix_name(q, i))
                .collect();
            let mut out = json!({
                "determined": false,
                "query": q.to_string(),
                "reachable_prefixes": reachable,
            });
            if let Some(dir) = out_dir {
                let w = build_path_witness(q, views, limits)?;
                out["files"] = json!(write_path_witness(dir, &w.d, &w.d_prime, &w.report)?);
                out["report"] = to_json(&w.report);
            }
            Ok(Outcome::with(out, false))
        }
    }
}

fn eval(
    query: Option<&Path>,
    path: Option<&str>,
    structure: &Path,
    schema: Option<&Path>,
    limits: &bagdet::Limits,
) -> Result<Outcome> {
    let stext = read(structure)?;
    if let Some(word) = path {
        let s = parse_structure(&stext, None)?;
        let q = PathQuery::parse(word, s.schema())?;
        let bag = eval_path_query(&q, &s)?;
        return Ok(Outcome::ok(json!({
            "query": word,
            "bag": bag_json(&s, bag),
        })));
    }
    let Some(qpath) = query else {
        bail!("eval needs --query or --path");
    };
    let qtext = read(qpath)?;
    let schema = schema_for(schema, &[&qtext])?;
    let s = parse_structure(&stext, Some(&schema))
        .with_context(|| format!("in `{}`", structure.display()))?;
    let cqs = parse_queries(&qtext, &schema)?;
    let mut results = Vec::new();
    for u in group_unions(cqs)? {
        if u.is_boolean() {
            results.push(json!({ "query": u.name(), "count": eval_ucq(&u, &s, limits)?.to_string() }));
        } else {
            let mut total = bagdet::qcore::Bag::new();
            for cq in u.disjuncts() {
                for (t, c) in eval_cq_bag(cq, &s, limits)? {
                    *total.entry(t).or_default() += c;
                }
            }
            results.push(json!({ "query": u.name(), "bag": bag_json(&s, total) }));
        }
    }
    let out = if results.len() == 1 {
        results.remove(0)
    } else {
        json!({ "results": results })
    };
    Ok(Outcome::ok(out))
}

fn bag_json(s: &Structure, bag: bagdet::qcore::Bag) -> Value {
    Value::Array(
        bag.into_iter()
            .map(|(t, c)| {
                json!({
                    "tuple": t.iter().map(|&e| s.name(e)).collect::<Vec<_>>(),
                    "multiplicity": c.to_string(),
                })
            })
            .collect(),
    )
}

struct SideFiles<'a> {
    witness: Option<&'a Path>,
    d: Option<&'a Path>,
    d_prime: Option<&'a Path>,
}

impl SideFiles<'_> {
    fn structures(&self, schema: &Arc<Schema>) -> Result<Option<(Structure, Structure)>> {
        match (self.d, self.d_prime) {
            (Some(a), Some(b)) => {
                let d = parse_structure(&read(a)?, Some(schema))
                    .with_context(|| format!("in `{}`", a.display()))?;
                let dp = parse_structure(&read(b)?, Some(schema))
                    .with_context(|| format!("in `{}`", b.display()))?;
                Ok(Some((d, dp)))
            }
            _ => Ok(None),
        }
    }

    fn require_structures(&self, schema: &Arc<Schema>) -> Result<(Structure, Structure)> {
        self.structures(schema)?
            .ok_or_else(|| anyhow::anyhow!("this witness kind needs --d and --d-prime"))
    }
}

fn verify_cq(
    query: &Path,
    views: Option<&Path>,
    schema: Option<&Path>,
    files: &SideFiles<'_>,
    limits: &bagdet::Limits,
) -> Result<Outcome> {
    let p = load_cq(query, views, schema)?;
    let symbolic = match files.witness {
        Some(path) => {
            let wf: WitnessFile = serde_json::from_str(&read(path)?)
                .with_context(|| format!("invalid witness file `{}`", path.display()))?;
            let mine: Vec<String> = p
                .schema
                .relations()
                .iter()
                .map(|r| format!("{}/{}", r.name, r.arity))
                .collect();
            if wf.schema != mine {
                bail!("witness schema {:?} differs from the query schema {:?}", wf.schema, mine);
            }
            Some(wf.sides(&p.schema)?)
        }
        None => None,
    };
    let structures = files.structures(&p.schema)?;
    if symbolic.is_none() && structures.is_none() {
        bail!("verify needs --witness or --d and --d-prime");
    }
    let side = |i: usize| Side {
        symbolic: symbolic.as_ref().map(|s| if i == 0 { &s.0 } else { &s.1 }),
        structure: structures.as_ref().map(|s| if i == 0 { &s.0 } else { &s.1 }),
    };
    let report = verify_sides(&p.views, &p.q, side(0), side(1), limits);
    Ok(Outcome::with(to_json(&report), report.passed))
}

fn verify_path(
    word: &str,
    views: &str,
    files: &SideFiles<'_>,
    limits: &bagdet::Limits,
) -> Result<Outcome> {
    let (q, vs) = load_path(word, views)?;
    let (d, dp) = files.require_structures(q.schema())?;
    let report = verify_path_witness(&q, &vs, &d, &dp, limits)?;
    Ok(Outcome::with(to_json(&report), report.passed))
}

fn verify_h10(instance: &Path, files: &SideFiles<'_>, limits: &bagdet::Limits) -> Result<Outcome> {
    let inst = parse_instance(&read(instance)?)
        .with_context(|| format!("in `{}`", instance.display()))?;
    let enc = h10::encode(&inst)?;
    let (d, dp) = files.require_structures(&enc.schema)?;
    let report = h10::verify_h10_witness(&inst, &enc, &d, &dp, limits)?;
    Ok(Outcome::with(to_json(&report), report.passed))
}

//! Command-line front end: parse an expression, run one differential
//! operator over it, and emit a machine-readable JSON report.
//!
//! Exit codes: 0 success, 1 cross-check breach, 2 expression parse error,
//! 3 domain error (with offending node index), 4 dimension mismatch.

mod report;
mod seedcheck;

use std::time::Instant;

use clap::Parser;

use jetad::error::Error;
use jetad::forward::{dir1, dir2, dir3, taylor_push, TaylorSeed};
use jetad::mixed::{grad_dir2, grad_trace_mh, hessian_by_hvp, hvp};
use jetad::oracle::{fd_directional, symbolic_gradient, taylor_reference, FdConfig};
use jetad::reverse::{gradient, hessian_general, third_order_general};
use jetad::{build_tape, parse, ExprGraph, Tape};

use report::Json;
use seedcheck::{
    contract_hess, contract_third_full, contract_third_once, hess_vec, probe_seed, SeedCheck,
};

#[derive(Parser, Debug)]
#[command(
    name = "jetad",
    about = "Higher-order automatic differentiation of scalar expressions",
    long_about = "Evaluates derivatives of an expression in variables bound by --at in order\n\
                  of first appearance in the text. Operators cover forward directional\n\
                  derivatives to third order, reverse gradients/Hessians/third-order arrays,\n\
                  mixed-mode Hessian-vector products, Taylor jets, and a self-check mode."
)]
struct Args {
    /// Expression text, e.g. "(x1+x2)/(x2*x3)"
    #[arg(long)]
    expr: Option<String>,

    /// Read the expression from a file instead
    #[arg(long, conflicts_with = "expr")]
    expr_file: Option<std::path::PathBuf>,

    /// Evaluation point: comma-separated values, one per variable
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,

    /// First seed vector (dir1/dir2/dir3/hvp/grad_dir2; first-order Taylor seed)
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,

    /// Second seed vector (dir2/dir3/grad_dir2)
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,

    /// Third seed vector (dir3)
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,

    /// Matrix for trace_mh: rows separated by ';', entries by ','
    #[arg(long = "M", allow_hyphen_values = true)]
    m: Option<String>,

    /// Aligned second-order Taylor seed (defaults to zero)
    #[arg(long, allow_hyphen_values = true)]
    d2v: Option<String>,

    /// Aligned third-order Taylor seed (defaults to zero)
    #[arg(long, allow_hyphen_values = true)]
    d3v: Option<String>,

    /// Operator: dir1, dir2, dir3, taylor, gradient, hessian, third, hvp,
    /// grad_dir2, hessian_hvp, trace_mh, check
    #[arg(long)]
    op: String,

    /// Compact single-line JSON (the default)
    #[arg(long)]
    json: bool,

    /// Pretty-printed JSON
    #[arg(long, conflicts_with = "json")]
    pretty: bool,

    /// Cross-validate the result against an independent derivative route
    /// on these exact inputs; exit 1 on a tolerance breach
    #[arg(long)]
    seed_check: bool,
}

struct Failure {
    code: i32,
    doc: Json,
}

fn fail(code: i32, kind: &str, message: String, extra: Vec<(&str, Json)>) -> Failure {
    let mut fields = vec![
        ("kind", Json::Str(kind.to_string())),
        ("message", Json::Str(message)),
    ];
    fields.extend(extra);
    Failure {
        code,
        doc: Json::obj(vec![("error", Json::obj(fields))]),
    }
}

fn from_core(err: Error) -> Failure {
    match &err {
        Error::Syntax { offset, .. }
        | Error::UnknownFunction { offset, .. }
        | Error::Arity { offset, .. } => fail(
            2,
            "parse",
            err.to_string(),
            vec![("offset", Json::Int(*offset as u64))],
        ),
        Error::Domain { node, .. } => fail(
            3,
            "domain",
            err.to_string(),
            vec![("node", Json::Int(*node as u64))],
        ),
        Error::Dimension { .. } | Error::Projection { .. } | Error::Cycle { .. } => {
            fail(4, "dimension", err.to_string(), vec![])
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    fail(2, "usage", message.into(), vec![])
}

fn main() {
    let args = Args::parse();
    let pretty = args.pretty;
    match run(&args) {
        Ok(doc) => {
            print!("{}", doc.to_string(pretty));
        }
        Err(failure) => {
            print!("{}", failure.doc.to_string(pretty));
            std::process::exit(failure.code);
        }
    }
}

fn parse_csv(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| usage(format!("invalid number '{s}' in {what}")))
        })
        .collect()
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    text.split(';')
        .map(|row| parse_csv(row, "matrix M"))
        .collect()
}

fn seed<'a>(opt: &'a Option<String>, flag: &str, op: &str) -> Result<&'a str, Failure> {
    opt.as_deref()
        .ok_or_else(|| usage(format!("--op {op} requires --{flag}")))
}

fn run(args: &Args) -> Result<Json, Failure> {
    if args.op == "check" {
        return run_check(args);
    }

    let text = match (&args.expr, &args.expr_file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?
            .trim()
            .to_string(),
        (None, None) => return Err(usage("--expr or --expr-file is required")),
    };
    let graph = parse(&text).map_err(from_core)?;
    let tape = build_tape(&graph).map_err(from_core)?;

    let at = seed(&args.at, "at", &args.op)?;
    let x = parse_csv(at, "--at")?;
    if x.len() != tape.num_inputs() {
        return Err(from_core(Error::Dimension {
            what: "point",
            expected: tape.num_inputs(),
            found: x.len(),
        }));
    }

    let started = Instant::now();
    let (value, result, adjuncts, check) = dispatch(args, &graph, &tape, &x)?;
    let timing_us = started.elapsed().as_micros() as u64;

    let mut fields = vec![
        ("operator", Json::Str(args.op.clone())),
        ("value", Json::Num(value)),
        ("result", result),
        ("adjuncts", adjuncts),
    ];
    if let Some(check) = check {
        fields.push(("seed_check", check));
    }
    fields.push(("timing_us", Json::Int(timing_us)));
    fields.push((
        "tape",
        Json::obj(vec![
            ("num_inputs", Json::Int(tape.num_inputs() as u64)),
            ("num_nodes", Json::Int(tape.len() as u64)),
            (
                "inputs",
                Json::Arr(
                    tape.input_names()
                        .iter()
                        .map(|n| Json::Str(n.clone()))
                        .collect(),
                ),
            ),
        ]),
    ));
    Ok(Json::obj(fields))
}

fn scalar(v: f64) -> Json {
    Json::obj(vec![("kind", Json::Str("scalar".into())), ("data", Json::Num(v))])
}

fn vector(v: &[f64]) -> Json {
    Json::obj(vec![
        ("kind", Json::Str("vector".into())),
        ("dim", Json::Int(v.len() as u64)),
        ("data", Json::nums(v)),
    ])
}

fn matrix(m: &jetad::SymMat) -> Json {
    Json::obj(vec![
        ("kind", Json::Str("matrix".into())),
        ("dim", Json::Int(m.dim() as u64)),
        ("data", Json::nums(&m.to_dense())),
    ])
}

fn cube(c: &jetad::SymCube) -> Json {
    Json::obj(vec![
        ("kind", Json::Str("cube".into())),
        ("dim", Json::Int(c.dim() as u64)),
        ("data", Json::nums(&c.to_dense())),
    ])
}

fn adjuncts(fields: Vec<(&str, Json)>) -> Json {
    Json::obj(fields)
}

type OpOutput = (f64, Json, Json, Option<Json>);

fn dispatch(args: &Args, graph: &ExprGraph, tape: &Tape, x: &[f64]) -> Result<OpOutput, Failure> {
    let op = args.op.as_str();
    let n = tape.num_inputs();
    let need = |opt: &Option<String>, flag: &str| -> Result<Vec<f64>, Failure> {
        let v = parse_csv(seed(opt, flag, op)?, flag)?;
        if v.len() != n {
            return Err(from_core(Error::Dimension {
                what: "seed vector",
                expected: n,
                found: v.len(),
            }));
        }
        Ok(v)
    };
    let mut sc = if args.seed_check {
        Some(SeedCheck::new())
    } else {
        None
    };

    let out: OpOutput = match op {
        "dir1" => {
            let v = need(&args.v, "v")?;
            let r = dir1(tape, x, &v).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let g = gradient(tape, x).map_err(from_core)?;
                let dot: f64 = (0..n).map(|i| v[i] * g.grad[i]).sum();
                sc.compare("dir1 vs gradient contraction", r.dderiv, dot, 1e-12);
                let fd = fd_directional(tape, x, &[&v], &FdConfig::default()).map_err(from_core)?;
                sc.compare("dir1 vs finite differences", r.dderiv, fd, 1e-8);
            }
            (
                r.value,
                scalar(r.dderiv),
                adjuncts(vec![("f", Json::Num(r.value))]),
                None,
            )
        }
        "dir2" => {
            let v = need(&args.v, "v")?;
            let u = need(&args.u, "u")?;
            let r = dir2(tape, x, &v, &u).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let h = hessian_general(tape, x).map_err(from_core)?;
                sc.compare(
                    "dir2 vs hessian contraction",
                    r.vhu,
                    contract_hess(&h.hess, &v, &u),
                    1e-12,
                );
            }
            (
                r.value,
                scalar(r.vhu),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("vg", Json::Num(r.vg)),
                    ("ug", Json::Num(r.ug)),
                ]),
                None,
            )
        }
        "dir3" => {
            let v = need(&args.v, "v")?;
            let u = need(&args.u, "u")?;
            let w = need(&args.w, "w")?;
            let r = dir3(tape, x, &v, &u, &w).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let g3 = grad_dir2(tape, x, &v, &u).map_err(from_core)?;
                let dot: f64 = (0..n).map(|i| w[i] * g3.g3[i]).sum();
                sc.compare("dir3 vs grad_dir2 contraction", r.d3, dot, 1e-12);
            }
            (
                r.value,
                scalar(r.d3),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("vg", Json::Num(r.vg)),
                    ("ug", Json::Num(r.ug)),
                    ("wg", Json::Num(r.wg)),
                    ("vhu", Json::Num(r.vhu)),
                    ("vhw", Json::Num(r.vhw)),
                    ("uhw", Json::Num(r.uhw)),
                ]),
                None,
            )
        }
        "taylor" => {
            let d1 = need(&args.v, "v")?;
            let d2 = match &args.d2v {
                Some(t) => parse_csv(t, "--d2v")?,
                None => vec![0.0; n],
            };
            let d3 = match &args.d3v {
                Some(t) => parse_csv(t, "--d3v")?,
                None => vec![0.0; n],
            };
            let seed = TaylorSeed { d1, d2, d3 };
            let r = taylor_push(tape, x, &seed, 3).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let reference = taylor_reference(graph, x, &seed.d1, &seed.d2, &seed.d3)
                    .map_err(from_core)?;
                sc.compare("taylor d1 vs curve oracle", r.d1, reference[0], 1e-10);
                sc.compare("taylor d2 vs curve oracle", r.d2, reference[1], 1e-10);
                sc.compare("taylor d3 vs curve oracle", r.d3, reference[2], 1e-10);
            }
            (
                r.value,
                vector(&[r.d1, r.d2, r.d3]),
                adjuncts(vec![("f", Json::Num(r.value))]),
                None,
            )
        }
        "gradient" => {
            let r = gradient(tape, x).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let sym = symbolic_gradient(graph, x).map_err(from_core)?;
                sc.compare_vec("gradient vs symbolic", &r.grad, &sym, 1e-10);
            }
            (
                r.value,
                vector(&r.grad),
                adjuncts(vec![("f", Json::Num(r.value))]),
                None,
            )
        }
        "hessian" => {
            let r = hessian_general(tape, x).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let other = hessian_by_hvp(tape, x).map_err(from_core)?;
                for i in 0..n {
                    for j in i..n {
                        sc.compare(
                            &format!("hessian[{i}][{j}] vs hvp assembly"),
                            r.hess.get(i, j),
                            other.hess.get(i, j),
                            1e-12,
                        );
                    }
                }
            }
            (
                r.value,
                matrix(&r.hess),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("grad", Json::nums(&r.grad)),
                ]),
                None,
            )
        }
        "third" => {
            let r = third_order_general(tape, x).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let (pv, pu, pw) = (probe_seed(n, 0), probe_seed(n, 1), probe_seed(n, 2));
                let d = dir3(tape, x, &pv, &pu, &pw).map_err(from_core)?;
                sc.compare(
                    "third vs dir3 probe contraction",
                    contract_third_full(&r.third, &pv, &pu, &pw),
                    d.d3,
                    1e-12,
                );
            }
            (
                r.value,
                cube(&r.third),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("grad", Json::nums(&r.grad)),
                    ("hess", Json::nums(&r.hess.to_dense())),
                ]),
                None,
            )
        }
        "hvp" => {
            let v = need(&args.v, "v")?;
            let r = hvp(tape, x, &v).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let h = hessian_general(tape, x).map_err(from_core)?;
                sc.compare_vec("hvp vs hessian product", &r.hv, &hess_vec(&h.hess, &v), 1e-12);
            }
            (
                r.value,
                vector(&r.hv),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("vg", Json::Num(r.vg)),
                    ("grad", Json::nums(&r.grad)),
                ]),
                None,
            )
        }
        "grad_dir2" => {
            let v = need(&args.v, "v")?;
            let u = need(&args.u, "u")?;
            let r = grad_dir2(tape, x, &v, &u).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let t = third_order_general(tape, x).map_err(from_core)?;
                sc.compare_vec(
                    "grad_dir2 vs third-array contraction",
                    &r.g3,
                    &contract_third_once(&t.third, &v, &u),
                    1e-12,
                );
            }
            (
                r.value,
                vector(&r.g3),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("vg", Json::Num(r.vg)),
                    ("ug", Json::Num(r.ug)),
                    ("vhu", Json::Num(r.vhu)),
                    ("grad", Json::nums(&r.grad)),
                    ("hv", Json::nums(&r.hv)),
                    ("hu", Json::nums(&r.hu)),
                ]),
                None,
            )
        }
        "hessian_hvp" => {
            let r = hessian_by_hvp(tape, x).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let other = hessian_general(tape, x).map_err(from_core)?;
                for i in 0..n {
                    for j in i..n {
                        sc.compare(
                            &format!("hessian_hvp[{i}][{j}] vs single sweep"),
                            r.hess.get(i, j),
                            other.hess.get(i, j),
                            1e-12,
                        );
                    }
                }
            }
            (
                r.value,
                matrix(&r.hess),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("grad", Json::nums(&r.grad)),
                    ("max_asym", Json::Num(r.max_asym)),
                ]),
                None,
            )
        }
        "trace_mh" => {
            let rows = parse_matrix(seed(&args.m, "M", op)?)?;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(from_core(Error::Dimension {
                    what: "matrix M",
                    expected: n * n,
                    found: rows.iter().map(|r| r.len()).sum(),
                }));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            let r = grad_trace_mh(tape, x, &flat).map_err(from_core)?;
            if let Some(sc) = sc.as_mut() {
                let t = third_order_general(tape, x).map_err(from_core)?;
                for i in 0..n {
                    let mut want = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            want += flat[k * n + j] * t.third.get(i, j, k);
                        }
                    }
                    sc.compare(
                        &format!("trace_mh[{i}] vs third-array contraction"),
                        r.trace_grad[i],
                        want,
                        1e-10,
                    );
                }
            }
            (
                r.value,
                vector(&r.trace_grad),
                adjuncts(vec![
                    ("f", Json::Num(r.value)),
                    ("grad", Json::nums(&r.grad)),
                    ("hess", Json::nums(&r.hess.to_dense())),
                ]),
                None,
            )
        }
        other => {
            return Err(usage(format!(
                "unknown operator '{other}'; expected one of dir1, dir2, dir3, taylor, \
                 gradient, hessian, third, hvp, grad_dir2, hessian_hvp, trace_mh, check"
            )))
        }
    };

    let (value, result, adj, _) = out;
    let check_doc = match sc {
        None => None,
        Some(sc) => {
            if !sc.failures.is_empty() {
                return Err(Failure {
                    code: 1,
                    doc: Json::obj(vec![(
                        "error",
                        Json::obj(vec![
                            ("kind", Json::Str("seed_check".into())),
                            (
                                "message",
                                Json::Str(format!(
                                    "{} cross-check failure(s)",
                                    sc.failures.len()
                                )),
                            ),
                            (
                                "failures",
                                Json::Arr(
                                    sc.failures.iter().map(|f| Json::Str(f.clone())).collect(),
                                ),
                            ),
                        ]),
                    )]),
                });
            }
            Some(Json::obj(vec![
                ("status", Json::Str("ok".into())),
                ("max_gap", Json::Num(sc.max_gap)),
            ]))
        }
    };
    Ok((value, result, adj, check_doc))
}

fn run_check(args: &Args) -> Result<Json, Failure> {
    let started = Instant::now();
    let report = jetad::check::run_cross_check(0x5EED_11CE, 24);
    let timing_us = started.elapsed().as_micros() as u64;
    let worst = report
        .worst
        .iter()
        .map(|(label, gap, tol)| {
            Json::obj(vec![
                ("label", Json::Str(label.clone())),
                ("gap", Json::Num(*gap)),
                ("tol", Json::Num(*tol)),
            ])
        })
        .collect();
    let doc = Json::obj(vec![
        ("operator", Json::Str("check".into())),
        ("instances", Json::Int(report.instances as u64)),
        ("checks", Json::Int(report.checks as u64)),
        ("worst", Json::Arr(worst)),
        (
            "status",
            Json::Str(if report.ok() { "ok" } else { "failed" }.into()),
        ),
        (
            "failures",
            Json::Arr(report.failures.iter().map(|f| Json::Str(f.clone())).collect()),
        ),
        ("timing_us", Json::Int(timing_us)),
    ]);
    if report.ok() {
        // unused flags are accepted and ignored in check mode
        let _ = args;
        Ok(doc)
    } else {
        Err(Failure { code: 1, doc })
    }
}

//! Independent ground truth: central finite differences up to order three
//! and exact symbolic differentiation over the expression graph.
//!
//! Nothing here touches the sweep modules; the only shared machinery is the
//! primitive registry's `eval` and the expression containers. Every
//! derivative route in the crate is triangulated against these two.

use crate::error::{Error, Result};
use crate::parser::{ExprGraph, ExprKind, GraphBuilder, NodeId};
use crate::primitive::Primitive;
use crate::symtensor::{SymCube, SymMat};
use crate::tape::Tape;

/// Central-difference configuration: one step size per total derivative
/// order. The third-order step is deliberately coarse; truncation and
/// roundoff cross over early for nested third-order stencils.
#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            h1: 1e-5,
            h2: 1e-4,
            h3: 5e-3,
        }
    }
}

impl FdConfig {
    fn step(&self, order: usize) -> f64 {
        match order {
            1 => self.h1,
            2 => self.h2,
            _ => self.h3,
        }
    }
}

/// Mixed partial d^k F / dx_{i1} .. dx_{ik} (0-based indices, k <= 3) by
/// nested central stencils.
pub fn fd_derivative(tape: &Tape, x: &[f64], multi_index: &[usize], cfg: &FdConfig) -> Result<f64> {
    tape.check_point(x)?;
    if multi_index.is_empty() || multi_index.len() > 3 {
        return Err(Error::Dimension {
            what: "multi_index",
            expected: 3,
            found: multi_index.len(),
        });
    }
    let n = tape.num_inputs();
    let mut dirs = Vec::with_capacity(multi_index.len());
    for &i in multi_index {
        if i >= n {
            return Err(Error::Dimension {
                what: "multi_index entry",
                expected: n,
                found: i,
            });
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    let dir_refs: Vec<&[f64]> = dirs.iter().map(|d| d.as_slice()).collect();
    fd_directional(tape, x, &dir_refs, cfg)
}

/// Nested central differences along arbitrary direction vectors; with k
/// directions this estimates the k-linear contraction of the order-k
/// partial-derivative array against them.
pub fn fd_directional(tape: &Tape, x: &[f64], dirs: &[&[f64]], cfg: &FdConfig) -> Result<f64> {
    tape.check_point(x)?;
    for d in dirs {
        tape.check_seed(d, "fd direction")?;
    }
    if dirs.is_empty() || dirs.len() > 3 {
        return Err(Error::Dimension {
            what: "fd directions",
            expected: 3,
            found: dirs.len(),
        });
    }
    let h = cfg.step(dirs.len());
    fd_rec(tape, x, dirs, h)
}

fn fd_rec(tape: &Tape, x: &[f64], dirs: &[&[f64]], h: f64) -> Result<f64> {
    match dirs.split_last() {
        None => tape.eval_primal(x),
        Some((last, rest)) => {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            for i in 0..x.len() {
                hi[i] += h * last[i];
                lo[i] -= h * last[i];
            }
            let f_hi = fd_rec(tape, &hi, rest, h)?;
            let f_lo = fd_rec(tape, &lo, rest, h)?;
            Ok((f_hi - f_lo) / (2.0 * h))
        }
    }
}

/// Exact derivative of the expression graph with respect to input `var`
/// (0-based). The result shares the original graph's nodes and input list;
/// only the chain-rule nodes are appended.
pub fn symbolic_diff(graph: &ExprGraph, var: usize) -> ExprGraph {
    let mut b = GraphBuilder::extending(graph);
    let reachable = reachable_set(graph);
    let mut deriv: Vec<Option<NodeId>> = vec![None; graph.nodes().len()];
    for id in 0..graph.nodes().len() {
        if !reachable[id] {
            continue;
        }
        let node = graph.node(id);
        let d = match node.kind {
            ExprKind::Var(v) => b.constant(if v == var { 1.0 } else { 0.0 }),
            ExprKind::Const(_) => b.constant(0.0),
            ExprKind::Prim(p) => {
                let c = &node.children;
                let dc: Vec<NodeId> = c.iter().map(|&ch| deriv[ch].unwrap()).collect();
                diff_rule(&mut b, p, c, &dc)
            }
        };
        deriv[id] = Some(d);
    }
    let root = deriv[graph.root()].unwrap();
    b.finish(root)
}

fn diff_rule(b: &mut GraphBuilder, p: Primitive, c: &[NodeId], dc: &[NodeId]) -> NodeId {
    match p {
        Primitive::Add => sadd(b, dc[0], dc[1]),
        Primitive::Sub => ssub(b, dc[0], dc[1]),
        Primitive::Neg => sneg(b, dc[0]),
        Primitive::Mul => {
            let left = smul(b, dc[0], c[1]);
            let right = smul(b, c[0], dc[1]);
            sadd(b, left, right)
        }
        Primitive::Div => {
            // (a' b - a b') / (b b)
            let num_l = smul(b, dc[0], c[1]);
            let num_r = smul(b, c[0], dc[1]);
            let num = ssub(b, num_l, num_r);
            let den = smul(b, c[1], c[1]);
            sdiv(b, num, den)
        }
        Primitive::Pow => {
            // (a^b)' = a^b (b' log a + b a'/a)
            let f = b.prim(Primitive::Pow, vec![c[0], c[1]]);
            let log_a = b.prim(Primitive::Log, vec![c[0]]);
            let t1 = smul(b, dc[1], log_a);
            let a_ratio = sdiv(b, dc[0], c[0]);
            let t2 = smul(b, c[1], a_ratio);
            let sum = sadd(b, t1, t2);
            smul(b, f, sum)
        }
        Primitive::Sin => {
            let cos = b.prim(Primitive::Cos, vec![c[0]]);
            smul(b, cos, dc[0])
        }
        Primitive::Cos => {
            let sin = b.prim(Primitive::Sin, vec![c[0]]);
            let neg = sneg(b, sin);
            smul(b, neg, dc[0])
        }
        Primitive::Tan => {
            // (1 + tan^2 a) a'
            let tan = b.prim(Primitive::Tan, vec![c[0]]);
            let tan2 = smul(b, tan, tan);
            let one = b.constant(1.0);
            let sec2 = sadd(b, one, tan2);
            smul(b, sec2, dc[0])
        }
        Primitive::Exp => {
            let exp = b.prim(Primitive::Exp, vec![c[0]]);
            smul(b, exp, dc[0])
        }
        Primitive::Log => sdiv(b, dc[0], c[0]),
        Primitive::Sqrt => {
            // a' / (2 sqrt a)
            let root = b.prim(Primitive::Sqrt, vec![c[0]]);
            let two = b.constant(2.0);
            let den = smul(b, two, root);
            sdiv(b, dc[0], den)
        }
        Primitive::Tanh => {
            // (1 - tanh^2 a) a'
            let tanh = b.prim(Primitive::Tanh, vec![c[0]]);
            let tanh2 = smul(b, tanh, tanh);
            let one = b.constant(1.0);
            let s = ssub(b, one, tanh2);
            smul(b, s, dc[0])
        }
    }
}

// Construction shortcuts for the zero/one constants the chain rule spews
// out. Not a simplification pass; just keeps derivative graphs desk-sized.
fn sadd(b: &mut GraphBuilder, x: NodeId, y: NodeId) -> NodeId {
    if b.is_const(x, 0.0) {
        return y;
    }
    if b.is_const(y, 0.0) {
        return x;
    }
    b.prim(Primitive::Add, vec![x, y])
}

fn ssub(b: &mut GraphBuilder, x: NodeId, y: NodeId) -> NodeId {
    if b.is_const(y, 0.0) {
        return x;
    }
    if b.is_const(x, 0.0) {
        return sneg(b, y);
    }
    b.prim(Primitive::Sub, vec![x, y])
}

fn sneg(b: &mut GraphBuilder, x: NodeId) -> NodeId {
    if b.is_const(x, 0.0) {
        return x;
    }
    b.prim(Primitive::Neg, vec![x])
}

fn smul(b: &mut GraphBuilder, x: NodeId, y: NodeId) -> NodeId {
    if b.is_const(x, 0.0) || b.is_const(y, 1.0) {
        return x;
    }
    if b.is_const(y, 0.0) || b.is_const(x, 1.0) {
        return y;
    }
    b.prim(Primitive::Mul, vec![x, y])
}

fn sdiv(b: &mut GraphBuilder, x: NodeId, y: NodeId) -> NodeId {
    if b.is_const(x, 0.0) || b.is_const(y, 1.0) {
        return x;
    }
    b.prim(Primitive::Div, vec![x, y])
}

/// Direct recursive interpreter over the expression graph; the reference
/// semantics the tape's evaluation is checked against.
pub fn eval_graph(graph: &ExprGraph, x: &[f64]) -> Result<f64> {
    if x.len() != graph.num_inputs() {
        return Err(Error::Dimension {
            what: "point",
            expected: graph.num_inputs(),
            found: x.len(),
        });
    }
    let reachable = reachable_set(graph);
    let mut values = vec![0.0; graph.nodes().len()];
    for id in 0..graph.nodes().len() {
        if !reachable[id] {
            continue;
        }
        let node = graph.node(id);
        values[id] = match node.kind {
            ExprKind::Var(v) => x[v],
            ExprKind::Const(c) => c,
            ExprKind::Prim(p) => {
                let args: Vec<f64> = node.children.iter().map(|&ch| values[ch]).collect();
                p.eval(&args).map_err(|e| Error::Domain {
                    node: id + 1,
                    message: e.0,
                })?
            }
        };
    }
    Ok(values[graph.root()])
}

fn reachable_set(graph: &ExprGraph) -> Vec<bool> {
    let mut reachable = vec![false; graph.nodes().len()];
    let mut stack = vec![graph.root()];
    while let Some(id) = stack.pop() {
        if reachable[id] {
            continue;
        }
        reachable[id] = true;
        stack.extend_from_slice(&graph.node(id).children);
    }
    reachable
}

/// Exact gradient via repeated symbolic differentiation.
pub fn symbolic_gradient(graph: &ExprGraph, x: &[f64]) -> Result<Vec<f64>> {
    (0..graph.num_inputs())
        .map(|i| eval_graph(&symbolic_diff(graph, i), x))
        .collect()
}

/// Exact Hessian via second-order symbolic differentiation.
pub fn symbolic_hessian(graph: &ExprGraph, x: &[f64]) -> Result<SymMat> {
    let n = graph.num_inputs();
    let mut out = SymMat::zeros(n);
    for i in 0..n {
        let gi = symbolic_diff(graph, i);
        for j in i..n {
            out.set(i, j, eval_graph(&symbolic_diff(&gi, j), x)?);
        }
    }
    Ok(out)
}

/// Exact third-order partial-derivative array via third-order symbolic
/// differentiation.
pub fn symbolic_third(graph: &ExprGraph, x: &[f64]) -> Result<SymCube> {
    let n = graph.num_inputs();
    let mut out = SymCube::zeros(n);
    for i in 0..n {
        let gi = symbolic_diff(graph, i);
        for j in i..n {
            let gij = symbolic_diff(&gi, j);
            for k in j..n {
                out.set(i, j, k, eval_graph(&symbolic_diff(&gij, k), x)?);
            }
        }
    }
    Ok(out)
}

/// Reference jet for the Taylor-mode pushforward: substitute the curve
/// c_i(t) = x_i + d1_i t + d2_i t^2/2 + d3_i t^3/6 into the graph, then
/// differentiate the resulting one-variable expression symbolically three
/// times and evaluate at t = 0. Returns (g'(0), g''(0), g'''(0)).
pub fn taylor_reference(
    graph: &ExprGraph,
    x: &[f64],
    d1: &[f64],
    d2: &[f64],
    d3: &[f64],
) -> Result<[f64; 3]> {
    let n = graph.num_inputs();
    for (arr, what) in [(x, "point"), (d1, "seed d1"), (d2, "seed d2"), (d3, "seed d3")] {
        if arr.len() != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                found: arr.len(),
            });
        }
    }
    let mut b = GraphBuilder::new();
    let t = b.var("t");
    let reachable = reachable_set(graph);
    let mut mapped: Vec<Option<NodeId>> = vec![None; graph.nodes().len()];
    for id in 0..graph.nodes().len() {
        if !reachable[id] {
            continue;
        }
        let node = graph.node(id);
        let new_id = match node.kind {
            ExprKind::Var(v) => {
                // x + d1 t + (d2/2) t^2 + (d3/6) t^3
                let mut acc = b.constant(x[v]);
                for (coef, power) in [(d1[v], 1), (d2[v] / 2.0, 2), (d3[v] / 6.0, 3)] {
                    if coef == 0.0 {
                        continue;
                    }
                    let mut term = b.constant(coef);
                    for _ in 0..power {
                        term = b.prim(Primitive::Mul, vec![term, t]);
                    }
                    acc = b.prim(Primitive::Add, vec![acc, term]);
                }
                acc
            }
            ExprKind::Const(c) => b.constant(c),
            ExprKind::Prim(p) => {
                let children: Vec<NodeId> =
                    node.children.iter().map(|&ch| mapped[ch].unwrap()).collect();
                b.prim(p, children)
            }
        };
        mapped[id] = Some(new_id);
    }
    let curve = b.finish(mapped[graph.root()].unwrap());

    let g1 = symbolic_diff(&curve, 0);
    let g2 = symbolic_diff(&g1, 0);
    let g3 = symbolic_diff(&g2, 0);
    Ok([
        eval_graph(&g1, &[0.0])?,
        eval_graph(&g2, &[0.0])?,
        eval_graph(&g3, &[0.0])?,
    ])
}

/// Comparison gap: absolute for small magnitudes, relative for large ones.
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

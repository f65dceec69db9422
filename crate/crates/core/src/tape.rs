//! Compilation of an expression graph into a topologically sorted tape of
//! many-to-one nodes, plus the forward value pass and per-node partials.
//!
//! Node indices are 0-based internally; the dump format and error messages
//! use the conventional 1-based stack index s = 1..S with the N input slots
//! first.

use crate::error::{Error, Result};
use crate::parser::{ExprGraph, ExprKind};
use crate::primitive::{PartialSet, Primitive};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Input slot; payload indexes the tape's input-name list.
    Input(usize),
    /// Constant subexpression with zero inputs and all partials zero.
    Const(f64),
    Prim(Primitive),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapeNode {
    pub kind: NodeKind,
    /// Global indices I(1,s)..I(k,s) of this node's inputs; all smaller
    /// than the node's own index.
    pub inputs: Vec<usize>,
}

impl TapeNode {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }
}

/// Topologically sorted stack of tape nodes. Immutable once built; sweep
/// state (values, coordinate banks) lives in per-sweep buffers so one tape
/// can serve concurrent sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    nodes: Vec<TapeNode>,
    input_names: Vec<String>,
}

impl Tape {
    pub fn num_inputs(&self) -> usize {
        self.input_names.len()
    }

    /// Total stack size S = N + number of subexpressions.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TapeNode] {
        &self.nodes
    }

    pub fn node(&self, s: usize) -> &TapeNode {
        &self.nodes[s]
    }

    /// Index of the root node (always the last stack entry).
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_inputs() {
            return Err(Error::Dimension {
                what: "point",
                expected: self.num_inputs(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_seed(&self, v: &[f64], what: &'static str) -> Result<()> {
        if v.len() != self.num_inputs() {
            return Err(Error::Dimension {
                what,
                expected: self.num_inputs(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Forward value pass: populate every node value in stack order and
    /// return the full buffer.
    pub fn eval_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut values = vec![0.0; self.nodes.len()];
        let mut args = [0.0; 2];
        for (s, node) in self.nodes.iter().enumerate() {
            values[s] = match &node.kind {
                NodeKind::Input(i) => x[*i],
                NodeKind::Const(c) => *c,
                NodeKind::Prim(p) => {
                    for (slot, &g) in args.iter_mut().zip(&node.inputs) {
                        *slot = values[g];
                    }
                    p.eval(&args[..node.inputs.len()])
                        .map_err(|e| Error::Domain {
                            node: s + 1,
                            message: e.0,
                        })?
                }
            };
        }
        Ok(values)
    }

    /// Value of the expression at `x`.
    pub fn eval_primal(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_values(x)?[self.root()])
    }

    /// Analytic partials of node `s` at its current input values,
    /// up to `order` (1..=3). Leaves have no partials (arity 0).
    pub fn node_partials(&self, s: usize, values: &[f64], order: u8) -> Result<PartialSet> {
        let node = &self.nodes[s];
        match &node.kind {
            NodeKind::Input(_) | NodeKind::Const(_) => Ok(PartialSet::zeros(0, order)),
            NodeKind::Prim(p) => {
                let mut args = [0.0; 2];
                for (slot, &g) in args.iter_mut().zip(&node.inputs) {
                    *slot = values[g];
                }
                p.partials(&args[..node.inputs.len()], order)
                    .map_err(|e| Error::Domain {
                        node: s + 1,
                        message: e.0,
                    })
            }
        }
    }

    /// Partials of every node, computed once per sweep and shared between
    /// the forward and reverse halves of mixed-mode sweeps.
    pub(crate) fn all_partials(&self, values: &[f64], order: u8) -> Result<Vec<PartialSet>> {
        (0..self.nodes.len())
            .map(|s| self.node_partials(s, values, order))
            .collect()
    }

    /// Debug/golden-test dump: `in <s> <name>` for input slots, then
    /// `s <s> <primitive> <I(1,s)> ...` per subexpression, 1-based.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (s, node) in self.nodes.iter().enumerate() {
            match &node.kind {
                NodeKind::Input(i) => {
                    out.push_str(&format!("in {} {}\n", s + 1, self.input_names[*i]));
                }
                NodeKind::Const(c) => {
                    out.push_str(&format!("s {} const {c}\n", s + 1));
                }
                NodeKind::Prim(p) => {
                    out.push_str(&format!("s {} {}", s + 1, p.name()));
                    for g in &node.inputs {
                        out.push_str(&format!(" {}", g + 1));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Compile an expression graph into a tape.
///
/// Only nodes reachable from the root are kept. Input slots come first in
/// the graph's input order; subexpressions follow in parser creation order,
/// which is a topological order (ties broken by creation index).
pub fn build_tape(graph: &ExprGraph) -> Result<Tape> {
    let reachable = reachable_from_root(graph)?;

    // Input slots first, in the graph's declared input order, regardless of
    // where the variable leaves sit in creation order. A declared input with
    // no reachable leaf (possible in derivative graphs) still owns a slot so
    // the tape dimension matches the graph's input list.
    enum Slot {
        BareInput(usize),
        GraphNode(usize),
    }
    let num_inputs = graph.num_inputs();
    let mut var_leaf = vec![None; num_inputs];
    for (id, node) in graph.nodes().iter().enumerate() {
        if let ExprKind::Var(v) = node.kind {
            if reachable[id] {
                var_leaf[v] = Some(id);
            }
        }
    }
    let mut order: Vec<Slot> = Vec::new();
    for (v, leaf) in var_leaf.iter().enumerate() {
        order.push(match leaf {
            Some(id) => Slot::GraphNode(*id),
            None => Slot::BareInput(v),
        });
    }
    for (id, node) in graph.nodes().iter().enumerate() {
        if reachable[id] && !matches!(node.kind, ExprKind::Var(_)) {
            order.push(Slot::GraphNode(id));
        }
    }

    let mut tape_index = vec![usize::MAX; graph.nodes().len()];
    let mut nodes = Vec::with_capacity(order.len());
    for (s, slot) in order.iter().enumerate() {
        let id = match slot {
            Slot::BareInput(v) => {
                nodes.push(TapeNode {
                    kind: NodeKind::Input(*v),
                    inputs: Vec::new(),
                });
                continue;
            }
            Slot::GraphNode(id) => *id,
        };
        let gnode = graph.node(id);
        let kind = match gnode.kind {
            ExprKind::Var(v) => NodeKind::Input(v),
            ExprKind::Const(c) => NodeKind::Const(c),
            ExprKind::Prim(p) => NodeKind::Prim(p),
        };
        let mut inputs = Vec::with_capacity(gnode.children.len());
        for &child in &gnode.children {
            let mapped = tape_index[child];
            if mapped == usize::MAX || mapped >= s {
                return Err(Error::Cycle { node: s + 1 });
            }
            inputs.push(mapped);
        }
        tape_index[id] = s;
        nodes.push(TapeNode { kind, inputs });
    }

    Ok(Tape {
        nodes,
        input_names: graph.inputs().to_vec(),
    })
}

fn reachable_from_root(graph: &ExprGraph) -> Result<Vec<bool>> {
    let n = graph.nodes().len();
    let mut reachable = vec![false; n];
    // Iterative DFS with an explicit visiting set for cycle detection.
    let mut on_stack = vec![false; n];
    let mut stack: Vec<(usize, usize)> = vec![(graph.root(), 0)];
    on_stack[graph.root()] = true;
    while let Some(&mut (id, ref mut next)) = stack.last_mut() {
        let children = &graph.node(id).children;
        if *next < children.len() {
            let child = children[*next];
            *next += 1;
            if on_stack[child] {
                return Err(Error::Cycle { node: child + 1 });
            }
            if !reachable[child] {
                on_stack[child] = true;
                stack.push((child, 0));
            }
        } else {
            reachable[id] = true;
            on_stack[id] = false;
            stack.pop();
        }
    }
    Ok(reachable)
}

//! Explicit component functions: one stage per subexpression, complemented
//! with identity rows that carry live intermediate values forward, so the
//! tape becomes an honest composition F = F_S ∘ ... ∘ F_1.
//!
//! A stage's Jacobian arrays are sparse by construction: identity rows have
//! a single unit first-order entry and no higher-order structure, and only
//! the active row carries the primitive's partials. The higher-order
//! covelocity pullbacks in `reverse` exploit exactly this shape.

use crate::error::Result;
use crate::primitive::PartialSet;
use crate::symtensor::{SymCube, SymMat};
use crate::tape::{NodeKind, Tape};

/// One stage F_n : R^{D_{n-1}} -> R^{D_n} of the composition.
#[derive(Debug, Clone)]
pub struct ComponentFunction {
    /// 1-based stage index n.
    pub stage: usize,
    /// Tape index of the subexpression this stage computes.
    pub node: usize,
    /// Tape indices of the live variables consumed, in canonical
    /// (ascending tape index) order. Length D_{n-1}.
    pub input_nodes: Vec<usize>,
    /// Tape indices of the live variables produced. Length D_n.
    pub output_nodes: Vec<usize>,
    /// One descriptor per output coordinate.
    pub rows: Vec<StageRow>,
    /// Position of the active row within `rows`.
    pub active_row: usize,
    /// Positions (into the stage input vector) of the active primitive's
    /// arguments; repeated positions encode repeated arguments.
    pub active_args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageRow {
    /// Identity pass-through of one input coordinate.
    Identity { from: usize },
    /// The stage's single active subexpression.
    Active,
}

impl ComponentFunction {
    pub fn input_dim(&self) -> usize {
        self.input_nodes.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_nodes.len()
    }

    /// Apply the stage map to a vector over its input variable set.
    pub fn apply(&self, tape: &Tape, x_in: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(x_in.len(), self.input_dim());
        let mut out = Vec::with_capacity(self.output_dim());
        for row in &self.rows {
            match row {
                StageRow::Identity { from } => out.push(x_in[*from]),
                StageRow::Active => {
                    let mut args = [0.0; 2];
                    for (slot, &p) in args.iter_mut().zip(&self.active_args) {
                        *slot = x_in[p];
                    }
                    let value = match &tape.node(self.node).kind {
                        NodeKind::Const(c) => *c,
                        NodeKind::Prim(prim) => prim
                            .eval(&args[..self.active_args.len()])
                            .map_err(|e| crate::error::Error::Domain {
                                node: self.node + 1,
                                message: e.0,
                            })?,
                        NodeKind::Input(_) => unreachable!("input nodes never form a stage"),
                    };
                    out.push(value);
                }
            }
        }
        Ok(out)
    }

    /// Evaluate the stage's sparse Jacobian arrays at the tape values of a
    /// completed forward pass.
    pub fn jacobian(&self, tape: &Tape, values: &[f64], order: u8) -> Result<StageJacobian> {
        let partials = tape.node_partials(self.node, values, order)?;
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            match row {
                StageRow::Identity { from } => rows.push(vec![(*from, 1.0)]),
                StageRow::Active => {
                    let sup = self
                        .active_args
                        .iter()
                        .enumerate()
                        .map(|(a, &p)| (p, partials.d1(a)))
                        .collect();
                    rows.push(sup);
                }
            }
        }
        Ok(StageJacobian {
            in_dim: self.input_dim(),
            out_dim: self.output_dim(),
            rows,
            active_row: self.active_row,
            active_args: self.active_args.clone(),
            partials,
        })
    }
}

/// Sparse first/second/third-order Jacobian arrays of one stage, evaluated
/// at a point. Row `l` holds its first-order support as (input position,
/// weight) pairs; higher-order entries exist only on the active row and are
/// read from `partials` through `active_args`.
#[derive(Debug, Clone)]
pub struct StageJacobian {
    pub in_dim: usize,
    pub out_dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    active_row: usize,
    active_args: Vec<usize>,
    partials: PartialSet,
}

impl StageJacobian {
    pub fn active_row(&self) -> usize {
        self.active_row
    }

    pub fn row_support(&self, l: usize) -> &[(usize, f64)] {
        &self.rows[l]
    }

    /// First-order pushforward of a vector of coordinates.
    pub fn push_vec(&self, dv: &[f64]) -> Vec<f64> {
        debug_assert_eq!(dv.len(), self.in_dim);
        self.rows
            .iter()
            .map(|sup| sup.iter().map(|&(i, w)| w * dv[i]).sum())
            .collect()
    }

    /// Pushforward of the crossed second-order coordinate (dv du)*:
    /// first-order transport of the crossed coordinate plus the
    /// second-partial pairing of the two first-order coordinates.
    pub fn push_crossed(&self, dv: &[f64], du: &[f64], dvu: &[f64]) -> Vec<f64> {
        let mut out = self.push_vec(dvu);
        let arity = self.active_args.len();
        let mut pair = 0.0;
        for a in 0..arity {
            for b in 0..arity {
                pair += self.partials.d2(a, b)
                    * dv[self.active_args[a]]
                    * du[self.active_args[b]];
            }
        }
        out[self.active_row] += pair;
        out
    }

    /// First-order covelocity pullback: alpha1_in = J^T alpha1.
    pub fn pull_alpha1(&self, alpha1: &[f64]) -> Vec<f64> {
        debug_assert_eq!(alpha1.len(), self.out_dim);
        let mut out = vec![0.0; self.in_dim];
        for (sup, &a) in self.rows.iter().zip(alpha1) {
            if a != 0.0 {
                for &(i, w) in sup {
                    out[i] += w * a;
                }
            }
        }
        out
    }

    /// Second-order covelocity pullback. Reads only the incoming
    /// coordinates, never partially updated ones.
    pub fn pull_alpha2(&self, alpha1: &[f64], alpha2: &SymMat) -> SymMat {
        debug_assert_eq!(alpha2.dim(), self.out_dim);
        let n = self.in_dim;
        let mut scratch = vec![0.0; n * n];
        // Second partials of the active row against the incoming alpha1.
        let a_act = alpha1[self.active_row];
        if a_act != 0.0 {
            let arity = self.active_args.len();
            for a in 0..arity {
                for b in 0..arity {
                    scratch[self.active_args[a] * n + self.active_args[b]] +=
                        self.partials.d2(a, b) * a_act;
                }
            }
        }
        // Congruence transport of the incoming alpha2 through the sparse
        // first-order Jacobian.
        for (l, sup_l) in self.rows.iter().enumerate() {
            for (m, sup_m) in self.rows.iter().enumerate() {
                let c = alpha2.get(l, m);
                if c == 0.0 {
                    continue;
                }
                for &(i, wi) in sup_l {
                    for &(j, wj) in sup_m {
                        scratch[i * n + j] += wi * wj * c;
                    }
                }
            }
        }
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                out.set(i, j, scratch[i * n + j]);
            }
        }
        out
    }

    /// Third-order covelocity pullback: third partials against alpha1,
    /// the symmetrized first x second pairing against alpha2, and the
    /// triple congruence of alpha3.
    pub fn pull_alpha3(&self, alpha1: &[f64], alpha2: &SymMat, alpha3: &SymCube) -> SymCube {
        debug_assert_eq!(alpha3.dim(), self.out_dim);
        let n = self.in_dim;
        let mut scratch = vec![0.0; n * n * n];
        let at = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
        let arity = self.active_args.len();

        let a_act = alpha1[self.active_row];
        if a_act != 0.0 {
            for a in 0..arity {
                for b in 0..arity {
                    for c in 0..arity {
                        scratch[at(
                            self.active_args[a],
                            self.active_args[b],
                            self.active_args[c],
                        )] += self.partials.d3(a, b, c) * a_act;
                    }
                }
            }
        }

        // (J^l_i J^m_jk + J^l_j J^m_ik + J^l_k J^m_ij) alpha2_lm: the second
        // partials live only on the active row, so contract alpha2 against
        // it once and distribute over the three index placements.
        let mut uvec = vec![0.0; n];
        for (l, sup_l) in self.rows.iter().enumerate() {
            let c = alpha2.get(l, self.active_row);
            if c == 0.0 {
                continue;
            }
            for &(i, w) in sup_l {
                uvec[i] += w * c;
            }
        }
        for a in 0..arity {
            for b in 0..arity {
                let h = self.partials.d2(a, b);
                if h == 0.0 {
                    continue;
                }
                let (p, q) = (self.active_args[a], self.active_args[b]);
                for i in 0..n {
                    let t = uvec[i] * h;
                    scratch[at(i, p, q)] += t;
                    scratch[at(p, i, q)] += t;
                    scratch[at(p, q, i)] += t;
                }
            }
        }

        // Triple congruence of the incoming alpha3.
        for (l, sup_l) in self.rows.iter().enumerate() {
            for (m, sup_m) in self.rows.iter().enumerate() {
                for (q, sup_q) in self.rows.iter().enumerate() {
                    let c = alpha3.get(l, m, q);
                    if c == 0.0 {
                        continue;
                    }
                    for &(i, wi) in sup_l {
                        for &(j, wj) in sup_m {
                            for &(k, wk) in sup_q {
                                scratch[at(i, j, k)] += wi * wj * wk * c;
                            }
                        }
                    }
                }
            }
        }

        let mut out = SymCube::zeros(n);
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    out.set(i, j, k, scratch[at(i, j, k)]);
                }
            }
        }
        out
    }
}

/// Decompose a tape into component functions: one stage per subexpression
/// in stack order, each carrying only the variables still referenced by a
/// later stage or the root.
pub fn build_component_functions(tape: &Tape) -> Vec<ComponentFunction> {
    let n_inputs = tape.num_inputs();
    let total = tape.len();
    let root = tape.root();

    // last_use[u]: greatest stack index that reads u as an input.
    let mut last_use = vec![None; total];
    for (s, node) in tape.nodes().iter().enumerate() {
        for &g in &node.inputs {
            last_use[g] = Some(s);
        }
    }
    let live_after = |u: usize, s: usize| -> bool {
        u == root || matches!(last_use[u], Some(l) if l > s)
    };

    // Live set before the first stage: the tape inputs in slot order.
    let mut live: Vec<usize> = (0..n_inputs).collect();
    let mut stages = Vec::with_capacity(total - n_inputs);
    for s in n_inputs..total {
        let input_nodes = live.clone();
        let position = |u: usize| input_nodes.iter().position(|&g| g == u).unwrap();
        let active_args: Vec<usize> = tape.node(s).inputs.iter().map(|&g| position(g)).collect();

        let mut output_nodes: Vec<usize> = input_nodes
            .iter()
            .copied()
            .filter(|&u| live_after(u, s))
            .collect();
        output_nodes.push(s);
        output_nodes.sort_unstable();

        let mut rows = Vec::with_capacity(output_nodes.len());
        let mut active_row = 0;
        for (o, &u) in output_nodes.iter().enumerate() {
            if u == s {
                active_row = o;
                rows.push(StageRow::Active);
            } else {
                rows.push(StageRow::Identity { from: position(u) });
            }
        }

        stages.push(ComponentFunction {
            stage: s - n_inputs + 1,
            node: s,
            input_nodes,
            output_nodes: output_nodes.clone(),
            rows,
            active_row,
            active_args,
        });
        live = output_nodes;
    }
    stages
}

/// Compose all stages at `x`; equals the tape's forward evaluation.
pub fn compose(tape: &Tape, stages: &[ComponentFunction], x: &[f64]) -> Result<f64> {
    tape.check_point(x)?;
    let mut state = x.to_vec();
    for stage in stages {
        state = stage.apply(tape, &state)?;
    }
    debug_assert_eq!(state.len(), 1);
    Ok(state[0])
}

//! Reverse-mode sweeps.
//!
//! The gradient is the classic local reverse accumulation over the tape.
//! The full Hessian and the full third-order partial-derivative array each
//! come from ONE reverse sweep of a higher-order covelocity over the
//! component functions: identity rows transport entries, the single active
//! row mixes them through the primitive's partials. A node's update always
//! reads the incoming (pre-update) covelocity of the stage above it.

use crate::component::{build_component_functions, ComponentFunction};
use crate::error::Result;
use crate::stats::SweepStats;
use crate::symtensor::{SymCube, SymMat};
use crate::tape::Tape;

/// Per-order coordinate arrays of a (1,R)-covelocity over one stage's
/// variable set. `alpha3` is present only for third-order sweeps.
#[derive(Debug, Clone)]
pub struct CovelocityState {
    pub alpha1: Vec<f64>,
    pub alpha2: SymMat,
    pub alpha3: Option<SymCube>,
}

impl CovelocityState {
    /// Unit seed at the root: alpha1 = (1), higher orders zero.
    pub fn seed(order: u8) -> Self {
        CovelocityState {
            alpha1: vec![1.0],
            alpha2: SymMat::zeros(1),
            alpha3: if order >= 3 {
                Some(SymCube::zeros(1))
            } else {
                None
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha1.len()
    }
}

/// Pull a covelocity back through one stage, producing the state over the
/// stage's input variable set.
pub fn pull_stage(
    stage: &ComponentFunction,
    tape: &Tape,
    values: &[f64],
    state: &CovelocityState,
) -> Result<CovelocityState> {
    let order = if state.alpha3.is_some() { 3 } else { 2 };
    let jac = stage.jacobian(tape, values, order)?;
    let alpha1 = jac.pull_alpha1(&state.alpha1);
    let alpha2 = jac.pull_alpha2(&state.alpha1, &state.alpha2);
    let alpha3 = state
        .alpha3
        .as_ref()
        .map(|a3| jac.pull_alpha3(&state.alpha1, &state.alpha2, a3));
    Ok(CovelocityState {
        alpha1,
        alpha2,
        alpha3,
    })
}

/// First-order reverse mode: the gradient in one forward value pass and one
/// reverse accumulation pass. Fan-out accumulates additively.
pub fn gradient(tape: &Tape, x: &[f64]) -> Result<Gradient> {
    tape.check_point(x)?;
    let values = tape.eval_values(x)?;
    let n = tape.num_inputs();
    let len = tape.len();
    let mut stats = SweepStats {
        forward_visits: len as u64,
        forward_sweeps: 1,
        reverse_sweeps: 1,
        ..Default::default()
    };
    let mut adjoint = vec![0.0; len];
    adjoint[tape.root()] = 1.0;
    for s in (0..len).rev() {
        stats.reverse_visits += 1;
        if s < n {
            continue;
        }
        let p = tape.node_partials(s, &values, 1)?;
        let a = adjoint[s];
        let node = tape.node(s);
        for (i, &g) in node.inputs.iter().enumerate() {
            adjoint[g] += p.d1(i) * a;
        }
    }
    Ok(Gradient {
        value: values[tape.root()],
        grad: adjoint[..n].to_vec(),
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Gradient {
    pub value: f64,
    pub grad: Vec<f64>,
    pub stats: SweepStats,
}

/// Full Hessian from a single (1,2)-covelocity pullback over the component
/// functions, with the gradient and value as adjuncts of the same sweep.
pub fn hessian_general(tape: &Tape, x: &[f64]) -> Result<Hessian> {
    let (value, state, stats) = pull_general(tape, x, 2)?;
    Ok(Hessian {
        value,
        grad: state.alpha1,
        hess: state.alpha2,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Hessian {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymMat,
    pub stats: SweepStats,
}

/// Full third-order partial-derivative array from a single (1,3)-covelocity
/// pullback, with gradient and Hessian as adjuncts of the same sweep.
pub fn third_order_general(tape: &Tape, x: &[f64]) -> Result<ThirdOrder> {
    let (value, state, stats) = pull_general(tape, x, 3)?;
    Ok(ThirdOrder {
        value,
        grad: state.alpha1,
        hess: state.alpha2,
        third: state.alpha3.expect("order-3 sweep carries alpha3"),
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct ThirdOrder {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymMat,
    pub third: SymCube,
    pub stats: SweepStats,
}

fn pull_general(tape: &Tape, x: &[f64], order: u8) -> Result<(f64, CovelocityState, SweepStats)> {
    tape.check_point(x)?;
    let values = tape.eval_values(x)?;
    let value = values[tape.root()];
    let n = tape.num_inputs();
    let stages = build_component_functions(tape);
    let mut stats = SweepStats {
        forward_visits: tape.len() as u64,
        forward_sweeps: 1,
        reverse_sweeps: 1,
        ..Default::default()
    };

    if stages.is_empty() {
        // Root is an input: the gradient of the identity is the indicator.
        let mut state = CovelocityState {
            alpha1: vec![0.0; n],
            alpha2: SymMat::zeros(n),
            alpha3: if order >= 3 {
                Some(SymCube::zeros(n))
            } else {
                None
            },
        };
        state.alpha1[tape.root()] = 1.0;
        return Ok((value, state, stats));
    }

    let mut state = CovelocityState::seed(order);
    for stage in stages.iter().rev() {
        stats.reverse_visits += 1;
        state = pull_stage(stage, tape, &values, &state)?;
    }
    debug_assert_eq!(state.dim(), n);
    Ok((value, state, stats))
}

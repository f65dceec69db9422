//! Mixed-mode sweeps: one forward velocity pass interleaved with one
//! reverse contraction pass, all local to the tape nodes.
//!
//! The contraction banks realize the conditional second-order adjoint:
//! with the root covelocity seeded to (1, 0, ...), pulling back
//! b = (dv*)^m (d2 alpha)_lm alongside the ordinary adjoint yields H.v at
//! the inputs without ever materializing a stage Hessian array. The
//! third-order banks g and e extend the same scheme one order up.

use crate::error::{Error, Result};
use crate::stats::SweepStats;
use crate::symtensor::SymMat;
use crate::tape::Tape;

/// Hessian-vector product H.v in one forward and one reverse pass, with the
/// value, v.grad and the full gradient as adjuncts.
pub fn hvp(tape: &Tape, x: &[f64], v: &[f64]) -> Result<Hvp> {
    tape.check_point(x)?;
    tape.check_seed(v, "seed v")?;
    let values = tape.eval_values(x)?;
    let partials = tape.all_partials(&values, 2)?;
    let n = tape.num_inputs();
    let len = tape.len();
    let mut stats = SweepStats {
        forward_sweeps: 1,
        reverse_sweeps: 1,
        ..Default::default()
    };

    // forward: velocity push
    let mut vel = vec![0.0; len];
    for s in 0..len {
        stats.forward_visits += 1;
        if s < n {
            vel[s] = v[s];
            continue;
        }
        let p = &partials[s];
        let node = tape.node(s);
        let mut acc = 0.0;
        for (i, &g) in node.inputs.iter().enumerate() {
            acc += p.d1(i) * vel[g];
        }
        vel[s] = acc;
    }

    // reverse: adjoint and conditional second-order adjoint
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    a[tape.root()] = 1.0;
    for s in (0..len).rev() {
        stats.reverse_visits += 1;
        if s < n {
            continue;
        }
        let p = &partials[s];
        let node = tape.node(s);
        let (a_s, b_s) = (a[s], b[s]);
        for (i, &gi) in node.inputs.iter().enumerate() {
            a[gi] += p.d1(i) * a_s;
            let mut acc = p.d1(i) * b_s;
            for (j, &gj) in node.inputs.iter().enumerate() {
                acc += p.d2(i, j) * vel[gj] * a_s;
            }
            b[gi] += acc;
        }
    }

    Ok(Hvp {
        value: values[tape.root()],
        vg: vel[tape.root()],
        grad: a[..n].to_vec(),
        hv: b[..n].to_vec(),
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Hvp {
    pub value: f64,
    pub vg: f64,
    pub grad: Vec<f64>,
    pub hv: Vec<f64>,
    pub stats: SweepStats,
}

/// Gradient of the second-order directional derivative: g3_i = sum_jk
/// v_j u_k d3F/dxi dxj dxk, via the contractions b, g and the third-order
/// contraction e pulled back together. Adjuncts: value, both first-order
/// directional derivatives, v^T H u, the gradient, and both
/// Hessian-vector products.
pub fn grad_dir2(tape: &Tape, x: &[f64], v: &[f64], u: &[f64]) -> Result<GradDir2> {
    tape.check_point(x)?;
    tape.check_seed(v, "seed v")?;
    tape.check_seed(u, "seed u")?;
    let values = tape.eval_values(x)?;
    let partials = tape.all_partials(&values, 3)?;
    let n = tape.num_inputs();
    let len = tape.len();
    let mut stats = SweepStats {
        forward_sweeps: 1,
        reverse_sweeps: 1,
        ..Default::default()
    };

    // forward: v, u and the crossed coordinate vu
    let mut bv = vec![0.0; len];
    let mut bu = vec![0.0; len];
    let mut bvu = vec![0.0; len];
    for s in 0..len {
        stats.forward_visits += 1;
        if s < n {
            bv[s] = v[s];
            bu[s] = u[s];
            continue;
        }
        let p = &partials[s];
        let node = tape.node(s);
        let (mut av, mut au, mut avu) = (0.0, 0.0, 0.0);
        for (i, &gi) in node.inputs.iter().enumerate() {
            av += p.d1(i) * bv[gi];
            au += p.d1(i) * bu[gi];
            avu += p.d1(i) * bvu[gi];
            for (j, &gj) in node.inputs.iter().enumerate() {
                avu += p.d2(i, j) * bv[gi] * bu[gj];
            }
        }
        bv[s] = av;
        bu[s] = au;
        bvu[s] = avu;
    }

    // reverse: adjoint a, contractions b (pairs with v), g (pairs with u),
    // and the third-order contraction e
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    let mut g = vec![0.0; len];
    let mut e = vec![0.0; len];
    a[tape.root()] = 1.0;
    for s in (0..len).rev() {
        stats.reverse_visits += 1;
        if s < n {
            continue;
        }
        let p = &partials[s];
        let node = tape.node(s);
        let (a_s, b_s, g_s, e_s) = (a[s], b[s], g[s], e[s]);
        for (i, &gi) in node.inputs.iter().enumerate() {
            a[gi] += p.d1(i) * a_s;
            let mut acc_b = p.d1(i) * b_s;
            let mut acc_g = p.d1(i) * g_s;
            let mut acc_e = p.d1(i) * e_s;
            for (j, &gj) in node.inputs.iter().enumerate() {
                let d2 = p.d2(i, j);
                acc_b += d2 * bv[gj] * a_s;
                acc_g += d2 * bu[gj] * a_s;
                acc_e += d2 * (bv[gj] * g_s + bu[gj] * b_s + bvu[gj] * a_s);
                for (k, &gk) in node.inputs.iter().enumerate() {
                    acc_e += p.d3(i, j, k) * bv[gj] * bu[gk] * a_s;
                }
            }
            b[gi] += acc_b;
            g[gi] += acc_g;
            e[gi] += acc_e;
        }
    }

    let root = tape.root();
    Ok(GradDir2 {
        value: values[root],
        vg: bv[root],
        ug: bu[root],
        vhu: bvu[root],
        grad: a[..n].to_vec(),
        hv: b[..n].to_vec(),
        hu: g[..n].to_vec(),
        g3: e[..n].to_vec(),
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct GradDir2 {
    pub value: f64,
    pub vg: f64,
    pub ug: f64,
    pub vhu: f64,
    pub grad: Vec<f64>,
    pub hv: Vec<f64>,
    pub hu: Vec<f64>,
    pub g3: Vec<f64>,
    pub stats: SweepStats,
}

/// Full Hessian assembled from N Hessian-vector products against the basis
/// vectors, symmetrized by averaging. Asymmetry beyond roundoff indicates a
/// partials bug, so it is a hard error rather than a diagnostic.
pub fn hessian_by_hvp(tape: &Tape, x: &[f64]) -> Result<HessianByHvp> {
    tape.check_point(x)?;
    let n = tape.num_inputs();
    let mut stats = SweepStats::default();
    let mut columns = Vec::with_capacity(n);
    let mut value = tape.eval_primal(x)?;
    let mut grad = vec![0.0; n];
    let mut basis = vec![0.0; n];
    for i in 0..n {
        basis[i] = 1.0;
        let r = hvp(tape, x, &basis)?;
        basis[i] = 0.0;
        stats.absorb(r.stats);
        value = r.value;
        grad = r.grad;
        columns.push(r.hv);
    }

    let mut max_abs = 0.0f64;
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_abs = max_abs.max(columns[i][j].abs());
            max_asym = max_asym.max((columns[i][j] - columns[j][i]).abs());
        }
    }
    if max_asym > 1e-8 * (1.0 + max_abs) {
        return Err(Error::Domain {
            node: 0,
            message: format!(
                "hessian asymmetry {max_asym:e} exceeds roundoff budget; partials registry suspect"
            ),
        });
    }

    let mut hess = SymMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            hess.set(i, j, 0.5 * (columns[i][j] + columns[j][i]));
        }
    }
    Ok(HessianByHvp {
        value,
        grad,
        hess,
        max_asym,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct HessianByHvp {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymMat,
    /// Diagnostic: max |a_ij - a_ji| observed before symmetrization.
    pub max_asym: f64,
    pub stats: SweepStats,
}

/// Gradient of Tr(M.H): N executions of `grad_dir2` with v the k-th column
/// of M and u = e_k, summed over k. The repeated runs also assemble the
/// gradient and the full Hessian (from the H.e_k adjuncts) for free.
pub fn grad_trace_mh(tape: &Tape, x: &[f64], m: &[f64]) -> Result<TraceMh> {
    tape.check_point(x)?;
    let n = tape.num_inputs();
    if m.len() != n * n {
        return Err(Error::Dimension {
            what: "matrix M",
            expected: n * n,
            found: m.len(),
        });
    }
    let mut out = vec![0.0; n];
    let mut value = tape.eval_primal(x)?;
    let mut grad = vec![0.0; n];
    let mut columns = Vec::with_capacity(n);
    let mut stats = SweepStats::default();
    let mut basis = vec![0.0; n];
    for k in 0..n {
        let column: Vec<f64> = (0..n).map(|j| m[j * n + k]).collect();
        basis[k] = 1.0;
        let r = grad_dir2(tape, x, &column, &basis)?;
        basis[k] = 0.0;
        for (o, g) in out.iter_mut().zip(&r.g3) {
            *o += g;
        }
        value = r.value;
        grad = r.grad;
        columns.push(r.hu);
        stats.absorb(r.stats);
    }
    let mut hess = SymMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            hess.set(i, j, 0.5 * (columns[i][j] + columns[j][i]));
        }
    }
    Ok(TraceMh {
        trace_grad: out,
        value,
        grad,
        hess,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct TraceMh {
    /// d/dx_i Tr(M.H), the operator's primary output.
    pub trace_grad: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymMat,
    pub stats: SweepStats,
}

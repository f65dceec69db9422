//! Local forward-mode sweeps: velocity coordinates pushed through the tape
//! in stack order.
//!
//! Each operator allocates one flat coordinate bank per tape node (3 scalars
//! per node for `dir2`, 7 for `dir3`) rather than a general jet container;
//! only the coordinate subsets the updates actually read are carried.
//! Crossed coordinates at the inputs are seeded to zero; the aligned
//! higher-order seeds belong to `taylor_push` alone.

use crate::error::{Error, Result};
use crate::stats::SweepStats;
use crate::tape::Tape;

/// First-order directional derivative v . grad F, with the value as adjunct.
pub fn dir1(tape: &Tape, x: &[f64], v: &[f64]) -> Result<Dir1> {
    tape.check_point(x)?;
    tape.check_seed(v, "seed v")?;
    let values = tape.eval_values(x)?;
    let n = tape.num_inputs();
    let mut stats = SweepStats::default();
    stats.forward_sweeps = 1;
    let mut bank = vec![0.0; tape.len()];
    for s in 0..tape.len() {
        stats.forward_visits += 1;
        if s < n {
            bank[s] = v[s];
            continue;
        }
        let p = tape.node_partials(s, &values, 1)?;
        let node = tape.node(s);
        let mut acc = 0.0;
        for (i, &g) in node.inputs.iter().enumerate() {
            acc += p.d1(i) * bank[g];
        }
        bank[s] = acc;
    }
    Ok(Dir1 {
        value: values[tape.root()],
        dderiv: bank[tape.root()],
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Dir1 {
    pub value: f64,
    pub dderiv: f64,
    pub stats: SweepStats,
}

/// Second-order directional derivative v^T H u, with both first-order
/// directional derivatives and the value as adjuncts.
pub fn dir2(tape: &Tape, x: &[f64], v: &[f64], u: &[f64]) -> Result<Dir2> {
    tape.check_point(x)?;
    tape.check_seed(v, "seed v")?;
    tape.check_seed(u, "seed u")?;
    let values = tape.eval_values(x)?;
    let n = tape.num_inputs();
    let len = tape.len();
    let mut stats = SweepStats::default();
    stats.forward_sweeps = 1;
    let mut bv = vec![0.0; len];
    let mut bu = vec![0.0; len];
    let mut bvu = vec![0.0; len];
    for s in 0..len {
        stats.forward_visits += 1;
        if s < n {
            bv[s] = v[s];
            bu[s] = u[s];
            // crossed seeds are zero
            continue;
        }
        let p = tape.node_partials(s, &values, 2)?;
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
    let root = tape.root();
    Ok(Dir2 {
        value: values[root],
        vg: bv[root],
        ug: bu[root],
        vhu: bvu[root],
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Dir2 {
    pub value: f64,
    /// v . grad F
    pub vg: f64,
    /// u . grad F
    pub ug: f64,
    /// v^T H u
    pub vhu: f64,
    pub stats: SweepStats,
}

/// Third-order directional derivative sum_ijk v_i u_j w_k d3F/dxi dxj dxk,
/// with all lower-order directional derivatives as adjuncts.
pub fn dir3(tape: &Tape, x: &[f64], v: &[f64], u: &[f64], w: &[f64]) -> Result<Dir3> {
    tape.check_point(x)?;
    tape.check_seed(v, "seed v")?;
    tape.check_seed(u, "seed u")?;
    tape.check_seed(w, "seed w")?;
    let values = tape.eval_values(x)?;
    let n = tape.num_inputs();
    let len = tape.len();
    let mut stats = SweepStats::default();
    stats.forward_sweeps = 1;
    let mut bv = vec![0.0; len];
    let mut bu = vec![0.0; len];
    let mut bw = vec![0.0; len];
    let mut bvu = vec![0.0; len];
    let mut bvw = vec![0.0; len];
    let mut buw = vec![0.0; len];
    let mut bvuw = vec![0.0; len];
    for s in 0..len {
        stats.forward_visits += 1;
        if s < n {
            bv[s] = v[s];
            bu[s] = u[s];
            bw[s] = w[s];
            continue;
        }
        let p = tape.node_partials(s, &values, 3)?;
        let node = tape.node(s);
        let (mut av, mut au, mut aw) = (0.0, 0.0, 0.0);
        let (mut avu, mut avw, mut auw, mut avuw) = (0.0, 0.0, 0.0, 0.0);
        for (i, &gi) in node.inputs.iter().enumerate() {
            let d1 = p.d1(i);
            av += d1 * bv[gi];
            au += d1 * bu[gi];
            aw += d1 * bw[gi];
            avu += d1 * bvu[gi];
            avw += d1 * bvw[gi];
            auw += d1 * buw[gi];
            avuw += d1 * bvuw[gi];
            for (j, &gj) in node.inputs.iter().enumerate() {
                let d2 = p.d2(i, j);
                avu += d2 * bv[gi] * bu[gj];
                avw += d2 * bv[gi] * bw[gj];
                auw += d2 * bu[gi] * bw[gj];
                avuw += d2
                    * (bv[gi] * buw[gj] + bu[gi] * bvw[gj] + bw[gi] * bvu[gj]);
                for (k, &gk) in node.inputs.iter().enumerate() {
                    avuw += p.d3(i, j, k) * bv[gi] * bu[gj] * bw[gk];
                }
            }
        }
        bv[s] = av;
        bu[s] = au;
        bw[s] = aw;
        bvu[s] = avu;
        bvw[s] = avw;
        buw[s] = auw;
        bvuw[s] = avuw;
    }
    let root = tape.root();
    Ok(Dir3 {
        value: values[root],
        vg: bv[root],
        ug: bu[root],
        wg: bw[root],
        vhu: bvu[root],
        vhw: bvw[root],
        uhw: buw[root],
        d3: bvuw[root],
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Dir3 {
    pub value: f64,
    pub vg: f64,
    pub ug: f64,
    pub wg: f64,
    pub vhu: f64,
    pub vhw: f64,
    pub uhw: f64,
    pub d3: f64,
    pub stats: SweepStats,
}

/// Aligned seed (dv, d2v, d3v) for the univariate Taylor-mode pushforward.
#[derive(Debug, Clone)]
pub struct TaylorSeed {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TaylorPushed {
    pub value: f64,
    /// d(F o c)/dt at 0
    pub d1: f64,
    /// d2(F o c)/dt2 at 0 (zero when order < 2)
    pub d2: f64,
    /// d3(F o c)/dt3 at 0 (zero when order < 3)
    pub d3: f64,
    pub stats: SweepStats,
}

/// Push an aligned (1,R)-velocity through the tape, R <= 3. The returned
/// coordinates are the t-derivatives at 0 of F along any curve carrying the
/// seeded jet; the second-order update pairs first-order coordinates through
/// the node Hessians, and the third-order update adds the factor-3 mixed
/// first x second term plus the cubic third-partial term.
pub fn taylor_push(tape: &Tape, x: &[f64], seed: &TaylorSeed, order: u8) -> Result<TaylorPushed> {
    if !(1..=3).contains(&order) {
        return Err(Error::Projection { from: 3, to: order });
    }
    tape.check_point(x)?;
    tape.check_seed(&seed.d1, "seed d1")?;
    if order >= 2 {
        tape.check_seed(&seed.d2, "seed d2")?;
    }
    if order >= 3 {
        tape.check_seed(&seed.d3, "seed d3")?;
    }
    let values = tape.eval_values(x)?;
    let n = tape.num_inputs();
    let len = tape.len();
    let mut stats = SweepStats::default();
    stats.forward_sweeps = 1;
    let mut b1 = vec![0.0; len];
    let mut b2 = vec![0.0; len];
    let mut b3 = vec![0.0; len];
    for s in 0..len {
        stats.forward_visits += 1;
        if s < n {
            b1[s] = seed.d1[s];
            if order >= 2 {
                b2[s] = seed.d2[s];
            }
            if order >= 3 {
                b3[s] = seed.d3[s];
            }
            continue;
        }
        let p = tape.node_partials(s, &values, order)?;
        let node = tape.node(s);
        let (mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0);
        for (i, &gi) in node.inputs.iter().enumerate() {
            let d1 = p.d1(i);
            a1 += d1 * b1[gi];
            if order >= 2 {
                a2 += d1 * b2[gi];
            }
            if order >= 3 {
                a3 += d1 * b3[gi];
            }
            if order >= 2 {
                for (j, &gj) in node.inputs.iter().enumerate() {
                    let d2 = p.d2(i, j);
                    a2 += d2 * b1[gi] * b1[gj];
                    if order >= 3 {
                        a3 += 3.0 * d2 * b1[gi] * b2[gj];
                        for (k, &gk) in node.inputs.iter().enumerate() {
                            a3 += p.d3(i, j, k) * b1[gi] * b1[gj] * b1[gk];
                        }
                    }
                }
            }
        }
        b1[s] = a1;
        b2[s] = a2;
        b3[s] = a3;
    }
    let root = tape.root();
    Ok(TaylorPushed {
        value: values[root],
        d1: b1[root],
        d2: b2[root],
        d3: b3[root],
        stats,
    })
}

/// A bag of velocity coordinates over some variable set, tagged with its
/// jet order. `project` strips the coordinates above the target order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VelocityCoords {
    pub order: u8,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub vu: Vec<f64>,
    pub vw: Vec<f64>,
    pub uw: Vec<f64>,
    pub vuw: Vec<f64>,
    /// Aligned Taylor coordinates; delta-count 2 and 3 respectively.
    pub d2v: Vec<f64>,
    pub d3v: Vec<f64>,
}

/// Projection pi^R_r: drop every coordinate whose delta-count exceeds
/// `to_order`. Errors unless `to_order` is strictly below the current order.
pub fn project(coords: &VelocityCoords, to_order: u8) -> Result<VelocityCoords> {
    if to_order == 0 || to_order >= coords.order {
        return Err(Error::Projection {
            from: coords.order,
            to: to_order,
        });
    }
    let mut out = coords.clone();
    out.order = to_order;
    if to_order < 3 {
        out.vuw = Vec::new();
        out.d3v = Vec::new();
    }
    if to_order < 2 {
        out.vu = Vec::new();
        out.vw = Vec::new();
        out.uw = Vec::new();
        out.d2v = Vec::new();
    }
    Ok(out)
}

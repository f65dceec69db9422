//! Random expression corpus for cross-validation.
//!
//! Instances are generated as text (exercising the parser), then accepted
//! only if the point is comfortably in-domain: the value, gradient, Hessian
//! and third-order magnitudes are bounded via the symbolic oracle, and the
//! value stays finite on a probe box around the point so finite-difference
//! stencils have room to breathe.

use rand::Rng;

use crate::oracle::{symbolic_gradient, symbolic_hessian, symbolic_third};
use crate::parser::{parse, ExprGraph};
use crate::tape::{build_tape, Tape};

#[derive(Debug, Clone)]
pub struct CorpusParams {
    pub max_depth: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    /// Reject instances whose value or derivative magnitudes exceed this.
    pub magnitude_bound: f64,
    /// Highest derivative order the magnitude filter inspects (1..=3).
    pub check_order: u8,
    /// Half-width of the in-domain probe box around the sampled point.
    pub probe_radius: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            max_depth: 5,
            min_dim: 1,
            max_dim: 5,
            magnitude_bound: 30.0,
            check_order: 3,
            probe_radius: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub text: String,
    pub graph: ExprGraph,
    pub tape: Tape,
    pub x: Vec<f64>,
}

/// Draw instances until one passes the in-domain filter.
pub fn random_instance<R: Rng>(rng: &mut R, params: &CorpusParams) -> Instance {
    loop {
        let dims = rng.gen_range(params.min_dim..=params.max_dim);
        let text = gen_expr(rng, params.max_depth, dims);
        if let Some(inst) = validate(rng, &text, params) {
            return inst;
        }
    }
}

/// Seed vector with components uniform in [-1, 1].
pub fn random_seed_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn validate<R: Rng>(rng: &mut R, text: &str, params: &CorpusParams) -> Option<Instance> {
    let graph = parse(text).ok()?;
    let d = graph.num_inputs();
    if d < params.min_dim || d > params.max_dim {
        return None;
    }
    let tape = build_tape(&graph).ok()?;
    // Random in-domain point; the registry's risky primitives stay
    // well-conditioned on [0.2, 2.0].
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..=2.0)).collect();

    let bound = params.magnitude_bound;
    let ok_mag = |v: f64| v.is_finite() && v.abs() <= bound;

    let values = tape.eval_values(&x).ok()?;
    if !ok_mag(values[tape.root()]) {
        return None;
    }
    // Every node's analytic partials must exist at the point; pow on a
    // negative base evaluates but has no exponent derivative there.
    tape.all_partials(&values, 3).ok()?;
    // Probe box: per-axis and diagonal corners must stay evaluable.
    let r = params.probe_radius;
    let probe = |shift: &dyn Fn(usize) -> f64| -> bool {
        let p: Vec<f64> = x.iter().enumerate().map(|(i, &v)| v + shift(i)).collect();
        matches!(tape.eval_primal(&p), Ok(v) if v.is_finite() && v.abs() <= 1e6)
    };
    for i in 0..d {
        if !probe(&|j| if j == i { r } else { 0.0 }) || !probe(&|j| if j == i { -r } else { 0.0 })
        {
            return None;
        }
    }
    if !probe(&|_| r) || !probe(&|_| -r) {
        return None;
    }
    for _ in 0..d.min(8) {
        let signs: Vec<f64> = (0..d)
            .map(|_| if rng.gen_bool(0.5) { r } else { -r })
            .collect();
        if !probe(&|j| signs[j]) {
            return None;
        }
    }

    // Derivative magnitudes via the symbolic oracle; evaluation failure
    // means a derivative-domain problem, which also rejects.
    if params.check_order >= 1 {
        let g = symbolic_gradient(&graph, &x).ok()?;
        if !g.iter().all(|&v| ok_mag(v)) {
            return None;
        }
    }
    if params.check_order >= 2 {
        let h = symbolic_hessian(&graph, &x).ok()?;
        if !h.packed().iter().all(|&v| ok_mag(v)) {
            return None;
        }
    }
    if params.check_order >= 3 {
        let t = symbolic_third(&graph, &x).ok()?;
        if !t.packed().iter().all(|&v| ok_mag(v)) {
            return None;
        }
    }

    Some(Instance {
        text: text.to_string(),
        graph,
        tape,
        x,
    })
}

fn gen_expr<R: Rng>(rng: &mut R, depth: usize, dims: usize) -> String {
    if depth == 0 || rng.gen_bool(0.18) {
        return gen_leaf(rng, dims);
    }
    // Weighted pick over all registered primitives.
    let roll = rng.gen_range(0.0..17.2);
    let a = |rng: &mut R| gen_expr(rng, depth - 1, dims);
    match roll {
        r if r < 3.0 => format!("({} + {})", a(rng), a(rng)),
        r if r < 5.0 => format!("({} - {})", a(rng), a(rng)),
        r if r < 8.0 => format!("({} * {})", a(rng), a(rng)),
        r if r < 9.5 => format!("({} / {})", a(rng), a(rng)),
        r if r < 10.5 => format!("(-{})", a(rng)),
        r if r < 11.5 => format!("sin({})", a(rng)),
        r if r < 12.5 => format!("cos({})", a(rng)),
        r if r < 13.0 => format!("tan({})", a(rng)),
        r if r < 14.0 => format!("exp({})", a(rng)),
        r if r < 15.0 => format!("log({})", a(rng)),
        r if r < 15.7 => format!("sqrt({})", a(rng)),
        r if r < 16.5 => format!("tanh({})", a(rng)),
        _ => {
            // Power: shallow base, mostly small constant exponents,
            // occasionally a variable one; both surface syntaxes.
            let base = gen_expr(rng, (depth - 1).min(2), dims);
            let exponent = if rng.gen_bool(0.7) {
                format!("{}", rng.gen_range(2..=3))
            } else {
                gen_leaf(rng, dims)
            };
            if rng.gen_bool(0.5) {
                format!("pow({base}, {exponent})")
            } else {
                format!("({base} ^ {exponent})")
            }
        }
    }
}

fn gen_leaf<R: Rng>(rng: &mut R, dims: usize) -> String {
    if rng.gen_bool(0.75) {
        format!("x{}", rng.gen_range(1..=dims))
    } else {
        format!("{:.2}", rng.gen_range(0.25..1.75))
    }
}

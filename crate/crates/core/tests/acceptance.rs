//! Acceptance suite: one test per criterion, each printing its pass line
//! and the worst observed gap. Criterion 10 (command-line round-trip) lives
//! in the CLI crate's own acceptance target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jetad::component::build_component_functions;
use jetad::corpus::{random_instance, random_seed_vec, CorpusParams, Instance};
use jetad::error::Error;
use jetad::forward::{dir1, dir2, dir3, taylor_push, TaylorSeed};
use jetad::mixed::{grad_dir2, hessian_by_hvp, hvp};
use jetad::oracle::{
    fd_directional, rel_gap, symbolic_gradient, symbolic_hessian, symbolic_third,
    taylor_reference, FdConfig,
};
use jetad::parser::ExprKind;
use jetad::reverse::{gradient, hessian_general, pull_stage, third_order_general, CovelocityState};
use jetad::symtensor::SymMat;

/// Track the worst gap per label and panic on tolerance breach.
struct Worst(std::collections::BTreeMap<&'static str, f64>);

impl Worst {
    fn new() -> Self {
        Worst(Default::default())
    }

    fn check(&mut self, label: &'static str, a: f64, b: f64, tol: f64, ctx: &str) {
        let gap = rel_gap(a, b);
        let slot = self.0.entry(label).or_insert(0.0);
        if gap > *slot {
            *slot = gap;
        }
        assert!(
            gap <= tol,
            "{label}: gap {gap:.3e} > {tol:.0e} on {ctx} ({a} vs {b})"
        );
    }

    fn summary(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("{k} {v:.1e}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Run `target` instances through `body`. `Ok(false)` skips the instance
/// (ill-conditioned fd stencil), as does a Domain error from a stencil
/// wandering out of the primitive domains. Everything else panics.
fn run_corpus<F>(seed: u64, target: usize, params: &CorpusParams, mut body: F)
where
    F: FnMut(&mut ChaCha8Rng, &Instance) -> Result<bool, Error>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    let mut skipped = 0;
    while done < target {
        let inst = random_instance(&mut rng, params);
        let counted = match body(&mut rng, &inst) {
            Ok(counted) => counted,
            Err(Error::Domain { .. }) => false,
            Err(other) => panic!("unexpected error on '{}': {other}", inst.text),
        };
        if counted {
            done += 1;
        } else {
            skipped += 1;
            assert!(
                skipped <= target / 3 + 5,
                "too many skips ({skipped}) for {done}/{target} done"
            );
        }
    }
}

/// Nested central differences converge like h^2; if halving the step moves
/// the estimate materially the stencil is not trustworthy at the target
/// tolerance and the instance does not qualify as well-conditioned.
fn fd_converged(a: f64, b: f64, budget: f64) -> bool {
    rel_gap(a, b) <= budget
}

#[test]
fn criterion_01_gradient_correctness() {
    let params = CorpusParams {
        max_depth: 6,
        min_dim: 1,
        max_dim: 6,
        ..Default::default()
    };
    let cfg = FdConfig::default();
    let mut worst = Worst::new();
    let mut prims_seen = std::collections::HashSet::new();
    run_corpus(101, 200, &params, |_, inst| {
        for node in inst.graph.nodes() {
            if let ExprKind::Prim(p) = node.kind {
                prims_seen.insert(p);
            }
        }
        let g = gradient(&inst.tape, &inst.x)?;
        let sym = symbolic_gradient(&inst.graph, &inst.x)?;
        let n = inst.x.len();
        for i in 0..n {
            worst.check("grad-vs-symbolic", g.grad[i], sym[i], 1e-10, &inst.text);
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let fd = fd_directional(&inst.tape, &inst.x, &[&e], &cfg)?;
            worst.check("grad-vs-fd", g.grad[i], fd, 1e-8, &inst.text);
        }
        Ok(true)
    });
    assert_eq!(
        prims_seen.len(),
        13,
        "corpus must exercise all registered primitives, saw {prims_seen:?}"
    );
    println!("criterion 01 gradient correctness: PASS (200 instances; {})", worst.summary());
}

#[test]
fn criterion_02_forward_directional_derivatives() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 4,
        magnitude_bound: 15.0,
        ..Default::default()
    };
    let cfg = FdConfig::default();
    let mut worst = Worst::new();
    run_corpus(202, 200, &params, |rng, inst| {
        let tape = &inst.tape;
        let x = &inst.x;
        let n = x.len();
        let v = random_seed_vec(rng, n);
        let u = random_seed_vec(rng, n);
        let w = random_seed_vec(rng, n);

        let sym_g = symbolic_gradient(&inst.graph, x)?;
        let sym_h = symbolic_hessian(&inst.graph, x)?;
        let sym_t = symbolic_third(&inst.graph, x)?;

        let d1 = dir1(tape, x, &v)?;
        let want1: f64 = (0..n).map(|i| v[i] * sym_g[i]).sum();
        worst.check("dir1-vs-symbolic", d1.dderiv, want1, 1e-10, &inst.text);
        let fd1 = fd_directional(tape, x, &[&v], &cfg)?;
        worst.check("dir1-vs-fd", d1.dderiv, fd1, 1e-8, &inst.text);

        let d2 = dir2(tape, x, &v, &u)?;
        let mut want2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                want2 += v[i] * u[j] * sym_h.get(i, j);
            }
        }
        worst.check("dir2-vs-symbolic", d2.vhu, want2, 1e-10, &inst.text);
        let half = FdConfig {
            h2: cfg.h2 / 2.0,
            h3: cfg.h3 / 2.0,
            ..cfg
        };
        let fd2 = fd_directional(tape, x, &[&v, &u], &cfg)?;
        let fd2_half = fd_directional(tape, x, &[&v, &u], &half)?;
        if !fd_converged(fd2, fd2_half, 2.5e-7) {
            return Ok(false);
        }
        worst.check("dir2-vs-fd", d2.vhu, fd2, 1e-6, &inst.text);

        let d3 = dir3(tape, x, &v, &u, &w)?;
        let mut want3 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    want3 += v[i] * u[j] * w[k] * sym_t.get(i, j, k);
                }
            }
        }
        worst.check("dir3-vs-symbolic", d3.d3, want3, 1e-10, &inst.text);
        let fd3 = fd_directional(tape, x, &[&v, &u, &w], &cfg)?;
        let fd3_half = fd_directional(tape, x, &[&v, &u, &w], &half)?;
        if !fd_converged(fd3, fd3_half, 2.5e-5) {
            return Ok(false);
        }
        worst.check("dir3-vs-fd", d3.d3, fd3, 1e-4, &inst.text);
        Ok(true)
    });
    println!("criterion 02 forward directional derivatives: PASS (200 triples; {})", worst.summary());
}

#[test]
fn criterion_03_single_sweep_hessian() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 2,
        max_dim: 8,
        check_order: 2,
        ..Default::default()
    };
    let mut worst = Worst::new();
    run_corpus(303, 100, &params, |_, inst| {
        let general = hessian_general(&inst.tape, &inst.x)?;
        let assembled = hessian_by_hvp(&inst.tape, &inst.x)?;
        let sym = symbolic_hessian(&inst.graph, &inst.x)?;
        let n = inst.x.len();
        for i in 0..n {
            for j in 0..n {
                // exactly symmetric as stored
                assert_eq!(general.hess.get(i, j), general.hess.get(j, i));
                worst.check(
                    "hessian-vs-hvp",
                    general.hess.get(i, j),
                    assembled.hess.get(i, j),
                    1e-12,
                    &inst.text,
                );
                worst.check(
                    "hessian-vs-symbolic",
                    general.hess.get(i, j),
                    sym.get(i, j),
                    1e-10,
                    &inst.text,
                );
            }
        }
        Ok(true)
    });
    println!("criterion 03 single-sweep hessian: PASS (100 instances, 2<=D<=8; {})", worst.summary());
}

#[test]
fn criterion_04_single_sweep_third_order() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 5,
        ..Default::default()
    };
    let mut worst = Worst::new();
    run_corpus(404, 100, &params, |rng, inst| {
        let tape = &inst.tape;
        let x = &inst.x;
        let n = x.len();
        let t = third_order_general(tape, x)?;
        // totally symmetric as stored
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    assert_eq!(t.third.get(i, j, k), t.third.get(k, j, i));
                    assert_eq!(t.third.get(i, j, k), t.third.get(j, i, k));
                }
            }
        }
        let v = random_seed_vec(rng, n);
        let u = random_seed_vec(rng, n);
        let w = random_seed_vec(rng, n);
        let d3 = dir3(tape, x, &v, &u, &w)?;
        let mut full = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    full += v[i] * u[j] * w[k] * t.third.get(i, j, k);
                }
            }
        }
        worst.check("third-full-vs-dir3", full, d3.d3, 1e-12, &inst.text);

        let g = grad_dir2(tape, x, &v, &u)?;
        for i in 0..n {
            let mut single = 0.0;
            for j in 0..n {
                for k in 0..n {
                    single += v[j] * u[k] * t.third.get(i, j, k);
                }
            }
            worst.check("third-single-vs-grad_dir2", single, g.g3[i], 1e-12, &inst.text);
        }
        Ok(true)
    });
    println!("criterion 04 single-sweep third order: PASS (100 instances; {})", worst.summary());
}

#[test]
fn criterion_05_conditional_second_order_adjoint() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 6,
        ..Default::default()
    };
    let mut worst = Worst::new();
    run_corpus(505, 100, &params, |rng, inst| {
        let tape = &inst.tape;
        let x = &inst.x;
        let n = x.len();
        let v = random_seed_vec(rng, n);
        let r = hvp(tape, x, &v)?;
        let h = hessian_general(tape, x)?;
        for i in 0..n {
            let want: f64 = (0..n).map(|j| h.hess.get(i, j) * v[j]).sum();
            worst.check("hvp-vs-hessian", r.hv[i], want, 1e-12, &inst.text);
        }
        // finite differences of the gradient along v, h = 1e-5
        let step = 1e-5;
        let hi: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + step * b).collect();
        let lo: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - step * b).collect();
        let g_hi = gradient(tape, &hi)?;
        let g_lo = gradient(tape, &lo)?;
        for i in 0..n {
            let fd = (g_hi.grad[i] - g_lo.grad[i]) / (2.0 * step);
            worst.check("hvp-vs-grad-fd", r.hv[i], fd, 1e-6, &inst.text);
        }
        Ok(true)
    });
    println!("criterion 05 conditional second-order adjoint: PASS (100 instances; {})", worst.summary());
}

#[test]
fn criterion_06_duality_consistency() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 5,
        check_order: 2,
        ..Default::default()
    };
    let mut worst = Worst::new();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut done = 0;
    while done < 100 {
        let inst = random_instance(&mut rng, &params);
        let stages = build_component_functions(&inst.tape);
        if stages.is_empty() {
            continue;
        }
        let values = inst.tape.eval_values(&inst.x).unwrap();
        let stage = &stages[rng.gen_range(0..stages.len())];
        let din = stage.input_dim();
        let dout = stage.output_dim();
        let jac = stage.jacobian(&inst.tape, &values, 2).unwrap();

        let dv = random_seed_vec(&mut rng, din);
        let du = random_seed_vec(&mut rng, din);
        let dvu = random_seed_vec(&mut rng, din);
        let a1 = random_seed_vec(&mut rng, dout);
        let mut a2 = SymMat::zeros(dout);
        for i in 0..dout {
            for j in i..dout {
                a2.set(i, j, rng.gen_range(-1.0..=1.0));
            }
        }

        // order 1: <push(v), a1> = <v, pull(a1)>
        let pushed_v = jac.push_vec(&dv);
        let pulled_a1 = jac.pull_alpha1(&a1);
        let lhs: f64 = pushed_v.iter().zip(&a1).map(|(p, a)| p * a).sum();
        let rhs: f64 = dv.iter().zip(&pulled_a1).map(|(v, a)| v * a).sum();
        worst.check("duality-order1", lhs, rhs, 1e-12, &inst.text);

        // order 2: v^i u^j a2_ij + (vu)^i a1_i, before and after transport
        let pushed_u = jac.push_vec(&du);
        let pushed_vu = jac.push_crossed(&dv, &du, &dvu);
        let state = CovelocityState {
            alpha1: a1.clone(),
            alpha2: a2.clone(),
            alpha3: None,
        };
        let pulled = pull_stage(stage, &inst.tape, &values, &state).unwrap();
        let mut lhs2 = 0.0;
        for i in 0..dout {
            for j in 0..dout {
                lhs2 += pushed_v[i] * pushed_u[j] * a2.get(i, j);
            }
        }
        for i in 0..dout {
            lhs2 += pushed_vu[i] * a1[i];
        }
        let mut rhs2 = 0.0;
        for i in 0..din {
            for j in 0..din {
                rhs2 += dv[i] * du[j] * pulled.alpha2.get(i, j);
            }
        }
        for i in 0..din {
            rhs2 += dvu[i] * pulled.alpha1[i];
        }
        worst.check("duality-order2", lhs2, rhs2, 1e-12, &inst.text);
        done += 1;
    }
    println!("criterion 06 duality consistency: PASS (100 stage/velocity/covelocity triples; {})", worst.summary());
}

#[test]
fn criterion_07_sweep_count_instrumentation() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 5,
        check_order: 1,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, &params);
        let tape = &inst.tape;
        let x = &inst.x;
        let n = x.len();
        let s = tape.len() as u64;
        let v = random_seed_vec(&mut rng, n);
        let u = random_seed_vec(&mut rng, n);
        let w = random_seed_vec(&mut rng, n);

        let r = dir1(tape, x, &v).unwrap();
        assert_eq!((r.stats.forward_visits, r.stats.reverse_visits), (s, 0));
        let r = dir2(tape, x, &v, &u).unwrap();
        assert_eq!((r.stats.forward_visits, r.stats.reverse_visits), (s, 0));
        let r = dir3(tape, x, &v, &u, &w).unwrap();
        assert_eq!((r.stats.forward_visits, r.stats.reverse_visits), (s, 0));
        let r = gradient(tape, x).unwrap();
        assert_eq!((r.stats.forward_visits, r.stats.reverse_visits), (s, s));
        let r = hvp(tape, x, &v).unwrap();
        assert_eq!((r.stats.forward_visits, r.stats.reverse_visits), (s, s));
        assert_eq!((r.stats.forward_sweeps, r.stats.reverse_sweeps), (1, 1));
        let r = grad_dir2(tape, x, &v, &u).unwrap();
        assert_eq!((r.stats.forward_visits, r.stats.reverse_visits), (s, s));
        let r = hessian_by_hvp(tape, x).unwrap();
        assert_eq!(r.stats.forward_sweeps, n as u64);
        assert_eq!(r.stats.reverse_sweeps, n as u64);
        assert_eq!(r.stats.forward_visits, n as u64 * s);
        assert_eq!(r.stats.reverse_visits, n as u64 * s);
    }
    println!("criterion 07 sweep-count instrumentation: PASS (50 instances, counters exact)");
}

#[test]
fn criterion_08_component_function_faithfulness() {
    let params = CorpusParams {
        max_depth: 6,
        min_dim: 1,
        max_dim: 6,
        check_order: 1,
        ..Default::default()
    };
    let mut worst = Worst::new();
    run_corpus(808, 100, &params, |_, inst| {
        let tape = &inst.tape;
        let stages = build_component_functions(tape);
        let composed = jetad::component::compose(tape, &stages, &inst.x)?;
        let direct = tape.eval_primal(&inst.x)?;
        worst.check("compose-vs-eval", composed, direct, 1e-14, &inst.text);

        // no stage carries a dead variable: every identity-row output must
        // be consumed by a later stage's active subexpression or be the root
        for st in &stages {
            for (o, &node) in st.output_nodes.iter().enumerate() {
                if o == st.active_row {
                    continue;
                }
                let justified = node == tape.root()
                    || stages.iter().filter(|l| l.stage > st.stage).any(|l| {
                        tape.node(l.node).inputs.contains(&node)
                    });
                assert!(
                    justified,
                    "stage {} of '{}' carries dead variable {node}",
                    st.stage, inst.text
                );
            }
        }
        // and the stage dimensions chain correctly
        let n = tape.num_inputs();
        if let Some(first) = stages.first() {
            assert_eq!(first.input_dim(), n);
        }
        if let Some(last) = stages.last() {
            assert_eq!(last.output_dim(), 1);
        }
        for pair in stages.windows(2) {
            assert_eq!(pair[0].output_dim(), pair[1].input_dim());
        }
        Ok(true)
    });
    println!("criterion 08 component-function faithfulness: PASS (100 instances; {})", worst.summary());
}

#[test]
fn criterion_09_taylor_mode_pushforward() {
    // fixed case: f = exp at x = 0, seed (1, 0, 0) -> (1, 1, 1)
    let tape = jetad::build_tape(&jetad::parse("exp(x1)").unwrap()).unwrap();
    let seed = TaylorSeed {
        d1: vec![1.0],
        d2: vec![0.0],
        d3: vec![0.0],
    };
    let r = taylor_push(&tape, &[0.0], &seed, 3).unwrap();
    for (got, want) in [(r.d1, 1.0), (r.d2, 1.0), (r.d3, 1.0)] {
        assert!(rel_gap(got, want) <= 1e-12, "{got} vs {want}");
    }

    let params = CorpusParams {
        max_depth: 4,
        min_dim: 1,
        max_dim: 1,
        ..Default::default()
    };
    let mut worst = Worst::new();
    run_corpus(909, 50, &params, |rng, inst| {
        let seed = TaylorSeed {
            d1: random_seed_vec(rng, 1),
            d2: random_seed_vec(rng, 1),
            d3: random_seed_vec(rng, 1),
        };
        let pushed = taylor_push(&inst.tape, &inst.x, &seed, 3)?;
        let reference =
            taylor_reference(&inst.graph, &inst.x, &seed.d1, &seed.d2, &seed.d3)?;
        worst.check("taylor-d1", pushed.d1, reference[0], 1e-10, &inst.text);
        worst.check("taylor-d2", pushed.d2, reference[1], 1e-10, &inst.text);
        worst.check("taylor-d3", pushed.d3, reference[2], 1e-10, &inst.text);
        Ok(true)
    });
    println!("criterion 09 taylor-mode pushforward: PASS (fixed exp case + 50 random compositions; {})", worst.summary());
}

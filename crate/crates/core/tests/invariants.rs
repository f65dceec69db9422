//! Cross-module invariants on random corpora, plus proptest coverage of the
//! algebraic properties (multilinearity, symmetry, superposition).

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jetad::corpus::{random_instance, random_seed_vec, CorpusParams};
use jetad::forward::{dir1, dir2, dir3, taylor_push, TaylorSeed};
use jetad::mixed::{grad_dir2, hvp};
use jetad::oracle::{eval_graph, rel_gap};
use jetad::parser::parse;
use jetad::primitive::Primitive;
use jetad::reverse::{gradient, hessian_general};
use jetad::tape::build_tape;

const ALL_PRIMS: [Primitive; 13] = [
    Primitive::Add,
    Primitive::Sub,
    Primitive::Neg,
    Primitive::Mul,
    Primitive::Div,
    Primitive::Pow,
    Primitive::Sin,
    Primitive::Cos,
    Primitive::Tan,
    Primitive::Exp,
    Primitive::Log,
    Primitive::Sqrt,
    Primitive::Tanh,
];

#[test]
fn tape_evaluation_matches_direct_interpreter() {
    let params = CorpusParams {
        check_order: 1,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, &params);
        let via_tape = inst.tape.eval_primal(&inst.x).unwrap();
        let direct = eval_graph(&inst.graph, &inst.x).unwrap();
        assert!(
            rel_gap(via_tape, direct) <= 1e-14,
            "{}: {via_tape} vs {direct}",
            inst.text
        );
    }
}

/// Every registered primitive's partial arrays at 1000 random in-domain
/// points: symmetric accessors agree under index permutation and all
/// entries are finite.
#[test]
fn partial_sets_are_symmetric_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 1000 {
        for prim in ALL_PRIMS {
            let args: Vec<f64> = (0..prim.arity())
                .map(|_| rand::Rng::gen_range(&mut rng, 0.2..=2.0))
                .collect();
            let p = match prim.partials(&args, 3) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let k = prim.arity();
            for i in 0..k {
                assert!(p.d1(i).is_finite());
                for j in 0..k {
                    assert_eq!(p.d2(i, j), p.d2(j, i));
                    assert!(p.d2(i, j).is_finite());
                    for m in 0..k {
                        assert_eq!(p.d3(i, j, m), p.d3(m, j, i));
                        assert_eq!(p.d3(i, j, m), p.d3(j, i, m));
                        assert_eq!(p.d3(i, j, m), p.d3(i, m, j));
                        assert!(p.d3(i, j, m).is_finite());
                    }
                }
            }
            checked += 1;
        }
    }
}

#[test]
fn dir3_invariant_under_all_seed_permutations() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 2,
        max_dim: 4,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let inst = random_instance(&mut rng, &params);
        let n = inst.x.len();
        let v = random_seed_vec(&mut rng, n);
        let u = random_seed_vec(&mut rng, n);
        let w = random_seed_vec(&mut rng, n);
        let base = dir3(&inst.tape, &inst.x, &v, &u, &w).unwrap().d3;
        let perms: [(&[f64], &[f64], &[f64]); 5] = [
            (&v, &w, &u),
            (&u, &v, &w),
            (&u, &w, &v),
            (&w, &v, &u),
            (&w, &u, &v),
        ];
        for (a, b, c) in perms {
            let other = dir3(&inst.tape, &inst.x, a, b, c).unwrap().d3;
            assert!(
                rel_gap(base, other) <= 1e-12,
                "{}: {base} vs {other}",
                inst.text
            );
        }
    }
}

#[test]
fn contraction_definition_property() {
    // g3 contracted once more equals the forward third-order sweep.
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 5,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, &params);
        let n = inst.x.len();
        let v = random_seed_vec(&mut rng, n);
        let u = random_seed_vec(&mut rng, n);
        let vp = random_seed_vec(&mut rng, n);
        let g = grad_dir2(&inst.tape, &inst.x, &v, &u).unwrap();
        let contracted: f64 = (0..n).map(|i| vp[i] * g.g3[i]).sum();
        let forward = dir3(&inst.tape, &inst.x, &v, &u, &vp).unwrap().d3;
        assert!(
            rel_gap(contracted, forward) <= 1e-12,
            "{}: {contracted} vs {forward}",
            inst.text
        );
    }
}

#[test]
fn adjunct_chains_are_consistent() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 5,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, &params);
        let n = inst.x.len();
        let v = random_seed_vec(&mut rng, n);
        let u = random_seed_vec(&mut rng, n);

        let g = gradient(&inst.tape, &inst.x).unwrap();
        let h = hessian_general(&inst.tape, &inst.x).unwrap();
        let p = hvp(&inst.tape, &inst.x, &v).unwrap();
        let g2 = grad_dir2(&inst.tape, &inst.x, &v, &u).unwrap();
        for i in 0..n {
            assert!(rel_gap(h.grad[i], g.grad[i]) <= 1e-14, "{}", inst.text);
            assert!(rel_gap(p.grad[i], g.grad[i]) <= 1e-14, "{}", inst.text);
            assert!(rel_gap(g2.hv[i], p.hv[i]) <= 1e-14, "{}", inst.text);
        }
        // dir2's vg adjunct rides the same update path as dir1.
        let d1 = dir1(&inst.tape, &inst.x, &v).unwrap();
        let d2 = dir2(&inst.tape, &inst.x, &v, &u).unwrap();
        assert_eq!(d1.dderiv, d2.vg, "{}", inst.text);
    }
}

#[test]
fn taylor_second_order_reduces_to_dir2_on_corpus() {
    let params = CorpusParams {
        max_depth: 5,
        min_dim: 1,
        max_dim: 4,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..40 {
        let inst = random_instance(&mut rng, &params);
        let n = inst.x.len();
        let v = random_seed_vec(&mut rng, n);
        let seed = TaylorSeed {
            d1: v.clone(),
            d2: vec![0.0; n],
            d3: vec![],
        };
        let t = taylor_push(&inst.tape, &inst.x, &seed, 2).unwrap();
        let d = dir2(&inst.tape, &inst.x, &v, &v).unwrap();
        assert!(rel_gap(t.d2, d.vhu) <= 1e-12, "{}", inst.text);
    }
}

proptest! {
    /// dir1 is linear in the seed: superposition with random scalars.
    #[test]
    fn dir1_superposition(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        v in proptest::array::uniform3(-1.0f64..1.0),
        u in proptest::array::uniform3(-1.0f64..1.0),
    ) {
        let tape = build_tape(&parse("exp(x1)*sin(x2) + x3/x2").unwrap()).unwrap();
        let x = [0.8, 1.2, 0.5];
        let combined: Vec<f64> = (0..3).map(|i| a * v[i] + b * u[i]).collect();
        let lhs = dir1(&tape, &x, &combined).unwrap().dderiv;
        let rv = dir1(&tape, &x, &v).unwrap().dderiv;
        let ru = dir1(&tape, &x, &u).unwrap().dderiv;
        prop_assert!(rel_gap(lhs, a * rv + b * ru) <= 1e-12);
    }

    /// dir2 is bilinear: linear in each seed separately.
    #[test]
    fn dir2_superposition(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        v in proptest::array::uniform3(-1.0f64..1.0),
        u in proptest::array::uniform3(-1.0f64..1.0),
        z in proptest::array::uniform3(-1.0f64..1.0),
    ) {
        let tape = build_tape(&parse("log(x1+x2) * tanh(x3) + x1*x3").unwrap()).unwrap();
        let x = [0.9, 1.1, 0.7];
        let combined: Vec<f64> = (0..3).map(|i| a * v[i] + b * u[i]).collect();
        let lhs = dir2(&tape, &x, &combined, &z).unwrap().vhu;
        let rv = dir2(&tape, &x, &v, &z).unwrap().vhu;
        let ru = dir2(&tape, &x, &u, &z).unwrap().vhu;
        prop_assert!(rel_gap(lhs, a * rv + b * ru) <= 1e-12);
        // and symmetric in the pair
        let swapped = dir2(&tape, &x, &z, &combined).unwrap().vhu;
        prop_assert!(rel_gap(lhs, swapped) <= 1e-12);
    }

    /// Parsing is insensitive to whitespace and evaluation matches the
    /// direct interpreter bit-for-bit on the same graph.
    #[test]
    fn parse_whitespace_invariance(pad in 0usize..4) {
        let spacer = " ".repeat(pad);
        let text = format!("(x1{spacer}+{spacer}x2){spacer}*{spacer}sin(x2)");
        let g = parse(&text).unwrap();
        let canonical = parse("(x1+x2)*sin(x2)").unwrap();
        prop_assert_eq!(&g, &canonical);
        let tape = build_tape(&g).unwrap();
        let x = [0.4, 1.3];
        prop_assert_eq!(tape.eval_primal(&x).unwrap(), eval_graph(&g, &x).unwrap());
    }
}

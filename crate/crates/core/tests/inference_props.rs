// SPDX-License-Identifier: Apache-2.0

mod common;

use aaipc::circuit::{generate_random_tree_pc, parse_circuit, sample, Assignment, Evidence};
use aaipc::inference::{as_evidence, compare_queries, induced_tree_edges};
use aaipc::planner::random_plan;
use aaipc::{Circuit, Evaluator, FloatConfig, MulMode, MultiplierPlan, Rounding};
use common::{
    binary_states, induced_trees, max_product_score, rational, reference_eval, three_var_pc,
    three_var_rational, RefFormat,
};
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The fixture with every weight a power of two.
fn three_var_dyadic() -> Circuit {
    let text = common::THREE_VAR_PC.replace(
        r#"["0.3333333333333333", "0.3333333333333333", "0.3333333333333333"]"#,
        r#"["0.5", "0.25", "0.25"]"#,
    );
    parse_circuit(&text).unwrap()
}

fn random_evidence(rng: &mut ChaCha8Rng, n_vars: usize) -> Evidence {
    (0..n_vars)
        .map(|_| {
            if rng.random_bool(0.5) {
                Some(rng.random_range(0..2))
            } else {
                None
            }
        })
        .collect()
}

fn agrees(x: &[usize], e: &[Option<usize>]) -> bool {
    x.iter().zip(e).all(|(v, o)| o.is_none_or(|k| k == *v))
}

#[test]
fn three_var_mar_matches_rationals_at_double() {
    let c = three_var_pc();
    let ev = Evaluator::baseline(&c);
    let cfg = FloatConfig::double();
    for x in binary_states(3) {
        let got = rational(cfg.decode(&ev.eval_mar(&x).unwrap().value));
        let want = three_var_rational(&x);
        let diff = (&got - &want).abs();
        assert!(diff < rational(1e-12), "{x:?}");
    }
}

#[test]
fn dyadic_weights_make_aai_exact() {
    let c = three_var_dyadic();
    for (e, m) in [(5, 3), (8, 12), (11, 52)] {
        let cfg = FloatConfig::new(e, m).unwrap();
        let exact = Evaluator::new(&c, cfg, &MultiplierPlan::all_exact(&c)).unwrap();
        let aai = Evaluator::new(&c, cfg, &MultiplierPlan::all_aai(&c)).unwrap();
        for x in binary_states(3) {
            assert_eq!(exact.eval_mar(&x).unwrap(), aai.eval_mar(&x).unwrap());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
        for _ in 0..32 {
            let ev = random_evidence(&mut rng, 3);
            let (a, b) = (exact.eval_map(&ev).unwrap(), aai.eval_map(&ev).unwrap());
            assert_eq!(a.assignment, b.assignment);
            assert_eq!(a.trace, b.trace);
        }
        let data = as_evidence(&binary_states(3));
        let m = compare_queries(&c, &data, cfg, &MultiplierPlan::all_aai(&c), None).unwrap();
        if cfg == FloatConfig::double() {
            assert_eq!(m.mean_log_error, 0.0);
        }
    }
}

#[test]
fn self_comparison_is_perfect() {
    let c = generate_random_tree_pc(4, 6, 2, 3).unwrap();
    let data = as_evidence(&sample(&c, 1, 300).unwrap());
    let m = compare_queries(
        &c,
        &data,
        FloatConfig::double(),
        &MultiplierPlan::all_exact(&c),
        None,
    )
    .unwrap();
    assert_eq!((m.mean_log_error, m.map_accuracy), (0.0, 1.0));
    assert_eq!((m.underflow_count, m.overflow_count), (0, 0));
}

#[test]
fn map_matches_brute_force_max_product() {
    let mut cases = vec![three_var_pc()];
    for seed in 0..6 {
        cases.push(generate_random_tree_pc(seed, 6, 2, 3).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for c in &cases {
        let trees = induced_trees(c);
        let states = binary_states(c.n_vars());
        let ev = Evaluator::baseline(c);
        for round in 0..20 {
            let e = if round == 0 {
                vec![None; c.n_vars()]
            } else {
                random_evidence(&mut rng, c.n_vars())
            };
            let best = states
                .iter()
                .filter(|x| agrees(x, &e))
                .map(|x| max_product_score(&trees, x))
                .fold(0.0, f64::max);
            let r = ev.eval_map(&e).unwrap();
            assert!(agrees(&r.assignment, &e));
            let got = FloatConfig::double().decode(&r.value);
            assert!((got - best).abs() <= 1e-12 * best);
            let score = max_product_score(&trees, &r.assignment);
            assert!((score - best).abs() <= 1e-12 * best, "{e:?}");
        }
    }
}

#[test]
fn double_matches_direct_evaluation() {
    for seed in 0..5 {
        let c = generate_random_tree_pc(seed, 8, 3, 2).unwrap();
        let ev = Evaluator::baseline(&c);
        for x in sample(&c, seed, 500).unwrap() {
            let got = FloatConfig::double().decode(&ev.eval_mar(&x).unwrap().value);
            let want = c.eval_f64(&x);
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn trace_reproduces_map_value() {
    let c = generate_random_tree_pc(8, 8, 2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (e, m) in [(8, 6), (8, 12), (11, 52)] {
        let cfg = FloatConfig::new(e, m).unwrap();
        for plan in [
            MultiplierPlan::all_exact(&c),
            MultiplierPlan::all_aai(&c),
            random_plan(&c, 0.5, m as u64, true).unwrap(),
        ] {
            let ev = Evaluator::new(&c, cfg, &plan).unwrap();
            for _ in 0..20 {
                let evd = random_evidence(&mut rng, 8);
                let r = ev.eval_map(&evd).unwrap();
                let t = ev.eval_induced_tree(&r.trace, &evd).unwrap();
                assert_eq!(t.value, r.value);
                assert_eq!(t.log2, r.log2_value);
                // The traced assignment alone reaches the same tree value.
                let full: Evidence = r.assignment.iter().map(|v| Some(*v)).collect();
                assert_eq!(
                    ev.eval_induced_tree(&r.trace, &full).unwrap().value,
                    r.value
                );
            }
        }
    }
    let r = Evaluator::baseline(&c).eval_map(&[None; 8]).unwrap();
    let w: f64 = induced_tree_edges(&c, &r.trace)
        .iter()
        .map(|e| c.edges()[e.0].weight)
        .product();
    let got = FloatConfig::double().decode(&r.value);
    assert!((w - got).abs() <= 1e-12 * w);
}

#[test]
fn more_mantissa_bits_reduce_error() {
    let c = generate_random_tree_pc(21, 8, 3, 3).unwrap();
    let data = as_evidence(&sample(&c, 2, 1000).unwrap());
    for m in [4, 8, 12, 20] {
        let err = |bits| {
            let cfg = FloatConfig::new(8, bits).unwrap();
            compare_queries(&c, &data, cfg, &MultiplierPlan::all_exact(&c), None)
                .unwrap()
                .mean_log_error
        };
        let (coarse, fine) = (err(m), err(m + 8));
        assert!(fine < coarse, "M={m}: {fine} vs {coarse}");
    }
}

/// Mean |log2 p64 - log2 p~| from the reference emulator alone.
fn reference_mean_error(
    c: &Circuit,
    data: &[Assignment],
    fmt: &RefFormat,
    plan: &MultiplierPlan,
) -> f64 {
    let errs: Vec<f64> = data
        .iter()
        .map(|x| {
            let (v, _) = reference_eval(c, x, fmt, plan);
            (c.eval_f64(x).log2() - v.log2()).abs()
        })
        .collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

#[test]
fn compare_queries_matches_reference_emulator() {
    let c = generate_random_tree_pc(17, 8, 3, 3).unwrap();
    let data = sample(&c, 17, 1000).unwrap();
    for rounding in [Rounding::NearestEven, Rounding::TowardZero] {
        let cfg = FloatConfig::new(8, 12).unwrap().with_rounding(rounding);
        let fmt = RefFormat::new(8, 12, rounding);
        for plan in [
            MultiplierPlan::all_aai(&c),
            MultiplierPlan::all_exact(&c),
            random_plan(&c, 0.4, 5, true).unwrap(),
        ] {
            let ev = Evaluator::new(&c, cfg, &plan).unwrap();
            for x in &data[..200] {
                let got = cfg.decode(&ev.eval_mar(x).unwrap().value);
                assert_eq!(got, reference_eval(&c, x, &fmt, &plan).0);
            }
            let m = compare_queries(&c, &as_evidence(&data), cfg, &plan, None).unwrap();
            let want = reference_mean_error(&c, &data, &fmt, &plan);
            assert!(
                (m.mean_log_error - want).abs() < 1e-12,
                "{} vs {want}",
                m.mean_log_error
            );
            assert_eq!(m.n_mar, 1000);
        }
    }
}

#[test]
fn saturation_events_match_reference() {
    let c = generate_random_tree_pc(2, 8, 3, 3).unwrap();
    let data = sample(&c, 4, 200).unwrap();
    let cfg = FloatConfig::new(3, 6).unwrap();
    let fmt = RefFormat::new(3, 6, Rounding::NearestEven);
    let plan = MultiplierPlan::all_aai(&c);
    let ev = Evaluator::new(&c, cfg, &plan).unwrap();
    let (qu, qo) = ev.quantization_flags();
    let mut saw_events = false;
    for x in &data {
        let r = ev.eval_mar(x).unwrap();
        let (v, events) = reference_eval(&c, x, &fmt, &plan);
        assert_eq!(cfg.decode(&r.value), v);
        assert_eq!(r.underflows + r.overflows + qu + qo, events);
        saw_events |= events > 0;
    }
    assert!(saw_events);
}

#[test]
fn correction_shifts_error() {
    let c = generate_random_tree_pc(9, 6, 2, 2).unwrap();
    let data = as_evidence(&sample(&c, 9, 200).unwrap());
    let cfg = FloatConfig::new(8, 10).unwrap();
    let plan = MultiplierPlan::all_aai(&c);
    let raw = compare_queries(&c, &data, cfg, &plan, None).unwrap();
    let zero = compare_queries(&c, &data, cfg, &plan, Some(0.0)).unwrap();
    assert_eq!(raw, zero);
    let shifted = compare_queries(&c, &data, cfg, &plan, Some(0.05)).unwrap();
    assert_ne!(raw.mean_log_error, shifted.mean_log_error);
    assert_eq!(raw.map_accuracy, shifted.map_accuracy);
}

fn tz(m: u32) -> FloatConfig {
    FloatConfig::new(8, m)
        .unwrap()
        .with_rounding(Rounding::TowardZero)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Under toward-zero rounding, every extra AAI site can only lower the
    /// root value, and finite precision never exceeds the `f64` value.
    #[test]
    fn toward_zero_is_one_sided(seed in 0u64..1000, m in 2u32..=20, frac in 0.0f64..=1.0) {
        let c = generate_random_tree_pc(seed, 6, 2, 2).unwrap();
        let cfg = tz(m);
        let exact = Evaluator::new(&c, cfg, &MultiplierPlan::all_exact(&c)).unwrap();
        let mixed = Evaluator::new(&c, cfg, &random_plan(&c, frac, seed, true).unwrap()).unwrap();
        for x in binary_states(6) {
            let e = exact.eval_mar(&x).unwrap();
            let a = mixed.eval_mar(&x).unwrap();
            prop_assert!(a.log2 <= e.log2);
            prop_assert!(cfg.decode(&e.value) <= c.eval_f64(&x) * (1.0 + 1e-14));
        }
    }

    /// Zero mantissas on both compared branches: exact and AAI pick the same
    /// children.
    #[test]
    fn argmax_invariant_without_mantissas(seed in 0u64..1000, e in 4u32..=11, m in 0u32..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = three_var_dyadic();
        let cfg = FloatConfig::new(e, m).unwrap();
        let exact = Evaluator::new(&c, cfg, &MultiplierPlan::all_exact(&c)).unwrap();
        let aai = Evaluator::new(&c, cfg, &MultiplierPlan::all_aai(&c)).unwrap();
        let ev = random_evidence(&mut rng, 3);
        let (a, b) = (exact.eval_map(&ev).unwrap(), aai.eval_map(&ev).unwrap());
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.value, b.value);
    }
}

#[test]
fn plan_shape_is_checked() {
    let c = three_var_pc();
    let short = MultiplierPlan::from_modes(&c, vec![MulMode::Exact; 3]);
    assert!(short.is_err());
    assert_eq!(MultiplierPlan::all_aai(&c).n_aai(), c.n_sites());
    assert!(Evaluator::baseline(&c).eval_mar(&[0, 1]).is_err());
}

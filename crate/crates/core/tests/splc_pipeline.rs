mod common;

use fairshare::extensions::mu_uniform;
use fairshare::generate::{self, Entitlements, Family, GenConfig};
use fairshare::model::{FractionalAllocation, Instance, SetFunction, SplcValuation, ValuationSpec};
use fairshare::rational::{int, ratio, Rational};
use fairshare::shares::{exact_mms, OracleLimits};
use fairshare::splc_mms::{
    cancel_cycles, consolidate_fractions, reprice_to_allocation, round_forest, solve_half_mms,
    solve_half_mms_given_targets, PriceGraph, SplcError,
};
use proptest::prelude::*;

fn splc(rows: &[&[i64]]) -> SplcValuation {
    SplcValuation::new(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()).unwrap()
}

/// Single-copy types; `w[i][j]` is agent `i`'s spending on type `j`.
fn spending(w: &[&[i64]], prices: &[i64]) -> FractionalAllocation {
    FractionalAllocation {
        x: w.iter()
            .map(|row| row.iter().zip(prices).map(|(&a, &p)| vec![ratio(a, p)]).collect())
            .collect(),
    }
}

fn linear_values(x: &FractionalAllocation, vals: &[SplcValuation]) -> Vec<Rational> {
    vals.iter()
        .zip(&x.x)
        .map(|(v, row)| v.linear_extension_value(row).unwrap())
        .collect()
}

fn splc_instance() -> impl Strategy<Value = Instance> {
    (2usize..4, 1usize..4, 1usize..4, any::<u64>()).prop_map(|(n, t, k, seed)| {
        let mut cfg = GenConfig::new(Family::Splc, n, t);
        cfg.max_copies = k;
        generate::generate(&cfg, seed).unwrap()
    })
}

#[test]
fn four_cycle_loses_its_lightest_edge() {
    // a0-g0 = 1, g0-a1 = 2, a1-g1 = 3, g1-a0 = 2
    let prices = [4, 6];
    let x = spending(&[&[1, 2], &[2, 3]], &prices);
    let p: Vec<Rational> = prices.iter().map(|&v| int(v)).collect();
    let g = PriceGraph::new(&x, &p).unwrap();
    assert!(!g.is_forest());
    let (after, log) = cancel_cycles(&g);
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].delta, int(1));
    assert_eq!(log[0].removed, vec![(0, 0)]);
    assert!(after.is_forest());
    assert_eq!(after.edges.len(), 3);
    assert_eq!(after.agent_sums(), g.agent_sums());
    assert_eq!(after.type_sums(), g.type_sums());
    let weight = |a: usize, t: usize| after.edges.iter().find(|e| (e.agent, e.ty) == (a, t)).map(|e| e.weight.clone());
    assert_eq!(weight(0, 1), Some(int(3)));
    assert_eq!(weight(1, 0), Some(int(3)));
    assert_eq!(weight(1, 1), Some(int(2)));

    // values proportional to prices: every agent keeps its linear-extension value
    let vals = vec![splc(&[&[4], &[6]]), splc(&[&[4], &[6]])];
    let y = reprice_to_allocation(&after, &x);
    assert_eq!(linear_values(&y, &vals), linear_values(&x, &vals));
    let r = round_forest(&y, &[1, 1]).unwrap();
    assert_eq!(r.counts.iter().flatten().sum::<usize>(), 2);
}

#[test]
fn disjoint_cycles_are_cancelled_independently() {
    let prices = [2, 2, 2, 2];
    let x = spending(
        &[&[1, 1, 0, 0], &[1, 1, 0, 0], &[0, 0, 1, 1], &[0, 0, 1, 1]],
        &prices,
    );
    let p: Vec<Rational> = prices.iter().map(|&v| int(v)).collect();
    let g = PriceGraph::new(&x, &p).unwrap();
    let (after, log) = cancel_cycles(&g);
    assert_eq!(log.len(), 2);
    assert!(after.is_forest());
    assert_eq!(after.agent_sums(), g.agent_sums());
    assert_eq!(after.type_sums(), g.type_sums());
    for c in &log {
        let agents: Vec<usize> = c.cycle.iter().map(|&(a, _)| a).collect();
        assert!(agents.iter().all(|&a| a < 2) || agents.iter().all(|&a| a >= 2));
    }
}

#[test]
fn path_rounds_the_shared_type_to_the_root() {
    // a0 - g0 - a1 with half a copy each
    let vals = [splc(&[&[5]]), splc(&[&[3]])];
    let x = FractionalAllocation {
        x: vec![vec![vec![ratio(1, 2)]], vec![vec![ratio(1, 2)]]],
    };
    let r = round_forest(&x, &[1]).unwrap();
    assert_eq!(r.counts, vec![vec![1], vec![0]]);
    assert_eq!(r.lost, vec![None, Some(0)]);
    let loss = vals[1].linear_extension_value(&x.x[1]).unwrap() - vals[1].value_of_counts(&r.counts[1]);
    assert!(loss <= vals[1].max_marginal());
}

#[test]
fn consolidation_shifts_mass_onto_the_first_copy() {
    let v = splc(&[&[3, 2]]);
    let x = FractionalAllocation {
        x: vec![vec![vec![ratio(1, 2), ratio(1, 2)]]],
    };
    assert_eq!(v.linear_extension_value(&x.x[0]).unwrap(), ratio(5, 2));
    let c = consolidate_fractions(&x);
    assert_eq!(c.x[0][0], vec![int(1), int(0)]);
    assert_eq!(v.linear_extension_value(&c.x[0]).unwrap(), int(3));
}

#[test]
fn fixtures() {
    let (alloc, trace) = solve_half_mms(&generate::splc_mms_high(3)).unwrap();
    assert_eq!(trace.values, vec![int(1); 3]);
    assert!(alloc.bundles().iter().all(|b| b.len() == 1));

    let counter = generate::greedy_counter(&ratio(1, 32));
    let (alloc, trace) = solve_half_mms(&counter).unwrap();
    let values = alloc.values(&counter);
    for (v, t) in values.iter().zip(&trace.final_targets) {
        assert!(v * int(2) >= *t);
    }
    assert_eq!(values, trace.values);
}

#[test]
fn targets_given_by_the_caller() {
    let cfg = GenConfig::new(Family::Splc, 2, 2);
    let limits = OracleLimits::default();
    let inst = generate::generate(&cfg, 11).unwrap();

    let mms: Vec<Rational> = (0..2).map(|i| exact_mms(&inst, i, &limits).unwrap()).collect();
    let (alloc, _) = solve_half_mms_given_targets(&inst, &mms).unwrap();
    for (v, t) in alloc.values(&inst).iter().zip(&mms) {
        assert!(v * int(2) >= *t);
    }

    let (alloc, trace) = solve_half_mms_given_targets(&inst, &[int(0), int(0)]).unwrap();
    assert_eq!(trace.rule, "fixed");
    assert!(alloc.bundles().iter().all(|b| b.is_empty()));

    let mu: Vec<Rational> = inst
        .valuations()
        .iter()
        .map(|v| mu_uniform(v.splc().unwrap(), 2))
        .collect();
    assert_eq!(
        solve_half_mms_given_targets(&inst, &mu).unwrap(),
        solve_half_mms(&inst).unwrap()
    );

    let too_much: Vec<Rational> = inst.valuations().iter().map(|v| v.eval_all() * int(3)).collect();
    assert!(matches!(
        solve_half_mms_given_targets(&inst, &too_much),
        Err(SplcError::InfeasibleTargets { .. })
    ));
    assert!(matches!(
        solve_half_mms_given_targets(&inst, &[int(1)]),
        Err(SplcError::Invalid(_))
    ));
}

#[test]
fn wrong_instances_are_refused() {
    let add = Instance::symmetric(vec![ValuationSpec::Additive(vec![int(1)]); 2]).unwrap();
    assert_eq!(solve_half_mms(&add).unwrap_err(), SplcError::NotSplc);
    let mut cfg = GenConfig::new(Family::Splc, 2, 2);
    cfg.entitlements = Entitlements::Given(vec![ratio(1, 3), ratio(2, 3)]);
    let asym = generate::generate(&cfg, 0).unwrap();
    assert_eq!(solve_half_mms(&asym).unwrap_err(), SplcError::NotSymmetric);
}

#[test]
fn trace_serializes_to_json() {
    let inst = generate::generate(&GenConfig::new(Family::Splc, 3, 3), 5).unwrap();
    let (_, trace) = solve_half_mms(&inst).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&trace.to_json()).unwrap();
    assert_eq!(doc["rule"], "uniform");
    assert!(doc["steps"].is_array());
    assert_eq!(doc["values"].as_array().unwrap().len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn two_by_two_reaches_half_of_exhaustive_mms(seed in any::<u64>()) {
        let mut cfg = GenConfig::new(Family::Splc, 2, 2);
        cfg.max_copies = 2;
        let inst = generate::generate(&cfg, seed).unwrap();
        let (alloc, _) = solve_half_mms(&inst).unwrap();
        prop_assert!(alloc.validate(&inst).is_ok());
        for (i, v) in alloc.values(&inst).iter().enumerate() {
            prop_assert!(v * int(2) >= common::naive_mms(inst.valuation(i), 2));
        }
    }

    #[test]
    fn pipeline_invariants(inst in splc_instance()) {
        let (alloc, trace) = solve_half_mms(&inst).unwrap();
        prop_assert!(alloc.validate(&inst).is_ok());
        prop_assert_eq!(alloc.values(&inst), trace.values.clone());
        for (v, t) in trace.values.iter().zip(&trace.final_targets) {
            prop_assert!(v * int(2) >= *t);
        }
        if let Some(r) = &trace.residue {
            prop_assert!(r.feasible);
            prop_assert!(r.lp_certified);
            prop_assert!(r.graph_after.is_forest());
            prop_assert_eq!(r.graph_after.agent_sums(), r.graph_before.agent_sums());
            prop_assert_eq!(r.graph_after.type_sums(), r.graph_before.type_sums());
            prop_assert_eq!(&r.values_repriced, &r.values_consolidated);
            for k in 0..r.agents.len() {
                prop_assert!(r.values_consolidated[k] >= r.values_lp[k]);
                let loss = &r.values_repriced[k] - &r.values_rounded[k];
                prop_assert!(loss <= r.max_marginals[k]);
            }
        }
    }
}

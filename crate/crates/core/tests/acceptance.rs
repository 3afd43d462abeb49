//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#![allow(clippy::needless_range_loop)]

mod common;

use std::time::{Duration, Instant};

use fairshare::extensions::{concave_extension_value, mu_uniform, scale, truncate};
use fairshare::generate::{self, Family, GenConfig};
use fairshare::lp;
use fairshare::model::{FractionalAllocation, Instance, SetFunction, SplcValuation, ValuationSpec};
use fairshare::rational::{self, int, ratio, Rational};
use fairshare::shares::{self, OracleLimits};
use fairshare::splc_mms::{self, build_feasibility_lp, fractional_copy, PipelineTrace};
use fairshare::sub_aps::{self, GreedyOutcome, TieBreak};

use common::{is_submodular, mixed_grid, naive_mms, splc_grid};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn limits() -> OracleLimits {
    OracleLimits::default()
}

fn fmt(r: &Rational) -> String {
    rational::format(r)
}

// 1: half of the exact MMS on small symmetric SPLC instances
fn half_mms_end_to_end() -> Check {
    let start = Instant::now();
    let grid = splc_grid(50);
    let mut agents = 0;
    for (id, inst) in &grid {
        let (alloc, _) = splc_mms::solve_half_mms(inst).map_err(|e| format!("{id}: {e}"))?;
        alloc.validate(inst).map_err(|e| format!("{id}: {e}"))?;
        let values = alloc.values(inst);
        for i in 0..inst.agents() {
            let mms = shares::exact_mms(inst, i, &limits()).map_err(|e| e.to_string())?;
            let naive = naive_mms(inst.valuation(i), inst.agents());
            ensure(mms == naive, || format!("{id}: MMS oracles disagree for agent {i}"))?;
            ensure(&values[i] * int(2) >= mms, || {
                format!("{id}: agent {i} has {} < MMS/2 = {}/2", fmt(&values[i]), fmt(&mms))
            })?;
            agents += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{} instances, {agents} agents, {:.1}s", grid.len(), elapsed.as_secs_f64()))
}

// 2: n unit copies, one worth 1
fn mms_high_fixture() -> Check {
    for n in 2..=4 {
        let inst = generate::splc_mms_high(n);
        for i in 0..n {
            let mms = shares::exact_mms(&inst, i, &limits()).map_err(|e| e.to_string())?;
            let aps = shares::exact_aps(&inst, i, &limits()).map_err(|e| e.to_string())?;
            let mu = mu_uniform(inst.valuation(i).splc().expect("splc"), n);
            let total = inst.valuation(i).eval_all();
            ensure(mms == int(1) && aps == int(1) && mu == int(1) && total == int(1), || {
                format!("n={n} agent {i}: mms={} aps={} mu={} v(M)={}", fmt(&mms), fmt(&aps), fmt(&mu), fmt(&total))
            })?;
        }
        let (alloc, _) = splc_mms::solve_half_mms(&inst).map_err(|e| e.to_string())?;
        for i in 0..n {
            ensure(alloc.bundle(i).len() == 1, || format!("n={n}: agent {i} holds {:?}", alloc.bundle(i)))?;
        }
        ensure(alloc.values(&inst).iter().all(|v| *v == int(1)), || format!("n={n}: values not all 1"))?;
    }
    Ok("n = 2, 3, 4".into())
}

// 3: the eight-type counterexample for the uncapped greedy
fn greedy_counter_fixture() -> Check {
    let inst = generate::greedy_counter(&ratio(1, 32));
    let big = OracleLimits {
        mms_max_goods: 32,
        ..limits()
    };
    for i in 0..4 {
        let mms = shares::exact_mms(&inst, i, &big).map_err(|e| e.to_string())?;
        ensure(mms == int(1), || format!("agent {i}: MMS = {}", fmt(&mms)))?;
    }
    let state = sub_aps::greedy_uncapped_variant(
        &inst,
        &vec![int(1); 4],
        ratio(1, 2),
        TieBreak::Ranked(generate::greedy_counter_ranking()),
    )
    .map_err(|e| e.to_string())?;
    ensure(state.values[0] < ratio(1, 2), || {
        format!("uncapped greedy gave agent 0 value {}", fmt(&state.values[0]))
    })?;
    ensure(state.outcome == GreedyOutcome::FailingAgent(0), || format!("outcome {:?}", state.outcome))?;
    let (alloc, _) = splc_mms::solve_half_mms(&inst).map_err(|e| e.to_string())?;
    let values = alloc.values(&inst);
    ensure(values.iter().all(|v| v * int(2) >= int(1)), || {
        format!("pipeline values {:?}", values.iter().map(fmt).collect::<Vec<_>>())
    })?;
    Ok(format!(
        "MMS = 1 for all; uncapped greedy leaves agent 0 at {}; pipeline values {}",
        fmt(&state.values[0]),
        values.iter().map(fmt).collect::<Vec<_>>().join(", ")
    ))
}

// 4: a third of APS, with ε = 1/20
fn third_aps() -> Check {
    let start = Instant::now();
    let grid = mixed_grid(15);
    let eps = ratio(1, 20);
    let factor = int(3) * (int(1) + &eps);
    for (id, inst) in &grid {
        let run = sub_aps::solve_third_aps(inst, &eps).map_err(|e| format!("{id}: {e}"))?;
        run.allocation.validate(inst).map_err(|e| format!("{id}: {e}"))?;
        let values = run.allocation.values(inst);
        for i in 0..inst.agents() {
            let aps = shares::exact_aps(inst, i, &limits()).map_err(|e| e.to_string())?;
            ensure(&values[i] * &factor >= aps, || {
                format!("{id}: agent {i} has {} < APS/3.15 with APS = {}", fmt(&values[i]), fmt(&aps))
            })?;
            let total = inst.valuation(i).eval_all();
            if total > rational::zero() {
                // ceil(log_{1+ε}(v(M)/v_min)) + 1
                let ratio_v = &total / &run.min_singleton[i];
                let mut steps = 0usize;
                let mut acc = int(1);
                while acc < ratio_v {
                    acc *= int(1) + &eps;
                    steps += 1;
                }
                ensure(run.reductions[i] <= steps + 1, || {
                    format!("{id}: agent {i} reduced {} times, bound {}", run.reductions[i], steps + 1)
                })?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{} instances, {:.1}s", grid.len(), elapsed.as_secs_f64()))
}

// 5: APS from the set program equals APS from the truncated concave extension
fn aps_oracles_agree() -> Check {
    let grid = mixed_grid(15);
    let mut checked = 0;
    for (id, inst) in &grid {
        for i in 0..inst.agents() {
            let a = shares::exact_aps(inst, i, &limits()).map_err(|e| e.to_string())?;
            let b = shares::aps_via_truncated_extension(inst.valuation(i), inst.entitlement(i), &limits())
                .map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{id}: agent {i}: {} vs {}", fmt(&a), fmt(&b)))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} agent shares"))
}

// 6: MMS <= APS everywhere symmetric, APS <= μ for SPLC
fn share_orderings() -> Check {
    let mut checked = 0;
    let symmetric = splc_grid(50)
        .into_iter()
        .chain(mixed_grid(15).into_iter().filter(|(_, inst)| inst.is_symmetric()));
    for (id, inst) in symmetric {
        for i in 0..inst.agents() {
            let mms = shares::exact_mms(&inst, i, &limits()).map_err(|e| e.to_string())?;
            let aps = shares::exact_aps(&inst, i, &limits()).map_err(|e| e.to_string())?;
            ensure(mms <= aps, || format!("{id}: agent {i}: MMS {} > APS {}", fmt(&mms), fmt(&aps)))?;
            if let Some(s) = inst.valuation(i).splc() {
                let mu = mu_uniform(s, inst.agents());
                ensure(aps <= mu, || format!("{id}: agent {i}: APS {} > mu {}", fmt(&aps), fmt(&mu)))?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} agents, ordering mms <= aps <= mu"))
}

/// Each agent gets `k_j / n` of every type, spread over the first copies.
fn uniform_point(copies: &[usize], n: usize) -> FractionalAllocation {
    let mut x = FractionalAllocation::zeros(n, copies);
    for row in x.x.iter_mut() {
        for (j, held) in row.iter_mut().enumerate() {
            let mut mass = ratio(copies[j] as i64, n as i64);
            for v in held.iter_mut() {
                let take = rational::min(&mass, &int(1));
                mass -= &take;
                *v = take;
            }
        }
    }
    x
}

fn check_trace(id: &str, inst: &Instance, trace: &PipelineTrace) -> Result<(), String> {
    let n = inst.agents();
    let vals: Vec<&SplcValuation> = inst.splc_valuations().expect("splc");
    let copies = vals[0].copy_counts();
    // the uniform point meets every uniform target within capacity
    let x = uniform_point(&copies, n);
    x.validate(&copies).map_err(|e| format!("{id}: {e}"))?;
    for i in 0..n {
        let v = vals[i].linear_extension_value(&x.x[i]).expect("shapes");
        ensure(v >= mu_uniform(vals[i], n), || format!("{id}: uniform point below mu for agent {i}"))?;
    }
    let owned: Vec<SplcValuation> = vals.iter().map(|v| (*v).clone()).collect();
    let mu: Vec<Rational> = vals.iter().map(|v| mu_uniform(v, n)).collect();
    ensure(lp::check_feasibility(&build_feasibility_lp(&owned, &mu).map_err(|e| e.to_string())?), || {
        format!("{id}: feasibility program rejects the uniform targets")
    })?;
    let Some(r) = &trace.residue else { return Ok(()) };
    ensure(r.feasible, || format!("{id}: residue targets infeasible"))?;
    ensure(r.lp_certified, || format!("{id}: welfare optimum not certified"))?;
    let residue_lp = build_feasibility_lp(&r.valuations, &r.targets).map_err(|e| e.to_string())?;
    ensure(lp::check_feasibility(&residue_lp), || format!("{id}: residue program infeasible"))?;
    // equal value-to-price ratios on fractionally held types
    for (a, row) in r.x_consolidated.x.iter().enumerate() {
        let mut ratio_seen: Option<Rational> = None;
        for (j, held) in row.iter().enumerate() {
            let Some((c, _)) = fractional_copy(held) else { continue };
            ensure(r.prices[j] > rational::zero(), || format!("{id}: zero price on fractional type {j}"))?;
            let q = r.valuations[a].marginal_value(j, c) / &r.prices[j];
            ensure(&q * (int(1) + &r.beta[a]) == int(1), || format!("{id}: MBB off for agent {a} type {j}"))?;
            match &ratio_seen {
                Some(p) => ensure(*p == q, || format!("{id}: unequal ratios for agent {a}"))?,
                None => ratio_seen = Some(q),
            }
        }
    }
    // node sums survive cancellation; every round drops or saturates an edge
    ensure(r.graph_before.agent_sums() == r.graph_after.agent_sums(), || format!("{id}: agent sums moved"))?;
    ensure(r.graph_before.type_sums() == r.graph_after.type_sums(), || format!("{id}: type sums moved"))?;
    ensure(r.graph_after.is_forest(), || format!("{id}: cycles remain"))?;
    for c in &r.cancellations {
        ensure(!c.removed.is_empty() || !c.saturated.is_empty(), || format!("{id}: idle cancellation"))?;
    }
    for (a, v) in r.valuations.iter().enumerate() {
        let before = v.linear_extension_value(&r.x_consolidated.x[a]).expect("shapes");
        let after = v.linear_extension_value(&r.x_repriced.x[a]).expect("shapes");
        ensure(before == after, || format!("{id}: repricing moved agent {a}'s value"))?;
        let rounded = v.value_of_counts(&r.rounding.counts[a]);
        ensure(rounded + v.max_marginal() >= after, || format!("{id}: rounding lost too much for agent {a}"))?;
    }
    for (j, &k) in r.copies.iter().enumerate() {
        let used: usize = r.rounding.counts.iter().map(|c| c[j]).sum();
        ensure(used <= k, || format!("{id}: type {j} over capacity"))?;
    }
    Ok(())
}

// 7: stage invariants on every pipeline trace
fn pipeline_invariants() -> Check {
    let mut traces = 0;
    let mut cancellations = 0;
    let mut instances = splc_grid(50);
    for n in 2..=4 {
        instances.push((format!("mms-high n={n}"), generate::splc_mms_high(n)));
    }
    instances.push(("greedy-counter".into(), generate::greedy_counter(&ratio(1, 32))));
    for (id, inst) in &instances {
        let (_, trace) = splc_mms::solve_half_mms(inst).map_err(|e| format!("{id}: {e}"))?;
        check_trace(id, inst, &trace)?;
        cancellations += trace.residue.as_ref().map_or(0, |r| r.cancellations.len());
        traces += 1;
    }
    Ok(format!("{traces} traces, {cancellations} cycle cancellations"))
}

// 8: greedy audits and failure certificates
fn greedy_audits() -> Check {
    let grid = mixed_grid(15);
    let mut runs = 0;
    let mut certificates = 0;
    for (id, inst) in &grid {
        let n = inst.agents();
        let aps: Vec<Rational> = (0..n)
            .map(|i| shares::exact_aps(inst, i, &limits()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let totals: Vec<Rational> = inst.valuations().iter().map(|v| v.eval_all()).collect();
        let probes = [
            totals.clone(),
            aps.clone(),
            aps.iter().map(|a| a * int(2)).collect(),
            totals.iter().map(|t| t / int(2)).collect::<Vec<_>>(),
        ];
        for beta in probes.iter() {
            let state = sub_aps::greedy_round(inst, beta).map_err(|e| e.to_string())?;
            sub_aps::greedy_internal_audit(&state, Some(&aps)).map_err(|e| format!("{id}: {e}"))?;
            runs += 1;
            if let GreedyOutcome::FailingAgent(i) = state.outcome {
                ensure(aps[i] < beta[i], || format!("{id}: agent {i} failed with beta <= APS"))?;
                certificates += 1;
            }
        }
    }
    Ok(format!("{runs} greedy runs audited, {certificates} failure certificates confirmed"))
}

// 9: randomized share properties
fn property_suites() -> Check {
    let lim = limits();
    let mut counts = [0usize; 5];
    // single-good reduction: drop one agent and one good
    for seed in 0..120u64 {
        let family = Family::ALL[seed as usize % 4];
        let size = if family == Family::Splc { 2 } else { 4 + seed as usize % 3 };
        let inst = generate::generate(&GenConfig::new(family, 3, size), seed).map_err(|e| e.to_string())?;
        let v = inst.valuation(0);
        let g = seed as usize % v.num_goods();
        let reduced = v.without_good(g);
        let mms = shares::mms_value(v, 3, &lim).map_err(|e| e.to_string())?;
        let mms_r = shares::mms_value(&reduced, 2, &lim).map_err(|e| e.to_string())?;
        ensure(mms_r >= mms, || format!("seed {seed}: MMS fell after reduction"))?;
        let aps = shares::aps_value(v, &ratio(1, 3), &lim).map_err(|e| e.to_string())?;
        let aps_r = shares::aps_value(&reduced, &ratio(1, 2), &lim).map_err(|e| e.to_string())?;
        ensure(aps_r >= aps, || format!("seed {seed}: APS fell after reduction"))?;
        counts[0] += 1;
    }
    // scale-freeness and cap retention
    for seed in 0..120u64 {
        let family = Family::ALL[seed as usize % 4];
        let size = if family == Family::Splc { 3 } else { 5 };
        let inst = generate::generate(&GenConfig::new(family, 2, size), seed).map_err(|e| e.to_string())?;
        let v = inst.valuation(1);
        let alpha = ratio(seed as i64 % 5 + 1, 3);
        let b = ratio(1, 2);
        let mms = shares::mms_value(v, 2, &lim).map_err(|e| e.to_string())?;
        let aps = shares::aps_value(v, &b, &lim).map_err(|e| e.to_string())?;
        let scaled = scale(v, &alpha);
        ensure(shares::mms_value(&scaled, 2, &lim).map_err(|e| e.to_string())? == &mms * &alpha, || {
            format!("seed {seed}: MMS not scale-free")
        })?;
        ensure(shares::aps_value(&scaled, &b, &lim).map_err(|e| e.to_string())? == &aps * &alpha, || {
            format!("seed {seed}: APS not scale-free")
        })?;
        counts[1] += 1;
        let gamma = int(seed as i64 % 12);
        let capped = truncate(v, gamma.clone());
        let mms_c = shares::mms_value(&capped, 2, &lim).map_err(|e| e.to_string())?;
        let aps_c = shares::aps_value(&capped, &b, &lim).map_err(|e| e.to_string())?;
        ensure(mms_c == rational::min(&mms, &gamma) && aps_c == rational::min(&aps, &gamma), || {
            format!("seed {seed}: truncation at {} did not cap the shares", fmt(&gamma))
        })?;
        counts[2] += 1;
    }
    // truncations of submodular functions stay submodular
    for seed in 0..120u64 {
        let family = [Family::Additive, Family::TruncatedAdditive, Family::Coverage, Family::Splc][seed as usize % 4];
        let size = if family == Family::Splc { 2 } else { 5 };
        let inst = generate::generate(&GenConfig::new(family, 1, size), seed).map_err(|e| e.to_string())?;
        let v: &ValuationSpec = inst.valuation(0);
        let gamma = int(seed as i64 % 15);
        ensure(is_submodular(v) && is_submodular(&truncate(v, gamma)), || {
            format!("seed {seed}: truncation broke submodularity")
        })?;
        counts[3] += 1;
    }
    // the concave extension agrees with f on vertices
    for seed in 0..120u64 {
        let family = Family::ALL[seed as usize % 4];
        let size = if family == Family::Splc { 2 } else { 4 };
        let inst = generate::generate(&GenConfig::new(family, 1, size), seed).map_err(|e| e.to_string())?;
        let v = inst.valuation(0);
        let m = v.num_goods();
        let mask = seed % (1 << m);
        let x: Vec<Rational> = (0..m).map(|g| int((mask >> g & 1) as i64)).collect();
        let ext = concave_extension_value(v, &x, 16).map_err(|e| e.to_string())?;
        ensure(ext.value == v.eval_mask(mask), || format!("seed {seed}: extension off at a vertex"))?;
        counts[4] += 1;
    }
    Ok(format!(
        "reduction {}, scale {}, cap {}, submodular truncation {}, vertex agreement {}",
        counts[0], counts[1], counts[2], counts[3], counts[4]
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1/2-MMS end-to-end on SPLC", half_mms_end_to_end),
        ("fixture: n copies of one good", mms_high_fixture),
        ("fixture: uncapped-greedy counterexample", greedy_counter_fixture),
        ("1/3-APS guarantee", third_aps),
        ("APS oracle agreement", aps_oracles_agree),
        ("share orderings", share_orderings),
        ("pipeline structural invariants", pipeline_invariants),
        ("greedy audits", greedy_audits),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.1}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{secs:.1}s]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}

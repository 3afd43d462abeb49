//! A third of APS for additive agents with unequal entitlements. Everyone
//! wants good 0, so the wrapper has to lower the smallest agent's `β` a few times.
//!
//! ```bash
//! cargo run --example third_aps
//! ```

use fairshare::model::{Instance, ValuationSpec};
use fairshare::rational::{format, int, ratio, to_f64};
use fairshare::shares::{exact_aps, OracleLimits};
use fairshare::sub_aps::{greedy_internal_audit, solve_third_aps};

fn additive(w: &[i64]) -> ValuationSpec {
    ValuationSpec::Additive(w.iter().map(|&v| int(v)).collect())
}

fn main() {
    let inst = Instance::new(
        vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)],
        vec![
            additive(&[9, 1, 1, 1, 1, 1]),
            additive(&[9, 3, 2, 2, 1, 1]),
            additive(&[9, 2, 3, 4, 5, 6]),
        ],
    )
    .unwrap();
    let run = solve_third_aps(&inst, &ratio(1, 20)).unwrap();
    let aps: Vec<_> = (0..3).map(|i| exact_aps(&inst, i, &OracleLimits::default()).unwrap()).collect();
    println!("{} greedy calls, reductions per agent {:?}", run.greedy_calls, run.reductions);
    println!("agent  bundle        value  beta     aps");
    for (i, v) in run.allocation.values(&inst).iter().enumerate() {
        println!(
            "{i:<6} {:<13} {:<6} {:<8.3} {}",
            format!("{:?}", run.allocation.bundle(i)),
            format(v),
            to_f64(&run.beta[i]),
            format(&aps[i])
        );
    }
    for entry in &run.last_run.log {
        println!("round {}: agent {} takes good {} at score {:.4}", entry.round, entry.winner, entry.good, to_f64(&entry.rho));
    }
    let audit = greedy_internal_audit(&run.last_run, Some(&aps)).unwrap();
    println!("audit: {audit:?}");
}

//! The half-MMS pipeline on a symmetric SPLC instance, step by step.
//!
//! ```bash
//! cargo run --example half_mms_splc -- [seed] [trace.json]
//! ```

use fairshare::generate::{self, Family, GenConfig};
use fairshare::rational::format;
use fairshare::shares::{exact_mms, OracleLimits};
use fairshare::splc_mms::{self, ReductionStep};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(2, |s| s.parse().expect("integer seed"));
    let mut cfg = GenConfig::new(Family::Splc, 3, 3);
    cfg.max_copies = 3;
    let inst = generate::generate(&cfg, seed).unwrap();

    let (alloc, trace) = splc_mms::solve_half_mms(&inst).unwrap();
    let fmt_all = |v: &[_]| v.iter().map(format).collect::<Vec<_>>().join(", ");
    println!("initial targets: {}", fmt_all(&trace.initial_targets));
    for step in &trace.steps {
        match step {
            ReductionStep::ZeroTarget { agent } => println!("agent {agent} has nothing to gain and leaves"),
            ReductionStep::SingleGood { agent, ty, value, target, .. } => println!(
                "agent {agent} takes one copy of type {ty} ({} against target {})",
                format(value),
                format(target)
            ),
        }
    }
    if let Some(r) = &trace.residue {
        println!("residue agents {:?}, welfare LP objective {}", r.agents, format(&r.lp_objective));
        println!("prices {}  beta {}", fmt_all(&r.prices), fmt_all(&r.beta));
        println!(
            "{} price-graph edges, {} cycles cancelled, {} trees rounded",
            r.graph_before.edges.len(),
            r.cancellations.len(),
            r.rounding.trees.len()
        );
    }

    let limits = OracleLimits::default();
    println!("agent  value  target  mms");
    for (i, v) in alloc.values(&inst).iter().enumerate() {
        let mms = exact_mms(&inst, i, &limits).map_or("-".into(), |m| format(&m));
        println!("{i:<6} {:<6} {:<7} {mms}", format(v), format(&trace.final_targets[i]));
    }
    if let Some(path) = args.next() {
        std::fs::write(&path, trace.to_json()).unwrap();
        println!("trace written to {path}");
    }
}

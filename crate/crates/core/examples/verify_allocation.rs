//! Checking a hand-made allocation against exact shares.
//!
//! ```bash
//! cargo run --example verify_allocation
//! ```

use fairshare::model::{self, Instance, ValuationSpec};
use fairshare::rational::{format, int, ratio};
use fairshare::shares::{exact_mms, verify, OracleLimits};

fn main() {
    let inst = Instance::symmetric(vec![
        ValuationSpec::Additive(vec![int(5), int(4), int(3), int(2), int(1)]),
        ValuationSpec::TruncatedAdditive {
            weights: vec![int(1), int(2), int(3), int(4), int(5)],
            cap: int(8),
        },
    ])
    .unwrap();
    let alloc = model::parse_allocation(br#"{"bundles": [[0, 1], [4]]}"#, &inst).unwrap();
    let limits = OracleLimits::default();
    let mms: Vec<_> = (0..2).map(|i| exact_mms(&inst, i, &limits).unwrap()).collect();

    for factor in [int(1), ratio(1, 2)] {
        let report = verify(&inst, &alloc, &mms, &factor).unwrap();
        println!("factor {}: all pass = {}", format(&factor), report.all_pass());
        for a in &report.agents {
            println!(
                "  agent {} holds {} against MMS {}",
                a.agent,
                format(a.achieved.as_ref().unwrap()),
                format(a.target.as_ref().unwrap())
            );
        }
        if let Some(w) = report.worst_ratio() {
            println!("  worst ratio {}", format(&w));
        }
    }
}

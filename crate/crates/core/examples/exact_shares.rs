//! Exact MMS, APS and uniform bound for every agent of a generated instance.
//!
//! ```bash
//! cargo run --example exact_shares -- [family] [seed]
//! ```

use fairshare::generate::{self, Family, GenConfig};
use fairshare::rational::format;
use fairshare::shares::{share_report, support_sets_at_aps, OracleLimits, ShareSelection};
use clap::ValueEnum;

fn main() {
    let mut args = std::env::args().skip(1);
    let family = args
        .next()
        .map(|f| Family::from_str(&f, true).expect("splc, additive, truncated_additive or coverage"))
        .unwrap_or(Family::Splc);
    let seed = args.next().map_or(1, |s| s.parse().expect("integer seed"));

    let inst = generate::generate(&GenConfig::new(family, 3, 3), seed).unwrap();
    let limits = OracleLimits::default();
    let report = share_report(&inst, ShareSelection::ALL, &limits).unwrap();
    let show = |v: &Option<_>| v.as_ref().map_or("-".to_string(), format);
    println!("{} instance, seed {seed}, {} goods", family.name(), inst.num_goods());
    println!("agent  mms    aps    mu");
    for a in &report.agents {
        println!("{:<6} {:<6} {:<6} {}", a.agent, show(&a.mms), show(&a.aps), show(&a.mu));
    }
    println!("ordering violations: {:?}", report.ordering_violations());

    let sup = support_sets_at_aps(inst.valuation(0), inst.entitlement(0), &limits).unwrap();
    println!("agent 0 reaches APS {} with the bundles", format(&sup.level));
    for (set, w) in &sup.sets {
        println!("  {:>5} x {set:?}", format(w));
    }
}

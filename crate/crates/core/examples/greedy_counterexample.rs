//! Why the greedy caps its scores: without the cap, an adversarial tie order
//! on the eight-type instance leaves agent 0 short of half its MMS, while the
//! capped greedy and the SPLC pipeline both do fine.
//!
//! ```bash
//! cargo run --example greedy_counterexample -- [delta]
//! ```

use fairshare::generate;
use fairshare::rational::{self, format, int, ratio};
use fairshare::splc_mms;
use fairshare::sub_aps::{greedy_round, run_greedy, GreedyConfig, TieBreak};

fn main() {
    let delta = std::env::args()
        .nth(1)
        .map_or(ratio(1, 32), |d| rational::parse(&d).expect("a rational such as 1/32"));
    let inst = generate::greedy_counter(&delta);
    let ones = vec![int(1); 4];

    let raw = run_greedy(
        &inst,
        &ones,
        &GreedyConfig {
            capped: false,
            stop_threshold: ratio(1, 2),
            tie_break: TieBreak::Ranked(generate::greedy_counter_ranking()),
        },
    )
    .unwrap();
    let capped = greedy_round(&inst, &ones).unwrap();
    let (alloc, _) = splc_mms::solve_half_mms(&inst).unwrap();
    let fmt_all = |v: &[_]| v.iter().map(format).collect::<Vec<_>>().join(", ");

    println!("every agent has MMS 1 (delta = {})", format(&delta));
    println!("uncapped greedy: {:?}, values {}", raw.outcome, fmt_all(&raw.values));
    println!("capped greedy:   {:?}, values {}", capped.outcome, fmt_all(&capped.values));
    println!("splc pipeline:   values {}", fmt_all(&alloc.values(&inst)));
}

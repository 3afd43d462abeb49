//! The concave extension of a coverage function at a fractional point, and the
//! closed-form uniform bound for an SPLC valuation.
//!
//! ```bash
//! cargo run --example concave_extension
//! ```

use fairshare::extensions::{concave_extension_value, mu_uniform, DEFAULT_EXTENSION_LIMIT};
use fairshare::model::{SplcValuation, ValuationSpec};
use fairshare::rational::{format, int, ratio};

fn main() {
    let coverage = ValuationSpec::Coverage {
        sets: vec![vec![0, 1], vec![1, 2], vec![2, 3]],
        universe_weights: vec![int(2), int(1), int(3), int(1)],
    };
    let x = vec![ratio(1, 2), ratio(1, 3), ratio(2, 3)];
    let ext = concave_extension_value(&coverage, &x, DEFAULT_EXTENSION_LIMIT).unwrap();
    println!("f+(1/2, 1/3, 2/3) = {}", format(&ext.value));
    for (set, weight) in &ext.support {
        println!("  {weight:>5} on {set:?}", weight = format(weight));
    }

    // three copies of a good worth 6, 4, 1 and one copy of a good worth 3
    let splc = SplcValuation::new(vec![vec![int(6), int(4), int(1)], vec![int(3)]]).unwrap();
    for n in 1..=4 {
        let uniform = vec![ratio(1, n as i64); 4];
        let lp = concave_extension_value(&splc, &uniform, DEFAULT_EXTENSION_LIMIT).unwrap();
        println!("n = {n}: mu = {:>5}  (LP gives {})", format(&mu_uniform(&splc, n)), format(&lp.value));
    }
}

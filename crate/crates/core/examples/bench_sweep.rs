//! A small benchmark sweep written as CSV to stdout, the same rows
//! `fairshare bench` produces.
//!
//! ```bash
//! cargo run --release --example bench_sweep
//! ```

use fairshare::cli::{run_bench, write_csv, BenchConfig};
use fairshare::shares::OracleLimits;

const CONFIG: &str = r#"{
  "runs": [
    {"family": "splc", "agents": 3, "size": 3, "count": 5, "algos": ["splc-mms", "sub-aps"]},
    {"family": "coverage", "agents": 2, "size": 6, "count": 5, "entitlements": "random", "algos": ["sub-aps"]}
  ]
}"#;

fn main() {
    let config: BenchConfig = serde_json::from_str(CONFIG).unwrap();
    let rows = run_bench(&config, &OracleLimits::default(), true).unwrap();
    print!("{}", String::from_utf8(write_csv(&rows)).unwrap());
}

//! Independent brute-force oracles and instance grids shared by the test targets.
#![allow(dead_code)]

use fairshare::generate::{self, Entitlements, Family, GenConfig};
use fairshare::model::{Good, Instance, SetFunction};
use fairshare::rational::{self, Rational};

/// MMS by trying every assignment of goods to `parts` bundles (`parts^m` of them).
pub fn naive_mms<F: SetFunction + ?Sized>(f: &F, parts: usize) -> Rational {
    let m = f.num_goods();
    let mut owner = vec![0usize; m];
    let mut best = rational::zero();
    loop {
        let mut bundles: Vec<Vec<Good>> = vec![Vec::new(); parts];
        for (g, &o) in owner.iter().enumerate() {
            bundles[o].push(g);
        }
        let worst = bundles.iter().map(|b| f.eval(b)).min().expect("parts >= 1");
        if worst > best {
            best = worst;
        }
        // next assignment in base `parts`
        let mut k = 0;
        loop {
            if k == m {
                return best;
            }
            owner[k] += 1;
            if owner[k] < parts {
                break;
            }
            owner[k] = 0;
            k += 1;
        }
    }
}

/// `f(S ∪ {g}) - f(S)` over all `S` and `g ∉ S` never grows as `S` grows.
pub fn is_submodular<F: SetFunction + ?Sized>(f: &F) -> bool {
    let m = f.num_goods();
    let full = 1u64 << m;
    for s in 0..full {
        for t in 0..full {
            if s & !t != 0 {
                continue;
            }
            for g in 0..m {
                let bit = 1u64 << g;
                if t & bit != 0 {
                    continue;
                }
                let gain_s = f.eval_mask(s | bit) - f.eval_mask(s);
                let gain_t = f.eval_mask(t | bit) - f.eval_mask(t);
                if gain_s < gain_t {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_monotone<F: SetFunction + ?Sized>(f: &F) -> bool {
    let m = f.num_goods();
    (0..1u64 << m).all(|s| (0..m).all(|g| f.eval_mask(s | 1 << g) >= f.eval_mask(s)))
}

/// Symmetric SPLC instances: `n ∈ {2,3}`, `t ∈ {2,3}`, `k_j <= 2`, values <= 10.
pub fn splc_grid(per_cell: u64) -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for n in [2, 3] {
        for t in [2, 3] {
            let mut cfg = GenConfig::new(Family::Splc, n, t);
            cfg.max_copies = 2;
            cfg.max_value = 10;
            for seed in 0..per_cell {
                let id = format!("splc n={n} t={t} seed={seed}");
                out.push((id, generate::generate(&cfg, seed).expect("valid")));
            }
        }
    }
    out
}

/// Mixed-family instances with `m <= 7` and symmetric or fixed asymmetric
/// entitlements (`{1/4, 3/4}` for two agents, `{1/6, 1/3, 1/2}` for three).
pub fn mixed_grid(per_cell: u64) -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for family in Family::ALL {
        for n in [2usize, 3] {
            let asym = if n == 2 {
                vec![rational::ratio(1, 4), rational::ratio(3, 4)]
            } else {
                vec![rational::ratio(1, 6), rational::ratio(1, 3), rational::ratio(1, 2)]
            };
            for (label, ent) in [("sym", Entitlements::Symmetric), ("asym", Entitlements::Given(asym))] {
                for seed in 0..per_cell {
                    let size = match family {
                        Family::Splc => 2 + (seed as usize % 2),
                        _ => 4 + (seed as usize % 4),
                    };
                    let mut cfg = GenConfig::new(family, n, size);
                    cfg.max_copies = 2;
                    cfg.max_value = 10;
                    cfg.entitlements = ent.clone();
                    let id = format!("{} n={n} {label} m={size} seed={seed}", family.name());
                    out.push((id, generate::generate(&cfg, seed).expect("valid")));
                }
            }
        }
    }
    out
}

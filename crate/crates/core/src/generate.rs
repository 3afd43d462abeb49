//! Seeded random instances and the two hand-built fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, ModelError, SplcValuation, ValuationSpec};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Family {
    Splc,
    Additive,
    TruncatedAdditive,
    Coverage,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Splc,
        Family::Additive,
        Family::TruncatedAdditive,
        Family::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Splc => "splc",
            Family::Additive => "additive",
            Family::TruncatedAdditive => "truncated_additive",
            Family::Coverage => "coverage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Entitlements {
    #[default]
    Symmetric,
    /// Random positive weights normalized to sum to one.
    Random,
    Given(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub family: Family,
    pub agents: usize,
    /// Goods, or good types for SPLC.
    pub size: usize,
    /// Copies per type are drawn from `1..=max_copies` (SPLC only).
    pub max_copies: usize,
    /// Integer values are drawn from `0..=max_value`.
    pub max_value: u32,
    pub entitlements: Entitlements,
}

impl GenConfig {
    pub fn new(family: Family, agents: usize, size: usize) -> Self {
        Self {
            family,
            agents,
            size,
            max_copies: 2,
            max_value: 10,
            entitlements: Entitlements::Symmetric,
        }
    }
}

fn value(rng: &mut ChaCha8Rng, max: u32) -> Rational {
    rational::int(rng.gen_range(0..=max) as i64)
}

/// One instance drawn from `config` with a fresh generator seeded by `seed`.
pub fn generate(config: &GenConfig, seed: u64) -> Result<Instance, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.agents;
    let m = config.size;
    let max = config.max_value;
    let valuations: Vec<ValuationSpec> = match config.family {
        Family::Splc => {
            let copies: Vec<usize> = (0..m)
                .map(|_| rng.gen_range(1..=config.max_copies.max(1)))
                .collect();
            (0..n)
                .map(|_| {
                    let rows = copies
                        .iter()
                        .map(|&k| {
                            let mut row: Vec<Rational> = (0..k).map(|_| value(&mut rng, max)).collect();
                            row.sort_unstable_by(|a, b| b.cmp(a));
                            row
                        })
                        .collect();
                    ValuationSpec::Splc(SplcValuation::new(rows).expect("sorted rows are concave"))
                })
                .collect()
        }
        Family::Additive => (0..n)
            .map(|_| ValuationSpec::Additive((0..m).map(|_| value(&mut rng, max)).collect()))
            .collect(),
        Family::TruncatedAdditive => (0..n)
            .map(|_| {
                let weights: Vec<Rational> = (0..m).map(|_| value(&mut rng, max)).collect();
                let total: Rational = weights.iter().sum();
                let top = rational::floor_to_usize(&total).max(1);
                let cap = rational::int(rng.gen_range(1..=top) as i64);
                ValuationSpec::TruncatedAdditive { weights, cap }
            })
            .collect(),
        Family::Coverage => (0..n)
            .map(|_| {
                let universe = m + 1;
                let sets = (0..m)
                    .map(|_| (0..universe).filter(|_| rng.gen_bool(0.4)).collect())
                    .collect();
                let universe_weights = (0..universe).map(|_| value(&mut rng, max)).collect();
                ValuationSpec::Coverage {
                    sets,
                    universe_weights,
                }
            })
            .collect(),
    };
    let entitlements = match &config.entitlements {
        Entitlements::Symmetric => vec![rational::ratio(1, n as i64); n],
        Entitlements::Given(b) => b.clone(),
        Entitlements::Random => {
            let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
            let total: i64 = w.iter().sum();
            w.into_iter().map(|x| rational::ratio(x, total)).collect()
        }
    };
    Instance::new(entitlements, valuations)
}

/// `n` agents, `n` copies of one good; one copy is worth 1, further copies 0.
pub fn splc_mms_high(n: usize) -> Instance {
    let mut row = vec![rational::zero(); n];
    row[0] = rational::one();
    let v = SplcValuation::new(vec![row]).expect("nonincreasing row");
    Instance::symmetric(vec![ValuationSpec::Splc(v); n]).expect("well-formed fixture")
}

/// Four agents and eight good types of four copies each.
///
/// * agent 0: first copy of types 0 and 1 at `1/2 - δ`, first copy of type 2 at `2δ`;
/// * agents 1, 2: first copy of type 0 at `2δ`, first two copies of types 1 and 2 at `1/2 - δ`;
/// * agent 3: `1/8` for every copy.
pub fn greedy_counter(delta: &Rational) -> Instance {
    let zero = || vec![rational::zero(); 4];
    let half = rational::ratio(1, 2) - delta;
    let small = delta * rational::int(2);
    let with = |entries: &[(usize, usize, &Rational)]| {
        let mut rows = vec![zero(); 8];
        for &(ty, copy, v) in entries {
            rows[ty][copy] = v.clone();
        }
        ValuationSpec::Splc(SplcValuation::new(rows).expect("nonincreasing rows"))
    };
    let first = with(&[(0, 0, &half), (1, 0, &half), (2, 0, &small)]);
    let middle = with(&[
        (0, 0, &small),
        (1, 0, &half),
        (1, 1, &half),
        (2, 0, &half),
        (2, 1, &half),
    ]);
    let eighth = rational::ratio(1, 8);
    let last = ValuationSpec::Splc(
        SplcValuation::new(vec![vec![eighth; 4]; 8]).expect("constant rows"),
    );
    Instance::symmetric(vec![first, middle.clone(), middle, last]).expect("well-formed fixture")
}

/// A tie ranking under which the uncapped greedy on [`greedy_counter`]
/// (threshold 1/2, `β = 1`) follows the bad trajectory: agent 0 takes type
/// 0, agents 1 and 2 take type 1, agent 3 takes all of type 2. Ranks are
/// per `(agent, flat good)`; lower wins among equal scores.
pub fn greedy_counter_ranking() -> Vec<Vec<u32>> {
    let type_rank: [[u32; 8]; 4] = [
        [0, 3, 10, 10, 10, 10, 10, 10],
        [10, 1, 10, 10, 10, 10, 10, 10],
        [10, 2, 10, 10, 10, 10, 10, 10],
        [10, 10, 0, 10, 10, 10, 10, 10],
    ];
    type_rank
        .iter()
        .map(|row| row.iter().flat_map(|&r| [r; 4]).collect())
        .collect()
}

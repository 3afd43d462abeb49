//! Capped-marginal greedy for one third of the any-price share under
//! submodular valuations, the β-refinement wrapper, and an uncapped variant
//! kept for diagnostics.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::extensions::{scale, truncate, Truncated};
use crate::model::{Allocation, Good, Instance, SetFunction, ValuationSpec};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubApsError {
    #[error("{0} values of beta for {1} agents")]
    BetaCount(usize, usize),
    #[error("beta must be nonnegative (agent {0})")]
    NegativeBeta(usize),
    #[error("epsilon must be positive")]
    Epsilon,
    #[error("greedy audit failed: {0}")]
    Audit(String),
}

/// Order among equally scored `(agent, good)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest agent, then lowest good.
    #[default]
    Lexicographic,
    /// Lowest `rank[agent][good]`, then lexicographic.
    Ranked(Vec<Vec<u32>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyConfig {
    /// Cap scores at `(2/3) n b_i`.
    pub capped: bool,
    /// An agent retires once `v̂_i(A_i) >= stop_threshold * n b_i`; the run
    /// fails for any agent left below `stop_threshold * β_i`.
    pub stop_threshold: Rational,
    pub tie_break: TieBreak,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            capped: true,
            stop_threshold: rational::ratio(1, 3),
            tie_break: TieBreak::Lexicographic,
        }
    }
}

impl GreedyConfig {
    pub fn uncapped(stop_threshold: Rational) -> Self {
        Self {
            capped: false,
            stop_threshold,
            tie_break: TieBreak::Lexicographic,
        }
    }
}

/// Agent `agent`'s score for the allocated good at that round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeenScore {
    pub agent: usize,
    #[serde(with = "rational::serde_text")]
    pub score: Rational,
}

/// One allocation round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub winner: usize,
    pub good: Good,
    /// The winning score.
    #[serde(with = "rational::serde_text")]
    pub rho: Rational,
    /// Every active agent's score for `good` this round, winner included.
    pub seen: Vec<SeenScore>,
    /// Agents that retired after this round.
    pub retired: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", content = "agent", rename_all = "snake_case")]
pub enum GreedyOutcome {
    Allocation,
    FailingAgent(usize),
}

/// Full state of a greedy run.
#[derive(Debug, Clone, Serialize)]
pub struct GreedyState {
    pub agents: usize,
    pub goods: usize,
    #[serde(with = "rational::serde_text_vec")]
    pub entitlements: Vec<Rational>,
    #[serde(with = "rational::serde_text_vec")]
    pub beta: Vec<Rational>,
    pub capped: bool,
    #[serde(with = "rational::serde_text")]
    pub stop_threshold: Rational,
    /// Agents with `β = 0`, retired before the first round.
    pub pre_retired: Vec<usize>,
    pub active: Vec<bool>,
    pub unallocated: Vec<bool>,
    pub bundles: Vec<Vec<Good>>,
    pub log: Vec<RoundLog>,
    /// `v̂_i(A_i)` at termination.
    #[serde(with = "rational::serde_text_vec")]
    pub normalized_values: Vec<Rational>,
    /// `v_i(A_i)` at termination.
    #[serde(with = "rational::serde_text_vec")]
    pub values: Vec<Rational>,
    pub outcome: GreedyOutcome,
    #[serde(skip)]
    normalized: Vec<Option<Truncated>>,
}

impl GreedyState {
    pub fn allocation(&self) -> Allocation {
        Allocation::new(self.bundles.clone())
    }

    /// `n b_i`.
    pub fn budget(&self, agent: usize) -> Rational {
        &self.entitlements[agent] * rational::int(self.agents as i64)
    }

    /// `v̂_i(S)`, or zero for a pre-retired agent.
    pub fn normalized_value(&self, agent: usize, goods: &[Good]) -> Rational {
        self.normalized[agent]
            .as_ref()
            .map_or_else(Rational::zero, |f| f.eval(goods))
    }

    fn score(&self, agent: usize, good: Good) -> Rational {
        let f = self.normalized[agent].as_ref().expect("active agents are normalized");
        let mut with = self.bundles[agent].clone();
        with.push(good);
        let gain = f.eval(&with) - f.eval(&self.bundles[agent]);
        if self.capped {
            rational::min(&gain, &(self.budget(agent) * rational::ratio(2, 3)))
        } else {
            gain
        }
    }
}

/// `v̂_i = min(n b_i, (n b_i / β_i) v_i)`.
pub fn normalize(v: &ValuationSpec, budget: &Rational, beta: &Rational) -> Truncated {
    truncate(scale(v, &(budget / beta)), budget.clone())
}

fn check_beta(instance: &Instance, beta: &[Rational]) -> Result<(), SubApsError> {
    if beta.len() != instance.agents() {
        return Err(SubApsError::BetaCount(beta.len(), instance.agents()));
    }
    if let Some(i) = beta.iter().position(Signed::is_negative) {
        return Err(SubApsError::NegativeBeta(i));
    }
    Ok(())
}

/// Runs the greedy under `config`. Returns the final state; its `outcome`
/// is either an allocation or the lowest-index agent left below
/// `stop_threshold * β_i`.
pub fn run_greedy(
    instance: &Instance,
    beta: &[Rational],
    config: &GreedyConfig,
) -> Result<GreedyState, SubApsError> {
    check_beta(instance, beta)?;
    let n = instance.agents();
    let m = instance.num_goods();
    let nn = rational::int(n as i64);
    let normalized: Vec<Option<Truncated>> = (0..n)
        .map(|i| {
            beta[i].is_positive().then(|| {
                normalize(instance.valuation(i), &(instance.entitlement(i) * &nn), &beta[i])
            })
        })
        .collect();
    let pre_retired: Vec<usize> = (0..n).filter(|&i| normalized[i].is_none()).collect();
    let mut state = GreedyState {
        agents: n,
        goods: m,
        entitlements: instance.entitlements().to_vec(),
        beta: beta.to_vec(),
        capped: config.capped,
        stop_threshold: config.stop_threshold.clone(),
        active: normalized.iter().map(Option::is_some).collect(),
        pre_retired,
        unallocated: vec![true; m],
        bundles: vec![Vec::new(); n],
        log: Vec::new(),
        normalized_values: Vec::new(),
        values: Vec::new(),
        outcome: GreedyOutcome::Allocation,
        normalized,
    };
    let rank = |i: usize, j: Good| match &config.tie_break {
        TieBreak::Lexicographic => 0,
        TieBreak::Ranked(r) => r
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(u32::MAX),
    };

    let mut round = 0;
    while state.active.iter().any(|&a| a) && state.unallocated.iter().any(|&u| u) {
        round += 1;
        let mut best: Option<(Rational, u32, usize, Good)> = None;
        for i in (0..n).filter(|&i| state.active[i]) {
            for j in (0..m).filter(|&j| state.unallocated[j]) {
                let s = state.score(i, j);
                let r = rank(i, j);
                let better = match &best {
                    None => true,
                    Some((bs, br, _, _)) => s > *bs || (s == *bs && r < *br),
                };
                if better {
                    best = Some((s, r, i, j));
                }
            }
        }
        let (rho, _, winner, good) = best.expect("an active agent and a good remain");
        let seen = (0..n)
            .filter(|&i| state.active[i])
            .map(|i| SeenScore {
                agent: i,
                score: state.score(i, good),
            })
            .collect();
        state.bundles[winner].push(good);
        state.unallocated[good] = false;
        let mut retired = Vec::new();
        let reached =
            state.normalized_value(winner, &state.bundles[winner]) >= &config.stop_threshold * state.budget(winner);
        if reached {
            state.active[winner] = false;
            retired.push(winner);
        }
        state.log.push(RoundLog {
            round,
            winner,
            good,
            rho,
            seen,
            retired,
        });
    }

    state.normalized_values = (0..n)
        .map(|i| state.normalized_value(i, &state.bundles[i]))
        .collect();
    state.values = (0..n)
        .map(|i| instance.valuation(i).eval(&state.bundles[i]))
        .collect();
    for b in &mut state.bundles {
        b.sort_unstable();
    }
    state.outcome = (0..n)
        .find(|&i| state.values[i] < &config.stop_threshold * &beta[i])
        .map_or(GreedyOutcome::Allocation, GreedyOutcome::FailingAgent);
    Ok(state)
}

/// The capped greedy with retirement at one third.
pub fn greedy_round(instance: &Instance, beta: &[Rational]) -> Result<GreedyState, SubApsError> {
    run_greedy(instance, beta, &GreedyConfig::default())
}

/// The same loop scored by raw (uncapped) normalized marginals.
pub fn greedy_uncapped_variant(
    instance: &Instance,
    beta: &[Rational],
    stop_threshold: Rational,
    tie_break: TieBreak,
) -> Result<GreedyState, SubApsError> {
    let config = GreedyConfig {
        capped: false,
        stop_threshold,
        tie_break,
    };
    run_greedy(instance, beta, &config)
}

/// Counts of what [`greedy_internal_audit`] checked.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub bundle_sums: usize,
    pub bundle_equalities: usize,
    pub seen_scores: usize,
    pub outside_sums: usize,
    pub certified_agents: usize,
}

/// Replays a capped run's log and checks, per agent:
/// the winning scores over `A_i` sum to at most `(2/3) n b_i`, with equality
/// to `v̂_i(A_i)` when `|A_i| > 1`; every active agent's seen score is at most
/// the winning one; when all goods went out and `i` stayed active, the scores
/// it saw for other agents' goods sum to at most `(2/3) n (1 - b_i)`.
/// With `aps` given, agents whose `β_i <= aps_i` must end with at least `β_i / 3`.
pub fn greedy_internal_audit(
    state: &GreedyState,
    aps: Option<&[Rational]>,
) -> Result<AuditSummary, SubApsError> {
    let fail = |msg: String| Err(SubApsError::Audit(msg));
    if !state.capped {
        return fail("audit applies to capped runs only".into());
    }
    let two_thirds = rational::ratio(2, 3);
    let mut summary = AuditSummary::default();
    let mut rho_of = vec![None; state.goods];
    for entry in &state.log {
        rho_of[entry.good] = Some(entry.rho.clone());
        for s in &entry.seen {
            summary.seen_scores += 1;
            if s.score > entry.rho {
                return fail(format!(
                    "round {}: agent {} saw {} above the winning {}",
                    entry.round,
                    s.agent,
                    rational::format(&s.score),
                    rational::format(&entry.rho)
                ));
            }
        }
    }
    for i in 0..state.agents {
        let budget = state.budget(i);
        let won: Rational = state.bundles[i]
            .iter()
            .map(|&g| rho_of[g].clone().expect("allocated goods are logged"))
            .sum();
        summary.bundle_sums += 1;
        if won > &two_thirds * &budget {
            return fail(format!("agent {i}: winning scores sum above (2/3) n b_i"));
        }
        if state.bundles[i].len() > 1 {
            summary.bundle_equalities += 1;
            if won != state.normalized_values[i] {
                return fail(format!("agent {i}: winning scores differ from v̂(A_i)"));
            }
        }
    }
    if state.unallocated.iter().all(|&u| !u) {
        let n = rational::int(state.agents as i64);
        for i in (0..state.agents).filter(|&i| state.active[i]) {
            let outside: Rational = state
                .log
                .iter()
                .filter(|e| e.winner != i)
                .filter_map(|e| e.seen.iter().find(|s| s.agent == i))
                .map(|s| s.score.clone())
                .sum();
            summary.outside_sums += 1;
            let bound = &two_thirds * &n * (rational::one() - &state.entitlements[i]);
            if outside > bound {
                return fail(format!(
                    "agent {i}: outside scores {} exceed {}",
                    rational::format(&outside),
                    rational::format(&bound)
                ));
            }
        }
    }
    if let Some(aps) = aps {
        for (i, aps_i) in aps.iter().enumerate().take(state.agents) {
            // v_i >= β_i / 3 is v̂_i >= n b_i / 3 whenever β_i > 0
            if state.beta[i] <= *aps_i {
                summary.certified_agents += 1;
                if &state.values[i] * rational::int(3) < state.beta[i] {
                    return fail(format!("agent {i}: beta <= APS yet below beta / 3"));
                }
            }
        }
    }
    Ok(summary)
}

/// Outcome of [`solve_third_aps`].
#[derive(Debug, Clone, Serialize)]
pub struct ThirdApsRun {
    #[serde(skip)]
    pub allocation: Allocation,
    /// Final `β` per agent; every agent holds at least `β_i / 3`.
    #[serde(with = "rational::serde_text_vec")]
    pub beta: Vec<Rational>,
    /// How many times each agent's `β` was lowered.
    pub reductions: Vec<usize>,
    /// Smallest positive singleton value per agent (zero if none).
    #[serde(with = "rational::serde_text_vec")]
    pub min_singleton: Vec<Rational>,
    pub greedy_calls: usize,
    /// The final (successful) greedy run.
    pub last_run: GreedyState,
}

/// Smallest positive `v({g})`, or zero.
pub fn min_positive_singleton<F: SetFunction + ?Sized>(f: &F) -> Rational {
    (0..f.num_goods())
        .map(|g| f.eval(&[g]))
        .filter(Signed::is_positive)
        .min()
        .unwrap_or_else(Rational::zero)
}

/// Starts from `β_i = v_i(M)` and lowers the failing agent's `β` by a factor
/// `1 + ε` until the greedy succeeds. A `β` that would drop below the
/// smallest positive singleton value is clamped to it once, then set to 0.
pub fn solve_third_aps(instance: &Instance, epsilon: &Rational) -> Result<ThirdApsRun, SubApsError> {
    if !epsilon.is_positive() {
        return Err(SubApsError::Epsilon);
    }
    let n = instance.agents();
    let mut beta: Vec<Rational> = instance.valuations().iter().map(|v| v.eval_all()).collect();
    let floor: Vec<Rational> = instance
        .valuations()
        .iter()
        .map(min_positive_singleton)
        .collect();
    let mut reductions = vec![0; n];
    let divisor = rational::one() + epsilon;
    let mut calls = 0;
    loop {
        calls += 1;
        let state = greedy_round(instance, &beta)?;
        let i = match state.outcome {
            GreedyOutcome::Allocation => {
                return Ok(ThirdApsRun {
                    allocation: state.allocation(),
                    beta,
                    reductions,
                    min_singleton: floor,
                    greedy_calls: calls,
                    last_run: state,
                })
            }
            GreedyOutcome::FailingAgent(i) => i,
        };
        reductions[i] += 1;
        let lowered = &beta[i] / &divisor;
        beta[i] = if beta[i] <= floor[i] {
            Rational::zero()
        } else if lowered < floor[i] {
            floor[i].clone()
        } else {
            lowered
        };
    }
}

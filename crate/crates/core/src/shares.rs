//! Exact MMS and APS oracles for small instances, and the allocation verifier.
//!
//! Everything here is brute force over partitions or subsets and is only
//! meant for instances within [`OracleLimits`].

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::extensions::{self, extension_from_values, subset_values, ExtensionError};
use crate::lp::{self, LinearProgram, Sense};
use crate::model::{Allocation, Good, Instance, ModelError, SetFunction, SplcValuation};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleLimits {
    pub mms_max_agents: usize,
    /// Goods (SPLC: total copies) for the MMS partition search.
    pub mms_max_goods: usize,
    /// Goods for the APS subset enumeration.
    pub aps_max_goods: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            mms_max_agents: 4,
            mms_max_goods: 10,
            aps_max_goods: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShareError {
    #[error("capability limit: {what} is {size}, limit is {limit}")]
    OverLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("maximin share needs symmetric entitlements")]
    NotSymmetric,
    #[error("agent {0} does not exist")]
    NoSuchAgent(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<ExtensionError> for ShareError {
    fn from(e: ExtensionError) -> Self {
        match e {
            ExtensionError::TooManyGoods { goods, limit } => ShareError::OverLimit {
                what: "number of goods",
                size: goods,
                limit,
            },
            other => ShareError::Model(ModelError::Dimension(other.to_string())),
        }
    }
}

fn check_agent(instance: &Instance, agent: usize) -> Result<(), ShareError> {
    if agent >= instance.agents() {
        return Err(ShareError::NoSuchAgent(agent));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// maximin share

/// `max over partitions into `parts` bundles (empty bundles allowed) of the
/// worst bundle value`.
pub fn mms_value<F: SetFunction + ?Sized>(
    f: &F,
    parts: usize,
    limits: &OracleLimits,
) -> Result<Rational, ShareError> {
    assert!(parts >= 1, "at least one bundle");
    if parts > limits.mms_max_agents {
        return Err(ShareError::OverLimit {
            what: "number of agents",
            size: parts,
            limit: limits.mms_max_agents,
        });
    }
    if f.num_goods() > limits.mms_max_goods {
        return Err(ShareError::OverLimit {
            what: "number of goods",
            size: f.num_goods(),
            limit: limits.mms_max_goods,
        });
    }
    Ok(match f.as_splc() {
        Some(splc) => splc_mms(splc, parts),
        None => partition_mms(f, parts),
    })
}

/// MMS of `agent` in a symmetric instance, with `n` = number of agents.
pub fn exact_mms(
    instance: &Instance,
    agent: usize,
    limits: &OracleLimits,
) -> Result<Rational, ShareError> {
    check_agent(instance, agent)?;
    if !instance.is_symmetric() {
        return Err(ShareError::NotSymmetric);
    }
    mms_value(instance.valuation(agent), instance.agents(), limits)
}

/// Enumerates set partitions as restricted growth strings, so each unordered
/// partition into at most `parts` blocks is visited once.
fn partition_mms<F: SetFunction + ?Sized>(f: &F, parts: usize) -> Rational {
    fn walk<F: SetFunction + ?Sized>(
        f: &F,
        good: Good,
        bundles: &mut Vec<Vec<Good>>,
        used: usize,
        best: &mut Option<Rational>,
    ) {
        if good == f.num_goods() {
            let worst = bundles.iter().map(|b| f.eval(b)).min().expect("parts >= 1");
            if best.as_ref().is_none_or(|b| worst > *b) {
                *best = Some(worst);
            }
            return;
        }
        let limit = (used + 1).min(bundles.len());
        for block in 0..limit {
            bundles[block].push(good);
            walk(f, good + 1, bundles, used.max(block + 1), best);
            bundles[block].pop();
        }
    }
    let mut bundles = vec![Vec::new(); parts];
    let mut best = None;
    walk(f, 0, &mut bundles, 0, &mut best);
    best.expect("at least one partition")
}

/// Dynamic program over types. A state is the sorted vector of bundle values,
/// each clipped at `cap`, so symmetric partial partitions collapse.
fn splc_mms_capped(s: &SplcValuation, parts: usize, cap: &Rational) -> Rational {
    let mut states: HashSet<Vec<Rational>> = HashSet::new();
    states.insert(vec![Rational::zero(); parts]);
    for ty in 0..s.types() {
        let marginals = s.marginals(ty);
        if marginals.iter().all(Zero::is_zero) {
            continue;
        }
        let mut prefix = vec![Rational::zero()];
        for v in marginals {
            let next = prefix.last().unwrap() + v;
            prefix.push(next);
        }
        let compositions = compositions(marginals.len(), parts);
        let mut next = HashSet::with_capacity(states.len() * 2);
        for state in &states {
            for comp in &compositions {
                let mut bundle: Vec<Rational> = state
                    .iter()
                    .zip(comp)
                    .map(|(v, &c)| rational::min(&(v + &prefix[c]), cap))
                    .collect();
                bundle.sort_unstable();
                next.insert(bundle);
            }
        }
        states = next;
    }
    states
        .into_iter()
        .map(|s| s[0].clone())
        .max()
        .expect("at least one state")
}

fn splc_mms(s: &SplcValuation, parts: usize) -> Rational {
    // The uniform bound is only a clipping hint: a result strictly below the
    // clip is exact; otherwise rerun without clipping.
    let hint = extensions::mu_uniform(s, parts);
    let clipped = splc_mms_capped(s, parts, &hint);
    if clipped < hint {
        return clipped;
    }
    splc_mms_capped(s, parts, &s.eval_all())
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == parts {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, parts, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

// ---------------------------------------------------------------------------
// any-price share

fn distinct_levels(values: &[Rational]) -> Vec<Rational> {
    let mut levels: Vec<Rational> = values.to_vec();
    levels.push(Rational::zero());
    levels.sort_unstable();
    levels.dedup();
    levels
}

/// Largest index `i` with `pred(levels[i])`, given that `pred` holds on a
/// prefix of `levels` and on `levels[0]`.
fn last_true(levels: &[Rational], mut pred: impl FnMut(&Rational) -> bool) -> usize {
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if pred(&levels[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Is there a distribution over sets worth at least `level` that uses each
/// good with total weight at most `b`?
fn aps_level_feasible(values: &[Rational], m: usize, b: &Rational, level: &Rational) -> bool {
    let masks: Vec<u64> = (0..values.len() as u64)
        .filter(|&mask| values[mask as usize] >= *level)
        .collect();
    if masks.is_empty() {
        return false;
    }
    let mut lp = LinearProgram::new(masks.len());
    lp.add_constraint(vec![rational::one(); masks.len()], Sense::Eq, rational::one());
    for good in 0..m {
        let row = masks
            .iter()
            .map(|mask| {
                if mask >> good & 1 == 1 {
                    rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        lp.add_constraint(row, Sense::Le, b.clone());
    }
    lp::check_feasibility(&lp)
}

/// APS of a valuation with entitlement `b` from the set-LP definition.
pub fn aps_value<F: SetFunction + ?Sized>(
    f: &F,
    b: &Rational,
    limits: &OracleLimits,
) -> Result<Rational, ShareError> {
    let values = subset_values(f, limits.aps_max_goods)?;
    let levels = distinct_levels(&values);
    let m = f.num_goods();
    let best = last_true(&levels, |z| aps_level_feasible(&values, m, b, z));
    Ok(levels[best].clone())
}

pub fn exact_aps(
    instance: &Instance,
    agent: usize,
    limits: &OracleLimits,
) -> Result<Rational, ShareError> {
    check_agent(instance, agent)?;
    aps_value(instance.valuation(agent), instance.entitlement(agent), limits)
}

fn truncated_values(values: &[Rational], z: &Rational) -> Vec<Rational> {
    values.iter().map(|v| rational::min(v, z)).collect()
}

/// APS as the largest level `z` at which the concave extension of `f↓z` at
/// `(b, ..., b)` equals `z`. Uses the same candidate levels as [`aps_value`].
pub fn aps_via_truncated_extension<F: SetFunction + ?Sized>(
    f: &F,
    b: &Rational,
    limits: &OracleLimits,
) -> Result<Rational, ShareError> {
    let values = subset_values(f, limits.aps_max_goods)?;
    let levels = distinct_levels(&values);
    let m = f.num_goods();
    let point = vec![b.clone(); m];
    // if the extension of f↓z reaches z, every support set is worth z, so the
    // same support certifies any smaller level: the predicate is down-closed
    let best = last_true(&levels, |z| {
        extension_from_values(&truncated_values(&values, z), m, &point).value == *z
    });
    Ok(levels[best].clone())
}

/// Optimal support of the truncated extension at the APS level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApsSupport {
    pub level: Rational,
    pub sets: Vec<(Vec<Good>, Rational)>,
}

pub fn support_sets_at_aps<F: SetFunction + ?Sized>(
    f: &F,
    b: &Rational,
    limits: &OracleLimits,
) -> Result<ApsSupport, ShareError> {
    let level = aps_value(f, b, limits)?;
    let values = subset_values(f, limits.aps_max_goods)?;
    let m = f.num_goods();
    let ext = extension_from_values(&truncated_values(&values, &level), m, &vec![b.clone(); m]);
    Ok(ApsSupport {
        level,
        sets: ext.support,
    })
}

// ---------------------------------------------------------------------------
// reports and verification

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct AgentShare {
    pub agent: usize,
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub mms: Option<Rational>,
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub aps: Option<Rational>,
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub mu: Option<Rational>,
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub achieved: Option<Rational>,
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub target: Option<Rational>,
    /// `achieved / target`; absent when the target is zero.
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ShareReport {
    /// Which ordering the `mms`/`aps`/`mu` columns are checked against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<String>,
    #[serde(with = "rational::serde_text_opt", skip_serializing_if = "Option::is_none")]
    pub factor: Option<Rational>,
    pub agents: Vec<AgentShare>,
}

pub const SHARE_ORDERING: &str = "mms <= aps <= mu";

impl ShareReport {
    pub fn all_pass(&self) -> bool {
        self.agents.iter().all(|a| a.pass.unwrap_or(true))
    }

    /// Minimum of `achieved / target` over agents with a positive target.
    pub fn worst_ratio(&self) -> Option<Rational> {
        self.agents.iter().filter_map(|a| a.ratio.clone()).min()
    }

    /// Agents whose reported shares break `mms <= aps <= mu`.
    pub fn ordering_violations(&self) -> Vec<usize> {
        self.agents
            .iter()
            .filter(|a| {
                let le = |x: &Option<Rational>, y: &Option<Rational>| match (x, y) {
                    (Some(x), Some(y)) => x <= y,
                    _ => true,
                };
                !(le(&a.mms, &a.aps) && le(&a.aps, &a.mu) && le(&a.mms, &a.mu))
            })
            .map(|a| a.agent)
            .collect()
    }
}

/// Which shares to compute in [`share_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShareSelection {
    pub mms: bool,
    pub aps: bool,
    pub mu: bool,
}

impl ShareSelection {
    pub const ALL: Self = Self {
        mms: true,
        aps: true,
        mu: true,
    };
}

/// The uniform bound for an SPLC agent (`None` for other families).
pub fn uniform_bound(instance: &Instance, agent: usize) -> Option<Rational> {
    instance
        .valuation(agent)
        .splc()
        .map(|s| extensions::mu_uniform(s, instance.agents()))
}

/// Exact shares per agent. MMS is skipped (left empty) on asymmetric
/// instances; size limits are reported as errors.
pub fn share_report(
    instance: &Instance,
    which: ShareSelection,
    limits: &OracleLimits,
) -> Result<ShareReport, ShareError> {
    let mut agents = Vec::with_capacity(instance.agents());
    for i in 0..instance.agents() {
        let mms = if which.mms && instance.is_symmetric() {
            Some(exact_mms(instance, i, limits)?)
        } else {
            None
        };
        let aps = if which.aps {
            Some(exact_aps(instance, i, limits)?)
        } else {
            None
        };
        let mu = if which.mu { uniform_bound(instance, i) } else { None };
        agents.push(AgentShare {
            agent: i,
            mms,
            aps,
            mu,
            ..AgentShare::default()
        });
    }
    Ok(ShareReport {
        ordering: Some(SHARE_ORDERING.to_string()),
        factor: None,
        agents,
    })
}

/// Checks `v_i(A_i) >= factor * target_i` for every agent, exactly.
pub fn verify(
    instance: &Instance,
    allocation: &Allocation,
    targets: &[Rational],
    factor: &Rational,
) -> Result<ShareReport, ModelError> {
    allocation.validate(instance)?;
    if targets.len() != instance.agents() {
        return Err(ModelError::Dimension(format!(
            "{} targets for {} agents",
            targets.len(),
            instance.agents()
        )));
    }
    let agents = allocation
        .values(instance)
        .into_iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (achieved, target))| {
            let pass = achieved >= factor * target;
            let ratio = target.is_positive().then(|| &achieved / target);
            AgentShare {
                agent: i,
                achieved: Some(achieved),
                target: Some(target.clone()),
                ratio,
                pass: Some(pass),
                ..AgentShare::default()
            }
        })
        .collect();
    Ok(ShareReport {
        ordering: None,
        factor: Some(factor.clone()),
        agents,
    })
}

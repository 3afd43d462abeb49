//! The share-feasibility and welfare programs over copy variables `x_{ijk}`,
//! plus fraction consolidation and the dual-price check.

use num_traits::{One, Signed, Zero};

use super::SplcError;
use crate::lp::{Bound, LinearProgram, LpSolution, Sense};
use crate::model::{FractionalAllocation, SplcValuation};
use crate::rational::{self, Rational};

/// Column layout of the copy variables: agent-major, then type, then copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyLayout {
    agents: usize,
    copies: Vec<usize>,
    offsets: Vec<usize>,
    per_agent: usize,
}

impl CopyLayout {
    pub fn new(agents: usize, copies: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(copies.len());
        let mut acc = 0;
        for &k in copies {
            offsets.push(acc);
            acc += k;
        }
        Self {
            agents,
            copies: copies.to_vec(),
            offsets,
            per_agent: acc,
        }
    }

    pub fn var(&self, agent: usize, ty: usize, copy: usize) -> usize {
        agent * self.per_agent + self.offsets[ty] + copy
    }

    pub fn vars(&self) -> usize {
        self.agents * self.per_agent
    }

    pub fn agent_row(&self, agent: usize) -> usize {
        agent
    }

    pub fn capacity_row(&self, ty: usize) -> usize {
        self.agents + ty
    }

    pub fn copies(&self) -> &[usize] {
        &self.copies
    }

    pub fn unpack(&self, primal: &[Rational]) -> FractionalAllocation {
        let mut x = FractionalAllocation::zeros(self.agents, &self.copies);
        for i in 0..self.agents {
            for (j, &k) in self.copies.iter().enumerate() {
                for c in 0..k {
                    x.x[i][j][c] = primal[self.var(i, j, c)].clone();
                }
            }
        }
        x
    }
}

pub(crate) fn shared_copies(valuations: &[SplcValuation]) -> Result<Vec<usize>, SplcError> {
    let copies = valuations
        .first()
        .map(SplcValuation::copy_counts)
        .unwrap_or_default();
    if valuations.iter().any(|v| v.copy_counts() != copies) {
        return Err(SplcError::Invalid(
            "agents do not share the same copy counts".into(),
        ));
    }
    Ok(copies)
}

/// Share rows `sum v_{ijk} x_{ijk} >= mu_i`, capacity rows `sum_{i,k} x_{ijk} <= k_j`,
/// and `0 <= x <= 1`, with a zero objective.
pub fn build_feasibility_lp(
    valuations: &[SplcValuation],
    mu: &[Rational],
) -> Result<LinearProgram, SplcError> {
    if mu.len() != valuations.len() {
        return Err(SplcError::Invalid(format!(
            "{} targets for {} agents",
            mu.len(),
            valuations.len()
        )));
    }
    let copies = shared_copies(valuations)?;
    let layout = CopyLayout::new(valuations.len(), &copies);
    let mut lp = LinearProgram::new(layout.vars());
    for var in 0..layout.vars() {
        lp.set_bound(var, Bound::unit());
    }
    for (i, v) in valuations.iter().enumerate() {
        let mut terms = Vec::new();
        for (j, &k) in copies.iter().enumerate() {
            for c in 0..k {
                terms.push((layout.var(i, j, c), v.marginal_value(j, c).clone()));
            }
        }
        lp.add_sparse(&terms, Sense::Ge, mu[i].clone());
    }
    for (j, &k) in copies.iter().enumerate() {
        let terms: Vec<(usize, Rational)> = (0..valuations.len())
            .flat_map(|i| (0..k).map(move |c| (i, c)))
            .map(|(i, c)| (layout.var(i, j, c), Rational::one()))
            .collect();
        lp.add_sparse(&terms, Sense::Le, rational::int(k as i64));
    }
    Ok(lp)
}

/// The feasibility program with objective `max sum v_{ijk} x_{ijk}`.
pub fn build_welfare_lp(
    valuations: &[SplcValuation],
    mu: &[Rational],
) -> Result<LinearProgram, SplcError> {
    let mut lp = build_feasibility_lp(valuations, mu)?;
    let copies = shared_copies(valuations)?;
    let layout = CopyLayout::new(valuations.len(), &copies);
    let mut objective = vec![Rational::zero(); layout.vars()];
    for (i, v) in valuations.iter().enumerate() {
        for (j, &k) in copies.iter().enumerate() {
            for c in 0..k {
                objective[layout.var(i, j, c)] = v.marginal_value(j, c).clone();
            }
        }
    }
    lp.set_objective(objective);
    Ok(lp)
}

/// Rewrites every `(agent, type)` row into prefix form `1, ..., 1, f, 0, ..., 0`
/// with the same total mass. Marginals are nonincreasing in the copy index,
/// so no agent's linear-extension value goes down.
pub fn consolidate_fractions(x: &FractionalAllocation) -> FractionalAllocation {
    let mut out = x.clone();
    for row in out.x.iter_mut() {
        for copies in row.iter_mut() {
            let mut mass: Rational = copies.iter().sum();
            for v in copies.iter_mut() {
                if mass >= Rational::one() {
                    *v = Rational::one();
                    mass -= Rational::one();
                } else {
                    *v = mass.clone();
                    mass = Rational::zero();
                }
            }
        }
    }
    out
}

/// The fractional copy `(copy, amount)` of a consolidated row, if any.
pub fn fractional_copy(copies: &[Rational]) -> Option<(usize, &Rational)> {
    copies
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_positive() && **v < Rational::one())
}

/// Drops fractional entries on copies the holder values at zero. Values do
/// not change and capacity only loosens.
pub fn clear_worthless_fractions(
    x: &FractionalAllocation,
    valuations: &[SplcValuation],
) -> FractionalAllocation {
    let mut out = x.clone();
    for (i, row) in out.x.iter_mut().enumerate() {
        for (j, copies) in row.iter_mut().enumerate() {
            if let Some((c, _)) = fractional_copy(copies) {
                if valuations[i].marginal_value(j, c).is_zero() {
                    copies[c] = Rational::zero();
                }
            }
        }
    }
    out
}

/// Dual prices of the welfare program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prices {
    /// Capacity-row duals `p_j >= 0`.
    pub p: Vec<Rational>,
    /// Share-row multipliers `beta_i >= 0` (negated duals of the `>=` rows).
    pub beta: Vec<Rational>,
}

/// Reads `p` and `beta` from an optimal welfare-program solution and checks,
/// for the consolidated `x`, that every fractionally held copy satisfies
/// `v_{ijr} (1 + beta_i) = p_j` with `p_j > 0`. Equivalently, for each agent
/// the value-to-price ratio of its last fractional copy is `1 / (1 + beta_i)`
/// on every type it holds fractionally.
pub fn extract_duals_and_check_mbb(
    solution: &LpSolution,
    valuations: &[SplcValuation],
    x: &FractionalAllocation,
) -> Result<Prices, SplcError> {
    if !solution.is_optimal() {
        return Err(SplcError::Invariant(
            "dual prices requested from a non-optimal solution".into(),
        ));
    }
    let n = valuations.len();
    let copies = shared_copies(valuations)?;
    let layout = CopyLayout::new(n, &copies);
    let beta: Vec<Rational> = (0..n)
        .map(|i| -solution.duals[layout.agent_row(i)].clone())
        .collect();
    let p: Vec<Rational> = (0..copies.len())
        .map(|j| solution.duals[layout.capacity_row(j)].clone())
        .collect();
    if let Some(i) = beta.iter().position(Signed::is_negative) {
        return Err(SplcError::Invariant(format!("share multiplier of agent {i} is negative")));
    }
    for (i, row) in x.x.iter().enumerate() {
        let mut ratio: Option<Rational> = None;
        for (j, held) in row.iter().enumerate() {
            let Some((c, _)) = fractional_copy(held) else {
                continue;
            };
            if !p[j].is_positive() {
                return Err(SplcError::Invariant(format!(
                    "type {j} is fractionally held by agent {i} but has price {}",
                    rational::format(&p[j])
                )));
            }
            let r = valuations[i].marginal_value(j, c) / &p[j];
            if &r * (Rational::one() + &beta[i]) != Rational::one() {
                return Err(SplcError::Invariant(format!(
                    "agent {i}, type {j}: value/price differs from 1/(1+beta)"
                )));
            }
            match &ratio {
                None => ratio = Some(r),
                Some(prev) if *prev != r => {
                    return Err(SplcError::Invariant(format!(
                        "agent {i}: unequal bang-per-buck across fractional types"
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(Prices { p, beta })
}

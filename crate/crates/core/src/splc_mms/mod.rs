//! Half-MMS allocations for symmetric SPLC instances: single-good
//! reductions, then the welfare program, consolidation, dual prices, cycle
//! cancellation and forest rounding on what is left.

mod graph;
mod programs;

pub use graph::{
    cancel_cycles, reprice_to_allocation, round_forest, Cancellation, PriceEdge, PriceGraph,
    RoundedTree, Rounding,
};
pub use programs::{
    build_feasibility_lp, build_welfare_lp, clear_worthless_fractions, consolidate_fractions,
    extract_duals_and_check_mbb, fractional_copy, CopyLayout, Prices,
};

use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::extensions::mu_uniform;
use crate::lp::{self, Status};
use crate::model::{Allocation, FractionalAllocation, Instance, ModelError, SplcValuation};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplcError {
    #[error("instance is not SPLC")]
    NotSplc,
    #[error("entitlements are not symmetric")]
    NotSymmetric,
    #[error("targets are infeasible for the remaining agents {agents:?}")]
    InfeasibleTargets { agents: Vec<usize> },
    #[error("{0}")]
    Invalid(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How targets evolve as agents retire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetRule {
    /// The uniform bound, recomputed on every reduced instance.
    Uniform,
    /// Caller-supplied targets, held fixed.
    Fixed(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ReductionStep {
    /// An agent with a zero target leaves with nothing.
    ZeroTarget { agent: usize },
    /// An agent takes one copy worth at least half its current target.
    SingleGood {
        agent: usize,
        ty: usize,
        #[serde(with = "rational::serde_text")]
        value: Rational,
        #[serde(with = "rational::serde_text")]
        target: Rational,
        /// Targets of the agents still active after this step.
        #[serde(with = "rational::serde_text_vec")]
        next_targets: Vec<Rational>,
    },
}

/// Every intermediate object of the fractional phase, indexed by residue
/// agent (see `agents` for the original indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueTrace {
    pub agents: Vec<usize>,
    pub copies: Vec<usize>,
    #[serde(with = "rational::serde_text_vec")]
    pub targets: Vec<Rational>,
    /// Whether the feasibility program accepted `targets`.
    pub feasible: bool,
    pub lp_status: Status,
    /// Whether the welfare optimum passed the exact optimality certificate.
    pub lp_certified: bool,
    #[serde(with = "rational::serde_text")]
    pub lp_objective: Rational,
    #[serde(serialize_with = "fractional_text")]
    pub x_lp: FractionalAllocation,
    #[serde(serialize_with = "fractional_text")]
    pub x_consolidated: FractionalAllocation,
    #[serde(with = "rational::serde_text_vec")]
    pub prices: Vec<Rational>,
    #[serde(with = "rational::serde_text_vec")]
    pub beta: Vec<Rational>,
    pub graph_before: PriceGraph,
    pub cancellations: Vec<Cancellation>,
    pub graph_after: PriceGraph,
    #[serde(serialize_with = "fractional_text")]
    pub x_repriced: FractionalAllocation,
    pub rounding: Rounding,
    /// Linear-extension values at each stage.
    #[serde(with = "rational::serde_text_vec")]
    pub values_lp: Vec<Rational>,
    #[serde(with = "rational::serde_text_vec")]
    pub values_consolidated: Vec<Rational>,
    #[serde(with = "rational::serde_text_vec")]
    pub values_repriced: Vec<Rational>,
    #[serde(with = "rational::serde_text_vec")]
    pub values_rounded: Vec<Rational>,
    /// Largest marginal per residue agent.
    #[serde(with = "rational::serde_text_vec")]
    pub max_marginals: Vec<Rational>,
    /// Residue valuations (reduced copy counts), kept for re-checking.
    #[serde(skip)]
    pub valuations: Vec<SplcValuation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineTrace {
    pub rule: &'static str,
    #[serde(with = "rational::serde_text_vec")]
    pub initial_targets: Vec<Rational>,
    pub steps: Vec<ReductionStep>,
    pub residue: Option<ResidueTrace>,
    /// Target each agent was guaranteed half of: at retirement, or in the residue.
    #[serde(with = "rational::serde_text_vec")]
    pub final_targets: Vec<Rational>,
    pub counts: Vec<Vec<usize>>,
    #[serde(with = "rational::serde_text_vec")]
    pub values: Vec<Rational>,
}

impl PipelineTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

fn fractional_text<S: Serializer>(x: &FractionalAllocation, s: S) -> Result<S::Ok, S::Error> {
    let text: Vec<Vec<Vec<String>>> = x
        .x
        .iter()
        .map(|row| row.iter().map(|c| c.iter().map(rational::format).collect()).collect())
        .collect();
    text.serialize(s)
}

fn splc_agents(instance: &Instance) -> Result<Vec<SplcValuation>, SplcError> {
    if !instance.is_symmetric() {
        return Err(SplcError::NotSymmetric);
    }
    instance
        .splc_valuations()
        .map(|v| v.into_iter().cloned().collect())
        .ok_or(SplcError::NotSplc)
}

/// The valuation seen over only the first `remaining[j]` copies of each type.
fn restrict(v: &SplcValuation, remaining: &[usize]) -> SplcValuation {
    let rows = v
        .rows()
        .iter()
        .zip(remaining)
        .map(|(row, &c)| row[..c].to_vec())
        .collect();
    SplcValuation::new(rows).expect("a prefix of a concave row is concave")
}

/// Half of the uniform bound for every agent of a symmetric SPLC instance.
pub fn solve_half_mms(instance: &Instance) -> Result<(Allocation, PipelineTrace), SplcError> {
    run(instance, TargetRule::Uniform)
}

/// The same pipeline with caller-supplied targets held fixed through the
/// single-good phase. Targets equal to the uniform bound select the uniform
/// rule, so the result matches [`solve_half_mms`]. Targets the remaining
/// agents cannot jointly reach come back as [`SplcError::InfeasibleTargets`].
pub fn solve_half_mms_given_targets(
    instance: &Instance,
    targets: &[Rational],
) -> Result<(Allocation, PipelineTrace), SplcError> {
    let valuations = splc_agents(instance)?;
    if targets.len() != valuations.len() {
        return Err(SplcError::Invalid(format!(
            "{} targets for {} agents",
            targets.len(),
            valuations.len()
        )));
    }
    let n = valuations.len();
    if valuations
        .iter()
        .zip(targets)
        .all(|(v, t)| mu_uniform(v, n) == *t)
    {
        return run(instance, TargetRule::Uniform);
    }
    run(instance, TargetRule::Fixed(targets.to_vec()))
}

fn current_targets(
    rule: &TargetRule,
    valuations: &[SplcValuation],
    active: &[usize],
    remaining: &[usize],
) -> Vec<Rational> {
    match rule {
        TargetRule::Uniform => active
            .iter()
            .map(|&i| mu_uniform(&restrict(&valuations[i], remaining), active.len()))
            .collect(),
        TargetRule::Fixed(t) => active.iter().map(|&i| t[i].clone()).collect(),
    }
}

/// Runs the pipeline under `rule`.
pub fn run(instance: &Instance, rule: TargetRule) -> Result<(Allocation, PipelineTrace), SplcError> {
    let valuations = splc_agents(instance)?;
    let n = valuations.len();
    if let TargetRule::Fixed(t) = &rule {
        if t.len() != n {
            return Err(SplcError::Invalid(format!("{} targets for {n} agents", t.len())));
        }
        if t.iter().any(|v| v < &Rational::zero()) {
            return Err(SplcError::Invalid("targets must be nonnegative".into()));
        }
    }
    let copies = valuations.first().map(SplcValuation::copy_counts).unwrap_or_default();
    let types = copies.len();
    let mut remaining = copies.clone();
    let mut active: Vec<usize> = (0..n).collect();
    let mut counts = vec![vec![0usize; types]; n];
    let mut final_targets = vec![Rational::zero(); n];
    let mut steps = Vec::new();

    let initial_targets = current_targets(&rule, &valuations, &active, &remaining);
    let mut targets = initial_targets.clone();
    loop {
        if let Some(pos) = targets.iter().position(Rational::is_zero) {
            let agent = active.remove(pos);
            targets.remove(pos);
            steps.push(ReductionStep::ZeroTarget { agent });
            continue;
        }
        let pick = active.iter().enumerate().find_map(|(pos, &i)| {
            (0..types)
                .find(|&j| {
                    remaining[j] > 0
                        && valuations[i].marginal_value(j, 0) * rational::int(2) >= targets[pos]
                })
                .map(|j| (pos, j))
        });
        let Some((pos, ty)) = pick else { break };
        let agent = active.remove(pos);
        let target = targets.remove(pos);
        counts[agent][ty] = 1;
        remaining[ty] -= 1;
        final_targets[agent] = target.clone();
        targets = current_targets(&rule, &valuations, &active, &remaining);
        steps.push(ReductionStep::SingleGood {
            agent,
            ty,
            value: valuations[agent].marginal_value(ty, 0).clone(),
            target,
            next_targets: targets.clone(),
        });
    }

    let residue = if active.is_empty() {
        None
    } else {
        let reduced: Vec<SplcValuation> = active
            .iter()
            .map(|&i| restrict(&valuations[i], &remaining))
            .collect();
        let trace = fractional_phase(&reduced, &remaining, &targets, &active, &rule)?;
        for (pos, &i) in active.iter().enumerate() {
            for (j, &c) in trace.rounding.counts[pos].iter().enumerate() {
                counts[i][j] += c;
            }
            final_targets[i] = targets[pos].clone();
        }
        Some(trace)
    };

    // copies of each type are handed out in agent order over the full range
    let layout = &valuations[0];
    let allocation = Allocation::from_counts(layout, &counts)?;
    let values: Vec<Rational> = (0..n).map(|i| valuations[i].value_of_counts(&counts[i])).collect();
    for i in 0..n {
        if &values[i] * rational::int(2) < final_targets[i] {
            return Err(SplcError::Invariant(format!(
                "agent {i} ends below half its target"
            )));
        }
    }
    let trace = PipelineTrace {
        rule: match rule {
            TargetRule::Uniform => "uniform",
            TargetRule::Fixed(_) => "fixed",
        },
        initial_targets,
        steps,
        residue,
        final_targets,
        counts,
        values,
    };
    Ok((allocation, trace))
}

fn linear_values(valuations: &[SplcValuation], x: &FractionalAllocation) -> Vec<Rational> {
    valuations
        .iter()
        .zip(&x.x)
        .map(|(v, row)| v.linear_extension_value(row).expect("shapes match"))
        .collect()
}

fn fractional_phase(
    valuations: &[SplcValuation],
    copies: &[usize],
    targets: &[Rational],
    agents: &[usize],
    rule: &TargetRule,
) -> Result<ResidueTrace, SplcError> {
    let feasible = lp::check_feasibility(&build_feasibility_lp(valuations, targets)?);
    let program = build_welfare_lp(valuations, targets)?;
    let solution = lp::solve(&program);
    match solution.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(match rule {
                TargetRule::Uniform => SplcError::Invariant(
                    "the uniform targets are infeasible on a reduced instance".into(),
                ),
                TargetRule::Fixed(_) => SplcError::InfeasibleTargets {
                    agents: agents.to_vec(),
                },
            })
        }
        Status::Unbounded => {
            return Err(SplcError::Invariant("welfare program is unbounded".into()))
        }
    }
    if !feasible {
        return Err(SplcError::Invariant(
            "feasibility and welfare programs disagree".into(),
        ));
    }
    let lp_certified = lp::certify(&program, &solution).is_ok();
    let layout = CopyLayout::new(valuations.len(), copies);
    let x_lp = layout.unpack(&solution.primal);
    let x_consolidated =
        clear_worthless_fractions(&consolidate_fractions(&x_lp), valuations);
    let values_lp = linear_values(valuations, &x_lp);
    let values_consolidated = linear_values(valuations, &x_consolidated);
    if values_consolidated.iter().zip(&values_lp).any(|(a, b)| a < b) {
        return Err(SplcError::Invariant("consolidation lowered a value".into()));
    }
    let prices = extract_duals_and_check_mbb(&solution, valuations, &x_consolidated)?;
    let graph_before = PriceGraph::new(&x_consolidated, &prices.p)?;
    let (graph_after, cancellations) = cancel_cycles(&graph_before);
    if graph_after.agent_sums() != graph_before.agent_sums()
        || graph_after.type_sums() != graph_before.type_sums()
    {
        return Err(SplcError::Invariant("cycle cancellation moved node sums".into()));
    }
    let x_repriced = reprice_to_allocation(&graph_after, &x_consolidated);
    let values_repriced = linear_values(valuations, &x_repriced);
    if values_repriced != values_consolidated {
        return Err(SplcError::Invariant("repricing changed a value".into()));
    }
    x_repriced.validate(copies)?;
    let rounding = round_forest(&x_repriced, copies)?;
    let values_rounded: Vec<Rational> = valuations
        .iter()
        .zip(&rounding.counts)
        .map(|(v, c)| v.value_of_counts(c))
        .collect();
    let max_marginals: Vec<Rational> = valuations.iter().map(SplcValuation::max_marginal).collect();
    for (i, v) in values_rounded.iter().enumerate() {
        if v + &max_marginals[i] < values_repriced[i] {
            return Err(SplcError::Invariant(format!(
                "rounding cost agent {i} more than one copy"
            )));
        }
    }
    Ok(ResidueTrace {
        agents: agents.to_vec(),
        copies: copies.to_vec(),
        targets: targets.to_vec(),
        feasible,
        lp_status: solution.status,
        lp_certified,
        lp_objective: solution.objective.clone(),
        x_lp,
        x_consolidated,
        prices: prices.p,
        beta: prices.beta,
        graph_before,
        cancellations,
        graph_after,
        x_repriced,
        rounding,
        values_lp,
        values_consolidated,
        values_repriced,
        values_rounded,
        max_marginals,
        valuations: valuations.to_vec(),
    })
}

//! Instances, valuation families, allocations and their JSON documents.
//!
//! Goods are addressed by a flat index. For SPLC instances the universe is the
//! list of all copies, type by type: copies of type `j` occupy the index range
//! `offset(j)..offset(j) + k_j`. Copies of one type are interchangeable, so an
//! SPLC bundle's value depends only on its per-type copy counts.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

pub type Good = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("good index {good} out of range (universe has {goods} goods)")]
    GoodOutOfRange { good: Good, goods: usize },
    #[error("good {0} listed twice in one bundle")]
    DuplicateGood(Good),
    #[error("good {good} already in the bundle")]
    AlreadyHeld { good: Good },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// A set function over goods `0..num_goods()`.
///
/// `eval` assumes its argument holds distinct in-range indices; use
/// [`value`] for checked evaluation.
pub trait SetFunction {
    fn num_goods(&self) -> usize;

    fn eval(&self, goods: &[Good]) -> Rational;

    /// The SPLC structure behind this function, when it has one.
    fn as_splc(&self) -> Option<&SplcValuation> {
        None
    }

    fn eval_all(&self) -> Rational {
        let all: Vec<Good> = (0..self.num_goods()).collect();
        self.eval(&all)
    }

    fn eval_mask(&self, mask: u64) -> Rational {
        self.eval(&mask_to_goods(mask, self.num_goods()))
    }
}

pub fn mask_to_goods(mask: u64, goods: usize) -> Vec<Good> {
    (0..goods).filter(|g| mask >> g & 1 == 1).collect()
}

impl<T: SetFunction + ?Sized> SetFunction for &T {
    fn num_goods(&self) -> usize {
        (**self).num_goods()
    }
    fn eval(&self, goods: &[Good]) -> Rational {
        (**self).eval(goods)
    }
    fn as_splc(&self) -> Option<&SplcValuation> {
        (**self).as_splc()
    }
}

fn check_bundle(goods: usize, bundle: &[Good]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for &g in bundle {
        if g >= goods {
            return Err(ModelError::GoodOutOfRange { good: g, goods });
        }
        if !seen.insert(g) {
            return Err(ModelError::DuplicateGood(g));
        }
    }
    Ok(())
}

/// Checked evaluation of `f(bundle)`.
pub fn value<F: SetFunction + ?Sized>(f: &F, bundle: &[Good]) -> Result<Rational, ModelError> {
    check_bundle(f.num_goods(), bundle)?;
    Ok(f.eval(bundle))
}

/// `f(bundle + good) - f(bundle)`.
pub fn marginal<F: SetFunction + ?Sized>(
    f: &F,
    good: Good,
    bundle: &[Good],
) -> Result<Rational, ModelError> {
    check_bundle(f.num_goods(), bundle)?;
    if good >= f.num_goods() {
        return Err(ModelError::GoodOutOfRange {
            good,
            goods: f.num_goods(),
        });
    }
    if bundle.contains(&good) {
        return Err(ModelError::AlreadyHeld { good });
    }
    let mut with = bundle.to_vec();
    with.push(good);
    Ok(f.eval(&with) - f.eval(bundle))
}

/// Separable piecewise-linear concave valuation: per type `j`, a nonincreasing
/// list of marginal values `v_{j,1} >= v_{j,2} >= ...`, one per copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplcValuation {
    values: Vec<Vec<Rational>>,
    offsets: Vec<usize>,
}

impl SplcValuation {
    /// Builds from per-type marginal lists. A type may have zero copies (an
    /// exhausted type in a reduced instance).
    pub fn new(values: Vec<Vec<Rational>>) -> Result<Self, ModelError> {
        for (j, row) in values.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                if v.is_negative() {
                    return Err(invalid(format!("values[{j}][{k}]"), "negative marginal"));
                }
                if k > 0 && row[k - 1] < *v {
                    return Err(invalid(format!("values[{j}][{k}]"), "concavity violated"));
                }
            }
        }
        let mut offsets = Vec::with_capacity(values.len() + 1);
        let mut acc = 0;
        for row in &values {
            offsets.push(acc);
            acc += row.len();
        }
        offsets.push(acc);
        Ok(Self { values, offsets })
    }

    pub fn types(&self) -> usize {
        self.values.len()
    }

    pub fn copies(&self, ty: usize) -> usize {
        self.values[ty].len()
    }

    pub fn copy_counts(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    pub fn total_copies(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn marginals(&self, ty: usize) -> &[Rational] {
        &self.values[ty]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.values
    }

    /// Marginal value of the `copy`-th copy (0-based) of type `ty`.
    pub fn marginal_value(&self, ty: usize, copy: usize) -> &Rational {
        &self.values[ty][copy]
    }

    /// Flat index of copy `copy` of type `ty`.
    pub fn good_index(&self, ty: usize, copy: usize) -> Good {
        self.offsets[ty] + copy
    }

    pub fn type_of(&self, good: Good) -> usize {
        // offsets is nondecreasing; the last offset <= good identifies the type
        self.offsets.partition_point(|&o| o <= good) - 1
    }

    pub fn value_of_counts(&self, counts: &[usize]) -> Rational {
        self.values
            .iter()
            .zip(counts)
            .flat_map(|(row, &c)| row.iter().take(c))
            .sum()
    }

    pub fn counts_of(&self, goods: &[Good]) -> Vec<usize> {
        let mut counts = vec![0; self.types()];
        for &g in goods {
            counts[self.type_of(g)] += 1;
        }
        counts
    }

    /// Largest marginal over all types and copies.
    pub fn max_marginal(&self) -> Rational {
        self.values
            .iter()
            .filter_map(|row| row.first())
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// The same valuation with one copy of `ty` removed (its last marginal dropped).
    pub fn without_copy(&self, ty: usize) -> Self {
        let mut values = self.values.clone();
        values[ty].pop();
        Self::new(values).expect("removing a copy keeps concavity")
    }

    pub fn scaled(&self, alpha: &Rational) -> Self {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| v * alpha).collect())
            .collect();
        Self::new(values).expect("nonnegative scaling keeps concavity")
    }

    /// Linear extension `sum_j sum_k v_{jk} x_{jk}` of a fractional row indexed `[type][copy]`.
    pub fn linear_extension_value(&self, x: &[Vec<Rational>]) -> Result<Rational, ModelError> {
        if x.len() != self.types() {
            return Err(ModelError::Dimension(format!(
                "{} types in x, valuation has {}",
                x.len(),
                self.types()
            )));
        }
        let mut total = Rational::zero();
        for (j, row) in x.iter().enumerate() {
            if row.len() != self.copies(j) {
                return Err(ModelError::Dimension(format!(
                    "type {j}: {} copies in x, valuation has {}",
                    row.len(),
                    self.copies(j)
                )));
            }
            for (v, xv) in self.values[j].iter().zip(row) {
                total += v * xv;
            }
        }
        Ok(total)
    }
}

impl SetFunction for SplcValuation {
    fn num_goods(&self) -> usize {
        self.total_copies()
    }

    fn eval(&self, goods: &[Good]) -> Rational {
        self.value_of_counts(&self.counts_of(goods))
    }

    fn as_splc(&self) -> Option<&SplcValuation> {
        Some(self)
    }
}

/// A valuation in one of the supported families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValuationSpec {
    Additive(Vec<Rational>),
    Splc(SplcValuation),
    TruncatedAdditive { weights: Vec<Rational>, cap: Rational },
    /// `sets[g]` lists the universe elements good `g` covers.
    Coverage {
        sets: Vec<Vec<usize>>,
        universe_weights: Vec<Rational>,
    },
}

impl ValuationSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Additive(_) => "additive",
            Self::Splc(_) => "splc",
            Self::TruncatedAdditive { .. } => "truncated_additive",
            Self::Coverage { .. } => "coverage",
        }
    }

    pub fn splc(&self) -> Option<&SplcValuation> {
        match self {
            Self::Splc(s) => Some(s),
            _ => None,
        }
    }

    /// The same family with good `g` removed and later indices shifted down.
    pub fn without_good(&self, g: Good) -> Self {
        let drop = |w: &[Rational]| -> Vec<Rational> {
            w.iter()
                .enumerate()
                .filter(|(i, _)| *i != g)
                .map(|(_, v)| v.clone())
                .collect()
        };
        match self {
            Self::Additive(w) => Self::Additive(drop(w)),
            Self::Splc(s) => Self::Splc(s.without_copy(s.type_of(g))),
            Self::TruncatedAdditive { weights, cap } => Self::TruncatedAdditive {
                weights: drop(weights),
                cap: cap.clone(),
            },
            Self::Coverage {
                sets,
                universe_weights,
            } => Self::Coverage {
                sets: sets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != g)
                    .map(|(_, s)| s.clone())
                    .collect(),
                universe_weights: universe_weights.clone(),
            },
        }
    }

    fn validate(&self, path: &str) -> Result<(), ModelError> {
        let nonneg = |w: &[Rational], what: &str| -> Result<(), ModelError> {
            match w.iter().position(|v| v.is_negative()) {
                Some(i) => Err(invalid(format!("{path}.{what}[{i}]"), "negative value")),
                None => Ok(()),
            }
        };
        match self {
            Self::Additive(w) => nonneg(w, "weights"),
            Self::Splc(_) => Ok(()),
            Self::TruncatedAdditive { weights, cap } => {
                nonneg(weights, "weights")?;
                if cap.is_negative() {
                    return Err(invalid(format!("{path}.cap"), "negative cap"));
                }
                Ok(())
            }
            Self::Coverage {
                sets,
                universe_weights,
            } => {
                nonneg(universe_weights, "universe_weights")?;
                for (g, set) in sets.iter().enumerate() {
                    if let Some(e) = set.iter().find(|&&e| e >= universe_weights.len()) {
                        return Err(invalid(
                            format!("{path}.sets[{g}]"),
                            format!("element {e} outside universe of {}", universe_weights.len()),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

impl SetFunction for ValuationSpec {
    fn num_goods(&self) -> usize {
        match self {
            Self::Additive(w) => w.len(),
            Self::Splc(s) => s.total_copies(),
            Self::TruncatedAdditive { weights, .. } => weights.len(),
            Self::Coverage { sets, .. } => sets.len(),
        }
    }

    fn eval(&self, goods: &[Good]) -> Rational {
        match self {
            Self::Additive(w) => goods.iter().map(|&g| &w[g]).sum(),
            Self::Splc(s) => s.eval(goods),
            Self::TruncatedAdditive { weights, cap } => {
                let total: Rational = goods.iter().map(|&g| &weights[g]).sum();
                rational::min(&total, cap)
            }
            Self::Coverage {
                sets,
                universe_weights,
            } => {
                let covered: BTreeSet<usize> =
                    goods.iter().flat_map(|&g| sets[g].iter().copied()).collect();
                covered.iter().map(|&e| &universe_weights[e]).sum()
            }
        }
    }

    fn as_splc(&self) -> Option<&SplcValuation> {
        self.splc()
    }
}

/// The good universe shared by all agents of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Universe {
    /// SPLC: `k_j` copies of each of `t` types.
    Copies(Vec<usize>),
    /// `m` distinct goods.
    Goods(usize),
}

impl Universe {
    pub fn num_goods(&self) -> usize {
        match self {
            Self::Copies(k) => k.iter().sum(),
            Self::Goods(m) => *m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    entitlements: Vec<Rational>,
    valuations: Vec<ValuationSpec>,
    universe: Universe,
}

impl Instance {
    pub fn new(
        entitlements: Vec<Rational>,
        valuations: Vec<ValuationSpec>,
    ) -> Result<Self, ModelError> {
        if valuations.is_empty() {
            return Err(invalid("agents", "at least one agent required"));
        }
        if entitlements.len() != valuations.len() {
            return Err(invalid(
                "entitlements",
                format!(
                    "{} entitlements for {} agents",
                    entitlements.len(),
                    valuations.len()
                ),
            ));
        }
        if let Some(i) = entitlements.iter().position(|b| !b.is_positive()) {
            return Err(invalid(format!("entitlements[{i}]"), "entitlement must be > 0"));
        }
        let total: Rational = entitlements.iter().sum();
        if total != rational::one() {
            return Err(invalid(
                "entitlements",
                format!("entitlements sum ≠ 1 (sum is {})", rational::format(&total)),
            ));
        }
        let universe = match &valuations[0] {
            ValuationSpec::Splc(s) => Universe::Copies(s.copy_counts()),
            other => Universe::Goods(other.num_goods()),
        };
        for (i, v) in valuations.iter().enumerate() {
            let path = format!("valuations[{i}]");
            v.validate(&path)?;
            let same = match (&universe, v) {
                (Universe::Copies(k), ValuationSpec::Splc(s)) => *k == s.copy_counts(),
                (Universe::Goods(m), other) if other.splc().is_none() => *m == other.num_goods(),
                _ => false,
            };
            if !same {
                return Err(invalid(path, "agents do not share the same good universe"));
            }
        }
        Ok(Self {
            entitlements,
            valuations,
            universe,
        })
    }

    /// Equal entitlements `1/n`.
    pub fn symmetric(valuations: Vec<ValuationSpec>) -> Result<Self, ModelError> {
        let n = valuations.len() as i64;
        Self::new(vec![rational::ratio(1, n.max(1)); valuations.len()], valuations)
    }

    pub fn agents(&self) -> usize {
        self.valuations.len()
    }

    pub fn entitlements(&self) -> &[Rational] {
        &self.entitlements
    }

    pub fn entitlement(&self, agent: usize) -> &Rational {
        &self.entitlements[agent]
    }

    pub fn valuations(&self) -> &[ValuationSpec] {
        &self.valuations
    }

    pub fn valuation(&self, agent: usize) -> &ValuationSpec {
        &self.valuations[agent]
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn num_goods(&self) -> usize {
        self.universe.num_goods()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entitlements.iter().all(|b| *b == self.entitlements[0])
    }

    pub fn is_splc(&self) -> bool {
        matches!(self.universe, Universe::Copies(_))
    }

    pub fn splc_valuations(&self) -> Option<Vec<&SplcValuation>> {
        self.valuations.iter().map(ValuationSpec::splc).collect()
    }

    pub fn family(&self) -> String {
        let mut kinds: Vec<&str> = self.valuations.iter().map(ValuationSpec::kind).collect();
        kinds.sort_unstable();
        kinds.dedup();
        kinds.join("+")
    }
}

/// An integral allocation: one bundle of good indices per agent. Goods left
/// out of every bundle are unallocated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    bundles: Vec<Vec<Good>>,
}

impl Allocation {
    pub fn new(mut bundles: Vec<Vec<Good>>) -> Self {
        for b in &mut bundles {
            b.sort_unstable();
        }
        Self { bundles }
    }

    pub fn empty(agents: usize) -> Self {
        Self {
            bundles: vec![Vec::new(); agents],
        }
    }

    /// Builds from per-agent SPLC copy counts, handing out copies of each type in agent order.
    pub fn from_counts(splc: &SplcValuation, counts: &[Vec<usize>]) -> Result<Self, ModelError> {
        let mut next = vec![0usize; splc.types()];
        let mut bundles = Vec::with_capacity(counts.len());
        for (i, row) in counts.iter().enumerate() {
            if row.len() != splc.types() {
                return Err(ModelError::Dimension(format!(
                    "bundle {i} has {} counts, instance has {} types",
                    row.len(),
                    splc.types()
                )));
            }
            let mut bundle = Vec::new();
            for (j, &c) in row.iter().enumerate() {
                if next[j] + c > splc.copies(j) {
                    return Err(invalid(
                        format!("bundles[{i}][{j}]"),
                        format!("type {j} over-allocated (only {} copies)", splc.copies(j)),
                    ));
                }
                bundle.extend((next[j]..next[j] + c).map(|k| splc.good_index(j, k)));
                next[j] += c;
            }
            bundles.push(bundle);
        }
        Ok(Self { bundles })
    }

    pub fn bundles(&self) -> &[Vec<Good>] {
        &self.bundles
    }

    pub fn bundle(&self, agent: usize) -> &[Good] {
        &self.bundles[agent]
    }

    pub fn agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn counts(&self, splc: &SplcValuation) -> Vec<Vec<usize>> {
        self.bundles.iter().map(|b| splc.counts_of(b)).collect()
    }

    /// Checks agent count, index range and disjointness against `instance`.
    pub fn validate(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.bundles.len() != instance.agents() {
            return Err(ModelError::Dimension(format!(
                "{} bundles for {} agents",
                self.bundles.len(),
                instance.agents()
            )));
        }
        let goods = instance.num_goods();
        let mut owner: Vec<Option<usize>> = vec![None; goods];
        for (i, bundle) in self.bundles.iter().enumerate() {
            for &g in bundle {
                if g >= goods {
                    return Err(ModelError::GoodOutOfRange { good: g, goods });
                }
                if let Some(prev) = owner[g] {
                    return Err(invalid(
                        format!("bundles[{i}]"),
                        format!("good {g} also assigned to agent {prev}"),
                    ));
                }
                owner[g] = Some(i);
            }
        }
        Ok(())
    }

    pub fn values(&self, instance: &Instance) -> Vec<Rational> {
        self.bundles
            .iter()
            .zip(instance.valuations())
            .map(|(b, v)| v.eval(b))
            .collect()
    }
}

/// Fractional SPLC allocation `x[agent][type][copy]` with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAllocation {
    pub x: Vec<Vec<Vec<Rational>>>,
}

impl FractionalAllocation {
    pub fn zeros(agents: usize, copies: &[usize]) -> Self {
        Self {
            x: vec![copies.iter().map(|&k| vec![Rational::zero(); k]).collect(); agents],
        }
    }

    pub fn agents(&self) -> usize {
        self.x.len()
    }

    /// Total mass `sum_k x[i][j][k]`.
    pub fn mass(&self, agent: usize, ty: usize) -> Rational {
        self.x[agent][ty].iter().sum()
    }

    pub fn type_mass(&self, ty: usize) -> Rational {
        (0..self.agents()).map(|i| self.mass(i, ty)).sum()
    }

    /// Checks entry bounds and per-type capacity.
    pub fn validate(&self, copies: &[usize]) -> Result<(), ModelError> {
        for (i, row) in self.x.iter().enumerate() {
            if row.len() != copies.len() {
                return Err(ModelError::Dimension(format!("agent {i}: wrong type count")));
            }
            for (j, xs) in row.iter().enumerate() {
                if xs.len() != copies[j] {
                    return Err(ModelError::Dimension(format!(
                        "agent {i}, type {j}: wrong copy count"
                    )));
                }
                if let Some(k) = xs
                    .iter()
                    .position(|v| v.is_negative() || *v > rational::one())
                {
                    return Err(invalid(format!("x[{i}][{j}][{k}]"), "entry outside [0, 1]"));
                }
            }
        }
        for (j, &k) in copies.iter().enumerate() {
            if self.type_mass(j) > rational::int(k as i64) {
                return Err(invalid(format!("type {j}"), "capacity exceeded"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON documents

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ValuationDoc {
    Splc {
        types: usize,
        copies: Vec<usize>,
        #[serde(with = "rational::serde_text_matrix")]
        values: Vec<Vec<Rational>>,
    },
    Additive {
        #[serde(with = "rational::serde_text_vec")]
        weights: Vec<Rational>,
    },
    TruncatedAdditive {
        #[serde(with = "rational::serde_text_vec")]
        weights: Vec<Rational>,
        #[serde(with = "rational::serde_text")]
        cap: Rational,
    },
    Coverage {
        sets: Vec<Vec<usize>>,
        #[serde(with = "rational::serde_text_vec")]
        universe_weights: Vec<Rational>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    agents: usize,
    #[serde(with = "rational::serde_text_vec")]
    entitlements: Vec<Rational>,
    valuations: Vec<ValuationDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationDoc {
    bundles: Vec<Vec<usize>>,
}

fn spec_from_doc(doc: ValuationDoc, path: &str) -> Result<ValuationSpec, ModelError> {
    Ok(match doc {
        ValuationDoc::Splc {
            types,
            copies,
            values,
        } => {
            if copies.len() != types || values.len() != types {
                return Err(invalid(
                    path,
                    format!(
                        "types = {types} but {} copy counts and {} value rows",
                        copies.len(),
                        values.len()
                    ),
                ));
            }
            for (j, (&k, row)) in copies.iter().zip(&values).enumerate() {
                if k == 0 {
                    return Err(invalid(format!("{path}.copies[{j}]"), "copy count must be positive"));
                }
                if row.len() != k {
                    return Err(invalid(
                        format!("{path}.values[{j}]"),
                        format!("{} values for {k} copies", row.len()),
                    ));
                }
            }
            let splc = SplcValuation::new(values).map_err(|e| match e {
                ModelError::Invalid { path: p, message } => invalid(format!("{path}.{p}"), message),
                other => other,
            })?;
            ValuationSpec::Splc(splc)
        }
        ValuationDoc::Additive { weights } => ValuationSpec::Additive(weights),
        ValuationDoc::TruncatedAdditive { weights, cap } => {
            ValuationSpec::TruncatedAdditive { weights, cap }
        }
        ValuationDoc::Coverage {
            sets,
            universe_weights,
        } => ValuationSpec::Coverage {
            sets,
            universe_weights,
        },
    })
}

fn spec_to_doc(spec: &ValuationSpec) -> ValuationDoc {
    match spec {
        ValuationSpec::Splc(s) => ValuationDoc::Splc {
            types: s.types(),
            copies: s.copy_counts(),
            values: s.rows().to_vec(),
        },
        ValuationSpec::Additive(w) => ValuationDoc::Additive { weights: w.clone() },
        ValuationSpec::TruncatedAdditive { weights, cap } => ValuationDoc::TruncatedAdditive {
            weights: weights.clone(),
            cap: cap.clone(),
        },
        ValuationSpec::Coverage {
            sets,
            universe_weights,
        } => ValuationDoc::Coverage {
            sets: sets.clone(),
            universe_weights: universe_weights.clone(),
        },
    }
}

pub fn parse_instance(bytes: &[u8]) -> Result<Instance, ModelError> {
    let doc: InstanceDoc =
        serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
    if doc.agents != doc.valuations.len() {
        return Err(invalid(
            "agents",
            format!("agents = {} but {} valuations", doc.agents, doc.valuations.len()),
        ));
    }
    let valuations = doc
        .valuations
        .into_iter()
        .enumerate()
        .map(|(i, v)| spec_from_doc(v, &format!("valuations[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Instance::new(doc.entitlements, valuations)
}

pub fn write_instance(instance: &Instance) -> Vec<u8> {
    let doc = InstanceDoc {
        agents: instance.agents(),
        entitlements: instance.entitlements().to_vec(),
        valuations: instance.valuations().iter().map(spec_to_doc).collect(),
    };
    serde_json::to_vec_pretty(&doc).expect("instance documents always serialize")
}

/// Parses an allocation document. SPLC instances use per-type copy counts,
/// other instances use good indices.
pub fn parse_allocation(bytes: &[u8], instance: &Instance) -> Result<Allocation, ModelError> {
    let doc: AllocationDoc =
        serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
    let allocation = match instance.valuation(0).splc() {
        Some(splc) => Allocation::from_counts(splc, &doc.bundles)?,
        None => Allocation::new(doc.bundles),
    };
    allocation.validate(instance)?;
    Ok(allocation)
}

pub fn write_allocation(allocation: &Allocation, instance: &Instance) -> Vec<u8> {
    let bundles = match instance.valuation(0).splc() {
        Some(splc) => allocation.counts(splc),
        None => allocation.bundles().to_vec(),
    };
    serde_json::to_vec(&AllocationDoc { bundles }).expect("allocation documents always serialize")
}

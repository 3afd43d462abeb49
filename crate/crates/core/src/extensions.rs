//! Truncation, scaling, the concave extension and the closed-form uniform bound.

use num_traits::{Signed, Zero};

use crate::lp::{self, LinearProgram, Sense, Status};
use crate::model::{mask_to_goods, Good, SetFunction, SplcValuation, ValuationSpec};
use crate::rational::{self, Rational};

/// Default cap on the number of goods for the `2^m`-column extension LP.
pub const DEFAULT_EXTENSION_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtensionError {
    #[error("capability limit: {goods} goods exceeds the enumeration limit of {limit}")]
    TooManyGoods { goods: usize, limit: usize },
    #[error("point has {got} coordinates, function has {expected} goods")]
    Dimension { got: usize, expected: usize },
    #[error("coordinate {0} lies outside [0, 1]")]
    OutOfRange(usize),
}

/// `f↓γ(S) = min(f(S), γ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncated<F = ValuationSpec> {
    base: F,
    cap: Rational,
}

impl<F> Truncated<F> {
    pub fn cap(&self) -> &Rational {
        &self.cap
    }

    pub fn base(&self) -> &F {
        &self.base
    }
}

impl<F: SetFunction> SetFunction for Truncated<F> {
    fn num_goods(&self) -> usize {
        self.base.num_goods()
    }

    fn eval(&self, goods: &[Good]) -> Rational {
        rational::min(&self.base.eval(goods), &self.cap)
    }
}

pub fn truncate<F: SetFunction>(base: F, cap: Rational) -> Truncated<F> {
    assert!(!cap.is_negative(), "truncation level must be >= 0");
    Truncated { base, cap }
}

/// Pointwise scaling by `alpha >= 0`, staying inside the valuation family.
pub fn scale(v: &ValuationSpec, alpha: &Rational) -> ValuationSpec {
    assert!(!alpha.is_negative(), "scale factor must be >= 0");
    let mul = |w: &[Rational]| -> Vec<Rational> { w.iter().map(|x| x * alpha).collect() };
    match v {
        ValuationSpec::Additive(w) => ValuationSpec::Additive(mul(w)),
        ValuationSpec::Splc(s) => ValuationSpec::Splc(s.scaled(alpha)),
        ValuationSpec::TruncatedAdditive { weights, cap } => ValuationSpec::TruncatedAdditive {
            weights: mul(weights),
            cap: cap * alpha,
        },
        ValuationSpec::Coverage {
            sets,
            universe_weights,
        } => ValuationSpec::Coverage {
            sets: sets.clone(),
            universe_weights: mul(universe_weights),
        },
    }
}

/// Optimal value of the concave-extension LP and a support achieving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcaveExtension {
    pub value: Rational,
    /// Sets with positive weight, as `(goods, weight)`, in increasing bitmask order.
    pub support: Vec<(Vec<Good>, Rational)>,
}

/// All `2^m` values of `f`, indexed by bitmask.
pub fn subset_values<F: SetFunction + ?Sized>(
    f: &F,
    limit: usize,
) -> Result<Vec<Rational>, ExtensionError> {
    let m = f.num_goods();
    if m > limit || m >= 63 {
        return Err(ExtensionError::TooManyGoods { goods: m, limit });
    }
    Ok((0..1u64 << m).map(|mask| f.eval_mask(mask)).collect())
}

/// `f^+(x) = max { sum_S f(S) a_S : sum_S a_S = 1, sum_{S∋i} a_S = x_i, a >= 0 }`.
pub fn concave_extension_value<F: SetFunction + ?Sized>(
    f: &F,
    x: &[Rational],
    limit: usize,
) -> Result<ConcaveExtension, ExtensionError> {
    let m = f.num_goods();
    if x.len() != m {
        return Err(ExtensionError::Dimension {
            got: x.len(),
            expected: m,
        });
    }
    if let Some(i) = x.iter().position(|v| v.is_negative() || *v > rational::one()) {
        return Err(ExtensionError::OutOfRange(i));
    }
    let values = subset_values(f, limit)?;
    Ok(extension_from_values(&values, m, x))
}

pub(crate) fn extension_from_values(values: &[Rational], m: usize, x: &[Rational]) -> ConcaveExtension {
    let columns = values.len();
    let mut lp = LinearProgram::new(columns);
    lp.set_objective(values.to_vec());
    lp.add_constraint(vec![rational::one(); columns], Sense::Eq, rational::one());
    for (i, xi) in x.iter().enumerate() {
        let row = (0..columns as u64)
            .map(|mask| {
                if mask >> i & 1 == 1 {
                    rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        lp.add_constraint(row, Sense::Eq, xi.clone());
    }
    let sol = lp::solve(&lp);
    // the product distribution of x is always feasible, and f is finite
    assert_eq!(sol.status, Status::Optimal, "extension LP is feasible and bounded");
    let support = sol
        .primal
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_positive())
        .map(|(mask, a)| (mask_to_goods(mask as u64, m), a.clone()))
        .collect();
    ConcaveExtension {
        value: sol.objective,
        support,
    }
}

/// Concave extension of an SPLC valuation at the uniform point `(1/n, ..., 1/n)`
/// in closed form: each type contributes its first `⌊k_j/n⌋` marginals in full
/// plus the fractional part `k_j/n - ⌊k_j/n⌋` of the next one.
pub fn mu_uniform(splc: &SplcValuation, n: usize) -> Rational {
    assert!(n >= 1, "at least one agent");
    let mut total = Rational::zero();
    for ty in 0..splc.types() {
        let k = splc.copies(ty);
        let whole = k / n;
        let marginals = splc.marginals(ty);
        total += marginals[..whole].iter().sum::<Rational>();
        let frac = rational::ratio((k % n) as i64, n as i64);
        if !frac.is_zero() {
            total += &marginals[whole] * frac;
        }
    }
    total
}

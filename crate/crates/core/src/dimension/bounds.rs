//! Closed-form dimension bounds for latent class models.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

use super::report::DimensionReport;

/// Largest number of observed variables for which all bipartitions are
/// enumerated.
pub const MAX_PAIRWISE_OBSERVED: usize = 20;

fn saturate(v: u128) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

/// Effective dimension of the LC model with hidden cardinality `x` over two
/// observed (possibly composite) variables of cardinalities `u1`, `u2`.
///
/// With `x <= min(u1, u2)` the model loses `x(x−1)` parameters to
/// unidentifiability; otherwise the hidden variable imposes no constraint
/// and the complete dimension `u1·u2 − 1` applies. At `x = min(u1, u2)` both
/// expressions agree.
pub fn two_var_effective_dim(x: u128, u1: u128, u2: u128) -> u128 {
    if x <= u1.min(u2) {
        let standard = (x - 1) + x * (u1 - 1) + x * (u2 - 1);
        standard - x * (x - 1)
    } else {
        u1 * u2 - 1
    }
}

/// A split of the observed variables (indices into the observed list) into
/// two nonempty groups. `left` always contains observed index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bipartition {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub left_card: u128,
    pub right_card: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairwiseBound {
    pub value: usize,
    /// Minimizing split; ties go to the lexicographically first `left`.
    pub bipartition: Bipartition,
    /// The minimum came from the complete-model branch (no split has
    /// `|X| < min(|U1|, |U2|)` with a smaller value).
    pub from_complete: bool,
}

fn require_lc(model: &ModelSpec) -> Result<(usize, Vec<usize>)> {
    if !model.is_latent_class() {
        return Err(Error::NotLatentClass);
    }
    Ok((model.hidden_cards()[0], model.observed_cards()))
}

/// Pairwise bound: the smallest effective dimension of a two-observed LC
/// model obtained by grouping the observed variables into two composites.
pub fn pairwise_bound_dp(model: &ModelSpec) -> Result<PairwiseBound> {
    let (x, cards) = require_lc(model)?;
    let n = cards.len();
    if n > MAX_PAIRWISE_OBSERVED {
        return Err(Error::TooManyObserved(n));
    }
    if n < 2 {
        return Err(Error::NotLatentClass);
    }
    let x = x as u128;
    let dc = model.complete_dimension();
    let mut best: Option<(usize, Vec<usize>, bool, u128, u128)> = None;
    // observed 0 is always on the left; enumerate subsets of the rest
    // except the full set
    for mask in 0u64..(1u64 << (n - 1)) - 1 {
        let left: Vec<usize> = std::iter::once(0)
            .chain((1..n).filter(|&i| mask >> (i - 1) & 1 == 1))
            .collect();
        let u1: u128 = left.iter().map(|&i| cards[i] as u128).product();
        let u2: u128 = (0..n)
            .filter(|i| !left.contains(i))
            .map(|i| cards[i] as u128)
            .product();
        let (value, complete) = if x < u1.min(u2) {
            (saturate(two_var_effective_dim(x, u1, u2)), false)
        } else {
            (dc, true)
        };
        let better = match &best {
            None => true,
            Some((bv, bl, ..)) => value < *bv || (value == *bv && left < *bl),
        };
        if better {
            best = Some((value, left, complete, u1, u2));
        }
    }
    let (value, left, from_complete, left_card, right_card) =
        best.expect("n >= 2 gives at least one bipartition");
    let right = (0..n).filter(|i| !left.contains(i)).collect();
    Ok(PairwiseBound {
        value,
        bipartition: Bipartition {
            left,
            right,
            left_card,
            right_card,
        },
        from_complete,
    })
}

/// The two LC models whose effective dimension is one below the combined
/// bound: `3:2,2,2,2` and `4:3,3,3` (up to permutation of observed
/// variables).
pub fn is_known_exception(model: &ModelSpec) -> bool {
    if !model.is_latent_class() {
        return false;
    }
    let mut obs = model.observed_cards();
    obs.sort_unstable();
    matches!(
        (model.hidden_cards()[0], obs.as_slice()),
        (3, [2, 2, 2, 2]) | (4, [3, 3, 3])
    )
}

/// Combined bound `db = min(ds, dc, dp)` for an LC model.
pub fn bound_db(model: &ModelSpec) -> Result<DimensionReport> {
    let dp = pairwise_bound_dp(model)?;
    let ds = model.standard_dimension();
    let dc = model.complete_dimension();
    Ok(DimensionReport {
        model: model.describe(),
        ds,
        dc,
        dp: Some(dp.value),
        db: ds.min(dc).min(dp.value),
        de_numeric: None,
        de_decomposed: None,
        corrections: Vec::new(),
        known_exception: is_known_exception(model),
        regularized_from: None,
    })
}

/// Effective dimension implied by the bound alone: `db`, less one for the
/// two known exceptions.
pub fn bound_effective_dim(model: &ModelSpec) -> Result<usize> {
    let r = bound_db(model)?;
    Ok(if r.known_exception { r.db - 1 } else { r.db })
}

/// Sufficient condition for `ds < dp` and `ds < dc`, so that `db = ds`:
/// `|X| < 2√|O| − Σ|O_i| + (n−1)` and `|X| < |O| / (Σ|O_i| − (n−1))`.
///
/// Evaluated in exact integer arithmetic.
pub fn standard_bound_applies(model: &ModelSpec) -> Result<bool> {
    let (x, cards) = require_lc(model)?;
    let x = x as i128;
    let n = cards.len() as i128;
    let sum: i128 = cards.iter().map(|&c| c as i128).sum();
    let joint: i128 = cards
        .iter()
        .try_fold(1i128, |acc, &c| acc.checked_mul(c as i128))
        .unwrap_or(i128::MAX);
    // x < 2√O − sum + n − 1  ⇔  x + sum − n + 1 < 2√O
    let lhs = x + sum - n + 1;
    let first = lhs < 0 || lhs.checked_mul(lhs).is_some_and(|sq| sq < joint.saturating_mul(4));
    // denominator sum − (n − 1) >= n + 1 > 0
    let second = x.saturating_mul(sum - (n - 1)) < joint;
    Ok(first && second)
}

/// Effective dimension of an all-binary tree model: `ds − 2k`, with `k` the
/// number of hidden nodes having fewer than three neighbours.
pub fn binary_tree_effective_dim(model: &ModelSpec) -> Result<usize> {
    let s = model.structure();
    if let Some(v) = s.variables().iter().find(|v| v.cardinality != 2) {
        return Err(Error::NotBinary(v.name.clone()));
    }
    let k = s.hidden().iter().filter(|&&h| s.degree(h) < 3).count();
    Ok(model.standard_dimension() - 2 * k)
}

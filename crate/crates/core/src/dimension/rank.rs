use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{ModelSpec, Parameters};
use crate::rng::{derive_seed, rng_from_seed};

use super::jacobian::build_jacobian;

/// Singular values below `σ_max · max(rows, cols) · RANK_TOLERANCE_FACTOR`
/// count as zero.
pub const RANK_TOLERANCE_FACTOR: f64 = 1.0 / (1u64 << 40) as f64;

/// A rank is trusted when `σ_rank / σ_{rank+1}` exceeds this ratio.
pub const MIN_SINGULAR_GAP: f64 = 1e3;

/// Entries of random Jacobian parameters are floored at this value.
pub const PARAMETER_FLOOR: f64 = 1e-6;

pub const DEFAULT_DRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRank {
    pub rank: usize,
    /// `σ_rank / σ_{rank+1}`; infinite when no singular value was cut.
    pub gap: f64,
    /// Absolute threshold applied to the singular values.
    pub tolerance: f64,
}

/// Numerical rank by singular value thresholding.
pub fn numerical_rank(matrix: &DMatrix<f64>) -> MatrixRank {
    let (r, c) = matrix.shape();
    if r == 0 || c == 0 {
        return MatrixRank {
            rank: 0,
            gap: f64::INFINITY,
            tolerance: 0.0,
        };
    }
    let mut sigma: Vec<f64> = matrix.singular_values().iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    let tolerance = sigma[0] * r.max(c) as f64 * RANK_TOLERANCE_FACTOR;
    let rank = sigma.iter().filter(|&&s| s > tolerance).count();
    let gap = if rank == 0 || rank == sigma.len() {
        f64::INFINITY
    } else if sigma[rank] > 0.0 {
        sigma[rank - 1] / sigma[rank]
    } else {
        f64::INFINITY
    };
    MatrixRank {
        rank,
        gap,
        tolerance,
    }
}

/// Effective dimension estimated from Jacobian ranks at random parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEstimate {
    /// Maximum rank over all draws.
    pub rank: usize,
    pub draws: usize,
    /// Smallest singular gap over the draws.
    pub singular_gap: f64,
    /// Largest absolute threshold used over the draws.
    pub tolerance: f64,
    pub per_draw: Vec<usize>,
    /// At least one draw separated its rank by more than [`MIN_SINGULAR_GAP`].
    pub reliable: bool,
}

impl RankEstimate {
    /// All draws produced the same rank.
    pub fn consistent(&self) -> bool {
        self.per_draw.iter().all(|&r| r == self.rank)
    }

    pub fn require_reliable(&self, model: &ModelSpec) -> Result<usize> {
        if self.reliable {
            Ok(self.rank)
        } else {
            Err(Error::UnreliableRank {
                model: model.describe(),
                gap: self.singular_gap,
                draws: self.draws,
            })
        }
    }
}

/// Jacobian rank at `draws` random strictly positive parametrizations.
///
/// Draw `d` uses the substream seed derived from `(seed, d)`, so the result
/// does not depend on scheduling. Ranks only drop on measure-zero sets, so
/// the maximum over draws is reported; disagreement is visible in
/// `per_draw`.
pub fn effective_dim_numeric(model: &ModelSpec, draws: usize, seed: u64) -> Result<RankEstimate> {
    if draws == 0 {
        return Err(Error::InvalidParameters("at least one draw is required".into()));
    }
    let s = model.structure();
    let results = exec::map_range(draws, |d| -> Result<MatrixRank> {
        let mut rng = rng_from_seed(derive_seed(seed, &[d as u64]));
        let params = Parameters::random_positive(s, &mut rng, PARAMETER_FLOOR);
        let j = build_jacobian(model, &params)?;
        Ok(numerical_rank(j.matrix()))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let per_draw: Vec<usize> = results.iter().map(|r| r.rank).collect();
    Ok(RankEstimate {
        rank: per_draw.iter().copied().max().unwrap_or(0),
        draws,
        singular_gap: results.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
        tolerance: results.iter().map(|r| r.tolerance).fold(0.0, f64::max),
        reliable: results.iter().any(|r| r.gap > MIN_SINGULAR_GAP),
        per_draw,
    })
}

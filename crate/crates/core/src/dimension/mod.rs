//! Standard, complete, pairwise and effective dimensions.

mod bounds;
mod decompose;
mod jacobian;
mod rank;
mod report;

pub use bounds::{
    binary_tree_effective_dim, bound_db, bound_effective_dim, is_known_exception,
    pairwise_bound_dp, standard_bound_applies, two_var_effective_dim, Bipartition,
    PairwiseBound, MAX_PAIRWISE_OBSERVED,
};
pub use decompose::{
    decomposed_effective_dim, hlc_effective_dim, local_corrections, DimensionCache, LocalSource,
    DIRECT_CHECK_MAX_STATES,
};
pub use jacobian::{build_jacobian, JacobianMatrix};
pub use rank::{
    effective_dim_numeric, numerical_rank, MatrixRank, RankEstimate, DEFAULT_DRAWS,
    MIN_SINGULAR_GAP, PARAMETER_FLOOR, RANK_TOLERANCE_FACTOR,
};
pub use report::{DimensionReport, LocalCorrection};

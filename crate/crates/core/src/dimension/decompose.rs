//! Effective dimension of HLC models from their local LC models.
//!
//! For a regular HLC model `M` with local LC models `M_i` (one per hidden
//! node), `ds(M) − de(M) = Σ_i ds(M_i) − de(M_i)`.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

use super::bounds::{bound_db, bound_effective_dim, is_known_exception};
use super::rank::{effective_dim_numeric, DEFAULT_DRAWS};
use super::report::{DimensionReport, LocalCorrection};

/// Direct Jacobian ranks are attempted up to this many observed states.
pub const DIRECT_CHECK_MAX_STATES: u128 = 1 << 14;

/// How the effective dimension of a local LC model is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalSource {
    /// Numerical Jacobian rank.
    Numeric,
    /// Combined bound with the two known exceptions applied.
    Bound,
}

/// Memo of LC effective dimensions keyed by the hidden cardinality and the
/// sorted observed cardinalities. Values do not depend on query order: each
/// key is always evaluated on its sorted representative with the same seed.
#[derive(Debug)]
pub struct DimensionCache {
    draws: usize,
    seed: u64,
    source: LocalSource,
    memo: Mutex<HashMap<String, usize>>,
}

impl DimensionCache {
    pub fn new(draws: usize, seed: u64, source: LocalSource) -> Self {
        DimensionCache {
            draws,
            seed,
            source,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn numeric(draws: usize, seed: u64) -> Self {
        Self::new(draws, seed, LocalSource::Numeric)
    }

    pub fn source(&self) -> LocalSource {
        self.source
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Effective dimension of an LC model.
    pub fn lc_effective_dim(&self, lc: &ModelSpec) -> Result<usize> {
        if !lc.is_latent_class() {
            return Err(Error::NotLatentClass);
        }
        let mut obs = lc.observed_cards();
        obs.sort_unstable();
        let key_model = ModelSpec::latent_class(lc.hidden_cards()[0], &obs)?;
        let key = key_model.render();
        if let Some(&v) = self.memo.lock().expect("dimension cache poisoned").get(&key) {
            return Ok(v);
        }
        let value = match self.source {
            LocalSource::Numeric => {
                let est = effective_dim_numeric(&key_model, self.draws, self.seed)?;
                est.require_reliable(&key_model)?
            }
            LocalSource::Bound => bound_effective_dim(&key_model)?,
        };
        self.memo
            .lock()
            .expect("dimension cache poisoned")
            .insert(key, value);
        Ok(value)
    }
}

impl Default for DimensionCache {
    fn default() -> Self {
        Self::numeric(DEFAULT_DRAWS, 0)
    }
}

/// Per-hidden-node corrections of a (regular) model.
pub fn local_corrections(model: &ModelSpec, cache: &DimensionCache) -> Result<Vec<LocalCorrection>> {
    model
        .local_lc_models()
        .into_iter()
        .map(|(h, lc)| {
            let de = cache.lc_effective_dim(&lc)?;
            Ok(LocalCorrection {
                node: model.structure().name(h).to_string(),
                local_model: lc.render(),
                ds: lc.standard_dimension(),
                de,
            })
        })
        .collect()
}

/// `ds(M) − Σ (ds(M_i) − de(M_i))` on the regularized model, with the
/// corrections used. Models without hidden variables have `de = ds`.
pub fn decomposed_effective_dim(
    model: &ModelSpec,
    cache: &DimensionCache,
) -> Result<(usize, Vec<LocalCorrection>)> {
    let reg = model.regularize();
    let corrections = local_corrections(&reg, cache)?;
    let total: usize = corrections.iter().map(LocalCorrection::difference).sum();
    Ok((reg.standard_dimension() - total, corrections))
}

/// Full dimension report via the decomposition.
///
/// The model is regularized first. When `direct` is set and the joint
/// observed space has at most [`DIRECT_CHECK_MAX_STATES`] states, the
/// Jacobian rank of the original model is computed as well and must agree.
pub fn hlc_effective_dim(
    model: &ModelSpec,
    cache: &DimensionCache,
    direct: bool,
) -> Result<DimensionReport> {
    let reg = model.regularize();
    let changed = &reg != model;
    let (de, corrections) = decomposed_effective_dim(&reg, cache)?;

    let de_numeric = if direct && model.structure().observed_space() <= DIRECT_CHECK_MAX_STATES {
        let est = effective_dim_numeric(model, cache.draws(), cache.seed())?;
        let rank = est.require_reliable(model)?;
        if rank != de {
            return Err(Error::PathMismatch {
                model: model.describe(),
                decomposed: de,
                direct: rank,
            });
        }
        Some(est)
    } else {
        None
    };

    let ds = model.standard_dimension();
    let dc = model.complete_dimension();
    let (dp, db) = if model.is_latent_class() {
        let b = bound_db(model)?;
        (b.dp, b.db)
    } else {
        (None, ds.min(dc))
    };
    Ok(DimensionReport {
        model: reg.describe(),
        ds,
        dc,
        dp,
        db,
        de_numeric,
        de_decomposed: Some(de),
        corrections,
        known_exception: is_known_exception(model),
        regularized_from: changed.then(|| model.describe()),
    })
}

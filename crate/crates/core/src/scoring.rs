//! Model-selection scores: BIC, Cheeseman–Stutz, and their
//! dimension-corrected variants.
//!
//! All logarithms are natural. The corrected scores differ from the plain
//! ones by `(ds − de)/2 · ln|D|`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dimension::{
    bound_effective_dim, decomposed_effective_dim, effective_dim_numeric, DimensionCache,
    LocalSource, DEFAULT_DRAWS,
};
use crate::error::{Error, Result};
use crate::learning::{complete_dataset, em_fit, CompletedDataset, Dataset, EmConfig, FitResult};
use crate::model::{ModelSpec, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScoreName {
    #[serde(rename = "BIC")]
    Bic,
    #[serde(rename = "BIC_plus")]
    BicPlus,
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "CS_plus")]
    CsPlus,
}

impl ScoreName {
    pub const ALL: [ScoreName; 4] = [ScoreName::Bic, ScoreName::BicPlus, ScoreName::Cs, ScoreName::CsPlus];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreName::Bic => "BIC",
            ScoreName::BicPlus => "BIC_plus",
            ScoreName::Cs => "CS",
            ScoreName::CsPlus => "CS_plus",
        }
    }
}

impl fmt::Display for ScoreName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "bic" => Ok(ScoreName::Bic),
            "bic_plus" | "bic_" | "bicplus" => Ok(ScoreName::BicPlus),
            "cs" => Ok(ScoreName::Cs),
            "cs_plus" | "cs_" | "csplus" => Ok(ScoreName::CsPlus),
            _ => Err(Error::Parse(format!(
                "unknown score '{s}' (expected bic, bic_plus, cs or cs_plus)"
            ))),
        }
    }
}

/// Where the effective dimension used by the corrected scores comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimSource {
    Numeric,
    Decomposed,
    Bound,
}

impl FromStr for DimSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numeric" => Ok(DimSource::Numeric),
            "decomposed" => Ok(DimSource::Decomposed),
            "bound" => Ok(DimSource::Bound),
            _ => Err(Error::Parse(format!(
                "unknown dimension source '{s}' (expected numeric, decomposed or bound)"
            ))),
        }
    }
}

/// `loglik − ds/2 · ln n`.
pub fn bic(loglik: f64, ds: usize, n: u64) -> f64 {
    loglik - ds as f64 / 2.0 * (n as f64).ln()
}

/// `loglik − de/2 · ln n`.
pub fn bic_plus(loglik: f64, de: usize, n: u64) -> f64 {
    loglik - de as f64 / 2.0 * (n as f64).ln()
}

/// `(ds − de)/2 · ln n`.
pub fn dimension_correction(ds: usize, de: usize, n: u64) -> f64 {
    (ds as f64 - de as f64) / 2.0 * (n as f64).ln()
}

/// Log marginal likelihood of complete (possibly fractional) counts under a
/// flat Dirichlet prior on every conditional column:
/// `Σ_{X,j} lnΓ(|X|) − lnΓ(|X| + N_j) + Σ_k lnΓ(1 + N_jk)`.
pub fn exact_marginal_loglik(model: &ModelSpec, counts: &CompletedDataset) -> Result<f64> {
    let s = model.structure();
    if counts.tables.len() != s.len() {
        return Err(Error::CardinalityMismatch("count tables do not match the model".into()));
    }
    let mut total = 0.0;
    for (i, table) in counts.tables.iter().enumerate() {
        let card = s.card(i);
        if table.len() != card * s.parent_configs(i) {
            return Err(Error::CardinalityMismatch(format!(
                "count table of '{}' has the wrong shape",
                s.name(i)
            )));
        }
        let alpha = card as f64;
        for col in table.chunks(card) {
            if let Some(&neg) = col.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::NegativeCount(neg));
            }
            let n_j: f64 = col.iter().sum();
            total += ln_gamma(alpha) - ln_gamma(alpha + n_j);
            total += col.iter().map(|&n| ln_gamma(1.0 + n)).sum::<f64>();
        }
    }
    Ok(total)
}

/// Expected complete-data log-likelihood `Σ N_jk · ln θ_jk` (with
/// `0 · ln 0 = 0`).
pub fn completed_loglik(params: &Parameters, counts: &CompletedDataset) -> f64 {
    params
        .tables()
        .iter()
        .zip(&counts.tables)
        .map(|(cpt, n)| {
            cpt.values()
                .iter()
                .zip(n)
                .filter(|(_, &c)| c > 0.0)
                .map(|(&theta, &c)| c * theta.ln())
                .sum::<f64>()
        })
        .sum()
}

/// Cheeseman–Stutz: `ln p(D̂) − ln p(D̂ | θ̂) + ln p(D | θ̂)` with `D̂` the data
/// completed under the fitted parameters.
pub fn cs(model: &ModelSpec, fit: &FitResult, data: &Dataset) -> Result<f64> {
    Ok(FitScores::compute(model, fit, data, model.standard_dimension())?.value(ScoreName::Cs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub score_name: ScoreName,
    pub value: f64,
    pub loglik: f64,
    pub ds: usize,
    pub de: usize,
    pub n: u64,
    /// Addends whose sum is `value`.
    pub components: Vec<Component>,
}

/// The quantities from which all four scores of one fit are assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitScores {
    pub loglik: f64,
    pub ds: usize,
    pub de: usize,
    pub n: u64,
    pub marginal_completed: f64,
    pub completed_loglik: f64,
}

impl FitScores {
    pub fn compute(model: &ModelSpec, fit: &FitResult, data: &Dataset, de: usize) -> Result<Self> {
        let counts = complete_dataset(model, &fit.params, data)?;
        Ok(FitScores {
            loglik: fit.loglik,
            ds: model.standard_dimension(),
            de,
            n: data.total(),
            marginal_completed: exact_marginal_loglik(model, &counts)?,
            completed_loglik: completed_loglik(&fit.params, &counts),
        })
    }

    fn components(&self, which: ScoreName) -> Vec<Component> {
        let c = |name: &str, value: f64| Component {
            name: name.to_string(),
            value,
        };
        let ln_n = (self.n as f64).ln();
        let cs_parts = || {
            vec![
                c("marginal_completed", self.marginal_completed),
                c("completed_loglik", -self.completed_loglik),
                c("loglik", self.loglik),
            ]
        };
        match which {
            ScoreName::Bic => vec![c("loglik", self.loglik), c("penalty", -(self.ds as f64) / 2.0 * ln_n)],
            ScoreName::BicPlus => vec![c("loglik", self.loglik), c("penalty", -(self.de as f64) / 2.0 * ln_n)],
            ScoreName::Cs => cs_parts(),
            ScoreName::CsPlus => {
                let mut v = cs_parts();
                v.push(c("dimension_correction", dimension_correction(self.ds, self.de, self.n)));
                v
            }
        }
    }

    pub fn value(&self, which: ScoreName) -> f64 {
        self.components(which).iter().map(|c| c.value).sum()
    }

    pub fn report(&self, which: ScoreName) -> ScoreReport {
        let components = self.components(which);
        ScoreReport {
            score_name: which,
            value: components.iter().map(|c| c.value).sum(),
            loglik: self.loglik,
            ds: self.ds,
            de: self.de,
            n: self.n,
            components,
        }
    }
}

/// Effective dimensions for scoring, memoized per local LC model.
#[derive(Debug)]
pub struct DimensionOracle {
    numeric: DimensionCache,
    bound: DimensionCache,
}

impl DimensionOracle {
    pub fn new(draws: usize, seed: u64) -> Self {
        DimensionOracle {
            numeric: DimensionCache::new(draws, seed, LocalSource::Numeric),
            bound: DimensionCache::new(draws, seed, LocalSource::Bound),
        }
    }

    /// Default source: numeric rank for LC models, decomposition otherwise.
    pub fn default_source(model: &ModelSpec) -> DimSource {
        if model.structure().hidden().len() <= 1 {
            DimSource::Numeric
        } else {
            DimSource::Decomposed
        }
    }

    pub fn effective_dim(&self, model: &ModelSpec, source: Option<DimSource>) -> Result<usize> {
        if model.structure().hidden().is_empty() {
            return Ok(model.standard_dimension());
        }
        let source = source.unwrap_or_else(|| Self::default_source(model));
        match source {
            DimSource::Numeric if model.is_latent_class() => self.numeric.lc_effective_dim(model),
            DimSource::Numeric => {
                let est = effective_dim_numeric(model, self.numeric.draws(), self.numeric.seed())?;
                est.require_reliable(model)
            }
            DimSource::Decomposed => Ok(decomposed_effective_dim(model, &self.numeric)?.0),
            DimSource::Bound if model.is_latent_class() => bound_effective_dim(model),
            DimSource::Bound => Ok(decomposed_effective_dim(model, &self.bound)?.0),
        }
    }
}

impl Default for DimensionOracle {
    fn default() -> Self {
        Self::new(DEFAULT_DRAWS, 0)
    }
}

/// Fit by EM, obtain `de` and evaluate one score.
pub fn score_model(
    model: &ModelSpec,
    data: &Dataset,
    which: ScoreName,
    source: Option<DimSource>,
    em: &EmConfig,
    oracle: &DimensionOracle,
) -> Result<(ScoreReport, FitResult)> {
    let de = oracle.effective_dim(model, source)?;
    let fit = em_fit(model, data, em)?;
    let scores = FitScores::compute(model, &fit, data, de)?;
    Ok((scores.report(which), fit))
}

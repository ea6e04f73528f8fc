use serde::Serialize;
use serde_json::{json, Value};

use super::rank::RankEstimate;

/// Correction contributed by the local LC model of one hidden node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalCorrection {
    pub node: String,
    pub local_model: String,
    pub ds: usize,
    pub de: usize,
}

impl LocalCorrection {
    pub fn difference(&self) -> usize {
        self.ds - self.de
    }
}

/// Dimension quantities for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub model: String,
    pub ds: usize,
    pub dc: usize,
    /// Pairwise bound; only defined for LC models.
    pub dp: Option<usize>,
    pub db: usize,
    pub de_numeric: Option<RankEstimate>,
    pub de_decomposed: Option<usize>,
    pub corrections: Vec<LocalCorrection>,
    pub known_exception: bool,
    /// Original model when the analysis ran on a regularized equivalent.
    pub regularized_from: Option<String>,
}

impl DimensionReport {
    /// Best available effective dimension: numeric rank, then the
    /// decomposition.
    pub fn effective(&self) -> Option<usize> {
        self.de_numeric
            .as_ref()
            .map(|e| e.rank)
            .or(self.de_decomposed)
    }

    pub fn to_json(&self) -> Value {
        let finite = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
        let est = self.de_numeric.as_ref();
        json!({
            "model": self.model,
            "ds": self.ds,
            "dc": self.dc,
            "dp": self.dp,
            "db": self.db,
            "de_numeric": est.map(|e| e.rank),
            "de_decomposed": self.de_decomposed,
            "draws": est.map(|e| e.draws),
            "singular_gap": est.map_or(Value::Null, |e| finite(e.singular_gap)),
            "reliable": est.map(|e| e.reliable),
            "per_draw": est.map(|e| e.per_draw.clone()),
            "known_exception": self.known_exception,
            "regularized_from": self.regularized_from,
            "corrections": self.corrections.iter().map(|c| json!({
                "node": c.node,
                "local_model": c.local_model,
                "ds": c.ds,
                "de": c.de,
                "difference": c.difference(),
            })).collect::<Vec<_>>(),
        })
    }
}

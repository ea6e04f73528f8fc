//! Hidden-cardinality selection: an exhaustive scan for LC models and a
//! greedy hill-climb for HLC models.
//!
//! Ties (scores within [`TIE_TOLERANCE`]) go to the candidate with the
//! smallest total hidden cardinality, then to the lowest hidden-node index
//! being incremented.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::dimension::DEFAULT_DRAWS;
use crate::error::{Error, Result};
use crate::exec;
use crate::learning::{em_fit, Dataset, EmConfig, FitResult};
use crate::model::{ModelSpec, TreeStructure, Variable};
use crate::rng::{derive_seed, str_tag};
use crate::scoring::{DimSource, DimensionOracle, FitScores, ScoreName};

/// Scores closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub const TIE_RULE: &str = "smallest total hidden cardinality, then lowest hidden-node index";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// EM settings; `em.seed` is the master seed from which every candidate's
    /// EM seed is derived.
    pub em: EmConfig,
    pub draws: usize,
    pub dim_source: Option<DimSource>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            em: EmConfig::default(),
            draws: DEFAULT_DRAWS,
            dim_source: None,
        }
    }
}

/// A fitted and scored candidate.
#[derive(Debug)]
pub struct Evaluation {
    pub model: ModelSpec,
    pub fit: FitResult,
    pub scores: FitScores,
}

/// Fits and scores candidates on one dataset, caching by candidate so that
/// several scores can share the same fits.
pub struct Evaluator<'a> {
    data: &'a Dataset,
    config: SearchConfig,
    oracle: &'a DimensionOracle,
    cache: Mutex<HashMap<String, Arc<Evaluation>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a Dataset, config: SearchConfig, oracle: &'a DimensionOracle) -> Self {
        Evaluator {
            data,
            config,
            oracle,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    /// EM seed of a candidate: depends only on the master seed and the
    /// candidate itself.
    pub fn candidate_seed(&self, model: &ModelSpec) -> u64 {
        derive_seed(self.config.em.seed, &[str_tag(&model.describe())])
    }

    pub fn evaluate(&self, model: &ModelSpec) -> Result<Arc<Evaluation>> {
        let key = model.describe();
        if let Some(e) = self.cache.lock().expect("evaluation cache poisoned").get(&key) {
            return Ok(Arc::clone(e));
        }
        let em = EmConfig {
            seed: self.candidate_seed(model),
            ..self.config.em
        };
        let de = self.oracle.effective_dim(model, self.config.dim_source)?;
        let fit = em_fit(model, self.data, &em)?;
        let scores = FitScores::compute(model, &fit, self.data, de)?;
        let eval = Arc::new(Evaluation {
            model: model.clone(),
            fit,
            scores,
        });
        self.cache
            .lock()
            .expect("evaluation cache poisoned")
            .insert(key, Arc::clone(&eval));
        Ok(eval)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreValues {
    #[serde(rename = "BIC")]
    pub bic: f64,
    #[serde(rename = "BIC_plus")]
    pub bic_plus: f64,
    #[serde(rename = "CS")]
    pub cs: f64,
    #[serde(rename = "CS_plus")]
    pub cs_plus: f64,
}

impl ScoreValues {
    fn from_scores(s: &FitScores) -> Self {
        ScoreValues {
            bic: s.value(ScoreName::Bic),
            bic_plus: s.value(ScoreName::BicPlus),
            cs: s.value(ScoreName::Cs),
            cs_plus: s.value(ScoreName::CsPlus),
        }
    }

    pub fn get(&self, which: ScoreName) -> f64 {
        match which {
            ScoreName::Bic => self.bic,
            ScoreName::BicPlus => self.bic_plus,
            ScoreName::Cs => self.cs,
            ScoreName::CsPlus => self.cs_plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    pub candidate: String,
    pub hidden_cards: Vec<usize>,
    pub loglik: f64,
    pub ds: usize,
    pub de: usize,
    pub scores: ScoreValues,
    /// Within [`TIE_TOLERANCE`] of the step's best score.
    pub tied: bool,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub score_name: ScoreName,
    pub tie_rule: &'static str,
    pub steps: Vec<TraceEntry>,
    #[serde(rename = "final")]
    pub final_model: String,
}

impl SearchTrace {
    /// Fixed-width text table, one row per candidate.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<24} {:>14} {:>5} {:>5} {:>14} {:>14} {:>14} {:>14}  flag",
            "step", "candidate", "loglik", "ds", "de", "BIC", "BIC_plus", "CS", "CS_plus"
        );
        for e in &self.steps {
            let flag = match (e.chosen, e.tied) {
                (true, _) => "chosen",
                (false, true) => "tied",
                _ => "",
            };
            let _ = writeln!(
                out,
                "{:>4}  {:<24} {:>14.4} {:>5} {:>5} {:>14.4} {:>14.4} {:>14.4} {:>14.4}  {}",
                e.step,
                e.candidate,
                e.loglik,
                e.ds,
                e.de,
                e.scores.bic,
                e.scores.bic_plus,
                e.scores.cs,
                e.scores.cs_plus,
                flag
            );
        }
        let _ = writeln!(out, "final: {} (score {})", self.final_model, self.score_name);
        out
    }
}

fn entry(step: usize, eval: &Evaluation) -> TraceEntry {
    TraceEntry {
        step,
        candidate: eval.model.describe(),
        hidden_cards: eval.model.hidden_cards(),
        loglik: eval.scores.loglik,
        ds: eval.scores.ds,
        de: eval.scores.de,
        scores: ScoreValues::from_scores(&eval.scores),
        tied: false,
        chosen: false,
    }
}

/// Index of the best candidate under the tie rule; candidates are given in
/// increasing hidden-index order. Marks the tied entries.
fn pick_best(entries: &mut [TraceEntry], which: ScoreName) -> usize {
    let best_value = entries
        .iter()
        .map(|e| e.scores.get(which))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<usize> = None;
    for i in 0..entries.len() {
        if entries[i].scores.get(which) >= best_value - TIE_TOLERANCE {
            entries[i].tied = true;
            let total = |e: &TraceEntry| e.hidden_cards.iter().sum::<usize>();
            if best.is_none_or(|b| total(&entries[i]) < total(&entries[b])) {
                best = Some(i);
            }
        }
    }
    let best = best.expect("at least one candidate");
    if entries.iter().filter(|e| e.tied).count() == 1 {
        entries[best].tied = false;
    }
    best
}

/// LC template over the data's observed variables.
fn lc_template(observed_cards: &[usize], data: &Dataset) -> Result<ModelSpec> {
    if observed_cards != data.cards() {
        return Err(Error::DataMismatch(format!(
            "observed cardinalities {:?} do not match the data {:?}",
            observed_cards,
            data.cards()
        )));
    }
    let names = data.observed_names();
    let mut hidden_name = "X".to_string();
    while names.contains(&hidden_name) {
        hidden_name.push('_');
    }
    let mut vars = vec![Variable::hidden(hidden_name, 2)];
    vars.extend(names.iter().zip(observed_cards).map(|(n, &c)| Variable::observed(n.clone(), c)));
    let edges: Vec<(usize, usize)> = (1..vars.len()).map(|i| (0, i)).collect();
    Ok(ModelSpec::from_structure(TreeStructure::from_indices(vars, 0, &edges)?))
}

/// Regular LC cardinalities are `2..=Π|O| / max|O|`.
pub fn lc_cardinality_limit(observed_cards: &[usize]) -> usize {
    let max = observed_cards.iter().copied().max().unwrap_or(1);
    observed_cards.iter().product::<usize>() / max
}

/// Score every LC cardinality in `range` (inclusive) and return the best.
pub fn select_lc_cardinality(
    observed_cards: &[usize],
    data: &Dataset,
    score: ScoreName,
    range: (usize, usize),
    evaluator: &Evaluator<'_>,
) -> Result<(ModelSpec, SearchTrace)> {
    let (lo, hi) = range;
    let limit = lc_cardinality_limit(observed_cards);
    if lo < 2 || lo > hi || hi > limit {
        return Err(Error::InvalidRange(format!(
            "cardinality range {lo}:{hi} is empty or outside the regular band 2:{limit}"
        )));
    }
    let template = lc_template(observed_cards, data)?;
    let candidates = (lo..=hi)
        .map(|k| template.with_hidden_cards(&[k]))
        .collect::<Result<Vec<_>>>()?;
    let evals = exec::map_slice(&candidates, |m| evaluator.evaluate(m))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut steps: Vec<TraceEntry> = evals.iter().map(|e| entry(0, e)).collect();
    let best = pick_best(&mut steps, score);
    steps[best].chosen = true;
    let model = evals[best].model.clone();
    Ok((
        model.clone(),
        SearchTrace {
            score_name: score,
            tie_rule: TIE_RULE,
            steps,
            final_model: model.describe(),
        },
    ))
}

/// Greedy search over hidden cardinalities on a fixed topology.
///
/// Starts with every hidden variable binary. Each step scores `+1` on every
/// hidden node (irregular increments are skipped) and moves to the best
/// candidate if it beats the current model by more than [`TIE_TOLERANCE`].
pub fn hillclimb_hlc_cardinality(
    structure: &TreeStructure,
    data: &Dataset,
    score: ScoreName,
    evaluator: &Evaluator<'_>,
) -> Result<(ModelSpec, SearchTrace)> {
    let template = ModelSpec::from_structure(structure.clone());
    data.check_model(&template)?;
    let hidden = structure.hidden().len();
    let mut current = template.with_hidden_cards(&vec![2; hidden])?;
    if !current.is_regular() {
        return Err(Error::InvalidStructure(format!(
            "hidden variables {:?} cannot be regular at any cardinality",
            current
                .regularity()
                .violations
                .iter()
                .map(|&h| structure.name(h))
                .collect::<Vec<_>>()
        )));
    }
    let mut eval = evaluator.evaluate(&current)?;
    let mut start = entry(0, &eval);
    start.chosen = true;
    let mut steps = vec![start];

    for step in 1.. {
        let candidates: Vec<ModelSpec> = (0..hidden)
            .filter_map(|i| {
                let mut cards = current.hidden_cards();
                cards[i] += 1;
                current.with_hidden_cards(&cards).ok().filter(ModelSpec::is_regular)
            })
            .collect();
        if candidates.is_empty() {
            break;
        }
        let evals = exec::map_slice(&candidates, |m| evaluator.evaluate(m))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut entries: Vec<TraceEntry> = evals.iter().map(|e| entry(step, e)).collect();
        let best = pick_best(&mut entries, score);
        let improves =
            evals[best].scores.value(score) > eval.scores.value(score) + TIE_TOLERANCE;
        if improves {
            entries[best].chosen = true;
        }
        steps.extend(entries);
        if !improves {
            break;
        }
        current = evals[best].model.clone();
        eval = Arc::clone(&evals[best]);
    }

    Ok((
        current.clone(),
        SearchTrace {
            score_name: score,
            tie_rule: TIE_RULE,
            steps,
            final_model: current.describe(),
        },
    ))
}

/// LC scan for single-hidden structures, hill-climb otherwise.
pub fn select_cardinality(
    structure: &TreeStructure,
    data: &Dataset,
    score: ScoreName,
    lc_range: Option<(usize, usize)>,
    evaluator: &Evaluator<'_>,
) -> Result<(ModelSpec, SearchTrace)> {
    if structure.is_latent_class() {
        let cards: Vec<usize> = structure.observed().iter().map(|&o| structure.card(o)).collect();
        let range = lc_range.unwrap_or((2, lc_cardinality_limit(&cards)));
        select_lc_cardinality(&cards, data, score, range, evaluator)
    } else {
        hillclimb_hlc_cardinality(structure, data, score, evaluator)
    }
}

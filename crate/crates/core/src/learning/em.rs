use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{Cpt, FamilyJoint, Inference, ModelSpec, Parameters, TreeStructure};
use crate::rng::derive_seed;

use super::data::{CompletedDataset, Dataset, Record};
use super::generate::random_parameters;

/// Restarts whose final log-likelihoods differ by less than this are tied;
/// the lower restart index wins.
pub const RESTART_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            restarts: 16,
            max_iters: 500,
            rel_tol: 1e-7,
            seed: 0,
        }
    }
}

/// Maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Parameters,
    /// Observed-data log-likelihood of `params` (natural log), recomputed
    /// after EM finished.
    pub loglik: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    /// Index of the winning restart.
    pub best_restart: usize,
    /// Log-likelihood per iteration for every restart.
    pub traces: Vec<Vec<f64>>,
}

/// Expected counts and log-likelihood of `records` under `params`.
fn e_step(
    structure: &TreeStructure,
    params: &Parameters,
    records: &[Record],
) -> (CompletedDataset, f64) {
    let mut counts = CompletedDataset::zeros(structure);
    let mut fam = FamilyJoint::zeros(structure);
    let mut inf = Inference::new(structure, params);
    let mut loglik = 0.0;
    for r in records {
        inf.family_joint(&r.states, &mut fam);
        let w = r.count as f64;
        loglik += w * fam.probability.ln();
        if fam.probability > 0.0 {
            let scale = w / fam.probability;
            for (acc, t) in counts.tables.iter_mut().zip(&fam.tables) {
                for (a, &v) in acc.iter_mut().zip(t) {
                    *a += scale * v;
                }
            }
        }
    }
    (counts, loglik)
}

/// Normalize expected counts column by column; columns without mass become
/// uniform.
fn m_step(structure: &TreeStructure, counts: &CompletedDataset) -> Parameters {
    let tables = (0..structure.len())
        .map(|i| {
            let card = structure.card(i);
            let cols = structure.parent_configs(i);
            let mut values = counts.tables[i].clone();
            for col in values.chunks_mut(card) {
                let mass: f64 = col.iter().sum();
                if mass > 0.0 {
                    col.iter_mut().for_each(|v| *v /= mass);
                } else {
                    col.iter_mut().for_each(|v| *v = 1.0 / card as f64);
                }
            }
            Cpt::new(card, cols, values)
        })
        .collect();
    Parameters::from_cpts_unchecked(tables)
}

/// Observed-data log-likelihood `Σ_records count · ln p(o)`.
pub fn log_likelihood(model: &ModelSpec, params: &Parameters, data: &Dataset) -> Result<f64> {
    data.check_model(model)?;
    let s = model.structure();
    if !params.matches(s) {
        return Err(Error::InvalidParameters("parameters do not match the structure".into()));
    }
    let mut inf = Inference::new(s, params);
    Ok(data
        .records()
        .iter()
        .map(|r| r.count as f64 * inf.likelihood(&r.states).ln())
        .sum())
}

/// Expected sufficient statistics of the data completed under `params`.
pub fn complete_dataset(model: &ModelSpec, params: &Parameters, data: &Dataset) -> Result<CompletedDataset> {
    data.check_model(model)?;
    if !params.matches(model.structure()) {
        return Err(Error::InvalidParameters("parameters do not match the structure".into()));
    }
    Ok(e_step(model.structure(), params, data.records()).0)
}

struct RestartOutcome {
    params: Parameters,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn run_restart(structure: &TreeStructure, data: &Dataset, init: Parameters, cfg: &EmConfig) -> RestartOutcome {
    let mut params = init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let (counts, ll) = e_step(structure, &params, data.records());
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            let improvement = (ll - prev) / prev.abs().max(f64::MIN_POSITIVE);
            trace.push(ll);
            if improvement < cfg.rel_tol {
                converged = true;
                break;
            }
        } else {
            trace.push(ll);
        }
        params = m_step(structure, &counts);
        iterations += 1;
    }
    RestartOutcome {
        params,
        iterations,
        converged,
        trace,
    }
}

/// Best-of-restarts EM.
///
/// Restart `r` starts from flat-Dirichlet parameters seeded by
/// `(cfg.seed, r)`. Each restart stops when the relative log-likelihood
/// improvement drops below `rel_tol` or after `max_iters` M-steps. The
/// restart with the highest final log-likelihood is returned.
pub fn em_fit(model: &ModelSpec, data: &Dataset, cfg: &EmConfig) -> Result<FitResult> {
    data.check_model(model)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let restarts = cfg.restarts.max(1);
    let s = model.structure();
    let outcomes = exec::map_range(restarts, |r| {
        let init = random_parameters(model, derive_seed(cfg.seed, &[r as u64]));
        let out = run_restart(s, data, init, cfg);
        let ll = log_likelihood(model, &out.params, data).unwrap_or(f64::NEG_INFINITY);
        (out, ll)
    });

    let mut best = 0;
    for (i, (_, ll)) in outcomes.iter().enumerate().skip(1) {
        if *ll > outcomes[best].1 + RESTART_TIE_TOLERANCE {
            best = i;
        }
    }
    let mut traces = Vec::with_capacity(restarts);
    let mut chosen = None;
    for (i, (out, ll)) in outcomes.into_iter().enumerate() {
        traces.push(out.trace);
        if i == best {
            chosen = Some((out.params, ll, out.iterations, out.converged));
        }
    }
    let (params, loglik, iterations, converged) = chosen.expect("best restart exists");
    Ok(FitResult {
        params,
        loglik,
        iterations,
        restarts_used: restarts,
        converged,
        best_restart: best,
        traces,
    })
}

//! Seeded model-selection experiments: random generative parametrizations,
//! sampled datasets, per-score cardinality selection and KL statistics.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dimension::DEFAULT_DRAWS;
use crate::error::{Error, Result};
use crate::exec;
use crate::learning::{
    deterministic_block_parameters, kl_divergence, random_parameters, sample_dataset, EmConfig,
};
use crate::model::{observed_marginal, ModelSpec, Parameters};
use crate::rng::derive_seed;
use crate::scoring::{DimSource, DimensionOracle, ScoreName};
use crate::search::{select_cardinality, Evaluator, SearchConfig};

pub const HLC_SAMPLE_SIZES: [usize; 6] = [1_000, 3_000, 9_000, 27_000, 81_000, 243_000];
pub const LC_SAMPLE_SIZES: [usize; 5] = [1_000, 4_000, 16_000, 64_000, 256_000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    #[default]
    Random,
    /// LC only: the hidden state is a bijection of the `block` leaves.
    DeterministicBlock,
}

fn all_scores() -> Vec<ScoreName> {
    ScoreName::ALL.to_vec()
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Spec string or structure-file text of the generative model.
    pub generative: String,
    #[serde(default)]
    pub mode: ParamMode,
    /// Observed variable names forming the deterministic block.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block: Vec<String>,
    pub n_params: usize,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "all_scores")]
    pub scores: Vec<ScoreName>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub em: EmConfig,
    /// Inclusive LC cardinality range; defaults to the full regular band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lc_range: Option<[usize; 2]>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_source: Option<DimSource>,
}

impl ExperimentPlan {
    /// Random parametrizations of `generative` over the HLC sample-size ladder.
    pub fn hlc_preset(generative: &str, n_params: usize, master_seed: u64) -> Self {
        Self::preset(generative, n_params, master_seed, &HLC_SAMPLE_SIZES)
    }

    /// Random parametrizations of `generative` over the LC sample-size ladder.
    pub fn lc_preset(generative: &str, n_params: usize, master_seed: u64) -> Self {
        Self::preset(generative, n_params, master_seed, &LC_SAMPLE_SIZES)
    }

    fn preset(generative: &str, n_params: usize, master_seed: u64, sizes: &[usize]) -> Self {
        ExperimentPlan {
            generative: generative.to_string(),
            mode: ParamMode::Random,
            block: Vec::new(),
            n_params,
            sample_sizes: sizes.to_vec(),
            scores: all_scores(),
            master_seed,
            em: EmConfig::default(),
            lc_range: None,
            draws: DEFAULT_DRAWS,
            dim_source: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::parse(&self.generative)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlan(msg));
        let model = self.model()?;
        if self.n_params == 0 {
            return bad("n_params must be at least 1".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes[0] == 0 {
            return bad("sample_sizes must be nonempty and positive".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("sample_sizes must be strictly increasing: {:?}", self.sample_sizes));
        }
        if self.scores.is_empty() {
            return bad("at least one score is required".into());
        }
        for (i, s) in self.scores.iter().enumerate() {
            if self.scores[..i].contains(s) {
                return bad(format!("score {s} listed twice"));
            }
        }
        if self.draws == 0 {
            return bad("draws must be at least 1".into());
        }
        match self.mode {
            ParamMode::Random if !self.block.is_empty() => {
                return bad("block is only used with deterministic_block".into());
            }
            ParamMode::DeterministicBlock => {
                let names: Vec<&str> = self.block.iter().map(String::as_str).collect();
                deterministic_block_parameters(&model, &names, 0)?;
            }
            ParamMode::Random => {}
        }
        if let Some([lo, hi]) = self.lc_range {
            if !model.is_latent_class() {
                return bad("lc_range applies to latent class models only".into());
            }
            if lo < 2 || lo > hi {
                return bad(format!("lc_range {lo}:{hi} is empty"));
            }
        }
        Ok(())
    }

    /// Generative parameters of parametrization `index`.
    pub fn parameters(&self, model: &ModelSpec, index: usize) -> Result<Parameters> {
        let seed = derive_seed(self.master_seed, &[0, index as u64]);
        match self.mode {
            ParamMode::Random => Ok(random_parameters(model, seed)),
            ParamMode::DeterministicBlock => {
                let names: Vec<&str> = self.block.iter().map(String::as_str).collect();
                deterministic_block_parameters(model, &names, seed)
            }
        }
    }
}

/// Outcome of one (parametrization, sample size, score) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub param_index: usize,
    pub sample_size: usize,
    pub score: ScoreName,
    pub selected: Option<String>,
    pub hidden_cards: Vec<usize>,
    /// KL divergence from the generative to the selected observed marginal,
    /// in bits.
    pub kl_bits: Option<f64>,
    pub error: Option<String>,
    /// Not part of the machine-readable output.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl ExperimentRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn run_dataset(
    plan: &ExperimentPlan,
    model: &ModelSpec,
    oracle: &DimensionOracle,
    param_index: usize,
    sample_size: usize,
) -> Vec<ExperimentRecord> {
    let fail = |score: ScoreName, e: &Error| ExperimentRecord {
        param_index,
        sample_size,
        score,
        selected: None,
        hidden_cards: Vec::new(),
        kl_bits: None,
        error: Some(e.to_string()),
        wall_seconds: 0.0,
    };
    let prepared = plan.parameters(model, param_index).and_then(|params| {
        let seed = derive_seed(plan.master_seed, &[1, param_index as u64, sample_size as u64]);
        let data = sample_dataset(model, &params, sample_size, seed)?;
        let truth = observed_marginal(model.structure(), &params)?;
        Ok((data, truth))
    });
    let (data, truth) = match prepared {
        Ok(v) => v,
        Err(e) => return plan.scores.iter().map(|&s| fail(s, &e)).collect(),
    };

    let config = SearchConfig {
        em: EmConfig {
            seed: derive_seed(plan.master_seed, &[2, param_index as u64, sample_size as u64]),
            ..plan.em
        },
        draws: plan.draws,
        dim_source: plan.dim_source,
    };
    let evaluator = Evaluator::new(&data, config, oracle);
    let range = plan.lc_range.map(|[lo, hi]| (lo, hi));
    plan.scores
        .iter()
        .map(|&score| {
            let start = Instant::now();
            let outcome = select_cardinality(model.structure(), &data, score, range, &evaluator)
                .and_then(|(selected, _)| {
                    let eval = evaluator.evaluate(&selected)?;
                    let fitted = observed_marginal(selected.structure(), &eval.fit.params)?;
                    let kl = kl_divergence(&truth, &fitted)?;
                    Ok((selected, kl))
                });
            match outcome {
                Ok((selected, kl)) => ExperimentRecord {
                    param_index,
                    sample_size,
                    score,
                    selected: Some(selected.describe()),
                    hidden_cards: selected.hidden_cards(),
                    kl_bits: Some(kl),
                    error: None,
                    wall_seconds: start.elapsed().as_secs_f64(),
                },
                Err(e) => fail(score, &e),
            }
        })
        .collect()
}

/// Run every cell of the plan. Cells are ordered by parametrization, then
/// sample size, then score as listed in the plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>> {
    plan.validate()?;
    let model = plan.model()?;
    let oracle = DimensionOracle::new(plan.draws, plan.master_seed);
    let jobs: Vec<(usize, usize)> = (0..plan.n_params)
        .flat_map(|p| plan.sample_sizes.iter().map(move |&n| (p, n)))
        .collect();
    let records = exec::map_slice(&jobs, |&(p, n)| run_dataset(plan, &model, &oracle, p, n));
    Ok(records.into_iter().flatten().collect())
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.12e}")
    }
}

/// One row per cell: `param_index,sample_size,score,selected,hidden_cards,kl_bits,error`.
pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["param_index", "sample_size", "score", "selected", "hidden_cards", "kl_bits", "error"])?;
    for r in records {
        let cards = r
            .hidden_cards
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.param_index.to_string(),
            r.sample_size.to_string(),
            r.score.to_string(),
            r.selected.clone().unwrap_or_default(),
            cards,
            r.kl_bits.map(fmt_f64).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Statistics of one (score, sample size) cell group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub score: ScoreName,
    pub sample_size: usize,
    pub cells: usize,
    pub failures: usize,
    pub mean_kl_bits: f64,
    /// `1.96 · stderr` of the mean.
    pub half_width_bits: f64,
    pub mean_hidden_cards: Vec<f64>,
    /// Best mean at this sample size, or an interval overlapping the best.
    pub marked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scores: Vec<ScoreName>,
    pub sample_sizes: Vec<usize>,
    pub rows: Vec<SummaryRow>,
}

fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, 1.96 * (var / m).sqrt())
}

/// Aggregate records per (score, sample size) in order of first appearance.
pub fn summarize(records: &[ExperimentRecord]) -> Summary {
    let mut scores: Vec<ScoreName> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for r in records {
        if !scores.contains(&r.score) {
            scores.push(r.score);
        }
        if !sizes.contains(&r.sample_size) {
            sizes.push(r.sample_size);
        }
    }
    sizes.sort_unstable();

    let mut rows = Vec::new();
    for &n in &sizes {
        let start = rows.len();
        for &score in &scores {
            let group: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.score == score && r.sample_size == n)
                .collect();
            if group.is_empty() {
                continue;
            }
            let ok: Vec<&ExperimentRecord> = group.iter().copied().filter(|r| !r.failed()).collect();
            let kls: Vec<f64> = ok.iter().filter_map(|r| r.kl_bits).collect();
            let (mean_kl_bits, half_width_bits) = if kls.is_empty() {
                (f64::NAN, 0.0)
            } else {
                mean_and_half_width(&kls)
            };
            let width = ok.iter().map(|r| r.hidden_cards.len()).max().unwrap_or(0);
            let mean_hidden_cards = (0..width)
                .map(|i| {
                    let v: Vec<f64> = ok
                        .iter()
                        .filter_map(|r| r.hidden_cards.get(i).map(|&c| c as f64))
                        .collect();
                    v.iter().sum::<f64>() / v.len() as f64
                })
                .collect();
            rows.push(SummaryRow {
                score,
                sample_size: n,
                cells: group.len(),
                failures: group.len() - ok.len(),
                mean_kl_bits,
                half_width_bits,
                mean_hidden_cards,
                marked: false,
            });
        }
        let group = &mut rows[start..];
        let best = group
            .iter()
            .filter(|r| !r.mean_kl_bits.is_nan())
            .min_by(|a, b| a.mean_kl_bits.total_cmp(&b.mean_kl_bits))
            .map(|r| (r.mean_kl_bits, r.half_width_bits));
        if let Some((bm, bh)) = best {
            for r in group.iter_mut() {
                r.marked = r.mean_kl_bits == bm || r.mean_kl_bits - r.half_width_bits <= bm + bh;
            }
        }
    }
    Summary {
        scores,
        sample_sizes: sizes,
        rows,
    }
}

impl Summary {
    pub fn row(&self, score: ScoreName, sample_size: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.score == score && r.sample_size == sample_size)
    }

    /// Rows are sample sizes, columns are scores; cells are mean ± half-width
    /// in 1e-3 bits, `*` marking the best and its overlapping peers.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("sample_size");
        for s in &self.scores {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for &n in &self.sample_sizes {
            let _ = write!(out, "{n}");
            for &s in &self.scores {
                let cell = match self.row(s, n) {
                    Some(r) => format!(
                        "{:.3}±{:.3}{}",
                        r.mean_kl_bits * 1e3,
                        r.half_width_bits * 1e3,
                        if r.marked { "*" } else { "" }
                    ),
                    None => String::new(),
                };
                let _ = write!(out, ",{cell}");
            }
            out.push('\n');
        }
        out
    }

    /// One row per (score, sample size) with mean selected cardinalities.
    pub fn long_csv(&self) -> String {
        let mut out = String::from(
            "score,sample_size,cells,failures,mean_kl_bits,half_width_bits,mean_hidden_cards,marked\n",
        );
        for r in &self.rows {
            let cards = r
                .mean_hidden_cards
                .iter()
                .map(|c| format!("{c:.4}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.score,
                r.sample_size,
                r.cells,
                r.failures,
                fmt_f64(r.mean_kl_bits),
                fmt_f64(r.half_width_bits),
                cards,
                r.marked
            );
        }
        out
    }
}

/// Write `records.csv`, `summary.csv` (table layout) and `summary_long.csv`
/// into `dir`.
pub fn write_outputs(dir: &Path, records: &[ExperimentRecord]) -> Result<Summary> {
    std::fs::create_dir_all(dir)?;
    write_records_csv(records, std::fs::File::create(dir.join("records.csv"))?)?;
    let summary = summarize(records);
    std::fs::write(dir.join("summary.csv"), summary.table_csv())?;
    std::fs::write(dir.join("summary_long.csv"), summary.long_csv())?;
    Ok(summary)
}

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use hlcdim::dimension::{
    bound_db, bound_effective_dim, effective_dim_numeric, hlc_effective_dim, pairwise_bound_dp,
    standard_bound_applies, DimensionCache, DimensionReport,
};
use hlcdim::experiments::{run_plan, write_outputs, ExperimentPlan};
use hlcdim::learning::{em_fit, random_parameters, sample_dataset, Dataset, EmConfig};
use hlcdim::model::{cardinality_cap, requires_strict, ParametersDocument};
use hlcdim::rng::derive_seed;
use hlcdim::scoring::{DimSource, DimensionOracle, FitScores, ScoreName};
use hlcdim::search::{select_cardinality, Evaluator, SearchConfig};
use hlcdim::{Error, ModelSpec, Parameters, Result};

use crate::{
    Command, DimArgs, DimMethod, DimSourceArg, EmArgs, ExperimentArgs, FitArgs, ModelArgs,
    ModelSource, SampleArgs, ScoreArgs, SelectArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Dim(a) => dim(a),
        Command::Bound(a) => bound(a),
        Command::Show(a) => show(a),
        Command::Fit(a) => fit(a),
        Command::Score(a) => score(a),
        Command::Select(a) => select(a),
        Command::Experiment(a) => experiment(a),
        Command::Sample(a) => sample(a),
    }
}

fn load_model(src: &ModelSource) -> Result<ModelSpec> {
    match (&src.model, &src.structure) {
        (Some(spec), _) => ModelSpec::parse(spec),
        (None, Some(path)) => ModelSpec::parse(&fs::read_to_string(path)?),
        (None, None) => Err(Error::Parse("one of --model or --structure is required".into())),
    }
}

/// Write to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn print_json(value: &Value) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value).expect("JSON value serializes") + "\n"))
}

fn em_config(a: &EmArgs) -> EmConfig {
    EmConfig {
        restarts: a.restarts,
        max_iters: a.max_iters,
        rel_tol: a.rel_tol,
        seed: a.seed,
    }
}

fn dim_source(a: Option<DimSourceArg>) -> Option<DimSource> {
    a.map(|s| match s {
        DimSourceArg::Numeric => DimSource::Numeric,
        DimSourceArg::Decomposed => DimSource::Decomposed,
        DimSourceArg::Bound => DimSource::Bound,
    })
}

/// Bound-only report; HLC models have no pairwise bound.
fn bound_report(m: &ModelSpec) -> Result<DimensionReport> {
    if m.is_latent_class() {
        return bound_db(m);
    }
    let ds = m.standard_dimension();
    let dc = m.complete_dimension();
    Ok(DimensionReport {
        model: m.describe(),
        ds,
        dc,
        dp: None,
        db: ds.min(dc),
        de_numeric: None,
        de_decomposed: None,
        corrections: Vec::new(),
        known_exception: false,
        regularized_from: None,
    })
}

fn key_value_table(value: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = value {
        let width = map.keys().map(String::len).max().unwrap_or(0);
        for (k, v) in map {
            let shown = match v {
                Value::String(s) => s.clone(),
                Value::Null => "-".to_string(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "{k:<width$}  {shown}");
        }
    }
    out
}

fn dim(a: DimArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let cache = DimensionCache::numeric(a.draws, a.seed);
    let method = a.method.unwrap_or(if m.structure().hidden().len() <= 1 {
        DimMethod::Numeric
    } else {
        DimMethod::Decomposed
    });
    let report = match method {
        DimMethod::Numeric => {
            let mut r = bound_report(&m)?;
            let est = effective_dim_numeric(&m, a.draws, a.seed)?;
            est.require_reliable(&m)?;
            r.de_numeric = Some(est);
            r
        }
        DimMethod::Decomposed => hlc_effective_dim(&m, &cache, false)?,
        DimMethod::Both => {
            let mut r = hlc_effective_dim(&m, &cache, false)?;
            let est = effective_dim_numeric(&m, a.draws, a.seed)?;
            let direct = est.require_reliable(&m)?;
            let decomposed = r.de_decomposed.unwrap_or(direct);
            if direct != decomposed {
                return Err(Error::PathMismatch {
                    model: m.describe(),
                    decomposed,
                    direct,
                });
            }
            r.de_numeric = Some(est);
            if m.is_latent_class() {
                let b = bound_db(&m)?;
                r.dp = b.dp;
                r.db = b.db;
            }
            r
        }
    };
    let mut value = report.to_json();
    value["de"] = json!(report.effective());
    if a.table {
        emit(&key_value_table(&value))?;
    } else {
        print_json(&value)?;
    }
    Ok(())
}

fn bound(a: ModelArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let report = bound_db(&m)?;
    let pair = pairwise_bound_dp(&m)?;
    let names = |idx: &[usize]| -> Vec<String> {
        let s = m.structure();
        idx.iter().map(|&i| s.name(s.observed()[i]).to_string()).collect()
    };
    let value = json!({
        "model": report.model,
        "ds": report.ds,
        "dc": report.dc,
        "dp": report.dp,
        "db": report.db,
        "dp_from_complete": pair.from_complete,
        "bipartition": {
            "left": names(&pair.bipartition.left),
            "right": names(&pair.bipartition.right),
            "left_card": pair.bipartition.left_card.to_string(),
            "right_card": pair.bipartition.right_card.to_string(),
        },
        "known_exception": report.known_exception,
        "de_from_bound": bound_effective_dim(&m)?,
        "standard_bound_applies": standard_bound_applies(&m)?,
    });
    if a.table {
        emit(&key_value_table(&value))?;
    } else {
        print_json(&value)?;
    }
    Ok(())
}

fn show(a: ModelArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let s = m.structure();
    let regularity = m.regularity();
    let variables: Vec<Value> = (0..s.len())
        .map(|i| {
            json!({
                "name": s.name(i),
                "cardinality": s.card(i),
                "role": s.variable(i).role.to_string(),
                "parent": s.parent(i).map(|p| s.name(p)),
            })
        })
        .collect();
    let hidden: Vec<Value> = s
        .hidden()
        .iter()
        .map(|&h| {
            json!({
                "name": s.name(h),
                "cardinality": s.card(h),
                "cap": cardinality_cap(s, h),
                "strict": requires_strict(s, h),
            })
        })
        .collect();
    let locals: Vec<Value> = m
        .local_lc_models()
        .into_iter()
        .map(|(h, lc)| json!({"node": s.name(h), "model": lc.describe()}))
        .collect();
    let value = json!({
        "model": m.describe(),
        "variables": variables,
        "hidden": hidden,
        "ds": m.standard_dimension(),
        "dc": m.complete_dimension(),
        "regular": regularity.regular,
        "violations": regularity.violations.iter().map(|&h| s.name(h)).collect::<Vec<_>>(),
        "regularized": m.regularize().describe(),
        "local_models": locals,
    });
    if a.table {
        let mut out = format!("model  {}\n", m.describe());
        let _ = writeln!(out, "ds     {}\ndc     {}", m.standard_dimension(), m.complete_dimension());
        let _ = writeln!(out, "regular {}", regularity.regular);
        out.push_str(&m.to_structure_file());
        emit(&out)?;
    } else {
        print_json(&value)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let data = Dataset::read_csv_path(&a.data, &m)?;
    let result = em_fit(&m, &data, &em_config(&a.em))?;
    let doc = result.params.to_document(m.structure());
    if let Some(path) = &a.params_out {
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    print_json(&json!({
        "model": m.describe(),
        "n": data.total(),
        "loglik": result.loglik,
        "iterations": result.iterations,
        "converged": result.converged,
        "restarts": result.restarts_used,
        "best_restart": result.best_restart,
        "params": doc,
    }))?;
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let data = Dataset::read_csv_path(&a.data, &m)?;
    let which: Vec<ScoreName> = if a.score.eq_ignore_ascii_case("all") {
        ScoreName::ALL.to_vec()
    } else {
        vec![a.score.parse()?]
    };
    let oracle = DimensionOracle::new(a.draws, a.em.seed);
    let de = oracle.effective_dim(&m, dim_source(a.dim_source))?;
    let result = em_fit(&m, &data, &em_config(&a.em))?;
    let scores = FitScores::compute(&m, &result, &data, de)?;
    let reports: Vec<Value> = which
        .iter()
        .map(|&w| serde_json::to_value(scores.report(w)))
        .collect::<std::result::Result<_, _>>()?;
    if reports.len() == 1 {
        print_json(&reports[0])?;
    } else {
        print_json(&Value::Array(reports))?;
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidRange(format!("expected LO:HI, got '{text}'"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn select(a: SelectArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let data = Dataset::read_csv_path(&a.data, &m)?;
    let which: ScoreName = a.score.parse()?;
    let range = a.range.as_deref().map(parse_range).transpose()?;
    if range.is_some() && !m.is_latent_class() {
        return Err(Error::InvalidRange("--range applies to LC models only".into()));
    }
    let oracle = DimensionOracle::new(a.draws, a.em.seed);
    let config = SearchConfig {
        em: em_config(&a.em),
        draws: a.draws,
        dim_source: dim_source(a.dim_source),
    };
    let evaluator = Evaluator::new(&data, config, &oracle);
    let (_, trace) = select_cardinality(m.structure(), &data, which, range, &evaluator)?;
    let text = serde_json::to_string_pretty(&trace)? + "\n";
    if let Some(path) = &a.out {
        fs::write(path, &text)?;
    }
    if a.table {
        emit(&trace.to_table())?;
    } else {
        emit(&text)?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let plan = ExperimentPlan::from_json(&fs::read_to_string(&a.plan)?)?;
    let start = Instant::now();
    let records = run_plan(&plan)?;
    let summary = write_outputs(&a.out, &records)?;
    fs::write(a.out.join("plan.json"), plan.to_json() + "\n")?;
    let failures = records.iter().filter(|r| r.failed()).count();
    eprintln!(
        "{} cells, {} failed, {:.1}s",
        records.len(),
        failures,
        start.elapsed().as_secs_f64()
    );
    emit(&summary.table_csv())?;
    Ok(())
}

fn sample(a: SampleArgs) -> Result<()> {
    let m = load_model(&a.source)?;
    let params = match &a.params {
        Some(path) => {
            let doc: ParametersDocument = serde_json::from_str(&fs::read_to_string(path)?)?;
            Parameters::from_document(m.structure(), &doc)?
        }
        None => random_parameters(&m, derive_seed(a.seed, &[0])),
    };
    let data = sample_dataset(&m, &params, a.n, derive_seed(a.seed, &[1]))?;
    match &a.out {
        Some(path) => write_data(&data, path),
        None => {
            let mut buf = Vec::new();
            data.write_csv(&mut buf)?;
            emit(&String::from_utf8_lossy(&buf))
        }
    }
}

fn write_data(data: &Dataset, path: &Path) -> Result<()> {
    data.write_csv(fs::File::create(path)?)
}

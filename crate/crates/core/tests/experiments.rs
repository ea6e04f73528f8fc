use hlcdim::experiments::{run_plan, summarize, write_records_csv, ExperimentPlan, ParamMode};
use hlcdim::learning::EmConfig;
use hlcdim::scoring::ScoreName;

fn small_plan(generative: &str, n_params: usize, sizes: &[usize], scores: &[ScoreName]) -> ExperimentPlan {
    let mut plan = ExperimentPlan::lc_preset(generative, n_params, 0);
    plan.sample_sizes = sizes.to_vec();
    plan.scores = scores.to_vec();
    plan.em = EmConfig {
        restarts: 4,
        ..EmConfig::default()
    };
    plan
}

#[test]
fn one_record_per_cell() {
    let plan = small_plan("2:2,2,2", 3, &[200, 400], &[ScoreName::Bic, ScoreName::CsPlus]);
    let records = run_plan(&plan).unwrap();
    assert_eq!(records.len(), 3 * 2 * 2);
    assert!(records.iter().all(|r| !r.failed()));
    let summary = summarize(&records);
    assert_eq!(summary.rows.len(), 4);
    assert!(summary.rows.iter().all(|r| r.cells == 3));
    // at least one row per sample size is marked as the best
    for n in [200, 400] {
        assert!(summary.rows.iter().any(|r| r.sample_size == n && r.marked));
    }
}

#[test]
fn reruns_and_summaries_are_reproducible() {
    let plan = small_plan("2:2,2,2", 2, &[300], &[ScoreName::BicPlus]);
    let a = run_plan(&plan).unwrap();
    let b = run_plan(&plan).unwrap();
    let csv = |records| {
        let mut out = Vec::new();
        write_records_csv(records, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    };
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(summarize(&a).long_csv(), summarize(&a).long_csv());
    assert!(csv(&a).starts_with("param_index,sample_size,score,selected,hidden_cards,kl_bits,error\n"));
}

#[test]
fn plans_round_trip_and_reject_bad_input() {
    let plan = ExperimentPlan::hlc_preset("5,3,3:2,2,2,2,2", 10, 7);
    let again = ExperimentPlan::from_json(&plan.to_json()).unwrap();
    assert_eq!(again.to_json(), plan.to_json());

    let mut bad = small_plan("8:2,2,2,2", 1, &[100], &[ScoreName::Bic]);
    bad.mode = ParamMode::DeterministicBlock;
    bad.block = vec!["O1".into(), "O2".into()];
    assert!(bad.validate().is_err());
    bad.block.push("O3".into());
    assert!(bad.validate().is_ok());
    assert!(ExperimentPlan::from_json(r#"{"generative": "2:2,2", "n_params": 1, "sample_sizes": [10], "extra": 1}"#).is_err());
}

#[test]
fn five_leaf_selections_fit_closely() {
    let mut plan = ExperimentPlan::hlc_preset("5,3,3:2,2,2,2,2", 5, 0);
    plan.sample_sizes = vec![27_000];
    plan.scores = vec![ScoreName::Bic, ScoreName::BicPlus];
    let summary = summarize(&run_plan(&plan).unwrap());
    for row in &summary.rows {
        assert!(row.mean_kl_bits.is_finite() && row.mean_kl_bits < 0.05, "{row:?}");
    }
}

fn majority_selecting_two(which: &[ScoreName]) {
    let plan = small_plan("2:2,2,2,2", 10, &[64_000], &ScoreName::ALL);
    let records = run_plan(&plan).unwrap();
    for &score in which {
        let hits = records.iter().filter(|r| r.score == score && r.hidden_cards == [2]).count();
        assert!(hits > 5, "{score}: {hits} of 10");
    }
}

#[test]
fn binary_lc_data_selects_two_states_in_most_cells() {
    majority_selecting_two(&[ScoreName::Bic, ScoreName::BicPlus, ScoreName::Cs]);
}

/// With the flat completed-data prior, CS charges about `½·ln(n·p(x))` per
/// parameter of hidden state `x`, well below the `½·ln n` that the dimension
/// correction refunds, so CS_plus drifts towards the saturated model. Run
/// with `--ignored` to see the current outcome.
#[test]
#[ignore = "CS_plus favours saturated LC models under the flat prior"]
fn cs_plus_selects_two_states_in_most_cells() {
    majority_selecting_two(&[ScoreName::CsPlus]);
}

fn mean_selected_cardinalities() -> [f64; 4] {
    let mut plan = small_plan("8:2,2,2,2", 10, &[256_000], &ScoreName::ALL);
    plan.em = EmConfig::default();
    let summary = summarize(&run_plan(&plan).unwrap());
    ScoreName::ALL.map(|s| summary.row(s, 256_000).unwrap().mean_hidden_cards[0])
}

/// Statistical: the ordering of mean selected cardinalities is a trend over
/// parametrizations and can fail for unlucky seeds at small scale.
#[test]
fn dimension_corrected_scores_select_larger_models() {
    let [bic, bic_plus, cs, cs_plus] = mean_selected_cardinalities();
    assert!(bic_plus.min(cs_plus) >= bic.max(cs), "BIC {bic} BIC+ {bic_plus} CS {cs} CS+ {cs_plus}");
}

#[test]
#[ignore = "CS_plus favours saturated LC models under the flat prior"]
fn bic_plus_selects_larger_models_than_cs_plus() {
    let [_, bic_plus, _, cs_plus] = mean_selected_cardinalities();
    assert!(bic_plus >= cs_plus, "BIC+ {bic_plus} CS+ {cs_plus}");
}

#[test]
fn outputs_are_written_as_csv_files() {
    let plan = small_plan("2:2,2,2", 1, &[200], &[ScoreName::Bic]);
    let records = run_plan(&plan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    hlcdim::experiments::write_outputs(dir.path(), &records).unwrap();
    for name in ["records.csv", "summary.csv", "summary_long.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().count() >= 2, "{name}");
    }
}

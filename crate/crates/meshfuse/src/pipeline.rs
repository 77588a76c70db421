//! End-to-end experiment steps shared by the CLI and the acceptance suite:
//! generate the suite, run a strategy over it, train the bundle, and build
//! the comparison reports.

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::exec;
use crate::metrics::{
    aggregate, bootstrap_ci, per_scenario_table, wilcoxon_signed_rank, MetricsSummary, PdrTable,
    WilcoxonResult,
};
use crate::models::{train_bundle, ModelBundle};
use crate::scenario::{self, Scenario};
use crate::sim::{self, HopLogRecord, Strategy};

/// Generates the configured scenario suite (ids 1..=N).
pub fn generate_suite(cfg: &ExperimentConfig) -> Result<Vec<Scenario>> {
    let configs = cfg.suite.scenario_configs()?;
    let results = exec::ordered_map(&configs, |(id, sc)| scenario::generate(sc, *id));
    results.into_iter().collect()
}

/// Runs one strategy over the whole suite.
pub fn run_strategy(
    scenarios: &[Scenario],
    cfg: &ExperimentConfig,
    strategy: Strategy,
    bundle: Option<&ModelBundle>,
) -> Result<Vec<HopLogRecord>> {
    sim::run_suite(scenarios, &cfg.simulation, strategy, bundle)
}

/// Trains the model bundle from baseline logs.
pub fn train(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &ExperimentConfig,
) -> Result<ModelBundle> {
    train_bundle(logs, scenarios, &cfg.simulation, cfg.training.seed)
}

/// Everything `compare` reports: pooled summaries, the per-scenario PDR
/// matrix, and the paired full-model-vs-baseline statistics.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub summaries: Vec<MetricsSummary>,
    pub table: PdrTable,
    /// Per-scenario PDR differences (abcd - baseline), percentage points.
    pub pdr_diffs_pp: Vec<f64>,
    pub mean_diff_pp: f64,
    pub wilcoxon: WilcoxonResult,
    pub ci_level: f64,
    pub ci_pp: (f64, f64),
}

/// Builds the comparison across the three strategy logs. All logs must
/// cover the same scenario set.
pub fn compare(
    baseline: &[HopLogRecord],
    abc: &[HopLogRecord],
    abcd: &[HopLogRecord],
    cfg: &ExperimentConfig,
) -> Result<ComparisonReport> {
    let summaries = vec![aggregate(baseline)?, aggregate(abc)?, aggregate(abcd)?];
    let table = per_scenario_table(&[
        (Strategy::Baseline, baseline),
        (Strategy::Abc, abc),
        (Strategy::Abcd, abcd),
    ])?;
    let base_col = table.column(Strategy::Baseline).expect("baseline column");
    let abcd_col = table.column(Strategy::Abcd).expect("abcd column");
    let pdr_diffs_pp: Vec<f64> = abcd_col
        .iter()
        .zip(&base_col)
        .map(|(a, b)| a - b)
        .collect();
    let mean_diff_pp = pdr_diffs_pp.iter().sum::<f64>() / pdr_diffs_pp.len() as f64;
    let wilcoxon = wilcoxon_signed_rank(&pdr_diffs_pp)?;
    let ci_pp = bootstrap_ci(
        &pdr_diffs_pp,
        cfg.comparison.ci_level,
        cfg.comparison.ci_resamples,
        cfg.comparison.ci_seed,
    )?;
    Ok(ComparisonReport {
        summaries,
        table,
        pdr_diffs_pp,
        mean_diff_pp,
        wilcoxon,
        ci_level: cfg.comparison.ci_level,
        ci_pp,
    })
}

/// Renders the statistics report (key=value lines).
pub fn render_stats_report(r: &ComparisonReport) -> String {
    format!(
        "comparison=abcd_vs_baseline\nn_scenarios={}\nmean_pdr_diff_pp={:.6}\nwilcoxon_n_used={}\nwilcoxon_w_plus={:.6}\nwilcoxon_p_value={:.9}\nwilcoxon_method={}\nci_level={}\nci_low_pp={:.6}\nci_high_pp={:.6}\n",
        r.table.scenario_ids.len(),
        r.mean_diff_pp,
        r.wilcoxon.n_used,
        r.wilcoxon.w_plus,
        r.wilcoxon.p_value,
        r.wilcoxon.method.as_str(),
        r.ci_level,
        r.ci_pp.0,
        r.ci_pp.1,
    )
}

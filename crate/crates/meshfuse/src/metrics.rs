//! Network-level metrics from hop logs, per-scenario comparison tables,
//! the Wilcoxon signed-rank test and a percentile bootstrap interval.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, salt};
use crate::sim::{HopLogRecord, Strategy};
use crate::util::write_atomic;

/// Delivery metrics for one pool of messages under one strategy. Averages
/// are over delivered messages only and absent when nothing was delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub mode: Strategy,
    pub pdr_percent: f64,
    pub avg_ttl_left: Option<f64>,
    pub avg_delay_s: Option<f64>,
    pub avg_hops: Option<f64>,
    pub messages_total: usize,
    pub messages_delivered: usize,
}

struct MessageView {
    delivered: bool,
    total_hops: u32,
    total_delay_s: f64,
    ttl_initial: u32,
}

fn message_views(logs: &[HopLogRecord]) -> Result<(Strategy, BTreeMap<(u32, u32), MessageView>)> {
    let Some(first) = logs.first() else {
        return Err(Error::Data("cannot aggregate an empty hop log".into()));
    };
    let mode = first.mode;
    let mut views: BTreeMap<(u32, u32), MessageView> = BTreeMap::new();
    for r in logs {
        if r.mode != mode {
            return Err(Error::Mismatch(
                "hop log mixes routing modes; aggregate one mode at a time".into(),
            ));
        }
        let view = views.entry((r.scenario_id, r.message_id)).or_insert(MessageView {
            delivered: r.final_delivered,
            total_hops: r.total_hops,
            total_delay_s: r.total_delay_s,
            ttl_initial: r.ttl_initial(),
        });
        if view.delivered != r.final_delivered || view.total_hops != r.total_hops {
            return Err(Error::Mismatch(format!(
                "inconsistent terminal fields for message ({}, {})",
                r.scenario_id, r.message_id
            )));
        }
    }
    Ok((mode, views))
}

/// Pools every message in `logs` into one summary.
pub fn aggregate(logs: &[HopLogRecord]) -> Result<MetricsSummary> {
    let (mode, views) = message_views(logs)?;
    let total = views.len();
    let delivered: Vec<&MessageView> = views.values().filter(|v| v.delivered).collect();
    let n_del = delivered.len();
    let avg = |f: &dyn Fn(&MessageView) -> f64| -> Option<f64> {
        if n_del == 0 {
            None
        } else {
            Some(delivered.iter().map(|v| f(v)).sum::<f64>() / n_del as f64)
        }
    };
    Ok(MetricsSummary {
        mode,
        pdr_percent: 100.0 * n_del as f64 / total as f64,
        avg_ttl_left: avg(&|v| (v.ttl_initial - v.total_hops) as f64),
        avg_delay_s: avg(&|v| v.total_delay_s),
        avg_hops: avg(&|v| v.total_hops as f64),
        messages_total: total,
        messages_delivered: n_del,
    })
}

/// Summary restricted to one scenario id.
pub fn aggregate_scenario(logs: &[HopLogRecord], scenario_id: u32) -> Result<MetricsSummary> {
    let subset: Vec<HopLogRecord> = logs
        .iter()
        .filter(|r| r.scenario_id == scenario_id)
        .cloned()
        .collect();
    aggregate(&subset)
}

/// Distinct scenario ids present in a log, ascending.
pub fn scenario_ids(logs: &[HopLogRecord]) -> Vec<u32> {
    let mut ids: Vec<u32> = logs.iter().map(|r| r.scenario_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Per-scenario PDR matrix (rows: scenarios, columns: modes).
#[derive(Debug, Clone, PartialEq)]
pub struct PdrTable {
    pub scenario_ids: Vec<u32>,
    pub modes: Vec<Strategy>,
    /// `cells[row][col]` = PDR percent of `scenario_ids[row]` under
    /// `modes[col]`.
    pub cells: Vec<Vec<f64>>,
}

impl PdrTable {
    pub fn column(&self, mode: Strategy) -> Option<Vec<f64>> {
        let col = self.modes.iter().position(|&m| m == mode)?;
        Some(self.cells.iter().map(|row| row[col]).collect())
    }
}

/// Builds the per-scenario delivery matrix; all mode logs must cover the
/// same scenario set.
pub fn per_scenario_table(per_mode: &[(Strategy, &[HopLogRecord])]) -> Result<PdrTable> {
    if per_mode.is_empty() {
        return Err(Error::Data("no mode logs supplied".into()));
    }
    let ids = scenario_ids(per_mode[0].1);
    for (mode, logs) in per_mode {
        let other = scenario_ids(logs);
        if other != ids {
            return Err(Error::Mismatch(format!(
                "mode `{mode}` covers scenarios {other:?}, expected {ids:?}"
            )));
        }
    }
    let mut cells = Vec::with_capacity(ids.len());
    for &sid in &ids {
        let mut row = Vec::with_capacity(per_mode.len());
        for (_, logs) in per_mode {
            row.push(aggregate_scenario(logs, sid)?.pdr_percent);
        }
        cells.push(row);
    }
    Ok(PdrTable {
        scenario_ids: ids,
        modes: per_mode.iter().map(|(m, _)| *m).collect(),
        cells,
    })
}

/// How a Wilcoxon p-value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    /// Full distribution of the rank sum over all 2^n sign assignments
    /// (computed by subset-sum convolution).
    Exact,
    /// Normal approximation with tie correction and continuity correction.
    NormalApprox,
}

impl WilcoxonMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            WilcoxonMethod::Exact => "exact",
            WilcoxonMethod::NormalApprox => "normal_approx",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Pairs remaining after zero differences are dropped.
    pub n_used: usize,
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Midranks of `|values|` (1-based, ties averaged).
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .abs()
            .partial_cmp(&values[j].abs())
            .expect("finite differences")
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]].abs() == values[order[i]].abs() {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    ranks
}

/// Exceeds `n <= this` uses the exact distribution.
pub const WILCOXON_EXACT_LIMIT: usize = 20;

/// Two-sided Wilcoxon signed-rank test on paired differences.
///
/// Zero differences are dropped; at least 5 nonzero pairs are required.
/// For `n <= 20` the p-value is exact over all 2^n sign assignments of the
/// midranked |differences|; beyond that a normal approximation with tie and
/// continuity corrections is used.
pub fn wilcoxon_signed_rank(paired_diffs: &[f64]) -> Result<WilcoxonResult> {
    let nonzero: Vec<f64> = paired_diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::Data(
            "all paired differences are zero; the test is degenerate".into(),
        ));
    }
    let n = nonzero.len();
    if n < 5 {
        return Err(Error::Data(format!(
            "need at least 5 nonzero paired differences, got {n}"
        )));
    }
    let ranks = midranks(&nonzero);
    let w_plus: f64 = ranks
        .iter()
        .zip(&nonzero)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();

    if n <= WILCOXON_EXACT_LIMIT {
        // Doubled midranks are exact integers; convolve subset sums.
        let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut counts = vec![0u64; total + 1];
        counts[0] = 1;
        for &r in &doubled {
            for s in (r..=total).rev() {
                counts[s] += counts[s - r];
            }
        }
        let w2 = (2.0 * w_plus).round() as usize;
        let assignments = (1u64 << n) as f64;
        let p_le: f64 = counts[..=w2].iter().sum::<u64>() as f64 / assignments;
        let p_ge: f64 = counts[w2..].iter().sum::<u64>() as f64 / assignments;
        let p_value = (2.0 * p_le.min(p_ge)).min(1.0);
        Ok(WilcoxonResult { n_used: n, w_plus, p_value, method: WilcoxonMethod::Exact })
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
        // Tie correction: subtract sum(t^3 - t)/48 over tie groups.
        let mut sorted: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        let sd = var.sqrt();
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
        let p_value = erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
        Ok(WilcoxonResult { n_used: n, w_plus, p_value, method: WilcoxonMethod::NormalApprox })
    }
}

/// Complementary error function (Chebyshev fit, fractional error < 1.2e-7).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Percentile bootstrap confidence interval for the mean difference.
pub fn bootstrap_ci(
    paired_diffs: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if paired_diffs.len() < 2 {
        return Err(Error::Data("need at least 2 paired differences".into()));
    }
    if !(0.0 < level && level < 1.0) || resamples == 0 {
        return Err(Error::Config("level must be in (0,1) and resamples >= 1".into()));
    }
    let n = paired_diffs.len();
    let mut rng = rng::stream(seed, salt::BOOTSTRAP, 0);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            (0..n)
                .map(|_| paired_diffs[rng.random_range(0..n)])
                .sum::<f64>()
                / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| -> f64 {
        let h = (means.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        means[lo] + (h - lo as f64) * (means[hi] - means[lo])
    };
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile(alpha), quantile(1.0 - alpha)))
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Renders the strategy-comparison summary (one row per mode, the four
/// delivery metrics as columns).
pub fn render_summary_csv(summaries: &[MetricsSummary]) -> String {
    let mut out = String::from("mode,pdr_percent,avg_ttl_left,avg_delay_s,avg_hops\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{:.6},{},{},{}\n",
            s.mode,
            s.pdr_percent,
            opt_cell(s.avg_ttl_left),
            opt_cell(s.avg_delay_s),
            opt_cell(s.avg_hops),
        ));
    }
    out
}

/// Renders the per-scenario PDR matrix (plot-ready).
pub fn render_pdr_table_csv(table: &PdrTable) -> String {
    let mut out = String::from("scenario_id");
    for m in &table.modes {
        out.push_str(&format!(",{m}"));
    }
    out.push('\n');
    for (sid, row) in table.scenario_ids.iter().zip(&table.cells) {
        out.push_str(&sid.to_string());
        for cell in row {
            out.push_str(&format!(",{cell:.6}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_report(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::ScoreBreakdown;
    use crate::sim::HopOutcome;

    fn record(
        scenario_id: u32,
        message_id: u32,
        hop_index: u32,
        delivered: bool,
        total_hops: u32,
        total_delay_s: f64,
        hop_delay_s: f64,
    ) -> HopLogRecord {
        HopLogRecord {
            scenario_id,
            message_id,
            mode: Strategy::Baseline,
            hop_index,
            from_id: 1,
            to_id: Some(2),
            ttl_left_at_hop: 10 - hop_index,
            buffer_ratio_at_to: Some(0.25),
            distance_to_target_m: Some(30.0),
            hop_delay_s,
            candidate_ids: vec![2, 3],
            chosen_id: Some(2),
            score_breakdown: None,
            hop_outcome: if delivered || hop_index + 1 < total_hops.max(1) {
                HopOutcome::Forwarded
            } else {
                HopOutcome::DroppedTtl
            },
            final_delivered: delivered,
            total_delay_s,
            total_hops,
        }
    }

    #[test]
    fn aggregate_hand_case() {
        // 10 messages, all delivered in 1 hop, TTL 10, 10 s each.
        let logs: Vec<HopLogRecord> =
            (1..=10).map(|m| record(1, m, 0, true, 1, 10.0, 10.0)).collect();
        let s = aggregate(&logs).unwrap();
        assert_eq!(s.pdr_percent, 100.0);
        assert_eq!(s.avg_ttl_left, Some(9.0));
        assert_eq!(s.avg_delay_s, Some(10.0));
        assert_eq!(s.avg_hops, Some(1.0));
        assert_eq!(s.messages_total, 10);
    }

    #[test]
    fn zero_delivered_has_absent_averages() {
        let logs: Vec<HopLogRecord> =
            (1..=4).map(|m| record(1, m, 0, false, 1, 0.0, 0.0)).collect();
        let s = aggregate(&logs).unwrap();
        assert_eq!(s.pdr_percent, 0.0);
        assert_eq!(s.avg_ttl_left, None);
        assert_eq!(s.avg_delay_s, None);
        assert_eq!(s.avg_hops, None);
    }

    #[test]
    fn empty_log_errors() {
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn pooled_equals_weighted_mean_of_scenarios() {
        let mut logs = Vec::new();
        for m in 1..=10 {
            logs.push(record(1, m, 0, m <= 7, 1, 12.0, 12.0));
        }
        for m in 1..=5 {
            logs.push(record(2, m, 0, m <= 1, 2, 30.0, 15.0));
        }
        let pooled = aggregate(&logs).unwrap();
        let s1 = aggregate_scenario(&logs, 1).unwrap();
        let s2 = aggregate_scenario(&logs, 2).unwrap();
        let weighted = (s1.pdr_percent * s1.messages_total as f64
            + s2.pdr_percent * s2.messages_total as f64)
            / (s1.messages_total + s2.messages_total) as f64;
        assert!((pooled.pdr_percent - weighted).abs() < 1e-9);
        // delivered-weighted mean for the delivered-only averages
        let del_weighted = (s1.avg_delay_s.unwrap() * s1.messages_delivered as f64
            + s2.avg_delay_s.unwrap() * s2.messages_delivered as f64)
            / (s1.messages_delivered + s2.messages_delivered) as f64;
        assert!((pooled.avg_delay_s.unwrap() - del_weighted).abs() < 1e-9);
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let mut logs: Vec<HopLogRecord> = (1..=20)
            .map(|m| record(1, m, 0, m % 3 == 0, 1, 10.0, 10.0))
            .collect();
        let a = aggregate(&logs).unwrap();
        logs.reverse();
        let b = aggregate(&logs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_requires_matching_scenarios() {
        let a: Vec<HopLogRecord> = vec![record(1, 1, 0, true, 1, 1.0, 1.0)];
        let b: Vec<HopLogRecord> = vec![record(2, 1, 0, true, 1, 1.0, 1.0)];
        let err =
            per_scenario_table(&[(Strategy::Baseline, a.as_slice()), (Strategy::Abc, b.as_slice())])
                .unwrap_err();
        assert!(matches!(err, Error::Mismatch(_)));
    }

    #[test]
    fn table_cells_match_aggregate() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for sid in 1..=3 {
            for m in 1..=10 {
                a.push(record(sid, m, 0, m <= 5, 1, 5.0, 5.0));
                let mut r = record(sid, m, 0, m <= 8, 1, 5.0, 5.0);
                r.mode = Strategy::Abc;
                b.push(r);
            }
        }
        let t = per_scenario_table(&[
            (Strategy::Baseline, a.as_slice()),
            (Strategy::Abc, b.as_slice()),
        ])
        .unwrap();
        assert_eq!(t.cells.len(), 3);
        for (row, &sid) in t.cells.iter().zip(&t.scenario_ids) {
            assert_eq!(row[0], aggregate_scenario(&a, sid).unwrap().pdr_percent);
            assert_eq!(row[1], aggregate_scenario(&b, sid).unwrap().pdr_percent);
            assert!(row.iter().all(|c| (0.0..=100.0).contains(c)));
        }
    }

    #[test]
    fn wilcoxon_all_positive_n10() {
        let diffs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&diffs).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert!((r.p_value - 2.0 / 1024.0).abs() < 1e-15, "p={}", r.p_value);
    }

    #[test]
    fn wilcoxon_symmetric_diffs_is_nonsignificant() {
        let diffs = vec![1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0];
        let r = wilcoxon_signed_rank(&diffs).unwrap();
        assert!(r.p_value >= 0.99, "p={}", r.p_value);
    }

    #[test]
    fn wilcoxon_matches_enumeration_oracle() {
        // Oracle: brute-force enumeration of all 2^n sign assignments.
        use rand::Rng;
        let mut rng = crate::rng::stream(303, 11, 0);
        for _ in 0..60 {
            let n = rng.random_range(5..=12);
            let diffs: Vec<f64> = (0..n)
                .map(|_| {
                    // coarse grid induces ties
                    let v = (rng.random::<f64>() * 8.0).floor() + 1.0;
                    if rng.random::<f64>() < 0.5 {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let fast = wilcoxon_signed_rank(&diffs).unwrap();
            let slow = enumeration_p(&diffs);
            assert!(
                (fast.p_value - slow).abs() < 1e-12,
                "n={n} fast={} slow={slow}",
                fast.p_value
            );
        }
    }

    fn enumeration_p(diffs: &[f64]) -> f64 {
        let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
        let ranks = midranks(&nonzero);
        let n = nonzero.len();
        let w_obs: f64 = ranks
            .iter()
            .zip(&nonzero)
            .filter(|(_, &d)| d > 0.0)
            .map(|(r, _)| r)
            .sum();
        let mut le = 0u64;
        let mut ge = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w <= w_obs + 1e-9 {
                le += 1;
            }
            if w >= w_obs - 1e-9 {
                ge += 1;
            }
        }
        let total = (1u64 << n) as f64;
        (2.0 * (le as f64 / total).min(ge as f64 / total)).min(1.0)
    }

    #[test]
    fn wilcoxon_degenerate_inputs() {
        assert!(wilcoxon_signed_rank(&[0.0; 8]).is_err());
        assert!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn wilcoxon_normal_approximation_for_large_n() {
        let diffs: Vec<f64> = (1..=30).map(|i| if i % 5 == 0 { -(i as f64) } else { i as f64 }).collect();
        let r = wilcoxon_signed_rank(&diffs).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn erfc_matches_known_quantiles() {
        // 2*(1 - Phi(1.96)) = erfc(1.96/sqrt(2)) ~ 0.0499958
        let p = erfc(1.959964 / std::f64::consts::SQRT_2);
        assert!((p - 0.05).abs() < 1e-5, "p={p}");
        assert!((erfc(0.0) - 1.0).abs() < 1e-6);
        assert!((erfc(-1.0) + erfc(1.0) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bootstrap_constant_diffs_collapse() {
        let (lo, hi) = bootstrap_ci(&[2.5; 10], 0.95, 500, 3).unwrap();
        assert_eq!((lo, hi), (2.5, 2.5));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let diffs = [1.0, 3.0, -2.0, 4.0, 0.5, 2.0];
        let a = bootstrap_ci(&diffs, 0.95, 2000, 9).unwrap();
        let b = bootstrap_ci(&diffs, 0.95, 2000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_contains_sample_mean() {
        use rand::Rng;
        let mut rng = crate::rng::stream(44, 5, 0);
        for case in 0..1000 {
            let n = rng.random_range(2..=20);
            let diffs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 - 4.0).collect();
            let mean = diffs.iter().sum::<f64>() / n as f64;
            let (lo, hi) = bootstrap_ci(&diffs, 0.95, 300, case).unwrap();
            assert!(lo <= mean + 1e-9 && mean <= hi + 1e-9, "case {case}: {lo} {mean} {hi}");
        }
    }

    #[test]
    fn log_round_trip_preserves_records() {
        use crate::sim::log;
        let mut r = record(3, 7, 0, true, 2, 22.5, 10.0);
        r.score_breakdown = Some(ScoreBreakdown {
            candidate_id: 2,
            a: 0.25,
            b: 1.5,
            c: 30.125,
            d: 0.75,
            combined: 0.11,
        });
        let r2 = record(3, 7, 1, true, 2, 22.5, 12.5);
        let text = log::to_csv(&[r, r2]);
        let parsed = log::from_csv(&text).unwrap();
        assert_eq!(log::to_csv(&parsed), text);
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].score_breakdown.as_ref().unwrap().c, 30.125);
    }
}

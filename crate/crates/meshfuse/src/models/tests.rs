use super::*;
use crate::scenario::{generate, Scenario, ScenarioConfig};
use crate::sim::{run_suite, Strategy};

fn world() -> (Vec<Scenario>, SimulationConfig, Vec<HopLogRecord>) {
    let mut scenarios = Vec::new();
    for i in 1..=2u32 {
        let cfg = ScenarioConfig {
            seed: 4000 + i as u64,
            node_count: 60,
            area_width: 300.0,
            area_height: 300.0,
            device_type_mix: [0.5, 0.3, 0.2],
            buffer_capacity_range: (10, 40),
        };
        scenarios.push(generate(&cfg, i).unwrap());
    }
    let mut cfg = SimulationConfig::default();
    cfg.messages_per_scenario = 50;
    let logs = run_suite(&scenarios, &cfg, Strategy::Baseline, None).unwrap();
    (scenarios, cfg, logs)
}

#[test]
fn dataset_a_rows_match_forwarded_hops() {
    let (scenarios, cfg, logs) = world();
    let ds = extract_dataset_a(&logs, &scenarios, &cfg).unwrap();
    let forwarded = logs
        .iter()
        .filter(|r| r.hop_outcome == HopOutcome::Forwarded)
        .count();
    assert_eq!(ds.len(), forwarded);
    assert!(ds.labels.iter().any(|&l| l == 1.0));
    assert!(ds.labels.iter().any(|&l| l == 0.0));
}

#[test]
fn dataset_a_labels_follow_message_outcome() {
    let (scenarios, cfg, logs) = world();
    let hops = replay_features(&logs, &scenarios, &cfg).unwrap();
    // Pick one delivered and one failed message and check their rows.
    let delivered_msg = hops.iter().find(|h| h.final_delivered).unwrap();
    let failed_msg = hops
        .iter()
        .find(|h| !h.final_delivered && h.hop_outcome == HopOutcome::Forwarded)
        .unwrap();
    let ds = extract_dataset_a(&logs, &scenarios, &cfg).unwrap();
    assert!(!ds.is_empty());
    // count rows for those messages
    let count_for = |sid: u32, mid: u32| {
        logs.iter()
            .filter(|r| {
                r.scenario_id == sid
                    && r.message_id == mid
                    && r.hop_outcome == HopOutcome::Forwarded
            })
            .count()
    };
    assert!(count_for(delivered_msg.scenario_id, delivered_msg.message_id) >= 1);
    assert!(count_for(failed_msg.scenario_id, failed_msg.message_id) >= 1);
}

#[test]
fn dataset_b_labels_count_down_to_one() {
    let (scenarios, cfg, logs) = world();
    let hops = replay_features(&logs, &scenarios, &cfg).unwrap();
    let ttl = cfg.ttl_initial as f64;
    // group rows per delivered message and verify the countdown
    let mut i = 0;
    let mut checked = 0;
    while i < hops.len() {
        let key = (hops[i].scenario_id, hops[i].message_id);
        let mut j = i;
        while j < hops.len() && (hops[j].scenario_id, hops[j].message_id) == key {
            j += 1;
        }
        if hops[i].final_delivered {
            let group: Vec<_> = hops[i..j]
                .iter()
                .filter(|h| h.hop_outcome == HopOutcome::Forwarded)
                .collect();
            let total = group.len() as u32;
            for (k, h) in group.iter().enumerate() {
                let label = (h.total_hops - h.hop_index) as f64;
                assert_eq!(label, (total - k as u32) as f64);
                assert!(label >= 1.0 && label <= ttl);
            }
            checked += 1;
        }
        i = j;
    }
    assert!(checked > 0);
}

#[test]
fn dataset_c_label_telescopes_to_total_delay() {
    let (scenarios, cfg, logs) = world();
    let ds = extract_dataset_c(&logs, &scenarios, &cfg).unwrap();
    assert!(!ds.is_empty());
    // hop 0 of each delivered message: label == total_delay_s
    let hops = replay_features(&logs, &scenarios, &cfg).unwrap();
    let mut row = 0;
    let mut i = 0;
    while i < hops.len() {
        let key = (hops[i].scenario_id, hops[i].message_id);
        let mut j = i;
        while j < hops.len() && (hops[j].scenario_id, hops[j].message_id) == key {
            j += 1;
        }
        if hops[i].final_delivered {
            let group: Vec<_> = hops[i..j]
                .iter()
                .filter(|h| h.hop_outcome == HopOutcome::Forwarded)
                .collect();
            for (k, h) in group.iter().enumerate() {
                if k == 0 {
                    assert!(
                        (ds.labels[row] - h.total_delay_s).abs() < 1e-6,
                        "hop-0 label {} vs total {}",
                        ds.labels[row],
                        h.total_delay_s
                    );
                }
                if k + 1 == group.len() {
                    assert!((ds.labels[row] - h.hop_delay_s).abs() < 1e-9);
                }
                row += 1;
            }
        }
        i = j;
    }
    assert_eq!(row, ds.len());
}

#[test]
fn dataset_d_has_one_positive_per_delivered_hop() {
    let (scenarios, cfg, logs) = world();
    let hops = replay_features(&logs, &scenarios, &cfg).unwrap();
    let ds = extract_dataset_d(&logs, &scenarios, &cfg).unwrap();
    let delivered_hops: Vec<_> = hops
        .iter()
        .filter(|h| h.final_delivered && h.hop_outcome == HopOutcome::Forwarded)
        .collect();
    let expected_rows: usize = delivered_hops.iter().map(|h| h.candidates.len()).sum();
    assert_eq!(ds.len(), expected_rows);
    let positives = ds.labels.iter().filter(|&&l| l == 1.0).count();
    assert_eq!(positives, delivered_hops.len(), "exactly one positive per hop");
    // positive fraction bounded by 1/mean candidate count
    let mean_candidates = expected_rows as f64 / delivered_hops.len() as f64;
    let pos_fraction = positives as f64 / ds.len() as f64;
    assert!(pos_fraction <= 1.0 / mean_candidates + 1e-9);
}

#[test]
fn single_candidate_hops_stay_in_dataset_d() {
    let (scenarios, cfg, logs) = world();
    let hops = replay_features(&logs, &scenarios, &cfg).unwrap();
    if let Some(h) = hops
        .iter()
        .find(|h| h.final_delivered && h.hop_outcome == HopOutcome::Forwarded && h.candidates.len() == 1)
    {
        assert_eq!(h.candidates[0].0, h.chosen.as_ref().unwrap().0);
    }
}

#[test]
fn extraction_is_repeatable() {
    let (scenarios, cfg, logs) = world();
    let a = extract_all(&logs, &scenarios, &cfg).unwrap();
    let b = extract_all(&logs, &scenarios, &cfg).unwrap();
    assert_eq!(a.a, b.a);
    assert_eq!(a.b, b.b);
    assert_eq!(a.c, b.c);
    assert_eq!(a.d, b.d);
}

#[test]
fn extraction_from_reloaded_file_matches_in_memory() {
    let (scenarios, cfg, logs) = world();
    let text = crate::sim::log::to_csv(&logs);
    let reloaded = crate::sim::log::from_csv(&text).unwrap();
    let mem = extract_all(&logs, &scenarios, &cfg).unwrap();
    let file = extract_all(&reloaded, &scenarios, &cfg).unwrap();
    assert_eq!(mem.a, file.a);
    assert_eq!(mem.b, file.b);
    assert_eq!(mem.c, file.c);
    assert_eq!(mem.d, file.d);
}

#[test]
fn replayed_features_respect_type_invariants() {
    let (scenarios, cfg, logs) = world();
    for h in replay_features(&logs, &scenarios, &cfg).unwrap() {
        if let Some((_, fv)) = &h.chosen {
            fv.validate().unwrap();
        }
        for (_, fv) in &h.candidates {
            fv.validate().unwrap();
        }
    }
}

#[test]
fn unknown_scenario_in_log_is_a_mismatch() {
    let (scenarios, cfg, mut logs) = world();
    logs[0].scenario_id = 99;
    let err = replay_features(&logs, &scenarios, &cfg).unwrap_err();
    assert!(matches!(err, Error::Mismatch(_)));
}

#[test]
fn bundle_training_is_deterministic_and_persistable() {
    let (scenarios, cfg, logs) = world();
    let b1 = train_bundle(&logs, &scenarios, &cfg, 7).unwrap();
    let b2 = train_bundle(&logs, &scenarios, &cfg, 7).unwrap();
    assert_eq!(b1, b2);

    let dir = tempfile::tempdir().unwrap();
    persist::save_bundle(&b1, dir.path()).unwrap();
    let loaded = persist::load_bundle(dir.path()).unwrap();
    assert_eq!(loaded, b1);

    // saving the reloaded bundle reproduces identical bytes
    let dir2 = tempfile::tempdir().unwrap();
    persist::save_bundle(&loaded, dir2.path()).unwrap();
    for f in ["model_a.txt", "model_b.txt", "model_c.txt", "model_d.txt", "normalizer_d.txt", persist::MANIFEST_FILE] {
        let x = std::fs::read(dir.path().join(f)).unwrap();
        let y = std::fs::read(dir2.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn predictions_stay_in_contract_ranges() {
    let (scenarios, cfg, logs) = world();
    let bundle = train_bundle(&logs, &scenarios, &cfg, 7).unwrap();
    let hops = replay_features(&logs, &scenarios, &cfg).unwrap();
    let mut seen = 0;
    for h in hops.iter().take(400) {
        for (_, fv) in &h.candidates {
            let a = bundle.predict_a(fv);
            let d = bundle.predict_d(fv);
            let b = bundle.predict_b(fv);
            let c = bundle.predict_c(fv);
            assert!((0.0..=1.0).contains(&a));
            assert!((0.0..=1.0).contains(&d));
            assert!(b >= 0.0 && b <= bundle.ttl_initial as f64);
            assert!(c >= 0.0);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn model_c_satisfies_its_normal_equations() {
    let (scenarios, cfg, logs) = world();
    let bundle = train_bundle(&logs, &scenarios, &cfg, 7).unwrap();
    let datasets = extract_all(&logs, &scenarios, &cfg).unwrap();
    let (c_train, _) =
        crate::learners::split_train_test(&datasets.c, VALIDATION_TRAIN_FRACTION, VALIDATION_SPLIT_SEED)
            .unwrap();
    assert!(bundle.model_c.normal_equation_residual(&c_train) < 1e-8);
}

#[test]
fn single_class_logs_are_rejected() {
    let (scenarios, cfg, logs) = world();
    let delivered_only: Vec<HopLogRecord> =
        logs.iter().filter(|r| r.final_delivered).cloned().collect();
    let err = train_bundle(&delivered_only, &scenarios, &cfg, 7).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
}

#[test]
fn validation_metrics_file_has_expected_rows() {
    let (scenarios, cfg, logs) = world();
    let bundle = train_bundle(&logs, &scenarios, &cfg, 7).unwrap();
    let csv = persist::metrics_csv(&bundle.validation);
    for needle in [
        "A,accuracy,",
        "A,f1,",
        "A,roc_auc,",
        "B,rmse,",
        "B,mae,",
        "B,r2,",
        "C,rmse,",
        "C,r2,",
        "D,roc_auc,",
        "D,recall_pos,",
    ] {
        assert!(csv.contains(needle), "missing `{needle}` in\n{csv}");
    }
}

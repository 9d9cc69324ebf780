use super::*;
use crate::data_io::{load_dataset, DatasetSpec};
use crate::decomposition::Method;
use crate::latent_model::LatentVariant;
use crate::mechanistic::{SyntheticConfig, SyntheticKind};
use crate::training::TrainConfig;
use proptest::prelude::*;

#[test]
fn metric_examples() {
    assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt());
    assert_eq!(mae(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5);
    let a = [0.1, 0.5, 0.2];
    assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    assert_eq!(mae(&a, &a).unwrap(), 0.0);
    let shifted: Vec<f64> = a.iter().map(|v| v + 0.25).collect();
    assert!((rmse(&a, &shifted).unwrap() - 0.25).abs() < 1e-15);
    assert!((mae(&a, &shifted).unwrap() - 0.25).abs() < 1e-15);
    assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    assert!(mae(&[], &[]).is_err());
}

#[test]
fn peak_example() {
    let mut truth = vec![0.0; 60];
    let mut pred = vec![0.0; 60];
    truth[50] = 0.2;
    pred[47] = 0.26;
    let p = peak_errors(&pred, &truth, 40..60).unwrap();
    assert_eq!(p.timing, 3);
    assert!((p.magnitude - 0.06).abs() < 1e-15);
    assert!((p.relative - 0.3).abs() < 1e-14);
    assert_eq!(peak_errors(&truth, &truth, 0..60).unwrap().timing, 0);
    assert!(peak_errors(&pred, &truth, 10..10).is_err());
    assert!(peak_errors(&pred, &truth, 50..61).is_err());
}

#[test]
fn flat_truth_peaks_at_window_start() {
    let flat = vec![0.1; 20];
    let p = peak_errors(&flat, &flat, 5..20).unwrap();
    assert_eq!(p.truth_index, 5);
    assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
    assert_eq!(argmax(&[]), None);
}

#[test]
fn recovery_examples() {
    let truth: Vec<RateTriple> = (0..30)
        .map(|i| RateTriple::new(0.3 + 0.1 * (i as f64 * 0.3).sin(), 0.1 + 0.001 * i as f64, 0.02 + 0.01 * (i as f64).cos()))
        .collect();
    let same = parameter_recovery(&truth, &truth).unwrap();
    assert_eq!(same.beta.rmse, 0.0);
    assert!((same.beta.correlation.unwrap() - 1.0).abs() < 1e-12);
    let shifted: Vec<RateTriple> = truth
        .iter()
        .map(|r| RateTriple::new(r.beta + 0.05, r.gamma, r.delta))
        .collect();
    let s = parameter_recovery(&shifted, &truth).unwrap();
    assert!((s.beta.rmse - 0.05).abs() < 1e-12);
    assert!((s.beta.correlation.unwrap() - 1.0).abs() < 1e-12);

    let z: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
    let mean = z.iter().sum::<f64>() / 16.0;
    let centered: Vec<f64> = z.iter().map(|v| v - mean).collect();
    let neg: Vec<f64> = centered.iter().map(|v| -v).collect();
    assert!((pearson(&neg, &centered).unwrap().unwrap() + 1.0).abs() < 1e-12);

    let constant = vec![RateTriple::new(0.3, 0.1, 0.02); 200];
    let c = parameter_recovery(&constant, &constant).unwrap();
    assert_eq!(c.beta.correlation, None);
}

#[test]
fn applied_rate_alignment() {
    let roll: Vec<RateTriple> = (0..5).map(|i| RateTriple::new(i as f64, 0.0, 0.0)).collect();
    let truth: Vec<RateTriple> = (0..5).map(|i| RateTriple::new(10.0 + i as f64, 0.0, 0.0)).collect();
    let (a, b) = align_applied_rates(&roll, &truth);
    assert_eq!(a.len(), 4);
    assert_eq!((a[0].beta, b[0].beta), (1.0, 10.0));
    assert_eq!((a[3].beta, b[3].beta), (4.0, 13.0));
    assert_eq!(align_applied_rates(&roll[..1], &truth).0.len(), 0);
}

fn small_dataset() -> crate::data_io::Dataset {
    let mut cfg = SyntheticConfig::for_kind(SyntheticKind::SirsVarying);
    cfg.steps = 60;
    load_dataset(&DatasetSpec::Synthetic(cfg)).unwrap()
}

#[test]
fn oracle_scores_zero_everywhere() {
    let ds = small_dataset();
    let plan = BenchmarkPlan {
        splits: vec![0.2, 0.5, 0.8],
        seeds: vec![0, 1],
        variants: vec![Variant::oracle()],
        jobs: 2,
    };
    let report = run_benchmark(&ds, &plan).unwrap();
    assert_eq!(report.cells.len(), 6);
    for c in &report.cells {
        let s = c.scores().unwrap();
        assert_eq!((s.rmse, s.mae, s.peak.timing, s.peak.magnitude), (0.0, 0.0, 0, 0.0));
    }
    assert_eq!(report.aggregates.len(), 3);
}

#[test]
fn failures_are_isolated_per_cell() {
    let ds = small_dataset();
    let mut bad = TrainConfig::default().with_components(1);
    bad.learning_rate = -1.0;
    let plan = BenchmarkPlan {
        splits: vec![0.5],
        seeds: vec![0],
        variants: vec![Variant::model("bad", bad), Variant::oracle()],
        jobs: 1,
    };
    let report = run_benchmark(&ds, &plan).unwrap();
    assert!(matches!(report.cells[0].outcome, CellOutcome::Failed { .. }));
    assert!(report.cells[1].scores().is_some());
    assert_eq!(report.aggregate("bad", 0.5).unwrap().failed, 1);
    let csv = String::from_utf8(report.to_csv().unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("failed"));
    assert!(report.summary_table().contains("oracle"));
}

#[test]
fn one_model_cell_trains_and_scores() {
    let ds = small_dataset();
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default().with_components(1)
    };
    let plan = BenchmarkPlan {
        splits: vec![0.5],
        seeds: vec![3],
        variants: vec![Variant::model("m", cfg)],
        jobs: 1,
    };
    let report = run_benchmark(&ds, &plan).unwrap();
    let s = report.cells[0].scores().unwrap();
    assert!(s.rmse >= s.mae && s.mae >= 0.0);
    assert!(s.recovery.is_some());
    assert_eq!(report.cells[0].t_split, 30);
    let back: BenchmarkReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}


#[test]
fn ablation_cross_is_pruned() {
    let plan = AblationPlan::default();
    let variants = ablation_variants(&plan);
    // 2 variants x 2 delays x 3 methods for 2C and 3C, plus one raw cell per delay for 1C
    assert_eq!(variants.len(), 2 * 12 + 2);
    let names: Vec<&str> = variants.iter().map(|v| v.name.as_str()).collect();
    assert!(names.contains(&"3ode/delay/3c/vmd"));
    let raw = variants.iter().find(|v| v.name == "3ode/delay/1c/raw").unwrap();
    match &raw.kind {
        VariantKind::Model(cfg) => {
            assert_eq!(cfg.decomposition.components, 1);
            assert_eq!(cfg.model.components, 1);
        }
        VariantKind::Oracle => panic!(),
    }
    let full = variants.iter().find(|v| v.name == "1ode/nodelay/2c/stl").unwrap();
    match &full.kind {
        VariantKind::Model(cfg) => {
            assert_eq!(cfg.model.variant, LatentVariant::Single);
            assert!(!cfg.model.delay.enabled);
            assert_eq!(cfg.decomposition.method, Method::Stl);
        }
        VariantKind::Oracle => panic!(),
    }
}

#[test]
fn mean_std_is_sample_std() {
    let m = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(m.mean, 2.5);
    assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(MeanStd::of(&[7.0]).unwrap().std, 0.0);
    assert!(MeanStd::of(&[]).is_none());
}

proptest! {
    #[test]
    fn rmse_dominates_mae(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let r = rmse(&a, &b).unwrap();
        let m = mae(&a, &b).unwrap();
        prop_assert!(r >= 0.0 && m >= 0.0);
        prop_assert!(r >= m * (1.0 - 1e-12));
    }

    #[test]
    fn correlation_is_bounded_and_shift_invariant(v in prop::collection::vec(-10.0f64..10.0, 3..30), shift in -5.0f64..5.0) {
        let w: Vec<f64> = v.iter().rev().cloned().collect();
        if let Some(c) = pearson(&v, &w).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&c));
            let moved: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let c2 = pearson(&moved, &w).unwrap().unwrap();
            prop_assert!((c - c2).abs() < 1e-8);
        }
    }
}

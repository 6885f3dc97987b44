mod common;

use common::random_input;
use devdan::prequential::{
    run_prequential_observed, run_single, run_suite, BatchMetrics, Observer, SuiteEntry,
};
use devdan::streams::{DatasetSpec, SelectionMode, SourceKind};
use devdan::{run_prequential, DevdanConfig, DevdanModel, Error, Mat, Seed, StreamBatch};

fn stream(spec: &DatasetSpec, seed: u64) -> (Vec<StreamBatch>, usize, usize) {
    let s = spec.build(seed).unwrap();
    (s.batches, s.input_dim, s.classes)
}

fn small_sea(samples: usize) -> DatasetSpec {
    DatasetSpec {
        samples: Some(samples),
        ..DatasetSpec::sea()
    }
}

#[test]
fn single_batch_gives_single_metric() {
    let (batches, n, m) = stream(&small_sea(1000), 1);
    let mut model = DevdanModel::new(n, m, DevdanConfig::default()).unwrap();
    let report = run_prequential(&mut model, &batches).unwrap();
    assert_eq!(report.batches.len(), 1);
    assert_eq!(report.mean_cr, report.batches[0].cr);
}

#[test]
fn untrained_model_is_at_chance_on_balanced_batch() {
    let spec = DatasetSpec {
        samples: Some(1000),
        ..DatasetSpec::hyperplane()
    };
    for seed in 0..5 {
        let (batches, n, m) = stream(&spec, seed);
        let model = DevdanModel::new(
            n,
            m,
            DevdanConfig {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let b = &batches[0];
        let correct = b
            .features
            .iter_rows()
            .zip(&b.labels)
            .filter(|(x, &l)| model.predict(x).unwrap().class == l)
            .count() as f64;
        let ones = b.labels.iter().filter(|&&l| l == 1).count() as f64;
        let t = b.len() as f64;
        // a single random unit predicts almost every row as one class, so the
        // rate sits at that class's share; both shares are near one half
        let share = ones / t;
        let sigma = (0.25 / t).sqrt();
        assert!((share - 0.5).abs() <= 3.0 * sigma, "class share {share}");
        let rate = correct / t;
        assert!(
            (rate - 0.5).abs() <= 3.0 * sigma + (share - 0.5).abs() + 0.02,
            "rate {rate}"
        );
    }
}

#[test]
fn disabled_training_gives_flat_rates() {
    let config = DevdanConfig {
        lr_generative: 0.0,
        lr_discriminative: 0.0,
        enable_generative: false,
        enable_grow: false,
        enable_prune: false,
        ..DevdanConfig::default()
    };
    let spec = DatasetSpec {
        samples: Some(20_000),
        ..DatasetSpec::hyperplane()
    };
    let full = spec.build(3).unwrap();
    let batches: Vec<StreamBatch> = full.batches.into_iter().take(6).collect();
    let mut model = DevdanModel::new(full.input_dim, full.classes, config).unwrap();
    let before: Vec<usize> = batches[0]
        .features
        .iter_rows()
        .map(|x| model.predict(x).unwrap().class)
        .collect();
    run_prequential(&mut model, &batches).unwrap();
    let after: Vec<usize> = batches[0]
        .features
        .iter_rows()
        .map(|x| model.predict(x).unwrap().class)
        .collect();
    assert_eq!(before, after, "predictions must not move without learning");

    let spec20 = small_sea(20_000);
    let (batches, n, m) = stream(&spec20, 4);
    let mut model = DevdanModel::new(
        n,
        m,
        DevdanConfig {
            lr_generative: 0.0,
            lr_discriminative: 0.0,
            enable_generative: false,
            enable_grow: false,
            enable_prune: false,
            ..DevdanConfig::default()
        },
    )
    .unwrap();
    // first quarter only so the concept is fixed
    let report = run_prequential(&mut model, &batches[..5]).unwrap();
    let rates: Vec<f64> = report.batches.iter().map(|b| b.cr).collect();
    let k: Vec<f64> = (0..rates.len()).map(|i| i as f64).collect();
    let (slope, se) = regression_slope(&k, &rates);
    assert!(slope.abs() <= 3.0 * se + 1e-12, "slope {slope} ± {se}");
}

/// Least-squares slope and its standard error.
fn regression_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    (slope, (resid / (n - 2.0) / sxx).sqrt())
}

#[test]
fn generative_loss_descends_on_stationary_stream() {
    let (mut early, mut late) = (0.0, 0.0);
    for seed in 0..5 {
        let mut model = DevdanModel::new(
            5,
            2,
            DevdanConfig {
                seed,
                ..DevdanConfig::default()
            },
        )
        .unwrap();
        let mut rng = Seed(seed).rng(9);
        for step in 0..1000 {
            let x = random_input(5, &mut rng);
            let loss = model.generative_step(&x).unwrap().loss;
            if step < 100 {
                early += loss;
            } else if step >= 900 {
                late += loss;
            }
        }
    }
    assert!(late < early, "late {late} vs early {early}");
}

#[test]
fn one_small_step_reduces_loss_on_the_same_sample() {
    let mut rng = Seed(41).rng(0);
    for _ in 0..20 {
        let p = common::Params::random(&mut rng);
        let mut layer = p.layer();
        let x = random_input(p.n, &mut rng);
        let (g, before) = layer.generative_gradients(&x, &x).unwrap();
        layer.apply_generative(&g, 1e-4).unwrap();
        let (_, after) = layer.generative_gradients(&x, &x).unwrap();
        assert!(after < before);
    }
}

#[test]
fn dimension_mismatch_fails_before_training() {
    let (mut batches, n, m) = stream(&small_sea(3000), 5);
    batches[2].features = Mat::zeros(1000, n + 1);
    let mut model = DevdanModel::new(n, m, DevdanConfig::default()).unwrap();
    let digest = model.state_digest();
    let err = run_prequential(&mut model, &batches).unwrap_err();
    assert!(matches!(err, Error::Dimension { .. }));
    assert_eq!(model.state_digest(), digest);
}

#[test]
fn out_of_range_label_fails_before_training() {
    let (mut batches, n, m) = stream(&small_sea(2000), 5);
    batches[1].labels[7] = 5;
    let mut model = DevdanModel::new(n, m, DevdanConfig::default()).unwrap();
    let digest = model.state_digest();
    assert!(matches!(
        run_prequential(&mut model, &batches),
        Err(Error::Label { label: 5, .. })
    ));
    assert_eq!(model.state_digest(), digest);
}

#[derive(Default)]
struct Hygiene {
    before: Option<String>,
    checked: usize,
}

impl Observer for Hygiene {
    fn before_test(&mut self, _k: usize, model: &DevdanModel) {
        self.before = Some(model.state_digest());
    }
    fn after_test(&mut self, k: usize, model: &DevdanModel) {
        assert_eq!(
            self.before.take().unwrap(),
            model.state_digest(),
            "batch {k}"
        );
        self.checked += 1;
    }
}

#[test]
fn test_pass_leaves_model_untouched() {
    let (batches, n, m) = stream(&small_sea(10_000), 6);
    let mut model = DevdanModel::new(n, m, DevdanConfig::default()).unwrap();
    let mut obs = Hygiene::default();
    run_prequential_observed(&mut model, &batches, &mut obs).unwrap();
    assert_eq!(obs.checked, batches.len());
}

#[test]
fn random_half_labels_train_on_half() {
    let spec = DatasetSpec {
        label_fraction: 0.5,
        ..small_sea(4000)
    };
    let (batches, n, m) = stream(&spec, 7);
    let mut model = DevdanModel::new(n, m, DevdanConfig::default()).unwrap();
    let report = run_prequential(&mut model, &batches).unwrap();
    assert!(report.batches.iter().all(|b| b.labeled == 500));
}

struct Labeled(Vec<usize>);

impl Observer for Labeled {
    fn after_train(&mut self, _k: usize, _m: &DevdanModel, metrics: &BatchMetrics) {
        self.0.push(metrics.labeled);
    }
}

#[test]
fn confidence_selection_respects_cap() {
    let spec = DatasetSpec {
        label_fraction: 0.25,
        selection: SelectionMode::Confidence,
        ..small_sea(6000)
    };
    let (batches, n, m) = stream(&spec, 8);
    let mut model = DevdanModel::new(n, m, DevdanConfig::default()).unwrap();
    let mut obs = Labeled(Vec::new());
    run_prequential_observed(&mut model, &batches, &mut obs).unwrap();
    assert!(obs.0.iter().all(|&c| c <= 250));
    // an untrained single unit is unsure about everything
    assert_eq!(obs.0[0], 250);
}

#[test]
fn no_generative_phase_means_no_generative_steps() {
    let (batches, n, m) = stream(&small_sea(2000), 9);
    let mut model = DevdanModel::new(
        n,
        m,
        DevdanConfig {
            enable_generative: false,
            ..DevdanConfig::default()
        },
    )
    .unwrap();
    let r = model.train_batch(&batches[0]).unwrap();
    assert_eq!(r.generative_steps, 0);
    assert_eq!(r.discriminative_steps, 1000);
}

#[test]
fn frozen_structure_keeps_width() {
    let (batches, n, m) = stream(&small_sea(5000), 10);
    let mut model = DevdanModel::new(
        n,
        m,
        DevdanConfig {
            enable_grow: false,
            enable_prune: false,
            ..DevdanConfig::default()
        },
    )
    .unwrap();
    let report = run_prequential(&mut model, &batches).unwrap();
    assert!(report.batches.iter().all(|b| b.width == 1 && b.grows == 0));
}

#[test]
fn suite_is_ordered_and_isolates_failures() {
    let good = SuiteEntry {
        name: "sea".into(),
        dataset: small_sea(3000),
        model: DevdanConfig::default(),
    };
    let bad = SuiteEntry {
        name: "missing".into(),
        dataset: DatasetSpec {
            source: SourceKind::Csv,
            csv_path: Some("/nonexistent/file.csv".into()),
            ..DatasetSpec::default()
        },
        model: DevdanConfig::default(),
    };
    let seeds = [3, 1, 2, 0, 4];
    let serial = run_suite(&[good.clone(), bad.clone()], &seeds, 1).unwrap();
    let parallel = run_suite(&[good.clone(), bad], &seeds, 4).unwrap();
    assert_eq!(serial.runs.len(), 10);
    assert_eq!(serial.summary.len(), 2);
    for (a, b) in serial.runs.iter().zip(&parallel.runs) {
        assert_eq!((&a.name, a.seed), (&b.name, b.seed));
        match (&a.outcome, &b.outcome) {
            (Ok(x), Ok(y)) => assert_eq!(x.report.batches.len(), y.report.batches.len()),
            (Err(_), Err(_)) => {}
            _ => panic!("outcome differs between serial and parallel runs"),
        }
    }
    let order: Vec<u64> = serial.runs[..5].iter().map(|r| r.seed).collect();
    assert_eq!(order, seeds);
    assert_eq!(serial.summary[0].failures, 0);
    assert_eq!(serial.summary[1].failures, 5);
    let mean_of_means = serial.runs[..5]
        .iter()
        .map(|r| r.outcome.as_ref().unwrap().report.mean_cr)
        .sum::<f64>()
        / 5.0;
    assert!((serial.summary[0].mean_cr - mean_of_means).abs() < 1e-12);
    let direct = run_single(&good, 1).unwrap();
    assert_eq!(
        direct.model.state_digest(),
        serial.runs[1]
            .outcome
            .as_ref()
            .unwrap()
            .model
            .state_digest()
    );
}

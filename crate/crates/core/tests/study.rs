//! Temporary default-spec confirmation (removed before release).

use afsmote_core::dataset::SyntheticSpec;
use afsmote_core::pipeline::{run_pipeline, theorem_check, ExperimentConfig};

#[test]
#[ignore]
fn default_spec_confirmation() {
    let spec = SyntheticSpec::default();
    let cfg = ExperimentConfig::default();
    let t0 = std::time::Instant::now();
    let report = theorem_check(&spec, &cfg, 30, 1.0, 1.0).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "default spec: f {}/30 recall {}/30 brier {}/30  time/seed {:.2}s",
        report.f_pass_count(),
        report.recall_pass_count(),
        report.brier_pass_count(),
        dt / 30.0
    );
    let gaps: Vec<f64> = report
        .per_seed
        .iter()
        .map(|o| o.recall_filtered - o.recall_smote)
        .collect();
    println!("recall gaps: {gaps:.3?}");
    let eps: Vec<f64> = report.per_seed.iter().map(|o| o.epsilon_hat).collect();
    println!("eps: {eps:.4?}");
    let recalls: Vec<f64> = report.per_seed.iter().map(|o| o.recall_none).collect();
    println!("recall_none: {recalls:.3?}");
}

#[test]
#[ignore]
fn single_run_timing() {
    let cfg = ExperimentConfig::default();
    let t0 = std::time::Instant::now();
    let result = run_pipeline(&cfg).unwrap();
    println!(
        "run_pipeline default (bootstrap on): {:.2}s, feasible folds: {:?}",
        t0.elapsed().as_secs_f64(),
        result
            .folds
            .iter()
            .map(|f| f.report.feasible)
            .collect::<Vec<_>>()
    );
    println!(
        "recall mean {:.3}, AP mean {:.3}, retained {:?}",
        result.aggregate["recall"].mean,
        result.aggregate["average_precision"].mean,
        result.folds.iter().map(|f| f.retained).collect::<Vec<_>>()
    );
}

use std::path::Path;

use samu::harness::{self, ExperimentConfig, ExperimentKind, LearnerKind};

fn preset(name: &str, kind: ExperimentKind) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path, kind).unwrap()
}

#[test]
fn bundled_configs_load() {
    for (name, kind) in [
        ("exp1-table.conf", ExperimentKind::Story),
        ("exp1-nn.conf", ExperimentKind::Story),
        ("exp2.conf", ExperimentKind::Intro),
        ("incremental-baseline.conf", ExperimentKind::Incremental),
        ("incremental-lzw.conf", ExperimentKind::Incremental),
    ] {
        preset(name, kind).validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn introduction_converges() {
    let outcome = harness::run_experiment2(&preset("exp2.conf", ExperimentKind::Intro)).unwrap();
    let tail = &outcome.curve[outcome.curve.len() - 100..];
    let mean = tail.iter().map(|p| p.reward).sum::<f64>() / 100.0;
    assert!(mean >= 5.0, "last-100 mean {mean}");
    assert!(outcome.curve.iter().all(|p| (-20.0..=10.0).contains(&p.reward)));
}

#[test]
fn all_wrong_pass_scores_minus_twenty() {
    let bad = 10.0 * samu::RewardPolicy::Strict.reward(
        &samu::Triplet::new("a", "b", "c").unwrap(),
        &samu::Triplet::new("d", "e", "f").unwrap(),
    );
    assert_eq!(bad, -20.0);
}

#[test]
fn more_tries_change_the_early_curve_not_the_policy() {
    let mut few = ExperimentConfig::defaults(ExperimentKind::Story);
    few.learner = LearnerKind::Table;
    few.trials = 300;
    let mut many = few.clone();
    many.engine.tries = 20;
    let a = harness::run_experiment1(&few).unwrap();
    let b = harness::run_experiment1(&many).unwrap();
    let first_perfect = |c: &[samu::harness::CurvePoint]| c.iter().position(|p| p.reward == 10.5).unwrap();
    // more exploration delays the first perfect pass
    assert_ne!(a.curve, b.curve);
    assert!(first_perfect(&b.curve) > first_perfect(&a.curve));
    assert_eq!(
        a.run.steady_state_predictions(&a.corpus),
        b.run.steady_state_predictions(&b.corpus)
    );
    assert_eq!(a.curve.last().unwrap().reward, 10.5);
    assert_eq!(b.curve.last().unwrap().reward, 10.5);
}

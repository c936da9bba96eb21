use flowguard_core::artifact::{ModelArtifact, ModelKind, TrainedModel};
use flowguard_core::models::Classifier;
use flowguard_core::pipeline::{evaluate, train, TrainConfig};
use flowguard_core::synth::{gen_flows, ScenarioSpec};
use flowguard_core::Error;

fn small() -> flowguard_core::Dataset {
    gen_flows(&ScenarioSpec::mixed(143, 0.5, 3)).unwrap()
}

#[test]
fn rf_artifact_round_trip() {
    let ds = small();
    let out = train(&ds, ModelKind::Rf, &TrainConfig { seed: 1, ..Default::default() }).unwrap();
    assert!(out.report.validation.macro_avg.f1 > 0.8);
    assert_eq!(out.report.n_train + out.report.n_val + out.report.n_test, ds.len());
    assert_eq!(out.report.selected_features.len(), 20);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    out.artifact.save(&path).unwrap();
    let back = ModelArtifact::<f64>::load(&path).unwrap();
    assert_eq!(back, out.artifact);
    for i in (0..ds.len()).step_by(37) {
        assert_eq!(back.predict_proba(ds.row(i)).unwrap(), out.artifact.predict_proba(ds.row(i)).unwrap());
    }
    let raw = evaluate(&back, &ds).unwrap();
    assert_eq!(raw.n, ds.len());
}

#[test]
fn same_seed_same_artifact() {
    let ds = small();
    let cfg = TrainConfig { seed: 4, ..Default::default() };
    let a = train(&ds, ModelKind::Gbdt, &cfg).unwrap();
    let b = train(&ds, ModelKind::Gbdt, &cfg).unwrap();
    assert_eq!(a.artifact.to_json().unwrap(), b.artifact.to_json().unwrap());
}

#[test]
fn version_mismatch_is_refused() {
    let ds = small();
    let out = train(&ds, ModelKind::Rf, &TrainConfig::default()).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&out.artifact.to_json().unwrap()).unwrap();
    value["format_version"] = 99.into();
    let err = ModelArtifact::<f64>::from_json(&value.to_string()).unwrap_err();
    assert!(matches!(err, Error::FormatVersion { got: 99, .. }));
}

#[test]
fn weighted_ensembles_log_their_search() {
    let ds = small();
    let cfg = TrainConfig { seed: 2, ..Default::default() };
    let out = train(&ds, ModelKind::EnsWeightedFe, &cfg).unwrap();
    assert_eq!(out.report.search_log.len(), 66);
    assert_eq!(out.report.members.len(), 3);
    let total: f64 = out.report.weights.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
    let plan = out.artifact.preprocess.as_ref().unwrap();
    assert!(!plan.engineered.is_empty());
    let TrainedModel::Ensemble(e) = &out.artifact.parameters else {
        panic!("expected an ensemble");
    };
    // The grid contains every one-hot corner.
    let best_member = out.report.members.iter().map(|m| m.val_macro_f1).fold(0.0, f64::max);
    assert!(out.report.validation.macro_avg.f1 >= best_member - 1e-9);
    assert_eq!(e.members.len(), 3);
}

#[test]
fn model_kind_names() {
    for kind in ModelKind::ALL {
        assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
    }
    assert!("svm".parse::<ModelKind>().is_err());
}

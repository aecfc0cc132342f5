use std::sync::LazyLock;

use idi_core::classify::ct1::tie_key;
use idi_core::classify::{
    misclassification, train_ct1, train_ct2, train_msvm, train_rfct, Classifier, ClassifierModel, Ct1Model, Dataset,
    FeatureSet, ForestConfig, MsvmConfig, ParamGrid,
};
use idi_core::label::Class;
use idi_core::scenario::{build_benchmark, BenchmarkConfig};

static DATA: LazyLock<Dataset> = LazyLock::new(|| {
    build_benchmark(&BenchmarkConfig {
        seed: 3,
        per_class: 100,
        ..BenchmarkConfig::default()
    })
    .unwrap()
});

/// Mean per-class error, counted directly.
fn g_m(model: &dyn Classifier, data: &Dataset) -> f64 {
    let mut err = [0usize; 4];
    let mut tot = [0usize; 4];
    for r in &data.records {
        let c = r.label.class().index();
        tot[c] += 1;
        if model.classify(&r.features).index() != c {
            err[c] += 1;
        }
    }
    let present: Vec<usize> = (0..4).filter(|&c| tot[c] > 0).collect();
    present.iter().map(|&c| err[c] as f64 / tot[c] as f64).sum::<f64>() / present.len() as f64
}

#[test]
fn ct1_search_equals_enumeration() {
    let grid = ParamGrid::with_points(10, 100.0).unwrap();
    assert_eq!(grid.len(), 1000);
    let mut best: Option<(f64, [f64; 3])> = None;
    for &p1 in &grid.p1 {
        for &p2 in &grid.p2 {
            for &p3 in &grid.p3 {
                let p = [p1, p2, p3];
                let g = g_m(&Ct1Model::new(p, FeatureSet::all()), &DATA);
                let take = match best {
                    None => true,
                    Some((bg, bp)) => g < bg || (g == bg && tie_key(p) < tie_key(bp)),
                };
                if take {
                    best = Some((g, p));
                }
            }
        }
    }
    let (g, p) = best.unwrap();
    let m = train_ct1(&DATA, &grid, FeatureSet::all()).unwrap();
    assert_eq!([m.p1, m.p2, m.p3], p);
    assert!((m.training_error.unwrap() - g).abs() < 1e-12);
    // constraint box
    assert!(m.p1.abs() <= 50.0 && m.p2.abs() <= 50.0);
    assert!((0.0..=100.0).contains(&m.p3));
}

#[test]
fn g_m_extremes() {
    let truth = |v: &idi_core::sensing::FeatureVector| {
        DATA.records.iter().find(|r| &r.features == v).unwrap().label.class()
    };
    // feature vectors may repeat across classes; keep the unambiguous ones
    let unique = DATA.filter(|r| DATA.records.iter().filter(|s| s.features == r.features).count() == 1);
    assert!(unique.len() > 300);
    assert_eq!(misclassification(&unique, truth).unwrap(), 0.0);
    let wrong = |v: &idi_core::sensing::FeatureVector| Class::from_index((truth(v).index() + 1) % 4).unwrap();
    assert_eq!(misclassification(&unique, wrong).unwrap(), 1.0);
}

#[test]
fn ct2_respects_split_budget() {
    for budget in [1, 5, 20] {
        let m = train_ct2(&DATA, budget, FeatureSet::all());
        assert!(m.tree.split_count() <= budget);
    }
}

fn all_models() -> Vec<ClassifierModel> {
    let grid = ParamGrid::with_steps(5.0, 5.0, 5.0, 100.0).unwrap();
    vec![
        ClassifierModel::Ct1(train_ct1(&DATA, &grid, FeatureSet::all()).unwrap()),
        ClassifierModel::Ct2(train_ct2(&DATA, 20, FeatureSet::all())),
        ClassifierModel::Rfct(
            train_rfct(
                &DATA,
                &ForestConfig {
                    n_trees: 10,
                    seed: 4,
                    ..ForestConfig::default()
                },
                FeatureSet::all(),
            )
            .unwrap(),
        ),
        ClassifierModel::Msvm(train_msvm(&DATA, &MsvmConfig::default(), FeatureSet::spectral()).unwrap()),
    ]
}

#[test]
fn models_round_trip_and_retrain_identically() {
    let a = all_models();
    let b = all_models();
    for (m, again) in a.iter().zip(&b) {
        let back = ClassifierModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(&back, m, "{}", m.kind());
        for r in &DATA.records {
            assert_eq!(back.classify(&r.features), m.classify(&r.features));
        }
        assert_eq!(m.to_json().unwrap(), again.to_json().unwrap(), "{}", m.kind());
    }
}

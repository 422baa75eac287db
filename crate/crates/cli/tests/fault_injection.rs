use rotlab::reproduce::{self, Settings, CRITERIA};

fn corrupt(id: u32) -> Settings {
    Settings {
        corrupt: Some(id),
        ..Settings::default()
    }
}

#[test]
fn each_corrupted_tolerance_fails_its_criterion() {
    for id in 1..CRITERIA {
        let r = reproduce::run_one(id, &corrupt(id)).unwrap();
        assert!(!r.passed, "criterion {id} ignored its corrupted tolerance");
        assert!(!r.failures.is_empty());
    }
    let base = vec![reproduce::run_one(8, &corrupt(11)).unwrap()];
    assert!(!reproduce::determinism(&corrupt(11), &base).passed);
}

#[test]
fn corruption_leaves_other_criteria_alone() {
    for id in [3, 8, 9] {
        assert!(reproduce::run_one(id, &corrupt(1)).unwrap().passed);
    }
}

#[test]
fn data_rows_ignore_corruption_of_tolerances() {
    let clean = reproduce::run_one(3, &Settings::default()).unwrap();
    let corrupted = reproduce::run_one(3, &corrupt(3)).unwrap();
    let values = |r: &reproduce::CriterionReport| {
        r.rows
            .iter()
            .filter(|(k, _)| !k.starts_with("check:"))
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(values(&clean), values(&corrupted));
}

use beqpt::criticality::{detect_critical_points, scan, Rule, ScanConfig, Thresholds, DEFAULT_FD_STEP};
use beqpt::families::FamilyId;

fn candidates(family: FamilyId, a_min: f64, a_max: f64, steps: usize, n_pairs: u64, delta: f64) -> Vec<(f64, Rule)> {
    let records = scan(&ScanConfig {
        family,
        a_min,
        a_max,
        steps,
        delta,
        n_pairs,
        fd_step: DEFAULT_FD_STEP,
    })
    .unwrap();
    detect_critical_points(&records, &Thresholds::default())
        .unwrap()
        .into_iter()
        .map(|c| (c.a, c.rule))
        .collect()
}

fn near(found: &[(f64, Rule)], a: f64) -> bool {
    found.iter().any(|(x, _)| (x - a).abs() < 2e-3)
}

#[test]
fn example1_candidates_at_one_third_and_one() {
    let found = candidates(FamilyId::Horodecki, 1.0 / 300.0, 1.0, 300, 100_000_000, 1e-6);
    assert!(near(&found, 1.0 / 3.0), "{found:?}");
    assert!(near(&found, 1.0), "{found:?}");
}

#[test]
fn example3_candidate_at_minus_one() {
    let found = candidates(FamilyId::Example3, -2.0, 0.0, 201, 10_001, 0.01);
    assert!(near(&found, -1.0), "{found:?}");
}

#[test]
fn example2_candidates() {
    let a = candidates(FamilyId::Chi2a, -0.99, 0.99, 199, 1_000_000_000, 1e-5);
    assert!(a.contains(&(0.0, Rule::FidelityMinimum)), "{a:?}");
    let b = candidates(FamilyId::Chi2b, 0.0, 1.0, 1201, 10_001, 1e-6);
    assert!(near(&b, 5.0 / 6.0), "{b:?}");
}

#[test]
fn example2a_fidelity_decreases_with_n() {
    for a in [-0.5, -0.1, 0.0, 0.2, 0.7] {
        let f: Vec<f64> = [1_000u64, 1_000_000, 1_000_000_000]
            .iter()
            .map(|&n| beqpt::criticality::gsf(FamilyId::Chi2a, a, 1e-5, n).unwrap())
            .collect();
        assert!(f[0] >= f[1] && f[1] >= f[2], "a = {a}: {f:?}");
    }
}

#[test]
fn scan_errors_carry_first_failing_grid_index() {
    let family: FamilyId = "chi:0.1,0.2,0.3,0.5,-".parse().unwrap();
    let config = ScanConfig {
        family,
        a_min: -1.0,
        a_max: 1.0,
        steps: 41,
        delta: 1e-3,
        n_pairs: 10,
        fd_step: DEFAULT_FD_STEP,
    };
    let first_bad = config
        .grid()
        .iter()
        .position(|&a| beqpt::criticality::scan_point(&config, a).is_err())
        .expect("grid crosses an invalid point");
    let err = scan(&config).unwrap_err();
    match &err {
        beqpt::Error::GridPoint { index, .. } => assert_eq!(*index, first_bad),
        other => panic!("unexpected error {other}"),
    }
    assert!(err.is_domain());
}

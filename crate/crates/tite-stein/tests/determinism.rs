use tite_stein::runner::simulate;
use tite_stein_core::presets;

#[test]
fn same_seed_same_answer_on_any_thread_count() {
    let p = presets::standard_design();
    let a = presets::standard_accrual();
    for k in [1, 7, 12] {
        let s = presets::scenario(k).unwrap();
        let runs: Vec<_> = [1, 2, 4].iter().map(|&t| simulate(&p, &s, &a, 40, 77, Some(t)).unwrap()).collect();
        assert_eq!(runs[0], runs[1], "S{k}");
        assert_eq!(runs[0], runs[2], "S{k}");
    }
}

#[test]
fn different_seeds_differ() {
    let p = presets::standard_design();
    let s = presets::scenario(2).unwrap();
    let a = presets::standard_accrual();
    assert_ne!(simulate(&p, &s, &a, 40, 1, None).unwrap(), simulate(&p, &s, &a, 40, 2, None).unwrap());
}

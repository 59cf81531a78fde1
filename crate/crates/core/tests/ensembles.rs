use uecsp::search::{estimate_success_probability, wilson_interval, EnsembleSpec};
use uecsp::{generate_random_formula, leaf_remove, HeuristicPolicy};

fn spec(alpha: f64) -> EnsembleSpec {
    EnsembleSpec { n: 10_000, k: 3, alpha, d: 2 }
}

#[test]
fn no_clauses_always_succeeds() {
    for p in [HeuristicPolicy::Uc, HeuristicPolicy::Guc] {
        let e = estimate_success_probability(&EnsembleSpec { n: 500, k: 5, alpha: 0.0, d: 3 }, &p, 10, 4).unwrap();
        assert_eq!(e.p_hat, 1.0);
    }
}

#[test]
fn uc_fails_above_two_thirds() {
    let e = estimate_success_probability(&spec(0.75), &HeuristicPolicy::Uc, 200, 1).unwrap();
    assert!(e.p_hat <= 0.1, "{e:?}");
}

#[test]
fn uc_success_decreases_with_alpha() {
    let alphas: Vec<f64> = (0..9).map(|i| 0.5 + 0.05 * i as f64).collect();
    let est: Vec<_> = alphas
        .iter()
        .map(|&a| estimate_success_probability(&spec(a), &HeuristicPolicy::Uc, 100, 9).unwrap())
        .collect();
    for w in est.windows(2) {
        let tol = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].p_hat <= w[0].p_hat + tol.max(0.02), "{:?}", est);
    }
    assert!(est.last().unwrap().p_hat < 0.05);
}

#[test]
fn guc_beats_uc_on_paired_instances() {
    // same master seed, so both policies see the same formulas
    let uc = estimate_success_probability(&spec(2.0 / 3.0), &HeuristicPolicy::Uc, 200, 5).unwrap();
    let guc = estimate_success_probability(&spec(2.0 / 3.0), &HeuristicPolicy::Guc, 200, 5).unwrap();
    let (_, uc_hi) = wilson_interval(uc.successes, uc.runs, 2.0);
    let (guc_lo, _) = wilson_interval(guc.successes, guc.runs, 2.0);
    assert!(guc_lo > uc_hi, "uc {uc:?} guc {guc:?}");
}

#[test]
fn empty_core_below_clustering_threshold() {
    // alpha_d(3) = 0.818
    let mut empty = [0usize; 2];
    for seed in 0..10 {
        for (i, a) in [0.78, 0.86].into_iter().enumerate() {
            let f = generate_random_formula(50_000, 3, a, 2, seed).unwrap();
            empty[i] += leaf_remove(&f, seed).unwrap().empty as usize;
        }
    }
    assert_eq!(empty, [10, 0]);
}

//! Independent oracles for the equilibrium machinery.
//!
//! The enumeration oracle below recomputes contribution utilities by
//! summing over every signal vector and every action vector of the other
//! agents, with no binomial shortcut, so it shares no code path with the
//! implementation it checks.

use crowdlab_core::equilibrium::{
    contribute_utility, mixing_brackets, solve_equilibrium, EquilibriumRegime, RESIDUAL_TOLERANCE,
};
use crowdlab_core::model::{posterior, BehaviorStrategy, GameParams, Signal};

/// Expected utility of contributing, by exhaustive enumeration over the
/// 2^(n-1) signal patterns and 2^(n-1) action patterns of the other agents.
fn enumerated_utility(params: &GameParams, strategy: &BehaviorStrategy, signal: Signal) -> f64 {
    let n = params.n() as usize;
    let others = n - 1;
    let t = params.threshold_count() as u64;
    let p = params.p();
    let tau = params.tau();
    let post = posterior(params.mu(), p, signal).unwrap();

    let mut total = 0.0;
    for (state_weight, value, p_match) in [(post, 1.0, p), (1.0 - post, 0.0, 1.0 - p)] {
        // p_match is the chance each other agent's signal is H in this state
        let mut met_prob = 0.0;
        for signals in 0u32..(1 << others) {
            let mut signal_prob = 1.0;
            for bit in 0..others {
                let is_h = signals >> bit & 1 == 1;
                signal_prob *= if is_h { p_match } else { 1.0 - p_match };
            }
            for actions in 0u32..(1 << others) {
                let mut action_prob = 1.0;
                let mut contributors = 1u64; // the agent's own pledge
                for bit in 0..others {
                    let is_h = signals >> bit & 1 == 1;
                    let rate = if is_h {
                        strategy.sigma_h()
                    } else {
                        strategy.sigma_l()
                    };
                    if actions >> bit & 1 == 1 {
                        action_prob *= rate;
                        contributors += 1;
                    } else {
                        action_prob *= 1.0 - rate;
                    }
                }
                if contributors >= t {
                    met_prob += signal_prob * action_prob;
                }
            }
        }
        total += state_weight * met_prob * (value - tau);
    }
    total
}

#[test]
fn utility_matches_enumeration_for_small_populations() {
    let strategies = [
        BehaviorStrategy::signal_following(),
        BehaviorStrategy::new(1.0, 0.3).unwrap(),
        BehaviorStrategy::new(0.7, 0.2).unwrap(),
        BehaviorStrategy::new(1.0, 1.0).unwrap(),
        BehaviorStrategy::new(0.5, 0.5).unwrap(),
    ];
    let games = [
        GameParams::crowdfunding(3, 0.55, 0.5, 0.5, 0.5).unwrap(),
        GameParams::crowdfunding(3, 0.85, 0.3, 0.4, 1.0).unwrap(),
        GameParams::crowdfunding(5, 0.55, 0.5, 0.5, 0.5).unwrap(),
        GameParams::crowdfunding(5, 0.7, 0.6, 0.55, 0.8).unwrap(),
    ];
    for params in &games {
        for strategy in &strategies {
            for signal in [Signal::H, Signal::L] {
                let fast = contribute_utility(params, strategy, signal).unwrap();
                let slow = enumerated_utility(params, strategy, signal);
                assert!(
                    (fast - slow).abs() <= 1e-12,
                    "n={} strategy=({}, {}) {:?}: {} vs {}",
                    params.n(),
                    strategy.sigma_h(),
                    strategy.sigma_l(),
                    signal,
                    fast,
                    slow
                );
            }
        }
    }
}

#[test]
fn baseline_low_signal_utility_from_enumeration() {
    // Frozen from the enumeration oracle: at n=5, T=3, mu=0.5, p=0.55,
    // tau=0.5 the signal-following profile leaves a low-signal contributor
    // with positive utility, so pure signal following is not an equilibrium.
    let params = GameParams::crowdfunding(5, 0.55, 0.5, 0.5, 0.5).unwrap();
    let strategy = BehaviorStrategy::signal_following();
    let oracle = enumerated_utility(&params, &strategy, Signal::L);
    assert!((oracle - 0.003186562499999997).abs() < 1e-15);
    let fast = contribute_utility(&params, &strategy, Signal::L).unwrap();
    assert!((fast - oracle).abs() <= 1e-12);
    assert!(fast > 0.0);
}

#[test]
fn solver_root_agrees_with_grid_search() {
    let params = GameParams::crowdfunding(5, 0.55, 0.5, 0.5, 0.5).unwrap();
    let result = solve_equilibrium(&params).unwrap();
    assert_eq!(result.regime, EquilibriumRegime::MutualInsurance);
    let lambda = result.strategy.sigma_l();

    // independent scan: 1001 equally spaced lambdas, find the sign change
    let u = |l: f64| {
        contribute_utility(&params, &BehaviorStrategy::new(1.0, l).unwrap(), Signal::L).unwrap()
    };
    let mut bracket = None;
    let mut prev = u(0.0);
    for i in 1..=1000 {
        let x = i as f64 / 1000.0;
        let here = u(x);
        if prev > 0.0 && here <= 0.0 {
            bracket = Some(((i - 1) as f64 / 1000.0, x));
            break;
        }
        prev = here;
    }
    let (lo, hi) = bracket.expect("grid search must find a sign change");
    assert!(
        lambda >= lo && lambda <= hi,
        "solver root {lambda} outside grid bracket [{lo}, {hi}]"
    );
    assert!(result.residual <= RESIDUAL_TOLERANCE);
    assert!(u(lambda).abs() <= RESIDUAL_TOLERANCE);
}

#[test]
fn solver_tracks_asymptotic_mixing_from_above() {
    // sigma_l(n) approaches the large-population value 1/11 monotonically
    // over this n sequence; convergence is O(1/sqrt(n)).
    let limit = crowdlab_core::equilibrium::asymptotic_mixing(0.55, 0.5).unwrap();
    let mut gaps = Vec::new();
    for n in [25u32, 100, 400, 1000] {
        let params = GameParams::crowdfunding(n, 0.55, 0.5, 0.5, 0.5).unwrap();
        let result = solve_equilibrium(&params).unwrap();
        assert_eq!(result.regime, EquilibriumRegime::MutualInsurance);
        gaps.push(result.strategy.sigma_l() - limit);
    }
    for pair in gaps.windows(2) {
        assert!(
            pair[1] > 0.0 && pair[1] < pair[0],
            "gaps must shrink from above: {gaps:?}"
        );
    }
    // quadrupling n roughly halves the gap
    let ratio = gaps[2] / gaps[3];
    assert!(ratio > 1.2 && ratio < 2.2, "square-root rate, got {ratio}");
}

#[test]
fn mixing_vanishes_below_the_threshold_kink() {
    // with q <= 1 - p the limiting mixing probability is zero; at a
    // moderate price the finite-n solution is already pure signal
    // following since lenient thresholds complete surely in either state
    assert_eq!(
        crowdlab_core::equilibrium::asymptotic_mixing(0.7, 0.25).unwrap(),
        0.0
    );
    for n in [5u32, 25, 101, 201] {
        let params = GameParams::crowdfunding(n, 0.7, 0.5, 0.5, 0.25).unwrap();
        let result = solve_equilibrium(&params).unwrap();
        assert_eq!(result.regime, EquilibriumRegime::PureSignalFollowing);
        assert_eq!(result.strategy, BehaviorStrategy::signal_following());
    }
}

#[test]
fn moderate_price_scan_sees_at_most_one_sign_change() {
    // deterministic parameter sample; the full 200-point randomized sweep
    // lives in the acceptance suite
    let mut checked = 0;
    for &mu in &[0.3, 0.5, 0.7] {
        for &p in &[0.55, 0.7, 0.85] {
            for &q in &[0.4, 0.5, 0.8] {
                for n in [3u32, 5, 9, 25] {
                    let post_l = posterior(mu, p, Signal::L).unwrap();
                    let post_h = posterior(mu, p, Signal::H).unwrap();
                    let tau = 0.5 * (post_l + post_h);
                    let params = GameParams::crowdfunding(n, p, mu, tau, q).unwrap();
                    let brackets = mixing_brackets(&params, 1024).unwrap();
                    assert!(
                        brackets.len() <= 1,
                        "mu={mu} p={p} q={q} n={n}: {} sign changes",
                        brackets.len()
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 108);
}

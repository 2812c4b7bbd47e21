//! Closed-form information-aggregation metrics.
//!
//! Two families live here. The first are the moderate-price performance
//! indices of the underlying theory: the correctness index
//! `theta = 1 - ((1-p)/p) * ((1-tau)/tau) * mu` and the participation index
//! `R = mu * (1 + ((1-p)/p) * ((1-tau)/tau))`, which satisfy the exact
//! identity `R = mu + 1 - theta`.
//!
//! The second is the behavioral-mixture calculus: treating the population
//! as a mix of agents who perceive the price as expensive (fraction `rho`)
//! and agents who perceive it as moderate, the observed opt-out rate of
//! high-signal agents (`psi`), opt-in rate of low-signal agents (`lambda`),
//! and overall opt-in fraction (`phi`) pin down `rho`, the state-conditional
//! opt-in probabilities, and from those the expected correctness of
//! crowdfunding versus majority voting.
//!
//! Naming note: the threshold ratio is written `q` elsewhere in this crate;
//! in the mixture formulas below the symbol that multiplies signal odds is
//! the signal accuracy and is consistently named `p`.

use serde::Serialize;

use crate::equilibrium::binomial_tail;
use crate::error::{Error, Result};
use crate::model::{posterior, GameParams, Signal};

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::param(name, v, "0 <= value <= 1"));
    }
    Ok(())
}

fn require_moderate(mu: f64, p: f64, tau: f64) -> Result<()> {
    let post_l = posterior(mu, p, Signal::L)?;
    let post_h = posterior(mu, p, Signal::H)?;
    if !(post_l < tau && tau < post_h) {
        return Err(Error::NotModerate {
            tau,
            posterior_l: post_l,
            posterior_h: post_h,
        });
    }
    Ok(())
}

/// Odds factor shared by both indices: `((1-p)/p) * ((1-tau)/tau)`.
fn error_odds(p: f64, tau: f64) -> f64 {
    ((1.0 - p) / p) * ((1.0 - tau) / tau)
}

/// Correctness index at moderate prices: how well equilibrium play
/// aggregates information into the funding outcome.
pub fn correctness_index(mu: f64, p: f64, tau: f64) -> Result<f64> {
    require_moderate(mu, p, tau)?;
    Ok(1.0 - error_odds(p, tau) * mu)
}

/// Participation index at moderate prices: expected market penetration
/// under equilibrium play.
pub fn participation_index(mu: f64, p: f64, tau: f64) -> Result<f64> {
    require_moderate(mu, p, tau)?;
    Ok(mu * (1.0 + error_odds(p, tau)))
}

/// Behavioral mixture summary of a pool of crowdfunding decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureEstimate {
    /// Opt-out rate of high-signal agents.
    pub psi: f64,
    /// Opt-in rate of low-signal agents.
    pub lambda: f64,
    /// Overall opt-in fraction.
    pub phi: f64,
    /// Inferred fraction perceiving the price as expensive.
    pub rho: f64,
}

/// Fraction of agents who perceive the price as expensive, from the
/// observed `(psi, lambda, phi)` triple:
/// `rho = (1 + lambda - 2*phi) / (1 + lambda - psi)`.
///
/// A result outside [0, 1] falsifies the two-type mixture reading of the
/// data and is reported as an error, never clamped.
pub fn mixture_rho(psi: f64, lambda: f64, phi: f64) -> Result<f64> {
    check_unit("psi", psi)?;
    check_unit("lambda", lambda)?;
    check_unit("phi", phi)?;
    let denominator = 1.0 + lambda - psi;
    if denominator <= 0.0 {
        return Err(Error::InconsistentMixture {
            psi,
            lambda,
            phi,
            detail: format!("non-positive denominator {denominator}"),
        });
    }
    let rho = (1.0 + lambda - 2.0 * phi) / denominator;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InconsistentMixture {
            psi,
            lambda,
            phi,
            detail: format!("rho = {rho} outside [0, 1]"),
        });
    }
    Ok(rho)
}

/// State-conditional opt-in probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalOptIn {
    /// `P(opt in | state G)`
    pub phi_h: f64,
    /// `P(opt in | state B)`
    pub phi_l: f64,
}

/// Probability of seeing an opt-in given the state of the world, under the
/// two-type mixture:
///
/// ```text
/// phi_H = (1 - rho)(p + (1 - p) lambda) + rho p psi
/// phi_L = (1 - rho)((1 - p) + p lambda) + rho (1 - p) psi
/// ```
pub fn conditional_optin(rho: f64, psi: f64, lambda: f64, p: f64) -> Result<ConditionalOptIn> {
    check_unit("rho", rho)?;
    check_unit("psi", psi)?;
    check_unit("lambda", lambda)?;
    if !p.is_finite() || p <= 0.5 || p >= 1.0 {
        return Err(Error::param("p", p, "0.5 < p < 1"));
    }
    let phi_h = (1.0 - rho) * (p + (1.0 - p) * lambda) + rho * p * psi;
    let phi_l = (1.0 - rho) * ((1.0 - p) + p * lambda) + rho * (1.0 - p) * psi;
    Ok(ConditionalOptIn { phi_h, phi_l })
}

/// Expected correctness of the crowdfunding mechanism:
/// `mu * P(Bin(n, phi_H) >= T) + (1 - mu) * (1 - P(Bin(n, phi_L) >= T))`.
pub fn crowdfunding_correctness(phi_h: f64, phi_l: f64, n: u64, t: u64, mu: f64) -> Result<f64> {
    check_unit("phi_h", phi_h)?;
    check_unit("phi_l", phi_l)?;
    check_unit("mu", mu)?;
    if t < 1 || t > n {
        return Err(Error::param("t", t as f64, "1 <= T <= n"));
    }
    let funded_given_g = binomial_tail(n, t, phi_h)?;
    let funded_given_b = binomial_tail(n, t, phi_l)?;
    Ok(mu * funded_given_g + (1.0 - mu) * (1.0 - funded_given_b))
}

/// Expected correctness of strict-majority voting with `n` (odd) voters
/// who follow their signal with probability `follow_rate`.
///
/// The effective per-voter accuracy is
/// `p' = follow_rate * p + (1 - follow_rate)(1 - p)`. Even group sizes are
/// rejected: without a tie rule strict majority is undefined, and ties are
/// handled only in the stochastic simulator.
pub fn voting_correctness(p: f64, follow_rate: f64, n: u64) -> Result<f64> {
    if !p.is_finite() || p <= 0.5 || p >= 1.0 {
        return Err(Error::param("p", p, "0.5 < p < 1"));
    }
    check_unit("follow_rate", follow_rate)?;
    if n.is_multiple_of(2) {
        return Err(Error::EvenVoters { n });
    }
    let effective = follow_rate * p + (1.0 - follow_rate) * (1.0 - p);
    binomial_tail(n, n / 2 + 1, effective)
}

/// All mixture-calculus quantities for one parameter set, in the flat
/// layout used by the reporting pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section7Report {
    pub mu: f64,
    pub p: f64,
    pub tau: f64,
    pub n: u64,
    #[serde(rename = "T")]
    pub t: u64,
    pub psi: f64,
    pub lambda: f64,
    pub phi: f64,
    pub rho: f64,
    #[serde(rename = "phi_H")]
    pub phi_h: f64,
    #[serde(rename = "phi_L")]
    pub phi_l: f64,
    pub theta_cf: f64,
    pub theta_voting: f64,
}

impl Section7Report {
    pub const CSV_HEADER: &'static str =
        "mu,p,tau,n,T,psi,lambda,phi,rho,phi_H,phi_L,theta_cf,theta_voting";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mu,
            self.p,
            self.tau,
            self.n,
            self.t,
            self.psi,
            self.lambda,
            self.phi,
            self.rho,
            self.phi_h,
            self.phi_l,
            self.theta_cf,
            self.theta_voting
        )
    }
}

/// Derive every mixture-calculus quantity for a crowdfunding game and an
/// observed `(psi, lambda, phi)` triple. `theta_voting` is the same-size
/// majority-vote benchmark with perfect signal following.
pub fn report(params: &GameParams, psi: f64, lambda: f64, phi: f64) -> Result<Section7Report> {
    let rho = mixture_rho(psi, lambda, phi)?;
    let optin = conditional_optin(rho, psi, lambda, params.p())?;
    let n = params.n() as u64;
    let t = params.threshold_count() as u64;
    let theta_cf = crowdfunding_correctness(optin.phi_h, optin.phi_l, n, t, params.mu())?;
    let theta_voting = voting_correctness(params.p(), 1.0, n)?;
    Ok(Section7Report {
        mu: params.mu(),
        p: params.p(),
        tau: params.tau(),
        n,
        t,
        psi,
        lambda,
        phi,
        rho,
        phi_h: optin.phi_h,
        phi_l: optin.phi_l,
        theta_cf,
        theta_voting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn indices_at_baseline() {
        assert_abs_diff_eq!(
            correctness_index(0.5, 0.55, 0.5).unwrap(),
            0.59091,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            correctness_index(0.5, 0.85, 0.5).unwrap(),
            0.91176,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            participation_index(0.5, 0.55, 0.5).unwrap(),
            0.90909,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            participation_index(0.5, 0.85, 0.5).unwrap(),
            0.58824,
            epsilon = 1e-5
        );
    }

    #[test]
    fn indices_linked_by_exact_identity() {
        for &(mu, p, tau) in &[
            (0.5, 0.55, 0.5),
            (0.5, 0.85, 0.5),
            (0.3, 0.7, 0.4),
            (0.62, 0.9, 0.7),
        ] {
            let theta = correctness_index(mu, p, tau).unwrap();
            let r = participation_index(mu, p, tau).unwrap();
            assert_abs_diff_eq!(r, mu + 1.0 - theta, epsilon = 1e-15);
            assert_abs_diff_eq!(r - mu, error_odds(p, tau) * mu, epsilon = 1e-15);
            assert_abs_diff_eq!(1.0 - theta, error_odds(p, tau) * mu, epsilon = 1e-15);
        }
    }

    #[test]
    fn correctness_index_approaches_one_as_prior_vanishes() {
        // accuracy high enough that tau = 0.5 stays moderate at small mu
        let p = 0.999_999;
        let mut last = 0.0;
        for &mu in &[1e-2, 1e-3, 1e-4] {
            let theta = correctness_index(mu, p, 0.5).unwrap();
            assert!(theta > last);
            last = theta;
        }
        assert_abs_diff_eq!(last, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn participation_index_is_linear_in_mu() {
        let per_mu = |mu: f64| participation_index(mu, 0.999_999, 0.5).unwrap() / mu;
        assert_abs_diff_eq!(per_mu(1e-2), per_mu(1e-4), epsilon = 1e-12);
    }

    #[test]
    fn indices_reject_non_moderate_prices() {
        assert!(matches!(
            correctness_index(0.5, 0.85, 0.9),
            Err(Error::NotModerate { .. })
        ));
        assert!(matches!(
            participation_index(0.5, 0.85, 0.05),
            Err(Error::NotModerate { .. })
        ));
    }

    #[test]
    fn rho_baseline_and_degenerate_cases() {
        let rho = mixture_rho(0.034, 0.871, 71.0 / 81.0).unwrap();
        assert_abs_diff_eq!(rho, 0.0643, epsilon = 5e-4);
        assert_abs_diff_eq!(mixture_rho(0.0, 1.0, 1.0).unwrap(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(mixture_rho(0.5, 0.5, 0.5).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rho_out_of_range_is_an_error_not_a_clamp() {
        // phi too low for the stated psi and lambda forces rho above 1
        assert!(matches!(
            mixture_rho(0.9, 0.9, 0.05),
            Err(Error::InconsistentMixture { .. })
        ));
        // phi too high forces rho below 0
        assert!(matches!(
            mixture_rho(0.0, 0.0, 0.9),
            Err(Error::InconsistentMixture { .. })
        ));
    }

    #[test]
    fn conditional_optin_baseline_and_corners() {
        let o = conditional_optin(0.0643, 0.034, 0.871, 0.55).unwrap();
        assert_abs_diff_eq!(o.phi_h, 0.882, epsilon = 1e-3);
        assert_abs_diff_eq!(o.phi_l, 0.870, epsilon = 1e-3);

        // pure signal following
        let o = conditional_optin(0.0, 0.3, 0.0, 0.85).unwrap();
        assert_abs_diff_eq!(o.phi_h, 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(o.phi_l, 0.15, epsilon = 1e-15);

        // everyone opts out
        let o = conditional_optin(1.0, 0.0, 0.7, 0.85).unwrap();
        assert_abs_diff_eq!(o.phi_h, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(o.phi_l, 0.0, epsilon = 0.0);
    }

    #[test]
    fn conditional_optin_orders_states() {
        for psi10 in 0..=10 {
            for lambda10 in 0..=10 {
                for rho10 in 0..=10 {
                    let o = conditional_optin(
                        rho10 as f64 / 10.0,
                        psi10 as f64 / 10.0,
                        lambda10 as f64 / 10.0,
                        0.75,
                    )
                    .unwrap();
                    assert!(o.phi_h >= o.phi_l - 1e-15);
                }
            }
        }
    }

    #[test]
    fn crowdfunding_correctness_baseline() {
        let theta = crowdfunding_correctness(0.882, 0.870, 5, 3, 0.5).unwrap();
        assert_abs_diff_eq!(theta, 0.502, epsilon = 2e-3);
        // perfect separation
        assert_abs_diff_eq!(
            crowdfunding_correctness(1.0, 0.0, 7, 3, 0.5).unwrap(),
            1.0,
            epsilon = 0.0
        );
        // no information: reduces to a single tail
        let x = 0.61;
        let t = binomial_tail(5, 3, x).unwrap();
        assert_abs_diff_eq!(
            crowdfunding_correctness(x, x, 5, 3, 0.4).unwrap(),
            0.4 * t + 0.6 * (1.0 - t),
            epsilon = 1e-15
        );
    }

    #[test]
    fn crowdfunding_correctness_monotonicity() {
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        for &lo in &grid {
            for &hi in &grid {
                if lo >= hi {
                    continue;
                }
                let base = crowdfunding_correctness(lo, lo, 9, 5, 0.5).unwrap();
                // non-decreasing in phi_h
                assert!(crowdfunding_correctness(hi, lo, 9, 5, 0.5).unwrap() >= base - 1e-15);
                // non-increasing in phi_l
                assert!(crowdfunding_correctness(lo, hi, 9, 5, 0.5).unwrap() <= base + 1e-15);
            }
        }
    }

    #[test]
    fn voting_correctness_published_values() {
        assert_abs_diff_eq!(
            voting_correctness(0.55, 1.0, 5).unwrap(),
            0.593,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            voting_correctness(0.85, 1.0, 5).unwrap(),
            0.973,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            voting_correctness(0.55, 0.874, 5).unwrap(),
            0.569,
            epsilon = 2e-3
        );
        assert_abs_diff_eq!(
            voting_correctness(0.85, 0.874, 5).unwrap(),
            0.907,
            epsilon = 2e-3
        );
    }

    #[test]
    fn voting_correctness_condorcet_growth() {
        for &p in &[0.55, 0.7, 0.85] {
            let mut last = 0.5;
            for n in (1..=51).step_by(2) {
                let theta = voting_correctness(p, 1.0, n).unwrap();
                assert!(theta >= last - 1e-12, "p={p} n={n}: {theta} < {last}");
                last = theta;
            }
        }
    }

    #[test]
    fn voting_correctness_uninformative_at_half_follow_rate() {
        for n in [1, 3, 5, 25] {
            assert_abs_diff_eq!(
                voting_correctness(0.7, 0.5, n).unwrap(),
                0.5,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn voting_correctness_rejects_even_n() {
        assert!(matches!(
            voting_correctness(0.55, 1.0, 4),
            Err(Error::EvenVoters { n: 4 })
        ));
    }

    #[test]
    fn report_emits_complete_row() {
        let params = GameParams::crowdfunding(5, 0.55, 0.5, 0.5, 0.5).unwrap();
        let rep = report(&params, 0.034, 0.871, 71.0 / 81.0).unwrap();
        assert_eq!(rep.t, 3);
        assert_abs_diff_eq!(rep.rho, 0.0643, epsilon = 5e-4);
        assert_abs_diff_eq!(rep.theta_cf, 0.502, epsilon = 2e-3);
        assert_abs_diff_eq!(rep.theta_voting, 0.593, epsilon = 1e-3);

        let json = serde_json::to_value(&rep).unwrap();
        for key in [
            "mu",
            "p",
            "tau",
            "n",
            "T",
            "psi",
            "lambda",
            "phi",
            "rho",
            "phi_H",
            "phi_L",
            "theta_cf",
            "theta_voting",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        let row = rep.csv_row();
        assert_eq!(row.split(',').count(), 13);
        assert_eq!(Section7Report::CSV_HEADER.split(',').count(), 13);
    }

    #[test]
    fn report_propagates_component_errors() {
        // even group size breaks the voting benchmark column
        let params = GameParams::crowdfunding(4, 0.55, 0.5, 0.5, 0.5).unwrap();
        assert!(matches!(
            report(&params, 0.034, 0.871, 71.0 / 81.0),
            Err(Error::EvenVoters { n: 4 })
        ));
        // inconsistent mixture surfaces instead of being clamped
        let params = GameParams::crowdfunding(5, 0.55, 0.5, 0.5, 0.5).unwrap();
        assert!(matches!(
            report(&params, 0.9, 0.9, 0.05),
            Err(Error::InconsistentMixture { .. })
        ));
    }
}

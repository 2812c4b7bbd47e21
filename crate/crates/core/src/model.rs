//! Core domain types: game parameters, signals, strategies, price regimes,
//! and the clickcoin payoff rules shared by every other module.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so values can be shared freely across threads. Parameters are
//! validated eagerly: an invalid probability is rejected when the value is
//! built, never at use time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group decision mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Voting,
    Crowdfunding,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mechanism::Voting => write!(f, "voting"),
            Mechanism::Crowdfunding => write!(f, "crowdfunding"),
        }
    }
}

/// True state of the good: `G` is the high-value state (v = 1), `B` the
/// low-value state (v = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorldState {
    G,
    B,
}

impl WorldState {
    /// Consumption value of the good in this state.
    pub fn value(self) -> f64 {
        match self {
            WorldState::G => 1.0,
            WorldState::B => 0.0,
        }
    }

    pub fn is_high(self) -> bool {
        self == WorldState::G
    }
}

/// Private binary signal. Under sampling, `P(H | G) = p` and `P(L | B) = p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    H,
    L,
}

impl Signal {
    /// The signal an agent in `state` draws with probability `p`.
    pub fn matching(state: WorldState) -> Signal {
        match state {
            WorldState::G => Signal::H,
            WorldState::B => Signal::L,
        }
    }

    pub fn flipped(self) -> Signal {
        match self {
            Signal::H => Signal::L,
            Signal::L => Signal::H,
        }
    }
}

fn check_prob(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    constraint: &'static str,
) -> Result<()> {
    if !value.is_finite() || value <= lo || value >= hi {
        return Err(Error::param(name, value, constraint));
    }
    Ok(())
}

/// Complete specification of one game instance.
///
/// Invariants enforced on construction: `n >= 1`, `0.5 < p < 1`,
/// `0 < mu < 1`, `0 < tau < 1`, and `0 < q <= 1`. Voting always uses the
/// simple-majority ratio `q = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGameParams", into = "RawGameParams")]
pub struct GameParams {
    n: u32,
    p: f64,
    mu: f64,
    tau: f64,
    mechanism: Mechanism,
    q: f64,
}

/// Wire form of [`GameParams`]; `q` may be omitted for voting games.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawGameParams {
    n: u32,
    p: f64,
    mu: f64,
    tau: f64,
    mechanism: Mechanism,
    #[serde(default)]
    q: Option<f64>,
}

impl TryFrom<RawGameParams> for GameParams {
    type Error = Error;

    fn try_from(raw: RawGameParams) -> Result<Self> {
        match raw.mechanism {
            Mechanism::Voting => {
                if let Some(q) = raw.q {
                    if (q - 0.5).abs() > 1e-12 {
                        return Err(Error::param("q", q, "voting fixes q = 0.5"));
                    }
                }
                GameParams::voting(raw.n, raw.p, raw.mu, raw.tau)
            }
            Mechanism::Crowdfunding => {
                let q = raw.q.ok_or(Error::param(
                    "q",
                    f64::NAN,
                    "crowdfunding requires a threshold ratio q in (0, 1]",
                ))?;
                GameParams::crowdfunding(raw.n, raw.p, raw.mu, raw.tau, q)
            }
        }
    }
}

impl From<GameParams> for RawGameParams {
    fn from(p: GameParams) -> Self {
        RawGameParams {
            n: p.n,
            p: p.p,
            mu: p.mu,
            tau: p.tau,
            mechanism: p.mechanism,
            q: Some(p.q),
        }
    }
}

impl GameParams {
    fn validate_common(n: u32, p: f64, mu: f64, tau: f64) -> Result<()> {
        if n < 1 {
            return Err(Error::param("n", n as f64, "n >= 1"));
        }
        check_prob("p", p, 0.5, 1.0, "0.5 < p < 1")?;
        check_prob("mu", mu, 0.0, 1.0, "0 < mu < 1")?;
        check_prob("tau", tau, 0.0, 1.0, "0 < tau < 1")?;
        Ok(())
    }

    /// Crowdfunding game with threshold ratio `q` in (0, 1].
    pub fn crowdfunding(n: u32, p: f64, mu: f64, tau: f64, q: f64) -> Result<Self> {
        Self::validate_common(n, p, mu, tau)?;
        if !q.is_finite() || q <= 0.0 || q > 1.0 {
            return Err(Error::param("q", q, "0 < q <= 1"));
        }
        Ok(GameParams {
            n,
            p,
            mu,
            tau,
            mechanism: Mechanism::Crowdfunding,
            q,
        })
    }

    /// Simple-majority voting game (`q` fixed at 0.5).
    pub fn voting(n: u32, p: f64, mu: f64, tau: f64) -> Result<Self> {
        Self::validate_common(n, p, mu, tau)?;
        Ok(GameParams {
            n,
            p,
            mu,
            tau,
            mechanism: Mechanism::Voting,
            q: 0.5,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Threshold count `T = ceil(q * n)`, always in `1..=n`.
    ///
    /// The ceiling makes `q = 0.5` coincide with strict majority for odd
    /// `n` ("50% of 5" means 3 contributors). Products that are integers up
    /// to floating-point noise are snapped before the ceiling so that, e.g.,
    /// `q = 0.8, n = 25` yields exactly 20.
    pub fn threshold_count(&self) -> u32 {
        let x = self.q * self.n as f64;
        let nearest = x.round();
        let t = if (x - nearest).abs() < 1e-9 * nearest.max(1.0) {
            nearest
        } else {
            x.ceil()
        };
        (t as u32).clamp(1, self.n)
    }

    /// Posterior pair `(P(v=1 | L), P(v=1 | H))`.
    pub fn posteriors(&self) -> (f64, f64) {
        (
            posterior_unchecked(self.mu, self.p, Signal::L),
            posterior_unchecked(self.mu, self.p, Signal::H),
        )
    }
}

/// Symmetric behavior strategy: contribution probabilities conditional on
/// the private signal. The trivial strategy is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy", into = "RawStrategy")]
pub struct BehaviorStrategy {
    sigma_h: f64,
    sigma_l: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawStrategy {
    sigma_h: f64,
    sigma_l: f64,
}

impl TryFrom<RawStrategy> for BehaviorStrategy {
    type Error = Error;

    fn try_from(raw: RawStrategy) -> Result<Self> {
        BehaviorStrategy::new(raw.sigma_h, raw.sigma_l)
    }
}

impl From<BehaviorStrategy> for RawStrategy {
    fn from(s: BehaviorStrategy) -> Self {
        RawStrategy {
            sigma_h: s.sigma_h,
            sigma_l: s.sigma_l,
        }
    }
}

impl BehaviorStrategy {
    pub fn new(sigma_h: f64, sigma_l: f64) -> Result<Self> {
        for (name, v) in [("sigma_h", sigma_h), ("sigma_l", sigma_l)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, v, "0 <= sigma <= 1"));
            }
        }
        Ok(BehaviorStrategy { sigma_h, sigma_l })
    }

    /// Contribute on H, abstain on L.
    pub fn signal_following() -> Self {
        BehaviorStrategy {
            sigma_h: 1.0,
            sigma_l: 0.0,
        }
    }

    /// The all-opt-out profile.
    pub fn trivial() -> Self {
        BehaviorStrategy {
            sigma_h: 0.0,
            sigma_l: 0.0,
        }
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    pub fn sigma_l(&self) -> f64 {
        self.sigma_l
    }

    /// Contribution probability given the agent's signal.
    pub fn rate(&self, signal: Signal) -> f64 {
        match signal {
            Signal::H => self.sigma_h,
            Signal::L => self.sigma_l,
        }
    }
}

/// Price regime relative to the signal posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Low,
    Moderate,
    High,
}

/// Classification of the price against the posterior band, with the band
/// endpoints retained for reporting.
///
/// `Moderate` means strictly `P(v=1|L) < tau < P(v=1|H)`; boundary prices
/// classify as the adjacent non-moderate regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceRegime {
    pub regime: Regime,
    pub posterior_l: f64,
    pub posterior_h: f64,
}

fn posterior_unchecked(mu: f64, p: f64, s: Signal) -> f64 {
    match s {
        Signal::H => mu * p / (mu * p + (1.0 - mu) * (1.0 - p)),
        Signal::L => mu * (1.0 - p) / (mu * (1.0 - p) + (1.0 - mu) * p),
    }
}

/// Bayes posterior `P(v = 1 | s)` for prior `mu` and signal accuracy `p`.
pub fn posterior(mu: f64, p: f64, s: Signal) -> Result<f64> {
    check_prob("p", p, 0.5, 1.0, "0.5 < p < 1")?;
    check_prob("mu", mu, 0.0, 1.0, "0 < mu < 1")?;
    Ok(posterior_unchecked(mu, p, s))
}

/// Classify the price of a game against its posterior band.
pub fn classify_price(params: &GameParams) -> PriceRegime {
    let (posterior_l, posterior_h) = params.posteriors();
    let tau = params.tau();
    let regime = if tau <= posterior_l {
        Regime::Low
    } else if tau >= posterior_h {
        Regime::High
    } else {
        Regime::Moderate
    };
    PriceRegime {
        regime,
        posterior_l,
        posterior_h,
    }
}

/// Stake, reward, and voting gain in integer clickcoins.
///
/// Integer currency keeps payoff accounting free of rounding drift. The
/// experimental configuration is stake 84, gross reward 168 (so a met
/// threshold with the right color nets +84), and voting gain 84.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffRule {
    pub stake: i64,
    pub reward: i64,
    pub voting_gain: i64,
}

impl Default for PayoffRule {
    fn default() -> Self {
        PayoffRule {
            stake: 84,
            reward: 168,
            voting_gain: 84,
        }
    }
}

impl PayoffRule {
    pub fn new(stake: i64, reward: i64, voting_gain: i64) -> Result<Self> {
        for (name, v) in [
            ("stake", stake),
            ("reward", reward),
            ("voting_gain", voting_gain),
        ] {
            if v <= 0 {
                return Err(Error::param(name, v as f64, "strictly positive clickcoins"));
            }
        }
        Ok(PayoffRule {
            stake,
            reward,
            voting_gain,
        })
    }
}

/// Per-agent payoff in signed clickcoins.
///
/// Voting pays `+voting_gain` on a correct group decision and
/// `-voting_gain` otherwise, regardless of the individual ballot.
/// Crowdfunding pays nothing to non-contributors and nothing to anyone if
/// the threshold is unmet; contributors in a funded group net
/// `reward - stake` when the backed color is correct and `-stake` when it
/// is not.
pub fn payoff(
    mechanism: Mechanism,
    invested: bool,
    threshold_met: bool,
    group_correct: bool,
    rule: &PayoffRule,
) -> i64 {
    match mechanism {
        Mechanism::Voting => {
            if group_correct {
                rule.voting_gain
            } else {
                -rule.voting_gain
            }
        }
        Mechanism::Crowdfunding => {
            if !invested || !threshold_met {
                0
            } else if group_correct {
                rule.reward - rule.stake
            } else {
                -rule.stake
            }
        }
    }
}

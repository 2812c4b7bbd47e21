//! Seeded Monte Carlo engine for voting and crowdfunding scenarios.
//!
//! Trials are mutually independent: each trial's random stream is seeded by
//! mixing the scenario's master seed with the trial index through a
//! SplitMix64 finalizer, so results are bit-identical for any execution
//! order or degree of parallelism. A trial draws the world state, one
//! signal per agent, and one action per agent, then settles the group
//! outcome and clickcoin payoffs.
//!
//! Voting groups decide by strict majority with even-size ties broken by a
//! fair coin from the trial's own stream. Crowdfunding groups are funded
//! when contributors reach `T = ceil(q * n)` and the outcome counts as
//! correct when funding coincides with the high state or rejection with the
//! low state.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{classify, Classification};
use crate::model::{
    payoff, BehaviorStrategy, GameParams, Mechanism, PayoffRule, Signal, WorldState,
};

/// Agent behavior profile driving the action draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Play the solved symmetric equilibrium strategy (crowdfunding only).
    Equilibrium,
    /// Contribute (or vote the backed color) exactly when the signal is H.
    SignalFollowing,
    /// Opt in with probability `1 - psi` on H and `lambda` on L.
    Mixture { psi: f64, lambda: f64 },
}

impl std::fmt::Display for Behavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Behavior::Equilibrium => write!(f, "equilibrium"),
            Behavior::SignalFollowing => write!(f, "signal_following"),
            Behavior::Mixture { psi, lambda } => write!(f, "mixture(psi={psi}; lambda={lambda})"),
        }
    }
}

/// One simulation cell: a game, a behavior profile, a replication count,
/// and a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    params: GameParams,
    behavior: Behavior,
    replications: u64,
    seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawScenario {
    params: GameParams,
    behavior: Behavior,
    replications: u64,
    seed: u64,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.params, raw.behavior, raw.replications, raw.seed)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            params: s.params,
            behavior: s.behavior,
            replications: s.replications,
            seed: s.seed,
        }
    }
}

impl Scenario {
    pub fn new(
        params: GameParams,
        behavior: Behavior,
        replications: u64,
        seed: u64,
    ) -> Result<Self> {
        if replications < 1 {
            return Err(Error::InvalidScenario(
                "replications must be at least 1".to_string(),
            ));
        }
        match behavior {
            Behavior::Mixture { psi, lambda } => {
                for (name, v) in [("psi", psi), ("lambda", lambda)] {
                    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                        return Err(Error::param(name, v, "0 <= rate <= 1"));
                    }
                }
            }
            Behavior::Equilibrium => {
                if params.mechanism() == Mechanism::Voting {
                    return Err(Error::InvalidScenario(
                        "equilibrium behavior requires the crowdfunding mechanism".to_string(),
                    ));
                }
            }
            Behavior::SignalFollowing => {}
        }
        Ok(Scenario {
            params,
            behavior,
            replications,
            seed,
        })
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    pub fn replications(&self) -> u64 {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: u64) -> Result<Self> {
        if replications < 1 {
            return Err(Error::InvalidScenario(
                "replications must be at least 1".to_string(),
            ));
        }
        self.replications = replications;
        Ok(self)
    }

    /// Per-signal opt-in rates implied by the behavior profile. Resolves
    /// the equilibrium strategy once so trials only draw Bernoulli actions.
    fn resolve(&self) -> Result<ResolvedScenario> {
        let strategy = match self.behavior {
            Behavior::SignalFollowing => BehaviorStrategy::signal_following(),
            Behavior::Mixture { psi, lambda } => BehaviorStrategy::new(1.0 - psi, lambda)?,
            Behavior::Equilibrium => crate::equilibrium::solve_equilibrium(&self.params)?.strategy,
        };
        Ok(ResolvedScenario {
            params: self.params,
            threshold: self.params.threshold_count(),
            rate_h: strategy.rate(Signal::H),
            rate_l: strategy.rate(Signal::L),
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct ResolvedScenario {
    params: GameParams,
    threshold: u32,
    rate_h: f64,
    rate_l: f64,
    seed: u64,
}

/// Mix a master seed with a stream index (SplitMix64 finalizer). Used for
/// per-trial seeding here and per-scenario seeding in sweep drivers.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    state: WorldState,
    contributors: u32,
    threshold_met: bool,
    group_correct: bool,
}

/// Draw one trial. The stream order is fixed: state, then per agent a
/// signal draw immediately followed by an action draw, then (voting ties
/// only) one coin. `sink` observes each agent's signal and action in index
/// order.
fn draw_trial(
    sc: &ResolvedScenario,
    trial_index: u64,
    mut sink: impl FnMut(u32, Signal, bool),
) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sc.seed, trial_index));
    let n = sc.params.n();
    let state = if rng.random::<f64>() < sc.params.mu() {
        WorldState::G
    } else {
        WorldState::B
    };
    let p = sc.params.p();
    let mut contributors = 0u32;
    for agent in 0..n {
        let signal = if rng.random::<f64>() < p {
            Signal::matching(state)
        } else {
            Signal::matching(state).flipped()
        };
        let rate = match signal {
            Signal::H => sc.rate_h,
            Signal::L => sc.rate_l,
        };
        let action = rng.random::<f64>() < rate;
        if action {
            contributors += 1;
        }
        sink(agent, signal, action);
    }

    let threshold_met = contributors >= sc.threshold;
    let group_correct = match sc.params.mechanism() {
        Mechanism::Crowdfunding => (state == WorldState::G) == threshold_met,
        Mechanism::Voting => {
            let yes = u64::from(contributors);
            let no = u64::from(n - contributors);
            let decided_high = if yes != no {
                yes > no
            } else {
                rng.random::<bool>()
            };
            decided_high == (state == WorldState::G)
        }
    };
    TrialOutcome {
        state,
        contributors,
        threshold_met,
        group_correct,
    }
}

/// Fully materialized single trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTrial {
    pub state: WorldState,
    pub signals: Vec<Signal>,
    pub actions: Vec<bool>,
    pub threshold_met: bool,
    pub group_correct: bool,
    pub payoffs: Vec<i64>,
}

/// Run a single trial of the scenario, deriving the trial's seed from the
/// scenario seed and `trial_index`.
pub fn run_trial(scenario: &Scenario, trial_index: u64) -> Result<GroupTrial> {
    let sc = scenario.resolve()?;
    let n = sc.params.n() as usize;
    let mut signals = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    let outcome = draw_trial(&sc, trial_index, |_, signal, action| {
        signals.push(signal);
        actions.push(action);
    });
    let rule = PayoffRule::default();
    let payoffs = actions
        .iter()
        .map(|&invested| {
            payoff(
                sc.params.mechanism(),
                invested,
                outcome.threshold_met,
                outcome.group_correct,
                &rule,
            )
        })
        .collect();
    Ok(GroupTrial {
        state: outcome.state,
        signals,
        actions,
        threshold_met: outcome.threshold_met,
        group_correct: outcome.group_correct,
        payoffs,
    })
}

/// Monte Carlo aggregate of one scenario. Conditional rates with an empty
/// conditioning set are NaN (serialized as null / empty).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationAggregate {
    pub correctness_rate: f64,
    pub correctness_se: f64,
    pub participation_rate: f64,
    pub participation_se: f64,
    /// `P(threshold met | state G)`
    pub p_met_given_g: f64,
    /// `P(threshold unmet | state B)`
    pub p_notmet_given_b: f64,
    /// `P(state G | threshold met)`
    pub p_g_given_met: f64,
    /// Mean clickcoin payoff per agent decision.
    pub mean_payoff: f64,
    pub replications: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    trials: u64,
    g_trials: u64,
    correct: u64,
    met: u64,
    met_and_g: u64,
    notmet_and_b: u64,
    contributions: u64,
    payoff_total: i64,
}

impl Counts {
    fn absorb(&mut self, sc: &ResolvedScenario, o: &TrialOutcome) {
        let rule = PayoffRule::default();
        self.trials += 1;
        self.correct += u64::from(o.group_correct);
        self.contributions += u64::from(o.contributors);
        match (o.state, o.threshold_met) {
            (WorldState::G, true) => {
                self.g_trials += 1;
                self.met += 1;
                self.met_and_g += 1;
            }
            (WorldState::G, false) => {
                self.g_trials += 1;
            }
            (WorldState::B, true) => {
                self.met += 1;
            }
            (WorldState::B, false) => {
                self.notmet_and_b += 1;
            }
        }
        self.payoff_total += trial_payoff_total(sc, o, &rule);
    }

    fn merge(mut self, other: Counts) -> Counts {
        self.trials += other.trials;
        self.g_trials += other.g_trials;
        self.correct += other.correct;
        self.met += other.met;
        self.met_and_g += other.met_and_g;
        self.notmet_and_b += other.notmet_and_b;
        self.contributions += other.contributions;
        self.payoff_total += other.payoff_total;
        self
    }

    fn aggregate(&self, n: u32) -> SimulationAggregate {
        let r = self.trials as f64;
        let agents = r * n as f64;
        let correctness = self.correct as f64 / r;
        let participation = self.contributions as f64 / agents;
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                f64::NAN
            } else {
                num as f64 / den as f64
            }
        };
        SimulationAggregate {
            correctness_rate: correctness,
            correctness_se: (correctness * (1.0 - correctness) / r).sqrt(),
            participation_rate: participation,
            participation_se: (participation * (1.0 - participation) / r).sqrt(),
            p_met_given_g: ratio(self.met_and_g, self.g_trials),
            p_notmet_given_b: ratio(self.notmet_and_b, self.trials - self.g_trials),
            p_g_given_met: ratio(self.met_and_g, self.met),
            mean_payoff: self.payoff_total as f64 / agents,
            replications: self.trials,
        }
    }
}

fn trial_payoff_total(sc: &ResolvedScenario, o: &TrialOutcome, rule: &PayoffRule) -> i64 {
    match sc.params.mechanism() {
        Mechanism::Voting => {
            let gain = if o.group_correct {
                rule.voting_gain
            } else {
                -rule.voting_gain
            };
            gain * sc.params.n() as i64
        }
        Mechanism::Crowdfunding => {
            if !o.threshold_met {
                0
            } else if o.group_correct {
                (rule.reward - rule.stake) * o.contributors as i64
            } else {
                -rule.stake * o.contributors as i64
            }
        }
    }
}

/// Run all replications of a scenario in parallel and reduce to aggregate
/// statistics. Deterministic for a fixed scenario and seed regardless of
/// thread count.
pub fn run_scenario(scenario: &Scenario) -> Result<SimulationAggregate> {
    let sc = scenario.resolve()?;
    let counts = (0..scenario.replications())
        .into_par_iter()
        .fold(Counts::default, |mut acc, i| {
            let outcome = draw_trial(&sc, i, |_, _, _| {});
            acc.absorb(&sc, &outcome);
            acc
        })
        .reduce(Counts::default, Counts::merge);
    Ok(counts.aggregate(sc.params.n()))
}

/// One agent decision, in the decision-log schema.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub trial_id: u64,
    pub agent_id: u32,
    pub mechanism: Mechanism,
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub state: WorldState,
    pub signal: Signal,
    pub action: bool,
    pub classification: Classification,
}

pub const DECISION_LOG_HEADER: [&str; 10] = [
    "trial_id",
    "agent_id",
    "mechanism",
    "n",
    "p",
    "q",
    "state",
    "signal",
    "action",
    "classification",
];

impl DecisionRow {
    fn write_to<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record([
            self.trial_id.to_string(),
            self.agent_id.to_string(),
            self.mechanism.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.q.to_string(),
            match self.state {
                WorldState::G => "G".to_string(),
                WorldState::B => "B".to_string(),
            },
            match self.signal {
                Signal::H => "H".to_string(),
                Signal::L => "L".to_string(),
            },
            if self.action { "y" } else { "n" }.to_string(),
            self.classification.as_str().to_string(),
        ])?;
        Ok(())
    }
}

const LOG_CHUNK_TRIALS: u64 = 8192;

/// Run a list of scenarios, optionally streaming every agent decision to a
/// CSV log. Returns one aggregate per scenario, in input order; trial ids
/// run consecutively across the whole grid.
pub fn run_grid<W: Write>(
    design: &[Scenario],
    mut log: Option<&mut csv::Writer<W>>,
) -> Result<Vec<SimulationAggregate>> {
    if let Some(w) = log.as_deref_mut() {
        w.write_record(DECISION_LOG_HEADER)?;
    }
    let mut aggregates = Vec::with_capacity(design.len());
    let mut trial_offset = 0u64;
    for scenario in design {
        match log.as_deref_mut() {
            None => aggregates.push(run_scenario(scenario)?),
            Some(w) => {
                let sc = scenario.resolve()?;
                let mut counts = Counts::default();
                let mut start = 0u64;
                while start < scenario.replications() {
                    let end = (start + LOG_CHUNK_TRIALS).min(scenario.replications());
                    let chunk: Vec<(Counts, Vec<DecisionRow>)> = (start..end)
                        .into_par_iter()
                        .map(|i| {
                            let mut rows = Vec::with_capacity(sc.params.n() as usize);
                            let outcome = draw_trial(&sc, i, |agent, signal, action| {
                                rows.push((agent, signal, action));
                            });
                            let mut acc = Counts::default();
                            acc.absorb(&sc, &outcome);
                            let rows = rows
                                .into_iter()
                                .map(|(agent, signal, action)| DecisionRow {
                                    trial_id: trial_offset + i,
                                    agent_id: agent,
                                    mechanism: sc.params.mechanism(),
                                    n: sc.params.n(),
                                    p: sc.params.p(),
                                    q: sc.params.q(),
                                    state: outcome.state,
                                    signal,
                                    action,
                                    classification: classify(sc.params.mechanism(), signal, action)
                                        .classification(),
                                })
                                .collect();
                            (acc, rows)
                        })
                        .collect();
                    for (acc, rows) in chunk {
                        counts = counts.merge(acc);
                        for row in rows {
                            row.write_to(w)?;
                        }
                    }
                    start = end;
                }
                aggregates.push(counts.aggregate(sc.params.n()));
            }
        }
        trial_offset += scenario.replications();
    }
    if let Some(w) = &mut log {
        w.flush()?;
    }
    Ok(aggregates)
}

/// The 12-condition factorial design: group sizes 5 and 25, signal
/// accuracies 0.55 and 0.85, and three mechanisms (majority voting,
/// crowdfunding at 50%, crowdfunding at 80%), all at `mu = tau = 0.5`.
///
/// Behaviors are supplied per mechanism family since the equilibrium
/// profile is defined only for crowdfunding. Scenario seeds derive from
/// `master_seed` by position.
pub fn paper_grid(
    replications: u64,
    master_seed: u64,
    crowdfunding_behavior: Behavior,
    voting_behavior: Behavior,
) -> Result<Vec<Scenario>> {
    let mut out = Vec::with_capacity(12);
    let mut index = 0u64;
    for &p in &[0.55, 0.85] {
        for &n in &[5u32, 25] {
            let voting = GameParams::voting(n, p, 0.5, 0.5)?;
            out.push(Scenario::new(
                voting,
                voting_behavior,
                replications,
                derive_seed(master_seed, index),
            )?);
            index += 1;
            for &q in &[0.5, 0.8] {
                let cf = GameParams::crowdfunding(n, p, 0.5, 0.5, q)?;
                out.push(Scenario::new(
                    cf,
                    crowdfunding_behavior,
                    replications,
                    derive_seed(master_seed, index),
                )?);
                index += 1;
            }
        }
    }
    Ok(out)
}

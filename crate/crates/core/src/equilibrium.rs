//! Symmetric Bayes-Nash equilibrium of the crowdfunding game.
//!
//! At a symmetric profile, each other agent contributes with a
//! state-conditional probability given by the [`ContributionKernel`], so
//! completion is a binomial threshold event. Contributing is worth
//!
//! ```text
//! U(s) = sum_w P(w | s) * P(Bin(n-1, c_w) >= T-1) * (v(w) - tau)
//! ```
//!
//! (the agent's own pledge counts toward the threshold), while abstaining
//! is worth exactly zero. The solver classifies the price regime and finds
//! the unique non-trivial symmetric equilibrium: at moderate prices
//! high-signal agents contribute surely while low-signal agents mix, at
//! high prices low-signal agents abstain surely while high-signal agents
//! mix, and at low prices everyone contributes.
//!
//! At most one symmetric non-trivial equilibrium exists, but the
//! indifference function is not known to be monotone, so the root search
//! brackets sign changes on a fixed grid before bisecting.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{classify_price, BehaviorStrategy, GameParams, Mechanism, Regime, Signal};
use crate::numeric::BinomialTail;

/// Grid resolution used to bracket sign changes of the indifference
/// function before bisection.
pub const SCAN_GRID: usize = 1024;

/// Bisection stops once the bracket is narrower than this.
pub const BRACKET_TOLERANCE: f64 = 1e-10;

/// Residual tolerance on the indifference equation at an interior root,
/// in price-normalized utility units.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

const MAX_BISECTIONS: u32 = 200;

/// Per-agent contribution probability conditional on the world state,
/// induced by a symmetric strategy under i.i.d. signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContributionKernel {
    /// `P(contribute | G) = p * sigma_h + (1 - p) * sigma_l`
    pub c_g: f64,
    /// `P(contribute | B) = (1 - p) * sigma_h + p * sigma_l`
    pub c_b: f64,
}

impl ContributionKernel {
    pub fn new(p: f64, strategy: &BehaviorStrategy) -> Self {
        ContributionKernel {
            c_g: p * strategy.sigma_h() + (1.0 - p) * strategy.sigma_l(),
            c_b: (1.0 - p) * strategy.sigma_h() + p * strategy.sigma_l(),
        }
    }
}

/// `P(X >= threshold)` for `X ~ Binomial(trials, prob)`.
///
/// Computed by direct summation of the smaller tail in log space, so there
/// is no catastrophic cancellation for `prob` near 0 or 1.
pub fn binomial_tail(trials: u64, threshold: u64, prob: f64) -> Result<f64> {
    if threshold > trials {
        return Err(Error::ThresholdExceedsTrials { threshold, trials });
    }
    if !prob.is_finite() || !(0.0..=1.0).contains(&prob) {
        return Err(Error::param("prob", prob, "0 <= prob <= 1"));
    }
    Ok(BinomialTail::new(trials).upper(threshold, prob))
}

/// Expected utility of contributing given signal `s` when all other agents
/// play `strategy`, in price-normalized units. Abstaining yields 0.
pub fn contribute_utility(
    params: &GameParams,
    strategy: &BehaviorStrategy,
    signal: Signal,
) -> Result<f64> {
    require_crowdfunding(params)?;
    let tail = BinomialTail::new(params.n() as u64 - 1);
    Ok(utility_with(params, &tail, strategy, signal))
}

fn require_crowdfunding(params: &GameParams) -> Result<()> {
    if params.mechanism() != Mechanism::Crowdfunding {
        return Err(Error::WrongMechanism {
            required: "crowdfunding",
        });
    }
    Ok(())
}

/// Same as [`contribute_utility`] but reusing a prepared tail evaluator;
/// the solver calls this hundreds of times per solve.
fn utility_with(
    params: &GameParams,
    tail: &BinomialTail,
    strategy: &BehaviorStrategy,
    signal: Signal,
) -> f64 {
    let (posterior_l, posterior_h) = params.posteriors();
    let post = match signal {
        Signal::H => posterior_h,
        Signal::L => posterior_l,
    };
    let kernel = ContributionKernel::new(params.p(), strategy);
    let t_minus_own = params.threshold_count() as u64 - 1;
    let met_g = tail.upper(t_minus_own, kernel.c_g);
    let met_b = tail.upper(t_minus_own, kernel.c_b);
    let tau = params.tau();
    post * met_g * (1.0 - tau) + (1.0 - post) * met_b * (0.0 - tau)
}

/// Large-population mixing probability of low-signal agents at moderate
/// prices with threshold ratio `q`: 0 if `q <= 1 - p`, else
/// `(q - (1 - p)) / p`.
pub fn asymptotic_mixing(p: f64, q: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.5 || p >= 1.0 {
        return Err(Error::param("p", p, "0.5 < p < 1"));
    }
    if !q.is_finite() || q <= 0.0 || q > 1.0 {
        return Err(Error::param("q", q, "0 < q <= 1"));
    }
    // q - (1 - p) written as q + p - 1 so the kink at q = 1 - p is exact
    let excess = q + p - 1.0;
    if excess <= 0.0 {
        Ok(0.0)
    } else {
        Ok(excess / p)
    }
}

/// Equilibrium regime labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumRegime {
    /// Low-signal agents opt in with positive probability
    /// (`sigma_h = 1`, `sigma_l = lambda`).
    MutualInsurance,
    /// High-signal agents mix while low-signal agents abstain
    /// (`sigma_l = 0`).
    RiskAversion,
    /// Everyone follows the private signal, `(1, 0)`.
    PureSignalFollowing,
    /// Only the all-opt-out profile survives at these parameters.
    TrivialOnly,
}

/// Solved equilibrium with solver diagnostics.
///
/// `residual` is the absolute value of the contributing agent's
/// indifference utility at the returned strategy; for interior mixing it is
/// bounded by [`RESIDUAL_TOLERANCE`], for corner outcomes it reports the
/// slack of the binding incentive constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub regime: EquilibriumRegime,
    pub strategy: BehaviorStrategy,
    pub residual: f64,
    pub iterations: u32,
    /// Set when the outcome lies on a boundary the regime labels do not
    /// capture exactly (for example the low-price corner `sigma_l = 1`).
    pub note: Option<String>,
}

impl Serialize for EquilibriumResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = 5 + usize::from(self.note.is_some());
        let mut s = serializer.serialize_struct("EquilibriumResult", n)?;
        s.serialize_field("regime", &self.regime)?;
        s.serialize_field("sigma_h", &self.strategy.sigma_h())?;
        s.serialize_field("sigma_l", &self.strategy.sigma_l())?;
        s.serialize_field("residual", &self.residual)?;
        s.serialize_field("iterations", &self.iterations)?;
        if let Some(note) = &self.note {
            s.serialize_field("note", note)?;
        }
        s.end()
    }
}

/// The indifference function the solver roots, as a closure over the free
/// mixing probability.
enum MixingAxis {
    /// Moderate price: `sigma_h = 1`, vary `sigma_l`, root `U(L) = 0`.
    LowSignal,
    /// High price: `sigma_l = 0`, vary `sigma_h`, root `U(H) = 0`.
    HighSignal,
}

struct Indifference<'a> {
    params: &'a GameParams,
    tail: BinomialTail,
    axis: MixingAxis,
}

impl<'a> Indifference<'a> {
    fn new(params: &'a GameParams, axis: MixingAxis) -> Self {
        Indifference {
            params,
            tail: BinomialTail::new(params.n() as u64 - 1),
            axis,
        }
    }

    fn strategy(&self, x: f64) -> BehaviorStrategy {
        let (h, l) = match self.axis {
            MixingAxis::LowSignal => (1.0, x),
            MixingAxis::HighSignal => (x, 0.0),
        };
        BehaviorStrategy::new(h, l).expect("mixing probability in [0, 1]")
    }

    fn eval(&self, x: f64) -> f64 {
        let signal = match self.axis {
            MixingAxis::LowSignal => Signal::L,
            MixingAxis::HighSignal => Signal::H,
        };
        utility_with(self.params, &self.tail, &self.strategy(x), signal)
    }

    /// Sign-change brackets of the indifference function over a uniform
    /// grid on [0, 1]. Grid points where the function is exactly zero count
    /// as a change.
    fn brackets(&self, grid: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut prev_x = 0.0;
        let mut prev_u = self.eval(0.0);
        for i in 1..=grid {
            let x = i as f64 / grid as f64;
            let u = self.eval(x);
            if (prev_u > 0.0 && u <= 0.0) || (prev_u < 0.0 && u >= 0.0) {
                out.push((prev_x, x));
            }
            prev_x = x;
            prev_u = u;
        }
        out
    }

    /// Bisect a bracket down to [`BRACKET_TOLERANCE`]; returns the root,
    /// the residual there, and the iteration count.
    fn bisect(&self, mut lo: f64, mut hi: f64) -> Result<(f64, f64, u32)> {
        let mut u_lo = self.eval(lo);
        let mut iterations = 0;
        while hi - lo > BRACKET_TOLERANCE {
            if iterations >= MAX_BISECTIONS {
                return Err(Error::SolverNoConvergence {
                    bracket_low: lo,
                    bracket_high: hi,
                    iterations,
                });
            }
            let mid = 0.5 * (lo + hi);
            let u_mid = self.eval(mid);
            if (u_lo > 0.0) == (u_mid > 0.0) {
                lo = mid;
                u_lo = u_mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let root = 0.5 * (lo + hi);
        Ok((root, self.eval(root).abs(), iterations))
    }
}

/// Sign-change brackets of the moderate-price low-signal indifference
/// function over a uniform grid.
///
/// Exposed so that uniqueness can be checked directly: at most one bracket
/// should ever appear for a moderate-price game.
pub fn mixing_brackets(params: &GameParams, grid: usize) -> Result<Vec<(f64, f64)>> {
    require_crowdfunding(params)?;
    let regime = classify_price(params);
    if regime.regime != Regime::Moderate {
        return Err(Error::NotModerate {
            tau: params.tau(),
            posterior_l: regime.posterior_l,
            posterior_h: regime.posterior_h,
        });
    }
    Ok(Indifference::new(params, MixingAxis::LowSignal).brackets(grid))
}

/// Solve for the unique symmetric non-trivial Bayes-Nash equilibrium.
///
/// Moderate price: high-signal agents contribute surely; if opting in is
/// already unprofitable for low-signal agents the equilibrium is pure
/// signal following, otherwise their mixing probability is the interior
/// root of the indifference equation. High price: low-signal agents
/// abstain surely and high-signal agents mix analogously; when
/// contributing is unprofitable everywhere only the trivial profile
/// remains. Low price: contributing is worthwhile on either signal and
/// everyone opts in.
pub fn solve_equilibrium(params: &GameParams) -> Result<EquilibriumResult> {
    require_crowdfunding(params)?;
    let regime = classify_price(params);
    match regime.regime {
        Regime::Low => {
            let all_in = BehaviorStrategy::new(1.0, 1.0).unwrap();
            let residual = contribute_utility(params, &all_in, Signal::L)?.abs();
            Ok(EquilibriumResult {
                regime: EquilibriumRegime::MutualInsurance,
                strategy: all_in,
                residual,
                iterations: 0,
                note: Some("low price: sigma_l at the boundary 1".to_string()),
            })
        }
        Regime::Moderate => {
            let f = Indifference::new(params, MixingAxis::LowSignal);
            let at_zero = f.eval(0.0);
            if at_zero <= 0.0 {
                return Ok(EquilibriumResult {
                    regime: EquilibriumRegime::PureSignalFollowing,
                    strategy: BehaviorStrategy::signal_following(),
                    residual: at_zero.abs(),
                    iterations: 0,
                    note: None,
                });
            }
            // U(L) at lambda = 1 equals posterior_l - tau < 0 in this
            // regime, so a sign change must exist.
            let brackets = f.brackets(SCAN_GRID);
            let (lo, hi) = *brackets.first().ok_or(Error::SolverNoConvergence {
                bracket_low: 0.0,
                bracket_high: 1.0,
                iterations: SCAN_GRID as u32,
            })?;
            let (lambda, residual, iterations) = f.bisect(lo, hi)?;
            Ok(EquilibriumResult {
                regime: EquilibriumRegime::MutualInsurance,
                strategy: BehaviorStrategy::new(1.0, lambda).unwrap(),
                residual,
                iterations,
                note: None,
            })
        }
        Regime::High => {
            let f = Indifference::new(params, MixingAxis::HighSignal);
            let brackets = f.brackets(SCAN_GRID);
            if let Some(&(lo, hi)) = brackets.first() {
                let (sigma_h, residual, iterations) = f.bisect(lo, hi)?;
                if sigma_h <= 0.0 {
                    // Root at the origin is the trivial profile itself.
                    return Ok(EquilibriumResult {
                        regime: EquilibriumRegime::TrivialOnly,
                        strategy: BehaviorStrategy::trivial(),
                        residual,
                        iterations,
                        note: None,
                    });
                }
                return Ok(EquilibriumResult {
                    regime: EquilibriumRegime::RiskAversion,
                    strategy: BehaviorStrategy::new(sigma_h, 0.0).unwrap(),
                    residual,
                    iterations,
                    note: None,
                });
            }
            let at_one = f.eval(1.0);
            if at_one > 0.0 {
                // Contributing on H is profitable everywhere along the
                // axis, so signal following is the non-trivial outcome.
                Ok(EquilibriumResult {
                    regime: EquilibriumRegime::PureSignalFollowing,
                    strategy: BehaviorStrategy::signal_following(),
                    residual: at_one.abs(),
                    iterations: 0,
                    note: Some("high price: contributing strictly profitable for H".to_string()),
                })
            } else {
                Ok(EquilibriumResult {
                    regime: EquilibriumRegime::TrivialOnly,
                    strategy: BehaviorStrategy::trivial(),
                    residual: at_one.abs(),
                    iterations: 0,
                    note: None,
                })
            }
        }
    }
}

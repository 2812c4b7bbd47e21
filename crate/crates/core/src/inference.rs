//! Decision classification and the logistic-regression pipeline.
//!
//! Decisions are classified relative to the private signal: acting with the
//! signal is signal-following, a high-signal opt-out is risk aversion, and
//! a low-signal opt-in is mutual insurance. Risk aversion is defined only
//! for high-signal crowdfunding records and mutual insurance only for
//! low-signal ones, so the two outcome models partition the crowdfunding
//! decisions.
//!
//! Fits are maximum likelihood via iteratively reweighted least squares
//! with step halving, which keeps the log-likelihood non-decreasing at
//! every iteration. Reported inference is Wald (normal) on the coefficient
//! scale: 95% intervals `exp(beta +/- 1.96 se)` and two-sided p-values,
//! plus a whole-model likelihood-ratio test against the intercept-only
//! fit. Separation is detected by runaway coefficients and flagged rather
//! than penalized.

use std::io::Read;

use serde::Serialize;

use crate::aggregation::{mixture_rho, MixtureEstimate};
use crate::error::{Error, Result};
use crate::model::{Mechanism, Signal};
use crate::numeric::{chi_squared_sf, normal_sf};

/// Coefficient magnitude beyond which a fit is treated as separated.
const SEPARATION_BOUND: f64 = 15.0;
const MAX_ITERATIONS: u32 = 50;
const SCORE_TOLERANCE: f64 = 1e-8;
const LL_TOLERANCE: f64 = 1e-10;
const WALD_Z: f64 = 1.959963984540054;

/// Outcome flags of one classified decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionFlags {
    /// Acted in accordance with the private signal.
    pub is_true: bool,
    /// High-signal opt-out; defined only for high-signal crowdfunding
    /// records.
    pub ra: Option<bool>,
    /// Low-signal opt-in; defined only for low-signal crowdfunding records.
    pub mut_ins: Option<bool>,
}

/// Human-readable decision label used in the decision logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Follow,
    RiskAversion,
    MutualInsurance,
    /// Off-signal ballot in a voting group.
    Deviate,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Follow => "follow",
            Classification::RiskAversion => "risk_aversion",
            Classification::MutualInsurance => "mutual_insurance",
            Classification::Deviate => "deviate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "follow" => Some(Classification::Follow),
            "risk_aversion" => Some(Classification::RiskAversion),
            "mutual_insurance" => Some(Classification::MutualInsurance),
            "deviate" => Some(Classification::Deviate),
            _ => None,
        }
    }
}

impl DecisionFlags {
    pub fn classification(self) -> Classification {
        match (self.ra, self.mut_ins, self.is_true) {
            (Some(true), _, _) => Classification::RiskAversion,
            (_, Some(true), _) => Classification::MutualInsurance,
            (_, _, true) => Classification::Follow,
            _ => Classification::Deviate,
        }
    }
}

/// Classify a raw decision. `action` is true for an opt-in (crowdfunding)
/// or a ballot for the backed color (voting).
pub fn classify(mechanism: Mechanism, signal: Signal, action: bool) -> DecisionFlags {
    let is_true = (signal == Signal::H) == action;
    let (ra, mut_ins) = match (mechanism, signal) {
        (Mechanism::Crowdfunding, Signal::H) => (Some(!action), None),
        (Mechanism::Crowdfunding, Signal::L) => (None, Some(action)),
        (Mechanism::Voting, _) => (None, None),
    };
    DecisionFlags {
        is_true,
        ra,
        mut_ins,
    }
}

/// One classified decision together with its design covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub mechanism: Mechanism,
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub signal: Signal,
    pub action: bool,
    pub is_true: bool,
    pub ra: Option<bool>,
    pub mut_ins: Option<bool>,
}

impl DecisionRecord {
    pub fn new(mechanism: Mechanism, n: u32, p: f64, q: f64, signal: Signal, action: bool) -> Self {
        let flags = classify(mechanism, signal, action);
        DecisionRecord {
            mechanism,
            n,
            p,
            q,
            signal,
            action,
            is_true: flags.is_true,
            ra: flags.ra,
            mut_ins: flags.mut_ins,
        }
    }
}

/// Read a simulator decision log (CSV) back into classified records.
///
/// The stored classification column is recomputed from the raw fields and
/// any mismatch is rejected, so stale or hand-edited logs fail loudly.
pub fn read_decision_log<R: Read>(reader: R) -> Result<Vec<DecisionRecord>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    {
        let headers = csv_reader.headers()?;
        let expected = crate::simulate::DECISION_LOG_HEADER;
        if headers.len() != expected.len()
            || headers.iter().zip(expected.iter()).any(|(a, &b)| a != b)
        {
            return Err(Error::InvalidLog {
                record: 0,
                detail: format!("unexpected header {:?}", headers),
            });
        }
    }
    let mut out = Vec::new();
    for (idx, row) in csv_reader.records().enumerate() {
        let row = row?;
        let record_no = idx as u64 + 1;
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or(Error::InvalidLog {
                record: record_no,
                detail: format!("missing column {i}"),
            })
        };
        let bad = |detail: String| Error::InvalidLog {
            record: record_no,
            detail,
        };
        let mechanism = match field(2)? {
            "voting" => Mechanism::Voting,
            "crowdfunding" => Mechanism::Crowdfunding,
            other => return Err(bad(format!("unknown mechanism `{other}`"))),
        };
        let n: u32 = field(3)?.parse().map_err(|e| bad(format!("bad n: {e}")))?;
        let p: f64 = field(4)?.parse().map_err(|e| bad(format!("bad p: {e}")))?;
        let q: f64 = field(5)?.parse().map_err(|e| bad(format!("bad q: {e}")))?;
        let signal = match field(7)? {
            "H" => Signal::H,
            "L" => Signal::L,
            other => return Err(bad(format!("unknown signal `{other}`"))),
        };
        let action = match field(8)? {
            "y" => true,
            "n" => false,
            other => return Err(bad(format!("unknown action `{other}`"))),
        };
        let record = DecisionRecord::new(mechanism, n, p, q, signal, action);
        let stored = field(9)?;
        let expected = classify(mechanism, signal, action).classification();
        if Classification::parse(stored) != Some(expected) {
            return Err(bad(format!(
                "classification `{stored}` does not match decision (expected `{}`)",
                expected.as_str()
            )));
        }
        out.push(record);
    }
    Ok(out)
}

/// Binary outcome modeled by [`fit_logistic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeVar {
    IsTrue,
    RiskAversion,
    MutualInsurance,
}

impl OutcomeVar {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeVar::IsTrue => "is_true",
            OutcomeVar::RiskAversion => "ra",
            OutcomeVar::MutualInsurance => "mut_ins",
        }
    }
}

/// Covariates available to the regressions, treatment coded against the
/// baseline condition (voting, accuracy 0.55, size 5, threshold 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorVar {
    Mechanism,
    BallRatio,
    GroupSize,
    Threshold,
}

/// Predictor sets mirroring the three published decision models.
pub fn default_predictors(outcome: OutcomeVar) -> &'static [PredictorVar] {
    match outcome {
        OutcomeVar::IsTrue => &[
            PredictorVar::Mechanism,
            PredictorVar::BallRatio,
            PredictorVar::GroupSize,
        ],
        OutcomeVar::RiskAversion | OutcomeVar::MutualInsurance => &[
            PredictorVar::GroupSize,
            PredictorVar::BallRatio,
            PredictorVar::Threshold,
        ],
    }
}

/// One fitted term of a logistic model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitTerm {
    pub predictor: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

/// Maximum-likelihood logistic fit with Wald inference and a whole-model
/// likelihood-ratio comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub outcome: String,
    pub terms: Vec<FitTerm>,
    pub lr_chi2: f64,
    pub df: u32,
    pub lr_p_value: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: u32,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    /// Log-likelihood after each IRLS iteration; non-decreasing.
    pub ll_trace: Vec<f64>,
    /// Set when the fit was stopped for suspected separation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl LogisticFit {
    pub const CSV_HEADER: &'static str = "predictor,coefficient,odds_ratio,ci_low,ci_high,p_value";

    pub fn csv_rows(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|t| {
                format!(
                    "{},{},{},{},{},{}",
                    t.predictor, t.coefficient, t.odds_ratio, t.ci_low, t.ci_high, t.p_value
                )
            })
            .collect()
    }
}

/// Convert a product of odds ratios to an outcome probability:
/// `OR / (1 + OR)` for the product of the intercept and factor odds.
pub fn predicted_prob(intercept_or: f64, factor_ors: &[f64]) -> Result<f64> {
    let mut total = intercept_or;
    if !intercept_or.is_finite() || intercept_or <= 0.0 {
        return Err(Error::param("intercept_or", intercept_or, "odds ratio > 0"));
    }
    for &or in factor_ors {
        if !or.is_finite() || or <= 0.0 {
            return Err(Error::param("factor_or", or, "odds ratio > 0"));
        }
        total *= or;
    }
    Ok(total / (1.0 + total))
}

/// Two-type mixture summary of a pool of crowdfunding records: the
/// high-signal opt-out rate, low-signal opt-in rate, overall opt-in
/// fraction, and the implied expensive-price share.
pub fn estimate_mixture(records: &[DecisionRecord]) -> Result<MixtureEstimate> {
    let cf: Vec<&DecisionRecord> = records
        .iter()
        .filter(|r| r.mechanism == Mechanism::Crowdfunding)
        .collect();
    if cf.is_empty() {
        return Err(Error::EmptyStratum("no crowdfunding records".to_string()));
    }
    let h: Vec<&&DecisionRecord> = cf.iter().filter(|r| r.signal == Signal::H).collect();
    let l: Vec<&&DecisionRecord> = cf.iter().filter(|r| r.signal == Signal::L).collect();
    if h.is_empty() {
        return Err(Error::EmptyStratum(
            "no high-signal crowdfunding records".to_string(),
        ));
    }
    if l.is_empty() {
        return Err(Error::EmptyStratum(
            "no low-signal crowdfunding records".to_string(),
        ));
    }
    let psi = h.iter().filter(|r| !r.action).count() as f64 / h.len() as f64;
    let lambda = l.iter().filter(|r| r.action).count() as f64 / l.len() as f64;
    let phi = cf.iter().filter(|r| r.action).count() as f64 / cf.len() as f64;
    let rho = mixture_rho(psi, lambda, phi)?;
    Ok(MixtureEstimate {
        psi,
        lambda,
        phi,
        rho,
    })
}

/// Fit a logistic regression of `outcome` on the requested predictors.
///
/// Records where the outcome is undefined are excluded up front, so the
/// risk-aversion model runs on high-signal crowdfunding decisions and the
/// mutual-insurance model on low-signal ones. Each predictor must take
/// exactly two values in the filtered data and is coded 0 at its baseline
/// level.
pub fn fit_logistic(
    records: &[DecisionRecord],
    outcome: OutcomeVar,
    predictors: &[PredictorVar],
) -> Result<LogisticFit> {
    let filtered: Vec<&DecisionRecord> = records
        .iter()
        .filter(|r| outcome_value(r, outcome).is_some())
        .collect();
    if filtered.is_empty() {
        return Err(Error::EmptyStratum(format!(
            "no records define outcome `{}`",
            outcome.name()
        )));
    }
    let y: Vec<f64> = filtered
        .iter()
        .map(|r| f64::from(outcome_value(r, outcome).unwrap()))
        .collect();

    let mut names = vec!["(Intercept)".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; filtered.len()]];
    for &p in predictors {
        let (name, column) = dummy_column(&filtered, p)?;
        names.push(name);
        columns.push(column);
    }

    let rows = filtered.len();
    let cols = columns.len();
    let mut design = vec![0.0; rows * cols];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..rows {
            design[i * cols + j] = col[i];
        }
    }

    let null_ll = intercept_only_ll(&y).map_err(|_| Error::ConstantOutcome {
        outcome: outcome.name().to_string(),
    })?;
    let irls = irls(&design, &y, rows, cols, &names)?;
    let df = (cols - 1) as u32;
    let lr_chi2 = (2.0 * (irls.log_likelihood - null_ll)).max(0.0);
    let lr_p_value = if df == 0 {
        1.0
    } else {
        chi_squared_sf(lr_chi2, df)
    };

    let terms = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let beta = irls.beta[j];
            let se = irls.covariance[j * cols + j].max(0.0).sqrt();
            FitTerm {
                predictor: name.clone(),
                coefficient: beta,
                std_error: se,
                odds_ratio: beta.exp(),
                ci_low: (beta - WALD_Z * se).exp(),
                ci_high: (beta + WALD_Z * se).exp(),
                p_value: if se > 0.0 {
                    2.0 * normal_sf((beta / se).abs())
                } else {
                    f64::NAN
                },
            }
        })
        .collect();

    Ok(LogisticFit {
        outcome: outcome.name().to_string(),
        terms,
        lr_chi2,
        df,
        lr_p_value,
        n_obs: rows,
        converged: irls.converged,
        iterations: irls.iterations,
        log_likelihood: irls.log_likelihood,
        null_log_likelihood: null_ll,
        ll_trace: irls.ll_trace,
        diagnostic: irls.diagnostic,
    })
}

fn outcome_value(record: &DecisionRecord, outcome: OutcomeVar) -> Option<bool> {
    match outcome {
        OutcomeVar::IsTrue => Some(record.is_true),
        OutcomeVar::RiskAversion => record.ra,
        OutcomeVar::MutualInsurance => record.mut_ins,
    }
}

/// Build a treatment-coded dummy column for one predictor. The baseline
/// levels are voting, accuracy 0.55, group size 5, and threshold 0.5; if a
/// data set does not contain the baseline, the smaller level is the
/// reference.
fn dummy_column(records: &[&DecisionRecord], var: PredictorVar) -> Result<(String, Vec<f64>)> {
    let raw: Vec<f64> = records
        .iter()
        .map(|r| match var {
            PredictorVar::Mechanism => match r.mechanism {
                Mechanism::Voting => 0.0,
                Mechanism::Crowdfunding => 1.0,
            },
            PredictorVar::BallRatio => r.p,
            PredictorVar::GroupSize => f64::from(r.n),
            PredictorVar::Threshold => r.q,
        })
        .collect();
    let mut levels: Vec<f64> = raw.clone();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let var_label = match var {
        PredictorVar::Mechanism => "mechanism",
        PredictorVar::BallRatio => "ball_ratio",
        PredictorVar::GroupSize => "group_size",
        PredictorVar::Threshold => "threshold",
    };
    if levels.len() != 2 {
        return Err(Error::BadPredictorLevels {
            predictor: var_label.to_string(),
            levels: levels.len(),
        });
    }
    let preferred_reference = match var {
        PredictorVar::Mechanism => 0.0,
        PredictorVar::BallRatio => 0.55,
        PredictorVar::GroupSize => 5.0,
        PredictorVar::Threshold => 0.5,
    };
    let reference = if levels.contains(&preferred_reference) {
        preferred_reference
    } else {
        levels[0]
    };
    let treatment = if reference == levels[0] {
        levels[1]
    } else {
        levels[0]
    };
    let name = match var {
        PredictorVar::Mechanism => "crowdfunding".to_string(),
        PredictorVar::BallRatio => format!("ball_ratio_{:.0}", treatment * 100.0),
        PredictorVar::GroupSize => format!("group_size_{:.0}", treatment),
        PredictorVar::Threshold => format!("threshold_{:.0}", treatment * 100.0),
    };
    let column = raw.iter().map(|&v| f64::from(v == treatment)).collect();
    Ok((name, column))
}

struct IrlsResult {
    beta: Vec<f64>,
    covariance: Vec<f64>,
    log_likelihood: f64,
    ll_trace: Vec<f64>,
    iterations: u32,
    converged: bool,
    diagnostic: Option<String>,
}

fn log_likelihood(design: &[f64], y: &[f64], rows: usize, cols: usize, beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for i in 0..rows {
        let eta: f64 = (0..cols).map(|j| design[i * cols + j] * beta[j]).sum();
        // y ln mu + (1 - y) ln(1 - mu), written to avoid overflow
        let softplus = |x: f64| x.max(0.0) + (-x.abs()).exp().ln_1p();
        ll += if y[i] > 0.5 {
            -softplus(-eta)
        } else {
            -softplus(eta)
        };
    }
    ll
}

fn intercept_only_ll(y: &[f64]) -> Result<f64> {
    let m = y.len() as f64;
    let mean = y.iter().sum::<f64>() / m;
    if mean <= 0.0 || mean >= 1.0 {
        return Err(Error::EmptyStratum(
            "outcome takes a single value; logistic likelihood is degenerate".to_string(),
        ));
    }
    Ok(m * (mean * mean.ln() + (1.0 - mean) * (1.0 - mean).ln()))
}

fn irls(
    design: &[f64],
    y: &[f64],
    rows: usize,
    cols: usize,
    names: &[String],
) -> Result<IrlsResult> {
    let mut beta = vec![0.0; cols];
    let mut ll = log_likelihood(design, y, rows, cols, &beta);
    let mut ll_trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // weighted normal equations: (X^T W X) beta_new = X^T W z
        let mut xtwx = vec![0.0; cols * cols];
        let mut xtwz = vec![0.0; cols];
        let mut score = vec![0.0; cols];
        for i in 0..rows {
            let xi = &design[i * cols..(i + 1) * cols];
            let eta: f64 = (0..cols).map(|j| xi[j] * beta[j]).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = (mu * (1.0 - mu)).max(1e-10);
            let z = eta + (y[i] - mu) / w;
            for j in 0..cols {
                score[j] += xi[j] * (y[i] - mu);
                xtwz[j] += xi[j] * w * z;
                for k in j..cols {
                    xtwx[j * cols + k] += xi[j] * w * xi[k];
                }
            }
        }
        for j in 0..cols {
            for k in 0..j {
                xtwx[j * cols + k] = xtwx[k * cols + j];
            }
        }

        let chol = cholesky(&xtwx, cols, names)?;
        let proposal = chol.solve(&xtwz);

        // step-halving keeps the likelihood monotone
        let direction: Vec<f64> = proposal.iter().zip(&beta).map(|(p, b)| p - b).collect();
        let mut step = 1.0;
        let mut candidate;
        let mut ll_new;
        loop {
            candidate = beta
                .iter()
                .zip(&direction)
                .map(|(b, d)| b + step * d)
                .collect::<Vec<f64>>();
            ll_new = log_likelihood(design, y, rows, cols, &candidate);
            if ll_new >= ll - 1e-12 || step < 1e-8 {
                break;
            }
            step *= 0.5;
        }
        beta = candidate;
        ll_trace.push(ll_new);
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let delta_ll = (ll_new - ll).abs();
        ll = ll_new;
        if max_score < SCORE_TOLERANCE || delta_ll < LL_TOLERANCE {
            converged = true;
            break;
        }
    }

    // covariance from the final information matrix
    let mut info = vec![0.0; cols * cols];
    for i in 0..rows {
        let xi = &design[i * cols..(i + 1) * cols];
        let eta: f64 = (0..cols).map(|j| xi[j] * beta[j]).sum();
        let mu = 1.0 / (1.0 + (-eta).exp());
        let w = (mu * (1.0 - mu)).max(1e-10);
        for j in 0..cols {
            for k in j..cols {
                info[j * cols + k] += xi[j] * w * xi[k];
            }
        }
    }
    for j in 0..cols {
        for k in 0..j {
            info[j * cols + k] = info[k * cols + j];
        }
    }
    let covariance = cholesky(&info, cols, names)?.inverse();

    let mut diagnostic = None;
    if let Some(j) = beta.iter().position(|b| b.abs() > SEPARATION_BOUND) {
        converged = false;
        diagnostic = Some(format!(
            "suspected separation: |coefficient| of `{}` exceeds {SEPARATION_BOUND}",
            names[j]
        ));
    }

    Ok(IrlsResult {
        beta,
        covariance,
        log_likelihood: ll,
        ll_trace,
        iterations,
        converged,
        diagnostic,
    })
}

/// Dense lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, with collinearity detection.
struct Cholesky {
    l: Vec<f64>,
    k: usize,
}

fn cholesky(a: &[f64], k: usize, names: &[String]) -> Result<Cholesky> {
    let mut l = vec![0.0; k * k];
    let scale: f64 = (0..k).map(|j| a[j * k + j]).fold(0.0, f64::max).max(1.0);
    for j in 0..k {
        let mut d = a[j * k + j];
        for t in 0..j {
            d -= l[j * k + t] * l[j * k + t];
        }
        if d <= 1e-12 * scale {
            return Err(Error::RankDeficient {
                column: names
                    .get(j)
                    .cloned()
                    .unwrap_or_else(|| format!("column {j}")),
            });
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in (j + 1)..k {
            let mut v = a[i * k + j];
            for t in 0..j {
                v -= l[i * k + t] * l[j * k + t];
            }
            l[i * k + j] = v / d;
        }
    }
    Ok(Cholesky { l, k })
}

impl Cholesky {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut x = b.to_vec();
        for i in 0..k {
            for j in 0..i {
                x[i] -= self.l[i * k + j] * x[j];
            }
            x[i] /= self.l[i * k + i];
        }
        for i in (0..k).rev() {
            for j in (i + 1)..k {
                x[i] -= self.l[j * k + i] * x[j];
            }
            x[i] /= self.l[i * k + i];
        }
        x
    }

    fn inverse(&self) -> Vec<f64> {
        let k = self.k;
        let mut inv = vec![0.0; k * k];
        for col in 0..k {
            let mut e = vec![0.0; k];
            e[col] = 1.0;
            let x = self.solve(&e);
            for row in 0..k {
                inv[row * k + col] = x[row];
            }
        }
        inv
    }
}

//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use crowdlab_core::aggregation::{
    conditional_optin, crowdfunding_correctness, mixture_rho, voting_correctness,
};
use crowdlab_core::equilibrium::solve_equilibrium;
use crowdlab_core::inference::{
    default_predictors, fit_logistic, predicted_prob, read_decision_log, LogisticFit, OutcomeVar,
    PredictorVar,
};
use crowdlab_core::model::{GameParams, Mechanism};
use crowdlab_core::simulate::{
    paper_grid, run_grid, run_trial, Behavior, Scenario, SimulationAggregate,
};

use crate::config::{
    load_grid, output_path, parse_behavior, versioned_json, voting_counterpart, CliError, CliResult,
};
use crate::reference::{self, REGRESSION_TABLES};

const DEFAULT_SEED: u64 = 42;
const DEFAULT_REPLICATIONS: u64 = 100_000;

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Population size
    #[arg(long)]
    pub n: u32,
    /// Signal accuracy, in (0.5, 1)
    #[arg(long)]
    pub p: f64,
    /// Prior probability of the high state, in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Price, in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Threshold ratio, in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
}

pub fn cmd_solve(args: &SolveArgs, out: &mut impl Write) -> CliResult<()> {
    let params = GameParams::crowdfunding(args.n, args.p, args.mu, args.tau, args.q)?;
    let result = solve_equilibrium(&params)?;
    let json = versioned_json(&result)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&json).unwrap())?;
    Ok(())
}

/// One replication check: a recomputed quantity against its published value.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationCheck {
    pub name: &'static str,
    pub source: &'static str,
    pub computed: f64,
    pub published: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(
    name: &'static str,
    source: &'static str,
    computed: f64,
    published: f64,
    tolerance: f64,
) -> ReplicationCheck {
    ReplicationCheck {
        name,
        source,
        computed,
        published,
        tolerance,
        pass: (computed - published).abs() <= tolerance,
    }
}

/// Recompute every derivable published quantity: the baseline mixture
/// calculus, the four voting benchmarks, the odds-ratio-to-probability
/// transforms quoted alongside the regression tables, and the internal
/// coefficient/odds-ratio consistency of those tables.
pub fn replication_report() -> CliResult<Vec<ReplicationCheck>> {
    let b = reference::BASELINE;
    let mut checks = Vec::new();

    let rho = mixture_rho(b.psi, b.lambda, b.phi)?;
    checks.push(check("rho", b.source, rho, b.rho, 5e-4));

    // conditional opt-in rates evaluated at the published rho
    let optin = conditional_optin(b.rho, b.psi, b.lambda, 0.55)?;
    checks.push(check("phi_H", b.source, optin.phi_h, b.phi_h, 1e-3));
    checks.push(check("phi_L", b.source, optin.phi_l, b.phi_l, 1e-3));

    let theta_cf = crowdfunding_correctness(b.phi_h, b.phi_l, 5, 3, 0.5)?;
    checks.push(check("theta_cf", b.source, theta_cf, b.theta_cf, 2e-3));

    checks.push(check(
        "theta_voting_55",
        b.source,
        voting_correctness(0.55, 1.0, 5)?,
        b.theta_voting_55,
        1e-3,
    ));
    checks.push(check(
        "theta_voting_85",
        b.source,
        voting_correctness(0.85, 1.0, 5)?,
        b.theta_voting_85,
        1e-3,
    ));
    checks.push(check(
        "theta_voting_55_observed",
        b.source,
        voting_correctness(0.55, b.follow_rate, 5)?,
        b.theta_voting_55_observed,
        2e-3,
    ));
    checks.push(check(
        "theta_voting_85_observed",
        b.source,
        voting_correctness(0.85, b.follow_rate, 5)?,
        b.theta_voting_85_observed,
        2e-3,
    ));

    // odds-ratio -> probability transforms quoted in the analysis text
    let t1 = reference::IS_TRUE_MODEL.terms;
    checks.push(check(
        "p_follow_voting",
        "table 1",
        predicted_prob(t1[0].odds_ratio, &[])?,
        0.874,
        1e-3,
    ));
    checks.push(check(
        "p_follow_crowdfunding",
        "table 1",
        predicted_prob(t1[0].odds_ratio, &[t1[1].odds_ratio])?,
        0.490,
        5e-3,
    ));
    let t2 = reference::RISK_AVERSION_MODEL.terms;
    checks.push(check(
        "p_ra_baseline",
        "table 2",
        predicted_prob(t2[0].odds_ratio, &[])?,
        0.034,
        1e-3,
    ));
    checks.push(check(
        "p_ra_high_accuracy",
        "table 2",
        predicted_prob(t2[0].odds_ratio, &[t2[2].odds_ratio])?,
        0.015,
        1e-3,
    ));
    checks.push(check(
        "p_ra_high_threshold",
        "table 2",
        predicted_prob(t2[0].odds_ratio, &[t2[3].odds_ratio])?,
        0.102,
        1e-3,
    ));
    let t3 = reference::MUTUAL_INSURANCE_MODEL.terms;
    checks.push(check(
        "p_mutins_baseline",
        "table 3",
        predicted_prob(t3[0].odds_ratio, &[])?,
        0.871,
        1e-3,
    ));
    checks.push(check(
        "p_mutins_high_accuracy",
        "table 3",
        predicted_prob(t3[0].odds_ratio, &[t3[2].odds_ratio])?,
        0.944,
        1e-3,
    ));

    // published odds ratios are exp of published coefficients up to
    // table rounding (checked as max relative deviation per table)
    for table in REGRESSION_TABLES {
        let worst = table
            .terms
            .iter()
            .map(|t| (t.coefficient.exp() - t.odds_ratio).abs() / t.odds_ratio)
            .fold(0.0, f64::max);
        let name: &'static str = match table.outcome {
            "is_true" => "or_exp_consistency_is_true",
            "ra" => "or_exp_consistency_ra",
            _ => "or_exp_consistency_mut_ins",
        };
        checks.push(check(name, table.source, worst, 0.0, 5e-3));
    }

    Ok(checks)
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// Emit the report as JSON instead of text lines
    #[arg(long)]
    pub json: bool,
}

pub fn cmd_replicate(args: &ReplicateArgs, out: &mut impl Write) -> CliResult<()> {
    let checks = replication_report()?;
    if args.json {
        #[derive(Serialize)]
        struct Report<'a> {
            checks: &'a [ReplicationCheck],
            passed: usize,
            total: usize,
        }
        let passed = checks.iter().filter(|c| c.pass).count();
        let json = versioned_json(&Report {
            checks: &checks,
            passed,
            total: checks.len(),
        })?;
        writeln!(out, "{}", serde_json::to_string_pretty(&json).unwrap())?;
    } else {
        for c in &checks {
            writeln!(
                out,
                "[{}] {:<28} computed {:>9.6}  published {:>7}  (tol {}, {})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.computed,
                c.published,
                c.tolerance,
                c.source,
            )?;
        }
        let passed = checks.iter().filter(|c| c.pass).count();
        writeln!(out, "{passed}/{} checks passed", checks.len())?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::ReplicationFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// voting | crowdfunding
    #[arg(long, default_value = "crowdfunding")]
    pub mechanism: String,
    /// Threshold ratio (crowdfunding only)
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// equilibrium | signal-following | mixture:PSI,LAMBDA
    /// (defaults to equilibrium for crowdfunding, signal-following for voting)
    #[arg(long)]
    pub behavior: Option<String>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the per-agent decision log to this CSV file
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Write the aggregate JSON here as well as to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn build_scenario(args: &SimulateArgs) -> CliResult<Scenario> {
    let params = match args.mechanism.as_str() {
        "crowdfunding" => GameParams::crowdfunding(args.n, args.p, args.mu, args.tau, args.q)?,
        "voting" => GameParams::voting(args.n, args.p, args.mu, args.tau)?,
        other => {
            return Err(CliError::Invalid(format!(
                "unknown mechanism `{other}`; expected `voting` or `crowdfunding`"
            )))
        }
    };
    let behavior = match &args.behavior {
        Some(s) => parse_behavior(s)?,
        None => match params.mechanism() {
            Mechanism::Crowdfunding => Behavior::Equilibrium,
            Mechanism::Voting => Behavior::SignalFollowing,
        },
    };
    Ok(Scenario::new(params, behavior, args.reps, args.seed)?)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut impl Write) -> CliResult<()> {
    let scenario = build_scenario(args)?;

    if scenario.replications() == 1 {
        // single-trial dump for inspection
        let trial = run_trial(&scenario, 0)?;
        let json = versioned_json(&trial)?;
        let text = serde_json::to_string_pretty(&json).unwrap();
        writeln!(out, "{text}")?;
        if let Some(path) = &args.out {
            fs::write(path, format!("{text}\n"))?;
        }
        return Ok(());
    }

    let aggregates = match &args.log {
        Some(path) => {
            let mut writer = csv::Writer::from_path(path)?;
            run_grid(&[scenario], Some(&mut writer))?
        }
        None => run_grid::<Vec<u8>>(&[scenario], None)?,
    };

    #[derive(Serialize)]
    struct SimulateOutput {
        scenario: Scenario,
        aggregate: SimulationAggregate,
    }
    let json = versioned_json(&SimulateOutput {
        scenario,
        aggregate: aggregates[0],
    })?;
    let text = serde_json::to_string_pretty(&json).unwrap();
    writeln!(out, "{text}")?;
    if let Some(path) = &args.out {
        fs::write(path, format!("{text}\n"))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Built-in design name; `paper-grid` is the 12-condition factorial
    #[arg(long, conflicts_with = "config")]
    pub design: Option<String>,
    /// Scenario grid JSON (array of scenarios, or a versioned envelope)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replications per scenario (paper-grid; overrides config when set)
    #[arg(long)]
    pub reps: Option<u64>,
    /// Master seed (paper-grid; overrides config when set)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Crowdfunding behavior for built-in designs; voting cells fall back
    /// from equilibrium to signal following
    #[arg(long, default_value = "equilibrium")]
    pub behavior: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// csv | json | both
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Also write the per-agent decision log (decisions.csv)
    #[arg(long)]
    pub log: bool,
}

pub const AGGREGATE_CSV_HEADER: &str = "scenario_id,mechanism,n,p,mu,tau,q,t,behavior,seed,\
correctness_rate,correctness_se,participation_rate,participation_se,\
p_met_given_g,p_notmet_given_b,p_g_given_met,mean_payoff,replications";

fn csv_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn aggregate_csv(scenarios: &[Scenario], aggregates: &[SimulationAggregate]) -> String {
    let mut text = String::from(AGGREGATE_CSV_HEADER);
    text.push('\n');
    for (id, (s, a)) in scenarios.iter().zip(aggregates).enumerate() {
        let p = s.params();
        text.push_str(&format!(
            "{id},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            p.mechanism(),
            p.n(),
            p.p(),
            p.mu(),
            p.tau(),
            p.q(),
            p.threshold_count(),
            s.behavior(),
            s.seed(),
            csv_cell(a.correctness_rate),
            csv_cell(a.correctness_se),
            csv_cell(a.participation_rate),
            csv_cell(a.participation_se),
            csv_cell(a.p_met_given_g),
            csv_cell(a.p_notmet_given_b),
            csv_cell(a.p_g_given_met),
            csv_cell(a.mean_payoff),
            a.replications,
        ));
    }
    text
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut impl Write) -> CliResult<()> {
    let mut scenarios: Vec<Scenario> = match (&args.design, &args.config) {
        (Some(name), None) => {
            if name != "paper-grid" {
                return Err(CliError::Invalid(format!(
                    "unknown design `{name}`; available: paper-grid"
                )));
            }
            let behavior = parse_behavior(&args.behavior)?;
            paper_grid(
                args.reps.unwrap_or(DEFAULT_REPLICATIONS),
                args.seed.unwrap_or(DEFAULT_SEED),
                behavior,
                voting_counterpart(behavior),
            )?
        }
        (None, Some(path)) => load_grid(path)?,
        _ => {
            return Err(CliError::Invalid(
                "exactly one of --design or --config is required".to_string(),
            ))
        }
    };
    if args.config.is_some() {
        if let Some(reps) = args.reps {
            for s in &mut scenarios {
                *s = s.with_replications(reps)?;
            }
        }
        if let Some(seed) = args.seed {
            for (i, s) in scenarios.iter_mut().enumerate() {
                *s = s.with_seed(crowdlab_core::simulate::derive_seed(seed, i as u64));
            }
        }
    }

    let aggregates = if args.log {
        let log_path = output_path(&args.out_dir, "decisions.csv")?;
        let mut writer = csv::Writer::from_path(&log_path)?;
        let aggregates = run_grid(&scenarios, Some(&mut writer))?;
        writeln!(out, "wrote {}", log_path.display())?;
        aggregates
    } else {
        run_grid::<Vec<u8>>(&scenarios, None)?
    };

    let write_csv = matches!(args.format.as_str(), "csv" | "both");
    let write_json = matches!(args.format.as_str(), "json" | "both");
    if !write_csv && !write_json {
        return Err(CliError::Invalid(format!(
            "unknown format `{}`; expected csv, json, or both",
            args.format
        )));
    }
    if write_csv {
        let path = output_path(&args.out_dir, "aggregates.csv")?;
        fs::write(&path, aggregate_csv(&scenarios, &aggregates))?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if write_json {
        #[derive(Serialize)]
        struct SweepRow {
            scenario_id: usize,
            scenario: Scenario,
            aggregate: SimulationAggregate,
        }
        #[derive(Serialize)]
        struct SweepOutput {
            results: Vec<SweepRow>,
        }
        let rows = scenarios
            .iter()
            .zip(&aggregates)
            .enumerate()
            .map(|(scenario_id, (s, a))| SweepRow {
                scenario_id,
                scenario: *s,
                aggregate: *a,
            })
            .collect();
        let json = versioned_json(&SweepOutput { results: rows })?;
        let path = output_path(&args.out_dir, "aggregates.json")?;
        fs::write(&path, serde_json::to_string_pretty(&json).unwrap())?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Decision-log CSV produced by `simulate --log` or `sweep --log`
    #[arg(long)]
    pub log: PathBuf,
    /// is-true | ra | mut-ins
    #[arg(long)]
    pub model: String,
    /// Comma-separated predictors (mechanism, ball-ratio, group-size,
    /// threshold); defaults to the published model for the outcome
    #[arg(long)]
    pub predictors: Option<String>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Write the fit summary here as well as to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_outcome(s: &str) -> CliResult<OutcomeVar> {
    match s {
        "is-true" | "is_true" | "istrue" => Ok(OutcomeVar::IsTrue),
        "ra" | "risk-aversion" => Ok(OutcomeVar::RiskAversion),
        "mut-ins" | "mutins" | "mutual-insurance" => Ok(OutcomeVar::MutualInsurance),
        other => Err(CliError::Invalid(format!(
            "unknown model `{other}`; expected is-true, ra, or mut-ins"
        ))),
    }
}

fn parse_predictors(s: &str) -> CliResult<Vec<PredictorVar>> {
    s.split(',')
        .map(|token| match token.trim() {
            "mechanism" => Ok(PredictorVar::Mechanism),
            "ball-ratio" | "ball_ratio" => Ok(PredictorVar::BallRatio),
            "group-size" | "group_size" => Ok(PredictorVar::GroupSize),
            "threshold" => Ok(PredictorVar::Threshold),
            other => Err(CliError::Invalid(format!(
                "unknown predictor `{other}`; expected mechanism, ball-ratio, group-size, or threshold"
            ))),
        })
        .collect()
}

fn fit_text(fit: &LogisticFit, format: &str) -> CliResult<String> {
    match format {
        "csv" => {
            let mut text = String::from(LogisticFit::CSV_HEADER);
            text.push('\n');
            for row in fit.csv_rows() {
                text.push_str(&row);
                text.push('\n');
            }
            Ok(text)
        }
        "json" => {
            let json = versioned_json(fit)?;
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&json).unwrap()
            ))
        }
        other => Err(CliError::Invalid(format!(
            "unknown format `{other}`; expected csv or json"
        ))),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut impl Write) -> CliResult<()> {
    let outcome = parse_outcome(&args.model)?;
    let predictors = match &args.predictors {
        Some(s) => parse_predictors(s)?,
        None => default_predictors(outcome).to_vec(),
    };
    let file = fs::File::open(&args.log)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", args.log.display())))?;
    let records = read_decision_log(file)?;
    let fit = fit_logistic(&records, outcome, &predictors)?;

    let text = fit_text(&fit, &args.format)?;
    write!(out, "{text}")?;
    if !fit.converged {
        writeln!(
            out,
            "# warning: fit did not converge{}",
            fit.diagnostic
                .as_deref()
                .map(|d| format!(" ({d})"))
                .unwrap_or_default()
        )?;
    }
    if args.format == "csv" {
        writeln!(
            out,
            "# n_obs={} lr_chi2={:.4} df={} lr_p={:.4e} log_likelihood={:.4}",
            fit.n_obs, fit.lr_chi2, fit.df, fit.lr_p_value, fit.log_likelihood
        )?;
    }
    if let Some(path) = &args.out {
        fs::write(path, &text)?;
    }
    Ok(())
}
